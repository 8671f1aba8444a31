//! Print the adaptive finite element history for the three-dimensional brick wall.

use heatframe::component::{connect_system, instantiate_components};
use heatframe::fem::{solve_wall_fe, AdaptiveOptions};
use heatframe::genwall::compute_constants;
use heatframe::parser::{parse_statement, Commonsense};
use heatframe::template::{assemble_template, classify_problem, ProblemClass, BI_THRESHOLD};

fn main() {
    let frame = parse_statement(heatframe::corpus::WALL_3D, "wall-3d", &Commonsense::bundled()).expect("fixture parses");
    let t = assemble_template(&frame).expect("fixture is well posed");
    let ProblemClass::GeneralizedWall(info) = classify_problem(&t, BI_THRESHOLD).expect("fixture classifies") else {
        panic!("fixture is not a generalized wall");
    };
    let s = connect_system(&t, instantiate_components(&t).expect("components")).expect("system");
    let constants = compute_constants(&t, &info).expect("constants");
    let start = std::time::Instant::now();
    let sol = solve_wall_fe(&t, &s, &info, &constants, &AdaptiveOptions::default()).expect("adaptive solve");
    println!("{:>8} {:>12} {:>10} {:>10}", "dofs", "H", "QoI est", "rel energy");
    for r in &sol.log {
        println!("{:>8} {:>12.9} {:>10.3e} {:>10.3e}", r.dofs, r.qoi, r.qoi_estimate, r.energy_estimate / r.energy_norm);
    }
    println!("{:.2?}", start.elapsed());
}
