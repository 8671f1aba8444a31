use super::*;
use crate::component::{connect_system, instantiate_components};
use crate::corpus;
use crate::genwall::{compute_constants, solve_bounds};
use crate::parser::{parse_statement, Commonsense};
use crate::template::{assemble_template, classify_problem, ProblemClass, BI_THRESHOLD};
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_4;

struct Wall {
    t: PdeTemplate,
    s: System,
    info: GeneralizedWallInfo,
    c: HConstants,
}

fn wall(src: &str) -> Wall {
    let t = assemble_template(&parse_statement(src, "t", &Commonsense::bundled()).unwrap()).unwrap();
    let ProblemClass::GeneralizedWall(info) = classify_problem(&t, BI_THRESHOLD).unwrap() else { panic!() };
    let s = connect_system(&t, instantiate_components(&t).unwrap()).unwrap();
    let c = compute_constants(&t, &info).unwrap();
    Wall { t, s, info, c }
}

fn unit_square(n: usize) -> TriMesh {
    TriMesh::from_rectangles(&[Rect { lo: [0.0, 0.0], hi: [1.0, 1.0], material: 0 }], n, |_, _| EdgeTag::RobinLeft)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn unit_square_single_cell() {
    let m = unit_square(1);
    assert_eq!((m.vertices.len(), m.triangles.len(), m.boundary.len()), (4, 2, 4));
    assert!(m.check_conforming().is_ok());
    assert!((m.total_area() - 1.0).abs() < 1e-15);
}

#[test]
fn wall3d_mesh_tiles_union() {
    let w = wall(corpus::WALL_3D);
    for n in [1, 3] {
        let m = mesh_brick_union(&w.t, &w.s, &w.info, n);
        m.check_conforming().unwrap();
        assert!((m.total_area() - 4.0 * 0.05 * 0.1).abs() < 1e-14);
        let mut mats = m.material.clone();
        mats.dedup();
        mats.sort();
        mats.dedup();
        assert_eq!(mats, vec![0, 1, 2, 3]);
        let len = |tag| m.boundary.iter().filter(|e| e.tag == tag).map(|e| edge_length(&m, e)).sum::<f64>();
        assert!((len(EdgeTag::RobinLeft) - 0.1).abs() < 1e-14);
        assert!((len(EdgeTag::RobinRight) - 0.3).abs() < 1e-14);
    }
}

#[test]
fn stiffness_matches_cotangent_formula() {
    let m = TriMesh {
        vertices: vec![[0.0, 0.0], [2.0, 0.3], [0.4, 1.1]],
        triangles: vec![[0, 1, 2]],
        material: vec![0],
        boundary: vec![],
    };
    let model = FeModel { conductivity: vec![1.0], robin: BTreeMap::new(), source: None };
    let (k, _) = assemble_fe(&m, &model).unwrap();
    let p = m.vertices.clone();
    let cot = |o: usize| {
        let (u, w) = (p[(o + 1) % 3], p[(o + 2) % 3]);
        let (d1, d2) = ([u[0] - p[o][0], u[1] - p[o][1]], [w[0] - p[o][0], w[1] - p[o][1]]);
        (d1[0] * d2[0] + d1[1] * d2[1]) / (d1[0] * d2[1] - d1[1] * d2[0]).abs()
    };
    let dense = |i: usize, j: usize| (k.row_ptr[i]..k.row_ptr[i + 1]).find(|&q| k.col[q] == j).map_or(0.0, |q| k.val[q]);
    for (i, j, o) in [(0, 1, 2), (1, 2, 0), (0, 2, 1)] {
        assert!((dense(i, j) + 0.5 * cot(o)).abs() < 1e-14);
    }
    // Constant fields lie in the kernel without Robin terms.
    assert!(k.mul(&[3.0; 3]).iter().all(|v| v.abs() < 1e-13));
}

#[test]
fn strip_reproduces_series_resistance() {
    let src = corpus::brick_wall(&[[0, 1, 0, 1], [1, 2, 0, 1], [2, 3, 0, 1]]);
    let w = wall(&src);
    let model = wall_model(&w.s, &w.c);
    let mesh = mesh_brick_union(&w.t, &w.s, &w.info, 2);
    let (u, _, _) = solve_on(&mesh, &model, 1e-13).unwrap();
    let depth = wall_depth(&w.s);
    let h = w.c.h_from_rate(depth * robin_rate(&mesh, &model, &u, EdgeTag::RobinLeft));
    let r = 10.0 + 3.0 * 10.0 + 1.0;
    assert!(rel(h, 1.0 / (r * 0.5 * 0.1)) < 1e-10);
    let bounds = solve_bounds(&w.t, &w.s, &w.info).unwrap();
    assert!(rel(h, bounds.h_ub) < 1e-10 && rel(h, bounds.h_lb) < 1e-10);

    let qoi = |m: &TriMesh, u: &[f64]| w.c.h_from_rate(depth * robin_rate(m, &model, u, EdgeTag::RobinLeft));
    let est = estimate_error_two_level(&mesh, &model, &u, &qoi, 1e-13).unwrap();
    assert!(est.energy <= 1e-9 && est.qoi <= 1e-9, "{est:?}");
    let sol = run_adaptive(mesh, &model, &qoi, &AdaptiveOptions { solver_tol: 1e-13, ..AdaptiveOptions::default() }).unwrap();
    assert_eq!(sol.log.len(), 1);
}

#[test]
fn wall3d_coarse_solution_obeys_maximum_principle() {
    let w = wall(corpus::WALL_3D);
    let (u, _, _) = solve_on(&mesh_brick_union(&w.t, &w.s, &w.info, 2), &wall_model(&w.s, &w.c), 1e-12).unwrap();
    assert!(u.iter().all(|&v| (0.0..=23.0).contains(&v)));
}

#[test]
fn equal_drives_give_constant_field() {
    let w = wall(&corpus::WALL_3D.replace("$T_out = 0$", "$T_out = 23$"));
    let (u, _, _) = solve_on(&mesh_brick_union(&w.t, &w.s, &w.info, 2), &wall_model(&w.s, &w.c), 1e-12).unwrap();
    assert!(u.iter().all(|&v| (v - 23.0).abs() < 1e-9));
}

#[test]
fn no_robin_edge_is_singular() {
    let model = FeModel { conductivity: vec![1.0], robin: BTreeMap::new(), source: None };
    assert!(matches!(solve_on(&unit_square(2), &model, 1e-10), Err(FemError::SingularSystem)));
}

#[test]
fn mark_all_is_one_generation() {
    let mut m = unit_square(2);
    let areas: Vec<f64> = (0..m.triangles.len()).map(|t| m.area(t)).collect();
    let r = m.refine_all();
    assert_eq!(m.triangles.len(), 2 * areas.len());
    for (t, &p) in r.parent.iter().enumerate() {
        assert!((m.area(t) - 0.5 * areas[p]).abs() < 1e-15);
    }
    m.check_conforming().unwrap();
}

#[test]
fn single_mark_closure_stays_conforming() {
    let mut m = unit_square(4);
    m.refine_all();
    m.refine_all();
    let interior = (0..m.triangles.len())
        .find(|&t| m.triangles[t].iter().all(|&v| m.vertices[v].iter().all(|&c| c > 0.3 && c < 0.7)))
        .unwrap();
    let before = m.triangles.len();
    m.refine(&[interior]);
    m.check_conforming().unwrap();
    assert!(m.triangles.len() > before + 1);
}

#[test]
fn prolongation_is_exact_for_linears() {
    let mut m = unit_square(2);
    let f = |p: [f64; 2]| 3.0 * p[0] - 2.0 * p[1] + 0.5;
    let u: Vec<f64> = m.vertices.iter().map(|&p| f(p)).collect();
    let r = m.refine(&[0, 5]);
    let v = r.prolong(&u);
    assert!(m.vertices.iter().zip(&v).all(|(&p, &x)| (f(p) - x).abs() < 1e-14));
}

#[test]
fn dorfler_marks_minimal_prefix() {
    assert_eq!(dorfler_mark(&[1.0, 5.0, 2.0, 2.0], 0.5), vec![1]);
    assert_eq!(dorfler_mark(&[1.0, 3.0, 2.0, 2.0], 0.5), vec![1, 2]);
    assert_eq!(dorfler_mark(&[0.0; 3], 0.5), vec![0]);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn nvb_keeps_conformity_and_angles(seed in prop::collection::vec(0usize..10_000, 10)) {
        let w = wall(corpus::WALL_3D);
        let mut m = mesh_brick_union(&w.t, &w.s, &w.info, 1);
        let initial = m.min_angle();
        let area = m.total_area();
        for s in seed {
            let marked: Vec<usize> = (0..m.triangles.len()).filter(|t| (t * 7919 + s) % 5 == 0).collect();
            m.refine(&marked);
            prop_assert!(m.check_conforming().is_ok());
            prop_assert!((m.total_area() - area).abs() < 1e-14);
        }
        prop_assert!(m.min_angle() >= 0.5 * initial - 1e-12, "{} vs {}", m.min_angle(), initial);
    }
}

#[test]
fn square_cells_keep_right_isosceles_shape() {
    let mut m = unit_square(1);
    for g in 0..10 {
        let marked: Vec<usize> = (0..m.triangles.len()).filter(|t| t % 3 == g % 3).collect();
        m.refine(&marked);
    }
    m.check_conforming().unwrap();
    assert!((m.min_angle() - FRAC_PI_4).abs() < 1e-12);
}

/// Cubic with `-k lap u = -2y k` and Robin data on all four sides of the unit square.
mod manufactured {
    use super::*;

    pub const K: f64 = 1.0;
    pub const H: f64 = 2.0;

    pub fn u(p: [f64; 2]) -> f64 {
        let [x, y] = p;
        x * x * x - 3.0 * x * y * y + x * x * y + 1.0
    }

    pub fn grad(p: [f64; 2]) -> [f64; 2] {
        let [x, y] = p;
        [3.0 * x * x - 3.0 * y * y + 2.0 * x * y, -6.0 * x * y + x * x]
    }

    fn normal(p: [f64; 2]) -> [f64; 2] {
        if p[0] == 0.0 {
            [-1.0, 0.0]
        } else if p[0] == 1.0 {
            [1.0, 0.0]
        } else if p[1] == 0.0 {
            [0.0, -1.0]
        } else {
            [0.0, 1.0]
        }
    }

    pub fn model() -> FeModel {
        let mut robin = BTreeMap::new();
        let fluid = |p: [f64; 2]| {
            let (g, n) = (grad(p), normal(p));
            u(p) + K / H * (g[0] * n[0] + g[1] * n[1])
        };
        robin.insert(EdgeTag::RobinLeft, RobinData { h: H, fluid_temperature: Box::new(fluid) });
        FeModel { conductivity: vec![K], robin, source: Some(Box::new(|p| -2.0 * K * p[1])) }
    }
}

#[test]
fn manufactured_rates_and_effectivity() {
    let model = manufactured::model();
    let mut m = unit_square(4);
    let mut rows = Vec::new();
    for level in 0..5 {
        if level > 0 {
            m.refine_all();
            m.refine_all();
        }
        let (uh, _, _) = solve_on(&m, &model, 1e-13).unwrap();
        let e = exact_energy_error(&m, &model, &uh, &manufactured::u, &manufactured::grad);
        let l2 = exact_l2_error(&m, &uh, &manufactured::u);
        let est = estimate_error_two_level(&m, &model, &uh, &|_: &TriMesh, _: &[f64]| 0.0, 1e-13).unwrap();
        rows.push((e, l2, est.energy));
    }
    for w in rows.windows(2) {
        let energy_rate = (w[0].0 / w[1].0).log2();
        let l2_rate = (w[0].1 / w[1].1).log2();
        assert!((energy_rate - 1.0).abs() <= 0.2, "energy rate {energy_rate}");
        assert!((l2_rate - 2.0).abs() <= 0.2, "L2 rate {l2_rate}");
    }
    for &(e, _, est) in &rows {
        assert!((0.3..=3.0).contains(&(est / e)), "effectivity {}", est / e);
    }
}

#[test]
fn two_level_difference_is_orthogonal() {
    let model = manufactured::model();
    let m = unit_square(4);
    let (uh, _, _) = solve_on(&m, &model, 1e-14).unwrap();
    let mut fine = m.clone();
    let r = fine.refine_all();
    let (uf, _, _) = solve_on(&fine, &model, 1e-14).unwrap();
    let coarse_on_fine = r.prolong(&uh);
    let diff: Vec<f64> = uf.iter().zip(&coarse_on_fine).map(|(a, b)| a - b).collect();
    let d2: f64 = element_energies(&fine, &model, &diff).iter().sum();
    let e_coarse = exact_energy_error(&fine, &model, &coarse_on_fine, &manufactured::u, &manufactured::grad);
    let e_fine = exact_energy_error(&fine, &model, &uf, &manufactured::u, &manufactured::grad);
    let rhs = e_coarse.powi(2) - e_fine.powi(2);
    assert!(rel(d2, rhs) < 1e-8, "{d2} vs {rhs}");
}

#[test]
fn energy_error_shrinks_under_uniform_refinement() {
    let w = wall(corpus::WALL_3D);
    let model = wall_model(&w.s, &w.c);
    let mut m = mesh_brick_union(&w.t, &w.s, &w.info, 1);
    let mut levels = Vec::new();
    let mut steps: Vec<Refinement> = Vec::new();
    for _ in 0..10 {
        levels.push((steps.len(), solve_on(&m, &model, 1e-13).unwrap().0));
        steps.push(m.refine_all());
    }
    // Reference: the solution on the finest nested mesh.
    let (reference, _, _) = solve_on(&m, &model, 1e-13).unwrap();
    let errors: Vec<f64> = levels[..6]
        .iter()
        .map(|(from, u)| {
            let lifted = steps[*from..].iter().fold(u.clone(), |v, r| r.prolong(&v));
            let d: Vec<f64> = reference.iter().zip(&lifted).map(|(a, b)| a - b).collect();
            element_energies(&m, &model, &d).iter().sum::<f64>().sqrt()
        })
        .collect();
    assert!(errors.windows(2).all(|e| e[1] < e[0]), "{errors:?}");
}

#[test]
fn wall3d_adaptive_sandwich() {
    let w = wall(corpus::WALL_3D);
    let bounds = solve_bounds(&w.t, &w.s, &w.info).unwrap();
    let sol = solve_wall_fe(&w.t, &w.s, &w.info, &w.c, &AdaptiveOptions::default()).unwrap();
    let eps = sol.qoi_estimate;
    assert!(
        bounds.h_lb - eps <= sol.qoi && sol.qoi <= bounds.h_ub + eps,
        "{} not in [{}, {}]",
        sol.qoi,
        bounds.h_lb,
        bounds.h_ub
    );
    assert!(sol.mesh.n_vertices() <= 200_000 && sol.residual <= 1e-10);
    assert!(sol.qoi_estimate <= 1e-3 * sol.qoi && sol.energy_estimate <= 1e-3 * sol.energy_norm);
    sol.mesh.check_conforming().unwrap();

    // After the first three steps the estimates follow the optimal rates N^(-1/2) and N^(-1).
    let tail = &sol.log[3..];
    let slope = |f: &dyn Fn(&IterationRecord) -> f64| {
        let pts: Vec<(f64, f64)> = tail.iter().map(|r| ((r.dofs as f64).ln(), f(r).ln())).collect();
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
    };
    let energy_rate = slope(&|r| r.energy_estimate);
    let qoi_rate = slope(&|r| r.qoi_estimate);
    assert!((-0.65..=-0.4).contains(&energy_rate), "energy rate {energy_rate}");
    assert!(qoi_rate <= -0.8, "QoI rate {qoi_rate}");

    // Refinement concentrates at the reentrant corners (L, 0) and (L, b).
    let count = |c: [f64; 2]| sol.mesh.vertices.iter().filter(|p| (p[0] - c[0]).hypot(p[1] - c[1]) < 0.01).count();
    let corner = count([0.05, 0.1]).min(count([0.05, 0.0]));
    let far = count([0.075, 0.15]).max(1);
    assert!(corner as f64 > 5.0 * far as f64, "corner {corner}, far {far}");
}
