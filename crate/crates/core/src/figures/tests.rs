use super::*;
use crate::component::{connect_system, instantiate_components};
use crate::corpus;
use crate::genwall::solve_bounds;
use crate::parser::{parse_statement, Commonsense};
use crate::quasi1d::solve_quasi1d;
use crate::template::{assemble_template, classify_problem, ProblemClass, BI_THRESHOLD};

fn frame(src: &str) -> Frame {
    parse_statement(src, "t", &Commonsense::bundled()).unwrap()
}

fn setup(src: &str) -> (PdeTemplate, System) {
    let t = assemble_template(&frame(src)).unwrap();
    let s = connect_system(&t, instantiate_components(&t).unwrap()).unwrap();
    (t, s)
}

/// `(x, y, label)` of every labelled box in a graph figure.
fn graph_nodes(svg: &str) -> Vec<(f64, f64, String)> {
    let attr = |line: &str, key: &str| -> f64 {
        let start = line.find(&format!(" {key}=\"")).unwrap() + key.len() + 3;
        line[start..].split('"').next().unwrap().parse().unwrap()
    };
    svg.lines()
        .filter(|l| l.contains("<text"))
        .map(|l| {
            let label = l.split('>').nth(1).unwrap().split('<').next().unwrap().to_string();
            (attr(l, "x"), attr(l, "y"), label)
        })
        .collect()
}

fn node_line<'a>(svg: &'a str, label: &str) -> &'a str {
    let lines: Vec<&str> = svg.lines().collect();
    let i = lines.iter().position(|l| l.contains(&format!(">{label}<"))).unwrap();
    lines[i - 1]
}

#[test]
fn empty_graph_renders_empty_figure() {
    let svg = render_graph_figure(&Frame::empty("nothing"));
    assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    assert!(!svg.contains("<line") && !svg.contains("<text"));
}

#[test]
fn wall_1d_graph_is_a_left_to_right_chain() {
    let svg = render_graph_figure(&frame(corpus::WALL_1D));
    let nodes = graph_nodes(&svg);
    let chain = ["inside air", "fir layer", "pine layer", "cedar layer", "outside air"];
    assert_eq!(nodes.len(), chain.len());
    let xs: Vec<f64> = chain.iter().map(|n| nodes.iter().find(|(_, _, l)| l == n).unwrap().0).collect();
    assert!(xs.windows(2).all(|w| w[0] < w[1]), "{xs:?}");
    assert!(nodes.iter().all(|n| n.1 == nodes[0].1));
    assert!(!svg.contains("composite wall"));
    assert_eq!(svg.matches("<line").count(), 4);
}

#[test]
fn spoon_graph_styles_follow_entity_state() {
    let svg = render_graph_figure(&frame(corpus::SPOON));
    assert!(node_line(&svg, "cup").contains("stroke-dasharray"));
    assert!(node_line(&svg, "tea").contains(r#"rx="16""#));
    assert!(node_line(&svg, "air").contains(r#"rx="16""#));
    for solid in ["head", "handle"] {
        let l = node_line(&svg, solid);
        assert!(l.contains(r#"rx="0""#) && !l.contains("dasharray"), "{solid}");
    }
    assert!(!svg.contains(">spoon<"));
}

#[test]
fn geometry_labels_every_component_and_station() {
    let (t, s) = setup(corpus::WALL_1D);
    let svg = render_geometry_figure(&t, &s);
    for label in ["fir layer", "pine layer", "cedar layer", ">0.05<", ">0.15<", ">0.2<", "h_in, T_in", "h_out, T_out"] {
        assert!(svg.contains(label), "missing {label}");
    }
    let (t, s) = setup(corpus::WALL_3D);
    let svg = render_geometry_figure(&t, &s);
    for b in 1..=4 {
        assert!(svg.contains(&format!(">brick {b}<")));
    }
}

#[test]
fn single_component_geometry() {
    let (t, s) = setup(&corpus::layered_wall(&[(5, 200)], 10, 100, 23, 0));
    let svg = render_geometry_figure(&t, &s);
    assert!(svg.contains("fir layer"));
}

/// Every `(x, y)` on the temperature curves.
fn curve_points(svg: &str) -> Vec<(f64, f64)> {
    svg.lines()
        .filter(|l| l.starts_with("  <path"))
        .flat_map(|l| {
            let d = l.split("d=\"").nth(1).unwrap().split('"').next().unwrap();
            d.split(['M', 'L'])
                .filter(|p| !p.trim().is_empty())
                .map(|p| {
                    let (x, y) = p.trim().split_once(',').unwrap();
                    (x.parse().unwrap(), y.parse().unwrap())
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

#[test]
fn wall_1d_curve_is_piecewise_linear_and_decreasing() {
    let (t, s) = setup(corpus::WALL_1D);
    let svg = render_quasi1d_field(&solve_quasi1d(&t, &s).unwrap());
    let pts = curve_points(&svg);
    assert_eq!(pts.len(), 3 * 41);
    // Screen y grows downward, so a falling temperature has rising y.
    assert!(pts.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-9));
    for seg in pts.chunks(41) {
        let slope = (seg[40].1 - seg[0].1) / (seg[40].0 - seg[0].0);
        for p in seg {
            assert!((seg[0].1 + slope * (p.0 - seg[0].0) - p.1).abs() < 0.02);
        }
    }
}

#[test]
fn spoon_curve_is_monotone_from_head_to_tip() {
    let (t, s) = setup(corpus::SPOON);
    let pts = curve_points(&render_quasi1d_field(&solve_quasi1d(&t, &s).unwrap()));
    assert!(pts.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-9));
    assert!(pts.last().unwrap().1 > pts[0].1);
}

#[test]
fn constant_field_draws_a_flat_line() {
    let (t, s) = setup(&corpus::layered_wall(&[(5, 200), (10, 100)], 10, 100, 7, 7));
    let pts = curve_points(&render_quasi1d_field(&solve_quasi1d(&t, &s).unwrap()));
    assert!(!pts.is_empty());
    assert!(pts.iter().all(|p| (p.1 - pts[0].1).abs() < 1e-9));
}

#[test]
fn contour_of_constant_field_uses_one_band() {
    let v = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let svg = render_contour_field(&v, &[[0, 1, 2], [0, 2, 3]], &[3.0; 4], "c");
    let fills: std::collections::BTreeSet<&str> = svg
        .lines()
        .filter(|l| l.contains(r#"<rect x="#) && !l.contains(r#"width="16""#))
        .map(|l| l.split("fill=\"").nth(1).unwrap().split('"').next().unwrap())
        .collect();
    assert_eq!(fills.len(), 1);
}

#[test]
fn contour_of_empty_mesh_does_not_panic() {
    let svg = render_contour_field(&[], &[], &[], "none");
    assert!(svg.ends_with("</svg>\n"));
}

#[test]
fn upper_bound_field_spans_the_wall() {
    let (t, s) = setup(corpus::WALL_3D);
    let ProblemClass::GeneralizedWall(info) = classify_problem(&t, BI_THRESHOLD).unwrap() else { panic!() };
    let bounds = solve_bounds(&t, &s, &info).unwrap();
    let (v, tri, u) = upper_bound_field(&s, &bounds);
    let area: f64 = tri
        .iter()
        .map(|t| {
            let [a, b, c] = t.map(|i| v[i]);
            0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs()
        })
        .sum();
    // Brick union cross-section: one 0.05 x 0.1 brick plus three stacked.
    assert!((area - (0.05 * 0.1 + 0.05 * 0.3)).abs() < 1e-12);
    let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(lo >= 0.0 && hi <= 23.0 && hi > lo);
    let svg = render_bounds_figure(&bounds);
    assert!(svg.contains("H_LB = 0.645161") && svg.contains("H_UB = 0.845070"));
    assert!(!svg.contains("H_FE"));
}
