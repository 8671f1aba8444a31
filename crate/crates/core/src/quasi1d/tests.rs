use super::*;
use crate::component::{connect_system, instantiate_components};
use crate::corpus;
use crate::expr::Rational;
use crate::parser::{parse_statement, Commonsense};
use crate::template::assemble_template;
use nalgebra::{Matrix4, Vector4};
use proptest::prelude::*;

fn setup(src: &str) -> (PdeTemplate, System) {
    let t = assemble_template(&parse_statement(src, "t", &Commonsense::bundled()).unwrap()).unwrap();
    let s = connect_system(&t, instantiate_components(&t).unwrap()).unwrap();
    (t, s)
}

fn solve(src: &str) -> (PdeTemplate, System, Quasi1dSolution) {
    let (t, s) = setup(src);
    let sol = solve_quasi1d(&t, &s).unwrap();
    (t, s, sol)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Series-resistance oracle for a layered wall: port temperatures and heat flux.
fn series_oracle(lengths: &[f64], ks: &[f64], h_in: f64, h_out: f64, t_in: f64, t_out: f64) -> (Vec<f64>, f64) {
    let r: f64 = 1.0 / h_in + lengths.iter().zip(ks).map(|(l, k)| l / k).sum::<f64>() + 1.0 / h_out;
    let q = (t_in - t_out) / r;
    let mut t = t_in - q / h_in;
    let mut ports = vec![t];
    for (l, k) in lengths.iter().zip(ks) {
        t -= q * l / k;
        ports.push(t);
    }
    (ports, q)
}

const WALL_1D_PORTS: [f64; 4] = [22.0254, 19.5890, 9.8432, 0.0975];

#[test]
fn wall_1d_ports_match_resistance_oracle() {
    let (_, _, sol) = solve(corpus::WALL_1D);
    let (oracle, q) = series_oracle(&[0.05, 0.1, 0.05], &[0.2, 0.1, 0.05], 10.0, 100.0, 23.0, 0.0);
    assert!((q - 23.0 / 2.36).abs() < 1e-12);
    for ((v, o), printed) in sol.port_values.iter().zip(&oracle).zip(WALL_1D_PORTS) {
        assert!(rel(*v, *o) < 1e-9, "{v} vs {o}");
        assert!((v - printed).abs() < 1e-4);
    }
    assert!(sol.residual < 1e-10);
}

#[test]
fn pine_element_and_cedar_robin() {
    let (t, s) = setup(corpus::WALL_1D);
    let pine = condense_wall(&t, &s, 1).unwrap();
    assert!((pine.k - Matrix2::new(0.01, -0.01, -0.01, 0.01)).amax() < 1e-15);
    assert_eq!(pine.f, Vector2::zeros());
    let cedar = condense_wall(&t, &s, 2).unwrap();
    assert!((cedar.k[(1, 1)] - 1.01).abs() < 1e-12);
    assert_eq!(cedar.f[1], 0.0);
    assert!(wall_element(1.0, 1.0, 1e15).k.amax() < 1e-14);
}

#[test]
fn symmetric_drive_gives_constant_field() {
    let (_, _, sol) = solve(&corpus::WALL_1D.replace("$T_out = 0$", "$T_out = 23$"));
    assert!(sol.port_values.iter().all(|v| (v - 23.0).abs() < 1e-12));
}

#[test]
fn wall_1d_qoi() {
    let src = corpus::layered_wall(&[(5, 200), (10, 100), (5, 50)], 10, 100, 23, 0).replace(
        "Find the heat transfer rate",
        "Find the temperature at $x = 0.05$. Find the heat flux over the face at $x = 0.2$. Find the heat transfer rate",
    );
    let (_, _, sol) = solve(&src);
    let values: Vec<f64> = sol.qoi_results.iter().map(|r| r.value.unwrap()).collect();
    let q = 23.0 / 2.36;
    assert!(rel(values[0], 19.58898305084746) < 1e-9);
    assert!(rel(values[1], q) < 1e-9, "outward flux at the cold face");
    assert!(rel(-values[2], q * 0.01) < 1e-9, "heat enters at x = 0");
    assert!(rel(-values[2], 0.0974576) < 1e-6);
}

#[test]
fn wall_segments_have_resistance_slopes() {
    let (_, _, sol) = solve(corpus::WALL_1D);
    let q = 23.0 / 2.36;
    for (seg, k) in sol.segments.iter().zip([0.2, 0.1, 0.05]) {
        let (a, b) = seg.interval();
        assert!(rel(seg.eval((a + b) / 2.0).1, -q / k) < 1e-9);
    }
}

#[test]
fn insulated_face_has_zero_flux() {
    let (t, s, sol) = solve(corpus::WALL_1D);
    let lateral = t.face(1, FaceKind::Lateral).unwrap();
    assert_eq!(face_heat_rate(&t, &s, &sol, lateral).unwrap(), 0.0);
}

#[test]
fn location_outside_domain() {
    let src = corpus::layered_wall(&[(5, 200)], 10, 100, 23, 0)
        .replace("Find the heat transfer rate", "Find the temperature at $x = 0.5$. Find the heat transfer rate");
    let (t, s) = setup(&src);
    assert!(matches!(solve_quasi1d(&t, &s), Err(Quasi1dError::LocationOutsideDomain { .. })));
}

/// Two fin segments with Robin ends: general solutions per segment, continuity of T and kA T'.
fn spoon_oracle() -> [f64; 3] {
    let (a, b) = (0.002f64, 0.01f64);
    let (area, p) = (a * b, 2.0 * (a + b));
    let (l1, l2, k1, k2) = (0.05f64, 0.12f64, 50.0f64, 50.0f64);
    let (h_bot, h_top, h1, h2, t_liq, t_inf) = (10.0f64, 5.0f64, 10.0f64, 5.0f64, 90.0f64, 23.0f64);
    let m1 = (h1 * p / (k1 * area)).sqrt();
    let m2 = (h2 * p / (k2 * area)).sqrt();
    // Head: T = T_liq + A1 cosh(m1 (x + L1)) + B1 sinh(m1 (x + L1)); handle: T = T_inf + A2 cosh(m2 x) + B2 sinh(m2 x).
    let (c1, s1) = ((m1 * l1).cosh(), (m1 * l1).sinh());
    let (c2, s2) = ((m2 * l2).cosh(), (m2 * l2).sinh());
    let m = Matrix4::new(
        -h_bot,
        k1 * m1,
        0.0,
        0.0,
        0.0,
        0.0,
        k2 * m2 * s2 + h_top * c2,
        k2 * m2 * c2 + h_top * s2,
        c1,
        s1,
        -1.0,
        0.0,
        k1 * m1 * s1,
        k1 * m1 * c1,
        0.0,
        -k2 * m2,
    );
    let rhs = Vector4::new(0.0, 0.0, t_inf - t_liq, 0.0);
    let x = m.lu().solve(&rhs).unwrap();
    [t_liq + x[0], t_inf + x[2], t_inf + x[2] * c2 + x[3] * s2]
}

#[test]
fn spoon_ports_match_fin_oracle() {
    let (_, _, sol) = solve(corpus::SPOON);
    let oracle = spoon_oracle();
    for (v, o) in sol.port_values.iter().zip(oracle) {
        assert!(rel(*v, o) < 1e-8, "{v} vs {o}");
    }
    let (_, end) = sol.segments[1].interval();
    assert_eq!(sol.segments[1].eval(end).0, sol.port_values[2]);
}

#[test]
fn spoon_head_fin_parameter() {
    let (t, s) = setup(corpus::SPOON);
    let head = condense_fin(&t, &s, 0).unwrap();
    let m = head.fin.unwrap().m;
    assert!((m - 240f64.sqrt()).abs() < 1e-12);
    assert!((m * 0.05 - 0.774597).abs() < 1e-6);
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let s: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + s) * h / 3.0
}

/// Condensed stiffness and load as weak-form integrals of the harmonic port basis.
#[test]
fn fin_element_matches_weak_form_quadrature() {
    let (k, area, p, l, h, tf) = (50.0, 2e-5, 0.024, 0.05, 10.0, 90.0);
    let e = fin_element(k, area, p, l, h, tf).unwrap();
    let m = (h * p / (k * area)).sqrt();
    let sh = (m * l).sinh();
    let phi = |i: usize, x: f64| if i == 0 { (m * (l - x)).sinh() / sh } else { (m * x).sinh() / sh };
    let dphi = |i: usize, x: f64| if i == 0 { -m * (m * (l - x)).cosh() / sh } else { m * (m * x).cosh() / sh };
    for i in 0..2 {
        for j in 0..2 {
            let a = simpson(|x| k * area * dphi(i, x) * dphi(j, x) + h * p * phi(i, x) * phi(j, x), 0.0, l, 4000);
            assert!(rel(e.k[(i, j)].abs(), a.abs()) < 1e-10 && e.k[(i, j)].signum() == a.signum());
        }
        let load = simpson(|x| h * p * tf * phi(i, x), 0.0, l, 4000);
        assert!(rel(e.f[i], load) < 1e-10);
    }
}

#[test]
fn fin_at_ambient_is_in_equilibrium() {
    let e = fin_element(50.0, 2e-5, 0.024, 0.12, 5.0, 23.0).unwrap();
    let r = e.k * Vector2::new(23.0, 23.0) - e.f;
    assert!(r.amax() < 1e-12 * e.f.amax());
    let seg =
        Segment::Fin { x0: 0.0, x1: 0.12, m: e.fin.unwrap().m, fluid_temperature: 23.0, c1: 0.0, c2: 0.0, t0: 23.0, t1: 23.0 };
    assert!(seg.samples(50).iter().all(|(_, v)| (v - 23.0).abs() < 1e-12));
}

#[test]
fn degenerate_fin() {
    assert_eq!(fin_element(1.0, 1.0, 4.0, 1.0, 0.0, 0.0), Err(Quasi1dError::DegenerateFin));
}

fn energy_balance(t: &PdeTemplate, s: &System, sol: &Quasi1dSolution) -> f64 {
    let rates: Vec<f64> = t.exterior_faces().map(|f| face_heat_rate(t, s, sol, f).unwrap()).collect();
    rates.iter().sum::<f64>().abs() / rates.iter().map(|r| r.abs()).fold(0.0, f64::max)
}

#[test]
fn fixtures_conserve_energy() {
    for src in [corpus::WALL_1D, corpus::SPOON] {
        let (t, s, sol) = solve(src);
        assert!(energy_balance(&t, &s, &sol) < 1e-9);
    }
}

fn fin_residuals_vanish(sol: &Quasi1dSolution, s: &System) {
    for (seg, c) in sol.segments.iter().zip(&s.components) {
        if let Segment::Fin { x0, m, fluid_temperature, c1, c2, .. } = *seg {
            for (x, v) in seg.samples(50) {
                let z = m * (x - x0);
                let second = m * m * (c1 * z.sinh() + c2 * z.cosh());
                let ka = to_f64(&c.conductivity) * to_f64(&c.cross_area());
                let hp = ka * m * m;
                let res = ka * second - hp * (v - fluid_temperature);
                assert!(res.abs() <= 1e-8 * (hp * (v - fluid_temperature)).abs().max(1e-12));
            }
        }
    }
}

#[test]
fn spoon_strong_form_and_maximum_principle() {
    let (_, s, sol) = solve(corpus::SPOON);
    fin_residuals_vanish(&sol, &s);
    for seg in &sol.segments {
        assert!(seg.samples(200).iter().all(|&(_, v)| (23.0..=90.0).contains(&v)));
    }
    let head: Vec<f64> = sol.segments.iter().flat_map(|s| s.samples(200)).map(|p| p.1).collect();
    assert!(head.windows(2).all(|w| w[1] <= w[0] + 1e-12), "monotone from head to tip");
}

#[test]
fn singular_without_anchor() {
    let (mut t, s) = setup(corpus::WALL_1D);
    for f in &mut t.faces {
        if f.bc.is_some() {
            f.bc = Some(BoundaryCondition::Insulated);
        }
    }
    assert_eq!(solve_quasi1d(&t, &s), Err(Quasi1dError::SingularSystem));
}

#[test]
fn dirichlet_and_neumann_ports() {
    let (mut t, s) = setup(corpus::WALL_1D);
    t.bindings.insert("T_0".into(), Rational::from_integer(30.into()));
    t.bindings.insert("q_0".into(), Rational::from_integer((-50).into()));
    let left = t.face(0, FaceKind::Low(0)).unwrap();
    t.faces[left].bc = Some(BoundaryCondition::Dirichlet { temperature: "T_0".into() });
    let sol = solve_quasi1d(&t, &s).unwrap();
    assert_eq!(sol.port_values[0], 30.0);
    let (oracle, _) = series_oracle(&[0.05, 0.1, 0.05], &[0.2, 0.1, 0.05], f64::INFINITY, 100.0, 30.0, 0.0);
    assert!(sol.port_values.iter().zip(&oracle).all(|(a, b)| rel(*a, *b) < 1e-9));
    // Prescribed inflow of 50 W/m^2 through the left face.
    t.faces[left].bc = Some(BoundaryCondition::Neumann { flux: "q_0".into() });
    let sol = solve_quasi1d(&t, &s).unwrap();
    assert!(rel(sol.port_values[3], 50.0 / 100.0) < 1e-9);
    assert!(energy_balance(&t, &s, &sol) < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_chains_match_series_oracle(
        layers in prop::collection::vec((1u32..30, 10u32..5000), 1..=5),
        h_in in 1u32..500,
        h_out in 1u32..500,
        t_in in -40i32..100,
        t_out in -40i32..100,
    ) {
        let (t, s, sol) = solve(&corpus::layered_wall(&layers, h_in, h_out, t_in, t_out));
        let lengths: Vec<f64> = layers.iter().map(|l| l.0 as f64 / 100.0).collect();
        let ks: Vec<f64> = layers.iter().map(|l| l.1 as f64 / 1000.0).collect();
        let (oracle, q) = series_oracle(&lengths, &ks, h_in as f64, h_out as f64, t_in as f64, t_out as f64);
        let scale = (t_in - t_out).abs().max(1) as f64;
        for (v, o) in sol.port_values.iter().zip(&oracle) {
            prop_assert!((v - o).abs() <= 1e-10 * scale.max(o.abs()));
        }
        let floor = h_in as f64 * 0.01 * (t_in.abs() + t_out.abs() + 1) as f64;
        prop_assert!((-sol.qoi_results[0].value.unwrap() - q * 0.01).abs() <= 1e-10 * (q * 0.01).abs().max(floor));
        if t_in != t_out {
            prop_assert!(energy_balance(&t, &s, &sol) < 1e-9);
        }
        let (lo, hi) = (t_in.min(t_out) as f64, t_in.max(t_out) as f64);
        for seg in &sol.segments {
            for (_, v) in seg.samples(200) {
                prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn fin_tends_to_wall_as_h_vanishes(k in 1.0f64..100.0, l in 0.01f64..0.5, exp in 4i32..10) {
        let (area, p, tf) = (2e-5, 0.024, 40.0);
        let h = 10f64.powi(-exp);
        let fin = fin_element(k, area, p, l, h, tf).unwrap();
        let wall = wall_element(k, area, l);
        let g = k * area / l;
        prop_assert!((fin.k - wall.k).amax() / g <= 10.0 * h * p * l / g);
        let uniform = h * p * l * tf / 2.0;
        prop_assert!((fin.f[0] - uniform).abs() <= uniform * (h * p * l * l / (k * area)));
    }
}
