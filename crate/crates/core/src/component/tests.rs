use super::*;
use crate::corpus;
use crate::parser::{parse_statement, Commonsense};
use crate::template::assemble_template;
use num_bigint::BigInt;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn template(src: &str) -> PdeTemplate {
    assemble_template(&parse_statement(src, "t", &Commonsense::bundled()).unwrap()).unwrap()
}

fn system(src: &str) -> (PdeTemplate, System) {
    let t = template(src);
    let comps = instantiate_components(&t).unwrap();
    let s = connect_system(&t, comps).unwrap();
    (t, s)
}

fn names(s: &System, ids: &[usize]) -> Vec<String> {
    ids.iter().map(|&i| s.components[i].name.clone()).collect()
}

/// Bricks 2 and 3 sit side by side behind brick 1 with a gap between them, so the right
/// station splits into two parts.
const FORK: [[i64; 4]; 3] = [[0, 1, 0, 3], [1, 2, 0, 1], [1, 2, 2, 3]];

#[test]
fn instantiated_geometry() {
    let t = template(corpus::WALL_1D);
    let comps = instantiate_components(&t).unwrap();
    let pine = comps.iter().find(|c| c.name == "pine layer").unwrap();
    assert_eq!(
        pine.geometry,
        Geometry::RightCylinderRect {
            a: q(1, 10),
            b: q(1, 10),
            length: q(1, 10),
            interval: Cuboid::new(vec![(q(1, 20), q(3, 20))])
        }
    );
    assert_eq!(pine.conductivity, q(1, 10));
    let t = template(corpus::WALL_3D);
    let comps = instantiate_components(&t).unwrap();
    assert_eq!(
        comps[2].geometry,
        Geometry::Parallelepiped { intervals: Cuboid::new(vec![(q(1, 20), q(1, 10)), (q(0, 1), q(1, 10)), (q(1, 10), q(1, 5))]) }
    );
}

#[test]
fn zero_dimension_is_rejected() {
    let src = corpus::WALL_1D.replace("$a = 0.1$", "$a = 0$");
    let f = parse_statement(&src, "t", &Commonsense::bundled()).unwrap();
    assert!(matches!(assemble_template(&f), Err(TemplateError::InvalidGeometry { ref reason, .. }) if reason.contains("a")));
    let mut t = template(corpus::WALL_1D);
    t.components[1].cuboid.hi[1] = q(0, 1);
    assert_eq!(
        instantiate_components(&t),
        Err(ComponentError::NonPositiveDimension {
            component: "pine layer".into(),
            dimension: "cross-section dimension a".into()
        })
    );
}

#[test]
fn port_numbering() {
    let (_, s) = system(corpus::WALL_1D);
    assert_eq!(s.n_global, 4);
    assert_eq!(s.dof_x, vec![q(0, 1), q(1, 20), q(3, 20), q(1, 5)]);
    let (_, s) = system(corpus::SPOON);
    assert_eq!(s.n_global, 3);
    assert_eq!(s.dof_x, vec![q(-1, 20), q(0, 1), q(3, 25)]);
    // Bricks 3 and 4 touch brick 2 laterally only, so their left ports stay separate.
    let (_, s) = system(corpus::WALL_3D);
    assert_eq!(s.n_global, 7);
    assert_eq!(s.dof_map[0][1], s.dof_map[1][0]);
    assert_eq!(s.connections.len(), 3);
}

#[test]
fn graph_edge_without_face_is_rejected() {
    let t = template(
        &corpus::brick_wall(&FORK)
            .replace("Brick 1 connects to brick 2.", "Brick 1 connects to brick 2. Brick 2 connects to brick 3."),
    );
    let comps = instantiate_components(&t).unwrap();
    assert_eq!(
        connect_system(&t, comps),
        Err(ComponentError::NoSharedFace { first: "brick 2".into(), second: "brick 3".into() })
    );
}

#[test]
fn wall_3d_slices() {
    let (_, s) = system(corpus::WALL_3D);
    let slices = find_slices(&s);
    assert_eq!(slices.stations(), vec![q(0, 1), q(1, 20), q(1, 10)]);
    let mid = &slices.slices[1];
    let lo = mid.pieces.iter().map(|p| p.section.lo[1].clone()).min().unwrap();
    let hi = mid.pieces.iter().map(|p| p.section.hi[1].clone()).max().unwrap();
    assert_eq!((lo, hi), (q(-1, 10), q(1, 5)));
    assert!(slices.slices.iter().all(|sl| sl.parts.len() == 1));
    let c = coalesce_slice_dofs(&s, &slices);
    assert_eq!(c.n, 3);
    assert_eq!(c.ports[2], [1, 2]);
}

#[test]
fn single_brick() {
    let (t, s) = system(&corpus::brick_wall(&[[0, 1, 0, 1]]));
    assert_eq!(find_slices(&s).slices.len(), 2);
    assert_eq!(find_parallelepipeds(&t, &s).members.len(), 1);
}

#[test]
fn disconnected_slice_has_two_parts() {
    let (_, s) = system(&corpus::brick_wall(&FORK));
    let slices = find_slices(&s);
    assert_eq!(slices.slices.iter().map(|sl| sl.parts.len()).collect::<Vec<_>>(), vec![1, 1, 2]);
    assert_eq!(coalesce_slice_dofs(&s, &slices).n, 4);
}

#[test]
fn wall_3d_parallelepipeds() {
    let (t, s) = system(corpus::WALL_3D);
    let p = find_parallelepipeds(&t, &s);
    let members: Vec<Vec<String>> = p.members.iter().map(|m| names(&s, &m.components)).collect();
    assert_eq!(members, vec![vec!["brick 1", "brick 2"], vec!["brick 3"], vec!["brick 4"]]);
    assert_eq!(p.members[0].robin, [true, true]);
    assert_eq!(p.members[1].robin, [false, true]);
}

#[test]
fn grid_columns_merge() {
    let (t, s) = system(&corpus::brick_wall(&[[0, 1, 0, 1], [1, 2, 0, 1], [0, 1, 1, 2], [1, 2, 1, 2]]));
    let p = find_parallelepipeds(&t, &s);
    assert_eq!(p.members.len(), 2);
    assert!(p.members.iter().all(|m| m.components.len() == 2));
}

fn tiling_holds(t: &PdeTemplate, s: &System) {
    let p = find_parallelepipeds(t, s);
    let vol: Rational = p.members.iter().map(|m| (&m.x_right - &m.x_left) * &m.cross_area).sum();
    let total: Rational = s.components.iter().map(|c| c.volume()).sum();
    assert_eq!(vol, total);
    let mut seen: Vec<usize> = p.members.iter().flat_map(|m| m.components.clone()).collect();
    seen.sort();
    assert_eq!(seen, (0..s.components.len()).collect::<Vec<_>>());
    // No two members could merge: x1-adjacent members differ in section or do not touch.
    for a in &p.members {
        for b in &p.members {
            if a.x_right == b.x_left {
                assert!(a.section != b.section, "mergeable members");
            }
        }
    }
}

#[test]
fn parallelepipeds_tile_the_fixtures() {
    let (t, s) = system(corpus::WALL_3D);
    tiling_holds(&t, &s);
    let (t, s) = system(&corpus::brick_wall(&FORK));
    tiling_holds(&t, &s);
}

#[test]
fn coalesced_map_is_a_quotient() {
    for src in [corpus::WALL_3D.to_string(), corpus::brick_wall(&FORK)] {
        let (_, s) = system(&src);
        let c = coalesce_slice_dofs(&s, &find_slices(&s));
        for i in 0..s.components.len() {
            for j in 0..s.components.len() {
                for (pi, pj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    if s.dof_map[i][pi] == s.dof_map[j][pj] {
                        assert_eq!(c.ports[i][pi], c.ports[j][pj]);
                    }
                }
            }
        }
    }
}

#[test]
fn chain_coalescing_is_identity() {
    let (_, s) = system(&corpus::brick_wall(&[[0, 1, 0, 1], [1, 3, 0, 1], [3, 4, 0, 1]]));
    let c = coalesce_slice_dofs(&s, &find_slices(&s));
    assert_eq!(c.n, s.n_global);
    assert_eq!(c.ports, s.dof_map);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Random chains: ports share a dof iff they sit at the same station.
    #[test]
    fn chain_ports_follow_stations(lengths in prop::collection::vec(1i64..4, 1..=10)) {
        let mut x = 0;
        let bricks: Vec<[i64; 4]> = lengths.iter().map(|l| { let b = [x, x + l, 0, 1]; x += l; b }).collect();
        let (_, s) = system(&corpus::brick_wall(&bricks));
        prop_assert_eq!(s.n_global, bricks.len() + 1);
        let ports: Vec<(usize, &Rational)> = (0..bricks.len())
            .flat_map(|c| [(s.dof_map[c][0], s.components[c].x_left()), (s.dof_map[c][1], s.components[c].x_right())])
            .collect();
        for (da, xa) in &ports {
            for (db, xb) in &ports {
                prop_assert_eq!(da == db, xa == xb);
            }
        }
    }
}
