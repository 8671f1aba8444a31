//! Components with faces and two ports, the assembled system and its local-to-global port
//! map, and the slice and parallelepiped decompositions of a brick union.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::expr::{serialize_rational, to_f64, Rational};
use crate::geometry::Cuboid;
use crate::parser::GeometryClass;
use crate::template::{BoundaryCondition, FaceKind, PdeTemplate, TemplateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComponentError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("component `{component}` has non-positive {dimension}")]
    NonPositiveDimension { component: String, dimension: String },
    #[error("`{first}` and `{second}` are connected but share no face")]
    NoSharedFace { first: String, second: String },
    #[error("component `{component}` is not connected to the rest of the system")]
    DanglingComponent { component: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Geometry {
    RightCylinderRect {
        #[serde(serialize_with = "serialize_rational")]
        a: Rational,
        #[serde(serialize_with = "serialize_rational")]
        b: Rational,
        #[serde(serialize_with = "serialize_rational")]
        length: Rational,
        interval: Cuboid,
    },
    Parallelepiped {
        intervals: Cuboid,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Component {
    pub name: String,
    pub geometry: Geometry,
    #[serde(serialize_with = "serialize_rational")]
    pub conductivity: Rational,
    /// Template face indices.
    pub faces: Vec<usize>,
    /// Template face indices of the two through-axis faces, left then right.
    pub ports: [usize; 2],
    pub cuboid: Cuboid,
}

impl Component {
    pub fn x_left(&self) -> &Rational {
        &self.cuboid.lo[0]
    }

    pub fn x_right(&self) -> &Rational {
        &self.cuboid.hi[0]
    }

    pub fn length(&self) -> Rational {
        self.cuboid.extent(0)
    }

    pub fn section(&self) -> Cuboid {
        self.cuboid.drop_axis(0)
    }

    pub fn cross_area(&self) -> Rational {
        self.section().measure()
    }

    pub fn perimeter(&self) -> Rational {
        Rational::from_integer(2.into()) * (self.cuboid.extent(1) + self.cuboid.extent(2))
    }

    pub fn volume(&self) -> Rational {
        self.cuboid.measure()
    }
}

/// One component per template component, with numeric geometry.
pub fn instantiate_components(t: &PdeTemplate) -> Result<Vec<Component>, ComponentError> {
    t.components
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            for i in 0..c.cuboid.dim() {
                if !c.cuboid.extent(i).is_positive() {
                    let dimension = match (c.geometry, i) {
                        (GeometryClass::RightCylinder, 0) => "length".to_string(),
                        (GeometryClass::RightCylinder, j) => format!("cross-section dimension {}", c.cross_section[j - 1]),
                        (_, j) => format!("extent along {}", c.axes[j]),
                    };
                    return Err(ComponentError::NonPositiveDimension { component: c.name.clone(), dimension });
                }
            }
            let geometry = match c.geometry {
                GeometryClass::RightCylinder => Geometry::RightCylinderRect {
                    a: c.cuboid.extent(1),
                    b: c.cuboid.extent(2),
                    length: c.length(),
                    interval: Cuboid::new(vec![(c.cuboid.lo[0].clone(), c.cuboid.hi[0].clone())]),
                },
                GeometryClass::Parallelepiped => Geometry::Parallelepiped { intervals: c.cuboid.clone() },
            };
            let port = |k| t.face(ci, k).expect("through-axis faces exist");
            Ok(Component {
                name: c.name.clone(),
                geometry,
                conductivity: t.conductivity(ci)?,
                faces: c.faces.clone(),
                ports: [port(FaceKind::Low(0)), port(FaceKind::High(0))],
                cuboid: c.cuboid.clone(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Connection {
    pub first: usize,
    pub second: usize,
    /// Template face indices in contact.
    pub faces: (usize, usize),
    #[serde(serialize_with = "serialize_rational")]
    pub area: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct System {
    pub components: Vec<Component>,
    pub connections: Vec<Connection>,
    /// Global dof of each component's (left, right) port.
    pub dof_map: Vec<[usize; 2]>,
    pub n_global: usize,
    /// Through-axis position of each global dof.
    #[serde(serialize_with = "serialize_positions")]
    pub dof_x: Vec<Rational>,
}

fn serialize_positions<S: serde::Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(to_f64))
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        self.0[a.max(b)] = a.min(b);
    }

    /// Dense labels in order of first appearance.
    fn labels(&mut self) -> (Vec<usize>, usize) {
        let mut seen = BTreeMap::new();
        let labels = (0..self.0.len())
            .map(|i| {
                let r = self.find(i);
                let n = seen.len();
                *seen.entry(r).or_insert(n)
            })
            .collect();
        (labels, seen.len())
    }
}

/// Connects components over their shared faces and numbers the ports. Two ports share a
/// global dof exactly when their faces coincide.
pub fn connect_system(t: &PdeTemplate, components: Vec<Component>) -> Result<System, ComponentError> {
    let n = components.len();
    let connections: Vec<Connection> = t
        .contacts
        .iter()
        .map(|c| Connection {
            first: t.faces[c.low_face].component,
            second: t.faces[c.high_face].component,
            faces: (c.low_face, c.high_face),
            area: c.area.clone(),
        })
        .collect();
    for &(a, b) in &t.graph_edges {
        if !connections.iter().any(|c| (c.first.min(c.second), c.first.max(c.second)) == (a, b)) {
            return Err(ComponentError::NoSharedFace { first: components[a].name.clone(), second: components[b].name.clone() });
        }
    }
    if n > 1 {
        if let Some(c) = (0..n).find(|&c| !connections.iter().any(|k| k.first == c || k.second == c)) {
            return Err(ComponentError::DanglingComponent { component: components[c].name.clone() });
        }
    }

    let mut uf = UnionFind::new(2 * n);
    for k in &connections {
        let (fa, fb) = (&t.faces[k.faces.0], &t.faces[k.faces.1]);
        let is_port = |f: &crate::template::FaceRecord| matches!(f.kind, FaceKind::Low(0) | FaceKind::High(0));
        if is_port(fa) && is_port(fb) && k.area == fa.area && k.area == fb.area {
            uf.union(2 * k.first + 1, 2 * k.second);
        }
    }
    let (labels, n_global) = uf.labels();
    let dof_map: Vec<[usize; 2]> = (0..n).map(|c| [labels[2 * c], labels[2 * c + 1]]).collect();
    let mut dof_x = vec![Rational::zero(); n_global];
    for (c, ports) in components.iter().zip(&dof_map) {
        dof_x[ports[0]] = c.x_left().clone();
        dof_x[ports[1]] = c.x_right().clone();
    }
    Ok(System { components, connections, dof_map, n_global, dof_x })
}

/// The part of a component cross-section lying in a slice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlicePiece {
    pub component: usize,
    /// Template face index when the slice passes through a through-axis face of the component.
    pub face: Option<usize>,
    pub section: Cuboid,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Slice {
    #[serde(serialize_with = "serialize_rational")]
    pub x1: Rational,
    pub pieces: Vec<SlicePiece>,
    /// Facewise-connected groups of piece indices.
    pub parts: Vec<Vec<usize>>,
}

impl Slice {
    pub fn part_of(&self, piece: usize) -> usize {
        self.parts.iter().position(|p| p.contains(&piece)).expect("every piece is in a part")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceSet {
    pub slices: Vec<Slice>,
}

impl SliceSet {
    pub fn stations(&self) -> Vec<Rational> {
        self.slices.iter().map(|s| s.x1.clone()).collect()
    }
}

/// Rectangles that overlap or share an edge of positive length.
fn facewise_adjacent(a: &Cuboid, b: &Cuboid) -> bool {
    let mut touching = 0;
    for i in 0..a.dim() {
        let lo = a.lo[i].clone().max(b.lo[i].clone());
        let hi = a.hi[i].clone().min(b.hi[i].clone());
        if hi < lo {
            return false;
        }
        if hi == lo {
            touching += 1;
        }
    }
    touching <= 1
}

fn flood_fill(sections: &[&Cuboid]) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(sections.len());
    for i in 0..sections.len() {
        for j in i + 1..sections.len() {
            if facewise_adjacent(sections[i], sections[j]) {
                uf.union(i, j);
            }
        }
    }
    let (labels, n) = uf.labels();
    let mut parts = vec![Vec::new(); n];
    for (i, l) in labels.into_iter().enumerate() {
        parts[l].push(i);
    }
    parts
}

/// Slices of the closed domain at every distinct through-axis face station.
pub fn find_slices(system: &System) -> SliceSet {
    let mut stations: Vec<Rational> = system.components.iter().flat_map(|c| [c.x_left().clone(), c.x_right().clone()]).collect();
    stations.sort();
    stations.dedup();
    let slices = stations
        .into_iter()
        .map(|x1| {
            let pieces: Vec<SlicePiece> = system
                .components
                .iter()
                .enumerate()
                .filter(|(_, c)| *c.x_left() <= x1 && x1 <= *c.x_right())
                .map(|(ci, c)| {
                    let face = if *c.x_left() == x1 {
                        Some(c.ports[0])
                    } else if *c.x_right() == x1 {
                        Some(c.ports[1])
                    } else {
                        None
                    };
                    SlicePiece { component: ci, face, section: c.section() }
                })
                .collect();
            let sections: Vec<&Cuboid> = pieces.iter().map(|p| &p.section).collect();
            let parts = flood_fill(&sections);
            Slice { x1, pieces, parts }
        })
        .collect();
    SliceSet { slices }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Parallelepiped {
    /// Member components ordered along the through axis.
    pub components: Vec<usize>,
    #[serde(serialize_with = "serialize_rational")]
    pub x_left: Rational,
    #[serde(serialize_with = "serialize_rational")]
    pub x_right: Rational,
    #[serde(serialize_with = "serialize_rational")]
    pub cross_area: Rational,
    pub section: Cuboid,
    /// Whether the left and right end faces carry Robin data on their exterior parts.
    pub robin: [bool; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParallelepipedSet {
    pub members: Vec<Parallelepiped>,
}

/// Merges components joined face to face on through-axis faces with identical sections.
pub fn find_parallelepipeds(t: &PdeTemplate, system: &System) -> ParallelepipedSet {
    let comps = &system.components;
    let mut uf = UnionFind::new(comps.len());
    for k in &system.connections {
        let (a, b) = (&comps[k.first], &comps[k.second]);
        let through = t.faces[k.faces.0].kind == FaceKind::High(0);
        if through && a.section() == b.section() {
            uf.union(k.first, k.second);
        }
    }
    let (labels, n) = uf.labels();
    let mut groups = vec![Vec::new(); n];
    for (c, l) in labels.into_iter().enumerate() {
        groups[l].push(c);
    }
    let robin = |face: usize| matches!(t.faces[face].bc, Some(BoundaryCondition::Robin { .. })) && t.faces[face].is_exterior();
    let members = groups
        .into_iter()
        .map(|mut g| {
            g.sort_by(|&a, &b| comps[a].x_left().cmp(comps[b].x_left()));
            let (first, last) = (&comps[g[0]], &comps[*g.last().unwrap()]);
            Parallelepiped {
                x_left: first.x_left().clone(),
                x_right: last.x_right().clone(),
                cross_area: first.cross_area(),
                section: first.section(),
                robin: [robin(first.ports[0]), robin(last.ports[1])],
                components: g,
            }
        })
        .collect();
    ParallelepipedSet { members }
}

/// Dof numbering for the slice-uniform trial space: one dof per connected part of each slice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoalescedDofs {
    pub n: usize,
    /// Dof of each (slice, piece).
    pub piece_dof: Vec<Vec<usize>>,
    /// Global dof of each component's (left, right) port.
    pub ports: Vec<[usize; 2]>,
}

impl CoalescedDofs {
    /// Dof carried by `component` at slice `slice`, if the slice meets it.
    pub fn dof_at(&self, slices: &SliceSet, slice: usize, component: usize) -> Option<usize> {
        slices.slices[slice].pieces.iter().position(|p| p.component == component).map(|i| self.piece_dof[slice][i])
    }
}

pub fn coalesce_slice_dofs(system: &System, slices: &SliceSet) -> CoalescedDofs {
    let mut n = 0;
    let mut piece_dof = Vec::new();
    for s in &slices.slices {
        let mut dofs = vec![0; s.pieces.len()];
        for part in &s.parts {
            for &p in part {
                dofs[p] = n;
            }
            n += 1;
        }
        piece_dof.push(dofs);
    }
    let station = |x: &Rational| slices.slices.iter().position(|s| s.x1 == *x).expect("station exists");
    let ports = system
        .components
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let at = |x: &Rational| {
                let j = station(x);
                let i = slices.slices[j].pieces.iter().position(|p| p.component == ci).unwrap();
                piece_dof[j][i]
            };
            [at(c.x_left()), at(c.x_right())]
        })
        .collect();
    CoalescedDofs { n, piece_dof, ports }
}

/// Coarser numbering with a single dof per slice, merging its connected parts.
pub fn coalesce_whole_slices(dofs: &CoalescedDofs) -> CoalescedDofs {
    let mut slice_of = vec![0; dofs.n];
    for (j, row) in dofs.piece_dof.iter().enumerate() {
        for &d in row {
            slice_of[d] = j;
        }
    }
    CoalescedDofs {
        n: dofs.piece_dof.len(),
        piece_dof: dofs.piece_dof.iter().enumerate().map(|(j, row)| vec![j; row.len()]).collect(),
        ports: dofs.ports.iter().map(|p| [slice_of[p[0]], slice_of[p[1]]]).collect(),
    }
}

#[cfg(test)]
mod tests;
