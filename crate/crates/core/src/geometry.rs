//! Axis-aligned boxes with exact rational bounds.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::expr::{to_f64, Rational};
use num_traits::{One, Zero};

/// A closed box `[lo_0, hi_0] x ... x [lo_{d-1}, hi_{d-1}]`. A zero-dimensional box is a point.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cuboid {
    pub lo: Vec<Rational>,
    pub hi: Vec<Rational>,
}

impl Cuboid {
    pub fn new(bounds: Vec<(Rational, Rational)>) -> Cuboid {
        let (lo, hi) = bounds.into_iter().unzip();
        Cuboid { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn extent(&self, axis: usize) -> Rational {
        &self.hi[axis] - &self.lo[axis]
    }

    pub fn measure(&self) -> Rational {
        (0..self.dim()).fold(Rational::one(), |m, i| m * self.extent(i))
    }

    pub fn is_degenerate(&self) -> bool {
        (0..self.dim()).any(|i| self.hi[i] <= self.lo[i])
    }

    /// Intersection with positive measure, if any.
    pub fn intersect(&self, other: &Cuboid) -> Option<Cuboid> {
        let bounds: Vec<_> = (0..self.dim())
            .map(|i| (self.lo[i].clone().max(other.lo[i].clone()), self.hi[i].clone().min(other.hi[i].clone())))
            .collect();
        let c = Cuboid::new(bounds);
        (!c.is_degenerate()).then_some(c)
    }

    pub fn contains(&self, other: &Cuboid) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    /// True when the closed boxes share at least one point.
    pub fn touches(&self, other: &Cuboid) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.hi[i] && other.lo[i] <= self.hi[i])
    }

    /// The box with one axis removed.
    pub fn drop_axis(&self, axis: usize) -> Cuboid {
        let mut c = self.clone();
        c.lo.remove(axis);
        c.hi.remove(axis);
        c
    }

    /// `self \ other` as disjoint boxes.
    pub fn subtract(&self, other: &Cuboid) -> Vec<Cuboid> {
        let Some(cut) = self.intersect(other) else {
            return vec![self.clone()];
        };
        let mut out = Vec::new();
        let mut rest = self.clone();
        for i in 0..self.dim() {
            if rest.lo[i] < cut.lo[i] {
                let mut piece = rest.clone();
                piece.hi[i] = cut.lo[i].clone();
                out.push(piece);
                rest.lo[i] = cut.lo[i].clone();
            }
            if cut.hi[i] < rest.hi[i] {
                let mut piece = rest.clone();
                piece.lo[i] = cut.hi[i].clone();
                out.push(piece);
                rest.hi[i] = cut.hi[i].clone();
            }
        }
        out
    }
}

pub fn subtract_all(pieces: Vec<Cuboid>, cut: &Cuboid) -> Vec<Cuboid> {
    pieces.iter().flat_map(|p| p.subtract(cut)).collect()
}

pub fn total_measure(pieces: &[Cuboid]) -> Rational {
    pieces.iter().fold(Rational::zero(), |s, p| s + p.measure())
}

impl Serialize for Cuboid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Cuboid", 2)?;
        st.serialize_field("lo", &self.lo.iter().map(to_f64).collect::<Vec<_>>())?;
        st.serialize_field("hi", &self.hi.iter().map(to_f64).collect::<Vec<_>>())?;
        st.end()
    }
}
