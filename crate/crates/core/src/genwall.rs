//! Nondimensional heat transfer rate of a generalized wall and its variational bounds.
//!
//! With `J(w) = A(w, w)/2 - F(w)`, `H = C1 (2 J(T) + C2)`. Minimizing `J` over the
//! slice-uniform space gives the upper bound, over the parallelepiped-decoupled space the
//! lower bound.

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::component::{CoalescedDofs, ParallelepipedSet, SliceSet, System};
use crate::expr::{to_f64, Rational};
use crate::quasi1d::wall_element;
use crate::template::{BoundaryCondition, GeneralizedWallInfo, PdeTemplate, Qoi, TemplateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenWallError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("no nondimensional heat transfer rate requested")]
    NoRateQoi,
    #[error("bound system is singular")]
    SingularSystem,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HConstants {
    pub c1: f64,
    pub c2: f64,
    #[serde(skip)]
    pub c1_exact: Option<Rational>,
    #[serde(skip)]
    pub c2_exact: Rational,
    pub conductivity: f64,
    pub delta_t: f64,
    pub length: f64,
    pub area_left: f64,
    pub area_right: f64,
    pub h_left: f64,
    pub h_right: f64,
    pub t_left: f64,
    pub t_right: f64,
}

impl HConstants {
    /// `H` from the functional value at a minimizer.
    pub fn h_from_functional(&self, two_j: f64) -> f64 {
        if self.delta_t == 0.0 {
            0.0
        } else {
            self.c1 * (two_j + self.c2)
        }
    }

    /// `H = Q / (k dT a)` from the heat rate `Q` entering over the left Robin faces.
    pub fn h_from_rate(&self, q: f64) -> f64 {
        if self.delta_t == 0.0 {
            0.0
        } else {
            q / (self.conductivity * self.delta_t * self.length)
        }
    }
}

/// `C1 = 1/(k dT^2 a)` and `C2 = sum over Robin end faces of h T_f^2 |face|`, exactly.
pub fn compute_constants(t: &PdeTemplate, info: &GeneralizedWallInfo) -> Result<HConstants, GenWallError> {
    let norm = t
        .qoi
        .iter()
        .find_map(|q| match q {
            Qoi::NondimensionalH { normalization, .. } => Some(normalization),
            _ => None,
        })
        .ok_or(GenWallError::NoRateQoi)?;
    let k = t.value(&norm.conductivity)?;
    let dt = t.value(&norm.hot_temperature)? - t.value(&norm.cold_temperature)?;
    let a = t.value(&norm.length)?;
    let c1 = (!dt.is_zero()).then(|| Rational::from_integer(1.into()) / (&k * &dt * &dt * &a));
    let mut c2 = Rational::zero();
    let mut areas = [Rational::zero(), Rational::zero()];
    for (i, side) in [&info.left, &info.right].into_iter().enumerate() {
        let h = t.value(&side.h)?;
        let tf = t.value(&side.fluid_temperature)?;
        for &f in &side.faces {
            c2 += &h * &tf * &tf * &t.faces[f].exterior_area;
            areas[i] += &t.faces[f].exterior_area;
        }
    }
    Ok(HConstants {
        c1: c1.as_ref().map_or(f64::INFINITY, to_f64),
        c2: to_f64(&c2),
        c1_exact: c1,
        c2_exact: c2,
        conductivity: to_f64(&k),
        delta_t: to_f64(&dt),
        length: to_f64(&a),
        area_left: to_f64(&areas[0]),
        area_right: to_f64(&areas[1]),
        h_left: t.value_f64(&info.left.h)?,
        h_right: t.value_f64(&info.right.h)?,
        t_left: t.value_f64(&info.left.fluid_temperature)?,
        t_right: t.value_f64(&info.right.fluid_temperature)?,
    })
}

/// A network of conductances with Robin terms `(dof, hA, T_f)`.
struct Network {
    k: DMatrix<f64>,
    f: DVector<f64>,
}

/// Minimizer of a network functional.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkSolution {
    pub values: Vec<f64>,
    /// `2 J(w*)` evaluated directly as `w K w - 2 F w`.
    pub two_j: f64,
    /// `|2 J(w*) + F(w*)|` relative to `|F(w*)|`.
    pub identity_residual: f64,
}

impl Network {
    fn new(n: usize) -> Network {
        Network { k: DMatrix::zeros(n, n), f: DVector::zeros(n) }
    }

    fn conductance(&mut self, a: usize, b: usize, k: f64, area: f64, length: f64) {
        let e = wall_element(k, area, length);
        let d = [a, b];
        for i in 0..2 {
            for j in 0..2 {
                self.k[(d[i], d[j])] += e.k[(i, j)];
            }
        }
    }

    fn robin(&mut self, d: usize, ha: f64, tf: f64) {
        self.k[(d, d)] += ha;
        self.f[d] += ha * tf;
    }

    fn solve(&self) -> Result<NetworkSolution, GenWallError> {
        let chol = self.k.clone().cholesky().ok_or(GenWallError::SingularSystem)?;
        let n = self.f.len();
        let pivot = (0..n).map(|i| chol.l_dirty()[(i, i)].powi(2)).fold(f64::INFINITY, f64::min);
        if pivot <= 1e-13 * self.k.diagonal().amax() {
            return Err(GenWallError::SingularSystem);
        }
        let w = chol.solve(&self.f);
        let fw = self.f.dot(&w);
        let two_j = w.dot(&(&self.k * &w)) - 2.0 * fw;
        let identity_residual = if fw == 0.0 { (two_j + fw).abs() } else { (two_j + fw).abs() / fw.abs() };
        Ok(NetworkSolution { values: w.iter().copied().collect(), two_j, identity_residual })
    }
}

fn robin_data(t: &PdeTemplate, face: usize) -> Result<Option<(f64, f64)>, GenWallError> {
    let rec = &t.faces[face];
    match &rec.bc {
        Some(BoundaryCondition::Robin { h, fluid_temperature }) if rec.is_exterior() => {
            Ok(Some((t.value_f64(h)? * to_f64(&rec.exterior_area), t.value_f64(fluid_temperature)?)))
        }
        _ => Ok(None),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpperBound {
    pub h: f64,
    /// Value of the minimizer at each coalesced slice dof.
    pub port_values: Vec<f64>,
    pub identity_residual: f64,
}

/// Minimizes over functions constant on each connected part of each slice and linear in
/// `x_1` between slices within every component.
pub fn compute_upper_bound(
    t: &PdeTemplate,
    system: &System,
    slices: &SliceSet,
    dofs: &CoalescedDofs,
    constants: &HConstants,
) -> Result<UpperBound, GenWallError> {
    let mut net = Network::new(dofs.n);
    for (ci, c) in system.components.iter().enumerate() {
        let k = to_f64(&c.conductivity);
        let area = to_f64(&c.cross_area());
        let inside: Vec<usize> = (0..slices.slices.len())
            .filter(|&j| c.x_left() <= &slices.slices[j].x1 && slices.slices[j].x1 <= *c.x_right())
            .collect();
        for w in inside.windows(2) {
            let len = to_f64(&(&slices.slices[w[1]].x1 - &slices.slices[w[0]].x1));
            let (a, b) = (dofs.dof_at(slices, w[0], ci).unwrap(), dofs.dof_at(slices, w[1], ci).unwrap());
            net.conductance(a, b, k, area, len);
        }
        for (side, &face) in c.ports.iter().enumerate() {
            if let Some((ha, tf)) = robin_data(t, face)? {
                net.robin(dofs.ports[ci][side], ha, tf);
            }
        }
    }
    let sol = net.solve()?;
    Ok(UpperBound {
        h: constants.h_from_functional(sol.two_j),
        port_values: sol.values,
        identity_residual: sol.identity_residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemberField {
    pub components: Vec<usize>,
    /// Station positions and minimizer values along the member; empty when the member has
    /// no Robin face and contributes nothing.
    pub stations: Vec<f64>,
    pub values: Vec<f64>,
    pub two_j: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBound {
    pub h: f64,
    pub members: Vec<MemberField>,
    pub identity_residual: f64,
}

/// Minimizes independently over each parallelepiped, each a 1d chain insulated on the sides.
/// A member without Robin faces has a constant minimizer, fixed to zero mean, and adds nothing.
pub fn compute_lower_bound(
    t: &PdeTemplate,
    system: &System,
    ppds: &ParallelepipedSet,
    constants: &HConstants,
) -> Result<LowerBound, GenWallError> {
    let mut members = Vec::new();
    let mut two_j = 0.0;
    let mut identity_residual: f64 = 0.0;
    for m in &ppds.members {
        let first = &system.components[m.components[0]];
        let last = &system.components[*m.components.last().unwrap()];
        let ends = [robin_data(t, first.ports[0])?, robin_data(t, last.ports[1])?];
        if ends.iter().all(Option::is_none) {
            members.push(MemberField { components: m.components.clone(), stations: Vec::new(), values: Vec::new(), two_j: 0.0 });
            continue;
        }
        let n = m.components.len() + 1;
        let mut net = Network::new(n);
        let mut stations = vec![to_f64(first.x_left())];
        for (i, &ci) in m.components.iter().enumerate() {
            let c = &system.components[ci];
            net.conductance(i, i + 1, to_f64(&c.conductivity), to_f64(&c.cross_area()), to_f64(&c.length()));
            stations.push(to_f64(c.x_right()));
        }
        for (d, end) in [0, n - 1].into_iter().zip(ends) {
            if let Some((ha, tf)) = end {
                net.robin(d, ha, tf);
            }
        }
        let sol = net.solve()?;
        two_j += sol.two_j;
        identity_residual = identity_residual.max(sol.identity_residual);
        members.push(MemberField { components: m.components.clone(), stations, values: sol.values, two_j: sol.two_j });
    }
    Ok(LowerBound { h: constants.h_from_functional(two_j), members, identity_residual })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundResult {
    pub h_lb: f64,
    pub h_ub: f64,
    pub h_fe: Option<f64>,
    pub fe_error_estimate: Option<f64>,
    pub constants: HConstants,
    pub upper: UpperBound,
    pub lower: LowerBound,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OrderingReport {
    pub violations: Vec<String>,
}

impl OrderingReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `H_LB <= H_UB` to 1e-12 and, with a finite element value, `H_LB - eps <= H_FE <= H_UB + eps`.
pub fn check_ordering(r: &BoundResult) -> OrderingReport {
    let mut out = OrderingReport::default();
    if r.h_lb > r.h_ub + 1e-12 {
        out.violations.push(format!("lower bound {} exceeds upper bound {}", r.h_lb, r.h_ub));
    }
    if let Some(fe) = r.h_fe {
        let eps = r.fe_error_estimate.unwrap_or(0.0);
        if fe < r.h_lb - eps || fe > r.h_ub + eps {
            out.violations.push(format!("finite element value {fe} outside [{} - {eps}, {} + {eps}]", r.h_lb, r.h_ub));
        }
    }
    out
}

/// Both bounds from the template and its assembled system.
pub fn solve_bounds(t: &PdeTemplate, system: &System, info: &GeneralizedWallInfo) -> Result<BoundResult, GenWallError> {
    let constants = compute_constants(t, info)?;
    let slices = crate::component::find_slices(system);
    let dofs = crate::component::coalesce_slice_dofs(system, &slices);
    let upper = compute_upper_bound(t, system, &slices, &dofs, &constants)?;
    let ppds = crate::component::find_parallelepipeds(t, system);
    let lower = compute_lower_bound(t, system, &ppds, &constants)?;
    Ok(BoundResult { h_lb: lower.h, h_ub: upper.h, h_fe: None, fe_error_estimate: None, constants, upper, lower })
}
