//! Closed-form solution of quasi-1d systems by static condensation onto component ports and
//! direct stiffness assembly.
//!
//! Heat rates and fluxes are reported positive when heat leaves the solid through the face,
//! and a prescribed flux is read with the same sign.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::Serialize;
use thiserror::Error;

use crate::component::System;
use crate::expr::to_f64;
use crate::template::{BoundaryCondition, FaceKind, PdeTemplate, Qoi, TemplateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Quasi1dError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("fin parameter m vanishes")]
    DegenerateFin,
    #[error("global system is singular (no temperature or Robin anchor)")]
    SingularSystem,
    #[error("{coordinate} = {at} lies outside the domain")]
    LocationOutsideDomain { coordinate: String, at: f64 },
    #[error("unsupported boundary condition on {face}")]
    UnsupportedBoundary { face: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    WallLinear,
    Fin,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FinData {
    pub m: f64,
    pub h: f64,
    pub fluid_temperature: f64,
}

/// A component reduced to its two ports.
#[derive(Clone, Debug, PartialEq)]
pub struct CondensedElement {
    pub kind: ElementKind,
    pub k: Matrix2<f64>,
    pub f: Vector2<f64>,
    pub fin: Option<FinData>,
    /// Uniform source per unit length from a prescribed lateral flux.
    pub source: f64,
    /// Port temperatures fixed by Dirichlet data.
    pub fixed: [Option<f64>; 2],
}

/// `z coth z`, `z csch z` and `tanh(z/2)/z`, with series near zero.
fn fin_functions(z: f64) -> (f64, f64, f64) {
    if z < 1e-3 {
        let z2 = z * z;
        (1.0 + z2 / 3.0 - z2 * z2 / 45.0, 1.0 - z2 / 6.0 + 7.0 * z2 * z2 / 360.0, 0.5 - z2 / 24.0 + z2 * z2 / 240.0)
    } else {
        (z / z.tanh(), z / z.sinh(), (z / 2.0).tanh() / z)
    }
}

/// Conduction element `(kA/L) [[1, -1], [-1, 1]]`.
pub fn wall_element(k: f64, area: f64, length: f64) -> CondensedElement {
    let g = k * area / length;
    CondensedElement {
        kind: ElementKind::WallLinear,
        k: Matrix2::new(g, -g, -g, g),
        f: Vector2::zeros(),
        fin: None,
        source: 0.0,
        fixed: [None, None],
    }
}

/// Fin element for `kA T'' = hP (T - T_f)`: with `m = sqrt(hP/(kA))`,
/// `K = kAm [[coth mL, -csch mL], [-csch mL, coth mL]]` and `f = (hP T_f/m) tanh(mL/2) [1, 1]`.
pub fn fin_element(
    k: f64,
    area: f64,
    perimeter: f64,
    length: f64,
    h: f64,
    fluid_temperature: f64,
) -> Result<CondensedElement, Quasi1dError> {
    let m = (h * perimeter / (k * area)).sqrt();
    if m == 0.0 || !m.is_finite() {
        return Err(Quasi1dError::DegenerateFin);
    }
    let (zcoth, zcsch, tanh_half) = fin_functions(m * length);
    let g = k * area / length;
    let load = h * perimeter * length * fluid_temperature * tanh_half;
    Ok(CondensedElement {
        kind: ElementKind::Fin,
        k: Matrix2::new(g * zcoth, -g * zcsch, -g * zcsch, g * zcoth),
        f: Vector2::new(load, load),
        fin: Some(FinData { m, h, fluid_temperature }),
        source: 0.0,
        fixed: [None, None],
    })
}

struct Geometry {
    k: f64,
    area: f64,
    perimeter: f64,
    length: f64,
}

fn geometry(system: &System, c: usize) -> Geometry {
    let comp = &system.components[c];
    Geometry {
        k: to_f64(&comp.conductivity),
        area: to_f64(&comp.cross_area()),
        perimeter: to_f64(&comp.perimeter()),
        length: to_f64(&comp.length()),
    }
}

/// Adds axial face data to the port equations.
fn augment_ports(t: &PdeTemplate, system: &System, c: usize, e: &mut CondensedElement) -> Result<(), Quasi1dError> {
    for (side, &face) in system.components[c].ports.iter().enumerate() {
        let rec = &t.faces[face];
        let area = to_f64(&rec.exterior_area);
        match &rec.bc {
            Some(BoundaryCondition::Robin { h, fluid_temperature }) => {
                let h = t.value_f64(h)?;
                e.k[(side, side)] += h * area;
                e.f[side] += h * area * t.value_f64(fluid_temperature)?;
            }
            Some(BoundaryCondition::Neumann { flux }) => e.f[side] -= t.value_f64(flux)? * area,
            Some(BoundaryCondition::Dirichlet { temperature }) => e.fixed[side] = Some(t.value_f64(temperature)?),
            Some(BoundaryCondition::Insulated) | None => {}
        }
    }
    Ok(())
}

fn lateral_bc<'a>(t: &'a PdeTemplate, system: &System, c: usize) -> Option<(usize, &'a BoundaryCondition)> {
    let lateral = system.components[c].faces.iter().copied().find(|&f| t.faces[f].kind == FaceKind::Lateral)?;
    t.faces[lateral].bc.as_ref().map(|bc| (lateral, bc))
}

/// Wall element with port data and, for a prescribed lateral flux, a uniform source.
pub fn condense_wall(t: &PdeTemplate, system: &System, c: usize) -> Result<CondensedElement, Quasi1dError> {
    let g = geometry(system, c);
    let mut e = wall_element(g.k, g.area, g.length);
    if let Some((_, BoundaryCondition::Neumann { flux })) = lateral_bc(t, system, c) {
        e.source = -t.value_f64(flux)? * g.perimeter;
        e.f += Vector2::repeat(e.source * g.length / 2.0);
    }
    augment_ports(t, system, c, &mut e)?;
    Ok(e)
}

/// Fin element with port data for a component with lateral Robin data.
pub fn condense_fin(t: &PdeTemplate, system: &System, c: usize) -> Result<CondensedElement, Quasi1dError> {
    let g = geometry(system, c);
    let Some((_, BoundaryCondition::Robin { h, fluid_temperature })) = lateral_bc(t, system, c) else {
        return Err(Quasi1dError::DegenerateFin);
    };
    let mut e = fin_element(g.k, g.area, g.perimeter, g.length, t.value_f64(h)?, t.value_f64(fluid_temperature)?)?;
    augment_ports(t, system, c, &mut e)?;
    Ok(e)
}

/// Picks the element type from the lateral face condition.
pub fn condense(t: &PdeTemplate, system: &System, c: usize) -> Result<CondensedElement, Quasi1dError> {
    match lateral_bc(t, system, c) {
        Some((_, BoundaryCondition::Robin { .. })) => match condense_fin(t, system, c) {
            Err(Quasi1dError::DegenerateFin) => condense_wall(t, system, c),
            other => other,
        },
        Some((face, BoundaryCondition::Dirichlet { .. })) => Err(Quasi1dError::UnsupportedBoundary { face: t.face_label(face) }),
        _ => condense_wall(t, system, c),
    }
}

/// Result of the global port solve.
#[derive(Clone, Debug, PartialEq)]
pub struct PortSolve {
    pub values: Vec<f64>,
    /// `max |K u - f|` over free rows relative to `max |f|`.
    pub residual: f64,
}

/// Assembles condensed elements over the port map and solves by Cholesky factorization.
pub fn assemble_and_solve(system: &System, elements: &[CondensedElement]) -> Result<PortSolve, Quasi1dError> {
    let n = system.n_global;
    let mut k = DMatrix::<f64>::zeros(n, n);
    let mut f = DVector::<f64>::zeros(n);
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for (e, dofs) in elements.iter().zip(&system.dof_map) {
        for i in 0..2 {
            f[dofs[i]] += e.f[i];
            for j in 0..2 {
                k[(dofs[i], dofs[j])] += e.k[(i, j)];
            }
            if let Some(v) = e.fixed[i] {
                fixed[dofs[i]] = Some(v);
            }
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let mut values: Vec<f64> = fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
    let kr = DMatrix::from_fn(free.len(), free.len(), |i, j| k[(free[i], free[j])]);
    let fr = DVector::from_fn(free.len(), |i, _| {
        f[free[i]] - (0..n).filter_map(|j| fixed[j].map(|v| k[(free[i], j)] * v)).sum::<f64>()
    });
    if !free.is_empty() {
        let chol = kr.clone().cholesky().ok_or(Quasi1dError::SingularSystem)?;
        let pivot = (0..free.len()).map(|i| chol.l_dirty()[(i, i)].powi(2)).fold(f64::INFINITY, f64::min);
        if pivot <= 1e-13 * kr.diagonal().amax() {
            return Err(Quasi1dError::SingularSystem);
        }
        let u = chol.solve(&fr);
        for (i, &d) in free.iter().enumerate() {
            values[d] = u[i];
        }
    }
    let u = DVector::from_vec(values.clone());
    let r = &k * &u - &f;
    let residual =
        free.iter().map(|&i| r[i].abs()).fold(0.0, f64::max) / free.iter().map(|&i| f[i].abs()).fold(f64::MIN_POSITIVE, f64::max);
    Ok(PortSolve { values, residual })
}

/// Closed-form field of one component.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    /// `T = t0 + (t1 - t0) s + bubble s (1 - s)` with `s = (x - x0)/(x1 - x0)`.
    Affine { x0: f64, x1: f64, t0: f64, t1: f64, bubble: f64 },
    /// `T = T_f + c1 sinh(m (x - x0)) + c2 cosh(m (x - x0))`.
    Fin { x0: f64, x1: f64, m: f64, fluid_temperature: f64, c1: f64, c2: f64, t0: f64, t1: f64 },
}

impl Segment {
    pub fn interval(&self) -> (f64, f64) {
        match *self {
            Segment::Affine { x0, x1, .. } | Segment::Fin { x0, x1, .. } => (x0, x1),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let (a, b) = self.interval();
        let tol = 1e-12 * (b - a).abs().max(1.0);
        x >= a - tol && x <= b + tol
    }

    /// Temperature and its derivative at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match *self {
            Segment::Affine { x0, x1, t0, t1, bubble } => {
                let l = x1 - x0;
                let s = (x - x0) / l;
                (t0 + (t1 - t0) * s + bubble * s * (1.0 - s), ((t1 - t0) + bubble * (1.0 - 2.0 * s)) / l)
            }
            Segment::Fin { x0, x1, m, fluid_temperature, t0, t1, .. } => {
                // Evaluated in the form θ = [θ0 sinh(m(L-ξ)) + θ1 sinh(mξ)] / sinh(mL), which stays bounded.
                let (l, xi) = (x1 - x0, x - x0);
                let (a, b) = (t0 - fluid_temperature, t1 - fluid_temperature);
                let s = (m * l).sinh();
                let theta = (a * (m * (l - xi)).sinh() + b * (m * xi).sinh()) / s;
                let dtheta = m * (-a * (m * (l - xi)).cosh() + b * (m * xi).cosh()) / s;
                (fluid_temperature + theta, dtheta)
            }
        }
    }

    /// `n` equally spaced samples including both ends.
    pub fn samples(&self, n: usize) -> Vec<(f64, f64)> {
        let (a, b) = self.interval();
        (0..n)
            .map(|i| {
                let x = a + (b - a) * i as f64 / (n - 1) as f64;
                (x, self.eval(x).0)
            })
            .collect()
    }
}

/// Field of each component from its element and port values.
pub fn reconstruct_field(system: &System, elements: &[CondensedElement], ports: &[f64]) -> Vec<Segment> {
    system
        .components
        .iter()
        .zip(elements)
        .zip(&system.dof_map)
        .map(|((c, e), dofs)| {
            let (x0, x1) = (to_f64(c.x_left()), to_f64(c.x_right()));
            let (t0, t1) = (ports[dofs[0]], ports[dofs[1]]);
            match e.fin {
                Some(fin) => {
                    let (a, b) = (t0 - fin.fluid_temperature, t1 - fin.fluid_temperature);
                    let ml = fin.m * (x1 - x0);
                    Segment::Fin {
                        x0,
                        x1,
                        m: fin.m,
                        fluid_temperature: fin.fluid_temperature,
                        c1: (b - a * ml.cosh()) / ml.sinh(),
                        c2: a,
                        t0,
                        t1,
                    }
                }
                None => {
                    let l = x1 - x0;
                    let kc = to_f64(&c.conductivity) * to_f64(&c.cross_area());
                    Segment::Affine { x0, x1, t0, t1, bubble: e.source * l * l / (2.0 * kc) }
                }
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QoiValue {
    pub qoi: Qoi,
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quasi1dSolution {
    pub coordinate: String,
    pub port_values: Vec<f64>,
    pub port_positions: Vec<f64>,
    pub segments: Vec<Segment>,
    pub component_names: Vec<String>,
    pub qoi_results: Vec<QoiValue>,
    pub residual: f64,
    #[serde(skip)]
    pub elements: Vec<CondensedElement>,
}

impl Quasi1dSolution {
    pub fn temperature_at(&self, x: f64) -> Option<f64> {
        self.segments.iter().find(|s| s.contains(x)).map(|s| s.eval(x).0)
    }
}

/// Outward heat rate through the exterior part of a face.
pub fn face_heat_rate(t: &PdeTemplate, system: &System, sol: &Quasi1dSolution, face: usize) -> Result<f64, Quasi1dError> {
    let rec = &t.faces[face];
    let c = rec.component;
    let seg = &sol.segments[c];
    let g = geometry(system, c);
    let area = to_f64(&rec.exterior_area);
    let (x0, x1) = seg.interval();
    Ok(match rec.kind {
        FaceKind::Low(_) => g.k * seg.eval(x0).1 * area,
        FaceKind::High(_) => -g.k * seg.eval(x1).1 * area,
        FaceKind::Lateral => match (&rec.bc, seg) {
            (Some(BoundaryCondition::Robin { h, .. }), Segment::Fin { m, fluid_temperature, t0, t1, .. }) => {
                let (_, _, tanh_half) = fin_functions(m * (x1 - x0));
                t.value_f64(h)? * g.perimeter * (x1 - x0) * (t0 + t1 - 2.0 * fluid_temperature) * tanh_half
            }
            (Some(BoundaryCondition::Robin { h, fluid_temperature }), Segment::Affine { t0, t1, .. }) => {
                t.value_f64(h)? * g.perimeter * (x1 - x0) * ((t0 + t1) / 2.0 - t.value_f64(fluid_temperature)?)
            }
            (Some(BoundaryCondition::Neumann { flux }), _) => t.value_f64(flux)? * to_f64(&rec.area),
            _ => 0.0,
        },
    })
}

pub fn evaluate_qoi(t: &PdeTemplate, system: &System, sol: &Quasi1dSolution, qoi: &Qoi) -> Result<Option<f64>, Quasi1dError> {
    Ok(match qoi {
        Qoi::FieldPlot { .. } | Qoi::NondimensionalH { .. } => None,
        Qoi::TemperatureAt { coordinate, at } => {
            let x = to_f64(at);
            Some(
                sol.temperature_at(x)
                    .ok_or_else(|| Quasi1dError::LocationOutsideDomain { coordinate: coordinate.clone(), at: x })?,
            )
        }
        Qoi::HeatRateAt { faces } => Some(faces.iter().map(|&f| face_heat_rate(t, system, sol, f)).sum::<Result<f64, _>>()?),
        Qoi::FluxAt { faces } => {
            let rate: f64 = faces.iter().map(|&f| face_heat_rate(t, system, sol, f)).sum::<Result<f64, _>>()?;
            let area: f64 = faces.iter().map(|&f| to_f64(&t.faces[f].exterior_area)).sum();
            Some(if area > 0.0 { rate / area } else { 0.0 })
        }
    })
}

/// Condenses, assembles, solves and evaluates every quantity of interest.
pub fn solve_quasi1d(t: &PdeTemplate, system: &System) -> Result<Quasi1dSolution, Quasi1dError> {
    let elements = (0..system.components.len()).map(|c| condense(t, system, c)).collect::<Result<Vec<_>, _>>()?;
    let ports = assemble_and_solve(system, &elements)?;
    let segments = reconstruct_field(system, &elements, &ports.values);
    let mut sol = Quasi1dSolution {
        coordinate: t.components[0].axes[0].clone(),
        port_positions: system.dof_x.iter().map(to_f64).collect(),
        port_values: ports.values,
        segments,
        component_names: system.components.iter().map(|c| c.name.clone()).collect(),
        qoi_results: Vec::new(),
        residual: ports.residual,
        elements,
    };
    let mut results = Vec::new();
    for q in &t.qoi {
        results.push(QoiValue { qoi: q.clone(), value: evaluate_qoi(t, system, &sol, q)? });
    }
    sol.qoi_results = results;
    Ok(sol)
}

#[cfg(test)]
mod tests;
