//! Adaptive linear finite elements for the `(x_1, x_3)` cross-section of a generalized wall.

pub mod mesh;
pub mod sparse;

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::component::System;
use crate::expr::to_f64;
use crate::genwall::HConstants;
use crate::template::{FaceKind, GeneralizedWallInfo, PdeTemplate};
pub use mesh::{BoundaryEdge, EdgeTag, Rect, Refinement, TriMesh};
use sparse::CsrMatrix;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("triangle {index} has non-positive area")]
    DegenerateTriangle { index: usize },
    #[error("finite element system is singular")]
    SingularSystem,
    #[error("discrete solve left relative residual {residual:e}")]
    InaccurateSolve { residual: f64 },
    #[error("dof cap {cap} reached before the tolerance was met")]
    BudgetExceeded { cap: usize, solution: Box<FeSolution> },
}

pub type Field = Box<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

pub struct RobinData {
    pub h: f64,
    pub fluid_temperature: Field,
}

/// Coefficients of `-div(k grad u) = f` with Robin data per boundary tag; untagged
/// boundary edges are insulated.
pub struct FeModel {
    /// Conductivity per material index.
    pub conductivity: Vec<f64>,
    pub robin: BTreeMap<EdgeTag, RobinData>,
    pub source: Option<Field>,
}

/// Degree-5 seven-point rule on the reference triangle: barycentric points and weights summing to 1.
fn triangle_rule() -> [([f64; 3], f64); 7] {
    let s = 15f64.sqrt();
    let (a1, b1, w1) = ((9.0 - 2.0 * s) / 21.0, (6.0 + s) / 21.0, (155.0 + s) / 1200.0);
    let (a2, b2, w2) = ((9.0 + 2.0 * s) / 21.0, (6.0 - s) / 21.0, (155.0 - s) / 1200.0);
    [
        ([1.0 / 3.0; 3], 0.225),
        ([a1, b1, b1], w1),
        ([b1, a1, b1], w1),
        ([b1, b1, a1], w1),
        ([a2, b2, b2], w2),
        ([b2, a2, b2], w2),
        ([b2, b2, a2], w2),
    ]
}

/// Four-point Gauss rule on `[0, 1]`.
fn edge_rule() -> [(f64, f64); 4] {
    let r = (6.0f64 / 5.0).sqrt();
    let (x1, x2) = ((3.0 / 7.0 - 2.0 / 7.0 * r).sqrt(), (3.0 / 7.0 + 2.0 / 7.0 * r).sqrt());
    let (w1, w2) = ((18.0 + 30f64.sqrt()) / 36.0, (18.0 - 30f64.sqrt()) / 36.0);
    [(x1, w1), (-x1, w1), (x2, w2), (-x2, w2)].map(|(x, w)| (0.5 * (1.0 + x), 0.5 * w))
}

fn lerp(a: [f64; 2], b: [f64; 2], s: f64) -> [f64; 2] {
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

/// Area and basis gradients of triangle `t`.
fn gradients(mesh: &TriMesh, t: usize) -> (f64, [[f64; 2]; 3]) {
    let p = mesh.triangles[t].map(|v| mesh.vertices[v]);
    let area = mesh.area(t);
    let g = |i: usize| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        [(p[j][1] - p[k][1]) / (2.0 * area), (p[k][0] - p[j][0]) / (2.0 * area)]
    };
    (area, [g(0), g(1), g(2)])
}

fn edge_length(mesh: &TriMesh, e: &BoundaryEdge) -> f64 {
    let [a, b] = e.vertices.map(|v| mesh.vertices[v]);
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// Stiffness matrix and load vector. Element integrals of linears are exact; the source and
/// Robin loads use the degree-5 and four-point rules.
pub fn assemble_fe(mesh: &TriMesh, model: &FeModel) -> Result<(CsrMatrix, Vec<f64>), FemError> {
    let n = mesh.n_vertices();
    let mut entries = Vec::with_capacity(9 * mesh.triangles.len() + 4 * mesh.boundary.len());
    let mut load = vec![0.0; n];
    let rule = triangle_rule();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (area, g) = gradients(mesh, t);
        if area <= 0.0 {
            return Err(FemError::DegenerateTriangle { index: t });
        }
        let k = model.conductivity[mesh.material[t]];
        for i in 0..3 {
            for j in 0..3 {
                entries.push((tri[i], tri[j], k * area * (g[i][0] * g[j][0] + g[i][1] * g[j][1])));
            }
        }
        if let Some(f) = &model.source {
            let p = tri.map(|v| mesh.vertices[v]);
            for (lam, w) in rule {
                let x = [0, 1].map(|d| lam[0] * p[0][d] + lam[1] * p[1][d] + lam[2] * p[2][d]);
                let fx = f(x) * w * area;
                for i in 0..3 {
                    load[tri[i]] += fx * lam[i];
                }
            }
        }
    }
    for e in &mesh.boundary {
        let Some(robin) = model.robin.get(&e.tag) else { continue };
        let [a, b] = e.vertices;
        let len = edge_length(mesh, e);
        let m = robin.h * len / 6.0;
        entries.extend([(a, a, 2.0 * m), (b, b, 2.0 * m), (a, b, m), (b, a, m)]);
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        for (s, w) in edge_rule() {
            let g = robin.h * (robin.fluid_temperature)(lerp(pa, pb, s)) * w * len;
            load[a] += g * (1.0 - s);
            load[b] += g * s;
        }
    }
    Ok((CsrMatrix::from_triplets(n, entries), load))
}

fn has_robin(mesh: &TriMesh, model: &FeModel) -> bool {
    mesh.boundary.iter().any(|e| model.robin.get(&e.tag).is_some_and(|r| r.h > 0.0))
}

/// Sparse Cholesky solve of `K u = f`, checked to relative residual `tol`.
pub fn solve_fe(k: &CsrMatrix, f: &[f64], tol: f64) -> Result<(Vec<f64>, f64), FemError> {
    use faer::linalg::solvers::SolveCore;
    use faer::sparse::{SparseColMat, Triplet};
    let mut lower = Vec::with_capacity(k.val.len() / 2 + k.n);
    for i in 0..k.n {
        for q in k.row_ptr[i]..k.row_ptr[i + 1] {
            if k.col[q] >= i {
                lower.push(Triplet::new(k.col[q], i, k.val[q]));
            }
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(k.n, k.n, &lower).map_err(|_| FemError::SingularSystem)?;
    let llt = a.sp_cholesky(faer::Side::Lower).map_err(|_| FemError::SingularSystem)?;
    let mut rhs = faer::Mat::<f64>::from_fn(k.n, 1, |i, _| f[i]);
    llt.solve_in_place_with_conj(faer::Conj::No, rhs.as_mut());
    let u: Vec<f64> = (0..k.n).map(|i| rhs[(i, 0)]).collect();
    let residual = k.relative_residual(&u, f);
    if !residual.is_finite() || residual > tol {
        return Err(FemError::InaccurateSolve { residual });
    }
    Ok((u, residual))
}

/// Assembles and solves on `mesh`; returns the nodal values, stiffness matrix and relative residual.
pub fn solve_on(mesh: &TriMesh, model: &FeModel, tol: f64) -> Result<(Vec<f64>, CsrMatrix, f64), FemError> {
    if !has_robin(mesh, model) {
        return Err(FemError::SingularSystem);
    }
    let (k, f) = assemble_fe(mesh, model)?;
    let (u, residual) = solve_fe(&k, &f, tol)?;
    Ok((u, k, residual))
}

/// Triangle owning each boundary edge.
fn boundary_owners(mesh: &TriMesh) -> Vec<usize> {
    let mut owner = HashMap::with_capacity(mesh.boundary.len());
    for e in &mesh.boundary {
        owner.insert((e.vertices[0].min(e.vertices[1]), e.vertices[0].max(e.vertices[1])), usize::MAX);
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if let Some(o) = owner.get_mut(&(a.min(b), a.max(b))) {
                *o = t;
            }
        }
    }
    mesh.boundary.iter().map(|e| owner[&(e.vertices[0].min(e.vertices[1]), e.vertices[0].max(e.vertices[1]))]).collect()
}

/// Per-triangle share of `|||d|||^2`, with Robin edge terms given to the adjacent triangle.
pub fn element_energies(mesh: &TriMesh, model: &FeModel, d: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = (0..mesh.triangles.len())
        .map(|t| {
            let (area, g) = gradients(mesh, t);
            let tri = mesh.triangles[t];
            let grad = [0, 1].map(|c| (0..3).map(|i| d[tri[i]] * g[i][c]).sum::<f64>());
            model.conductivity[mesh.material[t]] * area * (grad[0] * grad[0] + grad[1] * grad[1])
        })
        .collect();
    for (e, t) in mesh.boundary.iter().zip(boundary_owners(mesh)) {
        if let Some(r) = model.robin.get(&e.tag) {
            let (da, db) = (d[e.vertices[0]], d[e.vertices[1]]);
            out[t] += r.h * edge_length(mesh, e) * (da * da + da * db + db * db) / 3.0;
        }
    }
    out
}

/// `int h (T_f - u) ds` over the edges tagged `tag`, per unit depth.
pub fn robin_rate(mesh: &TriMesh, model: &FeModel, u: &[f64], tag: EdgeTag) -> f64 {
    let Some(r) = model.robin.get(&tag) else { return 0.0 };
    mesh.boundary
        .iter()
        .filter(|e| e.tag == tag)
        .map(|e| {
            let [a, b] = e.vertices;
            let len = edge_length(mesh, e);
            edge_rule()
                .iter()
                .map(|&(s, w)| {
                    let uh = u[a] * (1.0 - s) + u[b] * s;
                    r.h * ((r.fluid_temperature)(lerp(mesh.vertices[a], mesh.vertices[b], s)) - uh) * w * len
                })
                .sum::<f64>()
        })
        .sum()
}

/// Energy-norm error `|||u - u_h|||` against a known solution with gradient `grad`.
pub fn exact_energy_error(
    mesh: &TriMesh,
    model: &FeModel,
    uh: &[f64],
    exact: &dyn Fn([f64; 2]) -> f64,
    grad: &dyn Fn([f64; 2]) -> [f64; 2],
) -> f64 {
    let rule = triangle_rule();
    let mut sum = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (area, g) = gradients(mesh, t);
        let gh = [0, 1].map(|c| (0..3).map(|i| uh[tri[i]] * g[i][c]).sum::<f64>());
        let p = tri.map(|v| mesh.vertices[v]);
        let k = model.conductivity[mesh.material[t]];
        for (lam, w) in rule {
            let x = [0, 1].map(|d| lam[0] * p[0][d] + lam[1] * p[1][d] + lam[2] * p[2][d]);
            let ge = grad(x);
            sum += k * w * area * ((ge[0] - gh[0]).powi(2) + (ge[1] - gh[1]).powi(2));
        }
    }
    for e in &mesh.boundary {
        let Some(r) = model.robin.get(&e.tag) else { continue };
        let [a, b] = e.vertices;
        let len = edge_length(mesh, e);
        for (s, w) in edge_rule() {
            let diff = exact(lerp(mesh.vertices[a], mesh.vertices[b], s)) - (uh[a] * (1.0 - s) + uh[b] * s);
            sum += r.h * diff * diff * w * len;
        }
    }
    sum.sqrt()
}

/// `L^2` error against a known solution.
pub fn exact_l2_error(mesh: &TriMesh, uh: &[f64], exact: &dyn Fn([f64; 2]) -> f64) -> f64 {
    let rule = triangle_rule();
    let mut sum = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.area(t);
        let p = tri.map(|v| mesh.vertices[v]);
        for (lam, w) in rule {
            let x = [0, 1].map(|d| lam[0] * p[0][d] + lam[1] * p[1][d] + lam[2] * p[2][d]);
            let uhx = lam[0] * uh[tri[0]] + lam[1] * uh[tri[1]] + lam[2] * uh[tri[2]];
            sum += w * area * (exact(x) - uhx).powi(2);
        }
    }
    sum.sqrt()
}

pub type QoiFn<'a> = &'a dyn Fn(&TriMesh, &[f64]) -> f64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoLevelEstimate {
    /// `|||u_{h/2} - u_h|||`.
    pub energy: f64,
    /// `|Q(u_{h/2}) - Q(u_h)|`.
    pub qoi: f64,
    pub fine_qoi: f64,
    pub fine_dofs: usize,
    /// Squared energy differences restricted to each coarse triangle.
    #[serde(skip)]
    pub indicators: Vec<f64>,
}

/// Solves once more on the mesh refined by one bisection pass everywhere and compares.
pub fn estimate_error_two_level(
    mesh: &TriMesh,
    model: &FeModel,
    u: &[f64],
    qoi: QoiFn,
    tol: f64,
) -> Result<TwoLevelEstimate, FemError> {
    let mut fine = mesh.clone();
    let refinement = fine.refine_all();
    let coarse_on_fine = refinement.prolong(u);
    let (uf, _, _) = solve_on(&fine, model, tol)?;
    let diff: Vec<f64> = uf.iter().zip(&coarse_on_fine).map(|(a, b)| a - b).collect();
    let mut indicators = vec![0.0; mesh.triangles.len()];
    for (child, e) in element_energies(&fine, model, &diff).into_iter().enumerate() {
        indicators[refinement.parent[child]] += e;
    }
    let fine_qoi = qoi(&fine, &uf);
    Ok(TwoLevelEstimate {
        energy: indicators.iter().sum::<f64>().sqrt(),
        qoi: (fine_qoi - qoi(mesh, u)).abs(),
        fine_qoi,
        fine_dofs: fine.n_vertices(),
        indicators,
    })
}

/// Smallest set of triangles, largest indicators first, carrying `fraction` of the total.
pub fn dorfler_mark(indicators: &[f64], fraction: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    let target = fraction * indicators.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for t in order {
        if acc >= target && !marked.is_empty() {
            break;
        }
        acc += indicators[t];
        marked.push(t);
    }
    marked
}

/// Refines the Dörfler-marked triangles with bisection and closure.
pub fn adapt_nvb(mesh: &mut TriMesh, indicators: &[f64], marking_fraction: f64) -> Refinement {
    let marked = dorfler_mark(indicators, marking_fraction);
    mesh.refine(&marked)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdaptiveOptions {
    /// Relative tolerance on the two-level QoI estimate.
    pub tol_qoi: f64,
    /// Tolerance on the two-level energy estimate relative to `|||u_h|||`.
    pub tol_energy: f64,
    pub max_dofs: usize,
    pub marking_fraction: f64,
    /// Quads per edge of each grid cell in the initial mesh.
    pub initial_subdivisions: usize,
    pub solver_tol: f64,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            tol_qoi: 1e-3,
            tol_energy: 1e-3,
            max_dofs: 200_000,
            marking_fraction: 0.5,
            initial_subdivisions: 2,
            solver_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub dofs: usize,
    pub qoi: f64,
    pub qoi_estimate: f64,
    pub energy_estimate: f64,
    pub energy_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeSolution {
    pub mesh: TriMesh,
    pub values: Vec<f64>,
    pub qoi: f64,
    pub qoi_estimate: f64,
    pub energy_estimate: f64,
    pub energy_norm: f64,
    /// `|f - K u| / |f|` of the final discrete solve.
    pub residual: f64,
    pub log: Vec<IterationRecord>,
}

/// Solve, estimate, mark and refine until both estimates meet their tolerances.
pub fn run_adaptive(mut mesh: TriMesh, model: &FeModel, qoi: QoiFn, opts: &AdaptiveOptions) -> Result<FeSolution, FemError> {
    let mut log = Vec::new();
    loop {
        let (u, k, residual) = solve_on(&mesh, model, opts.solver_tol)?;
        let est = estimate_error_two_level(&mesh, model, &u, qoi, opts.solver_tol)?;
        let value = qoi(&mesh, &u);
        let energy_norm = k.energy(&u).sqrt();
        log.push(IterationRecord {
            dofs: mesh.n_vertices(),
            qoi: value,
            qoi_estimate: est.qoi,
            energy_estimate: est.energy,
            energy_norm,
        });
        let done = est.qoi <= opts.tol_qoi * value.abs() && est.energy <= opts.tol_energy * energy_norm;
        let over_budget = mesh.n_vertices() >= opts.max_dofs;
        if done || over_budget {
            let solution = FeSolution {
                mesh,
                values: u,
                qoi: value,
                qoi_estimate: est.qoi,
                energy_estimate: est.energy,
                energy_norm,
                residual,
                log,
            };
            return if done {
                Ok(solution)
            } else {
                Err(FemError::BudgetExceeded { cap: opts.max_dofs, solution: Box::new(solution) })
            };
        }
        adapt_nvb(&mut mesh, &est.indicators, opts.marking_fraction);
    }
}

/// Structured mesh of the wall's `(x_1, x_3)` cross-section; materials are component indices.
pub fn mesh_brick_union(t: &PdeTemplate, system: &System, info: &GeneralizedWallInfo, n: usize) -> TriMesh {
    let rects: Vec<Rect> = system
        .components
        .iter()
        .enumerate()
        .map(|(ci, c)| Rect {
            lo: [to_f64(&c.cuboid.lo[0]), to_f64(&c.cuboid.lo[2])],
            hi: [to_f64(&c.cuboid.hi[0]), to_f64(&c.cuboid.hi[2])],
            material: ci,
        })
        .collect();
    TriMesh::from_rectangles(&rects, n, |mid, ci| {
        let r = &rects[ci];
        let kind = if mid[0] == r.lo[0] {
            FaceKind::Low(0)
        } else if mid[0] == r.hi[0] {
            FaceKind::High(0)
        } else if mid[1] == r.lo[1] {
            FaceKind::Low(2)
        } else {
            FaceKind::High(2)
        };
        match t.face(ci, kind) {
            Some(f) if info.left.faces.contains(&f) => EdgeTag::RobinLeft,
            Some(f) if info.right.faces.contains(&f) => EdgeTag::RobinRight,
            _ => EdgeTag::Insulated,
        }
    })
}

/// Conductivities and end-face Robin data of a generalized wall.
pub fn wall_model(system: &System, constants: &HConstants) -> FeModel {
    let (tl, tr) = (constants.t_left, constants.t_right);
    let mut robin = BTreeMap::new();
    robin.insert(EdgeTag::RobinLeft, RobinData { h: constants.h_left, fluid_temperature: Box::new(move |_| tl) });
    robin.insert(EdgeTag::RobinRight, RobinData { h: constants.h_right, fluid_temperature: Box::new(move |_| tr) });
    FeModel { conductivity: system.components.iter().map(|c| to_f64(&c.conductivity)).collect(), robin, source: None }
}

/// Out-of-plane depth of the wall (extent along `x_2`).
pub fn wall_depth(system: &System) -> f64 {
    to_f64(&system.components[0].cuboid.extent(1))
}

/// Adaptive solution of a generalized wall with `H` as the quantity of interest.
pub fn solve_wall_fe(
    t: &PdeTemplate,
    system: &System,
    info: &GeneralizedWallInfo,
    constants: &HConstants,
    opts: &AdaptiveOptions,
) -> Result<FeSolution, FemError> {
    let model = wall_model(system, constants);
    let depth = wall_depth(system);
    let h = |m: &TriMesh, u: &[f64]| constants.h_from_rate(depth * robin_rate(m, &model, u, EdgeTag::RobinLeft));
    run_adaptive(mesh_brick_union(t, system, info, opts.initial_subdivisions), &model, &h, opts)
}

#[cfg(test)]
mod tests;
