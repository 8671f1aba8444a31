//! Conforming triangulations of rectangle unions with newest-vertex bisection.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeTag {
    RobinLeft,
    RobinRight,
    Insulated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: EdgeTag,
}

/// An axis-aligned rectangle `[lo, hi]` carrying a material index.
#[derive(Clone, Debug, PartialEq)]
pub struct Rect {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub material: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    /// `[a, b, c]` counterclockwise, with refinement edge `(a, b)` opposite the newest vertex `c`.
    pub triangles: Vec<[usize; 3]>,
    pub material: Vec<usize>,
    pub boundary: Vec<BoundaryEdge>,
}

/// Bookkeeping of one refinement pass.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Refinement {
    /// Index of the pre-refinement triangle each new triangle came from.
    pub parent: Vec<usize>,
    /// Endpoints of the bisected edge for each new vertex, in creation order.
    pub midpoints: Vec<[usize; 2]>,
}

impl Refinement {
    /// Interpolates a nodal field onto the refined mesh; exact for piecewise linears.
    pub fn prolong(&self, u: &[f64]) -> Vec<f64> {
        let mut out = u.to_vec();
        out.extend(self.midpoints.iter().map(|&[a, b]| 0.5 * (u[a] + u[b])));
        out
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl TriMesh {
    /// Structured mesh of a union of rectangles meeting along full grid lines. Every cell of
    /// the grid spanned by all rectangle edges is split into `n x n` quads, and every quad into
    /// two triangles sharing the diagonal as their refinement edge. `tag` labels boundary
    /// edges from their midpoint and the material of the adjacent triangle.
    pub fn from_rectangles(rects: &[Rect], n: usize, tag: impl Fn([f64; 2], usize) -> EdgeTag) -> TriMesh {
        assert!(n > 0);
        let breaks = |axis: usize| {
            let mut v: Vec<f64> = rects.iter().flat_map(|r| [r.lo[axis], r.hi[axis]]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let (xs, zs) = (breaks(0), breaks(1));
        let mut mesh = TriMesh::default();
        let mut lattice: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let coord = |lines: &[f64], k: usize| {
            let (cell, sub) = (k / n, k % n);
            if sub == 0 {
                lines[cell]
            } else {
                lines[cell] + (lines[cell + 1] - lines[cell]) * sub as f64 / n as f64
            }
        };
        for j in 0..zs.len() - 1 {
            for i in 0..xs.len() - 1 {
                let Some(r) =
                    rects.iter().find(|r| r.lo[0] <= xs[i] && xs[i + 1] <= r.hi[0] && r.lo[1] <= zs[j] && zs[j + 1] <= r.hi[1])
                else {
                    continue;
                };
                for q in 0..n {
                    for p in 0..n {
                        let mut vertex = |di: usize, dj: usize| {
                            let key = (i * n + p + di, j * n + q + dj);
                            *lattice.entry(key).or_insert_with(|| {
                                mesh.vertices.push([coord(&xs, key.0), coord(&zs, key.1)]);
                                mesh.vertices.len() - 1
                            })
                        };
                        let (p00, p10, p11, p01) = (vertex(0, 0), vertex(1, 0), vertex(1, 1), vertex(0, 1));
                        mesh.triangles.push([p11, p00, p10]);
                        mesh.triangles.push([p00, p11, p01]);
                        mesh.material.extend([r.material, r.material]);
                    }
                }
            }
        }
        for ([a, b], t) in mesh.free_edges() {
            let (va, vb) = (mesh.vertices[a], mesh.vertices[b]);
            let mid = [0.5 * (va[0] + vb[0]), 0.5 * (va[1] + vb[1])];
            mesh.boundary.push(BoundaryEdge { vertices: [a, b], tag: tag(mid, mesh.material[t]) });
        }
        mesh
    }

    /// Edges used by exactly one triangle, oriented counterclockwise, with that triangle.
    fn free_edges(&self) -> Vec<([usize; 2], usize)> {
        let mut count: BTreeMap<(usize, usize), (usize, [usize; 2], usize)> = BTreeMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                count.entry(edge_key(a, b)).and_modify(|e| e.0 += 1).or_insert((1, [a, b], t));
            }
        }
        count.into_values().filter(|e| e.0 == 1).map(|(_, v, t)| (v, t)).collect()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Signed area of triangle `t`.
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut min = f64::INFINITY;
        for tri in &self.triangles {
            let p = tri.map(|v| self.vertices[v]);
            for k in 0..3 {
                let (o, u, w) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let (d1, d2) = ([u[0] - o[0], u[1] - o[1]], [w[0] - o[0], w[1] - o[1]]);
                let cos = (d1[0] * d2[0] + d1[1] * d2[1]) / (d1[0].hypot(d1[1]) * d2[0].hypot(d2[1]));
                min = min.min(cos.clamp(-1.0, 1.0).acos());
            }
        }
        min
    }

    /// Checks orientation, that every edge is shared by two triangles or is a tagged boundary
    /// edge, and that no vertex hangs on an edge.
    pub fn check_conforming(&self) -> Result<(), String> {
        for t in 0..self.triangles.len() {
            if self.area(t) <= 0.0 {
                return Err(format!("triangle {t} is not positively oriented"));
            }
        }
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        let mut boundary: Vec<(usize, usize)> = self.boundary.iter().map(|e| edge_key(e.vertices[0], e.vertices[1])).collect();
        boundary.sort_unstable();
        if boundary.windows(2).any(|w| w[0] == w[1]) {
            return Err("duplicate boundary edge".into());
        }
        let mut free: Vec<(usize, usize)> = count.iter().filter(|(_, &c)| c == 1).map(|(&e, _)| e).collect();
        free.sort_unstable();
        if let Some((e, c)) = count.iter().find(|(_, &c)| c > 2) {
            return Err(format!("edge {e:?} shared by {c} triangles"));
        }
        if free != boundary {
            return Err("unmatched edges: hanging vertex or untagged boundary".into());
        }
        Ok(())
    }

    /// Bisects the marked triangles with newest-vertex bisection plus the closure that keeps the
    /// mesh conforming. Each pass bisects every affected edge once.
    pub fn refine(&mut self, marked: &[usize]) -> Refinement {
        let mut neighbours: HashMap<(usize, usize), [usize; 2]> = HashMap::with_capacity(self.triangles.len() * 2);
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let e = neighbours.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_insert([usize::MAX; 2]);
                e[usize::from(e[0] != usize::MAX)] = t;
            }
        }
        let mut split: HashMap<(usize, usize), usize> = HashMap::new();
        let mut queue = marked.to_vec();
        while let Some(t) = queue.pop() {
            let [a, b, _] = self.triangles[t];
            let e = edge_key(a, b);
            if split.contains_key(&e) {
                continue;
            }
            split.insert(e, usize::MAX);
            queue.extend(neighbours[&e].iter().copied().filter(|&o| o != t && o != usize::MAX));
        }

        let old = std::mem::take(&mut self.triangles);
        let old_material = std::mem::take(&mut self.material);
        let mut refinement = Refinement::default();
        let mut stack = Vec::new();
        for (t, tri) in old.into_iter().enumerate() {
            stack.push(tri);
            while let Some([a, b, c]) = stack.pop() {
                match split.get_mut(&edge_key(a, b)) {
                    Some(m) => {
                        if *m == usize::MAX {
                            *m = self.vertices.len();
                            let (pa, pb) = (self.vertices[a], self.vertices[b]);
                            self.vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                            refinement.midpoints.push([a, b]);
                        }
                        let m = *m;
                        stack.push([b, c, m]);
                        stack.push([c, a, m]);
                    }
                    None => {
                        self.triangles.push([a, b, c]);
                        self.material.push(old_material[t]);
                        refinement.parent.push(t);
                    }
                }
            }
        }
        let boundary = std::mem::take(&mut self.boundary);
        for e in boundary {
            let [a, b] = e.vertices;
            match split.get(&edge_key(a, b)) {
                Some(&m) => {
                    self.boundary.push(BoundaryEdge { vertices: [a, m], tag: e.tag });
                    self.boundary.push(BoundaryEdge { vertices: [m, b], tag: e.tag });
                }
                None => self.boundary.push(e),
            }
        }
        refinement
    }

    /// One bisection pass over every triangle.
    pub fn refine_all(&mut self) -> Refinement {
        let all: Vec<usize> = (0..self.triangles.len()).collect();
        self.refine(&all)
    }
}
