//! Deterministic SVG figures: heat-path graph, geometry, temperature field and bound panel.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::component::System;
use crate::expr::to_f64;
use crate::genwall::BoundResult;
use crate::parser::{EntityId, Frame, State};
use crate::quasi1d::Quasi1dSolution;
use crate::template::{BoundaryCondition, FaceKind, PdeTemplate};

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Svg {
        Svg { body: String::new(), width, height }
    }

    fn push(&mut self, element: String) {
        self.body.push_str("  ");
        self.body.push_str(&element);
        self.body.push('\n');
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, size: u32, s: &str) {
        self.push(format!(
            r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}">{}</text>"#,
            escape(s)
        ));
    }

    fn line(&mut self, a: [f64; 2], b: [f64; 2], style: &str) {
        self.push(format!(r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" {style}/>"#, a[0], a[1], b[0], b[1]));
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

/// Heat-path graph: solids boxed, fluids rounded, insulators dashed, laid out in
/// breadth-first layers from the first fluid. Parent and archetype entities are omitted.
pub fn render_graph_figure(frame: &Frame) -> String {
    // Parents and archetypes are groupings, not heat-path participants.
    let shown = |id: EntityId| {
        let e = frame.entity(id);
        !e.is_parent && !e.is_archetype
    };
    let mut nodes: Vec<EntityId> = frame.graph.nodes.iter().copied().filter(|&n| shown(n)).collect();
    for (i, e) in frame.entities.iter().enumerate() {
        if e.is_insulator && shown(EntityId(i)) && !nodes.contains(&EntityId(i)) {
            nodes.push(EntityId(i));
        }
    }
    if nodes.is_empty() {
        return Svg::new(200.0, 60.0).finish();
    }
    let edges: Vec<_> = frame.graph.edges.iter().filter(|e| shown(e.a) && shown(e.b)).collect();
    // Layers grow away from the first fluid so paths read source to sink.
    let mut starts = nodes.clone();
    starts.sort_by_key(|&n| frame.entity(n).state != State::Fluid);
    let mut layer: BTreeMap<EntityId, usize> = BTreeMap::new();
    let mut next_layer = 0;
    for &start in &starts {
        if layer.contains_key(&start) {
            continue;
        }
        let base = next_layer;
        layer.insert(start, base);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            next_layer = next_layer.max(layer[&n] + 1);
            for e in &edges {
                let m = if e.a == n {
                    e.b
                } else if e.b == n {
                    e.a
                } else {
                    continue;
                };
                if !layer.contains_key(&m) {
                    layer.insert(m, layer[&n] + 1);
                    queue.push_back(m);
                }
            }
        }
    }
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut pos: BTreeMap<EntityId, [f64; 2]> = BTreeMap::new();
    for &n in &nodes {
        let l = layer[&n];
        let r = rows.entry(l).or_default();
        pos.insert(n, [90.0 + 170.0 * l as f64, 50.0 + 70.0 * *r as f64]);
        *r += 1;
    }
    let width = 180.0 + 170.0 * (*layer.values().max().unwrap() as f64);
    let height = 100.0 + 70.0 * (*rows.values().max().unwrap() as f64 - 1.0);
    let mut svg = Svg::new(width, height);
    for e in &edges {
        svg.line(pos[&e.a], pos[&e.b], r#"stroke="black" stroke-width="1.5""#);
    }
    for &n in &nodes {
        let entity = frame.entity(n);
        let [x, y] = pos[&n];
        let rx = if entity.state == State::Fluid { 16 } else { 0 };
        let dash = if entity.is_insulator { r#" stroke-dasharray="5,3""# } else { "" };
        let fill = match entity.state {
            State::Fluid => "#dbeafe",
            State::Solid => "#fde68a",
            State::Unknown => "#e5e7eb",
        };
        svg.push(format!(
            r#"<rect x="{:.1}" y="{:.1}" width="140" height="36" rx="{rx}" fill="{fill}" stroke="black"{dash}/>"#,
            x - 70.0,
            y - 18.0
        ));
        svg.text(x, y + 4.0, "middle", 12, &entity.canonical_name);
    }
    svg.finish()
}

fn bc_label(bc: &BoundaryCondition) -> String {
    match bc {
        BoundaryCondition::Dirichlet { temperature } => format!("T = {temperature}"),
        BoundaryCondition::Neumann { flux } => format!("q = {flux}"),
        BoundaryCondition::Robin { h, fluid_temperature } => format!("{h}, {fluid_temperature}"),
        BoundaryCondition::Insulated => "insulated".into(),
    }
}

/// Plot frame mapping model coordinates to pixels with equal scales on both axes.
struct Frame2 {
    lo: [f64; 2],
    scale: f64,
    margin: f64,
    height: f64,
}

impl Frame2 {
    fn new(lo: [f64; 2], hi: [f64; 2], width: f64, margin: f64) -> Frame2 {
        let scale = width / (hi[0] - lo[0]);
        let height = (hi[1] - lo[1]) * scale;
        Frame2 { lo, scale, margin, height }
    }

    fn at(&self, p: [f64; 2]) -> [f64; 2] {
        [self.margin + (p[0] - self.lo[0]) * self.scale, self.margin + self.height - (p[1] - self.lo[1]) * self.scale]
    }
}

/// To-scale projection onto the through-axis and the last transverse axis, with component
/// labels, station ticks and boundary annotations.
pub fn render_geometry_figure(t: &PdeTemplate, system: &System) -> String {
    let (lo, hi) = bounding_box(system);
    let fr = Frame2::new(lo, hi, 600.0, 70.0);
    let drawn = fr.height.max(8.0);
    let mut svg = Svg::new(740.0, drawn + 190.0);
    let pale = ["#fef3c7", "#e0e7ff", "#dcfce7", "#fce7f3", "#e0f2fe", "#f5f5f4"];
    let mut stations: Vec<f64> = Vec::new();
    for (ci, c) in system.components.iter().enumerate() {
        let (a, b) = (
            fr.at([to_f64(&c.cuboid.lo[0]), to_f64(&c.cuboid.hi[2])]),
            fr.at([to_f64(&c.cuboid.hi[0]), to_f64(&c.cuboid.lo[2])]),
        );
        let h = (b[1] - a[1]).max(8.0);
        svg.push(format!(
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{h:.1}" fill="{}" stroke="black"/>"##,
            a[0],
            a[1],
            b[0] - a[0],
            pale[ci % pale.len()]
        ));
        svg.text(0.5 * (a[0] + b[0]), a[1] + 0.5 * h + 4.0, "middle", 11, &c.name);
        stations.extend([to_f64(&c.cuboid.lo[0]), to_f64(&c.cuboid.hi[0])]);
    }
    stations.sort_by(f64::total_cmp);
    stations.dedup();
    let axis_y = fr.margin + drawn + 20.0;
    for x in &stations {
        let px = fr.at([*x, lo[1]])[0];
        svg.line([px, axis_y - 5.0], [px, axis_y + 5.0], r#"stroke="black""#);
        svg.text(px, axis_y + 18.0, "middle", 10, &format!("{x}"));
    }
    svg.line([fr.margin, axis_y], [fr.margin + 600.0, axis_y], r#"stroke="black""#);
    svg.text(fr.margin + 300.0, axis_y + 36.0, "middle", 11, &t.coordinate_vars.first().cloned().unwrap_or_default());

    let mut lateral = Vec::new();
    for f in t.exterior_faces() {
        let face = &t.faces[f];
        let Some(bc) = &face.bc else { continue };
        if matches!(bc, BoundaryCondition::Insulated) {
            if face.kind == FaceKind::Lateral {
                lateral.push(format!("{}: insulated", t.components[face.component].name));
            }
            continue;
        }
        let c = &system.components[face.component];
        let x = match face.kind {
            FaceKind::Low(0) => to_f64(&c.cuboid.lo[0]),
            FaceKind::High(0) => to_f64(&c.cuboid.hi[0]),
            _ => {
                lateral.push(format!("{}: {}", t.components[face.component].name, bc_label(bc)));
                continue;
            }
        };
        let (top, bottom) = (fr.at([x, to_f64(&c.cuboid.hi[2])]), fr.at([x, to_f64(&c.cuboid.lo[2])]));
        svg.line(top, [bottom[0], bottom[1].max(top[1] + 8.0)], r##"stroke="#dc2626" stroke-width="3""##);
        let anchor = if matches!(face.kind, FaceKind::Low(_)) { "end" } else { "start" };
        let dx = if anchor == "end" { -6.0 } else { 6.0 };
        svg.text(top[0] + dx, 0.5 * (top[1] + bottom[1]) + 4.0, anchor, 10, &bc_label(bc));
    }
    lateral.sort();
    lateral.dedup();
    for (i, s) in lateral.iter().enumerate() {
        svg.text(fr.margin, 20.0 + 13.0 * i as f64, "start", 10, s);
    }
    svg.finish()
}

fn bounding_box(system: &System) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for c in &system.components {
        for (k, axis) in [0, 2].into_iter().enumerate() {
            lo[k] = lo[k].min(to_f64(&c.cuboid.lo[axis]));
            hi[k] = hi[k].max(to_f64(&c.cuboid.hi[axis]));
        }
    }
    (lo, hi)
}

/// Temperature against the through-axis coordinate, with components shaded.
pub fn render_quasi1d_field(sol: &Quasi1dSolution) -> String {
    let mut svg = Svg::new(700.0, 420.0);
    let (x0, x1) = (
        sol.port_positions.iter().copied().fold(f64::INFINITY, f64::min),
        sol.port_positions.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let samples: Vec<Vec<(f64, f64)>> = sol.segments.iter().map(|s| s.samples(41)).collect();
    let values = samples.iter().flatten().map(|p| p.1);
    let (mut t0, mut t1) = values.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if t1 - t0 < 1e-12 {
        t0 -= 1.0;
        t1 += 1.0;
    }
    let (left, top, w, h) = (80.0, 30.0, 580.0, 320.0);
    let px = |x: f64| left + (x - x0) / (x1 - x0) * w;
    let py = |v: f64| top + h - (v - t0) / (t1 - t0) * h;
    for (i, seg) in sol.segments.iter().enumerate() {
        let (a, b) = seg.interval();
        let fill = if i % 2 == 0 { "#f3f4f6" } else { "#e5e7eb" };
        svg.push(format!(r#"<rect x="{:.1}" y="{top:.1}" width="{:.1}" height="{h:.1}" fill="{fill}"/>"#, px(a), px(b) - px(a)));
        svg.text(0.5 * (px(a) + px(b)), top + 14.0, "middle", 10, &sol.component_names[i]);
    }
    for pts in &samples {
        let mut d = String::new();
        for (k, (x, v)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if k == 0 { "M" } else { " L" }, px(*x), py(*v));
        }
        svg.push(format!(r##"<path d="{d}" fill="none" stroke="#b91c1c" stroke-width="2"/>"##));
    }
    svg.line([left, top + h], [left + w, top + h], r#"stroke="black""#);
    svg.line([left, top], [left, top + h], r#"stroke="black""#);
    for x in &sol.port_positions {
        svg.line([px(*x), top + h], [px(*x), top + h + 5.0], r#"stroke="black""#);
        svg.text(px(*x), top + h + 18.0, "middle", 10, &format!("{x}"));
    }
    for v in [t0, 0.5 * (t0 + t1), t1] {
        svg.text(left - 6.0, py(v) + 4.0, "end", 10, &format!("{v:.3}"));
    }
    svg.text(left + 0.5 * w, top + h + 36.0, "middle", 12, &sol.coordinate);
    svg.text(20.0, top + 0.5 * h, "middle", 12, "T");
    svg.finish()
}

const BANDS: usize = 12;

fn band_color(i: usize) -> String {
    let s = i as f64 / (BANDS - 1) as f64;
    let (r, g, b) = ((40.0 + 215.0 * s) as u8, (90.0 + 80.0 * (1.0 - (2.0 * s - 1.0).abs())) as u8, (255.0 - 215.0 * s) as u8);
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Banded filled-contour plot of a piecewise-linear field given on triangles, sampled on a
/// raster of cell centres and emitted as runs of equal band.
pub fn render_contour_field(vertices: &[[f64; 2]], triangles: &[[usize; 3]], values: &[f64], title: &str) -> String {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in vertices {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if triangles.is_empty() || hi[0] <= lo[0] || hi[1] <= lo[1] {
        return Svg::new(200.0, 60.0).finish();
    }
    let (vmin, vmax) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let fr = Frame2::new(lo, hi, 560.0, 50.0);
    let nx = 280usize;
    let cell = (hi[0] - lo[0]) / nx as f64;
    let ny = ((hi[1] - lo[1]) / cell).round().max(1.0) as usize;
    let mut grid: Vec<Option<usize>> = vec![None; nx * ny];
    let band = |v: f64| {
        if vmax - vmin < 1e-12 {
            0
        } else {
            (((v - vmin) / (vmax - vmin)) * BANDS as f64).floor().clamp(0.0, (BANDS - 1) as f64) as usize
        }
    };
    for tri in triangles {
        let p = tri.map(|v| vertices[v]);
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let idx = |x: f64, o: f64| ((x - o) / cell - 0.5).ceil().max(0.0) as usize;
        let (i0, i1) = (
            idx(p.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min), lo[0]),
            idx(p.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max), lo[0]).min(nx),
        );
        let (j0, j1) = (
            idx(p.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min), lo[1]),
            idx(p.iter().map(|q| q[1]).fold(f64::NEG_INFINITY, f64::max), lo[1]).min(ny),
        );
        for j in j0..j1 {
            for i in i0..i1 {
                let c = [lo[0] + (i as f64 + 0.5) * cell, lo[1] + (j as f64 + 0.5) * cell];
                let l1 = ((c[0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (c[1] - p[0][1])) / det;
                let l2 = ((p[1][0] - p[0][0]) * (c[1] - p[0][1]) - (c[0] - p[0][0]) * (p[1][1] - p[0][1])) / det;
                let l0 = 1.0 - l1 - l2;
                if l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12 {
                    grid[j * nx + i] = Some(band(l0 * values[tri[0]] + l1 * values[tri[1]] + l2 * values[tri[2]]));
                }
            }
        }
    }
    let mut svg = Svg::new(760.0, fr.height + 130.0);
    let px = cell * fr.scale;
    for j in 0..ny {
        let mut i = 0;
        while i < nx {
            let Some(b) = grid[j * nx + i] else {
                i += 1;
                continue;
            };
            let start = i;
            while i < nx && grid[j * nx + i] == Some(b) {
                i += 1;
            }
            let corner = fr.at([lo[0] + start as f64 * cell, lo[1] + (j + 1) as f64 * cell]);
            svg.push(format!(
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                corner[0],
                corner[1],
                (i - start) as f64 * px + 0.3,
                px + 0.3,
                band_color(b)
            ));
        }
    }
    let legend_x = fr.margin + 580.0;
    for b in 0..BANDS {
        let y = fr.margin + (BANDS - 1 - b) as f64 * 18.0;
        svg.push(format!(r#"<rect x="{legend_x:.1}" y="{y:.1}" width="16" height="18" fill="{}"/>"#, band_color(b)));
    }
    svg.text(legend_x + 22.0, fr.margin + 10.0, "start", 10, &format!("{vmax:.3}"));
    svg.text(legend_x + 22.0, fr.margin + BANDS as f64 * 18.0, "start", 10, &format!("{vmin:.3}"));
    svg.text(fr.margin, fr.height + fr.margin + 30.0, "start", 12, title);
    svg.finish()
}

/// Upper-bound minimizer drawn as a piecewise-linear field: each component piece between
/// stations is a rectangle whose values vary linearly in `x_1`.
pub fn upper_bound_field(system: &System, bounds: &BoundResult) -> (Vec<[f64; 2]>, Vec<[usize; 3]>, Vec<f64>) {
    let slices = crate::component::find_slices(system);
    let dofs = crate::component::coalesce_slice_dofs(system, &slices);
    let (mut vertices, mut triangles, mut values) = (Vec::new(), Vec::new(), Vec::new());
    for (ci, c) in system.components.iter().enumerate() {
        let (z0, z1) = (to_f64(&c.cuboid.lo[2]), to_f64(&c.cuboid.hi[2]));
        let inside: Vec<usize> = (0..slices.slices.len())
            .filter(|&j| c.x_left() <= &slices.slices[j].x1 && slices.slices[j].x1 <= *c.x_right())
            .collect();
        for w in inside.windows(2) {
            let (xa, xb) = (to_f64(&slices.slices[w[0]].x1), to_f64(&slices.slices[w[1]].x1));
            let (va, vb) = (
                bounds.upper.port_values[dofs.dof_at(&slices, w[0], ci).unwrap()],
                bounds.upper.port_values[dofs.dof_at(&slices, w[1], ci).unwrap()],
            );
            let base = vertices.len();
            vertices.extend([[xa, z0], [xb, z0], [xb, z1], [xa, z1]]);
            values.extend([va, vb, vb, va]);
            triangles.extend([[base, base + 1, base + 2], [base, base + 2, base + 3]]);
        }
    }
    (vertices, triangles, values)
}

/// Interval panel of the lower bound, upper bound and finite element value with its estimate.
pub fn render_bounds_figure(bounds: &BoundResult) -> String {
    let mut svg = Svg::new(560.0, 200.0);
    let mut lo = bounds.h_lb;
    let mut hi = bounds.h_ub;
    if let (Some(fe), Some(e)) = (bounds.h_fe, bounds.fe_error_estimate) {
        lo = lo.min(fe - e);
        hi = hi.max(fe + e);
    }
    let pad = 0.1 * (hi - lo).max(1e-6);
    let (lo, hi) = (lo - pad, hi + pad);
    let (left, w) = (60.0, 440.0);
    let px = |v: f64| left + (v - lo) / (hi - lo) * w;
    svg.line([left, 120.0], [left + w, 120.0], r#"stroke="black""#);
    svg.push(format!(
        r##"<rect x="{:.1}" y="100" width="{:.1}" height="40" fill="#e0e7ff" stroke="#4338ca"/>"##,
        px(bounds.h_lb),
        px(bounds.h_ub) - px(bounds.h_lb)
    ));
    svg.text(px(bounds.h_lb), 160.0, "middle", 11, &format!("H_LB = {:.6}", bounds.h_lb));
    svg.text(px(bounds.h_ub), 90.0, "middle", 11, &format!("H_UB = {:.6}", bounds.h_ub));
    if let Some(fe) = bounds.h_fe {
        let e = bounds.fe_error_estimate.unwrap_or(0.0);
        svg.line([px(fe - e), 120.0], [px(fe + e), 120.0], r##"stroke="#b91c1c" stroke-width="6""##);
        svg.push(format!(r##"<circle cx="{:.1}" cy="120" r="4" fill="#b91c1c"/>"##, px(fe)));
        svg.text(px(fe), 185.0, "middle", 11, &format!("H_FE = {fe:.6} ± {e:.1e}"));
    }
    svg.text(280.0, 30.0, "middle", 13, "Bounds on H");
    svg.finish()
}

#[cfg(test)]
mod tests;
