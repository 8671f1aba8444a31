//! PDE template: the spatial domain as a union of boxes, one boundary condition per exterior
//! face, per-component conductivity and the resolved quantities of interest.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::expr::{serialize_rational, to_f64, Affine, Rational};
use crate::geometry::{subtract_all, total_measure, Cuboid};
use crate::parser::{
    BcKind, BoundaryConditionSpec, EntityId, FaceSelector, Frame, GeometryClass, HNormalization, ParseError, QoiKind,
};

/// Default Biot-number threshold for the quasi-1d class.
pub const BI_THRESHOLD: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemplateError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("no numeric value for `{symbol}`")]
    MissingBinding { symbol: String },
    #[error("component `{component}`: {reason}")]
    InvalidGeometry { component: String, reason: String },
    #[error("sentence {sentence}: no face of {target} matches {what}")]
    UnknownFace { sentence: usize, target: String, what: String },
    #[error("sentence {sentence}: boundary condition on interior face {face} of `{component}`")]
    BcOnInteriorFace { sentence: usize, component: String, face: String },
    #[error("sentence {sentence}: face {face} of `{component}` already has a boundary condition")]
    ConflictingBoundaryCondition { sentence: usize, component: String, face: String },
    #[error("face {face} of `{component}` has no boundary condition")]
    UncoveredBoundary { component: String, face: String },
    #[error("problem is not in a supported class: {reason}")]
    Unclassifiable { reason: String },
}

impl TemplateError {
    pub fn sentence(&self) -> Option<usize> {
        match self {
            TemplateError::Parse(e) => e.sentence(),
            TemplateError::UnknownFace { sentence, .. }
            | TemplateError::BcOnInteriorFace { sentence, .. }
            | TemplateError::ConflictingBoundaryCondition { sentence, .. } => Some(*sentence),
            _ => None,
        }
    }
}

/// A face of a component box. `Low(i)`/`High(i)` are normal to axis `i`; axis 0 is the
/// through axis. Right cylinders have a single `Lateral` face instead of the transverse pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceKind {
    Low(usize),
    High(usize),
    Lateral,
}

impl FaceKind {
    pub fn axis(self) -> Option<usize> {
        match self {
            FaceKind::Low(i) | FaceKind::High(i) => Some(i),
            FaceKind::Lateral => None,
        }
    }

    /// Sign of the outward normal along the face axis.
    pub fn outward(self) -> f64 {
        match self {
            FaceKind::Low(_) => -1.0,
            _ => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet { temperature: String },
    Neumann { flux: String },
    Robin { h: String, fluid_temperature: String },
    Insulated,
}

impl BoundaryCondition {
    fn from_spec(spec: &BoundaryConditionSpec) -> Result<BoundaryCondition, ParseError> {
        let need = |s: &Option<String>, what: &str| {
            s.clone().ok_or_else(|| ParseError::IncompleteRobin { symbol: what.into(), sentence: spec.sentence_index })
        };
        Ok(match spec.kind {
            BcKind::Temperature => BoundaryCondition::Dirichlet { temperature: need(&spec.temperature_symbol, "temperature")? },
            BcKind::Flux => BoundaryCondition::Neumann { flux: need(&spec.flux_symbol, "flux")? },
            BcKind::HeatTransferCoefficient => {
                let h = need(&spec.h_symbol, "h")?;
                let fluid_temperature = spec
                    .fluid_temperature_symbol
                    .clone()
                    .ok_or_else(|| ParseError::IncompleteRobin { symbol: h.clone(), sentence: spec.sentence_index })?;
                BoundaryCondition::Robin { h, fluid_temperature }
            }
            BcKind::Insulated => BoundaryCondition::Insulated,
        })
    }

    pub fn is_anchor(&self) -> bool {
        matches!(self, BoundaryCondition::Dirichlet { .. } | BoundaryCondition::Robin { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TemplateComponent {
    pub name: String,
    pub entity: EntityId,
    pub geometry: GeometryClass,
    /// Coordinate names with the through axis first. Right cylinders list only the axial one.
    pub axes: Vec<String>,
    pub intervals: BTreeMap<String, (Affine, Affine)>,
    /// Transverse dimension symbols of a right cylinder.
    pub cross_section: Vec<String>,
    /// Numeric box; for right cylinders the transverse axes span `[0, a] x [0, b]`.
    pub cuboid: Cuboid,
    pub conductivity: String,
    pub faces: Vec<usize>,
}

impl TemplateComponent {
    /// Plane position of an axis-normal face.
    pub fn plane(&self, kind: FaceKind) -> Option<(usize, &Rational)> {
        match kind {
            FaceKind::Low(i) => Some((i, &self.cuboid.lo[i])),
            FaceKind::High(i) => Some((i, &self.cuboid.hi[i])),
            FaceKind::Lateral => None,
        }
    }

    pub fn face_label(&self, kind: FaceKind) -> String {
        match kind {
            FaceKind::Lateral => "lateral".into(),
            FaceKind::Low(i) | FaceKind::High(i) => {
                let axis = self.axes.get(i).cloned().unwrap_or_else(|| format!("transverse {i}"));
                format!("{axis} = {}", to_f64(self.plane(kind).unwrap().1))
            }
        }
    }

    pub fn length(&self) -> Rational {
        self.cuboid.extent(0)
    }

    /// Area normal to the through axis.
    pub fn cross_area(&self) -> Rational {
        self.cuboid.drop_axis(0).measure()
    }

    pub fn perimeter(&self) -> Rational {
        let two = Rational::from_integer(2.into());
        two * (self.cuboid.extent(1) + self.cuboid.extent(2))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaceRecord {
    pub component: usize,
    pub kind: FaceKind,
    #[serde(serialize_with = "serialize_rational")]
    pub area: Rational,
    /// Uncovered parts in face coordinates (face axis removed). Empty for lateral faces,
    /// which are always fully exterior.
    pub exterior: Vec<Cuboid>,
    #[serde(serialize_with = "serialize_rational")]
    pub exterior_area: Rational,
    pub bc: Option<BoundaryCondition>,
    pub bc_sentence: Option<usize>,
}

impl FaceRecord {
    pub fn is_exterior(&self) -> bool {
        !self.exterior_area.is_zero()
    }
}

/// Two faces of different components in contact over a patch of positive area.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contact {
    pub low_face: usize,
    pub high_face: usize,
    pub overlap: Cuboid,
    #[serde(serialize_with = "serialize_rational")]
    pub area: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Qoi {
    FieldPlot {
        coordinate: String,
    },
    TemperatureAt {
        coordinate: String,
        #[serde(serialize_with = "serialize_rational")]
        at: Rational,
    },
    FluxAt {
        faces: Vec<usize>,
    },
    HeatRateAt {
        faces: Vec<usize>,
    },
    NondimensionalH {
        symbol: Option<String>,
        faces: Vec<usize>,
        normalization: HNormalization,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PdeTemplate {
    pub source_name: String,
    pub coordinate_vars: Vec<String>,
    pub components: Vec<TemplateComponent>,
    pub faces: Vec<FaceRecord>,
    pub contacts: Vec<Contact>,
    /// Component index pairs joined in the connection graph.
    pub graph_edges: Vec<(usize, usize)>,
    pub volumetric_sources: Vec<String>,
    pub qoi: Vec<Qoi>,
    #[serde(serialize_with = "serialize_bindings")]
    pub bindings: BTreeMap<String, Rational>,
}

fn serialize_bindings<S: Serializer>(b: &BTreeMap<String, Rational>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_map(b.iter().map(|(k, v)| (k, to_f64(v))))
}

impl PdeTemplate {
    pub fn value(&self, symbol: &str) -> Result<Rational, TemplateError> {
        self.bindings.get(symbol).cloned().ok_or_else(|| TemplateError::MissingBinding { symbol: symbol.into() })
    }

    pub fn value_f64(&self, symbol: &str) -> Result<f64, TemplateError> {
        self.value(symbol).map(|v| to_f64(&v))
    }

    pub fn conductivity(&self, component: usize) -> Result<Rational, TemplateError> {
        self.value(&self.components[component].conductivity)
    }

    pub fn face(&self, component: usize, kind: FaceKind) -> Option<usize> {
        self.components[component].faces.iter().copied().find(|&f| self.faces[f].kind == kind)
    }

    pub fn face_label(&self, face: usize) -> String {
        let f = &self.faces[face];
        let c = &self.components[f.component];
        format!("{} ({})", c.name, c.face_label(f.kind))
    }

    pub fn exterior_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.faces.len()).filter(|&f| self.faces[f].is_exterior())
    }

    pub fn has_lateral_robin(&self) -> bool {
        self.faces.iter().any(|f| f.kind == FaceKind::Lateral && matches!(f.bc, Some(BoundaryCondition::Robin { .. })))
    }

    /// Canonical JSON document with stable key order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("template serializes")
    }
}

fn lookup(frame: &Frame) -> impl Fn(&str) -> Option<Rational> + '_ {
    |s| frame.binding(s).cloned()
}

fn eval(frame: &Frame, a: &Affine) -> Result<Rational, TemplateError> {
    a.eval(lookup(frame)).map_err(|_| TemplateError::MissingBinding {
        symbol: a.symbols().find(|s| frame.binding(s).is_none()).unwrap_or_default().to_string(),
    })
}

fn build_component(frame: &Frame, id: EntityId) -> Result<TemplateComponent, TemplateError> {
    let e = frame.entity(id);
    let name = e.canonical_name.clone();
    let invalid = |reason: &str| TemplateError::InvalidGeometry { component: name.clone(), reason: reason.into() };
    let geometry = e.geometry().ok_or_else(|| invalid("no geometry class"))?;
    let spec = frame.domain_specs.get(&id).ok_or_else(|| ParseError::MissingDomain { component: name.clone() })?;
    let conductivity =
        frame.conductivities.get(&id).cloned().ok_or_else(|| ParseError::MissingConductivity { component: name.clone() })?;
    let interval = |var: &str| -> Result<(Rational, Rational), TemplateError> {
        let (lo, hi) = spec.intervals.get(var).ok_or_else(|| invalid(&format!("no extent along {var}")))?;
        Ok((eval(frame, lo)?, eval(frame, hi)?))
    };
    let (axes, cross_section, bounds) = match geometry {
        GeometryClass::RightCylinder => {
            let axis = frame
                .coordinate_vars
                .iter()
                .find(|v| spec.intervals.contains_key(*v))
                .or_else(|| spec.intervals.keys().next())
                .ok_or_else(|| invalid("empty domain"))?
                .clone();
            let dims = e.cross_section().ok_or_else(|| invalid("no cross-section dimensions"))?;
            if dims.len() != 2 {
                return Err(invalid("cross-section needs two dimensions"));
            }
            let mut bounds = vec![interval(&axis)?];
            let mut cs = Vec::new();
            for d in dims {
                let v = frame
                    .binding(&d.symbol)
                    .cloned()
                    .ok_or_else(|| TemplateError::MissingBinding { symbol: d.symbol.clone() })?;
                bounds.push((Rational::zero(), v));
                cs.push(d.symbol.clone());
            }
            (vec![axis], cs, bounds)
        }
        GeometryClass::Parallelepiped => {
            if frame.coordinate_vars.len() != 3 {
                return Err(invalid("parallelepipeds need three coordinates"));
            }
            let bounds = frame.coordinate_vars.iter().map(|v| interval(v)).collect::<Result<Vec<_>, _>>()?;
            (frame.coordinate_vars.clone(), Vec::new(), bounds)
        }
    };
    if let Some((i, _)) = bounds.iter().enumerate().find(|(_, (lo, hi))| hi <= lo) {
        let what = match axes.get(i) {
            Some(a) => format!("extent along {a}"),
            None => format!("cross-section dimension {}", cross_section[i - 1]),
        };
        return Err(invalid(&format!("non-positive {what}")));
    }
    Ok(TemplateComponent {
        name,
        entity: id,
        geometry,
        axes,
        intervals: spec.intervals.clone(),
        cross_section,
        cuboid: Cuboid::new(bounds),
        conductivity,
        faces: Vec::new(),
    })
}

fn face_kinds(geometry: GeometryClass, dim: usize) -> Vec<FaceKind> {
    match geometry {
        GeometryClass::RightCylinder => vec![FaceKind::Low(0), FaceKind::High(0), FaceKind::Lateral],
        GeometryClass::Parallelepiped => (0..dim).flat_map(|i| [FaceKind::Low(i), FaceKind::High(i)]).collect(),
    }
}

fn face_area(c: &TemplateComponent, kind: FaceKind) -> Rational {
    match kind {
        FaceKind::Lateral => c.perimeter() * c.length(),
        FaceKind::Low(i) | FaceKind::High(i) => c.cuboid.drop_axis(i).measure(),
    }
}

/// Components a target entity stands for: itself, or its parts and instances.
fn components_of(frame: &Frame, target: Option<EntityId>) -> Vec<usize> {
    let all: Vec<usize> = (0..frame.components.len()).collect();
    let Some(t) = target else { return all };
    let belongs = |mut id: EntityId| loop {
        if id == t {
            return true;
        }
        let e = frame.entity(id);
        match e.parent.or(e.archetype) {
            Some(p) => id = p,
            None => return false,
        }
    };
    let hit: Vec<usize> = all.iter().copied().filter(|&c| belongs(frame.components[c])).collect();
    if hit.is_empty() {
        all
    } else {
        hit
    }
}

struct Resolver<'a> {
    frame: &'a Frame,
    t: &'a PdeTemplate,
}

impl Resolver<'_> {
    /// Faces picked by a selector. Interior faces are kept only when the target is explicit so
    /// the caller can reject them.
    fn resolve(&self, target: Option<EntityId>, face: &FaceSelector, sentence: usize) -> Result<Vec<usize>, TemplateError> {
        let comps = components_of(self.frame, target);
        let explicit = target.is_some() && comps.len() < self.t.components.len();
        let mut out = Vec::new();
        for &ci in &comps {
            let c = &self.t.components[ci];
            for &fi in &c.faces {
                let f = &self.t.faces[fi];
                let hit = match face {
                    FaceSelector::AxialLeft => f.kind == FaceKind::Low(0),
                    FaceSelector::AxialRight => f.kind == FaceKind::High(0),
                    FaceSelector::Lateral => match f.kind {
                        FaceKind::Lateral => true,
                        FaceKind::Low(i) | FaceKind::High(i) => i > 0 && f.is_exterior(),
                    },
                    FaceSelector::Plane { coordinate, at } => {
                        let v = eval(self.frame, at)?;
                        match (c.axes.iter().position(|a| a == coordinate), c.plane(f.kind)) {
                            (Some(ax), Some((i, p))) => ax == i && *p == v,
                            _ => false,
                        }
                    }
                    FaceSelector::Remainder => f.is_exterior() && f.bc.is_none(),
                };
                if hit && (explicit || f.is_exterior()) {
                    out.push(fi);
                }
            }
        }
        if out.is_empty() && *face != FaceSelector::Remainder {
            let target = target.map_or_else(|| "the domain".to_string(), |t| format!("`{}`", self.frame.name(t)));
            return Err(TemplateError::UnknownFace { sentence, target, what: face_description(face) });
        }
        Ok(out)
    }
}

fn face_description(face: &FaceSelector) -> String {
    match face {
        FaceSelector::AxialLeft => "the left axial face".into(),
        FaceSelector::AxialRight => "the right axial face".into(),
        FaceSelector::Lateral => "the lateral face".into(),
        FaceSelector::Plane { coordinate, at } => format!("{coordinate} = {at}"),
        FaceSelector::Remainder => "the remainder".into(),
    }
}

/// Builds the template from a checked frame: numeric boxes, face coverage, boundary
/// conditions on every exterior face and resolved quantities of interest.
pub fn assemble_template(frame: &Frame) -> Result<PdeTemplate, TemplateError> {
    let mut components = frame.components.iter().map(|&id| build_component(frame, id)).collect::<Result<Vec<_>, _>>()?;
    if let Some(c) = components.iter().find(|c| c.geometry != components[0].geometry) {
        return Err(TemplateError::InvalidGeometry { component: c.name.clone(), reason: "mixed geometry classes".into() });
    }

    let mut faces = Vec::new();
    for (ci, c) in components.iter_mut().enumerate() {
        for kind in face_kinds(c.geometry, c.cuboid.dim()) {
            c.faces.push(faces.len());
            let area = face_area(c, kind);
            let exterior = match kind {
                FaceKind::Lateral => Vec::new(),
                FaceKind::Low(i) | FaceKind::High(i) => vec![c.cuboid.drop_axis(i)],
            };
            faces.push(FaceRecord {
                component: ci,
                kind,
                exterior_area: area.clone(),
                area,
                exterior,
                bc: None,
                bc_sentence: None,
            });
        }
    }

    let mut contacts = Vec::new();
    for (a, ca) in components.iter().enumerate() {
        for (b, cb) in components.iter().enumerate() {
            if a == b {
                continue;
            }
            for i in 0..ca.cuboid.dim() {
                let transverse = ca.geometry == GeometryClass::Parallelepiped || i == 0;
                if !transverse || ca.cuboid.hi[i] != cb.cuboid.lo[i] {
                    continue;
                }
                if let Some(overlap) = ca.cuboid.drop_axis(i).intersect(&cb.cuboid.drop_axis(i)) {
                    let fa = ca.faces.iter().copied().find(|&f| faces[f].kind == FaceKind::High(i)).unwrap();
                    let fb = cb.faces.iter().copied().find(|&f| faces[f].kind == FaceKind::Low(i)).unwrap();
                    contacts.push(Contact { low_face: fa, high_face: fb, area: overlap.measure(), overlap });
                }
            }
        }
    }
    for contact in &contacts {
        for f in [contact.low_face, contact.high_face] {
            let rec = &mut faces[f];
            rec.exterior = subtract_all(std::mem::take(&mut rec.exterior), &contact.overlap);
            rec.exterior_area = total_measure(&rec.exterior);
        }
    }

    let graph_edges = frame
        .graph
        .edges
        .iter()
        .filter_map(|e| {
            let a = frame.components.iter().position(|&c| c == e.a)?;
            let b = frame.components.iter().position(|&c| c == e.b)?;
            Some((a.min(b), a.max(b)))
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut t = PdeTemplate {
        source_name: frame.source_name.clone(),
        coordinate_vars: frame.coordinate_vars.clone(),
        components,
        faces,
        contacts,
        graph_edges,
        volumetric_sources: Vec::new(),
        qoi: Vec::new(),
        bindings: frame.bindings.iter().map(|(k, b)| (k.clone(), b.value.clone())).collect(),
    };

    let (rest, remainder): (Vec<_>, Vec<_>) = frame.bc_specs.iter().partition(|s| s.face != FaceSelector::Remainder);
    for spec in rest.into_iter().chain(remainder) {
        let bc = BoundaryCondition::from_spec(spec)?;
        let picked = Resolver { frame, t: &t }.resolve(spec.target_entity, &spec.face, spec.sentence_index)?;
        for f in picked {
            let label = || {
                (t.components[t.faces[f].component].name.clone(), t.components[t.faces[f].component].face_label(t.faces[f].kind))
            };
            if !t.faces[f].is_exterior() {
                let (component, face) = label();
                return Err(TemplateError::BcOnInteriorFace { sentence: spec.sentence_index, component, face });
            }
            if t.faces[f].bc.is_some() {
                let (component, face) = label();
                return Err(TemplateError::ConflictingBoundaryCondition { sentence: spec.sentence_index, component, face });
            }
            t.faces[f].bc = Some(bc.clone());
            t.faces[f].bc_sentence = Some(spec.sentence_index);
        }
    }
    if let Some(f) = t.faces.iter().find(|f| f.is_exterior() && f.bc.is_none()) {
        let c = &t.components[f.component];
        return Err(TemplateError::UncoveredBoundary { component: c.name.clone(), face: c.face_label(f.kind) });
    }

    let axis0 = t.components[0].axes[0].clone();
    let mut qoi = Vec::new();
    for spec in &frame.qoi_specs {
        let faces = |t: &PdeTemplate| -> Result<Vec<usize>, TemplateError> {
            let sel = spec.location.as_ref().ok_or_else(|| TemplateError::UnknownFace {
                sentence: spec.sentence_index,
                target: "the quantity of interest".into(),
                what: "no location".into(),
            })?;
            Resolver { frame, t }.resolve(spec.target_entity, sel, spec.sentence_index)
        };
        qoi.push(match spec.kind {
            QoiKind::TemperatureFieldPlot => Qoi::FieldPlot { coordinate: axis0.clone() },
            QoiKind::TemperatureAtPoint => match &spec.location {
                Some(FaceSelector::Plane { coordinate, at }) => {
                    Qoi::TemperatureAt { coordinate: coordinate.clone(), at: eval(frame, at)? }
                }
                other => {
                    return Err(TemplateError::UnknownFace {
                        sentence: spec.sentence_index,
                        target: "the point temperature".into(),
                        what: other.as_ref().map_or_else(|| "no location".into(), face_description),
                    })
                }
            },
            QoiKind::FluxAtFace => Qoi::FluxAt { faces: faces(&t)? },
            QoiKind::HeatRateAtFace => Qoi::HeatRateAt { faces: faces(&t)? },
            QoiKind::NondimensionalHWithBounds => Qoi::NondimensionalH {
                symbol: spec.symbol.clone(),
                faces: faces(&t)?,
                normalization: spec.normalization.clone().ok_or_else(|| TemplateError::Unclassifiable {
                    reason: "nondimensional rate without normalization".into(),
                })?,
            },
        });
    }
    t.qoi = qoi;
    Ok(t)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "defect", rename_all = "snake_case")]
pub enum Defect {
    MissingBinding { symbol: String },
    NonPositiveConductivity { component: String },
    NegativeHeatTransferCoefficient { symbol: String },
    PureNeumannUnanchored,
    NetFluxImbalance { net: f64 },
    UnanchoredPart { components: Vec<String> },
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::MissingBinding { symbol } => write!(f, "no numeric value for `{symbol}`"),
            Defect::NonPositiveConductivity { component } => write!(f, "conductivity of `{component}` is not positive"),
            Defect::NegativeHeatTransferCoefficient { symbol } => write!(f, "heat transfer coefficient `{symbol}` is negative"),
            Defect::PureNeumannUnanchored => write!(f, "no temperature or Robin anchor; solution unique up to a constant"),
            Defect::NetFluxImbalance { net } => write!(f, "prescribed fluxes do not balance (net {net})"),
            Defect::UnanchoredPart { components } => write!(f, "part {components:?} has no temperature or Robin anchor"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnosis {
    pub defects: Vec<Defect>,
    pub notes: Vec<String>,
}

impl Diagnosis {
    pub fn is_ok(&self) -> bool {
        self.defects.is_empty()
    }
}

/// Groups components that touch over a face into connected parts.
pub fn connected_parts(t: &PdeTemplate) -> Vec<Vec<usize>> {
    let n = t.components.len();
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], mut i: usize) -> usize {
        while root[i] != i {
            root[i] = root[root[i]];
            i = root[i];
        }
        i
    }
    for c in &t.contacts {
        let a = find(&mut root, t.faces[c.low_face].component);
        let b = find(&mut root, t.faces[c.high_face].component);
        root[a.max(b)] = a.min(b);
    }
    let mut parts: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut root, i);
        parts.entry(r).or_default().push(i);
    }
    parts.into_values().collect()
}

/// Reports defects that make the problem ill-posed. Defects are data, not errors.
pub fn check_well_posed(t: &PdeTemplate) -> Diagnosis {
    let mut missing = BTreeSet::new();
    let mut d = Diagnosis::default();
    let mut value = |s: &str| {
        let v = t.bindings.get(s).cloned();
        if v.is_none() {
            missing.insert(s.to_string());
        }
        v
    };
    for c in &t.components {
        if let Some(k) = value(&c.conductivity) {
            if !k.is_positive() {
                d.defects.push(Defect::NonPositiveConductivity { component: c.name.clone() });
            }
        }
    }
    let mut negative = BTreeSet::new();
    let mut anchored = vec![false; t.components.len()];
    let mut net = Rational::zero();
    for f in &t.faces {
        match &f.bc {
            Some(BoundaryCondition::Robin { h, fluid_temperature }) => {
                value(fluid_temperature);
                match value(h) {
                    Some(hv) if hv.is_negative() => {
                        negative.insert(h.clone());
                    }
                    Some(hv) if hv.is_zero() => {}
                    _ => anchored[f.component] = true,
                }
            }
            Some(BoundaryCondition::Dirichlet { temperature }) => {
                value(temperature);
                anchored[f.component] = true;
            }
            Some(BoundaryCondition::Neumann { flux }) => {
                if let Some(q) = value(flux) {
                    net += q * &f.exterior_area;
                }
            }
            _ => {}
        }
    }
    d.defects.extend(negative.into_iter().map(|symbol| Defect::NegativeHeatTransferCoefficient { symbol }));
    if !anchored.iter().any(|&a| a) {
        if net.is_zero() {
            d.defects.push(Defect::PureNeumannUnanchored);
            d.notes.push("solution unique up to a constant".into());
        } else {
            d.defects.push(Defect::NetFluxImbalance { net: to_f64(&net) });
        }
    } else {
        for part in connected_parts(t) {
            if !part.iter().any(|&c| anchored[c]) {
                let components = part.iter().map(|&c| t.components[c].name.clone()).collect();
                d.defects.push(Defect::UnanchoredPart { components });
            }
        }
    }
    d.defects.splice(0..0, missing.into_iter().map(|symbol| Defect::MissingBinding { symbol }));
    d
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiotNumber {
    pub value: f64,
    #[serde(skip)]
    pub exact: Rational,
    pub h_max: f64,
    pub k_min: f64,
    pub area: f64,
    pub perimeter: f64,
}

/// `Bi = h_max (A/P) / k_min` for a rectangular cross-section.
pub fn biot(h_max: &Rational, k_min: &Rational, a: &Rational, b: &Rational) -> BiotNumber {
    let area = a * b;
    let perimeter = Rational::from_integer(2.into()) * (a + b);
    let exact = h_max * (&area / &perimeter) / k_min;
    BiotNumber {
        value: to_f64(&exact),
        exact,
        h_max: to_f64(h_max),
        k_min: to_f64(k_min),
        area: to_f64(&area),
        perimeter: to_f64(&perimeter),
    }
}

pub fn compute_biot(t: &PdeTemplate) -> Result<BiotNumber, TemplateError> {
    let first = t.components.first().ok_or(ParseError::NoComponents)?;
    if first.cross_section.len() != 2 {
        return Err(TemplateError::InvalidGeometry {
            component: first.name.clone(),
            reason: "Biot number needs a rectangular cross-section".into(),
        });
    }
    let a = t.value(&first.cross_section[0])?;
    let b = t.value(&first.cross_section[1])?;
    let mut h_max = Rational::zero();
    for f in &t.faces {
        if let Some(BoundaryCondition::Robin { h, .. }) = &f.bc {
            h_max = h_max.max(t.value(h)?);
        }
    }
    let mut k_min: Option<Rational> = None;
    for c in 0..t.components.len() {
        let k = t.conductivity(c)?;
        k_min = Some(k_min.map_or(k.clone(), |m| m.min(k)));
    }
    Ok(biot(&h_max, &k_min.unwrap(), &a, &b))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quasi1dInfo {
    pub area: f64,
    pub perimeter: f64,
    pub biot: BiotNumber,
    /// False when no lateral face carries a Robin condition and the Biot gate is skipped.
    pub biot_gated: bool,
    pub biot_small: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Side {
    #[serde(serialize_with = "serialize_rational")]
    pub x1: Rational,
    pub h: String,
    pub fluid_temperature: String,
    pub faces: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneralizedWallInfo {
    pub left: Side,
    pub right: Side,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ProblemClass {
    Quasi1d(Quasi1dInfo),
    GeneralizedWall(GeneralizedWallInfo),
}

impl ProblemClass {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemClass::Quasi1d(_) => "quasi_1d",
            ProblemClass::GeneralizedWall(_) => "generalized_wall",
        }
    }
}

fn unclassifiable(reason: impl Into<String>) -> TemplateError {
    TemplateError::Unclassifiable { reason: reason.into() }
}

/// Order of components along the through axis, if they form a single gap-free stack.
pub fn stack_order(t: &PdeTemplate) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = (0..t.components.len()).collect();
    order.sort_by(|&a, &b| t.components[a].cuboid.lo[0].cmp(&t.components[b].cuboid.lo[0]));
    order.windows(2).all(|w| t.components[w[0]].cuboid.hi[0] == t.components[w[1]].cuboid.lo[0]).then_some(order)
}

fn classify_quasi1d(t: &PdeTemplate, bi_threshold: f64) -> Result<ProblemClass, TemplateError> {
    if t.qoi.iter().any(|q| matches!(q, Qoi::NondimensionalH { .. })) {
        return Err(unclassifiable("bounds on a nondimensional rate need a generalized wall"));
    }
    let first = &t.components[0];
    let section = first.cuboid.drop_axis(0);
    if t.components.iter().any(|c| c.cuboid.drop_axis(0) != section || c.axes != first.axes) {
        return Err(unclassifiable("cross-section is not constant along the stack"));
    }
    if stack_order(t).is_none() {
        return Err(unclassifiable("components do not form a single stack"));
    }
    let biot = compute_biot(t)?;
    let biot_gated = t.has_lateral_robin();
    let biot_small = biot.value <= bi_threshold;
    if biot_gated && !biot_small {
        return Err(unclassifiable(format!("Biot number {} exceeds {bi_threshold}", biot.value)));
    }
    Ok(ProblemClass::Quasi1d(Quasi1dInfo { area: biot.area, perimeter: biot.perimeter, biot, biot_gated, biot_small }))
}

fn classify_wall(t: &PdeTemplate) -> Result<ProblemClass, TemplateError> {
    if !t.qoi.iter().any(|q| matches!(q, Qoi::NondimensionalH { .. })) {
        return Err(unclassifiable("generalized walls need a nondimensional heat transfer rate"));
    }
    for c in &t.contacts {
        let (a, b) = (&t.faces[c.low_face], &t.faces[c.high_face]);
        if c.area != a.area || c.area != b.area {
            return Err(unclassifiable("bricks do not meet face to face"));
        }
    }
    let x1_left = t.components.iter().map(|c| c.cuboid.lo[0].clone()).min().unwrap();
    let x1_right = t.components.iter().map(|c| c.cuboid.hi[0].clone()).max().unwrap();
    let mut sides: [Option<Side>; 2] = [None, None];
    for (fi, f) in t.faces.iter().enumerate().filter(|(_, f)| f.is_exterior()) {
        let c = &t.components[f.component];
        let side = match f.kind {
            FaceKind::Low(0) if c.cuboid.lo[0] == x1_left => Some(0),
            FaceKind::High(0) if c.cuboid.hi[0] == x1_right => Some(1),
            _ => None,
        };
        match (side, &f.bc) {
            (_, Some(BoundaryCondition::Insulated)) => {}
            (Some(s), Some(BoundaryCondition::Robin { h, fluid_temperature })) => match &mut sides[s] {
                Some(existing) if existing.h == *h && existing.fluid_temperature == *fluid_temperature => existing.faces.push(fi),
                Some(_) => return Err(unclassifiable("Robin data differ along one side")),
                slot @ None => {
                    *slot = Some(Side {
                        x1: if s == 0 { x1_left.clone() } else { x1_right.clone() },
                        h: h.clone(),
                        fluid_temperature: fluid_temperature.clone(),
                        faces: vec![fi],
                    })
                }
            },
            _ => {
                return Err(unclassifiable(format!(
                    "face {} is neither insulated nor an end face with Robin data",
                    t.face_label(fi)
                )))
            }
        }
    }
    let [Some(left), Some(right)] = sides else {
        return Err(unclassifiable("both end stations need Robin data"));
    };
    Ok(ProblemClass::GeneralizedWall(GeneralizedWallInfo { left, right }))
}

pub fn classify_problem(t: &PdeTemplate, bi_threshold: f64) -> Result<ProblemClass, TemplateError> {
    match t.components.first().map(|c| c.geometry) {
        Some(GeometryClass::RightCylinder) => classify_quasi1d(t, bi_threshold),
        Some(GeometryClass::Parallelepiped) => classify_wall(t),
        None => Err(ParseError::NoComponents.into()),
    }
}
