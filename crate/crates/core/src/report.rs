//! End-to-end pipeline and the versioned JSON report.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::component::{connect_system, instantiate_components, ComponentError, System};
use crate::expr::{fmt_rational, normalize_symbol};
use crate::fem::{self, AdaptiveOptions, FeSolution, FemError, IterationRecord};
use crate::figures;
use crate::genwall::{check_ordering, solve_bounds, BoundResult, GenWallError};
use crate::parser::{parse_statement, Chunk, Commonsense, EntityId, Frame, ParseError, State};
use crate::quasi1d::{solve_quasi1d, Quasi1dError, Quasi1dSolution};
use crate::template::{
    assemble_template, check_well_posed, classify_problem, Defect, Diagnosis, GeneralizedWallInfo, PdeTemplate, ProblemClass,
    Qoi, Quasi1dInfo, TemplateError, BI_THRESHOLD,
};

pub const SCHEMA: &str = "report_v1";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunOptions {
    /// Also run the adaptive finite element solver on generalized walls.
    pub fe: bool,
    pub adaptive: AdaptiveOptions,
    pub bi_threshold: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { fe: false, adaptive: AdaptiveOptions::default(), bi_threshold: BI_THRESHOLD }
    }
}

/// One machine-readable problem found by a pipeline stage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectEntry {
    pub stage: String,
    pub kind: String,
    pub message: String,
    pub sentence: Option<usize>,
}

impl DefectEntry {
    fn new(stage: &str, kind: impl std::fmt::Debug, message: impl ToString, sentence: Option<usize>) -> DefectEntry {
        let debug = format!("{kind:?}");
        let kind = debug.split(|c: char| !c.is_alphanumeric() && c != '_').next().unwrap_or_default().to_string();
        DefectEntry { stage: stage.into(), kind, message: message.to_string(), sentence }
    }
}

fn parse_defect(e: &ParseError) -> DefectEntry {
    DefectEntry::new("parse", e, e, e.sentence())
}

/// Maps symbols and component names back to the sentences that introduced them.
struct Provenance<'a> {
    frame: &'a Frame,
}

impl Provenance<'_> {
    /// First sentence whose math mentions `symbol`.
    fn symbol_use(&self, symbol: &str) -> Option<usize> {
        self.frame.analysis.sentences.iter().position(|s| {
            s.chunks.iter().any(|c| match c {
                Chunk::Math { text, .. } => {
                    normalize_symbol(text).split(|ch: char| !ch.is_alphanumeric() && ch != '_').any(|w| w == symbol)
                }
                _ => false,
            })
        })
    }

    /// Sentence assigning a value to `symbol`, else its first use.
    fn symbol_value(&self, symbol: &str) -> Option<usize> {
        self.frame.bindings.get(symbol).map(|b| b.provenance).or_else(|| self.symbol_use(symbol))
    }

    fn entity(&self, name: &str) -> Option<EntityId> {
        self.frame.entities.iter().position(|e| e.canonical_name == name).map(EntityId)
    }

    /// Sentence giving the spatial domain of a component, else its first mention.
    fn component(&self, name: &str) -> Option<usize> {
        let id = self.entity(name)?;
        self.frame
            .domain_specs
            .get(&id)
            .and_then(|d| d.sentence_index)
            .or_else(|| self.frame.snippets.iter().find(|s| s.subject == id).map(|s| s.sentence_index))
    }

    fn template(&self, e: &TemplateError) -> Option<usize> {
        e.sentence().or_else(|| match e {
            TemplateError::MissingBinding { symbol } => self.symbol_use(symbol),
            TemplateError::InvalidGeometry { component, .. } | TemplateError::UncoveredBoundary { component, .. } => {
                self.component(component)
            }
            _ => None,
        })
    }

    fn defect(&self, d: &Defect) -> Option<usize> {
        match d {
            Defect::MissingBinding { symbol } => self.symbol_use(symbol),
            Defect::NegativeHeatTransferCoefficient { symbol } => self.symbol_value(symbol),
            Defect::NonPositiveConductivity { component } => self
                .entity(component)
                .and_then(|id| self.frame.conductivities.get(&id))
                .and_then(|k| self.symbol_value(k))
                .or_else(|| self.component(component)),
            Defect::UnanchoredPart { components } => components.first().and_then(|c| self.component(c)),
            Defect::PureNeumannUnanchored | Defect::NetFluxImbalance { .. } => None,
        }
    }

    fn template_defect(&self, stage: &str, e: &TemplateError) -> DefectEntry {
        match e {
            TemplateError::Parse(p) => parse_defect(p),
            _ => DefectEntry::new(stage, e, e, self.template(e)),
        }
    }

    fn component_defect(&self, e: &ComponentError) -> DefectEntry {
        let sentence = match e {
            ComponentError::Template(t) => return self.template_defect("component", t),
            ComponentError::NonPositiveDimension { component, .. } | ComponentError::DanglingComponent { component } => {
                self.component(component)
            }
            ComponentError::NoSharedFace { first, .. } => self.component(first),
        };
        DefectEntry::new("component", e, e, sentence)
    }

    fn quasi1d_defect(&self, e: &Quasi1dError) -> DefectEntry {
        match e {
            Quasi1dError::Template(t) => self.template_defect("solver", t),
            _ => DefectEntry::new("solver", e, e, None),
        }
    }

    fn genwall_defect(&self, e: &GenWallError) -> DefectEntry {
        match e {
            GenWallError::Template(t) => self.template_defect("bounds", t),
            GenWallError::NoRateQoi => DefectEntry::new("bounds", e, e, None),
            GenWallError::SingularSystem => DefectEntry::new("bounds", e, e, None),
        }
    }
}

#[allow(clippy::large_enum_variant)]
pub enum Solution {
    Quasi1d { info: Quasi1dInfo, solution: Quasi1dSolution },
    GeneralizedWall { info: GeneralizedWallInfo, bounds: BoundResult, fe: Option<FeOutcome> },
}

pub struct FeOutcome {
    pub solution: FeSolution,
    pub converged: bool,
}

pub struct Outcome {
    pub frame: Frame,
    pub template: PdeTemplate,
    pub system: System,
    pub diagnosis: Diagnosis,
    pub class: ProblemClass,
    pub solution: Solution,
    pub timing_ms: BTreeMap<String, f64>,
}

/// What the pipeline produced before failing, for the defect report.
#[derive(Debug, Default)]
pub struct Failure {
    pub frame: Option<Frame>,
    pub diagnosis: Option<Diagnosis>,
    pub defects: Vec<DefectEntry>,
}

fn fail(frame: Option<Frame>, defect: DefectEntry) -> Box<Failure> {
    Box::new(Failure { frame, diagnosis: None, defects: vec![defect] })
}

/// Parse, assemble, diagnose, classify and solve one problem statement.
pub fn solve_problem(src: &str, name: &str, commonsense: &Commonsense, opts: &RunOptions) -> Result<Outcome, Box<Failure>> {
    let mut timing = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |stage: &str, timing: &mut BTreeMap<String, f64>| {
        timing.insert(stage.to_string(), clock.elapsed().as_secs_f64() * 1e3);
        clock = Instant::now();
    };
    let frame = parse_statement(src, name, commonsense).map_err(|e| fail(None, parse_defect(&e)))?;
    lap("parse", &mut timing);
    let prov = Provenance { frame: &frame };
    let template = match assemble_template(&frame) {
        Ok(t) => t,
        Err(e) => {
            let d = prov.template_defect("template", &e);
            return Err(fail(Some(frame), d));
        }
    };
    let diagnosis = check_well_posed(&template);
    if !diagnosis.is_ok() {
        let defects = diagnosis.defects.iter().map(|d| DefectEntry::new("well_posedness", d, d, prov.defect(d))).collect();
        return Err(Box::new(Failure { frame: Some(frame), diagnosis: Some(diagnosis), defects }));
    }
    let class = match classify_problem(&template, opts.bi_threshold) {
        Ok(c) => c,
        Err(e) => {
            let d = prov.template_defect("classify", &e);
            return Err(fail(Some(frame), d));
        }
    };
    let system = match instantiate_components(&template).and_then(|c| connect_system(&template, c)) {
        Ok(s) => s,
        Err(e) => {
            let d = prov.component_defect(&e);
            return Err(fail(Some(frame), d));
        }
    };
    lap("template", &mut timing);
    let solution = match &class {
        ProblemClass::Quasi1d(info) => match solve_quasi1d(&template, &system) {
            Ok(solution) => Solution::Quasi1d { info: info.clone(), solution },
            Err(e) => {
                let d = prov.quasi1d_defect(&e);
                return Err(fail(Some(frame), d));
            }
        },
        ProblemClass::GeneralizedWall(info) => {
            let mut bounds = match solve_bounds(&template, &system, info) {
                Ok(b) => b,
                Err(e) => {
                    let d = prov.genwall_defect(&e);
                    return Err(fail(Some(frame), d));
                }
            };
            lap("bounds", &mut timing);
            let fe = if opts.fe {
                let outcome = match fem::solve_wall_fe(&template, &system, info, &bounds.constants, &opts.adaptive) {
                    Ok(solution) => FeOutcome { solution, converged: true },
                    Err(FemError::BudgetExceeded { solution, .. }) => FeOutcome { solution: *solution, converged: false },
                    Err(e) => return Err(fail(Some(frame), DefectEntry::new("fem", &e, &e, None))),
                };
                bounds.h_fe = Some(outcome.solution.qoi);
                bounds.fe_error_estimate = Some(outcome.solution.qoi_estimate);
                Some(outcome)
            } else {
                None
            };
            Solution::GeneralizedWall { info: info.clone(), bounds, fe }
        }
    };
    lap("solve", &mut timing);
    Ok(Outcome { frame, template, system, diagnosis, class, solution, timing_ms: timing })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntitySummary {
    pub name: String,
    pub state: State,
    pub insulator: bool,
    pub component: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParseSummary {
    pub entities: Vec<EntitySummary>,
    pub components: Vec<String>,
    pub graph: Vec<[String; 2]>,
}

impl ParseSummary {
    pub fn of(frame: &Frame) -> ParseSummary {
        ParseSummary {
            entities: frame
                .entities
                .iter()
                .enumerate()
                .filter(|(_, e)| !e.is_parent && !e.is_archetype)
                .map(|(i, e)| EntitySummary {
                    name: e.canonical_name.clone(),
                    state: e.state,
                    insulator: e.is_insulator,
                    component: frame.components.iter().any(|c| c.0 == i),
                })
                .collect(),
            components: frame.components.iter().map(|&c| frame.name(c).to_string()).collect(),
            graph: frame.graph.edges.iter().map(|e| [frame.name(e.a).to_string(), frame.name(e.b).to_string()]).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiotReport {
    pub value: f64,
    pub threshold: f64,
    /// `small`, `not small`, or `not applicable` when no lateral face exchanges heat.
    pub verdict: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PortValue {
    pub position: f64,
    pub temperature: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QoiReport {
    pub description: String,
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quasi1dReport {
    pub coordinate: String,
    pub ports: Vec<PortValue>,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundPanel {
    pub h_lb: f64,
    pub h_ub: f64,
    pub h_fe: Option<f64>,
    pub fe_estimate: Option<f64>,
    pub ordering_ok: bool,
    pub violations: Vec<String>,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeReport {
    pub converged: bool,
    pub dofs: usize,
    pub triangles: usize,
    pub qoi: f64,
    pub qoi_estimate: f64,
    pub energy_estimate: f64,
    pub energy_norm: f64,
    pub residual: f64,
    pub iterations: Vec<IterationRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionReport {
    pub schema: String,
    pub problem: String,
    /// `ok`, `partial` (finite element budget exhausted) or `error`.
    pub status: String,
    pub problem_class: Option<String>,
    pub parse: Option<ParseSummary>,
    pub diagnosis: Option<Diagnosis>,
    pub biot: Option<BiotReport>,
    pub qoi: Vec<QoiReport>,
    pub quasi1d: Option<Quasi1dReport>,
    pub bounds: Option<BoundPanel>,
    pub fe: Option<FeReport>,
    pub figures: Vec<String>,
    pub defects: Vec<DefectEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<BTreeMap<String, f64>>,
}

impl SolutionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Human-readable description of a quantity of interest.
pub fn describe_qoi(t: &PdeTemplate, q: &Qoi) -> String {
    let faces = |fs: &[usize]| fs.iter().map(|&f| t.face_label(f)).collect::<Vec<_>>().join(", ");
    match q {
        Qoi::FieldPlot { coordinate } => format!("temperature field along {coordinate}"),
        Qoi::TemperatureAt { coordinate, at } => format!("temperature at {coordinate} = {}", fmt_rational(at)),
        Qoi::HeatRateAt { faces: fs } => format!("outward heat transfer rate over {}", faces(fs)),
        Qoi::FluxAt { faces: fs } => format!("outward heat flux over {}", faces(fs)),
        Qoi::NondimensionalH { symbol, faces: fs, .. } => {
            format!("nondimensional heat transfer rate {} over {}", symbol.as_deref().unwrap_or("H"), faces(fs))
        }
    }
}

pub fn build_report(o: &Outcome, figures: Vec<String>, with_timing: bool) -> SolutionReport {
    let mut r = SolutionReport {
        schema: SCHEMA.into(),
        problem: o.template.source_name.clone(),
        status: "ok".into(),
        problem_class: Some(o.class.name().to_string()),
        parse: Some(ParseSummary::of(&o.frame)),
        diagnosis: Some(o.diagnosis.clone()),
        biot: None,
        qoi: Vec::new(),
        quasi1d: None,
        bounds: None,
        fe: None,
        figures,
        defects: Vec::new(),
        timing_ms: with_timing.then(|| o.timing_ms.clone()),
    };
    match &o.solution {
        Solution::Quasi1d { info, solution } => {
            let verdict = match (info.biot_gated, info.biot_small) {
                (false, _) => "not applicable",
                (true, true) => "small",
                (true, false) => "not small",
            };
            r.biot = Some(BiotReport { value: info.biot.value, threshold: BI_THRESHOLD, verdict: verdict.into() });
            r.qoi = solution
                .qoi_results
                .iter()
                .map(|q| QoiReport { description: describe_qoi(&o.template, &q.qoi), value: q.value })
                .collect();
            r.quasi1d = Some(Quasi1dReport {
                coordinate: solution.coordinate.clone(),
                ports: solution
                    .port_positions
                    .iter()
                    .zip(&solution.port_values)
                    .map(|(&position, &temperature)| PortValue { position, temperature })
                    .collect(),
                residual: solution.residual,
            });
        }
        Solution::GeneralizedWall { bounds, fe, .. } => {
            let ordering = check_ordering(bounds);
            r.bounds = Some(BoundPanel {
                h_lb: bounds.h_lb,
                h_ub: bounds.h_ub,
                h_fe: bounds.h_fe,
                fe_estimate: bounds.fe_error_estimate,
                ordering_ok: ordering.is_ok(),
                violations: ordering.violations,
                c1: bounds.constants.c1,
                c2: bounds.constants.c2,
            });
            r.qoi = o
                .template
                .qoi
                .iter()
                .map(|q| QoiReport {
                    description: describe_qoi(&o.template, q),
                    value: matches!(q, Qoi::NondimensionalH { .. }).then(|| bounds.h_fe).flatten(),
                })
                .collect();
            if let Some(fe) = fe {
                let s = &fe.solution;
                if !fe.converged {
                    r.status = "partial".into();
                    r.defects.push(DefectEntry {
                        stage: "fem".into(),
                        kind: "BudgetExceeded".into(),
                        message: format!("dof cap reached with {} dofs before the tolerance was met", s.mesh.n_vertices()),
                        sentence: None,
                    });
                }
                r.fe = Some(FeReport {
                    converged: fe.converged,
                    dofs: s.mesh.n_vertices(),
                    triangles: s.mesh.triangles.len(),
                    qoi: s.qoi,
                    qoi_estimate: s.qoi_estimate,
                    energy_estimate: s.energy_estimate,
                    energy_norm: s.energy_norm,
                    residual: s.residual,
                    iterations: s.log.clone(),
                });
            }
        }
    }
    r
}

pub fn failure_report(name: &str, failure: &Failure) -> SolutionReport {
    SolutionReport {
        schema: SCHEMA.into(),
        problem: name.into(),
        status: "error".into(),
        problem_class: None,
        parse: failure.frame.as_ref().map(ParseSummary::of),
        diagnosis: failure.diagnosis.clone(),
        biot: None,
        qoi: Vec::new(),
        quasi1d: None,
        bounds: None,
        fe: None,
        figures: Vec::new(),
        defects: failure.defects.clone(),
        timing_ms: None,
    }
}

/// Renders every figure of a solved problem as `(file name, SVG)`.
pub fn render_figures(o: &Outcome) -> Vec<(String, String)> {
    let mut out = vec![
        ("graph.svg".to_string(), figures::render_graph_figure(&o.frame)),
        ("geometry.svg".to_string(), figures::render_geometry_figure(&o.template, &o.system)),
    ];
    match &o.solution {
        Solution::Quasi1d { solution, .. } => out.push(("field.svg".into(), figures::render_quasi1d_field(solution))),
        Solution::GeneralizedWall { bounds, fe, .. } => {
            let field = match fe {
                Some(fe) => {
                    let m = &fe.solution.mesh;
                    figures::render_contour_field(
                        &m.vertices,
                        &m.triangles,
                        &fe.solution.values,
                        "finite element temperature field",
                    )
                }
                None => {
                    let (v, t, u) = figures::upper_bound_field(&o.system, bounds);
                    figures::render_contour_field(&v, &t, &u, "upper-bound minimizer (slice-uniform field)")
                }
            };
            out.push(("field.svg".into(), field));
            out.push(("bounds.svg".into(), figures::render_bounds_figure(bounds)));
        }
    }
    out
}

/// Writes the figures and `report.json` into `dir`; returns the report.
pub fn write_outputs(o: &Outcome, dir: &Path, with_timing: bool) -> std::io::Result<SolutionReport> {
    std::fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    for (name, svg) in render_figures(o) {
        std::fs::write(dir.join(&name), svg)?;
        names.push(name);
    }
    let report = build_report(o, names, with_timing);
    std::fs::write(dir.join("report.json"), report.to_json())?;
    Ok(report)
}
