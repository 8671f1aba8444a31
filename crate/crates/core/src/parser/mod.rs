//! Frame-based parsing of controlled-English conduction problems.
//!
//! The pipeline runs in fixed stages over the tagged sentences: entities and
//! snippets, attributes, commonsense facts, solid/fluid state, inheritance,
//! instantiation, the heat-path graph, components, domains, boundary
//! conditions and quantities of interest, conductivities, and parameter
//! bindings. Each stage is a public function so it can be exercised alone.

mod chunk;
mod entities;
mod problem;
mod vocab;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Serialize, Serializer};

pub use chunk::{Chunk, Clause, NounPhrase, VerbGroup};
pub use entities::{
    build_connection_graph, classify_state, derive_attributes, extract_entities, extract_snippets, identify_components,
    incorporate_commonsense, resolve_inheritance, resolve_instantiation,
};
pub use problem::{bind_parameters, check_domain_overlap, extract_bcs_and_qoi, extract_domains, extract_properties};
pub use vocab::{VerbKind, Vocabulary};

use crate::expr::{Affine, Rational};
use crate::text::{Document, TextError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("commonsense database sentence {sentence} could not be parsed: {text:?}")]
    MalformedDatabase { sentence: usize, text: String },
    #[error("entity '{entity}' has both solid and fluid evidence")]
    ConflictingState { entity: String },
    #[error("inheritance cycle through '{entity}'")]
    CyclicInheritance { entity: String },
    #[error("the statement has no components")]
    NoComponents,
    #[error("component '{component}' has no spatial domain")]
    MissingDomain { component: String },
    #[error("spatial domain in sentence {sentence} is invalid: {reason}")]
    InvalidDomain { sentence: usize, reason: String },
    #[error("domains of '{first}' and '{second}' overlap")]
    OverlappingDomains { first: String, second: String },
    #[error("heat transfer coefficient '{symbol}' (sentence {sentence}) has no fluid temperature")]
    IncompleteRobin { symbol: String, sentence: usize },
    #[error("sentence {sentence}: cannot resolve the face for '{what}'")]
    UnknownFace { sentence: usize, what: String },
    #[error("component '{component}' has no thermal conductivity")]
    MissingConductivity { component: String },
    #[error("symbol '{symbol}' is bound to {first} and to {second} (sentence {sentence})")]
    DuplicateBinding { symbol: String, first: String, second: String, sentence: usize },
    #[error("sentence {sentence}: right side of '{symbol} = ...' is not numeric")]
    NonNumericRhs { symbol: String, sentence: usize },
}

impl ParseError {
    /// Sentence index the error points at, if any.
    pub fn sentence(&self) -> Option<usize> {
        match self {
            ParseError::MalformedDatabase { sentence, .. }
            | ParseError::InvalidDomain { sentence, .. }
            | ParseError::IncompleteRobin { sentence, .. }
            | ParseError::UnknownFace { sentence, .. }
            | ParseError::DuplicateBinding { sentence, .. }
            | ParseError::NonNumericRhs { sentence, .. } => Some(*sentence),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct EntityId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryClass {
    RightCylinder,
    Parallelepiped,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dimension {
    pub symbol: String,
    /// Coordinate the dimension runs along, when stated.
    pub axis: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Attribute {
    /// Complement noun phrase of a copular clause ("gas", "solid object").
    Text(String),
    Insulator,
    Geometry(GeometryClass),
    CrossSection(Vec<Dimension>),
    Length(String),
    Conductivity(String),
    Temperature(String),
}

impl Attribute {
    /// Attributes of the same kind that an entity holds at most once; an
    /// explicit value blocks inherited ones.
    fn singular_kind(&self) -> Option<u8> {
        match self {
            Attribute::Geometry(_) => Some(0),
            Attribute::CrossSection(_) => Some(1),
            Attribute::Length(_) => Some(2),
            Attribute::Conductivity(_) => Some(3),
            Attribute::Temperature(_) => Some(4),
            Attribute::Text(_) | Attribute::Insulator => None,
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Attribute::Text(t) => write!(f, "{t}"),
            Attribute::Insulator => write!(f, "class:insulator"),
            Attribute::Geometry(GeometryClass::RightCylinder) => write!(f, "geometry:right_cylinder"),
            Attribute::Geometry(GeometryClass::Parallelepiped) => write!(f, "geometry:parallelepiped"),
            Attribute::CrossSection(dims) => {
                let parts: Vec<String> = dims
                    .iter()
                    .map(|d| match &d.axis {
                        Some(a) => format!("{}@{a}", d.symbol),
                        None => d.symbol.clone(),
                    })
                    .collect();
                write!(f, "cross_section:{}", parts.join(","))
            }
            Attribute::Length(s) => write!(f, "length:{s}"),
            Attribute::Conductivity(s) => write!(f, "conductivity:{s}"),
            Attribute::Temperature(s) => write!(f, "temperature:{s}"),
        }
    }
}

impl Serialize for Attribute {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum State {
    Solid,
    Fluid,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entity {
    pub canonical_name: String,
    pub aliases: BTreeSet<String>,
    pub attributes: BTreeSet<Attribute>,
    pub state: State,
    pub parent: Option<EntityId>,
    pub archetype: Option<EntityId>,
    pub is_insulator: bool,
    pub is_parent: bool,
    pub is_archetype: bool,
}

impl Entity {
    pub fn new(name: &str) -> Entity {
        Entity {
            canonical_name: name.to_string(),
            aliases: BTreeSet::new(),
            attributes: BTreeSet::new(),
            state: State::Unknown,
            parent: None,
            archetype: None,
            is_insulator: false,
            is_parent: false,
            is_archetype: false,
        }
    }

    pub fn text_attributes(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().filter_map(|a| match a {
            Attribute::Text(t) => Some(t.as_str()),
            _ => None,
        })
    }

    pub fn geometry(&self) -> Option<GeometryClass> {
        self.attributes.iter().find_map(|a| match a {
            Attribute::Geometry(g) => Some(*g),
            _ => None,
        })
    }

    pub fn cross_section(&self) -> Option<&[Dimension]> {
        self.attributes.iter().find_map(|a| match a {
            Attribute::CrossSection(d) => Some(d.as_slice()),
            _ => None,
        })
    }

    pub fn length(&self) -> Option<&str> {
        self.attributes.iter().find_map(|a| match a {
            Attribute::Length(s) => Some(s.as_str()),
            _ => None,
        })
    }

    pub fn conductivity(&self) -> Option<&str> {
        self.attributes.iter().find_map(|a| match a {
            Attribute::Conductivity(s) => Some(s.as_str()),
            _ => None,
        })
    }

    pub fn temperature(&self) -> Option<&str> {
        self.attributes.iter().find_map(|a| match a {
            Attribute::Temperature(s) => Some(s.as_str()),
            _ => None,
        })
    }

    /// Adds inherited attributes without overriding explicit singular ones.
    /// Returns true if anything was added.
    pub fn inherit(&mut self, from: &BTreeSet<Attribute>) -> bool {
        let mut changed = false;
        for a in from {
            let blocked = a.singular_kind().is_some_and(|k| self.attributes.iter().any(|b| b.singular_kind() == Some(k)));
            if !blocked {
                changed |= self.attributes.insert(a.clone());
            }
        }
        if from.contains(&Attribute::Insulator) {
            self.is_insulator = true;
        }
        changed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SnippetObject {
    Entity(EntityId),
    Complement(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snippet {
    pub subject: EntityId,
    pub verb: String,
    pub object_or_complement: SnippetObject,
    pub sentence_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub a: EntityId,
    pub b: EntityId,
    pub word: String,
    pub sentence_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ConnectionGraph {
    pub nodes: Vec<EntityId>,
    pub edges: Vec<Edge>,
}

impl ConnectionGraph {
    pub fn degree(&self, e: EntityId) -> usize {
        self.edges.iter().filter(|x| x.a == e || x.b == e).count()
    }

    pub fn neighbours(&self, e: EntityId) -> Vec<EntityId> {
        self.edges
            .iter()
            .filter_map(|x| {
                if x.a == e {
                    Some(x.b)
                } else if x.b == e {
                    Some(x.a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn has_edge(&self, a: EntityId, b: EntityId) -> bool {
        self.edges.iter().any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a))
    }

    /// Adds an undirected edge unless it is a self-loop or already present.
    pub fn add_edge(&mut self, a: EntityId, b: EntityId, word: &str, sentence_index: usize) {
        if a != b && !self.has_edge(a, b) {
            self.edges.push(Edge { a, b, word: word.to_string(), sentence_index });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolBinding {
    pub symbol: String,
    #[serde(serialize_with = "crate::expr::serialize_rational")]
    pub value: Rational,
    pub provenance: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    Temperature,
    Flux,
    HeatTransferCoefficient,
    Insulated,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum FaceSelector {
    AxialLeft,
    AxialRight,
    Lateral,
    /// Plane `coordinate = at`.
    Plane {
        coordinate: String,
        at: Affine,
    },
    /// Every exterior face not assigned by another record.
    Remainder,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryConditionSpec {
    pub kind: BcKind,
    /// `None` only for the remainder selector, which spans all components.
    pub target_entity: Option<EntityId>,
    pub face: FaceSelector,
    pub h_symbol: Option<String>,
    pub fluid_temperature_symbol: Option<String>,
    pub flux_symbol: Option<String>,
    pub temperature_symbol: Option<String>,
    pub sentence_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QoiKind {
    TemperatureFieldPlot,
    TemperatureAtPoint,
    FluxAtFace,
    HeatRateAtFace,
    NondimensionalHWithBounds,
}

/// Normalization of H = Q / (k (T_hot - T_cold) length).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HNormalization {
    pub rate_symbol: String,
    pub conductivity: String,
    pub hot_temperature: String,
    pub cold_temperature: String,
    pub length: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QoiSpec {
    pub kind: QoiKind,
    pub symbol: Option<String>,
    pub target_entity: Option<EntityId>,
    pub location: Option<FaceSelector>,
    pub normalization: Option<HNormalization>,
    pub sentence_index: usize,
}

/// Per-coordinate open interval bounds of one component.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct DomainSpec {
    pub intervals: BTreeMap<String, (Affine, Affine)>,
    pub sentence_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SentenceAnalysis {
    pub chunks: Vec<Chunk>,
    pub clauses: Vec<Clause>,
}

/// Chunked and clause-segmented statement.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Analysis {
    pub sentences: Vec<SentenceAnalysis>,
}

impl Analysis {
    pub fn new(doc: &Document, vocab: &Vocabulary) -> Analysis {
        let sentences = doc
            .sentences
            .iter()
            .enumerate()
            .map(|(i, toks)| {
                let chunks = chunk::chunk_sentence(toks, vocab);
                let clauses = chunk::find_clauses(&chunks, i);
                SentenceAnalysis { chunks, clauses }
            })
            .collect();
        Analysis { sentences }
    }

    pub fn clauses(&self) -> impl Iterator<Item = (&Clause, &[Chunk])> {
        self.sentences.iter().flat_map(|s| s.clauses.iter().map(move |c| (c, s.chunks.as_slice())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frame {
    pub source_name: String,
    pub entities: Vec<Entity>,
    pub snippets: Vec<Snippet>,
    pub graph: ConnectionGraph,
    pub components: Vec<EntityId>,
    pub coordinate_vars: Vec<String>,
    pub domain_specs: BTreeMap<EntityId, DomainSpec>,
    pub bc_specs: Vec<BoundaryConditionSpec>,
    pub qoi_specs: Vec<QoiSpec>,
    pub conductivities: BTreeMap<EntityId, String>,
    pub bindings: BTreeMap<String, SymbolBinding>,
    #[serde(skip)]
    pub analysis: Analysis,
}

impl Frame {
    pub fn entity(&self, id: EntityId) -> &Entity {
        &self.entities[id.0]
    }

    pub fn name(&self, id: EntityId) -> &str {
        &self.entities[id.0].canonical_name
    }

    /// Looks up an entity by canonical name or alias (case-insensitive).
    pub fn find(&self, name: &str) -> Option<EntityId> {
        let n = name.to_lowercase();
        self.entities.iter().position(|e| e.canonical_name == n || e.aliases.contains(&n)).map(EntityId)
    }

    pub fn ids(&self) -> impl Iterator<Item = EntityId> {
        (0..self.entities.len()).map(EntityId)
    }

    pub fn binding(&self, symbol: &str) -> Option<&Rational> {
        self.bindings.get(symbol).map(|b| &b.value)
    }
}

/// Background facts merged into entity attributes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Commonsense {
    /// (entity name words, attributes) per database entity.
    pub facts: Vec<(Vec<String>, BTreeSet<Attribute>)>,
}

static BUNDLED_COMMONSENSE: &str = include_str!("../../data/commonsense.txt");

impl Commonsense {
    pub fn bundled() -> Commonsense {
        Commonsense::parse(BUNDLED_COMMONSENSE).expect("bundled commonsense database parses")
    }

    pub fn empty() -> Commonsense {
        Commonsense::default()
    }

    /// Runs the database through the same frontend and attribute stages; the
    /// database's own frame is discarded afterwards.
    pub fn parse(src: &str) -> Result<Commonsense, ParseError> {
        if src.trim().is_empty() {
            return Ok(Commonsense::empty());
        }
        let doc = crate::text::analyze(src, "commonsense")?;
        let vocab = Vocabulary::bundled();
        let mut frame = Frame::empty("commonsense");
        frame.analysis = Analysis::new(&doc, vocab);
        extract_entities(&mut frame, vocab);
        extract_snippets(&mut frame, vocab);
        for (i, s) in doc.marked.sentences.iter().enumerate() {
            if !frame.snippets.iter().any(|sn| sn.sentence_index == i) {
                return Err(ParseError::MalformedDatabase { sentence: i, text: s.clone() });
            }
        }
        derive_attributes(&mut frame, vocab);
        let facts = frame
            .entities
            .into_iter()
            .filter(|e| !e.attributes.is_empty())
            .map(|e| (e.canonical_name.split_whitespace().map(str::to_string).collect(), e.attributes))
            .collect();
        Ok(Commonsense { facts })
    }
}

impl Frame {
    pub fn empty(source_name: &str) -> Frame {
        Frame {
            source_name: source_name.to_string(),
            entities: Vec::new(),
            snippets: Vec::new(),
            graph: ConnectionGraph::default(),
            components: Vec::new(),
            coordinate_vars: Vec::new(),
            domain_specs: BTreeMap::new(),
            bc_specs: Vec::new(),
            qoi_specs: Vec::new(),
            conductivities: BTreeMap::new(),
            bindings: BTreeMap::new(),
            analysis: Analysis::default(),
        }
    }
}

/// Runs every parser stage in order.
pub fn parse_frame(doc: &Document, commonsense: &Commonsense) -> Result<Frame, ParseError> {
    let vocab = Vocabulary::bundled();
    let mut frame = Frame::empty(&doc.marked.source_name);
    frame.analysis = Analysis::new(doc, vocab);
    extract_entities(&mut frame, vocab);
    extract_snippets(&mut frame, vocab);
    derive_attributes(&mut frame, vocab);
    incorporate_commonsense(&mut frame, commonsense);
    classify_state(&mut frame, vocab)?;
    resolve_inheritance(&mut frame, vocab)?;
    resolve_instantiation(&mut frame, vocab);
    build_connection_graph(&mut frame, vocab);
    identify_components(&mut frame)?;
    extract_domains(&mut frame, vocab)?;
    extract_bcs_and_qoi(&mut frame, vocab)?;
    extract_properties(&mut frame)?;
    bind_parameters(&mut frame)?;
    check_domain_overlap(&frame)?;
    Ok(frame)
}

/// Convenience: text frontend plus [`parse_frame`].
pub fn parse_statement(raw: &str, source_name: &str, commonsense: &Commonsense) -> Result<Frame, ParseError> {
    let doc = crate::text::analyze(raw, source_name)?;
    parse_frame(&doc, commonsense)
}
