use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::chunk::{colon_list, coordinated, surface, Chunk, Clause};
use super::vocab::{contains_phrase, VerbKind, Vocabulary};
use super::{
    Attribute, Commonsense, Dimension, Entity, EntityId, Frame, GeometryClass, ParseError, Snippet, SnippetObject, State,
};

/// What a noun phrase or symbol chunk refers to, before alias resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Mention {
    Entity(String),
    Property { head: String, owner: Option<String> },
    Symbol(String),
    Other,
}

fn strip_numeral(words: &[String]) -> &[String] {
    match words.last() {
        Some(w) if words.len() > 1 && w.chars().all(|c| c.is_ascii_digit()) => &words[..words.len() - 1],
        _ => words,
    }
}

pub(crate) fn raw_mention(chunks: &[Chunk], i: usize, vocab: &Vocabulary) -> Mention {
    match &chunks[i] {
        Chunk::Math { .. } => chunks[i].symbol().map_or(Mention::Other, |s| Mention::Symbol(s.to_string())),
        Chunk::Np(np) => {
            let of_np = (chunks.get(i + 1).is_some_and(|c| c.is_adp("of")) && matches!(chunks.get(i + 2), Some(Chunk::Np(_))))
                .then(|| raw_mention(chunks, i + 2, vocab));
            let core = strip_numeral(&np.words);
            if let Some((head, n)) = vocab.property_head(core) {
                let lead: Vec<&str> = np.words[..core.len() - n]
                    .iter()
                    .zip(&np.tags)
                    .filter(|(_, t)| **t == crate::text::Pos::Noun)
                    .map(|(w, _)| w.as_str())
                    .collect();
                let owner = if !lead.is_empty() {
                    Some(lead.join(" "))
                } else {
                    match of_np {
                        Some(Mention::Entity(o)) => Some(o),
                        _ => None,
                    }
                };
                return Mention::Property { head, owner };
            }
            match of_np {
                Some(Mention::Entity(o)) => Mention::Entity(format!("{o} {}", np.text())),
                _ => Mention::Entity(np.text()),
            }
        }
        _ => Mention::Other,
    }
}

/// True for the `Y` of an entity phrase "X of the Y", which is folded into X.
fn folded_into_previous(chunks: &[Chunk], i: usize, vocab: &Vocabulary) -> bool {
    i >= 2 && chunks[i - 1].is_adp("of") && matches!(raw_mention(chunks, i - 2, vocab), Mention::Entity(_))
}

fn copular_regions(clauses: &[Clause]) -> HashSet<usize> {
    clauses.iter().filter(|c| c.verb.kind == VerbKind::Copular).flat_map(|c| c.region.clone()).collect()
}

impl Frame {
    /// Resolves a mention name: exact name or alias first, then a unique
    /// entity whose name ends with the mention ("wall" → "composite wall").
    pub fn resolve(&self, name: &str) -> Option<EntityId> {
        if let Some(id) = self.find(name) {
            return Some(id);
        }
        let suffix = format!(" {}", name.to_lowercase());
        let hits: Vec<EntityId> = self.ids().filter(|id| self.entities[id.0].canonical_name.ends_with(&suffix)).collect();
        (hits.len() == 1).then(|| hits[0])
    }

    pub(crate) fn mention_entity(&self, chunks: &[Chunk], i: usize, vocab: &Vocabulary) -> Option<EntityId> {
        match raw_mention(chunks, i, vocab) {
            Mention::Entity(n) => self.resolve(&n),
            _ => None,
        }
    }

    /// Entity a clause subject stands for: the entity itself, or the owner of
    /// a property phrase ("the thermal conductivity of the fir layer").
    pub(crate) fn subject_entity(&self, chunks: &[Chunk], i: usize, vocab: &Vocabulary) -> Option<EntityId> {
        match raw_mention(chunks, i, vocab) {
            Mention::Entity(n) => self.resolve(&n),
            Mention::Property { owner: Some(o), .. } => self.resolve(&o),
            _ => None,
        }
    }
}

/// Object chunk indices of a clause plus participial links inside a
/// colon-introduced list.
pub(crate) fn clause_objects(clause: &Clause, chunks: &[Chunk], vocab: &Vocabulary) -> (Vec<usize>, Vec<(usize, usize, String)>) {
    let r = clause.region.clone();
    if r.len() > 2
        && matches!(raw_mention(chunks, r.start, vocab), Mention::Property { .. })
        && matches!(&chunks[r.start + 1], Chunk::Punct(p) if p == ":")
    {
        return colon_list(chunks, r.start + 2..r.end);
    }
    (coordinated(chunks, r), Vec::new())
}

/// Maximal noun runs become entities; "X of the Y" and "Y X" coalesce, and a
/// name that is the suffix of exactly one longer name becomes its alias.
pub fn extract_entities(frame: &mut Frame, vocab: &Vocabulary) {
    let mut mentions: Vec<String> = Vec::new();
    let mut owners: Vec<String> = Vec::new();
    for s in &frame.analysis.sentences {
        let excluded = copular_regions(&s.clauses);
        for (i, c) in s.chunks.iter().enumerate() {
            if !matches!(c, Chunk::Np(_)) || excluded.contains(&i) || folded_into_previous(&s.chunks, i, vocab) {
                continue;
            }
            match raw_mention(&s.chunks, i, vocab) {
                Mention::Entity(n) => mentions.push(n),
                Mention::Property { owner: Some(o), .. } => owners.push(o),
                _ => {}
            }
        }
    }

    let distinct: Vec<String> = {
        let mut seen = HashSet::new();
        mentions.iter().filter(|m| seen.insert(m.as_str())).cloned().collect()
    };
    let canonical_of = |name: &str| -> String {
        let suffix = format!(" {name}");
        let longer: Vec<&String> = distinct.iter().filter(|t| t.ends_with(&suffix)).collect();
        if longer.len() == 1 {
            longer[0].clone()
        } else {
            name.to_string()
        }
    };

    let mut order: Vec<String> = Vec::new();
    let mut aliases: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for m in &mentions {
        let canon = canonical_of(m);
        if !order.contains(&canon) {
            order.push(canon.clone());
        }
        if *m != canon {
            aliases.entry(canon).or_default().insert(m.clone());
        }
    }
    for o in &owners {
        let canon = canonical_of(o);
        if order.contains(&canon) && *o != canon {
            aliases.entry(canon).or_default().insert(o.clone());
        }
    }
    frame.entities = order
        .into_iter()
        .map(|name| {
            let mut e = Entity::new(&name);
            e.aliases = aliases.remove(&name).unwrap_or_default();
            e
        })
        .collect();
}

/// One snippet per (subject entity, object) pair of each present-tense clause.
pub fn extract_snippets(frame: &mut Frame, vocab: &Vocabulary) {
    let mut snippets = Vec::new();
    for (clause, chunks) in frame.analysis.clauses() {
        let region_text = surface(&chunks[clause.region.clone()]);
        for &s in &clause.subjects {
            let Some(subject) = frame.subject_entity(chunks, s, vocab) else { continue };
            let prefix = match raw_mention(chunks, s, vocab) {
                Mention::Property { head, .. } => format!("{head} "),
                _ => String::new(),
            };
            let mut push = |object| {
                snippets.push(Snippet {
                    subject,
                    verb: clause.verb.phrase.clone(),
                    object_or_complement: object,
                    sentence_index: clause.sentence,
                })
            };
            if clause.verb.kind != VerbKind::Copular && prefix.is_empty() {
                let (objects, _) = clause_objects(clause, chunks, vocab);
                let ids: Vec<EntityId> = objects.iter().filter_map(|&o| frame.mention_entity(chunks, o, vocab)).collect();
                if !ids.is_empty() {
                    ids.into_iter().for_each(|id| push(SnippetObject::Entity(id)));
                    continue;
                }
            }
            if !region_text.is_empty() {
                push(SnippetObject::Complement(format!("{prefix}{region_text}")));
            }
        }
    }
    frame.snippets = snippets;
}

fn geometry_of(text: &str, vocab: &Vocabulary) -> Option<GeometryClass> {
    let hit = |list: &[String]| list.iter().any(|k| contains_phrase(text, k));
    if hit(&vocab.geometry.right_cylinder) {
        Some(GeometryClass::RightCylinder)
    } else if hit(&vocab.geometry.parallelepiped) {
        Some(GeometryClass::Parallelepiped)
    } else {
        None
    }
}

fn is_head(head: &str, names: &[&str]) -> bool {
    names.contains(&head)
}

const CONDUCTIVITY: &[&str] = &["thermal conductivity", "conductivity"];
const LENGTH: &[&str] = &["length", "thickness"];
const TEMPERATURE: &[&str] = &["temperature"];
const DIMENSIONS: &[&str] = &["dimensions", "dimension"];

/// Symbols listed after "dimensions", each optionally followed by "(in x_k)".
fn dimension_list(chunks: &[Chunk], start: usize, end: usize) -> Vec<Dimension> {
    let mut dims = Vec::new();
    let mut k = start;
    while k < end {
        if let Some(sym) = chunks[k].symbol() {
            let mut dim = Dimension { symbol: crate::expr::normalize_symbol(sym), axis: None };
            if k + 3 < end
                && matches!(&chunks[k + 1], Chunk::Punct(p) if p == "(")
                && chunks[k + 2].is_adp("in")
                && chunks[k + 3].symbol().is_some()
            {
                dim.axis = chunks[k + 3].symbol().map(crate::expr::normalize_symbol);
                k += 4;
                if k < end && matches!(&chunks[k], Chunk::Punct(p) if p == ")") {
                    k += 1;
                }
            } else {
                k += 1;
            }
            dims.push(dim);
        } else if chunks[k].is_separator() {
            k += 1;
        } else {
            break;
        }
    }
    dims
}

/// Attributes carried by the predicate of one clause, with the entity each
/// should attach to (`None` = the clause subjects).
fn predicate_attributes(
    frame: &Frame,
    clause: &Clause,
    chunks: &[Chunk],
    vocab: &Vocabulary,
) -> Vec<(Option<EntityId>, Attribute)> {
    let mut out = Vec::new();
    let r = clause.region.clone();
    if clause.verb.kind == VerbKind::Copular {
        let first_np = r.clone().find(|&k| matches!(chunks[k], Chunk::Np(_)));
        if let Some(k) = first_np {
            if let Mention::Entity(text) = raw_mention(chunks, k, vocab) {
                let complement = surface(&chunks[r.clone()]);
                if let Some(g) = geometry_of(&complement, vocab) {
                    out.push((None, Attribute::Geometry(g)));
                }
                if vocab.state.insulator.iter().any(|w| contains_phrase(&text, w)) {
                    out.push((None, Attribute::Insulator));
                }
                out.push((None, Attribute::Text(text)));
            }
        }
    }
    let mut last_entity: Option<EntityId> = None;
    for k in r.clone() {
        if let Some(id) = frame.mention_entity(chunks, k, vocab) {
            last_entity = Some(id);
            continue;
        }
        let Mention::Property { head, .. } = raw_mention(chunks, k, vocab) else { continue };
        let next_sym = chunks.get(k + 1).filter(|_| k + 1 < r.end).and_then(Chunk::symbol).map(crate::expr::normalize_symbol);
        if is_head(&head, CONDUCTIVITY) {
            if let Some(s) = next_sym {
                out.push((None, Attribute::Conductivity(s)));
            }
        } else if is_head(&head, LENGTH) {
            if let Some(s) = next_sym {
                out.push((None, Attribute::Length(s)));
            }
        } else if is_head(&head, TEMPERATURE) && clause.verb.kind != VerbKind::Definition {
            if let Some(s) = next_sym {
                let after_at = k > r.start && chunks[k - 1].is_adp("at");
                let target = if after_at { last_entity } else { None };
                out.push((target, Attribute::Temperature(s)));
            }
        } else if head == "cross-section" && clause.verb.kind == VerbKind::Copular {
            let dims_at = (k + 1..r.end)
                .find(|&j| matches!(raw_mention(chunks, j, vocab), Mention::Property { head, .. } if is_head(&head, DIMENSIONS)));
            let dims = dims_at.map(|j| dimension_list(chunks, j + 1, r.end)).unwrap_or_default();
            out.push((None, Attribute::CrossSection(dims)));
        }
    }
    out
}

/// Turns clause predicates into attributes on the subject entities.
pub fn derive_attributes(frame: &mut Frame, vocab: &Vocabulary) {
    let mut adds: Vec<(EntityId, Attribute)> = Vec::new();
    for (clause, chunks) in frame.analysis.clauses() {
        let mut subjects = Vec::new();
        let mut property_subject: Option<String> = None;
        for &s in &clause.subjects {
            match raw_mention(chunks, s, vocab) {
                Mention::Entity(n) => subjects.extend(frame.resolve(&n)),
                Mention::Property { head, owner: Some(o) } => {
                    subjects.extend(frame.resolve(&o));
                    property_subject = Some(head);
                }
                _ => {}
            }
        }
        if subjects.is_empty() {
            continue;
        }
        match property_subject.as_deref() {
            // "the thermal conductivity of E is $k$"
            Some(head) if head != "geometry" => {
                if clause.verb.kind == VerbKind::Copular {
                    if let Some(sym) =
                        chunks.get(clause.region.start).filter(|_| !clause.region.is_empty()).and_then(Chunk::symbol)
                    {
                        let sym = crate::expr::normalize_symbol(sym);
                        let attr = if is_head(head, CONDUCTIVITY) {
                            Some(Attribute::Conductivity(sym))
                        } else if is_head(head, LENGTH) {
                            Some(Attribute::Length(sym))
                        } else if is_head(head, TEMPERATURE) {
                            Some(Attribute::Temperature(sym))
                        } else {
                            None
                        };
                        if let Some(a) = attr {
                            adds.extend(subjects.iter().map(|&id| (id, a.clone())));
                        }
                    }
                }
            }
            _ => {
                for (target, attr) in predicate_attributes(frame, clause, chunks, vocab) {
                    match target {
                        Some(t) => adds.push((t, attr)),
                        None => adds.extend(subjects.iter().map(|&id| (id, attr.clone()))),
                    }
                }
            }
        }
    }
    for (id, attr) in adds {
        let e = &mut frame.entities[id.0];
        if attr == Attribute::Insulator {
            e.is_insulator = true;
        }
        e.attributes.insert(attr);
    }
}

/// Appends database attributes to every entity whose name contains all the
/// words of the database entity's name.
pub fn incorporate_commonsense(frame: &mut Frame, db: &Commonsense) {
    for e in &mut frame.entities {
        let words: HashSet<&str> = e.canonical_name.split_whitespace().collect();
        let mut merged = BTreeSet::new();
        for (name, attrs) in &db.facts {
            if name.iter().all(|w| words.contains(w.as_str())) {
                merged.extend(attrs.iter().cloned());
            }
        }
        if !merged.is_empty() {
            e.inherit(&merged);
        }
    }
}

fn state_from_text(e: &Entity, vocab: &Vocabulary) -> (bool, bool, bool) {
    let hit = |list: &[String]| e.text_attributes().any(|t| list.iter().any(|k| contains_phrase(t, k)));
    (hit(&vocab.state.solid), hit(&vocab.state.fluid), hit(&vocab.state.insulator))
}

pub fn classify_state(frame: &mut Frame, vocab: &Vocabulary) -> Result<(), ParseError> {
    for e in &mut frame.entities {
        let (solid, fluid, insulator) = state_from_text(e, vocab);
        if solid && fluid {
            return Err(ParseError::ConflictingState { entity: e.canonical_name.clone() });
        }
        e.state = if solid {
            State::Solid
        } else if fluid {
            State::Fluid
        } else {
            State::Unknown
        };
        if insulator {
            e.is_insulator = true;
            e.attributes.insert(Attribute::Insulator);
        }
    }
    Ok(())
}

/// Parent → child links from inheritance clauses; children receive parent
/// attributes and, when their own state is unknown, the parent's state.
pub fn resolve_inheritance(frame: &mut Frame, vocab: &Vocabulary) -> Result<(), ParseError> {
    let mut links: Vec<(EntityId, EntityId)> = Vec::new();
    for (clause, chunks) in frame.analysis.clauses() {
        if clause.verb.kind != VerbKind::Inheritance {
            continue;
        }
        let parents: Vec<EntityId> = clause.subjects.iter().filter_map(|&s| frame.mention_entity(chunks, s, vocab)).collect();
        let (objects, _) = clause_objects(clause, chunks, vocab);
        for &o in &objects {
            if let Some(child) = frame.mention_entity(chunks, o, vocab) {
                links.extend(parents.iter().filter(|&&p| p != child).map(|&p| (p, child)));
            }
        }
    }
    for &(p, c) in &links {
        frame.entities[c.0].parent = Some(p);
        frame.entities[p.0].is_parent = true;
    }
    for start in frame.ids() {
        let mut seen = HashSet::new();
        let mut cur = Some(start);
        while let Some(id) = cur {
            if !seen.insert(id) {
                return Err(ParseError::CyclicInheritance { entity: frame.name(id).to_string() });
            }
            cur = frame.entities[id.0].parent;
        }
    }
    // Propagate down the tree; depth is bounded by the entity count.
    for _ in 0..frame.entities.len() {
        let mut changed = false;
        for c in frame.ids() {
            let Some(p) = frame.entities[c.0].parent else { continue };
            let parent = frame.entities[p.0].clone();
            let child = &mut frame.entities[c.0];
            changed |= child.inherit(&parent.attributes);
            if child.state == State::Unknown && parent.state == State::Solid {
                child.state = State::Solid;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(())
}

/// "each X" marks archetype X; entities named "X <integer>" become its
/// instances and receive its attributes unless they state their own.
pub fn resolve_instantiation(frame: &mut Frame, vocab: &Vocabulary) {
    let mut archetypes = BTreeSet::new();
    for s in &frame.analysis.sentences {
        for (i, c) in s.chunks.iter().enumerate() {
            if let Chunk::Np(np) = c {
                if np.is_quantified(vocab) {
                    if let Some(id) = frame.mention_entity(&s.chunks, i, vocab) {
                        archetypes.insert(id);
                    }
                }
            }
        }
    }
    for &a in &archetypes {
        frame.entities[a.0].is_archetype = true;
        let prefix = format!("{} ", frame.entities[a.0].canonical_name.to_lowercase());
        let archetype = frame.entities[a.0].clone();
        for e in frame.entities.iter_mut() {
            let name = e.canonical_name.to_lowercase();
            let is_instance =
                name.strip_prefix(&prefix).is_some_and(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()));
            if is_instance {
                e.archetype = Some(a);
                e.inherit(&archetype.attributes);
                if e.state == State::Unknown {
                    e.state = archetype.state;
                }
            }
        }
    }
}

/// Heat-path edges from connection clauses and participial connections.
pub fn build_connection_graph(frame: &mut Frame, vocab: &Vocabulary) {
    let mut graph = super::ConnectionGraph { nodes: frame.ids().collect(), edges: Vec::new() };
    for (clause, chunks) in frame.analysis.clauses() {
        let (objects, links) = clause_objects(clause, chunks, vocab);
        for (a, b, word) in links {
            if let (Some(x), Some(y)) = (frame.mention_entity(chunks, a, vocab), frame.mention_entity(chunks, b, vocab)) {
                graph.add_edge(x, y, &word, clause.sentence);
            }
        }
        if !matches!(clause.verb.kind, VerbKind::Connection { .. }) {
            continue;
        }
        let subjects: Vec<EntityId> = clause.subjects.iter().filter_map(|&s| frame.mention_entity(chunks, s, vocab)).collect();
        for &o in &objects {
            let Some(obj) = frame.mention_entity(chunks, o, vocab) else { continue };
            for &s in &subjects {
                graph.add_edge(s, obj, &clause.verb.phrase, clause.sentence);
            }
        }
    }
    frame.graph = graph;
}

/// Whether `id` satisfies all four component conditions.
pub fn is_component(frame: &Frame, id: EntityId) -> bool {
    let e = frame.entity(id);
    frame.graph.degree(id) > 0 && e.state == State::Solid && !e.is_insulator && !e.is_parent && !e.is_archetype
}

pub fn identify_components(frame: &mut Frame) -> Result<(), ParseError> {
    frame.components = frame.ids().filter(|&id| is_component(frame, id)).collect();
    if frame.components.is_empty() {
        return Err(ParseError::NoComponents);
    }
    Ok(())
}
