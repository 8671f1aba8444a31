use std::collections::BTreeMap;

use super::chunk::{coordinated, Chunk, Clause};
use super::entities::{clause_objects, raw_mention, Mention};
use super::vocab::{VerbKind, Vocabulary};
use super::{
    BcKind, BoundaryConditionSpec, DomainSpec, EntityId, FaceSelector, Frame, HNormalization, ParseError, QoiKind, QoiSpec,
    State, SymbolBinding,
};
use crate::expr::{normalize_symbol, parse_relation_chain, Affine, Expr, Rational, Relation};

const COORDINATE_HEADS: &[&str] = &["coordinate", "coordinates", "axis", "coordinate system"];
const DOMAIN_HEADS: &[&str] = &["spatial domain", "domain"];
const FACE_HEADS: &[&str] = &["face", "faces", "axial face", "axial faces", "lateral face", "lateral faces", "boundary"];
const H_HEADS: &[&str] = &["heat transfer coefficient", "transfer coefficient", "coefficient"];
const FLUX_HEADS: &[&str] = &["heat flux", "flux"];
const TEMPERATURE_HEADS: &[&str] = &["temperature", "temperature distribution", "temperature field", "temperature profile"];
const RATE_HEADS: &[&str] = &["heat transfer rate", "transfer rate", "rate"];
const BOUND_HEADS: &[&str] = &["lower bound", "upper bound", "bound"];

fn property_head(chunks: &[Chunk], k: usize, vocab: &Vocabulary) -> Option<(String, Option<String>)> {
    match raw_mention(chunks, k, vocab) {
        Mention::Property { head, owner } => Some((head, owner)),
        _ => None,
    }
}

fn invalid(sentence: usize, reason: impl ToString) -> ParseError {
    ParseError::InvalidDomain { sentence, reason: reason.to_string() }
}

/// Splits at commas that are not inside parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

/// `lo < x < hi` (or `hi > x > lo`) chains, comma-separated per coordinate.
fn parse_box(text: &str, sentence: usize) -> Result<Vec<(String, Affine, Affine)>, ParseError> {
    let mut out = Vec::new();
    for part in split_top_level(text) {
        let (exprs, rels) = parse_relation_chain(part).map_err(|e| invalid(sentence, e))?;
        if exprs.len() != 3 {
            return Err(invalid(sentence, format!("'{}' is not a two-sided bound", part.trim())));
        }
        let Expr::Sym(var) = &exprs[1] else {
            return Err(invalid(sentence, format!("'{}' has no coordinate in the middle", part.trim())));
        };
        let lower_first = rels.iter().all(|r| matches!(r, Relation::Less | Relation::LessEq));
        let upper_first = rels.iter().all(|r| matches!(r, Relation::Greater | Relation::GreaterEq));
        let (a, b) =
            (exprs[0].to_affine().map_err(|e| invalid(sentence, e))?, exprs[2].to_affine().map_err(|e| invalid(sentence, e))?);
        match (lower_first, upper_first) {
            (true, _) => out.push((var.clone(), a, b)),
            (_, true) => out.push((var.clone(), b, a)),
            _ => return Err(invalid(sentence, format!("'{}' mixes directions", part.trim()))),
        }
    }
    Ok(out)
}

/// `coord = expr`.
fn parse_plane(text: &str) -> Option<(String, Affine)> {
    let (exprs, rels) = parse_relation_chain(text).ok()?;
    if rels != [Relation::Equal] {
        return None;
    }
    let Expr::Sym(var) = &exprs[0] else { return None };
    Some((var.clone(), exprs[1].to_affine().ok()?))
}

/// Coordinate variables, then per-component boxes from "spatial domain"
/// clauses or "E extends from $x = a$ to $x = b$". Without any stated domain,
/// a chain of components with lengths is laid end to end from 0.
pub fn extract_domains(frame: &mut Frame, vocab: &Vocabulary) -> Result<(), ParseError> {
    let mut coords: Vec<String> = Vec::new();
    let mut specs: BTreeMap<EntityId, DomainSpec> = BTreeMap::new();
    for (clause, chunks) in frame.analysis.clauses() {
        let subject_heads: Vec<(String, Option<String>)> =
            clause.subjects.iter().filter_map(|&s| property_head(chunks, s, vocab)).collect();
        if subject_heads.iter().any(|(h, _)| COORDINATE_HEADS.contains(&h.as_str())) {
            for k in coordinated(chunks, clause.region.clone()) {
                if let Some(s) = chunks[k].symbol() {
                    let s = normalize_symbol(s);
                    if !coords.contains(&s) {
                        coords.push(s);
                    }
                }
            }
        }
        for (head, owner) in &subject_heads {
            if !DOMAIN_HEADS.contains(&head.as_str()) {
                continue;
            }
            let Some(id) = owner.as_deref().and_then(|o| frame.resolve(o)) else { continue };
            let Some(eq) = clause.region.clone().find_map(|k| chunks[k].equation()) else { continue };
            let spec = specs.entry(id).or_default();
            spec.sentence_index = Some(clause.sentence);
            for (var, lo, hi) in parse_box(eq, clause.sentence)? {
                spec.intervals.insert(var, (lo, hi));
            }
        }
        if clause.verb.phrase == "extend from" {
            let r = clause.region.clone();
            let eqs: Vec<&str> = r.clone().filter_map(|k| chunks[k].equation()).collect();
            if eqs.len() < 2 {
                continue;
            }
            let (Some((v1, a)), Some((v2, b))) = (parse_plane(eqs[0]), parse_plane(eqs[1])) else {
                return Err(invalid(clause.sentence, "extent endpoints must be 'x = value'"));
            };
            if v1 != v2 {
                return Err(invalid(clause.sentence, "extent endpoints use different coordinates"));
            }
            for &s in &clause.subjects {
                if let Some(id) = frame.subject_entity(chunks, s, vocab) {
                    let spec = specs.entry(id).or_default();
                    spec.sentence_index = Some(clause.sentence);
                    spec.intervals.insert(v1.clone(), (a.clone(), b.clone()));
                }
            }
        }
    }
    if coords.is_empty() {
        for spec in specs.values() {
            for v in spec.intervals.keys() {
                if !coords.contains(v) {
                    coords.push(v.clone());
                }
            }
        }
    }
    specs.retain(|id, _| frame.components.contains(id));

    if specs.is_empty() {
        specs = domains_from_lengths(frame, &mut coords)?;
    }
    for &c in &frame.components {
        if !specs.contains_key(&c) {
            return Err(ParseError::MissingDomain { component: frame.name(c).to_string() });
        }
    }
    frame.coordinate_vars = coords;
    frame.domain_specs = specs;
    Ok(())
}

/// Lays components with `Length` attributes end to end along the path they
/// form in the connection graph.
fn domains_from_lengths(frame: &Frame, coords: &mut Vec<String>) -> Result<BTreeMap<EntityId, DomainSpec>, ParseError> {
    let comps = &frame.components;
    let missing = |c: EntityId| ParseError::MissingDomain { component: frame.name(c).to_string() };
    let comp_neighbours =
        |c: EntityId| -> Vec<EntityId> { frame.graph.neighbours(c).into_iter().filter(|n| comps.contains(n)).collect() };
    let start = comps.iter().copied().find(|&c| comp_neighbours(c).len() <= 1).ok_or_else(|| missing(comps[0]))?;
    let mut order = vec![start];
    while order.len() < comps.len() {
        let last = *order.last().unwrap();
        let next: Vec<EntityId> = comp_neighbours(last).into_iter().filter(|n| !order.contains(n)).collect();
        match next.as_slice() {
            [n] => order.push(*n),
            _ => return Err(missing(last)),
        }
    }
    if coords.is_empty() {
        coords.push("x".to_string());
    }
    let var = coords[0].clone();
    let mut at = Affine::zero();
    let mut specs = BTreeMap::new();
    for c in order {
        let len = frame.entity(c).length().ok_or_else(|| missing(c))?;
        let end = at.add(&Affine::symbol(len));
        let mut spec = DomainSpec::default();
        spec.intervals.insert(var.clone(), (at, end.clone()));
        specs.insert(c, spec);
        at = end;
    }
    Ok(specs)
}

/// Face phrase after `over`/`on`: "the face at $x = 0$", "the face $x = L$",
/// "the head lateral face", "the lateral faces".
fn face_after(
    frame: &Frame,
    chunks: &[Chunk],
    clause: &Clause,
    preps: &[&str],
    vocab: &Vocabulary,
) -> Option<(FaceSelector, Option<EntityId>)> {
    let r = clause.region.clone();
    let k = r.clone().find(|&k| preps.iter().any(|p| chunks[k].is_adp(p)))?;
    let (head, owner) = property_head(chunks, k + 1, vocab).filter(|(h, _)| FACE_HEADS.contains(&h.as_str()))?;
    let owner = owner.and_then(|o| frame.resolve(&o));
    if head.starts_with("lateral") {
        return Some((FaceSelector::Lateral, owner));
    }
    let mut j = k + 2;
    if j < r.end && chunks[j].is_adp("at") {
        j += 1;
    }
    let eq = chunks.get(j).filter(|_| j < r.end)?.equation()?;
    let (coordinate, at) = parse_plane(eq)?;
    Some((FaceSelector::Plane { coordinate, at }, owner))
}

fn entity_after(frame: &Frame, chunks: &[Chunk], clause: &Clause, prep: &str, vocab: &Vocabulary) -> Option<EntityId> {
    let r = clause.region.clone();
    let k = r.clone().find(|&k| chunks[k].is_adp(prep))?;
    (k + 1 < r.end).then(|| frame.mention_entity(chunks, k + 1, vocab)).flatten()
}

fn first_head(chunks: &[Chunk], clause: &Clause, vocab: &Vocabulary) -> Option<String> {
    clause.region.clone().find_map(|k| property_head(chunks, k, vocab)).map(|(h, _)| h)
}

fn has(list: &[&str], head: &str) -> bool {
    list.contains(&head)
}

/// Symbol definitions of the form "S given by expr" / "S is given by expr".
fn given_by_definitions(frame: &Frame) -> BTreeMap<String, (String, usize)> {
    let mut out = BTreeMap::new();
    for (si, s) in frame.analysis.sentences.iter().enumerate() {
        let c = &s.chunks;
        for k in 0..c.len() {
            let Some(sym) = c[k].symbol() else { continue };
            let expr = match (c.get(k + 1), c.get(k + 2), c.get(k + 3)) {
                (Some(Chunk::Verb(v)), Some(by), Some(e)) if v.first_lemma == "give" && by.is_adp("by") => e,
                (Some(Chunk::Verb(v)), Some(e), _) if v.phrase == "be given by" => e,
                _ => continue,
            };
            if let Chunk::Math { text, .. } = expr {
                out.insert(normalize_symbol(sym), (text.clone(), si));
            }
        }
    }
    out
}

fn factors(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Mul(a, b) => {
            factors(a, out);
            factors(b, out);
        }
        other => out.push(other.clone()),
    }
}

/// Reads `Q / (k (T_hot - T_cold) a)`.
fn h_normalization(frame: &Frame, expr: &str) -> Option<HNormalization> {
    let e = Expr::parse(expr).ok()?;
    let Expr::Div(num, den) = e else { return None };
    let Expr::Sym(rate) = *num else { return None };
    let mut fs = Vec::new();
    factors(&den, &mut fs);
    let mut temps = None;
    let mut syms = Vec::new();
    for f in fs {
        match f {
            Expr::Sub(a, b) => match (*a, *b) {
                (Expr::Sym(h), Expr::Sym(c)) => temps = Some((h, c)),
                _ => return None,
            },
            Expr::Sym(s) => syms.push(s),
            _ => return None,
        }
    }
    let (hot, cold) = temps?;
    if syms.len() != 2 {
        return None;
    }
    let is_k = |s: &str| frame.entities.iter().any(|e| e.conductivity() == Some(s));
    let (k, a) =
        if is_k(&syms[1]) && !is_k(&syms[0]) { (syms[1].clone(), syms[0].clone()) } else { (syms[0].clone(), syms[1].clone()) };
    Some(HNormalization { rate_symbol: rate, conductivity: k, hot_temperature: hot, cold_temperature: cold, length: a })
}

fn robin(
    frame: &Frame,
    target: EntityId,
    fluid: Option<EntityId>,
    face: FaceSelector,
    h: &str,
    sentence: usize,
) -> Result<BoundaryConditionSpec, ParseError> {
    let t_fluid = fluid
        .and_then(|f| frame.entity(f).temperature())
        .ok_or_else(|| ParseError::IncompleteRobin { symbol: h.to_string(), sentence })?;
    Ok(BoundaryConditionSpec {
        kind: BcKind::HeatTransferCoefficient,
        target_entity: Some(target),
        face,
        h_symbol: Some(h.to_string()),
        fluid_temperature_symbol: Some(t_fluid.to_string()),
        flux_symbol: None,
        temperature_symbol: None,
        sentence_index: sentence,
    })
}

fn plain_bc(kind: BcKind, target: Option<EntityId>, face: FaceSelector, sentence: usize) -> BoundaryConditionSpec {
    BoundaryConditionSpec {
        kind,
        target_entity: target,
        face,
        h_symbol: None,
        fluid_temperature_symbol: None,
        flux_symbol: None,
        temperature_symbol: None,
        sentence_index: sentence,
    }
}

/// Boundary-condition records from definitions, exposure clauses with a
/// stated coefficient and "insulated" predicates; quantity-of-interest records
/// from "find"-type clauses.
pub fn extract_bcs_and_qoi(frame: &mut Frame, vocab: &Vocabulary) -> Result<(), ParseError> {
    let mut bcs = Vec::new();
    let mut qois = Vec::new();
    let mut rates: BTreeMap<String, (Option<EntityId>, Option<FaceSelector>)> = BTreeMap::new();
    let state = |id: EntityId| frame.entity(id).state;

    for (clause, chunks) in frame.analysis.clauses() {
        let unknown_face = |what: &str| ParseError::UnknownFace { sentence: clause.sentence, what: what.to_string() };
        let symbol_subject = clause.subjects.iter().find_map(|&s| chunks[s].symbol()).map(normalize_symbol);

        if clause.verb.kind == VerbKind::Definition {
            let Some(sym) = symbol_subject else { continue };
            let Some(head) = first_head(chunks, clause, vocab) else { continue };
            let face = face_after(frame, chunks, clause, &["over", "on", "at"], vocab);
            let from = entity_after(frame, chunks, clause, "from", vocab);
            let to =
                entity_after(frame, chunks, clause, "to", vocab).or_else(|| entity_after(frame, chunks, clause, "into", vocab));
            let ends = [from, to];
            let solid = ends.iter().flatten().copied().find(|&e| state(e) == State::Solid);
            let fluid = ends.iter().flatten().copied().find(|&e| state(e) == State::Fluid);
            if has(H_HEADS, &head) {
                let (face, owner) = face.ok_or_else(|| unknown_face(&sym))?;
                let target = owner.or(solid).ok_or_else(|| unknown_face(&sym))?;
                bcs.push(robin(frame, target, fluid, face, &sym, clause.sentence)?);
            } else if has(FLUX_HEADS, &head) || (has(TEMPERATURE_HEADS, &head) && face.is_some()) {
                let (face, owner) = face.ok_or_else(|| unknown_face(&sym))?;
                let target = owner.or(solid).or(from).ok_or_else(|| unknown_face(&sym))?;
                let mut bc = plain_bc(BcKind::Flux, Some(target), face, clause.sentence);
                if has(FLUX_HEADS, &head) {
                    bc.flux_symbol = Some(sym);
                } else {
                    bc.kind = BcKind::Temperature;
                    bc.temperature_symbol = Some(sym);
                }
                bcs.push(bc);
            } else if has(RATE_HEADS, &head) {
                let target = to.or(from).or_else(|| face.as_ref().and_then(|f| f.1));
                rates.insert(sym, (target, face.map(|f| f.0)));
            }
            continue;
        }

        let subjects: Vec<EntityId> = clause.subjects.iter().filter_map(|&s| frame.mention_entity(chunks, s, vocab)).collect();

        // "E is exposed to F over the face at $x = 0$ through heat transfer coefficient $h$"
        let through_h = clause.region.clone().find_map(|k| {
            let is_h = k > clause.region.start
                && chunks[k - 1].is_adp("through")
                && property_head(chunks, k, vocab).is_some_and(|(h, _)| has(H_HEADS, &h));
            is_h.then(|| chunks.get(k + 1).and_then(Chunk::symbol).map(normalize_symbol)).flatten()
        });
        if let Some(h) = through_h {
            let (objects, _) = clause_objects(clause, chunks, vocab);
            let fluid =
                objects.iter().filter_map(|&o| frame.mention_entity(chunks, o, vocab)).find(|&e| state(e) == State::Fluid);
            let (face, _) = face_after(frame, chunks, clause, &["over", "on", "at"], vocab).ok_or_else(|| unknown_face(&h))?;
            for &s in &subjects {
                bcs.push(robin(frame, s, fluid, face.clone(), &h, clause.sentence)?);
            }
            continue;
        }

        if clause.verb.phrase == "be insulated" {
            let remainder = clause
                .subjects
                .iter()
                .any(|&s| property_head(chunks, s, vocab).is_some_and(|(h, _)| h == "remainder" || h == "boundary"));
            if remainder {
                bcs.push(plain_bc(BcKind::Insulated, None, FaceSelector::Remainder, clause.sentence));
                continue;
            }
            let face = face_after(frame, chunks, clause, &["on", "over", "at"], vocab);
            for &s in &subjects {
                let (sel, _) = face.clone().unwrap_or((FaceSelector::Remainder, None));
                bcs.push(plain_bc(BcKind::Insulated, Some(s), sel, clause.sentence));
            }
            continue;
        }

        // A solid held at a temperature over a named face is a Dirichlet condition.
        if clause.verb.phrase == "be maintained at" || clause.verb.phrase == "be held at" || clause.verb.phrase == "be kept at" {
            let Some(t) = clause.region.clone().find_map(|k| chunks[k].symbol()).map(normalize_symbol) else { continue };
            for &s in subjects.iter().filter(|&&s| state(s) == State::Solid) {
                let (face, _) = face_after(frame, chunks, clause, &["over", "on"], vocab).ok_or_else(|| unknown_face(&t))?;
                let mut bc = plain_bc(BcKind::Temperature, Some(s), face, clause.sentence);
                bc.temperature_symbol = Some(t.clone());
                bcs.push(bc);
            }
            continue;
        }

        if clause.verb.kind == VerbKind::Find {
            if let Some(q) = find_qoi(frame, clause, chunks, vocab, &rates) {
                qois.push(q);
            }
        }
    }
    frame.bc_specs = bcs;
    frame.qoi_specs = qois;
    Ok(())
}

fn find_qoi(
    frame: &Frame,
    clause: &Clause,
    chunks: &[Chunk],
    vocab: &Vocabulary,
    rates: &BTreeMap<String, (Option<EntityId>, Option<FaceSelector>)>,
) -> Option<QoiSpec> {
    let r = clause.region.clone();
    let head = first_head(chunks, clause, vocab);
    let mut q = QoiSpec {
        kind: QoiKind::TemperatureFieldPlot,
        symbol: None,
        target_entity: None,
        location: None,
        normalization: None,
        sentence_index: clause.sentence,
    };
    let point = r
        .clone()
        .find_map(|k| (k > r.start && chunks[k - 1].is_adp("at")).then(|| chunks[k].equation().and_then(parse_plane)).flatten());
    let face = face_after(frame, chunks, clause, &["over", "on", "at", "through"], vocab);
    match head.as_deref() {
        Some(h) if has(BOUND_HEADS, h) => {
            let k = r.clone().find(|&k| chunks[k].is_adp("for"))?;
            let sym = normalize_symbol(chunks.get(k + 1)?.symbol()?);
            let defs = given_by_definitions(frame);
            let (expr, _) = defs.get(&sym)?;
            let norm = h_normalization(frame, expr)?;
            if let Some((target, loc)) = rates.get(&norm.rate_symbol) {
                q.target_entity = *target;
                q.location = loc.clone();
            }
            q.kind = QoiKind::NondimensionalHWithBounds;
            q.symbol = Some(sym);
            q.normalization = Some(norm);
        }
        Some(h) if has(TEMPERATURE_HEADS, h) => {
            if let Some((coordinate, at)) = point {
                q.kind = QoiKind::TemperatureAtPoint;
                q.location = Some(FaceSelector::Plane { coordinate, at });
            }
        }
        Some(h) if has(FLUX_HEADS, h) || has(RATE_HEADS, h) => {
            q.kind = if has(FLUX_HEADS, h) { QoiKind::FluxAtFace } else { QoiKind::HeatRateAtFace };
            let (sel, owner) = face?;
            q.location = Some(sel);
            q.target_entity = owner;
        }
        _ => {
            let sym = r.clone().find_map(|k| chunks[k].symbol()).map(normalize_symbol)?;
            let (target, loc) = rates.get(&sym)?;
            q.kind = QoiKind::HeatRateAtFace;
            q.symbol = Some(sym);
            q.target_entity = *target;
            q.location = loc.clone();
        }
    }
    Some(q)
}

/// Conductivity symbol for every component.
pub fn extract_properties(frame: &mut Frame) -> Result<(), ParseError> {
    let mut out = BTreeMap::new();
    for &c in &frame.components {
        let k = frame
            .entity(c)
            .conductivity()
            .ok_or_else(|| ParseError::MissingConductivity { component: frame.name(c).to_string() })?;
        out.insert(c, k.to_string());
    }
    frame.conductivities = out;
    Ok(())
}

/// Every `symbol = literal` equation whose left side is not a coordinate.
pub fn bind_parameters(frame: &mut Frame) -> Result<(), ParseError> {
    let mut bindings: BTreeMap<String, SymbolBinding> = BTreeMap::new();
    for (si, s) in frame.analysis.sentences.iter().enumerate() {
        for c in &s.chunks {
            let Some(eq) = c.equation() else { continue };
            for part in split_top_level(eq) {
                let Ok((exprs, rels)) = parse_relation_chain(part) else { continue };
                if rels != [Relation::Equal] {
                    continue;
                }
                let Expr::Sym(sym) = &exprs[0] else { continue };
                if frame.coordinate_vars.contains(sym) {
                    continue;
                }
                let value: Rational = match exprs[1].to_affine() {
                    Ok(a) if a.is_constant() => a.constant,
                    _ => return Err(ParseError::NonNumericRhs { symbol: sym.clone(), sentence: si }),
                };
                if let Some(prev) = bindings.get(sym) {
                    if prev.value != value {
                        return Err(ParseError::DuplicateBinding {
                            symbol: sym.clone(),
                            first: crate::expr::fmt_rational(&prev.value),
                            second: crate::expr::fmt_rational(&value),
                            sentence: si,
                        });
                    }
                    continue;
                }
                bindings.insert(sym.clone(), SymbolBinding { symbol: sym.clone(), value, provenance: si });
            }
        }
    }
    frame.bindings = bindings;
    Ok(())
}

/// Numeric interval per coordinate.
type NumericBox = BTreeMap<String, (Rational, Rational)>;

/// Component boxes must not overlap once parameters are substituted. Pairs
/// with unbound symbols are left to the template stage.
pub fn check_domain_overlap(frame: &Frame) -> Result<(), ParseError> {
    let lookup = |s: &str| frame.binding(s).cloned();
    let boxes: Vec<(EntityId, NumericBox)> = frame
        .domain_specs
        .iter()
        .filter_map(|(id, spec)| {
            let iv: Option<BTreeMap<_, _>> = spec
                .intervals
                .iter()
                .map(|(v, (lo, hi))| Some((v.clone(), (lo.eval(lookup).ok()?, hi.eval(lookup).ok()?))))
                .collect();
            iv.map(|iv| (*id, iv))
        })
        .collect();
    for (i, (a, ba)) in boxes.iter().enumerate() {
        for (b, bb) in &boxes[i + 1..] {
            let overlap = ba.iter().all(|(v, (lo1, hi1))| match bb.get(v) {
                Some((lo2, hi2)) => lo1 < hi2 && lo2 < hi1,
                None => true,
            });
            if overlap {
                return Err(ParseError::OverlappingDomains {
                    first: frame.name(*a).to_string(),
                    second: frame.name(*b).to_string(),
                });
            }
        }
    }
    Ok(())
}
