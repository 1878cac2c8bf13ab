//! Compilers from formulas and graphs to link-diagram instances.
//!
//! Each builder takes a combinatorial input, lays out a diagram (or a pair
//! of diagrams) through the gadget layer, and wraps the result in an
//! [`Instance`] that remembers the problem flavor, the numeric parameter
//! the decision question asks about, and enough provenance to tie the
//! output back to its input. [`verify_assignment`] closes the loop for the
//! satisfiability-based instances: it replays a candidate assignment
//! through the free-group oracle and, where the diagram is not doubled,
//! directly against the diagram itself.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::diagram::{ComponentId, Diagram, DiagramError};
use crate::formulas::{Assignment, CnfFormula, FormulaError, Graph};
use crate::freegroup::{clause_product_word, iterated_commutator, quotient_delete, WordError};
use crate::gadgets::doubling::DOUBLE_SCALE;
use crate::gadgets::rows::{threading_ring, RowPlan};
use crate::gadgets::{
    chain_diagram, double_components, graph_to_vertex_edge_diagram, GadgetError,
};
use crate::geom::{assemble, assemble_with_ids, GeomError, PolyComponent};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error("formula has no variables")]
    EmptyFormula,
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("no component carries role {0:?}")]
    MissingRole(String),
    #[error("{0:?} instances do not take assignments")]
    NotSatInstance(ProblemTag),
    #[error("word oracle disagrees with direct evaluation on clause {index}")]
    OracleDisagreement { index: usize },
    #[error("bad instance json: {0}")]
    BadInstanceJson(String),
}

/// Which decision problem an instance encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemTag {
    UnlinkSublink,
    UnlinkingNumber,
    SplittingNumber,
    AlternatingSublink,
    ReidemeisterPair,
}

impl ProblemTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemTag::UnlinkSublink => "unlink-sublink",
            ProblemTag::UnlinkingNumber => "unlinking-number",
            ProblemTag::SplittingNumber => "splitting-number",
            ProblemTag::AlternatingSublink => "alternating-sublink",
            ProblemTag::ReidemeisterPair => "reidemeister-pair",
        }
    }

    pub fn parse(s: &str) -> Option<ProblemTag> {
        Some(match s {
            "unlink-sublink" => ProblemTag::UnlinkSublink,
            "unlinking-number" => ProblemTag::UnlinkingNumber,
            "splitting-number" => ProblemTag::SplittingNumber,
            "alternating-sublink" => ProblemTag::AlternatingSublink,
            "reidemeister-pair" => ProblemTag::ReidemeisterPair,
            _ => return None,
        })
    }
}

impl std::fmt::Display for ProblemTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Hash of the canonical text form of the input, so two runs over the
    /// same formula or graph can be matched up later.
    pub input_sha256: String,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A compiled decision-problem instance: one or two diagrams plus the
/// number the question is asked about.
#[derive(Debug, Clone)]
pub struct Instance {
    pub problem: ProblemTag,
    pub parameter: i64,
    pub diagrams: Vec<Diagram>,
    pub provenance: Provenance,
    pub formula: Option<CnfFormula>,
    pub graph: Option<Graph>,
    /// Set when the input falls outside the construction's guarantee. The
    /// diagrams are still built where possible, but the stated equivalence
    /// should not be relied on.
    pub trivially_negative: Option<String>,
}

/// Canonical DIMACS-like text for hashing.
pub fn formula_canonical_text(f: &CnfFormula) -> String {
    let mut s = format!("p cnf {} {}\n", f.n_vars, f.clauses.len());
    for c in &f.clauses {
        s.push_str(&format!("{} {} {} 0\n", c[0], c[1], c[2]));
    }
    s
}

/// Canonical edge-list text for hashing: vertex count, edge count, then
/// one-indexed endpoints in sorted order.
pub fn graph_canonical_text(g: &Graph) -> String {
    let mut s = format!("{} {}\n", g.n, g.edges.len());
    for &(u, v) in &g.edges {
        s.push_str(&format!("{} {}\n", u + 1, v + 1));
    }
    s
}

fn sha256_hex(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

fn provenance_for(text: &str) -> Provenance {
    Provenance {
        input_sha256: sha256_hex(text),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: None,
    }
}

/// Generator number for a literal: variable `v` gets `v` when positive and
/// `n_vars + v` when negated, matching the circle numbering in the rows.
pub fn generator_of_literal(n_vars: u32, lit: i32) -> u32 {
    let v = lit.unsigned_abs();
    debug_assert!(v >= 1 && v <= n_vars);
    if lit > 0 {
        v
    } else {
        n_vars + v
    }
}

fn clause_generators(f: &CnfFormula, clause: &[i32; 3]) -> (u32, u32, u32) {
    (
        generator_of_literal(f.n_vars, clause[0]),
        generator_of_literal(f.n_vars, clause[1]),
        generator_of_literal(f.n_vars, clause[2]),
    )
}

impl Instance {
    /// Component id carrying `role` in diagram `which`.
    pub fn component_by_role(&self, which: usize, role: &str) -> Option<ComponentId> {
        let d = self.diagrams.get(which)?;
        d.components
            .iter()
            .find(|(_, info)| info.role.as_deref() == Some(role))
            .map(|(&c, _)| c)
    }

    fn role_map(&self) -> BTreeMap<String, String> {
        let mut roles = BTreeMap::new();
        if let Some(d) = self.diagrams.first() {
            for (c, info) in &d.components {
                if let Some(r) = &info.role {
                    roles.insert(c.to_string(), r.clone());
                }
            }
        }
        roles
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        obj.insert("problem".into(), self.problem.as_str().into());
        obj.insert("parameter".into(), self.parameter.into());
        obj.insert(
            "diagrams".into(),
            serde_json::Value::Array(self.diagrams.iter().map(|d| d.to_json_value()).collect()),
        );
        obj.insert(
            "roles".into(),
            serde_json::to_value(self.role_map()).expect("roles serialize"),
        );
        obj.insert(
            "provenance".into(),
            serde_json::to_value(&self.provenance).expect("provenance serializes"),
        );
        if let Some(f) = &self.formula {
            obj.insert("formula".into(), serde_json::to_value(f).expect("formula serializes"));
        }
        if let Some(g) = &self.graph {
            obj.insert("graph".into(), serde_json::to_value(g).expect("graph serializes"));
        }
        if let Some(t) = &self.trivially_negative {
            obj.insert("trivially_negative".into(), t.as_str().into());
        }
        serde_json::Value::Object(obj)
    }

    pub fn export_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("instance serializes")
    }

    pub fn from_json_value(v: &serde_json::Value) -> Result<Instance, ReductionError> {
        let obj = v
            .as_object()
            .ok_or_else(|| ReductionError::BadInstanceJson("not an object".into()))?;
        let problem = obj
            .get("problem")
            .and_then(|p| p.as_str())
            .and_then(ProblemTag::parse)
            .ok_or_else(|| ReductionError::BadInstanceJson("missing or unknown problem tag".into()))?;
        let parameter = obj
            .get("parameter")
            .and_then(|p| p.as_i64())
            .ok_or_else(|| ReductionError::BadInstanceJson("missing parameter".into()))?;
        let raw_diagrams = obj
            .get("diagrams")
            .and_then(|d| d.as_array())
            .ok_or_else(|| ReductionError::BadInstanceJson("missing diagrams array".into()))?;
        if raw_diagrams.is_empty() {
            return Err(ReductionError::BadInstanceJson("empty diagrams array".into()));
        }
        let diagrams = raw_diagrams
            .iter()
            .map(Diagram::from_json_value)
            .collect::<Result<Vec<_>, _>>()?;
        let provenance = obj
            .get("provenance")
            .cloned()
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| ReductionError::BadInstanceJson(format!("bad provenance: {e}")))?
            .ok_or_else(|| ReductionError::BadInstanceJson("missing provenance".into()))?;
        let formula = obj
            .get("formula")
            .cloned()
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| ReductionError::BadInstanceJson(format!("bad formula: {e}")))?;
        let graph = obj
            .get("graph")
            .cloned()
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| ReductionError::BadInstanceJson(format!("bad graph: {e}")))?;
        let trivially_negative = obj
            .get("trivially_negative")
            .map(|t| {
                t.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| ReductionError::BadInstanceJson("trivially_negative not a string".into()))
            })
            .transpose()?;
        Ok(Instance {
            problem,
            parameter,
            diagrams,
            provenance,
            formula,
            graph,
            trivially_negative,
        })
    }

    pub fn import_json(text: &str) -> Result<Instance, ReductionError> {
        let v: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| ReductionError::BadInstanceJson(e.to_string()))?;
        Instance::from_json_value(&v)
    }
}

fn check_formula(f: &CnfFormula) -> Result<(), ReductionError> {
    if f.n_vars == 0 {
        return Err(ReductionError::EmptyFormula);
    }
    f.require_distinct_triples()?;
    Ok(())
}

/// Variable circles in a Hopf row plus one routed loop per clause; the
/// question becomes whether some `n + m` of the components form an unlink
/// as a sublink.
pub fn build_unlink_sublink(f: &CnfFormula) -> Result<Instance, ReductionError> {
    check_formula(f)?;
    let n = f.n_vars;
    let m = f.clauses.len() as u32;
    let plan = RowPlan::for_clause_slabs(n, m);
    let mut comps = plan.circles();
    for (j, c) in f.clauses.iter().enumerate() {
        let (a, b, g) = clause_generators(f, c);
        let word = iterated_commutator(a, b, g)?;
        comps.push(plan.clause_loop(j as u32, &word.letters, Some(format!("clause_{}", j + 1))));
    }
    let d = assemble(comps)?;
    debug_assert_eq!(d.components.len() as u32, 2 * n + m);
    Ok(Instance {
        problem: ProblemTag::UnlinkSublink,
        parameter: (n + m) as i64,
        diagrams: vec![d],
        provenance: provenance_for(&formula_canonical_text(f)),
        formula: Some(f.clone()),
        graph: None,
        trivially_negative: None,
    })
}

/// The unlink-sublink diagram with every component replaced by its
/// Whitehead double; the question becomes whether `n` crossing changes
/// suffice to unlink everything.
pub fn build_unlinking_number(f: &CnfFormula) -> Result<Instance, ReductionError> {
    let base = build_unlink_sublink(f)?;
    let d0 = &base.diagrams[0];
    let cr0 = d0.crossings.len();
    let k0 = d0.components.len();
    let ids: Vec<ComponentId> = d0.components.keys().copied().collect();
    let dd = double_components(d0, &ids)?;
    debug_assert_eq!(dd.crossings.len(), 4 * cr0 + 2 * k0);
    Ok(Instance {
        problem: ProblemTag::UnlinkingNumber,
        parameter: f.n_vars as i64,
        diagrams: vec![dd],
        provenance: base.provenance,
        formula: base.formula,
        graph: None,
        trivially_negative: None,
    })
}

/// Same diagram as [`build_unlinking_number`]; the question becomes
/// whether some `n + m` of the components admit an alternating diagram.
/// The full diagram itself is never alternating, which the builder checks.
pub fn build_alternating_sublink(f: &CnfFormula) -> Result<Instance, ReductionError> {
    let base = build_unlinking_number(f)?;
    let (whole, _) = base.diagrams[0].is_alternating();
    assert!(!whole, "doubled diagram unexpectedly alternating");
    Ok(Instance {
        problem: ProblemTag::AlternatingSublink,
        parameter: (f.n_vars as i64) + (f.clauses.len() as i64),
        diagrams: base.diagrams,
        provenance: base.provenance,
        formula: base.formula,
        graph: None,
        trivially_negative: None,
    })
}

/// Adds `comp` to a diagram's drawing and reassembles, keeping existing
/// component ids. Returns the new diagram and the id given to `comp`.
fn add_drawn_component(
    d: &Diagram,
    comp: PolyComponent,
) -> Result<(Diagram, ComponentId), ReductionError> {
    let layout = d.layout.as_ref().ok_or(GadgetError::NoLayout)?;
    let mut paths: Vec<(ComponentId, PolyComponent)> =
        layout.paths.iter().map(|(&c, p)| (c, p.clone())).collect();
    let id = d.components.keys().next_back().map_or(0, |&k| k + 1);
    paths.push((id, comp));
    Ok((assemble_with_ids(paths)?, id))
}

/// Doubled unlink circles for the augmented formula, the routed clause
/// product word, and a cabled curve threading every circle; the question
/// becomes whether the link splits after `n` crossing changes.
pub fn build_splitting_number(f: &CnfFormula) -> Result<Instance, ReductionError> {
    check_formula(f)?;
    let n = f.n_vars;
    let fp = f.augment();
    let np = fp.n_vars;
    let triples: Vec<(u32, u32, u32)> =
        fp.clauses.iter().map(|c| clause_generators(&fp, c)).collect();
    let word = clause_product_word(&triples)?;

    let plan = RowPlan::for_single_loop(np, word.letters.len());
    let mut comps = plan.unlink_circles();
    comps.push(plan.word_loop(
        plan.slab_top(0),
        plan.slab_margin(0),
        &word.letters,
        Some("P".into()),
    ));
    let d0 = assemble(comps)?;
    let p_id: ComponentId = 2 * np;
    debug_assert_eq!(d0.components.len() as u32, 2 * np + 1);
    if cfg!(debug_assertions) {
        let gens: BTreeMap<ComponentId, u32> = (1..=2 * np).map(|g| (g - 1, g)).collect();
        debug_assert_eq!(
            d0.underpass_word(p_id, &gens).expect("read back routed word"),
            word.letters,
        );
    }

    let circle_ids: Vec<ComponentId> = (0..2 * np).collect();
    let dd = double_components(&d0, &circle_ids)?;

    let s = DOUBLE_SCALE;
    let mut dips: Vec<i64> = (1..=plan.generator_count()).map(|g| s * plan.n_leg_x(g)).collect();
    dips.sort_unstable();
    let ring = threading_ring(
        s * plan.leg_bottom() + 20,
        s * 12,
        -2 * s,
        s * plan.slab_margin(0) + s,
        &dips,
        Some("E_prime".into()),
    );
    let (with_ring, ring_id) = add_drawn_component(&dd, ring)?;
    debug_assert_eq!(ring_id, 4 * n + 1);

    let cabled = crate::gadgets::cable_longitude(&with_ring, ring_id, n as usize + 1)?;
    debug_assert_eq!(cabled.components.len() as u32, 4 * n + 2);
    Ok(Instance {
        problem: ProblemTag::SplittingNumber,
        parameter: n as i64,
        diagrams: vec![cabled],
        provenance: provenance_for(&formula_canonical_text(f)),
        formula: Some(f.clone()),
        graph: None,
        trivially_negative: None,
    })
}

/// Vertex-edge diagram of the graph next to a chain-of-circles target; the
/// question becomes whether `2(m - n + 1)` moves turn the first into the
/// second, which happens exactly when the graph has a spanning path.
pub fn build_reidemeister_pair(g: &Graph) -> Result<Instance, ReductionError> {
    if g.n == 0 {
        return Err(ReductionError::EmptyGraph);
    }
    let n = g.n;
    let m = g.m();
    let d1 = graph_to_vertex_edge_diagram(g)?;
    let mut reasons = Vec::new();
    if m + 1 < n {
        reasons.push("fewer than n - 1 edges, so no spanning path exists".to_string());
    }
    let degree_one = (0..n).filter(|&v| g.degree(v) == 1).count();
    if n >= 2 && degree_one < 2 {
        reasons.push(format!(
            "only {degree_one} degree-1 vertices, so the move-count guarantee does not apply"
        ));
    }
    let (diagrams, parameter) = if m + 1 < n {
        (vec![d1], 0)
    } else {
        let d2 = chain_diagram(2 * n - 1, m - (n - 1))?;
        (vec![d1, d2], 2 * (m as i64 - n as i64 + 1))
    };
    Ok(Instance {
        problem: ProblemTag::ReidemeisterPair,
        parameter,
        diagrams,
        provenance: provenance_for(&graph_canonical_text(g)),
        formula: None,
        graph: Some(g.clone()),
        trivially_negative: if reasons.is_empty() { None } else { Some(reasons.join("; ")) },
    })
}

/// One clause's fate under the deletion induced by an assignment.
#[derive(Debug, Clone, Serialize)]
pub struct ClauseCheck {
    /// Zero-based clause index in the working formula.
    pub index: usize,
    pub generators: (u32, u32, u32),
    pub residual_letters: usize,
    pub trivial: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssignmentReport {
    pub assignment: Assignment,
    /// Generators of the circles the assignment deletes (the true literal
    /// of each original variable).
    pub deleted_generators: BTreeSet<u32>,
    /// Component ids of those circles in the instance diagram.
    pub deleted_components: Vec<ComponentId>,
    pub clauses: Vec<ClauseCheck>,
    /// Whether the words read off the diagram match the formula's words;
    /// only computed where the loops are plain routed curves.
    pub words_match_diagram: Option<bool>,
    /// Whether the sublink left after deleting the true circles has an
    /// all-zero linking matrix; only computed for unlink-sublink instances.
    pub sublink_linking_zero: Option<bool>,
    pub verdict: bool,
}

/// Replays `a` through the instance: deletes the circles of true literals,
/// checks every clause word dies in the quotient, and cross-checks against
/// direct formula evaluation. For unlink-sublink instances the words are
/// also read off the diagram and the leftover sublink's linking matrix is
/// checked to vanish.
pub fn verify_assignment(
    inst: &Instance,
    a: &Assignment,
) -> Result<AssignmentReport, ReductionError> {
    let f = inst
        .formula
        .as_ref()
        .ok_or(ReductionError::NotSatInstance(inst.problem))?;
    if a.len() != f.n_vars as usize {
        return Err(ReductionError::Formula(FormulaError::AssignmentLength {
            got: a.len(),
            want: f.n_vars as usize,
        }));
    }

    let working = match inst.problem {
        ProblemTag::SplittingNumber => f.augment(),
        _ => f.clone(),
    };
    let deleted_generators: BTreeSet<u32> = a
        .iter()
        .enumerate()
        .map(|(i, &bit)| {
            let v = i as u32 + 1;
            if bit {
                v
            } else {
                working.n_vars + v
            }
        })
        .collect();

    let mut clauses = Vec::with_capacity(working.clauses.len());
    let mut all_trivial = true;
    for (index, c) in working.clauses.iter().enumerate() {
        let gens = clause_generators(&working, c);
        let word = iterated_commutator_raw(gens)?;
        let residual = quotient_delete(&word, &deleted_generators);
        let trivial = residual.is_empty();
        all_trivial &= trivial;
        clauses.push(ClauseCheck {
            index,
            generators: gens,
            residual_letters: residual.len(),
            trivial,
        });
    }

    let verdict = f.eval(a)?;
    if verdict != all_trivial {
        let index = clauses.iter().position(|c| !c.trivial).unwrap_or(0);
        return Err(ReductionError::OracleDisagreement { index });
    }

    let d = &inst.diagrams[0];
    let mut deleted_components = Vec::new();
    for &g in &deleted_generators {
        let role = if g <= working.n_vars {
            format!("x_{g}")
        } else {
            format!("not_x_{}", g - working.n_vars)
        };
        let c = inst
            .component_by_role(0, &role)
            .ok_or(ReductionError::MissingRole(role))?;
        deleted_components.push(c);
    }

    let mut words_match_diagram = None;
    let mut sublink_linking_zero = None;
    if inst.problem == ProblemTag::UnlinkSublink {
        let mut gens = BTreeMap::new();
        for g in 1..=2 * working.n_vars {
            let role = if g <= working.n_vars {
                format!("x_{g}")
            } else {
                format!("not_x_{}", g - working.n_vars)
            };
            let c = inst
                .component_by_role(0, &role)
                .ok_or(ReductionError::MissingRole(role))?;
            gens.insert(c, g);
        }
        let mut all_match = true;
        for (j, c) in working.clauses.iter().enumerate() {
            let role = format!("clause_{}", j + 1);
            let loop_id = inst
                .component_by_role(0, &role)
                .ok_or(ReductionError::MissingRole(role))?;
            let got = d.underpass_word(loop_id, &gens)?;
            let (ga, gb, gc) = clause_generators(&working, c);
            let expect = iterated_commutator(ga, gb, gc)?;
            all_match &= got == expect.letters;
        }
        words_match_diagram = Some(all_match);

        let keep: BTreeSet<ComponentId> = d
            .components
            .keys()
            .copied()
            .filter(|c| !deleted_components.contains(c))
            .collect();
        let sub = d.extract_sublink(&keep)?;
        sublink_linking_zero = Some(sub.linking_matrix().is_zero());
    }

    Ok(AssignmentReport {
        assignment: a.clone(),
        deleted_generators,
        deleted_components,
        clauses,
        words_match_diagram,
        sublink_linking_zero,
        verdict,
    })
}

/// Brute-force satisfiability sweep phrased through the word oracle: every
/// assignment is replayed with [`verify_assignment`], so a positive answer
/// comes with a full report.
pub fn exhaustive_verify(
    inst: &Instance,
) -> Result<Option<AssignmentReport>, ReductionError> {
    let f = inst
        .formula
        .as_ref()
        .ok_or(ReductionError::NotSatInstance(inst.problem))?;
    let n = f.n_vars as usize;
    for bits in 0u64..(1u64 << n) {
        let a: Assignment = (0..n).map(|i| bits >> i & 1 == 1).collect();
        let report = verify_assignment(inst, &a)?;
        if report.verdict {
            return Ok(Some(report));
        }
    }
    Ok(None)
}

fn iterated_commutator_raw(
    gens: (u32, u32, u32),
) -> Result<crate::freegroup::FreeWord, WordError> {
    iterated_commutator(gens.0, gens.1, gens.2)
}

#[derive(Debug, Clone, Serialize)]
pub struct StructuralCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Assignment-independent well-formedness checks: does the instance look
/// like what its builder produces? Covers provenance, parameter formulas,
/// component counts and roles, linking data, and for plain routed
/// instances the clause words read back off the diagram.
pub fn structural_checks(inst: &Instance) -> Result<Vec<StructuralCheck>, ReductionError> {
    fn push(out: &mut Vec<StructuralCheck>, name: &str, pass: bool, detail: String) {
        out.push(StructuralCheck { name: name.to_string(), pass, detail });
    }
    let mut out: Vec<StructuralCheck> = Vec::new();

    if inst.problem == ProblemTag::ReidemeisterPair {
        let g = match &inst.graph {
            Some(g) => g,
            None => {
                push(&mut out, "graph-embedded", false, "instance carries no graph".into());
                return Ok(out);
            }
        };
        let n = g.n as i64;
        let m = g.m() as i64;
        push(
            &mut out,
            "provenance-hash",
            sha256_hex(&graph_canonical_text(g)) == inst.provenance.input_sha256,
            "input hash matches embedded graph".into(),
        );
        let d1 = &inst.diagrams[0];
        push(
            &mut out,
            "first-diagram-crossings",
            d1.crossings.len() as i64 == 4 * m,
            format!("{} crossings vs 4m = {}", d1.crossings.len(), 4 * m),
        );
        if m + 1 < n {
            push(&mut out, "trivially-negative", inst.trivially_negative.is_some(), "sparse graph flagged".into());
            push(&mut out, "single-diagram", inst.diagrams.len() == 1, "no target diagram for a sparse graph".into());
            push(&mut out, "parameter", inst.parameter == 0, format!("parameter {}", inst.parameter));
        } else {
            push(&mut out, "two-diagrams", inst.diagrams.len() == 2, format!("{} diagrams", inst.diagrams.len()));
            push(
                &mut out,
                "parameter",
                inst.parameter == 2 * (m - n + 1),
                format!("parameter {} vs 2(m - n + 1) = {}", inst.parameter, 2 * (m - n + 1)),
            );
            if let Some(d2) = inst.diagrams.get(1) {
                push(
                    &mut out,
                    "target-crossings",
                    d2.crossings.len() as i64 == 4 * n - 4,
                    format!("{} crossings vs 4n - 4 = {}", d2.crossings.len(), 4 * n - 4),
                );
                push(
                    &mut out,
                    "component-counts",
                    d1.components.len() as i64 == n + m && d2.components.len() as i64 == n + m,
                    format!("{} and {} components vs n + m = {}", d1.components.len(), d2.components.len(), n + m),
                );
            }
        }
        return Ok(out);
    }

    let f = match &inst.formula {
        Some(f) => f,
        None => {
            push(&mut out, "formula-embedded", false, "instance carries no formula".into());
            return Ok(out);
        }
    };
    let n = f.n_vars as i64;
    let m = f.clauses.len() as i64;
    push(
        &mut out,
        "provenance-hash",
        sha256_hex(&formula_canonical_text(f)) == inst.provenance.input_sha256,
        "input hash matches embedded formula".into(),
    );
    let d = &inst.diagrams[0];
    push(&mut out, "one-diagram", inst.diagrams.len() == 1, format!("{} diagrams", inst.diagrams.len()));

    let role_vars = match inst.problem {
        ProblemTag::SplittingNumber => 2 * n,
        _ => n,
    };
    let mut roles_ok = true;
    for v in 1..=role_vars {
        roles_ok &= inst.component_by_role(0, &format!("x_{v}")).is_some();
        roles_ok &= inst.component_by_role(0, &format!("not_x_{v}")).is_some();
    }
    match inst.problem {
        ProblemTag::SplittingNumber => {
            roles_ok &= inst.component_by_role(0, "P").is_some();
            roles_ok &= inst.component_by_role(0, "E_prime").is_some();
        }
        _ => {
            for j in 1..=m {
                roles_ok &= inst.component_by_role(0, &format!("clause_{j}")).is_some();
            }
        }
    }
    push(&mut out, "roles-complete", roles_ok, "every expected role present".into());
    if !roles_ok {
        return Ok(out);
    }

    match inst.problem {
        ProblemTag::UnlinkSublink => {
            push(
                &mut out,
                "component-count",
                d.components.len() as i64 == 2 * n + m,
                format!("{} components vs 2n + m = {}", d.components.len(), 2 * n + m),
            );
            push(&mut out, "parameter", inst.parameter == n + m, format!("parameter {} vs n + m = {}", inst.parameter, n + m));
            let mut gens = BTreeMap::new();
            for g in 1..=2 * f.n_vars {
                let role = if g <= f.n_vars {
                    format!("x_{g}")
                } else {
                    format!("not_x_{}", g - f.n_vars)
                };
                let c = inst.component_by_role(0, &role).ok_or(ReductionError::MissingRole(role))?;
                gens.insert(c, g);
            }
            let mut words_ok = true;
            for (j, c) in f.clauses.iter().enumerate() {
                let role = format!("clause_{}", j + 1);
                let loop_id =
                    inst.component_by_role(0, &role).ok_or(ReductionError::MissingRole(role))?;
                let got = d.underpass_word(loop_id, &gens)?;
                let (ga, gb, gc) = clause_generators(f, c);
                words_ok &= got == iterated_commutator(ga, gb, gc)?.letters;
            }
            push(&mut out, "clause-words", words_ok, "words read off the diagram match the formula".into());
            let lm = d.linking_matrix();
            let mut hopf_ok = true;
            for v in 1..=f.n_vars {
                let a = inst.component_by_role(0, &format!("x_{v}")).unwrap();
                let b = inst.component_by_role(0, &format!("not_x_{v}")).unwrap();
                hopf_ok &= lm.get(a, b) == 1;
            }
            push(&mut out, "hopf-pairs", hopf_ok, "each variable pair links once".into());
        }
        ProblemTag::UnlinkingNumber | ProblemTag::AlternatingSublink => {
            push(
                &mut out,
                "component-count",
                d.components.len() as i64 == 2 * n + m,
                format!("{} components vs 2n + m = {}", d.components.len(), 2 * n + m),
            );
            let want = match inst.problem {
                ProblemTag::UnlinkingNumber => n,
                _ => n + m,
            };
            push(&mut out, "parameter", inst.parameter == want, format!("parameter {} vs {}", inst.parameter, want));
            let stats = d.stats();
            push(
                &mut out,
                "clasp-self-crossings",
                stats.per_component.values().all(|s| s.self_crossings == 2),
                "every double carries exactly its clasp".into(),
            );
            let lm = d.linking_matrix();
            let mut off_zero = true;
            for (i, &a) in lm.comps.iter().enumerate() {
                for &b in &lm.comps[i + 1..] {
                    off_zero &= lm.get(a, b) == 0;
                }
            }
            push(&mut out, "linking-vanishes", off_zero, "doubling killed every linking number".into());
            if inst.problem == ProblemTag::AlternatingSublink {
                push(&mut out, "not-alternating", !d.is_alternating().0, "full diagram is not alternating".into());
            }
        }
        ProblemTag::SplittingNumber => {
            push(
                &mut out,
                "component-count",
                d.components.len() as i64 == 4 * n + 2,
                format!("{} components vs 4n + 2 = {}", d.components.len(), 4 * n + 2),
            );
            push(&mut out, "parameter", inst.parameter == n, format!("parameter {} vs n = {}", inst.parameter, n));
            let ring = inst.component_by_role(0, "E_prime").unwrap();
            let p = inst.component_by_role(0, "P").unwrap();
            let lm = d.linking_matrix();
            push(&mut out, "ring-avoids-loop", lm.get(ring, p) == 0, format!("lk(E', P) = {}", lm.get(ring, p)));
            let mut threading_ok = true;
            let mut quiet_ok = true;
            for &c in d.components.keys() {
                if c == ring || c == p {
                    continue;
                }
                threading_ok &= lm.get(ring, c) == n + 1;
                quiet_ok &= lm.get(p, c) == 0;
            }
            push(
                &mut out,
                "ring-threads-doubles",
                threading_ok,
                format!("lk(E', double) = n + 1 = {}", n + 1),
            );
            push(&mut out, "loop-unlinked", quiet_ok, "P has linking zero with every double".into());
            push(
                &mut out,
                "twist-box",
                d.stats().per_component[&ring].self_crossings as i64 == n,
                format!("E' self-crossings vs n = {n}"),
            );
        }
        ProblemTag::ReidemeisterPair => unreachable!(),
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulas::DEFAULT_MAX_ASSIGNMENTS;

    fn formula(n: u32, clauses: &[[i32; 3]]) -> CnfFormula {
        CnfFormula::new(n, clauses.to_vec()).unwrap()
    }

    #[test]
    fn unlink_sublink_shape_and_roles() {
        let f = formula(4, &[[-1, -3, 4], [1, 2, -4]]);
        let inst = build_unlink_sublink(&f).unwrap();
        assert_eq!(inst.parameter, 6);
        let d = &inst.diagrams[0];
        assert_eq!(d.components.len(), 10);
        for v in 1..=4u32 {
            assert!(inst.component_by_role(0, &format!("x_{v}")).is_some());
            assert!(inst.component_by_role(0, &format!("not_x_{v}")).is_some());
        }
        assert!(inst.component_by_role(0, "clause_1").is_some());
        assert!(inst.component_by_role(0, "clause_2").is_some());
        assert!(inst.component_by_role(0, "clause_3").is_none());
    }

    #[test]
    fn unlink_sublink_words_read_back() {
        let f = formula(4, &[[-1, -3, 4], [1, 2, -4]]);
        let inst = build_unlink_sublink(&f).unwrap();
        let sat = verify_assignment(&inst, &vec![false, true, false, true]).unwrap();
        assert!(sat.verdict);
        assert_eq!(sat.words_match_diagram, Some(true));
        assert_eq!(sat.sublink_linking_zero, Some(true));
        assert_eq!(sat.deleted_generators, BTreeSet::from([5, 2, 7, 4]));

        let unsat_for_first = verify_assignment(&inst, &vec![true, true, true, false]).unwrap();
        assert!(!unsat_for_first.verdict);
        assert!(!unsat_for_first.clauses[0].trivial);
        assert_eq!(unsat_for_first.clauses[0].residual_letters, 10);
        assert!(unsat_for_first.clauses[1].trivial);
        // Deleting one circle per variable breaks every Hopf pair, so the
        // numeric linking check passes even when the words survive; the
        // obstruction an unsatisfied clause leaves is not a linking number.
        assert_eq!(unsat_for_first.sublink_linking_zero, Some(true));
    }

    #[test]
    fn oracle_sweep_matches_truth_table() {
        let f = formula(3, &[[1, 2, 3], [-1, -2, 3], [1, -2, -3]]);
        let inst = build_unlink_sublink(&f).unwrap();
        let brute = f.brute_force_sat(DEFAULT_MAX_ASSIGNMENTS).unwrap();
        let oracle = exhaustive_verify(&inst).unwrap();
        assert_eq!(!brute.is_empty(), oracle.is_some());
        for bits in 0u8..8 {
            let a: Vec<bool> = (0..3).map(|i| bits >> i & 1 == 1).collect();
            let rep = verify_assignment(&inst, &a).unwrap();
            assert_eq!(rep.verdict, f.eval(&a).unwrap());
        }
    }

    #[test]
    fn unlinking_number_counts() {
        let f = formula(2, &[[1, -2, 2]]);
        assert!(matches!(
            build_unlinking_number(&f),
            Err(ReductionError::Formula(FormulaError::RepeatedVariable(_)))
        ));

        let f = formula(3, &[[1, -2, 3]]);
        let base = build_unlink_sublink(&f).unwrap();
        let inst = build_unlinking_number(&f).unwrap();
        assert_eq!(inst.parameter, 3);
        let d0 = &base.diagrams[0];
        let dd = &inst.diagrams[0];
        assert_eq!(dd.components.len(), d0.components.len());
        assert_eq!(dd.crossings.len(), 4 * d0.crossings.len() + 2 * d0.components.len());
        // Off-diagonal linking all dies under doubling; the diagonal keeps
        // the +2 writhe of each clasp.
        let lm = dd.linking_matrix();
        for (i, &a) in lm.comps.iter().enumerate() {
            for (j, &b) in lm.comps.iter().enumerate() {
                assert_eq!(lm.get(a, b), if i == j { 2 } else { 0 });
            }
        }
        assert!(dd.stats().per_component.values().all(|s| s.self_crossings == 2));
    }

    #[test]
    fn alternating_instance_reuses_doubled_diagram() {
        let f = formula(3, &[[1, 2, -3]]);
        let unl = build_unlinking_number(&f).unwrap();
        let alt = build_alternating_sublink(&f).unwrap();
        assert_eq!(alt.parameter, 4);
        assert_eq!(
            alt.diagrams[0].canonical_sha256(),
            unl.diagrams[0].canonical_sha256()
        );
        assert!(!alt.diagrams[0].is_alternating().0);
    }

    #[test]
    fn splitting_instance_smallest() {
        let f = formula(1, &[]);
        let inst = build_splitting_number(&f).unwrap();
        assert_eq!(inst.parameter, 1);
        let d = &inst.diagrams[0];
        assert_eq!(d.components.len(), 6);
        let ring = inst.component_by_role(0, "E_prime").unwrap();
        let p = inst.component_by_role(0, "P").unwrap();
        let lm = d.linking_matrix();
        assert_eq!(lm.get(ring, p), 0);
        for g in 1..=4u32 {
            let role = if g <= 2 { format!("x_{g}") } else { format!("not_x_{}", g - 2) };
            let c = inst.component_by_role(0, &role).unwrap();
            assert_eq!(lm.get(ring, c), 2, "ring vs {role}");
        }
        assert_eq!(d.stats().per_component[&ring].self_crossings, 1);
    }

    #[test]
    fn splitting_instance_with_clause() {
        let f = formula(3, &[[1, -2, 3]]);
        let fp = f.augment();
        assert_eq!(fp.n_vars, 6);
        assert_eq!(fp.clauses.len(), 7);
        let triples: Vec<_> = fp.clauses.iter().map(|c| clause_generators(&fp, c)).collect();
        let word = clause_product_word(&triples).unwrap();
        assert_eq!(word.letters.len(), 70);

        let inst = build_splitting_number(&f).unwrap();
        assert_eq!(inst.parameter, 3);
        let d = &inst.diagrams[0];
        assert_eq!(d.components.len(), 14);
        let ring = inst.component_by_role(0, "E_prime").unwrap();
        let p = inst.component_by_role(0, "P").unwrap();
        let lm = d.linking_matrix();
        assert_eq!(lm.get(ring, p), 0);
        let mut doubles = 0;
        for &c in d.components.keys() {
            if c != ring && c != p {
                assert_eq!(lm.get(ring, c), 4);
                assert_eq!(lm.get(p, c), 0);
                doubles += 1;
            }
        }
        assert_eq!(doubles, 12);
        assert_eq!(d.stats().per_component[&ring].self_crossings, 3);

        let sat = verify_assignment(&inst, &vec![true, false, false]).unwrap();
        assert!(sat.verdict);
        assert_eq!(sat.clauses.len(), 7);
        let unsat = verify_assignment(&inst, &vec![false, true, false]).unwrap();
        assert!(!unsat.verdict);
    }

    #[test]
    fn reidemeister_pair_parameters() {
        let path5 = Graph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let inst = build_reidemeister_pair(&path5).unwrap();
        assert_eq!(inst.parameter, 0);
        assert_eq!(inst.diagrams.len(), 2);
        assert!(inst.trivially_negative.is_none());
        assert_eq!(inst.diagrams[0].crossings.len(), 4 * 4);
        assert_eq!(inst.diagrams[1].crossings.len(), 4 * 5 - 4);

        let chord = Graph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (1, 3)]).unwrap();
        let inst = build_reidemeister_pair(&chord).unwrap();
        assert_eq!(inst.parameter, 2);
        assert!(inst.trivially_negative.is_none());

        let star = Graph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let inst = build_reidemeister_pair(&star).unwrap();
        assert_eq!(inst.parameter, 0);
        assert!(inst.trivially_negative.is_none());

        let sparse = Graph::new(4, &[(0, 1), (2, 3)]).unwrap();
        let inst = build_reidemeister_pair(&sparse).unwrap();
        assert_eq!(inst.diagrams.len(), 1);
        assert!(inst.trivially_negative.is_some());

        let cycle = Graph::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let inst = build_reidemeister_pair(&cycle).unwrap();
        assert_eq!(inst.diagrams.len(), 2);
        assert!(inst.trivially_negative.is_some());
    }

    #[test]
    fn structural_checks_pass_on_builder_output() {
        let f = formula(3, &[[1, -2, 3], [-1, 2, -3]]);
        for inst in [
            build_unlink_sublink(&f).unwrap(),
            build_unlinking_number(&f).unwrap(),
            build_alternating_sublink(&f).unwrap(),
            build_splitting_number(&f).unwrap(),
        ] {
            let checks = structural_checks(&inst).unwrap();
            assert!(!checks.is_empty());
            for c in &checks {
                assert!(c.pass, "{} failed on {}: {}", c.name, inst.problem, c.detail);
            }
        }
        let g = Graph::new(4, &[(0, 1), (1, 2), (2, 3), (1, 3)]).unwrap();
        let inst = build_reidemeister_pair(&g).unwrap();
        for c in structural_checks(&inst).unwrap() {
            assert!(c.pass, "{} failed: {}", c.name, c.detail);
        }

        // tampering gets caught
        let mut bad = build_unlink_sublink(&f).unwrap();
        bad.parameter += 1;
        assert!(structural_checks(&bad).unwrap().iter().any(|c| !c.pass));
        let mut bad = build_unlink_sublink(&f).unwrap();
        bad.formula = Some(formula(3, &[[1, -2, 3], [-1, 2, 3]]));
        let checks = structural_checks(&bad).unwrap();
        assert!(checks.iter().any(|c| !c.pass && c.name == "provenance-hash"));
        assert!(checks.iter().any(|c| !c.pass && c.name == "clause-words"));
    }

    #[test]
    fn instance_json_round_trip() {
        let f = formula(3, &[[1, -2, 3]]);
        let inst = build_unlink_sublink(&f).unwrap();
        let text = inst.export_json();
        let back = Instance::import_json(&text).unwrap();
        assert_eq!(back.problem, ProblemTag::UnlinkSublink);
        assert_eq!(back.parameter, inst.parameter);
        assert_eq!(back.formula.as_ref(), Some(&f));
        assert_eq!(
            back.diagrams[0].canonical_sha256(),
            inst.diagrams[0].canonical_sha256()
        );
        assert_eq!(back.provenance, inst.provenance);

        let g = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let ginst = build_reidemeister_pair(&g).unwrap();
        let back = Instance::import_json(&ginst.export_json()).unwrap();
        assert_eq!(back.graph.as_ref(), Some(&g));
        assert_eq!(back.diagrams.len(), 2);
    }

    #[test]
    fn provenance_is_input_stable() {
        let f = formula(3, &[[1, -2, 3]]);
        let a = build_unlink_sublink(&f).unwrap();
        let b = build_unlinking_number(&f).unwrap();
        assert_eq!(a.provenance.input_sha256, b.provenance.input_sha256);
        assert_eq!(a.export_json(), build_unlink_sublink(&f).unwrap().export_json());

        let g = formula(3, &[[1, -2, -3]]);
        let c = build_unlink_sublink(&g).unwrap();
        assert_ne!(a.provenance.input_sha256, c.provenance.input_sha256);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let empty = CnfFormula::new(0, vec![]).unwrap();
        assert!(matches!(
            build_unlink_sublink(&empty),
            Err(ReductionError::EmptyFormula)
        ));
        assert!(matches!(
            build_splitting_number(&empty),
            Err(ReductionError::EmptyFormula)
        ));
        assert!(matches!(
            build_reidemeister_pair(&Graph::new(0, &[]).unwrap()),
            Err(ReductionError::EmptyGraph)
        ));
    }

    #[test]
    fn wrong_assignment_length_reported() {
        let f = formula(3, &[[1, -2, 3]]);
        let inst = build_unlink_sublink(&f).unwrap();
        assert!(matches!(
            verify_assignment(&inst, &vec![true, false]),
            Err(ReductionError::Formula(FormulaError::AssignmentLength { got: 2, want: 3 }))
        ));
        let g = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let ginst = build_reidemeister_pair(&g).unwrap();
        assert!(matches!(
            verify_assignment(&ginst, &vec![true]),
            Err(ReductionError::NotSatInstance(ProblemTag::ReidemeisterPair))
        ));
    }
}
