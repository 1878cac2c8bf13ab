//! Reidemeister moves on diagrams: enumeration of applicable moves,
//! application, serializable move sequences with replay verification,
//! bounded search, and unlink certification.
//!
//! Moves are recorded in rebuild-stable terms: crossings by id (ids are
//! stable under every move), arcs by their endpoint pairs (arc ids are
//! renumbered on rebuild, endpoints are not), and free circles by component
//! id. Applying a move re-derives the diagram through the passage skeleton
//! and re-validates it in full, so an ill-formed move (for example an R2
//! insertion across two darts that do not share a face) fails loudly
//! instead of corrupting the diagram.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{
    ArcId, ComponentId, CrossingId, Dart, Diagram, DiagramError, Face, Passage,
};

#[derive(Debug, Error)]
pub enum MoveError {
    #[error("move not applicable: {0}")]
    NotApplicable(String),
    #[error("unknown reference: {0}")]
    UnknownRef(String),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error("sequence does not replay: {0}")]
    Replay(String),
    #[error("{subsets} crossing-change subsets exceed the limit of {max}")]
    EnumerationTooLarge { subsets: u128, max: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RMoveKind {
    #[serde(rename = "r2-")]
    R2Down,
    #[serde(rename = "r1-")]
    R1Down,
    #[serde(rename = "r3")]
    R3,
    #[serde(rename = "r1+")]
    R1Up,
    #[serde(rename = "r2+")]
    R2Up,
}

pub const ALL_KINDS: [RMoveKind; 5] = [
    RMoveKind::R2Down,
    RMoveKind::R1Down,
    RMoveKind::R3,
    RMoveKind::R1Up,
    RMoveKind::R2Up,
];

pub const DECREASING_KINDS: [RMoveKind; 2] = [RMoveKind::R2Down, RMoveKind::R1Down];

/// A strand location that survives rebuilds: an arc named by its endpoint
/// slots, or a crossing-free circle named by component.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrandSpec {
    Arc { from: (CrossingId, u8), to: (CrossingId, u8) },
    Circle { component: ComponentId },
}

/// A directed arc side (the face kept on the right of travel), or a free
/// circle with a chosen orientation for threading it across another strand.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DartSpec {
    Arc { from: (CrossingId, u8), to: (CrossingId, u8), forward: bool },
    Circle { component: ComponentId, reversed: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "location")]
pub enum RMove {
    /// Remove a bigon where one strand is over at both crossings.
    #[serde(rename = "r2-")]
    R2Down { crossings: [CrossingId; 2] },
    /// Remove a kink (a monogon face).
    #[serde(rename = "r1-")]
    R1Down { crossing: CrossingId },
    /// Slide a strand across a crossing: a trigon face with a top strand.
    /// The three crossings keep their ids, rotations and over flags; only
    /// the passage order along the three strands swaps.
    #[serde(rename = "r3")]
    R3 { crossings: [CrossingId; 3] },
    /// Add a kink on a strand. `right_loop` puts the loop on the right of
    /// the direction of travel; `over_exit` makes the pass into the loop
    /// the over strand.
    #[serde(rename = "r1+")]
    R1Up { strand: StrandSpec, right_loop: bool, over_exit: bool },
    /// Push a bight of the strand at `dart_a` across the strand at `dart_b`.
    /// Both darts must border the same face (on their right), except that a
    /// free circle may be threaded anywhere. `over_a` puts strand a on top
    /// at both new crossings.
    #[serde(rename = "r2+")]
    R2Up { dart_a: DartSpec, dart_b: DartSpec, over_a: bool },
}

impl RMove {
    pub fn kind(&self) -> RMoveKind {
        match self {
            RMove::R2Down { .. } => RMoveKind::R2Down,
            RMove::R1Down { .. } => RMoveKind::R1Down,
            RMove::R3 { .. } => RMoveKind::R3,
            RMove::R1Up { .. } => RMoveKind::R1Up,
            RMove::R2Up { .. } => RMoveKind::R2Up,
        }
    }
}

/// A replayable certificate: the moves plus the canonical-form hash of the
/// diagram after each one, so any tampering is caught on replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoveSequence {
    #[serde(rename = "start_sha")]
    pub start_sha256: String,
    pub moves: Vec<RMove>,
    /// `hashes[i]` is the canonical sha256 once `moves[..=i]` have applied.
    pub hashes: Vec<String>,
}

impl MoveSequence {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }
}

fn arrival(d: &Diagram, dart: &Dart) -> (CrossingId, u8) {
    let a = &d.arcs[&dart.arc];
    if dart.forward {
        a.to
    } else {
        a.from
    }
}

fn departure(d: &Diagram, dart: &Dart) -> (CrossingId, u8) {
    let a = &d.arcs[&dart.arc];
    if dart.forward {
        a.from
    } else {
        a.to
    }
}

fn over_at(d: &Diagram, end: (CrossingId, u8)) -> bool {
    end.1 % 2 == d.crossings[&end.0].over_diag
}

fn find_arc(
    d: &Diagram,
    from: (CrossingId, u8),
    to: (CrossingId, u8),
) -> Result<ArcId, MoveError> {
    d.arcs
        .iter()
        .find(|(_, a)| a.from == from && a.to == to)
        .map(|(&id, _)| id)
        .ok_or_else(|| {
            MoveError::UnknownRef(format!(
                "no arc from ({}, {}) to ({}, {})",
                from.0, from.1, to.0, to.1
            ))
        })
}

fn face_crossings(d: &Diagram, f: &Face) -> BTreeSet<CrossingId> {
    f.darts.iter().map(|dart| arrival(d, dart).0).collect()
}

/// One strand of a bigon is removable exactly when it is over at both
/// crossings (equivalently, under at both).
fn bigon_over_consistent(d: &Diagram, f: &Face) -> bool {
    let arc = &d.arcs[&f.darts[0].arc];
    over_at(d, arc.from) == over_at(d, arc.to)
}

fn trigon_has_top_strand(d: &Diagram, f: &Face) -> bool {
    f.darts
        .iter()
        .any(|dart| over_at(d, departure(d, dart)) && over_at(d, arrival(d, dart)))
}

fn rebuild(
    d: &Diagram,
    comps: Vec<(ComponentId, Vec<Passage>, Option<String>)>,
    over: &BTreeMap<CrossingId, u8>,
    reserve: CrossingId,
) -> Result<Diagram, MoveError> {
    Ok(Diagram::from_passages(comps, over, None)?
        .with_next_crossing(d.next_crossing_id().max(reserve)))
}

fn delete_crossings(d: &Diagram, gone: &BTreeSet<CrossingId>) -> Result<Diagram, MoveError> {
    let comps = d
        .to_passages()
        .into_iter()
        .map(|(cid, seq, role)| {
            let seq = seq.into_iter().filter(|p| !gone.contains(&p.crossing)).collect();
            (cid, seq, role)
        })
        .collect();
    let over = d
        .over_map()
        .into_iter()
        .filter(|(c, _)| !gone.contains(c))
        .collect();
    rebuild(d, comps, &over, 0)
}

fn seq_position(seq: &[Passage], at: (CrossingId, u8)) -> Option<usize> {
    seq.iter().position(|p| p.crossing == at.0 && p.out_slot == at.1)
}

pub fn apply_move(d: &Diagram, mv: &RMove) -> Result<Diagram, MoveError> {
    match mv {
        RMove::R1Down { crossing } => {
            let has_monogon = d
                .faces()
                .iter()
                .any(|f| f.len() == 1 && arrival(d, &f.darts[0]).0 == *crossing);
            if !has_monogon {
                return Err(MoveError::NotApplicable(format!(
                    "crossing {crossing} is not a kink"
                )));
            }
            delete_crossings(d, &BTreeSet::from([*crossing]))
        }
        RMove::R2Down { crossings } => {
            let want: BTreeSet<CrossingId> = crossings.iter().copied().collect();
            if want.len() != 2 {
                return Err(MoveError::NotApplicable("need two distinct crossings".into()));
            }
            let faces = d.faces();
            let bigon = faces
                .iter()
                .find(|f| f.len() == 2 && face_crossings(d, f) == want)
                .ok_or_else(|| {
                    MoveError::NotApplicable(format!(
                        "no bigon on crossings {} and {}",
                        crossings[0], crossings[1]
                    ))
                })?;
            if !bigon_over_consistent(d, bigon) {
                return Err(MoveError::NotApplicable(format!(
                    "bigon on {} and {} is clasped, not removable",
                    crossings[0], crossings[1]
                )));
            }
            delete_crossings(d, &want)
        }
        RMove::R3 { crossings } => apply_r3(d, crossings),
        RMove::R1Up { strand, right_loop, over_exit } => {
            apply_r1_up(d, strand, *right_loop, *over_exit)
        }
        RMove::R2Up { dart_a, dart_b, over_a } => apply_r2_up(d, dart_a, dart_b, *over_a),
    }
}

fn apply_r3(d: &Diagram, ids: &[CrossingId; 3]) -> Result<Diagram, MoveError> {
    let want: BTreeSet<CrossingId> = ids.iter().copied().collect();
    if want.len() != 3 {
        return Err(MoveError::NotApplicable("need three distinct crossings".into()));
    }
    let faces = d.faces();
    let trigon = faces
        .iter()
        .find(|f| f.len() == 3 && face_crossings(d, f) == want)
        .ok_or_else(|| {
            MoveError::NotApplicable(format!("no trigon on crossings {ids:?}"))
        })?;
    if !trigon_has_top_strand(d, trigon) {
        return Err(MoveError::NotApplicable(
            "trigon has no strand passing over both others".into(),
        ));
    }
    let mut comps = d.to_passages();
    // Each side arc's two passages are adjacent along its strand; swap them.
    // The three position pairs are disjoint, so precomputed indices stay
    // valid across swaps.
    let mut swaps: Vec<(usize, usize, usize)> = Vec::new();
    for dart in &trigon.darts {
        let arc = &d.arcs[&dart.arc];
        let ci = comps
            .iter()
            .position(|(cid, _, _)| *cid == arc.component)
            .expect("arc component present");
        let seq = &comps[ci].1;
        let i = seq_position(seq, arc.from).expect("arc tail passage present");
        let j = (i + 1) % seq.len();
        swaps.push((ci, i, j));
    }
    for (ci, i, j) in swaps {
        comps[ci].1.swap(i, j);
    }
    rebuild(d, comps, &d.over_map(), 0)
}

fn apply_r1_up(
    d: &Diagram,
    strand: &StrandSpec,
    right_loop: bool,
    over_exit: bool,
) -> Result<Diagram, MoveError> {
    let z = d.fresh_crossing_ids(1)[0];
    let b = if right_loop { 1 } else { 3 };
    let pair = [Passage { crossing: z, out_slot: 0 }, Passage { crossing: z, out_slot: b }];
    let mut comps = d.to_passages();
    match strand {
        StrandSpec::Arc { from, to } => {
            let aid = find_arc(d, *from, *to)?;
            let comp = d.arcs[&aid].component;
            let ci = comps.iter().position(|(cid, _, _)| *cid == comp).unwrap();
            let i = seq_position(&comps[ci].1, *from).expect("arc tail passage present");
            comps[ci].1.splice(i + 1..i + 1, pair);
        }
        StrandSpec::Circle { component } => {
            let ci = comps
                .iter()
                .position(|(cid, _, _)| cid == component)
                .ok_or_else(|| MoveError::UnknownRef(format!("component {component}")))?;
            if !comps[ci].1.is_empty() {
                return Err(MoveError::NotApplicable(format!(
                    "component {component} is not a free circle"
                )));
            }
            comps[ci].1 = pair.to_vec();
        }
    }
    let mut over = d.over_map();
    over.insert(z, if over_exit { 0 } else { 1 });
    rebuild(d, comps, &over, z + 1)
}

enum Place {
    OnArc { arc: ArcId, forward: bool },
    OnCircle { component: ComponentId, reversed: bool },
}

fn resolve_place(d: &Diagram, spec: &DartSpec) -> Result<Place, MoveError> {
    match spec {
        DartSpec::Arc { from, to, forward } => {
            Ok(Place::OnArc { arc: find_arc(d, *from, *to)?, forward: *forward })
        }
        DartSpec::Circle { component, reversed } => {
            if !d.components.contains_key(component) {
                return Err(MoveError::UnknownRef(format!("component {component}")));
            }
            if !d.free_components().contains(component) {
                return Err(MoveError::NotApplicable(format!(
                    "component {component} is not a free circle"
                )));
            }
            Ok(Place::OnCircle { component: *component, reversed: *reversed })
        }
    }
}

fn apply_r2_up(
    d: &Diagram,
    spec_a: &DartSpec,
    spec_b: &DartSpec,
    over_a: bool,
) -> Result<Diagram, MoveError> {
    let a = resolve_place(d, spec_a)?;
    let b = resolve_place(d, spec_b)?;
    match (&a, &b) {
        (Place::OnArc { arc: aa, forward: fa }, Place::OnArc { arc: ab, .. }) => {
            if aa == ab {
                return Err(MoveError::NotApplicable(
                    "bight and target must be different arcs".into(),
                ));
            }
            // Both darts must border the same face on their right.
            let da = Dart { arc: *aa, forward: *fa };
            let db = match &b {
                Place::OnArc { arc, forward } => Dart { arc: *arc, forward: *forward },
                _ => unreachable!(),
            };
            if !d.face_from(da).darts.contains(&db) {
                return Err(MoveError::NotApplicable(
                    "the two darts do not border a common face".into(),
                ));
            }
        }
        (Place::OnCircle { component: ca, .. }, Place::OnCircle { component: cb, .. })
            if ca == cb => {
                return Err(MoveError::NotApplicable(
                    "cannot thread a circle across itself".into(),
                ));
            }
        _ => {}
    }

    let fresh = d.fresh_crossing_ids(2);
    let (x, y) = (fresh[0], fresh[1]);
    // The bight strand dips across: first passage leaves south (slot 3),
    // second leaves north (slot 1). The target strand runs across both new
    // crossings, westward (slot 2) or eastward (slot 0).
    let pass_a = |rev: bool| -> Vec<Passage> {
        if !rev {
            vec![Passage { crossing: x, out_slot: 3 }, Passage { crossing: y, out_slot: 1 }]
        } else {
            vec![Passage { crossing: y, out_slot: 3 }, Passage { crossing: x, out_slot: 1 }]
        }
    };
    let pass_b = |rev: bool| -> Vec<Passage> {
        if !rev {
            vec![Passage { crossing: y, out_slot: 2 }, Passage { crossing: x, out_slot: 2 }]
        } else {
            vec![Passage { crossing: x, out_slot: 0 }, Passage { crossing: y, out_slot: 0 }]
        }
    };

    let mut comps = d.to_passages();
    // Collect insertions as (component, position-or-replace, passages),
    // applying same-component insertions from the back so earlier indexes
    // stay valid.
    let mut edits: Vec<(ComponentId, Option<usize>, Vec<Passage>)> = Vec::new();
    let mut plan = |place: &Place, passages: Vec<Passage>| match place {
        Place::OnArc { arc, .. } => {
            let info = &d.arcs[arc];
            let ci = comps.iter().position(|(cid, _, _)| *cid == info.component).unwrap();
            let i = seq_position(&comps[ci].1, info.from).expect("arc tail passage present");
            edits.push((info.component, Some(i + 1), passages));
        }
        Place::OnCircle { component, .. } => {
            edits.push((*component, None, passages));
        }
    };
    match &a {
        Place::OnArc { forward, .. } => plan(&a, pass_a(!*forward)),
        Place::OnCircle { reversed, .. } => plan(&a, pass_a(*reversed)),
    }
    match &b {
        Place::OnArc { forward, .. } => plan(&b, pass_b(!*forward)),
        Place::OnCircle { reversed, .. } => plan(&b, pass_b(*reversed)),
    }
    edits.sort_by_key(|(_, pos, _)| std::cmp::Reverse(pos.unwrap_or(0)));
    for (comp, pos, passages) in edits {
        let ci = comps.iter().position(|(cid, _, _)| *cid == comp).unwrap();
        match pos {
            Some(i) => {
                comps[ci].1.splice(i..i, passages);
            }
            None => comps[ci].1 = passages,
        }
    }
    let mut over = d.over_map();
    let diag = if over_a { 1 } else { 0 };
    over.insert(x, diag);
    over.insert(y, diag);
    rebuild(d, comps, &over, y + 1)
}

/// All applicable moves of the requested kinds, deterministically ordered.
pub fn enumerate_moves(d: &Diagram, kinds: &[RMoveKind]) -> Vec<RMove> {
    enumerate_moves_filtered(d, kinds, None)
}

/// Like [`enumerate_moves`], but when `allowed` is given, only moves whose
/// touched components all lie in the set are produced.
pub fn enumerate_moves_filtered(
    d: &Diagram,
    kinds: &[RMoveKind],
    allowed: Option<&BTreeSet<ComponentId>>,
) -> Vec<RMove> {
    let kinds: BTreeSet<RMoveKind> = kinds.iter().copied().collect();
    let ok = |comp: ComponentId| allowed.is_none_or(|set| set.contains(&comp));
    let crossing_ok = |c: CrossingId| ok(d.over_component(c)) && ok(d.under_component(c));
    let mut out: BTreeSet<RMove> = BTreeSet::new();

    let need_faces = kinds.contains(&RMoveKind::R1Down)
        || kinds.contains(&RMoveKind::R2Down)
        || kinds.contains(&RMoveKind::R3)
        || kinds.contains(&RMoveKind::R2Up);
    let faces = if need_faces { d.faces() } else { Vec::new() };

    for f in &faces {
        match f.len() {
            1 => {
                if kinds.contains(&RMoveKind::R1Down) {
                    let c = arrival(d, &f.darts[0]).0;
                    if crossing_ok(c) {
                        out.insert(RMove::R1Down { crossing: c });
                    }
                }
            }
            2 => {
                if kinds.contains(&RMoveKind::R2Down) {
                    let cs = face_crossings(d, f);
                    if cs.len() == 2
                        && bigon_over_consistent(d, f)
                        && cs.iter().all(|&c| crossing_ok(c))
                    {
                        let v: Vec<CrossingId> = cs.into_iter().collect();
                        out.insert(RMove::R2Down { crossings: [v[0], v[1]] });
                    }
                }
            }
            3
                if kinds.contains(&RMoveKind::R3) => {
                    let cs = face_crossings(d, f);
                    if cs.len() == 3
                        && trigon_has_top_strand(d, f)
                        && cs.iter().all(|&c| crossing_ok(c))
                    {
                        let v: Vec<CrossingId> = cs.into_iter().collect();
                        out.insert(RMove::R3 { crossings: [v[0], v[1], v[2]] });
                    }
                }
            _ => {}
        }
    }

    let free: Vec<ComponentId> = d.free_components();

    if kinds.contains(&RMoveKind::R1Up) {
        for arc in d.arcs.values() {
            if !ok(arc.component) {
                continue;
            }
            for right_loop in [false, true] {
                for over_exit in [false, true] {
                    out.insert(RMove::R1Up {
                        strand: StrandSpec::Arc { from: arc.from, to: arc.to },
                        right_loop,
                        over_exit,
                    });
                }
            }
        }
        for &c in &free {
            if !ok(c) {
                continue;
            }
            for right_loop in [false, true] {
                for over_exit in [false, true] {
                    out.insert(RMove::R1Up {
                        strand: StrandSpec::Circle { component: c },
                        right_loop,
                        over_exit,
                    });
                }
            }
        }
    }

    if kinds.contains(&RMoveKind::R2Up) {
        let dart_spec = |dart: &Dart| {
            let arc = &d.arcs[&dart.arc];
            DartSpec::Arc { from: arc.from, to: arc.to, forward: dart.forward }
        };
        for f in &faces {
            for da in &f.darts {
                if !ok(d.arcs[&da.arc].component) {
                    continue;
                }
                for db in &f.darts {
                    if da.arc == db.arc || !ok(d.arcs[&db.arc].component) {
                        continue;
                    }
                    for over_a in [false, true] {
                        out.insert(RMove::R2Up {
                            dart_a: dart_spec(da),
                            dart_b: dart_spec(db),
                            over_a,
                        });
                    }
                }
            }
        }
        // Free circles can be threaded across any dart, and across each other.
        for &aid in d.arcs.keys() {
            let comp = d.arcs[&aid].component;
            if !ok(comp) {
                continue;
            }
            for forward in [false, true] {
                let da = Dart { arc: aid, forward };
                for &c in &free {
                    if !ok(c) {
                        continue;
                    }
                    for reversed in [false, true] {
                        for over_a in [false, true] {
                            out.insert(RMove::R2Up {
                                dart_a: dart_spec(&da),
                                dart_b: DartSpec::Circle { component: c, reversed },
                                over_a,
                            });
                        }
                    }
                }
            }
        }
        for &ca in &free {
            for &cb in &free {
                if ca == cb || !ok(ca) || !ok(cb) {
                    continue;
                }
                for ra in [false, true] {
                    for rb in [false, true] {
                        for over_a in [false, true] {
                            out.insert(RMove::R2Up {
                                dart_a: DartSpec::Circle { component: ca, reversed: ra },
                                dart_b: DartSpec::Circle { component: cb, reversed: rb },
                                over_a,
                            });
                        }
                    }
                }
            }
        }
    }

    out.into_iter().collect()
}

pub fn record_sequence(start: &Diagram, moves: &[RMove]) -> Result<MoveSequence, MoveError> {
    let mut cur = start.clone();
    let mut hashes = Vec::with_capacity(moves.len());
    for m in moves {
        cur = apply_move(&cur, m)?;
        hashes.push(cur.canonical_sha256());
    }
    Ok(MoveSequence { start_sha256: start.canonical_sha256(), moves: moves.to_vec(), hashes })
}

/// Applies a recorded sequence, checking the start hash and every
/// intermediate hash. Returns the final diagram.
pub fn replay(start: &Diagram, seq: &MoveSequence) -> Result<Diagram, MoveError> {
    if start.canonical_sha256() != seq.start_sha256 {
        return Err(MoveError::Replay("start diagram hash mismatch".into()));
    }
    if seq.hashes.len() != seq.moves.len() {
        return Err(MoveError::Replay(format!(
            "{} moves but {} hashes",
            seq.moves.len(),
            seq.hashes.len()
        )));
    }
    let mut cur = start.clone();
    for (i, (mv, want)) in seq.moves.iter().zip(&seq.hashes).enumerate() {
        cur = apply_move(&cur, mv)?;
        if cur.canonical_sha256() != *want {
            return Err(MoveError::Replay(format!("hash mismatch after move {i}")));
        }
    }
    Ok(cur)
}

#[derive(Debug, Clone)]
pub struct SearchParams {
    pub kinds: Vec<RMoveKind>,
    pub max_moves: usize,
    pub target_crossings: usize,
    /// When set, success additionally requires this canonical form.
    pub target_canonical: Option<Vec<u8>>,
    pub max_states: usize,
}

#[derive(Debug)]
pub struct SearchOutcome {
    pub sequence: Option<MoveSequence>,
    /// True when the bounded space was explored exhaustively, so a miss is a
    /// definite "no sequence within the bound", not a budget artifact.
    pub complete: bool,
    pub states_seen: usize,
}

fn state_key(d: &Diagram, pure_deletion: bool) -> Vec<u8> {
    if pure_deletion {
        // Under deletions alone the diagram is a function of the surviving
        // crossing set, and ids are stable, so the set is an exact key.
        d.crossings.keys().flat_map(|c| c.to_be_bytes()).collect()
    } else {
        d.canonical_bytes()
    }
}

/// Breadth-first search for a sequence of at most `max_moves` moves of the
/// given kinds reaching `target_crossings` (and the target canonical form,
/// if one is set).
pub fn bounded_search(d: &Diagram, params: &SearchParams) -> Result<SearchOutcome, MoveError> {
    let pure_deletion = params
        .kinds
        .iter()
        .all(|k| matches!(k, RMoveKind::R1Down | RMoveKind::R2Down));
    let hit = |dg: &Diagram| {
        dg.crossings.len() == params.target_crossings
            && params
                .target_canonical
                .as_ref()
                .is_none_or(|want| dg.canonical_bytes() == *want)
    };

    if hit(d) {
        return Ok(SearchOutcome {
            sequence: Some(record_sequence(d, &[])?),
            complete: true,
            states_seen: 1,
        });
    }

    let mut visited: BTreeSet<Vec<u8>> = BTreeSet::new();
    visited.insert(state_key(d, pure_deletion));
    let mut queue: VecDeque<(Diagram, Vec<RMove>)> = VecDeque::new();
    queue.push_back((d.clone(), Vec::new()));
    let mut truncated = false;

    while let Some((cur, path)) = queue.pop_front() {
        if path.len() >= params.max_moves {
            continue;
        }
        let remaining = params.max_moves - path.len();
        for mv in enumerate_moves(&cur, &params.kinds) {
            // Crossings shrink by at most 2 per move, and each kind changes
            // the count by a fixed amount, so hopeless branches are dropped
            // before the move is even applied.
            let predicted = match mv.kind() {
                RMoveKind::R2Down => cur.crossings.len() - 2,
                RMoveKind::R1Down => cur.crossings.len() - 1,
                RMoveKind::R3 => cur.crossings.len(),
                RMoveKind::R1Up => cur.crossings.len() + 1,
                RMoveKind::R2Up => cur.crossings.len() + 2,
            };
            if predicted > params.target_crossings + 2 * (remaining - 1) {
                continue;
            }
            let next = apply_move(&cur, &mv)?;
            let key = state_key(&next, pure_deletion);
            if visited.contains(&key) {
                continue;
            }
            let mut next_path = path.clone();
            next_path.push(mv);
            if hit(&next) {
                return Ok(SearchOutcome {
                    sequence: Some(record_sequence(d, &next_path)?),
                    complete: true,
                    states_seen: visited.len(),
                });
            }
            if visited.len() >= params.max_states {
                truncated = true;
                continue;
            }
            visited.insert(key);
            queue.push_back((next, next_path));
        }
    }

    Ok(SearchOutcome { sequence: None, complete: !truncated, states_seen: visited.len() })
}

#[derive(Debug, Clone)]
pub struct CertifyParams {
    pub max_states: usize,
    /// Crossing headrooms to try in order: the search may climb this far
    /// above each piece's starting crossing count.
    pub headrooms: Vec<usize>,
}

impl Default for CertifyParams {
    fn default() -> Self {
        CertifyParams { max_states: 100_000, headrooms: vec![2, 4] }
    }
}

/// Repeatedly applies the first available decreasing move. Deterministic.
pub fn greedy_reduce(d: &Diagram) -> Result<(Diagram, Vec<RMove>), MoveError> {
    let mut cur = d.clone();
    let mut path = Vec::new();
    loop {
        let moves = enumerate_moves(&cur, &DECREASING_KINDS);
        match moves.into_iter().next() {
            Some(mv) => {
                cur = apply_move(&cur, &mv)?;
                path.push(mv);
            }
            None => return Ok((cur, path)),
        }
    }
}

struct Node {
    cr: usize,
    len: usize,
    seq: u64,
    d: Diagram,
    path: Vec<RMove>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        (self.cr, self.len, self.seq) == (other.cr, other.len, other.seq)
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert so fewer crossings come first.
        (other.cr, other.len, other.seq).cmp(&(self.cr, self.len, self.seq))
    }
}

fn piece_crossing_count(d: &Diagram, group: &BTreeSet<ComponentId>) -> usize {
    d.crossings
        .keys()
        .filter(|&&c| group.contains(&d.over_component(c)))
        .count()
}

fn piece_search(
    start: &Diagram,
    group: &BTreeSet<ComponentId>,
    cr_cap: usize,
    max_states: usize,
) -> Result<Option<(Diagram, Vec<RMove>)>, MoveError> {
    let piece_key = |d: &Diagram| -> Vec<u8> {
        d.extract_sublink(group).expect("group is a valid keep set").canonical_bytes()
    };
    let mut visited: BTreeSet<Vec<u8>> = BTreeSet::new();
    visited.insert(piece_key(start));
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Node {
        cr: piece_crossing_count(start, group),
        len: 0,
        seq,
        d: start.clone(),
        path: Vec::new(),
    });

    while let Some(node) = heap.pop() {
        if node.cr == 0 {
            return Ok(Some((node.d, node.path)));
        }
        let mut kinds = vec![RMoveKind::R2Down, RMoveKind::R1Down, RMoveKind::R3];
        if node.cr < cr_cap {
            kinds.push(RMoveKind::R1Up);
        }
        if node.cr + 2 <= cr_cap {
            kinds.push(RMoveKind::R2Up);
        }
        for mv in enumerate_moves_filtered(&node.d, &kinds, Some(group)) {
            let next = apply_move(&node.d, &mv)?;
            let key = piece_key(&next);
            if !visited.insert(key) {
                continue;
            }
            let mut path = node.path.clone();
            path.push(mv);
            let cr = piece_crossing_count(&next, group);
            seq += 1;
            if cr == 0 {
                return Ok(Some((next, path)));
            }
            heap.push(Node { cr, len: path.len(), seq, d: next, path });
            if visited.len() >= max_states {
                return Ok(None);
            }
        }
    }
    Ok(None)
}

/// Searches for a move sequence taking `d` to a crossing-free diagram (an
/// unlink presentation with the same labelled components). Returns `None`
/// when the search budget runs out; that outcome says nothing about whether
/// the link is knotted.
pub fn certify_unlink(d: &Diagram, params: &CertifyParams) -> Result<Option<MoveSequence>, MoveError> {
    // Pairwise linking numbers are move invariants, so a nonzero entry rules
    // out a certificate before any search runs.
    let lm = d.linking_matrix();
    for (i, &a) in lm.comps.iter().enumerate() {
        for &b in &lm.comps[i + 1..] {
            if lm.get(a, b) != 0 {
                return Ok(None);
            }
        }
    }
    let (mut current, mut path) = greedy_reduce(d)?;
    let groups = current.component_groups();
    'groups: for group in groups {
        let start_cr = piece_crossing_count(&current, &group);
        if start_cr == 0 {
            continue;
        }
        for &headroom in &params.headrooms {
            if let Some((next, more)) =
                piece_search(&current, &group, start_cr + headroom, params.max_states)?
            {
                current = next;
                path.extend(more);
                continue 'groups;
            }
        }
        return Ok(None);
    }
    debug_assert!(current.crossings.is_empty());
    Ok(Some(record_sequence(d, &path)?))
}

/// Replays a certificate and confirms it lands on a crossing-free diagram.
pub fn verify_unlink_certificate(d: &Diagram, seq: &MoveSequence) -> Result<bool, MoveError> {
    let end = replay(d, seq)?;
    Ok(end.crossings.is_empty())
}

fn binomial_capped(k: usize, n: usize, cap: u128) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..n {
        acc = acc.saturating_mul((k - i) as u128) / (i as u128 + 1);
        if acc > cap {
            return acc;
        }
    }
    acc
}

fn subsets_of(items: &[CrossingId], n: usize) -> Vec<Vec<CrossingId>> {
    let k = items.len();
    let mut out = Vec::new();
    if n > k {
        return out;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let mut i = n as isize - 1;
        while i >= 0 && idx[i as usize] == i as usize + k - n {
            i -= 1;
        }
        if i < 0 {
            return out;
        }
        let i = i as usize;
        idx[i] += 1;
        for j in i + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Exhausts every size-`n` set of crossing changes and certifies each
/// changed diagram with [`certify_unlink`]. `Ok(Some(set))` is a verified
/// witness (the lexicographically first one, so reruns agree even though
/// candidates are tried in parallel); `Ok(None)` means the full enumeration
/// produced no certificate, which refutes unlinking number `n` only as far
/// as the certifier's search budget can be trusted. Enumerations larger
/// than `max_subsets` are refused rather than silently truncated.
pub fn verify_diagrammatic_unlinking(
    d: &Diagram,
    n: usize,
    params: &CertifyParams,
    max_subsets: u64,
) -> Result<Option<BTreeSet<CrossingId>>, MoveError> {
    use rayon::prelude::*;

    let ids: Vec<CrossingId> = d.crossings.keys().copied().collect();
    if n > ids.len() {
        return Ok(None);
    }
    let total = binomial_capped(ids.len(), n, max_subsets as u128);
    if total > max_subsets as u128 {
        return Err(MoveError::EnumerationTooLarge { subsets: total, max: max_subsets });
    }
    let candidates = subsets_of(&ids, n);
    let hit = candidates
        .par_iter()
        .filter_map(|set| {
            let mut cur = d.clone();
            for &x in set {
                cur = match cur.change_crossing(x) {
                    Ok(next) => next,
                    Err(e) => return Some(Err(MoveError::from(e))),
                };
            }
            match certify_unlink(&cur, params) {
                Ok(Some(_)) => Some(Ok(set.clone())),
                Ok(None) => None,
                Err(e) => Some(Err(e)),
            }
        })
        .find_first(|_| true);
    match hit {
        None => Ok(None),
        Some(Ok(set)) => Ok(Some(set.into_iter().collect())),
        Some(Err(e)) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{assemble, PolyComponent};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn hopf() -> Diagram {
        let a = PolyComponent {
            points: vec![(0, 0), (6, 0), (6, 6), (0, 6)],
            levels: vec![5, 0, 0, 0],
            role: None,
        };
        let b = PolyComponent {
            points: vec![(3, -3), (9, -3), (9, 3), (3, 3)],
            levels: vec![9, 9, 9, -9],
            role: None,
        };
        assemble(vec![a, b]).unwrap()
    }

    /// A strip passing over a rectangle: 4 crossings, all removable by R2.
    fn strip_over_rectangle() -> Diagram {
        assemble(vec![
            PolyComponent::rect(0, 0, 6, 6, 0, None),
            PolyComponent::rect(2, -2, 4, 8, 1, None),
        ])
        .unwrap()
    }

    /// Closure of the braid word s1 s2 s1 on three strands, all positive:
    /// the standard Reidemeister III picture with a top strand.
    fn braid_sigma1_sigma2_sigma1() -> Diagram {
        let comps = vec![
            (
                0u32,
                vec![
                    Passage { crossing: 0, out_slot: 1 },
                    Passage { crossing: 1, out_slot: 1 },
                    Passage { crossing: 1, out_slot: 0 },
                    Passage { crossing: 2, out_slot: 0 },
                ],
                None,
            ),
            (
                1u32,
                vec![
                    Passage { crossing: 0, out_slot: 0 },
                    Passage { crossing: 2, out_slot: 1 },
                ],
                None,
            ),
        ];
        let over: BTreeMap<CrossingId, u8> = [(0, 1), (1, 1), (2, 1)].into_iter().collect();
        Diagram::from_passages(comps, &over, None).unwrap()
    }

    /// Closure of s1^3 on two strands: the positive trefoil.
    fn trefoil() -> Diagram {
        let comps = vec![(
            0u32,
            vec![
                Passage { crossing: 0, out_slot: 1 },
                Passage { crossing: 1, out_slot: 0 },
                Passage { crossing: 2, out_slot: 1 },
                Passage { crossing: 0, out_slot: 0 },
                Passage { crossing: 1, out_slot: 1 },
                Passage { crossing: 2, out_slot: 0 },
            ],
            None,
        )];
        let over: BTreeMap<CrossingId, u8> = [(0, 1), (1, 1), (2, 1)].into_iter().collect();
        Diagram::from_passages(comps, &over, None).unwrap()
    }

    fn unknot_circle() -> Diagram {
        assemble(vec![PolyComponent::rect(0, 0, 4, 4, 0, None)]).unwrap()
    }

    #[test]
    fn r1_up_then_down_round_trips() {
        let d = hopf();
        let before = d.canonical_bytes();
        let arc = d.arcs.values().next().unwrap();
        for right_loop in [false, true] {
            for over_exit in [false, true] {
                let mv = RMove::R1Up {
                    strand: StrandSpec::Arc { from: arc.from, to: arc.to },
                    right_loop,
                    over_exit,
                };
                let kinked = apply_move(&d, &mv).unwrap();
                assert!(kinked.validate().all_passed());
                assert_eq!(kinked.crossings.len(), 3);
                assert_eq!(kinked.stats().writhe.abs(), 1);
                // Off-diagonal linking is untouched.
                assert_eq!(kinked.linking_matrix().get(0, 1), d.linking_matrix().get(0, 1));

                let downs = enumerate_moves(&kinked, &[RMoveKind::R1Down]);
                assert_eq!(downs.len(), 1);
                let flat = apply_move(&kinked, &downs[0]).unwrap();
                assert_eq!(flat.canonical_bytes(), before);
            }
        }
    }

    #[test]
    fn r1_up_works_on_free_circles() {
        let d = unknot_circle();
        let mv = RMove::R1Up {
            strand: StrandSpec::Circle { component: 0 },
            right_loop: true,
            over_exit: true,
        };
        let kinked = apply_move(&d, &mv).unwrap();
        assert!(kinked.validate().all_passed());
        assert_eq!(kinked.crossings.len(), 1);
        assert_eq!(kinked.free_components().len(), 0);
        let downs = enumerate_moves(&kinked, &[RMoveKind::R1Down]);
        let flat = apply_move(&kinked, &downs[0]).unwrap();
        assert_eq!(flat.crossings.len(), 0);
        assert_eq!(flat.free_components().len(), 1);
    }

    #[test]
    fn r2_up_then_down_round_trips() {
        let d = hopf();
        let before = d.canonical_bytes();
        let old_ids: BTreeSet<CrossingId> = d.crossings.keys().copied().collect();
        let ups = enumerate_moves(&d, &[RMoveKind::R2Up]);
        assert!(!ups.is_empty());
        let mut checked = 0;
        for mv in ups.iter().take(12) {
            let pushed = apply_move(&d, mv).unwrap();
            assert!(pushed.validate().all_passed());
            assert_eq!(pushed.crossings.len(), 4);
            assert_eq!(pushed.linking_matrix().get(0, 1), d.linking_matrix().get(0, 1));
            // The two new crossings cancel in sign.
            let new_ids: Vec<CrossingId> =
                pushed.crossings.keys().filter(|c| !old_ids.contains(c)).copied().collect();
            assert_eq!(new_ids.len(), 2);
            let s: i64 = new_ids.iter().map(|c| pushed.crossings[c].sign() as i64).sum();
            assert_eq!(s, 0);

            let down = RMove::R2Down { crossings: [new_ids[0], new_ids[1]] };
            let back = apply_move(&pushed, &down).unwrap();
            assert_eq!(back.canonical_bytes(), before);
            checked += 1;
        }
        assert!(checked > 0);
    }

    #[test]
    fn r2_up_threads_a_free_circle() {
        let d = assemble(vec![
            PolyComponent::rect(0, 0, 4, 4, 0, None),
            PolyComponent::rect(10, 0, 14, 4, 0, None),
        ])
        .unwrap();
        // Thread circle 1 across circle 0: both are free, so this is the
        // circle-circle form.
        let mv = RMove::R2Up {
            dart_a: DartSpec::Circle { component: 0, reversed: false },
            dart_b: DartSpec::Circle { component: 1, reversed: false },
            over_a: true,
        };
        let pushed = apply_move(&d, &mv).unwrap();
        assert!(pushed.validate().all_passed());
        assert_eq!(pushed.crossings.len(), 2);
        assert_eq!(pushed.linking_matrix().get(0, 1), 0);
        assert_eq!(pushed.free_components().len(), 0);
        let downs = enumerate_moves(&pushed, &[RMoveKind::R2Down]);
        assert_eq!(downs.len(), 1);
        let back = apply_move(&pushed, &downs[0]).unwrap();
        assert_eq!(back.free_components().len(), 2);
    }

    #[test]
    fn r3_applies_on_the_braid_relation_picture_and_is_an_involution() {
        let d = braid_sigma1_sigma2_sigma1();
        assert!(d.validate().all_passed());
        let moves = enumerate_moves(&d, &[RMoveKind::R3]);
        assert!(!moves.is_empty(), "the braid relation trigon should be movable");
        let mv = &moves[0];
        let slid = apply_move(&d, mv).unwrap();
        assert!(slid.validate().all_passed());
        assert_eq!(slid.crossings.len(), 3);
        assert_eq!(slid.stats().writhe, d.stats().writhe);
        assert_eq!(slid.linking_matrix().entries, d.linking_matrix().entries);
        // Sliding back across the same three crossings restores the diagram.
        let back = apply_move(&slid, mv).unwrap();
        assert_eq!(back.canonical_bytes(), d.canonical_bytes());
    }

    #[test]
    fn trefoil_admits_no_decreasing_or_sliding_move() {
        let d = trefoil();
        assert!(d.validate().all_passed());
        assert_eq!(d.crossings.len(), 3);
        assert_eq!(d.stats().writhe, 3);
        let (all_alt, _) = d.is_alternating();
        assert!(all_alt);
        assert!(enumerate_moves(&d, &[RMoveKind::R1Down, RMoveKind::R2Down, RMoveKind::R3])
            .is_empty());
    }

    #[test]
    fn certify_unlink_handles_kinked_unknots() {
        let d = unknot_circle();
        let mv1 = RMove::R1Up {
            strand: StrandSpec::Circle { component: 0 },
            right_loop: true,
            over_exit: true,
        };
        let once = apply_move(&d, &mv1).unwrap();
        let arc = once.arcs.values().next().unwrap();
        let mv2 = RMove::R1Up {
            strand: StrandSpec::Arc { from: arc.from, to: arc.to },
            right_loop: false,
            over_exit: false,
        };
        let twice = apply_move(&once, &mv2).unwrap();
        assert_eq!(twice.crossings.len(), 2);

        let cert = certify_unlink(&twice, &CertifyParams::default()).unwrap();
        let seq = cert.expect("kinked unknot certifies");
        assert!(verify_unlink_certificate(&twice, &seq).unwrap());
    }

    #[test]
    fn certify_unlink_gives_up_on_the_hopf_link_and_trefoil() {
        let params = CertifyParams { max_states: 3_000, headrooms: vec![2] };
        assert!(certify_unlink(&hopf(), &params).unwrap().is_none());
        assert!(certify_unlink(&trefoil(), &params).unwrap().is_none());
    }

    #[test]
    fn diagrammatic_unlinking_of_the_hopf_pair() {
        let d = hopf();
        let params = CertifyParams { max_states: 3_000, headrooms: vec![2] };
        assert_eq!(verify_diagrammatic_unlinking(&d, 0, &params, 100).unwrap(), None);
        let witness = verify_diagrammatic_unlinking(&d, 1, &params, 100).unwrap().unwrap();
        assert_eq!(witness.len(), 1);
        assert_eq!(witness.iter().next(), d.crossings.keys().next());
        assert!(matches!(
            verify_diagrammatic_unlinking(&d, 1, &params, 1),
            Err(MoveError::EnumerationTooLarge { subsets: 2, max: 1 })
        ));
        assert_eq!(verify_diagrammatic_unlinking(&d, 9, &params, 100).unwrap(), None);
    }

    #[test]
    fn certify_unlink_accepts_crossing_free_diagrams() {
        let d = assemble(vec![
            PolyComponent::rect(0, 0, 4, 4, 0, None),
            PolyComponent::rect(10, 0, 14, 4, 0, None),
        ])
        .unwrap();
        let seq = certify_unlink(&d, &CertifyParams::default()).unwrap().unwrap();
        assert!(seq.is_empty());
    }

    #[test]
    fn bounded_search_strips_r2_pairs() {
        let d = strip_over_rectangle();
        assert_eq!(d.crossings.len(), 4);
        let params = SearchParams {
            kinds: vec![RMoveKind::R2Down],
            max_moves: 2,
            target_crossings: 0,
            target_canonical: None,
            max_states: 1_000,
        };
        let out = bounded_search(&d, &params).unwrap();
        let seq = out.sequence.expect("two R2 moves clear the strip");
        assert_eq!(seq.len(), 2);
        let end = replay(&d, &seq).unwrap();
        assert_eq!(end.crossings.len(), 0);
        assert_eq!(end.free_components().len(), 2);
    }

    #[test]
    fn bounded_search_reports_definite_misses() {
        let d = hopf();
        let params = SearchParams {
            kinds: vec![RMoveKind::R2Down],
            max_moves: 4,
            target_crossings: 0,
            target_canonical: None,
            max_states: 10_000,
        };
        let out = bounded_search(&d, &params).unwrap();
        assert!(out.sequence.is_none());
        assert!(out.complete, "the Hopf link has no removable bigon at all");
    }

    #[test]
    fn bounded_search_can_demand_a_canonical_target() {
        let d = strip_over_rectangle();
        let two_circles = assemble(vec![
            PolyComponent::rect(0, 0, 4, 4, 0, None),
            PolyComponent::rect(10, 0, 14, 4, 0, None),
        ])
        .unwrap();
        let params = SearchParams {
            kinds: vec![RMoveKind::R2Down],
            max_moves: 2,
            target_crossings: 0,
            target_canonical: Some(two_circles.canonical_bytes()),
            max_states: 1_000,
        };
        assert!(bounded_search(&d, &params).unwrap().sequence.is_some());

        // An impossible canonical target at the same crossing count misses.
        let one_circle = assemble(vec![PolyComponent::rect(0, 0, 4, 4, 0, None)]).unwrap();
        let params = SearchParams {
            target_canonical: Some(one_circle.canonical_bytes()),
            ..params
        };
        let out = bounded_search(&d, &params).unwrap();
        assert!(out.sequence.is_none());
        assert!(out.complete);
    }

    #[test]
    fn replay_rejects_tampered_sequences() {
        let d = strip_over_rectangle();
        let params = SearchParams {
            kinds: vec![RMoveKind::R2Down],
            max_moves: 2,
            target_crossings: 0,
            target_canonical: None,
            max_states: 1_000,
        };
        let seq = bounded_search(&d, &params).unwrap().sequence.unwrap();

        let mut wrong_hash = seq.clone();
        wrong_hash.hashes[1] = "0".repeat(64);
        assert!(matches!(replay(&d, &wrong_hash), Err(MoveError::Replay(_))));

        let mut wrong_start = seq.clone();
        wrong_start.start_sha256 = "0".repeat(64);
        assert!(matches!(replay(&d, &wrong_start), Err(MoveError::Replay(_))));

        let mut short_hashes = seq.clone();
        short_hashes.hashes.pop();
        assert!(matches!(replay(&d, &short_hashes), Err(MoveError::Replay(_))));

        let mut wrong_move = seq;
        wrong_move.moves[0] = RMove::R1Down { crossing: 0 };
        assert!(matches!(replay(&d, &wrong_move), Err(MoveError::NotApplicable(_))));
    }

    #[test]
    fn moves_serialize_with_readable_kinds() {
        let mv = RMove::R2Down { crossings: [3, 7] };
        let j = serde_json::to_string(&mv).unwrap();
        assert!(j.contains("\"kind\":\"r2-\""), "{j}");
        assert!(j.contains("\"location\":{\"crossings\":[3,7]}"), "{j}");
        let back: RMove = serde_json::from_str(&j).unwrap();
        assert_eq!(back, mv);

        let mv = RMove::R1Up {
            strand: StrandSpec::Circle { component: 5 },
            right_loop: true,
            over_exit: false,
        };
        let j = serde_json::to_string(&mv).unwrap();
        let back: RMove = serde_json::from_str(&j).unwrap();
        assert_eq!(back, mv);
    }

    #[test]
    fn sequence_json_carries_start_hash_and_per_move_hashes() {
        let d = strip_over_rectangle();
        let params = SearchParams {
            kinds: vec![RMoveKind::R2Down],
            max_moves: 2,
            target_crossings: 0,
            target_canonical: None,
            max_states: 1_000,
        };
        let seq = bounded_search(&d, &params).unwrap().sequence.unwrap();
        assert_eq!(seq.hashes.len(), seq.moves.len());
        assert_eq!(seq.hashes.last().unwrap(), &replay(&d, &seq).unwrap().canonical_sha256());

        let v: serde_json::Value = serde_json::to_value(&seq).unwrap();
        assert_eq!(v["start_sha"].as_str().unwrap(), d.canonical_sha256());
        assert_eq!(v["hashes"].as_array().unwrap().len(), seq.moves.len());
        for m in v["moves"].as_array().unwrap() {
            assert!(m.get("kind").is_some() && m.get("location").is_some(), "{m}");
        }
        let back: MoveSequence = serde_json::from_value(v).unwrap();
        assert_eq!(back.start_sha256, seq.start_sha256);
    }

    #[test]
    fn random_move_sequences_preserve_linking_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6b6e6f74);
        let mut d = strip_over_rectangle();
        let comps: Vec<ComponentId> = d.components.keys().copied().collect();
        for step in 0..40 {
            let before = d.linking_matrix();
            let writhe_before: i64 = d.crossings.values().map(|x| x.sign() as i64).sum();
            let moves = if d.crossings.len() > 14 {
                enumerate_moves(&d, &DECREASING_KINDS)
            } else {
                enumerate_moves(&d, &ALL_KINDS)
            };
            if moves.is_empty() {
                break;
            }
            let mv = moves[rng.gen_range(0..moves.len())].clone();
            let next = apply_move(&d, &mv).unwrap();
            assert!(next.validate().all_passed(), "step {step}: {mv:?}");
            let after = next.linking_matrix();
            for (i, &a) in comps.iter().enumerate() {
                for &b in &comps[i + 1..] {
                    assert_eq!(before.get(a, b), after.get(a, b), "step {step}: {mv:?}");
                }
            }
            let writhe_after: i64 = next.crossings.values().map(|x| x.sign() as i64).sum();
            match mv.kind() {
                RMoveKind::R1Up | RMoveKind::R1Down => {
                    assert_eq!((writhe_after - writhe_before).abs(), 1, "{mv:?}")
                }
                _ => assert_eq!(writhe_after, writhe_before, "{mv:?}"),
            }
            assert_eq!(next.components.len(), d.components.len());
            d = next;
        }
    }

    #[test]
    fn clasped_trivial_double_certifies_as_unknot() {
        // The untwisted double of a crossing-free circle keeps only its
        // clasp: two same-sign self-crossings that no decreasing move
        // touches. Certification has to climb before it can shrink.
        let circle = PolyComponent {
            points: vec![(0, 0), (10, 0), (10, 10), (0, 10)],
            levels: vec![0, 0, 0, 0],
            role: None,
        };
        let d = assemble(vec![circle]).unwrap();
        let dd = crate::gadgets::double_components(&d, &[0]).unwrap();
        assert_eq!(dd.crossings.len(), 2);
        assert_eq!(dd.components.len(), 1);

        let params = CertifyParams { max_states: 5_000, headrooms: vec![2, 4] };
        let seq = certify_unlink(&dd, &params).unwrap().expect("the clasp undoes");
        assert!(verify_unlink_certificate(&dd, &seq).unwrap());
    }
}
