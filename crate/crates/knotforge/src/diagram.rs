//! Combinatorial link diagrams.
//!
//! A diagram is a 4-valent plane graph with a rotation system: crossings hold
//! four arc ends in counterclockwise slot order, with one diagonal marked as
//! the over strand. Components without any crossings (free circles) are kept
//! as components with no arcs, so unlinks with labelled circles round-trip
//! faithfully.
//!
//! Slot geometry: slots 0..3 sit counterclockwise around a crossing, and a
//! strand passes straight through, so the arc arriving at slot `k` continues
//! from slot `(k + 2) % 4`. Crossing signs use the convention that a crossing
//! is +1 exactly when one counterclockwise step from the under strand's
//! outgoing slot reaches the over strand's outgoing slot.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geom::Layout;

pub type CrossingId = u32;
pub type ArcId = u32;
pub type ComponentId = u32;

#[derive(Debug, Error)]
pub enum DiagramError {
    #[error("invalid diagram: {0}")]
    Invalid(String),
    #[error("unknown component {0}")]
    UnknownComponent(ComponentId),
    #[error("unknown crossing {0}")]
    UnknownCrossing(CrossingId),
    #[error("sublink keep-set must be a non-empty subset of the components")]
    EmptyKeep,
    #[error("malformed diagram data: {0}")]
    Structure(String),
    #[error("json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    Tail,
    Head,
}

/// One of the four arc ends held by a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRef {
    pub arc: ArcId,
    pub end: End,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Crossing {
    /// Arc ends in counterclockwise rotation order.
    pub slots: [SlotRef; 4],
    /// 0 if slots {0,2} carry the over strand, 1 for slots {1,3}.
    pub over_diag: u8,
}

impl Crossing {
    pub fn over_slots(&self) -> [u8; 2] {
        [self.over_diag, self.over_diag + 2]
    }

    fn out_slot_of_diag(&self, diag: u8) -> u8 {
        let a = diag;
        let b = diag + 2;
        if self.slots[a as usize].end == End::Tail {
            a
        } else {
            b
        }
    }

    pub fn over_out_slot(&self) -> u8 {
        self.out_slot_of_diag(self.over_diag)
    }

    pub fn under_out_slot(&self) -> u8 {
        self.out_slot_of_diag(1 - self.over_diag)
    }

    pub fn sign(&self) -> i8 {
        if self.over_out_slot() == (self.under_out_slot() + 1) % 4 {
            1
        } else {
            -1
        }
    }
}

/// A directed arc between two crossing slots (or from a crossing back to
/// itself). Direction follows the component's orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub from: (CrossingId, u8),
    pub to: (CrossingId, u8),
    pub component: ComponentId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ComponentInfo {
    pub role: Option<String>,
}

/// One traversal of a crossing by a strand: the strand leaves through
/// `out_slot` (and therefore arrived at `(out_slot + 2) % 4`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Passage {
    pub crossing: CrossingId,
    pub out_slot: u8,
}

#[derive(Debug, Clone)]
pub struct Diagram {
    pub crossings: BTreeMap<CrossingId, Crossing>,
    pub arcs: BTreeMap<ArcId, Arc>,
    pub components: BTreeMap<ComponentId, ComponentInfo>,
    pub layout: Option<Layout>,
    next_crossing: CrossingId,
}

/// A directed side of an arc: `forward` walks tail to head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Dart {
    pub arc: ArcId,
    pub forward: bool,
}

/// A face of the diagram, listed as the boundary walk that keeps the face on
/// the right of every dart.
#[derive(Debug, Clone)]
pub struct Face {
    pub darts: Vec<Dart>,
}

impl Face {
    pub fn len(&self) -> usize {
        self.darts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.darts.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Symmetric linking matrix. Off-diagonal entries are linking numbers (half
/// the signed crossing count between the two components); diagonal entries
/// are self-writhes (the full signed self-crossing count).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkingMatrix {
    pub comps: Vec<ComponentId>,
    pub entries: Vec<Vec<i64>>,
}

impl LinkingMatrix {
    pub fn get(&self, a: ComponentId, b: ComponentId) -> i64 {
        let i = self.comps.iter().position(|&c| c == a).expect("component in matrix");
        let j = self.comps.iter().position(|&c| c == b).expect("component in matrix");
        self.entries[i][j]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|row| row.iter().all(|&e| e == 0))
    }

    pub fn off_diagonal_zero(&self) -> bool {
        self.entries
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().enumerate().all(|(j, &e)| i == j || e == 0))
    }

    /// Rows and columns restricted to `keep`, in the same relative order.
    pub fn submatrix(&self, keep: &BTreeSet<ComponentId>) -> LinkingMatrix {
        let idx: Vec<usize> = self
            .comps
            .iter()
            .enumerate()
            .filter(|(_, c)| keep.contains(c))
            .map(|(i, _)| i)
            .collect();
        LinkingMatrix {
            comps: idx.iter().map(|&i| self.comps[i]).collect(),
            entries: idx
                .iter()
                .map(|&i| idx.iter().map(|&j| self.entries[i][j]).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ComponentStats {
    pub passes: usize,
    pub self_crossings: usize,
    pub under_passes: usize,
    pub over_passes: usize,
}

#[derive(Debug, Clone)]
pub struct DiagramStats {
    pub crossing_count: usize,
    pub component_count: usize,
    pub free_circles: usize,
    pub writhe: i64,
    pub per_component: BTreeMap<ComponentId, ComponentStats>,
}

impl Diagram {
    /// Builds a diagram from per-component passage sequences plus the over
    /// diagonal of every crossing. This is the single reconstruction
    /// primitive: geometry assembly, sublink extraction and Reidemeister
    /// moves all funnel through it, and it validates the result in full.
    pub fn from_passages(
        mut components: Vec<(ComponentId, Vec<Passage>, Option<String>)>,
        over: &BTreeMap<CrossingId, u8>,
        layout: Option<Layout>,
    ) -> Result<Diagram, DiagramError> {
        components.sort_by_key(|(id, _, _)| *id);
        let mut comp_infos = BTreeMap::new();
        let mut arcs = BTreeMap::new();
        let mut slot_table: BTreeMap<CrossingId, [Option<SlotRef>; 4]> = BTreeMap::new();

        let mut next_arc: ArcId = 0;
        for (cid, passes, role) in &components {
            if comp_infos.insert(*cid, ComponentInfo { role: role.clone() }).is_some() {
                return Err(DiagramError::Structure(format!("duplicate component id {cid}")));
            }
            let t = passes.len();
            for (i, p) in passes.iter().enumerate() {
                if p.out_slot > 3 {
                    return Err(DiagramError::Structure(format!(
                        "component {cid}: out slot {} out of range",
                        p.out_slot
                    )));
                }
                let q = &passes[(i + 1) % t];
                let arc_id = next_arc;
                next_arc += 1;
                arcs.insert(
                    arc_id,
                    Arc {
                        from: (p.crossing, p.out_slot),
                        to: (q.crossing, (q.out_slot + 2) % 4),
                        component: *cid,
                    },
                );
                let fill = |table: &mut BTreeMap<CrossingId, [Option<SlotRef>; 4]>,
                            crossing: CrossingId,
                            slot: u8,
                            entry: SlotRef|
                 -> Result<(), DiagramError> {
                    let slots = table.entry(crossing).or_insert([None; 4]);
                    if slots[slot as usize].is_some() {
                        return Err(DiagramError::Structure(format!(
                            "crossing {crossing} slot {slot} claimed twice"
                        )));
                    }
                    slots[slot as usize] = Some(entry);
                    Ok(())
                };
                fill(&mut slot_table, p.crossing, p.out_slot, SlotRef { arc: arc_id, end: End::Tail })?;
                fill(
                    &mut slot_table,
                    q.crossing,
                    (q.out_slot + 2) % 4,
                    SlotRef { arc: arc_id, end: End::Head },
                )?;
            }
        }

        let mut crossings = BTreeMap::new();
        for (crossing, slots) in slot_table {
            let slots: Vec<SlotRef> = slots
                .into_iter()
                .enumerate()
                .map(|(i, s)| {
                    s.ok_or_else(|| {
                        DiagramError::Structure(format!("crossing {crossing} slot {i} unfilled"))
                    })
                })
                .collect::<Result<_, _>>()?;
            let over_diag = *over
                .get(&crossing)
                .ok_or_else(|| DiagramError::Structure(format!("crossing {crossing} has no over flag")))?;
            if over_diag > 1 {
                return Err(DiagramError::Structure(format!(
                    "crossing {crossing}: over diagonal {over_diag} out of range"
                )));
            }
            crossings.insert(
                crossing,
                Crossing { slots: [slots[0], slots[1], slots[2], slots[3]], over_diag },
            );
        }

        let next_crossing = crossings.keys().max().map_or(0, |m| m + 1);
        let d = Diagram { crossings, arcs, components: comp_infos, layout, next_crossing };
        let report = d.validate();
        if let Some(fail) = report.first_failure() {
            return Err(DiagramError::Invalid(format!("{}: {}", fail.name, fail.detail)));
        }
        Ok(d)
    }

    /// The inverse of [`Diagram::from_passages`]: each component's cyclic
    /// passage sequence, starting at its lowest-numbered arc.
    pub fn to_passages(&self) -> Vec<(ComponentId, Vec<Passage>, Option<String>)> {
        let mut first_arc: BTreeMap<ComponentId, ArcId> = BTreeMap::new();
        for (&aid, arc) in &self.arcs {
            first_arc.entry(arc.component).or_insert(aid);
        }
        self.components
            .iter()
            .map(|(&cid, info)| {
                let mut seq = Vec::new();
                if let Some(&start) = first_arc.get(&cid) {
                    let mut arc_id = start;
                    loop {
                        let arc = &self.arcs[&arc_id];
                        let (c, s_in) = arc.to;
                        let out = (s_in + 2) % 4;
                        seq.push(Passage { crossing: c, out_slot: out });
                        arc_id = self.crossings[&c].slots[out as usize].arc;
                        if arc_id == start {
                            break;
                        }
                    }
                    // Rotate so the sequence starts with the passage the
                    // starting arc leaves from, keeping the map deterministic.
                    seq.rotate_right(1);
                }
                (cid, seq, info.role.clone())
            })
            .collect()
    }

    pub fn over_map(&self) -> BTreeMap<CrossingId, u8> {
        self.crossings.iter().map(|(&c, x)| (c, x.over_diag)).collect()
    }

    /// Fresh crossing ids for move insertions; stable across edits.
    pub fn fresh_crossing_ids(&self, n: usize) -> Vec<CrossingId> {
        (0..n as u32).map(|i| self.next_crossing + i).collect()
    }

    pub fn with_next_crossing(mut self, next: CrossingId) -> Diagram {
        self.next_crossing = self.next_crossing.max(next);
        self
    }

    pub fn next_crossing_id(&self) -> CrossingId {
        self.next_crossing
    }

    /// Components with no crossings.
    pub fn free_components(&self) -> Vec<ComponentId> {
        let mut used: BTreeSet<ComponentId> = BTreeSet::new();
        for arc in self.arcs.values() {
            used.insert(arc.component);
        }
        self.components.keys().filter(|c| !used.contains(c)).copied().collect()
    }

    pub fn component_of_diag(&self, crossing: CrossingId, diag: u8) -> ComponentId {
        let x = &self.crossings[&crossing];
        self.arcs[&x.slots[diag as usize].arc].component
    }

    pub fn over_component(&self, crossing: CrossingId) -> ComponentId {
        self.component_of_diag(crossing, self.crossings[&crossing].over_diag)
    }

    pub fn under_component(&self, crossing: CrossingId) -> ComponentId {
        self.component_of_diag(crossing, 1 - self.crossings[&crossing].over_diag)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();

        // Arc ends and crossing slots must point at each other exactly.
        let mut slot_ok = true;
        let mut slot_detail = String::from("every arc end matches its crossing slot");
        'slots: for (&cid, x) in &self.crossings {
            for (si, slot) in x.slots.iter().enumerate() {
                let Some(arc) = self.arcs.get(&slot.arc) else {
                    slot_ok = false;
                    slot_detail = format!("crossing {cid} slot {si} references missing arc {}", slot.arc);
                    break 'slots;
                };
                let expect = (cid, si as u8);
                let actual = match slot.end {
                    End::Tail => arc.from,
                    End::Head => arc.to,
                };
                if actual != expect {
                    slot_ok = false;
                    slot_detail =
                        format!("crossing {cid} slot {si} disagrees with arc {}", slot.arc);
                    break 'slots;
                }
            }
        }
        if slot_ok {
            for (&aid, arc) in &self.arcs {
                let ends = [(arc.from, End::Tail), (arc.to, End::Head)];
                for ((c, s), end) in ends {
                    let valid = self
                        .crossings
                        .get(&c)
                        .map(|x| s < 4 && x.slots[s as usize] == SlotRef { arc: aid, end })
                        .unwrap_or(false);
                    if !valid {
                        slot_ok = false;
                        slot_detail = format!("arc {aid} endpoint ({c}, {s}) dangles");
                        break;
                    }
                }
                if !slot_ok {
                    break;
                }
                if !self.components.contains_key(&arc.component) {
                    slot_ok = false;
                    slot_detail = format!("arc {aid} names missing component {}", arc.component);
                    break;
                }
            }
        }
        checks.push(Check { name: "slot_consistency", passed: slot_ok, detail: slot_detail });

        // Each diagonal must carry a strand straight through: one head in,
        // one tail out, and the over marker must name a diagonal.
        let mut through_ok = true;
        let mut through_detail = String::from("both diagonals carry one incoming and one outgoing end");
        for (&cid, x) in &self.crossings {
            if x.over_diag > 1 {
                through_ok = false;
                through_detail = format!("crossing {cid} over diagonal out of range");
                break;
            }
            for d in 0..2usize {
                let ends = [x.slots[d].end, x.slots[d + 2].end];
                if ends[0] == ends[1] {
                    through_ok = false;
                    through_detail = format!("crossing {cid} diagonal {d} does not pass through");
                    break;
                }
            }
            if !through_ok {
                break;
            }
        }
        checks.push(Check { name: "strand_through", passed: through_ok, detail: through_detail });

        // Components are closed walks: following a strand through crossings
        // stays in the declared component and visits each arc once.
        let mut closure_ok = slot_ok && through_ok;
        let mut closure_detail = String::from("components are single closed walks");
        if closure_ok {
            let mut seen: BTreeSet<ArcId> = BTreeSet::new();
            for (&aid, arc) in &self.arcs {
                if seen.contains(&aid) {
                    continue;
                }
                let comp = arc.component;
                let mut cur = aid;
                loop {
                    if !seen.insert(cur) {
                        // Returned to an arc inside the same orbit walk.
                        break;
                    }
                    let a = &self.arcs[&cur];
                    if a.component != comp {
                        closure_ok = false;
                        closure_detail = format!(
                            "arc {cur} (component {}) reached from component {comp}",
                            a.component
                        );
                        break;
                    }
                    let (c, s_in) = a.to;
                    cur = self.crossings[&c].slots[((s_in + 2) % 4) as usize].arc;
                    if cur == aid {
                        break;
                    }
                }
                if !closure_ok {
                    break;
                }
            }
            if closure_ok {
                // No two components may share an orbit, and a component's
                // arcs must form exactly one orbit; both follow if every
                // component's arc count equals one full orbit length, which
                // the walk above established arc-by-arc. Remaining check:
                // each non-free component has at least one arc.
                let mut arc_count: BTreeMap<ComponentId, usize> = BTreeMap::new();
                for arc in self.arcs.values() {
                    *arc_count.entry(arc.component).or_default() += 1;
                }
                for &cid in arc_count.keys() {
                    if !self.components.contains_key(&cid) {
                        closure_ok = false;
                        closure_detail = format!("arcs reference undeclared component {cid}");
                        break;
                    }
                }
            }
        } else {
            closure_detail = String::from("skipped: earlier structural failure");
        }
        checks.push(Check { name: "component_closure", passed: closure_ok, detail: closure_detail });

        // Orbit uniqueness: one component id never splits into two walks.
        let mut orbit_ok = closure_ok;
        let mut orbit_detail = String::from("each component is one orbit");
        if orbit_ok {
            let mut orbit_of: BTreeMap<ComponentId, BTreeSet<ArcId>> = BTreeMap::new();
            let mut seen: BTreeSet<ArcId> = BTreeSet::new();
            for &aid in self.arcs.keys() {
                if seen.contains(&aid) {
                    continue;
                }
                let comp = self.arcs[&aid].component;
                let mut orbit = BTreeSet::new();
                let mut cur = aid;
                loop {
                    orbit.insert(cur);
                    seen.insert(cur);
                    let (c, s_in) = self.arcs[&cur].to;
                    cur = self.crossings[&c].slots[((s_in + 2) % 4) as usize].arc;
                    if cur == aid {
                        break;
                    }
                }
                if let Some(prev) = orbit_of.insert(comp, orbit) {
                    let _ = prev;
                    orbit_ok = false;
                    orbit_detail = format!("component {comp} splits into multiple closed walks");
                    break;
                }
            }
        } else {
            orbit_detail = String::from("skipped: earlier structural failure");
        }
        checks.push(Check { name: "orbit_uniqueness", passed: orbit_ok, detail: orbit_detail });

        // Euler count from the rotation system: with V crossings, E arcs, F
        // faces from the dart census and P crossing-connected pieces, a
        // sphere embedding of every piece forces V - E + F = 2P. Counting
        // the plane's shared outer face once and each free circle as its own
        // component, this is the same as V - E + F_plane = 1 + C.
        let mut euler_ok = orbit_ok;
        let mut euler_detail;
        if euler_ok {
            let v = self.crossings.len() as i64;
            let e = self.arcs.len() as i64;
            let f = self.faces().len() as i64;
            let p = self.crossing_pieces().len() as i64;
            euler_ok = v - e + f == 2 * p;
            let free = self.free_components().len();
            let f_plane = f - p + 1 + free as i64;
            let c_total = p + free as i64;
            euler_detail = format!(
                "V={v} E={e} F={f} pieces={p}: V-E+F={} vs 2P={}; plane form V-E+F'={} vs 1+C={}",
                v - e + f,
                2 * p,
                v - e + f_plane,
                1 + c_total
            );
        } else {
            euler_detail = String::from("skipped: earlier structural failure");
        }
        if self.crossings.is_empty() && self.arcs.is_empty() && euler_ok {
            euler_detail = format!(
                "no crossings; {} free circles",
                self.free_components().len()
            );
        }
        checks.push(Check { name: "euler", passed: euler_ok, detail: euler_detail });

        ValidationReport { checks }
    }

    /// Walks the face containing `start` (face kept on the right).
    pub fn face_from(&self, start: Dart) -> Face {
        let mut darts = Vec::new();
        let mut d = start;
        loop {
            darts.push(d);
            let (c, s_in) = if d.forward { self.arcs[&d.arc].to } else { self.arcs[&d.arc].from };
            let leave = (s_in + 1) % 4;
            let slot = self.crossings[&c].slots[leave as usize];
            d = Dart { arc: slot.arc, forward: slot.end == End::Tail };
            if d == start {
                break;
            }
        }
        Face { darts }
    }

    /// All faces of the crossing-carrying part of the diagram. Free circles
    /// do not appear (their placement is not tracked).
    pub fn faces(&self) -> Vec<Face> {
        let mut seen: BTreeSet<Dart> = BTreeSet::new();
        let mut faces = Vec::new();
        for &aid in self.arcs.keys() {
            for forward in [true, false] {
                let start = Dart { arc: aid, forward };
                if seen.contains(&start) {
                    continue;
                }
                let face = self.face_from(start);
                for &d in &face.darts {
                    seen.insert(d);
                }
                faces.push(face);
            }
        }
        faces
    }

    /// Crossing-connected pieces: crossings joined by arcs. Each piece is the
    /// set of crossing ids; free circles are not included.
    pub fn crossing_pieces(&self) -> Vec<BTreeSet<CrossingId>> {
        let mut visited: BTreeSet<CrossingId> = BTreeSet::new();
        let mut pieces = Vec::new();
        for &start in self.crossings.keys() {
            if visited.contains(&start) {
                continue;
            }
            let mut piece = BTreeSet::new();
            let mut queue = VecDeque::from([start]);
            visited.insert(start);
            while let Some(c) = queue.pop_front() {
                piece.insert(c);
                for slot in &self.crossings[&c].slots {
                    let arc = &self.arcs[&slot.arc];
                    for &(c2, _) in &[arc.from, arc.to] {
                        if visited.insert(c2) {
                            queue.push_back(c2);
                        }
                    }
                }
            }
            pieces.push(piece);
        }
        pieces
    }

    /// Partition of the component set by diagram connectivity (shared
    /// crossings). Free circles are their own groups.
    pub fn component_groups(&self) -> Vec<BTreeSet<ComponentId>> {
        let mut groups: Vec<BTreeSet<ComponentId>> = self
            .crossing_pieces()
            .iter()
            .map(|piece| {
                piece
                    .iter()
                    .flat_map(|c| [self.over_component(*c), self.under_component(*c)])
                    .collect()
            })
            .collect();
        for cid in self.free_components() {
            groups.push(BTreeSet::from([cid]));
        }
        groups.sort_by_key(|g| *g.iter().next().unwrap());
        groups
    }

    /// One diagram per diagram-connected group of components.
    pub fn split_components(&self) -> Vec<Diagram> {
        self.component_groups()
            .into_iter()
            .map(|g| self.extract_sublink(&g).expect("groups are valid keep sets"))
            .collect()
    }

    pub fn linking_matrix(&self) -> LinkingMatrix {
        let comps: Vec<ComponentId> = self.components.keys().copied().collect();
        let index: BTreeMap<ComponentId, usize> =
            comps.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let n = comps.len();
        let mut raw = vec![vec![0i64; n]; n];
        for (&cid, x) in &self.crossings {
            let over = self.over_component(cid);
            let under = self.under_component(cid);
            let s = x.sign() as i64;
            let i = index[&over];
            let j = index[&under];
            if i == j {
                raw[i][i] += 2 * s; // halved below alongside the off-diagonal sums
            } else {
                raw[i][j] += s;
                raw[j][i] += s;
            }
        }
        let entries = raw
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        if i != j {
                            debug_assert!(v % 2 == 0, "odd crossing parity between closed curves");
                        }
                        v / 2
                    })
                    .collect()
            })
            .collect();
        LinkingMatrix { comps, entries }
    }

    /// Reads the word traced out by `comp` in the free group on the listed
    /// meridians: one letter per passage of `comp` under a component that
    /// appears in `gens`, signed by the crossing, in travel order. Passing
    /// under a component missing from `gens` is an error so that stray
    /// crossings surface instead of vanishing from the word.
    pub fn underpass_word(
        &self,
        comp: ComponentId,
        gens: &BTreeMap<ComponentId, u32>,
    ) -> Result<Vec<i32>, DiagramError> {
        if !self.components.contains_key(&comp) {
            return Err(DiagramError::UnknownComponent(comp));
        }
        let mut word = Vec::new();
        for (cid, seq, _) in self.to_passages() {
            if cid != comp {
                continue;
            }
            for p in seq {
                let x = &self.crossings[&p.crossing];
                if p.out_slot % 2 == x.over_diag {
                    continue;
                }
                let over = self.over_component(p.crossing);
                let g = gens.get(&over).copied().ok_or_else(|| {
                    DiagramError::Structure(format!(
                        "component {comp} passes under component {over}, which has no generator"
                    ))
                })?;
                word.push(x.sign() as i32 * g as i32);
            }
        }
        Ok(word)
    }

    pub fn stats(&self) -> DiagramStats {
        let mut per: BTreeMap<ComponentId, ComponentStats> = self
            .components
            .keys()
            .map(|&c| (c, ComponentStats::default()))
            .collect();
        let mut writhe = 0i64;
        for &cid in self.crossings.keys() {
            let x = &self.crossings[&cid];
            let over = self.over_component(cid);
            let under = self.under_component(cid);
            per.get_mut(&over).unwrap().over_passes += 1;
            per.get_mut(&over).unwrap().passes += 1;
            per.get_mut(&under).unwrap().under_passes += 1;
            per.get_mut(&under).unwrap().passes += 1;
            if over == under {
                per.get_mut(&over).unwrap().self_crossings += 1;
                writhe += x.sign() as i64;
            }
        }
        DiagramStats {
            crossing_count: self.crossings.len(),
            component_count: self.components.len(),
            free_circles: self.free_components().len(),
            writhe,
            per_component: per,
        }
    }

    /// The sub-diagram on `keep`: other components are deleted and every
    /// crossing they participated in disappears, fusing the surviving strand
    /// back together. Crossing ids of surviving crossings are preserved.
    pub fn extract_sublink(&self, keep: &BTreeSet<ComponentId>) -> Result<Diagram, DiagramError> {
        if keep.is_empty() {
            return Err(DiagramError::EmptyKeep);
        }
        for &c in keep {
            if !self.components.contains_key(&c) {
                return Err(DiagramError::UnknownComponent(c));
            }
        }
        let surviving: BTreeSet<CrossingId> = self
            .crossings
            .keys()
            .filter(|&&c| keep.contains(&self.over_component(c)) && keep.contains(&self.under_component(c)))
            .copied()
            .collect();
        let comps = self
            .to_passages()
            .into_iter()
            .filter(|(cid, _, _)| keep.contains(cid))
            .map(|(cid, seq, role)| {
                let seq = seq.into_iter().filter(|p| surviving.contains(&p.crossing)).collect();
                (cid, seq, role)
            })
            .collect();
        let over = self
            .over_map()
            .into_iter()
            .filter(|(c, _)| surviving.contains(c))
            .collect();
        let layout = self.layout.as_ref().map(|l| Layout {
            paths: l.paths.iter().filter(|(c, _)| keep.contains(c)).map(|(c, p)| (*c, p.clone())).collect(),
            crossing_pos: l
                .crossing_pos
                .iter()
                .filter(|(c, _)| surviving.contains(c))
                .map(|(c, p)| (*c, *p))
                .collect(),
        });
        Ok(Diagram::from_passages(comps, &over, layout)?.with_next_crossing(self.next_crossing))
    }

    /// Flips one crossing: over becomes under. The sign flips and everything
    /// else stays fixed. The stored layout is dropped because segment levels
    /// cannot be patched locally on the grid.
    pub fn change_crossing(&self, crossing: CrossingId) -> Result<Diagram, DiagramError> {
        if !self.crossings.contains_key(&crossing) {
            return Err(DiagramError::UnknownCrossing(crossing));
        }
        let mut d = self.clone();
        let x = d.crossings.get_mut(&crossing).unwrap();
        x.over_diag = 1 - x.over_diag;
        d.layout = None;
        Ok(d)
    }

    /// Per-component alternating flags plus the conjunction. Components with
    /// at most one crossing passage count as alternating.
    pub fn is_alternating(&self) -> (bool, BTreeMap<ComponentId, bool>) {
        let mut per = BTreeMap::new();
        for (cid, seq, _) in self.to_passages() {
            let flags: Vec<bool> = seq
                .iter()
                .map(|p| p.out_slot % 2 == self.crossings[&p.crossing].over_diag)
                .collect();
            let alt = flags.len() <= 1
                || (0..flags.len()).all(|i| flags[i] != flags[(i + 1) % flags.len()]);
            per.insert(cid, alt);
        }
        (per.values().all(|&b| b), per)
    }

    /// Canonical byte string: equal exactly for diagrams that are isomorphic
    /// as oriented sphere maps respecting over/under and component
    /// orientations, ignoring component labels. Crossing-connected pieces are
    /// given rooted breadth-first codes minimized over all starting crossings
    /// and slot rotations, sorted, and concatenated; free circles contribute
    /// only their count.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut piece_codes: Vec<Vec<u32>> = self
            .crossing_pieces()
            .iter()
            .map(|piece| self.piece_code(piece))
            .collect();
        piece_codes.sort();
        let mut words: Vec<u32> = Vec::new();
        words.push(self.free_components().len() as u32);
        words.push(piece_codes.len() as u32);
        for code in piece_codes {
            words.push(code.len() as u32);
            words.extend(code);
        }
        let mut bytes = Vec::with_capacity(words.len() * 4);
        for w in words {
            bytes.extend_from_slice(&w.to_be_bytes());
        }
        bytes
    }

    fn piece_code(&self, piece: &BTreeSet<CrossingId>) -> Vec<u32> {
        let mut best: Option<Vec<u32>> = None;
        for &root in piece {
            for offset in 0..4u8 {
                let code = self.rooted_code(root, offset, piece.len());
                if best.as_ref().is_none_or(|b| code < *b) {
                    best = Some(code);
                }
            }
        }
        best.unwrap_or_default()
    }

    fn rooted_code(&self, root: CrossingId, root_offset: u8, piece_size: usize) -> Vec<u32> {
        let mut index: BTreeMap<CrossingId, u32> = BTreeMap::new();
        let mut offset: BTreeMap<CrossingId, u8> = BTreeMap::new();
        let mut order: Vec<CrossingId> = Vec::with_capacity(piece_size);
        index.insert(root, 0);
        offset.insert(root, root_offset);
        order.push(root);
        let mut code = Vec::with_capacity(piece_size * 16);
        let mut i = 0;
        while i < order.len() {
            let c = order[i];
            let off = offset[&c];
            let x = &self.crossings[&c];
            for j in 0..4u8 {
                let s = (j + off) % 4;
                let slot = x.slots[s as usize];
                let arc = &self.arcs[&slot.arc];
                let (oc, os) = match slot.end {
                    End::Tail => arc.to,
                    End::Head => arc.from,
                };
                let (oc_index, oc_slot) = match index.get(&oc) {
                    Some(&ix) => (ix, (os + 4 - offset[&oc]) % 4),
                    None => {
                        let ix = order.len() as u32;
                        index.insert(oc, ix);
                        offset.insert(oc, os);
                        order.push(oc);
                        (ix, 0)
                    }
                };
                let end_bit = if slot.end == End::Tail { 1u32 } else { 0 };
                let over_bit = if s % 2 == x.over_diag { 1u32 } else { 0 };
                code.push(end_bit << 3 | over_bit << 2 | oc_slot as u32);
                code.push(oc_index);
            }
            i += 1;
        }
        code
    }

    pub fn canonical_sha256(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical_bytes());
        hex::encode(h.finalize())
    }

    pub fn isomorphic(&self, other: &Diagram) -> bool {
        self.canonical_bytes() == other.canonical_bytes()
    }

    /// PD notation: one `X(a,b,c,d)` per crossing, arcs numbered from 1 along
    /// each component, entries counterclockwise starting at the incoming
    /// under-arc.
    pub fn export_pd(&self) -> String {
        let mut label: BTreeMap<ArcId, usize> = BTreeMap::new();
        let mut next = 1usize;
        for (cid, seq, _) in self.to_passages() {
            if seq.is_empty() {
                continue;
            }
            // Label arcs in walk order starting from the component's first arc.
            let mut first_arc: Option<ArcId> = None;
            for (&aid, arc) in &self.arcs {
                if arc.component == cid {
                    first_arc = Some(aid);
                    break;
                }
            }
            let start = first_arc.expect("component with passages has arcs");
            let mut arc_id = start;
            loop {
                label.insert(arc_id, next);
                next += 1;
                let (c, s_in) = self.arcs[&arc_id].to;
                arc_id = self.crossings[&c].slots[((s_in + 2) % 4) as usize].arc;
                if arc_id == start {
                    break;
                }
            }
        }
        let mut out = String::new();
        for (&cid, x) in &self.crossings {
            let under_in = (x.under_out_slot() + 2) % 4;
            let ids: Vec<String> = (0..4)
                .map(|k| label[&x.slots[((under_in + k) % 4) as usize].arc].to_string())
                .collect();
            let _ = writeln!(out, "X({}) ; crossing {}", ids.join(","), cid);
        }
        if self.crossings.is_empty() {
            let _ = writeln!(out, "; no crossings");
        }
        let free = self.free_components().len();
        if free > 0 {
            let _ = writeln!(out, "; {free} free circles");
        }
        out
    }

    /// Signed Gauss code, one line per component: `O`/`U` for over/under,
    /// 1-based crossing numbers in crossing-id order, and the crossing sign.
    pub fn export_gauss(&self) -> String {
        let number: BTreeMap<CrossingId, usize> =
            self.crossings.keys().enumerate().map(|(i, &c)| (c, i + 1)).collect();
        let mut out = String::new();
        for (cid, seq, _) in self.to_passages() {
            let _ = write!(out, "c{cid}:");
            if seq.is_empty() {
                let _ = write!(out, " free");
            }
            for p in seq {
                let x = &self.crossings[&p.crossing];
                let ou = if p.out_slot % 2 == x.over_diag { 'O' } else { 'U' };
                let sg = if x.sign() > 0 { '+' } else { '-' };
                let _ = write!(out, " {}{}{}", ou, number[&p.crossing], sg);
            }
            let _ = writeln!(out);
        }
        out
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let comps: Vec<serde_json::Value> = self
            .components
            .iter()
            .map(|(&id, info)| {
                serde_json::json!({
                    "id": id,
                    "role": info.role,
                    "orientation": 1,
                })
            })
            .collect();
        let crossings: Vec<serde_json::Value> = self
            .crossings
            .iter()
            .map(|(&id, x)| {
                serde_json::json!({
                    "id": id,
                    "sign": x.sign(),
                    "slots": x.slots.iter().map(|s| serde_json::json!({
                        "arc": s.arc,
                        "end": if s.end == End::Tail { "tail" } else { "head" },
                    })).collect::<Vec<_>>(),
                    "over_slots": x.over_slots(),
                })
            })
            .collect();
        let arcs: Vec<serde_json::Value> = self
            .arcs
            .iter()
            .map(|(&id, a)| {
                serde_json::json!({
                    "id": id,
                    "component": a.component,
                    "from": {"crossing": a.from.0, "slot": a.from.1},
                    "to": {"crossing": a.to.0, "slot": a.to.1},
                })
            })
            .collect();
        let mut v = serde_json::json!({
            "components": comps,
            "crossings": crossings,
            "arcs": arcs,
        });
        if let Some(layout) = &self.layout {
            v["layout"] = serde_json::to_value(layout).expect("layout serializes");
        }
        v
    }

    pub fn export_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("diagram serializes")
    }

    pub fn from_json_value(v: &serde_json::Value) -> Result<Diagram, DiagramError> {
        let err = |m: &str| DiagramError::Json(m.to_string());
        let comps = v["components"].as_array().ok_or_else(|| err("missing components"))?;
        let mut components = BTreeMap::new();
        for c in comps {
            let id = c["id"].as_u64().ok_or_else(|| err("component id"))? as ComponentId;
            let role = c["role"].as_str().map(|s| s.to_string());
            components.insert(id, ComponentInfo { role });
        }
        let mut arcs = BTreeMap::new();
        for a in v["arcs"].as_array().ok_or_else(|| err("missing arcs"))? {
            let id = a["id"].as_u64().ok_or_else(|| err("arc id"))? as ArcId;
            let get_end = |e: &serde_json::Value| -> Result<(CrossingId, u8), DiagramError> {
                Ok((
                    e["crossing"].as_u64().ok_or_else(|| err("arc endpoint crossing"))? as CrossingId,
                    e["slot"].as_u64().ok_or_else(|| err("arc endpoint slot"))? as u8,
                ))
            };
            arcs.insert(
                id,
                Arc {
                    from: get_end(&a["from"])?,
                    to: get_end(&a["to"])?,
                    component: a["component"].as_u64().ok_or_else(|| err("arc component"))?
                        as ComponentId,
                },
            );
        }
        let mut crossings = BTreeMap::new();
        for x in v["crossings"].as_array().ok_or_else(|| err("missing crossings"))? {
            let id = x["id"].as_u64().ok_or_else(|| err("crossing id"))? as CrossingId;
            let slots_v = x["slots"].as_array().ok_or_else(|| err("crossing slots"))?;
            if slots_v.len() != 4 {
                return Err(err("crossing needs 4 slots"));
            }
            let mut slots = Vec::new();
            for s in slots_v {
                let arc = s["arc"].as_u64().ok_or_else(|| err("slot arc"))? as ArcId;
                let end = match s["end"].as_str() {
                    Some("tail") => End::Tail,
                    Some("head") => End::Head,
                    _ => return Err(err("slot end must be tail or head")),
                };
                slots.push(SlotRef { arc, end });
            }
            let over = x["over_slots"].as_array().ok_or_else(|| err("over_slots"))?;
            let o0 = over.first().and_then(|o| o.as_u64()).ok_or_else(|| err("over_slots[0]"))? as u8;
            let o1 = over.get(1).and_then(|o| o.as_u64()).ok_or_else(|| err("over_slots[1]"))? as u8;
            if o1 != o0 + 2 || o0 > 1 {
                return Err(err("over_slots must be a diagonal [d, d+2]"));
            }
            crossings.insert(
                id,
                Crossing { slots: [slots[0], slots[1], slots[2], slots[3]], over_diag: o0 },
            );
        }
        let layout = match v.get("layout") {
            Some(l) if !l.is_null() => Some(
                serde_json::from_value(l.clone()).map_err(|e| DiagramError::Json(e.to_string()))?,
            ),
            _ => None,
        };
        let next_crossing = crossings.keys().max().map_or(0, |m| m + 1);
        let d = Diagram { crossings, arcs, components, layout, next_crossing };
        let report = d.validate();
        if let Some(fail) = report.first_failure() {
            return Err(DiagramError::Invalid(format!("{}: {}", fail.name, fail.detail)));
        }
        Ok(d)
    }

    pub fn import_json(text: &str) -> Result<Diagram, DiagramError> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| DiagramError::Json(e.to_string()))?;
        Diagram::from_json_value(&v)
    }
}
