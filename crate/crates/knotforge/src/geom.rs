//! Rectilinear layout engine.
//!
//! Every diagram builder in this crate describes link components as closed
//! axis-aligned polylines on the integer grid, with an integer depth level per
//! segment. [`assemble`] checks general position, finds all crossings, reads
//! over/under off the levels, and produces a [`Diagram`] whose rotation system
//! comes straight from the compass directions at each crossing. Planarity is
//! therefore automatic, and the Euler validation on the result doubles as a
//! certificate that nothing here miscounted.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::diagram::{ComponentId, CrossingId, Diagram, Passage};

pub type Point = (i64, i64);

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("component {0}: polyline needs at least 4 points, got {1}")]
    TooFewPoints(usize, usize),
    #[error("component {0}: levels length {1} does not match point count {2}")]
    LevelCount(usize, usize, usize),
    #[error("component {0}: segment {1} is not axis-aligned or has zero length")]
    BadSegment(usize, usize),
    #[error("component {0}: segments {1} and {2} double back on each other")]
    Reversal(usize, usize, usize),
    #[error("segments overlap along a line near ({0}, {1})")]
    Overlap(i64, i64),
    #[error("segment endpoint touches another segment at ({0}, {1})")]
    Touch(i64, i64),
    #[error("crossing at ({0}, {1}) has equal levels {2} on both strands")]
    LevelTie(i64, i64, i64),
    #[error("diagram assembly failed validation: {0}")]
    Assembly(String),
}

/// One closed component: axis-aligned points plus a depth level per segment.
/// Segment `i` runs from `points[i]` to `points[(i+1) % len]` at `levels[i]`;
/// higher level passes over lower at a crossing.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PolyComponent {
    pub points: Vec<Point>,
    pub levels: Vec<i64>,
    pub role: Option<String>,
}

impl PolyComponent {
    pub fn new(points: Vec<Point>, levels: Vec<i64>, role: Option<String>) -> Self {
        PolyComponent { points, levels, role }
    }

    /// Closed rectangle with one uniform level, counterclockwise from the
    /// lower-left corner.
    pub fn rect(x0: i64, y0: i64, x1: i64, y1: i64, level: i64, role: Option<String>) -> Self {
        PolyComponent {
            points: vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)],
            levels: vec![level; 4],
            role,
        }
    }
}

/// Retained drawing data: the polylines that produced the diagram and where
/// each crossing sits. Structural edits that cannot maintain a faithful
/// drawing drop the layout instead of guessing.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Layout {
    pub paths: BTreeMap<ComponentId, PolyComponent>,
    pub crossing_pos: BTreeMap<CrossingId, Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Segment {
    comp: usize,
    idx: usize,
    a: Point,
    b: Point,
    level: i64,
}

impl Segment {
    fn horizontal(&self) -> bool {
        self.a.1 == self.b.1
    }

    fn x_range(&self) -> (i64, i64) {
        (self.a.0.min(self.b.0), self.a.0.max(self.b.0))
    }

    fn y_range(&self) -> (i64, i64) {
        (self.a.1.min(self.b.1), self.a.1.max(self.b.1))
    }
}

fn ranges_overlap(a: (i64, i64), b: (i64, i64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// Assembles polylines into a diagram, assigning component ids 0, 1, …
pub fn assemble(comps: Vec<PolyComponent>) -> Result<Diagram, GeomError> {
    let with_ids = comps
        .into_iter()
        .enumerate()
        .map(|(i, c)| (i as ComponentId, c))
        .collect();
    assemble_with_ids(with_ids)
}

/// Assembles polylines into a diagram keeping the caller's component ids.
pub fn assemble_with_ids(
    comps: Vec<(ComponentId, PolyComponent)>,
) -> Result<Diagram, GeomError> {
    for (i, (_, c)) in comps.iter().enumerate() {
        check_polyline(i, c)?;
    }

    let mut segments = Vec::new();
    for (ci, (_, c)) in comps.iter().enumerate() {
        let n = c.points.len();
        for si in 0..n {
            segments.push(Segment {
                comp: ci,
                idx: si,
                a: c.points[si],
                b: c.points[(si + 1) % n],
                level: c.levels[si],
            });
        }
    }

    let crossings = find_crossings(&comps, &segments)?;

    // Deterministic crossing ids by position.
    let mut order: Vec<Point> = crossings.keys().copied().collect();
    order.sort_unstable();
    let id_of: BTreeMap<Point, CrossingId> = order
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, i as CrossingId))
        .collect();

    let mut over_diag: BTreeMap<CrossingId, u8> = BTreeMap::new();
    // Crossing points per (component index, segment index), for traversal.
    let mut on_segment: BTreeMap<(usize, usize), Vec<Point>> = BTreeMap::new();
    for (&p, &(h, v)) in &crossings {
        let cid = id_of[&p];
        // Horizontal strand occupies slots 0 and 2; it is the over strand
        // exactly when its level is higher.
        let diag = if segments[h].level > segments[v].level { 0 } else { 1 };
        over_diag.insert(cid, diag);
        on_segment.entry((segments[h].comp, segments[h].idx)).or_default().push(p);
        on_segment.entry((segments[v].comp, segments[v].idx)).or_default().push(p);
    }

    // Walk each polyline and record its passages in travel order.
    let mut passes: Vec<(ComponentId, Vec<Passage>, Option<String>)> = Vec::new();
    for (ci, (cid, c)) in comps.iter().enumerate() {
        let n = c.points.len();
        let mut seq = Vec::new();
        for si in 0..n {
            let a = c.points[si];
            let b = c.points[(si + 1) % n];
            let Some(pts) = on_segment.get(&(ci, si)) else { continue };
            let mut pts = pts.clone();
            // Order along the direction of travel.
            if a.0 == b.0 {
                pts.sort_unstable_by_key(|p| p.1);
                if b.1 < a.1 {
                    pts.reverse();
                }
            } else {
                pts.sort_unstable_by_key(|p| p.0);
                if b.0 < a.0 {
                    pts.reverse();
                }
            }
            let out_slot = match (b.0 - a.0, b.1 - a.1) {
                (dx, _) if dx > 0 => 0, // east
                (dx, _) if dx < 0 => 2, // west
                (_, dy) if dy > 0 => 1, // north
                _ => 3,                 // south
            };
            for p in pts {
                seq.push(Passage { crossing: id_of[&p], out_slot });
            }
        }
        passes.push((*cid, seq, c.role.clone()));
    }

    let layout = Layout {
        paths: comps.into_iter().collect(),
        crossing_pos: id_of.iter().map(|(&p, &c)| (c, p)).collect(),
    };

    Diagram::from_passages(passes, &over_diag, Some(layout))
        .map_err(|e| GeomError::Assembly(e.to_string()))
}

fn check_polyline(ci: usize, c: &PolyComponent) -> Result<(), GeomError> {
    let n = c.points.len();
    if n < 4 {
        return Err(GeomError::TooFewPoints(ci, n));
    }
    if c.levels.len() != n {
        return Err(GeomError::LevelCount(ci, c.levels.len(), n));
    }
    let dir = |i: usize| -> Option<(i64, i64)> {
        let a = c.points[i];
        let b = c.points[(i + 1) % n];
        let d = (b.0 - a.0, b.1 - a.1);
        if (d.0 == 0) == (d.1 == 0) {
            return None; // zero length or diagonal
        }
        Some((d.0.signum(), d.1.signum()))
    };
    for i in 0..n {
        let d = dir(i).ok_or(GeomError::BadSegment(ci, i))?;
        let next = (i + 1) % n;
        let dn = dir(next).ok_or(GeomError::BadSegment(ci, next))?;
        if d.0 == -dn.0 && d.1 == -dn.1 {
            return Err(GeomError::Reversal(ci, i, next));
        }
    }
    Ok(())
}

/// Finds all proper crossings, rejecting every general-position violation:
/// collinear overlap, endpoint contact between non-adjacent segments, and
/// equal-level crossings. Returns crossing point -> (horizontal segment
/// index, vertical segment index).
fn find_crossings(
    comps: &[(ComponentId, PolyComponent)],
    segments: &[Segment],
) -> Result<BTreeMap<Point, (usize, usize)>, GeomError> {
    let mut found = BTreeMap::new();
    for i in 0..segments.len() {
        for j in (i + 1)..segments.len() {
            let s = &segments[i];
            let t = &segments[j];
            let adjacent = s.comp == t.comp && {
                let n = comps[s.comp].1.points.len();
                (s.idx + 1) % n == t.idx || (t.idx + 1) % n == s.idx
            };
            if adjacent {
                continue;
            }
            match (s.horizontal(), t.horizontal()) {
                (true, true) => {
                    if s.a.1 == t.a.1 && ranges_overlap(s.x_range(), t.x_range()) {
                        return Err(GeomError::Overlap(t.x_range().0, t.a.1));
                    }
                }
                (false, false) => {
                    if s.a.0 == t.a.0 && ranges_overlap(s.y_range(), t.y_range()) {
                        return Err(GeomError::Overlap(s.a.0, t.y_range().0));
                    }
                }
                (true, false) | (false, true) => {
                    let (h, v, hi, vi) = if s.horizontal() {
                        (s, t, i, j)
                    } else {
                        (t, s, j, i)
                    };
                    let (hx0, hx1) = h.x_range();
                    let (vy0, vy1) = v.y_range();
                    let px = v.a.0;
                    let py = h.a.1;
                    if px < hx0 || px > hx1 || py < vy0 || py > vy1 {
                        continue; // no contact
                    }
                    let interior_h = px > hx0 && px < hx1;
                    let interior_v = py > vy0 && py < vy1;
                    if interior_h && interior_v {
                        if h.level == v.level {
                            return Err(GeomError::LevelTie(px, py, h.level));
                        }
                        found.insert((px, py), (hi, vi));
                    } else {
                        return Err(GeomError::Touch(px, py));
                    }
                }
            }
        }
    }
    Ok(found)
}

/// Direction of travel of segment `i` of a closed polyline.
pub fn segment_dir(points: &[Point], i: usize) -> (i64, i64) {
    let a = points[i];
    let b = points[(i + 1) % points.len()];
    ((b.0 - a.0).signum(), (b.1 - a.1).signum())
}

/// Left-hand unit normal of a travel direction.
pub fn left_normal(dir: (i64, i64)) -> (i64, i64) {
    (-dir.1, dir.0)
}

/// Parallel copy of a closed rectilinear polyline, offset `d` units to the
/// left of the direction of travel (use negative `d` for the right side).
/// Corners are mitered: each new corner is the old one displaced by the sum
/// of the two adjacent segment offsets, which is exact for perpendicular
/// turns and collapses to a single displacement on collinear joints.
pub fn offset_polyline(points: &[Point], d: i64) -> Vec<Point> {
    let n = points.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let np = left_normal(segment_dir(points, prev));
        let nc = left_normal(segment_dir(points, i));
        let shift = if np == nc {
            np
        } else {
            (np.0 + nc.0, np.1 + nc.1)
        };
        out.push((points[i].0 + d * shift.0, points[i].1 + d * shift.1));
    }
    out
}

/// Scales every coordinate of a set of polylines by `k`.
pub fn scale_paths(paths: &mut [(ComponentId, PolyComponent)], k: i64) {
    for (_, c) in paths.iter_mut() {
        for p in &mut c.points {
            p.0 *= k;
            p.1 *= k;
        }
    }
}
