//! Diagnostic SVG rendering. Diagrams that carry a stored drawing are
//! drawn from it directly; diagrams that lost theirs (anything that went
//! through a move) get a quick force-free embedding computed from the
//! rotation system instead. Either way the only promise is that over
//! and under strands read correctly at every crossing.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::diagram::{ArcId, ComponentId, CrossingId, Diagram, End};
use crate::geom::Layout;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("diagram too large to embed without a stored drawing ({nodes} nodes)")]
    TooLarge { nodes: usize },
}

const GAP: f64 = 0.75;

fn color(i: usize) -> String {
    let hue = (i as f64 * 137.508) % 360.0;
    format!("hsl({hue:.0}, 65%, 42%)")
}

struct SvgDoc {
    body: String,
    min: (f64, f64),
    max: (f64, f64),
}

impl SvgDoc {
    fn new() -> SvgDoc {
        SvgDoc {
            body: String::new(),
            min: (f64::INFINITY, f64::INFINITY),
            max: (f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn see(&mut self, p: (f64, f64)) {
        self.min.0 = self.min.0.min(p.0);
        self.min.1 = self.min.1.min(p.1);
        self.max.0 = self.max.0.max(p.0);
        self.max.1 = self.max.1.max(p.1);
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), color: &str, width: f64) {
        self.see(a);
        self.see(b);
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="{width:.3}" stroke-linecap="round"/>"#,
            a.0, -a.1, b.0, -b.1,
        );
    }

    fn text(&mut self, p: (f64, f64), size: f64, color: &str, s: &str) {
        self.see(p);
        let escaped = s.replace('&', "&amp;").replace('<', "&lt;");
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" font-size="{size:.2}" fill="{color}" font-family="monospace">{escaped}</text>"#,
            p.0, -p.1,
        );
    }

    fn arrow(&mut self, at: (f64, f64), dir: (f64, f64), scale: f64, color: &str) {
        let len = (dir.0 * dir.0 + dir.1 * dir.1).sqrt();
        if len < 1e-9 {
            return;
        }
        let u = (dir.0 / len, dir.1 / len);
        let n = (-u.1, u.0);
        let tip = (at.0 + u.0 * scale, at.1 + u.1 * scale);
        let l = (at.0 - u.0 * scale + n.0 * scale * 0.7, at.1 - u.1 * scale + n.1 * scale * 0.7);
        let r = (at.0 - u.0 * scale - n.0 * scale * 0.7, at.1 - u.1 * scale - n.1 * scale * 0.7);
        let _ = writeln!(
            self.body,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{color}"/>"#,
            tip.0, -tip.1, l.0, -l.1, r.0, -r.1,
        );
    }

    fn finish(self) -> String {
        let (w, h) = if self.min.0.is_finite() {
            (self.max.0 - self.min.0, self.max.1 - self.min.1)
        } else {
            (1.0, 1.0)
        };
        let pad = 0.04 * w.max(h) + 2.0;
        let (x0, y0) = (self.min.0 - pad, -(self.max.1 + pad));
        let (vw, vh) = (w + 2.0 * pad, h + 2.0 * pad);
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{x0:.2} {y0:.2} {vw:.2} {vh:.2}\">\n\
             <rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{vw:.2}\" height=\"{vh:.2}\" fill=\"white\"/>\n\
             {}</svg>\n",
            self.body
        )
    }
}

/// Cuts `[lo, hi]` around each value in `cuts`, returning kept intervals.
fn cut_intervals(lo: f64, hi: f64, cuts: &[f64], gap: f64) -> Vec<(f64, f64)> {
    let mut cs = cuts.to_vec();
    cs.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut start = lo;
    for c in cs {
        let a = c - gap;
        let b = c + gap;
        if a > start {
            out.push((start, a));
        }
        start = start.max(b);
    }
    if start < hi {
        out.push((start, hi));
    }
    out
}

fn draw_from_layout(d: &Diagram, layout: &Layout, doc: &mut SvgDoc) {
    // Crossings where the horizontal strand dives under, and where the
    // vertical one does. Over slots on diagonal 0 mean the over strand
    // runs east-west, so the vertical strand is the under one there.
    let mut under_vertical: Vec<(f64, f64)> = Vec::new();
    let mut under_horizontal: Vec<(f64, f64)> = Vec::new();
    for (c, x) in &d.crossings {
        let &(px, py) = match layout.crossing_pos.get(c) {
            Some(p) => p,
            None => continue,
        };
        let p = (px as f64, py as f64);
        if x.over_diag == 0 {
            under_vertical.push(p);
        } else {
            under_horizontal.push(p);
        }
    }

    let extent: f64 = {
        let mut lo = (i64::MAX, i64::MAX);
        let mut hi = (i64::MIN, i64::MIN);
        for p in layout.paths.values() {
            for &(x, y) in &p.points {
                lo = (lo.0.min(x), lo.1.min(y));
                hi = (hi.0.max(x), hi.1.max(y));
            }
        }
        ((hi.0 - lo.0).max(hi.1 - lo.1)).max(1) as f64
    };
    let width = (extent / 420.0).clamp(0.12, 1.0);

    for (i, (comp, path)) in layout.paths.iter().enumerate() {
        let col = color(i);
        let pts = &path.points;
        let mut longest = (0.0, (0.0, 0.0), (0.0, 0.0));
        for k in 0..pts.len() {
            let a = pts[k];
            let b = pts[(k + 1) % pts.len()];
            let (af, bf) = ((a.0 as f64, a.1 as f64), (b.0 as f64, b.1 as f64));
            let seg_len = (bf.0 - af.0).abs() + (bf.1 - af.1).abs();
            if seg_len > longest.0 {
                longest = (seg_len, af, bf);
            }
            if a.1 == b.1 {
                // horizontal: gap where the vertical strand is on top
                let y = af.1;
                let (lo, hi) = (af.0.min(bf.0), af.0.max(bf.0));
                let cuts: Vec<f64> = under_horizontal
                    .iter()
                    .filter(|&&(cx, cy)| cy == y && cx > lo && cx < hi)
                    .map(|&(cx, _)| cx)
                    .collect();
                for (u, v) in cut_intervals(lo, hi, &cuts, GAP) {
                    doc.line((u, y), (v, y), &col, width);
                }
            } else {
                let x = af.0;
                let (lo, hi) = (af.1.min(bf.1), af.1.max(bf.1));
                let cuts: Vec<f64> = under_vertical
                    .iter()
                    .filter(|&&(cx, cy)| cx == x && cy > lo && cy < hi)
                    .map(|&(_, cy)| cy)
                    .collect();
                for (u, v) in cut_intervals(lo, hi, &cuts, GAP) {
                    doc.line((x, u), (x, v), &col, width);
                }
            }
        }
        let mid = (
            (longest.1 .0 + longest.2 .0) / 2.0,
            (longest.1 .1 + longest.2 .1) / 2.0,
        );
        let dir = (longest.2 .0 - longest.1 .0, longest.2 .1 - longest.1 .1);
        doc.arrow(mid, dir, 2.0 * width, &col);
        let label = match &d.components.get(comp).and_then(|i| i.role.clone()) {
            Some(role) => format!("{comp}:{role}"),
            None => format!("{comp}"),
        };
        let anchor = (pts[0].0 as f64, pts[0].1 as f64 - 1.2);
        doc.text(anchor, (6.0 * width).max(1.6), &col, &label);
    }
}

struct PieceEmbedding {
    /// Node positions: crossings first, then two subdivision points per arc.
    pos: Vec<(f64, f64)>,
    crossing_index: BTreeMap<CrossingId, usize>,
    arc_mids: BTreeMap<ArcId, (usize, usize)>,
}

/// Barycentric embedding of one crossing-connected piece: the longest face
/// is pinned to a circle and every other node relaxes to the average of
/// its neighbors.
fn embed_piece(d: &Diagram, piece: &std::collections::BTreeSet<CrossingId>) -> PieceEmbedding {
    let mut crossing_index = BTreeMap::new();
    for &c in piece {
        let next = crossing_index.len();
        crossing_index.insert(c, next);
    }
    let mut arc_mids = BTreeMap::new();
    let mut n = crossing_index.len();
    let arcs: Vec<ArcId> = d
        .arcs
        .iter()
        .filter(|(_, a)| piece.contains(&a.from.0))
        .map(|(&id, _)| id)
        .collect();
    for &a in &arcs {
        arc_mids.insert(a, (n, n + 1));
        n += 2;
    }

    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &a in &arcs {
        let arc = &d.arcs[&a];
        let (m1, m2) = arc_mids[&a];
        let u = crossing_index[&arc.from.0];
        let v = crossing_index[&arc.to.0];
        for (s, t) in [(u, m1), (m1, m2), (m2, v)] {
            adj[s].push(t);
            adj[t].push(s);
        }
    }

    // Outer face: the longest boundary walk that stays inside this piece.
    let outer = d
        .faces()
        .into_iter()
        .filter(|f| {
            f.darts
                .first()
                .map(|dart| piece.contains(&d.arcs[&dart.arc].from.0))
                .unwrap_or(false)
        })
        .max_by_key(|f| f.len())
        .expect("piece has a face");
    let mut cycle = Vec::new();
    for dart in &outer.darts {
        let arc = &d.arcs[&dart.arc];
        let (m1, m2) = arc_mids[&dart.arc];
        if dart.forward {
            cycle.extend([crossing_index[&arc.from.0], m1, m2]);
        } else {
            cycle.extend([crossing_index[&arc.to.0], m2, m1]);
        }
    }

    let mut pos = vec![(0.0, 0.0); n];
    let mut pinned = vec![false; n];
    let r = 30.0 + 6.0 * (n as f64).sqrt();
    let count = cycle.len().max(3);
    for (k, &node) in cycle.iter().enumerate() {
        if pinned[node] {
            continue;
        }
        let th = std::f64::consts::TAU * k as f64 / count as f64;
        pos[node] = (r * th.cos(), r * th.sin());
        pinned[node] = true;
    }

    let rounds = 60 + 14 * (n as f64).sqrt() as usize;
    for _ in 0..rounds {
        for v in 0..n {
            if pinned[v] || adj[v].is_empty() {
                continue;
            }
            let (mut sx, mut sy) = (0.0, 0.0);
            for &u in &adj[v] {
                sx += pos[u].0;
                sy += pos[u].1;
            }
            let k = adj[v].len() as f64;
            pos[v] = (sx / k, sy / k);
        }
    }

    PieceEmbedding { pos, crossing_index, arc_mids }
}

fn draw_from_rotation(d: &Diagram, doc: &mut SvgDoc) -> Result<(), RenderError> {
    let total_nodes = d.crossings.len() + 2 * d.arcs.len();
    if total_nodes > 20_000 {
        return Err(RenderError::TooLarge { nodes: total_nodes });
    }
    let comp_order: Vec<ComponentId> = d.components.keys().copied().collect();
    let col_of = |c: ComponentId| {
        color(comp_order.iter().position(|&k| k == c).unwrap_or(0))
    };

    let mut x_shift = 0.0;
    for piece in d.crossing_pieces() {
        let emb = embed_piece(d, &piece);
        let (mut lo, mut hi) = ((f64::INFINITY, 0.0f64), (f64::NEG_INFINITY, 0.0f64));
        for &(x, _) in &emb.pos {
            lo.0 = lo.0.min(x);
            hi.0 = hi.0.max(x);
        }
        let shift = x_shift - lo.0;
        x_shift += hi.0 - lo.0 + 24.0;

        // Which arc ends dive under at their crossing.
        let mut under_end: BTreeMap<(ArcId, End), bool> = BTreeMap::new();
        for (&_cid, x) in d.crossings.iter().filter(|(c, _)| piece.contains(c)) {
            for s in 0..4u8 {
                let slot = &x.slots[s as usize];
                under_end.insert((slot.arc, slot.end), s % 2 != x.over_diag);
            }
        }

        for (&aid, (m1, m2)) in &emb.arc_mids {
            let arc = &d.arcs[&aid];
            let col = col_of(arc.component);
            let width = 0.8;
            let shifted = |i: usize| (emb.pos[i].0 + shift, emb.pos[i].1);
            let pu = shifted(emb.crossing_index[&arc.from.0]);
            let pv = shifted(emb.crossing_index[&arc.to.0]);
            let q1 = shifted(*m1);
            let q2 = shifted(*m2);
            let pull = |from: (f64, f64), to: (f64, f64), f: f64| {
                (from.0 + (to.0 - from.0) * f, from.1 + (to.1 - from.1) * f)
            };
            let start = if under_end[&(aid, End::Tail)] { pull(pu, q1, 0.35) } else { pu };
            let end = if under_end[&(aid, End::Head)] { pull(pv, q2, 0.35) } else { pv };
            doc.line(start, q1, &col, width);
            doc.line(q1, q2, &col, width);
            doc.line(q2, end, &col, width);
            doc.arrow(q1, (q2.0 - q1.0, q2.1 - q1.1), 1.6, &col);
        }
    }

    // Free circles go in a row of their own below everything drawn so far.
    let free = d.free_components();
    if !free.is_empty() {
        let y0 = if doc.min.1.is_finite() { doc.min.1 - 18.0 } else { 0.0 };
        for (k, c) in free.iter().enumerate() {
            let col = col_of(*c);
            let cx = 14.0 * k as f64;
            let _ = writeln!(
                doc.body,
                r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="none" stroke="{col}" stroke-width="0.8"/>"#,
                cx, -y0,
            );
            doc.see((cx - 6.0, y0 - 6.0));
            doc.see((cx + 6.0, y0 + 6.0));
            let label = match &d.components[c].role {
                Some(role) => format!("{c}:{role}"),
                None => format!("{c}"),
            };
            doc.text((cx - 4.0, y0 - 9.0), 3.2, &col, &label);
        }
    }
    Ok(())
}

/// Renders a diagram to a standalone SVG document.
pub fn render_svg(d: &Diagram) -> Result<String, RenderError> {
    let mut doc = SvgDoc::new();
    match &d.layout {
        Some(layout) => draw_from_layout(d, layout, &mut doc),
        None => draw_from_rotation(d, &mut doc)?,
    }
    Ok(doc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{assemble, PolyComponent};

    fn hopf() -> Diagram {
        let a = PolyComponent {
            points: vec![(0, 0), (6, 0), (6, 6), (0, 6)],
            levels: vec![5, 0, 0, 0],
            role: Some("a".into()),
        };
        let b = PolyComponent {
            points: vec![(3, -3), (9, -3), (9, 3), (3, 3)],
            levels: vec![9, 9, 9, -9],
            role: None,
        };
        assemble(vec![a, b]).unwrap()
    }

    #[test]
    fn layout_render_cuts_under_strands() {
        let d = hopf();
        let svg = render_svg(&d).unwrap();
        assert!(svg.starts_with("<svg"));
        // both components drawn, under strand split in two at each crossing:
        // 8 polyline segments plus one extra per cut
        assert_eq!(svg.matches("<line").count(), 8 + 2);
        assert!(svg.contains("0:a"));
    }

    #[test]
    fn rotation_render_used_when_layout_missing() {
        let mut d = hopf();
        d.layout = None;
        let svg = render_svg(&d).unwrap();
        assert!(svg.starts_with("<svg"));
        // three segments per arc
        assert_eq!(svg.matches("<line").count(), 3 * d.arcs.len());
    }

    #[test]
    fn free_circles_rendered_in_fallback_mode() {
        let mut d = assemble(vec![
            PolyComponent::rect(0, 0, 4, 4, 0, Some("solo".into())),
        ])
        .unwrap();
        d.layout = None;
        let svg = render_svg(&d).unwrap();
        assert!(svg.contains("<circle"));
        assert!(svg.contains("solo"));
    }

    #[test]
    fn interval_cutting() {
        assert_eq!(cut_intervals(0.0, 10.0, &[5.0], 1.0), vec![(0.0, 4.0), (6.0, 10.0)]);
        assert_eq!(cut_intervals(0.0, 10.0, &[0.5], 1.0), vec![(1.5, 10.0)]);
        assert_eq!(
            cut_intervals(0.0, 10.0, &[3.0, 4.0], 1.0),
            vec![(0.0, 2.0), (5.0, 10.0)]
        );
        assert!(cut_intervals(4.0, 6.0, &[5.0], 1.5).is_empty());
    }
}
