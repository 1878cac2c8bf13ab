//! Satellite operations on drawn diagrams.
//!
//! Both operations here rebuild the diagram from its stored polylines, so
//! they require a layout and they return one. Coordinates are stretched
//! first, which keeps every pre-existing strand far enough away that the
//! parallel copies and the small tangles never collide with anything: a
//! tangle site is chosen on a straight stretch with a verified clear
//! bounding box.
//!
//! `double_components` replaces chosen circles by their blackboard-framed
//! Whitehead doubles: two parallel copies of the circle run anti-parallel
//! (so every crossing with another strand doubles and contributes zero to
//! linking numbers) and trade ends through a two-crossing positive clasp.
//!
//! `cable_longitude` replaces a circle by `p` parallel same-direction
//! copies closed up into a single curve by a cyclic one-step twist with
//! `p - 1` positive self-crossings, multiplying its linking numbers by `p`.

use crate::diagram::{ComponentId, Diagram};
use crate::geom::{
    assemble_with_ids, left_normal, offset_polyline, scale_paths, segment_dir, Point,
    PolyComponent,
};

use super::GadgetError;

/// Stretch factor applied before doubling.
pub const DOUBLE_SCALE: i64 = 8;

/// Local frame of a tangle site: `q` is the site origin on the segment,
/// `u` the direction of travel, `n` its left normal.
struct Frame {
    q: Point,
    u: (i64, i64),
    n: (i64, i64),
}

impl Frame {
    fn at(path: &PolyComponent, seg: usize, offset: i64) -> Frame {
        let a = path.points[seg];
        let u = segment_dir(&path.points, seg);
        Frame { q: (a.0 + u.0 * offset, a.1 + u.1 * offset), u, n: left_normal(u) }
    }

    fn map(&self, x: i64, y: i64) -> Point {
        (
            self.q.0 + self.u.0 * x + self.n.0 * y,
            self.q.1 + self.u.1 * x + self.n.1 * y,
        )
    }
}

/// What a tangle needs from its site: `span` along the segment, the local
/// y extent it occupies, and how far from the segment corners it must stay
/// (which also covers the mitered corner fans of parallel copies).
struct SiteSpec {
    span: i64,
    y_min: i64,
    y_max: i64,
    margin: i64,
}

type Rect = (i64, i64, i64, i64);

fn norm_rect(a: Point, b: Point) -> Rect {
    (a.0.min(b.0), a.1.min(b.1), a.0.max(b.0), a.1.max(b.1))
}

fn rects_meet(a: &Rect, b: &Rect) -> bool {
    a.0 <= b.2 && b.0 <= a.2 && a.1 <= b.3 && b.1 <= a.3
}

/// Clearance box of a prospective site, padded by two units so that the
/// parallel copies of nearby strands (one unit off their centerlines)
/// still clear it.
fn site_box(path: &PolyComponent, seg: usize, offset: i64, spec: &SiteSpec) -> Rect {
    let f = Frame::at(path, seg, offset);
    norm_rect(
        f.map(-2, spec.y_min - 2),
        f.map(spec.span + 2, spec.y_max + 2),
    )
}

/// First clear stretch on the target path, scanning segments in order and
/// offsets west to east. Deterministic.
fn find_site(
    paths: &[(ComponentId, PolyComponent)],
    target: usize,
    spec: &SiteSpec,
    claimed: &[Rect],
) -> Option<(usize, i64)> {
    let path = &paths[target].1;
    let n = path.points.len();
    for seg in 0..n {
        let a = path.points[seg];
        let b = path.points[(seg + 1) % n];
        let len = (b.0 - a.0).abs() + (b.1 - a.1).abs();
        let hi = len - spec.span - spec.margin;
        let mut offset = spec.margin;
        'offsets: while offset <= hi {
            let boxr = site_box(path, seg, offset, spec);
            for r in claimed {
                if rects_meet(r, &boxr) {
                    offset += 1;
                    continue 'offsets;
                }
            }
            for (ci, (_, c)) in paths.iter().enumerate() {
                let m = c.points.len();
                for si in 0..m {
                    if ci == target && si == seg {
                        continue;
                    }
                    let r = norm_rect(c.points[si], c.points[(si + 1) % m]);
                    if rects_meet(&r, &boxr) {
                        offset += 1;
                        continue 'offsets;
                    }
                }
            }
            return Some((seg, offset));
        }
    }
    None
}

/// The Whitehead-doubled polyline: outer copy forward, inner copy
/// reversed, joined by a west turn-back hook and an east hook that clasps
/// through it with two positive crossings.
fn double_path(path: &PolyComponent, seg: usize, offset: i64) -> PolyComponent {
    let n = path.points.len();
    let f = Frame::at(path, seg, offset);
    let out = offset_polyline(&path.points, 1);
    let inn = offset_polyline(&path.points, -1);
    let lv = |i: usize| path.levels[i % n];
    let site_lv = path.levels[seg];

    let mut pts: Vec<Point> = Vec::with_capacity(2 * n + 12);
    let mut lvs: Vec<i64> = Vec::with_capacity(2 * n + 12);
    let push = |pts: &mut Vec<Point>, lvs: &mut Vec<i64>, p: Point, l: i64| {
        pts.push(p);
        lvs.push(l);
    };

    // West hook: the outer copy arrives heading east and turns back into
    // the reversed inner copy.
    push(&mut pts, &mut lvs, f.map(0, 1), site_lv);
    push(&mut pts, &mut lvs, f.map(5, 1), site_lv + 1);
    push(&mut pts, &mut lvs, f.map(5, -3), site_lv);
    push(&mut pts, &mut lvs, f.map(2, -3), site_lv);
    push(&mut pts, &mut lvs, f.map(2, -1), site_lv);
    push(&mut pts, &mut lvs, f.map(0, -1), site_lv);
    // Inner copy, reversed, all the way around: from the corner west of
    // the site back to the corner east of it.
    for k in 0..n {
        let idx = (seg + n - k) % n;
        push(&mut pts, &mut lvs, inn[idx], lv(idx + n - 1));
    }
    // East hook: up through the west hook (over its top run, under its
    // descending strand), then on east as the outer copy.
    push(&mut pts, &mut lvs, f.map(9, -1), site_lv);
    push(&mut pts, &mut lvs, f.map(3, -1), site_lv + 1);
    push(&mut pts, &mut lvs, f.map(3, 2), site_lv);
    push(&mut pts, &mut lvs, f.map(8, 2), site_lv);
    push(&mut pts, &mut lvs, f.map(8, 1), site_lv);
    push(&mut pts, &mut lvs, f.map(9, 1), site_lv);
    // Outer copy, forward, all the way around.
    for k in 1..=n {
        let idx = (seg + k) % n;
        push(&mut pts, &mut lvs, out[idx], lv(idx));
    }

    PolyComponent::new(pts, lvs, path.role.clone())
}

const CLASP_SPEC: SiteSpec = SiteSpec { span: 9, y_min: -3, y_max: 2, margin: 4 };

fn layout_paths(d: &Diagram) -> Result<Vec<(ComponentId, PolyComponent)>, GadgetError> {
    let layout = d.layout.as_ref().ok_or(GadgetError::NoLayout)?;
    Ok(layout.paths.iter().map(|(&c, p)| (c, p.clone())).collect())
}

/// Replaces each listed component by its Whitehead double, in one shared
/// stretched coordinate system. Component ids and roles survive.
pub fn double_components(
    d: &Diagram,
    targets: &[ComponentId],
) -> Result<Diagram, GadgetError> {
    let mut paths = layout_paths(d)?;
    scale_paths(&mut paths, DOUBLE_SCALE);
    let mut claimed: Vec<Rect> = Vec::new();
    for &c in targets {
        let idx = paths
            .iter()
            .position(|(id, _)| *id == c)
            .ok_or(GadgetError::UnknownComponent(c))?;
        let (seg, offset) =
            find_site(&paths, idx, &CLASP_SPEC, &claimed).ok_or(GadgetError::NoSite(c))?;
        claimed.push(site_box(&paths[idx].1, seg, offset, &CLASP_SPEC));
        paths[idx].1 = double_path(&paths[idx].1, seg, offset);
    }
    Ok(assemble_with_ids(paths)?)
}

pub fn whitehead_double_component(
    d: &Diagram,
    c: ComponentId,
) -> Result<Diagram, GadgetError> {
    double_components(d, &[c])
}

/// The cabled polyline: `p` parallel copies, one step of cyclic rotation
/// at a twist box where the top copy dives under the rest.
fn cable_path(path: &PolyComponent, seg: usize, offset: i64, p: usize) -> PolyComponent {
    let n = path.points.len();
    let f = Frame::at(path, seg, offset);
    let pp = p as i64;
    let line = |k: usize| pp - 1 - 2 * k as i64;
    let copies: Vec<Vec<Point>> =
        (0..p).map(|k| offset_polyline(&path.points, line(k))).collect();
    let lv = |i: usize| path.levels[i % n];
    let site_lv = path.levels[seg];

    let mut pts: Vec<Point> = Vec::with_capacity(p * (n + 2) + 4);
    let mut lvs: Vec<i64> = Vec::with_capacity(p * (n + 2) + 4);
    let push = |pts: &mut Vec<Point>, lvs: &mut Vec<i64>, pt: Point, l: i64| {
        pts.push(pt);
        lvs.push(l);
    };

    // The top copy arrives on its line heading east and dives under every
    // other line, coming back up on the bottom line east of all the jogs.
    push(&mut pts, &mut lvs, f.map(1, line(0)), site_lv - 1);
    push(&mut pts, &mut lvs, f.map(1, -pp - 1), site_lv);
    push(&mut pts, &mut lvs, f.map(2 * pp, -pp - 1), site_lv);
    push(&mut pts, &mut lvs, f.map(2 * pp, line(p - 1)), site_lv);
    // Ride each copy around; each one returns one line lower than the one
    // above it left from and jogs up to take its place.
    for j in (1..p).rev() {
        for k in 1..=n {
            let idx = (seg + k) % n;
            push(&mut pts, &mut lvs, copies[j][idx], lv(idx));
        }
        push(&mut pts, &mut lvs, f.map(2 * j as i64, line(j)), site_lv);
        push(&mut pts, &mut lvs, f.map(2 * j as i64, line(j - 1)), site_lv);
    }
    for k in 1..=n {
        let idx = (seg + k) % n;
        push(&mut pts, &mut lvs, copies[0][idx], lv(idx));
    }

    PolyComponent::new(pts, lvs, path.role.clone())
}

/// Replaces `c` by the closed-up union of `p` parallel longitudes. The
/// companion must be free of self-crossings, so the cable's only
/// self-crossings are the `p - 1` in its twist box; every linking number
/// with another component is multiplied by `p`.
pub fn cable_longitude(
    d: &Diagram,
    c: ComponentId,
    p: usize,
) -> Result<Diagram, GadgetError> {
    assert!(p >= 1);
    if !d.components.contains_key(&c) {
        return Err(GadgetError::UnknownComponent(c));
    }
    if d.stats().per_component[&c].self_crossings != 0 {
        return Err(GadgetError::SelfCrossings(c));
    }
    if p == 1 {
        return Ok(d.clone());
    }
    let mut paths = layout_paths(d)?;
    scale_paths(&mut paths, 2 * (p as i64 + 1));
    let idx = paths.iter().position(|(id, _)| *id == c).unwrap();
    let spec = SiteSpec {
        span: 2 * p as i64 + 1,
        y_min: -(p as i64) - 1,
        y_max: p as i64 - 1,
        margin: p as i64 + 2,
    };
    let (seg, offset) =
        find_site(&paths, idx, &spec, &[]).ok_or(GadgetError::NoSite(c))?;
    paths[idx].1 = cable_path(&paths[idx].1, seg, offset, p);
    Ok(assemble_with_ids(paths)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::assemble;
    use crate::moves::{certify_unlink, verify_unlink_certificate, CertifyParams};

    fn free_circle() -> Diagram {
        assemble(vec![PolyComponent::rect(0, 0, 6, 6, 0, Some("ring".into()))]).unwrap()
    }

    fn hopf() -> Diagram {
        let a = PolyComponent::new(
            vec![(0, 0), (6, 0), (6, 6), (0, 6)],
            vec![5, 0, 0, 0],
            None,
        );
        let b = PolyComponent::new(
            vec![(3, -3), (9, -3), (9, 3), (3, 3)],
            vec![9, 9, 9, -9],
            None,
        );
        assemble(vec![a, b]).unwrap()
    }

    #[test]
    fn doubling_a_free_circle_makes_a_positive_clasp() {
        let d = whitehead_double_component(&free_circle(), 0).unwrap();
        assert_eq!(d.components.len(), 1);
        assert_eq!(d.crossings.len(), 2);
        for x in d.crossings.values() {
            assert_eq!(x.sign(), 1, "clasp crossings are positive");
        }
        let stats = d.stats();
        assert_eq!(stats.writhe, 2);
        assert_eq!(d.components[&0].role.as_deref(), Some("ring"));
        assert!(d.layout.is_some());
    }

    #[test]
    fn clasped_hairpin_untangles() {
        // The double of an unknot is an unknot, but its two clasp crossings
        // admit no decreasing move; the certifier has to climb first. This
        // is the smallest honest workout for the search.
        let d = whitehead_double_component(&free_circle(), 0).unwrap();
        let seq = certify_unlink(&d, &CertifyParams::default())
            .unwrap()
            .expect("the clasped hairpin must certify as an unknot");
        assert!(verify_unlink_certificate(&d, &seq).unwrap());
    }

    #[test]
    fn double_of_a_hopf_component_has_zero_linking() {
        let d = whitehead_double_component(&hopf(), 0).unwrap();
        assert_eq!(d.components.len(), 2);
        // Both former crossings double, and the clasp adds two.
        assert_eq!(d.crossings.len(), 6);
        let stats = d.stats();
        assert_eq!(stats.per_component[&0].self_crossings, 2);
        assert_eq!(
            d.linking_matrix().get(0, 1),
            0,
            "anti-parallel copies cancel the winding"
        );
    }

    #[test]
    fn doubling_both_hopf_components() {
        let d = double_components(&hopf(), &[0, 1]).unwrap();
        assert_eq!(d.crossings.len(), 2 * 4 + 2 + 2);
        let stats = d.stats();
        assert_eq!(stats.per_component[&0].self_crossings, 2);
        assert_eq!(stats.per_component[&1].self_crossings, 2);
        assert_eq!(d.linking_matrix().get(0, 1), 0);
    }

    #[test]
    fn threading_a_doubled_band_links_once() {
        let d = whitehead_double_component(&free_circle(), 0).unwrap();
        let mut paths: Vec<(u32, PolyComponent)> =
            d.layout.as_ref().unwrap().paths.clone().into_iter().collect();
        // The doubled rectangle's west side runs south at x = 0, so its
        // copies sit at x = -1 and x = 1. Thread a ring between them.
        paths.push((1, crate::gadgets::rows::threading_ring(24, 100, -20, 100, &[2], None)));
        let t = assemble_with_ids(paths).unwrap();
        assert_eq!(t.crossings.len(), 2 + 4);
        assert_eq!(t.linking_matrix().get(0, 1).abs(), 1);
    }

    #[test]
    fn cabling_a_free_circle_leaves_only_the_twist() {
        let d = cable_longitude(&free_circle(), 0, 3).unwrap();
        assert_eq!(d.components.len(), 1);
        assert_eq!(d.crossings.len(), 2);
        let stats = d.stats();
        assert_eq!(stats.writhe, 2, "twist crossings are positive");
        assert_eq!(d.components[&0].role.as_deref(), Some("ring"));
    }

    #[test]
    fn cabling_scales_linking_numbers() {
        let base = hopf();
        let lk0 = base.linking_matrix().get(0, 1);
        for p in 2..=4usize {
            let d = cable_longitude(&base, 0, p).unwrap();
            assert_eq!(d.crossings.len(), 2 * p + (p - 1));
            assert_eq!(d.linking_matrix().get(0, 1), lk0 * p as i64, "p = {p}");
            assert_eq!(d.stats().per_component[&0].self_crossings, p - 1);
        }
    }

    #[test]
    fn cable_of_one_is_the_identity() {
        let base = hopf();
        let d = cable_longitude(&base, 1, 1).unwrap();
        assert_eq!(d.canonical_sha256(), base.canonical_sha256());
    }

    #[test]
    fn cabling_rejects_kinked_companions() {
        let kinked = assemble(vec![PolyComponent::new(
            vec![(0, 0), (4, 0), (4, 4), (2, 4), (2, -2), (0, -2)],
            vec![0, 0, 0, 1, 0, 0],
            None,
        )])
        .unwrap();
        assert_eq!(kinked.crossings.len(), 1);
        match cable_longitude(&kinked, 0, 2) {
            Err(GadgetError::SelfCrossings(0)) => {}
            other => panic!("expected a self-crossing rejection, got {other:?}"),
        }
    }

    #[test]
    fn doubling_leaves_bystanders_alone() {
        let a = PolyComponent::new(
            vec![(0, 0), (6, 0), (6, 6), (0, 6)],
            vec![5, 0, 0, 0],
            Some("a".into()),
        );
        let b = PolyComponent::new(
            vec![(3, -3), (9, -3), (9, 3), (3, 3)],
            vec![9, 9, 9, -9],
            Some("b".into()),
        );
        let free = PolyComponent::rect(20, 0, 26, 6, 0, Some("spare".into()));
        let base = assemble(vec![a, b, free]).unwrap();
        let d = double_components(&base, &[1]).unwrap();
        assert_eq!(d.components[&0].role.as_deref(), Some("a"));
        assert_eq!(d.components[&2].role.as_deref(), Some("spare"));
        let stats = d.stats();
        assert_eq!(stats.per_component[&2].passes, 0);
        assert_eq!(stats.per_component[&1].self_crossings, 2);
        assert_eq!(stats.per_component[&0].self_crossings, 0);
        assert_eq!(d.crossings.len(), 6);
        assert_eq!(d.linking_matrix().get(0, 1), 0);
    }
}
