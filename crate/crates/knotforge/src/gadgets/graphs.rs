//! Vertex and edge unknots for a graph, and the rectangular chains that
//! crossing-reducing moves collapse them to.
//!
//! Each vertex becomes an axis-aligned box. Each edge becomes a loop that
//! grips the boxes of its two endpoints from below or above, passing under
//! each wall it meets in a pair of opposite-sign crossings, so no component
//! links any other. Edges are routed on the two pages of a book layout
//! around the spine of boxes. When no vertex order we try yields a two-page
//! routing, the leftover edges run straight through the intervening boxes
//! instead; they still pass under every wall, at the price of four extra
//! crossings per box they tunnel through.

use std::collections::BTreeMap;

use crate::diagram::{ComponentId, Diagram};
use crate::formulas::Graph;
use crate::geom::{assemble_with_ids, PolyComponent};

use super::GadgetError;

const BOX_LEVEL: i64 = 1000;
const BOX_MIN_WIDTH: i64 = 4;
const BOX_GAP: i64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Route {
    Below { rank: usize },
    Above { rank: usize },
    Through { band: usize },
}

fn interleaves(a: (usize, usize), b: (usize, usize)) -> bool {
    (a.0 < b.0 && b.0 < a.1 && a.1 < b.1) || (b.0 < a.0 && a.0 < b.1 && b.1 < a.1)
}

fn edge_spans(g: &Graph, pos: &[usize]) -> Vec<(usize, usize)> {
    g.edges
        .iter()
        .map(|&(u, v)| {
            let (a, b) = (pos[u], pos[v]);
            (a.min(b), a.max(b))
        })
        .collect()
}

/// Two-colors the interleaving-conflict graph of the edge spans, if it is
/// bipartite. `false` is the page below the spine.
fn two_page(spans: &[(usize, usize)]) -> Option<Vec<bool>> {
    let m = spans.len();
    let mut color: Vec<Option<bool>> = vec![None; m];
    for start in 0..m {
        if color[start].is_some() {
            continue;
        }
        color[start] = Some(false);
        let mut stack = vec![start];
        while let Some(e) = stack.pop() {
            let ce = color[e].unwrap();
            for f in 0..m {
                if !interleaves(spans[e], spans[f]) {
                    continue;
                }
                match color[f] {
                    None => {
                        color[f] = Some(!ce);
                        stack.push(f);
                    }
                    Some(cf) if cf == ce => return None,
                    _ => {}
                }
            }
        }
    }
    Some(color.into_iter().map(|c| c.unwrap()).collect())
}

fn positions_of(order: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; order.len()];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    pos
}

/// First vertex order, in lexicographic order, whose conflict graph is
/// bipartite. Only called for small n; the leaf count is n! but each check
/// is cheap and the first hit ends the walk.
fn exhaustive_spine(g: &Graph) -> Option<(Vec<usize>, Vec<bool>)> {
    fn rec(
        g: &Graph,
        order: &mut Vec<usize>,
        used: &mut [bool],
    ) -> Option<(Vec<usize>, Vec<bool>)> {
        if order.len() == g.n {
            let pos = positions_of(order);
            let pages = two_page(&edge_spans(g, &pos))?;
            return Some((pos, pages));
        }
        for v in 0..g.n {
            if used[v] {
                continue;
            }
            used[v] = true;
            order.push(v);
            if let Some(hit) = rec(g, order, used) {
                return Some(hit);
            }
            order.pop();
            used[v] = false;
        }
        None
    }
    rec(g, &mut Vec::with_capacity(g.n), &mut vec![false; g.n])
}

fn bfs_order(g: &Graph) -> Vec<usize> {
    let adj = g.adjacency();
    let mut order = Vec::with_capacity(g.n);
    let mut seen = vec![false; g.n];
    for start in 0..g.n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order
}

fn heuristic_spine(g: &Graph) -> Option<(Vec<usize>, Vec<bool>)> {
    let identity: Vec<usize> = (0..g.n).collect();
    let reversed: Vec<usize> = (0..g.n).rev().collect();
    for order in [identity, bfs_order(g), reversed] {
        let pos = positions_of(&order);
        if let Some(pages) = two_page(&edge_spans(g, &pos)) {
            return Some((pos, pages));
        }
    }
    None
}

/// Page per edge, `None` for edges that must tunnel through boxes. Processes
/// edges in input order so the outcome is reproducible.
fn greedy_pages(spans: &[(usize, usize)]) -> Vec<Option<bool>> {
    let mut pages: Vec<Option<bool>> = vec![None; spans.len()];
    for e in 0..spans.len() {
        'page: for page in [false, true] {
            for f in 0..e {
                if pages[f] == Some(page) && interleaves(spans[e], spans[f]) {
                    continue 'page;
                }
            }
            pages[e] = Some(page);
            break;
        }
    }
    pages
}

/// Nesting depth per edge on its page: the length of the longest chain of
/// strictly contained same-page spans beneath it. Containing spans must run
/// deeper than contained ones so their vertical drops clear the shallower
/// horizontal runs.
fn routes_from(spans: &[(usize, usize)], pages: &[Option<bool>]) -> Vec<Route> {
    let m = spans.len();
    let contains = |outer: (usize, usize), inner: (usize, usize)| {
        outer != inner && outer.0 <= inner.0 && inner.1 <= outer.1
    };
    let mut by_width: Vec<usize> = (0..m).filter(|&e| pages[e].is_some()).collect();
    by_width.sort_by_key(|&e| (spans[e].1 - spans[e].0, e));
    let mut rank = vec![0usize; m];
    for (i, &e) in by_width.iter().enumerate() {
        for &f in &by_width[..i] {
            if pages[f] == pages[e] && contains(spans[e], spans[f]) {
                rank[e] = rank[e].max(rank[f] + 1);
            }
        }
    }
    let mut band = 0;
    (0..m)
        .map(|e| match pages[e] {
            Some(false) => Route::Below { rank: rank[e] },
            Some(true) => Route::Above { rank: rank[e] },
            None => {
                band += 1;
                Route::Through { band: band - 1 }
            }
        })
        .collect()
}

fn plan_routes(g: &Graph) -> (Vec<usize>, Vec<Route>) {
    let found = if g.n <= 8 {
        exhaustive_spine(g)
    } else {
        heuristic_spine(g)
    };
    match found {
        Some((pos, pages)) => {
            let spans = edge_spans(g, &pos);
            let pages: Vec<Option<bool>> = pages.into_iter().map(Some).collect();
            let routes = routes_from(&spans, &pages);
            (pos, routes)
        }
        None => {
            let pos: Vec<usize> = (0..g.n).collect();
            let spans = edge_spans(g, &pos);
            let pages = greedy_pages(&spans);
            let routes = routes_from(&spans, &pages);
            (pos, routes)
        }
    }
}

struct BoxPlan {
    left: Vec<i64>,
    width: Vec<i64>,
    height: i64,
    /// Left column of each grip, keyed by (edge index, endpoint vertex).
    /// Page grips occupy two columns; a tunnel endpoint occupies one.
    grip: BTreeMap<(usize, usize), i64>,
}

fn layout_boxes(g: &Graph, pos: &[usize], routes: &[Route]) -> BoxPlan {
    let n = g.n;
    let tunnels = routes
        .iter()
        .filter(|r| matches!(r, Route::Through { .. }))
        .count() as i64;
    let height = 4 + 2 * tunnels;

    // Sort the grips of each box left to right. Farther destinations sit
    // farther from the gripped span on both sides, which keeps every
    // vertical drop clear of the horizontal runs of nearer edges.
    type GripRequest = ((u8, u8, i64), usize, i64);
    let mut requests: Vec<Vec<GripRequest>> = vec![Vec::new(); n];
    for (ei, &(u, v)) in g.edges.iter().enumerate() {
        for (me, other) in [(u, v), (v, u)] {
            let rightward = pos[other] > pos[me];
            let (key, cols) = match routes[ei] {
                Route::Below { .. } => ((0, rightward as u8, -(pos[other] as i64)), 2),
                Route::Above { .. } => ((1, rightward as u8, -(pos[other] as i64)), 2),
                Route::Through { band } => ((2, 0, band as i64), 1),
            };
            requests[me].push((key, ei, cols));
        }
    }

    let mut grip = BTreeMap::new();
    let mut rel_width = vec![BOX_MIN_WIDTH; n];
    for (v, reqs) in requests.iter_mut().enumerate() {
        reqs.sort_unstable();
        let mut col = 1;
        for &(_, ei, cols) in reqs.iter() {
            grip.insert((ei, v), col);
            col += cols;
        }
        rel_width[v] = (col + 1).max(BOX_MIN_WIDTH);
    }

    let mut left = vec![0; n];
    let mut cursor = 0;
    for k in 0..n {
        let v = pos.iter().position(|&p| p == k).unwrap();
        left[v] = cursor;
        cursor += rel_width[v] + BOX_GAP;
    }
    for (v, l) in left.iter().enumerate() {
        for (&(ei, gv), col) in grip.iter_mut() {
            let _ = ei;
            if gv == v {
                *col += l;
            }
        }
    }

    BoxPlan { left, width: rel_width, height, grip }
}

/// Draws one unknot per vertex and one per edge. An edge loop meets each
/// of its two endpoint boxes in exactly two crossings of opposite sign and
/// always passes under, so the linking matrix is zero and removing a grip
/// is a single crossing-reducing type II move. Whenever the spine search
/// finds a two-page routing the diagram has exactly 4m crossings; tunneled
/// edges add four crossings per intervening box, and those are the only
/// contacts between an edge and a vertex it is not incident to.
pub fn graph_to_vertex_edge_diagram(g: &Graph) -> Result<Diagram, GadgetError> {
    let (pos, routes) = plan_routes(g);
    let plan = layout_boxes(g, &pos, &routes);
    let h = plan.height;

    let mut comps: Vec<(ComponentId, PolyComponent)> = Vec::new();
    for v in 0..g.n {
        let (l, w) = (plan.left[v], plan.width[v]);
        comps.push((
            v as ComponentId,
            PolyComponent::rect(l, 0, l + w, h, BOX_LEVEL + v as i64, Some(format!("vertex_{}", v + 1))),
        ));
    }

    for (ei, &(u, v)) in g.edges.iter().enumerate() {
        let role = Some(format!("edge_{}_{}", u + 1, v + 1));
        let (a, b) = if pos[u] < pos[v] { (u, v) } else { (v, u) };
        let pa = plan.grip[&(ei, a)];
        let pb = plan.grip[&(ei, b)];
        let comp = match routes[ei] {
            Route::Below { rank } => {
                let d = 6 + 2 * rank as i64;
                let pts = vec![
                    (pa + 1, 1),
                    (pa + 1, -d),
                    (pb, -d),
                    (pb, 1),
                    (pb + 1, 1),
                    (pb + 1, -d - 1),
                    (pa, -d - 1),
                    (pa, 1),
                ];
                PolyComponent::new(pts, vec![0; 8], role)
            }
            Route::Above { rank } => {
                let t = h + 2 + 2 * rank as i64;
                let pts = vec![
                    (pa, h - 1),
                    (pa, t),
                    (pb + 1, t),
                    (pb + 1, h - 1),
                    (pb, h - 1),
                    (pb, t - 1),
                    (pa + 1, t - 1),
                    (pa + 1, h - 1),
                ];
                PolyComponent::new(pts, vec![0; 8], role)
            }
            Route::Through { band } => {
                let y = 2 + 2 * band as i64;
                PolyComponent::rect(pa, y, pb, y + 1, 0, role)
            }
        };
        comps.push(((g.n + ei) as ComponentId, comp));
    }

    Ok(assemble_with_ids(comps)?)
}

/// A row of `n_chain` overlapping rectangles, consecutive ones meeting in
/// two crossings of opposite sign, with the circles at even positions over
/// and those at odd positions under, plus `n_free` circles touching nothing.
/// Everything is unlinked and every overlap is undone by one type II move.
pub fn chain_diagram(n_chain: usize, n_free: usize) -> Result<Diagram, GadgetError> {
    assert!(n_chain >= 1, "a chain needs at least one circle");
    let mut comps: Vec<(ComponentId, PolyComponent)> = Vec::new();
    for j in 0..n_chain {
        let x = 6 * j as i64;
        let role = Some(format!("chain_{}", j + 1));
        let rect = if j % 2 == 0 {
            PolyComponent::rect(x, 0, x + 8, 6, BOX_LEVEL + j as i64, role)
        } else {
            // Clockwise, matching the travel direction of edge loops so a
            // collapsed vertex-edge diagram is this chain on the nose.
            let pts = vec![(x, 5), (x + 8, 5), (x + 8, 1), (x, 1)];
            PolyComponent::new(pts, vec![j as i64; 4], role)
        };
        comps.push((j as ComponentId, rect));
    }
    for k in 0..n_free {
        let x = 6 * n_chain as i64 + 6 + 6 * k as i64;
        comps.push((
            (n_chain + k) as ComponentId,
            PolyComponent::rect(x, 0, x + 4, 4, 0, Some(format!("free_{}", k + 1))),
        ));
    }
    Ok(assemble_with_ids(comps)?)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;

    fn path(k: usize) -> Graph {
        let edges: Vec<_> = (0..k - 1).map(|i| (i, i + 1)).collect();
        Graph::new(k, &edges).unwrap()
    }

    fn complete(k: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..k {
            for v in u + 1..k {
                edges.push((u, v));
            }
        }
        Graph::new(k, &edges).unwrap()
    }

    fn contact_pairs(d: &Diagram) -> BTreeSet<(ComponentId, ComponentId)> {
        d.over_map()
            .keys()
            .map(|&c| {
                let (a, b) = (d.over_component(c), d.under_component(c));
                (a.min(b), a.max(b))
            })
            .collect()
    }

    #[test]
    fn a_path_graph_draws_as_the_matching_chain() {
        for k in 2..=4 {
            let d1 = graph_to_vertex_edge_diagram(&path(k)).unwrap();
            assert!(d1.validate().all_passed());
            assert_eq!(d1.stats().crossing_count, 4 * (k - 1));
            assert!(d1.linking_matrix().is_zero());

            let d2 = chain_diagram(2 * k - 1, 0).unwrap();
            assert!(d2.validate().all_passed());
            assert_eq!(
                d1.canonical_sha256(),
                d2.canonical_sha256(),
                "path on {k} vertices against the {}-chain",
                2 * k - 1
            );
        }
    }

    #[test]
    fn star_and_isolated_vertices_count_right() {
        let star = Graph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let d = graph_to_vertex_edge_diagram(&star).unwrap();
        assert!(d.validate().all_passed());
        assert_eq!(d.stats().component_count, 7);
        assert_eq!(d.stats().crossing_count, 12);
        assert!(d.linking_matrix().is_zero());
        let expected: BTreeSet<_> = [(0, 4), (1, 4), (0, 5), (2, 5), (0, 6), (3, 6)].into();
        assert_eq!(contact_pairs(&d), expected);

        let lonely = Graph::new(3, &[(0, 1)]).unwrap();
        let d = graph_to_vertex_edge_diagram(&lonely).unwrap();
        assert_eq!(d.stats().component_count, 4);
        assert_eq!(d.stats().crossing_count, 4);
        assert_eq!(d.stats().free_circles, 1);
    }

    #[test]
    fn chains_count_crossings_and_link_nothing() {
        for (c, f) in [(1, 0), (2, 0), (4, 2), (6, 3)] {
            let d = chain_diagram(c, f).unwrap();
            assert!(d.validate().all_passed(), "chain {c}+{f}");
            assert_eq!(d.stats().component_count, c + f);
            assert_eq!(d.stats().crossing_count, 2 * (c - 1));
            let expected_free = f + usize::from(c == 1);
            assert_eq!(d.stats().free_circles, expected_free);
            assert!(d.linking_matrix().is_zero());

            let expected: BTreeSet<_> = (0..c.saturating_sub(1))
                .map(|j| (j as ComponentId, j as ComponentId + 1))
                .collect();
            assert_eq!(contact_pairs(&d), expected);
        }
    }

    #[test]
    fn interleaving_edges_split_across_pages() {
        let g = Graph::new(
            6,
            &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (1, 3), (2, 4)],
        )
        .unwrap();
        let d = graph_to_vertex_edge_diagram(&g).unwrap();
        assert!(d.validate().all_passed());
        assert_eq!(d.stats().crossing_count, 4 * 7);
        assert!(d.linking_matrix().is_zero());
        for (a, b) in contact_pairs(&d) {
            assert!((a as usize) < g.n, "contact {a}-{b} is not vertex-to-edge");
            assert!((b as usize) >= g.n, "contact {a}-{b} is not vertex-to-edge");
        }
    }

    #[test]
    fn a_dense_graph_tunnels_its_spare_edge_through_a_box() {
        // No vertex order lays K5 out on two pages, so exactly one edge
        // must tunnel, paying four wall crossings at the box it passes.
        let g = complete(5);
        let d = graph_to_vertex_edge_diagram(&g).unwrap();
        assert!(d.validate().all_passed());
        assert_eq!(d.stats().crossing_count, 4 * 10 + 4);
        assert!(d.linking_matrix().is_zero());
        for (a, b) in contact_pairs(&d) {
            assert!((a as usize) < g.n && (b as usize) >= g.n, "every contact pairs a vertex with an edge");
        }
    }
}
