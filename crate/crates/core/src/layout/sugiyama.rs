//! Layered placement of one container's children.
//!
//! Phases: back edges found by DFS are set aside, layers are assigned by
//! longest path, long edges get dummy nodes, barycenter sweeps reduce
//! crossings, and columns are placed left to right with each column centred
//! vertically. Edges crossing the container border enter through virtual
//! nodes pinned to the left border and leave through ones on the right.

use crate::error::LayoutError;

use super::{LayoutParams, Point};

const SWEEPS: usize = 4;

/// Minimum horizontal spacing between parallel channels in a gap.
const CHANNEL_STEP: f64 = 4.0;

/// Vertical distance between back-edge lanes.
const LANE_STEP: f64 = 6.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SubNode {
    pub id: String,
    pub width: f64,
    pub height: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SubEnd {
    /// A child, with the attachment height measured from its top.
    Node { index: usize, anchor_y: f64 },
    /// The container border: left for sources, right for targets.
    Boundary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubEdge {
    pub src: SubEnd,
    pub dst: SubEnd,
}

/// One container's children and local edges.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Subgraph {
    pub nodes: Vec<SubNode>,
    pub edges: Vec<SubEdge>,
    /// Extra space above the content for the container label.
    pub header: f64,
}

/// Initial ordering hints for a relayout.
#[derive(Clone, Debug, Default)]
pub struct Seed {
    /// Sort key per child; unseeded children go after seeded ones.
    pub rank: Vec<Option<f64>>,
    /// Keep seeded children in seed order within each layer.
    pub keep_order: bool,
    /// A complete previous ordering to reuse as is.
    pub order: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubLayout {
    pub width: f64,
    pub height: f64,
    /// Top-left corner per child, container frame.
    pub positions: Vec<Point>,
    /// Orthogonal polyline per edge, container frame.
    pub routes: Vec<Vec<Point>>,
    /// Where each edge crosses the border (source side, target side).
    pub border_y: Vec<(Option<f64>, Option<f64>)>,
    pub layer: Vec<usize>,
    /// Final order per layer over internal node indices (children, then
    /// border nodes, then dummies).
    pub order: Vec<Vec<usize>>,
    /// Dummy nodes inserted per edge (0 for back edges).
    pub dummies: Vec<usize>,
    /// Layers spanned per edge (0 for back edges).
    pub spans: Vec<usize>,
    pub reversed: Vec<bool>,
    pub crossings: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Child,
    In,
    Out,
    Dummy,
}

struct Work {
    kind: Vec<Kind>,
    size: Vec<(f64, f64)>,
    layer: Vec<usize>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    /// Node sequence per edge, source to target (forward edges only).
    chain: Vec<Vec<usize>>,
}

/// Marks back edges with an iterative DFS over children in index order.
fn back_edges(n: usize, edges: &[(usize, usize)]) -> Vec<bool> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (i, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, i));
    }
    let mut state = vec![0u8; n]; // 0 new, 1 on stack, 2 done
    let mut back = vec![false; edges.len()];
    for root in 0..n {
        if state[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state[root] = 1;
        while let Some(&mut (v, ref mut pos)) = stack.last_mut() {
            if *pos < adj[v].len() {
                let (w, e) = adj[v][*pos];
                *pos += 1;
                match state[w] {
                    0 => {
                        state[w] = 1;
                        stack.push((w, 0));
                    }
                    1 => back[e] = true,
                    _ => {}
                }
            } else {
                state[v] = 2;
                stack.pop();
            }
        }
    }
    back
}

/// Crossings between two adjacent layers, counted with a Fenwick tree.
pub(crate) fn count_crossings(upper: &[usize], lower: &[usize], edges: &[(usize, usize)], pos: &[usize]) -> usize {
    if upper.is_empty() || lower.is_empty() {
        return 0;
    }
    let mut pairs: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (pos[a], pos[b])).collect();
    pairs.sort_unstable();
    let size = lower.len();
    let mut tree = vec![0usize; size + 1];
    let mut total = 0;
    for (seen, &(_, q)) in pairs.iter().enumerate() {
        // entries already inserted with a larger lower position cross this one
        let mut i = q + 1;
        let mut le = 0;
        while i > 0 {
            le += tree[i];
            i -= i & i.wrapping_neg();
        }
        total += seen - le;
        let mut i = q + 1;
        while i <= size {
            tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }
    total
}

fn total_crossings(order: &[Vec<usize>], w: &Work) -> usize {
    let mut pos = vec![0; w.kind.len()];
    for layer in order {
        for (i, &v) in layer.iter().enumerate() {
            pos[v] = i;
        }
    }
    (0..order.len().saturating_sub(1))
        .map(|l| {
            let edges: Vec<(usize, usize)> = order[l]
                .iter()
                .flat_map(|&a| w.succ[a].iter().map(move |&b| (a, b)))
                .collect();
            count_crossings(&order[l], &order[l + 1], &edges, &pos)
        })
        .sum()
}

fn sweep(order: &mut [Vec<usize>], w: &Work, down: bool) {
    let mut pos = vec![0.0f64; w.kind.len()];
    for layer in order.iter() {
        for (i, &v) in layer.iter().enumerate() {
            pos[v] = i as f64;
        }
    }
    let layers: Vec<usize> = if down {
        (1..order.len()).collect()
    } else {
        (0..order.len().saturating_sub(1)).rev().collect()
    };
    for l in layers {
        let mut keyed: Vec<(f64, usize)> = order[l]
            .iter()
            .map(|&v| {
                let nbrs = if down { &w.pred[v] } else { &w.succ[v] };
                let key = if nbrs.is_empty() {
                    pos[v]
                } else {
                    nbrs.iter().map(|&u| pos[u]).sum::<f64>() / nbrs.len() as f64
                };
                (key, v)
            })
            .collect();
        // stable: equal keys keep their current order
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
        order[l] = keyed.into_iter().map(|(_, v)| v).collect();
        for (i, &v) in order[l].iter().enumerate() {
            pos[v] = i as f64;
        }
    }
}

/// Lays out one container. `params.break_cycles = false` turns cycles into
/// an error instead of routing back edges around the content.
pub fn layout_subgraph(sub: &Subgraph, params: &LayoutParams, seed: Option<&Seed>) -> Result<SubLayout, LayoutError> {
    params.validate()?;
    let n = sub.nodes.len();
    let mut kind: Vec<Kind> = vec![Kind::Child; n];
    let mut size: Vec<(f64, f64)> = sub.nodes.iter().map(|s| (s.width, s.height)).collect();
    // Endpoints per edge in internal indices; border ends get their own node.
    let mut ends = Vec::with_capacity(sub.edges.len());
    for e in &sub.edges {
        let a = match e.src {
            SubEnd::Node { index, .. } => index,
            SubEnd::Boundary => {
                kind.push(Kind::In);
                size.push((0.0, 0.0));
                kind.len() - 1
            }
        };
        let b = match e.dst {
            SubEnd::Node { index, .. } => index,
            SubEnd::Boundary => {
                kind.push(Kind::Out);
                size.push((0.0, 0.0));
                kind.len() - 1
            }
        };
        ends.push((a, b));
    }
    let base = kind.len();
    let reversed = back_edges(base, &ends);
    if !params.break_cycles && reversed.iter().any(|&r| r) {
        return Err(LayoutError::CycleWithoutFeedbackSet(format!("{} children", n)));
    }

    // Longest-path layering over forward edges.
    let mut indeg = vec![0usize; base];
    let mut fwd: Vec<Vec<usize>> = vec![Vec::new(); base];
    for (i, &(a, b)) in ends.iter().enumerate() {
        if !reversed[i] {
            fwd[a].push(b);
            indeg[b] += 1;
        }
    }
    let has_in = kind.contains(&Kind::In);
    let has_out = kind.contains(&Kind::Out);
    let first = usize::from(has_in);
    let mut layer = vec![0usize; base];
    for v in 0..base {
        if kind[v] == Kind::Child {
            layer[v] = first;
        }
    }
    let mut queue: Vec<usize> = (0..base).filter(|&v| indeg[v] == 0).collect();
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        for &w in &fwd[v] {
            layer[w] = layer[w].max(layer[v] + 1);
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push(w);
            }
        }
    }
    let max_child = (0..n).map(|v| layer[v]).max().unwrap_or(first);
    let last = if has_out { max_child.max(first) + 1 } else { max_child.max(first) };
    for v in 0..base {
        match kind[v] {
            Kind::In => layer[v] = 0,
            Kind::Out => layer[v] = last,
            _ => {}
        }
    }

    // Dummies along forward edges.
    let mut w = Work {
        kind,
        size,
        layer,
        succ: vec![Vec::new(); base],
        pred: vec![Vec::new(); base],
        chain: Vec::with_capacity(ends.len()),
    };
    let mut dummies = Vec::with_capacity(ends.len());
    let mut spans = Vec::with_capacity(ends.len());
    for (i, &(a, b)) in ends.iter().enumerate() {
        if reversed[i] {
            w.chain.push(vec![a, b]);
            dummies.push(0);
            spans.push(0);
            continue;
        }
        let span = w.layer[b] - w.layer[a];
        let mut chain = vec![a];
        for l in w.layer[a] + 1..w.layer[b] {
            w.kind.push(Kind::Dummy);
            w.size.push((0.0, 0.0));
            w.layer.push(l);
            w.succ.push(Vec::new());
            w.pred.push(Vec::new());
            chain.push(w.kind.len() - 1);
        }
        chain.push(b);
        for pair in chain.windows(2) {
            w.succ[pair[0]].push(pair[1]);
            w.pred[pair[1]].push(pair[0]);
        }
        dummies.push(chain.len() - 2);
        spans.push(span);
        w.chain.push(chain);
    }
    let total = w.kind.len();
    let layers = last + 1;

    // Ordering.
    let reuse = seed
        .and_then(|s| s.order.as_ref())
        .filter(|o| o.len() == layers && o.iter().map(Vec::len).sum::<usize>() == total);
    let order = match reuse {
        Some(o) => o.clone(),
        None => {
            let mut order: Vec<Vec<usize>> = vec![Vec::new(); layers];
            let mut idx: Vec<usize> = (0..total).collect();
            if let Some(s) = seed {
                let key = |v: usize| {
                    if v < n {
                        s.rank.get(v).copied().flatten()
                    } else {
                        None
                    }
                };
                idx.sort_by(|&a, &b| match (key(a), key(b)) {
                    (Some(x), Some(y)) => x.total_cmp(&y).then(a.cmp(&b)),
                    (Some(_), None) => std::cmp::Ordering::Less,
                    (None, Some(_)) => std::cmp::Ordering::Greater,
                    (None, None) => a.cmp(&b),
                });
            }
            for v in idx {
                order[w.layer[v]].push(v);
            }
            let mut best = order.clone();
            let mut best_cross = total_crossings(&order, &w);
            for _ in 0..SWEEPS {
                sweep(&mut order, &w, true);
                sweep(&mut order, &w, false);
                let c = total_crossings(&order, &w);
                if c < best_cross {
                    best_cross = c;
                    best = order.clone();
                }
            }
            if let Some(s) = seed.filter(|s| s.keep_order) {
                for layer in best.iter_mut() {
                    let slots: Vec<usize> = (0..layer.len()).filter(|&i| layer[i] < n).collect();
                    let mut kids: Vec<usize> = slots.iter().map(|&i| layer[i]).collect();
                    kids.sort_by(|&a, &b| {
                        let ka = s.rank.get(a).copied().flatten().unwrap_or(f64::INFINITY);
                        let kb = s.rank.get(b).copied().flatten().unwrap_or(f64::INFINITY);
                        ka.total_cmp(&kb).then(a.cmp(&b))
                    });
                    for (slot, kid) in slots.into_iter().zip(kids) {
                        layer[slot] = kid;
                    }
                }
            }
            best
        }
    };
    let crossings = total_crossings(&order, &w);

    // Gap g sits left of column g; gap `layers` is the right margin.
    // Channels: one per edge segment passing a gap.
    let mut gap_users: Vec<Vec<(usize, usize)>> = vec![Vec::new(); layers + 1];
    for (i, chain) in w.chain.iter().enumerate() {
        if reversed[i] {
            let (a, b) = (chain[0], chain[1]);
            gap_users[w.layer[a] + 1].push((i, 0));
            gap_users[w.layer[b]].push((i, 1));
        } else {
            for (k, pair) in chain.windows(2).enumerate() {
                gap_users[w.layer[pair[1]]].push((i, k));
            }
        }
    }
    let col_width: Vec<f64> = (0..layers)
        .map(|l| order[l].iter().map(|&v| w.size[v].0).fold(0.0, f64::max))
        .collect();
    let gap_width = |g: usize| -> f64 {
        let users = gap_users[g].len() as f64;
        let need = CHANNEL_STEP * (users + 1.0);
        let touches_border = (g == 0 && !has_in)
            || (g == 1 && has_in)
            || (g == layers && !has_out)
            || (g == layers - 1 && has_out && g > 0);
        let base = if g == 0 && has_in {
            0.0
        } else if touches_border {
            params.margin
        } else {
            params.layer_gap
        };
        if base == 0.0 {
            0.0
        } else {
            base.max(need)
        }
    };
    let mut col_x = vec![0.0; layers];
    let mut x = gap_width(0);
    for l in 0..layers {
        x = x.round();
        col_x[l] = x;
        x += col_width[l];
        if l + 1 < layers {
            x += gap_width(l + 1);
        }
    }
    let width = if has_out { x } else { x + gap_width(layers) }.ceil();

    // Columns stacked with node gaps and centred vertically.
    let top = params.margin + sub.header;
    let col_height = |l: usize| -> f64 {
        let items = &order[l];
        let h: f64 = items.iter().map(|&v| w.size[v].1).sum();
        h + params.node_gap * items.len().saturating_sub(1) as f64
    };
    let content = (0..layers).map(col_height).fold(0.0, f64::max);
    let mut pos = vec![Point::default(); total];
    for l in 0..layers {
        let mut y = (top + (content - col_height(l)) / 2.0).round();
        for &v in &order[l] {
            let cx = if matches!(w.kind[v], Kind::In | Kind::Out | Kind::Dummy) {
                col_x[l] + col_width[l] / 2.0
            } else {
                col_x[l] + (col_width[l] - w.size[v].0) / 2.0
            }
            .round();
            pos[v] = Point { x: cx, y: y.round() };
            y += w.size[v].1 + params.node_gap;
        }
    }
    // Virtual nodes sit on their column's axis; border ones on the border.
    for v in 0..total {
        match w.kind[v] {
            Kind::In => pos[v].x = 0.0,
            Kind::Out => pos[v].x = width,
            _ => {}
        }
    }
    let back_count = reversed.iter().filter(|&&r| r).count();
    let lanes_top = (top + content + params.node_gap / 2.0).round();
    let height = if back_count > 0 {
        lanes_top + LANE_STEP * (back_count - 1) as f64 + params.margin
    } else {
        top + content + params.margin
    }
    .ceil();

    // Attachment points.
    let anchor_out = |i: usize| -> Point {
        let (a, _) = ends[i];
        match sub.edges[i].src {
            SubEnd::Node { index, anchor_y } => Point {
                x: pos[index].x + w.size[index].0,
                y: pos[index].y + anchor_y,
            },
            SubEnd::Boundary => pos[a],
        }
    };
    let anchor_in = |i: usize| -> Point {
        let (_, b) = ends[i];
        match sub.edges[i].dst {
            SubEnd::Node { index, anchor_y } => Point {
                x: pos[index].x,
                y: pos[index].y + anchor_y,
            },
            SubEnd::Boundary => pos[b],
        }
    };
    // Channel x per (edge, segment) in each gap, ordered by the y values
    // the segment connects.
    let mut channel: std::collections::HashMap<(usize, usize), f64> = std::collections::HashMap::new();
    let gap_left = |g: usize| -> f64 {
        if g == 0 {
            0.0
        } else {
            col_x[g - 1] + col_width[g - 1]
        }
    };
    let gap_right = |g: usize| -> f64 {
        if g == layers {
            width
        } else {
            col_x[g]
        }
    };
    let seg_y = |i: usize, k: usize| -> (f64, f64) {
        let chain = &w.chain[i];
        if reversed[i] {
            let y = if k == 0 { anchor_out(i).y } else { anchor_in(i).y };
            return (y, f64::INFINITY);
        }
        let ya = if k == 0 { anchor_out(i).y } else { pos[chain[k]].y };
        let yb = if k + 2 == chain.len() { anchor_in(i).y } else { pos[chain[k + 1]].y };
        (ya, yb)
    };
    for (g, users) in gap_users.iter().enumerate() {
        let mut sorted: Vec<(f64, f64, usize, usize)> = users
            .iter()
            .map(|&(i, k)| {
                let (a, b) = seg_y(i, k);
                (a, b, i, k)
            })
            .collect();
        sorted.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)).then((p.2, p.3).cmp(&(q.2, q.3))));
        let (l, r) = (gap_left(g), gap_right(g));
        let m = sorted.len() as f64;
        for (j, &(_, _, i, k)) in sorted.iter().enumerate() {
            channel.insert((i, k), (l + (r - l) * (j as f64 + 1.0) / (m + 1.0)).round());
        }
    }
    let mut lane = 0usize;
    let mut routes = Vec::with_capacity(ends.len());
    let mut border_y = Vec::with_capacity(ends.len());
    for i in 0..ends.len() {
        let start = anchor_out(i);
        let end = anchor_in(i);
        let mut pts = vec![start];
        if reversed[i] {
            let cx_a = channel[&(i, 0)];
            let cx_b = channel[&(i, 1)];
            let ly = lanes_top + LANE_STEP * lane as f64;
            lane += 1;
            pts.extend([
                Point { x: cx_a, y: start.y },
                Point { x: cx_a, y: ly },
                Point { x: cx_b, y: ly },
                Point { x: cx_b, y: end.y },
            ]);
        } else {
            let chain = &w.chain[i];
            let mut y = start.y;
            for k in 0..chain.len() - 1 {
                let cx = channel[&(i, k)];
                let next_y = if k + 2 == chain.len() { end.y } else { pos[chain[k + 1]].y };
                pts.push(Point { x: cx, y });
                pts.push(Point { x: cx, y: next_y });
                if k + 2 < chain.len() {
                    // through the dummy's column
                    let d = chain[k + 1];
                    let l = w.layer[d];
                    pts.push(Point { x: col_x[l], y: next_y });
                    pts.push(Point { x: col_x[l] + col_width[l], y: next_y });
                }
                y = next_y;
            }
        }
        pts.push(end);
        routes.push(super::routing::simplify(pts));
        let sy = matches!(sub.edges[i].src, SubEnd::Boundary).then_some(start.y);
        let ty = matches!(sub.edges[i].dst, SubEnd::Boundary).then_some(end.y);
        border_y.push((sy, ty));
    }
    let positions = pos[..n].to_vec();
    let layer = w.layer.clone();
    Ok(SubLayout {
        width,
        height,
        positions,
        routes,
        border_y,
        layer,
        order,
        dummies,
        spans,
        reversed,
        crossings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str) -> SubNode {
        SubNode {
            id: id.into(),
            width: 40.0,
            height: 20.0,
        }
    }

    fn edge(a: usize, b: usize) -> SubEdge {
        SubEdge {
            src: SubEnd::Node { index: a, anchor_y: 10.0 },
            dst: SubEnd::Node { index: b, anchor_y: 10.0 },
        }
    }

    fn graph(n: usize, edges: &[(usize, usize)]) -> Subgraph {
        Subgraph {
            nodes: (0..n).map(|i| node(&i.to_string())).collect(),
            edges: edges.iter().map(|&(a, b)| edge(a, b)).collect(),
            header: 0.0,
        }
    }

    #[test]
    fn chain_is_straight() {
        let l = layout_subgraph(&graph(3, &[(0, 1), (1, 2)]), &LayoutParams::default(), None).unwrap();
        assert_eq!(&l.layer[..3], &[0, 1, 2]);
        for r in &l.routes {
            assert_eq!(r.len(), 2, "{r:?}");
            assert_eq!(r[0].y, r[1].y);
        }
    }

    #[test]
    fn diamond_has_no_crossings() {
        let l = layout_subgraph(&graph(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]), &LayoutParams::default(), None).unwrap();
        assert_eq!(l.layer[1], l.layer[2]);
        assert_eq!(l.crossings, 0);
    }

    #[test]
    fn long_edges_get_dummies() {
        let l = layout_subgraph(&graph(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]), &LayoutParams::default(), None).unwrap();
        assert_eq!(l.spans[3], 3);
        assert_eq!(l.dummies[3], 2);
        assert!(l.dummies[..3].iter().all(|&d| d == 0));
    }

    #[test]
    fn cycles_route_back_edges() {
        let g = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        let l = layout_subgraph(&g, &LayoutParams::default(), None).unwrap();
        assert_eq!(l.reversed, [false, false, true]);
        let r = &l.routes[2];
        for s in r.windows(2) {
            assert!(s[0].x == s[1].x || s[0].y == s[1].y);
        }
        let strict = LayoutParams {
            break_cycles: false,
            ..LayoutParams::default()
        };
        assert!(matches!(layout_subgraph(&g, &strict, None), Err(LayoutError::CycleWithoutFeedbackSet(_))));
    }

    #[test]
    fn crossing_counter() {
        // two edges a0→b1, a1→b0 cross once
        let pos = vec![0, 1, 0, 1];
        assert_eq!(count_crossings(&[0, 1], &[2, 3], &[(0, 3), (1, 2)], &pos), 1);
        assert_eq!(count_crossings(&[0, 1], &[2, 3], &[(0, 2), (1, 3)], &pos), 0);
    }

    #[test]
    fn k22_routes_are_orthogonal() {
        let l = layout_subgraph(&graph(4, &[(0, 2), (0, 3), (1, 2), (1, 3)]), &LayoutParams::default(), None).unwrap();
        for r in &l.routes {
            for s in r.windows(2) {
                assert!(s[0].x == s[1].x || s[0].y == s[1].y);
            }
        }
        assert_eq!(l.crossings, 1);
    }

    #[test]
    fn border_crossings_sit_on_the_border() {
        let g = Subgraph {
            nodes: vec![node("a")],
            edges: vec![
                SubEdge {
                    src: SubEnd::Boundary,
                    dst: SubEnd::Node { index: 0, anchor_y: 10.0 },
                },
                SubEdge {
                    src: SubEnd::Node { index: 0, anchor_y: 10.0 },
                    dst: SubEnd::Boundary,
                },
            ],
            header: 10.0,
        };
        let l = layout_subgraph(&g, &LayoutParams::default(), None).unwrap();
        assert_eq!(l.routes[0][0].x, 0.0);
        assert_eq!(l.routes[1].last().unwrap().x, l.width);
        assert!(l.border_y[0].0.is_some() && l.border_y[1].1.is_some());
        assert!(l.positions[0].x >= LayoutParams::default().margin);
    }
}
