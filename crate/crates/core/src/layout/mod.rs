//! Nested layered layout of a visible graph.
//!
//! Containers are laid out bottom-up: each expanded metanode is placed as one
//! layered drawing of its visible children, then sized and treated as a
//! single child of its parent. Edges that cross container borders are cut
//! into one piece per container and stitched back together after absolute
//! positions are known.

pub mod routing;
pub mod sugiyama;
pub mod svg;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::LayoutError;
use crate::iso::djb;
use crate::model::NodeIx;
use crate::prune::{port_id, EdgeKind, Endpoint, PortKey, PortKind, Side};
use crate::visible::VisibleGraph;

pub use routing::{Arc, Curve};
pub use sugiyama::{layout_subgraph, Seed, SubEdge, SubEnd, SubLayout, SubNode, Subgraph};

/// Depth of the stacked-card footprint added around a pile.
pub const PILE_OFFSET: f64 = 12.0;
pub const ECHO_STEP: f64 = 6.0;
pub const ECHOES: usize = 2;
/// First port anchor below a box's top edge, and the step between ports.
pub const PORT_TOP: f64 = 8.0;
pub const PORT_STEP: f64 = 10.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    fn shift(self, by: Point) -> Point {
        Point {
            x: self.x + by.x,
            y: self.y + by.y,
        }
    }

    fn swap(self) -> Point {
        Point { x: self.y, y: self.x }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    /// True when `other` lies inside with at least `inset` to spare.
    pub fn contains(&self, other: &Rect, inset: f64) -> bool {
        other.x >= self.x + inset
            && other.y >= self.y + inset
            && other.right() <= self.right() - inset
            && other.bottom() <= self.bottom() - inset
    }

    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x < other.right() && other.x < self.right() && self.y < other.bottom() && other.y < self.bottom()
    }

    fn swap(self) -> Rect {
        Rect {
            x: self.y,
            y: self.x,
            w: self.h,
            h: self.w,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flow {
    #[default]
    LeftToRight,
    TopDown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutParams {
    pub layer_gap: f64,
    pub node_gap: f64,
    pub margin: f64,
    pub arc_radius: f64,
    /// Label band at the top of each expanded container.
    pub header: f64,
    pub flow: Flow,
    /// Route cycles around a bottom lane instead of failing.
    pub break_cycles: bool,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            layer_gap: 60.0,
            node_gap: 20.0,
            margin: 16.0,
            arc_radius: 8.0,
            header: 20.0,
            flow: Flow::LeftToRight,
            break_cycles: true,
        }
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Result<(), LayoutError> {
        let fields = [
            ("layer_gap", self.layer_gap),
            ("node_gap", self.node_gap),
            ("margin", self.margin),
            ("arc_radius", self.arc_radius),
            ("header", self.header),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(LayoutError::InvalidParams(format!("{name} must be a finite non-negative number")));
            }
        }
        if self.layer_gap == 0.0 {
            return Err(LayoutError::InvalidParams("layer_gap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoxKind {
    Operation,
    Data,
    Metanode,
    Container,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeBox {
    pub rect: Rect,
    pub kind: BoxKind,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op_type: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    pub module: bool,
    /// Id of the pile this box represents, if stacked.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pile: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PortAnchor {
    pub owner: String,
    pub side: &'static str,
    pub level: usize,
    pub kind: PortKind,
    pub at: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Route {
    pub edge: usize,
    pub kind: EdgeKind,
    pub src: String,
    pub dst: String,
    pub points: Vec<Point>,
    pub arcs: Vec<Arc>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HiddenRoute {
    pub edge: usize,
    pub src: String,
    pub dst: String,
    pub curve: Curve,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Badge {
    pub owner: String,
    pub data: String,
    pub role: &'static str,
    pub at: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PileGlyph {
    pub pile: String,
    pub node: String,
    pub repeat: usize,
    pub front: Rect,
    pub echoes: Vec<Rect>,
    pub badge: Point,
}

/// How one edge piece was layered inside one container.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PieceStat {
    pub container: String,
    pub edge: usize,
    pub span: usize,
    pub dummies: usize,
    pub reversed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ContainerState {
    /// Children per layer, in final order.
    pub layers: Vec<Vec<String>>,
    pub crossings: usize,
    #[serde(skip)]
    order: Vec<Vec<usize>>,
    #[serde(skip)]
    signature: u64,
    #[serde(skip)]
    topology: u64,
    /// Child → vertical position inside this container.
    #[serde(skip)]
    rank: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayoutResult {
    pub revision: u64,
    pub flow: Flow,
    pub width: f64,
    pub height: f64,
    pub boxes: BTreeMap<String, NodeBox>,
    pub ports: BTreeMap<String, PortAnchor>,
    pub routes: Vec<Route>,
    pub hidden: Vec<HiddenRoute>,
    pub badges: Vec<Badge>,
    pub piles: Vec<PileGlyph>,
    pub pieces: Vec<PieceStat>,
    pub containers: BTreeMap<String, ContainerState>,
    /// Previous box id → box now standing for it (relayouts only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correspondence: Option<BTreeMap<String, String>>,
}

impl LayoutResult {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("layout serializes");
        out.push(b'\n');
        out
    }

    pub fn route(&self, edge: usize) -> Option<&Route> {
        self.routes.iter().find(|r| r.edge == edge)
    }

    fn transpose(&mut self) {
        std::mem::swap(&mut self.width, &mut self.height);
        for b in self.boxes.values_mut() {
            b.rect = b.rect.swap();
        }
        for p in self.ports.values_mut() {
            p.at = p.at.swap();
        }
        for r in &mut self.routes {
            for p in &mut r.points {
                *p = p.swap();
            }
            for a in &mut r.arcs {
                a.from = a.from.swap();
                a.to = a.to.swap();
                a.center = a.center.swap();
                // mirroring reverses the turning direction
                a.sweep = 1 - a.sweep;
            }
        }
        for h in &mut self.hidden {
            let c = &mut h.curve;
            c.from = c.from.swap();
            c.c1 = c.c1.swap();
            c.c2 = c.c2.swap();
            c.to = c.to.swap();
        }
        for b in &mut self.badges {
            b.at = b.at.swap();
        }
        for g in &mut self.piles {
            g.front = g.front.swap();
            g.badge = g.badge.swap();
            for e in &mut g.echoes {
                *e = e.swap();
            }
        }
    }
}

/// Drag hint for a relayout: place `node` near `at` within its layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pin {
    pub node: String,
    pub at: Point,
}

pub fn layout_graph(vis: &VisibleGraph, params: &LayoutParams) -> Result<LayoutResult, LayoutError> {
    run(vis, params, None, None)
}

/// Lays out `vis` reusing orderings from `prev` where containers are
/// unchanged, and reports which new box stands for each old one.
pub fn stable_relayout(
    prev: &LayoutResult,
    vis: &VisibleGraph,
    params: &LayoutParams,
    pin: Option<&Pin>,
) -> Result<LayoutResult, LayoutError> {
    let mut out = run(vis, params, Some(prev), pin)?;
    let tree = &vis.graph.tree;
    let mut map = BTreeMap::new();
    for old in prev.boxes.keys() {
        let now = if out.boxes.contains_key(old) {
            Some(old.clone())
        } else {
            tree.get(old)
                .and_then(|ix| vis.visible_rep(ix))
                .map(|r| tree.id(r).to_string())
                .filter(|p| out.boxes.contains_key(p))
        };
        if let Some(now) = now {
            map.insert(old.clone(), now);
        }
    }
    out.correspondence = Some(map);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum End {
    Item(NodeIx),
    Border,
}

struct Piece {
    edge: usize,
    src: End,
    dst: End,
}

fn label_width(label: &str, per_char: f64, pad: f64, lo: f64, hi: f64) -> f64 {
    (label.chars().count() as f64 * per_char + pad).clamp(lo, hi).ceil()
}

fn run(
    vis: &VisibleGraph,
    params: &LayoutParams,
    prev: Option<&LayoutResult>,
    pin: Option<&Pin>,
) -> Result<LayoutResult, LayoutError> {
    params.validate()?;
    let pg = &*vis.graph;
    let tree = &pg.tree;
    let st = vis.stacked();
    let path = |ix: NodeIx| tree.id(ix).to_string();
    let containers = vis.frontier().containers();
    let is_container: std::collections::HashSet<NodeIx> = containers.iter().copied().collect();

    let mut items: BTreeMap<NodeIx, Vec<NodeIx>> = containers.iter().map(|&c| (c, Vec::new())).collect();
    for &n in st.nodes.iter().chain(containers.iter().filter(|&&c| c != 0)) {
        if let Some(p) = tree.parent(n) {
            items.entry(p).or_default().push(n);
        }
    }
    let mut slot: HashMap<NodeIx, usize> = HashMap::new();
    for list in items.values_mut() {
        list.sort_unstable();
        for (i, &n) in list.iter().enumerate() {
            slot.insert(n, i);
        }
    }

    // Port rank per side, ordered by level.
    let mut rank: HashMap<PortKey, usize> = HashMap::new();
    let mut per_side: HashMap<(NodeIx, Side), usize> = HashMap::new();
    for key in st.ports.keys() {
        let c = per_side.entry((key.owner, key.side)).or_default();
        rank.insert(*key, *c);
        *c += 1;
    }
    let piled = |n: NodeIx| st.pile_of.contains_key(&n);
    let card_top = |n: NodeIx| if piled(n) { PILE_OFFSET } else { 0.0 };

    // Sizes of non-container children (front card only for piles).
    let card = |n: NodeIx| -> (f64, f64) {
        let node = tree.node(n);
        let label = tree.id(n).basename();
        let ports = [Side::Input, Side::Output]
            .iter()
            .map(|&s| per_side.get(&(n, s)).copied().unwrap_or(0))
            .max()
            .unwrap_or(0) as f64;
        let port_h = PORT_TOP + PORT_STEP * ports + 6.0;
        if node.kind.is_meta() {
            (label_width(label, 7.0, 28.0, 80.0, 200.0), port_h.max(40.0).ceil())
        } else if node.kind.is_data() {
            (label_width(label, 7.0, 16.0, 48.0, 160.0), port_h.max(24.0).ceil())
        } else {
            (label_width(label, 7.0, 20.0, 60.0, 180.0), port_h.max(32.0).ceil())
        }
    };

    // Cut every drawn edge into per-container pieces.
    let mut pieces: BTreeMap<NodeIx, Vec<Piece>> = BTreeMap::new();
    let mut plans: Vec<(usize, Vec<NodeIx>)> = Vec::new();
    for (i, e) in st.edges.iter().enumerate() {
        if e.is_hidden() {
            continue;
        }
        let (a, b) = (e.src.node(), e.dst.node());
        if tree.contains(a, b) || tree.contains(b, a) {
            continue;
        }
        let l = tree.lca(a, b);
        let mut along = Vec::new();
        let mut x = a;
        while let Some(p) = tree.parent(x).filter(|&p| p != l) {
            pieces.entry(p).or_default().push(Piece {
                edge: i,
                src: End::Item(x),
                dst: End::Border,
            });
            along.push(p);
            x = p;
        }
        let ca = x;
        along.push(l);
        let mut down = Vec::new();
        let mut y = b;
        while let Some(p) = tree.parent(y).filter(|&p| p != l) {
            pieces.entry(p).or_default().push(Piece {
                edge: i,
                src: End::Border,
                dst: End::Item(y),
            });
            down.push(p);
            y = p;
        }
        let cb = y;
        pieces.entry(l).or_default().push(Piece {
            edge: i,
            src: End::Item(ca),
            dst: End::Item(cb),
        });
        along.extend(down.into_iter().rev());
        plans.push((i, along));
    }

    let end_anchor = |ep: &Endpoint, n: NodeIx, h: f64| -> f64 {
        match ep.port() {
            Some(k) => card_top(n) + PORT_TOP + PORT_STEP * rank.get(&k).copied().unwrap_or(0) as f64,
            None => (card_top(n) + h / 2.0).round(),
        }
    };

    // Bottom-up: deeper containers have larger preorder indices.
    let mut size: HashMap<NodeIx, (f64, f64)> = HashMap::new();
    let mut subs: HashMap<NodeIx, SubLayout> = HashMap::new();
    // (container, edge) → border heights (entry, exit)
    let mut border: HashMap<(NodeIx, usize), (Option<f64>, Option<f64>)> = HashMap::new();
    let mut piece_ix: HashMap<(NodeIx, usize), usize> = HashMap::new();
    let mut states: BTreeMap<String, ContainerState> = BTreeMap::new();
    let mut stats = Vec::new();
    let mut order_desc = containers.clone();
    order_desc.sort_unstable_by(|a, b| b.cmp(a));
    for &c in &order_desc {
        let kids = &items[&c];
        let mut nodes = Vec::with_capacity(kids.len());
        for &k in kids {
            let (w, h) = if is_container.contains(&k) {
                size[&k]
            } else {
                let (w, h) = card(k);
                if piled(k) {
                    (w + PILE_OFFSET, h + PILE_OFFSET)
                } else {
                    (w, h)
                }
            };
            size.entry(k).or_insert((w, h));
            nodes.push(SubNode { id: path(k), width: w, height: h });
        }
        let local = pieces.remove(&c).unwrap_or_default();
        let mut edges = Vec::with_capacity(local.len());
        for p in &local {
            let e = &st.edges[p.edge];
            let end = |end: End, is_src: bool| -> SubEnd {
                match end {
                    End::Border => SubEnd::Boundary,
                    End::Item(k) => {
                        let (ep, actual) = if is_src { (&e.src, e.src.node()) } else { (&e.dst, e.dst.node()) };
                        let anchor_y = if k == actual {
                            let h = if is_container.contains(&k) {
                                size[&k].1
                            } else {
                                card(k).1
                            };
                            end_anchor(ep, k, h)
                        } else {
                            let (entry, exit) = border.get(&(k, p.edge)).copied().unwrap_or((None, None));
                            let y = if is_src { exit } else { entry };
                            y.unwrap_or((size[&k].1 / 2.0).round())
                        };
                        SubEnd::Node {
                            index: slot[&k],
                            anchor_y,
                        }
                    }
                }
            };
            edges.push(SubEdge {
                src: end(p.src, true),
                dst: end(p.dst, false),
            });
        }
        let sub = Subgraph {
            nodes,
            edges,
            header: if c == 0 { 0.0 } else { params.header },
        };
        let (signature, topology) = signatures(&sub);
        let cpath = path(c);
        let pinned = pin.filter(|p| sub.nodes.iter().any(|n| n.id == p.node));
        let seed = prev.and_then(|pr| pr.containers.get(&cpath)).map(|old| {
            let mut rank: Vec<Option<f64>> = sub.nodes.iter().map(|n| old.rank.get(&n.id).copied()).collect();
            if let Some(p) = pinned {
                // the pin is absolute; convert with the container's old origin
                let origin = prev
                    .and_then(|pr| pr.boxes.get(&cpath))
                    .map(|b| b.rect.y)
                    .unwrap_or(0.0);
                for (i, n) in sub.nodes.iter().enumerate() {
                    if n.id == p.node {
                        rank[i] = Some(p.at.y - origin);
                    }
                }
            }
            let exact = pinned.is_none() && old.signature == signature;
            Seed {
                rank,
                keep_order: pinned.is_some() || old.topology == topology,
                order: exact.then(|| old.order.clone()),
            }
        });
        let laid = layout_subgraph(&sub, params, seed.as_ref())?;
        for (k, p) in local.iter().enumerate() {
            border.insert((c, p.edge), laid.border_y[k]);
            piece_ix.insert((c, p.edge), k);
            stats.push(PieceStat {
                container: cpath.clone(),
                edge: p.edge,
                span: laid.spans[k],
                dummies: laid.dummies[k],
                reversed: laid.reversed[k],
            });
        }
        let names = |v: &Vec<usize>| -> Vec<String> {
            v.iter().filter(|&&i| i < kids.len()).map(|&i| path(kids[i])).collect()
        };
        states.insert(
            cpath,
            ContainerState {
                layers: laid.order.iter().map(names).collect(),
                crossings: laid.crossings,
                order: laid.order.clone(),
                signature,
                topology,
                rank: kids.iter().zip(&laid.positions).map(|(&k, p)| (path(k), p.y)).collect(),
            },
        );
        size.insert(c, (laid.width, laid.height));
        subs.insert(c, laid);
    }

    // Top-down: absolute origins.
    let mut origin: HashMap<NodeIx, Point> = HashMap::new();
    origin.insert(0, Point::default());
    for &c in &containers {
        let base = origin[&c];
        for (k, &n) in items[&c].iter().enumerate() {
            origin.insert(n, subs[&c].positions[k].shift(base));
        }
    }
    let rect_of = |n: NodeIx| -> Rect {
        let o = origin[&n];
        let (w, h) = size[&n];
        Rect { x: o.x, y: o.y, w, h }
    };

    let mut boxes = BTreeMap::new();
    for (&n, _) in origin.iter() {
        let node = tree.node(n);
        let kind = if is_container.contains(&n) {
            BoxKind::Container
        } else if node.kind.is_meta() {
            BoxKind::Metanode
        } else if node.kind.is_data() {
            BoxKind::Data
        } else {
            BoxKind::Operation
        };
        boxes.insert(
            path(n),
            NodeBox {
                rect: rect_of(n),
                kind,
                label: if n == 0 { String::new() } else { tree.id(n).basename().to_owned() },
                op_type: node.kind.op_type().map(str::to_owned),
                parent: tree.parent(n).map(path),
                module: vis.derived.modules.is_module(n),
                pile: st.pile_of.get(&n).map(|&p| st.piles[p].id.clone()),
            },
        );
    }

    // Stitch pieces into whole routes.
    let mut routes = Vec::with_capacity(plans.len());
    for (i, along) in &plans {
        let mut pts: Vec<Point> = Vec::new();
        for &c in along {
            let k = piece_ix[&(c, *i)];
            let o = origin[&c];
            pts.extend(subs[&c].routes[k].iter().map(|p| p.shift(o)));
        }
        let pts = routing::simplify(pts);
        let e = &st.edges[*i];
        routes.push(Route {
            edge: *i,
            kind: e.kind,
            src: path(e.src.node()),
            dst: path(e.dst.node()),
            arcs: routing::arcs(&pts, params.arc_radius),
            points: pts,
        });
    }

    let mut ports = BTreeMap::new();
    let anchor = |key: &PortKey| -> Point {
        let r = rect_of(key.owner);
        let top = if is_container.contains(&key.owner) { 0.0 } else { card_top(key.owner) };
        Point {
            x: if key.side == Side::Input { r.x } else { r.right() },
            y: r.y + top + PORT_TOP + PORT_STEP * rank[key] as f64,
        }
    };
    for (key, port) in &st.ports {
        if !origin.contains_key(&key.owner) {
            continue;
        }
        ports.insert(
            port_id(pg, key),
            PortAnchor {
                owner: path(key.owner),
                side: key.side.as_str(),
                level: key.level,
                kind: port.kind,
                at: anchor(key),
            },
        );
    }
    let point_of = |ep: &Endpoint, out: bool| -> Point {
        match ep.port() {
            Some(k) => anchor(&k),
            None => {
                let n = ep.node();
                let r = rect_of(n);
                let y = r.y + end_anchor(ep, n, card(n).1);
                Point {
                    x: if out { r.right() } else { r.x },
                    y,
                }
            }
        }
    };
    let hidden = st
        .edges
        .iter()
        .enumerate()
        .filter(|(_, e)| e.is_hidden() && origin.contains_key(&e.src.node()) && origin.contains_key(&e.dst.node()))
        .map(|(i, e)| HiddenRoute {
            edge: i,
            src: path(e.src.node()),
            dst: path(e.dst.node()),
            curve: routing::curve(point_of(&e.src, true), point_of(&e.dst, false)),
        })
        .collect();

    let mut badges = Vec::new();
    let mut piles = Vec::new();
    for &n in &st.nodes {
        let r = rect_of(n);
        let (w, h) = card(n);
        let front = Rect {
            x: r.x,
            y: r.y + card_top(n),
            w,
            h,
        };
        if let Some(a) = pg.attachment(n) {
            for (k, &d) in a.constants.iter().enumerate() {
                badges.push(Badge {
                    owner: path(n),
                    data: path(d),
                    role: "constant",
                    at: Point {
                        x: front.x + 6.0 + 10.0 * k as f64,
                        y: front.bottom() - 6.0,
                    },
                });
            }
            for (k, &d) in a.parameters.iter().enumerate() {
                badges.push(Badge {
                    owner: path(n),
                    data: path(d),
                    role: "parameter",
                    at: Point {
                        x: front.right() - 6.0 - 10.0 * k as f64,
                        y: front.bottom() - 6.0,
                    },
                });
            }
        }
        if let Some(&p) = st.pile_of.get(&n) {
            let echoes: Vec<Rect> = (1..=ECHOES)
                .map(|k| Rect {
                    x: front.x + ECHO_STEP * k as f64,
                    y: front.y - ECHO_STEP * k as f64,
                    w,
                    h,
                })
                .collect();
            let last = echoes.last().copied().unwrap_or(front);
            piles.push(PileGlyph {
                pile: st.piles[p].id.clone(),
                node: path(n),
                repeat: st.piles[p].repeat(),
                front,
                echoes,
                badge: Point { x: last.right(), y: last.y },
            });
        }
    }

    let (width, height) = size[&0];
    let mut out = LayoutResult {
        revision: vis.revision,
        flow: params.flow,
        width,
        height,
        boxes,
        ports,
        routes,
        hidden,
        badges,
        piles,
        pieces: stats,
        containers: states,
        correspondence: None,
    };
    if params.flow == Flow::TopDown {
        out.transpose();
    }
    Ok(out)
}

/// Exact and topological fingerprints of one container's input.
fn signatures(sub: &Subgraph) -> (u64, u64) {
    let mut exact = String::new();
    for n in &sub.nodes {
        exact.push_str(&format!("{}:{}:{};", n.id, n.width, n.height));
    }
    let end = |e: &SubEnd| match e {
        SubEnd::Node { index, anchor_y } => (sub.nodes[*index].id.clone(), *anchor_y),
        SubEnd::Boundary => ("|".to_owned(), 0.0),
    };
    let mut pairs = std::collections::BTreeSet::new();
    for e in &sub.edges {
        let (a, ay) = end(&e.src);
        let (b, by) = end(&e.dst);
        exact.push_str(&format!("{a}@{ay}>{b}@{by};"));
        pairs.insert((a, b));
    }
    let mut topo: String = sub.nodes.iter().map(|n| format!("{};", n.id)).collect();
    for (a, b) in pairs {
        topo.push_str(&format!("{a}>{b};"));
    }
    (djb(exact.as_bytes()), djb(topo.as_bytes()))
}
