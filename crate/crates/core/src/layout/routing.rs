//! Polyline clean-up, rounded bends and hidden-edge curves.

use serde::Serialize;

use super::Point;

/// A rounded bend: the route leaves the straight line at `from`, follows a
/// quarter circle around `center` and rejoins at `to`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Arc {
    pub from: Point,
    pub to: Point,
    pub center: Point,
    pub radius: f64,
    /// SVG sweep flag: 1 when the turn is clockwise on screen.
    pub sweep: u8,
}

/// A cubic Bézier between two port anchors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Curve {
    pub from: Point,
    pub c1: Point,
    pub c2: Point,
    pub to: Point,
}

/// Drops repeated points and interior points that lie on a straight run.
pub fn simplify(points: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        if out.last() == Some(&p) {
            continue;
        }
        if out.len() >= 2 {
            let a = out[out.len() - 2];
            let b = out[out.len() - 1];
            let straight = (a.x == b.x && b.x == p.x) || (a.y == b.y && b.y == p.y);
            if straight {
                out.pop();
            }
        }
        out.push(p);
    }
    out
}

fn unit(a: Point, b: Point) -> (f64, f64, f64) {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len = (dx * dx + dy * dy).sqrt();
    (dx / len, dy / len, len)
}

/// One arc per interior bend, radius capped at half of either adjacent
/// segment so neighbouring arcs never overlap.
pub fn arcs(points: &[Point], radius: f64) -> Vec<Arc> {
    points
        .windows(3)
        .filter_map(|w| {
            let (ix, iy, li) = unit(w[0], w[1]);
            let (ox, oy, lo) = unit(w[1], w[2]);
            let cross = ix * oy - iy * ox;
            if cross == 0.0 {
                return None;
            }
            let r = radius.min(li / 2.0).min(lo / 2.0);
            let from = Point {
                x: w[1].x - ix * r,
                y: w[1].y - iy * r,
            };
            let to = Point {
                x: w[1].x + ox * r,
                y: w[1].y + oy * r,
            };
            let center = Point {
                x: from.x + ox * r,
                y: from.y + oy * r,
            };
            Some(Arc {
                from,
                to,
                center,
                radius: r,
                sweep: u8::from(cross > 0.0),
            })
        })
        .collect()
}

/// A horizontal S-curve from an output anchor to an input anchor.
pub fn curve(from: Point, to: Point) -> Curve {
    let pull = ((to.x - from.x).abs() / 2.0).max(24.0);
    Curve {
        from,
        c1: Point { x: from.x + pull, y: from.y },
        c2: Point { x: to.x - pull, y: to.y },
        to,
    }
}
