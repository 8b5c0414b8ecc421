//! Static SVG rendering of a layout.

use std::fmt::Write;

use super::{BoxKind, LayoutResult, Point, Rect, Route};

const STYLE: &str = "\
.container{fill:#f7f7f9;stroke:#9aa0a6;stroke-width:1}\
.operation{fill:#e8f0fe;stroke:#1a73e8}\
.data{fill:#fef7e0;stroke:#f9ab00}\
.metanode{fill:#e6f4ea;stroke:#188038;stroke-width:2}\
.echo{fill:#fff;stroke:#5f6368}\
.edge{fill:none;stroke:#5f6368;stroke-width:1.2}\
.module-edge{stroke:#188038;stroke-width:1.8}\
.hidden-edge{fill:none;stroke:#d93025;stroke-dasharray:3 2}\
.port{fill:#fff;stroke:#202124}\
.constant{fill:#9aa0a6}.parameter{fill:#f9ab00}\
text{font:11px sans-serif;fill:#202124}\
.count{font-size:10px;font-weight:bold}";

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_owned()
    } else {
        s.to_owned()
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn rect(out: &mut String, r: &Rect, class: &str, rx: f64) {
    let _ = write!(
        out,
        r#"<rect class="{class}" x="{}" y="{}" width="{}" height="{}" rx="{}"/>"#,
        num(r.x),
        num(r.y),
        num(r.w),
        num(r.h),
        num(rx)
    );
}

/// Path data for an orthogonal route with its rounded bends.
pub fn route_path(r: &Route) -> String {
    let mut d = String::new();
    let Some(first) = r.points.first() else {
        return d;
    };
    let _ = write!(d, "M{} {}", num(first.x), num(first.y));
    let rounded = r.arcs.len() + 2 == r.points.len();
    for (i, p) in r.points.iter().enumerate().skip(1) {
        let last = i + 1 == r.points.len();
        if rounded && !last {
            let a = &r.arcs[i - 1];
            let _ = write!(
                d,
                " L{} {} A{} {} 0 0 {} {} {}",
                num(a.from.x),
                num(a.from.y),
                num(a.radius),
                num(a.radius),
                a.sweep,
                num(a.to.x),
                num(a.to.y)
            );
        } else {
            let _ = write!(d, " L{} {}", num(p.x), num(p.y));
        }
    }
    d
}

fn port_radius(level: usize) -> f64 {
    match level {
        1 => 5.0,
        2 => 4.0,
        _ => 3.0,
    }
}

/// Renders the layout; `scale` multiplies the outer width and height only.
pub fn render_svg(layout: &LayoutResult, scale: f64) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        num(layout.width * scale),
        num(layout.height * scale),
        num(layout.width),
        num(layout.height)
    );
    let _ = write!(
        out,
        r#"<defs><marker id="arrow" viewBox="0 0 8 8" refX="8" refY="4" markerWidth="6" markerHeight="6" orient="auto"><path d="M0 0 L8 4 L0 8 z" fill="context-stroke"/></marker></defs><style>{STYLE}</style>"#
    );

    // Containers first, outermost first, so children paint on top.
    let mut containers: Vec<(&String, &super::NodeBox)> = layout
        .boxes
        .iter()
        .filter(|(p, b)| b.kind == BoxKind::Container && p.as_str() != "/")
        .collect();
    containers.sort_by_key(|(p, _)| p.matches('/').count());
    for (p, b) in containers {
        let _ = write!(out, r#"<g class="container-group" data-path="{}">"#, escape(p));
        rect(&mut out, &b.rect, "container", 6.0);
        let _ = write!(
            out,
            r#"<text x="{}" y="{}">{}</text></g>"#,
            num(b.rect.x + 6.0),
            num(b.rect.y + 14.0),
            escape(&b.label)
        );
    }

    for g in &layout.piles {
        let _ = write!(out, r#"<g class="pile" data-pile="{}">"#, escape(&g.pile));
        for e in g.echoes.iter().rev() {
            rect(&mut out, e, "echo", 4.0);
        }
        let _ = write!(
            out,
            r#"<text class="count" x="{}" y="{}">×{}</text></g>"#,
            num(g.badge.x + 2.0),
            num(g.badge.y + 2.0),
            g.repeat
        );
    }

    for (p, b) in layout.boxes.iter().filter(|(_, b)| b.kind != BoxKind::Container) {
        let front = layout
            .piles
            .iter()
            .find(|g| &g.node == p)
            .map(|g| g.front)
            .unwrap_or(b.rect);
        let (class, rx) = match b.kind {
            BoxKind::Operation => ("operation", 4.0),
            BoxKind::Data => ("data", front.h / 2.0),
            _ => ("metanode", 8.0),
        };
        let _ = write!(out, r#"<g class="node" data-path="{}">"#, escape(p));
        rect(&mut out, &front, class, rx);
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text></g>"#,
            num(front.x + front.w / 2.0),
            num(front.y + front.h / 2.0 + 4.0),
            escape(&b.label)
        );
    }

    for r in &layout.routes {
        let class = if r.kind == crate::prune::EdgeKind::ModuleEdge {
            "edge module-edge"
        } else {
            "edge"
        };
        let _ = write!(
            out,
            r#"<path class="{class}" data-edge="{}" d="{}" marker-end="url(#arrow)"/>"#,
            r.edge,
            route_path(r)
        );
    }
    for h in &layout.hidden {
        let c = &h.curve;
        let _ = write!(
            out,
            r#"<path class="hidden-edge" data-edge="{}" visibility="hidden" d="M{} {} C{} {} {} {} {} {}"/>"#,
            h.edge,
            num(c.from.x),
            num(c.from.y),
            num(c.c1.x),
            num(c.c1.y),
            num(c.c2.x),
            num(c.c2.y),
            num(c.to.x),
            num(c.to.y)
        );
    }
    for (id, p) in &layout.ports {
        let _ = write!(
            out,
            r#"<circle class="port {} {}" data-port="{}" data-level="{}" cx="{}" cy="{}" r="{}"/>"#,
            p.side,
            match p.kind {
                crate::prune::PortKind::ModulePort => "module-port",
                crate::prune::PortKind::NonmodulePort => "nonmodule-port",
            },
            escape(id),
            p.level,
            num(p.at.x),
            num(p.at.y),
            num(port_radius(p.level))
        );
    }
    for b in &layout.badges {
        let Point { x, y } = b.at;
        let _ = write!(
            out,
            r#"<circle class="{}" data-data="{}" cx="{}" cy="{}" r="3"/>"#,
            b.role,
            escape(&b.data),
            num(x),
            num(y)
        );
    }
    out.push_str("</svg>\n");
    out
}
