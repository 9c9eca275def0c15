//! Hand-written SVG on a fixed 900x500 canvas.

use std::fmt::Write;

use super::PerformanceSeries;
use crate::stats::{cd_diagram_layout, CriticalDistance, RankMatrix};

pub const WIDTH: f64 = 900.0;
pub const HEIGHT: f64 = 500.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
}

/// Epsilon-F1 against compression step, one polyline per method, with a
/// dashed reference line at `-margin`.
pub fn performance_svg(series: &[PerformanceSeries], margin: f64) -> String {
    let (left, right, top, bottom) = (70.0, 680.0, 30.0, 450.0);
    let max_step = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).max().unwrap_or(1).max(1);
    let min_step = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).min().unwrap_or(1).min(max_step);
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let (mut y_lo, mut y_hi) = ys.fold((-margin, 0.0f64), |(lo, hi), y| (lo.min(y), hi.max(y)));
    let pad = ((y_hi - y_lo) * 0.05).max(1e-3);
    y_lo -= pad;
    y_hi += pad;
    let x_of = |s: usize| {
        if max_step == min_step {
            (left + right) / 2.0
        } else {
            left + (s - min_step) as f64 / (max_step - min_step) as f64 * (right - left)
        }
    };
    let y_of = |v: f64| bottom - (v - y_lo) / (y_hi - y_lo) * (bottom - top);

    let mut out = String::new();
    header(&mut out);
    let _ = writeln!(out, r#"<g class="axes" stroke="black">"#);
    let _ = writeln!(out, r#"<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}"/>"#);
    let _ = writeln!(out, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}"/>"#);
    let _ = writeln!(out, "</g>");
    for s in min_step..=max_step {
        let x = x_of(s);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{s}</text>"#, bottom + 18.0);
    }
    for i in 0..=4 {
        let v = y_lo + (y_hi - y_lo) * f64::from(i) / 4.0;
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, left - 6.0, y_of(v) + 4.0);
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">compression step</text>"#,
        (left + right) / 2.0,
        bottom + 38.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">epsilon F1</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    );
    let _ = writeln!(
        out,
        r##"<line class="zero-line" x1="{left}" y1="{y:.4}" x2="{right}" y2="{y:.4}" stroke="#999999" data-y="0"/>"##,
        y = y_of(0.0)
    );
    let _ = writeln!(
        out,
        r#"<line class="margin-line" x1="{left}" y1="{y:.4}" x2="{right}" y2="{y:.4}" stroke="red" stroke-dasharray="6 4" data-y="{m}"/>"#,
        y = y_of(-margin),
        m = -margin
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s.points.iter().map(|&(st, v)| format!("{:.2},{:.2}", x_of(st), y_of(v))).collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" data-method="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            escape(&s.method),
            pts.join(" ")
        );
        let ly = top + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="700" y1="{ly:.2}" x2="725" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text class="legend" x="732" y="{:.2}">{}</text>"#,
            ly + 4.0,
            escape(&s.method)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub const CD_AXIS_LEFT: f64 = 100.0;
pub const CD_AXIS_RIGHT: f64 = 800.0;

/// Horizontal position of `rank` on an axis spanning ranks `1..=k`.
pub fn rank_to_x(rank: f64, k: usize) -> f64 {
    if k <= 1 {
        return CD_AXIS_LEFT;
    }
    CD_AXIS_LEFT + (rank - 1.0) / (k as f64 - 1.0) * (CD_AXIS_RIGHT - CD_AXIS_LEFT)
}

/// Critical-difference diagram: rank axis, method markers, CD ruler, and one
/// bar per group of two or more indistinguishable methods.
pub fn cd_svg(r: &RankMatrix, cd: &CriticalDistance) -> String {
    let k = r.k();
    let axis_y = 120.0;
    let mut out = String::new();
    header(&mut out);
    let _ = writeln!(
        out,
        r#"<line class="rank-axis" x1="{CD_AXIS_LEFT}" y1="{axis_y}" x2="{CD_AXIS_RIGHT}" y2="{axis_y}" stroke="black"/>"#
    );
    for i in 1..=k {
        let x = rank_to_x(i as f64, k);
        let _ = writeln!(
            out,
            r#"<line class="axis-tick" x1="{x:.4}" y1="{axis_y}" x2="{x:.4}" y2="{:.1}" stroke="black"/><text x="{x:.4}" y="{:.1}" text-anchor="middle">{i}</text>"#,
            axis_y - 6.0,
            axis_y - 10.0
        );
    }
    // CD ruler above the axis, starting at rank 1
    let _ = writeln!(
        out,
        r#"<line class="cd-ruler" x1="{:.4}" y1="50" x2="{:.4}" y2="50" stroke="black" stroke-width="2" data-length="{}"/><text x="{:.4}" y="42" text-anchor="middle">CD = {:.3}</text>"#,
        rank_to_x(1.0, k),
        rank_to_x(1.0 + cd.cd, k),
        cd.cd,
        rank_to_x(1.0 + cd.cd / 2.0, k),
        cd.cd
    );

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| r.avg_ranks[a].total_cmp(&r.avg_ranks[b]).then(a.cmp(&b)));
    for (pos, &m) in order.iter().enumerate() {
        let x = rank_to_x(r.avg_ranks[m], k);
        let label_y = 200.0 + 20.0 * pos as f64;
        let (lx, anchor) = if pos < k.div_ceil(2) { (40.0, "start") } else { (WIDTH - 40.0, "end") };
        let _ = writeln!(
            out,
            r#"<g class="method" data-method="{name}" data-rank="{rank}"><line class="method-tick" x1="{x:.4}" y1="{axis_y}" x2="{x:.4}" y2="{label_y:.1}" stroke="black"/><line x1="{x:.4}" y1="{label_y:.1}" x2="{lx}" y2="{label_y:.1}" stroke="black"/><text x="{lx}" y="{:.1}" text-anchor="{anchor}">{name} ({rank:.2})</text></g>"#,
            label_y - 4.0,
            name = escape(&r.methods[m]),
            rank = r.avg_ranks[m],
        );
    }
    let groups = cd_diagram_layout(r, cd);
    for (i, g) in groups.iter().filter(|g| g.members.len() > 1).enumerate() {
        let y = axis_y + 15.0 + 8.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line class="group-bar" x1="{:.4}" y1="{y:.1}" x2="{:.4}" y2="{y:.1}" stroke="black" stroke-width="4"/>"#,
            rank_to_x(g.lo_rank, k) - 3.0,
            rank_to_x(g.hi_rank, k) + 3.0
        );
    }
    out.push_str("</svg>\n");
    out
}
