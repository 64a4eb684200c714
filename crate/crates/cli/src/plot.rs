//! Manhattan plot as a standalone SVG document.

use std::fmt::Write as _;

use crate::formats::ResultRow;

/// Genome-wide significance level.
pub const SIGNIFICANCE: f64 = 5e-8;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 48.0;

pub fn threshold() -> f64 {
    -SIGNIFICANCE.log10()
}

/// Rows with `p < 5e-8`.
pub fn count_hits(rows: &[ResultRow]) -> usize {
    rows.iter().filter(|r| r.pvalue < SIGNIFICANCE).count()
}

/// SVG with one point per SNP in file order, hits drawn in a separate class,
/// and a dashed reference line at `−log₁₀ 5e-8`.
pub fn render_svg(rows: &[ResultRow]) -> String {
    let ys: Vec<f64> = rows.iter().map(|r| -r.pvalue.log10()).collect();
    let t = threshold();
    let y_max = ys.iter().copied().fold(t, f64::max) * 1.08;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let m = rows.len().max(1) as f64;
    let px = |i: usize| LEFT + plot_w * (i as f64 + 0.5) / m;
    let py = |v: f64| TOP + plot_h * (1.0 - v / y_max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    let x0 = LEFT;
    let x1 = WIDTH - RIGHT;
    let yb = TOP + plot_h;
    let _ = writeln!(s, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{yb}" x2="{x1}" y2="{yb}"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{yb}"/>"#);
    let _ = writeln!(s, "</g>");

    let step = tick_step(y_max);
    let mut tick = 0.0;
    while tick <= y_max {
        let y = py(tick);
        let _ = writeln!(
            s,
            r#"<line class="tick" x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{tick}</text>"#,
            x0 - 4.0,
            x0 - 6.0,
            y + 4.0
        );
        tick += step;
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">SNP index</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">-log10(p)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let _ = writeln!(s, r#"<g class="snps">"#);
    for (i, (r, &v)) in rows.iter().zip(&ys).enumerate() {
        let (class, fill, radius) = if r.pvalue < SIGNIFICANCE {
            ("hit", "#d62728", 3.5)
        } else if i % 2 == 0 {
            ("snp", "#4a4a4a", 2.5)
        } else {
            ("snp", "#9a9a9a", 2.5)
        };
        let _ = writeln!(
            s,
            r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="{radius}" fill="{fill}"><title>{} p={:e}</title></circle>"#,
            px(i),
            py(v),
            r.snp_id,
            r.pvalue
        );
    }
    let _ = writeln!(s, "</g>");

    let yt = py(t);
    let _ = writeln!(
        s,
        r##"<line class="threshold" data-neg-log10-p="{t}" x1="{x0}" y1="{yt:.2}" x2="{x1}" y2="{yt:.2}" stroke="#808080" stroke-dasharray="2 3"/>"##
    );
    let _ = writeln!(s, "</svg>");
    s
}

fn tick_step(y_max: f64) -> f64 {
    let raw = y_max / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|&s| s >= raw).unwrap_or(10.0 * mag)
}
