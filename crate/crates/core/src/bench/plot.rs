//! SVG charts of the summary table: one chart per `vars_per_slice`, with a
//! panel per method kind, the number of slices on the x axis and the
//! median gap per slice on the y axis. Error bars span the 25th to 75th
//! percentiles.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::bench::run::MethodKind;
use crate::bench::summary::SummaryRow;

const PANEL_W: f64 = 260.0;
const PANEL_H: f64 = 220.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const GAP: f64 = 30.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const KINDS: [MethodKind; 3] = [MethodKind::Mixture, MethodKind::Vertical, MethodKind::Horizontal];

fn panel_title(kind: MethodKind) -> &'static str {
    match kind {
        MethodKind::Mixture => "Mixture",
        MethodKind::Vertical => "Vertical",
        MethodKind::Horizontal => "Horizontal",
    }
}

fn series_label(kind: MethodKind, variant: usize) -> String {
    match kind {
        MethodKind::Mixture => format!("{variant} comp."),
        _ => format!("|V| = {variant}"),
    }
}

/// Tick positions at a round step covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// Renders the rows with the given `vars_per_slice` as an SVG document.
/// Panels share the y scale. Rows with non-finite statistics are skipped.
pub fn render_svg(rows: &[SummaryRow], vars_per_slice: usize) -> String {
    let rows: Vec<&SummaryRow> = rows
        .iter()
        .filter(|r| r.vars_per_slice == vars_per_slice)
        .filter(|r| r.median.is_finite() && r.p25.is_finite() && r.p75.is_finite())
        .collect();
    let slices: BTreeSet<usize> = rows.iter().map(|r| r.slices).collect();
    let (x_lo, x_hi) = match (slices.first(), slices.last()) {
        (Some(&a), Some(&b)) if a < b => (a as f64, b as f64),
        (Some(&a), _) => (a as f64 - 0.5, a as f64 + 0.5),
        _ => (0.0, 1.0),
    };
    let y_hi = rows.iter().map(|r| r.p75).fold(0.0, f64::max);
    let y_lo = rows.iter().map(|r| r.p25).fold(0.0, f64::min);
    let y_hi = if y_hi > y_lo { y_hi * 1.05 } else { y_lo + 1.0 };

    let width = MARGIN_L + 3.0 * PANEL_W + 2.0 * GAP + 20.0;
    let height = MARGIN_T + PANEL_H + MARGIN_B + 60.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="16" text-anchor="middle" font-size="13">{vars_per_slice} variables per slice</text>"#,
        width / 2.0
    );

    for (pi, kind) in KINDS.iter().enumerate() {
        let left = MARGIN_L + pi as f64 * (PANEL_W + GAP);
        let top = MARGIN_T;
        let px = |x: f64| left + (x - x_lo) / (x_hi - x_lo) * PANEL_W;
        let py = |y: f64| top + PANEL_H - (y - y_lo) / (y_hi - y_lo) * PANEL_H;

        let _ = writeln!(s, r#"<g class="panel" data-method="{}">"#, kind.as_str());
        let _ = writeln!(
            s,
            r#"<rect x="{left}" y="{top}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
            left + PANEL_W / 2.0,
            top - 6.0,
            panel_title(*kind)
        );
        for &x in &slices {
            let xp = px(x as f64);
            let _ = writeln!(
                s,
                r#"<line x1="{xp:.2}" y1="{b:.2}" x2="{xp:.2}" y2="{b2:.2}" stroke="black"/><text x="{xp:.2}" y="{t:.2}" text-anchor="middle">{x}</text>"#,
                b = top + PANEL_H,
                b2 = top + PANEL_H + 4.0,
                t = top + PANEL_H + 16.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">slices</text>"#,
            left + PANEL_W / 2.0,
            top + PANEL_H + 32.0
        );
        for t in ticks(y_lo, y_hi) {
            let yp = py(t);
            let _ = writeln!(
                s,
                r#"<line x1="{l:.2}" y1="{yp:.2}" x2="{left:.2}" y2="{yp:.2}" stroke="black"/><text x="{tx:.2}" y="{ty:.2}" text-anchor="end">{}</text>"#,
                fmt_tick(t),
                l = left - 4.0,
                tx = left - 6.0,
                ty = yp + 4.0
            );
        }
        if pi == 0 {
            let _ = writeln!(
                s,
                r#"<text x="14" y="{y:.2}" text-anchor="middle" transform="rotate(-90 14 {y:.2})">gap per slice</text>"#,
                y = top + PANEL_H / 2.0
            );
        }

        let variants: BTreeSet<usize> = rows.iter().filter(|r| r.method == *kind).map(|r| r.variant).collect();
        for (si, &variant) in variants.iter().enumerate() {
            let color = COLORS[si % COLORS.len()];
            let mut series: Vec<&&SummaryRow> =
                rows.iter().filter(|r| r.method == *kind && r.variant == variant).collect();
            series.sort_by_key(|r| r.slices);
            let _ = writeln!(s, r#"<g class="series" data-variant="{variant}" stroke="{color}" fill="{color}">"#);
            let points: Vec<String> =
                series.iter().map(|r| format!("{:.2},{:.2}", px(r.slices as f64), py(r.median))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" points="{}"/>"#, points.join(" "));
            for r in &series {
                let xp = px(r.slices as f64);
                let _ = writeln!(
                    s,
                    r#"<line x1="{xp:.2}" y1="{:.2}" x2="{xp:.2}" y2="{:.2}"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/><circle cx="{xp:.2}" cy="{:.2}" r="2.5"/>"#,
                    py(r.p25),
                    py(r.p75),
                    xp - 3.0,
                    py(r.p25),
                    xp + 3.0,
                    py(r.p25),
                    xp - 3.0,
                    py(r.p75),
                    xp + 3.0,
                    py(r.p75),
                    py(r.median)
                );
            }
            let ly = top + PANEL_H + 46.0;
            let lx = left + si as f64 * (PANEL_W / 3.0);
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}"/><text x="{:.2}" y="{:.2}" stroke="none" fill="black">{}</text>"#,
                lx + 14.0,
                lx + 18.0,
                ly + 4.0,
                series_label(*kind, variant)
            );
            let _ = writeln!(s, "</g>");
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_range() {
        let t = ticks(0.0, 0.37);
        assert_eq!(t.first(), Some(&0.0));
        assert!(*t.last().unwrap() <= 0.37 + 1e-12);
        assert!(t.len() >= 3);
    }

    #[test]
    fn empty_rows_still_render() {
        let svg = render_svg(&[], 3);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches(r#"class="panel""#).count(), 3);
    }
}
