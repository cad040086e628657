//! Minimal SVG bar charts rendered from report values.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 70.0;
const PALETTE: [&str; 4] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52"];

/// One bar (or one group of bars) along the category axis.
#[derive(Debug, Clone)]
pub struct BarGroup {
    pub label: String,
    /// One value per series; `None` leaves a gap.
    pub values: Vec<Option<f64>>,
    pub intervals: Vec<Option<(f64, f64)>>,
}

#[derive(Debug, Clone)]
pub struct BarChart {
    pub title: String,
    pub category_label: String,
    pub value_label: String,
    pub series: Vec<String>,
    pub groups: Vec<BarGroup>,
}

impl BarChart {
    fn value_range(&self) -> (f64, f64) {
        let mut lo: f64 = 0.0;
        let mut hi: f64 = 0.0;
        for g in &self.groups {
            for v in g.values.iter().flatten() {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
            for (a, b) in g.intervals.iter().flatten() {
                lo = lo.min(*a);
                hi = hi.max(*b);
            }
        }
        if hi - lo < 1e-12 {
            hi = lo + 1.0;
        }
        let pad = 0.05 * (hi - lo);
        (if lo < 0.0 { lo - pad } else { lo }, if hi > 0.0 { hi + pad } else { hi })
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn header(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn legend(svg: &mut String, series: &[String]) {
    if series.len() < 2 {
        return;
    }
    for (i, name) in series.iter().enumerate() {
        let x = WIDTH - MARGIN_RIGHT - 160.0;
        let y = MARGIN_TOP + 6.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{x:.1}" y="{y:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            PALETTE[i % PALETTE.len()],
            x + 18.0,
            y + 10.0,
            escape(name)
        );
    }
}

/// Vertical grouped bars with optional interval whiskers.
pub fn vertical_bars(chart: &BarChart) -> String {
    let mut svg = String::new();
    header(&mut svg, &chart.title);
    let (lo, hi) = chart.value_range();
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let y = |v: f64| MARGIN_TOP + (hi - v) / (hi - lo) * plot_h;

    for t in ticks(lo, hi) {
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT}" x2="{:.1}" y1="{yy:.1}" y2="{yy:.1}" stroke="#e0e0e0"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            WIDTH - MARGIN_RIGHT,
            MARGIN_LEFT - 6.0,
            y(t) + 4.0,
            fmt_tick(t),
            yy = y(t)
        );
    }
    let n_groups = chart.groups.len().max(1) as f64;
    let n_series = chart.series.len().max(1) as f64;
    let slot = plot_w / n_groups;
    let bar_w = slot * 0.8 / n_series;
    for (gi, g) in chart.groups.iter().enumerate() {
        let x0 = MARGIN_LEFT + slot * gi as f64 + slot * 0.1;
        for (si, v) in g.values.iter().enumerate() {
            let x = x0 + bar_w * si as f64;
            if let Some(v) = v {
                let (top, bottom) = (y(v.max(0.0)), y(v.min(0.0)));
                let _ = writeln!(
                    svg,
                    r#"<rect x="{x:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
                    bar_w * 0.92,
                    (bottom - top).max(0.5),
                    PALETTE[si % PALETTE.len()]
                );
            }
            if let Some(Some((a, b))) = g.intervals.get(si) {
                let cx = x + bar_w * 0.46;
                let _ = writeln!(
                    svg,
                    r#"<path d="M{cx:.1} {:.1}V{:.1}M{:.1} {:.1}H{:.1}M{:.1} {:.1}H{:.1}" stroke="black" fill="none"/>"#,
                    y(*a),
                    y(*b),
                    cx - 4.0,
                    y(*a),
                    cx + 4.0,
                    cx - 4.0,
                    y(*b),
                    cx + 4.0
                );
            }
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + slot * (gi as f64 + 0.5),
            HEIGHT - MARGIN_BOTTOM + 18.0,
            escape(&g.label)
        );
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN_LEFT}" x2="{:.1}" y1="{z:.1}" y2="{z:.1}" stroke="black"/>"#,
        WIDTH - MARGIN_RIGHT,
        z = y(0.0)
    );
    axis_labels(&mut svg, &chart.category_label, &chart.value_label);
    legend(&mut svg, &chart.series);
    svg.push_str("</svg>\n");
    svg
}

/// Horizontal bars (first series only), top to bottom in group order.
pub fn horizontal_bars(chart: &BarChart) -> String {
    let mut svg = String::new();
    header(&mut svg, &chart.title);
    let left = 160.0;
    let (lo, hi) = chart.value_range();
    let plot_w = WIDTH - left - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x = |v: f64| left + (v - lo) / (hi - lo) * plot_w;
    for t in ticks(lo, hi) {
        let _ = writeln!(
            svg,
            r##"<line x1="{xx:.1}" x2="{xx:.1}" y1="{MARGIN_TOP}" y2="{:.1}" stroke="#e0e0e0"/><text x="{xx:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
            HEIGHT - MARGIN_BOTTOM,
            HEIGHT - MARGIN_BOTTOM + 16.0,
            fmt_tick(t),
            xx = x(t)
        );
    }
    let slot = plot_h / chart.groups.len().max(1) as f64;
    for (gi, g) in chart.groups.iter().enumerate() {
        let y0 = MARGIN_TOP + slot * gi as f64;
        if let Some(Some(v)) = g.values.first() {
            let (a, b) = (x(v.min(0.0)), x(v.max(0.0)));
            let _ = writeln!(
                svg,
                r#"<rect x="{a:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
                y0 + slot * 0.15,
                (b - a).max(0.5),
                slot * 0.7,
                PALETTE[0]
            );
        }
        if let Some(Some((a, b))) = g.intervals.first() {
            let cy = y0 + slot * 0.5;
            let _ = writeln!(
                svg,
                r#"<path d="M{:.1} {cy:.1}H{:.1}" stroke="black" fill="none"/>"#,
                x(*a),
                x(*b)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y0 + slot * 0.5 + 4.0,
            escape(&g.label)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        left + plot_w / 2.0,
        HEIGHT - 24.0,
        escape(&chart.value_label)
    );
    svg.push_str("</svg>\n");
    svg
}

fn axis_labels(svg: &mut String, category: &str, value: &str) {
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2.0,
        HEIGHT - 24.0,
        escape(category)
    );
    let cy = MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0;
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{cy:.1}" text-anchor="middle" transform="rotate(-90 18 {cy:.1})">{}</text>"#,
        escape(value)
    );
}

fn fmt_tick(t: f64) -> String {
    let s = format!("{t:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        let t = ticks(0.0, 1.0);
        assert_eq!(t.len(), 6);
        assert!(t.iter().zip([0.0, 0.2, 0.4, 0.6, 0.8, 1.0]).all(|(a, b)| (a - b).abs() < 1e-12));
        let t = ticks(-0.33, 0.42);
        assert!(t.contains(&0.0));
        assert!(t.iter().all(|v| (-0.33..=0.42).contains(v)));
    }

    #[test]
    fn chart_contains_bars_and_labels() {
        let chart = BarChart {
            title: "A <b>".into(),
            category_label: "quantile".into(),
            value_label: "uplift".into(),
            series: vec!["uplift".into()],
            groups: vec![
                BarGroup { label: "1".into(), values: vec![Some(-0.2)], intervals: vec![Some((-0.4, 0.0))] },
                BarGroup { label: "2".into(), values: vec![None], intervals: vec![None] },
            ],
        };
        let svg = vertical_bars(&chart);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("A &lt;b&gt;"));
        assert_eq!(svg.matches("<rect").count(), 2);
        assert!(horizontal_bars(&chart).ends_with("</svg>\n"));
    }
}
