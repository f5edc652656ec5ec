//! Self-contained SVG line charts with a logarithmic y-axis.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(usize, f64)>,
}

/// Renders exploitability curves against the step count. A dashed vertical
/// line marks the training horizon when `horizon` lies inside the x range.
/// Output depends only on the inputs.
pub fn line_chart(title: &str, series: &[Series], horizon: Option<usize>) -> String {
    let max_step = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .max()
        .unwrap_or(1)
        .max(2);
    let positive: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .filter(|v| *v > 0.0 && v.is_finite())
        .collect();
    let lo = positive.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = positive.iter().cloned().fold(0.0, f64::max);
    let (dec_lo, dec_hi) = if positive.is_empty() {
        (-3, 0)
    } else {
        let a = lo.log10().floor() as i32;
        let b = hi.log10().ceil() as i32;
        (a, b.max(a + 1))
    };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_of = |step: usize| LEFT + (step as f64 - 1.0) / (max_step as f64 - 1.0) * plot_w;
    let y_of = |v: f64| {
        let floor = 10f64.powi(dec_lo);
        let l = v.max(floor).log10();
        TOP + (dec_hi as f64 - l) / (dec_hi - dec_lo) as f64 * plot_h
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="18" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    for d in dec_lo..=dec_hi {
        let y = y_of(10f64.powi(d));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for tick in x_ticks(max_step) {
        let x = x_of(tick);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{tick}</text>"#,
            TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">step</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">exploitability</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    if let Some(t) = horizon.filter(|t| (1..=max_step).contains(t)) {
        let x = x_of(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6,4"/>"#,
            TOP + plot_h
        );
    }
    for (i, series) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .map(|&(step, v)| format!("{:.2},{:.2}", x_of(step), y_of(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(series.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn x_ticks(max_step: usize) -> Vec<usize> {
    let mut ticks = vec![1];
    let step = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024]
        .into_iter()
        .find(|s| max_step / s <= 8)
        .unwrap_or(max_step / 8);
    let mut t = step;
    while t <= max_step {
        if t > 1 {
            ticks.push(t);
        }
        t += step;
    }
    ticks
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
