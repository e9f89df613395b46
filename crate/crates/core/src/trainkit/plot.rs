//! Minimal SVG line charts for max-normalized loss curves.

use std::fmt::Write;

use crate::metrics::LossCurve;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 140.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Upper end of the y axis; curves are normalized to a maximum of 1.
pub const Y_MAX: f64 = 1.0;

fn fmt_num(v: f64) -> String {
    format!("{v:.2}")
}

/// Renders one polyline per curve against epoch (1-based) on the x axis and
/// `[0, 1]` on the y axis.
pub fn loss_curves_svg(labels: &[String], curves: &[LossCurve]) -> String {
    let epochs = curves.iter().map(|c| c.len()).max().unwrap_or(1).max(2);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |e: usize| MARGIN_LEFT + (e - 1) as f64 / (epochs - 1) as f64 * plot_w;
    let y_of = |v: f64| MARGIN_TOP + (1.0 - v.clamp(0.0, Y_MAX) / Y_MAX) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-y-max="{}">"#,
        fmt_num(Y_MAX)
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<g stroke="black" stroke-width="1"><line x1="{l}" y1="{t}" x2="{l}" y2="{b}"/><line x1="{l}" y1="{b}" x2="{r}" y2="{b}"/></g>"#,
        l = MARGIN_LEFT,
        t = MARGIN_TOP,
        b = MARGIN_TOP + plot_h,
        r = MARGIN_LEFT + plot_w
    );
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="11" fill="black">"#);
    for i in 0..=4 {
        let v = Y_MAX * i as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w,
            MARGIN_LEFT - 6.0,
            y + 4.0,
            fmt_num(v)
        );
    }
    let ticks = 5.min(epochs - 1);
    for i in 0..=ticks {
        let e = 1 + (epochs - 1) * i / ticks;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{e}</text>"#,
            x_of(e),
            MARGIN_TOP + plot_h + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">epoch</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">normalized loss</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );
    let _ = writeln!(s, "</g>");

    for (i, (label, curve)) in labels.iter().zip(curves).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = curve
            .values()
            .iter()
            .enumerate()
            .map(|(e, &v)| format!("{:.2},{:.2}", x_of(e + 1), y_of(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = MARGIN_TOP + 14.0 + 18.0 * i as f64;
        let lx = MARGIN_LEFT + plot_w + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_one_polyline_per_curve() {
        let curves = vec![
            LossCurve::new(vec![1.0, 0.5, 0.2]).unwrap(),
            LossCurve::new(vec![1.0, 0.8, 0.7]).unwrap(),
        ];
        let svg = loss_curves_svg(&["mse".into(), "g<1>".into()], &curves);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(r#"data-y-max="1.00""#));
        assert!(svg.contains("g&lt;1&gt;"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
