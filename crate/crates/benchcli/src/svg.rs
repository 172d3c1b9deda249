//! Minimal SVG error-bar charts, written by hand so figures need no
//! external tooling.  One chart = one metric against the greedy step size,
//! one series per dictionary, a point per step size with a mean marker and
//! a +/- one standard deviation bar.

/// One plotted line: `(x, mean, std)` triples in x order.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 52.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const TICKS: usize = 5;

/// Render an error-bar chart as a standalone SVG document.
///
/// Empty input (no series, or series with no points) yields a chart with
/// axes and a "no data" note rather than an error: figure emission decides
/// separately whether a chart is worth writing at all.
pub fn error_bar_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in series {
        for &(x, mean, std) in &s.points {
            xs.push(x);
            ys.push(mean - std);
            ys.push(mean + std);
        }
    }
    let (x_lo, x_hi) = padded_range(&xs);
    let (y_lo, y_hi) = padded_range(&ys);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        (
            MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w,
            MARGIN_TOP + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h,
        )
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "  <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));

    // Gridlines and tick labels.
    for t in 0..=TICKS {
        let frac = t as f64 / TICKS as f64;
        let y_val = y_lo + frac * (y_hi - y_lo);
        let (_, py) = to_px(x_lo, y_val);
        out.push_str(&format!(
            "  <line x1=\"{MARGIN_LEFT}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" \
             stroke=\"#dddddd\"/>\n",
            WIDTH - MARGIN_RIGHT
        ));
        out.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 6.0,
            py + 4.0,
            tick_label(y_val)
        ));
        let x_val = x_lo + frac * (x_hi - x_lo);
        let (px, _) = to_px(x_val, y_lo);
        out.push_str(&format!(
            "  <text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            HEIGHT - MARGIN_BOTTOM + 18.0,
            tick_label(x_val)
        ));
    }

    // Axes.
    out.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT}\" y1=\"{MARGIN_TOP}\" x2=\"{MARGIN_LEFT}\" y2=\"{:.1}\" \
         stroke=\"black\"/>\n",
        HEIGHT - MARGIN_BOTTOM
    ));
    out.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_BOTTOM,
        WIDTH - MARGIN_RIGHT,
        HEIGHT - MARGIN_BOTTOM
    ));
    out.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    ));
    out.push_str(&format!(
        "  <text x=\"16\" y=\"{}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {})\">{}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(y_label)
    ));

    if xs.is_empty() {
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"#888888\">no data</text>\n",
            MARGIN_LEFT + plot_w / 2.0,
            MARGIN_TOP + plot_h / 2.0
        ));
    }

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        // Connecting line through the means.
        if s.points.len() > 1 {
            let path: Vec<String> = s
                .points
                .iter()
                .map(|&(x, mean, _)| {
                    let (px, py) = to_px(x, mean);
                    format!("{px:.1},{py:.1}")
                })
                .collect();
            out.push_str(&format!(
                "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                path.join(" ")
            ));
        }
        // Error bars with caps, then mean markers.
        for &(x, mean, std) in &s.points {
            let (px, py_lo) = to_px(x, mean - std);
            let (_, py_hi) = to_px(x, mean + std);
            out.push_str(&format!(
                "  <line x1=\"{px:.1}\" y1=\"{py_lo:.1}\" x2=\"{px:.1}\" y2=\"{py_hi:.1}\" \
                 stroke=\"{color}\"/>\n"
            ));
            for py in [py_lo, py_hi] {
                out.push_str(&format!(
                    "  <line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" \
                     stroke=\"{color}\"/>\n",
                    px - 4.0,
                    px + 4.0
                ));
            }
            let (px, py) = to_px(x, mean);
            out.push_str(&format!(
                "  <circle cx=\"{px:.1}\" cy=\"{py:.1}\" r=\"3\" fill=\"{color}\"/>\n"
            ));
        }
        // Legend entry.
        let ly = MARGIN_TOP + 6.0 + 16.0 * si as f64;
        let lx = WIDTH - MARGIN_RIGHT - 130.0;
        out.push_str(&format!(
            "  <rect x=\"{lx}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n",
            ly - 9.0
        ));
        out.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{ly}\">{}</text>\n",
            lx + 14.0,
            escape(&s.label)
        ));
    }

    out.push_str("</svg>\n");
    out
}

/// Data range padded so points never sit on the frame; degenerate ranges
/// get a unit of breathing room.
fn padded_range(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span <= 0.0 {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo - 0.05 * span, hi + 0.05 * span)
    }
}

/// Compact tick formatting: fixed-point in a friendly range, scientific
/// outside it.
fn tick_label(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".to_string()
    } else if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
