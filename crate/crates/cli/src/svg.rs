use histomil::stats::{BoxplotSummary, StarLabel};

const WIDTH: f64 = 420.0;
const HEIGHT: f64 = 320.0;
const PLOT_LEFT: f64 = 70.0;
const PLOT_RIGHT: f64 = 390.0;
const PLOT_TOP: f64 = 56.0;
const PLOT_BOTTOM: f64 = 280.0;

pub struct BoxplotGroup<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub summary: &'a BoxplotSummary,
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// Self-contained deterministic SVG: one box per group with 1.5 IQR
/// whiskers, outlier circles, and the significance stars centered above.
pub fn boxplot_svg(title: &str, groups: &[BoxplotGroup], stars: StarLabel) -> String {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for g in groups {
        lo = lo.min(g.summary.whisker_low);
        hi = hi.max(g.summary.whisker_high);
        for &o in &g.summary.outliers {
            lo = lo.min(o);
            hi = hi.max(o);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let pad = 0.06 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let y = |v: f64| PLOT_BOTTOM - (v - lo) / (hi - lo) * (PLOT_BOTTOM - PLOT_TOP);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n",
        WIDTH / 2.0
    ));
    // axis with min/max labels
    svg.push_str(&format!(
        "  <line x1=\"{PLOT_LEFT}\" y1=\"{PLOT_TOP}\" x2=\"{PLOT_LEFT}\" y2=\"{PLOT_BOTTOM}\" stroke=\"#444\"/>\n"
    ));
    for (v, anchor_y) in [(hi, PLOT_TOP), (lo, PLOT_BOTTOM)] {
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"11\">{}</text>\n",
            PLOT_LEFT - 6.0,
            anchor_y + 4.0,
            fmt(v)
        ));
    }

    let slot = (PLOT_RIGHT - PLOT_LEFT) / groups.len() as f64;
    let box_w = (slot * 0.4).min(70.0);
    for (i, g) in groups.iter().enumerate() {
        let cx = PLOT_LEFT + slot * (i as f64 + 0.5);
        let s = g.summary;
        // whisker line and caps
        svg.push_str(&format!(
            "  <line x1=\"{cx}\" y1=\"{}\" x2=\"{cx}\" y2=\"{}\" stroke=\"#333\"/>\n",
            fmt_f(y(s.whisker_high)),
            fmt_f(y(s.whisker_low))
        ));
        for v in [s.whisker_low, s.whisker_high] {
            svg.push_str(&format!(
                "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\"/>\n",
                fmt_f(cx - box_w / 4.0),
                fmt_f(y(v)),
                fmt_f(cx + box_w / 4.0),
                fmt_f(y(v))
            ));
        }
        // interquartile box and median
        svg.push_str(&format!(
            "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#333\"/>\n",
            fmt_f(cx - box_w / 2.0),
            fmt_f(y(s.q3)),
            fmt_f(box_w),
            fmt_f((y(s.q1) - y(s.q3)).max(0.5)),
            g.color
        ));
        svg.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000\" stroke-width=\"1.5\"/>\n",
            fmt_f(cx - box_w / 2.0),
            fmt_f(y(s.median)),
            fmt_f(cx + box_w / 2.0),
            fmt_f(y(s.median))
        ));
        for &o in &s.outliers {
            svg.push_str(&format!(
                "  <circle cx=\"{cx}\" cy=\"{}\" r=\"2.5\" fill=\"none\" stroke=\"#333\"/>\n",
                fmt_f(y(o))
            ));
        }
        svg.push_str(&format!(
            "  <text x=\"{cx}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
            PLOT_BOTTOM + 20.0,
            g.name
        ));
    }

    // significance bracket between the first two groups
    if groups.len() >= 2 {
        let x1 = PLOT_LEFT + slot * 0.5;
        let x2 = PLOT_LEFT + slot * 1.5;
        let yb = PLOT_TOP - 10.0;
        svg.push_str(&format!(
            "  <line x1=\"{x1}\" y1=\"{yb}\" x2=\"{x2}\" y2=\"{yb}\" stroke=\"#000\"/>\n"
        ));
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
            (x1 + x2) / 2.0,
            yb - 4.0,
            stars.as_str()
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn fmt_f(v: f64) -> String {
    format!("{v:.2}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use histomil::stats::boxplot_summary;

    #[test]
    fn svg_is_deterministic_and_carries_stars() {
        let a = boxplot_summary(&[1.0, 2.0, 3.0, 4.0, 10.0]).unwrap();
        let b = boxplot_summary(&[5.0, 6.0, 7.0]).unwrap();
        let groups = [
            BoxplotGroup {
                name: "normoxic",
                color: "#7fa8d9",
                summary: &a,
            },
            BoxplotGroup {
                name: "hypoxic",
                color: "#e8a26b",
                summary: &b,
            },
        ];
        let s1 = boxplot_svg("homogeneity", &groups, StarLabel::P01);
        let s2 = boxplot_svg("homogeneity", &groups, StarLabel::P01);
        assert_eq!(s1, s2);
        assert!(s1.contains("**"));
        assert!(s1.contains("homogeneity"));
        assert!(s1.contains("<circle")); // the outlier at 10
    }
}
