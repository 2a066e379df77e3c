//! Self-contained SVG line charts: inline axes, ticks, legend, and series
//! polylines with no external assets, so the output is a single diffable
//! file. Rendering is a pure function of the chart description.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 52.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Round a positive raw step up to the nearest 1/2/5 × 10^k.
fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let factor = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    factor * mag
}

/// Tick positions covering [min, max] with a 1/2/5-step.
fn ticks(min: f64, max: f64) -> Vec<f64> {
    let step = nice_step((max - min) / 4.0);
    let first = (min / step).ceil() * step;
    let mut out = Vec::new();
    let mut t = first;
    while t <= max + step * 1e-9 {
        // Snap values like 0.30000000000000004 back onto the grid.
        out.push((t / step).round() * step);
        t += step;
    }
    out
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        return format!("{v:e}");
    }
    let mut s = format!("{v:.6}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

impl LineChart {
    pub fn render(&self) -> String {
        let points: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .collect();
        assert!(
            !points.is_empty(),
            "cannot render a chart with no data points"
        );

        let (mut x_min, mut x_max) = bounds(points.iter().map(|p| p.0));
        let (mut y_min, mut y_max) = bounds(points.iter().map(|p| p.1));
        pad_range(&mut x_min, &mut x_max);
        pad_range(&mut y_min, &mut y_max);

        let sx = |x: f64| {
            MARGIN_LEFT + (x - x_min) / (x_max - x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
        };
        let sy = |y: f64| {
            HEIGHT - MARGIN_BOTTOM
                - (y - y_min) / (y_max - y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
        };

        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"Helvetica,Arial,sans-serif\">\n"
        ));
        svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" \
             font-weight=\"bold\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        ));

        // Gridlines and tick labels.
        for t in ticks(x_min, x_max) {
            let x = sx(t);
            svg.push_str(&format!(
                "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
                 stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
                sy(y_max),
                sy(y_min),
            ));
            svg.push_str(&format!(
                "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
                HEIGHT - MARGIN_BOTTOM + 18.0,
                fmt_num(t)
            ));
        }
        for t in ticks(y_min, y_max) {
            let y = sy(t);
            svg.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
                 stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
                sx(x_min),
                sx(x_max),
            ));
            svg.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\">{}</text>\n",
                MARGIN_LEFT - 8.0,
                y + 4.0,
                fmt_num(t)
            ));
        }

        // Axes.
        svg.push_str(&format!(
            "<line x1=\"{l:.2}\" y1=\"{b:.2}\" x2=\"{r:.2}\" y2=\"{b:.2}\" stroke=\"black\" \
             stroke-width=\"1.5\"/>\n<line x1=\"{l:.2}\" y1=\"{t:.2}\" x2=\"{l:.2}\" y2=\"{b:.2}\" \
             stroke=\"black\" stroke-width=\"1.5\"/>\n",
            l = MARGIN_LEFT,
            r = WIDTH - MARGIN_RIGHT,
            t = MARGIN_TOP,
            b = HEIGHT - MARGIN_BOTTOM,
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
            (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        ));
        svg.push_str(&format!(
            "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\" \
             transform=\"rotate(-90 18 {:.2})\">{}</text>\n",
            (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
            (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
            escape(&self.y_label)
        ));

        // Series.
        for (idx, series) in self.series.iter().enumerate() {
            let color = PALETTE[idx % PALETTE.len()];
            if series.points.len() > 1 {
                let coords: Vec<String> = series
                    .points
                    .iter()
                    .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                    .collect();
                svg.push_str(&format!(
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" \
                     points=\"{}\"/>\n",
                    coords.join(" ")
                ));
            }
            for &(x, y) in &series.points {
                svg.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                    sx(x),
                    sy(y)
                ));
            }
        }

        // Legend, top-right inside the plot area.
        let legend_x = WIDTH - MARGIN_RIGHT - 130.0;
        let mut legend_y = MARGIN_TOP + 10.0;
        for (idx, series) in self.series.iter().enumerate() {
            let color = PALETTE[idx % PALETTE.len()];
            svg.push_str(&format!(
                "<line x1=\"{legend_x:.2}\" y1=\"{legend_y:.2}\" x2=\"{:.2}\" \
                 y2=\"{legend_y:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                legend_x + 24.0
            ));
            svg.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">{}</text>\n",
                legend_x + 30.0,
                legend_y + 4.0,
                escape(&series.label)
            ));
            legend_y += 18.0;
        }

        svg.push_str("</svg>\n");
        svg
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}

fn pad_range(min: &mut f64, max: &mut f64) {
    if *min == *max {
        let pad = if *min == 0.0 { 1.0 } else { min.abs() * 0.5 };
        *min -= pad;
        *max += pad;
    } else {
        let pad = (*max - *min) * 0.05;
        *min -= pad;
        *max += pad;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_chart() -> LineChart {
        LineChart {
            title: "quality <vs> noise & batch".to_string(),
            x_label: "sigma".to_string(),
            y_label: "tnr".to_string(),
            series: vec![
                Series {
                    label: "p = 1".to_string(),
                    points: vec![(0.0, 1.0), (0.25, 0.8), (0.5, 0.55)],
                },
                Series {
                    label: "p = 3".to_string(),
                    points: vec![(0.0, 1.0), (0.25, 0.9), (0.5, 0.7)],
                },
            ],
        }
    }

    #[test]
    fn renders_axes_series_and_legend() {
        let svg = sample_chart().render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 6);
        assert!(svg.contains("p = 1") && svg.contains("p = 3"));
        assert!(svg.contains("sigma") && svg.contains("tnr"));
        // XML escaping of the title.
        assert!(svg.contains("quality &lt;vs&gt; noise &amp; batch"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn rendering_is_deterministic() {
        assert_eq!(sample_chart().render(), sample_chart().render());
    }

    #[test]
    fn single_point_series_does_not_degenerate() {
        let chart = LineChart {
            title: "one".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series {
                label: "s".into(),
                points: vec![(2.0, 3.0)],
            }],
        };
        let svg = chart.render();
        assert!(svg.contains("<circle"));
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn ticks_cover_the_range_with_nice_steps() {
        // Raw step 0.5/4 = 0.125 rounds up to 0.2 on the 1/2/5 grid.
        let t = ticks(0.0, 0.5);
        assert_eq!(t.len(), 3);
        assert!(t[0].abs() < 1e-12);
        for pair in t.windows(2) {
            assert!((pair[1] - pair[0] - 0.2).abs() < 1e-12);
        }
        assert_eq!(fmt_num(0.30000000000000004), "0.3");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(2e-7), "2e-7");
    }
}
