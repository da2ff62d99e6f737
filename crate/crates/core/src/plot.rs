//! Minimal inline SVG plots (no external renderer). CSV files are the data
//! contract; these are a convenience for eyeballing spectra and
//! trajectories.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: &str, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.to_string(),
            points,
        }
    }
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn around(series: &[Series], extra: &[(f64, f64)]) -> Frame {
        let mut pts: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.clone()).collect();
        pts.extend_from_slice(extra);
        if pts.is_empty() {
            pts.push((0.0, 0.0));
        }
        let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in &pts {
            x_min = x_min.min(*x);
            x_max = x_max.max(*x);
            y_min = y_min.min(*y);
            y_max = y_max.max(*y);
        }
        let pad = |lo: &mut f64, hi: &mut f64| {
            let span = (*hi - *lo).abs().max(1e-9);
            *lo -= 0.05 * span;
            *hi += 0.05 * span;
        };
        pad(&mut x_min, &mut x_max);
        pad(&mut y_min, &mut y_max);
        Frame {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    fn map(&self, p: (f64, f64)) -> (f64, f64) {
        let sx = (WIDTH - 2.0 * MARGIN) / (self.x_max - self.x_min);
        let sy = (HEIGHT - 2.0 * MARGIN) / (self.y_max - self.y_min);
        (
            MARGIN + (p.0 - self.x_min) * sx,
            HEIGHT - MARGIN - (p.1 - self.y_min) * sy,
        )
    }
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    )
}

fn axes(frame: &Frame) -> String {
    let mut s = format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" \
         stroke=\"#444\" stroke-width=\"1\"/>\n",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let label = |x: f64, y: f64, text: String, anchor: &str| {
        format!(
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" \
             font-size=\"11\" fill=\"#444\">{text}</text>\n"
        )
    };
    s += &label(
        MARGIN,
        HEIGHT - MARGIN + 16.0,
        format!("{:.3}", frame.x_min),
        "start",
    );
    s += &label(
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 16.0,
        format!("{:.3}", frame.x_max),
        "end",
    );
    s += &label(
        MARGIN - 4.0,
        HEIGHT - MARGIN,
        format!("{:.3}", frame.y_min),
        "end",
    );
    s += &label(MARGIN - 4.0, MARGIN + 4.0, format!("{:.3}", frame.y_max), "end");
    // Zero axes when inside the frame.
    if frame.y_min < 0.0 && frame.y_max > 0.0 {
        let (x0, y0) = frame.map((frame.x_min, 0.0));
        let (x1, _) = frame.map((frame.x_max, 0.0));
        s += &format!(
            "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"#bbb\" \
             stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n"
        );
    }
    if frame.x_min < 0.0 && frame.x_max > 0.0 {
        let (x0, y0) = frame.map((0.0, frame.y_min));
        let (_, y1) = frame.map((0.0, frame.y_max));
        s += &format!(
            "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"#bbb\" \
             stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n"
        );
    }
    s
}

fn legend(series: &[Series]) -> String {
    let mut s = String::new();
    for (i, sr) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN + 16.0 * i as f64 + 8.0;
        s += &format!(
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n\
             <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            WIDTH - MARGIN - 130.0,
            y - 9.0,
            WIDTH - MARGIN - 116.0,
            y,
            escape(&sr.label)
        );
    }
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Polyline plot of one or more series.
pub fn line_plot(title: &str, series: &[Series]) -> String {
    let frame = Frame::around(series, &[]);
    let mut svg = header(title);
    svg += &axes(&frame);
    for (i, sr) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = sr
            .points
            .iter()
            .map(|&p| {
                let (x, y) = frame.map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        svg += &format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        );
    }
    svg += &legend(series);
    svg += "</svg>\n";
    svg
}

/// Marker plot with optional ray segments (used for spectra against the
/// stability boundary).
pub fn scatter_plot(title: &str, groups: &[Series], rays: &[[(f64, f64); 2]]) -> String {
    let ray_points: Vec<(f64, f64)> = rays.iter().flatten().copied().collect();
    let frame = Frame::around(groups, &ray_points);
    let mut svg = header(title);
    svg += &axes(&frame);
    for ray in rays {
        let (x0, y0) = frame.map(ray[0]);
        let (x1, y1) = frame.map(ray[1]);
        svg += &format!(
            "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x1:.2}\" y2=\"{y1:.2}\" \
             stroke=\"#888\" stroke-width=\"1.2\" stroke-dasharray=\"6 4\"/>\n"
        );
    }
    for (i, g) in groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for &p in &g.points {
            let (x, y) = frame.map(p);
            svg += &format!(
                "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"{color}\" \
                 fill-opacity=\"0.75\"/>\n"
            );
        }
    }
    svg += &legend(groups);
    svg += "</svg>\n";
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_renders_each_series() {
        let s = vec![
            Series::new("x1", vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.25)]),
            Series::new("x2", vec![(0.0, -1.0), (1.0, -0.5), (2.0, -0.25)]),
        ];
        let svg = line_plot("decay", &s);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("decay"));
    }

    #[test]
    fn scatter_plot_draws_rays_and_points() {
        let groups = vec![Series::new("open loop", vec![(3.0, 0.0), (-2.16, 0.0)])];
        let rays = [[(0.0, 0.0), (5.0, 2.0)], [(0.0, 0.0), (5.0, -2.0)]];
        let svg = scatter_plot("spectrum", &groups, &rays);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches("stroke-dasharray=\"6 4\"").count(), 2);
    }

    #[test]
    fn escapes_markup_in_labels() {
        let s = vec![Series::new("a<b", vec![(0.0, 0.0)])];
        let svg = line_plot("t<0", &s);
        assert!(svg.contains("a&lt;b"));
        assert!(!svg.contains("a<b"));
    }
}
