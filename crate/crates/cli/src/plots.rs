//! Standalone SVG plots of a logged run: pendulum/thrust-axis convergence,
//! Lyapunov decay, and a stop-motion stick figure of the pivot-bob chain.
//! Hand-written SVG; no plotting dependency.

use std::io;
use std::path::Path;

use quadpend::{TrajectoryLog, Vec3};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 62.0;
const MARGIN_R: f64 = 18.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 46.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let fx = (x - self.x_min) / (self.x_max - self.x_min);
        let fy = (y - self.y_min) / (self.y_max - self.y_min);
        (
            MARGIN_L + fx * (WIDTH - MARGIN_L - MARGIN_R),
            HEIGHT - MARGIN_B - fy * (HEIGHT - MARGIN_T - MARGIN_B),
        )
    }
}

fn svg_open(title: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">{title}</text>\n",
        WIDTH / 2.0
    )
}

fn axes(frame: &Frame, out: &mut String, x_label: &str, y_label: &str, y_tick_fmt: impl Fn(f64) -> String) {
    let (x0, y0) = (MARGIN_L, HEIGHT - MARGIN_B);
    let (x1, y1) = (WIDTH - MARGIN_R, MARGIN_T);
    out.push_str(&format!(
        "<rect x=\"{x0}\" y=\"{y1}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        x1 - x0,
        y0 - y1
    ));
    for i in 0..=4 {
        let fx = i as f64 / 4.0;
        let xv = frame.x_min + fx * (frame.x_max - frame.x_min);
        let (px, _) = frame.map(xv, frame.y_min);
        out.push_str(&format!(
            "<line x1=\"{px}\" y1=\"{y0}\" x2=\"{px}\" y2=\"{}\" stroke=\"#444\"/>\n",
            y0 + 4.0
        ));
        out.push_str(&format!(
            "<text x=\"{px}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{:.2}</text>\n",
            y0 + 17.0,
            xv
        ));
        let yv = frame.y_min + fx * (frame.y_max - frame.y_min);
        let (_, py) = frame.map(frame.x_min, yv);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{py}\" x2=\"{x0}\" y2=\"{py}\" stroke=\"#444\"/>\n",
            x0 - 4.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{}</text>\n",
            x0 - 7.0,
            py + 4.0,
            y_tick_fmt(yv)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\">{x_label}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 10.0
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{y_label}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    ));
}

fn polyline(frame: &Frame, points: impl Iterator<Item = (f64, f64)>, color: &str, out: &mut String) {
    let mut attr = String::new();
    for (x, y) in points {
        let (px, py) = frame.map(x, y);
        attr.push_str(&format!("{px:.2},{py:.2} "));
    }
    out.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
        attr.trim_end()
    ));
}

fn legend(entries: &[(&str, &str)], out: &mut String) {
    for (i, (label, color)) in entries.iter().enumerate() {
        let x = MARGIN_L + 12.0 + 110.0 * i as f64;
        let y = MARGIN_T + 14.0;
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            x + 22.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{label}</text>\n",
            x + 27.0,
            y + 4.0
        ));
    }
}

/// Vertical components of the bob direction and thrust axis over time.
fn convergence_svg(log: &TrajectoryLog) -> String {
    let frame = Frame {
        x_min: 0.0,
        x_max: log.final_entry().t.max(1e-9),
        y_min: -1.05,
        y_max: 1.05,
    };
    let mut out = svg_open("Vertical components of bob direction and thrust axis");
    axes(&frame, &mut out, "t [s]", "e3 component", |v| format!("{v:.2}"));
    polyline(
        &frame,
        log.entries.iter().map(|e| (e.t, e.state.y.as_vec().z)),
        "#1a6fb5",
        &mut out,
    );
    polyline(
        &frame,
        log.entries.iter().map(|e| (e.t, e.state.z().as_vec().z)),
        "#c23b22",
        &mut out,
    );
    legend(&[("e3 . y", "#1a6fb5"), ("e3 . z", "#c23b22")], &mut out);
    out.push_str("</svg>\n");
    out
}

/// Lyapunov values on a log10 axis, floored at 1e-12.
fn lyapunov_svg(log: &TrajectoryLog) -> String {
    let floor = 1e-12f64;
    let log10 = |v: f64| v.max(floor).log10();
    let mut y_max = f64::MIN;
    for e in &log.entries {
        y_max = y_max.max(log10(e.v));
    }
    let frame = Frame {
        x_min: 0.0,
        x_max: log.final_entry().t.max(1e-9),
        y_min: -12.2,
        y_max: y_max + 0.5,
    };
    let mut out = svg_open("Lyapunov values (log scale)");
    axes(&frame, &mut out, "t [s]", "log10 V", |v| format!("{v:.1}"));
    polyline(&frame, log.entries.iter().map(|e| (e.t, log10(e.v))), "#222222", &mut out);
    polyline(&frame, log.entries.iter().map(|e| (e.t, log10(e.v1))), "#1a6fb5", &mut out);
    polyline(&frame, log.entries.iter().map(|e| (e.t, log10(e.v2))), "#c23b22", &mut out);
    legend(&[("V", "#222222"), ("V1", "#1a6fb5"), ("V2", "#c23b22")], &mut out);
    out.push_str("</svg>\n");
    out
}

/// Stop-motion stick figure: the pivot-to-bob segment sampled every 0.25 s,
/// projected on the e1-e3 and e2-e3 planes.
fn stick_figure_svg(log: &TrajectoryLog) -> String {
    let stride = ((0.25 / log.dt) as usize).max(1);
    let l = log.params.pendulum_length;
    let samples: Vec<(Vec3, Vec3)> = log
        .entries
        .iter()
        .step_by(stride)
        .map(|e| {
            let pivot = e.state.x;
            let bob = pivot + e.state.y.as_vec() * l;
            (pivot, bob)
        })
        .collect();

    // Shared scale per panel, equal aspect.
    let mut out = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">Stick figure in stop motion (every 0.25 s)</text>\n",
        WIDTH / 2.0
    );
    let panel_w = (WIDTH - 3.0 * 20.0) / 2.0;
    for (panel, (label, pick)) in [
        ("e1-e3 plane", (|v: &Vec3| (v.x, v.z)) as fn(&Vec3) -> (f64, f64)),
        ("e2-e3 plane", (|v: &Vec3| (v.y, v.z)) as fn(&Vec3) -> (f64, f64)),
    ]
    .iter()
    .enumerate()
    .map(|(i, p)| (i, *p))
    {
        let x_off = 20.0 + panel as f64 * (panel_w + 20.0);
        let y_off = 40.0;
        let panel_h = HEIGHT - y_off - 20.0;
        let (mut lo_x, mut hi_x) = (f64::MAX, f64::MIN);
        let (mut lo_y, mut hi_y) = (f64::MAX, f64::MIN);
        for (pivot, bob) in &samples {
            for v in [pivot, bob] {
                let (a, b) = pick(v);
                lo_x = lo_x.min(a);
                hi_x = hi_x.max(a);
                lo_y = lo_y.min(b);
                hi_y = hi_y.max(b);
            }
        }
        let pad = 0.1 * ((hi_x - lo_x).max(hi_y - lo_y).max(1e-6));
        let (lo_x, hi_x, lo_y, hi_y) = (lo_x - pad, hi_x + pad, lo_y - pad, hi_y + pad);
        let scale = (panel_w / (hi_x - lo_x)).min(panel_h / (hi_y - lo_y));
        let map = |v: &Vec3| {
            let (a, b) = pick(v);
            (
                x_off + (a - lo_x) * scale,
                y_off + panel_h - (b - lo_y) * scale,
            )
        };
        out.push_str(&format!(
            "<rect x=\"{x_off}\" y=\"{y_off}\" width=\"{panel_w}\" height=\"{panel_h}\" \
             fill=\"none\" stroke=\"#444\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{label}</text>\n",
            x_off + panel_w / 2.0,
            y_off - 6.0
        ));
        let n = samples.len().max(2);
        for (i, (pivot, bob)) in samples.iter().enumerate() {
            // Later samples darker, so the motion reads in time order.
            let shade = 210 - (170 * i / (n - 1)) as i32;
            let color = format!("rgb({shade},{shade},{shade})");
            let (px, py) = map(pivot);
            let (bx, by) = map(bob);
            out.push_str(&format!(
                "<line x1=\"{px:.2}\" y1=\"{py:.2}\" x2=\"{bx:.2}\" y2=\"{by:.2}\" \
                 stroke=\"{color}\" stroke-width=\"1.6\"/>\n"
            ));
            out.push_str(&format!(
                "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"2.4\" fill=\"#1a6fb5\"/>\n"
            ));
            out.push_str(&format!(
                "<circle cx=\"{bx:.2}\" cy=\"{by:.2}\" r=\"2.0\" fill=\"{color}\"/>\n"
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Emits the three standalone SVG files into `out_dir`.
pub fn render_plots(log: &TrajectoryLog, out_dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("convergence.svg"), convergence_svg(log))?;
    std::fs::write(out_dir.join("lyapunov.svg"), lyapunov_svg(log))?;
    std::fs::write(out_dir.join("stick_figure.svg"), stick_figure_svg(log))?;
    Ok(())
}
