//! Hand-written SVG for the two decay CDFs.

use std::fmt::Write;

use instance_delta::decay::DecayCurve;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

fn px(t: f64) -> f64 {
    MARGIN + (t + 1.0) * (WIDTH - 2.0 * MARGIN)
}

fn py(y: f64) -> f64 {
    HEIGHT - MARGIN - y * (HEIGHT - 2.0 * MARGIN)
}

/// Right-continuous step path through `(thresholds[j], ys[j])`.
fn step_path(thresholds: &[f64], ys: &[f64]) -> String {
    let mut d = String::new();
    for (j, (&t, &y)) in thresholds.iter().zip(ys).enumerate() {
        if j == 0 {
            write!(d, "M{:.2},{:.2}", px(t), py(y)).unwrap();
        } else {
            write!(d, " H{:.2} V{:.2}", px(t), py(y)).unwrap();
        }
    }
    d
}

pub fn cdf_plot(curve: &DecayCurve) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    // axes
    writeln!(
        s,
        r#"<path d="M{x0:.2},{y0:.2} H{x1:.2} M{x0:.2},{y0:.2} V{y1:.2}" stroke="black" fill="none"/>"#,
        x0 = px(-1.0),
        x1 = px(0.0),
        y0 = py(0.0),
        y1 = py(1.0)
    )
    .unwrap();
    for k in 0..=4 {
        let t = -1.0 + k as f64 / 4.0;
        writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{x:.2}" y2="{y2:.2}" stroke="black"/><text x="{x:.2}" y="{ty:.2}" text-anchor="middle">{t}</text>"#,
            x = px(t),
            y = py(0.0),
            y2 = py(0.0) + 5.0,
            ty = py(0.0) + 18.0
        )
        .unwrap();
        let v = k as f64 / 4.0;
        writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{x2:.2}" y2="{y:.2}" stroke="black"/><text x="{tx:.2}" y="{ty:.2}" text-anchor="end">{v}</text>"#,
            x = px(-1.0),
            x2 = px(-1.0) - 5.0,
            y = py(v),
            tx = px(-1.0) - 8.0,
            ty = py(v) + 4.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">threshold t on the instance difference ({} vs {})</text>"#,
        WIDTH / 2.0,
        HEIGHT - 14.0,
        curve.s1,
        curve.s2
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">fraction of instances</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    )
    .unwrap();

    writeln!(
        s,
        r##"<path d="{}" stroke="#1f77b4" stroke-width="2" fill="none"/>"##,
        step_path(&curve.thresholds, &curve.decay_hat)
    )
    .unwrap();
    writeln!(
        s,
        r##"<path d="{}" stroke="#d62728" stroke-width="2" stroke-dasharray="6 4" fill="none"/>"##,
        step_path(&curve.thresholds, &curve.decay_prime)
    )
    .unwrap();

    let j = curve.best_index;
    let (x, top, bottom) = (px(curve.t_star), py(curve.decay_hat[j]), py(curve.decay_prime[j]));
    writeln!(
        s,
        r#"<line x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{bottom:.2}" stroke="black" stroke-width="1.5"/>"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}">max gap {} at t = {}</text>"#,
        x + 6.0,
        (top + bottom) / 2.0,
        curve.lower_bound,
        curve.t_star
    )
    .unwrap();

    let lx = px(-1.0) + 12.0;
    writeln!(
        s,
        r##"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#1f77b4" stroke-width="2"/><text x="{:.2}" y="{:.2}">observed difference</text>"##,
        py(1.0) + 10.0,
        lx + 24.0,
        py(1.0) + 10.0,
        lx + 30.0,
        py(1.0) + 14.0
    )
    .unwrap();
    writeln!(
        s,
        r##"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d62728" stroke-width="2" stroke-dasharray="6 4"/><text x="{:.2}" y="{:.2}">mixing baseline</text>"##,
        py(1.0) + 28.0,
        lx + 24.0,
        py(1.0) + 28.0,
        lx + 30.0,
        py(1.0) + 32.0
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}
