//! Static SVG scatter plot of Bloch eigenvalues in the complex plane with
//! the two reference lines Im λ = ±Re b.

use dirac_spectral::bloch::BlochEigenvalue;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN: f64 = 56.0;

/// Tick spacing: largest of 1/2/5 × 10^k giving at most `max_ticks` ticks.
fn tick_step(span: f64, max_ticks: usize) -> f64 {
    let raw = span / max_ticks as f64;
    let mag = 10f64.powf(raw.log10().floor());
    for m in [1.0, 2.0, 5.0, 10.0] {
        if mag * m >= raw {
            return mag * m;
        }
    }
    mag * 10.0
}

pub fn spectrum_svg(points: &[BlochEigenvalue], re_b: f64) -> String {
    let (mut re0, mut re1, mut im0, mut im1) = (-1.0f64, 1.0f64, -1.0f64, 1.0f64);
    for p in points {
        re0 = re0.min(p.lambda.re);
        re1 = re1.max(p.lambda.re);
        im0 = im0.min(p.lambda.im);
        im1 = im1.max(p.lambda.im);
    }
    im0 = im0.min(-re_b.abs() - 0.5);
    im1 = im1.max(re_b.abs() + 0.5);
    let pad_re = 0.05 * (re1 - re0).max(1.0);
    let pad_im = 0.05 * (im1 - im0).max(1.0);
    re0 -= pad_re;
    re1 += pad_re;
    im0 -= pad_im;
    im1 += pad_im;

    let sx = (WIDTH - 2.0 * MARGIN) / (re1 - re0);
    let sy = (HEIGHT - 2.0 * MARGIN) / (im1 - im0);
    let px = |re: f64| MARGIN + (re - re0) * sx;
    let py = |im: f64| HEIGHT - MARGIN - (im - im0) * sy;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"monospace\" font-size=\"11\">\n"
    ));
    s.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    // Axes box.
    s.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{:.2}\" height=\"{:.2}\" \
         fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    ));
    // Ticks.
    let step_x = tick_step(re1 - re0, 12);
    let mut tx = (re0 / step_x).ceil() * step_x;
    while tx <= re1 {
        let x = px(tx);
        s.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            HEIGHT - MARGIN,
            HEIGHT - MARGIN + 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{tx:.2}</text>\n",
            HEIGHT - MARGIN + 18.0
        ));
        tx += step_x;
    }
    let step_y = tick_step(im1 - im0, 8);
    let mut ty = (im0 / step_y).ceil() * step_y;
    while ty <= im1 {
        let y = py(ty);
        s.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{MARGIN}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            MARGIN - 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{ty:.2}</text>\n",
            MARGIN - 8.0,
            y + 4.0
        ));
        ty += step_y;
    }
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">Re λ</text>\n",
        WIDTH / 2.0,
        HEIGHT - 14.0
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">Im λ</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    ));

    // Reference lines Im λ = ±Re b.
    for line_im in [re_b, -re_b] {
        if line_im >= im0 && line_im <= im1 {
            s.push_str(&format!(
                "<line x1=\"{MARGIN}\" y1=\"{0:.2}\" x2=\"{1:.2}\" y2=\"{0:.2}\" \
                 stroke=\"#888888\" stroke-dasharray=\"6 4\"/>\n",
                py(line_im),
                WIDTH - MARGIN
            ));
        }
    }

    // Eigenvalues, colored by sequence index.
    for p in points {
        let color = if p.j == 1 { "#1f77b4" } else { "#d62728" };
        s.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.4\" fill=\"{color}\"/>\n",
            px(p.lambda.re),
            py(p.lambda.im)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\">j=1</text>\n<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f77b4\"/>\n",
        WIDTH - MARGIN - 60.0,
        MARGIN + 16.0,
        WIDTH - MARGIN - 70.0,
        MARGIN + 12.0
    ));
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\">j=2</text>\n<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#d62728\"/>\n",
        WIDTH - MARGIN - 60.0,
        MARGIN + 34.0,
        WIDTH - MARGIN - 70.0,
        MARGIN + 30.0
    ));
    s.push_str("</svg>\n");
    s
}
