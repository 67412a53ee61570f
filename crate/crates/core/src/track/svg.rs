//! Static SVG pole map: Re(p) on the x axis in 1/s, Im(p)/2π on the y
//! axis in Hz, trajectories as polylines, the right half-plane shaded.

use std::fmt::Write as _;

use crate::track::PoleTrack;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 640.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 70.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

struct Axis {
    min: f64,
    max: f64,
    lo_px: f64,
    hi_px: f64,
}

impl Axis {
    fn map(&self, v: f64) -> f64 {
        if self.max == self.min {
            return (self.lo_px + self.hi_px) / 2.0;
        }
        self.lo_px + (v - self.min) / (self.max - self.min) * (self.hi_px - self.lo_px)
    }
}

fn fmt(v: f64) -> String {
    format!("{:.6e}", v)
}

pub fn pole_map_svg(track: &PoleTrack) -> String {
    let mut res: Vec<f64> = Vec::new();
    let mut ims: Vec<f64> = Vec::new();
    for set in &track.pole_sets {
        for p in set {
            res.push(p.re);
            ims.push(p.im / (2.0 * std::f64::consts::PI));
        }
    }
    // always show the stability boundary
    res.push(0.0);
    let (mut re_min, mut re_max) = bounds(&res, -1.0, 1.0);
    let (mut f_min, mut f_max) = bounds(&ims, 0.0, 1.0);
    let re_pad = 0.08 * (re_max - re_min);
    let f_pad = 0.08 * (f_max - f_min);
    re_min -= re_pad;
    re_max += re_pad;
    f_min -= f_pad;
    f_max += f_pad;

    let x = Axis {
        min: re_min,
        max: re_max,
        lo_px: MARGIN_LEFT,
        hi_px: WIDTH - MARGIN_RIGHT,
    };
    let y = Axis {
        min: f_min,
        max: f_max,
        lo_px: HEIGHT - MARGIN_BOTTOM,
        hi_px: MARGIN_TOP,
    };

    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"13\">"
    )
    .unwrap();

    // shaded right half-plane
    if re_max > 0.0 {
        let x0 = x.map(0.0);
        writeln!(
            out,
            "  <rect x=\"{:.2}\" y=\"{MARGIN_TOP}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"#fbe9e7\"/>",
            x0,
            (WIDTH - MARGIN_RIGHT) - x0,
            HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
        )
        .unwrap();
        writeln!(
            out,
            "  <line x1=\"{x0:.2}\" y1=\"{MARGIN_TOP}\" x2=\"{x0:.2}\" y2=\"{:.2}\" \
             stroke=\"#c62828\" stroke-dasharray=\"6 4\"/>",
            HEIGHT - MARGIN_BOTTOM
        )
        .unwrap();
    }

    // frame and ticks
    writeln!(
        out,
        "  <rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{:.2}\" height=\"{:.2}\" \
         fill=\"none\" stroke=\"#333\"/>",
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    )
    .unwrap();
    for k in 0..=5 {
        let t = k as f64 / 5.0;
        let vx = re_min + t * (re_max - re_min);
        let px = x.map(vx);
        writeln!(
            out,
            "  <line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#333\"/>",
            HEIGHT - MARGIN_BOTTOM,
            HEIGHT - MARGIN_BOTTOM + 6.0
        )
        .unwrap();
        writeln!(
            out,
            "  <text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            HEIGHT - MARGIN_BOTTOM + 22.0,
            fmt(vx)
        )
        .unwrap();
        let vy = f_min + t * (f_max - f_min);
        let py = y.map(vy);
        writeln!(
            out,
            "  <line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{MARGIN_LEFT}\" y2=\"{py:.2}\" \
             stroke=\"#333\"/>",
            MARGIN_LEFT - 6.0
        )
        .unwrap();
        writeln!(
            out,
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            MARGIN_LEFT - 10.0,
            py + 4.0,
            fmt(vy)
        )
        .unwrap();
    }
    writeln!(
        out,
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">Re(p) (1/s)</text>",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 20.0
    )
    .unwrap();
    writeln!(
        out,
        "  <text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {:.2})\">Im(p)/2\u{03c0} (Hz)</text>",
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0
    )
    .unwrap();

    // trajectories as polylines, markers ordered along the parameter
    for (t_idx, traj) in track.trajectories.iter().enumerate() {
        let color = PALETTE[t_idx % PALETTE.len()];
        if traj.poles.len() > 1 {
            let pts: Vec<String> = traj
                .poles
                .iter()
                .map(|p| {
                    format!(
                        "{:.2},{:.2}",
                        x.map(p.re),
                        y.map(p.im / (2.0 * std::f64::consts::PI))
                    )
                })
                .collect();
            writeln!(
                out,
                "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" \
                 stroke-width=\"1.5\"/>",
                pts.join(" ")
            )
            .unwrap();
        }
        for p in &traj.poles {
            writeln!(
                out,
                "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{color}\">\
                 <title>re={} im={}</title></circle>",
                x.map(p.re),
                y.map(p.im / (2.0 * std::f64::consts::PI)),
                p.re,
                p.im
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

fn bounds(values: &[f64], fallback_lo: f64, fallback_hi: f64) -> (f64, f64) {
    if values.is_empty() {
        return (fallback_lo, fallback_hi);
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0))
    } else {
        (lo, hi)
    }
}
