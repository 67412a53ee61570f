//! Two-port network algebra: S/ABCD conversions, cascading, port
//! mirroring, reflection-to-impedance, and symmetric-device bisection
//! for input-block extraction.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::netio::{check_grids_equal, validate_grid, TwoPortNetwork};

/// Per-frequency chain (ABCD) parameters. `b` is in ohms, `c` in
/// siemens, `a` and `d` are dimensionless.
#[derive(Debug, Clone, PartialEq)]
pub struct AbcdNetwork {
    freqs_hz: Vec<f64>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    c: Vec<Complex64>,
    d: Vec<Complex64>,
}

impl AbcdNetwork {
    pub fn new(
        freqs_hz: Vec<f64>,
        a: Vec<Complex64>,
        b: Vec<Complex64>,
        c: Vec<Complex64>,
        d: Vec<Complex64>,
    ) -> Result<Self> {
        validate_grid(&freqs_hz)?;
        let n = freqs_hz.len();
        if a.len() != n || b.len() != n || c.len() != n || d.len() != n {
            return Err(Error::Validation(
                "all ABCD arrays must match the frequency grid length".into(),
            ));
        }
        Ok(Self { freqs_hz, a, b, c, d })
    }

    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }

    pub fn freqs_hz(&self) -> &[f64] {
        &self.freqs_hz
    }

    pub fn a(&self) -> &[Complex64] {
        &self.a
    }

    pub fn b(&self) -> &[Complex64] {
        &self.b
    }

    pub fn c(&self) -> &[Complex64] {
        &self.c
    }

    pub fn d(&self) -> &[Complex64] {
        &self.d
    }

    /// max |ad - bc - 1| over the grid. A reciprocal network gives zero;
    /// recorded as a diagnostic, never enforced.
    pub fn det_deviation(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                (self.a[i] * self.d[i] - self.b[i] * self.c[i] - Complex64::new(1.0, 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Convert S-parameters (real reference impedance) to ABCD.
pub fn s_to_abcd(net: &TwoPortNetwork) -> Result<AbcdNetwork> {
    let z0 = net.z0_ohm();
    let n = net.len();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    let one = Complex64::new(1.0, 0.0);
    for i in 0..n {
        let (s11, s21, s12, s22) = (net.s11()[i], net.s21()[i], net.s12()[i], net.s22()[i]);
        if s21.norm() == 0.0 {
            return Err(Error::Singular {
                freq_hz: net.freqs_hz()[i],
                message: "s21 = 0 makes the S-to-ABCD conversion singular".into(),
            });
        }
        let den = 2.0 * s21;
        a.push(((one + s11) * (one - s22) + s12 * s21) / den);
        b.push(z0 * ((one + s11) * (one + s22) - s12 * s21) / den);
        c.push(((one - s11) * (one - s22) - s12 * s21) / (z0 * den));
        d.push(((one - s11) * (one + s22) + s12 * s21) / den);
    }
    AbcdNetwork::new(net.freqs_hz().to_vec(), a, b, c, d)
}

/// Convert ABCD back to S-parameters against a real reference impedance.
pub fn abcd_to_s(net: &AbcdNetwork, z0_ohm: f64) -> Result<TwoPortNetwork> {
    if !(z0_ohm > 0.0) || !z0_ohm.is_finite() {
        return Err(Error::Validation(format!(
            "reference impedance must be positive and finite, got {z0_ohm}"
        )));
    }
    let n = net.len();
    let mut s11 = Vec::with_capacity(n);
    let mut s21 = Vec::with_capacity(n);
    let mut s12 = Vec::with_capacity(n);
    let mut s22 = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b, c, d) = (net.a[i], net.b[i], net.c[i], net.d[i]);
        let den = a + b / z0_ohm + c * z0_ohm + d;
        if den.norm() == 0.0 {
            return Err(Error::Singular {
                freq_hz: net.freqs_hz[i],
                message: "a + b/z0 + c*z0 + d = 0 makes the ABCD-to-S conversion singular".into(),
            });
        }
        s11.push((a + b / z0_ohm - c * z0_ohm - d) / den);
        s21.push(2.0 / den);
        s12.push(2.0 * (a * d - b * c) / den);
        s22.push((-a + b / z0_ohm - c * z0_ohm + d) / den);
    }
    TwoPortNetwork::new(net.freqs_hz.clone(), s11, s21, s12, s22, z0_ohm)
}

/// Per-frequency chain product `first * second` (first network seen from
/// the source side).
pub fn cascade(first: &AbcdNetwork, second: &AbcdNetwork) -> Result<AbcdNetwork> {
    check_grids_equal(&first.freqs_hz, &second.freqs_hz, "cascade")?;
    let n = first.len();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        a.push(first.a[i] * second.a[i] + first.b[i] * second.c[i]);
        b.push(first.a[i] * second.b[i] + first.b[i] * second.d[i]);
        c.push(first.c[i] * second.a[i] + first.d[i] * second.c[i]);
        d.push(first.c[i] * second.b[i] + first.d[i] * second.d[i]);
    }
    AbcdNetwork::new(first.freqs_hz.clone(), a, b, c, d)
}

/// Port-reversed network: a' = d, d' = a, b and c unchanged. The closed
/// form holds for reciprocal two-ports (ad - bc = 1); check
/// [`AbcdNetwork::det_deviation`] before relying on it.
pub fn mirror(net: &AbcdNetwork) -> AbcdNetwork {
    AbcdNetwork {
        freqs_hz: net.freqs_hz.clone(),
        a: net.d.clone(),
        b: net.b.clone(),
        c: net.c.clone(),
        d: net.a.clone(),
    }
}

/// Reciprocity deviation above which [`mirror`] results should be treated
/// as approximate.
pub const MIRROR_RECIPROCITY_WARNING: f64 = 1e-6;

/// Result of splitting a symmetric 2x test device into one half.
#[derive(Debug, Clone)]
pub struct Bisection {
    /// S-parameters of one half, referenced to the input z0.
    pub half: TwoPortNetwork,
    /// max |s11 - s22| of the input device.
    pub symmetry_error: f64,
    /// max |s21 - s12| of the input device.
    pub reciprocity_error: f64,
    /// max |S(half) - S(mirror(half))| over ports and frequencies: how far
    /// the recovered half is from being its own mirror image.
    pub mirror_asymmetry: f64,
}

/// Ambiguity margin for branch tracking: a half-phase step this close to
/// pi/2 cannot be told apart from its sign-flipped alternative.
const BRANCH_AMBIGUITY_MARGIN: f64 = 0.15;

/// Split a measured 2x device into one half via the per-frequency
/// principal matrix square root of its ABCD matrix.
///
/// The square-root branch is chosen so the half's transmission phase
/// starts near zero at the lowest frequency and evolves continuously
/// across the grid; `cascade(half, half)` reproduces the input to
/// numerical precision by construction. A half-phase step approaching
/// pi/2 between adjacent grid points makes the branch choice ambiguous
/// and aborts with an error advising a denser grid.
pub fn bisect_symmetric(total: &TwoPortNetwork) -> Result<Bisection> {
    if total.is_empty() {
        return Err(Error::Validation("empty network".into()));
    }
    let z0 = total.z0_ohm();
    let abcd = s_to_abcd(total)?;
    let n = abcd.len();
    let mut ha = Vec::with_capacity(n);
    let mut hb = Vec::with_capacity(n);
    let mut hc = Vec::with_capacity(n);
    let mut hd = Vec::with_capacity(n);
    let mut prev_phase: Option<f64> = None;
    for i in 0..n {
        let freq = abcd.freqs_hz[i];
        let m = [abcd.a[i], abcd.b[i], abcd.c[i], abcd.d[i]];
        let y = sqrt_2x2(m, freq)?;
        // transmission phase of the candidate half, used for branch tracking
        let phase_of = |y: &[Complex64; 4]| -> Result<f64> {
            let den = y[0] + y[1] / z0 + y[2] * z0 + y[3];
            if den.norm() == 0.0 {
                return Err(Error::Singular {
                    freq_hz: freq,
                    message: "half network has a singular S conversion".into(),
                });
            }
            let det = y[0] * y[3] - y[1] * y[2];
            Ok((2.0 * det / den).arg())
        };
        let phase_pos = phase_of(&y)?;
        let neg = [-y[0], -y[1], -y[2], -y[3]];
        let phase_neg = phase_of(&neg)?;
        let (chosen, phase) = match prev_phase {
            None => {
                if phase_pos.abs() <= phase_neg.abs() {
                    (y, phase_pos)
                } else {
                    (neg, phase_neg)
                }
            }
            Some(prev) => {
                let dp = wrap_to_pi(phase_pos - prev);
                let dn = wrap_to_pi(phase_neg - prev);
                let (cand, delta, ph) = if dp.abs() <= dn.abs() {
                    (y, dp, phase_pos)
                } else {
                    (neg, dn, phase_neg)
                };
                // the two candidates differ by pi, so once the true
                // half-phase step nears pi/2 they become equidistant and
                // the branch choice is a coin flip
                if delta.abs() > std::f64::consts::FRAC_PI_2 - BRANCH_AMBIGUITY_MARGIN {
                    return Err(Error::Numerical(format!(
                        "bisection branch tracking is ambiguous between {} Hz and {} Hz \
                         (half-phase step {:.3} rad is within {:.2} rad of pi/2); \
                         use a denser frequency grid",
                        abcd.freqs_hz[i - 1],
                        freq,
                        delta.abs(),
                        BRANCH_AMBIGUITY_MARGIN
                    )));
                }
                (cand, ph)
            }
        };
        prev_phase = Some(phase);
        ha.push(chosen[0]);
        hb.push(chosen[1]);
        hc.push(chosen[2]);
        hd.push(chosen[3]);
    }

    let half_abcd = AbcdNetwork::new(abcd.freqs_hz.clone(), ha, hb, hc, hd)?;
    let half = abcd_to_s(&half_abcd, z0)?;
    let mirrored = abcd_to_s(&mirror(&half_abcd), z0)?;
    let mut mirror_asymmetry = 0.0f64;
    for i in 0..n {
        mirror_asymmetry = mirror_asymmetry
            .max((half.s11()[i] - mirrored.s11()[i]).norm())
            .max((half.s21()[i] - mirrored.s21()[i]).norm())
            .max((half.s12()[i] - mirrored.s12()[i]).norm())
            .max((half.s22()[i] - mirrored.s22()[i]).norm());
    }
    Ok(Bisection {
        half,
        symmetry_error: total.symmetry_error(),
        reciprocity_error: total.reciprocity_error(),
        mirror_asymmetry,
    })
}

fn wrap_to_pi(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x % two_pi;
    if y > std::f64::consts::PI {
        y -= two_pi;
    } else if y < -std::f64::consts::PI {
        y += two_pi;
    }
    y
}

/// One square root of a 2x2 complex matrix `[a b; c d]`, with
/// det(sqrt) equal to the principal square root of det(M). The caller
/// disambiguates the overall sign.
///
/// Uses Y = (M + p I)/s with p = sqrt(det M) and s = sqrt(tr M + 2p),
/// which satisfies Y^2 = M by Cayley-Hamilton. Falls back to an
/// eigenvector construction when tr + 2p vanishes and to the Jordan form
/// for a repeated eigenvalue.
fn sqrt_2x2(m: [Complex64; 4], freq_hz: f64) -> Result<[Complex64; 4]> {
    let [a, b, c, d] = m;
    let tr = a + d;
    let det = a * d - b * c;
    let scale = a.norm().max(b.norm()).max(c.norm()).max(d.norm());
    if scale == 0.0 {
        return Ok([Complex64::new(0.0, 0.0); 4]);
    }
    let disc = (tr * tr - 4.0 * det).sqrt();
    let lam1 = (tr + disc) / 2.0;
    let lam2 = (tr - disc) / 2.0;

    if (lam1 - lam2).norm() <= 1e-9 * lam1.norm().max(lam2.norm()) {
        // repeated eigenvalue: Jordan-form square root
        let lam = tr / 2.0;
        if lam.norm() <= 1e-14 * scale {
            return Err(Error::Singular {
                freq_hz,
                message: "ABCD matrix is nilpotent and has no square root".into(),
            });
        }
        let mu = lam.sqrt();
        let half = 1.0 / (2.0 * mu);
        return Ok([
            mu + (a - lam) * half,
            b * half,
            c * half,
            mu + (d - lam) * half,
        ]);
    }

    let p = det.sqrt();
    let s2 = tr + 2.0 * p;
    if s2.norm() > 1e-12 * scale {
        let s = s2.sqrt();
        return Ok([(a + p) / s, b / s, c / s, (d + p) / s]);
    }

    // tr + 2p ~ 0: the two eigenvalue square roots nearly cancel; build
    // the root from the eigendecomposition instead.
    let pick_vec = |lam: Complex64| -> (Complex64, Complex64) {
        let v1 = (b, lam - a);
        let v2 = (lam - d, c);
        if v1.0.norm() + v1.1.norm() >= v2.0.norm() + v2.1.norm() {
            v1
        } else {
            v2
        }
    };
    let (x1, y1) = pick_vec(lam1);
    let (x2, y2) = pick_vec(lam2);
    let det_v = x1 * y2 - x2 * y1;
    if det_v.norm() <= 1e-14 * scale {
        return Err(Error::Singular {
            freq_hz,
            message: "defective ABCD matrix: eigenvector basis is singular".into(),
        });
    }
    let mu1 = lam1.sqrt();
    // choose the partner root so the product equals the principal sqrt(det)
    let mu2 = p / mu1;
    let inv = 1.0 / det_v;
    Ok([
        (mu1 * x1 * y2 - mu2 * x2 * y1) * inv,
        (mu2 - mu1) * x1 * x2 * inv,
        (mu1 - mu2) * y1 * y2 * inv,
        (mu2 * x1 * y2 - mu1 * x2 * y1) * inv,
    ])
}

/// Convert a reflection coefficient to an impedance: Z = z0 (1+Γ)/(1−Γ).
pub fn gamma_to_impedance(gamma: Complex64, z0_ohm: f64) -> Result<Complex64> {
    if !(z0_ohm > 0.0) || !z0_ohm.is_finite() {
        return Err(Error::Validation(format!(
            "reference impedance must be positive and finite, got {z0_ohm}"
        )));
    }
    let one = Complex64::new(1.0, 0.0);
    if (one - gamma).norm() == 0.0 {
        return Err(Error::Numerical(
            "reflection coefficient of 1 corresponds to infinite impedance".into(),
        ));
    }
    Ok(z0_ohm * (one + gamma) / (one - gamma))
}

/// Convenience constructors for analytically known networks, used by
/// callers and heavily by tests.
pub mod ideal {
    use super::*;

    /// Unit matrix ABCD network on the given grid.
    pub fn thru(freqs_hz: &[f64]) -> AbcdNetwork {
        let one = vec![Complex64::new(1.0, 0.0); freqs_hz.len()];
        let zero = vec![Complex64::new(0.0, 0.0); freqs_hz.len()];
        AbcdNetwork::new(freqs_hz.to_vec(), one.clone(), zero.clone(), zero, one).unwrap()
    }

    /// Series impedance: a = 1, b = Z, c = 0, d = 1.
    pub fn series(freqs_hz: &[f64], z: &[Complex64]) -> Result<AbcdNetwork> {
        let one = vec![Complex64::new(1.0, 0.0); freqs_hz.len()];
        let zero = vec![Complex64::new(0.0, 0.0); freqs_hz.len()];
        AbcdNetwork::new(freqs_hz.to_vec(), one.clone(), z.to_vec(), zero, one)
    }

    /// Shunt admittance: a = 1, b = 0, c = Y, d = 1.
    pub fn shunt(freqs_hz: &[f64], y: &[Complex64]) -> Result<AbcdNetwork> {
        let one = vec![Complex64::new(1.0, 0.0); freqs_hz.len()];
        let zero = vec![Complex64::new(0.0, 0.0); freqs_hz.len()];
        AbcdNetwork::new(freqs_hz.to_vec(), one.clone(), zero, y.to_vec(), one)
    }

    /// Matched lossless line of delay `tau` seconds against `z0`:
    /// electrical length θ = ω τ per frequency.
    pub fn line(freqs_hz: &[f64], tau_s: f64, z0_ohm: f64) -> AbcdNetwork {
        let n = freqs_hz.len();
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        let mut d = Vec::with_capacity(n);
        for &f in freqs_hz {
            let theta = 2.0 * std::f64::consts::PI * f * tau_s;
            let (sin, cos) = theta.sin_cos();
            a.push(Complex64::new(cos, 0.0));
            b.push(Complex64::new(0.0, z0_ohm * sin));
            c.push(Complex64::new(0.0, sin / z0_ohm));
            d.push(Complex64::new(cos, 0.0));
        }
        AbcdNetwork::new(freqs_hz.to_vec(), a, b, c, d).unwrap()
    }
}
