//! Rational pole-zero identification and stability-margin metrics.
//!
//! The fitter is an iterative pole-relocation scheme (vector-fitting
//! family) with a relaxed nontriviality constraint. The pole-defining
//! weighting function is built on a real-coefficient basis so relocated
//! poles close under conjugation exactly; right-half-plane poles are
//! preserved, never reflected, because detecting them is the point of
//! the tool.

mod vectfit;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netio::FrequencyResponse;

/// How many poles to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitOrder {
    Fixed(usize),
    /// Scan even orders upward and accept the smallest whose relative
    /// RMS residual beats the configured threshold.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Uniform,
    /// Weight each sample by 1/|f|; useful for responses with a large
    /// dynamic range.
    InverseMagnitude,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Converged when the largest relative pole movement drops below this.
    pub pole_movement_tol: f64,
    pub weighting: Weighting,
    /// Accept threshold on relative RMS error for auto order selection.
    pub auto_rms_threshold: f64,
    /// Largest order tried in auto mode.
    pub auto_max_order: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            pole_movement_tol: 1e-8,
            weighting: Weighting::Uniform,
            auto_rms_threshold: 1e-4,
            auto_max_order: 24,
        }
    }
}

/// Fit diagnostics: residual trace and, in auto mode, the order scan.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Relative RMS residual after each pole-relocation step.
    pub residual_trace: Vec<f64>,
    /// (order, relative RMS) pairs from the auto-order scan.
    pub auto_scan: Vec<(usize, f64)>,
    /// False when no scanned order met the threshold and the best one was
    /// returned instead.
    pub auto_threshold_met: bool,
}

/// Rational model with shared poles, per-response residues and direct
/// terms, and fit metadata.
///
/// Non-real poles occur in exact conjugate pairs. For data consistent
/// with a real system the residues at conjugate poles are exact
/// conjugates and the direct terms are real; data violating that
/// symmetry (e.g. a response scaled by a complex constant) keeps complex
/// residues and direct terms so that poles stay invariant under scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleZeroModel {
    poles: Vec<Complex64>,
    residues: Vec<Vec<Complex64>>,
    direct_terms: Vec<Complex64>,
    order: usize,
    fit_rms_error: f64,
    band_hz: (f64, f64),
    labels: Vec<String>,
    diagnostics: FitDiagnostics,
}

impl PoleZeroModel {
    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    /// Residues of response `m`, aligned with [`PoleZeroModel::poles`].
    pub fn residues(&self, response: usize) -> &[Complex64] {
        &self.residues[response]
    }

    pub fn direct_terms(&self) -> &[Complex64] {
        &self.direct_terms
    }

    pub fn response_count(&self) -> usize {
        self.residues.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn fit_rms_error(&self) -> f64 {
        self.fit_rms_error
    }

    pub fn band_hz(&self) -> (f64, f64) {
        self.band_hz
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }

    /// Model value of response `m` at a frequency.
    pub fn evaluate(&self, response: usize, freq_hz: f64) -> Complex64 {
        let s = Complex64::new(0.0, 2.0 * PI * freq_hz);
        let mut acc = self.direct_terms[response];
        for (r, p) in self.residues[response].iter().zip(&self.poles) {
            acc += r / (s - p);
        }
        acc
    }

    /// Upper-half-plane pole representatives (im >= 0), sorted by
    /// (re, im).
    pub fn upper_half_poles(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> =
            self.poles.iter().copied().filter(|p| p.im >= 0.0).collect();
        out.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        out
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("model serialization");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("invalid model JSON: {e}"),
        })
    }
}

/// Fit a single response on `band_hz` with the given order.
pub fn fit_rational_siso(
    resp: &FrequencyResponse,
    band_hz: (f64, f64),
    order: FitOrder,
    options: &FitOptions,
) -> Result<PoleZeroModel> {
    vectfit::fit(std::slice::from_ref(resp), band_hz, order, options)
}

/// Fit several responses with one shared set of poles and per-response
/// residues.
pub fn fit_common_poles_mimo(
    resps: &[FrequencyResponse],
    band_hz: (f64, f64),
    order: FitOrder,
    options: &FitOptions,
) -> Result<PoleZeroModel> {
    if resps.len() < 2 {
        return Err(Error::Validation(format!(
            "common-pole identification needs at least 2 responses, got {}",
            resps.len()
        )));
    }
    vectfit::fit(resps, band_hz, order, options)
}

/// Stability-margin metrics of a single pole (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginMetrics {
    pub sigma_per_s: f64,
    pub f_res_hz: f64,
    pub damping_ratio: f64,
    /// None for poles with Re >= 0, where Q is undefined.
    pub q_factor: Option<f64>,
}

pub fn margin_metrics(pole: Complex64) -> MarginMetrics {
    let norm = pole.norm();
    assert!(norm > 0.0, "margin metrics need a nonzero pole");
    MarginMetrics {
        sigma_per_s: pole.re,
        f_res_hz: pole.im / (2.0 * PI),
        damping_ratio: -pole.re / norm,
        q_factor: if pole.re < 0.0 {
            Some(norm / (-2.0 * pole.re))
        } else {
            None
        },
    }
}

/// Pick the in-band pole closest to instability: the upper-half pole
/// whose resonance frequency lies inside `band_hz` with the largest real
/// part; ties within 1e-9 relative go to the smaller damping ratio.
pub fn select_critical_pair(model: &PoleZeroModel, band_hz: (f64, f64)) -> Result<Complex64> {
    select_critical_from(&model.upper_half_poles(), band_hz)
}

/// Same selection rule over a bare pole list (upper-half representatives).
pub fn select_critical_from(poles: &[Complex64], band_hz: (f64, f64)) -> Result<Complex64> {
    let mut best: Option<Complex64> = None;
    for &p in poles {
        if p.im < 0.0 {
            continue;
        }
        let f_res = p.im / (2.0 * PI);
        if f_res < band_hz.0 || f_res > band_hz.1 {
            continue;
        }
        best = Some(match best {
            None => p,
            Some(b) => {
                let tie = (p.re - b.re).abs() <= 1e-9 * p.re.abs().max(b.re.abs());
                if tie {
                    if margin_metrics(p).damping_ratio < margin_metrics(b).damping_ratio {
                        p
                    } else {
                        b
                    }
                } else if p.re > b.re {
                    p
                } else {
                    b
                }
            }
        });
    }
    best.ok_or_else(|| {
        Error::Validation(format!(
            "no pole with a resonance inside [{}, {}] Hz",
            band_hz.0, band_hz.1
        ))
    })
}

/// Per-response residue magnitudes of the critical pole, normalized by
/// the maximum. The response with value 1 marks the stage where the
/// resonance originates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueReport {
    pub critical_pole: Complex64,
    pub normalized_residues: Vec<f64>,
    pub labels: Vec<String>,
}

pub fn residue_localization(model: &PoleZeroModel, critical: Complex64) -> Result<ResidueReport> {
    let tol = 1e-6 * critical.norm();
    let idx = model
        .poles
        .iter()
        .position(|p| (p - critical).norm() <= tol)
        .ok_or_else(|| {
            Error::Validation(format!(
                "{critical} is not a pole of the model within 1e-6 relative"
            ))
        })?;
    let magnitudes: Vec<f64> = model.residues.iter().map(|r| r[idx].norm()).collect();
    let max = magnitudes.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::Validation(
            "the critical pole has zero residue in every response".into(),
        ));
    }
    Ok(ResidueReport {
        critical_pole: critical,
        normalized_residues: magnitudes.iter().map(|m| m / max).collect(),
        labels: model.labels.clone(),
    })
}
