//! External data formats: Touchstone network files, frequency-response
//! tables and pole reports, plus the domain types they carry.

mod report;
mod response;
mod touchstone;

pub use report::{
    parse_pole_report, write_pole_report, PoleReport, PoleReportEntry, ReportFormat, ReportedPole,
};
pub use response::{parse_response_table, write_response_table, ResponseTableFormat};
pub use touchstone::{
    parse_touchstone, write_touchstone, write_touchstone_one_port, TouchstoneData, TouchstoneFormat,
};

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a [`FrequencyResponse`] represents in the measurement chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseRole {
    /// Closed-loop voltage transmission from the generator to node n.
    HVn,
    /// Voltage transfer between node n and the input reference node.
    HN,
    /// Voltage transfer from the generator to the input reference node.
    HInput,
    /// Raw probe transmission ratio B/R1 at a single node.
    RatioBOverR1,
    /// Input reflection coefficient of the device under test.
    GammaIn,
    Generic,
}

impl ResponseRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResponseRole::HVn => "h_vn",
            ResponseRole::HN => "h_n",
            ResponseRole::HInput => "h_input",
            ResponseRole::RatioBOverR1 => "ratio_b_over_r1",
            ResponseRole::GammaIn => "gamma_in",
            ResponseRole::Generic => "generic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "h_vn" => ResponseRole::HVn,
            "h_n" => ResponseRole::HN,
            "h_input" => ResponseRole::HInput,
            "ratio_b_over_r1" => ResponseRole::RatioBOverR1,
            "gamma_in" => ResponseRole::GammaIn,
            "generic" => ResponseRole::Generic,
            other => {
                return Err(Error::Validation(format!(
                    "unknown response role '{other}'"
                )))
            }
        })
    }
}

/// Complex-valued samples over a strictly increasing frequency grid, with
/// role and sweep-parameter metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponse {
    freqs_hz: Vec<f64>,
    values: Vec<Complex64>,
    role: ResponseRole,
    params: BTreeMap<String, f64>,
    node_id: Option<String>,
}

/// Checks a frequency grid: strictly increasing, all positive, all finite.
pub(crate) fn validate_grid(freqs_hz: &[f64]) -> Result<()> {
    for (i, &f) in freqs_hz.iter().enumerate() {
        if !f.is_finite() || f <= 0.0 {
            return Err(Error::Validation(format!(
                "frequency at index {i} must be finite and positive, got {f}"
            )));
        }
        if i > 0 && f <= freqs_hz[i - 1] {
            return Err(Error::Validation(format!(
                "frequencies must be strictly increasing: {f} at index {i} follows {}",
                freqs_hz[i - 1]
            )));
        }
    }
    Ok(())
}

impl FrequencyResponse {
    pub fn new(freqs_hz: Vec<f64>, values: Vec<Complex64>, role: ResponseRole) -> Result<Self> {
        validate_grid(&freqs_hz)?;
        if values.len() != freqs_hz.len() {
            return Err(Error::Validation(format!(
                "value count {} does not match frequency count {}",
                values.len(),
                freqs_hz.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Validation(format!(
                    "non-finite value at index {i} ({} Hz)",
                    freqs_hz[i]
                )));
            }
        }
        Ok(Self {
            freqs_hz,
            values,
            role,
            params: BTreeMap::new(),
            node_id: None,
        })
    }

    pub fn with_params(mut self, params: BTreeMap<String, f64>) -> Self {
        self.params = params;
        self
    }

    pub fn with_node_id(mut self, node_id: impl Into<String>) -> Self {
        self.node_id = Some(node_id.into());
        self
    }

    pub fn with_role(mut self, role: ResponseRole) -> Self {
        self.role = role;
        self
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

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn role(&self) -> ResponseRole {
        self.role
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn node_id(&self) -> Option<&str> {
        self.node_id.as_deref()
    }

    pub fn insert_param(&mut self, key: impl Into<String>, value: f64) {
        self.params.insert(key.into(), value);
    }

    /// True when the two responses share a bitwise-identical grid.
    pub fn same_grid(&self, other: &FrequencyResponse) -> bool {
        self.freqs_hz == other.freqs_hz
    }

    pub(crate) fn check_same_grid(&self, other: &FrequencyResponse, what: &str) -> Result<()> {
        check_grids_equal(&self.freqs_hz, &other.freqs_hz, what)
    }

    /// Merge sweep parameters from two responses. The same key with a
    /// different value is a conflict.
    pub(crate) fn merge_params(
        a: &BTreeMap<String, f64>,
        b: &BTreeMap<String, f64>,
    ) -> Result<BTreeMap<String, f64>> {
        let mut merged = a.clone();
        for (k, v) in b {
            if let Some(existing) = merged.get(k) {
                if existing != v {
                    return Err(Error::Validation(format!(
                        "conflicting metadata for '{k}': {existing} vs {v}"
                    )));
                }
            } else {
                merged.insert(k.clone(), *v);
            }
        }
        Ok(merged)
    }
}

pub(crate) fn check_grids_equal(a: &[f64], b: &[f64], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!(
            "{what}: {} points vs {} points",
            a.len(),
            b.len()
        )));
    }
    for i in 0..a.len() {
        if a[i] != b[i] {
            return Err(Error::GridMismatch(format!(
                "{what}: grids differ at index {i} ({} Hz vs {} Hz)",
                a[i], b[i]
            )));
        }
    }
    Ok(())
}

/// Per-frequency 2x2 complex scattering parameters with a real reference
/// impedance.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPortNetwork {
    freqs_hz: Vec<f64>,
    s11: Vec<Complex64>,
    s21: Vec<Complex64>,
    s12: Vec<Complex64>,
    s22: Vec<Complex64>,
    z0_ohm: f64,
}

impl TwoPortNetwork {
    pub fn new(
        freqs_hz: Vec<f64>,
        s11: Vec<Complex64>,
        s21: Vec<Complex64>,
        s12: Vec<Complex64>,
        s22: Vec<Complex64>,
        z0_ohm: f64,
    ) -> Result<Self> {
        validate_grid(&freqs_hz)?;
        let n = freqs_hz.len();
        if s11.len() != n || s21.len() != n || s12.len() != n || s22.len() != n {
            return Err(Error::Validation(
                "all S-parameter arrays must match the frequency grid length".into(),
            ));
        }
        if !(z0_ohm > 0.0) || !z0_ohm.is_finite() {
            return Err(Error::Validation(format!(
                "reference impedance must be positive and finite, got {z0_ohm}"
            )));
        }
        Ok(Self {
            freqs_hz,
            s11,
            s21,
            s12,
            s22,
            z0_ohm,
        })
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

    pub fn s11(&self) -> &[Complex64] {
        &self.s11
    }

    pub fn s21(&self) -> &[Complex64] {
        &self.s21
    }

    pub fn s12(&self) -> &[Complex64] {
        &self.s12
    }

    pub fn s22(&self) -> &[Complex64] {
        &self.s22
    }

    pub fn z0_ohm(&self) -> f64 {
        self.z0_ohm
    }

    /// max |s21 - s12|: zero for a reciprocal device. Recorded as a
    /// diagnostic, never enforced.
    pub fn reciprocity_error(&self) -> f64 {
        self.s21
            .iter()
            .zip(&self.s12)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// max |s11 - s22|: zero for a symmetric device.
    pub fn symmetry_error(&self) -> f64 {
        self.s11
            .iter()
            .zip(&self.s22)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_same_grid(&self, other_freqs: &[f64], what: &str) -> Result<()> {
        check_grids_equal(&self.freqs_hz, other_freqs, what)
    }
}

/// One-port reflection data (.s1p), used for Γ_in measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct OnePortNetwork {
    freqs_hz: Vec<f64>,
    gamma: Vec<Complex64>,
    z0_ohm: f64,
}

impl OnePortNetwork {
    pub fn new(freqs_hz: Vec<f64>, gamma: Vec<Complex64>, z0_ohm: f64) -> Result<Self> {
        validate_grid(&freqs_hz)?;
        if gamma.len() != freqs_hz.len() {
            return Err(Error::Validation(
                "reflection array must match the frequency grid length".into(),
            ));
        }
        if !(z0_ohm > 0.0) || !z0_ohm.is_finite() {
            return Err(Error::Validation(format!(
                "reference impedance must be positive and finite, got {z0_ohm}"
            )));
        }
        Ok(Self {
            freqs_hz,
            gamma,
            z0_ohm,
        })
    }

    pub fn freqs_hz(&self) -> &[f64] {
        &self.freqs_hz
    }

    pub fn gamma(&self) -> &[Complex64] {
        &self.gamma
    }

    pub fn z0_ohm(&self) -> f64 {
        self.z0_ohm
    }

    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }

    /// View the reflection data as a `gamma_in` frequency response.
    pub fn into_response(self) -> FrequencyResponse {
        FrequencyResponse {
            freqs_hz: self.freqs_hz,
            values: self.gamma,
            role: ResponseRole::GammaIn,
            params: BTreeMap::new(),
            node_id: None,
        }
    }
}
