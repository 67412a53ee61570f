//! Pole reports: one entry per sweep point, one record per pole.
//!
//! JSON schema: top-level array of
//! `{params:{...}, poles:[{re_per_s, im_per_s, f_res_hz, damping_ratio,
//! q_factor, critical}], fit_rms_error}`. The CSV flattening emits one
//! row per pole with the union of parameter keys as leading columns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RESERVED_COLUMNS: [&str; 7] = [
    "re_per_s",
    "im_per_s",
    "f_res_hz",
    "damping_ratio",
    "q_factor",
    "critical",
    "fit_rms_error",
];

/// A single pole with its stability-margin metrics. Only upper-half-plane
/// representatives (im_per_s >= 0) are reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportedPole {
    pub re_per_s: f64,
    pub im_per_s: f64,
    pub f_res_hz: f64,
    pub damping_ratio: f64,
    pub q_factor: Option<f64>,
    pub critical: bool,
}

impl ReportedPole {
    fn validate(&self) -> Result<()> {
        if self.im_per_s < 0.0 {
            return Err(Error::Validation(format!(
                "pole reports hold upper-half-plane representatives only, got im = {}",
                self.im_per_s
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleReportEntry {
    pub params: BTreeMap<String, f64>,
    pub poles: Vec<ReportedPole>,
    pub fit_rms_error: f64,
}

impl PoleReportEntry {
    pub fn new(
        params: BTreeMap<String, f64>,
        poles: Vec<ReportedPole>,
        fit_rms_error: f64,
    ) -> Result<Self> {
        for p in &poles {
            p.validate()?;
        }
        Ok(Self {
            params,
            poles,
            fit_rms_error,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PoleReport {
    pub entries: Vec<PoleReportEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

pub fn write_pole_report(report: &PoleReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(report)
                .map_err(|e| Error::Numerical(format!("JSON serialization failed: {e}")))?;
            text.push('\n');
            Ok(text)
        }
        ReportFormat::Csv => write_csv(report),
    }
}

fn write_csv(report: &PoleReport) -> Result<String> {
    let mut keys: BTreeSet<&str> = BTreeSet::new();
    for entry in &report.entries {
        for key in entry.params.keys() {
            if RESERVED_COLUMNS.contains(&key.as_str()) {
                return Err(Error::Validation(format!(
                    "parameter key '{key}' collides with a reserved report column"
                )));
            }
            keys.insert(key);
        }
    }
    let mut out = String::new();
    for key in &keys {
        write!(out, "{key},").unwrap();
    }
    writeln!(out, "{}", RESERVED_COLUMNS.join(",")).unwrap();
    for entry in &report.entries {
        for pole in &entry.poles {
            for key in &keys {
                match entry.params.get(*key) {
                    Some(v) => write!(out, "{v},").unwrap(),
                    None => write!(out, ",").unwrap(),
                }
            }
            write!(
                out,
                "{},{},{},{},",
                pole.re_per_s, pole.im_per_s, pole.f_res_hz, pole.damping_ratio
            )
            .unwrap();
            match pole.q_factor {
                Some(q) => write!(out, "{q},").unwrap(),
                None => write!(out, ",").unwrap(),
            }
            writeln!(out, "{},{}", pole.critical, entry.fit_rms_error).unwrap();
        }
    }
    Ok(out)
}

pub fn parse_pole_report(json: &str) -> Result<PoleReport> {
    let report: PoleReport = serde_json::from_str(json).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("invalid pole report JSON: {e}"),
    })?;
    for entry in &report.entries {
        for pole in &entry.poles {
            pole.validate()?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn single_pole_report() -> PoleReport {
        let re = -1e7;
        let im = 2.0 * PI * 1.9e8;
        let norm = (re * re + im * im).sqrt();
        let pole = ReportedPole {
            re_per_s: re,
            im_per_s: im,
            f_res_hz: im / (2.0 * PI),
            damping_ratio: -re / norm,
            q_factor: Some(norm / (-2.0 * re)),
            critical: true,
        };
        let mut params = BTreeMap::new();
        params.insert("v_dd_volts".to_string(), 2.9);
        PoleReport {
            entries: vec![PoleReportEntry::new(params, vec![pole], 1e-9).unwrap()],
        }
    }

    #[test]
    fn csv_row_carries_resonance_frequency() {
        let report = single_pole_report();
        let csv = write_pole_report(&report, ReportFormat::Csv).unwrap();
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert_eq!(
            header,
            "v_dd_volts,re_per_s,im_per_s,f_res_hz,damping_ratio,q_factor,critical,fit_rms_error"
        );
        let row = lines.next().unwrap();
        let f_res: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!((f_res - 1.9e8).abs() < 1e-3);
    }

    #[test]
    fn empty_report_is_header_only() {
        let csv = write_pole_report(&PoleReport::default(), ReportFormat::Csv).unwrap();
        assert_eq!(csv.lines().count(), 1);
        let json = write_pole_report(&PoleReport::default(), ReportFormat::Json).unwrap();
        assert_eq!(json.trim(), "[]");
    }

    #[test]
    fn json_round_trip() {
        let report = single_pole_report();
        let json = write_pole_report(&report, ReportFormat::Json).unwrap();
        let parsed = parse_pole_report(&json).unwrap();
        assert_eq!(report, parsed);
    }

    #[test]
    fn lower_half_plane_pole_rejected() {
        let pole = ReportedPole {
            re_per_s: -1.0,
            im_per_s: -5.0,
            f_res_hz: -5.0 / (2.0 * PI),
            damping_ratio: 0.2,
            q_factor: None,
            critical: false,
        };
        let err = PoleReportEntry::new(BTreeMap::new(), vec![pole], 0.0).unwrap_err();
        assert!(err.to_string().contains("upper-half"));
    }
}
