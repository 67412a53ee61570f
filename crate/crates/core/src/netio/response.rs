//! Frequency-response tables: UTF-8 CSV with `#`-prefixed metadata lines.
//!
//! Two headers are accepted: `freq_hz,real,imag` and
//! `freq_hz,mag_db,phase_deg`. Metadata lines carry `# key=value` pairs;
//! the reserved keys `role` and `node_id` set the corresponding response
//! fields, everything else lands in the sweep-parameter map.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::netio::{FrequencyResponse, ResponseRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseTableFormat {
    RealImag,
    MagDb,
}

pub fn parse_response_table(text: &str) -> Result<FrequencyResponse> {
    let mut params: BTreeMap<String, f64> = BTreeMap::new();
    let mut role = ResponseRole::Generic;
    let mut node_id: Option<String> = None;
    let mut format: Option<ResponseTableFormat> = None;
    let mut freqs_hz: Vec<f64> = Vec::new();
    let mut values: Vec<Complex64> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if rest.is_empty() {
                continue;
            }
            let (key, value) = rest.split_once('=').ok_or(Error::Parse {
                line: line_no,
                message: format!("metadata line must be '# key=value', got '{rest}'"),
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "role" => role = ResponseRole::parse(value).map_err(|e| Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })?,
                "node_id" => node_id = Some(value.to_string()),
                _ => {
                    let v: f64 = value.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("metadata value for '{key}' is not a number: '{value}'"),
                    })?;
                    if params.insert(key.to_string(), v).is_some() {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("duplicate metadata key '{key}'"),
                        });
                    }
                }
            }
            continue;
        }

        if format.is_none() {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            format = Some(match cols.as_slice() {
                ["freq_hz", "real", "imag"] => ResponseTableFormat::RealImag,
                ["freq_hz", "mag_db", "phase_deg"] => ResponseTableFormat::MagDb,
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("unknown header '{line}'"),
                    })
                }
            });
            continue;
        }

        let fields: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid number '{}'", tok.trim()),
                })
            })
            .collect::<Result<_>>()?;
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 columns, found {}", fields.len()),
            });
        }
        if let Some(&prev) = freqs_hz.last() {
            if fields[0] == prev {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("duplicate frequency {} Hz", fields[0]),
                });
            }
            if fields[0] < prev {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-monotone frequency: {} Hz follows {prev} Hz", fields[0]),
                });
            }
        }
        freqs_hz.push(fields[0]);
        values.push(match format.unwrap() {
            ResponseTableFormat::RealImag => Complex64::new(fields[1], fields[2]),
            ResponseTableFormat::MagDb => {
                Complex64::from_polar(10f64.powf(fields[1] / 20.0), fields[2] * PI / 180.0)
            }
        });
    }

    if format.is_none() {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "missing header row".into(),
        });
    }

    let mut resp = FrequencyResponse::new(freqs_hz, values, role)?.with_params(params);
    if let Some(id) = node_id {
        resp = resp.with_node_id(id);
    }
    Ok(resp)
}

pub fn write_response_table(
    resp: &FrequencyResponse,
    format: ResponseTableFormat,
) -> Result<String> {
    if format == ResponseTableFormat::MagDb {
        for (i, v) in resp.values().iter().enumerate() {
            if v.norm() == 0.0 {
                return Err(Error::Validation(format!(
                    "zero magnitude at {} Hz cannot be written in dB format",
                    resp.freqs_hz()[i]
                )));
            }
        }
    }
    let mut out = String::new();
    writeln!(out, "# role={}", resp.role().as_str()).unwrap();
    if let Some(id) = resp.node_id() {
        writeln!(out, "# node_id={id}").unwrap();
    }
    for (k, v) in resp.params() {
        writeln!(out, "# {k}={v}").unwrap();
    }
    match format {
        ResponseTableFormat::RealImag => {
            writeln!(out, "freq_hz,real,imag").unwrap();
            for (f, v) in resp.freqs_hz().iter().zip(resp.values()) {
                writeln!(out, "{f},{},{}", v.re, v.im).unwrap();
            }
        }
        ResponseTableFormat::MagDb => {
            writeln!(out, "freq_hz,mag_db,phase_deg").unwrap();
            for (f, v) in resp.freqs_hz().iter().zip(resp.values()) {
                writeln!(
                    out,
                    "{f},{},{}",
                    20.0 * v.norm().log10(),
                    v.arg() * 180.0 / PI
                )
                .unwrap();
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metadata_populates_params() {
        let text = "# v_dd_volts=2.9\nfreq_hz,real,imag\n1e6,1.0,0.0\n2e6,0.5,-0.5\n";
        let resp = parse_response_table(text).unwrap();
        assert_eq!(resp.params().get("v_dd_volts"), Some(&2.9));
        assert_eq!(resp.len(), 2);
        assert_eq!(resp.role(), ResponseRole::Generic);
    }

    #[test]
    fn zero_db_zero_phase_is_unity() {
        let text = "freq_hz,mag_db,phase_deg\n1e6,0,0\n";
        let resp = parse_response_table(text).unwrap();
        assert_eq!(resp.values()[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn db_phase_conversion() {
        let text = "freq_hz,mag_db,phase_deg\n1e6,-20,90\n";
        let resp = parse_response_table(text).unwrap();
        let v = resp.values()[0];
        assert!((v.re - 0.0).abs() < 1e-15);
        assert!((v.im - 0.1).abs() < 1e-15);
        // |value| = 10^(mag_db/20) exactly at representable points
        assert_eq!(v.norm(), 0.1);
    }

    #[test]
    fn unknown_header_rejected() {
        let err = parse_response_table("freq_hz,abs,angle\n1e6,1,0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn duplicate_frequency_rejected() {
        let err =
            parse_response_table("freq_hz,real,imag\n1e6,1,0\n1e6,1,0\n").unwrap_err();
        assert!(err.to_string().contains("duplicate frequency"));
    }

    #[test]
    fn missing_metadata_is_not_an_error() {
        let resp = parse_response_table("freq_hz,real,imag\n1e6,1,0\n").unwrap();
        assert!(resp.params().is_empty());
    }

    #[test]
    fn role_and_node_id_round_trip() {
        let text = "# role=h_vn\n# node_id=n2\n# p_in_dbm=-40\nfreq_hz,real,imag\n1e6,0.25,0.5\n";
        let resp = parse_response_table(text).unwrap();
        assert_eq!(resp.role(), ResponseRole::HVn);
        assert_eq!(resp.node_id(), Some("n2"));
        let written = write_response_table(&resp, ResponseTableFormat::RealImag).unwrap();
        let again = parse_response_table(&written).unwrap();
        assert_eq!(resp, again);
    }
}
