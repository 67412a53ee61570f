//! Touchstone v1 reader and writer.
//!
//! Supported subset: option line `# <unit> S <RI|MA|DB> R <z0>`, `!`
//! comments, 1-port (3 columns) and 2-port (9 columns, row order
//! S11 S21 S12 S22). Touchstone v2 keywords are rejected.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::netio::{OnePortNetwork, TwoPortNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TouchstoneFormat {
    /// real, imaginary
    Ri,
    /// linear magnitude, angle in degrees
    Ma,
    /// 20*log10 magnitude, angle in degrees
    Db,
}

impl TouchstoneFormat {
    fn token(&self) -> &'static str {
        match self {
            TouchstoneFormat::Ri => "RI",
            TouchstoneFormat::Ma => "MA",
            TouchstoneFormat::Db => "DB",
        }
    }

    fn decode(&self, a: f64, b: f64) -> Complex64 {
        match self {
            TouchstoneFormat::Ri => Complex64::new(a, b),
            TouchstoneFormat::Ma => Complex64::from_polar(a, b * PI / 180.0),
            TouchstoneFormat::Db => Complex64::from_polar(10f64.powf(a / 20.0), b * PI / 180.0),
        }
    }

    fn encode(&self, v: Complex64) -> (f64, f64) {
        match self {
            TouchstoneFormat::Ri => (v.re, v.im),
            TouchstoneFormat::Ma => (v.norm(), v.arg() * 180.0 / PI),
            TouchstoneFormat::Db => (20.0 * v.norm().log10(), v.arg() * 180.0 / PI),
        }
    }
}

/// Result of parsing a Touchstone file: 1-port reflection data or a
/// 2-port network.
#[derive(Debug, Clone, PartialEq)]
pub enum TouchstoneData {
    OnePort(OnePortNetwork),
    TwoPort(TwoPortNetwork),
}

impl TouchstoneData {
    pub fn two_port(self) -> Result<TwoPortNetwork> {
        match self {
            TouchstoneData::TwoPort(net) => Ok(net),
            TouchstoneData::OnePort(_) => Err(Error::Validation(
                "expected a 2-port Touchstone file, found 1-port data".into(),
            )),
        }
    }

    pub fn one_port(self) -> Result<OnePortNetwork> {
        match self {
            TouchstoneData::OnePort(net) => Ok(net),
            TouchstoneData::TwoPort(_) => Err(Error::Validation(
                "expected a 1-port Touchstone file, found 2-port data".into(),
            )),
        }
    }
}

struct OptionLine {
    freq_multiplier: f64,
    format: TouchstoneFormat,
    z0_ohm: f64,
}

fn parse_option_line(line: &str, line_no: usize) -> Result<OptionLine> {
    let mut freq_multiplier = 1e9; // GHz default per v1
    let mut format = TouchstoneFormat::Ma;
    let mut z0_ohm = 50.0;
    let mut tokens = line.split_whitespace();
    while let Some(tok) = tokens.next() {
        match tok.to_ascii_uppercase().as_str() {
            "HZ" => freq_multiplier = 1.0,
            "KHZ" => freq_multiplier = 1e3,
            "MHZ" => freq_multiplier = 1e6,
            "GHZ" => freq_multiplier = 1e9,
            "RI" => format = TouchstoneFormat::Ri,
            "MA" => format = TouchstoneFormat::Ma,
            "DB" => format = TouchstoneFormat::Db,
            "S" => {}
            "Y" | "Z" | "G" | "H" => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("only S-parameter files are supported, found '{tok}'"),
                })
            }
            "R" => {
                let val = tokens.next().ok_or(Error::Parse {
                    line: line_no,
                    message: "option line ends after 'R' without an impedance".into(),
                })?;
                z0_ohm = val.parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid reference impedance '{val}'"),
                })?;
                if !(z0_ohm > 0.0) {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("reference impedance must be positive, got {z0_ohm}"),
                    });
                }
            }
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("malformed option line: unknown token '{other}'"),
                })
            }
        }
    }
    Ok(OptionLine {
        freq_multiplier,
        format,
        z0_ohm,
    })
}

/// Parse Touchstone v1 text into 1-port or 2-port network data. The port
/// count is inferred from the column count of the first data row.
pub fn parse_touchstone(text: &str) -> Result<TouchstoneData> {
    let mut option: Option<OptionLine> = None;
    let mut freqs_hz: Vec<f64> = Vec::new();
    let mut columns: Vec<Vec<Complex64>> = Vec::new();
    let mut pairs_per_row: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('!') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            return Err(Error::Parse {
                line: line_no,
                message: format!("Touchstone v2 keyword '{line}' is not supported"),
            });
        }
        if let Some(rest) = line.strip_prefix('#') {
            if option.is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "duplicate option line".into(),
                });
            }
            option = Some(parse_option_line(rest, line_no)?);
            continue;
        }

        let opt = option.as_ref().ok_or(Error::Parse {
            line: line_no,
            message: "data row before option line".into(),
        })?;
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid number '{tok}'"),
                })
            })
            .collect::<Result<_>>()?;

        let pairs = match fields.len() {
            3 => 1,
            9 => 4,
            n => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "wrong column count: expected 3 (1-port) or 9 (2-port) values, found {n}"
                    ),
                })
            }
        };
        match pairs_per_row {
            None => {
                pairs_per_row = Some(pairs);
                columns = vec![Vec::new(); pairs];
            }
            Some(expected) if expected != pairs => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "wrong column count: expected {} values per row, found {}",
                        1 + 2 * expected,
                        fields.len()
                    ),
                })
            }
            Some(_) => {}
        }

        let freq = fields[0] * opt.freq_multiplier;
        if let Some(&prev) = freqs_hz.last() {
            if freq <= prev {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-monotone frequency: {freq} Hz follows {prev} Hz"),
                });
            }
        }
        freqs_hz.push(freq);
        for (k, col) in columns.iter_mut().enumerate() {
            col.push(opt.format.decode(fields[1 + 2 * k], fields[2 + 2 * k]));
        }
    }

    let opt = option.ok_or(Error::Parse {
        line: text.lines().count().max(1),
        message: "missing option line".into(),
    })?;
    match pairs_per_row {
        Some(1) => {
            let gamma = columns.pop().unwrap();
            Ok(TouchstoneData::OnePort(OnePortNetwork::new(
                freqs_hz, gamma, opt.z0_ohm,
            )?))
        }
        Some(4) => {
            // v1 two-port row order: S11 S21 S12 S22
            let s22 = columns.pop().unwrap();
            let s12 = columns.pop().unwrap();
            let s21 = columns.pop().unwrap();
            let s11 = columns.pop().unwrap();
            Ok(TouchstoneData::TwoPort(TwoPortNetwork::new(
                freqs_hz, s11, s21, s12, s22, opt.z0_ohm,
            )?))
        }
        _ => Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "no data rows".into(),
        }),
    }
}

fn push_pair(out: &mut String, v: Complex64, format: TouchstoneFormat) {
    let (a, b) = format.encode(v);
    write!(out, " {a} {b}").unwrap();
}

/// Emit a 2-port Touchstone v1 file. Frequencies are written in Hz so
/// that `parse(write(x))` round-trips exactly.
pub fn write_touchstone(net: &TwoPortNetwork, format: TouchstoneFormat) -> Result<String> {
    if net.is_empty() {
        return Err(Error::Validation("empty network".into()));
    }
    let mut out = String::new();
    writeln!(out, "! 2-port S-parameters, row order S11 S21 S12 S22").unwrap();
    writeln!(out, "# Hz S {} R {}", format.token(), net.z0_ohm()).unwrap();
    for i in 0..net.len() {
        write!(out, "{}", net.freqs_hz()[i]).unwrap();
        push_pair(&mut out, net.s11()[i], format);
        push_pair(&mut out, net.s21()[i], format);
        push_pair(&mut out, net.s12()[i], format);
        push_pair(&mut out, net.s22()[i], format);
        out.push('\n');
    }
    Ok(out)
}

/// Emit a 1-port Touchstone v1 file (reflection data).
pub fn write_touchstone_one_port(net: &OnePortNetwork, format: TouchstoneFormat) -> Result<String> {
    if net.is_empty() {
        return Err(Error::Validation("empty network".into()));
    }
    let mut out = String::new();
    writeln!(out, "! 1-port reflection data").unwrap();
    writeln!(out, "# Hz S {} R {}", format.token(), net.z0_ohm()).unwrap();
    for i in 0..net.len() {
        write!(out, "{}", net.freqs_hz()[i]).unwrap();
        push_pair(&mut out, net.gamma()[i], format);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_thru_single_line() {
        let data = parse_touchstone("# GHz S RI R 50\n1.0 0 0 1 0 1 0 0 0\n").unwrap();
        let net = data.two_port().unwrap();
        assert_eq!(net.freqs_hz(), &[1e9]);
        assert_eq!(net.s21()[0], Complex64::new(1.0, 0.0));
        assert_eq!(net.s11()[0], Complex64::new(0.0, 0.0));
        assert_eq!(net.z0_ohm(), 50.0);
    }

    #[test]
    fn magnitude_angle_with_zero_angle() {
        let data =
            parse_touchstone("# MHz S MA R 50\n100 0.5 0 0.9 0 0.9 0 0.5 0\n").unwrap();
        let net = data.two_port().unwrap();
        assert_eq!(net.freqs_hz(), &[1e8]);
        assert_eq!(net.s11()[0], Complex64::new(0.5, 0.0));
    }

    #[test]
    fn one_port_file() {
        let data = parse_touchstone("! gamma\n# Hz S RI R 50\n1e6 0.1 -0.2\n2e6 0.1 -0.3\n")
            .unwrap();
        let net = data.one_port().unwrap();
        assert_eq!(net.len(), 2);
        assert_eq!(net.gamma()[1], Complex64::new(0.1, -0.3));
    }

    #[test]
    fn malformed_option_line_reports_line_number() {
        let err = parse_touchstone("# GHz S XX R 50\n1 0 0 1 0 1 0 0 0\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 1);
                assert!(message.contains("XX"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_monotone_rejected_with_line_number() {
        let err =
            parse_touchstone("# Hz S RI R 50\n2e6 0 0 1 0 1 0 0 0\n1e6 0 0 1 0 1 0 0 0\n")
                .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_column_count_reports_line_number() {
        let err = parse_touchstone("# Hz S RI R 50\n1e6 0 0 1 0\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("column"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn v2_keyword_rejected() {
        let err = parse_touchstone("[Version] 2.0\n# Hz S RI R 50\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn write_thru_has_unit_magnitude_zero_phase() {
        let net = TwoPortNetwork::new(
            vec![1e9],
            vec![Complex64::new(0.0, 0.0)],
            vec![Complex64::new(1.0, 0.0)],
            vec![Complex64::new(1.0, 0.0)],
            vec![Complex64::new(0.0, 0.0)],
            50.0,
        )
        .unwrap();
        let text = write_touchstone(&net, TouchstoneFormat::Ma).unwrap();
        let row = text.lines().last().unwrap();
        let fields: Vec<f64> = row
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(fields[3], 1.0); // |s21|
        assert_eq!(fields[4], 0.0); // phase
    }

    #[test]
    fn write_empty_network_is_an_error() {
        let net = TwoPortNetwork::new(vec![], vec![], vec![], vec![], vec![], 50.0).unwrap();
        let err = write_touchstone(&net, TouchstoneFormat::Ri).unwrap_err();
        assert!(err.to_string().contains("empty network"));
    }
}
