//! Parsers for the small flag value grammars: bands, grids, orders,
//! overrides, probes.

use std::collections::BTreeMap;

use polemap::ident::FitOrder;
use polemap::oracle::ProbeModel;

pub fn parse_band(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("band must be LOW:HIGH in Hz, got '{s}'"))?;
    let lo: f64 = lo.parse().map_err(|_| format!("invalid band low '{lo}'"))?;
    let hi: f64 = hi.parse().map_err(|_| format!("invalid band high '{hi}'"))?;
    if !(lo > 0.0 && hi > lo) {
        return Err(format!("band must satisfy 0 < low < high, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

pub fn parse_order(s: &str) -> Result<FitOrder, String> {
    if s == "auto" {
        return Ok(FitOrder::Auto);
    }
    let n: usize = s
        .parse()
        .map_err(|_| format!("order must be 'auto' or a positive integer, got '{s}'"))?;
    if n == 0 {
        return Err("order must be positive".into());
    }
    Ok(FitOrder::Fixed(n))
}

/// LOW:HIGH:POINTS with an optional ':lin' suffix; logarithmic spacing
/// by default.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 && parts.len() != 4 {
        return Err(format!("grid must be LOW:HIGH:POINTS[:lin], got '{s}'"));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| format!("invalid grid low '{}'", parts[0]))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| format!("invalid grid high '{}'", parts[1]))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| format!("invalid grid point count '{}'", parts[2]))?;
    let linear = match parts.get(3) {
        None => false,
        Some(&"lin") => true,
        Some(other) => return Err(format!("unknown grid suffix '{other}'")),
    };
    if !(lo > 0.0 && hi > lo) || n < 2 {
        return Err(format!("grid must satisfy 0 < low < high with >= 2 points, got '{s}'"));
    }
    if linear {
        let step = (hi - lo) / (n - 1) as f64;
        let mut out: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        out[0] = lo;
        *out.last_mut().unwrap() = hi;
        Ok(out)
    } else {
        polemap::oracle::log_grid(lo, hi, n).map_err(|e| e.to_string())
    }
}

/// Repeated `key=value` overrides.
pub fn parse_overrides(pairs: &[String]) -> Result<BTreeMap<String, f64>, String> {
    let mut map = BTreeMap::new();
    for pair in pairs {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| format!("override must be key=value, got '{pair}'"))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| format!("override value for '{k}' is not a number: '{v}'"))?;
        if map.insert(k.trim().to_string(), value).is_some() {
            return Err(format!("duplicate override '{k}'"));
        }
    }
    Ok(map)
}

/// `off`, `default`, or `r=OHMS,c=FARADS` in either order.
pub fn parse_probe(s: &str) -> Result<Option<ProbeModel>, String> {
    match s {
        "off" => Ok(None),
        "default" => Ok(Some(ProbeModel::default())),
        custom => {
            let mut r: Option<f64> = None;
            let mut c: Option<f64> = None;
            for part in custom.split(',') {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| format!("probe must be r=..,c=.., got '{custom}'"))?;
                let value: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| format!("invalid probe value '{v}'"))?;
                match k.trim() {
                    "r" => r = Some(value),
                    "c" => c = Some(value),
                    other => return Err(format!("unknown probe field '{other}'")),
                }
            }
            Ok(Some(ProbeModel {
                r_shunt_ohm: r.ok_or("probe is missing r=")?,
                c_shunt_farad: c.unwrap_or(0.0),
            }))
        }
    }
}

/// `RE:IM` complex literal in rad/s.
pub fn parse_complex(s: &str) -> Result<polemap::Complex64, String> {
    let (re, im) = s
        .split_once(':')
        .ok_or_else(|| format!("complex value must be RE:IM, got '{s}'"))?;
    let re: f64 = re.parse().map_err(|_| format!("invalid real part '{re}'"))?;
    let im: f64 = im.parse().map_err(|_| format!("invalid imaginary part '{im}'"))?;
    Ok(polemap::Complex64::new(re, im))
}
