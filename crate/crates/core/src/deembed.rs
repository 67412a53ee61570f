//! Calibrated closed-loop response construction.
//!
//! `compute_h_input` refers the generator voltage to the internal input
//! reference node through the input-block S-parameters and the DUT's
//! input reflection coefficient; `compute_h_n` forms the probe-ratio
//! quotient between node n and the reference node; `compose_h_vn`
//! multiplies the two into the closed-loop transmission response. The
//! large-signal chain prepends a power-combiner two-port to the block.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::netalg::{abcd_to_s, cascade, gamma_to_impedance, s_to_abcd};
use crate::netio::{validate_grid, FrequencyResponse, ResponseRole, TwoPortNetwork};

/// Source/reference impedance used when none is given.
pub const DEFAULT_Z0_OHM: f64 = 50.0;

/// Reference-ratio magnitudes below this floor signal an unusable
/// reference measurement.
pub const DEFAULT_REFERENCE_FLOOR: f64 = 1e-12;

/// Inputs for the input-side de-embedding.
///
/// `gamma_in` is the reflection coefficient of the DUT seen at the plane
/// where the generator drives it (the input connector). In large-signal
/// mode `block` is the combiner-plus-block cascade and the gamma data is
/// measured with the drive off.
#[derive(Debug, Clone)]
pub struct DeembedInputs {
    block: TwoPortNetwork,
    gamma_in: FrequencyResponse,
    z0_ohm: f64,
}

impl DeembedInputs {
    pub fn new(
        block: TwoPortNetwork,
        gamma_in: FrequencyResponse,
        z0_ohm: f64,
    ) -> Result<Self> {
        if gamma_in.role() != ResponseRole::GammaIn {
            return Err(Error::Validation(format!(
                "gamma input must carry role gamma_in, got {}",
                gamma_in.role().as_str()
            )));
        }
        block.check_same_grid(gamma_in.freqs_hz(), "block vs gamma_in")?;
        if !(z0_ohm > 0.0) || !z0_ohm.is_finite() {
            return Err(Error::Validation(format!(
                "source impedance must be positive and finite, got {z0_ohm}"
            )));
        }
        Ok(Self {
            block,
            gamma_in,
            z0_ohm,
        })
    }

    pub fn block(&self) -> &TwoPortNetwork {
        &self.block
    }

    pub fn gamma_in(&self) -> &FrequencyResponse {
        &self.gamma_in
    }

    pub fn z0_ohm(&self) -> f64 {
        self.z0_ohm
    }

    /// True when any |Γ_in| exceeds 1 (active DUT). Permitted, but worth
    /// surfacing.
    pub fn has_active_reflection(&self) -> bool {
        self.gamma_in.values().iter().any(|g| g.norm() > 1.0)
    }
}

/// `compute_h_input` output with the intermediate voltage divider kept
/// for diagnostics.
#[derive(Debug, Clone)]
pub struct HInputOutcome {
    pub h_input: FrequencyResponse,
    /// Per-frequency v_in/v_gen = Z_in/(Z_in + z0).
    pub v_in_over_v_gen: Vec<Complex64>,
    /// Any |Γ_in| > 1 seen on the grid.
    pub active_flagged: bool,
}

/// Voltage transfer from the generator to the input reference node:
/// v_in/v_gen = Z_in/(Z_in + z0) and
/// v_ref/v_in = (s21 + (Γ − s11)(1 + s22)/s12) / (1 + Γ).
pub fn compute_h_input(inputs: &DeembedInputs) -> Result<HInputOutcome> {
    let block = &inputs.block;
    let gamma = &inputs.gamma_in;
    let z0 = inputs.z0_ohm;
    let n = gamma.len();
    let mut divider = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let one = Complex64::new(1.0, 0.0);
    for i in 0..n {
        let freq = gamma.freqs_hz()[i];
        let g = gamma.values()[i];
        let s11 = block.s11()[i];
        let s21 = block.s21()[i];
        let s12 = block.s12()[i];
        let s22 = block.s22()[i];
        if s12.norm() == 0.0 {
            return Err(Error::Singular {
                freq_hz: freq,
                message: "block s12 = 0 blocks the reverse path of the de-embedding".into(),
            });
        }
        if (one + g).norm() == 0.0 {
            return Err(Error::Singular {
                freq_hz: freq,
                message: "gamma_in = -1 gives a zero denominator in v_ref/v_in".into(),
            });
        }
        let z_in = gamma_to_impedance(g, z0).map_err(|_| Error::Singular {
            freq_hz: freq,
            message: "gamma_in = 1 corresponds to infinite input impedance".into(),
        })?;
        let den = z_in + z0;
        if den.norm() == 0.0 {
            return Err(Error::Singular {
                freq_hz: freq,
                message: "Z_in + z0 = 0 in the input voltage divider".into(),
            });
        }
        let vin_over_vgen = z_in / den;
        let vref_over_vin = (s21 + (g - s11) * (one + s22) / s12) / (one + g);
        divider.push(vin_over_vgen);
        values.push(vin_over_vgen * vref_over_vin);
    }
    let h_input = FrequencyResponse::new(gamma.freqs_hz().to_vec(), values, ResponseRole::HInput)?
        .with_params(gamma.params().clone());
    Ok(HInputOutcome {
        h_input,
        v_in_over_v_gen: divider,
        active_flagged: inputs.has_active_reflection(),
    })
}

/// Probe-ratio quotient (B_n/R1_n)/(B_ref/R1_ref) between node n and the
/// input reference node, with a floor check on the reference magnitude.
pub fn compute_h_n(
    at_node: &FrequencyResponse,
    at_reference: &FrequencyResponse,
) -> Result<FrequencyResponse> {
    compute_h_n_with_floor(at_node, at_reference, DEFAULT_REFERENCE_FLOOR)
}

pub fn compute_h_n_with_floor(
    at_node: &FrequencyResponse,
    at_reference: &FrequencyResponse,
    reference_floor: f64,
) -> Result<FrequencyResponse> {
    at_node.check_same_grid(at_reference, "node ratio vs reference ratio")?;
    let mut values = Vec::with_capacity(at_node.len());
    for i in 0..at_node.len() {
        let denom = at_reference.values()[i];
        if denom.norm() < reference_floor {
            return Err(Error::Singular {
                freq_hz: at_node.freqs_hz()[i],
                message: format!(
                    "reference ratio magnitude {} is below the floor {reference_floor}; \
                     the reference measurement is unusable",
                    denom.norm()
                ),
            });
        }
        values.push(at_node.values()[i] / denom);
    }
    let params = FrequencyResponse::merge_params(at_node.params(), at_reference.params())?;
    let mut resp = FrequencyResponse::new(at_node.freqs_hz().to_vec(), values, ResponseRole::HN)?
        .with_params(params);
    if let Some(id) = at_node.node_id() {
        resp = resp.with_node_id(id);
    }
    Ok(resp)
}

/// Closed-loop response H_vn = H_input * H_n.
pub fn compose_h_vn(
    h_input: &FrequencyResponse,
    h_n: &FrequencyResponse,
) -> Result<FrequencyResponse> {
    if h_input.role() != ResponseRole::HInput {
        return Err(Error::Validation(format!(
            "first factor must carry role h_input, got {}",
            h_input.role().as_str()
        )));
    }
    if h_n.role() != ResponseRole::HN {
        return Err(Error::Validation(format!(
            "second factor must carry role h_n, got {}",
            h_n.role().as_str()
        )));
    }
    h_input.check_same_grid(h_n, "h_input vs h_n")?;
    let values: Vec<Complex64> = h_input
        .values()
        .iter()
        .zip(h_n.values())
        .map(|(a, b)| a * b)
        .collect();
    let params = FrequencyResponse::merge_params(h_input.params(), h_n.params())?;
    let mut resp = FrequencyResponse::new(h_input.freqs_hz().to_vec(), values, ResponseRole::HVn)?
        .with_params(params);
    if let Some(id) = h_n.node_id() {
        resp = resp.with_node_id(id);
    }
    Ok(resp)
}

/// Large-signal chain: cascade the power combiner (VNA-side 2-port path,
/// third port terminated) in front of the input block. The result is
/// usable as `block` in [`compute_h_input`].
pub fn extend_block_with_combiner(
    combiner: &TwoPortNetwork,
    block: &TwoPortNetwork,
) -> Result<TwoPortNetwork> {
    if combiner.z0_ohm() != block.z0_ohm() {
        return Err(Error::Validation(format!(
            "combiner and block reference impedances differ: {} vs {}",
            combiner.z0_ohm(),
            block.z0_ohm()
        )));
    }
    combiner.check_same_grid(block.freqs_hz(), "combiner vs block")?;
    let chained = cascade(&s_to_abcd(combiner)?, &s_to_abcd(block)?)?;
    abcd_to_s(&chained, block.z0_ohm())
}

/// Resample a response onto a new grid with cubic interpolation applied
/// to the real and imaginary parts separately. Grid alignment is always
/// this explicit step; no operation interpolates silently.
/// Extrapolation outside the measured span is refused.
pub fn resample(resp: &FrequencyResponse, new_freqs_hz: &[f64]) -> Result<FrequencyResponse> {
    validate_grid(new_freqs_hz)?;
    if resp.len() < 2 {
        return Err(Error::Validation(
            "resampling needs at least two source points".into(),
        ));
    }
    let lo = resp.freqs_hz()[0];
    let hi = *resp.freqs_hz().last().unwrap();
    for &f in new_freqs_hz {
        if f < lo || f > hi {
            return Err(Error::Validation(format!(
                "resample target {f} Hz lies outside the measured span [{lo}, {hi}] Hz"
            )));
        }
    }
    let re: Vec<f64> = resp.values().iter().map(|v| v.re).collect();
    let im: Vec<f64> = resp.values().iter().map(|v| v.im).collect();
    let re_spline = CubicSpline::fit(resp.freqs_hz(), &re);
    let im_spline = CubicSpline::fit(resp.freqs_hz(), &im);
    let values: Vec<Complex64> = new_freqs_hz
        .iter()
        .map(|&f| Complex64::new(re_spline.eval(f), im_spline.eval(f)))
        .collect();
    let mut out = FrequencyResponse::new(new_freqs_hz.to_vec(), values, resp.role())?
        .with_params(resp.params().clone());
    if let Some(id) = resp.node_id() {
        out = out.with_node_id(id);
    }
    Ok(out)
}

/// Natural cubic spline over strictly increasing knots.
struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    fn fit(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the tridiagonal system for the
            // interior second derivatives; natural ends stay zero.
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                let h0 = xs[i + 1] - xs[i];
                let h1 = xs[i + 2] - xs[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h1 - (ys[i + 1] - ys[i]) / h0);
            }
            for i in 1..m {
                let h = xs[i + 1] - xs[i]; // sub-diagonal entry
                let w = h / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                second[i + 1] = (rhs[i] - upper[i] * second[i + 2]) / diag[i];
            }
        }
        Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            second,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let mut k = match self
            .xs
            .binary_search_by(|probe| probe.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        if k >= n - 1 {
            k = n - 2;
        }
        let h = self.xs[k + 1] - self.xs[k];
        let a = (self.xs[k + 1] - x) / h;
        let b = (x - self.xs[k]) / h;
        a * self.ys[k]
            + b * self.ys[k + 1]
            + ((a * a * a - a) * self.second[k] + (b * b * b - b) * self.second[k + 1]) * h * h
                / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netalg::ideal;
    use std::collections::BTreeMap;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| 1e7 + 1e7 * i as f64).collect()
    }

    fn thru_block(freqs: &[f64], z0: f64) -> TwoPortNetwork {
        abcd_to_s(&ideal::thru(freqs), z0).unwrap()
    }

    fn gamma_resp(freqs: &[f64], g: Complex64) -> FrequencyResponse {
        FrequencyResponse::new(freqs.to_vec(), vec![g; freqs.len()], ResponseRole::GammaIn)
            .unwrap()
    }

    #[test]
    fn matched_thru_gives_half() {
        let freqs = grid(3);
        let inputs = DeembedInputs::new(
            thru_block(&freqs, 50.0),
            gamma_resp(&freqs, Complex64::new(0.0, 0.0)),
            50.0,
        )
        .unwrap();
        let out = compute_h_input(&inputs).unwrap();
        for (v, d) in out.h_input.values().iter().zip(&out.v_in_over_v_gen) {
            assert!((v - 0.5).norm() < 1e-14);
            assert!((d - 0.5).norm() < 1e-14);
        }
        assert!(!out.active_flagged);
    }

    #[test]
    fn matched_line_gives_half_delay() {
        let freqs = grid(8);
        let tau = 0.5e-9;
        let block = abcd_to_s(&ideal::line(&freqs, tau, 50.0), 50.0).unwrap();
        let inputs =
            DeembedInputs::new(block, gamma_resp(&freqs, Complex64::new(0.0, 0.0)), 50.0)
                .unwrap();
        let out = compute_h_input(&inputs).unwrap();
        for (i, &f) in freqs.iter().enumerate() {
            let theta = 2.0 * std::f64::consts::PI * f * tau;
            let expect = 0.5 * Complex64::from_polar(1.0, -theta);
            assert!(
                (out.h_input.values()[i] - expect).norm() < 1e-12,
                "at {f} Hz"
            );
        }
    }

    #[test]
    fn lossy_block_with_mismatch_matches_hand_value() {
        let freqs = vec![1e8];
        let block = TwoPortNetwork::new(
            freqs.clone(),
            vec![Complex64::new(0.2, 0.0)],
            vec![Complex64::new(0.9, 0.0)],
            vec![Complex64::new(0.9, 0.0)],
            vec![Complex64::new(0.2, 0.0)],
            50.0,
        )
        .unwrap();
        let inputs =
            DeembedInputs::new(block, gamma_resp(&freqs, Complex64::new(0.1, 0.0)), 50.0)
                .unwrap();
        let out = compute_h_input(&inputs).unwrap();
        // v_in/v_gen = (1+0.1)/2 = 0.55,
        // v_ref/v_in = (0.9 + (0.1-0.2)*1.2/0.9)/1.1, product = 0.383333...
        assert!((out.h_input.values()[0] - Complex64::new(0.3833333333333333, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gamma_minus_one_is_singular() {
        let freqs = grid(1);
        let inputs = DeembedInputs::new(
            thru_block(&freqs, 50.0),
            gamma_resp(&freqs, Complex64::new(-1.0, 0.0)),
            50.0,
        )
        .unwrap();
        assert!(matches!(
            compute_h_input(&inputs).unwrap_err(),
            Error::Singular { .. }
        ));
    }

    #[test]
    fn h_n_self_ratio_is_unity() {
        let freqs = grid(4);
        let vals: Vec<Complex64> = freqs
            .iter()
            .map(|f| Complex64::new(1.0 / f, 2.0 / f))
            .collect();
        let a = FrequencyResponse::new(freqs.clone(), vals.clone(), ResponseRole::RatioBOverR1)
            .unwrap();
        let h = compute_h_n(&a, &a).unwrap();
        for v in h.values() {
            assert!((v - 1.0).norm() < 1e-15);
        }
        assert_eq!(h.role(), ResponseRole::HN);
    }

    #[test]
    fn h_n_doubled_numerator() {
        let freqs = grid(2);
        let base = vec![Complex64::new(0.2, -0.1); 2];
        let double: Vec<Complex64> = base.iter().map(|v| 2.0 * v).collect();
        let num =
            FrequencyResponse::new(freqs.clone(), double, ResponseRole::RatioBOverR1).unwrap();
        let den = FrequencyResponse::new(freqs, base, ResponseRole::RatioBOverR1).unwrap();
        let h = compute_h_n(&num, &den).unwrap();
        for v in h.values() {
            assert!((v - 2.0).norm() < 1e-15);
        }
    }

    #[test]
    fn h_n_reference_floor_names_frequency() {
        let freqs = grid(2);
        let num = FrequencyResponse::new(
            freqs.clone(),
            vec![Complex64::new(1.0, 0.0); 2],
            ResponseRole::RatioBOverR1,
        )
        .unwrap();
        let den = FrequencyResponse::new(
            freqs,
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            ResponseRole::RatioBOverR1,
        )
        .unwrap();
        match compute_h_n(&num, &den).unwrap_err() {
            Error::Singular { freq_hz, .. } => assert_eq!(freq_hz, 2e7),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn compose_constant_product() {
        let freqs = grid(3);
        let hi = FrequencyResponse::new(
            freqs.clone(),
            vec![Complex64::new(0.5, 0.0); 3],
            ResponseRole::HInput,
        )
        .unwrap();
        let hn = FrequencyResponse::new(
            freqs,
            vec![Complex64::new(1.0, 0.0); 3],
            ResponseRole::HN,
        )
        .unwrap();
        let hvn = compose_h_vn(&hi, &hn).unwrap();
        assert_eq!(hvn.role(), ResponseRole::HVn);
        for v in hvn.values() {
            assert!((v - 0.5).norm() < 1e-15);
        }
    }

    #[test]
    fn compose_rejects_role_mismatch_and_param_conflict() {
        let freqs = grid(2);
        let generic = FrequencyResponse::new(
            freqs.clone(),
            vec![Complex64::new(1.0, 0.0); 2],
            ResponseRole::Generic,
        )
        .unwrap();
        let hn = FrequencyResponse::new(
            freqs.clone(),
            vec![Complex64::new(1.0, 0.0); 2],
            ResponseRole::HN,
        )
        .unwrap();
        assert!(compose_h_vn(&generic, &hn).is_err());

        let mut p1 = BTreeMap::new();
        p1.insert("v_dd_volts".to_string(), 1.5);
        let mut p2 = BTreeMap::new();
        p2.insert("v_dd_volts".to_string(), 2.9);
        let hi = FrequencyResponse::new(
            freqs.clone(),
            vec![Complex64::new(0.5, 0.0); 2],
            ResponseRole::HInput,
        )
        .unwrap()
        .with_params(p1);
        let hn = hn.with_params(p2);
        assert!(compose_h_vn(&hi, &hn).is_err());
    }

    #[test]
    fn drive_off_and_p_in_tags_coexist() {
        let freqs = grid(2);
        let mut ref_tags = BTreeMap::new();
        ref_tags.insert("drive_off".to_string(), 1.0);
        let mut node_tags = BTreeMap::new();
        node_tags.insert("p_in_dbm".to_string(), 12.0);
        let hi = FrequencyResponse::new(
            freqs.clone(),
            vec![Complex64::new(0.5, 0.0); 2],
            ResponseRole::HInput,
        )
        .unwrap()
        .with_params(ref_tags);
        let hn = FrequencyResponse::new(
            freqs,
            vec![Complex64::new(2.0, 0.0); 2],
            ResponseRole::HN,
        )
        .unwrap()
        .with_params(node_tags);
        let hvn = compose_h_vn(&hi, &hn).unwrap();
        assert_eq!(hvn.params().get("drive_off"), Some(&1.0));
        assert_eq!(hvn.params().get("p_in_dbm"), Some(&12.0));
    }

    #[test]
    fn thru_combiner_leaves_block_unchanged() {
        let freqs = grid(3);
        let block = abcd_to_s(
            &ideal::series(&freqs, &[Complex64::new(5.0, 2.0); 3]).unwrap(),
            50.0,
        )
        .unwrap();
        let combiner = thru_block(&freqs, 50.0);
        let out = extend_block_with_combiner(&combiner, &block).unwrap();
        for i in 0..3 {
            assert!((out.s11()[i] - block.s11()[i]).norm() < 1e-13);
            assert!((out.s21()[i] - block.s21()[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn matched_pad_halves_transmission() {
        let freqs = grid(3);
        // matched 6.0206 dB pad: s11 = s22 = 0, s21 = s12 = 0.5
        let half = vec![Complex64::new(0.5, 0.0); 3];
        let zero = vec![Complex64::new(0.0, 0.0); 3];
        let pad = TwoPortNetwork::new(
            freqs.clone(),
            zero.clone(),
            half.clone(),
            half.clone(),
            zero.clone(),
            50.0,
        )
        .unwrap();
        let block = abcd_to_s(&ideal::line(&freqs, 0.2e-9, 50.0), 50.0).unwrap();
        let out = extend_block_with_combiner(&pad, &block).unwrap();
        for i in 0..3 {
            assert!(
                (out.s21()[i].norm() - block.s21()[i].norm() / 2.0).abs() < 1e-12,
                "at index {i}"
            );
        }
    }

    /// Independent cascade route through wave (transfer) matrices:
    /// T maps [a2; b2] to [b1; a1], so chaining is a plain product.
    fn wave_cascade(a: &TwoPortNetwork, b: &TwoPortNetwork) -> Vec<[Complex64; 4]> {
        let t_of = |n: &TwoPortNetwork, i: usize| -> [Complex64; 4] {
            let (s11, s21, s12, s22) = (n.s11()[i], n.s21()[i], n.s12()[i], n.s22()[i]);
            [
                s12 - s11 * s22 / s21,
                s11 / s21,
                -s22 / s21,
                1.0 / s21,
            ]
        };
        (0..a.len())
            .map(|i| {
                let x = t_of(a, i);
                let y = t_of(b, i);
                [
                    x[0] * y[0] + x[1] * y[2],
                    x[0] * y[1] + x[1] * y[3],
                    x[2] * y[0] + x[3] * y[2],
                    x[2] * y[1] + x[3] * y[3],
                ]
            })
            .collect()
    }

    #[test]
    fn combiner_cascade_agrees_with_wave_matrix_route() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let freqs = grid(24);
        let mut rand_net = || {
            let mut c = |scale: f64| {
                Complex64::new(
                    scale * (rng.random::<f64>() - 0.5),
                    scale * (rng.random::<f64>() - 0.5),
                )
            };
            let n = freqs.len();
            let s11: Vec<Complex64> = (0..n).map(|_| c(0.5)).collect();
            let s22: Vec<Complex64> = (0..n).map(|_| c(0.5)).collect();
            let s21: Vec<Complex64> =
                (0..n).map(|_| Complex64::new(0.6, 0.0) + c(0.4)).collect();
            TwoPortNetwork::new(freqs.clone(), s11, s21.clone(), s21, s22, 50.0).unwrap()
        };
        let combiner = rand_net();
        let block = rand_net();
        let via_abcd = extend_block_with_combiner(&combiner, &block).unwrap();
        let via_wave = wave_cascade(&combiner, &block);
        for (i, t) in via_wave.iter().enumerate() {
            let s11 = t[1] / t[3];
            let s21 = 1.0 / t[3];
            let s12 = t[0] - t[1] * t[2] / t[3];
            let s22 = -t[2] / t[3];
            for (x, y) in [
                (via_abcd.s11()[i], s11),
                (via_abcd.s21()[i], s21),
                (via_abcd.s12()[i], s12),
                (via_abcd.s22()[i], s22),
            ] {
                assert!(
                    (x - y).norm() < 1e-12 * x.norm().max(1.0),
                    "route disagreement at index {i}: {x} vs {y}"
                );
            }
        }
    }

    #[test]
    fn resample_recovers_smooth_data() {
        let freqs: Vec<f64> = (0..60).map(|i| 1e6 * (1.0 + i as f64)).collect();
        let vals: Vec<Complex64> = freqs
            .iter()
            .map(|&f| {
                let x = f / 6e7;
                Complex64::new((2.0 * x).sin(), (1.5 * x).cos())
            })
            .collect();
        let resp = FrequencyResponse::new(freqs, vals, ResponseRole::Generic).unwrap();
        // stay away from the natural-spline end conditions
        let target: Vec<f64> = (0..80).map(|i| 1.2e7 + 4.5e5 * i as f64).collect();
        let out = resample(&resp, &target).unwrap();
        for (i, &f) in target.iter().enumerate() {
            let x = f / 6e7;
            let expect = Complex64::new((2.0 * x).sin(), (1.5 * x).cos());
            assert!(
                (out.values()[i] - expect).norm() < 1e-5,
                "at {f} Hz: {} vs {expect}",
                out.values()[i]
            );
        }
    }

    #[test]
    fn resample_refuses_extrapolation() {
        let freqs = grid(4);
        let resp = FrequencyResponse::new(
            freqs,
            vec![Complex64::new(1.0, 0.0); 4],
            ResponseRole::Generic,
        )
        .unwrap();
        assert!(resample(&resp, &[5e6]).is_err());
    }
}
