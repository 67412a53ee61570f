//! Fabricate every artifact of the physical six-step procedure from a
//! netlist, so the de-embedding pipeline can be run and checked against
//! the directly computed closed-loop response.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::netio::{FrequencyResponse, ResponseRole, TwoPortNetwork};
use crate::oracle::mna;
use crate::oracle::{attach_probe, Excitation, Netlist, Observable, ProbeModel};

/// Options for [`synthesize_measurement_set`].
#[derive(Debug, Clone, Default)]
pub struct SynthesisOptions {
    /// Probe loading applied to probed quantities only (the B/R1 ratio
    /// measurements); `None` emulates an ideal, non-loading probe.
    pub probe: Option<ProbeModel>,
    /// Additive complex Gaussian noise on the ratio measurements, in dB
    /// relative to each response's RMS (e.g. -60.0).
    pub noise_db: Option<f64>,
    /// Seed for the noise generator.
    pub seed: u64,
    /// Sweep parameters stamped onto every produced response.
    pub params: BTreeMap<String, f64>,
}

/// Everything the physical procedure produces for one operating point.
#[derive(Debug, Clone)]
pub struct MeasurementBundle {
    /// Input-block S-parameters (step 2).
    pub block: TwoPortNetwork,
    /// DUT input reflection coefficient (step 3).
    pub gamma_in: FrequencyResponse,
    /// Probe ratio B/R1 at each requested node (step 5), probe loading
    /// applied at the measured node when enabled.
    pub node_ratios: Vec<FrequencyResponse>,
    /// Probe ratio at the input reference node (step 4).
    pub ref_ratio: FrequencyResponse,
    /// Directly simulated v_n/v_gen per node, no probe: the ground truth
    /// the pipeline output is compared against.
    pub direct_hvn: Vec<FrequencyResponse>,
}

pub fn synthesize_measurement_set(
    net: &Netlist,
    nodes: &[&str],
    freqs_hz: &[f64],
    options: &SynthesisOptions,
) -> Result<MeasurementBundle> {
    net.validate()?;
    let ref_node = net.ref_node().ok_or_else(|| {
        Error::Validation("netlist has no designated reference node".into())
    })?;
    if net.input_port().is_none() {
        return Err(Error::Validation("netlist has no input port".into()));
    }
    let mut node_ids = Vec::with_capacity(nodes.len());
    for label in nodes {
        node_ids.push((label.to_string(), net.node_by_label(label)?));
    }
    if let Some(probe) = &options.probe {
        probe.validate()?;
    }

    let block = net.input_block_network(freqs_hz)?;
    let gamma_values = mna::input_reflection(net, freqs_hz)?;
    let gamma_in = FrequencyResponse::new(freqs_hz.to_vec(), gamma_values, ResponseRole::GammaIn)?
        .with_params(options.params.clone());

    let measure_ratio = |node: usize, label: &str| -> Result<FrequencyResponse> {
        let circuit = match &options.probe {
            Some(probe) => attach_probe(net, node, probe)?,
            None => net.clone(),
        };
        let resp = mna::frequency_response(
            &circuit,
            &Excitation::PortVoltage,
            Observable::NodeVoltage { node },
            freqs_hz,
        )?;
        Ok(
            FrequencyResponse::new(freqs_hz.to_vec(), resp.values().to_vec(), ResponseRole::RatioBOverR1)?
                .with_params(options.params.clone())
                .with_node_id(label),
        )
    };

    let mut node_ratios = Vec::with_capacity(node_ids.len());
    for (label, node) in &node_ids {
        node_ratios.push(measure_ratio(*node, label)?);
    }
    let ref_ratio = measure_ratio(ref_node, "ref")?;

    let mut direct_hvn = Vec::with_capacity(node_ids.len());
    for (label, node) in &node_ids {
        let resp = mna::frequency_response(
            net,
            &Excitation::PortVoltage,
            Observable::NodeVoltage { node: *node },
            freqs_hz,
        )?;
        direct_hvn.push(
            FrequencyResponse::new(freqs_hz.to_vec(), resp.values().to_vec(), ResponseRole::HVn)?
                .with_params(options.params.clone())
                .with_node_id(label),
        );
    }

    let mut bundle = MeasurementBundle {
        block,
        gamma_in,
        node_ratios,
        ref_ratio,
        direct_hvn,
    };

    if let Some(db) = options.noise_db {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let factor = 10f64.powf(db / 20.0);
        for resp in bundle
            .node_ratios
            .iter_mut()
            .chain(std::iter::once(&mut bundle.ref_ratio))
        {
            *resp = add_relative_noise(resp, factor, &mut rng)?;
        }
    }
    Ok(bundle)
}

/// Add complex Gaussian noise with RMS `factor` times the response RMS.
fn add_relative_noise(
    resp: &FrequencyResponse,
    factor: f64,
    rng: &mut ChaCha8Rng,
) -> Result<FrequencyResponse> {
    let n = resp.len();
    if n == 0 {
        return Ok(resp.clone());
    }
    let rms = (resp.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64).sqrt();
    let scale = rms * factor / 2f64.sqrt();
    let values: Vec<Complex64> = resp
        .values()
        .iter()
        .map(|v| v + Complex64::new(scale * standard_normal(rng), scale * standard_normal(rng)))
        .collect();
    let mut out = FrequencyResponse::new(resp.freqs_hz().to_vec(), values, resp.role())?
        .with_params(resp.params().clone());
    if let Some(id) = resp.node_id() {
        out = out.with_node_id(id);
    }
    Ok(out)
}

/// Box-Muller transform; avoids log(0) by flooring the uniform draw.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::deembed::{compose_h_vn, compute_h_input, compute_h_n, DeembedInputs};
    use crate::oracle::{build_preset, PresetName};

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        crate::oracle::log_grid(lo, hi, n).unwrap()
    }

    #[test]
    fn pipeline_equals_direct_without_probe() {
        let net = build_preset(PresetName::HartleySingleStage, &BTreeMap::new()).unwrap();
        let freqs = log_grid(1e6, 5e8, 101);
        let bundle =
            synthesize_measurement_set(&net, &["n"], &freqs, &SynthesisOptions::default())
                .unwrap();
        let inputs =
            DeembedInputs::new(bundle.block.clone(), bundle.gamma_in.clone(), 50.0).unwrap();
        let h_input = compute_h_input(&inputs).unwrap().h_input;
        let h_n = compute_h_n(&bundle.node_ratios[0], &bundle.ref_ratio).unwrap();
        let h_vn = compose_h_vn(&h_input, &h_n).unwrap();
        for i in 0..freqs.len() {
            let direct = bundle.direct_hvn[0].values()[i];
            let composed = h_vn.values()[i];
            assert!(
                (direct - composed).norm() <= 1e-10 * direct.norm().max(1e-30),
                "mismatch at {} Hz: {composed} vs {direct}",
                freqs[i]
            );
        }
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let net = build_preset(PresetName::HartleySingleStage, &BTreeMap::new()).unwrap();
        let freqs = log_grid(1e6, 5e8, 21);
        let opts = SynthesisOptions {
            noise_db: Some(-60.0),
            seed: 7,
            ..Default::default()
        };
        let a = synthesize_measurement_set(&net, &["n"], &freqs, &opts).unwrap();
        let b = synthesize_measurement_set(&net, &["n"], &freqs, &opts).unwrap();
        assert_eq!(a.node_ratios[0].values(), b.node_ratios[0].values());
        let c = synthesize_measurement_set(
            &net,
            &["n"],
            &freqs,
            &SynthesisOptions {
                noise_db: Some(-60.0),
                seed: 8,
                ..Default::default()
            },
        )
        .unwrap();
        assert_ne!(a.node_ratios[0].values(), c.node_ratios[0].values());
    }

    #[test]
    fn missing_designated_node_is_an_error() {
        let net = build_preset(PresetName::HartleySingleStage, &BTreeMap::new()).unwrap();
        let freqs = log_grid(1e6, 5e8, 5);
        let err = synthesize_measurement_set(
            &net,
            &["nope"],
            &freqs,
            &SynthesisOptions::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("nope"));
    }
}
