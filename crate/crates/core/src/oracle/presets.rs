//! Built-in validation circuits.
//!
//! `rlc_shunt` is the textbook parallel resonator with a closed-form
//! pole pair. `hartley_single_stage` models one FET stage whose gate and
//! drain bias inductors close a feedback loop through the gate-drain
//! capacitance, placing a weakly damped pair near 190 MHz whose real
//! part rises with transconductance. `three_stage` chains three such
//! cells with interstage coupling and per-stage RC stabilization
//! networks; the second stage owns a weakly damped pair near 130 MHz.
//!
//! Element values are implementer-tuned against the pencil oracle to hit
//! the documented resonance targets and trends; they model no particular
//! physical device.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::oracle::Netlist;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    RlcShunt,
    HartleySingleStage,
    ThreeStage,
}

impl PresetName {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "rlc_shunt" => PresetName::RlcShunt,
            "hartley_single_stage" => PresetName::HartleySingleStage,
            "three_stage" => PresetName::ThreeStage,
            other => {
                return Err(Error::Validation(format!(
                    "unknown preset '{other}' (expected rlc_shunt, hartley_single_stage \
                     or three_stage)"
                )))
            }
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PresetName::RlcShunt => "rlc_shunt",
            PresetName::HartleySingleStage => "hartley_single_stage",
            PresetName::ThreeStage => "three_stage",
        }
    }
}

/// Observation node labels the preset is meant to be probed at.
pub fn preset_observation_nodes(name: PresetName) -> Vec<&'static str> {
    match name {
        PresetName::RlcShunt => vec!["tank"],
        PresetName::HartleySingleStage => vec!["n"],
        PresetName::ThreeStage => vec!["n1", "n2", "n3"],
    }
}

struct Params {
    values: BTreeMap<String, f64>,
}

impl Params {
    fn new(defaults: &[(&str, f64)], overrides: &BTreeMap<String, f64>) -> Result<Self> {
        let mut values: BTreeMap<String, f64> =
            defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in overrides {
            if !values.contains_key(k) {
                let known: Vec<&str> = values.keys().map(|s| s.as_str()).collect();
                return Err(Error::Validation(format!(
                    "unknown override '{k}'; known parameters: {}",
                    known.join(", ")
                )));
            }
            values.insert(k.clone(), *v);
        }
        Ok(Self { values })
    }

    fn get(&self, key: &str) -> f64 {
        self.values[key]
    }
}

/// Build a preset netlist with optional parameter overrides.
pub fn build_preset(name: PresetName, overrides: &BTreeMap<String, f64>) -> Result<Netlist> {
    match name {
        PresetName::RlcShunt => rlc_shunt(overrides),
        PresetName::HartleySingleStage => hartley_single_stage(overrides),
        PresetName::ThreeStage => three_stage(overrides),
    }
}

/// Parallel RLC tank driven at its single node. Pole pair at
/// -1/(2RC) ± j sqrt(1/(LC) - 1/(2RC)^2).
fn rlc_shunt(overrides: &BTreeMap<String, f64>) -> Result<Netlist> {
    let p = Params::new(
        &[("r", 1.0e3), ("l", 100e-9), ("c", 7e-12)],
        overrides,
    )?;
    let mut net = Netlist::new(2);
    net.add_resistor("r", 1, 0, p.get("r"))?;
    net.add_inductor("l", 1, 0, p.get("l"))?;
    net.add_capacitor("c", 1, 0, p.get("c"))?;
    net.label_node("tank", 1)?;
    net.validate()?;
    Ok(net)
}

/// Single FET stage with gate/drain bias networks and an input block.
///
/// The input and output matching capacitors pass the operating band and
/// isolate the 50-ohm terminations at video frequencies, so the loop
/// closed by the two bias inductors through the gate-drain capacitance
/// keeps a high-Q resonance whose damping shrinks as gm grows.
///
/// Nodes: 1 connector (port), 2 aux inside the block, 3 reference node,
/// 4 gate-feed mid, 5 gate, 6 drain, 7 gate-bias node ("n"),
/// 8 drain-bias node, 9 output load node.
fn hartley_single_stage(overrides: &BTreeMap<String, f64>) -> Result<Netlist> {
    let p = Params::new(
        &[
            ("gm", 0.12),
            ("cgs", 6e-12),
            ("cgd", 0.3e-12),
            ("rds", 250.0),
            ("c_in", 2e-12),
            ("r_gf", 3.0),
            ("l_gb", 56e-9),
            ("r_gbs", 20.0),
            ("r_gb", 12.0),
            ("c_gb", 4.7e-9),
            ("l_db", 82e-9),
            ("r_dbs", 8.0),
            ("r_db", 3.0),
            ("c_db", 4.7e-9),
            ("c_out", 2.5e-12),
            ("r_load", 50.0),
            ("r_blk", 0.3),
            ("l_blk", 2.5e-9),
            ("c_blk", 1e-12),
            ("z0", 50.0),
        ],
        overrides,
    )?;
    let mut net = Netlist::new(12);
    // input block: connector -> series R, L -> reference node with shunt C
    net.add_resistor("r_blk", 1, 2, p.get("r_blk"))?;
    net.add_inductor("l_blk", 2, 3, p.get("l_blk"))?;
    net.add_capacitor("c_blk", 3, 0, p.get("c_blk"))?;
    // input matching/DC block, then the gate feed
    net.add_capacitor("c_in", 3, 4, p.get("c_in"))?;
    net.add_resistor("r_gf", 4, 5, p.get("r_gf"))?;
    // transistor small-signal model
    net.add_capacitor("cgs", 5, 0, p.get("cgs"))?;
    net.add_capacitor("cgd", 5, 6, p.get("cgd"))?;
    net.add_resistor("rds", 6, 0, p.get("rds"))?;
    net.add_vccs("gm", (5, 0), (6, 0), p.get("gm"))?;
    // gate bias path with the bias-line series loss; node 7 is the
    // observation node on the bias line
    net.add_inductor("l_gb", 5, 10, p.get("l_gb"))?;
    net.add_resistor("r_gbs", 10, 7, p.get("r_gbs"))?;
    net.add_resistor("r_gb", 7, 0, p.get("r_gb"))?;
    net.add_capacitor("c_gb", 7, 0, p.get("c_gb"))?;
    // drain bias path
    net.add_inductor("l_db", 6, 11, p.get("l_db"))?;
    net.add_resistor("r_dbs", 11, 8, p.get("r_dbs"))?;
    net.add_resistor("r_db", 8, 0, p.get("r_db"))?;
    net.add_capacitor("c_db", 8, 0, p.get("c_db"))?;
    // RF load through the output matching capacitor
    net.add_capacitor("c_out", 6, 9, p.get("c_out"))?;
    net.add_resistor("r_load", 9, 0, p.get("r_load"))?;

    net.set_input_port("p1", 1, p.get("z0"))?;
    net.set_ref_node(3)?;
    net.mark_input_block(&["r_blk", "l_blk", "c_blk"])?;
    net.label_node("connector", 1)?;
    net.label_node("ref", 3)?;
    net.label_node("gate", 5)?;
    net.label_node("drain", 6)?;
    net.label_node("n", 7)?;
    net.label_node("drain_bias", 8)?;
    net.validate()?;
    Ok(net)
}

/// Three cascaded stages with interstage coupling and per-stage series
/// R||C stabilization networks in the gate feed. Stage 2's bias loop is
/// tuned to own the weakly damped pair near 130 MHz; stages 1 and 3
/// carry detuned, well-damped loops. The stabilization capacitor
/// bypasses the resistor at the operating band only, so raising
/// r_stab2 damps the video-frequency loop.
fn three_stage(overrides: &BTreeMap<String, f64>) -> Result<Netlist> {
    let p = Params::new(
        &[
            ("gm1", 0.10),
            ("gm2", 0.10),
            ("gm3", 0.10),
            ("cgs", 6e-12),
            ("cgd", 0.3e-12),
            ("rds", 250.0),
            ("r_stab1", 12.0),
            ("r_stab2", 5.0),
            ("r_stab3", 12.0),
            ("c_stab", 2e-12),
            ("l_gb1", 27e-9),
            ("l_gb2", 68e-9),
            ("l_gb3", 15e-9),
            ("r_gbs1", 16.0),
            ("r_gbs2", 2.0),
            ("r_gbs3", 16.0),
            ("r_gb", 12.0),
            ("c_gb", 4.7e-9),
            ("l_db1", 47e-9),
            ("l_db2", 56e-9),
            ("l_db3", 33e-9),
            ("r_dbs1", 10.0),
            ("r_dbs2", 2.0),
            ("r_dbs3", 10.0),
            ("r_db", 3.0),
            ("c_db", 4.7e-9),
            ("c_c12", 10e-12),
            ("c_c23", 10e-12),
            ("c_out", 2.5e-12),
            ("r_load", 50.0),
            ("r_blk", 0.3),
            ("l_blk", 2.5e-9),
            ("c_blk", 1e-12),
            ("z0", 50.0),
        ],
        overrides,
    )?;
    // node map:
    // 1 connector, 2 block interior, 3 reference node,
    // per stage: gate, drain, gate-bias mid, bias node n_k, drain-bias
    // mid, drain-bias node; interstage m2, m3; output load node.
    let gate = [4usize, 10, 16];
    let drain = [5usize, 11, 17];
    let gb_mid = [6usize, 12, 18];
    let nbias = [7usize, 13, 19];
    let db_mid = [8usize, 14, 20];
    let dbias = [9usize, 15, 21];
    let m2 = 22usize;
    let m3 = 23usize;
    let out = 24usize;
    let mut net = Netlist::new(25);

    net.add_resistor("r_blk", 1, 2, p.get("r_blk"))?;
    net.add_inductor("l_blk", 2, 3, p.get("l_blk"))?;
    net.add_capacitor("c_blk", 3, 0, p.get("c_blk"))?;

    let stab_in = [3usize, m2, m3];
    for k in 0..3 {
        let idx = k + 1;
        net.add_resistor(
            format!("r_stab{idx}"),
            stab_in[k],
            gate[k],
            p.get(&format!("r_stab{idx}")),
        )?;
        net.add_capacitor(format!("c_stab{idx}"), stab_in[k], gate[k], p.get("c_stab"))?;
        net.add_capacitor(format!("cgs{idx}"), gate[k], 0, p.get("cgs"))?;
        net.add_capacitor(format!("cgd{idx}"), gate[k], drain[k], p.get("cgd"))?;
        net.add_resistor(format!("rds{idx}"), drain[k], 0, p.get("rds"))?;
        net.add_vccs(
            format!("gm{idx}"),
            (gate[k], 0),
            (drain[k], 0),
            p.get(&format!("gm{idx}")),
        )?;
        net.add_inductor(
            format!("l_gb{idx}"),
            gate[k],
            gb_mid[k],
            p.get(&format!("l_gb{idx}")),
        )?;
        net.add_resistor(
            format!("r_gbs{idx}"),
            gb_mid[k],
            nbias[k],
            p.get(&format!("r_gbs{idx}")),
        )?;
        net.add_resistor(format!("r_gb{idx}"), nbias[k], 0, p.get("r_gb"))?;
        net.add_capacitor(format!("c_gb{idx}"), nbias[k], 0, p.get("c_gb"))?;
        net.add_inductor(
            format!("l_db{idx}"),
            drain[k],
            db_mid[k],
            p.get(&format!("l_db{idx}")),
        )?;
        net.add_resistor(
            format!("r_dbs{idx}"),
            db_mid[k],
            dbias[k],
            p.get(&format!("r_dbs{idx}")),
        )?;
        net.add_resistor(format!("r_db{idx}"), dbias[k], 0, p.get("r_db"))?;
        net.add_capacitor(format!("c_db{idx}"), dbias[k], 0, p.get("c_db"))?;
    }
    net.add_capacitor("c_c12", drain[0], m2, p.get("c_c12"))?;
    net.add_capacitor("c_c23", drain[1], m3, p.get("c_c23"))?;
    net.add_capacitor("c_out", drain[2], out, p.get("c_out"))?;
    net.add_resistor("r_load", out, 0, p.get("r_load"))?;

    net.set_input_port("p1", 1, p.get("z0"))?;
    net.set_ref_node(3)?;
    net.mark_input_block(&["r_blk", "l_blk", "c_blk"])?;
    net.label_node("connector", 1)?;
    net.label_node("ref", 3)?;
    for k in 0..3 {
        net.label_node(format!("gate{}", k + 1), gate[k])?;
        net.label_node(format!("drain{}", k + 1), drain[k])?;
        net.label_node(format!("n{}", k + 1), nbias[k])?;
    }
    net.validate()?;
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::exact_poles;

    #[test]
    fn rlc_shunt_matches_closed_form() {
        let net = build_preset(PresetName::RlcShunt, &BTreeMap::new()).unwrap();
        let poles = exact_poles(&net).unwrap();
        let r: f64 = 1.0e3;
        let l: f64 = 100e-9;
        let c: f64 = 7e-12;
        let sigma = -1.0 / (2.0 * r * c);
        let wd = (1.0 / (l * c) - sigma * sigma).sqrt();
        let got = poles.iter().find(|p| p.im > 0.0).unwrap();
        let expect = num_complex::Complex64::new(sigma, wd);
        assert!((got - expect).norm() < 1e-9 * expect.norm());
    }

    #[test]
    fn unknown_override_is_rejected() {
        let mut overrides = BTreeMap::new();
        overrides.insert("bogus".to_string(), 1.0);
        let err = build_preset(PresetName::RlcShunt, &overrides).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn presets_build_and_validate() {
        for name in [
            PresetName::RlcShunt,
            PresetName::HartleySingleStage,
            PresetName::ThreeStage,
        ] {
            let net = build_preset(name, &BTreeMap::new()).unwrap();
            net.validate().unwrap();
        }
    }
}
