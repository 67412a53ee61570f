//! Linear small-signal circuit oracle.
//!
//! A modified-nodal-analysis simulator over netlists of R, L, C and
//! voltage-controlled current sources, with the generator port's source
//! impedance always part of the circuit. Natural frequencies come from
//! the generalized eigenvalues of the (G, C) pencil, so every synthetic
//! measurement can be checked against exactly known poles.

mod mna;
mod pencil;
mod presets;
mod synth;

pub use pencil::{exact_poles, upper_half, INFINITE_POLE_THRESHOLD};
pub use presets::{build_preset, preset_observation_nodes, PresetName};
pub use synth::{synthesize_measurement_set, MeasurementBundle, SynthesisOptions};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netio::{validate_grid, FrequencyResponse, TwoPortNetwork};

pub type NodeId = usize;

/// Circuit element. Node 0 is ground. For the controlled source, a
/// current of `gm * (v(control.0) - v(control.1))` flows from
/// `output.0` through the source into `output.1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Element {
    Resistor {
        label: String,
        nodes: (NodeId, NodeId),
        ohms: f64,
    },
    Capacitor {
        label: String,
        nodes: (NodeId, NodeId),
        farads: f64,
    },
    Inductor {
        label: String,
        nodes: (NodeId, NodeId),
        henries: f64,
    },
    Vccs {
        label: String,
        control: (NodeId, NodeId),
        output: (NodeId, NodeId),
        gm_siemens: f64,
    },
}

impl Element {
    pub fn label(&self) -> &str {
        match self {
            Element::Resistor { label, .. }
            | Element::Capacitor { label, .. }
            | Element::Inductor { label, .. }
            | Element::Vccs { label, .. } => label,
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Element::Resistor { .. } => "resistor",
            Element::Capacitor { .. } => "capacitor",
            Element::Inductor { .. } => "inductor",
            Element::Vccs { .. } => "vccs",
        }
    }

    /// Node pairs that conduct (control pairs of a VCCS do not).
    fn conducting_nodes(&self) -> (NodeId, NodeId) {
        match self {
            Element::Resistor { nodes, .. }
            | Element::Capacitor { nodes, .. }
            | Element::Inductor { nodes, .. } => *nodes,
            Element::Vccs { output, .. } => *output,
        }
    }

    fn all_nodes(&self) -> Vec<NodeId> {
        match self {
            Element::Resistor { nodes, .. }
            | Element::Capacitor { nodes, .. }
            | Element::Inductor { nodes, .. } => vec![nodes.0, nodes.1],
            Element::Vccs {
                control, output, ..
            } => vec![control.0, control.1, output.0, output.1],
        }
    }
}

/// Generator attachment point: the port node sees `z0_ohm` to ground at
/// all times (the source impedance stays in circuit whether or not the
/// generator is active).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Port {
    pub label: String,
    pub node: NodeId,
    pub z0_ohm: f64,
}

/// High-impedance probe model: shunt resistance in parallel with shunt
/// capacitance. The default approximates the setup probe's measured
/// impedance (about 1.18 kΩ at 180 MHz falling to about 424 Ω at
/// 500 MHz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeModel {
    pub r_shunt_ohm: f64,
    pub c_shunt_farad: f64,
}

impl Default for ProbeModel {
    fn default() -> Self {
        Self {
            r_shunt_ohm: 100e3,
            c_shunt_farad: 0.75e-12,
        }
    }
}

impl ProbeModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_shunt_ohm > 0.0) {
            return Err(Error::Validation(format!(
                "probe shunt resistance must be positive, got {}",
                self.r_shunt_ohm
            )));
        }
        if !(self.c_shunt_farad >= 0.0) || !self.c_shunt_farad.is_finite() {
            return Err(Error::Validation(format!(
                "probe shunt capacitance must be finite and non-negative, got {}",
                self.c_shunt_farad
            )));
        }
        Ok(())
    }

    /// |Z| of the shunt combination at a frequency.
    pub fn impedance_magnitude(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq_hz;
        if self.r_shunt_ohm.is_infinite() {
            if self.c_shunt_farad == 0.0 {
                return f64::INFINITY;
            }
            return 1.0 / (w * self.c_shunt_farad);
        }
        let wrc = w * self.r_shunt_ohm * self.c_shunt_farad;
        self.r_shunt_ohm / (1.0 + wrc * wrc).sqrt()
    }
}

/// Excitation for [`frequency_response`].
#[derive(Debug, Clone, PartialEq)]
pub enum Excitation {
    /// Unit generator voltage behind the input port's z0 (the measurement
    /// drive of the physical setup).
    PortVoltage,
    /// Unit current injected into a node; observing the same node's
    /// voltage yields the impedance seen there.
    NodeCurrent { node: NodeId },
    /// Unit voltage source inserted in series with a labeled two-terminal
    /// element; observing `SourceCurrent` yields the admittance seen by
    /// the source.
    BranchVoltage { element_label: String },
}

/// Observed quantity for [`frequency_response`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    NodeVoltage { node: NodeId },
    /// Current delivered by the inserted branch source. Only valid with
    /// [`Excitation::BranchVoltage`].
    SourceCurrent,
}

/// Linear small-signal circuit: nodes, elements, the generator port, and
/// the designated input-block section used for de-embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Netlist {
    node_count: usize,
    elements: Vec<Element>,
    input_port: Option<Port>,
    ref_node: Option<NodeId>,
    input_block_labels: Vec<String>,
    node_labels: BTreeMap<String, NodeId>,
}

impl Netlist {
    pub fn new(node_count: usize) -> Self {
        Self {
            node_count,
            elements: Vec::new(),
            input_port: None,
            ref_node: None,
            input_block_labels: Vec::new(),
            node_labels: BTreeMap::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn input_port(&self) -> Option<&Port> {
        self.input_port.as_ref()
    }

    pub fn ref_node(&self) -> Option<NodeId> {
        self.ref_node
    }

    pub fn node_labels(&self) -> &BTreeMap<String, NodeId> {
        &self.node_labels
    }

    pub fn node_by_label(&self, label: &str) -> Result<NodeId> {
        self.node_labels.get(label).copied().ok_or_else(|| {
            Error::Validation(format!("netlist has no node labeled '{label}'"))
        })
    }

    fn check_node(&self, node: NodeId) -> Result<()> {
        if node >= self.node_count {
            return Err(Error::Validation(format!(
                "node {node} is out of range (node count {})",
                self.node_count
            )));
        }
        Ok(())
    }

    fn check_label(&self, kind: &str, label: &str) -> Result<()> {
        if self
            .elements
            .iter()
            .any(|e| e.kind_name() == kind && e.label() == label)
        {
            return Err(Error::Validation(format!(
                "duplicate {kind} label '{label}'"
            )));
        }
        Ok(())
    }

    pub fn add_resistor(
        &mut self,
        label: impl Into<String>,
        n1: NodeId,
        n2: NodeId,
        ohms: f64,
    ) -> Result<&mut Self> {
        let label = label.into();
        self.check_node(n1)?;
        self.check_node(n2)?;
        self.check_label("resistor", &label)?;
        if !(ohms > 0.0) {
            return Err(Error::Validation(format!(
                "resistance must be positive, got {ohms} for '{label}'"
            )));
        }
        self.elements.push(Element::Resistor {
            label,
            nodes: (n1, n2),
            ohms,
        });
        Ok(self)
    }

    pub fn add_capacitor(
        &mut self,
        label: impl Into<String>,
        n1: NodeId,
        n2: NodeId,
        farads: f64,
    ) -> Result<&mut Self> {
        let label = label.into();
        self.check_node(n1)?;
        self.check_node(n2)?;
        self.check_label("capacitor", &label)?;
        if !(farads > 0.0) || !farads.is_finite() {
            return Err(Error::Validation(format!(
                "capacitance must be positive and finite, got {farads} for '{label}'"
            )));
        }
        self.elements.push(Element::Capacitor {
            label,
            nodes: (n1, n2),
            farads,
        });
        Ok(self)
    }

    pub fn add_inductor(
        &mut self,
        label: impl Into<String>,
        n1: NodeId,
        n2: NodeId,
        henries: f64,
    ) -> Result<&mut Self> {
        let label = label.into();
        self.check_node(n1)?;
        self.check_node(n2)?;
        self.check_label("inductor", &label)?;
        if !(henries > 0.0) || !henries.is_finite() {
            return Err(Error::Validation(format!(
                "inductance must be positive and finite, got {henries} for '{label}'"
            )));
        }
        self.elements.push(Element::Inductor {
            label,
            nodes: (n1, n2),
            henries,
        });
        Ok(self)
    }

    pub fn add_vccs(
        &mut self,
        label: impl Into<String>,
        control: (NodeId, NodeId),
        output: (NodeId, NodeId),
        gm_siemens: f64,
    ) -> Result<&mut Self> {
        let label = label.into();
        self.check_node(control.0)?;
        self.check_node(control.1)?;
        self.check_node(output.0)?;
        self.check_node(output.1)?;
        self.check_label("vccs", &label)?;
        if gm_siemens == 0.0 || !gm_siemens.is_finite() {
            return Err(Error::Validation(format!(
                "transconductance must be nonzero and finite, got {gm_siemens} for '{label}'"
            )));
        }
        self.elements.push(Element::Vccs {
            label,
            control,
            output,
            gm_siemens,
        });
        Ok(self)
    }

    pub fn set_input_port(
        &mut self,
        label: impl Into<String>,
        node: NodeId,
        z0_ohm: f64,
    ) -> Result<&mut Self> {
        self.check_node(node)?;
        if !(z0_ohm > 0.0) || !z0_ohm.is_finite() {
            return Err(Error::Validation(format!(
                "port impedance must be positive and finite, got {z0_ohm}"
            )));
        }
        self.input_port = Some(Port {
            label: label.into(),
            node,
            z0_ohm,
        });
        Ok(self)
    }

    pub fn set_ref_node(&mut self, node: NodeId) -> Result<&mut Self> {
        self.check_node(node)?;
        self.ref_node = Some(node);
        Ok(self)
    }

    /// Designate the elements forming the input block (the section
    /// between the input connector and the reference node).
    pub fn mark_input_block(&mut self, labels: &[&str]) -> Result<&mut Self> {
        for l in labels {
            if !self.elements.iter().any(|e| e.label() == *l) {
                return Err(Error::Validation(format!(
                    "input-block label '{l}' matches no element"
                )));
            }
        }
        self.input_block_labels = labels.iter().map(|s| s.to_string()).collect();
        Ok(self)
    }

    pub fn label_node(&mut self, name: impl Into<String>, node: NodeId) -> Result<&mut Self> {
        self.check_node(node)?;
        self.node_labels.insert(name.into(), node);
        Ok(self)
    }

    /// Check structural invariants: every non-ground node must be
    /// reachable from ground through conducting elements (the port's z0
    /// counts as a conductance).
    pub fn validate(&self) -> Result<()> {
        if self.node_count == 0 {
            return Err(Error::Validation("netlist needs at least ground".into()));
        }
        let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); self.node_count];
        for e in &self.elements {
            let (a, b) = e.conducting_nodes();
            adj[a].push(b);
            adj[b].push(a);
        }
        if let Some(port) = &self.input_port {
            adj[port.node].push(0);
            adj[0].push(port.node);
        }
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(n) = stack.pop() {
            for &m in &adj[n] {
                if !seen[m] {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
        if let Some(node) = seen.iter().position(|s| !s) {
            return Err(Error::Validation(format!(
                "node {node} is not reachable from ground"
            )));
        }
        for e in &self.elements {
            for n in e.all_nodes() {
                self.check_node(n)?;
            }
        }
        Ok(())
    }

    /// Extract the designated input block as a standalone two-port and
    /// compute its S-parameters between the input-port node (port 1) and
    /// the reference node (port 2), referenced to the port z0.
    pub fn input_block_network(&self, freqs_hz: &[f64]) -> Result<TwoPortNetwork> {
        validate_grid(freqs_hz)?;
        let port = self.input_port.as_ref().ok_or_else(|| {
            Error::Validation("netlist has no input port; cannot extract the input block".into())
        })?;
        let ref_node = self.ref_node.ok_or_else(|| {
            Error::Validation("netlist has no reference node; cannot extract the input block".into())
        })?;
        if self.input_block_labels.is_empty() {
            return Err(Error::Validation(
                "netlist has no designated input-block section".into(),
            ));
        }
        let wanted: BTreeSet<&str> = self.input_block_labels.iter().map(|s| s.as_str()).collect();
        let elements: Vec<Element> = self
            .elements
            .iter()
            .filter(|e| wanted.contains(e.label()))
            .cloned()
            .collect();
        mna::two_port_s_params(
            &elements,
            self.node_count,
            port.node,
            ref_node,
            port.z0_ohm,
            freqs_hz,
        )
    }

    /// Serialize to a JSON document.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("netlist serialization");
        text.push('\n');
        text
    }

    /// Deserialize from JSON and validate.
    pub fn from_json(text: &str) -> Result<Self> {
        let net: Netlist = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("invalid netlist JSON: {e}"),
        })?;
        net.validate()?;
        Ok(net)
    }
}

/// Return a copy of the netlist with a probe's shunt R and C attached at
/// `node`. The original netlist is untouched. Non-finite resistance or
/// zero capacitance simply omit the corresponding element (an ideal
/// open-circuit probe changes nothing).
pub fn attach_probe(net: &Netlist, node: NodeId, probe: &ProbeModel) -> Result<Netlist> {
    probe.validate()?;
    if node == 0 {
        return Err(Error::Validation("cannot probe the ground node".into()));
    }
    let mut out = net.clone();
    out.check_node(node)?;
    if probe.r_shunt_ohm.is_finite() {
        out.add_resistor(format!("probe_r_{node}"), node, 0, probe.r_shunt_ohm)?;
    }
    if probe.c_shunt_farad > 0.0 {
        out.add_capacitor(format!("probe_c_{node}"), node, 0, probe.c_shunt_farad)?;
    }
    Ok(out)
}

/// Logarithmic frequency grid with exact endpoints.
pub fn log_grid(lo_hz: f64, hi_hz: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo_hz > 0.0 && hi_hz > lo_hz) || points < 2 {
        return Err(Error::Validation(format!(
            "log grid needs 0 < lo < hi and at least 2 points, got [{lo_hz}, {hi_hz}] x {points}"
        )));
    }
    let ratio = (hi_hz / lo_hz).powf(1.0 / (points - 1) as f64);
    let mut out: Vec<f64> = (0..points).map(|i| lo_hz * ratio.powi(i as i32)).collect();
    out[0] = lo_hz;
    *out.last_mut().unwrap() = hi_hz;
    Ok(out)
}

/// The default measurement grid: 401 points, logarithmic, 1 MHz to
/// 500 MHz.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e6, 5e8, 401).unwrap()
}

/// Solve the circuit over a frequency grid and return the requested
/// transfer ratio (output observable per unit excitation).
pub fn frequency_response(
    net: &Netlist,
    excitation: &Excitation,
    observed: Observable,
    freqs_hz: &[f64],
) -> Result<FrequencyResponse> {
    mna::frequency_response(net, excitation, observed, freqs_hz)
}
