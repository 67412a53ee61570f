//! Modified nodal analysis: (G + sC) x = b with explicit inductor
//! current variables so the pencil stays linear in s.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::netio::{validate_grid, FrequencyResponse, ResponseRole, TwoPortNetwork};
use crate::oracle::{Element, Excitation, Netlist, Observable};

/// Assembled real pencil. Unknown ordering: node voltages 1..node_count-1,
/// then one current per inductor, then one current per voltage source.
pub(crate) struct Pencil {
    pub g: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

struct Stamper {
    g: DMatrix<f64>,
    c: DMatrix<f64>,
    next_aux: usize,
}

impl Stamper {
    fn new(node_count: usize, aux_count: usize) -> Self {
        let n = node_count - 1 + aux_count;
        Self {
            g: DMatrix::zeros(n, n),
            c: DMatrix::zeros(n, n),
            next_aux: node_count - 1,
        }
    }

    fn row(&self, node: usize) -> Option<usize> {
        if node == 0 {
            None
        } else {
            Some(node - 1)
        }
    }

    fn stamp_conductance(&mut self, n1: usize, n2: usize, g: f64) {
        let (r1, r2) = (self.row(n1), self.row(n2));
        if let Some(i) = r1 {
            self.g[(i, i)] += g;
        }
        if let Some(j) = r2 {
            self.g[(j, j)] += g;
        }
        if let (Some(i), Some(j)) = (r1, r2) {
            self.g[(i, j)] -= g;
            self.g[(j, i)] -= g;
        }
    }

    fn stamp_capacitance(&mut self, n1: usize, n2: usize, c: f64) {
        let (r1, r2) = (self.row(n1), self.row(n2));
        if let Some(i) = r1 {
            self.c[(i, i)] += c;
        }
        if let Some(j) = r2 {
            self.c[(j, j)] += c;
        }
        if let (Some(i), Some(j)) = (r1, r2) {
            self.c[(i, j)] -= c;
            self.c[(j, i)] -= c;
        }
    }

    /// Inductor current i flows n1 -> n2; branch row: v1 - v2 - sL i = 0.
    fn stamp_inductor(&mut self, n1: usize, n2: usize, henries: f64) -> usize {
        let k = self.next_aux;
        self.next_aux += 1;
        if let Some(i) = self.row(n1) {
            self.g[(i, k)] += 1.0;
            self.g[(k, i)] += 1.0;
        }
        if let Some(j) = self.row(n2) {
            self.g[(j, k)] -= 1.0;
            self.g[(k, j)] -= 1.0;
        }
        self.c[(k, k)] -= henries;
        k
    }

    /// Current gm*(v_cp - v_cm) flows out.0 -> out.1 through the source.
    fn stamp_vccs(&mut self, control: (usize, usize), output: (usize, usize), gm: f64) {
        let (cp, cm) = (self.row(control.0), self.row(control.1));
        let (op, om) = (self.row(output.0), self.row(output.1));
        for (out_row, sign) in [(op, 1.0), (om, -1.0)] {
            if let Some(r) = out_row {
                if let Some(p) = cp {
                    self.g[(r, p)] += sign * gm;
                }
                if let Some(m) = cm {
                    self.g[(r, m)] -= sign * gm;
                }
            }
        }
    }

    /// Ideal voltage source v(n_plus) - v(n_minus) = value, with its
    /// current as an extra unknown. Returns the current's index; the
    /// unknown is the current flowing into the plus terminal from the
    /// external circuit.
    fn stamp_voltage_source(&mut self, n_plus: usize, n_minus: usize) -> usize {
        let k = self.next_aux;
        self.next_aux += 1;
        if let Some(i) = self.row(n_plus) {
            self.g[(i, k)] += 1.0;
            self.g[(k, i)] += 1.0;
        }
        if let Some(j) = self.row(n_minus) {
            self.g[(j, k)] -= 1.0;
            self.g[(k, j)] -= 1.0;
        }
        k
    }

    fn stamp_element(&mut self, e: &Element) {
        match e {
            Element::Resistor { nodes, ohms, .. } => {
                self.stamp_conductance(nodes.0, nodes.1, 1.0 / ohms)
            }
            Element::Capacitor { nodes, farads, .. } => {
                self.stamp_capacitance(nodes.0, nodes.1, *farads)
            }
            Element::Inductor { nodes, henries, .. } => {
                self.stamp_inductor(nodes.0, nodes.1, *henries);
            }
            Element::Vccs {
                control,
                output,
                gm_siemens,
                ..
            } => self.stamp_vccs(*control, *output, *gm_siemens),
        }
    }
}

fn inductor_count(elements: &[Element]) -> usize {
    elements
        .iter()
        .filter(|e| matches!(e, Element::Inductor { .. }))
        .count()
}

/// Assemble the (G, C) pencil of a netlist: all elements, plus the input
/// port's z0 to ground with the generator itself zeroed.
pub(crate) fn assemble_pencil(net: &Netlist) -> Result<Pencil> {
    net.validate()?;
    let aux = inductor_count(net.elements());
    let mut st = Stamper::new(net.node_count(), aux);
    for e in net.elements() {
        st.stamp_element(e);
    }
    if let Some(port) = net.input_port() {
        st.stamp_conductance(port.node, 0, 1.0 / port.z0_ohm);
    }
    Ok(Pencil { g: st.g, c: st.c })
}

fn solve_grid(
    g: &DMatrix<f64>,
    c: &DMatrix<f64>,
    rhs: &DVector<Complex64>,
    freqs_hz: &[f64],
    extract: impl Fn(&DVector<Complex64>) -> Complex64,
) -> Result<Vec<Complex64>> {
    let n = g.nrows();
    let mut out = Vec::with_capacity(freqs_hz.len());
    for &f in freqs_hz {
        let w = 2.0 * std::f64::consts::PI * f;
        let mut a = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = Complex64::new(g[(i, j)], w * c[(i, j)]);
            }
        }
        let lu = a.lu();
        let x = lu.solve(rhs).ok_or(Error::Singular {
            freq_hz: f,
            message: "MNA system is singular".into(),
        })?;
        out.push(extract(&x));
    }
    Ok(out)
}

pub(crate) fn frequency_response(
    net: &Netlist,
    excitation: &Excitation,
    observed: Observable,
    freqs_hz: &[f64],
) -> Result<FrequencyResponse> {
    validate_grid(freqs_hz)?;
    net.validate()?;

    // A branch-voltage excitation rewires one element through an aux
    // node, so build the element list first.
    let mut elements: Vec<Element> = net.elements().to_vec();
    let mut node_count = net.node_count();
    let mut source: Option<(usize, usize)> = None; // (plus, minus)
    match excitation {
        Excitation::BranchVoltage { element_label } => {
            let idx = elements
                .iter()
                .position(|e| e.label() == element_label.as_str())
                .ok_or_else(|| {
                    Error::Validation(format!("no element labeled '{element_label}'"))
                })?;
            let aux = node_count;
            node_count += 1;
            let detached = match &mut elements[idx] {
                Element::Resistor { nodes, .. }
                | Element::Capacitor { nodes, .. }
                | Element::Inductor { nodes, .. } => {
                    let old = nodes.1;
                    nodes.1 = aux;
                    old
                }
                Element::Vccs { .. } => {
                    return Err(Error::Validation(format!(
                        "cannot insert a branch source in series with controlled source \
                         '{element_label}'"
                    )))
                }
            };
            source = Some((aux, detached));
        }
        Excitation::PortVoltage => {
            if net.input_port().is_none() {
                return Err(Error::Validation(
                    "port excitation requires an input port".into(),
                ));
            }
        }
        Excitation::NodeCurrent { node } => {
            if *node == 0 || *node >= node_count {
                return Err(Error::Validation(format!(
                    "current injection node {node} is not a valid non-ground node"
                )));
            }
        }
    }

    let aux = inductor_count(&elements) + usize::from(source.is_some());
    let mut st = Stamper::new(node_count, aux);
    for e in &elements {
        st.stamp_element(e);
    }
    if let Some(port) = net.input_port() {
        st.stamp_conductance(port.node, 0, 1.0 / port.z0_ohm);
    }
    let mut src_row = None;
    if let Some((plus, minus)) = source {
        src_row = Some(st.stamp_voltage_source(plus, minus));
    }

    let n = st.g.nrows();
    let mut rhs = DVector::<Complex64>::zeros(n);
    match excitation {
        Excitation::PortVoltage => {
            // Norton equivalent of a unit generator behind z0
            let port = net.input_port().unwrap();
            if let Some(r) = st.row(port.node) {
                rhs[r] += Complex64::new(1.0 / port.z0_ohm, 0.0);
            }
        }
        Excitation::NodeCurrent { node } => {
            rhs[st.row(*node).unwrap()] += Complex64::new(1.0, 0.0);
        }
        Excitation::BranchVoltage { .. } => {
            rhs[src_row.unwrap()] = Complex64::new(1.0, 0.0);
        }
    }

    let extract_idx = match observed {
        Observable::NodeVoltage { node } => {
            if node == 0 || node >= net.node_count() {
                return Err(Error::Validation(format!(
                    "observed node {node} is not a valid non-ground node"
                )));
            }
            st.row(node).unwrap()
        }
        Observable::SourceCurrent => src_row.ok_or_else(|| {
            Error::Validation(
                "source-current observation requires a branch-voltage excitation".into(),
            )
        })?,
    };
    let negate = matches!(observed, Observable::SourceCurrent);

    let values = solve_grid(&st.g, &st.c, &rhs, freqs_hz, |x| {
        // the stamped unknown is the current into the plus terminal;
        // the delivered current is its negation
        if negate {
            -x[extract_idx]
        } else {
            x[extract_idx]
        }
    })?;
    FrequencyResponse::new(freqs_hz.to_vec(), values, ResponseRole::Generic)
}

/// Reflection coefficient seen from the input port: drive the port with
/// the Norton equivalent of a unit generator behind z0 and read
/// Γ = 2 v_port - 1.
pub(crate) fn input_reflection(net: &Netlist, freqs_hz: &[f64]) -> Result<Vec<Complex64>> {
    let port = net.input_port().ok_or_else(|| {
        Error::Validation("reflection measurement requires an input port".into())
    })?;
    let resp = frequency_response(
        net,
        &Excitation::PortVoltage,
        Observable::NodeVoltage { node: port.node },
        freqs_hz,
    )?;
    Ok(resp
        .values()
        .iter()
        .map(|v| 2.0 * v - Complex64::new(1.0, 0.0))
        .collect())
}

/// Two-port S-parameters of a bare element list between two nodes,
/// both referenced to z0. Used for input-block extraction. Node ids are
/// compacted so unused parent nodes do not enter the system.
pub(crate) fn two_port_s_params(
    elements: &[Element],
    node_count: usize,
    port1: usize,
    port2: usize,
    z0_ohm: f64,
    freqs_hz: &[f64],
) -> Result<TwoPortNetwork> {
    validate_grid(freqs_hz)?;
    if port1 == 0 || port2 == 0 || port1 == port2 {
        return Err(Error::Validation(
            "two-port extraction needs two distinct non-ground nodes".into(),
        ));
    }
    let mut remap = vec![usize::MAX; node_count];
    remap[0] = 0;
    let mut next = 1usize;
    let mut map_node = |remap: &mut Vec<usize>, n: usize| -> usize {
        if remap[n] == usize::MAX {
            remap[n] = next;
            next += 1;
        }
        remap[n]
    };
    let port1 = map_node(&mut remap, port1);
    let port2 = map_node(&mut remap, port2);
    let elements: Vec<Element> = elements
        .iter()
        .map(|e| {
            let mut e = e.clone();
            match &mut e {
                Element::Resistor { nodes, .. }
                | Element::Capacitor { nodes, .. }
                | Element::Inductor { nodes, .. } => {
                    nodes.0 = map_node(&mut remap, nodes.0);
                    nodes.1 = map_node(&mut remap, nodes.1);
                }
                Element::Vccs {
                    control, output, ..
                } => {
                    control.0 = map_node(&mut remap, control.0);
                    control.1 = map_node(&mut remap, control.1);
                    output.0 = map_node(&mut remap, output.0);
                    output.1 = map_node(&mut remap, output.1);
                }
            }
            e
        })
        .collect();
    let node_count = next;

    let aux = inductor_count(&elements);
    let mut st = Stamper::new(node_count, aux);
    for e in &elements {
        st.stamp_element(e);
    }
    // terminate both ports in z0
    st.stamp_conductance(port1, 0, 1.0 / z0_ohm);
    st.stamp_conductance(port2, 0, 1.0 / z0_ohm);

    let n = st.g.nrows();
    let r1 = st.row(port1).unwrap();
    let r2 = st.row(port2).unwrap();
    let one = Complex64::new(1.0, 0.0);

    let mut s11 = Vec::with_capacity(freqs_hz.len());
    let mut s21 = Vec::with_capacity(freqs_hz.len());
    let mut s12 = Vec::with_capacity(freqs_hz.len());
    let mut s22 = Vec::with_capacity(freqs_hz.len());

    for &f in freqs_hz {
        let w = 2.0 * std::f64::consts::PI * f;
        let mut a = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = Complex64::new(st.g[(i, j)], w * st.c[(i, j)]);
            }
        }
        let lu = a.lu();
        // drive port 1: Norton current 1/z0 into port1
        let mut rhs = DVector::<Complex64>::zeros(n);
        rhs[r1] = Complex64::new(1.0 / z0_ohm, 0.0);
        let x = lu.solve(&rhs).ok_or(Error::Singular {
            freq_hz: f,
            message: "input-block system is singular".into(),
        })?;
        s11.push(2.0 * x[r1] - one);
        s21.push(2.0 * x[r2]);
        // drive port 2
        let mut rhs = DVector::<Complex64>::zeros(n);
        rhs[r2] = Complex64::new(1.0 / z0_ohm, 0.0);
        let x = lu.solve(&rhs).ok_or(Error::Singular {
            freq_hz: f,
            message: "input-block system is singular".into(),
        })?;
        s22.push(2.0 * x[r2] - one);
        s12.push(2.0 * x[r1]);
    }
    TwoPortNetwork::new(freqs_hz.to_vec(), s11, s21, s12, s22, z0_ohm)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;

    #[test]
    fn branch_source_sees_branch_admittance() {
        // unit voltage source in series with R between node 1 and ground,
        // with a large shunt at node 1 so the loop closes
        let mut net = Netlist::new(2);
        net.add_resistor("r_branch", 1, 0, 100.0).unwrap();
        net.add_resistor("r_shunt", 1, 0, 50.0).unwrap();
        net.validate().unwrap();
        let resp = frequency_response(
            &net,
            &Excitation::BranchVoltage {
                element_label: "r_branch".into(),
            },
            Observable::SourceCurrent,
            &[1e6],
        )
        .unwrap();
        // source in series with 100 ohms sees 100 + 50 (shunt to ground)
        let y = resp.values()[0];
        assert!((y - Complex64::new(1.0 / 150.0, 0.0)).norm() < 1e-12, "{y}");
    }

    #[test]
    fn series_l_shunt_c_block_s_params() {
        // L from 1 to 2, C from 2 to ground: compare s21 against the ABCD
        // model of the same section
        use crate::netalg::{abcd_to_s, cascade, ideal};
        let l = 2.5e-9;
        let c = 1e-12;
        let elements = vec![
            Element::Inductor {
                label: "l".into(),
                nodes: (1, 2),
                henries: l,
            },
            Element::Capacitor {
                label: "c".into(),
                nodes: (2, 0),
                farads: c,
            },
        ];
        let freqs = [1e7, 1e8, 5e8];
        let net = two_port_s_params(&elements, 3, 1, 2, 50.0, &freqs).unwrap();

        let zs: Vec<Complex64> = freqs
            .iter()
            .map(|&f| Complex64::new(0.0, 2.0 * std::f64::consts::PI * f * l))
            .collect();
        let ys: Vec<Complex64> = freqs
            .iter()
            .map(|&f| Complex64::new(0.0, 2.0 * std::f64::consts::PI * f * c))
            .collect();
        let abcd = cascade(
            &ideal::series(&freqs, &zs).unwrap(),
            &ideal::shunt(&freqs, &ys).unwrap(),
        )
        .unwrap();
        let expect = abcd_to_s(&abcd, 50.0).unwrap();
        for i in 0..freqs.len() {
            assert!(
                (net.s21()[i] - expect.s21()[i]).norm() < 1e-12,
                "s21 at {} Hz: {} vs {}",
                freqs[i],
                net.s21()[i],
                expect.s21()[i]
            );
            assert!((net.s11()[i] - expect.s11()[i]).norm() < 1e-12);
        }
    }
}
