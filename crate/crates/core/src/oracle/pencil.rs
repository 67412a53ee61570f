//! Exact circuit poles from the MNA pencil.
//!
//! Finite generalized eigenvalues s of det(G + sC) = 0, computed by a
//! shift-invert reduction: with a real shift σ making (G + σC)
//! invertible, the eigenvalues μ of M = (G + σC)⁻¹ C give s = σ − 1/μ.
//! Eigenvalues with |s| above the infinite-eigenvalue threshold are
//! dropped.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::oracle::mna::assemble_pencil;
use crate::oracle::Netlist;

/// |s| beyond this is treated as an infinite eigenvalue of the pencil.
pub const INFINITE_POLE_THRESHOLD: f64 = 1e15;

const SHIFT_CANDIDATES_RAD_PER_S: [f64; 5] = [6.2832e8, -2.0735e8, 3.3301e9, -4.3982e9, 1.0681e7];

/// All finite natural frequencies of the netlist in rad/s, conjugates
/// included, sorted by (re, im). The generator is zeroed but its source
/// impedance stays in circuit, matching the measurement condition.
pub fn exact_poles(net: &Netlist) -> Result<Vec<Complex64>> {
    let pencil = assemble_pencil(net)?;
    let n = pencil.g.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut best_rel_pivot = 0.0f64;
    for &sigma in &SHIFT_CANDIDATES_RAD_PER_S {
        let shifted = &pencil.g + sigma * &pencil.c;
        let lu = shifted.clone().lu();
        let u = lu.u();
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot = 0.0f64;
        for i in 0..n {
            let p = u[(i, i)].abs();
            min_pivot = min_pivot.min(p);
            max_pivot = max_pivot.max(p);
        }
        let rel = if max_pivot > 0.0 {
            min_pivot / max_pivot
        } else {
            0.0
        };
        best_rel_pivot = best_rel_pivot.max(rel);
        if rel < 1e-12 {
            continue;
        }
        let m = lu.solve(&pencil.c).ok_or_else(|| {
            Error::Numerical("shifted pencil factorization failed".into())
        })?;
        let eigs = m.complex_eigenvalues();
        let mut poles: Vec<Complex64> = Vec::new();
        for mu in eigs.iter() {
            if mu.norm() == 0.0 {
                continue;
            }
            let s = Complex64::new(sigma, 0.0) - 1.0 / mu;
            if s.norm() <= INFINITE_POLE_THRESHOLD {
                poles.push(s);
            }
        }
        poles.sort_by(|a, b| {
            (a.re, a.im)
                .partial_cmp(&(b.re, b.im))
                .expect("finite poles")
        });
        return Ok(poles);
    }
    Err(Error::Numerical(format!(
        "pencil is numerically singular for every shift candidate \
         (best relative pivot {best_rel_pivot:.3e})"
    )))
}

/// Upper-half-plane representatives (im >= 0) of a pole list.
pub fn upper_half(poles: &[Complex64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = poles.iter().copied().filter(|p| p.im >= 0.0).collect();
    out.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    out
}

/// Build a DMatrix view of the assembled pencil, for diagnostics.
#[allow(dead_code)]
pub(crate) fn pencil_matrices(net: &Netlist) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let p = assemble_pencil(net)?;
    Ok((p.g, p.c))
}
