//! Iterative pole-relocation rational fitting with a relaxed
//! nontriviality constraint.
//!
//! Each iteration solves one joint linear least-squares problem for the
//! response numerators (complex coefficients) and the pole-defining
//! weighting function sigma (real coefficients on a conjugate-symmetric
//! basis, plus a free real constant with a relaxation row). New poles
//! are the zeros of sigma, computed as eigenvalues of a real companion
//! matrix, so conjugate closure is structural. Unstable poles are kept
//! where the data puts them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ident::{FitDiagnostics, FitOptions, FitOrder, PoleZeroModel, Weighting};
use crate::netio::FrequencyResponse;

/// Structured pole storage: real poles and upper-half pair
/// representatives.
#[derive(Debug, Clone, Copy, PartialEq)]
enum PoleEntry {
    Real(f64),
    /// Represents the conjugate pair re ± j·im with im > 0.
    Pair { re: f64, im: f64 },
}

impl PoleEntry {
    fn column_count(&self) -> usize {
        match self {
            PoleEntry::Real(_) => 1,
            PoleEntry::Pair { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PoleSet {
    entries: Vec<PoleEntry>,
}

impl PoleSet {
    fn order(&self) -> usize {
        self.entries.iter().map(PoleEntry::column_count).sum()
    }

    /// Expanded pole list; pairs contribute the upper-half member first.
    fn expanded(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.order());
        for e in &self.entries {
            match e {
                PoleEntry::Real(q) => out.push(Complex64::new(*q, 0.0)),
                PoleEntry::Pair { re, im } => {
                    out.push(Complex64::new(*re, *im));
                    out.push(Complex64::new(*re, -*im));
                }
            }
        }
        out
    }

    fn sort(&mut self) {
        self.entries.sort_by(|a, b| {
            let key = |e: &PoleEntry| match e {
                PoleEntry::Real(q) => (*q, 0.0),
                PoleEntry::Pair { re, im } => (*re, *im),
            };
            key(a).partial_cmp(&key(b)).expect("finite poles")
        });
    }

    /// Weakly damped starting poles: conjugate pairs with imaginary
    /// parts log-spaced across the band and real parts -im/100; odd
    /// orders add one real pole at the geometric band center.
    fn initial(order: usize, band_hz: (f64, f64)) -> Self {
        let w_lo = 2.0 * std::f64::consts::PI * band_hz.0;
        let w_hi = 2.0 * std::f64::consts::PI * band_hz.1;
        let pairs = order / 2;
        let mut entries = Vec::new();
        if order % 2 == 1 {
            entries.push(PoleEntry::Real(-(w_lo * w_hi).sqrt()));
        }
        for j in 0..pairs {
            let t = if pairs > 1 {
                j as f64 / (pairs - 1) as f64
            } else {
                0.5
            };
            let im = w_lo * (w_hi / w_lo).powf(t);
            entries.push(PoleEntry::Pair {
                re: -im / 100.0,
                im,
            });
        }
        let mut set = Self { entries };
        set.sort();
        set
    }

    /// Rebuild structured storage from eigenvalues of a real matrix,
    /// whose complex eigenvalues arrive in exact conjugate pairs.
    fn from_eigenvalues(eigs: &[Complex64], expected_order: usize) -> Result<Self> {
        let mut entries = Vec::new();
        for e in eigs {
            if e.im == 0.0 {
                entries.push(PoleEntry::Real(e.re));
            } else if e.im > 0.0 {
                entries.push(PoleEntry::Pair { re: e.re, im: e.im });
            }
        }
        let mut set = Self { entries };
        if set.order() != expected_order {
            return Err(Error::Numerical(format!(
                "eigenvalue pairing failed: structured order {} != expected {expected_order}",
                set.order()
            )));
        }
        set.sort();
        Ok(set)
    }
}

/// sigma basis columns at s: one real column per real pole, two per
/// conjugate pair. Real coefficients over these columns span exactly the
/// conjugate-symmetric strictly proper rationals with the given poles.
fn sigma_columns(poles: &PoleSet, s: Complex64, out: &mut Vec<Complex64>) {
    out.clear();
    for e in &poles.entries {
        match e {
            PoleEntry::Real(q) => out.push(1.0 / (s - q)),
            PoleEntry::Pair { re, im } => {
                let q = Complex64::new(*re, *im);
                let a = 1.0 / (s - q);
                let b = 1.0 / (s - q.conj());
                out.push(a + b);
                out.push(Complex64::new(0.0, 1.0) * (a - b));
            }
        }
    }
}

struct BandData {
    omegas: Vec<f64>,
    /// [response][sample]
    data: Vec<Vec<Complex64>>,
    weights: Vec<Vec<f64>>,
}

fn collect_band(
    resps: &[FrequencyResponse],
    band_hz: (f64, f64),
    weighting: Weighting,
) -> Result<BandData> {
    let first = &resps[0];
    for r in resps.iter().skip(1) {
        first.check_same_grid(r, "common-pole fit inputs")?;
    }
    if !(band_hz.0 > 0.0 && band_hz.1 > band_hz.0) {
        return Err(Error::Validation(format!(
            "analysis band must satisfy 0 < low < high, got [{}, {}]",
            band_hz.0, band_hz.1
        )));
    }
    let lo = first.freqs_hz().first().copied().unwrap_or(f64::NAN);
    let hi = first.freqs_hz().last().copied().unwrap_or(f64::NAN);
    if !(band_hz.0 >= lo && band_hz.1 <= hi) {
        return Err(Error::Validation(format!(
            "band [{}, {}] Hz must lie within the data grid [{lo}, {hi}] Hz",
            band_hz.0, band_hz.1
        )));
    }
    let idx: Vec<usize> = (0..first.len())
        .filter(|&i| first.freqs_hz()[i] >= band_hz.0 && first.freqs_hz()[i] <= band_hz.1)
        .collect();
    let omegas: Vec<f64> = idx
        .iter()
        .map(|&i| 2.0 * std::f64::consts::PI * first.freqs_hz()[i])
        .collect();
    let data: Vec<Vec<Complex64>> = resps
        .iter()
        .map(|r| idx.iter().map(|&i| r.values()[i]).collect())
        .collect();
    let weights = data
        .iter()
        .map(|row: &Vec<Complex64>| match weighting {
            Weighting::Uniform => vec![1.0; row.len()],
            Weighting::InverseMagnitude => {
                let max = row.iter().map(|v| v.norm()).fold(0.0, f64::max);
                let floor = (1e-12 * max).max(1e-300);
                row.iter().map(|v| 1.0 / v.norm().max(floor)).collect()
            }
        })
        .collect();
    Ok(BandData {
        omegas,
        data,
        weights,
    })
}

/// Column-scaled least squares via SVD. Returns the solution in the
/// original column scaling.
fn solve_least_squares(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    let cols = a.ncols();
    let mut scale = vec![1.0f64; cols];
    let mut a = a;
    for (j, s) in scale.iter_mut().enumerate() {
        let norm = a.column(j).norm();
        if norm > 0.0 {
            *s = norm;
            let mut col = a.column_mut(j);
            col /= norm;
        }
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let x = svd
        .solve(&b, smax * 1e-13)
        .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))?;
    let mut x = x;
    for (j, s) in scale.iter().enumerate() {
        x[j] /= s;
    }
    Ok(x)
}

fn complex_eigenvalues(m: DMatrix<f64>) -> Result<Vec<Complex64>> {
    let eigs = m.complex_eigenvalues();
    let out: Vec<Complex64> = eigs.iter().copied().collect();
    if out.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
        return Err(Error::Numerical(
            "eigenvalue computation produced non-finite values".into(),
        ));
    }
    Ok(out)
}

/// One relaxed pole-relocation step: returns the new pole set.
fn relocate_poles(poles: &PoleSet, band: &BandData) -> Result<PoleSet> {
    let n = poles.order();
    let ns = band.omegas.len();
    let m = band.data.len();
    let expanded = poles.expanded();

    // unknown layout: per response [Re c_k, Im c_k]*N, Re d, Im d;
    // then sigma coefficients (N real) and the relaxed constant.
    let per_resp = 2 * n + 2;
    let cols = m * per_resp + n + 1;
    let rows = 2 * m * ns + 1;
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut b = DVector::<f64>::zeros(rows);
    let sigma_off = m * per_resp;

    let mut phi = Vec::with_capacity(n);
    let mut sigma_sum = vec![Complex64::new(0.0, 0.0); n];
    let mut weight_energy = 0.0f64;

    for (i, &w) in band.omegas.iter().enumerate() {
        let s = Complex64::new(0.0, w);
        sigma_columns(poles, s, &mut phi);
        for (k, p) in phi.iter().enumerate() {
            sigma_sum[k] += p;
        }
        for (mi, data_row) in band.data.iter().enumerate() {
            let wt = band.weights[mi][i];
            let f = data_row[i];
            weight_energy += (wt * f.norm()).powi(2);
            let r_re = 2 * (mi * ns + i);
            let r_im = r_re + 1;
            let base = mi * per_resp;
            for (k, &p) in expanded.iter().enumerate() {
                let psi = 1.0 / (s - p);
                a[(r_re, base + 2 * k)] = wt * psi.re;
                a[(r_re, base + 2 * k + 1)] = -wt * psi.im;
                a[(r_im, base + 2 * k)] = wt * psi.im;
                a[(r_im, base + 2 * k + 1)] = wt * psi.re;
            }
            a[(r_re, base + 2 * n)] = wt;
            a[(r_im, base + 2 * n + 1)] = wt;
            for (k, p) in phi.iter().enumerate() {
                let fp = f * p;
                a[(r_re, sigma_off + k)] = -wt * fp.re;
                a[(r_im, sigma_off + k)] = -wt * fp.im;
            }
            a[(r_re, sigma_off + n)] = -wt * f.re;
            a[(r_im, sigma_off + n)] = -wt * f.im;
        }
    }

    // relaxation row: the average of Re(sigma) over the band stays 1,
    // weighted by the data scale so the row participates in the solve.
    let relax_w = (weight_energy.sqrt() / (m * ns) as f64).max(1e-300);
    let last = rows - 1;
    for k in 0..n {
        a[(last, sigma_off + k)] = relax_w * sigma_sum[k].re / ns as f64;
    }
    a[(last, sigma_off + n)] = relax_w;
    b[last] = relax_w * ns as f64 / ns as f64;

    let x = solve_least_squares(a, b)?;
    let gamma: Vec<f64> = (0..n).map(|k| x[sigma_off + k]).collect();
    let mut d_tilde = x[sigma_off + n];
    // keep sigma nontrivial if the relaxed constant collapses
    if d_tilde.abs() < 1e-8 {
        d_tilde = if d_tilde < 0.0 { -1e-8 } else { 1e-8 };
    }

    // zeros of sigma: eigenvalues of the real companion matrix
    // A - b c^T / d_tilde built from the structured pole blocks.
    let mut h = DMatrix::<f64>::zeros(n, n);
    let mut bvec = vec![0.0f64; n];
    let mut cursor = 0usize;
    for e in &poles.entries {
        match e {
            PoleEntry::Real(q) => {
                h[(cursor, cursor)] = *q;
                bvec[cursor] = 1.0;
                cursor += 1;
            }
            PoleEntry::Pair { re, im } => {
                h[(cursor, cursor)] = *re;
                h[(cursor, cursor + 1)] = *im;
                h[(cursor + 1, cursor)] = -*im;
                h[(cursor + 1, cursor + 1)] = *re;
                bvec[cursor] = 2.0;
                bvec[cursor + 1] = 0.0;
                cursor += 2;
            }
        }
    }
    for r in 0..n {
        for c in 0..n {
            h[(r, c)] -= bvec[r] * gamma[c] / d_tilde;
        }
    }
    let eigs = complex_eigenvalues(h)?;
    PoleSet::from_eigenvalues(&eigs, n)
}

struct ResidueSolution {
    residues: Vec<Vec<Complex64>>,
    direct: Vec<Complex64>,
    rel_rms: f64,
}

/// Final residue identification on fixed poles. Solves the complex
/// least-squares problem per response, then projects onto the
/// conjugate-symmetric structure when the data supports it.
fn solve_residues(poles: &PoleSet, band: &BandData) -> Result<ResidueSolution> {
    let n = poles.order();
    let ns = band.omegas.len();
    let expanded = poles.expanded();

    // complex-coefficient fit
    let mut residues: Vec<Vec<Complex64>> = Vec::with_capacity(band.data.len());
    let mut direct: Vec<Complex64> = Vec::with_capacity(band.data.len());
    for (mi, data_row) in band.data.iter().enumerate() {
        let mut a = DMatrix::<f64>::zeros(2 * ns, 2 * n + 2);
        let mut b = DVector::<f64>::zeros(2 * ns);
        for (i, &w) in band.omegas.iter().enumerate() {
            let s = Complex64::new(0.0, w);
            let wt = band.weights[mi][i];
            for (k, &p) in expanded.iter().enumerate() {
                let psi = 1.0 / (s - p);
                a[(2 * i, 2 * k)] = wt * psi.re;
                a[(2 * i, 2 * k + 1)] = -wt * psi.im;
                a[(2 * i + 1, 2 * k)] = wt * psi.im;
                a[(2 * i + 1, 2 * k + 1)] = wt * psi.re;
            }
            a[(2 * i, 2 * n)] = wt;
            a[(2 * i + 1, 2 * n + 1)] = wt;
            b[2 * i] = wt * data_row[i].re;
            b[2 * i + 1] = wt * data_row[i].im;
        }
        let x = solve_least_squares(a, b)?;
        residues.push(
            (0..n)
                .map(|k| Complex64::new(x[2 * k], x[2 * k + 1]))
                .collect(),
        );
        direct.push(Complex64::new(x[2 * n], x[2 * n + 1]));
    }

    // conjugate-consistency check against the pair structure
    let mut scale = 0.0f64;
    for row in &residues {
        for r in row {
            scale = scale.max(r.norm());
        }
    }
    for d in &direct {
        scale = scale.max(d.norm());
    }
    let mut mismatch = 0.0f64;
    for (mi, row) in residues.iter().enumerate() {
        let mut k = 0usize;
        for e in &poles.entries {
            match e {
                PoleEntry::Real(_) => {
                    mismatch = mismatch.max(row[k].im.abs());
                    k += 1;
                }
                PoleEntry::Pair { .. } => {
                    mismatch = mismatch.max((row[k + 1] - row[k].conj()).norm());
                    k += 2;
                }
            }
        }
        mismatch = mismatch.max(direct[mi].im.abs());
    }
    let consistent = scale == 0.0 || mismatch <= 0.05 * scale;

    if consistent {
        // re-solve on the real-coefficient structured basis so the
        // conjugate relations hold exactly
        let mut phi = Vec::with_capacity(n);
        for (mi, data_row) in band.data.iter().enumerate() {
            let mut a = DMatrix::<f64>::zeros(2 * ns, n + 1);
            let mut b = DVector::<f64>::zeros(2 * ns);
            for (i, &w) in band.omegas.iter().enumerate() {
                let s = Complex64::new(0.0, w);
                let wt = band.weights[mi][i];
                sigma_columns(poles, s, &mut phi);
                for (k, p) in phi.iter().enumerate() {
                    a[(2 * i, k)] = wt * p.re;
                    a[(2 * i + 1, k)] = wt * p.im;
                }
                a[(2 * i, n)] = wt;
                b[2 * i] = wt * data_row[i].re;
                b[2 * i + 1] = wt * data_row[i].im;
            }
            let x = solve_least_squares(a, b)?;
            let mut row = Vec::with_capacity(n);
            let mut k = 0usize;
            for e in &poles.entries {
                match e {
                    PoleEntry::Real(_) => {
                        row.push(Complex64::new(x[k], 0.0));
                        k += 1;
                    }
                    PoleEntry::Pair { .. } => {
                        let r = Complex64::new(x[k], x[k + 1]);
                        row.push(r);
                        row.push(r.conj());
                        k += 2;
                    }
                }
            }
            residues[mi] = row;
            direct[mi] = Complex64::new(x[n], 0.0);
        }
    }

    // relative RMS misfit over the band (unweighted)
    let mut err2 = 0.0f64;
    let mut ref2 = 0.0f64;
    for (mi, data_row) in band.data.iter().enumerate() {
        for (i, &w) in band.omegas.iter().enumerate() {
            let s = Complex64::new(0.0, w);
            let mut fit = direct[mi];
            for (k, &p) in expanded.iter().enumerate() {
                fit += residues[mi][k] / (s - p);
            }
            err2 += (fit - data_row[i]).norm_sqr();
            ref2 += data_row[i].norm_sqr();
        }
    }
    let rel_rms = if ref2 > 0.0 {
        (err2 / ref2).sqrt()
    } else {
        err2.sqrt()
    };

    Ok(ResidueSolution {
        residues,
        direct,
        rel_rms,
    })
}

/// Largest relative movement between two pole sets, matched greedily.
fn pole_movement(old: &PoleSet, new: &PoleSet, w_scale: f64) -> f64 {
    let a = old.expanded();
    let b = new.expanded();
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for p in &a {
        let mut best = f64::INFINITY;
        let mut best_j = None;
        for (j, q) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (p - q).norm();
            if d < best {
                best = d;
                best_j = Some(j);
            }
        }
        if let Some(j) = best_j {
            used[j] = true;
        }
        worst = worst.max(best / p.norm().max(1e-12 * w_scale));
    }
    worst
}

fn constant_response(band: &BandData) -> Option<Vec<Complex64>> {
    let mut means = Vec::with_capacity(band.data.len());
    for row in &band.data {
        let mean = row.iter().sum::<Complex64>() / row.len() as f64;
        let spread = row.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max);
        let scale = row.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0e-300);
        if spread > 1e-12 * scale.max(1.0) {
            return None;
        }
        means.push(mean);
    }
    Some(means)
}

fn labels_for(resps: &[FrequencyResponse]) -> Vec<String> {
    resps
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.node_id()
                .map(str::to_string)
                .unwrap_or_else(|| format!("response_{i}"))
        })
        .collect()
}

pub(crate) fn fit(
    resps: &[FrequencyResponse],
    band_hz: (f64, f64),
    order: FitOrder,
    options: &FitOptions,
) -> Result<PoleZeroModel> {
    if resps.is_empty() {
        return Err(Error::Validation("no responses to fit".into()));
    }
    let band = collect_band(resps, band_hz, options.weighting)?;
    let ns = band.omegas.len();

    // constant responses need no poles
    if let Some(means) = constant_response(&band) {
        let m = resps.len();
        return Ok(PoleZeroModel {
            poles: Vec::new(),
            residues: vec![Vec::new(); m],
            direct_terms: means,
            order: 0,
            fit_rms_error: 0.0,
            band_hz,
            labels: labels_for(resps),
            diagnostics: FitDiagnostics {
                converged: true,
                auto_threshold_met: true,
                ..Default::default()
            },
        });
    }

    match order {
        FitOrder::Fixed(n) => {
            if n == 0 {
                return Err(Error::Validation("fit order must be positive".into()));
            }
            if ns < 4 * n {
                return Err(Error::Validation(format!(
                    "order {n} needs at least {} band samples, the band holds {ns}",
                    4 * n
                )));
            }
            fit_fixed(resps, &band, band_hz, n, options, Vec::new())
        }
        FitOrder::Auto => {
            let mut scan: Vec<(usize, f64)> = Vec::new();
            let mut best: Option<PoleZeroModel> = None;
            let mut order_n = 2;
            while order_n <= options.auto_max_order && ns >= 4 * order_n {
                match fit_fixed(resps, &band, band_hz, order_n, options, Vec::new()) {
                    Ok(model) => {
                        scan.push((order_n, model.fit_rms_error));
                        let better = best
                            .as_ref()
                            .map(|b| model.fit_rms_error < b.fit_rms_error)
                            .unwrap_or(true);
                        let hit = model.fit_rms_error < options.auto_rms_threshold;
                        if better {
                            best = Some(model);
                        }
                        if hit {
                            break;
                        }
                    }
                    Err(Error::Convergence { .. }) => {
                        scan.push((order_n, f64::INFINITY));
                    }
                    Err(e) => return Err(e),
                }
                order_n += 2;
            }
            let mut model = best.ok_or_else(|| {
                Error::Validation(format!(
                    "no feasible order: the band holds only {ns} samples"
                ))
            })?;
            model.diagnostics.auto_threshold_met =
                model.fit_rms_error < options.auto_rms_threshold;
            model.diagnostics.auto_scan = scan;
            Ok(model)
        }
    }
}

fn fit_fixed(
    resps: &[FrequencyResponse],
    band: &BandData,
    band_hz: (f64, f64),
    order: usize,
    options: &FitOptions,
    scan: Vec<(usize, f64)>,
) -> Result<PoleZeroModel> {
    let w_scale = band.omegas.last().copied().unwrap_or(1.0);
    let mut poles = PoleSet::initial(order, band_hz);
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0usize;
    for _ in 0..options.max_iterations {
        iterations += 1;
        let new_poles = relocate_poles(&poles, band)?;
        let movement = pole_movement(&poles, &new_poles, w_scale);
        poles = new_poles;
        let sol = solve_residues(&poles, band)?;
        trace.push(sol.rel_rms);
        if movement < options.pole_movement_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            iterations,
            last_residual: trace.last().copied().unwrap_or(f64::NAN),
        });
    }
    let sol = solve_residues(&poles, band)?;
    Ok(PoleZeroModel {
        poles: poles.expanded(),
        residues: sol.residues,
        direct_terms: sol.direct,
        order,
        fit_rms_error: sol.rel_rms,
        band_hz,
        labels: labels_for(resps),
        diagnostics: FitDiagnostics {
            iterations,
            converged,
            residual_trace: trace,
            auto_scan: scan,
            auto_threshold_met: true,
        },
    })
}
