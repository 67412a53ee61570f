//! Pole trajectories across a monotone parameter sweep: matching,
//! margin trends, bifurcation bracketing, and report/plot emission.

mod svg;

pub use svg::pole_map_svg;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ident::{margin_metrics, PoleZeroModel};
use crate::netio::{PoleReport, PoleReportEntry, ReportedPole};

/// Poles farther apart than this normalized distance are never matched;
/// they start or end trajectories instead.
pub const MATCH_THRESHOLD: f64 = 0.25;

/// Fits with a relative RMS error above this are excluded from
/// bifurcation interpolation (identification degrades close to the
/// bifurcation).
pub const DEFAULT_RMS_EXCLUSION_THRESHOLD: f64 = 1e-2;

/// d(p, q) = |p - q| / (|p| + |q| + eps).
pub fn normalized_distance(p: Complex64, q: Complex64) -> f64 {
    (p - q).norm() / (p.norm() + q.norm() + 1e-300)
}

/// Injective matching between two pole lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    /// (index in prev, index in next) pairs.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_prev: Vec<usize>,
    pub unmatched_next: Vec<usize>,
}

/// Greedy minimum-normalized-distance matching with the 0.25 threshold.
/// Both lists hold upper-half representatives; empty lists are fine.
pub fn pair_poles_step(prev: &[Complex64], next: &[Complex64]) -> Matching {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(prev.len() * next.len());
    for (i, &p) in prev.iter().enumerate() {
        for (j, &q) in next.iter().enumerate() {
            let d = normalized_distance(p, q);
            if d <= MATCH_THRESHOLD {
                candidates.push((d, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| (a.0, a.1, a.2).partial_cmp(&(b.0, b.1, b.2)).unwrap());
    let mut prev_used = vec![false; prev.len()];
    let mut next_used = vec![false; next.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !prev_used[i] && !next_used[j] {
            prev_used[i] = true;
            next_used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    Matching {
        pairs,
        unmatched_prev: (0..prev.len()).filter(|&i| !prev_used[i]).collect(),
        unmatched_next: (0..next.len()).filter(|&j| !next_used[j]).collect(),
    }
}

/// A maximal chain of matched poles across consecutive sweep points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Index of the first sweep point the trajectory exists at.
    pub start: usize,
    /// One pole per consecutive sweep point from `start`.
    pub poles: Vec<Complex64>,
}

impl Trajectory {
    pub fn end(&self) -> usize {
        self.start + self.poles.len()
    }

    /// Largest normalized step distance along the chain.
    pub fn continuity_metric(&self) -> f64 {
        self.poles
            .windows(2)
            .map(|w| normalized_distance(w[0], w[1]))
            .fold(0.0, f64::max)
    }
}

/// Pole trajectories matched across a strictly monotone parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleTrack {
    pub param_name: String,
    /// Strictly increasing parameter values.
    pub param_values: Vec<f64>,
    /// Upper-half pole representatives per sweep point.
    pub pole_sets: Vec<Vec<Complex64>>,
    /// Relative RMS fit error per sweep point.
    pub fit_errors: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
}

impl PoleTrack {
    pub fn is_empty(&self) -> bool {
        self.param_values.is_empty()
    }

    /// Sweep points whose fit error exceeds the threshold.
    pub fn degraded_points(&self, rms_threshold: f64) -> Vec<usize> {
        (0..self.fit_errors.len())
            .filter(|&i| self.fit_errors[i] > rms_threshold)
            .collect()
    }
}

/// Sort sweep entries by the parameter, chain matchings into
/// trajectories.
pub fn build_tracks(
    sweep: &[(BTreeMap<String, f64>, PoleZeroModel)],
    param_key: &str,
) -> Result<PoleTrack> {
    let mut points: Vec<(f64, Vec<Complex64>, f64)> = Vec::with_capacity(sweep.len());
    for (i, (params, model)) in sweep.iter().enumerate() {
        let value = params.get(param_key).copied().ok_or_else(|| {
            Error::Validation(format!(
                "sweep entry {i} is missing the parameter key '{param_key}'"
            ))
        })?;
        points.push((value, model.upper_half_poles(), model.fit_rms_error()));
    }
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite parameter values"));
    for w in points.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::Validation(format!(
                "duplicate parameter value {} for '{param_key}'",
                w[0].0
            )));
        }
    }

    let param_values: Vec<f64> = points.iter().map(|p| p.0).collect();
    let pole_sets: Vec<Vec<Complex64>> = points.iter().map(|p| p.1.clone()).collect();
    let fit_errors: Vec<f64> = points.iter().map(|p| p.2).collect();

    let mut trajectories: Vec<Trajectory> = Vec::new();
    // active[j] = trajectory currently holding pole j of the latest point
    let mut active: Vec<usize> = Vec::new();
    for (idx, set) in pole_sets.iter().enumerate() {
        if idx == 0 {
            for &p in set {
                active.push(trajectories.len());
                trajectories.push(Trajectory {
                    start: 0,
                    poles: vec![p],
                });
            }
            continue;
        }
        let matching = pair_poles_step(&pole_sets[idx - 1], set);
        let mut next_active = vec![usize::MAX; set.len()];
        for &(i, j) in &matching.pairs {
            let t = active[i];
            trajectories[t].poles.push(set[j]);
            next_active[j] = t;
        }
        for &j in &matching.unmatched_next {
            next_active[j] = trajectories.len();
            trajectories.push(Trajectory {
                start: idx,
                poles: vec![set[j]],
            });
        }
        active = next_active;
    }

    Ok(PoleTrack {
        param_name: param_key.to_string(),
        param_values,
        pole_sets,
        fit_errors,
        trajectories,
    })
}

/// A sign change of Re(p) along a trajectory, with the linearly
/// interpolated crossing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationBracket {
    pub trajectory: usize,
    pub param_low: f64,
    pub param_high: f64,
    /// Linear interpolation of the Re(p) = 0 crossing.
    pub crossing_estimate: f64,
}

pub fn detect_bifurcation(track: &PoleTrack) -> Vec<BifurcationBracket> {
    detect_bifurcation_with_threshold(track, DEFAULT_RMS_EXCLUSION_THRESHOLD)
}

/// Scan each trajectory for Re(p) sign changes. Sweep points whose fit
/// error exceeds `rms_threshold` are excluded before bracketing, so a
/// degraded fit next to the bifurcation cannot corrupt the interpolation.
pub fn detect_bifurcation_with_threshold(
    track: &PoleTrack,
    rms_threshold: f64,
) -> Vec<BifurcationBracket> {
    let mut out = Vec::new();
    for (t_idx, traj) in track.trajectories.iter().enumerate() {
        let usable: Vec<(f64, f64)> = traj
            .poles
            .iter()
            .enumerate()
            .filter_map(|(k, p)| {
                let point = traj.start + k;
                if track.fit_errors[point] > rms_threshold {
                    None
                } else {
                    Some((track.param_values[point], p.re))
                }
            })
            .collect();
        for w in usable.windows(2) {
            let (x0, re0) = w[0];
            let (x1, re1) = w[1];
            if re0 * re1 < 0.0 {
                out.push(BifurcationBracket {
                    trajectory: t_idx,
                    param_low: x0,
                    param_high: x1,
                    crossing_estimate: x0 - re0 * (x1 - x0) / (re1 - re0),
                });
            }
        }
    }
    out
}

/// Flatten a track into a pole report (one entry per sweep point, the
/// max-Re pole of each point flagged critical) plus the SVG pole map.
/// The SVG is a view of the same coordinates, never a recomputation.
pub fn emit_report(track: &PoleTrack) -> Result<(PoleReport, String)> {
    let mut entries = Vec::with_capacity(track.param_values.len());
    for (i, set) in track.pole_sets.iter().enumerate() {
        let critical = set
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.re.partial_cmp(&b.1.re).unwrap())
            .map(|(k, _)| k);
        let mut poles = Vec::with_capacity(set.len());
        for (k, &p) in set.iter().enumerate() {
            let m = margin_metrics(p);
            poles.push(ReportedPole {
                re_per_s: p.re,
                im_per_s: p.im,
                f_res_hz: m.f_res_hz,
                damping_ratio: m.damping_ratio,
                q_factor: m.q_factor,
                critical: Some(k) == critical,
            });
        }
        let mut params = BTreeMap::new();
        params.insert(track.param_name.clone(), track.param_values[i]);
        entries.push(PoleReportEntry::new(params, poles, track.fit_errors[i])?);
    }
    let report = PoleReport { entries };
    let svg = pole_map_svg(track);
    Ok((report, svg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_lists_match_identically() {
        let poles = vec![
            Complex64::new(-1e6, 8e8),
            Complex64::new(-3e5, 1.2e9),
        ];
        let m = pair_poles_step(&poles, &poles);
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
        assert!(m.unmatched_prev.is_empty());
        assert!(m.unmatched_next.is_empty());
    }

    #[test]
    fn small_perturbation_matches_in_order() {
        let prev = vec![
            Complex64::new(-1e6, 8e8),
            Complex64::new(-3e5, 1.2e9),
        ];
        let next: Vec<Complex64> = prev.iter().map(|p| p * 1.01).collect();
        let m = pair_poles_step(&prev, &next);
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn distant_poles_stay_unmatched() {
        let prev = vec![Complex64::new(-1e6, 1e8)];
        let next = vec![Complex64::new(-1e6, 9e8)];
        let m = pair_poles_step(&prev, &next);
        assert!(m.pairs.is_empty());
        assert_eq!(m.unmatched_prev, vec![0]);
        assert_eq!(m.unmatched_next, vec![0]);
    }

    #[test]
    fn matching_is_permutation_invariant() {
        let prev = vec![
            Complex64::new(-1e6, 8e8),
            Complex64::new(-3e5, 1.2e9),
            Complex64::new(-9e5, 4e8),
        ];
        let next: Vec<Complex64> = prev.iter().map(|p| p * 1.02).collect();
        let shuffled = vec![next[2], next[0], next[1]];
        let m = pair_poles_step(&prev, &shuffled);
        let mut resolved: Vec<(usize, Complex64)> =
            m.pairs.iter().map(|&(i, j)| (i, shuffled[j])).collect();
        resolved.sort_by_key(|r| r.0);
        assert_eq!(resolved[0].1, next[0]);
        assert_eq!(resolved[1].1, next[1]);
        assert_eq!(resolved[2].1, next[2]);
    }

    fn track_from_res(param: &[f64], res: &[Vec<Complex64>], errs: &[f64]) -> PoleTrack {
        // build directly, bypassing the fit
        let mut trajectories: Vec<Trajectory> = Vec::new();
        let mut active: Vec<usize> = Vec::new();
        for (idx, set) in res.iter().enumerate() {
            if idx == 0 {
                for &p in set {
                    active.push(trajectories.len());
                    trajectories.push(Trajectory {
                        start: 0,
                        poles: vec![p],
                    });
                }
                continue;
            }
            let m = pair_poles_step(&res[idx - 1], set);
            let mut next_active = vec![usize::MAX; set.len()];
            for &(i, j) in &m.pairs {
                trajectories[active[i]].poles.push(set[j]);
                next_active[j] = active[i];
            }
            for &j in &m.unmatched_next {
                next_active[j] = trajectories.len();
                trajectories.push(Trajectory {
                    start: idx,
                    poles: vec![set[j]],
                });
            }
            active = next_active;
        }
        PoleTrack {
            param_name: "gm".into(),
            param_values: param.to_vec(),
            pole_sets: res.to_vec(),
            fit_errors: errs.to_vec(),
            trajectories,
        }
    }

    #[test]
    fn all_stable_track_has_no_brackets() {
        let sets = vec![
            vec![Complex64::new(-2e6, 1e9)],
            vec![Complex64::new(-1.5e6, 1e9)],
        ];
        let track = track_from_res(&[1.0, 2.0], &sets, &[1e-9, 1e-9]);
        assert!(detect_bifurcation(&track).is_empty());
    }

    #[test]
    fn sign_change_brackets_and_interpolates() {
        let sets = vec![
            vec![Complex64::new(-2e6, 1e9)],
            vec![Complex64::new(-1e6, 1e9)],
            vec![Complex64::new(1e6, 1e9)],
        ];
        let track = track_from_res(&[1.0, 2.0, 3.0], &sets, &[1e-9, 1e-9, 1e-9]);
        let brackets = detect_bifurcation(&track);
        assert_eq!(brackets.len(), 1);
        assert_eq!(brackets[0].param_low, 2.0);
        assert_eq!(brackets[0].param_high, 3.0);
        assert!((brackets[0].crossing_estimate - 2.5).abs() < 1e-12);
    }

    #[test]
    fn degraded_points_are_excluded() {
        let sets = vec![
            vec![Complex64::new(-2e6, 1e9)],
            vec![Complex64::new(-0.5e6, 1e9)],
            vec![Complex64::new(2e6, 1e9)],
        ];
        // middle fit is degraded; bracket must span the outer points
        let track = track_from_res(&[1.0, 2.0, 3.0], &sets, &[1e-9, 0.5, 1e-9]);
        let brackets = detect_bifurcation(&track);
        assert_eq!(brackets.len(), 1);
        assert_eq!(brackets[0].param_low, 1.0);
        assert_eq!(brackets[0].param_high, 3.0);
        assert_eq!(track.degraded_points(1e-2), vec![1]);
    }

    #[test]
    fn bracket_signs_are_opposite() {
        let sets = vec![
            vec![Complex64::new(-1e5, 7e8), Complex64::new(-4e6, 2e9)],
            vec![Complex64::new(2e5, 7.1e8), Complex64::new(-4.1e6, 2e9)],
        ];
        let track = track_from_res(&[0.1, 0.2], &sets, &[1e-9, 1e-9]);
        for b in detect_bifurcation(&track) {
            let traj = &track.trajectories[b.trajectory];
            let lo_idx = track
                .param_values
                .iter()
                .position(|&v| v == b.param_low)
                .unwrap();
            let hi_idx = track
                .param_values
                .iter()
                .position(|&v| v == b.param_high)
                .unwrap();
            let re_lo = traj.poles[lo_idx - traj.start].re;
            let re_hi = traj.poles[hi_idx - traj.start].re;
            assert!(re_lo * re_hi < 0.0);
        }
    }

    #[test]
    fn empty_track_emits_header_only() {
        let track = PoleTrack {
            param_name: "gm".into(),
            param_values: vec![],
            pole_sets: vec![],
            fit_errors: vec![],
            trajectories: vec![],
        };
        let (report, svg) = emit_report(&track).unwrap();
        assert!(report.entries.is_empty());
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn report_and_svg_share_coordinates() {
        let sets = vec![vec![Complex64::new(-1.25e6, 8.5e8)]];
        let track = track_from_res(&[1.0], &sets, &[1e-9]);
        let (report, svg) = emit_report(&track).unwrap();
        assert_eq!(report.entries.len(), 1);
        let pole = &report.entries[0].poles[0];
        assert_eq!(pole.re_per_s, -1.25e6);
        // the marker title carries the exact coordinates
        let expected = format!("<title>re={} im={}</title>", -1.25e6, 8.5e8);
        assert!(svg.contains(&expected), "{svg}");
    }
}
