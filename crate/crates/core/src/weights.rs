//! Simplex-constrained least squares for ensemble weights.
//!
//! At each time the objective `(p.w - r)^2 + reg |w|^2` over the probability
//! simplex is solved exactly: its minimizer is `w(beta) = proj(-beta p)` for
//! the unique root of the scalar equation `p.w(beta) - r = reg beta`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elt::{PopulationSeries, WeightSchedule};
use crate::error::{Error, Result};

pub const DEFAULT_REG: f64 = 1e-8;
/// References beyond the hull by more than this are flagged.
pub const HULL_TOL: f64 = 1e-12;

/// Euclidean projection onto `{w >= 0, sum w = 1}`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Uniform weights on the indices where `p` attains `target`.
fn uniform_on(p: &[f64], target: f64) -> Vec<f64> {
    let hits = p.iter().filter(|&&x| x == target).count() as f64;
    p.iter()
        .map(|&x| if x == target { 1.0 / hits } else { 0.0 })
        .collect()
}

/// Minimizer of `(p.w - r)^2 + reg |w|^2` on the simplex.
pub fn fit_slice(p: &[f64], r: f64, reg: f64) -> Vec<f64> {
    let hi_p = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo_p = p.iter().copied().fold(f64::INFINITY, f64::min);
    if reg == 0.0 {
        if r >= hi_p {
            return uniform_on(p, hi_p);
        }
        if r <= lo_p {
            return uniform_on(p, lo_p);
        }
    }
    let weights_at = |beta: f64| project_simplex(&p.iter().map(|x| -beta * x).collect::<Vec<_>>());
    let excess = |beta: f64| dot(p, &weights_at(beta)) - r - reg * beta;

    // excess is nonincreasing in beta; grow a bracket around its root.
    let (mut lo, mut hi) = (-1.0, 1.0);
    while excess(lo) < 0.0 {
        lo *= 2.0;
    }
    while excess(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let e = excess(mid);
        if e == 0.0 {
            return weights_at(mid);
        }
        if e > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Both ends bracket the root to machine precision; interpolate between
    // their weights so the residual is not limited by the kink structure.
    let (wl, wh) = (weights_at(lo), weights_at(hi));
    let (el, eh) = (excess(lo), excess(hi));
    let s = if el - eh > 0.0 { el / (el - eh) } else { 0.5 };
    wl.iter().zip(&wh).map(|(a, b)| a + s * (b - a)).collect()
}

fn check_shapes(pops: &[Vec<f64>], reference: &PopulationSeries) -> Result<usize> {
    let n = pops.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::EmptyFamily);
    }
    if pops.len() != reference.len() {
        return Err(Error::GridMismatch(format!(
            "{} population rows for {} reference times",
            pops.len(),
            reference.len()
        )));
    }
    if let Some(row) = pops.iter().position(|r| r.len() != n) {
        return Err(Error::GridMismatch(format!(
            "row {row} has {} trajectories, expected {n}",
            pops[row].len()
        )));
    }
    Ok(n)
}

/// Per-time weights fitting `pops[t][i]` (excited populations) to the
/// reference excited population.
pub fn fit_weights(
    pops: &[Vec<f64>],
    reference: &PopulationSeries,
    reg: f64,
) -> Result<WeightSchedule> {
    check_shapes(pops, reference)?;
    if !(reg >= 0.0 && reg.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "regularization must be nonnegative, got {reg}"
        )));
    }
    let weights = pops
        .par_iter()
        .zip(&reference.excited)
        .map(|(p, &r)| fit_slice(p, r, reg))
        .collect();
    WeightSchedule::new(reference.times.clone(), weights)
}

/// One weight vector shared by all times, by accelerated projected gradient.
/// A time-independent mixture of monotone trajectories is itself monotone,
/// so this mode cannot follow population revivals.
pub fn fit_global_weights(
    pops: &[Vec<f64>],
    reference: &PopulationSeries,
    reg: f64,
) -> Result<WeightSchedule> {
    let n = check_shapes(pops, reference)?;
    if !(reg >= 0.0 && reg.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "regularization must be nonnegative, got {reg}"
        )));
    }
    let grad = |w: &[f64]| -> Vec<f64> {
        let mut g: Vec<f64> = w.iter().map(|x| 2.0 * reg * x).collect();
        for (p, r) in pops.iter().zip(&reference.excited) {
            let s = 2.0 * (dot(p, w) - r);
            for (gi, pi) in g.iter_mut().zip(p) {
                *gi += s * pi;
            }
        }
        g
    };
    let frob: f64 = pops.iter().flatten().map(|x| x * x).sum();
    let step = 1.0 / (2.0 * (frob + reg)).max(1e-300);
    let mut w = vec![1.0 / n as f64; n];
    let mut y = w.clone();
    let mut momentum = 1.0f64;
    for _ in 0..20_000 {
        let g = grad(&y);
        let next = project_simplex(
            &y.iter()
                .zip(&g)
                .map(|(a, b)| a - step * b)
                .collect::<Vec<_>>(),
        );
        let m_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / m_next;
        let change: f64 = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).sum();
        y = next
            .iter()
            .zip(&w)
            .map(|(a, b)| a + beta * (a - b))
            .collect();
        w = next;
        momentum = m_next;
        if change < 1e-15 {
            break;
        }
    }
    WeightSchedule::constant(reference.times.clone(), w)
}

/// Residual and hull diagnostics of a fitted schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub times: Vec<f64>,
    pub residual: Vec<f64>,
    pub hull_min: Vec<f64>,
    pub hull_max: Vec<f64>,
    pub outside_hull: Vec<bool>,
    pub max_residual: f64,
}

pub fn fit_report(
    schedule: &WeightSchedule,
    pops: &[Vec<f64>],
    reference: &PopulationSeries,
) -> Result<FitReport> {
    check_shapes(pops, reference)?;
    schedule.validate()?;
    if schedule.times.len() != reference.len()
        || schedule
            .times
            .iter()
            .zip(&reference.times)
            .any(|(a, b)| a != b)
    {
        return Err(Error::GridMismatch(
            "schedule and reference grids differ".into(),
        ));
    }
    if schedule.family_size() != pops[0].len() {
        return Err(Error::GridMismatch(format!(
            "schedule has {} weights per time, populations have {} trajectories",
            schedule.family_size(),
            pops[0].len()
        )));
    }
    let mut report = FitReport {
        times: reference.times.clone(),
        residual: Vec::new(),
        hull_min: Vec::new(),
        hull_max: Vec::new(),
        outside_hull: Vec::new(),
        max_residual: 0.0,
    };
    for ((p, w), &r) in pops.iter().zip(&schedule.weights).zip(&reference.excited) {
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let residual = (dot(p, w) - r).abs();
        report.max_residual = report.max_residual.max(residual);
        report.residual.push(residual);
        report.hull_min.push(lo);
        report.hull_max.push(hi);
        report
            .outside_hull
            .push(r > hi + HULL_TOL || r < lo - HULL_TOL);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elt::Source;
    use proptest::prelude::*;

    fn series(values: &[f64]) -> PopulationSeries {
        let times: Vec<f64> = (0..values.len()).map(|k| k as f64).collect();
        PopulationSeries::new(
            times,
            values.iter().map(|v| 1.0 - v).collect(),
            values.to_vec(),
            Source::Exact,
        )
        .unwrap()
    }

    /// Brute-force minimizer over a fine simplex lattice for two or three
    /// trajectories.
    fn lattice_min(p: &[f64], r: f64, reg: f64) -> f64 {
        let n = 400;
        let obj = |w: &[f64]| (dot(p, w) - r).powi(2) + reg * w.iter().map(|x| x * x).sum::<f64>();
        let mut best = f64::INFINITY;
        for a in 0..=n {
            let wa = a as f64 / n as f64;
            if p.len() == 2 {
                best = best.min(obj(&[wa, 1.0 - wa]));
            } else {
                for b in 0..=(n - a) {
                    let wb = b as f64 / n as f64;
                    best = best.min(obj(&[wa, wb, 1.0 - wa - wb]));
                }
            }
        }
        best
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_simplex(&[0.5, 0.5]), vec![0.5, 0.5]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let w = project_simplex(&[0.3, 0.3, 0.3]);
        assert!(w.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn two_point_interpolation() {
        let w = fit_weights(&[vec![0.2, 0.6]], &series(&[0.4]), 0.0).unwrap();
        assert!((w.weights[0][0] - 0.5).abs() < 1e-12);
        assert!((w.weights[0][1] - 0.5).abs() < 1e-12);
    }

    /// Trajectory 3 is the top of the hull at every time.
    fn member_family() -> (Vec<Vec<f64>>, PopulationSeries) {
        let pops: Vec<Vec<f64>> = (0..6)
            .map(|t| {
                let t = t as f64;
                vec![
                    0.1 * (-t).exp(),
                    0.3 * (-t).exp(),
                    0.5 * (-t).exp(),
                    0.95,
                    0.7 * (-0.1 * t).exp(),
                ]
            })
            .collect();
        let r: Vec<f64> = pops.iter().map(|p| p[3]).collect();
        (pops, series(&r))
    }

    #[test]
    fn exact_member_without_ridge() {
        let (pops, reference) = member_family();
        let s = fit_weights(&pops, &reference, 0.0).unwrap();
        let report = fit_report(&s, &pops, &reference).unwrap();
        for w in &s.weights {
            assert_eq!(w[3], 1.0);
        }
        assert!(report.max_residual < 1e-10);
    }

    #[test]
    fn exact_member_with_small_ridge() {
        let (pops, reference) = member_family();
        let s = fit_weights(&pops, &reference, 1e-6).unwrap();
        let report = fit_report(&s, &pops, &reference).unwrap();
        for w in &s.weights {
            assert!(w[3] > 1.0 - 1e-3, "{w:?}");
        }
        assert!(report.max_residual < 1e-5);
    }

    #[test]
    fn ridge_spreads_tied_weights() {
        let s = fit_weights(&[vec![0.5, 0.5, 0.5]], &series(&[0.5]), DEFAULT_REG).unwrap();
        for w in &s.weights[0] {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_outside_hull_is_flagged() {
        let pops = vec![vec![0.2, 0.6], vec![0.1, 0.4]];
        let reference = series(&[1.5, 0.3]);
        let s = fit_weights(&pops, &reference, 0.0).unwrap();
        let report = fit_report(&s, &pops, &reference).unwrap();
        assert_eq!(report.outside_hull, vec![true, false]);
        assert!((report.residual[0] - (1.5 - 0.6)).abs() < 1e-15);
        assert!(report.residual[1] < 1e-12);
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(
            fit_weights(&[vec![]], &series(&[0.5]), 0.0),
            Err(Error::EmptyFamily)
        ));
        assert!(matches!(
            fit_weights(&[vec![0.1], vec![0.2]], &series(&[0.5]), 0.0),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn global_mode_fits_a_fixed_mixture() {
        let pops: Vec<Vec<f64>> = (0..20)
            .map(|t| {
                let t = 0.5 * t as f64;
                vec![1.0, (-t).exp(), (-3.0 * t).exp()]
            })
            .collect();
        let truth = [0.2, 0.5, 0.3];
        let r: Vec<f64> = pops.iter().map(|p| dot(p, &truth)).collect();
        let s = fit_global_weights(&pops, &series(&r), 0.0).unwrap();
        for (w, t) in s.weights[7].iter().zip(truth) {
            assert!((w - t).abs() < 1e-6, "{:?}", s.weights[7]);
        }
        assert_eq!(s.weights[0], s.weights[19]);
    }

    proptest! {
        #[test]
        fn slices_lie_on_the_simplex(
            p in proptest::collection::vec(0.0f64..=1.0, 1..30),
            r in -0.5f64..1.5,
            reg in prop_oneof![Just(0.0), 1e-10f64..1e-2],
        ) {
            let w = fit_slice(&p, r, reg);
            prop_assert!(w.iter().all(|&x| x >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn inside_hull_is_matched(p in proptest::collection::vec(0.0f64..=1.0, 2..30), s in 0.0f64..=1.0) {
            let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let r = lo + s * (hi - lo);
            let w = fit_slice(&p, r, 0.0);
            prop_assert!((dot(&p, &w) - r).abs() < 1e-10);
        }

        #[test]
        fn matches_brute_force(
            p in proptest::collection::vec(0.0f64..=1.0, 2..=3),
            r in -0.2f64..1.2,
            reg in prop_oneof![Just(0.0), 1e-4f64..1e-1],
        ) {
            let w = fit_slice(&p, r, reg);
            let obj = (dot(&p, &w) - r).powi(2) + reg * w.iter().map(|x| x * x).sum::<f64>();
            prop_assert!(obj <= lattice_min(&p, r, reg) + 1e-12);
        }

        #[test]
        fn larger_families_never_fit_worse(
            p in proptest::collection::vec(0.0f64..=1.0, 1..10),
            extra in proptest::collection::vec(0.0f64..=1.0, 1..10),
            r in -0.2f64..1.2,
        ) {
            let small = fit_slice(&p, r, 0.0);
            let mut q = p.clone();
            q.extend(extra);
            let big = fit_slice(&q, r, 0.0);
            prop_assert!((dot(&q, &big) - r).abs() <= (dot(&p, &small) - r).abs() + 1e-12);
        }
    }
}
