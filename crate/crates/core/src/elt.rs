//! Ensembles of Lindblad trajectories.
//!
//! Each trajectory is an amplitude-damping channel evaluated at its own
//! effective damping argument. Populations of every trajectory come from the
//! dilation circuits, and the ensemble state at time `t` is the convex
//! combination `sum_i w_i(t) rho_i(t)`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{apply_channel, ChannelSpec, KrausMap};
use crate::circuit::{derive_seed, sample, simulate};
use crate::dilation::dilate_channel;
use crate::error::{Error, Result};
use crate::linalg::ComplexVector;
use crate::stateprep::VectorEnsemble;
use crate::synthesis::prep_and_apply;

/// Tolerance on each weight slice summing to one.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Number of trajectories in the default family.
pub const DEFAULT_FAMILY_SIZE: usize = 25;
pub const DEFAULT_KAPPA_MIN: f64 = 1e-2;
pub const DEFAULT_KAPPA_MAX: f64 = 1e1;
pub const DEFAULT_T_MAX: f64 = 10.0;
pub const DEFAULT_GRID_POINTS: usize = 101;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub index: usize,
    pub rate_multiplier: f64,
    pub lag: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyMode {
    RateScaled,
    LagShifted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFamily {
    pub trajectories: Vec<TrajectorySpec>,
    pub mode: FamilyMode,
    pub base_channel: ChannelSpec,
}

/// `count` points from `lo` to `hi`, evenly spaced in `log10`.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

/// `points` evenly spaced values on `[0, t_max]`.
pub fn uniform_grid(t_max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|k| t_max * k as f64 / (points - 1) as f64)
            .collect(),
    }
}

impl TrajectoryFamily {
    /// Rate-scaled family with the given multipliers.
    pub fn rate_scaled(multipliers: &[f64], base_channel: ChannelSpec) -> Result<Self> {
        let trajectories = multipliers
            .iter()
            .enumerate()
            .map(|(index, &k)| TrajectorySpec {
                index,
                rate_multiplier: k,
                lag: 0.0,
            })
            .collect();
        let family = Self {
            trajectories,
            mode: FamilyMode::RateScaled,
            base_channel,
        };
        family.validate()?;
        Ok(family)
    }

    /// Lag-shifted family with the given lags, all at the base rate.
    pub fn lag_shifted(lags: &[f64], base_channel: ChannelSpec) -> Result<Self> {
        let trajectories = lags
            .iter()
            .enumerate()
            .map(|(index, &lag)| TrajectorySpec {
                index,
                rate_multiplier: 1.0,
                lag,
            })
            .collect();
        let family = Self {
            trajectories,
            mode: FamilyMode::LagShifted,
            base_channel,
        };
        family.validate()?;
        Ok(family)
    }

    /// `{0} ∪ logspace(kappa_min, kappa_max, count - 1)`.
    pub fn default_rate_scaled(
        count: usize,
        kappa_min: f64,
        kappa_max: f64,
        base_channel: ChannelSpec,
    ) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidParameter(format!(
                "family size {count} leaves no decaying member"
            )));
        }
        if !(kappa_min > 0.0 && kappa_max >= kappa_min && kappa_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bad multiplier range [{kappa_min}, {kappa_max}]"
            )));
        }
        let mut kappas = vec![0.0];
        kappas.extend(logspace(kappa_min, kappa_max, count - 1));
        Self::rate_scaled(&kappas, base_channel)
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trajectories.is_empty() {
            return Err(Error::EmptyFamily);
        }
        self.base_channel.validate()?;
        for t in &self.trajectories {
            if !(t.rate_multiplier >= 0.0 && t.rate_multiplier.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "rate multiplier {} of trajectory {}",
                    t.rate_multiplier, t.index
                )));
            }
            if !(t.lag >= 0.0 && t.lag.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "lag {} of trajectory {}",
                    t.lag, t.index
                )));
            }
        }
        if self.mode == FamilyMode::RateScaled
            && !self.trajectories.iter().any(|t| t.rate_multiplier == 0.0)
        {
            return Err(Error::InvalidParameter(
                "rate-scaled family needs a member with zero multiplier".into(),
            ));
        }
        Ok(())
    }

    /// Checks that some member stays undecayed up to `t_max`.
    pub fn check_identity_member(&self, t_max: f64) -> Result<()> {
        let ok = match self.mode {
            FamilyMode::RateScaled => self.trajectories.iter().any(|t| t.rate_multiplier == 0.0),
            FamilyMode::LagShifted => self.trajectories.iter().any(|t| t.lag >= t_max),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "no family member stays undecayed up to gamma_t = {t_max}"
            )))
        }
    }
}

/// Damping argument fed to the Kraus map of one trajectory at time `t`.
pub fn trajectory_gamma_t(spec: &TrajectorySpec, mode: FamilyMode, t: f64) -> f64 {
    match mode {
        FamilyMode::RateScaled => spec.rate_multiplier * t,
        FamilyMode::LagShifted => (t - spec.lag).max(0.0),
    }
}

/// Per-time convex weights over a trajectory family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSchedule {
    pub times: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
}

impl WeightSchedule {
    pub fn new(times: Vec<f64>, weights: Vec<Vec<f64>>) -> Result<Self> {
        let s = Self { times, weights };
        s.validate()?;
        Ok(s)
    }

    /// The same weights at every time.
    pub fn constant(times: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let w = vec![weights; times.len()];
        Self::new(times, w)
    }

    pub fn family_size(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.weights.len() {
            return Err(Error::WeightGridMismatch(format!(
                "{} times but {} weight slices",
                self.times.len(),
                self.weights.len()
            )));
        }
        let n = self.family_size();
        for (t, slice) in self.times.iter().zip(&self.weights) {
            if slice.len() != n {
                return Err(Error::WeightGridMismatch(format!(
                    "slice at gamma_t = {t} has {} weights, expected {n}",
                    slice.len()
                )));
            }
            if slice.iter().any(|&w| w.is_nan() || w < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "negative weight at gamma_t = {t}"
                )));
            }
            let total: f64 = slice.iter().sum();
            if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(Error::InvalidParameter(format!(
                    "weights at gamma_t = {t} sum to {total}"
                )));
            }
        }
        Ok(())
    }
}

/// Where a population series came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Exact,
    Statevector,
    Shots { shots: u64, seed: u64 },
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Exact => f.write_str("exact"),
            Source::Statevector => f.write_str("statevector"),
            Source::Shots { shots, seed } => write!(f, "shots:{shots}:{seed}"),
        }
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Source::Exact),
            "statevector" => Ok(Source::Statevector),
            _ => {
                let parts: Vec<&str> = s.split(':').collect();
                match parts.as_slice() {
                    ["shots", n, seed] => Ok(Source::Shots {
                        shots: n.parse().map_err(|_| {
                            Error::BadConfig(format!("bad shot count in source `{s}`"))
                        })?,
                        seed: seed
                            .parse()
                            .map_err(|_| Error::BadConfig(format!("bad seed in source `{s}`")))?,
                    }),
                    _ => Err(Error::BadConfig(format!("unknown source `{s}`"))),
                }
            }
        }
    }
}

/// Ground and excited populations on a `gamma_t` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSeries {
    pub times: Vec<f64>,
    pub ground: Vec<f64>,
    pub excited: Vec<f64>,
    pub source: Source,
}

pub const CSV_HEADER: &str = "gamma_t,rho_00,rho_11,source";

/// Shortest representation that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

impl PopulationSeries {
    pub fn new(
        times: Vec<f64>,
        ground: Vec<f64>,
        excited: Vec<f64>,
        source: Source,
    ) -> Result<Self> {
        if ground.len() != times.len() || excited.len() != times.len() {
            return Err(Error::GridMismatch(format!(
                "{} times, {} ground and {} excited values",
                times.len(),
                ground.len(),
                excited.len()
            )));
        }
        Ok(Self {
            times,
            ground,
            excited,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let label = self.source.to_string();
        let mut out = String::with_capacity(64 * (self.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for k in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                format_float(self.times[k]),
                format_float(self.ground[k]),
                format_float(self.excited[k]),
                label
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            Some((_, h)) => {
                return Err(Error::BadConfig(format!(
                    "line 1: expected header `{CSV_HEADER}`, found `{h}`"
                )))
            }
            None => return Err(Error::BadConfig("empty population CSV".into())),
        }
        let (mut times, mut ground, mut excited) = (Vec::new(), Vec::new(), Vec::new());
        let mut source = None;
        for (n, line) in lines {
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != 4 {
                return Err(Error::BadConfig(format!(
                    "line {}: expected 4 fields, found {}",
                    n + 1,
                    fields.len()
                )));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::BadConfig(format!("line {}: `{s}` is not a number", n + 1)))
            };
            times.push(num(fields[0])?);
            ground.push(num(fields[1])?);
            excited.push(num(fields[2])?);
            let s: Source = fields[3]
                .parse()
                .map_err(|e| Error::BadConfig(format!("line {}: {e}", n + 1)))?;
            match source {
                None => source = Some(s),
                Some(prev) if prev != s => {
                    return Err(Error::BadConfig(format!(
                        "line {}: mixed sources in one series",
                        n + 1
                    )));
                }
                _ => {}
            }
        }
        Self::new(times, ground, excited, source.unwrap_or(Source::Exact))
    }
}

/// How populations are read out of the dilation circuits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Statevector,
    Shots { shots: u64, seed: u64 },
}

impl Backend {
    pub fn source(&self) -> Source {
        match *self {
            Backend::Statevector => Source::Statevector,
            Backend::Shots { shots, seed } => Source::Shots { shots, seed },
        }
    }

    /// The same backend with the seed replaced by one derived from `indices`.
    fn reseeded(&self, indices: &[u64]) -> Self {
        match *self {
            Backend::Statevector => Backend::Statevector,
            Backend::Shots { shots, seed } => Backend::Shots {
                shots,
                seed: derive_seed(seed, indices),
            },
        }
    }
}

/// `(rho_0, rho_1) = sum_j w_j sum_i |(U_{M_i} v_j)[k]|^2`, each term read
/// from the circuit that prepares `v_j` and applies the dilation of `M_i`.
pub fn populations_from_dilation(
    map: &KrausMap,
    ensemble: &VectorEnsemble,
    backend: Backend,
) -> Result<(f64, f64)> {
    if map.dim() != 2 || ensemble.system_dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: ensemble.system_dim().max(map.dim()),
        });
    }
    let unitaries = dilate_channel(map)?;
    let vectors = ensemble.padded_vectors();
    let input = ComplexVector::basis(4, 0);
    let (mut rho0, mut rho1) = (0.0, 0.0);
    for (j, (w, v)) in ensemble.weights.iter().zip(&vectors).enumerate() {
        for (i, u) in unitaries.iter().enumerate() {
            let circuit = prep_and_apply(u, v)?;
            let (p0, p1) = match backend.reseeded(&[i as u64, j as u64]) {
                Backend::Statevector => {
                    let out = simulate(&circuit, &input)?;
                    (out[0].norm_sqr(), out[1].norm_sqr())
                }
                Backend::Shots { shots, seed } => {
                    let counts = sample(&circuit, &input, shots, seed)?;
                    (counts.frequency(0), counts.frequency(1))
                }
            };
            rho0 += w * p0;
            rho1 += w * p1;
        }
    }
    Ok((rho0, rho1))
}

/// Populations of the matrix-path channel output `sum_i M_i D M_i^dagger`.
pub fn populations_from_channel(map: &KrausMap, ensemble: &VectorEnsemble) -> Result<(f64, f64)> {
    let out = apply_channel(map, &ensemble.density())?;
    Ok((out[(0, 0)].re, out[(1, 1)].re))
}

/// `(rho_0, rho_1)` of every trajectory at every time, indexed `[t][i]`.
///
/// Evaluations run in parallel; shot seeds depend only on the `(t, i)`
/// indices, so results do not depend on scheduling.
pub fn trajectory_populations(
    family: &TrajectoryFamily,
    times: &[f64],
    ensemble: &VectorEnsemble,
    backend: Backend,
) -> Result<Vec<Vec<(f64, f64)>>> {
    family.validate()?;
    if let Some(&t) = times.iter().find(|t| t.is_nan() || **t < 0.0) {
        return Err(Error::NegativeTime(t));
    }
    let n = family.len();
    let flat: Vec<(f64, f64)> = (0..times.len() * n)
        .into_par_iter()
        .map(|k| {
            let (ti, i) = (k / n, k % n);
            let gt = trajectory_gamma_t(&family.trajectories[i], family.mode, times[ti]);
            let map = family.base_channel.kraus(gt)?;
            populations_from_dilation(&map, ensemble, backend.reseeded(&[ti as u64, i as u64]))
        })
        .collect::<Result<_>>()?;
    Ok(flat.chunks(n).map(<[_]>::to_vec).collect())
}

/// Populations of the base channel alone on `times`.
pub fn single_trajectory(
    channel: &ChannelSpec,
    times: &[f64],
    ensemble: &VectorEnsemble,
    backend: Backend,
) -> Result<PopulationSeries> {
    channel.validate()?;
    let pops: Vec<(f64, f64)> = times
        .par_iter()
        .enumerate()
        .map(|(ti, &t)| {
            if t.is_nan() || t < 0.0 {
                return Err(Error::NegativeTime(t));
            }
            populations_from_dilation(&channel.kraus(t)?, ensemble, backend.reseeded(&[ti as u64]))
        })
        .collect::<Result<_>>()?;
    let (ground, excited) = pops.into_iter().unzip();
    PopulationSeries::new(times.to_vec(), ground, excited, backend.source())
}

/// Weighted combination of precomputed trajectory populations.
pub fn combine(
    pops: &[Vec<(f64, f64)>],
    schedule: &WeightSchedule,
    source: Source,
) -> Result<PopulationSeries> {
    schedule.validate()?;
    if pops.len() != schedule.times.len() {
        return Err(Error::WeightGridMismatch(format!(
            "{} population rows for {} scheduled times",
            pops.len(),
            schedule.times.len()
        )));
    }
    let (mut ground, mut excited) = (
        Vec::with_capacity(pops.len()),
        Vec::with_capacity(pops.len()),
    );
    for (row, w) in pops.iter().zip(&schedule.weights) {
        if row.len() != w.len() {
            return Err(Error::WeightGridMismatch(format!(
                "{} trajectories but {} weights",
                row.len(),
                w.len()
            )));
        }
        ground.push(row.iter().zip(w).map(|(p, w)| w * p.0).sum());
        excited.push(row.iter().zip(w).map(|(p, w)| w * p.1).sum());
    }
    PopulationSeries::new(schedule.times.clone(), ground, excited, source)
}

/// Ensemble populations `sum_i w_i(t) rho_i(t)` on the schedule's grid.
pub fn elt_evolve(
    family: &TrajectoryFamily,
    schedule: &WeightSchedule,
    ensemble: &VectorEnsemble,
    backend: Backend,
) -> Result<PopulationSeries> {
    schedule.validate()?;
    if schedule.family_size() != family.len() {
        return Err(Error::WeightGridMismatch(format!(
            "schedule has {} weights per time, family has {} trajectories",
            schedule.family_size(),
            family.len()
        )));
    }
    let pops = trajectory_populations(family, &schedule.times, ensemble, backend)?;
    combine(&pops, schedule, backend.source())
}
