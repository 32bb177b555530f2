//! Lindblad dissipation channels in operator-sum (Kraus) form.
//!
//! Times are dimensionless `gamma * t` throughout; the physical rate only
//! enters the Lindblad integrator, which works in lab time `s = gamma_t / rate`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::rk4;
use crate::linalg::{c64, hermitian_eig, ComplexMatrix, C64};

/// Completeness tolerance for `sum_i M_i^dagger M_i = I`.
pub const COMPLETENESS_TOL: f64 = 1e-12;
/// Tolerance used when checking that an input is a density matrix.
pub const DENSITY_TOL: f64 = 1e-10;
/// Default step count for [`lindblad_propagate`].
pub const DEFAULT_RK4_STEPS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    AmplitudeDamping,
}

/// A dissipation channel: its kind, rate (inverse time) and system dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub rate: f64,
    pub dim: usize,
}

impl ChannelSpec {
    pub fn amplitude_damping(rate: f64) -> Result<Self> {
        let spec = Self {
            kind: ChannelKind::AmplitudeDamping,
            rate,
            dim: 2,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "channel rate must be positive, got {}",
                self.rate
            )));
        }
        match self.kind {
            ChannelKind::AmplitudeDamping if self.dim != 2 => {
                Err(Error::InvalidParameter(format!(
                    "amplitude damping acts on a two-level system, got dim {}",
                    self.dim
                )))
            }
            _ => Ok(()),
        }
    }

    /// Lindblad operators `C_i`, scaled by `sqrt(rate)`.
    pub fn lindblad_operators(&self) -> Vec<ComplexMatrix> {
        match self.kind {
            ChannelKind::AmplitudeDamping => {
                let r = self.rate.sqrt();
                vec![ComplexMatrix::from_real(2, 2, &[0.0, r, 0.0, 0.0])]
            }
        }
    }

    /// Kraus map after an effective damping time `gamma_t`.
    pub fn kraus(&self, gamma_t: f64) -> Result<KrausMap> {
        match self.kind {
            ChannelKind::AmplitudeDamping => amplitude_damping_kraus(gamma_t),
        }
    }
}

/// A complete set of Kraus operators tagged with the effective map time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KrausMapLiteral", into = "KrausMapLiteral")]
pub struct KrausMap {
    dim: usize,
    operators: Vec<ComplexMatrix>,
    time: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KrausMapLiteral {
    pub time: f64,
    pub operators: Vec<ComplexMatrix>,
}

impl TryFrom<KrausMapLiteral> for KrausMap {
    type Error = Error;

    fn try_from(lit: KrausMapLiteral) -> Result<Self> {
        KrausMap::new(lit.operators, lit.time)
    }
}

impl From<KrausMap> for KrausMapLiteral {
    fn from(map: KrausMap) -> Self {
        KrausMapLiteral {
            time: map.time,
            operators: map.operators,
        }
    }
}

impl KrausMap {
    pub fn new(operators: Vec<ComplexMatrix>, time: f64) -> Result<Self> {
        let first = operators.first().ok_or_else(|| {
            Error::InvalidParameter("Kraus map needs at least one operator".into())
        })?;
        let dim = first.require_square()?;
        for op in &operators {
            let n = op.require_square()?;
            if n != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: n,
                });
            }
        }
        if !(time >= 0.0 && time.is_finite()) {
            return Err(Error::NegativeTime(time));
        }
        let map = Self {
            dim,
            operators,
            time,
        };
        let defect = map.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return Err(Error::InvalidParameter(format!(
                "Kraus operators are not complete (defect {defect:e})"
            )));
        }
        Ok(map)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// `max |sum_i M_i^dagger M_i - I|`.
    pub fn completeness_defect(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.dim, self.dim);
        for m in &self.operators {
            sum = &sum + &m.adjoint().matmul(m);
        }
        (&sum - &ComplexMatrix::identity(self.dim)).max_abs()
    }
}

/// Amplitude-damping Kraus pair `M_0 = diag(1, sqrt(e^-gt))`,
/// `M_1 = sqrt(1 - e^-gt) |0><1|`.
pub fn amplitude_damping_kraus(gamma_t: f64) -> Result<KrausMap> {
    if !(gamma_t >= 0.0 && gamma_t.is_finite()) {
        return Err(Error::NegativeTime(gamma_t));
    }
    let survive = (-gamma_t).exp();
    let decay = -(-gamma_t).exp_m1();
    let m0 = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, survive.sqrt()]);
    let m1 = ComplexMatrix::from_real(2, 2, &[0.0, decay.sqrt(), 0.0, 0.0]);
    KrausMap::new(vec![m0, m1], gamma_t)
}

/// Checks that `d` is a Hermitian, unit-trace, positive semidefinite matrix of
/// dimension `dim`.
pub fn validate_density(d: &ComplexMatrix, dim: usize, tol: f64) -> Result<()> {
    let n = d.require_square()?;
    if n != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: n,
        });
    }
    let asym = d.hermitian_defect();
    if asym > tol {
        return Err(Error::InvalidDensityMatrix(format!(
            "not Hermitian (asymmetry {asym:e})"
        )));
    }
    let tr = d.trace();
    if (tr - c64(1.0, 0.0)).norm() > tol {
        return Err(Error::InvalidDensityMatrix(format!("trace {tr} != 1")));
    }
    let eig = hermitian_eig(d, tol)?;
    let smallest = *eig.values.last().expect("non-empty spectrum");
    if smallest < -tol {
        return Err(Error::InvalidDensityMatrix(format!(
            "negative eigenvalue {smallest:e}"
        )));
    }
    Ok(())
}

/// `sum_i M_i D M_i^dagger`.
pub fn apply_channel(map: &KrausMap, d: &ComplexMatrix) -> Result<ComplexMatrix> {
    validate_density(d, map.dim(), DENSITY_TOL)?;
    let mut out = ComplexMatrix::zeros(map.dim(), map.dim());
    for m in map.operators() {
        out = &out + &m.matmul(d).matmul(&m.adjoint());
    }
    Ok(out.hermitian_part())
}

/// Integrates the Lindblad equation
/// `dD/ds = -i[H, D] + sum_i C_i D C_i^dagger - 1/2 {C_i^dagger C_i, D}`
/// up to lab time `s = gamma_t / rate` with fixed-step RK4.
pub fn lindblad_propagate(
    spec: &ChannelSpec,
    hamiltonian: &ComplexMatrix,
    d0: &ComplexMatrix,
    gamma_t: f64,
    steps: usize,
) -> Result<ComplexMatrix> {
    spec.validate()?;
    if !(gamma_t >= 0.0 && gamma_t.is_finite()) {
        return Err(Error::NegativeTime(gamma_t));
    }
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    let n = spec.dim;
    let hn = hamiltonian.require_square()?;
    if hn != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: hn,
        });
    }
    let asym = hamiltonian.hermitian_defect();
    if asym > DENSITY_TOL {
        return Err(Error::NotHermitian {
            asymmetry: asym,
            tol: DENSITY_TOL,
        });
    }
    validate_density(d0, n, DENSITY_TOL)?;

    let ops = spec.lindblad_operators();
    let ops_adj: Vec<_> = ops.iter().map(ComplexMatrix::adjoint).collect();
    let ops_gram: Vec<_> = ops
        .iter()
        .zip(&ops_adj)
        .map(|(c, ca)| ca.matmul(c))
        .collect();
    let minus_i = c64(0.0, -1.0);
    let half = c64(0.5, 0.0);

    let rhs = |_s: f64, y: &[C64]| -> Vec<C64> {
        let d = ComplexMatrix::from_rows(n, n, y.to_vec());
        let comm = &hamiltonian.matmul(&d) - &d.matmul(hamiltonian);
        let mut out = comm.scale(minus_i);
        for ((c, ca), gram) in ops.iter().zip(&ops_adj).zip(&ops_gram) {
            let jump = c.matmul(&d).matmul(ca);
            let anti = &gram.matmul(&d) + &d.matmul(gram);
            out = &out + &(&jump - &anti.scale(half));
        }
        out.entries().to_vec()
    };

    let s_end = gamma_t / spec.rate;
    let y = rk4(rhs, d0.entries(), 0.0, s_end, steps);
    Ok(ComplexMatrix::from_rows(n, n, y).hermitian_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn d_initial() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.25, 0.25, 0.25, 0.75])
    }

    #[test]
    fn kraus_at_zero_is_identity_channel() {
        let map = amplitude_damping_kraus(0.0).unwrap();
        assert_eq!(map.operators()[0], ComplexMatrix::identity(2));
        assert_eq!(map.operators()[1].max_abs(), 0.0);
        let out = apply_channel(&map, &d_initial()).unwrap();
        assert!(out.max_diff(&d_initial()) < 1e-15);
    }

    #[test]
    fn kraus_at_ln2() {
        let map = amplitude_damping_kraus(LN_2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((map.operators()[0][(1, 1)].re - h).abs() < 1e-15);
        assert!((map.operators()[1][(0, 1)].re - h).abs() < 1e-15);
        let out = apply_channel(&map, &d_initial()).unwrap();
        assert!((out[(1, 1)].re - 3.0 / 8.0).abs() < 1e-15);
        assert!((out[(0, 0)].re - 5.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn kraus_long_time_relaxes_to_ground() {
        let map = amplitude_damping_kraus(1e6).unwrap();
        assert!(map.operators()[0][(1, 1)].norm() < 1e-100);
        assert!((map.operators()[1][(0, 1)].re - 1.0).abs() < 1e-15);
        let out = apply_channel(&map, &d_initial()).unwrap();
        let ground = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(out.max_diff(&ground) < 1e-15);
    }

    #[test]
    fn rejects_negative_time_and_bad_states() {
        assert!(matches!(
            amplitude_damping_kraus(-0.1),
            Err(Error::NegativeTime(_))
        ));
        assert!(matches!(
            amplitude_damping_kraus(f64::NAN),
            Err(Error::NegativeTime(_))
        ));
        let map = amplitude_damping_kraus(1.0).unwrap();
        let not_unit = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            apply_channel(&map, &not_unit),
            Err(Error::InvalidDensityMatrix(_))
        ));
        let three = ComplexMatrix::identity(3).scale(c64(1.0 / 3.0, 0.0));
        assert!(matches!(
            apply_channel(&map, &three),
            Err(Error::DimensionMismatch { .. })
        ));
        let indefinite = ComplexMatrix::from_real(2, 2, &[1.5, 0.0, 0.0, -0.5]);
        assert!(matches!(
            apply_channel(&map, &indefinite),
            Err(Error::InvalidDensityMatrix(_))
        ));
    }

    #[test]
    fn completeness_is_tight() {
        for k in 0..200 {
            let gt = k as f64 * 0.05;
            assert!(amplitude_damping_kraus(gt).unwrap().completeness_defect() < 1e-14);
        }
    }

    #[test]
    fn lindblad_closed_form_decay() {
        let spec = ChannelSpec::amplitude_damping(1.0).unwrap();
        let h = ComplexMatrix::zeros(2, 2);
        let d0 = d_initial();
        let d = lindblad_propagate(&spec, &h, &d0, 1.0, DEFAULT_RK4_STEPS).unwrap();
        assert!((d[(1, 1)].re - 0.75 * (-1.0f64).exp()).abs() < 1e-12);
        assert!((d[(1, 1)].re - 0.27591).abs() < 1e-5);
        let same = lindblad_propagate(&spec, &h, &d0, 0.0, DEFAULT_RK4_STEPS).unwrap();
        assert_eq!(same, d0);
    }

    #[test]
    fn lindblad_matches_kraus_map() {
        let h = ComplexMatrix::zeros(2, 2);
        let d0 = d_initial();
        for rate in [1.0, 1.52e9] {
            let spec = ChannelSpec::amplitude_damping(rate).unwrap();
            for k in 1..=50 {
                let gt = 0.1 * k as f64;
                let ode = lindblad_propagate(&spec, &h, &d0, gt, DEFAULT_RK4_STEPS).unwrap();
                let kraus = apply_channel(&amplitude_damping_kraus(gt).unwrap(), &d0).unwrap();
                assert!(ode.max_diff(&kraus) < 1e-8, "gamma_t={gt}");
            }
        }
    }

    #[test]
    fn kraus_map_json_shape() {
        let map = amplitude_damping_kraus(0.0).unwrap();
        let value = serde_json::to_value(&map).unwrap();
        assert_eq!(value["time"], 0.0);
        assert_eq!(value["operators"].as_array().unwrap().len(), 2);
        let back: KrausMap = serde_json::from_value(value).unwrap();
        assert_eq!(back, map);
        let incomplete = serde_json::json!({
            "time": 0.0,
            "operators": [{"rows": 2, "cols": 2, "re": [1.0, 0.0, 0.0, 0.5], "im": [0.0, 0.0, 0.0, 0.0]}]
        });
        assert!(serde_json::from_value::<KrausMap>(incomplete).is_err());
    }
}
