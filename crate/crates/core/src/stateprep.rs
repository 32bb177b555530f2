//! Density matrices as weighted ensembles of unit vectors, zero-padded to the
//! dilated dimension.

use serde::{Deserialize, Serialize};

use crate::channels::{validate_density, DENSITY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{c64, hermitian_eig, ComplexMatrix, ComplexVector};

/// Eigen-directions with weight at or below this are dropped.
pub const PRUNE_TOL: f64 = 1e-12;

/// Weighted unit vectors whose mixture is a density matrix. Vectors are kept
/// at the system dimension; [`VectorEnsemble::padded_vectors`] produces the
/// dilated-space copies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorEnsemble {
    pub weights: Vec<f64>,
    pub vectors: Vec<ComplexVector>,
}

impl VectorEnsemble {
    pub fn new(weights: Vec<f64>, vectors: Vec<ComplexVector>) -> Result<Self> {
        if weights.is_empty() || weights.len() != vectors.len() {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {} vectors",
                weights.len(),
                vectors.len()
            )));
        }
        let dim = vectors[0].dim();
        for v in &vectors {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.dim(),
                });
            }
            if (v.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::NotNormalized(v.norm()));
            }
        }
        if weights.iter().any(|&w| w.is_nan() || w < 0.0) {
            return Err(Error::InvalidParameter(
                "ensemble weights must be nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "ensemble weights sum to {total}"
            )));
        }
        Ok(Self { weights, vectors })
    }

    pub fn system_dim(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn padded_dim(&self) -> usize {
        2 * self.system_dim()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn padded_vectors(&self) -> Vec<ComplexVector> {
        let target = self.padded_dim();
        self.vectors
            .iter()
            .map(|v| pad(v, target).expect("padding to twice the dimension"))
            .collect()
    }

    /// `sum_j w_j v_j v_j^dagger`.
    pub fn density(&self) -> ComplexMatrix {
        let n = self.system_dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for (&w, v) in self.weights.iter().zip(&self.vectors) {
            out = &out + &v.outer().scale(c64(w, 0.0));
        }
        out
    }
}

/// Spectral decomposition of a density matrix, keeping eigenvalues above
/// [`PRUNE_TOL`] and renormalizing the kept weights.
pub fn decompose_density(d: &ComplexMatrix) -> Result<VectorEnsemble> {
    let n = d.require_square()?;
    validate_density(d, n, DENSITY_TOL)?;
    let eig = hermitian_eig(d, DENSITY_TOL)?;
    let (weights, vectors): (Vec<f64>, Vec<ComplexVector>) = eig
        .values
        .into_iter()
        .zip(eig.vectors)
        .filter(|(w, _)| *w > PRUNE_TOL)
        .unzip();
    let total: f64 = weights.iter().sum();
    let weights = weights.into_iter().map(|w| w / total).collect();
    VectorEnsemble::new(weights, vectors)
}

/// The two-vector ensemble `{(0, 1), (1, 1)/sqrt(2)}` with equal weights, whose
/// mixture is `(1/4) [[1, 1], [1, 3]]`.
pub fn paper_decomposition() -> VectorEnsemble {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    VectorEnsemble {
        weights: vec![0.5, 0.5],
        vectors: vec![
            ComplexVector::from_real(&[0.0, 1.0]),
            ComplexVector::from_real(&[h, h]),
        ],
    }
}

/// Appends zeros up to `target_dim`.
pub fn pad(v: &ComplexVector, target_dim: usize) -> Result<ComplexVector> {
    if target_dim < v.dim() {
        return Err(Error::ShrinkNotAllowed {
            dim: v.dim(),
            target: target_dim,
        });
    }
    let mut data = v.entries().to_vec();
    data.resize(target_dim, c64(0.0, 0.0));
    ComplexVector::new(data)
}
