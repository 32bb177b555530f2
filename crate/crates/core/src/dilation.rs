//! Sz.-Nagy 1-dilation: embeds a contraction `M` into the unitary
//! `[[M, D_{M^dagger}], [D_M, -M^dagger]]` on the doubled space, where
//! `D_M = sqrt(I - M^dagger M)`.

use serde::{Deserialize, Serialize};

use crate::channels::KrausMap;
use crate::error::{Error, Result};
use crate::linalg::{
    c64, hermitian_eig, spectral_norm, unitarity_defect, ComplexMatrix, DEFAULT_CLAMP_TOL,
};

/// Default slack on the largest singular value of a contraction.
pub const CONTRACTION_TOL: f64 = 1e-9;

/// Singular values below this contribute less than `1e-14` to `D_{M^dagger}`
/// and are left out of its correction sum.
const NEGLIGIBLE_SINGULAR_VALUE: f64 = 1e-7;

/// Unitary dilation of one Kraus operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilatedUnitary {
    pub source_index: usize,
    pub system_dim: usize,
    /// Damping time of the source map, when the operator came from one.
    pub gamma_t: Option<f64>,
    #[serde(flatten)]
    pub matrix: ComplexMatrix,
}

impl DilatedUnitary {
    /// Top-left `n x n` block, i.e. the source operator.
    pub fn system_block(&self) -> ComplexMatrix {
        self.matrix.block(0, 0, self.system_dim, self.system_dim)
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.matrix).expect("dilations are square")
    }
}

/// Dilates a single contraction.
pub fn dilate(m: &ComplexMatrix, tol: f64) -> Result<DilatedUnitary> {
    let n = m.require_square()?;
    let sigma = spectral_norm(m);
    if sigma > 1.0 + tol {
        return Err(Error::NotContraction {
            singular_value: sigma,
        });
    }
    let clamp = DEFAULT_CLAMP_TOL.max(3.0 * tol);
    let (defect, defect_adj) = defect_operators(m, clamp)?;
    let m_adj = m.adjoint();
    let minus_m_adj = m_adj.scale((-1.0).into());
    let matrix = ComplexMatrix::from_blocks(m, &defect_adj, &defect, &minus_m_adj);
    Ok(DilatedUnitary {
        source_index: 0,
        system_dim: n,
        gamma_t: None,
        matrix,
    })
}

/// `(D_M, D_{M^dagger})` from a single eigendecomposition of `I - M^dagger M`.
///
/// With `M^dagger M = sum s_k^2 v_k v_k^dagger` and `w_k = M v_k / s_k`,
/// `D_M = sum f_k v_k v_k^dagger` and `D_{M^dagger} = I - sum (1 - f_k) w_k w_k^dagger`
/// where `f_k = sqrt(1 - s_k^2)`. Sharing `f_k` between the two keeps
/// `M D_M = D_{M^dagger} M` at machine precision even when `s_k` is close to 1,
/// where two independent square roots would disagree at `O(sqrt(eps))`.
fn defect_operators(m: &ComplexMatrix, clamp: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = m.rows();
    let id = ComplexMatrix::identity(n);
    let gap = &id - &m.adjoint().matmul(m);
    let eig = hermitian_eig(&gap, clamp)?;
    let mut d_m = ComplexMatrix::zeros(n, n);
    let mut d_m_adj = id;
    for (&mu, v) in eig.values.iter().zip(&eig.vectors) {
        if mu < -clamp {
            return Err(Error::NotContraction {
                singular_value: (1.0 - mu).sqrt(),
            });
        }
        let f = mu.max(0.0).sqrt();
        d_m = &d_m + &v.outer().scale(c64(f, 0.0));
        let mv = m.apply(v);
        let s = mv.norm();
        if s > NEGLIGIBLE_SINGULAR_VALUE {
            let w = mv.scale(c64(1.0 / s, 0.0));
            d_m_adj = &d_m_adj - &w.outer().scale(c64(1.0 - f, 0.0));
        }
    }
    Ok((d_m.hermitian_part(), d_m_adj.hermitian_part()))
}

/// Dilates every operator of a Kraus map, preserving operator order.
pub fn dilate_channel(map: &KrausMap) -> Result<Vec<DilatedUnitary>> {
    map.operators()
        .iter()
        .enumerate()
        .map(|(i, op)| {
            let mut u = dilate(op, CONTRACTION_TOL)?;
            u.source_index = i;
            u.gamma_t = Some(map.time());
            Ok(u)
        })
        .collect()
}
