//! Two-qubit unitary synthesis into `{RZ, RY, CNOT}` through the Cartan (KAK)
//! decomposition `U = e^{i phi} K1 exp(i(a XX + b YY + c ZZ)) K2`.
//!
//! Matrices here use the crate-wide basis order `index = q0 + 2 q1`, which makes
//! a local operator `A ⊗ B` with `A` on `q1` and `B` on `q0`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::circuit::{circuit_unitary, Circuit, Gate};
use crate::dilation::DilatedUnitary;
use crate::error::{Error, Result};
use crate::linalg::{
    c64, determinant, hermitian_eig, unitarity_defect, ComplexMatrix, ComplexVector, C64,
};

/// Input unitarity tolerance (Frobenius defect).
pub const UNITARY_TOL: f64 = 1e-10;
/// Minimum acceptable `|tr(U^dagger V)| / 4`.
pub const MIN_FIDELITY: f64 = 1.0 - 1e-9;
/// Weyl coordinates within this of a special value are snapped to it.
const COORD_TOL: f64 = 1e-12;
/// Rotation angles below this (after wrapping) are dropped.
const ANGLE_TOL: f64 = 1e-12;
/// Amplitudes below this are treated as exact zeros during state preparation.
const AMP_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub circuit: Circuit,
    pub cnot_count: usize,
    pub fidelity: f64,
    pub global_phase: f64,
    /// Canonical `(a, b, c)` with `pi/4 >= a >= b >= |c|`.
    pub weyl_coordinates: [f64; 3],
}

fn pauli(k: usize) -> ComplexMatrix {
    let (o, l, i) = (c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 1.0));
    match k {
        0 => ComplexMatrix::from_rows(2, 2, vec![o, l, l, o]),
        1 => ComplexMatrix::from_rows(2, 2, vec![o, -i, i, o]),
        2 => ComplexMatrix::from_rows(2, 2, vec![l, o, o, -l]),
        _ => ComplexMatrix::identity(2),
    }
}

fn id2() -> ComplexMatrix {
    ComplexMatrix::identity(2)
}

/// `exp(i theta P) = cos(theta) I + i sin(theta) P` for an involutory `P`.
fn exp_involution(p: &ComplexMatrix, theta: f64) -> ComplexMatrix {
    let n = p.rows();
    &ComplexMatrix::identity(n).scale(c64(theta.cos(), 0.0)) + &p.scale(c64(0.0, theta.sin()))
}

/// `exp(i (a XX + b YY + c ZZ))`.
pub fn canonical_gate(coords: [f64; 3]) -> ComplexMatrix {
    (0..3).fold(ComplexMatrix::identity(4), |acc, k| {
        let pp = pauli(k).kron(&pauli(k));
        acc.matmul(&exp_involution(&pp, coords[k]))
    })
}

/// Columns of the magic (Bell-type) basis; it maps `SU(2) ⊗ SU(2)` onto
/// `SO(4)` and diagonalizes `XX`, `YY`, `ZZ`.
fn magic_basis() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (o, r, i) = (c64(0.0, 0.0), c64(h, 0.0), c64(0.0, h));
    #[rustfmt::skip]
    let m = ComplexMatrix::from_rows(4, 4, vec![
        r, o, o, i,
        o, i, r, o,
        o, i, -r, o,
        r, o, o, -i,
    ]);
    m
}

/// Signs of `XX`, `YY`, `ZZ` on the magic basis columns.
const MAGIC_SIGNS: [[f64; 4]; 3] = [
    [1.0, 1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0, 1.0],
    [1.0, -1.0, -1.0, 1.0],
];

/// `U = phase * left * canonical_gate(coords) * right`, with `left` and
/// `right` local.
#[derive(Clone, Debug)]
struct Cartan {
    left: ComplexMatrix,
    coords: [f64; 3],
    right: ComplexMatrix,
}

fn cartan_decompose(u: &ComplexMatrix) -> Result<Cartan> {
    let det = determinant(u)?;
    let u_su = u.scale(det.powf(-0.25));
    let b = magic_basis();
    let b_adj = b.adjoint();
    let up = b_adj.matmul(&u_su).matmul(&b);
    let m2 = up.transpose().matmul(&up);

    // Real and imaginary parts of the symmetric unitary m2 commute; a generic
    // real combination of them shares their orthogonal eigenbasis.
    let re = ComplexMatrix::from_rows(4, 4, m2.entries().iter().map(|z| c64(z.re, 0.0)).collect());
    let im = ComplexMatrix::from_rows(4, 4, m2.entries().iter().map(|z| c64(z.im, 0.0)).collect());
    let mut best: Option<(f64, ComplexMatrix)> = None;
    for attempt in 0..12 {
        let angle = 0.4142 + 1.1 * attempt as f64;
        let mix = &re.scale(c64(angle.cos(), 0.0)) + &im.scale(c64(angle.sin(), 0.0));
        let eig = hermitian_eig(&mix, 1e-9)?;
        let cols: Vec<ComplexVector> = eig
            .vectors
            .iter()
            .map(|v| {
                ComplexVector::from_real(&v.entries().iter().map(|z| z.re).collect::<Vec<_>>())
            })
            .collect();
        let p = ComplexMatrix::from_columns(&cols);
        let d = p.transpose().matmul(&m2).matmul(&p);
        let off = (0..4)
            .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| d[(i, j)].norm())
            .fold(0.0, f64::max);
        if best.as_ref().is_none_or(|(o, _)| off < *o) {
            best = Some((off, p));
        }
        if off < 1e-13 {
            break;
        }
    }
    let (_, mut p) = best.expect("at least one attempt");
    if determinant(&p)?.re < 0.0 {
        for i in 0..4 {
            p[(i, 0)] = -p[(i, 0)];
        }
    }
    let d = p.transpose().matmul(&m2).matmul(&p);
    let mut theta: Vec<f64> = (0..4).map(|k| d[(k, k)].arg() / 2.0).collect();
    if theta.iter().sum::<f64>().cos() < 0.0 {
        theta[0] += PI;
    }
    let delta_inv = ComplexMatrix::from_diag(
        &theta
            .iter()
            .map(|&t| C64::from_polar(1.0, -t))
            .collect::<Vec<_>>(),
    );
    let o1 = up.matmul(&p).matmul(&delta_inv);
    let k1 = b.matmul(&o1).matmul(&b_adj);
    let k2 = b.matmul(&p.transpose()).matmul(&b_adj);
    let mut coords = [0.0; 3];
    for (j, signs) in MAGIC_SIGNS.iter().enumerate() {
        coords[j] = signs.iter().zip(&theta).map(|(s, t)| s * t).sum::<f64>() / 4.0;
    }
    Ok(Cartan {
        left: k1,
        coords,
        right: k2,
    })
}

impl Cartan {
    /// `x_j -> x_j - k pi/2`, absorbing `(i P P)^k` into `right`.
    fn shift(&mut self, j: usize, k: i64) {
        if k == 0 {
            return;
        }
        let pp = pauli(j).kron(&pauli(j));
        let phase = match k.rem_euclid(4) {
            0 => c64(1.0, 0.0),
            1 => c64(0.0, 1.0),
            2 => c64(-1.0, 0.0),
            _ => c64(0.0, -1.0),
        };
        let factor = if k.rem_euclid(2) == 1 {
            pp.scale(phase)
        } else {
            ComplexMatrix::identity(4).scale(phase)
        };
        self.coords[j] -= k as f64 * FRAC_PI_2;
        self.right = factor.matmul(&self.right);
    }

    /// Exchanges two coordinates through a local Clifford conjugation.
    fn swap(&mut self, i: usize, j: usize) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let single = match (i.min(j), i.max(j)) {
            (0, 1) => ComplexMatrix::from_diag(&[c64(1.0, 0.0), c64(0.0, 1.0)]),
            (1, 2) => ComplexMatrix::from_rows(
                2,
                2,
                vec![c64(h, 0.0), c64(0.0, -h), c64(0.0, -h), c64(h, 0.0)],
            ),
            (0, 2) => ComplexMatrix::from_real(2, 2, &[h, h, h, -h]),
            _ => unreachable!("coordinate index out of range"),
        };
        let v = single.kron(&single);
        self.left = self.left.matmul(&v.adjoint());
        self.right = v.matmul(&self.right);
        self.coords.swap(i, j);
    }

    /// Negates two coordinates through conjugation by a Pauli on `q1`.
    fn flip(&mut self, i: usize, j: usize) {
        let k = 3 - i - j; // the Pauli that commutes with the untouched term
        let v = pauli(k).kron(&id2());
        self.left = self.left.matmul(&v);
        self.right = v.matmul(&self.right);
        self.coords[i] = -self.coords[i];
        self.coords[j] = -self.coords[j];
    }

    /// Moves the coordinates into `pi/4 >= a >= b >= |c|`.
    fn canonicalize(&mut self) {
        for j in 0..3 {
            let k = (self.coords[j] / FRAC_PI_2).round() as i64;
            self.shift(j, k);
        }
        for (i, j) in [(0, 1), (1, 2), (0, 1)] {
            if self.coords[i].abs() < self.coords[j].abs() {
                self.swap(i, j);
            }
        }
        if self.coords[0] < 0.0 {
            if self.coords[1] < 0.0 {
                self.flip(0, 1);
            } else {
                self.flip(0, 2);
            }
        }
        if self.coords[1] < 0.0 {
            self.flip(1, 2);
        }
    }
}

/// A step of a synthesized circuit, in time order.
enum Step {
    Local(ComplexMatrix),
    /// CNOT with control `q1`, target `q0`.
    Cx10,
    /// CNOT with control `q0`, target `q1`.
    Cx01,
}

fn templated_steps(mut k: Cartan) -> Vec<Step> {
    let [a, b, c] = k.coords;
    let zero = |x: f64| x.abs() < COORD_TOL;
    if zero(a) {
        return vec![Step::Local(k.left.matmul(&k.right))];
    }
    if zero(b) && zero(c) && (a - FRAC_PI_4).abs() < COORD_TOL {
        // exp(i pi/4 XX) = (H ⊗ I) e^{-i pi/4} (e^{i pi/4 Z} ⊗ e^{i pi/4 X}) CX10 (H ⊗ I)
        let hd = {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            ComplexMatrix::from_real(2, 2, &[s, s, s, -s]).kron(&id2())
        };
        let mid = exp_involution(&pauli(2), FRAC_PI_4).kron(&exp_involution(&pauli(0), FRAC_PI_4));
        return vec![
            Step::Local(hd.matmul(&k.right)),
            Step::Cx10,
            Step::Local(k.left.matmul(&hd).matmul(&mid)),
        ];
    }
    if zero(c) {
        // exp(i(a XX + c ZZ)) = CX10 (e^{i a X} ⊗ e^{i c Z}) CX10
        k.swap(1, 2);
        let [a, _, c] = k.coords;
        let mid = exp_involution(&pauli(0), a).kron(&exp_involution(&pauli(2), c));
        return vec![
            Step::Local(k.right),
            Step::Cx10,
            Step::Local(mid),
            Step::Cx10,
            Step::Local(k.left),
        ];
    }
    // Three-CNOT circuit for a general canonical gate.
    let rz = crate::circuit::rz_matrix;
    let ry = crate::circuit::ry_matrix;
    let t1 = FRAC_PI_2 - 2.0 * c;
    let t2 = 2.0 * a - FRAC_PI_2;
    let t3 = FRAC_PI_2 - 2.0 * b;
    vec![
        Step::Local(id2().kron(&rz(-FRAC_PI_2)).matmul(&k.right)),
        Step::Cx01,
        Step::Local(rz(t1).kron(&ry(t2))),
        Step::Cx10,
        Step::Local(id2().kron(&ry(t3))),
        Step::Cx01,
        Step::Local(k.left.matmul(&rz(FRAC_PI_2).kron(&id2()))),
    ]
}

/// Splits a local 4x4 operator into `(A, B)` with `m ≈ A ⊗ B` (A on q1).
fn kron_factor(m: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let blocks: Vec<ComplexMatrix> = (0..4)
        .map(|k| m.block(2 * (k / 2), 2 * (k % 2), 2, 2))
        .collect();
    let pivot = blocks
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.frobenius_norm().total_cmp(&y.1.frobenius_norm()))
        .map(|(k, _)| k)
        .expect("four blocks");
    let norm = blocks[pivot].frobenius_norm() / std::f64::consts::SQRT_2;
    let b = blocks[pivot].scale(c64(1.0 / norm, 0.0));
    let b_adj = b.adjoint();
    let a = ComplexMatrix::from_rows(
        2,
        2,
        blocks
            .iter()
            .map(|blk| b_adj.matmul(blk).trace() / 2.0)
            .collect(),
    );
    (a, b)
}

fn wrap_angle(theta: f64) -> f64 {
    theta - 2.0 * PI * (theta / (2.0 * PI)).round()
}

/// `(alpha, beta, gamma)` with `v ∝ Rz(alpha) Ry(beta) Rz(gamma)`.
pub fn zyz_angles(v: &ComplexMatrix) -> (f64, f64, f64) {
    let det = v[(0, 0)] * v[(1, 1)] - v[(0, 1)] * v[(1, 0)];
    let w = v.scale(det.sqrt().inv());
    let (w00, w10) = (w[(0, 0)], w[(1, 0)]);
    let beta = 2.0 * w10.norm().atan2(w00.norm());
    let sum = if w00.norm() > AMP_TOL {
        -2.0 * w00.arg()
    } else {
        0.0
    };
    let diff = if w10.norm() > AMP_TOL {
        2.0 * w10.arg()
    } else {
        0.0
    };
    ((sum + diff) / 2.0, beta, (sum - diff) / 2.0)
}

/// RZ·RY·RZ gates (time order) realizing `v` on `qubit` up to phase; trivial
/// rotations are omitted.
fn single_qubit_gates(v: &ComplexMatrix, qubit: usize) -> Vec<Gate> {
    let (alpha, beta, gamma) = zyz_angles(v);
    let beta = wrap_angle(beta);
    let mut gates = Vec::new();
    let mut push = |g: Gate, theta: f64| {
        if theta.abs() > ANGLE_TOL {
            gates.push(g);
        }
    };
    if beta.abs() <= ANGLE_TOL {
        let t = wrap_angle(alpha + gamma);
        push(Gate::Rz(qubit, t), t);
    } else {
        let (a, g) = (wrap_angle(alpha), wrap_angle(gamma));
        push(Gate::Rz(qubit, g), g);
        push(Gate::Ry(qubit, beta), beta);
        push(Gate::Rz(qubit, a), a);
    }
    gates
}

/// Decomposes a 4x4 unitary into at most three CNOTs and RZ/RY layers.
pub fn synthesize_2q(u: &ComplexMatrix) -> Result<SynthesisReport> {
    if u.rows() != 4 || u.cols() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: u.rows(),
        });
    }
    let defect = unitarity_defect(u)?;
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let mut cartan = cartan_decompose(u)?;
    cartan.canonicalize();
    let weyl_coordinates = cartan.coords;

    let mut circuit = Circuit::new(2)?;
    for step in templated_steps(cartan) {
        match step {
            Step::Local(m) => {
                let (on_q1, on_q0) = kron_factor(&m);
                circuit.extend(single_qubit_gates(&on_q0, 0))?;
                circuit.extend(single_qubit_gates(&on_q1, 1))?;
            }
            Step::Cx10 => {
                circuit.push(Gate::Cnot {
                    control: 1,
                    target: 0,
                })?;
            }
            Step::Cx01 => {
                circuit.push(Gate::Cnot {
                    control: 0,
                    target: 1,
                })?;
            }
        }
    }

    let realized = circuit_unitary(&circuit)?;
    let overlap = u.adjoint().matmul(&realized).trace();
    let fidelity = (overlap.norm() / 4.0).min(1.0);
    if fidelity < MIN_FIDELITY {
        return Err(Error::SynthesisFailed(fidelity));
    }
    Ok(SynthesisReport {
        cnot_count: circuit.cnot_count(),
        circuit,
        fidelity,
        global_phase: overlap.arg(),
        weyl_coordinates,
    })
}

/// Gates on `q0` taking `|0>` to `(c0, c1)` up to global phase.
fn prepare_qubit(c0: C64, c1: C64) -> Vec<Gate> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    if c1.norm() < AMP_TOL {
        return Vec::new();
    }
    if c0.norm() < AMP_TOL {
        return vec![Gate::X(0)];
    }
    if (c0.norm() - h).abs() < AMP_TOL && (c1 / c0 - c64(1.0, 0.0)).norm() < AMP_TOL {
        return vec![Gate::H(0)];
    }
    let mut gates = vec![Gate::Ry(0, 2.0 * c1.norm().atan2(c0.norm()))];
    let phase = wrap_angle(c1.arg() - c0.arg());
    if phase.abs() > ANGLE_TOL {
        gates.push(Gate::Rz(0, phase));
    }
    gates
}

/// Circuit that prepares the padded system vector `v` from `|00>` and then
/// applies the dilated unitary, so its output equals `U v` up to global phase.
pub fn prep_and_apply(u: &DilatedUnitary, v: &ComplexVector) -> Result<Circuit> {
    if u.system_dim != 2 || u.matrix.rows() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: u.matrix.rows(),
        });
    }
    if v.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: v.dim(),
        });
    }
    if v[2].norm() > AMP_TOL || v[3].norm() > AMP_TOL {
        return Err(Error::NotPadded);
    }
    if (v.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(v.norm()));
    }
    let mut circuit = Circuit::new(2)?;
    circuit.extend(prepare_qubit(v[0], v[1]))?;
    let report = synthesize_2q(&u.matrix)?;
    circuit.extend(report.circuit.gates().iter().cloned())?;
    Ok(circuit)
}
