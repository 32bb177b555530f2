//! Gate-level circuits, exact statevector simulation and seeded shot sampling.
//!
//! Basis ordering: index `= q0 + 2 q1 + 4 q2 + ...`, so basis index 1 is
//! `q0` excited with every other qubit in its ground state. Bitstrings are
//! printed most significant qubit first (`"q1q0"` for two qubits).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, unitarity_defect, ComplexMatrix, ComplexVector, C64};

/// Largest width accepted by [`circuit_unitary`].
pub const MAX_UNITARY_WIDTH: usize = 4;
/// Unitarity tolerance for `U4` gates.
pub const GATE_UNITARITY_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-10;

/// A gate of the native set. `Ry(q, theta)` is `[[cos(theta/2), -sin(theta/2)],
/// [sin(theta/2), cos(theta/2)]]` and `Rz(q, theta)` is
/// `diag(e^{-i theta/2}, e^{i theta/2})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GateRecord", into = "GateRecord")]
pub enum Gate {
    X(usize),
    Z(usize),
    H(usize),
    Ry(usize, f64),
    Rz(usize, f64),
    Cnot {
        control: usize,
        target: usize,
    },
    /// Arbitrary two-qubit unitary; its local basis index is
    /// `bit(qubits[0]) + 2 bit(qubits[1])`.
    U4 {
        qubits: [usize; 2],
        matrix: ComplexMatrix,
    },
}

impl Gate {
    pub fn u4(qubits: [usize; 2], matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != 4 || matrix.cols() != 4 {
            return Err(Error::InvalidGate(format!(
                "U4 needs a 4x4 matrix, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let defect = unitarity_defect(&matrix)?;
        if defect > GATE_UNITARITY_TOL {
            return Err(Error::NonUnitGate(defect));
        }
        Ok(Gate::U4 { qubits, matrix })
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::X(q) | Gate::Z(q) | Gate::H(q) | Gate::Ry(q, _) | Gate::Rz(q, _) => vec![*q],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::U4 { qubits, .. } => qubits.to_vec(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::X(_) => "X",
            Gate::Z(_) => "Z",
            Gate::H(_) => "H",
            Gate::Ry(..) => "RY",
            Gate::Rz(..) => "RZ",
            Gate::Cnot { .. } => "CNOT",
            Gate::U4 { .. } => "U4",
        }
    }

    fn validate(&self, width: usize) -> Result<()> {
        let qubits = self.qubits();
        for (i, &q) in qubits.iter().enumerate() {
            if q >= width {
                return Err(Error::InvalidGate(format!(
                    "{} acts on qubit {q} but the circuit has width {width}",
                    self.name()
                )));
            }
            if qubits[..i].contains(&q) {
                return Err(Error::InvalidGate(format!(
                    "{} repeats qubit {q}",
                    self.name()
                )));
            }
        }
        match self {
            Gate::Ry(_, theta) | Gate::Rz(_, theta) if !theta.is_finite() => Err(
                Error::InvalidGate(format!("{} angle is not finite", self.name())),
            ),
            _ => Ok(()),
        }
    }

    /// 2x2 matrix of a single-qubit gate.
    pub fn single_qubit_matrix(&self) -> Option<ComplexMatrix> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match *self {
            Gate::X(_) => Some(ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])),
            Gate::Z(_) => Some(ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])),
            Gate::H(_) => Some(ComplexMatrix::from_real(2, 2, &[h, h, h, -h])),
            Gate::Ry(_, theta) => Some(ry_matrix(theta)),
            Gate::Rz(_, theta) => Some(rz_matrix(theta)),
            _ => None,
        }
    }
}

pub fn ry_matrix(theta: f64) -> ComplexMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    ComplexMatrix::from_real(2, 2, &[c, -s, s, c])
}

pub fn rz_matrix(theta: f64) -> ComplexMatrix {
    let half = theta / 2.0;
    ComplexMatrix::from_diag(&[C64::from_polar(1.0, -half), C64::from_polar(1.0, half)])
}

/// RY angle whose matrix carries `sqrt(e^{-gamma_t})` on its diagonal, i.e.
/// twice `acos(sqrt(e^{-gamma_t}))`.
pub fn decay_rotation_angle(gamma_t: f64) -> f64 {
    2.0 * (-gamma_t).exp().sqrt().acos()
}

/// JSON form of a gate: `{"name": ..., "qubits": [...], "params": [...]}`.
/// `U4` parameters are the 16 real parts followed by the 16 imaginary parts,
/// row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateRecord {
    pub name: String,
    pub qubits: Vec<usize>,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl TryFrom<GateRecord> for Gate {
    type Error = Error;

    fn try_from(rec: GateRecord) -> Result<Self> {
        let arity = |n: usize, p: usize| -> Result<()> {
            if rec.qubits.len() != n || rec.params.len() != p {
                Err(Error::InvalidGate(format!(
                    "{} expects {n} qubit(s) and {p} parameter(s), got {} and {}",
                    rec.name,
                    rec.qubits.len(),
                    rec.params.len()
                )))
            } else {
                Ok(())
            }
        };
        match rec.name.to_ascii_uppercase().as_str() {
            "X" => arity(1, 0).map(|_| Gate::X(rec.qubits[0])),
            "Z" => arity(1, 0).map(|_| Gate::Z(rec.qubits[0])),
            "H" => arity(1, 0).map(|_| Gate::H(rec.qubits[0])),
            "RY" => arity(1, 1).map(|_| Gate::Ry(rec.qubits[0], rec.params[0])),
            "RZ" => arity(1, 1).map(|_| Gate::Rz(rec.qubits[0], rec.params[0])),
            "CNOT" | "CX" => arity(2, 0).map(|_| Gate::Cnot {
                control: rec.qubits[0],
                target: rec.qubits[1],
            }),
            "U4" => {
                arity(2, 32)?;
                let data = (0..16)
                    .map(|k| c64(rec.params[k], rec.params[16 + k]))
                    .collect();
                Gate::u4(
                    [rec.qubits[0], rec.qubits[1]],
                    ComplexMatrix::new(4, 4, data)?,
                )
            }
            other => Err(Error::InvalidGate(format!("unknown gate {other:?}"))),
        }
    }
}

impl From<Gate> for GateRecord {
    fn from(g: Gate) -> Self {
        let name = g.name().to_string();
        let qubits = g.qubits();
        let params = match g {
            Gate::Ry(_, theta) | Gate::Rz(_, theta) => vec![theta],
            Gate::U4 { matrix, .. } => {
                let e = matrix.entries();
                e.iter()
                    .map(|z| z.re)
                    .chain(e.iter().map(|z| z.im))
                    .collect()
            }
            _ => Vec::new(),
        };
        GateRecord {
            name,
            qubits,
            params,
        }
    }
}

/// Ordered gate list over `width` qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitRecord", into = "CircuitRecord")]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CircuitRecord {
    pub width: usize,
    pub gates: Vec<Gate>,
}

impl TryFrom<CircuitRecord> for Circuit {
    type Error = Error;

    fn try_from(rec: CircuitRecord) -> Result<Self> {
        let mut c = Circuit::new(rec.width)?;
        for g in rec.gates {
            c.push(g)?;
        }
        Ok(c)
    }
}

impl From<Circuit> for CircuitRecord {
    fn from(c: Circuit) -> Self {
        CircuitRecord {
            width: c.width,
            gates: c.gates,
        }
    }
}

impl Circuit {
    pub fn new(width: usize) -> Result<Self> {
        if width == 0 || width > 30 {
            return Err(Error::InvalidParameter(format!(
                "unsupported circuit width {width}"
            )));
        }
        Ok(Self {
            width,
            gates: Vec::new(),
        })
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.width)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<&mut Self> {
        for g in gates {
            self.push(g)?;
        }
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn dim(&self) -> usize {
        1 << self.width
    }

    pub fn cnot_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::Cnot { .. }))
            .count()
    }

    /// `|0...0>` for this width.
    pub fn ground_state(&self) -> ComplexVector {
        ComplexVector::basis(self.dim(), 0)
    }
}

fn apply_single(state: &mut [C64], q: usize, m: &ComplexMatrix) {
    let mask = 1usize << q;
    let (m00, m01, m10, m11) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    for i in 0..state.len() {
        if i & mask == 0 {
            let j = i | mask;
            let (a, b) = (state[i], state[j]);
            state[i] = m00 * a + m01 * b;
            state[j] = m10 * a + m11 * b;
        }
    }
}

fn apply_gate(state: &mut [C64], gate: &Gate) {
    match gate {
        Gate::Cnot { control, target } => {
            let (cm, tm) = (1usize << control, 1usize << target);
            for i in 0..state.len() {
                if i & cm != 0 && i & tm == 0 {
                    state.swap(i, i | tm);
                }
            }
        }
        Gate::U4 { qubits, matrix } => {
            let (m0, m1) = (1usize << qubits[0], 1usize << qubits[1]);
            for base in 0..state.len() {
                if base & (m0 | m1) != 0 {
                    continue;
                }
                let idx = [base, base | m0, base | m1, base | m0 | m1];
                let amps = idx.map(|i| state[i]);
                for (r, &i) in idx.iter().enumerate() {
                    state[i] = (0..4).map(|c| matrix[(r, c)] * amps[c]).sum();
                }
            }
        }
        single => {
            let q = single.qubits()[0];
            let m = single.single_qubit_matrix().expect("single-qubit gate");
            apply_single(state, q, &m);
        }
    }
}

/// Exact statevector after running `c` on `input`.
pub fn simulate(c: &Circuit, input: &ComplexVector) -> Result<ComplexVector> {
    if input.dim() != c.dim() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            got: input.dim(),
        });
    }
    let norm = input.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    let mut state = input.entries().to_vec();
    for g in &c.gates {
        apply_gate(&mut state, g);
    }
    ComplexVector::new(state)
}

/// Full unitary of a circuit of width at most [`MAX_UNITARY_WIDTH`].
pub fn circuit_unitary(c: &Circuit) -> Result<ComplexMatrix> {
    if c.width > MAX_UNITARY_WIDTH {
        return Err(Error::TooWide {
            width: c.width,
            max: MAX_UNITARY_WIDTH,
        });
    }
    let columns = (0..c.dim())
        .map(|j| simulate(c, &ComplexVector::basis(c.dim(), j)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexMatrix::from_columns(&columns))
}

/// Measurement counts from repeated runs of one circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ShotRecord", into = "ShotRecord")]
pub struct ShotResult {
    pub width: usize,
    pub counts: BTreeMap<usize, u64>,
    pub shots: u64,
    pub seed: u64,
}

impl ShotResult {
    pub fn count(&self, index: usize) -> u64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    pub fn frequency(&self, index: usize) -> f64 {
        self.count(index) as f64 / self.shots as f64
    }
}

/// JSON form: counts keyed by bitstring, most significant qubit first.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShotRecord {
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
    pub seed: u64,
}

impl TryFrom<ShotRecord> for ShotResult {
    type Error = Error;

    fn try_from(rec: ShotRecord) -> Result<Self> {
        let mut width = 0;
        let mut counts = BTreeMap::new();
        for (bits, n) in rec.counts {
            let index = usize::from_str_radix(&bits, 2)
                .map_err(|_| Error::InvalidParameter(format!("bad bitstring {bits:?}")))?;
            width = width.max(bits.len());
            counts.insert(index, n);
        }
        let total: u64 = counts.values().sum();
        if total != rec.shots {
            return Err(Error::InvalidParameter(format!(
                "counts sum to {total} but shots is {}",
                rec.shots
            )));
        }
        Ok(ShotResult {
            width,
            counts,
            shots: rec.shots,
            seed: rec.seed,
        })
    }
}

impl From<ShotResult> for ShotRecord {
    fn from(r: ShotResult) -> Self {
        let counts = r
            .counts
            .iter()
            .map(|(&i, &n)| (format!("{:0width$b}", i, width = r.width), n))
            .collect();
        ShotRecord {
            counts,
            shots: r.shots,
            seed: r.seed,
        }
    }
}

/// Draws `shots` computational-basis outcomes from the output distribution.
/// Deterministic for a fixed seed.
pub fn sample(c: &Circuit, input: &ComplexVector, shots: u64, seed: u64) -> Result<ShotResult> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let out = simulate(c, input)?;
    Ok(sample_state(&out, c.width(), shots, seed))
}

/// Samples basis outcomes from `|amplitude|^2` of `state`.
pub fn sample_state(state: &ComplexVector, width: usize, shots: u64, seed: u64) -> ShotResult {
    let probs = state.probabilities();
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cumulative.push(acc);
    }
    let total = acc;
    let last_nonzero = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = vec![0u64; probs.len()];
    for _ in 0..shots {
        let u: f64 = rng.gen::<f64>() * total;
        let k = cumulative.partition_point(|&c| c <= u).min(last_nonzero);
        tally[k] += 1;
    }
    let counts = tally
        .into_iter()
        .enumerate()
        .filter(|&(_, n)| n > 0)
        .collect();
    ShotResult {
        width,
        counts,
        shots,
        seed,
    }
}

/// Mixes a base seed with task indices (splitmix64), so parallel tasks get
/// independent streams regardless of execution order.
pub fn derive_seed(base: u64, indices: &[u64]) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    indices.iter().fold(splitmix(base), |acc, &i| {
        splitmix(acc ^ splitmix(i.wrapping_add(0x5851_F42D)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn two_qubit(gates: Vec<Gate>) -> Circuit {
        let mut c = Circuit::new(2).unwrap();
        c.extend(gates).unwrap();
        c
    }

    #[test]
    fn hadamard_on_single_qubit() {
        let mut c = Circuit::new(1).unwrap();
        c.push(Gate::H(0)).unwrap();
        let out = simulate(&c, &c.ground_state()).unwrap();
        assert!((out[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((out[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn x_on_q0_is_basis_index_one() {
        let c = two_qubit(vec![Gate::X(0)]);
        let out = simulate(&c, &c.ground_state()).unwrap();
        assert_eq!(out.probabilities(), vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn cnot_after_x_reaches_both_excited() {
        let c = two_qubit(vec![
            Gate::X(0),
            Gate::Cnot {
                control: 0,
                target: 1,
            },
        ]);
        let out = simulate(&c, &c.ground_state()).unwrap();
        assert_eq!(out.probabilities(), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn unitary_examples() {
        let empty = two_qubit(vec![]);
        assert_eq!(circuit_unitary(&empty).unwrap(), ComplexMatrix::identity(4));
        let cx = two_qubit(vec![Gate::Cnot {
            control: 0,
            target: 1,
        }]);
        #[rustfmt::skip]
        let expected = ComplexMatrix::from_real(4, 4, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
        ]);
        assert_eq!(circuit_unitary(&cx).unwrap(), expected);
        let xx = two_qubit(vec![Gate::X(1), Gate::X(1)]);
        assert_eq!(circuit_unitary(&xx).unwrap(), ComplexMatrix::identity(4));
        let wide = Circuit::new(5).unwrap();
        assert!(matches!(circuit_unitary(&wide), Err(Error::TooWide { .. })));
    }

    #[test]
    fn decay_rotation_reproduces_survival_amplitude() {
        for gt in [0.0, 0.3, std::f64::consts::LN_2, 2.0, 7.5] {
            let m = ry_matrix(decay_rotation_angle(gt));
            assert!((m[(0, 0)].re - (-gt).exp().sqrt()).abs() < 1e-15);
            assert!((m[(1, 0)].re - (1.0 - (-gt).exp()).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn u4_gate_matches_local_convention() {
        // CNOT with control on the first listed qubit.
        #[rustfmt::skip]
        let cx = ComplexMatrix::from_real(4, 4, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
        ]);
        let via_u4 = two_qubit(vec![Gate::u4([1, 0], cx.clone()).unwrap()]);
        let native = two_qubit(vec![Gate::Cnot {
            control: 1,
            target: 0,
        }]);
        assert_eq!(
            circuit_unitary(&via_u4).unwrap(),
            circuit_unitary(&native).unwrap()
        );
        let bad = ComplexMatrix::identity(4).scale(c64(2.0, 0.0));
        assert!(matches!(Gate::u4([0, 1], bad), Err(Error::NonUnitGate(_))));
    }

    #[test]
    fn validation_errors() {
        let mut c = Circuit::new(2).unwrap();
        assert!(c.push(Gate::X(2)).is_err());
        assert!(c
            .push(Gate::Cnot {
                control: 1,
                target: 1
            })
            .is_err());
        assert!(c.push(Gate::Ry(0, f64::NAN)).is_err());
        let short = ComplexVector::basis(2, 0);
        assert!(matches!(
            simulate(&c, &short),
            Err(Error::DimensionMismatch { .. })
        ));
        let unnormalized = ComplexVector::from_real(&[1.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            simulate(&c, &unnormalized),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn deterministic_outcome_sampling() {
        let c = two_qubit(vec![]);
        let r = sample(&c, &c.ground_state(), 1000, 3).unwrap();
        assert_eq!(r.counts, BTreeMap::from([(0, 1000)]));
    }

    #[test]
    fn balanced_sampling_within_binomial_bound() {
        let c = two_qubit(vec![Gate::H(0)]);
        let shots = 100_000;
        let r = sample(&c, &c.ground_state(), shots, 11).unwrap();
        let bound = 3.0 * (0.25 / shots as f64).sqrt();
        assert!((r.frequency(0) - 0.5).abs() < bound);
        assert_eq!(r.count(0) + r.count(1), shots);
    }

    #[test]
    fn same_seed_same_counts() {
        let c = two_qubit(vec![Gate::H(0), Gate::Ry(1, 0.7)]);
        let a = sample(&c, &c.ground_state(), 5000, 99).unwrap();
        let b = sample(&c, &c.ground_state(), 5000, 99).unwrap();
        assert_eq!(a, b);
        let other = sample(&c, &c.ground_state(), 5000, 100).unwrap();
        assert_ne!(a.counts, other.counts);
    }

    #[test]
    fn json_formats() {
        let c = two_qubit(vec![
            Gate::H(0),
            Gate::Cnot {
                control: 0,
                target: 1,
            },
            Gate::Ry(1, 0.5),
        ]);
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(
            v,
            serde_json::json!({
                "width": 2,
                "gates": [
                    {"name": "H", "qubits": [0], "params": []},
                    {"name": "CNOT", "qubits": [0, 1], "params": []},
                    {"name": "RY", "qubits": [1], "params": [0.5]},
                ]
            })
        );
        let back: Circuit = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
        let bad = serde_json::json!({"width": 1, "gates": [{"name": "CNOT", "qubits": [0, 1]}]});
        assert!(serde_json::from_value::<Circuit>(bad).is_err());

        let r = sample(&c, &c.ground_state(), 64, 5).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert!(v["counts"]
            .as_object()
            .unwrap()
            .keys()
            .all(|k| k.len() == 2));
        assert_eq!(serde_json::from_value::<ShotResult>(v).unwrap(), r);
    }

    #[test]
    fn derived_seeds_differ_by_index() {
        let a = derive_seed(7, &[0, 1]);
        let b = derive_seed(7, &[1, 0]);
        let c = derive_seed(8, &[0, 1]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(7, &[0, 1]));
    }

    fn arb_gate(width: usize) -> impl Strategy<Value = Gate> {
        let q = 0..width;
        prop_oneof![
            q.clone().prop_map(Gate::X),
            q.clone().prop_map(Gate::Z),
            q.clone().prop_map(Gate::H),
            (q.clone(), -6.3f64..6.3).prop_map(|(q, t)| Gate::Ry(q, t)),
            (q.clone(), -6.3f64..6.3).prop_map(|(q, t)| Gate::Rz(q, t)),
            (q.clone(), 1..width).prop_map(move |(c, d)| Gate::Cnot {
                control: c,
                target: (c + d) % width
            }),
        ]
    }

    proptest! {
        #[test]
        fn norm_is_preserved(gates in proptest::collection::vec(arb_gate(3), 0..30), start in 0usize..8) {
            let mut c = Circuit::new(3).unwrap();
            c.extend(gates).unwrap();
            let out = simulate(&c, &ComplexVector::basis(8, start)).unwrap();
            prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn simulate_agrees_with_unitary(gates in proptest::collection::vec(arb_gate(3), 0..30), start in 0usize..8) {
            let mut c = Circuit::new(3).unwrap();
            c.extend(gates).unwrap();
            let input = ComplexVector::basis(8, start);
            let out = simulate(&c, &input).unwrap();
            let via_u = circuit_unitary(&c).unwrap().apply(&input);
            for k in 0..8 {
                prop_assert!((out[k] - via_u[k]).norm() < 1e-10);
            }
        }
    }
}
