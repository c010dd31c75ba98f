//! Single-scan process tomography.
//!
//! Every system basis operator `rho_j = |a><b|` is encoded in the `(a, b)`
//! block of a Bell-type state of ancilla (A) and system (S). The channel acts
//! on S, the full A (x) S state is read out by ancilla-assisted state
//! tomography, and the blocks give `lambda_jk`, the coefficients of
//! `eps(rho_j)` in the `rho_k` basis. Solving `beta chi = lambda` gives the
//! process matrix over the fixed operators `I, X, -iY, Z`.
//!
//! States handled here are ordered ancilla-major: the `n` ancilla qubits come
//! first, then the `n` system qubits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::aaqst::{
    build_constraint_matrix, reconstruct_state, simulate_readout, ConstraintMatrix,
};
use crate::error::{Error, Result};
use crate::measurement::{add_noise, NoiseSpec};
use crate::quantum::{
    conjugate, hs_overlap, kron, pauli_x, pauli_y, pauli_z, permute_qubits, spin_bit, CMatrix,
    DeviationDensityMatrix, SpinRole, SpinSystem, UnitaryOp, C64, I, ONE, ZERO,
};

const KRAUS_TOL: f64 = 1e-9;

/// Input basis `|m><m'|` (row-major in `(m, m')`) and fixed operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessBasis {
    n_qubits: usize,
    rho_basis: Vec<CMatrix>,
    fixed_ops: Vec<CMatrix>,
    labels: Vec<String>,
}

impl ProcessBasis {
    /// Matrix units and tensor products of `I, X, -iY, Z` on `n` qubits.
    pub fn standard(n: usize) -> Result<Self> {
        if n == 0 || n > 3 {
            return Err(Error::invalid("process basis supports 1 to 3 qubits"));
        }
        let d = 1usize << n;
        let rho_basis = (0..d * d)
            .map(|j| {
                let mut m = CMatrix::zeros(d, d);
                m[(j / d, j % d)] = ONE;
                m
            })
            .collect();
        let single = [
            ("E", CMatrix::identity(2, 2)),
            ("X", pauli_x()),
            ("Y", pauli_y() * -I),
            ("Z", pauli_z()),
        ];
        let mut fixed_ops = vec![CMatrix::identity(1, 1)];
        let mut labels = vec![String::new()];
        for _ in 0..n {
            let mut ops = Vec::new();
            let mut labs = Vec::new();
            for (op, lab) in fixed_ops.iter().zip(&labels) {
                for (name, s) in &single {
                    ops.push(kron(op, s));
                    labs.push(format!("{lab}{name}"));
                }
            }
            fixed_ops = ops;
            labels = labs;
        }
        Self::new(rho_basis, fixed_ops, labels)
    }

    pub fn new(
        rho_basis: Vec<CMatrix>,
        fixed_ops: Vec<CMatrix>,
        labels: Vec<String>,
    ) -> Result<Self> {
        let d = rho_basis.first().map(|m| m.nrows()).unwrap_or(0);
        if d < 2 || !d.is_power_of_two() {
            return Err(Error::invalid(
                "process basis dimension must be a power of two >= 2",
            ));
        }
        if rho_basis.len() != d * d || fixed_ops.len() != d * d || labels.len() != d * d {
            return Err(Error::invalid(format!(
                "process basis needs {} elements of each kind",
                d * d
            )));
        }
        if rho_basis
            .iter()
            .chain(&fixed_ops)
            .any(|m| m.shape() != (d, d))
        {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: 0,
            });
        }
        let basis = Self {
            n_qubits: d.trailing_zeros() as usize,
            rho_basis,
            fixed_ops,
            labels,
        };
        if vectorized(&basis.rho_basis).rank(1e-10) < d * d {
            return Err(Error::Numerical("rho basis Gram matrix is singular".into()));
        }
        if vectorized(&basis.fixed_ops).rank(1e-10) < d * d {
            return Err(Error::Numerical(
                "fixed operators are linearly dependent".into(),
            ));
        }
        Ok(basis)
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
    pub fn rho_basis(&self) -> &[CMatrix] {
        &self.rho_basis
    }
    pub fn fixed_ops(&self) -> &[CMatrix] {
        &self.fixed_ops
    }
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Coefficients of `m` in the `rho_k` basis.
    pub fn expand(&self, m: &CMatrix) -> Result<Vec<C64>> {
        let b = vectorized(&self.rho_basis);
        let v = CMatrix::from_iterator(m.len(), 1, m.iter().copied());
        let x = b
            .lu()
            .solve(&v)
            .ok_or_else(|| Error::Numerical("rho basis Gram matrix is singular".into()))?;
        Ok(x.iter().copied().collect())
    }
}

/// Columns are the column-major vectorizations of `ms`.
fn vectorized(ms: &[CMatrix]) -> CMatrix {
    let len = ms[0].len();
    CMatrix::from_fn(len, ms.len(), |r, c| ms[c][r])
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantumChannel {
    Unitary(UnitaryOp),
    Kraus(Vec<CMatrix>),
    /// Ensemble average over collective z rotations in `[-phi, phi]`.
    Twirl(f64),
}

impl QuantumChannel {
    pub fn unitary(u: CMatrix) -> Result<Self> {
        Ok(Self::Unitary(UnitaryOp::new(u)?))
    }

    pub fn kraus(ops: Vec<CMatrix>) -> Result<Self> {
        let d = ops
            .first()
            .map(|m| m.nrows())
            .ok_or_else(|| Error::invalid("empty Kraus set"))?;
        if ops.iter().any(|m| m.shape() != (d, d)) {
            return Err(Error::invalid(
                "Kraus operators must be square and of equal size",
            ));
        }
        let sum = ops
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, e| acc + e.adjoint() * e);
        let r = (sum - CMatrix::identity(d, d))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if r > KRAUS_TOL {
            return Err(Error::InvalidMatrix {
                property: "a complete Kraus set",
                residual: r,
            });
        }
        Ok(Self::Kraus(ops))
    }

    pub fn twirl(phi: f64) -> Result<Self> {
        if !phi.is_finite() || phi < 0.0 {
            return Err(Error::invalid(format!(
                "twirl angle must be finite and >= 0, got {phi}"
            )));
        }
        Ok(Self::Twirl(phi))
    }

    /// Kraus operators, for channels that act on the system alone.
    pub fn kraus_ops(&self) -> Option<Vec<CMatrix>> {
        match self {
            Self::Unitary(u) => Some(vec![u.matrix().clone()]),
            Self::Kraus(k) => Some(k.clone()),
            Self::Twirl(_) => None,
        }
    }
}

/// Unnormalized sinc, `sin(x) / x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Named single-qubit test gates.
pub fn gate(name: &str) -> Result<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(match name.to_ascii_lowercase().as_str() {
        "nop" => CMatrix::identity(2, 2),
        "not-x" => pauli_x() * -I,
        "not-y" => pauli_y() * -I,
        "hadamard" => (pauli_x() + pauli_z()) * C64::new(s, 0.0),
        "phase-pi" => pauli_z(),
        "phase-pi/4" => {
            CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, C64::from_polar(1.0, PI / 4.0)])
        }
        other => {
            return Err(Error::invalid(format!(
            "unknown gate {other:?} (expected nop, not-x, not-y, hadamard, phase-pi, phase-pi/4)"
        )))
        }
    })
}

pub const GATE_NAMES: [&str; 6] = [
    "nop",
    "not-x",
    "not-y",
    "hadamard",
    "phase-pi",
    "phase-pi/4",
];

/// Trace-one projector onto `|phi_AS>^n`, `|phi_AS> = (|00> + |11>)/sqrt 2`, ancilla-major.
pub fn encode_basis(n_system: usize) -> Result<CMatrix> {
    if n_system == 0 || n_system > 3 {
        return Err(Error::invalid("encode_basis supports 1 to 3 system qubits"));
    }
    let d = 1usize << n_system;
    // |psi> = sum_a |a>_A |a>_S, normalized at the end.
    let psi = CMatrix::from_fn(d * d, 1, |r, _| if r / d == r % d { ONE } else { ZERO });
    Ok(&psi * psi.adjoint() / C64::new(d as f64, 0.0))
}

/// Applies `channel` to the system half of an ancilla-major `A (x) S` state.
/// Twirling acts on every qubit of the register.
pub fn apply_channel(
    state: &CMatrix,
    channel: &QuantumChannel,
    n_system: usize,
) -> Result<CMatrix> {
    let dim = 1usize << (2 * n_system);
    if state.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: state.nrows(),
        });
    }
    let d = 1usize << n_system;
    let id = CMatrix::identity(d, d);
    match channel {
        QuantumChannel::Unitary(u) => {
            if u.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: u.dim(),
                });
            }
            Ok(conjugate(state, &kron(&id, u.matrix())))
        }
        QuantumChannel::Kraus(ops) => {
            if ops[0].nrows() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: ops[0].nrows(),
                });
            }
            Ok(ops.iter().fold(CMatrix::zeros(dim, dim), |acc, e| {
                acc + conjugate(state, &kron(&id, e))
            }))
        }
        QuantumChannel::Twirl(phi) => {
            let n = 2 * n_system;
            let ones = |m: usize| (0..n).map(|k| spin_bit(m, k, n) as i64).sum::<i64>();
            Ok(CMatrix::from_fn(dim, dim, |l, m| {
                state[(l, m)] * sinc((ones(m) - ones(l)) as f64 * phi)
            }))
        }
    }
}

/// `lambda_jk` read from the `(a, b)` blocks of an ancilla-major state, without rescaling.
pub fn extract_lambda(rho_as: &CMatrix, n_system: usize) -> Result<CMatrix> {
    let d = 1usize << n_system;
    if rho_as.shape() != (d * d, d * d) {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: rho_as.nrows(),
        });
    }
    // j = (a, b), k = (c, d): lambda_jk = rho[(a, c), (b, d)].
    Ok(CMatrix::from_fn(d * d, d * d, |j, k| {
        let (a, b) = (j / d, j % d);
        let (c, e) = (k / d, k % d);
        rho_as[(a * d + c, b * d + e)]
    }))
}

/// `beta[(j, k), (m, n)]` with `E_m rho_j E_n^dagger = sum_k beta^{mn}_{jk} rho_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaTensor {
    d2: usize,
    flat: CMatrix,
}

impl BetaTensor {
    pub fn get(&self, m: usize, n: usize, j: usize, k: usize) -> C64 {
        self.flat[(j * self.d2 + k, m * self.d2 + n)]
    }

    /// Rows indexed by `(j, k)`, columns by `(m, n)`.
    pub fn flat(&self) -> &CMatrix {
        &self.flat
    }
}

pub fn beta_tensor(basis: &ProcessBasis) -> Result<BetaTensor> {
    let d2 = basis.dim() * basis.dim();
    let mut flat = CMatrix::zeros(d2 * d2, d2 * d2);
    for (m, em) in basis.fixed_ops.iter().enumerate() {
        for (n, en) in basis.fixed_ops.iter().enumerate() {
            let en_dag = en.adjoint();
            for (j, rj) in basis.rho_basis.iter().enumerate() {
                let coeffs = basis.expand(&(em * rj * &en_dag))?;
                for (k, c) in coeffs.into_iter().enumerate() {
                    flat[(j * d2 + k, m * d2 + n)] = c;
                }
            }
        }
    }
    Ok(BetaTensor { d2, flat })
}

/// Process matrix over the fixed operators of a `ProcessBasis`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMatrix {
    entries: CMatrix,
    labels: Vec<String>,
}

impl ChiMatrix {
    pub fn new(entries: CMatrix, labels: Vec<String>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                found: entries.nrows(),
            });
        }
        Ok(Self { entries, labels })
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, row: &str, col: &str) -> Option<C64> {
        let r = self.labels.iter().position(|l| l == row)?;
        let c = self.labels.iter().position(|l| l == col)?;
        Some(self.entries[(r, c)])
    }

    /// `|| sum_mn chi_mn E_n^dagger E_m - I ||_max`.
    pub fn trace_preservation_residual(&self, basis: &ProcessBasis) -> f64 {
        let d = basis.dim();
        let mut acc = CMatrix::zeros(d, d);
        for (m, em) in basis.fixed_ops.iter().enumerate() {
            for (n, en) in basis.fixed_ops.iter().enumerate() {
                acc += en.adjoint() * em * self.entries[(m, n)];
            }
        }
        (acc - CMatrix::identity(d, d))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// The channel as a map on system operators.
    pub fn apply(&self, basis: &ProcessBasis, rho: &CMatrix) -> CMatrix {
        let d = basis.dim();
        let mut out = CMatrix::zeros(d, d);
        for (m, em) in basis.fixed_ops.iter().enumerate() {
            for (n, en) in basis.fixed_ops.iter().enumerate() {
                out += em * rho * en.adjoint() * self.entries[(m, n)];
            }
        }
        out
    }
}

/// Least-squares solution of `beta chi = lambda`.
pub fn solve_chi(beta: &BetaTensor, lambda: &CMatrix, basis: &ProcessBasis) -> Result<ChiMatrix> {
    let d2 = beta.d2;
    if lambda.shape() != (d2, d2) {
        return Err(Error::DimensionMismatch {
            expected: d2,
            found: lambda.nrows(),
        });
    }
    let rhs = CMatrix::from_fn(d2 * d2, 1, |r, _| lambda[(r / d2, r % d2)]);
    let svd = beta.flat.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax)
        .count();
    if rank < d2 * d2 {
        return Err(Error::RankDeficient {
            rank,
            required: d2 * d2,
        });
    }
    let x = svd
        .solve(&rhs, 1e-12 * smax)
        .map_err(|e| Error::Numerical(format!("chi solve failed: {e}")))?;
    ChiMatrix::new(
        CMatrix::from_fn(d2, d2, |m, n| x[(m * d2 + n, 0)]),
        basis.labels.clone(),
    )
}

pub fn gate_fidelity(chi_exp: &ChiMatrix, chi_th: &ChiMatrix) -> Result<f64> {
    hs_overlap(chi_exp.entries(), chi_th.entries())
}

/// Analytic process matrix `sum_i e_i e_i^dagger`, `e_im = Tr(E_m^dagger K_i) / d`.
pub fn chi_of_kraus(basis: &ProcessBasis, ops: &[CMatrix]) -> Result<ChiMatrix> {
    let d = basis.dim();
    let d2 = d * d;
    let mut chi = CMatrix::zeros(d2, d2);
    for k in ops {
        if k.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: k.nrows(),
            });
        }
        let e = CMatrix::from_fn(d2, 1, |m, _| {
            (basis.fixed_ops[m].adjoint() * k).trace() / d as f64
        });
        chi += &e * e.adjoint();
    }
    ChiMatrix::new(chi, basis.labels.clone())
}

/// Analytic twirl process matrix for one qubit: only `chi_EE` and `chi_ZZ` are non-zero.
pub fn chi_of_twirl(phi: f64) -> Result<ChiMatrix> {
    let basis = ProcessBasis::standard(1)?;
    let s = sinc(2.0 * phi);
    let mut chi = CMatrix::zeros(4, 4);
    chi[(0, 0)] = C64::new((1.0 + s) / 2.0, 0.0);
    chi[(3, 3)] = C64::new((1.0 - s) / 2.0, 0.0);
    ChiMatrix::new(chi, basis.labels.clone())
}

pub fn chi_theory(channel: &QuantumChannel) -> Result<ChiMatrix> {
    match channel {
        QuantumChannel::Twirl(phi) => chi_of_twirl(*phi),
        other => {
            let ops = other
                .kraus_ops()
                .expect("non-twirl channels have Kraus operators");
            let n = ops[0].nrows().trailing_zeros() as usize;
            chi_of_kraus(&ProcessBasis::standard(n)?, &ops)
        }
    }
}

/// Precomputed single-system-qubit pipeline on a three-spin register.
#[derive(Debug, Clone)]
pub struct SsptPipeline {
    system: SpinSystem,
    unitaries: Vec<UnitaryOp>,
    constraint: ConstraintMatrix,
    /// Register order of the tomographed pair expressed as ancilla-major qubits.
    to_register: Vec<usize>,
    to_ancilla_major: Vec<usize>,
    basis: ProcessBasis,
    beta: BetaTensor,
}

impl SsptPipeline {
    pub fn new(system: SpinSystem, unitaries: Vec<UnitaryOp>) -> Result<Self> {
        let sys = system.spins_with_role(SpinRole::System);
        let aapt = system.spins_with_role(SpinRole::AaptAncilla);
        let aaqst = system.spins_with_role(SpinRole::AaqstAncilla);
        if sys.len() != 1 || aapt.len() != 1 || aaqst.is_empty() {
            return Err(Error::InvalidSystem(format!(
                "single-scan process tomography needs exactly one system spin, one aapt-ancilla and at least one aaqst-ancilla; got {}, {} and {}",
                sys.len(),
                aapt.len(),
                aaqst.len()
            )));
        }
        let constraint = build_constraint_matrix(&system, &unitaries)?;
        let required = constraint.column_map().len();
        let rank = constraint.rank();
        if rank < required {
            return Err(Error::RankDeficient { rank, required });
        }
        // Tomographed spins in index order; position 0 or 1 of that order is A.
        let a_first = aapt[0] < sys[0];
        let (to_register, to_ancilla_major) = if a_first {
            (vec![0, 1], vec![0, 1])
        } else {
            (vec![1, 0], vec![1, 0])
        };
        let basis = ProcessBasis::standard(1)?;
        let beta = beta_tensor(&basis)?;
        Ok(Self {
            system,
            unitaries,
            constraint,
            to_register,
            to_ancilla_major,
            basis,
            beta,
        })
    }

    pub fn constraint(&self) -> &ConstraintMatrix {
        &self.constraint
    }
    pub fn basis(&self) -> &ProcessBasis {
        &self.basis
    }
    pub fn beta(&self) -> &BetaTensor {
        &self.beta
    }

    /// Reconstructed ancilla-major `A (x) S` state after the channel, trace one.
    pub fn tomograph(&self, channel: &QuantumChannel, noise: NoiseSpec) -> Result<CMatrix> {
        let encoded = apply_channel(&encode_basis(1)?, channel, 1)?;
        let dev = DeviationDensityMatrix::from_density(&encoded)?;
        let reg = DeviationDensityMatrix::new(permute_qubits(dev.matrix(), &self.to_register)?)?;
        let readout = simulate_readout(&self.system, &reg, &self.unitaries)?;
        let noisy = add_noise(&readout, noise);
        let rec = reconstruct_state(&self.constraint, &noisy)?;
        let mut rho = permute_qubits(rec.matrix(), &self.to_ancilla_major)?;
        for i in 0..4 {
            rho[(i, i)] += C64::new(0.25, 0.0);
        }
        Ok(rho)
    }

    pub fn run(&self, channel: &QuantumChannel, noise: NoiseSpec) -> Result<ChiMatrix> {
        let rho = self.tomograph(channel, noise)?;
        // Blocks hold eps(rho_j) / d; rescale so lambda expands eps(rho_j) itself.
        let lambda = extract_lambda(&rho, 1)? * C64::new(2.0, 0.0);
        solve_chi(&self.beta, &lambda, &self.basis)
    }
}

/// One-shot convenience wrapper around `SsptPipeline`.
pub fn run_sspt(
    system: &SpinSystem,
    unitaries: &[UnitaryOp],
    channel: &QuantumChannel,
    noise: NoiseSpec,
) -> Result<ChiMatrix> {
    SsptPipeline::new(system.clone(), unitaries.to_vec())?.run(channel, noise)
}

/// Serializable view of a process matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiJson {
    pub basis: Vec<String>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&ChiMatrix> for ChiJson {
    fn from(c: &ChiMatrix) -> Self {
        let n = c.entries.nrows();
        Self {
            basis: c.labels.clone(),
            re: (0..n)
                .map(|r| (0..n).map(|k| c.entries[(r, k)].re).collect())
                .collect(),
            im: (0..n)
                .map(|r| (0..n).map(|k| c.entries[(r, k)].im).collect())
                .collect(),
        }
    }
}

/// Second-largest over largest singular value; zero for rank one.
pub fn rank_one_ratio(chi: &ChiMatrix) -> f64 {
    let mut s: Vec<f64> = chi
        .entries
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    if s[0] == 0.0 {
        0.0
    } else {
        s[1] / s[0]
    }
}

/// Counts of independent measurements for `n` system qubits.
pub fn m_qpt(n: u32) -> u64 {
    let d = 1u64 << n;
    d * d * d.div_ceil(n as u64)
}

pub fn m_aapt(n: u32) -> u64 {
    let d = 1u64 << n;
    (d * d).div_ceil(2 * n as u64)
}

/// SSPT needs `N^4 - 1` real unknowns from one scan of `2n + n_b` spins.
pub fn m_sspt(n: u32, n_aaqst_ancilla: u32) -> u64 {
    let d = 1u64 << n;
    let n_tot = 2 * n + n_aaqst_ancilla;
    let unknowns = d.pow(4) - 1;
    let per_scan = n_tot as u64 * (1u64 << n_tot);
    unknowns.div_ceil(per_scan)
}

/// Hermiticity residual of a process matrix.
pub fn chi_hermiticity(chi: &ChiMatrix) -> f64 {
    (chi.entries() - chi.entries().adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{compose_pulse_program, ProgramStep, PulseAxis, PulseSpec};

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn basis_shapes_and_labels() {
        let b = ProcessBasis::standard(1).unwrap();
        assert_eq!(b.labels(), &["E", "X", "Y", "Z"]);
        assert_eq!(b.rho_basis()[1][(0, 1)], ONE);
        assert_eq!(b.rho_basis()[2][(1, 0)], ONE);
        let b2 = ProcessBasis::standard(2).unwrap();
        assert_eq!(b2.labels().len(), 16);
        assert_eq!(b2.labels()[5], "XX");
    }

    #[test]
    fn singular_basis_rejected() {
        let b = ProcessBasis::standard(1).unwrap();
        let mut rho = b.rho_basis().to_vec();
        rho[3] = rho[0].clone();
        assert!(ProcessBasis::new(rho, b.fixed_ops().to_vec(), b.labels().to_vec()).is_err());
    }

    #[test]
    fn encode_examples() {
        let s = encode_basis(1).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let expected = if [0, 3].contains(&r) && [0, 3].contains(&c) {
                    0.5
                } else {
                    0.0
                };
                assert_eq!(s[(r, c)], C64::new(expected, 0.0));
            }
        }
        // (A=0, A=0) block encodes |0><0| / 2.
        assert_eq!(s[(0, 0)], C64::new(0.5, 0.0));
        assert_eq!(s[(1, 1)], ZERO);
        let s2 = encode_basis(2).unwrap();
        assert_eq!(s2.shape(), (16, 16));
        let nz: Vec<f64> = s2
            .iter()
            .filter(|z| z.norm() > 0.0)
            .map(|z| z.norm())
            .collect();
        assert_eq!(nz.len(), 16);
        assert!(nz.iter().all(|x| (x - 0.25).abs() < 1e-15));
        // Tensor-square oracle: |phi>|phi> reordered to ancilla-major.
        let phi = encode_basis(1).unwrap();
        let sq = kron(&phi, &phi);
        // (A1 S1 A2 S2) -> (A1 A2 S1 S2)
        let reordered = permute_qubits(&sq, &[0, 2, 1, 3]).unwrap();
        assert!(max_abs(&(reordered - s2)) < 1e-15);
    }

    #[test]
    fn identity_and_zero_twirl_leave_state_unchanged() {
        let s = encode_basis(1).unwrap();
        let id = QuantumChannel::unitary(CMatrix::identity(2, 2)).unwrap();
        assert_eq!(apply_channel(&s, &id, 1).unwrap(), s);
        assert_eq!(
            apply_channel(&s, &QuantumChannel::twirl(0.0).unwrap(), 1).unwrap(),
            s
        );
    }

    #[test]
    fn twirl_matches_quadrature_oracle() {
        let s = encode_basis(1).unwrap();
        for &phi in &[0.3, 1.1, 0.64 * PI, 3.43 * PI] {
            let fast = apply_channel(&s, &QuantumChannel::twirl(phi).unwrap(), 1).unwrap();
            // Midpoint rule on U = exp(-i f/2 (Z1 + Z2)), f in [-phi, phi].
            let points = 100_000;
            let h = 2.0 * phi / points as f64;
            let mut acc = CMatrix::zeros(4, 4);
            for i in 0..points {
                let f = -phi + (i as f64 + 0.5) * h;
                let u1 = CMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        C64::from_polar(1.0, -f / 2.0),
                        ZERO,
                        ZERO,
                        C64::from_polar(1.0, f / 2.0),
                    ],
                );
                let u = kron(&u1, &u1);
                acc += conjugate(&s, &u);
            }
            acc *= C64::new(1.0 / points as f64, 0.0);
            assert!(max_abs(&(fast.clone() - acc)) < 1e-4, "phi {phi}");
            assert!((fast[(0, 3)].re - 0.5 * sinc(2.0 * phi)).abs() < 1e-15);
        }
    }

    #[test]
    fn incomplete_kraus_rejected() {
        let half = CMatrix::identity(2, 2) * C64::new(0.5, 0.0);
        assert!(QuantumChannel::kraus(vec![half]).is_err());
        assert!(QuantumChannel::twirl(-1.0).is_err());
    }

    // Oracle: lambda_jk from expanding eps(rho_j) in the rho_k basis directly.
    fn lambda_oracle(basis: &ProcessBasis, ops: &[CMatrix]) -> CMatrix {
        let mut l = CMatrix::zeros(4, 4);
        for (j, rj) in basis.rho_basis().iter().enumerate() {
            let out = ops
                .iter()
                .fold(CMatrix::zeros(2, 2), |a, e| a + e * rj * e.adjoint());
            for (k, c) in basis.expand(&out).unwrap().into_iter().enumerate() {
                l[(j, k)] = c;
            }
        }
        l
    }

    #[test]
    fn lambda_extraction_examples() {
        let basis = ProcessBasis::standard(1).unwrap();
        let s = encode_basis(1).unwrap();
        let l = extract_lambda(&s, 1).unwrap();
        assert_eq!(l[(0, 0)], C64::new(0.5, 0.0));
        assert_eq!(l[(3, 3)], C64::new(0.5, 0.0));
        assert_eq!(l[(1, 1)], C64::new(0.5, 0.0));
        assert_eq!(l[(2, 2)], C64::new(0.5, 0.0));
        assert!(
            max_abs(&(l * C64::new(2.0, 0.0) - lambda_oracle(&basis, &[CMatrix::identity(2, 2)])))
                < 1e-15
        );
        // Printed block positions (1-based j, k).
        let mut probe = CMatrix::zeros(4, 4);
        probe[(0, 2)] = C64::new(21.0, 0.0);
        probe[(2, 0)] = C64::new(31.0, 0.0);
        probe[(2, 2)] = C64::new(41.0, 0.0);
        let p = extract_lambda(&probe, 1).unwrap();
        assert_eq!(p[(1, 0)].re, 21.0);
        assert_eq!(p[(2, 0)].re, 31.0);
        assert_eq!(p[(3, 0)].re, 41.0);
        assert!(max_abs(&extract_lambda(&CMatrix::zeros(4, 4), 1).unwrap()) == 0.0);
        assert!(extract_lambda(&CMatrix::zeros(8, 8), 1).is_err());
    }

    #[test]
    fn lambda_matches_expansion_for_gates() {
        let basis = ProcessBasis::standard(1).unwrap();
        for name in GATE_NAMES {
            let u = gate(name).unwrap();
            let ch = QuantumChannel::unitary(u.clone()).unwrap();
            let out = apply_channel(&encode_basis(1).unwrap(), &ch, 1).unwrap();
            let l = extract_lambda(&out, 1).unwrap() * C64::new(2.0, 0.0);
            assert!(
                max_abs(&(l - lambda_oracle(&basis, &[u]))) < 1e-14,
                "{name}"
            );
        }
    }

    #[test]
    fn strong_twirl_kills_coherence_lambdas() {
        let out = apply_channel(
            &encode_basis(1).unwrap(),
            &QuantumChannel::twirl(1e6).unwrap(),
            1,
        )
        .unwrap();
        let l = extract_lambda(&out, 1).unwrap() * C64::new(2.0, 0.0);
        assert!(l[(1, 1)].norm() < 1e-6 && l[(2, 2)].norm() < 1e-6);
        assert!((l[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn beta_examples_and_oracle() {
        let basis = ProcessBasis::standard(1).unwrap();
        let beta = beta_tensor(&basis).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                let expected = if j == k { ONE } else { ZERO };
                assert_eq!(beta.get(0, 0, j, k), expected);
            }
        }
        // X |0><0| X = |1><1|
        assert_eq!(beta.get(1, 1, 0, 3), ONE);
        // Oracle: for matrix units the coefficients are the entries of the product.
        for m in 0..4 {
            for n in 0..4 {
                for j in 0..4 {
                    let prod = &basis.fixed_ops()[m]
                        * &basis.rho_basis()[j]
                        * basis.fixed_ops()[n].adjoint();
                    for k in 0..4 {
                        let (c, d) = (k / 2, k % 2);
                        assert!((beta.get(m, n, j, k) - prod[(c, d)]).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn solve_chi_examples() {
        let basis = ProcessBasis::standard(1).unwrap();
        let beta = beta_tensor(&basis).unwrap();
        let chi = solve_chi(
            &beta,
            &lambda_oracle(&basis, &[CMatrix::identity(2, 2)]),
            &basis,
        )
        .unwrap();
        assert!((chi.get("E", "E").unwrap() - ONE).norm() < 1e-12);
        let mut rest = chi.entries().clone();
        rest[(0, 0)] = ZERO;
        assert!(max_abs(&rest) < 1e-12);

        let notx = gate("not-x").unwrap();
        let chi = solve_chi(
            &beta,
            &lambda_oracle(&basis, std::slice::from_ref(&notx)),
            &basis,
        )
        .unwrap();
        assert!((chi.get("X", "X").unwrap().norm() - 1.0).abs() < 1e-12);
        let th = chi_of_kraus(&basis, &[notx]).unwrap();
        assert!((gate_fidelity(&chi, &th).unwrap() - 1.0).abs() < 1e-12);

        for &phi in &[0.0, 0.5, 2.0] {
            let out = apply_channel(
                &encode_basis(1).unwrap(),
                &QuantumChannel::twirl(phi).unwrap(),
                1,
            )
            .unwrap();
            let l = extract_lambda(&out, 1).unwrap() * C64::new(2.0, 0.0);
            let chi = solve_chi(&beta, &l, &basis).unwrap();
            assert!(max_abs(&(chi.entries() - chi_of_twirl(phi).unwrap().entries())) < 1e-6);
        }
    }

    #[test]
    fn fidelity_examples() {
        let basis = ProcessBasis::standard(1).unwrap();
        let xx = chi_of_kraus(&basis, &[gate("not-x").unwrap()]).unwrap();
        let ee = chi_of_kraus(&basis, &[gate("nop").unwrap()]).unwrap();
        let h = chi_of_kraus(&basis, &[gate("hadamard").unwrap()]).unwrap();
        assert!((gate_fidelity(&xx, &xx).unwrap() - 1.0).abs() < 1e-15);
        assert!(gate_fidelity(&xx, &ee).unwrap().abs() < 1e-15);
        assert!((gate_fidelity(&h, &xx).unwrap() - 0.5).abs() < 1e-12);
        let zero = ChiMatrix::new(CMatrix::zeros(4, 4), basis.labels().to_vec()).unwrap();
        assert!(gate_fidelity(&zero, &xx).is_err());
    }

    #[test]
    fn unknown_gate_rejected() {
        assert!(gate("toffoli").is_err());
        for g in GATE_NAMES {
            assert!(crate::quantum::unitarity_residual(&gate(g).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn measurement_count_table() {
        let qpt: Vec<u64> = (1..=5).map(m_qpt).collect();
        assert_eq!(qpt, vec![8, 32, 192, 1024, 7168]);
        let aapt: Vec<u64> = (1..=5).map(m_aapt).collect();
        assert_eq!(aapt, vec![2, 4, 11, 32, 103]);
        let nb = [1, 2, 3, 5, 6];
        for (n, b) in (1..=5).zip(nb) {
            assert_eq!(m_sspt(n, b), 1, "n = {n}");
        }
    }

    fn sspt_system() -> (SpinSystem, Vec<UnitaryOp>) {
        let j = nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 69.9, 47.5, 69.9, 0.0, -128.3, 47.5, -128.3, 0.0],
        );
        let sys = SpinSystem::new(
            vec![412.0, -235.0, 118.0],
            j,
            vec![
                SpinRole::System,
                SpinRole::AaptAncilla,
                SpinRole::AaqstAncilla,
            ],
            None,
        )
        .unwrap();
        let program = [
            ProgramStep::Delay(6.8e-3),
            ProgramStep::Pulse(PulseSpec::global(PulseAxis::X, PI / 2.0)),
            ProgramStep::Delay(8.0e-3),
            ProgramStep::Pulse(PulseSpec::global(PulseAxis::Y, PI / 2.0)),
        ];
        let u = compose_pulse_program(&sys, &program).unwrap();
        (sys, vec![u])
    }

    #[test]
    fn pipeline_reproduces_gates() {
        let (sys, us) = sspt_system();
        let p = SsptPipeline::new(sys, us).unwrap();
        for name in GATE_NAMES {
            let ch = QuantumChannel::unitary(gate(name).unwrap()).unwrap();
            let chi = p.run(&ch, NoiseSpec::none()).unwrap();
            let f = gate_fidelity(&chi, &chi_theory(&ch).unwrap()).unwrap();
            assert!((f - 1.0).abs() < 1e-9, "{name}: {f}");
            assert!(rank_one_ratio(&chi) < 1e-8);
            assert!(chi.trace_preservation_residual(p.basis()) < 1e-6);
        }
    }

    #[test]
    fn pipeline_rejects_wrong_roles() {
        let (sys, us) = sspt_system();
        let sys = sys
            .with_roles(vec![
                SpinRole::System,
                SpinRole::System,
                SpinRole::AaqstAncilla,
            ])
            .unwrap();
        assert!(SsptPipeline::new(sys, us).is_err());
    }
}
