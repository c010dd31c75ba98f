//! Dense complex-matrix model of an NMR spin register.
//!
//! Basis states `|m_1 m_2 ... m_n>` are indexed by the decimal value
//! `m = m_1 2^(n-1) + ... + m_n`, so spin 0 is the most significant bit.
//! Frequencies are stored in Hz; Hamiltonians are returned in rad/s using
//!
//! ```text
//! H = -pi * sum_i nu_i sz_i + (pi / 2) * sum_{i<j} J_ij sz_i sz_j
//! ```
//!
//! Density matrices are deviation matrices: the identity background is
//! dropped everywhere.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Default upper bound on register size for dense simulation.
pub const MAX_SPINS: usize = 12;

const HERMITIAN_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-9;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinRole {
    System,
    AaptAncilla,
    AaqstAncilla,
}

impl SpinRole {
    pub fn as_str(self) -> &'static str {
        match self {
            SpinRole::System => "system",
            SpinRole::AaptAncilla => "aapt-ancilla",
            SpinRole::AaqstAncilla => "aaqst-ancilla",
        }
    }
}

/// Register description: offsets, scalar couplings and role tags.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    offsets_hz: Vec<f64>,
    couplings_hz: DMatrix<f64>,
    roles: Vec<SpinRole>,
    gammas: Option<Vec<f64>>,
}

impl SpinSystem {
    pub fn new(
        offsets_hz: Vec<f64>,
        couplings_hz: DMatrix<f64>,
        roles: Vec<SpinRole>,
        gammas: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = offsets_hz.len();
        if n == 0 {
            return Err(Error::InvalidSystem("n_spins must be at least 1".into()));
        }
        if couplings_hz.nrows() != n || couplings_hz.ncols() != n {
            return Err(Error::InvalidSystem(format!(
                "j_matrix_hz must be {n}x{n}, got {}x{}",
                couplings_hz.nrows(),
                couplings_hz.ncols()
            )));
        }
        if roles.len() != n {
            return Err(Error::InvalidSystem(format!(
                "labels must have {n} entries, got {}",
                roles.len()
            )));
        }
        if let Some(g) = &gammas {
            if g.len() != n {
                return Err(Error::InvalidSystem(format!(
                    "gammas must have {n} entries, got {}",
                    g.len()
                )));
            }
        }
        for (i, v) in offsets_hz.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidSystem(format!(
                    "offsets_hz[{i}] is not finite"
                )));
            }
        }
        for i in 0..n {
            if couplings_hz[(i, i)] != 0.0 {
                return Err(Error::InvalidSystem(format!(
                    "j_matrix_hz[{i}][{i}] must be zero"
                )));
            }
            for j in 0..n {
                let (a, b) = (couplings_hz[(i, j)], couplings_hz[(j, i)]);
                if !a.is_finite() {
                    return Err(Error::InvalidSystem(format!(
                        "j_matrix_hz[{i}][{j}] is not finite"
                    )));
                }
                if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                    return Err(Error::InvalidSystem(format!(
                        "j_matrix_hz is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self {
            offsets_hz,
            couplings_hz,
            roles,
            gammas,
        })
    }

    /// Uncoupled, on-resonance register of `n` system spins.
    pub fn trivial(n: usize) -> Result<Self> {
        Self::new(
            vec![0.0; n],
            DMatrix::zeros(n, n),
            vec![SpinRole::System; n],
            None,
        )
    }

    pub fn n_spins(&self) -> usize {
        self.offsets_hz.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins()
    }

    pub fn offsets_hz(&self) -> &[f64] {
        &self.offsets_hz
    }

    pub fn couplings_hz(&self) -> &DMatrix<f64> {
        &self.couplings_hz
    }

    pub fn roles(&self) -> &[SpinRole] {
        &self.roles
    }

    pub fn gammas(&self) -> Option<&[f64]> {
        self.gammas.as_deref()
    }

    pub fn with_roles(mut self, roles: Vec<SpinRole>) -> Result<Self> {
        if roles.len() != self.n_spins() {
            return Err(Error::InvalidSystem(
                "role count does not match spin count".into(),
            ));
        }
        self.roles = roles;
        Ok(self)
    }

    /// Indices of spins carrying `role`, ascending.
    pub fn spins_with_role(&self, role: SpinRole) -> Vec<usize> {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == role)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Traceless Hermitian matrix; the tomography unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationDensityMatrix(CMatrix);

impl DeviationDensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square_pow2(&m)?;
        let herm = hermiticity_residual(&m);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidMatrix {
                property: "Hermitian",
                residual: herm,
            });
        }
        let tr = m.trace().norm();
        if tr > HERMITIAN_TOL {
            return Err(Error::InvalidMatrix {
                property: "traceless",
                residual: tr,
            });
        }
        Ok(Self(m))
    }

    /// Drops the identity part of any Hermitian matrix.
    pub fn from_density(rho: &CMatrix) -> Result<Self> {
        check_square_pow2(rho)?;
        let n = rho.nrows();
        let shift = rho.trace() / n as f64;
        let mut m = rho.clone();
        for i in 0..n {
            m[(i, i)] -= shift;
        }
        Self::new(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub(crate) fn from_unchecked(m: CMatrix) -> Self {
        Self(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOp(CMatrix);

impl UnitaryOp {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let r = unitarity_residual(&m);
        if r > UNITARY_TOL {
            return Err(Error::InvalidMatrix {
                property: "unitary",
                residual: r,
            });
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// `later * self`: apply `self` first, then `later`.
    pub fn then(&self, later: &UnitaryOp) -> Result<Self> {
        if later.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: later.dim(),
            });
        }
        Ok(Self(&later.0 * &self.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseAxis {
    X,
    Y,
    Z,
    /// Transverse axis at the given phase (rad) from x.
    Phase(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    All,
    Spins(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSpec {
    pub axis: PulseAxis,
    pub angle: f64,
    pub targets: Targets,
}

impl PulseSpec {
    pub fn new(axis: PulseAxis, angle: f64, targets: Targets) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::invalid("pulse angle must be finite"));
        }
        if let PulseAxis::Phase(p) = axis {
            if !p.is_finite() {
                return Err(Error::invalid("pulse phase must be finite"));
            }
        }
        if let Targets::Spins(s) = &targets {
            if s.is_empty() {
                return Err(Error::invalid("pulse target set is empty"));
            }
        }
        Ok(Self {
            axis,
            angle,
            targets,
        })
    }

    pub fn global(axis: PulseAxis, angle: f64) -> Self {
        Self {
            axis,
            angle,
            targets: Targets::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProgramStep {
    Pulse(PulseSpec),
    /// Free evolution under the internal Hamiltonian for the given time (s).
    Delay(f64),
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Embeds a single-spin operator acting on `spin` into an `n`-spin register.
pub fn spin_operator(op: &CMatrix, spin: usize, n: usize) -> CMatrix {
    let id = CMatrix::identity(2, 2);
    (0..n).fold(CMatrix::identity(1, 1), |acc, k| {
        if k == spin {
            kron(&acc, op)
        } else {
            kron(&acc, &id)
        }
    })
}

/// Bit value of `spin` in basis index `m` of an `n`-spin register.
#[inline]
pub fn spin_bit(m: usize, spin: usize, n: usize) -> usize {
    (m >> (n - 1 - spin)) & 1
}

/// Diagonal of the internal Hamiltonian (rad/s), capped at `cap` spins.
pub fn hamiltonian_diagonal_capped(system: &SpinSystem, cap: usize) -> Result<DVector<f64>> {
    let n = system.n_spins();
    if n > cap {
        return Err(Error::TooManySpins { n, cap });
    }
    let dim = 1usize << n;
    let nu = system.offsets_hz();
    let j = system.couplings_hz();
    let diag = DVector::from_fn(dim, |m, _| {
        let z = |k: usize| if spin_bit(m, k, n) == 0 { 1.0 } else { -1.0 };
        let mut e = 0.0;
        for a in 0..n {
            e -= PI * nu[a] * z(a);
            for b in (a + 1)..n {
                e += 0.5 * PI * j[(a, b)] * z(a) * z(b);
            }
        }
        e
    });
    Ok(diag)
}

pub fn build_hamiltonian_capped(system: &SpinSystem, cap: usize) -> Result<CMatrix> {
    let d = hamiltonian_diagonal_capped(system, cap)?;
    Ok(CMatrix::from_diagonal(&d.map(|x| C64::new(x, 0.0))))
}

/// Internal Hamiltonian in rad/s; diagonal in the computational basis.
pub fn build_hamiltonian(system: &SpinSystem) -> Result<CMatrix> {
    build_hamiltonian_capped(system, MAX_SPINS)
}

/// `exp(-i H tau)` for the internal Hamiltonian.
pub fn free_evolution(system: &SpinSystem, tau: f64) -> Result<UnitaryOp> {
    let d = hamiltonian_diagonal_capped(system, MAX_SPINS)?;
    let phases = d.map(|e| C64::from_polar(1.0, -e * tau));
    Ok(UnitaryOp(CMatrix::from_diagonal(&phases)))
}

fn single_spin_rotation(axis: PulseAxis, angle: f64) -> CMatrix {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    match axis {
        PulseAxis::Z => CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::from_polar(1.0, -angle / 2.0),
                ZERO,
                ZERO,
                C64::from_polar(1.0, angle / 2.0),
            ],
        ),
        _ => {
            let phi = match axis {
                PulseAxis::X => 0.0,
                PulseAxis::Y => PI / 2.0,
                PulseAxis::Phase(p) => p,
                PulseAxis::Z => unreachable!(),
            };
            // cos(a/2) I - i sin(a/2) (cos(phi) X + sin(phi) Y)
            let off01 = -I * s * C64::from_polar(1.0, -phi);
            let off10 = -I * s * C64::from_polar(1.0, phi);
            CMatrix::from_row_slice(2, 2, &[C64::new(c, 0.0), off01, off10, C64::new(c, 0.0)])
        }
    }
}

/// Ideal hard pulse on the targeted spins of an `n`-spin register.
pub fn pulse_unitary(pulse: &PulseSpec, n: usize) -> Result<UnitaryOp> {
    let targeted: Vec<bool> = match &pulse.targets {
        Targets::All => vec![true; n],
        Targets::Spins(s) => {
            let mut t = vec![false; n];
            for &k in s {
                if k >= n {
                    return Err(Error::invalid(format!(
                        "pulse target spin {k} outside register of {n} spins"
                    )));
                }
                t[k] = true;
            }
            t
        }
    };
    let r = single_spin_rotation(pulse.axis, pulse.angle);
    let id = CMatrix::identity(2, 2);
    let u = targeted.iter().fold(CMatrix::identity(1, 1), |acc, &t| {
        kron(&acc, if t { &r } else { &id })
    });
    Ok(UnitaryOp(u))
}

/// Product of the step unitaries; the first step acts first.
pub fn compose_pulse_program(system: &SpinSystem, steps: &[ProgramStep]) -> Result<UnitaryOp> {
    let n = system.n_spins();
    if n > MAX_SPINS {
        return Err(Error::TooManySpins { n, cap: MAX_SPINS });
    }
    let diag = hamiltonian_diagonal_capped(system, MAX_SPINS)?;
    let mut u = CMatrix::identity(1 << n, 1 << n);
    for (i, step) in steps.iter().enumerate() {
        match step {
            ProgramStep::Delay(tau) => {
                if !(*tau >= 0.0) || !tau.is_finite() {
                    return Err(Error::NegativeDelay {
                        step: i,
                        value: *tau,
                    });
                }
                // Diagonal propagator: scale rows.
                for r in 0..u.nrows() {
                    let ph = C64::from_polar(1.0, -diag[r] * tau);
                    u.row_mut(r).iter_mut().for_each(|z| *z *= ph);
                }
            }
            ProgramStep::Pulse(p) => {
                let p = pulse_unitary(p, n)?;
                u = p.0 * u;
            }
        }
    }
    Ok(UnitaryOp(u))
}

/// `U rho U^dagger`.
pub fn evolve(rho: &DeviationDensityMatrix, u: &UnitaryOp) -> Result<DeviationDensityMatrix> {
    if rho.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: u.dim(),
        });
    }
    Ok(DeviationDensityMatrix(conjugate(&rho.0, &u.0)))
}

pub(crate) fn conjugate(rho: &CMatrix, u: &CMatrix) -> CMatrix {
    u * rho * u.adjoint()
}

/// Normalized Hilbert-Schmidt overlap `|Tr(a b^dagger)| / sqrt(Tr(a a^dagger) Tr(b b^dagger))`.
pub fn state_fidelity(a: &DeviationDensityMatrix, b: &DeviationDensityMatrix) -> Result<f64> {
    hs_overlap(&a.0, &b.0)
}

pub(crate) fn hs_overlap(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    let na = a.norm_squared();
    let nb = b.norm_squared();
    if na == 0.0 {
        return Err(Error::ZeroNorm("first operand"));
    }
    if nb == 0.0 {
        return Err(Error::ZeroNorm("second operand"));
    }
    // Tr(a b^dagger) = sum_ij a_ij conj(b_ij)
    let overlap: C64 = a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum();
    Ok((overlap.norm() / (na * nb).sqrt()).min(1.0))
}

/// `exp(-i h t)` for Hermitian `h`, by eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> Result<UnitaryOp> {
    let r = hermiticity_residual(h);
    if r > 1e-9 * h.norm().max(1.0) {
        return Err(Error::InvalidMatrix {
            property: "Hermitian",
            residual: r,
        });
    }
    let eig = h.clone().symmetric_eigen();
    let phases = eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t));
    let v = &eig.eigenvectors;
    Ok(UnitaryOp(v * CMatrix::from_diagonal(&phases) * v.adjoint()))
}

/// Reorders qubits: qubit `k` of the output is qubit `perm[k]` of the input.
pub fn permute_qubits(m: &CMatrix, perm: &[usize]) -> Result<CMatrix> {
    let n = perm.len();
    if m.nrows() != 1 << n || !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            found: m.nrows(),
        });
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::invalid("qubit permutation is not a bijection"));
        }
        seen[p] = true;
    }
    let map = |out: usize| -> usize {
        (0..n).fold(0, |acc, k| acc | (spin_bit(out, k, n) << (n - 1 - perm[k])))
    };
    let dim = 1 << n;
    let src: Vec<usize> = (0..dim).map(map).collect();
    Ok(CMatrix::from_fn(dim, dim, |r, c| m[(src[r], src[c])]))
}

/// Traces out every qubit not listed in `keep` (kept in ascending order).
pub fn partial_trace_keep(m: &CMatrix, n: usize, keep: &[usize]) -> CMatrix {
    let k = keep.len();
    let dk = 1 << k;
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let mut out = CMatrix::zeros(dk, dk);
    let compose = |kept: usize, env: usize| -> usize {
        let mut idx = 0;
        for (i, &q) in keep.iter().enumerate() {
            idx |= spin_bit(kept, i, k) << (n - 1 - q);
        }
        for (i, &q) in traced.iter().enumerate() {
            idx |= spin_bit(env, i, traced.len()) << (n - 1 - q);
        }
        idx
    };
    for a in 0..dk {
        for b in 0..dk {
            let mut s = ZERO;
            for e in 0..(1 << traced.len()) {
                s += m[(compose(a, e), compose(b, e))];
            }
            out[(a, b)] = s;
        }
    }
    out
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    (m - m.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let d = u.nrows();
    (u * u.adjoint() - CMatrix::identity(d, d))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn check_square_pow2(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if !m.nrows().is_power_of_two() {
        return Err(Error::invalid(format!(
            "matrix dimension {} is not a power of two",
            m.nrows()
        )));
    }
    Ok(())
}
