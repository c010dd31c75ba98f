//! Sequential-measurement statistics of a precessing spin-1/2.
//!
//! The observable at time `t` is `X(t) = U(t)^dagger sz U(t)` with
//! `U(t) = exp(-i sx w t / 2)`, i.e. `X(t) = cos(wt) sz + sin(wt) sy`.
//! Outcomes are dichotomic, `x = +1` for the `|0>` projection (label `q = 0`).
//! Entropies are in bits.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quantum::{kron, pauli_x, pauli_y, pauli_z, CMatrix, C64, ONE, ZERO};

/// Default Larmor frequency, rad/s.
pub const DEFAULT_OMEGA: f64 = 2.0 * PI * 100.0;
/// Default number of theta grid points on `[0, pi]`.
pub const DEFAULT_POINTS: usize = 97;

const PROB_CLAMP: f64 = 1e-12;

/// Joint distribution over `{+1, -1}^arity`.
///
/// Index bit `arity - 1 - i` is set when outcome `i` is `-1`, so the first
/// outcome is the most significant bit and `(+1, ..., +1)` is index 0.
/// Quasi-probabilities from moment inversion may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    arity: usize,
    values: Vec<f64>,
}

impl ProbabilityTable {
    pub fn new(arity: usize, values: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&arity) {
            return Err(Error::invalid(format!(
                "table arity must be 1, 2 or 3, got {arity}"
            )));
        }
        if values.len() != 1 << arity {
            return Err(Error::DimensionMismatch {
                expected: 1 << arity,
                found: values.len(),
            });
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self { arity, values })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index_of(outcomes: &[i8]) -> Result<usize> {
        outcomes.iter().try_fold(0usize, |acc, &x| match x {
            1 => Ok(acc << 1),
            -1 => Ok((acc << 1) | 1),
            other => Err(Error::invalid(format!(
                "outcome must be +1 or -1, got {other}"
            ))),
        })
    }

    /// Outcome tuple of table index `idx`.
    pub fn outcomes_of(&self, idx: usize) -> Vec<i8> {
        (0..self.arity)
            .map(|i| {
                if (idx >> (self.arity - 1 - i)) & 1 == 1 {
                    -1
                } else {
                    1
                }
            })
            .collect()
    }

    pub fn get(&self, outcomes: &[i8]) -> Result<f64> {
        if outcomes.len() != self.arity {
            return Err(Error::DimensionMismatch {
                expected: self.arity,
                found: outcomes.len(),
            });
        }
        Ok(self.values[Self::index_of(outcomes)?])
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&p| p >= -PROB_CLAMP)
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &ProbabilityTable) -> Result<f64> {
        if self.arity != other.arity {
            return Err(Error::DimensionMismatch {
                expected: self.arity,
                found: other.arity,
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// The eight moments `mu_{n1 n2 n3}`, indexed by the bits `n1 n2 n3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    values: [f64; 8],
}

impl MomentSet {
    pub fn new(values: [f64; 8]) -> Result<Self> {
        if (values[0] - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "mu_000 must be 1, got {}",
                values[0]
            )));
        }
        if let Some(v) = values.iter().find(|v| v.abs() > 1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "moments must satisfy |mu| <= 1, got {v}"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64; 8] {
        &self.values
    }

    /// `mu_{n1 n2 n3}` with each `n` in `{0, 1}`.
    pub fn get(&self, n1: usize, n2: usize, n3: usize) -> f64 {
        self.values[(n1 << 2) | (n2 << 1) | n3]
    }
}

/// Dichotomic observable measured at time `t`.
pub fn observable(omega: f64, t: f64) -> CMatrix {
    let (c, s) = ((omega * t).cos(), (omega * t).sin());
    pauli_z() * C64::new(c, 0.0) + pauli_y() * C64::new(s, 0.0)
}

fn projector(omega: f64, t: f64, x: i8) -> CMatrix {
    (CMatrix::identity(2, 2) + observable(omega, t) * C64::new(x as f64, 0.0)) * C64::new(0.5, 0.0)
}

pub fn maximally_mixed() -> CMatrix {
    CMatrix::identity(2, 2) * C64::new(0.5, 0.0)
}

fn check_density(rho: &CMatrix) -> Result<()> {
    if rho.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: rho.nrows(),
        });
    }
    if (rho.trace() - ONE).norm() > 1e-9 {
        return Err(Error::invalid("input state must have unit trace"));
    }
    if crate::quantum::hermiticity_residual(rho) > 1e-10 {
        return Err(Error::invalid("input state must be Hermitian"));
    }
    Ok(())
}

fn check_times(times: &[f64]) -> Result<()> {
    if !(2..=3).contains(&times.len()) {
        return Err(Error::invalid(
            "sequential measurements need 2 or 3 instants",
        ));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("measurement instants must be finite"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "measurement instants must be strictly increasing",
        ));
    }
    Ok(())
}

/// Projective-collapse joint probabilities for measurements at `times`.
pub fn sequential_jp(times: &[f64], omega: f64, rho_in: &CMatrix) -> Result<ProbabilityTable> {
    check_times(times)?;
    check_density(rho_in)?;
    let k = times.len();
    let mut values = Vec::with_capacity(1 << k);
    for idx in 0..(1usize << k) {
        let mut state = rho_in.clone();
        for (i, &t) in times.iter().enumerate() {
            let x = if (idx >> (k - 1 - i)) & 1 == 1 { -1 } else { 1 };
            let p = projector(omega, t, x);
            state = &p * state * &p;
        }
        values.push(state.trace().re);
    }
    ProbabilityTable::new(k, values)
}

/// Two-time joint probabilities for the maximally mixed input at angle `theta`.
pub fn two_time_table(theta: f64) -> ProbabilityTable {
    if theta <= 0.0 {
        return ProbabilityTable::new(2, vec![0.5, 0.0, 0.0, 0.5]).expect("normalized");
    }
    sequential_jp(&[0.0, theta], 1.0, &maximally_mixed()).expect("valid instants")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InrmVariant {
    /// Ancilla flips when the system is `|1>`; unflipped runs give `q1 = 0`.
    Cnot,
    /// Ancilla flips when the system is `|0>`; unflipped runs give `q1 = 1`.
    AntiCnot,
}

/// Kept rows `[P(q1, x2 = +1), P(q1, x2 = -1)]` of one negative-result circuit.
///
/// System starts in `I/2`, ancilla in `|0>`. After the controlled gate the
/// system precesses through `theta` and both qubits are read out in the
/// computational basis; only runs with an unflipped ancilla are kept.
pub fn inrm_rows(theta: f64, variant: InrmVariant) -> [f64; 2] {
    // Qubit order: system, ancilla.
    let p0 = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
    let p1 = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE]);
    let id = CMatrix::identity(2, 2);
    let x = pauli_x();
    let controlled = match variant {
        InrmVariant::Cnot => kron(&p0, &id) + kron(&p1, &x),
        InrmVariant::AntiCnot => kron(&p0, &x) + kron(&p1, &id),
    };
    let rho = kron(&maximally_mixed(), &p0);
    let rho = &controlled * rho * controlled.adjoint();
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let rot = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(c, 0.0),
            C64::new(0.0, -s),
            C64::new(0.0, -s),
            C64::new(c, 0.0),
        ],
    );
    let u = kron(&rot, &id);
    let rho = &u * rho * u.adjoint();
    // Diagonal index = 2 * system + ancilla; ancilla 0 = unflipped.
    [rho[(0, 0)].re, rho[(2, 2)].re]
}

/// Merges the kept rows of both circuits into a full two-time table.
pub fn inrm_jp(theta: f64) -> ProbabilityTable {
    let a = inrm_rows(theta, InrmVariant::Cnot);
    let b = inrm_rows(theta, InrmVariant::AntiCnot);
    ProbabilityTable::new(2, vec![a[0], a[1], b[0], b[1]]).expect("circuit output is normalized")
}

pub fn shannon(p: &ProbabilityTable) -> f64 {
    shannon_of(p.values())
}

fn shannon_of(values: &[f64]) -> f64 {
    values
        .iter()
        .map(|&p| if p < PROB_CLAMP { 0.0 } else { -p * p.log2() })
        .sum()
}

/// `H(Q_2 | Q_1)` for the two-time table at angle `theta`.
pub fn conditional_entropy(theta: f64) -> f64 {
    let joint = two_time_table(theta);
    let first = marginalize(&joint, 1).expect("arity 2");
    shannon(&joint) - shannon(&first)
}

/// `D_n(theta) = (n - 1) H[theta / (n - 1)] - H[theta]`.
pub fn information_deficit(theta: f64, n_measurements: usize) -> Result<f64> {
    if n_measurements < 3 {
        return Err(Error::invalid(
            "information deficit needs at least 3 measurements",
        ));
    }
    let m = (n_measurements - 1) as f64;
    Ok(m * conditional_entropy(theta / m) - conditional_entropy(theta))
}

/// Sums out outcome `drop` (zero-based).
pub fn marginalize(p: &ProbabilityTable, drop: usize) -> Result<ProbabilityTable> {
    if p.arity < 2 {
        return Err(Error::invalid("cannot marginalize a one-outcome table"));
    }
    if drop >= p.arity {
        return Err(Error::invalid(format!(
            "drop index {drop} out of range for arity {}",
            p.arity
        )));
    }
    let k = p.arity;
    let mut values = vec![0.0; 1 << (k - 1)];
    for (idx, &v) in p.values.iter().enumerate() {
        let bit = k - 1 - drop;
        let high = idx >> (bit + 1);
        let low = idx & ((1 << bit) - 1);
        values[(high << bit) | low] += v;
    }
    ProbabilityTable::new(k - 1, values)
}

/// `P(x) = 1/8 sum_n x1^n1 x2^n2 x3^n3 mu_n`; no clipping.
pub fn invert_moments(m: &MomentSet) -> ProbabilityTable {
    let mut values = vec![0.0; 8];
    for (idx, v) in values.iter_mut().enumerate() {
        let x = [
            if idx & 4 != 0 { -1.0 } else { 1.0 },
            if idx & 2 != 0 { -1.0 } else { 1.0 },
            if idx & 1 != 0 { -1.0 } else { 1.0 },
        ];
        *v = (0..8)
            .map(|n| {
                let w: f64 = (0..3)
                    .map(|i| if (n >> (2 - i)) & 1 == 1 { x[i] } else { 1.0 })
                    .product();
                w * m.values[n]
            })
            .sum::<f64>()
            / 8.0;
    }
    ProbabilityTable { arity: 3, values }
}

/// `mu_n = sum_x x1^n1 x2^n2 x3^n3 P(x)`.
pub fn moments_of(p: &ProbabilityTable) -> Result<MomentSet> {
    if p.arity != 3 {
        return Err(Error::invalid("moments need a three-outcome table"));
    }
    let mut values = [0.0; 8];
    for (n, mu) in values.iter_mut().enumerate() {
        *mu = p
            .values
            .iter()
            .enumerate()
            .map(|(idx, &pv)| {
                let x = p.outcomes_of(idx);
                let w: f64 = (0..3)
                    .map(|i| {
                        if (n >> (2 - i)) & 1 == 1 {
                            x[i] as f64
                        } else {
                            1.0
                        }
                    })
                    .product();
                w * pv
            })
            .sum();
    }
    values[0] = 1.0;
    MomentSet::new(values)
}

/// `Tr(X_k ... X_1 rho)` from the ancilla coherence after a chain of
/// ancilla-controlled `X_i` gates on `|+>|rho>`: `<sx> + i <sy>`.
pub fn moussa_correlator(times: &[f64], omega: f64, rho_in: &CMatrix) -> Result<C64> {
    if times.is_empty() || times.len() > 3 {
        return Err(Error::invalid(
            "the ancilla protocol takes 1 to 3 observables",
        ));
    }
    check_density(rho_in)?;
    // Qubit order: ancilla, system.
    let plus = CMatrix::from_element(2, 2, C64::new(0.5, 0.0));
    let mut rho = kron(&plus, rho_in);
    let p0 = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
    let p1 = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE]);
    for &t in times {
        let cu = kron(&p0, &CMatrix::identity(2, 2)) + kron(&p1, &observable(omega, t));
        rho = &cu * rho * cu.adjoint();
    }
    let anc = crate::quantum::partial_trace_keep(&rho, 2, &[0]);
    let ix = (&anc * pauli_x()).trace();
    let iy = (&anc * pauli_y()).trace();
    Ok(ix + C64::new(0.0, 1.0) * iy)
}

/// Real part of the correlator: the moment `<X_1 ... X_k>` used for inversion.
pub fn moussa_moments(times: &[f64], omega: f64, rho_in: &CMatrix) -> Result<f64> {
    Ok(moussa_correlator(times, omega, rho_in)?.re)
}

/// All eight moments for instants `0, dt, 2 dt` with `theta = omega dt`.
pub fn quantum_moments(theta: f64) -> Result<MomentSet> {
    let t = [0.0, theta, 2.0 * theta];
    let rho = maximally_mixed();
    let mut values = [0.0; 8];
    values[0] = 1.0;
    for (n, v) in values.iter_mut().enumerate().skip(1) {
        let picked: Vec<f64> = (0..3)
            .filter(|i| (n >> (2 - i)) & 1 == 1)
            .map(|i| t[i])
            .collect();
        *v = moussa_moments(&picked, 1.0, &rho)?;
    }
    MomentSet::new(values)
}

/// Direct three-time table at equal steps `theta`, maximally mixed input.
pub fn direct_three_time(theta: f64) -> Result<ProbabilityTable> {
    if theta <= 0.0 {
        // Zero step: measurements coincide and the chain is perfectly correlated.
        let mut v = vec![0.0; 8];
        v[0] = 0.5;
        v[7] = 0.5;
        return ProbabilityTable::new(3, v);
    }
    sequential_jp(&[0.0, theta, 2.0 * theta], 1.0, &maximally_mixed())
}

/// `theta_i = i * theta_max / (points - 1)`.
pub fn theta_grid(theta_max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !theta_max.is_finite() || theta_max <= 0.0 {
        return Err(Error::invalid(
            "theta grid needs >= 2 points and a positive finite maximum",
        ));
    }
    Ok((0..points)
        .map(|i| theta_max * i as f64 / (points - 1) as f64)
        .collect())
}
