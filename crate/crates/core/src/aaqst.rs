//! Ancilla-assisted state tomography.
//!
//! Spins tagged `aaqst-ancilla` start maximally mixed; all other spins form
//! the tomographed register, taken in index order. A single spectrum of the
//! whole register gives `n_tot * 2^n_tot` real observables per experiment.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ga::{self, GaConfig};
use crate::measurement::{single_quantum_lines, transition_indices, Line, SpectralReadout};
use crate::quantum::{
    compose_pulse_program, evolve, spin_bit, CMatrix, DeviationDensityMatrix, ProgramStep,
    PulseSpec, SpinRole, SpinSystem, UnitaryOp, C64, ZERO,
};

const SVD_CUTOFF: f64 = 1e-10;
const RANK_THRESHOLD: f64 = 1e-8;
const SINGULAR_THRESHOLD: f64 = 1e-12;

/// A real unknown of the deviation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unknown {
    /// `rho_mm`, for `m < N - 1`.
    Diag(usize),
    /// `Re rho_mm'`, `m < m'`.
    Re(usize, usize),
    /// `Im rho_mm'`, `m < m'`.
    Im(usize, usize),
}

impl fmt::Display for Unknown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unknown::Diag(m) => write!(f, "rho_{m}{m}"),
            Unknown::Re(a, b) => write!(f, "R_{a}{b}"),
            Unknown::Im(a, b) => write!(f, "S_{a}{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    Re,
    Im,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RowLabel {
    pub experiment: usize,
    pub spin: usize,
    pub nu: usize,
    pub part: Part,
}

/// Unknown ordering: diagonals, then real parts, then imaginary parts.
pub fn unknowns(n_system: usize) -> Vec<Unknown> {
    let dim = 1usize << n_system;
    let mut out: Vec<Unknown> = (0..dim - 1).map(Unknown::Diag).collect();
    let pairs: Vec<(usize, usize)> = (0..dim)
        .flat_map(|a| ((a + 1)..dim).map(move |b| (a, b)))
        .collect();
    out.extend(pairs.iter().map(|&(a, b)| Unknown::Re(a, b)));
    out.extend(pairs.iter().map(|&(a, b)| Unknown::Im(a, b)));
    out
}

/// Sparse entries `(row, col, value)` of the basis matrix for one unknown.
fn unit_matrix(u: Unknown, dim: usize) -> Vec<(usize, usize, C64)> {
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match u {
        Unknown::Diag(m) => vec![(m, m, one), (dim - 1, dim - 1, -one)],
        Unknown::Re(a, b) => vec![(a, b, one), (b, a, one)],
        Unknown::Im(a, b) => vec![(a, b, i), (b, a, -i)],
    }
}

/// Which full-register spins are tomographed and which are mixed ancillas.
#[derive(Debug, Clone, PartialEq)]
struct Layout {
    n_total: usize,
    system: Vec<usize>,
    ancilla: Vec<usize>,
}

impl Layout {
    fn of(system: &SpinSystem) -> Result<Self> {
        let ancilla = system.spins_with_role(SpinRole::AaqstAncilla);
        let sys: Vec<usize> = (0..system.n_spins())
            .filter(|k| !ancilla.contains(k))
            .collect();
        if sys.is_empty() {
            return Err(Error::InvalidSystem(
                "no tomographed spins: every spin is an aaqst-ancilla".into(),
            ));
        }
        Ok(Self {
            n_total: system.n_spins(),
            system: sys,
            ancilla,
        })
    }

    fn full_index(&self, sys_idx: usize, anc_idx: usize) -> usize {
        let (ns, na, n) = (self.system.len(), self.ancilla.len(), self.n_total);
        let mut idx = 0;
        for (i, &q) in self.system.iter().enumerate() {
            idx |= spin_bit(sys_idx, i, ns) << (n - 1 - q);
        }
        for (i, &q) in self.ancilla.iter().enumerate() {
            idx |= spin_bit(anc_idx, i, na) << (n - 1 - q);
        }
        idx
    }

    /// Sparse form of `rho (x) I / N_anc` in full-register ordering.
    fn embed(&self, entries: &[(usize, usize, C64)]) -> Vec<(usize, usize, C64)> {
        let n_anc = 1usize << self.ancilla.len();
        let w = 1.0 / n_anc as f64;
        let mut out = Vec::with_capacity(entries.len() * n_anc);
        for &(a, b, v) in entries {
            for e in 0..n_anc {
                out.push((self.full_index(a, e), self.full_index(b, e), v * w));
            }
        }
        out
    }
}

/// Embeds a tomographed-register deviation matrix into the full register.
pub fn embed_with_mixed_ancilla(
    system: &SpinSystem,
    rho: &DeviationDensityMatrix,
) -> Result<DeviationDensityMatrix> {
    let layout = Layout::of(system)?;
    if rho.dim() != 1 << layout.system.len() {
        return Err(Error::DimensionMismatch {
            expected: 1 << layout.system.len(),
            found: rho.dim(),
        });
    }
    let d = rho.dim();
    let entries: Vec<(usize, usize, C64)> = (0..d)
        .flat_map(|a| (0..d).map(move |b| (a, b)))
        .map(|(a, b)| (a, b, rho.matrix()[(a, b)]))
        .filter(|(_, _, v)| *v != ZERO)
        .collect();
    let full = 1usize << layout.n_total;
    let mut m = CMatrix::zeros(full, full);
    for (a, b, v) in layout.embed(&entries) {
        m[(a, b)] += v;
    }
    DeviationDensityMatrix::new(m)
}

/// Real linear map from the `N^2 - 1` unknowns to the observed line amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    entries: DMatrix<f64>,
    column_map: Vec<Unknown>,
    row_map: Vec<RowLabel>,
    n_system: usize,
    n_total: usize,
    experiments: usize,
}

impl ConstraintMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
    pub fn column_map(&self) -> &[Unknown] {
        &self.column_map
    }
    pub fn row_map(&self) -> &[RowLabel] {
        &self.row_map
    }
    pub fn n_system(&self) -> usize {
        self.n_system
    }
    pub fn n_total(&self) -> usize {
        self.n_total
    }
    pub fn experiments(&self) -> usize {
        self.experiments
    }

    /// Wraps an arbitrary real matrix with generic labels.
    pub fn from_entries(entries: DMatrix<f64>) -> Self {
        let rows = entries.nrows();
        Self {
            column_map: (0..entries.ncols()).map(Unknown::Diag).collect(),
            row_map: (0..rows)
                .map(|r| RowLabel {
                    experiment: 0,
                    spin: 0,
                    nu: r,
                    part: Part::Re,
                })
                .collect(),
            n_system: 0,
            n_total: 0,
            experiments: 1,
            entries,
        }
    }

    fn singular_values(&self) -> Vec<f64> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        let mut s: Vec<f64> = self
            .entries
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Numerical rank with threshold `1e-8 * sigma_max`.
    pub fn rank(&self) -> usize {
        let s = self.singular_values();
        match s.first() {
            Some(&max) if max > 0.0 => s.iter().filter(|&&x| x > RANK_THRESHOLD * max).count(),
            _ => 0,
        }
    }
}

/// Builds the constraint matrix for experiments `U_1..U_K` on the full register.
pub fn build_constraint_matrix(
    system: &SpinSystem,
    unitaries: &[UnitaryOp],
) -> Result<ConstraintMatrix> {
    let layout = Layout::of(system)?;
    if unitaries.is_empty() {
        return Err(Error::invalid(
            "at least one experiment unitary is required",
        ));
    }
    let full = 1usize << layout.n_total;
    for u in unitaries {
        if u.dim() != full {
            return Err(Error::DimensionMismatch {
                expected: full,
                found: u.dim(),
            });
        }
    }
    let n_sys = layout.system.len();
    let dim = 1usize << n_sys;
    let n = layout.n_total;
    let half = full / 2;
    let lines_per_exp = n * half;
    let k_count = unitaries.len();
    let column_map = unknowns(n_sys);
    let r_rows = k_count * lines_per_exp;

    let mut entries = DMatrix::<f64>::zeros(2 * r_rows, column_map.len());
    let transitions: Vec<(usize, usize)> = (0..n)
        .flat_map(|spin| (0..half).map(move |nu| transition_indices(spin, nu, n)))
        .collect();

    for (k, u) in unitaries.iter().enumerate() {
        let um = u.matrix();
        for (c, &unk) in column_map.iter().enumerate() {
            let embedded = layout.embed(&unit_matrix(unk, dim));
            for (l, &(p, q)) in transitions.iter().enumerate() {
                // (U rho U^dagger)[p, q] for sparse rho.
                let z: C64 = embedded
                    .iter()
                    .map(|&(a, b, v)| um[(p, a)] * v * um[(q, b)].conj())
                    .sum();
                let row = k * lines_per_exp + l;
                entries[(row, c)] = z.re;
                entries[(r_rows + row, c)] = z.im;
            }
        }
    }

    let mut row_map = Vec::with_capacity(2 * r_rows);
    for part in [Part::Re, Part::Im] {
        for experiment in 0..k_count {
            for spin in 0..n {
                for nu in 0..half {
                    row_map.push(RowLabel {
                        experiment,
                        spin,
                        nu,
                        part,
                    });
                }
            }
        }
    }

    Ok(ConstraintMatrix {
        entries,
        column_map,
        row_map,
        n_system: n_sys,
        n_total: n,
        experiments: k_count,
    })
}

/// `sigma_max / sigma_min` over the `N^2 - 1` singular values; `+inf` when singular.
pub fn condition_number(m: &ConstraintMatrix) -> f64 {
    let s = m.singular_values();
    let cols = m.entries.ncols();
    if s.len() < cols || s.is_empty() {
        return f64::INFINITY;
    }
    let (max, min) = (s[0], s[cols - 1]);
    if !(max > 0.0) || min < SINGULAR_THRESHOLD * max {
        return f64::INFINITY;
    }
    max / min
}

/// Smallest K with `K * n_tot * 2^n_tot >= 4^n - 1`.
pub fn min_experiments(n_system: usize, n_ancilla: usize) -> Result<usize> {
    if n_system == 0 {
        return Err(Error::invalid("n_system must be at least 1"));
    }
    let n_tot = n_system + n_ancilla;
    if n_tot >= 31 {
        return Err(Error::invalid("register too large"));
    }
    let unknowns = (1u64 << (2 * n_system)) - 1;
    let per_scan = n_tot as u64 * (1u64 << n_tot);
    Ok(unknowns.div_ceil(per_scan) as usize)
}

/// Noiseless line readout of every experiment for a register state: the
/// ancillas are mixed in, each unitary applied, and the spectra concatenated.
pub fn simulate_readout(
    system: &SpinSystem,
    register: &DeviationDensityMatrix,
    unitaries: &[UnitaryOp],
) -> Result<SpectralReadout> {
    let full = embed_with_mixed_ancilla(system, register)?;
    let parts = unitaries
        .iter()
        .map(|u| single_quantum_lines(&evolve(&full, u)?, system.n_spins()))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralReadout::concat(&parts))
}

/// Least-squares reconstruction of the tomographed deviation matrix.
pub fn reconstruct_state(
    m: &ConstraintMatrix,
    readout: &SpectralReadout,
) -> Result<DeviationDensityMatrix> {
    let rows = m.entries.nrows();
    if readout.len() * 2 != rows {
        return Err(Error::DimensionMismatch {
            expected: rows / 2,
            found: readout.len(),
        });
    }
    let lookup: HashMap<(usize, usize, usize), &Line> = readout
        .lines
        .iter()
        .map(|l| ((l.experiment, l.spin, l.nu), l))
        .collect();
    if lookup.len() != readout.len() {
        return Err(Error::invalid(
            "readout contains duplicate (experiment, spin, nu) labels",
        ));
    }
    let mut b = DVector::<f64>::zeros(rows);
    for (i, lab) in m.row_map.iter().enumerate() {
        let line = lookup
            .get(&(lab.experiment, lab.spin, lab.nu))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "readout is missing line experiment={} spin={} nu={}",
                    lab.experiment, lab.spin, lab.nu
                ))
            })?;
        b[i] = match lab.part {
            Part::Re => line.r,
            Part::Im => line.s,
        };
    }

    let required = m.column_map.len();
    let rank = m.rank();
    if rank < required {
        return Err(Error::RankDeficient { rank, required });
    }
    let svd = m.entries.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let x = svd
        .solve(&b, SVD_CUTOFF * smax)
        .map_err(|e| Error::Numerical(format!("SVD solve failed: {e}")))?;
    Ok(assemble(&m.column_map, x.as_slice(), 1 << m.n_system))
}

fn assemble(columns: &[Unknown], x: &[f64], dim: usize) -> DeviationDensityMatrix {
    let mut rho = CMatrix::zeros(dim, dim);
    let mut diag_sum = 0.0;
    for (&u, &v) in columns.iter().zip(x) {
        match u {
            Unknown::Diag(k) => {
                rho[(k, k)] = C64::new(v, 0.0);
                diag_sum += v;
            }
            Unknown::Re(a, b) => {
                rho[(a, b)].re = v;
                rho[(b, a)].re = v;
            }
            Unknown::Im(a, b) => {
                rho[(a, b)].im = v;
                rho[(b, a)].im = -v;
            }
        }
    }
    rho[(dim - 1, dim - 1)] = C64::new(-diag_sum, 0.0);
    DeviationDensityMatrix::from_unchecked(rho)
}

/// Real unknown vector of a deviation matrix, in `unknowns` order.
pub fn unknown_vector(rho: &DeviationDensityMatrix) -> DVector<f64> {
    let cols = unknowns(rho.n_qubits());
    DVector::from_iterator(
        cols.len(),
        cols.iter().map(|u| match *u {
            Unknown::Diag(k) => rho.matrix()[(k, k)].re,
            Unknown::Re(a, b) => rho.matrix()[(a, b)].re,
            Unknown::Im(a, b) => rho.matrix()[(a, b)].im,
        }),
    )
}

/// One step of a parameterized pulse program.
#[derive(Debug, Clone, PartialEq)]
pub enum TemplateStep {
    Pulse(PulseSpec),
    /// Delay given by the free parameter with this index.
    Param(usize),
    Fixed(f64),
}

/// Parameterized family of experiment unitaries.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryModel {
    experiments: Vec<Vec<TemplateStep>>,
    names: Vec<String>,
    bounds: Vec<(f64, f64)>,
    defaults: Vec<Option<f64>>,
}

impl UnitaryModel {
    pub fn new(
        experiments: Vec<Vec<TemplateStep>>,
        names: Vec<String>,
        bounds: Vec<(f64, f64)>,
        defaults: Vec<Option<f64>>,
    ) -> Result<Self> {
        if experiments.is_empty() {
            return Err(Error::invalid("model has no experiments"));
        }
        if names.is_empty() {
            return Err(Error::invalid("model has no free parameters"));
        }
        if names.len() != bounds.len() || names.len() != defaults.len() {
            return Err(Error::invalid(
                "model parameter names, bounds and defaults differ in length",
            ));
        }
        for (name, &(lo, hi)) in names.iter().zip(&bounds) {
            if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || lo > hi {
                return Err(Error::invalid(format!(
                    "parameter {name}: bounds must be finite with 0 <= min <= max, got [{lo}, {hi}]"
                )));
            }
        }
        for (name, (d, &(lo, hi))) in names.iter().zip(defaults.iter().zip(&bounds)) {
            if let Some(v) = d {
                if !(lo..=hi).contains(v) {
                    return Err(Error::invalid(format!(
                        "parameter {name}: value {v} outside [{lo}, {hi}]"
                    )));
                }
            }
        }
        for step in experiments.iter().flatten() {
            match step {
                TemplateStep::Param(i) if *i >= names.len() => {
                    return Err(Error::invalid(format!(
                        "template references unknown parameter index {i}"
                    )));
                }
                TemplateStep::Fixed(t) if !(*t >= 0.0) => {
                    return Err(Error::invalid(format!("fixed delay {t} must be >= 0")));
                }
                _ => {}
            }
        }
        Ok(Self {
            experiments,
            names,
            bounds,
            defaults,
        })
    }

    pub fn n_params(&self) -> usize {
        self.names.len()
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }
    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }
    pub fn n_experiments(&self) -> usize {
        self.experiments.len()
    }

    /// Stored parameter values, if every parameter has one.
    pub fn default_params(&self) -> Option<Vec<f64>> {
        self.defaults.iter().copied().collect()
    }

    pub fn programs(&self, params: &[f64]) -> Result<Vec<Vec<ProgramStep>>> {
        if params.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                found: params.len(),
            });
        }
        Ok(self
            .experiments
            .iter()
            .map(|steps| {
                steps
                    .iter()
                    .map(|s| match s {
                        TemplateStep::Pulse(p) => ProgramStep::Pulse(p.clone()),
                        TemplateStep::Param(i) => ProgramStep::Delay(params[*i]),
                        TemplateStep::Fixed(t) => ProgramStep::Delay(*t),
                    })
                    .collect()
            })
            .collect())
    }

    pub fn unitaries(&self, system: &SpinSystem, params: &[f64]) -> Result<Vec<UnitaryOp>> {
        self.programs(params)?
            .iter()
            .map(|p| compose_pulse_program(system, p))
            .collect()
    }

    pub fn constraint_matrix(
        &self,
        system: &SpinSystem,
        params: &[f64],
    ) -> Result<ConstraintMatrix> {
        build_constraint_matrix(system, &self.unitaries(system, params)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimized {
    pub params: Vec<f64>,
    pub condition_number: f64,
    pub evaluations: usize,
}

/// Condition number of the model at `params`, `+inf` on any failure.
pub fn model_condition_number(system: &SpinSystem, model: &UnitaryModel, params: &[f64]) -> f64 {
    model
        .constraint_matrix(system, params)
        .map(|m| condition_number(&m))
        .unwrap_or(f64::INFINITY)
}

/// Genetic search for the delays minimizing the condition number.
pub fn optimize_delays(
    system: &SpinSystem,
    model: &UnitaryModel,
    budget: usize,
    seed: u64,
    cfg: &GaConfig,
) -> Result<Optimized> {
    // Surface structural errors before the search starts.
    let probe: Vec<f64> = model.bounds.iter().map(|b| b.0).collect();
    model.constraint_matrix(system, &probe)?;
    let r = ga::minimize(
        |p| model_condition_number(system, model, p),
        &model.bounds,
        budget,
        seed,
        cfg,
    )?;
    Ok(Optimized {
        params: r.params,
        condition_number: r.value,
        evaluations: r.evaluations,
    })
}
