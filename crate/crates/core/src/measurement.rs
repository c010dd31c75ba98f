//! Single-quantum spectral lines and the additive readout noise model.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quantum::{CMatrix, DeviationDensityMatrix};

/// One resolved transition: spin `spin` flips while the other spins sit in
/// the state whose bits, read in spin order, give `nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub experiment: usize,
    pub spin: usize,
    pub nu: usize,
    pub r: f64,
    pub s: f64,
}

/// Line amplitudes ordered by experiment, then spin, then `nu`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralReadout {
    pub lines: Vec<Line>,
}

impl SpectralReadout {
    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Concatenates per-experiment readouts, relabeling experiment `k` by list position.
    pub fn concat(parts: &[SpectralReadout]) -> Self {
        let lines = parts
            .iter()
            .enumerate()
            .flat_map(|(k, p)| {
                p.lines.iter().map(move |l| Line {
                    experiment: k,
                    ..*l
                })
            })
            .collect();
        Self { lines }
    }

    pub fn with_experiment(mut self, k: usize) -> Self {
        for l in &mut self.lines {
            l.experiment = k;
        }
        self
    }

    pub fn r_values(&self) -> Vec<f64> {
        self.lines.iter().map(|l| l.r).collect()
    }

    pub fn s_values(&self) -> Vec<f64> {
        self.lines.iter().map(|l| l.s).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub eta: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(eta: f64, seed: u64) -> Result<Self> {
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::invalid(format!(
                "noise eta must be finite and >= 0, got {eta}"
            )));
        }
        Ok(Self { eta, seed })
    }

    pub fn none() -> Self {
        Self { eta: 0.0, seed: 0 }
    }
}

/// Basis indices `(j_nu, j'_nu)` of the transition of `spin` labelled `nu`.
#[inline]
pub fn transition_indices(spin: usize, nu: usize, n: usize) -> (usize, usize) {
    let low_bits = n - 1 - spin;
    let high = nu >> low_bits;
    let low = nu & ((1 << low_bits) - 1);
    let a = (high << (low_bits + 1)) | low;
    (a, a | (1 << low_bits))
}

/// Reads every single-quantum element of `rho` as a line amplitude.
pub fn single_quantum_lines(
    rho: &DeviationDensityMatrix,
    n_spins: usize,
) -> Result<SpectralReadout> {
    lines_of_matrix(rho.matrix(), n_spins)
}

pub(crate) fn lines_of_matrix(m: &CMatrix, n: usize) -> Result<SpectralReadout> {
    if n == 0 || m.nrows() != 1 << n || !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: 1usize << n,
            found: m.nrows(),
        });
    }
    let half = 1usize << (n - 1);
    let mut lines = Vec::with_capacity(n * half);
    for spin in 0..n {
        for nu in 0..half {
            let (a, b) = transition_indices(spin, nu, n);
            let z = m[(a, b)];
            lines.push(Line {
                experiment: 0,
                spin,
                nu,
                r: z.re,
                s: z.im,
            });
        }
    }
    Ok(SpectralReadout { lines })
}

/// Adds independent uniform noise in `[-eta, eta]` to every R and S.
pub fn add_noise(readout: &SpectralReadout, noise: NoiseSpec) -> SpectralReadout {
    if noise.eta == 0.0 {
        return readout.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let eta = noise.eta;
    let lines = readout
        .lines
        .iter()
        .map(|l| Line {
            r: l.r + rng.random_range(-eta..=eta),
            s: l.s + rng.random_range(-eta..=eta),
            ..*l
        })
        .collect();
    SpectralReadout { lines }
}

pub fn diagonal_populations(rho: &DeviationDensityMatrix) -> DVector<f64> {
    rho.matrix().diagonal().map(|z| z.re)
}

/// CSV with columns `experiment_k,spin_j,nu,R,S`, 17 significant digits.
pub fn readout_to_csv(readout: &SpectralReadout) -> String {
    let mut out = String::from("experiment_k,spin_j,nu,R,S\n");
    for l in &readout.lines {
        out.push_str(&format!(
            "{},{},{},{:.16e},{:.16e}\n",
            l.experiment, l.spin, l.nu, l.r, l.s
        ));
    }
    out
}

/// Parses the CSV form; lines starting with `#` are comments.
pub fn readout_from_csv(text: &str) -> Result<SpectralReadout> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::invalid(format!("readout csv: {e}")))?
        .clone();
    let expected = ["experiment_k", "spin_j", "nu", "R", "S"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::invalid(format!(
            "readout csv header must be {}, got {}",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut lines = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::invalid(format!("readout csv row {}: {e}", i + 1)))?;
        let field = |c: usize| -> Result<&str> {
            rec.get(c).ok_or_else(|| {
                Error::invalid(format!(
                    "readout csv row {}: missing {}",
                    i + 1,
                    expected[c]
                ))
            })
        };
        let int = |c: usize| -> Result<usize> {
            field(c)?.parse().map_err(|e| {
                Error::invalid(format!("readout csv row {} {}: {e}", i + 1, expected[c]))
            })
        };
        let real = |c: usize| -> Result<f64> {
            field(c)?.parse().map_err(|e| {
                Error::invalid(format!("readout csv row {} {}: {e}", i + 1, expected[c]))
            })
        };
        lines.push(Line {
            experiment: int(0)?,
            spin: int(1)?,
            nu: int(2)?,
            r: real(3)?,
            s: real(4)?,
        });
    }
    Ok(SpectralReadout { lines })
}
