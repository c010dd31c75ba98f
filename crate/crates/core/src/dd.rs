//! Dynamical-decoupling sequences, filter functions and dephasing decay.
//!
//! All times are in seconds, angular frequencies in rad/s and pulse
//! amplitudes in Hz. A pulse of amplitude `a` and duration `d` is a pi
//! rotation when `a * d = 1/2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended::Df64;
use crate::quadrature;

pub const DEFAULT_TAU: f64 = 2e-6;
pub const DEFAULT_TAU_PI: f64 = 4.3e-6;
pub const DEFAULT_OMEGA_MIN: f64 = 1.0;
pub const DEFAULT_OMEGA_MAX: f64 = 1e8;

const TIME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "-x")]
    MinusX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Free,
    Cpmg,
    Cpmgp,
    Udd,
    Uddp,
    Rudd,
    Ruddp,
}

impl Scheme {
    fn alternated(self) -> Self {
        match self {
            Scheme::Cpmg => Scheme::Cpmgp,
            Scheme::Udd => Scheme::Uddp,
            Scheme::Rudd => Scheme::Ruddp,
            other => other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Free => "free",
            Scheme::Cpmg => "cpmg",
            Scheme::Cpmgp => "cpmgp",
            Scheme::Udd => "udd",
            Scheme::Uddp => "uddp",
            Scheme::Rudd => "rudd",
            Scheme::Ruddp => "ruddp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    /// Center time.
    pub t: f64,
    /// Duration; zero for an ideal instantaneous flip.
    pub dur: f64,
    /// Amplitude; zero when `dur` is zero.
    pub amp: f64,
    pub phase: Phase,
}

impl Pulse {
    pub fn pi(t: f64, dur: f64, phase: Phase) -> Self {
        let amp = if dur > 0.0 { 0.5 / dur } else { 0.0 };
        Self { t, dur, amp, phase }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DDSequence {
    scheme: Scheme,
    #[serde(rename = "T")]
    total_t: f64,
    pulses: Vec<Pulse>,
}

impl DDSequence {
    /// Validates ordering, overlap and placement of `pulses` inside `(0, total_t)`.
    pub fn new(scheme: Scheme, total_t: f64, pulses: Vec<Pulse>) -> Result<Self> {
        if !(total_t > 0.0) || !total_t.is_finite() {
            return Err(Error::invalid(format!(
                "total duration must be positive, got {total_t}"
            )));
        }
        for (j, p) in pulses.iter().enumerate() {
            if !p.t.is_finite() || !(p.dur >= 0.0) || !p.dur.is_finite() || !p.amp.is_finite() {
                return Err(Error::invalid(format!(
                    "pulse {} has non-finite or negative fields",
                    j + 1
                )));
            }
            if p.t <= 0.0 || p.t >= total_t {
                return Err(Error::invalid(format!(
                    "pulse {} center {} outside (0, T)",
                    j + 1,
                    p.t
                )));
            }
        }
        let gaps = edge_gaps(total_t, &pulses);
        if let Some((j, g)) = gaps
            .iter()
            .enumerate()
            .find(|(_, g)| **g < -TIME_TOL * total_t)
        {
            return Err(Error::NegativeSequenceDelay {
                scheme: scheme.as_str(),
                index: j + 1,
                value: *g,
            });
        }
        if pulses.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::invalid("pulse centers must be strictly increasing"));
        }
        Ok(Self {
            scheme,
            total_t,
            pulses,
        })
    }

    /// Free evolution of length `total_t` without pulses.
    pub fn free(total_t: f64) -> Result<Self> {
        Self::new(Scheme::Free, total_t, Vec::new())
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn total_t(&self) -> f64 {
        self.total_t
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn centers(&self) -> Vec<f64> {
        self.pulses.iter().map(|p| p.t).collect()
    }

    /// Free-evolution intervals between pulse edges, `N + 1` values.
    pub fn delays(&self) -> Vec<f64> {
        edge_gaps(self.total_t, &self.pulses)
    }

    /// Same timings with phases `x, -x, x, ...`.
    pub fn with_alternating_phase(mut self) -> Self {
        for (j, p) in self.pulses.iter_mut().enumerate() {
            p.phase = if j % 2 == 0 { Phase::X } else { Phase::MinusX };
        }
        self.scheme = self.scheme.alternated();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sequence serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: DDSequence = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("sequence JSON: {e}")))?;
        Self::new(raw.scheme, raw.total_t, raw.pulses)
    }
}

fn edge_gaps(total_t: f64, pulses: &[Pulse]) -> Vec<f64> {
    let mut gaps = Vec::with_capacity(pulses.len() + 1);
    let mut edge = 0.0;
    for p in pulses {
        gaps.push(p.t - p.dur / 2.0 - edge);
        edge = p.t + p.dur / 2.0;
    }
    gaps.push(total_t - edge);
    gaps
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("a DD sequence needs at least one pulse"));
    }
    Ok(())
}

/// `N` repetitions of `tau - pi - tau`, total `N (2 tau + tau_pi)`.
pub fn make_cpmg(n: usize, tau: f64, tau_pi: f64, alternate_phase: bool) -> Result<DDSequence> {
    check_count(n)?;
    if !(tau >= 0.0) || !(tau_pi > 0.0) || !tau.is_finite() || !tau_pi.is_finite() {
        return Err(Error::invalid("CPMG needs tau >= 0 and tau_pi > 0"));
    }
    let block = 2.0 * tau + tau_pi;
    let total = n as f64 * block;
    let pulses = (1..=n)
        .map(|j| Pulse::pi((2 * j - 1) as f64 * (tau + tau_pi / 2.0), tau_pi, Phase::X))
        .collect();
    let seq = DDSequence::new(Scheme::Cpmg, total, pulses)?;
    Ok(if alternate_phase {
        seq.with_alternating_phase()
    } else {
        seq
    })
}

/// Uhrig instants `t_j = T sin^2(pi j / (2N + 2))`.
pub fn udd_instants(n: usize, total_t: f64) -> Vec<f64> {
    (1..=n)
        .map(|j| total_t * (PI * j as f64 / (2 * n + 2) as f64).sin().powi(2))
        .collect()
}

fn checked_sequence(scheme: Scheme, total_t: f64, pulses: Vec<Pulse>) -> Result<DDSequence> {
    let gaps = edge_gaps(total_t, &pulses);
    if let Some((j, g)) = gaps
        .iter()
        .enumerate()
        .find(|(_, g)| **g < -TIME_TOL * total_t)
    {
        return Err(Error::NegativeSequenceDelay {
            scheme: scheme.as_str(),
            index: j + 1,
            value: *g,
        });
    }
    DDSequence::new(scheme, total_t, pulses)
}

pub fn make_udd(n: usize, total_t: f64, tau_pi: f64) -> Result<DDSequence> {
    check_count(n)?;
    if !(total_t > 0.0) || !(tau_pi >= 0.0) || !total_t.is_finite() || !tau_pi.is_finite() {
        return Err(Error::invalid("UDD needs T > 0 and tau_pi >= 0"));
    }
    let pulses = udd_instants(n, total_t)
        .into_iter()
        .map(|t| Pulse::pi(t, tau_pi, Phase::X))
        .collect();
    checked_sequence(Scheme::Udd, total_t, pulses)
}

/// Uhrig instants with durations `T sin(pi j/(N+1)) sin(theta_p)`, the first
/// (and last) pulse lasting `tau_pi_min`.
pub fn make_rudd(n: usize, total_t: f64, tau_pi_min: f64) -> Result<DDSequence> {
    check_count(n)?;
    if !(total_t > 0.0) || !(tau_pi_min > 0.0) || !total_t.is_finite() || !tau_pi_min.is_finite() {
        return Err(Error::invalid("RUDD needs T > 0 and tau_pi_min > 0"));
    }
    let base = (PI / (n + 1) as f64).sin();
    let sin_theta = tau_pi_min / (total_t * base);
    if sin_theta > 1.0 {
        return Err(Error::invalid(format!(
            "RUDD infeasible: sin(theta_p) = {sin_theta} > 1 for N = {n}, T = {total_t:e}, tau_pi = {tau_pi_min:e}"
        )));
    }
    let pulses = udd_instants(n, total_t)
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let j = i + 1;
            let dur = if j == 1 || j == n {
                tau_pi_min
            } else {
                total_t * (PI * j as f64 / (n + 1) as f64).sin() * sin_theta
            };
            Pulse::pi(t, dur, Phase::X)
        })
        .collect();
    checked_sequence(Scheme::Rudd, total_t, pulses)
}

/// `F(w) = |1 + (-1)^(N+1) e^{iwT} + 2 sum_j (-1)^j e^{i w t_j} cos(w d_j / 2)|^2`.
///
/// Summed in double-double: high-order sequences cancel the unit-sized terms
/// to many orders in `wT` at low frequency.
pub fn filter_function(seq: &DDSequence, omega: f64) -> f64 {
    let n = seq.pulses.len();
    let (s_end, c_end) = Df64::prod(omega, seq.total_t).sin_cos();
    let sign_end = if n.is_multiple_of(2) { -1.0 } else { 1.0 };
    let mut re = Df64::ONE + c_end * sign_end;
    let mut im = s_end * sign_end;
    for (i, p) in seq.pulses.iter().enumerate() {
        let sign = if (i + 1) % 2 == 0 { 2.0 } else { -2.0 };
        let (_, half) = (Df64::prod(omega, p.dur) * 0.5).sin_cos();
        let (s, c) = Df64::prod(omega, p.t).sin_cos();
        let amp = half * sign;
        re = re + amp * c;
        im = im + amp * s;
    }
    (re.sqr() + im.sqr()).to_f64()
}

/// `F(w) / w^2`, evaluated segment by segment so it stays finite at `w = 0`.
///
/// Between pulses the toggling sign is `+1, -1, ...`; during a pulse it is 0.
pub fn weighted_filter(seq: &DDSequence, omega: f64) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut start = 0.0;
    let mut sign = 1.0;
    let mut push = |a: f64, b: f64, sign: f64| {
        let half = 0.5 * (b - a);
        let x = omega * half;
        let sinc = if x.abs() < 1e-8 {
            1.0 - x * x / 6.0
        } else {
            x.sin() / x
        };
        acc += Complex64::from_polar(sign * (b - a) * sinc, omega * (a + half));
    };
    for p in &seq.pulses {
        push(start, p.t - p.dur / 2.0, sign);
        start = p.t + p.dur / 2.0;
        sign = -sign;
    }
    push(start, seq.total_t, sign);
    acc.norm_sqr()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectralDensity {
    /// `A exp(-w^2 / (2 sigma^2))`.
    Gaussian { sigma: f64, amplitude: f64 },
    /// `A / (1 + (w / gamma)^2)`.
    Lorentzian { gamma: f64, amplitude: f64 },
    /// `A` for `w <= w_c`, zero above.
    SharpCutoff { omega_c: f64, amplitude: f64 },
    /// Linear interpolation through `(w, S)` samples, zero outside.
    Tabulated { omega: Vec<f64>, value: Vec<f64> },
}

impl SpectralDensity {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            SpectralDensity::Gaussian {
                sigma: w,
                amplitude: a,
            }
            | SpectralDensity::Lorentzian {
                gamma: w,
                amplitude: a,
            }
            | SpectralDensity::SharpCutoff {
                omega_c: w,
                amplitude: a,
            } => *w > 0.0 && w.is_finite() && *a >= 0.0 && a.is_finite(),
            SpectralDensity::Tabulated { omega, value } => {
                omega.len() >= 2
                    && omega.len() == value.len()
                    && omega.windows(2).all(|w| w[1] > w[0])
                    && value.iter().all(|v| *v >= 0.0 && v.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("spectral density parameters must be finite, widths positive and values nonnegative"))
        }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        match self {
            SpectralDensity::Gaussian { sigma, amplitude } => {
                amplitude * (-omega * omega / (2.0 * sigma * sigma)).exp()
            }
            SpectralDensity::Lorentzian { gamma, amplitude } => {
                amplitude / (1.0 + (omega / gamma).powi(2))
            }
            SpectralDensity::SharpCutoff { omega_c, amplitude } => {
                if omega <= *omega_c {
                    *amplitude
                } else {
                    0.0
                }
            }
            SpectralDensity::Tabulated { omega: grid, value } => {
                if omega < grid[0] || omega > grid[grid.len() - 1] {
                    return 0.0;
                }
                let k = grid
                    .partition_point(|g| *g <= omega)
                    .clamp(1, grid.len() - 1);
                let (x0, x1) = (grid[k - 1], grid[k]);
                value[k - 1] + (value[k] - value[k - 1]) * (omega - x0) / (x1 - x0)
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            SpectralDensity::SharpCutoff { omega_c, .. } => vec![*omega_c],
            SpectralDensity::Tabulated { omega, .. } => omega.clone(),
            SpectralDensity::Gaussian { sigma, .. } => (1..=8).map(|k| k as f64 * sigma).collect(),
            SpectralDensity::Lorentzian { gamma, .. } => vec![*gamma],
        }
    }
}

fn panel_nodes(seq: &DDSequence, lo: f64, hi: f64, extra: &[f64]) -> Vec<f64> {
    // Panels no wider than an eighth of the slowest oscillation period in w.
    let step = 2.0 * PI / seq.total_t / 8.0;
    quadrature::seed_nodes(lo, hi, 16, Some(step), extra)
}

fn check_band(lo: f64, hi: f64) -> Result<()> {
    if !(lo > 0.0) || !hi.is_finite() || hi < lo {
        return Err(Error::invalid(format!(
            "frequency band must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// `int F(w)/w^2 dw` over `band`.
pub fn ff_area(seq: &DDSequence, band: (f64, f64)) -> Result<f64> {
    check_band(band.0, band.1)?;
    if band.0 == band.1 {
        return Ok(0.0);
    }
    let nodes = panel_nodes(seq, band.0, band.1, &[]);
    quadrature::integrate(
        |w| weighted_filter(seq, w),
        &nodes,
        quadrature::DEFAULT_REL_TOL,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decay {
    pub chi: f64,
    pub w: f64,
}

/// `chi = (2/pi) int S(w) F(w) / w^2 dw` over the default window, `W = exp(-chi)`.
pub fn coherence_decay(seq: &DDSequence, s: &SpectralDensity) -> Result<Decay> {
    coherence_decay_in(seq, s, (DEFAULT_OMEGA_MIN, DEFAULT_OMEGA_MAX))
}

pub fn coherence_decay_in(
    seq: &DDSequence,
    s: &SpectralDensity,
    band: (f64, f64),
) -> Result<Decay> {
    s.validate()?;
    check_band(band.0, band.1)?;
    if band.0 == band.1 {
        return Ok(Decay { chi: 0.0, w: 1.0 });
    }
    let nodes = panel_nodes(seq, band.0, band.1, &s.breakpoints());
    let integral = quadrature::integrate(
        |w| s.eval(w) * weighted_filter(seq, w),
        &nodes,
        quadrature::DEFAULT_REL_TOL,
    )?;
    let chi = 2.0 / PI * integral;
    Ok(Decay {
        chi,
        w: (-chi).exp(),
    })
}

/// Log-spaced `points` frequencies on `[lo, hi]` with their filter values.
pub fn filter_table(seq: &DDSequence, lo: f64, hi: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    check_band(lo, hi)?;
    if points < 2 {
        return Err(Error::invalid("a filter table needs at least 2 points"));
    }
    let ratio = (hi / lo).ln();
    Ok((0..points)
        .map(|i| {
            let w = lo * (ratio * i as f64 / (points - 1) as f64).exp();
            (w, filter_function(seq, w))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cpmg7() -> DDSequence {
        make_cpmg(7, DEFAULT_TAU, DEFAULT_TAU_PI, false).unwrap()
    }

    #[test]
    fn cpmg_layout() {
        let s = make_cpmg(1, 0.0, 1e-6, false).unwrap();
        assert_eq!(s.total_t(), 1e-6);
        assert_eq!(s.centers(), vec![0.5e-6]);
        let s = cpmg7();
        assert!((s.total_t() - 7.0 * 8.3e-6).abs() < 1e-18);
        let c = s.centers();
        // Layout oracle: tau, then pi, then 2 tau gaps.
        let mut t = DEFAULT_TAU + DEFAULT_TAU_PI / 2.0;
        for cj in &c {
            assert!((cj - t).abs() < 1e-18);
            t += 2.0 * DEFAULT_TAU + DEFAULT_TAU_PI;
        }
        let d = s.delays();
        assert!((d[0] - DEFAULT_TAU).abs() < 1e-18 && (d[7] - DEFAULT_TAU).abs() < 1e-18);
        assert!(d[1..7]
            .iter()
            .all(|g| (g - 2.0 * DEFAULT_TAU).abs() < 1e-18));
    }

    #[test]
    fn alternation() {
        let s = make_cpmg(5, 1e-6, 1e-6, true).unwrap();
        let phases: Vec<Phase> = s.pulses().iter().map(|p| p.phase).collect();
        assert_eq!(
            phases,
            vec![Phase::X, Phase::MinusX, Phase::X, Phase::MinusX, Phase::X]
        );
        assert_eq!(s.scheme(), Scheme::Cpmgp);
        assert_eq!(
            filter_function(&s, 3e5),
            filter_function(&make_cpmg(5, 1e-6, 1e-6, false).unwrap(), 3e5)
        );
    }

    #[test]
    fn udd_examples() {
        let s = make_udd(1, 1e-3, 0.0).unwrap();
        assert!((s.centers()[0] - 0.5e-3).abs() < 1e-18);
        let t = 60.2e-6;
        let s = make_udd(7, t, DEFAULT_TAU_PI).unwrap();
        let c = s.centers();
        for j in 0..7 {
            assert!((c[j] + c[6 - j] - t).abs() < 1e-15 * t);
        }
        match make_udd(8, t, DEFAULT_TAU_PI) {
            Err(Error::NegativeSequenceDelay { index, value, .. }) => {
                assert_eq!(index, 1);
                assert!(value < 0.0);
            }
            other => panic!("expected negative delay, got {other:?}"),
        }
    }

    #[test]
    fn rudd_examples() {
        let s = make_rudd(1, 1e-4, 3e-6).unwrap();
        assert_eq!(s.pulses()[0].dur, 3e-6);
        assert!((s.centers()[0] - 0.5e-4).abs() < 1e-18);
        let s = make_rudd(7, 60.2e-6, DEFAULT_TAU_PI).unwrap();
        assert_eq!(s.pulses()[0].dur, DEFAULT_TAU_PI);
        for p in s.pulses() {
            assert!((p.amp * p.dur - 0.5).abs() < 1e-12);
        }
        let d: Vec<f64> = s.pulses().iter().map(|p| p.dur).collect();
        for j in 0..7 {
            assert!((d[j] - d[6 - j]).abs() < 1e-12 * d[j]);
        }
        assert!(make_rudd(3, 1e-6, 1e-6).is_err());
        assert!(make_rudd(8, 60.2e-6, DEFAULT_TAU_PI).is_err());
    }

    #[test]
    fn filter_examples() {
        for s in [
            cpmg7(),
            make_udd(4, 3e-5, 1e-6).unwrap(),
            make_rudd(7, 60.2e-6, DEFAULT_TAU_PI).unwrap(),
        ] {
            assert!(filter_function(&s, 0.0) < 1e-28);
        }
        let t = 1e-4;
        let s = make_udd(1, t, 0.0).unwrap();
        for &w in &[1e3, 3.3e4, 2e5] {
            let expected = 16.0 * (w * t / 4.0).sin().powi(4);
            assert!((filter_function(&s, w) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_filter_limit_is_continuous() {
        let free = DDSequence::free(1e-4).unwrap();
        assert!((weighted_filter(&free, 0.0) - 1e-8).abs() < 1e-22);
        let s = DDSequence::new(
            Scheme::Udd,
            1e-4,
            vec![
                Pulse::pi(3e-5, 2e-6, Phase::X),
                Pulse::pi(5e-5, 1e-6, Phase::X),
            ],
        )
        .unwrap();
        // Signed segment area: 2.9e-5 - 1.85e-5 + 4.95e-5.
        let area: f64 = 2.9e-5 - 1.85e-5 + 4.95e-5;
        assert!((weighted_filter(&s, 0.0) - area * area).abs() < 1e-12 * area * area);
        for &w in &[1e2, 4e4, 3e6] {
            let direct = filter_function(&s, w) / (w * w);
            assert!((weighted_filter(&s, w) - direct).abs() < 1e-9 * direct);
        }
    }

    #[test]
    fn decay_examples() {
        let s = cpmg7();
        let zero = SpectralDensity::Gaussian {
            sigma: 1e5,
            amplitude: 0.0,
        };
        let d = coherence_decay(&s, &zero).unwrap();
        assert_eq!((d.chi, d.w), (0.0, 1.0));
        let g = SpectralDensity::Gaussian {
            sigma: 2e5,
            amplitude: 1e9,
        };
        let with_dd = coherence_decay(&s, &g).unwrap();
        let free = coherence_decay(&DDSequence::free(s.total_t()).unwrap(), &g).unwrap();
        assert!(with_dd.chi < free.chi);
        let g2 = SpectralDensity::Gaussian {
            sigma: 2e5,
            amplitude: 2e9,
        };
        let doubled = coherence_decay(&s, &g2).unwrap();
        assert!((doubled.chi - 2.0 * with_dd.chi).abs() < 1e-8 * doubled.chi);
    }

    #[test]
    fn degenerate_band() {
        assert_eq!(ff_area(&cpmg7(), (5e3, 5e3)).unwrap(), 0.0);
        assert!(ff_area(&cpmg7(), (0.0, 5e3)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = make_rudd(5, 50e-6, 4e-6).unwrap().with_alternating_phase();
        let back = DDSequence::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert!(s.to_json().contains("\"-x\""));
    }

    #[test]
    fn spectral_density_shapes() {
        let tab = SpectralDensity::Tabulated {
            omega: vec![1.0, 3.0],
            value: vec![2.0, 4.0],
        };
        assert_eq!(tab.eval(2.0), 3.0);
        assert_eq!(tab.eval(5.0), 0.0);
        let cut = SpectralDensity::SharpCutoff {
            omega_c: 10.0,
            amplitude: 1.5,
        };
        assert_eq!((cut.eval(10.0), cut.eval(10.1)), (1.5, 0.0));
        assert!(SpectralDensity::Lorentzian {
            gamma: -1.0,
            amplitude: 1.0
        }
        .validate()
        .is_err());
    }
}
