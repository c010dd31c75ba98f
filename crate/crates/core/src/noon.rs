//! NOON-state phase amplification, diffusion attenuation and RF-inhomogeneity models.
//!
//! Gyromagnetic ratios are in rad/T/s, gradients in T/m, times in s and
//! diffusion constants in m^2/s.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::lsq::{levenberg_marquardt, LmOptions};
use crate::quantum::{spin_bit, SpinSystem, MAX_SPINS};

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gyromagnetic {
    #[serde(rename = "H1")]
    pub h1: f64,
    #[serde(rename = "C13")]
    pub c13: f64,
    #[serde(rename = "F19")]
    pub f19: f64,
    #[serde(rename = "P31")]
    pub p31: f64,
}

/// Bundled gyromagnetic ratios.
pub fn constants() -> &'static Gyromagnetic {
    static TABLE: OnceLock<Gyromagnetic> = OnceLock::new();
    TABLE.get_or_init(|| {
        toml::from_str(include_str!("../data/gyromagnetic.toml")).expect("bundled constants parse")
    })
}

/// One central `A` spin and `n_total - 1` equivalent `M` spins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarSystem {
    gamma_a: f64,
    gamma_m: f64,
    n_total: usize,
}

impl StarSystem {
    pub fn new(gamma_a: f64, gamma_m: f64, n_total: usize) -> Result<Self> {
        if n_total == 0 {
            return Err(Error::invalid(
                "a star system needs at least the central spin",
            ));
        }
        if !gamma_a.is_finite() || !gamma_m.is_finite() || gamma_a == 0.0 || gamma_m == 0.0 {
            return Err(Error::invalid(
                "gyromagnetic ratios must be finite and nonzero",
            ));
        }
        Ok(Self {
            gamma_a,
            gamma_m,
            n_total,
        })
    }

    /// Spin 0 is `A`; every other spin must share one gyromagnetic ratio.
    pub fn from_spin_system(sys: &SpinSystem) -> Result<Self> {
        let gammas = sys
            .gammas()
            .ok_or_else(|| Error::InvalidSystem("star system needs per-spin gammas".into()))?;
        let gamma_m = gammas.get(1).copied().unwrap_or(gammas[0]);
        if gammas[1..]
            .iter()
            .any(|g| (g - gamma_m).abs() > 1e-12 * gamma_m.abs())
        {
            return Err(Error::InvalidSystem(
                "star system needs equal gammas on all outer spins".into(),
            ));
        }
        Self::new(gammas[0], gamma_m, gammas.len())
    }

    pub fn gamma_a(&self) -> f64 {
        self.gamma_a
    }

    pub fn gamma_m(&self) -> f64 {
        self.gamma_m
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }
}

/// `(gamma_eff, g)` with `gamma_eff = gamma_A + (N - 1) gamma_M` and `g = gamma_eff / gamma_A`.
pub fn effective_gamma(sys: &StarSystem) -> (f64, f64) {
    let eff = sys.gamma_a + (sys.n_total - 1) as f64 * sys.gamma_m;
    (eff, eff / sys.gamma_a)
}

/// Phase difference across `dz` after a gradient pulse `g1` of length `delta`.
pub fn gradient_phase(gamma_eff: f64, dz: f64, g1: f64, delta: f64) -> f64 {
    gamma_eff * dz * g1 * delta
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionParams {
    pub d: f64,
    pub delta: f64,
    pub big_delta: f64,
    pub gamma_eff: f64,
}

impl DiffusionParams {
    pub fn new(d: f64, delta: f64, big_delta: f64, gamma_eff: f64) -> Result<Self> {
        check_timing(delta, big_delta, gamma_eff)?;
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::invalid("diffusion constant must be positive"));
        }
        Ok(Self {
            d,
            delta,
            big_delta,
            gamma_eff,
        })
    }
}

fn check_timing(delta: f64, big_delta: f64, gamma_eff: f64) -> Result<()> {
    for (name, v) in [
        ("delta", delta),
        ("Delta", big_delta),
        ("gamma_eff", gamma_eff),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    if big_delta <= delta / 3.0 {
        return Err(Error::invalid("diffusion delay must exceed delta / 3"));
    }
    Ok(())
}

/// `gamma^2 delta^2 (Delta - delta/3)`, the coefficient of `D G^2` in `-ln(S/S0)`.
fn attenuation_scale(delta: f64, big_delta: f64, gamma_eff: f64) -> f64 {
    gamma_eff * gamma_eff * delta * delta * (big_delta - delta / 3.0)
}

/// `S/S0 = exp(-gamma^2 G^2 delta^2 D (Delta - delta/3))`.
pub fn diffusion_signal(g1: f64, p: &DiffusionParams) -> f64 {
    (-attenuation_scale(p.delta, p.big_delta, p.gamma_eff) * p.d * g1 * g1).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionFit {
    pub d: f64,
    /// Standard error of `d`; absent for exactly two points.
    pub sigma_d: Option<f64>,
    /// Fitted `ln(S/S0)` at zero gradient.
    pub intercept: f64,
}

/// Straight-line fit of `ln S` against `G^2`.
pub fn fit_diffusion(
    points: &[(f64, f64)],
    delta: f64,
    big_delta: f64,
    gamma_eff: f64,
) -> Result<DiffusionFit> {
    check_timing(delta, big_delta, gamma_eff)?;
    if points.len() < 2 {
        return Err(Error::invalid("diffusion fit needs at least two points"));
    }
    if let Some((g, s)) = points
        .iter()
        .find(|(g, s)| !(*s > 0.0) || !s.is_finite() || !g.is_finite())
    {
        return Err(Error::invalid(format!(
            "diffusion signal must be positive and finite, got S = {s} at G = {g}"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|(g, _)| g * g).collect();
    let ys: Vec<f64> = points.iter().map(|(_, s)| s.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 1e-300) || sxx <= 1e-24 * xs.iter().map(|x| x * x).sum::<f64>() {
        return Err(Error::invalid("gradient values have no spread"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let scale = attenuation_scale(delta, big_delta, gamma_eff);
    let sigma_d = (points.len() > 2).then(|| {
        let rss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (n - 2.0) / sxx).sqrt() / scale
    });
    Ok(DiffusionFit {
        d: -slope / scale,
        sigma_d,
        intercept,
    })
}

/// Noisy samples `S (1 + rel_noise * N(0, 1))` at the given gradients.
pub fn synthetic_diffusion(
    p: &DiffusionParams,
    gradients: &[f64],
    rel_noise: f64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if !(rel_noise >= 0.0) || !rel_noise.is_finite() {
        return Err(Error::invalid("noise level must be finite and >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(gradients
        .iter()
        .map(|&g| {
            (
                g,
                diffusion_signal(g, p) * (1.0 + rel_noise * normal.sample(&mut rng)),
            )
        })
        .collect())
}

/// Asymmetric Lorentzian RF-amplitude distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfiProfile {
    pub nu0: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    /// Peak value, fixed so the density integrates to one on `[0, 3 nu0]`.
    pub a: f64,
}

impl RfiProfile {
    pub fn new(nu0: f64, lambda_minus: f64, lambda_plus: f64) -> Result<Self> {
        if !(nu0 > 0.0) || !(lambda_minus > 0.0) || !(lambda_plus > 0.0) {
            return Err(Error::invalid(
                "RFI profile needs nu0 > 0 and positive widths",
            ));
        }
        if ![nu0, lambda_minus, lambda_plus]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::invalid("RFI profile parameters must be finite"));
        }
        let area = nu0
            * (lambda_minus * (1.0 / lambda_minus).atan()
                + lambda_plus * (2.0 / lambda_plus).atan());
        Ok(Self {
            nu0,
            lambda_minus,
            lambda_plus,
            a: 1.0 / area,
        })
    }
}

fn lorentz_branch(nu: f64, nu0: f64, lm: f64, lp: f64) -> f64 {
    let u = 1.0 - nu / nu0;
    let l = if nu < nu0 { lm } else { lp };
    l * l / (u * u + l * l)
}

pub fn rfi_pdf(nu: f64, prof: &RfiProfile) -> f64 {
    if nu < 0.0 {
        return 0.0;
    }
    prof.a * lorentz_branch(nu, prof.nu0, prof.lambda_minus, prof.lambda_plus)
}

/// Half-width at half-maximum on each side of the peak, relative to `nu0`.
fn hwhm_guess(samples: &[(f64, f64)], nu0: f64) -> (f64, f64) {
    let peak = samples.iter().map(|s| s.1).fold(f64::MIN, f64::max);
    let half = peak / 2.0;
    let left = samples
        .iter()
        .filter(|(nu, p)| *nu < nu0 && *p >= half)
        .map(|s| s.0)
        .fold(f64::INFINITY, f64::min);
    let right = samples
        .iter()
        .filter(|(nu, p)| *nu >= nu0 && *p >= half)
        .map(|s| s.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let guard = |w: f64| if w.is_finite() && w > 1e-6 { w } else { 0.05 };
    (guard((nu0 - left) / nu0), guard((right - nu0) / nu0))
}

/// Fits `(lambda_-, lambda_+)` to `(nu, p)` samples about the nominal `nu0`.
///
/// The overall scale is a free parameter during the fit, so samples need
/// not share the `[0, 3 nu0]` normalization; the returned profile does.
pub fn rfi_fit(samples: &[(f64, f64)], nu0: f64) -> Result<RfiProfile> {
    if samples.len() < 16 {
        return Err(Error::invalid(format!(
            "RFI fit needs at least 16 samples, got {}",
            samples.len()
        )));
    }
    if !(nu0 > 0.0)
        || samples
            .iter()
            .any(|(n, p)| !n.is_finite() || !p.is_finite())
    {
        return Err(Error::invalid(
            "RFI samples and nu0 must be finite, nu0 positive",
        ));
    }
    let (lm, lp) = hwhm_guess(samples, nu0);
    let peak = samples.iter().map(|s| s.1).fold(f64::MIN, f64::max);
    let residuals = |x: &[f64]| -> Vec<f64> {
        let (scale, lm, lp) = (x[0].exp(), x[1].exp(), x[2].exp());
        samples
            .iter()
            .map(|&(nu, p)| (scale * lorentz_branch(nu, nu0, lm, lp) - p) / peak)
            .collect()
    };
    let out = levenberg_marquardt(
        residuals,
        &[peak.max(1e-300).ln(), lm.ln(), lp.ln()],
        &LmOptions::default(),
    )?;
    RfiProfile::new(nu0, out.params[1].exp(), out.params[2].exp())
}

/// Two-channel RFI correlation: `p = lambda0^2 / (d^2 + lambda0^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfiCorrProfile {
    pub lambda0: f64,
    /// `[lambda_-, lambda_+]` for the first channel.
    pub lambda_h: [f64; 2],
    /// `[lambda_-, lambda_+]` for the second channel.
    pub lambda_p: [f64; 2],
    pub nu0_h: f64,
    pub nu0_p: f64,
}

impl RfiCorrProfile {
    pub fn new(
        lambda0: f64,
        lambda_h: [f64; 2],
        lambda_p: [f64; 2],
        nu0_h: f64,
        nu0_p: f64,
    ) -> Result<Self> {
        let all = [
            lambda0,
            lambda_h[0],
            lambda_h[1],
            lambda_p[0],
            lambda_p[1],
            nu0_h,
            nu0_p,
        ];
        if all.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid(
                "RFI correlation parameters must be positive and finite",
            ));
        }
        Ok(Self {
            lambda0,
            lambda_h,
            lambda_p,
            nu0_h,
            nu0_p,
        })
    }
}

fn corr_value(
    nu_h: f64,
    nu_p: f64,
    l0: f64,
    lh: [f64; 2],
    lp: [f64; 2],
    nu0_h: f64,
    nu0_p: f64,
) -> f64 {
    let (x, y) = (nu_h / nu0_h, nu_p / nu0_p);
    let wh = if x < 1.0 { lh[0] } else { lh[1] };
    let wp = if y < 1.0 { lp[0] } else { lp[1] };
    let d2 = wh * (1.0 - x).powi(2) + wp * (1.0 - y).powi(2);
    l0 * l0 / (d2 + l0 * l0)
}

/// Quadrant-dependent squared distance
/// `d^2 = lambda^H (1 - nu_H/nu0_H)^2 + lambda^P (1 - nu_P/nu0_P)^2`,
/// with the `-` widths below the nominal amplitude and `+` at or above it.
pub fn rfi_corr_pdf(nu_h: f64, nu_p: f64, prof: &RfiCorrProfile) -> f64 {
    corr_value(
        nu_h,
        nu_p,
        prof.lambda0,
        prof.lambda_h,
        prof.lambda_p,
        prof.nu0_h,
        prof.nu0_p,
    )
}

/// Fits the four quadrant widths to `(nu_H, nu_P, p)` samples.
///
/// The model depends on the widths only through `lambda / lambda0^2`, so
/// `lambda0` cannot be recovered from data and is supplied as a gauge.
pub fn corr_fit(
    grid: &[(f64, f64, f64)],
    nu0_h: f64,
    nu0_p: f64,
    lambda0: f64,
) -> Result<RfiCorrProfile> {
    if grid.len() < 16 {
        return Err(Error::invalid(format!(
            "correlation fit needs at least 16 samples, got {}",
            grid.len()
        )));
    }
    RfiCorrProfile::new(lambda0, [1.0; 2], [1.0; 2], nu0_h, nu0_p)?;
    if grid
        .iter()
        .any(|(a, b, p)| !a.is_finite() || !b.is_finite() || !p.is_finite())
    {
        return Err(Error::invalid("correlation samples must be finite"));
    }
    // Isotropic start: median width implied by samples on the flanks.
    let mut implied: Vec<f64> = grid
        .iter()
        .filter(|(_, _, p)| *p > 0.2 && *p < 0.8)
        .filter_map(|&(h, q, p)| {
            let r2 = (1.0 - h / nu0_h).powi(2) + (1.0 - q / nu0_p).powi(2);
            (r2 > 0.0).then(|| lambda0 * lambda0 * (1.0 / p - 1.0) / r2)
        })
        .collect();
    implied.sort_by(f64::total_cmp);
    let start = implied.get(implied.len() / 2).copied().unwrap_or(1.0).ln();
    let residuals = |x: &[f64]| -> Vec<f64> {
        let lh = [x[0].exp(), x[1].exp()];
        let lp = [x[2].exp(), x[3].exp()];
        grid.iter()
            .map(|&(h, q, p)| corr_value(h, q, lambda0, lh, lp, nu0_h, nu0_p) - p)
            .collect()
    };
    let out = levenberg_marquardt(residuals, &[start; 4], &LmOptions::default())?;
    let x = &out.params;
    RfiCorrProfile::new(
        lambda0,
        [x[0].exp(), x[1].exp()],
        [x[2].exp(), x[3].exp()],
        nu0_h,
        nu0_p,
    )
}

/// Relative phase `(N - 1) phi_z` picked up by an `N`-spin NOON state when
/// the `N - 1` outer spins are rotated about z by `phi_z`.
pub fn noon_phase(n_total: usize, phi_z: f64) -> Result<f64> {
    if n_total < 2 {
        return Err(Error::invalid("a NOON state needs at least two spins"));
    }
    Ok((n_total - 1) as f64 * phi_z)
}

/// Same phase read off the `|1...1><0...0|` element after applying
/// `exp(-i phi_z sz / 2)` to spins `1..N` of `(|0...0> + |1...1>)/sqrt(2)`.
/// Returned in `(-pi, pi]`.
pub fn noon_phase_simulated(n_total: usize, phi_z: f64) -> Result<f64> {
    if n_total < 2 {
        return Err(Error::invalid("a NOON state needs at least two spins"));
    }
    if n_total > MAX_SPINS {
        return Err(Error::TooManySpins {
            n: n_total,
            cap: MAX_SPINS,
        });
    }
    let dim = 1usize << n_total;
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    psi[0] = amp;
    psi[dim - 1] = amp;
    for (m, c) in psi.iter_mut().enumerate() {
        let theta: f64 = (1..n_total)
            .map(|k| {
                if spin_bit(m, k, n_total) == 0 {
                    -phi_z / 2.0
                } else {
                    phi_z / 2.0
                }
            })
            .sum();
        *c *= Complex64::from_polar(1.0, theta);
    }
    let coherence = psi[dim - 1] * psi[0].conj();
    Ok(coherence.arg())
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}
