//! Adaptive Simpson integration over a seeded panel grid.

use crate::error::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-8;
const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[nodes[0], nodes[last]]`, refining each panel between
/// consecutive `nodes` independently.
///
/// `nodes` must be sorted ascending. The requested relative tolerance is
/// measured against a first composite-Simpson estimate and split evenly
/// across panels.
pub fn integrate<F>(f: F, nodes: &[f64], rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if nodes.len() < 2 {
        return Ok(0.0);
    }
    if nodes.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::invalid("quadrature nodes must be sorted and finite"));
    }
    let mut panels = Vec::with_capacity(nodes.len() - 1);
    let mut total = 0.0;
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b == a {
            continue;
        }
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        let s = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        if !s.is_finite() {
            return Err(Error::Numerical(format!(
                "integrand is not finite on [{a:e}, {b:e}]"
            )));
        }
        total += s;
        panels.push((a, b, fa, fm, fb, s));
    }
    if panels.is_empty() {
        return Ok(0.0);
    }
    let tol = (rel_tol * total.abs()).max(f64::MIN_POSITIVE) / panels.len() as f64;
    let mut sum = 0.0;
    for (a, b, fa, fm, fb, s) in panels {
        sum += refine(&f, a, b, fa, fm, fb, s, tol, MAX_DEPTH)?;
    }
    Ok(sum)
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::Numerical(format!(
            "integrand is not finite on [{a:e}, {b:e}]"
        )));
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || m <= a || m >= b {
        return Err(Error::Numerical(format!(
            "adaptive quadrature did not converge on [{a:e}, {b:e}]: error estimate {:e} exceeds {:e}",
            delta.abs() / 15.0,
            tol
        )));
    }
    Ok(refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

/// Sorted union of log-spaced points (per decade) and a uniform grid of step
/// `max_step` on `[lo, hi]`, plus any `extra` points inside the interval.
pub fn seed_nodes(
    lo: f64,
    hi: f64,
    per_decade: usize,
    max_step: Option<f64>,
    extra: &[f64],
) -> Vec<f64> {
    let mut nodes = vec![lo, hi];
    if lo > 0.0 && per_decade > 0 {
        let decades = (hi / lo).log10();
        let n = (decades * per_decade as f64).ceil() as usize;
        nodes.extend((1..n).map(|i| lo * 10f64.powf(decades * i as f64 / n as f64)));
    }
    if let Some(step) = max_step.filter(|s| *s > 0.0 && s.is_finite()) {
        let n = ((hi - lo) / step).ceil() as usize;
        nodes.extend((1..n).map(|i| lo + (hi - lo) * i as f64 / n as f64));
    }
    nodes.extend(extra.iter().copied().filter(|x| *x > lo && *x < hi));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    nodes
}
