use std::f64::consts::PI;

use nmrqi::dd::DDSequence;
use nmrqi::extended::Df64;

/// Gauss-Legendre nodes and weights on [-1, 1]: Newton iteration in `f64`,
/// then polished in double-double.
pub fn gauss_legendre(n: usize) -> Vec<(Df64, Df64)> {
    let legendre = |x: Df64| -> (Df64, Df64) {
        let (mut p0, mut p1) = (Df64::ONE, x);
        for k in 2..=n {
            let p2 = (x * p1 * (2 * k - 1) as f64 - p0 * (k - 1) as f64) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = (x * p1 - p0) * n as f64 / (x * x - Df64::ONE);
        (p1, dp)
    };
    (1..=n)
        .map(|i| {
            let mut x = Df64::new((PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos());
            for _ in 0..60 {
                let (p, dp) = legendre(x);
                let dx = p / dp;
                x = x - dx;
                if dx.hi.abs() < 1e-33 {
                    break;
                }
            }
            let (_, dp) = legendre(x);
            (x, Df64::new(2.0) / ((Df64::ONE - x * x) * dp * dp))
        })
        .collect()
}

/// `|w int_0^T y(t) e^{iwt} dt|^2` with the toggling function `y` built from
/// pulse edges: +1 before the first pulse, sign flip after each, 0 inside.
pub fn switching_oracle(seq: &DDSequence, omega: f64, rule: &[(Df64, Df64)]) -> f64 {
    // Edges are kept exact in double-double; rounding them to f64 would
    // perturb the heavily cancelled low-frequency sum.
    let mut edges = vec![Df64::ZERO];
    for p in seq.pulses() {
        let half = Df64::new(p.dur) * 0.5;
        edges.push(Df64::new(p.t) - half);
        edges.push(Df64::new(p.t) + half);
    }
    edges.push(Df64::new(seq.total_t()));
    let y = |t: f64| -> f64 {
        let mut sign = 1.0;
        for p in seq.pulses() {
            if t > p.t - p.dur / 2.0 && t < p.t + p.dur / 2.0 {
                return 0.0;
            }
            if t >= p.t + p.dur / 2.0 {
                sign = -sign;
            }
        }
        sign
    };
    let (mut re, mut im) = (Df64::ZERO, Df64::ZERO);
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let width = b - a;
        if width.hi <= 0.0 {
            continue;
        }
        let panels = ((omega * width.to_f64()).ceil() as usize).max(1);
        let h = width / panels as f64;
        for k in 0..panels {
            let lo = a + h * k as f64;
            let half = h * 0.5;
            let mid = lo + half;
            let sign = y(mid.to_f64());
            for &(x, wt) in rule {
                let t = mid + half * x;
                let (s, c) = (t * omega).sin_cos();
                let f = wt * half * sign;
                re = re + f * c;
                im = im + f * s;
            }
        }
    }
    ((re.sqr() + im.sqr()) * omega * omega).to_f64()
}
