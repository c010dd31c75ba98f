//! End-to-end acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use nmrqi::aaqst::*;
use nmrqi::dd::*;
use nmrqi::files::{load_model, load_system};
use nmrqi::ga::GaConfig;
use nmrqi::macrorealism::*;
use nmrqi::measurement::*;
use nmrqi::noon::*;
use nmrqi::quadrature;
use nmrqi::quantum::*;
use nmrqi::sspt::*;
use nmrqi::Error;

mod common;
use common::{gauss_legendre, switching_oracle};

type Outcome = std::result::Result<String, String>;
type Check = std::result::Result<(), String>;
type Suite = fn(&mut ChaCha8Rng) -> Check;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn criterion(n: usize, name: &str, limit: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome =
        std::panic::catch_unwind(std::panic::AssertUnwindSafe(body)).unwrap_or_else(|p| {
            Err(format!(
                "panic: {}",
                p.downcast_ref::<String>().cloned().unwrap_or_else(|| p
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .unwrap_or_default())
            ))
        });
    let elapsed = start.elapsed();
    let (pass, detail) = match outcome {
        Ok(d) if elapsed <= limit => (true, d),
        Ok(d) => (false, format!("{d}; runtime over limit")),
        Err(e) => (false, e),
    };
    println!(
        "criterion {n} [{name}] {} ({:.2} s, limit {} s): {detail}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    let m = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn random_deviation(rng: &mut ChaCha8Rng, dim: usize) -> DeviationDensityMatrix {
    DeviationDensityMatrix::from_density(&random_hermitian(rng, dim)).unwrap()
}

fn random_kraus(rng: &mut ChaCha8Rng, rank: usize) -> Vec<CMatrix> {
    let m = CMatrix::from_fn(2 * rank, 2, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let q = m.qr().q();
    (0..rank).map(|i| q.rows(2 * i, 2).into_owned()).collect()
}

fn sspt_pipeline() -> SsptPipeline {
    let sys = load_system(&data("sspt_system.toml")).unwrap();
    let model = load_model(&data("sspt_model.toml")).unwrap();
    let u = model
        .unitaries(&sys, &model.default_params().unwrap())
        .unwrap();
    SsptPipeline::new(sys, u).unwrap()
}

fn elgi_deficit() -> Outcome {
    let quarter = information_deficit(PI / 4.0, 3).map_err(|e| e.to_string())?;
    check((quarter + 0.134).abs() <= 0.002, || {
        format!("D3(pi/4) = {quarter}")
    })?;
    let grid = theta_grid(PI, DEFAULT_POINTS).unwrap();
    let d: Vec<f64> = grid
        .iter()
        .map(|&t| information_deficit(t, 3).unwrap())
        .collect();
    check(d[0] >= -1e-9, || format!("D3(0) = {}", d[0]))?;
    check(d[48] >= 0.0, || format!("D3(pi/2) = {}", d[48]))?;
    let neg: Vec<usize> = (0..d.len()).filter(|&i| d[i] < 0.0).collect();
    check(neg.windows(2).all(|w| w[1] == w[0] + 1), || {
        "negative region is not one interval".into()
    })?;
    check(neg.contains(&24), || {
        "pi/4 outside the negative region".into()
    })?;
    let argmin = (0..d.len()).min_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
    check(argmin == 24, || format!("minimum at grid index {argmin}"))?;
    Ok(format!(
        "D3(pi/4) = {quarter:.5} bits; negative on theta in [{:.4}, {:.4}]",
        grid[neg[0]],
        grid[*neg.last().unwrap()]
    ))
}

fn twirl_chi() -> Outcome {
    let p = sspt_pipeline();
    let mut phis = vec![0.0, 0.64 * PI, PI, 3.43 * PI];
    phis.extend((0..49).map(|i| 3.5 * PI * i as f64 / 48.0));
    let (mut diag_err, mut other): (f64, f64) = (0.0, 0.0);
    for &phi in &phis {
        let chi = p
            .run(&QuantumChannel::twirl(phi).unwrap(), NoiseSpec::none())
            .map_err(|e| e.to_string())?;
        let s = sinc(2.0 * phi);
        let e = chi.entries();
        diag_err = diag_err.max((e[(0, 0)] - C64::new((1.0 + s) / 2.0, 0.0)).norm());
        diag_err = diag_err.max((e[(3, 3)] - C64::new((1.0 - s) / 2.0, 0.0)).norm());
        for r in 0..4 {
            for c in 0..4 {
                if !(r == c && (r == 0 || r == 3)) {
                    other = other.max(e[(r, c)].norm());
                }
            }
        }
    }
    check(diag_err <= 1e-6, || {
        format!("chi_EE/chi_ZZ error {diag_err:e}")
    })?;
    check(other < 1e-8, || format!("largest other entry {other:e}"))?;
    Ok(format!(
        "{} angles; max diagonal error {diag_err:.1e}, max other entry {other:.1e}",
        phis.len()
    ))
}

fn sspt_gates() -> Outcome {
    let p = sspt_pipeline();
    let mut summary = Vec::new();
    for name in GATE_NAMES {
        let ch = QuantumChannel::unitary(gate(name).unwrap()).unwrap();
        let th = chi_theory(&ch).unwrap();
        let f0 = gate_fidelity(
            &p.run(&ch, NoiseSpec::none()).map_err(|e| e.to_string())?,
            &th,
        )
        .unwrap();
        check((f0 - 1.0).abs() <= 1e-6, || {
            format!("{name}: noiseless fidelity {f0}")
        })?;
        let fids: Vec<f64> = (0..100u64)
            .into_par_iter()
            .map(|seed| {
                gate_fidelity(
                    &p.run(&ch, NoiseSpec::new(0.05, seed).unwrap()).unwrap(),
                    &th,
                )
                .unwrap()
            })
            .collect();
        let mean = fids.iter().sum::<f64>() / fids.len() as f64;
        check(mean >= 0.9, || {
            format!("{name}: mean fidelity {mean} at eta 0.05")
        })?;
        summary.push(format!("{name} {mean:.4}"));
    }
    Ok(format!(
        "noiseless within 1e-6; mean at eta 0.05: {}",
        summary.join(", ")
    ))
}

fn aaqst_round_trip() -> Outcome {
    let sys = load_system(&data("aaqst_2plus1_system.toml")).unwrap();
    let model = load_model(&data("aaqst_2plus1_model.toml")).unwrap();
    let us = model
        .unitaries(&sys, &model.default_params().unwrap())
        .unwrap();
    let m = build_constraint_matrix(&sys, &us).map_err(|e| e.to_string())?;
    let readout = |rho: &DeviationDensityMatrix| {
        let full = embed_with_mixed_ancilla(&sys, rho).unwrap();
        let parts: Vec<SpectralReadout> = us
            .iter()
            .map(|u| single_quantum_lines(&evolve(&full, u).unwrap(), sys.n_spins()).unwrap())
            .collect();
        SpectralReadout::concat(&parts)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_clean, mut worst_noisy) = (1.0f64, 1.0f64);
    for trial in 0..20u64 {
        let rho = random_deviation(&mut rng, 4);
        let clean = readout(&rho);
        let f = state_fidelity(
            &reconstruct_state(&m, &clean).map_err(|e| e.to_string())?,
            &rho,
        )
        .unwrap();
        let noisy = add_noise(&clean, NoiseSpec::new(0.01, trial).unwrap());
        let g = state_fidelity(
            &reconstruct_state(&m, &noisy).map_err(|e| e.to_string())?,
            &rho,
        )
        .unwrap();
        worst_clean = worst_clean.min(f);
        worst_noisy = worst_noisy.min(g);
    }
    check(worst_clean >= 0.9999, || {
        format!("noiseless fidelity {worst_clean}")
    })?;
    check(worst_noisy >= 0.99, || {
        format!("fidelity at eta 0.01 {worst_noisy}")
    })?;

    let opt =
        optimize_delays(&sys, &model, 200, 0, &GaConfig::default()).map_err(|e| e.to_string())?;
    let b = model.bounds().to_vec();
    let at = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / 99.0;
    let grid_best = (0..100 * 100)
        .into_par_iter()
        .map(|k| {
            model_condition_number(
                &sys,
                &model,
                &[at(b[0].0, b[0].1, k / 100), at(b[1].0, b[1].1, k % 100)],
            )
        })
        .reduce(|| f64::INFINITY, f64::min);
    check(opt.condition_number <= 1.05 * grid_best, || {
        format!("optimizer {} vs grid {grid_best}", opt.condition_number)
    })?;

    let k21 = min_experiments(2, 1).unwrap();
    let k32 = min_experiments(3, 2).unwrap();
    check(k21 == 1 && k32 == 1, || {
        format!("K(2,1) = {k21}, K(3,2) = {k32}")
    })?;
    check(m.entries().nrows() == 24, || {
        format!("2+1 rows {}", m.entries().nrows())
    })?;
    let j = DMatrix::from_fn(5, 5, |a, c| {
        if a == c {
            0.0
        } else {
            20.0 + 13.0 * (a + c) as f64 + 7.0 * (a * c) as f64
        }
    });
    let five = SpinSystem::new(
        vec![-1500.0, -640.0, 210.0, 930.0, 1710.0],
        j,
        vec![
            SpinRole::System,
            SpinRole::System,
            SpinRole::System,
            SpinRole::AaqstAncilla,
            SpinRole::AaqstAncilla,
        ],
        None,
    )
    .unwrap();
    let program = [
        ProgramStep::Delay(3.1e-3),
        ProgramStep::Pulse(PulseSpec::global(PulseAxis::X, PI / 2.0)),
        ProgramStep::Delay(5.3e-3),
        ProgramStep::Pulse(PulseSpec::global(PulseAxis::Y, PI / 2.0)),
    ];
    let m5 =
        build_constraint_matrix(&five, &[compose_pulse_program(&five, &program).unwrap()]).unwrap();
    check(m5.entries().nrows() == 160, || {
        format!("3+2 rows {}", m5.entries().nrows())
    })?;
    Ok(format!(
        "worst fidelity {worst_clean:.8} noiseless, {worst_noisy:.5} at eta 0.01; optimizer C = {:.4} vs grid {grid_best:.4}; K = 1, 1; rows 24 and 160",
        opt.condition_number
    ))
}

fn moment_inversion() -> Outcome {
    let grid = theta_grid(PI, DEFAULT_POINTS).unwrap();
    let (mut direct_err, mut mip_err, mut gap_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for &th in &grid {
        let (c, c2) = (th.cos(), (2.0 * th).cos());
        let pd = if th == 0.0 {
            direct_three_time(th).unwrap()
        } else {
            let w = DEFAULT_OMEGA;
            sequential_jp(&[0.0, th / w, 2.0 * th / w], w, &maximally_mixed())
                .map_err(|e| e.to_string())?
        };
        for idx in 0..8 {
            let q = pd.outcomes_of(idx);
            let want = if q[0] == q[1] && q[1] == q[2] {
                (1.0 + c).powi(2) / 8.0
            } else if q[0] == q[2] {
                (1.0 - c).powi(2) / 8.0
            } else {
                (1.0 - c * c) / 8.0
            };
            direct_err = direct_err.max((pd.values()[idx] - want).abs());
        }
        if th == 0.0 {
            continue;
        }
        let pm = invert_moments(&quantum_moments(th).unwrap());
        for idx in 0..8 {
            let q = pm.outcomes_of(idx);
            let want = if q[0] == q[1] && q[1] == q[2] {
                (1.0 + 2.0 * c + c2) / 8.0
            } else if q[0] == q[2] {
                (1.0 - 2.0 * c + c2) / 8.0
            } else {
                (1.0 - c2) / 8.0
            };
            mip_err = mip_err.max((pm.values()[idx] - want).abs());
        }
        gap_err = gap_err.max((pm.max_abs_diff(&pd).unwrap() - th.sin().powi(2) / 8.0).abs());
    }
    check(direct_err <= 1e-10, || {
        format!("sequential table error {direct_err:e}")
    })?;
    check(mip_err <= 1e-10, || {
        format!("moment-inverted table error {mip_err:e}")
    })?;
    check(gap_err <= 1e-10, || format!("gap error {gap_err:e}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut round = 0.0f64;
    for _ in 0..100 {
        let raw: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
        let s: f64 = raw.iter().sum();
        let p = ProbabilityTable::new(3, raw.iter().map(|x| x / s).collect()).unwrap();
        round = round.max(
            invert_moments(&moments_of(&p).unwrap())
                .max_abs_diff(&p)
                .unwrap(),
        );
    }
    check(round <= 1e-12, || {
        format!("classical round trip error {round:e}")
    })?;
    Ok(format!(
        "97 angles: direct {direct_err:.1e}, inverted {mip_err:.1e}, gap {gap_err:.1e}; classical round trip {round:.1e}"
    ))
}

fn dd_timing() -> Outcome {
    let t = 60.2e-6;
    let mut udd_err = 0.0f64;
    for n in 1..=7 {
        let seq = make_udd(n, t, DEFAULT_TAU_PI).map_err(|e| e.to_string())?;
        for (j, c) in seq.centers().iter().enumerate() {
            let exact = t * (PI * (j + 1) as f64 / (2.0 * n as f64 + 2.0)).sin().powi(2);
            udd_err = udd_err.max((c - exact).abs() / exact);
        }
    }
    check(udd_err <= 1e-12, || {
        format!("UDD instants relative error {udd_err:e}")
    })?;
    for (name, r) in [
        ("udd", make_udd(8, t, DEFAULT_TAU_PI)),
        ("rudd", make_rudd(8, t, DEFAULT_TAU_PI)),
    ] {
        check(
            matches!(r, Err(Error::NegativeSequenceDelay { .. })),
            || format!("{name} N=8 gave {r:?}"),
        )?;
    }
    let rule = gauss_legendre(20);
    let cpmg = make_cpmg(7, DEFAULT_TAU, DEFAULT_TAU_PI, false).unwrap();
    let total = cpmg.total_t();
    let seqs = [
        cpmg,
        make_udd(7, total, DEFAULT_TAU_PI).unwrap(),
        make_rudd(7, total, DEFAULT_TAU_PI).unwrap(),
    ];
    let mut ff_err = 0.0f64;
    for seq in &seqs {
        let worst = (0..400)
            .into_par_iter()
            .map(|i| {
                let w = 1e3 * 10f64.powf(4.0 * i as f64 / 399.0);
                let o = switching_oracle(seq, w, &rule);
                (filter_function(seq, w) - o).abs() / o
            })
            .reduce(|| 0.0, f64::max);
        ff_err = ff_err.max(worst);
    }
    check(ff_err <= 1e-6, || {
        format!("filter function relative error {ff_err:e}")
    })?;
    let band = (DEFAULT_OMEGA_MIN, DEFAULT_OMEGA_MAX);
    let c = make_cpmg(7, 2e-6, 4.27e-6, false).unwrap();
    let tt = c.total_t();
    let areas = [
        ff_area(&c, band).unwrap(),
        ff_area(&make_udd(7, tt, 4.27e-6).unwrap(), band).unwrap(),
        ff_area(&make_rudd(7, tt, 4.27e-6).unwrap(), band).unwrap(),
    ];
    check(areas[2] < areas[0] && areas[2] < areas[1], || {
        format!("areas cpmg/udd/rudd {areas:?}")
    })?;
    Ok(format!(
        "UDD error {udd_err:.1e}; N=8 rejected; filter function error {ff_err:.1e}; areas cpmg {:.4e}, udd {:.4e}, rudd {:.4e}",
        areas[0], areas[1], areas[2]
    ))
}

fn noon_factors() -> Outcome {
    let g_of = |f: &str| {
        effective_gamma(&StarSystem::from_spin_system(&load_system(&data(f)).unwrap()).unwrap()).1
    };
    let (g9, g3) = (g_of("star_p_9h.toml"), g_of("star_c_3h.toml"));
    check((g9 / 23.2 - 1.0).abs() <= 0.005, || {
        format!("g(P+9H) = {g9}")
    })?;
    check((g3 / 12.92 - 1.0).abs() <= 0.005, || {
        format!("g(C+3H) = {g3}")
    })?;

    let c = constants();
    let (gamma_eff, _) = effective_gamma(&StarSystem::new(c.p31, c.h1, 10).unwrap());
    let p = DiffusionParams::new(6.24e-10, 1e-3, 0.05, gamma_eff).unwrap();
    let gradients: Vec<f64> = (0..16).map(|i| 0.12 * i as f64 / 15.0).collect();
    let clean: Vec<(f64, f64)> = gradients
        .iter()
        .map(|&g| (g, diffusion_signal(g, &p)))
        .collect();
    let d0 = fit_diffusion(&clean, p.delta, p.big_delta, p.gamma_eff)
        .map_err(|e| e.to_string())?
        .d;
    check((d0 / p.d - 1.0).abs() <= 1e-3, || {
        format!("noiseless D = {d0:e}")
    })?;
    let ds: Vec<f64> = (0..100u64)
        .map(|seed| {
            let pts = synthetic_diffusion(&p, &gradients, 0.01, seed).unwrap();
            fit_diffusion(&pts, p.delta, p.big_delta, p.gamma_eff)
                .unwrap()
                .d
        })
        .collect();
    let mean = ds.iter().sum::<f64>() / ds.len() as f64;
    check((mean / p.d - 1.0).abs() <= 0.01, || {
        format!("mean noisy D = {mean:e}")
    })?;

    let truth = RfiProfile::new(1000.0, 0.018, 0.009).unwrap();
    let samples: Vec<(f64, f64)> = (0..256)
        .map(|i| {
            let nu = 1000.0 * (0.8 + 0.4 * i as f64 / 255.0);
            (nu, rfi_pdf(nu, &truth))
        })
        .collect();
    let fit = rfi_fit(&samples, 1000.0).map_err(|e| e.to_string())?;
    let rfi_err = (fit.lambda_minus / 0.018 - 1.0)
        .abs()
        .max((fit.lambda_plus / 0.009 - 1.0).abs());
    check(rfi_err <= 0.02, || format!("RFI fit {fit:?}"))?;

    let corr = RfiCorrProfile::new(0.005, [0.226, 0.114], [0.028, 0.095], 2400.0, 2500.0).unwrap();
    let n = 256;
    let grid: Vec<(f64, f64, f64)> = (0..n * n)
        .map(|k| {
            let h = 2400.0 * (0.9 + 0.2 * (k / n) as f64 / (n - 1) as f64);
            let q = 2500.0 * (0.9 + 0.2 * (k % n) as f64 / (n - 1) as f64);
            (h, q, rfi_corr_pdf(h, q, &corr))
        })
        .collect();
    let cf = corr_fit(&grid, 2400.0, 2500.0, corr.lambda0).map_err(|e| e.to_string())?;
    let pairs = [
        (cf.lambda0, corr.lambda0),
        (cf.lambda_h[0], corr.lambda_h[0]),
        (cf.lambda_h[1], corr.lambda_h[1]),
        (cf.lambda_p[0], corr.lambda_p[0]),
        (cf.lambda_p[1], corr.lambda_p[1]),
    ];
    let corr_err = pairs
        .iter()
        .map(|(g, w)| (g / w - 1.0).abs())
        .fold(0.0, f64::max);
    check(corr_err <= 0.05, || format!("correlation fit {cf:?}"))?;
    Ok(format!(
        "g = {g9:.3} and {g3:.3}; D error {:.1e} noiseless, {:.1e} mean at 1% noise; RFI error {rfi_err:.1e}; correlation error {corr_err:.1e}",
        (d0 / p.d - 1.0).abs(),
        (mean / p.d - 1.0).abs()
    ))
}

fn random_program(rng: &mut ChaCha8Rng) -> Vec<ProgramStep> {
    (0..rng.random_range(1..7))
        .map(|_| {
            if rng.random::<bool>() {
                ProgramStep::Delay(rng.random_range(0.0..2e-2))
            } else {
                let axis = [
                    PulseAxis::X,
                    PulseAxis::Y,
                    PulseAxis::Z,
                    PulseAxis::Phase(rng.random_range(0.0..6.3)),
                ][rng.random_range(0..4)];
                ProgramStep::Pulse(PulseSpec::global(axis, rng.random_range(-7.0..7.0)))
            }
        })
        .collect()
}

fn sorted_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut e: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

fn quantum_properties(rng: &mut ChaCha8Rng) -> Check {
    let sys = load_system(&data("aaqst_2plus1_system.toml")).unwrap();
    for _ in 0..50 {
        let (a, b) = (random_program(rng), random_program(rng));
        let whole: Vec<ProgramStep> = a.iter().chain(&b).cloned().collect();
        let u = compose_pulse_program(&sys, &whole).unwrap();
        check(unitarity_residual(u.matrix()) < 1e-9, || "unitarity".into())?;
        let ua = compose_pulse_program(&sys, &a).unwrap();
        let ub = compose_pulse_program(&sys, &b).unwrap();
        check(
            max_abs(&(u.matrix() - ub.matrix() * ua.matrix())) < 1e-9,
            || "composition order".into(),
        )?;
        let rho = random_deviation(rng, 8);
        let (x, y) = (
            sorted_eigenvalues(rho.matrix()),
            sorted_eigenvalues(evolve(&rho, &u).unwrap().matrix()),
        );
        check(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-9), || {
            "eigenvalue preservation".into()
        })?;
    }
    let h = build_hamiltonian(&sys).unwrap();
    for k in 0..3 {
        let z = spin_operator(&pauli_z(), k, 3);
        check(max_abs(&(&h * &z - &z * &h)) < 1e-9, || {
            "hamiltonian commutes with sz".into()
        })?;
    }
    Ok(())
}

fn measurement_properties(rng: &mut ChaCha8Rng) -> Check {
    for n in 1..=5 {
        let d = 1 << n;
        let (r1, r2) = (random_deviation(rng, d), random_deviation(rng, d));
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let mix = DeviationDensityMatrix::new(
            r1.matrix() * C64::new(a, 0.0) + r2.matrix() * C64::new(b, 0.0),
        )
        .unwrap();
        let (l1, l2, lm) = (
            single_quantum_lines(&r1, n).unwrap(),
            single_quantum_lines(&r2, n).unwrap(),
            single_quantum_lines(&mix, n).unwrap(),
        );
        check(lm.len() == n * (1 << (n - 1)), || "line count".into())?;
        for ((x, y), z) in l1.lines.iter().zip(&l2.lines).zip(&lm.lines) {
            check(
                (a * x.r + b * y.r - z.r).abs() < 1e-12 && (a * x.s + b * y.s - z.s).abs() < 1e-12,
                || "line linearity".into(),
            )?;
        }
    }
    Ok(())
}

fn aaqst_properties(rng: &mut ChaCha8Rng) -> Check {
    let sys = load_system(&data("aaqst_2plus1_system.toml")).unwrap();
    let model = load_model(&data("aaqst_2plus1_model.toml")).unwrap();
    let us = model
        .unitaries(&sys, &model.default_params().unwrap())
        .unwrap();
    let m = build_constraint_matrix(&sys, &us).unwrap();
    for _ in 0..20 {
        let rho = random_deviation(rng, 4);
        let readout = simulate_readout(&sys, &rho, &us).unwrap();
        let predicted = m.entries() * unknown_vector(&rho);
        let half = readout.len();
        for (i, l) in readout.lines.iter().enumerate() {
            check(
                (predicted[i] - l.r).abs() < 1e-12 && (predicted[half + i] - l.s).abs() < 1e-12,
                || "constraint columns".into(),
            )?;
        }
        let rec = reconstruct_state(&m, &readout).unwrap();
        check(max_abs(&(rec.matrix() - rho.matrix())) < 1e-10, || {
            "noiseless reconstruction".into()
        })?;
    }
    let without: Vec<usize> = (1..=8).map(|n| min_experiments(n, 0).unwrap()).collect();
    check(without.windows(2).all(|w| w[0] <= w[1]), || {
        "experiment count trend".into()
    })
}

fn sspt_properties(rng: &mut ChaCha8Rng) -> Check {
    let p = sspt_pipeline();
    for _ in 0..20 {
        let rank = rng.random_range(1..5);
        let ops = random_kraus(rng, rank);
        let chi = p
            .run(
                &QuantumChannel::kraus(ops.clone()).unwrap(),
                NoiseSpec::none(),
            )
            .unwrap();
        check(chi_hermiticity(&chi) < 1e-8, || "chi Hermitian".into())?;
        check(chi.trace_preservation_residual(p.basis()) < 1e-6, || {
            "chi trace preserving".into()
        })?;
        let u = random_kraus(rng, 1).remove(0);
        let cu = p
            .run(&QuantumChannel::unitary(u).unwrap(), NoiseSpec::none())
            .unwrap();
        check(rank_one_ratio(&cu) < 1e-8, || "unitary chi rank one".into())?;
        let (a, b) = (rng.random_range(1e-3..1e3), rng.random_range(1e-3..1e3));
        let f = gate_fidelity(&chi, &cu).unwrap();
        let scaled = |c: &ChiMatrix, s: f64| {
            ChiMatrix::new(c.entries() * C64::new(s, 0.0), c.labels().to_vec()).unwrap()
        };
        check(
            (f - gate_fidelity(&cu, &chi).unwrap()).abs() < 1e-12,
            || "fidelity symmetry".into(),
        )?;
        check(
            (f - gate_fidelity(&scaled(&chi, a), &scaled(&cu, b)).unwrap()).abs() < 1e-12,
            || "fidelity scale".into(),
        )?;
        let state = random_hermitian(rng, 4);
        let out = apply_channel(
            &state,
            &QuantumChannel::twirl(rng.random_range(0.0..12.0)).unwrap(),
            1,
        )
        .unwrap();
        for l in 0..4usize {
            for k in 0..4usize {
                if l.count_ones() == k.count_ones() {
                    check(out[(l, k)] == state[(l, k)], || "twirl fixed points".into())?;
                }
            }
        }
    }
    for (n, b) in (1..=5).zip([1, 2, 3, 5, 6]) {
        check(m_sspt(n, b) == 1, || {
            format!("single-scan count for n = {n}")
        })?;
    }
    Ok(())
}

fn macrorealism_properties(rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..50 {
        let th = rng.random_range(1e-3..PI);
        let p = direct_three_time(th).unwrap();
        check((p.sum() - 1.0).abs() < 1e-9 && p.is_nonnegative(), || {
            "table normalization".into()
        })?;
        check(
            marginalize(&p, 2)
                .unwrap()
                .max_abs_diff(&two_time_table(th))
                .unwrap()
                <= 1e-12,
            || "adjacent marginal".into(),
        )?;
    }
    for mask in 0u32..256 {
        let support = if mask == 0 { 1 } else { mask };
        let w = 1.0 / support.count_ones() as f64;
        let p = ProbabilityTable::new(
            3,
            (0..8)
                .map(|k| if support >> k & 1 == 1 { w } else { 0.0 })
                .collect(),
        )
        .unwrap();
        check(
            invert_moments(&moments_of(&p).unwrap())
                .max_abs_diff(&p)
                .unwrap()
                <= 1e-12,
            || format!("deterministic round trip {mask}"),
        )?;
    }
    check(information_deficit(PI / 2.0, 3).unwrap() >= 0.0, || {
        "D3(pi/2) >= 0".into()
    })
}

fn dd_properties(rng: &mut ChaCha8Rng) -> Check {
    let rule = gauss_legendre(20);
    for _ in 0..30 {
        let n = rng.random_range(1..8);
        let cpmg = make_cpmg(
            n,
            rng.random_range(0.5e-6..10e-6),
            rng.random_range(0.5e-6..2e-6),
            false,
        )
        .unwrap();
        let tau_pi = cpmg.pulses()[0].dur;
        let mut seqs = vec![cpmg.clone()];
        seqs.extend(make_udd(n, cpmg.total_t(), tau_pi).ok());
        seqs.extend(make_rudd(n, cpmg.total_t(), tau_pi).ok());
        for s in &seqs {
            let c = s.centers();
            let t = s.total_t();
            check(
                (0..c.len()).all(|j| (c[j] + c[c.len() - 1 - j] - t).abs() <= 1e-12 * t),
                || "time symmetry".into(),
            )?;
            check(filter_function(s, 0.0) < 1e-28, || "F(0) = 0".into())?;
            check(
                filter_function(s, rng.random_range(0.0..1e8)) >= 0.0,
                || "F >= 0".into(),
            )?;
        }
        let mut cum: Vec<f64> = (0..n + 1).map(|_| rng.random_range(0.01..1.0)).collect();
        for k in 1..cum.len() {
            cum[k] += cum[k - 1];
        }
        let total = cum.pop().unwrap();
        let t = rng.random_range(1e-5..1e-3);
        let pulses = cum
            .iter()
            .map(|c| Pulse::pi(c / total * t, 0.0, Phase::X))
            .collect();
        let ideal = DDSequence::new(Scheme::Udd, t, pulses).unwrap();
        let w = 10f64.powf(rng.random_range(2.0..6.0));
        let o = switching_oracle(&ideal, w, &rule);
        check((filter_function(&ideal, w) - o).abs() <= 1e-9 * o, || {
            "ideal oracle".into()
        })?;
        let bare = make_udd(n, t, 0.0).unwrap();
        check(bare.centers() == udd_instants(n, t), || {
            "ideal UDD instants".into()
        })?;
    }
    Ok(())
}

fn noon_properties(rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..20 {
        let (d, delta, big) = (
            rng.random_range(1e-11..1e-8),
            rng.random_range(1e-4..5e-3),
            rng.random_range(0.01..0.5),
        );
        let p = DiffusionParams::new(d, delta, big, 2.675e8).unwrap();
        let gmax = (3.0 / (p.gamma_eff.powi(2) * delta * delta * d * (big - delta / 3.0))).sqrt();
        let pts: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                (
                    gmax * i as f64 / 7.0,
                    diffusion_signal(gmax * i as f64 / 7.0, &p),
                )
            })
            .collect();
        check(
            (fit_diffusion(&pts, delta, big, p.gamma_eff).unwrap().d - d).abs() < 1e-12 * d,
            || "diffusion inverse".into(),
        )?;
        let nu0 = rng.random_range(100.0..1e5);
        let prof = RfiProfile::new(
            nu0,
            rng.random_range(0.002..0.5),
            rng.random_range(0.002..0.5),
        )
        .unwrap();
        let nodes = quadrature::seed_nodes(
            0.0,
            3.0 * nu0,
            0,
            Some(nu0 * prof.lambda_minus.min(prof.lambda_plus) / 4.0),
            &[nu0],
        );
        let area = quadrature::integrate(|nu| rfi_pdf(nu, &prof), &nodes, 1e-10).unwrap();
        check((area - 1.0).abs() < 1e-6, || "RFI normalization".into())?;
        let (ga, gm, n) = (
            rng.random_range(1e6..3e8),
            rng.random_range(1e6..3e8),
            rng.random_range(1..30),
        );
        check(
            effective_gamma(&StarSystem::new(ga, gm, n + 1).unwrap()).1
                > effective_gamma(&StarSystem::new(ga, gm, n).unwrap()).1,
            || "g monotone".into(),
        )?;
    }
    for n in 2..=10 {
        for phi in [0.0, PI / 7.0, PI / 3.0] {
            let e = wrap_phase(noon_phase_simulated(n, phi).unwrap() - noon_phase(n, phi).unwrap());
            check(e.abs() < 1e-10, || format!("NOON phase n = {n}"))?;
        }
    }
    Ok(())
}

fn cli_determinism() -> Check {
    let model = data("aaqst_2plus1_model.toml");
    let sys = data("aaqst_2plus1_system.toml");
    let runs: [Vec<&str>; 3] = [
        vec!["moments", "sweep", "--points", "17"],
        vec![
            "--seed", "4", "sspt", "run", "--gate", "hadamard", "--eta", "0.05",
        ],
        vec![
            "--seed",
            "4",
            "aaqst",
            "optimize",
            "--system",
            sys.to_str().unwrap(),
            "--model",
            model.to_str().unwrap(),
            "--budget",
            "5",
        ],
    ];
    for args in runs {
        let go = || {
            Command::new(env!("CARGO_BIN_EXE_nmrqi"))
                .args(&args)
                .output()
                .unwrap()
        };
        let (a, b) = (go(), go());
        check(a.status.success() && a.stdout == b.stdout, || {
            format!("rerun differs: {args:?}")
        })?;
    }
    Ok(())
}

fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let suites: [(&str, Suite); 7] = [
        ("quantum", quantum_properties),
        ("measurement", measurement_properties),
        ("aaqst", aaqst_properties),
        ("sspt", sspt_properties),
        ("macrorealism", macrorealism_properties),
        ("dd", dd_properties),
        ("noon", noon_properties),
    ];
    for (name, suite) in suites {
        suite(&mut rng).map_err(|e| format!("{name}: {e}"))?;
    }
    cli_determinism().map_err(|e| format!("cli: {e}"))?;
    Ok("quantum, measurement, aaqst, sspt, macrorealism, dd, noon and cli invariants hold".into())
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        criterion(1, "information deficit", secs(1), elgi_deficit),
        criterion(2, "twirl process matrix", secs(5), twirl_chi),
        criterion(3, "single-scan gates", secs(30), sspt_gates),
        criterion(4, "state tomography", secs(120), aaqst_round_trip),
        criterion(5, "moment inversion", secs(5), moment_inversion),
        criterion(6, "decoupling timing and filters", secs(60), dd_timing),
        criterion(7, "noon factors and fits", secs(60), noon_factors),
        criterion(8, "property suites", secs(120), property_suites),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| i + 1)
        .collect();
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
