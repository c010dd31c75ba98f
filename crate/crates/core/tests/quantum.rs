use nalgebra::DMatrix;
use nmrqi::quantum::*;
use proptest::prelude::*;

fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn system(offsets: &[f64], couplings: &[f64]) -> SpinSystem {
    let n = offsets.len();
    let mut j = DMatrix::zeros(n, n);
    let mut k = 0;
    for a in 0..n {
        for b in a + 1..n {
            j[(a, b)] = couplings[k];
            j[(b, a)] = couplings[k];
            k += 1;
        }
    }
    SpinSystem::new(offsets.to_vec(), j, vec![SpinRole::System; n], None).unwrap()
}

fn step_strategy() -> impl Strategy<Value = ProgramStep> {
    prop_oneof![
        (0.0f64..2e-2).prop_map(ProgramStep::Delay),
        (
            0usize..4,
            -7.0f64..7.0,
            0.0f64..6.3,
            proptest::collection::vec(any::<bool>(), 3)
        )
            .prop_map(|(axis, angle, phase, mask)| {
                let axis = [
                    PulseAxis::X,
                    PulseAxis::Y,
                    PulseAxis::Z,
                    PulseAxis::Phase(phase),
                ][axis];
                let spins: Vec<usize> = (0..3).filter(|&k| mask[k]).collect();
                let targets = if spins.is_empty() {
                    Targets::All
                } else {
                    Targets::Spins(spins)
                };
                ProgramStep::Pulse(PulseSpec::new(axis, angle, targets).unwrap())
            }),
    ]
}

/// Independent propagator of one step: dense exponential of its generator.
fn step_oracle(sys: &SpinSystem, step: &ProgramStep) -> CMatrix {
    let n = sys.n_spins();
    match step {
        ProgramStep::Delay(t) => expm_hermitian(&build_hamiltonian(sys).unwrap(), *t)
            .unwrap()
            .into_inner(),
        ProgramStep::Pulse(p) => {
            let half = C64::new(0.5, 0.0);
            let single = match p.axis {
                PulseAxis::X => pauli_x() * half,
                PulseAxis::Y => pauli_y() * half,
                PulseAxis::Z => pauli_z() * half,
                PulseAxis::Phase(phi) => {
                    (pauli_x() * C64::new(phi.cos(), 0.0) + pauli_y() * C64::new(phi.sin(), 0.0))
                        * half
                }
            };
            let targets: Vec<usize> = match &p.targets {
                Targets::All => (0..n).collect(),
                Targets::Spins(s) => s.clone(),
            };
            let gen = targets
                .iter()
                .fold(CMatrix::zeros(1 << n, 1 << n), |acc, &k| {
                    acc + spin_operator(&single, k, n)
                });
            expm_hermitian(&gen, p.angle).unwrap().into_inner()
        }
    }
}

fn hermitian(raw: &[f64], dim: usize) -> CMatrix {
    let m = CMatrix::from_fn(dim, dim, |r, c| {
        C64::new(raw[2 * (r * dim + c)], raw[2 * (r * dim + c) + 1])
    });
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn sorted_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut e: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

proptest! {
    #[test]
    fn generated_evolutions_are_unitary(
        offsets in proptest::collection::vec(-2000.0f64..2000.0, 3),
        couplings in proptest::collection::vec(-200.0f64..200.0, 3),
        steps in proptest::collection::vec(step_strategy(), 0..8),
    ) {
        let sys = system(&offsets, &couplings);
        let u = compose_pulse_program(&sys, &steps).unwrap();
        prop_assert!(unitarity_residual(u.matrix()) < 1e-9);
        for s in &steps {
            if let ProgramStep::Delay(t) = s {
                prop_assert!(unitarity_residual(free_evolution(&sys, *t).unwrap().matrix()) < 1e-9);
            }
        }
    }

    #[test]
    fn evolution_preserves_eigenvalues(
        offsets in proptest::collection::vec(-2000.0f64..2000.0, 3),
        couplings in proptest::collection::vec(-200.0f64..200.0, 3),
        steps in proptest::collection::vec(step_strategy(), 1..6),
        raw in proptest::collection::vec(-1.0f64..1.0, 128),
    ) {
        let sys = system(&offsets, &couplings);
        let rho = DeviationDensityMatrix::from_density(&hermitian(&raw, 8)).unwrap();
        let u = compose_pulse_program(&sys, &steps).unwrap();
        let out = evolve(&rho, &u).unwrap();
        let (a, b) = (sorted_eigenvalues(rho.matrix()), sorted_eigenvalues(out.matrix()));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn hamiltonian_commutes_with_every_sz(
        offsets in proptest::collection::vec(-5000.0f64..5000.0, 4),
        couplings in proptest::collection::vec(-300.0f64..300.0, 6),
    ) {
        let sys = system(&offsets, &couplings);
        let h = build_hamiltonian(&sys).unwrap();
        for k in 0..4 {
            let z = spin_operator(&pauli_z(), k, 4);
            prop_assert!(max_diff(&(&h * &z), &(&z * &h)) < 1e-9);
        }
    }

    #[test]
    fn two_step_programs_apply_the_second_step_last(
        offsets in proptest::collection::vec(-2000.0f64..2000.0, 3),
        couplings in proptest::collection::vec(-200.0f64..200.0, 3),
        a in step_strategy(),
        b in step_strategy(),
    ) {
        let sys = system(&offsets, &couplings);
        let u = compose_pulse_program(&sys, &[a.clone(), b.clone()]).unwrap();
        let oracle = step_oracle(&sys, &b) * step_oracle(&sys, &a);
        prop_assert!(max_diff(u.matrix(), &oracle) < 1e-9);
    }
}
