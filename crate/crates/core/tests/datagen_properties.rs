use lwr_core::datagen::{
    count_max_runs, count_segments, generate_sample, sample_boundary_condition, sample_initial_condition,
    ComplexityClass, ProblemKind, SamplingParams, NULL_VALUE,
};
use lwr_core::pde::{FluxParams, Grid};
use lwr_core::training::physics_penalty;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kind() -> impl Strategy<Value = ProblemKind> {
    prop_oneof![Just(ProblemKind::Ivp), Just(ProblemKind::Bvp), Just(ProblemKind::Ip)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn initial_conditions_respect_bounds(alpha in 0usize..12, m in 1usize..80, seed in any::<u64>(),
                                         lo in 0.0f64..50.0, width in 1.0f64..70.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = sample_initial_condition(alpha, m, lo, lo + width, 30.0, &mut rng);
        prop_assert_eq!(u.len(), m);
        prop_assert!(count_segments(&u) <= alpha + 1);
        prop_assert!(u.iter().all(|&v| v >= lo && v <= lo + width));
    }

    #[test]
    fn boundary_conditions_have_exact_runs(beta in 0usize..9, seed in any::<u64>(), base in 5.0f64..40.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = sample_boundary_condition(beta, 64, 120.0, base, 3.0, &mut rng);
        prop_assert_eq!(b.len(), 64);
        prop_assert_eq!(count_max_runs(&b, 120.0), beta);
        prop_assert!(b.iter().all(|&v| (0.0..=120.0).contains(&v)));
    }

    #[test]
    fn samples_satisfy_encoding_invariants(kind in kind(), alpha in 0usize..6, beta in 0usize..4, seed in any::<u64>()) {
        let p = FluxParams::default();
        let g = Grid::with_cfl_safety(16, 32, 1.0, &p, 0.9).unwrap();
        let sampling = SamplingParams::default();
        let class = ComplexityClass { alpha, beta: if kind == ProblemKind::Ivp { 0 } else { beta } };
        let (s, trace) = generate_sample(kind, class, seed, &g, &p, &sampling).unwrap();
        s.check_invariants().unwrap();
        prop_assert_eq!(s.class, class);
        prop_assert!(s.input.iter().all(|&v| v == NULL_VALUE || (0.0..=1.0).contains(&v)));
        prop_assert!(s.target.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let col0: Vec<f64> = (0..s.m).map(|i| s.target[i * s.n] * p.u_max).collect();
        prop_assert!(count_segments(&col0) <= alpha + 1);
        match (kind, trace) {
            (ProblemKind::Ivp, None) => {}
            (_, Some(t)) => {
                prop_assert_eq!(count_max_runs(&t.downstream, p.u_max), class.beta);
                // The first draw of the sample stream is the initial condition.
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let u0 = sample_initial_condition(alpha, s.m, 0.0, p.u_max, sampling.step_height, &mut rng);
                for i in 0..s.m {
                    prop_assert_eq!(s.target[i * s.n], u0[i] / p.u_max);
                }
            }
            other => prop_assert!(false, "unexpected boundary for {:?}", other.0),
        }
    }

    #[test]
    fn targets_have_zero_physics_residual(kind in kind(), alpha in 0usize..6, beta in 0usize..3, seed in any::<u64>()) {
        let p = FluxParams::default();
        let g = Grid::with_cfl_safety(16, 32, 1.0, &p, 0.9).unwrap();
        let class = ComplexityClass { alpha, beta };
        let (s, _) = generate_sample(kind, class, seed, &g, &p, &SamplingParams::default()).unwrap();
        prop_assert!(physics_penalty(&s.target, kind, &g, &p).unwrap() <= 1e-10);
    }
}
