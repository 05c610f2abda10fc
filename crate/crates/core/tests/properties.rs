use omplab::analysis::check_theorem_a;
use omplab::combinatorics::{binomial, next_subset, unrank};
use omplab::experiments::{plant_signal, SignalModel};
use omplab::omp::{omp_solve_default, Termination};
use omplab::sensing::{gen_bernoulli, gen_gaussian_normalized, rip_delta_exhaustive, rip_delta_monte_carlo, DEFAULT_CAP};
use proptest::prelude::*;

fn models() -> impl Strategy<Value = SignalModel> {
    prop::sample::select(SignalModel::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn omp_trace_invariants(seed in any::<u64>(), m in 4usize..16, extra in 0usize..16, k in 1usize..4, model in models()) {
        let n = m + extra;
        let phi = gen_gaussian_normalized(m, n, seed).unwrap();
        let x = plant_signal(n, k.min(m), model, seed ^ 1).unwrap();
        let y = phi.mul_vec(&x.to_dense()).unwrap();
        let trace = omp_solve_default(&phi, &y).unwrap();
        let mut previous = y.norm();
        for (idx, step) in trace.steps().iter().enumerate() {
            prop_assert_eq!(step.iteration, idx + 1);
            prop_assert!(step.residual_norm <= previous * (1.0 + 1e-12) + 1e-15);
            previous = step.residual_norm;
            let mut sorted = step.support.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), step.support.len());
            // The residual is orthogonal to every selected column.
            let r = trace.residual_at(idx + 1).unwrap();
            for &i in &step.support {
                let c: f64 = phi.col(i).iter().zip(r.as_slice()).map(|(a, b)| a * b).sum();
                prop_assert!(c.abs() <= 1e-9 * (1.0 + y.norm()));
            }
        }
        prop_assert!(trace.len() <= m);
        if trace.termination() == Termination::ResidualZero {
            prop_assert!(trace.residual_norm_at(trace.len()).unwrap() <= 1e-10 * y.norm() + 1e-300);
        }
        prop_assert!(check_theorem_a(&trace, &x).unwrap().passed());
    }

    #[test]
    fn unrank_and_next_agree(n in 1usize..12, k_frac in 0.0f64..1.0) {
        let k = ((n as f64) * k_frac) as usize;
        let total = binomial(n, k);
        let mut s = unrank(n, k, 0);
        for rank in 1..total {
            prop_assert!(next_subset(&mut s, n));
            prop_assert_eq!(&s, &unrank(n, k, rank));
        }
        prop_assert!(!next_subset(&mut s, n));
    }

    #[test]
    fn delta_is_monotone_and_bounds_monte_carlo(seed in any::<u64>()) {
        let phi = gen_bernoulli(6, 10, seed).unwrap();
        let mut previous = 0.0;
        for order in 1..=4 {
            let exact = rip_delta_exhaustive(&phi, order, DEFAULT_CAP).unwrap();
            prop_assert!(exact.delta >= previous - 1e-12);
            previous = exact.delta;
            let mc = rip_delta_monte_carlo(&phi, order, 20, seed).unwrap();
            prop_assert!(mc.delta <= exact.delta + 1e-12);
        }
    }

    #[test]
    fn matrix_text_round_trip(seed in any::<u64>(), m in 1usize..6, n in 1usize..9) {
        prop_assume!(m <= n);
        let phi = gen_gaussian_normalized(m, n, seed).unwrap();
        let back = omplab::io::matrix_from_text(&omplab::io::matrix_to_text(&phi)).unwrap();
        prop_assert_eq!(back, phi);
    }

    #[test]
    fn signal_text_round_trip(seed in any::<u64>(), n in 1usize..30, k in 0usize..6, model in models()) {
        let x = plant_signal(n, k.min(n), model, seed).unwrap();
        let back = omplab::io::signal_from_text(&omplab::io::signal_to_text(&x)).unwrap();
        prop_assert_eq!(back, x);
    }
}
