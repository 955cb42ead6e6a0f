use fj_core::asymptotics;
use fj_core::campaign::{self, RandomInstance};
use fj_core::linalg::{self, Matrix};
use fj_core::model::{self, ImmunityProfile};
use fj_core::spectral;
use fj_core::OpinionVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(n: usize, seed: u64) -> RandomInstance {
    campaign::random_instance(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn opinions_stay_in_initial_hull(n in 2usize..8, seed in any::<u64>(), sigma in 0.01f64..0.9) {
        let inst = instance(n, seed);
        let prof = ImmunityProfile::new(sigma, inst.sigma_tilde.clone()).unwrap();
        let y0 = OpinionVector::new(inst.y0.clone()).unwrap();
        let lo = inst.y0.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = inst.y0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let traj = model::fj_simulate(&inst.influence, &prof, &y0, 50).unwrap();
        for y in &traj.steps {
            for &v in y {
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn gain_is_row_stochastic_and_fixes_steady_state(n in 1usize..8, seed in any::<u64>(), sigma in 1e-4f64..0.9) {
        let inst = instance(n, seed);
        let prof = ImmunityProfile::new(sigma, inst.sigma_tilde.clone()).unwrap();
        let h = model::static_gain(&inst.influence, &prof).unwrap();
        for s in h.h.row_sums() {
            prop_assert!((s - 1.0).abs() < 1e-9);
        }
        prop_assert!(h.h.as_slice().iter().all(|&x| x >= -1e-12));
        let y0 = OpinionVector::new(inst.y0.clone()).unwrap();
        let y_bar = model::steady_state(&inst.influence, &prof, &y0).unwrap();
        // one more FJ step from the steady state stays put
        let w_tilde = model::effective_matrix(&inst.influence, &prof).unwrap();
        let next: Vec<f64> = w_tilde
            .mul_vec(y_bar.values())
            .iter()
            .zip(prof.sigma())
            .zip(&inst.y0)
            .map(|((a, s), y)| a + s * y)
            .collect();
        for (a, b) in next.iter().zip(y_bar.values()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn gain_gap_shrinks_linearly(n in 2usize..8, seed in any::<u64>()) {
        let inst = instance(n, seed);
        let h_bar = asymptotics::limit_gain(&inst.influence, &inst.sigma_tilde).unwrap();
        let ratio = |s: f64| {
            let prof = ImmunityProfile::new(s, inst.sigma_tilde.clone()).unwrap();
            let h = model::static_gain(&inst.influence, &prof).unwrap();
            linalg::spectral_norm(&h.h.sub(&h_bar.h)) / s
        };
        let (a, b) = (ratio(1e-3), ratio(1e-4));
        prop_assert!(a.is_finite() && b > 0.0);
        prop_assert!(a / b < 2.0 && b / a < 2.0, "{} {}", a, b);
    }

    #[test]
    fn perron_vector_is_a_distribution(n in 1usize..9, seed in any::<u64>()) {
        let inst = instance(n, seed);
        let alpha = spectral::left_perron_vector(&inst.influence).unwrap();
        prop_assert!(alpha.iter().all(|&a| a > 0.0));
        prop_assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let back = inst.influence.matrix().vec_mul(&alpha);
        prop_assert!(linalg::norm_inf(&back.iter().zip(&alpha).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-11);
    }

    #[test]
    fn spectrum_is_sorted_and_bounded(n in 1usize..9, seed in any::<u64>()) {
        let inst = instance(n, seed);
        let ev = spectral::eigenvalues(inst.influence.matrix()).unwrap();
        prop_assert_eq!(ev.len(), n);
        for pair in ev.windows(2) {
            prop_assert!(pair[0].norm() <= pair[1].norm() + 1e-12);
        }
        prop_assert!((ev[n - 1].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hong_bound_holds(n in 2usize..9, seed in any::<u64>()) {
        let a = campaign::random_hong_matrix(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let b = spectral::hong_lower_bound(&a, campaign::HONG_BETA).unwrap();
        prop_assert!(b.holds, "{:?}", b);
    }

    #[test]
    fn lu_solve_residual(n in 1usize..9, entries in prop::collection::vec(-1.0f64..1.0, 64), rhs in prop::collection::vec(-1.0f64..1.0, 8)) {
        let mut a = Matrix::new(n, n, entries[..n * n].to_vec()).unwrap();
        for i in 0..n {
            a[(i, i)] += n as f64;
        }
        let x = linalg::solve_vec(&a, &rhs[..n]).unwrap();
        let r: Vec<f64> = a.mul_vec(&x).iter().zip(&rhs[..n]).map(|(p, q)| p - q).collect();
        prop_assert!(linalg::norm_inf(&r) < 1e-12);
    }
}
