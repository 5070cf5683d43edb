use std::sync::Arc;

use proptest::prelude::*;

use soc_lander::ccl::CclState;
use soc_lander::config::Config;
use soc_lander::harness::{brute_force_direction_changes, detect_direction_changes};
use soc_lander::prob::{self, DiscreteDistribution, Domain, PRECISION_CEILING};
use soc_lander::scl::{movement_likelihood, KMode, Quantizer, SclState};

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_filter("positive mass", |w| w.iter().sum::<f64>() > 1e-6)
}

fn pair() -> impl Strategy<Value = (DiscreteDistribution, DiscreteDistribution)> {
    (2usize..9).prop_flat_map(|n| (weights(n), weights(n))).prop_map(|(p, q)| {
        let d = Domain::numbered(p.len()).unwrap();
        (
            DiscreteDistribution::from_weights(d.clone(), p).unwrap(),
            DiscreteDistribution::from_weights(d, q).unwrap(),
        )
    })
}

proptest! {
    #[test]
    fn belief_update_stays_on_the_simplex((a, b) in pair(), k in 0.0f64..=1.0) {
        let post = prob::belief_update(&a, &b, k).unwrap();
        prop_assert!((post.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for ((x, y), z) in a.probs().iter().zip(b.probs()).zip(post.probs()) {
            prop_assert!(*z >= x.min(*y) - 1e-15 && *z <= x.max(*y) + 1e-15);
        }
    }

    #[test]
    fn belief_update_rejects_gains_outside_the_unit_interval((a, b) in pair(), k in 1.0001f64..10.0) {
        prop_assert!(prob::belief_update(&a, &b, k).is_err());
        prop_assert!(prob::belief_update(&a, &b, -k).is_err());
    }

    #[test]
    fn free_energy_bounds_entropy((a, b) in pair()) {
        let b = b.smoothed(prob::SMOOTHING_WEIGHT);
        let f = prob::free_energy(&a, &b).unwrap();
        let kl = prob::kl_divergence(&a, &b).unwrap();
        prop_assert!(kl >= 0.0);
        prop_assert!((f - prob::entropy(&a) - kl).abs() < 1e-12);
    }

    #[test]
    fn kalman_gain_is_a_monotone_fraction(f in 0.0f64..100.0, pi in 0.0f64..=PRECISION_CEILING, d in 0.0f64..10.0) {
        let k = prob::kalman_gain(f, pi);
        prop_assert!((0.0..=1.0).contains(&k));
        prop_assert!(prob::kalman_gain(f + d, pi) >= k);
        prop_assert!(prob::kalman_gain(f, pi + d) <= k);
    }

    #[test]
    fn precision_ignores_a_constant_shift(errs in prop::collection::vec(-5.0f64..5.0, 2..30), shift in -3.0f64..3.0) {
        let p = prob::precision_of_error(&errs).unwrap();
        let shifted: Vec<f64> = errs.iter().map(|e| e + shift).collect();
        let q = prob::precision_of_error(&shifted).unwrap();
        prop_assert!((0.0..=PRECISION_CEILING).contains(&p));
        prop_assert!((p - q).abs() < 1e-6 || p == PRECISION_CEILING || q == PRECISION_CEILING);
    }

    #[test]
    fn bayes_posterior_is_normalised((a, _) in pair(), seed in 0.01f64..1.0) {
        let lik: Vec<f64> = (0..a.len()).map(|i| seed + i as f64 * 0.1).collect();
        let post = a.bayes(&lik).unwrap();
        prop_assert!((post.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn movement_likelihood_peaks_at_the_intention(p in -3.0f64..3.0, i in -3.0f64..3.0) {
        let l = movement_likelihood(p, i, 0.5);
        prop_assert!((0.0..=1.0).contains(&l));
        prop_assert_eq!(movement_likelihood(i, i, 0.5), 1.0);
    }

    #[test]
    fn ll_soc_stays_in_the_unit_interval(steps in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, 0.0f64..=1.0), 1..50)) {
        let mut s = SclState::new(&Config::default().scl, KMode::Fixed(0.5), 1.0);
        for (perceived, intended, k) in steps {
            s.gain = k;
            s.ll_soc_update(perceived, intended);
            prop_assert!((0.0..=1.0).contains(&s.ll_soc));
        }
    }

    #[test]
    fn hl_soc_moves_in_single_tenths(start in 0u8..=10, lls in prop::collection::vec(0.0f64..=1.0, 1..80)) {
        let mut s = CclState::new(&Config::default().ccl, 0.5, Arc::default());
        s.set_hl_soc(f64::from(start) / 10.0);
        for ll in lls {
            let before = s.hl_soc();
            s.hl_soc_update(ll);
            let after = s.hl_soc();
            prop_assert!(((after * 10.0) - (after * 10.0).round()).abs() < 1e-9);
            prop_assert!((after - before).abs() <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn quantizer_mean_follows_the_command(cmd in 0.15f64..1.0, sign in prop::bool::ANY) {
        let cmd = if sign { cmd } else { -cmd };
        let mut q = Quantizer::default();
        let n = 400;
        let total: f64 = (0..n).map(|_| q.emit(cmd, 0.15, 1.0).direction()).sum();
        prop_assert!((total / f64::from(n) - cmd).abs() < 0.01);
    }

    #[test]
    fn detector_agrees_with_brute_force(runs in prop::collection::vec((-1i8..=1, 1usize..12), 0..25)) {
        let seq: Vec<i8> = runs.iter().flat_map(|&(d, n)| std::iter::repeat_n(d, n)).collect();
        prop_assert_eq!(detect_direction_changes(&seq), brute_force_direction_changes(&seq));
    }
}
