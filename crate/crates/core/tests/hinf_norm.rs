mod common;

use hinfgrad::hinf::{
    hamiltonian, has_imaginary_axis_eig, hinf_norm, hinf_norm_batch, hinf_norm_grid_oracle,
    log_grid, IMAG_AXIS_REL_TOL,
};
use hinfgrad::lti::sigma_max_response;
use hinfgrad::{synthetic, Execution};
use proptest::prelude::*;

const TOL: f64 = 1e-6;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn sound_tight_and_consistent(seed in any::<u64>(), n in 1usize..=8) {
        let cl = synthetic::random_closed_loop(&mut synthetic::rng(seed), n);
        let ev = hinf_norm(&cl, TOL).unwrap();
        let grid = log_grid(1e-3, 1e3, 2000);
        let sweep = hinf_norm_grid_oracle(&cl, &grid, Execution::Sequential).unwrap();
        prop_assert!(sweep <= ev.gamma * (1.0 + TOL), "sweep {} gamma {}", sweep, ev.gamma);
        let peak = common::refined_peak(&cl, &common::default_sweep());
        prop_assert!(ev.gamma <= peak + 1e-3 * ev.gamma);

        let crosses = |g: f64| has_imaginary_axis_eig(&hamiltonian(&cl, g * g).unwrap(), IMAG_AXIS_REL_TOL).unwrap();
        prop_assert!(!crosses(1.01 * ev.gamma));
        let seed_lower = ev
            .frequencies_probed
            .as_ref()
            .unwrap()
            .iter()
            .map(|&w| sigma_max_response(&cl, w).unwrap())
            .fold(0.0, f64::max);
        if 0.5 * ev.gamma > seed_lower {
            prop_assert!(crosses(0.5 * ev.gamma));
        }
    }
}

#[test]
fn batch_matches_single_in_both_modes() {
    let mut rng = synthetic::rng(11);
    let cls: Vec<_> = (1..=12)
        .map(|n| synthetic::random_closed_loop(&mut rng, n))
        .collect();
    let seq = hinf_norm_batch(&cls, TOL, Execution::Sequential);
    let par = hinf_norm_batch(&cls, TOL, Execution::Parallel);
    for ((cl, s), p) in cls.iter().zip(&seq).zip(&par) {
        let single = hinf_norm(cl, TOL).unwrap().gamma;
        assert_eq!(s.as_ref().unwrap().gamma, single);
        assert_eq!(p.as_ref().unwrap().gamma, single);
    }
}

#[test]
fn grid_oracle_mode_independent() {
    let cl = synthetic::random_closed_loop(&mut synthetic::rng(4), 6);
    let grid = log_grid(1e-3, 1e3, 500);
    assert_eq!(
        hinf_norm_grid_oracle(&cl, &grid, Execution::Sequential).unwrap(),
        hinf_norm_grid_oracle(&cl, &grid, Execution::Parallel).unwrap()
    );
}
