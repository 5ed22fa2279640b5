use proptest::prelude::*;
use rand::Rng;
use qrecover::campaign::{self, markov_chain_state, CampaignConfig, Suite};
use qrecover::cpdp::{reduced_dynamics, Interaction, TripartiteConfiguration};
use qrecover::entropy::{entropy, fidelity, rel_entropy};
use qrecover::linalg::{self, identity, kron, max_abs, partial_trace, CMat, C64};
use qrecover::matfun::{complex_power, sqrt_psd, support_projector};
use qrecover::qcore::random::{
    haar_unitary, random_channel, random_density_matrix, random_instrument, random_subunital_channel,
    rng_from_seed,
};
use qrecover::qcore::{DensityOperator, LinearMap, System};
use qrecover::recovery::uhlmann_isometry;
use qrecover::recovery::QuadratureSpec;
use qrecover::theorems::{check_cmi_recovery, check_entropy_gain, check_recoverability};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

/// Rank-deficient on purpose when `rank < dim`.
fn density(dim: usize, rank: usize, seed: u64) -> CMat {
    random_density_matrix(dim, rank.clamp(1, dim), &mut rng_from_seed(seed)).unwrap()
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn imaginary_powers_multiply_to_support_projector(d in 2usize..5, rank in 1usize..5, t in -8.0f64..8.0, seed in any::<u64>()) {
        let h = density(d, rank, seed);
        let a = complex_power(&h, C64::new(0.0, t)).unwrap();
        let b = complex_power(&h, C64::new(0.0, -t)).unwrap();
        let pi = support_projector(&h).unwrap();
        prop_assert!(max_abs(&(&a * &b - &pi)) < 1e-10);
        prop_assert!(max_abs(&(&pi * &pi - &pi)) < 1e-10);
    }

    #[test]
    fn square_root_squares_back(d in 2usize..6, rank in 1usize..6, seed in any::<u64>()) {
        let h = density(d, rank, seed);
        let s = sqrt_psd(&h).unwrap();
        prop_assert!(max_abs(&(&s * &s - &h)) < 1e-10);
    }

    #[test]
    fn random_channels_are_cptp(din in 1usize..5, dout in 1usize..5, extra in 0usize..3, seed in any::<u64>()) {
        let env = din.div_ceil(dout) + extra;
        let ch = random_channel(din, dout, env, &mut rng_from_seed(seed)).unwrap();
        prop_assert!(ch.trace_preservation_defect() < 1e-10);
        prop_assert!(ch.min_choi_eigenvalue() > -1e-10);
    }

    #[test]
    fn adjoint_is_an_involution(din in 1usize..4, dout in 1usize..4, seed in any::<u64>()) {
        let ch = random_channel(din, dout, din.div_ceil(dout) + 1, &mut rng_from_seed(seed)).unwrap();
        let back = ch.adjoint().adjoint();
        for (a, b) in ch.kraus().iter().zip(back.kraus()) {
            prop_assert!(max_abs(&(a - b)) < 1e-14);
        }
        let x = density(din, din, seed ^ 1);
        let y = density(dout, dout, seed ^ 2);
        // <Y, N(X)> = <N^dagger(Y), X>
        let lhs = linalg::hs_inner(&y, &ch.apply(&x));
        let rhs = linalg::hs_inner(&ch.apply_adjoint(&y), &x);
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn purification_reduces_to_the_state(d in 2usize..5, rank in 1usize..5, seed in any::<u64>()) {
        let rho = DensityOperator::new(vec![System::new("A", d)], density(d, rank, seed)).unwrap();
        let phi = rho.purify("R").unwrap();
        prop_assert!(max_abs(&(phi.reduced().matrix() - rho.matrix())) < 1e-10);
        let state = phi.state();
        let tr = state.matrix().trace();
        prop_assert!((tr.re - 1.0).abs() < 1e-10);
        // the purification is pure
        prop_assert!(entropy(state.matrix()).unwrap().abs() < 1e-8);
    }

    #[test]
    fn relative_entropy_is_monotone_and_bounds_fidelity(din in 2usize..4, dout in 2usize..4, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let rho = random_density_matrix(din, din, &mut rng).unwrap();
        let sigma = random_density_matrix(din, din, &mut rng).unwrap();
        let ch = random_channel(din, dout, 2, &mut rng).unwrap();
        let before = rel_entropy(&rho, &sigma).unwrap().bits;
        let after = rel_entropy(&ch.apply(&rho), &ch.apply(&sigma)).unwrap().bits;
        prop_assert!(before >= -1e-10);
        prop_assert!(after <= before + 1e-9);
        let f = fidelity(&rho, &sigma).unwrap();
        prop_assert!(-f.log2() <= before + 1e-9);
    }

    #[test]
    fn support_violation_gives_infinite_relative_entropy(d in 2usize..5, seed in any::<u64>()) {
        let rho = density(d, d, seed);
        let sigma = density(d, 1, seed ^ 7);
        let re = rel_entropy(&rho, &sigma).unwrap();
        prop_assert!(re.infinite);
        prop_assert!(re.bits.is_infinite());
    }

    #[test]
    fn subunital_maps_do_not_decrease_entropy(din in 2usize..4, extra in 0usize..2, terms in 1usize..4, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let ch = random_subunital_channel(din, din + extra, terms, &mut rng).unwrap();
        let rho = random_density_matrix(din, rng.random_range(1..=din), &mut rng).unwrap();
        let gain = entropy(&ch.apply(&rho)).unwrap() - entropy(&rho).unwrap();
        prop_assert!(gain >= -1e-9);
        prop_assert!(check_entropy_gain(&rho, &ch).unwrap().holds);
    }

    #[test]
    fn uhlmann_value_sits_between_fidelity_and_one(d in 2usize..4, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let a = DensityOperator::new(vec![System::new("A", d)], random_density_matrix(d, d, &mut rng).unwrap()).unwrap();
        let b = DensityOperator::new(vec![System::new("A", d)], random_density_matrix(d, d, &mut rng).unwrap()).unwrap();
        let u = uhlmann_isometry(&a.purify("R").unwrap(), &b.purify("R").unwrap()).unwrap();
        let f = fidelity(a.matrix(), b.matrix()).unwrap();
        prop_assert!(u.value <= 1.0 + 1e-10);
        prop_assert!(u.value >= f - 1e-8);
    }
}

proptest! {
    #![proptest_config(cfg(128))]

    #[test]
    fn efficient_instruments_have_subunital_channel(d in 2usize..5, n in 1usize..5, seed in any::<u64>()) {
        let instr = random_instrument(d, n, true, &mut rng_from_seed(seed)).unwrap();
        let ch = instr.instrument_channel();
        prop_assert!(ch.is_subunital(1e-10));
        prop_assert!(ch.is_cptp(1e-10));
    }
}

proptest! {
    #![proptest_config(cfg(12))]

    #[test]
    fn recoverability_holds_on_random_instances(din in 2usize..4, dout in 2usize..4, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let rho = random_density_matrix(din, rng.random_range(1..=din), &mut rng).unwrap();
        let sigma = random_density_matrix(din, din, &mut rng).unwrap();
        let ch = random_channel(din, dout, 2, &mut rng).unwrap();
        for rep in check_recoverability(&rho, &sigma, &ch, &quad()).unwrap() {
            prop_assert!(rep.holds, "{} lhs {} rhs {}", rep.name, rep.lhs, rep.rhs);
        }
    }

    #[test]
    fn markov_chains_are_recovered(db in 2usize..3, dc in 2usize..3, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let da = 2;
        let rho_bc = random_density_matrix(db * dc, db * dc, &mut rng).unwrap();
        let state = markov_chain_state(&rho_bc, [da, db, dc], &mut rng).unwrap();
        let rep = check_cmi_recovery(&state, [da, db, dc], &quad()).unwrap();
        prop_assert!(rep.lhs.abs() < 1e-9);
        let f = rep.aux_num("fidelity").unwrap();
        prop_assert!(f >= 1.0 - 1e-6, "fidelity {f}");
    }

    #[test]
    fn reduced_dynamics_ignore_unitaries_on_the_output_environment(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let (dr, dq, de) = (2, 2, 2);
        let config = TripartiteConfiguration::random([dr, dq, de], 2, &mut rng).unwrap();
        let v = Interaction::random_unitary(dq, de, &mut rng);
        let u_env = haar_unitary(de, &mut rng);
        let rotated = Interaction::new(kron(&identity(dq), &u_env) * v.matrix(), [dq, de], [dq, de]).unwrap();
        let (e1, _) = reduced_dynamics(&config, &v, &quad()).unwrap();
        let (e2, _) = reduced_dynamics(&config, &rotated, &quad()).unwrap();
        prop_assert!(max_abs(&(e1.choi() - e2.choi())) < 1e-9);
    }
}

fn small_config(seed: u64) -> CampaignConfig {
    CampaignConfig {
        suites: vec![Suite::InfoGain, Suite::Cpdp],
        master_seed: seed,
        trials: Some(3),
        ..CampaignConfig::default()
    }
}

proptest! {
    #![proptest_config(cfg(4))]

    #[test]
    fn reports_are_a_function_of_the_config(seed in any::<u64>()) {
        let (a, _) = campaign::run(&small_config(seed)).unwrap();
        let (b, _) = campaign::run(&small_config(seed)).unwrap();
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn tolerance_override_only_changes_flags(seed in any::<u64>(), tol in 0.0f64..1e-3) {
        let (base, _) = campaign::run(&small_config(seed)).unwrap();
        let mut c = small_config(seed);
        c.tol = Some(tol);
        let (over, _) = campaign::run(&c).unwrap();
        prop_assert_eq!(base.rows.len(), over.rows.len());
        for (x, y) in base.rows.iter().zip(&over.rows) {
            prop_assert_eq!(&x.check, &y.check);
            prop_assert_eq!(x.slack_bits.to_bits(), y.slack_bits.to_bits());
            prop_assert_eq!(x.lhs_bits.to_bits(), y.lhs_bits.to_bits());
            prop_assert_eq!(y.tol, tol);
            prop_assert_eq!(y.holds, y.slack_bits >= -tol);
        }
    }
}

#[test]
fn partial_trace_of_product_recovers_factor() {
    let a = density(2, 2, 3);
    let b = density(3, 2, 4);
    let ab = kron(&a, &b);
    assert!(max_abs(&(partial_trace(&ab, &[2, 3], &[1]) - &a)) < 1e-12);
    assert!(max_abs(&(partial_trace(&ab, &[2, 3], &[0]) - &b)) < 1e-12);
}
