use massart_forge::error::Error;
use massart_forge::instance::{dot, make_instance, sample_labeled, sample_null, unit_axis, MassartInstance};
use massart_forge::moments::chi_square_vs_gaussian;
use massart_forge::onedim::{build_hard_pair, HardPairConfig};
use massart_forge::sq_lab::experiment::planted_query;
use massart_forge::sq_lab::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn desk_instance(m: usize) -> MassartInstance {
    let pair = build_hard_pair(HardPairConfig::new(0.05, 10, 0.05).unwrap()).unwrap();
    make_instance(pair, unit_axis(m), 0.3).unwrap()
}

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

#[test]
fn constant_and_label_queries() {
    let null = NullDistribution { m: 5, p: 0.8 };
    let mut o = Oracle::new(OracleConfig::honest(0.01, 10), &null, rng(1)).unwrap();
    assert!((o.answer(&SQQuery::constant_one()).unwrap() - 1.0).abs() <= 0.01);
    assert!((o.answer(&SQQuery::label()).unwrap() - 0.6).abs() <= 0.01);
    assert_eq!(o.queries_used(), 2);
}

#[test]
fn query_values_are_clamped() {
    let q = SQQuery::new("big", |x, _| 10.0 * x[0]);
    assert_eq!(q.eval(&[1.0], 1), 1.0);
    assert_eq!(q.eval(&[-1.0], 1), -1.0);
    assert_eq!(SQQuery::new("nan", |_, _| f64::NAN).eval(&[0.0], 1), 0.0);
}

#[test]
fn budget_is_enforced() {
    let null = NullDistribution { m: 2, p: 0.5 };
    let mut o = Oracle::new(OracleConfig::honest(0.1, 2), &null, rng(2)).unwrap();
    o.answer(&SQQuery::label()).unwrap();
    let batch = vec![SQQuery::label(), SQQuery::label()];
    assert!(matches!(o.answer_batch(&batch), Err(Error::BudgetExhausted(2))));
    assert_eq!(o.queries_used(), 1);
    o.answer(&SQQuery::label()).unwrap();
    assert!(matches!(o.answer(&SQQuery::label()), Err(Error::BudgetExhausted(2))));
}

#[test]
fn honest_answers_are_within_tau() {
    let tau = 0.05;
    let inst = desk_instance(4);
    let truth_planted =
        inst.p * inst.pair.a.mass_in(&inst.pair.j1) + (1.0 - inst.p) * inst.pair.b.mass_in(&inst.pair.j1);
    let planted = planted_query(&inst);
    let mut o = Oracle::new(OracleConfig::honest(tau, 200), &inst, rng(3)).unwrap();
    let mut good = 0;
    for _ in 0..100 {
        let a = o.answer_batch(&[planted.clone(), SQQuery::label()]).unwrap();
        if (a[0] - truth_planted).abs() <= tau && (a[1] - 0.4).abs() <= tau {
            good += 1;
        }
    }
    assert!(good >= 99, "{good} of 100 repetitions within tau");
}

#[test]
fn adversarial_mode_is_deterministic_and_accurate() {
    let tau = 0.02;
    let inst = desk_instance(4);
    let null = NullDistribution { m: 4, p: inst.p };
    let truth =
        inst.p * inst.pair.a.mass_in(&inst.pair.j1) + (1.0 - inst.p) * inst.pair.b.mass_in(&inst.pair.j1);
    let q = planted_query(&inst);
    let run = || {
        let mut o = Oracle::new(OracleConfig::adversarial(tau, 5, null), &inst, rng(4)).unwrap();
        o.answer(&q).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.to_bits(), b.to_bits());
    assert!((a - truth).abs() <= tau);
    // the default adversary pushes toward the null value, which is lower
    assert!(a < truth);
}

#[test]
fn planted_gap_matches_independent_monte_carlo() {
    let tau = 0.01;
    let inst = desk_instance(20);
    let q = planted_query(&inst);
    let n = 10_000_000;
    let mc_planted = {
        let mut r = rng(100);
        let mut hits = 0usize;
        for _ in 0..n / 100_000 {
            hits += sample_labeled(&inst, &mut r, 100_000).iter().filter(|s| q.eval(&s.x, s.y) > 0.5).count();
        }
        hits as f64 / n as f64
    };
    let mc_null = {
        let mut r = rng(101);
        let mut hits = 0usize;
        for _ in 0..n / 100_000 {
            hits += sample_null(20, inst.p, &mut r, 100_000).iter().filter(|s| q.eval(&s.x, s.y) > 0.5).count();
        }
        hits as f64 / n as f64
    };
    assert!(mc_planted - mc_null > 5.0 * tau);
    let null = NullDistribution { m: 20, p: inst.p };
    let a = Oracle::new(OracleConfig::honest(tau, 1), &inst, rng(5)).unwrap().answer(&q).unwrap();
    let b = Oracle::new(OracleConfig::honest(tau, 1), &null, rng(6)).unwrap().answer(&q).unwrap();
    assert!(a - b > 5.0 * tau);
    assert!((a - mc_planted).abs() <= tau && (b - mc_null).abs() <= tau);
}

fn heldout_error(h: &Hypothesis, source: &dyn LabeledSource, seed: u64) -> f64 {
    h.error_on(&source.draw(&mut rng(seed), 100_000))
}

fn four_sigma(p: f64) -> f64 {
    4.0 * (p * (1.0 - p) / 100_000.0).sqrt()
}

#[test]
fn constant_learner_examples() {
    let inst = desk_instance(20);
    let mut o = Oracle::new(OracleConfig::honest(0.01, 10), &inst, rng(7)).unwrap();
    let h = learner_constant(&mut o).unwrap();
    assert_eq!(h, Hypothesis::Constant(1));
    assert!((heldout_error(&h, &inst, 8) - 0.3).abs() <= four_sigma(0.3));

    let fair = NullDistribution { m: 3, p: 0.5 };
    let mut o = Oracle::new(OracleConfig::honest(0.01, 10), &fair, rng(9)).unwrap();
    let h = learner_constant(&mut o).unwrap();
    assert!((heldout_error(&h, &fair, 10) - 0.5).abs() <= four_sigma(0.5));

    let skewed = NullDistribution { m: 3, p: 0.9 };
    let mut o = Oracle::new(OracleConfig::honest(0.01, 10), &skewed, rng(11)).unwrap();
    let h = learner_constant(&mut o).unwrap();
    assert_eq!(h, Hypothesis::Constant(1));
    assert!((heldout_error(&h, &skewed, 12) - 0.1).abs() <= four_sigma(0.1));
}

#[test]
fn chow_learner_solves_realizable_data() {
    let src = RealizableLinear { m: 20 };
    let mut o = Oracle::new(OracleConfig::honest(0.01, 1000), &src, rng(13)).unwrap();
    let h = learner_chow(&mut o, 1, &mut rng(14)).unwrap();
    let err = heldout_error(&h, &src, 15);
    assert!(err < 0.05, "error {err} with {}", h.describe());
}

#[test]
fn chow_learner_on_null_is_no_better_than_constant() {
    let null = NullDistribution { m: 10, p: 0.7 };
    for degree in [1, 2] {
        let mut o = Oracle::new(OracleConfig::honest(0.01, 1000), &null, rng(16)).unwrap();
        let h = learner_chow(&mut o, degree, &mut rng(17)).unwrap();
        let err = heldout_error(&h, &null, 18);
        assert!((err - 0.3).abs() <= four_sigma(0.3), "degree {degree}: {err}");
    }
}

#[test]
fn near_orthogonal_example_sizes() {
    let s = near_orthogonal_set(200, 0.3, 100, implied_try_budget(200, 0.3, 100), &mut rng(19)).unwrap();
    assert_eq!(s.vectors.len(), 100);
    assert!(max_overlap(&s.vectors) <= 0.3);
    for v in &s.vectors {
        assert!((dot(v, v) - 1.0).abs() < 1e-12);
    }
    let guard = size_guard(64, 1.0);
    assert!(near_orthogonal_set(64, 1.0, guard.floor() as usize, guard.floor() as usize, &mut rng(20)).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generated_sets_are_near_orthogonal(m in 2usize..60, c in 0.2f64..1.0, size in 1usize..12, seed in any::<u64>()) {
        match near_orthogonal_set(m, c, size, 20_000, &mut rng(seed)) {
            Ok(s) => {
                prop_assert_eq!(s.vectors.len(), size);
                for i in 0..size {
                    for j in 0..i {
                        prop_assert!(dot(&s.vectors[i], &s.vectors[j]).abs() <= c);
                    }
                }
            }
            Err(Error::DirectionsExhausted { tries, .. }) => prop_assert_eq!(tries, 20_000),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}

#[test]
fn small_experiment_report_shape() {
    let config = ExperimentConfig {
        seeds: vec![3],
        learners: vec![LearnerKind::Constant],
        heldout: 20_000,
        ..ExperimentConfig::default()
    };
    let report = distinguishing_experiment(&config).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    for key in ["nu", "rho", "alpha_chi", "N_bound", "tau", "queries_used", "gaps", "learner_errors", "seeds"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report.learner_errors.len(), 1);
    assert_eq!(report.gaps.len(), 1 + 3 * config.directions);
    let pair = build_hard_pair(HardPairConfig::new(0.05, 10, 0.05).unwrap()).unwrap();
    let alpha = chi_square_vs_gaussian(&pair.a).closed_form + chi_square_vs_gaussian(&pair.b).closed_form;
    assert!((report.alpha_chi - alpha).abs() <= 1e-8);
    assert!(report.checks.planted_gap_above_5tau);
    for g in report.gaps.iter().filter(|g| g.kind == "moment") {
        assert!(g.overlap.abs() <= 0.3);
    }
}
