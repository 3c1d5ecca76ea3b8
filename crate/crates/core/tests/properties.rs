use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seqtutor::harness::{run_experiment, ExperimentConfig, PolicySpec, ScheduleSpec};
use seqtutor::oracle::{best_adaptive_value, best_fixed_value, bf_value};
use seqtutor::{
    check_assumption1, etutor_decide, etutor_update, generate_instance, Context, ETutorParams, ETutorState,
    EpisodeHistory, ExplorationSchedule, GenMode, InstanceGenParams, Model, PolicyDecision,
};

fn tabular(q: usize, a: usize, seed: u64, cost: f64) -> Model {
    let mut p = InstanceGenParams::new(GenMode::Tabular, q, 1, a, seed);
    p.enforce_assumption1 = false;
    p.costs = Some(vec![cost; q]);
    generate_instance(&p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adaptive_dominates(q in 1usize..=3, a in 2usize..=3, seed in any::<u64>(), cost in 0.0..0.2f64) {
        let m = tabular(q, a, seed, cost);
        let x = Context(0);
        let dp = best_adaptive_value(&m, x).unwrap().value;
        let bf = bf_value(&m, x).unwrap().value;
        let fixed = best_fixed_value(&m, x).unwrap().value;
        prop_assert!(dp >= bf - 1e-9);
        prop_assert!(dp >= fixed - 1e-9);
    }

    #[test]
    fn single_material_has_no_freedom(a in 2usize..=3, seed in any::<u64>(), cost in 0.0..0.2f64) {
        let m = tabular(1, a, seed, cost);
        let x = Context(0);
        let bf = bf_value(&m, x).unwrap().value;
        prop_assert!((bf - best_fixed_value(&m, x).unwrap().value).abs() < 1e-12);
        let exam_only = if m.has_empty_score(x) { m.expected_score(x, &[], &[]).unwrap() } else { f64::NEG_INFINITY };
        prop_assert!((bf.max(exam_only) - best_adaptive_value(&m, x).unwrap().value).abs() < 1e-12);
    }

    #[test]
    fn scaling_scales_values(q in 1usize..=3, seed in any::<u64>(), factor in 0.5..20.0f64) {
        let m = tabular(q, 2, seed, 0.05);
        let scaled = m.scale_model(factor).unwrap();
        let x = Context(0);
        let v = bf_value(&m, x).unwrap().value;
        prop_assert!((bf_value(&scaled, x).unwrap().value * factor - v).abs() < 1e-9);
    }

    #[test]
    fn factored_instances_satisfy_the_assumption(q in 1usize..=4, contexts in 1usize..=2, seed in any::<u64>()) {
        let m = generate_instance(&InstanceGenParams::new(GenMode::Factored, q, contexts, 2, seed)).unwrap();
        for x in 0..contexts {
            prop_assert!(check_assumption1(&m, Context(x)).unwrap().holds);
        }
    }

    #[test]
    fn learner_means_stay_in_range(seed in any::<u64>(), students in 1usize..40) {
        let m = generate_instance(&InstanceGenParams::new(GenMode::Factored, 3, 2, 2, seed)).unwrap();
        let params = ETutorParams::new(ExplorationSchedule::new(1.0, 0.1).unwrap(), m.costs().clone());
        let mut state = ETutorState::new(2, 3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..students {
            let x = Context(i % 2);
            let mut hist = EpisodeHistory::new();
            loop {
                let step = etutor_decide(&state, &params, x, &hist, &mut rng).unwrap();
                match step.decision {
                    PolicyDecision::GiveExam => {
                        if step.explored {
                            hist.mark_last_explored();
                        }
                        break;
                    }
                    PolicyDecision::ShowMaterial(q) => {
                        let a = m.sample_feedback(x, hist.shown(), hist.feedbacks(), q, &mut rng).unwrap();
                        hist.push(q, a, step.explored).unwrap();
                    }
                }
            }
            let score = m.sample_exam_score(x, hist.shown(), hist.feedbacks(), &mut rng).unwrap();
            let record = hist.into_record(x, score, m.costs()).unwrap();
            etutor_update(&mut state, &record).unwrap();
        }
        prop_assert_eq!(state.student_index(), students as u64 + 1);
        let snap = state.snapshot();
        prop_assert!(snap.r_hat.values().chain(snap.y_hat.values()).all(|v| (0.0..=1.0).contains(v)));
        prop_assert_eq!(ETutorState::<f64>::from_snapshot(&snap).unwrap(), state);
    }
}

#[test]
fn best_first_has_no_regret_against_itself() {
    let m = generate_instance(&InstanceGenParams::new(GenMode::Factored, 3, 2, 2, 11).with_min_gap(0.2)).unwrap();
    let r = run_experiment(&m, &ExperimentConfig::new(PolicySpec::Bf, 2000, 4, 1)).unwrap();
    let p = r.pooled(2000).unwrap();
    for s in r.summaries(2000).unwrap() {
        assert_eq!(s.explored_episodes, 0);
        assert_eq!(s.exploit_mismatches, 0);
    }
    assert!(p.regret.mean.abs() <= 4.0 * p.regret.stderr.max(1e-3));
}

#[test]
fn single_precision_runs_match_in_shape() {
    let m = generate_instance(&InstanceGenParams::new(GenMode::Factored, 2, 1, 2, 3).with_min_gap(0.3)).unwrap();
    let spec = PolicySpec::Etutor {
        schedule: ScheduleSpec::Explicit { d: 1.0, delta: 0.1 },
    };
    let cfg = ExperimentConfig::new(spec, 300, 2, 5);
    let wide = run_experiment(&m, &cfg).unwrap();
    let narrow = run_experiment(&m.cast::<f32>(), &cfg).unwrap();
    assert_eq!(wide.rows().count(), narrow.rows().count());
    let bf_wide = wide.bf_values[0];
    assert!((f64::from(narrow.bf_values[0]) - bf_wide).abs() < 1e-5);
}
