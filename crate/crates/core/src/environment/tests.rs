use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fixtures;
use crate::sequences::enumerate_sequences;

pub(crate) fn example1(c: f64) -> GroundTruthModel<f64> {
    fixtures::example1().with_uniform_cost(c).unwrap()
}

/// Two materials with identical feedback and increments.
pub(crate) fn two_material_model() -> GroundTruthModel<f64> {
    let dims = Dims::new(1, 2, 2).unwrap();
    let tables = FactoredTables {
        feedback_prob: vec![vec![vec![0.5, 0.5], vec![0.5, 0.5]]],
        increments: vec![vec![vec![0.1, 0.3], vec![0.1, 0.3]]],
        base: vec![0.2],
    };
    GroundTruthModel::factored(dims, tables, CostSchedule::uniform(2, 0.0).unwrap(), ScoreNoise::Bernoulli).unwrap()
}

fn ids(v: &[usize]) -> Vec<MaterialId> {
    v.iter().copied().map(MaterialId).collect()
}

fn fbs(v: &[usize]) -> Vec<Feedback> {
    v.iter().copied().map(Feedback).collect()
}

const X: Context = Context(0);

#[test]
fn example1_feedback_probability() {
    let m = example1(1.0);
    assert_eq!(m.feedback_distribution(X, &[], &[], MaterialId(0)).unwrap(), &[0.5, 0.5]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 20_000;
    let ones = (0..n)
        .filter(|_| m.sample_feedback(X, &[], &[], MaterialId(0), &mut rng).unwrap() == Feedback(1))
        .count();
    let p = ones as f64 / n as f64;
    assert!((p - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
}

#[test]
fn point_mass_feedback() {
    let m = fixtures::remedial_population();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..100 {
        assert_eq!(m.sample_feedback(X, &[], &[], MaterialId(0), &mut rng).unwrap(), Feedback(0));
    }
}

#[test]
fn sampling_is_deterministic() {
    let m = example1(1.0);
    let draw = || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        (0..32)
            .map(|_| m.sample_feedback(X, &[], &[], MaterialId(0), &mut rng).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(draw(), draw());
}

#[test]
fn sample_rejects_repeated_material() {
    let m = example1(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(m.sample_feedback(X, &ids(&[0]), &fbs(&[1]), MaterialId(0), &mut rng).is_err());
}

#[test]
fn example1_expected_scores() {
    let m = example1(1.0);
    assert_eq!(m.expected_score(X, &ids(&[0]), &fbs(&[1])).unwrap(), 12.0);
    assert_eq!(m.expected_score(X, &ids(&[0, 1]), &fbs(&[0, 0])).unwrap(), 9.0);
}

#[test]
fn example1_ex_ante_scores() {
    let m = example1(1.0);
    assert_relative_eq!(m.ex_ante_score(X, &ids(&[0]), &[]).unwrap(), 6.0, epsilon = 1e-12);
    assert_relative_eq!(m.ex_ante_score(X, &ids(&[1]), &[]).unwrap(), 3.0, epsilon = 1e-12);
    assert_relative_eq!(m.ex_ante_score(X, &ids(&[0, 1]), &fbs(&[1])).unwrap(), 12.8, epsilon = 1e-12);
    assert_relative_eq!(m.ex_ante_score(X, &ids(&[0, 1]), &fbs(&[0])).unwrap(), 9.4, epsilon = 1e-12);
    assert!(m.ex_ante_score(X, &ids(&[0]), &fbs(&[1])).is_err());
}

#[test]
fn deterministic_feedback_ex_ante_equals_score() {
    let m = fixtures::remedial_population();
    let y = m.ex_ante_score(X, &ids(&[0]), &[]).unwrap();
    assert_relative_eq!(y, m.expected_score(X, &ids(&[0]), &fbs(&[0])).unwrap(), epsilon = 1e-15);
}

#[test]
fn empty_increments_give_base() {
    let dims = Dims::new(1, 2, 2).unwrap();
    let tables = FactoredTables {
        feedback_prob: vec![vec![vec![0.3, 0.7]; 2]],
        increments: vec![vec![vec![0.0, 0.0]; 2]],
        base: vec![0.42],
    };
    let m = GroundTruthModel::factored(dims, tables, CostSchedule::uniform(2, 0.1).unwrap(), ScoreNoise::Bernoulli)
        .unwrap();
    for (s, a) in [(vec![], vec![]), (ids(&[1]), fbs(&[0])), (ids(&[1, 0]), fbs(&[1, 1]))] {
        assert_eq!(m.expected_score(X, &s, &a).unwrap(), 0.42);
    }
}

#[test]
fn bernoulli_point_mass_and_mean() {
    let m = fixtures::example1().scale_model(13.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // (a,b) with feedback (1,1) has the maximal mean 13/13 = 1
    for _ in 0..100 {
        assert_eq!(m.sample_exam_score(X, &ids(&[0, 1]), &fbs(&[1, 1]), &mut rng).unwrap(), 1.0);
    }
    let mean = m.expected_score(X, &ids(&[0, 1]), &fbs(&[0, 1])).unwrap();
    let n = 100_000;
    let total: f64 = (0..n)
        .map(|_| m.sample_exam_score(X, &ids(&[0, 1]), &fbs(&[0, 1]), &mut rng).unwrap())
        .sum();
    let se = (mean * (1.0 - mean) / n as f64).sqrt();
    assert!((total / n as f64 - mean).abs() < 3.0 * se);
}

#[test]
fn truncated_normal_zero_sigma_is_mean() {
    let m = fixtures::remedial_population();
    let dims = m.dims();
    let ScoreTables::Factored(f) = m.tables().clone() else { unreachable!() };
    let m = GroundTruthModel::factored(dims, f, m.costs().clone(), ScoreNoise::TruncatedNormal { sigma: 0.0 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mean = m.expected_score(Context(1), &ids(&[2]), &fbs(&[1])).unwrap();
    assert_eq!(m.sample_exam_score(Context(1), &ids(&[2]), &fbs(&[1]), &mut rng).unwrap(), mean);
}

fn mean_consistency(m: &GroundTruthModel<f64>, x: Context, s: &[MaterialId], a: &[Feedback], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 100_000;
    let draws: Vec<f64> = (0..n).map(|_| m.sample_exam_score(x, s, a, &mut rng).unwrap()).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let expected = m.expected_score(x, s, a).unwrap();
    let tol = 4.0 * var.sqrt() / (n as f64).sqrt();
    assert!((mean - expected).abs() <= tol.max(1e-12), "{mean} vs {expected}");
    assert!(draws.iter().all(|d| (0.0..=m.score_bound()).contains(d)));
}

#[test]
fn mean_consistency_truncated_normal() {
    let m = fixtures::remedial_population();
    for (x, s, a) in [
        (0, vec![0], vec![0]),
        (0, vec![0, 2], vec![0, 1]),
        (1, vec![2, 1], vec![1, 1]),
        (1, vec![], vec![]),
    ] {
        mean_consistency(&m, Context(x), &ids(&s), &fbs(&a), 17 + x as u64);
    }
}

#[test]
fn mean_consistency_bernoulli() {
    let m = fixtures::example1().scale_model(13.0).unwrap();
    for s in enumerate_sequences(2, 2).unwrap() {
        let a = vec![Feedback(1); s.len()];
        mean_consistency(&m, X, &s, &a, 2);
    }
}

#[test]
fn ex_ante_is_weighted_average() {
    let m = generate_instance(&InstanceGenParams::new(GenMode::Tabular, 3, 2, 3, 99)).unwrap();
    for x in (0..2).map(Context) {
        for s in enumerate_sequences(3, 3).unwrap() {
            let (last, prefix) = s.split_last().unwrap();
            let past = vec![Feedback(2); prefix.len()];
            let probs = m.feedback_distribution(x, prefix, &past, *last).unwrap().to_vec();
            let mut direct = 0.0;
            for (a, p) in probs.iter().enumerate() {
                let mut fb = past.clone();
                fb.push(Feedback(a));
                direct += p * m.expected_score(x, &s, &fb).unwrap();
            }
            assert_relative_eq!(m.ex_ante_score(x, &s, &past).unwrap(), direct, epsilon = 1e-12);
        }
    }
}

#[test]
fn unnormalized_probabilities_rejected_at_load() {
    let text = fixtures::EXAMPLE1_JSON.replace("[0.6, 0.4]", "[0.6, 0.5]");
    assert_ne!(text, fixtures::EXAMPLE1_JSON);
    let err = GroundTruthModel::from_json_str(&text).unwrap_err();
    assert!(matches!(err, TutorError::Unnormalized { .. }), "{err}");
}

#[test]
fn missing_entry_rejected_at_load() {
    let text = fixtures::EXAMPLE1_JSON.replace("\"0|0,1|1,1\": 13.0", "\"0|0,1|1,1\": 13.0, \"extra\": 1");
    assert!(GroundTruthModel::from_json_str(&text).is_err());
    let text = fixtures::EXAMPLE1_JSON.replace("\"0|0,1|1,1\": 13.0,", "");
    assert_ne!(text, fixtures::EXAMPLE1_JSON);
    let err = GroundTruthModel::from_json_str(&text).unwrap_err();
    assert!(matches!(err, TutorError::MissingEntry { .. }), "{err}");
}

#[test]
fn json_round_trip() {
    for m in [fixtures::example1(), fixtures::remedial_population()] {
        let text = m.to_json_string().unwrap();
        let back = GroundTruthModel::from_json_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json_string().unwrap(), text);
    }
}

#[test]
fn scale_model_divides_means_and_costs() {
    let m = example1(1.0);
    let s = m.scale_model(13.0).unwrap();
    assert_relative_eq!(s.expected_score(X, &ids(&[0, 1]), &fbs(&[1, 1])).unwrap(), 1.0);
    assert_relative_eq!(s.costs().cost(MaterialId(1)), 1.0 / 13.0);
    assert_eq!(s.score_bound(), 1.0);
    assert!(s.costs().free_first);
}

#[test]
fn f32_cast_keeps_values() {
    let m = example1(1.0).cast::<f32>();
    assert!((m.ex_ante_score(X, &ids(&[0, 1]), &fbs(&[1])).unwrap() - 12.8).abs() < 1e-5);
}

#[test]
fn generate_is_deterministic() {
    for mode in [GenMode::Tabular, GenMode::Factored] {
        let p = InstanceGenParams::new(mode, 3, 2, 2, 1234);
        assert_eq!(generate_instance(&p).unwrap(), generate_instance(&p).unwrap());
    }
}

#[test]
fn generated_tabular_tree_is_total() {
    let mut p = InstanceGenParams::new(GenMode::Tabular, 3, 1, 2, 8);
    p.enforce_assumption1 = false;
    let m = generate_instance(&p).unwrap();
    let mut count = 0;
    for s in enumerate_sequences(3, 3).unwrap() {
        for code in 0..(1usize << s.len()) {
            let a: Vec<Feedback> = (0..s.len()).map(|i| Feedback((code >> i) & 1)).collect();
            m.expected_score(X, &s, &a).unwrap();
        }
        count += 1;
    }
    assert_eq!(count, 15);
}

#[test]
fn generate_caps_tabular_size() {
    let p = InstanceGenParams::new(GenMode::Tabular, 7, 1, 2, 0);
    assert!(matches!(generate_instance(&p), Err(TutorError::SizeLimit { .. })));
}

#[test]
fn assumption1_trivial_cases() {
    let q1 = generate_instance(&InstanceGenParams::new(GenMode::Factored, 1, 1, 2, 3)).unwrap();
    assert!(check_assumption1(&q1, X).unwrap().holds);
    assert!(check_assumption1(&example1(1.0), X).unwrap().holds);
}

/// The second material after feedback 0 to material 0 is 1, after
/// feedback 1 it is 2.
fn flipping_model() -> GroundTruthModel<f64> {
    let mut t = TabularTables::new();
    let q = 3;
    let mut stack: Vec<(Vec<MaterialId>, Vec<Feedback>)> = vec![(vec![], vec![])];
    while let Some((s, a)) = stack.pop() {
        for m in (0..q).map(MaterialId) {
            if s.contains(&m) {
                continue;
            }
            t.set_feedback(X, &s, &a, m, vec![0.5, 0.5]);
            for f in (0..2).map(Feedback) {
                let mut s2 = s.clone();
                s2.push(m);
                let mut a2 = a.clone();
                a2.push(f);
                let v = match (s2.as_slice(), a2.first()) {
                    ([MaterialId(0)], _) => 0.5,
                    ([_], _) => 0.1,
                    ([MaterialId(0), MaterialId(1), ..], Some(Feedback(0))) => 0.9,
                    ([MaterialId(0), MaterialId(2), ..], Some(Feedback(1))) => 0.9,
                    _ => 0.2,
                };
                t.set_score(X, &s2, &a2, v);
                if s2.len() < q {
                    stack.push((s2, a2));
                }
            }
        }
    }
    GroundTruthModel::tabular(
        Dims::new(1, 3, 2).unwrap(),
        t,
        CostSchedule::uniform(3, 0.01).unwrap(),
        ScoreNoise::Bernoulli,
        1.0,
    )
    .unwrap()
}

#[test]
fn assumption1_counterexample() {
    let report = check_assumption1(&flipping_model(), X).unwrap();
    assert!(!report.holds);
    let cex = report.counterexample.unwrap();
    assert_eq!(cex.slot, 1);
    assert_eq!(cex.prefix.as_slice(), &[MaterialId(0)]);
    assert_eq!((cex.history.clone(), cex.argmax), (fbs(&[0]), MaterialId(1)));
    assert_eq!((cex.other_history.clone(), cex.other_argmax), (fbs(&[1]), MaterialId(2)));
}

#[test]
fn gapped_factored_instances() {
    let p = InstanceGenParams::new(GenMode::Factored, 4, 2, 2, 77).with_min_gap(0.2);
    let m = generate_instance(&p).unwrap();
    let ScoreTables::Factored(f) = m.tables() else { unreachable!() };
    for x in 0..2 {
        for q in 0..4 {
            let c = m.costs().cost(MaterialId(q));
            assert!((0.2..=0.3).contains(&c));
            let g: f64 = f.feedback_prob[x][q].iter().zip(&f.increments[x][q]).map(|(p, d)| p * d).sum();
            let v = g - c;
            assert!(v >= 0.2 - 1e-12 || v <= -0.2 + 1e-12, "net value {v}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn factored_generation_satisfies_assumption1(seed in any::<u64>(), q in 1usize..=4, x in 1usize..=2) {
        let m = generate_instance(&InstanceGenParams::new(GenMode::Factored, q, x, 2, seed)).unwrap();
        for c in 0..x {
            prop_assert!(check_assumption1(&m, Context(c)).unwrap().holds);
        }
    }

    #[test]
    fn generated_models_are_normalized(seed in any::<u64>()) {
        let mut p = InstanceGenParams::new(GenMode::Tabular, 3, 1, 3, seed);
        p.enforce_assumption1 = false;
        let m = generate_instance(&p).unwrap();
        for s in enumerate_sequences(3, 2).unwrap() {
            let (last, prefix) = s.split_last().unwrap();
            let past = vec![Feedback(1); prefix.len()];
            let sum: f64 = m.feedback_distribution(X, prefix, &past, *last).unwrap().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }
    }
}
