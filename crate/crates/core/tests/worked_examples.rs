//! Frozen values of the two-material worked example and the closed-form
//! parameter formulas, through the public API.

use approx::assert_relative_eq;
use seqtutor::oracle::{best_adaptive_value, best_fixed_value, bf_value, compute_gaps, theorem1_bound, OraclePolicy};
use seqtutor::{
    bf_decide, count_sequences, derive_params, enumerate_sequences, fixtures, remaining_materials, Context,
    EpisodeHistory, Feedback, MaterialId, MaterialSequence, PolicyDecision,
};

const X: Context = Context(0);
const A: MaterialId = MaterialId(0);
const B: MaterialId = MaterialId(1);

fn fb(v: &[usize]) -> Vec<Feedback> {
    v.iter().copied().map(Feedback).collect()
}

#[test]
fn example_feedback_and_scores() {
    let m = fixtures::example1();
    assert_relative_eq!(m.feedback_distribution(X, &[], &[], A).unwrap()[1], 0.5);
    assert_relative_eq!(m.expected_score(X, &[A], &fb(&[1])).unwrap(), 12.0);
    assert_relative_eq!(m.expected_score(X, &[A, B], &fb(&[0, 0])).unwrap(), 9.0);
    assert_relative_eq!(m.ex_ante_score(X, &[A], &[]).unwrap(), 6.0);
    assert_relative_eq!(m.ex_ante_score(X, &[A, B], &fb(&[1])).unwrap(), 12.8, epsilon = 1e-12);
    assert_relative_eq!(m.ex_ante_score(X, &[A, B], &fb(&[0])).unwrap(), 9.4, epsilon = 1e-12);
}

#[test]
fn example_best_first_decisions_at_unit_cost() {
    let m = fixtures::example1().with_uniform_cost(1.0).unwrap();
    let after = |a: usize| EpisodeHistory::from_parts(vec![A], fb(&[a]), vec![false]).unwrap();
    assert_eq!(bf_decide(&m, X, &EpisodeHistory::new()).unwrap(), PolicyDecision::ShowMaterial(A));
    assert_eq!(bf_decide(&m, X, &after(1)).unwrap(), PolicyDecision::GiveExam);
    assert_eq!(bf_decide(&m, X, &after(0)).unwrap(), PolicyDecision::ShowMaterial(B));
    let full = EpisodeHistory::from_parts(vec![A, B], fb(&[0, 1]), vec![false, false]).unwrap();
    assert_eq!(bf_decide(&m, X, &full).unwrap(), PolicyDecision::GiveExam);
}

#[test]
fn example_oracle_values_at_unit_cost() {
    let m = fixtures::example1().with_uniform_cost(1.0).unwrap();
    let bf = bf_value(&m, X).unwrap();
    assert_relative_eq!(bf.value, 10.2, epsilon = 1e-12);
    assert_relative_eq!(bf.expected_length, 1.5, epsilon = 1e-12);
    let fixed = best_fixed_value(&m, X).unwrap();
    assert_relative_eq!(fixed.value, 10.1, epsilon = 1e-12);
    assert_eq!(fixed.policy, OraclePolicy::Sequence(MaterialSequence::from_indices(&[0, 1]).unwrap()));
    assert_relative_eq!(best_adaptive_value(&m, X).unwrap().value, 10.2, epsilon = 1e-12);
    let gaps = compute_gaps(&m, X).unwrap();
    assert_relative_eq!(gaps.first_choice.as_ref().unwrap().gap, 3.0, epsilon = 1e-12);
}

#[test]
fn example_value_lines_across_costs() {
    for c in [0.8, 1.5, 3.0, 5.1, 7.0, 9.4] {
        let m = fixtures::example1().with_uniform_cost(c).unwrap();
        assert_relative_eq!(bf_value(&m, X).unwrap().value, 10.7 - 0.5 * c, epsilon = 1e-9);
        let fixed = best_fixed_value(&m, X).unwrap().value;
        assert_relative_eq!(fixed, (11.1 - c).max(6.0), epsilon = 1e-9);
    }
}

#[test]
fn exploration_constants() {
    let p = derive_params(0.05_f64, 3, 0.5).unwrap();
    assert_relative_eq!(p.d, 16.0);
    assert_relative_eq!(p.delta, 0.0411, epsilon = 1e-4);
    assert_relative_eq!(derive_params(0.05_f64, 3, 1.0).unwrap().d, 4.0);
    let p = derive_params(1.0_f64, 1, 1.0).unwrap();
    assert_relative_eq!(p.delta, 0.5513, epsilon = 1e-4);
    assert!(derive_params(0.05_f64, 3, 0.0).is_err());
}

#[test]
fn regret_bound_formula() {
    let b: f64 = theorem1_bound(1, 2, 2, 16.0, 0.1, 1000).unwrap();
    assert_relative_eq!(b, 256.0 * 10_000f64.ln() / 1000.0, epsilon = 1e-12);
    assert_relative_eq!(b, 2.358, epsilon = 1e-3);
    let far: f64 = theorem1_bound(1, 2, 2, 16.0, 0.1, 1_000_000_000).unwrap();
    assert!(far < 1e-3 * b * (1e9f64 / 0.1).ln() / (1e3f64 / 0.1).ln());
    assert_eq!(theorem1_bound(1, 2, 2, 0.0_f64, 0.1, 1000).unwrap(), 0.0);
}

#[test]
fn sequence_counts_and_listing() {
    assert_eq!(count_sequences(1).unwrap(), 1);
    assert_eq!(count_sequences(2).unwrap(), 4);
    assert_eq!(count_sequences(3).unwrap(), 15);
    assert!(count_sequences(0).is_err());
    assert!(count_sequences(21).is_err());
    let two: Vec<_> = enumerate_sequences(2, 2).unwrap().collect();
    assert_eq!(two.len(), 4);
    let short: Vec<_> = enumerate_sequences(3, 1).unwrap().map(|s| s.into_inner()).collect();
    assert_eq!(short, vec![vec![MaterialId(0)], vec![MaterialId(1)], vec![MaterialId(2)]]);
    assert!(enumerate_sequences(9, 9).is_err());
    assert_eq!(remaining_materials(&[MaterialId(0), MaterialId(2)], 3).unwrap(), vec![MaterialId(1)]);
    assert!(remaining_materials(&[MaterialId(0), MaterialId(0)], 3).is_err());
}

#[test]
fn example_runs_in_single_precision() {
    let m = fixtures::example1().with_uniform_cost(1.0).unwrap().cast::<f32>();
    assert_relative_eq!(bf_value(&m, X).unwrap().value, 10.2_f32, epsilon = 1e-4);
    assert_relative_eq!(best_fixed_value(&m, X).unwrap().value, 10.1_f32, epsilon = 1e-4);
}
