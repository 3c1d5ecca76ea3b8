use super::{check_context, DecisionTree, OraclePolicy, OracleValue};
use crate::environment::GroundTruthModel;
use crate::error::{Result, TutorError};
use crate::policies::{bf_decide_unchecked, PolicyDecision};
use crate::scalar::Real;
use crate::sequences::MAX_ENUMERATED_MATERIALS;
use crate::types::{Context, Feedback, MaterialId, MaterialSequence};

/// Largest material count for the adaptive dynamic program.
pub const MAX_ADAPTIVE_MATERIALS: usize = 5;

#[derive(Clone, Copy)]
struct Totals<S> {
    score: S,
    cost: S,
    full_cost: S,
    length: S,
}

impl<S: Real> Totals<S> {
    fn exam(score: S) -> Self {
        Self {
            score,
            cost: S::zero(),
            full_cost: S::zero(),
            length: S::zero(),
        }
    }

    fn value(&self) -> S {
        self.score - self.cost
    }

    fn into_value(self, policy: OraclePolicy) -> OracleValue<S> {
        OracleValue {
            value: self.value(),
            expected_score: self.score,
            expected_cost: self.cost,
            expected_full_cost: self.full_cost,
            expected_length: self.length,
            policy,
        }
    }
}

fn cap(model_q: usize, max: usize, what: &'static str) -> Result<()> {
    if model_q > max {
        return Err(TutorError::SizeLimit {
            what,
            value: model_q,
            max,
        });
    }
    Ok(())
}

/// Expected payoff of showing `q` and then following `child` on every
/// feedback branch.
fn expand<S: Real>(
    model: &GroundTruthModel<S>,
    x: Context,
    shown: &mut Vec<MaterialId>,
    fb: &mut Vec<Feedback>,
    q: MaterialId,
    mut child: impl FnMut(&mut Vec<MaterialId>, &mut Vec<Feedback>) -> Result<(Totals<S>, DecisionTree)>,
) -> Result<(Totals<S>, DecisionTree)> {
    let probs = model.feedback_distribution(x, shown, fb, q)?.to_vec();
    let slot = shown.len() + 1;
    let costs = model.costs();
    let mut acc = Totals {
        score: S::zero(),
        cost: costs.charge(slot, q),
        full_cost: costs.cost(q),
        length: S::one(),
    };
    let mut children = Vec::with_capacity(probs.len());
    shown.push(q);
    for (a, p) in probs.iter().enumerate() {
        fb.push(Feedback(a));
        let (t, tree) = child(shown, fb)?;
        fb.pop();
        acc.score = acc.score + *p * t.score;
        acc.cost = acc.cost + *p * t.cost;
        acc.full_cost = acc.full_cost + *p * t.full_cost;
        acc.length = acc.length + *p * t.length;
        children.push(tree);
    }
    shown.pop();
    Ok((acc, DecisionTree::Show { material: q, children }))
}

/// Exact expected payoff of the best-first benchmark for context `x`.
pub fn bf_value<S: Real>(model: &GroundTruthModel<S>, x: Context) -> Result<OracleValue<S>> {
    check_context(model, x)?;
    cap(model.num_materials(), MAX_ENUMERATED_MATERIALS, "materials for the best-first value")?;
    fn node<S: Real>(
        model: &GroundTruthModel<S>,
        x: Context,
        shown: &mut Vec<MaterialId>,
        fb: &mut Vec<Feedback>,
    ) -> Result<(Totals<S>, DecisionTree)> {
        match bf_decide_unchecked(model, x, shown, fb)? {
            PolicyDecision::GiveExam => Ok((Totals::exam(model.expected_score(x, shown, fb)?), DecisionTree::Exam)),
            PolicyDecision::ShowMaterial(q) => expand(model, x, shown, fb, q, |s, f| node(model, x, s, f)),
        }
    }
    let (totals, tree) = node(model, x, &mut Vec::new(), &mut Vec::new())?;
    Ok(totals.into_value(OraclePolicy::Tree(tree)))
}

/// Best sequence shown in full regardless of feedback; ties go to the
/// shorter, then the lexicographically smaller sequence.
pub fn best_fixed_value<S: Real>(model: &GroundTruthModel<S>, x: Context) -> Result<OracleValue<S>> {
    check_context(model, x)?;
    let nq = model.num_materials();
    cap(nq, MAX_ENUMERATED_MATERIALS, "materials for the best fixed sequence")?;

    struct Search<S> {
        best: Option<(Totals<S>, Vec<MaterialId>)>,
    }
    fn better<S: Real>(t: &Totals<S>, s: &[MaterialId], best: &Option<(Totals<S>, Vec<MaterialId>)>) -> bool {
        match best {
            None => true,
            Some((bt, bs)) => {
                let (v, bv) = (t.value(), bt.value());
                v > bv || (v == bv && (s.len(), s) < (bs.len(), bs.as_slice()))
            }
        }
    }
    fn dfs<S: Real>(
        model: &GroundTruthModel<S>,
        x: Context,
        prefix: &mut Vec<MaterialId>,
        dist: &[(Vec<Feedback>, S)],
        search: &mut Search<S>,
    ) -> Result<()> {
        let nq = model.num_materials();
        for q in (0..nq).map(MaterialId) {
            if prefix.contains(&q) {
                continue;
            }
            let mut next = Vec::with_capacity(dist.len() * model.num_feedbacks());
            for (h, p) in dist {
                let probs = model.feedback_distribution(x, prefix, h, q)?;
                for (a, pa) in probs.iter().enumerate() {
                    if *pa > S::zero() {
                        let mut h2 = h.clone();
                        h2.push(Feedback(a));
                        next.push((h2, *p * *pa));
                    }
                }
            }
            prefix.push(q);
            let mut score = S::zero();
            for (h, p) in &next {
                score = score + *p * model.expected_score(x, prefix, h)?;
            }
            let costs = model.costs();
            let t = Totals {
                score,
                cost: costs.charged_total(prefix),
                full_cost: costs.full_total(prefix),
                length: S::from_count(prefix.len() as u64),
            };
            if better(&t, prefix, &search.best) {
                search.best = Some((t, prefix.clone()));
            }
            if prefix.len() < nq {
                dfs(model, x, prefix, &next, search)?;
            }
            prefix.pop();
        }
        Ok(())
    }
    let mut search = Search { best: None };
    dfs(model, x, &mut Vec::new(), &[(Vec::new(), S::one())], &mut search)?;
    let (totals, seq) = search.best.expect("at least one material");
    Ok(totals.into_value(OraclePolicy::Sequence(MaterialSequence::new(seq)?)))
}

/// Optimal adaptive policy by dynamic programming over the sequence tree.
///
/// Each node takes the better of giving the exam now and the best
/// continuation; the exam wins ties and materials tie to the lowest id. The
/// root offers the exam only if the model scores the empty sequence.
pub fn best_adaptive_value<S: Real>(model: &GroundTruthModel<S>, x: Context) -> Result<OracleValue<S>> {
    check_context(model, x)?;
    cap(model.num_materials(), MAX_ADAPTIVE_MATERIALS, "materials for the adaptive optimum")?;
    fn node<S: Real>(
        model: &GroundTruthModel<S>,
        x: Context,
        shown: &mut Vec<MaterialId>,
        fb: &mut Vec<Feedback>,
    ) -> Result<(Totals<S>, DecisionTree)> {
        let mut best: Option<(Totals<S>, DecisionTree)> = if !shown.is_empty() || model.has_empty_score(x) {
            Some((Totals::exam(model.expected_score(x, shown, fb)?), DecisionTree::Exam))
        } else {
            None
        };
        for q in (0..model.num_materials()).map(MaterialId) {
            if shown.contains(&q) {
                continue;
            }
            let cand = expand(model, x, shown, fb, q, |s, f| node(model, x, s, f))?;
            if best.as_ref().is_none_or(|(b, _)| cand.0.value() > b.value()) {
                best = Some(cand);
            }
        }
        Ok(best.expect("a node offers the exam or a material"))
    }
    let (totals, tree) = node(model, x, &mut Vec::new(), &mut Vec::new())?;
    Ok(totals.into_value(OraclePolicy::Tree(tree)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::tests::example1;
    use crate::environment::{generate_instance, Dims, FactoredTables, GenMode, InstanceGenParams, ScoreNoise};
    use crate::types::CostSchedule;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const X: Context = Context(0);

    #[test]
    fn example1_bf_value() {
        for c in [0.8, 1.0, 2.5, 5.0, 9.4] {
            let v = bf_value(&example1(c), X).unwrap();
            assert_relative_eq!(v.value, 10.7 - 0.5 * c, epsilon = 1e-9);
        }
        let v = bf_value(&example1(1.0), X).unwrap();
        assert_relative_eq!(v.value, 10.2, epsilon = 1e-12);
        assert_relative_eq!(v.expected_length, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn example1_best_fixed_value() {
        let v = best_fixed_value(&example1(1.0), X).unwrap();
        assert_relative_eq!(v.value, 10.1, epsilon = 1e-12);
        assert_eq!(v.policy, OraclePolicy::Sequence(MaterialSequence::from_indices(&[0, 1]).unwrap()));
        // showing a alone is worth 6 once c exceeds 5.1
        let v = best_fixed_value(&example1(6.0), X).unwrap();
        assert_relative_eq!(v.value, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn example1_adaptive_dominates() {
        let m = example1(1.0);
        let dp = best_adaptive_value(&m, X).unwrap();
        assert!(dp.value >= bf_value(&m, X).unwrap().value - 1e-12);
        assert_relative_eq!(dp.value, 10.2, epsilon = 1e-12);
    }

    fn single_material(p1: f64) -> GroundTruthModel<f64> {
        GroundTruthModel::factored(
            Dims::new(1, 1, 2).unwrap(),
            FactoredTables {
                feedback_prob: vec![vec![vec![1.0 - p1, p1]]],
                increments: vec![vec![vec![0.1, 0.4]]],
                base: vec![0.3],
            },
            CostSchedule::uniform(1, 0.0).unwrap(),
            ScoreNoise::Bernoulli,
        )
        .unwrap()
    }

    #[test]
    fn single_material_values_agree() {
        let m = single_material(0.0);
        let bf = bf_value(&m, X).unwrap();
        assert_relative_eq!(bf.value, 0.4);
        assert_relative_eq!(best_fixed_value(&m, X).unwrap().value, 0.4);
        assert_relative_eq!(best_adaptive_value(&m, X).unwrap().value, 0.4);
    }

    #[test]
    fn expensive_materials_stop_after_first() {
        // a single forced material: first the ex-ante argmax, then the exam
        let m = example1(20.0);
        let v = bf_value(&m, X).unwrap();
        assert_relative_eq!(v.value, 6.0);
        assert_eq!(
            v.policy,
            OraclePolicy::Tree(DecisionTree::Show {
                material: MaterialId(0),
                children: vec![DecisionTree::Exam, DecisionTree::Exam],
            })
        );
    }

    #[test]
    fn zero_cost_monotone_scores_prefer_full_length() {
        let m = GroundTruthModel::factored(
            Dims::new(1, 3, 2).unwrap(),
            FactoredTables {
                feedback_prob: vec![vec![vec![0.5, 0.5]; 3]],
                increments: vec![vec![vec![0.1, 0.2], vec![0.05, 0.1], vec![0.15, 0.1]]],
                base: vec![0.1],
            },
            CostSchedule::uniform(3, 0.0).unwrap(),
            ScoreNoise::Bernoulli,
        )
        .unwrap();
        let v = best_fixed_value(&m, X).unwrap();
        let OraclePolicy::Sequence(s) = v.policy else { panic!() };
        assert_eq!(s.len(), 3);
        assert_eq!(s.as_slice(), &[MaterialId(0), MaterialId(1), MaterialId(2)]);
    }

    #[test]
    fn deterministic_feedback_dp_equals_fixed() {
        let m: GroundTruthModel<f64> = GroundTruthModel::factored(
            Dims::new(1, 3, 2).unwrap(),
            FactoredTables {
                feedback_prob: vec![vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]],
                increments: vec![vec![vec![0.2, 0.0], vec![0.0, -0.1], vec![0.3, 0.2]]],
                base: vec![0.2],
            },
            CostSchedule::uniform(3, 0.05).unwrap(),
            ScoreNoise::Bernoulli,
        )
        .unwrap();
        // the factored model scores the empty sequence, fixed sequences do not
        let dp = best_adaptive_value(&m, X).unwrap().value;
        let fixed = best_fixed_value(&m, X).unwrap().value.max(0.2);
        assert_relative_eq!(dp, fixed, epsilon = 1e-12);
    }

    #[test]
    fn size_caps() {
        let m = generate_instance(&InstanceGenParams::new(GenMode::Factored, 6, 1, 2, 1)).unwrap();
        assert!(matches!(best_adaptive_value(&m, X), Err(TutorError::SizeLimit { .. })));
        assert!(bf_value(&m, X).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn dominance_chain(seed in any::<u64>(), q in 1usize..=3, a in 2usize..=3, c in 0.0f64..0.2) {
            let mut p = InstanceGenParams::new(GenMode::Tabular, q, 1, a, seed);
            p.enforce_assumption1 = false;
            p.costs = Some(vec![c; q]);
            let m = generate_instance(&p).unwrap();
            let dp = best_adaptive_value(&m, X).unwrap().value;
            prop_assert!(dp >= bf_value(&m, X).unwrap().value - 1e-9);
            prop_assert!(dp >= best_fixed_value(&m, X).unwrap().value - 1e-9);
        }

        #[test]
        fn bf_value_scales(seed in any::<u64>(), lambda in 0.1f64..10.0) {
            let m = generate_instance(&InstanceGenParams::new(GenMode::Factored, 3, 1, 2, seed).with_min_gap(0.1)).unwrap();
            let v = bf_value(&m, X).unwrap();
            let s = bf_value(&m.scale_model(1.0 / lambda).unwrap(), X).unwrap();
            prop_assert_eq!(&v.policy, &s.policy);
            prop_assert!((s.value - lambda * v.value).abs() < 1e-9);
        }
    }
}
