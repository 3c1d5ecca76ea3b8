use serde::Serialize;

use super::check_context;
use crate::environment::{GroundTruthModel, MAX_TABULAR_MATERIALS};
use crate::error::{Result, TutorError};
use crate::policies::{bf_decide_unchecked, PolicyDecision};
use crate::scalar::Real;
use crate::sequences::MAX_ENUMERATED_MATERIALS;
use crate::types::{Context, Feedback, MaterialId, MaterialSequence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Candidate {
    Exam,
    Material(MaterialId),
}

/// Smallest top-two gap among the best-first decisions made after `slot`
/// materials (`slot = 0` is the choice of the first material).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapSlot<S> {
    pub slot: usize,
    pub gap: S,
    /// Node attaining the minimum.
    pub prefix: MaterialSequence,
    pub history: Vec<Feedback>,
    pub best: Candidate,
    pub second: Candidate,
}

/// Decision gaps of best-first for one context, all net of cost.
///
/// Candidates after `t >= 1` materials are the current mean score (exam) and
/// the ex-ante score of each remaining material minus its charge; each slot
/// is minimized over the feedback histories best-first reaches with
/// positive probability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport<S> {
    pub context: Context,
    pub first_choice: Option<GapSlot<S>>,
    /// Slots `1..Q-1` that best-first reaches, ascending.
    pub after_slot: Vec<GapSlot<S>>,
    /// Minimum over every entry above.
    pub delta_min: Option<S>,
}

impl<S: Real> GapReport<S> {
    /// The first choice and the slots `2..Q-1`, leaving out the gap after
    /// the first material.
    pub fn reduced_slots(&self) -> Vec<&GapSlot<S>> {
        self.first_choice
            .iter()
            .chain(self.after_slot.iter().filter(|g| g.slot >= 2))
            .collect()
    }

    pub fn reduced_delta_min(&self) -> Option<S> {
        self.reduced_slots().iter().map(|g| g.gap).reduce(S::min)
    }

    /// Gap of the decision after `slot` materials.
    pub fn slot(&self, slot: usize) -> Option<&GapSlot<S>> {
        if slot == 0 {
            self.first_choice.as_ref()
        } else {
            self.after_slot.iter().find(|g| g.slot == slot)
        }
    }
}

fn top_two<S: Real>(cands: &[(Candidate, S)]) -> Option<(Candidate, Candidate, S)> {
    let mut best: Option<(Candidate, S)> = None;
    let mut second: Option<(Candidate, S)> = None;
    for &(c, v) in cands {
        match best {
            Some((_, b)) if v <= b => {
                if second.is_none_or(|(_, s)| v > s) {
                    second = Some((c, v));
                }
            }
            _ => {
                second = best;
                best = Some((c, v));
            }
        }
    }
    let ((b, bv), (s, sv)) = (best?, second?);
    Some((b, s, bv - sv))
}

fn record<S: Real>(
    slot_entry: &mut Option<GapSlot<S>>,
    slot: usize,
    cands: &[(Candidate, S)],
    prefix: &[MaterialId],
    history: &[Feedback],
) -> Result<()> {
    let Some((best, second, gap)) = top_two(cands) else {
        return Ok(());
    };
    if slot_entry.as_ref().is_none_or(|g| gap < g.gap) {
        *slot_entry = Some(GapSlot {
            slot,
            gap,
            prefix: MaterialSequence::new(prefix.to_vec())?,
            history: history.to_vec(),
            best,
            second,
        });
    }
    Ok(())
}

/// Gap report for context `x`; a zero gap at any slot is an error.
pub fn compute_gaps<S: Real>(model: &GroundTruthModel<S>, x: Context) -> Result<GapReport<S>> {
    check_context(model, x)?;
    let nq = model.num_materials();
    if nq > MAX_ENUMERATED_MATERIALS {
        return Err(TutorError::SizeLimit {
            what: "materials for the gap report",
            value: nq,
            max: MAX_ENUMERATED_MATERIALS,
        });
    }
    let costs = model.costs();
    let mut first = None;
    let first_cands: Vec<(Candidate, S)> = (0..nq)
        .map(MaterialId)
        .map(|q| Ok((Candidate::Material(q), model.ex_ante_next(x, &[], &[], q)? - costs.charge(1, q))))
        .collect::<Result<_>>()?;
    record(&mut first, 0, &first_cands, &[], &[])?;

    let mut slots: Vec<Option<GapSlot<S>>> = vec![None; nq];
    let mut stack: Vec<(Vec<MaterialId>, Vec<Feedback>)> = Vec::new();
    if let PolicyDecision::ShowMaterial(q) = bf_decide_unchecked(model, x, &[], &[])? {
        push_children(model, x, &[], &[], q, &mut stack)?;
    }
    while let Some((shown, fb)) = stack.pop() {
        let t = shown.len();
        if t == nq {
            continue;
        }
        let slot = t + 1;
        let mut cands = vec![(Candidate::Exam, model.expected_score(x, &shown, &fb)?)];
        for q in (0..nq).map(MaterialId).filter(|q| !shown.contains(q)) {
            cands.push((Candidate::Material(q), model.ex_ante_next(x, &shown, &fb, q)? - costs.charge(slot, q)));
        }
        record(&mut slots[t], t, &cands, &shown, &fb)?;
        if let PolicyDecision::ShowMaterial(q) = bf_decide_unchecked(model, x, &shown, &fb)? {
            push_children(model, x, &shown, &fb, q, &mut stack)?;
        }
    }

    let after_slot: Vec<GapSlot<S>> = slots.into_iter().flatten().collect();
    let report = GapReport {
        context: x,
        delta_min: first.iter().chain(after_slot.iter()).map(|g| g.gap).reduce(S::min),
        first_choice: first,
        after_slot,
    };
    if let Some(g) = report.first_choice.iter().chain(report.after_slot.iter()).find(|g| g.gap <= S::zero()) {
        return Err(TutorError::ZeroGap {
            context: x.0,
            slot: g.slot,
        });
    }
    Ok(report)
}

fn push_children<S: Real>(
    model: &GroundTruthModel<S>,
    x: Context,
    shown: &[MaterialId],
    fb: &[Feedback],
    q: MaterialId,
    stack: &mut Vec<(Vec<MaterialId>, Vec<Feedback>)>,
) -> Result<()> {
    let probs = model.feedback_distribution(x, shown, fb, q)?;
    for (a, p) in probs.iter().enumerate().rev() {
        if *p > S::zero() {
            let mut s = shown.to_vec();
            s.push(q);
            let mut f = fb.to_vec();
            f.push(Feedback(a));
            stack.push((s, f));
        }
    }
    Ok(())
}

/// The squared smallest mean score over every context and nonempty node,
/// the other reading of the minimum gap.
pub fn min_score_squared<S: Real>(model: &GroundTruthModel<S>) -> Result<S> {
    let nq = model.num_materials();
    if nq > MAX_TABULAR_MATERIALS {
        return Err(TutorError::SizeLimit {
            what: "materials for the score minimum",
            value: nq,
            max: MAX_TABULAR_MATERIALS,
        });
    }
    let mut min = model.score_bound();
    for x in (0..model.num_contexts()).map(Context) {
        let mut stack: Vec<(Vec<MaterialId>, Vec<Feedback>)> = vec![(Vec::new(), Vec::new())];
        while let Some((shown, fb)) = stack.pop() {
            if !shown.is_empty() {
                min = min.min(model.expected_score(x, &shown, &fb)?);
            }
            if shown.len() == nq {
                continue;
            }
            for q in (0..nq).map(MaterialId).filter(|q| !shown.contains(q)) {
                for a in (0..model.num_feedbacks()).map(Feedback) {
                    let mut s = shown.clone();
                    s.push(q);
                    let mut f = fb.clone();
                    f.push(a);
                    stack.push((s, f));
                }
            }
        }
    }
    Ok(min * min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::tests::{example1, two_material_model};
    use crate::environment::{generate_instance, GenMode, InstanceGenParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const X: Context = Context(0);

    #[test]
    fn example1_gaps() {
        let g = compute_gaps(&example1(1.0), X).unwrap();
        let first = g.first_choice.as_ref().unwrap();
        assert_relative_eq!(first.gap, 3.0, epsilon = 1e-12);
        assert_eq!(first.best, Candidate::Material(MaterialId(0)));
        // after a with feedback 1: exam 12 vs 12.8 - 1
        let after = g.slot(1).unwrap();
        assert_relative_eq!(after.gap, 0.2, epsilon = 1e-12);
        assert_eq!(after.history, vec![Feedback(1)]);
        assert_relative_eq!(g.delta_min.unwrap(), 0.2, epsilon = 1e-12);
        // Q = 2: only the first choice counts in the slot range 1..Q-1
        assert_eq!(g.reduced_slots().len(), 1);
        assert_relative_eq!(g.reduced_delta_min().unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_materials_have_zero_gap() {
        let err = compute_gaps(&two_material_model(), X).unwrap_err();
        assert!(matches!(err, TutorError::ZeroGap { context: 0, slot: 0 }), "{err}");
    }

    #[test]
    fn generated_min_gap_is_respected() {
        for seed in 0..20 {
            let m = generate_instance(&InstanceGenParams::new(GenMode::Factored, 4, 2, 2, seed).with_min_gap(0.2))
                .unwrap();
            for x in 0..2 {
                let g = compute_gaps(&m, Context(x)).unwrap();
                assert!(g.delta_min.unwrap() >= 0.2 - 1e-9, "seed {seed}: {:?}", g.delta_min);
            }
        }
    }

    #[test]
    fn min_score_squared_example() {
        let m = crate::fixtures::remedial_population();
        let v = min_score_squared(&m).unwrap();
        assert!(v > 0.0 && v < 1.0);
        assert_eq!(min_score_squared(&example1(1.0)).unwrap(), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(30))]

        #[test]
        fn gaps_scale(seed in any::<u64>(), lambda in 0.1f64..10.0) {
            let m = generate_instance(&InstanceGenParams::new(GenMode::Factored, 3, 1, 2, seed).with_min_gap(0.1)).unwrap();
            let g = compute_gaps(&m, X).unwrap();
            let s = compute_gaps(&m.scale_model(1.0 / lambda).unwrap(), X).unwrap();
            prop_assert_eq!(g.after_slot.len(), s.after_slot.len());
            prop_assert!((s.delta_min.unwrap() - lambda * g.delta_min.unwrap()).abs() < 1e-9);
        }
    }
}
