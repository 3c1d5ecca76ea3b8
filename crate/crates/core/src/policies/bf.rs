use rand::RngCore;

use super::{check_dims, EpisodeHistory, PolicyDecision, Step, TutorPolicy};
use crate::environment::GroundTruthModel;
use crate::error::Result;
use crate::scalar::Real;
use crate::types::{Context, Feedback, MaterialId};

/// Remaining material with the largest net ex-ante value
/// `y(x, (shown, q), fb) - charge(q)`, lowest id on ties.
pub(crate) fn best_extension<S: Real>(
    model: &GroundTruthModel<S>,
    x: Context,
    shown: &[MaterialId],
    feedbacks: &[Feedback],
) -> Result<Option<(MaterialId, S)>> {
    let slot = shown.len() + 1;
    let costs = model.costs();
    let mut best: Option<(MaterialId, S)> = None;
    for q in (0..model.num_materials()).map(MaterialId) {
        if shown.contains(&q) {
            continue;
        }
        let v = model.ex_ante_next_unchecked(x, shown, feedbacks, q)? - costs.charge(slot, q);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((q, v));
        }
    }
    Ok(best)
}

pub(crate) fn bf_decide_unchecked<S: Real>(
    model: &GroundTruthModel<S>,
    x: Context,
    shown: &[MaterialId],
    feedbacks: &[Feedback],
) -> Result<PolicyDecision> {
    let Some((q, net)) = best_extension(model, x, shown, feedbacks)? else {
        return Ok(PolicyDecision::GiveExam);
    };
    if shown.is_empty() {
        return Ok(PolicyDecision::ShowMaterial(q));
    }
    let stop_value = model.expected_score(x, shown, feedbacks)?;
    Ok(if stop_value >= net {
        PolicyDecision::GiveExam
    } else {
        PolicyDecision::ShowMaterial(q)
    })
}

/// Best-first benchmark decision.
///
/// The first material is the ex-ante argmax. Afterwards the exam is given
/// iff the current expected score is at least the best remaining ex-ante
/// score net of that material's cost; otherwise that material is shown.
pub fn bf_decide<S: Real>(model: &GroundTruthModel<S>, x: Context, hist: &EpisodeHistory) -> Result<PolicyDecision> {
    check_dims(model, x, hist)?;
    bf_decide_unchecked(model, x, hist.shown(), hist.feedbacks())
}

/// [`bf_decide`] as a [`TutorPolicy`].
#[derive(Clone, Copy, Debug)]
pub struct BestFirst<'m, S> {
    model: &'m GroundTruthModel<S>,
}

impl<'m, S: Real> BestFirst<'m, S> {
    pub fn new(model: &'m GroundTruthModel<S>) -> Self {
        Self { model }
    }
}

impl<S: Real> TutorPolicy<S> for BestFirst<'_, S> {
    fn name(&self) -> &str {
        "bf"
    }

    fn decide(&mut self, x: Context, hist: &EpisodeHistory, _rng: &mut dyn RngCore) -> Result<Step> {
        bf_decide(self.model, x, hist).map(Step::exploit)
    }

    fn is_benchmark(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::tests::{example1, two_material_model};
    use crate::types::Feedback;

    fn hist(shown: &[usize], fb: &[usize]) -> EpisodeHistory {
        EpisodeHistory::from_parts(
            shown.iter().copied().map(MaterialId).collect(),
            fb.iter().copied().map(Feedback).collect(),
            vec![false; shown.len()],
        )
        .unwrap()
    }

    #[test]
    fn example1_first_material_is_a() {
        let m = example1(1.0);
        assert_eq!(
            bf_decide(&m, Context(0), &EpisodeHistory::new()).unwrap(),
            PolicyDecision::ShowMaterial(MaterialId(0))
        );
    }

    #[test]
    fn example1_stops_after_positive_feedback() {
        // 12 >= 12.8 - 1
        let m = example1(1.0);
        assert_eq!(bf_decide(&m, Context(0), &hist(&[0], &[1])).unwrap(), PolicyDecision::GiveExam);
    }

    #[test]
    fn example1_continues_after_negative_feedback() {
        // 0 < 9.4 - 1
        let m = example1(1.0);
        assert_eq!(
            bf_decide(&m, Context(0), &hist(&[0], &[0])).unwrap(),
            PolicyDecision::ShowMaterial(MaterialId(1))
        );
    }

    #[test]
    fn exam_when_nothing_remains() {
        let m = example1(1.0);
        assert_eq!(bf_decide(&m, Context(0), &hist(&[0, 1], &[0, 0])).unwrap(), PolicyDecision::GiveExam);
    }

    #[test]
    fn rejects_out_of_range_history() {
        let m = two_material_model();
        assert!(bf_decide(&m, Context(3), &EpisodeHistory::new()).is_err());
        assert!(bf_decide(&m, Context(0), &hist(&[5], &[0])).is_err());
    }

    #[test]
    fn ties_go_to_lowest_id() {
        // both materials identical
        let m = two_material_model();
        assert_eq!(
            bf_decide(&m, Context(0), &EpisodeHistory::new()).unwrap(),
            PolicyDecision::ShowMaterial(MaterialId(0))
        );
    }
}
