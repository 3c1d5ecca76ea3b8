//! Non-adaptive baselines: the random rule and the fixed rule.

use rand::{Rng, RngCore};

use super::{EpisodeHistory, PolicyDecision, Step, TutorPolicy};
use crate::environment::GroundTruthModel;
use crate::error::{invalid, Result, TutorError};
use crate::scalar::Real;
use crate::types::{Context, MaterialSequence};

pub const DEFAULT_STOP_PROBABILITY: f64 = 0.5;

/// Random rule: give the exam with probability `stop_prob` (always once
/// nothing remains), else show a uniformly random remaining material.
///
/// With an empty history the exam is only an option when
/// `allow_empty_exam` is set.
pub fn rr_decide<R: Rng + ?Sized>(
    hist: &EpisodeHistory,
    num_materials: usize,
    stop_prob: f64,
    allow_empty_exam: bool,
    rng: &mut R,
) -> Result<PolicyDecision> {
    if !(0.0..=1.0).contains(&stop_prob) {
        return Err(invalid(format!("stop probability {stop_prob} outside [0, 1]")));
    }
    let remaining = hist.remaining(num_materials)?;
    if remaining.is_empty() {
        return Ok(PolicyDecision::GiveExam);
    }
    let may_stop = !hist.is_empty() || allow_empty_exam;
    if may_stop && rng.random_bool(stop_prob) {
        return Ok(PolicyDecision::GiveExam);
    }
    Ok(PolicyDecision::ShowMaterial(remaining[rng.random_range(0..remaining.len())]))
}

/// Fixed rule: show `order[t]` at slot `t + 1`, then the exam.
pub fn fr_decide(hist: &EpisodeHistory, order: &MaterialSequence) -> Result<PolicyDecision> {
    if !order.is_permutation_of(order.len()) || order.is_empty() {
        return Err(invalid(format!("fixed order {order} is not a permutation")));
    }
    if hist.shown() != &order[..hist.len().min(order.len())] {
        return Err(TutorError::Invariant(format!(
            "history {:?} is not a prefix of the fixed order {order}",
            hist.shown()
        )));
    }
    Ok(match order.get(hist.len()) {
        Some(&q) => PolicyDecision::ShowMaterial(q),
        None => PolicyDecision::GiveExam,
    })
}

#[derive(Clone, Debug)]
pub struct RandomRule {
    num_materials: usize,
    stop_prob: f64,
    empty_exam: Vec<bool>,
}

impl RandomRule {
    /// Exam-at-start is allowed exactly for the contexts where `model`
    /// scores the empty sequence.
    pub fn for_model<S: Real>(model: &GroundTruthModel<S>, stop_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&stop_prob) {
            return Err(invalid(format!("stop probability {stop_prob} outside [0, 1]")));
        }
        Ok(Self {
            num_materials: model.num_materials(),
            stop_prob,
            empty_exam: (0..model.num_contexts())
                .map(|x| model.has_empty_score(Context(x)))
                .collect(),
        })
    }
}

impl<S: Real> TutorPolicy<S> for RandomRule {
    fn name(&self) -> &str {
        "rr"
    }

    fn decide(&mut self, x: Context, hist: &EpisodeHistory, rng: &mut dyn RngCore) -> Result<Step> {
        let allow = *self
            .empty_exam
            .get(x.0)
            .ok_or_else(|| TutorError::Dimension(format!("context {x} out of range")))?;
        rr_decide(hist, self.num_materials, self.stop_prob, allow, rng).map(Step::exploit)
    }
}

#[derive(Clone, Debug)]
pub struct FixedRule {
    order: MaterialSequence,
}

impl FixedRule {
    pub fn new(order: MaterialSequence, num_materials: usize) -> Result<Self> {
        if !order.is_permutation_of(num_materials) {
            return Err(invalid(format!(
                "fixed order {order} is not a permutation of {num_materials} materials"
            )));
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> &MaterialSequence {
        &self.order
    }
}

impl<S: Real> TutorPolicy<S> for FixedRule {
    fn name(&self) -> &str {
        "fr"
    }

    fn decide(&mut self, _x: Context, hist: &EpisodeHistory, _rng: &mut dyn RngCore) -> Result<Step> {
        fr_decide(hist, &self.order).map(Step::exploit)
    }
}
