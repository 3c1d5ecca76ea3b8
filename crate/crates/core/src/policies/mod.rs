//! Decision policies behind one adaptive-policy interface.
//!
//! - [`bf_decide`]: the best-first oracle benchmark (exact model access).
//! - [`etutor_decide`] / [`etutor_update`]: the online learner.
//! - [`rr_decide`]: random rule.
//! - [`fr_decide`]: fixed rule.

mod baselines;
mod bf;
mod etutor;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::environment::GroundTruthModel;
use crate::error::{Result, TutorError};
use crate::scalar::Real;
use crate::sequences::remaining_materials;
use crate::types::{Context, EpisodeRecord, Feedback, FeedbackSequence, MaterialId, MaterialSequence};

pub use baselines::{fr_decide, rr_decide, FixedRule, RandomRule, DEFAULT_STOP_PROBABILITY};
pub use bf::{bf_decide, BestFirst};
pub(crate) use bf::{best_extension, bf_decide_unchecked};
pub use etutor::{
    derive_params, etutor_decide, etutor_update, ETutor, ETutorParams, ETutorState,
    ExplorationSchedule, StateSnapshot, BETA,
};

/// The single action type every policy emits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyDecision {
    ShowMaterial(MaterialId),
    GiveExam,
}

/// A decision plus whether it was made to explore.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub decision: PolicyDecision,
    pub explored: bool,
}

impl Step {
    pub fn exploit(decision: PolicyDecision) -> Self {
        Self {
            decision,
            explored: false,
        }
    }

    pub fn explore(decision: PolicyDecision) -> Self {
        Self {
            decision,
            explored: true,
        }
    }
}

/// Materials shown and feedbacks received so far in one episode.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EpisodeHistory {
    shown: Vec<MaterialId>,
    feedbacks: Vec<Feedback>,
    explored: Vec<bool>,
}

impl EpisodeHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a history from explicit lists, all of the same length.
    pub fn from_parts(shown: Vec<MaterialId>, feedbacks: Vec<Feedback>, explored: Vec<bool>) -> Result<Self> {
        if shown.len() != feedbacks.len() || shown.len() != explored.len() {
            return Err(TutorError::Invariant(
                "history lists must have equal lengths".to_string(),
            ));
        }
        MaterialSequence::new(shown.clone())?;
        Ok(Self {
            shown,
            feedbacks,
            explored,
        })
    }

    pub fn shown(&self) -> &[MaterialId] {
        &self.shown
    }

    pub fn feedbacks(&self) -> &[Feedback] {
        &self.feedbacks
    }

    pub fn explored(&self) -> &[bool] {
        &self.explored
    }

    pub fn len(&self) -> usize {
        self.shown.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shown.is_empty()
    }

    /// 1-based slot the next material would occupy.
    pub fn next_slot(&self) -> usize {
        self.shown.len() + 1
    }

    pub fn last(&self) -> Option<(MaterialId, Feedback)> {
        Some((*self.shown.last()?, *self.feedbacks.last()?))
    }

    pub fn push(&mut self, q: MaterialId, a: Feedback, explored: bool) -> Result<()> {
        if self.shown.contains(&q) {
            return Err(TutorError::Invariant(format!("material {q} already shown")));
        }
        self.shown.push(q);
        self.feedbacks.push(a);
        self.explored.push(explored);
        Ok(())
    }

    /// Flags the last shown slot as explored.
    pub fn mark_last_explored(&mut self) {
        if let Some(flag) = self.explored.last_mut() {
            *flag = true;
        }
    }

    pub fn remaining(&self, num_materials: usize) -> Result<Vec<MaterialId>> {
        remaining_materials(&self.shown, num_materials)
    }

    pub fn into_record<S: Real>(
        self,
        context: Context,
        exam_score: S,
        costs: &crate::types::CostSchedule<S>,
    ) -> Result<EpisodeRecord<S>> {
        EpisodeRecord::new(
            context,
            MaterialSequence::new(self.shown)?,
            FeedbackSequence(self.feedbacks),
            self.explored,
            exam_score,
            costs,
        )
    }
}

/// A policy that picks materials one at a time and may learn from exams.
pub trait TutorPolicy<S: Real> {
    fn name(&self) -> &str;

    fn decide(&mut self, x: Context, hist: &EpisodeHistory, rng: &mut dyn RngCore) -> Result<Step>;

    /// Called once per finished episode.
    fn observe(&mut self, _episode: &EpisodeRecord<S>) -> Result<()> {
        Ok(())
    }

    /// True for the oracle benchmark itself.
    fn is_benchmark(&self) -> bool {
        false
    }
}

pub(crate) fn check_dims<S: Real>(model: &GroundTruthModel<S>, x: Context, hist: &EpisodeHistory) -> Result<()> {
    if x.0 >= model.num_contexts() {
        return Err(TutorError::Dimension(format!("context {x} out of range")));
    }
    if hist.len() > model.num_materials() || hist.shown.iter().any(|q| q.0 >= model.num_materials()) {
        return Err(TutorError::Dimension("history references unknown materials".to_string()));
    }
    if hist.feedbacks.iter().any(|a| a.0 >= model.num_feedbacks()) {
        return Err(TutorError::Dimension("history references unknown feedbacks".to_string()));
    }
    Ok(())
}
