//! Domain types shared by the environment, the policies and the oracles.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TutorError};
use crate::scalar::{total, Real};

/// Index of a student context.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Context(pub usize);

/// Index of a teaching material.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MaterialId(pub usize);

/// Index of a feedback value.
///
/// Value 0 doubles as "no feedback yet", the feedback that precedes the
/// first material. Slot indices keep the two uses apart in every table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Feedback(pub usize);

impl Feedback {
    pub const NONE: Feedback = Feedback(0);
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for MaterialId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Feedback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Ordered list of distinct materials.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<MaterialId>", into = "Vec<MaterialId>")]
pub struct MaterialSequence(Vec<MaterialId>);

impl MaterialSequence {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Rejects sequences that repeat a material.
    pub fn new(items: Vec<MaterialId>) -> Result<Self> {
        for (i, q) in items.iter().enumerate() {
            if items[..i].contains(q) {
                return Err(TutorError::Invariant(format!(
                    "material {q} appears twice in sequence {items:?}"
                )));
            }
        }
        Ok(Self(items))
    }

    pub fn from_indices(items: &[usize]) -> Result<Self> {
        Self::new(items.iter().copied().map(MaterialId).collect())
    }

    /// Checks every id against the material count and the length cap.
    pub fn validate(&self, num_materials: usize) -> Result<()> {
        if self.0.len() > num_materials {
            return Err(TutorError::Dimension(format!(
                "sequence of length {} with only {num_materials} materials",
                self.0.len()
            )));
        }
        if let Some(q) = self.0.iter().find(|q| q.0 >= num_materials) {
            return Err(TutorError::Dimension(format!(
                "material {q} out of range for {num_materials} materials"
            )));
        }
        Ok(())
    }

    pub fn push(&mut self, q: MaterialId) -> Result<()> {
        if self.0.contains(&q) {
            return Err(TutorError::Invariant(format!("material {q} already shown")));
        }
        self.0.push(q);
        Ok(())
    }

    /// True when the sequence holds every material exactly once.
    pub fn is_permutation_of(&self, num_materials: usize) -> bool {
        self.0.len() == num_materials && self.validate(num_materials).is_ok()
    }

    pub fn as_slice(&self) -> &[MaterialId] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<MaterialId> {
        self.0
    }
}

impl Deref for MaterialSequence {
    type Target = [MaterialId];
    fn deref(&self) -> &[MaterialId] {
        &self.0
    }
}

impl TryFrom<Vec<MaterialId>> for MaterialSequence {
    type Error = TutorError;
    fn try_from(v: Vec<MaterialId>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<MaterialSequence> for Vec<MaterialId> {
    fn from(s: MaterialSequence) -> Self {
        s.0
    }
}

impl fmt::Display for MaterialSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, q) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{q}")?;
        }
        write!(f, ")")
    }
}

/// Feedbacks paired with a [`MaterialSequence`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeedbackSequence(pub Vec<Feedback>);

impl FeedbackSequence {
    pub fn from_indices(items: &[usize]) -> Self {
        Self(items.iter().copied().map(Feedback).collect())
    }
}

impl Deref for FeedbackSequence {
    type Target = [Feedback];
    fn deref(&self) -> &[Feedback] {
        &self.0
    }
}

/// Per-material teaching costs.
///
/// With `free_first` set the first material of every episode is not charged;
/// each later material `q` costs `c_q`. Every policy must show at least one
/// material when the model has no score for the empty sequence, so the first
/// charge is then a constant that only shifts payoffs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSchedule<S> {
    pub per_material: Vec<S>,
    #[serde(default)]
    pub free_first: bool,
}

impl<S: Real> CostSchedule<S> {
    pub fn new(per_material: Vec<S>, free_first: bool) -> Result<Self> {
        if let Some((q, c)) = per_material
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.is_finite() && **c >= S::zero()))
        {
            return Err(invalid(format!("cost of material {q} is {c}, must be finite and >= 0")));
        }
        Ok(Self {
            per_material,
            free_first,
        })
    }

    pub fn uniform(num_materials: usize, c: S) -> Result<Self> {
        Self::new(vec![c; num_materials], false)
    }

    pub fn len(&self) -> usize {
        self.per_material.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_material.is_empty()
    }

    /// Full cost of material `q`, regardless of slot.
    pub fn cost(&self, q: MaterialId) -> S {
        self.per_material[q.0]
    }

    /// Cost charged against the payoff for showing `q` at 1-based `slot`.
    pub fn charge(&self, slot: usize, q: MaterialId) -> S {
        if self.free_first && slot == 1 {
            S::zero()
        } else {
            self.per_material[q.0]
        }
    }

    pub fn charged_total(&self, shown: &[MaterialId]) -> S {
        total(shown.iter().enumerate().map(|(i, q)| self.charge(i + 1, *q)))
    }

    pub fn full_total(&self, shown: &[MaterialId]) -> S {
        total(shown.iter().map(|q| self.cost(*q)))
    }

    pub fn sum(&self) -> S {
        total(self.per_material.iter().copied())
    }

    pub fn scaled(&self, factor: S) -> Self {
        Self {
            per_material: self.per_material.iter().map(|c| *c * factor).collect(),
            free_first: self.free_first,
        }
    }

    pub fn cast<T: Real>(&self) -> CostSchedule<T> {
        CostSchedule {
            per_material: self.per_material.iter().map(|c| T::lit(c.as_f64())).collect(),
            free_first: self.free_first,
        }
    }
}

/// One student's completed trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord<S> {
    pub context: Context,
    pub shown: MaterialSequence,
    pub feedbacks: FeedbackSequence,
    pub exam_score: S,
    /// Sum of the full costs of the shown materials.
    pub total_cost: S,
    /// Slot after which the exam was given (`t*`), equal to `shown.len()`.
    pub stop_slot: usize,
    /// Exploration flag for each shown slot.
    pub explored: Vec<bool>,
}

impl<S: Real> EpisodeRecord<S> {
    pub fn new(
        context: Context,
        shown: MaterialSequence,
        feedbacks: FeedbackSequence,
        explored: Vec<bool>,
        exam_score: S,
        costs: &CostSchedule<S>,
    ) -> Result<Self> {
        if shown.len() != feedbacks.len() || explored.len() != shown.len() {
            return Err(TutorError::Invariant(format!(
                "episode lengths disagree: {} shown, {} feedbacks, {} flags",
                shown.len(),
                feedbacks.len(),
                explored.len()
            )));
        }
        if let Some(q) = shown.iter().find(|q| q.0 >= costs.len()) {
            return Err(TutorError::Dimension(format!("material {q} has no cost")));
        }
        if !exam_score.is_finite() {
            return Err(invalid(format!("exam score {exam_score} is not finite")));
        }
        Ok(Self {
            context,
            total_cost: costs.full_total(&shown),
            stop_slot: shown.len(),
            shown,
            feedbacks,
            exam_score,
            explored,
        })
    }

    pub fn is_explored(&self) -> bool {
        self.explored.iter().any(|&e| e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_rejects_duplicates() {
        assert!(MaterialSequence::from_indices(&[0, 1, 0]).is_err());
        let mut s = MaterialSequence::from_indices(&[2, 0]).unwrap();
        assert!(s.push(MaterialId(2)).is_err());
        s.push(MaterialId(1)).unwrap();
        assert!(s.is_permutation_of(3));
        assert_eq!(s.to_string(), "(2,0,1)");
    }

    #[test]
    fn sequence_validate_checks_range() {
        let s = MaterialSequence::from_indices(&[0, 3]).unwrap();
        assert!(s.validate(3).is_err());
        assert!(s.validate(4).is_ok());
    }

    #[test]
    fn sequence_serde_revalidates() {
        let r: std::result::Result<MaterialSequence, _> = serde_json::from_str("[1,1]");
        assert!(r.is_err());
        let s: MaterialSequence = serde_json::from_str("[1,0]").unwrap();
        assert_eq!(s.as_slice(), &[MaterialId(1), MaterialId(0)]);
    }

    #[test]
    fn free_first_charging() {
        let c = CostSchedule::new(vec![0.5, 1.0], true).unwrap();
        let shown = [MaterialId(0), MaterialId(1)];
        assert_eq!(c.charged_total(&shown), 1.0);
        assert_eq!(c.full_total(&shown), 1.5);
        assert!(CostSchedule::new(vec![-1.0], false).is_err());
    }

    #[test]
    fn episode_rejects_mismatched_lengths() {
        let costs = CostSchedule::uniform(3, 0.1).unwrap();
        let shown = MaterialSequence::from_indices(&[0, 1]).unwrap();
        let err = EpisodeRecord::new(
            Context(0),
            shown.clone(),
            FeedbackSequence::from_indices(&[1]),
            vec![false, false],
            0.5,
            &costs,
        );
        assert!(err.is_err());
        let ok = EpisodeRecord::<f64>::new(
            Context(0),
            shown,
            FeedbackSequence::from_indices(&[1, 0]),
            vec![false, true],
            0.5,
            &costs,
        )
        .unwrap();
        assert_eq!(ok.stop_slot, 2);
        assert!((ok.total_cost - 0.2).abs() < 1e-15);
        assert!(ok.is_explored());
    }
}
