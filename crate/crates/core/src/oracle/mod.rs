//! Exact small-instance computations: policy values, gaps and bounds.

mod gaps;
mod values;

use std::collections::BTreeMap;

use serde::ser::{Serialize, SerializeMap, Serializer};
use serde::Serialize as DeriveSerialize;

use crate::environment::{check_assumption1, Assumption1Report, GroundTruthModel};
use crate::error::{invalid, Result, TutorError};
use crate::scalar::Real;
use crate::types::{Context, MaterialId, MaterialSequence};

pub use gaps::{compute_gaps, min_score_squared, Candidate, GapReport, GapSlot};
pub use values::{best_adaptive_value, best_fixed_value, bf_value, MAX_ADAPTIVE_MATERIALS};

/// Policy tree: which material to show at each node, by feedback.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecisionTree {
    Exam,
    Show {
        material: MaterialId,
        /// Indexed by the feedback to `material`.
        children: Vec<DecisionTree>,
    },
}

impl DecisionTree {
    /// Number of `Show` nodes.
    pub fn size(&self) -> usize {
        match self {
            Self::Exam => 0,
            Self::Show { children, .. } => 1 + children.iter().map(Self::size).sum::<usize>(),
        }
    }
}

impl Serialize for DecisionTree {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        match self {
            Self::Exam => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("exam", &true)?;
                m.end()
            }
            Self::Show { material, children } => {
                let by_feedback: BTreeMap<String, &DecisionTree> =
                    children.iter().enumerate().map(|(a, c)| (a.to_string(), c)).collect();
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("material", material)?;
                m.serialize_entry("children", &by_feedback)?;
                m.end()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, DeriveSerialize)]
#[serde(rename_all = "snake_case")]
pub enum OraclePolicy {
    Tree(DecisionTree),
    Sequence(MaterialSequence),
}

/// Exact expected payoff of a policy for one context.
#[derive(Clone, Debug, PartialEq, DeriveSerialize)]
pub struct OracleValue<S> {
    /// Expected exam score minus expected charged cost.
    pub value: S,
    pub expected_score: S,
    pub expected_cost: S,
    /// Expected cost including an uncharged first material.
    pub expected_full_cost: S,
    pub expected_length: S,
    pub policy: OraclePolicy,
}

/// Exploration-regret bound `2 |X| |A| Q^2 D ln(n / delta) / n`.
pub fn theorem1_bound<S: Real>(
    num_contexts: usize,
    num_feedbacks: usize,
    num_materials: usize,
    d: S,
    delta: S,
    n: u64,
) -> Result<S> {
    if n == 0 {
        return Err(invalid("bound needs n >= 1"));
    }
    if !(delta > S::zero() && delta < S::one()) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if d.is_nan() || d < S::zero() {
        return Err(invalid(format!("D must be >= 0, got {d}")));
    }
    let q = S::from_count(num_materials as u64);
    let scale = S::lit(2.0) * S::from_count(num_contexts as u64) * S::from_count(num_feedbacks as u64) * q * q;
    let n_s = S::from_count(n);
    Ok(scale * d * (n_s / delta).ln() / n_s)
}

/// Smallest uniform cost in `[lo, hi]` above which best-first beats the best
/// fixed sequence.
///
/// Scans `steps` equal intervals for the first sign change of
/// `bf_value - best_fixed_value`, then bisects it to `tol`. Returns `None`
/// when best-first never wins on the interval.
pub fn crossover_cost<S: Real>(
    model: &GroundTruthModel<S>,
    x: Context,
    lo: S,
    hi: S,
    steps: usize,
    tol: S,
) -> Result<Option<S>> {
    if !(lo >= S::zero() && lo < hi) || steps == 0 || tol.is_nan() || tol <= S::zero() {
        return Err(invalid("crossover search needs 0 <= lo < hi, steps >= 1 and tol > 0"));
    }
    // Values are piecewise linear; this margin only absorbs rounding.
    let margin = S::lit(1e-9);
    let wins = |c: S| -> Result<bool> {
        let m = model.clone().with_uniform_cost(c)?;
        Ok(bf_value(&m, x)?.value - best_fixed_value(&m, x)?.value > margin)
    };
    if wins(lo)? {
        return Ok(Some(lo));
    }
    let width = (hi - lo) / S::from_count(steps as u64);
    let mut below = lo;
    for k in 1..=steps {
        let c = if k == steps { hi } else { lo + width * S::from_count(k as u64) };
        if wins(c)? {
            let mut above = c;
            while above - below > tol {
                let mid = (below + above) / S::lit(2.0);
                if wins(mid)? {
                    above = mid;
                } else {
                    below = mid;
                }
            }
            return Ok(Some((below + above) / S::lit(2.0)));
        }
        below = c;
    }
    Ok(None)
}

/// Everything the oracles know about one context.
#[derive(Clone, Debug, DeriveSerialize)]
pub struct OracleReport<S> {
    pub context: Context,
    pub bf: OracleValue<S>,
    pub best_fixed: OracleValue<S>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_adaptive: Option<OracleValue<S>>,
    pub gaps: GapReport<S>,
    pub assumption1: Assumption1Report,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossover_cost: Option<S>,
}

/// Computes the full oracle report; the adaptive optimum is skipped above
/// [`MAX_ADAPTIVE_MATERIALS`] and the crossover search runs on
/// `crossover_range` when given.
pub fn oracle_report<S: Real>(
    model: &GroundTruthModel<S>,
    x: Context,
    crossover_range: Option<(S, S)>,
) -> Result<OracleReport<S>> {
    let best_adaptive = if model.num_materials() <= MAX_ADAPTIVE_MATERIALS {
        Some(best_adaptive_value(model, x)?)
    } else {
        None
    };
    let crossover = match crossover_range {
        Some((lo, hi)) => crossover_cost(model, x, lo, hi, 200, S::lit(1e-10))?,
        None => None,
    };
    Ok(OracleReport {
        context: x,
        bf: bf_value(model, x)?,
        best_fixed: best_fixed_value(model, x)?,
        best_adaptive,
        gaps: compute_gaps(model, x)?,
        assumption1: check_assumption1(model, x)?,
        crossover_cost: crossover,
    })
}

pub(crate) fn check_context<S: Real>(model: &GroundTruthModel<S>, x: Context) -> Result<()> {
    if x.0 >= model.num_contexts() {
        return Err(TutorError::Dimension(format!("context {x} out of range")));
    }
    Ok(())
}
