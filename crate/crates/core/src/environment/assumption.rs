//! Checker for the feedback-independence of the best-first argmax.

use serde::Serialize;

use super::GroundTruthModel;
use crate::error::{Result, TutorError};
use crate::policies::{best_extension, bf_decide_unchecked, PolicyDecision};
use crate::scalar::Real;
use crate::sequences::MAX_ENUMERATED_MATERIALS;
use crate::types::{Context, Feedback, MaterialId, MaterialSequence};

/// Two feedback histories of the same best-first prefix whose best next
/// materials differ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    /// Number of materials shown when the argmaxes are compared.
    pub slot: usize,
    pub prefix: MaterialSequence,
    pub history: Vec<Feedback>,
    pub other_history: Vec<Feedback>,
    pub argmax: MaterialId,
    pub other_argmax: MaterialId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Assumption1Report {
    pub context: Context,
    pub holds: bool,
    /// Common best-first prefix, as far as it was followed.
    pub bf_prefix: MaterialSequence,
    pub counterexample: Option<Counterexample>,
}

/// Walks the best-first prefix of context `x`. At every slot it compares
/// the best net extension across all feedback histories that reach the
/// prefix with positive probability and along which best-first has not
/// stopped.
pub fn check_assumption1<S: Real>(model: &GroundTruthModel<S>, x: Context) -> Result<Assumption1Report> {
    let q_count = model.num_materials();
    if q_count > MAX_ENUMERATED_MATERIALS {
        return Err(TutorError::SizeLimit {
            what: "materials for the assumption check",
            value: q_count,
            max: MAX_ENUMERATED_MATERIALS,
        });
    }
    if x.0 >= model.num_contexts() {
        return Err(TutorError::Dimension(format!("context {x} out of range")));
    }
    let Some((first, _)) = best_extension(model, x, &[], &[])? else {
        return Err(TutorError::Invariant("model has no materials".to_string()));
    };
    let mut prefix = vec![first];
    let mut histories: Vec<Vec<Feedback>> = extend_histories(model, x, &[], &[Vec::new()], first)?;

    while prefix.len() < q_count && !histories.is_empty() {
        let mut active = Vec::new();
        let mut chosen: Option<(MaterialId, usize)> = None;
        for (h, fb) in histories.iter().enumerate() {
            if bf_decide_unchecked(model, x, &prefix, fb)? == PolicyDecision::GiveExam {
                continue;
            }
            let (q, _) = best_extension(model, x, &prefix, fb)?.expect("materials remain");
            match chosen {
                None => chosen = Some((q, h)),
                Some((q0, h0)) if q0 != q => {
                    return Ok(Assumption1Report {
                        context: x,
                        holds: false,
                        bf_prefix: MaterialSequence::new(prefix.clone())?,
                        counterexample: Some(Counterexample {
                            slot: prefix.len(),
                            prefix: MaterialSequence::new(prefix)?,
                            history: histories[h0].clone(),
                            other_history: fb.clone(),
                            argmax: q0,
                            other_argmax: q,
                        }),
                    });
                }
                Some(_) => {}
            }
            active.push(fb.clone());
        }
        let Some((next, _)) = chosen else { break };
        histories = extend_histories(model, x, &prefix, &active, next)?;
        prefix.push(next);
    }
    Ok(Assumption1Report {
        context: x,
        holds: true,
        bf_prefix: MaterialSequence::new(prefix)?,
        counterexample: None,
    })
}

fn extend_histories<S: Real>(
    model: &GroundTruthModel<S>,
    x: Context,
    prefix: &[MaterialId],
    histories: &[Vec<Feedback>],
    q: MaterialId,
) -> Result<Vec<Vec<Feedback>>> {
    let mut out = Vec::new();
    for fb in histories {
        let probs = model.feedback_distribution(x, prefix, fb, q)?;
        for (a, p) in probs.iter().enumerate() {
            if *p > S::zero() {
                let mut next = fb.clone();
                next.push(Feedback(a));
                out.push(next);
            }
        }
    }
    Ok(out)
}
