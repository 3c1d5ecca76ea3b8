//! JSON instance files.
//!
//! ```json
//! {
//!   "mode": "tabular",
//!   "num_contexts": 1, "num_materials": 2, "num_feedbacks": 2,
//!   "costs": [0.1, 0.1],
//!   "noise": {"family": "bernoulli"},
//!   "tabular": {
//!     "scores":   {"0|0|1": 0.8, "0|0,1|1,0": 0.9, ...},
//!     "feedback": {"0|||0": [0.5, 0.5], "0|0|1|1": [0.2, 0.8], ...}
//!   }
//! }
//! ```
//!
//! Score keys are `x|s|a` and feedback keys `x|s|a|q` (prefix, past
//! feedbacks, next material), with comma-separated lists. Factored files
//! carry `"factored": {"feedback_prob": [x][q][a], "increments": [x][q][a],
//! "base": [x]}` instead.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    feedback_key_string, score_key_string, Dims, FactoredTables, GroundTruthModel, ScoreNoise,
    ScoreTables, TabularTables,
};
use crate::error::{invalid, Result, TutorError};
use crate::scalar::Real;
use crate::types::{Context, CostSchedule, Feedback, MaterialId};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Bernoulli,
    TruncatedNormal { sigma: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Mode {
    Tabular,
    Factored,
}

fn one() -> f64 {
    1.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    comment: Option<String>,
    num_contexts: usize,
    num_materials: usize,
    num_feedbacks: usize,
    costs: Vec<f64>,
    #[serde(default, skip_serializing_if = "is_false")]
    free_first_material: bool,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    score_bound: f64,
    noise: NoiseSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tabular: Option<TabularFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factored: Option<FactoredFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TabularFile {
    scores: BTreeMap<String, f64>,
    feedback: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactoredFile {
    feedback_prob: Vec<Vec<Vec<f64>>>,
    increments: Vec<Vec<Vec<f64>>>,
    base: Vec<f64>,
}

fn parse_list(key: &str, field: &str) -> Result<Vec<usize>> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| invalid(format!("malformed key `{key}`")))
        })
        .collect()
}

struct ParsedKey {
    context: Context,
    shown: Vec<MaterialId>,
    feedbacks: Vec<Feedback>,
    next: Option<MaterialId>,
}

fn parse_key(key: &str, with_next: bool, dims: Dims) -> Result<ParsedKey> {
    let parts: Vec<&str> = key.split('|').collect();
    let expected = if with_next { 4 } else { 3 };
    if parts.len() != expected {
        return Err(invalid(format!("malformed key `{key}`")));
    }
    let x: usize = parts[0]
        .trim()
        .parse()
        .map_err(|_| invalid(format!("malformed key `{key}`")))?;
    let shown: Vec<MaterialId> = parse_list(key, parts[1])?.into_iter().map(MaterialId).collect();
    let feedbacks: Vec<Feedback> = parse_list(key, parts[2])?.into_iter().map(Feedback).collect();
    let next = if with_next {
        Some(MaterialId(
            parts[3]
                .trim()
                .parse()
                .map_err(|_| invalid(format!("malformed key `{key}`")))?,
        ))
    } else {
        None
    };
    let bad = |why: &str| invalid(format!("key `{key}`: {why}"));
    if x >= dims.contexts {
        return Err(bad("context out of range"));
    }
    if shown.len() != feedbacks.len() {
        return Err(bad("sequence and feedback lengths differ"));
    }
    let all: Vec<MaterialId> = shown.iter().copied().chain(next).collect();
    for (i, q) in all.iter().enumerate() {
        if q.0 >= dims.materials {
            return Err(bad("material out of range"));
        }
        if all[..i].contains(q) {
            return Err(bad("material repeated"));
        }
    }
    if feedbacks.iter().any(|a| a.0 >= dims.feedbacks) {
        return Err(bad("feedback out of range"));
    }
    Ok(ParsedKey {
        context: Context(x),
        shown,
        feedbacks,
        next,
    })
}

impl GroundTruthModel<f64> {
    /// Parses and validates an instance document.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        let dims = Dims::new(file.num_contexts, file.num_materials, file.num_feedbacks)?;
        if file.costs.len() != dims.materials {
            return Err(TutorError::Dimension(format!(
                "`costs` has {} entries for {} materials",
                file.costs.len(),
                dims.materials
            )));
        }
        let costs = CostSchedule::new(file.costs, file.free_first_material)?;
        let noise = match file.noise {
            NoiseSpec::Bernoulli => ScoreNoise::Bernoulli,
            NoiseSpec::TruncatedNormal { sigma } => ScoreNoise::TruncatedNormal { sigma },
        };
        let model = match (file.mode, file.tabular, file.factored) {
            (Mode::Tabular, Some(t), None) => {
                if dims.materials > super::MAX_TABULAR_MATERIALS {
                    return Err(TutorError::SizeLimit {
                        what: "tabular materials",
                        value: dims.materials,
                        max: super::MAX_TABULAR_MATERIALS,
                    });
                }
                let mut tables = TabularTables::new();
                for (key, v) in &t.scores {
                    let k = parse_key(key, false, dims)?;
                    tables.set_score(k.context, &k.shown, &k.feedbacks, *v);
                }
                for (key, probs) in &t.feedback {
                    let k = parse_key(key, true, dims)?;
                    tables.set_feedback(k.context, &k.shown, &k.feedbacks, k.next.unwrap(), probs.clone());
                }
                GroundTruthModel::tabular(dims, tables, costs, noise, file.score_bound)?
            }
            (Mode::Factored, None, Some(f)) => {
                if file.score_bound != 1.0 {
                    return Err(invalid("factored models use score_bound 1"));
                }
                let tables = FactoredTables {
                    feedback_prob: f.feedback_prob,
                    increments: f.increments,
                    base: f.base,
                };
                GroundTruthModel::factored(dims, tables, costs, noise)?
            }
            (Mode::Tabular, _, _) => return Err(invalid("tabular mode needs exactly a `tabular` section")),
            (Mode::Factored, _, _) => return Err(invalid("factored mode needs exactly a `factored` section")),
        };
        Ok(match file.comment {
            Some(c) => model.with_comment(c),
            None => model,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

impl<S: Real> GroundTruthModel<S> {
    /// Canonical pretty-printed JSON; keys are sorted so output is stable.
    pub fn to_json_string(&self) -> Result<String> {
        let conv = |v: S| v.as_f64();
        let (mode, tabular, factored) = match self.tables() {
            ScoreTables::Tabular(t) => {
                let mut scores = BTreeMap::new();
                for (k, v) in &t.scores {
                    let (x, shown, fb) = decode_score_key(k);
                    scores.insert(score_key_string(x, &shown, &fb), conv(*v));
                }
                let mut feedback = BTreeMap::new();
                for (k, v) in &t.feedback {
                    let (x, shown, fb) = decode_score_key(&k[..k.len() - 1]);
                    let q = MaterialId(*k.last().unwrap() as usize);
                    feedback.insert(
                        feedback_key_string(x, &shown, &fb, q),
                        v.iter().map(|p| conv(*p)).collect(),
                    );
                }
                (Mode::Tabular, Some(TabularFile { scores, feedback }), None)
            }
            ScoreTables::Factored(f) => {
                let f = f.map_values(|v| v.as_f64());
                (
                    Mode::Factored,
                    None,
                    Some(FactoredFile {
                        feedback_prob: f.feedback_prob,
                        increments: f.increments,
                        base: f.base,
                    }),
                )
            }
        };
        let file = InstanceFile {
            mode,
            comment: self.comment().map(str::to_string),
            num_contexts: self.num_contexts(),
            num_materials: self.num_materials(),
            num_feedbacks: self.num_feedbacks(),
            costs: self.costs().per_material.iter().map(|c| conv(*c)).collect(),
            free_first_material: self.costs().free_first,
            score_bound: conv(self.score_bound()),
            noise: match self.noise() {
                ScoreNoise::Bernoulli => NoiseSpec::Bernoulli,
                ScoreNoise::TruncatedNormal { sigma } => NoiseSpec::TruncatedNormal { sigma: conv(sigma) },
            },
            tabular,
            factored,
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        Ok(text)
    }
}

fn decode_score_key(key: &[u16]) -> (Context, Vec<MaterialId>, Vec<Feedback>) {
    let x = Context(key[0] as usize);
    let rest = &key[1..];
    let shown = rest.iter().step_by(2).map(|q| MaterialId(*q as usize)).collect();
    let fb = rest.iter().skip(1).step_by(2).map(|a| Feedback(*a as usize)).collect();
    (x, shown, fb)
}
