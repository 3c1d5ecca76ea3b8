//! Ground-truth student models.
//!
//! A [`GroundTruthModel`] answers three questions for every context and
//! (materials, feedbacks) history: how likely each feedback is for the next
//! material, what the expected exam score is, and how exam scores scatter
//! around that mean. Two representations exist:
//!
//! - **tabular**: explicit probability vectors and mean scores for every
//!   node of the (sequence, feedback-history) tree; feedback probabilities
//!   may depend on the whole history.
//! - **factored**: history-independent feedback probabilities per
//!   (context, material) and an additive score `base + sum of increments`,
//!   clamped to `[0, score_bound]`.

mod assumption;
mod generate;
mod io;

use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result, TutorError};
use crate::scalar::Real;
use crate::types::{Context, CostSchedule, Feedback, MaterialId};

pub use assumption::{check_assumption1, Assumption1Report, Counterexample};
pub use generate::{generate_instance, GenMode, InstanceGenParams};
pub use io::NoiseSpec;

/// Largest material count accepted by tabular models.
pub const MAX_TABULAR_MATERIALS: usize = 6;

/// Tolerance on the sum of a feedback probability vector.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub contexts: usize,
    pub materials: usize,
    pub feedbacks: usize,
}

impl Dims {
    pub fn new(contexts: usize, materials: usize, feedbacks: usize) -> Result<Self> {
        if contexts == 0 || materials == 0 || feedbacks == 0 {
            return Err(invalid(format!(
                "dimensions must be positive (contexts={contexts}, materials={materials}, feedbacks={feedbacks})"
            )));
        }
        if contexts.max(materials).max(feedbacks) > u16::MAX as usize {
            return Err(TutorError::SizeLimit {
                what: "dimension",
                value: contexts.max(materials).max(feedbacks),
                max: u16::MAX as usize,
            });
        }
        Ok(Self {
            contexts,
            materials,
            feedbacks,
        })
    }
}

/// Distribution of exam scores around their mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScoreNoise<S> {
    /// `score_bound` with probability `mean / score_bound`, else 0.
    Bernoulli,
    /// Normal noise truncated symmetrically to `[mean - h, mean + h]` with
    /// `h = min(mean, bound - mean)`, so the mean is preserved exactly.
    TruncatedNormal { sigma: S },
}

impl<S: Real> ScoreNoise<S> {
    fn cast<T: Real>(self) -> ScoreNoise<T> {
        match self {
            Self::Bernoulli => ScoreNoise::Bernoulli,
            Self::TruncatedNormal { sigma } => ScoreNoise::TruncatedNormal {
                sigma: T::lit(sigma.as_f64()),
            },
        }
    }
}

/// Explicit per-node tables.
///
/// Score keys are `[x, q1, a1, .., qt, at]`; feedback keys are
/// `[x, q1, a1, .., q(t-1), a(t-1), q]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TabularTables<S> {
    scores: HashMap<Vec<u16>, S>,
    feedback: HashMap<Vec<u16>, Vec<S>>,
}

fn score_key(x: Context, shown: &[MaterialId], feedbacks: &[Feedback]) -> Vec<u16> {
    let mut key = Vec::with_capacity(1 + 2 * shown.len());
    key.push(x.0 as u16);
    for (q, a) in shown.iter().zip(feedbacks) {
        key.push(q.0 as u16);
        key.push(a.0 as u16);
    }
    key
}

fn feedback_key(x: Context, prefix: &[MaterialId], past: &[Feedback], q: MaterialId) -> Vec<u16> {
    let mut key = score_key(x, prefix, past);
    key.push(q.0 as u16);
    key
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// `"x|s|a"` rendering of a score key.
pub(crate) fn score_key_string(x: Context, shown: &[MaterialId], feedbacks: &[Feedback]) -> String {
    format!("{}|{}|{}", x, join(shown), join(feedbacks))
}

/// `"x|s|a|q"` rendering of a feedback key.
pub(crate) fn feedback_key_string(
    x: Context,
    prefix: &[MaterialId],
    past: &[Feedback],
    q: MaterialId,
) -> String {
    format!("{}|{}|{}|{}", x, join(prefix), join(past), q)
}

impl<S: Real> TabularTables<S> {
    pub fn new() -> Self {
        Self {
            scores: HashMap::new(),
            feedback: HashMap::new(),
        }
    }

    pub fn set_score(&mut self, x: Context, shown: &[MaterialId], feedbacks: &[Feedback], mean: S) {
        self.scores.insert(score_key(x, shown, feedbacks), mean);
    }

    pub fn set_feedback(
        &mut self,
        x: Context,
        prefix: &[MaterialId],
        past: &[Feedback],
        q: MaterialId,
        probs: Vec<S>,
    ) {
        self.feedback.insert(feedback_key(x, prefix, past, q), probs);
    }

    fn score(&self, x: Context, shown: &[MaterialId], feedbacks: &[Feedback]) -> Option<S> {
        self.scores.get(score_key(x, shown, feedbacks).as_slice()).copied()
    }

    fn feedback(&self, x: Context, prefix: &[MaterialId], past: &[Feedback], q: MaterialId) -> Option<&[S]> {
        self.feedback
            .get(feedback_key(x, prefix, past, q).as_slice())
            .map(Vec::as_slice)
    }

    fn map_values<T: Real>(&self, f: impl Fn(S) -> T) -> TabularTables<T> {
        TabularTables {
            scores: self.scores.iter().map(|(k, v)| (k.clone(), f(*v))).collect(),
            feedback: self
                .feedback
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().map(|p| f(*p)).collect()))
                .collect(),
        }
    }
}

/// History-independent feedback and additive scores.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredTables<S> {
    /// `[x][q][a]`
    pub feedback_prob: Vec<Vec<Vec<S>>>,
    /// `[x][q][a]`: score increment for showing `q` and observing `a`.
    pub increments: Vec<Vec<Vec<S>>>,
    /// `[x]`: score with no material shown.
    pub base: Vec<S>,
}

impl<S: Real> FactoredTables<S> {
    fn map_values<T: Real>(&self, f: impl Fn(S) -> T + Copy) -> FactoredTables<T> {
        let map3 = |t: &Vec<Vec<Vec<S>>>| {
            t.iter()
                .map(|r| r.iter().map(|v| v.iter().map(|p| f(*p)).collect()).collect())
                .collect()
        };
        FactoredTables {
            feedback_prob: map3(&self.feedback_prob),
            increments: map3(&self.increments),
            base: self.base.iter().map(|b| f(*b)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScoreTables<S> {
    Tabular(TabularTables<S>),
    Factored(FactoredTables<S>),
}

/// The environment: feedback generation, exam-score means and noise, costs.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthModel<S> {
    dims: Dims,
    tables: ScoreTables<S>,
    noise: ScoreNoise<S>,
    costs: CostSchedule<S>,
    score_bound: S,
    comment: Option<String>,
}

impl<S: Real> GroundTruthModel<S> {
    /// Builds and validates a tabular model.
    ///
    /// Mean scores must lie in `[0, score_bound]`. Learners require a bound
    /// of 1; larger bounds are for oracle-only use (see [`Self::scale_model`]).
    pub fn tabular(
        dims: Dims,
        tables: TabularTables<S>,
        costs: CostSchedule<S>,
        noise: ScoreNoise<S>,
        score_bound: S,
    ) -> Result<Self> {
        let model = Self {
            dims,
            tables: ScoreTables::Tabular(tables),
            noise,
            costs,
            score_bound,
            comment: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn factored(
        dims: Dims,
        tables: FactoredTables<S>,
        costs: CostSchedule<S>,
        noise: ScoreNoise<S>,
    ) -> Result<Self> {
        let model = Self {
            dims,
            tables: ScoreTables::Factored(tables),
            noise,
            costs,
            score_bound: S::one(),
            comment: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        self.comment = Some(comment.into());
        self
    }

    pub fn comment(&self) -> Option<&str> {
        self.comment.as_deref()
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn num_contexts(&self) -> usize {
        self.dims.contexts
    }

    pub fn num_materials(&self) -> usize {
        self.dims.materials
    }

    pub fn num_feedbacks(&self) -> usize {
        self.dims.feedbacks
    }

    pub fn costs(&self) -> &CostSchedule<S> {
        &self.costs
    }

    pub fn noise(&self) -> ScoreNoise<S> {
        self.noise
    }

    pub fn score_bound(&self) -> S {
        self.score_bound
    }

    pub fn tables(&self) -> &ScoreTables<S> {
        &self.tables
    }

    pub fn is_tabular(&self) -> bool {
        matches!(self.tables, ScoreTables::Tabular(_))
    }

    /// Replaces the cost schedule.
    pub fn with_costs(mut self, costs: CostSchedule<S>) -> Result<Self> {
        if costs.len() != self.dims.materials {
            return Err(TutorError::Dimension(format!(
                "{} costs for {} materials",
                costs.len(),
                self.dims.materials
            )));
        }
        self.costs = costs;
        Ok(self)
    }

    /// Sets every material's cost to `c`, keeping the free-first flag.
    pub fn with_uniform_cost(self, c: S) -> Result<Self> {
        let free_first = self.costs.free_first;
        let costs = CostSchedule::new(vec![c; self.dims.materials], free_first)?;
        self.with_costs(costs)
    }

    /// Whether an exam with no material shown has a defined score for `x`.
    pub fn has_empty_score(&self, x: Context) -> bool {
        match &self.tables {
            ScoreTables::Tabular(t) => t.scores.contains_key([x.0 as u16].as_slice()),
            ScoreTables::Factored(_) => true,
        }
    }

    /// Divides every mean score, cost and the score bound by `factor`.
    ///
    /// Argmax and stopping decisions are unchanged under this map.
    pub fn scale_model(&self, factor: S) -> Result<Self> {
        if !(factor.is_finite() && factor > S::zero()) {
            return Err(invalid(format!("scale factor {factor} must be positive")));
        }
        let div = |v: S| v / factor;
        let tables = match &self.tables {
            ScoreTables::Tabular(t) => ScoreTables::Tabular(TabularTables {
                scores: t.scores.iter().map(|(k, v)| (k.clone(), div(*v))).collect(),
                feedback: t.feedback.clone(),
            }),
            ScoreTables::Factored(f) => ScoreTables::Factored(FactoredTables {
                feedback_prob: f.feedback_prob.clone(),
                increments: f
                    .increments
                    .iter()
                    .map(|r| r.iter().map(|v| v.iter().map(|p| div(*p)).collect()).collect())
                    .collect(),
                base: f.base.iter().map(|b| div(*b)).collect(),
            }),
        };
        let noise = match self.noise {
            ScoreNoise::Bernoulli => ScoreNoise::Bernoulli,
            ScoreNoise::TruncatedNormal { sigma } => ScoreNoise::TruncatedNormal { sigma: div(sigma) },
        };
        Ok(Self {
            dims: self.dims,
            tables,
            noise,
            costs: self.costs.scaled(S::one() / factor),
            score_bound: div(self.score_bound),
            comment: self.comment.clone(),
        })
    }

    /// Converts every number to another scalar type.
    pub fn cast<T: Real>(&self) -> GroundTruthModel<T> {
        let conv = |v: S| T::lit(v.as_f64());
        GroundTruthModel {
            dims: self.dims,
            tables: match &self.tables {
                ScoreTables::Tabular(t) => ScoreTables::Tabular(t.map_values(conv)),
                ScoreTables::Factored(f) => ScoreTables::Factored(f.map_values(conv)),
            },
            noise: self.noise.cast(),
            costs: self.costs.cast(),
            score_bound: conv(self.score_bound),
            comment: self.comment.clone(),
        }
    }

    fn check_context(&self, x: Context) -> Result<()> {
        if x.0 >= self.dims.contexts {
            return Err(TutorError::Dimension(format!(
                "context {x} out of range for {} contexts",
                self.dims.contexts
            )));
        }
        Ok(())
    }

    fn check_history(&self, x: Context, shown: &[MaterialId], feedbacks: &[Feedback]) -> Result<()> {
        self.check_context(x)?;
        if shown.len() != feedbacks.len() {
            return Err(TutorError::Invariant(format!(
                "{} materials but {} feedbacks",
                shown.len(),
                feedbacks.len()
            )));
        }
        for (i, q) in shown.iter().enumerate() {
            if q.0 >= self.dims.materials {
                return Err(TutorError::Dimension(format!("material {q} out of range")));
            }
            if shown[..i].contains(q) {
                return Err(TutorError::Invariant(format!("material {q} shown twice")));
            }
        }
        if let Some(a) = feedbacks.iter().find(|a| a.0 >= self.dims.feedbacks) {
            return Err(TutorError::Dimension(format!("feedback {a} out of range")));
        }
        Ok(())
    }

    fn check_next(&self, prefix: &[MaterialId], q: MaterialId) -> Result<()> {
        if q.0 >= self.dims.materials {
            return Err(TutorError::Dimension(format!("material {q} out of range")));
        }
        if prefix.contains(&q) {
            return Err(TutorError::Invariant(format!("material {q} already shown")));
        }
        Ok(())
    }

    /// Probability vector over feedbacks for showing `q` after `prefix`/`past`.
    pub fn feedback_distribution(
        &self,
        x: Context,
        prefix: &[MaterialId],
        past: &[Feedback],
        q: MaterialId,
    ) -> Result<&[S]> {
        self.check_history(x, prefix, past)?;
        self.check_next(prefix, q)?;
        self.feedback_distribution_unchecked(x, prefix, past, q)
    }

    fn feedback_distribution_unchecked(
        &self,
        x: Context,
        prefix: &[MaterialId],
        past: &[Feedback],
        q: MaterialId,
    ) -> Result<&[S]> {
        match &self.tables {
            ScoreTables::Tabular(t) => t.feedback(x, prefix, past, q).ok_or_else(|| TutorError::MissingEntry {
                key: feedback_key_string(x, prefix, past, q),
            }),
            ScoreTables::Factored(f) => Ok(&f.feedback_prob[x.0][q.0]),
        }
    }

    /// Draws the student's feedback to `q`.
    pub fn sample_feedback<R: Rng + ?Sized>(
        &self,
        x: Context,
        prefix: &[MaterialId],
        past: &[Feedback],
        q: MaterialId,
        rng: &mut R,
    ) -> Result<Feedback> {
        let probs = self.feedback_distribution(x, prefix, past, q)?;
        let u = S::lit(rng.random::<f64>());
        let mut acc = S::zero();
        for (a, p) in probs.iter().enumerate() {
            acc = acc + *p;
            if u < acc {
                return Ok(Feedback(a));
            }
        }
        // Rounding left `acc` just below 1: take the last feedback with mass.
        let last = probs.iter().rposition(|p| *p > S::zero()).unwrap_or(0);
        Ok(Feedback(last))
    }

    /// Mean exam score `r(x, s, a)`.
    pub fn expected_score(&self, x: Context, shown: &[MaterialId], feedbacks: &[Feedback]) -> Result<S> {
        self.check_history(x, shown, feedbacks)?;
        self.expected_score_unchecked(x, shown, feedbacks)
    }

    fn expected_score_unchecked(&self, x: Context, shown: &[MaterialId], feedbacks: &[Feedback]) -> Result<S> {
        match &self.tables {
            ScoreTables::Tabular(t) => t.score(x, shown, feedbacks).ok_or_else(|| TutorError::MissingEntry {
                key: score_key_string(x, shown, feedbacks),
            }),
            ScoreTables::Factored(f) => {
                let sum = factored_prefix_sum(f, x, shown, feedbacks);
                Ok(clamp(sum, self.score_bound))
            }
        }
    }

    /// Ex-ante score of showing `q` after `prefix`/`past`: the mean exam
    /// score averaged over the feedback to `q`.
    pub fn ex_ante_next(&self, x: Context, prefix: &[MaterialId], past: &[Feedback], q: MaterialId) -> Result<S> {
        self.check_history(x, prefix, past)?;
        self.check_next(prefix, q)?;
        self.ex_ante_next_unchecked(x, prefix, past, q)
    }

    pub(crate) fn ex_ante_next_unchecked(
        &self,
        x: Context,
        prefix: &[MaterialId],
        past: &[Feedback],
        q: MaterialId,
    ) -> Result<S> {
        let probs = self.feedback_distribution_unchecked(x, prefix, past, q)?;
        match &self.tables {
            ScoreTables::Factored(f) => {
                let sum = factored_prefix_sum(f, x, prefix, past);
                let inc = &f.increments[x.0][q.0];
                Ok(probs
                    .iter()
                    .zip(inc)
                    .map(|(p, d)| *p * clamp(sum + *d, self.score_bound))
                    .sum())
            }
            ScoreTables::Tabular(_) => {
                let mut shown = prefix.to_vec();
                shown.push(q);
                let mut fb = past.to_vec();
                fb.push(Feedback::NONE);
                let mut total = S::zero();
                for (a, p) in probs.iter().enumerate() {
                    *fb.last_mut().unwrap() = Feedback(a);
                    total = total + *p * self.expected_score_unchecked(x, &shown, &fb)?;
                }
                Ok(total)
            }
        }
    }

    /// Ex-ante score `y(x, s, a)` for `|s| = |a| + 1`.
    pub fn ex_ante_score(&self, x: Context, shown: &[MaterialId], feedbacks: &[Feedback]) -> Result<S> {
        let Some((&last, prefix)) = shown.split_last() else {
            return Err(invalid("ex-ante score needs at least one material"));
        };
        if feedbacks.len() + 1 != shown.len() {
            return Err(TutorError::Invariant(format!(
                "ex-ante score needs |s| = |a| + 1, got {} and {}",
                shown.len(),
                feedbacks.len()
            )));
        }
        self.ex_ante_next(x, prefix, feedbacks, last)
    }

    /// Draws an exam score with mean [`Self::expected_score`].
    pub fn sample_exam_score<R: Rng + ?Sized>(
        &self,
        x: Context,
        shown: &[MaterialId],
        feedbacks: &[Feedback],
        rng: &mut R,
    ) -> Result<S> {
        let mean = self.expected_score(x, shown, feedbacks)?;
        Ok(draw_score(self.noise, mean, self.score_bound, rng))
    }
}

fn clamp<S: Real>(v: S, bound: S) -> S {
    v.max(S::zero()).min(bound)
}

fn factored_prefix_sum<S: Real>(
    f: &FactoredTables<S>,
    x: Context,
    shown: &[MaterialId],
    feedbacks: &[Feedback],
) -> S {
    let inc = &f.increments[x.0];
    shown
        .iter()
        .zip(feedbacks)
        .fold(f.base[x.0], |acc, (q, a)| acc + inc[q.0][a.0])
}

/// Below this half-width-to-sigma ratio the truncated normal is sampled as
/// the uniform distribution it approaches.
const UNIFORM_SWITCH: f64 = 0.0625;

fn draw_score<S: Real, R: Rng + ?Sized>(noise: ScoreNoise<S>, mean: S, bound: S, rng: &mut R) -> S {
    let bound_f = bound.as_f64();
    if bound_f <= 0.0 {
        return S::zero();
    }
    let m = (mean.as_f64() / bound_f).clamp(0.0, 1.0);
    let unit = match noise {
        ScoreNoise::Bernoulli => {
            if rng.random::<f64>() < m {
                1.0
            } else {
                0.0
            }
        }
        ScoreNoise::TruncatedNormal { sigma } => {
            let sigma = sigma.as_f64() / bound_f;
            let half = m.min(1.0 - m);
            if sigma <= 0.0 || half <= 0.0 {
                m
            } else if half / sigma < UNIFORM_SWITCH {
                m + half * (2.0 * rng.random::<f64>() - 1.0)
            } else {
                loop {
                    let z: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
                    if z.abs() <= half {
                        break m + z;
                    }
                }
            }
        }
    };
    S::lit(unit.clamp(0.0, 1.0) * bound_f)
}

impl<S: Real> GroundTruthModel<S> {
    /// Checks normalization, score ranges, costs and tabular totality.
    pub fn validate(&self) -> Result<()> {
        let d = self.dims;
        if self.costs.len() != d.materials {
            return Err(TutorError::Dimension(format!(
                "{} costs for {} materials",
                self.costs.len(),
                d.materials
            )));
        }
        CostSchedule::new(self.costs.per_material.clone(), self.costs.free_first)?;
        if !(self.score_bound.is_finite() && self.score_bound > S::zero()) {
            return Err(invalid(format!("score bound {} must be positive", self.score_bound)));
        }
        if let ScoreNoise::TruncatedNormal { sigma } = self.noise {
            if !(sigma.is_finite() && sigma >= S::zero()) {
                return Err(invalid(format!("noise sigma {sigma} must be >= 0")));
            }
        }
        match &self.tables {
            ScoreTables::Factored(f) => self.validate_factored(f),
            ScoreTables::Tabular(t) => self.validate_tabular(t),
        }
    }

    fn validate_factored(&self, f: &FactoredTables<S>) -> Result<()> {
        let d = self.dims;
        let shape_ok = |t: &Vec<Vec<Vec<S>>>| {
            t.len() == d.contexts
                && t.iter()
                    .all(|r| r.len() == d.materials && r.iter().all(|v| v.len() == d.feedbacks))
        };
        if !shape_ok(&f.feedback_prob) || !shape_ok(&f.increments) || f.base.len() != d.contexts {
            return Err(TutorError::Dimension(format!(
                "factored tables must be shaped [{}][{}][{}] with {} base scores",
                d.contexts, d.materials, d.feedbacks, d.contexts
            )));
        }
        for x in 0..d.contexts {
            check_mean(self.score_bound, &format!("base[{x}]"), f.base[x])?;
            for q in 0..d.materials {
                check_probs(&format!("feedback_prob[{x}][{q}]"), &f.feedback_prob[x][q])?;
                if let Some(v) = f.increments[x][q].iter().find(|v| !v.is_finite()) {
                    return Err(TutorError::OutOfRange {
                        key: format!("increments[{x}][{q}]"),
                        value: v.as_f64(),
                        lo: f64::NEG_INFINITY,
                        hi: f64::INFINITY,
                    });
                }
            }
        }
        Ok(())
    }

    fn validate_tabular(&self, t: &TabularTables<S>) -> Result<()> {
        let d = self.dims;
        if d.materials > MAX_TABULAR_MATERIALS {
            return Err(TutorError::SizeLimit {
                what: "tabular materials",
                value: d.materials,
                max: MAX_TABULAR_MATERIALS,
            });
        }
        let mut seen_scores = 0usize;
        let mut seen_feedback = 0usize;
        for x in 0..d.contexts {
            let x = Context(x);
            if let Some(v) = t.score(x, &[], &[]) {
                check_mean(self.score_bound, &score_key_string(x, &[], &[]), v)?;
                seen_scores += 1;
            }
            let mut stack: Vec<(Vec<MaterialId>, Vec<Feedback>)> = vec![(Vec::new(), Vec::new())];
            while let Some((shown, fb)) = stack.pop() {
                if !shown.is_empty() {
                    let key = score_key_string(x, &shown, &fb);
                    let v = t.score(x, &shown, &fb).ok_or(TutorError::MissingEntry { key: key.clone() })?;
                    check_mean(self.score_bound, &key, v)?;
                    seen_scores += 1;
                }
                if shown.len() == d.materials {
                    continue;
                }
                for q in (0..d.materials).map(MaterialId) {
                    if shown.contains(&q) {
                        continue;
                    }
                    let key = feedback_key_string(x, &shown, &fb, q);
                    let probs = t.feedback(x, &shown, &fb, q).ok_or(TutorError::MissingEntry { key: key.clone() })?;
                    if probs.len() != d.feedbacks {
                        return Err(TutorError::Dimension(format!(
                            "`{key}` has {} probabilities for {} feedbacks",
                            probs.len(),
                            d.feedbacks
                        )));
                    }
                    check_probs(&key, probs)?;
                    seen_feedback += 1;
                    for a in 0..d.feedbacks {
                        let mut s = shown.clone();
                        s.push(q);
                        let mut f = fb.clone();
                        f.push(Feedback(a));
                        stack.push((s, f));
                    }
                }
            }
        }
        if seen_scores != t.scores.len() || seen_feedback != t.feedback.len() {
            return Err(TutorError::Invariant(format!(
                "tabular model has entries outside the sequence tree ({} scores, {} feedback vectors expected)",
                seen_scores, seen_feedback
            )));
        }
        Ok(())
    }
}

fn check_mean<S: Real>(bound: S, key: &str, v: S) -> Result<()> {
    if !(v.is_finite() && v >= S::zero() && v <= bound) {
        return Err(TutorError::OutOfRange {
            key: key.to_string(),
            value: v.as_f64(),
            lo: 0.0,
            hi: bound.as_f64(),
        });
    }
    Ok(())
}

fn check_probs<S: Real>(key: &str, probs: &[S]) -> Result<()> {
    if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= S::zero())) {
        return Err(TutorError::OutOfRange {
            key: key.to_string(),
            value: p.as_f64(),
            lo: 0.0,
            hi: 1.0,
        });
    }
    let sum: f64 = probs.iter().map(|p| p.as_f64()).sum();
    // f32 models cannot meet the f64 tolerance; scale it by the type's epsilon.
    let tol = NORMALIZATION_TOLERANCE.max(S::epsilon().as_f64() * probs.len() as f64);
    if (sum - 1.0).abs() > tol {
        return Err(TutorError::Unnormalized {
            key: key.to_string(),
            sum,
        });
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests;
