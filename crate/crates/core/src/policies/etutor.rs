//! The online learner.
//!
//! Statistics are kept per context and indexed by slot. For the score after
//! stopping at slot `t` with material `q` and feedback `a` the learner keeps
//! `r_hat(x, t, q, a)` with counter `T(x, t, q, a)`. For the score after
//! showing `q` at slot `t` when the previous feedback was `a` it keeps
//! `y_hat(x, a, t, q)` with counter `T(x, a, t, q)` (slot 1 uses
//! [`Feedback::NONE`]). Only the stop slot of each episode is updated.
//!
//! A statistic counts as under-explored while its counter is below
//! `D * ln(i / delta)`, `i` being the 1-based index of the current student.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{EpisodeHistory, PolicyDecision, Step, TutorPolicy};
use crate::error::{invalid, Result, TutorError};
use crate::scalar::Real;
use crate::types::{Context, CostSchedule, EpisodeRecord, Feedback, MaterialId};

/// `sum_{t>=1} 1/t^2`.
pub const BETA: f64 = PI * PI / 6.0;

/// Exploration constants `D` and `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationSchedule<S> {
    pub d: S,
    pub delta: S,
}

impl<S: Real> ExplorationSchedule<S> {
    pub fn new(d: S, delta: S) -> Result<Self> {
        if !(d.is_finite() && d > S::zero()) {
            return Err(invalid(format!("D must be positive, got {d}")));
        }
        if !(delta > S::zero() && delta < S::one()) {
            return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { d, delta })
    }

    /// `D * ln(i / delta)`.
    pub fn threshold(&self, student: u64) -> S {
        self.d * (S::from_count(student) / self.delta).ln()
    }
}

/// Constants that make the regret guarantees hold:
/// `D = 4 / gap^2` and `delta = sqrt(epsilon) / (Q * sqrt(2 * beta))`.
pub fn derive_params<S: Real>(epsilon: S, num_materials: usize, delta_min: S) -> Result<ExplorationSchedule<S>> {
    if !(epsilon > S::zero() && epsilon <= S::one()) {
        return Err(invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if num_materials == 0 {
        return Err(invalid("need at least one material"));
    }
    if !(delta_min.is_finite() && delta_min > S::zero()) {
        return Err(invalid(format!(
            "minimum gap must be positive, got {delta_min} (degenerate gap)"
        )));
    }
    let two = S::lit(2.0);
    let d = S::lit(4.0) / (delta_min * delta_min);
    let delta = epsilon.sqrt() / (S::from_count(num_materials as u64) * (two * S::lit(BETA)).sqrt());
    ExplorationSchedule::new(d, delta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ETutorParams<S> {
    pub schedule: ExplorationSchedule<S>,
    pub costs: CostSchedule<S>,
}

impl<S: Real> ETutorParams<S> {
    pub fn new(schedule: ExplorationSchedule<S>, costs: CostSchedule<S>) -> Self {
        Self { schedule, costs }
    }
}

/// Sample means and counters of the learner.
#[derive(Clone, Debug, PartialEq)]
pub struct ETutorState<S> {
    contexts: usize,
    materials: usize,
    feedbacks: usize,
    r_hat: Vec<S>,
    count_r: Vec<u64>,
    y_hat: Vec<S>,
    count_y: Vec<u64>,
    student: u64,
}

impl<S: Real> ETutorState<S> {
    /// Fresh state: every mean 0, every counter 0, first student.
    pub fn new(contexts: usize, materials: usize, feedbacks: usize) -> Result<Self> {
        if contexts == 0 || materials == 0 || feedbacks == 0 {
            return Err(invalid("learner dimensions must be positive"));
        }
        let size = contexts
            .checked_mul(materials * materials)
            .and_then(|v| v.checked_mul(feedbacks))
            .ok_or_else(|| invalid("learner tables too large"))?;
        Ok(Self {
            contexts,
            materials,
            feedbacks,
            r_hat: vec![S::zero(); size],
            count_r: vec![0; size],
            y_hat: vec![S::zero(); size],
            count_y: vec![0; size],
            student: 1,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.contexts, self.materials, self.feedbacks)
    }

    /// 1-based index of the next student.
    pub fn student_index(&self) -> u64 {
        self.student
    }

    fn r_index(&self, x: Context, slot: usize, q: MaterialId, a: Feedback) -> usize {
        debug_assert!(slot >= 1 && slot <= self.materials);
        ((x.0 * self.materials + (slot - 1)) * self.materials + q.0) * self.feedbacks + a.0
    }

    fn y_index(&self, x: Context, prior: Feedback, slot: usize, q: MaterialId) -> usize {
        debug_assert!(slot >= 1 && slot <= self.materials);
        ((x.0 * self.feedbacks + prior.0) * self.materials + (slot - 1)) * self.materials + q.0
    }

    /// `(r_hat, T)` for stopping after `q` at `slot` with feedback `a`.
    pub fn stop_stat(&self, x: Context, slot: usize, q: MaterialId, a: Feedback) -> (S, u64) {
        let i = self.r_index(x, slot, q, a);
        (self.r_hat[i], self.count_r[i])
    }

    /// `(y_hat, T)` for showing `q` at `slot` after feedback `prior`.
    pub fn show_stat(&self, x: Context, prior: Feedback, slot: usize, q: MaterialId) -> (S, u64) {
        let i = self.y_index(x, prior, slot, q);
        (self.y_hat[i], self.count_y[i])
    }

    fn check(&self, x: Context, hist: &EpisodeHistory) -> Result<()> {
        if x.0 >= self.contexts {
            return Err(TutorError::Dimension(format!("context {x} unknown to the learner")));
        }
        if hist.len() > self.materials
            || hist.shown().iter().any(|q| q.0 >= self.materials)
            || hist.feedbacks().iter().any(|a| a.0 >= self.feedbacks)
        {
            return Err(TutorError::Dimension(
                "history references materials or feedbacks unknown to the learner".to_string(),
            ));
        }
        Ok(())
    }
}

fn pick<R: Rng + ?Sized>(candidates: &[MaterialId], rng: &mut R) -> MaterialId {
    candidates[rng.random_range(0..candidates.len())]
}

/// One learner decision for the next slot of `hist`.
///
/// Slot 1 explores a uniformly random material whose slot-1 counter is under
/// the threshold and ends the episode after its feedback; otherwise it shows
/// the argmax of `y_hat` net of cost. At slot `t >= 2` the exam is given if
/// the previous stop statistic is under-sampled; else a random under-sampled
/// remaining material is explored (exam right after it); else the exam is
/// given iff `r_hat` of the previous step is at least the best `y_hat`
/// net of cost, which is shown otherwise.
pub fn etutor_decide<S: Real, R: Rng + ?Sized>(
    state: &ETutorState<S>,
    params: &ETutorParams<S>,
    x: Context,
    hist: &EpisodeHistory,
    rng: &mut R,
) -> Result<Step> {
    state.check(x, hist)?;
    if params.costs.len() != state.materials {
        return Err(TutorError::Dimension("cost schedule does not match learner".to_string()));
    }
    let threshold = params.schedule.threshold(state.student);
    let slot = hist.next_slot();
    let costs = &params.costs;

    let Some((prev_q, prev_a)) = hist.last() else {
        let mut under = Vec::new();
        let mut best: Option<(MaterialId, S)> = None;
        for q in (0..state.materials).map(MaterialId) {
            let (mean, n) = state.show_stat(x, Feedback::NONE, 1, q);
            if S::from_count(n) < threshold {
                under.push(q);
            }
            let v = mean - costs.charge(1, q);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((q, v));
            }
        }
        return Ok(if under.is_empty() {
            Step::exploit(PolicyDecision::ShowMaterial(best.expect("at least one material").0))
        } else {
            Step::explore(PolicyDecision::ShowMaterial(pick(&under, rng)))
        });
    };

    // An exploring slot always ends the episode.
    if hist.explored().last().copied().unwrap_or(false) {
        return Ok(Step::explore(PolicyDecision::GiveExam));
    }
    if slot > state.materials {
        return Ok(Step::exploit(PolicyDecision::GiveExam));
    }
    let (stop_mean, stop_n) = state.stop_stat(x, slot - 1, prev_q, prev_a);
    if S::from_count(stop_n) < threshold {
        return Ok(Step::explore(PolicyDecision::GiveExam));
    }
    let remaining = hist.remaining(state.materials)?;
    let mut under = Vec::new();
    let mut best: Option<(MaterialId, S)> = None;
    for &q in &remaining {
        let (mean, n) = state.show_stat(x, prev_a, slot, q);
        if S::from_count(n) < threshold {
            under.push(q);
        }
        let v = mean - costs.charge(slot, q);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((q, v));
        }
    }
    if !under.is_empty() {
        return Ok(Step::explore(PolicyDecision::ShowMaterial(pick(&under, rng))));
    }
    let (q, net) = best.expect("remaining is non-empty below the last slot");
    Ok(Step::exploit(if stop_mean >= net {
        PolicyDecision::GiveExam
    } else {
        PolicyDecision::ShowMaterial(q)
    }))
}

/// Folds one finished episode into the stop-slot statistics and advances the
/// student index.
pub fn etutor_update<S: Real>(state: &mut ETutorState<S>, episode: &EpisodeRecord<S>) -> Result<()> {
    let x = episode.context;
    let score = episode.exam_score;
    if !(score >= S::zero() && score <= S::one()) {
        return Err(TutorError::OutOfRange {
            key: format!("exam score of student {}", state.student),
            value: score.as_f64(),
            lo: 0.0,
            hi: 1.0,
        });
    }
    let t = episode.stop_slot;
    if t == 0 || t > state.materials || t != episode.shown.len() || t != episode.feedbacks.len() {
        return Err(TutorError::Invariant(format!(
            "learner episodes stop after 1..={} materials, got stop slot {t}",
            state.materials
        )));
    }
    if x.0 >= state.contexts
        || episode.shown.iter().any(|q| q.0 >= state.materials)
        || episode.feedbacks.iter().any(|a| a.0 >= state.feedbacks)
    {
        return Err(TutorError::Dimension("episode does not match learner".to_string()));
    }
    let q = episode.shown[t - 1];
    let a = episode.feedbacks[t - 1];
    let prior = if t == 1 { Feedback::NONE } else { episode.feedbacks[t - 2] };

    let ri = state.r_index(x, t, q, a);
    fold_mean(&mut state.r_hat[ri], &mut state.count_r[ri], score);
    let yi = state.y_index(x, prior, t, q);
    fold_mean(&mut state.y_hat[yi], &mut state.count_y[yi], score);
    state.student += 1;
    Ok(())
}

fn fold_mean<S: Real>(mean: &mut S, count: &mut u64, value: S) {
    *count += 1;
    *mean = *mean + (value - *mean) / S::from_count(*count);
}

/// The learner as a [`TutorPolicy`].
#[derive(Clone, Debug)]
pub struct ETutor<S> {
    pub state: ETutorState<S>,
    pub params: ETutorParams<S>,
}

impl<S: Real> ETutor<S> {
    pub fn new(state: ETutorState<S>, params: ETutorParams<S>) -> Self {
        Self { state, params }
    }
}

impl<S: Real> TutorPolicy<S> for ETutor<S> {
    fn name(&self) -> &str {
        "etutor"
    }

    fn decide(&mut self, x: Context, hist: &EpisodeHistory, rng: &mut dyn RngCore) -> Result<Step> {
        etutor_decide(&self.state, &self.params, x, hist, rng)
    }

    fn observe(&mut self, episode: &EpisodeRecord<S>) -> Result<()> {
        etutor_update(&mut self.state, episode)
    }
}

/// JSON form of [`ETutorState`]; only entries with a positive count appear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSnapshot {
    pub num_contexts: usize,
    pub num_materials: usize,
    pub num_feedbacks: usize,
    pub student_index: u64,
    /// keyed `"(x,t,q,a)"`
    pub r_hat: BTreeMap<String, f64>,
    pub count_r: BTreeMap<String, u64>,
    /// keyed `"(x,a,t,q)"`
    pub y_hat: BTreeMap<String, f64>,
    pub count_y: BTreeMap<String, u64>,
}

fn parse_tuple(key: &str) -> Result<[usize; 4]> {
    let inner = key
        .strip_prefix('(')
        .and_then(|k| k.strip_suffix(')'))
        .ok_or_else(|| invalid(format!("malformed state key `{key}`")))?;
    let parts: Vec<usize> = inner
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| invalid(format!("malformed state key `{key}`")))?;
    parts
        .try_into()
        .map_err(|_| invalid(format!("state key `{key}` needs four fields")))
}

impl<S: Real> ETutorState<S> {
    pub fn snapshot(&self) -> StateSnapshot {
        let mut snap = StateSnapshot {
            num_contexts: self.contexts,
            num_materials: self.materials,
            num_feedbacks: self.feedbacks,
            student_index: self.student,
            r_hat: BTreeMap::new(),
            count_r: BTreeMap::new(),
            y_hat: BTreeMap::new(),
            count_y: BTreeMap::new(),
        };
        for x in 0..self.contexts {
            for t in 1..=self.materials {
                for q in 0..self.materials {
                    for a in 0..self.feedbacks {
                        let (c, m, fb) = (Context(x), MaterialId(q), Feedback(a));
                        let (mean, n) = self.stop_stat(c, t, m, fb);
                        if n > 0 {
                            let key = format!("({x},{t},{q},{a})");
                            snap.r_hat.insert(key.clone(), mean.as_f64());
                            snap.count_r.insert(key, n);
                        }
                        let (mean, n) = self.show_stat(c, fb, t, m);
                        if n > 0 {
                            let key = format!("({x},{a},{t},{q})");
                            snap.y_hat.insert(key.clone(), mean.as_f64());
                            snap.count_y.insert(key, n);
                        }
                    }
                }
            }
        }
        snap
    }

    pub fn from_snapshot(snap: &StateSnapshot) -> Result<Self> {
        let mut state = Self::new(snap.num_contexts, snap.num_materials, snap.num_feedbacks)?;
        if snap.student_index == 0 {
            return Err(invalid("student_index starts at 1"));
        }
        state.student = snap.student_index;
        let (nx, nq, na) = (state.contexts, state.materials, state.feedbacks);
        let in_range = |x: usize, t: usize, q: usize, a: usize| x < nx && t >= 1 && t <= nq && q < nq && a < na;

        let fill = |means: &BTreeMap<String, f64>,
                    counts: &BTreeMap<String, u64>,
                    stop_key: bool,
                    state: &mut Self|
         -> Result<()> {
            if means.len() != counts.len() || means.keys().any(|k| !counts.contains_key(k)) {
                return Err(invalid("every mean needs a matching positive count"));
            }
            for (key, mean) in means {
                let [f0, f1, f2, f3] = parse_tuple(key)?;
                let (x, t, q, a) = if stop_key { (f0, f1, f2, f3) } else { (f0, f2, f3, f1) };
                if !in_range(x, t, q, a) {
                    return Err(invalid(format!("state key `{key}` out of range")));
                }
                let n = counts[key];
                if n == 0 {
                    return Err(invalid(format!("state key `{key}` has count 0")));
                }
                if !(0.0..=1.0).contains(mean) {
                    return Err(TutorError::OutOfRange {
                        key: key.clone(),
                        value: *mean,
                        lo: 0.0,
                        hi: 1.0,
                    });
                }
                let i = if stop_key {
                    state.r_index(Context(x), t, MaterialId(q), Feedback(a))
                } else {
                    state.y_index(Context(x), Feedback(a), t, MaterialId(q))
                };
                if stop_key {
                    state.r_hat[i] = S::lit(*mean);
                    state.count_r[i] = n;
                } else {
                    state.y_hat[i] = S::lit(*mean);
                    state.count_y[i] = n;
                }
            }
            Ok(())
        };
        fill(&snap.r_hat, &snap.count_r, true, &mut state)?;
        fill(&snap.y_hat, &snap.count_y, false, &mut state)?;
        Ok(state)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(&self.snapshot())?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_snapshot(&serde_json::from_str(text)?)
    }
}
