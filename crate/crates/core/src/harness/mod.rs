//! Seeded Monte Carlo experiments and regret measurement.
//!
//! Replication `r` draws everything (contexts, feedbacks, exam scores and
//! the policy's own coin flips) from one ChaCha8 stream seeded with
//! `base_seed ^ r`, so results depend only on the configuration. Each
//! student's regret is the exact best-first value of their context minus
//! their realized net payoff (score minus charged cost). Episodes with any
//! explored slot make up `R_e`, the rest `R_s`.

mod report;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::GroundTruthModel;
use crate::error::{invalid, Result, TutorError};
use crate::oracle::{bf_value, compute_gaps, theorem1_bound};
use crate::policies::{
    bf_decide, derive_params, BestFirst, ETutor, ETutorParams, ETutorState, EpisodeHistory, ExplorationSchedule,
    FixedRule, PolicyDecision, RandomRule, TutorPolicy, DEFAULT_STOP_PROBABILITY,
};
use crate::scalar::{total, Real};
use crate::types::{Context, MaterialSequence};

pub use report::{curve_csv, students_csv, CURVE_HEADER, STUDENT_HEADER};

/// Cost of one minute of a student's time.
pub const COST_PER_MINUTE: f64 = 0.04;

/// How the learner's exploration constants are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleSpec {
    Explicit { d: f64, delta: f64 },
    /// `derive_params(epsilon, Q, gap)` with the smallest gap over contexts.
    Derived { epsilon: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PolicySpec {
    Bf,
    Etutor { schedule: ScheduleSpec },
    Rr { stop_probability: f64 },
    Fr { order: MaterialSequence },
}

impl PolicySpec {
    pub fn rr() -> Self {
        Self::Rr {
            stop_probability: DEFAULT_STOP_PROBABILITY,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Bf => "bf",
            Self::Etutor { .. } => "etutor",
            Self::Rr { .. } => "rr",
            Self::Fr { .. } => "fr",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub policy: PolicySpec,
    /// Number of students per replication.
    pub n: u64,
    pub replications: u32,
    pub base_seed: u64,
    /// Probability of each context; uniform when absent.
    pub context_distribution: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn new(policy: PolicySpec, n: u64, replications: u32, base_seed: u64) -> Self {
        Self {
            policy,
            n,
            replications,
            base_seed,
            context_distribution: None,
        }
    }
}

/// One student's outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudentRow<S> {
    pub replication: u32,
    /// 1-based student index.
    pub i: u64,
    pub context: usize,
    pub stop_slot: usize,
    pub explored: bool,
    pub score: S,
    /// Full cost of the shown materials.
    pub cost: S,
    pub charged_cost: S,
    /// Best-first value of the context minus `score - charged_cost`.
    pub regret: S,
    /// Every decision of the episode equals the best-first decision.
    pub bf_agree: bool,
}

/// Aggregates of the first `n` students of one replication.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary<S> {
    pub n: u64,
    pub avg_score: S,
    pub avg_cost: S,
    pub avg_minutes: S,
    pub avg_net: S,
    /// Mean best-first value over the realized contexts.
    pub rw_bf: S,
    pub regret: S,
    pub regret_explore: S,
    pub regret_exploit: S,
    pub explored_episodes: u64,
    /// Unexplored episodes with at least one decision differing from
    /// best-first.
    pub exploit_mismatches: u64,
}

impl<S: Real> Summary<S> {
    /// Summary of `rows[..n]`.
    pub fn of(rows: &[StudentRow<S>], n: usize) -> Result<Self> {
        if n == 0 || n > rows.len() {
            return Err(invalid(format!("cannot summarize {n} of {} students", rows.len())));
        }
        let rows = &rows[..n];
        let count = S::from_count(n as u64);
        let mean = |f: &dyn Fn(&StudentRow<S>) -> S| total(rows.iter().map(f)) / count;
        let r_e = total(rows.iter().filter(|r| r.explored).map(|r| r.regret)) / count;
        let r_s = total(rows.iter().filter(|r| !r.explored).map(|r| r.regret)) / count;
        let avg_cost = mean(&|r| r.cost);
        let avg_net = mean(&|r| r.score - r.charged_cost);
        Ok(Self {
            n: n as u64,
            avg_score: mean(&|r| r.score),
            avg_cost,
            avg_minutes: avg_cost / S::lit(COST_PER_MINUTE),
            avg_net,
            rw_bf: mean(&|r| r.regret + r.score - r.charged_cost),
            regret: r_e + r_s,
            regret_explore: r_e,
            regret_exploit: r_s,
            explored_episodes: rows.iter().filter(|r| r.explored).count() as u64,
            exploit_mismatches: rows.iter().filter(|r| !r.explored && !r.bf_agree).count() as u64,
        })
    }
}

/// Mean and standard error across replications.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate<S> {
    pub mean: S,
    pub stderr: S,
}

impl<S: Real> Estimate<S> {
    pub fn of(values: impl IntoIterator<Item = S>) -> Self {
        let v: Vec<S> = values.into_iter().collect();
        if v.is_empty() {
            return Self {
                mean: S::nan(),
                stderr: S::nan(),
            };
        }
        let k = S::from_count(v.len() as u64);
        let mean = total(v.iter().copied()) / k;
        let stderr = if v.len() < 2 {
            S::zero()
        } else {
            let var = total(v.iter().map(|x| (*x - mean) * (*x - mean))) / (k - S::one());
            (var / k).sqrt()
        };
        Self { mean, stderr }
    }
}

/// Pooled aggregates over replications.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pooled<S> {
    pub n: u64,
    pub avg_score: Estimate<S>,
    pub avg_cost: Estimate<S>,
    pub avg_minutes: Estimate<S>,
    pub avg_net: Estimate<S>,
    pub rw_bf: Estimate<S>,
    pub regret: Estimate<S>,
    pub regret_explore: Estimate<S>,
    pub regret_exploit: Estimate<S>,
    pub explored_episodes: Estimate<S>,
    /// Share of replications without exploit mismatches.
    pub zero_exploit_regret_fraction: S,
}

impl<S: Real> Pooled<S> {
    pub fn of(summaries: &[Summary<S>]) -> Self {
        let est = |f: &dyn Fn(&Summary<S>) -> S| Estimate::of(summaries.iter().map(f));
        let k = S::from_count(summaries.len().max(1) as u64);
        Self {
            n: summaries.first().map_or(0, |s| s.n),
            avg_score: est(&|s| s.avg_score),
            avg_cost: est(&|s| s.avg_cost),
            avg_minutes: est(&|s| s.avg_minutes),
            avg_net: est(&|s| s.avg_net),
            rw_bf: est(&|s| s.rw_bf),
            regret: est(&|s| s.regret),
            regret_explore: est(&|s| s.regret_explore),
            regret_exploit: est(&|s| s.regret_exploit),
            explored_episodes: est(&|s| S::from_count(s.explored_episodes)),
            zero_exploit_regret_fraction: S::from_count(
                summaries.iter().filter(|s| s.exploit_mismatches == 0).count() as u64,
            ) / k,
        }
    }
}

/// Students of one replication.
#[derive(Clone, Debug, PartialEq)]
pub struct Replication<S> {
    pub index: u32,
    pub seed: u64,
    pub rows: Vec<StudentRow<S>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult<S> {
    pub config: ExperimentConfig,
    pub policy: &'static str,
    /// Exploration constants the learner ran with.
    pub schedule: Option<ExplorationSchedule<S>>,
    /// Best-first value per context.
    pub bf_values: Vec<S>,
    pub replications: Vec<Replication<S>>,
}

impl<S: Real> ExperimentResult<S> {
    /// Per-replication summaries of the first `n` students.
    pub fn summaries(&self, n: u64) -> Result<Vec<Summary<S>>> {
        self.replications.iter().map(|r| Summary::of(&r.rows, n as usize)).collect()
    }

    pub fn pooled(&self, n: u64) -> Result<Pooled<S>> {
        Ok(Pooled::of(&self.summaries(n)?))
    }

    /// Exploration-regret bound at `n` for the learner's constants.
    pub fn bound(&self, model: &GroundTruthModel<S>, n: u64) -> Result<Option<S>> {
        self.schedule
            .map(|s| {
                theorem1_bound(
                    model.num_contexts(),
                    model.num_feedbacks(),
                    model.num_materials(),
                    s.d,
                    s.delta,
                    n,
                )
            })
            .transpose()
    }

    pub fn rows(&self) -> impl Iterator<Item = &StudentRow<S>> {
        self.replications.iter().flat_map(|r| r.rows.iter())
    }
}

/// Exploration constants for `spec` on `model`.
pub fn resolve_schedule<S: Real>(model: &GroundTruthModel<S>, spec: ScheduleSpec) -> Result<ExplorationSchedule<S>> {
    match spec {
        ScheduleSpec::Explicit { d, delta } => ExplorationSchedule::new(S::lit(d), S::lit(delta)),
        ScheduleSpec::Derived { epsilon } => {
            let mut gap: Option<S> = None;
            for x in (0..model.num_contexts()).map(Context) {
                if let Some(g) = compute_gaps(model, x)?.delta_min {
                    gap = Some(gap.map_or(g, |m: S| m.min(g)));
                }
            }
            let gap = gap.ok_or_else(|| invalid("no decision gap to derive exploration constants from"))?;
            derive_params(S::lit(epsilon), model.num_materials(), gap)
        }
    }
}

fn context_weights(model_contexts: usize, dist: &Option<Vec<f64>>) -> Result<WeightedIndex<f64>> {
    let w = match dist {
        None => vec![1.0; model_contexts],
        Some(d) => {
            if d.len() != model_contexts {
                return Err(TutorError::Dimension(format!(
                    "{} context probabilities for {model_contexts} contexts",
                    d.len()
                )));
            }
            let sum: f64 = d.iter().sum();
            if d.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(invalid(format!("context distribution {d:?} must be probabilities summing to 1")));
            }
            d.clone()
        }
    };
    WeightedIndex::new(w).map_err(|e| invalid(format!("context distribution: {e}")))
}

fn build_policy<'m, S: Real>(
    model: &'m GroundTruthModel<S>,
    spec: &PolicySpec,
    schedule: Option<ExplorationSchedule<S>>,
) -> Result<Box<dyn TutorPolicy<S> + 'm>> {
    Ok(match spec {
        PolicySpec::Bf => Box::new(BestFirst::new(model)),
        PolicySpec::Etutor { .. } => {
            let state = ETutorState::new(model.num_contexts(), model.num_materials(), model.num_feedbacks())?;
            let params = ETutorParams::new(schedule.expect("resolved before the run"), model.costs().clone());
            Box::new(ETutor::new(state, params))
        }
        PolicySpec::Rr { stop_probability } => Box::new(RandomRule::for_model(model, *stop_probability)?),
        PolicySpec::Fr { order } => Box::new(FixedRule::new(order.clone(), model.num_materials())?),
    })
}

/// Runs one student against `model`.
fn run_episode<S: Real>(
    model: &GroundTruthModel<S>,
    policy: &mut dyn TutorPolicy<S>,
    x: Context,
    rng: &mut ChaCha8Rng,
) -> Result<(crate::types::EpisodeRecord<S>, bool)> {
    let nq = model.num_materials();
    let mut hist = EpisodeHistory::new();
    let mut agree = true;
    let check = !policy.is_benchmark();
    loop {
        let step = policy.decide(x, &hist, rng as &mut dyn RngCore)?;
        if check && agree && bf_decide(model, x, &hist)? != step.decision {
            agree = false;
        }
        match step.decision {
            PolicyDecision::GiveExam => {
                if step.explored {
                    hist.mark_last_explored();
                }
                break;
            }
            PolicyDecision::ShowMaterial(q) => {
                if hist.len() >= nq || q.0 >= nq {
                    return Err(TutorError::Invariant(format!(
                        "{} showed material {q} after {} of {nq} materials",
                        policy.name(),
                        hist.len()
                    )));
                }
                let a = model.sample_feedback(x, hist.shown(), hist.feedbacks(), q, rng)?;
                hist.push(q, a, step.explored)?;
            }
        }
    }
    if hist.is_empty() && !model.has_empty_score(x) {
        return Err(TutorError::Invariant(format!(
            "{} gave the exam before any material, which this model does not score",
            policy.name()
        )));
    }
    let score = model.sample_exam_score(x, hist.shown(), hist.feedbacks(), rng)?;
    let record = hist.into_record(x, score, model.costs())?;
    policy.observe(&record)?;
    Ok((record, agree))
}

fn run_students<S: Real>(
    model: &GroundTruthModel<S>,
    policy: &mut dyn TutorPolicy<S>,
    n: u64,
    bf_values: &[S],
    contexts: &WeightedIndex<f64>,
    replication: u32,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<StudentRow<S>>> {
    let mut rows = Vec::with_capacity(n as usize);
    for i in 1..=n {
        let x = Context(contexts.sample(rng));
        let (rec, agree) = run_episode(model, policy, x, rng)?;
        let charged = model.costs().charged_total(&rec.shown);
        rows.push(StudentRow {
            replication,
            i,
            context: x.0,
            stop_slot: rec.stop_slot,
            explored: rec.is_explored(),
            score: rec.exam_score,
            cost: rec.total_cost,
            charged_cost: charged,
            regret: bf_values[x.0] - (rec.exam_score - charged),
            bf_agree: agree,
        });
    }
    Ok(rows)
}

fn run_replication<S: Real>(
    model: &GroundTruthModel<S>,
    config: &ExperimentConfig,
    schedule: Option<ExplorationSchedule<S>>,
    bf_values: &[S],
    contexts: &WeightedIndex<f64>,
    index: u32,
) -> Result<Replication<S>> {
    let seed = config.base_seed ^ u64::from(index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policy = build_policy(model, &config.policy, schedule)?;
    let rows = run_students(model, policy.as_mut(), config.n, bf_values, contexts, index, &mut rng)?;
    Ok(Replication { index, seed, rows })
}

fn bf_values_of<S: Real>(model: &GroundTruthModel<S>) -> Result<Vec<S>> {
    (0..model.num_contexts())
        .map(|x| bf_value(model, Context(x)).map(|v| v.value))
        .collect()
}

/// Continues training `state` on `n` more students drawn with `seed`.
///
/// Row indices continue from the state's student index.
pub fn train_learner<S: Real>(
    model: &GroundTruthModel<S>,
    state: ETutorState<S>,
    schedule: ExplorationSchedule<S>,
    n: u64,
    seed: u64,
    context_distribution: &Option<Vec<f64>>,
) -> Result<(ETutorState<S>, Vec<StudentRow<S>>)> {
    if state.dims() != (model.num_contexts(), model.num_materials(), model.num_feedbacks()) {
        return Err(TutorError::Dimension("learner state does not match the model".to_string()));
    }
    if model.score_bound() != S::one() {
        return Err(invalid("the learner needs exam scores in [0, 1]; scale the model first"));
    }
    let contexts = context_weights(model.num_contexts(), context_distribution)?;
    let bf_values = bf_values_of(model)?;
    let offset = state.student_index() - 1;
    let mut learner = ETutor::new(state, ETutorParams::new(schedule, model.costs().clone()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = run_students(model, &mut learner, n, &bf_values, &contexts, 0, &mut rng)?;
    for r in &mut rows {
        r.i += offset;
    }
    Ok((learner.state, rows))
}

/// Runs every replication of `config`, in parallel on the current rayon pool.
pub fn run_experiment<S: Real>(model: &GroundTruthModel<S>, config: &ExperimentConfig) -> Result<ExperimentResult<S>> {
    if config.n == 0 || config.replications == 0 {
        return Err(invalid("need n >= 1 and at least one replication"));
    }
    model.validate()?;
    let contexts = context_weights(model.num_contexts(), &config.context_distribution)?;
    let schedule = match &config.policy {
        PolicySpec::Etutor { schedule } => {
            if model.score_bound() != S::one() {
                return Err(invalid("the learner needs exam scores in [0, 1]; scale the model first"));
            }
            Some(resolve_schedule(model, *schedule)?)
        }
        _ => None,
    };
    let bf_values = bf_values_of(model)?;
    let replications = (0..config.replications)
        .into_par_iter()
        .map(|r| run_replication(model, config, schedule, &bf_values, &contexts, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        config: config.clone(),
        policy: config.policy.name(),
        schedule,
        bf_values,
        replications,
    })
}

/// Per-student regret split, pooled over every row given.
pub fn empirical_regret<S: Real>(rows: &[StudentRow<S>]) -> Result<(S, S, S)> {
    let s = Summary::of(rows, rows.len())?;
    Ok((s.regret, s.regret_explore, s.regret_exploit))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow<S> {
    pub policy: &'static str,
    pub n: u64,
    pub regret: S,
    pub regret_explore: S,
    pub regret_exploit: S,
    pub bound: Option<S>,
    /// Standard error of `regret` across replications.
    pub stderr: S,
    /// Largest per-replication exploration regret.
    pub regret_explore_max: S,
    pub zero_exploit_regret_fraction: S,
}

fn check_grid(grid: &[u64]) -> Result<u64> {
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(format!("n grid {grid:?} must be positive and strictly increasing")));
    }
    Ok(*grid.last().unwrap())
}

/// Regret at each grid point, measured on prefixes of one run of the
/// largest `n` (the config's own `n` is ignored).
pub fn regret_curve<S: Real>(
    model: &GroundTruthModel<S>,
    config: &ExperimentConfig,
    grid: &[u64],
) -> Result<(ExperimentResult<S>, Vec<CurveRow<S>>)> {
    let n_max = check_grid(grid)?;
    let mut cfg = config.clone();
    cfg.n = n_max;
    let result = run_experiment(model, &cfg)?;
    let rows = curve_rows(model, &result, grid)?;
    Ok((result, rows))
}

pub fn curve_rows<S: Real>(
    model: &GroundTruthModel<S>,
    result: &ExperimentResult<S>,
    grid: &[u64],
) -> Result<Vec<CurveRow<S>>> {
    grid.iter()
        .map(|&n| {
            let sums = result.summaries(n)?;
            let pooled = Pooled::of(&sums);
            Ok(CurveRow {
                policy: result.policy,
                n,
                regret: pooled.regret.mean,
                regret_explore: pooled.regret_explore.mean,
                regret_exploit: pooled.regret_exploit.mean,
                bound: result.bound(model, n)?,
                stderr: pooled.regret.stderr,
                regret_explore_max: sums.iter().map(|s| s.regret_explore).fold(S::neg_infinity(), S::max),
                zero_exploit_regret_fraction: pooled.zero_exploit_regret_fraction,
            })
        })
        .collect()
}

/// Average score and time of one policy at one `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow<S> {
    pub policy: &'static str,
    pub n: u64,
    pub avg_score: Estimate<S>,
    pub avg_cost: Estimate<S>,
    pub avg_minutes: Estimate<S>,
    pub regret: Estimate<S>,
}

/// Runs each policy once up to the largest grid point and reports the
/// prefixes.
pub fn compare_policies<S: Real>(
    model: &GroundTruthModel<S>,
    policies: &[PolicySpec],
    grid: &[u64],
    replications: u32,
    base_seed: u64,
    context_distribution: Option<Vec<f64>>,
) -> Result<Vec<ComparisonRow<S>>> {
    let n_max = check_grid(grid)?;
    let mut out = Vec::new();
    for spec in policies {
        let mut cfg = ExperimentConfig::new(spec.clone(), n_max, replications, base_seed);
        cfg.context_distribution = context_distribution.clone();
        let result = run_experiment(model, &cfg)?;
        for &n in grid {
            let p = result.pooled(n)?;
            out.push(ComparisonRow {
                policy: result.policy,
                n,
                avg_score: p.avg_score,
                avg_cost: p.avg_cost,
                avg_minutes: p.avg_minutes,
                regret: p.regret,
            });
        }
    }
    Ok(out)
}
