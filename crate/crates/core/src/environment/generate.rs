//! Seeded random instances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_assumption1, Dims, FactoredTables, GroundTruthModel, NoiseSpec, ScoreNoise, TabularTables,
    MAX_TABULAR_MATERIALS,
};
use crate::error::{invalid, Result, TutorError};
use crate::types::{Context, CostSchedule, Feedback, MaterialId};

/// Largest number of tree entries a generated tabular model may hold.
pub const MAX_TABULAR_ENTRIES: usize = 2_000_000;

const ASSUMPTION1_ATTEMPTS: u64 = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenMode {
    Tabular,
    Factored,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceGenParams {
    pub mode: GenMode,
    pub num_materials: usize,
    pub num_contexts: usize,
    pub num_feedbacks: usize,
    /// Mean scores stay inside `[score_lo, score_hi]`.
    pub score_lo: f64,
    pub score_hi: f64,
    /// Factored mode only: every decision gap, net of cost, is at least this.
    /// Costs are then drawn from `[min_gap, 1.5 * min_gap]`.
    pub min_gap: Option<f64>,
    /// Explicit per-material costs; zero costs when absent and no gap is set.
    pub costs: Option<Vec<f64>>,
    pub noise: NoiseSpec,
    pub seed: u64,
    pub enforce_assumption1: bool,
}

impl InstanceGenParams {
    pub fn new(mode: GenMode, num_materials: usize, num_contexts: usize, num_feedbacks: usize, seed: u64) -> Self {
        Self {
            mode,
            num_materials,
            num_contexts,
            num_feedbacks,
            score_lo: 0.0,
            score_hi: 1.0,
            min_gap: None,
            costs: None,
            noise: NoiseSpec::Bernoulli,
            seed,
            enforce_assumption1: mode == GenMode::Factored,
        }
    }

    pub fn with_min_gap(mut self, gap: f64) -> Self {
        self.min_gap = Some(gap);
        self
    }

    fn validate(&self) -> Result<()> {
        Dims::new(self.num_contexts, self.num_materials, self.num_feedbacks)?;
        if !(0.0 <= self.score_lo && self.score_lo < self.score_hi && self.score_hi <= 1.0) {
            return Err(invalid(format!(
                "score range [{}, {}] must be a non-empty subrange of [0, 1]",
                self.score_lo, self.score_hi
            )));
        }
        if let Some(h) = self.min_gap {
            if self.mode != GenMode::Factored {
                return Err(invalid("min_gap is only supported in factored mode"));
            }
            if !(h > 0.0 && h.is_finite()) {
                return Err(invalid(format!("min_gap must be positive, got {h}")));
            }
            if self.costs.is_some() {
                return Err(invalid("min_gap draws its own costs; do not pass explicit costs"));
            }
        }
        if let Some(c) = &self.costs {
            if c.len() != self.num_materials {
                return Err(TutorError::Dimension(format!(
                    "{} costs for {} materials",
                    c.len(),
                    self.num_materials
                )));
            }
        }
        if self.mode == GenMode::Tabular {
            if self.num_materials > MAX_TABULAR_MATERIALS {
                return Err(TutorError::SizeLimit {
                    what: "tabular materials",
                    value: self.num_materials,
                    max: MAX_TABULAR_MATERIALS,
                });
            }
            let entries = tree_entries(self.num_materials, self.num_feedbacks).saturating_mul(self.num_contexts);
            if entries > MAX_TABULAR_ENTRIES {
                return Err(TutorError::SizeLimit {
                    what: "tabular tree entries",
                    value: entries,
                    max: MAX_TABULAR_ENTRIES,
                });
            }
        }
        Ok(())
    }
}

/// Number of scored nodes per context: `sum_t Q!/(Q-t)! * A^t`.
fn tree_entries(q: usize, a: usize) -> usize {
    let mut total = 0usize;
    let mut level = 1usize;
    for t in 0..q {
        level = level.saturating_mul(q - t).saturating_mul(a);
        total = total.saturating_add(level);
    }
    total
}

/// Builds a validated model from `params`; the same parameters always give
/// the same model.
pub fn generate_instance(params: &InstanceGenParams) -> Result<GroundTruthModel<f64>> {
    params.validate()?;
    let dims = Dims::new(params.num_contexts, params.num_materials, params.num_feedbacks)?;
    let noise = match params.noise {
        NoiseSpec::Bernoulli => ScoreNoise::Bernoulli,
        NoiseSpec::TruncatedNormal { sigma } => ScoreNoise::TruncatedNormal { sigma },
    };
    match params.mode {
        GenMode::Factored => {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            let model = generate_factored(params, dims, noise, &mut rng)?;
            if params.enforce_assumption1 {
                for x in 0..dims.contexts {
                    let report = check_assumption1(&model, Context(x))?;
                    if !report.holds {
                        return Err(TutorError::Assumption1 {
                            context: x,
                            detail: format!("{:?}", report.counterexample),
                        });
                    }
                }
            }
            Ok(model)
        }
        GenMode::Tabular => {
            let attempts = if params.enforce_assumption1 { ASSUMPTION1_ATTEMPTS } else { 1 };
            let mut last = None;
            for k in 0..attempts {
                let seed = params.seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let model = generate_tabular(params, dims, noise, &mut rng)?;
                if !params.enforce_assumption1 {
                    return Ok(model);
                }
                let mut failure = None;
                for x in 0..dims.contexts {
                    let report = check_assumption1(&model, Context(x))?;
                    if !report.holds {
                        failure = Some((x, report.counterexample));
                        break;
                    }
                }
                match failure {
                    None => return Ok(model),
                    Some(f) => last = Some(f),
                }
            }
            let (x, cex) = last.expect("at least one attempt");
            Err(TutorError::Assumption1 {
                context: x,
                detail: format!("no draw out of {attempts} satisfied the assumption; last: {cex:?}"),
            })
        }
    }
}

fn random_probs<R: Rng>(a: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..a).map(|_| rng.random_range(0.1..=1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|v| v / sum).collect();
    // put the rounding residue on the largest entry
    let residue = 1.0 - probs.iter().sum::<f64>();
    let top = (0..a).max_by(|&i, &j| probs[i].total_cmp(&probs[j])).unwrap_or(0);
    probs[top] += residue;
    probs
}

fn base_costs<R: Rng>(params: &InstanceGenParams, rng: &mut R) -> Vec<f64> {
    match (&params.costs, params.min_gap) {
        (Some(c), _) => c.clone(),
        (None, Some(h)) => (0..params.num_materials).map(|_| rng.random_range(h..=1.5 * h)).collect(),
        (None, None) => vec![0.0; params.num_materials],
    }
}

fn generate_factored<R: Rng>(
    params: &InstanceGenParams,
    dims: Dims,
    noise: ScoreNoise<f64>,
    rng: &mut R,
) -> Result<GroundTruthModel<f64>> {
    let (nq, na) = (dims.materials, dims.feedbacks);
    let (lo, hi) = (params.score_lo, params.score_hi);
    let costs = base_costs(params, rng);
    let mut feedback_prob = Vec::with_capacity(dims.contexts);
    let mut increments = Vec::with_capacity(dims.contexts);
    let mut base = Vec::with_capacity(dims.contexts);
    for x in 0..dims.contexts {
        let probs: Vec<Vec<f64>> = (0..nq).map(|_| random_probs(na, rng)).collect();
        let inc = match params.min_gap {
            None => {
                let w = (hi - lo) / (2.0 * nq as f64);
                (0..nq)
                    .map(|_| (0..na).map(|_| rng.random_range(-w..=w)).collect())
                    .collect::<Vec<Vec<f64>>>()
            }
            Some(h) => gapped_increments(x, h, &costs, &probs, lo, hi, rng)?,
        };
        let pos: f64 = inc.iter().map(|r| r.iter().copied().fold(0.0, f64::max)).sum();
        let neg: f64 = inc.iter().map(|r| r.iter().copied().fold(0.0, f64::min)).sum();
        let (b_lo, b_hi) = (lo - neg, hi - pos);
        if b_lo > b_hi {
            return Err(TutorError::Invariant(format!("no unclamped base score for context {x}")));
        }
        base.push(if b_lo == b_hi { b_lo } else { rng.random_range(b_lo..=b_hi) });
        feedback_prob.push(probs);
        increments.push(inc);
    }
    GroundTruthModel::factored(
        dims,
        FactoredTables {
            feedback_prob,
            increments,
            base,
        },
        CostSchedule::new(costs, false)?,
        noise,
    )
}

/// Increments whose expected values net of cost are either at least `h`
/// apart and above `h`, or at most `-h`; sums never leave `[lo, hi]`.
fn gapped_increments<R: Rng>(
    x: usize,
    h: f64,
    costs: &[f64],
    probs: &[Vec<f64>],
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let nq = costs.len();
    let mut order: Vec<usize> = (0..nq).collect();
    order.shuffle(rng);
    let mut positives = rng.random_range(1..=nq);
    // Draw every candidate value once, then shrink the positive set until the
    // scores fit.
    let steps: Vec<f64> = (0..nq).map(|_| h * (1.0 + 0.25 * rng.random::<f64>())).collect();
    let negatives: Vec<f64> = (0..nq).map(|q| -rng.random_range(h..=costs[q].max(h))).collect();
    let spreads: Vec<Vec<f64>> = probs
        .iter()
        .map(|p| {
            let u: Vec<f64> = p.iter().map(|_| rng.random_range(-1.0..=1.0)).collect();
            let mean: f64 = u.iter().zip(p).map(|(v, w)| v * w).sum();
            u.iter().map(|v| 0.125 * h * (v - mean)).collect()
        })
        .collect();
    loop {
        let mut net = vec![0.0; nq];
        let mut level = 0.0;
        for (rank, &q) in order.iter().enumerate() {
            net[q] = if rank < positives {
                level += steps[rank];
                level
            } else {
                negatives[q]
            };
        }
        let inc: Vec<Vec<f64>> = (0..nq)
            .map(|q| spreads[q].iter().map(|d| net[q] + costs[q] + d).collect())
            .collect();
        let pos: f64 = inc.iter().map(|r| r.iter().copied().fold(0.0, f64::max)).sum();
        let neg: f64 = inc.iter().map(|r| r.iter().copied().fold(0.0, f64::min)).sum();
        if pos - neg <= hi - lo {
            return Ok(inc);
        }
        if positives == 1 {
            return Err(invalid(format!(
                "min_gap {h} is too large for the score range in context {x}"
            )));
        }
        positives -= 1;
    }
}

fn generate_tabular<R: Rng>(
    params: &InstanceGenParams,
    dims: Dims,
    noise: ScoreNoise<f64>,
    rng: &mut R,
) -> Result<GroundTruthModel<f64>> {
    let (lo, hi) = (params.score_lo, params.score_hi);
    let costs = base_costs(params, rng);
    let mut tables = TabularTables::new();
    for x in (0..dims.contexts).map(Context) {
        tables.set_score(x, &[], &[], rng.random_range(lo..=hi));
        let mut stack: Vec<(Vec<MaterialId>, Vec<Feedback>)> = vec![(Vec::new(), Vec::new())];
        while let Some((shown, fb)) = stack.pop() {
            for q in (0..dims.materials).map(MaterialId) {
                if shown.contains(&q) {
                    continue;
                }
                tables.set_feedback(x, &shown, &fb, q, random_probs(dims.feedbacks, rng));
                for a in (0..dims.feedbacks).map(Feedback) {
                    let mut s = shown.clone();
                    s.push(q);
                    let mut f = fb.clone();
                    f.push(a);
                    tables.set_score(x, &s, &f, rng.random_range(lo..=hi));
                    if s.len() < dims.materials {
                        stack.push((s, f));
                    }
                }
            }
        }
    }
    GroundTruthModel::tabular(dims, tables, CostSchedule::new(costs, false)?, noise, 1.0)
}
