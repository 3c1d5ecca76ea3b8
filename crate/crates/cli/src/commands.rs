use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context as _, Result};
use serde::Serialize;
use serde_json::json;

use seqtutor::harness::{
    curve_csv, regret_curve, run_experiment, students_csv, train_learner, ExperimentConfig, PolicySpec,
    ScheduleSpec, COST_PER_MINUTE,
};
use seqtutor::oracle::{compute_gaps, oracle_report, GapReport, MAX_ADAPTIVE_MATERIALS};
use seqtutor::{
    check_assumption1, fixtures, generate_instance, Context, ETutorState, GenMode, InstanceGenParams,
    MaterialSequence, Model, NoiseSpec, TutorError,
};

use crate::args::{
    CurveArgs, GenerateArgs, ModeArg, NoiseArg, OracleArgs, PolicyArg, RunArgs, StateDumpArgs, StateLoadArgs,
};

const DEFAULT_N: u64 = 1000;
const DEFAULT_SEED: u64 = 0;
const DEFAULT_GRID: [u64; 5] = [100, 200, 400, 800, 1600];

/// Shortest decimal form with at most nine fractional digits.
fn num(v: f64) -> String {
    let s = format!("{v:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Writes through a sibling temp file so readers never see a partial file.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| anyhow!("`{}` is not a file path", path.display()))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, contents.as_bytes()),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn load_instance(name: &str) -> Result<Model> {
    match name {
        "builtin:example1" => Ok(fixtures::example1()),
        "builtin:remedial" => Ok(fixtures::remedial_population()),
        _ if name.starts_with("builtin:") => {
            bail!("unknown builtin `{name}`; available: builtin:example1, builtin:remedial")
        }
        _ => Model::load(name).with_context(|| format!("loading instance {name}")),
    }
}

/// Loads an instance and applies the cost override and scaling.
fn prepare_model(name: &str, cost: Option<f64>, scale: Option<f64>) -> Result<Model> {
    let mut m = load_instance(name)?;
    if let Some(c) = cost {
        m = m.with_uniform_cost(c)?;
    }
    if let Some(f) = scale {
        m = m.scale_model(f)?;
    }
    Ok(m)
}

fn schedule_of(epsilon: Option<f64>, d: Option<f64>, delta: Option<f64>) -> Result<Option<ScheduleSpec>> {
    match (epsilon, d, delta) {
        (None, None, None) => Ok(None),
        (Some(epsilon), None, None) => Ok(Some(ScheduleSpec::Derived { epsilon })),
        (None, Some(d), Some(delta)) => Ok(Some(ScheduleSpec::Explicit { d, delta })),
        (Some(_), _, _) => bail!("give either --epsilon or --D with --delta, not both"),
        _ => bail!("--D and --delta go together"),
    }
}

fn policy_spec(
    policy: PolicyArg,
    schedule: Option<ScheduleSpec>,
    order: Option<&[usize]>,
    stop_prob: Option<f64>,
    num_materials: usize,
) -> Result<PolicySpec> {
    Ok(match policy {
        PolicyArg::Bf => PolicySpec::Bf,
        PolicyArg::Etutor => PolicySpec::Etutor {
            schedule: schedule.ok_or_else(|| anyhow!("etutor needs --epsilon or --D with --delta"))?,
        },
        PolicyArg::Rr => match stop_prob {
            Some(p) => PolicySpec::Rr { stop_probability: p },
            None => PolicySpec::rr(),
        },
        PolicyArg::Fr => {
            let order = match order {
                Some(o) => MaterialSequence::from_indices(o)?,
                None => MaterialSequence::from_indices(&(0..num_materials).collect::<Vec<_>>())?,
            };
            PolicySpec::Fr { order }
        }
    })
}

fn gap_line(g: &GapReport<f64>) -> String {
    let mut s = format!("context {}: delta_min {}", g.context.0, g.delta_min.map_or("none".to_string(), num));
    let slots: Vec<String> = g
        .first_choice
        .iter()
        .chain(&g.after_slot)
        .map(|s| format!("slot {} {}", s.slot, num(s.gap)))
        .collect();
    if !slots.is_empty() {
        let _ = write!(s, " ({})", slots.join(", "));
    }
    s
}

pub fn generate(a: GenerateArgs) -> Result<()> {
    let mode = match a.mode.unwrap_or(ModeArg::Factored) {
        ModeArg::Tabular => GenMode::Tabular,
        ModeArg::Factored => GenMode::Factored,
    };
    let mut p = InstanceGenParams::new(
        mode,
        a.q.unwrap_or(3),
        a.contexts.unwrap_or(1),
        a.feedbacks.unwrap_or(2),
        a.seed.unwrap_or(DEFAULT_SEED),
    );
    if let Some(v) = a.score_lo {
        p.score_lo = v;
    }
    if let Some(v) = a.score_hi {
        p.score_hi = v;
    }
    p.min_gap = a.min_gap;
    p.costs = a.costs;
    p.noise = match (a.noise.unwrap_or(NoiseArg::Bernoulli), a.sigma) {
        (NoiseArg::Bernoulli, None) => NoiseSpec::Bernoulli,
        (NoiseArg::Bernoulli, Some(_)) => bail!("--sigma needs --noise truncated-normal"),
        (NoiseArg::TruncatedNormal, sigma) => NoiseSpec::TruncatedNormal { sigma: sigma.unwrap_or(0.1) },
    };
    if let Some(e) = a.enforce_assumption1 {
        p.enforce_assumption1 = e;
    }
    let model = generate_instance(&p)?;
    let text = model.to_json_string()?;
    let mut report = Vec::new();
    let mut holds = true;
    for x in (0..model.num_contexts()).map(Context) {
        match compute_gaps(&model, x) {
            Ok(g) => report.push(gap_line(&g)),
            Err(TutorError::ZeroGap { context, slot }) => {
                report.push(format!("context {context}: zero gap at slot {slot}"))
            }
            Err(e) => return Err(e.into()),
        }
        holds &= check_assumption1(&model, x)?.holds;
    }
    report.push(format!("assumption1: {holds}"));
    let report = report.join("\n");
    match &a.output {
        Some(path) => {
            write_atomic(path, text.as_bytes())?;
            println!("{report}");
        }
        None => {
            print!("{text}");
            eprintln!("{report}");
        }
    }
    Ok(())
}

pub fn oracle(a: OracleArgs) -> Result<()> {
    let model = prepare_model(&a.instance, a.cost, None)?;
    let contexts: Vec<Context> = match a.context {
        Some(x) if x >= model.num_contexts() => bail!("context {x} out of range"),
        Some(x) => vec![Context(x)],
        None => (0..model.num_contexts()).map(Context).collect(),
    };
    let range = (!a.no_crossover.unwrap_or(false) && model.num_materials() <= MAX_ADAPTIVE_MATERIALS)
        .then(|| (0.0, model.score_bound()));
    let mut reports = Vec::new();
    for x in contexts {
        let r = oracle_report(&model, x, range)?;
        println!(
            "context {}: bf {} fixed {} {} adaptive {} crossover {}",
            x.0,
            num(r.bf.value),
            num(r.best_fixed.value),
            fixed_label(&r.best_fixed.policy),
            r.best_adaptive.as_ref().map_or("skipped".to_string(), |v| num(v.value)),
            match (range, r.crossover_cost) {
                (None, _) => "skipped".to_string(),
                (Some(_), None) => "none".to_string(),
                (Some(_), Some(c)) => num(c),
            },
        );
        println!("  gaps: {}", gap_line(&r.gaps).split_once(": ").map_or("", |p| p.1));
        println!("  assumption1: {}", r.assumption1.holds);
        reports.push(r);
    }
    if let Some(path) = &a.output {
        write_atomic(path, to_json(&reports)?.as_bytes())?;
    }
    Ok(())
}

fn fixed_label(p: &seqtutor::oracle::OraclePolicy) -> String {
    match p {
        seqtutor::oracle::OraclePolicy::Sequence(s) => s.to_string(),
        seqtutor::oracle::OraclePolicy::Tree(_) => String::new(),
    }
}

/// Grid points `10^k` below `n`, then `n` itself.
fn bound_grid(n: u64) -> Vec<u64> {
    let mut g: Vec<u64> = std::iter::successors(Some(10u64), |v| v.checked_mul(10)).take_while(|v| *v < n).collect();
    g.push(n);
    g
}

pub fn run(a: RunArgs) -> Result<()> {
    let model = prepare_model(&a.instance, a.cost, a.scale)?;
    let policy = a.policy.ok_or_else(|| anyhow!("--policy is required"))?;
    let schedule = schedule_of(a.epsilon, a.d, a.delta)?;
    if schedule.is_some() && policy != PolicyArg::Etutor {
        bail!("--epsilon, --D and --delta only apply to --policy etutor");
    }
    if a.order.is_some() && policy != PolicyArg::Fr {
        bail!("--order only applies to --policy fr");
    }
    if a.stop_prob.is_some() && policy != PolicyArg::Rr {
        bail!("--stop-prob only applies to --policy rr");
    }
    let spec = policy_spec(policy, schedule, a.order.as_deref(), a.stop_prob, model.num_materials())?;
    let n = a.n.unwrap_or(DEFAULT_N);
    let mut cfg = ExperimentConfig::new(spec, n, a.reps.unwrap_or(1), a.seed.unwrap_or(DEFAULT_SEED));
    cfg.context_distribution = a.context_dist;
    let result = run_experiment(&model, &cfg)?;
    let pooled = result.pooled(n)?;
    let bounds = match result.schedule {
        Some(_) => bound_grid(n)
            .into_iter()
            .map(|k| Ok(json!({"n": k, "bound": result.bound(&model, k)?})))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let summary = json!({
        "policy": result.policy,
        "config": cfg,
        "schedule": result.schedule,
        "bf_values": result.bf_values,
        "cost_per_minute": COST_PER_MINUTE,
        "pooled": pooled,
        "bounds": bounds,
    });
    let dir = a.out.unwrap_or_else(|| ".".into());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_atomic(&dir.join(format!("{}.students.csv", result.policy)), students_csv(&result)?.as_bytes())?;
    write_atomic(&dir.join(format!("{}.summary.json", result.policy)), to_json(&summary)?.as_bytes())?;
    println!(
        "{}: score {} time {} min (n {}, {} reps)",
        result.policy,
        num(pooled.avg_score.mean),
        num(pooled.avg_minutes.mean),
        n,
        cfg.replications
    );
    println!(
        "  net {} regret {} (explore {}, exploit {}, stderr {})",
        num(pooled.avg_net.mean),
        num(pooled.regret.mean),
        num(pooled.regret_explore.mean),
        num(pooled.regret_exploit.mean),
        num(pooled.regret.stderr)
    );
    if let Some(s) = result.schedule {
        println!("  D {} delta {}", num(s.d), num(s.delta));
        for b in &bounds {
            println!("  bound n={}: {}", b["n"], num(b["bound"].as_f64().unwrap_or(f64::NAN)));
        }
    }
    Ok(())
}

pub fn curve(a: CurveArgs) -> Result<()> {
    let model = prepare_model(&a.instance, a.cost, a.scale)?;
    let policies = a.policies.ok_or_else(|| anyhow!("--policies is required"))?;
    if policies.is_empty() {
        bail!("--policies is empty");
    }
    let schedule = schedule_of(a.epsilon, a.d, a.delta)?;
    let grid = a.n_grid.unwrap_or_else(|| DEFAULT_GRID.to_vec());
    let mut rows = Vec::new();
    for p in policies {
        let spec = policy_spec(p, schedule, a.order.as_deref(), a.stop_prob, model.num_materials())?;
        let mut cfg = ExperimentConfig::new(spec, 1, a.reps.unwrap_or(1), a.seed.unwrap_or(DEFAULT_SEED));
        cfg.context_distribution = a.context_dist.clone();
        rows.extend(regret_curve(&model, &cfg, &grid)?.1);
    }
    emit(a.output.as_deref(), &curve_csv(&rows)?)?;
    if a.output.is_some() {
        for r in &rows {
            println!(
                "{} n={}: R {} R_e {} R_s {}{}",
                r.policy,
                r.n,
                num(r.regret),
                num(r.regret_explore),
                num(r.regret_exploit),
                r.bound.map_or(String::new(), |b| format!(" bound {}", num(b)))
            );
        }
    }
    Ok(())
}

fn print_state(state: &ETutorState<f64>) {
    let (x, q, a) = state.dims();
    println!(
        "state: {x} contexts, {q} materials, {a} feedbacks, {} students seen",
        state.student_index() - 1
    );
}

fn learner_schedule(model: &Model, epsilon: Option<f64>, d: Option<f64>, delta: Option<f64>) -> Result<seqtutor::ExplorationSchedule<f64>> {
    let spec = schedule_of(epsilon, d, delta)?.ok_or_else(|| anyhow!("training needs --epsilon or --D with --delta"))?;
    Ok(seqtutor::harness::resolve_schedule(model, spec)?)
}

pub fn state_dump(a: StateDumpArgs) -> Result<()> {
    let model = prepare_model(&a.instance, a.cost, a.scale)?;
    let schedule = learner_schedule(&model, a.epsilon, a.d, a.delta)?;
    let fresh = ETutorState::new(model.num_contexts(), model.num_materials(), model.num_feedbacks())?;
    let (state, _) = train_learner(
        &model,
        fresh,
        schedule,
        a.n.unwrap_or(DEFAULT_N),
        a.seed.unwrap_or(DEFAULT_SEED),
        &a.context_dist,
    )?;
    emit(a.output.as_deref(), &state.to_json_string()?)?;
    if a.output.is_some() {
        print_state(&state);
    }
    Ok(())
}

pub fn state_load(a: StateLoadArgs) -> Result<()> {
    let text = fs::read_to_string(&a.state).with_context(|| format!("reading {}", a.state.display()))?;
    let mut state = ETutorState::<f64>::from_json_str(&text)?;
    let n = a.n.unwrap_or(0);
    if n > 0 {
        let name = a.instance.as_deref().ok_or_else(|| anyhow!("--n needs --instance"))?;
        let model = prepare_model(name, a.cost, a.scale)?;
        let schedule = learner_schedule(&model, a.epsilon, a.d, a.delta)?;
        state = train_learner(&model, state, schedule, n, a.seed.unwrap_or(DEFAULT_SEED), &a.context_dist)?.0;
    } else if a.instance.is_some() {
        let model = prepare_model(a.instance.as_deref().unwrap(), a.cost, a.scale)?;
        if state.dims() != (model.num_contexts(), model.num_materials(), model.num_feedbacks()) {
            return Err(TutorError::Dimension("snapshot does not match the instance".to_string()).into());
        }
    }
    if let Some(path) = &a.output {
        write_atomic(path, state.to_json_string()?.as_bytes())?;
    }
    print_state(&state);
    Ok(())
}
