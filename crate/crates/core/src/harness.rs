//! Experiment orchestration: scenarios, closed-loop runs, fixed-barring
//! sweeps, steady-state summaries, bootstrap comparisons and CSV/JSON output.
//!
//! Seeds: a scenario's `seed` drives episode 0; episode `e` runs on
//! `derive_seed(seed, e)` for `e >= 1`. Replicate `r` of a multi-seed study
//! uses `derive_seed(master, 1000 + r)`.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::LoadCurve;
use crate::env::{AcbVector, ClassConfig, ClassCount, LoadModulation, NetworkConfig};
use crate::error::{ensure, Error, Result};
use crate::rl::{fingerprint, quantize_state, QLearningAgent, RlConfig, UtilityParams};
use crate::rng::{self, derive_seed, Stream};
use crate::saud::RecoveryConfig;
use crate::sim::{Environment, StepResult};
use crate::td3::{train_slot, ChannelView, Td3Agent, Td3Config};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentSpec {
    Fixed { p: Vec<f64> },
    Rl(RlConfig),
    Td3(Td3Config),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub network: NetworkConfig,
    #[serde(default)]
    pub recovery: RecoveryConfig,
    pub utility: UtilityParams,
    pub agent: AgentSpec,
    pub episodes: usize,
    pub slots_per_episode: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.recovery.validate(self.network.n_antennas)?;
        self.utility.validate()?;
        let l = self.network.n_classes();
        match &self.agent {
            AgentSpec::Fixed { p } => {
                ensure(p.len() == l, || format!("fixed agent has {} factors for {l} classes", p.len()))?;
                AcbVector::new(p.clone())?;
            }
            AgentSpec::Rl(cfg) => cfg.validate(l)?,
            AgentSpec::Td3(cfg) => cfg.validate()?,
        }
        Ok(())
    }

    pub fn total_slots(&self) -> usize {
        self.episodes * self.slots_per_episode
    }

    pub fn with_agent(&self, agent: AgentSpec) -> Self {
        Self { agent, ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s: Scenario = serde_json::from_str(&text)?;
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub utility: f64,
    pub n_permitted: f64,
    pub n_valid: usize,
    pub accuracy: f64,
    /// Users of each class that passed barring, over the class size.
    pub access_ratio: Vec<f64>,
    /// Barring factors applied in the slot.
    pub factors: Vec<f64>,
    /// Index of the traffic load level in force.
    pub load_level: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub scenario: Scenario,
    pub fingerprint: String,
    pub records: Vec<SlotRecord>,
}

impl MetricSeries {
    pub fn n_classes(&self) -> usize {
        self.scenario.network.n_classes()
    }

    pub fn utilities(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.utility).collect()
    }
}

/// Learner state after a run.
#[derive(Debug, Clone)]
pub enum TrainedAgent {
    Fixed(AcbVector),
    Rl(QLearningAgent),
    Td3(Box<Td3Agent>),
}

pub struct RunOutput {
    pub series: MetricSeries,
    pub agent: TrainedAgent,
}

fn episode_seed(seed: u64, episode: usize) -> u64 {
    if episode == 0 {
        seed
    } else {
        derive_seed(seed, episode as u64)
    }
}

/// Runs the scenario and keeps the series.
pub fn run(scenario: &Scenario) -> Result<MetricSeries> {
    run_detailed(scenario).map(|o| o.series)
}

/// Runs the scenario and also returns the trained agent.
///
/// The environment is rebuilt at each episode start; the agent carries over.
pub fn run_detailed(scenario: &Scenario) -> Result<RunOutput> {
    scenario.validate()?;
    let net = &scenario.network;
    let sizes: Vec<f64> = net.class_sizes().iter().map(|&n| n as f64).collect();
    let class_map = net.class_map();
    let l = net.n_classes();
    let mut act_rng = rng::stream(scenario.seed, Stream::Agent);
    let mut learn_rng = rng::stream(scenario.seed, Stream::Replay);
    let mut agent = match &scenario.agent {
        AgentSpec::Fixed { p } => TrainedAgent::Fixed(AcbVector::new(p.clone())?),
        AgentSpec::Rl(cfg) => TrainedAgent::Rl(QLearningAgent::new(cfg.clone(), l)?),
        AgentSpec::Td3(cfg) => {
            let mut init = rng::stream(scenario.seed, Stream::Init);
            TrainedAgent::Td3(Box::new(Td3Agent::new(cfg.clone(), net.n_users, l, &mut init)?))
        }
    };
    let mut records = Vec::with_capacity(scenario.total_slots());
    for episode in 0..scenario.episodes {
        let mut env = Environment::new(
            net.clone(),
            scenario.recovery.clone(),
            scenario.utility,
            episode_seed(scenario.seed, episode),
        )?;
        for _ in 0..scenario.slots_per_episode {
            let (p, step) = match &mut agent {
                TrainedAgent::Fixed(p) => (p.clone(), env.step(p)?),
                TrainedAgent::Rl(q) => {
                    let (a, p) = q.act(&mut act_rng)?;
                    let step = env.step(&p)?;
                    q.observe(a, &p, step.outcome.accuracy, step.utility)?;
                    (p, step)
                }
                TrainedAgent::Td3(t) => train_slot(&mut env, t, &mut act_rng, &mut learn_rng)?,
            };
            records.push(slot_record(records.len(), &p, &step, &class_map, &sizes, env.traffic().level_index()));
        }
    }
    Ok(RunOutput {
        series: MetricSeries {
            fingerprint: fingerprint(scenario),
            scenario: scenario.clone(),
            records,
        },
        agent,
    })
}

fn slot_record(
    slot: usize,
    p: &AcbVector,
    step: &StepResult,
    class_map: &[usize],
    sizes: &[f64],
    load_level: usize,
) -> SlotRecord {
    let mut per_class = vec![0usize; sizes.len()];
    for &n in &step.outcome.passed {
        per_class[class_map[n]] += 1;
    }
    SlotRecord {
        slot,
        utility: step.utility,
        n_permitted: step.outcome.n_permitted,
        n_valid: step.outcome.n_valid,
        accuracy: step.outcome.accuracy,
        access_ratio: per_class.iter().zip(sizes).map(|(&c, &n)| c as f64 / n).collect(),
        factors: p.factors.clone(),
        load_level,
    }
}

/// Runs a trained agent without exploration or learning for `slots` slots
/// on a fresh environment seeded with `seed`. The agent starts from the
/// state it was left in.
pub fn evaluate_greedy(scenario: &Scenario, agent: &TrainedAgent, slots: usize, seed: u64) -> Result<MetricSeries> {
    scenario.validate()?;
    let net = &scenario.network;
    let sizes: Vec<f64> = net.class_sizes().iter().map(|&n| n as f64).collect();
    let class_map = net.class_map();
    let mut agent = agent.clone();
    let mut tie_rng = rng::stream(seed, Stream::Agent);
    let mut env = Environment::new(net.clone(), scenario.recovery.clone(), scenario.utility, seed)?;
    let mut records = Vec::with_capacity(slots);
    for slot in 0..slots {
        let (p, step) = match &mut agent {
            TrainedAgent::Fixed(p) => (p.clone(), env.step(p)?),
            TrainedAgent::Rl(q) => {
                let (_, p) = q.greedy(&mut tie_rng)?;
                let step = env.step(&p)?;
                q.state = quantize_state(&p, step.outcome.accuracy, &q.config);
                (p, step)
            }
            TrainedAgent::Td3(t) => {
                let p = t.greedy()?;
                let step = env.step(&p)?;
                t.state = t.encode(&p, step.outcome.accuracy, &t.channel_features(&step));
                (p, step)
            }
        };
        records.push(slot_record(slot, &p, &step, &class_map, &sizes, env.traffic().level_index()));
    }
    Ok(MetricSeries {
        fingerprint: fingerprint(scenario),
        scenario: scenario.clone(),
        records,
    })
}

/// Number of trailing records in the steady-state window: the last quarter,
/// rounded up.
pub fn steady_window(n: usize) -> usize {
    n.div_ceil(4)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub utility: f64,
    pub n_permitted: f64,
    pub n_valid: f64,
    pub accuracy: f64,
    pub access_ratio: Vec<f64>,
    pub window: usize,
}

/// Means over the last 25% of slots.
pub fn steady_state(series: &MetricSeries) -> Result<SteadyState> {
    let n = series.records.len();
    ensure(n > 0, || format!("series '{}' is empty", series.scenario.name))?;
    let w = steady_window(n);
    let tail = &series.records[n - w..];
    let mean = |f: &dyn Fn(&SlotRecord) -> f64| tail.iter().map(f).sum::<f64>() / w as f64;
    let l = series.n_classes();
    Ok(SteadyState {
        utility: mean(&|r| r.utility),
        n_permitted: mean(&|r| r.n_permitted),
        n_valid: mean(&|r| r.n_valid as f64),
        accuracy: mean(&|r| r.accuracy),
        access_ratio: (0..l).map(|c| mean(&|r| r.access_ratio[c])).collect(),
        window: w,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p: AcbVector,
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub best: AcbVector,
    pub utility: f64,
    pub points: Vec<SweepPoint>,
}

/// Evaluates every fixed `p` in `grid` on `replicates` seeds and returns the
/// grid point with the highest mean steady-state utility (first wins ties).
///
/// All grid points share the same replicate seeds
/// `derive_seed(scenario.seed, 1000 + r)`, so they face identical traffic.
pub fn sweep_fixed_baseline(scenario: &Scenario, grid: &[AcbVector], replicates: usize) -> Result<SweepResult> {
    ensure(!grid.is_empty(), || "sweep grid is empty".into())?;
    ensure(replicates >= 1, || "at least one replicate required".into())?;
    let jobs: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|g| (0..replicates).map(move |r| (g, r as u64)))
        .collect();
    let results: Vec<Result<(usize, f64)>> = jobs
        .par_iter()
        .map(|&(g, r)| {
            let s = Scenario {
                agent: AgentSpec::Fixed { p: grid[g].factors.clone() },
                seed: replicate_seed(scenario.seed, r as usize),
                ..scenario.clone()
            };
            Ok((g, steady_state(&run(&s)?)?.utility))
        })
        .collect();
    let mut sums = vec![0.0; grid.len()];
    for r in results {
        let (g, u) = r?;
        sums[g] += u;
    }
    let points: Vec<SweepPoint> = grid
        .iter()
        .zip(&sums)
        .map(|(p, s)| SweepPoint {
            p: p.clone(),
            utility: s / replicates as f64,
        })
        .collect();
    let mut best = 0;
    for (i, pt) in points.iter().enumerate() {
        if pt.utility > points[best].utility {
            best = i;
        }
    }
    Ok(SweepResult {
        best: points[best].p.clone(),
        utility: points[best].utility,
        points,
    })
}

pub fn replicate_seed(master: u64, replicate: usize) -> u64 {
    derive_seed(master, 1000 + replicate as u64)
}

/// Cartesian grid over `levels` for `n_classes` classes (class 0 varies fastest).
pub fn product_grid(levels: &[f64], n_classes: usize) -> Result<Vec<AcbVector>> {
    let k = levels.len();
    let total = u32::try_from(n_classes).ok().and_then(|l| k.checked_pow(l));
    let total = total.filter(|&t| t <= 1 << 20).ok_or_else(|| Error::InvalidConfig("grid too large".into()))?;
    (0..total)
        .map(|mut i| {
            let mut f = Vec::with_capacity(n_classes);
            for _ in 0..n_classes {
                f.push(levels[i % k]);
                i /= k;
            }
            AcbVector::new(f)
        })
        .collect()
}

/// Parses a grid spec: `"0.1,0.5,1"` (explicit levels) or `"a:b:n"`
/// (`n` evenly spaced levels from `a` to `b`), expanded over all classes.
pub fn parse_grid(spec: &str, n_classes: usize) -> Result<Vec<AcbVector>> {
    let bad = || Error::InvalidConfig(format!("bad grid spec '{spec}'"));
    let levels: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        match n {
            0 => return Err(bad()),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        }
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if levels.is_empty() {
        return Err(bad());
    }
    product_grid(&levels, n_classes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

pub fn csv_header(n_classes: usize) -> String {
    let mut h = String::from("slot,utility,n_permitted,n_valid,accuracy");
    for l in 1..=n_classes {
        let _ = write!(h, ",access_ratio_class_{l}");
    }
    h
}

/// CSV text: header plus one line per record. Floats use Rust's shortest
/// round-trip formatting.
pub fn to_csv(series: &MetricSeries) -> String {
    let mut out = csv_header(series.n_classes());
    out.push('\n');
    for r in &series.records {
        let _ = write!(out, "{},{},{},{},{}", r.slot, r.utility, r.n_permitted, r.n_valid, r.accuracy);
        for a in &r.access_ratio {
            let _ = write!(out, ",{a}");
        }
        out.push('\n');
    }
    out
}

pub fn emit(series: &MetricSeries, format: Format, path: &Path) -> Result<()> {
    let text = match format {
        Format::Csv => to_csv(series),
        Format::Json => serde_json::to_string_pretty(series)?,
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_series(path: &Path) -> Result<MetricSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const BOOTSTRAP_SEED: u64 = 0x5EED_B007;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile bootstrap 95% interval of the mean, 1000 resamples with a fixed seed.
pub fn bootstrap_mean(values: &[f64]) -> Result<Interval> {
    ensure(!values.is_empty(), || "bootstrap of an empty sample".into())?;
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut r = rng::from_seed(BOOTSTRAP_SEED);
    let mut means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n).map(|_| values[r.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    Ok(Interval {
        mean,
        low: percentile(&means, 0.025),
        high: percentile(&means, 0.975),
    })
}

/// Bootstrap interval of `mean(a) - mean(b)`. Equal-length inputs are
/// treated as paired (index `i` of both came from the same seed) and the
/// differences are resampled; otherwise the two samples are resampled
/// independently.
pub fn bootstrap_difference(a: &[f64], b: &[f64]) -> Result<Interval> {
    ensure(!a.is_empty() && !b.is_empty(), || "bootstrap of an empty sample".into())?;
    if a.len() == b.len() {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        return bootstrap_mean(&d);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut r = rng::from_seed(BOOTSTRAP_SEED);
    let mut resample = |v: &[f64]| (0..v.len()).map(|_| v[r.random_range(0..v.len())]).sum::<f64>() / v.len() as f64;
    let mut diffs: Vec<f64> = (0..BOOTSTRAP_RESAMPLES).map(|_| resample(a) - resample(b)).collect();
    diffs.sort_by(f64::total_cmp);
    Ok(Interval {
        mean: mean(a) - mean(b),
        low: percentile(&diffs, 0.025),
        high: percentile(&diffs, 0.975),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub name: String,
    pub runs: usize,
    pub utility: Interval,
    pub n_permitted: Interval,
    pub n_valid: Interval,
    pub accuracy: Interval,
    /// Per-run steady-state utilities.
    pub run_utilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub better: String,
    pub worse: String,
    pub utility_gap: Interval,
}

impl GapSummary {
    /// The whole interval lies above zero.
    pub fn positive(&self) -> bool {
        self.utility_gap.low > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub groups: Vec<GroupSummary>,
    /// Gap of every group over the first one.
    pub gaps: Vec<GapSummary>,
}

/// Steady-state values each run contributes to a group's statistics: with
/// several runs one mean per run, with a single run every slot of its window.
fn units(runs: &[MetricSeries], f: impl Fn(&SlotRecord) -> f64) -> Result<Vec<f64>> {
    if runs.len() == 1 {
        let r = &runs[0].records;
        ensure(!r.is_empty(), || format!("series '{}' is empty", runs[0].scenario.name))?;
        return Ok(r[r.len() - steady_window(r.len())..].iter().map(f).collect());
    }
    runs.iter()
        .map(|s| {
            let r = &s.records;
            ensure(!r.is_empty(), || format!("series '{}' is empty", s.scenario.name))?;
            let tail = &r[r.len() - steady_window(r.len())..];
            Ok(tail.iter().map(&f).sum::<f64>() / tail.len() as f64)
        })
        .collect()
}

pub fn summarize(name: &str, runs: &[MetricSeries]) -> Result<GroupSummary> {
    ensure(!runs.is_empty(), || format!("group '{name}' has no runs"))?;
    let u = units(runs, |r| r.utility)?;
    Ok(GroupSummary {
        name: name.to_string(),
        runs: runs.len(),
        utility: bootstrap_mean(&u)?,
        n_permitted: bootstrap_mean(&units(runs, |r| r.n_permitted)?)?,
        n_valid: bootstrap_mean(&units(runs, |r| r.n_valid as f64)?)?,
        accuracy: bootstrap_mean(&units(runs, |r| r.accuracy)?)?,
        run_utilities: runs.iter().map(|s| steady_state(s).map(|st| st.utility)).collect::<Result<_>>()?,
    })
}

pub fn gap(better: (&str, &[MetricSeries]), worse: (&str, &[MetricSeries])) -> Result<GapSummary> {
    let a = units(better.1, |r| r.utility)?;
    let b = units(worse.1, |r| r.utility)?;
    Ok(GapSummary {
        better: better.0.to_string(),
        worse: worse.0.to_string(),
        utility_gap: bootstrap_difference(&a, &b)?,
    })
}

/// Summaries of every group and the gap of each later group over the first.
pub fn compare(groups: &[(String, Vec<MetricSeries>)]) -> Result<Comparison> {
    ensure(groups.len() >= 2, || "compare needs at least two groups".into())?;
    let summaries = groups
        .iter()
        .map(|(name, runs)| summarize(name, runs))
        .collect::<Result<Vec<_>>>()?;
    let (base_name, base) = &groups[0];
    let gaps = groups[1..]
        .iter()
        .map(|(name, runs)| gap((name, runs), (base_name, base)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        groups: summaries,
        gaps,
    })
}

pub fn format_comparison(c: &Comparison) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<24} {:>4} {:>28} {:>10} {:>10} {:>9}", "group", "runs", "utility [95% CI]", "permitted", "valid", "accuracy");
    for g in &c.groups {
        let _ = writeln!(
            out,
            "{:<24} {:>4} {:>9.3} [{:>8.3}, {:>8.3}] {:>10.3} {:>10.3} {:>9.4}",
            g.name, g.runs, g.utility.mean, g.utility.low, g.utility.high, g.n_permitted.mean, g.n_valid.mean, g.accuracy.mean
        );
    }
    for d in &c.gaps {
        let _ = writeln!(
            out,
            "{} - {}: {:.3} [{:.3}, {:.3}]",
            d.better, d.worse, d.utility_gap.mean, d.utility_gap.low, d.utility_gap.high
        );
    }
    out
}

/// Mean accuracy at each fixed single-class load in `grid`, one point per
/// replicate seed, fitted into a non-increasing concave [`LoadCurve`].
pub fn estimate_load_curve(scenario: &Scenario, grid: &[f64], replicates: usize) -> Result<LoadCurve> {
    ensure(scenario.network.n_classes() == 1, || "load curves are single-class".into())?;
    ensure(!grid.is_empty() && replicates >= 1, || "empty grid or no replicates".into())?;
    let jobs: Vec<(f64, usize)> = grid.iter().flat_map(|&p| (0..replicates).map(move |r| (p, r))).collect();
    let samples = jobs
        .par_iter()
        .map(|&(p, r)| {
            let s = Scenario {
                agent: AgentSpec::Fixed { p: vec![p] },
                seed: replicate_seed(scenario.seed, r),
                ..scenario.clone()
            };
            let series = run(&s)?;
            let n = series.records.len().max(1) as f64;
            Ok((p, series.records.iter().map(|r| r.accuracy).sum::<f64>() / n))
        })
        .collect::<Result<Vec<_>>>()?;
    LoadCurve::fit(&samples)
}

/// Desk-scale cell: N=64, M=32, K=16, two equal classes with priority
/// scores `r`, 20 dB SNR, a sticky two-level load and backoff of up to 5
/// slots.
pub fn desk_network(r: [f64; 2]) -> NetworkConfig {
    NetworkConfig {
        n_users: 64,
        n_antennas: 32,
        n_subcarriers: 16,
        noise_variance: crate::env::DEFAULT_NOISE_VARIANCE,
        classes: r
            .iter()
            .map(|&score| ClassConfig {
                n_members: 32,
                priority_score: score,
                activation_prob: 0.6,
            })
            .collect(),
        backoff_max: 5,
        load: LoadModulation {
            levels: vec![0.25, 1.0],
            switch_prob: 0.02,
        },
        class_count: ClassCount::Requests,
    }
}

/// Recovery tuned for the desk cell: stage step 2, support capped at M/2 and
/// a residual floor 1.5x the expected noise energy.
pub fn desk_recovery(network: &NetworkConfig) -> RecoveryConfig {
    RecoveryConfig {
        step_size: 2,
        max_support: Some((network.n_antennas / 2).max(1)),
        noise_floor: RecoveryConfig::noise_floor_for(network.n_antennas, network.noise_variance, 1.5),
        ..RecoveryConfig::default()
    }
}

pub fn mmtc_utility() -> UtilityParams {
    UtilityParams { rho1: 120.0, rho2: 0.0 }
}

pub fn urllc_utility() -> UtilityParams {
    UtilityParams { rho1: 120.0, rho2: 100.0 }
}

/// Desk mMTC scenario for `agent`.
pub fn desk_mmtc(agent: AgentSpec, slots: usize, seed: u64) -> Scenario {
    let network = desk_network([1.0, 1.0]);
    Scenario {
        name: "desk-mmtc".into(),
        recovery: desk_recovery(&network),
        network,
        utility: mmtc_utility(),
        agent,
        episodes: 1,
        slots_per_episode: slots,
        seed,
    }
}

/// Same cell and agent as [`desk_mmtc`]; only the utility weights differ.
pub fn desk_urllc(agent: AgentSpec, slots: usize, seed: u64) -> Scenario {
    Scenario {
        name: "desk-urllc".into(),
        utility: urllc_utility(),
        ..desk_mmtc(agent, slots, seed)
    }
}

/// Priority study with `r_2 / r_1 = ratio`.
pub fn desk_priority(ratio: f64, agent: AgentSpec, slots: usize, seed: u64) -> Scenario {
    let network = desk_network([1.0, ratio]);
    Scenario {
        name: format!("desk-priority-{ratio}"),
        network,
        ..desk_mmtc(agent, slots, seed)
    }
}

/// Q-learning settings used by the desk presets.
pub fn desk_rl() -> RlConfig {
    RlConfig::default()
}

/// TD3 settings used by the desk presets.
pub fn desk_td3() -> Td3Config {
    Td3Config {
        gamma: 0.0,
        actor_lr: 1e-3,
        critic_lr: 1e-3,
        reward_scale: 0.1,
        explore_sigma_final: Some(0.02),
        explore_decay_slots: 2000,
        channel_view: ChannelView::All,
        ..Td3Config::default()
    }
}

fn default_one() -> f64 {
    1.0
}

/// Input of the `bound` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRequest {
    pub n_users: usize,
    pub n_antennas: usize,
    pub phi: f64,
    #[serde(default = "default_one")]
    pub theta_sep: f64,
    #[serde(default = "default_one")]
    pub a1: f64,
    #[serde(default = "default_one")]
    pub a2: f64,
    /// Sparsity levels at which to evaluate the accuracy bound.
    #[serde(default)]
    pub sparsity: Vec<f64>,
    /// `(load, accuracy)` samples; when present a curve is fitted and the
    /// single-class optimum reported.
    #[serde(default)]
    pub curve: Vec<(f64, f64)>,
    #[serde(default = "default_one")]
    pub r: f64,
    #[serde(default)]
    pub rho2: f64,
    /// Users in the single class of the optimum; defaults to `n_users`.
    #[serde(default)]
    pub n_class: Option<usize>,
    #[serde(default)]
    pub complexity: Option<ComplexityRequest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRequest {
    pub tau: u64,
    pub xi: u64,
    pub x1: usize,
    pub x2: usize,
    pub n_classes: usize,
    #[serde(default)]
    pub conv: Option<ConvShape>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvShape {
    pub c_in: usize,
    pub w_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub epsilon_n: f64,
    pub sparsity: Option<crate::bounds::SparsityReport>,
    /// Set when no maximum sparsity exists for the parameters.
    pub infeasible: Option<String>,
    pub theorem1: Vec<(f64, f64)>,
    pub optimum: Option<crate::bounds::Optimum>,
    pub curve: Option<LoadCurve>,
    pub rl_complexity: Option<crate::bounds::ComplexityReport>,
    pub drl_complexity: Option<f64>,
}

pub fn bound_report(req: &BoundRequest) -> Result<BoundReport> {
    use crate::bounds::*;
    let params = BoundParams {
        theta_sep: req.theta_sep,
        a1: req.a1,
        a2: req.a2,
        ..BoundParams::new(req.n_users, req.n_antennas, req.phi)
    };
    params.validate()?;
    let (sparsity, infeasible) = match max_sparsity(&params) {
        Ok(r) => (Some(r), None),
        Err(Error::Infeasible(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    let (curve, optimum) = if req.curve.is_empty() {
        (None, None)
    } else {
        let c = LoadCurve::fit(&req.curve)?;
        let opt = theorem2_optimum(&c, req.r, req.n_class.unwrap_or(req.n_users), req.rho2)?;
        (Some(c), Some(opt))
    };
    let (rl, drl) = match &req.complexity {
        None => (None, None),
        Some(c) => (
            Some(rl_complexity_report(c.tau, c.xi, c.x1, c.x2, c.n_classes)),
            c.conv
                .as_ref()
                .map(|v| drl_complexity(c.tau, c.xi, v.c_in, v.w_in, v.c_out, v.kernel, v.stride)),
        ),
    };
    Ok(BoundReport {
        epsilon_n: epsilon_n(&params),
        sparsity,
        infeasible,
        theorem1: req.sparsity.iter().map(|&k| (k, theorem1_bound(k, &params))).collect(),
        optimum,
        curve,
        rl_complexity: rl,
        drl_complexity: drl,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(agent: AgentSpec, slots: usize) -> Scenario {
        let network = NetworkConfig {
            noise_variance: 0.01,
            ..NetworkConfig::single_class(16, 8, 2, 0.2)
        };
        Scenario {
            name: "tiny".into(),
            recovery: RecoveryConfig {
                noise_floor: RecoveryConfig::noise_floor_for(8, 0.01, 1.5),
                ..RecoveryConfig::default()
            },
            network,
            utility: mmtc_utility(),
            agent,
            episodes: 2,
            slots_per_episode: slots,
            seed: 3,
        }
    }

    #[test]
    fn zero_slots_give_empty_series() {
        let s = tiny(AgentSpec::Fixed { p: vec![1.0] }, 0);
        let out = run(&s).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(to_csv(&out), format!("{}\n", csv_header(1)));
        assert!(steady_state(&out).is_err());
    }

    #[test]
    fn record_count_is_episodes_times_slots() {
        for agent in [AgentSpec::Fixed { p: vec![0.5] }, AgentSpec::Rl(RlConfig::default())] {
            let out = run(&tiny(agent, 7)).unwrap();
            assert_eq!(out.records.len(), 14);
            assert!(out.records.iter().enumerate().all(|(i, r)| r.slot == i));
        }
    }

    #[test]
    fn invalid_scenario_is_rejected_up_front() {
        let s = tiny(AgentSpec::Fixed { p: vec![0.5, 0.5] }, 5);
        assert!(matches!(run(&s), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn steady_window_is_last_quarter() {
        assert_eq!(steady_window(8), 2);
        assert_eq!(steady_window(9), 3);
        let mut s = run(&tiny(AgentSpec::Fixed { p: vec![0.5] }, 4)).unwrap();
        for (i, r) in s.records.iter_mut().enumerate() {
            r.utility = i as f64;
        }
        assert_eq!(steady_state(&s).unwrap().utility, 6.5);
    }

    #[test]
    fn singleton_sweep_returns_that_point() {
        let s = tiny(AgentSpec::Fixed { p: vec![1.0] }, 5);
        let grid = vec![AcbVector::uniform(1, 0.3)];
        let r = sweep_fixed_baseline(&s, &grid, 1).unwrap();
        assert_eq!(r.best, grid[0]);
    }

    #[test]
    fn grid_specs() {
        assert_eq!(parse_grid("0:1:3", 1).unwrap().len(), 3);
        let g = parse_grid("0.2,0.6", 2).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g[1].factors, vec![0.6, 0.2]);
        assert!(parse_grid("x", 1).is_err());
        assert!(parse_grid("0.5,1.5", 1).is_err());
    }

    #[test]
    fn bootstrap_is_reproducible_and_brackets_mean() {
        let v = [1.0, 2.0, 3.0, 4.0, 10.0];
        let a = bootstrap_mean(&v).unwrap();
        assert_eq!(a, bootstrap_mean(&v).unwrap());
        assert!(a.low <= a.mean && a.mean <= a.high);
        let d = bootstrap_difference(&v, &v).unwrap();
        assert_eq!((d.mean, d.low, d.high), (0.0, 0.0, 0.0));
    }

    #[test]
    fn bound_report_from_minimal_request() {
        let req: BoundRequest = serde_json::from_str(
            r#"{"n_users": 256, "n_antennas": 128, "phi": 2.5, "sparsity": [4],
                "curve": [[0, 1], [1, 0]], "n_class": 1,
                "complexity": {"tau": 100, "xi": 200, "x1": 5, "x2": 5, "n_classes": 1}}"#,
        )
        .unwrap();
        let rep = bound_report(&req).unwrap();
        assert!(rep.sparsity.is_some() && rep.infeasible.is_none());
        assert!((rep.theorem1[0].1 - (1.0 - (-4f64).exp())).abs() < 1e-12);
        assert!((rep.optimum.unwrap().p_star - 0.5).abs() < 1e-9);
        assert_eq!(rep.rl_complexity.unwrap().slots, 20000);
    }

    #[test]
    fn urllc_differs_from_mmtc_only_in_utility() {
        let a = desk_mmtc(AgentSpec::Rl(desk_rl()), 10, 1);
        let b = desk_urllc(AgentSpec::Rl(desk_rl()), 10, 1);
        assert_eq!(a.network, b.network);
        assert_eq!(a.recovery, b.recovery);
        assert_eq!(a.agent, b.agent);
        assert_ne!(a.utility, b.utility);
    }
}
