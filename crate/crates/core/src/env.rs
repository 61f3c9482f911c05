//! Traffic, channels, barring and the MSG1/MSG2/MSG3 accounting of one slot.
//!
//! Users are laid out class by class: class 0 owns indices `0..N_0`, class 1
//! the next `N_1`, and so on.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::linalg::{complex_gaussian, CMatrix, CVector, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassConfig {
    pub n_members: usize,
    pub priority_score: f64,
    pub activation_prob: f64,
}

/// Sticky Markov modulation of the arrival rate. Each slot the load level
/// jumps to a uniformly chosen other level with probability `switch_prob`;
/// activation probabilities are multiplied by the current level (capped at 1).
/// The default single level 1.0 gives stationary i.i.d. traffic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadModulation {
    pub levels: Vec<f64>,
    pub switch_prob: f64,
}

impl Default for LoadModulation {
    fn default() -> Self {
        Self {
            levels: vec![1.0],
            switch_prob: 0.0,
        }
    }
}

fn default_backoff() -> usize {
    5
}

fn default_noise() -> f64 {
    DEFAULT_NOISE_VARIANCE
}

/// 20 dB per-antenna SNR for one active unit-variance user.
pub const DEFAULT_NOISE_VARIANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub n_users: usize,
    pub n_antennas: usize,
    pub n_subcarriers: usize,
    #[serde(default = "default_noise")]
    pub noise_variance: f64,
    pub classes: Vec<ClassConfig>,
    /// Unserved users (barred or unacknowledged) retry after a uniform backoff
    /// of 1..=backoff_max slots.
    /// Zero disables retries: unserved requests are dropped.
    #[serde(default = "default_backoff")]
    pub backoff_max: usize,
    #[serde(default)]
    pub load: LoadModulation,
    #[serde(default)]
    pub class_count: ClassCount,
}

/// What `N_l` counts in the permitted-load and utility formulas.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassCount {
    /// Users of class `l` requesting access in the slot (before barring).
    #[default]
    Requests,
    /// The static class size.
    Members,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.n_users >= 1, || "n_users must be >= 1".into())?;
        ensure(self.n_antennas >= 1, || "n_antennas must be >= 1".into())?;
        ensure(self.n_subcarriers >= 1, || "n_subcarriers must be >= 1".into())?;
        ensure(self.noise_variance >= 0.0 && self.noise_variance.is_finite(), || {
            format!("noise_variance {} must be finite and >= 0", self.noise_variance)
        })?;
        ensure(!self.classes.is_empty(), || "at least one class required".into())?;
        let total: usize = self.classes.iter().map(|c| c.n_members).sum();
        ensure(total == self.n_users, || {
            format!("class sizes sum to {total}, expected n_users = {}", self.n_users)
        })?;
        for (l, c) in self.classes.iter().enumerate() {
            ensure((0.0..=1.0).contains(&c.activation_prob), || {
                format!("class {l}: activation_prob {} outside [0,1]", c.activation_prob)
            })?;
            ensure(c.priority_score > 0.0 && c.priority_score.is_finite(), || {
                format!("class {l}: priority_score must be > 0")
            })?;
        }
        ensure(!self.load.levels.is_empty(), || "load.levels must be non-empty".into())?;
        ensure(self.load.levels.iter().all(|&x| x >= 0.0 && x.is_finite()), || {
            "load levels must be finite and >= 0".into()
        })?;
        ensure((0.0..=1.0).contains(&self.load.switch_prob), || {
            "load.switch_prob outside [0,1]".into()
        })?;
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Class index of every user.
    pub fn class_map(&self) -> Vec<usize> {
        self.classes
            .iter()
            .enumerate()
            .flat_map(|(l, c)| std::iter::repeat_n(l, c.n_members))
            .collect()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.n_members).collect()
    }

    /// `N_l` for every class given the slot's requesting users.
    pub fn class_counts(&self, requests: &ActivityVector) -> Vec<f64> {
        match self.class_count {
            ClassCount::Members => self.classes.iter().map(|c| c.n_members as f64).collect(),
            ClassCount::Requests => {
                let mut counts = vec![0.0; self.n_classes()];
                for (&on, l) in requests.indicators.iter().zip(self.class_map()) {
                    if on {
                        counts[l] += 1.0;
                    }
                }
                counts
            }
        }
    }

    /// A single-class helper used throughout tests.
    pub fn single_class(n: usize, m: usize, k: usize, activation_prob: f64) -> Self {
        Self {
            n_users: n,
            n_antennas: m,
            n_subcarriers: k,
            noise_variance: 0.0,
            classes: vec![ClassConfig {
                n_members: n,
                priority_score: 1.0,
                activation_prob,
            }],
            backoff_max: 0,
            load: LoadModulation::default(),
            class_count: ClassCount::Requests,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityVector {
    pub indicators: Vec<bool>,
}

impl ActivityVector {
    pub fn zeros(n: usize) -> Self {
        Self {
            indicators: vec![false; n],
        }
    }

    pub fn from_support(n: usize, support: &[usize]) -> Self {
        let mut v = Self::zeros(n);
        for &i in support {
            v.indicators[i] = true;
        }
        v
    }

    pub fn len(&self) -> usize {
        self.indicators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indicators.is_empty()
    }

    pub fn count(&self) -> usize {
        self.indicators.iter().filter(|&&b| b).count()
    }

    pub fn support(&self) -> Vec<usize> {
        self.indicators
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn is_subset_of(&self, other: &ActivityVector) -> bool {
        self.indicators
            .iter()
            .zip(&other.indicators)
            .all(|(&a, &b)| !a || b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcbVector {
    pub factors: Vec<f64>,
}

impl AcbVector {
    pub fn new(factors: Vec<f64>) -> Result<Self> {
        for (l, &p) in factors.iter().enumerate() {
            ensure((0.0..=1.0).contains(&p), || format!("ACB factor {l} = {p} outside [0,1]"))?;
        }
        Ok(Self { factors })
    }

    /// Clamps each entry into [0,1]; NaN maps to 0.
    pub fn clamped(factors: Vec<f64>) -> Self {
        Self {
            factors: factors
                .into_iter()
                .map(|p| if p.is_nan() { 0.0 } else { p.clamp(0.0, 1.0) })
                .collect(),
        }
    }

    pub fn uniform(n_classes: usize, p: f64) -> Self {
        Self {
            factors: vec![p; n_classes],
        }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

/// Per-subcarrier channel matrices `H_k` (M x N each) and unit-modulus preambles.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    pub h: Vec<CMatrix>,
    pub preambles: Vec<C64>,
}

impl ChannelTensor {
    pub fn n_subcarriers(&self) -> usize {
        self.h.len()
    }

    /// `H_k Λ`: column n scaled by its preamble.
    pub fn normalized(&self, k: usize) -> CMatrix {
        let mut m = self.h[k].clone();
        for (n, mut col) in m.column_iter_mut().enumerate() {
            col *= self.preambles[n];
        }
        m
    }

    pub fn normalized_all(&self) -> Vec<CMatrix> {
        (0..self.h.len()).map(|k| self.normalized(k)).collect()
    }

    /// Consumes the tensor, scaling the gains in place into `H_k Λ`.
    pub fn into_normalized(self) -> Vec<CMatrix> {
        let preambles = self.preambles;
        self.h
            .into_iter()
            .map(|mut m| {
                for (n, mut col) in m.column_iter_mut().enumerate() {
                    col *= preambles[n];
                }
                m
            })
            .collect()
    }

    /// Per-user energy averaged over subcarriers and antennas:
    /// `(1/KM) sum_k ||h_{k,.,n}||^2`.
    pub fn user_energies(&self) -> Vec<f64> {
        let Some(first) = self.h.first() else {
            return Vec::new();
        };
        let (m, n) = first.shape();
        let scale = 1.0 / (self.h.len() * m) as f64;
        (0..n)
            .map(|j| {
                self.h
                    .iter()
                    .map(|hk| hk.column(j).norm_squared())
                    .sum::<f64>()
                    * scale
            })
            .collect()
    }
}

/// K matrices of i.i.d. unit-variance complex Gaussian entries.
pub fn generate_gains<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> Vec<CMatrix> {
    (0..cfg.n_subcarriers)
        .map(|_| DMatrix::from_fn(cfg.n_antennas, cfg.n_users, |_, _| complex_gaussian(rng, 1.0)))
        .collect()
}

/// Unit-modulus preambles with uniform random phase.
pub fn generate_preambles<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    (0..n)
        .map(|_| C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect()
}

pub fn generate_channel<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> ChannelTensor {
    let h = generate_gains(cfg, rng);
    let preambles = generate_preambles(cfg.n_users, rng);
    ChannelTensor { h, preambles }
}

/// Independent Bernoulli activation with per-class probabilities scaled by `level`.
pub fn draw_activity_scaled<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    level: f64,
    rng: &mut R,
) -> ActivityVector {
    let mut indicators = Vec::with_capacity(cfg.n_users);
    for class in &cfg.classes {
        let prob = (class.activation_prob * level).clamp(0.0, 1.0);
        for _ in 0..class.n_members {
            let u: f64 = rng.random();
            indicators.push(u < prob);
        }
    }
    ActivityVector { indicators }
}

pub fn draw_activity<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> ActivityVector {
    draw_activity_scaled(cfg, 1.0, rng)
}

/// Barring check with caller-supplied uniform draws `q` (one per user).
/// User n of class l passes iff active and `q_n <= p_l`.
pub fn acb_check_with_draws(
    activity: &ActivityVector,
    p: &AcbVector,
    class_map: &[usize],
    q: &[f64],
) -> ActivityVector {
    let indicators = activity
        .indicators
        .iter()
        .zip(class_map)
        .zip(q)
        .map(|((&active, &l), &qn)| active && qn <= p.factors[l])
        .collect();
    ActivityVector { indicators }
}

/// Draws one uniform per user (active or not, so the stream position only
/// depends on N) and applies the barring check.
pub fn acb_check<R: Rng + ?Sized>(
    activity: &ActivityVector,
    p: &AcbVector,
    cfg: &NetworkConfig,
    rng: &mut R,
) -> Result<ActivityVector> {
    if activity.len() != cfg.n_users || p.len() != cfg.n_classes() {
        return Err(Error::Dimension(format!(
            "activity length {} / ACB length {} vs N={} L={}",
            activity.len(),
            p.len(),
            cfg.n_users,
            cfg.n_classes()
        )));
    }
    let q: Vec<f64> = (0..cfg.n_users).map(|_| rng.random::<f64>()).collect();
    Ok(acb_check_with_draws(activity, p, &cfg.class_map(), &q))
}

/// Received signal, one length-M vector per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub y: Vec<CVector>,
}

/// `y_k = H_k Λ α + z_k` with `z_k ~ CN(0, noise_variance I)` independently per subcarrier.
pub fn synthesize_measurement<R: Rng + ?Sized>(
    ch: &ChannelTensor,
    passed: &ActivityVector,
    cfg: &NetworkConfig,
    rng: &mut R,
) -> Result<Measurement> {
    if ch.h.len() != cfg.n_subcarriers || passed.len() != cfg.n_users {
        return Err(Error::Dimension("channel / activity shape mismatch".into()));
    }
    let support = passed.support();
    let y = ch
        .h
        .iter()
        .map(|hk| {
            let mut yk = CVector::zeros(cfg.n_antennas);
            for &n in &support {
                yk.axpy(ch.preambles[n], &hk.column(n), C64::new(1.0, 0.0));
            }
            if cfg.noise_variance > 0.0 {
                for z in yk.iter_mut() {
                    *z += complex_gaussian(rng, cfg.noise_variance);
                }
            }
            yk
        })
        .collect();
    Ok(Measurement { y })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotOutcome {
    /// Expected permitted count `sum_l p_l N_l`.
    pub n_permitted: f64,
    /// The `N_l` used for `n_permitted`.
    pub class_counts: Vec<f64>,
    pub n_valid: usize,
    pub accuracy: f64,
    pub detected: Vec<usize>,
    pub passed: Vec<usize>,
    /// Set when `n_permitted == 0` and accuracy was defined as 0.
    pub degenerate: bool,
}

impl SlotOutcome {
    /// Realized pass count, kept for diagnostics.
    pub fn n_passed(&self) -> usize {
        self.passed.len()
    }
}

/// MSG2/MSG3 accounting: only detected users that really passed return an ACK.
pub fn handshake(
    detected: &[usize],
    passed: &ActivityVector,
    p: &AcbVector,
    class_counts: &[f64],
    cfg: &NetworkConfig,
) -> Result<SlotOutcome> {
    if let Some(&bad) = detected.iter().find(|&&n| n >= cfg.n_users) {
        return Err(Error::Dimension(format!("detected user {bad} >= N = {}", cfg.n_users)));
    }
    if p.len() != cfg.n_classes() || class_counts.len() != cfg.n_classes() {
        return Err(Error::Dimension("ACB vector or class counts differ from class count".into()));
    }
    let mut detected: Vec<usize> = detected.to_vec();
    detected.sort_unstable();
    detected.dedup();
    let n_valid = detected.iter().filter(|&&n| passed.indicators[n]).count();
    let n_permitted: f64 = p.factors.iter().zip(class_counts).map(|(pl, n)| pl * n).sum();
    let degenerate = n_permitted <= 0.0;
    let accuracy = if degenerate {
        0.0
    } else {
        (n_valid as f64 / n_permitted).clamp(0.0, 1.0)
    };
    Ok(SlotOutcome {
        n_permitted,
        class_counts: class_counts.to_vec(),
        n_valid,
        accuracy,
        detected,
        passed: passed.support(),
        degenerate,
    })
}

/// Backoff timers and the load-level chain carried between slots.
#[derive(Debug, Clone)]
pub struct Traffic {
    timers: Vec<usize>,
    level_index: usize,
}

impl Traffic {
    pub fn new(cfg: &NetworkConfig) -> Self {
        Self {
            timers: vec![0; cfg.n_users],
            level_index: 0,
        }
    }

    pub fn level(&self, cfg: &NetworkConfig) -> f64 {
        cfg.load.levels[self.level_index]
    }

    pub fn level_index(&self) -> usize {
        self.level_index
    }

    pub fn backlog(&self) -> usize {
        self.timers.iter().filter(|&&t| t > 0).count()
    }

    /// Advances the load chain and returns this slot's requesting users: fresh
    /// Bernoulli arrivals among users not backing off, plus users whose backoff
    /// just expired.
    pub fn next_activity<R: Rng + ?Sized, S: Rng + ?Sized>(
        &mut self,
        cfg: &NetworkConfig,
        traffic_rng: &mut R,
        load_rng: &mut S,
    ) -> ActivityVector {
        let n_levels = cfg.load.levels.len();
        if n_levels > 1 {
            let u: f64 = load_rng.random();
            if u < cfg.load.switch_prob {
                let shift = load_rng.random_range(1..n_levels);
                self.level_index = (self.level_index + shift) % n_levels;
            }
        }
        let fresh = draw_activity_scaled(cfg, self.level(cfg), traffic_rng);
        let indicators = self
            .timers
            .iter_mut()
            .zip(fresh.indicators)
            .map(|(t, f)| {
                if *t > 0 {
                    *t -= 1;
                    *t == 0
                } else {
                    f
                }
            })
            .collect();
        ActivityVector { indicators }
    }

    /// Schedules retries for users that requested access but were not served:
    /// barred by ACB, or passed without receiving an acknowledgement.
    pub fn back_off<R: Rng + ?Sized>(
        &mut self,
        cfg: &NetworkConfig,
        active: &ActivityVector,
        served: &ActivityVector,
        rng: &mut R,
    ) {
        if cfg.backoff_max == 0 {
            return;
        }
        for (n, (&a, &s)) in active.indicators.iter().zip(&served.indicators).enumerate() {
            if a && !s {
                self.timers[n] = rng.random_range(1..=cfg.backoff_max);
            }
        }
    }
}
