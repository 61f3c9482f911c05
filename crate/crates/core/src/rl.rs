//! Tabular Q-learning over a quantized barring grid, plus the slot utility
//! shared by every controller.
//!
//! Actions are vectors of per-class factors `p_l = i_l / X₁` with
//! `i_l ∈ 1..=X₁`, indexed in mixed radix (class 0 is the least significant
//! digit). States pair the previous action with the previous accuracy,
//! quantized into `X₂` uniform bins.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::{AcbVector, ClassConfig};
use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityParams {
    pub rho1: f64,
    pub rho2: f64,
}

impl UtilityParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.rho1 >= 0.0 && self.rho1.is_finite(), || "rho1 must be >= 0".into())?;
        ensure(self.rho2 >= 0.0 && self.rho2.is_finite(), || "rho2 must be >= 0".into())
    }
}

/// `u = c·Σ p_l r_l N_l − ρ₁·var(p) − ρ₂·(1 − c)` with the population variance
/// `var(p) = (1/L)·Σ (p_l − p̄)²`. `counts` holds the `N_l` of the slot.
pub fn utility(accuracy: f64, p: &AcbVector, classes: &[ClassConfig], counts: &[f64], params: &UtilityParams) -> f64 {
    let gain: f64 = p
        .factors
        .iter()
        .zip(classes)
        .zip(counts)
        .map(|((pl, c), n)| pl * c.priority_score * n)
        .sum();
    accuracy * gain - params.rho1 * variance(&p.factors) - params.rho2 * (1.0 - accuracy)
}

pub fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RlConfig {
    pub x1: usize,
    pub x2: usize,
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon_initial: f64,
    pub epsilon_final: f64,
    /// Slots over which ε decays linearly; afterwards it stays at `epsilon_final`.
    pub epsilon_decay_slots: usize,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            x1: 5,
            x2: 5,
            learning_rate: 0.98,
            discount: 0.3,
            epsilon_initial: 0.9,
            epsilon_final: 0.1,
            epsilon_decay_slots: 2000,
        }
    }
}

/// Largest table the agent will allocate (states × actions).
pub const MAX_TABLE_ENTRIES: usize = 1 << 26;

impl RlConfig {
    pub fn validate(&self, n_classes: usize) -> Result<()> {
        ensure(self.x1 >= 2, || format!("x1 = {} must be >= 2", self.x1))?;
        ensure(self.x2 >= 1, || format!("x2 = {} must be >= 1", self.x2))?;
        ensure(self.learning_rate > 0.0 && self.learning_rate <= 1.0, || {
            format!("learning_rate {} outside (0,1]", self.learning_rate)
        })?;
        ensure((0.0..1.0).contains(&self.discount), || {
            format!("discount {} outside [0,1)", self.discount)
        })?;
        ensure((0.0..=1.0).contains(&self.epsilon_initial) && (0.0..=1.0).contains(&self.epsilon_final), || {
            "epsilon endpoints must lie in [0,1]".into()
        })?;
        ensure(self.epsilon_final <= self.epsilon_initial, || {
            "epsilon_final must not exceed epsilon_initial".into()
        })?;
        ensure(n_classes >= 1, || "at least one class required".into())?;
        let entries = self
            .n_actions(n_classes)
            .and_then(|a| a.checked_mul(a)?.checked_mul(self.x2));
        ensure(entries.is_some_and(|e| e <= MAX_TABLE_ENTRIES), || {
            format!("Q-table for x1={}, x2={}, L={n_classes} is too large", self.x1, self.x2)
        })
    }

    pub fn n_actions(&self, n_classes: usize) -> Option<usize> {
        u32::try_from(n_classes).ok().and_then(|l| self.x1.checked_pow(l))
    }

    /// ε at a given slot under the linear schedule.
    pub fn epsilon_at(&self, slot: usize) -> f64 {
        if self.epsilon_decay_slots == 0 || slot >= self.epsilon_decay_slots {
            return self.epsilon_final;
        }
        let frac = slot as f64 / self.epsilon_decay_slots as f64;
        self.epsilon_initial + (self.epsilon_final - self.epsilon_initial) * frac
    }

    /// The grid `{i/X₁ : 1 ≤ i ≤ X₁}`.
    pub fn grid(&self) -> Vec<f64> {
        (1..=self.x1).map(|i| i as f64 / self.x1 as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscreteState {
    /// Grid level `i_l ∈ 1..=X₁` of each class factor.
    pub quantized_action: Vec<usize>,
    pub quantized_accuracy: usize,
}

/// Nearest grid level of a factor (ties round up).
fn snap(p: f64, x1: usize) -> usize {
    let level = (p * x1 as f64).round();
    (level.max(1.0) as usize).min(x1)
}

pub fn quantize_state(p: &AcbVector, accuracy: f64, cfg: &RlConfig) -> DiscreteState {
    let acc = if accuracy.is_nan() { 0.0 } else { accuracy.clamp(0.0, 1.0) };
    let bin = ((acc * cfg.x2 as f64).floor() as usize).min(cfg.x2 - 1);
    DiscreteState {
        quantized_action: p.factors.iter().map(|&f| snap(f, cfg.x1)).collect(),
        quantized_accuracy: bin,
    }
}

/// Mixed-radix index of a level vector (levels are 1-based).
pub fn action_index(levels: &[usize], x1: usize) -> usize {
    levels.iter().rev().fold(0, |acc, &i| acc * x1 + (i - 1))
}

pub fn action_levels(mut index: usize, x1: usize, n_classes: usize) -> Vec<usize> {
    (0..n_classes)
        .map(|_| {
            let d = index % x1;
            index /= x1;
            d + 1
        })
        .collect()
}

pub fn action_vector(index: usize, x1: usize, n_classes: usize) -> AcbVector {
    AcbVector {
        factors: action_levels(index, x1, n_classes)
            .into_iter()
            .map(|i| i as f64 / x1 as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub x1: usize,
    pub x2: usize,
    pub n_classes: usize,
    pub n_states: usize,
    pub n_actions: usize,
    /// Row-major `n_states × n_actions`.
    pub values: Vec<f64>,
}

impl QTable {
    pub fn new(cfg: &RlConfig, n_classes: usize) -> Result<Self> {
        cfg.validate(n_classes)?;
        let n_actions = cfg.n_actions(n_classes).expect("validated");
        let n_states = n_actions * cfg.x2;
        Ok(Self {
            x1: cfg.x1,
            x2: cfg.x2,
            n_classes,
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
        })
    }

    pub fn state_index(&self, s: &DiscreteState) -> Result<usize> {
        if s.quantized_action.len() != self.n_classes
            || s.quantized_action.iter().any(|&i| i == 0 || i > self.x1)
            || s.quantized_accuracy >= self.x2
        {
            return Err(Error::Dimension(format!("state {s:?} outside the table")));
        }
        Ok(action_index(&s.quantized_action, self.x1) * self.x2 + s.quantized_accuracy)
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.n_actions..(state + 1) * self.n_actions]
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// All actions attaining the row maximum.
    pub fn argmax_set(&self, state: usize) -> Vec<usize> {
        let best = self.max_value(state);
        self.row(state)
            .iter()
            .enumerate()
            .filter_map(|(a, &v)| (v == best).then_some(a))
            .collect()
    }
}

/// ε-greedy choice. With probability `1 − ε` a greedy action (ties broken
/// uniformly at random), otherwise a uniform draw from the whole action space.
pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    s: &DiscreteState,
    epsilon: f64,
    rng: &mut R,
) -> Result<(usize, AcbVector)> {
    let state = q.state_index(s)?;
    let explore = epsilon > 0.0 && rng.random::<f64>() < epsilon;
    let action = if explore {
        rng.random_range(0..q.n_actions)
    } else {
        let best = q.argmax_set(state);
        if best.len() == 1 {
            best[0]
        } else {
            best[rng.random_range(0..best.len())]
        }
    };
    Ok((action, action_vector(action, q.x1, q.n_classes)))
}

/// `Q(s,a) ← (1−ϖ)·Q(s,a) + ϖ·(u + β·max_a' Q(s',a'))`.
pub fn update_q(
    q: &mut QTable,
    s: &DiscreteState,
    action: usize,
    u: f64,
    s_next: &DiscreteState,
    cfg: &RlConfig,
) -> Result<()> {
    let state = q.state_index(s)?;
    let next = q.state_index(s_next)?;
    if action >= q.n_actions {
        return Err(Error::Dimension(format!("action {action} >= {}", q.n_actions)));
    }
    let target = u + cfg.discount * q.max_value(next);
    let cell = &mut q.values[state * q.n_actions + action];
    *cell = (1.0 - cfg.learning_rate) * *cell + cfg.learning_rate * target;
    Ok(())
}

/// Learner state carried across slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QLearningAgent {
    pub config: RlConfig,
    pub table: QTable,
    pub state: DiscreteState,
    pub slot: usize,
}

impl QLearningAgent {
    /// Starts from the top-level action (all factors 1) and the top accuracy bin.
    pub fn new(cfg: RlConfig, n_classes: usize) -> Result<Self> {
        let table = QTable::new(&cfg, n_classes)?;
        let state = DiscreteState {
            quantized_action: vec![cfg.x1; n_classes],
            quantized_accuracy: cfg.x2 - 1,
        };
        Ok(Self {
            config: cfg,
            table,
            state,
            slot: 0,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon_at(self.slot)
    }

    pub fn act<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, AcbVector)> {
        select_action(&self.table, &self.state, self.epsilon(), rng)
    }

    pub fn greedy<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, AcbVector)> {
        select_action(&self.table, &self.state, 0.0, rng)
    }

    /// Applies the Bellman update for the action just taken and advances the state.
    pub fn observe(&mut self, action: usize, p: &AcbVector, accuracy: f64, u: f64) -> Result<()> {
        let next = quantize_state(p, accuracy, &self.config);
        update_q(&mut self.table, &self.state, action, u, &next, &self.config)?;
        self.state = next;
        self.slot += 1;
        Ok(())
    }
}

/// SHA-256 of the canonical JSON of any serializable config.
pub fn fingerprint<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QArtifact {
    pub format: String,
    pub fingerprint: String,
    pub agent: QLearningAgent,
}

pub const Q_ARTIFACT_FORMAT: &str = "racsim-qtable-v1";

impl QArtifact {
    pub fn new(agent: &QLearningAgent) -> Self {
        Self {
            format: Q_ARTIFACT_FORMAT.into(),
            fingerprint: fingerprint(&agent.config),
            agent: agent.clone(),
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Loads an artifact; when `expected` is given the config fingerprint must match.
    pub fn load(path: &std::path::Path, expected: Option<&RlConfig>) -> Result<QLearningAgent> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let art: QArtifact = serde_json::from_str(&text)?;
        if art.format != Q_ARTIFACT_FORMAT {
            return Err(Error::Artifact(format!("unknown format {}", art.format)));
        }
        if art.fingerprint != fingerprint(&art.agent.config) {
            return Err(Error::Artifact("fingerprint does not match stored config".into()));
        }
        if let Some(cfg) = expected {
            if fingerprint(cfg) != art.fingerprint {
                return Err(Error::Artifact("artifact was trained with a different config".into()));
            }
        }
        let t = &art.agent.table;
        if t.values.len() != t.n_states * t.n_actions || t.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Artifact("corrupt Q-table".into()));
        }
        Ok(art.agent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn classes(sizes: &[usize], r: &[f64]) -> Vec<ClassConfig> {
        sizes
            .iter()
            .zip(r)
            .map(|(&n, &r)| ClassConfig {
                n_members: n,
                priority_score: r,
                activation_prob: 0.5,
            })
            .collect()
    }

    #[test]
    fn utility_examples() {
        let c = classes(&[10, 10], &[1.0, 1.0]);
        let n = [10.0, 10.0];
        let zero = UtilityParams { rho1: 0.0, rho2: 0.0 };
        assert_eq!(utility(1.0, &AcbVector::uniform(2, 1.0), &c, &n, &zero), 20.0);
        let err = UtilityParams { rho1: 0.0, rho2: 100.0 };
        assert_eq!(utility(0.0, &AcbVector::uniform(2, 0.3), &c, &n, &err), -100.0);
        let p = AcbVector::new(vec![0.2, 0.8]).unwrap();
        let u = utility(0.9, &p, &c, &n, &UtilityParams { rho1: 120.0, rho2: 100.0 });
        assert!((u + 11.8).abs() < 1e-9);
    }

    #[test]
    fn bellman_example() {
        let cfg = RlConfig {
            x1: 2,
            x2: 1,
            learning_rate: 0.5,
            discount: 0.3,
            ..RlConfig::default()
        };
        let mut q = QTable::new(&cfg, 1).unwrap();
        let s = DiscreteState { quantized_action: vec![1], quantized_accuracy: 0 };
        let s2 = DiscreteState { quantized_action: vec![2], quantized_accuracy: 0 };
        let si = q.state_index(&s).unwrap();
        let s2i = q.state_index(&s2).unwrap();
        q.values[si * 2] = 2.0;
        q.values[s2i * 2 + 1] = 4.0;
        update_q(&mut q, &s, 0, 1.0, &s2, &cfg).unwrap();
        assert!((q.get(si, 0) - 2.1).abs() < 1e-12);
    }

    #[test]
    fn quantization_bins() {
        let cfg = RlConfig::default();
        let p = AcbVector::uniform(1, 0.6);
        assert_eq!(quantize_state(&p, 1.0, &cfg).quantized_accuracy, 4);
        assert_eq!(quantize_state(&p, 0.0, &cfg).quantized_accuracy, 0);
        assert_eq!(quantize_state(&p, 0.59, &cfg).quantized_accuracy, 2);
        assert_eq!(quantize_state(&p, 0.59, &cfg).quantized_action, vec![3]);
        assert_eq!(quantize_state(&AcbVector::uniform(1, 0.0), 0.5, &cfg).quantized_action, vec![1]);
        assert_eq!(quantize_state(&AcbVector::uniform(1, 0.69), 0.5, &cfg).quantized_action, vec![3]);
    }

    #[test]
    fn action_index_round_trip() {
        for a in 0..125 {
            assert_eq!(action_index(&action_levels(a, 5, 3), 5), a);
        }
        assert_eq!(action_vector(0, 5, 2).factors, vec![0.2, 0.2]);
        assert_eq!(action_vector(24, 5, 2).factors, vec![1.0, 1.0]);
    }

    #[test]
    fn greedy_ties_are_randomized_but_stay_in_the_tie_set() {
        let cfg = RlConfig::default();
        let mut q = QTable::new(&cfg, 1).unwrap();
        let s = DiscreteState { quantized_action: vec![5], quantized_accuracy: 0 };
        let si = q.state_index(&s).unwrap();
        q.values[si * 5 + 1] = 3.0;
        q.values[si * 5 + 3] = 3.0;
        let mut r = rng::from_seed(3);
        let mut seen = [0usize; 5];
        for _ in 0..200 {
            seen[select_action(&q, &s, 0.0, &mut r).unwrap().0] += 1;
        }
        assert_eq!(seen[0] + seen[2] + seen[4], 0);
        assert!(seen[1] > 50 && seen[3] > 50);
    }

    #[test]
    fn epsilon_schedule_is_linear() {
        let cfg = RlConfig { epsilon_decay_slots: 100, ..RlConfig::default() };
        assert_eq!(cfg.epsilon_at(0), 0.9);
        assert!((cfg.epsilon_at(50) - 0.5).abs() < 1e-12);
        assert_eq!(cfg.epsilon_at(100), 0.1);
        assert_eq!(cfg.epsilon_at(10_000), 0.1);
    }

    #[test]
    fn oversized_table_is_rejected() {
        assert!(RlConfig::default().validate(20).is_err());
        assert!(RlConfig { x1: 1, ..RlConfig::default() }.validate(1).is_err());
    }

    #[test]
    fn artifact_round_trip_checks_fingerprint() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.json");
        let mut agent = QLearningAgent::new(RlConfig::default(), 2).unwrap();
        agent.table.values[7] = 1.5;
        QArtifact::new(&agent).save(&path).unwrap();
        let back = QArtifact::load(&path, Some(&RlConfig::default())).unwrap();
        assert_eq!(back, agent);
        let other = RlConfig { discount: 0.5, ..RlConfig::default() };
        assert!(matches!(QArtifact::load(&path, Some(&other)), Err(Error::Artifact(_))));
    }
}
