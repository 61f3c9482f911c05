//! TD3 barring controller: an actor, twin critics, three target copies, a
//! replay buffer, clipped target-policy smoothing and delayed actor updates.
//!
//! The state vector is the per-user channel-energy map (zero-padded to a
//! `w × w` square feeding the convolution) followed by the previous action and
//! the previous accuracy. Critics take the state with the action appended.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::env::AcbVector;
use crate::error::{ensure, Error, Result};
use crate::nn::{nadam_step, soft_update, Activation, LayerSpec, NadamState, Network, Tensor};
use crate::rl::fingerprint;
use crate::sim::{Environment, StepResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Td3Config {
    pub gamma: f64,
    pub delta: f64,
    pub policy_delay: usize,
    pub explore_sigma: f64,
    /// Exploration level reached after `explore_decay_slots` (linear decay).
    /// `None` keeps `explore_sigma` throughout.
    pub explore_sigma_final: Option<f64>,
    pub explore_decay_slots: usize,
    pub smooth_sigma: f64,
    pub clip_g: f64,
    /// Read `explore_sigma` and `smooth_sigma` as variances instead of
    /// standard deviations.
    pub noise_is_variance: bool,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub hidden: usize,
    pub conv_channels: usize,
    pub conv_kernel: usize,
    pub conv_stride: usize,
    /// Utilities are multiplied by this before entering the critic targets.
    pub reward_scale: f64,
    /// Uniformly random actions for this many slots before the actor acts.
    pub warmup_slots: usize,
    /// Gradient steps taken once, at the end of the warm-up.
    pub pretrain_updates: usize,
    pub channel_view: ChannelView,
}

/// Which users' channel energies enter the state map.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelView {
    /// Every user's channel.
    All,
    /// Only users detected in the slot; the rest of the map is zero.
    #[default]
    Detected,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            delta: 0.05,
            policy_delay: 4,
            explore_sigma: 0.15,
            explore_sigma_final: None,
            explore_decay_slots: 0,
            smooth_sigma: 0.25,
            clip_g: 0.4,
            noise_is_variance: false,
            batch_size: 128,
            buffer_capacity: 1000,
            actor_lr: 5e-5,
            critic_lr: 1e-5,
            hidden: 64,
            conv_channels: 4,
            conv_kernel: 3,
            conv_stride: 1,
            reward_scale: 1.0,
            warmup_slots: 0,
            pretrain_updates: 0,
            channel_view: ChannelView::Detected,
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        ensure((0.0..1.0).contains(&self.gamma), || format!("gamma {} outside [0,1)", self.gamma))?;
        ensure(self.delta > 0.0 && self.delta <= 1.0, || format!("delta {} outside (0,1]", self.delta))?;
        ensure(self.policy_delay >= 1, || "policy_delay must be >= 1".into())?;
        ensure(self.explore_sigma >= 0.0 && self.smooth_sigma >= 0.0, || "noise levels must be >= 0".into())?;
        ensure(self.explore_sigma_final.is_none_or(|s| s >= 0.0), || "explore_sigma_final must be >= 0".into())?;
        ensure(self.clip_g > 0.0, || "clip_g must be > 0".into())?;
        ensure(self.batch_size >= 1, || "batch_size must be >= 1".into())?;
        ensure(self.batch_size <= self.buffer_capacity, || {
            format!("batch_size {} exceeds buffer_capacity {}", self.batch_size, self.buffer_capacity)
        })?;
        ensure(self.actor_lr > 0.0 && self.critic_lr > 0.0, || "learning rates must be > 0".into())?;
        ensure(self.hidden >= 1 && self.conv_channels >= 1, || "layer widths must be >= 1".into())?;
        ensure(self.reward_scale > 0.0 && self.reward_scale.is_finite(), || "reward_scale must be > 0".into())
    }

    fn std_of(&self, level: f64) -> f64 {
        if self.noise_is_variance {
            level.sqrt()
        } else {
            level
        }
    }

    /// Standard deviation of the exploration noise at `slot`.
    pub fn explore_std_at(&self, slot: usize) -> f64 {
        let level = match self.explore_sigma_final {
            Some(end) if self.explore_decay_slots > 0 && slot < self.explore_decay_slots => {
                let frac = slot as f64 / self.explore_decay_slots as f64;
                self.explore_sigma + (end - self.explore_sigma) * frac
            }
            Some(end) => end,
            None => self.explore_sigma,
        };
        self.std_of(level)
    }

    pub fn smooth_std(&self) -> f64 {
        self.std_of(self.smooth_sigma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub utility: f64,
    pub next_state: Vec<f64>,
}

/// Fixed-capacity FIFO; pushing into a full buffer evicts the oldest entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        ensure(capacity >= 1, || "buffer capacity must be >= 1".into())?;
        Ok(Self {
            capacity,
            items: VecDeque::with_capacity(capacity),
            inserted: 0,
        })
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
        self.inserted += 1;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn total_inserted(&self) -> u64 {
        self.inserted
    }

    /// Oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    /// `batch` indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        (0..batch).map(|_| rng.random_range(0..self.items.len())).collect()
    }
}

/// Side of the square energy map for `n_users` users.
pub fn map_width(n_users: usize) -> usize {
    let mut w = (n_users as f64).sqrt().floor() as usize;
    while w * w < n_users {
        w += 1;
    }
    w.max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEncoding {
    pub prev_action: Vec<f64>,
    pub prev_accuracy: f64,
    pub channel_features: Vec<f64>,
}

impl StateEncoding {
    /// `[energy map (zero padded to w²), prev_action, prev_accuracy]`.
    pub fn to_vector(&self) -> Vec<f64> {
        let w = map_width(self.channel_features.len());
        let mut v = Vec::with_capacity(w * w + self.prev_action.len() + 1);
        v.extend_from_slice(&self.channel_features);
        v.resize(w * w, 0.0);
        v.extend_from_slice(&self.prev_action);
        v.push(self.prev_accuracy);
        v
    }

    pub fn encoded_len(n_users: usize, n_classes: usize) -> usize {
        let w = map_width(n_users);
        w * w + n_classes + 1
    }
}

fn trunk(cfg: &Td3Config, n_users: usize, passthrough: usize) -> Result<(Vec<LayerSpec>, usize)> {
    let w = map_width(n_users);
    let conv = LayerSpec::Conv {
        in_channels: 1,
        out_channels: cfg.conv_channels,
        kernel: cfg.conv_kernel.min(w),
        stride: cfg.conv_stride,
        input_width: w,
        passthrough,
        activation: Activation::Relu,
    };
    if LayerSpec::conv_output_width(w, cfg.conv_kernel.min(w), cfg.conv_stride).is_none() {
        return Err(Error::InvalidConfig(format!(
            "conv kernel {} / stride {} do not tile a {w}x{w} map",
            cfg.conv_kernel, cfg.conv_stride
        )));
    }
    let out = conv.output_size();
    Ok((vec![conv], out))
}

/// Conv → FC(hidden, relu) → FC(L, sigmoid).
pub fn actor_layers(cfg: &Td3Config, n_users: usize, n_classes: usize) -> Result<Vec<LayerSpec>> {
    let (mut layers, width) = trunk(cfg, n_users, n_classes + 1)?;
    layers.push(LayerSpec::Dense {
        input: width,
        output: cfg.hidden,
        activation: Activation::Relu,
    });
    layers.push(LayerSpec::Dense {
        input: cfg.hidden,
        output: n_classes,
        activation: Activation::Sigmoid,
    });
    Ok(layers)
}

/// Conv → FC(hidden, relu) → FC(1, identity); the action rides in the pass-through.
pub fn critic_layers(cfg: &Td3Config, n_users: usize, n_classes: usize) -> Result<Vec<LayerSpec>> {
    let (mut layers, width) = trunk(cfg, n_users, 2 * n_classes + 1)?;
    layers.push(LayerSpec::Dense {
        input: width,
        output: cfg.hidden,
        activation: Activation::Relu,
    });
    layers.push(LayerSpec::Dense {
        input: cfg.hidden,
        output: 1,
        activation: Activation::Identity,
    });
    Ok(layers)
}

fn clamp_unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// `clamp(π(s) + N(0, σ²), 0, 1)` per class.
pub fn policy_action<R: Rng + ?Sized>(actor: &Network, state: &[f64], sigma: f64, rng: &mut R) -> Result<AcbVector> {
    let out = actor.forward(&Tensor::vector(state.to_vec()))?;
    let noise = Normal::new(0.0, sigma.max(0.0)).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(AcbVector {
        factors: out
            .data
            .iter()
            .map(|&a| clamp_unit(if sigma > 0.0 { a + noise.sample(rng) } else { a }))
            .collect(),
    })
}

/// Smoothing noise clipped to `[−g, g]`.
pub fn clip_noise(sample: f64, g: f64) -> f64 {
    sample.clamp(-g, g)
}

/// Target actions `clamp(π′(s′) + clip(N(0, σ̃²), −g, g), 0, 1)` for a batch of
/// next states (`[batch, state_len]`). Returns the actions and the additive
/// noise actually applied.
pub fn target_action<R: Rng + ?Sized>(
    target_actor: &Network,
    next_states: &Tensor,
    cfg: &Td3Config,
    rng: &mut R,
) -> Result<(Tensor, Vec<f64>)> {
    let mut out = target_actor.forward(next_states)?;
    let std = cfg.smooth_std();
    let noise_dist = Normal::new(0.0, std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut noise = Vec::with_capacity(out.len());
    for a in out.data.iter_mut() {
        let e = if std > 0.0 { clip_noise(noise_dist.sample(rng), cfg.clip_g) } else { 0.0 };
        noise.push(e);
        *a = clamp_unit(*a + e);
    }
    Ok((out, noise))
}

/// `y = u + γ·min(q1, q2)`.
pub fn target_q(q1: f64, q2: f64, utility: f64, gamma: f64) -> f64 {
    utility + gamma * q1.min(q2)
}

/// Row-wise concatenation `[states | actions]`.
pub fn join_state_action(states: &Tensor, actions: &Tensor) -> Result<Tensor> {
    let (b, s) = (states.shape[0], states.shape[1]);
    let a = actions.len() / b.max(1);
    if actions.len() != b * a || actions.shape.first() != Some(&b) {
        return Err(Error::Dimension("state and action batches differ".into()));
    }
    let mut data = Vec::with_capacity(b * (s + a));
    for i in 0..b {
        data.extend_from_slice(states.row(i));
        data.extend_from_slice(&actions.data[i * a..(i + 1) * a]);
    }
    Tensor::matrix(b, s + a, data)
}

/// Bellman targets for a batch using the twin target critics.
pub fn target_values(
    critic1_target: &Network,
    critic2_target: &Network,
    next_states: &Tensor,
    target_actions: &Tensor,
    utilities: &[f64],
    gamma: f64,
) -> Result<Vec<f64>> {
    let sa = join_state_action(next_states, target_actions)?;
    let q1 = critic1_target.forward(&sa)?;
    let q2 = critic2_target.forward(&sa)?;
    Ok(utilities
        .iter()
        .zip(q1.data.iter().zip(&q2.data))
        .map(|(&u, (&a, &b))| target_q(a, b, u, gamma))
        .collect())
}

/// One Nadam step on `(1/J)·Σ(y − Q(s,p))²`; returns the loss before the step.
pub fn critic_step(critic: &mut Network, opt: &mut NadamState, inputs: &Tensor, targets: &[f64]) -> Result<f64> {
    let q = critic.forward_train(inputs)?;
    if q.len() != targets.len() {
        return Err(Error::Dimension("targets do not match the batch".into()));
    }
    let j = targets.len() as f64;
    let loss = q.data.iter().zip(targets).map(|(q, y)| (y - q).powi(2)).sum::<f64>() / j;
    let upstream = Tensor {
        shape: q.shape.clone(),
        data: q.data.iter().zip(targets).map(|(q, y)| -2.0 * (y - q) / j).collect(),
    };
    let grads = critic.backward(&upstream)?;
    nadam_step(critic.params_mut(), &grads.params, opt)?;
    Ok(loss)
}

/// Both critics regress onto the same targets.
pub fn critic_update(
    critic1: &mut Network,
    critic2: &mut Network,
    opt1: &mut NadamState,
    opt2: &mut NadamState,
    inputs: &Tensor,
    targets: &[f64],
) -> Result<(f64, f64)> {
    Ok((critic_step(critic1, opt1, inputs, targets)?, critic_step(critic2, opt2, inputs, targets)?))
}

/// One ascent step on `(1/J)·Σ Q₁(s, π(s))` through `∇_p Q₁ · ∇_ω π`.
pub fn actor_update(actor: &mut Network, critic1: &Network, opt: &mut NadamState, states: &Tensor) -> Result<f64> {
    let actions = actor.forward_train(states)?;
    let sa = join_state_action(states, &actions)?;
    let mut critic = critic1.clone();
    let q = critic.forward_train(&sa)?;
    let j = q.len() as f64;
    let objective = q.data.iter().sum::<f64>() / j;
    let g = critic.backward(&Tensor {
        shape: q.shape.clone(),
        data: vec![-1.0 / j; q.len()],
    })?;
    let (b, width) = (sa.shape[0], sa.shape[1]);
    let l = actions.len() / b;
    let mut da = Vec::with_capacity(actions.len());
    for i in 0..b {
        da.extend_from_slice(&g.input.data[i * width + width - l..(i + 1) * width]);
    }
    let grads = actor.backward(&Tensor {
        shape: actions.shape.clone(),
        data: da,
    })?;
    nadam_step(actor.params_mut(), &grads.params, opt)?;
    Ok(objective)
}

/// What one learning step did.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LearnReport {
    pub critic_loss: (f64, f64),
    pub actor_updated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Td3Agent {
    pub config: Td3Config,
    pub n_users: usize,
    pub n_classes: usize,
    pub actor: Network,
    pub actor_target: Network,
    pub critic1: Network,
    pub critic2: Network,
    pub critic1_target: Network,
    pub critic2_target: Network,
    pub actor_opt: NadamState,
    pub critic1_opt: NadamState,
    pub critic2_opt: NadamState,
    pub buffer: ReplayBuffer,
    pub critic_updates: u64,
    pub actor_updates: u64,
    pub slot: usize,
    /// Encoded state the next action will be taken from.
    pub state: Vec<f64>,
}

impl Td3Agent {
    /// Fresh networks (targets start as exact copies); the actor's last layer
    /// is drawn from `U(−1e−3, 1e−3)` so initial actions sit near 0.5.
    pub fn new<R: Rng + ?Sized>(config: Td3Config, n_users: usize, n_classes: usize, rng: &mut R) -> Result<Self> {
        config.validate()?;
        ensure(n_users >= 1 && n_classes >= 1, || "agent needs users and classes".into())?;
        let mut actor = Network::new(actor_layers(&config, n_users, n_classes)?, rng)?;
        let last = actor.layers().len() - 1;
        actor.reinit_layer(last, 1e-3, rng)?;
        let critic1 = Network::new(critic_layers(&config, n_users, n_classes)?, rng)?;
        let critic2 = Network::new(critic_layers(&config, n_users, n_classes)?, rng)?;
        let initial = StateEncoding {
            prev_action: vec![1.0; n_classes],
            prev_accuracy: 1.0,
            channel_features: vec![1.0; n_users],
        };
        Ok(Self {
            actor_opt: NadamState::new(&actor, config.actor_lr),
            critic1_opt: NadamState::new(&critic1, config.critic_lr),
            critic2_opt: NadamState::new(&critic2, config.critic_lr),
            buffer: ReplayBuffer::new(config.buffer_capacity)?,
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            critic_updates: 0,
            actor_updates: 0,
            slot: 0,
            state: initial.to_vector(),
            config,
            n_users,
            n_classes,
        })
    }

    pub fn encode(&self, prev_action: &AcbVector, prev_accuracy: f64, energies: &[f64]) -> Vec<f64> {
        StateEncoding {
            prev_action: prev_action.factors.clone(),
            prev_accuracy,
            channel_features: energies.to_vec(),
        }
        .to_vector()
    }

    /// Channel energies of a slot as seen through `config.channel_view`.
    pub fn channel_features(&self, step: &StepResult) -> Vec<f64> {
        match self.config.channel_view {
            ChannelView::All => step.energies.clone(),
            ChannelView::Detected => {
                let mut f = vec![0.0; step.energies.len()];
                for &n in &step.outcome.detected {
                    f[n] = step.energies[n];
                }
                f
            }
        }
    }

    pub fn in_warmup(&self) -> bool {
        self.slot < self.config.warmup_slots
    }

    /// Exploratory action for the current state: uniform during warm-up,
    /// otherwise the noisy actor output.
    pub fn act<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<AcbVector> {
        if self.in_warmup() {
            return Ok(AcbVector {
                factors: (0..self.n_classes).map(|_| rng.random::<f64>()).collect(),
            });
        }
        policy_action(&self.actor, &self.state, self.config.explore_std_at(self.slot), rng)
    }

    /// Noise-free actor output.
    pub fn greedy(&self) -> Result<AcbVector> {
        policy_action(&self.actor, &self.state, 0.0, &mut crate::rng::from_seed(0))
    }

    /// Stores the transition from the current state and learns when the
    /// buffer holds at least one batch. Warm-up slots only collect; the slot
    /// that ends the warm-up runs `pretrain_updates` extra steps.
    pub fn observe<R: Rng + ?Sized>(
        &mut self,
        action: &AcbVector,
        utility: f64,
        next_state: Vec<f64>,
        rng: &mut R,
    ) -> Result<Option<LearnReport>> {
        self.buffer.push(Transition {
            state: std::mem::replace(&mut self.state, next_state.clone()),
            action: action.factors.clone(),
            utility,
            next_state,
        });
        self.slot += 1;
        if self.slot < self.config.warmup_slots || self.buffer.len() < self.config.batch_size {
            return Ok(None);
        }
        if self.slot == self.config.warmup_slots {
            for _ in 0..self.config.pretrain_updates {
                self.learn(rng)?;
            }
        }
        self.learn(rng).map(Some)
    }

    /// One TD3 learning step on a uniformly sampled batch.
    pub fn learn<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<LearnReport> {
        let cfg = &self.config;
        let idx = self.buffer.sample_indices(cfg.batch_size, rng);
        let state_len = self.state.len();
        let b = idx.len();
        let mut states = Vec::with_capacity(b * state_len);
        let mut next = Vec::with_capacity(b * state_len);
        let mut actions = Vec::with_capacity(b * self.n_classes);
        let mut utilities = Vec::with_capacity(b);
        for &i in &idx {
            let t = self.buffer.get(i).expect("sampled index in range");
            states.extend_from_slice(&t.state);
            next.extend_from_slice(&t.next_state);
            actions.extend_from_slice(&t.action);
            utilities.push(t.utility * cfg.reward_scale);
        }
        let states = Tensor::matrix(b, state_len, states)?;
        let next = Tensor::matrix(b, state_len, next)?;
        let actions = Tensor::matrix(b, self.n_classes, actions)?;
        let (p_tilde, _) = target_action(&self.actor_target, &next, cfg, rng)?;
        let targets = target_values(&self.critic1_target, &self.critic2_target, &next, &p_tilde, &utilities, cfg.gamma)?;
        let inputs = join_state_action(&states, &actions)?;
        let critic_loss = critic_update(
            &mut self.critic1,
            &mut self.critic2,
            &mut self.critic1_opt,
            &mut self.critic2_opt,
            &inputs,
            &targets,
        )?;
        self.critic_updates += 1;
        let actor_updated = self.critic_updates.is_multiple_of(cfg.policy_delay as u64);
        if actor_updated {
            actor_update(&mut self.actor, &self.critic1, &mut self.actor_opt, &states)?;
            let delta = cfg.delta;
            soft_update(&mut self.actor_target, &self.actor, delta)?;
            soft_update(&mut self.critic1_target, &self.critic1, delta)?;
            soft_update(&mut self.critic2_target, &self.critic2, delta)?;
            self.actor_updates += 1;
        }
        Ok(LearnReport {
            critic_loss,
            actor_updated,
        })
    }
}

/// One pass of the DRL control loop: act, run the slot, store the transition
/// and learn.
pub fn train_slot<A: Rng + ?Sized, L: Rng + ?Sized>(
    env: &mut Environment,
    agent: &mut Td3Agent,
    act_rng: &mut A,
    learn_rng: &mut L,
) -> Result<(AcbVector, StepResult)> {
    let p = agent.act(act_rng)?;
    let step = env.step(&p)?;
    let next = agent.encode(&p, step.outcome.accuracy, &agent.channel_features(&step));
    agent.observe(&p, step.utility, next, learn_rng)?;
    Ok((p, step))
}

pub const TD3_CHECKPOINT_FORMAT: &str = "racsim-td3-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Td3Checkpoint {
    pub format: String,
    pub fingerprint: String,
    pub agent: Td3Agent,
}

impl Td3Checkpoint {
    /// Snapshot of the agent; `with_buffer == false` drops the replay contents.
    pub fn new(agent: &Td3Agent, with_buffer: bool) -> Self {
        let mut agent = agent.clone();
        if !with_buffer {
            agent.buffer = ReplayBuffer::new(agent.config.buffer_capacity).expect("validated capacity");
        }
        Self {
            format: TD3_CHECKPOINT_FORMAT.into(),
            fingerprint: fingerprint(&agent.config),
            agent,
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path, expected: Option<&Td3Config>) -> Result<Td3Agent> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Td3Checkpoint = serde_json::from_str(&text)?;
        if ck.format != TD3_CHECKPOINT_FORMAT {
            return Err(Error::Artifact(format!("unknown format {}", ck.format)));
        }
        if ck.fingerprint != fingerprint(&ck.agent.config) {
            return Err(Error::Artifact("fingerprint does not match stored config".into()));
        }
        if let Some(cfg) = expected {
            if fingerprint(cfg) != ck.fingerprint {
                return Err(Error::Artifact("checkpoint was trained with a different config".into()));
            }
        }
        Ok(ck.agent)
    }
}
