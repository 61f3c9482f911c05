//! One closed-loop access slot: traffic, barring, channel, measurement,
//! recovery, handshake and retries, plus the utility of the outcome.

use crate::env::{
    acb_check, generate_gains, generate_preambles, handshake, synthesize_measurement, AcbVector,
    ActivityVector, ChannelTensor, NetworkConfig, SlotOutcome, Traffic,
};
use crate::error::Result;
use crate::rl::{utility, UtilityParams};
use crate::rng::{self, SimRng, Stream};
use crate::saud::{recover, RecoveryConfig};

/// Everything observed in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub outcome: SlotOutcome,
    pub utility: f64,
    pub n_active: usize,
    /// Users of each class that passed the barring check.
    pub passed_per_class: Vec<usize>,
    /// Per-user channel energies of this slot's channel.
    pub energies: Vec<f64>,
}

/// Owns the random streams and carried state of a simulated cell.
#[derive(Debug, Clone)]
pub struct Environment {
    network: NetworkConfig,
    recovery: RecoveryConfig,
    utility: UtilityParams,
    class_map: Vec<usize>,
    preambles: Vec<crate::linalg::C64>,
    traffic: Traffic,
    traffic_rng: SimRng,
    load_rng: SimRng,
    barring_rng: SimRng,
    channel_rng: SimRng,
    noise_rng: SimRng,
    slot: usize,
    parallel: bool,
}

impl Environment {
    /// Validates the configs and seeds every stream from `seed`. Preambles are
    /// drawn once and kept for the whole run.
    pub fn new(network: NetworkConfig, recovery: RecoveryConfig, utility: UtilityParams, seed: u64) -> Result<Self> {
        network.validate()?;
        recovery.validate(network.n_antennas)?;
        utility.validate()?;
        let preambles = generate_preambles(network.n_users, &mut rng::stream(seed, Stream::Preamble));
        Ok(Self {
            class_map: network.class_map(),
            traffic: Traffic::new(&network),
            preambles,
            traffic_rng: rng::stream(seed, Stream::Traffic),
            load_rng: rng::stream(seed, Stream::Load),
            barring_rng: rng::stream(seed, Stream::Barring),
            channel_rng: rng::stream(seed, Stream::Channel),
            noise_rng: rng::stream(seed, Stream::Noise),
            network,
            recovery,
            utility,
            slot: 0,
            parallel: false,
        })
    }

    /// Spreads the per-subcarrier recovery over the rayon pool. Results are
    /// identical either way.
    pub fn with_parallel_recovery(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn network(&self) -> &NetworkConfig {
        &self.network
    }

    pub fn recovery(&self) -> &RecoveryConfig {
        &self.recovery
    }

    pub fn utility_params(&self) -> &UtilityParams {
        &self.utility
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn traffic(&self) -> &Traffic {
        &self.traffic
    }

    /// Runs one slot under barring factors `p`.
    pub fn step(&mut self, p: &AcbVector) -> Result<StepResult> {
        let cfg = &self.network;
        let active = self.traffic.next_activity(cfg, &mut self.traffic_rng, &mut self.load_rng);
        let passed = acb_check(&active, p, cfg, &mut self.barring_rng)?;
        let channel = ChannelTensor {
            h: generate_gains(cfg, &mut self.channel_rng),
            preambles: self.preambles.clone(),
        };
        let energies = channel.user_energies();
        let y = synthesize_measurement(&channel, &passed, cfg, &mut self.noise_rng)?;
        let estimate = recover(&channel.into_normalized(), &y.y, &self.recovery, self.parallel)?;
        let counts = cfg.class_counts(&active);
        let outcome = handshake(&estimate.support(), &passed, p, &counts, cfg)?;
        let mut served = ActivityVector::zeros(cfg.n_users);
        for &n in &outcome.detected {
            served.indicators[n] = passed.indicators[n];
        }
        self.traffic.back_off(cfg, &active, &served, &mut self.traffic_rng);
        let mut passed_per_class = vec![0; cfg.n_classes()];
        for &n in &outcome.passed {
            passed_per_class[self.class_map[n]] += 1;
        }
        let u = utility(outcome.accuracy, p, &cfg.classes, &outcome.class_counts, &self.utility);
        self.slot += 1;
        Ok(StepResult {
            utility: u,
            n_active: active.count(),
            passed_per_class,
            energies,
            outcome,
        })
    }
}
