//! Multiplexed two-way protocol (MTP) and the 2G-NC baseline.

use crate::bellstate::{dephase, secret_fraction, swap, BellDiagState, NoiseParams};
use crate::costs::{mtp_costs, normalize_per_secret_key, twognc_costs};
use crate::error::{Error, Result};
use crate::pmf::{expected_pairs, link_success_prob, run_recursion, two_gnc_success, BurstSetup};
use crate::policy::{build_schedule, DecisionRule, LevelStates, Schedule};
use crate::report::{Architecture, RunReport};

pub const MAX_SEGMENTS: usize = 1024;
pub const MAX_CHANNELS: usize = 1024;

/// Hardware and fiber parameters shared by every architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct Physics {
    pub eta_c: f64,
    pub eps_g: f64,
    /// Measurement error; `None` means `0.25 * eps_g`.
    pub xi: Option<f64>,
    /// Seconds.
    pub t2: f64,
    /// Kilometres.
    pub l_att: f64,
    /// Kilometres per second.
    pub c_fiber: f64,
    /// Elementary fidelity is `1 - link_fidelity_coeff * eps_g`.
    pub link_fidelity_coeff: f64,
    /// Burst rate in Hz.
    pub source_rate: f64,
    pub decoherence: bool,
    /// Replaces the `l0 / c` heralding hold when set.
    pub heralding_hold: Option<f64>,
    /// Scales every distillation outcome-exchange hold.
    pub distill_hold_factor: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            eta_c: 0.9,
            eps_g: 1e-3,
            xi: None,
            t2: 1.0,
            l_att: 20.0,
            c_fiber: 200_000.0,
            link_fidelity_coeff: 1.25,
            source_rate: 1e6,
            decoherence: true,
            heralding_hold: None,
            distill_hold_factor: 1.0,
        }
    }
}

impl Physics {
    pub fn xi(&self) -> f64 {
        self.xi.unwrap_or(0.25 * self.eps_g)
    }

    pub fn noise(&self) -> NoiseParams {
        NoiseParams {
            gate_error: self.eps_g,
            meas_error: self.xi(),
            t2: if self.decoherence {
                self.t2
            } else {
                f64::INFINITY
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_c > 0.0 && self.eta_c <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "eta_c = {} outside (0, 1]",
                self.eta_c
            )));
        }
        for (name, p) in [("eps_g", self.eps_g), ("xi", self.xi())] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParams(format!("{name} = {p} outside [0, 1]")));
            }
        }
        for (name, v) in [
            ("t2", self.t2),
            ("l_att", self.l_att),
            ("c_fiber", self.c_fiber),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} = {v} must be positive"
                )));
            }
        }
        if self.link_fidelity_coeff != 1.125 && self.link_fidelity_coeff != 1.25 {
            return Err(Error::InvalidParams(format!(
                "link_fidelity_coeff = {} must be 1.125 or 1.25",
                self.link_fidelity_coeff
            )));
        }
        if !(self.source_rate > 0.0) {
            return Err(Error::InvalidParams("source_rate must be positive".into()));
        }
        if self.heralding_hold.is_some_and(|h| !(h >= 0.0)) || !(self.distill_hold_factor >= 0.0) {
            return Err(Error::InvalidParams(
                "hold overrides must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// One chain configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    pub physics: Physics,
    /// Kilometres.
    pub total_distance: f64,
    pub n_segments: usize,
    pub channels: usize,
    /// Forces the elementary-link success probability.
    pub pi0_override: Option<f64>,
    /// Forces the elementary-link fidelity.
    pub fidelity_override: Option<f64>,
}

impl ChainParams {
    pub fn new(physics: Physics, total_distance: f64, n_segments: usize, channels: usize) -> Self {
        Self {
            physics,
            total_distance,
            n_segments,
            channels,
            pi0_override: None,
            fidelity_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        if !(self.total_distance > 0.0) {
            return Err(Error::InvalidParams(
                "total_distance must be positive".into(),
            ));
        }
        if !self.n_segments.is_power_of_two() || self.n_segments > MAX_SEGMENTS {
            return Err(Error::InvalidParams(format!(
                "n_segments = {} must be a power of two no larger than {MAX_SEGMENTS}",
                self.n_segments
            )));
        }
        if self.channels == 0 || self.channels > MAX_CHANNELS {
            return Err(Error::InvalidParams(format!(
                "channels = {} outside 1..={MAX_CHANNELS}",
                self.channels
            )));
        }
        if self.pi0_override.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidParams("pi0 override outside [0, 1]".into()));
        }
        if self
            .fidelity_override
            .is_some_and(|f| !(0.25..=1.0).contains(&f))
        {
            return Err(Error::InvalidParams(
                "fidelity override outside [0.25, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Elementary segment length in km.
    pub fn l0(&self) -> f64 {
        self.total_distance / self.n_segments as f64
    }

    pub fn pi0(&self) -> Result<f64> {
        match self.pi0_override {
            Some(p) => Ok(p),
            None => link_success_prob(self.l0(), self.physics.eta_c, self.physics.l_att),
        }
    }

    pub fn burst_setup(&self) -> Result<BurstSetup> {
        BurstSetup::new(self.channels, self.pi0()?, self.n_segments)
    }

    pub fn noise(&self) -> NoiseParams {
        self.physics.noise()
    }

    pub fn elementary_state(&self) -> Result<BellDiagState> {
        let f = self.fidelity_override.unwrap_or_else(|| {
            (1.0 - self.physics.link_fidelity_coeff * self.physics.eps_g).max(0.25)
        });
        BellDiagState::from_depolarized_fidelity(f)
    }
}

/// Storage holds applied to pairs while they wait for classical signals.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingModel {
    /// Seconds between emission and the midpoint herald arriving back.
    pub heralding: f64,
    /// Seconds of outcome exchange per level; zero where the level does not
    /// distill.
    pub distill_holds: Vec<f64>,
}

impl TimingModel {
    /// Holds for every level as if each one distilled.
    pub fn candidate(params: &ChainParams, depth: usize) -> Self {
        let ph = &params.physics;
        let span = params.l0() / ph.c_fiber;
        Self {
            heralding: ph.heralding_hold.unwrap_or(span),
            distill_holds: (0..=depth)
                .map(|i| ph.distill_hold_factor * span * (1u64 << i) as f64)
                .collect(),
        }
    }

    pub fn total_hold(&self) -> f64 {
        self.heralding + self.distill_holds.iter().sum::<f64>()
    }
}

/// Per-level holds for a fixed schedule. Swaps are deterministic and add none.
pub fn build_timing(params: &ChainParams, sched: &Schedule) -> TimingModel {
    let mut t = TimingModel::candidate(params, sched.levels() - 1);
    for (hold, &d) in t.distill_holds.iter_mut().zip(sched.distill()) {
        if !d {
            *hold = 0.0;
        }
    }
    t
}

/// Evaluates the MTP with a schedule chosen by `rule`.
pub fn evaluate_mtp(params: &ChainParams, rule: DecisionRule) -> Result<RunReport> {
    let build = build_schedule(params, rule)?;
    finish_mtp(params, build.schedule, &build.d_probs, &build.states)
}

/// Evaluates the MTP under an externally fixed schedule.
pub fn evaluate_mtp_with_schedule(params: &ChainParams, sched: &Schedule) -> Result<RunReport> {
    params.validate()?;
    let (states, d_probs) = state_walk(params, sched)?;
    finish_mtp(params, sched.clone(), &d_probs, &states)
}

/// Tracks the Bell-diagonal state through each level under a fixed schedule.
pub fn state_walk(params: &ChainParams, sched: &Schedule) -> Result<(Vec<LevelStates>, Vec<f64>)> {
    let noise = params.noise();
    let depth = sched.levels() - 1;
    let timing = TimingModel::candidate(params, depth);
    let mut state = dephase(&params.elementary_state()?, timing.heralding, noise.t2)?;
    let mut states = Vec::with_capacity(depth + 1);
    let mut d_probs = Vec::with_capacity(depth + 1);
    for level in 0..=depth {
        let candidate = crate::bellstate::dejmps(&state, &state, &noise).ok();
        d_probs.push(candidate.map_or(0.0, |c| c.success_prob));
        let distilled = match candidate {
            Some(c) => Some(dephase(&c.state, timing.distill_holds[level], noise.t2)?),
            None => None,
        };
        let post = if sched.distill()[level] {
            distilled.ok_or(Error::UndefinedOutput)?
        } else {
            state
        };
        states.push(LevelStates {
            pre: state,
            distilled,
            post,
        });
        if level < depth {
            state = swap(&post, &post, &noise);
        }
    }
    Ok((states, d_probs))
}

fn finish_mtp(
    params: &ChainParams,
    schedule: Schedule,
    d_probs: &[f64],
    states: &[LevelStates],
) -> Result<RunReport> {
    let setup = params.burst_setup()?;
    let rec = run_recursion(&setup, &schedule, d_probs)?;
    let depth = setup.depth();
    let (expected, _) = expected_pairs(&rec, depth);
    let final_state = states[depth].post;
    let fraction = secret_fraction(&final_state);
    let skr = fraction * expected;
    let costs = normalize_per_secret_key(&mtp_costs(&rec, params.channels), skr);
    Ok(RunReport {
        architecture: Architecture::Mtp,
        channels: params.channels,
        expected_pairs_end_to_end: expected,
        final_state,
        secret_fraction: fraction,
        skr_per_burst: skr,
        skr_per_channel_use_per_burst: skr / params.channels as f64,
        reset_profile: Some(rec.profile),
        timing: Some(build_timing(params, &schedule)),
        schedule: Some(schedule),
        costs,
    })
}

/// 2G-NC: one retained pair per segment, network-wide swap, no distillation.
pub fn evaluate_2gnc(params: &ChainParams) -> Result<RunReport> {
    params.validate()?;
    let pi0 = params.pi0()?;
    let noise = params.noise();
    let success = two_gnc_success(params.channels, pi0, params.n_segments);
    let depth = params.n_segments.trailing_zeros() as usize;
    let heralding = TimingModel::candidate(params, depth).heralding;
    let elementary = dephase(&params.elementary_state()?, heralding, noise.t2)?;
    let mut state = elementary;
    for _ in 1..params.n_segments {
        state = swap(&state, &elementary, &noise);
    }
    let fraction = secret_fraction(&state);
    let skr = fraction * success;
    let costs =
        normalize_per_secret_key(&twognc_costs(params.channels, pi0, params.n_segments), skr);
    Ok(RunReport {
        architecture: Architecture::TwoGnc,
        channels: params.channels,
        expected_pairs_end_to_end: success,
        final_state: state,
        secret_fraction: fraction,
        skr_per_burst: skr,
        skr_per_channel_use_per_burst: skr / params.channels as f64,
        reset_profile: None,
        schedule: None,
        timing: Some(TimingModel {
            heralding,
            distill_holds: vec![0.0; depth + 1],
        }),
        costs,
    })
}
