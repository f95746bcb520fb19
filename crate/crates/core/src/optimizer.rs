//! Exhaustive grid sweeps and per-distance envelopes.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::oneway::{oneway_skr, OnewayParams, QpcCode};
use crate::policy::DecisionRule;
use crate::report::{Architecture, RunReport};
use crate::twoway::{evaluate_2gnc, evaluate_mtp, ChainParams, Physics};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub distances: Vec<f64>,
    pub n_segment_options: Vec<usize>,
    pub channel_options: Vec<usize>,
    pub qpc_n_max: usize,
    pub qpc_m_max: usize,
    pub spacings: Vec<f64>,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.distances.is_empty() {
            return Err(Error::InvalidParams("sweep grid has no distances".into()));
        }
        if let Some(n) = self
            .n_segment_options
            .iter()
            .find(|n| !n.is_power_of_two() || **n > crate::twoway::MAX_SEGMENTS)
        {
            return Err(Error::InvalidParams(format!("segment option {n} invalid")));
        }
        if let Some(m) = self
            .channel_options
            .iter()
            .find(|m| **m == 0 || **m > crate::twoway::MAX_CHANNELS)
        {
            return Err(Error::InvalidParams(format!("channel option {m} invalid")));
        }
        if self.qpc_n_max > crate::oneway::MAX_BLOCKS
            || self.qpc_m_max > crate::oneway::MAX_BLOCK_SIZE
        {
            return Err(Error::InvalidParams(
                "QPC bounds exceed n <= 70, m <= 20".into(),
            ));
        }
        if let Some(s) = self
            .spacings
            .iter()
            .find(|s| !(crate::oneway::MIN_SPACING..=crate::oneway::MAX_SPACING).contains(*s))
        {
            return Err(Error::InvalidParams(format!(
                "spacing {s} outside [1, 4] km"
            )));
        }
        Ok(())
    }

    /// Candidate configurations for `arch`, smallest resource use first.
    pub fn configs(&self, arch: ArchitectureSpec) -> Vec<ArchConfig> {
        let mut out = Vec::new();
        match arch {
            ArchitectureSpec::Mtp(_) | ArchitectureSpec::TwoGnc => {
                let mut channels = self.channel_options.clone();
                channels.sort_unstable();
                channels.dedup();
                let mut segments = self.n_segment_options.clone();
                segments.sort_unstable();
                segments.dedup();
                for &m in &channels {
                    for &n in &segments {
                        out.push(ArchConfig::Chain {
                            n_segments: n,
                            channels: m,
                        });
                    }
                }
            }
            ArchitectureSpec::Qpc => {
                let mut spacings = self.spacings.clone();
                spacings.sort_by(|a, b| b.total_cmp(a));
                spacings.dedup();
                let mut codes: Vec<QpcCode> = (1..=self.qpc_n_max)
                    .flat_map(|n| (1..=self.qpc_m_max).map(move |m| (n, m)))
                    .map(|(n, m)| QpcCode {
                        n_blocks: n,
                        m_per_block: m,
                    })
                    .collect();
                codes.sort_by_key(|c| (c.photons(), c.n_blocks, c.m_per_block));
                for code in codes {
                    for &spacing in &spacings {
                        out.push(ArchConfig::Qpc { code, spacing });
                    }
                }
            }
        }
        out
    }
}

/// Which evaluator a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArchitectureSpec {
    Mtp(DecisionRule),
    TwoGnc,
    Qpc,
}

impl ArchitectureSpec {
    pub fn architecture(&self) -> Architecture {
        match self {
            ArchitectureSpec::Mtp(_) => Architecture::Mtp,
            ArchitectureSpec::TwoGnc => Architecture::TwoGnc,
            ArchitectureSpec::Qpc => Architecture::Qpc,
        }
    }

    pub fn rule(&self) -> Option<DecisionRule> {
        match self {
            ArchitectureSpec::Mtp(r) => Some(*r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArchConfig {
    Chain { n_segments: usize, channels: usize },
    Qpc { code: QpcCode, spacing: f64 },
}

impl fmt::Display for ArchConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArchConfig::Chain {
                n_segments,
                channels,
            } => write!(f, "N={n_segments} M={channels}"),
            ArchConfig::Qpc { code, spacing } => write!(
                f,
                "n={} m={} spacing={spacing}",
                code.n_blocks, code.m_per_block
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    MaxSkrPerChannelUse,
    MinQubitsPerKey,
}

impl Objective {
    pub fn label(&self) -> &'static str {
        match self {
            Objective::MaxSkrPerChannelUse => "max_skr_per_channel_use",
            Objective::MinQubitsPerKey => "min_qubits_per_unit_key",
        }
    }

    /// Metric of a report under this objective; `None` when undefined.
    pub fn metric(&self, r: &RunReport) -> Option<f64> {
        match self {
            Objective::MaxSkrPerChannelUse => Some(r.skr_per_channel_use_per_burst),
            Objective::MinQubitsPerKey => r.costs.per_key.map(|k| k.qubits),
        }
    }

    fn better(&self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Objective::MaxSkrPerChannelUse => candidate > incumbent,
            Objective::MinQubitsPerKey => candidate < incumbent,
        }
    }
}

/// Builds the evaluator inputs for one configuration at one distance.
pub fn evaluate_config(
    arch: ArchitectureSpec,
    config: &ArchConfig,
    distance: f64,
    physics: &Physics,
    logical_error_coeff: f64,
) -> Result<RunReport> {
    match (arch, config) {
        (
            ArchitectureSpec::Mtp(rule),
            ArchConfig::Chain {
                n_segments,
                channels,
            },
        ) => evaluate_mtp(
            &ChainParams::new(physics.clone(), distance, *n_segments, *channels),
            rule,
        ),
        (
            ArchitectureSpec::TwoGnc,
            ArchConfig::Chain {
                n_segments,
                channels,
            },
        ) => evaluate_2gnc(&ChainParams::new(
            physics.clone(),
            distance,
            *n_segments,
            *channels,
        )),
        (ArchitectureSpec::Qpc, ArchConfig::Qpc { code, spacing }) => {
            let mut p = OnewayParams::new(*code, *spacing, distance, physics.clone());
            p.logical_error_coeff = logical_error_coeff;
            oneway_skr(&p)
        }
        _ => Err(Error::InvalidParams(format!(
            "config {config} does not match architecture {:?}",
            arch.architecture()
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Best {
    pub config: ArchConfig,
    pub metric: f64,
    pub report: RunReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePoint {
    pub distance: f64,
    pub architecture: ArchitectureSpec,
    pub objective: Objective,
    pub best: Option<Best>,
    /// Why no configuration qualified.
    pub reason: Option<String>,
}

impl EnvelopePoint {
    pub fn metric(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.metric)
    }
}

/// Best configuration per distance. Evaluation runs in parallel; selection
/// walks the configurations in resource order and only replaces the
/// incumbent on strict improvement, so ties go to the cheaper config.
pub fn envelope(
    arch: ArchitectureSpec,
    grid: &SweepGrid,
    physics: &Physics,
    logical_error_coeff: f64,
    objective: Objective,
) -> Result<Vec<EnvelopePoint>> {
    grid.validate()?;
    let configs = grid.configs(arch);
    if configs.is_empty() {
        return Err(Error::InvalidParams(
            "sweep grid has no configurations".into(),
        ));
    }
    grid.distances
        .iter()
        .map(|&distance| {
            let evaluated: Vec<Option<RunReport>> = configs
                .par_iter()
                .map(|c| evaluate_config(arch, c, distance, physics, logical_error_coeff).ok())
                .collect();
            let mut best: Option<Best> = None;
            for (config, report) in configs.iter().zip(evaluated) {
                let Some(report) = report else { continue };
                let Some(metric) = objective.metric(&report) else {
                    continue;
                };
                if best
                    .as_ref()
                    .is_none_or(|b| objective.better(metric, b.metric))
                {
                    best = Some(Best {
                        config: *config,
                        metric,
                        report,
                    });
                }
            }
            let reason = best
                .is_none()
                .then(|| "no feasible configuration with a defined metric".to_string());
            Ok(EnvelopePoint {
                distance,
                architecture: arch,
                objective,
                best,
                reason,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceRow {
    pub distance: f64,
    /// `a / b`; infinite when only `a` is positive, 1 when both are zero.
    pub ratio: f64,
    pub a_config: Option<ArchConfig>,
    pub b_config: Option<ArchConfig>,
    pub a_metric: Option<f64>,
    pub b_metric: Option<f64>,
}

impl DominanceRow {
    pub fn violated(&self) -> bool {
        self.ratio < 1.0
    }

    pub fn strict(&self) -> bool {
        self.ratio > 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub rows: Vec<DominanceRow>,
}

impl DominanceReport {
    pub fn violations(&self) -> impl Iterator<Item = &DominanceRow> {
        self.rows.iter().filter(|r| r.violated())
    }

    pub fn strict_fraction(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.strict()).count() as f64 / self.rows.len() as f64
    }

    pub fn summary(&self) -> String {
        let v: Vec<String> = self
            .violations()
            .map(|r| {
                format!(
                    "{} km: {} vs {} (ratio {})",
                    r.distance,
                    r.a_config.map_or("-".into(), |c| c.to_string()),
                    r.b_config.map_or("-".into(), |c| c.to_string()),
                    r.ratio
                )
            })
            .collect();
        format!(
            "{} points, {} violations, {:.1}% strict{}{}",
            self.rows.len(),
            v.len(),
            100.0 * self.strict_fraction(),
            if v.is_empty() { "" } else { ": " },
            v.join("; ")
        )
    }
}

/// Pointwise comparison of two maximization envelopes on the same distances.
pub fn dominance_report(a: &[EnvelopePoint], b: &[EnvelopePoint]) -> Result<DominanceReport> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.distance != y.distance) {
        return Err(Error::Misaligned(format!(
            "{:?} vs {:?}",
            a.iter().map(|p| p.distance).collect::<Vec<_>>(),
            b.iter().map(|p| p.distance).collect::<Vec<_>>()
        )));
    }
    let rows = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let (am, bm) = (x.metric().unwrap_or(0.0), y.metric().unwrap_or(0.0));
            let ratio = if bm > 0.0 {
                am / bm
            } else if am > 0.0 {
                f64::INFINITY
            } else {
                1.0
            };
            DominanceRow {
                distance: x.distance,
                ratio,
                a_config: x.best.as_ref().map(|b| b.config),
                b_config: y.best.as_ref().map(|b| b.config),
                a_metric: x.metric(),
                b_metric: y.metric(),
            }
        })
        .collect();
    Ok(DominanceReport { rows })
}
