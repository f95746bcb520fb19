use std::fmt;

use crate::bellstate::BellDiagState;
use crate::costs::CostReport;
use crate::pmf::ResetProfile;
use crate::policy::Schedule;
use crate::twoway::TimingModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Architecture {
    Mtp,
    TwoGnc,
    Qpc,
}

impl Architecture {
    pub fn label(&self) -> &'static str {
        match self {
            Architecture::Mtp => "mtp",
            Architecture::TwoGnc => "2gnc",
            Architecture::Qpc => "qpc",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// End-to-end metrics for one evaluated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub architecture: Architecture,
    pub channels: usize,
    pub expected_pairs_end_to_end: f64,
    pub final_state: BellDiagState,
    pub secret_fraction: f64,
    pub skr_per_burst: f64,
    pub skr_per_channel_use_per_burst: f64,
    pub reset_profile: Option<ResetProfile>,
    pub schedule: Option<Schedule>,
    pub timing: Option<TimingModel>,
    pub costs: CostReport,
}

impl RunReport {
    /// Secret bits per second at the given burst rate.
    pub fn skr_per_second(&self, source_rate: f64) -> f64 {
        self.skr_per_burst * source_rate
    }
}
