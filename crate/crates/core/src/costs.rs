//! Resource accounting: repeaters, qubits, two-qubit gates and measurements,
//! raw per burst and normalized per unit of secret key.
//!
//! Gate and measurement counts are expectations over the burst. Levels a
//! burst never reaches contribute nothing; levels completed before a reset
//! still count.

use crate::pmf::{swap_pmf, Recursion};

/// Normalized counters; absent when the secret-key rate is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerKey {
    pub repeaters: f64,
    pub qubits: f64,
    pub two_qubit_gates: f64,
    pub measurements: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostReport {
    pub repeaters: u64,
    pub qubits_per_burst: u64,
    pub two_qubit_gates: f64,
    pub measurements: f64,
    pub per_key: Option<PerKey>,
}

impl CostReport {
    pub fn raw(
        repeaters: u64,
        qubits_per_burst: u64,
        two_qubit_gates: f64,
        measurements: f64,
    ) -> Self {
        Self {
            repeaters,
            qubits_per_burst,
            two_qubit_gates,
            measurements,
            per_key: None,
        }
    }

    /// True when the key rate was zero and normalization was skipped.
    pub fn infinite_per_key(&self) -> bool {
        self.per_key.is_none()
    }
}

/// Two memories per channel at each interior repeater and one per channel at
/// each end node.
pub fn chain_qubits(channels: usize, n_segments: usize) -> u64 {
    let m = channels as u64;
    2 * m * (n_segments as u64 - 1) + 2 * m
}

/// Expected operations of a completed recursion. Each DEJMPS attempt and each
/// swap is one two-qubit gate and two measurements.
pub fn mtp_costs(rec: &Recursion, channels: usize) -> CostReport {
    let setup = &rec.setup;
    let depth = setup.depth();
    let mut gates = 0.0;
    for (level, lv) in rec.levels.iter().enumerate() {
        let alive = rec.profile.survival[level];
        let segments = setup.segments_at(level) as f64;
        if lv.distilled {
            let attempts: f64 = lv
                .survived
                .probs()
                .iter()
                .enumerate()
                .map(|(k, p)| (k / 2) as f64 * p)
                .sum();
            gates += alive * attempts * segments;
        }
        if level < depth {
            let swaps = swap_pmf(&lv.after_distill).mean();
            gates += alive * swaps * segments / 2.0;
        }
    }
    CostReport::raw(
        (setup.n_segments - 1) as u64,
        chain_qubits(channels, setup.n_segments),
        gates,
        2.0 * gates,
    )
}

/// One swap per interior repeater on the single retained pair, executed when
/// every segment heralded.
pub fn twognc_costs(channels: usize, pi0: f64, n_segments: usize) -> CostReport {
    let success = crate::pmf::two_gnc_success(channels, pi0, n_segments);
    let gates = (n_segments - 1) as f64 * success;
    CostReport::raw(
        (n_segments - 1) as u64,
        chain_qubits(channels, n_segments),
        gates,
        2.0 * gates,
    )
}

pub fn normalize_per_secret_key(c: &CostReport, skr_per_burst: f64) -> CostReport {
    let per_key = (skr_per_burst > 0.0).then(|| PerKey {
        repeaters: c.repeaters as f64 / skr_per_burst,
        qubits: c.qubits_per_burst as f64 / skr_per_burst,
        two_qubit_gates: c.two_qubit_gates / skr_per_burst,
        measurements: c.measurements / skr_per_burst,
    });
    CostReport { per_key, ..*c }
}
