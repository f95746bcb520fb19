//! Monte Carlo burst simulator used to cross-check the analytic recursion.
//!
//! Samples the same stochastic process directly: per-segment binomial link
//! generation, a reset check at every level, independent DEJMPS attempts on
//! disjoint couples, and swaps that keep the smaller sibling count.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::pmf::BurstSetup;
use crate::policy::Schedule;

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSeed(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub delivered_pairs: usize,
    pub aborted_at_level: Option<usize>,
    pub gates_used: u64,
    pub measurements_used: u64,
}

fn binomial<R: Rng>(n: usize, p: f64, rng: &mut R) -> usize {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n as u64, p)
        .expect("valid binomial parameters")
        .sample(rng) as usize
}

/// One burst through all levels.
#[allow(clippy::needless_range_loop)]
pub fn simulate_burst<R: Rng>(
    setup: &BurstSetup,
    sched: &Schedule,
    d_probs: &[f64],
    rng: &mut R,
) -> TrialOutcome {
    let mut counts: Vec<usize> = (0..setup.n_segments)
        .map(|_| binomial(setup.channels, setup.pi0, rng))
        .collect();
    let mut gates = 0u64;
    let depth = sched.levels() - 1;
    for level in 0..=depth {
        let threshold = sched.thresholds()[level];
        if counts.iter().any(|c| *c < threshold) {
            return TrialOutcome {
                delivered_pairs: 0,
                aborted_at_level: Some(level),
                gates_used: gates,
                measurements_used: 2 * gates,
            };
        }
        if sched.distill()[level] {
            for c in counts.iter_mut() {
                let attempts = *c / 2;
                gates += attempts as u64;
                *c = binomial(attempts, d_probs[level], rng);
            }
        }
        if level < depth {
            counts = counts
                .chunks_exact(2)
                .map(|pair| {
                    let swapped = pair[0].min(pair[1]);
                    gates += swapped as u64;
                    swapped
                })
                .collect();
        }
    }
    TrialOutcome {
        delivered_pairs: counts[0],
        aborted_at_level: None,
        gates_used: gates,
        measurements_used: 2 * gates,
    }
}

pub fn simulate_burst_seeded(
    setup: &BurstSetup,
    sched: &Schedule,
    d_probs: &[f64],
    seed: RngSeed,
) -> TrialOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    simulate_burst(setup, sched, d_probs, &mut rng)
}

/// Aggregated trial statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PmfEstimate {
    pub trials: u64,
    /// Empirical distribution of delivered pairs, aborted bursts at 0.
    pub pmf: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Empirical frequency of resets at each level.
    pub abort_rates: Vec<f64>,
    pub abort_std_errors: Vec<f64>,
    pub mean: f64,
    pub mean_std_error: f64,
    pub mean_gates: f64,
}

#[derive(Debug, Clone, Default)]
struct Tally {
    delivered: Vec<u64>,
    aborts: Vec<u64>,
    sum: f64,
    sum_sq: f64,
    gates: f64,
}

impl Tally {
    fn new(k_max: usize, levels: usize) -> Self {
        Self {
            delivered: vec![0; k_max + 1],
            aborts: vec![0; levels],
            ..Default::default()
        }
    }

    fn add(&mut self, t: &TrialOutcome) {
        self.delivered[t.delivered_pairs] += 1;
        if let Some(l) = t.aborted_at_level {
            self.aborts[l] += 1;
        }
        let x = t.delivered_pairs as f64;
        self.sum += x;
        self.sum_sq += x * x;
        self.gates += t.gates_used as f64;
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.delivered.iter_mut().zip(&other.delivered) {
            *a += b;
        }
        for (a, b) in self.aborts.iter_mut().zip(&other.aborts) {
            *a += b;
        }
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.gates += other.gates;
        self
    }
}

/// Runs `trials` bursts. Trials are split into fixed-size chunks, each with
/// its own ChaCha stream keyed by the chunk index, so the result does not
/// depend on the worker count.
pub fn estimate_pmf(
    setup: &BurstSetup,
    sched: &Schedule,
    d_probs: &[f64],
    trials: u64,
    seed: RngSeed,
) -> PmfEstimate {
    assert!(trials >= 1, "need at least one trial");
    let levels = sched.levels();
    let k_max = setup.channels;
    let chunks = trials.div_ceil(CHUNK);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
            rng.set_stream(chunk);
            let n = CHUNK.min(trials - chunk * CHUNK);
            let mut tally = Tally::new(k_max, levels);
            for _ in 0..n {
                tally.add(&simulate_burst(setup, sched, d_probs, &mut rng));
            }
            tally
        })
        .collect();
    let total = tallies
        .into_iter()
        .fold(Tally::new(k_max, levels), Tally::merge);

    let n = trials as f64;
    let freq = |c: u64| c as f64 / n;
    let se = |p: f64| (p * (1.0 - p) / n).sqrt();
    let pmf: Vec<f64> = total.delivered.iter().map(|c| freq(*c)).collect();
    let abort_rates: Vec<f64> = total.aborts.iter().map(|c| freq(*c)).collect();
    let mean = total.sum / n;
    let var = (total.sum_sq / n - mean * mean).max(0.0);
    PmfEstimate {
        trials,
        std_errors: pmf.iter().map(|p| se(*p)).collect(),
        abort_std_errors: abort_rates.iter().map(|p| se(*p)).collect(),
        pmf,
        abort_rates,
        mean,
        mean_std_error: (var / n).sqrt(),
        mean_gates: total.gates / n,
    }
}

/// Writes one line per trial for debugging.
pub fn dump_trace<W: Write>(
    out: &mut W,
    setup: &BurstSetup,
    sched: &Schedule,
    d_probs: &[f64],
    trials: u64,
    seed: RngSeed,
) -> std::io::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    for i in 0..trials {
        let t = simulate_burst(setup, sched, d_probs, &mut rng);
        let aborted = t
            .aborted_at_level
            .map_or_else(|| "-".to_string(), |l| l.to_string());
        writeln!(
            out,
            "trial={i} delivered={} aborted={aborted} gates={} measurements={}",
            t.delivered_pairs, t.gates_used, t.measurements_used
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_process() {
        let setup = BurstSetup::new(16, 1.0, 8).unwrap();
        let sched = Schedule::with_default_thresholds(vec![true, false, true, false]).unwrap();
        for s in 0..20 {
            let t = simulate_burst_seeded(&setup, &sched, &[1.0; 4], RngSeed(s));
            assert_eq!(t.delivered_pairs, 4);
            assert_eq!(t.aborted_at_level, None);
        }
    }

    #[test]
    fn seed_reproduces_outcome() {
        let setup = BurstSetup::new(8, 0.4, 4).unwrap();
        let sched = Schedule::with_default_thresholds(vec![true, false, false]).unwrap();
        for s in 0..50 {
            let a = simulate_burst_seeded(&setup, &sched, &[0.6; 3], RngSeed(s));
            let b = simulate_burst_seeded(&setup, &sched, &[0.6; 3], RngSeed(s));
            assert_eq!(a, b);
            if a.aborted_at_level.is_some() {
                assert_eq!(a.delivered_pairs, 0);
            }
        }
    }

    #[test]
    fn single_trial_is_point_mass() {
        let setup = BurstSetup::new(8, 0.5, 4).unwrap();
        let est = estimate_pmf(&setup, &Schedule::all_zero(2), &[1.0; 3], 1, RngSeed(3));
        assert_eq!(est.pmf.iter().filter(|p| **p == 1.0).count(), 1);
    }

    #[test]
    fn lossless_estimate_is_exact() {
        let setup = BurstSetup::new(6, 1.0, 4).unwrap();
        let est = estimate_pmf(&setup, &Schedule::all_zero(2), &[1.0; 3], 1000, RngSeed(1));
        assert_eq!(est.pmf[6], 1.0);
        assert_eq!(est.mean, 6.0);
        assert_eq!(est.std_errors[6], 0.0);
    }

    #[test]
    fn standard_errors_shrink_with_trials() {
        let setup = BurstSetup::new(8, 0.5, 4).unwrap();
        let sched = Schedule::all_zero(2);
        let small = estimate_pmf(&setup, &sched, &[1.0; 3], 10_000, RngSeed(11));
        let large = estimate_pmf(&setup, &sched, &[1.0; 3], 1_000_000, RngSeed(11));
        let ratio = small.mean_std_error / large.mean_std_error;
        assert!((ratio - 10.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn estimate_is_seed_deterministic() {
        let setup = BurstSetup::new(8, 0.3, 8).unwrap();
        let sched = Schedule::all_zero(3);
        let a = estimate_pmf(&setup, &sched, &[1.0; 4], 50_000, RngSeed(9));
        let b = estimate_pmf(&setup, &sched, &[1.0; 4], 50_000, RngSeed(9));
        assert_eq!(a, b);
    }

    #[test]
    fn trace_lines() {
        let setup = BurstSetup::new(4, 0.5, 2).unwrap();
        let mut buf = Vec::new();
        dump_trace(
            &mut buf,
            &setup,
            &Schedule::all_zero(1),
            &[1.0; 2],
            3,
            RngSeed(1),
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("trial=0 delivered="));
    }
}
