//! Engine-versus-oracle checks. Each check returns a [`Criterion`] with the
//! measured value, the pinned tolerance and a short detail string.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bellstate::{dejmps, swap, BellDiagState, NoiseParams};
use crate::densitymatrix::{bell_populations, dejmps_reference, swap_reference};
use crate::error::Result;
use crate::mcoracle::{estimate_pmf, RngSeed};
use crate::oneway::{qpc_success_prob, QpcCode};
use crate::optimizer::{dominance_report, envelope, ArchitectureSpec, Objective, SweepGrid};
use crate::pmf::{
    link_success_prob, min_over_segments_expectation, run_recursion, two_gnc_success, BurstSetup,
    Pmf,
};
use crate::policy::{schedule_halvings, DecisionRule, Schedule};
use crate::twoway::{evaluate_mtp, evaluate_mtp_with_schedule, state_walk, ChainParams, Physics};

pub const EXACT_TOL: f64 = 1e-12;
pub const MC_TV_TOL: f64 = 0.01;
pub const MC_SIGMAS: f64 = 3.0;
pub const RELAY_MC_REL_TOL: f64 = 0.01;
pub const RELAY_MC_TRIALS: u64 = 100_000;
pub const BELL_TOL: f64 = 1e-10;
pub const DOMINANCE_STRICT_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
    pub elapsed: Duration,
    pub time_limit: Duration,
}

impl Criterion {
    pub fn within_time(&self) -> bool {
        self.elapsed <= self.time_limit
    }

    pub fn ok(&self) -> bool {
        self.passed && self.within_time()
    }
}

fn timed(
    name: &'static str,
    tolerance: f64,
    time_limit: Duration,
    f: impl FnOnce() -> Result<(bool, f64, String)>,
) -> Criterion {
    let start = Instant::now();
    let (passed, value, detail) = f().unwrap_or_else(|e| (false, f64::NAN, format!("error: {e}")));
    Criterion {
        name,
        passed,
        value,
        tolerance,
        detail,
        elapsed: start.elapsed(),
        time_limit,
    }
}

/// Probability of each link pattern's successes per segment.
fn link_patterns(m: usize, n: usize, pi0: f64) -> impl Iterator<Item = (Vec<usize>, f64)> {
    (0u64..1 << (m * n)).map(move |mask| {
        let counts: Vec<usize> = (0..n)
            .map(|s| ((mask >> (s * m)) & ((1 << m) - 1)).count_ones() as usize)
            .collect();
        let ok = mask.count_ones() as i32;
        let prob = pi0.powi(ok) * (1.0 - pi0).powi((m * n) as i32 - ok);
        (counts, prob)
    })
}

/// `P(every segment has at least one link)` by listing every pattern.
pub fn enumerate_2gnc_success(m: usize, n: usize, pi0: f64) -> f64 {
    link_patterns(m, n, pi0)
        .filter(|(c, _)| c.iter().all(|x| *x >= 1))
        .map(|(_, p)| p)
        .sum()
}

pub fn check_2gnc_enumeration() -> Criterion {
    timed(
        "2gnc-success-enumeration",
        EXACT_TOL,
        Duration::from_secs(1),
        || {
            let mut worst: f64 = 0.0;
            for m in 1..=4 {
                for n in 1..=3 {
                    for pi0 in [0.1, 0.5, 0.9] {
                        let diff =
                            (two_gnc_success(m, pi0, n) - enumerate_2gnc_success(m, n, pi0)).abs();
                        worst = worst.max(diff);
                    }
                }
            }
            Ok((
                worst <= EXACT_TOL,
                worst,
                "M<=4, N<=3, pi0 in {0.1,0.5,0.9}".into(),
            ))
        },
    )
}

/// Delivered-pair PMF (aborted bursts at zero) and per-level reset
/// probabilities, by listing every link pattern and distillation outcome.
pub fn enumerate_burst(
    setup: &BurstSetup,
    sched: &Schedule,
    d_probs: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut delivered = vec![0.0; setup.channels + 1];
    let mut resets = vec![0.0; sched.levels()];
    for (counts, p) in link_patterns(setup.channels, setup.n_segments, setup.pi0) {
        walk(&counts, 0, p, sched, d_probs, &mut delivered, &mut resets);
    }
    delivered[0] += resets.iter().sum::<f64>();
    (delivered, resets)
}

fn walk(
    counts: &[usize],
    level: usize,
    prob: f64,
    sched: &Schedule,
    d_probs: &[f64],
    delivered: &mut [f64],
    resets: &mut [f64],
) {
    if prob == 0.0 {
        return;
    }
    if counts.iter().any(|c| *c < sched.thresholds()[level]) {
        resets[level] += prob;
        return;
    }
    let mut branches = vec![(counts.to_vec(), prob)];
    if sched.distill()[level] {
        let d = d_probs[level];
        let attempts: Vec<usize> = counts.iter().map(|c| c / 2).collect();
        let total: usize = attempts.iter().sum();
        branches = (0u64..1 << total)
            .map(|mask| {
                let mut offset = 0;
                let next: Vec<usize> = attempts
                    .iter()
                    .map(|a| {
                        let bits = (mask >> offset) & ((1 << a) - 1);
                        offset += a;
                        bits.count_ones() as usize
                    })
                    .collect();
                let ok = mask.count_ones() as i32;
                (next, prob * d.powi(ok) * (1.0 - d).powi(total as i32 - ok))
            })
            .collect();
    }
    for (c, p) in branches {
        if level + 1 == sched.levels() {
            delivered[c[0]] += p;
        } else {
            let swapped: Vec<usize> = c.chunks_exact(2).map(|x| x[0].min(x[1])).collect();
            walk(&swapped, level + 1, p, sched, d_probs, delivered, resets);
        }
    }
}

pub fn check_recursion_enumeration() -> Criterion {
    timed(
        "recursion-vs-enumeration",
        EXACT_TOL,
        Duration::from_secs(1),
        || {
            let mut worst: f64 = 0.0;
            let cases = [
                (2, 2, vec![false, false]),
                (2, 2, vec![true, false]),
                (2, 4, vec![true, false, false]),
                (3, 4, vec![false, true, false]),
            ];
            for (m, n, distill) in cases {
                let setup = BurstSetup::new(m, 0.5, n)?;
                let sched = Schedule::with_default_thresholds(distill)?;
                let d_probs = vec![0.8, 0.7, 0.6];
                let rec = run_recursion(&setup, &sched, &d_probs)?;
                let (pmf, resets) = enumerate_burst(&setup, &sched, &d_probs);
                for (a, b) in rec.delivered_pmf().probs().iter().zip(&pmf) {
                    worst = worst.max((a - b).abs());
                }
                for (a, b) in rec.profile.f.iter().zip(&resets) {
                    worst = worst.max((a - b).abs());
                }
            }
            Ok((
                worst <= EXACT_TOL,
                worst,
                "N=2 M=2 pi0=0.5 with and without level-0 distillation, plus two N=4 cases".into(),
            ))
        },
    )
}

/// Configurations for the Monte Carlo comparison: `(N, M, pi0, schedule)`.
pub fn mc_configs() -> Vec<(usize, usize, f64, Vec<bool>)> {
    vec![
        (4, 8, 0.3, vec![false, false, false]),
        (4, 16, 0.5, vec![true, false, false]),
        (8, 8, 0.5, vec![true, false, false, false]),
        (8, 16, 0.3, vec![false, true, false, false]),
        (4, 16, 0.3, vec![true, true, false]),
        (8, 16, 0.5, vec![true, true, false, false]),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct McComparison {
    pub total_variation: f64,
    /// Largest `|f_analytic - f_empirical| / se` over levels.
    pub worst_reset_sigmas: f64,
    pub mean_sigmas: f64,
}

pub fn compare_with_mc(
    n: usize,
    m: usize,
    pi0: f64,
    distill: Vec<bool>,
    trials: u64,
    seed: u64,
) -> Result<McComparison> {
    let sched = Schedule::with_default_thresholds(distill)?;
    let mut params = ChainParams::new(Physics::default(), 25.0 * n as f64, n, m);
    params.pi0_override = Some(pi0);
    let (_, d_probs) = state_walk(&params, &sched)?;
    let setup = BurstSetup::new(m, pi0, n)?;
    let rec = run_recursion(&setup, &sched, &d_probs)?;
    let est = estimate_pmf(&setup, &sched, &d_probs, trials, RngSeed(seed));
    let analytic = rec.delivered_pmf();
    let total_variation = analytic.total_variation(&Pmf::new(est.pmf.clone())?);
    let mut worst: f64 = 0.0;
    let t = trials as f64;
    for (f, emp) in rec.profile.f.iter().zip(&est.abort_rates) {
        let se = (f * (1.0 - f) / t).sqrt();
        let diff = (f - emp).abs();
        let sigmas = if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(sigmas);
    }
    let mean_sigmas = if est.mean_std_error > 0.0 {
        (analytic.mean() - est.mean).abs() / est.mean_std_error
    } else if analytic.mean() == est.mean {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(McComparison {
        total_variation,
        worst_reset_sigmas: worst,
        mean_sigmas,
    })
}

pub fn check_recursion_mc(trials: u64, seed: u64) -> Criterion {
    timed(
        "recursion-vs-monte-carlo",
        MC_TV_TOL,
        Duration::from_secs(300),
        || {
            let mut worst_tv: f64 = 0.0;
            let mut worst_sig: f64 = 0.0;
            let mut worst_mean: f64 = 0.0;
            for (i, (n, m, pi0, d)) in mc_configs().into_iter().enumerate() {
                let c = compare_with_mc(n, m, pi0, d, trials, seed.wrapping_add(i as u64))?;
                worst_tv = worst_tv.max(c.total_variation);
                worst_sig = worst_sig.max(c.worst_reset_sigmas);
                worst_mean = worst_mean.max(c.mean_sigmas);
            }
            Ok((
            worst_tv < MC_TV_TOL && worst_sig <= MC_SIGMAS,
            worst_tv,
            format!(
                "{trials} trials; max reset deviation {worst_sig:.3} se; max mean deviation {worst_mean:.3} se"
            ),
        ))
        },
    )
}

pub fn check_relay_properties(physics: &Physics, seed: u64) -> Criterion {
    timed(
        "relay-expectation-properties",
        RELAY_MC_REL_TOL,
        Duration::from_secs(120),
        || {
            let spacings = [1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0];
            let mut decreasing = true;
            let mut bounded = true;
            for m in [128usize, 256] {
                for &s in &spacings {
                    let pi0 = link_success_prob(s, physics.eta_c, physics.l_att)?;
                    let bound = m as f64 * pi0;
                    let mut last = f64::INFINITY;
                    for n in (2..=64).step_by(2) {
                        let e = min_over_segments_expectation(m, pi0, n);
                        decreasing &= e < last;
                        bounded &= e <= bound;
                        last = e;
                    }
                }
            }
            let spots = [(128usize, 8usize, 10.0), (256, 32, 20.0), (128, 64, 2.0)];
            let mut worst_rel: f64 = 0.0;
            for (i, (m, n, s)) in spots.into_iter().enumerate() {
                let pi0 = link_success_prob(s, physics.eta_c, physics.l_att)?;
                let setup = BurstSetup::new(m, pi0, n)?;
                let sched = Schedule::all_zero(setup.depth());
                let est = estimate_pmf(
                    &setup,
                    &sched,
                    &vec![1.0; setup.depth() + 1],
                    RELAY_MC_TRIALS,
                    RngSeed(seed.wrapping_add(100 + i as u64)),
                );
                let exact = min_over_segments_expectation(m, pi0, n);
                worst_rel = worst_rel.max((est.mean - exact).abs() / exact);
            }
            Ok((
                decreasing && bounded && worst_rel <= RELAY_MC_REL_TOL,
                worst_rel,
                format!("strictly decreasing: {decreasing}; below M*pi0: {bounded}"),
            ))
        },
    )
}

fn random_bell(rng: &mut ChaCha8Rng) -> BellDiagState {
    let raw: [f64; 4] = std::array::from_fn(|_| -rng.random::<f64>().max(1e-300).ln());
    let s: f64 = raw.iter().sum();
    BellDiagState::new(raw.map(|x| x / s)).expect("normalized")
}

pub fn check_bell_algebra(seed: u64) -> Criterion {
    timed(
        "bell-algebra-density-matrix",
        BELL_TOL,
        Duration::from_secs(30),
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs: Vec<(BellDiagState, BellDiagState)> = (0..100)
                .map(|_| (random_bell(&mut rng), random_bell(&mut rng)))
                .collect();
            let noiseless = NoiseParams::noiseless();
            let worst = pairs
                .par_iter()
                .map(|(a, b)| -> Result<f64> {
                    let (pops, off) = bell_populations(&swap_reference(a, b));
                    let mut w = off;
                    for (x, y) in pops.iter().zip(swap(a, b, &noiseless).coeffs()) {
                        w = w.max((x - y).abs());
                    }
                    let (p, rho) = dejmps_reference(a, b);
                    let d = dejmps(a, b, &noiseless)?;
                    let (pops, off) = bell_populations(&rho);
                    w = w.max(off).max((p - d.success_prob).abs());
                    for (x, y) in pops.iter().zip(d.state.coeffs()) {
                        w = w.max((x - y).abs());
                    }
                    Ok(w)
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            let mut improves = true;
            for f in [0.6, 0.7, 0.8, 0.9] {
                let w = BellDiagState::from_depolarized_fidelity(f)?;
                improves &= dejmps(&w, &w, &noiseless)?.state.fidelity() > f;
            }
            Ok((
                worst <= BELL_TOL && improves,
                worst,
                format!("100 random pairs; Werner improvement at F=0.6..0.9: {improves}"),
            ))
        },
    )
}

/// Success probability over all `2^(n m)` photon-loss patterns.
pub fn enumerate_qpc_success(code: QpcCode, eta: f64) -> f64 {
    let (n, m) = (code.n_blocks, code.m_per_block);
    let block = (1u64 << m) - 1;
    (0u64..1 << (n * m))
        .filter(|mask| {
            let blocks: Vec<u64> = (0..n).map(|b| (mask >> (b * m)) & block).collect();
            !blocks.contains(&0) && blocks.contains(&block)
        })
        .map(|mask| {
            let arrived = mask.count_ones() as i32;
            eta.powi(arrived) * (1.0 - eta).powi((n * m) as i32 - arrived)
        })
        .sum()
}

pub fn check_qpc_enumeration() -> Criterion {
    timed(
        "qpc-erasure-enumeration",
        EXACT_TOL,
        Duration::from_secs(10),
        || {
            let mut worst: f64 = 0.0;
            for n in 1..=3 {
                for m in 1..=3 {
                    let code = QpcCode::new(n, m)?;
                    for eta in [0.5, 0.9, 0.99] {
                        worst = worst.max(
                            (qpc_success_prob(code, eta) - enumerate_qpc_success(code, eta)).abs(),
                        );
                    }
                }
            }
            Ok((
                worst <= EXACT_TOL,
                worst,
                "n, m <= 3; eta in {0.5,0.9,0.99}".into(),
            ))
        },
    )
}

pub fn dominance_grid() -> SweepGrid {
    SweepGrid {
        distances: vec![50.0, 100.0, 200.0, 500.0],
        n_segment_options: vec![1, 2, 4, 8, 16, 32, 64],
        channel_options: (1..=256).collect(),
        qpc_n_max: 1,
        qpc_m_max: 1,
        spacings: vec![1.0],
    }
}

pub fn check_dominance() -> Criterion {
    timed(
        "mtp-dominates-2gnc",
        DOMINANCE_STRICT_FRACTION,
        Duration::from_secs(1800),
        || {
            let grid = dominance_grid();
            let mut rows = Vec::new();
            let mut notes = Vec::new();
            for eta_c in [1.0, 0.9] {
                for eps_g in [1e-4, 1e-3] {
                    let physics = Physics {
                        eta_c,
                        eps_g,
                        ..Physics::default()
                    };
                    let obj = Objective::MaxSkrPerChannelUse;
                    let mtp = envelope(
                        ArchitectureSpec::Mtp(DecisionRule::Skr),
                        &grid,
                        &physics,
                        1.0,
                        obj,
                    )?;
                    let gnc = envelope(ArchitectureSpec::TwoGnc, &grid, &physics, 1.0, obj)?;
                    let rep = dominance_report(&mtp, &gnc)?;
                    if rep.violations().count() > 0 {
                        notes.push(format!("eta_c={eta_c} eps_g={eps_g}: {}", rep.summary()));
                    }
                    rows.extend(rep.rows);
                }
            }
            let violations = rows.iter().filter(|r| r.violated()).count();
            let strict = rows.iter().filter(|r| r.strict()).count() as f64 / rows.len() as f64;
            let detail = if notes.is_empty() {
                format!("{} points, 0 violations", rows.len())
            } else {
                notes.join(" | ")
            };
            Ok((
                violations == 0 && strict >= DOMINANCE_STRICT_FRACTION,
                strict,
                detail,
            ))
        },
    )
}

pub fn check_perfect_chain() -> Criterion {
    timed(
        "perfect-chain-identities",
        0.0,
        Duration::from_secs(10),
        || {
            let physics = Physics {
                eta_c: 1.0,
                eps_g: 0.0,
                xi: Some(0.0),
                decoherence: false,
                ..Physics::default()
            };
            let mut worst: f64 = 0.0;
            let mut cases = 0;
            for n in [1usize, 2, 4, 8, 16, 32, 64] {
                let depth = n.trailing_zeros() as usize;
                for m in [1usize, 4, 64, 256] {
                    let mut params = ChainParams::new(physics.clone(), 10.0 * n as f64, n, m);
                    params.pi0_override = Some(1.0);
                    let mut reports = vec![evaluate_mtp(&params, DecisionRule::Skr)?];
                    for bits in 0u32..1 << (depth + 1) {
                        let distill: Vec<bool> = (0..=depth).map(|i| bits >> i & 1 == 1).collect();
                        let Ok(sched) = Schedule::with_default_thresholds(distill) else {
                            continue;
                        };
                        if sched.check_feasible(m).is_err() {
                            continue;
                        }
                        reports.push(evaluate_mtp_with_schedule(&params, &sched)?);
                    }
                    for r in reports {
                        let sched = r.schedule.as_ref().expect("mtp report has a schedule");
                        let expected = (m >> schedule_halvings(sched)) as f64;
                        worst = worst
                            .max((r.skr_per_burst - expected).abs())
                            .max((r.final_state.fidelity() - 1.0).abs());
                        if let Some(p) = &r.reset_profile {
                            worst = p.f.iter().fold(worst, |w, f| w.max(f.abs()));
                        }
                        cases += 1;
                    }
                }
            }
            Ok((worst == 0.0, worst, format!("{cases} chains and schedules")))
        },
    )
}

/// Every numerical criterion, in a fixed order.
pub fn run_suite(seed: u64, trials: u64) -> Vec<Criterion> {
    vec![
        check_2gnc_enumeration(),
        check_recursion_enumeration(),
        check_recursion_mc(trials, seed),
        check_relay_properties(&Physics::default(), seed),
        check_bell_algebra(seed),
        check_qpc_enumeration(),
        check_dominance(),
        check_perfect_chain(),
    ]
}
