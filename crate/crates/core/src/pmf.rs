//! Exact pair-count distributions across nesting levels.
//!
//! A segment at level `i` spans `2^i` elementary links. Each level runs
//! truncate (reset below `R_i`), then optionally one DEJMPS round, then
//! swaps siblings into the next level. Truncation conditions each segment on
//! its own no-reset event, so sibling segments stay independent and the
//! swap reduces to the minimum of two i.i.d. counts.

use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::policy::Schedule;

const NORM_TOL: f64 = 1e-9;

/// Probability mass function over pair counts `0..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Domain("empty PMF".into()));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::Domain("negative or NaN PMF entry".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::Domain(format!("PMF sums to {total}")));
        }
        Ok(Self { probs })
    }

    pub fn point_mass(k: usize, k_max: usize) -> Self {
        let mut probs = vec![0.0; k_max.max(k) + 1];
        probs[k] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn k_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn get(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    /// Sum of `k * p_k` over `k >= from`.
    pub fn partial_mean(&self, from: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .skip(from)
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Total-variation distance; the shorter vector is zero-padded.
    pub fn total_variation(&self, other: &Pmf) -> f64 {
        let n = self.probs.len().max(other.probs.len());
        0.5 * (0..n)
            .map(|k| (self.get(k) - other.get(k)).abs())
            .sum::<f64>()
    }
}

/// Binomial(n, p) mass function via log-space coefficients.
pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    if p <= 0.0 {
        return Pmf::point_mass(0, n).probs;
    }
    if p >= 1.0 {
        return Pmf::point_mass(n, n).probs;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    (0..=n)
        .map(|k| (ln_binomial(n as u64, k as u64) + k as f64 * lp + (n - k) as f64 * lq).exp())
        .collect()
}

/// Elementary-link pair count: Binomial(m, pi0).
pub fn elementary_pmf(m: usize, pi0: f64) -> Result<Pmf> {
    if m == 0 {
        return Err(Error::Domain("channel count must be at least 1".into()));
    }
    check_prob("pi0", pi0)?;
    Ok(Pmf {
        probs: binomial_pmf(m, pi0),
    })
}

/// Heralded success probability of one elementary-link attempt: both photons
/// cover `l0/2` of fiber, both couple, and the linear-optics BSA succeeds
/// with probability 1/2.
pub fn link_success_prob(l0: f64, eta_c: f64, l_att: f64) -> Result<f64> {
    if !(l0 > 0.0) || !(l_att > 0.0) {
        return Err(Error::Domain(format!(
            "lengths must be positive (l0 = {l0}, l_att = {l_att})"
        )));
    }
    if !(eta_c > 0.0 && eta_c <= 1.0) {
        return Err(Error::Domain(format!("eta_c = {eta_c} outside (0, 1]")));
    }
    Ok(0.5 * eta_c * eta_c * (-l0 / l_att).exp())
}

/// One DEJMPS round on every disjoint couple of pairs in a segment. Output
/// covers `0..=budget/2`.
pub fn distill_pmf(p: &Pmf, d: f64, budget: usize) -> Result<Pmf> {
    check_prob("distillation success", d)?;
    let out_max = budget / 2;
    let mut out = vec![0.0; out_max + 1];
    let mut attempts_cache: Vec<Option<Vec<f64>>> = vec![None; out_max + 1];
    for (j, &pj) in p.probs.iter().enumerate().take(budget + 1) {
        if pj == 0.0 {
            continue;
        }
        let attempts = j / 2;
        let dist = attempts_cache[attempts].get_or_insert_with(|| binomial_pmf(attempts, d));
        for (k, &b) in dist.iter().enumerate() {
            out[k] += pj * b;
        }
    }
    Ok(Pmf { probs: out })
}

/// Distribution of the minimum of two i.i.d. draws from `p`.
pub fn swap_pmf(p: &Pmf) -> Pmf {
    let n = p.probs.len();
    let mut out = vec![0.0; n];
    let mut tail = 0.0;
    for k in (0..n).rev() {
        let pk = p.probs[k];
        out[k] = pk * pk + 2.0 * pk * tail;
        tail += pk;
    }
    Pmf { probs: out }
}

/// Conditions on `count >= threshold`; returns the removed mass and the
/// renormalized remainder.
pub fn truncate_renormalize(p: &Pmf, threshold: usize) -> Result<(f64, Pmf)> {
    let cut = threshold.min(p.probs.len());
    let reset: f64 = p.probs[..cut].iter().sum();
    let kept: f64 = p.probs[cut..].iter().sum();
    if kept <= 0.0 {
        return Err(Error::CertainReset {
            level: 0,
            threshold,
        });
    }
    if cut == 0 {
        return Ok((0.0, p.clone()));
    }
    let mut probs = vec![0.0; p.probs.len()];
    for k in cut..p.probs.len() {
        probs[k] = p.probs[k] / kept;
    }
    Ok((reset.min(1.0), Pmf { probs }))
}

/// Protocol-level inputs for one burst.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstSetup {
    pub channels: usize,
    pub pi0: f64,
    pub n_segments: usize,
}

impl BurstSetup {
    pub fn new(channels: usize, pi0: f64, n_segments: usize) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidParams("channels must be at least 1".into()));
        }
        check_prob("pi0", pi0)?;
        if !n_segments.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "n_segments = {n_segments} is not a power of two"
            )));
        }
        Ok(Self {
            channels,
            pi0,
            n_segments,
        })
    }

    /// Nesting depth `n` with `N = 2^n`.
    pub fn depth(&self) -> usize {
        self.n_segments.trailing_zeros() as usize
    }

    pub fn segments_at(&self, level: usize) -> usize {
        self.n_segments >> level
    }
}

/// Conditional and unconditional reset probabilities per level.
#[derive(Debug, Clone, PartialEq)]
pub struct ResetProfile {
    /// Reset at level `i` given the burst reached level `i`, per segment.
    pub r: Vec<f64>,
    /// Unconditional probability that the burst resets at level `i`.
    pub f: Vec<f64>,
    /// Probability that no segment has reset through level `i`.
    pub survival: Vec<f64>,
}

impl ResetProfile {
    pub fn total_reset(&self) -> f64 {
        self.f.iter().sum()
    }
}

/// PMFs recorded at one nesting level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelPmfs {
    pub budget: usize,
    pub threshold: usize,
    pub distilled: bool,
    /// Pair count given no reset through this level.
    pub survived: Pmf,
    /// Pair count after this level's optional distillation round.
    pub after_distill: Pmf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recursion {
    pub setup: BurstSetup,
    pub levels: Vec<LevelPmfs>,
    pub profile: ResetProfile,
}

impl Recursion {
    pub fn final_level(&self) -> &LevelPmfs {
        self.levels
            .last()
            .expect("recursion has at least one level")
    }

    /// Delivered end-to-end pair count, with aborted bursts counted as zero.
    pub fn delivered_pmf(&self) -> Pmf {
        let survival = *self.profile.survival.last().unwrap();
        let last = &self.final_level().survived;
        let mut probs: Vec<f64> = last.probs.iter().map(|p| p * survival).collect();
        probs[0] += 1.0 - survival;
        Pmf { probs }
    }
}

/// Channel budget per level: `M_i = floor(M / 2^(D_0 + ... + D_{i-1}))`.
pub fn level_budgets(channels: usize, distill: &[bool]) -> Vec<usize> {
    let mut budgets = Vec::with_capacity(distill.len());
    let mut m = channels;
    for &d in distill {
        budgets.push(m);
        if d {
            m /= 2;
        }
    }
    budgets
}

/// Runs the truncated recursion over all `n + 1` levels.
///
/// `d_probs[i]` is only read at levels where the schedule distills.
pub fn run_recursion(setup: &BurstSetup, sched: &Schedule, d_probs: &[f64]) -> Result<Recursion> {
    run_recursion_through(setup, sched, d_probs, setup.depth())
}

/// Same as [`run_recursion`] but stops after level `last`.
pub fn run_recursion_through(
    setup: &BurstSetup,
    sched: &Schedule,
    d_probs: &[f64],
    last: usize,
) -> Result<Recursion> {
    let depth = setup.depth();
    if sched.levels() != depth + 1 {
        return Err(Error::InvalidParams(format!(
            "schedule covers {} levels, chain has {}",
            sched.levels(),
            depth + 1
        )));
    }
    if d_probs.len() < depth + 1 {
        return Err(Error::InvalidParams(format!(
            "need {} distillation probabilities, got {}",
            depth + 1,
            d_probs.len()
        )));
    }
    sched.check_feasible(setup.channels)?;
    let last = last.min(depth);
    let budgets = level_budgets(setup.channels, sched.distill());

    let mut levels = Vec::with_capacity(last + 1);
    let mut r = Vec::with_capacity(last + 1);
    let mut f = Vec::with_capacity(last + 1);
    let mut survival = Vec::with_capacity(last + 1);
    let mut alive = 1.0;
    let mut incoming = elementary_pmf(setup.channels, setup.pi0)?;

    for level in 0..=last {
        let threshold = sched.thresholds()[level];
        let (reset, survived) = truncate_renormalize(&incoming, threshold)
            .map_err(|_| Error::CertainReset { level, threshold })?;
        let segments = setup.segments_at(level) as i32;
        let level_survival = (1.0 - reset).powi(segments);
        f.push(alive * (1.0 - level_survival));
        alive *= level_survival;
        r.push(reset);
        survival.push(alive);

        let distilled = sched.distill()[level];
        let after_distill = if distilled {
            distill_pmf(&survived, d_probs[level], budgets[level])?
        } else {
            survived.clone()
        };
        if level < last {
            incoming = swap_pmf(&after_distill);
        }
        levels.push(LevelPmfs {
            budget: budgets[level],
            threshold,
            distilled,
            survived,
            after_distill,
        });
    }

    Ok(Recursion {
        setup: *setup,
        levels,
        profile: ResetProfile { r, f, survival },
    })
}

/// Expected pairs per level-`i` segment with the survival prefactor applied:
/// `(E[Y_i], E[Y_i after distillation])`, both summed from `k = R_i`.
pub fn expected_pairs(rec: &Recursion, level: usize) -> (f64, f64) {
    let lv = &rec.levels[level];
    let alive = rec.profile.survival[level];
    (
        alive * lv.survived.partial_mean(lv.threshold),
        alive * lv.after_distill.partial_mean(lv.threshold),
    )
}

/// `E[min of n_segments i.i.d. Binomial(m, pi0)]`.
pub fn min_over_segments_expectation(m: usize, pi0: f64, n_segments: usize) -> f64 {
    assert!(n_segments >= 1, "need at least one segment");
    let base = Pmf {
        probs: binomial_pmf(m, pi0),
    };
    if n_segments.is_power_of_two() {
        let mut p = base;
        for _ in 0..n_segments.trailing_zeros() {
            p = swap_pmf(&p);
        }
        p.mean()
    } else {
        // E[min] = sum_{k>=1} P(X >= k)^n
        let mut tail = 0.0;
        let mut total = 0.0;
        for k in (1..=m).rev() {
            tail += base.probs[k];
            total += tail.min(1.0).powi(n_segments as i32);
        }
        total
    }
}

/// Probability that every segment heralds at least one pair.
pub fn two_gnc_success(m: usize, pi0: f64, n_segments: usize) -> f64 {
    let fail_all = (1.0 - pi0).powi(m as i32);
    (1.0 - fail_all).powi(n_segments as i32)
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {p} outside [0, 1]")))
    }
}
