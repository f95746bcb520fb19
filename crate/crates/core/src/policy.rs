//! Static per-level distillation schedules and termination thresholds.

use std::fmt;
use std::str::FromStr;

use crate::bellstate::{dejmps, dephase, secret_fraction, swap, BellDiagState};
use crate::error::{Error, Result};
use crate::pmf::{expected_pairs, level_budgets, run_recursion_through, BurstSetup};
use crate::twoway::{ChainParams, TimingModel};

/// Per-level distillation bits `D_i` and reset thresholds `R_i`, for levels
/// `0..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schedule {
    distill: Vec<bool>,
    thresholds: Vec<usize>,
}

impl Schedule {
    pub fn new(distill: Vec<bool>, thresholds: Vec<usize>) -> Result<Self> {
        if distill.is_empty() || distill.len() != thresholds.len() {
            return Err(Error::InvalidParams(format!(
                "schedule has {} decisions and {} thresholds",
                distill.len(),
                thresholds.len()
            )));
        }
        if *distill.last().unwrap() {
            return Err(Error::InvalidParams(
                "the final level cannot distill".into(),
            ));
        }
        if thresholds.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParams(format!(
                "thresholds {thresholds:?} must be nonincreasing"
            )));
        }
        if let Some(last) = distill.iter().rposition(|d| *d) {
            if thresholds[..=last].iter().any(|r| *r < 2) {
                return Err(Error::InvalidParams(format!(
                    "thresholds {thresholds:?} must be at least 2 up to level {last}"
                )));
            }
        }
        Ok(Self {
            distill,
            thresholds,
        })
    }

    /// `R_i = 2` at or below the last distilling level, `1` above it.
    pub fn with_default_thresholds(distill: Vec<bool>) -> Result<Self> {
        let thresholds = default_thresholds(&distill);
        Self::new(distill, thresholds)
    }

    pub fn all_zero(depth: usize) -> Self {
        Self {
            distill: vec![false; depth + 1],
            thresholds: vec![1; depth + 1],
        }
    }

    pub fn levels(&self) -> usize {
        self.distill.len()
    }

    pub fn distill(&self) -> &[bool] {
        &self.distill
    }

    pub fn thresholds(&self) -> &[usize] {
        &self.thresholds
    }

    /// Fails with the first level whose channel budget is below its threshold.
    pub fn check_feasible(&self, channels: usize) -> Result<()> {
        let budgets = level_budgets(channels, &self.distill);
        for (level, (&budget, &threshold)) in budgets.iter().zip(&self.thresholds).enumerate() {
            if budget < threshold.max(1) {
                return Err(Error::InfeasibleSchedule {
                    level,
                    budget,
                    threshold,
                });
            }
        }
        Ok(())
    }
}

pub fn default_thresholds(distill: &[bool]) -> Vec<usize> {
    let last = distill.iter().rposition(|d| *d);
    (0..distill.len())
        .map(|i| match last {
            Some(l) if i <= l => 2,
            _ => 1,
        })
        .collect()
}

/// Number of 2-to-1 distillation rounds in the schedule.
pub fn schedule_halvings(s: &Schedule) -> usize {
    s.distill.iter().filter(|d| **d).count()
}

/// `D=<bits for levels 0..n-1> R=<thresholds for levels 0..n>`; the final
/// level never distills so its bit is omitted.
impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits: String = self.distill[..self.distill.len() - 1]
            .iter()
            .map(|d| if *d { '1' } else { '0' })
            .collect();
        let rs: Vec<String> = self.thresholds.iter().map(|r| r.to_string()).collect();
        write!(f, "D={bits} R={}", rs.join(","))
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("malformed schedule `{s}`"));
        let mut parts = s.split_whitespace();
        let d = parts
            .next()
            .and_then(|p| p.strip_prefix("D="))
            .ok_or_else(bad)?;
        let r = parts
            .next()
            .and_then(|p| p.strip_prefix("R="))
            .ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        let mut distill = d
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(bad()),
            })
            .collect::<Result<Vec<_>>>()?;
        distill.push(false);
        let thresholds = r
            .split(',')
            .map(|x| x.parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        Schedule::new(distill, thresholds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecisionRule {
    /// Distill when it raises `secret_fraction * E[pairs]` at the level.
    Skr,
    /// Distill when the level's fidelity is below the threshold.
    FidelityThreshold(f64),
}

impl DecisionRule {
    pub fn fidelity_threshold(f_th: f64) -> Result<Self> {
        if !(0.25..=1.0).contains(&f_th) {
            return Err(Error::Domain(format!("F_th = {f_th} outside [0.25, 1]")));
        }
        Ok(Self::FidelityThreshold(f_th))
    }

    pub fn label(&self) -> &'static str {
        match self {
            DecisionRule::Skr => "skr",
            DecisionRule::FidelityThreshold(_) => "fth",
        }
    }

    pub fn f_th(&self) -> Option<f64> {
        match self {
            DecisionRule::Skr => None,
            DecisionRule::FidelityThreshold(f) => Some(*f),
        }
    }
}

/// Bell-diagonal states seen at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelStates {
    /// State entering the level's decision point.
    pub pre: BellDiagState,
    /// Output of a DEJMPS round on two `pre` pairs plus the outcome-exchange
    /// hold; `None` when distillation cannot succeed.
    pub distilled: Option<BellDiagState>,
    /// State carried into the swap.
    pub post: BellDiagState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleBuild {
    pub schedule: Schedule,
    pub states: Vec<LevelStates>,
    /// DEJMPS success probability for each level's `pre` state.
    pub d_probs: Vec<f64>,
}

/// Greedy forward pass over the levels, fixing one decision bit at a time.
pub fn build_schedule(params: &ChainParams, rule: DecisionRule) -> Result<ScheduleBuild> {
    params.validate()?;
    let setup = params.burst_setup()?;
    let depth = setup.depth();
    let noise = params.noise();
    let timing = TimingModel::candidate(params, depth);

    let mut decided: Vec<bool> = Vec::with_capacity(depth + 1);
    let mut states = Vec::with_capacity(depth + 1);
    let mut d_probs = Vec::with_capacity(depth + 1);
    let mut state = dephase(&params.elementary_state()?, timing.heralding, noise.t2)?;

    for level in 0..=depth {
        let candidate = dejmps(&state, &state, &noise).ok();
        let d = candidate.map_or(0.0, |c| c.success_prob);
        d_probs.push(d);
        let distilled = match candidate {
            Some(c) => Some(dephase(&c.state, timing.distill_holds[level], noise.t2)?),
            None => None,
        };

        let choose = if level == depth {
            false
        } else {
            match rule {
                DecisionRule::FidelityThreshold(f_th) => {
                    if state.fidelity() < f_th {
                        if distilled.is_none() {
                            return Err(Error::UndefinedOutput);
                        }
                        prefix_schedule(&decided, true, depth)?.check_feasible(setup.channels)?;
                        true
                    } else {
                        false
                    }
                }
                DecisionRule::Skr => match distilled {
                    Some(up) => {
                        let (plain, with) =
                            skr_decision_sides(&setup, &decided, &d_probs, &state, &up)?;
                        with > plain
                    }
                    None => false,
                },
            }
        };

        let post = if choose { distilled.unwrap() } else { state };
        states.push(LevelStates {
            pre: state,
            distilled,
            post,
        });
        decided.push(choose);
        if level < depth {
            state = swap(&post, &post, &noise);
        }
    }

    let schedule = Schedule::with_default_thresholds(decided)?;
    schedule.check_feasible(setup.channels)?;
    Ok(ScheduleBuild {
        schedule,
        states,
        d_probs,
    })
}

/// Both sides of the SKR comparison at level `decided.len()`:
/// `(r(ρ) E[Y], r(ρ↑) E[Y↑])`. Each side runs the recursion on the decided
/// prefix plus the candidate bit, with default thresholds for that prefix.
/// An infeasible or certainly-resetting branch scores zero.
pub fn skr_decision_sides(
    setup: &BurstSetup,
    decided: &[bool],
    d_probs: &[f64],
    plain: &BellDiagState,
    distilled: &BellDiagState,
) -> Result<(f64, f64)> {
    let level = decided.len();
    let depth = setup.depth();
    let mut padded = d_probs.to_vec();
    padded.resize(depth + 1, 0.0);

    let branch = |bit: bool| -> Result<f64> {
        let sched = prefix_schedule(decided, bit, depth)?;
        if sched.check_feasible(setup.channels).is_err() {
            return Ok(0.0);
        }
        match run_recursion_through(setup, &sched, &padded, level) {
            Ok(rec) => {
                let (e_plain, e_up) = expected_pairs(&rec, level);
                Ok(if bit {
                    secret_fraction(distilled) * e_up
                } else {
                    secret_fraction(plain) * e_plain
                })
            }
            Err(Error::CertainReset { .. }) => Ok(0.0),
            Err(e) => Err(e),
        }
    };
    Ok((branch(false)?, branch(true)?))
}

fn prefix_schedule(decided: &[bool], bit: bool, depth: usize) -> Result<Schedule> {
    let mut distill = decided.to_vec();
    distill.push(bit);
    distill.resize(depth + 1, false);
    Schedule::with_default_thresholds(distill)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellstate::{BellDiagState, NoiseParams};
    use crate::twoway::Physics;

    fn perfect_params(n_segments: usize, channels: usize) -> ChainParams {
        let physics = Physics {
            eta_c: 1.0,
            eps_g: 0.0,
            xi: Some(0.0),
            t2: f64::INFINITY,
            ..Physics::default()
        };
        ChainParams::new(physics, 100.0, n_segments, channels)
    }

    #[test]
    fn schedule_line_format() {
        let s = Schedule::new(
            vec![true, false, true, false, false, false],
            vec![2, 2, 2, 1, 1, 1],
        )
        .unwrap();
        assert_eq!(s.to_string(), "D=10100 R=2,2,2,1,1,1");
        assert_eq!(s.to_string().parse::<Schedule>().unwrap(), s);
        assert_eq!(Schedule::all_zero(0).to_string(), "D= R=1");
        assert_eq!("D= R=1".parse::<Schedule>().unwrap(), Schedule::all_zero(0));
        assert!("D=1 R=1".parse::<Schedule>().is_err());
        assert!("R=1 D=0".parse::<Schedule>().is_err());
    }

    #[test]
    fn schedule_invariants_enforced() {
        assert!(Schedule::new(vec![false, true], vec![2, 2]).is_err());
        assert!(Schedule::new(vec![false, false], vec![1, 2]).is_err());
        assert!(Schedule::new(vec![true, false], vec![1, 1]).is_err());
        assert!(Schedule::new(vec![true, false], vec![2, 1]).is_ok());
        assert_eq!(
            default_thresholds(&[false, true, false, false]),
            vec![2, 2, 1, 1]
        );
    }

    #[test]
    fn halvings_count() {
        assert_eq!(schedule_halvings(&Schedule::all_zero(4)), 0);
        let s = Schedule::with_default_thresholds(vec![true, true, false, false]).unwrap();
        assert_eq!(schedule_halvings(&s), 2);
    }

    #[test]
    fn budget_infeasibility_is_reported_with_level() {
        // Budgets 3, 1, 0 against thresholds 2, 2, 1.
        let s = Schedule::with_default_thresholds(vec![true, true, false]).unwrap();
        assert_eq!(
            s.check_feasible(3),
            Err(Error::InfeasibleSchedule {
                level: 1,
                budget: 1,
                threshold: 2
            })
        );
        assert!(s.check_feasible(4).is_ok());
    }

    #[test]
    fn perfect_operations_never_distill() {
        for rule in [DecisionRule::Skr, DecisionRule::FidelityThreshold(0.95)] {
            for n in [1, 2, 4, 16] {
                let b = build_schedule(&perfect_params(n, 8), rule).unwrap();
                assert_eq!(b.schedule, Schedule::all_zero(n.trailing_zeros() as usize));
            }
        }
    }

    #[test]
    fn fidelity_threshold_triggers_after_swap() {
        // Elementary F = 0.96 is above 0.95; one noiseless swap drops it below.
        let mut params = perfect_params(4, 16);
        params.fidelity_override = Some(0.96);
        let b = build_schedule(&params, DecisionRule::FidelityThreshold(0.95)).unwrap();
        let swapped = swap(
            &BellDiagState::from_depolarized_fidelity(0.96).unwrap(),
            &BellDiagState::from_depolarized_fidelity(0.96).unwrap(),
            &NoiseParams::noiseless(),
        );
        assert!(swapped.fidelity() < 0.95);
        assert!((b.states[1].pre.fidelity() - swapped.fidelity()).abs() < 1e-12);
        assert_eq!(b.schedule.distill(), &[false, true, false]);
    }

    #[test]
    fn floor_threshold_never_distills() {
        let params = ChainParams::new(Physics::default(), 800.0, 16, 32);
        let b = build_schedule(&params, DecisionRule::fidelity_threshold(0.25).unwrap()).unwrap();
        assert_eq!(schedule_halvings(&b.schedule), 0);
    }

    #[test]
    fn skr_choice_is_argmax_of_both_branches() {
        let physics = Physics {
            eps_g: 1e-3,
            ..Physics::default()
        };
        for (dist, n, m) in [(200.0, 8, 16), (500.0, 16, 32), (300.0, 32, 64)] {
            let params = ChainParams::new(physics.clone(), dist, n, m);
            let b = build_schedule(&params, DecisionRule::Skr).unwrap();
            let setup = params.burst_setup().unwrap();
            let depth = setup.depth();
            for level in 0..depth {
                let st = &b.states[level];
                let prefix = &b.schedule.distill()[..level];
                let (plain, with) = skr_decision_sides(
                    &setup,
                    prefix,
                    &b.d_probs[..=level],
                    &st.pre,
                    &st.distilled.unwrap(),
                )
                .unwrap();
                assert_eq!(b.schedule.distill()[level], with > plain, "level {level}");
            }
        }
    }

    #[test]
    fn skr_rule_skips_marginal_distillation() {
        // High-fidelity Werner pairs: a DEJMPS round succeeds with probability
        // near 1 but halves the pair count, so the plain side wins.
        let params = ChainParams::new(
            Physics {
                eps_g: 1e-4,
                ..Physics::default()
            },
            100.0,
            4,
            32,
        );
        let b = build_schedule(&params, DecisionRule::Skr).unwrap();
        let setup = params.burst_setup().unwrap();
        let st = &b.states[0];
        let (plain, with) = skr_decision_sides(
            &setup,
            &[],
            &b.d_probs[..1],
            &st.pre,
            &st.distilled.unwrap(),
        )
        .unwrap();
        assert!(plain > with);
        assert!(!b.schedule.distill()[0]);
    }

    #[test]
    fn build_is_deterministic() {
        let params = ChainParams::new(Physics::default(), 500.0, 32, 128);
        let a = build_schedule(&params, DecisionRule::Skr).unwrap();
        let b = build_schedule(&params, DecisionRule::Skr).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fidelity_rule_reports_infeasible_level() {
        let physics = Physics {
            eps_g: 0.03,
            ..Physics::default()
        };
        let params = ChainParams::new(physics, 10.0, 2, 1);
        assert!(matches!(
            build_schedule(&params, DecisionRule::FidelityThreshold(0.99)),
            Err(Error::InfeasibleSchedule { level: 0, .. })
        ));
    }
}
