//! Line-oriented `key = value` configuration with defaults for every key.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::oneway::{OnewayParams, QpcCode};
use crate::optimizer::SweepGrid;
use crate::policy::DecisionRule;
use crate::twoway::{ChainParams, Physics};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Skr,
    Fth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub experiment: Option<String>,
    pub out_dir: String,
    pub seed: u64,
    pub trials: u64,
    pub physics: Physics,
    pub total_distance: f64,
    pub n_segments: usize,
    pub channels: usize,
    pub pi0: Option<f64>,
    pub rule: RuleKind,
    pub f_th: f64,
    pub qpc_n: usize,
    pub qpc_m: usize,
    pub spacing: f64,
    pub logical_error_coeff: f64,
    pub grid: SweepGrid,
    pub relay_channels: Vec<usize>,
    pub relay_segments: Vec<usize>,
    pub relay_spacings: Vec<f64>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            experiment: None,
            out_dir: "out".into(),
            seed: 1,
            trials: 1_000_000,
            physics: Physics::default(),
            total_distance: 100.0,
            n_segments: 8,
            channels: 64,
            pi0: None,
            rule: RuleKind::Skr,
            f_th: 0.95,
            qpc_n: 4,
            qpc_m: 3,
            spacing: 2.0,
            logical_error_coeff: 1.0,
            grid: SweepGrid {
                distances: vec![50.0, 100.0, 200.0, 300.0, 500.0, 750.0, 1000.0],
                n_segment_options: vec![1, 2, 4, 8, 16, 32, 64],
                channel_options: vec![1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256],
                qpc_n_max: 70,
                qpc_m_max: 20,
                spacings: vec![1.0, 2.0, 3.0, 4.0],
            },
            relay_channels: vec![128, 256],
            relay_segments: vec![2, 4, 8, 16, 32, 64],
            relay_spacings: vec![1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0],
        }
    }
}

impl Config {
    pub fn decision_rule(&self) -> Result<DecisionRule> {
        match self.rule {
            RuleKind::Skr => Ok(DecisionRule::Skr),
            RuleKind::Fth => DecisionRule::fidelity_threshold(self.f_th),
        }
    }

    pub fn chain_params(&self) -> ChainParams {
        let mut p = ChainParams::new(
            self.physics.clone(),
            self.total_distance,
            self.n_segments,
            self.channels,
        );
        p.pi0_override = self.pi0;
        p
    }

    pub fn oneway_params(&self) -> Result<OnewayParams> {
        let mut p = OnewayParams::new(
            QpcCode::new(self.qpc_n, self.qpc_m)?,
            self.spacing,
            self.total_distance,
            self.physics.clone(),
        );
        p.logical_error_coeff = self.logical_error_coeff;
        Ok(p)
    }

    /// Effective configuration in the input format; parsing it yields `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
        let ilist = |v: &[usize]| {
            v.iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(", ")
        };
        if let Some(e) = &self.experiment {
            kv("experiment", e.clone());
        }
        kv("out_dir", self.out_dir.clone());
        kv("seed", self.seed.to_string());
        kv("trials", self.trials.to_string());
        let ph = &self.physics;
        kv("eta_c", ph.eta_c.to_string());
        kv("eps_g", ph.eps_g.to_string());
        kv("xi", ph.xi().to_string());
        kv("t2", ph.t2.to_string());
        kv("l_att", ph.l_att.to_string());
        kv("c_fiber", ph.c_fiber.to_string());
        kv("link_fidelity_coeff", ph.link_fidelity_coeff.to_string());
        kv("source_rate", ph.source_rate.to_string());
        kv("decoherence", ph.decoherence.to_string());
        if let Some(h) = ph.heralding_hold {
            kv("heralding_hold", h.to_string());
        }
        kv("distill_hold_factor", ph.distill_hold_factor.to_string());
        kv("total_distance", self.total_distance.to_string());
        kv("n_segments", self.n_segments.to_string());
        kv("channels", self.channels.to_string());
        if let Some(p) = self.pi0 {
            kv("pi0", p.to_string());
        }
        kv(
            "rule",
            match self.rule {
                RuleKind::Skr => "skr",
                RuleKind::Fth => "fth",
            }
            .into(),
        );
        kv("f_th", self.f_th.to_string());
        kv("qpc_n", self.qpc_n.to_string());
        kv("qpc_m", self.qpc_m.to_string());
        kv("spacing", self.spacing.to_string());
        kv("logical_error_coeff", self.logical_error_coeff.to_string());
        kv("distances", list(&self.grid.distances));
        kv("n_segment_options", ilist(&self.grid.n_segment_options));
        kv("channel_options", ilist(&self.grid.channel_options));
        kv("qpc_n_max", self.grid.qpc_n_max.to_string());
        kv("qpc_m_max", self.grid.qpc_m_max.to_string());
        kv("spacings", list(&self.grid.spacings));
        kv("relay_channels", ilist(&self.relay_channels));
        kv("relay_segments", ilist(&self.relay_segments));
        kv("relay_spacings", list(&self.relay_spacings));
        s
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config {
        line,
        msg: msg.into(),
    }
}

struct Value<'a> {
    key: &'a str,
    raw: &'a str,
    line: usize,
}

impl Value<'_> {
    fn mismatch(&self, what: &str) -> Error {
        err(
            self.line,
            format!("{}: expected {what}, got `{}`", self.key, self.raw),
        )
    }

    fn f64(&self) -> Result<f64> {
        self.raw
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| self.mismatch("a finite number"))
    }

    fn f64_in(&self, lo: f64, hi: f64) -> Result<f64> {
        let x = self.f64()?;
        if !(lo..=hi).contains(&x) {
            return Err(err(
                self.line,
                format!("{} = {x} outside [{lo}, {hi}]", self.key),
            ));
        }
        Ok(x)
    }

    fn positive(&self) -> Result<f64> {
        let x = self.f64()?;
        if !(x > 0.0) {
            return Err(err(
                self.line,
                format!("{} = {x} must be positive", self.key),
            ));
        }
        Ok(x)
    }

    fn u64(&self) -> Result<u64> {
        self.raw
            .parse::<u64>()
            .map_err(|_| self.mismatch("a nonnegative integer"))
    }

    fn count(&self, max: usize) -> Result<usize> {
        let n = self.u64()?;
        if n == 0 || n > max as u64 {
            return Err(err(
                self.line,
                format!("{} = {n} outside [1, {max}]", self.key),
            ));
        }
        Ok(n as usize)
    }

    fn power_of_two(&self, max: usize) -> Result<usize> {
        let n = self.count(max)?;
        if !n.is_power_of_two() {
            return Err(err(
                self.line,
                format!("{} = {n} is not a power of two", self.key),
            ));
        }
        Ok(n)
    }

    fn bool(&self) -> Result<bool> {
        match self.raw {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(self.mismatch("true or false")),
        }
    }

    fn items(&self) -> Result<Vec<Value<'_>>> {
        let items: Vec<Value> = self
            .raw
            .split(',')
            .map(|r| Value {
                key: self.key,
                raw: r.trim(),
                line: self.line,
            })
            .collect();
        if items.iter().any(|v| v.raw.is_empty()) {
            return Err(self.mismatch("a comma-separated list"));
        }
        Ok(items)
    }

    fn list<T>(&self, f: impl Fn(&Value) -> Result<T>) -> Result<Vec<T>> {
        self.items()?.iter().map(f).collect()
    }
}

/// Parses configuration text. Missing keys keep their defaults; unknown,
/// duplicate and ill-typed keys are errors carrying the 1-based line.
pub fn parse_config(text: &str) -> Result<Config> {
    use crate::oneway::{MAX_BLOCKS, MAX_BLOCK_SIZE, MAX_SPACING, MIN_SPACING};
    use crate::twoway::{MAX_CHANNELS, MAX_SEGMENTS};

    let mut c = Config::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, raw) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        let v = Value {
            key,
            raw: raw.trim(),
            line,
        };
        if v.raw.is_empty() {
            return Err(err(line, format!("{key}: missing value")));
        }
        if let Some(prev) = seen.insert(key.to_string(), line) {
            return Err(err(
                line,
                format!("duplicate key {key} (first set on line {prev})"),
            ));
        }
        let ph = &mut c.physics;
        match key {
            "experiment" => c.experiment = Some(v.raw.to_string()),
            "out_dir" => c.out_dir = v.raw.to_string(),
            "seed" => c.seed = v.u64()?,
            "trials" => c.trials = v.count(usize::MAX)? as u64,
            "eta_c" => {
                ph.eta_c = v.f64_in(0.0, 1.0)?;
                if ph.eta_c == 0.0 {
                    return Err(err(line, "eta_c must be positive"));
                }
            }
            "eps_g" => ph.eps_g = v.f64_in(0.0, 1.0)?,
            "xi" => ph.xi = Some(v.f64_in(0.0, 1.0)?),
            "t2" => ph.t2 = v.positive()?,
            "l_att" => ph.l_att = v.positive()?,
            "c_fiber" => ph.c_fiber = v.positive()?,
            "link_fidelity_coeff" => {
                let x = v.f64()?;
                if x != 1.125 && x != 1.25 {
                    return Err(err(
                        line,
                        format!("link_fidelity_coeff = {x} must be 1.125 or 1.25"),
                    ));
                }
                ph.link_fidelity_coeff = x;
            }
            "source_rate" => ph.source_rate = v.positive()?,
            "decoherence" => ph.decoherence = v.bool()?,
            "heralding_hold" => ph.heralding_hold = Some(v.f64_in(0.0, f64::MAX)?),
            "distill_hold_factor" => ph.distill_hold_factor = v.f64_in(0.0, f64::MAX)?,
            "total_distance" => c.total_distance = v.positive()?,
            "n_segments" => c.n_segments = v.power_of_two(MAX_SEGMENTS)?,
            "channels" => c.channels = v.count(MAX_CHANNELS)?,
            "pi0" => {
                let p = v.f64_in(0.0, 1.0)?;
                if p == 0.0 {
                    return Err(err(line, "pi0 must be positive"));
                }
                c.pi0 = Some(p);
            }
            "rule" => {
                c.rule = match v.raw {
                    "skr" => RuleKind::Skr,
                    "fth" => RuleKind::Fth,
                    _ => return Err(v.mismatch("skr or fth")),
                }
            }
            "f_th" => c.f_th = v.f64_in(0.25, 1.0)?,
            "qpc_n" => c.qpc_n = v.count(MAX_BLOCKS)?,
            "qpc_m" => c.qpc_m = v.count(MAX_BLOCK_SIZE)?,
            "spacing" => c.spacing = v.f64_in(MIN_SPACING, MAX_SPACING)?,
            "logical_error_coeff" => c.logical_error_coeff = v.f64_in(0.0, f64::MAX)?,
            "distances" => c.grid.distances = v.list(|x| x.positive())?,
            "n_segment_options" => {
                c.grid.n_segment_options = v.list(|x| x.power_of_two(MAX_SEGMENTS))?
            }
            "channel_options" => c.grid.channel_options = v.list(|x| x.count(MAX_CHANNELS))?,
            "qpc_n_max" => c.grid.qpc_n_max = v.count(MAX_BLOCKS)?,
            "qpc_m_max" => c.grid.qpc_m_max = v.count(MAX_BLOCK_SIZE)?,
            "spacings" => c.grid.spacings = v.list(|x| x.f64_in(MIN_SPACING, MAX_SPACING))?,
            "relay_channels" => c.relay_channels = v.list(|x| x.count(MAX_CHANNELS))?,
            "relay_segments" => c.relay_segments = v.list(|x| x.count(MAX_SEGMENTS))?,
            "relay_spacings" => c.relay_spacings = v.list(|x| x.positive())?,
            _ => return Err(err(line, format!("unknown key {key}"))),
        }
    }
    c.physics.validate().map_err(|e| err(0, e.to_string()))?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_defaults() {
        assert_eq!(parse_config("").unwrap(), Config::default());
        assert_eq!(
            parse_config("# only a comment\n\n").unwrap(),
            Config::default()
        );
        let c = Config::default();
        assert_eq!(c.physics.eta_c, 0.9);
        assert_eq!(c.physics.t2, 1.0);
        assert_eq!(c.physics.l_att, 20.0);
        assert_eq!(c.physics.link_fidelity_coeff, 1.25);
    }

    #[test]
    fn xi_follows_eps_g() {
        let c = parse_config("eps_g = 1e-3").unwrap();
        assert_eq!(c.physics.eps_g, 0.001);
        assert_eq!(c.physics.xi(), 2.5e-4);
        let c = parse_config("eps_g = 1e-3\nxi = 0.01").unwrap();
        assert_eq!(c.physics.xi(), 0.01);
    }

    #[test]
    fn rejects_non_power_of_two_segments() {
        let e = parse_config("seed = 2\nn_segments = 3").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e}");
        assert!(parse_config("n_segment_options = 1, 2, 6").is_err());
    }

    #[test]
    fn errors_carry_lines() {
        let cases = [
            ("foo = 1", 1, "unknown"),
            ("seed = 1\n\nseed = 2", 3, "duplicate"),
            ("\neta_c = high", 2, "expected"),
            ("channels = 0", 1, "outside"),
            ("decoherence = yes", 1, "true or false"),
            ("just text", 1, "key = value"),
            ("rule = best", 1, "skr or fth"),
            ("link_fidelity_coeff = 1.2", 1, "1.125"),
            ("distances = 50,,100", 1, "list"),
        ];
        for (text, line, needle) in cases {
            match parse_config(text) {
                Err(Error::Config { line: l, msg }) => {
                    assert_eq!(l, line, "{text}");
                    assert!(msg.contains(needle), "{text}: {msg}");
                }
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn comments_and_whitespace() {
        let c = parse_config("  channels=16   # sixteen\n# n_segments = 3\ndistances = 10, 20.5")
            .unwrap();
        assert_eq!(c.channels, 16);
        assert_eq!(c.n_segments, 8);
        assert_eq!(c.grid.distances, vec![10.0, 20.5]);
    }

    #[test]
    fn echo_round_trips() {
        let text = "experiment = mtp-sweep\nseed = 7\neps_g = 3e-4\nheralding_hold = 0.001\npi0 = 0.3\nrule = fth\nf_th = 0.9\ndecoherence = false\nspacings = 1.5, 2.5";
        let c = parse_config(text).unwrap();
        let echo = parse_config(&c.to_text()).unwrap();
        // The echo pins xi explicitly.
        let mut expected = c.clone();
        expected.physics.xi = Some(c.physics.xi());
        assert_eq!(echo, expected);
        let d = Config::default();
        let mut e = d.clone();
        e.physics.xi = Some(d.physics.xi());
        assert_eq!(parse_config(&d.to_text()).unwrap(), e);
    }

    #[test]
    fn rule_conversion() {
        assert_eq!(
            Config::default().decision_rule().unwrap(),
            DecisionRule::Skr
        );
        let c = parse_config("rule = fth\nf_th = 0.8").unwrap();
        assert_eq!(
            c.decision_rule().unwrap(),
            DecisionRule::FidelityThreshold(0.8)
        );
        assert!(parse_config("f_th = 0.2").is_err());
    }
}
