//! CSV rendering for run reports and envelopes.
//!
//! Floats use Rust's shortest round-trip formatting, so re-parsing a cell
//! yields the identical `f64`. Absent values are empty cells.

use crate::error::Result;
use crate::optimizer::{ArchConfig, EnvelopePoint};
use crate::report::RunReport;
use crate::twoway::Physics;

/// Reset columns cover the deepest supported chain (1024 segments).
pub const RESET_COLUMNS: usize = 11;

pub const FIXED_COLUMNS: [&str; 24] = [
    "experiment",
    "architecture",
    "distance_km",
    "n_segments",
    "channels",
    "eta_c",
    "eps_g",
    "xi",
    "t2_s",
    "rule",
    "f_th",
    "schedule",
    "skr_per_burst",
    "skr_per_channel_use",
    "fidelity",
    "secret_fraction",
    "expected_pairs",
    "repeaters",
    "qubits",
    "gates",
    "measurements",
    "qubits_per_key",
    "gates_per_key",
    "measurements_per_key",
];

pub const ENVELOPE_COLUMNS: [&str; 10] = [
    "distance_km",
    "architecture",
    "objective",
    "n_segments",
    "channels",
    "qpc_n",
    "qpc_m",
    "spacing_km",
    "metric",
    "reason",
];

pub fn header() -> Vec<String> {
    FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((0..RESET_COLUMNS).map(|i| format!("reset_f{i}")))
        .collect()
}

/// One row of the shared schema.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Row {
    pub experiment: String,
    pub architecture: String,
    pub distance_km: f64,
    pub n_segments: Option<usize>,
    pub channels: Option<usize>,
    pub eta_c: f64,
    pub eps_g: f64,
    pub xi: f64,
    pub t2_s: f64,
    pub rule: Option<String>,
    pub f_th: Option<f64>,
    pub schedule: Option<String>,
    pub skr_per_burst: Option<f64>,
    pub skr_per_channel_use: Option<f64>,
    pub fidelity: Option<f64>,
    pub secret_fraction: Option<f64>,
    pub expected_pairs: Option<f64>,
    pub repeaters: Option<u64>,
    pub qubits: Option<u64>,
    pub gates: Option<f64>,
    pub measurements: Option<f64>,
    pub qubits_per_key: Option<f64>,
    pub gates_per_key: Option<f64>,
    pub measurements_per_key: Option<f64>,
    pub reset_f: Vec<f64>,
}

/// How a report's configuration is described in a row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowContext<'a> {
    pub experiment: &'a str,
    pub distance_km: f64,
    pub config: ArchConfig,
    pub physics: &'a Physics,
    pub rule: Option<crate::policy::DecisionRule>,
}

impl Row {
    pub fn base(experiment: &str, architecture: &str, distance_km: f64, physics: &Physics) -> Self {
        Self {
            experiment: experiment.into(),
            architecture: architecture.into(),
            distance_km,
            eta_c: physics.eta_c,
            eps_g: physics.eps_g,
            xi: physics.xi(),
            t2_s: physics.t2,
            ..Default::default()
        }
    }

    pub fn from_report(ctx: &RowContext, r: &RunReport) -> Self {
        let mut row = Row::base(
            ctx.experiment,
            r.architecture.label(),
            ctx.distance_km,
            ctx.physics,
        );
        match ctx.config {
            ArchConfig::Chain {
                n_segments,
                channels,
            } => {
                row.n_segments = Some(n_segments);
                row.channels = Some(channels);
                row.schedule = r.schedule.as_ref().map(|s| s.to_string());
            }
            ArchConfig::Qpc { code, spacing } => {
                row.channels = Some(r.channels);
                row.schedule = Some(format!(
                    "qpc n={} m={} spacing={spacing}",
                    code.n_blocks, code.m_per_block
                ));
            }
        }
        if let Some(rule) = ctx.rule {
            row.rule = Some(rule.label().into());
            row.f_th = rule.f_th();
        }
        row.skr_per_burst = Some(r.skr_per_burst);
        row.skr_per_channel_use = Some(r.skr_per_channel_use_per_burst);
        row.fidelity = Some(r.final_state.fidelity());
        row.secret_fraction = Some(r.secret_fraction);
        row.expected_pairs = Some(r.expected_pairs_end_to_end);
        let c = &r.costs;
        row.repeaters = Some(c.repeaters);
        row.qubits = Some(c.qubits_per_burst);
        row.gates = Some(c.two_qubit_gates);
        row.measurements = Some(c.measurements);
        if let Some(k) = c.per_key {
            row.qubits_per_key = Some(k.qubits);
            row.gates_per_key = Some(k.two_qubit_gates);
            row.measurements_per_key = Some(k.measurements);
        }
        if let Some(p) = &r.reset_profile {
            row.reset_f = p.f.clone();
        }
        row
    }

    fn cells(&self) -> Vec<String> {
        fn o<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(String::new, |x| x.to_string())
        }
        let mut cells = vec![
            self.experiment.clone(),
            self.architecture.clone(),
            self.distance_km.to_string(),
            o(&self.n_segments),
            o(&self.channels),
            self.eta_c.to_string(),
            self.eps_g.to_string(),
            self.xi.to_string(),
            self.t2_s.to_string(),
            o(&self.rule),
            o(&self.f_th),
            o(&self.schedule),
            o(&self.skr_per_burst),
            o(&self.skr_per_channel_use),
            o(&self.fidelity),
            o(&self.secret_fraction),
            o(&self.expected_pairs),
            o(&self.repeaters),
            o(&self.qubits),
            o(&self.gates),
            o(&self.measurements),
            o(&self.qubits_per_key),
            o(&self.gates_per_key),
            o(&self.measurements_per_key),
        ];
        cells.extend((0..RESET_COLUMNS).map(|i| o(&self.reset_f.get(i))));
        cells
    }
}

fn write_records<I>(header: Vec<String>, rows: I) -> Result<String>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::error::Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| crate::error::Error::Io(e.to_string()))
}

/// Header plus one line per row.
pub fn render_rows(rows: &[Row]) -> Result<String> {
    write_records(header(), rows.iter().map(Row::cells))
}

pub fn render_envelope(points: &[EnvelopePoint]) -> Result<String> {
    let rows = points.iter().map(|p| {
        let mut cells = vec![
            p.distance.to_string(),
            p.architecture.architecture().label().to_string(),
            p.objective.label().to_string(),
        ];
        let (n, m, qn, qm, s) = match p.best.as_ref().map(|b| b.config) {
            Some(ArchConfig::Chain {
                n_segments,
                channels,
            }) => (
                n_segments.to_string(),
                channels.to_string(),
                "".into(),
                "".into(),
                "".into(),
            ),
            Some(ArchConfig::Qpc { code, spacing }) => (
                "".into(),
                "".into(),
                code.n_blocks.to_string(),
                code.m_per_block.to_string(),
                spacing.to_string(),
            ),
            None => Default::default(),
        };
        cells.extend([n, m, qn, qm, s]);
        cells.push(p.metric().map_or_else(String::new, |x| x.to_string()));
        cells.push(p.reason.clone().unwrap_or_default());
        cells
    });
    write_records(
        ENVELOPE_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{envelope, ArchitectureSpec, Objective, SweepGrid};
    use crate::policy::DecisionRule;
    use crate::twoway::{evaluate_mtp, ChainParams};

    fn report_row() -> Row {
        let physics = Physics::default();
        let r = evaluate_mtp(
            &ChainParams::new(physics.clone(), 200.0, 8, 32),
            DecisionRule::Skr,
        )
        .unwrap();
        Row::from_report(
            &RowContext {
                experiment: "mtp-sweep",
                distance_km: 200.0,
                config: ArchConfig::Chain {
                    n_segments: 8,
                    channels: 32,
                },
                physics: &physics,
                rule: Some(DecisionRule::Skr),
            },
            &r,
        )
    }

    #[test]
    fn header_layout() {
        let h = header();
        assert_eq!(h.len(), 24 + RESET_COLUMNS);
        assert_eq!(h[0], "experiment");
        assert_eq!(h[23], "measurements_per_key");
        assert_eq!(h[24], "reset_f0");
        assert_eq!(h.last().unwrap(), "reset_f10");
    }

    #[test]
    fn numeric_round_trip() {
        let row = report_row();
        let text = render_rows(std::slice::from_ref(&row)).unwrap();
        assert!(text.ends_with('\n') && !text.contains('\r'));
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let rec = rd.records().next().unwrap().unwrap();
        let get = |i: usize| rec[i].parse::<f64>().unwrap();
        assert_eq!(get(12), row.skr_per_burst.unwrap());
        assert_eq!(get(14), row.fidelity.unwrap());
        assert_eq!(get(19), row.gates.unwrap());
        for (i, f) in row.reset_f.iter().enumerate() {
            assert_eq!(get(24 + i), *f);
        }
        assert_eq!(&rec[24 + row.reset_f.len()], "");
        assert_eq!(&rec[11], row.schedule.as_deref().unwrap());
        assert_eq!(rd.records().count(), 0);
    }

    #[test]
    fn tiny_values_survive() {
        let mut row = Row::base("x", "mtp", 1.0, &Physics::default());
        row.skr_per_burst = Some(1.234_567_890_123_4e-300);
        let text = render_rows(&[row]).unwrap();
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let rec = rd.records().next().unwrap().unwrap();
        assert_eq!(rec[12].parse::<f64>().unwrap(), 1.234_567_890_123_4e-300);
    }

    #[test]
    fn envelope_csv() {
        let grid = SweepGrid {
            distances: vec![100.0],
            n_segment_options: vec![4],
            channel_options: vec![8],
            qpc_n_max: 2,
            qpc_m_max: 2,
            spacings: vec![2.0],
        };
        let physics = Physics::default();
        let mut pts = envelope(
            ArchitectureSpec::TwoGnc,
            &grid,
            &physics,
            1.0,
            Objective::MaxSkrPerChannelUse,
        )
        .unwrap();
        pts.extend(
            envelope(
                ArchitectureSpec::Qpc,
                &grid,
                &physics,
                1.0,
                Objective::MaxSkrPerChannelUse,
            )
            .unwrap(),
        );
        let text = render_envelope(&pts).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("100,2gnc,max_skr_per_channel_use,4,8,,,,"));
        assert!(lines[2].starts_with("100,qpc,max_skr_per_channel_use,,,"));
    }
}
