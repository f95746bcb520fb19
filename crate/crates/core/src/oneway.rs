//! One-way repeaters built on an (n, m) quantum parity code with
//! teleportation-based error correction at every station.
//!
//! The per-station logical error `c * n * m * (eps_g + xi)` is a stand-in
//! operational model: absolute key rates from it are indicative only.

use crate::bellstate::{secret_fraction, BellDiagState};
use crate::costs::{normalize_per_secret_key, CostReport};
use crate::error::{Error, Result};
use crate::report::{Architecture, RunReport};
use crate::twoway::Physics;

pub const MAX_BLOCKS: usize = 70;
pub const MAX_BLOCK_SIZE: usize = 20;
pub const MIN_SPACING: f64 = 1.0;
pub const MAX_SPACING: f64 = 4.0;

/// `n` sub-blocks of `m` photons each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QpcCode {
    pub n_blocks: usize,
    pub m_per_block: usize,
}

impl QpcCode {
    pub fn new(n_blocks: usize, m_per_block: usize) -> Result<Self> {
        if !(1..=MAX_BLOCKS).contains(&n_blocks) || !(1..=MAX_BLOCK_SIZE).contains(&m_per_block) {
            return Err(Error::InvalidParams(format!(
                "QPC ({n_blocks}, {m_per_block}) outside n <= {MAX_BLOCKS}, m <= {MAX_BLOCK_SIZE}"
            )));
        }
        Ok(Self {
            n_blocks,
            m_per_block,
        })
    }

    pub fn photons(&self) -> usize {
        self.n_blocks * self.m_per_block
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnewayParams {
    pub code: QpcCode,
    /// Station spacing in km.
    pub spacing: f64,
    pub total_distance: f64,
    pub physics: Physics,
    pub logical_error_coeff: f64,
}

impl OnewayParams {
    pub fn new(code: QpcCode, spacing: f64, total_distance: f64, physics: Physics) -> Self {
        Self {
            code,
            spacing,
            total_distance,
            physics,
            logical_error_coeff: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        if !(MIN_SPACING..=MAX_SPACING).contains(&self.spacing) {
            return Err(Error::InvalidParams(format!(
                "spacing {} km outside [{MIN_SPACING}, {MAX_SPACING}]",
                self.spacing
            )));
        }
        if !(self.total_distance > 0.0) {
            return Err(Error::InvalidParams(
                "total_distance must be positive".into(),
            ));
        }
        if !(self.logical_error_coeff >= 0.0) {
            return Err(Error::InvalidParams(
                "logical_error_coeff must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Number of hops, each ending in a TEC station.
    pub fn n_stations(&self) -> usize {
        ((self.total_distance / self.spacing) - 1e-9)
            .ceil()
            .max(1.0) as usize
    }
}

/// Probability that a transmitted block stays decodable: every sub-block keeps
/// at least one photon and at least one sub-block arrives whole.
pub fn qpc_success_prob(code: QpcCode, eta: f64) -> f64 {
    let m = code.m_per_block as i32;
    let n = code.n_blocks as i32;
    let intact = eta.powi(m);
    let nonempty = 1.0 - (1.0 - eta).powi(m);
    (nonempty.powi(n) - (nonempty - intact).powi(n)).clamp(0.0, 1.0)
}

/// Survival of one photon over one hop, coupling included.
pub fn photon_survival(spacing: f64, eta_c: f64, l_att: f64) -> f64 {
    eta_c * (-spacing / l_att).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationSurvival {
    pub photon: f64,
    pub per_station: f64,
    pub n_stations: usize,
    pub end_to_end: f64,
}

pub fn station_survival(params: &OnewayParams) -> StationSurvival {
    let photon = photon_survival(params.spacing, params.physics.eta_c, params.physics.l_att);
    let per_station = qpc_success_prob(params.code, photon);
    let n_stations = params.n_stations();
    StationSurvival {
        photon,
        per_station,
        n_stations,
        end_to_end: per_station.powi(n_stations as i32),
    }
}

/// Error rate after `stations` independent flips of probability `eps`.
pub fn accumulate_flips(eps: f64, stations: usize) -> f64 {
    0.5 * (1.0 - (1.0 - 2.0 * eps).powi(stations as i32))
}

/// Bell-diagonal state with independent X and Z flips at rate `e`.
fn flip_state(e: f64) -> BellDiagState {
    BellDiagState::new([(1.0 - e) * (1.0 - e), e * (1.0 - e), e * (1.0 - e), e * e])
        .expect("flip probabilities form a distribution")
}

pub fn oneway_skr(params: &OnewayParams) -> Result<RunReport> {
    params.validate()?;
    let survival = station_survival(params);
    let ph = &params.physics;
    let eps_l = params.logical_error_coeff * params.code.photons() as f64 * (ph.eps_g + ph.xi());
    let qber = if eps_l >= 0.5 {
        0.5
    } else {
        accumulate_flips(eps_l, survival.n_stations)
    };
    let state = flip_state(qber);
    let fraction = secret_fraction(&state);
    let skr = survival.end_to_end * fraction;
    let costs =
        normalize_per_secret_key(&qpc_operation_counts(params.code, survival.n_stations), skr);
    Ok(RunReport {
        architecture: Architecture::Qpc,
        channels: 1,
        expected_pairs_end_to_end: survival.end_to_end,
        final_state: state,
        secret_fraction: fraction,
        skr_per_burst: skr,
        skr_per_channel_use_per_burst: skr,
        reset_profile: None,
        schedule: None,
        timing: None,
        costs,
    })
}

/// Lower-bound TEC operation counts: `n*m` transversal CNOTs, `2*n*m`
/// single-qubit measurements and `3*n*m` qubits per station, ancillas
/// excluded.
pub fn qpc_operation_counts(code: QpcCode, n_stations: usize) -> CostReport {
    let nm = code.photons() as u64;
    let s = n_stations as u64;
    CostReport::raw(
        s.saturating_sub(1),
        3 * nm * s,
        (nm * s) as f64,
        (2 * nm * s) as f64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(n: usize, m: usize) -> QpcCode {
        QpcCode::new(n, m).unwrap()
    }

    fn perfect() -> Physics {
        Physics {
            eta_c: 1.0,
            eps_g: 0.0,
            xi: Some(0.0),
            ..Physics::default()
        }
    }

    #[test]
    fn success_cases() {
        for n in 1..=5 {
            for m in 1..=5 {
                assert_eq!(qpc_success_prob(code(n, m), 1.0), 1.0);
            }
        }
        assert!((qpc_success_prob(code(2, 2), 0.9) - 0.9477).abs() < 1e-12);
        for eta in [0.0, 0.3, 0.77, 1.0] {
            assert!((qpc_success_prob(code(1, 1), eta) - eta).abs() < 1e-15);
        }
    }

    #[test]
    fn code_bounds() {
        assert!(QpcCode::new(0, 1).is_err());
        assert!(QpcCode::new(71, 1).is_err());
        assert!(QpcCode::new(1, 21).is_err());
        assert!(QpcCode::new(70, 20).is_ok());
    }

    #[test]
    fn photon_survival_cases() {
        assert!((photon_survival(1e-12, 1.0, 20.0) - 1.0).abs() < 1e-12);
        let eta = photon_survival(2.0, 0.9, 20.0);
        assert!((eta - 0.9 * (-0.1f64).exp()).abs() < 1e-15);
        assert!((eta - 0.81435).abs() < 1e-5);
    }

    #[test]
    fn end_to_end_survival_falls_with_distance() {
        let mut last = 1.0;
        for d in [10.0, 50.0, 100.0, 400.0, 1000.0] {
            let p = OnewayParams::new(code(4, 3), 2.0, d, Physics::default());
            let s = station_survival(&p).end_to_end;
            assert!(s <= last);
            last = s;
        }
    }

    #[test]
    fn flip_accumulation() {
        assert!((accumulate_flips(0.1, 2) - 0.18).abs() < 1e-15);
        assert_eq!(accumulate_flips(0.1, 0), 0.0);
    }

    #[test]
    fn perfect_everything_gives_unit_rate() {
        let mut p = OnewayParams::new(code(3, 2), 1.0, 1.0, perfect());
        p.physics.l_att = 1e12;
        let r = oneway_skr(&p).unwrap();
        assert!((r.skr_per_channel_use_per_burst - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_coeff_is_pure_erasure() {
        let mut p = OnewayParams::new(code(5, 4), 2.0, 300.0, Physics::default());
        p.logical_error_coeff = 0.0;
        let r = oneway_skr(&p).unwrap();
        assert_eq!(r.secret_fraction, 1.0);
        assert!((r.skr_per_burst - station_survival(&p).end_to_end).abs() < 1e-15);
    }

    #[test]
    fn rate_nonincreasing_in_gate_error() {
        let mut last = f64::INFINITY;
        for eps in [0.0, 1e-5, 1e-4, 5e-4, 1e-3, 3e-3] {
            let physics = Physics {
                eps_g: eps,
                ..Physics::default()
            };
            let r = oneway_skr(&OnewayParams::new(code(6, 4), 2.0, 200.0, physics)).unwrap();
            assert!(r.skr_per_burst <= last);
            last = r.skr_per_burst;
        }
    }

    #[test]
    fn saturated_error_gives_zero_rate() {
        let physics = Physics {
            eps_g: 0.01,
            ..Physics::default()
        };
        let r = oneway_skr(&OnewayParams::new(code(40, 20), 2.0, 100.0, physics)).unwrap();
        assert_eq!(r.skr_per_burst, 0.0);
        assert!(r.costs.infinite_per_key());
    }

    #[test]
    fn operation_counts() {
        let c = qpc_operation_counts(code(1, 1), 1);
        assert_eq!(
            (c.two_qubit_gates, c.measurements, c.qubits_per_burst),
            (1.0, 2.0, 3)
        );
        let c = qpc_operation_counts(code(4, 3), 10);
        assert_eq!(
            (c.two_qubit_gates, c.measurements, c.qubits_per_burst),
            (120.0, 240.0, 360)
        );
        assert_eq!(c.repeaters, 9);
        let c20 = qpc_operation_counts(code(4, 3), 20);
        assert_eq!(c20.two_qubit_gates, 2.0 * c.two_qubit_gates);
    }

    #[test]
    fn spacing_bounds_enforced() {
        let p = OnewayParams::new(code(2, 2), 5.0, 100.0, Physics::default());
        assert!(oneway_skr(&p).is_err());
    }
}
