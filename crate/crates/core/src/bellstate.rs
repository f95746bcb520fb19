//! Bell-diagonal two-qubit states and the channels that act on them.
//!
//! Coefficients are ordered `(Φ+, Φ−, Ψ+, Ψ−)`. Identifying each Bell state
//! with the Pauli that maps Φ+ onto it (I, Z, X, XZ) turns the index set into
//! the Klein four-group, with the group product given by XOR of the indices.

use std::fmt;

use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

/// Two-qubit state diagonal in the Bell basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellDiagState {
    coeffs: [f64; 4],
}

/// Gate error, measurement error and memory dephasing time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub gate_error: f64,
    pub meas_error: f64,
    /// Seconds. `f64::INFINITY` disables dephasing.
    pub t2: f64,
}

impl NoiseParams {
    pub fn new(gate_error: f64, meas_error: f64, t2: f64) -> Result<Self> {
        for (name, p) in [("gate_error", gate_error), ("meas_error", meas_error)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if !(t2 > 0.0) {
            return Err(Error::Domain(format!("t2 = {t2} must be positive")));
        }
        Ok(Self {
            gate_error,
            meas_error,
            t2,
        })
    }

    pub fn noiseless() -> Self {
        Self {
            gate_error: 0.0,
            meas_error: 0.0,
            t2: f64::INFINITY,
        }
    }

    /// Weight of the depolarizing component applied per swap or distillation step.
    pub fn effective_depolarization(&self) -> f64 {
        1.0 - (1.0 - self.gate_error) * (1.0 - self.meas_error).powi(2)
    }
}

impl BellDiagState {
    pub fn new(coeffs: [f64; 4]) -> Result<Self> {
        if coeffs
            .iter()
            .any(|c| !(-NORM_TOL..=1.0 + NORM_TOL).contains(c))
        {
            return Err(Error::Domain(format!(
                "Bell coefficients {coeffs:?} outside [0, 1]"
            )));
        }
        let sum: f64 = coeffs.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::Domain(format!(
                "Bell coefficients sum to {sum}, expected 1"
            )));
        }
        Ok(Self {
            coeffs: coeffs.map(|c| c.clamp(0.0, 1.0)),
        })
    }

    pub fn perfect() -> Self {
        Self {
            coeffs: [1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn maximally_mixed() -> Self {
        Self { coeffs: [0.25; 4] }
    }

    /// Werner (depolarized) state with the given fidelity to Φ+.
    pub fn from_depolarized_fidelity(fidelity: f64) -> Result<Self> {
        if !(0.25..=1.0).contains(&fidelity) {
            return Err(Error::Domain(format!(
                "fidelity {fidelity} outside [0.25, 1]"
            )));
        }
        let rest = (1.0 - fidelity) / 3.0;
        Ok(Self {
            coeffs: [fidelity, rest, rest, rest],
        })
    }

    pub fn coeffs(&self) -> [f64; 4] {
        self.coeffs
    }

    pub fn fidelity(&self) -> f64 {
        self.coeffs[0]
    }

    /// Bit-flip error rate seen by a Z-basis measurement on both halves.
    pub fn qber_z(&self) -> f64 {
        self.coeffs[2] + self.coeffs[3]
    }

    /// Phase-flip error rate seen by an X-basis measurement on both halves.
    pub fn qber_x(&self) -> f64 {
        self.coeffs[1] + self.coeffs[3]
    }

    /// Mixes in the maximally mixed state with weight `weight`.
    pub fn depolarize(&self, weight: f64) -> Self {
        Self {
            coeffs: self.coeffs.map(|c| (1.0 - weight) * c + weight * 0.25),
        }
        .renormalized()
    }

    fn renormalized(self) -> Self {
        let sum: f64 = self.coeffs.iter().sum();
        Self {
            coeffs: self.coeffs.map(|c| (c / sum).max(0.0)),
        }
    }
}

impl fmt::Display for BellDiagState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.coeffs;
        write!(f, "(Φ+ {a:.6}, Φ− {b:.6}, Ψ+ {c:.6}, Ψ− {d:.6})")
    }
}

/// Memory dephasing for `t` seconds: Φ+↔Φ− and Ψ+↔Ψ− mix with weight
/// `(1 + exp(-t/t2)) / 2` kept on the original component.
pub fn dephase(s: &BellDiagState, t: f64, t2: f64) -> Result<BellDiagState> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("negative storage time {t}")));
    }
    if !(t2 > 0.0) {
        return Err(Error::Domain(format!("t2 = {t2} must be positive")));
    }
    let keep = 0.5 * (1.0 + (-t / t2).exp());
    let flip = 1.0 - keep;
    let [a, b, c, d] = s.coeffs;
    Ok(BellDiagState {
        coeffs: [
            keep * a + flip * b,
            keep * b + flip * a,
            keep * c + flip * d,
            keep * d + flip * c,
        ],
    })
}

/// Entanglement swap of two Bell-diagonal pairs, followed by the
/// single-parameter depolarizing noise of the Bell measurement.
pub fn swap(a: &BellDiagState, b: &BellDiagState, np: &NoiseParams) -> BellDiagState {
    let mut core = [0.0; 4];
    for (i, &ai) in a.coeffs.iter().enumerate() {
        for (j, &bj) in b.coeffs.iter().enumerate() {
            core[i ^ j] += ai * bj;
        }
    }
    BellDiagState { coeffs: core }.depolarize(np.effective_depolarization())
}

/// Outcome of one DEJMPS round on two pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distilled {
    pub success_prob: f64,
    pub state: BellDiagState,
}

/// One DEJMPS round (Alice rotates by +π/2 about X, Bob by −π/2, bilateral
/// CNOT, Z-basis measurement of the target pair, keep on agreement).
///
/// Gate and measurement noise enters as depolarization with the effective
/// weight applied to each input pair before the bilateral CNOT.
pub fn dejmps(a: &BellDiagState, b: &BellDiagState, np: &NoiseParams) -> Result<Distilled> {
    let eps = np.effective_depolarization();
    let [a1, a2, a3, a4] = a.depolarize(eps).coeffs;
    let [b1, b2, b3, b4] = b.depolarize(eps).coeffs;
    let d = (a1 + a4) * (b1 + b4) + (a2 + a3) * (b2 + b3);
    if d <= 0.0 {
        return Err(Error::UndefinedOutput);
    }
    let out = [
        a1 * b1 + a4 * b4,
        a1 * b4 + a4 * b1,
        a2 * b2 + a3 * b3,
        a2 * b3 + a3 * b2,
    ];
    Ok(Distilled {
        success_prob: d,
        state: BellDiagState {
            coeffs: out.map(|c| c / d),
        }
        .renormalized(),
    })
}

/// Shannon binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Asymptotic one-way BB84 key fraction `max(0, 1 − h(e_x) − h(e_z))`.
pub fn secret_fraction(s: &BellDiagState) -> f64 {
    (1.0 - binary_entropy(s.qber_x()) - binary_entropy(s.qber_z())).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: [f64; 4], b: [f64; 4], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    fn werner(f: f64) -> BellDiagState {
        BellDiagState::from_depolarized_fidelity(f).unwrap()
    }

    #[test]
    fn depolarized_fidelity_forms() {
        assert_eq!(werner(1.0).coeffs(), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(werner(0.25).coeffs(), [0.25; 4]);
        let s = werner(0.99);
        assert!(close(
            s.coeffs(),
            [0.99, 0.01 / 3.0, 0.01 / 3.0, 0.01 / 3.0],
            1e-15
        ));
        assert!(BellDiagState::from_depolarized_fidelity(0.2).is_err());
        assert!(BellDiagState::from_depolarized_fidelity(1.01).is_err());
    }

    #[test]
    fn new_rejects_unnormalized() {
        assert!(BellDiagState::new([0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(BellDiagState::new([1.2, -0.2, 0.0, 0.0]).is_err());
        assert!(BellDiagState::new([0.7, 0.1, 0.1, 0.1]).is_ok());
    }

    #[test]
    fn dephase_cases() {
        let s = werner(0.9);
        assert_eq!(dephase(&s, 0.0, 1.0).unwrap(), s);
        let p = BellDiagState::perfect();
        let inf = dephase(&p, 1e6, 1.0).unwrap();
        assert!(close(inf.coeffs(), [0.5, 0.5, 0.0, 0.0], 1e-12));
        let half = dephase(&p, 2f64.ln(), 1.0).unwrap();
        assert!(close(half.coeffs(), [0.75, 0.25, 0.0, 0.0], 1e-12));
        assert!(dephase(&p, -1.0, 1.0).is_err());
        assert_eq!(dephase(&s, 5.0, f64::INFINITY).unwrap(), s);
    }

    #[test]
    fn dephase_semigroup() {
        let s = BellDiagState::new([0.7, 0.1, 0.15, 0.05]).unwrap();
        let two = dephase(&dephase(&s, 0.3, 1.7).unwrap(), 0.9, 1.7).unwrap();
        let one = dephase(&s, 1.2, 1.7).unwrap();
        assert!(close(two.coeffs(), one.coeffs(), 1e-12));
    }

    #[test]
    fn swap_cases() {
        let p = BellDiagState::perfect();
        assert_eq!(swap(&p, &p, &NoiseParams::noiseless()), p);

        let w = werner(0.9);
        let out = swap(&w, &w, &NoiseParams::noiseless());
        assert!((out.fidelity() - (0.81 + 3.0 * (0.1f64 / 3.0).powi(2))).abs() < 1e-15);
        assert!((out.fidelity() - 0.813333333333).abs() < 1e-9);

        let noisy = NoiseParams::new(0.01, 0.0, 1.0).unwrap();
        let out = swap(&p, &p, &noisy);
        assert!(close(out.coeffs(), [0.9925, 0.0025, 0.0025, 0.0025], 1e-15));
    }

    #[test]
    fn swap_fidelity_bounded_by_inputs() {
        for fa in [0.5, 0.6, 0.75, 0.9, 0.99] {
            for fb in [0.5, 0.7, 0.95, 1.0] {
                let out = swap(&werner(fa), &werner(fb), &NoiseParams::noiseless());
                assert!(out.fidelity() <= fa.min(fb) + 1e-15);
            }
        }
    }

    #[test]
    fn dejmps_cases() {
        let p = BellDiagState::perfect();
        let r = dejmps(&p, &p, &NoiseParams::noiseless()).unwrap();
        assert_eq!(r.success_prob, 1.0);
        assert_eq!(r.state.coeffs(), [1.0, 0.0, 0.0, 0.0]);

        let m = BellDiagState::maximally_mixed();
        let r = dejmps(&m, &m, &NoiseParams::noiseless()).unwrap();
        assert!((r.success_prob - 0.5).abs() < 1e-15);
        assert!(close(r.state.coeffs(), [0.25; 4], 1e-15));

        let bad = BellDiagState::new([0.0, 0.0, 1.0, 0.0]).unwrap();
        let good = BellDiagState::perfect();
        assert_eq!(
            dejmps(&bad, &good, &NoiseParams::noiseless()),
            Err(Error::UndefinedOutput)
        );
    }

    #[test]
    fn dejmps_improves_werner() {
        for f in [0.51, 0.6, 0.7, 0.8, 0.9, 0.99] {
            let w = werner(f);
            let r = dejmps(&w, &w, &NoiseParams::noiseless()).unwrap();
            assert!(r.state.fidelity() > f, "F={f}");
        }
    }

    #[test]
    fn secret_fraction_cases() {
        assert_eq!(secret_fraction(&BellDiagState::perfect()), 1.0);
        assert_eq!(secret_fraction(&BellDiagState::maximally_mixed()), 0.0);
        // Werner with e_x = e_z = 2(1-F)/3 = 0.11.
        let w = werner(1.0 - 0.165);
        let expected = 1.0 - 2.0 * binary_entropy(0.11);
        assert!((secret_fraction(&w) - expected).abs() < 1e-12);
        assert!((expected - 1.680836709e-4).abs() < 1e-12);
        // 1 - 2h(Q) crosses zero at Q ~= 0.110028
        let (mut lo, mut hi) = (0.1, 0.12);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if 1.0 - 2.0 * binary_entropy(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - 0.110028).abs() < 1e-6);
        assert_eq!(secret_fraction(&werner(1.0 - 1.5 * 0.1101)), 0.0);
    }

    #[test]
    fn secret_fraction_monotone_on_werner_family() {
        let mut last = 0.0;
        for i in 0..=300 {
            let f = 0.25 + 0.75 * i as f64 / 300.0;
            let r = secret_fraction(&werner(f));
            assert!(r >= last - 1e-15);
            last = r;
        }
    }
}
