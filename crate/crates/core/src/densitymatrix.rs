//! Small dense density-matrix simulator used as an independent reference for
//! the Bell-diagonal swap and DEJMPS maps.
//!
//! Qubit 0 is the most significant bit of a basis index.

use num_complex::Complex64;

use crate::bellstate::BellDiagState;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    dim: usize,
    data: Vec<Complex64>,
}

impl Mat {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_real(dim: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), dim * dim);
        Self {
            dim,
            data: rows.iter().map(|x| Complex64::new(*x, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outer(v: &[Complex64]) -> Self {
        let dim = v.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn kron(&self, other: &Mat) -> Mat {
        let dim = self.dim * other.dim;
        let mut m = Mat::zeros(dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self[(i, j)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..other.dim {
                    for l in 0..other.dim {
                        m[(i * other.dim + k, j * other.dim + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        m
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut m = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    m[(i, j)] += a * other[(k, j)];
                }
            }
        }
        m
    }

    pub fn dagger(&self) -> Mat {
        let mut m = Mat::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self[(j, i)].conj();
            }
        }
        m
    }

    pub fn add(&self, other: &Mat) -> Mat {
        Mat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            dim: self.dim,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &Mat) -> Mat {
        u.mul(self).mul(&u.dagger())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// `⟨v|ρ|v⟩`.
    pub fn expectation(&self, v: &[Complex64]) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += v[i].conj() * self[(i, j)] * v[j];
            }
        }
        s
    }

    /// Partial trace keeping the listed qubits, in the given order.
    pub fn partial_trace(&self, n_qubits: usize, keep: &[usize]) -> Mat {
        assert_eq!(1 << n_qubits, self.dim);
        let traced: Vec<usize> = (0..n_qubits).filter(|q| !keep.contains(q)).collect();
        let bit = |idx: usize, q: usize| (idx >> (n_qubits - 1 - q)) & 1;
        let compose = |kept: usize, rest: usize| {
            let mut idx = 0;
            for (pos, &q) in keep.iter().enumerate() {
                idx |= ((kept >> (keep.len() - 1 - pos)) & 1) << (n_qubits - 1 - q);
            }
            for (pos, &q) in traced.iter().enumerate() {
                idx |= ((rest >> (traced.len() - 1 - pos)) & 1) << (n_qubits - 1 - q);
            }
            debug_assert!(keep.iter().all(|&q| bit(idx, q) <= 1));
            idx
        };
        let out_dim = 1 << keep.len();
        let mut m = Mat::zeros(out_dim);
        for i in 0..out_dim {
            for j in 0..out_dim {
                for r in 0..(1 << traced.len()) {
                    m[(i, j)] += self[(compose(i, r), compose(j, r))];
                }
            }
        }
        m
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Bell vectors in the order Φ+, Φ−, Ψ+, Ψ−.
pub fn bell_vectors() -> [[Complex64; 4]; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [
        [c(h), c(0.0), c(0.0), c(h)],
        [c(h), c(0.0), c(0.0), c(-h)],
        [c(0.0), c(h), c(h), c(0.0)],
        [c(0.0), c(h), c(-h), c(0.0)],
    ]
}

/// Pauli correction mapping Φ+ onto Bell state `k` when applied to the
/// second qubit: I, Z, X, XZ.
pub fn pauli(k: usize) -> Mat {
    match k {
        0 => Mat::identity(2),
        1 => Mat::from_real(2, &[1.0, 0.0, 0.0, -1.0]),
        2 => Mat::from_real(2, &[0.0, 1.0, 1.0, 0.0]),
        3 => Mat::from_real(2, &[0.0, -1.0, 1.0, 0.0]),
        _ => panic!("Pauli index {k}"),
    }
}

/// `exp(-i θ X / 2)`.
pub fn rx(theta: f64) -> Mat {
    let (s, co) = (0.5 * theta).sin_cos();
    let mut m = Mat::zeros(2);
    m[(0, 0)] = c(co);
    m[(1, 1)] = c(co);
    m[(0, 1)] = Complex64::new(0.0, -s);
    m[(1, 0)] = Complex64::new(0.0, -s);
    m
}

/// Operator acting as `op` on `qubit` of an `n`-qubit register.
pub fn embed(op: &Mat, qubit: usize, n: usize) -> Mat {
    let id = Mat::identity(2);
    let mut m = Mat::identity(1);
    for q in 0..n {
        m = m.kron(if q == qubit { op } else { &id });
    }
    m
}

pub fn cnot(control: usize, target: usize, n: usize) -> Mat {
    let dim = 1 << n;
    let mut m = Mat::zeros(dim);
    for i in 0..dim {
        let j = if (i >> (n - 1 - control)) & 1 == 1 {
            i ^ (1 << (n - 1 - target))
        } else {
            i
        };
        m[(j, i)] = c(1.0);
    }
    m
}

pub fn bell_diagonal(s: &BellDiagState) -> Mat {
    bell_vectors()
        .iter()
        .zip(s.coeffs())
        .fold(Mat::zeros(4), |acc, (v, p)| {
            acc.add(&Mat::outer(v).scale(p))
        })
}

/// Bell-basis populations of a two-qubit matrix and the largest magnitude of
/// any off-diagonal Bell-basis element.
pub fn bell_populations(rho: &Mat) -> ([f64; 4], f64) {
    let b = bell_vectors();
    let mut pops = [0.0; 4];
    let mut off: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..4 {
                for l in 0..4 {
                    s += b[i][k].conj() * rho[(k, l)] * b[j][l];
                }
            }
            if i == j {
                pops[i] = s.re;
            } else {
                off = off.max(s.norm());
            }
        }
    }
    (pops, off)
}

/// Swap by explicit Bell measurement on the middle qubits of `A–B1, B2–C`
/// followed by the Pauli correction on `C`, averaged over outcomes.
pub fn swap_reference(a: &BellDiagState, b: &BellDiagState) -> Mat {
    let rho = bell_diagonal(a).kron(&bell_diagonal(b));
    let bells = bell_vectors();
    let mut out = Mat::zeros(16);
    for (k, v) in bells.iter().enumerate() {
        let proj = Mat::identity(2)
            .kron(&Mat::outer(v))
            .kron(&Mat::identity(2));
        let fix = embed(&pauli(k), 3, 4);
        let branch = rho.conjugate_by(&proj).conjugate_by(&fix);
        out = out.add(&branch);
    }
    out.partial_trace(4, &[0, 3])
}

/// DEJMPS on pairs `(A1, B1)` and `(A2, B2)` held as qubits `0, 1, 2, 3`.
/// Returns the success probability and the normalized kept pair.
pub fn dejmps_reference(a: &BellDiagState, b: &BellDiagState) -> (f64, Mat) {
    let n = 4;
    let rho = bell_diagonal(a).kron(&bell_diagonal(b));
    let half = std::f64::consts::FRAC_PI_2;
    let mut u = Mat::identity(16);
    for (q, theta) in [(0, half), (2, half), (1, -half), (3, -half)] {
        u = embed(&rx(theta), q, n).mul(&u);
    }
    u = cnot(0, 2, n).mul(&u);
    u = cnot(1, 3, n).mul(&u);
    let rho = rho.conjugate_by(&u);
    // Keep outcomes where the target pair agrees in the Z basis.
    let mut keep = Mat::zeros(16);
    for i in 0..16 {
        let (t_a, t_b) = ((i >> 1) & 1, i & 1);
        if t_a == t_b {
            keep[(i, i)] = c(1.0);
        }
    }
    let kept = rho.conjugate_by(&keep);
    let p = kept.trace().re;
    (p, kept.partial_trace(n, &[0, 1]).scale(1.0 / p))
}
