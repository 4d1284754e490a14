//! Sparse Hamiltonians as sums of Pauli strings, and `exp(-i H t) psi` by Taylor series.
//!
//! Qubit 0 is the sensor; qubit `m` (1-based) is nucleus `m`. Basis index bit `q` is the
//! state of qubit `q` (0 = up).

use num_complex::Complex64;

/// `coef * P` where `P` is a tensor product of Paulis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTerm {
    pub coef: f64,
    x_mask: usize,
    z_mask: usize,
    /// `i^{number of Y factors}`.
    phase: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl PauliTerm {
    pub fn new(coef: f64, factors: &[(usize, Pauli)]) -> Self {
        let mut x_mask = 0;
        let mut z_mask = 0;
        let mut n_y = 0;
        for &(q, p) in factors {
            let bit = 1usize << q;
            match p {
                Pauli::X => x_mask |= bit,
                Pauli::Z => z_mask |= bit,
                Pauli::Y => {
                    // Y = i X Z
                    x_mask |= bit;
                    z_mask |= bit;
                    n_y += 1;
                }
            }
        }
        let phase = match n_y % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        Self {
            coef,
            x_mask,
            z_mask,
            phase,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PauliHamiltonian {
    pub terms: Vec<PauliTerm>,
}

impl PauliHamiltonian {
    pub fn push(&mut self, term: PauliTerm) {
        if term.coef != 0.0 {
            self.terms.push(term);
        }
    }

    /// Upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coef.abs()).sum()
    }

    /// `out = H psi`.
    pub fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for term in &self.terms {
            let c = term.phase * term.coef;
            for (b, amp) in psi.iter().enumerate() {
                let sign = if (b & term.z_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                out[b ^ term.x_mask] += c * sign * amp;
            }
        }
    }

    /// `psi <- exp(-i H t) psi`.
    pub fn evolve(&self, t: f64, psi: &mut [Complex64]) {
        let bound = self.norm_bound() * t.abs();
        if bound == 0.0 {
            return;
        }
        let steps = (bound / 0.5).ceil().max(1.0) as usize;
        let h = t / steps as f64;
        let mut term = vec![Complex64::new(0.0, 0.0); psi.len()];
        let mut next = vec![Complex64::new(0.0, 0.0); psi.len()];
        let minus_i_h = Complex64::new(0.0, -h);
        for _ in 0..steps {
            term.copy_from_slice(psi);
            for k in 1..60 {
                self.apply(&term, &mut next);
                let scale = minus_i_h / k as f64;
                let mut largest = 0.0f64;
                for (tv, nv) in term.iter_mut().zip(&next) {
                    *tv = nv * scale;
                    largest = largest.max(tv.norm_sqr());
                }
                for (p, tv) in psi.iter_mut().zip(&term) {
                    *p += tv;
                }
                if largest < 1e-36 {
                    break;
                }
            }
        }
    }
}
