//! Density matrices for the atom ⊗ photon pair.
//!
//! The basis ordering is `{|⇓⟩, |⇑⟩} ⊗ {|L⟩, |R⟩}`, so index `2·atom + photon`
//! with `⇓ = 0`, `⇑ = 1`, `L = 0`, `R = 1`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix4c = Matrix4<Complex64>;
pub type Matrix2c = Matrix2<Complex64>;

const TOL: f64 = 1e-10;

/// Atom (memory qubit) ⊗ photon (polarization qubit) density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitState {
    rho: Matrix4c,
}

impl TwoQubitState {
    /// Wraps `rho` after checking Hermiticity, unit trace and positivity.
    pub fn new(rho: Matrix4c) -> Result<Self> {
        let s = TwoQubitState { rho };
        s.validate()?;
        Ok(s)
    }

    /// `(|⇓L⟩ + |⇑R⟩)/√2`.
    pub fn bell() -> Self {
        let v = Vector4::new(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(FRAC_1_SQRT_2, 0.0),
        );
        TwoQubitState { rho: v * v.adjoint() }
    }

    pub fn maximally_mixed() -> Self {
        TwoQubitState { rho: Matrix4c::identity() * Complex64::new(0.25, 0.0) }
    }

    pub fn pure(psi: Vector4<Complex64>) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let psi = psi / Complex64::new(n, 0.0);
        Ok(TwoQubitState { rho: psi * psi.adjoint() })
    }

    /// Convex combination `(1 − w)·self + w·other`.
    pub fn mix(&self, other: &TwoQubitState, w: f64) -> Self {
        TwoQubitState {
            rho: self.rho * Complex64::new(1.0 - w, 0.0) + other.rho * Complex64::new(w, 0.0),
        }
    }

    pub fn matrix(&self) -> &Matrix4c {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.rho).eigenvalues.min()
    }

    pub fn validate(&self) -> Result<()> {
        let herm = (self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.2e})")));
        }
        let tr = self.rho.trace();
        if (tr.re - 1.0).abs() > TOL || tr.im.abs() > TOL {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.2e}")));
        }
        Ok(())
    }

    /// `⟨Φ|ρ|Φ⟩` for the reference Bell state.
    pub fn bell_fidelity(&self) -> f64 {
        let b = TwoQubitState::bell();
        (self.rho * b.rho).trace().re
    }

    /// Applies `U ⊗ I` (atom) for a 2×2 `U`.
    pub fn apply_atom(&self, u: &Matrix2c) -> Self {
        let k = kron(u, &Matrix2c::identity());
        TwoQubitState { rho: k * self.rho * k.adjoint() }
    }

    /// Applies `I ⊗ U` (photon) for a 2×2 `U`.
    pub fn apply_photon(&self, u: &Matrix2c) -> Self {
        let k = kron(&Matrix2c::identity(), u);
        TwoQubitState { rho: k * self.rho * k.adjoint() }
    }

    /// Multiplies the atomic coherences (the `⇓⇑` blocks) by `factor`.
    pub fn dephase_atom(&self, factor: f64) -> Self {
        let mut rho = self.rho;
        for i in 0..2 {
            for j in 2..4 {
                rho[(i, j)] *= factor;
                rho[(j, i)] *= factor;
            }
        }
        TwoQubitState { rho }
    }

    pub fn atom_reduced(&self) -> Matrix2c {
        let mut out = Matrix2c::zeros();
        for a in 0..2 {
            for b in 0..2 {
                out[(a, b)] = self.rho[(2 * a, 2 * b)] + self.rho[(2 * a + 1, 2 * b + 1)];
            }
        }
        out
    }

    pub fn photon_reduced(&self) -> Matrix2c {
        let mut out = Matrix2c::zeros();
        for p in 0..2 {
            for q in 0..2 {
                out[(p, q)] = self.rho[(p, q)] + self.rho[(2 + p, 2 + q)];
            }
        }
        out
    }

    /// Unnormalized atomic state after the photon is acted on by the Kraus
    /// operator `k` and then found in the projector `proj`:
    /// `Tr_photon[(I ⊗ proj·k) ρ (I ⊗ k†·proj)]`. Its trace is the joint
    /// probability of the photon branch.
    pub fn atom_given_photon(&self, k: &Matrix2c, proj: &Matrix2c) -> Matrix2c {
        let op = proj * k;
        let full = kron(&Matrix2c::identity(), &op);
        let rho = full * self.rho * full.adjoint();
        TwoQubitState { rho }.atom_reduced()
    }

    /// `Tr[(A ⊗ P) ρ]`.
    pub fn expectation(&self, atom: &Matrix2c, photon: &Matrix2c) -> f64 {
        (kron(atom, photon) * self.rho).trace().re
    }
}

pub fn kron(a: &Matrix2c, b: &Matrix2c) -> Matrix4c {
    let mut out = Matrix4c::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Hermiticity, unit trace and positivity for a 2×2 density matrix.
pub fn validate_qubit(rho: &Matrix2c) -> Result<()> {
    let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tr = rho.trace();
    if herm > TOL || (tr.re - 1.0).abs() > TOL || tr.im.abs() > TOL {
        return Err(Error::InvalidState("qubit density matrix is not Hermitian with unit trace".into()));
    }
    let min = SymmetricEigen::new(*rho).eigenvalues.min();
    if min < -TOL {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:.2e}")));
    }
    Ok(())
}
