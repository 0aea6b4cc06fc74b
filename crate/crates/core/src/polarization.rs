//! Polarization-qubit algebra.
//!
//! States are stored in the circular basis `{|L⟩, |R⟩}`. The linear states are
//! derived from it:
//!
//! ```text
//! |H⟩ = (|L⟩ + |R⟩)/√2        |V⟩ = i(|L⟩ − |R⟩)/√2
//! |D⟩ = (|H⟩ + |V⟩)/√2        |A⟩ = (|H⟩ − |V⟩)/√2
//! ```
//!
//! Stokes convention (the only place it is defined):
//!
//! ```text
//! s0 = |aL|² + |aR|²
//! s1 = 2 Re(aL* aR)      (+1 for |H⟩)
//! s2 = −2 Im(aL* aR)     (+1 for |D⟩)
//! s3 = |aL|² − |aR|²     (+1 for |L⟩)
//! ```
//!
//! Waveplate matrices are built in the `{H, V}` frame, where the fast-axis angle
//! is measured from `H`, and then moved into the circular frame.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Mul;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A 2×2 complex matrix in the `{L, R}` basis.
pub type Matrix = Matrix2<Complex64>;

/// Jones vector in the circular basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JonesVector {
    /// Left-circular (σ+) amplitude.
    pub l: Complex64,
    /// Right-circular (σ−) amplitude.
    pub r: Complex64,
}

impl JonesVector {
    pub const fn new(l: Complex64, r: Complex64) -> Self {
        JonesVector { l, r }
    }

    pub fn left() -> Self {
        JonesVector::new(ONE, ZERO)
    }

    pub fn right() -> Self {
        JonesVector::new(ZERO, ONE)
    }

    pub fn horizontal() -> Self {
        JonesVector::new(ONE * FRAC_1_SQRT_2, ONE * FRAC_1_SQRT_2)
    }

    pub fn vertical() -> Self {
        JonesVector::new(I * FRAC_1_SQRT_2, -I * FRAC_1_SQRT_2)
    }

    pub fn diagonal() -> Self {
        let h = JonesVector::horizontal();
        let v = JonesVector::vertical();
        JonesVector::new((h.l + v.l) * FRAC_1_SQRT_2, (h.r + v.r) * FRAC_1_SQRT_2)
    }

    pub fn antidiagonal() -> Self {
        let h = JonesVector::horizontal();
        let v = JonesVector::vertical();
        JonesVector::new((h.l - v.l) * FRAC_1_SQRT_2, (h.r - v.r) * FRAC_1_SQRT_2)
    }

    /// Builds a vector from `{H, V}` amplitudes.
    pub fn from_linear(h: Complex64, v: Complex64) -> Self {
        let hv = hv_to_lr() * Vector2::new(h, v);
        JonesVector::new(hv[0], hv[1])
    }

    /// Returns the `{H, V}` amplitudes.
    pub fn to_linear(&self) -> (Complex64, Complex64) {
        let hv = hv_to_lr().adjoint() * self.as_vector();
        (hv[0], hv[1])
    }

    pub fn as_vector(&self) -> Vector2<Complex64> {
        Vector2::new(self.l, self.r)
    }

    pub fn from_vector(v: Vector2<Complex64>) -> Self {
        JonesVector::new(v[0], v[1])
    }

    /// Total intensity `|aL|² + |aR|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.l.norm_sqr() + self.r.norm_sqr()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= 1e-12
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        JonesVector::new(self.l / n, self.r / n)
    }

    pub fn inner(&self, other: &JonesVector) -> Complex64 {
        self.l.conj() * other.l + self.r.conj() * other.r
    }

    /// `|⟨self|other⟩|²`, insensitive to global phase.
    pub fn overlap(&self, other: &JonesVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn stokes(&self) -> StokesVector {
        jones_to_stokes(self)
    }

    /// Equality up to a global phase, for normalized states.
    pub fn approx_eq_up_to_phase(&self, other: &JonesVector, tol: f64) -> bool {
        (1.0 - self.overlap(other)).abs() <= tol
    }

    /// Outer product `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> Matrix {
        let v = self.as_vector();
        v * v.adjoint()
    }
}

/// Stokes parameters, see the module docs for the sign convention.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StokesVector {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    /// `s1² + s2² + s3²`.
    pub fn polarized_power(&self) -> f64 {
        self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3
    }

    pub fn degree_of_polarization(&self) -> f64 {
        if self.s0 == 0.0 {
            0.0
        } else {
            self.polarized_power().sqrt() / self.s0
        }
    }

    /// Squared Euclidean distance between the `(s1, s2, s3)` parts.
    pub fn distance_sqr(&self, other: &StokesVector) -> f64 {
        (self.s1 - other.s1).powi(2) + (self.s2 - other.s2).powi(2) + (self.s3 - other.s3).powi(2)
    }

    pub fn is_physical(&self) -> bool {
        self.polarized_power() <= self.s0 * self.s0 + 1e-9
    }
}

pub fn jones_to_stokes(j: &JonesVector) -> StokesVector {
    let c = j.l.conj() * j.r;
    StokesVector {
        s0: j.norm_sqr(),
        s1: 2.0 * c.re,
        s2: -2.0 * c.im,
        s3: j.l.norm_sqr() - j.r.norm_sqr(),
    }
}

/// Stokes parameters of a 2×2 density matrix in the `{L, R}` basis.
pub fn density_to_stokes(rho: &Matrix) -> StokesVector {
    let c = rho[(1, 0)];
    StokesVector {
        s0: (rho[(0, 0)] + rho[(1, 1)]).re,
        s1: 2.0 * c.re,
        s2: -2.0 * c.im,
        s3: (rho[(0, 0)] - rho[(1, 1)]).re,
    }
}

/// Change of basis taking `{H, V}` coordinates to `{L, R}` coordinates.
pub fn hv_to_lr() -> Matrix {
    let s = FRAC_1_SQRT_2;
    Matrix::new(ONE * s, I * s, ONE * s, -I * s)
}

/// A 2×2 unitary acting on the polarization qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarizationUnitary(pub Matrix);

impl PolarizationUnitary {
    pub fn identity() -> Self {
        PolarizationUnitary(Matrix::identity())
    }

    /// Wraps a matrix, rejecting it if `U†U` differs from `I` by more than 1e-10.
    pub fn try_new(m: Matrix) -> Option<Self> {
        let u = PolarizationUnitary(m);
        (u.unitarity_error() <= 1e-10).then_some(u)
    }

    /// Wraps a matrix given in the `{H, V}` frame.
    pub fn from_linear_frame(m: Matrix) -> Self {
        let t = hv_to_lr();
        PolarizationUnitary(t * m * t.adjoint())
    }

    /// Rotation of the Poincaré sphere by `angle` about the unit Stokes axis
    /// `axis = (n1, n2, n3)`.
    pub fn rotation(axis: [f64; 3], angle: f64) -> Self {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if norm == 0.0 || angle == 0.0 {
            return PolarizationUnitary::identity();
        }
        let [n1, n2, n3] = axis.map(|a| a / norm);
        // Generators whose expectation values are s1, s2, s3. This triple has
        // the opposite handedness to the Pauli matrices, hence `+i` below.
        let gen = Matrix::new(
            ONE * n3,
            ONE * n1 + I * n2,
            ONE * n1 - I * n2,
            -ONE * n3,
        );
        let (s, c) = (angle / 2.0).sin_cos();
        PolarizationUnitary(Matrix::identity() * Complex64::new(c, 0.0) + gen * (I * s))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        PolarizationUnitary(self.0.adjoint())
    }

    pub fn apply(&self, j: &JonesVector) -> JonesVector {
        JonesVector::from_vector(self.0 * j.as_vector())
    }

    /// Largest entry of `|U†U − I|`.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.0.adjoint() * self.0 - Matrix::identity();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Re-projects onto the unitary group with a Gram–Schmidt pass over the
    /// columns. Used after long products of rotations.
    pub fn reorthonormalized(&self) -> Self {
        let c0 = self.0.column(0).into_owned();
        let n0 = c0.norm();
        let c0 = c0 / Complex64::new(n0, 0.0);
        let c1 = self.0.column(1).into_owned();
        let proj = c0.dotc(&c1);
        let c1 = c1 - c0 * proj;
        let n1 = c1.norm();
        let c1 = c1 / Complex64::new(n1, 0.0);
        PolarizationUnitary(Matrix::from_columns(&[c0, c1]))
    }

    /// `|Tr(U)|/2`, the overlap with the identity up to global phase.
    pub fn identity_overlap(&self) -> f64 {
        self.0.trace().norm() / 2.0
    }

    /// Process fidelity with the identity channel, `|Tr U|²/4`.
    pub fn process_fidelity(&self) -> f64 {
        self.0.trace().norm_sqr() / 4.0
    }
}

impl Mul for PolarizationUnitary {
    type Output = PolarizationUnitary;

    fn mul(self, rhs: PolarizationUnitary) -> PolarizationUnitary {
        PolarizationUnitary(self.0 * rhs.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveplateKind {
    Half,
    Quarter,
}

impl WaveplateKind {
    pub fn retardance(self) -> f64 {
        match self {
            WaveplateKind::Half => std::f64::consts::PI,
            WaveplateKind::Quarter => std::f64::consts::FRAC_PI_2,
        }
    }
}

/// Linear retarder with its fast axis at `axis_angle` radians from `H`.
pub fn waveplate(kind: WaveplateKind, axis_angle: f64) -> PolarizationUnitary {
    retarder(kind.retardance(), axis_angle)
}

/// General linear retarder, symmetric-phase form `R(θ)·diag(e^{−iδ/2}, e^{iδ/2})·R(−θ)`.
pub fn retarder(retardance: f64, axis_angle: f64) -> PolarizationUnitary {
    let (s, c) = axis_angle.sin_cos();
    let rot = |s: f64, c: f64| Matrix::new(ONE * c, -ONE * s, ONE * s, ONE * c);
    let half = retardance / 2.0;
    let d = Matrix::new(
        Complex64::from_polar(1.0, -half),
        ZERO,
        ZERO,
        Complex64::from_polar(1.0, half),
    );
    PolarizationUnitary::from_linear_frame(rot(s, c) * d * rot(-s, c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PbsPort {
    /// Transmits `|H⟩`.
    Transmit,
    /// Reflects `|V⟩`.
    Reflect,
}

impl PbsPort {
    pub const BOTH: [PbsPort; 2] = [PbsPort::Transmit, PbsPort::Reflect];

    pub fn state(self) -> JonesVector {
        match self {
            PbsPort::Transmit => JonesVector::horizontal(),
            PbsPort::Reflect => JonesVector::vertical(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PbsPort::Transmit => "T",
            PbsPort::Reflect => "R",
        }
    }

    pub fn index(self) -> usize {
        match self {
            PbsPort::Transmit => 0,
            PbsPort::Reflect => 1,
        }
    }
}

/// Waveplates in front of a PBS. Light passes the optional quarter-wave plate
/// first, then the half-wave plate. Angles in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    pub qwp: Option<f64>,
    pub hwp: f64,
}

impl AnalyzerSetting {
    pub fn hwp(angle: f64) -> Self {
        AnalyzerSetting { qwp: None, hwp: angle }
    }

    pub fn with_qwp(qwp: f64, hwp: f64) -> Self {
        AnalyzerSetting { qwp: Some(qwp), hwp }
    }

    pub fn unitary(&self) -> PolarizationUnitary {
        let h = waveplate(WaveplateKind::Half, self.hwp);
        match self.qwp {
            Some(q) => h * waveplate(WaveplateKind::Quarter, q),
            None => h,
        }
    }

    /// The state that exits through `port` with certainty.
    pub fn projected_state(&self, port: PbsPort) -> JonesVector {
        self.unitary().adjoint().apply(&port.state())
    }
}

/// `U†|port⟩⟨port|U` for the analyzer's waveplate stack.
pub fn projector(setting: &AnalyzerSetting, port: PbsPort) -> Matrix {
    setting.projected_state(port).density()
}
