//! Planar rotation group SO(2) and its Lie algebra so(2).
//!
//! Rotations are stored as 2x2 orthogonal matrices with the convention
//!
//! ```text
//! R(theta) = [[cos theta, -sin theta],
//!             [sin theta,  cos theta]]
//! ```
//!
//! and the algebra is identified with the reals through
//! `hat(w) = [[0, -w], [w, 0]]`. The group is abelian, so the adjoint and
//! coadjoint actions are identities and every bracket vanishes. The maps are
//! still evaluated through their matrix definitions so that control laws
//! written for general matrix groups read term for term.

use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

/// Element of so(2), identified with a real scalar.
pub type AlgebraScalar = f64;

/// Tolerance on `||R^T R - I||_F` and `|det R - 1|` for a matrix to be
/// accepted as a rotation without projection.
pub const ROTATION_TOL: f64 = 1e-12;

/// Element of SO(2).
#[derive(Clone, Copy, PartialEq)]
pub struct Rotation2 {
    m: Matrix2<f64>,
}

impl fmt::Debug for Rotation2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Rotation2[[{}, {}], [{}, {}]]",
            self.m[(0, 0)],
            self.m[(0, 1)],
            self.m[(1, 0)],
            self.m[(1, 1)]
        )
    }
}

impl Default for Rotation2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation2 {
    pub fn identity() -> Self {
        Self { m: Matrix2::identity() }
    }

    /// Rotation by `theta` radians; same as [`exp`].
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::from_cos_sin(c, s)
    }

    fn from_cos_sin(c: f64, s: f64) -> Self {
        Self {
            m: Matrix2::new(c, -s, s, c),
        }
    }

    /// Accepts `m` only if it is orthogonal with unit determinant to within
    /// [`ROTATION_TOL`]. The matrix is stored as given.
    pub fn try_from_matrix(m: Matrix2<f64>) -> Result<Self> {
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidRotation("non-finite entry".into()));
        }
        let defect = (m.transpose() * m - Matrix2::identity()).norm();
        let det_err = (m.determinant() - 1.0).abs();
        if defect > ROTATION_TOL || det_err > ROTATION_TOL {
            return Err(Error::InvalidRotation(format!(
                "orthogonality defect {defect:e}, determinant error {det_err:e}"
            )));
        }
        Ok(Self { m })
    }

    /// Nearest rotation built from the normalized first column of `m`.
    pub fn project(m: &Matrix2<f64>) -> Result<Self> {
        let col = Vector2::new(m[(0, 0)], m[(1, 0)]);
        let n = col.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::InvalidRotation(
                "first column has zero or non-finite norm".into(),
            ));
        }
        Ok(Self::from_cos_sin(col.x / n, col.y / n))
    }

    /// Strict construction when `m` already satisfies the invariants,
    /// projection otherwise.
    pub fn from_matrix_or_project(m: Matrix2<f64>) -> Result<Self> {
        Self::try_from_matrix(m).or_else(|_| Self::project(&m))
    }

    /// Re-orthonormalizes after accumulated rounding.
    pub fn renormalized(&self) -> Self {
        let c = self.m[(0, 0)];
        let s = self.m[(1, 0)];
        let n = c.hypot(s);
        Self::from_cos_sin(c / n, s / n)
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.m
    }

    pub fn transpose(&self) -> Self {
        Self { m: self.m.transpose() }
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    /// Angle in `(-pi, pi]`; same as [`log`].
    pub fn angle(&self) -> f64 {
        let a = self.m[(1, 0)].atan2(self.m[(0, 0)]);
        // atan2(-0.0, -1.0) is -pi.
        if a == -std::f64::consts::PI {
            std::f64::consts::PI
        } else {
            a
        }
    }

    pub fn cos(&self) -> f64 {
        self.m[(0, 0)]
    }

    pub fn sin(&self) -> f64 {
        self.m[(1, 0)]
    }

    /// `||R^T R - I||_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        (self.m.transpose() * self.m - Matrix2::identity()).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|x| x.is_finite())
    }

    /// Row-major entries.
    pub fn to_row_major(&self) -> [f64; 4] {
        [self.m[(0, 0)], self.m[(0, 1)], self.m[(1, 0)], self.m[(1, 1)]]
    }
}

impl Mul for Rotation2 {
    type Output = Rotation2;

    fn mul(self, rhs: Rotation2) -> Rotation2 {
        Rotation2 { m: self.m * rhs.m }
    }
}

impl Mul<&Matrix2<f64>> for &Rotation2 {
    type Output = Matrix2<f64>;

    fn mul(self, rhs: &Matrix2<f64>) -> Matrix2<f64> {
        self.m * rhs
    }
}

pub fn hat(w: AlgebraScalar) -> Matrix2<f64> {
    Matrix2::new(0.0, -w, w, 0.0)
}

/// Skew-symmetric part `(a - a^T) / 2`.
pub fn skew(a: &Matrix2<f64>) -> Matrix2<f64> {
    (a - a.transpose()) * 0.5
}

pub fn sym(a: &Matrix2<f64>) -> Matrix2<f64> {
    (a + a.transpose()) * 0.5
}

/// Inverse of [`hat`], applied to the skew part of `a`: `(a21 - a12) / 2`.
pub fn vee(a: &Matrix2<f64>) -> AlgebraScalar {
    0.5 * (a[(1, 0)] - a[(0, 1)])
}

pub fn exp(w: AlgebraScalar) -> Rotation2 {
    Rotation2::from_angle(w)
}

pub fn log(r: &Rotation2) -> AlgebraScalar {
    r.angle()
}

/// Trace pairing `<a, hat(1)>` read as `tr(a * hat(1)) = -2 vee(a)`.
///
/// For a scalar function `f(R) = tr(A R)`, the derivative along the right
/// perturbation `R exp(eps hat(1))` is `trace_pair(A R)`. The potential and
/// Coriolis coefficients of the pendubot are all of this form.
pub fn trace_pair(a: &Matrix2<f64>) -> f64 {
    (a * hat(1.0)).trace()
}

/// Frobenius inner product `<a, b> = tr(a^T b)`.
pub fn frobenius(a: &Matrix2<f64>, b: &Matrix2<f64>) -> f64 {
    (a.transpose() * b).trace()
}

/// Matrix commutator `[hat(a), hat(b)]`, returned through vee.
pub fn bracket(a: AlgebraScalar, b: AlgebraScalar) -> AlgebraScalar {
    let (ha, hb) = (hat(a), hat(b));
    vee(&(ha * hb - hb * ha))
}

/// Adjoint action `Ad_R w = vee(R hat(w) R^T)`.
pub fn adjoint(r: &Rotation2, w: AlgebraScalar) -> AlgebraScalar {
    vee(&(r.m * hat(w) * r.m.transpose()))
}

/// Coadjoint action `Ad*_R mu = vee(R^T hat(mu) R)` under the trace pairing.
pub fn coadjoint(r: &Rotation2, mu: AlgebraScalar) -> AlgebraScalar {
    vee(&(r.m.transpose() * hat(mu) * r.m))
}

/// Dual of the algebra adjoint, `ad*_xi mu`, defined by
/// `<ad*_xi mu, eta> = <mu, [xi, eta]>`. For matrix algebras with the trace
/// pairing this is `[xi^T, mu]`.
pub fn ad_star(xi: AlgebraScalar, mu: AlgebraScalar) -> AlgebraScalar {
    let (hx, hm) = (hat(xi).transpose(), hat(mu));
    vee(&(hx * hm - hm * hx))
}

/// Lie-algebra connection of the left-invariant metric induced by `inertia`:
///
/// `nabla_xi nu = 1/2 [xi, nu] - 1/2 I^-1 (ad*_xi I nu + ad*_nu I xi)`.
pub fn connection_term(xi: AlgebraScalar, nu: AlgebraScalar, inertia: f64) -> AlgebraScalar {
    debug_assert!(inertia > 0.0);
    0.5 * bracket(xi, nu) - 0.5 * (ad_star(xi, inertia * nu) + ad_star(nu, inertia * xi)) / inertia
}
