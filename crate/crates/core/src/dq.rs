//! Rotating-frame vector algebra, instantaneous power and saturation operators.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A two-component vector in the grid-synchronous dq frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DqVector {
    pub d: f64,
    pub q: f64,
}

impl DqVector {
    pub const ZERO: DqVector = DqVector { d: 0.0, q: 0.0 };

    pub const fn new(d: f64, q: f64) -> Self {
        Self { d, q }
    }

    pub fn norm(self) -> f64 {
        self.d.hypot(self.q)
    }

    pub fn norm_squared(self) -> f64 {
        self.d * self.d + self.q * self.q
    }

    pub fn dot(self, other: DqVector) -> f64 {
        self.d * other.d + self.q * other.q
    }

    pub fn is_finite(self) -> bool {
        self.d.is_finite() && self.q.is_finite()
    }
}

impl Add for DqVector {
    type Output = DqVector;
    fn add(self, rhs: DqVector) -> DqVector {
        DqVector::new(self.d + rhs.d, self.q + rhs.q)
    }
}

impl AddAssign for DqVector {
    fn add_assign(&mut self, rhs: DqVector) {
        self.d += rhs.d;
        self.q += rhs.q;
    }
}

impl Sub for DqVector {
    type Output = DqVector;
    fn sub(self, rhs: DqVector) -> DqVector {
        DqVector::new(self.d - rhs.d, self.q - rhs.q)
    }
}

impl Neg for DqVector {
    type Output = DqVector;
    fn neg(self) -> DqVector {
        DqVector::new(-self.d, -self.q)
    }
}

impl Mul<f64> for DqVector {
    type Output = DqVector;
    fn mul(self, k: f64) -> DqVector {
        DqVector::new(self.d * k, self.q * k)
    }
}

impl Mul<DqVector> for f64 {
    type Output = DqVector;
    fn mul(self, x: DqVector) -> DqVector {
        x * self
    }
}

/// The constant quarter-turn operator `J = [0 -1; 1 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RotationJ;

impl RotationJ {
    pub fn apply(self, x: DqVector) -> DqVector {
        rotate90(x)
    }

    /// `Jᵀ x`, which equals `-J x`.
    pub fn apply_transpose(self, x: DqVector) -> DqVector {
        -rotate90(x)
    }
}

/// Multiplies by `J`: `(d, q) -> (-q, d)`.
pub fn rotate90(x: DqVector) -> DqVector {
    DqVector::new(-x.q, x.d)
}

/// Active and reactive power `(P, Q) = (vᵀi, vᵀJi)`.
pub fn instantaneous_power(v: DqVector, i: DqVector) -> (f64, f64) {
    (v.dot(i), v.dot(rotate90(i)))
}

fn check_limit(limit: f64) -> Result<()> {
    if limit >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("saturation limit must be non-negative, got {limit}")))
    }
}

/// Clamps `x` into `[-limit, limit]`.
pub fn sat_scalar(x: f64, limit: f64) -> Result<f64> {
    check_limit(limit)?;
    Ok(x.clamp(-limit, limit))
}

/// Scales `x` radially so that its norm does not exceed `limit`.
pub fn sat_circular(x: DqVector, limit: f64) -> Result<DqVector> {
    check_limit(limit)?;
    let n = x.norm();
    if n <= limit {
        Ok(x)
    } else {
        Ok(x * (limit / n))
    }
}

const SQRT_2_3: f64 = 0.816_496_580_927_726;

/// Power-invariant Clarke transform followed by a rotation into the frame at `theta_g`.
///
/// Returns `[d, q, 0]`. The composite matrix is orthonormal, so norms and
/// instantaneous power are preserved.
pub fn park_transform(x_abc: [f64; 3], theta_g: f64) -> [f64; 3] {
    let [a, b, c] = x_abc;
    let alpha = SQRT_2_3 * (a - 0.5 * b - 0.5 * c);
    let beta = SQRT_2_3 * (0.5 * 3f64.sqrt() * (b - c));
    let zero = (a + b + c) / 3f64.sqrt();
    let (s, co) = theta_g.sin_cos();
    [co * alpha + s * beta, -s * alpha + co * beta, zero]
}

/// Inverse of [`park_transform`] (its transpose).
pub fn inverse_park_transform(x_dq0: [f64; 3], theta_g: f64) -> [f64; 3] {
    let [d, q, zero] = x_dq0;
    let (s, co) = theta_g.sin_cos();
    let alpha = co * d - s * q;
    let beta = s * d + co * q;
    let z = zero / 3f64.sqrt();
    [
        SQRT_2_3 * alpha + z,
        SQRT_2_3 * (-0.5 * alpha + 0.5 * 3f64.sqrt() * beta) + z,
        SQRT_2_3 * (-0.5 * alpha - 0.5 * 3f64.sqrt() * beta) + z,
    ]
}
