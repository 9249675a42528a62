//! Per-unit dq-frame arithmetic.
//!
//! Balanced three-phase quantities are carried as their (d, q) projection onto
//! a rotating reference frame. Changing from a frame `g` to a frame `c` that
//! leads it by `delta = theta_c - theta_g` multiplies the complex phasor by
//! `exp(-j delta)`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A (d, q) pair in per unit.
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

    pub fn is_finite(self) -> bool {
        self.d.is_finite() && self.q.is_finite()
    }

    /// Multiplication by `j`: `(d, q) -> (-q, d)`.
    pub fn perp(self) -> Self {
        Self::new(-self.q, self.d)
    }

    pub fn dot(self, other: DqVector) -> f64 {
        self.d * other.d + self.q * other.q
    }

    /// Re-expresses the vector in a frame leading the current one by `delta` radians.
    pub fn rotate(self, delta: f64) -> Self {
        rotate(self, delta)
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

impl Mul<DqVector> for f64 {
    type Output = DqVector;
    fn mul(self, rhs: DqVector) -> DqVector {
        DqVector::new(self * rhs.d, self * rhs.q)
    }
}

impl Mul<f64> for DqVector {
    type Output = DqVector;
    fn mul(self, rhs: f64) -> DqVector {
        DqVector::new(self.d * rhs, self.q * rhs)
    }
}

/// Angle of a rotating reference frame relative to a fixed reference, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameAngle {
    pub theta: f64,
}

impl FrameAngle {
    pub const fn new(theta: f64) -> Self {
        Self { theta }
    }

    /// Offset of `self` relative to `reference`, i.e. the `delta` passed to [`rotate`]
    /// when converting from `reference` coordinates to `self` coordinates.
    pub fn relative_to(self, reference: FrameAngle) -> f64 {
        self.theta - reference.theta
    }
}

/// Frame change `v * exp(-j delta)`.
pub fn rotate(v: DqVector, delta: f64) -> DqVector {
    let (s, c) = delta.sin_cos();
    DqVector::new(v.d * c + v.q * s, -v.d * s + v.q * c)
}

/// Active power `v.d * i.d + v.q * i.q`; both vectors must share a frame.
pub fn active_power(v: DqVector, i: DqVector) -> f64 {
    v.dot(i)
}

/// Reactive power `v.q * i.d - v.d * i.q`.
pub fn reactive_power(v: DqVector, i: DqVector) -> f64 {
    v.q * i.d - v.d * i.q
}
