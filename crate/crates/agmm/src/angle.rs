//! Angles on the circle and the wrap/unwrap pair relating them to the line.
//!
//! A circular response is represented as a radian value in `[-π, π)`. The
//! latent-line picture identifies an angle `θ` with the family of reals
//! `θ + 2zπ + π` indexed by an integer turn count `z`; `wrap_to_circle`
//! and `unwrap` move between the two representations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// An angle in radians, always in `[-π, π)`.
///
/// Values can only be constructed through wrapping, so the range invariant
/// holds everywhere downstream.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    /// Wraps a *latent* real onto the circle via `(y mod 2π) - π`.
    pub fn wrap(y: f64) -> Result<Angle> {
        wrap_to_circle(y)
    }

    /// Reduces an *angle-valued* real to its representative in `[-π, π)`.
    ///
    /// Unlike [`wrap_to_circle`], this preserves the direction: values
    /// already in range are unchanged, and `a` and `a + 2π` map to the
    /// same angle. Use this for von Mises means, `atan2` outputs and raw
    /// angle columns; use [`wrap_to_circle`] for latent linear responses.
    pub fn from_radians(a: f64) -> Result<Angle> {
        if !a.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "cannot reduce non-finite angle {a}"
            )));
        }
        if (-PI..PI).contains(&a) {
            return Ok(Angle(a));
        }
        let mut rem = (a + PI).rem_euclid(TWO_PI);
        if rem >= TWO_PI {
            rem -= TWO_PI;
        }
        Ok(Angle(rem - PI))
    }

    /// The radian value in `[-π, π)`.
    pub fn radians(self) -> f64 {
        self.0
    }

    /// The latent real `θ + 2zπ + π` for turn count `z`.
    pub fn unwrap_turns(self, z: i64) -> f64 {
        unwrap(self, z)
    }
}

/// Maps a real `y` to `(y mod 2π) - π`, with the modulo taken in `[0, 2π)`.
///
/// The result lies in `[-π, π)`; the half-open range avoids representing
/// the same direction as both `-π` and `π`.
pub fn wrap_to_circle(y: f64) -> Result<Angle> {
    if !y.is_finite() {
        return Err(Error::InvalidArgument(format!("cannot wrap non-finite value {y}")));
    }
    let mut rem = y.rem_euclid(TWO_PI);
    // rem_euclid can return exactly 2π when y is a tiny negative number.
    if rem >= TWO_PI {
        rem -= TWO_PI;
    }
    Ok(Angle(rem - PI))
}

/// The latent real response `θ + 2zπ + π` for an integer turn count `z`.
///
/// Inverse of [`wrap_to_circle`]: wrapping the result recovers `θ` for any `z`.
pub fn unwrap(theta: Angle, z: i64) -> f64 {
    theta.0 + 2.0 * (z as f64) * PI + PI
}
