//! Discrete rotation angles.
//!
//! Devices accept angles as a pair (n, d) meaning n * pi / 2^d, with the
//! granularity (maximum d) a property of the device profile. Angles are kept
//! in canonical form: d minimal and n reduced into [0, 2^(d+1)), i.e. modulo
//! a full turn.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Angle {
    pub n: u32,
    pub d: u8,
}

impl Angle {
    pub const ZERO: Angle = Angle { n: 0, d: 0 };
    pub const PI: Angle = Angle { n: 1, d: 0 };

    /// Canonical n * pi / 2^d. Negative n wraps modulo 2 pi.
    pub fn new(n: i64, d: u8) -> Angle {
        let modulus = 2i64 << d; // 2^(d+1) steps of pi/2^d per turn
        let mut n = n.rem_euclid(modulus) as u32;
        let mut d = d;
        while d > 0 && n % 2 == 0 {
            n /= 2;
            d -= 1;
        }
        Angle { n, d }
    }

    pub fn pi_over(two_pow: u8) -> Angle {
        Angle::new(1, two_pow)
    }

    pub fn to_radians(self) -> f64 {
        self.n as f64 * PI / (1u32 << self.d) as f64
    }

    /// Exact representation of a radian value on the (n, d) grid with
    /// d <= max_d, if one exists within `tol`.
    pub fn from_radians(theta: f64, max_d: u8, tol: f64) -> Option<Angle> {
        let turns = theta.rem_euclid(2.0 * PI);
        let steps = turns / (PI / (1u32 << max_d) as f64);
        let n = steps.round() as i64;
        let angle = Angle::new(n, max_d);
        if (angle.to_radians() - turns).abs() <= tol
            || (angle.to_radians() - turns).abs() >= 2.0 * PI - tol
        {
            Some(angle)
        } else {
            None
        }
    }

    pub fn negated(self) -> Angle {
        Angle::new(-(self.n as i64), self.d)
    }

    pub fn add(self, other: Angle) -> Angle {
        let d = self.d.max(other.d);
        let n = (self.n as i64) * (1i64 << (d - self.d)) + (other.n as i64) * (1i64 << (d - other.d));
        Angle::new(n, d)
    }

    pub fn is_zero(self) -> bool {
        self.n == 0
    }

    /// Whether this angle is representable at granularity `max_d`.
    pub fn representable_at(self, max_d: u8) -> bool {
        self.d <= max_d
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}pi/{}", self.n, 1u32 << self.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalization() {
        assert_eq!(Angle::new(4, 2), Angle { n: 1, d: 0 }); // 4*pi/4 = pi
        assert_eq!(Angle::new(-1, 1), Angle { n: 3, d: 1 }); // -pi/2 = 3pi/2
        assert_eq!(Angle::new(8, 2), Angle::ZERO); // 2pi = 0
        assert_eq!(Angle::new(2, 0), Angle::ZERO);
    }

    #[test]
    fn radians_round_trip() {
        for n in 0..32 {
            let a = Angle::new(n, 4);
            let b = Angle::from_radians(a.to_radians(), 4, 1e-9).unwrap();
            assert_eq!(a, b);
        }
        // pi/3 is not on the d<=4 grid
        assert!(Angle::from_radians(PI / 3.0, 4, 1e-9).is_none());
    }

    #[test]
    fn arithmetic() {
        let a = Angle::new(1, 2); // pi/4
        let b = Angle::new(1, 1); // pi/2
        assert_eq!(a.add(b), Angle::new(3, 2)); // 3pi/4
        assert_eq!(a.negated().to_radians(), 7.0 * PI / 4.0);
        assert!(Angle::new(3, 1).representable_at(1));
        assert!(!Angle::new(1, 2).representable_at(1));
    }
}
