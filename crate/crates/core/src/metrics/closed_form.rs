use num_traits::pow;
use serde::{Deserialize, Serialize};

use super::Scalar;
use crate::cache::CacheConfig;
use crate::error::{Error, Result};

/// Geometry symbols of the closed forms: `s` sets, `w` ways, `d` divisions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbabilityModel {
    pub s: u64,
    pub w: u64,
    pub d: u64,
}

/// A closed-form value plus whether the formula is only approximate for the
/// geometry it was evaluated at.
#[derive(Clone, Debug, PartialEq)]
pub struct Closed<T> {
    pub value: T,
    pub approximate: bool,
}

impl ProbabilityModel {
    pub fn new(s: u64, w: u64, d: u64) -> Result<Self> {
        if !s.is_power_of_two() {
            return Err(Error::config(format!("s={s} is not a power of two")));
        }
        if w == 0 || d == 0 || d > w || !w.is_multiple_of(d) {
            return Err(Error::config(format!(
                "d={d} must divide w={w} and be at least 1"
            )));
        }
        Ok(ProbabilityModel { s, w, d })
    }

    pub fn from_config(c: &CacheConfig) -> Result<Self> {
        ProbabilityModel::new(c.s as u64, c.w as u64, c.d as u64)
    }

    fn lift<T: Scalar>(v: u64) -> T {
        T::from_u64(v).expect("geometry fits the scalar")
    }

    /// Probability that two random addresses share their index in every
    /// division: `s^-d`.
    pub fn full_collision<T: Scalar>(&self) -> T {
        pow(T::one() / Self::lift::<T>(self.s), self.d as usize)
    }

    /// Probability that two random addresses share an index in at least one
    /// of `w` single-way divisions: `1 - ((s-1)/s)^w`.
    pub fn partial_collision<T: Scalar>(&self) -> Closed<T> {
        let s = Self::lift::<T>(self.s);
        let keep = (s.clone() - T::one()) / s;
        Closed {
            value: T::one() - pow(keep, self.w as usize),
            approximate: self.d != self.w,
        }
    }

    /// Expected proxy pairs for `d = w`: `w^2 / s^2`, clamped at 1.
    pub fn proxy<T: Scalar>(&self) -> Closed<T> {
        let r = Self::lift::<T>(self.w) / Self::lift::<T>(self.s);
        let v = r.clone() * r;
        Closed {
            value: if v > T::one() { T::one() } else { v },
            approximate: self.d != self.w,
        }
    }

    /// Success probability of one second-order eviction attempt under
    /// random replacement: `w^-4`.
    pub fn second_order_eviction<T: Scalar>(&self) -> T {
        T::one() / pow(Self::lift::<T>(self.w), 4)
    }
}
