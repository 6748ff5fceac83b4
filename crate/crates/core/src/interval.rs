//! Certified enclosures with rational endpoints.
//!
//! Endpoints are exact rationals; transcendental functions round outward to
//! dyadic grids of a caller-chosen precision, so every result is a true
//! enclosure of the real value.

use core::cmp::Ordering;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::{int, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

fn pow2(bits: u32) -> BigInt {
    BigInt::one() << bits as usize
}

/// Largest multiple of `2^-bits` that is `<= x`.
pub fn round_down(x: &Rational, bits: u32) -> Rational {
    let scaled = (x.numer() << bits as usize).div_floor(x.denom());
    Rational::new(scaled, pow2(bits))
}

/// Smallest multiple of `2^-bits` that is `>= x`.
pub fn round_up(x: &Rational, bits: u32) -> Rational {
    -round_down(&-x, bits)
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Self { lo, hi }
    }

    pub fn point(x: Rational) -> Self {
        Self { lo: x.clone(), hi: x }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / int(2)
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Certain ordering, or `None` when the enclosures overlap.
    pub fn compare(&self, other: &Interval) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if other.hi < self.lo {
            Some(Ordering::Greater)
        } else if self.lo == self.hi && self == other {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    pub fn shift(&self, by: &Rational) -> Interval {
        Interval { lo: &self.lo + by, hi: &self.hi + by }
    }

    pub fn round(&self, bits: u32) -> Interval {
        Interval { lo: round_down(&self.lo, bits), hi: round_up(&self.hi, bits) }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        Interval { lo: &self.lo - &other.hi, hi: &self.hi - &other.lo }
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: -&self.hi, hi: -&self.lo }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let c = [&self.lo * &other.lo, &self.lo * &other.hi, &self.hi * &other.lo, &self.hi * &other.hi];
        let lo = c.iter().min().cloned().unwrap_or_else(Rational::zero);
        let hi = c.iter().max().cloned().unwrap_or_else(Rational::zero);
        Interval { lo, hi }
    }

    pub fn scale(&self, k: &Rational) -> Interval {
        if k.is_negative() {
            Interval { lo: &self.hi * k, hi: &self.lo * k }
        } else {
            Interval { lo: &self.lo * k, hi: &self.hi * k }
        }
    }

    /// Division; `None` if the divisor contains zero.
    pub fn div(&self, other: &Interval) -> Option<Interval> {
        if other.contains(&Rational::zero()) {
            return None;
        }
        let inv = Interval { lo: other.hi.recip(), hi: other.lo.recip() };
        Some(self.mul(&inv))
    }

    /// Enclosure of `ln x` for rational `x > 0`, width about `2^-bits`.
    pub fn ln(x: &Rational, bits: u32) -> Interval {
        assert!(x.is_positive(), "ln of a non-positive number");
        if x.is_one() {
            return Interval::point(Rational::zero());
        }
        let work = bits + 16;
        // x = 2^k y with y in [1, 2)
        let k = x.numer().bits() as i64 - x.denom().bits() as i64;
        let mut y = x.clone();
        let mut k = k;
        y = if k >= 0 { y / Rational::from_integer(pow2(k as u32)) } else { y * Rational::from_integer(pow2((-k) as u32)) };
        while y >= int(2) {
            y /= int(2);
            k += 1;
        }
        while y < int(1) {
            y *= int(2);
            k -= 1;
        }
        let z = (&y - int(1)) / (&y + int(1));
        let ln_y = atanh_enclosure(&z, work).scale(&int(2));
        let ln2 = atanh_enclosure(&Rational::new(1.into(), 3.into()), work + 8).scale(&int(2));
        ln2.scale(&Rational::from_integer(k.into())).add(&ln_y).round(work)
    }

    /// Enclosure of `exp` over the interval, width about `2^-bits` relative
    /// to the magnitude of the result.
    pub fn exp(&self, bits: u32) -> Interval {
        Interval { lo: exp_enclosure(&self.lo, bits).lo, hi: exp_enclosure(&self.hi, bits).hi }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// `atanh z = Σ z^(2j+1)/(2j+1)` for `0 <= z <= 1/2`.
fn atanh_enclosure(z: &Rational, bits: u32) -> Interval {
    debug_assert!(!z.is_negative() && *z <= Rational::new(1.into(), 2.into()));
    if z.is_zero() {
        return Interval::point(Rational::zero());
    }
    let z = Interval::point(z.clone()).round(bits + 8);
    let z2 = z.mul(&z).round(bits + 8);
    let eps = Rational::new(BigInt::one(), pow2(bits + 4));
    let mut power = z.clone();
    let mut sum = Interval::point(Rational::zero());
    let mut j: i64 = 0;
    loop {
        let term = power.scale(&Rational::new(1.into(), (2 * j + 1).into()));
        sum = sum.add(&term).round(bits + 8);
        power = power.mul(&z2).round(bits + 8);
        j += 1;
        // tail <= z^(2j+1) / ((2j+1) (1 - z^2)), and 1/(1 - z^2) <= 4/3
        let tail = &power.hi * Rational::new(4.into(), (3 * (2 * j + 1)).into());
        if tail < eps {
            return Interval::new(sum.lo, &sum.hi + tail);
        }
    }
}

fn exp_enclosure(x: &Rational, bits: u32) -> Interval {
    if x.is_zero() {
        return Interval::point(Rational::one());
    }
    // x = 2^s y with |y| <= 1/2
    let mag = x.abs();
    let mut s: u32 = 0;
    while mag > Rational::new(pow2(s), 2.into()) {
        s += 1;
    }
    let work = bits + s + 16 + (x.abs().ceil().to_integer().bits() as u32);
    let y = Interval::point(x / Rational::from_integer(pow2(s))).round(work);
    let eps = Rational::new(BigInt::one(), pow2(work));
    let mut term = Interval::point(Rational::one());
    let mut sum = Interval::point(Rational::one());
    let mut j: i64 = 1;
    loop {
        term = term.mul(&y).scale(&Rational::new(1.into(), j.into())).round(work);
        sum = sum.add(&term).round(work);
        let bound = term.lo.abs().max(term.hi.abs());
        // remaining terms are bounded by 2 |next term| <= |term| for |y| <= 1/2
        if bound <= eps {
            let tail = bound;
            sum = Interval::new(&sum.lo - &tail, &sum.hi + &tail);
            break;
        }
        j += 1;
    }
    for _ in 0..s {
        // exp(y) > 0 so squaring is monotone on the enclosure
        let lo = if sum.lo.is_negative() { Rational::zero() } else { sum.lo.clone() };
        sum = Interval::new(&lo * &lo, &sum.hi * &sum.hi).round(work);
    }
    sum
}
