//! Rotation numbers: exact rational values by Stern-Brocot descent over
//! Poincaré displacement signs, certified orbit bounds, periodic points and
//! the `m`-adic orbit diagnostic.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{in_ring, int, mod_floor, ExponentVector, Rational};
use crate::interval::Interval;
use crate::plmap::PlCircleMap;

pub const DEFAULT_MAX_DEPTH: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RotError {
    #[error("map data are not m-adic for m = {0}")]
    NotMAdic(u64),
}

/// `log α / log β` with `1 < α < β`, both rationals with factored
/// exponent vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRatio {
    alpha: ExponentVector,
    beta: ExponentVector,
}

impl LogRatio {
    /// Canonical form of `log α / log β mod 1`. Returns a rational zero when
    /// the value is an integer and `None` when `β = 1` or a value does not
    /// factor.
    pub fn reduce(alpha: &Rational, beta: &Rational) -> Option<RotationNumber> {
        if !alpha.is_positive() || !beta.is_positive() || beta.is_one() {
            return None;
        }
        let (mut a, b) = if beta < &Rational::one() {
            (alpha.recip(), beta.recip())
        } else {
            (alpha.clone(), beta.clone())
        };
        while a >= b {
            a /= &b;
        }
        while a < Rational::one() {
            a *= &b;
        }
        if a.is_one() {
            return Some(RotationNumber::zero());
        }
        let alpha = ExponentVector::factor_rational(&a)?;
        let beta = ExponentVector::factor_rational(&b)?;
        Some(RotationNumber::LogRatio(LogRatio { alpha, beta }))
    }

    pub fn alpha(&self) -> &ExponentVector {
        &self.alpha
    }

    pub fn beta(&self) -> &ExponentVector {
        &self.beta
    }

    /// Certified enclosure of the value.
    pub fn enclose(&self, bits: u32) -> Interval {
        let num = Interval::ln(&self.alpha.to_rational(), bits + 8);
        let den = Interval::ln(&self.beta.to_rational(), bits + 8);
        num.div(&den).expect("log beta is positive").round(bits + 4)
    }

    pub fn to_f64(&self) -> f64 {
        self.enclose(60).midpoint().to_f64().unwrap_or(f64::NAN)
    }

    /// `Some(true)` when the exponent data force equality, `Some(false)` when
    /// certified enclosures separate the values, `None` otherwise.
    pub fn same_value(&self, other: &Self, bits: u32) -> Option<bool> {
        // log a1 log b2 - log a2 log b1 as a form in log p log q
        let mut form: BTreeMap<(u64, u64), i128> = BTreeMap::new();
        let mut add = |x: &ExponentVector, y: &ExponentVector, sign: i128| {
            for (&p, &e) in x.exponents() {
                for (&q, &f) in y.exponents() {
                    let key = if p <= q { (p, q) } else { (q, p) };
                    *form.entry(key).or_insert(0) += sign * e as i128 * f as i128;
                }
            }
        };
        add(&self.alpha, &other.beta, 1);
        add(&other.alpha, &self.beta, -1);
        if form.values().all(|v| *v == 0) {
            return Some(true);
        }
        if self.enclose(bits).overlaps(&other.enclose(bits)) {
            None
        } else {
            Some(false)
        }
    }
}

impl fmt::Display for LogRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "log({})/log({})", self.alpha.to_rational(), self.beta.to_rational())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RotationNumber {
    /// Reduced `p/q` in `[0, 1)`.
    Rational { p: u64, q: u64 },
    LogRatio(LogRatio),
    /// Enclosure of a representative; the endpoints may leave `[0, 1)`
    /// by at most the half width.
    Interval(Interval),
}

impl RotationNumber {
    pub fn zero() -> Self {
        RotationNumber::Rational { p: 0, q: 1 }
    }

    /// Reduced fraction mod 1.
    pub fn rational(p: i64, q: u64) -> Self {
        assert!(q > 0, "denominator must be positive");
        let p = p.rem_euclid(q as i64) as u64;
        let g = p.gcd(&q);
        RotationNumber::Rational { p: p / g, q: q / g }
    }

    pub fn from_rational(x: &Rational) -> Option<Self> {
        let x = mod_floor(x, &int(1));
        Some(RotationNumber::Rational { p: x.numer().to_u64()?, q: x.denom().to_u64()? })
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self {
            RotationNumber::Rational { p, q } => Some(Rational::new((*p).into(), (*q).into())),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            RotationNumber::Rational { p, q } => *p as f64 / *q as f64,
            RotationNumber::LogRatio(l) => l.to_f64(),
            RotationNumber::Interval(i) => i.midpoint().to_f64().unwrap_or(f64::NAN),
        }
    }
}

impl fmt::Display for RotationNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RotationNumber::Rational { p, q } => write!(f, "{p}/{q}"),
            RotationNumber::LogRatio(l) => l.fmt(f),
            RotationNumber::Interval(i) => i.fmt(f),
        }
    }
}

/// Whether some integer translate of `x` lies in `i`.
pub fn contains_mod1(i: &Interval, x: &Rational) -> bool {
    let k = (i.lo() - x).ceil();
    x + k <= *i.hi()
}

/// Extrema of `g(x) = F(x) + c r - x - p r` where `F` is the canonical lift
/// of `h`; the nodes of `h` cover all corners of `g`.
fn extrema(h: &PlCircleMap, carry: &BigInt, p: i64) -> (Rational, Rational) {
    let shift = h.r() * Rational::from_integer(carry - BigInt::from(p));
    let mut min: Option<Rational> = None;
    let mut max: Option<Rational> = None;
    for (piece, v) in h.pieces().iter().zip(h.values()) {
        let g = v - &piece.left + &shift;
        if min.as_ref().is_none_or(|m| &g < m) {
            min = Some(g.clone());
        }
        if max.as_ref().is_none_or(|m| &g > m) {
            max = Some(g);
        }
    }
    (min.expect("nonempty"), max.expect("nonempty"))
}

fn sign_of(min: &Rational, max: &Rational) -> Ordering {
    if min.is_positive() {
        Ordering::Greater
    } else if max.is_negative() {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

/// Exact extrema of `F^q(x) - x - p r` over one period.
pub fn displacement_extrema(f: &PlCircleMap, p: i64, q: u64) -> (Rational, Rational) {
    assert!(q >= 1, "q must be positive");
    let (h, c) = f.power_lift(q);
    extrema(&h, &c, p)
}

/// Compares `ρ(F)` with `p/q`, where `F` is the canonical lift.
pub fn compare_rho(f: &PlCircleMap, p: i64, q: u64) -> Ordering {
    let (min, max) = displacement_extrema(f, p, q);
    sign_of(&min, &max)
}

/// Size in bits of a power of `f` beyond which [`exact_rational_rho`] gives
/// up. Along an irrational rotation number the Stern-Brocot denominators
/// grow exponentially with depth, and the size of `F^q` grows with `q`.
pub const EXACT_BIT_BUDGET: u64 = 1 << 17;

fn size_bits(f: &PlCircleMap) -> u64 {
    let bits = |x: &Rational| x.numer().bits() + x.denom().bits();
    f.pieces().iter().map(|p| bits(&p.left) + bits(&p.slope)).sum::<u64>() + bits(f.f0())
}

/// `ρ(f)` exactly when it is rational with a Stern-Brocot depth of at
/// most `max_depth`. `None` once the depth or [`EXACT_BIT_BUDGET`] runs out.
pub fn exact_rational_rho(f: &PlCircleMap, max_depth: u32) -> Option<RotationNumber> {
    let one = (f.clone(), BigInt::zero());
    // the canonical lift has 0 <= ρ <= 1
    let (lo_min, lo_max) = extrema(&one.0, &one.1, 0);
    if sign_of(&lo_min, &lo_max) == Ordering::Equal {
        return Some(RotationNumber::zero());
    }
    let (hi_min, hi_max) = extrema(&one.0, &one.1, 1);
    if sign_of(&hi_min, &hi_max) == Ordering::Equal {
        return Some(RotationNumber::zero());
    }
    let (mut lo, mut hi) = ((0u64, 1u64), (1u64, 1u64));
    let mut lo_pow = one.clone();
    let mut hi_pow = one;
    for _ in 0..max_depth {
        let (p, q) = (lo.0 + hi.0, lo.1 + hi.1);
        let (h, c) = lo_pow.0.compose_lift(&hi_pow.0).expect("same circle");
        if size_bits(&h) > EXACT_BIT_BUDGET {
            return None;
        }
        let mid = (h, c + &lo_pow.1 + &hi_pow.1);
        let (min, max) = extrema(&mid.0, &mid.1, p as i64);
        match sign_of(&min, &max) {
            Ordering::Equal => return Some(RotationNumber::Rational { p, q }),
            Ordering::Greater => {
                lo = (p, q);
                lo_pow = mid;
            }
            Ordering::Less => {
                hi = (p, q);
                hi_pow = mid;
            }
        }
    }
    None
}

/// Certified enclosure `[c - 1/n, c + 1/n]` of a representative of `ρ(f)`
/// with `c = F^n(0) / (n r)` reduced into `[0, 1)`.
pub fn rho_bounds(f: &PlCircleMap, n: u64) -> Interval {
    assert!(n >= 1, "n must be positive");
    let x = match FastOrbit::new(f) {
        Some(mut orbit) => {
            for _ in 0..n {
                orbit.step();
            }
            orbit.value()
        }
        None => {
            let mut x = Rational::zero();
            for _ in 0..n {
                x = f.evaluate(&x);
            }
            x
        }
    };
    let center = x / (f.r() * Rational::from_integer(n.into()));
    let center = mod_floor(&center, &int(1));
    let half = Rational::new(BigInt::one(), n.into());
    Interval::new(&center - &half, center + half)
}

/// Orbit iteration of the lift. The point is `K r + y` with `y = N / (D S)`
/// in `[0, r)`: `D` is a common denominator of the map data and `S` a
/// product of slope primes tracked by exponent, so a step costs a handful
/// of big-by-small operations and no gcd.
pub(crate) struct FastOrbit {
    /// Scaled by `D`.
    r: BigUint,
    pieces: Vec<OrbitPiece>,
    primes: Vec<u64>,
    exps: Vec<u32>,
    n: BigUint,
    s: BigUint,
    wraps: BigInt,
    d: BigInt,
}

struct OrbitPiece {
    /// Scaled by `D`.
    left: BigUint,
    /// `(prime index, exponent)`, positive for the numerator.
    slope: Vec<(usize, i64)>,
    /// `v - s left`, scaled by `D`.
    offset: BigInt,
}

impl FastOrbit {
    pub(crate) fn new(f: &PlCircleMap) -> Option<Self> {
        let slopes: Vec<ExponentVector> = f
            .pieces()
            .iter()
            .map(|p| ExponentVector::factor_rational(&p.slope))
            .collect::<Option<_>>()?;
        let mut primes: Vec<u64> = slopes.iter().flat_map(|e| e.primes()).collect();
        primes.sort_unstable();
        primes.dedup();
        let offsets: Vec<Rational> = f.pieces().iter().zip(f.values()).map(|(p, v)| v - &p.slope * &p.left).collect();
        let d = offsets
            .iter()
            .chain(f.pieces().iter().map(|p| &p.left))
            .chain(core::iter::once(f.r()))
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let dq = Rational::from_integer(d.clone());
        let scaled = |x: &Rational| (x * &dq).to_integer();
        let pieces = f
            .pieces()
            .iter()
            .zip(&slopes)
            .zip(&offsets)
            .map(|((p, e), c)| OrbitPiece {
                left: scaled(&p.left).to_biguint().expect("left ends are nonnegative"),
                slope: e
                    .exponents()
                    .iter()
                    .map(|(q, k)| (primes.binary_search(q).expect("collected"), *k))
                    .collect(),
                offset: scaled(c),
            })
            .collect();
        Some(Self {
            r: scaled(f.r()).to_biguint().expect("positive circumference"),
            pieces,
            exps: alloc::vec![0; primes.len()],
            primes,
            n: BigUint::zero(),
            s: BigUint::one(),
            wraps: BigInt::zero(),
            d,
        })
    }

    /// Restarts the orbit at the left end of piece `idx`.
    pub(crate) fn restart_at_left(&mut self, idx: usize) {
        self.n = self.pieces[idx].left.clone();
        self.s = BigUint::one();
        self.exps.iter_mut().for_each(|e| *e = 0);
        self.wraps = BigInt::zero();
    }

    /// Index of the piece whose left end is the current point mod `r`.
    pub(crate) fn at_left(&self) -> Option<usize> {
        // with a slope prime left in S the reduced denominator does not divide D
        if self.exps.iter().any(|&e| e > 0) {
            return None;
        }
        self.pieces.binary_search_by(|p| p.left.cmp(&self.n)).ok()
    }

    fn value(&self) -> Rational {
        let s = BigInt::from(self.s.clone());
        let num = BigInt::from(self.n.clone()) + &self.wraps * BigInt::from(self.r.clone()) * &s;
        Rational::new(num, &self.d * s)
    }

    pub(crate) fn step(&mut self) {
        // piece containing y: last left end with N >= left S
        let mut idx = 0;
        let (mut lo, mut hi) = (1, self.pieces.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.n >= &self.pieces[mid].left * &self.s {
                idx = mid;
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let piece = &self.pieces[idx];
        for &(i, k) in &piece.slope {
            let p = self.primes[i];
            if k < 0 {
                for _ in 0..-k {
                    self.s *= p;
                }
                self.exps[i] += (-k) as u32;
            } else {
                for _ in 0..k {
                    if self.exps[i] > 0 {
                        self.s /= p;
                        self.exps[i] -= 1;
                    } else {
                        self.n *= p;
                    }
                }
            }
        }
        let shift = &self.s * piece.offset.magnitude();
        if piece.offset.is_negative() {
            self.n -= shift;
        } else {
            self.n += shift;
        }
        let r = &self.r * &self.s;
        if self.n >= r {
            self.n -= r;
            self.wraps += 1;
        }
        for (i, &p) in self.primes.iter().enumerate() {
            while self.exps[i] > 0 && (&self.n % p).is_zero() {
                self.n /= p;
                self.s /= p;
                self.exps[i] -= 1;
            }
        }
    }
}

/// Smallest `x` in `[0, r)` with `F^q(x) = x + p r`.
pub fn periodic_point(f: &PlCircleMap, p: i64, q: u64) -> Option<Rational> {
    let (h, c) = f.power_lift(q);
    let shift = h.r() * Rational::from_integer(c - BigInt::from(p));
    let n = h.pieces().len();
    for i in 0..n {
        let piece = &h.pieces()[i];
        let right = h.pieces().get(i + 1).map_or(h.r(), |nx| &nx.left);
        let g = &h.values()[i] - &piece.left + &shift;
        if g.is_zero() {
            return Some(piece.left.clone());
        }
        let s = &piece.slope - Rational::one();
        if !s.is_zero() {
            let x = &piece.left - &g / &s;
            if x > piece.left && &x < right {
                return Some(x);
            }
        }
    }
    None
}

/// Least `q <= max_order` with `f^q = id`.
pub fn order_of(f: &PlCircleMap, max_order: u64) -> Option<u64> {
    let mut g = f.clone();
    for q in 1..=max_order {
        if g.is_identity() {
            return Some(q);
        }
        g = g.compose(f).expect("same circle");
    }
    None
}

/// `f^k(0) = M / m^N` with `N` minimal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MadicEntry {
    pub k: u64,
    pub numerator: BigInt,
    pub exponent: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MadicProfile {
    pub m: u64,
    pub entries: Vec<MadicEntry>,
    /// `slope_log[k]`: exponent of `m` in `D f^k(0)` (right derivatives).
    pub slope_log: Vec<i64>,
}

fn m_exponent(s: &Rational, m: u64) -> Option<i64> {
    let mb = BigInt::from(m);
    let (mut n, mut d) = (s.numer().clone(), s.denom().clone());
    let mut e = 0i64;
    while n.is_multiple_of(&mb) {
        n /= &mb;
        e += 1;
    }
    while d.is_multiple_of(&mb) {
        d /= &mb;
        e -= 1;
    }
    (n.is_one() && d.is_one()).then_some(e)
}

/// Orbit of 0 in normalized `m`-adic form for `k = 0..=n`.
pub fn madic_profile(f: &PlCircleMap, m: u64, n: u64) -> Result<MadicProfile, RotError> {
    if m < 2 {
        return Err(RotError::NotMAdic(m));
    }
    let mut exps = Vec::with_capacity(f.pieces().len());
    for (p, v) in f.pieces().iter().zip(f.values()) {
        let e = m_exponent(&p.slope, m).ok_or(RotError::NotMAdic(m))?;
        if !in_ring(&p.left, m) || !in_ring(&mod_floor(v, f.r()), m) {
            return Err(RotError::NotMAdic(m));
        }
        exps.push(e);
    }
    if !in_ring(f.r(), m) {
        return Err(RotError::NotMAdic(m));
    }
    let mb = BigInt::from(m);
    let mut entries = Vec::new();
    let mut slope_log = Vec::new();
    let mut x = Rational::zero();
    let mut cumulative = 0i64;
    for k in 0..=n {
        let mut exponent = 0u32;
        let mut scaled = x.clone();
        while !scaled.is_integer() {
            scaled *= Rational::from_integer(mb.clone());
            exponent += 1;
        }
        entries.push(MadicEntry { k, numerator: scaled.to_integer(), exponent });
        slope_log.push(cumulative);
        let i = f.pieces().partition_point(|p| p.left <= x) - 1;
        cumulative += exps[i];
        x = f.apply(&x);
    }
    Ok(MadicProfile { m, entries, slope_log })
}
