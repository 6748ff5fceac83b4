//! Exact integers and rationals, prime-exponent vectors, and the
//! number-theoretic predicates behind the slope group `Λ = <n_i>`, the break
//! ring `A = Z[1/m]` and the submodule `(1 - Λ)A = dA`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision reduced fraction with positive denominator.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("empty input")]
    EmptyInput,
    #[error("all inputs are zero")]
    AllZero,
    #[error("basis element {0} is smaller than 2")]
    BasisTooSmall(u64),
    #[error("basis is not strictly increasing")]
    BasisUnsorted,
    #[error("basis is not multiplicatively independent")]
    DependentBasis,
    #[error("circumference must be positive")]
    NonPositiveCircumference,
    #[error("integer overflow")]
    Overflow,
}

/// Shorthand for the integer `n` as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Shorthand for `n / d`. Panics when `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Splits `x` as `k * r + y` with `k` an integer and `0 <= y < r`.
pub fn div_mod_floor(x: &Rational, r: &Rational) -> (BigInt, Rational) {
    let k = (x / r).floor().to_integer();
    let y = x - r * Rational::from_integer(k.clone());
    (k, y)
}

/// `x` reduced into `[0, r)`.
pub fn mod_floor(x: &Rational, r: &Rational) -> Rational {
    div_mod_floor(x, r).1
}

/// Finitely supported map prime -> exponent; represents a positive rational.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExponentVector {
    exps: BTreeMap<u64, i64>,
}

impl ExponentVector {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn from_map(map: BTreeMap<u64, i64>) -> Self {
        let mut v = Self { exps: map };
        v.exps.retain(|_, e| *e != 0);
        v
    }

    pub fn exponents(&self) -> &BTreeMap<u64, i64> {
        &self.exps
    }

    pub fn exponent(&self, p: u64) -> i64 {
        self.exps.get(&p).copied().unwrap_or(0)
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.exps.keys().copied()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut exps = self.exps.clone();
        for (&p, &e) in &other.exps {
            *exps.entry(p).or_insert(0) += e;
        }
        Self::from_map(exps)
    }

    pub fn inv(&self) -> Self {
        Self { exps: self.exps.iter().map(|(&p, &e)| (p, -e)).collect() }
    }

    pub fn pow(&self, k: i64) -> Self {
        Self::from_map(self.exps.iter().map(|(&p, &e)| (p, e * k)).collect())
    }

    pub fn to_rational(&self) -> Rational {
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for (&p, &e) in &self.exps {
            let pp = num_traits::pow(BigInt::from(p), e.unsigned_abs() as usize);
            if e > 0 {
                num *= pp;
            } else {
                den *= pp;
            }
        }
        Rational::new(num, den)
    }

    /// Factors a positive rational completely over the given primes.
    /// Returns `None` if any other prime is involved.
    pub fn over_primes(q: &Rational, primes: &[u64]) -> Option<Self> {
        if !q.is_positive() {
            return None;
        }
        let mut num = q.numer().magnitude().clone();
        let mut den = q.denom().magnitude().clone();
        let mut exps = BTreeMap::new();
        for &p in primes {
            let e = strip_factor(&mut num, p) as i64 - strip_factor(&mut den, p) as i64;
            if e != 0 {
                exps.insert(p, e);
            }
        }
        (num.is_one() && den.is_one()).then_some(Self { exps })
    }

    /// Factors a positive rational by trial division. Returns `None` when the
    /// numerator or denominator keeps a cofactor too large to factor at desk
    /// scale (above 2^62 after removing primes below 2^16).
    pub fn factor_rational(q: &Rational) -> Option<Self> {
        if !q.is_positive() {
            return None;
        }
        let n = factor_big(q.numer().magnitude())?;
        let d = factor_big(q.denom().magnitude())?;
        Some(n.mul(&d.inv()))
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (p, e)) in self.exps.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}:{e}")?;
        }
        f.write_str("}")
    }
}

fn strip_factor(n: &mut BigUint, p: u64) -> u32 {
    let p = BigUint::from(p);
    let mut count = 0;
    loop {
        let (q, rem) = n.div_rem(&p);
        if !rem.is_zero() || n.is_zero() {
            return count;
        }
        *n = q;
        count += 1;
    }
}

fn factor_big(n: &BigUint) -> Option<ExponentVector> {
    let mut n = n.clone();
    let mut exps = BTreeMap::new();
    let mut p = 2u64;
    while p < (1 << 16) {
        if n.is_one() {
            break;
        }
        let e = strip_factor(&mut n, p);
        if e > 0 {
            exps.insert(p, e as i64);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if !n.is_one() {
        let rest = n.to_u64().filter(|&v| v < (1 << 62))?;
        for (q, e) in factorize(rest).exps {
            *exps.entry(q).or_insert(0) += e;
        }
    }
    Some(ExponentVector { exps })
}

/// Prime factorization of `n >= 1` by trial division. `factorize(1)` is empty.
pub fn factorize(mut n: u64) -> ExponentVector {
    assert!(n >= 1, "factorize needs n >= 1");
    let mut exps = BTreeMap::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        while n.is_multiple_of(p) {
            *exps.entry(p).or_insert(0) += 1;
            n /= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        *exps.entry(n).or_insert(0) += 1;
    }
    ExponentVector { exps }
}

/// Rank over `Q` of a list of integer row vectors.
pub fn rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<Rational>> =
        rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect();
    row_reduce(&mut m).len()
}

/// Gaussian elimination in place; returns pivot columns.
fn row_reduce(m: &mut [Vec<Rational>]) -> Vec<usize> {
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(pr) = (row..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(row, pr);
        let lead = m[row][col].clone();
        for x in m[row].iter_mut() {
            *x = &*x / &lead;
        }
        let pivot_row = m[row].clone();
        for (i, target) in m.iter_mut().enumerate() {
            if i != row && !target[col].is_zero() {
                let factor = target[col].clone();
                for (x, p) in target.iter_mut().zip(&pivot_row) {
                    *x -= &factor * p;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    pivots
}

/// Exponent vectors as dense rows over the sorted union of their primes.
pub fn dense_rows(vectors: &[ExponentVector]) -> Vec<Vec<i64>> {
    let mut primes: Vec<u64> = vectors.iter().flat_map(|v| v.primes()).collect();
    primes.sort_unstable();
    primes.dedup();
    vectors
        .iter()
        .map(|v| primes.iter().map(|&p| v.exponent(p)).collect())
        .collect()
}

/// True iff the prime-exponent vectors of `basis` are linearly independent
/// over `Q`, i.e. the `log n_i` are `Q`-independent.
pub fn check_independent(basis: &[u64]) -> bool {
    if basis.is_empty() || basis.iter().any(|&n| n < 2) {
        return false;
    }
    let vectors: Vec<ExponentVector> = basis.iter().map(|&n| factorize(n)).collect();
    rank(&dense_rows(&vectors)) == basis.len()
}

/// A Thompson-Stein group `T_{r,(n_1,...,n_p)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupContext {
    r: Rational,
    basis: Vec<u64>,
    m: u64,
    d: u64,
    basis_exps: Vec<ExponentVector>,
    primes: Vec<u64>,
}

impl GroupContext {
    pub fn new(r: Rational, basis: Vec<u64>) -> Result<Self, ArithError> {
        if !r.is_positive() {
            return Err(ArithError::NonPositiveCircumference);
        }
        if basis.is_empty() {
            return Err(ArithError::EmptyInput);
        }
        if let Some(&n) = basis.iter().find(|&&n| n < 2) {
            return Err(ArithError::BasisTooSmall(n));
        }
        if basis.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ArithError::BasisUnsorted);
        }
        if !check_independent(&basis) {
            return Err(ArithError::DependentBasis);
        }
        let mut m = 1u64;
        let mut d = 0u64;
        for &n in &basis {
            m = m.checked_mul(n / m.gcd(&n)).ok_or(ArithError::Overflow)?;
            d = d.gcd(&(n - 1));
        }
        let basis_exps: Vec<ExponentVector> = basis.iter().map(|&n| factorize(n)).collect();
        let primes = factorize(m).primes().collect();
        Ok(Self { r, basis, m, d, basis_exps, primes })
    }

    /// Same basis on a different circle.
    pub fn with_circumference(&self, r: Rational) -> Result<Self, ArithError> {
        Self::new(r, self.basis.clone())
    }

    pub fn r(&self) -> &Rational {
        &self.r
    }

    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// `lcm(n_i)`; the break ring is `Z[1/m]`.
    pub fn m(&self) -> u64 {
        self.m
    }

    /// `gcd(n_i - 1)`; `(1 - Λ)A = dA`.
    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn basis_exps(&self) -> &[ExponentVector] {
        &self.basis_exps
    }

    /// Primes dividing `m`.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn in_ring(&self, x: &Rational) -> bool {
        in_ring_primes(x, &self.primes)
    }

    pub fn in_slope_group(&self, q: &Rational) -> bool {
        slope_decompose(q, self).is_some()
    }

    /// `∏ n_i^{s_i}`.
    pub fn slope(&self, exps: &[i64]) -> Rational {
        exps.iter()
            .zip(&self.basis_exps)
            .fold(ExponentVector::one(), |acc, (&s, v)| acc.mul(&v.pow(s)))
            .to_rational()
    }
}

/// Exponents `s` with `∏ n_i^{s_i} = q`, or `None` when `q ∉ <n_i>`.
pub fn slope_decompose(q: &Rational, ctx: &GroupContext) -> Option<Vec<i64>> {
    let v = ExponentVector::over_primes(q, ctx.primes())?;
    let p = ctx.rank();
    // Augmented system: rows are primes, columns basis exponents then target.
    let mut m: Vec<Vec<Rational>> = ctx
        .primes()
        .iter()
        .map(|&prime| {
            let mut row: Vec<Rational> =
                ctx.basis_exps().iter().map(|e| int(e.exponent(prime))).collect();
            row.push(int(v.exponent(prime)));
            row
        })
        .collect();
    let pivots = row_reduce(&mut m);
    if pivots.contains(&p) {
        return None;
    }
    let mut s = vec![0i64; p];
    for (row, &col) in pivots.iter().enumerate() {
        let value = &m[row][p];
        if !value.is_integer() {
            return None;
        }
        s[col] = value.to_integer().to_i64()?;
    }
    Some(s)
}

fn in_ring_primes(x: &Rational, primes: &[u64]) -> bool {
    let mut den = x.denom().magnitude().clone();
    for &p in primes {
        strip_factor(&mut den, p);
    }
    den.is_one()
}

/// True iff every prime factor of the denominator of `x` divides `m`.
pub fn in_ring(x: &Rational, m: u64) -> bool {
    assert!(m >= 2, "ring modulus must be at least 2");
    let primes: Vec<u64> = factorize(m).primes().collect();
    in_ring_primes(x, &primes)
}

/// Membership in `dA = (1 - Λ)A`.
pub fn in_d_a(x: &Rational, ctx: &GroupContext) -> bool {
    ctx.in_ring(&(x / int(ctx.d() as i64)))
}

/// Extended gcd of two integers: `(g, s, t)` with `s*a + t*b = g >= 0`.
pub fn ext_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let (mut old_r, mut r) = (a.clone(), b.clone());
    let (mut old_s, mut s) = (BigInt::one(), BigInt::zero());
    let (mut old_t, mut t) = (BigInt::zero(), BigInt::one());
    while !r.is_zero() {
        let q = old_r.div_floor(&r);
        let next_r = &old_r - &q * &r;
        old_r = core::mem::replace(&mut r, next_r);
        let next_s = &old_s - &q * &s;
        old_s = core::mem::replace(&mut s, next_s);
        let next_t = &old_t - &q * &t;
        old_t = core::mem::replace(&mut t, next_t);
    }
    if old_r.sign() == Sign::Minus {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// `g = gcd(values)` and coefficients with `Σ c_i v_i = g`, folding the
/// extended gcd left to right.
pub fn bezout(values: &[BigInt]) -> Result<(BigInt, Vec<BigInt>), ArithError> {
    let (first, rest) = values.split_first().ok_or(ArithError::EmptyInput)?;
    if values.iter().all(Zero::is_zero) {
        return Err(ArithError::AllZero);
    }
    let mut g = first.abs();
    let mut coeffs = vec![if first.is_negative() { -BigInt::one() } else { BigInt::one() }];
    for v in rest {
        let (ng, s, t) = ext_gcd(&g, v);
        for c in coeffs.iter_mut() {
            *c *= &s;
        }
        coeffs.push(t);
        g = ng;
    }
    Ok((g, coeffs))
}

/// `Π = ∏ n_i^{α_i}` with every `α_i >= 1` and `gcd((Π - 1)/d, d) = 1`.
///
/// Tries `α = (1, ..., 1)` first; otherwise writes `n_i = k_i d + 1`, takes
/// Bezout coefficients `Σ k_i β_i = 1`, sets `α'_i = |β_i| + 1` and, if
/// `w' = Σ k_i α'_i` shares the factor `d' = gcd(w', d)` with `d`, uses
/// `α_i = (d/d') α'_i + β_i` so that `Σ k_i α_i ≡ 1 (mod d)`.
pub fn find_pi(ctx: &GroupContext) -> (Vec<u32>, BigInt) {
    let d = BigInt::from(ctx.d());
    let pi_of = |alphas: &[u32]| -> BigInt {
        ctx.basis()
            .iter()
            .zip(alphas)
            .map(|(&n, &a)| num_traits::pow(BigInt::from(n), a as usize))
            .product()
    };
    let ok = |pi: &BigInt| ((pi - 1u32) / &d).gcd(&d).is_one();

    let ones = vec![1u32; ctx.rank()];
    let pi = pi_of(&ones);
    if ok(&pi) {
        return (ones, pi);
    }

    let ks: Vec<BigInt> = ctx.basis().iter().map(|&n| BigInt::from((n - 1) / ctx.d())).collect();
    let (_, betas) = bezout(&ks).expect("basis elements are at least 2");
    let alpha_prime: Vec<BigInt> = betas.iter().map(|b| b.abs() + 1u32).collect();
    let w_prime: BigInt = ks.iter().zip(&alpha_prime).map(|(k, a)| k * a).sum();
    let d_prime = w_prime.gcd(&d);
    let alphas: Vec<BigInt> = if d_prime.is_one() {
        alpha_prime
    } else {
        let n = &d / &d_prime;
        alpha_prime.iter().zip(&betas).map(|(a, b)| &n * a + b).collect()
    };
    let alphas: Vec<u32> =
        alphas.iter().map(|a| a.to_u32().expect("desk-scale exponent")).collect();
    let pi = pi_of(&alphas);
    debug_assert!(ok(&pi));
    (alphas, pi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn ctx(basis: &[u64]) -> GroupContext {
        GroupContext::new(int(1), basis.to_vec()).unwrap()
    }

    #[test]
    fn factorize_examples() {
        assert!(factorize(1).is_one());
        assert_eq!(factorize(12), ExponentVector::from_map([(2, 2), (3, 1)].into()));
        assert_eq!(factorize(30), ExponentVector::from_map([(2, 1), (3, 1), (5, 1)].into()));
    }

    #[test]
    fn independence() {
        assert!(check_independent(&[2, 3]));
        assert!(!check_independent(&[2, 4]));
        assert!(!check_independent(&[2, 3, 6]));
        assert!(check_independent(&[6, 10, 15]));
        assert!(check_independent(&[2, 3, 5]));
        assert!(!check_independent(&[4, 8]));
        assert!(matches!(GroupContext::new(int(1), vec![2, 4]), Err(ArithError::DependentBasis)));
        assert!(matches!(GroupContext::new(int(1), vec![3, 2]), Err(ArithError::BasisUnsorted)));
    }

    #[test]
    fn context_derived_values() {
        let c = ctx(&[3, 5]);
        assert_eq!((c.m(), c.d()), (15, 2));
        let c = ctx(&[4, 7]);
        assert_eq!((c.m(), c.d()), (28, 3));
        let c = ctx(&[2, 3, 5]);
        assert_eq!((c.m(), c.d()), (30, 1));
    }

    #[test]
    fn slope_decompose_examples() {
        let c = ctx(&[2, 3]);
        assert_eq!(slope_decompose(&int(6), &c), Some(vec![1, 1]));
        assert_eq!(slope_decompose(&int(5), &c), None);
        assert_eq!(slope_decompose(&rat(2, 3), &c), Some(vec![1, -1]));
        // 2 = 4^(1/2): rational but not integral exponents
        let c = ctx(&[4, 6]);
        assert_eq!(slope_decompose(&int(2), &c), None);
        assert_eq!(slope_decompose(&rat(3, 2), &c), Some(vec![-1, 1]));
    }

    #[test]
    fn ring_membership() {
        assert!(in_ring(&rat(3, 8), 2));
        assert!(!in_ring(&rat(2, 5), 6));
        assert!(in_ring(&int(7), 3));
        assert!(in_ring(&rat(-5, 36), 6));
    }

    #[test]
    fn d_a_membership() {
        assert!(in_d_a(&int(0), &ctx(&[3, 5])));
        // 1/2 ∉ Z[1/15]
        assert!(!in_d_a(&int(1), &ctx(&[3, 5])));
        assert!(in_d_a(&int(2), &ctx(&[3, 5])));
        assert!(in_d_a(&(int(1 - 2) * rat(3, 8)), &ctx(&[2, 3])));
    }

    #[test]
    fn bezout_examples() {
        assert_eq!(bezout(&big(&[2, 4])).unwrap(), (BigInt::from(2), big(&[1, 0])));
        assert_eq!(bezout(&big(&[3, 5])).unwrap(), (BigInt::from(1), big(&[2, -1])));
        assert_eq!(bezout(&big(&[1, 2])).unwrap(), (BigInt::from(1), big(&[1, 0])));
        assert_eq!(bezout(&big(&[0, 0])), Err(ArithError::AllZero));
        assert_eq!(bezout(&[]), Err(ArithError::EmptyInput));
        let vals = big(&[12, -18, 8, 0]);
        let (g, c) = bezout(&vals).unwrap();
        assert_eq!(g, BigInt::from(2));
        assert_eq!(c.iter().zip(&vals).map(|(a, b)| a * b).sum::<BigInt>(), g);
    }

    #[test]
    fn find_pi_examples() {
        assert_eq!(find_pi(&ctx(&[2, 3])), (vec![1, 1], BigInt::from(6)));
        assert_eq!(find_pi(&ctx(&[3, 5])), (vec![1, 1], BigInt::from(15)));
        assert_eq!(find_pi(&ctx(&[4, 7])), (vec![2, 1], BigInt::from(112)));
        assert_eq!(find_pi(&ctx(&[2, 3, 5])), (vec![1, 1, 1], BigInt::from(30)));
    }

    #[test]
    fn find_pi_post_hoc() {
        for basis in [vec![4u64, 7], vec![7, 10], vec![5, 9], vec![3, 7], vec![4, 10], vec![7, 13, 19]] {
            let Ok(c) = GroupContext::new(int(1), basis) else { continue };
            let (alphas, pi) = find_pi(&c);
            assert!(alphas.iter().all(|&a| a >= 1));
            let d = BigInt::from(c.d());
            assert!(((&pi - BigInt::one()) % &d).is_zero());
            let q: BigInt = (&pi - BigInt::one()) / &d;
            assert!(q.gcd(&d).is_one(), "basis {:?}", c.basis());
        }
    }

    #[test]
    fn exponent_vector_roundtrip() {
        let q = rat(-0, 1);
        assert!(ExponentVector::factor_rational(&q).is_none());
        let q = rat(45, 28);
        let v = ExponentVector::factor_rational(&q).unwrap();
        assert_eq!(v.to_rational(), q);
        assert_eq!(v.mul(&v.inv()), ExponentVector::one());
    }
}
