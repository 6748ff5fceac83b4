//! Explicit elements: two-break (Boshernitzan) maps, finite-order elements,
//! PL equivalences between intervals of different lengths, commuting
//! families with independent irrational rotation numbers, and local bumps.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{
    bezout, dense_rows, div_mod_floor, find_pi, in_d_a, int, mod_floor, rank, ArithError, ExponentVector,
    GroupContext, Rational,
};
use crate::conjugacy::{orbit_partition, pi_invariant, DEFAULT_MAX_ITER};
use crate::plmap::{Node, PlCircleMap, PlError};
use crate::rotnum::{exact_rational_rho, order_of, LogRatio, RotationNumber, DEFAULT_MAX_DEPTH};

pub const DEFAULT_EXPONENT_BOUND: i64 = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstructionError {
    #[error("one slope must exceed 1 and the other must be below 1")]
    SlopesOnSameSideOfOne,
    #[error("circumference must be an integer")]
    NonIntegerCircumference,
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(&'static str),
    #[error("no decomposition beta - 1 = d n lambda found in the exponent box")]
    FactorizationFailure,
    #[error("a free abelian subgroup needs at least two basis elements")]
    RankUnavailable,
    #[error("log ratios do not share a common denominator")]
    MixedDenominators,
    #[error("maps live on circles of different circumference")]
    CircumferenceMismatch,
    #[error("constructed object failed verification: {0}")]
    VerificationFailed(&'static str),
    #[error(transparent)]
    Pl(#[from] PlError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

type Result<T> = core::result::Result<T, ConstructionError>;

/// Two-break map on `S_r` with slope `λ1` on `[0, a]`, `λ2` on `[a, r]`,
/// `a = r(1 - λ2)/(λ1 - λ2)` and `f(a) = 0`.
pub fn boshernitzan(r: &Rational, lambda1: &Rational, lambda2: &Rational) -> Result<PlCircleMap> {
    let one = Rational::one();
    if !lambda1.is_positive() || !lambda2.is_positive() {
        return Err(PlError::NonPositiveSlope.into());
    }
    if (lambda1 > &one) == (lambda2 > &one) || lambda1 == &one || lambda2 == &one {
        return Err(ConstructionError::SlopesOnSameSideOfOne);
    }
    let a = r * (&one - lambda2) / (lambda1 - lambda2);
    let f0 = lambda2 * (r - &a);
    Ok(PlCircleMap::from_nodes(r.clone(), &[(Rational::zero(), f0), (a, r.clone())])?)
}

/// `log λ1 / (log λ1 - log λ2)` in canonical form.
pub fn boshernitzan_rho(lambda1: &Rational, lambda2: &Rational) -> Option<RotationNumber> {
    LogRatio::reduce(lambda1, &(lambda1 / lambda2))
}

fn single_generator(ctx: &GroupContext) -> Result<u64> {
    match ctx.basis() {
        [m] => Ok(*m),
        _ => Err(ConstructionError::ParameterOutOfRange("single-generator basis required")),
    }
}

fn integer_r(ctx: &GroupContext) -> Result<BigInt> {
    if ctx.r().is_integer() {
        Ok(ctx.r().to_integer())
    } else {
        Err(ConstructionError::NonIntegerCircumference)
    }
}

/// Whether `T_{r,m}` has an element of order `q`: `gcd(m - 1, q) | r`.
pub fn finite_order_exists(ctx: &GroupContext, q: u64) -> Result<bool> {
    let m = single_generator(ctx)?;
    let r = integer_r(ctx)?;
    if q == 0 {
        return Err(ConstructionError::ParameterOutOfRange("q must be positive"));
    }
    Ok(r.is_multiple_of(&BigInt::from((m - 1).gcd(&q))))
}

/// An element of order `q` with rotation number `p/q`, or `None` when the
/// group has no such element.
pub fn finite_order_element(ctx: &GroupContext, q: u64, p: i64) -> Result<Option<PlCircleMap>> {
    if !finite_order_exists(ctx, q)? {
        return Ok(None);
    }
    let p = p.rem_euclid(q as i64) as u64;
    if p.gcd(&q) != 1 {
        return Err(ConstructionError::ParameterOutOfRange("p and q must be coprime"));
    }
    let m = single_generator(ctx)?;
    let r = integer_r(ctx)?;
    let modulus = BigInt::from(m - 1);
    let u = (1..=(m - 1).max(1))
        .find(|&u| (BigInt::from(u * q) - &r).is_multiple_of(&modulus))
        .expect("the criterion guarantees a residue");
    let source = int((u * q) as i64);
    let rotation = PlCircleMap::rotation(source.clone(), int((u * p) as i64));
    let f = if &source == ctx.r() {
        rotation
    } else {
        let w = bs_witness(&source, ctx.r(), ctx).ok_or(ConstructionError::VerificationFailed("no witness"))?;
        transport(&rotation, &w)?
    };
    if order_of(&f, q) != Some(q) {
        return Err(ConstructionError::VerificationFailed("order"));
    }
    if exact_rational_rho(&f, DEFAULT_MAX_DEPTH) != Some(RotationNumber::rational(p as i64, q)) {
        return Err(ConstructionError::VerificationFailed("rotation number"));
    }
    if !f.membership(ctx)? {
        return Err(ConstructionError::VerificationFailed("membership"));
    }
    Ok(Some(f))
}

/// An increasing PL map `[0, l] -> [0, l']` given by its nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BsWitness {
    nodes: Vec<(Rational, Rational)>,
}

impl BsWitness {
    pub fn identity(l: &Rational) -> Self {
        Self { nodes: vec![(Rational::zero(), Rational::zero()), (l.clone(), l.clone())] }
    }

    /// Nodes must start at `(0, 0)` and increase strictly in both coordinates.
    pub fn from_nodes(nodes: Vec<(Rational, Rational)>) -> core::result::Result<Self, PlError> {
        if nodes.len() < 2 || !nodes[0].0.is_zero() || !nodes[0].1.is_zero() {
            return Err(PlError::Unsorted);
        }
        if nodes.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(PlError::Unsorted);
        }
        if nodes.windows(2).any(|w| w[0].1 >= w[1].1) {
            return Err(PlError::NonPositiveSlope);
        }
        Ok(Self { nodes }.simplified())
    }

    fn simplified(self) -> Self {
        let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(self.nodes.len());
        for node in self.nodes {
            if out.len() >= 2 {
                let (a, b) = (&out[out.len() - 2], &out[out.len() - 1]);
                if (&b.1 - &a.1) * (&node.0 - &b.0) == (&node.1 - &b.1) * (&b.0 - &a.0) {
                    out.pop();
                }
            }
            out.push(node);
        }
        Self { nodes: out }
    }

    pub fn nodes(&self) -> &[(Rational, Rational)] {
        &self.nodes
    }

    pub fn source(&self) -> &Rational {
        &self.nodes.last().expect("two nodes").0
    }

    pub fn target(&self) -> &Rational {
        &self.nodes.last().expect("two nodes").1
    }

    fn segment(&self, x: &Rational) -> usize {
        let i = self.nodes.partition_point(|n| &n.0 <= x);
        i.clamp(1, self.nodes.len() - 1) - 1
    }

    pub fn slopes(&self) -> Vec<Rational> {
        self.nodes.windows(2).map(|w| (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0)).collect()
    }

    /// Slope to the right of `x` for `x` in `[0, l)`.
    pub fn slope_right(&self, x: &Rational) -> Rational {
        let i = self.segment(x);
        let (a, b) = (&self.nodes[i], &self.nodes[i + 1]);
        (&b.1 - &a.1) / (&b.0 - &a.0)
    }

    /// `w(x)` for `x` in `[0, l]`.
    pub fn evaluate(&self, x: &Rational) -> Rational {
        let i = self.segment(x);
        let (a, b) = (&self.nodes[i], &self.nodes[i + 1]);
        &a.1 + (&b.1 - &a.1) / (&b.0 - &a.0) * (x - &a.0)
    }

    pub fn evaluate_inverse(&self, y: &Rational) -> Rational {
        let i = self.nodes.partition_point(|n| &n.1 <= y).clamp(1, self.nodes.len() - 1) - 1;
        let (a, b) = (&self.nodes[i], &self.nodes[i + 1]);
        &a.0 + (&b.0 - &a.0) / (&b.1 - &a.1) * (y - &a.1)
    }

    /// Periodic extension `w(x + k l) = w(x) + k l'`.
    pub fn evaluate_lift(&self, x: &Rational) -> Rational {
        let (k, y) = div_mod_floor(x, self.source());
        self.evaluate(&y) + self.target() * Rational::from_integer(k)
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &BsWitness) -> BsWitness {
        assert_eq!(self.target(), next.source(), "lengths must chain");
        let mut xs: Vec<Rational> = self.nodes.iter().map(|n| n.0.clone()).collect();
        xs.extend(next.nodes.iter().map(|n| self.evaluate_inverse(&n.0)));
        xs.sort();
        xs.dedup();
        let nodes = xs.into_iter().map(|x| (next.evaluate(&self.evaluate(&x)), x)).map(|(y, x)| (x, y)).collect();
        Self { nodes }.simplified()
    }

    /// Slopes in the group, nodes in the ring.
    pub fn is_valid(&self, ctx: &GroupContext) -> bool {
        self.nodes.iter().all(|(x, y)| ctx.in_ring(x) && ctx.in_ring(y))
            && self.slopes().iter().all(|s| ctx.in_slope_group(s))
    }
}

pub fn bs_equivalent(l: &Rational, lp: &Rational, ctx: &GroupContext) -> bool {
    in_d_a(&(l - lp), ctx)
}

fn stretch(len: &Rational, n: &Rational, c: &Rational) -> BsWitness {
    let mut nodes = vec![(Rational::zero(), Rational::zero()), (c.clone(), n * c)];
    if c < len {
        nodes.push((len.clone(), len + (n - Rational::one()) * c));
    }
    BsWitness { nodes }
}

fn compress(len: &Rational, n: &Rational, c: &Rational) -> BsWitness {
    let nc = n * c;
    let mut nodes = vec![(Rational::zero(), Rational::zero()), (nc.clone(), c.clone())];
    if &nc < len {
        nodes.push((len.clone(), len - (n - Rational::one()) * c));
    }
    BsWitness { nodes }
}

/// Largest `rem / m^e` (e >= 0) whose `n`-fold fits in `room`.
fn chunk(rem: &Rational, n: &Rational, room: &Rational, m: u64) -> Rational {
    let mut c = rem.clone();
    while n * &c > *room {
        c /= int(m as i64);
    }
    c
}

/// PL equivalence `[0, l] -> [0, l']` with slopes in `Λ` and nodes in `A`,
/// or `None` when `l - l'` is not in `dA`.
pub fn bs_witness(l: &Rational, lp: &Rational, ctx: &GroupContext) -> Option<BsWitness> {
    if !l.is_positive() || !lp.is_positive() || !bs_equivalent(l, lp, ctx) {
        return None;
    }
    if l == lp {
        return Some(BsWitness::identity(l));
    }
    let a = (lp - l) / int(ctx.d() as i64);
    let values: Vec<BigInt> = ctx.basis().iter().map(|&n| BigInt::from(n - 1)).collect();
    let (_, coeffs) = bezout(&values).ok()?;
    let moves: Vec<(Rational, Rational)> = ctx
        .basis()
        .iter()
        .zip(coeffs)
        .map(|(&n, c)| (int(n as i64), &a * Rational::from_integer(c)))
        .filter(|(_, s)| !s.is_zero())
        .collect();
    let m = ctx.m();
    let mut w = BsWitness::identity(l);
    let mut len = l.clone();
    // length-increasing moves first; the running length never drops below min(l, l')
    for (n, s) in moves.iter().filter(|(_, s)| s.is_positive()) {
        let mut rem = s.clone();
        while rem.is_positive() {
            let c = chunk(&rem, &Rational::one(), &len, m);
            let step = stretch(&len, n, &c);
            len = step.target().clone();
            w = w.then(&step);
            rem -= c;
        }
    }
    for (n, s) in moves.iter().filter(|(_, s)| s.is_negative()) {
        let mut rem = -s;
        while rem.is_positive() {
            let c = chunk(&rem, n, &len, m);
            let step = compress(&len, n, &c);
            len = step.target().clone();
            w = w.then(&step);
            rem -= c;
        }
    }
    (w.target() == lp && w.is_valid(ctx)).then_some(w)
}

/// `w ∘ f ∘ w^-1` on the circle of length `w.target()`.
pub fn transport(f: &PlCircleMap, w: &BsWitness) -> Result<PlCircleMap> {
    if f.r() != w.source() {
        return Err(ConstructionError::CircumferenceMismatch);
    }
    let l = f.r();
    let mut xs: Vec<Rational> = f.pieces().iter().map(|p| p.left.clone()).collect();
    let cuts = w.nodes()[..w.nodes().len() - 1].iter().map(|n| n.0.clone());
    for c in cuts {
        xs.push(mod_floor(&f.evaluate_inverse(&c), l));
        xs.push(c);
    }
    xs.sort();
    xs.dedup();
    let samples: Vec<Node> = xs
        .into_iter()
        .map(|x| {
            let fx = f.evaluate(&x);
            let slope = w.slope_right(&mod_floor(&fx, l)) * f.slope_right(&x) / w.slope_right(&x);
            (w.evaluate(&x), w.evaluate_lift(&fx), slope)
        })
        .collect();
    Ok(PlCircleMap::assemble(w.target().clone(), samples).0)
}

/// Two-break maps on `S_{r_k}`, `r_k = k(Π - 1)/d`, with slopes
/// `(n_i, n_i/Π)`; all share the jump `Π` at 0.
pub fn stein_family(ctx: &GroupContext, k: u64) -> Result<Vec<PlCircleMap>> {
    if k == 0 {
        return Err(ConstructionError::ParameterOutOfRange("k must be positive"));
    }
    let (_, pi) = find_pi(ctx);
    let pi = Rational::from_integer(pi);
    let r = int(k as i64) * (&pi - Rational::one()) / int(ctx.d() as i64);
    let on_r = ctx.with_circumference(r.clone())?;
    let mut out = Vec::with_capacity(ctx.rank());
    for &n in ctx.basis() {
        let l1 = int(n as i64);
        let l2 = &l1 / &pi;
        let f = if l2.is_one() { PlCircleMap::identity(r.clone()) } else { boshernitzan(&r, &l1, &l2)? };
        if !f.membership(&on_r)? {
            return Err(ConstructionError::VerificationFailed("family member outside the group"));
        }
        out.push(f);
    }
    Ok(out)
}

/// Certified commuting family acting freely with independent rotation
/// numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeAbelianCertificate {
    pub members: Vec<PlCircleMap>,
    pub pi: BigInt,
    pub rhos: Vec<LogRatio>,
    pub rank: usize,
}

pub fn free_abelian_witness(ctx: &GroupContext, k: u64) -> Result<FreeAbelianCertificate> {
    if ctx.rank() < 2 {
        return Err(ConstructionError::RankUnavailable);
    }
    let (_, pi) = find_pi(ctx);
    let pi_q = Rational::from_integer(pi.clone());
    let members: Vec<PlCircleMap> = stein_family(ctx, k)?.into_iter().skip(1).collect();
    for (i, f) in members.iter().enumerate() {
        for g in &members[i + 1..] {
            if !f.commutes_with(g)? {
                return Err(ConstructionError::VerificationFailed("members do not commute"));
            }
        }
        if pi_invariant(f, &orbit_partition(f, DEFAULT_MAX_ITER)).ok() != Some(pi_q.clone()) {
            return Err(ConstructionError::VerificationFailed("π invariant"));
        }
    }
    let mut rhos = Vec::with_capacity(members.len());
    for &n in &ctx.basis()[1..] {
        match LogRatio::reduce(&int(n as i64), &pi_q) {
            Some(RotationNumber::LogRatio(l)) => rhos.push(l),
            _ => return Err(ConstructionError::VerificationFailed("rotation number")),
        }
    }
    if !qindependence_check(&rhos)? {
        return Err(ConstructionError::VerificationFailed("rotation numbers are dependent"));
    }
    Ok(FreeAbelianCertificate { rank: members.len(), members, pi, rhos })
}

/// Whether `{1} ∪ {log α_i / log β}` is linearly independent over `Q`.
pub fn qindependence_check(rhos: &[LogRatio]) -> Result<bool> {
    let Some(first) = rhos.first() else { return Ok(true) };
    if rhos.iter().any(|l| l.beta() != first.beta()) {
        return Err(ConstructionError::MixedDenominators);
    }
    let mut vectors: Vec<ExponentVector> = vec![first.beta().clone()];
    vectors.extend(rhos.iter().map(|l| l.alpha().clone()));
    Ok(rank(&dense_rows(&vectors)) == vectors.len())
}

/// Exponent vectors in `[-bound, bound]^p`, by increasing sup norm.
fn exponent_boxes(p: usize, bound: i64) -> impl Iterator<Item = Vec<i64>> {
    (0..=bound).flat_map(move |radius| {
        let side = (2 * radius + 1) as u64;
        let total = side.checked_pow(p as u32).unwrap_or(u64::MAX);
        (0..total).filter_map(move |mut code| {
            let mut v = Vec::with_capacity(p);
            for _ in 0..p {
                v.push((code % side) as i64 - radius);
                code /= side;
            }
            (v.iter().map(|x| x.abs()).max().unwrap_or(0) == radius).then_some(v)
        })
    })
}

/// Two-break map on `S_{d n_β}` with slopes `(α, α/β)`, realizing
/// `log α / log β`, where `β - 1 = d n_β λ` with `λ` in the group.
pub fn realize_log_ratio(
    ctx: &GroupContext,
    alpha: &Rational,
    beta: &Rational,
    exponent_bound: i64,
) -> Result<PlCircleMap> {
    if !ctx.in_slope_group(alpha) || !ctx.in_slope_group(beta) {
        return Err(ConstructionError::ParameterOutOfRange("alpha and beta must be slopes"));
    }
    if !(&Rational::one() < alpha && alpha < beta) {
        return Err(ConstructionError::ParameterOutOfRange("need 1 < alpha < beta"));
    }
    let d = int(ctx.d() as i64);
    let n_beta = exponent_boxes(ctx.rank(), exponent_bound)
        .map(|s| (beta - Rational::one()) / (&d * ctx.slope(&s)))
        .find(|n| n.is_integer() && n.is_positive())
        .ok_or(ConstructionError::FactorizationFailure)?;
    let r = &d * n_beta;
    let f = boshernitzan(&r, alpha, &(alpha / beta))?;
    if !f.membership(&ctx.with_circumference(r)?)? {
        return Err(ConstructionError::VerificationFailed("membership"));
    }
    Ok(f)
}

/// The bump supported on `[a0, b0]`: slope `k` on `[a0, a0']`, a
/// translation by `α` on `[a0', b0']` and slope `1/k` on `[b0', b0]`, with
/// `a0' = a0 + α/(k-1)` and `b0' = b0 - kα/(k-1)`.
pub fn bump_alpha(
    ctx: &GroupContext,
    k: u64,
    a0: &Rational,
    b0: &Rational,
    x0: &Rational,
    alpha: &Rational,
) -> Result<PlCircleMap> {
    let kq = int(k as i64);
    if k < 2 || !ctx.in_slope_group(&kq) {
        return Err(ConstructionError::ParameterOutOfRange("k must be a slope at least 2"));
    }
    let r = ctx.r();
    if a0.is_negative() || !(a0 < x0 && x0 < b0) || &(b0 - a0) > r {
        return Err(ConstructionError::ParameterOutOfRange("need 0 <= a0 < x0 < b0 <= a0 + r"));
    }
    if ![a0, b0, alpha].iter().all(|x| ctx.in_ring(x)) {
        return Err(ConstructionError::ParameterOutOfRange("a0, b0 and alpha must lie in the ring"));
    }
    let km1 = &kq - Rational::one();
    let bound = &km1 * (x0 - a0).min((b0 - x0) / &kq);
    if !alpha.is_positive() || alpha > &bound {
        return Err(ConstructionError::ParameterOutOfRange("alpha outside (0, (k-1) min(x0-a0, (b0-x0)/k)]"));
    }
    let a1 = a0 + alpha / &km1;
    let b1 = b0 - &kq * alpha / &km1;
    let mut nodes = vec![(a0.clone(), a0.clone()), (a1.clone(), &kq * &a1 - &km1 * a0)];
    if b1 > a1 {
        nodes.push((b1.clone(), &b1 + alpha));
    }
    if &(b0 - a0) < r {
        nodes.push((b0.clone(), b0.clone()));
    }
    let f = PlCircleMap::from_nodes(r.clone(), &nodes)?;
    if !f.membership(ctx)? || f.evaluate(x0) != x0 + alpha {
        return Err(ConstructionError::VerificationFailed("bump"));
    }
    Ok(f)
}

/// Rotation number as a float, for reporting.
pub fn approx(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
