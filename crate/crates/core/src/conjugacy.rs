//! Jump bookkeeping along break orbits: the (D)-property, the invariant
//! `π(f)`, the conjugator `H_f` onto a two-break normal form, and the
//! exponential linearization of two-break maps.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::{factorize, mod_floor, ExponentVector, Rational};
use crate::interval::Interval;
use crate::plmap::{Node, PlCircleMap};
use crate::rotnum::{FastOrbit, LogRatio, RotationNumber};

pub const DEFAULT_MAX_ITER: u64 = 256;
pub const DEFAULT_PRECISION_BITS: u32 = 128;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConjError {
    #[error("the map does not have the (D)-property (or it could not be established)")]
    DNotSatisfied,
    #[error("conjugated map has {0} breaks; raise the iteration bound")]
    NormalFormFailure(usize),
    #[error("product of jumps is {0}, expected 1")]
    JumpProductNotOne(Rational),
    #[error("break points must be distinct")]
    DuplicatePoints,
    #[error("jumps must be positive")]
    NonPositiveJump,
    #[error("map is not a two-break map with a break at 0")]
    NotBoshernitzanForm,
    #[error("no ring element is free for the extra break")]
    NoFreePoint,
}

/// One piece of orbit `a, f(a), ..., f^l(a)` covering some breaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitClass {
    pub anchor: Rational,
    /// `f^k(anchor)` for `k = 0..=length`.
    pub iterates: Vec<Rational>,
    pub length: usize,
    /// Breaks of `f` in this class, in orbit order.
    pub breaks: Vec<Rational>,
    pub jump_product: Rational,
    /// The class is a whole periodic orbit.
    pub closed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionStatus {
    Complete,
    TruncatedAtBound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitPartition {
    pub classes: Vec<OrbitClass>,
    pub status: PartitionStatus,
    pub max_iter: u64,
}

impl OrbitPartition {
    pub fn max_length(&self) -> usize {
        self.classes.iter().map(|c| c.length).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DVerdict {
    Yes(OrbitPartition),
    No { partition: OrbitPartition, witness: usize },
    Unknown { bound: u64, partition: OrbitPartition },
}

impl DVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, DVerdict::Yes(_))
    }

    pub fn partition(&self) -> &OrbitPartition {
        match self {
            DVerdict::Yes(p) | DVerdict::No { partition: p, .. } | DVerdict::Unknown { partition: p, .. } => p,
        }
    }
}

/// `σ_{f^k}(x) = ∏_{j<k} σ_f(f^j(x))`.
pub fn jump_chain(f: &PlCircleMap, k: u64, x: &Rational) -> Rational {
    let mut x = mod_floor(x, f.r());
    let mut product = Rational::one();
    for _ in 0..k {
        product *= f.jump_at(&x);
        x = f.apply(&x);
    }
    product
}

/// Groups the breaks of `f` into orbit pieces, following each break for at
/// most `max_iter` steps.
pub fn orbit_partition(f: &PlCircleMap, max_iter: u64) -> OrbitPartition {
    let jumps: BTreeMap<Rational, Rational> = f.jumps().into_iter().map(|j| (j.at, j.value)).collect();
    // first break hit by the forward orbit of each break
    let mut next: BTreeMap<Rational, (Rational, usize)> = BTreeMap::new();
    if let Some(mut orbit) = FastOrbit::new(f) {
        let lefts: Vec<&Rational> = f.pieces().iter().map(|p| &p.left).collect();
        for b in jumps.keys() {
            orbit.restart_at_left(lefts.binary_search(&b).expect("breaks are piece ends"));
            for step in 1..=max_iter as usize {
                orbit.step();
                if let Some(i) = orbit.at_left().filter(|&i| jumps.contains_key(lefts[i])) {
                    next.insert(b.clone(), (lefts[i].clone(), step));
                    break;
                }
            }
        }
    } else {
        for b in jumps.keys() {
            let mut x = b.clone();
            for step in 1..=max_iter as usize {
                x = f.apply(&x);
                if jumps.contains_key(&x) {
                    next.insert(b.clone(), (x, step));
                    break;
                }
            }
        }
    }
    let has_pred: BTreeSet<Rational> = next.values().map(|(t, _)| t.clone()).collect();
    let mut seen: BTreeSet<Rational> = BTreeSet::new();
    let mut classes = Vec::new();
    let build = |anchor: &Rational, seen: &mut BTreeSet<Rational>| -> OrbitClass {
        let mut members = alloc::vec![anchor.clone()];
        let mut length = 0usize;
        let mut cur = anchor.clone();
        let mut closed = false;
        seen.insert(anchor.clone());
        while let Some((t, s)) = next.get(&cur) {
            length += s;
            if t == anchor {
                closed = true;
                break;
            }
            seen.insert(t.clone());
            members.push(t.clone());
            cur = t.clone();
        }
        if closed {
            length -= 1;
        }
        let mut iterates = Vec::with_capacity(length + 1);
        let mut x = anchor.clone();
        iterates.push(x.clone());
        for _ in 0..length {
            x = f.apply(&x);
            iterates.push(x.clone());
        }
        let jump_product = members.iter().map(|b| jumps[b].clone()).product();
        OrbitClass { anchor: anchor.clone(), iterates, length, breaks: members, jump_product, closed }
    };
    for b in jumps.keys() {
        if !has_pred.contains(b) {
            classes.push(build(b, &mut seen));
        }
    }
    // what is left consists of periodic cycles; anchor at the smallest point
    for b in jumps.keys() {
        if !seen.contains(b) {
            classes.push(build(b, &mut seen));
        }
    }
    let unresolved = classes.iter().filter(|c| !c.closed && !c.jump_product.is_one()).count();
    let status = if unresolved >= 2 { PartitionStatus::TruncatedAtBound } else { PartitionStatus::Complete };
    OrbitPartition { classes, status, max_iter }
}

pub fn has_d_property(f: &PlCircleMap, max_iter: u64) -> DVerdict {
    let partition = orbit_partition(f, max_iter);
    let bad = partition.classes.iter().position(|c| c.closed && !c.jump_product.is_one());
    if let Some(witness) = bad {
        return DVerdict::No { partition, witness };
    }
    match partition.status {
        PartitionStatus::Complete => match partition.classes.iter().position(|c| !c.jump_product.is_one()) {
            Some(witness) => DVerdict::No { partition, witness },
            None => DVerdict::Yes(partition),
        },
        PartitionStatus::TruncatedAtBound => DVerdict::Unknown { bound: max_iter, partition },
    }
}

fn require_d(partition: &OrbitPartition) -> Result<(), ConjError> {
    if partition.status == PartitionStatus::Complete && partition.classes.iter().all(|c| c.jump_product.is_one()) {
        Ok(())
    } else {
        Err(ConjError::DNotSatisfied)
    }
}

/// `π(f) = ∏_{i, 0<k<=l_i} σ_{f^{N+1}}(f^k(a_i))`, `N = max l_i`.
pub fn pi_invariant(f: &PlCircleMap, partition: &OrbitPartition) -> Result<Rational, ConjError> {
    require_d(partition)?;
    let n = partition.max_length() as u64;
    let mut product = Rational::one();
    for class in &partition.classes {
        for x in &class.iterates[1..] {
            product *= jump_chain(f, n + 1, x);
        }
    }
    Ok(product)
}

/// The PL map with exactly the given breaks and jumps, scaled to the
/// circle `S_r` and vanishing at `normalize_at`.
pub fn pl_from_jumps(
    r: &Rational,
    breaks: &[(Rational, Rational)],
    normalize_at: &Rational,
) -> Result<PlCircleMap, ConjError> {
    if breaks.iter().any(|(_, j)| !j.is_positive()) {
        return Err(ConjError::NonPositiveJump);
    }
    let product: Rational = breaks.iter().map(|(_, j)| j.clone()).product();
    if !product.is_one() {
        return Err(ConjError::JumpProductNotOne(product));
    }
    let mut by_point: BTreeMap<Rational, Rational> = BTreeMap::new();
    for (x, j) in breaks {
        if by_point.insert(mod_floor(x, r), j.clone()).is_some() {
            return Err(ConjError::DuplicatePoints);
        }
    }
    by_point.entry(Rational::zero()).or_insert_with(Rational::one);
    // relative slopes from cumulative jumps, starting at 0
    let points: Vec<(Rational, Rational)> = by_point.into_iter().collect();
    let mut rel = Vec::with_capacity(points.len());
    let mut acc = Rational::one();
    for (_, j) in &points {
        acc *= j;
        rel.push(acc.clone());
    }
    let mut total = Rational::zero();
    for (i, (x, _)) in points.iter().enumerate() {
        let right = points.get(i + 1).map_or(r, |p| &p.0);
        total += &rel[i] * (right - x);
    }
    let scale = r / total;
    let mut samples: Vec<Node> = Vec::with_capacity(points.len());
    let mut value = Rational::zero();
    for (i, (x, _)) in points.iter().enumerate() {
        let slope = &rel[i] * &scale;
        let right = points.get(i + 1).map_or(r, |p| &p.0);
        samples.push((x.clone(), value.clone(), slope.clone()));
        value += slope * (right - x);
    }
    let h = PlCircleMap::assemble(r.clone(), samples).0;
    let shift = h.evaluate(normalize_at);
    Ok(PlCircleMap::rotation(r.clone(), -shift).compose(&h).expect("same circle"))
}

/// Primes in the denominators and slopes of `f`.
fn data_primes(f: &PlCircleMap) -> Vec<u64> {
    let mut primes = BTreeSet::new();
    let mut add = |x: &Rational| {
        for part in [x.numer(), x.denom()] {
            if let Some(v) = ExponentVector::factor_rational(&Rational::from_integer(part.abs())) {
                primes.extend(v.primes());
            }
        }
    };
    add(f.r());
    for (p, v) in f.pieces().iter().zip(f.values()) {
        add(&p.slope);
        add(&Rational::from_integer(p.left.denom().clone()));
        add(&Rational::from_integer(v.denom().clone()));
    }
    primes.into_iter().collect()
}

/// Smallest-denominator point of `Z[1/P]` in `[0, r)` avoiding `excluded`,
/// ties broken by the smaller numerator.
fn free_point(r: &Rational, primes: &[u64], excluded: &BTreeSet<Rational>) -> Option<Rational> {
    const DENOMINATOR_LIMIT: u64 = 1 << 20;
    for den in 1..=DENOMINATOR_LIMIT {
        if !factorize(den).primes().all(|p| primes.contains(&p)) {
            continue;
        }
        let d = Rational::from_integer(den.into());
        let mut num = Rational::zero();
        loop {
            let x = &num / &d;
            if &x >= r {
                break;
            }
            if (num.to_integer().gcd(&den.into())).is_one() && !excluded.contains(&x) {
                return Some(x);
            }
            num += Rational::one();
        }
    }
    None
}

/// The conjugator `H` built from the break orbits, and its extra break `c` (when `π(f) != 1`).
pub fn build_h(f: &PlCircleMap, partition: &OrbitPartition) -> Result<(PlCircleMap, Option<Rational>), ConjError> {
    let pi = pi_invariant(f, partition)?;
    let n = partition.max_length() as u64;
    let mut breaks = Vec::new();
    let mut excluded = BTreeSet::new();
    for class in &partition.classes {
        excluded.extend(class.iterates.iter().cloned());
        for x in &class.iterates[1..] {
            breaks.push((x.clone(), jump_chain(f, n + 1, x)));
        }
    }
    if pi.is_one() {
        return Ok((pl_from_jumps(f.r(), &breaks, &Rational::zero())?, None));
    }
    let c = free_point(f.r(), &data_primes(f), &excluded).ok_or(ConjError::NoFreePoint)?;
    breaks.push((c.clone(), pi.recip()));
    Ok((pl_from_jumps(f.r(), &breaks, &c)?, Some(c)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalForm {
    /// `H ∘ f ∘ H^-1`.
    pub conjugate: PlCircleMap,
    pub h: PlCircleMap,
    pub pi: Rational,
    pub rho: RotationNumber,
}

/// Conjugates a map with the (D)-property to a two-break map (or a
/// rotation) and reads off its rotation number.
pub fn to_boshernitzan(f: &PlCircleMap, max_iter: u64) -> Result<NormalForm, ConjError> {
    let DVerdict::Yes(partition) = has_d_property(f, max_iter) else {
        return Err(ConjError::DNotSatisfied);
    };
    let pi = pi_invariant(f, &partition)?;
    let (h, _) = build_h(f, &partition)?;
    let conjugate = f.conjugate_by(&h).expect("same circle");
    let jumps = conjugate.jumps();
    if jumps.len() > 2 {
        return Err(ConjError::NormalFormFailure(jumps.len()));
    }
    let rho = if pi.is_one() {
        if !conjugate.is_rigid_rotation() {
            return Err(ConjError::NormalFormFailure(jumps.len()));
        }
        RotationNumber::from_rational(&(conjugate.f0() / conjugate.r())).ok_or(ConjError::NormalFormFailure(0))?
    } else {
        let other = jumps.iter().find(|j| !j.at.is_zero()).ok_or(ConjError::NormalFormFailure(jumps.len()))?;
        if jumps.len() != 2 || !conjugate.jump_at(&Rational::zero()).eq(&pi) || !conjugate.apply(&other.at).is_zero() {
            return Err(ConjError::NormalFormFailure(jumps.len()));
        }
        let alpha = conjugate.slope_right(&Rational::zero()).clone();
        LogRatio::reduce(&alpha, &pi).ok_or(ConjError::NormalFormFailure(2))?
    };
    Ok(NormalForm { conjugate, h, pi, rho })
}

/// Enclosure of `h_σ(x) = (σ^x - 1)/(σ - 1)` of width at most `2^-bits`.
pub fn numeric_h_sigma(sigma: &Rational, x: &Rational, bits: u32) -> Interval {
    assert!(sigma.is_positive() && !sigma.is_one(), "σ must be positive and differ from 1");
    let denom = sigma - Rational::one();
    if x.is_integer() {
        let k = x.to_integer();
        let power = num_traits::pow::Pow::pow(sigma, &k);
        return Interval::point((power - Rational::one()) / denom);
    }
    let target = Rational::new(1.into(), num_bigint::BigInt::one() << bits as usize);
    let mut work = bits + 8;
    loop {
        let exponent = Interval::ln(sigma, work).scale(x);
        let value = exponent.exp(work).shift(&-Rational::one()).scale(&denom.recip());
        if value.width() <= target {
            return value;
        }
        work += 16;
    }
}

/// Checks `F(Φ(x)) ≈ Φ(x + ρ)` at `samples` points with `Φ = r h_σ`,
/// `σ = λ1/λ2`, `ρ = log λ1 / (log λ1 - log λ2)`.
pub fn verify_linearization(f: &PlCircleMap, samples: u64, bits: u32) -> Result<bool, ConjError> {
    let jumps = f.jumps();
    if jumps.len() != 2 || !jumps[0].at.is_zero() {
        return Err(ConjError::NotBoshernitzanForm);
    }
    let a = &jumps[1].at;
    if !f.apply(a).is_zero() {
        return Ok(false);
    }
    let r = f.r();
    let l1 = f.slope_right(&Rational::zero()).clone();
    let l2 = f.slope_right(a).clone();
    let sigma = &l1 / &l2;
    let ln1 = Interval::ln(&l1, bits + 16);
    let ln2 = Interval::ln(&l2, bits + 16);
    let rho = ln1.div(&ln1.sub(&ln2)).expect("slopes differ").round(bits + 8);
    let phi = |y: &Rational| -> Interval {
        let k = y.floor();
        numeric_h_sigma(&sigma, &(y - &k), bits).shift(&k).scale(r)
    };
    for j in 0..samples {
        let x = Rational::new(j.into(), samples.into());
        let inner = phi(&x);
        let lhs = Interval::new(f.evaluate(inner.lo()), f.evaluate(inner.hi()));
        let rhs = Interval::new(phi(&(&x + rho.lo())).lo().clone(), phi(&(&x + rho.hi())).hi().clone());
        if !lhs.overlaps(&rhs) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};
    use alloc::vec;

    fn boshernitzan() -> PlCircleMap {
        PlCircleMap::from_pieces(int(1), vec![(int(0), int(2)), (rat(2, 5), rat(1, 3))], rat(1, 5)).unwrap()
    }

    /// Four-piece bump supported on [0, 1/2], slopes 2, 1, 1/2.
    fn bump() -> PlCircleMap {
        PlCircleMap::from_nodes(
            int(1),
            &[(int(0), int(0)), (rat(1, 8), rat(1, 4)), (rat(1, 4), rat(3, 8)), (rat(1, 2), rat(1, 2))],
        )
        .unwrap()
    }

    #[test]
    fn jump_chain_examples() {
        let f = boshernitzan();
        assert_eq!(jump_chain(&f, 2, &int(0)), int(6));
        assert_eq!(jump_chain(&f, 5, &rat(1, 7)), int(1));
        for k in 1..=5u64 {
            for x in [int(0), rat(2, 5), rat(1, 5), rat(1, 10)] {
                let power = f.power(k as i64);
                assert_eq!(jump_chain(&f, k, &x), power.jump_at(&x), "k={k} x={x}");
            }
        }
    }

    #[test]
    fn partition_examples() {
        let p = orbit_partition(&PlCircleMap::rotation(int(1), rat(1, 3)), 10);
        assert!(p.classes.is_empty());
        assert_eq!(p.status, PartitionStatus::Complete);
        let p = orbit_partition(&boshernitzan(), 256);
        assert_eq!(p.classes.len(), 1);
        let c = &p.classes[0];
        assert_eq!((c.anchor.clone(), c.length, c.jump_product.clone()), (rat(2, 5), 1, int(1)));
        assert_eq!(c.breaks, vec![rat(2, 5), int(0)]);
        // the fixed ends of a bump are closed classes
        let p = orbit_partition(&bump(), 64);
        let closed: Vec<_> = p.classes.iter().filter(|c| c.closed).map(|c| c.anchor.clone()).collect();
        assert_eq!(closed, vec![int(0), rat(1, 2)]);
    }

    #[test]
    fn d_property_examples() {
        assert!(has_d_property(&boshernitzan(), 256).is_yes());
        assert!(has_d_property(&PlCircleMap::rotation(int(1), rat(2, 7)), 256).is_yes());
        let DVerdict::No { partition, witness } = has_d_property(&bump(), 64) else { panic!() };
        assert!(partition.classes[witness].closed);
    }

    #[test]
    fn pi_examples() {
        let f = boshernitzan();
        let p = orbit_partition(&f, 256);
        assert_eq!(pi_invariant(&f, &p), Ok(int(6)));
        let r = PlCircleMap::rotation(int(1), rat(1, 3));
        assert_eq!(pi_invariant(&r, &orbit_partition(&r, 8)), Ok(int(1)));
        let b = bump();
        assert_eq!(pi_invariant(&b, &orbit_partition(&b, 64)), Err(ConjError::DNotSatisfied));
    }

    #[test]
    fn pl_from_jumps_examples() {
        assert!(pl_from_jumps(&int(1), &[], &int(0)).unwrap().is_identity());
        let h = pl_from_jumps(&int(1), &[(int(0), int(6)), (rat(2, 5), rat(1, 6))], &int(0)).unwrap();
        assert_eq!(h.jump_at(&int(0)), int(6));
        assert_eq!(h.jump_at(&rat(2, 5)), rat(1, 6));
        assert_eq!(h.evaluate(&int(0)), int(0));
        assert_eq!(
            pl_from_jumps(&int(1), &[(int(0), int(2)), (rat(1, 2), int(3))], &int(0)),
            Err(ConjError::JumpProductNotOne(int(6)))
        );
        assert_eq!(
            pl_from_jumps(&int(1), &[(int(0), int(2)), (int(1), rat(1, 2))], &int(0)),
            Err(ConjError::DuplicatePoints)
        );
    }

    #[test]
    fn build_h_examples() {
        let f = boshernitzan();
        let (h, c) = build_h(&f, &orbit_partition(&f, 256)).unwrap();
        assert_eq!(c, Some(rat(1, 2)));
        assert_eq!(h.jump_at(&int(0)), int(6));
        assert_eq!(h.jump_at(&rat(1, 2)), rat(1, 6));
        assert_eq!(h.apply(&rat(1, 2)), int(0));
        let r = PlCircleMap::rotation(int(1), rat(1, 3));
        let (h, c) = build_h(&r, &orbit_partition(&r, 8)).unwrap();
        assert!(h.is_identity() && c.is_none());
    }

    #[test]
    fn normal_form_examples() {
        let nf = to_boshernitzan(&boshernitzan(), 256).unwrap();
        assert_eq!(nf.pi, int(6));
        assert_eq!(nf.conjugate.jumps().len(), 2);
        assert_eq!(nf.rho, LogRatio::reduce(&int(2), &int(6)).unwrap());
        let nf = to_boshernitzan(&PlCircleMap::rotation(int(1), rat(1, 3)), 8).unwrap();
        assert_eq!(nf.rho, RotationNumber::Rational { p: 1, q: 3 });
        assert_eq!(to_boshernitzan(&bump(), 64), Err(ConjError::DNotSatisfied));
    }

    #[test]
    fn h_sigma_examples() {
        assert_eq!(numeric_h_sigma(&int(3), &int(0), 64), Interval::point(int(0)));
        assert_eq!(numeric_h_sigma(&rat(1, 6), &int(1), 64), Interval::point(int(1)));
        // (6^(-1/2) - 1)/(1/6 - 1) = 0.71010205144336438036...
        let v = numeric_h_sigma(&rat(1, 6), &rat(1, 2), 128);
        assert!(v.width() <= Rational::new(1.into(), num_bigint::BigInt::one() << 128usize));
        assert!(v.lo() > &rat(710_102_051_443_364_380, 1_000_000_000_000_000_000));
        assert!(v.hi() < &rat(710_102_051_443_364_381, 1_000_000_000_000_000_000));
    }

    #[test]
    fn linearization_examples() {
        assert_eq!(verify_linearization(&boshernitzan(), 32, 128), Ok(true));
        let broken =
            PlCircleMap::from_pieces(int(1), vec![(int(0), int(2)), (rat(2, 5), rat(1, 3))], rat(1, 4)).unwrap();
        assert_eq!(verify_linearization(&broken, 32, 64), Ok(false));
        assert_eq!(verify_linearization(&bump(), 8, 64), Err(ConjError::NotBoshernitzanForm));
    }
}
