//! Orientation-preserving PL homeomorphisms of the circle `S_r = R / rZ`.
//!
//! A map is stored through its lift `F` on `[0, r)`: ordered pieces
//! `(left_i, slope_i)` with `left_0 = 0`, and the lift values `F(left_i)`.
//! The lift is normalized by `F(0) ∈ [0, r)` and extended by
//! `F(x + r) = F(x) + r`.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{div_mod_floor, mod_floor, slope_decompose, GroupContext, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlError {
    #[error("slopes times piece lengths sum to {}, expected the circumference {}", .0.1, .0.0)]
    LengthMismatch(Box<(Rational, Rational)>),
    #[error("piece boundaries must start at 0, increase strictly and stay below r")]
    Unsorted,
    #[error("slope must be positive")]
    NonPositiveSlope,
    #[error("maps live on circles of different circumference")]
    CircumferenceMismatch,
    #[error("circumference must be positive")]
    NonPositiveCircumference,
    #[error("lift value at 0 must lie in [0, r)")]
    OffsetOutOfRange,
    #[error("a map needs at least one piece")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Piece {
    pub left: Rational,
    pub slope: Rational,
}

/// Jump `σ(a) = slope right of a / slope left of a` at a break point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Jump {
    pub at: Rational,
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlCircleMap {
    r: Rational,
    pieces: Vec<Piece>,
    /// Lift value at each `left_i`; `values[0] = f0`.
    values: Vec<Rational>,
}

/// A sample of a lift: position in `[0, r)`, lift value, right slope.
pub(crate) type Node = (Rational, Rational, Rational);

impl PlCircleMap {
    /// Validating constructor from `(left, slope)` pieces and the lift value
    /// at 0. Adjacent pieces with equal slopes are merged.
    pub fn from_pieces(
        r: Rational,
        pieces: Vec<(Rational, Rational)>,
        f0: Rational,
    ) -> Result<Self, PlError> {
        if !r.is_positive() {
            return Err(PlError::NonPositiveCircumference);
        }
        if pieces.is_empty() {
            return Err(PlError::Empty);
        }
        if !pieces[0].0.is_zero()
            || pieces.windows(2).any(|w| w[0].0 >= w[1].0)
            || pieces.last().is_some_and(|p| p.0 >= r)
        {
            return Err(PlError::Unsorted);
        }
        if pieces.iter().any(|p| !p.1.is_positive()) {
            return Err(PlError::NonPositiveSlope);
        }
        if f0.is_negative() || f0 >= r {
            return Err(PlError::OffsetOutOfRange);
        }
        let mut values = Vec::with_capacity(pieces.len());
        let mut acc = f0.clone();
        for (i, (left, slope)) in pieces.iter().enumerate() {
            values.push(acc.clone());
            let right = pieces.get(i + 1).map_or(&r, |p| &p.0);
            acc += slope * (right - left);
        }
        let found = acc - &f0;
        if found != r {
            return Err(PlError::LengthMismatch(Box::new((r, found))));
        }
        let pieces = pieces.into_iter().map(|(left, slope)| Piece { left, slope }).collect();
        Ok(Self { r, pieces, values }.canonical())
    }

    /// PL map through the lift nodes `(x_i, F(x_i))`, linear in between and
    /// closed up by `(x_0 + r, F(x_0) + r)`. The nodes must span less than
    /// one period with both coordinates strictly increasing.
    pub fn from_nodes(r: Rational, nodes: &[(Rational, Rational)]) -> Result<Self, PlError> {
        if !r.is_positive() {
            return Err(PlError::NonPositiveCircumference);
        }
        let (first, last) = match (nodes.first(), nodes.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(PlError::Empty),
        };
        if nodes.windows(2).any(|w| w[0].0 >= w[1].0) || last.0 >= &first.0 + &r {
            return Err(PlError::Unsorted);
        }
        let mut samples = Vec::with_capacity(nodes.len());
        for (i, (x, y)) in nodes.iter().enumerate() {
            let (nx, ny) = match nodes.get(i + 1) {
                Some((nx, ny)) => (nx.clone(), ny.clone()),
                None => (&first.0 + &r, &first.1 + &r),
            };
            let slope = (ny - y) / (nx - x);
            if !slope.is_positive() {
                return Err(PlError::NonPositiveSlope);
            }
            let (k, x0) = div_mod_floor(x, &r);
            let y0 = y - &r * Rational::from_integer(k);
            samples.push((x0, y0, slope));
        }
        Ok(Self::assemble(r, samples).0)
    }

    /// Builds the canonical map from samples of a lift that include every
    /// break point. Returns the map and the integer `c` with
    /// `lift = canonical lift + c r`.
    pub(crate) fn assemble(r: Rational, samples: Vec<Node>) -> (Self, BigInt) {
        let mut by_x: BTreeMap<Rational, (Rational, Rational)> = BTreeMap::new();
        for (x, y, s) in samples {
            debug_assert!(!x.is_negative() && x < r);
            by_x.entry(x).or_insert((y, s));
        }
        if !by_x.contains_key(&Rational::zero()) {
            let (x, (y, s)) = by_x.iter().next_back().expect("at least one sample");
            let at_zero = y + s * (&r - x) - &r;
            let s = s.clone();
            by_x.insert(Rational::zero(), (at_zero, s));
        }
        let (carry, _) = div_mod_floor(&by_x[&Rational::zero()].0, &r);
        let shift = &r * Rational::from_integer(carry.clone());
        let mut pieces = Vec::with_capacity(by_x.len());
        let mut values = Vec::with_capacity(by_x.len());
        for (left, (y, slope)) in by_x {
            values.push(y - &shift);
            pieces.push(Piece { left, slope });
        }
        let map = Self { r, pieces, values }.canonical();
        debug_assert!(map.check_consistency());
        (map, carry)
    }

    fn canonical(self) -> Self {
        let Self { r, pieces, values } = self;
        let mut out_p: Vec<Piece> = Vec::with_capacity(pieces.len());
        let mut out_v = Vec::with_capacity(values.len());
        for (p, v) in pieces.into_iter().zip(values) {
            if out_p.last().is_some_and(|last| last.slope == p.slope) {
                continue;
            }
            out_p.push(p);
            out_v.push(v);
        }
        Self { r, pieces: out_p, values: out_v }
    }

    fn check_consistency(&self) -> bool {
        let n = self.pieces.len();
        (0..n).all(|i| {
            let right = self.pieces.get(i + 1).map_or(&self.r, |p| &p.left);
            let next = self.values.get(i + 1).cloned().unwrap_or_else(|| &self.values[0] + &self.r);
            &self.values[i] + &self.pieces[i].slope * (right - &self.pieces[i].left) == next
        }) && !self.values[0].is_negative()
            && self.values[0] < self.r
    }

    pub fn identity(r: Rational) -> Self {
        Self::rotation(r, Rational::zero())
    }

    /// Rigid rotation `x -> x + a` on `S_r`.
    pub fn rotation(r: Rational, a: Rational) -> Self {
        assert!(r.is_positive(), "circumference must be positive");
        let f0 = mod_floor(&a, &r);
        Self { r, pieces: alloc::vec![Piece { left: Rational::zero(), slope: Rational::one() }], values: alloc::vec![f0] }
    }

    pub fn r(&self) -> &Rational {
        &self.r
    }

    pub fn f0(&self) -> &Rational {
        &self.values[0]
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Lift values at the piece boundaries.
    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn is_identity(&self) -> bool {
        self.pieces.len() == 1 && self.pieces[0].slope.is_one() && self.values[0].is_zero()
    }

    pub fn is_rigid_rotation(&self) -> bool {
        self.pieces.len() == 1 && self.pieces[0].slope.is_one()
    }

    fn piece_index(&self, y: &Rational) -> usize {
        self.pieces.partition_point(|p| &p.left <= y) - 1
    }

    /// The lift `F(x)` for any real `x`.
    pub fn evaluate(&self, x: &Rational) -> Rational {
        let (k, y) = div_mod_floor(x, &self.r);
        let i = self.piece_index(&y);
        let p = &self.pieces[i];
        &self.values[i] + &p.slope * (&y - &p.left) + &self.r * Rational::from_integer(k)
    }

    /// The inverse lift `F^-1(y)`.
    pub fn evaluate_inverse(&self, y: &Rational) -> Rational {
        let (k, z) = div_mod_floor(&(y - self.f0()), &self.r);
        let z = z + self.f0();
        let j = self.values.partition_point(|v| v <= &z) - 1;
        let p = &self.pieces[j];
        &p.left + (&z - &self.values[j]) / &p.slope + &self.r * Rational::from_integer(k)
    }

    /// The map on the circle, valued in `[0, r)`.
    pub fn apply(&self, x: &Rational) -> Rational {
        mod_floor(&self.evaluate(x), &self.r)
    }

    /// Right derivative at `x`.
    pub fn slope_right(&self, x: &Rational) -> &Rational {
        let y = mod_floor(x, &self.r);
        &self.pieces[self.piece_index(&y)].slope
    }

    /// Left derivative at `x`.
    pub fn slope_left(&self, x: &Rational) -> &Rational {
        let y = mod_floor(x, &self.r);
        let i = self.piece_index(&y);
        if self.pieces[i].left == y {
            let prev = if i == 0 { self.pieces.len() - 1 } else { i - 1 };
            &self.pieces[prev].slope
        } else {
            &self.pieces[i].slope
        }
    }

    /// `σ(x)`; equals 1 away from the break points.
    pub fn jump_at(&self, x: &Rational) -> Rational {
        self.slope_right(x) / self.slope_left(x)
    }

    /// True breaks with their jumps, in increasing order.
    pub fn jumps(&self) -> Vec<Jump> {
        let n = self.pieces.len();
        (0..n)
            .filter_map(|i| {
                let prev = &self.pieces[(i + n - 1) % n].slope;
                let value = &self.pieces[i].slope / prev;
                (!value.is_one()).then(|| Jump { at: self.pieces[i].left.clone(), value })
            })
            .collect()
    }

    pub fn breaks(&self) -> Vec<Rational> {
        self.jumps().into_iter().map(|j| j.at).collect()
    }

    fn same_circle(&self, other: &Self) -> Result<(), PlError> {
        if self.r == other.r {
            Ok(())
        } else {
            Err(PlError::CircumferenceMismatch)
        }
    }

    /// `self ∘ g` together with the carry `c`: `F(G(x)) = H(x) + c r`.
    pub(crate) fn compose_lift(&self, g: &Self) -> Result<(Self, BigInt), PlError> {
        self.same_circle(g)?;
        let mut xs: Vec<Rational> = g.pieces.iter().map(|p| p.left.clone()).collect();
        xs.extend(self.pieces.iter().map(|p| mod_floor(&g.evaluate_inverse(&p.left), &self.r)));
        xs.sort();
        xs.dedup();
        let samples = xs
            .into_iter()
            .map(|x| {
                let gx = g.evaluate(&x);
                let slope = g.slope_right(&x) * self.slope_right(&gx);
                let value = self.evaluate(&gx);
                (x, value, slope)
            })
            .collect();
        Ok(Self::assemble(self.r.clone(), samples))
    }

    /// `self ∘ g`.
    pub fn compose(&self, g: &Self) -> Result<Self, PlError> {
        Ok(self.compose_lift(g)?.0)
    }

    pub fn invert(&self) -> Self {
        let mut samples: Vec<Node> = self
            .pieces
            .iter()
            .zip(&self.values)
            .map(|(p, v)| {
                let (k, y) = div_mod_floor(v, &self.r);
                (y, &p.left - &self.r * Rational::from_integer(k), p.slope.recip())
            })
            .collect();
        if !samples.iter().any(|s| s.0.is_zero()) {
            let x = self.evaluate_inverse(&Rational::zero());
            let slope = self.slope_right(&x).recip();
            samples.push((Rational::zero(), x, slope));
        }
        Self::assemble(self.r.clone(), samples).0
    }

    /// `self^n` for any integer `n`.
    pub fn power(&self, n: i64) -> Self {
        let base = if n < 0 { self.invert() } else { self.clone() };
        base.power_lift(n.unsigned_abs()).0
    }

    /// `self^n` (n >= 0) with the carry of the iterated lift:
    /// `F^n(x) = H(x) + c r`.
    pub(crate) fn power_lift(&self, mut n: u64) -> (Self, BigInt) {
        let mut result = (Self::identity(self.r.clone()), BigInt::zero());
        let mut square = (self.clone(), BigInt::zero());
        while n > 0 {
            if n & 1 == 1 {
                result = compose_carry(&square, &result);
            }
            n >>= 1;
            if n > 0 {
                square = compose_carry(&square, &square);
            }
        }
        result
    }

    /// `h ∘ self ∘ h^-1`.
    pub fn conjugate_by(&self, h: &Self) -> Result<Self, PlError> {
        h.compose(&self.compose(&h.invert())?)
    }

    pub fn commutes_with(&self, g: &Self) -> Result<bool, PlError> {
        Ok(self.compose(g)? == g.compose(self)?)
    }

    /// `H_Q ∘ f ∘ H_Q^-1` on `S_{Qr}`: breaks scaled by `Q`, slopes kept.
    pub fn rescale(&self, q: &Rational) -> Self {
        assert!(q.is_positive(), "rescaling factor must be positive");
        Self {
            r: &self.r * q,
            pieces: self.pieces.iter().map(|p| Piece { left: &p.left * q, slope: p.slope.clone() }).collect(),
            values: self.values.iter().map(|v| v * q).collect(),
        }
    }

    /// Membership in `T_{r,(n_i)}`: slopes in `<n_i>`, every subdivision
    /// point (0 included) and its image in `Z[1/m]`.
    pub fn membership(&self, ctx: &GroupContext) -> Result<bool, PlError> {
        if &self.r != ctx.r() {
            return Err(PlError::CircumferenceMismatch);
        }
        let slopes_ok = self.pieces.iter().all(|p| slope_decompose(&p.slope, ctx).is_some());
        let breaks_ok = self.pieces.iter().all(|p| ctx.in_ring(&p.left));
        let images_ok = self.values.iter().all(|v| ctx.in_ring(&mod_floor(v, &self.r)));
        Ok(slopes_ok && breaks_ok && images_ok)
    }

    /// Largest numerator/denominator bit length in the map data.
    pub fn height_bits(&self) -> u64 {
        let bits = |x: &Rational| x.numer().bits().max(x.denom().bits());
        self.pieces
            .iter()
            .flat_map(|p| [bits(&p.left), bits(&p.slope)])
            .chain(self.values.iter().map(bits))
            .max()
            .unwrap_or(0)
    }

    /// Lift value at 0 as a float, for diagnostics.
    pub fn f0_approx(&self) -> f64 {
        self.f0().to_f64().unwrap_or(f64::NAN)
    }
}

fn compose_carry(f: &(PlCircleMap, BigInt), g: &(PlCircleMap, BigInt)) -> (PlCircleMap, BigInt) {
    let (h, c) = f.0.compose_lift(&g.0).expect("same circle");
    (h, c + &f.1 + &g.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};
    use alloc::vec;

    fn boshernitzan() -> PlCircleMap {
        PlCircleMap::from_pieces(int(1), vec![(int(0), int(2)), (rat(2, 5), rat(1, 3))], rat(1, 5)).unwrap()
    }

    #[test]
    fn from_pieces_examples() {
        let id = PlCircleMap::from_pieces(int(1), vec![(int(0), int(1))], int(0)).unwrap();
        assert!(id.is_identity());
        assert_eq!(boshernitzan().pieces().len(), 2);
        let err = PlCircleMap::from_pieces(int(1), vec![(int(0), int(2)), (rat(1, 2), int(1))], int(0));
        assert!(matches!(err, Err(PlError::LengthMismatch(_))));
        let err = PlCircleMap::from_pieces(int(1), vec![(int(0), int(1)), (int(0), int(1))], int(0));
        assert_eq!(err, Err(PlError::Unsorted));
        let err = PlCircleMap::from_pieces(int(1), vec![(int(0), int(-1))], int(0));
        assert_eq!(err, Err(PlError::NonPositiveSlope));
        let err = PlCircleMap::from_pieces(int(1), vec![(int(0), int(1))], int(1));
        assert_eq!(err, Err(PlError::OffsetOutOfRange));
    }

    #[test]
    fn merges_equal_slopes() {
        let f = PlCircleMap::from_pieces(int(1), vec![(int(0), int(1)), (rat(1, 2), int(1))], rat(1, 4)).unwrap();
        assert_eq!(f, PlCircleMap::rotation(int(1), rat(1, 4)));
    }

    #[test]
    fn evaluate_examples() {
        let id = PlCircleMap::identity(int(1));
        assert_eq!(id.evaluate(&rat(7, 3)), rat(7, 3));
        let f = boshernitzan();
        assert_eq!(f.evaluate(&int(0)), rat(1, 5));
        assert_eq!(f.evaluate(&rat(2, 5)), int(1));
        assert_eq!(f.apply(&rat(2, 5)), int(0));
        assert_eq!(f.evaluate(&rat(7, 5)), int(2));
        assert_eq!(f.evaluate(&rat(-3, 5)), int(0));
        for x in [rat(1, 7), rat(9, 10), rat(-13, 3)] {
            assert_eq!(f.evaluate_inverse(&f.evaluate(&x)), x);
        }
    }

    #[test]
    fn compose_invert_power() {
        let half = PlCircleMap::rotation(int(1), rat(1, 2));
        assert!(half.compose(&half).unwrap().is_identity());
        let f = boshernitzan();
        let g = f.invert();
        let slopes: Vec<_> = g.pieces().iter().map(|p| p.slope.clone()).collect();
        assert_eq!(g.breaks(), vec![int(0), rat(1, 5)]);
        assert!(slopes.contains(&rat(1, 2)) && slopes.contains(&int(3)));
        assert!(f.compose(&g).unwrap().is_identity());
        assert!(g.compose(&f).unwrap().is_identity());
        assert!(f.power(0).is_identity());
        assert_eq!(f.power(3), f.compose(&f.compose(&f).unwrap()).unwrap());
        assert_eq!(f.power(-2), g.compose(&g).unwrap());
        assert!(PlCircleMap::rotation(int(1), rat(1, 3)).power(3).is_identity());
        let other = PlCircleMap::identity(int(2));
        assert_eq!(f.compose(&other), Err(PlError::CircumferenceMismatch));
    }

    #[test]
    fn power_lift_tracks_carry() {
        let f = boshernitzan();
        let (h, c) = f.power_lift(7);
        let mut x = int(0);
        for _ in 0..7 {
            x = f.evaluate(&x);
        }
        assert_eq!(h.f0() + int(1) * Rational::from_integer(c), x);
    }

    #[test]
    fn jump_examples() {
        assert!(PlCircleMap::identity(int(1)).jumps().is_empty());
        let js = boshernitzan().jumps();
        assert_eq!(js, vec![Jump { at: int(0), value: int(6) }, Jump { at: rat(2, 5), value: rat(1, 6) }]);
        let product: Rational = js.iter().map(|j| j.value.clone()).product();
        assert!(product.is_one());
    }

    #[test]
    fn membership_examples() {
        let t = GroupContext::new(int(1), vec![2]).unwrap();
        assert!(PlCircleMap::rotation(int(1), rat(1, 2)).membership(&t).unwrap());
        let c23 = GroupContext::new(int(1), vec![2, 3]).unwrap();
        assert!(!boshernitzan().membership(&c23).unwrap());
        assert_eq!(
            PlCircleMap::identity(int(5)).membership(&c23),
            Err(PlError::CircumferenceMismatch)
        );
        // slopes (2, 1/3) on S_5 with break at 2 (integer data)
        let c5 = GroupContext::new(int(5), vec![2, 3]).unwrap();
        let f = PlCircleMap::from_pieces(int(5), vec![(int(0), int(2)), (int(2), rat(1, 3))], int(1)).unwrap();
        assert!(f.membership(&c5).unwrap());
    }

    #[test]
    fn rotations_and_rescale() {
        assert!(PlCircleMap::rotation(int(1), int(0)).is_identity());
        let r = PlCircleMap::rotation(int(2), int(1));
        assert!(!r.is_identity());
        assert!(r.power(2).is_identity());
        assert_eq!(PlCircleMap::identity(int(1)).rescale(&int(5)), PlCircleMap::identity(int(5)));
        let f = boshernitzan().rescale(&int(5));
        assert!(f.pieces().iter().all(|p| p.left.is_integer()));
        assert_eq!(f.r(), &int(5));
        assert_ne!(PlCircleMap::rotation(int(1), rat(1, 3)), PlCircleMap::rotation(int(1), rat(2, 3)));
    }

    #[test]
    fn from_nodes_matches_pieces() {
        let f = PlCircleMap::from_nodes(int(1), &[(int(0), rat(1, 5)), (rat(2, 5), int(1))]).unwrap();
        assert_eq!(f, boshernitzan());
        // nodes starting off zero, shifted by a period
        let g = PlCircleMap::from_nodes(int(1), &[(rat(2, 5), int(1)), (int(1), rat(6, 5))]).unwrap();
        assert_eq!(g, boshernitzan());
    }
}
