use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use proptest::prelude::*;

use plcircle_core::arith::{find_pi, in_d_a, int, rat, slope_decompose, GroupContext, Rational};
use plcircle_core::conjugacy::{jump_chain, orbit_partition, pi_invariant, to_boshernitzan};
use plcircle_core::constructions::{
    bs_equivalent, bs_witness, bump_alpha, finite_order_element, stein_family, transport,
};
use plcircle_core::rotnum::{
    compare_rho, contains_mod1, exact_rational_rho, order_of, periodic_point, rho_bounds, RotationNumber,
};
use plcircle_core::PlCircleMap;

fn ctx(r: i64, basis: &[u64]) -> GroupContext {
    GroupContext::new(int(r), basis.to_vec()).unwrap()
}

/// A PL map of `S_1` through random lift nodes with small denominators.
fn arb_map() -> impl Strategy<Value = PlCircleMap> {
    (1usize..5, any::<u64>()).prop_map(|(n, seed)| {
        let mut s = seed;
        let mut next = |k: u64| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 33) % k
        };
        let mut xs: Vec<i64> = (0..n).map(|_| next(24) as i64).collect();
        let mut ys: Vec<i64> = (0..n).map(|_| next(24) as i64).collect();
        xs.sort();
        xs.dedup();
        ys.sort();
        ys.dedup();
        let k = xs.len().min(ys.len());
        let shift = next(24) as i64;
        let nodes: Vec<_> = xs[..k].iter().zip(&ys[..k]).map(|(&x, &y)| (rat(x, 24), rat(y + shift, 24))).collect();
        PlCircleMap::from_nodes(int(1), &nodes).unwrap()
    })
}

fn generators(m: u64) -> Vec<PlCircleMap> {
    let c = ctx(1, &[m]);
    let unit = if m == 2 { 8 } else { 9 };
    let mut gens: Vec<PlCircleMap> = (1..unit).map(|k| PlCircleMap::rotation(int(1), rat(k, unit))).collect();
    let len = if m == 2 { rat(1, 2) } else { rat(4, 9) };
    let km1 = int(m as i64 - 1);
    for start in 0..unit {
        let a0 = rat(start, unit);
        let b0 = &a0 + &len;
        if b0 > int(1) {
            break;
        }
        let x0 = &a0 + &len / int(4);
        let alpha = &km1 * &len / int(4) * if m == 2 { int(1) } else { rat(2, 3) };
        if let Ok(f) = bump_alpha(&c, m, &a0, &b0, &x0, &alpha) {
            gens.push(f.invert());
            gens.push(f);
        }
    }
    gens
}

fn arb_word(m: u64, max_len: usize) -> impl Strategy<Value = PlCircleMap> {
    let gens = generators(m);
    let n = gens.len();
    prop::collection::vec(0..n, 1..=max_len).prop_map(move |idx| {
        idx.iter().fold(PlCircleMap::identity(int(1)), |acc, &i| acc.compose(&gens[i]).unwrap())
    })
}

fn arb_ring(m: u64) -> impl Strategy<Value = Rational> {
    (-200i64..200, 0u32..4).prop_map(move |(n, k)| rat(n, (m as i64).pow(k)))
}

fn reduced(f: &PlCircleMap, k: i64) -> Option<RotationNumber> {
    match exact_rational_rho(f, 64)? {
        RotationNumber::Rational { p, q } => Some(RotationNumber::rational(k * p as i64, q)),
        other => Some(other),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn one_minus_lambda_times_ring_lies_in_d_a(a in arb_ring(6), s in prop::collection::vec(-4i64..5, 2)) {
        let c = ctx(1, &[2, 3]);
        let lambda = c.slope(&s);
        prop_assert!(in_d_a(&((Rational::one() - lambda) * a), &c));
    }

    #[test]
    fn d_times_ring_lies_in_d_a(a in arb_ring(15)) {
        let c = ctx(1, &[3, 5]);
        prop_assert!(in_d_a(&(int(c.d() as i64) * a), &c));
    }

    #[test]
    fn slope_decompose_round_trip(s in prop::collection::vec(-8i64..=8, 3)) {
        let c = ctx(1, &[2, 3, 5]);
        prop_assert_eq!(slope_decompose(&c.slope(&s), &c), Some(s));
    }

    #[test]
    fn find_pi_post_conditions(i in 0usize..6) {
        let bases: [&[u64]; 6] = [&[2, 3], &[3, 5], &[4, 7], &[2, 3, 5], &[5, 9], &[7, 10]];
        let c = ctx(1, bases[i]);
        let (alphas, pi) = find_pi(&c);
        prop_assert!(alphas.iter().all(|&a| a >= 1));
        let d = BigInt::from(c.d());
        let q: BigInt = (&pi - BigInt::one()) / &d;
        prop_assert!(((&pi - BigInt::one()) % &d).is_zero() && q.gcd(&d).is_one());
    }

    #[test]
    fn group_laws(f in arb_map(), g in arb_map(), h in arb_map(), a in -3i64..4, b in -3i64..4) {
        let left = f.compose(&g).unwrap().compose(&h).unwrap();
        let right = f.compose(&g.compose(&h).unwrap()).unwrap();
        prop_assert_eq!(left, right);
        prop_assert!(f.compose(&f.invert()).unwrap().is_identity());
        prop_assert_eq!(f.power(a + b), f.power(a).compose(&f.power(b)).unwrap());
    }

    #[test]
    fn monotone_and_degree_one(f in arb_map(), x in -50i64..50, dy in 1i64..48) {
        let x = rat(x, 7);
        let y = &x + rat(dy, 49);
        let (fx, fy) = (f.evaluate(&x), f.evaluate(&y));
        prop_assert!(fx < fy && fy < &fx + int(1));
        prop_assert_eq!(f.evaluate(&(&x + int(1))), fx + int(1));
    }

    #[test]
    fn jump_cocycle(f in arb_map(), g in arb_map(), x in 0i64..48) {
        let x = rat(x, 48);
        let gf = g.compose(&f).unwrap();
        prop_assert_eq!(gf.jump_at(&x), g.jump_at(&f.evaluate(&x)) * f.jump_at(&x));
    }

    #[test]
    fn jumps_multiply_to_one(f in arb_map()) {
        let product: Rational = f.jumps().into_iter().map(|j| j.value).product();
        prop_assert!(product.is_one());
    }

    #[test]
    fn membership_closure(f in arb_word(2, 4), g in arb_word(2, 4)) {
        let c = ctx(1, &[2]);
        prop_assert!(f.membership(&c).unwrap() && g.membership(&c).unwrap());
        prop_assert!(f.compose(&g).unwrap().membership(&c).unwrap());
        prop_assert!(f.invert().membership(&c).unwrap());
    }

    #[test]
    fn rho_sandwich_and_periodic_point(f in arb_word(2, 6)) {
        if let Some(RotationNumber::Rational { p, q }) = exact_rational_rho(&f, 64) {
            let rho = rat(p as i64, q as i64);
            prop_assert!(contains_mod1(&rho_bounds(&f, 1000), &rho));
            // the canonical lift has ρ in [0, 1]; ρ = 0 may come from the lift value 1
            let lift_p = if p == 0 && compare_rho(&f, 0, 1) != core::cmp::Ordering::Equal { 1 } else { p as i64 };
            let x = periodic_point(&f, lift_p, q).expect("rational ρ has a periodic point");
            let fq = f.power(q as i64);
            prop_assert!(mod_diff_is_zero(&fq.evaluate(&x), &x));
        }
    }

    #[test]
    fn rho_conjugation_and_power(f in arb_word(2, 5), h in arb_map(), k in 1i64..5) {
        if let Some(rho) = exact_rational_rho(&f, 64) {
            let g = f.conjugate_by(&h).unwrap();
            if let Some(other) = exact_rational_rho(&g, 64) {
                prop_assert_eq!(&other, &rho);
            }
            if let Some(power_rho) = exact_rational_rho(&f.power(k), 64) {
                prop_assert_eq!(Some(power_rho), reduced(&f, k));
            }
        }
    }

    #[test]
    fn compare_is_consistent(f in arb_word(2, 5), a in 0i64..12, b in 1u64..12) {
        if let Some(RotationNumber::Rational { p, q }) = exact_rational_rho(&f, 64) {
            if p > 0 && a as u64 <= b {
                let expected = (p as i128 * b as i128).cmp(&(a as i128 * q as i128));
                prop_assert_eq!(compare_rho(&f, a, b), expected);
            }
        }
    }

    #[test]
    fn jump_chain_matches_power(f in arb_word(2, 3), k in 1u64..=6) {
        for j in f.jumps() {
            let power = f.power(k as i64);
            prop_assert_eq!(jump_chain(&f, k, &j.at), power.jump_at(&j.at));
        }
    }

    #[test]
    fn pi_is_a_conjugacy_invariant(h in arb_word(2, 3), i in 0usize..2) {
        let c = ctx(1, &[2, 3]);
        let f = stein_family(&c, 1).unwrap()[i].clone();
        let h = h.rescale(&int(5));
        let g = f.conjugate_by(&h).unwrap();
        let pi = |m: &PlCircleMap| pi_invariant(m, &orbit_partition(m, 256)).unwrap();
        prop_assert_eq!(pi(&g), pi(&f));
        let nf = to_boshernitzan(&g, 256).unwrap();
        prop_assert!(nf.conjugate.jumps().len() <= 2);
        prop_assert_eq!(nf.conjugate.jump_at(&Rational::zero()), int(6));
    }

    #[test]
    fn finite_order_elements(q in 1u64..7, p in 0i64..7, r in 1i64..5, m in 2u64..5) {
        let c = ctx(r, &[m]);
        if p.gcd(&(q as i64)) == 1 || q == 1 {
            let p = if q == 1 { 0 } else { p };
            if let Some(f) = finite_order_element(&c, q, p).unwrap() {
                prop_assert!(f.power(q as i64).is_identity());
                prop_assert_eq!(order_of(&f, q), Some(q));
                prop_assert_eq!(exact_rational_rho(&f, 64), Some(RotationNumber::rational(p, q)));
            }
        }
    }

    #[test]
    fn bs_witness_exactly_when_equivalent(l in 1i64..40, lp in 1i64..40, dl in 0u32..3, i in 0usize..3) {
        let bases: [&[u64]; 3] = [&[3], &[3, 5], &[2, 3]];
        let c = ctx(1, bases[i]);
        let l = rat(l, 3i64.pow(dl));
        let lp = int(lp);
        let w = bs_witness(&l, &lp, &c);
        prop_assert_eq!(w.is_some(), bs_equivalent(&l, &lp, &c));
        if let Some(w) = w {
            prop_assert!(w.is_valid(&c));
            prop_assert_eq!(w.source(), &l);
            prop_assert_eq!(w.target(), &lp);
        }
    }

    #[test]
    fn transport_preserves_order_and_rho(q in 2u64..6, u in 1i64..4) {
        let c = ctx(1, &[3]);
        let source = int(q as i64 * u);
        let target = &source + int(2 * u);
        let w = bs_witness(&source, &target, &c).unwrap();
        let f = PlCircleMap::rotation(source.clone(), int(u));
        let g = transport(&f, &w).unwrap();
        prop_assert_eq!(order_of(&g, 10), Some(q));
        prop_assert_eq!(exact_rational_rho(&g, 64), exact_rational_rho(&f, 64));
        prop_assert!(g.membership(&c.with_circumference(target).unwrap()).unwrap());
    }
}

fn mod_diff_is_zero(a: &Rational, b: &Rational) -> bool {
    (a - b).is_integer()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    // orbits of elements of T_{1,2} are eventually periodic
    #[test]
    fn dyadic_words_have_rational_rho(f in arb_word(2, 8)) {
        let rational = matches!(exact_rational_rho(&f, 64), Some(RotationNumber::Rational { .. }));
        prop_assert!(rational);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn triadic_words_have_rational_rho(f in arb_word(3, 6)) {
        let rational = matches!(exact_rational_rho(&f, 64), Some(RotationNumber::Rational { .. }));
        prop_assert!(rational);
    }
}

// An element of T_{1,3} with rotation number 1/2. Its 2-cycle lies outside Z[1/3],
// so no element of order 2 is implied.
#[test]
fn triadic_element_with_even_denominator() {
    let c = ctx(1, &[3]);
    let b = bump_alpha(&c, 3, &int(0), &rat(4, 9), &rat(1, 9), &rat(4, 27)).unwrap();
    let f = b.compose(&PlCircleMap::rotation(int(1), rat(4, 9))).unwrap();
    assert!(f.membership(&c).unwrap());
    assert_eq!(f.apply(&rat(7, 18)), rat(5, 6));
    assert_eq!(f.apply(&rat(5, 6)), rat(7, 18));
    assert_eq!(
        exact_rational_rho(&f, 64).unwrap().as_rational(),
        Some(rat(1, 2))
    );
    assert_eq!(order_of(&f, 12), None);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    // the factored orbit iteration agrees with plain evaluation
    #[test]
    fn rho_bounds_match_plain_iteration(f in arb_word(3, 5), n in 1u64..150) {
        let mut x = Rational::zero();
        for _ in 0..n {
            x = f.evaluate(&x);
        }
        let center = x / (f.r() * int(n as i64));
        let center = &center - center.floor();
        let b = rho_bounds(&f, n);
        prop_assert_eq!(b.lo() + b.hi(), center * int(2));
    }

    #[test]
    fn break_orbits_follow_apply(f in arb_word(2, 6)) {
        let p = orbit_partition(&f, 64);
        let mut seen = Vec::new();
        for c in &p.classes {
            for w in c.iterates.windows(2) {
                prop_assert_eq!(f.apply(&w[0]), w[1].clone());
            }
            for b in &c.breaks {
                prop_assert!(c.iterates.contains(b));
                seen.push(b.clone());
            }
        }
        seen.sort();
        let mut all: Vec<Rational> = f.jumps().into_iter().map(|j| j.at).collect();
        all.sort();
        prop_assert_eq!(seen, all);
    }
}
