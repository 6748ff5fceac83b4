//! Suite runners, random words and staircase export.

use std::collections::{BTreeMap, HashMap};
use std::ops::RangeInclusive;
use std::time::Instant;

use num_integer::Integer;
use num_traits::One;
use plcircle_core::arith::{find_pi, int, GroupContext};
use plcircle_core::conjugacy::{has_d_property, pi_invariant, to_boshernitzan, DEFAULT_MAX_ITER};
use plcircle_core::constructions::{
    boshernitzan, bump_alpha, finite_order_element, finite_order_exists, free_abelian_witness, qindependence_check,
    realize_log_ratio, stein_family, ConstructionError, DEFAULT_EXPONENT_BOUND,
};
use plcircle_core::rotnum::{
    contains_mod1, exact_rational_rho, periodic_point, rho_bounds, LogRatio, DEFAULT_MAX_DEPTH,
};
use plcircle_core::{DVerdict, Interval, PlCircleMap, PlError, Rational, RotationNumber};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::format::MapDoc;

pub const DEFAULT_SEED: u64 = 0x5eed_2008;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Skip,
}

/// Exact verification, or sampling evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseKind {
    Proof,
    Evidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub params: BTreeMap<String, String>,
    pub kind: CaseKind,
    pub expected: String,
    pub observed: String,
    pub verdict: Verdict,
    pub detail: String,
}

impl Case {
    fn new(params: &[(&str, String)], kind: CaseKind) -> Self {
        Case {
            params: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            kind,
            expected: String::new(),
            observed: String::new(),
            verdict: Verdict::Pass,
            detail: String::new(),
        }
    }

    fn expect(mut self, expected: impl ToString, observed: impl ToString) -> Self {
        self.expected = expected.to_string();
        self.observed = observed.to_string();
        if self.expected != self.observed {
            self.verdict = Verdict::Fail;
        }
        self
    }

    fn fail(mut self, detail: impl ToString) -> Self {
        self.verdict = Verdict::Fail;
        self.detail = detail.to_string();
        self
    }

    fn skip(mut self, reason: impl ToString) -> Self {
        self.verdict = Verdict::Skip;
        self.detail = reason.to_string();
        self
    }

    fn note(mut self, detail: impl ToString) -> Self {
        if self.detail.is_empty() {
            self.detail = detail.to_string();
        }
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub skip: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub runtime_ms: u64,
    pub cases: Vec<Case>,
    pub summary: Summary,
}

impl SuiteReport {
    fn assemble(suite: &str, seed: u64, started: Instant, cases: Vec<Case>) -> Self {
        let mut summary = Summary::default();
        for c in &cases {
            match c.verdict {
                Verdict::Pass => summary.pass += 1,
                Verdict::Fail => summary.fail += 1,
                Verdict::Skip => summary.skip += 1,
            }
        }
        SuiteReport {
            suite: suite.to_string(),
            seed,
            runtime_ms: started.elapsed().as_millis() as u64,
            cases,
            summary,
        }
    }

    pub fn passed(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &Case> {
        self.cases.iter().filter(|c| c.verdict == Verdict::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// JSON with the runtime zeroed, for reproducibility checks.
    pub fn canonical_json(&self) -> String {
        SuiteReport { runtime_ms: 0, ..self.clone() }.to_json()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("a word needs at least one generator")]
    NoGenerators,
    #[error("generators live on circles of different circumference")]
    CircumferenceMismatch,
    #[error("generator {0} is outside the group")]
    NotInGroup(usize),
    #[error("a staircase needs at least two samples")]
    TooFewSamples,
    #[error(transparent)]
    Pl(#[from] PlError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
}

#[derive(Debug, Clone)]
pub struct WordSpec {
    pub generators: Vec<PlCircleMap>,
    pub max_length: usize,
    pub seed: u64,
}

impl WordSpec {
    /// Checks that the generators share a circumference and lie in `ctx`.
    pub fn validate(&self, ctx: &GroupContext) -> Result<(), HarnessError> {
        let first = self.generators.first().ok_or(HarnessError::NoGenerators)?;
        for (i, g) in self.generators.iter().enumerate() {
            if g.r() != first.r() {
                return Err(HarnessError::CircumferenceMismatch);
            }
            if !g.membership(ctx)? {
                return Err(HarnessError::NotInGroup(i));
            }
        }
        Ok(())
    }
}

/// Stream of random words in a fixed generating set and its inverses.
pub struct WordSampler {
    letters: Vec<PlCircleMap>,
    max_length: usize,
    rng: SplitMix64,
}

impl WordSampler {
    pub fn new(spec: &WordSpec) -> Result<Self, HarnessError> {
        let first = spec.generators.first().ok_or(HarnessError::NoGenerators)?;
        if spec.generators.iter().any(|g| g.r() != first.r()) {
            return Err(HarnessError::CircumferenceMismatch);
        }
        let letters = spec.generators.iter().flat_map(|g| [g.clone(), g.invert()]).collect();
        Ok(WordSampler { letters, max_length: spec.max_length, rng: SplitMix64::seed_from_u64(spec.seed) })
    }

    pub fn next_word(&mut self) -> PlCircleMap {
        let len = (self.rng.next_u64() % (self.max_length as u64 + 1)) as usize;
        let mut w = PlCircleMap::identity(self.letters[0].r().clone());
        for _ in 0..len {
            let i = (self.rng.next_u64() % self.letters.len() as u64) as usize;
            w = w.compose(&self.letters[i]).expect("letters share a circumference");
        }
        w
    }
}

pub fn random_word(spec: &WordSpec) -> Result<PlCircleMap, HarnessError> {
    Ok(WordSampler::new(spec)?.next_word())
}

/// Rotations by `r/m`, `r/m^2` and two bumps with slope `k`, the least
/// basis element. Bump shifts are multiples of `k - 1` so the breaks stay
/// in the ring.
pub fn standard_generators(ctx: &GroupContext) -> Result<Vec<PlCircleMap>, HarnessError> {
    let r = ctx.r().clone();
    let m = int(ctx.m() as i64);
    let k = *ctx.basis().iter().min().expect("nonempty basis");
    let km1 = int(k as i64 - 1);
    let bump1 = bump_alpha(ctx, k, &int(0), &r, &(&r / int(2)), &(&km1 * &r / (&m * &m)))?;
    let bump2 = bump_alpha(
        ctx,
        k,
        &(&r / &m),
        &(int(2) * &r / &m),
        &(int(3) * &r / (int(2) * &m)),
        &(&km1 * &r / (&m * &m * &m)),
    )?;
    Ok(vec![
        PlCircleMap::rotation(r.clone(), &r / &m),
        PlCircleMap::rotation(r.clone(), &r / (&m * &m)),
        bump1,
        bump2,
    ])
}

fn mix(seed: u64, salt: u64) -> u64 {
    SplitMix64::seed_from_u64(seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15)).next_u64()
}

fn map_json(f: &PlCircleMap) -> String {
    serde_json::to_string(&MapDoc::from_map(f)).expect("map documents serialize")
}

/// Whether `a` and `b + k` overlap for some integer `k`.
pub fn overlaps_mod1(a: &Interval, b: &Interval) -> bool {
    let shift = (a.lo() - b.lo()).floor();
    (-1..=1).any(|d| a.overlaps(&b.shift(&(&shift + int(d)))))
}

/// A point `x` with `F^q(x) = x + p r`, confirmed by iterating the lift.
pub fn periodic_orbit(f: &PlCircleMap, p: i64, q: u64) -> Option<Rational> {
    let x = periodic_point(f, p, q)?;
    let mut y = x.clone();
    for _ in 0..q {
        y = f.evaluate(&y);
    }
    (y == &x + f.r() * int(p)).then_some(x)
}

/// Exact-arithmetic checks that `f` has order `q` and rotation number `p/q`.
pub fn verify_finite_order(f: &PlCircleMap, ctx: &GroupContext, p: i64, q: u64) -> Result<(), &'static str> {
    if !f.membership(ctx).unwrap_or(false) {
        return Err("membership");
    }
    let mut g = f.clone();
    for _ in 1..q {
        if g.is_identity() {
            return Err("order below q");
        }
        g = g.compose(f).map_err(|_| "composition")?;
    }
    if !g.is_identity() || !f.power(q as i64).is_identity() {
        return Err("f^q is not the identity");
    }
    if exact_rational_rho(f, DEFAULT_MAX_DEPTH) != Some(RotationNumber::rational(p, q)) {
        return Err("rotation number");
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct FiniteOrderConfig {
    pub m: RangeInclusive<u64>,
    pub r: RangeInclusive<u64>,
    pub q: RangeInclusive<u64>,
    pub seed: u64,
    pub samples: usize,
    pub max_length: usize,
}

impl Default for FiniteOrderConfig {
    fn default() -> Self {
        FiniteOrderConfig { m: 2..=6, r: 1..=6, q: 1..=12, seed: DEFAULT_SEED, samples: 24, max_length: 8 }
    }
}

/// Exact rotation numbers of sampled words, or the map when unresolved.
type Sample = (PlCircleMap, Option<RotationNumber>);

fn sample_group(m: u64, r: u64, cfg: &FiniteOrderConfig) -> Result<Vec<Sample>, HarnessError> {
    let ctx = GroupContext::new(int(r as i64), vec![m]).expect("valid context");
    let spec = WordSpec { generators: standard_generators(&ctx)?, max_length: cfg.max_length, seed: mix(cfg.seed, m * 1000 + r) };
    let mut sampler = WordSampler::new(&spec)?;
    let words: Vec<PlCircleMap> = (0..cfg.samples).map(|_| sampler.next_word()).collect();
    Ok(words
        .into_par_iter()
        .map(|w| {
            let rho = exact_rational_rho(&w, DEFAULT_MAX_DEPTH);
            (w, rho)
        })
        .collect())
}

fn finite_order_case(m: u64, r: u64, q: u64) -> Case {
    let params = [("m", m.to_string()), ("r", r.to_string()), ("q", q.to_string())];
    let case = Case::new(&params, CaseKind::Proof);
    let ctx = GroupContext::new(int(r as i64), vec![m]).expect("valid context");
    let expected = (r as i64).is_multiple_of(&((m - 1).gcd(&q) as i64));
    let exists = match finite_order_exists(&ctx, q) {
        Ok(e) => e,
        Err(e) => return case.fail(e),
    };
    let case = case.expect(format!("exists={expected}"), format!("exists={exists}"));
    match finite_order_element(&ctx, q, 1) {
        Ok(Some(f)) if exists => match verify_finite_order(&f, &ctx, 1, q) {
            Ok(()) => case.note(format!("order {q} element with {} breaks", f.breaks().len())),
            Err(what) => case.fail(format!("verification failed: {what}")),
        },
        Ok(None) if !exists => case.note("not realizable"),
        Ok(_) => case.fail("construction disagrees with the criterion"),
        Err(e) => case.fail(e),
    }
}

fn rotation_evidence_case(m: u64, r: u64, q: u64, samples: &[Sample]) -> Case {
    let params = [("m", m.to_string()), ("r", r.to_string()), ("q", q.to_string())];
    let case = Case::new(&params, CaseKind::Evidence);
    let unresolved = samples.iter().filter(|(_, rho)| rho.is_none()).count();
    let hit = samples.iter().find(|(_, rho)| matches!(rho, Some(RotationNumber::Rational { q: d, .. }) if *d == q));
    let case = case.expect(
        format!("no sampled rho with denominator {q}"),
        match hit {
            Some((_, Some(rho))) => format!("sampled rho {rho}"),
            _ => format!("no sampled rho with denominator {q}"),
        },
    );
    match hit {
        Some((w, Some(RotationNumber::Rational { p, .. }))) => {
            let orbit = match periodic_orbit(w, *p as i64, q) {
                Some(x) => format!("periodic point {x} checked by direct iteration"),
                None => "no periodic point confirmed".to_string(),
            };
            case.fail(format!("counterexample {}; {orbit}", map_json(w)))
        }
        Some(_) => unreachable!(),
        None => case.note(format!("{} words, {unresolved} unresolved at depth {DEFAULT_MAX_DEPTH}", samples.len())),
    }
}

/// Finite-order criterion grid, with sampling evidence for the
/// rotation-number direction where no element of order `q` exists.
pub fn run_finite_order_suite(cfg: &FiniteOrderConfig) -> Result<SuiteReport, HarnessError> {
    let started = Instant::now();
    let mut grid = Vec::new();
    for m in cfg.m.clone() {
        for r in cfg.r.clone() {
            for q in cfg.q.clone() {
                grid.push((m, r, q));
            }
        }
    }
    let mut groups: Vec<(u64, u64)> = grid
        .iter()
        .filter(|&&(m, r, q)| cfg.samples > 0 && m >= 2 && !(r as i64).is_multiple_of(&((m - 1).gcd(&q) as i64)))
        .map(|&(m, r, _)| (m, r))
        .collect();
    groups.dedup();
    let sampled: HashMap<(u64, u64), Vec<Sample>> = groups
        .par_iter()
        .map(|&(m, r)| Ok(((m, r), sample_group(m, r, cfg)?)))
        .collect::<Result<_, HarnessError>>()?;
    let cases: Vec<Vec<Case>> = grid
        .par_iter()
        .map(|&(m, r, q)| {
            if m < 2 {
                return vec![Case::new(&[("m", m.to_string())], CaseKind::Proof).skip("m must be at least 2")];
            }
            let mut out = vec![finite_order_case(m, r, q)];
            if let Some(samples) = sampled.get(&(m, r)) {
                if !(r as i64).is_multiple_of(&((m - 1).gcd(&q) as i64)) {
                    out.push(rotation_evidence_case(m, r, q, samples));
                }
            }
            out
        })
        .collect();
    Ok(SuiteReport::assemble("thm1", cfg.seed, started, cases.into_iter().flatten().collect()))
}

#[derive(Debug, Clone)]
pub struct CommutingConfig {
    pub bases: Vec<Vec<u64>>,
    pub k: RangeInclusive<u64>,
    pub seed: u64,
}

impl Default for CommutingConfig {
    fn default() -> Self {
        CommutingConfig { bases: vec![vec![2, 3], vec![3, 5], vec![2, 3, 5]], k: 1..=2, seed: DEFAULT_SEED }
    }
}

fn basis_label(basis: &[u64]) -> String {
    basis.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

fn commute_exactly(fs: &[PlCircleMap]) -> bool {
    fs.iter().enumerate().all(|(i, f)| {
        fs[i + 1..].iter().all(|g| matches!((f.compose(g), g.compose(f)), (Ok(a), Ok(b)) if a == b))
    })
}

fn family_case(ctx: &GroupContext, k: u64) -> Case {
    let params = [("basis", basis_label(ctx.basis())), ("k", k.to_string()), ("check", "family".into())];
    let case = Case::new(&params, CaseKind::Proof);
    let pi = Rational::from_integer(find_pi(ctx).1);
    let family = match stein_family(ctx, k) {
        Ok(f) => f,
        Err(e) => return case.fail(e),
    };
    let r = family[0].r().clone();
    let on_r = ctx.with_circumference(r.clone()).expect("positive circumference");
    let jumps: Vec<Rational> = family
        .iter()
        .filter(|f| !f.is_identity())
        .map(|f| f.jump_at(&Rational::from_integer(0.into())))
        .collect();
    let observed = match jumps.iter().find(|j| **j != pi) {
        Some(j) => format!("jump at 0 = {j}"),
        None => format!("jumps at 0 = {pi}"),
    };
    let case = case.expect(format!("jumps at 0 = {pi}"), observed);
    if !family.iter().all(|f| f.membership(&on_r).unwrap_or(false)) {
        return case.fail("membership");
    }
    if !commute_exactly(&family) {
        return case.fail("members do not commute");
    }
    case.note(format!("{} members on S_{r}", family.len()))
}

fn certificate_case(ctx: &GroupContext, k: u64) -> Case {
    let params = [("basis", basis_label(ctx.basis())), ("k", k.to_string()), ("check", "certificate".into())];
    let case = Case::new(&params, CaseKind::Proof);
    let p = ctx.rank();
    let cert = match free_abelian_witness(ctx, k) {
        Ok(c) => c,
        Err(e) => return case.fail(e),
    };
    let case = case.expect(format!("rank {}", p - 1), format!("rank {}", cert.rank));
    if cert.pi != find_pi(ctx).1 {
        return case.fail("Π differs from find_pi");
    }
    if !commute_exactly(&cert.members) {
        return case.fail("members do not commute");
    }
    let pi = Rational::from_integer(cert.pi.clone());
    for (f, rho) in cert.members.iter().zip(&cert.rhos) {
        let slope = f.slope_right(&Rational::from_integer(0.into())).clone();
        match LogRatio::reduce(&slope, &pi) {
            Some(RotationNumber::LogRatio(l)) if l.same_value(rho, 64) == Some(true) => {}
            _ => return case.fail("rotation number does not match the slope at 0"),
        }
        if pi_invariant(f, has_d_property(f, DEFAULT_MAX_ITER).partition()).ok() != Some(pi.clone()) {
            return case.fail("π invariant");
        }
    }
    match qindependence_check(&cert.rhos) {
        Ok(true) => case.note(format!("Π = {}", cert.pi)),
        Ok(false) => case.fail("rotation numbers are dependent"),
        Err(e) => case.fail(e),
    }
}

fn obstruction_case(ctx: &GroupContext) -> Case {
    let params = [("basis", basis_label(ctx.basis())), ("check", "rank-obstruction".into())];
    let case = Case::new(&params, CaseKind::Proof);
    let pi = Rational::from_integer(find_pi(ctx).1);
    let rhos: Vec<LogRatio> = ctx
        .basis()
        .iter()
        .filter_map(|&n| match LogRatio::reduce(&int(n as i64), &pi) {
            Some(RotationNumber::LogRatio(l)) => Some(l),
            _ => None,
        })
        .collect();
    if rhos.len() != ctx.rank() {
        return case.fail("some generator has a rational rotation number");
    }
    match qindependence_check(&rhos) {
        Ok(independent) => case.expect("independent=false", format!("independent={independent}")),
        Err(e) => case.fail(e),
    }
}

fn realize_case(ctx: &GroupContext) -> Case {
    let params = [("basis", basis_label(ctx.basis())), ("check", "realize".into())];
    let case = Case::new(&params, CaseKind::Proof);
    let alpha = int(*ctx.basis().iter().min().expect("nonempty basis") as i64);
    let beta = Rational::from_integer(find_pi(ctx).1);
    let f = match realize_log_ratio(ctx, &alpha, &beta, DEFAULT_EXPONENT_BOUND) {
        Ok(f) => f,
        Err(e) => return case.fail(e),
    };
    let Some(RotationNumber::LogRatio(target)) = LogRatio::reduce(&alpha, &beta) else {
        return case.fail("target is rational");
    };
    let on_r = ctx.with_circumference(f.r().clone()).expect("positive circumference");
    if !f.membership(&on_r).unwrap_or(false) {
        return case.fail("membership");
    }
    if exact_rational_rho(&f, 24).is_some() {
        return case.fail("exact search found a rational rotation number");
    }
    let bounds = rho_bounds(&f, 10_000);
    let case = case.expect(format!("contains {target}"), if overlaps_mod1(&bounds, &target.enclose(64)) {
        format!("contains {target}")
    } else {
        format!("bounds {bounds}")
    });
    case.note(format!("realized on S_{}", f.r()))
}

/// Commuting families, certificates, the rank obstruction and log-ratio
/// realization.
pub fn run_commuting_suite(cfg: &CommutingConfig) -> Result<SuiteReport, HarnessError> {
    let started = Instant::now();
    let mut jobs: Vec<(Vec<u64>, Option<u64>, u8)> = Vec::new();
    for basis in &cfg.bases {
        for k in cfg.k.clone() {
            jobs.push((basis.clone(), Some(k), 0));
            jobs.push((basis.clone(), Some(k), 1));
        }
        jobs.push((basis.clone(), None, 2));
        jobs.push((basis.clone(), None, 3));
    }
    let cases = jobs
        .par_iter()
        .map(|(basis, k, which)| {
            let label = [("basis", basis_label(basis))];
            let ctx = match GroupContext::new(Rational::one(), basis.clone()) {
                Ok(c) => c,
                Err(e) => return Case::new(&label, CaseKind::Proof).fail(e),
            };
            match (which, k) {
                (0, Some(k)) => family_case(&ctx, *k),
                (1, Some(k)) => certificate_case(&ctx, *k),
                (2, _) => obstruction_case(&ctx),
                _ => realize_case(&ctx),
            }
        })
        .collect();
    Ok(SuiteReport::assemble("thm2", cfg.seed, started, cases))
}

/// Outcome of the normal-form round trip for one map.
#[derive(Debug, Clone)]
pub struct RoundTrip {
    pub pi: Rational,
    pub breaks: usize,
    pub rho: RotationNumber,
    pub bounds: Interval,
}

/// Normal form, re-verified from primitives, and agreement of the symbolic
/// rotation number with `rho_bounds(f, iters)`.
pub fn normal_form_round_trip(f: &PlCircleMap, iters: u64) -> Result<RoundTrip, String> {
    let nf = to_boshernitzan(f, DEFAULT_MAX_ITER).map_err(|e| e.to_string())?;
    let breaks = nf.conjugate.breaks().len();
    if breaks > 2 {
        return Err(format!("normal form has {breaks} breaks"));
    }
    if f.conjugate_by(&nf.h).map_err(|e| e.to_string())? != nf.conjugate {
        return Err("conjugate does not match H f H^-1".into());
    }
    let partition = match has_d_property(f, DEFAULT_MAX_ITER) {
        DVerdict::Yes(p) => p,
        _ => return Err("(D)-property not confirmed".into()),
    };
    let pi = pi_invariant(f, &partition).map_err(|e| e.to_string())?;
    if pi != nf.pi {
        return Err(format!("π {} differs from the normal form's {}", pi, nf.pi));
    }
    if !pi.is_one() && nf.conjugate.jump_at(&Rational::from_integer(0.into())) != pi {
        return Err("jump at 0 of the normal form differs from π".into());
    }
    let bounds = rho_bounds(f, iters);
    let agrees = match &nf.rho {
        RotationNumber::Rational { p, q } => contains_mod1(&bounds, &Rational::new((*p).into(), (*q).into())),
        RotationNumber::LogRatio(l) => overlaps_mod1(&bounds, &l.enclose(64)),
        RotationNumber::Interval(i) => overlaps_mod1(&bounds, i),
    };
    if !agrees {
        return Err(format!("symbolic {} outside {}", nf.rho, bounds));
    }
    Ok(RoundTrip { pi, breaks, rho: nf.rho, bounds })
}

/// Normal-form round trips; maps without the (D)-property are skipped.
pub fn run_normal_form_suite(inputs: &[PlCircleMap], seed: u64) -> SuiteReport {
    let started = Instant::now();
    let singles: Vec<(Case, Option<Rational>)> = inputs
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let case = Case::new(&[("input", format!("{i:03}"))], CaseKind::Proof);
            match has_d_property(f, DEFAULT_MAX_ITER) {
                DVerdict::No { .. } => (case.skip("DVerdict No"), None),
                DVerdict::Unknown { bound, .. } => (case.skip(format!("DVerdict Unknown at bound {bound}")), None),
                DVerdict::Yes(_) => match normal_form_round_trip(f, 10_000) {
                    Ok(rt) => {
                        let c = case.expect("round trip", "round trip").note(format!(
                            "π = {}, {} breaks, rho {}, bounds width {}",
                            rt.pi,
                            rt.breaks,
                            rt.rho,
                            rt.bounds.width()
                        ));
                        (c, Some(rt.pi))
                    }
                    Err(e) => (case.fail(e), None),
                },
            }
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 0..inputs.len() {
        for j in i + 1..inputs.len() {
            if let (Some(a), Some(b)) = (&singles[i].1, &singles[j].1) {
                if inputs[i].r() == inputs[j].r() && inputs[i].commutes_with(&inputs[j]).unwrap_or(false) {
                    pairs.push((i, j, a.clone(), b.clone()));
                }
            }
        }
    }
    let mut cases: Vec<Case> = singles.into_iter().map(|(c, _)| c).collect();
    cases.extend(pairs.into_iter().map(|(i, j, a, b)| {
        Case::new(&[("pair", format!("{i:03},{j:03}"))], CaseKind::Proof).expect(format!("π = {a}"), format!("π = {b}"))
    }));
    SuiteReport::assemble("lemma2", seed, started, cases)
}

/// Default inputs: commuting families, a rigid rotation and a bump.
pub fn default_normal_form_inputs() -> Result<Vec<PlCircleMap>, HarnessError> {
    let mut out = Vec::new();
    for basis in [vec![2, 3], vec![3, 5], vec![2, 3, 5]] {
        let ctx = GroupContext::new(Rational::one(), basis).expect("valid basis");
        out.extend(stein_family(&ctx, 1)?);
    }
    out.push(PlCircleMap::rotation(Rational::one(), Rational::new(1.into(), 3.into())));
    let dyadic = GroupContext::new(Rational::one(), vec![2]).expect("valid basis");
    let half = Rational::new(1.into(), 2.into());
    out.push(bump_alpha(&dyadic, 2, &int(0), &half, &Rational::new(1.into(), 4.into()), &Rational::new(1.into(), 8.into()))?);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `R_t` on `S_1`.
    Rotation,
    /// Two-break map on `S_1` with slopes `λ1` (fixed) and `t`.
    Boshernitzan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StairRow {
    pub param: f64,
    pub lo: f64,
    pub hi: f64,
    pub exact: String,
}

/// `rho_bounds` over `samples` evenly spaced parameters in `[lo, hi]`.
pub fn export_staircase(
    family: Family,
    lambda1: &Rational,
    lo: &Rational,
    hi: &Rational,
    samples: usize,
    iters: u64,
) -> Result<Vec<StairRow>, HarnessError> {
    if samples < 2 {
        return Err(HarnessError::TooFewSamples);
    }
    let step = (hi - lo) / int(samples as i64 - 1);
    let params: Vec<Rational> = (0..samples).map(|i| lo + &step * int(i as i64)).collect();
    let maps = params
        .iter()
        .map(|t| match family {
            Family::Rotation => Ok(PlCircleMap::rotation(Rational::one(), t - t.floor())),
            Family::Boshernitzan => Ok(boshernitzan(&Rational::one(), lambda1, t)?),
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(params
        .par_iter()
        .zip(maps.par_iter())
        .map(|(t, f)| {
            let b = rho_bounds(f, iters);
            let exact = exact_rational_rho(f, 32).map(|r| r.to_string()).unwrap_or_default();
            StairRow { param: approx(t), lo: approx(b.lo()), hi: approx(b.hi()), exact }
        })
        .collect())
}

fn approx(x: &Rational) -> f64 {
    plcircle_core::constructions::approx(x)
}

pub fn write_staircase_csv<W: std::io::Write>(rows: &[StairRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
