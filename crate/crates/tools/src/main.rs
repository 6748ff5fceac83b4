use std::fmt::Debug;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use plcircle_core::arith::{check_independent, GroupContext};
use plcircle_core::conjugacy::{has_d_property, pi_invariant, to_boshernitzan, verify_linearization, ConjError};
use plcircle_core::constructions::{
    boshernitzan, bs_witness, bump_alpha, finite_order_element, realize_log_ratio, stein_family, transport,
    DEFAULT_EXPONENT_BOUND,
};
use plcircle_core::rotnum::{exact_rational_rho, rho_bounds, DEFAULT_MAX_DEPTH};
use plcircle_core::{DVerdict, PlCircleMap, Rational, RotationNumber};
use plcircle_tools::format::{
    absent, map_from_str, map_to_value, maps_from_str, parse_list, parse_lists, parse_range, parse_rational,
    rho_to_value, witness_to_value,
};
use plcircle_tools::harness::{
    default_normal_form_inputs, export_staircase, run_normal_form_suite, run_finite_order_suite, run_commuting_suite, write_staircase_csv,
    Family, FiniteOrderConfig, CommutingConfig, DEFAULT_SEED,
};
use serde::Deserialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "plcircle", version, about = "Exact computations with piecewise linear circle maps")]
struct Cli {
    /// JSON file with default values for --r, --basis, --seed, --depth, --iters, --bits
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the output document here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Boshernitzan,
    Rotation,
    Bump,
    FiniteOrder,
    SteinFamily,
    LogRatio,
}

#[derive(Clone, Copy, ValueEnum)]
enum RhoMode {
    Exact,
    Interval,
    Symbolic,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Rotation,
    Boshernitzan,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a map from one of the standard constructions
    Construct {
        kind: Kind,
        #[arg(long)]
        r: Option<String>,
        #[arg(long)]
        basis: Option<String>,
        #[arg(long)]
        l1: Option<String>,
        #[arg(long)]
        l2: Option<String>,
        /// Rotation amount
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        k: Option<u64>,
        #[arg(long)]
        a0: Option<String>,
        #[arg(long)]
        b0: Option<String>,
        #[arg(long)]
        x0: Option<String>,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        m: Option<u64>,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        p: i64,
        #[arg(long, default_value_t = DEFAULT_EXPONENT_BOUND)]
        bound: i64,
    },
    /// f ∘ g
    Compose { f: PathBuf, g: PathBuf },
    Invert { f: PathBuf },
    Power {
        f: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        n: i64,
    },
    /// Lift value and circle value at a point
    Eval {
        f: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        x: String,
    },
    Rho {
        f: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: RhoMode,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        iters: Option<u64>,
    },
    /// Membership in the group with the given basis
    Member {
        f: PathBuf,
        #[arg(long)]
        basis: Option<String>,
    },
    /// Jump products along break orbits
    Dcheck {
        f: PathBuf,
        #[arg(long, default_value_t = 256)]
        max_iter: u64,
    },
    /// Certified check that the exponential conjugacy linearizes the normal form
    Linearize {
        f: PathBuf,
        #[arg(long, default_value_t = 16)]
        samples: u64,
        #[arg(long)]
        bits: Option<u32>,
    },
    /// PL map [0, l] -> [0, l'] with allowed slopes and breaks
    BsWitness {
        #[arg(long)]
        l: String,
        #[arg(long)]
        lp: String,
        #[arg(long)]
        basis: Option<String>,
    },
    /// Move a map to the circle of circumference --to
    Transport {
        f: PathBuf,
        #[arg(long)]
        to: String,
        #[arg(long)]
        basis: Option<String>,
    },
    /// Run a verification suite: thm1, thm2 or lemma2
    Suite {
        name: String,
        #[arg(long)]
        m: Option<String>,
        #[arg(long)]
        r: Option<String>,
        #[arg(long)]
        q: Option<String>,
        #[arg(long)]
        bases: Option<String>,
        #[arg(long)]
        k: Option<String>,
        /// JSON map or list of maps (lemma2)
        #[arg(long)]
        inputs: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Random words per group (thm1)
        #[arg(long, default_value_t = 24)]
        samples: usize,
    },
    /// CSV of rotation-number bounds across a one-parameter family
    ExportStaircase {
        #[arg(long, value_enum, default_value = "rotation")]
        family: FamilyArg,
        #[arg(long, default_value = "2")]
        l1: String,
        #[arg(long, default_value = "0")]
        lo: String,
        #[arg(long, default_value = "1")]
        hi: String,
        #[arg(long, default_value_t = 11)]
        samples: usize,
        #[arg(long)]
        iters: Option<u64>,
    },
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    r: Option<String>,
    basis: Option<String>,
    seed: Option<u64>,
    depth: Option<u32>,
    iters: Option<u64>,
    bits: Option<u32>,
}

enum Failure {
    SuiteFailed,
    Validation(String),
    Construction(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::SuiteFailed => 1,
            Failure::Validation(_) => 2,
            Failure::Construction(_) => 3,
        }
    }
}

fn validation(e: impl std::fmt::Display) -> Failure {
    Failure::Validation(e.to_string())
}

/// `Name: message` for an error enum variant.
fn construction<E: Debug + std::fmt::Display>(e: E) -> Failure {
    let debug = format!("{e:?}");
    let name = debug.split(['(', ' ', '{']).next().unwrap_or("Error");
    Failure::Construction(format!("{name}: {e}"))
}

enum Output {
    Json(Value),
    Text(String),
}

struct Ctx {
    config: Config,
}

impl Ctx {
    fn basis(&self, flag: &Option<String>) -> Result<Vec<u64>, Failure> {
        let s = flag.as_ref().or(self.config.basis.as_ref()).ok_or_else(|| validation("--basis is required"))?;
        let basis = parse_list(s).map_err(validation)?;
        if !check_independent(&basis) {
            return Err(validation(format!("basis {s} is not multiplicatively independent")));
        }
        Ok(basis)
    }

    fn r(&self, flag: &Option<String>) -> Result<Rational, Failure> {
        match flag.as_ref().or(self.config.r.as_ref()) {
            Some(s) => parse_rational(s).map_err(validation),
            None => Ok(Rational::from_integer(1.into())),
        }
    }

    fn group(&self, r: Rational, basis: &Option<String>) -> Result<GroupContext, Failure> {
        GroupContext::new(r, self.basis(basis)?).map_err(validation)
    }
}

fn required(v: &Option<String>, name: &str) -> Result<Rational, Failure> {
    parse_rational(v.as_ref().ok_or_else(|| validation(format!("--{name} is required")))?).map_err(validation)
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(validation)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| validation(format!("{}: {e}", path.display())))
    }
}

fn read_map(path: &Path) -> Result<PlCircleMap, Failure> {
    map_from_str(&read_input(path)?).map_err(validation)
}

fn rho_or_absent(rho: Option<RotationNumber>, reason: &str) -> Value {
    rho.as_ref().map(rho_to_value).unwrap_or_else(|| absent(reason))
}

fn construct(ctx: &Ctx, cmd: &Cmd) -> Result<Value, Failure> {
    let Cmd::Construct { kind, r, basis, l1, l2, a, k, a0, b0, x0, alpha, beta, m, q, p, bound } = cmd else {
        unreachable!()
    };
    let map = match kind {
        Kind::Boshernitzan => {
            boshernitzan(&ctx.r(r)?, &required(l1, "l1")?, &required(l2, "l2")?).map_err(construction)?
        }
        Kind::Rotation => {
            let r = ctx.r(r)?;
            let a = required(a, "a")?;
            let a = &a - (&a / &r).floor() * &r;
            PlCircleMap::rotation(r, a)
        }
        Kind::Bump => {
            let g = ctx.group(ctx.r(r)?, basis)?;
            let k = k.unwrap_or_else(|| *g.basis().iter().min().expect("nonempty basis"));
            let (a0, b0, x0, alpha) =
                (required(a0, "a0")?, required(b0, "b0")?, required(x0, "x0")?, required(alpha, "alpha")?);
            bump_alpha(&g, k, &a0, &b0, &x0, &alpha).map_err(construction)?
        }
        Kind::FiniteOrder => {
            let m = m.ok_or_else(|| validation("--m is required"))?;
            let q = q.ok_or_else(|| validation("--q is required"))?;
            if m < 2 || q == 0 {
                return Err(validation("need m >= 2 and q >= 1"));
            }
            let g = GroupContext::new(ctx.r(r)?, vec![m]).map_err(validation)?;
            finite_order_element(&g, q, *p)
                .map_err(construction)?
                .ok_or_else(|| Failure::Construction(format!("NotRealizable: no element of order {q} in T_{{{},{m}}}", g.r())))?
        }
        Kind::SteinFamily => {
            let g = ctx.group(Rational::from_integer(1.into()), basis)?;
            let family = stein_family(&g, k.unwrap_or(1)).map_err(construction)?;
            return Ok(Value::Array(family.iter().map(map_to_value).collect()));
        }
        Kind::LogRatio => {
            let g = ctx.group(Rational::from_integer(1.into()), basis)?;
            realize_log_ratio(&g, &required(alpha, "alpha")?, &required(beta, "beta")?, *bound).map_err(construction)?
        }
    };
    Ok(map_to_value(&map))
}

fn run(cli: &Cli, ctx: &Ctx) -> Result<Output, Failure> {
    let cfg = &ctx.config;
    let out = match &cli.cmd {
        cmd @ Cmd::Construct { .. } => construct(ctx, cmd)?,
        Cmd::Compose { f, g } => map_to_value(&read_map(f)?.compose(&read_map(g)?).map_err(validation)?),
        Cmd::Invert { f } => map_to_value(&read_map(f)?.invert()),
        Cmd::Power { f, n } => map_to_value(&read_map(f)?.power(*n)),
        Cmd::Eval { f, x } => {
            let f = read_map(f)?;
            let x = parse_rational(x).map_err(validation)?;
            json!({"x": x.to_string(), "lift": f.evaluate(&x).to_string(), "value": f.apply(&x).to_string()})
        }
        Cmd::Rho { f, mode, depth, iters } => {
            let f = read_map(f)?;
            match mode {
                RhoMode::Exact => {
                    let depth = depth.or(cfg.depth).unwrap_or(DEFAULT_MAX_DEPTH);
                    rho_or_absent(exact_rational_rho(&f, depth), "DepthExhausted")
                }
                RhoMode::Interval => {
                    let n = iters.or(cfg.iters).unwrap_or(100_000);
                    if n == 0 {
                        return Err(validation("--iters must be positive"));
                    }
                    rho_to_value(&RotationNumber::Interval(rho_bounds(&f, n).round(64)))
                }
                RhoMode::Symbolic => match to_boshernitzan(&f, 256) {
                    Ok(nf) => {
                        let mut v = rho_to_value(&nf.rho);
                        v["pi"] = json!(nf.pi.to_string());
                        v
                    }
                    Err(ConjError::DNotSatisfied) => absent("DNotSatisfied"),
                    Err(e) => absent(&format!("{e:?}")),
                },
            }
        }
        Cmd::Member { f, basis } => {
            let f = read_map(f)?;
            let g = ctx.group(f.r().clone(), basis)?;
            json!({"member": f.membership(&g).map_err(validation)?})
        }
        Cmd::Dcheck { f, max_iter } => {
            let f = read_map(f)?;
            match has_d_property(&f, *max_iter) {
                DVerdict::Yes(p) => {
                    let pi = pi_invariant(&f, &p).map_err(validation)?;
                    json!({"verdict": "yes", "pi": pi.to_string(), "classes": p.classes.len()})
                }
                DVerdict::No { partition, witness } => {
                    let c = &partition.classes[witness];
                    json!({"verdict": "no", "anchor": c.anchor.to_string(), "jumpProduct": c.jump_product.to_string()})
                }
                DVerdict::Unknown { bound, .. } => json!({"verdict": "unknown", "bound": bound}),
            }
        }
        Cmd::Linearize { f, samples, bits } => {
            let f = read_map(f)?;
            let bits = bits.or(cfg.bits).unwrap_or(64);
            let first_break_at_zero = f.jumps().first().is_some_and(|j| num_traits::Zero::is_zero(&j.at));
            let (g, normalized) = if f.jumps().len() == 2 && first_break_at_zero {
                (f, false)
            } else {
                (to_boshernitzan(&f, 256).map_err(construction)?.conjugate, true)
            };
            match verify_linearization(&g, *samples, bits) {
                Ok(ok) => json!({"linearizes": ok, "normalized": normalized}),
                Err(e) => json!({"linearizes": false, "normalized": normalized, "reason": format!("{e:?}")}),
            }
        }
        Cmd::BsWitness { l, lp, basis } => {
            let (l, lp) = (parse_rational(l).map_err(validation)?, parse_rational(lp).map_err(validation)?);
            if l <= Rational::from_integer(0.into()) || lp <= Rational::from_integer(0.into()) {
                return Err(validation("lengths must be positive"));
            }
            let g = ctx.group(Rational::from_integer(1.into()), basis)?;
            match bs_witness(&l, &lp, &g) {
                Some(w) => {
                    let mut v = witness_to_value(&w);
                    v["exists"] = json!(true);
                    v
                }
                None => json!({"exists": false}),
            }
        }
        Cmd::Transport { f, to, basis } => {
            let f = read_map(f)?;
            let to = parse_rational(to).map_err(validation)?;
            let g = ctx.group(f.r().clone(), basis)?;
            let w = bs_witness(f.r(), &to, &g)
                .ok_or_else(|| Failure::Construction(format!("NotEquivalent: S_{} and S_{to} are not equivalent", f.r())))?;
            map_to_value(&transport(&f, &w).map_err(construction)?)
        }
        Cmd::Suite { name, m, r, q, bases, k, inputs, seed, samples } => {
            let seed = seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
            let range = |s: &Option<String>, d| s.as_deref().map(parse_range).unwrap_or(Ok(d)).map_err(validation);
            let report = match name.as_str() {
                "thm1" => {
                    let d = FiniteOrderConfig::default();
                    let c = FiniteOrderConfig { m: range(m, d.m)?, r: range(r, d.r)?, q: range(q, d.q)?, seed, samples: *samples, ..d };
                    if *c.m.start() < 2 || *c.q.start() < 1 || *c.r.start() < 1 {
                        return Err(validation("need m >= 2, r >= 1 and q >= 1"));
                    }
                    run_finite_order_suite(&c).map_err(construction)?
                }
                "thm2" => {
                    let d = CommutingConfig::default();
                    let bases = match bases {
                        Some(s) => parse_lists(s).map_err(validation)?,
                        None => d.bases,
                    };
                    if let Some(b) = bases.iter().find(|b| !check_independent(b)) {
                        return Err(validation(format!("basis {b:?} is not multiplicatively independent")));
                    }
                    let k = range(k, d.k)?;
                    if *k.start() == 0 {
                        return Err(validation("k must be positive"));
                    }
                    run_commuting_suite(&CommutingConfig { bases, k, seed }).map_err(construction)?
                }
                "lemma2" => {
                    let maps = match inputs {
                        Some(p) => maps_from_str(&read_input(p)?).map_err(validation)?,
                        None => default_normal_form_inputs().map_err(construction)?,
                    };
                    run_normal_form_suite(&maps, seed)
                }
                other => return Err(validation(format!("unknown suite {other:?}"))),
            };
            for c in report.failures() {
                eprintln!("fail {:?}: {}", c.params, c.detail);
            }
            eprintln!(
                "{}: {} pass, {} fail, {} skip in {} ms",
                report.suite, report.summary.pass, report.summary.fail, report.summary.skip, report.runtime_ms
            );
            let passed = report.passed();
            emit(cli, Output::Text(report.to_json() + "\n"))?;
            return if passed { Ok(Output::Text(String::new())) } else { Err(Failure::SuiteFailed) };
        }
        Cmd::ExportStaircase { family, l1, lo, hi, samples, iters } => {
            let family = match family {
                FamilyArg::Rotation => Family::Rotation,
                FamilyArg::Boshernitzan => Family::Boshernitzan,
            };
            let (l1, lo, hi) = (
                parse_rational(l1).map_err(validation)?,
                parse_rational(lo).map_err(validation)?,
                parse_rational(hi).map_err(validation)?,
            );
            let iters = iters.or(cfg.iters).unwrap_or(10_000);
            let rows = export_staircase(family, &l1, &lo, &hi, *samples, iters).map_err(construction)?;
            let mut buf = Vec::new();
            write_staircase_csv(&rows, &mut buf).map_err(validation)?;
            return Ok(Output::Text(String::from_utf8(buf).expect("CSV is UTF-8")));
        }
    };
    Ok(Output::Json(out))
}

fn emit(cli: &Cli, out: Output) -> Result<(), Failure> {
    let text = match out {
        Output::Json(v) => serde_json::to_string_pretty(&v).expect("values serialize") + "\n",
        Output::Text(t) if t.is_empty() => return Ok(()),
        Output::Text(t) => t,
    };
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|e| validation(format!("{}: {e}", path.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(validation),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let config = match &cli.config {
            Some(p) => serde_json::from_str(&read_input(p)?).map_err(|e| validation(format!("config: {e}")))?,
            None => Config::default(),
        };
        let ctx = Ctx { config };
        if let Some(b) = &ctx.config.basis {
            ctx.basis(&Some(b.clone()))?;
        }
        let out = run(&cli, &ctx)?;
        emit(&cli, out)
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::SuiteFailed => eprintln!("error: suite reported failures"),
                Failure::Validation(m) => eprintln!("error: {m}"),
                Failure::Construction(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
