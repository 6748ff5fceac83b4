//! JSON documents for maps, rotation numbers and witnesses.
//!
//! Every rational is written as a `"p/q"` (or integer) string.

use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_traits::Zero;
use plcircle_core::constructions::BsWitness;
use plcircle_core::{PlCircleMap, PlError, Rational, RotationNumber};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("not a rational number: {0:?}")]
    BadRational(String),
    #[error("not a list of positive integers: {0:?}")]
    BadList(String),
    #[error("not a range `a..b`: {0:?}")]
    BadRange(String),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Map(#[from] PlError),
}

/// Parses `"p/q"` or an integer. Floats are rejected.
pub fn parse_rational(s: &str) -> Result<Rational, FormatError> {
    let bad = || FormatError::BadRational(s.to_string());
    let t = s.trim();
    let (n, d) = t.split_once('/').unwrap_or((t, "1"));
    let n: BigInt = n.trim().parse().map_err(|_| bad())?;
    let d: BigInt = d.trim().parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

/// `"2,3,5"` to `[2, 3, 5]`.
pub fn parse_list(s: &str) -> Result<Vec<u64>, FormatError> {
    let bad = || FormatError::BadList(s.to_string());
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<u64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() || v.contains(&0) {
        return Err(bad());
    }
    Ok(v)
}

/// `"2,3;3,5"` to `[[2, 3], [3, 5]]`.
pub fn parse_lists(s: &str) -> Result<Vec<Vec<u64>>, FormatError> {
    s.split(';').map(parse_list).collect()
}

/// `"2..6"` (inclusive) or a single value.
pub fn parse_range(s: &str) -> Result<RangeInclusive<u64>, FormatError> {
    let bad = || FormatError::BadRange(s.to_string());
    let (a, b) = s.split_once("..").unwrap_or((s, s));
    let b = b.strip_prefix('=').unwrap_or(b);
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceDoc {
    pub left: String,
    pub slope: String,
}

/// Serialized form of a [`PlCircleMap`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDoc {
    pub circumference: String,
    pub f0: String,
    pub pieces: Vec<PieceDoc>,
}

impl MapDoc {
    pub fn from_map(f: &PlCircleMap) -> Self {
        MapDoc {
            circumference: f.r().to_string(),
            f0: f.f0().to_string(),
            pieces: f
                .pieces()
                .iter()
                .map(|p| PieceDoc { left: p.left.to_string(), slope: p.slope.to_string() })
                .collect(),
        }
    }

    pub fn to_map(&self) -> Result<PlCircleMap, FormatError> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Ok((parse_rational(&p.left)?, parse_rational(&p.slope)?)))
            .collect::<Result<Vec<_>, FormatError>>()?;
        Ok(PlCircleMap::from_pieces(parse_rational(&self.circumference)?, pieces, parse_rational(&self.f0)?)?)
    }
}

pub fn map_to_value(f: &PlCircleMap) -> Value {
    serde_json::to_value(MapDoc::from_map(f)).expect("map documents serialize")
}

pub fn map_from_str(s: &str) -> Result<PlCircleMap, FormatError> {
    serde_json::from_str::<MapDoc>(s)?.to_map()
}

/// A list of maps, or a single map.
pub fn maps_from_str(s: &str) -> Result<Vec<PlCircleMap>, FormatError> {
    let v: Value = serde_json::from_str(s)?;
    let docs: Vec<MapDoc> = if v.is_array() { serde_json::from_value(v)? } else { vec![serde_json::from_value(v)?] };
    docs.iter().map(MapDoc::to_map).collect()
}

pub fn rho_to_value(rho: &RotationNumber) -> Value {
    match rho {
        RotationNumber::Rational { p, q } => json!({"kind": "rational", "p": p.to_string(), "q": q.to_string()}),
        RotationNumber::LogRatio(l) => json!({
            "kind": "logratio",
            "alpha": l.alpha().to_rational().to_string(),
            "beta": l.beta().to_rational().to_string(),
            "approx": l.to_f64(),
        }),
        RotationNumber::Interval(i) => json!({
            "kind": "interval",
            "lo": i.lo().to_string(),
            "hi": i.hi().to_string(),
            "approx": rho.to_f64(),
        }),
    }
}

pub fn absent(reason: &str) -> Value {
    json!({"kind": "absent", "reason": reason})
}

pub fn witness_to_value(w: &BsWitness) -> Value {
    let nodes: Vec<[String; 2]> = w.nodes().iter().map(|(x, y)| [x.to_string(), y.to_string()]).collect();
    json!({"source": w.source().to_string(), "target": w.target().to_string(), "nodes": nodes})
}
