//! File formats and JSON output records.
//!
//! Subset keys are comma-separated ascending indices, `""` for `∅`.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Map, Value};
use symq_core::decomposition::MultiOrderDecomposition;
use symq_core::flipping::ComparisonReport;
use symq_core::{
    LatticeSupport, QueryParser, SearchResult, SubsetMask, SupportMode, SyntheticGame, TableGame,
    Vocabulary, WalkRelevanceSet,
};

use crate::{Error, Result};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn json_err(path: &Path, source: serde_json::Error) -> Error {
    Error::Json {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Deserialize)]
struct TableFile {
    n: usize,
    values: Map<String, Value>,
}

/// Parses `{"n": .., "values": {"<key>": <float>, ..}}`.
pub fn parse_table(text: &str) -> std::result::Result<TableGame, Error> {
    let file: TableFile = serde_json::from_str(text).map_err(|e| Error::Format(format!("table: {e}")))?;
    let mut entries = Vec::with_capacity(file.values.len());
    for (key, v) in &file.values {
        let s = SubsetMask::parse_key(key, file.n)?;
        let x = v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::Format(format!("table value for `{key}` is not a finite number")))?;
        entries.push((s, x));
    }
    Ok(TableGame::from_entries(file.n, entries)?)
}

pub fn read_table(path: &Path) -> Result<TableGame> {
    parse_table(&read(path)?).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Table JSON for `values` listed over `support` in canonical order.
pub fn table_json(support: &LatticeSupport, raw: &[f64]) -> Value {
    let values: Map<String, Value> = support
        .subsets()
        .iter()
        .zip(raw)
        .map(|(s, &v)| (s.key(), json!(v)))
        .collect();
    json!({ "n": support.n(), "values": values })
}

#[derive(Debug, Deserialize)]
struct WalkLine {
    walk: Vec<usize>,
    relevance: f64,
}

/// One `{"walk": [..], "relevance": ..}` object per line.
pub fn parse_walks(text: &str, n: usize) -> Result<WalkRelevanceSet> {
    let mut set = WalkRelevanceSet::new(n);
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let w: WalkLine = serde_json::from_str(line)
            .map_err(|e| Error::Format(format!("walk line {}: {e}", k + 1)))?;
        set.push(w.walk, w.relevance)?;
    }
    Ok(set)
}

pub fn read_walks(path: &Path, n: usize) -> Result<WalkRelevanceSet> {
    parse_walks(&read(path)?, n)
}

/// One token per line; blank lines are skipped.
pub fn read_vocabulary(path: &Path) -> Result<Vocabulary> {
    let text = read(path)?;
    Ok(Vocabulary::new(
        text.lines().map(str::trim).filter(|l| !l.is_empty()),
    ))
}

/// A JSON array of numbers, or `{"scores": [..]}`.
pub fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let v: Value = serde_json::from_str(&read(path)?).map_err(|e| json_err(path, e))?;
    let arr = match &v {
        Value::Array(a) => a,
        Value::Object(o) => match o.get("scores") {
            Some(Value::Array(a)) => a,
            _ => return Err(Error::Format(format!("{}: expected a `scores` array", path.display()))),
        },
        _ => return Err(Error::Format(format!("{}: expected an array of scores", path.display()))),
    };
    arr.iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| Error::Format(format!("{}: non-numeric score", path.display())))
        })
        .collect()
}

/// `--synthetic` specifications.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SyntheticConfig {
    Multilinear {
        n: usize,
        coefficients: Map<String, Value>,
    },
    Additive {
        weights: Vec<f64>,
    },
    Planted {
        n: usize,
        query: String,
        #[serde(default = "one")]
        signal: f64,
        #[serde(default)]
        noise_scale: f64,
        #[serde(default)]
        noise_seed: u64,
    },
    Random {
        n: usize,
        #[serde(default = "three")]
        max_order: usize,
        seed: Option<u64>,
    },
}

fn one() -> f64 {
    1.0
}

fn three() -> usize {
    3
}

impl SyntheticConfig {
    /// Inline JSON, or `@path` to read it from a file.
    pub fn load(spec: &str) -> Result<Self> {
        let text = match spec.strip_prefix('@') {
            Some(path) => read(Path::new(path))?,
            None => spec.to_string(),
        };
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("synthetic spec: {e}")))
    }

    /// `default_seed` is used by `random` games without their own seed.
    pub fn build(&self, default_seed: u64) -> Result<SyntheticGame> {
        Ok(match self {
            SyntheticConfig::Multilinear { n, coefficients } => {
                let mut coeffs = Vec::with_capacity(coefficients.len());
                for (key, v) in coefficients {
                    let c = v.as_f64().ok_or_else(|| {
                        Error::Format(format!("coefficient `{key}` is not a number"))
                    })?;
                    coeffs.push((SubsetMask::parse_key(key, *n)?, c));
                }
                SyntheticGame::multilinear(*n, coeffs)?
            }
            SyntheticConfig::Additive { weights } => SyntheticGame::additive(weights.clone())?,
            SyntheticConfig::Planted {
                n,
                query,
                signal,
                noise_scale,
                noise_seed,
            } => {
                let q = QueryParser::new().feature_count(*n).parse(query)?;
                SyntheticGame::planted(*n, q, *signal, *noise_seed, *noise_scale)?
            }
            SyntheticConfig::Random { n, max_order, seed } => {
                SyntheticGame::random_multilinear(*n, *max_order, seed.unwrap_or(default_seed))?
            }
        })
    }
}

pub fn support_json(mode: SupportMode) -> Value {
    json!({ "mode": mode.name(), "k": mode.max_order() })
}

pub fn decomposition_json(d: &MultiOrderDecomposition, residual: Option<f64>) -> Value {
    let mu: Map<String, Value> = d.iter().map(|(s, m)| (s.key(), json!(m))).collect();
    json!({
        "n": d.n(),
        "mode": d.support().mode().name(),
        "k": d.support().mode().max_order(),
        "source": d.source().name(),
        "mu": mu,
        "conservation_residual": residual,
    })
}

pub fn relevance_record(query: &str, relevance: f64, weights: &str, mode: SupportMode) -> Value {
    json!({
        "query": query,
        "relevance": relevance,
        "weights": weights,
        "support": support_json(mode),
    })
}

pub fn search_json(result: &SearchResult, vocabulary: Option<&Vocabulary>) -> Value {
    let results: Vec<Value> = result
        .ranked
        .iter()
        .map(|r| json!({ "query": r.query.canonical_string(vocabulary), "score": r.score }))
        .collect();
    json!({ "results": results, "space_size": result.space_size })
}

pub fn flip_json(report: &ComparisonReport, with_curves: bool) -> Value {
    let table: Map<String, Value> = report
        .rows
        .iter()
        .map(|(name, row)| {
            (
                name.clone(),
                json!({
                    "min_aurc": row.min_aurc,
                    "max_aurc": row.max_aurc,
                    "min_augc": row.min_augc,
                    "max_augc": row.max_augc,
                }),
            )
        })
        .collect();
    let mut out = Map::new();
    out.insert("table".into(), Value::Object(table));
    if with_curves {
        let curves: Vec<Value> = report
            .curves
            .iter()
            .map(|c| {
                json!({
                    "method": c.method,
                    "task": c.curve.task.name(),
                    "objective": c.objective.name(),
                    "order": c.curve.order,
                    "values": c.curve.values,
                    "area": c.curve.area,
                })
            })
            .collect();
        out.insert("curves".into(), Value::Array(curves));
    }
    Value::Object(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use symq_core::SetFunction;

    #[test]
    fn table_round_trip() {
        let t = parse_table(r#"{"n": 2, "values": {"": 0.5, "0": 1.5, "1": 0.5, "0,1": 4}}"#).unwrap();
        assert_eq!(t.value(SubsetMask::from_bits(0b11)).unwrap(), 3.5);
        let s = LatticeSupport::enumerate(2, SupportMode::Full).unwrap();
        let raw: Vec<f64> = s.subsets().iter().map(|&x| t.raw(x).unwrap()).collect();
        let text = table_json(&s, &raw).to_string();
        assert_eq!(text, r#"{"n":2,"values":{"":0.5,"0":1.5,"1":0.5,"0,1":4.0}}"#);
        assert_eq!(parse_table(&text).unwrap(), t);
    }

    #[test]
    fn table_errors() {
        assert!(matches!(parse_table("{}"), Err(Error::Format(_))));
        assert!(matches!(
            parse_table(r#"{"n": 2, "values": {"0": 1}}"#),
            Err(Error::Core(symq_core::Error::MissingTableEntry { .. }))
        ));
        assert!(matches!(
            parse_table(r#"{"n": 2, "values": {"": 0, "2": 1}}"#),
            Err(Error::Core(symq_core::Error::IndexOutOfRange { .. }))
        ));
        assert!(parse_table(r#"{"n": 2, "values": {"": "x"}}"#).is_err());
    }

    #[test]
    fn walk_lines() {
        let w = parse_walks(
            "{\"walk\": [0, 0], \"relevance\": 1.0}\n\n{\"walk\": [1, 0], \"relevance\": 0.5}\n",
            2,
        )
        .unwrap();
        assert_eq!(w.len(), 2);
        assert!(parse_walks("{\"walk\": [2], \"relevance\": 1.0}", 2).is_err());
        assert!(parse_walks("{\"walk\": [0]}", 2).is_err());
    }

    #[test]
    fn synthetic_specs() {
        let g = SyntheticConfig::load(r#"{"kind": "multilinear", "n": 3, "coefficients": {"0": 1, "0,1": 2}}"#)
            .unwrap()
            .build(0)
            .unwrap();
        assert_eq!(g.value(SubsetMask::from_bits(0b011)).unwrap(), 3.0);
        let g = SyntheticConfig::load(r#"{"kind": "planted", "n": 4, "query": "0 & !1"}"#)
            .unwrap()
            .build(0)
            .unwrap();
        assert_eq!(g.value(SubsetMask::from_bits(0b001)).unwrap(), 1.0);
        assert!(SyntheticConfig::load(r#"{"kind": "bogus"}"#).is_err());
        let a = SyntheticConfig::load(r#"{"kind": "random", "n": 5}"#).unwrap();
        assert_eq!(a.build(3).unwrap(), SyntheticGame::random_multilinear(5, 3, 3).unwrap());
    }
}
