//! Independent reference implementations used by the integration tests.
//!
//! Everything here works from first principles over plain `u64` bitmasks and
//! does not call the transforms, evaluators or Shapley code under test.
#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symq_core::{Query, SetFunction, SubsetMask, TableGame};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Raw values for every subset of `n` features, indexed by bitmask.
pub fn random_values(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..1u64 << n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn table(n: usize, values: &[f64]) -> TableGame {
    TableGame::from_entries(
        n,
        values.iter().enumerate().map(|(b, &v)| (SubsetMask::from_bits(b as u64), v)),
    )
    .unwrap()
}

/// Normalized values `v(S) − v(∅)` by bitmask.
pub fn normalized(values: &[f64]) -> Vec<f64> {
    values.iter().map(|v| v - values[0]).collect()
}

/// `μ_L = Σ_{S⊆L} (−1)^{|L|−|S|} v(S)`, by direct double loop.
pub fn brute_mobius(v: &[f64]) -> Vec<f64> {
    let size = v.len() as u64;
    (0..size)
        .map(|l| {
            (0..size)
                .filter(|s| s & !l == 0)
                .map(|s| {
                    let sign = if (l.count_ones() - s.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * v[s as usize]
                })
                .sum()
        })
        .collect()
}

/// Truth-table evaluation straight from the query rules.
pub fn truth(q: &Query, l: u64) -> bool {
    match q {
        Query::Atom(s) => s.bits() & l != 0,
        Query::Not(a) => !truth(a, l),
        Query::And(a, b) => truth(a, l) && truth(b, l),
        Query::Or(a, b) => truth(a, l) || truth(b, l),
    }
}

/// `Σ_L η_L μ_L λ_L(q)` over all `2^n` subsets, with `μ` by bitmask.
pub fn brute_relevance(mu: &[f64], q: &Query, eta: impl Fn(u64) -> f64) -> f64 {
    (0..mu.len() as u64)
        .filter(|&l| truth(q, l))
        .map(|l| eta(l) * mu[l as usize])
        .sum()
}

/// Shapley values by averaging marginal contributions over every
/// permutation (Heap's algorithm).
pub fn permutation_shapley(n: usize, v: &[f64]) -> Vec<f64> {
    let mut phi = vec![0.0; n];
    let mut perm: Vec<usize> = (0..n).collect();
    let mut count = 0u64;
    let mut visit = |p: &[usize]| {
        let mut s = 0u64;
        for &i in p {
            let t = s | (1 << i);
            phi[i] += v[t as usize] - v[s as usize];
            s = t;
        }
        count += 1;
    };
    let mut c = vec![0usize; n];
    visit(&perm);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    phi.iter().map(|x| x / count as f64).collect()
}

pub fn mask(bits: u64) -> SubsetMask {
    SubsetMask::from_bits(bits)
}

/// A random nonempty subset of `0..n`.
pub fn random_nonempty(n: usize, rng: &mut ChaCha8Rng) -> u64 {
    rng.random_range(1..1u64 << n)
}

/// Random query AST over `n` features using every connective.
pub fn random_query(n: usize, depth: u32, rng: &mut ChaCha8Rng) -> Query {
    if depth == 0 || rng.random_bool(0.3) {
        return Query::Atom(mask(random_nonempty(n, rng)));
    }
    match rng.random_range(0..3) {
        0 => Query::not(random_query(n, depth - 1, rng)),
        1 => Query::and(random_query(n, depth - 1, rng), random_query(n, depth - 1, rng)),
        _ => Query::or(random_query(n, depth - 1, rng), random_query(n, depth - 1, rng)),
    }
}

/// Evaluates `game` on every bitmask.
pub fn all_values<G: SetFunction>(game: &G) -> Vec<f64> {
    (0..1u64 << game.n()).map(|b| game.value(mask(b)).unwrap()).collect()
}

// ---- golden files ----

pub const BIN: &str = env!("CARGO_BIN_EXE_symq");

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn data(name: &str) -> String {
    manifest_dir().join("tests/data").join(name).display().to_string()
}

/// Commands whose stdout is pinned byte for byte under `tests/golden/`.
pub fn golden_cases() -> Vec<(&'static str, Vec<String>)> {
    let game = data("game3.json");
    let tokens = data("tokens.txt");
    let walks = data("walks.jsonl");
    let random8 = format!("@{}", data("random8.json"));
    let lrp = format!("lrp={}", data("lrp.json"));
    let planted = r#"{"kind": "planted", "n": 6, "query": "1 & !4", "noise_scale": 0.05, "noise_seed": 3}"#;
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("decompose_full", vec!["decompose", "--table", &game, "--full"]),
        ("decompose_order1", vec!["decompose", "--table", &game, "--max-order", "1"]),
        ("decompose_walks", vec!["decompose", "--walks", &walks, "--n", "3", "--full"]),
        ("decompose_random", vec!["decompose", "--synthetic", &random8, "--max-order", "2", "--seed", "7"]),
        (
            "relevance_vocab",
            vec!["relevance", "--table", &game, "--vocab", &tokens, "--query", "not & bad", "--query", "!good", "--query", "not | good"],
        ),
        (
            "relevance_shapley",
            vec!["relevance", "--synthetic", &random8, "--seed", "7", "--weights", "shapley", "--query", "0", "--query", "{1,2} & !3"],
        ),
        (
            "relevance_query_shapley",
            vec!["relevance", "--table", &game, "--full", "--weights", "query-shapley", "--query", "0", "--query", "1", "--query", "2"],
        ),
        ("search_planted", vec!["search", "--synthetic", planted, "--top-k", "5"]),
        (
            "search_consecutive",
            vec!["search", "--synthetic", &random8, "--seed", "7", "--atoms", "consecutive:2", "--weights", "shapley", "--top-k", "4"],
        ),
        ("flip_random", vec!["flip", "--synthetic", &random8, "--methods", "symbxai,random", "--seed", "7"]),
        (
            "flip_curves",
            vec!["flip", "--table", &game, "--methods", "symbxai,occlusion,shapley,lrp,random", "--scores", &lrp, "--seed", "3", "--curves"],
        ),
    ];
    cases
        .into_iter()
        .map(|(name, args)| (name, args.into_iter().map(String::from).collect()))
        .collect()
}

pub fn run_symq(args: &[String]) -> std::process::Output {
    Command::new(BIN)
        .args(args)
        .current_dir(manifest_dir())
        .output()
        .expect("run symq")
}

/// Runs every golden case twice; returns the names that differ from their
/// file or between runs. With `bless`, rewrites the files instead.
pub fn check_golden(bless: bool) -> Vec<String> {
    let dir = manifest_dir().join("tests/golden");
    let mut bad = Vec::new();
    for (name, args) in golden_cases() {
        let first = run_symq(&args);
        let path = dir.join(format!("{name}.json"));
        if !first.status.success() {
            bad.push(format!("{name} (exit {:?})", first.status.code()));
            continue;
        }
        if bless {
            std::fs::write(&path, &first.stdout).unwrap();
            continue;
        }
        let want = std::fs::read(&path).unwrap_or_default();
        if want != first.stdout || run_symq(&args).stdout != first.stdout {
            bad.push(name.to_string());
        }
    }
    bad
}
