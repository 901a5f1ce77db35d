//! Search for the query whose filter vector best matches `μ`.
//!
//! Candidates are conjunctions of literals over a fixed list of atoms; each
//! is scored by the weighted correlation between its filter vector and the
//! decomposition terms.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::decomposition::MultiOrderDecomposition;
use crate::lattice::{SubsetMask, SupportMode};
use crate::query::{FilterVector, Query};
use crate::relevance::WeightVector;
use crate::{Error, Result};

/// Weighted variances below this make a correlation degenerate (scored 0).
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Default guard on the number of generated queries.
pub const DEFAULT_SPACE_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct QuerySpaceSpec {
    pub atoms: Vec<SubsetMask>,
    /// Number of `∧` allowed; queries have up to `max_conjunctions + 1` literals.
    pub max_conjunctions: usize,
    pub allow_negated_literals: bool,
    /// Atoms within one query must not share features.
    pub disjoint_literals: bool,
    /// Every atom must be a contiguous index range.
    pub consecutive_atoms_only: bool,
    pub max_queries: usize,
}

impl QuerySpaceSpec {
    pub fn new(atoms: Vec<SubsetMask>) -> Self {
        QuerySpaceSpec {
            atoms,
            max_conjunctions: 2,
            allow_negated_literals: true,
            disjoint_literals: true,
            consecutive_atoms_only: false,
            max_queries: DEFAULT_SPACE_CAP,
        }
    }

    /// One atom per feature.
    pub fn singletons(n: usize) -> Self {
        QuerySpaceSpec::new((0..n).map(SubsetMask::singleton).collect())
    }

    /// Every contiguous range `{i, .., i+w-1}` with `1 ≤ w ≤ max_width`.
    pub fn consecutive(n: usize, max_width: usize) -> Self {
        let mut atoms = Vec::new();
        for w in 1..=max_width.min(n) {
            for start in 0..=n - w {
                atoms.push(SubsetMask::from_bits((((1u128 << w) - 1) << start) as u64));
            }
        }
        let mut spec = QuerySpaceSpec::new(atoms);
        spec.consecutive_atoms_only = true;
        spec
    }

    pub fn with_max_conjunctions(mut self, k: usize) -> Self {
        self.max_conjunctions = k;
        self
    }
}

fn is_contiguous(s: SubsetMask) -> bool {
    let b = s.bits() >> s.bits().trailing_zeros();
    b & (b.wrapping_add(1)) == 0
}

/// Enumerates the query space breadth-first by literal count.
pub fn generate_space(spec: &QuerySpaceSpec, n: usize) -> Result<Vec<Query>> {
    let mut atoms: Vec<SubsetMask> = Vec::with_capacity(spec.atoms.len());
    for &a in &spec.atoms {
        if a.is_empty() {
            return Err(Error::Syntax {
                position: 0,
                message: "empty atom in query space".into(),
            });
        }
        if !a.fits(n) {
            return Err(Error::IndexOutOfRange {
                index: a.max_index().unwrap_or(0),
                n,
            });
        }
        if spec.consecutive_atoms_only && !is_contiguous(a) {
            return Err(Error::NonConsecutiveAtom { atom: a.key() });
        }
        if !atoms.contains(&a) {
            atoms.push(a);
        }
    }
    if atoms.is_empty() {
        return Err(Error::EmptyQuerySpace);
    }
    atoms.sort_by_key(|a| (a.min_index(), a.len(), a.bits()));

    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::new();
    let max_literals = (spec.max_conjunctions + 1).min(atoms.len());
    for m in 1..=max_literals {
        let combos = combinations(atoms.len(), m)
            .filter(|c| {
                !spec.disjoint_literals
                    || c.iter().enumerate().all(|(i, &a)| {
                        c[i + 1..].iter().all(|&b| !atoms[a].intersects(atoms[b]))
                    })
            })
            .collect::<Vec<_>>();
        let patterns = if spec.allow_negated_literals { 1u32 << m } else { 1 };
        for pattern in 0..patterns {
            for combo in &combos {
                let literals = combo.iter().enumerate().map(|(j, &a)| {
                    let negated = pattern >> (m - 1 - j) & 1 == 1;
                    let atom = Query::Atom(atoms[a]);
                    if negated {
                        Query::not(atom)
                    } else {
                        atom
                    }
                });
                let q = Query::conjunction(literals).expect("m >= 1").canonicalize();
                if seen.insert(q.canonical_string(None)) {
                    out.push(q);
                    if out.len() > spec.max_queries {
                        return Err(Error::SpaceTooLarge {
                            cap: spec.max_queries,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Increasing `m`-combinations of `0..k`.
fn combinations(k: usize, m: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut cur: Option<Vec<usize>> = (m <= k).then(|| (0..m).collect());
    core::iter::from_fn(move || {
        let out = cur.clone()?;
        let c = cur.as_mut().unwrap();
        let mut i = m;
        loop {
            if i == 0 {
                cur = None;
                break;
            }
            i -= 1;
            if c[i] < k - m + i {
                c[i] += 1;
                for j in i + 1..m {
                    c[j] = c[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    })
}

/// `corr_η(x, y) = cov_η(x, y) / sqrt(Var_η(x) · Var_η(y))` with
/// `E_η[x] = Σ x_i η_i / Σ η_i`. Degenerate variances give 0.
pub fn weighted_correlation_values(x: &[f64], y: &[f64], eta: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() != eta.len() {
        return Err(Error::ShapeMismatch {
            expected: eta.len(),
            found: if x.len() != eta.len() { x.len() } else { y.len() },
        });
    }
    let total: f64 = eta.iter().sum();
    if total == 0.0 {
        return Err(Error::AllWeightsZero);
    }
    let mean = |v: &[f64]| v.iter().zip(eta).map(|(a, w)| a * w).sum::<f64>() / total;
    let (mx, my) = (mean(x), mean(y));
    let cov = |a: &[f64], ma: f64, b: &[f64], mb: f64| {
        a.iter()
            .zip(b)
            .zip(eta)
            .map(|((p, q), w)| w * (p - ma) * (q - mb))
            .sum::<f64>()
            / total
    };
    let vx = cov(x, mx, x, mx);
    let vy = cov(y, my, y, my);
    if vx < DEGENERATE_VARIANCE || vy < DEGENERATE_VARIANCE {
        return Ok(0.0);
    }
    Ok((cov(x, mx, y, my) / libm::sqrt(vx * vy)).clamp(-1.0, 1.0))
}

/// Weighted correlation between a filter vector and the terms of `mu`.
pub fn weighted_correlation(
    lambda: &FilterVector,
    mu: &MultiOrderDecomposition,
    eta: &WeightVector,
) -> Result<f64> {
    if lambda.len() != mu.support().len() {
        return Err(Error::ShapeMismatch {
            expected: mu.support().len(),
            found: lambda.len(),
        });
    }
    let (w, _) = eta.resolve(mu.support())?;
    weighted_correlation_values(&lambda.to_f64(), mu.terms(), &w)
}

/// Scores binary vectors against a fixed `μ` in `O(|λ|)`.
struct Scorer {
    eta: Vec<f64>,
    total: f64,
    /// `η_i (μ_i − E_η[μ])`
    weighted_centered: Vec<f64>,
    var_mu: f64,
}

impl Scorer {
    fn new(mu: &[f64], eta: Vec<f64>) -> Result<Self> {
        let total: f64 = eta.iter().sum();
        if total == 0.0 {
            return Err(Error::AllWeightsZero);
        }
        let mean = mu.iter().zip(&eta).map(|(m, w)| m * w).sum::<f64>() / total;
        let weighted_centered: Vec<f64> = mu.iter().zip(&eta).map(|(m, w)| w * (m - mean)).collect();
        let var_mu = mu
            .iter()
            .zip(&weighted_centered)
            .map(|(m, wc)| wc * (m - mean))
            .sum::<f64>()
            / total;
        Ok(Scorer {
            eta,
            total,
            weighted_centered,
            var_mu,
        })
    }

    fn score(&self, lambda: &FilterVector) -> f64 {
        let (mut mass, mut cov) = (0.0, 0.0);
        for p in lambda.ones() {
            mass += self.eta[p];
            cov += self.weighted_centered[p];
        }
        // for a 0/1 vector, Var = E[λ] − E[λ]²; the E[λ] term of the
        // covariance vanishes because μ is centered
        let p = mass / self.total;
        let var_lambda = p - p * p;
        if var_lambda < DEGENERATE_VARIANCE || self.var_mu < DEGENERATE_VARIANCE {
            return 0.0;
        }
        (cov / self.total / libm::sqrt(var_lambda * self.var_mu)).clamp(-1.0, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredQuery {
    pub query: Query,
    /// Canonical string without vocabulary; the tie-break key.
    pub text: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub ranked: Vec<ScoredQuery>,
    pub space_size: usize,
    pub weights: &'static str,
    pub support_mode: SupportMode,
}

impl SearchResult {
    /// The top-ranked query.
    pub fn best(&self) -> Option<&ScoredQuery> {
        self.ranked.first()
    }
}

/// Ranks every query of the space by weighted correlation with `mu`.
/// Ties are broken by canonical string, ascending.
pub fn find_best_queries(
    mu: &MultiOrderDecomposition,
    spec: &QuerySpaceSpec,
    eta: &WeightVector,
    top_k: usize,
) -> Result<SearchResult> {
    let space = generate_space(spec, mu.n())?;
    let (w, _) = eta.resolve(mu.support())?;
    let scorer = Scorer::new(mu.terms(), w)?;
    let mut ranked = space
        .into_iter()
        .map(|q| {
            let lambda = q.filter_vector(mu.support())?;
            Ok(ScoredQuery {
                text: q.canonical_string(None),
                score: scorer.score(&lambda),
                query: q,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let space_size = ranked.len();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.text.cmp(&b.text)));
    ranked.truncate(top_k);
    Ok(SearchResult {
        ranked,
        space_size,
        weights: eta.name(),
        support_mode: mu.support().mode(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::DecompositionSource;
    use crate::lattice::LatticeSupport;
    use crate::query::parse;
    use alloc::vec;

    fn texts(qs: &[Query]) -> Vec<String> {
        qs.iter().map(|q| q.canonical_string(None)).collect()
    }

    #[test]
    fn two_atom_space() {
        let spec = QuerySpaceSpec::singletons(2).with_max_conjunctions(1);
        let qs = generate_space(&spec, 2).unwrap();
        assert_eq!(
            texts(&qs),
            vec![
                "{0}", "{1}", "!{0}", "!{1}", "{0} & {1}", "{0} & !{1}", "!{0} & {1}",
                "!{0} & !{1}"
            ]
        );
    }

    #[test]
    fn literals_only() {
        let spec = QuerySpaceSpec::singletons(3).with_max_conjunctions(0);
        assert_eq!(
            texts(&generate_space(&spec, 3).unwrap()),
            vec!["{0}", "{1}", "{2}", "!{0}", "!{1}", "!{2}"]
        );
        let mut spec = spec;
        spec.allow_negated_literals = false;
        assert_eq!(generate_space(&spec, 3).unwrap().len(), 3);
    }

    #[test]
    fn disjointness() {
        let a = SubsetMask::from_bits(0b011);
        let b = SubsetMask::from_bits(0b110);
        let spec = QuerySpaceSpec::new(vec![a, b]);
        let qs = generate_space(&spec, 3).unwrap();
        assert_eq!(qs.len(), 4);
        assert!(qs.iter().all(|q| q.features() != SubsetMask::from_bits(0b111)));
        let mut spec = spec;
        spec.disjoint_literals = false;
        assert_eq!(generate_space(&spec, 3).unwrap().len(), 8);
    }

    #[test]
    fn space_errors() {
        assert_eq!(
            generate_space(&QuerySpaceSpec::new(vec![]), 3),
            Err(Error::EmptyQuerySpace)
        );
        let mut spec = QuerySpaceSpec::singletons(8);
        spec.max_queries = 100;
        assert_eq!(generate_space(&spec, 8), Err(Error::SpaceTooLarge { cap: 100 }));
        assert!(matches!(
            generate_space(&QuerySpaceSpec::singletons(4), 3),
            Err(Error::IndexOutOfRange { index: 3, n: 3 })
        ));
        let mut spec = QuerySpaceSpec::new(vec![SubsetMask::from_bits(0b101)]);
        spec.consecutive_atoms_only = true;
        assert!(matches!(
            generate_space(&spec, 3),
            Err(Error::NonConsecutiveAtom { .. })
        ));
    }

    #[test]
    fn consecutive_atoms() {
        let spec = QuerySpaceSpec::consecutive(4, 2);
        let keys: Vec<_> = spec.atoms.iter().map(|a| a.key()).collect();
        assert_eq!(keys, vec!["0", "1", "2", "3", "0,1", "1,2", "2,3"]);
        assert!(generate_space(&spec, 4).is_ok());
    }

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(5, 2).count(), 10);
        assert_eq!(combinations(4, 4).count(), 1);
        assert_eq!(combinations(3, 4).count(), 0);
        assert_eq!(combinations(6, 3).last(), Some(vec![3, 4, 5]));
    }

    #[test]
    fn correlation_edge_cases() {
        let x = [0.0, 1.0, 1.0, 0.0];
        let inv = [1.0, 0.0, 0.0, 1.0];
        let w = [1.0; 4];
        assert!((weighted_correlation_values(&x, &x, &w).unwrap() - 1.0).abs() < 1e-12);
        assert!((weighted_correlation_values(&inv, &x, &w).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(weighted_correlation_values(&[1.0; 4], &x, &w).unwrap(), 0.0);
        assert_eq!(
            weighted_correlation_values(&x, &x, &[0.0; 4]),
            Err(Error::AllWeightsZero)
        );
        assert!(matches!(
            weighted_correlation_values(&x, &x[..3], &w),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn fast_scorer_matches_general_route() {
        let s = LatticeSupport::enumerate(4, SupportMode::Full).unwrap();
        let mu: Vec<f64> = (0..16).map(|i| ((i * 7) % 5) as f64 - 1.5).collect();
        let d = MultiOrderDecomposition::from_terms(s.clone(), mu, DecompositionSource::Perturbation).unwrap();
        let eta = WeightVector::ClassicShapley;
        let (w, _) = eta.resolve(&s).unwrap();
        let scorer = Scorer::new(d.terms(), w).unwrap();
        for q in generate_space(&QuerySpaceSpec::singletons(4), 4).unwrap() {
            let lambda = q.filter_vector(&s).unwrap();
            let general = weighted_correlation(&lambda, &d, &eta).unwrap();
            assert!((scorer.score(&lambda) - general).abs() < 1e-12, "{q}");
        }
    }

    #[test]
    fn planted_vector_ranks_first() {
        let s = LatticeSupport::enumerate(4, SupportMode::Full).unwrap();
        let q = parse("1 & !3").unwrap();
        let mu = q.filter_vector(&s).unwrap().to_f64();
        let d = MultiOrderDecomposition::from_terms(s, mu, DecompositionSource::Perturbation).unwrap();
        let r = find_best_queries(&d, &QuerySpaceSpec::singletons(4), &WeightVector::Occlusion, 3).unwrap();
        assert_eq!(r.ranked.len(), 3);
        assert_eq!(r.best().unwrap().text, "{1} & !{3}");
        assert!((r.best().unwrap().score - 1.0).abs() < 1e-12);
        assert!(r.ranked.windows(2).all(|p| p[0].score >= p[1].score));
    }
}
