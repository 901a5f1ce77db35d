//! Query relevance `A(η, μ, q) = Σ_L η_L · μ_L · λ_L(q)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::decomposition::MultiOrderDecomposition;
use crate::lattice::LatticeSupport;
use crate::query::{FilterVector, Query};
use crate::{Error, Result};

/// What to do with subsets no query in a query set covers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strictness {
    /// Fail if such a subset carries nonzero `μ`.
    #[default]
    Strict,
    /// Give it weight zero and report its mass.
    Permissive,
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightVector {
    /// `η_L = 1`.
    Occlusion,
    /// `η_L = 1/|L|`, `η_∅ = 0`.
    ClassicShapley,
    /// `η_L = 1 / Σ_k λ_L(q_k)`.
    QuerySetShapley {
        queries: Vec<Query>,
        strictness: Strictness,
    },
    /// One weight per support position.
    Custom(Vec<f64>),
}

impl WeightVector {
    pub fn name(&self) -> &'static str {
        match self {
            WeightVector::Occlusion => "occlusion",
            WeightVector::ClassicShapley => "shapley",
            WeightVector::QuerySetShapley { .. } => "query-shapley",
            WeightVector::Custom(_) => "custom",
        }
    }

    /// Weights per support position plus, for query sets, the positions
    /// no query covers (their weight is zero).
    pub fn resolve(&self, support: &LatticeSupport) -> Result<(Vec<f64>, Vec<usize>)> {
        match self {
            WeightVector::Occlusion => Ok((vec![1.0; support.len()], Vec::new())),
            WeightVector::ClassicShapley => Ok((
                support
                    .subsets()
                    .iter()
                    .map(|s| if s.is_empty() { 0.0 } else { 1.0 / s.len() as f64 })
                    .collect(),
                Vec::new(),
            )),
            WeightVector::QuerySetShapley { queries, .. } => {
                let mut cover = vec![0u32; support.len()];
                for q in queries {
                    for pos in q.filter_vector(support)?.ones() {
                        cover[pos] += 1;
                    }
                }
                let uncovered = (0..support.len()).filter(|&p| cover[p] == 0).collect();
                let eta = cover
                    .iter()
                    .map(|&c| if c == 0 { 0.0 } else { 1.0 / c as f64 })
                    .collect();
                Ok((eta, uncovered))
            }
            WeightVector::Custom(table) => {
                if table.len() != support.len() {
                    return Err(Error::ShapeMismatch {
                        expected: support.len(),
                        found: table.len(),
                    });
                }
                Ok((table.clone(), Vec::new()))
            }
        }
    }
}

/// Resolved weights bound to a decomposition, for evaluating many queries.
#[derive(Clone, Debug)]
pub struct RelevanceEngine<'a> {
    mu: &'a MultiOrderDecomposition,
    weighted: Vec<f64>,
    uncovered_mass: f64,
}

impl<'a> RelevanceEngine<'a> {
    pub fn new(mu: &'a MultiOrderDecomposition, eta: &WeightVector) -> Result<Self> {
        let support = mu.support();
        let (weights, uncovered) = eta.resolve(support)?;
        if let WeightVector::QuerySetShapley {
            strictness: Strictness::Strict,
            ..
        } = eta
        {
            if let Some(&pos) = uncovered.iter().find(|&&p| mu.terms()[p] != 0.0) {
                return Err(Error::UncoveredSubset {
                    subset: support.subset(pos).key(),
                });
            }
        }
        let uncovered_mass = uncovered.iter().map(|&p| mu.terms()[p]).sum();
        let weighted = weights.iter().zip(mu.terms()).map(|(w, m)| w * m).collect();
        Ok(RelevanceEngine {
            mu,
            weighted,
            uncovered_mass,
        })
    }

    pub fn decomposition(&self) -> &MultiOrderDecomposition {
        self.mu
    }

    /// `Σ μ_L` over subsets that received weight zero for lack of coverage.
    pub fn uncovered_mass(&self) -> f64 {
        self.uncovered_mass
    }

    pub fn relevance(&self, q: &Query) -> Result<f64> {
        let lambda = q.filter_vector(self.mu.support())?;
        Ok(self.relevance_of(&lambda))
    }

    pub fn relevance_of(&self, lambda: &FilterVector) -> f64 {
        debug_assert_eq!(lambda.len(), self.weighted.len());
        lambda.ones().map(|p| self.weighted[p]).sum()
    }
}

pub fn query_relevance(mu: &MultiOrderDecomposition, q: &Query, eta: &WeightVector) -> Result<f64> {
    RelevanceEngine::new(mu, eta)?.relevance(q)
}

/// Classic Shapley value of every feature, `φ_i = Σ_{L∋i} μ_L / |L|`.
///
/// On a truncated support this is the truncated Shapley value.
pub fn shapley_values(mu: &MultiOrderDecomposition) -> Vec<f64> {
    let mut phi = vec![0.0; mu.n()];
    for (l, m) in mu.iter() {
        if l.is_empty() {
            continue;
        }
        let share = m / l.len() as f64;
        for i in l.indices() {
            phi[i] += share;
        }
    }
    phi
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuerySetShapley {
    pub values: Vec<f64>,
    /// Mass on subsets no query covers; always zero in strict mode.
    pub uncovered_mass: f64,
}

/// Shapley values of a query set; they sum to `Σ_L μ_L` minus the
/// uncovered mass.
pub fn query_set_shapley(
    mu: &MultiOrderDecomposition,
    queries: &[Query],
    strictness: Strictness,
) -> Result<QuerySetShapley> {
    let eta = WeightVector::QuerySetShapley {
        queries: queries.to_vec(),
        strictness,
    };
    let engine = RelevanceEngine::new(mu, &eta)?;
    let values = queries
        .iter()
        .map(|q| engine.relevance(q))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuerySetShapley {
        values,
        uncovered_mass: engine.uncovered_mass(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{decompose_perturbation, DecompositionSource};
    use crate::game::{SetFunction, SyntheticGame, TableGame};
    use crate::lattice::{SubsetMask, SupportMode};
    use crate::query::parse;

    fn m(ix: &[usize]) -> SubsetMask {
        SubsetMask::from_indices(ix.iter().copied(), 64).unwrap()
    }

    fn small_mu() -> MultiOrderDecomposition {
        let s = LatticeSupport::enumerate(3, SupportMode::Full).unwrap();
        let mut mu = vec![0.0; 8];
        mu[s.index_of(m(&[0])).unwrap()] = 1.0;
        mu[s.index_of(m(&[0, 1])).unwrap()] = 2.0;
        MultiOrderDecomposition::from_terms(s, mu, DecompositionSource::Perturbation).unwrap()
    }

    #[test]
    fn occlusion_relevance_small_game() {
        let mu = small_mu();
        let a = |q: &str| query_relevance(&mu, &parse(q).unwrap(), &WeightVector::Occlusion).unwrap();
        assert_eq!(a("0"), 3.0);
        assert_eq!(a("0 & 1"), 2.0);
        assert_eq!(a("!0"), 0.0);
        // absence of a feature is the prediction without it
        assert_eq!(a("!2"), 3.0);
        assert_eq!(a("!1"), 1.0);
        // inclusion-exclusion
        assert_eq!(a("0 & 1"), a("0") + a("1") - a("{0,1}"));
    }

    #[test]
    fn shapley_small_game() {
        let mu = small_mu();
        assert_eq!(shapley_values(&mu), vec![2.0, 1.0, 0.0]);
        let singles: Vec<Query> = (0..3).map(Query::feature).collect();
        let qs = query_set_shapley(&mu, &singles, Strictness::Strict).unwrap();
        assert_eq!(qs.values, vec![2.0, 1.0, 0.0]);
        assert_eq!(qs.uncovered_mass, 0.0);
        for (i, q) in singles.iter().enumerate() {
            let a = query_relevance(&mu, q, &WeightVector::ClassicShapley).unwrap();
            assert_eq!(a, qs.values[i]);
        }
    }

    #[test]
    fn additive_and_symmetric_shapley() {
        let s = LatticeSupport::enumerate(4, SupportMode::Full).unwrap();
        let g = SyntheticGame::additive(vec![0.5, -1.0, 2.0, 0.0]).unwrap();
        let d = decompose_perturbation(&g, &s).unwrap();
        let phi = shapley_values(&d);
        for (a, b) in phi.iter().zip([0.5, -1.0, 2.0, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }

        // v(S) = |S ∩ {0,1}|^2 is symmetric in features 0 and 1
        let t = TableGame::from_entries(
            4,
            s.subsets()
                .iter()
                .map(|&x| (x, (x.intersection(m(&[0, 1])).len() as f64).powi(2))),
        )
        .unwrap();
        let d = decompose_perturbation(&t, &s).unwrap();
        let phi = shapley_values(&d);
        assert!((phi[0] - phi[1]).abs() < 1e-12);
        assert!((phi.iter().sum::<f64>() - t.value(SubsetMask::full(4)).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn strict_query_sets_must_cover_mass() {
        let mu = small_mu();
        let qs = [parse("1").unwrap(), parse("2").unwrap()];
        assert_eq!(
            query_set_shapley(&mu, &qs, Strictness::Strict),
            Err(Error::UncoveredSubset { subset: "0".into() })
        );
        let p = query_set_shapley(&mu, &qs, Strictness::Permissive).unwrap();
        assert_eq!(p.uncovered_mass, 1.0);
        assert_eq!(p.values.iter().sum::<f64>() + p.uncovered_mass, mu.total());
    }

    #[test]
    fn single_covering_query_takes_everything() {
        let mu = small_mu();
        let qs = [parse("{0,1,2}").unwrap()];
        let r = query_set_shapley(&mu, &qs, Strictness::Strict).unwrap();
        assert_eq!(r.values, vec![3.0]);
    }

    #[test]
    fn custom_weights_shape() {
        let mu = small_mu();
        let q = parse("0").unwrap();
        assert!(matches!(
            query_relevance(&mu, &q, &WeightVector::Custom(vec![1.0; 3])),
            Err(Error::ShapeMismatch { .. })
        ));
        let r = query_relevance(&mu, &q, &WeightVector::Custom(vec![0.5; 8])).unwrap();
        assert_eq!(r, 1.5);
    }

    #[test]
    fn out_of_range_query() {
        let mu = small_mu();
        assert_eq!(
            query_relevance(&mu, &parse("3").unwrap(), &WeightVector::Occlusion),
            Err(Error::IndexOutOfRange { index: 3, n: 3 })
        );
    }
}
