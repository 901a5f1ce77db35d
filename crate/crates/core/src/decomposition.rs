//! Multi-order decompositions `f(X) = Σ_L μ_L`.
//!
//! Two sources are supported: Harsanyi dividends of a [`SetFunction`]
//! (perturbation route) and aggregated walk relevances produced by a
//! propagation method (walk route).

use alloc::vec;
use alloc::vec::Vec;

use crate::game::SetFunction;
use crate::lattice::{mobius_transform, LatticeSupport, SubsetMask, SupportMode};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecompositionSource {
    Perturbation,
    PropagationWalks,
}

impl DecompositionSource {
    pub fn name(self) -> &'static str {
        match self {
            DecompositionSource::Perturbation => "perturbation",
            DecompositionSource::PropagationWalks => "walks",
        }
    }
}

/// `μ_L` for every `L` of a support, in the support's canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiOrderDecomposition {
    support: LatticeSupport,
    mu: Vec<f64>,
    source: DecompositionSource,
    conserved_total: Option<f64>,
}

impl MultiOrderDecomposition {
    /// Wraps precomputed terms.
    pub fn from_terms(support: LatticeSupport, mu: Vec<f64>, source: DecompositionSource) -> Result<Self> {
        if mu.len() != support.len() {
            return Err(Error::ShapeMismatch {
                expected: support.len(),
                found: mu.len(),
            });
        }
        Ok(MultiOrderDecomposition {
            support,
            mu,
            source,
            conserved_total: None,
        })
    }

    pub fn support(&self) -> &LatticeSupport {
        &self.support
    }

    pub fn n(&self) -> usize {
        self.support.n()
    }

    pub fn terms(&self) -> &[f64] {
        &self.mu
    }

    pub fn source(&self) -> DecompositionSource {
        self.source
    }

    /// `v(N)` when it was observed while building a full decomposition.
    pub fn conserved_total(&self) -> Option<f64> {
        self.conserved_total
    }

    pub fn get(&self, subset: SubsetMask) -> Option<f64> {
        self.support.index_of(subset).map(|i| self.mu[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (SubsetMask, f64)> + '_ {
        self.support.subsets().iter().copied().zip(self.mu.iter().copied())
    }

    /// `Σ_L μ_L` over the support.
    pub fn total(&self) -> f64 {
        self.mu.iter().sum()
    }

    /// New decomposition with `a·μ + b·other` on the same support.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if other.support != self.support {
            return Err(Error::ShapeMismatch {
                expected: self.support.len(),
                found: other.support.len(),
            });
        }
        let mu = self.mu.iter().zip(&other.mu).map(|(x, y)| a * x + b * y).collect();
        MultiOrderDecomposition::from_terms(self.support.clone(), mu, self.source)
    }
}

/// Harsanyi dividends of `game` on `support`.
///
/// All subsets are requested in one batch; a full support then runs the
/// fast transform, a truncated one only ever touches subsets of order `≤ k`.
pub fn decompose_perturbation<G: SetFunction + ?Sized>(
    game: &G,
    support: &LatticeSupport,
) -> Result<MultiOrderDecomposition> {
    if game.n() != support.n() {
        return Err(Error::FeatureCountMismatch {
            expected: support.n(),
            found: game.n(),
        });
    }
    let values = game.batch_values(support.subsets())?;
    let mu = mobius_transform(&values, support)?;
    let conserved_total = support.is_complete().then(|| *values.last().expect("non-empty support"));
    Ok(MultiOrderDecomposition {
        support: support.clone(),
        mu,
        source: DecompositionSource::Perturbation,
        conserved_total,
    })
}

/// `|Σ_L μ_L − v(N)|`. Zero up to rounding on a complete support; on a
/// truncated one this is the mass carried by the dropped orders.
pub fn conservation_residual<G: SetFunction + ?Sized>(
    d: &MultiOrderDecomposition,
    game: &G,
) -> Result<f64> {
    let full = game.value(SubsetMask::full(game.n()))?;
    Ok((d.total() - full).abs())
}

/// An ordered feature sequence with its relevance.
#[derive(Clone, Debug, PartialEq)]
pub struct Walk {
    pub features: Vec<usize>,
    pub relevance: f64,
}

impl Walk {
    /// `set(W)`.
    pub fn feature_set(&self) -> SubsetMask {
        self.features
            .iter()
            .fold(SubsetMask::EMPTY, |m, &i| m.with(i))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WalkRelevanceSet {
    n: usize,
    walks: Vec<Walk>,
}

impl WalkRelevanceSet {
    pub fn new(n: usize) -> Self {
        WalkRelevanceSet {
            n,
            walks: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn walks(&self) -> &[Walk] {
        &self.walks
    }

    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn push(&mut self, features: Vec<usize>, relevance: f64) -> Result<()> {
        if features.is_empty() {
            return Err(Error::EmptyWalk);
        }
        if let Some(&index) = features.iter().find(|&&i| i >= self.n || i >= 64) {
            return Err(Error::WalkIndexOutOfRange { index, n: self.n });
        }
        self.walks.push(Walk {
            features,
            relevance,
        });
        Ok(())
    }

    /// `R_S`: total relevance of the walks built only from features in `s`.
    pub fn subgraph_relevance(&self, s: SubsetMask) -> f64 {
        self.walks
            .iter()
            .filter(|w| w.feature_set().is_subset_of(s))
            .map(|w| w.relevance)
            .sum()
    }
}

/// `μ_L = Σ_{W : set(W) = L} R_W`; duplicate walks accumulate.
pub fn decompose_from_walks(
    walks: &WalkRelevanceSet,
    support: &LatticeSupport,
) -> Result<MultiOrderDecomposition> {
    if walks.n() != support.n() {
        return Err(Error::FeatureCountMismatch {
            expected: support.n(),
            found: walks.n(),
        });
    }
    let mut mu = vec![0.0; support.len()];
    for w in walks.walks() {
        let set = w.feature_set();
        let pos = support.index_of(set).ok_or(Error::WalkOrderExceedsSupport {
            order: set.len(),
            k: support.max_order(),
        })?;
        mu[pos] += w.relevance;
    }
    let conserved_total = support.is_complete().then(|| walks.walks().iter().map(|w| w.relevance).sum());
    Ok(MultiOrderDecomposition {
        support: support.clone(),
        mu,
        source: DecompositionSource::PropagationWalks,
        conserved_total,
    })
}

/// Largest `n` accepted by [`check_walk_equivalence`].
pub const MAX_EQUIVALENCE_FEATURES: usize = 12;

/// Treats the subgraph relevances `R_S` as a value table, takes their
/// Harsanyi dividends, and returns the largest deviation from the per-set
/// walk sums. The two agree exactly in exact arithmetic.
pub fn check_walk_equivalence(walks: &WalkRelevanceSet, n: usize) -> Result<f64> {
    if n > MAX_EQUIVALENCE_FEATURES {
        return Err(Error::CheckTooLarge {
            n,
            max: MAX_EQUIVALENCE_FEATURES,
        });
    }
    if walks.n() != n {
        return Err(Error::FeatureCountMismatch {
            expected: n,
            found: walks.n(),
        });
    }
    let support = LatticeSupport::enumerate(n, SupportMode::Full)?;
    let subgraph: Vec<f64> = support
        .subsets()
        .iter()
        .map(|&s| walks.subgraph_relevance(s))
        .collect();
    let harsanyi = mobius_transform(&subgraph, &support)?;
    let grouped = decompose_from_walks(walks, &support)?;
    Ok(harsanyi
        .iter()
        .zip(grouped.terms())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
