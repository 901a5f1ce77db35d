//! Set functions `v(S) = f(X_S) − f(X_∅)`.
//!
//! Every implementor of [`SetFunction`] returns baseline-normalized values,
//! so `v(∅) = 0` holds for all backends and the Harsanyi dividends can be
//! taken directly from `v`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::lattice::{LatticeSupport, SubsetMask, MAX_FEATURES, MAX_FULL_FEATURES};
use crate::query::Query;
use crate::{Error, Result};

/// A cooperative game over `n` features with `v(∅) = 0`.
pub trait SetFunction {
    fn n(&self) -> usize;

    fn value(&self, subset: SubsetMask) -> Result<f64>;

    /// Values for `subsets`, in input order.
    fn batch_values(&self, subsets: &[SubsetMask]) -> Result<Vec<f64>> {
        subsets.iter().map(|&s| self.value(s)).collect()
    }
}

impl<T: SetFunction + ?Sized> SetFunction for &T {
    fn n(&self) -> usize {
        (**self).n()
    }

    fn value(&self, subset: SubsetMask) -> Result<f64> {
        (**self).value(subset)
    }

    fn batch_values(&self, subsets: &[SubsetMask]) -> Result<Vec<f64>> {
        (**self).batch_values(subsets)
    }
}

/// Fails when `subset` reaches past `n`.
pub fn check_subset_fits(subset: SubsetMask, n: usize) -> Result<()> {
    if subset.fits(n) {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange {
            index: subset.max_index().unwrap_or(0),
            n,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum TableStorage {
    /// Indexed by the raw bit pattern; used when every subset is present.
    Dense(Vec<f64>),
    Sparse(BTreeMap<SubsetMask, f64>),
}

/// Raw model outputs per subset; `∅` must be present and is the baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct TableGame {
    n: usize,
    baseline: f64,
    storage: TableStorage,
}

impl TableGame {
    pub fn from_entries<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (SubsetMask, f64)>,
    {
        if n == 0 || n > MAX_FEATURES {
            return Err(Error::FeatureCountOutOfRange { n });
        }
        let mut map = BTreeMap::new();
        for (s, v) in entries {
            check_subset_fits(s, n)?;
            map.insert(s, v);
        }
        let baseline = *map.get(&SubsetMask::EMPTY).ok_or(Error::MissingTableEntry {
            subset: Default::default(),
        })?;
        let storage = if n <= MAX_FULL_FEATURES && map.len() == 1usize << n {
            let mut dense = vec![0.0; 1usize << n];
            for (s, v) in map {
                dense[s.bits() as usize] = v;
            }
            TableStorage::Dense(dense)
        } else {
            TableStorage::Sparse(map)
        };
        Ok(TableGame {
            n,
            baseline,
            storage,
        })
    }

    /// Tabulates `game` on every subset of `support`.
    pub fn materialize<G: SetFunction + ?Sized>(game: &G, support: &LatticeSupport) -> Result<Self> {
        let values = game.batch_values(support.subsets())?;
        TableGame::from_entries(game.n(), support.subsets().iter().copied().zip(values))
    }

    /// The raw value at `∅` that is subtracted from every lookup.
    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    pub fn raw(&self, subset: SubsetMask) -> Result<f64> {
        check_subset_fits(subset, self.n)?;
        let found = match &self.storage {
            TableStorage::Dense(d) => d.get(subset.bits() as usize).copied(),
            TableStorage::Sparse(m) => m.get(&subset).copied(),
        };
        found.ok_or_else(|| Error::MissingTableEntry {
            subset: subset.key(),
        })
    }

    /// `(subset, raw value)` pairs in ascending bit order.
    pub fn entries(&self) -> Vec<(SubsetMask, f64)> {
        match &self.storage {
            TableStorage::Dense(d) => d
                .iter()
                .enumerate()
                .map(|(b, &v)| (SubsetMask::from_bits(b as u64), v))
                .collect(),
            TableStorage::Sparse(m) => m.iter().map(|(&s, &v)| (s, v)).collect(),
        }
    }
}

impl SetFunction for TableGame {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, subset: SubsetMask) -> Result<f64> {
        if subset.is_empty() {
            return Ok(0.0);
        }
        Ok(self.raw(subset)? - self.baseline)
    }
}

/// Generators for test games with known structure.
#[derive(Clone, Debug, PartialEq)]
pub enum SyntheticSpec {
    /// `raw(S) = Σ_{T⊆S} c_T`.
    Multilinear(Vec<(SubsetMask, f64)>),
    /// `raw(S) = Σ_{i∈S} w_i`.
    Additive(Vec<f64>),
    /// Dividends `signal · λ_T(query) + noise_scale · ε_T` with `ε_T`
    /// standard normal, drawn from a stream keyed by `(noise_seed, T)`.
    PlantedQuery {
        query: Query,
        signal: f64,
        noise_seed: u64,
        noise_scale: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticGame {
    n: usize,
    spec: SyntheticSpec,
}

impl SyntheticGame {
    pub fn new(n: usize, spec: SyntheticSpec) -> Result<Self> {
        if n == 0 || n > MAX_FEATURES {
            return Err(Error::FeatureCountOutOfRange { n });
        }
        match &spec {
            SyntheticSpec::Multilinear(coeffs) => {
                for (s, c) in coeffs {
                    check_subset_fits(*s, n)?;
                    if !c.is_finite() {
                        return Err(Error::Oracle("non-finite coefficient".into()));
                    }
                }
            }
            SyntheticSpec::Additive(w) => {
                if w.len() != n {
                    return Err(Error::ShapeMismatch {
                        expected: n,
                        found: w.len(),
                    });
                }
            }
            SyntheticSpec::PlantedQuery { query, .. } => query.validate(n)?,
        }
        Ok(SyntheticGame { n, spec })
    }

    pub fn multilinear(n: usize, coefficients: Vec<(SubsetMask, f64)>) -> Result<Self> {
        SyntheticGame::new(n, SyntheticSpec::Multilinear(coefficients))
    }

    pub fn additive(weights: Vec<f64>) -> Result<Self> {
        SyntheticGame::new(weights.len(), SyntheticSpec::Additive(weights))
    }

    pub fn planted(n: usize, query: Query, signal: f64, noise_seed: u64, noise_scale: f64) -> Result<Self> {
        SyntheticGame::new(
            n,
            SyntheticSpec::PlantedQuery {
                query,
                signal,
                noise_seed,
                noise_scale,
            },
        )
    }

    /// Standard-normal coefficients on every subset of order `1..=max_order`.
    pub fn random_multilinear(n: usize, max_order: usize, seed: u64) -> Result<Self> {
        let support = LatticeSupport::enumerate(n, crate::SupportMode::Truncated(max_order))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = support
            .subsets()
            .iter()
            .skip(1)
            .map(|&s| (s, rng.sample::<f64, _>(StandardNormal)))
            .collect();
        SyntheticGame::multilinear(n, coeffs)
    }

    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }

    /// The dividend `c_T` the game was built from.
    pub fn coefficient(&self, t: SubsetMask) -> f64 {
        match &self.spec {
            SyntheticSpec::Multilinear(coeffs) => coeffs
                .iter()
                .filter(|(s, _)| *s == t)
                .map(|(_, c)| c)
                .sum(),
            SyntheticSpec::Additive(w) => match t.len() {
                1 => w[t.min_index().unwrap()],
                _ => 0.0,
            },
            SyntheticSpec::PlantedQuery {
                query,
                signal,
                noise_seed,
                noise_scale,
            } => planted_coefficient(query, *signal, *noise_seed, *noise_scale, t),
        }
    }

    fn raw(&self, s: SubsetMask) -> f64 {
        match &self.spec {
            SyntheticSpec::Multilinear(coeffs) => coeffs
                .iter()
                .filter(|(t, _)| t.is_subset_of(s))
                .map(|(_, c)| c)
                .sum(),
            SyntheticSpec::Additive(w) => s.indices().map(|i| w[i]).sum(),
            SyntheticSpec::PlantedQuery { .. } => {
                s.submasks().map(|t| self.coefficient(t)).sum()
            }
        }
    }
}

fn planted_coefficient(query: &Query, signal: f64, seed: u64, scale: f64, t: SubsetMask) -> f64 {
    let mut c = if query.holds_on(t) { signal } else { 0.0 };
    if scale != 0.0 && !t.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t.bits());
        let eps: f64 = rng.sample(StandardNormal);
        c += scale * eps;
    }
    c
}

impl SetFunction for SyntheticGame {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, subset: SubsetMask) -> Result<f64> {
        check_subset_fits(subset, self.n)?;
        if subset.is_empty() {
            return Ok(0.0);
        }
        Ok(self.raw(subset) - self.raw(SubsetMask::EMPTY))
    }
}
