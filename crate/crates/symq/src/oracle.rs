//! Cached, thread-safe access to `v(S)` across backends.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::Mutex;
use std::time::Duration;

use lru::LruCache;
use symq_core::game::check_subset_fits;
use symq_core::{Error, Result, SetFunction, SubsetMask, SyntheticGame, TableGame};

use crate::external::WireClient;

/// Default bound on cached entries for subprocess oracles.
pub const DEFAULT_LRU_CAPACITY: usize = 1 << 22;

#[derive(Debug)]
pub enum Backend {
    Table(TableGame),
    Synthetic(SyntheticGame),
    External(WireClient),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CachePolicy {
    Unbounded,
    Lru(usize),
}

enum Cache {
    Unbounded(HashMap<SubsetMask, f64>),
    Lru(LruCache<SubsetMask, f64>),
}

impl Cache {
    fn new(policy: CachePolicy) -> Self {
        match policy {
            CachePolicy::Unbounded => Cache::Unbounded(HashMap::new()),
            CachePolicy::Lru(cap) => Cache::Lru(LruCache::new(
                NonZeroUsize::new(cap.max(1)).expect("nonzero"),
            )),
        }
    }

    fn get(&mut self, s: &SubsetMask) -> Option<f64> {
        match self {
            Cache::Unbounded(m) => m.get(s).copied(),
            Cache::Lru(m) => m.get(s).copied(),
        }
    }

    fn insert(&mut self, s: SubsetMask, v: f64) {
        match self {
            Cache::Unbounded(m) => {
                m.insert(s, v);
            }
            Cache::Lru(m) => {
                m.put(s, v);
            }
        }
    }

    fn len(&self) -> usize {
        match self {
            Cache::Unbounded(m) => m.len(),
            Cache::Lru(m) => m.len(),
        }
    }
}

/// A backend plus a cache of normalized values.
///
/// Subprocess values are normalized here by subtracting the raw value at
/// `∅`; table and synthetic backends normalize themselves.
pub struct ValueOracle {
    n: usize,
    backend: Backend,
    baseline: f64,
    cache: Mutex<Cache>,
}

impl std::fmt::Debug for ValueOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ValueOracle")
            .field("n", &self.n)
            .field("backend", &self.backend)
            .field("baseline", &self.baseline)
            .finish_non_exhaustive()
    }
}

impl ValueOracle {
    pub fn table(table: TableGame) -> Self {
        let n = table.n();
        let baseline = table.baseline();
        ValueOracle::with_backend(n, Backend::Table(table), baseline, CachePolicy::Unbounded)
    }

    pub fn synthetic(game: SyntheticGame) -> Self {
        let n = game.n();
        ValueOracle::with_backend(n, Backend::Synthetic(game), 0.0, CachePolicy::Unbounded)
    }

    /// Spawns `command` and reads the baseline `raw(∅)` from it.
    pub fn external(command: &str, timeout: Duration, policy: CachePolicy) -> Result<Self> {
        let client = WireClient::spawn(command, timeout)?;
        ValueOracle::from_client(client, policy)
    }

    pub fn from_client(client: WireClient, policy: CachePolicy) -> Result<Self> {
        let n = client.handshake().n;
        let baseline = client.request(&[SubsetMask::EMPTY])?[0];
        Ok(ValueOracle::with_backend(n, Backend::External(client), baseline, policy))
    }

    fn with_backend(n: usize, backend: Backend, baseline: f64, policy: CachePolicy) -> Self {
        ValueOracle {
            n,
            backend,
            baseline,
            cache: Mutex::new(Cache::new(policy)),
        }
    }

    /// Raw `f(X_∅)` that was subtracted from every value.
    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    /// Adapter name for subprocess oracles.
    pub fn name(&self) -> Option<&str> {
        match &self.backend {
            Backend::External(c) => Some(&c.handshake().name),
            _ => None,
        }
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.lock().expect("cache lock poisoned").len()
    }

    fn fetch(&self, subsets: &[SubsetMask]) -> Result<Vec<f64>> {
        match &self.backend {
            Backend::Table(t) => t.batch_values(subsets),
            Backend::Synthetic(g) => g.batch_values(subsets),
            Backend::External(c) => Ok(c
                .request(subsets)?
                .into_iter()
                .zip(subsets)
                .map(|(raw, s)| if s.is_empty() { 0.0 } else { raw - self.baseline })
                .collect()),
        }
    }
}

impl SetFunction for ValueOracle {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, subset: SubsetMask) -> Result<f64> {
        Ok(self.batch_values(&[subset])?[0])
    }

    fn batch_values(&self, subsets: &[SubsetMask]) -> Result<Vec<f64>> {
        for &s in subsets {
            check_subset_fits(s, self.n)?;
        }
        let mut out: Vec<Option<f64>> = vec![None; subsets.len()];
        let mut missing: Vec<SubsetMask> = Vec::new();
        {
            let mut cache = self.cache.lock().expect("cache lock poisoned");
            for (slot, s) in out.iter_mut().zip(subsets) {
                if s.is_empty() {
                    *slot = Some(0.0);
                } else if let Some(v) = cache.get(s) {
                    *slot = Some(v);
                } else {
                    missing.push(*s);
                }
            }
        }
        if !missing.is_empty() {
            missing.sort_unstable();
            missing.dedup();
            let fetched = self.fetch(&missing)?;
            let found: HashMap<SubsetMask, f64> = missing.iter().copied().zip(fetched).collect();
            let mut cache = self.cache.lock().expect("cache lock poisoned");
            for (&s, &v) in &found {
                cache.insert(s, v);
            }
            for (slot, s) in out.iter_mut().zip(subsets) {
                if slot.is_none() {
                    *slot = found.get(s).copied();
                }
            }
        }
        out.into_iter()
            .map(|v| v.ok_or_else(|| Error::Oracle("value missing after fetch".into())))
            .collect()
    }
}
