//! Relevance of logical queries over input features.
//!
//! A scalar model evaluated on masked inputs is a set function `v(S)`.
//! Its Harsanyi dividends `μ_L` split the prediction into one term per
//! feature subset; a query built from feature-set atoms with `∧` and `¬`
//! selects the terms it is true on, and a weight vector decides how much
//! of each selected term the query receives.
//!
//! The crate is `no_std` (it needs `alloc`). IO, subprocess oracles and
//! the command-line front end live in the `symq` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;

pub mod decomposition;
pub mod flipping;
pub mod game;
pub mod lattice;
pub mod query;
pub mod relevance;
pub mod search;

pub use decomposition::{
    check_walk_equivalence, conservation_residual, decompose_from_walks, decompose_perturbation,
    DecompositionSource, MultiOrderDecomposition, Walk, WalkRelevanceSet,
};
pub use error::{Error, Result};
pub use flipping::{
    compare_methods, first_order_direction, first_order_order, random_order, run_flip, symbxai_order, AreaRow,
    ComparisonReport, CurveRecord, FlipCurve, FlipMethod, FlipTask, GreedyTrace, Objective,
};
pub use game::{SetFunction, SyntheticGame, SyntheticSpec, TableGame};
pub use lattice::{mobius_transform, zeta_transform, LatticeSupport, SubsetMask, SupportMode};
pub use query::{parse, FilterVector, Query, QueryParser, Vocabulary};
pub use relevance::{
    query_relevance, query_set_shapley, shapley_values, QuerySetShapley, RelevanceEngine,
    Strictness, WeightVector,
};
pub use search::{
    find_best_queries, generate_space, weighted_correlation, QuerySpaceSpec, ScoredQuery,
    SearchResult,
};
