//! Removal and generation curves and the orderings that drive them.
//!
//! A removal curve tracks `v(N ∖ {I_1..I_j})` and a generation curve
//! `v({I_1..I_j})` for `j = 0..n`. The area of a curve is the mean of its
//! `n + 1` values.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::decomposition::MultiOrderDecomposition;
use crate::game::SetFunction;
use crate::lattice::SubsetMask;
use crate::query::Query;
use crate::relevance::{RelevanceEngine, WeightVector};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FlipTask {
    Removal,
    Generation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Objective {
    Minimize,
    Maximize,
}

impl FlipTask {
    pub fn name(self) -> &'static str {
        match self {
            FlipTask::Removal => "removal",
            FlipTask::Generation => "generation",
        }
    }
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Minimize => "min",
            Objective::Maximize => "max",
        }
    }
}

/// The four evaluation settings in report order.
pub const SETTINGS: [(FlipTask, Objective); 4] = [
    (FlipTask::Removal, Objective::Minimize),
    (FlipTask::Removal, Objective::Maximize),
    (FlipTask::Generation, Objective::Minimize),
    (FlipTask::Generation, Objective::Maximize),
];

#[derive(Clone, Debug, PartialEq)]
pub struct FlipCurve {
    pub task: FlipTask,
    pub order: Vec<usize>,
    /// `n + 1` values, step `j = 0..n`.
    pub values: Vec<f64>,
    pub area: f64,
}

/// A greedy ordering and the value its predictor anticipated at each step.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyTrace {
    pub order: Vec<usize>,
    /// `predicted[j]` belongs to the set after the `j + 1`-th pick.
    pub predicted: Vec<f64>,
}

/// Predictor query for the set `s` of flipped features: `¬S` when
/// removing, `S ∧ ¬S̄` when generating.
fn predictor_query(task: FlipTask, s: SubsetMask, n: usize) -> Query {
    match task {
        FlipTask::Removal => Query::not(Query::Atom(s)),
        FlipTask::Generation => {
            let rest = s.complement(n);
            if rest.is_empty() {
                Query::Atom(s)
            } else {
                Query::and(Query::Atom(s), Query::not(Query::Atom(rest)))
            }
        }
    }
}

/// Local-best-guess ordering under occlusion weights: at each step pick the
/// feature whose predictor relevance is smallest (`Minimize`) or largest
/// (`Maximize`); ties go to the smallest index.
pub fn symbxai_order(
    mu: &MultiOrderDecomposition,
    task: FlipTask,
    objective: Objective,
) -> Result<GreedyTrace> {
    let n = mu.n();
    let engine = RelevanceEngine::new(mu, &WeightVector::Occlusion)?;
    let mut chosen = SubsetMask::EMPTY;
    let mut order = Vec::with_capacity(n);
    let mut predicted = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !chosen.contains(i)) {
            let a = engine.relevance(&predictor_query(task, chosen.with(i), n))?;
            let better = match best {
                None => true,
                Some((_, b)) => match objective {
                    Objective::Minimize => a < b,
                    Objective::Maximize => a > b,
                },
            };
            if better {
                best = Some((i, a));
            }
        }
        let (i, a) = best.expect("at least one feature remains");
        chosen = chosen.with(i);
        order.push(i);
        predicted.push(a);
    }
    Ok(GreedyTrace { order, predicted })
}

/// Features sorted by score, descending for `Maximize` and ascending for
/// `Minimize`; ties keep index order.
pub fn first_order_order(scores: &[f64], objective: Objective) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let c = scores[a].total_cmp(&scores[b]);
        match objective {
            Objective::Minimize => c,
            Objective::Maximize => c.reverse(),
        }
        .then(a.cmp(&b))
    });
    order
}

/// The sort direction a first-order method uses for a setting: lowering a
/// removal curve starts with the most relevant feature, lowering a
/// generation curve with the least relevant one.
pub fn first_order_direction(task: FlipTask, objective: Objective) -> Objective {
    match (task, objective) {
        (FlipTask::Removal, Objective::Minimize) | (FlipTask::Generation, Objective::Maximize) => {
            Objective::Maximize
        }
        _ => Objective::Minimize,
    }
}

/// Uniform random permutation of `0..n`.
pub fn random_order(n: usize, seed: u64, stream: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    let mut seen = SubsetMask::EMPTY;
    if order.len() != n {
        return Err(Error::NotAPermutation { n });
    }
    for &i in order {
        if i >= n || seen.contains(i) {
            return Err(Error::NotAPermutation { n });
        }
        seen = seen.with(i);
    }
    Ok(())
}

/// Evaluates the curve for `order` on `game`.
pub fn run_flip<G: SetFunction + ?Sized>(game: &G, order: &[usize], task: FlipTask) -> Result<FlipCurve> {
    let n = game.n();
    check_permutation(order, n)?;
    let mut sets = Vec::with_capacity(n + 1);
    let mut s = SubsetMask::EMPTY;
    sets.push(s);
    for &i in order {
        s = s.with(i);
        sets.push(s);
    }
    if task == FlipTask::Removal {
        let full = SubsetMask::full(n);
        for x in sets.iter_mut() {
            *x = full.difference(*x);
        }
    }
    let values = game.batch_values(&sets)?;
    let area = values.iter().sum::<f64>() / values.len() as f64;
    Ok(FlipCurve {
        task,
        order: order.to_vec(),
        values,
        area,
    })
}

/// How a row of the comparison picks its feature order.
#[derive(Clone, Debug, PartialEq)]
pub enum FlipMethod {
    SymbXai,
    /// A first-order attribution, one score per feature.
    FirstOrder(Vec<f64>),
    Random { seed: u64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AreaRow {
    pub min_aurc: f64,
    pub max_aurc: f64,
    pub min_augc: f64,
    pub max_augc: f64,
}

impl AreaRow {
    pub fn get(&self, task: FlipTask, objective: Objective) -> f64 {
        match (task, objective) {
            (FlipTask::Removal, Objective::Minimize) => self.min_aurc,
            (FlipTask::Removal, Objective::Maximize) => self.max_aurc,
            (FlipTask::Generation, Objective::Minimize) => self.min_augc,
            (FlipTask::Generation, Objective::Maximize) => self.max_augc,
        }
    }

    fn set(&mut self, task: FlipTask, objective: Objective, area: f64) {
        match (task, objective) {
            (FlipTask::Removal, Objective::Minimize) => self.min_aurc = area,
            (FlipTask::Removal, Objective::Maximize) => self.max_aurc = area,
            (FlipTask::Generation, Objective::Minimize) => self.min_augc = area,
            (FlipTask::Generation, Objective::Maximize) => self.max_augc = area,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveRecord {
    pub method: String,
    pub objective: Objective,
    pub curve: FlipCurve,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<(String, AreaRow)>,
    pub curves: Vec<CurveRecord>,
}

impl ComparisonReport {
    pub fn row(&self, method: &str) -> Option<&AreaRow> {
        self.rows.iter().find(|(m, _)| m == method).map(|(_, r)| r)
    }
}

/// Areas for every method in all four settings.
pub fn compare_methods<G: SetFunction + ?Sized>(
    game: &G,
    mu: &MultiOrderDecomposition,
    methods: &[(String, FlipMethod)],
) -> Result<ComparisonReport> {
    let n = game.n();
    let mut rows = Vec::with_capacity(methods.len());
    let mut curves = Vec::new();
    for (name, method) in methods {
        let mut row = AreaRow::default();
        for (k, &(task, objective)) in SETTINGS.iter().enumerate() {
            let order = match method {
                FlipMethod::SymbXai => symbxai_order(mu, task, objective)?.order,
                FlipMethod::FirstOrder(scores) => {
                    if scores.len() != n {
                        return Err(Error::ShapeMismatch {
                            expected: n,
                            found: scores.len(),
                        });
                    }
                    first_order_order(scores, first_order_direction(task, objective))
                }
                FlipMethod::Random { seed } => random_order(n, *seed, k as u64),
            };
            let curve = run_flip(game, &order, task)?;
            row.set(task, objective, curve.area);
            curves.push(CurveRecord {
                method: name.clone(),
                objective,
                curve,
            });
        }
        rows.push((name.clone(), row));
    }
    Ok(ComparisonReport { rows, curves })
}
