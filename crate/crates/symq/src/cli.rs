//! Command definitions and runners for the `symq` binary.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use symq_core::decomposition::MultiOrderDecomposition;
use symq_core::flipping::{compare_methods, FlipMethod};
use symq_core::{
    conservation_residual, decompose_from_walks, decompose_perturbation, find_best_queries,
    query_set_shapley, shapley_values, LatticeSupport, Query, QueryParser, QuerySpaceSpec,
    RelevanceEngine, SetFunction, Strictness, SubsetMask, SupportMode, Vocabulary,
    WalkRelevanceSet, WeightVector,
};

use crate::external::timeout_from_env;
use crate::formats::{self, SyntheticConfig};
use crate::oracle::{CachePolicy, ValueOracle, DEFAULT_LRU_CAPACITY};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "symq", version, about = "Relevance of logical queries over model inputs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump the multi-order decomposition of the model output.
    Decompose {
        #[command(flatten)]
        config: RunConfig,
    },
    /// Relevance of one or more queries.
    Relevance {
        #[command(flatten)]
        config: RunConfig,
        /// Query expression, e.g. `{0} & !{1,2}` (repeatable).
        #[arg(long = "query", required = true)]
        queries: Vec<String>,
        /// With query-shapley weights, give uncovered subsets zero weight
        /// instead of failing.
        #[arg(long)]
        permissive: bool,
    },
    /// Rank queries by correlation with the decomposition.
    Search {
        #[command(flatten)]
        config: RunConfig,
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
    },
    /// Compare feature orderings on removal and generation curves.
    Flip {
        #[command(flatten)]
        config: RunConfig,
        /// Comma-separated: symbxai, occlusion, shapley, random, or a name
        /// given with --scores.
        #[arg(long, default_value = "symbxai,occlusion,random")]
        methods: String,
        /// First-order scores for a method, as NAME=FILE (repeatable).
        #[arg(long = "scores")]
        scores: Vec<String>,
        /// Include every curve in the output.
        #[arg(long)]
        curves: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightsArg {
    Occlusion,
    Shapley,
    QueryShapley,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["table", "oracle_cmd", "synthetic", "walks"])))]
pub struct RunConfig {
    /// Table file: {"n": .., "values": {"<indices>": value}}.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Adapter command speaking the line-delimited JSON oracle protocol.
    #[arg(long)]
    pub oracle_cmd: Option<String>,
    /// Synthetic game as JSON, or @FILE.
    #[arg(long)]
    pub synthetic: Option<String>,
    /// Walk relevances, one JSON object per line (needs --n).
    #[arg(long)]
    pub walks: Option<PathBuf>,
    /// Feature count; checked against the source when it has its own.
    #[arg(long)]
    pub n: Option<usize>,
    /// Use every subset.
    #[arg(long, conflicts_with = "max_order")]
    pub full: bool,
    /// Keep subsets of at most this many features.
    #[arg(long, default_value_t = 4)]
    pub max_order: usize,
    #[arg(long, value_enum, default_value_t = WeightsArg::Occlusion)]
    pub weights: WeightsArg,
    /// Ordered tokens, one per line, naming the features.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpaceArgs {
    /// `singletons`, `consecutive:W`, or atoms separated by `;` (e.g. `{0,1};2`).
    #[arg(long, default_value = "singletons")]
    pub atoms: String,
    #[arg(long, default_value_t = 2)]
    pub max_conjunctions: usize,
    #[arg(long)]
    pub no_negations: bool,
    /// Let atoms in one query share features.
    #[arg(long)]
    pub allow_overlap: bool,
    /// Require atoms to be contiguous index ranges.
    #[arg(long)]
    pub consecutive: bool,
    #[arg(long, default_value_t = symq_core::search::DEFAULT_SPACE_CAP)]
    pub space_cap: usize,
}

enum Source {
    Oracle(ValueOracle),
    Walks(WalkRelevanceSet),
}

impl Source {
    fn n(&self) -> usize {
        match self {
            Source::Oracle(o) => o.n(),
            Source::Walks(w) => w.n(),
        }
    }
}

impl RunConfig {
    fn mode(&self) -> SupportMode {
        if self.full {
            SupportMode::Full
        } else {
            SupportMode::Truncated(self.max_order)
        }
    }

    fn vocabulary(&self) -> Result<Option<Vocabulary>> {
        self.vocab.as_deref().map(formats::read_vocabulary).transpose()
    }

    fn open(&self) -> Result<Source> {
        let source = if let Some(path) = &self.table {
            Source::Oracle(ValueOracle::table(formats::read_table(path)?))
        } else if let Some(spec) = &self.synthetic {
            Source::Oracle(ValueOracle::synthetic(SyntheticConfig::load(spec)?.build(self.seed)?))
        } else if let Some(cmd) = &self.oracle_cmd {
            let policy = if self.full {
                CachePolicy::Unbounded
            } else {
                CachePolicy::Lru(DEFAULT_LRU_CAPACITY)
            };
            Source::Oracle(ValueOracle::external(cmd, timeout_from_env(), policy)?)
        } else if let Some(path) = &self.walks {
            let n = self
                .n
                .ok_or_else(|| Error::Usage("--walks needs --n".into()))?;
            Source::Walks(formats::read_walks(path, n)?)
        } else {
            return Err(Error::Usage("no model source given".into()));
        };
        if let Some(n) = self.n {
            if n != source.n() {
                return Err(symq_core::Error::FeatureCountMismatch {
                    expected: n,
                    found: source.n(),
                }
                .into());
            }
        }
        Ok(source)
    }

    fn support(&self, n: usize) -> Result<LatticeSupport> {
        let mode = match self.mode() {
            SupportMode::Truncated(k) if k > n => SupportMode::Truncated(n),
            m => m,
        };
        Ok(LatticeSupport::enumerate(n, mode)?)
    }

    fn decompose(&self, source: &Source) -> Result<MultiOrderDecomposition> {
        let support = self.support(source.n())?;
        Ok(match source {
            Source::Oracle(o) => decompose_perturbation(o, &support)?,
            Source::Walks(w) => decompose_from_walks(w, &support)?,
        })
    }

    fn emit(&self, value: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
        text.push('\n');
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            }),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|source| Error::Io {
                        path: "<stdout>".into(),
                        source,
                    })
            }
        }
    }
}

fn parse_query(text: &str, vocab: Option<&Vocabulary>, n: usize) -> Result<Query> {
    let mut parser = QueryParser::new().feature_count(n);
    if let Some(v) = vocab {
        parser = parser.vocabulary(v);
    }
    Ok(parser.parse(text)?)
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Decompose { config } => cmd_decompose(&config),
        Command::Relevance {
            config,
            queries,
            permissive,
        } => cmd_relevance(&config, &queries, permissive),
        Command::Search {
            config,
            space,
            top_k,
        } => cmd_search(&config, &space, top_k),
        Command::Flip {
            config,
            methods,
            scores,
            curves,
        } => cmd_flip(&config, &methods, &scores, curves),
    }
}

pub fn cmd_decompose(config: &RunConfig) -> Result<()> {
    let source = config.open()?;
    let d = config.decompose(&source)?;
    let residual = match &source {
        Source::Oracle(o) => Some(conservation_residual(&d, o)?),
        Source::Walks(_) => None,
    };
    config.emit(&formats::decomposition_json(&d, residual))
}

pub fn cmd_relevance(config: &RunConfig, texts: &[String], permissive: bool) -> Result<()> {
    let vocab = config.vocabulary()?;
    let source = config.open()?;
    let n = source.n();
    let queries = texts
        .iter()
        .map(|t| parse_query(t, vocab.as_ref(), n))
        .collect::<Result<Vec<_>>>()?;
    let d = config.decompose(&source)?;
    let mode = d.support().mode();
    let strictness = if permissive {
        Strictness::Permissive
    } else {
        Strictness::Strict
    };
    let (values, weights) = match config.weights {
        WeightsArg::QueryShapley => {
            let r = query_set_shapley(&d, &queries, strictness)?;
            if r.uncovered_mass != 0.0 {
                eprintln!("note: {} of the decomposition mass is covered by no query", r.uncovered_mass);
            }
            (r.values, "query-shapley")
        }
        w => {
            let eta = match w {
                WeightsArg::Shapley => WeightVector::ClassicShapley,
                _ => WeightVector::Occlusion,
            };
            let engine = RelevanceEngine::new(&d, &eta)?;
            let values = queries
                .iter()
                .map(|q| engine.relevance(q))
                .collect::<symq_core::Result<Vec<_>>>()?;
            (values, eta.name())
        }
    };
    let records: Vec<Value> = queries
        .iter()
        .zip(values)
        .map(|(q, a)| formats::relevance_record(&q.canonical_string(vocab.as_ref()), a, weights, mode))
        .collect();
    config.emit(&Value::Array(records))
}

fn parse_atoms(spec: &str, vocab: Option<&Vocabulary>, n: usize) -> Result<Vec<SubsetMask>> {
    let spec = spec.trim();
    if spec == "singletons" {
        return Ok(QuerySpaceSpec::singletons(n).atoms);
    }
    if let Some(w) = spec.strip_prefix("consecutive:") {
        let w: usize = w
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("bad atom width in `{spec}`")))?;
        return Ok(QuerySpaceSpec::consecutive(n, w).atoms);
    }
    spec.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| match parse_query(item, vocab, n)? {
            Query::Atom(s) => Ok(s),
            _ => Err(Error::Usage(format!("`{item}` is not a single atom"))),
        })
        .collect()
}

pub fn cmd_search(config: &RunConfig, space: &SpaceArgs, top_k: usize) -> Result<()> {
    let vocab = config.vocabulary()?;
    let source = config.open()?;
    let n = source.n();
    let mut spec = QuerySpaceSpec::new(parse_atoms(&space.atoms, vocab.as_ref(), n)?);
    spec.max_conjunctions = space.max_conjunctions;
    spec.allow_negated_literals = !space.no_negations;
    spec.disjoint_literals = !space.allow_overlap;
    spec.consecutive_atoms_only = space.consecutive;
    spec.max_queries = space.space_cap;
    let eta = match config.weights {
        WeightsArg::Occlusion => WeightVector::Occlusion,
        WeightsArg::Shapley => WeightVector::ClassicShapley,
        WeightsArg::QueryShapley => {
            return Err(Error::Usage("search supports occlusion or shapley weights".into()))
        }
    };
    let d = config.decompose(&source)?;
    let result = find_best_queries(&d, &spec, &eta, top_k)?;
    config.emit(&formats::search_json(&result, vocab.as_ref()))
}

pub fn cmd_flip(config: &RunConfig, methods: &str, scores: &[String], curves: bool) -> Result<()> {
    let source = config.open()?;
    let oracle = match &source {
        Source::Oracle(o) => o,
        Source::Walks(_) => {
            return Err(Error::Usage("flip needs a model source, not walk relevances".into()))
        }
    };
    let n = oracle.n();
    let mut score_files = Vec::new();
    for item in scores {
        let (name, path) = item
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--scores expects NAME=FILE, got `{item}`")))?;
        score_files.push((name.trim().to_string(), PathBuf::from(path)));
    }
    let d = config.decompose(&source)?;

    let mut table = Vec::new();
    for name in methods.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let method = if let Some((_, path)) = score_files.iter().find(|(m, _)| m == name) {
            FlipMethod::FirstOrder(formats::read_scores(path)?)
        } else {
            match name {
                "symbxai" => FlipMethod::SymbXai,
                "random" => FlipMethod::Random { seed: config.seed },
                "occlusion" => FlipMethod::FirstOrder(occlusion_scores(oracle)?),
                "shapley" => FlipMethod::FirstOrder(shapley_values(&d)),
                other => {
                    return Err(Error::Usage(format!(
                        "method `{other}` needs a scores file (--scores {other}=FILE)"
                    )))
                }
            }
        };
        if let FlipMethod::FirstOrder(s) = &method {
            if s.len() != n {
                return Err(Error::Format(format!(
                    "method `{name}` has {} scores for {n} features",
                    s.len()
                )));
            }
        }
        table.push((name.to_string(), method));
    }
    if table.is_empty() {
        return Err(Error::Usage("no methods given".into()));
    }
    let report = compare_methods(oracle, &d, &table)?;
    config.emit(&formats::flip_json(&report, curves))
}

/// `v(N) − v(N ∖ {i})` for every feature.
fn occlusion_scores<G: SetFunction>(game: &G) -> Result<Vec<f64>> {
    let n = game.n();
    let full = SubsetMask::full(n);
    let mut sets = vec![full];
    sets.extend((0..n).map(|i| full.without(i)));
    let v = game.batch_values(&sets)?;
    Ok(v[1..].iter().map(|x| v[0] - x).collect())
}
