//! Interestingness reports, synthetic data and scaling benchmarks.

mod bench;
mod gen;

pub use bench::{
    bench_workload, run_benchmark, time_median, BenchCell, BenchConfig, BenchReport, ScalingRatio,
    METRICS,
};
pub use gen::{calendar, generate_star, GeneratedStar, ACCOUNTS, DISTRICTS, REGIONS};

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::context::{filter_history_same_measures, SessionContext};
use crate::engine::{evaluate, CellSet, CubeQuery, DetailedCube};
use crate::error::Result;
use crate::exec::Exec;
use crate::novelty::{self, Basis, BeliefMode};
use crate::peculiarity::{self, Aggregation, DistanceWeights, ValueDistance, PAIR_CAP};
use crate::qlang::query_text;
use crate::relevance::{self, Mode};
use crate::surprise::{self, LabelMode, ProbabilityMode, SurpriseAgg, SurpriseConfig};

pub const GROUPS: [&str; 4] = ["novelty", "relevance", "peculiarity", "surprise"];

#[derive(Debug, Clone, Serialize)]
pub struct AssessConfig {
    /// Groups (`novelty`) or single metrics (`novelty.pden`) to compute;
    /// `None` computes everything.
    pub metrics: Option<Vec<String>>,
    pub pi: f64,
    pub k: usize,
    pub weights: DistanceWeights,
    pub aggregation: Aggregation,
    pub exec: Exec,
    pub pair_cap: u128,
}

impl Default for AssessConfig {
    fn default() -> Self {
        AssessConfig {
            metrics: None,
            pi: 0.5,
            k: 2,
            weights: DistanceWeights::default(),
            aggregation: Aggregation::Average,
            exec: Exec::default(),
            pair_cap: PAIR_CAP,
        }
    }
}

impl AssessConfig {
    fn wants(&self, group: &str, key: &str) -> bool {
        match &self.metrics {
            None => true,
            Some(list) => list.iter().any(|m| {
                let m = m.trim();
                m.eq_ignore_ascii_case(group) || m.eq_ignore_ascii_case(&format!("{group}.{key}"))
            }),
        }
    }
}

/// One interestingness dimension: its headline score and every variant.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ScoreGroup {
    pub headline: Option<f64>,
    pub headline_metric: String,
    #[serde(flatten)]
    pub variants: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Scores {
    pub novelty: ScoreGroup,
    pub relevance: ScoreGroup,
    pub peculiarity: ScoreGroup,
    pub surprise: ScoreGroup,
}

impl Scores {
    /// Headlines in the order novelty, relevance, surprise, peculiarity.
    pub fn vector(&self) -> [Option<f64>; 4] {
        [
            self.novelty.headline,
            self.relevance.headline,
            self.surprise.headline,
            self.peculiarity.headline,
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InterestReport {
    pub query: String,
    pub scores: Scores,
    pub timings_ms: BTreeMap<String, f64>,
    pub config: AssessConfig,
    pub diagnostics: Vec<String>,
}

struct Collector<'a> {
    cfg: &'a AssessConfig,
    group: &'static str,
    variants: BTreeMap<String, Option<f64>>,
    timings: &'a mut BTreeMap<String, f64>,
    diagnostics: &'a mut Vec<String>,
}

impl Collector<'_> {
    /// Runs one metric if selected. `Ok(None)` means its inputs are absent;
    /// an error is recorded as a diagnostic and reported as null.
    fn run(&mut self, key: &str, f: impl FnOnce() -> Result<Option<f64>>) {
        if !self.cfg.wants(self.group, key) {
            return;
        }
        let name = format!("{}.{key}", self.group);
        let start = Instant::now();
        let out = f();
        self.timings.insert(name.clone(), start.elapsed().as_secs_f64() * 1e3);
        let v = match out {
            Ok(v) => v,
            Err(e) => {
                self.diagnostics.push(format!("{name}: {e}"));
                None
            }
        };
        self.variants.insert(key.to_string(), v);
    }

    fn finish(self, headline: &str) -> ScoreGroup {
        ScoreGroup {
            headline: self.variants.get(headline).copied().flatten(),
            headline_metric: headline.to_string(),
            variants: self.variants,
        }
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Scores `q` along every dimension against the session context.
///
/// Headlines: detailed extensional novelty; goal relevance when goals exist,
/// otherwise detailed extensional relevance; average structural
/// peculiarity; normalized average value surprise on the first aggregate.
pub fn interestingness_vector(
    cube: &DetailedCube,
    q: &CubeQuery,
    ctx: &SessionContext,
    cfg: &AssessConfig,
) -> Result<InterestReport> {
    q.validate(cube)?;
    let schema = cube.schema();
    let exec = cfg.exec;
    let mut timings = BTreeMap::new();
    let mut diagnostics = Vec::new();

    let start = Instant::now();
    let result: CellSet = evaluate(cube, q, exec)?;
    timings.insert("evaluate".to_string(), start.elapsed().as_secs_f64() * 1e3);

    let all: Vec<&CubeQuery> = ctx.history.queries();
    let filtered_history = filter_history_same_measures(&ctx.history, q);
    let same_measures: Vec<&CubeQuery> = filtered_history.queries();
    let same_level: Vec<&CubeQuery> = all.iter().copied().filter(|h| h.groupers == q.groupers).collect();

    macro_rules! collector {
        ($group:expr) => {
            Collector {
                cfg,
                group: $group,
                variants: BTreeMap::new(),
                timings: &mut timings,
                diagnostics: &mut diagnostics,
            }
        };
    }

    let mut c = collector!("novelty");
    c.run("fslsn", || Ok(Some(novelty::fslsn(q, &all))));
    c.run("pslsn", || {
        Ok(Some(novelty::same_level_novelty(cube, q, &all, Basis::Syntactic, exec)?.novelty()))
    });
    c.run("pslen", || {
        Ok(Some(novelty::same_level_novelty(cube, q, &all, Basis::Extensional, exec)?.novelty()))
    });
    c.run("fsdn", || Ok(Some(novelty::fsdn(schema, q, &same_measures))));
    c.run("pdsn", || Ok(Some(novelty::pdsn(schema, q, &same_measures).novelty())));
    c.run("pden", || Ok(Some(novelty::pden(cube, q, &same_measures, exec)?.novelty())));
    c.run("wdn", || {
        Ok(Some(novelty::pden(cube, q, &same_measures, exec)?.weighted_novelty()))
    });
    let mut skipped = 0;
    c.run("belief", || {
        if ctx.beliefs.is_empty() {
            return Ok(None);
        }
        let b = novelty::belief_novelty(cube, q, &ctx.beliefs, cfg.pi, BeliefMode::Arbitrary, exec)?;
        skipped = b.skipped;
        Ok(Some(b.coverage.novelty()))
    });
    let novelty = c.finish("pden");
    if skipped > 0 {
        diagnostics.push(format!(
            "novelty.belief: {skipped} known cells above the query's levels were skipped"
        ));
    }

    let mut c = collector!("relevance");
    c.run("gbdsr", || {
        if ctx.goals.is_empty() {
            return Ok(None);
        }
        Ok(Some(relevance::multi_goal_gbdsr(schema, q, &ctx.goals).0))
    });
    c.run("fsslr", || {
        Ok(Some(relevance::same_level_relevance(cube, q, &same_level, Mode::Full, Basis::Syntactic, exec)?))
    });
    c.run("psslr", || {
        Ok(Some(relevance::same_level_relevance(cube, q, &same_level, Mode::Partial, Basis::Syntactic, exec)?))
    });
    c.run("fdsr", || {
        Ok(Some(relevance::detailed_relevance(cube, q, &all, Mode::Full, Basis::Syntactic, exec)?))
    });
    c.run("pdsr", || {
        Ok(Some(relevance::detailed_relevance(cube, q, &all, Mode::Partial, Basis::Syntactic, exec)?))
    });
    c.run("pder", || {
        Ok(Some(relevance::detailed_relevance(cube, q, &all, Mode::Partial, Basis::Extensional, exec)?))
    });
    let relevance = c.finish(if ctx.goals.is_empty() { "pder" } else { "gbdsr" });

    let mut c = collector!("peculiarity");
    let nonempty = !all.is_empty();
    c.run("syntactic", || {
        if !nonempty {
            return Ok(None);
        }
        Ok(Some(peculiarity::syntactic_peculiarity(schema, q, &all, cfg.aggregation, &cfg.weights)?))
    });
    let value_keys = [("value_cr", ValueDistance::ClosestRelative), ("value_hausdorff", ValueDistance::Hausdorff)];
    let mut others: Option<Vec<CellSet>> = None;
    if nonempty && value_keys.iter().any(|(k, _)| cfg.wants("peculiarity", k)) {
        let start = Instant::now();
        let evaluated: Result<Vec<CellSet>> =
            (0..ctx.history.len()).map(|i| ctx.history.result(cube, i, exec)).collect();
        c.timings
            .insert("peculiarity.history_results".into(), start.elapsed().as_secs_f64() * 1e3);
        match evaluated {
            Ok(v) => others = Some(v),
            Err(e) => c.diagnostics.push(format!("peculiarity: history evaluation failed: {e}")),
        }
    }
    for (key, kind) in value_keys {
        c.run(key, || match &others {
            Some(others) => Ok(Some(peculiarity::value_peculiarity(
                schema, &result, others, kind, cfg.aggregation, cfg.pair_cap, exec,
            )?)),
            None => Ok(None),
        });
    }
    c.run("jaccard", || {
        if !nonempty {
            return Ok(None);
        }
        Ok(Some(peculiarity::jaccard_peculiarity(cube, q, &all, cfg.k, exec)?))
    });
    let peculiarity = c.finish("syntactic");

    let mut c = collector!("surprise");
    let columns: Vec<usize> = q.aggregates.iter().map(|a| a.measure).collect();
    let expected = ctx.expected.as_ref();
    c.run("value", || {
        Ok(expected.and_then(|e| surprise::value_surprise(&result, e, &SurpriseConfig::default())))
    });
    c.run("value_avg_norm", || {
        Ok(expected.and_then(|e| surprise::avg_value_surprise_normalized(&result, e, 0)))
    });
    for (key, mode) in [("prob_exact", ProbabilityMode::Exact), ("prob_interval", ProbabilityMode::Interval)] {
        c.run(key, || {
            Ok(surprise::cube_probability_surprise(&result, &columns, &ctx.beliefs, mode))
        });
    }
    let labelled = ctx.labels.as_ref().zip(ctx.expected_labels.as_ref());
    c.run("label", || match labelled {
        Some((scheme, exp)) => {
            surprise::label_surprise(&result, exp, scheme, SurpriseAgg::Max, SurpriseAgg::Mean)
        }
        None => Ok(None),
    });
    c.run("label_strict", || match labelled {
        Some((scheme, exp)) => Ok(Some(flag(surprise::strict_label_surprise(&result, exp, scheme)?))),
        None => Ok(None),
    });
    for (key, mode) in [("label_prob_strict", LabelMode::Strict), ("label_prob_loose", LabelMode::Loose)] {
        c.run(key, || match &ctx.labels {
            Some(scheme) => {
                surprise::cube_prob_label_surprise(&result, &columns, &ctx.beliefs, scheme, mode)
            }
            None => Ok(None),
        });
    }
    let surprise = c.finish("value_avg_norm");

    Ok(InterestReport {
        query: query_text(cube, q),
        scores: Scores {
            novelty,
            relevance,
            peculiarity,
            surprise,
        },
        timings_ms: timings,
        config: cfg.clone(),
        diagnostics,
    })
}
