//! Wall-time scaling of the history- and goal-based metrics over fact table
//! size and history length.

use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gen::{generate_star, FIRST_YEAR, LAST_YEAR, REGIONS};
use crate::context::Goal;
use crate::engine::{AggFn, Aggregate, AtomicFilter, CubeQuery, DetailedCube, SelectionCondition};
use crate::error::Result;
use crate::exec::Exec;
use crate::novelty::{pden, Basis};
use crate::peculiarity::jaccard_peculiarity;
use crate::relevance::{detailed_relevance, multi_goal_gbdsr, Mode};

pub const METRICS: [&str; 4] = ["pden", "pder", "jaccard", "gbdsr"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub base_sizes: Vec<usize>,
    pub history_sizes: Vec<usize>,
    pub seed: u64,
    pub repetitions: usize,
    pub exec: Exec,
    /// A repetition repeats a fast operation until at least this long.
    pub min_batch_ms: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            base_sizes: vec![10_000, 100_000, 1_000_000],
            history_sizes: vec![1, 5, 10],
            seed: 7,
            repetitions: 5,
            exec: Exec::Sequential,
            min_batch_ms: 5.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchCell {
    pub metric: String,
    pub base_size: usize,
    pub history_size: usize,
    pub median_ms: f64,
    pub score: f64,
}

/// Observed time ratio between two points of one axis, next to the ratio a
/// linear cost model predicts. On the history axis the model is `1 + h`
/// scans, the assessed query's own plus one per history query.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingRatio {
    pub metric: String,
    pub axis: String,
    pub fixed: usize,
    pub from: usize,
    pub to: usize,
    pub observed: f64,
    pub linear: f64,
    /// `observed / linear`; 1 is exactly linear.
    pub normalized: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub cells: Vec<BenchCell>,
    pub ratios: Vec<ScalingRatio>,
}

impl BenchReport {
    pub fn median(&self, metric: &str, base: usize, history: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.metric == metric && c.base_size == base && c.history_size == history)
            .map(|c| c.median_ms)
    }
}

/// Median over `reps` of the per-call time in milliseconds; each repetition
/// batches calls until `min_ms` has elapsed.
pub fn time_median(reps: usize, min_ms: f64, mut f: impl FnMut() -> f64) -> (f64, f64) {
    let mut score = f();
    let mut times = Vec::with_capacity(reps.max(1));
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        let mut calls = 0u32;
        loop {
            score = f();
            calls += 1;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            if ms >= min_ms {
                times.push(ms / calls as f64);
                break;
            }
        }
    }
    (crate::surprise::median(&times), score)
}

fn avg_amt() -> Vec<Aggregate> {
    vec![Aggregate {
        func: AggFn::Avg,
        measure: 0,
    }]
}

fn years(rng: &mut ChaCha8Rng, n: usize) -> AtomicFilter {
    let span = (LAST_YEAR - FIRST_YEAR + 1) as usize;
    AtomicFilter::new(2, 2, sample(rng, span, n).into_iter().map(|y| y as u32))
}

fn regions(rng: &mut ChaCha8Rng, n: usize) -> AtomicFilter {
    AtomicFilter::new(0, 2, sample(rng, REGIONS.len(), n).into_iter().map(|r| r as u32))
}

/// The assessed query, a history of `n` queries, and a goal, all drawn
/// from the seed. Histories for smaller `n` are prefixes of larger ones.
pub fn bench_workload(seed: u64, n: usize) -> (CubeQuery, Vec<CubeQuery>, Goal) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let groupers = vec![1, 1, 1];
    let q = CubeQuery::new(
        SelectionCondition::new(vec![years(&mut rng, 2)]).expect("one atom"),
        groupers.clone(),
        avg_amt(),
    );
    let goal = Goal {
        condition: SelectionCondition::new(vec![regions(&mut rng, 3)]).expect("one atom"),
    };
    let history = (0..n)
        .map(|_| {
            let k = rng.gen_range(2..=4);
            let atoms = vec![regions(&mut rng, k), years(&mut rng, 2)];
            CubeQuery::new(
                SelectionCondition::new(atoms).expect("distinct dims"),
                groupers.clone(),
                avg_amt(),
            )
        })
        .collect();
    (q, history, goal)
}

fn measure_cube(
    cube: &DetailedCube,
    cfg: &BenchConfig,
    base: usize,
    cells: &mut Vec<BenchCell>,
) -> Result<()> {
    let max_h = cfg.history_sizes.iter().copied().max().unwrap_or(0);
    let (q, history, goal) = bench_workload(cfg.seed, max_h);
    let exec = cfg.exec;
    for &h in &cfg.history_sizes {
        let hist: Vec<&CubeQuery> = history[..h].iter().collect();
        let goals = std::slice::from_ref(&goal);
        for metric in METRICS {
            let mut failure = None;
            let (ms, score) = time_median(cfg.repetitions, cfg.min_batch_ms, || {
                let r = match metric {
                    "pden" => pden(cube, &q, &hist, exec).map(|c| c.novelty()),
                    "pder" => detailed_relevance(cube, &q, &hist, Mode::Partial, Basis::Extensional, exec),
                    "jaccard" => jaccard_peculiarity(cube, &q, &hist, 1, exec),
                    _ => Ok(multi_goal_gbdsr(cube.schema(), &q, goals).0),
                };
                r.unwrap_or_else(|e| {
                    failure = Some(e);
                    f64::NAN
                })
            });
            if let Some(e) = failure {
                return Err(e);
            }
            cells.push(BenchCell {
                metric: metric.to_string(),
                base_size: base,
                history_size: h,
                median_ms: ms,
                score,
            });
        }
    }
    Ok(())
}

/// Times every metric on every (base size, history size) pair and derives
/// consecutive scaling ratios along both axes.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    let mut cells = Vec::new();
    for &base in &cfg.base_sizes {
        let cube = generate_star(base, cfg.seed).cube()?;
        measure_cube(&cube, cfg, base, &mut cells)?;
    }
    let report = BenchReport {
        config: cfg.clone(),
        cells,
        ratios: Vec::new(),
    };
    let mut ratios = Vec::new();
    for metric in METRICS {
        for &h in &cfg.history_sizes {
            for w in cfg.base_sizes.windows(2) {
                let (a, b) = (w[0], w[1]);
                if let (Some(ta), Some(tb)) = (report.median(metric, a, h), report.median(metric, b, h)) {
                    // goal relevance never reads facts
                    let linear = if metric == "gbdsr" { 1.0 } else { b as f64 / a as f64 };
                    ratios.push(ScalingRatio {
                        metric: metric.into(),
                        axis: "base_size".into(),
                        fixed: h,
                        from: a,
                        to: b,
                        observed: tb / ta,
                        linear,
                        normalized: tb / ta / linear,
                    });
                }
            }
        }
        for &base in &cfg.base_sizes {
            for w in cfg.history_sizes.windows(2) {
                let (a, b) = (w[0], w[1]);
                if let (Some(ta), Some(tb)) = (report.median(metric, base, a), report.median(metric, base, b)) {
                    let linear = if metric == "gbdsr" { 1.0 } else { (1 + b) as f64 / (1 + a) as f64 };
                    ratios.push(ScalingRatio {
                        metric: metric.into(),
                        axis: "history_size".into(),
                        fixed: base,
                        from: a,
                        to: b,
                        observed: tb / ta,
                        linear,
                        normalized: tb / ta / linear,
                    });
                }
            }
        }
    }
    Ok(BenchReport { ratios, ..report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workload_prefixes_and_small_run() {
        let (q1, h5, g1) = bench_workload(3, 5);
        let (q2, h10, g2) = bench_workload(3, 10);
        assert_eq!(q1, q2);
        assert_eq!(h5[..], h10[..5]);
        assert_eq!(g1.condition, g2.condition);
        let cfg = BenchConfig {
            base_sizes: vec![500, 1000],
            history_sizes: vec![1, 2],
            repetitions: 1,
            min_batch_ms: 0.0,
            ..BenchConfig::default()
        };
        let r = run_benchmark(&cfg).unwrap();
        assert_eq!(r.cells.len(), 2 * 2 * METRICS.len());
        assert_eq!(r.ratios.len(), METRICS.len() * (2 + 2));
        assert!(r.cells.iter().all(|c| (0.0..=1.0).contains(&c.score)));
    }
}
