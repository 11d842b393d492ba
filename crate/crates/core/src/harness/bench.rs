use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::RunConfig;
use super::run::Experiment;
use super::trace::{fmt_f64, parse_f64, Trace, ValueKind};
use super::HarnessError;

pub const AGGREGATE_HEADER: &str = "step,grad_evals,median,q25,q75,seeds";

/// RNG for ensemble member `index`: ChaCha8 keyed by `base ^ index`, on
/// stream `index`. Index 0 is what a single `run` uses.
pub fn seed_stream(base: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base ^ index);
    rng.set_stream(index);
    rng
}

/// Nearest-rank quantile of sorted data: the `⌈q·n⌉`-th smallest value
/// (the smallest for `q = 0`).
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    assert!((0.0..=1.0).contains(&q), "quantile level {q} outside [0, 1]");
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub step: u64,
    pub grad_evals: u64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub rows: Vec<AggregateRow>,
    pub seeds: usize,
    /// Set when the traces held raw objective values: the smallest value
    /// seen across the ensemble, subtracted to form empirical gaps.
    pub empirical_reference: Option<f64>,
}

/// Per-checkpoint nearest-rank median and quartiles of `f_gap`. Raw value
/// traces are turned into empirical gaps against the best value seen in
/// the whole ensemble, unless `reference` is given.
pub fn aggregate(traces: &[Trace], reference: Option<f64>) -> Result<Aggregate, HarnessError> {
    let first = traces.first().ok_or_else(|| HarnessError::Config {
        field: "seeds".into(),
        msg: "no traces to aggregate".into(),
    })?;
    for (i, t) in traces.iter().enumerate() {
        let same = t.rows.len() == first.rows.len() && t.rows.iter().zip(&first.rows).all(|(a, b)| a.step == b.step);
        if !same {
            return Err(HarnessError::Config {
                field: "traces".into(),
                msg: format!("trace {i} has different checkpoints than trace 0"),
            });
        }
    }
    let shift = match (first.value_kind, reference) {
        (_, Some(r)) => Some(r),
        (ValueKind::Value, None) => Some(
            traces
                .iter()
                .flat_map(|t| t.rows.iter().map(|r| r.f_gap))
                .fold(f64::INFINITY, f64::min),
        ),
        (ValueKind::Gap, None) => None,
    };
    let mut column = Vec::with_capacity(traces.len());
    let rows = first
        .rows
        .iter()
        .enumerate()
        .map(|(j, row)| {
            column.clear();
            column.extend(traces.iter().map(|t| t.rows[j].f_gap - shift.unwrap_or(0.0)));
            column.sort_by(f64::total_cmp);
            AggregateRow {
                step: row.step,
                grad_evals: row.grad_evals,
                median: nearest_rank(&column, 0.5),
                q25: nearest_rank(&column, 0.25),
                q75: nearest_rank(&column, 0.75),
            }
        })
        .collect();
    Ok(Aggregate {
        rows,
        seeds: traces.len(),
        empirical_reference: if first.value_kind == ValueKind::Value { shift } else { None },
    })
}

impl Aggregate {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(AGGREGATE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.step,
                r.grad_evals,
                fmt_f64(r.median),
                fmt_f64(r.q25),
                fmt_f64(r.q75),
                self.seeds
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, HarnessError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == AGGREGATE_HEADER => {}
            _ => {
                return Err(HarnessError::Csv {
                    line: 1,
                    msg: format!("expected header {AGGREGATE_HEADER:?}"),
                })
            }
        }
        let mut rows = Vec::new();
        let mut seeds = 0;
        for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
            let n = i + 1;
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(HarnessError::Csv {
                    line: n,
                    msg: format!("expected 6 columns, found {}", cols.len()),
                });
            }
            let int = |s: &str, col: &str| {
                s.trim().parse::<u64>().map_err(|_| HarnessError::Csv {
                    line: n,
                    msg: format!("{col}: {s:?} is not a nonnegative integer"),
                })
            };
            seeds = int(cols[5], "seeds")? as usize;
            rows.push(AggregateRow {
                step: int(cols[0], "step")?,
                grad_evals: int(cols[1], "grad_evals")?,
                median: parse_f64(cols[2], n, "median")?,
                q25: parse_f64(cols[3], n, "q25")?,
                q75: parse_f64(cols[4], n, "q75")?,
            });
        }
        Ok(Self {
            rows,
            seeds,
            empirical_reference: None,
        })
    }
}

/// Ensemble output: every member trace plus their aggregate.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub traces: Vec<Trace>,
    pub aggregate: Aggregate,
}

/// Runs members `0..seeds` of the ensemble for `config.seed`, on at most
/// `jobs` threads. The first failing member aborts the ensemble.
pub fn bench(config: &RunConfig, seeds: usize, jobs: Option<usize>) -> Result<Ensemble, HarnessError> {
    if seeds < 2 {
        return Err(HarnessError::Config {
            field: "seeds".into(),
            msg: format!("need at least 2 seeds, got {seeds}"),
        });
    }
    let exp = Experiment::prepare(config)?;
    let base = config.seed;
    let run_one = |i: usize| {
        exp.run_with(&mut seed_stream(base, i as u64)).map_err(|e| HarnessError::Seed {
            index: i,
            seed: base ^ i as u64,
            source: Box::new(e),
        })
    };
    let traces: Result<Vec<Trace>, HarnessError> = match jobs {
        Some(1) => (0..seeds).map(run_one).collect(),
        _ => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .map_err(|e| HarnessError::Config {
                    field: "jobs".into(),
                    msg: e.to_string(),
                })?;
            pool.install(|| (0..seeds).into_par_iter().map(run_one).collect())
        }
    };
    let traces = traces?;
    let aggregate = aggregate(&traces, None)?;
    Ok(Ensemble { traces, aggregate })
}
