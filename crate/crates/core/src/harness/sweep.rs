use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, PointGeometry};
use crate::channel::{synthesize_channel, ChannelConfig};
use crate::error::{Error, Result};
use crate::metrics::{
    capacity_ratio_db, singular_values, spatial_division_from_spectrum, svd_capacity_from_spectrum, Allocator,
    ReportMetadata, Scheme, WdPipeline,
};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "WAVEKIT_THREADS";

/// One CSV row: a scheme evaluated on one channel draw.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub scheme: Scheme,
    pub n_x: usize,
    pub n_y: usize,
    pub distance_m: f64,
    pub seed: u64,
    pub beta: f64,
    pub num_streams: usize,
    pub capacity_bits: f64,
    pub duration_s: f64,
}

/// Seed average for one (sweep value, scheme).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRecord {
    pub scheme: Scheme,
    pub sweep_value: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub distance_m: f64,
    pub num_seeds: usize,
    pub mean_capacity_bits: f64,
    pub stderr_capacity_bits: f64,
    pub mean_num_streams: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub sweep_value: f64,
    pub seed: u64,
    /// `None` when the point failed before any scheme ran.
    pub scheme: Option<Scheme>,
    pub error: String,
}

/// `10 log10(C_WD_DC / C_SD)` on the seed means of one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRecord {
    pub sweep_value: f64,
    pub ratio_db: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepOutput {
    pub records: Vec<ResultRecord>,
    pub aggregates: Vec<AggregateRecord>,
    pub failures: Vec<PointFailure>,
    pub wd_over_sd_db: Vec<GapRecord>,
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|n| *n > 0)
}

/// Runs the sweep on a pool sized by [`THREADS_ENV`] (all cores when unset).
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    run_sweep_with_threads(cfg, threads_from_env())
}

pub fn run_sweep_with_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<SweepOutput> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config("WAVEKIT_THREADS", e.to_string()))?;
    pool.install(|| sweep_in_pool(cfg))
}

struct PointSetup {
    value: f64,
    geometry: PointGeometry,
    pipeline: Option<std::result::Result<WdPipeline, String>>,
}

fn sweep_in_pool(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let params = cfg.system_params()?;
    let wants_wd = cfg.schemes.iter().any(|s| s.is_wavenumber());

    // Dictionaries depend only on the arrays, so build them once per value.
    let setups: Vec<PointSetup> = cfg
        .sweep_values
        .par_iter()
        .map(|&value| {
            let geometry = cfg.point(value);
            let pipeline = wants_wd.then(|| {
                cfg.arrays(geometry, &params)
                    .and_then(|(tx, rx)| WdPipeline::new(&tx, &rx, &params, cfg.beta))
                    .map(|p| {
                        p.with_max_streams(cfg.solver.max_streams)
                            .with_keystone_check(cfg.solver.keystone_check)
                    })
                    .map_err(|e| e.to_string())
            });
            PointSetup {
                value,
                geometry,
                pipeline,
            }
        })
        .collect();

    let jobs: Vec<(usize, u64)> = (0..setups.len())
        .flat_map(|i| cfg.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results: Vec<(Vec<ResultRecord>, Vec<PointFailure>)> = jobs
        .par_iter()
        .map(|&(i, seed)| run_point(cfg, &params, &setups[i], seed))
        .collect();

    let mut out = SweepOutput::default();
    // `jobs` is already in (value, seed) order and each point emits its
    // schemes in config order, so concatenation is the output order.
    for (recs, fails) in results {
        out.records.extend(recs);
        out.failures.extend(fails);
    }
    out.aggregates = aggregate(cfg, &setups, &out.records);
    out.wd_over_sd_db = gaps(&setups, &out.aggregates);
    Ok(out)
}

fn run_point(
    cfg: &ExperimentConfig,
    params: &crate::geometry::SystemParams,
    setup: &PointSetup,
    seed: u64,
) -> (Vec<ResultRecord>, Vec<PointFailure>) {
    let start = Instant::now();
    let deadline = start + cfg.point_timeout();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let fail = |scheme: Option<Scheme>, e: String| PointFailure {
        sweep_value: setup.value,
        seed,
        scheme,
        error: e,
    };

    let channel = cfg.arrays(setup.geometry, params).and_then(|(tx, rx)| {
        let ch = ChannelConfig {
            rng_seed: seed,
            ..cfg.channel.clone()
        };
        synthesize_channel(&ch, &tx, &rx, params)
    });
    let h = match channel {
        Ok(h) => h,
        Err(e) => {
            failures.push(fail(None, e.to_string()));
            return (records, failures);
        }
    };
    let channel_time = start.elapsed().as_secs_f64();

    let mut spectrum: Option<Vec<f64>> = None;
    let mut selection = None;
    let mut opts = cfg.solver_options(seed);
    opts.deadline = Some(deadline);

    for &scheme in &cfg.schemes {
        let t = Instant::now();
        if t > deadline {
            failures.push(fail(Some(scheme), Error::Timeout.to_string()));
            continue;
        }
        let report = match Allocator::for_scheme(scheme) {
            None => {
                let sv = spectrum.get_or_insert_with(|| singular_values(&h));
                let meta = ReportMetadata::for_channel(&h);
                Ok(match scheme {
                    Scheme::SpatialDivision => spatial_division_from_spectrum(sv, params, meta),
                    _ => svd_capacity_from_spectrum(sv, params, cfg.solver.max_streams, meta),
                })
            }
            Some(alloc) => match setup.pipeline.as_ref().expect("pipeline built for wavenumber schemes") {
                Err(e) => Err(e.clone()),
                Ok(pipe) => {
                    if selection.is_none() {
                        selection = Some(pipe.select(&h).map_err(|e| e.to_string()));
                    }
                    match selection.as_ref().expect("just set") {
                        Err(e) => Err(e.clone()),
                        Ok(sel) => pipe
                            .allocate(&h, sel, alloc, &opts)
                            .map(|o| o.report)
                            .map_err(|e| e.to_string()),
                    }
                }
            },
        };
        match report {
            Ok(r) => records.push(ResultRecord {
                scheme,
                n_x: setup.geometry.n_x,
                n_y: setup.geometry.n_y,
                distance_m: setup.geometry.distance_m,
                seed,
                beta: cfg.beta,
                num_streams: r.num_streams,
                capacity_bits: r.capacity_bits,
                duration_s: t.elapsed().as_secs_f64() + channel_time,
            }),
            Err(e) => failures.push(fail(Some(scheme), e)),
        }
    }
    (records, failures)
}

fn aggregate(cfg: &ExperimentConfig, setups: &[PointSetup], records: &[ResultRecord]) -> Vec<AggregateRecord> {
    let mut out = Vec::new();
    for setup in setups {
        let g = setup.geometry;
        for &scheme in &cfg.schemes {
            let rows: Vec<&ResultRecord> = records
                .iter()
                .filter(|r| r.scheme == scheme && r.n_x == g.n_x && r.n_y == g.n_y && r.distance_m == g.distance_m)
                .collect();
            let n = rows.len();
            if n == 0 {
                continue;
            }
            let mean = rows.iter().map(|r| r.capacity_bits).sum::<f64>() / n as f64;
            let stderr = if n > 1 {
                let var = rows.iter().map(|r| (r.capacity_bits - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            out.push(AggregateRecord {
                scheme,
                sweep_value: setup.value,
                n_x: g.n_x,
                n_y: g.n_y,
                distance_m: g.distance_m,
                num_seeds: n,
                mean_capacity_bits: mean,
                stderr_capacity_bits: stderr,
                mean_num_streams: rows.iter().map(|r| r.num_streams as f64).sum::<f64>() / n as f64,
            });
        }
    }
    out
}

fn gaps(setups: &[PointSetup], aggregates: &[AggregateRecord]) -> Vec<GapRecord> {
    let mean = |value: f64, scheme: Scheme| {
        aggregates
            .iter()
            .find(|a| a.sweep_value == value && a.scheme == scheme)
            .map(|a| a.mean_capacity_bits)
    };
    setups
        .iter()
        .filter_map(|s| {
            let wd = mean(s.value, Scheme::WdDc)?;
            let sd = mean(s.value, Scheme::SpatialDivision)?;
            Some(GapRecord {
                sweep_value: s.value,
                ratio_db: capacity_ratio_db(wd, sd),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(schemes: &str, values: &str, seeds: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(&format!(
            r#"
sweep = "array_size"
sweep_values = {values}
distance_m = 1.0
n_y = 2
schemes = {schemes}
seeds = {seeds}
output_path = "unused"
"#
        ))
        .unwrap()
    }

    #[test]
    fn one_point_one_seed_gives_one_record_and_one_aggregate() {
        let cfg = config(r#"["SVD_BOUND"]"#, "[4]", "[3]");
        let out = run_sweep_with_threads(&cfg, Some(1)).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.aggregates.len(), 1);
        assert!(out.failures.is_empty());
        assert_eq!(out.aggregates[0].stderr_capacity_bits, 0.0);
        assert_eq!(out.aggregates[0].mean_capacity_bits, out.records[0].capacity_bits);
    }

    #[test]
    fn ordering_and_counts() {
        let cfg = config(r#"["WD_DC", "SPATIAL_DIVISION", "SVD_BOUND"]"#, "[6, 4]", "[2, 0, 1]");
        let out = run_sweep_with_threads(&cfg, Some(2)).unwrap();
        assert_eq!(out.records.len(), 2 * 3 * 3);
        assert_eq!(out.aggregates.len(), 2 * 3);
        assert_eq!(out.wd_over_sd_db.len(), 2);
        let keys: Vec<(usize, u64, Scheme)> = out.records.iter().map(|r| (r.n_x, r.seed, r.scheme)).collect();
        assert_eq!(keys[0], (6, 2, Scheme::WdDc));
        assert_eq!(keys[1], (6, 2, Scheme::SpatialDivision));
        assert_eq!(keys[3], (6, 0, Scheme::WdDc));
        assert_eq!(keys[9], (4, 2, Scheme::WdDc));
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let cfg = config(r#"["WD_DC", "WD_PSO", "SVD_BOUND"]"#, "[5, 7]", "[0, 1]");
        let strip = |o: SweepOutput| {
            o.records
                .into_iter()
                .map(|r| ResultRecord { duration_s: 0.0, ..r })
                .collect::<Vec<_>>()
        };
        let a = strip(run_sweep_with_threads(&cfg, Some(1)).unwrap());
        let b = strip(run_sweep_with_threads(&cfg, Some(4)).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn exhausted_budget_is_recorded_not_fatal() {
        let mut cfg = config(r#"["SVD_BOUND", "WD_DC"]"#, "[4]", "[0]");
        cfg.solver.point_timeout_s = 1e-9;
        let out = run_sweep_with_threads(&cfg, Some(1)).unwrap();
        assert!(!out.failures.is_empty());
        assert!(out.failures.iter().all(|f| f.error.contains("budget")));
    }
}
