//! Metric evaluation over independent repeats with fresh sample sets.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use latentrw::metrics::{
    emd, frechet_2d, precision_recall, MetricStat, MetricsReport,
};
use latentrw::tensor::Tensor;

use crate::config::RunConfig;
use crate::csvio::{column_index, fmt_f64, read_csv, write_csv, FileMeta};
use crate::error::{CliError, CliResult};

/// One repeat's raw metric values.
struct RepeatValues {
    emd: f64,
    precision: f64,
    recall: f64,
    frechet: f64,
    mean_wall_time_us: Option<f64>,
}

pub struct EvalInputs {
    /// Fake points plus optional per-sample wall times.
    pub fake: Vec<[f64; 2]>,
    pub fake_wall_us: Option<Vec<f64>>,
    pub fake_meta: Option<crate::csvio::FileMeta>,
    /// Real points come from a CSV or from the config's dataset spec.
    pub real_csv: Option<Vec<[f64; 2]>>,
    pub method: String,
}

pub fn cmd_eval(
    config_path: &Path,
    fake_path: &Path,
    real_path: Option<&Path>,
    method_label: Option<&str>,
    out: &Path,
) -> CliResult<()> {
    let (config, hash) = crate::config::load_config(config_path)?;
    super::ensure_out_dir(out)?;

    let fake_file = read_csv(fake_path)?;
    let xi = column_index(&fake_file.header, "x", fake_path)?;
    let yi = column_index(&fake_file.header, "y", fake_path)?;
    let wall_idx = fake_file.header.iter().position(|h| h == "wall_time_us");
    let mut fake = Vec::with_capacity(fake_file.rows.len());
    let mut wall = Vec::new();
    for (i, row) in fake_file.rows.iter().enumerate() {
        let get = |idx: usize| -> CliResult<f64> {
            row.get(idx)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| {
                    CliError::validation(format!(
                        "{}: non-numeric field in row {}",
                        fake_path.display(),
                        i + 1
                    ))
                })
        };
        fake.push([get(xi)?, get(yi)?]);
        if let Some(wi) = wall_idx {
            wall.push(get(wi)?);
        }
    }
    let method = method_label
        .map(str::to_string)
        .or_else(|| {
            fake_file
                .meta
                .as_ref()
                .and_then(|m| m.get_extra("method").map(str::to_string))
        })
        .unwrap_or_else(|| "unknown".to_string());

    let real_csv = real_path.map(crate::csvio::read_points).transpose()?;
    let inputs = EvalInputs {
        fake,
        fake_wall_us: if wall.is_empty() { None } else { Some(wall) },
        fake_meta: fake_file.meta,
        real_csv: real_csv.map(|(points, _)| points),
        method,
    };

    let report = evaluate(&config, &inputs)?;
    write_report(&config, &hash, &inputs.method, &report, out)?;
    for stat in &report.metrics {
        eprintln!(
            "{:>10}: {:.6} +- {:.6} (n={})",
            stat.name, stat.mean, stat.ci97_half_width, stat.n_repeats
        );
    }
    Ok(())
}

/// Runs the repeat protocol. Repeats are independent (fresh real draws,
/// fresh fake subsamples) and run concurrently up to LR_THREADS workers.
pub fn evaluate(config: &RunConfig, inputs: &EvalInputs) -> CliResult<MetricsReport> {
    let protocol = &config.eval;
    let n = protocol.points;
    if inputs.fake.len() < n {
        return Err(CliError::validation(format!(
            "fake set has {} points, protocol needs {n} per repeat",
            inputs.fake.len()
        )));
    }
    if let Some(real) = &inputs.real_csv {
        if real.len() < n {
            return Err(CliError::validation(format!(
                "real set has {} points, protocol needs {n} per repeat",
                real.len()
            )));
        }
    }

    let repeats: Vec<usize> = (0..protocol.repeats).collect();
    let workers = eval_workers(protocol.repeats);
    let mut values: Vec<Option<RepeatValues>> = Vec::with_capacity(protocol.repeats);
    for _ in 0..protocol.repeats {
        values.push(None);
    }

    let chunks: Vec<Vec<usize>> = repeats
        .chunks(protocol.repeats.div_ceil(workers))
        .map(|c| c.to_vec())
        .collect();
    let results: Vec<CliResult<Vec<(usize, RepeatValues)>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| {
                scope.spawn(move || {
                    chunk
                        .into_iter()
                        .map(|r| one_repeat(config, inputs, r).map(|v| (r, v)))
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("no panics")).collect()
    });
    for result in results {
        for (r, v) in result? {
            values[r] = Some(v);
        }
    }
    let values: Vec<RepeatValues> = values
        .into_iter()
        .map(|v| v.expect("all repeats computed"))
        .collect();

    let collect = |f: fn(&RepeatValues) -> f64| values.iter().map(f).collect::<Vec<_>>();
    let mut metrics = vec![
        MetricStat::from_values("emd", &collect(|v| v.emd)).map_err(CliError::from)?,
        MetricStat::from_values("precision", &collect(|v| v.precision)).map_err(CliError::from)?,
        MetricStat::from_values("recall", &collect(|v| v.recall)).map_err(CliError::from)?,
        MetricStat::from_values("frechet", &collect(|v| v.frechet)).map_err(CliError::from)?,
    ];

    let wall_time_us = if values.iter().all(|v| v.mean_wall_time_us.is_some()) {
        let wall: Vec<f64> = values
            .iter()
            .map(|v| v.mean_wall_time_us.expect("checked"))
            .collect();
        let stat = MetricStat::from_values("wall_time_us", &wall).map_err(CliError::from)?;
        metrics.push(stat.clone());
        Some(stat)
    } else {
        None
    };

    let acceptance_rate = inputs
        .fake_meta
        .as_ref()
        .and_then(|m| m.get_extra("acceptance_rate"))
        .and_then(|s| s.parse().ok());
    let ess = inputs
        .fake_meta
        .as_ref()
        .and_then(|m| m.get_extra("ess"))
        .and_then(|s| s.parse().ok());

    Ok(MetricsReport { metrics, acceptance_rate, ess, wall_time_us })
}

fn one_repeat(config: &RunConfig, inputs: &EvalInputs, repeat: usize) -> CliResult<RepeatValues> {
    let protocol = &config.eval;
    let n = protocol.points;
    let repeat_seed = config
        .seed
        .wrapping_add(0xA5A5_0000)
        .wrapping_add(repeat as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(repeat_seed);

    let real: Vec<[f64; 2]> = match &inputs.real_csv {
        Some(points) => subsample(points, n, &mut rng),
        None => {
            let data = config.dataset.sample_n(n, repeat_seed)?;
            (0..n).map(|i| [data.points.get(i, 0), data.points.get(i, 1)]).collect()
        }
    };
    let fake_idx: Vec<usize> = {
        let mut idx: Vec<usize> = (0..inputs.fake.len()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(n);
        idx
    };
    let fake: Vec<[f64; 2]> = fake_idx.iter().map(|&i| inputs.fake[i]).collect();
    let mean_wall = inputs.fake_wall_us.as_ref().map(|wall| {
        fake_idx.iter().map(|&i| wall[i]).sum::<f64>() / n as f64
    });

    let real_t = Tensor::from_points(&real);
    let fake_t = Tensor::from_points(&fake);
    let (precision, recall) = precision_recall(&real_t, &fake_t, protocol.k)?;
    Ok(RepeatValues {
        emd: emd(&fake_t, &real_t)?,
        precision,
        recall,
        frechet: frechet_2d(&fake_t, &real_t)?,
        mean_wall_time_us: mean_wall,
    })
}

fn subsample(points: &[[f64; 2]], n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.shuffle(rng);
    idx.truncate(n);
    idx.into_iter().map(|i| points[i]).collect()
}

/// Worker count for evaluation: LR_THREADS when set, else the number of
/// available cores, clamped to the repeat count.
pub fn eval_workers(repeats: usize) -> usize {
    let cap = std::env::var("LR_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        });
    cap.min(repeats).max(1)
}

fn write_report(
    config: &RunConfig,
    hash: &str,
    method: &str,
    report: &MetricsReport,
    out: &Path,
) -> CliResult<()> {
    #[derive(serde::Serialize)]
    struct ReportDoc<'a> {
        format_version: u32,
        master_seed: u64,
        config_hash: &'a str,
        dataset: &'a str,
        method: &'a str,
        #[serde(flatten)]
        report: &'a MetricsReport,
    }
    super::write_json(
        &out.join("metrics.json"),
        &ReportDoc {
            format_version: crate::bundle::FORMAT_VERSION,
            master_seed: config.seed,
            config_hash: hash,
            dataset: config.dataset.name(),
            method,
            report,
        },
    )?;

    let meta = FileMeta::new(config.seed, hash);
    let rows = report.metrics.iter().map(|m| {
        format!(
            "{},{},{},{},{},{}",
            config.dataset.name(),
            method,
            m.name,
            fmt_f64(m.mean),
            fmt_f64(m.ci97_half_width),
            m.n_repeats
        )
    });
    write_csv(
        &out.join("metrics.csv"),
        &meta,
        "dataset,method,metric,mean,ci97_half_width,n_repeats",
        rows,
    )?;
    Ok(())
}
