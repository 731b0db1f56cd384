mod args;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::Parser;
use log::{info, warn};
use rpforest::io::{self, IdxOptions};
use rpforest::{
    exact_knn_batch, Dataset32, Error, EvalReport, Evaluation, Forest32, ForestParams, GroundTruth, Metric, Searcher,
};

use args::{BuildArgs, Cli, Command, DataArgs, EvalArgs, ForestArgs, Format, OracleArgs, QueryArgs};

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParam { .. } => 2,
            Error::Io { .. } => 3,
            Error::BadMagic { .. }
            | Error::Truncated { .. }
            | Error::CountMismatch { .. }
            | Error::UnsupportedVersion { .. }
            | Error::SizeMismatch { .. }
            | Error::Corrupt(_)
            | Error::NonFinite { .. }
            | Error::EmptyDataset => 4,
            Error::HashMismatch { .. } | Error::DimensionMismatch { .. } | Error::ScalarWidthMismatch { .. } => 5,
            Error::NegativeComponent { .. } | Error::ZeroVector => 6,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    validate(&cli.command)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Failure {
            code: 1,
            message: e.to_string(),
        })?;
    info!(
        "config: {}",
        serde_json::to_string(&cli).unwrap_or_else(|e| format!("<unserializable: {e}>"))
    );
    match cli.command {
        Command::Build(a) => build(a),
        Command::Query(a) => query(a),
        Command::Oracle(a) => oracle(a),
        Command::Eval(a) => eval(a, false),
        Command::Sweep(a) => eval(a, true),
    }
}

fn forest_params(trees: usize, f: &ForestArgs) -> ForestParams {
    ForestParams::new(trees)
        .with_split_ratio(f.split_ratio)
        .with_capacity(f.capacity)
        .with_proj_dims(f.proj_dims)
        .with_seed(f.seed)
}

/// Rejects bad parameters before any input file is opened.
fn validate(cmd: &Command) -> Outcome {
    match cmd {
        Command::Build(a) => forest_params(a.trees, &a.forest).validate()?,
        Command::Query(a) if a.k == 0 => return Err(Failure::usage("--k must be at least 1")),
        Command::Oracle(a) if a.k == 0 => return Err(Failure::usage("--k must be at least 1")),
        Command::Eval(a) | Command::Sweep(a) => {
            let single = matches!(cmd, Command::Eval(_));
            if single && a.trees.len() != 1 {
                return Err(Failure::usage(
                    "eval takes a single --trees value; use sweep for a list",
                ));
            }
            if a.trees.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Failure::usage("--trees must be strictly ascending"));
            }
            if a.trials == 0 {
                return Err(Failure::usage("--trials must be at least 1"));
            }
            for &l in &a.trees {
                forest_params(l, &a.forest).validate()?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn load(path: &Path, labels: Option<&Path>, d: &DataArgs) -> Outcome<Dataset32> {
    let ds = match d.format {
        Format::Idx => io::load_idx(path, labels, IdxOptions { normalize: d.normalize })?,
        Format::Raw => {
            let ds: Dataset32 = io::load_raw(path, None)?;
            if d.normalize {
                ds.normalized()?
            } else {
                ds
            }
        }
    };
    info!(
        "loaded {}: {} points of dimension {}",
        path.display(),
        ds.len(),
        ds.dim()
    );
    Ok(ds)
}

fn load_pair(d: &DataArgs, queries: &Path) -> Outcome<(Dataset32, Dataset32)> {
    let data = load(&d.data, d.labels.as_deref(), d)?;
    let queries = load(queries, None, d)?;
    if queries.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            found: queries.dim(),
        }
        .into());
    }
    Ok((data, queries))
}

/// Writes through a sibling temporary file so `out` only ever appears
/// complete.
fn write_atomic(out: &Path, write: impl FnOnce(&Path) -> rpforest::Result<()>) -> Outcome {
    let mut tmp = out.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = write(&tmp).map_err(Failure::from).and_then(|()| {
        std::fs::rename(&tmp, out).map_err(|e| {
            Failure::from(Error::Io {
                path: out.to_path_buf(),
                source: e,
            })
        })
    });
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

fn write_text(out: &Path, text: &str) -> Outcome {
    write_atomic(out, |p| {
        std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })
    })
}

fn build(a: BuildArgs) -> Outcome {
    let data = load(&a.data.data, a.data.labels.as_deref(), &a.data)?;
    let params = forest_params(a.trees, &a.forest);
    params.validate_for_dim(data.dim())?;
    let n = data.len();
    let start = Instant::now();
    let forest = Forest32::build(data, params)?;
    let elapsed = start.elapsed();
    write_atomic(&a.out, |p| io::save_index(p, &forest))?;
    println!("trees: {}", forest.trees().len());
    println!("build time: {:.3} s", elapsed.as_secs_f64());
    println!(
        "mean leaf depth: {:.3} (balanced estimate {:.3})",
        forest.mean_leaf_depth(),
        params.expected_depth(n)
    );
    println!("index: {}", a.out.display());
    Ok(())
}

fn query(a: QueryArgs) -> Outcome {
    let metric = Metric::from(a.metric);
    let (data, queries) = load_pair(&a.data, &a.queries)?;
    let forest: Forest32 = io::load_index(&a.index, data)?;
    let mut searcher = Searcher::new(&forest, metric)?;

    let mut csv = String::from("query_index,rank,id,distance,candidates_examined\n");
    let mut short = 0usize;
    let mut total = Duration::ZERO;
    for (qi, q) in queries.points().enumerate() {
        let start = Instant::now();
        let res = searcher.knn(q, a.k)?;
        total += start.elapsed();
        if res.neighbors.len() < a.k {
            short += 1;
            log::debug!(
                "query {qi}: only {} candidates for k = {}",
                res.candidates_examined,
                a.k
            );
        }
        for (rank, nb) in res.neighbors.iter().enumerate() {
            let _ = writeln!(csv, "{qi},{rank},{},{},{}", nb.id, nb.distance, res.candidates_examined);
        }
    }
    if short > 0 {
        warn!(
            "{short} of {} queries had fewer than k = {} candidates; their rows are short",
            queries.len(),
            a.k
        );
    }
    write_text(&a.out, &csv)?;

    let per_query = total.as_secs_f64() / queries.len() as f64;
    println!("queries: {}", queries.len());
    println!("mean query time: {:.1} us", per_query * 1e6);
    if a.compare_exact {
        let start = Instant::now();
        exact_knn_batch(forest.dataset(), &queries, a.k, metric)?;
        let exact = start.elapsed().as_secs_f64() / queries.len() as f64;
        println!("mean exact scan time: {:.1} us", exact * 1e6);
        println!("speedup: {:.1}x", exact / per_query);
    }
    Ok(())
}

fn oracle(a: OracleArgs) -> Outcome {
    let metric = Metric::from(a.metric);
    let (data, queries) = load_pair(&a.data, &a.queries)?;
    let start = Instant::now();
    let truth = GroundTruth::compute(&data, &queries, metric, a.k)?;
    info!("exact scan of {} queries took {:.2?}", queries.len(), start.elapsed());
    write_atomic(&a.out, |p| io::save_truth(p, &truth))?;
    if let Some(csv_path) = &a.csv {
        let mut csv = String::from("query_index,rank,id,distance\n");
        for (qi, row) in truth.rows().iter().enumerate() {
            for (rank, nb) in row.iter().enumerate() {
                let _ = writeln!(csv, "{qi},{rank},{},{}", nb.id, nb.distance);
            }
        }
        write_text(csv_path, &csv)?;
    }
    println!(
        "ground truth: {} queries, k = {}, {}",
        queries.len(),
        truth.k(),
        a.out.display()
    );
    Ok(())
}

fn eval(a: EvalArgs, sweep: bool) -> Outcome {
    let metric = Metric::from(a.metric);
    let (data, queries) = load_pair(&a.data, &a.queries)?;
    forest_params(a.trees[0], &a.forest).validate_for_dim(data.dim())?;
    let truth = match &a.truth_cache {
        Some(path) => GroundTruth::load_or_compute(path, &data, &queries, metric, 1)?,
        None => GroundTruth::compute(&data, &queries, metric, 1)?,
    };
    let evaluation = Evaluation::with_truth(Arc::new(data), &queries, metric, truth)?;
    let base = forest_params(a.trees[0], &a.forest);
    let report = if sweep {
        evaluation.sweep(base, &a.trees, a.trials)?
    } else {
        evaluation.evaluate(base, a.trials)?
    };
    write_text(&a.out, &report.to_csv(!a.no_timings))?;
    print_summary(&report, !a.no_timings);
    Ok(())
}

fn print_summary(report: &EvalReport, timings: bool) {
    println!(
        "{:>6} {:>7} {:>9} {:>11} {:>11}",
        "L", "trials", "recall@1", "fraction", "candidates"
    );
    for s in report.summaries() {
        print!(
            "{:>6} {:>7} {:>9.4} {:>11.6} {:>11.1}",
            s.trees, s.trials, s.recall_at_1, s.mean_candidate_fraction, s.mean_candidates
        );
        if timings {
            print!(
                "  {:.1} us/query, build {:.1} ms",
                s.mean_query_time.as_secs_f64() * 1e6,
                s.build_time.as_secs_f64() * 1e3
            );
        }
        println!();
    }
}
