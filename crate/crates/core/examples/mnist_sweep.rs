//! Recall vs. candidate fraction on MNIST.
//!
//! ```text
//! cargo run --release -p rpforest --example mnist_sweep -- data/mnist 1,2,5,10,20,40,80 3
//! ```

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rpforest::io::{load_idx, IdxOptions};
use rpforest::{Dataset32, Evaluation, Forest32, ForestParams, GroundTruth, Metric};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data/mnist".into()));
    let counts: Vec<usize> = args
        .next()
        .unwrap_or_else(|| "1,80".into())
        .split(',')
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    let trials: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let opts = IdxOptions { normalize: true };
    let train: Dataset32 = load_idx(dir.join("train-images-idx3-ubyte"), None, opts)?;
    let test: Dataset32 = load_idx(dir.join("t10k-images-idx3-ubyte"), None, opts)?;
    let train = Arc::new(train);
    println!("train {} x {}, test {}", train.len(), train.dim(), test.len());

    let start = Instant::now();
    let one = Forest32::build(train.clone(), ForestParams::new(1))?;
    println!(
        "1 tree built in {:?}, mean leaf depth {:.2} (expected {:.2})",
        start.elapsed(),
        one.mean_leaf_depth(),
        one.params().expected_depth(train.len())
    );

    let start = Instant::now();
    let truth = GroundTruth::load_or_compute(&dir.join("truth-euclidean-k1.bin"), &train, &test, Metric::Euclidean, 1)?;
    println!("ground truth ready in {:?}", start.elapsed());

    let eval = Evaluation::with_truth(train, &test, Metric::Euclidean, truth)?;
    let report = eval.sweep(ForestParams::new(1).with_seed(2024), &counts, trials)?;
    println!(
        "{:>5} {:>9} {:>10} {:>9} {:>10} {:>10}",
        "L", "recall@1", "fraction", "cands", "query_us", "build_ms"
    );
    for s in report.summaries() {
        println!(
            "{:>5} {:>9.4} {:>10.5} {:>9.1} {:>10.1} {:>10.1}",
            s.trees,
            s.recall_at_1,
            s.mean_candidate_fraction,
            s.mean_candidates,
            s.mean_query_time.as_secs_f64() * 1e6,
            s.build_time.as_secs_f64() * 1e3
        );
    }
    Ok(())
}
