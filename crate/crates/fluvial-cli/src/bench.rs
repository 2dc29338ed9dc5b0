//! Benchmark harness: times both algorithms over square fractal inputs and
//! prints mean and standard deviation per (algorithm, size).

use std::time::Instant;

use clap::Args;

use fluvial::baseline::{baseline_tick, BaselineGrid};
use fluvial::heightmap::Heightmap;
use fluvial::noise::fractal_noise;
use fluvial::simulation::{run, InitSpec, SimParams};

use crate::CliError;

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Square grid sizes to benchmark.
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024")]
    pub sizes: Vec<usize>,
    /// Measurements per (algorithm, size).
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = 100)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Baseline per-tick uplift as a fraction of the input map.
    #[arg(long, default_value_t = 0.02)]
    pub uplift_scale: f64,
    /// Baseline erosion constant.
    #[arg(long, default_value_t = 0.5)]
    pub baseline_k: f64,
}

fn mean_stddev(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Seconds to run our algorithm (initialization plus all ticks).
pub fn time_ours(constraint: &Heightmap, iterations: usize, seed: u64) -> f64 {
    let spec = InitSpec::new(constraint.clone());
    let params = SimParams {
        iterations,
        seed,
        ..SimParams::default()
    };
    let start = Instant::now();
    let (grid, _) = run(&spec, &params).expect("bench input is valid");
    let secs = start.elapsed().as_secs_f64();
    std::hint::black_box(grid.tile(0).land_height);
    secs
}

/// Seconds to run the baseline (initialization plus all ticks).
pub fn time_baseline(
    constraint: &Heightmap,
    iterations: usize,
    seed: u64,
    uplift_scale: f64,
    k: f64,
) -> f64 {
    let uplift: Vec<f64> = constraint.samples.iter().map(|&s| s * uplift_scale).collect();
    let start = Instant::now();
    let mut grid = BaselineGrid::new(constraint.width, constraint.height, &uplift, seed);
    for _ in 0..iterations {
        baseline_tick(&mut grid, k);
    }
    let secs = start.elapsed().as_secs_f64();
    std::hint::black_box(grid.tile(0).height);
    secs
}

pub fn run_bench(args: BenchArgs) -> Result<(), CliError> {
    if args.sizes.is_empty() || args.sizes.contains(&0) {
        return Err(CliError::Config("sizes must be positive".into()));
    }
    if args.reps == 0 {
        return Err(CliError::Config("reps must be positive".into()));
    }

    println!("algorithm\tn\tmean_s\tstddev_s");
    for &n in &args.sizes {
        let mut constraint = fractal_noise(n, n, 3, args.seed);
        constraint.remap_to((0.0, 50.0));

        let ours: Vec<f64> = (0..args.reps)
            .map(|_| time_ours(&constraint, args.iterations, args.seed))
            .collect();
        let (mean, sd) = mean_stddev(&ours);
        println!("ours\t{n}\t{mean:.3}\t{sd:.3}");

        let base: Vec<f64> = (0..args.reps)
            .map(|_| {
                time_baseline(
                    &constraint,
                    args.iterations,
                    args.seed,
                    args.uplift_scale,
                    args.baseline_k,
                )
            })
            .collect();
        let (mean, sd) = mean_stddev(&base);
        println!("baseline\t{n}\t{mean:.3}\t{sd:.3}");
    }
    Ok(())
}
