// Sweeps the seed budget over a small test set and prints the plot table.

use fairspread::error::Result;
use fairspread::experiments::{sweep_k, sweep_plot_csv, Method, MethodSettings, SweepAxis, TestSet};
use fairspread::rng::StreamSeed;
use fairspread::synth::{generate_pool, HbaParams};

pub fn run_example() -> Result<()> {
    let graphs = generate_pool(&HbaParams { node_count: 120, rng_seed: 4, ..HbaParams::default() }, 2)?;
    let set = TestSet { name: "hba120".into(), graphs };
    let methods = [Method::Degree, Method::Parity, Method::FairPageRank];
    let table = sweep_k(&set, &methods, &[2, 5, 10], 0.1, 300, &MethodSettings::default(), StreamSeed::new(8))?;
    print!("{}", sweep_plot_csv(&table.rows, SweepAxis::K));
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
