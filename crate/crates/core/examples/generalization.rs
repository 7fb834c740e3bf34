// Trains on small graphs and evaluates the frozen policy on larger ones.

use fairspread::agent::Hyperparameters;
use fairspread::error::Result;
use fairspread::experiments::{generalization_run, records_to_csv, Method, MethodSettings, TestSet};
use fairspread::rng::StreamSeed;
use fairspread::synth::{generate_pool, HbaParams};

pub fn run_example() -> Result<()> {
    let train_pool = generate_pool(&HbaParams { node_count: 60, rng_seed: 1, ..HbaParams::default() }, 3)?;
    let test_sets: Vec<TestSet> = [100, 150]
        .into_iter()
        .map(|n| {
            let graphs = generate_pool(&HbaParams { node_count: n, rng_seed: n as u64, ..HbaParams::default() }, 2)?;
            Ok(TestSet { name: format!("hba{n}"), graphs })
        })
        .collect::<Result<_>>()?;
    let hp = Hyperparameters { budget: 5, episodes: 10, batch_size: 8, embed_dim: 16, ..Hyperparameters::default() };
    let run = generalization_run(
        &train_pool,
        &test_sets,
        &hp,
        &[Method::Dq4FairIm, Method::Degree],
        0.1,
        300,
        &MethodSettings::default(),
        StreamSeed::new(2),
    )?;
    print!("{}", records_to_csv(&run.comparison.rows));
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
