// Trains once per fairness weight and prints the smoothed learning curves.

use fairspread::agent::Hyperparameters;
use fairspread::error::Result;
use fairspread::experiments::{ablate_phi, ablation_plot_csv};
use fairspread::synth::{generate_pool, HbaParams};

pub fn run_example() -> Result<()> {
    let pool = generate_pool(&HbaParams { node_count: 50, rng_seed: 6, ..HbaParams::default() }, 2)?;
    let hp = Hyperparameters { budget: 3, episodes: 8, batch_size: 4, embed_dim: 8, ..Hyperparameters::default() };
    let window = 4;
    let runs = ablate_phi(&pool, &[0.0, 0.5, 1.0], &hp, window)?;
    print!("{}", ablation_plot_csv(&runs, window));
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
