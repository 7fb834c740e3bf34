// Trains a small Q-network for a handful of episodes, saves the checkpoint
// and reloads it to pick seeds on a fresh graph.

use fairspread::agent::{train, Hyperparameters, Policy};
use fairspread::error::{Error, Result};
use fairspread::synth::{generate_hba, generate_pool, HbaParams};

pub fn run_example() -> Result<()> {
    let base = HbaParams { node_count: 60, rng_seed: 9, ..HbaParams::default() };
    let pool = generate_pool(&base, 3)?;
    let hp = Hyperparameters { budget: 4, episodes: 12, batch_size: 8, embed_dim: 16, rng_seed: 1, ..Hyperparameters::default() };
    let (params, report) = train(&pool, &hp)?;
    println!("{} episodes, {} updates", report.episodes.len(), report.updates);
    if let Some(last) = report.episodes.last() {
        println!("last episode reward {:.3}, epsilon {:.3}", last.reward, last.epsilon);
    }

    let dir = std::env::temp_dir().join(format!("fairspread-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
    let path = dir.join("policy.bin");
    let policy = Policy { params, embed_iters: hp.embed_iters };
    policy.save(&path)?;
    let loaded = Policy::load(&path)?;
    let _ = std::fs::remove_dir_all(&dir);

    let (graph, partition) = generate_hba(&HbaParams { rng_seed: 77, ..base })?;
    let seeds = loaded.select_seeds(&graph, &partition, 4)?;
    println!("checkpoint {} picks {seeds:?}", &loaded.digest()[..12]);
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
