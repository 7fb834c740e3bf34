// Runs every non-learned seeding method on one graph and scores the seeds.

use fairspread::error::Result;
use fairspread::experiments::{evaluate_seed_set, select_seeds, Method, MethodSettings};
use fairspread::rng::StreamSeed;
use fairspread::synth::{generate_hba, HbaParams};

pub fn run_example() -> Result<()> {
    let (graph, partition) = generate_hba(&HbaParams { node_count: 150, rng_seed: 2, ..HbaParams::default() })?;
    let settings = MethodSettings { greedy_sims: 50, ..MethodSettings::default() };
    let (k, p) = (8, 0.1);
    for method in [Method::Degree, Method::PageRank, Method::Parity, Method::FairPageRank, Method::Celf] {
        let seeds = select_seeds(method, &graph, &partition, k, p, &settings, StreamSeed::new(3))?;
        let r = evaluate_seed_set(&graph, &partition, &seeds, p, 500, StreamSeed::new(4))?;
        println!("{:<14} outreach {:.3}  fairness {:.3}", method.name(), r.outreach_mean, r.fairness_mean);
    }
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
