// Compares the Monte Carlo spread estimate with exact live-edge enumeration
// on a small path graph split into two communities.

use fairspread::diffusion::{estimate_spread, exact_spread, CascadeConfig};
use fairspread::error::Result;
use fairspread::graph::{CommunityPartition, Graph};
use fairspread::rng::StreamSeed;

pub fn run_example() -> Result<()> {
    let graph = Graph::from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)])?;
    let partition = CommunityPartition::new(vec![0, 0, 0, 1, 1, 1], 2)?;
    let seeds = [1];
    let exact = exact_spread(&graph, &partition, &seeds, 0.5)?;
    let mc = estimate_spread(&graph, &partition, &seeds, &CascadeConfig::new(0.5, 20_000)?, StreamSeed::new(1))?;
    println!("exact outreach {:.4}, fairness {:.4}", exact.total_outreach, exact.maximin_fairness());
    println!("sampled outreach {:.4}, fairness {:.4}", mc.total_outreach, mc.maximin_fairness());
    println!("per community (exact): {:?}", exact.community_outreach);
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
