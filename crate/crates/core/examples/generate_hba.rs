// Generates a small homophilic Barabási-Albert graph and prints how edges
// split between and within the two communities.

use fairspread::error::Result;
use fairspread::graph::format_graph;
use fairspread::synth::{generate_hba, HbaParams, MINORITY};

pub fn run_example() -> Result<()> {
    let params = HbaParams { node_count: 300, rng_seed: 5, ..HbaParams::default() };
    let (graph, partition) = generate_hba(&params)?;
    let cross = graph.edges().filter(|&(u, v)| partition.label(u) != partition.label(v)).count();
    println!(
        "{} nodes, {} edges, {} minority nodes, {cross} cross-community edges",
        graph.node_count(),
        graph.edge_count(),
        partition.sizes()[MINORITY]
    );
    let (edges, attrs) = format_graph(&graph, &partition);
    println!("first edge line: {}", edges.lines().next().unwrap_or(""));
    println!("first attribute line: {}", attrs.lines().next().unwrap_or(""));
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
