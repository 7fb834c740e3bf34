// Parses an edge list with string node ids and an attribute file, then
// writes seeds back out using the original ids.

use std::path::Path;

use fairspread::baselines::top_degree;
use fairspread::error::Result;
use fairspread::graph::{format_seeds, parse_graph};

const EDGES: &str = "# friendships\nalice bob\nbob carol\ncarol dave\nbob dave\ndave erin\n";
const ATTRS: &str = "alice north\nbob north\ncarol south\ndave south\nerin south\n";

pub fn run_example() -> Result<()> {
    let loaded = parse_graph(EDGES, Path::new("friends.edges"), ATTRS, Path::new("friends.attr"))?;
    println!("communities: {:?}", loaded.partition.names());
    let seeds = top_degree(&loaded.graph, 2)?;
    print!("{}", format_seeds(&seeds, Some(&loaded.node_ids)));
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
