//! Undirected graphs with a disjoint community label per node, plus the
//! plain-text edge-list / attribute formats used to move them on and off disk.
//!
//! Edge list: one edge per line, two whitespace-separated node ids, `#` lines
//! ignored. Attributes: one `node_id<TAB>community_label` line per node. The
//! attribute file defines the node set and its dense index order; ids that
//! appear only there become zero-degree nodes.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Immutable undirected simple graph stored as sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph on `node_count` nodes. Duplicate edges (in either
    /// orientation) collapse to one; self-loops and out-of-range endpoints
    /// are rejected.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency = vec![Vec::new(); node_count];
        for (u, v) in edges {
            for index in [u, v] {
                if index >= node_count {
                    return Err(Error::NodeOutOfRange { index, node_count });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u.to_string()));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut degree_sum = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            degree_sum += list.len();
        }
        Ok(Graph {
            adjacency,
            edge_count: degree_sum / 2,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> Result<usize> {
        self.adjacency
            .get(v)
            .map(Vec::len)
            .ok_or(Error::NodeOutOfRange {
                index: v,
                node_count: self.node_count(),
            })
    }

    /// Edges as `(u, v)` with `u < v`, in ascending lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, list)| {
            list.iter().copied().filter(move |&v| v > u).map(move |v| (u, v))
        })
    }

    /// Relabels nodes: node `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.node_count() {
            return Err(Error::DimensionMismatch(format!(
                "permutation of length {} for {} nodes",
                perm.len(),
                self.node_count()
            )));
        }
        Graph::from_edges(self.node_count(), self.edges().map(|(u, v)| (perm[u], perm[v])))
    }
}

/// One community label per node; community indices are dense and every
/// community is non-empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommunityPartition {
    labels: Vec<usize>,
    sizes: Vec<usize>,
    names: Vec<String>,
}

impl CommunityPartition {
    pub fn new(labels: Vec<usize>, community_count: usize) -> Result<Self> {
        let names = (0..community_count).map(|c| c.to_string()).collect();
        Self::with_names(labels, names)
    }

    pub fn with_names(labels: Vec<usize>, names: Vec<String>) -> Result<Self> {
        let community_count = names.len();
        let mut sizes = vec![0; community_count];
        for &label in &labels {
            if label >= community_count {
                return Err(Error::InvalidParameter(format!(
                    "community label {label} outside [0, {community_count})"
                )));
            }
            sizes[label] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::EmptyCommunity(empty));
        }
        Ok(CommunityPartition {
            labels,
            sizes,
            names,
        })
    }

    /// Everything in one community.
    pub fn single(node_count: usize) -> Result<Self> {
        Self::new(vec![0; node_count], 1)
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn community_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn label(&self, v: usize) -> usize {
        self.labels[v]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn members(&self, community: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |&(_, &l)| l == community)
            .map(|(v, _)| v)
    }

    /// Same grouping with community indices taken from the position of each
    /// name in `names`.
    pub fn relabelled(&self, names: &[String]) -> Result<CommunityPartition> {
        let map = self
            .names
            .iter()
            .map(|n| {
                names
                    .iter()
                    .position(|m| m == n)
                    .ok_or_else(|| Error::InvalidParameter(format!("community `{n}` missing from name list")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_names(self.labels.iter().map(|&l| map[l]).collect(), names.to_vec())
    }

    pub fn permuted(&self, perm: &[usize]) -> Result<CommunityPartition> {
        let mut labels = vec![0; self.labels.len()];
        for (v, &label) in self.labels.iter().enumerate() {
            labels[perm[v]] = label;
        }
        Self::with_names(labels, self.names.clone())
    }
}

/// A graph read from disk together with the original id of each dense index.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub partition: CommunityPartition,
    pub node_ids: Vec<String>,
}

impl LoadedGraph {
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|n| n == id)
    }
}

/// Gives every graph the same community indices: the sorted union of all
/// community names. Returns that name list.
pub fn align_communities(graphs: &mut [LoadedGraph]) -> Result<Vec<String>> {
    let mut names: Vec<String> = graphs.iter().flat_map(|g| g.partition.names().iter().cloned()).collect();
    names.sort();
    names.dedup();
    for g in graphs.iter_mut() {
        g.partition = g.partition.relabelled(&names)?;
    }
    Ok(names)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn load_graph(edge_list_path: &Path, attribute_path: &Path) -> Result<LoadedGraph> {
    let edges = fs::read_to_string(edge_list_path).map_err(|e| Error::io(edge_list_path, e))?;
    let attrs = fs::read_to_string(attribute_path).map_err(|e| Error::io(attribute_path, e))?;
    parse_graph(&edges, edge_list_path, &attrs, attribute_path)
}

/// Parses in-memory edge-list and attribute text; paths are used for error
/// messages only.
pub fn parse_graph(
    edge_text: &str,
    edge_path: &Path,
    attr_text: &str,
    attr_path: &Path,
) -> Result<LoadedGraph> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut node_ids = Vec::new();
    let mut labels = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut name_index: HashMap<String, usize> = HashMap::new();

    for (line, content) in content_lines(attr_text) {
        let (id, label) = match content.split_once('\t') {
            Some((id, label)) => (id.trim(), label.trim()),
            None => {
                let mut parts = content.split_whitespace();
                match (parts.next(), parts.next(), parts.next()) {
                    (Some(id), Some(label), None) => (id, label),
                    _ => {
                        return Err(Error::Parse {
                            path: attr_path.to_path_buf(),
                            line,
                            msg: "expected `node_id<TAB>community_label`".into(),
                        })
                    }
                }
            }
        };
        if id.is_empty() || label.is_empty() {
            return Err(Error::Parse {
                path: attr_path.to_path_buf(),
                line,
                msg: "empty node id or label".into(),
            });
        }
        if index.contains_key(id) {
            return Err(Error::DuplicateAttribute(id.to_string()));
        }
        let community = *name_index.entry(label.to_string()).or_insert_with(|| {
            names.push(label.to_string());
            names.len() - 1
        });
        index.insert(id.to_string(), node_ids.len());
        node_ids.push(id.to_string());
        labels.push(community);
    }

    let mut edges = Vec::new();
    for (line, content) in content_lines(edge_text) {
        let mut parts = content.split_whitespace();
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::Parse {
                    path: edge_path.to_path_buf(),
                    line,
                    msg: "expected two whitespace-separated node ids".into(),
                })
            }
        };
        if a == b {
            return Err(Error::SelfLoop(a.to_string()));
        }
        let lookup = |id: &str| index.get(id).copied().ok_or_else(|| Error::MissingLabel(id.to_string()));
        edges.push((lookup(a)?, lookup(b)?));
    }

    let graph = Graph::from_edges(node_ids.len(), edges)?;
    let partition = CommunityPartition::with_names(labels, names)?;
    Ok(LoadedGraph {
        graph,
        partition,
        node_ids,
    })
}

/// Serializes to the edge-list and attribute formats using dense indices as
/// node ids. Reloading yields the same adjacency and partition.
pub fn format_graph(graph: &Graph, partition: &CommunityPartition) -> (String, String) {
    let mut edges = String::with_capacity(graph.edge_count() * 10);
    for (u, v) in graph.edges() {
        let _ = writeln!(edges, "{u} {v}");
    }
    let mut attrs = String::with_capacity(graph.node_count() * 8);
    for v in 0..graph.node_count() {
        let _ = writeln!(attrs, "{v}\t{}", partition.names()[partition.label(v)]);
    }
    (edges, attrs)
}

pub fn write_graph(
    graph: &Graph,
    partition: &CommunityPartition,
    edge_list_path: &Path,
    attribute_path: &Path,
) -> Result<()> {
    let (edges, attrs) = format_graph(graph, partition);
    fs::write(edge_list_path, edges).map_err(|e| Error::io(edge_list_path, e))?;
    fs::write(attribute_path, attrs).map_err(|e| Error::io(attribute_path, e))?;
    Ok(())
}

/// Seed sets are written one node id per line, in selection order.
pub fn format_seeds(seeds: &[usize], node_ids: Option<&[String]>) -> String {
    let mut out = String::new();
    for &s in seeds {
        match node_ids {
            Some(ids) => {
                let _ = writeln!(out, "{}", ids[s]);
            }
            None => {
                let _ = writeln!(out, "{s}");
            }
        }
    }
    out
}

pub fn parse_seeds(text: &str, path: &Path, node_ids: Option<&[String]>) -> Result<Vec<usize>> {
    let mut seeds = Vec::new();
    for (line, content) in content_lines(text) {
        let index = match node_ids {
            Some(ids) => ids.iter().position(|id| id == content),
            None => content.parse().ok(),
        };
        seeds.push(index.ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("unknown node id `{content}`"),
        })?);
    }
    Ok(seeds)
}
