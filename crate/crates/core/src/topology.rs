//! Graph families used as CTMC states, and the per-neighbor gossip rates
//! that give every non-isolated node a total push rate of `lambda`.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn default_wraparound() -> bool {
    true
}

/// A named graph family, realised for a concrete `n` by [`build_topology`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologySpec {
    Complete,
    Ring,
    /// `sqrt(n) x sqrt(n)` lattice; a torus unless `wraparound` is false.
    Grid {
        #[serde(default = "default_wraparound")]
        wraparound: bool,
    },
    Disconnected,
    /// Explicit undirected edge list with optional per-edge weights.
    ///
    /// `path` names an edge-list file; [`crate::config`] resolves it into
    /// `edges` (and `weights`) at load time.
    Custom {
        #[serde(default)]
        edges: Vec<[usize; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<String>,
    },
}

impl TopologySpec {
    pub fn grid() -> Self {
        TopologySpec::Grid { wraparound: true }
    }

    pub fn custom(edges: Vec<[usize; 2]>) -> Self {
        TopologySpec::Custom {
            edges,
            weights: None,
            path: None,
        }
    }

    /// Short label used in logs and JSON output.
    pub fn label(&self) -> &'static str {
        match self {
            TopologySpec::Complete => "complete",
            TopologySpec::Ring => "ring",
            TopologySpec::Grid { .. } => "grid",
            TopologySpec::Disconnected => "disconnected",
            TopologySpec::Custom { .. } => "custom",
        }
    }
}

/// Realised undirected graph. Gossip flows both ways along every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    adjacency: Vec<Vec<usize>>,
    /// Per adjacency entry edge weight; `None` means uniform.
    weights: Option<Vec<Vec<f64>>>,
}

impl Graph {
    /// Builds a graph from an undirected edge list, rejecting self-loops,
    /// duplicates and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[[usize; 2]], weights: Option<&[f64]>) -> Result<Self> {
        if let Some(w) = weights {
            if w.len() != edges.len() {
                return Err(Error::config(format!(
                    "custom topology has {} edges but {} weights",
                    edges.len(),
                    w.len()
                )));
            }
            if let Some(bad) = w.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
                return Err(Error::config(format!("edge weight {bad} is not positive")));
            }
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); n];
        let mut adj_weights = weights.map(|_| vec![Vec::new(); n]);
        for (idx, &[a, b]) in edges.iter().enumerate() {
            if a >= n || b >= n {
                return Err(Error::config(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::config(format!("self-loop on node {a}")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::config(format!("duplicate edge ({a}, {b})")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
            if let (Some(aw), Some(w)) = (adj_weights.as_mut(), weights) {
                aw[a].push(w[idx]);
                aw[b].push(w[idx]);
            }
        }
        Ok(Graph {
            n,
            adjacency,
            weights: adj_weights,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Undirected edges with `a < b`, in adjacency order.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (a, nbrs) in self.adjacency.iter().enumerate() {
            out.extend(nbrs.iter().filter(|&&b| a < b).map(|&b| [a, b]));
        }
        out
    }

    /// True when every node can reach every other node (`n <= 1` counts as connected).
    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }
}

/// Builds the graph for `spec` on `n` nodes (0-based indices).
pub fn build_topology(spec: &TopologySpec, n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::config("node count must be at least 1"));
    }
    match spec {
        TopologySpec::Complete => {
            let adjacency = (0..n)
                .map(|i| (0..n).filter(|&j| j != i).collect())
                .collect();
            Ok(Graph {
                n,
                adjacency,
                weights: None,
            })
        }
        TopologySpec::Ring => {
            if n < 3 {
                return Err(Error::config(format!("ring needs at least 3 nodes, got {n}")));
            }
            let adjacency = (0..n).map(|i| vec![(i + n - 1) % n, (i + 1) % n]).collect();
            Ok(Graph {
                n,
                adjacency,
                weights: None,
            })
        }
        TopologySpec::Grid { wraparound } => {
            let side = integer_sqrt(n)
                .ok_or_else(|| Error::config(format!("grid needs a perfect-square n, got {n}")))?;
            let mut edges = Vec::with_capacity(2 * n);
            for r in 0..side {
                for c in 0..side {
                    let v = r * side + c;
                    if c + 1 < side {
                        edges.push([v, v + 1]);
                    } else if *wraparound && side > 2 {
                        edges.push([v, r * side]);
                    }
                    if r + 1 < side {
                        edges.push([v, v + side]);
                    } else if *wraparound && side > 2 {
                        edges.push([v, c]);
                    }
                }
            }
            Graph::from_edges(n, &edges, None)
        }
        TopologySpec::Disconnected => Ok(Graph {
            n,
            adjacency: vec![Vec::new(); n],
            weights: None,
        }),
        TopologySpec::Custom {
            edges,
            weights,
            path,
        } => {
            if edges.is_empty() {
                if let Some(p) = path {
                    return Err(Error::config(format!(
                        "edge-list file {p} was not loaded; resolve it through the config loader"
                    )));
                }
            }
            Graph::from_edges(n, edges, weights.as_deref())
        }
    }
}

fn integer_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// Per-node, per-neighbor push rates for one topology.
#[derive(Debug, Clone, PartialEq)]
pub struct GossipRateTable {
    /// `rates[i][m]` is the rate from `i` to its `m`-th neighbor.
    rates: Vec<Vec<f64>>,
    totals: Vec<f64>,
    uniform: bool,
}

impl GossipRateTable {
    pub fn rate(&self, node: usize, slot: usize) -> f64 {
        self.rates[node][slot]
    }

    pub fn node_rates(&self, node: usize) -> &[f64] {
        &self.rates[node]
    }

    pub fn total(&self, node: usize) -> f64 {
        self.totals[node]
    }

    pub fn totals(&self) -> &[f64] {
        &self.totals
    }

    /// True when every node splits its rate evenly over its neighbors.
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Chooses a neighbor slot of `node` for a gossip push, given `u` uniform in `[0, 1)`.
    /// The node must have positive degree.
    pub fn pick_slot(&self, node: usize, u: f64) -> usize {
        let rates = &self.rates[node];
        let deg = rates.len();
        if self.uniform {
            return ((u * deg as f64) as usize).min(deg - 1);
        }
        let mut target = u * self.totals[node];
        for (slot, r) in rates.iter().enumerate() {
            if target < *r {
                return slot;
            }
            target -= r;
        }
        deg - 1
    }
}

/// Splits `lambda` over each node's neighbors: evenly, or proportionally
/// to edge weights for weighted custom graphs. Isolated nodes get total 0.
pub fn gossip_rates(graph: &Graph, lambda: f64) -> GossipRateTable {
    let mut rates = Vec::with_capacity(graph.n);
    let mut totals = Vec::with_capacity(graph.n);
    for i in 0..graph.n {
        let deg = graph.degree(i);
        if deg == 0 {
            rates.push(Vec::new());
            totals.push(0.0);
            continue;
        }
        let row: Vec<f64> = match &graph.weights {
            Some(w) => {
                let sum: f64 = w[i].iter().sum();
                w[i].iter().map(|x| lambda * x / sum).collect()
            }
            None => vec![lambda / deg as f64; deg],
        };
        rates.push(row);
        totals.push(lambda);
    }
    GossipRateTable {
        rates,
        totals,
        uniform: graph.weights.is_none(),
    }
}

/// Edges plus optional per-edge weights, as read from an edge-list file.
pub type EdgeList = (Vec<[usize; 2]>, Option<Vec<f64>>);

/// Reads an edge-list file: one `i j` (optionally `i j w`) pair per line,
/// 0-based. Blank lines and `#` comments are skipped. Returns the edges and,
/// when every line carries a weight, the weights.
pub fn read_edge_list(path: &Path) -> Result<EdgeList> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_edge_list(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_edge_list(text: &str) -> Result<EdgeList> {
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::config(format!("line {}: expected \"i j [w]\", got {line:?}", lineno + 1));
        if fields.len() < 2 || fields.len() > 3 {
            return Err(bad());
        }
        let a = fields[0].parse().map_err(|_| bad())?;
        let b = fields[1].parse().map_err(|_| bad())?;
        edges.push([a, b]);
        if let Some(w) = fields.get(2) {
            weights.push(w.parse::<f64>().map_err(|_| bad())?);
        }
    }
    let weights = match weights.len() {
        0 => None,
        k if k == edges.len() => Some(weights),
        _ => return Err(Error::config("edge list mixes weighted and unweighted lines")),
    };
    Ok((edges, weights))
}
