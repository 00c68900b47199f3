use nalgebra::DVector;

use crate::ctmc::Chain;
use crate::topology::{build_topology, gossip_rates, Graph, GossipRateTable};
use crate::Result;

use super::SimConfig;

/// Everything about a configuration that is fixed for a given `n`: the
/// graph and gossip rates of every CTMC state, and the evaluated chain.
/// Immutable once built and shareable between runs.
#[derive(Debug, Clone)]
pub struct Network {
    n: usize,
    graphs: Vec<Graph>,
    rates: Vec<GossipRateTable>,
    /// Nodes with positive degree, per state.
    active: Vec<Vec<usize>>,
    chain: Chain,
    pi: DVector<f64>,
}

impl Network {
    pub fn build(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let chain = cfg.ctmc.at(cfg.n)?;
        let pi = chain.stationary()?;
        let graphs = cfg
            .ctmc
            .states
            .iter()
            .map(|spec| build_topology(spec, cfg.n))
            .collect::<Result<Vec<_>>>()?;
        let rates = graphs.iter().map(|g| gossip_rates(g, cfg.lambda)).collect();
        let active = graphs
            .iter()
            .map(|g| (0..g.n()).filter(|&i| g.degree(i) > 0).collect())
            .collect();
        Ok(Network {
            n: cfg.n,
            graphs,
            rates,
            active,
            chain,
            pi,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_states(&self) -> usize {
        self.graphs.len()
    }

    pub fn graph(&self, state: usize) -> &Graph {
        &self.graphs[state]
    }

    pub fn rates(&self, state: usize) -> &GossipRateTable {
        &self.rates[state]
    }

    pub fn active_nodes(&self, state: usize) -> &[usize] {
        &self.active[state]
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn stationary(&self) -> &DVector<f64> {
        &self.pi
    }

    /// True when the union of all state graphs is connected, i.e. a packet
    /// can eventually reach every node.
    pub fn union_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        seen[0] = true;
        let mut stack = vec![0];
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for g in &self.graphs {
                for &w in g.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        count += 1;
                        stack.push(w);
                    }
                }
            }
        }
        count == self.n
    }

    /// True when at least one state's graph is connected on its own.
    pub fn any_state_connected(&self) -> bool {
        self.graphs.iter().any(Graph::is_connected)
    }
}
