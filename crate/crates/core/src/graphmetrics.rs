//! Topological metrics on undirected graphs: degree, closeness,
//! eigenvector centrality and PageRank, plus the per-phase graph summary
//! used as the random-forest feature vector.
//!
//! Conventions for disconnected graphs (Mapper output is routinely
//! disconnected):
//! - closeness sums distances to *reachable* vertices only; a vertex with no
//!   reachable peers scores 0;
//! - eigenvector centrality is computed per connected component, each
//!   normalized to unit L2 norm; isolated vertices score 0;
//! - PageRank uses uniform teleport `(1 - d) / n` and spreads the mass of
//!   degree-0 vertices uniformly, so scores always sum to 1.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mapper::{Phase, RockGraph};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_DAMPING: f64 = 0.85;

/// Undirected graph with sorted, duplicate-free neighbor lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleGraph {
    adj: Vec<Vec<usize>>,
}

impl SimpleGraph {
    pub fn empty(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n] }
    }

    /// Builds from an edge list; duplicate edges collapse, self-loops and
    /// out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(invalid(format!("edge ({a}, {b}) out of range for {n} nodes")));
            }
            if a == b {
                return Err(invalid(format!("self-loop at node {a}")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adj })
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (a, list) in self.adj.iter().enumerate() {
            out.extend(list.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        out
    }

    /// Component id per node, numbered in order of lowest member.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = count;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &u in &self.adj[v] {
                    if comp[u] == usize::MAX {
                        comp[u] = count;
                        stack.push(u);
                    }
                }
            }
            count += 1;
        }
        (count, comp)
    }
}

pub fn degree(g: &SimpleGraph) -> Vec<usize> {
    (0..g.node_count()).map(|v| g.degree(v)).collect()
}

pub fn avg_degree(g: &SimpleGraph) -> f64 {
    mean(degree(g).into_iter().map(|d| d as f64))
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    if n == 0 {
        0.0
    } else {
        values.sum::<f64>() / n as f64
    }
}

/// Unweighted BFS distances from `source`; unreachable nodes get `usize::MAX`.
pub fn bfs_distances(g: &SimpleGraph, source: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.node_count()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        for &u in g.neighbors(v) {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

pub fn closeness(g: &SimpleGraph) -> Vec<f64> {
    (0..g.node_count())
        .map(|v| {
            let total: usize = bfs_distances(g, v)
                .into_iter()
                .filter(|&d| d != usize::MAX && d > 0)
                .sum();
            if total == 0 {
                0.0
            } else {
                1.0 / total as f64
            }
        })
        .collect()
}

/// Eigenvector centrality by power iteration, one connected component at a
/// time. Iterates `x <- (A + I) x`, which has the same leading eigenvector as
/// `A` but converges on bipartite components (paths, trees) where plain
/// power iteration oscillates.
pub fn eigencentrality(g: &SimpleGraph, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = g.node_count();
    let mut out = vec![0.0; n];
    let (n_comp, comp) = g.components();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_comp];
    for v in 0..n {
        members[comp[v]].push(v);
    }
    for nodes in members.iter().filter(|m| m.len() > 1) {
        let init = 1.0 / (nodes.len() as f64).sqrt();
        let mut x: Vec<f64> = vec![init; nodes.len()];
        // Local index of each member for neighbor lookups.
        let mut local = vec![usize::MAX; n];
        for (i, &v) in nodes.iter().enumerate() {
            local[v] = i;
        }
        let mut converged = false;
        let mut residual = f64::INFINITY;
        for _ in 0..max_iter {
            let mut next: Vec<f64> = nodes
                .iter()
                .enumerate()
                .map(|(i, &v)| x[i] + g.neighbors(v).iter().map(|&u| x[local[u]]).sum::<f64>())
                .collect();
            let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
            next.iter_mut().for_each(|v| *v /= norm);
            residual = next.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            x = next;
            if residual < tol {
                converged = true;
                break;
            }
        }
        if !converged {
            let mut last = out.clone();
            for (i, &v) in nodes.iter().enumerate() {
                last[v] = x[i];
            }
            return Err(Error::Convergence {
                method: "eigenvector centrality",
                iterations: max_iter,
                residual,
                last,
            });
        }
        for (i, &v) in nodes.iter().enumerate() {
            out[v] = x[i];
        }
    }
    Ok(out)
}

/// PageRank on the undirected graph (each edge walked in both directions).
pub fn pagerank(g: &SimpleGraph, damping: f64, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&damping) {
        return Err(invalid(format!("damping {damping} outside [0, 1]")));
    }
    let n = g.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let nf = n as f64;
    let mut pr = vec![1.0 / nf; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let dangling: f64 = (0..n).filter(|&v| g.degree(v) == 0).map(|v| pr[v]).sum();
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        let next: Vec<f64> = (0..n)
            .map(|v| {
                base + damping
                    * g.neighbors(v).iter().map(|&u| pr[u] / g.degree(u) as f64).sum::<f64>()
            })
            .collect();
        residual = next.iter().zip(&pr).map(|(a, b)| (a - b).abs()).sum();
        pr = next;
        if residual < tol {
            // Remove the O(tol) drift so the scores form a distribution.
            let total: f64 = pr.iter().sum();
            pr.iter_mut().for_each(|v| *v /= total);
            return Ok(pr);
        }
    }
    Err(Error::Convergence { method: "pagerank", iterations: max_iter, residual, last: pr })
}

/// Per-node metrics in the order they occupy the node feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeMetrics {
    pub degree: Vec<usize>,
    pub closeness: Vec<f64>,
    pub eigencentrality: Vec<f64>,
    pub pagerank: Vec<f64>,
}

pub fn node_metrics(g: &SimpleGraph) -> Result<NodeMetrics> {
    Ok(NodeMetrics {
        degree: degree(g),
        closeness: closeness(g),
        eigencentrality: eigencentrality(g, DEFAULT_TOL, DEFAULT_MAX_ITER)?,
        pagerank: pagerank(g, DEFAULT_DAMPING, DEFAULT_TOL, DEFAULT_MAX_ITER)?,
    })
}

/// Six global features of one phase subgraph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub node_count: usize,
    pub edge_count: usize,
    pub avg_degree: f64,
    pub avg_closeness: f64,
    pub avg_eigencentrality: f64,
    pub avg_pagerank: f64,
}

impl PhaseSummary {
    pub fn of(g: &SimpleGraph) -> Result<Self> {
        if g.node_count() == 0 {
            return Ok(Self::default());
        }
        let m = node_metrics(g)?;
        Ok(Self {
            node_count: g.node_count(),
            edge_count: g.edge_count(),
            avg_degree: mean(m.degree.iter().map(|&d| d as f64)),
            avg_closeness: mean(m.closeness.into_iter()),
            avg_eigencentrality: mean(m.eigencentrality.into_iter()),
            avg_pagerank: mean(m.pagerank.into_iter()),
        })
    }

    fn values(&self) -> [f64; 6] {
        [
            self.node_count as f64,
            self.edge_count as f64,
            self.avg_degree,
            self.avg_closeness,
            self.avg_eigencentrality,
            self.avg_pagerank,
        ]
    }
}

/// Solid and pore phase summaries: the 12 graph-level features.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub solid: PhaseSummary,
    pub pore: PhaseSummary,
}

pub const SUMMARY_FEATURE_NAMES: [&str; 12] = [
    "solid_nodes",
    "solid_edges",
    "solid_avg_degree",
    "solid_avg_closeness",
    "solid_avg_eigencentrality",
    "solid_avg_pagerank",
    "pore_nodes",
    "pore_edges",
    "pore_avg_degree",
    "pore_avg_closeness",
    "pore_avg_eigencentrality",
    "pore_avg_pagerank",
];

impl GraphSummary {
    pub fn features(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        out[..6].copy_from_slice(&self.solid.values());
        out[6..].copy_from_slice(&self.pore.values());
        out
    }
}

pub fn summarize(graph: &RockGraph) -> Result<GraphSummary> {
    let (solid, _) = graph.phase_subgraph(Phase::Solid);
    let (pore, _) = graph.phase_subgraph(Phase::Pore);
    Ok(GraphSummary { solid: PhaseSummary::of(&solid)?, pore: PhaseSummary::of(&pore)? })
}
