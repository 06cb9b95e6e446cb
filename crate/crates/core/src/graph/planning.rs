use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::VecDeque;

use super::{ClusterModel, GraphError};
use crate::embed::EmbeddingModel;
use crate::gridworld::{GridState, Layout, StateKey};

/// A cluster transition seen in the expert run, with the state it led to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Expert index of the boundary state.
    pub tick: usize,
    pub key: StateKey,
    pub state: GridState,
}

/// Clusters as nodes, expert-observed cluster transitions as edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningGraph {
    pub k: usize,
    /// Cluster of every expert state, in order.
    pub walk: Vec<usize>,
    /// Sorted by `(from, to)`.
    pub edges: Vec<Edge>,
    pub target: usize,
    pub target_key: StateKey,
    pub target_state: GridState,
}

/// The state handed to the goal-conditioned policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgoal {
    /// Cluster the query state was assigned to.
    pub cluster: usize,
    /// Next cluster on the route, or `None` once in the target cluster.
    pub next: Option<usize>,
    /// Expert index of the returned state.
    pub tick: usize,
    pub state: GridState,
}

impl PlanningGraph {
    /// Builds the graph from the cluster of each expert state. Each run
    /// boundary `a -> b` adds an edge whose sub-goal is the first state of the
    /// `b` run; when a transition repeats, the latest occurrence is kept.
    pub fn from_walk(k: usize, walk: Vec<usize>, expert: &[GridState]) -> Result<Self, GraphError> {
        if expert.is_empty() || walk.is_empty() {
            return Err(GraphError::EmptyDemonstration);
        }
        if walk.len() != expert.len() {
            return Err(GraphError::DimensionMismatch {
                expected: expert.len(),
                found: walk.len(),
            });
        }
        if let Some(&c) = walk.iter().find(|&&c| c >= k) {
            return Err(GraphError::InvalidCluster(c));
        }
        let mut edges: Vec<Edge> = Vec::new();
        for t in 1..walk.len() {
            let (from, to) = (walk[t - 1], walk[t]);
            if from == to {
                continue;
            }
            let edge = Edge {
                from,
                to,
                tick: t,
                key: expert[t].key(),
                state: expert[t].clone(),
            };
            match edges.iter_mut().find(|e| e.from == from && e.to == to) {
                Some(e) => *e = edge,
                None => edges.push(edge),
            }
        }
        edges.sort_by_key(|e| (e.from, e.to));
        let last = expert.last().expect("checked non-empty");
        Ok(Self {
            k,
            target: *walk.last().expect("checked non-empty"),
            walk,
            edges,
            target_key: last.key(),
            target_state: last.clone(),
        })
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&Edge> {
        self.edges
            .binary_search_by_key(&(from, to), |e| (e.from, e.to))
            .ok()
            .map(|i| &self.edges[i])
    }

    /// Successors of `c` in ascending order.
    pub fn successors(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.from == c).map(|e| e.to)
    }

    /// Expert walk with consecutive repeats collapsed.
    pub fn runs(&self) -> Vec<usize> {
        let mut out = self.walk.clone();
        out.dedup();
        out
    }

    /// Minimum-hop route `from -> to`; among equally short routes the one
    /// that picks the lowest cluster id at each hop.
    pub fn shortest_path(&self, from: usize, to: usize) -> Result<Vec<usize>, GraphError> {
        for c in [from, to] {
            if c >= self.k {
                return Err(GraphError::InvalidCluster(c));
            }
        }
        let mut dist = vec![usize::MAX; self.k];
        dist[to] = 0;
        let mut queue = VecDeque::from([to]);
        while let Some(c) = queue.pop_front() {
            for e in self.edges.iter().filter(|e| e.to == c) {
                if dist[e.from] == usize::MAX {
                    dist[e.from] = dist[c] + 1;
                    queue.push_back(e.from);
                }
            }
        }
        if dist[from] == usize::MAX {
            return Err(GraphError::Unreachable { from, to });
        }
        let mut path = vec![from];
        let mut c = from;
        while c != to {
            c = self
                .successors(c)
                .find(|&n| dist[n].checked_add(1) == Some(dist[c]))
                .expect("a node on a shortest route has a closer successor");
            path.push(c);
        }
        Ok(path)
    }

    /// Sub-goal for a state known to be in `cluster`: the final expert state
    /// in the target cluster, otherwise the boundary state of the first edge
    /// on the shortest route to the target.
    pub fn subgoal_from(&self, cluster: usize) -> Result<Subgoal, GraphError> {
        if cluster == self.target {
            return Ok(Subgoal {
                cluster,
                next: None,
                tick: self.walk.len() - 1,
                state: self.target_state.clone(),
            });
        }
        let path = self.shortest_path(cluster, self.target)?;
        let e = self.edge(path[0], path[1]).expect("path hops are edges");
        Ok(Subgoal {
            cluster,
            next: Some(e.to),
            tick: e.tick,
            state: e.state.clone(),
        })
    }

    /// Sub-goal for a state whose latent is `z`, via [`Self::subgoal_from`] on
    /// its cluster. A cluster with no route borrows the answer of the nearest
    /// cluster (by centroid distance) that has one.
    pub fn subgoal_for_latent(&self, clusters: &ClusterModel, z: &[f64]) -> Result<Subgoal, GraphError> {
        let cluster = clusters.assign(z);
        let order = std::iter::once(cluster).chain(clusters.by_distance(z).into_iter().filter(|&c| c != cluster));
        for c in order {
            if let Ok(sg) = self.subgoal_from(c) {
                return Ok(Subgoal { cluster, ..sg });
            }
        }
        Err(GraphError::NoPath(cluster))
    }

    pub fn get_subgoal(
        &self,
        clusters: &ClusterModel,
        embedding: &EmbeddingModel,
        layout: &Layout,
        state: &GridState,
    ) -> Result<Subgoal, GraphError> {
        self.subgoal_for_latent(clusters, &embedding.embed_state(layout, state)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json()))
    }

    pub(crate) fn check(&self) -> Result<(), GraphError> {
        if self.walk.is_empty() || self.target >= self.k || self.edges.iter().any(|e| e.from >= self.k || e.to >= self.k) {
            return Err(GraphError::Format("cluster ids out of range".into()));
        }
        Ok(())
    }
}

/// Assigns every expert state with `embedding` and `clusters`, then builds the graph.
pub fn build_planning_graph(
    clusters: &ClusterModel,
    embedding: &EmbeddingModel,
    layout: &Layout,
    expert: &[GridState],
) -> Result<PlanningGraph, GraphError> {
    if expert.is_empty() {
        return Err(GraphError::EmptyDemonstration);
    }
    let mut walk = Vec::with_capacity(expert.len());
    for s in expert {
        walk.push(clusters.assign(&embedding.embed_state(layout, s)?));
    }
    PlanningGraph::from_walk(clusters.k(), walk, expert)
}
