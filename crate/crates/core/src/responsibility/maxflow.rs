//! Edmonds–Karp max-flow with infinite capacities and min-cut extraction.

use std::collections::VecDeque;

/// Infinite capacity; sums saturate at this value.
pub const INF: u64 = u64::MAX;

#[derive(Debug, Clone)]
pub struct FlowGraph {
    adj: Vec<Vec<usize>>,
    /// Arc `2e` is edge `e`, arc `2e + 1` its reverse.
    head: Vec<usize>,
    cap: Vec<u64>,
    residual: Vec<u64>,
}

impl FlowGraph {
    pub fn new(nodes: usize) -> Self {
        FlowGraph {
            adj: vec![Vec::new(); nodes],
            head: Vec::new(),
            cap: Vec::new(),
            residual: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.head.len() / 2
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: u64) -> usize {
        let e = self.head.len() / 2;
        self.adj[from].push(2 * e);
        self.adj[to].push(2 * e + 1);
        self.head.extend([to, from]);
        self.cap.extend([cap, 0]);
        self.residual.extend([cap, 0]);
        e
    }

    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        (self.head[2 * e + 1], self.head[2 * e])
    }

    pub fn capacity(&self, e: usize) -> u64 {
        self.cap[2 * e]
    }

    /// Changes a capacity; call [`FlowGraph::reset`] before the next run.
    pub fn set_capacity(&mut self, e: usize, cap: u64) {
        self.cap[2 * e] = cap;
    }

    /// Drops the current flow.
    pub fn reset(&mut self) {
        self.residual.copy_from_slice(&self.cap);
    }

    /// Maximum flow from `s` to `t`, or [`INF`] when an all-infinite path
    /// exists. Leaves the final residual graph in place.
    pub fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        self.reset();
        if s == t {
            return INF;
        }
        let n = self.adj.len();
        let mut total: u64 = 0;
        let mut via = vec![usize::MAX; n];
        loop {
            via.iter_mut().for_each(|v| *v = usize::MAX);
            via[s] = usize::MAX - 1;
            let mut queue = VecDeque::from([s]);
            'bfs: while let Some(u) = queue.pop_front() {
                for &a in &self.adj[u] {
                    let v = self.head[a];
                    if self.residual[a] > 0 && via[v] == usize::MAX {
                        via[v] = a;
                        if v == t {
                            break 'bfs;
                        }
                        queue.push_back(v);
                    }
                }
            }
            if via[t] == usize::MAX {
                return total;
            }
            let mut bottleneck = INF;
            let mut v = t;
            while v != s {
                let a = via[v];
                bottleneck = bottleneck.min(self.residual[a]);
                v = self.head[a ^ 1];
            }
            if bottleneck == INF {
                return INF;
            }
            let mut v = t;
            while v != s {
                let a = via[v];
                if self.residual[a] != INF {
                    self.residual[a] -= bottleneck;
                }
                if self.residual[a ^ 1] != INF {
                    self.residual[a ^ 1] = self.residual[a ^ 1].saturating_add(bottleneck);
                }
                v = self.head[a ^ 1];
            }
            total = total.saturating_add(bottleneck);
        }
    }

    /// Nodes reachable from `s` in the residual graph of the last run.
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &a in &self.adj[u] {
                let v = self.head[a];
                if self.residual[a] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Nodes that can still reach `t` in the residual graph of the last run.
    pub fn target_side(&self, t: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[t] = true;
        let mut stack = vec![t];
        while let Some(w) = stack.pop() {
            for &a in &self.adj[w] {
                // arc a ^ 1 runs from head[a] into w
                let u = self.head[a];
                if self.residual[a ^ 1] > 0 && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }

    /// Edges leaving the source side of the last run (the minimum cut
    /// nearest the source).
    pub fn min_cut_edges(&self, s: usize) -> Vec<usize> {
        let side = self.source_side(s);
        self.crossing(|n| side[n])
    }

    /// Edges entering the target side of the last run (the minimum cut
    /// nearest the target).
    pub fn min_cut_edges_near_target(&self, t: usize) -> Vec<usize> {
        let side = self.target_side(t);
        self.crossing(|n| !side[n])
    }

    fn crossing(&self, inside: impl Fn(usize) -> bool) -> Vec<usize> {
        (0..self.edge_count())
            .filter(|&e| {
                let (u, v) = self.endpoints(e);
                inside(u) && !inside(v)
            })
            .collect()
    }
}
