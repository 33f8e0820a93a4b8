//! Network simplex for the dense bipartite transportation problem.
//!
//! Nodes 0..n are sources, n..n+m are sinks; every (source, sink) pair is an
//! arc with the given cost. The basis is a spanning tree kept as parent
//! pointers; each pivot enters the most negatively priced arc, pushes flow
//! around the unique tree cycle, and re-hangs the cut subtree.

use crate::error::{Error, Result};

const ROOT: usize = usize::MAX;

struct Tree {
    n: usize,
    m: usize,
    parent: Vec<usize>,
    /// Flow on the arc between a node and its parent.
    parent_flow: Vec<f64>,
    depth: Vec<usize>,
    potential: Vec<f64>,
    in_basis: Vec<bool>,
}

impl Tree {
    /// Arc (source, sink) of the tree edge between `v` and its parent.
    fn arc_of(&self, v: usize) -> (usize, usize) {
        let p = self.parent[v];
        if v < self.n {
            (v, p - self.n)
        } else {
            (p, v - self.n)
        }
    }

    /// Recompute depths and potentials by one sweep from the root (node 0).
    fn refresh(&mut self, cost: &[f64]) {
        let total = self.n + self.m;
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); total];
        for v in 0..total {
            if self.parent[v] != ROOT {
                children[self.parent[v]].push(v);
            }
        }
        self.depth[0] = 0;
        self.potential[0] = 0.0;
        let mut stack = vec![0usize];
        let mut seen = 1usize;
        while let Some(v) = stack.pop() {
            for &w in &children[v] {
                self.depth[w] = self.depth[v] + 1;
                let (s, t) = self.arc_of(w);
                self.potential[w] = cost[s * self.m + t] - self.potential[v];
                stack.push(w);
                seen += 1;
            }
        }
        debug_assert_eq!(seen, total, "basis is not a spanning tree");
    }
}

/// Solve min Σ γ_ij c_ij with marginals `supply` and `demand`.
/// Returns the optimal coupling as sparse (i, j, flow > 0) entries.
pub(crate) fn solve_transportation(
    supply: &[f64],
    demand: &[f64],
    cost: &[f64],
) -> Result<Vec<(u32, u32, f64)>> {
    let n = supply.len();
    let m = demand.len();
    assert_eq!(cost.len(), n * m);
    let mass_gap = (supply.iter().sum::<f64>() - demand.iter().sum::<f64>()).abs();
    if mass_gap > 1e-10 {
        return Err(Error::Infeasible(mass_gap));
    }
    if n == 0 || m == 0 {
        return Err(Error::ZeroMass);
    }

    let total = n + m;
    let mut tree = Tree {
        n,
        m,
        parent: vec![ROOT; total],
        parent_flow: vec![0.0; total],
        depth: vec![0; total],
        potential: vec![0.0; total],
        in_basis: vec![false; n * m],
    };

    // Northwest-corner initial basis: n + m - 1 arcs forming a spanning tree.
    let mut rs = supply.to_vec();
    let mut rd = demand.to_vec();
    let mut basic: Vec<(usize, usize, f64)> = Vec::with_capacity(total - 1);
    let (mut i, mut j) = (0usize, 0usize);
    loop {
        let f = rs[i].min(rd[j]).max(0.0);
        basic.push((i, j, f));
        rs[i] -= f;
        rd[j] -= f;
        if i == n - 1 && j == m - 1 {
            break;
        }
        if (rs[i] <= rd[j] && i < n - 1) || j == m - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    debug_assert_eq!(basic.len(), total - 1);

    // Hang the basis tree from source 0 by breadth-first search.
    {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); total];
        for (s, t, f) in &basic {
            tree.in_basis[s * m + t] = true;
            adj[*s].push((n + t, *f));
            adj[n + t].push((*s, *f));
        }
        let mut queue = std::collections::VecDeque::from([0usize]);
        let mut visited = vec![false; total];
        visited[0] = true;
        while let Some(v) = queue.pop_front() {
            for &(w, f) in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    tree.parent[w] = v;
                    tree.parent_flow[w] = f;
                    queue.push_back(w);
                }
            }
        }
        if visited.iter().any(|v| !v) {
            return Err(Error::NoConvergence("initial basis is disconnected".into()));
        }
    }

    let max_cost = cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let tol = 1e-11 * (1.0 + max_cost);
    let pivot_cap = 1000 + 100 * total * total;

    for _pivot in 0..pivot_cap {
        tree.refresh(cost);

        // Price all nonbasic arcs; take the most negative reduced cost.
        let mut best = -tol;
        let mut enter: Option<(usize, usize)> = None;
        for s in 0..n {
            let us = tree.potential[s];
            let row = &cost[s * m..(s + 1) * m];
            for (t, c) in row.iter().enumerate() {
                if tree.in_basis[s * m + t] {
                    continue;
                }
                let rc = c - us - tree.potential[n + t];
                if rc < best {
                    best = rc;
                    enter = Some((s, t));
                }
            }
        }
        let Some((es, et)) = enter else {
            // Optimal: collect positive flows from the tree arcs.
            let mut out = Vec::new();
            for v in 0..total {
                if tree.parent[v] == ROOT {
                    continue;
                }
                let (s, t) = tree.arc_of(v);
                let f = tree.parent_flow[v];
                if f > 0.0 {
                    out.push((s as u32, t as u32, f));
                }
            }
            return Ok(out);
        };

        // Unique cycle: climb from both ends of the entering arc to their LCA.
        // Arc signs alternate starting with -1 at both endpoints.
        let (mut a, mut b) = (es, n + et);
        let mut path_a: Vec<usize> = Vec::new();
        let mut path_b: Vec<usize> = Vec::new();
        while tree.depth[a] > tree.depth[b] {
            path_a.push(a);
            a = tree.parent[a];
        }
        while tree.depth[b] > tree.depth[a] {
            path_b.push(b);
            b = tree.parent[b];
        }
        while a != b {
            path_a.push(a);
            a = tree.parent[a];
            path_b.push(b);
            b = tree.parent[b];
        }

        // theta = min flow over minus arcs; remember the first minimizer.
        let mut theta = f64::INFINITY;
        let mut leave: Option<(bool, usize)> = None; // (on path_a, index)
        for (k, z) in path_a.iter().enumerate() {
            if k % 2 == 0 && tree.parent_flow[*z] < theta {
                theta = tree.parent_flow[*z];
                leave = Some((true, k));
            }
        }
        for (k, z) in path_b.iter().enumerate() {
            if k % 2 == 0 && tree.parent_flow[*z] < theta {
                theta = tree.parent_flow[*z];
                leave = Some((false, k));
            }
        }
        let (on_a, leave_idx) =
            leave.ok_or_else(|| Error::NoConvergence("degenerate pivot cycle".into()))?;
        let theta = theta.max(0.0);

        for (k, z) in path_a.iter().enumerate() {
            tree.parent_flow[*z] += if k % 2 == 0 { -theta } else { theta };
            tree.parent_flow[*z] = tree.parent_flow[*z].max(0.0);
        }
        for (k, z) in path_b.iter().enumerate() {
            tree.parent_flow[*z] += if k % 2 == 0 { -theta } else { theta };
            tree.parent_flow[*z] = tree.parent_flow[*z].max(0.0);
        }

        // Remove the leaving arc, reverse the chain from the entering endpoint
        // up to the cut, and attach the subtree through the entering arc.
        let (chain, attach_to, attach_node) = if on_a {
            (&path_a[..=leave_idx], n + et, es)
        } else {
            (&path_b[..=leave_idx], es, n + et)
        };
        let (ls, lt) = tree.arc_of(chain[leave_idx]);
        tree.in_basis[ls * m + lt] = false;
        tree.in_basis[es * m + et] = true;

        let old_flows: Vec<f64> = chain.iter().map(|z| tree.parent_flow[*z]).collect();
        for l in (1..chain.len()).rev() {
            tree.parent[chain[l]] = chain[l - 1];
            tree.parent_flow[chain[l]] = old_flows[l - 1];
        }
        tree.parent[attach_node] = attach_to;
        tree.parent_flow[attach_node] = theta;
    }

    Err(Error::NoConvergence(format!(
        "network simplex exceeded {pivot_cap} pivots"
    )))
}
