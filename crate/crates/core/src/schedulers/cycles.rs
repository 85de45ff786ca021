//! Small graph routines over index-based adjacency lists.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Strongly connected components (Tarjan), restricted to `alive` nodes.
pub fn strongly_connected(adj: &[Vec<usize>], alive: &[bool]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next = 0;
    for root in 0..n {
        if !alive[root] || index[root] != usize::MAX {
            continue;
        }
        // Iterative DFS: (node, next child position).
        let mut work = vec![(root, 0usize)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut ci)) = work.last_mut() {
            if *ci < adj[v].len() {
                let w = adj[v][*ci];
                *ci += 1;
                if !alive[w] {
                    continue;
                }
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&(p, _)) = work.last() {
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct CycleLimits {
    pub max_cycles: usize,
    pub max_steps: u64,
}

impl Default for CycleLimits {
    fn default() -> Self {
        CycleLimits {
            max_cycles: 4096,
            max_steps: 200_000,
        }
    }
}

/// Elementary cycles among `alive` nodes, each reported once starting from
/// its smallest node, up to the given limits. Returns the cycles and the
/// number of search steps taken.
pub fn elementary_cycles(adj: &[Vec<usize>], alive: &[bool], limits: CycleLimits) -> (Vec<Vec<usize>>, u64) {
    let mut cycles = Vec::new();
    let mut steps = 0u64;
    let mut comp_of = vec![usize::MAX; adj.len()];
    let comps = strongly_connected(adj, alive);
    for (ci, c) in comps.iter().enumerate() {
        for &v in c {
            comp_of[v] = ci;
        }
    }
    let mut on_path = vec![false; adj.len()];
    for comp in comps.iter().filter(|c| c.len() > 1) {
        for &start in comp {
            // Simple paths from `start` through larger nodes of the same
            // component that close back at `start`.
            let mut path = vec![start];
            let mut iters = vec![0usize];
            on_path[start] = true;
            while let Some(&v) = path.last() {
                let i = iters.last_mut().expect("parallel stacks");
                if *i >= adj[v].len() {
                    on_path[v] = false;
                    path.pop();
                    iters.pop();
                    continue;
                }
                let w = adj[v][*i];
                *i += 1;
                steps += 1;
                if steps >= limits.max_steps || cycles.len() >= limits.max_cycles {
                    for &p in &path {
                        on_path[p] = false;
                    }
                    return (cycles, steps);
                }
                if !alive[w] || comp_of[w] != comp_of[start] || w < start {
                    continue;
                }
                if w == start {
                    cycles.push(path.clone());
                } else if !on_path[w] {
                    on_path[w] = true;
                    path.push(w);
                    iters.push(0);
                }
            }
        }
    }
    (cycles, steps)
}

/// Kahn's algorithm over `alive` nodes, smallest ready index first. Nodes
/// left on a cycle are omitted.
pub(crate) fn topo_order(adj: &[Vec<usize>], alive: &[bool]) -> Vec<usize> {
    let n = adj.len();
    let mut indeg = vec![0u32; n];
    for v in 0..n {
        if alive[v] {
            for &w in &adj[v] {
                if alive[w] {
                    indeg[w] += 1;
                }
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| alive[v] && indeg[v] == 0).map(Reverse).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        out.push(v);
        for &w in &adj[v] {
            if alive[w] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.push(Reverse(w));
                }
            }
        }
    }
    out
}
