//! Strongly connected components and the condensation DAG.
//!
//! Tarjan's algorithm with an explicit frame stack: no recursion, so a path
//! graph of tens of millions of nodes cannot overflow the call stack.
//! Component ids are canonical: components are numbered in ascending order of
//! their smallest member index, which makes every downstream result
//! reproducible byte for byte.

use thiserror::Error;

use crate::graph::{DirectedGraph, NodeIndex};

/// Dense strongly-connected-component identifier.
pub type ComponentId = u32;

#[derive(Debug, Error)]
pub enum SccError {
    #[error("partition covers {partition_nodes} nodes but the graph has {graph_nodes}")]
    PartitionMismatch { partition_nodes: usize, graph_nodes: usize },
}

/// Assignment of every node to its strongly connected component.
#[derive(Debug, PartialEq, Eq)]
pub struct SccPartition {
    component_of: Vec<ComponentId>,
    sizes: Vec<u32>,
}

impl SccPartition {
    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn component_of(&self, n: NodeIndex) -> ComponentId {
        self.component_of[n as usize]
    }

    /// Per-node component ids, indexed by node.
    pub fn assignments(&self) -> &[ComponentId] {
        &self.component_of
    }

    /// Original node count of one component.
    pub fn size(&self, c: ComponentId) -> u32 {
        self.sizes[c as usize]
    }

    /// Original node counts, indexed by component id.
    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }
}

const UNVISITED: u32 = u32::MAX;

/// Tarjan's algorithm, iterative. Every node lands in exactly one component;
/// ids are canonicalized to ascending smallest-member order.
pub fn compute_scc(g: &DirectedGraph) -> SccPartition {
    let n = g.node_count();
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut comp_raw = vec![UNVISITED; n];
    let mut stack: Vec<NodeIndex> = Vec::new();
    // (node, position within its out-neighbor slice)
    let mut frames: Vec<(NodeIndex, usize)> = Vec::new();
    let mut counter = 0u32;
    let mut comp_count = 0u32;

    for root in 0..n as NodeIndex {
        if index[root as usize] != UNVISITED {
            continue;
        }
        index[root as usize] = counter;
        lowlink[root as usize] = counter;
        counter += 1;
        on_stack[root as usize] = true;
        stack.push(root);
        frames.push((root, 0));

        while let Some(&mut (v, ref mut cursor)) = frames.last_mut() {
            let succ = g.out_neighbors(v);
            if *cursor < succ.len() {
                let w = succ[*cursor];
                *cursor += 1;
                if index[w as usize] == UNVISITED {
                    index[w as usize] = counter;
                    lowlink[w as usize] = counter;
                    counter += 1;
                    on_stack[w as usize] = true;
                    stack.push(w);
                    frames.push((w, 0));
                } else if on_stack[w as usize] {
                    lowlink[v as usize] = lowlink[v as usize].min(index[w as usize]);
                }
            } else {
                frames.pop();
                if lowlink[v as usize] == index[v as usize] {
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w as usize] = false;
                        comp_raw[w as usize] = comp_count;
                        if w == v {
                            break;
                        }
                    }
                    comp_count += 1;
                }
                if let Some(&mut (p, _)) = frames.last_mut() {
                    lowlink[p as usize] = lowlink[p as usize].min(lowlink[v as usize]);
                }
            }
        }
    }

    // Renumber so component ids ascend with their smallest member index.
    let mut rank = vec![UNVISITED; comp_count as usize];
    let mut component_of = vec![0 as ComponentId; n];
    let mut next = 0u32;
    for u in 0..n {
        let raw = comp_raw[u] as usize;
        if rank[raw] == UNVISITED {
            rank[raw] = next;
            next += 1;
        }
        component_of[u] = rank[raw];
    }
    let mut sizes = vec![0u32; comp_count as usize];
    for &c in &component_of {
        sizes[c as usize] += 1;
    }
    SccPartition { component_of, sizes }
}

/// Condensation of a directed graph: one super-node per component, one
/// weighted arc per ordered component pair with at least one original arc.
///
/// Invariants: no self-arcs, acyclic, and arc weights plus the intra-component
/// count sum to the original arc count.
#[derive(Debug)]
pub struct CondensedDag {
    sizes: Vec<u32>,
    fwd_offsets: Vec<usize>,
    fwd_targets: Vec<ComponentId>,
    fwd_weights: Vec<u64>,
    rev_offsets: Vec<usize>,
    rev_targets: Vec<ComponentId>,
    intra_arc_count: u64,
}

impl CondensedDag {
    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }

    /// Original node count carried by one super-node.
    pub fn size(&self, c: ComponentId) -> u32 {
        self.sizes[c as usize]
    }

    pub fn arc_count(&self) -> u64 {
        self.fwd_targets.len() as u64
    }

    pub fn successors(&self, c: ComponentId) -> &[ComponentId] {
        let c = c as usize;
        &self.fwd_targets[self.fwd_offsets[c]..self.fwd_offsets[c + 1]]
    }

    /// Successor components paired with original-arc multiplicities.
    pub fn weighted_successors(&self, c: ComponentId) -> impl Iterator<Item = (ComponentId, u64)> + '_ {
        let c = c as usize;
        let range = self.fwd_offsets[c]..self.fwd_offsets[c + 1];
        self.fwd_targets[range.clone()].iter().copied().zip(self.fwd_weights[range].iter().copied())
    }

    pub fn predecessors(&self, c: ComponentId) -> &[ComponentId] {
        let c = c as usize;
        &self.rev_targets[self.rev_offsets[c]..self.rev_offsets[c + 1]]
    }

    /// Arcs that stayed inside a component (not represented in the DAG).
    pub fn intra_arc_count(&self) -> u64 {
        self.intra_arc_count
    }

    pub fn weight_sum(&self) -> u64 {
        self.fwd_weights.iter().sum()
    }

    /// Kahn's algorithm; the condensation of any directed graph passes.
    pub fn is_acyclic(&self) -> bool {
        let c = self.component_count();
        let mut indegree = vec![0u32; c];
        for &t in &self.fwd_targets {
            indegree[t as usize] += 1;
        }
        let mut queue: Vec<ComponentId> =
            (0..c as ComponentId).filter(|&v| indegree[v as usize] == 0).collect();
        let mut seen = 0usize;
        while let Some(v) = queue.pop() {
            seen += 1;
            for &w in self.successors(v) {
                indegree[w as usize] -= 1;
                if indegree[w as usize] == 0 {
                    queue.push(w);
                }
            }
        }
        seen == c
    }
}

/// Builds the condensation DAG for a graph under its component partition.
pub fn condense(g: &DirectedGraph, p: &SccPartition) -> Result<CondensedDag, SccError> {
    let n = g.node_count();
    if p.assignments().len() != n {
        return Err(SccError::PartitionMismatch {
            partition_nodes: p.assignments().len(),
            graph_nodes: n,
        });
    }
    let c = p.component_count();

    // Nodes grouped by component, via counting sort.
    let mut starts = vec![0usize; c + 1];
    for &cid in p.assignments() {
        starts[cid as usize + 1] += 1;
    }
    for i in 0..c {
        starts[i + 1] += starts[i];
    }
    let mut members = vec![0 as NodeIndex; n];
    let mut cursor = starts.clone();
    for u in 0..n {
        let cid = p.component_of(u as NodeIndex) as usize;
        members[cursor[cid]] = u as NodeIndex;
        cursor[cid] += 1;
    }

    // Pass 1: distinct successor count per component, using a stamp array.
    let mut stamp = vec![UNVISITED; c];
    let mut fwd_offsets = vec![0usize; c + 1];
    let mut intra = 0u64;
    for cid in 0..c {
        let mut distinct = 0usize;
        for &u in &members[starts[cid]..starts[cid + 1]] {
            for &v in g.out_neighbors(u) {
                let cv = p.component_of(v) as usize;
                if cv == cid {
                    intra += 1;
                } else if stamp[cv] != cid as u32 {
                    stamp[cv] = cid as u32;
                    distinct += 1;
                }
            }
        }
        fwd_offsets[cid + 1] = distinct;
    }
    for i in 0..c {
        fwd_offsets[i + 1] += fwd_offsets[i];
    }

    // Pass 2: fill targets (sorted per source) and accumulate weights.
    let dag_arcs = fwd_offsets[c];
    let mut fwd_targets = vec![0 as ComponentId; dag_arcs];
    let mut fwd_weights = vec![0u64; dag_arcs];
    let mut weight_scratch = vec![0u64; c];
    let mut touched: Vec<ComponentId> = Vec::new();
    for cid in 0..c {
        touched.clear();
        for &u in &members[starts[cid]..starts[cid + 1]] {
            for &v in g.out_neighbors(u) {
                let cv = p.component_of(v);
                if cv as usize == cid {
                    continue;
                }
                if weight_scratch[cv as usize] == 0 {
                    touched.push(cv);
                }
                weight_scratch[cv as usize] += 1;
            }
        }
        touched.sort_unstable();
        let base = fwd_offsets[cid];
        for (i, &cv) in touched.iter().enumerate() {
            fwd_targets[base + i] = cv;
            fwd_weights[base + i] = weight_scratch[cv as usize];
            weight_scratch[cv as usize] = 0;
        }
    }

    // Reverse adjacency; ascending source order keeps lists sorted.
    let mut rev_offsets = vec![0usize; c + 1];
    for &t in &fwd_targets {
        rev_offsets[t as usize + 1] += 1;
    }
    for i in 0..c {
        rev_offsets[i + 1] += rev_offsets[i];
    }
    let mut rev_targets = vec![0 as ComponentId; dag_arcs];
    let mut rev_cursor = rev_offsets.clone();
    for cid in 0..c as ComponentId {
        for &cv in &fwd_targets[fwd_offsets[cid as usize]..fwd_offsets[cid as usize + 1]] {
            rev_targets[rev_cursor[cv as usize]] = cid;
            rev_cursor[cv as usize] += 1;
        }
    }

    Ok(CondensedDag {
        sizes: p.sizes().to_vec(),
        fwd_offsets,
        fwd_targets,
        fwd_weights,
        rev_offsets,
        rev_targets,
        intra_arc_count: intra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::synth::canon11_arcs;

    #[test]
    fn cycle_with_tail() {
        let g = build_graph([(1, 2), (2, 3), (3, 1), (3, 4)]).unwrap();
        let p = compute_scc(&g);
        assert_eq!(p.component_count(), 2);
        let c123 = p.component_of(g.index_of(1).unwrap());
        assert_eq!(p.component_of(g.index_of(2).unwrap()), c123);
        assert_eq!(p.component_of(g.index_of(3).unwrap()), c123);
        assert_ne!(p.component_of(g.index_of(4).unwrap()), c123);
        assert_eq!(p.size(c123), 3);
    }

    #[test]
    fn canonical_example_partition() {
        let g = build_graph(canon11_arcs()).unwrap();
        let p = compute_scc(&g);
        assert_eq!(p.component_count(), 10);
        let sizes_sum: u64 = p.sizes().iter().map(|&s| s as u64).sum();
        assert_eq!(sizes_sum, 11);
        let two = p.component_of(g.index_of(1).unwrap());
        assert_eq!(p.component_of(g.index_of(2).unwrap()), two);
        assert_eq!(p.size(two), 2);
        assert_eq!(p.sizes().iter().filter(|&&s| s == 1).count(), 9);
    }

    #[test]
    fn empty_graph() {
        let g = build_graph([]).unwrap();
        let p = compute_scc(&g);
        assert_eq!(p.component_count(), 0);
        let dag = condense(&g, &p).unwrap();
        assert_eq!(dag.component_count(), 0);
        assert_eq!(dag.arc_count(), 0);
    }

    #[test]
    fn parallel_arcs_collapse_to_weight() {
        let g = build_graph([(1, 2), (2, 1), (1, 3), (2, 3)]).unwrap();
        let p = compute_scc(&g);
        let dag = condense(&g, &p).unwrap();
        assert_eq!(dag.component_count(), 2);
        assert_eq!(dag.arc_count(), 1);
        let c12 = p.component_of(g.index_of(1).unwrap());
        let arcs: Vec<_> = dag.weighted_successors(c12).collect();
        assert_eq!(arcs, vec![(p.component_of(g.index_of(3).unwrap()), 2)]);
        assert_eq!(dag.intra_arc_count(), 2);
        assert_eq!(dag.weight_sum() + dag.intra_arc_count(), g.arc_count());
    }

    #[test]
    fn canonical_example_condensation() {
        let g = build_graph(canon11_arcs()).unwrap();
        let p = compute_scc(&g);
        let dag = condense(&g, &p).unwrap();
        assert_eq!(dag.component_count(), 10);
        assert_eq!(dag.arc_count(), 9);
        assert!(dag.is_acyclic());
        assert_eq!(dag.intra_arc_count(), 2);
        assert_eq!(dag.weight_sum() + dag.intra_arc_count(), g.arc_count());
        for c in 0..dag.component_count() as ComponentId {
            for (_, w) in dag.weighted_successors(c) {
                assert_eq!(w, 1);
            }
        }
    }

    #[test]
    fn single_cycle_condenses_to_point() {
        let g = build_graph([(1, 2), (2, 3), (3, 1)]).unwrap();
        let p = compute_scc(&g);
        let dag = condense(&g, &p).unwrap();
        assert_eq!(dag.component_count(), 1);
        assert_eq!(dag.arc_count(), 0);
        assert_eq!(dag.intra_arc_count(), 3);
    }

    #[test]
    fn deep_path_does_not_overflow() {
        // 2M-node path then a 2M-node cycle: recursion would blow the stack.
        let n: u64 = 2_000_000;
        let path = (0..n - 1).map(|i| (i, i + 1));
        let g = build_graph(path).unwrap();
        let p = compute_scc(&g);
        assert_eq!(p.component_count(), n as usize);

        let cycle = (0..n).map(|i| (i, (i + 1) % n));
        let g = build_graph(cycle).unwrap();
        let p = compute_scc(&g);
        assert_eq!(p.component_count(), 1);
        assert_eq!(p.size(0), n as u32);
    }

    #[test]
    fn partition_mismatch_is_reported() {
        let g1 = build_graph([(1, 2)]).unwrap();
        let g2 = build_graph([(1, 2), (2, 3)]).unwrap();
        let p = compute_scc(&g1);
        assert!(matches!(condense(&g2, &p), Err(SccError::PartitionMismatch { .. })));
    }
}
