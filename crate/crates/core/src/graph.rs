//! Compressed sparse row directed graph over dense internal indices.
//!
//! External node identifiers are arbitrary `u64` values as found in input
//! files. Internally every node gets a dense `u32` index assigned in ascending
//! external-id order, so index order and external-id order coincide and
//! lookups in either direction stay O(1) / O(log N) without a hash map.
//! Forward and reverse adjacency are both materialized; each adjacency list
//! is sorted and duplicate-free.
//!
//! Arc direction convention: the arc `(u, v)` means `u` follows `v`. A node's
//! followers are its in-neighbors, its followings are its out-neighbors.

use thiserror::Error;

/// Node identifier as it appears in input files.
pub type ExternalId = u64;

/// Dense internal node index, assigned in ascending external-id order.
pub type NodeIndex = u32;

/// Arc direction selector for degree and neighbor queries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Arcs leaving the node (its followings).
    Out,
    /// Arcs entering the node (its followers).
    In,
}

#[derive(Debug, Error)]
pub enum GraphError {
    /// Internal indices are 32-bit; graphs beyond that are refused rather
    /// than silently widened.
    #[error("graph has {0} distinct nodes; at most 4294967295 are supported")]
    TooManyNodes(u64),
    /// A major allocation failed; names the build phase that hit the limit.
    #[error("out of memory while allocating {phase}")]
    OutOfMemory { phase: &'static str },
}

fn grow<T: Clone + Default>(v: &mut Vec<T>, len: usize, phase: &'static str) -> Result<(), GraphError> {
    v.try_reserve_exact(len.saturating_sub(v.len()))
        .map_err(|_| GraphError::OutOfMemory { phase })?;
    v.resize(len, T::default());
    Ok(())
}

/// Directed graph in CSR form, plus the external-id table.
///
/// Invariants: adjacency lists are sorted and deduplicated, forward and
/// reverse views describe the same arc set, and there are no self-loops.
#[derive(Debug)]
pub struct DirectedGraph {
    /// Sorted external ids; position = internal index.
    ids: Vec<ExternalId>,
    fwd_offsets: Vec<usize>,
    fwd_targets: Vec<NodeIndex>,
    rev_offsets: Vec<usize>,
    rev_targets: Vec<NodeIndex>,
    dropped_duplicates: u64,
    dropped_self_loops: u64,
}

/// Equality is structural (nodes and arcs); the drop counters are build
/// diagnostics and do not participate.
impl PartialEq for DirectedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids
            && self.fwd_offsets == other.fwd_offsets
            && self.fwd_targets == other.fwd_targets
    }
}

impl Eq for DirectedGraph {}

impl DirectedGraph {
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn arc_count(&self) -> u64 {
        self.fwd_targets.len() as u64
    }

    /// External ids in internal-index order (ascending).
    pub fn ids(&self) -> &[ExternalId] {
        &self.ids
    }

    pub fn external_id(&self, n: NodeIndex) -> ExternalId {
        self.ids[n as usize]
    }

    /// Internal index of an external id, if present.
    pub fn index_of(&self, id: ExternalId) -> Option<NodeIndex> {
        self.ids.binary_search(&id).ok().map(|i| i as NodeIndex)
    }

    pub fn out_neighbors(&self, n: NodeIndex) -> &[NodeIndex] {
        let n = n as usize;
        &self.fwd_targets[self.fwd_offsets[n]..self.fwd_offsets[n + 1]]
    }

    pub fn in_neighbors(&self, n: NodeIndex) -> &[NodeIndex] {
        let n = n as usize;
        &self.rev_targets[self.rev_offsets[n]..self.rev_offsets[n + 1]]
    }

    pub fn out_degree(&self, n: NodeIndex) -> usize {
        self.out_neighbors(n).len()
    }

    pub fn in_degree(&self, n: NodeIndex) -> usize {
        self.in_neighbors(n).len()
    }

    pub fn degree(&self, n: NodeIndex, direction: Direction) -> usize {
        match direction {
            Direction::Out => self.out_degree(n),
            Direction::In => self.in_degree(n),
        }
    }

    /// All arcs as (source, target) internal index pairs, grouped by source.
    pub fn arcs(&self) -> impl Iterator<Item = (NodeIndex, NodeIndex)> + '_ {
        (0..self.node_count() as NodeIndex)
            .flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// Count of input arcs dropped because an identical arc was already present.
    pub fn dropped_duplicates(&self) -> u64 {
        self.dropped_duplicates
    }

    /// Count of input arcs dropped because source equaled target.
    pub fn dropped_self_loops(&self) -> u64 {
        self.dropped_self_loops
    }

    /// Subgraph induced by the nodes selected by `keep`, with arcs restricted
    /// to kept endpoints. Kept nodes are re-densified; external ids persist.
    pub fn induced_subgraph(&self, keep: impl Fn(NodeIndex) -> bool) -> Result<DirectedGraph, GraphError> {
        let n = self.node_count();
        let mut kept = Vec::new();
        grow(&mut kept, n, "induced node bitmap")?;
        for u in 0..n {
            kept[u] = keep(u as NodeIndex);
        }

        const ABSENT: NodeIndex = NodeIndex::MAX;
        let mut remap = Vec::new();
        grow(&mut remap, n, "induced index remap")?;
        remap.fill(ABSENT);
        let mut ids = Vec::new();
        for u in 0..n {
            if kept[u] {
                remap[u] = ids.len() as NodeIndex;
                ids.push(self.ids[u]);
            }
        }
        let sub_n = ids.len();

        let mut fwd_offsets = Vec::new();
        grow(&mut fwd_offsets, sub_n + 1, "induced offsets")?;
        for u in 0..n {
            if !kept[u] {
                continue;
            }
            let d = self.out_neighbors(u as NodeIndex).iter().filter(|&&v| kept[v as usize]).count();
            fwd_offsets[remap[u] as usize + 1] = d;
        }
        for i in 0..sub_n {
            fwd_offsets[i + 1] += fwd_offsets[i];
        }

        let mut fwd_targets = Vec::new();
        grow(&mut fwd_targets, fwd_offsets[sub_n], "induced targets")?;
        let mut cursor = fwd_offsets.clone();
        for u in 0..n {
            if !kept[u] {
                continue;
            }
            let nu = remap[u] as usize;
            for &v in self.out_neighbors(u as NodeIndex) {
                if kept[v as usize] {
                    fwd_targets[cursor[nu]] = remap[v as usize];
                    cursor[nu] += 1;
                }
            }
        }

        let (rev_offsets, rev_targets) = build_reverse(sub_n, &fwd_offsets, &fwd_targets)?;
        Ok(DirectedGraph {
            ids,
            fwd_offsets,
            fwd_targets,
            rev_offsets,
            rev_targets,
            dropped_duplicates: 0,
            dropped_self_loops: 0,
        })
    }
}

/// Accumulates arcs and arc-less nodes, then builds the graph in one shot.
pub struct GraphBuilder {
    arcs: Vec<(ExternalId, ExternalId)>,
    nodes: Vec<ExternalId>,
}

impl Default for GraphBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl GraphBuilder {
    pub fn new() -> Self {
        GraphBuilder { arcs: Vec::new(), nodes: Vec::new() }
    }

    pub fn add_arc(&mut self, src: ExternalId, dst: ExternalId) {
        self.arcs.push((src, dst));
    }

    /// Pre-sizes the arc buffer. Callers that know the arc count up front
    /// avoid growth doubling, which matters at hundred-million-arc scale.
    pub fn reserve_arcs(&mut self, additional: u64) -> Result<(), GraphError> {
        self.arcs
            .try_reserve_exact(additional as usize)
            .map_err(|_| GraphError::OutOfMemory { phase: "arc buffer" })
    }

    /// Materializes a node even if no arc touches it.
    pub fn add_node(&mut self, id: ExternalId) {
        self.nodes.push(id);
    }

    /// Builds the graph. Self-loops and duplicate arcs are dropped and
    /// counted; every arc endpoint and explicit node becomes a graph node.
    /// The result is a pure function of the input multiset (order-insensitive).
    pub fn finish(self) -> Result<DirectedGraph, GraphError> {
        let GraphBuilder { arcs, nodes } = self;

        let mut ids = nodes;
        ids.try_reserve(arcs.len().saturating_mul(2))
            .map_err(|_| GraphError::OutOfMemory { phase: "id table" })?;
        for &(u, v) in &arcs {
            ids.push(u);
            ids.push(v);
        }
        ids.sort_unstable();
        ids.dedup();
        ids.shrink_to_fit();
        let n = ids.len();
        if n > NodeIndex::MAX as usize {
            return Err(GraphError::TooManyNodes(n as u64));
        }
        let index_of = |id: ExternalId| ids.binary_search(&id).expect("endpoint in id table") as usize;

        let mut self_loops = 0u64;
        let mut fwd_offsets = Vec::new();
        grow(&mut fwd_offsets, n + 1, "forward offsets")?;
        for &(u, v) in &arcs {
            if u == v {
                self_loops += 1;
            } else {
                fwd_offsets[index_of(u) + 1] += 1;
            }
        }
        for i in 0..n {
            fwd_offsets[i + 1] += fwd_offsets[i];
        }

        let mut fwd_targets = Vec::new();
        grow(&mut fwd_targets, fwd_offsets[n], "forward targets")?;
        let mut cursor = fwd_offsets.clone();
        for &(u, v) in &arcs {
            if u == v {
                continue;
            }
            let iu = index_of(u);
            fwd_targets[cursor[iu]] = index_of(v) as NodeIndex;
            cursor[iu] += 1;
        }
        drop(arcs);
        drop(cursor);

        // Sort each list, then compact out duplicates in place. The write
        // cursor never passes the slice being read.
        let mut duplicates = 0u64;
        let mut write = 0usize;
        for u in 0..n {
            let (start, end) = (fwd_offsets[u], fwd_offsets[u + 1]);
            fwd_targets[start..end].sort_unstable();
            fwd_offsets[u] = write;
            let mut prev = None;
            for i in start..end {
                let t = fwd_targets[i];
                if prev == Some(t) {
                    duplicates += 1;
                } else {
                    fwd_targets[write] = t;
                    write += 1;
                    prev = Some(t);
                }
            }
        }
        fwd_offsets[n] = write;
        fwd_targets.truncate(write);
        fwd_targets.shrink_to_fit();

        let (rev_offsets, rev_targets) = build_reverse(n, &fwd_offsets, &fwd_targets)?;
        Ok(DirectedGraph {
            ids,
            fwd_offsets,
            fwd_targets,
            rev_offsets,
            rev_targets,
            dropped_duplicates: duplicates,
            dropped_self_loops: self_loops,
        })
    }
}

/// Reverse CSR from a forward CSR. Filling in ascending source order leaves
/// every reverse list already sorted.
fn build_reverse(
    n: usize,
    fwd_offsets: &[usize],
    fwd_targets: &[NodeIndex],
) -> Result<(Vec<usize>, Vec<NodeIndex>), GraphError> {
    let mut rev_offsets = Vec::new();
    grow(&mut rev_offsets, n + 1, "reverse offsets")?;
    for &t in fwd_targets {
        rev_offsets[t as usize + 1] += 1;
    }
    for i in 0..n {
        rev_offsets[i + 1] += rev_offsets[i];
    }
    let mut rev_targets = Vec::new();
    grow(&mut rev_targets, fwd_targets.len(), "reverse targets")?;
    let mut cursor = rev_offsets.clone();
    for u in 0..n {
        for &v in &fwd_targets[fwd_offsets[u]..fwd_offsets[u + 1]] {
            rev_targets[cursor[v as usize]] = u as NodeIndex;
            cursor[v as usize] += 1;
        }
    }
    Ok((rev_offsets, rev_targets))
}

/// Builds a graph straight from an arc sequence.
pub fn build_graph(arcs: impl IntoIterator<Item = (ExternalId, ExternalId)>) -> Result<DirectedGraph, GraphError> {
    let mut b = GraphBuilder::new();
    for (u, v) in arcs {
        b.add_arc(u, v);
    }
    b.finish()
}
