//! Bow-tie macrostructure classification.
//!
//! Every node receives exactly one of eight labels, anchored on the largest
//! strongly connected component (LSC):
//!
//! - `LSC`: members of the largest strongly connected component (ties broken
//!   toward the component with the smallest member index).
//! - `IN`: outside the LSC, can reach it.
//! - `OUT`: outside the LSC, reachable from it.
//! - `IN_TENDRILS`: reachable from IN, not in LSC/IN/OUT, cannot reach OUT.
//! - `OUT_TENDRILS`: reach OUT, not in LSC/IN/OUT, not reachable from IN.
//! - `BRIDGES`: reachable from IN and reach OUT, without touching the LSC.
//! - `OTHER`: none of the above but weakly connected to the classified mass.
//! - `DISCONNECTED`: everything else.
//!
//! Levels are hop distances between super-nodes of the condensation: an IN
//! node at level 1 has an arc directly into the LSC, an OUT node at level 1
//! is hit directly by it, tendril levels count hops from IN (or to OUT), and
//! bridges carry both distances. All work happens on the condensation, so
//! cost after SCC computation is linear in its size.

use std::fmt;
use std::io::{self, Write};

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::graph::{DirectedGraph, NodeIndex};
use crate::scc::{ComponentId, CondensedDag, SccPartition};

pub const LABEL_COUNT: usize = 8;

/// The eight macrostructure component labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ComponentLabel {
    Lsc = 0,
    In = 1,
    Out = 2,
    InTendrils = 3,
    OutTendrils = 4,
    Bridges = 5,
    Other = 6,
    Disconnected = 7,
}

impl ComponentLabel {
    pub const ALL: [ComponentLabel; LABEL_COUNT] = [
        ComponentLabel::Lsc,
        ComponentLabel::In,
        ComponentLabel::Out,
        ComponentLabel::InTendrils,
        ComponentLabel::OutTendrils,
        ComponentLabel::Bridges,
        ComponentLabel::Other,
        ComponentLabel::Disconnected,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ComponentLabel::Lsc => "LSC",
            ComponentLabel::In => "IN",
            ComponentLabel::Out => "OUT",
            ComponentLabel::InTendrils => "IN_TENDRILS",
            ComponentLabel::OutTendrils => "OUT_TENDRILS",
            ComponentLabel::Bridges => "BRIDGES",
            ComponentLabel::Other => "OTHER",
            ComponentLabel::Disconnected => "DISCONNECTED",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_str_exact(s: &str) -> Option<ComponentLabel> {
        ComponentLabel::ALL.iter().copied().find(|l| l.as_str() == s)
    }
}

impl fmt::Display for ComponentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum MacroError {
    /// The empty graph has no largest component; reported distinctly.
    #[error("cannot classify an empty graph")]
    EmptyGraph,
    #[error("partition or condensation does not match the graph: {0}")]
    Mismatch(String),
}

const LEVEL_NONE: u32 = u32::MAX;

/// Complete per-node labeling with levels.
#[derive(Debug, PartialEq, Eq)]
pub struct Classification {
    labels: Vec<ComponentLabel>,
    /// IN/OUT/tendril distance; for bridges, the distance from IN.
    level: Vec<u32>,
    /// Bridges only: distance to OUT.
    level2: Vec<u32>,
    lsc_component: ComponentId,
}

impl Classification {
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, n: NodeIndex) -> ComponentLabel {
        self.labels[n as usize]
    }

    pub fn labels(&self) -> &[ComponentLabel] {
        &self.labels
    }

    /// Level of an IN/OUT/tendril node; for a bridge, its distance from IN.
    pub fn level(&self, n: NodeIndex) -> Option<u32> {
        match self.level[n as usize] {
            LEVEL_NONE => None,
            l => Some(l),
        }
    }

    /// Bridge distances (from IN, to OUT); None for non-bridges.
    pub fn bridge_levels(&self, n: NodeIndex) -> Option<(u32, u32)> {
        if self.labels[n as usize] == ComponentLabel::Bridges {
            Some((self.level[n as usize], self.level2[n as usize]))
        } else {
            None
        }
    }

    /// Component id of the largest strongly connected component.
    pub fn lsc_component(&self) -> ComponentId {
        self.lsc_component
    }

    /// Node counts per label, in `ComponentLabel::ALL` order.
    pub fn sizes(&self) -> [u64; LABEL_COUNT] {
        let mut sizes = [0u64; LABEL_COUNT];
        for &l in &self.labels {
            sizes[l.index()] += 1;
        }
        sizes
    }

    /// Constructor for alternative classifiers (the synthetic-graph oracle).
    pub(crate) fn from_parts(
        labels: Vec<ComponentLabel>,
        level: Vec<u32>,
        level2: Vec<u32>,
        lsc_component: ComponentId,
    ) -> Classification {
        Classification { labels, level, level2, lsc_component }
    }
}

/// Classifies every node of `g` under partition `p` and condensation `dag`.
pub fn classify(g: &DirectedGraph, p: &SccPartition, dag: &CondensedDag) -> Result<Classification, MacroError> {
    let n = g.node_count();
    if n == 0 {
        return Err(MacroError::EmptyGraph);
    }
    if p.assignments().len() != n {
        return Err(MacroError::Mismatch(format!(
            "partition covers {} nodes, graph has {n}",
            p.assignments().len()
        )));
    }
    if dag.component_count() != p.component_count() {
        return Err(MacroError::Mismatch(format!(
            "condensation has {} components, partition has {}",
            dag.component_count(),
            p.component_count()
        )));
    }
    let c = p.component_count();

    // Largest component; canonical numbering makes "first maximum" the
    // smallest-member tie-break.
    let mut lsc = 0 as ComponentId;
    for cid in 1..c as ComponentId {
        if p.size(cid) > p.size(lsc) {
            lsc = cid;
        }
    }

    const UNLABELED: u8 = u8::MAX;
    let mut comp_label = vec![UNLABELED; c];
    let mut comp_level = vec![LEVEL_NONE; c];
    let mut comp_level2 = vec![LEVEL_NONE; c];
    comp_label[lsc as usize] = ComponentLabel::Lsc as u8;

    let mut queue: std::collections::VecDeque<ComponentId> = std::collections::VecDeque::new();

    // OUT: forward reach of the LSC.
    queue.push_back(lsc);
    while let Some(v) = queue.pop_front() {
        let base = if v == lsc { 0 } else { comp_level[v as usize] };
        for &w in dag.successors(v) {
            if comp_label[w as usize] == UNLABELED {
                comp_label[w as usize] = ComponentLabel::Out as u8;
                comp_level[w as usize] = base + 1;
                queue.push_back(w);
            }
        }
    }

    // IN: reverse reach of the LSC.
    queue.push_back(lsc);
    while let Some(v) = queue.pop_front() {
        let base = if v == lsc { 0 } else { comp_level[v as usize] };
        for &w in dag.predecessors(v) {
            if comp_label[w as usize] == UNLABELED {
                comp_label[w as usize] = ComponentLabel::In as u8;
                comp_level[w as usize] = base + 1;
                queue.push_back(w);
            }
        }
    }

    // Forward reach of IN and reverse reach of OUT over still-unlabeled
    // components. Both distances are recorded before labels are decided,
    // since their overlap forms the bridges.
    let mut dist_from_in = vec![LEVEL_NONE; c];
    for cid in 0..c as ComponentId {
        if comp_label[cid as usize] == ComponentLabel::In as u8 {
            queue.push_back(cid);
        }
    }
    while let Some(v) = queue.pop_front() {
        let base = if comp_label[v as usize] == ComponentLabel::In as u8 { 0 } else { dist_from_in[v as usize] };
        for &w in dag.successors(v) {
            if comp_label[w as usize] == UNLABELED && dist_from_in[w as usize] == LEVEL_NONE {
                dist_from_in[w as usize] = base + 1;
                queue.push_back(w);
            }
        }
    }

    let mut dist_to_out = vec![LEVEL_NONE; c];
    for cid in 0..c as ComponentId {
        if comp_label[cid as usize] == ComponentLabel::Out as u8 {
            queue.push_back(cid);
        }
    }
    while let Some(v) = queue.pop_front() {
        let base = if comp_label[v as usize] == ComponentLabel::Out as u8 { 0 } else { dist_to_out[v as usize] };
        for &w in dag.predecessors(v) {
            if comp_label[w as usize] == UNLABELED && dist_to_out[w as usize] == LEVEL_NONE {
                dist_to_out[w as usize] = base + 1;
                queue.push_back(w);
            }
        }
    }

    for cid in 0..c {
        if comp_label[cid] != UNLABELED {
            continue;
        }
        match (dist_from_in[cid] != LEVEL_NONE, dist_to_out[cid] != LEVEL_NONE) {
            (true, true) => {
                comp_label[cid] = ComponentLabel::Bridges as u8;
                comp_level[cid] = dist_from_in[cid];
                comp_level2[cid] = dist_to_out[cid];
            }
            (true, false) => {
                comp_label[cid] = ComponentLabel::InTendrils as u8;
                comp_level[cid] = dist_from_in[cid];
            }
            (false, true) => {
                comp_label[cid] = ComponentLabel::OutTendrils as u8;
                comp_level[cid] = dist_to_out[cid];
            }
            (false, false) => {}
        }
    }

    // OTHER vs DISCONNECTED: weak connectivity to the LSC's weak component.
    // Every labeled component is weakly connected to the LSC by construction,
    // so one undirected traversal from the LSC settles the rest.
    let mut weak = vec![false; c];
    weak[lsc as usize] = true;
    queue.push_back(lsc);
    while let Some(v) = queue.pop_front() {
        for &w in dag.successors(v).iter().chain(dag.predecessors(v)) {
            if !weak[w as usize] {
                weak[w as usize] = true;
                queue.push_back(w);
            }
        }
    }
    for cid in 0..c {
        if comp_label[cid] == UNLABELED {
            comp_label[cid] = if weak[cid] {
                ComponentLabel::Other as u8
            } else {
                ComponentLabel::Disconnected as u8
            };
        }
    }

    // Broadcast component labels and levels to member nodes.
    let mut labels = vec![ComponentLabel::Disconnected; n];
    let mut level = vec![LEVEL_NONE; n];
    let mut level2 = vec![LEVEL_NONE; n];
    for u in 0..n {
        let cid = p.component_of(u as NodeIndex) as usize;
        labels[u] = ComponentLabel::ALL[comp_label[cid] as usize];
        level[u] = comp_level[cid];
        level2[u] = comp_level2[cid];
    }
    Ok(Classification { labels, level, level2, lsc_component: lsc })
}

/// Classification summary: label sizes, degree mass per label, and the 8x8
/// label-to-label arc matrix.
#[derive(Debug, PartialEq, Eq)]
pub struct MacroSummary {
    pub total_nodes: u64,
    pub total_arcs: u64,
    /// Node counts per label, `ComponentLabel::ALL` order.
    pub sizes: [u64; LABEL_COUNT],
    /// Sum of in-degrees (follower arcs) per label.
    pub follower_sums: [u64; LABEL_COUNT],
    /// Sum of out-degrees (following arcs) per label.
    pub following_sums: [u64; LABEL_COUNT],
    /// `matrix[s][t]` counts arcs from label `s` to label `t`.
    pub matrix: [[u64; LABEL_COUNT]; LABEL_COUNT],
}

impl MacroSummary {
    pub fn empty() -> MacroSummary {
        MacroSummary {
            total_nodes: 0,
            total_arcs: 0,
            sizes: [0; LABEL_COUNT],
            follower_sums: [0; LABEL_COUNT],
            following_sums: [0; LABEL_COUNT],
            matrix: [[0; LABEL_COUNT]; LABEL_COUNT],
        }
    }

    pub fn size_percent(&self, label: ComponentLabel) -> f64 {
        if self.total_nodes == 0 {
            0.0
        } else {
            self.sizes[label.index()] as f64 / self.total_nodes as f64 * 100.0
        }
    }

    pub fn to_json(&self) -> Value {
        let label_map = |values: &[u64; LABEL_COUNT]| {
            let mut m = Map::new();
            for l in ComponentLabel::ALL {
                m.insert(l.as_str().to_string(), json!(values[l.index()]));
            }
            Value::Object(m)
        };
        let mut percentages = Map::new();
        for l in ComponentLabel::ALL {
            percentages.insert(l.as_str().to_string(), json!(self.size_percent(l)));
        }
        json!({
            "total_nodes": self.total_nodes,
            "total_arcs": self.total_arcs,
            "label_order": ComponentLabel::ALL.iter().map(|l| l.as_str()).collect::<Vec<_>>(),
            "sizes": label_map(&self.sizes),
            "percentages": Value::Object(percentages),
            "follower_sums": label_map(&self.follower_sums),
            "following_sums": label_map(&self.following_sums),
            "arc_matrix": self.matrix.iter().map(|row| row.to_vec()).collect::<Vec<_>>(),
        })
    }
}

/// Tallies the label-to-label arc matrix and per-label degree mass.
///
/// Asserts the structural zeroes: the OUT row carries arcs only to OUT, the
/// IN column only from IN, and DISCONNECTED exchanges no arcs with any other
/// label.
pub fn arc_matrix(g: &DirectedGraph, c: &Classification) -> Result<MacroSummary, MacroError> {
    let n = g.node_count();
    if c.node_count() != n {
        return Err(MacroError::Mismatch(format!(
            "classification covers {} nodes, graph has {n}",
            c.node_count()
        )));
    }
    let mut summary = MacroSummary::empty();
    summary.total_nodes = n as u64;
    summary.total_arcs = g.arc_count();
    for u in 0..n as NodeIndex {
        let l = c.label(u).index();
        summary.sizes[l] += 1;
        summary.follower_sums[l] += g.in_degree(u) as u64;
        summary.following_sums[l] += g.out_degree(u) as u64;
        for &v in g.out_neighbors(u) {
            summary.matrix[l][c.label(v).index()] += 1;
        }
    }

    let out = ComponentLabel::Out.index();
    let inn = ComponentLabel::In.index();
    let disc = ComponentLabel::Disconnected.index();
    for l in 0..LABEL_COUNT {
        assert!(l == out || summary.matrix[out][l] == 0, "OUT must not reach {}", ComponentLabel::ALL[l]);
        assert!(l == inn || summary.matrix[l][inn] == 0, "{} must not reach IN", ComponentLabel::ALL[l]);
        assert!(l == disc || summary.matrix[disc][l] == 0, "DISCONNECTED row must be zero");
        assert!(l == disc || summary.matrix[l][disc] == 0, "DISCONNECTED column must be zero");
    }
    Ok(summary)
}

/// Writes the per-node label table as CSV (`id,component,level,level2`),
/// ascending by external id. Level fields are empty where undefined.
pub fn write_labels<W: Write>(g: &DirectedGraph, c: &Classification, w: &mut W) -> io::Result<()> {
    if c.node_count() != g.node_count() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "classification does not match graph"));
    }
    writeln!(w, "id,component,level,level2")?;
    for u in 0..g.node_count() as NodeIndex {
        let label = c.label(u);
        write!(w, "{},{},", g.external_id(u), label.as_str())?;
        match c.level(u) {
            Some(l) => write!(w, "{l}")?,
            None => {}
        }
        w.write_all(b",")?;
        if let Some((_, to_out)) = c.bridge_levels(u) {
            write!(w, "{to_out}")?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, GraphBuilder};
    use crate::synth::{canon11_arcs, oracle_classify};
    use crate::{compute_scc, condense};

    fn classify_arcs(arcs: Vec<(u64, u64)>) -> (DirectedGraph, Classification) {
        let g = build_graph(arcs).unwrap();
        let p = compute_scc(&g);
        let dag = condense(&g, &p).unwrap();
        let c = classify(&g, &p, &dag).unwrap();
        (g, c)
    }

    #[test]
    fn canonical_labels_and_levels() {
        let (g, c) = classify_arcs(canon11_arcs());
        let expected: [(u64, ComponentLabel, Option<u32>, Option<(u32, u32)>); 11] = [
            (1, ComponentLabel::Lsc, None, None),
            (2, ComponentLabel::Lsc, None, None),
            (3, ComponentLabel::Out, Some(1), None),
            (4, ComponentLabel::In, Some(1), None),
            (5, ComponentLabel::InTendrils, Some(1), None),
            (6, ComponentLabel::OutTendrils, Some(1), None),
            (7, ComponentLabel::Bridges, Some(1), Some((1, 1))),
            (8, ComponentLabel::OutTendrils, Some(2), None),
            (9, ComponentLabel::Other, None, None),
            (10, ComponentLabel::Disconnected, None, None),
            (11, ComponentLabel::Disconnected, None, None),
        ];
        for (id, label, level, bridge) in expected {
            let u = g.index_of(id).unwrap();
            assert_eq!(c.label(u), label, "node {id}");
            assert_eq!(c.level(u), level, "node {id}");
            assert_eq!(c.bridge_levels(u), bridge, "node {id}");
        }
        assert_eq!(c.sizes(), [2, 1, 1, 1, 2, 1, 1, 2]);
    }

    #[test]
    fn canonical_agrees_with_reference_classifier() {
        let g = build_graph(canon11_arcs()).unwrap();
        let p = compute_scc(&g);
        let dag = condense(&g, &p).unwrap();
        let c = classify(&g, &p, &dag).unwrap();
        assert_eq!(c, oracle_classify(&g).unwrap());
    }

    #[test]
    fn canonical_arc_matrix_cells() {
        let (g, c) = classify_arcs(canon11_arcs());
        let s = arc_matrix(&g, &c).unwrap();
        let cell = |from: ComponentLabel, to: ComponentLabel| s.matrix[from.index()][to.index()];
        use ComponentLabel::*;
        let nonzero = [
            (Lsc, Lsc, 2),
            (Lsc, Out, 1),
            (In, Lsc, 1),
            (In, InTendrils, 1),
            (In, Bridges, 1),
            (Bridges, Out, 1),
            (OutTendrils, Out, 1),
            (OutTendrils, OutTendrils, 1),
            (Other, InTendrils, 1),
            (Disconnected, Disconnected, 1),
        ];
        let mut sum = 0;
        for &(from, to, want) in &nonzero {
            assert_eq!(cell(from, to), want, "{from}->{to}");
            sum += want;
        }
        assert_eq!(sum, 11);
        let total: u64 = s.matrix.iter().flatten().sum();
        assert_eq!(total, s.total_arcs);
        assert_eq!(s.follower_sums, [3, 0, 3, 2, 1, 1, 0, 1]);
        assert_eq!(s.following_sums, [3, 3, 0, 0, 2, 1, 1, 1]);
    }

    #[test]
    fn label_table_csv_golden() {
        let (g, c) = classify_arcs(canon11_arcs());
        let mut out = Vec::new();
        write_labels(&g, &c, &mut out).unwrap();
        let want = "id,component,level,level2\n\
                    1,LSC,,\n\
                    2,LSC,,\n\
                    3,OUT,1,\n\
                    4,IN,1,\n\
                    5,IN_TENDRILS,1,\n\
                    6,OUT_TENDRILS,1,\n\
                    7,BRIDGES,1,1\n\
                    8,OUT_TENDRILS,2,\n\
                    9,OTHER,,\n\
                    10,DISCONNECTED,,\n\
                    11,DISCONNECTED,,\n";
        assert_eq!(String::from_utf8(out).unwrap(), want);
    }

    #[test]
    fn arcless_nodes_split_lsc_and_disconnected() {
        let mut b = GraphBuilder::new();
        for id in [5, 9, 2] {
            b.add_node(id);
        }
        let g = b.finish().unwrap();
        let p = compute_scc(&g);
        let dag = condense(&g, &p).unwrap();
        let c = classify(&g, &p, &dag).unwrap();
        // Singleton tie for largest component goes to the smallest id.
        assert_eq!(c.label(g.index_of(2).unwrap()), ComponentLabel::Lsc);
        assert_eq!(c.label(g.index_of(5).unwrap()), ComponentLabel::Disconnected);
        assert_eq!(c.label(g.index_of(9).unwrap()), ComponentLabel::Disconnected);
        assert_eq!(c.sizes(), [1, 0, 0, 0, 0, 0, 0, 2]);
    }

    #[test]
    fn smaller_cycle_is_disconnected() {
        let (g, c) = classify_arcs(vec![(1, 2), (2, 3), (3, 1), (4, 5), (5, 4)]);
        for id in [1, 2, 3] {
            assert_eq!(c.label(g.index_of(id).unwrap()), ComponentLabel::Lsc);
        }
        for id in [4, 5] {
            assert_eq!(c.label(g.index_of(id).unwrap()), ComponentLabel::Disconnected);
        }
    }

    #[test]
    fn empty_graph_is_rejected() {
        let g = GraphBuilder::new().finish().unwrap();
        let p = compute_scc(&g);
        let dag = condense(&g, &p).unwrap();
        assert!(matches!(classify(&g, &p, &dag), Err(MacroError::EmptyGraph)));
    }

    #[test]
    fn label_names_round_trip() {
        for label in ComponentLabel::ALL {
            assert_eq!(ComponentLabel::from_str_exact(label.as_str()), Some(label));
        }
        assert_eq!(ComponentLabel::from_str_exact("lsc"), None);
        assert_eq!(ComponentLabel::from_str_exact(""), None);
    }

    #[test]
    fn summary_json_shape() {
        let (g, c) = classify_arcs(canon11_arcs());
        let s = arc_matrix(&g, &c).unwrap();
        let json = s.to_json();
        assert_eq!(json["total_nodes"], 11);
        assert_eq!(json["sizes"]["LSC"], 2);
        assert_eq!(json["label_order"][0], "LSC");
        assert_eq!(json["arc_matrix"][0][0], 2);
        let pct = s.size_percent(ComponentLabel::Lsc);
        assert!((pct - 200.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_inputs_are_reported() {
        let (_, c) = classify_arcs(canon11_arcs());
        let other = build_graph(vec![(1, 2)]).unwrap();
        assert!(matches!(arc_matrix(&other, &c), Err(MacroError::Mismatch(_))));
        let mut sink = Vec::new();
        assert!(write_labels(&other, &c, &mut sink).is_err());
    }
}
