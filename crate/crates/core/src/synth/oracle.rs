//! Exhaustive reference classifier.
//!
//! Implements the component definitions literally: full reachability closure
//! by BFS from every node, strongly connected components as mutual
//! reachability classes, labels as set predicates over the closure, and
//! levels as BFS distances over its own hash-based super-node adjacency.
//! Shares no algorithm with the production path (which uses Tarjan plus
//! frontier traversals on a CSR condensation); quadratic on purpose, so it
//! refuses graphs beyond a few thousand nodes.

use std::collections::VecDeque;

use crate::graph::{DirectedGraph, NodeIndex};
use crate::macrostructure::{Classification, ComponentLabel};
use crate::synth::SynthError;

/// Node limit above which `oracle_classify` refuses to run.
pub const ORACLE_MAX_NODES: usize = 5000;

const NONE: u32 = u32::MAX;

/// Row-major bit matrix; row u holds the forward reachability set of u.
struct BitMatrix {
    words_per_row: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> BitMatrix {
        let words_per_row = n.div_ceil(64);
        BitMatrix { words_per_row, bits: vec![0; n * words_per_row] }
    }

    fn set(&mut self, row: usize, col: usize) {
        self.bits[row * self.words_per_row + col / 64] |= 1 << (col % 64);
    }

    fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.words_per_row + col / 64] & (1 << (col % 64)) != 0
    }

    fn row(&self, row: usize) -> &[u64] {
        &self.bits[row * self.words_per_row..(row + 1) * self.words_per_row]
    }
}

/// Brute-force classification of a small graph from first principles.
pub fn oracle_classify(g: &DirectedGraph) -> Result<Classification, SynthError> {
    let n = g.node_count();
    if n == 0 {
        return Err(SynthError::OracleEmptyGraph);
    }
    if n > ORACLE_MAX_NODES {
        return Err(SynthError::OracleTooLarge { nodes: n });
    }

    // Reachability closure; every node reaches itself.
    let mut reach = BitMatrix::new(n);
    let mut queue: VecDeque<usize> = VecDeque::new();
    for u in 0..n {
        reach.set(u, u);
        queue.push_back(u);
        while let Some(v) = queue.pop_front() {
            for &w in g.out_neighbors(v as NodeIndex) {
                if !reach.get(u, w as usize) {
                    reach.set(u, w as usize);
                    queue.push_back(w as usize);
                }
            }
        }
    }

    // Mutual-reachability classes, numbered by smallest member.
    let mut comp = vec![NONE; n];
    let mut comp_count = 0u32;
    for u in 0..n {
        if comp[u] != NONE {
            continue;
        }
        for v in u..n {
            if reach.get(u, v) && reach.get(v, u) {
                comp[v] = comp_count;
            }
        }
        comp_count += 1;
    }
    let mut sizes = vec![0u64; comp_count as usize];
    for &c in &comp {
        sizes[c as usize] += 1;
    }
    let lsc = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(c, _)| c as u32)
        .expect("at least one component");
    let lsc_witness = comp.iter().position(|&c| c == lsc).expect("lsc has a member");

    // Labels straight from the definitions.
    let mut label: Vec<Option<ComponentLabel>> = vec![None; n];
    for v in 0..n {
        if comp[v] == lsc {
            label[v] = Some(ComponentLabel::Lsc);
        } else if reach.get(lsc_witness, v) {
            label[v] = Some(ComponentLabel::Out);
        } else if reach.get(v, lsc_witness) {
            label[v] = Some(ComponentLabel::In);
        }
    }

    // Union of closures of all IN nodes, and a membership mask for OUT.
    let words = n.div_ceil(64);
    let mut reach_from_in = vec![0u64; words];
    let mut out_mask = vec![0u64; words];
    for v in 0..n {
        match label[v] {
            Some(ComponentLabel::In) => {
                for (acc, w) in reach_from_in.iter_mut().zip(reach.row(v)) {
                    *acc |= w;
                }
            }
            Some(ComponentLabel::Out) => out_mask[v / 64] |= 1 << (v % 64),
            _ => {}
        }
    }
    for v in 0..n {
        if label[v].is_some() {
            continue;
        }
        let from_in = reach_from_in[v / 64] & (1 << (v % 64)) != 0;
        let to_out = reach.row(v).iter().zip(&out_mask).any(|(a, b)| a & b != 0);
        label[v] = match (from_in, to_out) {
            (true, true) => Some(ComponentLabel::Bridges),
            (true, false) => Some(ComponentLabel::InTendrils),
            (false, true) => Some(ComponentLabel::OutTendrils),
            (false, false) => None,
        };
    }

    // Undirected reachability from every categorized node separates OTHER
    // from DISCONNECTED.
    let mut weak = vec![false; n];
    let mut wq: VecDeque<usize> = VecDeque::new();
    for v in 0..n {
        if label[v].is_some() {
            weak[v] = true;
            wq.push_back(v);
        }
    }
    while let Some(v) = wq.pop_front() {
        for &w in g.out_neighbors(v as NodeIndex).iter().chain(g.in_neighbors(v as NodeIndex)) {
            if !weak[w as usize] {
                weak[w as usize] = true;
                wq.push_back(w as usize);
            }
        }
    }
    let labels: Vec<ComponentLabel> = (0..n)
        .map(|v| {
            label[v].unwrap_or(if weak[v] { ComponentLabel::Other } else { ComponentLabel::Disconnected })
        })
        .collect();

    // Super-node adjacency, rebuilt independently of the production
    // condensation, for level distances.
    let c = comp_count as usize;
    let mut succ: Vec<Vec<u32>> = vec![Vec::new(); c];
    let mut pred: Vec<Vec<u32>> = vec![Vec::new(); c];
    for (u, v) in g.arcs() {
        let (cu, cv) = (comp[u as usize], comp[v as usize]);
        if cu != cv {
            if !succ[cu as usize].contains(&cv) {
                succ[cu as usize].push(cv);
                pred[cv as usize].push(cu);
            }
        }
    }

    let comp_label: Vec<ComponentLabel> = {
        let mut per_comp = vec![None; c];
        for v in 0..n {
            per_comp[comp[v] as usize] = Some(labels[v]);
        }
        per_comp.into_iter().map(|l| l.expect("every component has a member")).collect()
    };

    let bfs = |sources: &dyn Fn(u32) -> bool,
               adj: &[Vec<u32>],
               traversable: &dyn Fn(u32) -> bool| {
        let mut dist = vec![NONE; c];
        let mut q = VecDeque::new();
        for cid in 0..c as u32 {
            if sources(cid) {
                dist[cid as usize] = 0;
                q.push_back(cid);
            }
        }
        while let Some(v) = q.pop_front() {
            for &w in &adj[v as usize] {
                if dist[w as usize] == NONE && traversable(w) {
                    dist[w as usize] = dist[v as usize] + 1;
                    q.push_back(w);
                }
            }
        }
        dist
    };

    let is = |want: ComponentLabel| {
        let comp_label = comp_label.clone();
        move |cid: u32| comp_label[cid as usize] == want
    };
    let dist_out = bfs(&|cid| cid == lsc, &succ, &is(ComponentLabel::Out));
    let dist_in = bfs(&|cid| cid == lsc, &pred, &is(ComponentLabel::In));
    let tendril = |cid: u32| {
        matches!(
            comp_label[cid as usize],
            ComponentLabel::InTendrils | ComponentLabel::OutTendrils | ComponentLabel::Bridges
        )
    };
    let dist_from_in = bfs(&is(ComponentLabel::In), &succ, &tendril);
    let dist_to_out = bfs(&is(ComponentLabel::Out), &pred, &tendril);

    let mut level = vec![NONE; n];
    let mut level2 = vec![NONE; n];
    for v in 0..n {
        let cid = comp[v] as usize;
        match labels[v] {
            ComponentLabel::Out => level[v] = dist_out[cid],
            ComponentLabel::In => level[v] = dist_in[cid],
            ComponentLabel::InTendrils => level[v] = dist_from_in[cid],
            ComponentLabel::OutTendrils => level[v] = dist_to_out[cid],
            ComponentLabel::Bridges => {
                level[v] = dist_from_in[cid];
                level2[v] = dist_to_out[cid];
            }
            _ => {}
        }
    }
    Ok(Classification::from_parts(labels, level, level2, lsc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::synth::canon11_arcs;

    fn table(g: &DirectedGraph, c: &Classification) -> Vec<(u64, ComponentLabel, Option<u32>, Option<u32>)> {
        (0..g.node_count() as NodeIndex)
            .map(|u| {
                let l2 = c.bridge_levels(u).map(|(_, b)| b);
                (g.external_id(u), c.label(u), c.level(u), l2)
            })
            .collect()
    }

    #[test]
    fn canonical_example_full_table() {
        use ComponentLabel::*;
        let g = build_graph(canon11_arcs()).unwrap();
        let c = oracle_classify(&g).unwrap();
        let want = vec![
            (1, Lsc, None, None),
            (2, Lsc, None, None),
            (3, Out, Some(1), None),
            (4, In, Some(1), None),
            (5, InTendrils, Some(1), None),
            (6, OutTendrils, Some(1), None),
            (7, Bridges, Some(1), Some(1)),
            (8, OutTendrils, Some(2), None),
            (9, Other, None, None),
            (10, Disconnected, None, None),
            (11, Disconnected, None, None),
        ];
        assert_eq!(table(&g, &c), want);
    }

    #[test]
    fn single_cycle_is_all_lsc() {
        let g = build_graph([(1, 2), (2, 3), (3, 1)]).unwrap();
        let c = oracle_classify(&g).unwrap();
        assert!(c.labels().iter().all(|&l| l == ComponentLabel::Lsc));
    }

    #[test]
    fn arcless_pair_splits_lsc_and_disconnected() {
        let mut b = crate::graph::GraphBuilder::new();
        b.add_node(1);
        b.add_node(2);
        let g = b.finish().unwrap();
        let c = oracle_classify(&g).unwrap();
        assert_eq!(c.label(0), ComponentLabel::Lsc);
        assert_eq!(c.label(1), ComponentLabel::Disconnected);
    }

    #[test]
    fn refuses_empty_graph() {
        let g = build_graph([]).unwrap();
        assert!(matches!(oracle_classify(&g), Err(SynthError::OracleEmptyGraph)));
    }

    #[test]
    fn refuses_oversized_graph() {
        let n = (ORACLE_MAX_NODES + 1) as u64;
        let g = build_graph((0..n - 1).map(|i| (i, i + 1))).unwrap();
        assert!(matches!(oracle_classify(&g), Err(SynthError::OracleTooLarge { .. })));
    }
}
