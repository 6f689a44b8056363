//! Seeded graph generators and the exhaustive reference classifier.
//!
//! Everything here exists to test the production pipeline: uniform random
//! digraphs, planted bow-tie graphs with known labels, a small canonical
//! worked example, and `oracle_classify`, a brute-force classifier built from
//! the literal component definitions that shares no algorithm with the
//! production path.
//!
//! Generator contract: all randomness comes from a ChaCha8 stream keyed by
//! the caller's 64-bit seed, so the same seed yields the same graph on every
//! platform and build.

mod oracle;
mod planted;

pub use oracle::{oracle_classify, ORACLE_MAX_NODES};
pub use planted::{planted_bowtie, PlantSpec};

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{DirectedGraph, ExternalId, GraphBuilder, GraphError};
use crate::macrostructure::{arc_matrix, classify};
use crate::scc::{compute_scc, condense};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("cannot place {m} arcs in a {n}-node simple digraph (max {max})")]
    InfeasibleArcCount { n: u64, m: u64, max: u64 },
    #[error("invalid plant spec: {0}")]
    InvalidPlantSpec(String),
    #[error("oracle refuses {nodes} nodes (limit {ORACLE_MAX_NODES}); it is quadratic by design")]
    OracleTooLarge { nodes: usize },
    #[error("oracle cannot classify an empty graph")]
    OracleEmptyGraph,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// The canonical 11-node worked example. Exercises every label: nodes 1,2
/// form the LSC; 3 is OUT; 4 is IN; 5 an IN-tendril; 6,8 OUT-tendrils at
/// levels 1,2; 7 a bridge; 9 OTHER; 10,11 DISCONNECTED.
pub fn canon11_arcs() -> Vec<(ExternalId, ExternalId)> {
    vec![
        (1, 2),
        (2, 1),
        (1, 3),
        (4, 1),
        (4, 5),
        (4, 7),
        (7, 3),
        (6, 3),
        (8, 6),
        (9, 5),
        (10, 11),
    ]
}

/// Uniform random simple digraph with exactly `m` arcs over nodes `0..n`.
/// Isolated nodes are materialized. Pure function of the seed.
pub fn random_digraph(n: u64, m: u64, seed: u64) -> Result<DirectedGraph, SynthError> {
    let possible = (n as u128) * (n.saturating_sub(1) as u128);
    if (m as u128) > possible {
        return Err(SynthError::InfeasibleArcCount { n, m, max: possible.min(u64::MAX as u128) as u64 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new();
    for id in 0..n {
        b.add_node(id);
    }

    if possible <= 4_000_000 {
        // Dense regime: enumerate the arc space and take a partial shuffle.
        let mut pairs: Vec<(u64, u64)> = Vec::with_capacity(possible as usize);
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    pairs.push((u, v));
                }
            }
        }
        for i in 0..m as usize {
            let j = rng.gen_range(i..pairs.len());
            pairs.swap(i, j);
            let (u, v) = pairs[i];
            b.add_arc(u, v);
        }
    } else {
        // Sparse regime: rejection-sample distinct pairs.
        let mut seen: HashSet<(u64, u64)> = HashSet::with_capacity(m as usize * 2);
        while (seen.len() as u64) < m {
            let u = rng.gen_range(0..n);
            let v = {
                let v = rng.gen_range(0..n - 1);
                if v >= u {
                    v + 1
                } else {
                    v
                }
            };
            if seen.insert((u, v)) {
                b.add_arc(u, v);
            }
        }
    }
    Ok(b.finish()?)
}

/// Outcome of a differential run of the production classifier against the
/// oracle, including the conservation checks applied to every trial graph.
#[derive(Debug)]
pub struct DifferentialOutcome {
    pub trials: u64,
    pub mismatches: u64,
    pub first_mismatch: Option<String>,
}

impl DifferentialOutcome {
    pub fn all_matched(&self) -> bool {
        self.mismatches == 0
    }
}

/// Runs `trials` seeded random digraphs with up to `max_n` nodes across four
/// density regimes (m/n in 0.5, 1, 2, 4) and compares the production
/// classification against the oracle: labels, levels, and bridge levels must
/// all agree. Each trial also checks partition and arc conservation and
/// condensation acyclicity.
pub fn run_differential(trials: u64, max_n: u64, seed: u64) -> DifferentialOutcome {
    const DENSITIES: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0u64;
    let mut first_mismatch = None;
    let record = |mismatches: &mut u64, first: &mut Option<String>, msg: String| {
        *mismatches += 1;
        if first.is_none() {
            *first = Some(msg);
        }
    };

    for trial in 0..trials {
        let n = rng.gen_range(1..=max_n.max(1));
        let density = DENSITIES[(trial % 4) as usize];
        let possible = n * n.saturating_sub(1);
        let m = ((n as f64 * density).round() as u64).min(possible);
        let graph_seed = rng.gen();
        let g = random_digraph(n, m, graph_seed).expect("feasible arc count");

        let p = compute_scc(&g);
        let dag = condense(&g, &p).expect("partition matches graph");
        let got = classify(&g, &p, &dag).expect("nonempty graph");
        let want = oracle_classify(&g).expect("within oracle limits");

        if got != want {
            let detail = (0..g.node_count() as u32)
                .find(|&u| {
                    got.label(u) != want.label(u)
                        || got.level(u) != want.level(u)
                        || got.bridge_levels(u) != want.bridge_levels(u)
                })
                .map(|u| {
                    format!(
                        "node {}: classify {} lvl {:?}, oracle {} lvl {:?}",
                        g.external_id(u),
                        got.label(u),
                        got.level(u),
                        want.label(u),
                        want.level(u)
                    )
                })
                .unwrap_or_else(|| "lsc component differs".to_string());
            record(
                &mut mismatches,
                &mut first_mismatch,
                format!("trial {trial} (n={n} m={m} seed={graph_seed}): {detail}"),
            );
            continue;
        }

        // Conservation: labels partition the nodes, the arc matrix accounts
        // for every arc, condensation weights account for every arc, and the
        // condensation is acyclic.
        let summary = arc_matrix(&g, &got).expect("classification matches graph");
        let size_sum: u64 = summary.sizes.iter().sum();
        let matrix_sum: u64 = summary.matrix.iter().flatten().sum();
        let ok = size_sum == g.node_count() as u64
            && matrix_sum == g.arc_count()
            && dag.weight_sum() + dag.intra_arc_count() == g.arc_count()
            && dag.is_acyclic();
        if !ok {
            record(
                &mut mismatches,
                &mut first_mismatch,
                format!("trial {trial} (n={n} m={m} seed={graph_seed}): conservation violated"),
            );
        }
    }
    DifferentialOutcome { trials, mismatches, first_mismatch }
}
