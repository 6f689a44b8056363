//! Planted bow-tie generator: builds a graph whose classification is known
//! by construction, for recovery tests at any scale.

use std::collections::HashSet;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{DirectedGraph, ExternalId, GraphBuilder};
use crate::macrostructure::{ComponentLabel, LABEL_COUNT};
use crate::synth::{oracle_classify, SynthError, ORACLE_MAX_NODES};

/// Requested shape of a planted bow-tie graph.
///
/// `sizes` is indexed by `ComponentLabel::ALL` order. Construction: the LSC
/// is a directed cycle plus `lsc_extra_arcs` random internal arcs; IN and OUT
/// are level-chains hanging off the LSC; tendrils chain off IN (forward) and
/// into OUT (reverse); every bridge takes one arc from IN and one to OUT;
/// OTHER nodes attach by a single arc into an IN-tendril; DISCONNECTED nodes
/// form separate two-node weak components (plus one singleton when odd).
/// Everything outside the LSC is acyclic, so the planted labels are the
/// classification.
#[derive(Clone, Debug)]
pub struct PlantSpec {
    pub sizes: [u64; LABEL_COUNT],
    pub lsc_extra_arcs: u64,
    pub depth_in: u32,
    pub depth_out: u32,
    pub depth_tendrils: u32,
    pub seed: u64,
}

impl PlantSpec {
    pub fn new(sizes: [u64; LABEL_COUNT], seed: u64) -> PlantSpec {
        PlantSpec { sizes, lsc_extra_arcs: 0, depth_in: 1, depth_out: 1, depth_tendrils: 1, seed }
    }

    pub fn size(&self, label: ComponentLabel) -> u64 {
        self.sizes[label.index()]
    }

    pub fn total(&self) -> u64 {
        self.sizes.iter().sum()
    }

    fn validated(&self) -> Result<(), SynthError> {
        use ComponentLabel::*;
        let err = |msg: String| Err(SynthError::InvalidPlantSpec(msg));
        let s = |l: ComponentLabel| self.size(l);
        let satellites =
            s(In) + s(Out) + s(InTendrils) + s(OutTendrils) + s(Bridges) + s(Other);
        if satellites > 0 && s(Lsc) < 2 {
            return err(format!("LSC size must be at least 2 to anchor satellites, got {}", s(Lsc)));
        }
        if self.total() > 0 && s(Lsc) == 0 {
            return err("LSC size must be at least 1 in a nonempty graph".into());
        }
        if s(InTendrils) > 0 && s(In) == 0 {
            return err("IN_TENDRILS require a nonempty IN".into());
        }
        if s(OutTendrils) > 0 && s(Out) == 0 {
            return err("OUT_TENDRILS require a nonempty OUT".into());
        }
        if s(Bridges) > 0 && (s(In) == 0 || s(Out) == 0) {
            return err("BRIDGES require nonempty IN and OUT".into());
        }
        if s(Other) > 0 && s(InTendrils) == 0 {
            return err("OTHER nodes attach to an IN-tendril; request at least one".into());
        }
        if s(In) > 0 && self.depth_in == 0 {
            return err("depth_in must be positive when IN is nonempty".into());
        }
        if s(Out) > 0 && self.depth_out == 0 {
            return err("depth_out must be positive when OUT is nonempty".into());
        }
        if (s(InTendrils) > 0 || s(OutTendrils) > 0) && self.depth_tendrils == 0 {
            return err("depth_tendrils must be positive when tendrils are nonempty".into());
        }
        let lsc = s(Lsc) as u128;
        let max_extra = if lsc >= 2 { lsc * (lsc - 1) - lsc } else { 0 };
        if (self.lsc_extra_arcs as u128) > max_extra {
            return err(format!(
                "lsc_extra_arcs {} exceeds the {} arcs available beyond the cycle",
                self.lsc_extra_arcs, max_extra
            ));
        }
        Ok(())
    }
}

/// Ids of one label block, split into levels: `levels[k]` holds the ids at
/// level `k + 1`. The first `depth` ids seed one per level so every level up
/// to the effective depth is populated; the rest land on random levels.
fn assign_levels(ids: Range<u64>, depth: u32, rng: &mut ChaCha8Rng) -> Vec<Vec<ExternalId>> {
    let count = ids.end - ids.start;
    if count == 0 {
        return Vec::new();
    }
    let d_eff = (depth as u64).min(count) as usize;
    let mut levels = vec![Vec::new(); d_eff];
    for (i, id) in ids.enumerate() {
        let level = if i < d_eff { i } else { rng.gen_range(0..d_eff) };
        levels[level].push(id);
    }
    levels
}

fn pick(ids: &[ExternalId], rng: &mut ChaCha8Rng) -> ExternalId {
    ids[rng.gen_range(0..ids.len())]
}

fn pick_range(ids: &Range<u64>, rng: &mut ChaCha8Rng) -> ExternalId {
    rng.gen_range(ids.start..ids.end)
}

/// Builds a graph matching `spec` together with its planted labels, indexed
/// by node. External ids run from 1 upward in `ComponentLabel::ALL` block
/// order, so the planted LSC always holds the smallest indices.
///
/// For graphs within the oracle's size limit the output is verified against
/// `oracle_classify` before being returned; larger graphs are correct by the
/// same construction.
pub fn planted_bowtie(spec: &PlantSpec) -> Result<(DirectedGraph, Vec<ComponentLabel>), SynthError> {
    use ComponentLabel::*;
    spec.validated()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total = spec.total();

    let mut blocks: [Range<u64>; LABEL_COUNT] = Default::default();
    let mut next = 1u64;
    for l in ComponentLabel::ALL {
        blocks[l.index()] = next..next + spec.size(l);
        next += spec.size(l);
    }
    let block = |l: ComponentLabel| blocks[l.index()].clone();

    let mut b = GraphBuilder::new();
    let cycle_arcs = if spec.size(Lsc) >= 2 { spec.size(Lsc) + spec.lsc_extra_arcs } else { 0 };
    let arc_total = cycle_arcs
        + spec.size(In)
        + spec.size(Out)
        + spec.size(InTendrils)
        + spec.size(OutTendrils)
        + 2 * spec.size(Bridges)
        + spec.size(Other)
        + spec.size(Disconnected) / 2;
    b.reserve_arcs(arc_total)?;
    let mut labels: Vec<ComponentLabel> = Vec::with_capacity(total as usize);
    for l in ComponentLabel::ALL {
        for id in block(l) {
            b.add_node(id);
            let _ = id;
        }
        labels.extend(std::iter::repeat(l).take(spec.size(l) as usize));
    }

    // LSC: one cycle through every member, then extra arcs sampled from the
    // remaining internal pairs.
    let lsc = block(Lsc);
    let lsc_n = spec.size(Lsc);
    if lsc_n >= 2 {
        for i in 0..lsc_n {
            b.add_arc(lsc.start + i, lsc.start + (i + 1) % lsc_n);
        }
        let mut extra: HashSet<u64> = HashSet::new();
        while (extra.len() as u64) < spec.lsc_extra_arcs {
            let u = pick_range(&lsc, &mut rng);
            let v = pick_range(&lsc, &mut rng);
            if u == v || v == lsc.start + (u - lsc.start + 1) % lsc_n {
                continue;
            }
            let key = (u - lsc.start) << 32 | (v - lsc.start);
            if extra.insert(key) {
                b.add_arc(u, v);
            }
        }
    }

    // IN chains toward the LSC: a level-1 node points into the LSC, a
    // level-k node points at a level-(k-1) node. OUT mirrors it outward.
    let in_levels = assign_levels(block(In), spec.depth_in, &mut rng);
    for (k, level) in in_levels.iter().enumerate() {
        for &id in level {
            let target = if k == 0 { pick_range(&lsc, &mut rng) } else { pick(&in_levels[k - 1], &mut rng) };
            b.add_arc(id, target);
        }
    }
    let out_levels = assign_levels(block(Out), spec.depth_out, &mut rng);
    for (k, level) in out_levels.iter().enumerate() {
        for &id in level {
            let source = if k == 0 { pick_range(&lsc, &mut rng) } else { pick(&out_levels[k - 1], &mut rng) };
            b.add_arc(source, id);
        }
    }

    // Tendrils: IN-tendrils hang forward off IN, OUT-tendrils feed into OUT.
    let in_block = block(In);
    let int_levels = assign_levels(block(InTendrils), spec.depth_tendrils, &mut rng);
    for (k, level) in int_levels.iter().enumerate() {
        for &id in level {
            let source = if k == 0 { pick_range(&in_block, &mut rng) } else { pick(&int_levels[k - 1], &mut rng) };
            b.add_arc(source, id);
        }
    }
    let out_block = block(Out);
    let outt_levels = assign_levels(block(OutTendrils), spec.depth_tendrils, &mut rng);
    for (k, level) in outt_levels.iter().enumerate() {
        for &id in level {
            let target = if k == 0 { pick_range(&out_block, &mut rng) } else { pick(&outt_levels[k - 1], &mut rng) };
            b.add_arc(id, target);
        }
    }

    // Bridges: one arc in from IN, one arc out to OUT.
    for id in block(Bridges) {
        b.add_arc(pick_range(&in_block, &mut rng), id);
        b.add_arc(id, pick_range(&out_block, &mut rng));
    }

    // OTHER: weakly attached through a single arc into an IN-tendril.
    let int_block = block(InTendrils);
    for id in block(Other) {
        b.add_arc(id, pick_range(&int_block, &mut rng));
    }

    // DISCONNECTED: separate two-node weak components, odd one out isolated.
    let disc = block(Disconnected);
    let mut it = disc.clone();
    while let (Some(a), Some(bb)) = (it.next(), it.next()) {
        b.add_arc(a, bb);
    }

    let g = b.finish()?;
    debug_assert_eq!(g.node_count() as u64, total);
    // The construction emits no duplicates or self-loops.
    debug_assert_eq!(g.arc_count(), arc_total);

    if total > 0 && g.node_count() <= ORACLE_MAX_NODES {
        let checked = oracle_classify(&g).expect("nonempty graph within oracle limit");
        assert_eq!(
            checked.labels(),
            &labels[..],
            "planted construction disagrees with the oracle; generator bug"
        );
    }
    Ok((g, labels))
}
