//! Historical macrostructure estimation by creation-date filtering.
//!
//! A snapshot at date D keeps exactly the accounts created on or before D
//! and the arcs whose endpoints both survive; an arc is assumed to exist as
//! soon as its younger endpoint does. Accounts without a creation date
//! cannot be placed on the timeline and are excluded (and counted).

use chrono::NaiveDate;
use rayon::prelude::*;
use serde_json::json;
use std::io::{self, Write};
use thiserror::Error;

use crate::graph::{DirectedGraph, ExternalId, GraphError, NodeIndex};
use crate::ingest::Dataset;
use crate::macrostructure::{arc_matrix, classify, Classification, ComponentLabel, MacroSummary, LABEL_COUNT};
use crate::scc::{compute_scc, condense};
use crate::util::add_months_clamped;

#[derive(Debug, Error)]
pub enum TemporalError {
    #[error("older snapshot ({older}) postdates newer snapshot ({newer})")]
    BadOrder { older: NaiveDate, newer: NaiveDate },
    #[error("older snapshot holds account {id} that the newer one lacks; snapshots must share a dataset")]
    DatasetMismatch { id: ExternalId },
    #[error("classifications share no external ids")]
    NoOverlap,
    #[error("evolution range is inverted ({start} after {end})")]
    BadGrid { start: NaiveDate, end: NaiveDate },
    #[error("evolution step must be at least one month")]
    ZeroStep,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// The dataset as it stood at a date, classified.
#[derive(Debug)]
pub struct Snapshot {
    pub as_of: NaiveDate,
    pub dataset: Dataset,
    /// `None` when the snapshot has no accounts.
    pub classification: Option<Classification>,
    pub summary: MacroSummary,
    /// Accounts dropped for lacking a creation date.
    pub excluded_no_date: u64,
}

impl Snapshot {
    pub fn node_count(&self) -> u64 {
        self.summary.total_nodes
    }

    pub fn sizes(&self) -> [u64; LABEL_COUNT] {
        self.summary.sizes
    }

    pub fn label_of(&self, id: ExternalId) -> Option<ComponentLabel> {
        let u = self.dataset.graph.index_of(id)?;
        Some(self.classification.as_ref().expect("nonempty snapshot").label(u))
    }
}

/// Classifies the subgraph of accounts created on or before `as_of`.
pub fn snapshot(d: &Dataset, as_of: NaiveDate) -> Result<Snapshot, TemporalError> {
    let g = &d.graph;
    let mut excluded_no_date = 0u64;
    let mut keep = vec![false; g.node_count()];
    for u in 0..g.node_count() as NodeIndex {
        match d.meta(u).created_at {
            Some(created) => keep[u as usize] = created <= as_of,
            None => excluded_no_date += 1,
        }
    }

    let induced = g.induced_subgraph(|u| keep[u as usize])?;
    let meta_rows: Vec<(ExternalId, crate::ingest::NodeMeta)> = (0..g.node_count() as NodeIndex)
        .filter(|&u| keep[u as usize])
        .map(|u| (g.external_id(u), *d.meta(u)))
        .collect();
    let dataset = Dataset::assemble(induced, meta_rows, d.provenance.clone());

    let (classification, summary) = if dataset.graph.node_count() == 0 {
        (None, MacroSummary::empty())
    } else {
        let p = compute_scc(&dataset.graph);
        let dag = condense(&dataset.graph, &p).expect("partition covers the graph");
        let c = classify(&dataset.graph, &p, &dag).expect("nonempty graph");
        let summary = arc_matrix(&dataset.graph, &c).expect("classification covers the graph");
        (Some(c), summary)
    };
    Ok(Snapshot { as_of, dataset, classification, summary, excluded_no_date })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvolutionPoint {
    pub as_of: NaiveDate,
    pub sizes: [u64; LABEL_COUNT],
    pub total: u64,
}

/// Component sizes sampled along a date grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvolutionSeries {
    pub points: Vec<EvolutionPoint>,
}

impl EvolutionSeries {
    /// CSV rows `date,label,count,percent`, grouped by date.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(b"date,label,count,percent\n")?;
        for point in &self.points {
            for label in ComponentLabel::ALL {
                let count = point.sizes[label.index()];
                let percent = if point.total == 0 { 0.0 } else { 100.0 * count as f64 / point.total as f64 };
                writeln!(w, "{},{},{},{}", point.as_of, label, count, percent)?;
            }
        }
        Ok(())
    }
}

/// Snapshots every `step_months` from `start`, with `end` appended when the
/// grid does not land on it. Dates are classified independently and in
/// parallel; the series order is the grid order.
pub fn evolution(
    d: &Dataset,
    start: NaiveDate,
    end: NaiveDate,
    step_months: u32,
) -> Result<EvolutionSeries, TemporalError> {
    if start > end {
        return Err(TemporalError::BadGrid { start, end });
    }
    if step_months == 0 {
        return Err(TemporalError::ZeroStep);
    }
    let mut dates = Vec::new();
    for i in 0.. {
        let date = add_months_clamped(start, i * step_months);
        if date > end {
            break;
        }
        dates.push(date);
    }
    if dates.last() != Some(&end) {
        dates.push(end);
    }

    let points = dates
        .par_iter()
        .map(|&as_of| {
            snapshot(d, as_of).map(|s| EvolutionPoint { as_of, sizes: s.sizes(), total: s.node_count() })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvolutionSeries { points })
}

/// Where the accounts that appeared between two snapshots ended up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attribution {
    pub period_end: NaiveDate,
    /// New accounts per component of the newer classification.
    pub counts: [u64; LABEL_COUNT],
    pub new_total: u64,
}

impl Attribution {
    pub fn fraction_of(&self, label: ComponentLabel) -> f64 {
        if self.new_total == 0 {
            0.0
        } else {
            self.counts[label.index()] as f64 / self.new_total as f64
        }
    }

    /// CSV rows `period_end,label,new_accounts,fraction`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(b"period_end,label,new_accounts,fraction\n")?;
        for label in ComponentLabel::ALL {
            writeln!(w, "{},{},{},{}", self.period_end, label, self.counts[label.index()], self.fraction_of(label))?;
        }
        Ok(())
    }
}

/// Buckets every account present only in `newer` by its component there.
/// The snapshots must come from one dataset: each older account must still
/// exist in the newer snapshot.
pub fn new_account_attribution(older: &Snapshot, newer: &Snapshot) -> Result<Attribution, TemporalError> {
    if older.as_of > newer.as_of {
        return Err(TemporalError::BadOrder { older: older.as_of, newer: newer.as_of });
    }
    let old_ids = older.dataset.graph.ids();
    let new_ids = newer.dataset.graph.ids();
    let mut counts = [0u64; LABEL_COUNT];
    let mut new_total = 0u64;
    let mut oi = 0usize;
    for (u, &id) in new_ids.iter().enumerate() {
        if oi < old_ids.len() && old_ids[oi] == id {
            oi += 1;
            continue;
        }
        let c = newer.classification.as_ref().expect("newer snapshot has accounts");
        counts[c.label(u as NodeIndex).index()] += 1;
        new_total += 1;
    }
    if oi < old_ids.len() {
        return Err(TemporalError::DatasetMismatch { id: old_ids[oi] });
    }
    Ok(Attribution { period_end: newer.as_of, counts, new_total })
}

/// Label agreement between two classifications over the ids they share.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Agreement {
    pub common: u64,
    pub matching: u64,
    /// `confusion[a][b]` counts common ids labeled `a` on one side, `b` on the other.
    pub confusion: [[u64; LABEL_COUNT]; LABEL_COUNT],
}

impl Agreement {
    pub fn fraction(&self) -> f64 {
        self.matching as f64 / self.common as f64
    }

    pub fn to_json(&self) -> serde_json::Value {
        let confusion: Vec<Vec<u64>> = self.confusion.iter().map(|row| row.to_vec()).collect();
        json!({
            "common": self.common,
            "matching": self.matching,
            "fraction": self.fraction(),
            "label_order": ComponentLabel::ALL.map(|l| l.as_str()),
            "confusion": confusion,
        })
    }
}

/// Compares two classifications id by id over the shared external ids.
pub fn agreement(
    graph_a: &DirectedGraph,
    a: &Classification,
    graph_b: &DirectedGraph,
    b: &Classification,
) -> Result<Agreement, TemporalError> {
    debug_assert_eq!(graph_a.node_count(), a.node_count());
    debug_assert_eq!(graph_b.node_count(), b.node_count());
    let ids_a = graph_a.ids();
    let ids_b = graph_b.ids();
    let mut confusion = [[0u64; LABEL_COUNT]; LABEL_COUNT];
    let (mut i, mut j) = (0usize, 0usize);
    let (mut common, mut matching) = (0u64, 0u64);
    while i < ids_a.len() && j < ids_b.len() {
        match ids_a[i].cmp(&ids_b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let la = a.label(i as NodeIndex);
                let lb = b.label(j as NodeIndex);
                confusion[la.index()][lb.index()] += 1;
                common += 1;
                matching += (la == lb) as u64;
                i += 1;
                j += 1;
            }
        }
    }
    if common == 0 {
        return Err(TemporalError::NoOverlap);
    }
    Ok(Agreement { common, matching, confusion })
}
