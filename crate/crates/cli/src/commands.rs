//! Command implementations and the exit-code contract.
//!
//! Every output file is written to a temporary sibling and renamed into
//! place, so failed runs leave no partial files. Data goes to files or
//! stdout; progress and diagnostics go to stderr.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use bowtie_core::graph::GraphError;
use bowtie_core::ingest::{load_dataset, validate_degrees, write_edge_list, Dataset, IngestError, ParseError};
use bowtie_core::macrostructure::{arc_matrix, classify, write_labels, Classification, ComponentLabel, MacroError, MacroSummary};
use bowtie_core::stats::{
    abandoned_fraction, ccdf, component_profile, degree_summary, label_crosstab, top_k_outliers,
    AbandonedParams, LabelSelector, Metric, OutlierCategory, StatsError,
};
use bowtie_core::synth::{planted_bowtie, run_differential, PlantSpec, SynthError};
use bowtie_core::temporal::{agreement, evolution, new_account_attribution, snapshot, Snapshot, TemporalError};
use bowtie_core::util::write_atomically;
use bowtie_core::{compute_scc, condense, ExternalId};

use crate::{Command, InputArgs, OutArgs, ShapeArgs};

/// Failure classes, one per exit code: 1 bad input, 2 exhausted resources,
/// 3 violated computation contract.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Resource(String),
    Contract(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Resource(_) => 2,
            CliError::Contract(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Resource(m) | CliError::Contract(m) => f.write_str(m),
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> CliError {
        CliError::Input(e.to_string())
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> CliError {
        CliError::Resource(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> CliError {
        match e {
            IngestError::Parse(e) => e.into(),
            IngestError::Graph(e) => e.into(),
        }
    }
}

impl From<MacroError> for CliError {
    fn from(e: MacroError) -> CliError {
        CliError::Contract(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> CliError {
        CliError::Contract(e.to_string())
    }
}

impl From<TemporalError> for CliError {
    fn from(e: TemporalError) -> CliError {
        match e {
            TemporalError::BadGrid { .. } | TemporalError::ZeroStep | TemporalError::BadOrder { .. } => {
                CliError::Input(e.to_string())
            }
            TemporalError::Graph(e) => e.into(),
            TemporalError::DatasetMismatch { .. } | TemporalError::NoOverlap => CliError::Contract(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> CliError {
        match e {
            SynthError::InfeasibleArcCount { .. } | SynthError::InvalidPlantSpec(_) => CliError::Input(e.to_string()),
            SynthError::Graph(e) => e.into(),
            SynthError::OracleTooLarge { .. } | SynthError::OracleEmptyGraph => CliError::Contract(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> CliError {
        CliError::Resource(e.to_string())
    }
}

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Decompose { input, output } => cmd_decompose(&input, &output),
        Command::Stats { input, output, k, labels, reference_date, filter_zeros } => {
            cmd_stats(&input, &output, k, labels.as_deref(), reference_date, filter_zeros)
        }
        Command::Snapshot { input, output, as_of } => cmd_snapshot(&input, &output, as_of),
        Command::Evolve { input, output, start, end, step_months } => {
            cmd_evolve(&input, &output, start, end, step_months)
        }
        Command::Diff { input, output, older, newer } => cmd_diff(&input, &output, older, newer),
        Command::ValidateDegrees { input, output } => cmd_validate_degrees(&input, &output),
        Command::Generate { output, shape, seed } => cmd_generate(&output, &shape, seed),
        Command::OracleCheck { trials, max_n, seed } => cmd_oracle_check(trials, max_n, seed),
    }
}

fn prepare_out(output: &OutArgs) -> Result<&Path, CliError> {
    if output.threads > 0 {
        // First configuration wins; later calls in one process are no-ops.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(output.threads).build_global();
    }
    fs::create_dir_all(&output.out)
        .map_err(|e| CliError::Resource(format!("creating {}: {e}", output.out.display())))?;
    Ok(&output.out)
}

fn load(input: &InputArgs) -> Result<Dataset, CliError> {
    let started = Instant::now();
    let d = load_dataset(&input.edges, input.format.into(), input.meta.as_deref())?;
    eprintln!(
        "loaded {} accounts, {} arcs in {:.1}s",
        d.graph.node_count(),
        d.graph.arc_count(),
        started.elapsed().as_secs_f64()
    );
    if d.graph.dropped_duplicates() > 0 || d.graph.dropped_self_loops() > 0 {
        eprintln!(
            "dropped {} duplicate arcs, {} self-loops",
            d.graph.dropped_duplicates(),
            d.graph.dropped_self_loops()
        );
    }
    for &(id, _) in d.isolated().iter().take(1) {
        eprintln!("note: metadata id {id} has no arcs (kept as a node)");
    }
    Ok(d)
}

/// Runs the scc/condense/classify pipeline; an account-less dataset yields
/// no classification and an all-zero summary.
fn classify_dataset(d: &Dataset) -> Result<(Option<Classification>, MacroSummary), CliError> {
    if d.graph.node_count() == 0 {
        return Ok((None, MacroSummary::empty()));
    }
    let started = Instant::now();
    let p = compute_scc(&d.graph);
    let dag = condense(&d.graph, &p).map_err(|e| CliError::Contract(e.to_string()))?;
    let c = classify(&d.graph, &p, &dag)?;
    let summary = arc_matrix(&d.graph, &c)?;
    eprintln!(
        "classified {} components in {:.1}s",
        dag.component_count(),
        started.elapsed().as_secs_f64()
    );
    Ok((Some(c), summary))
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    write_atomically(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::from)?;
        w.write_all(b"\n")
    })?;
    Ok(())
}

fn write_label_table(path: &Path, d: &Dataset, c: Option<&Classification>) -> Result<(), CliError> {
    write_atomically(path, |w| match c {
        Some(c) => write_labels(&d.graph, c, w),
        None => w.write_all(b"id,component,level,level2\n"),
    })?;
    Ok(())
}

fn summary_json(d: &Dataset, summary: &MacroSummary) -> Value {
    let mut v = summary.to_json();
    v["input"] = json!({
        "edges": d.provenance.edges_file,
        "meta": d.provenance.meta_file,
    });
    v
}

fn cmd_decompose(input: &InputArgs, output: &OutArgs) -> Result<(), CliError> {
    let dir = prepare_out(output)?;
    let d = load(input)?;
    let (classification, summary) = classify_dataset(&d)?;
    write_label_table(&dir.join("labels.csv"), &d, classification.as_ref())?;
    write_json(&dir.join("summary.json"), &summary_json(&d, &summary))?;
    eprintln!("wrote labels.csv, summary.json to {}", dir.display());
    Ok(())
}

fn read_id_set(path: &Path) -> Result<BTreeSet<ExternalId>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut ids = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let id: ExternalId = line
            .parse()
            .map_err(|_| CliError::Input(format!("{} line {}: invalid id {line:?}", path.display(), i + 1)))?;
        ids.insert(id);
    }
    Ok(ids)
}

fn cmd_stats(
    input: &InputArgs,
    output: &OutArgs,
    k: Option<u64>,
    labels: Option<&Path>,
    reference_date: Option<NaiveDate>,
    filter_zeros: bool,
) -> Result<(), CliError> {
    let dir = prepare_out(output)?;
    let d = load(input)?;
    let (classification, _) = classify_dataset(&d)?;
    let c = classification.ok_or(StatsError::EmptyGraph)?;

    write_json(&dir.join("degree_summary.json"), &degree_summary(&d.graph)?.to_json())?;
    write_json(&dir.join("component_profile.json"), &component_profile(&d, &c).to_json())?;
    let params = AbandonedParams { reference_date, ..AbandonedParams::default() };
    write_json(&dir.join("abandoned.json"), &abandoned_fraction(&d, &c, params).to_json())?;

    let mut metrics = vec![Metric::InDegree, Metric::OutDegree];
    if d.nodes_with_meta() > 0 {
        metrics.push(Metric::Tweets);
    }
    if d.max_created_at().is_some() {
        metrics.push(Metric::AgeMonths);
    }
    let sizes = c.sizes();
    let mut scopes = vec![("ALL".to_string(), None)];
    for label in ComponentLabel::ALL {
        if sizes[label.index()] > 0 {
            scopes.push((label.as_str().to_string(), Some(label)));
        }
    }
    let mut files = 0u32;
    for &metric in &metrics {
        for (name, component) in &scopes {
            let curve = ccdf(&d, &c, metric, *component, filter_zeros, reference_date)?;
            let path = dir.join(format!("ccdf_{}_{}.csv", metric.as_str(), name));
            write_atomically(&path, |w| curve.write_csv(w))?;
            files += 1;
        }
    }
    eprintln!("wrote {files} distribution files");

    let label_set = labels.map(read_id_set).transpose()?;
    if let Some(k) = k {
        if k == 0 {
            return Err(CliError::Input("--k must be at least 1".to_string()));
        }
        let mut categories = serde_json::Map::new();
        for category in OutlierCategory::ALL {
            let report = top_k_outliers(&d, &c, category, k);
            categories.insert(category.as_str().to_string(), report.to_json(label_set.as_ref()));
        }
        write_json(&dir.join("outliers.json"), &json!({"k": k, "categories": Value::Object(categories)}))?;
    }

    if let Some(set) = &label_set {
        let mut v = label_crosstab(&d, &c, set).to_json();
        v["source"] = json!(labels.and_then(|p| p.file_name()).map(|s| s.to_string_lossy().into_owned()));
        write_json(&dir.join("crosstab_labels.json"), &v)?;
    }
    for (name, selector) in [
        ("suspended", LabelSelector::Suspended),
        ("verified", LabelSelector::Verified),
        ("expert", LabelSelector::Expert),
    ] {
        let set = selector.resolve(&d);
        if !set.is_empty() {
            write_json(&dir.join(format!("crosstab_{name}.json")), &label_crosstab(&d, &c, &set).to_json())?;
        }
    }
    eprintln!("stats written to {}", dir.display());
    Ok(())
}

fn snapshot_json(s: &Snapshot) -> Value {
    let mut v = s.summary.to_json();
    v["as_of"] = json!(s.as_of.to_string());
    v["excluded_no_date"] = json!(s.excluded_no_date);
    v
}

fn cmd_snapshot(input: &InputArgs, output: &OutArgs, as_of: NaiveDate) -> Result<(), CliError> {
    let dir = prepare_out(output)?;
    let d = load(input)?;
    let s = snapshot(&d, as_of)?;
    eprintln!(
        "snapshot {as_of}: {} of {} accounts (skipped {} without dates)",
        s.node_count(),
        d.graph.node_count(),
        s.excluded_no_date
    );
    write_label_table(&dir.join(format!("labels_{as_of}.csv")), &s.dataset, s.classification.as_ref())?;
    write_json(&dir.join(format!("summary_{as_of}.json")), &snapshot_json(&s))?;
    Ok(())
}

fn cmd_evolve(
    input: &InputArgs,
    output: &OutArgs,
    start: NaiveDate,
    end: NaiveDate,
    step_months: u32,
) -> Result<(), CliError> {
    if start > end {
        return Err(CliError::Input(format!("--start {start} is after --end {end}")));
    }
    if step_months == 0 {
        return Err(CliError::Input("--step-months must be at least 1".to_string()));
    }
    let dir = prepare_out(output)?;
    let d = load(input)?;
    let series = evolution(&d, start, end, step_months)?;
    eprintln!("computed {} snapshots", series.points.len());
    write_atomically(&dir.join("evolution.csv"), |w| series.write_csv(w))?;
    Ok(())
}

fn cmd_diff(input: &InputArgs, output: &OutArgs, older: NaiveDate, newer: NaiveDate) -> Result<(), CliError> {
    if older > newer {
        return Err(CliError::Input(format!("--older {older} is after --newer {newer}")));
    }
    let dir = prepare_out(output)?;
    let d = load(input)?;
    let older_snap = snapshot(&d, older)?;
    let newer_snap = snapshot(&d, newer)?;
    let attribution = new_account_attribution(&older_snap, &newer_snap)?;
    eprintln!("{} accounts appeared between {older} and {newer}", attribution.new_total);
    write_atomically(&dir.join("attribution.csv"), |w| attribution.write_csv(w))?;

    match (&older_snap.classification, &newer_snap.classification) {
        (Some(co), Some(cn)) => {
            let a = agreement(&older_snap.dataset.graph, co, &newer_snap.dataset.graph, cn)?;
            let mut v = a.to_json();
            v["older"] = json!(older.to_string());
            v["newer"] = json!(newer.to_string());
            write_json(&dir.join("agreement.json"), &v)?;
        }
        _ => eprintln!("skipping agreement.json: a snapshot is empty"),
    }
    Ok(())
}

fn cmd_validate_degrees(input: &InputArgs, output: &OutArgs) -> Result<(), CliError> {
    let dir = prepare_out(output)?;
    let d = load(input)?;
    let report = validate_degrees(&d);
    let hist = |h: &std::collections::BTreeMap<i64, u64>| -> Value {
        Value::Array(h.iter().map(|(&diff, &count)| json!([diff, count])).collect())
    };
    let v = json!({
        "nodes_with_meta": report.nodes_with_meta,
        "followers": {
            "zero_fraction": report.followers_zero_fraction(),
            "histogram": hist(&report.followers_diff),
        },
        "followings": {
            "zero_fraction": report.followings_zero_fraction(),
            "histogram": hist(&report.followings_diff),
        },
    });
    write_json(&dir.join("degree_validation.json"), &v)?;
    eprintln!(
        "followers match {:.2}%, followings match {:.2}%",
        100.0 * report.followers_zero_fraction(),
        100.0 * report.followings_zero_fraction()
    );
    Ok(())
}

fn cmd_generate(output: &OutArgs, shape: &ShapeArgs, seed: u64) -> Result<(), CliError> {
    let dir = prepare_out(output)?;
    let spec = PlantSpec {
        sizes: [
            shape.n_lsc,
            shape.n_in,
            shape.n_out,
            shape.n_in_tendrils,
            shape.n_out_tendrils,
            shape.n_bridges,
            shape.n_other,
            shape.n_disconnected,
        ],
        lsc_extra_arcs: shape.lsc_extra_arcs,
        depth_in: shape.depth_in,
        depth_out: shape.depth_out,
        depth_tendrils: shape.depth_tendrils,
        seed,
    };
    let started = Instant::now();
    let (g, labels) = planted_bowtie(&spec)?;
    eprintln!(
        "planted {} accounts, {} arcs in {:.1}s",
        g.node_count(),
        g.arc_count(),
        started.elapsed().as_secs_f64()
    );

    write_atomically(&dir.join("edges.txt"), |w| write_edge_list(&g, w))?;

    // Metadata stream is separate from the plant's so shape changes never
    // shift the dates and tweet counts drawn for surviving ids.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let base = NaiveDate::from_ymd_opt(2006, 3, 21).expect("valid date");
    write_atomically(&dir.join("meta.csv"), |w| {
        w.write_all(b"id,created_at,tweets,api_followers,api_followings,protected,status\n")?;
        for u in 0..g.node_count() as u32 {
            let created = base + chrono::Days::new(rng.gen_range(0..2400));
            let tweets: u64 = rng.gen_range(0..=500);
            writeln!(
                w,
                "{},{},{},{},{},0,active",
                g.external_id(u),
                created,
                tweets,
                g.in_degree(u),
                g.out_degree(u)
            )?;
        }
        Ok(())
    })?;

    write_atomically(&dir.join("expected_labels.csv"), |w| {
        w.write_all(b"id,component\n")?;
        for u in 0..g.node_count() as u32 {
            writeln!(w, "{},{}", g.external_id(u), labels[u as usize])?;
        }
        Ok(())
    })?;
    eprintln!("wrote edges.txt, meta.csv, expected_labels.csv to {}", dir.display());
    Ok(())
}

fn cmd_oracle_check(trials: u64, max_n: u64, seed: u64) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::Input("--trials must be at least 1".to_string()));
    }
    if max_n == 0 {
        return Err(CliError::Input("--max-n must be at least 1".to_string()));
    }
    let started = Instant::now();
    let outcome = run_differential(trials, max_n, seed);
    eprintln!("differential run took {:.1}s", started.elapsed().as_secs_f64());
    println!("{}/{} matched", outcome.trials - outcome.mismatches, outcome.trials);
    match outcome.first_mismatch {
        None => Ok(()),
        Some(detail) => Err(CliError::Contract(format!("classifier disagrees with the reference: {detail}"))),
    }
}
