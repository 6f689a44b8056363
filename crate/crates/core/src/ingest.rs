//! File ingestion: arc lists, adjacency lists, and per-node metadata.
//!
//! Two arc formats are supported. Edge list: one `src dst` pair per line,
//! whitespace separated. Adjacency list: `src:dst1,dst2,...` with an empty
//! target list materializing an arc-less node. Both skip blank lines and
//! `#` comments and report errors with 1-based line numbers.
//!
//! Metadata is CSV with header
//! `id,created_at,tweets,api_followers,api_followings,protected,status`
//! plus optional boolean columns `verified` and `expert`. The `api_*` fields
//! are the degrees claimed by an external source, kept separate from the
//! degrees computed from the arcs so the two can be reconciled
//! (`validate_degrees`).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;
use thiserror::Error;

use crate::graph::{DirectedGraph, ExternalId, GraphBuilder, GraphError, NodeIndex};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path} line {line}: expected 'src dst'")]
    BadEdgeLine { path: String, line: u64 },
    #[error("{path} line {line}: invalid node id {token:?}")]
    BadNodeId { path: String, line: u64, token: String },
    #[error("{path} line {line}: expected 'src:dst1,dst2,...'")]
    MissingColon { path: String, line: u64 },
    #[error("{path} row {row}: {msg}")]
    BadMetaRow { path: String, row: u64, msg: String },
    #[error("{path}: duplicate metadata id {id}")]
    DuplicateMetaId { path: String, id: ExternalId },
    #[error("{path}: missing required column {column:?}")]
    MissingColumn { path: String, column: &'static str },
    #[error("{path}: unexpected column {column:?}")]
    UnexpectedColumn { path: String, column: String },
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// On-disk arc encodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeFormat {
    EdgeList,
    Adjacency,
}

/// One parsed item: an arc, or a node materialized without arcs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Entry {
    Arc(ExternalId, ExternalId),
    Node(ExternalId),
}

fn parse_id(token: &[u8], path: &str, line: u64) -> Result<ExternalId, ParseError> {
    let bad = || ParseError::BadNodeId {
        path: path.to_string(),
        line,
        token: String::from_utf8_lossy(token).into_owned(),
    };
    if token.is_empty() {
        return Err(bad());
    }
    let mut x: ExternalId = 0;
    for &b in token {
        if !b.is_ascii_digit() {
            return Err(bad());
        }
        x = x
            .checked_mul(10)
            .and_then(|x| x.checked_add((b - b'0') as u64))
            .ok_or_else(bad)?;
    }
    Ok(x)
}

fn trim(mut s: &[u8]) -> &[u8] {
    while let [b' ' | b'\t' | b'\r' | b'\n', rest @ ..] = s {
        s = rest;
    }
    while let [rest @ .., b' ' | b'\t' | b'\r' | b'\n'] = s {
        s = rest;
    }
    s
}

/// Streaming reader over either arc format. Yields one `Entry` at a time;
/// adjacency lines with several targets are buffered internally.
pub struct ArcReader<R> {
    reader: R,
    path: String,
    format: EdgeFormat,
    line: u64,
    buf: Vec<u8>,
    pending: Vec<Entry>,
    pending_pos: usize,
    done: bool,
}

impl ArcReader<BufReader<File>> {
    pub fn open(path: &Path, format: EdgeFormat) -> Result<Self, ParseError> {
        let label = path.display().to_string();
        let file = File::open(path).map_err(|source| ParseError::Io { path: label.clone(), source })?;
        Ok(ArcReader::new(BufReader::with_capacity(1 << 20, file), label, format))
    }
}

impl<R: BufRead> ArcReader<R> {
    pub fn new(reader: R, label: impl Into<String>, format: EdgeFormat) -> Self {
        ArcReader {
            reader,
            path: label.into(),
            format,
            line: 0,
            buf: Vec::new(),
            pending: Vec::new(),
            pending_pos: 0,
            done: false,
        }
    }

    fn parse_line(&mut self) -> Result<(), ParseError> {
        let line = trim(&self.buf);
        if line.is_empty() || line[0] == b'#' {
            return Ok(());
        }
        match self.format {
            EdgeFormat::EdgeList => {
                let mut tokens = line
                    .split(|&b| b == b' ' || b == b'\t')
                    .filter(|t| !t.is_empty());
                let (a, b) = match (tokens.next(), tokens.next(), tokens.next()) {
                    (Some(a), Some(b), None) => (a, b),
                    _ => return Err(ParseError::BadEdgeLine { path: self.path.clone(), line: self.line }),
                };
                let src = parse_id(a, &self.path, self.line)?;
                let dst = parse_id(b, &self.path, self.line)?;
                self.pending.push(Entry::Arc(src, dst));
            }
            EdgeFormat::Adjacency => {
                let colon = line
                    .iter()
                    .position(|&b| b == b':')
                    .ok_or_else(|| ParseError::MissingColon { path: self.path.clone(), line: self.line })?;
                let src = parse_id(trim(&line[..colon]), &self.path, self.line)?;
                let rest = trim(&line[colon + 1..]);
                if rest.is_empty() {
                    self.pending.push(Entry::Node(src));
                } else {
                    for token in rest.split(|&b| b == b',') {
                        let dst = parse_id(trim(token), &self.path, self.line)?;
                        self.pending.push(Entry::Arc(src, dst));
                    }
                }
            }
        }
        Ok(())
    }
}

impl<R: BufRead> Iterator for ArcReader<R> {
    type Item = Result<Entry, ParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.pending_pos < self.pending.len() {
                let e = self.pending[self.pending_pos];
                self.pending_pos += 1;
                return Some(Ok(e));
            }
            if self.done {
                return None;
            }
            self.pending.clear();
            self.pending_pos = 0;
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Err(source) => {
                    self.done = true;
                    return Some(Err(ParseError::Io { path: self.path.clone(), source }));
                }
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {
                    self.line += 1;
                    if let Err(e) = self.parse_line() {
                        self.done = true;
                        return Some(Err(e));
                    }
                }
            }
        }
    }
}

/// Writes a graph as an edge list, one `src dst` line per arc, ascending.
pub fn write_edge_list<W: Write>(g: &DirectedGraph, w: &mut W) -> io::Result<()> {
    for (u, v) in g.arcs() {
        writeln!(w, "{} {}", g.external_id(u), g.external_id(v))?;
    }
    Ok(())
}

/// Writes a graph as an adjacency list with one line per node, arc-less
/// nodes included as `src:`.
pub fn write_adjacency_list<W: Write>(g: &DirectedGraph, w: &mut W) -> io::Result<()> {
    for u in 0..g.node_count() as NodeIndex {
        write!(w, "{}:", g.external_id(u))?;
        for (i, &v) in g.out_neighbors(u).iter().enumerate() {
            if i > 0 {
                w.write_all(b",")?;
            }
            write!(w, "{}", g.external_id(v))?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Account lifecycle state as recorded in metadata.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AccountStatus {
    Active,
    Suspended,
    Deactivated,
    #[default]
    Unknown,
}

impl AccountStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            AccountStatus::Active => "active",
            AccountStatus::Suspended => "suspended",
            AccountStatus::Deactivated => "deactivated",
            AccountStatus::Unknown => "unknown",
        }
    }

    fn parse(s: &str) -> Option<AccountStatus> {
        match s {
            "active" => Some(AccountStatus::Active),
            "suspended" => Some(AccountStatus::Suspended),
            "deactivated" => Some(AccountStatus::Deactivated),
            "unknown" => Some(AccountStatus::Unknown),
            _ => None,
        }
    }
}

/// Per-node metadata record. Nodes that never appeared in the metadata file
/// carry the default: no creation date, zero counts, status unknown.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NodeMeta {
    pub created_at: Option<NaiveDate>,
    pub tweets: u64,
    pub api_followers: u64,
    pub api_followings: u64,
    pub protected: bool,
    pub status: AccountStatus,
    pub verified: bool,
    pub expert: bool,
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "0" | "false" => Some(false),
        "1" | "true" => Some(true),
        _ => None,
    }
}

const META_EPOCH: &str = "1970-01-01";

/// Reads a metadata CSV into `(id, record)` pairs sorted by id.
/// Duplicate ids and out-of-range dates are errors.
pub fn load_metadata(path: &Path) -> Result<Vec<(ExternalId, NodeMeta)>, ParseError> {
    let label = path.display().to_string();
    let file = File::open(path).map_err(|source| ParseError::Io { path: label.clone(), source })?;
    load_metadata_from(file, label)
}

/// `load_metadata` over any reader; `label` names the source in errors.
pub fn load_metadata_from<R: io::Read>(
    reader: R,
    label: impl Into<String>,
) -> Result<Vec<(ExternalId, NodeMeta)>, ParseError> {
    let path = label.into();
    let mut csv = csv::ReaderBuilder::new().from_reader(reader);

    const REQUIRED: [&str; 7] =
        ["id", "created_at", "tweets", "api_followers", "api_followings", "protected", "status"];
    const OPTIONAL: [&str; 2] = ["verified", "expert"];
    let headers = csv
        .headers()
        .map_err(|e| ParseError::BadMetaRow { path: path.clone(), row: 0, msg: e.to_string() })?
        .clone();
    let mut col = BTreeMap::new();
    for (i, name) in headers.iter().enumerate() {
        if !REQUIRED.contains(&name) && !OPTIONAL.contains(&name) {
            return Err(ParseError::UnexpectedColumn { path, column: name.to_string() });
        }
        col.insert(name.to_string(), i);
    }
    for name in REQUIRED {
        if !col.contains_key(name) {
            return Err(ParseError::MissingColumn { path, column: name });
        }
    }

    let epoch = NaiveDate::parse_from_str(META_EPOCH, "%Y-%m-%d").expect("valid epoch");
    let today = chrono::Utc::now().date_naive();
    let mut rows: Vec<(ExternalId, NodeMeta)> = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let row = i as u64 + 1;
        let bad = |msg: String| ParseError::BadMetaRow { path: path.clone(), row, msg };
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |name: &str| record.get(col[name]).unwrap_or("");

        let id: ExternalId =
            field("id").parse().map_err(|_| bad(format!("invalid id {:?}", field("id"))))?;
        let created_at = NaiveDate::parse_from_str(field("created_at"), "%Y-%m-%d")
            .map_err(|_| bad(format!("unparseable date {:?}", field("created_at"))))?;
        if created_at < epoch || created_at > today {
            return Err(bad(format!("date {created_at} outside [{META_EPOCH}, {today}]")));
        }
        let int = |name: &'static str| -> Result<u64, ParseError> {
            field(name).parse().map_err(|_| bad(format!("invalid {name} {:?}", field(name))))
        };
        let flag = |name: &'static str| -> Result<bool, ParseError> {
            match col.get(name) {
                None => Ok(false),
                Some(_) => parse_bool(field(name)).ok_or_else(|| bad(format!("invalid {name} {:?}", field(name)))),
            }
        };
        let meta = NodeMeta {
            created_at: Some(created_at),
            tweets: int("tweets")?,
            api_followers: int("api_followers")?,
            api_followings: int("api_followings")?,
            protected: parse_bool(field("protected"))
                .ok_or_else(|| bad(format!("invalid protected {:?}", field("protected"))))?,
            status: AccountStatus::parse(field("status"))
                .ok_or_else(|| bad(format!("invalid status {:?}", field("status"))))?,
            verified: flag("verified")?,
            expert: flag("expert")?,
        };
        rows.push((id, meta));
    }

    rows.sort_by_key(|&(id, _)| id);
    for pair in rows.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(ParseError::DuplicateMetaId { path, id: pair[0].0 });
        }
    }
    Ok(rows)
}

/// A graph joined with its metadata.
#[derive(Debug)]
pub struct Dataset {
    pub graph: DirectedGraph,
    /// Indexed by node; defaulted where no record existed.
    meta: Vec<NodeMeta>,
    meta_present: Vec<bool>,
    /// Metadata records whose id is absent from the graph.
    isolated: Vec<(ExternalId, NodeMeta)>,
    pub provenance: Provenance,
}

/// Where a dataset came from, for report headers and diagnostics.
#[derive(Clone, Debug, Default)]
pub struct Provenance {
    pub edges_file: Option<String>,
    pub meta_file: Option<String>,
}

impl Dataset {
    /// Joins a pre-built graph with metadata rows (sorted by id). Records
    /// whose id is not a graph node are retained as isolated.
    pub fn assemble(graph: DirectedGraph, meta_rows: Vec<(ExternalId, NodeMeta)>, provenance: Provenance) -> Dataset {
        let n = graph.node_count();
        let mut meta = vec![NodeMeta::default(); n];
        let mut meta_present = vec![false; n];
        let mut isolated = Vec::new();
        for (id, m) in meta_rows {
            match graph.index_of(id) {
                Some(idx) => {
                    meta[idx as usize] = m;
                    meta_present[idx as usize] = true;
                }
                None => isolated.push((id, m)),
            }
        }
        Dataset { graph, meta, meta_present, isolated, provenance }
    }

    /// A dataset with every record defaulted.
    pub fn without_metadata(graph: DirectedGraph) -> Dataset {
        Dataset::assemble(graph, Vec::new(), Provenance::default())
    }

    pub fn meta(&self, n: NodeIndex) -> &NodeMeta {
        &self.meta[n as usize]
    }

    /// Whether the node had an actual metadata record.
    pub fn has_meta(&self, n: NodeIndex) -> bool {
        self.meta_present[n as usize]
    }

    pub fn nodes_with_meta(&self) -> u64 {
        self.meta_present.iter().filter(|&&p| p).count() as u64
    }

    pub fn isolated(&self) -> &[(ExternalId, NodeMeta)] {
        &self.isolated
    }

    /// Latest creation date on record; the default reference date for ages.
    pub fn max_created_at(&self) -> Option<NaiveDate> {
        self.meta.iter().filter_map(|m| m.created_at).max()
    }
}

/// Loads a dataset from an arc file and an optional metadata file. Every
/// metadata id is materialized as a graph node, so accounts known only from
/// metadata participate in the classification (as DISCONNECTED unless arcs
/// say otherwise).
pub fn load_dataset(edges: &Path, format: EdgeFormat, meta: Option<&Path>) -> Result<Dataset, IngestError> {
    let meta_rows = match meta {
        Some(path) => load_metadata(path)?,
        None => Vec::new(),
    };
    let mut b = GraphBuilder::new();
    for &(id, _) in &meta_rows {
        b.add_node(id);
    }
    for entry in ArcReader::open(edges, format)? {
        match entry? {
            Entry::Arc(u, v) => b.add_arc(u, v),
            Entry::Node(u) => b.add_node(u),
        }
    }
    let graph = b.finish()?;
    let provenance = Provenance {
        edges_file: edges.file_name().map(|s| s.to_string_lossy().into_owned()),
        meta_file: meta.and_then(|p| p.file_name().map(|s| s.to_string_lossy().into_owned())),
    };
    Ok(Dataset::assemble(graph, meta_rows, provenance))
}

/// Histogram of api-claimed minus computed degrees, per direction, over the
/// nodes that have metadata records.
#[derive(Debug, PartialEq)]
pub struct DegreeDiffReport {
    pub nodes_with_meta: u64,
    pub followers_diff: BTreeMap<i64, u64>,
    pub followings_diff: BTreeMap<i64, u64>,
}

impl DegreeDiffReport {
    fn zero_fraction(hist: &BTreeMap<i64, u64>, total: u64) -> f64 {
        if total == 0 {
            0.0
        } else {
            hist.get(&0).copied().unwrap_or(0) as f64 / total as f64
        }
    }

    /// Fraction of metadata nodes whose claimed follower count equals the
    /// computed in-degree.
    pub fn followers_zero_fraction(&self) -> f64 {
        Self::zero_fraction(&self.followers_diff, self.nodes_with_meta)
    }

    pub fn followings_zero_fraction(&self) -> f64 {
        Self::zero_fraction(&self.followings_diff, self.nodes_with_meta)
    }
}

/// Reconciles claimed follower/following counts against degrees computed
/// from the arcs. Differences are `claimed - computed`.
pub fn validate_degrees(d: &Dataset) -> DegreeDiffReport {
    let mut followers_diff = BTreeMap::new();
    let mut followings_diff = BTreeMap::new();
    let mut nodes_with_meta = 0u64;
    for u in 0..d.graph.node_count() as NodeIndex {
        if !d.has_meta(u) {
            continue;
        }
        nodes_with_meta += 1;
        let m = d.meta(u);
        let diff = |claimed: u64, computed: usize| -> i64 {
            let d = claimed as i128 - computed as i128;
            d.clamp(i64::MIN as i128, i64::MAX as i128) as i64
        };
        *followers_diff.entry(diff(m.api_followers, d.graph.in_degree(u))).or_insert(0) += 1;
        *followings_diff.entry(diff(m.api_followings, d.graph.out_degree(u))).or_insert(0) += 1;
    }
    DegreeDiffReport { nodes_with_meta, followers_diff, followings_diff }
}
