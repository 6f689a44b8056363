//! Per-component account statistics over a classified dataset.
//!
//! Follower and following counts here always mean graph degrees (in and out
//! respectively), never the api-claimed metadata fields. Tweets and ages come
//! from metadata. Percentiles are nearest-rank throughout: the P-th
//! percentile of N sorted values is the value at 1-based rank ceil(P*N/100).

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use chrono::NaiveDate;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::graph::{DirectedGraph, ExternalId, NodeIndex};
use crate::ingest::{AccountStatus, Dataset};
use crate::macrostructure::{Classification, ComponentLabel, LABEL_COUNT};
use crate::util::whole_months_between;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("statistics are undefined on an empty graph")]
    EmptyGraph,
    #[error("reference date {reference} precedes creation date {created_at} of node {id}")]
    ReferenceBeforeCreation { id: ExternalId, created_at: NaiveDate, reference: NaiveDate },
}

fn labeled_map(values: impl IntoIterator<Item = Value>) -> Value {
    let mut map = Map::new();
    for (label, v) in ComponentLabel::ALL.iter().zip(values) {
        map.insert(label.as_str().to_string(), v);
    }
    Value::Object(map)
}

fn fraction(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

/// Value at 1-based rank ceil(percent*N/100) of an ascending slice.
fn nearest_rank(sorted: &[u64], percent: u32) -> u64 {
    debug_assert!(!sorted.is_empty());
    let rank = (percent as u64 * sorted.len() as u64).div_ceil(100).max(1);
    sorted[rank as usize - 1]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionSummary {
    pub mean: f64,
    pub median: u64,
    pub p90: u64,
    pub max: u64,
}

/// Graph-wide degree statistics, one summary per direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegreeSummary {
    pub accounts: u64,
    pub arcs: u64,
    /// In-degree statistics.
    pub followers: DirectionSummary,
    /// Out-degree statistics.
    pub followings: DirectionSummary,
}

impl DegreeSummary {
    pub fn to_json(&self) -> Value {
        let dir = |s: &DirectionSummary| {
            json!({"mean": s.mean, "median": s.median, "p90": s.p90, "max": s.max})
        };
        json!({
            "accounts": self.accounts,
            "arcs": self.arcs,
            "followers": dir(&self.followers),
            "followings": dir(&self.followings),
        })
    }
}

pub fn degree_summary(g: &DirectedGraph) -> Result<DegreeSummary, StatsError> {
    let n = g.node_count();
    if n == 0 {
        return Err(StatsError::EmptyGraph);
    }
    let summarize = |mut degrees: Vec<u64>| -> DirectionSummary {
        degrees.sort_unstable();
        DirectionSummary {
            mean: g.arc_count() as f64 / n as f64,
            median: nearest_rank(&degrees, 50),
            p90: nearest_rank(&degrees, 90),
            max: *degrees.last().expect("nonempty"),
        }
    };
    let ins = (0..n as NodeIndex).map(|u| g.in_degree(u) as u64).collect();
    let outs = (0..n as NodeIndex).map(|u| g.out_degree(u) as u64).collect();
    Ok(DegreeSummary {
        accounts: n as u64,
        arcs: g.arc_count() as u64,
        followers: summarize(ins),
        followings: summarize(outs),
    })
}

/// One component's row of the activity profile. Sums are exact integers;
/// shares are derived at serialization time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ProfileRow {
    pub accounts: u64,
    /// Sum of member in-degrees.
    pub follower_sum: u64,
    /// Sum of member out-degrees.
    pub following_sum: u64,
    pub tweet_sum: u64,
    pub no_followers: u64,
    pub no_followings: u64,
    pub no_tweets: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentProfile {
    pub total_accounts: u64,
    pub total_arcs: u64,
    pub total_tweets: u64,
    pub rows: [ProfileRow; LABEL_COUNT],
}

impl ComponentProfile {
    pub fn row(&self, label: ComponentLabel) -> &ProfileRow {
        &self.rows[label.index()]
    }

    pub fn to_json(&self) -> Value {
        let rows = self.rows.iter().map(|r| {
            json!({
                "accounts": r.accounts,
                "accounts_percent": 100.0 * fraction(r.accounts, self.total_accounts),
                "follower_sum": r.follower_sum,
                "follower_percent": 100.0 * fraction(r.follower_sum, self.total_arcs),
                "following_sum": r.following_sum,
                "following_percent": 100.0 * fraction(r.following_sum, self.total_arcs),
                "tweet_sum": r.tweet_sum,
                "tweet_percent": 100.0 * fraction(r.tweet_sum, self.total_tweets),
                "no_followers_percent": 100.0 * fraction(r.no_followers, r.accounts),
                "no_followings_percent": 100.0 * fraction(r.no_followings, r.accounts),
                "no_tweets_percent": 100.0 * fraction(r.no_tweets, r.accounts),
            })
        });
        json!({
            "total_accounts": self.total_accounts,
            "total_arcs": self.total_arcs,
            "total_tweets": self.total_tweets,
            "components": labeled_map(rows),
        })
    }
}

/// Exact per-component sums of accounts, degree mass, and tweets, plus
/// zero-activity counts. Follower and following sums each add up to the arc
/// count across components; they differ within one component wherever arcs
/// cross a component boundary.
pub fn component_profile(d: &Dataset, c: &Classification) -> ComponentProfile {
    let g = &d.graph;
    let mut rows = [ProfileRow::default(); LABEL_COUNT];
    let mut total_tweets = 0u64;
    for u in 0..g.node_count() as NodeIndex {
        let row = &mut rows[c.label(u).index()];
        let (ind, outd) = (g.in_degree(u) as u64, g.out_degree(u) as u64);
        let tweets = d.meta(u).tweets;
        row.accounts += 1;
        row.follower_sum += ind;
        row.following_sum += outd;
        row.tweet_sum += tweets;
        row.no_followers += (ind == 0) as u64;
        row.no_followings += (outd == 0) as u64;
        row.no_tweets += (tweets == 0) as u64;
        total_tweets += tweets;
    }
    ComponentProfile {
        total_accounts: g.node_count() as u64,
        total_arcs: g.arc_count() as u64,
        total_tweets,
        rows,
    }
}

/// Node attribute a distribution can range over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    InDegree,
    OutDegree,
    Tweets,
    AgeMonths,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::InDegree => "in_degree",
            Metric::OutDegree => "out_degree",
            Metric::Tweets => "tweets",
            Metric::AgeMonths => "age_months",
        }
    }

    pub fn from_str_exact(s: &str) -> Option<Metric> {
        [Metric::InDegree, Metric::OutDegree, Metric::Tweets, Metric::AgeMonths]
            .into_iter()
            .find(|m| m.as_str() == s)
    }
}

/// Complementary cumulative distribution: for each distinct value, the
/// fraction of the population whose value is at least it.
#[derive(Clone, Debug, PartialEq)]
pub struct Ccdf {
    pub metric: Metric,
    pub component: Option<ComponentLabel>,
    pub filter_zeros: bool,
    pub population: u64,
    /// Ascending by value; fractions start at 1.0 and never increase.
    pub points: Vec<(u64, f64)>,
}

impl Ccdf {
    /// CSV rows `value,ccdf`, one per distinct value, ascending.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(b"value,ccdf\n")?;
        for &(value, frac) in &self.points {
            writeln!(w, "{value},{frac}")?;
        }
        Ok(())
    }
}

/// Distribution of a metric over one component's members, or over every node
/// when `component` is `None`. Zero values are dropped from the population
/// when `filter_zeros` is set. Ages are whole months before `reference_date`
/// (default: latest creation date on record); nodes without a creation date
/// are skipped for the age metric.
pub fn ccdf(
    d: &Dataset,
    c: &Classification,
    metric: Metric,
    component: Option<ComponentLabel>,
    filter_zeros: bool,
    reference_date: Option<NaiveDate>,
) -> Result<Ccdf, StatsError> {
    let g = &d.graph;
    let reference = reference_date.or_else(|| d.max_created_at());
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    let mut population = 0u64;
    for u in 0..g.node_count() as NodeIndex {
        if component.is_some_and(|want| c.label(u) != want) {
            continue;
        }
        let value = match metric {
            Metric::InDegree => g.in_degree(u) as u64,
            Metric::OutDegree => g.out_degree(u) as u64,
            Metric::Tweets => d.meta(u).tweets,
            Metric::AgeMonths => match d.meta(u).created_at {
                None => continue,
                Some(created_at) => {
                    let reference = reference.expect("a date exists");
                    match whole_months_between(created_at, reference) {
                        Some(age) => age as u64,
                        None => {
                            return Err(StatsError::ReferenceBeforeCreation {
                                id: g.external_id(u),
                                created_at,
                                reference,
                            })
                        }
                    }
                }
            },
        };
        if filter_zeros && value == 0 {
            continue;
        }
        *counts.entry(value).or_insert(0) += 1;
        population += 1;
    }

    let mut points = Vec::with_capacity(counts.len());
    let mut at_least = population;
    for (&value, &count) in &counts {
        points.push((value, fraction(at_least, population)));
        at_least -= count;
    }
    Ok(Ccdf { metric, component, filter_zeros, population, points })
}

/// Thresholds for the abandoned-account heuristic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AbandonedParams {
    pub max_followers: u64,
    pub max_followings: u64,
    pub min_age_months: u32,
    pub require_no_tweet: bool,
    pub reference_date: Option<NaiveDate>,
}

impl Default for AbandonedParams {
    fn default() -> Self {
        AbandonedParams {
            max_followers: 1,
            max_followings: 1,
            min_age_months: 6,
            require_no_tweet: true,
            reference_date: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbandonedReport {
    pub params: AbandonedParams,
    pub reference_date: Option<NaiveDate>,
    pub counts: [u64; LABEL_COUNT],
    pub component_sizes: [u64; LABEL_COUNT],
    pub total: u64,
    pub total_accounts: u64,
}

impl AbandonedReport {
    pub fn fraction_of(&self, label: ComponentLabel) -> f64 {
        fraction(self.counts[label.index()], self.component_sizes[label.index()])
    }

    pub fn overall_fraction(&self) -> f64 {
        fraction(self.total, self.total_accounts)
    }

    pub fn to_json(&self) -> Value {
        let rows = ComponentLabel::ALL.iter().map(|&l| {
            json!({"count": self.counts[l.index()], "fraction": self.fraction_of(l)})
        });
        json!({
            "params": {
                "max_followers": self.params.max_followers,
                "max_followings": self.params.max_followings,
                "min_age_months": self.params.min_age_months,
                "require_no_tweet": self.params.require_no_tweet,
            },
            "reference_date": self.reference_date.map(|d| d.to_string()),
            "overall": {"count": self.total, "fraction": self.overall_fraction()},
            "components": labeled_map(rows),
        })
    }
}

/// Counts accounts that look abandoned: at most `max_followers` followers,
/// at most `max_followings` followings, at least `min_age_months` old at the
/// reference date, and tweetless when `require_no_tweet` is set. Accounts
/// without a creation date cannot establish an age and only pass when
/// `min_age_months` is zero.
pub fn abandoned_fraction(d: &Dataset, c: &Classification, params: AbandonedParams) -> AbandonedReport {
    let g = &d.graph;
    let reference = params.reference_date.or_else(|| d.max_created_at());
    let mut counts = [0u64; LABEL_COUNT];
    for u in 0..g.node_count() as NodeIndex {
        let m = d.meta(u);
        if g.in_degree(u) as u64 > params.max_followers
            || g.out_degree(u) as u64 > params.max_followings
            || (params.require_no_tweet && m.tweets > 0)
        {
            continue;
        }
        let old_enough = params.min_age_months == 0
            || match (m.created_at, reference) {
                (Some(created_at), Some(reference)) => whole_months_between(created_at, reference)
                    .is_some_and(|age| age >= params.min_age_months),
                _ => false,
            };
        if old_enough {
            counts[c.label(u).index()] += 1;
        }
    }
    AbandonedReport {
        params,
        reference_date: reference,
        counts,
        component_sizes: c.sizes(),
        total: counts.iter().sum(),
        total_accounts: g.node_count() as u64,
    }
}

/// The five outlier rankings. The `le1_follower` pair restricts candidates
/// to accounts with at most one follower before ranking.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutlierCategory {
    TopFollowed,
    TopFollowing,
    TopTweeting,
    TopFollowingLe1Follower,
    TopTweetingLe1Follower,
}

impl OutlierCategory {
    pub const ALL: [OutlierCategory; 5] = [
        OutlierCategory::TopFollowed,
        OutlierCategory::TopFollowing,
        OutlierCategory::TopTweeting,
        OutlierCategory::TopFollowingLe1Follower,
        OutlierCategory::TopTweetingLe1Follower,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OutlierCategory::TopFollowed => "top_followed",
            OutlierCategory::TopFollowing => "top_following",
            OutlierCategory::TopTweeting => "top_tweeting",
            OutlierCategory::TopFollowingLe1Follower => "top_following_le1_follower",
            OutlierCategory::TopTweetingLe1Follower => "top_tweeting_le1_follower",
        }
    }

    pub fn from_str_exact(s: &str) -> Option<OutlierCategory> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }

    fn constrained(self) -> bool {
        matches!(self, OutlierCategory::TopFollowingLe1Follower | OutlierCategory::TopTweetingLe1Follower)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OutlierMember {
    pub id: ExternalId,
    pub value: u64,
    pub label: ComponentLabel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutlierReport {
    pub category: OutlierCategory,
    pub k: u64,
    /// Fewer than k accounts were eligible.
    pub truncated: bool,
    /// Ordered by value descending, ties by ascending id.
    pub members: Vec<OutlierMember>,
}

impl OutlierReport {
    /// Fraction of the report's members that fall in each component.
    pub fn component_share(&self) -> [f64; LABEL_COUNT] {
        let mut counts = [0u64; LABEL_COUNT];
        for m in &self.members {
            counts[m.label.index()] += 1;
        }
        counts.map(|c| fraction(c, self.members.len() as u64))
    }

    /// Per component, the fraction of this report's members carrying an
    /// external label; zero where the component has no members here.
    pub fn label_fractions(&self, set: &BTreeSet<ExternalId>) -> [f64; LABEL_COUNT] {
        let mut members = [0u64; LABEL_COUNT];
        let mut labeled = [0u64; LABEL_COUNT];
        for m in &self.members {
            members[m.label.index()] += 1;
            labeled[m.label.index()] += set.contains(&m.id) as u64;
        }
        let mut out = [0.0; LABEL_COUNT];
        for i in 0..LABEL_COUNT {
            out[i] = fraction(labeled[i], members[i]);
        }
        out
    }

    pub fn to_json(&self, label_set: Option<&BTreeSet<ExternalId>>) -> Value {
        let shares = self.component_share();
        let members: Vec<Value> = self
            .members
            .iter()
            .map(|m| json!({"id": m.id, "value": m.value, "component": m.label.as_str()}))
            .collect();
        let mut out = json!({
            "category": self.category.as_str(),
            "k": self.k,
            "truncated": self.truncated,
            "members": members,
            "component_share": labeled_map(shares.iter().map(|&s| json!(s))),
        });
        if let Some(set) = label_set {
            let fractions = self.label_fractions(set);
            out["label_fraction"] = labeled_map(fractions.iter().map(|&f| json!(f)));
        }
        out
    }
}

/// The k accounts ranking highest on a category's metric, ties broken toward
/// the smaller id. Asks for more accounts than are eligible come back whole
/// and flagged truncated.
pub fn top_k_outliers(d: &Dataset, c: &Classification, category: OutlierCategory, k: u64) -> OutlierReport {
    assert!(k >= 1, "top-k of zero is meaningless");
    let g = &d.graph;
    // Min-heap of (value, Reverse(id)) keeps the k best; orderings agree with
    // the final sort so the result is traversal independent.
    let mut heap = std::collections::BinaryHeap::with_capacity(k.min(g.node_count() as u64) as usize + 1);
    for u in 0..g.node_count() as NodeIndex {
        if category.constrained() && g.in_degree(u) > 1 {
            continue;
        }
        let value = match category {
            OutlierCategory::TopFollowed => g.in_degree(u) as u64,
            OutlierCategory::TopFollowing | OutlierCategory::TopFollowingLe1Follower => g.out_degree(u) as u64,
            OutlierCategory::TopTweeting | OutlierCategory::TopTweetingLe1Follower => d.meta(u).tweets,
        };
        heap.push(std::cmp::Reverse((value, std::cmp::Reverse(g.external_id(u)))));
        if heap.len() as u64 > k {
            heap.pop();
        }
    }
    let mut keys: Vec<(u64, std::cmp::Reverse<ExternalId>)> = heap.into_iter().map(|r| r.0).collect();
    keys.sort_unstable_by(|a, b| b.cmp(a));
    let members = keys
        .into_iter()
        .map(|(value, std::cmp::Reverse(id))| {
            let u = g.index_of(id).expect("id came from the graph");
            OutlierMember { id, value, label: c.label(u) }
        })
        .collect::<Vec<_>>();
    OutlierReport { category, k, truncated: (members.len() as u64) < k, members }
}

/// How to pick the node set a crosstab ranges over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelSelector {
    /// An explicit id set; ids absent from the graph are allowed.
    Ids(BTreeSet<ExternalId>),
    Suspended,
    Verified,
    Expert,
}

impl LabelSelector {
    pub fn resolve(&self, d: &Dataset) -> BTreeSet<ExternalId> {
        let by_meta = |pred: &dyn Fn(NodeIndex) -> bool| {
            (0..d.graph.node_count() as NodeIndex)
                .filter(|&u| d.has_meta(u) && pred(u))
                .map(|u| d.graph.external_id(u))
                .collect()
        };
        match self {
            LabelSelector::Ids(ids) => ids.clone(),
            LabelSelector::Suspended => by_meta(&|u| d.meta(u).status == AccountStatus::Suspended),
            LabelSelector::Verified => by_meta(&|u| d.meta(u).verified),
            LabelSelector::Expert => by_meta(&|u| d.meta(u).expert),
        }
    }
}

/// Two views of an external id set against the classification: where the set
/// lands across components, and how prevalent it is inside each component.
#[derive(Clone, Debug, PartialEq)]
pub struct Crosstab {
    pub set_size: u64,
    pub distribution: [u64; LABEL_COUNT],
    /// Ids in the set that are not graph nodes.
    pub absent: u64,
    pub component_sizes: [u64; LABEL_COUNT],
}

impl Crosstab {
    pub fn distribution_percent(&self, label: ComponentLabel) -> f64 {
        100.0 * fraction(self.distribution[label.index()], self.set_size)
    }

    pub fn prevalence(&self, label: ComponentLabel) -> f64 {
        fraction(self.distribution[label.index()], self.component_sizes[label.index()])
    }

    pub fn to_json(&self) -> Value {
        let dist = ComponentLabel::ALL.iter().map(|&l| {
            json!({"count": self.distribution[l.index()], "percent": self.distribution_percent(l)})
        });
        let prev = ComponentLabel::ALL.iter().map(|&l| json!(self.prevalence(l)));
        json!({
            "set_size": self.set_size,
            "absent": self.absent,
            "absent_percent": 100.0 * fraction(self.absent, self.set_size),
            "distribution": labeled_map(dist),
            "prevalence": labeled_map(prev),
        })
    }
}

pub fn label_crosstab(d: &Dataset, c: &Classification, set: &BTreeSet<ExternalId>) -> Crosstab {
    let mut distribution = [0u64; LABEL_COUNT];
    let mut absent = 0u64;
    for &id in set {
        match d.graph.index_of(id) {
            Some(u) => distribution[c.label(u).index()] += 1,
            None => absent += 1,
        }
    }
    Crosstab { set_size: set.len() as u64, distribution, absent, component_sizes: c.sizes() }
}
