//! Partitioning lyricists into five entropy groups.
//!
//! Group 0 always holds exactly the zero-entropy lyricists. The nonzero
//! lyricists are split into groups 1..=4 either by an equal-count quantile
//! split, or by 1-D k-means (k = 4) seeded from the quantile groups.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entropy::LyricistStats;
use crate::error::{Error, Result};

pub const N_GROUPS: usize = 5;
pub const N_CLUSTERS: usize = 4;
pub const DEFAULT_MAX_ITERS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupingMethod {
    Quantile,
    Kmeans,
}

impl GroupingMethod {
    /// Short table label, `A` for quantile and `B` for k-means.
    pub fn letter(self) -> char {
        match self {
            GroupingMethod::Quantile => 'A',
            GroupingMethod::Kmeans => 'B',
        }
    }
}

impl fmt::Display for GroupingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupingMethod::Quantile => "quantile",
            GroupingMethod::Kmeans => "kmeans",
        })
    }
}

impl FromStr for GroupingMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "quantile" | "a" => Ok(GroupingMethod::Quantile),
            "kmeans" | "k-means" | "b" => Ok(GroupingMethod::Kmeans),
            other => Err(format!("unknown grouping method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub group: usize,
    pub n_lyricists: usize,
    pub avg_songs: f64,
    pub total_songs: usize,
    pub avg_entropy: f64,
    pub min_entropy: f64,
    pub max_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grouping {
    pub method: GroupingMethod,
    /// Five lists of lyricist ids, each ascending by (entropy, id).
    pub groups: Vec<Vec<String>>,
    pub stats: Vec<GroupStats>,
}

impl Grouping {
    fn build(method: GroupingMethod, groups: Vec<Vec<String>>, lyricists: &[LyricistStats]) -> Self {
        debug_assert_eq!(groups.len(), N_GROUPS);
        let by_id: HashMap<&str, &LyricistStats> =
            lyricists.iter().map(|s| (s.lyricist_id.as_str(), s)).collect();

        let stats = groups
            .iter()
            .enumerate()
            .map(|(k, members)| {
                let members: Vec<&LyricistStats> = members.iter().map(|id| by_id[id.as_str()]).collect();
                let n = members.len();
                let total_songs: usize = members.iter().map(|s| s.song_count).sum();
                let entropies = members.iter().map(|s| s.entropy);
                let (avg_songs, avg_entropy) = if n == 0 {
                    (0.0, 0.0)
                } else {
                    (
                        total_songs as f64 / n as f64,
                        entropies.clone().sum::<f64>() / n as f64,
                    )
                };
                GroupStats {
                    group: k,
                    n_lyricists: n,
                    avg_songs,
                    total_songs,
                    avg_entropy,
                    min_entropy: if n == 0 { 0.0 } else { entropies.clone().fold(f64::INFINITY, f64::min) },
                    max_entropy: if n == 0 { 0.0 } else { entropies.fold(f64::NEG_INFINITY, f64::max) },
                }
            })
            .collect();

        Grouping {
            method,
            groups,
            stats,
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    /// lyricist id -> group index.
    pub fn assignment(&self) -> BTreeMap<String, usize> {
        self.groups
            .iter()
            .enumerate()
            .flat_map(|(k, ids)| ids.iter().map(move |id| (id.clone(), k)))
            .collect()
    }

    pub fn group_of(&self, lyricist_id: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.iter().any(|id| id == lyricist_id))
    }

    pub fn avg_entropies(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.avg_entropy).collect()
    }
}

fn by_entropy_then_id(a: &&LyricistStats, b: &&LyricistStats) -> Ordering {
    a.entropy
        .total_cmp(&b.entropy)
        .then_with(|| a.lyricist_id.cmp(&b.lyricist_id))
}

/// Zero-entropy ids and the nonzero lyricists sorted by (entropy, id).
fn split_zero(stats: &[LyricistStats]) -> (Vec<String>, Vec<&LyricistStats>) {
    let mut zero: Vec<&LyricistStats> = stats.iter().filter(|s| s.entropy == 0.0).collect();
    zero.sort_by(by_entropy_then_id);
    let mut nonzero: Vec<&LyricistStats> = stats.iter().filter(|s| s.entropy != 0.0).collect();
    nonzero.sort_by(by_entropy_then_id);
    (zero.into_iter().map(|s| s.lyricist_id.clone()).collect(), nonzero)
}

/// Equal-count split: with `n` nonzero lyricists in ascending order, group
/// `k` takes 1-based ranks `floor(n(k-1)/4)+1 ..= floor(nk/4)`.
pub fn group_quantile(stats: &[LyricistStats]) -> Result<Grouping> {
    let (zero, nonzero) = split_zero(stats);
    let n = nonzero.len();
    if n < N_CLUSTERS {
        return Err(Error::TooFewLyricists {
            needed: N_CLUSTERS,
            found: n,
        });
    }

    let mut groups = vec![zero];
    for k in 1..=N_CLUSTERS {
        let lo = n * (k - 1) / N_CLUSTERS;
        let hi = n * k / N_CLUSTERS;
        groups.push(nonzero[lo..hi].iter().map(|s| s.lyricist_id.clone()).collect());
    }
    Ok(Grouping::build(GroupingMethod::Quantile, groups, stats))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans1d {
    /// Cluster index of each input point.
    pub assignment: Vec<usize>,
    pub centroids: Vec<f64>,
    pub iterations: usize,
    /// Within-cluster sum of squares: the initial partition first, then one
    /// entry per iteration.
    pub objective_trace: Vec<f64>,
}

fn cluster_means(points: &[f64], assignment: &[usize], k: usize) -> Vec<Option<f64>> {
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&x, &c) in points.iter().zip(assignment) {
        sums[c] += x;
        counts[c] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(&s, &n)| (n > 0).then(|| s / n as f64))
        .collect()
}

/// Within-cluster sum of squared deviations from each cluster's mean.
pub fn within_cluster_ss(points: &[f64], assignment: &[usize], k: usize) -> f64 {
    let means = cluster_means(points, assignment, k);
    points
        .iter()
        .zip(assignment)
        .map(|(&x, &c)| (x - means[c].expect("a cluster holding x has a mean")).powi(2))
        .sum()
}

/// Means of the current partition. An empty cluster takes over the point
/// farthest from its own centroid (from a cluster with more than one point).
fn update_centroids(points: &[f64], assignment: &mut [usize], k: usize) -> Vec<f64> {
    loop {
        let means = cluster_means(points, assignment, k);
        let Some(empty) = means.iter().position(Option::is_none) else {
            return means.into_iter().map(Option::unwrap).collect();
        };

        let mut sizes = vec![0usize; k];
        for &c in assignment.iter() {
            sizes[c] += 1;
        }
        let farthest = points
            .iter()
            .zip(assignment.iter())
            .enumerate()
            .filter(|(_, (_, &c))| sizes[c] > 1)
            .map(|(i, (&x, &c))| (i, (x - means[c].unwrap()).abs()))
            // Strictly greater keeps the earliest point on ties.
            .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        match farthest {
            Some((i, _)) => assignment[i] = empty,
            // Fewer points than clusters; the caller guards against this.
            None => unreachable!("cannot fill {k} clusters"),
        }
    }
}

fn nearest(x: f64, centroids: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = (x - centroids[0]).abs();
    for (c, &m) in centroids.iter().enumerate().skip(1) {
        let d = (x - m).abs();
        // Strict: equidistant points stay with the lower index.
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Lloyd's algorithm in one dimension, started from a given partition.
///
/// Each iteration recomputes centroids from the current partition, then
/// reassigns every point to its nearest centroid. Stops when the assignment
/// no longer changes.
pub fn kmeans_1d(points: &[f64], init: &[usize], k: usize, max_iters: usize) -> Result<KMeans1d> {
    if points.len() < k {
        return Err(Error::TooFewLyricists {
            needed: k,
            found: points.len(),
        });
    }
    assert_eq!(points.len(), init.len(), "one initial label per point");

    let mut assignment = init.to_vec();
    let mut trace = vec![within_cluster_ss(points, &assignment, k)];

    for iteration in 1..=max_iters {
        let centroids = update_centroids(points, &mut assignment, k);
        let mut next: Vec<usize> = points.iter().map(|&x| nearest(x, &centroids)).collect();
        let done = |assignment, trace: Vec<f64>| KMeans1d {
            assignment,
            centroids: centroids.clone(),
            iterations: iteration,
            objective_trace: trace,
        };
        if next == assignment {
            trace.push(*trace.last().expect("trace starts non-empty"));
            return Ok(done(assignment, trace));
        }

        update_centroids(points, &mut next, k);
        let objective = within_cluster_ss(points, &next, k);
        // A strict improvement always accompanies a real reassignment; no
        // improvement means reseeding is cycling through equal-cost
        // partitions of duplicate values.
        if objective >= *trace.last().expect("trace starts non-empty") {
            trace.push(*trace.last().unwrap());
            return Ok(done(assignment, trace));
        }
        trace.push(objective);
        assignment = next;
    }

    Err(Error::NonConvergence {
        iterations: max_iters,
        last_assignment: assignment.iter().map(|c| c + 1).collect(),
    })
}

/// k-means regrouping of the nonzero lyricists, seeded from `init`.
/// Clusters are relabelled 1..=4 by ascending centroid; group 0 is copied.
pub fn group_kmeans(stats: &[LyricistStats], init: &Grouping, max_iters: usize) -> Result<Grouping> {
    let (zero, nonzero) = split_zero(stats);
    if nonzero.len() < N_CLUSTERS {
        return Err(Error::TooFewLyricists {
            needed: N_CLUSTERS,
            found: nonzero.len(),
        });
    }

    let init_of = init.assignment();
    let mut labels = Vec::with_capacity(nonzero.len());
    for s in &nonzero {
        match init_of.get(&s.lyricist_id) {
            Some(&g) if (1..N_GROUPS).contains(&g) => labels.push(g - 1),
            _ => {
                return Err(Error::InvalidParams(format!(
                    "initial grouping does not place lyricist {:?} in groups 1..4",
                    s.lyricist_id
                )))
            }
        }
    }

    let points: Vec<f64> = nonzero.iter().map(|s| s.entropy).collect();
    let fit = kmeans_1d(&points, &labels, N_CLUSTERS, max_iters)?;

    let mut order: Vec<usize> = (0..N_CLUSTERS).collect();
    order.sort_by(|&a, &b| fit.centroids[a].total_cmp(&fit.centroids[b]).then(a.cmp(&b)));
    let mut rank = [0usize; N_CLUSTERS];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }

    let mut groups = vec![zero];
    groups.extend(std::iter::repeat_with(Vec::new).take(N_CLUSTERS));
    for (s, &c) in nonzero.iter().zip(&fit.assignment) {
        groups[1 + rank[c]].push(s.lyricist_id.clone());
    }
    Ok(Grouping::build(GroupingMethod::Kmeans, groups, stats))
}
