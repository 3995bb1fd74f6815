//! Least-squares regression trees used as boosting weak learners.
//!
//! Trees are grown best-first: the frontier leaf whose best split has the
//! largest improvement is split next, until `max_leaves` leaves exist or no
//! leaf admits a legal split. Each split learns which side missing values
//! go to. Ties are resolved by lowest feature index, then lowest
//! threshold, then "missing goes left", then the earliest-created leaf.

use alloc::boxed::Box;
use alloc::vec::Vec;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::dataset::FeatureMatrix;
use crate::numeric::shifted_mean;

/// Improvements at or below this fraction of the targets' raw sum of
/// squares are rounding noise (e.g. on a constant target) and never split.
pub const MIN_RELATIVE_IMPROVEMENT: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("empty row set")]
    EmptyRowSet,
    #[error("{rows} rows cannot fill a leaf of at least {min_obs_leaf}")]
    TooFewRows { rows: usize, min_obs_leaf: usize },
    #[error("invalid tree config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_leaves: usize,
    pub min_obs_leaf: usize,
}

impl TreeConfig {
    pub fn validate(&self) -> Result<(), TreeError> {
        if self.max_leaves == 0 {
            return Err(TreeError::InvalidConfig("max_leaves must be at least 1"));
        }
        if self.min_obs_leaf == 0 {
            return Err(TreeError::InvalidConfig("min_obs_leaf must be at least 1"));
        }
        Ok(())
    }
}

/// An executed split. `improvement` is the drop in sum of squared errors
/// it produced on the rows it was grown from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub feature: usize,
    pub threshold: f64,
    pub improvement: f64,
    pub missing_goes_left: bool,
}

impl SplitRecord {
    #[inline]
    fn goes_left(&self, value: Option<f64>) -> bool {
        match value {
            Some(v) => v <= self.threshold,
            None => self.missing_goes_left,
        }
    }
}

/// Best split of one feature, as returned by [`best_split`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub threshold: f64,
    pub improvement: f64,
    pub missing_goes_left: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf { value: f64, count: usize },
    Split { split: SplitRecord, left: usize, right: usize },
}

/// A binary regression tree stored as a flat arena, root at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

/// Finds the least-squares split of `feature` over `rows`.
///
/// `targets` is indexed by row id. Candidate thresholds are midpoints of
/// consecutive distinct non-missing values; rows with a missing value are
/// tried on both sides. Returns `None` when no split leaves at least
/// `min_obs_leaf` rows on each side with a positive improvement.
pub fn best_split(
    features: &FeatureMatrix,
    feature: usize,
    rows: &[usize],
    targets: &[f64],
    min_obs_leaf: usize,
) -> Option<SplitCandidate> {
    let n = rows.len();
    let min_obs_leaf = min_obs_leaf.max(1);
    if n < 2 * min_obs_leaf {
        return None;
    }
    let mean = rows.iter().map(|&r| targets[r]).sum::<f64>() / n as f64;
    let scale: f64 = rows.iter().map(|&r| targets[r] * targets[r]).sum();
    let floor = MIN_RELATIVE_IMPROVEMENT * scale;

    let mut present: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut missing_count = 0usize;
    let mut missing_sum = 0.0;
    for &r in rows {
        let dev = targets[r] - mean;
        match features.get(r, feature) {
            Some(v) => present.push((v, dev)),
            None => {
                missing_count += 1;
                missing_sum += dev;
            }
        }
    }
    if present.len() < 2 {
        return None;
    }
    present.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total_sum: f64 = present.iter().map(|p| p.1).sum::<f64>() + missing_sum;

    let mut best: Option<SplitCandidate> = None;
    let mut left_sum = 0.0;
    for i in 0..present.len() - 1 {
        left_sum += present[i].1;
        let (lo, hi) = (present[i].0, present[i + 1].0);
        if lo >= hi {
            continue;
        }
        let mut threshold = (lo + hi) / 2.0;
        if threshold >= hi {
            threshold = lo;
        }
        for missing_goes_left in [true, false] {
            let (n_left, s_left) = if missing_goes_left {
                (i + 1 + missing_count, left_sum + missing_sum)
            } else {
                (i + 1, left_sum)
            };
            let n_right = n - n_left;
            if n_left < min_obs_leaf || n_right < min_obs_leaf {
                continue;
            }
            let s_right = total_sum - s_left;
            let improvement = split_gain(s_left, n_left, s_right, n_right);
            if improvement > floor && best.map_or(true, |b| improvement > b.improvement) {
                best = Some(SplitCandidate {
                    threshold,
                    improvement,
                    missing_goes_left,
                });
            }
        }
    }
    best
}

/// SSE(parent) - SSE(left) - SSE(right) from child sums and counts.
///
/// Written as a square so it is nonnegative in floating point too.
#[inline]
fn split_gain(s_left: f64, n_left: usize, s_right: f64, n_right: usize) -> f64 {
    let (nl, nr) = (n_left as f64, n_right as f64);
    let d = s_left * nr - s_right * nl;
    d * d / ((nl + nr) * nl * nr)
}

struct Frontier {
    node: usize,
    rows: Vec<usize>,
    best: Option<SplitRecord>,
}

fn best_split_any(
    features: &FeatureMatrix,
    rows: &[usize],
    targets: &[f64],
    min_obs_leaf: usize,
) -> Option<SplitRecord> {
    let mut best: Option<SplitRecord> = None;
    for f in 0..features.n_features() {
        if let Some(c) = best_split(features, f, rows, targets, min_obs_leaf) {
            if best.map_or(true, |b| c.improvement > b.improvement) {
                best = Some(SplitRecord {
                    feature: f,
                    threshold: c.threshold,
                    improvement: c.improvement,
                    missing_goes_left: c.missing_goes_left,
                });
            }
        }
    }
    best
}

fn mean_of(rows: &[usize], targets: &[f64]) -> f64 {
    shifted_mean(rows.iter().map(|&r| targets[r]))
}

/// Grows a tree on `rows` against `targets` (indexed by row id).
pub fn grow_tree(
    features: &FeatureMatrix,
    targets: &[f64],
    rows: &[usize],
    config: TreeConfig,
) -> Result<RegressionTree, TreeError> {
    config.validate()?;
    if rows.is_empty() {
        return Err(TreeError::EmptyRowSet);
    }
    if rows.len() < config.min_obs_leaf {
        return Err(TreeError::TooFewRows {
            rows: rows.len(),
            min_obs_leaf: config.min_obs_leaf,
        });
    }

    let mut nodes = Vec::with_capacity(2 * config.max_leaves - 1);
    nodes.push(Node::Leaf {
        value: 0.0,
        count: rows.len(),
    });
    let search = |rows: &[usize]| {
        if config.max_leaves > 1 {
            best_split_any(features, rows, targets, config.min_obs_leaf)
        } else {
            None
        }
    };
    let mut frontier = alloc::vec![Frontier {
        node: 0,
        best: search(rows),
        rows: rows.to_vec(),
    }];
    let mut n_leaves = 1;

    while n_leaves < config.max_leaves {
        let mut pick: Option<(usize, f64)> = None;
        for (i, f) in frontier.iter().enumerate() {
            if let Some(b) = f.best {
                if pick.map_or(true, |(_, imp)| b.improvement > imp) {
                    pick = Some((i, b.improvement));
                }
            }
        }
        let Some((i, _)) = pick else { break };
        let leaf = frontier.remove(i);
        let split = leaf.best.expect("picked leaf has a split");
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = leaf
            .rows
            .iter()
            .partition(|&&r| split.goes_left(features.get(r, split.feature)));

        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::Leaf {
            value: 0.0,
            count: left_rows.len(),
        });
        nodes.push(Node::Leaf {
            value: 0.0,
            count: right_rows.len(),
        });
        nodes[leaf.node] = Node::Split { split, left, right };
        n_leaves += 1;

        // New nodes carry the highest ids, so the frontier stays in
        // creation order and ties go to the earliest leaf.
        frontier.push(Frontier {
            node: left,
            best: search(&left_rows),
            rows: left_rows,
        });
        frontier.push(Frontier {
            node: right,
            best: search(&right_rows),
            rows: right_rows,
        });
    }

    for f in &frontier {
        nodes[f.node] = Node::Leaf {
            value: mean_of(&f.rows, targets),
            count: f.rows.len(),
        };
    }
    Ok(RegressionTree { nodes })
}

impl RegressionTree {
    /// A single leaf predicting `value`.
    pub fn constant(value: f64, count: usize) -> Self {
        RegressionTree {
            nodes: alloc::vec![Node::Leaf { value, count }],
        }
    }

    /// Index of the leaf reached by a row whose feature `f` is `value(f)`.
    pub fn leaf_index<F: Fn(usize) -> Option<f64>>(&self, value: F) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split { split, left, right } => {
                    i = if split.goes_left(value(split.feature)) {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    #[inline]
    pub fn predict_with<F: Fn(usize) -> Option<f64>>(&self, value: F) -> f64 {
        match self.nodes[self.leaf_index(value)] {
            Node::Leaf { value, .. } => value,
            Node::Split { .. } => unreachable!(),
        }
    }

    /// Prediction for one row of predictor values.
    pub fn predict(&self, row: &[Option<f64>]) -> f64 {
        self.predict_with(|f| row[f])
    }

    /// Prediction for row `row` of a feature matrix.
    pub fn predict_row(&self, features: &FeatureMatrix, row: usize) -> f64 {
        self.predict_with(|f| features.get(row, f))
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves().count()
    }

    /// `(node index, value, count)` for every leaf.
    pub fn leaves(&self) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match n {
            Node::Leaf { value, count } => Some((i, *value, *count)),
            Node::Split { .. } => None,
        })
    }

    pub fn splits(&self) -> impl Iterator<Item = &SplitRecord> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { split, .. } => Some(split),
            Node::Leaf { .. } => None,
        })
    }

    pub fn leaf_value(&self, index: usize) -> Option<f64> {
        match self.nodes.get(index)? {
            Node::Leaf { value, .. } => Some(*value),
            Node::Split { .. } => None,
        }
    }

    /// Multiplies every leaf value by `factor` (shrinkage).
    pub fn scale_leaves(&mut self, factor: f64) {
        for n in &mut self.nodes {
            if let Node::Leaf { value, .. } = n {
                *value *= factor;
            }
        }
    }

    /// Same shape and split decisions, ignoring leaf values.
    pub fn same_structure(&self, other: &RegressionTree) -> bool {
        fn eq(a: &RegressionTree, i: usize, b: &RegressionTree, j: usize) -> bool {
            match (&a.nodes[i], &b.nodes[j]) {
                (Node::Leaf { count: c1, .. }, Node::Leaf { count: c2, .. }) => c1 == c2,
                (
                    Node::Split {
                        split: s1,
                        left: l1,
                        right: r1,
                    },
                    Node::Split {
                        split: s2,
                        left: l2,
                        right: r2,
                    },
                ) => {
                    s1.feature == s2.feature
                        && s1.threshold == s2.threshold
                        && s1.missing_goes_left == s2.missing_goes_left
                        && eq(a, *l1, b, *l2)
                        && eq(a, *r1, b, *r2)
                }
                _ => false,
            }
        }
        eq(self, 0, other, 0)
    }

    fn to_repr(&self, i: usize) -> NodeRepr {
        match &self.nodes[i] {
            Node::Leaf { value, count } => NodeRepr::Leaf {
                value: *value,
                count: *count,
            },
            Node::Split { split, left, right } => NodeRepr::Split {
                feature: split.feature,
                threshold: split.threshold,
                missing_goes_left: split.missing_goes_left,
                improvement: split.improvement,
                left: Box::new(self.to_repr(*left)),
                right: Box::new(self.to_repr(*right)),
            },
        }
    }

    fn from_repr(repr: NodeRepr) -> Self {
        fn push(nodes: &mut Vec<Node>, repr: NodeRepr) -> usize {
            let at = nodes.len();
            match repr {
                NodeRepr::Leaf { value, count } => nodes.push(Node::Leaf { value, count }),
                NodeRepr::Split {
                    feature,
                    threshold,
                    missing_goes_left,
                    improvement,
                    left,
                    right,
                } => {
                    nodes.push(Node::Leaf {
                        value: 0.0,
                        count: 0,
                    });
                    let l = push(nodes, *left);
                    let r = push(nodes, *right);
                    nodes[at] = Node::Split {
                        split: SplitRecord {
                            feature,
                            threshold,
                            improvement,
                            missing_goes_left,
                        },
                        left: l,
                        right: r,
                    };
                }
            }
            at
        }
        let mut nodes = Vec::new();
        push(&mut nodes, repr);
        RegressionTree { nodes }
    }
}

/// Nested wire form of a tree node.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeRepr {
    Split {
        feature: usize,
        threshold: f64,
        missing_goes_left: bool,
        improvement: f64,
        left: Box<NodeRepr>,
        right: Box<NodeRepr>,
    },
    Leaf {
        value: f64,
        count: usize,
    },
}

impl Serialize for RegressionTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_repr(0).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RegressionTree {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        NodeRepr::deserialize(deserializer).map(RegressionTree::from_repr)
    }
}
