//! CART split search and tree growth.
//!
//! Shared by the decision tree, random forest, AdaBoost stumps and the
//! boosted regression trees. Column values are presorted once per fit; each
//! node keeps per-column sorted sample lists that are stably partitioned on
//! every split, so a level of the tree costs O(samples × columns).

use rand::seq::index::sample as sample_indices;
use serde::{Deserialize, Serialize};

use crate::dataset::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Impurity {
    /// Weighted variance; labels are arbitrary reals.
    Variance,
    /// Binary Gini index; labels are 0/1.
    Gini,
}

impl Impurity {
    fn scale(self) -> f64 {
        match self {
            Impurity::Variance => 1.0,
            Impurity::Gini => 2.0,
        }
    }

    /// Impurity of a node with total weight `w`, weighted label sum `s1` and
    /// weighted squared-label sum `s2`.
    fn of(self, w: f64, s1: f64, s2: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        let mean = s1 / w;
        let value = match self {
            Impurity::Variance => s2 / w - mean * mean,
            Impurity::Gini => 2.0 * mean * (1.0 - mean),
        };
        value.max(0.0)
    }
}

/// Chosen split: rows with `x[column] <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub column: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Relative margin a candidate must beat the incumbent by to replace it.
/// Keeps lowest-column / lowest-threshold winners on floating-point ties.
const TIE_EPS: f64 = 1e-9;
const PURE_EPS: f64 = 1e-14;

/// Training inputs for split search: features, targets and optional weights.
#[derive(Debug, Clone, Copy)]
pub struct SplitProblem<'a> {
    pub x: &'a Matrix,
    pub y: &'a [f64],
    pub weights: Option<&'a [f64]>,
}

impl<'a> SplitProblem<'a> {
    pub fn new(x: &'a Matrix, y: &'a [f64]) -> Self {
        SplitProblem { x, y, weights: None }
    }

    pub fn weighted(x: &'a Matrix, y: &'a [f64], weights: &'a [f64]) -> Self {
        SplitProblem {
            x,
            y,
            weights: Some(weights),
        }
    }

    #[inline]
    fn weight(&self, row: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[row])
    }

    fn totals(&self, rows: &[usize]) -> (f64, f64, f64) {
        rows.iter().fold((0.0, 0.0, 0.0), |(w, s1, s2), &r| {
            let wr = self.weight(r);
            let y = self.y[r];
            (w + wr, s1 + wr * y, s2 + wr * y * y)
        })
    }

    /// Best impurity-reducing split of `rows` over `columns`; `None` when no
    /// threshold separates the rows or none reduces impurity.
    ///
    /// Thresholds are midpoints between consecutive distinct values. Ties go
    /// to the lowest column index, then the lowest threshold.
    pub fn best_split(
        &self,
        rows: &[usize],
        columns: &[usize],
        impurity: Impurity,
        min_samples_leaf: usize,
    ) -> Option<Split> {
        if rows.len() < 2 {
            return None;
        }
        let sorted: Vec<Vec<usize>> = (0..self.x.n_cols())
            .map(|c| {
                if columns.contains(&c) {
                    sort_by_column(self.x, rows.to_vec(), c)
                } else {
                    Vec::new()
                }
            })
            .collect();
        let totals = self.totals(rows);
        let split = self.scan(&sorted, columns, totals, impurity, min_samples_leaf.max(1))?;
        let parent = impurity.of(totals.0, totals.1, totals.2);
        (split.gain > TIE_EPS * parent).then_some(split)
    }

    /// Best split including zero-gain ones. `None` only when the node is
    /// pure or no admissible threshold exists.
    fn scan(
        &self,
        sorted: &[Vec<usize>],
        columns: &[usize],
        (w_total, s1_total, s2_total): (f64, f64, f64),
        impurity: Impurity,
        min_samples_leaf: usize,
    ) -> Option<Split> {
        let parent = impurity.of(w_total, s1_total, s2_total);
        if parent <= PURE_EPS || w_total <= 0.0 {
            return None;
        }
        let base = s1_total * s1_total / w_total;
        let mut best: Option<Split> = None;
        for &c in columns {
            let list = &sorted[c];
            let n = list.len();
            let mut w_left = 0.0;
            let mut s1_left = 0.0;
            for i in 0..n.saturating_sub(1) {
                let r = list[i];
                let wr = self.weight(r);
                w_left += wr;
                s1_left += wr * self.y[r];
                let here = self.x.get(r, c);
                let next = self.x.get(list[i + 1], c);
                if here == next || i + 1 < min_samples_leaf || n - i - 1 < min_samples_leaf {
                    continue;
                }
                let w_right = w_total - w_left;
                if w_left <= 0.0 || w_right <= 0.0 {
                    continue;
                }
                let s1_right = s1_total - s1_left;
                let gain = impurity.scale()
                    * (s1_left * s1_left / w_left + s1_right * s1_right / w_right - base)
                    / w_total;
                let improves = match best {
                    None => true,
                    Some(b) => gain > b.gain + TIE_EPS * parent,
                };
                if improves {
                    let mut threshold = 0.5 * (here + next);
                    if threshold >= next {
                        threshold = here;
                    }
                    best = Some(Split {
                        column: c,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best.filter(|s| s.gain >= -TIE_EPS * parent)
    }
}

fn sort_by_column(x: &Matrix, mut rows: Vec<usize>, column: usize) -> Vec<usize> {
    rows.sort_by(|&a, &b| x.get(a, column).total_cmp(&x.get(b, column)).then(a.cmp(&b)));
    rows
}

/// Per-column sorted sample lists for a training set. Reused across boosting
/// rounds because the feature order never changes.
#[derive(Debug, Clone)]
pub struct Presorted {
    lists: Vec<Vec<usize>>,
}

impl Presorted {
    pub fn new(x: &Matrix, rows: &[usize]) -> Self {
        Presorted {
            lists: (0..x.n_cols())
                .map(|c| sort_by_column(x, rows.to_vec(), c))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Columns drawn (without replacement) per node; `None` uses all.
    pub max_features: Option<usize>,
    pub impurity: Impurity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        column: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary tree stored as a flat node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Grow a tree on `rows` (duplicates allowed, e.g. bootstrap draws).
    /// Leaves hold the weighted label mean, which for 0/1 labels is the
    /// class-1 probability.
    pub fn fit(
        problem: &SplitProblem<'_>,
        rows: &[usize],
        params: &TreeParams,
        rng: Option<&mut Rng>,
    ) -> Tree {
        let presorted = Presorted::new(problem.x, rows);
        Tree::fit_presorted(problem, &presorted, params, rng)
    }

    pub fn fit_presorted(
        problem: &SplitProblem<'_>,
        presorted: &Presorted,
        params: &TreeParams,
        rng: Option<&mut Rng>,
    ) -> Tree {
        let mut builder = Builder {
            problem,
            params,
            rng,
            nodes: Vec::new(),
            goes_left: vec![false; problem.x.n_rows()],
        };
        builder.grow(presorted.lists.clone(), 0);
        Tree {
            nodes: builder.nodes,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    column,
                    threshold,
                    left,
                    right,
                } => idx = if row[*column] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| self.predict_row(r)).collect()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

struct Builder<'a, 'p, 'r> {
    problem: &'a SplitProblem<'p>,
    params: &'a TreeParams,
    rng: Option<&'r mut Rng>,
    nodes: Vec<Node>,
    goes_left: Vec<bool>,
}

impl Builder<'_, '_, '_> {
    fn candidate_columns(&mut self) -> Vec<usize> {
        let n_cols = self.problem.x.n_cols();
        match (self.params.max_features, self.rng.as_deref_mut()) {
            (Some(k), Some(rng)) if k < n_cols => {
                let mut cols = sample_indices(rng, n_cols, k.max(1)).into_vec();
                cols.sort_unstable();
                cols
            }
            _ => (0..n_cols).collect(),
        }
    }

    fn grow(&mut self, lists: Vec<Vec<usize>>, depth: usize) -> usize {
        let rows: &[usize] = lists.first().map_or(&[], |l| l.as_slice());
        let totals = self.problem.totals(rows);
        let leaf_value = if totals.0 > 0.0 { totals.1 / totals.0 } else { 0.0 };
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: leaf_value });

        let n = rows.len();
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        let min_leaf = self.params.min_samples_leaf.max(1);
        if !depth_ok || n < 2 * min_leaf {
            return id;
        }
        let columns = self.candidate_columns();
        let Some(split) = self
            .problem
            .scan(&lists, &columns, totals, self.params.impurity, min_leaf)
        else {
            return id;
        };

        for &r in rows {
            self.goes_left[r] = self.problem.x.get(r, split.column) <= split.threshold;
        }
        let mut left_lists = Vec::with_capacity(lists.len());
        let mut right_lists = Vec::with_capacity(lists.len());
        for list in lists {
            let (l, r): (Vec<usize>, Vec<usize>) =
                list.into_iter().partition(|&s| self.goes_left[s]);
            left_lists.push(l);
            right_lists.push(r);
        }
        let left = self.grow(left_lists, depth + 1);
        let right = self.grow(right_lists, depth + 1);
        self.nodes[id] = Node::Split {
            column: split.column,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}
