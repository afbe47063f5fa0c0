//! Binary classification trees grown by exhaustive threshold search.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::sample_indices;

/// Node impurity measure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    Gini,
    Entropy,
}

impl Criterion {
    pub fn impurity(self, counts: [f64; 2]) -> f64 {
        let n = counts[0] + counts[1];
        if n == 0.0 {
            return 0.0;
        }
        let (q0, q1) = (counts[0] / n, counts[1] / n);
        match self {
            Criterion::Gini => 1.0 - q0 * q0 - q1 * q1,
            Criterion::Entropy => {
                let h = |q: f64| if q > 0.0 { -q * libm::log2(q) } else { 0.0 };
                h(q0) + h(q1)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Training class counts that reached this leaf.
    Leaf { counts: [u32; 2] },
}

/// A fitted tree stored as a node arena; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    /// Majority class of the leaf `row` falls into; ties go to class 0.
    pub fn predict(&self, row: &[f64]) -> u8 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if row[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { counts } => return u8::from(counts[1] > counts[0]),
            }
        }
    }

    /// Depth of the deepest leaf (a lone root leaf has depth 0).
    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, k: usize) -> usize {
            match &t.nodes[k] {
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(self, 0)
    }

    /// Smallest number of training samples in any leaf.
    pub fn min_leaf_size(&self) -> u32 {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { counts } => Some(counts[0] + counts[1]),
                _ => None,
            })
            .min()
            .unwrap_or(0)
    }
}

/// Growth limits for one tree.
#[derive(Clone, Copy, Debug)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features examined at each node.
    pub mtry: usize,
    pub criterion: Criterion,
}

struct Builder<'a, R> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    params: TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
    /// Total weighted impurity decrease per feature.
    importance: Vec<f64>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
    n_left: usize,
}

fn counts_of(y: &[u8], rows: &[usize]) -> [u32; 2] {
    let ones = rows.iter().filter(|&&r| y[r] == 1).count() as u32;
    [rows.len() as u32 - ones, ones]
}

impl<R: Rng> Builder<'_, R> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let counts = counts_of(self.y, rows);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });
        let pure = counts[0] == 0 || counts[1] == 0;
        if pure || depth >= self.params.max_depth || rows.len() < self.params.min_samples_split {
            return id;
        }
        let Some(best) = self.best_split(rows) else {
            return id;
        };
        let n = rows.len() as f64;
        let parent = n * self.params.criterion.impurity([counts[0] as f64, counts[1] as f64]);
        self.importance[best.feature] += (parent - best.score).max(0.0);

        let f = best.feature;
        let x = self.x;
        rows.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let (l, r) = rows.split_at_mut(best.n_left);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: f,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Lowest weighted child impurity over sampled features; ties resolved to
    /// the lowest feature index, then the lowest threshold.
    fn best_split(&mut self, rows: &[usize]) -> Option<BestSplit> {
        let p = self.x[0].len();
        let mut features = sample_indices(self.rng, p, self.params.mtry.min(p));
        features.sort_unstable();
        let min_leaf = self.params.min_samples_leaf;
        let total = counts_of(self.y, rows);
        let mut best: Option<BestSplit> = None;
        let mut order: Vec<usize> = rows.to_vec();
        for &f in &features {
            let x = self.x;
            order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
            let mut left = [0.0f64; 2];
            for k in 0..order.len() - 1 {
                left[self.y[order[k]] as usize] += 1.0;
                let (v, next) = (x[order[k]][f], x[order[k + 1]][f]);
                if v == next {
                    continue;
                }
                let n_left = k + 1;
                let n_right = order.len() - n_left;
                if n_left < min_leaf || n_right < min_leaf {
                    continue;
                }
                let right = [total[0] as f64 - left[0], total[1] as f64 - left[1]];
                let c = self.params.criterion;
                let score = n_left as f64 * c.impurity(left) + n_right as f64 * c.impurity(right);
                if best.as_ref().is_none_or(|b| score < b.score) {
                    let mut threshold = v + (next - v) / 2.0;
                    // midpoint may round up to `next` for adjacent floats
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        score,
                        n_left,
                    });
                }
            }
        }
        best
    }
}

/// Grows one tree on `rows` (indices into `x`, repeats allowed).
///
/// Returns the tree and the per-feature total impurity decrease, weighted by
/// node sample counts.
pub fn grow_tree<R: Rng>(
    x: &[Vec<f64>],
    y: &[u8],
    mut rows: Vec<usize>,
    params: TreeParams,
    rng: &mut R,
) -> (DecisionTree, Vec<f64>) {
    let p = x.first().map_or(0, Vec::len);
    let mut b = Builder {
        x,
        y,
        params,
        rng,
        nodes: Vec::new(),
        importance: vec![0.0; p],
    };
    b.grow(&mut rows, 0);
    (DecisionTree { nodes: b.nodes }, b.importance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn params(max_depth: usize) -> TreeParams {
        TreeParams {
            max_depth,
            min_samples_split: 2,
            min_samples_leaf: 1,
            mtry: 2,
            criterion: Criterion::Gini,
        }
    }

    #[test]
    fn gini_and_entropy() {
        assert_eq!(Criterion::Gini.impurity([5.0, 5.0]), 0.5);
        assert_eq!(Criterion::Gini.impurity([4.0, 0.0]), 0.0);
        assert_eq!(Criterion::Entropy.impurity([3.0, 3.0]), 1.0);
    }

    #[test]
    fn separable_threshold_is_midpoint() {
        let x: Vec<Vec<f64>> = [-2.0, -1.0, 1.0, 3.0].iter().map(|&v| vec![v]).collect();
        let y = [0, 0, 1, 1];
        let (t, imp) = grow_tree(&x, &y, (0..4).collect(), params(5), &mut stream(0, 0));
        assert_eq!(
            t.nodes[0],
            Node::Split { feature: 0, threshold: 0.0, left: 1, right: 2 }
        );
        assert_eq!(imp, [2.0]);
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn xor_needs_depth_two() {
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = [0, 1, 1, 0];
        let (stump, _) = grow_tree(&x, &y, (0..4).collect(), params(1), &mut stream(0, 0));
        let acc = |t: &DecisionTree| {
            x.iter().zip(&y).filter(|(r, &l)| t.predict(r) == l).count() as f64 / 4.0
        };
        assert!(acc(&stump) <= 0.75);
        let (deep, _) = grow_tree(&x, &y, (0..4).collect(), params(2), &mut stream(0, 0));
        assert_eq!(acc(&deep), 1.0);
    }

    #[test]
    fn leaf_ties_go_to_class_zero() {
        let t = DecisionTree { nodes: vec![Node::Leaf { counts: [2, 2] }] };
        assert_eq!(t.predict(&[0.0]), 0);
    }

    #[test]
    fn respects_min_samples_leaf() {
        let x: Vec<Vec<f64>> = (0..10).map(|v| vec![v as f64]).collect();
        let y = [0, 1, 0, 0, 0, 0, 0, 0, 0, 1];
        let p = TreeParams { min_samples_leaf: 3, ..params(10) };
        let (t, _) = grow_tree(&x, &y, (0..10).collect(), p, &mut stream(0, 0));
        assert!(t.min_leaf_size() >= 3);
    }
}
