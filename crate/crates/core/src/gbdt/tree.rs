use serde::{Deserialize, Serialize};

/// A regression tree node. Serialized compactly as `{f, t, g, l, r}` for
/// splits and `{w}` for leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        #[serde(rename = "f")]
        feature: usize,
        #[serde(rename = "t")]
        threshold: f64,
        /// Realized split gain, kept for importances.
        #[serde(rename = "g")]
        gain: f64,
        #[serde(rename = "l")]
        left: Box<TreeNode>,
        #[serde(rename = "r")]
        right: Box<TreeNode>,
    },
    Leaf {
        #[serde(rename = "w")]
        weight: f64,
    },
}

impl TreeNode {
    /// Leaf weight reached by `x`; `x[f] < t` routes left.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] < *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature, left, right, ..
            } => [Some(*feature), left.max_feature_index(), right.max_feature_index()]
                .into_iter()
                .flatten()
                .max(),
        }
    }

    pub(crate) fn visit_splits(&self, f: &mut impl FnMut(usize, f64)) {
        if let TreeNode::Split {
            feature,
            gain,
            left,
            right,
            ..
        } = self
        {
            f(*feature, *gain);
            left.visit_splits(f);
            right.visit_splits(f);
        }
    }

    pub(crate) fn all_finite(&self) -> bool {
        match self {
            TreeNode::Leaf { weight } => weight.is_finite(),
            TreeNode::Split {
                threshold,
                gain,
                left,
                right,
                ..
            } => threshold.is_finite() && gain.is_finite() && left.all_finite() && right.all_finite(),
        }
    }

    /// Leaf count.
    pub fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

/// L1 soft-thresholding of a gradient sum.
pub(crate) fn soft_threshold(g: f64, alpha: f64) -> f64 {
    if g > alpha {
        g - alpha
    } else if g < -alpha {
        g + alpha
    } else {
        0.0
    }
}

pub(crate) struct SplitParams {
    pub max_depth: usize,
    pub reg_alpha: f64,
    pub reg_lambda: f64,
    pub min_child_weight: f64,
    pub min_split_gain: f64,
}

impl SplitParams {
    fn score(&self, g: f64, h: f64) -> f64 {
        let t = soft_threshold(g, self.reg_alpha);
        t * t / (h + self.reg_lambda)
    }

    fn leaf_weight(&self, g: f64, h: f64) -> f64 {
        -soft_threshold(g, self.reg_alpha) / (h + self.reg_lambda)
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

/// Exact greedy tree growth on squared loss (unit hessians).
///
/// `rows` index into `x`/`grad`; `features` are the columns this tree may use,
/// ascending.
pub(crate) fn grow(
    x: &[Vec<f64>],
    grad: &[f64],
    rows: &[usize],
    features: &[usize],
    params: &SplitParams,
) -> TreeNode {
    grow_node(x, grad, rows.to_vec(), features, params, 0)
}

fn grow_node(
    x: &[Vec<f64>],
    grad: &[f64],
    rows: Vec<usize>,
    features: &[usize],
    params: &SplitParams,
    depth: usize,
) -> TreeNode {
    let g_sum: f64 = rows.iter().map(|&i| grad[i]).sum();
    let h_sum = rows.len() as f64;
    if depth < params.max_depth {
        if let Some(c) = best_split(x, grad, &rows, features, params, g_sum, h_sum) {
            let left = grow_node(x, grad, c.left, features, params, depth + 1);
            let right = grow_node(x, grad, c.right, features, params, depth + 1);
            return TreeNode::Split {
                feature: c.feature,
                threshold: c.threshold,
                gain: c.gain,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
    }
    TreeNode::Leaf {
        weight: params.leaf_weight(g_sum, h_sum),
    }
}

fn best_split(
    x: &[Vec<f64>],
    grad: &[f64],
    rows: &[usize],
    features: &[usize],
    params: &SplitParams,
    g_sum: f64,
    h_sum: f64,
) -> Option<Candidate> {
    let parent = params.score(g_sum, h_sum);
    let mut best: Option<(usize, f64, f64, usize)> = None; // feature, threshold, gain, split position
    let mut best_order: Vec<usize> = Vec::new();
    let mut order: Vec<usize> = rows.to_vec();
    for &f in features {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let mut g_left = 0.0;
        for pos in 0..order.len().saturating_sub(1) {
            g_left += grad[order[pos]];
            let lo = x[order[pos]][f];
            let hi = x[order[pos + 1]][f];
            if lo == hi {
                continue;
            }
            let h_left = (pos + 1) as f64;
            let h_right = h_sum - h_left;
            if h_left < params.min_child_weight || h_right < params.min_child_weight {
                continue;
            }
            let g_right = g_sum - g_left;
            let gain = 0.5
                * (params.score(g_left, h_left) + params.score(g_right, h_right) - parent)
                - params.min_split_gain;
            if gain > 0.0 && best.is_none_or(|(_, _, b, _)| gain > b) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold <= lo {
                    threshold = hi;
                }
                best = Some((f, threshold, gain, pos + 1));
                best_order.clone_from(&order);
            }
        }
    }
    best.map(|(feature, threshold, gain, cut)| Candidate {
        feature,
        threshold,
        gain,
        left: best_order[..cut].to_vec(),
        right: best_order[cut..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(5.0, 1.0), 4.0);
        assert_eq!(soft_threshold(-5.0, 1.0), -4.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-1.0, 1.0), 0.0);
    }

    #[test]
    fn routing_is_strict_less_than() {
        let tree = TreeNode::Split {
            feature: 0,
            threshold: 2.5,
            gain: 1.0,
            left: Box::new(TreeNode::Leaf { weight: -1.0 }),
            right: Box::new(TreeNode::Leaf { weight: 1.0 }),
        };
        assert_eq!(tree.predict(&[2.4999]), -1.0);
        assert_eq!(tree.predict(&[2.5]), 1.0);
        assert_eq!(tree.depth(), 1);
        assert_eq!(tree.leaves(), 2);
    }

    #[test]
    fn node_json_shape() {
        let tree = TreeNode::Split {
            feature: 3,
            threshold: 2.5,
            gain: 10.0,
            left: Box::new(TreeNode::Leaf { weight: -1.5 }),
            right: Box::new(TreeNode::Leaf { weight: 1.5 }),
        };
        let json = serde_json::to_string(&tree).unwrap();
        assert_eq!(json, r#"{"f":3,"t":2.5,"g":10.0,"l":{"w":-1.5},"r":{"w":1.5}}"#);
        assert_eq!(serde_json::from_str::<TreeNode>(&json).unwrap(), tree);
    }

    #[test]
    fn adjacent_float_threshold_separates() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let x = vec![vec![lo], vec![lo], vec![hi], vec![hi]];
        let grad = vec![1.0, 1.0, -1.0, -1.0];
        let params = SplitParams {
            max_depth: 1,
            reg_alpha: 0.0,
            reg_lambda: 0.0,
            min_child_weight: 1.0,
            min_split_gain: 0.0,
        };
        let tree = grow(&x, &grad, &[0, 1, 2, 3], &[0], &params);
        assert!(tree.predict(&[lo]) < 0.0);
        assert!(tree.predict(&[hi]) > 0.0);
    }
}
