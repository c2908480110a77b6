use serde::{Deserialize, Serialize};

use super::logistic::{self, DenseRows, LogisticModel, LogisticParams};
use crate::error::{Error, Result};

/// Fewest examples of each class the user classifier accepts.
pub const MIN_PER_CLASS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    LogReg,
    Gbt,
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logreg" => Ok(ClassifierKind::LogReg),
            "gbt" => Ok(ClassifierKind::Gbt),
            _ => Err(Error::Config(format!("unknown classifier {s:?}; expected logreg or gbt"))),
        }
    }
}

/// Gradient-boosted regression trees on the logistic loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// Candidate thresholds per feature and node.
    pub max_bins: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            rounds: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_leaf: 3,
            lambda: 1.0,
            max_bins: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub logistic: LogisticParams,
    pub gbt: GbtParams,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            kind: ClassifierKind::LogReg,
            logistic: LogisticParams {
                l2: 1e-3,
                balanced: true,
                ..LogisticParams::default()
            },
            gbt: GbtParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum TreeNode {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf(v) => return v,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub base: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl GbtModel {
    fn margin(&self, x: &[f64]) -> f64 {
        self.base + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    g: &'a [f64],
    h: &'a [f64],
    params: &'a GbtParams,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    fn leaf_value(&self, idx: &[usize]) -> f64 {
        let gs: f64 = idx.iter().map(|&i| self.g[i]).sum();
        let hs: f64 = idx.iter().map(|&i| self.h[i]).sum();
        -gs / (hs + self.params.lambda)
    }

    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64, f64)> {
        let lambda = self.params.lambda;
        let gt: f64 = idx.iter().map(|&i| self.g[i]).sum();
        let ht: f64 = idx.iter().map(|&i| self.h[i]).sum();
        let parent = gt * gt / (ht + lambda);
        let dim = self.x[idx[0]].len();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for f in 0..dim {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let stride = (order.len() / self.params.max_bins.max(1)).max(1);
            let (mut gl, mut hl) = (0.0, 0.0);
            for (pos, &i) in order.iter().enumerate().take(order.len() - 1) {
                gl += self.g[i];
                hl += self.h[i];
                let left_n = pos + 1;
                let (v, next) = (self.x[i][f], self.x[order[pos + 1]][f]);
                if v == next || left_n % stride != 0 && pos + 2 != order.len() {
                    continue;
                }
                if left_n < self.params.min_leaf || order.len() - left_n < self.params.min_leaf {
                    continue;
                }
                let (gr, hr) = (gt - gl, ht - hl);
                let gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
                if gain > 1e-12 && best.is_none_or(|(_, _, b)| gain > b) {
                    best = Some((f, 0.5 * (v + next), gain));
                }
            }
        }
        best
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let at = self.nodes.len();
        self.nodes.push(TreeNode::Leaf(self.leaf_value(&idx)));
        if depth >= self.params.max_depth || idx.len() < 2 * self.params.min_leaf {
            return at;
        }
        if let Some((feature, threshold, _)) = self.best_split(&idx) {
            let (l, r): (Vec<usize>, Vec<usize>) =
                idx.into_iter().partition(|&i| self.x[i][feature] <= threshold);
            let left = self.build(l, depth + 1);
            let right = self.build(r, depth + 1);
            self.nodes[at] = TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            };
        }
        at
    }
}

fn fit_gbt(x: &[Vec<f64>], y: &[f64], params: &GbtParams) -> GbtModel {
    let p0 = y.iter().sum::<f64>() / y.len() as f64;
    let base = (p0 / (1.0 - p0)).ln();
    let mut model = GbtModel {
        base,
        learning_rate: params.learning_rate,
        trees: Vec::new(),
    };
    let mut margin = vec![base; x.len()];
    for _ in 0..params.rounds {
        let p: Vec<f64> = margin.iter().map(|&m| logistic::sigmoid(m)).collect();
        let g: Vec<f64> = p.iter().zip(y).map(|(p, y)| p - y).collect();
        let h: Vec<f64> = p.iter().map(|p| (p * (1.0 - p)).max(1e-12)).collect();
        let mut b = TreeBuilder {
            x,
            g: &g,
            h: &h,
            params,
            nodes: Vec::new(),
        };
        b.build((0..x.len()).collect(), 0);
        let tree = Tree { nodes: b.nodes };
        for (m, xi) in margin.iter_mut().zip(x) {
            *m += params.learning_rate * tree.predict(xi);
        }
        model.trees.push(tree);
    }
    model
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum UserClassifier {
    LogReg(LogisticModel),
    Gbt(GbtModel),
}

impl UserClassifier {
    /// Probability that the user is HM.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        match self {
            UserClassifier::LogReg(m) => m.predict_dense(x),
            UserClassifier::Gbt(m) => logistic::sigmoid(m.margin(x)),
        }
    }
}

/// Fit HM (true) vs rest (false) on fixed-length feature rows.
pub fn train_user_classifier(
    x: &[Vec<f64>],
    y: &[bool],
    cfg: &ClassifierConfig,
) -> Result<UserClassifier> {
    if x.len() != y.len() {
        return Err(Error::Data("feature rows and labels differ in length".into()));
    }
    let dim = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != dim) {
        return Err(Error::Data("feature rows differ in length".into()));
    }
    let pos = y.iter().filter(|&&b| b).count();
    let neg = y.len() - pos;
    if pos < MIN_PER_CLASS || neg < MIN_PER_CLASS {
        return Err(Error::Data(format!(
            "degenerate class balance: {pos} HM vs {neg} other users; need {MIN_PER_CLASS} of each"
        )));
    }
    let yf: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    Ok(match cfg.kind {
        ClassifierKind::LogReg => UserClassifier::LogReg(logistic::fit(&DenseRows(x), &yf, &cfg.logistic)?),
        ClassifierKind::Gbt => UserClassifier::Gbt(fit_gbt(x, &yf, &cfg.gbt)),
    })
}
