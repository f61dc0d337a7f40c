//! Binary decision trees over pre-binned features.
//!
//! Quantitative features are split as `x <= threshold` with thresholds at the
//! midpoint between adjacent observed values (features with more than
//! [`MAX_BINS`] distinct values are first grouped into equal-frequency bins);
//! categorical features are split one-vs-rest as `x == level`. The same
//! grower serves CART classification (Gini) and the second-order regression
//! trees used by gradient boosting.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;
use core::ops::{AddAssign, Sub};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::TrainData;
use crate::dataset::FeatureKind;
use crate::matrix::Matrix;
use crate::rng::{self, Rng};

pub const MAX_BINS: usize = 256;

/// Per-feature bin layout: bin `b` holds observed values in `[lo[b], hi[b]]`.
#[derive(Debug, Clone)]
pub(crate) struct FeatureBins {
    pub kind: FeatureKind,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Training matrix with every value replaced by its bin code.
#[derive(Debug, Clone)]
pub(crate) struct Binned {
    pub n: usize,
    pub bins: Vec<FeatureBins>,
    /// Column-major codes, `codes[f * n + r]`.
    pub codes: Vec<u16>,
}

impl Binned {
    pub fn new(x: &Matrix, kinds: &[FeatureKind]) -> Self {
        let n = x.rows();
        let mut bins = Vec::with_capacity(x.cols());
        let mut codes = Vec::with_capacity(n * x.cols());
        for c in 0..x.cols() {
            let col = x.column(c);
            let mut sorted = col.clone();
            sorted.sort_by(f64::total_cmp);
            let mut uniq: Vec<f64> = Vec::new();
            let mut before: Vec<usize> = Vec::new();
            for (i, &v) in sorted.iter().enumerate() {
                if uniq.last() != Some(&v) {
                    uniq.push(v);
                    before.push(i);
                }
            }
            let group: Vec<usize> = if kinds[c] == FeatureKind::Categorical || uniq.len() <= MAX_BINS {
                (0..uniq.len()).collect()
            } else {
                let raw: Vec<usize> = before.iter().map(|&b| b * MAX_BINS / n).collect();
                let mut g = Vec::with_capacity(raw.len());
                let mut id = 0;
                for i in 0..raw.len() {
                    if i > 0 && raw[i] != raw[i - 1] {
                        id += 1;
                    }
                    g.push(id);
                }
                g
            };
            assert!(group.last().map_or(0, |&g| g) < usize::from(u16::MAX), "too many levels for a tree feature");
            let nb = group.last().map_or(0, |&g| g + 1);
            let mut lo = vec![f64::INFINITY; nb];
            let mut hi = vec![f64::NEG_INFINITY; nb];
            for (u, &g) in uniq.iter().zip(&group) {
                lo[g] = lo[g].min(*u);
                hi[g] = hi[g].max(*u);
            }
            for v in &col {
                let u = uniq.binary_search_by(|p| p.total_cmp(v)).expect("value present");
                codes.push(group[u] as u16);
            }
            bins.push(FeatureBins { kind: kinds[c], lo, hi });
        }
        Binned { n, bins, codes }
    }

    #[inline]
    fn code(&self, f: usize, r: usize) -> usize {
        usize::from(self.codes[f * self.n + r])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SplitTest {
    LessEq(f64),
    Equals(f64),
}

impl SplitTest {
    #[inline]
    fn goes_left(self, v: f64) -> bool {
        match self {
            SplitTest::LessEq(t) => v <= t,
            SplitTest::Equals(t) => v == t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: u32, test: SplitTest, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    /// Total impurity decrease (or loss reduction) per feature, normalized to
    /// sum to 1; all zeros when the tree never splits.
    pub importance: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Minimum total sample weight on each side of a split.
    pub min_samples_leaf: f64,
    /// Features examined per split (random subset); `None` means all.
    pub max_features: Option<usize>,
}

/// Node statistics and split scoring for one learning task.
pub(crate) trait Objective {
    type S: Copy + Default + AddAssign + Sub<Output = Self::S>;
    fn stat(&self, row: usize) -> Self::S;
    fn weight(&self, s: &Self::S) -> f64;
    fn is_pure(&self, s: &Self::S) -> bool;
    /// Score of a split; `None` when the split is not admissible.
    fn gain(&self, parent: &Self::S, left: &Self::S, right: &Self::S) -> Option<f64>;
    fn leaf(&self, s: &Self::S) -> f64;
}

/// Gini impurity with per-row multiplicities.
pub(crate) struct Gini<'a> {
    pub y: &'a [u8],
    pub w: &'a [f64],
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ClassCounts([f64; 2]);

impl AddAssign for ClassCounts {
    fn add_assign(&mut self, o: Self) {
        self.0[0] += o.0[0];
        self.0[1] += o.0[1];
    }
}

impl Sub for ClassCounts {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        ClassCounts([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

fn weighted_gini(c: &ClassCounts) -> f64 {
    let w = c.0[0] + c.0[1];
    if w <= 0.0 {
        return 0.0;
    }
    w - (c.0[0] * c.0[0] + c.0[1] * c.0[1]) / w
}

impl Objective for Gini<'_> {
    type S = ClassCounts;
    fn stat(&self, row: usize) -> ClassCounts {
        let mut c = [0.0; 2];
        c[usize::from(self.y[row])] = self.w[row];
        ClassCounts(c)
    }
    fn weight(&self, s: &ClassCounts) -> f64 {
        s.0[0] + s.0[1]
    }
    fn is_pure(&self, s: &ClassCounts) -> bool {
        s.0[0] <= 0.0 || s.0[1] <= 0.0
    }
    fn gain(&self, parent: &ClassCounts, left: &ClassCounts, right: &ClassCounts) -> Option<f64> {
        Some((weighted_gini(parent) - weighted_gini(left) - weighted_gini(right)).max(0.0))
    }
    fn leaf(&self, s: &ClassCounts) -> f64 {
        s.0[1] / (s.0[0] + s.0[1])
    }
}

/// Second-order (gradient, hessian) regression objective with L2 leaf
/// regularization.
pub(crate) struct Newton<'a> {
    pub g: &'a [f64],
    pub h: &'a [f64],
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct GradStats {
    g: f64,
    h: f64,
    n: f64,
}

impl AddAssign for GradStats {
    fn add_assign(&mut self, o: Self) {
        self.g += o.g;
        self.h += o.h;
        self.n += o.n;
    }
}

impl Sub for GradStats {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        GradStats { g: self.g - o.g, h: self.h - o.h, n: self.n - o.n }
    }
}

pub(crate) const MIN_CHILD_HESSIAN: f64 = 1e-6;

impl Objective for Newton<'_> {
    type S = GradStats;
    fn stat(&self, row: usize) -> GradStats {
        GradStats { g: self.g[row], h: self.h[row], n: 1.0 }
    }
    fn weight(&self, s: &GradStats) -> f64 {
        s.n
    }
    fn is_pure(&self, s: &GradStats) -> bool {
        s.h <= MIN_CHILD_HESSIAN
    }
    fn gain(&self, parent: &GradStats, left: &GradStats, right: &GradStats) -> Option<f64> {
        if left.h < MIN_CHILD_HESSIAN || right.h < MIN_CHILD_HESSIAN {
            return None;
        }
        let score = |s: &GradStats| s.g * s.g / (s.h + self.lambda);
        let gain = score(left) + score(right) - score(parent);
        (gain > 1e-12).then_some(gain)
    }
    fn leaf(&self, s: &GradStats) -> f64 {
        -s.g / (s.h + self.lambda)
    }
}

struct Grower<'a, O: Objective> {
    data: &'a Binned,
    obj: &'a O,
    params: &'a TreeParams,
    rng: Option<Rng>,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    hist: Vec<O::S>,
    order: Vec<usize>,
}

struct Best {
    gain: f64,
    feature: usize,
    bin: usize,
}

impl<O: Objective> Grower<'_, O> {
    fn find_split(&mut self, rows: &[u32], total: &O::S) -> Option<Best> {
        let f = self.data.bins.len();
        if let Some(rng) = self.rng.as_mut() {
            self.order.shuffle(rng);
        }
        let limit = self.params.max_features.unwrap_or(f).max(1);
        let mut best: Option<Best> = None;
        let mut examined = 0;
        for k in 0..f {
            if examined >= limit && best.is_some() {
                break;
            }
            let feat = self.order[k];
            let fb = &self.data.bins[feat];
            let nb = fb.lo.len();
            self.hist.clear();
            self.hist.resize(nb, O::S::default());
            for &r in rows {
                let r = r as usize;
                self.hist[self.data.code(feat, r)] += self.obj.stat(r);
            }
            let occupied = self.hist.iter().filter(|s| self.obj.weight(s) > 0.0).count();
            if occupied < 2 {
                continue;
            }
            examined += 1;
            let min_leaf = self.params.min_samples_leaf;
            let consider = |left: O::S, bin: usize, best: &mut Option<Best>| {
                let right = *total - left;
                let (wl, wr) = (self.obj.weight(&left), self.obj.weight(&right));
                if wl <= 0.0 || wr <= 0.0 || wl < min_leaf || wr < min_leaf {
                    return;
                }
                if let Some(g) = self.obj.gain(total, &left, &right) {
                    if best.as_ref().map_or(true, |b| g > b.gain) {
                        *best = Some(Best { gain: g, feature: feat, bin });
                    }
                }
            };
            match fb.kind {
                FeatureKind::Quantitative => {
                    let mut left = O::S::default();
                    for b in 0..nb - 1 {
                        left += self.hist[b];
                        consider(left, b, &mut best);
                    }
                }
                FeatureKind::Categorical => {
                    for b in 0..nb {
                        consider(self.hist[b], b, &mut best);
                    }
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: &mut [u32], depth: usize) -> u32 {
        let mut total = O::S::default();
        for &r in rows.iter() {
            total += self.obj.stat(r as usize);
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node::Leaf { value: self.obj.leaf(&total) });
        if depth >= self.params.max_depth || rows.len() < 2 || self.obj.is_pure(&total) {
            return id;
        }
        let Some(best) = self.find_split(rows, &total) else {
            return id;
        };
        let fb = &self.data.bins[best.feature];
        let kind = fb.kind;
        let test = match kind {
            FeatureKind::Quantitative => {
                let (a, b) = (fb.hi[best.bin], fb.lo[best.bin + 1]);
                let mid = a + (b - a) / 2.0;
                SplitTest::LessEq(if mid < b { mid } else { a })
            }
            FeatureKind::Categorical => SplitTest::Equals(fb.lo[best.bin]),
        };
        let data = self.data;
        let feature = best.feature;
        let bin = best.bin;
        let left_of = |r: u32| {
            let c = data.code(feature, r as usize);
            match kind {
                FeatureKind::Quantitative => c <= bin,
                FeatureKind::Categorical => c == bin,
            }
        };
        let mut split = 0;
        for i in 0..rows.len() {
            if left_of(rows[i]) {
                rows.swap(i, split);
                split += 1;
            }
        }
        self.importance[feature] += best.gain;
        let (l, r) = rows.split_at_mut(split);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id as usize] = Node::Split { feature: feature as u32, test, left, right };
        id
    }
}

pub(crate) fn grow<O: Objective>(data: &Binned, obj: &O, rows: Vec<u32>, params: &TreeParams, rng: Option<Rng>) -> Tree {
    let f = data.bins.len();
    let mut g = Grower {
        data,
        obj,
        params,
        rng,
        nodes: Vec::new(),
        importance: vec![0.0; f],
        hist: Vec::new(),
        order: (0..f).collect(),
    };
    let mut rows = rows;
    g.grow(&mut rows, 0);
    let total: f64 = g.importance.iter().sum();
    if total > 0.0 {
        for v in &mut g.importance {
            *v /= total;
        }
    }
    Tree { nodes: g.nodes, importance: g.importance }
}

impl Tree {
    /// CART classifier; leaf values are class-1 fractions.
    pub fn fit_classifier(data: TrainData<'_>, params: &TreeParams, seed: u64) -> Self {
        let binned = Binned::new(data.x, data.kinds);
        let w = vec![1.0; data.y.len()];
        let obj = Gini { y: data.y, w: &w };
        let rng = params.max_features.map(|_| rng::rng_from_seed(seed));
        grow(&binned, &obj, (0..data.y.len() as u32).collect(), params, rng)
    }

    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, test, left, right } => {
                    i = if test.goes_left(row[*feature as usize]) { *left as usize } else { *right as usize };
                }
            }
        }
    }

    pub fn predict_values(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|r| self.predict_row(x.row(r))).collect()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Indented IF/ELSE rendering using feature names.
    pub fn render(&self, names: &[String]) -> String {
        fn walk(nodes: &[Node], i: usize, names: &[String], indent: usize, out: &mut String) {
            let pad = "  ".repeat(indent);
            match &nodes[i] {
                Node::Leaf { value } => {
                    let _ = writeln!(out, "{pad}predict P(class 1) = {value:.4}");
                }
                Node::Split { feature, test, left, right } => {
                    let name = &names[*feature as usize];
                    let (cond, neg) = match test {
                        SplitTest::LessEq(t) => (format!("{name} <= {t}"), format!("{name} > {t}")),
                        SplitTest::Equals(t) => (format!("{name} == {t}"), format!("{name} != {t}")),
                    };
                    let _ = writeln!(out, "{pad}if {cond}:");
                    walk(nodes, *left as usize, names, indent + 1, out);
                    let _ = writeln!(out, "{pad}else ({neg}):");
                    walk(nodes, *right as usize, names, indent + 1, out);
                }
            }
        }
        let mut out = String::new();
        walk(&self.nodes, 0, names, 0, &mut out);
        out
    }
}
