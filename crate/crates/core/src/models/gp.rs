//! Genetic-programming symbolic classifier.
//!
//! Programs are expression trees stored in prefix order over `+ - * /`
//! (protected division), feature terminals and ephemeral constants. The
//! class-1 probability is the sigmoid of the program output; fitness is
//! training balanced accuracy minus a parsimony penalty per node.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::TrainData;
use crate::math::sigmoid;
use crate::matrix::Matrix;
use crate::rng::{self, Rng};

pub const MAX_DEPTH: usize = 17;
pub const TOURNAMENT_SIZE: usize = 20;
pub const PARSIMONY: f64 = 0.001;
pub const INIT_DEPTH: (usize, usize) = (2, 6);
pub const POINT_RATE: f64 = 0.05;
const CONST_RANGE: f64 = 1.0;
const N_FUNCTIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Var(u32),
    Const(f64),
}

impl Op {
    fn arity(self) -> usize {
        match self {
            Op::Add | Op::Sub | Op::Mul | Op::Div => 2,
            _ => 0,
        }
    }

    #[inline]
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => {
                if b.abs() > 0.001 { a / b } else { 1.0 }
            }
            _ => unreachable!("terminal has no arguments"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GpParams {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub nodes: Vec<Op>,
    /// Penalized training fitness of the selected program.
    pub fitness: f64,
}

fn subtree_end(p: &[Op], start: usize) -> usize {
    let mut need = 1usize;
    let mut i = start;
    while need > 0 {
        need = need + p[i].arity() - 1;
        i += 1;
    }
    i
}

fn depth(p: &[Op]) -> usize {
    let mut stack: Vec<usize> = Vec::new();
    for op in p.iter().rev() {
        if op.arity() == 0 {
            stack.push(1);
        } else {
            let a = stack.pop().unwrap_or(0);
            let b = stack.pop().unwrap_or(0);
            stack.push(1 + a.max(b));
        }
    }
    stack.pop().unwrap_or(0)
}

fn random_terminal(rng: &mut Rng, n_features: usize) -> Op {
    if rng.gen_range(0..=n_features) == n_features {
        Op::Const(rng.gen_range(-CONST_RANGE..CONST_RANGE))
    } else {
        Op::Var(rng.gen_range(0..n_features) as u32)
    }
}

fn random_function(rng: &mut Rng) -> Op {
    [Op::Add, Op::Sub, Op::Mul, Op::Div][rng.gen_range(0..N_FUNCTIONS)]
}

fn random_program(rng: &mut Rng, n_features: usize, max_depth: usize, full: bool, out: &mut Vec<Op>) {
    let terminal_share = (n_features + 1) as f64 / (n_features + 1 + N_FUNCTIONS) as f64;
    if max_depth <= 1 || (!full && rng.gen::<f64>() < terminal_share) {
        out.push(random_terminal(rng, n_features));
    } else {
        out.push(random_function(rng));
        random_program(rng, n_features, max_depth - 1, full, out);
        random_program(rng, n_features, max_depth - 1, full, out);
    }
}

/// Picks a subtree root, favouring function nodes 9:1 over terminals.
fn pick_node(rng: &mut Rng, p: &[Op]) -> usize {
    let w = |op: &Op| if op.arity() > 0 { 0.9 } else { 0.1 };
    let total: f64 = p.iter().map(w).sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, op) in p.iter().enumerate() {
        u -= w(op);
        if u < 0.0 {
            return i;
        }
    }
    p.len() - 1
}

fn crossover(rng: &mut Rng, parent: &[Op], donor: &[Op]) -> Vec<Op> {
    let s = pick_node(rng, parent);
    let e = subtree_end(parent, s);
    let ds = pick_node(rng, donor);
    let de = subtree_end(donor, ds);
    let mut child = Vec::with_capacity(parent.len() - (e - s) + (de - ds));
    child.extend_from_slice(&parent[..s]);
    child.extend_from_slice(&donor[ds..de]);
    child.extend_from_slice(&parent[e..]);
    child
}

fn hoist(rng: &mut Rng, parent: &[Op]) -> Vec<Op> {
    let s = pick_node(rng, parent);
    let e = subtree_end(parent, s);
    let sub = &parent[s..e];
    let hs = pick_node(rng, sub);
    let he = subtree_end(sub, hs);
    let mut child = Vec::with_capacity(parent.len());
    child.extend_from_slice(&parent[..s]);
    child.extend_from_slice(&sub[hs..he]);
    child.extend_from_slice(&parent[e..]);
    child
}

fn point_mutation(rng: &mut Rng, parent: &[Op], n_features: usize) -> Vec<Op> {
    parent
        .iter()
        .map(|&op| {
            if rng.gen::<f64>() >= POINT_RATE {
                op
            } else if op.arity() > 0 {
                random_function(rng)
            } else {
                random_terminal(rng, n_features)
            }
        })
        .collect()
}

/// Column-wise interpreter reused across programs.
struct Evaluator<'a> {
    columns: &'a [Vec<f64>],
    n: usize,
    stack: Vec<Vec<f64>>,
    pool: Vec<Vec<f64>>,
}

impl<'a> Evaluator<'a> {
    fn new(columns: &'a [Vec<f64>], n: usize) -> Self {
        Evaluator { columns, n, stack: Vec::new(), pool: Vec::new() }
    }

    fn buffer(&mut self) -> Vec<f64> {
        let mut b = self.pool.pop().unwrap_or_default();
        b.clear();
        b
    }

    fn run(&mut self, p: &[Op], out: &mut Vec<f64>) {
        for &op in p.iter().rev() {
            match op {
                Op::Var(c) => {
                    let mut b = self.buffer();
                    b.extend_from_slice(&self.columns[c as usize]);
                    self.stack.push(b);
                }
                Op::Const(v) => {
                    let mut b = self.buffer();
                    b.resize(self.n, v);
                    self.stack.push(b);
                }
                _ => {
                    let mut a = self.stack.pop().expect("well-formed program");
                    let b = self.stack.pop().expect("well-formed program");
                    for (x, y) in a.iter_mut().zip(&b) {
                        *x = op.apply(*x, *y);
                    }
                    self.pool.push(b);
                    self.stack.push(a);
                }
            }
        }
        let r = self.stack.pop().expect("well-formed program");
        out.clear();
        out.extend(r.iter().map(|v| if v.is_finite() { *v } else { 0.0 }));
        self.pool.push(r);
    }
}

impl Program {
    pub fn fit(data: TrainData<'_>, params: &GpParams, seed: u64) -> Self {
        let f = data.x.cols();
        // Collapse duplicate rows into per-class multiplicities.
        let mut order: Vec<usize> = (0..data.x.rows()).collect();
        let cmp_rows = |a: &usize, b: &usize| {
            let (ra, rb) = (data.x.row(*a), data.x.row(*b));
            ra.iter().zip(rb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(core::cmp::Ordering::Equal)
        };
        order.sort_by(cmp_rows);
        let mut rows: Vec<usize> = Vec::new();
        let mut weight: Vec<[f64; 2]> = Vec::new();
        for &i in &order {
            if rows.last().map_or(true, |&last| cmp_rows(&last, &i).is_ne()) {
                rows.push(i);
                weight.push([0.0; 2]);
            }
            weight.last_mut().expect("pushed")[usize::from(data.y[i])] += 1.0;
        }
        let n = rows.len();
        let columns: Vec<Vec<f64>> = (0..f).map(|c| rows.iter().map(|&r| data.x.get(r, c)).collect()).collect();
        let total = [weight.iter().map(|w| w[0]).sum::<f64>(), weight.iter().map(|w| w[1]).sum::<f64>()];
        let mut eval = Evaluator::new(&columns, n);
        let mut out = Vec::with_capacity(n);
        let mut fitness_of = |p: &[Op]| -> f64 {
            eval.run(p, &mut out);
            let (mut tp, mut tn) = (0.0, 0.0);
            for (v, w) in out.iter().zip(&weight) {
                if *v >= 0.0 {
                    tp += w[1];
                } else {
                    tn += w[0];
                }
            }
            0.5 * (tp / total[1] + tn / total[0]) - PARSIMONY * p.len() as f64
        };

        let mut rng = rng::rng_from_seed(seed);
        let size = params.population.max(2);
        let mut pop: Vec<Vec<Op>> = (0..size)
            .map(|i| {
                let d = rng.gen_range(INIT_DEPTH.0..=INIT_DEPTH.1);
                let mut p = Vec::new();
                random_program(&mut rng, f, d, i % 2 == 0, &mut p);
                p
            })
            .collect();
        let mut best: Option<(f64, Vec<Op>)> = None;
        for generation in 0..params.generations.max(1) {
            let fit: Vec<f64> = pop.iter().map(|p| fitness_of(p)).collect();
            let mut gen_best = 0;
            for i in 1..size {
                if fit[i] > fit[gen_best] {
                    gen_best = i;
                }
            }
            if best.as_ref().map_or(true, |b| fit[gen_best] > b.0) {
                best = Some((fit[gen_best], pop[gen_best].clone()));
            }
            if generation + 1 == params.generations.max(1) {
                break;
            }
            let tournament = |rng: &mut Rng| -> usize {
                let mut w = rng.gen_range(0..size);
                for _ in 1..TOURNAMENT_SIZE {
                    let c = rng.gen_range(0..size);
                    if fit[c] > fit[w] || (fit[c] == fit[w] && c < w) {
                        w = c;
                    }
                }
                w
            };
            let mut next = Vec::with_capacity(size);
            next.push(pop[gen_best].clone());
            let other = (1.0 - params.crossover_rate) / 3.0;
            while next.len() < size {
                let parent = &pop[tournament(&mut rng)];
                let r = rng.gen::<f64>();
                let child = if r < params.crossover_rate {
                    let donor = &pop[tournament(&mut rng)];
                    crossover(&mut rng, parent, donor)
                } else if r < params.crossover_rate + other {
                    let d = rng.gen_range(INIT_DEPTH.0..=INIT_DEPTH.1);
                    let mut donor = Vec::new();
                    random_program(&mut rng, f, d, false, &mut donor);
                    crossover(&mut rng, parent, &donor)
                } else if r < params.crossover_rate + 2.0 * other {
                    hoist(&mut rng, parent)
                } else {
                    point_mutation(&mut rng, parent, f)
                };
                next.push(if depth(&child) > MAX_DEPTH { parent.clone() } else { child });
            }
            pop = next;
        }
        let (fitness, nodes) = best.expect("at least one generation");
        Program { nodes, fitness }
    }

    pub fn evaluate_row(&self, row: &[f64]) -> f64 {
        let mut stack: Vec<f64> = Vec::with_capacity(self.nodes.len());
        for &op in self.nodes.iter().rev() {
            match op {
                Op::Var(c) => stack.push(row[c as usize]),
                Op::Const(v) => stack.push(v),
                _ => {
                    let a = stack.pop().expect("well-formed program");
                    let b = stack.pop().expect("well-formed program");
                    stack.push(op.apply(a, b));
                }
            }
        }
        let v = stack.pop().unwrap_or(0.0);
        if v.is_finite() { v } else { 0.0 }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|r| sigmoid(self.evaluate_row(x.row(r)))).collect()
    }

    pub fn depth(&self) -> usize {
        depth(&self.nodes)
    }

    /// Infix expression using feature names.
    pub fn render(&self, names: &[String]) -> String {
        fn walk(p: &[Op], i: usize, names: &[String]) -> (String, usize) {
            match p[i] {
                Op::Var(c) => (names[c as usize].clone(), i + 1),
                Op::Const(v) => (format!("{v:.3}"), i + 1),
                op => {
                    let (a, next) = walk(p, i + 1, names);
                    let (b, end) = walk(p, next, names);
                    let sym = match op {
                        Op::Add => "+",
                        Op::Sub => "-",
                        Op::Mul => "*",
                        _ => "/",
                    };
                    (format!("({a} {sym} {b})"), end)
                }
            }
        }
        walk(&self.nodes, 0, names).0
    }
}
