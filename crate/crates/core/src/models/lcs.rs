//! Supervised Michigan-style learning classifier system in the spirit of
//! ExSTraCS.
//!
//! Rules specify a subset of attributes (value predicates for categorical
//! features, intervals for quantitative ones) and a class. Each training
//! step forms the match and correct sets, covers when no correct rule
//! exists, updates accuracy-based fitness (`accuracy^nu`), subsumes within
//! the correct set, runs a niche GA and deletes down to the population
//! bound. Predictions are fitness times numerosity weighted votes.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{positive_fraction, TrainData};
use crate::dataset::FeatureKind;
use crate::matrix::Matrix;
use crate::rng::{self, Rng};

#[derive(Debug, Clone)]
pub struct LcsParams {
    pub nu: f64,
    /// Bound on total numerosity (micro-classifiers).
    pub population: usize,
    pub iterations: usize,
    pub theta_ga: f64,
    pub chi: f64,
    pub mu: f64,
    pub theta_sub: u64,
    pub acc_sub: f64,
    pub delta: f64,
    pub theta_del: u64,
    pub beta: f64,
    pub theta_sel: f64,
    pub fitness_reduction: f64,
    /// Maximum number of specified attributes; derived from the data when `None`.
    pub specificity_limit: Option<usize>,
}

impl Default for LcsParams {
    fn default() -> Self {
        LcsParams {
            nu: 1.0,
            population: 2000,
            iterations: 200_000,
            theta_ga: 25.0,
            chi: 0.8,
            mu: 0.04,
            theta_sub: 20,
            acc_sub: 0.99,
            delta: 0.1,
            theta_del: 20,
            beta: 0.2,
            theta_sel: 0.5,
            fitness_reduction: 0.1,
            specificity_limit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Pred {
    Value(f64),
    Interval(f64, f64),
}

impl Pred {
    #[inline]
    fn matches(self, v: f64) -> bool {
        match self {
            Pred::Value(x) => v == x,
            Pred::Interval(lo, hi) => lo <= v && v <= hi,
        }
    }

    fn contains(self, other: Pred) -> bool {
        match (self, other) {
            (Pred::Value(a), Pred::Value(b)) => a == b,
            (Pred::Interval(a, b), Pred::Interval(c, d)) => a <= c && d <= b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spec {
    pub attr: u32,
    pub pred: Pred,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    /// Specified attributes in ascending order.
    pub condition: Vec<Spec>,
    pub class: u8,
    pub numerosity: u32,
    pub match_count: u64,
    pub correct_count: u64,
    pub accuracy: f64,
    pub fitness: f64,
    pub ga_time: u64,
    pub avg_match_size: f64,
    key: u64,
}

fn condition_key(condition: &[Spec], class: u8) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ u64::from(class);
    let mut mix = |v: u64| {
        h ^= v;
        h = h.wrapping_mul(0x0000_0100_0000_01b3).rotate_left(17);
    };
    for s in condition {
        mix(u64::from(s.attr));
        match s.pred {
            Pred::Value(v) => mix(v.to_bits()),
            Pred::Interval(a, b) => {
                mix(a.to_bits());
                mix(b.to_bits());
            }
        }
    }
    h
}

/// First two predicates of a rule as closed intervals, stored contiguously
/// so most non-matching rules are rejected without touching the rule.
#[derive(Clone, Copy)]
struct Quick {
    attr: [u32; 2],
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Quick {
    fn of(rule: &Rule) -> Self {
        let mut q = Quick { attr: [0; 2], lo: [f64::NEG_INFINITY; 2], hi: [f64::INFINITY; 2] };
        for (k, s) in rule.condition.iter().take(2).enumerate() {
            q.attr[k] = s.attr;
            (q.lo[k], q.hi[k]) = match s.pred {
                Pred::Value(v) => (v, v),
                Pred::Interval(a, b) => (a, b),
            };
        }
        q
    }

    #[inline]
    fn matches(&self, row: &[f64]) -> bool {
        let a = row[self.attr[0] as usize];
        let b = row[self.attr[1] as usize];
        self.lo[0] <= a && a <= self.hi[0] && self.lo[1] <= b && b <= self.hi[1]
    }
}

impl Rule {
    #[inline]
    fn matches(&self, row: &[f64]) -> bool {
        self.condition.iter().all(|s| s.pred.matches(row[s.attr as usize]))
    }

    fn same_condition(&self, o: &Rule) -> bool {
        self.key == o.key && self.class == o.class && self.condition == o.condition
    }

    /// True when every instance matched by `o` is matched by `self`, and
    /// `self` is strictly more general.
    fn is_more_general(&self, o: &Rule) -> bool {
        if self.class != o.class || self.condition.len() >= o.condition.len() {
            return false;
        }
        self.condition.iter().all(|s| match o.condition.binary_search_by_key(&s.attr, |t| t.attr) {
            Ok(k) => s.pred.contains(o.condition[k].pred),
            Err(_) => false,
        })
    }

    fn can_subsume(&self, p: &LcsParams) -> bool {
        self.match_count > p.theta_sub && self.accuracy > p.acc_sub
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulePopulation {
    pub rules: Vec<Rule>,
    /// Prediction used when no rule matches.
    pub default_probability: f64,
}

struct Env<'a> {
    x: &'a Matrix,
    kinds: &'a [FeatureKind],
    range: Vec<(f64, f64)>,
    spec_limit: usize,
    params: &'a LcsParams,
}

impl Env<'_> {
    fn pred_for(&self, rng: &mut Rng, a: usize, v: f64) -> Pred {
        match self.kinds[a] {
            FeatureKind::Categorical => Pred::Value(v),
            FeatureKind::Quantitative => {
                let (lo, hi) = self.range[a];
                let radius = rng.gen_range(25..=75) as f64 * 0.01 * (hi - lo) / 2.0;
                Pred::Interval(v - radius, v + radius)
            }
        }
    }

    fn new_rule(&self, condition: Vec<Spec>, class: u8, fitness: f64, time: u64) -> Rule {
        Rule {
            key: condition_key(&condition, class),
            condition,
            class,
            numerosity: 1,
            match_count: 0,
            correct_count: 0,
            accuracy: 0.0,
            fitness,
            ga_time: time,
            avg_match_size: 1.0,
        }
    }

    fn cover(&self, rng: &mut Rng, row: &[f64], class: u8, time: u64) -> Rule {
        let f = self.x.cols();
        let k = rng.gen_range(1..=self.spec_limit.min(f));
        let mut attrs: Vec<usize> = index::sample(rng, f, k).into_vec();
        attrs.sort_unstable();
        let condition = attrs.iter().map(|&a| Spec { attr: a as u32, pred: self.pred_for(rng, a, row[a]) }).collect();
        self.new_rule(condition, class, 1.0, time)
    }

    /// Two-point crossover over attribute positions.
    fn crossover(&self, rng: &mut Rng, a: &mut Rule, b: &mut Rule) {
        let f = self.x.cols() as u32;
        let mut p1 = rng.gen_range(0..=f);
        let mut p2 = rng.gen_range(0..=f);
        if p1 > p2 {
            core::mem::swap(&mut p1, &mut p2);
        }
        let split = |r: &Rule| -> (Vec<Spec>, Vec<Spec>) { r.condition.iter().partition(|s| !(p1 <= s.attr && s.attr < p2)) };
        let (a_out, a_in) = split(a);
        let (b_out, b_in) = split(b);
        let rebuild = |r: &mut Rule, mut spec: Vec<Spec>| {
            spec.sort_by_key(|s| s.attr);
            r.condition = spec;
            r.key = condition_key(&r.condition, r.class);
        };
        rebuild(a, a_out.into_iter().chain(b_in).collect());
        rebuild(b, b_out.into_iter().chain(a_in).collect());
    }

    fn mutate(&self, rng: &mut Rng, r: &mut Rule, row: &[f64]) {
        let f = self.x.cols();
        let spec = &mut r.condition;
        for a in 0..f {
            if rng.gen::<f64>() >= self.params.mu {
                continue;
            }
            match spec.iter().position(|s| s.attr as usize == a) {
                Some(k) => {
                    spec.remove(k);
                }
                None => spec.push(Spec { attr: a as u32, pred: self.pred_for(rng, a, row[a]) }),
            }
        }
        while spec.len() > self.spec_limit {
            let k = rng.gen_range(0..spec.len());
            spec.remove(k);
        }
        spec.sort_by_key(|s| s.attr);
        r.key = condition_key(&r.condition, r.class);
    }
}

/// Smallest `i` with `avg_states^i >= n`, capped by the attribute count.
pub fn specificity_limit(x: &Matrix, kinds: &[FeatureKind]) -> usize {
    let f = x.cols();
    if f == 0 {
        return 1;
    }
    let states: f64 = (0..f)
        .map(|c| match kinds[c] {
            FeatureKind::Categorical => {
                let mut col = x.column(c);
                col.sort_by(f64::total_cmp);
                col.dedup();
                col.len().max(2) as f64
            }
            FeatureKind::Quantitative => 2.0,
        })
        .sum::<f64>()
        / f as f64;
    let n = x.rows() as f64;
    let mut i = 1usize;
    while states.powi(i as i32) < n && i < f {
        i += 1;
    }
    i.min(f)
}

impl RulePopulation {
    pub fn fit(data: TrainData<'_>, params: &LcsParams, seed: u64) -> Self {
        let x = data.x;
        let y = data.y;
        let n = x.rows();
        let range = (0..x.cols())
            .map(|c| {
                let col = x.column(c);
                (col.iter().copied().fold(f64::INFINITY, f64::min), col.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            })
            .collect();
        let env = Env {
            x,
            kinds: data.kinds,
            range,
            spec_limit: params.specificity_limit.unwrap_or_else(|| specificity_limit(x, data.kinds)).max(1),
            params,
        };
        let mut rng = rng::rng_from_seed(seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut pop: Vec<Rule> = Vec::new();
        let mut match_set: Vec<usize> = Vec::new();
        let mut correct: Vec<usize> = Vec::new();
        let mut micro: usize = 0;
        let mut keys: BTreeMap<u64, u32> = BTreeMap::new();
        let mut votes: Vec<f64> = Vec::new();
        let mut quick: Vec<Quick> = Vec::new();
        for t in 0..params.iterations {
            let time = t as u64;
            let inst = order[t % n];
            let row = x.row(inst);
            let class = y[inst];
            match_set.clear();
            correct.clear();
            for (i, q) in quick.iter().enumerate() {
                if !q.matches(row) {
                    continue;
                }
                let r = &pop[i];
                if r.condition.len() <= 2 || r.condition[2..].iter().all(|s| s.pred.matches(row[s.attr as usize])) {
                    match_set.push(i);
                    if r.class == class {
                        correct.push(i);
                    }
                }
            }
            if correct.is_empty() {
                let rule = env.cover(&mut rng, row, class, time);
                *keys.entry(rule.key).or_insert(0) += 1;
                pop.push(rule);
                micro += 1;
                match_set.push(pop.len() - 1);
                correct.push(pop.len() - 1);
            }
            let msize: f64 = match_set.iter().map(|&i| f64::from(pop[i].numerosity)).sum();
            for &i in &match_set {
                let r = &mut pop[i];
                r.match_count += 1;
                if r.class == class {
                    r.correct_count += 1;
                }
                r.accuracy = r.correct_count as f64 / r.match_count as f64;
                r.fitness = r.accuracy.powf(params.nu);
                if (r.match_count as f64) < 1.0 / params.beta {
                    r.avg_match_size += (msize - r.avg_match_size) / r.match_count as f64;
                } else {
                    r.avg_match_size += params.beta * (msize - r.avg_match_size);
                }
            }
            correct_set_subsumption(&mut pop, &correct, params);
            correct.retain(|&i| pop[i].numerosity > 0);
            let cnum: f64 = correct.iter().map(|&i| f64::from(pop[i].numerosity)).sum();
            if cnum > 0.0 {
                let avg_time: f64 =
                    correct.iter().map(|&i| pop[i].ga_time as f64 * f64::from(pop[i].numerosity)).sum::<f64>() / cnum;
                if time as f64 - avg_time > params.theta_ga {
                    micro += run_ga(&env, &mut rng, &mut pop, &mut keys, &correct, row, time);
                }
            }
            if micro > params.population {
                delete(&mut rng, &mut pop, params, micro - params.population, &mut votes);
                micro = params.population;
            }
            quick.extend(pop[quick.len()..].iter().map(Quick::of));
            let mut k = 0;
            quick.retain(|_| {
                k += 1;
                pop[k - 1].numerosity > 0
            });
            pop.retain(|r| {
                if r.numerosity == 0 {
                    forget_key(&mut keys, r.key);
                }
                r.numerosity > 0
            });
        }
        RulePopulation { rules: pop, default_probability: positive_fraction(y) }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut vote = [0.0; 2];
        for r in &self.rules {
            if r.matches(row) {
                vote[usize::from(r.class)] += r.fitness * f64::from(r.numerosity);
            }
        }
        let total = vote[0] + vote[1];
        if total > 0.0 {
            vote[1] / total
        } else {
            self.default_probability
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|r| self.predict_row(x.row(r))).collect()
    }

    /// Attribute specification frequency weighted by fitness and numerosity,
    /// normalized to sum to 1.
    pub fn importance(&self, n_features: usize) -> Vec<f64> {
        let mut imp = vec![0.0; n_features];
        for r in &self.rules {
            for s in &r.condition {
                imp[s.attr as usize] += r.fitness * f64::from(r.numerosity);
            }
        }
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            imp.iter_mut().for_each(|v| *v /= total);
        }
        imp
    }

    pub fn micro_size(&self) -> usize {
        self.rules.iter().map(|r| r.numerosity as usize).sum()
    }
}

fn forget_key(keys: &mut BTreeMap<u64, u32>, key: u64) {
    if let Some(c) = keys.get_mut(&key) {
        *c -= 1;
        if *c == 0 {
            keys.remove(&key);
        }
    }
}

fn correct_set_subsumption(pop: &mut [Rule], correct: &[usize], params: &LcsParams) {
    let mut subsumer: Option<usize> = None;
    for &i in correct {
        let r = &pop[i];
        if r.can_subsume(params)
            && subsumer.map_or(true, |s| r.condition.len() < pop[s].condition.len())
        {
            subsumer = Some(i);
        }
    }
    let Some(s) = subsumer else { return };
    for &i in correct {
        if i != s && pop[i].numerosity > 0 && pop[s].is_more_general(&pop[i]) {
            let num = pop[i].numerosity;
            pop[s].numerosity += num;
            pop[i].numerosity = 0;
        }
    }
}

fn select_parent(rng: &mut Rng, pop: &[Rule], correct: &[usize], theta_sel: f64) -> usize {
    let size = ((correct.len() as f64 * theta_sel).round() as usize).clamp(1, correct.len());
    let mut best: Option<usize> = None;
    for k in index::sample(rng, correct.len(), size) {
        let i = correct[k];
        if best.map_or(true, |b| pop[i].fitness > pop[b].fitness) {
            best = Some(i);
        }
    }
    best.expect("non-empty correct set")
}

/// Returns the number of micro-classifiers added.
fn run_ga(
    env: &Env<'_>,
    rng: &mut Rng,
    pop: &mut Vec<Rule>,
    keys: &mut BTreeMap<u64, u32>,
    correct: &[usize],
    row: &[f64],
    time: u64,
) -> usize {
    let params = env.params;
    for &i in correct {
        pop[i].ga_time = time;
    }
    let pa = select_parent(rng, pop, correct, params.theta_sel);
    let pb = select_parent(rng, pop, correct, params.theta_sel);
    let fresh = |p: &Rule| env.new_rule(p.condition.clone(), p.class, p.fitness, time);
    let mut a = fresh(&pop[pa]);
    let mut b = fresh(&pop[pb]);
    let crossed = pa != pb && rng.gen::<f64>() < params.chi;
    if crossed {
        env.crossover(rng, &mut a, &mut b);
        let f = params.fitness_reduction * (pop[pa].fitness + pop[pb].fitness) / 2.0;
        a.fitness = f;
        b.fitness = f;
    } else {
        a.fitness *= params.fitness_reduction;
        b.fitness *= params.fitness_reduction;
    }
    env.mutate(rng, &mut a, row);
    env.mutate(rng, &mut b, row);
    let mut added = 0;
    for (child, parents) in [(a, [pa, pb]), (b, [pb, pa])] {
        if child.condition.is_empty() {
            continue;
        }
        added += 1;
        if let Some(&p) = parents.iter().find(|&&p| pop[p].can_subsume(params) && pop[p].is_more_general(&child)) {
            pop[p].numerosity += 1;
            continue;
        }
        if keys.contains_key(&child.key) {
            if let Some(existing) = pop.iter_mut().find(|r| r.numerosity > 0 && r.same_condition(&child)) {
                existing.numerosity += 1;
                continue;
            }
        }
        *keys.entry(child.key).or_insert(0) += 1;
        pop.push(child);
    }
    added
}

/// Removes `count` micro-classifiers by roulette on deletion votes. Votes
/// are computed once per call and updated only for the chosen rules.
fn delete(rng: &mut Rng, pop: &mut [Rule], params: &LcsParams, count: usize, votes: &mut Vec<f64>) {
    let (mut micro, mut fit_sum) = (0.0, 0.0);
    for r in pop.iter() {
        micro += f64::from(r.numerosity);
        fit_sum += r.fitness * f64::from(r.numerosity);
    }
    let mean_fitness = fit_sum / micro;
    let vote = |r: &Rule| {
        let mut v = r.avg_match_size * f64::from(r.numerosity);
        if r.match_count > params.theta_del && r.fitness < params.delta * mean_fitness {
            v *= mean_fitness / r.fitness.max(1e-6);
        }
        v
    };
    votes.clear();
    votes.extend(pop.iter().map(vote));
    let mut total: f64 = votes.iter().sum();
    for _ in 0..count {
        let mut u = rng.gen::<f64>() * total;
        let mut chosen = pop.iter().rposition(|r| r.numerosity > 0).expect("population is not empty");
        for (i, v) in votes.iter().enumerate() {
            if pop[i].numerosity == 0 {
                continue;
            }
            u -= v;
            if u < 0.0 {
                chosen = i;
                break;
            }
        }
        pop[chosen].numerosity -= 1;
        total -= votes[chosen];
        votes[chosen] = vote(&pop[chosen]);
        total += votes[chosen];
    }
}
