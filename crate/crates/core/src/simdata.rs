//! Benchmark data generators: x-bit multiplexer problems and SNP datasets
//! with univariate, additive, heterogeneous and epistatic architectures.
//!
//! SNP penetrance functions are built analytically. With carrier indicator
//! `u(g) = 1[g >= 1] - q`, where `q = P(g >= 1)` under Hardy-Weinberg
//! equilibrium, a model over loci `L` has penetrance `K + d * prod u(g_l)`
//! (or `K + d * sum u(g_l)` for the additive model). Products of two or more
//! indicators have exactly zero single-locus marginal effect. Heritability
//! is `Var(penetrance) / (K (1 - K))`; `d` follows from it and `K` is chosen
//! to keep every penetrance inside `[0, 1]` with the widest margin.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureKind};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, Rng};

pub const MUX_BITS: [usize; 6] = [6, 11, 20, 37, 70, 135];
pub const ADDRESS_ORDER_NOTE: &str = "address bits A0..A(k-1) form the register index with A0 most significant";
pub const HERITABILITY_NOTE: &str =
    "heritability = Var(penetrance) / (K (1 - K)) over the Hardy-Weinberg genotype distribution; analytic zero-marginal penetrance construction, not a GAMETES model search";
const MAX_REJECTION_FACTOR: usize = 1000;

/// Description of a generated dataset, written next to it as a sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMeta {
    pub generator: String,
    pub seed: u64,
    pub n_instances: usize,
    pub relevant_features: Vec<String>,
    pub parameters: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

/// Number of address bits `k` with `k + 2^k = bits`.
pub fn mux_address_bits(bits: usize) -> Result<usize> {
    if !MUX_BITS.contains(&bits) {
        return Err(Error::invalid(format!("{bits} is not a multiplexer size; use one of {MUX_BITS:?}")));
    }
    Ok((1..8).find(|k| k + (1 << k) == bits).expect("listed sizes are valid"))
}

/// Label of a multiplexer row laid out as `k` address bits then `2^k`
/// register bits.
pub fn mux_label(row: &[u8], k: usize) -> u8 {
    let address = row[..k].iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
    row[k + address]
}

pub fn mux_feature_names(bits: usize) -> Result<Vec<String>> {
    let k = mux_address_bits(bits)?;
    Ok((0..k).map(|i| format!("A{i}")).chain((0..(1usize << k)).map(|i| format!("R{i}"))).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuxSpec {
    pub total_bits: usize,
    pub n_instances: usize,
    pub seed: u64,
}

pub fn gen_mux(spec: &MuxSpec) -> Result<(Dataset, SimMeta)> {
    let k = mux_address_bits(spec.total_bits)?;
    if spec.n_instances == 0 {
        return Err(Error::invalid("n_instances must be at least 1"));
    }
    let x = spec.total_bits;
    let mut rng = rng::rng_from_seed(spec.seed);
    let mut cells = Vec::with_capacity(spec.n_instances * x);
    let mut y = Vec::with_capacity(spec.n_instances);
    let mut row = vec![0u8; x];
    for _ in 0..spec.n_instances {
        for b in row.iter_mut() {
            *b = u8::from(rng.gen::<bool>());
        }
        y.push(mux_label(&row, k));
        cells.extend(row.iter().map(|&b| f64::from(b)));
    }
    let names = mux_feature_names(x)?;
    let relevant = names.clone();
    let m = Matrix::from_vec(spec.n_instances, x, cells);
    let d = Dataset::from_dense(format!("mux{x}"), names, &m, &y, &vec![FeatureKind::Categorical; x])?;
    let mut parameters = BTreeMap::new();
    parameters.insert("total_bits".to_string(), x.to_string());
    parameters.insert("address_bits".to_string(), k.to_string());
    let meta = SimMeta {
        generator: "mux".into(),
        seed: spec.seed,
        n_instances: spec.n_instances,
        relevant_features: relevant,
        parameters,
        notes: vec![ADDRESS_ORDER_NOTE.into()],
    };
    Ok((d, meta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Architecture {
    Univariate,
    Additive4,
    Heterogeneous4,
    Epistasis2,
    HetEpistasis2x2,
    Epistasis3,
}

impl Architecture {
    pub const ALL: [Architecture; 6] = [
        Architecture::Univariate,
        Architecture::Additive4,
        Architecture::Heterogeneous4,
        Architecture::Epistasis2,
        Architecture::HetEpistasis2x2,
        Architecture::Epistasis3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Univariate => "univariate",
            Architecture::Additive4 => "additive4",
            Architecture::Heterogeneous4 => "heterogeneous4",
            Architecture::Epistasis2 => "epistasis2",
            Architecture::HetEpistasis2x2 => "het_epistasis2x2",
            Architecture::Epistasis3 => "epistasis3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s)
    }

    /// Submodels as (loci per submodel, additive?). Heterogeneous
    /// architectures have several submodels, one per hidden subgroup.
    fn submodels(self) -> (usize, usize, bool) {
        match self {
            Architecture::Univariate => (1, 1, false),
            Architecture::Additive4 => (1, 4, true),
            Architecture::Heterogeneous4 => (4, 1, false),
            Architecture::Epistasis2 => (1, 2, false),
            Architecture::HetEpistasis2x2 => (2, 2, false),
            Architecture::Epistasis3 => (1, 3, false),
        }
    }

    pub fn relevant_count(self) -> usize {
        let (m, l, _) = self.submodels();
        m * l
    }
}

/// Genotype probabilities `[P(0), P(1), P(2)]` under Hardy-Weinberg.
pub fn genotype_probs(maf: f64) -> [f64; 3] {
    [(1.0 - maf) * (1.0 - maf), 2.0 * maf * (1.0 - maf), maf * maf]
}

/// Penetrance model over `loci` relevant loci sharing one minor allele
/// frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Penetrance {
    pub loci: usize,
    pub additive: bool,
    pub maf: f64,
    pub baseline: f64,
    pub effect: f64,
}

impl Penetrance {
    fn carrier_q(maf: f64) -> f64 {
        1.0 - (1.0 - maf) * (1.0 - maf)
    }

    fn signal(loci: usize, additive: bool, q: f64, carriers: &[bool]) -> f64 {
        let u = |c: bool| if c { 1.0 - q } else { -q };
        if additive {
            carriers[..loci].iter().map(|&c| u(c)).sum()
        } else {
            carriers[..loci].iter().map(|&c| u(c)).product()
        }
    }

    fn signal_variance(loci: usize, additive: bool, q: f64) -> f64 {
        let v = q * (1.0 - q);
        if additive { loci as f64 * v } else { v.powi(loci as i32) }
    }

    /// Solves for baseline and effect at heritability `h`.
    pub fn solve(loci: usize, additive: bool, maf: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::invalid("heritability must lie in (0, 1]"));
        }
        let q = Self::carrier_q(maf);
        let var = Self::signal_variance(loci, additive, q);
        let mut lo_sig = f64::INFINITY;
        let mut hi_sig = f64::NEG_INFINITY;
        for mask in 0..(1u32 << loci) {
            let carriers: Vec<bool> = (0..loci).map(|i| mask >> i & 1 == 1).collect();
            let s = Self::signal(loci, additive, q, &carriers);
            lo_sig = lo_sig.min(s);
            hi_sig = hi_sig.max(s);
        }
        let slack = |k: f64| {
            let d = (h * k * (1.0 - k) / var).sqrt();
            (k + d * lo_sig).min(1.0 - (k + d * hi_sig))
        };
        let mut best_k = 0.5;
        let mut best = f64::NEG_INFINITY;
        for i in 1..10_000 {
            let k = i as f64 / 10_000.0;
            let s = slack(k);
            if s > best {
                best = s;
                best_k = k;
            }
        }
        // Refine around the grid optimum.
        let (mut a, mut b) = ((best_k - 1e-4).max(1e-9), (best_k + 1e-4).min(1.0 - 1e-9));
        for _ in 0..100 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if slack(m1) < slack(m2) { a = m1 } else { b = m2 }
        }
        let k = (a + b) / 2.0;
        let k = if slack(k) >= best { k } else { best_k };
        if slack(k) < -1e-9 {
            return Err(Error::Generator(format!(
                "heritability {h} is infeasible for a {loci}-locus {} model at MAF {maf}",
                if additive { "additive" } else { "interaction" }
            )));
        }
        Ok(Penetrance { loci, additive, maf, baseline: k, effect: (h * k * (1.0 - k) / var).sqrt() })
    }

    /// Probability of class 1 given the genotypes of this model's loci.
    pub fn penetrance(&self, genotypes: &[u8]) -> f64 {
        let q = Self::carrier_q(self.maf);
        let carriers: Vec<bool> = genotypes.iter().map(|&g| g >= 1).collect();
        (self.baseline + self.effect * Self::signal(self.loci, self.additive, q, &carriers)).clamp(0.0, 1.0)
    }

    /// Population variance of the penetrance divided by `K (1 - K)`.
    pub fn heritability(&self) -> f64 {
        let p = genotype_probs(self.maf);
        let mut mean = 0.0;
        let mut sq = 0.0;
        for combo in 0..3usize.pow(self.loci as u32) {
            let mut g = vec![0u8; self.loci];
            let mut c = combo;
            let mut w = 1.0;
            for gi in g.iter_mut() {
                *gi = (c % 3) as u8;
                w *= p[c % 3];
                c /= 3;
            }
            let pen = self.penetrance(&g);
            mean += w * pen;
            sq += w * pen * pen;
        }
        (sq - mean * mean) / (self.baseline * (1.0 - self.baseline))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnpSpec {
    pub architecture: Architecture,
    pub n_features: usize,
    pub n_instances: usize,
    pub relevant_maf: f64,
    pub noise_maf: (f64, f64),
    pub heritability: f64,
    pub seed: u64,
}

impl SnpSpec {
    pub fn new(architecture: Architecture, heritability: f64, seed: u64) -> Self {
        SnpSpec {
            architecture,
            n_features: 100,
            n_instances: 1600,
            relevant_maf: 0.2,
            noise_maf: (0.05, 0.5),
            heritability,
            seed,
        }
    }
}

fn draw_genotype(rng: &mut Rng, maf: f64) -> u8 {
    u8::from(rng.gen::<f64>() < maf) + u8::from(rng.gen::<f64>() < maf)
}

/// Relevant-locus names `M{model}P{locus}`, then noise loci `N{i}`.
pub fn snp_feature_names(architecture: Architecture, n_features: usize) -> Vec<String> {
    let (models, loci, _) = architecture.submodels();
    let mut names = Vec::with_capacity(n_features);
    for m in 0..models {
        for p in 0..loci {
            names.push(format!("M{m}P{p}"));
        }
    }
    let relevant = names.len();
    names.extend((0..n_features.saturating_sub(relevant)).map(|i| format!("N{i}")));
    names
}

pub fn gen_snp(spec: &SnpSpec) -> Result<(Dataset, SimMeta)> {
    let arch = spec.architecture;
    let (models, loci, additive) = arch.submodels();
    let relevant = models * loci;
    if spec.n_features < relevant {
        return Err(Error::invalid(format!("{} needs at least {relevant} features", arch.as_str())));
    }
    if spec.n_instances < 2 {
        return Err(Error::invalid("n_instances must be at least 2"));
    }
    let (nlo, nhi) = spec.noise_maf;
    if !(0.0 < nlo && nlo <= nhi && nhi <= 0.5) || !(0.0 < spec.relevant_maf && spec.relevant_maf <= 0.5) {
        return Err(Error::invalid("minor allele frequencies must lie in (0, 0.5]"));
    }
    let model = Penetrance::solve(loci, additive, spec.relevant_maf, spec.heritability)?;
    let mut rng = rng::rng_from_seed(spec.seed);
    let f = spec.n_features;
    let noise_maf: Vec<f64> = (relevant..f).map(|_| if nlo == nhi { nlo } else { rng.gen_range(nlo..nhi) }).collect();
    let n = spec.n_instances;
    let quota = [n - n / 2, n / 2];
    let mut have = [0usize; 2];
    let mut cells = Vec::with_capacity(n * f);
    let mut y = Vec::with_capacity(n);
    let mut g = vec![0u8; f];
    let mut attempts = 0usize;
    while y.len() < n {
        attempts += 1;
        if attempts > MAX_REJECTION_FACTOR * n {
            return Err(Error::Generator(format!(
                "could not balance classes after {attempts} draws (baseline penetrance {:.4})",
                model.baseline
            )));
        }
        for (i, gi) in g.iter_mut().enumerate() {
            let maf = if i < relevant { spec.relevant_maf } else { noise_maf[i - relevant] };
            *gi = draw_genotype(&mut rng, maf);
        }
        let group = if models > 1 { rng.gen_range(0..models) } else { 0 };
        let pen = model.penetrance(&g[group * loci..(group + 1) * loci]);
        let class = usize::from(rng.gen::<f64>() < pen);
        if have[class] >= quota[class] {
            continue;
        }
        have[class] += 1;
        y.push(class as u8);
        cells.extend(g.iter().map(|&v| f64::from(v)));
    }
    let names = snp_feature_names(arch, f);
    let m = Matrix::from_vec(n, f, cells);
    let d = Dataset::from_dense(format!("snp_{}", arch.as_str()), names.clone(), &m, &y, &vec![FeatureKind::Categorical; f])?;
    let mut parameters = BTreeMap::new();
    parameters.insert("architecture".to_string(), arch.as_str().to_string());
    parameters.insert("heritability".to_string(), format!("{}", spec.heritability));
    parameters.insert("relevant_maf".to_string(), format!("{}", spec.relevant_maf));
    parameters.insert("noise_maf".to_string(), format!("{}-{}", nlo, nhi));
    parameters.insert("baseline_penetrance".to_string(), format!("{}", model.baseline));
    parameters.insert("effect".to_string(), format!("{}", model.effect));
    parameters.insert("subgroups".to_string(), models.to_string());
    let meta = SimMeta {
        generator: "snp".into(),
        seed: spec.seed,
        n_instances: n,
        relevant_features: names[..relevant].to_vec(),
        parameters,
        notes: vec![HERITABILITY_NOTE.into(), "classes balanced by case/control rejection sampling".into()],
    };
    Ok((d, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mux_examples() {
        // A = 10 -> address 2 -> R2
        assert_eq!(mux_label(&[1, 0, 0, 1, 1, 0], 2), 1);
        assert_eq!(mux_address_bits(20).unwrap(), 4);
        assert_eq!(mux_feature_names(135).unwrap().len(), 135);
        assert!(mux_address_bits(12).is_err());
    }

    #[test]
    fn epistasis_has_zero_marginals() {
        let m = Penetrance::solve(2, false, 0.2, 0.4).unwrap();
        assert!((m.heritability() - 0.4).abs() < 1e-9);
        let p = genotype_probs(0.2);
        for g1 in 0..3u8 {
            let marginal: f64 = (0..3u8).map(|g2| p[g2 as usize] * m.penetrance(&[g1, g2])).sum();
            assert!((marginal - m.baseline).abs() < 1e-12);
        }
    }

    #[test]
    fn univariate_full_heritability_is_deterministic() {
        let m = Penetrance::solve(1, false, 0.2, 1.0).unwrap();
        for g in 0..3u8 {
            let p = m.penetrance(&[g]);
            assert!(p < 1e-6 || p > 1.0 - 1e-6, "penetrance {p}");
        }
        assert!(m.penetrance(&[0]) <= m.penetrance(&[1]));
    }

    #[test]
    fn infeasible_heritability_is_reported() {
        assert!(matches!(Penetrance::solve(2, false, 0.2, 1.0), Err(Error::Generator(_))));
    }
}
