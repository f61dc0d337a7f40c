//! Rank-test statistics against brute-force oracles.
//!
//! Every oracle ranks by pairwise counting (`#less + (#equal + 1) / 2`)
//! instead of sorting, and evaluates the textbook form of each statistic.
//! Inputs are enumerated exhaustively for small pooled sizes.

use tabml_core::stats::{kruskal_wallis, mann_whitney_u, wilcoxon_signed_rank};

fn pairwise_rank(v: f64, pool: &[f64]) -> f64 {
    let less = pool.iter().filter(|&&u| u < v).count() as f64;
    let equal = pool.iter().filter(|&&u| u == v).count() as f64;
    less + (equal + 1.0) / 2.0
}

fn tie_term(pool: &[f64]) -> f64 {
    // Σ (t³ - t) via counting each value's multiplicity once per member.
    pool.iter()
        .map(|&v| {
            let t = pool.iter().filter(|&&u| u == v).count() as f64;
            (t * t * t - t) / t
        })
        .sum()
}

fn kw_oracle(groups: &[Vec<f64>]) -> f64 {
    let pool: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pool.len() as f64;
    let grand = (n + 1.0) / 2.0;
    let between: f64 = groups
        .iter()
        .map(|g| {
            let mean = g.iter().map(|&v| pairwise_rank(v, &pool)).sum::<f64>() / g.len() as f64;
            g.len() as f64 * (mean - grand) * (mean - grand)
        })
        .sum();
    let c = 1.0 - tie_term(&pool) / (n * n * n - n);
    if c <= 0.0 {
        return 0.0;
    }
    12.0 / (n * (n + 1.0)) * between / c
}

fn mwu_oracle(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for &x in a {
        for &y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

fn wilcoxon_oracle(d: &[f64]) -> (f64, f64) {
    let nz: Vec<f64> = d.iter().copied().filter(|&v| v != 0.0).collect();
    let abs: Vec<f64> = nz.iter().map(|v| v.abs()).collect();
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (v, a) in nz.iter().zip(&abs) {
        let r = pairwise_rank(*a, &abs);
        if *v > 0.0 {
            plus += r;
        } else {
            minus += r;
        }
    }
    (plus, minus)
}

/// Value pools of each size: all distinct, heavy ties, and all equal.
fn pools(n: usize) -> Vec<Vec<f64>> {
    let distinct: Vec<f64> = (0..n).map(|i| (i * 7 % 11) as f64 + 0.5).collect();
    let tied: Vec<f64> = [2.0, 1.0, 2.0, 3.0, 1.0, 2.0, 4.0, 3.0, 2.0][..n].to_vec();
    vec![distinct, tied, vec![5.0; n]]
}

/// Every partition of `0..n` into unordered non-empty blocks, as block ids
/// in restricted-growth form.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut a = vec![0usize; n];
    fn rec(i: usize, max: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == a.len() {
            out.push(a.clone());
            return;
        }
        for b in 0..=max + 1 {
            a[i] = b;
            rec(i + 1, max.max(b), a, out);
        }
    }
    if n > 0 {
        rec(1, 0, &mut a, &mut out);
    }
    out
}

#[test]
fn kruskal_wallis_matches_oracle_for_all_partitions_up_to_nine() {
    let mut checked = 0usize;
    for n in 2..=9 {
        for pool in pools(n) {
            for blocks in set_partitions(n) {
                let g = blocks.iter().max().unwrap() + 1;
                if g < 2 {
                    continue;
                }
                let groups: Vec<Vec<f64>> = (0..g)
                    .map(|b| (0..n).filter(|&i| blocks[i] == b).map(|i| pool[i]).collect())
                    .collect();
                let (h, p) = kruskal_wallis(&groups).unwrap();
                let want = kw_oracle(&groups);
                assert!((h - want).abs() <= 1e-9, "H {h} vs oracle {want} for {groups:?}");
                assert!((0.0..=1.0).contains(&p));
                checked += 1;
            }
        }
    }
    assert!(checked > 60_000);
}

#[test]
fn mann_whitney_matches_oracle_for_all_splits_up_to_nine() {
    for n in 2..=9 {
        for pool in pools(n) {
            for mask in 1u32..(1 << n) - 1 {
                let a: Vec<f64> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| pool[i]).collect();
                let b: Vec<f64> = (0..n).filter(|i| mask >> i & 1 == 0).map(|i| pool[i]).collect();
                let r = mann_whitney_u(&a, &b).unwrap();
                let want = mwu_oracle(&a, &b);
                assert!((r.u - want).abs() <= 1e-9, "U {} vs oracle {want} for {a:?} | {b:?}", r.u);
                assert!((0.0..=1.0).contains(&r.p_value));
            }
        }
    }
}

#[test]
fn wilcoxon_matches_oracle_for_all_sign_patterns_up_to_nine() {
    let magnitudes: [&[f64]; 3] = [
        &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0],
        &[1.0, 1.0, 2.0, 0.0, 2.0, 2.0, 3.0, 0.0, 1.0],
        &[4.0; 9],
    ];
    for n in 1..=9 {
        for m in magnitudes {
            for signs in 0u32..(1 << n) {
                let d: Vec<f64> = (0..n).map(|i| if signs >> i & 1 == 1 { m[i] } else { -m[i] }).collect();
                let b: Vec<f64> = (0..n).map(|i| 10.0 + i as f64).collect();
                let a: Vec<f64> = b.iter().zip(&d).map(|(x, y)| x + y).collect();
                let r = wilcoxon_signed_rank(&a, &b).unwrap();
                let (plus, minus) = wilcoxon_oracle(&d);
                if plus == 0.0 && minus == 0.0 {
                    assert!(r.all_zero);
                    continue;
                }
                assert!((r.w_plus - plus).abs() <= 1e-9, "W+ {} vs {plus} for {d:?}", r.w_plus);
                assert!((r.w - plus.min(minus)).abs() <= 1e-9);
                assert!((0.0..=1.0).contains(&r.p_value));
            }
        }
    }
}

#[test]
fn set_partition_counts_are_bell_numbers() {
    let bell = [1, 2, 5, 15, 52, 203, 877, 4140, 21147];
    for (n, &b) in (1..=9).zip(&bell) {
        assert_eq!(set_partitions(n).len(), b);
    }
}

// Reference values from an independent statistics package (asymptotic
// p-values with tie and continuity corrections), frozen to full precision.
const A: [f64; 10] = [0.81, 0.74, 0.90, 0.66, 0.88, 0.79, 0.85, 0.70, 0.93, 0.77];
const B: [f64; 10] = [0.71, 0.69, 0.80, 0.61, 0.72, 0.75, 0.64, 0.70, 0.83, 0.68];
const C: [f64; 10] = [0.91, 0.95, 0.89, 0.97, 0.86, 0.90, 0.94, 0.92, 0.99, 0.88];

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

#[test]
fn frozen_reference_p_values() {
    let (h, p) = kruskal_wallis(&[A.to_vec(), B.to_vec(), C.to_vec()]).unwrap();
    assert!(close(h, 18.326424755120215, 1e-12), "{h}");
    assert!(close(p, 0.00010482561714300163, 1e-9), "{p}");

    let t = vec![1.0, 1.0, 2.0, 2.0, 2.0, 3.0, 4.0, 4.0];
    let u = vec![2.0, 3.0, 3.0, 5.0, 5.0, 6.0, 6.0, 6.0];
    let (h, p) = kruskal_wallis(&[t.clone(), u.clone()]).unwrap();
    assert!(close(h, 5.761570561456755, 1e-12));
    assert!(close(p, 0.01638042360593475, 1e-9));

    let r = mann_whitney_u(&A, &B).unwrap();
    assert_eq!(r.u, 78.5);
    assert!(close(r.p_value, 0.034226150579334216, 1e-9));
    let r = mann_whitney_u(&t, &u).unwrap();
    assert_eq!(r.u, 9.5);
    assert!(close(r.p_value, 0.018925936737758883, 1e-9));

    let r = wilcoxon_signed_rank(&A, &B).unwrap();
    assert_eq!(r.w, 0.0);
    assert!(close(r.p_value, 0.009029910762692456, 1e-9));
    let p = [1.0, 2.0, 2.5, 3.0, 3.0, 4.0, 1.5, 2.0, 5.0, 5.0];
    let q = [0.5, 2.0, 1.5, 3.5, 2.0, 2.0, 2.5, 1.0, 4.0, 4.5];
    let r = wilcoxon_signed_rank(&p, &q).unwrap();
    assert_eq!(r.w, 8.0);
    assert!(close(r.p_value, 0.09014428622634839, 1e-9));
}
