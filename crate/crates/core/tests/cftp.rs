use std::collections::HashMap;
use std::sync::Arc;

use kagome::cftp::{cftp_sample, extremal_tilings, forward_coupling_time, DEFAULT_BUDGET};
use kagome::chain::ChainVariant;
use kagome::graph::{enumerate, TilingGraph, DEFAULT_NODE_CAP};
use kagome::kernel::{exact_mixing_time, exact_stationary, fish_weighted_law, DEFAULT_MIXING_CAP};
use kagome::region::{make_lozenge_region, Region};
use kagome::stats::{mean_stderr, total_variation};
use kagome::tiling::FlipVariant;
use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};

fn lozenge(n: u32) -> Arc<Region> {
    Arc::new(make_lozenge_region(n).unwrap())
}

fn graph_for(r: &Arc<Region>, v: &ChainVariant) -> TilingGraph {
    let flips = if v.restrained_only() { FlipVariant::RestrainedFlips } else { FlipVariant::AllFlips };
    enumerate(r, flips, DEFAULT_NODE_CAP).unwrap()
}

fn empirical(graph: &TilingGraph, v: &ChainVariant, seeds: std::ops::Range<u64>) -> Vec<f64> {
    let mut counts = vec![0usize; graph.num_nodes()];
    let total = seeds.end - seeds.start;
    for seed in seeds {
        let t = cftp_sample(graph.region(), v, seed).unwrap();
        counts[graph.node_id(&t).expect("sample lies in the flip graph") as usize] += 1;
    }
    counts.into_iter().map(|c| c as f64 / total as f64).collect()
}

#[test]
fn uniform_samples_match_the_uniform_law() {
    let r = lozenge(2);
    let v = ChainVariant::General;
    let g = graph_for(&r, &v);
    let p = empirical(&g, &v, 0..100_000);
    let q = vec![1.0 / g.num_nodes() as f64; g.num_nodes()];
    let tv = total_variation(&p, &q);
    assert!(tv < 0.02, "tv {tv}");
}

#[test]
fn weighted_samples_match_the_fish_law() {
    let r = lozenge(2);
    let lambda = Rational64::new(1, 2);
    let v = ChainVariant::Weighted(lambda);
    let g = graph_for(&r, &v);
    let p = empirical(&g, &v, 0..100_000);
    let q: Vec<f64> = fish_weighted_law::<f64>(&g, lambda);
    let tv = total_variation(&p, &q);
    assert!(tv < 0.02, "tv {tv}");
}

#[test]
fn restrained_samples_match_the_stationary_law() {
    let r = lozenge(3);
    let v = ChainVariant::Restrained;
    let g = graph_for(&r, &v);
    let p = empirical(&g, &v, 0..20_000);
    let q: Vec<f64> = exact_stationary::<f64>(&g, &v).unwrap();
    let tv = total_variation(&p, &q);
    // 257 states at 20k samples: the expected empirical TV is about 0.045.
    assert!(tv < 0.07, "tv {tv}");
}

#[test]
fn disjoint_seed_batches_agree() {
    let r = lozenge(2);
    let v = ChainVariant::General;
    let g = graph_for(&r, &v);
    let a = empirical(&g, &v, 0..100_000);
    let b = empirical(&g, &v, 100_000..200_000);
    let tv = total_variation(&a, &b);
    assert!(tv < 0.03, "tv {tv}");
}

/// Expected forward coupling time from the extremal pair, from the absorbing
/// chain on pairs of states driven by one shared (vertex, coin).
fn exact_coupling_time(graph: &TilingGraph, v: &ChainVariant) -> BigRational {
    let region = graph.region();
    let (lo, hi) = extremal_tilings(region, v).unwrap();
    let start = (graph.node_id(&lo).unwrap(), graph.node_id(&hi).unwrap());
    let inner = region.inner_vertices();
    let share = Rational64::new(1, inner.len() as i64);

    let fire = |i: u32, vert: u32, coin: Rational64| -> u32 {
        match graph.node(i).flip_info(vert).filter(|f| graph.variant().admits(f)) {
            Some(f) => {
                let (a, b) = v.firing_interval(&f);
                if a <= coin && coin < b {
                    graph.flip_target(i, vert).unwrap()
                } else {
                    i
                }
            }
            None => i,
        }
    };
    let cuts = |i: u32, vert: u32, out: &mut Vec<Rational64>| {
        if let Some(f) = graph.node(i).flip_info(vert).filter(|f| graph.variant().admits(f)) {
            let (a, b) = v.firing_interval(&f);
            out.extend([a, b]);
        }
    };

    let mut index: HashMap<(u32, u32), usize> = HashMap::new();
    let mut pairs = vec![start];
    index.insert(start, 0);
    let mut rows: Vec<Vec<(usize, Rational64)>> = Vec::new();
    let mut k = 0;
    while k < pairs.len() {
        let (x, y) = pairs[k];
        let mut row = Vec::new();
        if x != y {
            for &vert in inner {
                let mut c = vec![Rational64::zero(), Rational64::one()];
                cuts(x, vert, &mut c);
                cuts(y, vert, &mut c);
                c.sort();
                c.dedup();
                for w in c.windows(2) {
                    let coin = w[0];
                    let next = (fire(x, vert, coin), fire(y, vert, coin));
                    let id = *index.entry(next).or_insert_with(|| {
                        pairs.push(next);
                        pairs.len() - 1
                    });
                    row.push((id, share * (w[1] - w[0])));
                }
            }
        }
        rows.push(row);
        k += 1;
    }

    // (I - P) E = 1 off the diagonal, E = 0 on it.
    let n = pairs.len();
    let big = |r: Rational64| BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()));
    let mut m = vec![vec![BigRational::zero(); n + 1]; n];
    for i in 0..n {
        m[i][i] = BigRational::one();
        if pairs[i].0 != pairs[i].1 {
            m[i][n] = BigRational::one();
            for (j, p) in &rows[i] {
                m[i][*j] -= big(*p);
            }
        }
    }
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero()).expect("absorbing system is nonsingular");
        m.swap(col, piv);
        let inv = BigRational::one() / m[col][col].clone();
        for x in m[col].iter_mut() {
            *x *= inv.clone();
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..=n {
                    let d = f.clone() * m[col][c].clone();
                    m[r][c] -= d;
                }
            }
        }
    }
    m[0][n].clone()
}

fn check_forward_mean(v: ChainVariant) {
    let r = lozenge(2);
    let g = graph_for(&r, &v);
    let exact = exact_coupling_time(&g, &v);
    let exact = exact.numer().to_string().parse::<f64>().unwrap() / exact.denom().to_string().parse::<f64>().unwrap();
    let times: Vec<f64> =
        (0..4000).map(|s| forward_coupling_time(&r, &v, s, DEFAULT_BUDGET).unwrap() as f64).collect();
    let (mean, se) = mean_stderr(&times);
    assert!((mean - exact).abs() <= 3.0 * se, "{v}: mean {mean} ± {se}, exact {exact}");
}

#[test]
fn forward_coupling_time_matches_the_absorbing_chain() {
    check_forward_mean(ChainVariant::General);
    check_forward_mean(ChainVariant::Weighted(Rational64::new(1, 2)));
    check_forward_mean(ChainVariant::Restrained);
}

/// Monotone coupling bound: d(t) <= P(T > t) <= E[T]/t, so one block of
/// ceil(e E[T]) steps brings d-bar below 1/e, and ln(1/eps) blocks suffice.
#[test]
fn mixing_time_respects_the_coupling_bound() {
    let r = lozenge(2);
    let eps = 0.25f64;
    for v in [ChainVariant::General, ChainVariant::Weighted(Rational64::new(1, 2)), ChainVariant::Restrained] {
        let g = graph_for(&r, &v);
        let et = exact_coupling_time(&g, &v);
        let et = et.numer().to_string().parse::<f64>().unwrap() / et.denom().to_string().parse::<f64>().unwrap();
        let bound = (std::f64::consts::E * et).ceil() * (1.0 / eps).ln().ceil();
        let t = exact_mixing_time::<f64>(&g, &v, &eps, DEFAULT_MIXING_CAP, 100_000).unwrap();
        assert!(t as f64 <= bound, "{v}: mixing time {t} exceeds {bound}");
        assert!(t > 0);
    }
}
