//! Exact sampling by coupling from the past, forward coupling times and the
//! coupling-time benchmark.
//!
//! Time `-k` (`k >= 1`) always uses the same [`StepSeed`]: times
//! `-k` with `2^(s-1) < k <= 2^s` form segment `s`, read from stream `1 + s`
//! at offset `2^s - k`, so every segment is consumed front to back while the
//! chain moves forward in time. Forward runs use stream 0.

use std::sync::Arc;

use num_rational::Rational64;
use num_traits::One;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{step_in_place, ChainVariant, SeedStream, StepSeed};
use crate::error::{Error, Result};
use crate::graph::{enumerate, TilingGraph};
use crate::height::height_field;
use crate::minimal::{greedy_ascent, greedy_descent};
use crate::region::Region;
use crate::stats::{least_squares_slope, mean_stderr};
use crate::tiling::{find_restrained_tiling, find_tiling, FlipInfo, FlipVariant, Tiling};

pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

/// How CFTP couples the state space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CftpMethod {
    /// Track only the chains started from the lowest and highest tilings.
    /// Relies on the grand coupling keeping the pointwise height order, which
    /// is checked at every step.
    Sandwich,
    /// Track every state of the enumerated flip graph. Needs no order
    /// assumption; for small state spaces only.
    Exhaustive,
}

impl CftpMethod {
    /// Sandwich where the coupling is known to keep the order (every variant
    /// except fish weights above 1), exhaustive otherwise.
    pub fn for_variant(variant: &ChainVariant) -> CftpMethod {
        match variant {
            ChainVariant::Weighted(l) if *l > Rational64::one() => CftpMethod::Exhaustive,
            _ => CftpMethod::Sandwich,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CftpOptions {
    pub method: CftpMethod,
    /// Total chain steps allowed per sandwich chain (or per state for the
    /// exhaustive method) over all epochs.
    pub budget: u64,
    /// Node cap for the exhaustive method.
    pub node_cap: usize,
}

impl CftpOptions {
    pub fn for_variant(variant: &ChainVariant) -> Self {
        CftpOptions { method: CftpMethod::for_variant(variant), ..Self::default() }
    }

    pub fn exhaustive() -> Self {
        CftpOptions { method: CftpMethod::Exhaustive, ..Self::default() }
    }
}

impl Default for CftpOptions {
    fn default() -> Self {
        CftpOptions {
            method: CftpMethod::Sandwich,
            budget: DEFAULT_BUDGET,
            node_cap: crate::graph::DEFAULT_NODE_CAP,
        }
    }
}

/// Outcome of one CFTP run.
#[derive(Clone, Debug)]
pub struct CftpRun {
    pub region: Arc<Region>,
    pub variant: ChainVariant,
    pub rng_seed: u64,
    pub method: CftpMethod,
    /// Lengths of the windows `[-T, 0)` tried, doubling.
    pub epochs: Vec<u64>,
    pub result: Tiling,
    /// Steps simulated per tracked chain over all epochs.
    pub total_steps: u64,
}

/// Seed of the step at time `-k`.
pub fn past_seed(region: &Region, rng_seed: u64, k: u64) -> StepSeed {
    assert!(k >= 1);
    let s = 64 - (k - 1).leading_zeros() as u64;
    SeedStream::at(region, rng_seed, 1 + s, (1u64 << s) - k).next().expect("infinite stream")
}

/// Seeds of times `-t, ..., -1` in chronological order, read segment by
/// segment.
fn past_seeds(region: &Region, rng_seed: u64, t: u64) -> impl Iterator<Item = (u64, StepSeed)> + '_ {
    debug_assert!(t.is_power_of_two());
    let top = t.trailing_zeros() as u64;
    (0..=top).rev().flat_map(move |s| {
        let first = if s == 0 { 1 } else { (1u64 << (s - 1)) + 1 };
        let len = (1u64 << s) - first + 1;
        SeedStream::at(region, rng_seed, 1 + s, 0).take(len as usize).enumerate().map(move |(i, seed)| ((1u64 << s) - i as u64, seed))
    })
}

/// Lowest and highest tilings for the variant's flip graph.
pub fn extremal_tilings(region: &Arc<Region>, variant: &ChainVariant) -> Result<(Tiling, Tiling)> {
    let (start, flips) = if variant.restrained_only() {
        (find_restrained_tiling(region)?, FlipVariant::RestrainedFlips)
    } else {
        (find_tiling(region)?, FlipVariant::AllFlips)
    };
    Ok((greedy_descent(&start, flips), greedy_ascent(&start, flips)))
}

/// Two coupled chains with incrementally tracked heights.
struct Sandwich {
    lo: Tiling,
    hi: Tiling,
    h_lo: Vec<i32>,
    h_hi: Vec<i32>,
    differing: usize,
}

impl Sandwich {
    fn new(lo: Tiling, hi: Tiling) -> Result<Self> {
        let h_lo = height_field(&lo)?.values().to_vec();
        let h_hi = height_field(&hi)?.values().to_vec();
        let differing = h_lo.iter().zip(&h_hi).filter(|(a, b)| a != b).count();
        Ok(Sandwich { lo, hi, h_lo, h_hi, differing })
    }

    fn coalesced(&self) -> bool {
        self.differing == 0
    }

    fn step(&mut self, seed: &StepSeed, variant: &ChainVariant, time: i64) -> Result<()> {
        let v = seed.vertex as usize;
        let before = self.h_lo[v] != self.h_hi[v];
        for (t, h) in [(&mut self.lo, &mut self.h_lo), (&mut self.hi, &mut self.h_hi)] {
            if let Some(info) = step_in_place(t, seed, variant)? {
                h[v] += 3 * info.direction.sign();
            }
        }
        let after = self.h_lo[v] != self.h_hi[v];
        self.differing = self.differing + after as usize - before as usize;
        if self.h_lo[v] > self.h_hi[v] {
            return Err(Error::OrderViolation {
                time,
                vertex: self.lo.region().vertex(seed.vertex).to_string(),
                lower: self.h_lo[v],
                upper: self.h_hi[v],
            });
        }
        Ok(())
    }
}

/// An exact sample from the stationary law of `variant` on `region`.
pub fn cftp_sample(region: &Arc<Region>, variant: &ChainVariant, rng_seed: u64) -> Result<Tiling> {
    cftp_run(region, variant, rng_seed, &CftpOptions::for_variant(variant), &mut |_, _| {}).map(|r| r.result)
}

/// CFTP with explicit options. `observer` sees the absolute time and seed of
/// every simulated step, epoch by epoch.
pub fn cftp_run(
    region: &Arc<Region>,
    variant: &ChainVariant,
    rng_seed: u64,
    opts: &CftpOptions,
    observer: &mut dyn FnMut(i64, &StepSeed),
) -> Result<CftpRun> {
    variant.validate()?;
    match opts.method {
        CftpMethod::Sandwich => sandwich_cftp(region, variant, rng_seed, opts, observer),
        CftpMethod::Exhaustive => {
            let flips = if variant.restrained_only() { FlipVariant::RestrainedFlips } else { FlipVariant::AllFlips };
            let graph = enumerate(region, flips, opts.node_cap)?;
            exhaustive_cftp(&graph, variant, rng_seed, opts, observer)
        }
    }
}

fn sandwich_cftp(
    region: &Arc<Region>,
    variant: &ChainVariant,
    rng_seed: u64,
    opts: &CftpOptions,
    observer: &mut dyn FnMut(i64, &StepSeed),
) -> Result<CftpRun> {
    let (lo, hi) = extremal_tilings(region, variant)?;
    let mut run = CftpRun {
        region: Arc::clone(region),
        variant: *variant,
        rng_seed,
        method: CftpMethod::Sandwich,
        epochs: Vec::new(),
        result: lo.clone(),
        total_steps: 0,
    };
    if lo == hi {
        return Ok(run);
    }
    let mut t = 1u64;
    loop {
        if run.total_steps + t > opts.budget {
            return Err(Error::BudgetExceeded { budget: opts.budget });
        }
        run.epochs.push(t);
        let mut pair = Sandwich::new(lo.clone(), hi.clone())?;
        for (k, seed) in past_seeds(region, rng_seed, t) {
            observer(-(k as i64), &seed);
            pair.step(&seed, variant, -(k as i64))?;
        }
        run.total_steps += t;
        if pair.coalesced() {
            run.result = pair.lo;
            return Ok(run);
        }
        t *= 2;
    }
}

/// CFTP over every node of `graph`, which must be the variant's flip graph.
pub fn exhaustive_cftp(
    graph: &TilingGraph,
    variant: &ChainVariant,
    rng_seed: u64,
    opts: &CftpOptions,
    observer: &mut dyn FnMut(i64, &StepSeed),
) -> Result<CftpRun> {
    variant.validate()?;
    let region = graph.region();
    let n = graph.num_nodes();
    let mut run = CftpRun {
        region: Arc::clone(region),
        variant: *variant,
        rng_seed,
        method: CftpMethod::Exhaustive,
        epochs: Vec::new(),
        result: graph.node(0).clone(),
        total_steps: 0,
    };
    if n == 1 {
        return Ok(run);
    }
    let kernel = StepTable::new(graph);
    let mut t = 1u64;
    loop {
        if run.total_steps + t > opts.budget {
            return Err(Error::BudgetExceeded { budget: opts.budget });
        }
        run.epochs.push(t);
        let mut states: Vec<u32> = (0..n as u32).collect();
        for (k, seed) in past_seeds(region, rng_seed, t) {
            observer(-(k as i64), &seed);
            for s in states.iter_mut() {
                *s = kernel.apply(*s, &seed, variant);
            }
            states.sort_unstable();
            states.dedup();
        }
        run.total_steps += t;
        if states.len() == 1 {
            run.result = graph.node(states[0]).clone();
            return Ok(run);
        }
        t *= 2;
    }
}

/// Per node and inner vertex, the flip available there and its target.
struct StepTable {
    pos: Vec<u32>,
    n_in: usize,
    table: Vec<Option<(FlipInfo, u32)>>,
}

impl StepTable {
    fn new(graph: &TilingGraph) -> Self {
        let region = graph.region();
        let inner = region.inner_vertices();
        let mut pos = vec![u32::MAX; region.num_vertices()];
        for (i, &v) in inner.iter().enumerate() {
            pos[v as usize] = i as u32;
        }
        let mut table = vec![None; graph.num_nodes() * inner.len()];
        for (i, t) in graph.nodes().iter().enumerate() {
            for (slot, &v) in inner.iter().enumerate() {
                if let Some(info) = t.flip_info(v).filter(|i| graph.variant().admits(i)) {
                    let target = graph.flip_target(i as u32, v).expect("flip graph is closed under its flips");
                    table[i * inner.len() + slot] = Some((info, target));
                }
            }
        }
        StepTable { pos, n_in: inner.len(), table }
    }

    fn apply(&self, s: u32, seed: &StepSeed, variant: &ChainVariant) -> u32 {
        let slot = self.pos[seed.vertex as usize] as usize;
        match self.table[s as usize * self.n_in + slot] {
            Some((info, target)) if variant.fires(&info, seed.coin) => target,
            _ => s,
        }
    }
}

/// Steps until the chains from the lowest and highest tilings meet when run
/// forward from time 0 with stream 0.
pub fn forward_coupling_time(region: &Arc<Region>, variant: &ChainVariant, rng_seed: u64, budget: u64) -> Result<u64> {
    variant.validate()?;
    let (lo, hi) = extremal_tilings(region, variant)?;
    let mut pair = Sandwich::new(lo, hi)?;
    if pair.coalesced() {
        return Ok(0);
    }
    for (i, seed) in SeedStream::new(region, rng_seed, 0).enumerate() {
        let t = i as u64 + 1;
        if t > budget {
            return Err(Error::BudgetExceeded { budget });
        }
        pair.step(&seed, variant, i as i64)?;
        if pair.coalesced() {
            return Ok(t);
        }
    }
    unreachable!("seed streams are infinite")
}

/// Seed of trial `trial` at size `n`, derived from the benchmark seed.
pub fn trial_seed(rng_seed: u64, n: u32, trial: u32) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(n as u64);
    rng.set_word_pos(2 * trial as u128);
    rng.next_u64()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingTimeSample {
    pub n: u32,
    pub n_tiles: usize,
    pub n_inner_vertices: usize,
    pub trial: u32,
    /// `None` when the trial ran out of budget.
    pub steps: Option<u64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeSummary {
    pub n: u32,
    pub n_tiles: usize,
    pub trials: usize,
    /// Trials that exceeded the budget; excluded from the mean.
    pub flagged: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub samples: Vec<CouplingTimeSample>,
    pub sizes: Vec<SizeSummary>,
    /// Log-log slope of mean coupling time against tile count, when at least
    /// two sizes have data.
    pub exponent: Option<f64>,
}

pub const BENCH_CSV_HEADER: &str = "n,N_tiles,N_inner_vertices,trial,steps,seed";

impl BenchReport {
    /// One line per trial; budget-exceeded trials have an empty `steps`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(BENCH_CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let steps = s.steps.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{},{},{}\n", s.n, s.n_tiles, s.n_inner_vertices, s.trial, steps, s.seed));
        }
        out
    }
}

/// Forward coupling times of `trials` independent trials on `make(n)` for
/// every `n` in `sizes`, in parallel; results come back in (size, trial)
/// order whatever the thread count.
pub fn benchmark_scaling(
    sizes: &[u32],
    trials: u32,
    variant: &ChainVariant,
    rng_seed: u64,
    budget: u64,
    make: impl Fn(u32) -> Result<Region> + Sync,
) -> Result<BenchReport> {
    variant.validate()?;
    let regions: Vec<Arc<Region>> = sizes.iter().map(|&n| make(n).map(Arc::new)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, u32)> = (0..sizes.len()).flat_map(|i| (0..trials).map(move |t| (i, t))).collect();
    let samples: Vec<CouplingTimeSample> = jobs
        .into_par_iter()
        .map(|(i, trial)| {
            let (n, region) = (sizes[i], &regions[i]);
            let seed = trial_seed(rng_seed, n, trial);
            let steps = match forward_coupling_time(region, variant, seed, budget) {
                Ok(s) => Some(s),
                Err(Error::BudgetExceeded { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(CouplingTimeSample {
                n,
                n_tiles: region.num_tiles(),
                n_inner_vertices: region.num_inner(),
                trial,
                steps,
                seed,
            })
        })
        .collect::<Result<_>>()?;
    let mut summaries = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        let rows: Vec<&CouplingTimeSample> = samples.iter().filter(|s| s.n == n).collect();
        let ok: Vec<f64> = rows.iter().filter_map(|s| s.steps).map(|x| x as f64).collect();
        let (mean, stderr) = if ok.is_empty() { (f64::NAN, f64::NAN) } else { mean_stderr(&ok) };
        summaries.push(SizeSummary {
            n,
            n_tiles: regions[i].num_tiles(),
            trials: rows.len(),
            flagged: rows.len() - ok.len(),
            mean,
            stderr,
        });
    }
    let pts: Vec<(f64, f64)> = summaries
        .iter()
        .filter(|s| s.mean.is_finite() && s.mean > 0.0)
        .map(|s| ((s.n_tiles as f64).ln(), s.mean.ln()))
        .collect();
    let exponent = (pts.len() >= 2).then(|| least_squares_slope(&pts));
    Ok(BenchReport { samples, sizes: summaries, exponent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::{make_lozenge_region, make_square_region};
    use num_rational::Rational64;

    fn lozenge(n: u32) -> Arc<Region> {
        Arc::new(make_lozenge_region(n).unwrap())
    }

    #[test]
    fn past_seeds_match_random_access() {
        let r = lozenge(3);
        for t in [1u64, 2, 8, 64] {
            let seq: Vec<(u64, StepSeed)> = past_seeds(&r, 7, t).collect();
            assert_eq!(seq.len() as u64, t);
            for (i, (k, seed)) in seq.iter().enumerate() {
                assert_eq!(*k, t - i as u64);
                assert_eq!(*seed, past_seed(&r, 7, *k));
            }
        }
    }

    #[test]
    fn single_tiling_region_takes_no_steps() {
        let r = lozenge(1);
        let run = cftp_run(&r, &ChainVariant::General, 1, &CftpOptions::default(), &mut |_, _| {}).unwrap();
        assert_eq!(run.total_steps, 0);
        assert!(run.epochs.is_empty());
        assert_eq!(forward_coupling_time(&r, &ChainVariant::General, 1, 10).unwrap(), 0);
    }

    #[test]
    fn epochs_reuse_the_same_seeds() {
        let r = lozenge(3);
        let mut seen: std::collections::HashMap<i64, StepSeed> = Default::default();
        let mut clash = 0;
        let run = cftp_run(&r, &ChainVariant::General, 11, &CftpOptions::default(), &mut |t, s| {
            if let Some(prev) = seen.insert(t, *s) {
                clash += (prev != *s) as usize;
            }
        })
        .unwrap();
        assert!(run.epochs.len() >= 2);
        assert_eq!(clash, 0);
        assert_eq!(seen.len() as u64, *run.epochs.last().unwrap());
    }

    #[test]
    fn sandwich_and_exhaustive_agree() {
        // Both methods see the same randomness, so when the sandwich is valid
        // they return the same tiling.
        let r = lozenge(2);
        for v in [ChainVariant::General, ChainVariant::Restrained, ChainVariant::Weighted(Rational64::new(1, 2))] {
            for seed in 0..40 {
                let a = cftp_run(&r, &v, seed, &CftpOptions::default(), &mut |_, _| {}).unwrap();
                let b = cftp_run(&r, &v, seed, &CftpOptions::exhaustive(), &mut |_, _| {}).unwrap();
                assert_eq!(a.result, b.result, "{v} seed {seed}");
                assert!(b.epochs.len() >= a.epochs.len());
            }
        }
    }

    #[test]
    fn heavy_fish_weights_break_the_sandwich() {
        let v = ChainVariant::Weighted(Rational64::new(2, 1));
        assert_eq!(CftpMethod::for_variant(&v), CftpMethod::Exhaustive);
        assert_eq!(CftpMethod::for_variant(&ChainVariant::Weighted(Rational64::new(1, 1))), CftpMethod::Sandwich);
        let r = lozenge(3);
        let broken = (0..50).any(|seed| {
            matches!(
                cftp_run(&r, &v, seed, &CftpOptions::default(), &mut |_, _| {}),
                Err(Error::OrderViolation { .. })
            )
        });
        assert!(broken);
        assert!(cftp_sample(&lozenge(2), &v, 0).is_ok());
    }

    #[test]
    fn restrained_samples_are_restrained() {
        let r = lozenge(3);
        for seed in 0..10 {
            assert!(cftp_sample(&r, &ChainVariant::Restrained, seed).unwrap().is_restrained());
        }
    }

    #[test]
    fn budget_is_enforced() {
        let r = lozenge(4);
        let opts = CftpOptions { budget: 4, ..CftpOptions::default() };
        let err = cftp_run(&r, &ChainVariant::General, 0, &opts, &mut |_, _| {}).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { budget: 4 }));
        assert!(matches!(
            forward_coupling_time(&r, &ChainVariant::General, 0, 4),
            Err(Error::BudgetExceeded { budget: 4 })
        ));
    }

    #[test]
    fn forward_time_is_deterministic() {
        let r = lozenge(3);
        let a = forward_coupling_time(&r, &ChainVariant::General, 5, DEFAULT_BUDGET).unwrap();
        assert_eq!(a, forward_coupling_time(&r, &ChainVariant::General, 5, DEFAULT_BUDGET).unwrap());
        assert!(a > 0);
    }

    #[test]
    fn benchmark_rows_are_ordered_and_flagged() {
        let rep = benchmark_scaling(&[2, 3], 5, &ChainVariant::General, 9, DEFAULT_BUDGET, make_square_region).unwrap();
        let keys: Vec<(u32, u32)> = rep.samples.iter().map(|s| (s.n, s.trial)).collect();
        let want: Vec<(u32, u32)> = [2, 3].iter().flat_map(|&n| (0..5).map(move |t| (n, t))).collect();
        assert_eq!(keys, want);
        assert!(rep.exponent.is_some());
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 11);
        assert!(csv.starts_with(BENCH_CSV_HEADER));

        let single = benchmark_scaling(&[3], 3, &ChainVariant::General, 9, DEFAULT_BUDGET, make_square_region).unwrap();
        assert_eq!(single.exponent, None);
        assert_eq!(single.samples[..], rep.samples[5..8]);

        let starved = benchmark_scaling(&[3], 3, &ChainVariant::General, 9, 1, make_square_region).unwrap();
        assert_eq!(starved.sizes[0].flagged, 3);
        assert!(starved.to_csv().lines().nth(1).unwrap().contains(",,"));
    }
}
