//! Randomized invariant campaigns.
//!
//! Each suite counts the operations it checked and the violations it saw;
//! the first violation of each suite is kept as a diagnostic.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cftp::{cftp_run, extremal_tilings, past_seed, CftpOptions};
use crate::chain::{ChainVariant, SeedStream, StepSeed};
use crate::error::{Error, Result};
use crate::height::height_field;
use crate::region::{make_lozenge_region, make_nonflat_lozenge, make_square_region, Region};
use crate::tiling::find_tiling;

pub const VERIFY_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub operations: u64,
    pub violations: u64,
    pub first_violation: Option<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        SuiteReport { name: name.into(), operations: 0, violations: 0, first_violation: None }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.operations += 1;
        if !ok {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(what());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub seed: u64,
    pub operations_per_suite: u64,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }
}

pub const SUITES: [&str; 6] =
    ["flip_involution", "height_consistency", "boundary_invariance", "fish_delta_unit", "order_preservation", "cftp_seed_reuse"];

/// Regions the campaigns cycle through.
pub fn campaign_regions() -> Result<Vec<Arc<Region>>> {
    let mut out = Vec::new();
    for n in 2..=6 {
        out.push(make_lozenge_region(n)?);
    }
    for n in [3, 5, 8] {
        out.push(make_square_region(n)?);
    }
    for n in [2, 3, 5] {
        out.push(make_nonflat_lozenge(n)?);
    }
    Ok(out.into_iter().map(Arc::new).collect())
}

/// Run every suite with at least `ops` operations each.
pub fn run_campaign(ops: u64, seed: u64) -> Result<VerifyReport> {
    let regions = campaign_regions()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [mut inv, mut height, mut boundary, mut fish] = [0, 1, 2, 3].map(|i| SuiteReport::new(SUITES[i]));
    let mut round = 0usize;
    while inv.operations < ops {
        let region = &regions[round % regions.len()];
        let budget = (ops - inv.operations).min(50_000);
        flip_walk(region, budget, &mut rng, [&mut inv, &mut height, &mut boundary, &mut fish])?;
        round += 1;
    }
    let order = order_campaign(&regions, ops, seed)?;
    let reuse = reuse_campaign(&regions, ops, seed)?;
    Ok(VerifyReport {
        schema_version: VERIFY_SCHEMA_VERSION,
        seed,
        operations_per_suite: ops,
        suites: vec![inv, height, boundary, fish, order, reuse],
    })
}

/// Random flips from the region's start tiling; every performed flip is
/// one operation for each of the four flip suites.
fn flip_walk(region: &Arc<Region>, flips: u64, rng: &mut ChaCha8Rng, suites: [&mut SuiteReport; 4]) -> Result<()> {
    let [inv, height, boundary, fish] = suites;
    let mut t = find_tiling(region)?;
    let h0 = height_field(&t)?;
    let mut h: Vec<i32> = h0.values().to_vec();
    let inner = region.inner_vertices();
    let boundary_vs: Vec<u32> = region.boundary_vertices().collect();
    let mut done = 0;
    let mut idle = 0;
    while done < flips {
        let v = inner[rng.gen_range(0..inner.len())];
        let Some(info) = t.flip_info(v) else {
            idle += 1;
            if idle > 1000 * inner.len() {
                // Frozen region: nothing to flip.
                return Ok(());
            }
            continue;
        };
        let before = t.clone();
        let fish_before = t.fish_count() as i64;
        t.flip_in_place(v)?;
        done += 1;

        let back = t.flip_info(v);
        let mut again = t.clone();
        let restored = back.is_some_and(|b| b.direction == info.direction.reverse()) && {
            again.flip_in_place(v)?;
            again == before
        };
        inv.check(restored, || format!("flip at {} in {:?} is not undone by flipping again", region.vertex(v), region.family()));

        h[v as usize] += 3 * info.direction.sign();
        match height_field(&t) {
            Ok(f) => height.check(f.values() == &h[..], || {
                format!("heights after flip at {} differ from the ±3 update", region.vertex(v))
            }),
            Err(e) => height.check(false, || e.to_string()),
        }
        boundary.check(boundary_vs.iter().all(|&b| h[b as usize] == h0.get(b)), || {
            format!("boundary height changed by flip at {}", region.vertex(v))
        });

        let actual = t.fish_count() as i64 - fish_before;
        fish.check(actual == info.fish_delta as i64 && actual.abs() <= 1, || {
            format!("flip at {} changes the fish count by {actual} (reported {})", region.vertex(v), info.fish_delta)
        });
    }
    Ok(())
}

fn variants() -> [ChainVariant; 4] {
    use num_rational::Rational64;
    [
        ChainVariant::General,
        ChainVariant::Restrained,
        ChainVariant::Weighted(Rational64::new(1, 3)),
        ChainVariant::Weighted(Rational64::new(1, 10)),
    ]
}

/// Coupled steps of the extremal pair; each step checks the pointwise
/// order at the updated vertex, the only one that can change.
fn order_campaign(regions: &[Arc<Region>], ops: u64, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("order_preservation");
    let mut round = 0u64;
    while rep.operations < ops {
        let region = &regions[round as usize % regions.len()];
        let variant = variants()[(round / regions.len() as u64) as usize % 4];
        let (mut lo, mut hi) = match extremal_tilings(region, &variant) {
            Ok(pair) => pair,
            // Some regions have no restrained tiling.
            Err(Error::NotTileable) => {
                round += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut h_lo = height_field(&lo)?.values().to_vec();
        let mut h_hi = height_field(&hi)?.values().to_vec();
        rep.check(h_lo.iter().zip(&h_hi).all(|(a, b)| a <= b), || format!("extremal tilings unordered on {region:?}"));
        let steps = (ops - rep.operations).min(20_000);
        for s in SeedStream::new(region, seed ^ round, 0).take(steps as usize) {
            for (t, h) in [(&mut lo, &mut h_lo), (&mut hi, &mut h_hi)] {
                if let Some(info) = crate::chain::step_in_place(t, &s, &variant)? {
                    h[s.vertex as usize] += 3 * info.direction.sign();
                }
            }
            let v = s.vertex as usize;
            rep.check(h_lo[v] <= h_hi[v], || {
                format!("{variant} on {:?} n={}: order broken at {}", region.family(), region.size_param(), region.vertex(s.vertex))
            });
        }
        round += 1;
    }
    Ok(rep)
}

/// Every step CFTP simulates is compared with the seed of the same absolute
/// time from earlier epochs and with direct random access.
fn reuse_campaign(regions: &[Arc<Region>], ops: u64, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("cftp_seed_reuse");
    let mut round = 0u64;
    let small: Vec<&Arc<Region>> = regions.iter().filter(|r| r.num_tiles() <= 25).collect();
    while rep.operations < ops {
        let region = small[round as usize % small.len()];
        let variant = variants()[round as usize % 4];
        let rng_seed = seed.wrapping_add(round);
        let mut seen: HashMap<i64, StepSeed> = HashMap::new();
        let mut observed = Vec::new();
        match cftp_run(region, &variant, rng_seed, &CftpOptions::default(), &mut |t, s| observed.push((t, *s))) {
            Ok(_) | Err(Error::NotTileable) => {}
            Err(e) => return Err(e),
        }
        for (t, s) in observed {
            let first = *seen.entry(t).or_insert(s);
            rep.check(first == s && past_seed(region, rng_seed, (-t) as u64) == s, || {
                format!("seed at time {t} differs between epochs (rng seed {rng_seed})")
            });
        }
        round += 1;
    }
    Ok(rep)
}
