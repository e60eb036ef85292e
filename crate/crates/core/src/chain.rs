//! One-step kernels of the three flip chains, driven by shared randomness.
//!
//! A [`StepSeed`] (an inner vertex and a single uniform coin) determines the
//! transition applied to every state, so any number of copies stepped with
//! the same seeds form a grand coupling.
//!
//! At the selected vertex at most one flip is available. It fires when the
//! coin falls in its firing interval: `[0, p)` for a flip that lowers the
//! vertex, `[1 - p, 1)` for one that raises it. `p` is `1/2` for the general
//! chain. The weighted chain uses `μ/(1+μ)` for a flip creating fish tiles,
//! `1/(1+μ)` for one destroying them and `1/2` otherwise, where `μ = λ^k`
//! for a flip changing the fish count by `k` (one or two). The restrained
//! chain uses `1/2` for restrained flips and never fires any other flip.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::region::Region;
use crate::tiling::{Direction, FlipInfo, Tiling};

/// Coins carry 53 random bits.
pub const COIN_BITS: u32 = 53;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChainVariant {
    General,
    Weighted(Rational64),
    Restrained,
}

impl ChainVariant {
    pub fn weighted(lambda: Rational64) -> Result<ChainVariant> {
        let v = ChainVariant::Weighted(lambda);
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ChainVariant::Weighted(l) if *l <= Rational64::zero() => {
                Err(Error::InvalidParameter(format!("fish weight must be positive, got {l}")))
            }
            _ => Ok(()),
        }
    }

    /// Probability that `info` fires when its vertex is selected.
    pub fn fire_probability(&self, info: &FlipInfo) -> Rational64 {
        let half = Rational64::new(1, 2);
        match *self {
            ChainVariant::General => half,
            ChainVariant::Restrained => {
                if info.restrained {
                    half
                } else {
                    Rational64::zero()
                }
            }
            ChainVariant::Weighted(l) => {
                if info.fish_delta == 0 {
                    return half;
                }
                // A flip changing the fish count by `d` is weighted by `λ^|d|`.
                let w = l.pow(info.fish_delta.unsigned_abs() as i32);
                if info.fish_delta > 0 {
                    w / (Rational64::one() + w)
                } else {
                    Rational64::one() / (Rational64::one() + w)
                }
            }
        }
    }

    /// Coin interval `[lo, hi)` on which `info` fires.
    pub fn firing_interval(&self, info: &FlipInfo) -> (Rational64, Rational64) {
        let p = self.fire_probability(info);
        match info.direction {
            Direction::Lower => (Rational64::zero(), p),
            Direction::Raise => (Rational64::one() - p, Rational64::one()),
        }
    }

    pub fn fires(&self, info: &FlipInfo, coin: f64) -> bool {
        let p = self.fire_probability(info);
        if p.is_zero() {
            return false;
        }
        match info.direction {
            Direction::Lower => coin_below(coin, p),
            Direction::Raise => !coin_below(coin, Rational64::one() - p),
        }
    }

    /// Whether flips of this variant are all restrained flips.
    pub fn restrained_only(&self) -> bool {
        matches!(self, ChainVariant::Restrained)
    }
}

/// `coin < r`, exact for coins that are multiples of `2^-53`.
fn coin_below(coin: f64, r: Rational64) -> bool {
    let k = (coin * (1u64 << COIN_BITS) as f64).floor() as i128;
    let (num, den) = (*r.numer() as i128, *r.denom() as i128);
    k * den < num << COIN_BITS
}

impl fmt::Display for ChainVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainVariant::General => f.write_str("general"),
            ChainVariant::Restrained => f.write_str("restrained"),
            ChainVariant::Weighted(l) => write!(f, "weighted:{l}"),
        }
    }
}

impl FromStr for ChainVariant {
    type Err = Error;

    /// `general`, `restrained`, or `weighted:<λ>` with λ an integer, a
    /// fraction `p/q` or a finite decimal.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(ChainVariant::General),
            "restrained" => Ok(ChainVariant::Restrained),
            _ => {
                let lam = s
                    .strip_prefix("weighted:")
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown chain variant {s:?}")))?;
                ChainVariant::weighted(parse_rational(lam)?)
            }
        }
    }
}

/// Parse `p/q`, an integer, or a finite decimal like `0.25` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational64> {
    let bad = || Error::InvalidParameter(format!("not a rational number: {s:?}"));
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 15 || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let i: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().map_err(|_| bad())? };
        let f: i64 = frac.parse().map_err(|_| bad())?;
        let den = 10i64.pow(frac.len() as u32);
        let mag = i.abs().checked_mul(den).and_then(|x| x.checked_add(f)).ok_or_else(bad)?;
        return Ok(Rational64::new(if neg { -mag } else { mag }, den));
    }
    s.parse::<i64>().map(Rational64::from_integer).map_err(|_| bad())
}

/// Shared randomness of one chain step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSeed {
    /// Region vertex id of the selected inner vertex.
    pub vertex: u32,
    /// Uniform in `[0, 1)`.
    pub coin: f64,
}

impl StepSeed {
    /// Seed from two raw 64-bit words: the first selects the inner vertex by
    /// multiply-high, the top 53 bits of the second form the coin.
    pub fn from_words(region: &Region, x: u64, y: u64) -> StepSeed {
        let inner = region.inner_vertices();
        let i = ((x as u128 * inner.len() as u128) >> 64) as usize;
        StepSeed { vertex: inner[i], coin: (y >> (64 - COIN_BITS)) as f64 / (1u64 << COIN_BITS) as f64 }
    }
}

/// Which flip, if any, `seed` fires in `tiling`.
pub fn selected_flip(tiling: &Tiling, seed: &StepSeed, variant: &ChainVariant) -> Result<Option<FlipInfo>> {
    let region = tiling.region();
    if (seed.vertex as usize) >= region.num_vertices() || !region.is_inner(seed.vertex) {
        return Err(Error::NotInner(format!("#{}", seed.vertex)));
    }
    Ok(tiling.flip_info(seed.vertex).filter(|info| variant.fires(info, seed.coin)))
}

/// Apply one step in place; returns the flip performed.
pub fn step_in_place(tiling: &mut Tiling, seed: &StepSeed, variant: &ChainVariant) -> Result<Option<FlipInfo>> {
    let fired = selected_flip(tiling, seed, variant)?;
    if let Some(info) = fired {
        tiling.swap_at(info.vertex);
    }
    Ok(fired)
}

pub fn step(tiling: &Tiling, seed: &StepSeed, variant: &ChainVariant) -> Result<Tiling> {
    let mut next = tiling.clone();
    step_in_place(&mut next, seed, variant)?;
    Ok(next)
}

pub fn coupled_step(
    pair: (&Tiling, &Tiling),
    seed: &StepSeed,
    variant: &ChainVariant,
) -> Result<(Tiling, Tiling)> {
    if **pair.0.region() != **pair.1.region() {
        return Err(Error::RegionMismatch);
    }
    Ok((step(pair.0, seed, variant)?, step(pair.1, seed, variant)?))
}

/// Deterministic stream of step seeds for one region.
///
/// Backed by ChaCha8 keyed by `rng_seed`; `stream` selects an independent
/// sequence and every step consumes exactly two 64-bit words, so the seed
/// for step `i` of a stream can be reached directly with [`SeedStream::at`].
pub struct SeedStream<'r> {
    region: &'r Region,
    rng: ChaCha8Rng,
}

impl<'r> SeedStream<'r> {
    pub fn new(region: &'r Region, rng_seed: u64, stream: u64) -> Self {
        Self::at(region, rng_seed, stream, 0)
    }

    pub fn at(region: &'r Region, rng_seed: u64, stream: u64, step: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(stream);
        rng.set_word_pos(step as u128 * 4);
        SeedStream { region, rng }
    }
}

impl Iterator for SeedStream<'_> {
    type Item = StepSeed;

    fn next(&mut self) -> Option<StepSeed> {
        let x = self.rng.next_u64();
        let y = self.rng.next_u64();
        Some(StepSeed::from_words(self.region, x, y))
    }
}

/// Run `steps` steps from `tiling` with seeds from stream 0 of `rng_seed`.
pub fn run(tiling: &Tiling, variant: &ChainVariant, steps: u64, rng_seed: u64) -> Result<Tiling> {
    variant.validate()?;
    let mut t = tiling.clone();
    if t.region().num_inner() == 0 {
        return Ok(t);
    }
    let region = std::sync::Arc::clone(t.region());
    for seed in SeedStream::new(&region, rng_seed, 0).take(steps as usize) {
        step_in_place(&mut t, &seed, variant)?;
    }
    Ok(t)
}
