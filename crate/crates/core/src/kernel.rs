//! Exact transition kernels on enumerated flip graphs: stationary laws,
//! detailed balance and mixing times.


use crate::chain::ChainVariant;
use crate::error::{Error, Result};
use crate::graph::TilingGraph;
use crate::scalar::Scalar;

pub const DEFAULT_MIXING_CAP: usize = 5_000;

/// Sparse transition kernel. Off-diagonal entries come from flip edges; the
/// diagonal holds the holding probability.
#[derive(Clone, Debug)]
pub struct Kernel<S> {
    rows: Vec<Vec<(u32, S)>>,
    diag: Vec<S>,
}

impl<S: Scalar> Kernel<S> {
    /// Kernel of `variant` on the states of `graph`. Every selected vertex has
    /// probability `1 / N_in`; a flip then fires with its firing probability.
    pub fn new(graph: &TilingGraph, variant: &ChainVariant) -> Result<Kernel<S>> {
        variant.validate()?;
        let n = graph.num_nodes();
        let n_in = graph.region().num_inner();
        let mut rows: Vec<Vec<(u32, S)>> = vec![Vec::new(); n];
        if n_in > 0 {
            let pick = S::from_ratio(1, n_in as i64);
            for e in graph.edges() {
                let fwd = variant.fire_probability(&e.info);
                let back = variant.fire_probability(&crate::tiling::FlipInfo {
                    direction: e.info.direction.reverse(),
                    fish_delta: -e.info.fish_delta,
                    ..e.info
                });
                if !num_traits::Zero::is_zero(&fwd) {
                    rows[e.a as usize].push((e.b, pick.clone() * S::from_rational(fwd)));
                }
                if !num_traits::Zero::is_zero(&back) {
                    rows[e.b as usize].push((e.a, pick.clone() * S::from_rational(back)));
                }
            }
        }
        let diag = rows
            .iter_mut()
            .map(|r| {
                r.sort_by_key(|&(j, _)| j);
                let mut stay = S::one();
                for (_, p) in r.iter() {
                    stay -= p.clone();
                }
                stay
            })
            .collect();
        Ok(Kernel { rows, diag })
    }

    pub fn num_states(&self) -> usize {
        self.diag.len()
    }

    pub fn row(&self, i: u32) -> &[(u32, S)] {
        &self.rows[i as usize]
    }

    pub fn holding(&self, i: u32) -> &S {
        &self.diag[i as usize]
    }

    pub fn entry(&self, i: u32, j: u32) -> S {
        if i == j {
            return self.diag[i as usize].clone();
        }
        self.rows[i as usize].iter().find(|&&(k, _)| k == j).map(|(_, p)| p.clone()).unwrap_or_else(S::zero)
    }

    /// Dense matrix, row-major. For small state spaces only.
    pub fn to_dense(&self) -> Vec<Vec<S>> {
        let n = self.num_states();
        let mut m = vec![vec![S::zero(); n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i].clone();
            for (j, p) in &self.rows[i] {
                m[i][*j as usize] = p.clone();
            }
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.num_states() as u32).all(|i| self.row(i).iter().all(|(j, p)| self.entry(*j, i) == *p))
    }

    /// `π(i) P(i,j) = π(j) P(j,i)` for every pair, checked entrywise.
    pub fn satisfies_detailed_balance(&self, pi: &[S]) -> bool {
        (0..self.num_states()).all(|i| {
            self.rows[i].iter().all(|(j, p)| {
                let back = self.entry(*j, i as u32);
                pi[i].clone() * p.clone() == pi[*j as usize].clone() * back
            })
        })
    }

    /// One step of the distribution: `μ ↦ μ P`.
    pub fn push_forward(&self, mu: &[S]) -> Vec<S> {
        let mut out: Vec<S> = mu.iter().zip(&self.diag).map(|(m, d)| m.clone() * d.clone()).collect();
        for (i, m) in mu.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            for (j, p) in &self.rows[i] {
                out[*j as usize] += m.clone() * p.clone();
            }
        }
        out
    }

    /// Stationary law of the reversible kernel, built along a spanning tree
    /// from detailed balance and then checked on every edge.
    pub fn stationary(&self) -> Result<Vec<S>> {
        let n = self.num_states();
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut w: Vec<Option<S>> = vec![None; n];
        w[0] = Some(S::one());
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let wi = w[i].clone().unwrap();
            for (j, p) in &self.rows[i] {
                let j = *j as usize;
                if w[j].is_none() {
                    let back = self.entry(j as u32, i as u32);
                    if back.is_zero() {
                        return Err(Error::NotErgodic(format!("transition {i}→{j} has no reverse")));
                    }
                    w[j] = Some(wi.clone() * p.clone() / back);
                    queue.push_back(j);
                }
            }
        }
        if let Some(i) = w.iter().position(Option::is_none) {
            return Err(Error::NotErgodic(format!("state {i} is unreachable from state 0")));
        }
        let mut total = S::zero();
        for x in w.iter().flatten() {
            total += x.clone();
        }
        let pi: Vec<S> = w.into_iter().map(|x| x.unwrap() / total.clone()).collect();
        if S::is_exact() && !self.satisfies_detailed_balance(&pi) {
            return Err(Error::NotErgodic("kernel is not reversible".into()));
        }
        Ok(pi)
    }
}

/// Exact stationary law of `variant` on the states of `graph`.
pub fn exact_stationary<S: Scalar>(graph: &TilingGraph, variant: &ChainVariant) -> Result<Vec<S>> {
    Kernel::<S>::new(graph, variant)?.stationary()
}

/// `λ^{#fish} / Z` over the nodes of `graph`.
pub fn fish_weighted_law<S: Scalar>(graph: &TilingGraph, lambda: num_rational::Rational64) -> Vec<S> {
    let lam = S::from_rational(lambda);
    let w: Vec<S> = graph
        .nodes()
        .iter()
        .map(|t| {
            let mut x = S::one();
            for _ in 0..t.fish_count() {
                x *= lam.clone();
            }
            x
        })
        .collect();
    let mut z = S::zero();
    for x in &w {
        z += x.clone();
    }
    w.into_iter().map(|x| x / z.clone()).collect()
}

pub fn total_variation<S: Scalar>(p: &[S], q: &[S]) -> S {
    let mut s = S::zero();
    for (a, b) in p.iter().zip(q) {
        s += (a.clone() - b.clone()).abs();
    }
    s / S::from_usize(2)
}

/// Least `t` such that the worst-start total-variation distance to the
/// stationary law is at most `eps`. Distance to stationarity is
/// nonincreasing in `t`, so the first such `t` holds for all later times.
pub fn exact_mixing_time<S: Scalar>(
    graph: &TilingGraph,
    variant: &ChainVariant,
    eps: &S,
    cap: usize,
    max_steps: u64,
) -> Result<u64> {
    if *eps < S::zero() || *eps > S::one() {
        return Err(Error::InvalidParameter("eps must lie in [0, 1]".into()));
    }
    if graph.num_nodes() > cap {
        return Err(Error::CapExceeded { cap });
    }
    if *eps >= S::one() {
        return Ok(0);
    }
    let kernel = Kernel::<S>::new(graph, variant)?;
    let pi = kernel.stationary()?;
    let n = kernel.num_states();
    let mut worst = 0;
    for x in 0..n {
        let mut mu = vec![S::zero(); n];
        mu[x] = S::one();
        let mut t = 0u64;
        while total_variation(&mu, &pi) > *eps {
            if t >= max_steps {
                return Err(Error::BudgetExceeded { budget: max_steps });
            }
            mu = kernel.push_forward(&mu);
            t += 1;
        }
        worst = worst.max(t);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{enumerate, DEFAULT_NODE_CAP};
    use crate::region::make_lozenge_region;
    use crate::scalar::Exact;
    use crate::tiling::FlipVariant;
    use num_rational::Rational64;
    use num_traits::{One, Zero};
    use std::sync::Arc;

    fn graph(n: u32, v: FlipVariant) -> TilingGraph {
        enumerate(&Arc::new(make_lozenge_region(n).unwrap()), v, DEFAULT_NODE_CAP).unwrap()
    }

    #[test]
    fn rows_are_stochastic() {
        let g = graph(2, FlipVariant::AllFlips);
        let k = Kernel::<Exact>::new(&g, &ChainVariant::Weighted(Rational64::new(2, 5))).unwrap();
        for i in 0..k.num_states() as u32 {
            let mut s = k.holding(i).clone();
            assert!(s >= Exact::zero());
            for (_, p) in k.row(i) {
                s += p.clone();
            }
            assert_eq!(s, Exact::one());
        }
    }

    #[test]
    fn general_law_is_uniform() {
        let g = graph(2, FlipVariant::AllFlips);
        let pi = exact_stationary::<Exact>(&g, &ChainVariant::General).unwrap();
        let u = Exact::from_ratio(1, g.num_nodes() as i64);
        assert!(pi.iter().all(|p| *p == u));
    }

    #[test]
    fn weighted_law_matches_fish_weights() {
        let g = graph(2, FlipVariant::AllFlips);
        let lam = Rational64::new(1, 2);
        let pi = exact_stationary::<Exact>(&g, &ChainVariant::Weighted(lam)).unwrap();
        assert_eq!(pi, fish_weighted_law::<Exact>(&g, lam));
    }

    #[test]
    fn restrained_variant_on_full_graph_is_reducible() {
        let g = graph(2, FlipVariant::AllFlips);
        assert!(matches!(exact_stationary::<Exact>(&g, &ChainVariant::Restrained), Err(Error::NotErgodic(_))));
    }

    #[test]
    fn eps_one_mixes_immediately() {
        let g = graph(2, FlipVariant::AllFlips);
        assert_eq!(exact_mixing_time(&g, &ChainVariant::General, &1.0f64, 5_000, 1 << 20).unwrap(), 0);
        assert!(exact_mixing_time(&g, &ChainVariant::General, &0.25f64, 3, 1 << 20).is_err());
    }

    #[test]
    fn float_and_exact_laws_agree() {
        let g = graph(3, FlipVariant::RestrainedFlips);
        let a = exact_stationary::<f64>(&g, &ChainVariant::Restrained).unwrap();
        let b = exact_stationary::<f32>(&g, &ChainVariant::Restrained).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - 1.0 / 257.0).abs() < 1e-12);
            assert!((*y as f64 - x).abs() < 1e-6);
        }
    }
}
