//! Driver of the rewrite rules: expands the `k`-point function of
//! `N^{-1/2}:Φ²:` into closed terms up to a given order plus a remainder.

use std::cmp::Reverse;
use std::collections::BTreeMap;

use num_rational::Rational64;
use serde::Serialize;

use super::canon::canonical;
use super::rewrite::{rewrite_class1, rewrite_class2};
use super::{eval, Edge, IbpGraph, ParityClass, Vertex};
use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::oracle::Point;

/// A term of the expansion: `coefficient · N^{-power/2} · I_G`.
pub type Term = IbpGraph;

/// Abort threshold on the number of distinct terms waiting to be rewritten.
pub const MAX_PENDING_TERMS: usize = 200_000;

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionResult {
    pub k: usize,
    pub order: u32,
    /// Closed terms keyed by the exponent of `N^{-1/2}`.
    pub closed_terms: BTreeMap<u32, Vec<Term>>,
    /// Open terms beyond the requested order, left unevaluated.
    pub remainder_terms: Vec<Term>,
}

impl ExpansionResult {
    /// Largest exponent of `N^{-1/2}` kept among the closed terms.
    pub fn max_power(&self) -> u32 {
        max_power(self.k, self.order)
    }

    pub fn lowest_power(&self) -> Option<u32> {
        self.closed_terms.keys().next().copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.closed_terms.values().flatten()
    }

    /// Sum of the closed terms at one power, without the `N` factor.
    pub fn power_sum(&self, power: u32, kernels: &KernelSet, points: &[Point]) -> Result<f64> {
        let mut s = 0.0;
        for t in self.closed_terms.get(&power).into_iter().flatten() {
            s += eval::evaluate(t, kernels, points)?;
        }
        Ok(s)
    }

    /// Truncated expansion `Σ_h N^{-h/2} · power_sum(h)`.
    pub fn value(&self, n_comp: f64, kernels: &KernelSet, points: &[Point]) -> Result<f64> {
        let mut s = 0.0;
        for &h in self.closed_terms.keys() {
            s += n_comp.powf(-(h as f64) / 2.0) * self.power_sum(h, kernels, points)?;
        }
        Ok(s)
    }
}

fn max_power(k: usize, order: u32) -> u32 {
    2 * order + (k % 2) as u32
}

type Key = (u32, Reverse<u32>, Vec<Vertex>, Vec<Edge>);

fn key_of(g: &IbpGraph) -> (Key, Rational64) {
    let c = canonical(g);
    ((c.power, Reverse(c.n_phi()), c.vertices, c.edges), c.coefficient)
}

fn from_key(key: Key, coefficient: Rational64) -> IbpGraph {
    let (power, _, vertices, edges) = key;
    IbpGraph { vertices, edges, coefficient, power }
}

/// Expands `E[Π_{i<k} N^{-1/2}:Φ²:(x_i)]` to order `N^{-order}` beyond its
/// leading power. Terms are processed by increasing power and decreasing field
/// count, so every term is fully merged before it is rewritten.
pub fn expand(k: usize, order: u32) -> Result<ExpansionResult> {
    if !(1..=4).contains(&k) || order > 1 {
        return Err(Error::OutOfRange(format!("expansion supported for k in 1..=4, order in 0..=1; got k={k}, order={order}")));
    }
    let h_max = max_power(k, order);
    let mut pending: BTreeMap<Key, Rational64> = BTreeMap::new();
    let (key, c) = key_of(&IbpGraph::start(k));
    pending.insert(key, c);

    let mut closed: BTreeMap<u32, Vec<Term>> = BTreeMap::new();
    let mut remainder = Vec::new();
    while let Some((key, coefficient)) = pending.pop_first() {
        if coefficient == Rational64::from_integer(0) {
            continue;
        }
        let g = from_key(key, coefficient);
        if g.is_closed() {
            if g.power % 2 != (k % 2) as u32 {
                return Err(Error::InvalidGraph(format!("closed term at power of wrong parity: {g}")));
            }
            closed.entry(g.power).or_default().push(g);
            continue;
        }
        if g.power > h_max {
            remainder.push(g);
            continue;
        }
        let out = match g.parity_class() {
            Some(ParityClass::Class1) => rewrite_class1(&g)?,
            Some(ParityClass::Class2) => rewrite_class2(&g)?,
            None => return Err(Error::InvalidGraph(format!("no parity class: {g}"))),
        };
        for t in out {
            let (key, c) = key_of(&t);
            *pending.entry(key).or_insert(Rational64::from_integer(0)) += c;
        }
        if pending.len() > MAX_PENDING_TERMS {
            return Err(Error::SizeGuard(format!("more than {MAX_PENDING_TERMS} pending terms")));
        }
    }
    // closed terms beyond the requested order belong to the remainder
    let beyond: Vec<u32> = closed.range(h_max + 1..).map(|(&h, _)| h).collect();
    for h in beyond {
        remainder.extend(closed.remove(&h).unwrap_or_default());
    }
    Ok(ExpansionResult { k, order, closed_terms: closed, remainder_terms: remainder })
}
