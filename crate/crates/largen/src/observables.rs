//! Wick-renormalized O(N)-invariant observables as lattice polynomials of Φ.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, ScalarLattice};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WickContext {
    pub n_comp: usize,
    pub a_eps: f64,
}

impl WickContext {
    pub fn new(n_comp: usize, a_eps: f64) -> Result<Self> {
        if n_comp == 0 {
            return Err(Error::invalid("model.N", "component count must be at least 1"));
        }
        if !(a_eps > 0.0) {
            return Err(Error::invalid("a_eps", "Wick constant must be positive"));
        }
        Ok(Self { n_comp, a_eps })
    }
}

/// Highest Wick power accepted as an observable id.
pub const MAX_Q_ORDER: u32 = 8;

/// Observable identifiers used in configs and CSV headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ObservableId {
    /// `N^{-n/2} :(Φ²)ⁿ:`
    Q(u32),
    /// `N^{-1/2} :Φ_i Φ²:` (1-based component).
    Mixed(usize),
    /// `√N (Φ_i − Z_i)` (1-based component).
    Fluct(usize),
}

impl fmt::Display for ObservableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableId::Q(n) => write!(f, "Q{n}"),
            ObservableId::Mixed(i) => write!(f, "mixed_{i}"),
            ObservableId::Fluct(i) => write!(f, "fluct_{i}"),
        }
    }
}

impl FromStr for ObservableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid("observables", format!("unknown observable `{s}`"));
        if let Some(rest) = s.strip_prefix("mixed_") {
            let i: usize = rest.parse().map_err(|_| bad())?;
            return if i >= 1 { Ok(ObservableId::Mixed(i)) } else { Err(bad()) };
        }
        if let Some(rest) = s.strip_prefix("fluct_") {
            let i: usize = rest.parse().map_err(|_| bad())?;
            return if i >= 1 { Ok(ObservableId::Fluct(i)) } else { Err(bad()) };
        }
        if let Some(rest) = s.strip_prefix('Q') {
            let n: u32 = rest.parse().map_err(|_| bad())?;
            return if (1..=MAX_Q_ORDER).contains(&n) { Ok(ObservableId::Q(n)) } else { Err(bad()) };
        }
        Err(bad())
    }
}

impl TryFrom<String> for ObservableId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ObservableId> for String {
    fn from(id: ObservableId) -> String {
        id.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSnapshot {
    pub tag: ObservableId,
    pub values: ScalarLattice,
}

/// Generalized Laguerre polynomial `L_n^{(α)}(x)` by the three-term recurrence.
pub fn laguerre(n: u32, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `:Sⁿ:` at a single value of `S = Σ_j Φ_j²`.
pub fn radial_wick_value(s: f64, n: u32, ctx: &WickContext) -> f64 {
    let a = ctx.a_eps;
    let alpha = ctx.n_comp as f64 / 2.0 - 1.0;
    let mut fact = 1.0;
    for k in 2..=n {
        fact *= k as f64;
    }
    (-2.0 * a).powi(n as i32) * fact * laguerre(n, alpha, s / (2.0 * a))
}

pub fn radial_wick_power(s: &ScalarLattice, n: u32, ctx: &WickContext) -> ScalarLattice {
    s.map(|v| radial_wick_value(v, n, ctx))
}

/// Coefficients in `S` (lowest first) of `:Sⁿ:` for `n ≤ 3`, expanded by hand
/// from the shift identity `:(Y+Z)ᵏ: = Σ binom(k,j) Yʲ :Z^{k−j}:`.
pub fn expanded_wick_coefficients(n: u32, n_comp: f64, a: f64) -> Option<Vec<f64>> {
    let nn = n_comp;
    Some(match n {
        0 => vec![1.0],
        1 => vec![-nn * a, 1.0],
        2 => vec![nn * (nn + 2.0) * a * a, -(2.0 * nn + 4.0) * a, 1.0],
        3 => vec![
            -nn * (nn + 2.0) * (nn + 4.0) * a.powi(3),
            3.0 * (nn + 2.0) * (nn + 4.0) * a * a,
            -3.0 * (nn + 4.0) * a,
            1.0,
        ],
        _ => return None,
    })
}

pub fn expanded_wick_value(s: f64, n: u32, n_comp: f64, a: f64) -> Option<f64> {
    Some(expanded_wick_coefficients(n, n_comp, a)?.iter().rev().fold(0.0, |acc, c| acc * s + c))
}

/// `S(x) = Σ_j Φ_j(x)²`.
pub fn radial_square(spec: LatticeSpec, phi: &[Vec<f64>]) -> ScalarLattice {
    let mut s = vec![0.0; spec.sites()];
    for comp in phi {
        for (acc, &v) in s.iter_mut().zip(comp) {
            *acc += v * v;
        }
    }
    ScalarLattice { spec, values: s }
}

fn check_components(phi: &[Vec<f64>], ctx: &WickContext) -> Result<()> {
    if phi.len() != ctx.n_comp {
        return Err(Error::OutOfRange(format!(
            "field has {} components, context expects {}",
            phi.len(),
            ctx.n_comp
        )));
    }
    Ok(())
}

pub fn scaled_observable(
    spec: LatticeSpec,
    phi: &[Vec<f64>],
    n: u32,
    ctx: &WickContext,
) -> Result<ObservableSnapshot> {
    if n == 0 {
        return Err(Error::OutOfRange("scaled observable needs n >= 1".into()));
    }
    check_components(phi, ctx)?;
    let s = radial_square(spec, phi);
    let scale = (ctx.n_comp as f64).powf(-(n as f64) / 2.0);
    let values = radial_wick_power(&s, n, ctx).map(|v| v * scale);
    Ok(ObservableSnapshot { tag: ObservableId::Q(n), values })
}

/// `N^{-1/2}(Φ_i S − (N+2) a Φ_i)`, `i` 1-based.
pub fn mixed_observable(
    spec: LatticeSpec,
    phi: &[Vec<f64>],
    i: usize,
    ctx: &WickContext,
) -> Result<ObservableSnapshot> {
    check_components(phi, ctx)?;
    if i == 0 || i > ctx.n_comp {
        return Err(Error::OutOfRange(format!("component {i} of {}", ctx.n_comp)));
    }
    let s = radial_square(spec, phi);
    let shift = (ctx.n_comp as f64 + 2.0) * ctx.a_eps;
    let scale = 1.0 / (ctx.n_comp as f64).sqrt();
    let values = phi[i - 1].iter().zip(&s.values).map(|(&p, &sv)| scale * p * (sv - shift)).collect();
    Ok(ObservableSnapshot { tag: ObservableId::Mixed(i), values: ScalarLattice { spec, values } })
}

/// `√N (Φ_i − Z_i)`, `i` 1-based.
pub fn fluctuation_field(
    spec: LatticeSpec,
    phi: &[Vec<f64>],
    z: &[Vec<f64>],
    i: usize,
) -> Result<ObservableSnapshot> {
    if phi.len() != z.len() {
        return Err(Error::OutOfRange("phi and z component counts differ".into()));
    }
    if i == 0 || i > phi.len() {
        return Err(Error::OutOfRange(format!("component {i} of {}", phi.len())));
    }
    let scale = (phi.len() as f64).sqrt();
    let values = phi[i - 1].iter().zip(&z[i - 1]).map(|(p, q)| scale * (p - q)).collect();
    Ok(ObservableSnapshot { tag: ObservableId::Fluct(i), values: ScalarLattice { spec, values } })
}

/// Evaluates any observable id on a field pair.
pub fn observe(
    id: ObservableId,
    spec: LatticeSpec,
    phi: &[Vec<f64>],
    z: &[Vec<f64>],
    ctx: &WickContext,
) -> Result<ObservableSnapshot> {
    match id {
        ObservableId::Q(n) => scaled_observable(spec, phi, n, ctx),
        ObservableId::Mixed(i) => mixed_observable(spec, phi, i, ctx),
        ObservableId::Fluct(i) => fluctuation_field(spec, phi, z, i),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec1() -> LatticeSpec {
        LatticeSpec::new(0, 1.0).unwrap()
    }

    fn coeffs(n: u32, nn: f64, a: f64) -> Vec<f64> {
        expanded_wick_coefficients(n, nn, a).unwrap()
    }

    fn expanded(s: f64, n: u32, nn: f64, a: f64) -> f64 {
        expanded_wick_value(s, n, nn, a).unwrap()
    }

    /// `E[Sʲ]` for `S/a ~ χ²_N`: `aʲ Π_{i<j} (N + 2i)`.
    fn chi_moment(j: u32, nn: f64, a: f64) -> f64 {
        (0..j).map(|i| a * (nn + 2.0 * i as f64)).product()
    }

    #[test]
    fn hand_expansions_are_orthogonal_to_lower_powers() {
        for nn in [1.0, 2.0, 3.0, 8.0] {
            let a = 0.7;
            for n in 1..=3u32 {
                let c = coeffs(n, nn, a);
                for j in 0..n {
                    let e: f64 =
                        c.iter().enumerate().map(|(k, ck)| ck * chi_moment(k as u32 + j, nn, a)).sum();
                    assert!(e.abs() < 1e-9 * chi_moment(n + j, nn, a), "n={n} j={j} N={nn}");
                }
            }
        }
    }

    #[test]
    fn low_orders_match_closed_forms() {
        let ctx = WickContext::new(5, 0.3).unwrap();
        assert_eq!(radial_wick_value(2.0, 0, &ctx), 1.0);
        assert!((radial_wick_value(2.0, 1, &ctx) - (2.0 - 1.5)).abs() < 1e-14);
        let s: f64 = 2.0;
        let want = s * s - 14.0 * 0.3 * s + 35.0 * 0.09;
        assert!((radial_wick_value(s, 2, &ctx) - want).abs() < 1e-13);
    }

    #[test]
    fn single_component_is_even_hermite() {
        // N = 1: :φ^{2n}: = a^n He_{2n}(φ/√a)
        let a: f64 = 0.4;
        let ctx = WickContext::new(1, a).unwrap();
        for &phi in &[0.3f64, -1.2, 2.5] {
            let x = phi / a.sqrt();
            let he6 = x.powi(6) - 15.0 * x.powi(4) + 45.0 * x * x - 15.0;
            assert!((radial_wick_value(phi * phi, 3, &ctx) - a.powi(3) * he6).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn laguerre_matches_expanded(s in 0.0f64..40.0, a in 0.05f64..3.0, nn in 1usize..40, n in 1u32..=3) {
            let ctx = WickContext::new(nn, a).unwrap();
            let got = radial_wick_value(s, n, &ctx);
            let want = expanded(s, n, nn as f64, a);
            let scale = (s + nn as f64 * a + 1.0).powi(n as i32);
            prop_assert!((got - want).abs() <= 1e-12 * scale);
        }

        #[test]
        fn q_observables_invariant_under_component_permutation(
            vals in proptest::collection::vec(-2.0f64..2.0, 4 * 4), shift in 1usize..4
        ) {
            let spec = LatticeSpec::new(1, 1.0).unwrap();
            let phi: Vec<Vec<f64>> = vals.chunks(4).map(|c| c.to_vec()).collect();
            let mut rot = phi.clone();
            rot.rotate_left(shift);
            let ctx = WickContext::new(4, 0.5).unwrap();
            for n in 1..=4 {
                let a = scaled_observable(spec, &phi, n, &ctx).unwrap();
                let b = scaled_observable(spec, &rot, n, &ctx).unwrap();
                for (x, y) in a.values.values.iter().zip(&b.values.values) {
                    prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
                }
            }
            let m1 = mixed_observable(spec, &phi, 1 + shift, &ctx).unwrap();
            let m2 = mixed_observable(spec, &rot, 1, &ctx).unwrap();
            for (x, y) in m1.values.values.iter().zip(&m2.values.values) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn zero_field_values() {
        let spec = LatticeSpec::new(2, 1.0).unwrap();
        let ctx = WickContext::new(4, 0.25).unwrap();
        let phi = vec![vec![0.0; 16]; 4];
        let q1 = scaled_observable(spec, &phi, 1, &ctx).unwrap();
        assert!(q1.values.values.iter().all(|&v| (v + 2.0 * 0.25).abs() < 1e-15));
        let m = mixed_observable(spec, &phi, 2, &ctx).unwrap();
        assert!(m.values.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mixed_single_component_is_wick_cube() {
        let ctx = WickContext::new(1, 0.3).unwrap();
        let m = mixed_observable(spec1(), &[vec![1.7]], 1, &ctx).unwrap();
        let phi: f64 = 1.7;
        assert!((m.values.values[0] - (phi.powi(3) - 0.9 * phi)).abs() < 1e-14);
    }

    #[test]
    fn mixed_is_odd_in_its_component() {
        let ctx = WickContext::new(3, 0.3).unwrap();
        let phi = vec![vec![0.4], vec![1.1], vec![-0.2]];
        let mut flip = phi.clone();
        flip[1][0] = -flip[1][0];
        let a = mixed_observable(spec1(), &phi, 2, &ctx).unwrap();
        let b = mixed_observable(spec1(), &flip, 2, &ctx).unwrap();
        assert_eq!(a.values.values[0], -b.values.values[0]);
    }

    #[test]
    fn mixed_rejects_bad_index() {
        let ctx = WickContext::new(2, 0.3).unwrap();
        let phi = vec![vec![0.0], vec![0.0]];
        assert!(mixed_observable(spec1(), &phi, 3, &ctx).is_err());
        assert!(mixed_observable(spec1(), &phi, 0, &ctx).is_err());
    }

    #[test]
    fn fluctuation_vanishes_and_is_linear() {
        let spec = LatticeSpec::new(1, 1.0).unwrap();
        let z = vec![vec![0.1, 0.2, 0.3, 0.4]; 4];
        let f = fluctuation_field(spec, &z, &z, 1).unwrap();
        assert!(f.values.values.iter().all(|&v| v == 0.0));
        let mut phi = z.clone();
        phi[0][2] += 0.5;
        let f = fluctuation_field(spec, &phi, &z, 1).unwrap();
        assert!((f.values.values[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ids_round_trip() {
        for s in ["Q1", "Q4", "mixed_1", "fluct_3"] {
            assert_eq!(s.parse::<ObservableId>().unwrap().to_string(), s);
        }
        for s in ["Q0", "Q99", "q1", "mixed_0", "foo", "fluct_x"] {
            assert!(s.parse::<ObservableId>().is_err());
        }
    }
}
