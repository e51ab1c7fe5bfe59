//! Exact large-N correlation predictions: pairing sums, exclusion pairings,
//! shift sums and the mixed-observable correlations.
//!
//! Points are integer grid coordinates; kernels are read at differences modulo
//! the grid side.

use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::lattice::{convolve, ScalarLattice};

/// Largest total copy count accepted by the exclusion-pairing enumeration.
pub const MAX_COPIES: u32 = 12;

pub type Point = (i64, i64);

/// Unordered pairs partitioning `{0, …, k-1}`, each pair stored as `(a, b)`
/// with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
}

/// All perfect matchings of `k` labels. Empty for odd `k`; one empty matching
/// for `k = 0`.
pub fn perfect_matchings(k: usize) -> Vec<Matching> {
    if k % 2 == 1 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut used = vec![false; k];
    let mut pairs = Vec::with_capacity(k / 2);
    fn rec(used: &mut [bool], pairs: &mut Vec<(usize, usize)>, out: &mut Vec<Matching>) {
        let Some(first) = used.iter().position(|u| !u) else {
            out.push(Matching { pairs: pairs.clone() });
            return;
        };
        used[first] = true;
        for j in first + 1..used.len() {
            if !used[j] {
                used[j] = true;
                pairs.push((first, j));
                rec(used, pairs, out);
                pairs.pop();
                used[j] = false;
            }
        }
        used[first] = false;
    }
    rec(&mut used, &mut pairs, &mut out);
    out
}

fn kernel_at(f: &ScalarLattice, a: Point, b: Point) -> f64 {
    f.at(a.0 - b.0, a.1 - b.1)
}

/// Σ over matchings of the points of Π `kernel(y_a − y_b)`; zero for odd counts.
pub fn pairing_sum(points: &[Point], kernel: &ScalarLattice) -> f64 {
    perfect_matchings(points.len())
        .iter()
        .map(|m| m.pairs.iter().map(|&(a, b)| kernel_at(kernel, points[a], points[b])).product::<f64>())
        .sum()
}

/// Large-N k-point function of `N^{-1/2}:Φ²:`.
pub fn f_k_oracle(points: &[Point], g: &ScalarLattice) -> f64 {
    pairing_sum(points, g)
}

/// Exclusion pairing sum: each point `y_i` is expanded into `n_i` copies and
/// pairs joining two copies of the same point are forbidden.
pub fn f_exclusion_oracle(n: &[u32], points: &[Point], g: &ScalarLattice) -> Result<f64> {
    check_lengths(n, points)?;
    let total: u32 = n.iter().sum();
    if total > MAX_COPIES {
        return Err(Error::SizeGuard(format!("{total} copies exceed the limit {MAX_COPIES}")));
    }
    if total % 2 == 1 {
        return Ok(0.0);
    }
    let owner: Vec<usize> =
        n.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize)).collect();
    Ok(perfect_matchings(owner.len())
        .iter()
        .filter(|m| m.pairs.iter().all(|&(a, b)| owner[a] != owner[b]))
        .map(|m| {
            m.pairs
                .iter()
                .map(|&(a, b)| kernel_at(g, points[owner[a]], points[owner[b]]))
                .product::<f64>()
        })
        .sum())
}

fn check_lengths(n: &[u32], points: &[Point]) -> Result<()> {
    if n.len() != points.len() {
        return Err(Error::OutOfRange(format!(
            "multi-index has {} entries for {} points",
            n.len(),
            points.len()
        )));
    }
    Ok(())
}

fn factorial(n: u32) -> f64 {
    (2..=n).map(f64::from).product()
}

/// Large-N k-point function of the variables `N^{-n_i/2}:(Φ²)^{n_i}:(y_i)`.
pub fn f_nk_oracle(n: &[u32], points: &[Point], kernels: &KernelSet) -> Result<f64> {
    check_lengths(n, points)?;
    let total: u32 = n.iter().sum();
    if total > MAX_COPIES {
        return Err(Error::SizeGuard(format!("{total} copies exceed the limit {MAX_COPIES}")));
    }
    let mut l = vec![0u32; n.len()];
    let mut sum = 0.0;
    loop {
        let lsum: u32 = l.iter().sum();
        let mut weight = (-kernels.c1).powi(lsum as i32);
        for (&ni, &li) in n.iter().zip(&l) {
            weight *= factorial(ni)
                / (factorial(ni - 2 * li) * factorial(li) * 2f64.powi(li as i32));
        }
        let reduced: Vec<u32> = n.iter().zip(&l).map(|(&ni, &li)| ni - 2 * li).collect();
        sum += weight * f_exclusion_oracle(&reduced, points, &kernels.g)?;
        // next l-vector in odometer order
        let mut i = 0;
        loop {
            if i == l.len() {
                return Ok(sum);
            }
            if 2 * (l[i] + 1) <= n[i] {
                l[i] += 1;
                break;
            }
            l[i] = 0;
            i += 1;
        }
    }
}

/// Large-N k-point function of `N^{-1/2}:Φ₁Φ²:`: `C_k · f_k`.
pub fn g_k_oracle(points: &[Point], kernels: &KernelSet) -> f64 {
    pairing_sum(points, &kernels.c) * pairing_sum(points, &kernels.g)
}

/// Probabilists' Hermite polynomial by `H_{n+1} = xH_n − nH_{n−1}`.
pub fn hermite(n: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `f_{n,k}` as a function of the first point over the whole grid, the other
/// points held fixed.
pub fn f_nk_over_first(n: &[u32], rest: &[Point], kernels: &KernelSet) -> Result<ScalarLattice> {
    let spec = kernels.spec;
    let side = spec.side() as i64;
    let mut out = ScalarLattice::zeros(spec);
    let mut pts = Vec::with_capacity(rest.len() + 1);
    for i in 0..side {
        for j in 0..side {
            pts.clear();
            pts.push((i, j));
            pts.extend_from_slice(rest);
            out.values[spec.index(i, j)] = f_nk_oracle(n, &pts, kernels)?;
        }
    }
    Ok(out)
}

/// Both sides of the limiting recursion at the tuple `points`, for the
/// multi-index `n` (`n₁ ≥ 1`):
///
/// `f_n(y) + ∫C²(y₁−z) f_{n̂}(z, y) dz` and `Σ_{j≥2} 2n_j C²(y₁−y_j) f_{ñ_j}(y)`,
/// with `n̂ = (1, n₁−1, n₂, …)` and `ñ_j` lowering `n₁` and `n_j` by one.
/// The convolution is done by FFT over the full grid.
pub fn recursion_sides(n: &[u32], points: &[Point], kernels: &KernelSet) -> Result<(f64, f64)> {
    check_lengths(n, points)?;
    if n.first().copied().unwrap_or(0) == 0 {
        return Err(Error::OutOfRange("recursion needs n₁ ≥ 1".into()));
    }
    let y1 = points[0];
    let mut hat_n = vec![1, n[0] - 1];
    hat_n.extend_from_slice(&n[1..]);
    let field = f_nk_over_first(&hat_n, points, kernels)?;
    let conv = convolve(&kernels.c_sq, &field)?;
    let lhs = f_nk_oracle(n, points, kernels)? + conv.at(y1.0, y1.1);
    let mut rhs = 0.0;
    for j in 1..n.len() {
        if n[j] == 0 {
            continue;
        }
        let mut tilde = n.to_vec();
        tilde[0] -= 1;
        tilde[j] -= 1;
        rhs += 2.0
            * n[j] as f64
            * kernel_at(&kernels.c_sq, y1, points[j])
            * f_nk_oracle(&tilde, points, kernels)?;
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn kernels() -> KernelSet {
        KernelSet::new(LatticeSpec::new(3, 5.0).unwrap())
    }

    fn double_factorial(k: usize) -> usize {
        (1..k).step_by(2).product()
    }

    #[test]
    fn matching_counts_and_uniqueness() {
        for k in (0..=10).step_by(2) {
            let ms = perfect_matchings(k);
            assert_eq!(ms.len(), double_factorial(k).max(1));
            let set: BTreeSet<_> = ms.iter().cloned().collect();
            assert_eq!(set.len(), ms.len());
            for m in &ms {
                let mut seen: Vec<usize> = m.pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
                seen.sort();
                assert_eq!(seen, (0..k).collect::<Vec<_>>());
            }
        }
        assert_eq!(perfect_matchings(8).len(), 105);
        assert!(perfect_matchings(5).is_empty());
    }

    #[test]
    fn f_k_special_cases() {
        let k = kernels();
        assert_eq!(f_k_oracle(&[(0, 0), (2, 3)], &k.g), k.g.at(-2, -3));
        assert_eq!(f_k_oracle(&[(0, 0), (2, 3), (1, 1)], &k.g), 0.0);
        let same = [(1, 2); 4];
        assert!((f_k_oracle(&same, &k.g) - 3.0 * k.g.values[0].powi(2)).abs() < 1e-12);
    }

    #[test]
    fn exclusion_special_cases() {
        let k = kernels();
        let y = [(0, 0), (3, 1)];
        let g = k.g.at(3, 1);
        assert!((f_exclusion_oracle(&[1, 1], &y, &k.g).unwrap() - g).abs() < 1e-15);
        assert!((f_exclusion_oracle(&[2, 2], &y, &k.g).unwrap() - 2.0 * g * g).abs() < 1e-15);
        assert_eq!(f_exclusion_oracle(&[2], &[(0, 0)], &k.g).unwrap(), 0.0);
        assert!(matches!(
            f_exclusion_oracle(&[7, 7], &y, &k.g),
            Err(Error::SizeGuard(_))
        ));
    }

    #[test]
    fn exclusion_matches_on_two_by_two_count() {
        // n = (2,2): exactly two admissible matchings out of three
        let owner = [0, 0, 1, 1];
        let count = perfect_matchings(4)
            .iter()
            .filter(|m| m.pairs.iter().all(|&(a, b)| owner[a] != owner[b]))
            .count();
        assert_eq!(count, 2);
    }

    #[test]
    fn shifted_closed_forms() {
        let k = kernels();
        let c1 = k.c1;
        assert!((f_nk_oracle(&[2], &[(0, 0)], &k).unwrap() + c1).abs() <= 1e-12 * c1);
        let y = [(0, 0), (2, 5)];
        let g = k.g.at(2, 5);
        let want = 2.0 * g * g + c1 * c1;
        assert!((f_nk_oracle(&[2, 2], &y, &k).unwrap() - want).abs() <= 1e-12 * want);
        let (z1, z2, yy) = ((1, 0), (4, 6), (7, 2));
        let gz = |a: Point, b: Point| k.g.at(a.0 - b.0, a.1 - b.1);
        let want = 2.0 * gz(z1, yy) * gz(z2, yy) - c1 * gz(z1, z2);
        let got = f_nk_oracle(&[1, 1, 2], &[z1, z2, yy], &k).unwrap();
        assert!((got - want).abs() <= 1e-12 * want.abs());
    }

    #[test]
    fn unit_multi_index_reduces_to_pairings() {
        let k = kernels();
        let pts = [(0, 0), (1, 4), (6, 6), (3, 2)];
        let a = f_nk_oracle(&[1, 1, 1, 1], &pts, &k).unwrap();
        assert!((a - f_k_oracle(&pts, &k.g)).abs() < 1e-15);
    }

    #[test]
    fn mixed_correlation_cases() {
        let k = kernels();
        let (a, b) = ((0, 0), (2, 1));
        assert!((g_k_oracle(&[a, b], &k) - k.c.at(2, 1) * k.g.at(2, 1)).abs() < 1e-15);
        assert_eq!(g_k_oracle(&[a], &k), 0.0);
        let want = 9.0 * k.c.values[0].powi(2) * k.g.values[0].powi(2);
        assert!((g_k_oracle(&[a; 4], &k) - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn hermite_low_orders_and_recurrence() {
        for &x in &[-1.3, 0.0, 0.7, 2.2] {
            assert!((hermite(2, x) - (x * x - 1.0)).abs() < 1e-14);
            assert!((hermite(3, x) - (x * x * x - 3.0 * x)).abs() < 1e-13);
            for n in 1..10 {
                let r = hermite(n + 1, x) - (x * hermite(n, x) - n as f64 * hermite(n - 1, x));
                assert!(r.abs() < 1e-9 * (1.0 + hermite(n + 1, x).abs()));
            }
        }
    }

    #[test]
    fn hermite_matches_explicit_sum() {
        // H_n(x) = Σ_j (−1)^j n!/((n−2j)! j! 2^j) x^{n−2j}
        for n in 0..9u32 {
            for &x in &[-0.8, 1.9] {
                let mut s = 0.0;
                for j in 0..=n / 2 {
                    s += (-1f64).powi(j as i32) * factorial(n)
                        / (factorial(n - 2 * j) * factorial(j) * 2f64.powi(j as i32))
                        * f64::powi(x, (n - 2 * j) as i32);
                }
                assert!((hermite(n, x) - s).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn recursion_closes_for_four_points() {
        let k = kernels();
        let pts = [(0, 0), (1, 3), (5, 2), (7, 7)];
        let (l, r) = recursion_sides(&[1, 1, 1, 1], &pts, &k).unwrap();
        assert!((l - r).abs() <= 1e-8 * r.abs());
    }

    proptest! {
        #[test]
        fn pairing_sums_are_permutation_symmetric(
            pts in proptest::collection::vec((0i64..8, 0i64..8), 4), rot in 1usize..4
        ) {
            let k = kernels();
            let mut p2 = pts.clone();
            p2.rotate_left(rot);
            let a = f_k_oracle(&pts, &k.g);
            let b = f_k_oracle(&p2, &k.g);
            prop_assert!((a - b).abs() <= 1e-13 * a.abs().max(1e-300));
            let n = [1u32, 2, 1, 2];
            let mut n2 = n.to_vec();
            n2.rotate_left(rot);
            let a = f_nk_oracle(&n, &pts, &k).unwrap();
            let b = f_nk_oracle(&n2, &p2, &k).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-12));
        }
    }
}
