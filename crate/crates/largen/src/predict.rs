//! Reference values for simulated correlations: the large-N limits of the
//! interacting model, the exact finite-N moments of the free field, and the
//! leading finite-N one-point correction of `N^{-1/2}:Φ²:` from the graph
//! expansion.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ibp;
use crate::kernels::KernelSet;
use crate::observables::ObservableId;
use crate::oracle::{f_nk_oracle, g_k_oracle, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// The interacting chain, compared with its large-N limit.
    Interacting,
    /// Interaction switched off: `Φ` is a free field.
    Free,
}

fn rising(x: f64, n: u32) -> f64 {
    (0..n).map(|i| x + i as f64).product()
}

fn factorial(n: u32) -> f64 {
    (2..=n).map(f64::from).product()
}

/// `E[O(0) O(r)]`, or `None` when no prediction is available.
pub fn two_point(id: ObservableId, r: Point, n_comp: usize, mode: Mode, kernels: &KernelSet) -> Result<Option<f64>> {
    let c = kernels.c.at(r.0, r.1);
    let nn = n_comp as f64;
    Ok(match (mode, id) {
        (Mode::Interacting, ObservableId::Q(n)) => Some(f_nk_oracle(&[n, n], &[(0, 0), r], kernels)?),
        (Mode::Interacting, ObservableId::Mixed(_)) => Some(g_k_oracle(&[(0, 0), r], kernels)),
        (Mode::Interacting, ObservableId::Fluct(_)) => None,
        // Laguerre orthogonality: E[:Sⁿ:(x):Sⁿ:(y)] = n! 4ⁿ (N/2)_n C(x−y)^{2n}
        (Mode::Free, ObservableId::Q(n)) => {
            Some(factorial(n) * 4f64.powi(n as i32) * rising(nn / 2.0, n) * c.powi(2 * n as i32) / nn.powi(n as i32))
        }
        (Mode::Free, ObservableId::Mixed(_)) => Some((2.0 + 4.0 / nn) * c.powi(3)),
        (Mode::Free, ObservableId::Fluct(_)) => Some(0.0),
    })
}

/// Leading term of `E[N^{-1/2}:Φ²:]`, which is of order `N^{-1/2}`; zero in
/// the large-N limit.
pub fn q1_leading_correction(n_comp: usize, kernels: &KernelSet) -> Result<f64> {
    let r = ibp::expand(1, 0)?;
    Ok(r.power_sum(1, kernels, &[(0, 0)])? / (n_comp as f64).sqrt())
}

/// `E[O(0)]`. For `Q1` in the interacting mode this is the leading finite-N
/// term, since the limit vanishes.
pub fn one_point(id: ObservableId, n_comp: usize, mode: Mode, kernels: &KernelSet) -> Result<Option<f64>> {
    Ok(match (mode, id) {
        (Mode::Interacting, ObservableId::Q(1)) => Some(q1_leading_correction(n_comp, kernels)?),
        (Mode::Interacting, ObservableId::Q(n)) => Some(f_nk_oracle(&[n], &[(0, 0)], kernels)?),
        (_, ObservableId::Mixed(_) | ObservableId::Fluct(_)) => Some(0.0),
        (Mode::Free, ObservableId::Q(_)) => Some(0.0),
    })
}

/// Large-N limit of `E[O(0)]`, used as the reference for rate fits.
pub fn one_point_limit(id: ObservableId, mode: Mode, kernels: &KernelSet) -> Result<f64> {
    Ok(match (mode, id) {
        (Mode::Interacting, ObservableId::Q(n)) => f_nk_oracle(&[n], &[(0, 0)], kernels)?,
        _ => 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::sample_gff;
    use crate::lattice::LatticeSpec;
    use crate::observables::{observe, WickContext};
    use crate::stats::translation_correlator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn free_q1_two_point_is_twice_c_squared() {
        let k = KernelSet::new(LatticeSpec::new(3, 5.0).unwrap());
        for n in [1, 4, 32] {
            let v = two_point(ObservableId::Q(1), (1, 2), n, Mode::Free, &k).unwrap().unwrap();
            assert!((v - 2.0 * k.c.at(1, 2).powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn free_moments_match_sampling() {
        // Q2 and mixed two-point functions of the free field at N = 3, r = 0
        let spec = LatticeSpec::new(2, 1.0).unwrap();
        let k = KernelSet::new(spec);
        let ctx = WickContext::new(3, k.a_eps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ids = [ObservableId::Q(2), ObservableId::Mixed(1)];
        let mut acc = [Vec::new(), Vec::new()];
        for _ in 0..40_000 {
            let phi: Vec<Vec<f64>> = (0..3).map(|_| sample_gff(spec, &mut rng).values).collect();
            for (slot, id) in ids.iter().enumerate() {
                let o = observe(*id, spec, &phi, &phi, &ctx).unwrap().values;
                acc[slot].push(translation_correlator(&o, &o).unwrap().at(0, 0));
            }
        }
        for (slot, id) in ids.iter().enumerate() {
            let e = crate::stats::batch_estimate(&crate::stats::SampleSeries::new(acc[slot].clone()), 20).unwrap();
            let want = two_point(*id, (0, 0), 3, Mode::Free, &k).unwrap().unwrap();
            assert!((e.mean - want).abs() <= 4.0 * e.stderr, "{id}: {} ± {} vs {want}", e.mean, e.stderr);
        }
    }

    #[test]
    fn interacting_limits() {
        let k = KernelSet::new(LatticeSpec::new(3, 5.0).unwrap());
        let g = two_point(ObservableId::Q(1), (2, 0), 8, Mode::Interacting, &k).unwrap().unwrap();
        assert!((g - k.g.at(2, 0)).abs() < 1e-14);
        let q2 = one_point(ObservableId::Q(2), 8, Mode::Interacting, &k).unwrap().unwrap();
        assert!((q2 + k.c1).abs() <= 1e-12 * k.c1);
        assert_eq!(two_point(ObservableId::Fluct(1), (0, 0), 8, Mode::Interacting, &k).unwrap(), None);
        let lead = one_point(ObservableId::Q(1), 4, Mode::Interacting, &k).unwrap().unwrap();
        let lead16 = one_point(ObservableId::Q(1), 16, Mode::Interacting, &k).unwrap().unwrap();
        assert!(lead > 0.0 && (lead / lead16 - 2.0).abs() < 1e-12);
    }
}
