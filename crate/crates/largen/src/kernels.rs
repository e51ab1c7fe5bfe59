//! Limiting kernels of the large-N theory: the covariance `G` solving
//! `C²∗G + G = 2C²`, the resolvent `K = (I + C²∗)⁻¹ = δ + L`, and the shift
//! constant `c1 = (C²∗G)(0)`.

use serde::Serialize;

use crate::lattice::{
    dft_forward, from_symbol, greens_function, greens_symbol, pointwise_square, symmetrize,
    LatticeSpec, ScalarLattice,
};

/// Kernels and constants for one lattice spec, built once and shared read-only.
#[derive(Debug, Clone)]
pub struct KernelSet {
    pub spec: LatticeSpec,
    pub c: ScalarLattice,
    pub c_sq: ScalarLattice,
    pub g: ScalarLattice,
    /// Regular part of the resolvent, `K = δ + L`.
    pub l: ScalarLattice,
    pub a_eps: f64,
    pub c1: f64,
    pub c_hat: Vec<f64>,
    pub c_sq_hat: Vec<f64>,
    pub g_hat: Vec<f64>,
    pub l_hat: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelSummary {
    pub a_eps: f64,
    pub c1: f64,
    pub m: f64,
    #[serde(rename = "M")]
    pub grid_exponent: u32,
}

impl KernelSet {
    pub fn new(spec: LatticeSpec) -> Self {
        let c = greens_function(spec);
        let c_hat = greens_symbol(spec);
        let c_sq = pointwise_square(&c);
        let c_sq_hat = even_symbol(&c_sq);
        let g_hat = g_symbol(&c_sq_hat);
        let l_hat = l_symbol(&c_sq_hat);
        let g = even_field(spec, &g_hat);
        let l = even_field(spec, &l_hat);
        let a_eps = c.values[0];
        let c1 = c_sq_hat.iter().zip(&g_hat).map(|(a, b)| a * b).sum();
        Self { spec, c, c_sq, g, l, a_eps, c1, c_hat, c_sq_hat, g_hat, l_hat }
    }

    pub fn summary(&self) -> KernelSummary {
        KernelSummary {
            a_eps: self.a_eps,
            c1: self.c1,
            m: self.spec.mass,
            grid_exponent: self.spec.grid_exponent,
        }
    }

    /// The full resolvent kernel `δ + L` as a lattice function.
    pub fn k_lattice(&self) -> ScalarLattice {
        let mut k = self.l.clone();
        let eps = self.spec.spacing();
        k.values[0] += 1.0 / (eps * eps);
        k
    }

    /// Applies `K`: returns `f + L∗f`.
    pub fn apply_k(&self, f: &ScalarLattice) -> ScalarLattice {
        let fh = dft_forward(f);
        let sym: Vec<num_complex::Complex64> =
            fh.values.iter().zip(&self.l_hat).map(|(v, l)| v * (1.0 + l)).collect();
        crate::lattice::dft_inverse(&crate::lattice::SpectralTable { spec: self.spec, values: sym })
    }

    /// Applies `I + C²∗`.
    pub fn apply_one_plus_c_sq(&self, f: &ScalarLattice) -> ScalarLattice {
        let fh = dft_forward(f);
        let sym: Vec<num_complex::Complex64> =
            fh.values.iter().zip(&self.c_sq_hat).map(|(v, s)| v * (1.0 + s)).collect();
        crate::lattice::dft_inverse(&crate::lattice::SpectralTable { spec: self.spec, values: sym })
    }
}

/// Real spectrum of an even real kernel.
fn even_symbol(f: &ScalarLattice) -> Vec<f64> {
    dft_forward(f).real_parts()
}

fn even_field(spec: LatticeSpec, symbol: &[f64]) -> ScalarLattice {
    let mut f = from_symbol(spec, symbol);
    symmetrize(&mut f);
    f
}

fn g_symbol(c_sq_hat: &[f64]) -> Vec<f64> {
    c_sq_hat.iter().map(|&s| 2.0 * s / (1.0 + s)).collect()
}

fn l_symbol(c_sq_hat: &[f64]) -> Vec<f64> {
    c_sq_hat.iter().map(|&s| -s / (1.0 + s)).collect()
}

/// `G` from a Green's function: `Ĝ = 2(C²)^/(1 + (C²)^)`.
pub fn build_g(c: &ScalarLattice) -> ScalarLattice {
    let c_sq_hat = even_symbol(&pointwise_square(c));
    even_field(c.spec, &g_symbol(&c_sq_hat))
}

/// `L` from `C²`: `L̂ = -(C²)^/(1 + (C²)^)`.
pub fn build_k(c_sq: &ScalarLattice) -> ScalarLattice {
    even_field(c_sq.spec, &l_symbol(&even_symbol(c_sq)))
}

/// `c1 = (C²∗G)(0) = Σ_ξ (C²)^(ξ) Ĝ(ξ)`.
pub fn shift_constant(kernels: &KernelSet) -> f64 {
    kernels.c1
}
