//! Periodic lattice geometry on the unit 2-torus, DFT conventions and the lattice
//! Green's function.
//!
//! Forward transform: `f̂(ξ) = ε² Σ_x f(x) e^{-2πiξ·x}`.
//! Inverse transform: `f(x) = Σ_ξ f̂(ξ) e^{2πiξ·x}`.
//! With these weights `ε² Σ_y f(x-y) g(y)` has transform `f̂ ĝ`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported grid exponent (a 4096² grid).
pub const MAX_GRID_EXPONENT: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Grid exponent `M`; the lattice has `n = 2^M` points per side.
    pub grid_exponent: u32,
    /// Bare mass `m > 0`.
    pub mass: f64,
}

impl LatticeSpec {
    pub fn new(grid_exponent: u32, mass: f64) -> Result<Self> {
        if grid_exponent > MAX_GRID_EXPONENT {
            return Err(Error::invalid(
                "lattice.M",
                format!("grid exponent {grid_exponent} exceeds {MAX_GRID_EXPONENT}"),
            ));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::invalid("lattice.m", format!("mass must be positive, got {mass}")));
        }
        Ok(Self { grid_exponent, mass })
    }

    pub fn side(&self) -> usize {
        1usize << self.grid_exponent
    }

    pub fn sites(&self) -> usize {
        self.side() * self.side()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.side() as f64
    }

    /// Row-major index of the grid point `(i, j)`, reduced modulo `n`.
    pub fn index(&self, i: i64, j: i64) -> usize {
        let n = self.side() as i64;
        (i.rem_euclid(n) * n + j.rem_euclid(n)) as usize
    }

    /// Signed dual momentum in `{-n/2, …, n/2-1}` for FFT slot `k`.
    pub fn momentum(&self, k: usize) -> i64 {
        let n = self.side();
        if n > 1 && k >= n / 2 {
            k as i64 - n as i64
        } else {
            k as i64
        }
    }

    /// Eigenvalue of `-Δ_ε` on the mode stored at flat slot `idx`.
    pub fn laplacian_symbol(&self, idx: usize) -> f64 {
        let n = self.side();
        let eps = self.spacing();
        let (k1, k2) = (idx / n, idx % n);
        let s1 = (PI * k1 as f64 / n as f64).sin();
        let s2 = (PI * k2 as f64 / n as f64).sin();
        4.0 * (s1 * s1 + s2 * s2) / (eps * eps)
    }

    /// `m + λ_ξ` for every mode, in FFT order.
    pub fn mass_symbols(&self) -> Vec<f64> {
        (0..self.sites()).map(|i| self.mass + self.laplacian_symbol(i)).collect()
    }

    fn check_same(&self, other: &LatticeSpec) -> Result<()> {
        if self != other {
            return Err(Error::SpecMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Real field on the lattice, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarLattice {
    pub spec: LatticeSpec,
    pub values: Vec<f64>,
}

impl ScalarLattice {
    pub fn zeros(spec: LatticeSpec) -> Self {
        Self { spec, values: vec![0.0; spec.sites()] }
    }

    pub fn constant(spec: LatticeSpec, value: f64) -> Self {
        Self { spec, values: vec![value; spec.sites()] }
    }

    pub fn from_values(spec: LatticeSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.sites() {
            return Err(Error::SpecMismatch(format!(
                "expected {} values, got {}",
                spec.sites(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("lattice value {v}")));
        }
        Ok(Self { spec, values })
    }

    /// Lattice delta: `ε⁻²` at the origin, zero elsewhere.
    pub fn delta(spec: LatticeSpec) -> Self {
        let mut f = Self::zeros(spec);
        let eps = spec.spacing();
        f.values[0] = 1.0 / (eps * eps);
        f
    }

    /// Value at the grid offset `(i, j)` taken modulo `n`.
    pub fn at(&self, i: i64, j: i64) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `ε² Σ_x f(x)`.
    pub fn integral(&self) -> f64 {
        let eps = self.spec.spacing();
        eps * eps * self.values.iter().sum::<f64>()
    }

    /// `f(-x)`.
    pub fn reflect(&self) -> Self {
        let n = self.spec.side() as i64;
        let mut out = Self::zeros(self.spec);
        for i in 0..n {
            for j in 0..n {
                out.values[self.spec.index(i, j)] = self.at(-i, -j);
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.spec.check_same(&other.spec)?;
        Ok(Self {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// `(m - Δ_ε) f` with the 5-point stencil.
    pub fn apply_mass_operator(&self) -> Self {
        let n = self.spec.side() as i64;
        let eps = self.spec.spacing();
        let inv = 1.0 / (eps * eps);
        let mut out = Self::zeros(self.spec);
        for i in 0..n {
            for j in 0..n {
                let c = self.at(i, j);
                let lap = self.at(i + 1, j) + self.at(i - 1, j) + self.at(i, j + 1)
                    + self.at(i, j - 1)
                    - 4.0 * c;
                out.values[self.spec.index(i, j)] = self.spec.mass * c - lap * inv;
            }
        }
        out
    }
}

/// Complex table over dual momenta, stored in FFT order (slot `k` holds momentum
/// `k` for `k < n/2` and `k - n` otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTable {
    pub spec: LatticeSpec,
    pub values: Vec<Complex64>,
}

impl SpectralTable {
    /// Value at signed momentum `(ξ₁, ξ₂)`.
    pub fn at(&self, xi1: i64, xi2: i64) -> Complex64 {
        self.values[self.spec.index(xi1, xi2)]
    }

    /// Real parts, for tables of even real kernels.
    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.re).collect()
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Planned 2D transforms for one grid size.
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    fn run(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        transpose(buf, n);
        plan.process_with_scratch(buf, &mut scratch);
        transpose(buf, n);
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.forward);
    }

    /// Unnormalized inverse transform in place.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.inverse);
    }

    /// Forward transforms of two real fields with one complex transform.
    /// Both outputs carry the `ε²` weight.
    pub fn forward_pair(&self, a: &[f64], b: &[f64], eps2: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.n;
        let mut buf: Vec<Complex64> =
            a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.forward(&mut buf);
        let mut ha = vec![Complex64::new(0.0, 0.0); n * n];
        let mut hb = vec![Complex64::new(0.0, 0.0); n * n];
        for k1 in 0..n {
            for k2 in 0..n {
                let idx = k1 * n + k2;
                let ridx = ((n - k1) % n) * n + (n - k2) % n;
                let c = buf[idx];
                let cr = buf[ridx].conj();
                ha[idx] = (c + cr) * (0.5 * eps2);
                hb[idx] = (c - cr) * Complex64::new(0.0, -0.5 * eps2);
            }
        }
        (ha, hb)
    }

    /// Inverse transforms of two Hermitian spectra, returning the two real fields.
    pub fn inverse_pair(&self, ha: &[Complex64], hb: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut buf: Vec<Complex64> =
            ha.iter().zip(hb).map(|(&x, &y)| x + Complex64::new(0.0, 1.0) * y).collect();
        self.inverse(&mut buf);
        (buf.iter().map(|c| c.re).collect(), buf.iter().map(|c| c.im).collect())
    }
}

pub fn dft_forward(f: &ScalarLattice) -> SpectralTable {
    let spec = f.spec;
    let eps = spec.spacing();
    let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Fft2::new(spec.side()).forward(&mut buf);
    for c in &mut buf {
        *c *= eps * eps;
    }
    SpectralTable { spec, values: buf }
}

/// Inverse transform, returning the complex field.
pub fn dft_inverse_complex(t: &SpectralTable) -> Vec<Complex64> {
    let mut buf = t.values.clone();
    Fft2::new(t.spec.side()).inverse(&mut buf);
    buf
}

/// Inverse transform of a table known to come from a real field; imaginary
/// round-off is discarded.
pub fn dft_inverse(t: &SpectralTable) -> ScalarLattice {
    let values = dft_inverse_complex(t).into_iter().map(|c| c.re).collect();
    ScalarLattice { spec: t.spec, values }
}

/// Real field whose transform is the given real, even symbol.
pub fn from_symbol(spec: LatticeSpec, symbol: &[f64]) -> ScalarLattice {
    let table = SpectralTable {
        spec,
        values: symbol.iter().map(|&s| Complex64::new(s, 0.0)).collect(),
    };
    dft_inverse(&table)
}

/// `Ĉ(ξ) = 1/(m + λ_ξ)` in FFT order.
pub fn greens_symbol(spec: LatticeSpec) -> Vec<f64> {
    spec.mass_symbols().into_iter().map(|w| 1.0 / w).collect()
}

/// Lattice Green's function of `m - Δ_ε`.
pub fn greens_function(spec: LatticeSpec) -> ScalarLattice {
    let mut c = from_symbol(spec, &greens_symbol(spec));
    symmetrize(&mut c);
    c
}

/// Wick constant `a_ε = C_ε(0) = Σ_ξ Ĉ(ξ)`.
pub fn wick_constant(spec: LatticeSpec) -> f64 {
    greens_symbol(spec).iter().sum()
}

pub fn convolve(f: &ScalarLattice, g: &ScalarLattice) -> Result<ScalarLattice> {
    f.spec.check_same(&g.spec)?;
    let fh = dft_forward(f);
    let gh = dft_forward(g);
    let prod = SpectralTable {
        spec: f.spec,
        values: fh.values.iter().zip(&gh.values).map(|(a, b)| a * b).collect(),
    };
    Ok(dft_inverse(&prod))
}

pub fn pointwise_square(f: &ScalarLattice) -> ScalarLattice {
    f.map(|v| v * v)
}

/// Replace `f` by `(f(x) + f(-x))/2`, removing round-off asymmetry of even kernels.
pub fn symmetrize(f: &mut ScalarLattice) {
    let r = f.reflect();
    for (v, w) in f.values.iter_mut().zip(&r.values) {
        *v = 0.5 * (*v + w);
    }
}
