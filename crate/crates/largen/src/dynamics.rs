//! Coupled Langevin dynamics for the interacting field Φ and the free field Z
//! driven by the same noise, a Metropolis-adjusted variant targeting the
//! lattice Gibbs measure, and exact free-field sampling.
//!
//! Noise is drawn from one ChaCha stream per chain, component-major and then
//! row-major over sites; MALA draws its uniform after the noise.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::lattice::{greens_symbol, Fft2, LatticeSpec, ScalarLattice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Linear part solved by `(1 + dt(m − Δ))⁻¹`.
    SemiImplicit,
    /// Linear part integrated exactly per mode, with the exact OU noise variance.
    ExponentialLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub mala: bool,
    pub burn_in_steps: u64,
    pub thin_stride: u64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            scheme: Scheme::SemiImplicit,
            mala: false,
            burn_in_steps: 10_000,
            thin_stride: 1,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("integrator.dt", format!("must be positive, got {}", self.dt)));
        }
        if self.thin_stride == 0 {
            return Err(Error::invalid("integrator.thin", "must be at least 1"));
        }
        Ok(())
    }
}

/// Per-mode linear update `x̂' = P x̂ + R d̂ + s η̂` for one scheme and step size.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub spec: LatticeSpec,
    pub n_comp: usize,
    pub a_eps: f64,
    pub config: IntegratorConfig,
    fft: Fft2,
    decay: Vec<f64>,
    drift_gain: Vec<f64>,
    noise_gain: Vec<f64>,
    inv_noise_var: Vec<f64>,
}

impl Propagator {
    pub fn new(kernels: &KernelSet, n_comp: usize, config: IntegratorConfig) -> Result<Self> {
        config.validate()?;
        if n_comp == 0 {
            return Err(Error::invalid("model.N", "component count must be at least 1"));
        }
        let spec = kernels.spec;
        let dt = config.dt;
        let omegas = spec.mass_symbols();
        let (mut decay, mut drift_gain, mut noise_gain) = (vec![], vec![], vec![]);
        for &w in &omegas {
            match config.scheme {
                Scheme::SemiImplicit => {
                    let d = 1.0 / (1.0 + dt * w);
                    decay.push(d);
                    drift_gain.push(dt * d);
                    noise_gain.push((2.0 * dt).sqrt() * d);
                }
                Scheme::ExponentialLinear => {
                    let e = (-dt * w).exp();
                    decay.push(e);
                    drift_gain.push(-(-dt * w).exp_m1() / w);
                    noise_gain.push((-(-2.0 * dt * w).exp_m1() / w).sqrt());
                }
            }
        }
        Ok(Self {
            spec,
            n_comp,
            a_eps: kernels.a_eps,
            config,
            fft: Fft2::new(spec.side()),
            inv_noise_var: noise_gain.iter().map(|s| 1.0 / (s * s)).collect(),
            decay,
            drift_gain,
            noise_gain,
        })
    }

    fn eps2(&self) -> f64 {
        self.spec.spacing().powi(2)
    }

    /// Fourier transforms of all components, two per complex transform.
    fn forward_all(&self, fields: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
        let eps2 = self.eps2();
        let zero = vec![0.0; self.spec.sites()];
        let mut out = Vec::with_capacity(fields.len());
        for pair in fields.chunks(2) {
            let b = pair.get(1).unwrap_or(&zero);
            let (ha, hb) = self.fft.forward_pair(&pair[0], b, eps2);
            out.push(ha);
            if pair.len() == 2 {
                out.push(hb);
            }
        }
        out
    }

    fn inverse_all(&self, spectra: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
        let zero = vec![Complex64::new(0.0, 0.0); self.spec.sites()];
        let mut out = Vec::with_capacity(spectra.len());
        for pair in spectra.chunks(2) {
            let b = pair.get(1).unwrap_or(&zero);
            let (a, bb) = self.fft.inverse_pair(&pair[0], b);
            out.push(a);
            if pair.len() == 2 {
                out.push(bb);
            }
        }
        out
    }

    /// `−(1/N) Φ_i (S − (N+2) a)` for all components.
    pub fn drift(&self, phi: &[Vec<f64>]) -> Vec<Vec<f64>> {
        drift(phi, self.n_comp, self.a_eps)
    }

    /// Lattice action `S_ε(Φ)`.
    pub fn action(&self, phi: &[Vec<f64>]) -> f64 {
        lattice_action(self.spec, phi, self.a_eps)
    }

    /// `−½ Σ_ξ |x̂' − P x̂ − R d̂(x)|² / s²`, the log proposal density up to a
    /// constant.
    fn log_proposal(&self, from_hat: &[Vec<Complex64>], drift_hat: &[Vec<Complex64>], to_hat: &[Vec<Complex64>]) -> f64 {
        let mut acc = 0.0;
        for ((x, d), y) in from_hat.iter().zip(drift_hat).zip(to_hat) {
            for k in 0..x.len() {
                let r = y[k] - x[k] * self.decay[k] - d[k] * self.drift_gain[k];
                acc += r.norm_sqr() * self.inv_noise_var[k];
            }
        }
        -0.5 * acc
    }

    /// Log Metropolis ratio for moving from `phi` to `proposal`.
    pub fn metropolis_log_ratio(&self, phi: &[Vec<f64>], proposal: &[Vec<f64>]) -> f64 {
        let ph = self.forward_all(phi);
        let dh = self.forward_all(&self.drift(phi));
        let qh = self.forward_all(proposal);
        let qdh = self.forward_all(&self.drift(proposal));
        self.action(phi) - self.action(proposal) + self.log_proposal(&qh, &qdh, &ph)
            - self.log_proposal(&ph, &dh, &qh)
    }
}

/// `−(1/N) Φ_i (S − (N+2) a)` per component and site.
pub fn drift(phi: &[Vec<f64>], n_comp: usize, a_eps: f64) -> Vec<Vec<f64>> {
    let sites = phi.first().map_or(0, Vec::len);
    let mut s = vec![0.0; sites];
    for comp in phi {
        for (acc, v) in s.iter_mut().zip(comp) {
            *acc += v * v;
        }
    }
    let nn = n_comp as f64;
    let shift = (nn + 2.0) * a_eps;
    phi.iter()
        .map(|comp| comp.iter().zip(&s).map(|(p, sv)| -p * (sv - shift) / nn).collect())
        .collect()
}

/// `S_ε(Φ) = ε² Σ_x [S²/(4N) + ½(m − (N+2)a/N) S + ½ Σ_i |∇_ε Φ_i|²]`.
pub fn lattice_action(spec: LatticeSpec, phi: &[Vec<f64>], a_eps: f64) -> f64 {
    let n = spec.side();
    let eps = spec.spacing();
    let nn = phi.len() as f64;
    let mass = spec.mass - (nn + 2.0) * a_eps / nn;
    let mut s = vec![0.0; spec.sites()];
    let mut grad = 0.0;
    for comp in phi {
        for i in 0..n {
            let row = &comp[i * n..(i + 1) * n];
            let below = &comp[((i + 1) % n) * n..((i + 1) % n + 1) * n];
            for j in 0..n {
                let v = row[j];
                s[i * n + j] += v * v;
                let dx = below[j] - v;
                let dy = row[if j + 1 == n { 0 } else { j + 1 }] - v;
                grad += dx * dx + dy * dy;
            }
        }
    }
    let local: f64 = s.iter().map(|&sv| sv * sv / (4.0 * nn) + 0.5 * mass * sv).sum();
    eps * eps * local + 0.5 * grad
}

/// Exact free-field sample from the given iid site noise of variance `ε⁻²`.
pub fn gff_from_noise(spec: LatticeSpec, noise: &[f64]) -> ScalarLattice {
    let fft = Fft2::new(spec.side());
    let eps2 = spec.spacing().powi(2);
    let mut buf: Vec<Complex64> = noise.iter().map(|&v| Complex64::new(v * eps2, 0.0)).collect();
    fft.forward(&mut buf);
    for (c, g) in buf.iter_mut().zip(greens_symbol(spec)) {
        *c *= g.sqrt();
    }
    fft.inverse(&mut buf);
    ScalarLattice { spec, values: buf.iter().map(|c| c.re).collect() }
}

fn draw_site_noise(spec: LatticeSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let inv_eps = 1.0 / spec.spacing();
    (0..spec.sites()).map(|_| rng.sample::<f64, _>(StandardNormal) * inv_eps).collect()
}

/// Exact sample of the lattice free field with covariance `C_ε`.
pub fn sample_gff(spec: LatticeSpec, rng: &mut ChaCha8Rng) -> ScalarLattice {
    let noise = draw_site_noise(spec, rng);
    gff_from_noise(spec, &noise)
}

#[derive(Debug, Clone)]
pub struct EnsembleState {
    pub spec: LatticeSpec,
    pub n_comp: usize,
    pub phi: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub time: f64,
    pub steps: u64,
    pub accepted: u64,
    pub rng: ChaCha8Rng,
    cache: Option<Box<SpectralCache>>,
}

/// Spectra and action of the state left by the previous MALA step, reused
/// when `phi` and `z` have not been modified since.
#[derive(Debug, Clone)]
struct SpectralCache {
    phi: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    phi_hat: Vec<Vec<Complex64>>,
    drift_hat: Vec<Vec<Complex64>>,
    z_hat: Vec<Vec<Complex64>>,
    action: f64,
}

impl EnsembleState {
    /// Starts with `Φ = Z =` an exact free-field sample.
    pub fn new(spec: LatticeSpec, n_comp: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi: Vec<Vec<f64>> = (0..n_comp).map(|_| sample_gff(spec, &mut rng).values).collect();
        Self { spec, n_comp, z: phi.clone(), phi, time: 0.0, steps: 0, accepted: 0, rng, cache: None }
    }

    /// `Y = Φ − Z`, computed on demand.
    pub fn difference(&self) -> Vec<Vec<f64>> {
        self.phi
            .iter()
            .zip(&self.z)
            .map(|(p, z)| p.iter().zip(z).map(|(a, b)| a - b).collect())
            .collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            1.0
        } else {
            self.accepted as f64 / self.steps as f64
        }
    }

    fn check_finite(&self) -> Result<()> {
        for (name, fields) in [("phi", &self.phi), ("z", &self.z)] {
            if fields.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("{name} diverged at step {}", self.steps)));
            }
        }
        Ok(())
    }
}

/// Switches for the deterministic parts of the unadjusted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOptions {
    pub drift: bool,
    pub noise: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { drift: true, noise: true }
    }
}

fn draw_noise(state: &mut EnsembleState) -> Vec<Vec<f64>> {
    let spec = state.spec;
    (0..state.n_comp).map(|_| draw_site_noise(spec, &mut state.rng)).collect()
}

/// One unadjusted step of the coupled pair.
pub fn step(state: &mut EnsembleState, prop: &Propagator) -> Result<()> {
    step_with(state, prop, StepOptions::default())
}

pub fn step_with(state: &mut EnsembleState, prop: &Propagator, opts: StepOptions) -> Result<()> {
    let sites = state.spec.sites();
    let noise = if opts.noise {
        draw_noise(state)
    } else {
        vec![vec![0.0; sites]; state.n_comp]
    };
    let ph = prop.forward_all(&state.phi);
    let zh = prop.forward_all(&state.z);
    let eh = prop.forward_all(&noise);
    let dh = if opts.drift {
        prop.forward_all(&prop.drift(&state.phi))
    } else {
        vec![vec![Complex64::new(0.0, 0.0); sites]; state.n_comp]
    };
    let mut new_ph = ph;
    let mut new_zh = zh;
    for c in 0..state.n_comp {
        for k in 0..sites {
            let kick = eh[c][k] * prop.noise_gain[k];
            new_ph[c][k] = new_ph[c][k] * prop.decay[k] + dh[c][k] * prop.drift_gain[k] + kick;
            new_zh[c][k] = new_zh[c][k] * prop.decay[k] + kick;
        }
    }
    state.phi = prop.inverse_all(&new_ph);
    state.z = prop.inverse_all(&new_zh);
    state.time += prop.config.dt;
    state.steps += 1;
    state.accepted += 1;
    state.check_finite()
}

/// One Metropolis-adjusted step. Z takes the free update with the same noise
/// whether or not the proposal is accepted.
pub fn mala_step(state: &mut EnsembleState, prop: &Propagator) -> Result<bool> {
    let sites = state.spec.sites();
    let noise = draw_noise(state);
    let u: f64 = state.rng.random();
    let cache = match state.cache.take() {
        Some(c) if c.phi == state.phi && c.z == state.z => c,
        _ => Box::new(SpectralCache {
            phi_hat: prop.forward_all(&state.phi),
            drift_hat: prop.forward_all(&prop.drift(&state.phi)),
            z_hat: prop.forward_all(&state.z),
            action: prop.action(&state.phi),
            phi: state.phi.clone(),
            z: state.z.clone(),
        }),
    };
    let (ph, dh) = (&cache.phi_hat, &cache.drift_hat);
    let eh = prop.forward_all(&noise);
    let mut qh = vec![vec![Complex64::new(0.0, 0.0); sites]; state.n_comp];
    let mut new_zh = cache.z_hat.clone();
    for c in 0..state.n_comp {
        for k in 0..sites {
            let kick = eh[c][k] * prop.noise_gain[k];
            qh[c][k] = ph[c][k] * prop.decay[k] + dh[c][k] * prop.drift_gain[k] + kick;
            new_zh[c][k] = new_zh[c][k] * prop.decay[k] + kick;
        }
    }
    let proposal = prop.inverse_all(&qh);
    let qdh = prop.forward_all(&prop.drift(&proposal));
    let proposal_action = prop.action(&proposal);
    let log_ratio = cache.action - proposal_action + prop.log_proposal(&qh, &qdh, ph)
        - prop.log_proposal(ph, dh, &qh);
    let accept = log_ratio.is_finite() && (log_ratio >= 0.0 || u < log_ratio.exp());
    let mut next = cache;
    if accept {
        state.phi = proposal;
        state.accepted += 1;
        next.phi.clone_from(&state.phi);
        next.phi_hat = qh;
        next.drift_hat = qdh;
        next.action = proposal_action;
    }
    state.z = prop.inverse_all(&new_zh);
    next.z.clone_from(&state.z);
    next.z_hat = new_zh;
    state.time += prop.config.dt;
    state.steps += 1;
    state.check_finite()?;
    state.cache = Some(next);
    Ok(accept)
}

fn advance(state: &mut EnsembleState, prop: &Propagator) -> Result<()> {
    if prop.config.mala {
        mala_step(state, prop).map(|_| ())
    } else {
        step(state, prop)
    }
}

/// Runs `burn_in_steps`, then `steps` further steps, calling `observer` after
/// every `thin_stride`-th of them. Returns the number of snapshots.
pub fn run_chain(
    state: &mut EnsembleState,
    prop: &Propagator,
    steps: u64,
    observer: &mut dyn FnMut(&EnsembleState) -> Result<()>,
) -> Result<u64> {
    for _ in 0..prop.config.burn_in_steps {
        advance(state, prop)?;
    }
    let mut snapshots = 0;
    for s in 1..=steps {
        advance(state, prop)?;
        if s % prop.config.thin_stride == 0 {
            observer(state)?;
            snapshots += 1;
        }
    }
    Ok(snapshots)
}
