use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelKind};
use crate::scalar::Scalar;
use crate::spin::{ModelParams, SpinConfig};

/// Longest chain searched by [`kolmogorov_check`].
pub const KOLMOGOROV_MAX_SITES: usize = 16;

/// Relative gap between loop products above which a loop counts as violating.
pub const KOLMOGOROV_REL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeCurrent<T> {
    pub from: SpinConfig,
    pub to: SpinConfig,
    /// `K(from, to) = π(from) P(from, to) − π(to) P(to, from)`.
    pub value: T,
}

/// Currents over every single-flip edge, plus the per-state divergence.
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentReport<T> {
    /// One entry per unordered pair, oriented from the lower index.
    pub edges: Vec<EdgeCurrent<T>>,
    /// Net outflow `Σ_τ K(σ, τ)` per configuration index; zero for a stationary π.
    pub divergence: Vec<T>,
}

impl<T: Scalar> CurrentReport<T> {
    pub fn max_abs_divergence(&self) -> f64 {
        self.divergence
            .iter()
            .map(|v| v.abs().to_f64_lossy())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_current(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.value.abs().to_f64_lossy())
            .fold(0.0, f64::max)
    }
}

/// Probability current `K(σ, τ)` of `π` under `kernel`.
pub fn current<T: Scalar>(pi: &Distribution<T>, kernel: &Kernel<T>, sigma: &SpinConfig, tau: &SpinConfig) -> T {
    pi.get(sigma).clone() * kernel.entry(sigma, tau) - pi.get(tau).clone() * kernel.entry(tau, sigma)
}

pub fn currents<T: Scalar>(
    pi: &Distribution<T>,
    kind: KernelKind,
    params: &ModelParams<T>,
) -> Result<CurrentReport<T>> {
    if pi.length() != params.length() {
        return Err(Error::Mismatch(format!(
            "distribution over {} sites for a chain of {}",
            pi.length(),
            params.length()
        )));
    }
    let kernel = Kernel::new(kind, params)?;
    let len = params.length();
    let n = params.state_count();
    let mut edges = Vec::with_capacity(len * n / 2);
    let mut divergence = vec![T::zero(); n];
    for idx in 0..n {
        let sigma = SpinConfig::from_index_unchecked(len, idx);
        for i in 1..=len {
            let tau = sigma.flip_unchecked(i);
            if tau.index() < idx {
                continue;
            }
            let forward = pi.get(&sigma).clone() * kernel.flip_weight(&sigma, i).clone();
            let backward = pi.get(&tau).clone() * kernel.flip_weight(&tau, i).clone();
            let value = forward - backward;
            divergence[idx] += value.clone();
            divergence[tau.index()] -= value.clone();
            edges.push(EdgeCurrent {
                from: sigma,
                to: tau,
                value,
            });
        }
    }
    Ok(CurrentReport { edges, divergence })
}

/// A closed walk of single flips whose forward and backward transition
/// products differ.
#[derive(Clone, Debug, PartialEq)]
pub struct KolmogorovLoop {
    /// `i_0, i_1, …, i_n, i_0`.
    pub states: Vec<SpinConfig>,
    pub forward: f64,
    pub backward: f64,
}

/// Searches closed flip walks of length `3..=max_loop_len` for a violation of
/// Kolmogorov's reversibility criterion. Returns the first one found.
pub fn kolmogorov_check<T: Scalar>(
    kind: KernelKind,
    params: &ModelParams<T>,
    max_loop_len: usize,
) -> Result<Option<KolmogorovLoop>> {
    if max_loop_len < 3 {
        return Err(Error::Argument(format!(
            "loops need at least 3 steps, got {max_loop_len}"
        )));
    }
    params.require_dense(KOLMOGOROV_MAX_SITES)?;
    let kernel = Kernel::new(kind, params)?;
    let len = params.length();
    // closed flip walks have even length
    for steps in (4..=max_loop_len).step_by(2) {
        for start in SpinConfig::enumerate(len)? {
            let mut path = vec![start];
            if let Some(found) = search(&kernel, &mut path, steps) {
                return Ok(Some(found));
            }
        }
    }
    Ok(None)
}

fn search<T: Scalar>(kernel: &Kernel<T>, path: &mut Vec<SpinConfig>, steps: usize) -> Option<KolmogorovLoop> {
    let start = path[0];
    let here = *path.last().expect("path is never empty");
    let remaining = steps + 1 - path.len();
    if remaining == 0 {
        return (here == start).then(|| evaluate(kernel, path)).flatten();
    }
    let distance = (here.bits() ^ start.bits()).count_ones() as usize;
    if distance > remaining || (remaining - distance) % 2 == 1 {
        return None;
    }
    for i in 1..=here.len() {
        path.push(here.flip_unchecked(i));
        let found = search(kernel, path, steps);
        path.pop();
        if found.is_some() {
            return found;
        }
    }
    None
}

fn evaluate<T: Scalar>(kernel: &Kernel<T>, path: &[SpinConfig]) -> Option<KolmogorovLoop> {
    let mut forward = T::one();
    let mut backward = T::one();
    for pair in path.windows(2) {
        forward *= kernel.entry(&pair[0], &pair[1]);
        backward *= kernel.entry(&pair[1], &pair[0]);
    }
    let f = forward.to_f64_lossy();
    let b = backward.to_f64_lossy();
    let scale = f.abs().max(b.abs());
    let violated = if T::EXACT {
        forward != backward
    } else {
        scale > 0.0 && (f - b).abs() > KOLMOGOROV_REL_TOL * scale
    };
    violated.then(|| KolmogorovLoop {
        states: path.to_vec(),
        forward: f,
        backward: b,
    })
}
