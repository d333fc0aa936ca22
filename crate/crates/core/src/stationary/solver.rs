use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelKind};
use crate::scalar::{self, Scalar};
use crate::spin::{ModelParams, SpinConfig};

/// Knobs for [`exact_stationary_with`].
#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Chains up to this length use dense LU; longer ones use Gauss–Seidel sweeps.
    pub dense_max_sites: usize,
    /// Hard cap on the chain length.
    pub max_sites: usize,
    /// Required `‖πP − π‖_∞`.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dense_max_sites: 11,
            max_sites: 22,
            tolerance: 1e-12,
            max_sweeps: 200_000,
        }
    }
}

/// Unique stationary distribution of an irreducible kernel.
pub fn exact_stationary<T: Scalar>(kind: KernelKind, params: &ModelParams<T>) -> Result<Distribution<T>> {
    exact_stationary_with(kind, params, &SolverOptions::default())
}

pub fn exact_stationary_with<T: Scalar>(
    kind: KernelKind,
    params: &ModelParams<T>,
    opts: &SolverOptions,
) -> Result<Distribution<T>> {
    match kind {
        KernelKind::ZeroTemperature => {
            return Err(Error::Contract(
                "zero-temperature kernel is absorbing; its stationary measure is the all-plus point mass".into(),
            ))
        }
        KernelKind::DeltaP => {
            return Err(Error::Contract("delta-p is not a stochastic kernel".into()))
        }
        _ => {}
    }
    params.require_dense(opts.max_sites)?;
    let kernel = Kernel::new(kind, params)?;
    let pi = if params.length() <= opts.dense_max_sites {
        dense_solve(&kernel)?
    } else {
        gauss_seidel(&kernel, opts)?
    };
    let residual = stationarity_residual(&pi, &kernel)?;
    if !T::EXACT && residual > opts.tolerance {
        return Err(Error::NotConverged {
            residual,
            iterations: 0,
        });
    }
    Ok(pi)
}

/// `‖πP − π‖_∞` as `f64`.
pub fn stationarity_residual<T: Scalar>(pi: &Distribution<T>, kernel: &Kernel<T>) -> Result<f64> {
    let moved = kernel.left_apply(pi.values())?;
    Ok(moved
        .iter()
        .zip(pi.values())
        .map(|(a, b)| (a.clone() - b.clone()).abs().to_f64_lossy())
        .fold(0.0, f64::max))
}

/// Solves `(Pᵀ − I) π = 0` with the last balance equation replaced by `Σπ = 1`,
/// by Gaussian elimination with partial pivoting.
fn dense_solve<T: Scalar>(kernel: &Kernel<T>) -> Result<Distribution<T>> {
    let len = kernel.length();
    let n = 1usize << len;
    let mut a = vec![T::zero(); n * n];
    for src in 0..n {
        let sigma = SpinConfig::from_index_unchecked(len, src);
        a[src * n + src] += kernel.diagonal(&sigma) - T::one();
        kernel.for_each_flip(&sigma, |_, tau, w| {
            a[tau.index() * n + src] += w.clone();
        });
    }
    for v in &mut a[(n - 1) * n..] {
        *v = T::one();
    }
    let mut rhs = vec![T::zero(); n];
    rhs[n - 1] = T::one();
    lu_solve_in_place(&mut a, &mut rhs, n)?;
    Distribution::new(len, rhs)
}

/// Solves `A x = b` for a dense row-major `n × n` matrix, overwriting `b` with `x`.
pub(crate) fn lu_solve_in_place<T: Scalar>(a: &mut [T], b: &mut [T], n: usize) -> Result<()> {
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let cand = a[row * n + col].abs();
            if cand > best {
                best = cand;
                pivot = row;
            }
        }
        if best.is_zero() {
            return Err(Error::Singular(col));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col].clone();
        let (upper, lower) = a.split_at_mut((col + 1) * n);
        let pivot_row = &upper[col * n..];
        for (r, row) in lower.chunks_exact_mut(n).enumerate() {
            if row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone() / diag.clone();
            for k in col + 1..n {
                if !pivot_row[k].is_zero() {
                    row[k] -= factor.clone() * pivot_row[k].clone();
                }
            }
            row[col] = T::zero();
            let bc = b[col].clone();
            b[col + 1 + r] -= factor * bc;
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col].clone();
        for k in col + 1..n {
            if !a[col * n + k].is_zero() {
                acc -= a[col * n + k].clone() * b[k].clone();
            }
        }
        b[col] = acc / a[col * n + col].clone();
    }
    Ok(())
}

/// In-place Gauss–Seidel on the balance equations
/// `π(σ) (1 − P(σ,σ)) = Σ_τ π(τ) P(τ,σ)`, renormalised after each sweep.
fn gauss_seidel<T: Scalar>(kernel: &Kernel<T>, opts: &SolverOptions) -> Result<Distribution<T>> {
    let len = kernel.length();
    let n = 1usize << len;
    let escape: Vec<T> = (0..n)
        .map(|idx| T::one() - kernel.diagonal(&SpinConfig::from_index_unchecked(len, idx)))
        .collect();
    let start = T::one() / T::from_usize_lossless(n);
    let mut pi = Distribution::new(len, vec![start; n])?;
    let mut residual = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        let values = pi.values_mut();
        for idx in 0..n {
            let sigma = SpinConfig::from_index_unchecked(len, idx);
            let mut inflow = T::zero();
            for i in 1..=len {
                let tau = sigma.flip_unchecked(i);
                let w = kernel.flip_weight(&tau, i);
                if !w.is_zero() {
                    inflow += values[tau.index()].clone() * w.clone();
                }
            }
            values[idx] = inflow / escape[idx].clone();
        }
        let total = scalar::sum(pi.values());
        for v in pi.values_mut() {
            *v /= total.clone();
        }
        if sweep % 16 == 0 || sweep == opts.max_sweeps {
            residual = stationarity_residual(&pi, kernel)?;
            log::debug!("gauss-seidel sweep {sweep}: residual {residual:e}");
            if residual <= opts.tolerance {
                return Ok(pi);
            }
        }
    }
    Err(Error::NotConverged {
        residual,
        iterations: opts.max_sweeps,
    })
}
