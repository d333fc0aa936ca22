//! Low-temperature expansion of the plus-boundary stationary measure.
//!
//! Writing the irreversible kernel as `P = P⁽⁰⁾ + ε ΔP` with `ε = e^{-4J}`,
//! the stationary measure is `π = Σ_k ε^k π⁽ᵏ⁾` with `π⁽⁰⁾ = δ_⊞` and
//! `π⁽ᵏ⁾ = π⁽ᵏ⁻¹⁾ D`, `D = ΔP Σ_{j≥0} (P⁽⁰⁾)^j`.
//!
//! Under `P⁽⁰⁾` a spin only ever aligns with its left neighbour, so domain
//! walls drift right or annihilate and the potential
//! `Φ(σ) = Σ_{walls at i} (L + 1 − i)` strictly decreases along every
//! off-diagonal move. The transient block `T` of `P⁽⁰⁾` is therefore
//! triangular in decreasing-`Φ` order and `y ↦ y (I − T)^{-1}` is a single
//! forward substitution: exact in rational arithmetic, `O(L 2^L)` per vector.
//! For a zero-sum `y` the absorbed mass is `−Σ_T (y N)(σ)`, which is what the
//! series contributes on the `⊞` column.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::distribution::{tv_distance, Distribution};
use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelKind};
use crate::scalar::Scalar;
use crate::spin::{Boundary, ModelParams, SpinConfig, MAX_DENSE_SITES};
use crate::stationary::exact_stationary;

/// Largest chain for which [`DeviationOperator::to_dense`] materialises `D`.
pub const DENSE_DEVIATION_MAX_SITES: usize = 10;

/// Largest chain for expansion terms of order two and higher.
pub const HIGHER_ORDER_MAX_SITES: usize = 14;

/// Largest chain for [`theorem1_scan`].
pub const SCAN_MAX_SITES: usize = 14;

/// Applies the deviation operator `D` to row vectors without forming it.
#[derive(Clone, Debug)]
pub struct DeviationOperator<T> {
    params: ModelParams<T>,
    delta: Kernel<T>,
    zero: Kernel<T>,
    /// Transient configuration indices by decreasing wall potential.
    order: Vec<usize>,
}

impl<T: Scalar> DeviationOperator<T> {
    pub fn new(params: &ModelParams<T>) -> Result<Self> {
        if params.boundary() != Boundary::Plus {
            return Err(Error::Contract(
                "the expansion is around the plus-boundary zero-temperature chain".into(),
            ));
        }
        params.require_dense(MAX_DENSE_SITES)?;
        let len = params.length();
        let max_potential = len * (len + 1) / 2;
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_potential + 1];
        for sigma in SpinConfig::enumerate(len)? {
            if !sigma.is_all_plus() {
                buckets[wall_potential(&sigma)].push(sigma.index());
            }
        }
        let order = buckets.into_iter().rev().flatten().collect();
        Ok(Self {
            params: params.clone(),
            delta: Kernel::new(KernelKind::DeltaP, params)?,
            zero: Kernel::new(KernelKind::ZeroTemperature, params)?,
            order,
        })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    fn check(&self, v: &[T]) -> Result<()> {
        if v.len() == self.params.state_count() {
            Ok(())
        } else {
            Err(Error::Mismatch(format!(
                "vector of length {} for 2^{} states",
                v.len(),
                self.params.length()
            )))
        }
    }

    /// `v ↦ v ΔP`.
    pub fn apply_delta(&self, v: &[T]) -> Result<Vec<T>> {
        self.check(v)?;
        let len = self.params.length();
        let mut out: Vec<T> = vec![T::zero(); v.len()];
        for (idx, x) in v.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let sigma = SpinConfig::from_index_unchecked(len, idx);
            out[idx] += x.clone() * self.delta.diagonal(&sigma);
            self.delta.for_each_flip(&sigma, |_, tau, w| {
                out[tau.index()] += x.clone() * w.clone();
            });
        }
        Ok(out)
    }

    /// `y ↦ y Σ_{j≥0} (P⁽⁰⁾)^j` for a zero-sum row vector `y`.
    pub fn apply_fundamental(&self, y: &[T]) -> Result<Vec<T>> {
        self.check(y)?;
        let len = self.params.length();
        let sites = T::from_usize_lossless(len);
        let inv_l = T::one() / sites.clone();
        let top = y.len() - 1;
        let mut acc = y.to_vec();
        let mut absorbed = T::zero();
        for &idx in &self.order {
            let sigma = SpinConfig::from_index_unchecked(len, idx);
            let walls = sigma.left_walls();
            let x = acc[idx].clone() * sites.clone() / T::from_u32(walls).expect("small integer");
            if !x.is_zero() {
                let share = x.clone() * inv_l.clone();
                let mut mask = sigma.left_wall_mask();
                while mask != 0 {
                    let i = mask.trailing_zeros() as usize + 1;
                    mask &= mask - 1;
                    let tau = sigma.flip_unchecked(i);
                    if tau.index() != top {
                        acc[tau.index()] += share.clone();
                    }
                }
            }
            absorbed -= x.clone();
            acc[idx] = x;
        }
        acc[top] = absorbed;
        Ok(acc)
    }

    /// `v ↦ v D`.
    pub fn apply(&self, v: &[T]) -> Result<Vec<T>> {
        let y = self.apply_delta(v)?;
        self.apply_fundamental(&y)
    }

    /// Row `D(τ, ·)`.
    pub fn row(&self, tau: &SpinConfig) -> Result<Distribution<T>> {
        let e = Distribution::point_mass(tau)?;
        Distribution::new(self.params.length(), self.apply(e.values())?)
    }

    /// All rows of `D`, in configuration-index order.
    pub fn to_dense(&self) -> Result<Vec<Vec<T>>> {
        self.params.require_dense(DENSE_DEVIATION_MAX_SITES)?;
        let len = self.params.length();
        (0..self.params.state_count())
            .into_par_iter()
            .map(|idx| {
                self.row(&SpinConfig::from_index_unchecked(len, idx))
                    .map(Distribution::into_values)
            })
            .collect()
    }

    /// `‖x (I − P⁽⁰⁾) − v ΔP‖_∞`: zero when `x = v D`.
    pub fn residual(&self, v: &[T], x: &[T]) -> Result<f64> {
        let y = self.apply_delta(v)?;
        let moved = self.zero.left_apply(x)?;
        Ok(x.iter()
            .zip(&moved)
            .zip(&y)
            .map(|((a, b), c)| (a.clone() - b.clone() - c.clone()).abs().to_f64_lossy())
            .fold(0.0, f64::max))
    }
}

/// `Σ (L + 1 − i)` over sites `i` antiparallel to their left neighbour (`σ_0 = +1`).
pub(crate) fn wall_potential(sigma: &SpinConfig) -> usize {
    let len = sigma.len();
    let mut mask = sigma.left_wall_mask();
    let mut out = 0;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize + 1;
        mask &= mask - 1;
        out += len + 1 - i;
    }
    out
}

/// The order-`k` coefficient `π⁽ᵏ⁾` of the expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionTerm<T> {
    pub order: usize,
    pub term: Distribution<T>,
}

/// `π⁽⁰⁾, …, π⁽ᵏᵐᵃˣ⁾`, each obtained from the previous by one application of `D`.
pub fn expansion_terms<T: Scalar>(params: &ModelParams<T>, k_max: usize) -> Result<Vec<ExpansionTerm<T>>> {
    if k_max >= 2 {
        params.require_dense(HIGHER_ORDER_MAX_SITES)?;
    }
    let op = DeviationOperator::new(params)?;
    let len = params.length();
    let mut current = Distribution::point_mass(&SpinConfig::all_plus(len)?)?;
    let mut out = Vec::with_capacity(k_max + 1);
    for order in 0..=k_max {
        if order > 0 {
            current = Distribution::new(len, op.apply(current.values())?)?;
        }
        out.push(ExpansionTerm {
            order,
            term: current.clone(),
        });
    }
    Ok(out)
}

/// The single term `π⁽ᵏ⁾`.
pub fn pi_k<T: Scalar>(params: &ModelParams<T>, k: usize) -> Result<ExpansionTerm<T>> {
    Ok(expansion_terms(params, k)?
        .pop()
        .expect("at least the zeroth term"))
}

/// `π⁽⁰⁾ + ε π⁽¹⁾` without checking signs.
fn first_order_raw<T: Scalar>(params: &ModelParams<T>) -> Result<(Distribution<T>, T)> {
    let terms = expansion_terms(params, 1)?;
    let first = &terms[1].term;
    let values = terms[0]
        .term
        .values()
        .iter()
        .zip(first.values())
        .map(|(a, b)| a.clone() + params.eps().clone() * b.clone())
        .collect();
    let top = first.values().last().expect("nonempty").clone();
    Ok((Distribution::new(params.length(), values)?, top))
}

/// First-order measure `π^{(≤1)} = π⁽⁰⁾ + ε π⁽¹⁾`.
///
/// Fails with [`Error::Regime`] when `ε` is too large for the result to be a
/// probability vector; the error carries the largest admissible `ε`.
pub fn pi_leq1<T: Scalar>(params: &ModelParams<T>) -> Result<Distribution<T>> {
    let (dist, top_correction) = first_order_raw(params)?;
    let worst = dist
        .values()
        .iter()
        .map(Scalar::to_f64_lossy)
        .fold(f64::INFINITY, f64::min);
    if worst < -1e-12 {
        return Err(Error::Regime {
            eps: params.eps().to_f64_lossy(),
            threshold: 1.0 / top_correction.abs().to_f64_lossy(),
        });
    }
    Ok(dist)
}

/// Partial sum of the expansion with a tail estimate.
#[derive(Clone, Debug)]
pub struct SeriesSum<T> {
    pub distribution: Distribution<T>,
    /// `Σ_σ |π⁽ᵏ⁾(σ)|` for `k = 0..=k_max`.
    pub abs_sums: Vec<f64>,
    /// `ε^{K+1} Σ|π⁽ᴷ⁾| · ρ` with `ρ` the last measured growth ratio.
    pub tail_estimate: f64,
}

pub fn series_sum<T: Scalar>(params: &ModelParams<T>, k_max: usize) -> Result<SeriesSum<T>> {
    if k_max == 0 {
        return Err(Error::Argument("series needs at least one correction".into()));
    }
    let terms = expansion_terms(params, k_max)?;
    let eps = params.eps().clone();
    let mut acc = terms[0].term.clone().into_values();
    let mut power = eps.clone();
    for t in &terms[1..] {
        for (a, b) in acc.iter_mut().zip(t.term.values()) {
            *a += power.clone() * b.clone();
        }
        power *= eps.clone();
    }
    let abs_sums: Vec<f64> = terms
        .iter()
        .map(|t| t.term.abs_total().to_f64_lossy())
        .collect();
    let growth = abs_sums[k_max] / abs_sums[k_max - 1];
    let tail_estimate = eps.to_f64_lossy().powi(k_max as i32 + 1) * abs_sums[k_max] * growth;
    Ok(SeriesSum {
        distribution: Distribution::new(params.length(), acc)?,
        abs_sums,
        tail_estimate,
    })
}

/// `d_TV(π, π^{(≤1)})` against the exact stationary measure.
pub fn first_order_error(params: &ModelParams<f64>) -> Result<f64> {
    let exact = exact_stationary(KernelKind::Irreversible, params)?;
    let (approx, _) = first_order_raw(params)?;
    tv_distance(&exact, &approx)
}

/// One line of the chilled-regime scan.
#[derive(Clone, Debug, PartialEq)]
pub struct Theorem1Row {
    pub length: usize,
    pub c: f64,
    /// `c − 1/2`.
    pub gamma: f64,
    pub coupling: f64,
    pub dtv: f64,
    /// `e^{-8J}`.
    pub eps2: f64,
    pub ratio: f64,
}

/// For each `c` sets `J = c log L` and compares `π` with `π^{(≤1)}`.
pub fn theorem1_scan(length: usize, c_values: &[f64]) -> Result<Vec<Theorem1Row>> {
    if !(2..=SCAN_MAX_SITES).contains(&length) {
        return Err(Error::Resource(format!(
            "scan needs 2 <= L <= {SCAN_MAX_SITES}, got {length}"
        )));
    }
    c_values
        .par_iter()
        .map(|&c| {
            let params = ModelParams::<f64>::chilled(length, c, Boundary::Plus)?;
            let dtv = first_order_error(&params)?;
            let eps2 = (-8.0 * params.coupling()).exp();
            Ok(Theorem1Row {
                length,
                c,
                gamma: c - 0.5,
                coupling: params.coupling(),
                dtv,
                eps2,
                ratio: dtv / eps2,
            })
        })
        .collect()
}

/// CSV `L,c,J,dtv,eps2,ratio`.
pub fn write_theorem1_csv<W: Write>(rows: &[Theorem1Row], mut out: W) -> io::Result<()> {
    writeln!(out, "L,c,J,dtv,eps2,ratio")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:e},{:e},{}",
            r.length, r.c, r.coupling, r.dtv, r.eps2, r.ratio
        )?;
    }
    Ok(())
}

/// CSV `k,index,config,value`, skipping zero entries.
pub fn write_terms_csv<T: Scalar, W: Write>(terms: &[ExpansionTerm<T>], mut out: W) -> io::Result<()> {
    writeln!(out, "k,index,config,value")?;
    for t in terms {
        for (sigma, v) in t.term.iter() {
            if !v.is_zero() {
                writeln!(out, "{},{},{},{}", t.order, sigma.index(), sigma, v.to_f64_lossy())?;
            }
        }
    }
    Ok(())
}
