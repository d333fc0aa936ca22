//! Closed forms for the first-order term of the expansion.
//!
//! The weight that `π⁽¹⁾` puts on a single minus block `(i;m)` is a partial sum
//! of the terms
//!
//! `t(l, m) = 2^{-(2l+m)} C_{l+m-1,l}`,
//!
//! with `C_{n,k}` the Catalan triangle. By the reflection principle `t(l, m)`
//! is also the probability that a simple random walk first reaches level `m`
//! at step `2l + m`, which gives an independent oracle.

use std::io::{self, Write};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spin::Boundary;
use crate::stationary::gibbs_minus_moment;

/// `C_{n,k} = (n+k)! (n-k+1) / (k! (n+1)!)`.
pub fn catalan_triangle(n: usize, k: usize) -> Result<BigInt> {
    if k > n {
        return Err(Error::Argument(format!("C_{{{n},{k}}} needs k <= n")));
    }
    let factorial = |a: usize| -> BigInt { (1..=a).map(BigInt::from).product() };
    let num = factorial(n + k) * (n - k + 1);
    let den = factorial(k) * factorial(n + 1);
    let (q, r) = num.div_rem(&den);
    debug_assert!(r.is_zero());
    Ok(q)
}

/// `t(l, m)`, built from `t(0, m) = 2^{-m}` by the ratio
/// `t(l+1)/t(l) = (2l+m)(2l+m+1) / (4(l+1)(l+m+1))`.
///
/// `m = 0` gives the degenerate series `1, 0, 0, …`.
pub fn first_order_term<T: Scalar>(l: usize, m: usize) -> T {
    let mut t = T::one() / T::from_usize_lossless(2).powu(m as u32);
    for j in 0..l {
        t *= T::from_usize_lossless((2 * j + m) * (2 * j + m + 1))
            / T::from_usize_lossless(4 * (j + 1) * (j + m + 1));
    }
    t
}

/// `ln t(l, m)` through log-Gamma, for `m ≥ 1`.
pub fn ln_first_order_term(l: usize, m: usize) -> f64 {
    let (l, m) = (l as f64, m as f64);
    -(2.0 * l + m) * std::f64::consts::LN_2 + ln_gamma(2.0 * l + m) + m.ln()
        - ln_gamma(l + 1.0)
        - ln_gamma(l + m + 1.0)
}

/// `π⁽¹⁾` at the block of `m` minus spins starting at site `i`:
/// `Σ_{l=0}^{i-1} t(l, m)`. Does not depend on the chain length.
pub fn pi1_interval<T: Scalar>(i: usize, m: usize) -> Result<T> {
    if i == 0 {
        return Err(Error::Argument("interval start must be >= 1".into()));
    }
    let mut t = T::one() / T::from_usize_lossless(2).powu(m as u32);
    let mut acc = t.clone();
    for j in 0..i - 1 {
        t *= T::from_usize_lossless((2 * j + m) * (2 * j + m + 1))
            / T::from_usize_lossless(4 * (j + 1) * (j + m + 1));
        acc += t.clone();
    }
    Ok(acc)
}

/// `π⁽¹⁾` at the ray of minus spins on `[i, L]`: `Σ_{l=1}^{i} π⁽¹⁾_{(l; L-l)}`.
///
/// The `l = L` summand has an empty block; its series is `1`.
pub fn pi1_ray<T: Scalar>(i: usize, length: usize) -> Result<T> {
    if i == 0 || i > length {
        return Err(Error::Argument(format!("ray start {i} outside 1..={length}")));
    }
    let mut acc = T::zero();
    for l in 1..=i {
        acc += pi1_interval::<T>(l, length - l)?;
    }
    Ok(acc)
}

/// Kahan–Babuška (Neumaier) compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + carry
}

/// `1 − π⁽¹⁾_{(i;m)}` in log-space arithmetic; usable for `i` in the tens of thousands.
pub fn pi1_interval_deficit(i: usize, m: usize) -> Result<f64> {
    if i == 0 || m == 0 {
        return Err(Error::Argument(format!("deficit needs i, m >= 1, got ({i}, {m})")));
    }
    let partial = compensated_sum((0..i).map(|l| ln_first_order_term(l, m).exp()));
    Ok(1.0 - partial)
}

/// Exact pmf of the first time a simple symmetric walk from 0 reaches `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstPassageTable {
    m: usize,
    /// `pmf[n] = P(τ_m = n)` for `n = 0..=n_max`.
    pmf: Vec<BigRational>,
}

impl FirstPassageTable {
    pub fn level(&self) -> usize {
        self.m
    }

    pub fn n_max(&self) -> usize {
        self.pmf.len() - 1
    }

    /// `P(τ_m = n)`; zero beyond the table.
    pub fn pmf(&self, n: usize) -> BigRational {
        self.pmf.get(n).cloned().unwrap_or_else(BigRational::zero)
    }

    /// `P(τ_m < n)`.
    pub fn cdf_before(&self, n: usize) -> Result<BigRational> {
        if n > self.pmf.len() {
            return Err(Error::Argument(format!(
                "P(tau < {n}) needs the table up to {}",
                n - 1
            )));
        }
        Ok(self.pmf[..n].iter().fold(BigRational::zero(), |a, b| a + b))
    }
}

/// Dynamic programme over (step, position) with an absorbing barrier at `m`.
pub fn srw_first_passage(m: usize, n_max: usize) -> Result<FirstPassageTable> {
    if m == 0 || n_max < m {
        return Err(Error::Argument(format!(
            "first passage to level {m} needs m >= 1 and n_max >= m, got n_max = {n_max}"
        )));
    }
    // position p is stored at p + n_max; live positions are < m
    let width = n_max + m;
    let mut counts = vec![BigInt::zero(); width];
    counts[n_max] = BigInt::one();
    let mut pmf = vec![BigRational::zero(); n_max + 1];
    let mut scale = BigInt::one();
    for step in 1..=n_max {
        scale <<= 1;
        let hits = counts[width - 1].clone();
        pmf[step] = BigRational::new(hits, scale.clone());
        let mut next = vec![BigInt::zero(); width];
        for (p, c) in counts.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if p > 0 {
                next[p - 1] += c;
            }
            if p + 1 < width {
                next[p + 1] += c;
            }
        }
        counts = next;
    }
    Ok(FirstPassageTable { m, pmf })
}

/// `Σ_{l=0}^{l_max} t(l, m)`, exactly.
///
/// Accumulates the numerator over the common denominator `2^{2 l_max + m}`
/// by Horner's rule, so only integer arithmetic is involved.
pub fn lemma41_partial(m: usize, l_max: usize) -> Result<BigRational> {
    if m == 0 {
        return Err(Error::Argument("level must be >= 1".into()));
    }
    // c = C_{l+m-1, l}
    let mut c = BigInt::one();
    let mut num = BigInt::one();
    for l in 0..l_max {
        c *= (2 * l + m) * (2 * l + m + 1);
        let den = (l + 1) * (l + m + 1);
        c = c.div_floor(&BigInt::from(den));
        num = (num << 2) + &c;
    }
    Ok(BigRational::new(num, BigInt::one() << (2 * l_max + m)))
}

/// Smallest `l_max` whose partial sum exceeds `1 − tol`, located in log space
/// and then confirmed with the exact sum.
pub fn lemma41_threshold(m: usize, tol: f64) -> Result<(usize, BigRational)> {
    if m == 0 || !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Argument(format!("need m >= 1 and 0 < tol < 1, got ({m}, {tol})")));
    }
    let mut partial = 0.0;
    let mut carry = 0.0;
    let mut l = 0;
    loop {
        let v = ln_first_order_term(l, m).exp();
        let t = partial + v;
        carry += if partial >= v { (partial - t) + v } else { (v - t) + partial };
        partial = t;
        if 1.0 - (partial + carry) > tol {
            l += 1;
            continue;
        }
        let target = BigRational::one() - BigRational::from_float(tol).expect("finite");
        // rounding in the log-space search can misplace the crossing by a step
        let mut lo = l;
        let mut exact = lemma41_partial(m, lo)?;
        while exact <= target {
            lo += 1;
            exact = lemma41_partial(m, lo)?;
        }
        while lo > 0 {
            let below = lemma41_partial(m, lo - 1)?;
            if below <= target {
                break;
            }
            lo -= 1;
            exact = below;
        }
        return Ok((lo, exact));
    }
}

/// The term `t(l, m)` next to its Stirling-type bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct StirlingBounds {
    pub l: usize,
    pub m: usize,
    pub value: f64,
    /// `2^{-m} / (3√6) · l^{-3/2}`.
    pub lower: f64,
    /// `m/2 · l^{-3/2}`.
    pub upper: f64,
    /// `½ e^{-m²/(2(m+l))} · m l^{-3/2}`. Not a valid bound when `m` is
    /// comparable to `l` or larger (first failure at `l = 11, m = 18`), so it is
    /// reported rather than enforced.
    pub sharpened_upper: f64,
}

impl StirlingBounds {
    pub fn sharpened_holds(&self) -> bool {
        self.value <= self.sharpened_upper
    }
}

/// Evaluates `t(l, m)` and fails with [`Error::Invariant`] unless
/// `lower ≤ t ≤ upper`.
pub fn stirling_bounds_check(l: usize, m: usize) -> Result<StirlingBounds> {
    if l == 0 || m == 0 {
        return Err(Error::Argument(format!("bounds need l, m >= 1, got ({l}, {m})")));
    }
    let (lf, mf) = (l as f64, m as f64);
    let decay = lf.powf(-1.5);
    let out = StirlingBounds {
        l,
        m,
        value: ln_first_order_term(l, m).exp(),
        lower: 0.5f64.powi(m as i32) / (3.0 * 6f64.sqrt()) * decay,
        upper: 0.5 * mf * decay,
        sharpened_upper: 0.5 * (-mf * mf / (2.0 * (mf + lf))).exp() * mf * decay,
    };
    if !(out.lower <= out.value && out.value <= out.upper) {
        return Err(Error::Invariant(format!(
            "t({l},{m}) = {:e} outside [{:e}, {:e}]",
            out.value, out.lower, out.upper
        )));
    }
    Ok(out)
}

/// `4m e^{-m²/(2(m+i))}`, an upper bound for `π⁽¹⁾_{(i;m)}`.
pub fn interval_upper_bound(i: usize, m: usize) -> f64 {
    let (i, m) = (i as f64, m as f64);
    4.0 * m * (-m * m / (2.0 * (m + i))).exp()
}

/// One row of the normalised-deficit sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct DeficitRow {
    pub i: usize,
    pub m: usize,
    pub pi1: f64,
    pub deficit: f64,
    /// `deficit · √i`, which converges to a constant depending on `m`.
    pub scaled: f64,
}

pub fn theorem2_constant(m: usize, i_list: &[usize]) -> Result<Vec<DeficitRow>> {
    if i_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("i values must be strictly increasing".into()));
    }
    i_list
        .par_iter()
        .map(|&i| {
            let deficit = pi1_interval_deficit(i, m)?;
            Ok(DeficitRow {
                i,
                m,
                pi1: 1.0 - deficit,
                deficit,
                scaled: deficit * (i as f64).sqrt(),
            })
        })
        .collect()
}

/// Expected number of minus spins under the first-order measure against the
/// Gibbs value, at `J = log L`.
#[derive(Clone, Debug, PartialEq)]
pub struct Theorem3Row {
    pub length: usize,
    pub coupling: f64,
    pub pi_leq1_m: f64,
    pub gibbs_m: f64,
    pub ratio: f64,
}

/// Longest chain for [`first_order_minus_moment`]; the cost is quadratic in `L`.
pub const MOMENT_CLOSED_FORM_MAX_SITES: usize = 20_000;

/// `e^{-4J} [Σ_{(i;m)} m π⁽¹⁾_{(i;m)} + Σ_i (L+1-i) π⁽¹⁾_{(i)}]` from the closed forms.
pub fn first_order_minus_moment(length: usize, coupling: f64) -> Result<f64> {
    if length < 2 {
        return Err(Error::Argument(format!("chain length {length} < 2")));
    }
    if length > MOMENT_CLOSED_FORM_MAX_SITES {
        return Err(Error::Resource(format!(
            "closed-form moment needs L <= {MOMENT_CLOSED_FORM_MAX_SITES}, got {length}"
        )));
    }
    // blocks (i;m) need i + m <= L; the ray sums only use the last one, (L-m; m)
    let mut blocks = 0.0;
    let mut last = vec![0.0; length];
    for m in 1..length {
        let mut t = 0.5f64.powi(m as i32);
        let mut acc = t;
        let mut row = acc;
        for j in 0..length - m - 1 {
            t *= ((2 * j + m) * (2 * j + m + 1)) as f64 / (4 * (j + 1) * (j + m + 1)) as f64;
            acc += t;
            row += acc;
        }
        blocks += m as f64 * row;
        last[m] = acc;
    }
    let mut rays = 0.0;
    let mut ray = 0.0;
    for i in 1..=length {
        ray += if i == length { 1.0 } else { last[length - i] };
        rays += (length + 1 - i) as f64 * ray;
    }
    Ok((-4.0 * coupling).exp() * (blocks + rays))
}

pub fn theorem3_row(length: usize) -> Result<Theorem3Row> {
    let coupling = (length as f64).ln();
    let pi_leq1_m = first_order_minus_moment(length, coupling)?;
    let gibbs_m = gibbs_minus_moment(length, coupling, Boundary::Plus)?;
    Ok(Theorem3Row {
        length,
        coupling,
        pi_leq1_m,
        gibbs_m,
        ratio: pi_leq1_m / gibbs_m,
    })
}

pub fn theorem3_table(lengths: &[usize]) -> Result<Vec<Theorem3Row>> {
    lengths.par_iter().map(|&l| theorem3_row(l)).collect()
}

pub fn write_theorem2_csv<W: Write>(rows: &[DeficitRow], mut out: W) -> io::Result<()> {
    writeln!(out, "i,m,pi1,deficit,deficit_sqrt_i")?;
    for r in rows {
        writeln!(out, "{},{},{},{:e},{}", r.i, r.m, r.pi1, r.deficit, r.scaled)?;
    }
    Ok(())
}

/// CSV `m,l_max,partial_sum` with the exact sums printed as decimals.
pub fn write_lemma41_csv<W: Write>(rows: &[(usize, usize, BigRational)], mut out: W) -> io::Result<()> {
    writeln!(out, "m,l_max,partial_sum")?;
    for (m, l_max, s) in rows {
        writeln!(out, "{m},{l_max},{}", s.to_f64_lossy())?;
    }
    Ok(())
}

pub fn write_theorem3_csv<W: Write>(rows: &[Theorem3Row], mut out: W) -> io::Result<()> {
    writeln!(out, "L,J,pi_leq1_m,gibbs_m,ratio")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:e},{:e},{}",
            r.length, r.coupling, r.pi_leq1_m, r.gibbs_m, r.ratio
        )?;
    }
    Ok(())
}
