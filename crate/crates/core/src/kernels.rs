//! Single-spin-flip transition kernels over the `2^L` configuration space.
//!
//! Rows are generated on demand from a small table of per-site rates, so
//! matrix-free iteration and Monte Carlo never materialise the full matrix.
//! [`assemble`] builds the explicit sparse matrix when it is wanted.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spin::{Boundary, ModelParams, SpinConfig};

/// Above this length `assemble` logs a memory warning.
pub const ASSEMBLE_WARN_SITES: usize = 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// Flip with rate `e^{-2J(σ_i σ_{i-1} + 1)} / L`.
    Irreversible,
    /// Heat-bath style reversible dynamics `e^{-[ΔH]_+} / L`.
    Glauber,
    /// `J → ∞` limit of the irreversible kernel (plus boundary only).
    ZeroTemperature,
    /// First-order correction `ΔP` with `P = P⁽⁰⁾ + e^{-4J} ΔP` (plus boundary only).
    DeltaP,
}

impl KernelKind {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Irreversible => "irreversible",
            KernelKind::Glauber => "glauber",
            KernelKind::ZeroTemperature => "zero-temperature",
            KernelKind::DeltaP => "delta-p",
        }
    }

    /// Rows sum to one (stochastic) rather than zero.
    pub fn is_stochastic(&self) -> bool {
        !matches!(self, KernelKind::DeltaP)
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "irreversible" | "irr" => Ok(KernelKind::Irreversible),
            "glauber" | "reversible" => Ok(KernelKind::Glauber),
            "zero-temperature" | "zero" => Ok(KernelKind::ZeroTemperature),
            "delta-p" | "deltap" | "delta" => Ok(KernelKind::DeltaP),
            other => Err(Error::Argument(format!("unknown kernel kind {other:?}"))),
        }
    }
}

/// One row of a kernel: off-diagonal flip targets and the diagonal entry.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelRow<T> {
    pub source: SpinConfig,
    /// Nonzero off-diagonal entries, in increasing site order.
    pub entries: Vec<(SpinConfig, T)>,
    pub diagonal: T,
}

impl<T: Scalar> KernelRow<T> {
    pub fn sum(&self) -> T {
        self.entries
            .iter()
            .fold(self.diagonal.clone(), |acc, (_, w)| acc + w.clone())
    }
}

/// Per-site flip rates, already divided by `L`.
#[derive(Clone, Debug)]
enum Rates<T> {
    /// Rates indexed by the left-neighbour relation.
    LeftNeighbour {
        antiparallel: T,
        parallel: T,
        /// Site 1 under the empty boundary (`σ_0 = 0`).
        unbound: T,
    },
    /// `w^n / L` for `n = [ΔH]_+ / 2J ∈ {0, 1, 2}`.
    Glauber([T; 3]),
}

/// A transition kernel bound to a set of model parameters.
#[derive(Clone, Debug)]
pub struct Kernel<T> {
    kind: KernelKind,
    params: ModelParams<T>,
    rates: Rates<T>,
}

impl<T: Scalar> Kernel<T> {
    pub fn new(kind: KernelKind, params: &ModelParams<T>) -> Result<Self> {
        let len = params.length();
        let inv_l = T::one() / T::from_usize_lossless(len);
        let w = params.bond_weight().clone();
        let eps = params.eps().clone();
        let rates = match kind {
            KernelKind::Irreversible => Rates::LeftNeighbour {
                antiparallel: inv_l.clone(),
                parallel: eps * inv_l.clone(),
                unbound: w * inv_l,
            },
            KernelKind::ZeroTemperature | KernelKind::DeltaP => {
                if params.boundary() != Boundary::Plus {
                    return Err(Error::Contract(format!(
                        "{kind} kernel is only defined for the plus boundary"
                    )));
                }
                let (antiparallel, parallel) = if kind == KernelKind::ZeroTemperature {
                    (inv_l, T::zero())
                } else {
                    (T::zero(), inv_l)
                };
                Rates::LeftNeighbour {
                    antiparallel,
                    parallel,
                    unbound: T::zero(),
                }
            }
            KernelKind::Glauber => Rates::Glauber([
                inv_l.clone(),
                w.clone() * inv_l.clone(),
                w.clone() * w * inv_l,
            ]),
        };
        Ok(Self {
            kind,
            params: params.clone(),
            rates,
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn length(&self) -> usize {
        self.params.length()
    }

    /// Weight `P(σ, σ^{(i)})`, zero allowed.
    #[inline]
    pub fn flip_weight(&self, sigma: &SpinConfig, i: usize) -> &T {
        match &self.rates {
            Rates::LeftNeighbour {
                antiparallel,
                parallel,
                unbound,
            } => {
                if i == 1 && self.params.boundary() == Boundary::Empty {
                    unbound
                } else if (sigma.left_wall_mask() >> (i - 1)) & 1 == 1 {
                    antiparallel
                } else {
                    parallel
                }
            }
            Rates::Glauber(pow) => {
                let n = glauber_exponent(sigma, i, self.params.boundary());
                &pow[n.max(0) as usize]
            }
        }
    }

    /// Calls `f(i, σ^{(i)}, P(σ, σ^{(i)}))` for every nonzero off-diagonal entry.
    #[inline]
    pub fn for_each_flip(&self, sigma: &SpinConfig, mut f: impl FnMut(usize, SpinConfig, &T)) {
        for i in 1..=sigma.len() {
            let w = self.flip_weight(sigma, i);
            if !w.is_zero() {
                f(i, sigma.flip_unchecked(i), w);
            }
        }
    }

    /// Diagonal entry `P(σ, σ)`.
    pub fn diagonal(&self, sigma: &SpinConfig) -> T {
        let mut out = T::zero();
        for i in 1..=sigma.len() {
            out -= self.flip_weight(sigma, i).clone();
        }
        if self.kind.is_stochastic() {
            out += T::one();
        }
        out
    }

    /// Full row of the kernel at `σ`.
    pub fn row(&self, sigma: &SpinConfig) -> Result<KernelRow<T>> {
        if sigma.len() != self.length() {
            return Err(Error::Mismatch(format!(
                "configuration of {} sites for a chain of {}",
                sigma.len(),
                self.length()
            )));
        }
        let mut entries = Vec::with_capacity(sigma.len());
        self.for_each_flip(sigma, |_, tau, w| entries.push((tau, w.clone())));
        Ok(KernelRow {
            source: *sigma,
            entries,
            diagonal: self.diagonal(sigma),
        })
    }

    /// `P(σ, τ)` for arbitrary pairs.
    pub fn entry(&self, sigma: &SpinConfig, tau: &SpinConfig) -> T {
        let diff = sigma.bits() ^ tau.bits();
        if diff == 0 {
            self.diagonal(sigma)
        } else if diff.count_ones() == 1 {
            self.flip_weight(sigma, diff.trailing_zeros() as usize + 1)
                .clone()
        } else {
            T::zero()
        }
    }

    /// Matrix-free `v ↦ v P` over dense configuration-indexed vectors.
    pub fn left_apply(&self, v: &[T]) -> Result<Vec<T>> {
        let len = self.length();
        if v.len() != self.params.state_count() {
            return Err(Error::Mismatch(format!(
                "vector of length {} for 2^{len} states",
                v.len()
            )));
        }
        Ok((0..v.len())
            .into_par_iter()
            .map(|idx| {
                let sigma = SpinConfig::from_index_unchecked(len, idx);
                let mut acc = v[idx].clone() * self.diagonal(&sigma);
                for i in 1..=len {
                    let tau = sigma.flip_unchecked(i);
                    let w = self.flip_weight(&tau, i);
                    if !w.is_zero() {
                        acc += v[tau.index()].clone() * w.clone();
                    }
                }
                acc
            })
            .collect())
    }
}

/// `[H(σ^{(i)}) - H(σ)] / 2J`, i.e. `σ_i` times the sum of its neighbours.
#[inline]
pub(crate) fn glauber_exponent(sigma: &SpinConfig, i: usize, boundary: Boundary) -> i32 {
    let edge = match boundary {
        Boundary::Plus => 1,
        Boundary::Empty => 0,
    };
    let left = if i == 1 { edge } else { sigma.spin(i - 1) as i32 };
    let right = if i == sigma.len() {
        edge
    } else {
        sigma.spin(i + 1) as i32
    };
    sigma.spin(i) as i32 * (left + right)
}

/// Ising energy. The empty boundary uses the free-chain sum over `i = 2..L`;
/// the plus boundary adds the bonds to `σ_0 = σ_{L+1} = +1`.
pub fn hamiltonian<T: Scalar>(params: &ModelParams<T>, sigma: &SpinConfig) -> f64 {
    let len = sigma.len() as i64;
    // each antiparallel bond is -1, each parallel one +1
    let (bonds, walls) = match params.boundary() {
        Boundary::Empty => (len - 1, sigma.interior_pair_count() as i64),
        Boundary::Plus => (len + 1, sigma.plus_boundary_walls() as i64),
    };
    -params.coupling() * (bonds - 2 * walls) as f64
}

/// Explicit sparse matrix: all `2^L` rows in configuration-index order.
#[derive(Clone, Debug)]
pub struct SparseKernel<T> {
    kind: KernelKind,
    params: ModelParams<T>,
    rows: Vec<KernelRow<T>>,
}

/// Materialise every row of the kernel.
pub fn assemble<T: Scalar>(kind: KernelKind, params: &ModelParams<T>) -> Result<SparseKernel<T>> {
    params.require_dense(crate::spin::MAX_DENSE_SITES)?;
    if params.length() > ASSEMBLE_WARN_SITES {
        log::warn!(
            "assembling a 2^{} state kernel; expect large memory use",
            params.length()
        );
    }
    let kernel = Kernel::new(kind, params)?;
    let len = params.length();
    let rows = (0..params.state_count())
        .into_par_iter()
        .map(|idx| kernel.row(&SpinConfig::from_index_unchecked(len, idx)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseKernel {
        kind,
        params: params.clone(),
        rows,
    })
}

impl<T: Scalar> SparseKernel<T> {
    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn rows(&self) -> &[KernelRow<T>] {
        &self.rows
    }

    /// Entry at `(src, dst)` by dense index.
    pub fn get(&self, src: usize, dst: usize) -> T {
        let row = &self.rows[src];
        if src == dst {
            return row.diagonal.clone();
        }
        row.entries
            .iter()
            .find(|(tau, _)| tau.index() == dst)
            .map(|(_, w)| w.clone())
            .unwrap_or_else(T::zero)
    }

    /// `v ↦ v P`.
    pub fn left_apply(&self, v: &[T]) -> Vec<T> {
        let mut out: Vec<T> = self
            .rows
            .iter()
            .zip(v)
            .map(|(row, x)| x.clone() * row.diagonal.clone())
            .collect();
        for (row, x) in self.rows.iter().zip(v) {
            for (tau, w) in &row.entries {
                out[tau.index()] += x.clone() * w.clone();
            }
        }
        out
    }

    /// Plain-text triplet dump: a `# L= J= bc= kind=` header, then
    /// `src_index dst_index weight` per nonzero entry (diagonal first in each row).
    pub fn write_triplets<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "# L={} J={} bc={} kind={}",
            self.params.length(),
            self.params.coupling(),
            self.params.boundary(),
            self.kind
        )?;
        for row in &self.rows {
            let src = row.source.index();
            if !row.diagonal.is_zero() {
                writeln!(out, "{src} {src} {}", row.diagonal)?;
            }
            for (tau, w) in &row.entries {
                writeln!(out, "{src} {} {w}", tau.index())?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn params(len: usize, j: f64, bc: Boundary) -> ModelParams<f64> {
        ModelParams::new(len, j, bc).unwrap()
    }

    fn cfg(s: &str) -> SpinConfig {
        s.parse().unwrap()
    }

    #[test]
    fn irreversible_plus_examples() {
        let j = 0.7;
        let p = params(2, j, Boundary::Plus);
        let k = Kernel::new(KernelKind::Irreversible, &p).unwrap();
        assert!((k.flip_weight(&cfg("-+"), 1) - 0.5).abs() < 1e-16);
        let expected = (-4.0 * j).exp() / 2.0;
        assert!((k.flip_weight(&cfg("++"), 2) - expected).abs() < 1e-16);
    }

    #[test]
    fn irreversible_empty_site_one_uses_bond_weight() {
        let p = params(3, 1.0, Boundary::Empty);
        let k = Kernel::new(KernelKind::Irreversible, &p).unwrap();
        for s in ["+++", "-++", "+-+"] {
            assert!((k.flip_weight(&cfg(s), 1) - (-2.0f64).exp() / 3.0).abs() < 1e-16);
        }
    }

    #[test]
    fn delta_p_at_all_plus() {
        let p = params(4, 1.0, Boundary::Plus);
        let k = Kernel::new(KernelKind::DeltaP, &p).unwrap();
        let row = k.row(&SpinConfig::all_plus(4).unwrap()).unwrap();
        assert_eq!(row.entries.len(), 4);
        assert!(row.entries.iter().all(|(_, w)| (*w - 0.25).abs() < 1e-16));
        assert_eq!(row.diagonal, -1.0);
        assert!(row.sum().abs() < 1e-16);
    }

    #[test]
    fn plus_only_kinds_reject_empty_boundary() {
        let p = params(3, 1.0, Boundary::Empty);
        for kind in [KernelKind::ZeroTemperature, KernelKind::DeltaP] {
            assert!(matches!(Kernel::new(kind, &p), Err(Error::Contract(_))));
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let j = 1.3;
        let e = params(3, j, Boundary::Empty);
        assert!((hamiltonian(&e, &cfg("+++")) + 2.0 * j).abs() < 1e-15);
        assert!((hamiltonian(&e, &cfg("+-+")) - 2.0 * j).abs() < 1e-15);
        let p = params(3, j, Boundary::Plus);
        assert!((hamiltonian(&p, &cfg("+++")) + 4.0 * j).abs() < 1e-15);
        assert!((hamiltonian(&p, &cfg("---")) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn glauber_rate_matches_energy_difference() {
        for bc in [Boundary::Empty, Boundary::Plus] {
            let p = params(6, 0.8, bc);
            let k = Kernel::new(KernelKind::Glauber, &p).unwrap();
            for sigma in SpinConfig::enumerate(6).unwrap() {
                for i in 1..=6 {
                    let dh = hamiltonian(&p, &sigma.flip_unchecked(i)) - hamiltonian(&p, &sigma);
                    let expected = (-dh.max(0.0)).exp() / 6.0;
                    assert!((k.flip_weight(&sigma, i) - expected).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn zero_temperature_single_site() {
        let p = params(1, 2.0, Boundary::Plus);
        let m = assemble(KernelKind::ZeroTemperature, &p).unwrap();
        // index 0 is "-", index 1 is "+"
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.get(1, 1), 1.0);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn row_sums_follow_kind_contract() {
        for len in 1..=12 {
            for &j in &[0.5, 1.0, 2.0] {
                for bc in [Boundary::Empty, Boundary::Plus] {
                    let p = params(len, j, bc);
                    for kind in [
                        KernelKind::Irreversible,
                        KernelKind::Glauber,
                        KernelKind::ZeroTemperature,
                        KernelKind::DeltaP,
                    ] {
                        let Ok(k) = Kernel::new(kind, &p) else {
                            continue;
                        };
                        let target = if kind.is_stochastic() { 1.0 } else { 0.0 };
                        for sigma in SpinConfig::enumerate(len).unwrap() {
                            let row = k.row(&sigma).unwrap();
                            assert!(row.entries.len() <= len);
                            assert!((row.sum() - target).abs() < 1e-14);
                            if kind != KernelKind::DeltaP {
                                assert!(row.entries.iter().all(|(_, w)| *w >= 0.0));
                                assert!(row.diagonal >= -1e-15);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn decomposition_into_zero_temperature_plus_correction() {
        for len in 1..=12 {
            for &j in &[0.5, 1.0, 2.0] {
                let p = params(len, j, Boundary::Plus);
                let full = Kernel::new(KernelKind::Irreversible, &p).unwrap();
                let zero = Kernel::new(KernelKind::ZeroTemperature, &p).unwrap();
                let delta = Kernel::new(KernelKind::DeltaP, &p).unwrap();
                let eps = *p.eps();
                for sigma in SpinConfig::enumerate(len).unwrap() {
                    let d = full.diagonal(&sigma) - zero.diagonal(&sigma) - eps * delta.diagonal(&sigma);
                    assert!(d.abs() < 1e-15);
                    for i in 1..=len {
                        let d = full.flip_weight(&sigma, i)
                            - zero.flip_weight(&sigma, i)
                            - eps * delta.flip_weight(&sigma, i);
                        assert!(d.abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn decomposition_is_exact_in_rationals() {
        let w = BigRational::ratio(1, 3);
        let p = ModelParams::with_bond_weight(5, w, Boundary::Plus).unwrap();
        let full = assemble(KernelKind::Irreversible, &p).unwrap();
        let zero = assemble(KernelKind::ZeroTemperature, &p).unwrap();
        let delta = assemble(KernelKind::DeltaP, &p).unwrap();
        for src in 0..32 {
            for dst in 0..32 {
                assert_eq!(
                    full.get(src, dst),
                    zero.get(src, dst) + p.eps().clone() * delta.get(src, dst)
                );
            }
        }
    }

    #[test]
    fn diagonal_agrees_with_wall_count_form() {
        for len in 1..=10 {
            let p = params(len, 0.9, Boundary::Plus);
            let k = Kernel::new(KernelKind::Irreversible, &p).unwrap();
            let eps = *p.eps();
            for sigma in SpinConfig::enumerate(len).unwrap() {
                let frac = sigma.left_walls() as f64 / len as f64;
                let alt = 1.0 - frac - (1.0 - frac) * eps;
                assert!((k.diagonal(&sigma) - alt).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_temperature_reaches_all_plus_from_everywhere() {
        for len in 1..=12 {
            let p = params(len, 1.0, Boundary::Plus);
            let k = Kernel::new(KernelKind::ZeroTemperature, &p).unwrap();
            let top = SpinConfig::all_plus(len).unwrap();
            let row = k.row(&top).unwrap();
            assert!(row.entries.is_empty());
            assert_eq!(row.diagonal, 1.0);
            // reverse search from the absorbing state
            let n = 1usize << len;
            let mut reached = vec![false; n];
            reached[top.index()] = true;
            let mut stack = vec![top];
            while let Some(tau) = stack.pop() {
                for i in 1..=len {
                    let sigma = tau.flip_unchecked(i);
                    if !reached[sigma.index()] && *k.flip_weight(&sigma, i) > 0.0 {
                        reached[sigma.index()] = true;
                        stack.push(sigma);
                    }
                }
            }
            assert!(reached.iter().all(|&r| r), "L={len}");
        }
    }

    #[test]
    fn delta_p_absolute_row_sum() {
        for len in 1..=12 {
            let p = params(len, 1.0, Boundary::Plus);
            let k = Kernel::new(KernelKind::DeltaP, &p).unwrap();
            for sigma in SpinConfig::enumerate(len).unwrap() {
                let row = k.row(&sigma).unwrap();
                let abs: f64 = row.diagonal.abs() + row.entries.iter().map(|(_, w)| w.abs()).sum::<f64>();
                let expected = 2.0 * (1.0 - sigma.left_walls() as f64 / len as f64);
                assert!((abs - expected).abs() < 1e-14);
                assert!(abs <= 2.0 + 1e-15);
            }
        }
    }

    #[test]
    fn stochasticity_of_small_assembly() {
        let p = params(2, 0.37, Boundary::Empty);
        let m = assemble(KernelKind::Irreversible, &p).unwrap();
        for row in m.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn matrix_free_and_assembled_products_agree() {
        let p = params(7, 0.6, Boundary::Plus);
        let k = Kernel::new(KernelKind::Irreversible, &p).unwrap();
        let m = assemble(KernelKind::Irreversible, &p).unwrap();
        let v: Vec<f64> = (0..128).map(|i| ((i * 37) % 11) as f64 / 7.0).collect();
        let a = k.left_apply(&v).unwrap();
        let b = m.left_apply(&v);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn triplet_dump_format() {
        let p = params(1, 1.0, Boundary::Plus);
        let m = assemble(KernelKind::ZeroTemperature, &p).unwrap();
        let mut buf = Vec::new();
        m.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# L=1 J=1 bc=plus kind=zero-temperature");
        assert_eq!(&lines[1..], &["0 1 1", "1 1 1"]);
    }

    #[test]
    fn assemble_rejects_oversized_chain() {
        let p = params(31, 1.0, Boundary::Plus);
        assert!(matches!(
            assemble(KernelKind::Irreversible, &p),
            Err(Error::Resource(_))
        ));
    }
}
