//! Bit-packed spin configurations, boundary conditions and model parameters.
//!
//! Site `i` (1-based) lives in bit `i - 1`; a set bit is spin `+1`. The dense
//! index of a configuration is its bit pattern, so the all-plus state has
//! index `2^L - 1` and the all-minus state index `0`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest chain length that fits a packed configuration.
pub const MAX_PACKED_SITES: usize = 63;

/// Largest chain length for which dense `2^L` vectors are ever allocated.
pub const MAX_DENSE_SITES: usize = 30;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig {
    len: u8,
    bits: u64,
}

#[inline]
fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl SpinConfig {
    pub fn new(len: usize, bits: u64) -> Result<Self> {
        if len == 0 || len > MAX_PACKED_SITES {
            return Err(Error::Argument(format!(
                "chain length {len} outside 1..={MAX_PACKED_SITES}"
            )));
        }
        if bits & !low_mask(len) != 0 {
            return Err(Error::Argument(format!(
                "bits {bits:#x} set above site {len}"
            )));
        }
        Ok(Self {
            len: len as u8,
            bits,
        })
    }

    /// Configuration with dense index `index`; caller guarantees the range.
    #[inline]
    pub(crate) fn from_index_unchecked(len: usize, index: usize) -> Self {
        debug_assert!((1..=MAX_PACKED_SITES).contains(&len));
        debug_assert!((index as u64) & !low_mask(len) == 0);
        Self {
            len: len as u8,
            bits: index as u64,
        }
    }

    pub fn from_index(len: usize, index: usize) -> Result<Self> {
        Self::new(len, index as u64)
    }

    /// The all-plus state.
    pub fn all_plus(len: usize) -> Result<Self> {
        Self::new(len, low_mask(len))
    }

    /// The all-minus state.
    pub fn all_minus(len: usize) -> Result<Self> {
        Self::new(len, 0)
    }

    /// Single block of `m` minus spins starting at site `i`, plus elsewhere.
    pub fn minus_block(len: usize, start: usize, m: usize) -> Result<Self> {
        if start == 0 || m == 0 || start + m - 1 > len {
            return Err(Error::Argument(format!(
                "block ({start};{m}) does not fit a chain of {len} sites"
            )));
        }
        let block = low_mask(m) << (start - 1);
        Self::new(len, low_mask(len) & !block)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn index(&self) -> usize {
        self.bits as usize
    }

    #[inline]
    pub fn is_all_plus(&self) -> bool {
        self.bits == low_mask(self.len())
    }

    #[inline]
    pub fn is_all_minus(&self) -> bool {
        self.bits == 0
    }

    /// Spin at site `i` (1-based) as `+1` or `-1`.
    #[inline]
    pub fn spin(&self, i: usize) -> i8 {
        debug_assert!(i >= 1 && i <= self.len());
        if (self.bits >> (i - 1)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    /// The configuration with site `i` flipped.
    pub fn flip(&self, i: usize) -> Result<Self> {
        if i == 0 || i > self.len() {
            return Err(Error::Argument(format!(
                "site {i} outside 1..={}",
                self.len()
            )));
        }
        Ok(self.flip_unchecked(i))
    }

    #[inline]
    pub(crate) fn flip_unchecked(&self, i: usize) -> Self {
        Self {
            len: self.len,
            bits: self.bits ^ (1u64 << (i - 1)),
        }
    }

    /// Bit `i - 1` set iff `σ_i σ_{i-1} = -1`, reading `σ_0 = +1`.
    #[inline]
    pub(crate) fn left_wall_mask(&self) -> u64 {
        (self.bits ^ ((self.bits << 1) | 1)) & low_mask(self.len())
    }

    /// Number of sites `i ∈ [1, L]` antiparallel to their left neighbour with
    /// `σ_0 = +1`. Only meaningful for the plus boundary.
    pub fn left_antiparallel_count(&self, boundary: Boundary) -> Result<u32> {
        match boundary {
            Boundary::Plus => Ok(self.left_walls()),
            Boundary::Empty => Err(Error::Contract(
                "left antiparallel count needs sigma_0 = +1; use interior_pair_count".into(),
            )),
        }
    }

    #[inline]
    pub(crate) fn left_walls(&self) -> u32 {
        self.left_wall_mask().count_ones()
    }

    /// Number of antiparallel nearest-neighbour pairs inside `[1, L]`.
    #[inline]
    pub fn interior_pair_count(&self) -> u32 {
        let pairs = self.len() - 1;
        ((self.bits ^ (self.bits >> 1)) & low_mask(pairs)).count_ones()
    }

    /// Domain walls including both boundary bonds `σ_0 = σ_{L+1} = +1`.
    #[inline]
    pub(crate) fn plus_boundary_walls(&self) -> u32 {
        self.left_walls() + u32::from(self.spin(self.len()) < 0)
    }

    /// Number of minus spins.
    #[inline]
    pub fn minus_count(&self) -> u32 {
        self.len() as u32 - self.bits.count_ones()
    }

    /// Classify against the special states of the first-order expansion.
    pub fn classify(&self) -> StateClass {
        let len = self.len();
        let minus = !self.bits & low_mask(len);
        if minus == 0 {
            return StateClass::AllPlus;
        }
        let start = minus.trailing_zeros() as usize + 1;
        let m = (minus >> (start - 1)).trailing_ones() as usize;
        if minus != low_mask(m) << (start - 1) {
            return StateClass::Other;
        }
        if start + m - 1 == len {
            StateClass::Ray { start }
        } else {
            StateClass::Interval { start, len: m }
        }
    }

    /// Iterator over every configuration of `len` sites in index order.
    pub fn enumerate(len: usize) -> Result<impl Iterator<Item = SpinConfig>> {
        if len == 0 || len > MAX_DENSE_SITES {
            return Err(Error::Resource(format!(
                "cannot enumerate 2^{len} configurations (cap {MAX_DENSE_SITES})"
            )));
        }
        Ok((0..1usize << len).map(move |idx| SpinConfig::from_index_unchecked(len, idx)))
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.len() {
            f.write_str(if self.spin(i) > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpinConfig({self})")
    }
}

impl FromStr for SpinConfig {
    type Err = Error;

    /// Parses a `±` string, site 1 first. `−` (U+2212) is accepted for minus.
    fn from_str(s: &str) -> Result<Self> {
        let mut bits = 0u64;
        let mut len = 0usize;
        for ch in s.chars() {
            match ch {
                '+' => bits |= 1u64.checked_shl(len as u32).unwrap_or(0),
                '-' | '\u{2212}' => {}
                _ => return Err(Error::Argument(format!("bad spin character {ch:?} in {s:?}"))),
            }
            len += 1;
        }
        SpinConfig::new(len, bits)
    }
}

/// Boundary condition on the left (and, for Gibbs weights, right) of the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// `σ_0 = 0`: site 1 has no left neighbour.
    Empty,
    /// `σ_0 = σ_{L+1} = +1`.
    Plus,
}

impl Boundary {
    pub fn name(&self) -> &'static str {
        match self {
            Boundary::Empty => "empty",
            Boundary::Plus => "plus",
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "empty" | "free" => Ok(Boundary::Empty),
            "plus" | "+" => Ok(Boundary::Plus),
            other => Err(Error::Argument(format!("unknown boundary {other:?}"))),
        }
    }
}

/// Classification of a configuration relative to `⊞`, `(i;m)` and `(i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StateClass {
    AllPlus,
    /// `len` minus spins on `[start, start + len - 1]`, not touching site `L`.
    Interval { start: usize, len: usize },
    /// Minus spins exactly on `[start, L]`.
    Ray { start: usize },
    Other,
}

/// Chain length, coupling and boundary, with the bond weight `w = e^{-2J}`
/// held in the scalar type used for all transition weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    length: usize,
    coupling: f64,
    boundary: Boundary,
    bond_weight: T,
    eps: T,
}

impl<T: Scalar> ModelParams<T> {
    /// Parameters from a real coupling `J ≥ 0`.
    pub fn new(length: usize, coupling: f64, boundary: Boundary) -> Result<Self> {
        if !(coupling.is_finite() && coupling >= 0.0) {
            return Err(Error::Argument(format!(
                "coupling must be finite and nonnegative, got {coupling}"
            )));
        }
        let w = T::from_f64((-2.0 * coupling).exp()).ok_or_else(|| {
            Error::Argument(format!("bond weight for J={coupling} not representable"))
        })?;
        Self::build(length, coupling, boundary, w)
    }

    /// Parameters in the chilled regime `J = c log L`.
    pub fn chilled(length: usize, c: f64, boundary: Boundary) -> Result<Self> {
        Self::new(length, c * (length as f64).ln(), boundary)
    }

    /// Parameters from an explicit bond weight `w = e^{-2J} ∈ (0, 1]`.
    pub fn with_bond_weight(length: usize, bond_weight: T, boundary: Boundary) -> Result<Self> {
        if !(bond_weight > T::zero() && bond_weight <= T::one()) {
            return Err(Error::Argument(format!(
                "bond weight must lie in (0, 1], got {bond_weight}"
            )));
        }
        let coupling = -0.5 * bond_weight.to_f64_lossy().ln();
        Self::build(length, coupling, boundary, bond_weight)
    }

    fn build(length: usize, coupling: f64, boundary: Boundary, bond_weight: T) -> Result<Self> {
        if length == 0 {
            return Err(Error::Argument("chain length must be positive".into()));
        }
        let eps = bond_weight.clone() * bond_weight.clone();
        Ok(Self {
            length,
            coupling,
            boundary,
            bond_weight,
            eps,
        })
    }

    /// Same chain with the other boundary condition.
    pub fn with_boundary(&self, boundary: Boundary) -> Self {
        Self {
            boundary,
            ..self.clone()
        }
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// `e^{-2J}`.
    pub fn bond_weight(&self) -> &T {
        &self.bond_weight
    }

    /// `ε = e^{-4J}`.
    pub fn eps(&self) -> &T {
        &self.eps
    }

    /// Fails unless `2^L` dense vectors of this chain are allowed.
    pub fn require_dense(&self, cap: usize) -> Result<()> {
        let cap = cap.min(MAX_DENSE_SITES);
        if self.length > cap {
            Err(Error::Resource(format!(
                "L={} exceeds the dense cap L<={cap}",
                self.length
            )))
        } else {
            Ok(())
        }
    }

    /// Number of configurations, `2^L`.
    pub fn state_count(&self) -> usize {
        1usize << self.length
    }
}
