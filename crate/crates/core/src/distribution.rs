use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};
use crate::spin::{SpinConfig, MAX_DENSE_SITES};

/// Dense vector over configurations, indexed by [`SpinConfig::index`].
///
/// Used both for probability vectors and for the signed expansion terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<T> {
    length: usize,
    values: Vec<T>,
}

impl<T: Scalar> Distribution<T> {
    pub fn new(length: usize, values: Vec<T>) -> Result<Self> {
        check_length(length)?;
        if values.len() != 1usize << length {
            return Err(Error::Mismatch(format!(
                "{} values for 2^{length} configurations",
                values.len()
            )));
        }
        Ok(Self { length, values })
    }

    pub fn zeros(length: usize) -> Result<Self> {
        check_length(length)?;
        Ok(Self {
            length,
            values: vec![T::zero(); 1usize << length],
        })
    }

    /// Unit mass at `sigma`.
    pub fn point_mass(sigma: &SpinConfig) -> Result<Self> {
        let mut out = Self::zeros(sigma.len())?;
        out.values[sigma.index()] = T::one();
        Ok(out)
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, sigma: &SpinConfig) -> &T {
        &self.values[sigma.index()]
    }

    pub fn total(&self) -> T {
        scalar::sum(&self.values)
    }

    /// `Σ_σ |v(σ)|`.
    pub fn abs_total(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, v| acc + v.abs())
    }

    /// Sums to one within `tol` and no entry is below `-tol_negative`.
    pub fn is_probability(&self, tol: f64, tol_negative: f64) -> bool {
        (self.total().to_f64_lossy() - 1.0).abs() <= tol
            && self
                .values
                .iter()
                .all(|v| v.to_f64_lossy() >= -tol_negative)
    }

    /// Configurations paired with their values, in index order.
    pub fn iter(&self) -> impl Iterator<Item = (SpinConfig, &T)> + '_ {
        let len = self.length;
        self.values
            .iter()
            .enumerate()
            .map(move |(idx, v)| (SpinConfig::from_index_unchecked(len, idx), v))
    }

    /// Lossy conversion to `f64`.
    pub fn to_f64(&self) -> Distribution<f64> {
        Distribution {
            length: self.length,
            values: self.values.iter().map(Scalar::to_f64_lossy).collect(),
        }
    }

    /// Rescale so the entries sum to one.
    pub fn normalized(mut self) -> Result<Self> {
        let total = self.total();
        if total.is_zero() {
            return Err(Error::Argument("cannot normalise a zero vector".into()));
        }
        for v in &mut self.values {
            *v /= total.clone();
        }
        Ok(self)
    }

    /// CSV with columns `index,config,prob`, one line per configuration.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "index,config,prob")?;
        for (sigma, v) in self.iter() {
            writeln!(out, "{},{},{}", sigma.index(), sigma, v.to_f64_lossy())?;
        }
        Ok(())
    }
}

fn check_length(length: usize) -> Result<()> {
    if length == 0 || length > MAX_DENSE_SITES {
        Err(Error::Resource(format!(
            "dense distribution over 2^{length} states outside 1..=2^{MAX_DENSE_SITES}"
        )))
    } else {
        Ok(())
    }
}

/// Total variation distance in the un-halved convention `Σ_σ |p(σ) - q(σ)|`.
pub fn tv_distance<T: Scalar>(p: &Distribution<T>, q: &Distribution<T>) -> Result<T> {
    if p.length != q.length {
        return Err(Error::Mismatch(format!(
            "distributions over {} and {} sites",
            p.length, q.length
        )));
    }
    Ok(p.values
        .iter()
        .zip(&q.values)
        .fold(T::zero(), |acc, (a, b)| acc + (a.clone() - b.clone()).abs()))
}
