//! Stationary measures: Gibbs weights, exact solves of `πP = π`, probability
//! currents and reversibility diagnostics.

mod currents;
mod solver;

pub use currents::{
    current, currents, kolmogorov_check, CurrentReport, EdgeCurrent, KolmogorovLoop, KOLMOGOROV_MAX_SITES,
    KOLMOGOROV_REL_TOL,
};
pub use solver::{exact_stationary, exact_stationary_with, stationarity_residual, SolverOptions};

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spin::{Boundary, ModelParams, SpinConfig, MAX_DENSE_SITES};

/// Largest chain handled by [`gibbs_minus_moment`].
pub const MOMENT_MAX_SITES: usize = 1_000_000;

/// Gibbs measure of the Ising chain.
///
/// Empty boundary: `w^{ℓ(σ)} / (2 (1 + w)^{L-1})` with `ℓ` the interior wall
/// count. Plus boundary: `w^{ℓ₊(σ)}` normalised by direct summation, where `ℓ₊`
/// also counts the bonds to `σ_0 = σ_{L+1} = +1`.
pub fn gibbs<T: Scalar>(params: &ModelParams<T>) -> Result<Distribution<T>> {
    params.require_dense(MAX_DENSE_SITES)?;
    let len = params.length();
    let w = params.bond_weight();
    match params.boundary() {
        Boundary::Empty => {
            let norm = T::from_usize_lossless(2) * (T::one() + w.clone()).powu(len as u32 - 1);
            let values = SpinConfig::enumerate(len)?
                .map(|sigma| w.powu(sigma.interior_pair_count()) / norm.clone())
                .collect();
            Distribution::new(len, values)
        }
        Boundary::Plus => {
            let values = SpinConfig::enumerate(len)?
                .map(|sigma| w.powu(sigma.plus_boundary_walls()))
                .collect();
            Distribution::new(len, values)?.normalized()
        }
    }
}

/// Expected number of minus spins under the Gibbs measure.
///
/// Runs a 2×2 transfer matrix carrying, next to the partition vector, its
/// derivative with respect to a field coupled to minus spins, so
/// `E[m] = ∂_h log Z |_{h=0}` comes out in `O(L)` without enumeration. Both
/// vectors are rescaled at every site to stay in floating-point range.
pub fn gibbs_minus_moment(length: usize, coupling: f64, boundary: Boundary) -> Result<f64> {
    if length == 0 || length > MOMENT_MAX_SITES {
        return Err(Error::Argument(format!(
            "chain length {length} outside 1..={MOMENT_MAX_SITES}"
        )));
    }
    if !(coupling.is_finite() && coupling >= 0.0) {
        return Err(Error::Argument(format!("invalid coupling {coupling}")));
    }
    let w = (-2.0 * coupling).exp();
    // boundary factor for a plus / minus end spin
    let edge = match boundary {
        Boundary::Plus => [1.0, w],
        Boundary::Empty => [1.0, 1.0],
    };
    let mut z = edge;
    let mut dz = [0.0, edge[1]];
    for _ in 1..length {
        let next = [z[0] + z[1] * w, z[0] * w + z[1]];
        let dnext = [dz[0] + dz[1] * w, dz[0] * w + dz[1] + next[1]];
        let scale = next[0] + next[1];
        z = [next[0] / scale, next[1] / scale];
        dz = [dnext[0] / scale, dnext[1] / scale];
    }
    let partition = z[0] * edge[0] + z[1] * edge[1];
    let derivative = dz[0] * edge[0] + dz[1] * edge[1];
    Ok(derivative / partition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::hamiltonian;
    use num_rational::BigRational;

    fn enumerated_gibbs(params: &ModelParams<f64>) -> Vec<f64> {
        let weights: Vec<f64> = SpinConfig::enumerate(params.length())
            .unwrap()
            .map(|s| (-hamiltonian(params, &s)).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        weights.into_iter().map(|x| x / z).collect()
    }

    #[test]
    fn two_site_empty_gibbs() {
        let j = 0.8;
        let p = ModelParams::<f64>::new(2, j, Boundary::Empty).unwrap();
        let g = gibbs(&p).unwrap();
        let w = (-2.0 * j).exp();
        // partition sum 2e^J + 2e^{-J}
        let z = 2.0 * j.exp() + 2.0 * (-j).exp();
        let aligned = 1.0 / (2.0 * (1.0 + w));
        let flipped = w / (2.0 * (1.0 + w));
        for (s, expected) in [("++", aligned), ("--", aligned), ("+-", flipped), ("-+", flipped)] {
            let v = *g.get(&s.parse().unwrap());
            assert!((v - expected).abs() < 1e-15);
        }
        assert!((aligned - j.exp() / z).abs() < 1e-15);
    }

    #[test]
    fn zero_coupling_is_uniform() {
        for len in 1..=8 {
            let p = ModelParams::<f64>::new(len, 0.0, Boundary::Empty).unwrap();
            let g = gibbs(&p).unwrap();
            let u = 0.5f64.powi(len as i32);
            assert!(g.values().iter().all(|v| (v - u).abs() < 1e-16));
        }
    }

    #[test]
    fn closed_forms_match_enumeration() {
        for len in 1..=10 {
            for &j in &[0.3, 1.0, 2.5] {
                for bc in [Boundary::Empty, Boundary::Plus] {
                    let p = ModelParams::<f64>::new(len, j, bc).unwrap();
                    let g = gibbs(&p).unwrap();
                    for (a, b) in g.values().iter().zip(enumerated_gibbs(&p)) {
                        assert!((a - b).abs() < 1e-14, "L={len} J={j} {bc}");
                    }
                }
            }
        }
    }

    #[test]
    fn exact_gibbs_sums_to_one() {
        let p = ModelParams::with_bond_weight(6, BigRational::ratio(2, 7), Boundary::Empty).unwrap();
        let g = gibbs(&p).unwrap();
        assert_eq!(g.total(), BigRational::ratio(1, 1));
    }

    #[test]
    fn moment_examples() {
        assert!((gibbs_minus_moment(17, 0.0, Boundary::Empty).unwrap() - 8.5).abs() < 1e-12);
        assert!((gibbs_minus_moment(2, 1.3, Boundary::Empty).unwrap() - 1.0).abs() < 1e-14);
        assert!(gibbs_minus_moment(0, 1.0, Boundary::Plus).is_err());
    }

    #[test]
    fn moment_matches_enumeration() {
        for len in 1..=12 {
            for &j in &[0.2, 1.0, 2.0] {
                for bc in [Boundary::Empty, Boundary::Plus] {
                    let p = ModelParams::<f64>::new(len, j, bc).unwrap();
                    let g = enumerated_gibbs(&p);
                    let brute: f64 = SpinConfig::enumerate(len)
                        .unwrap()
                        .zip(&g)
                        .map(|(s, pr)| s.minus_count() as f64 * pr)
                        .sum();
                    let tm = gibbs_minus_moment(len, j, bc).unwrap();
                    assert!((tm - brute).abs() < 1e-12, "L={len} J={j} {bc}: {tm} vs {brute}");
                }
            }
        }
    }

    #[test]
    fn moment_stays_finite_for_long_chains() {
        let m = gibbs_minus_moment(1_000_000, 1e6f64.ln(), Boundary::Plus).unwrap();
        assert!(m.is_finite() && m > 0.0);
    }
}
