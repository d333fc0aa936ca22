//! Trajectory simulation of the discrete-time chains.
//!
//! Each step draws a site uniformly and flips it with probability
//! `L · P(σ, σ^{(i)})`. Chains of up to 2^20 sites are stored one bit per
//! spin. Replicas draw from independent ChaCha streams keyed by
//! `(seed, replica)`, so results do not depend on the thread count.

use std::io::{self, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::statistics::Statistics;

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::kernels::KernelKind;
use crate::spin::{Boundary, ModelParams, SpinConfig};

/// Longest chain the simulator accepts.
pub const MAX_SIMULATED_SITES: usize = 1 << 20;

/// Longest chain for [`empirical_stationary`] histograms.
pub const HISTOGRAM_MAX_SITES: usize = 14;

/// Per-replica step budget of [`tunneling_time`] unless overridden.
pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000_000;

/// Seed plus stream id. Equal values give equal trajectories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    /// Same seed, stream `replica`.
    pub fn replica(self, replica: u64) -> Self {
        Self {
            seed: self.seed,
            stream: replica,
        }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Bit-packed chain of arbitrary length: bit `i-1` of the word array set iff `σ_i = +1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinChain {
    len: usize,
    words: Vec<u64>,
    minus: usize,
}

impl SpinChain {
    pub fn all_plus(len: usize) -> Result<Self> {
        check_len(len)?;
        let mut words = vec![u64::MAX; len.div_ceil(64)];
        if !len.is_multiple_of(64) {
            *words.last_mut().expect("nonempty") = (1u64 << (len % 64)) - 1;
        }
        Ok(Self {
            len,
            words,
            minus: 0,
        })
    }

    pub fn from_config(sigma: &SpinConfig) -> Self {
        Self {
            len: sigma.len(),
            words: vec![sigma.bits()],
            minus: sigma.minus_count() as usize,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `σ_i ∈ {-1, +1}` for `1 ≤ i ≤ L`.
    #[inline]
    pub fn spin(&self, i: usize) -> i8 {
        let b = i - 1;
        if (self.words[b / 64] >> (b % 64)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        let b = i - 1;
        let word = &mut self.words[b / 64];
        *word ^= 1 << (b % 64);
        if (*word >> (b % 64)) & 1 == 1 {
            self.minus -= 1;
        } else {
            self.minus += 1;
        }
    }

    pub fn minus_count(&self) -> usize {
        self.minus
    }

    pub fn is_all_minus(&self) -> bool {
        self.minus == self.len
    }

    pub fn is_all_plus(&self) -> bool {
        self.minus == 0
    }

    /// Packed configuration, for chains short enough to have one.
    pub fn to_config(&self) -> Result<SpinConfig> {
        SpinConfig::new(self.len, self.words[0])
    }
}

fn check_len(len: usize) -> Result<()> {
    if len == 0 || len > MAX_SIMULATED_SITES {
        Err(Error::Resource(format!(
            "simulated chain length {len} outside 1..={MAX_SIMULATED_SITES}"
        )))
    } else {
        Ok(())
    }
}

/// Flip probabilities once a site has been chosen, i.e. `L` times the kernel weights.
#[derive(Clone, Debug)]
pub struct Acceptance {
    kind: KernelKind,
    boundary: Boundary,
    antiparallel: f64,
    parallel: f64,
    unbound: f64,
    glauber: [f64; 3],
}

impl Acceptance {
    pub fn new(kind: KernelKind, params: &ModelParams<f64>) -> Result<Self> {
        let w = *params.bond_weight();
        let eps = *params.eps();
        let boundary = params.boundary();
        let (antiparallel, parallel, unbound) = match kind {
            KernelKind::Irreversible => (1.0, eps, w),
            KernelKind::Glauber => (0.0, 0.0, 0.0),
            KernelKind::ZeroTemperature => {
                if boundary != Boundary::Plus {
                    return Err(Error::Contract(
                        "zero-temperature kernel is only defined for the plus boundary".into(),
                    ));
                }
                (1.0, 0.0, 0.0)
            }
            KernelKind::DeltaP => {
                return Err(Error::Contract("delta-p is not a stochastic kernel".into()))
            }
        };
        Ok(Self {
            kind,
            boundary,
            antiparallel,
            parallel,
            unbound,
            glauber: [1.0, w, w * w],
        })
    }

    /// Probability of flipping site `i` once chosen.
    #[inline]
    pub fn probability(&self, chain: &SpinChain, i: usize) -> f64 {
        let edge = match self.boundary {
            Boundary::Plus => 1,
            Boundary::Empty => 0,
        };
        let left = if i == 1 { edge } else { chain.spin(i - 1) as i32 };
        let here = chain.spin(i) as i32;
        match self.kind {
            KernelKind::Glauber => {
                let right = if i == chain.len() {
                    edge
                } else {
                    chain.spin(i + 1) as i32
                };
                self.glauber[(here * (left + right)).max(0) as usize]
            }
            _ => match left * here {
                0 => self.unbound,
                -1 => self.antiparallel,
                _ => self.parallel,
            },
        }
    }
}

/// One discrete-time step. Returns whether a spin flipped.
#[inline]
pub fn step<R: Rng + ?Sized>(acc: &Acceptance, chain: &mut SpinChain, rng: &mut R) -> bool {
    let i = rng.gen_range(1..=chain.len());
    let p = acc.probability(chain, i);
    if p >= 1.0 || (p > 0.0 && rng.gen::<f64>() < p) {
        chain.flip(i);
        true
    } else {
        false
    }
}

/// One replica's first hitting time of `⊟`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TunnelingSample {
    pub replica: u64,
    pub steps: u64,
    /// The budget ran out before `⊟` was reached; `steps` is the budget.
    pub censored: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TunnelingStats {
    pub kind: KernelKind,
    pub length: usize,
    pub coupling: f64,
    pub samples: Vec<TunnelingSample>,
    /// Over all samples; a lower bound when some are censored.
    pub mean: f64,
    pub variance: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub censored: usize,
}

impl TunnelingStats {
    fn from_samples(kind: KernelKind, params: &ModelParams<f64>, samples: Vec<TunnelingSample>) -> Self {
        let values: Vec<f64> = samples.iter().map(|s| s.steps as f64).collect();
        let mean = values.iter().mean();
        let variance = if values.len() > 1 {
            values.iter().variance()
        } else {
            0.0
        };
        let z = Normal::standard().inverse_cdf(0.975);
        let half = z * (variance / values.len() as f64).sqrt();
        Self {
            kind,
            length: params.length(),
            coupling: params.coupling(),
            censored: samples.iter().filter(|s| s.censored).count(),
            samples,
            mean,
            variance,
            ci_lo: mean - half,
            ci_hi: mean + half,
        }
    }
}

/// Runs `replicas` independent chains from `⊞` until they hit `⊟`.
pub fn tunneling_time(
    kind: KernelKind,
    params: &ModelParams<f64>,
    replicas: usize,
    seed: RngSeed,
    budget: u64,
) -> Result<TunnelingStats> {
    if replicas == 0 {
        return Err(Error::Argument("need at least one replica".into()));
    }
    check_len(params.length())?;
    let acc = Acceptance::new(kind, params)?;
    let samples: Vec<TunnelingSample> = (0..replicas as u64)
        .into_par_iter()
        .map(|replica| {
            let mut rng = seed.replica(replica).rng();
            let mut chain = SpinChain::all_plus(params.length()).expect("length checked");
            let mut steps = 0u64;
            while !chain.is_all_minus() && steps < budget {
                step(&acc, &mut chain, &mut rng);
                steps += 1;
            }
            let censored = !chain.is_all_minus();
            if censored {
                log::warn!("replica {replica} censored after {steps} steps");
            }
            TunnelingSample {
                replica,
                steps,
                censored,
            }
        })
        .collect();
    Ok(TunnelingStats::from_samples(kind, params, samples))
}

/// Occupation histogram of a single trajectory from `⊞`, recorded every
/// `thinning` steps after `burn_in` steps, normalised.
pub fn empirical_stationary(
    kind: KernelKind,
    params: &ModelParams<f64>,
    burn_in: u64,
    n_samples: u64,
    thinning: u64,
    seed: RngSeed,
) -> Result<Distribution<f64>> {
    params.require_dense(HISTOGRAM_MAX_SITES)?;
    if n_samples == 0 || thinning == 0 {
        return Err(Error::Argument("need n_samples >= 1 and thinning >= 1".into()));
    }
    let acc = Acceptance::new(kind, params)?;
    let mut rng = seed.rng();
    let mut chain = SpinChain::all_plus(params.length())?;
    for _ in 0..burn_in {
        step(&acc, &mut chain, &mut rng);
    }
    let mut counts = vec![0u64; params.state_count()];
    for _ in 0..n_samples {
        for _ in 0..thinning {
            step(&acc, &mut chain, &mut rng);
        }
        counts[chain.words[0] as usize] += 1;
    }
    let n = n_samples as f64;
    Distribution::new(params.length(), counts.into_iter().map(|c| c as f64 / n).collect())
}

/// CSV `replica,steps`.
pub fn write_samples_csv<W: Write>(stats: &TunnelingStats, mut out: W) -> io::Result<()> {
    writeln!(out, "replica,steps")?;
    for s in &stats.samples {
        writeln!(out, "{},{}", s.replica, s.steps)?;
    }
    Ok(())
}

/// CSV `L,J,kind,mean,var,ci_lo,ci_hi,censored`, one row per run.
pub fn write_summary_csv<W: Write>(rows: &[TunnelingStats], mut out: W) -> io::Result<()> {
    writeln!(out, "L,J,kind,mean,var,ci_lo,ci_hi,censored")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.length, r.coupling, r.kind, r.mean, r.variance, r.ci_lo, r.ci_hi, r.censored
        )?;
    }
    Ok(())
}
