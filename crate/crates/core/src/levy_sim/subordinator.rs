use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Law of a subordinator's unit-time increment.
///
/// * `CompoundPoissonExp { rate: a, b }`: jumps arrive at rate `a`, sizes are
///   Exp(b), so `E[Z₁] = a/b` and `Var(Z₁) = 2a/b²`. `rate = 0` is allowed
///   and gives the zero process.
/// * `Gamma { shape, rate }`: `Z_t ~ Gamma(shape·t, rate)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SubordinatorSpec {
    CompoundPoissonExp { rate: f64, b: f64 },
    Gamma { shape: f64, rate: f64 },
}

impl SubordinatorSpec {
    pub fn cpe(rate: f64, b: f64) -> Self {
        Self::CompoundPoissonExp { rate, b }
    }

    pub fn gamma(shape: f64, rate: f64) -> Self {
        Self::Gamma { shape, rate }
    }

    pub fn validate(&self, name: &'static str) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            Self::CompoundPoissonExp { rate, b } => {
                if !(rate.is_finite() && rate >= 0.0) {
                    return Err(Error::param(name, format!("jump rate must be >= 0, got {rate}")));
                }
                if !ok(b) {
                    return Err(Error::param(
                        name,
                        format!("jump size parameter b must be > 0, got {b}"),
                    ));
                }
            }
            Self::Gamma { shape, rate } => {
                if !ok(shape) || !ok(rate) {
                    return Err(Error::param(
                        name,
                        format!("gamma shape and rate must be > 0, got {shape} and {rate}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `E[Z₁]`.
    pub fn mean_rate(&self) -> f64 {
        match *self {
            Self::CompoundPoissonExp { rate, b } => rate / b,
            Self::Gamma { shape, rate } => shape / rate,
        }
    }

    /// `Var(Z₁)`.
    pub fn var_rate(&self) -> f64 {
        match *self {
            Self::CompoundPoissonExp { rate, b } => 2.0 * rate / (b * b),
            Self::Gamma { shape, rate } => shape / (rate * rate),
        }
    }

    /// Sampler for increments over a fixed stretch `dt_sub` of subordinator time.
    pub fn increments(&self, dt_sub: f64) -> Result<IncrementSampler> {
        self.validate("subordinator")?;
        if !(dt_sub.is_finite() && dt_sub >= 0.0) {
            return Err(Error::param("dt_sub", format!("must be >= 0, got {dt_sub}")));
        }
        Ok(match *self {
            Self::CompoundPoissonExp { rate, b } if rate * dt_sub > 0.0 => IncrementSampler::Cpe {
                count: Poisson::new(rate * dt_sub).map_err(|e| Error::param("subordinator", e.to_string()))?,
                size: Exp::new(b).map_err(|e| Error::param("subordinator", e.to_string()))?,
            },
            Self::Gamma { shape, rate } if dt_sub > 0.0 => IncrementSampler::Gamma(
                Gamma::new(shape * dt_sub, 1.0 / rate).map_err(|e| Error::param("subordinator", e.to_string()))?,
            ),
            _ => IncrementSampler::Zero,
        })
    }

    /// One increment over `dt_sub`; see [`SubordinatorSpec::increments`] for
    /// repeated draws.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt_sub: f64, rng: &mut R) -> Result<f64> {
        Ok(self.increments(dt_sub)?.sample(rng))
    }
}

#[derive(Debug, Clone, Copy)]
pub enum IncrementSampler {
    Zero,
    Cpe { count: Poisson<f64>, size: Exp<f64> },
    Gamma(Gamma<f64>),
}

impl IncrementSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Cpe { count, size } => {
                let n = count.sample(rng) as u64;
                (0..n).map(|_| size.sample(rng)).sum()
            }
            Self::Gamma(g) => g.sample(rng),
        }
    }
}
