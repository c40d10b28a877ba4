use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_sim::subordinator::SubordinatorSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimModel {
    /// Variance and price driven by one subordinator Z.
    Classical,
    /// Variance driven by `ρ′Z + √(1−ρ′²)Z*`, price jumps by Z.
    Generalized,
    /// Variance and price driven by `(1−θ)Z + θZ^(b)`.
    Refined,
}

impl fmt::Display for SimModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Classical => "classical",
            Self::Generalized => "generalized",
            Self::Refined => "refined",
        })
    }
}

impl FromStr for SimModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "classical" => Ok(Self::Classical),
            "generalized" => Ok(Self::Generalized),
            "refined" => Ok(Self::Refined),
            other => Err(Error::param(
                "sim_model",
                format!("unknown model {other:?}; expected classical, generalized or refined"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BnsParams {
    pub mu: f64,
    pub beta: f64,
    /// Leverage, ≤ 0.
    pub rho: f64,
    /// Mean-reversion speed, > 0.
    pub lambda: f64,
    pub sigma0_sq: f64,
    /// Constant θ used when no schedule is supplied.
    pub theta: f64,
    pub rho_prime: f64,
    pub z_spec: SubordinatorSpec,
    pub zb_spec: Option<SubordinatorSpec>,
    pub zstar_spec: Option<SubordinatorSpec>,
    pub s0: f64,
    /// Risk-free rate; recorded with the parameters, not used by the dynamics.
    pub r: f64,
}

impl Default for BnsParams {
    fn default() -> Self {
        Self {
            mu: 0.0,
            beta: 0.0,
            rho: -0.5,
            lambda: 1.0,
            sigma0_sq: 0.04,
            theta: 0.0,
            rho_prime: 1.0,
            z_spec: SubordinatorSpec::cpe(1.0, 2.0),
            zb_spec: Some(SubordinatorSpec::cpe(4.0, 2.0)),
            zstar_spec: Some(SubordinatorSpec::cpe(1.0, 2.0)),
            s0: 100.0,
            r: 0.0,
        }
    }
}

impl BnsParams {
    /// Every violated constraint, in field order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let finite = [
            ("mu", self.mu),
            ("beta", self.beta),
            ("rho", self.rho),
            ("lambda", self.lambda),
            ("sigma0_sq", self.sigma0_sq),
            ("theta", self.theta),
            ("rho_prime", self.rho_prime),
            ("s0", self.s0),
            ("r", self.r),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                out.push(format!("{name} must be finite, got {v}"));
            }
        }
        if self.rho > 0.0 {
            out.push(format!("rho must be <= 0, got {}", self.rho));
        }
        if !(self.lambda > 0.0) {
            out.push(format!("lambda must be > 0, got {}", self.lambda));
        }
        if !(self.sigma0_sq > 0.0) {
            out.push(format!("sigma0_sq must be > 0, got {}", self.sigma0_sq));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            out.push(format!("theta must lie in [0, 1], got {}", self.theta));
        }
        if !(0.0..=1.0).contains(&self.rho_prime) {
            out.push(format!("rho_prime must lie in [0, 1], got {}", self.rho_prime));
        }
        if !(self.s0 > 0.0) {
            out.push(format!("s0 must be > 0, got {}", self.s0));
        }
        let specs = [
            ("z_spec", Some(self.z_spec)),
            ("zb_spec", self.zb_spec),
            ("zstar_spec", self.zstar_spec),
        ];
        for (name, spec) in specs {
            if let Some(Err(e)) = spec.map(|s| s.validate(name)) {
                out.push(e.to_string());
            }
        }
        if let Some(zb) = self.zb_spec {
            if !(zb.mean_rate() > self.z_spec.mean_rate()) {
                out.push(format!(
                    "zb_spec must have a larger mean rate than z_spec ({} vs {})",
                    zb.mean_rate(),
                    self.z_spec.mean_rate()
                ));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations() {
            v if v.is_empty() => Ok(()),
            v => Err(Error::param("bns_params", v.join("; "))),
        }
    }

    /// Checks that `model` has the subordinators it needs.
    pub fn validate_for(&self, model: SimModel) -> Result<()> {
        self.validate()?;
        match model {
            SimModel::Refined if self.zb_spec.is_none() => Err(Error::param(
                "zb_spec",
                "the refined model needs a second subordinator Z^(b)",
            )),
            SimModel::Generalized if self.zstar_spec.is_none() && self.rho_prime < 1.0 => Err(Error::param(
                "zstar_spec",
                "the generalized model with rho_prime < 1 needs Z*",
            )),
            _ => Ok(()),
        }
    }
}
