//! Closed-form `Corr(X_s, X_t)` for the classical and refined models, and
//! Monte Carlo estimates to check them against.
//!
//! Both formulas share `α(ν) = ∫₀^ν σ² dτ + ν ρ² λ V`, where `V` is `Var(Z₁)`
//! for the classical model and `(1−θ)² Var(Z₁) + θ² Var(Z^(b)₁)` for the
//! refined one, and return `(∫₀^s σ² + ρ² J) / √(α(t) α(s))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_sim::{
    expected_variance_path, simulate_ensemble, BnsParams, EnsembleOptions, Recording, SimEnsemble, SimGrid, SimModel,
    ThetaSchedule,
};
use crate::numeric::{compensated_sum, cumulative_trapezoid, CompensatedSum};

/// How the jump functionals in the numerator are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "convention", rename_all = "lowercase")]
pub enum JumpConvention {
    /// `J(s) = sλVar(Z₁)`, `J^(b)(s) = sλVar(Z^(b)₁)`.
    Expected,
    /// Realized quadratic jump sums, e.g. from a path's ledger.
    Realized { j_s: f64, jb_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrInputs {
    pub s: f64,
    pub t: f64,
    /// `∫₀^s σ² dτ`
    pub int_var_s: f64,
    /// `∫₀^t σ² dτ`
    pub int_var_t: f64,
    pub rho: f64,
    pub lambda: f64,
    pub theta: f64,
    pub var_z: f64,
    pub var_zb: f64,
    pub jumps: JumpConvention,
}

impl CorrInputs {
    /// Inputs for a constant variance `v`, so `∫₀^ν σ² = vν` exactly.
    #[allow(clippy::too_many_arguments)]
    pub fn constant_variance(
        s: f64,
        t: f64,
        v: f64,
        rho: f64,
        lambda: f64,
        theta: f64,
        var_z: f64,
        var_zb: f64,
    ) -> Self {
        Self {
            s,
            t,
            int_var_s: v * s,
            int_var_t: v * t,
            rho,
            lambda,
            theta,
            var_z,
            var_zb,
            jumps: JumpConvention::Expected,
        }
    }

    /// Inputs whose integrated variances come from a variance path on a
    /// uniform grid (trapezoid rule); `s` and `t` must be grid nodes.
    pub fn from_variance_path(
        variance: &[f64],
        grid: SimGrid,
        s: f64,
        t: f64,
        params: &BnsParams,
        theta: f64,
    ) -> Result<Self> {
        if variance.len() != grid.n_steps + 1 {
            return Err(Error::LengthMismatch {
                left: variance.len(),
                right: grid.n_steps + 1,
            });
        }
        let integral = cumulative_trapezoid(variance, grid.dt());
        Ok(Self {
            s,
            t,
            int_var_s: integral[grid.node_at(s)?],
            int_var_t: integral[grid.node_at(t)?],
            rho: params.rho,
            lambda: params.lambda,
            theta,
            var_z: params.z_spec.var_rate(),
            var_zb: params.zb_spec.map_or(0.0, |z| z.var_rate()),
            jumps: JumpConvention::Expected,
        })
    }

    fn check(&self) -> Result<()> {
        if !(self.s > 0.0 && self.t >= self.s) {
            return Err(Error::param(
                "times",
                format!("need 0 < s <= t, got s={} t={}", self.s, self.t),
            ));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::param("theta", format!("must lie in [0, 1], got {}", self.theta)));
        }
        if !(self.int_var_s > 0.0 && self.int_var_t >= self.int_var_s) {
            return Err(Error::param(
                "integrated variance",
                format!(
                    "need 0 < ∫σ²(s) <= ∫σ²(t), got {} and {}",
                    self.int_var_s, self.int_var_t
                ),
            ));
        }
        Ok(())
    }
}

fn alpha(int_var: f64, nu: f64, rho: f64, lambda: f64, var: f64) -> f64 {
    int_var + nu * rho * rho * lambda * var
}

/// Shared evaluation; `var` is the (mixed) jump variance and `realized` the
/// already-mixed realized jump functional, if any.
fn corr_with(inp: &CorrInputs, var: f64, realized: Option<f64>) -> Result<f64> {
    inp.check()?;
    let a_s = alpha(inp.int_var_s, inp.s, inp.rho, inp.lambda, var);
    let a_t = alpha(inp.int_var_t, inp.t, inp.rho, inp.lambda, var);
    let denom = (a_t * a_s).sqrt();
    if !(denom > 0.0) {
        return Err(Error::Denominator(denom));
    }
    let numerator = match realized {
        None => a_s,
        Some(j) => inp.int_var_s + inp.rho * inp.rho * j,
    };
    Ok(numerator / denom)
}

pub fn corr_classical(inp: &CorrInputs) -> Result<f64> {
    let realized = match inp.jumps {
        JumpConvention::Expected => None,
        JumpConvention::Realized { j_s, .. } => Some(j_s),
    };
    corr_with(inp, inp.var_z, realized)
}

pub fn corr_refined(inp: &CorrInputs) -> Result<f64> {
    let (a, b) = (1.0 - inp.theta, inp.theta);
    let var = a * a * inp.var_z + b * b * inp.var_zb;
    let realized = match inp.jumps {
        JumpConvention::Expected => None,
        JumpConvention::Realized { j_s, jb_s } => Some(a * a * j_s + b * b * jb_s),
    };
    corr_with(inp, var, realized)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrEstimate {
    pub estimate: f64,
    /// Standard error on the correlation scale, `(1−r²)/√(n−3)`.
    pub se: f64,
    /// Standard error of `atanh(r)`, `1/√(n−3)`.
    pub fisher_se: f64,
    pub n_paths: usize,
}

impl CorrEstimate {
    pub fn from_sample(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let r = pearson(xs, ys)?;
        let n = xs.len();
        let fisher_se = if n > 3 {
            1.0 / ((n - 3) as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Ok(Self {
            estimate: r,
            se: if n > 3 {
                (1.0 - r * r) * fisher_se
            } else {
                f64::INFINITY
            },
            fisher_se,
            n_paths: n,
        })
    }

    /// `|estimate − value|` in units of `se`.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.estimate - value).abs() / self.se
    }
}

/// Pearson correlation with compensated accumulation, clamped to [−1, 1].
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::Degenerate(format!("need at least 2 samples, got {n}")));
    }
    let mx = compensated_sum(xs.iter().copied()) / n as f64;
    let my = compensated_sum(ys.iter().copied()) / n as f64;
    let (mut sxx, mut syy, mut sxy) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx.add(dx * dx);
        syy.add(dy * dy);
        sxy.add(dx * dy);
    }
    let (vx, vy) = (sxx.value(), syy.value());
    if !(vx > 0.0 && vy > 0.0) {
        return Err(Error::Degenerate("a marginal has zero variance".into()));
    }
    Ok((sxy.value() / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// Sample correlation of `(X_s, X_t)` across the ensemble's paths. Both
/// times must be recorded grid nodes.
pub fn mc_correlation(ensemble: &SimEnsemble, s: f64, t: f64) -> Result<CorrEstimate> {
    let js = ensemble.slot_at(s)?;
    let jt = ensemble.slot_at(t)?;
    if ensemble.n_paths() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 paths, got {}",
            ensemble.n_paths()
        )));
    }
    CorrEstimate::from_sample(&ensemble.x_column(js), &ensemble.x_column(jt))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub t: f64,
    pub formula_corr: f64,
    pub mc_corr: Option<f64>,
    pub mc_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecaySettings {
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub threads: usize,
}

/// `Corr(X_s, X_t)` along `t_grid` from the formula (expected variance path,
/// constant θ = `params.theta`) and, when `n_paths > 0`, from simulation.
pub fn decay_profile(
    params: &BnsParams,
    model: SimModel,
    s: f64,
    t_grid: &[f64],
    settings: &DecaySettings,
) -> Result<Vec<DecayRow>> {
    let Some(&t_max) = t_grid.last() else {
        return Err(Error::param("t_grid", "empty"));
    };
    if t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid[0] <= s {
        return Err(Error::param("t_grid", "must be increasing and above s"));
    }
    let grid = SimGrid::with_step(t_max, settings.dt)?;
    let theta = params.theta;
    let variance = expected_variance_path(params, model, theta, grid)?;
    let formula = |t: f64| -> Result<f64> {
        let inp = CorrInputs::from_variance_path(&variance, grid, s, t, params, theta)?;
        match model {
            SimModel::Refined => corr_refined(&inp),
            _ => corr_classical(&inp),
        }
    };
    let ensemble = if settings.n_paths > 0 {
        let mut nodes = vec![grid.node_at(s)?];
        for &t in t_grid {
            nodes.push(grid.node_at(t)?);
        }
        let opts = EnsembleOptions {
            threads: settings.threads,
            recording: Recording::Nodes(nodes),
            ..EnsembleOptions::default()
        };
        let schedule = ThetaSchedule::constant(theta)?;
        Some(simulate_ensemble(
            params,
            &schedule,
            model,
            grid,
            settings.n_paths,
            settings.seed,
            &opts,
        )?)
    } else {
        None
    };
    t_grid
        .iter()
        .map(|&t| {
            let mc = ensemble.as_ref().map(|e| mc_correlation(e, s, t)).transpose()?;
            Ok(DecayRow {
                t,
                formula_corr: formula(t)?,
                mc_corr: mc.map(|m| m.estimate),
                mc_se: mc.map(|m| m.se),
            })
        })
        .collect()
}
