use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_sim::params::{BnsParams, SimModel};
use crate::levy_sim::schedule::ThetaSchedule;
use crate::levy_sim::subordinator::IncrementSampler;
use crate::rng::{self, path_stream_id, Source};

/// Uniform time grid `t_k = k·T/n`, `k = 0..=n`, in years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimGrid {
    pub horizon: f64,
    pub n_steps: usize,
}

impl SimGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::param("horizon", format!("must be > 0, got {horizon}")));
        }
        if n_steps == 0 {
            return Err(Error::param("n_steps", "must be at least 1"));
        }
        Ok(Self { horizon, n_steps })
    }

    /// Grid with step `dt` reaching `horizon`; `horizon` must be a whole
    /// number of steps.
    pub fn with_step(horizon: f64, dt: f64) -> Result<Self> {
        let n = (horizon / dt).round();
        if !(n >= 1.0) || ((n * dt - horizon).abs() > 1e-9 * horizon.max(1.0)) {
            return Err(Error::OffGrid { time: horizon, dt });
        }
        Self::new(horizon, n as usize)
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    /// Node index whose time is `t`; no interpolation.
    pub fn node_at(&self, t: f64) -> Result<usize> {
        let dt = self.dt();
        let k = (t / dt).round();
        if !(k >= 0.0) || k > self.n_steps as f64 || (k * dt - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(Error::OffGrid { time: t, dt });
        }
        Ok(k as usize)
    }
}

/// Which per-path stream feeds each noise source. The default reads every
/// source from its own stream; pointing `z` at `Source::Zb` lets a classical
/// run consume exactly the draws a refined run feeds to Z^(b).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamLayout {
    pub gaussian: Source,
    pub z: Source,
    pub zb: Source,
    pub zstar: Source,
}

impl Default for StreamLayout {
    fn default() -> Self {
        Self {
            gaussian: Source::Gaussian,
            z: Source::Z,
            zb: Source::Zb,
            zstar: Source::ZStar,
        }
    }
}

/// State at one grid node; the increments are those of the step ending here
/// (all zero at node 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub x: f64,
    pub sigma_sq: f64,
    pub dz: f64,
    pub dzb: f64,
    pub dzs: f64,
}

/// Validated parameters with samplers and per-step θ precomputed, shared by
/// every path of an ensemble.
#[derive(Debug, Clone)]
pub struct Simulator {
    params: BnsParams,
    model: SimModel,
    grid: SimGrid,
    thetas: Vec<f64>,
    z: IncrementSampler,
    zb: IncrementSampler,
    zstar: IncrementSampler,
}

impl Simulator {
    pub fn new(params: &BnsParams, schedule: &ThetaSchedule, model: SimModel, grid: SimGrid) -> Result<Self> {
        params.validate_for(model)?;
        let dt_sub = params.lambda * grid.dt();
        let zb = match (model, params.zb_spec) {
            (SimModel::Refined, Some(s)) => s.increments(dt_sub)?,
            _ => IncrementSampler::Zero,
        };
        let zstar = match (model, params.zstar_spec) {
            (SimModel::Generalized, Some(s)) => s.increments(dt_sub)?,
            _ => IncrementSampler::Zero,
        };
        let thetas = if model == SimModel::Refined {
            (0..grid.n_steps).map(|k| schedule.at(grid.time(k))).collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            params: params.clone(),
            model,
            grid,
            thetas,
            z: params.z_spec.increments(dt_sub)?,
            zb,
            zstar,
        })
    }

    pub fn grid(&self) -> SimGrid {
        self.grid
    }

    pub fn model(&self) -> SimModel {
        self.model
    }

    pub fn params(&self) -> &BnsParams {
        &self.params
    }

    /// Runs one path and hands every node, in order, to `visit`.
    pub fn run(&self, seed: u64, path_id: u64, layout: StreamLayout, mut visit: impl FnMut(usize, &NodeState)) {
        let p = &self.params;
        let dt = self.grid.dt();
        let sqdt = dt.sqrt();
        let decay = (-p.lambda * dt).exp();
        let mix = (1.0 - p.rho_prime * p.rho_prime).sqrt();
        let mut gauss = rng::stream(seed, path_stream_id(path_id, layout.gaussian));
        let mut rz = rng::stream(seed, path_stream_id(path_id, layout.z));
        let mut rzb = rng::stream(seed, path_stream_id(path_id, layout.zb));
        let mut rzs = rng::stream(seed, path_stream_id(path_id, layout.zstar));
        let mut st = NodeState {
            x: 0.0,
            sigma_sq: p.sigma0_sq,
            dz: 0.0,
            dzb: 0.0,
            dzs: 0.0,
        };
        visit(0, &st);
        for k in 0..self.grid.n_steps {
            let g: f64 = StandardNormal.sample(&mut gauss);
            let dz = self.z.sample(&mut rz);
            let dzb = self.zb.sample(&mut rzb);
            let dzs = self.zstar.sample(&mut rzs);
            let (vol_jump, price_jump) = match self.model {
                SimModel::Classical => (dz, dz),
                SimModel::Generalized => (p.rho_prime * dz + mix * dzs, dz),
                SimModel::Refined => {
                    let th = self.thetas[k];
                    let j = (1.0 - th) * dz + th * dzb;
                    (j, j)
                }
            };
            let v = st.sigma_sq;
            let drift = (p.mu + p.beta * v) * dt;
            let diffusion = v.sqrt() * sqdt * g;
            st.x = st.x + drift + diffusion + p.rho * price_jump;
            st.sigma_sq = v * decay + vol_jump;
            st.dz = dz;
            st.dzb = dzb;
            st.dzs = dzs;
            visit(k + 1, &st);
        }
    }

    pub fn path(&self, seed: u64, path_id: u64, layout: StreamLayout) -> SimPath {
        let n = self.grid.n_steps;
        let mut out = SimPath {
            dt: self.grid.dt(),
            s0: self.params.s0,
            x: Vec::with_capacity(n + 1),
            sigma_sq: Vec::with_capacity(n + 1),
            s: Vec::with_capacity(n + 1),
            dz: Vec::with_capacity(n),
            dzb: Vec::with_capacity(n),
            dzs: Vec::with_capacity(n),
            quad_z: Vec::with_capacity(n + 1),
            quad_zb: Vec::with_capacity(n + 1),
            quad_zs: Vec::with_capacity(n + 1),
        };
        let s0 = self.params.s0;
        self.run(seed, path_id, layout, |k, st| {
            out.x.push(st.x);
            out.sigma_sq.push(st.sigma_sq);
            out.s.push(s0 * st.x.exp());
            if k == 0 {
                out.quad_z.push(0.0);
                out.quad_zb.push(0.0);
                out.quad_zs.push(0.0);
            } else {
                out.dz.push(st.dz);
                out.dzb.push(st.dzb);
                out.dzs.push(st.dzs);
                out.quad_z.push(out.quad_z[k - 1] + st.dz * st.dz);
                out.quad_zb.push(out.quad_zb[k - 1] + st.dzb * st.dzb);
                out.quad_zs.push(out.quad_zs[k - 1] + st.dzs * st.dzs);
            }
        });
        out
    }
}

/// One simulated path on the full grid, with its jump ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPath {
    pub dt: f64,
    pub s0: f64,
    pub x: Vec<f64>,
    pub sigma_sq: Vec<f64>,
    pub s: Vec<f64>,
    /// Subordinator increments of each step (length `n_steps`).
    pub dz: Vec<f64>,
    pub dzb: Vec<f64>,
    pub dzs: Vec<f64>,
    /// Running sums of squared increments, one per node.
    pub quad_z: Vec<f64>,
    pub quad_zb: Vec<f64>,
    pub quad_zs: Vec<f64>,
}

impl SimPath {
    pub fn n_steps(&self) -> usize {
        self.dz.len()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.x.len()).map(|k| k as f64 * self.dt).collect()
    }

    /// Cumulative Z path `Z_{λ t_k}` on the grid.
    pub fn cumulative_z(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.dz.iter().scan(0.0, |acc, d| {
                *acc += d;
                Some(*acc)
            }))
            .collect()
    }
}

pub fn simulate_path(
    params: &BnsParams,
    schedule: &ThetaSchedule,
    model: SimModel,
    grid: SimGrid,
    seed: u64,
    path_id: u64,
) -> Result<SimPath> {
    Ok(Simulator::new(params, schedule, model, grid)?.path(seed, path_id, StreamLayout::default()))
}

/// Mean variance path `E[σ²_{t_k}]` of the discretised dynamics under a
/// fixed θ: `m_{k+1} = m_k·e^{−λΔt} + λΔt·E[drive₁]`.
pub fn expected_variance_path(params: &BnsParams, model: SimModel, theta: f64, grid: SimGrid) -> Result<Vec<f64>> {
    params.validate_for(model)?;
    let dt = grid.dt();
    let decay = (-params.lambda * dt).exp();
    let zm = params.z_spec.mean_rate();
    let drive = match model {
        SimModel::Classical => zm,
        SimModel::Generalized => {
            let zs = params.zstar_spec.map_or(0.0, |s| s.mean_rate());
            params.rho_prime * zm + (1.0 - params.rho_prime * params.rho_prime).sqrt() * zs
        }
        SimModel::Refined => {
            let zb = params.zb_spec.map_or(0.0, |s| s.mean_rate());
            (1.0 - theta) * zm + theta * zb
        }
    };
    let step = params.lambda * dt * drive;
    let mut m = Vec::with_capacity(grid.n_steps + 1);
    m.push(params.sigma0_sq);
    for k in 0..grid.n_steps {
        m.push(m[k] * decay + step);
    }
    Ok(m)
}
