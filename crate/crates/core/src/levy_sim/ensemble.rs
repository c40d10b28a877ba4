use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_sim::params::{BnsParams, SimModel};
use crate::levy_sim::path::{SimGrid, Simulator, StreamLayout};
use crate::levy_sim::schedule::ThetaSchedule;

pub const MAGIC: &[u8; 16] = b"BNS-ENSEMBLE\0v01";

/// Default ceiling on recorded ensemble memory (4 GiB).
pub const DEFAULT_MAX_BYTES: usize = 4 << 30;

/// Values stored per recorded node: X, σ², S.
const COLUMNS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recording {
    All,
    /// Sorted, de-duplicated node indices.
    Nodes(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOptions {
    /// Worker threads; 0 uses the global rayon pool.
    pub threads: usize,
    pub recording: Recording,
    pub max_bytes: usize,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            threads: 0,
            recording: Recording::All,
            max_bytes: DEFAULT_MAX_BYTES,
        }
    }
}

/// Recorded nodes of many independent paths. Values are path-major:
/// `x[p * nodes.len() + j]` is X of path `p` at node `nodes[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEnsemble {
    pub dt: f64,
    pub n_steps: usize,
    pub nodes: Vec<usize>,
    pub x: Vec<f64>,
    pub sigma_sq: Vec<f64>,
    pub s: Vec<f64>,
}

impl SimEnsemble {
    pub fn n_paths(&self) -> usize {
        if self.nodes.is_empty() {
            0
        } else {
            self.x.len() / self.nodes.len()
        }
    }

    /// Position of grid node `k` among the recorded nodes.
    pub fn slot(&self, k: usize) -> Option<usize> {
        self.nodes.binary_search(&k).ok()
    }

    /// Slot of the recorded node at time `t`.
    pub fn slot_at(&self, t: f64) -> Result<usize> {
        let grid = SimGrid::new(self.dt * self.n_steps as f64, self.n_steps)?;
        let k = grid.node_at(t)?;
        self.slot(k).ok_or(Error::OffGrid { time: t, dt: self.dt })
    }

    /// X across paths at recorded slot `j`.
    pub fn x_column(&self, j: usize) -> Vec<f64> {
        let m = self.nodes.len();
        (0..self.n_paths()).map(|p| self.x[p * m + j]).collect()
    }

    pub fn sigma_sq_column(&self, j: usize) -> Vec<f64> {
        let m = self.nodes.len();
        (0..self.n_paths()).map(|p| self.sigma_sq[p * m + j]).collect()
    }

    /// One row per node per path: `path,step,t,x,sigma_sq,s`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["path", "step", "t", "x", "sigma_sq", "s"])?;
        let m = self.nodes.len();
        for p in 0..self.n_paths() {
            for (j, &k) in self.nodes.iter().enumerate() {
                let i = p * m + j;
                w.write_record(&[
                    p.to_string(),
                    k.to_string(),
                    (k as f64 * self.dt).to_string(),
                    self.x[i].to_string(),
                    self.sigma_sq[i].to_string(),
                    self.s[i].to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }

    /// Columnar binary layout, little-endian throughout: 16-byte magic,
    /// `u64 n_paths`, `u64 n_nodes`, `u64 n_steps`, `f64 dt`, `n_nodes × u64`
    /// node indices, then the X, σ² and S columns as `f64` arrays.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Format(e.to_string());
        out.write_all(MAGIC).map_err(io)?;
        for v in [self.n_paths() as u64, self.nodes.len() as u64, self.n_steps as u64] {
            out.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        out.write_all(&self.dt.to_le_bytes()).map_err(io)?;
        for &k in &self.nodes {
            out.write_all(&(k as u64).to_le_bytes()).map_err(io)?;
        }
        for col in [&self.x, &self.sigma_sq, &self.s] {
            let bytes: Vec<u8> = col.iter().flat_map(|v| v.to_le_bytes()).collect();
            out.write_all(&bytes).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut buf = Vec::new();
        input.read_to_end(&mut buf).map_err(|e| Error::Format(e.to_string()))?;
        let mut cur = Cursor { buf: &buf, at: 0 };
        if cur.take(16)? != MAGIC {
            return Err(Error::Format("bad magic header".into()));
        }
        let n_paths = cur.u64()? as usize;
        let n_nodes = cur.u64()? as usize;
        let n_steps = cur.u64()? as usize;
        let dt = f64::from_bits(cur.u64()?);
        let nodes = (0..n_nodes)
            .map(|_| cur.u64().map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let len = n_paths
            .checked_mul(n_nodes)
            .ok_or_else(|| Error::Format("size overflow".into()))?;
        let x = cur.f64s(len)?;
        let sigma_sq = cur.f64s(len)?;
        let s = cur.f64s(len)?;
        if cur.at != buf.len() {
            return Err(Error::Format(format!("{} trailing bytes", buf.len() - cur.at)));
        }
        Ok(Self {
            dt,
            n_steps,
            nodes,
            x,
            sigma_sq,
            s,
        })
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated at byte {}", self.at)))?;
        let chunk = &self.buf[self.at..end];
        self.at = end;
        Ok(chunk)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// `n_paths` independent paths; path `i` uses the streams of `(seed, i)`, so
/// the result does not depend on `opts.threads`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_ensemble(
    params: &BnsParams,
    schedule: &ThetaSchedule,
    model: SimModel,
    grid: SimGrid,
    n_paths: usize,
    seed: u64,
    opts: &EnsembleOptions,
) -> Result<SimEnsemble> {
    if n_paths == 0 {
        return Err(Error::param("n_paths", "must be at least 1"));
    }
    let sim = Simulator::new(params, schedule, model, grid)?;
    let nodes: Vec<usize> = match &opts.recording {
        Recording::All => (0..=grid.n_steps).collect(),
        Recording::Nodes(v) => {
            let mut v = v.clone();
            v.sort_unstable();
            v.dedup();
            if let Some(&k) = v.iter().find(|&&k| k > grid.n_steps) {
                return Err(Error::param(
                    "recording",
                    format!("node {k} beyond the last step {}", grid.n_steps),
                ));
            }
            v
        }
    };
    let bytes = n_paths
        .checked_mul(nodes.len())
        .and_then(|v| v.checked_mul(COLUMNS * 8))
        .unwrap_or(usize::MAX);
    if bytes > opts.max_bytes {
        return Err(Error::Capacity(format!(
            "{n_paths} paths × {} recorded nodes needs {bytes} bytes, limit is {}; record fewer nodes",
            nodes.len(),
            opts.max_bytes
        )));
    }
    let mut slot_of = vec![usize::MAX; grid.n_steps + 1];
    for (j, &k) in nodes.iter().enumerate() {
        slot_of[k] = j;
    }
    let m = nodes.len();
    let s0 = params.s0;
    let one = |p: usize| -> Vec<f64> {
        let mut rec = vec![0.0; COLUMNS * m];
        sim.run(seed, p as u64, StreamLayout::default(), |k, st| {
            let j = slot_of[k];
            if j != usize::MAX {
                rec[j] = st.x;
                rec[m + j] = st.sigma_sq;
                rec[2 * m + j] = s0 * st.x.exp();
            }
        });
        rec
    };
    let run_all = || -> Vec<Vec<f64>> { (0..n_paths).into_par_iter().map(one).collect() };
    let recs = if opts.threads == 0 {
        run_all()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| Error::Capacity(format!("cannot start {} threads: {e}", opts.threads)))?
            .install(run_all)
    };
    let mut out = SimEnsemble {
        dt: grid.dt(),
        n_steps: grid.n_steps,
        nodes,
        x: Vec::with_capacity(n_paths * m),
        sigma_sq: Vec::with_capacity(n_paths * m),
        s: Vec::with_capacity(n_paths * m),
    };
    for rec in recs {
        out.x.extend_from_slice(&rec[..m]);
        out.sigma_sq.extend_from_slice(&rec[m..2 * m]);
        out.s.extend_from_slice(&rec[2 * m..]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_sim::path::simulate_path;
    use crate::levy_sim::subordinator::SubordinatorSpec;
    use crate::numeric::{mean, sample_variance};

    fn constant() -> ThetaSchedule {
        ThetaSchedule::constant(0.4).unwrap()
    }

    #[test]
    fn single_path_matches_simulate_path() {
        let p = BnsParams::default();
        let g = SimGrid::new(0.5, 126).unwrap();
        let e = simulate_ensemble(
            &p,
            &constant(),
            SimModel::Refined,
            g,
            1,
            21,
            &EnsembleOptions::default(),
        )
        .unwrap();
        let path = simulate_path(&p, &constant(), SimModel::Refined, g, 21, 0).unwrap();
        assert_eq!(e.x, path.x);
        assert_eq!(e.sigma_sq, path.sigma_sq);
        assert_eq!(e.s, path.s);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let p = BnsParams::default();
        let g = SimGrid::new(1.0, 252).unwrap();
        let run = |threads| {
            let opts = EnsembleOptions {
                threads,
                ..EnsembleOptions::default()
            };
            simulate_ensemble(&p, &constant(), SimModel::Refined, g, 64, 5, &opts).unwrap()
        };
        assert_eq!(run(1), run(8));
    }

    #[test]
    fn terminal_variance_mean_matches_ou_mean() {
        let p = BnsParams {
            z_spec: SubordinatorSpec::cpe(1.0, 2.0),
            zb_spec: None,
            lambda: 1.0,
            sigma0_sq: 0.04,
            ..BnsParams::default()
        };
        let g = SimGrid::new(1.0, 252).unwrap();
        let opts = EnsembleOptions {
            recording: Recording::Nodes(vec![252]),
            ..EnsembleOptions::default()
        };
        let e = simulate_ensemble(&p, &constant(), SimModel::Classical, g, 20_000, 8, &opts).unwrap();
        let v = e.sigma_sq_column(0);
        let target = 0.04 * (-1f64).exp() + 0.5 * (1.0 - (-1f64).exp());
        let se = (sample_variance(&v) / v.len() as f64).sqrt();
        assert!((mean(&v) - target).abs() <= 3.0 * se, "{} vs {target}", mean(&v));
    }

    #[test]
    fn halving_the_step_keeps_the_terminal_mean() {
        let p = BnsParams::default();
        let run = |n| {
            let opts = EnsembleOptions {
                recording: Recording::Nodes(vec![n]),
                ..EnsembleOptions::default()
            };
            let e = simulate_ensemble(
                &p,
                &constant(),
                SimModel::Classical,
                SimGrid::new(1.0, n).unwrap(),
                20_000,
                3,
                &opts,
            )
            .unwrap();
            e.x_column(0)
        };
        let (a, b) = (run(126), run(252));
        let se = ((sample_variance(&a) + sample_variance(&b)) / a.len() as f64).sqrt();
        assert!((mean(&a) - mean(&b)).abs() <= 3.0 * se);
    }

    #[test]
    fn capacity_limit_is_explicit() {
        let opts = EnsembleOptions {
            max_bytes: 1000,
            ..EnsembleOptions::default()
        };
        let g = SimGrid::new(1.0, 252).unwrap();
        let err =
            simulate_ensemble(&BnsParams::default(), &constant(), SimModel::Classical, g, 10, 0, &opts).unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
    }

    #[test]
    fn binary_round_trip_and_corruption() {
        let g = SimGrid::new(0.25, 63).unwrap();
        let opts = EnsembleOptions {
            recording: Recording::Nodes(vec![63, 0, 21, 21]),
            ..EnsembleOptions::default()
        };
        let e = simulate_ensemble(&BnsParams::default(), &constant(), SimModel::Refined, g, 7, 2, &opts).unwrap();
        assert_eq!(e.nodes, vec![0, 21, 63]);
        let mut bytes = Vec::new();
        e.write_binary(&mut bytes).unwrap();
        assert_eq!(&bytes[..16], MAGIC);
        assert_eq!(SimEnsemble::read_binary(bytes.as_slice()).unwrap(), e);
        assert!(SimEnsemble::read_binary(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(SimEnsemble::read_binary(bytes.as_slice()).is_err());
    }

    #[test]
    fn csv_has_one_row_per_node_per_path() {
        let g = SimGrid::new(0.1, 10).unwrap();
        let e = simulate_ensemble(
            &BnsParams::default(),
            &constant(),
            SimModel::Classical,
            g,
            3,
            2,
            &EnsembleOptions::default(),
        )
        .unwrap();
        let mut out = Vec::new();
        e.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 11);
        assert!(text.starts_with("path,step,t,x,sigma_sq,s\n"));
    }
}
