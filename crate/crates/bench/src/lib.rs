//! Inputs shared by the benchmarks in `benches/`.

use rand::Rng;
use rand_distr::StandardNormal;

use bns_core::labels::WINDOW_LEN;
use bns_core::{rng, PriceSeries, WindowDataset, WindowRow};

/// Random-walk closes with occasional sharp drops.
pub fn noisy_walk(len: usize, seed: u64) -> PriceSeries {
    let mut r = rng::stream(seed, 0);
    let mut c = 60.0;
    let closes: Vec<f64> = (0..len)
        .map(|_| {
            let shock: f64 = if r.random::<f64>() < 0.05 {
                -0.04 * r.random::<f64>()
            } else {
                0.015 * r.sample::<f64, _>(StandardNormal)
            };
            c = (c * (1.0 + shock)).max(1.0);
            c
        })
        .collect();
    PriceSeries::from_closes(&closes).expect("positive closes")
}

/// Two Gaussian blobs at ±`separation` with unit noise.
pub fn blobs(n: usize, separation: f64, seed: u64) -> WindowDataset {
    let mut r = rng::stream(seed, 1);
    let rows = (0..n)
        .map(|i| {
            let theta = u8::from(i % 2 == 1);
            let mean = if theta == 1 { separation } else { -separation };
            let features: [f64; WINDOW_LEN] = std::array::from_fn(|_| mean + r.sample::<f64, _>(StandardNormal));
            WindowRow {
                features,
                start_index: i,
                theta,
            }
        })
        .collect();
    WindowDataset {
        rows,
        ..WindowDataset::empty(2.0)
    }
}
