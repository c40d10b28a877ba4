//! Central finite-difference gradient checker.

use rand::seq::index::sample;

use crate::learners::nn::ParamSet;
use crate::rng;

pub const FD_STEP: f64 = 1e-5;

/// Gradients smaller than this are compared on an absolute scale; below it
/// the finite-difference rounding noise (~1e-11) dominates any ratio.
pub const GRAD_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_FLOOR)
}

pub fn central_difference<P: ParamSet>(params: &P, k: usize, loss: &impl Fn(&P) -> f64) -> f64 {
    let mut p = params.clone();
    let x = params.get_flat(k);
    p.set_flat(k, x + FD_STEP);
    let up = loss(&p);
    p.set_flat(k, x - FD_STEP);
    let down = loss(&p);
    (up - down) / (2.0 * FD_STEP)
}

/// Compares `grads` with central differences of `loss` at `n_coords`
/// randomly chosen coordinates and returns the worst relative error.
pub fn check_gradients<P: ParamSet>(
    params: &P,
    grads: &P,
    n_coords: usize,
    seed: u64,
    loss: impl Fn(&P) -> f64,
) -> f64 {
    let total = params.num_params();
    let mut r = rng::stream(seed, u64::MAX);
    sample(&mut r, total, n_coords.min(total))
        .into_iter()
        .map(|k| relative_error(grads.get_flat(k), central_difference(params, k, &loss)))
        .fold(0.0, f64::max)
}
