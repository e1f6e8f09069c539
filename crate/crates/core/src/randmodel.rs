//! The probabilistic model Z_H = X_1 + ... + X_H of independent points
//! uniform on the unit circle: seeded Monte Carlo sampling and the exact
//! Bessel-product characteristic function of the normalized walk.

use num_complex::Complex64;
use rayon::prelude::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numeric::Kahan;
use crate::specfun::bessel_j0;

/// Draws are produced in fixed batches, one ChaCha stream per batch, so the
/// sample sequence depends only on (seed, H) and not on the thread count.
pub const MC_BATCH: u64 = 1 << 14;

/// Seeded sampler for the random walk Z_H.
#[derive(Debug, Clone)]
pub struct ModelSampler {
    pub h: u64,
    pub seed: u64,
}

impl ModelSampler {
    pub fn new(h: u64, seed: u64) -> Self {
        assert!(h >= 1);
        ModelSampler { h, seed }
    }

    fn rng_for_stream(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// One draw of Z_H = sum of H points e(theta_j), theta_j uniform.
    pub fn sample_z(&self, rng: &mut ChaCha8Rng) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for _ in 0..self.h {
            let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
            re += theta.cos();
            im += theta.sin();
        }
        Complex64::new(re, im)
    }

    /// Convenience single-stream draw sequence (stream 0).
    pub fn sample_many(&self, n: usize) -> Vec<Complex64> {
        let mut rng = self.rng_for_stream(0);
        (0..n).map(|_| self.sample_z(&mut rng)).collect()
    }

    /// Monte Carlo estimate of E[(Re Z_H)^r (Im Z_H)^s] from `draws` draws,
    /// with a delete-one-batch jackknife standard error. Batches are fixed
    /// blocks of [`MC_BATCH`] draws on independent RNG streams, evaluated in
    /// parallel and combined in batch order.
    pub fn mc_moment(&self, r: u32, s: u32, draws: u64) -> McEstimate {
        let n_batches = draws.div_ceil(MC_BATCH);
        let batch_sums: Vec<(f64, u64)> = (0..n_batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = self.rng_for_stream(b + 1);
                let lo = b * MC_BATCH;
                let hi = ((b + 1) * MC_BATCH).min(draws);
                let mut acc = Kahan::default();
                for _ in lo..hi {
                    let z = self.sample_z(&mut rng);
                    acc.add(z.re.powi(r as i32) * z.im.powi(s as i32));
                }
                (acc.value(), hi - lo)
            })
            .collect();
        let total: f64 = batch_sums.iter().map(|(v, _)| v).sum();
        let n = draws as f64;
        let mean = total / n;
        // jackknife over batches
        let b = batch_sums.len() as f64;
        let mut var = 0.0;
        if batch_sums.len() > 1 {
            for &(v, c) in &batch_sums {
                let loo = (total - v) / (n - c as f64);
                var += (loo - mean) * (loo - mean);
            }
            var *= (b - 1.0) / b;
        }
        McEstimate {
            value: mean,
            std_error: var.sqrt(),
            draws,
        }
    }
}

/// A Monte Carlo estimate with its jackknife standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub draws: u64,
}

/// Exact characteristic function of the normalized walk
/// Z_H / sqrt(H/2): E exp(i u Re + i v Im) = J0(sqrt(2(u^2+v^2)/H))^H.
/// Real-valued by rotational symmetry, and depends on (u, v) only through
/// u^2 + v^2.
pub fn model_cf(u: f64, v: f64, h: u64) -> f64 {
    let rho = (2.0 * (u * u + v * v) / h as f64).sqrt();
    bessel_j0(rho).powi(h as i32)
}
