//! ReLU neural tangent kernel: arc-cosine functions, the closed recursion, and a
//! finite-width Monte-Carlo estimate used to check it.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seeds::{derive_seed, rng_from_seed};

#[inline]
fn clamp_unit(t: f64) -> f64 {
    t.clamp(-1.0, 1.0)
}

/// `κ₀(t) = (π − arccos t)/π`, with `t` clamped to `[−1, 1]`.
pub fn kappa0(t: f64) -> f64 {
    let t = clamp_unit(t);
    (PI - t.acos()) / PI
}

/// `κ₁(t) = (t(π − arccos t) + √(1 − t²))/π`, with `t` clamped to `[−1, 1]`.
pub fn kappa1(t: f64) -> f64 {
    let t = clamp_unit(t);
    (t * (PI - t.acos()) + (1.0 - t * t).sqrt()) / PI
}

/// `K_depth(u, v)` from squared norms and the inner product.
///
/// Seeded with `K₀ = Σ₀ = ⟨u, v⟩`; each step applies
/// `Σ_ℓ = ‖u‖‖v‖κ₁(ρ)`, `K_ℓ = Σ_ℓ + K_{ℓ−1}κ₀(ρ)` with `ρ = Σ_{ℓ−1}/(‖u‖‖v‖)`.
/// Norms must be positive.
pub fn ntk_recursion(norm_sq_u: f64, inner: f64, norm_sq_v: f64, depth: u32) -> f64 {
    let scale = (norm_sq_u * norm_sq_v).sqrt();
    let mut sigma = inner;
    let mut k = inner;
    for _ in 0..depth {
        let rho = sigma / scale;
        let next_sigma = scale * kappa1(rho);
        k = next_sigma + k * kappa0(rho);
        sigma = next_sigma;
    }
    k
}

/// Unnormalized NTK `K_depth(u, v)` for two vectors.
pub fn ntk_value(u: &[f64], v: &[f64], depth: u32) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            context: "ntk_value",
            expected: u.len(),
            got: v.len(),
        });
    }
    let nu: f64 = u.iter().map(|a| a * a).sum();
    let nv: f64 = v.iter().map(|a| a * a).sum();
    if nu <= 0.0 || nv <= 0.0 {
        return Err(Error::invalid("u/v", "NTK needs nonzero vectors"));
    }
    let uv: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok(ntk_recursion(nu, uv, nv, depth))
}

/// Monte-Carlo tangent kernel of `f(x) = √(2/m)·⟨w₂, ReLU(W₁x)⟩` at a standard
/// normal initialization, averaged over `n_trials` independent draws.
///
/// The two gradient blocks are
/// `∂f/∂w₂ = √(2/m)·ReLU(W₁x)` and `∂f/∂W₁ = √(2/m)·(w₂ ⊙ 1[W₁x > 0])xᵀ`,
/// so the kernel is `(2/m)·Σᵢ [ReLU(aᵢ)ReLU(bᵢ) + w₂ᵢ²·1[aᵢ>0]1[bᵢ>0]·⟨u,v⟩]`.
/// As `m → ∞` this tends to one step of [`ntk_recursion`] (a single hidden layer).
pub fn empirical_ntk(width: usize, u: &[f64], v: &[f64], n_trials: usize, seed: u64) -> Result<f64> {
    if width == 0 {
        return Err(Error::invalid("width", "must be at least 1"));
    }
    if n_trials == 0 {
        return Err(Error::invalid("n_trials", "must be at least 1"));
    }
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            context: "empirical_ntk",
            expected: u.len(),
            got: v.len(),
        });
    }
    let uv: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let total: f64 = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng_from_seed(derive_seed(seed, "empirical_ntk", &[trial]));
            let mut acc = 0.0;
            for _ in 0..width {
                let (mut a, mut b) = (0.0, 0.0);
                for (ui, vi) in u.iter().zip(v) {
                    let w: f64 = StandardNormal.sample(&mut rng);
                    a += w * ui;
                    b += w * vi;
                }
                let w2: f64 = StandardNormal.sample(&mut rng);
                if a > 0.0 && b > 0.0 {
                    acc += a * b + w2 * w2 * uv;
                }
            }
            2.0 * acc / width as f64
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(total / n_trials as f64)
}
