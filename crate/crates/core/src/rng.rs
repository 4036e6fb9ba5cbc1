//! Counter-based random streams and low-discrepancy candidate sequences.
//!
//! Every random draw is addressed by `(seed, index)`: the ChaCha stream id is
//! the index, so parallel generation gives the same values as sequential
//! generation regardless of scheduling.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::CVec;

/// Independent generator for item `index` of the run keyed by `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives a sub-seed for a named purpose so that one user seed can feed
/// several independent samples.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(salt);
    rng.next_u64()
}

/// Uniform point on the unit sphere of `C^n`.
pub fn unit_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    loop {
        let coords: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let v = CVec::new(coords).expect("finite normals");
        let norm = v.norm();
        if norm > 1e-150 {
            return v.scale_real(1.0 / norm);
        }
    }
}

/// Additive recurrence `x_k = frac(offset + k * alpha)` with the generalized
/// golden-ratio increments in `d` dimensions.
#[derive(Clone, Debug)]
pub struct Kronecker {
    alpha: Vec<f64>,
    offset: Vec<f64>,
    k: u64,
}

impl Kronecker {
    pub fn new(dim: usize, seed: u64) -> Self {
        // phi_d is the positive root of x^(d+1) = x + 1
        let mut phi = 2.0f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
        }
        let alpha = (1..=dim).map(|i| phi.powi(-(i as i32)).fract()).collect();
        let mut rng = stream(seed, u64::MAX);
        let offset = (0..dim).map(|_| rng.random::<f64>()).collect();
        Kronecker {
            alpha,
            offset,
            k: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.k += 1;
        let k = self.k as f64;
        self.alpha
            .iter()
            .zip(&self.offset)
            .map(|(a, o)| (o + k * a).fract())
            .collect()
    }
}

/// Sorted spacings of `u`: a point of the `len(u)`-simplex with `len(u) + 1`
/// nonnegative parts summing to one (uniform when `u` is uniform).
fn spacings(u: &[f64]) -> Vec<f64> {
    let mut s = u.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let mut out = Vec::with_capacity(s.len() + 1);
    let mut prev = 0.0;
    for x in s {
        out.push(x - prev);
        prev = x;
    }
    out.push(1.0 - prev);
    out
}

/// Maps `u in [0,1)^(2n)` to the ball of radius `radius` in `C^n`, pushing the
/// uniform measure on the cube to the normalized volume measure.
pub fn cube_to_ball(u: &[f64], n: usize, radius: f64) -> CVec {
    assert_eq!(u.len(), 2 * n);
    let s = spacings(&u[..n]);
    let coords = (0..n)
        .map(|k| Complex64::from_polar(radius * s[k].sqrt(), 2.0 * PI * u[n + k]))
        .collect();
    CVec::new(coords).expect("finite")
}

/// Maps `u in [0,1)^(2n-1)` to the unit sphere of `C^n` (uniform to uniform).
pub fn cube_to_sphere(u: &[f64], n: usize) -> CVec {
    assert_eq!(u.len(), 2 * n - 1);
    let s = spacings(&u[..n - 1]);
    let coords = (0..n)
        .map(|k| Complex64::from_polar(s[k].sqrt(), 2.0 * PI * u[n - 1 + k]))
        .collect();
    let v = CVec::new(coords).expect("finite");
    let norm = v.norm();
    v.scale_real(1.0 / norm)
}

/// `count` well-spread directions on the unit sphere of `C^n`. The first one
/// is always `e_1`.
pub fn sphere_directions(n: usize, count: usize) -> Vec<CVec> {
    let mut out = Vec::with_capacity(count.max(1));
    out.push(CVec::basis(n, 0));
    if n == 1 {
        for k in 1..count {
            let theta = 2.0 * PI * k as f64 / count as f64;
            out.push(CVec::new(vec![Complex64::from_polar(1.0, theta)]).unwrap());
        }
        return out;
    }
    let mut seq = Kronecker::new(2 * n - 1, 0);
    while out.len() < count {
        out.push(cube_to_sphere(&seq.next_point(), n));
    }
    out
}
