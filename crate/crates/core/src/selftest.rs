//! Randomized sweeps over the exact identities and inequalities of the ball
//! geometry. Used by the `geometry-selftest` command and the acceptance suite.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{
    bergman_dist, ellipsoid_of, mobius, one_minus_inner, rho, rho_upper_bound, BallPoint,
};
use crate::measure::sample_uniform_ball;
use crate::rng;

/// Thresholds a sweep is judged against.
pub const INVOLUTION_TOL: f64 = 1e-10;
pub const IDENTITY_REL_TOL: f64 = 1e-12;
pub const INEQUALITY_SLACK: f64 = -1e-12;
pub const N1_EQUALITY_TOL: f64 = 1e-12;
pub const ELLIPSOID_BAND: f64 = 1e-9;
pub const TANH_ROUND_TRIP_TOL: f64 = 1e-12;
/// Radius of the region sampled by the involution and identity sweeps. Both
/// residuals are measured on the stored image vector, whose rounding alone
/// contributes a relative error of about `1e-16 / (1 - |sigma_z(w)|^2)`.
pub const CONDITIONED_RADIUS: f64 = 0.95;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub name: String,
    pub n: usize,
    pub samples: usize,
    /// Worst residual (or most negative slack, or disagreement count).
    pub worst: f64,
    pub threshold: f64,
    pub failures: usize,
}

impl SweepResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub sweeps: Vec<SweepResult>,
    pub passed: usize,
    pub failed: usize,
}

fn pairs(n: usize, count: usize, seed: u64) -> Vec<(BallPoint, BallPoint)> {
    pairs_within(n, 1.0, count, seed)
}

fn pairs_within(n: usize, radius: f64, count: usize, seed: u64) -> Vec<(BallPoint, BallPoint)> {
    let zs = sample_uniform_ball(n, radius, count, rng::derive_seed(seed, 1));
    let ws = sample_uniform_ball(n, radius, count, rng::derive_seed(seed, 2));
    zs.into_iter().zip(ws).collect()
}

pub fn involution(n: usize, count: usize, seed: u64) -> SweepResult {
    let worst = pairs_within(n, CONDITIONED_RADIUS, count, seed)
        .par_iter()
        .map(|(z, w)| mobius(z, &mobius(z, w)).vec().dist_sqr(w.vec()).sqrt())
        .reduce(|| 0.0, f64::max);
    SweepResult {
        name: "mobius involution residual".into(),
        n,
        samples: count,
        worst,
        threshold: INVOLUTION_TOL,
        failures: usize::from(worst >= INVOLUTION_TOL),
    }
}

/// `1 - |sigma_z(w)|^2` from the image vector against the closed form.
pub fn identity(n: usize, count: usize, seed: u64) -> SweepResult {
    let errs: Vec<f64> = pairs_within(n, CONDITIONED_RADIUS, count, seed)
        .par_iter()
        .map(|(z, w)| {
            let s = mobius(z, w);
            let lhs = (1.0 - s.norm()) * (1.0 + s.norm());
            let rhs =
                z.one_minus_norm_sqr() * w.one_minus_norm_sqr() / one_minus_inner(w, z).norm_sqr();
            (lhs - rhs).abs() / rhs
        })
        .collect();
    summarize(
        "1-|sigma_z(w)|^2 identity (relative)",
        n,
        errs,
        IDENTITY_REL_TOL,
    )
}

pub fn strong_triangle(n: usize, count: usize, seed: u64) -> SweepResult {
    let third = sample_uniform_ball(n, 1.0, count, rng::derive_seed(seed, 3));
    let slacks: Vec<f64> = pairs(n, count, seed)
        .par_iter()
        .zip(third.par_iter())
        .map(|((z, w), a)| {
            let za = rho(z, a);
            let aw = rho(a, w);
            (za + aw) / (1.0 + za * aw) - rho(z, w)
        })
        .collect();
    summarize_slack("strong triangle inequality", n, slacks)
}

pub fn upper_bound(n: usize, count: usize, seed: u64) -> SweepResult {
    let slacks: Vec<f64> = pairs(n, count, seed)
        .par_iter()
        .map(|(z, w)| rho_upper_bound(z, w) - rho(z, w))
        .collect();
    if n == 1 {
        let errs = slacks.iter().map(|s| s.abs()).collect();
        return summarize("upper bound equality (n = 1)", n, errs, N1_EQUALITY_TOL);
    }
    summarize_slack("rho <= |z-w|/|1-<z,w>|", n, slacks)
}

pub fn tanh_round_trip(n: usize, count: usize, seed: u64) -> SweepResult {
    let errs = pairs(n, count, seed)
        .par_iter()
        .map(|(z, w)| (bergman_dist(z, w).tanh() - rho(z, w)).abs())
        .collect();
    summarize("rho = tanh(beta)", n, errs, TANH_ROUND_TRIP_TOL)
}

/// Counts disagreements between `rho < r` and the ellipsoid inequality,
/// ignoring samples within the band `|rho - r| < ELLIPSOID_BAND`.
pub fn ellipsoid_agreement(n: usize, count: usize, seed: u64) -> SweepResult {
    let centers = sample_uniform_ball(n, 1.0, count, rng::derive_seed(seed, 4));
    let offsets = sample_uniform_ball(n, 1.0, count, rng::derive_seed(seed, 5));
    let free = sample_uniform_ball(n, 1.0, count, rng::derive_seed(seed, 6));
    let radius_seed = rng::derive_seed(seed, 7);
    let disagreements: usize = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::stream(radius_seed, i as u64);
            let r: f64 = 0.02 + 0.96 * g.random::<f64>();
            let z = &centers[i];
            // every other sample is concentrated around the pseudo-ball boundary
            let w = if i % 2 == 0 {
                mobius(z, &offsets[i])
            } else {
                free[i].clone()
            };
            let d = rho(z, &w);
            if (d - r).abs() < ELLIPSOID_BAND {
                return 0;
            }
            let e = ellipsoid_of(z, r).expect("r in range");
            usize::from(e.contains(w.vec()) != (d < r))
        })
        .sum();
    SweepResult {
        name: "ellipsoid vs rho membership".into(),
        n,
        samples: count,
        worst: disagreements as f64,
        threshold: 0.0,
        failures: disagreements,
    }
}

fn summarize(name: &str, n: usize, errs: Vec<f64>, tol: f64) -> SweepResult {
    let failures = errs.iter().filter(|e| !(**e < tol)).count();
    SweepResult {
        name: name.into(),
        n,
        samples: errs.len(),
        worst: errs.iter().copied().fold(0.0, f64::max),
        threshold: tol,
        failures,
    }
}

fn summarize_slack(name: &str, n: usize, slacks: Vec<f64>) -> SweepResult {
    let failures = slacks.iter().filter(|s| !(**s >= INEQUALITY_SLACK)).count();
    SweepResult {
        name: name.into(),
        n,
        samples: slacks.len(),
        worst: slacks.iter().copied().fold(f64::INFINITY, f64::min),
        threshold: INEQUALITY_SLACK,
        failures,
    }
}

/// Runs every sweep for each dimension in `dims`.
pub fn run_geometry_suite(dims: &[usize], count: usize, seed: u64) -> GeometryReport {
    let mut sweeps = Vec::new();
    for &n in dims {
        let s = rng::derive_seed(seed, n as u64);
        sweeps.push(involution(n, count, s));
        sweeps.push(identity(n, count, s));
        sweeps.push(strong_triangle(n, count, s));
        sweeps.push(upper_bound(n, count, s));
        sweeps.push(tanh_round_trip(n, count.min(1000), s));
        sweeps.push(ellipsoid_agreement(n, count, s));
    }
    let passed = sweeps.iter().filter(|s| s.passed()).count();
    let failed = sweeps.len() - passed;
    GeometryReport {
        sweeps,
        passed,
        failed,
    }
}
