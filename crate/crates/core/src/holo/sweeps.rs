//! Empirical forms of the local estimates behind the test functions: each
//! sweep samples the relevant configuration space and reports the extreme
//! value of a ratio whose boundedness (or positivity) is the claim.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::functions::{
    apalpha_norm, normalized_monomials, special_points, test_fn, AnalyticFn, KernelPower,
    TestFnParams,
};
use crate::error::{check_range, Result};
use crate::geometry::{mobius, rho, BallPoint, CVec};
use crate::measure::{
    on_ray, pairwise_sum, recenter, recenter_within, sample_nu_alpha, WeightParams,
};
use crate::rng;

fn uniform_in(n: usize, radius: f64, g: &mut impl Rng) -> BallPoint {
    let dir = rng::unit_sphere(n, g);
    let u: f64 = g.random();
    on_ray(&dir, radius * u.powf(0.5 / n as f64))
}

/// A point of `Delta(center, radius)`, uniform in the Moebius chart at `center`.
fn near(center: &BallPoint, radius: f64, g: &mut impl Rng) -> BallPoint {
    mobius(center, &uniform_in(center.dim(), radius, g))
}

/// Half the partners are uniform in the ball, half lie in `Delta(z, 1/2)`.
/// Returned in the chart at `z`, i.e. as `v` with `w = sigma_z(v)`.
fn partner_chart(z: &BallPoint, i: u64, g: &mut impl Rng) -> BallPoint {
    if i % 2 == 0 {
        mobius(z, &uniform_in(z.dim(), 1.0, g))
    } else {
        uniform_in(z.dim(), 0.5, g)
    }
}

/// Real coordinates of `(u, v)`; `z = sigma_c(u)`, `w = sigma_z(v)`.
fn pack(u: &BallPoint, v: &BallPoint) -> Vec<f64> {
    u.coords()
        .iter()
        .chain(v.coords())
        .flat_map(|c| [c.re, c.im])
        .collect()
}

fn unpack(x: &[f64], n: usize) -> Option<(BallPoint, BallPoint)> {
    let to = |s: &[f64]| {
        BallPoint::from_complex(s.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()).ok()
    };
    Some((to(&x[..2 * n])?, to(&x[2 * n..])?))
}

/// Points kept by the local polish: the best few samples of a sweep.
const POLISH_STARTS: usize = 8;
const POLISH_MIN_STEP: f64 = 1e-7;
const POLISH_MAX_EVALS: usize = 4000;
/// Partners closer than this in the chart are not used, so the difference
/// quotients stay clear of cancellation.
const MIN_CHART_RADIUS: f64 = 1e-6;

/// Minimum of `ratio(z, w)` over `z` in `Delta(center, r0)` and `w` in the
/// ball: `count` random draws, then compass search from the best few.
fn chart_min<F>(center: &BallPoint, r0: f64, count: usize, seed: u64, ratio: F) -> f64
where
    F: Fn(&BallPoint, &BallPoint) -> f64 + Sync,
{
    let n = center.dim();
    let objective = |x: &[f64]| -> f64 {
        match unpack(x, n) {
            Some((u, v)) if u.norm() < r0 && v.norm() >= MIN_CHART_RADIUS => {
                let z = mobius(center, &u);
                let r = ratio(&z, &mobius(&z, &v));
                if r.is_nan() {
                    f64::INFINITY
                } else {
                    r
                }
            }
            _ => f64::INFINITY,
        }
    };
    let mut draws: Vec<(f64, Vec<f64>)> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::stream(seed, i);
            let u = uniform_in(n, r0, &mut g);
            let z = mobius(center, &u);
            let x = pack(&u, &partner_chart(&z, i, &mut g));
            (objective(&x), x)
        })
        .collect();
    draws.sort_by(|a, b| a.0.total_cmp(&b.0));
    draws.truncate(POLISH_STARTS);
    draws
        .into_par_iter()
        .map(|(f0, x0)| compass_search(&objective, x0, f0))
        .reduce(|| f64::INFINITY, f64::min)
}

fn compass_search(f: &(impl Fn(&[f64]) -> f64 + Sync), mut x: Vec<f64>, mut fx: f64) -> f64 {
    let mut step = 0.05;
    let mut evals = 0;
    while step > POLISH_MIN_STEP && evals < POLISH_MAX_EVALS {
        let mut improved = false;
        for k in 0..x.len() {
            for sgn in [1.0, -1.0] {
                let mut y = x.clone();
                y[k] += sgn * step;
                let fy = f(&y);
                evals += 1;
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    fx
}

fn direction(n: usize, seed: u64, k: u64) -> CVec {
    rng::unit_sphere(n, &mut rng::stream(seed, k))
}

/// `sum_j ||f_{a,j}||_{A^p_alpha}` for `a = (1 - gap) e`, per gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSumProfile {
    pub gaps: Vec<f64>,
    pub sums: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// max / min of `sums`.
    pub spread: f64,
}

/// Norms are estimated on the `nu_alpha` sample pushed through `sigma_a`,
/// which concentrates atoms where the test functions peak.
pub fn test_fn_norm_sums(
    n: usize,
    params: &TestFnParams,
    gaps: &[f64],
    samples: usize,
    seed: u64,
) -> Result<NormSumProfile> {
    let wp = WeightParams::new(n, params.alpha)?;
    let base = sample_nu_alpha(&wp, samples, rng::derive_seed(seed, 1))?;
    let dir = direction(n, rng::derive_seed(seed, 2), 0);
    let mut sums = Vec::new();
    let mut errs = Vec::new();
    for &gap in gaps {
        let a = BallPoint::from_direction_gap(&dir, gap)?;
        let local = recenter(&base, &a, &wp);
        let mut total = 0.0;
        let mut se = 0.0;
        for j in 0..=n {
            let e = apalpha_norm(&test_fn(&a, j, params)?, params.p, &local)?;
            total += e.value;
            se += e.std_error;
        }
        sums.push(total);
        errs.push(se);
    }
    let max = sums.iter().copied().fold(f64::MIN, f64::max);
    let min = sums.iter().copied().fold(f64::MAX, f64::min);
    Ok(NormSumProfile {
        gaps: gaps.to_vec(),
        sums,
        std_errors: errs,
        spread: max / min,
    })
}

/// Minimum over sampled `(a, z, w)` of
/// `sum_j |f_{a,j}(z) - f_{a,j}(w)| / (rho(z, w) |f_{a,0}(z)|)`, with `a` on
/// the given gaps along `directions` random directions, `z` in `Delta(a, r0)`
/// and `w` in the ball. The first `count` draws per `a` do not depend on
/// `count`, so larger counts refine smaller ones; the best draws are then
/// polished by a local search.
pub fn test_fn_min_ratio(
    n: usize,
    params: &TestFnParams,
    gaps: &[f64],
    directions: usize,
    count: usize,
    seed: u64,
) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for (gi, &gap) in gaps.iter().enumerate() {
        for k in 0..directions as u64 {
            let a = BallPoint::from_direction_gap(&direction(n, seed, k), gap)?;
            let fs = (0..=n)
                .map(|j| test_fn(&a, j, params))
                .collect::<Result<Vec<AnalyticFn>>>()?;
            let s = rng::derive_seed(seed, 1000 * (gi as u64 + 1) + k);
            let m = chart_min(&a, params.r0, count, s, |z, w| {
                let num: f64 = fs.iter().map(|f| (f.eval(z) - f.eval(w)).norm()).sum();
                num / (rho(z, w) * fs[0].eval(z).norm())
            });
            worst = worst.min(m);
        }
    }
    Ok(worst)
}

/// Minimum over sampled `(t, a, b)` of
/// `(|K_1(a) - K_1(b)| + sum_j |K_j^N(a) - K_j^N(b)|) / (rho(a, b) |K_1(a)|)`
/// where `K_1(x) = (1 - <x, t_1>)^(-s)`, `K_j^N(x) = (1 - t_N <x, t_j>)^(-s)`,
/// `1 - t` ranges over `gaps`, `a` over `Delta(t e_1, r0)` and `b` over the ball.
pub fn kernel_min_ratio(
    n: usize,
    s: f64,
    r0: f64,
    big_n: f64,
    gaps: &[f64],
    count: usize,
    seed: u64,
) -> Result<f64> {
    check_range("s", s, s > 1.0, "s must exceed 1")?;
    check_range("r0", r0, r0 > 0.0 && r0 < 1.0, "(0, 1)")?;
    let mut worst = f64::INFINITY;
    for (gi, &gap) in gaps.iter().enumerate() {
        check_range(
            "1 - t",
            gap,
            gap > 0.0 && gap < 0.5 / big_n,
            "1 - t < 1/(2N)",
        )?;
        let (pts, t_n) = special_points(1.0 - gap, big_n, n)?;
        let k1 = KernelPower::at(&pts[0], s, 1.0, 1.0)?;
        let kj = pts
            .iter()
            .map(|p| KernelPower::at(p, s, 1.0, t_n))
            .collect::<Result<Vec<_>>>()?;
        let seed_g = rng::derive_seed(seed, gi as u64);
        let m = chart_min(&pts[0], r0, count, seed_g, |a, b| {
            let ka = k1.eval(a);
            let num = (ka - k1.eval(b)).norm()
                + kj.iter()
                    .map(|k| (k.eval(a) - k.eval(b)).norm())
                    .sum::<f64>();
            num / (rho(a, b) * ka.norm())
        });
        worst = worst.min(m);
    }
    Ok(worst)
}

/// Configuration of the local-oscillation sweep over normalized monomials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalSweep {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    /// Radius of the inner ball containing `z`.
    pub s: f64,
    /// Radius of the ball the local integral runs over.
    pub r: f64,
    pub max_degree: u32,
    pub directions: usize,
    pub points_per_center: usize,
    pub local_samples: usize,
}

/// Supremum over sampled `a` (norms in `radii`), `z` in `Delta(a, s)` and
/// normalized monomials `f` of
/// `|f(z) - f(a)|^q (1 - |a|^2)^((n+1+alpha) q/p) / (rho(z, a)^q int_{Delta(a,r)} |f|^p d nu_alpha)`.
pub fn local_oscillation_sup(cfg: &LocalSweep, radii: &[f64], seed: u64) -> Result<f64> {
    check_range("s", cfg.s, cfg.s > 0.0 && cfg.s < cfg.r, "0 < s < r")?;
    check_range("r", cfg.r, cfg.r < 1.0, "r < 1")?;
    let wp = WeightParams::new(cfg.n, cfg.alpha)?;
    let base = sample_nu_alpha(&wp, cfg.local_samples, rng::derive_seed(seed, 1))?;
    let dict = normalized_monomials(cfg.n, cfg.max_degree, cfg.p, cfg.alpha);
    let order = wp.order();
    let mut sup: f64 = 0.0;
    for (ri, &radius) in radii.iter().enumerate() {
        for k in 0..cfg.directions as u64 {
            let a = on_ray(&direction(cfg.n, rng::derive_seed(seed, 2), k), radius);
            let local = recenter_within(&base, &a, &wp, cfg.r);
            let pts_seed = rng::derive_seed(seed, 100 + 1000 * ri as u64 + k);
            let zs: Vec<BallPoint> = (0..cfg.points_per_center as u64)
                .map(|i| near(&a, cfg.s, &mut rng::stream(pts_seed, i)))
                .collect();
            let weight = a.one_minus_norm_sqr().powf(order * cfg.q / cfg.p);
            for f in &dict {
                let terms: Vec<f64> = local
                    .iter()
                    .map(|(w, m)| m * f.eval(w).norm().powf(cfg.p))
                    .collect();
                let integral = pairwise_sum(&terms);
                let fa = f.eval(&a);
                let m = zs
                    .par_iter()
                    .map(|z| {
                        let d = rho(z, &a);
                        (f.eval(z) - fa).norm().powf(cfg.q) * weight / (d.powf(cfg.q) * integral)
                    })
                    .reduce(|| 0.0, f64::max);
                sup = sup.max(m);
            }
        }
    }
    Ok(sup)
}
