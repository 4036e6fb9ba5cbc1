//! Weighted volume measures `nu_alpha`, discrete measures and Monte Carlo
//! integration.

use std::io;
use std::path::Path;

use num_complex::Complex64;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::geometry::{mobius, one_minus_inner, rho, BallPoint, CVec};
use crate::rng;
use crate::special::ln_gamma;

/// `Gamma(n+1+alpha) / (n! Gamma(alpha+1))`, the constant making `nu_alpha` a
/// probability measure.
pub fn normalizing_const(n: usize, alpha: f64) -> Result<f64> {
    check_range("n", n as f64, n >= 1, "n >= 1")?;
    check_range("alpha", alpha, alpha > -1.0, "alpha must exceed -1")?;
    let n = n as f64;
    Ok((ln_gamma(n + 1.0 + alpha) - ln_gamma(n + 1.0) - ln_gamma(alpha + 1.0)).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub n: usize,
    pub alpha: f64,
    pub c_alpha: f64,
}

impl WeightParams {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        Ok(WeightParams {
            n,
            alpha,
            c_alpha: normalizing_const(n, alpha)?,
        })
    }

    /// `n + 1 + alpha`, the homogeneity of `nu_alpha` near the sphere.
    pub fn order(&self) -> f64 {
        self.n as f64 + 1.0 + self.alpha
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate<T = f64> {
    pub value: T,
    pub std_error: f64,
    pub n_samples: usize,
}

impl IntegralEstimate<f64> {
    pub fn exact(value: f64, n_samples: usize) -> Self {
        IntegralEstimate {
            value,
            std_error: 0.0,
            n_samples: n_samples.max(1),
        }
    }

    /// `|value - target| <= k * std_error`.
    pub fn within_sigma(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }

    /// The estimate of `value^(1/p)` with a first-order propagated error.
    pub fn root(&self, p: f64) -> Self {
        if self.value <= 0.0 {
            return IntegralEstimate {
                value: 0.0,
                std_error: if self.std_error > 0.0 {
                    self.std_error.powf(1.0 / p)
                } else {
                    0.0
                },
                n_samples: self.n_samples,
            };
        }
        let v = self.value.powf(1.0 / p);
        IntegralEstimate {
            value: v,
            std_error: v / p * self.std_error / self.value,
            n_samples: self.n_samples,
        }
    }
}

/// Weighted point cloud standing in for a positive Borel measure on the ball.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<BallPoint>,
    weights: Vec<f64>,
    total: f64,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, points: Vec<BallPoint>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::Invalid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: p.dim(),
            });
        }
        if let Some(i) = weights.iter().position(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::OutOfRange {
                name: "weight",
                value: weights[i],
                expected: "finite and nonnegative",
            });
        }
        let total = pairwise_sum(&weights);
        Ok(DiscreteMeasure {
            dim,
            points,
            weights,
            total,
        })
    }

    pub fn zero(dim: usize) -> Self {
        DiscreteMeasure {
            dim,
            points: Vec::new(),
            weights: Vec::new(),
            total: 0.0,
        }
    }

    pub fn point_mass(point: BallPoint, mass: f64) -> Result<Self> {
        DiscreteMeasure::new(point.dim(), vec![point], vec![mass])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[BallPoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BallPoint, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        DiscreteMeasure::new(
            self.dim,
            self.points.clone(),
            self.weights.iter().map(|w| w * c).collect(),
        )
    }

    pub fn with_atom(&self, point: BallPoint, weight: f64) -> Result<Self> {
        let mut points = self.points.clone();
        let mut weights = self.weights.clone();
        points.push(point);
        weights.push(weight);
        DiscreteMeasure::new(self.dim, points, weights)
    }

    /// Restriction to `{ |z| >= radius }`.
    pub fn outside_radius(&self, radius: f64) -> Self {
        let (points, weights): (Vec<_>, Vec<_>) = self
            .iter()
            .filter(|(p, _)| p.norm() >= radius)
            .map(|(p, w)| (p.clone(), w))
            .unzip();
        DiscreteMeasure::new(self.dim, points, weights).expect("subset of a valid measure")
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = Vec::with_capacity(2 * self.dim + 1);
        for k in 1..=self.dim {
            header.push(format!("z{k}_re"));
            header.push(format!("z{k}_im"));
        }
        header.push("weight".to_string());
        wtr.write_record(&header)?;
        for (p, w) in self.iter() {
            let mut row = Vec::with_capacity(2 * self.dim + 1);
            for c in p.coords() {
                row.push(fmt17(c.re));
                row.push(fmt17(c.im));
            }
            row.push(fmt17(w));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let cols = rdr.headers()?.len();
        if cols < 3 || cols % 2 == 0 {
            return Err(Error::Invalid(format!(
                "expected 2n coordinate columns plus a weight column, found {cols} columns"
            )));
        }
        let dim = (cols - 1) / 2;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Invalid(format!("bad number {s:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let coords = (0..dim)
                .map(|k| Complex64::new(vals[2 * k], vals[2 * k + 1]))
                .collect();
            points.push(BallPoint::from_complex(coords)?);
            weights.push(vals[2 * dim]);
        }
        DiscreteMeasure::new(dim, points, weights)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        DiscreteMeasure::read_csv(std::fs::File::open(path)?)
    }
}

/// Seventeen significant digits, enough for an exact `f64` round trip.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Fixed-tree pairwise summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Draws `count` independent points from `nu_alpha`, each with weight `1/count`.
///
/// Direction is uniform on the sphere and `|z|^2 ~ Beta(n, alpha + 1)`, built
/// from two Gamma variates so the boundary gap comes out without cancellation.
pub fn sample_nu_alpha(params: &WeightParams, count: usize, seed: u64) -> Result<DiscreteMeasure> {
    check_range(
        "alpha",
        params.alpha,
        params.alpha > -1.0,
        "alpha must exceed -1",
    )?;
    if count == 0 {
        return Err(Error::Empty("sample size must be at least 1"));
    }
    let n = params.n;
    let radial = Gamma::new(n as f64, 1.0).map_err(|e| Error::Invalid(e.to_string()))?;
    let slack = Gamma::new(params.alpha + 1.0, 1.0).map_err(|e| Error::Invalid(e.to_string()))?;
    let points: Vec<BallPoint> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i);
            let dir = rng::unit_sphere(n, &mut rng);
            let g1: f64 = radial.sample(&mut rng);
            let g2: f64 = slack.sample(&mut rng);
            let u = g1 / (g1 + g2);
            let one_minus_u = g2 / (g1 + g2);
            let gap = (one_minus_u / (1.0 + u.sqrt())).max(f64::EPSILON);
            BallPoint::from_parts(dir.scale_real(1.0 - gap), gap)
        })
        .collect();
    let w = 1.0 / count as f64;
    Ok(DiscreteMeasure {
        dim: n,
        points,
        weights: vec![w; count],
        total: 1.0,
    })
}

/// Uniform points of the Euclidean ball of radius `radius`, for test sweeps.
pub fn sample_uniform_ball(n: usize, radius: f64, count: usize, seed: u64) -> Vec<BallPoint> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i);
            let dir = rng::unit_sphere(n, &mut rng);
            let u: f64 = rand::Rng::random(&mut rng);
            let r = radius * u.powf(0.5 / n as f64);
            BallPoint::from_parts(dir.scale_real(r), 1.0 - r)
        })
        .collect()
}

/// Treats each atom's contribution `w_i f_i` as one draw of `value / N`.
///
/// With equal weights this is the usual unbiased standard error of the mean;
/// with importance weights (see [`recenter`]) it also accounts for the spread
/// of the weights themselves.
fn weighted_stats(values: &[f64], weights: &[f64]) -> IntegralEstimate {
    let n = values.len();
    let terms: Vec<f64> = values.iter().zip(weights).map(|(f, w)| f * w).collect();
    let value = pairwise_sum(&terms);
    if n <= 1 {
        return IntegralEstimate {
            value,
            std_error: 0.0,
            n_samples: n.max(1),
        };
    }
    let share = value / n as f64;
    let dev: Vec<f64> = terms.iter().map(|c| (c - share) * (c - share)).collect();
    let var = pairwise_sum(&dev) * n as f64 / (n as f64 - 1.0);
    IntegralEstimate {
        value,
        std_error: var.max(0.0).sqrt(),
        n_samples: n,
    }
}

/// `sum_i w_i f_i` for values and weights given directly, with the same
/// standard error as [`integrate`].
pub fn weighted_estimate(values: &[f64], weights: &[f64]) -> Result<IntegralEstimate> {
    assert_eq!(values.len(), weights.len(), "one weight per value");
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    Ok(weighted_stats(values, weights))
}

/// `sum_i w_i f(z_i)` with the unbiased weighted standard error.
pub fn integrate<F>(f: F, mu: &DiscreteMeasure) -> Result<IntegralEstimate>
where
    F: Fn(&BallPoint) -> f64 + Sync,
{
    let values: Vec<f64> = mu.points.par_iter().map(&f).collect();
    integrate_values(&values, mu)
}

/// As [`integrate`] with the integrand already evaluated at every atom.
pub fn integrate_values(values: &[f64], mu: &DiscreteMeasure) -> Result<IntegralEstimate> {
    assert_eq!(values.len(), mu.len(), "one value per atom");
    weighted_estimate(values, &mu.weights)
}

/// Complex-valued variant of [`integrate`]; the error uses `|f - mean|^2`.
pub fn integrate_complex<F>(f: F, mu: &DiscreteMeasure) -> Result<IntegralEstimate<Complex64>>
where
    F: Fn(&BallPoint) -> Complex64 + Sync,
{
    let values: Vec<Complex64> = mu.points.par_iter().map(&f).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    let re: Vec<f64> = values.iter().map(|v| v.re).collect();
    let im: Vec<f64> = values.iter().map(|v| v.im).collect();
    let er = weighted_stats(&re, &mu.weights);
    let ei = weighted_stats(&im, &mu.weights);
    Ok(IntegralEstimate {
        value: Complex64::new(er.value, ei.value),
        std_error: er.std_error.hypot(ei.std_error),
        n_samples: er.n_samples,
    })
}

/// `mu(Delta(center, r))`.
pub fn ball_mass(mu: &DiscreteMeasure, center: &BallPoint, r: f64) -> f64 {
    assert!(r > 0.0 && r < 1.0, "radius must lie in (0, 1)");
    let masked: Vec<f64> = mu
        .points
        .iter()
        .zip(&mu.weights)
        .map(|(p, &w)| if rho(center, p) < r { w } else { 0.0 })
        .collect();
    pairwise_sum(&masked)
}

/// Real Jacobian factor of `sigma_a` against `nu_alpha`:
/// `(1-|a|^2)^(n+1+alpha) / |1 - <u, a>|^(2(n+1+alpha))`.
pub(crate) fn recenter_weight(u: &BallPoint, a: &BallPoint, order: f64) -> f64 {
    let oma = a.one_minus_norm_sqr();
    let d = one_minus_inner(u, a).norm_sqr();
    (oma / d).powf(order)
}

/// Pushes a `nu_alpha` sample through `sigma_a`, reweighting by the Jacobian so
/// that integrals against the result still estimate integrals against
/// `nu_alpha`. The atoms concentrate near `a`, which makes this the right
/// sample for functions peaked there.
pub fn recenter(sample: &DiscreteMeasure, a: &BallPoint, params: &WeightParams) -> DiscreteMeasure {
    recenter_within(sample, a, params, 1.0)
}

/// As [`recenter`] but keeps only atoms of `Delta(a, radius)`, so integrals
/// against the result estimate integrals of `nu_alpha` restricted to that ball.
pub fn recenter_within(
    sample: &DiscreteMeasure,
    a: &BallPoint,
    params: &WeightParams,
    radius: f64,
) -> DiscreteMeasure {
    assert_eq!(sample.dim, a.dim(), "dimension mismatch");
    let order = params.order();
    let atoms: Vec<Option<(BallPoint, f64)>> = sample
        .points
        .par_iter()
        .zip(sample.weights.par_iter())
        .map(|(u, &w)| {
            if radius < 1.0 && u.norm() >= radius {
                return None;
            }
            Some((mobius(a, u), w * recenter_weight(u, a, order)))
        })
        .collect();
    let (points, weights): (Vec<_>, Vec<_>) = atoms.into_iter().flatten().unzip();
    DiscreteMeasure::new(sample.dim, points, weights).expect("valid reweighting")
}

/// Equally weighted copy of a point list (for lattice export).
pub fn unit_weights(dim: usize, points: &[BallPoint]) -> DiscreteMeasure {
    DiscreteMeasure::new(dim, points.to_vec(), vec![1.0; points.len()]).expect("valid")
}

/// Points on a ray: `radius * direction`, with the gap computed as `1 - radius`.
pub fn on_ray(direction: &CVec, radius: f64) -> BallPoint {
    if radius == 0.0 {
        return BallPoint::origin(direction.dim());
    }
    BallPoint::from_direction_gap(direction, 1.0 - radius).expect("radius in [0, 1)")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nu(n: usize, alpha: f64, count: usize, seed: u64) -> DiscreteMeasure {
        sample_nu_alpha(&WeightParams::new(n, alpha).unwrap(), count, seed).unwrap()
    }

    #[test]
    fn normalizing_const_examples() {
        assert!((normalizing_const(1, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((normalizing_const(1, 1.0).unwrap() - 2.0).abs() < 2e-12);
        assert!((normalizing_const(2, 1.0).unwrap() - 3.0).abs() < 3e-12);
        assert!(normalizing_const(1, -1.0).is_err());
        assert!(normalizing_const(0, 0.0).is_err());
    }

    #[test]
    fn normalizing_const_matches_rising_factorial() {
        // Gamma(n+1+a) / (n! Gamma(a+1)) = prod_{k=1..n} (a + k) / k
        for n in 1..=6usize {
            for &a in &[-0.9, -0.5, 0.0, 0.3, 1.0, 2.5, 7.25] {
                let oracle: f64 = (1..=n).map(|k| (a + k as f64) / k as f64).product();
                let got = normalizing_const(n, a).unwrap();
                assert!((got - oracle).abs() <= 1e-12 * oracle, "n={n} a={a}");
            }
        }
    }

    #[test]
    fn total_mass_is_one() {
        for seed in 0..3 {
            let m = nu(2, 0.5, 777, seed);
            assert_eq!(m.total(), 1.0);
            assert_eq!(m.len(), 777);
        }
        assert!(sample_nu_alpha(&WeightParams::new(1, 0.0).unwrap(), 0, 1).is_err());
    }

    #[test]
    fn radial_moments() {
        for &(alpha, expected) in &[(0.0, 0.5), (1.0, 1.0 / 3.0)] {
            let m = nu(1, alpha, 40_000, 11);
            let est = integrate(|z| z.vec().norm_sqr(), &m).unwrap();
            assert!(est.within_sigma(expected, 3.0), "{est:?} vs {expected}");
        }
        let m = nu(1, 0.0, 40_000, 12);
        let est = integrate(|z| 1.0 - z.vec().norm_sqr(), &m).unwrap();
        assert!(est.within_sigma(0.5, 3.0));
    }

    #[test]
    fn gaps_are_consistent() {
        let m = nu(2, 1.0, 2000, 5);
        for p in m.points() {
            if p.norm() <= 0.999 {
                assert!(((1.0 - p.norm()) - p.gap()).abs() <= 1e-12 * p.gap());
            }
        }
    }

    #[test]
    fn constant_integrand() {
        let m = nu(1, 0.0, 100, 1);
        let est = integrate(|_| 1.0, &m).unwrap();
        assert!((est.value - 1.0).abs() < 1e-14);
        assert!(est.std_error < 1e-15);
        let single = DiscreteMeasure::point_mass(BallPoint::origin(1), 2.0).unwrap();
        let est = integrate(|z| z.norm() + 3.0, &single).unwrap();
        assert_eq!(est.value, 6.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.n_samples, 1);
    }

    #[test]
    fn non_finite_integrand_reports_index() {
        let m = nu(1, 0.0, 10, 1);
        let target = m.points()[4].clone();
        let err = integrate(|z| if *z == target { f64::NAN } else { 1.0 }, &m).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 4 }));
    }

    #[test]
    fn ball_mass_examples() {
        let pm = DiscreteMeasure::point_mass(BallPoint::origin(1), 0.7).unwrap();
        assert_eq!(ball_mass(&pm, &BallPoint::origin(1), 0.1), 0.7);

        let m = nu(1, 0.0, 100_000, 3);
        let hits = ball_mass(&m, &BallPoint::origin(1), 0.5);
        let sigma = (0.25f64 * 0.75 / 100_000.0).sqrt();
        assert!((hits - 0.25).abs() <= 3.0 * sigma);

        // Delta(0.8, 0.5) is a disk of radius R = r(1-|a|^2)/(1-r^2|a|^2)
        let big_r: f64 = 0.5 * 0.36 / 0.84;
        let expected = big_r * big_r;
        assert!((expected - 0.045918).abs() < 1e-6);
        let hits = ball_mass(&m, &BallPoint::from_real(&[0.8]).unwrap(), 0.5);
        let sigma = (expected * (1.0 - expected) / 100_000.0).sqrt();
        assert!(
            (hits - expected).abs() <= 3.0 * sigma,
            "{hits} vs {expected}"
        );
    }

    #[test]
    fn recentered_sample_preserves_integrals() {
        let params = WeightParams::new(1, 0.0).unwrap();
        let m = sample_nu_alpha(&params, 50_000, 9).unwrap();
        let a = BallPoint::from_real(&[0.6]).unwrap();
        let rc = recenter(&m, &a, &params);
        let est = integrate(|z| z.vec().norm_sqr(), &rc).unwrap();
        assert!(est.within_sigma(0.5, 3.0), "{est:?}");
        // nu_0(Delta(a, r)) = R^2 for the disk radius R above
        let big_r: f64 = 0.5 * (1.0 - 0.36) / (1.0 - 0.25 * 0.36);
        let local = recenter_within(&m, &a, &params, 0.5);
        let est = integrate(|_| 1.0, &local).unwrap();
        assert!(est.within_sigma(big_r * big_r, 3.0), "{est:?}");
    }

    #[test]
    fn pairwise_sum_is_accurate() {
        let xs = vec![0.1; 1000];
        assert!((pairwise_sum(&xs) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_measures_rejected() {
        let p = BallPoint::origin(1);
        assert!(DiscreteMeasure::new(1, vec![p.clone()], vec![]).is_err());
        assert!(DiscreteMeasure::new(1, vec![p.clone()], vec![-1.0]).is_err());
        assert!(DiscreteMeasure::new(2, vec![p], vec![1.0]).is_err());
    }
}
