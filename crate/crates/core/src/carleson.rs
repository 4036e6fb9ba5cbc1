//! Carleson-measure quantities of a discrete measure: pseudo-ball averages,
//! Berezin-type integrals, their boundary shell profiles, and the averaging
//! norms used when `lambda < 1`.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::geometry::{one_minus_inner, rho, BallPoint};
use crate::lattice::Lattice;
use crate::measure::{
    ball_mass, integrate, integrate_values, pairwise_sum, DiscreteMeasure, IntegralEstimate,
};
use crate::supgrid::{shell_profile, SupEstimate, SupGrid};

pub use crate::supgrid::ShellProfile;

/// `|1 - <z, a>|` is floored here before exponentiation.
pub const DENOMINATOR_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionParams {
    pub n: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub r: f64,
    /// Free exponent of the Berezin-type kernels.
    pub s_exp: f64,
}

impl CriterionParams {
    /// `s_exp` defaults to `n + 1 + alpha`.
    pub fn new(n: usize, lambda: f64, alpha: f64, r: f64) -> Result<Self> {
        let p = CriterionParams {
            n,
            lambda,
            alpha,
            r,
            s_exp: n as f64 + 1.0 + alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_s_exp(mut self, s_exp: f64) -> Result<Self> {
        self.s_exp = s_exp;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("n", self.n as f64, self.n >= 1, "n >= 1")?;
        check_range(
            "lambda",
            self.lambda,
            self.lambda > 0.0,
            "lambda must be positive",
        )?;
        check_range(
            "alpha",
            self.alpha,
            self.alpha > -1.0,
            "alpha must exceed -1",
        )?;
        check_range(
            "r",
            self.r,
            self.r > 0.0 && self.r < 1.0,
            "r must lie in (0, 1)",
        )?;
        check_range(
            "s_exp",
            self.s_exp,
            self.s_exp > 0.0,
            "s_exp must be positive",
        )
    }

    /// `n + 1 + alpha`.
    pub fn order(&self) -> f64 {
        self.n as f64 + 1.0 + self.alpha
    }
}

fn check_dim(mu: &DiscreteMeasure, params: &CriterionParams) -> Result<()> {
    if mu.dim() != params.n {
        return Err(Error::DimensionMismatch {
            left: params.n,
            right: mu.dim(),
        });
    }
    Ok(())
}

/// `mu(Delta(a, r)) / (1 - |a|^2)^((n+1+alpha) lambda)`.
pub fn ball_value(mu: &DiscreteMeasure, params: &CriterionParams, a: &BallPoint) -> f64 {
    ball_mass(mu, a, params.r) / a.one_minus_norm_sqr().powf(params.order() * params.lambda)
}

/// Supremum of [`ball_value`] over the grid.
pub fn ball_quantity(
    mu: &DiscreteMeasure,
    params: &CriterionParams,
    grid: &SupGrid,
) -> Result<SupEstimate> {
    check_dim(mu, params)?;
    grid.sup(params.n, |a| Ok(ball_value(mu, params, a)))
}

/// Value of a Berezin-type integral with the number of floored denominators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Floored {
    pub value: f64,
    pub floor_events: usize,
}

/// `sum_i w_i (1-|a|^2)^s_exp / |1 - <z_i, a>|^exponent`, denominators floored.
fn kernel_sum(mu: &DiscreteMeasure, a: &BallPoint, s_exp: f64, exponent: f64) -> Result<Floored> {
    let lead = a.one_minus_norm_sqr().powf(s_exp);
    let mut floors = 0;
    let terms: Vec<f64> = mu
        .iter()
        .map(|(z, w)| {
            let mut d = one_minus_inner(z, a).norm();
            if d < DENOMINATOR_FLOOR {
                d = DENOMINATOR_FLOOR;
                floors += 1;
            }
            w * lead / d.powf(exponent)
        })
        .collect();
    if let Some(i) = terms.iter().position(|t| !t.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    Ok(Floored {
        value: pairwise_sum(&terms),
        floor_events: floors,
    })
}

/// `int (1-|a|^2)^s_exp / |1 - <z, a>|^((n+1+alpha) lambda + s_exp) d mu(z)`.
pub fn berezin_value(
    mu: &DiscreteMeasure,
    params: &CriterionParams,
    a: &BallPoint,
) -> Result<Floored> {
    check_dim(mu, params)?;
    kernel_sum(
        mu,
        a,
        params.s_exp,
        params.order() * params.lambda + params.s_exp,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerezinSup {
    pub sup: SupEstimate,
    pub floor_events: usize,
}

pub fn berezin_sup(
    mu: &DiscreteMeasure,
    params: &CriterionParams,
    grid: &SupGrid,
) -> Result<BerezinSup> {
    check_dim(mu, params)?;
    let floors = AtomicUsize::new(0);
    let sup = grid.sup(params.n, |a| {
        let v = berezin_value(mu, params, a)?;
        floors.fetch_add(v.floor_events, Ordering::Relaxed);
        Ok(v.value)
    })?;
    Ok(BerezinSup {
        sup,
        floor_events: floors.into_inner(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Ball,
    Berezin,
}

/// Per-shell suprema of the ball or Berezin quantity.
pub fn vanishing_profile(
    mu: &DiscreteMeasure,
    params: &CriterionParams,
    gaps: &[f64],
    directions: usize,
    kind: ProfileKind,
    tail_shells: usize,
) -> Result<ShellProfile> {
    check_dim(mu, params)?;
    shell_profile(params.n, gaps, directions, tail_shells, |a| match kind {
        ProfileKind::Ball => Ok(ball_value(mu, params, a)),
        ProfileKind::Berezin => Ok(berezin_value(mu, params, a)?.value),
    })
}

/// `p / (p - q)`, failing unless `0 < q < p`.
pub fn averaging_exponent(p: f64, q: f64) -> Result<f64> {
    check_range("p", p, p > 0.0, "p must be positive")?;
    check_range("q", q, q > 0.0 && q < p, "requires 0 < q < p")?;
    Ok(p / (p - q))
}

fn lt_norm(est: IntegralEstimate, t: f64) -> IntegralEstimate {
    est.root(t)
}

/// `|| z -> mu(Delta(z, r)) / (1-|z|^2)^(n+1+alpha) ||` in `L^(p/(p-q))(nu_alpha)`.
pub fn muhat_lt(
    mu: &DiscreteMeasure,
    params: &CriterionParams,
    p: f64,
    q: f64,
    nu_sample: &DiscreteMeasure,
) -> Result<IntegralEstimate> {
    let t = averaging_exponent(p, q)?;
    check_dim(mu, params)?;
    check_dim(nu_sample, params)?;
    let order = params.order();
    let est = integrate(
        |z| (ball_mass(mu, z, params.r) / z.one_minus_norm_sqr().powf(order)).powf(t),
        nu_sample,
    )?;
    Ok(lt_norm(est, t))
}

/// `l^(p/(p-q))` norm of `mu(Delta(a_k, r)) / (1-|a_k|^2)^((n+1+alpha) q/p)`.
pub fn lattice_seq_norm(
    mu: &DiscreteMeasure,
    lattice: &Lattice,
    params: &CriterionParams,
    p: f64,
    q: f64,
) -> Result<f64> {
    let t = averaging_exponent(p, q)?;
    check_dim(mu, params)?;
    if lattice.n != params.n {
        return Err(Error::DimensionMismatch {
            left: params.n,
            right: lattice.n,
        });
    }
    let expo = params.order() * q / p;
    let terms: Vec<f64> = lattice
        .centers
        .par_iter()
        .map(|a| (ball_mass(mu, a, params.r) / a.one_minus_norm_sqr().powf(expo)).powf(t))
        .collect();
    Ok(pairwise_sum(&terms).powf(1.0 / t))
}

/// `|| z -> int (1-|z|^2)^s_exp / |1 - <z, w>|^(n+1+alpha+s_exp) d mu(w) ||`
/// in `L^(p/(p-q))(nu_alpha)`.
pub fn berezin_lt(
    mu: &DiscreteMeasure,
    params: &CriterionParams,
    p: f64,
    q: f64,
    nu_sample: &DiscreteMeasure,
) -> Result<IntegralEstimate> {
    let t = averaging_exponent(p, q)?;
    check_dim(mu, params)?;
    check_dim(nu_sample, params)?;
    let expo = params.order() + params.s_exp;
    let vals = nu_sample
        .points()
        .par_iter()
        .map(|z| Ok(kernel_sum(mu, z, params.s_exp, expo)?.value.powf(t)))
        .collect::<Result<Vec<f64>>>()?;
    let est = integrate_values(&vals, nu_sample)?;
    Ok(lt_norm(est, t))
}

/// Everything computed by [`carleson_report`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlesonReport {
    pub params: CriterionParams,
    pub ball_quantity: f64,
    pub ball_argmax: BallPoint,
    pub berezin_sup: f64,
    pub berezin_argmax: BallPoint,
    pub floor_events: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice_seq_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub muhat_lt: Option<IntegralEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub berezin_lt: Option<IntegralEstimate>,
    /// `None` marks a ratio with a zero denominator.
    pub ratios: BTreeMap<String, Option<f64>>,
    pub ball_profile: ShellProfile,
    pub berezin_profile: ShellProfile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlesonConfig {
    pub params: CriterionParams,
    pub grid: SupGrid,
    pub profile_gaps: Vec<f64>,
    pub profile_directions: usize,
    pub tail_shells: usize,
    /// `(p, q)` with `q < p` enables the averaging quantities.
    pub exponents: Option<(f64, f64)>,
}

pub fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0 && num.is_finite() && den.is_finite()).then(|| num / den)
}

pub fn carleson_report(
    mu: &DiscreteMeasure,
    cfg: &CarlesonConfig,
    lattice: Option<&Lattice>,
    nu_sample: Option<&DiscreteMeasure>,
) -> Result<CarlesonReport> {
    let params = &cfg.params;
    let ball = ball_quantity(mu, params, &cfg.grid)?;
    let bz = berezin_sup(mu, params, &cfg.grid)?;
    let ball_profile = vanishing_profile(
        mu,
        params,
        &cfg.profile_gaps,
        cfg.profile_directions,
        ProfileKind::Ball,
        cfg.tail_shells,
    )?;
    let berezin_profile = vanishing_profile(
        mu,
        params,
        &cfg.profile_gaps,
        cfg.profile_directions,
        ProfileKind::Berezin,
        cfg.tail_shells,
    )?;
    let mut named = vec![
        ("ball_quantity".to_string(), ball.value),
        ("berezin_sup".to_string(), bz.sup.value),
    ];
    let (mut seq, mut mh, mut bl) = (None, None, None);
    if let Some((p, q)) = cfg.exponents {
        averaging_exponent(p, q)?;
        if let Some(lat) = lattice {
            let v = lattice_seq_norm(mu, lat, params, p, q)?;
            named.push(("lattice_seq_norm".into(), v));
            seq = Some(v);
        }
        if let Some(nu) = nu_sample {
            let m = muhat_lt(mu, params, p, q, nu)?;
            let b = berezin_lt(mu, params, p, q, nu)?;
            named.push(("muhat_lt".into(), m.value));
            named.push(("berezin_lt".into(), b.value));
            mh = Some(m);
            bl = Some(b);
        }
    }
    let mut ratios = BTreeMap::new();
    for (i, (na, va)) in named.iter().enumerate() {
        for (nb, vb) in &named[i + 1..] {
            ratios.insert(format!("{na}/{nb}"), ratio(*va, *vb));
        }
    }
    ratios.insert(
        "ball_tail/berezin_tail".into(),
        ratio(ball_profile.tail_estimate, berezin_profile.tail_estimate),
    );
    Ok(CarlesonReport {
        params: params.clone(),
        ball_quantity: ball.value,
        ball_argmax: ball.argmax,
        berezin_sup: bz.sup.value,
        berezin_argmax: bz.sup.argmax,
        floor_events: bz.floor_events,
        lattice_seq_norm: seq,
        muhat_lt: mh,
        berezin_lt: bl,
        ratios,
        ball_profile,
        berezin_profile,
    })
}

/// Smallest `|a|` beyond which `Delta(a, r)` misses the closed ball of radius
/// `support`: `(support + r) / (1 + support r)`.
pub fn disjoint_threshold(support: f64, r: f64) -> f64 {
    (support + r) / (1.0 + support * r)
}

/// True when every atom of `mu` is at pseudo-hyperbolic distance at least `r`
/// from `a`.
pub fn misses(mu: &DiscreteMeasure, a: &BallPoint, r: f64) -> bool {
    mu.points().iter().all(|z| rho(z, a) >= r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CVec;
    use crate::lattice::build_lattice;
    use crate::measure::{sample_nu_alpha, WeightParams};
    use crate::supgrid::dyadic_gaps;

    fn point_mass_0(n: usize) -> DiscreteMeasure {
        DiscreteMeasure::point_mass(BallPoint::origin(n), 1.0).unwrap()
    }

    #[test]
    fn ball_quantity_point_mass() {
        let p = CriterionParams::new(1, 1.0, 0.0, 0.5).unwrap();
        let est = ball_quantity(&point_mass_0(1), &p, &SupGrid::default()).unwrap();
        assert!(
            (est.value - 16.0 / 9.0).abs() / (16.0 / 9.0) < 0.02,
            "{est:?}"
        );
        // oracle: 1-dim sweep of (1 - x^2)^-2 over x < 0.5
        let oracle = (0..100_000)
            .map(|i| 0.5 * i as f64 / 100_000.0)
            .map(|x| (1.0 - x * x).powi(-2))
            .fold(0.0, f64::max);
        assert!((est.value - oracle).abs() < 1e-4);
        let zero = DiscreteMeasure::zero(1);
        assert_eq!(
            ball_quantity(&zero, &p, &SupGrid::default()).unwrap().value,
            0.0
        );
    }

    #[test]
    fn berezin_examples() {
        let p = CriterionParams::new(2, 1.5, 0.5, 0.5).unwrap();
        let mu = sample_nu_alpha(&WeightParams::new(2, 0.5).unwrap(), 5000, 3).unwrap();
        let v = berezin_value(&mu, &p, &BallPoint::origin(2)).unwrap();
        assert!((v.value - mu.total()).abs() < 1e-15);
        let a = BallPoint::from_real(&[0.3, -0.4]).unwrap();
        let pm = berezin_value(&point_mass_0(2), &p, &a).unwrap();
        assert!((pm.value - a.one_minus_norm_sqr().powf(p.s_exp)).abs() < 1e-15);
        let s = berezin_sup(&point_mass_0(2), &p, &SupGrid::default()).unwrap();
        assert_eq!(s.sup.value, 1.0);
        let scaled = mu.scaled(3.0).unwrap();
        let b1 = berezin_sup(&mu, &p, &SupGrid::default()).unwrap().sup.value;
        let b3 = berezin_sup(&scaled, &p, &SupGrid::default())
            .unwrap()
            .sup
            .value;
        assert!((b3 / b1 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn floor_events_are_counted() {
        let a = BallPoint::from_direction_gap(&CVec::basis(1, 0), 1e-15).unwrap();
        let mu = DiscreteMeasure::point_mass(a.clone(), 1.0).unwrap();
        let p = CriterionParams::new(1, 1.0, 0.0, 0.5).unwrap();
        let v = berezin_value(&mu, &p, &a).unwrap();
        assert_eq!(v.floor_events, 1);
        assert!(v.value.is_finite());
    }

    #[test]
    fn compact_support_profile_vanishes() {
        let mu = sample_nu_alpha(&WeightParams::new(1, 0.0).unwrap(), 4000, 5).unwrap();
        let inner: Vec<BallPoint> = mu
            .points()
            .iter()
            .filter(|z| z.norm() < 0.5)
            .cloned()
            .collect();
        let k = inner.len();
        let mu = DiscreteMeasure::new(1, inner, vec![1.0 / k as f64; k]).unwrap();
        let p = CriterionParams::new(1, 1.0, 0.0, 0.5).unwrap();
        let gaps = dyadic_gaps(8);
        let ball = vanishing_profile(&mu, &p, &gaps, 32, ProfileKind::Ball, 3).unwrap();
        let thr = disjoint_threshold(0.5, 0.5);
        for (g, v) in ball.shell_gaps.iter().zip(&ball.values) {
            if 1.0 - g > thr {
                assert_eq!(*v, 0.0);
            }
        }
        assert_eq!(ball.tail_estimate, 0.0);
        let bz = vanishing_profile(&mu, &p, &gaps, 32, ProfileKind::Berezin, 3).unwrap();
        assert!(bz.values.windows(2).skip(2).all(|w| w[1] < w[0]));
        let peak = bz.values.iter().copied().fold(0.0, f64::max);
        assert!(bz.tail_estimate < 0.05 * peak, "{bz:?}");
    }

    #[test]
    fn berezin_lt_point_mass_oracle() {
        let p = CriterionParams::new(1, 0.5, 0.0, 0.5).unwrap();
        assert_eq!(p.s_exp, 2.0);
        let nu = sample_nu_alpha(&WeightParams::new(1, 0.0).unwrap(), 200_000, 11).unwrap();
        let e = berezin_lt(&point_mass_0(1), &p, 2.0, 1.0, &nu).unwrap();
        assert!(e.within_sigma(0.2f64.sqrt(), 3.0), "{e:?}");
        assert!((e.value / 0.2f64.sqrt() - 1.0).abs() < 0.02);
        assert!(berezin_lt(&point_mass_0(1), &p, 1.0, 1.0, &nu).is_err());
    }

    #[test]
    fn muhat_disk_oracle() {
        // mu = nu_0 sample; disk mass of Delta(z, r) is the nu_0-area of a disk
        // of center c and radius t r (in units where nu_0(D) = 1): (t r)^2
        let p = CriterionParams::new(1, 0.5, 0.0, 0.5).unwrap();
        let w = WeightParams::new(1, 0.0).unwrap();
        let mu = sample_nu_alpha(&w, 20_000, 12).unwrap();
        let nu = sample_nu_alpha(&w, 2000, 13).unwrap();
        let e = muhat_lt(&mu, &p, 2.0, 1.0, &nu).unwrap();
        let exact = integrate(
            |z| {
                let x = z.one_minus_norm_sqr();
                let t = x / (1.0 - 0.25 * (1.0 - x));
                ((t * 0.5).powi(2) / x.powi(2)).powi(2)
            },
            &nu,
        )
        .unwrap()
        .root(2.0);
        let sigma = e.std_error.hypot(exact.std_error);
        assert!(
            (e.value - exact.value).abs() < 3.0 * sigma + 0.02 * exact.value,
            "{e:?} {exact:?}"
        );
        assert_eq!(
            muhat_lt(&DiscreteMeasure::zero(1), &p, 2.0, 1.0, &nu)
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn lattice_norm_examples() {
        let p = CriterionParams::new(1, 0.5, 0.0, 0.5).unwrap();
        let lat = build_lattice(1, 0.5, 0.8, 1).unwrap();
        assert_eq!(
            lattice_seq_norm(&DiscreteMeasure::zero(1), &lat, &p, 2.0, 1.0).unwrap(),
            0.0
        );
        let v = lattice_seq_norm(&point_mass_0(1), &lat, &p, 2.0, 1.0).unwrap();
        assert!(v > 0.0 && v.is_finite());
        assert!(lattice_seq_norm(&point_mass_0(1), &lat, &p, 1.0, 2.0).is_err());
    }
}
