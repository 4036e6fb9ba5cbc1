use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::geometry::{one_minus_inner, BallPoint, CVec};
use crate::linalg::CMatrix;
use crate::measure::{integrate, DiscreteMeasure, IntegralEstimate};
use crate::special::ln_gamma;

/// `scale / (1 - kappa <z, w>)^exponent` on the principal branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelDesc", into = "KernelDesc")]
pub struct KernelPower {
    w: CVec,
    exponent: f64,
    scale: f64,
    kappa: f64,
    /// `w` as a ball point when it lies inside, for the cancellation-free
    /// form `(1 - kappa) + kappa (1 - <z, w>)`.
    inside: Option<BallPoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct KernelDesc {
    w: CVec,
    exponent: f64,
    #[serde(default = "one")]
    scale: f64,
    #[serde(default = "one")]
    kappa: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<KernelDesc> for KernelPower {
    type Error = Error;
    fn try_from(d: KernelDesc) -> Result<Self> {
        KernelPower::new(d.w, d.exponent, d.scale, d.kappa)
    }
}

impl From<KernelPower> for KernelDesc {
    fn from(k: KernelPower) -> Self {
        KernelDesc {
            w: k.w,
            exponent: k.exponent,
            scale: k.scale,
            kappa: k.kappa,
        }
    }
}

impl KernelPower {
    pub fn new(w: CVec, exponent: f64, scale: f64, kappa: f64) -> Result<Self> {
        check_range("exponent", exponent, true, "finite")?;
        check_range("scale", scale, true, "finite")?;
        let reach = kappa.abs() * w.norm();
        check_range("kappa", kappa, reach < 1.0, "|kappa * w| < 1")?;
        let inside = BallPoint::new(w.clone()).ok();
        Ok(KernelPower {
            w,
            exponent,
            scale,
            kappa,
            inside,
        })
    }

    /// Kernel centred at a ball point, keeping its gap.
    pub fn at(w: &BallPoint, exponent: f64, scale: f64, kappa: f64) -> Result<Self> {
        let mut k = KernelPower::new(w.vec().clone(), exponent, scale, kappa)?;
        k.inside = Some(w.clone());
        Ok(k)
    }

    pub fn base(&self) -> &CVec {
        &self.w
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `1 - kappa <z, w>`; its real part is positive on the ball.
    pub fn denominator(&self, z: &BallPoint) -> Complex64 {
        match &self.inside {
            Some(w) if self.kappa > 0.0 && self.kappa <= 1.0 => {
                Complex64::new(1.0 - self.kappa, 0.0) + self.kappa * one_minus_inner(z, w)
            }
            _ => Complex64::new(1.0, 0.0) - self.kappa * z.vec().dot(&self.w),
        }
    }

    pub fn eval(&self, z: &BallPoint) -> Complex64 {
        let d = self.denominator(z);
        self.scale * (-self.exponent * d.ln()).exp()
    }
}

/// Parameters of the boundary test functions `f_{a,j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFnParams {
    pub p: f64,
    pub alpha: f64,
    pub delta: f64,
    #[serde(rename = "N")]
    pub big_n: f64,
    pub r0: f64,
}

pub const DEFAULT_N: f64 = 4.0;
pub const DEFAULT_R0: f64 = 0.5;

impl TestFnParams {
    /// Defaults `delta = max(1, p - n - alpha) + 1`, `N = 4`, `r0 = 0.5`.
    pub fn with_defaults(n: usize, p: f64, alpha: f64) -> Self {
        TestFnParams {
            p,
            alpha,
            delta: (p - n as f64 - alpha).max(1.0) + 1.0,
            big_n: DEFAULT_N,
            r0: DEFAULT_R0,
        }
    }

    /// `t = n + 1 + alpha + delta`.
    pub fn t(&self, n: usize) -> f64 {
        n as f64 + 1.0 + self.alpha + self.delta
    }

    /// Largest admissible boundary gap `1 - |a|`.
    pub fn max_gap(&self) -> f64 {
        1.0 / (2.0 * self.big_n)
    }

    fn check(&self, n: usize) -> Result<()> {
        check_range("p", self.p, self.p > 0.0, "p must be positive")?;
        check_range(
            "alpha",
            self.alpha,
            self.alpha > -1.0,
            "alpha must exceed -1",
        )?;
        check_range(
            "delta",
            self.delta,
            self.delta > 0.0,
            "delta must be positive",
        )?;
        check_range("N", self.big_n, self.big_n > 1.0, "N must exceed 1")?;
        check_range("r0", self.r0, self.r0 > 0.0 && self.r0 < 1.0, "(0, 1)")?;
        let t = self.t(n);
        check_range(
            "t",
            t,
            t > self.p,
            "t = n + 1 + alpha + delta must exceed p",
        )
    }
}

/// The test function `f_{a,j}` with its kernel precomputed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TestFnDesc", into = "TestFnDesc")]
pub struct TestFn {
    a: BallPoint,
    j: usize,
    params: TestFnParams,
    kernel: KernelPower,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TestFnDesc {
    a: BallPoint,
    j: usize,
    params: TestFnParams,
}

impl TryFrom<TestFnDesc> for TestFn {
    type Error = Error;
    fn try_from(d: TestFnDesc) -> Result<Self> {
        TestFn::new(&d.a, d.j, d.params)
    }
}

impl From<TestFn> for TestFnDesc {
    fn from(f: TestFn) -> Self {
        TestFnDesc {
            a: f.a,
            j: f.j,
            params: f.params,
        }
    }
}

impl TestFn {
    pub fn new(a: &BallPoint, j: usize, params: TestFnParams) -> Result<Self> {
        let n = a.dim();
        params.check(n)?;
        if j > n {
            return Err(Error::OutOfRange {
                name: "j",
                value: j as f64,
                expected: "0 <= j <= n",
            });
        }
        check_range(
            "|a|",
            a.norm(),
            a.gap() < params.max_gap(),
            "|a| > 1 - 1/(2N)",
        )?;
        let oma = a.one_minus_norm_sqr();
        let scale = oma.powf(params.delta / params.p);
        let exponent = params.t(n) / params.p;
        let kernel = if j == 0 {
            KernelPower::at(a, exponent, scale, 1.0)?
        } else {
            let kappa = 1.0 - params.big_n * a.gap();
            let base = if j == 1 {
                a.clone()
            } else {
                let u = unitary_to_axis(a)?;
                let img = u.adjoint().apply(&axis_point(a.norm(), oma, j, n));
                BallPoint::from_direction_gap(&img, a.gap())?
            };
            KernelPower::at(&base, exponent, scale, kappa)?
        };
        Ok(TestFn {
            a: a.clone(),
            j,
            params,
            kernel,
        })
    }

    pub fn a(&self) -> &BallPoint {
        &self.a
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn params(&self) -> &TestFnParams {
        &self.params
    }

    pub fn kernel(&self) -> &KernelPower {
        &self.kernel
    }
}

/// `|a|_j`: `|a| e_1` for `j = 1`, else `|a|^2 e_1 + |a| sqrt(1 - |a|^2) e_j`.
fn axis_point(norm: f64, one_minus_sq: f64, j: usize, n: usize) -> CVec {
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    if j <= 1 {
        v[0] = Complex64::new(norm, 0.0);
    } else {
        v[0] = Complex64::new(norm * norm, 0.0);
        v[j - 1] = Complex64::new(norm * one_minus_sq.sqrt(), 0.0);
    }
    CVec::new(v).expect("finite")
}

/// An analytic function on the ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AnalyticFn {
    Monomial {
        exponents: Vec<u32>,
    },
    KernelPower(KernelPower),
    TestFn(TestFn),
    LinComb {
        coefficients: Vec<Complex64>,
        terms: Vec<AnalyticFn>,
    },
    /// `z -> inner(m z / (m + 1))`.
    Dilated {
        inner: Box<AnalyticFn>,
        m: u32,
    },
}

impl AnalyticFn {
    pub fn monomial(exponents: &[u32]) -> Self {
        AnalyticFn::Monomial {
            exponents: exponents.to_vec(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        AnalyticFn::LinComb {
            coefficients: vec![Complex64::new(c, 0.0)],
            terms: vec![AnalyticFn::monomial(&vec![0; n])],
        }
    }

    pub fn scaled(self, c: f64) -> Self {
        AnalyticFn::LinComb {
            coefficients: vec![Complex64::new(c, 0.0)],
            terms: vec![self],
        }
    }

    /// Dimension, when the function pins one down.
    pub fn dim(&self) -> Option<usize> {
        match self {
            AnalyticFn::Monomial { exponents } => Some(exponents.len()),
            AnalyticFn::KernelPower(k) => Some(k.w.dim()),
            AnalyticFn::TestFn(f) => Some(f.a.dim()),
            AnalyticFn::LinComb { terms, .. } => terms.iter().find_map(|t| t.dim()),
            AnalyticFn::Dilated { inner, .. } => inner.dim(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            AnalyticFn::Monomial { exponents } => exponents.iter().all(|&k| k == 0),
            AnalyticFn::KernelPower(k) => k.exponent == 0.0 || k.kappa == 0.0 || k.w.norm() == 0.0,
            AnalyticFn::TestFn(_) => false,
            AnalyticFn::LinComb {
                coefficients,
                terms,
            } => terms
                .iter()
                .zip(coefficients)
                .all(|(t, c)| *c == Complex64::new(0.0, 0.0) || t.is_constant()),
            AnalyticFn::Dilated { inner, .. } => inner.is_constant(),
        }
    }

    /// Raw evaluation; may be non-finite. See [`fn_eval`] for the checked form.
    pub fn eval(&self, z: &BallPoint) -> Complex64 {
        match self {
            AnalyticFn::Monomial { exponents } => z
                .coords()
                .iter()
                .zip(exponents)
                .map(|(zi, &k)| zi.powu(k))
                .product(),
            AnalyticFn::KernelPower(k) => k.eval(z),
            AnalyticFn::TestFn(f) => f.kernel.eval(z),
            AnalyticFn::LinComb {
                coefficients,
                terms,
            } => coefficients
                .iter()
                .zip(terms)
                .map(|(c, t)| c * t.eval(z))
                .sum(),
            AnalyticFn::Dilated { inner, m } => inner.eval(&dilate_point(z, *m)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AnalyticFn::LinComb {
                coefficients,
                terms,
            } => {
                if coefficients.len() != terms.len() {
                    return Err(Error::DimensionMismatch {
                        left: coefficients.len(),
                        right: terms.len(),
                    });
                }
                let dims: Vec<usize> = terms.iter().filter_map(|t| t.dim()).collect();
                if let Some(d) = dims.iter().find(|&&d| d != dims[0]) {
                    return Err(Error::DimensionMismatch {
                        left: dims[0],
                        right: *d,
                    });
                }
                terms.iter().try_for_each(|t| t.validate())
            }
            AnalyticFn::Dilated { inner, m } => {
                if *m == 0 {
                    return Err(Error::OutOfRange {
                        name: "m",
                        value: 0.0,
                        expected: "m >= 1",
                    });
                }
                inner.validate()
            }
            _ => Ok(()),
        }
    }
}

fn dilate_point(z: &BallPoint, m: u32) -> BallPoint {
    let c = m as f64 / (m as f64 + 1.0);
    BallPoint::from_parts(z.vec().scale_real(c), (1.0 - c) + c * z.gap())
}

/// Checked evaluation.
pub fn fn_eval(f: &AnalyticFn, z: &BallPoint) -> Result<Complex64> {
    if let Some(d) = f.dim() {
        if d != z.dim() {
            return Err(Error::DimensionMismatch {
                left: d,
                right: z.dim(),
            });
        }
    }
    let v = f.eval(z);
    if !v.is_finite() {
        return Err(Error::Invalid(format!(
            "non-finite value {v} at {:?}",
            z.coords()
        )));
    }
    Ok(v)
}

/// The dilation `K_m f`.
pub fn dilate(f: AnalyticFn, m: u32) -> AnalyticFn {
    AnalyticFn::Dilated {
        inner: Box::new(f),
        m,
    }
}

/// `f_{a,j}` as an [`AnalyticFn`].
pub fn test_fn(a: &BallPoint, j: usize, params: &TestFnParams) -> Result<AnalyticFn> {
    Ok(AnalyticFn::TestFn(TestFn::new(a, j, params.clone())?))
}

/// A unitary `U` with `U a = |a| e_1`: a diagonal phase fixing the sign of
/// the first coordinate followed by a Householder reflection.
pub fn unitary_to_axis(a: &BallPoint) -> Result<CMatrix> {
    let norm = a.norm();
    if !(norm > 0.0) {
        return Err(Error::Invalid(
            "rotation to the axis needs a nonzero point".into(),
        ));
    }
    let n = a.dim();
    let x: Vec<Complex64> = a.coords().iter().map(|c| c / norm).collect();
    let phase = if x[0].norm() > 0.0 {
        x[0].conj() / x[0].norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut d = vec![Complex64::new(1.0, 0.0); n];
    d[0] = phase;
    let dmat = CMatrix::diagonal(&d);
    let xp: Vec<Complex64> = x.iter().zip(&d).map(|(a, b)| a * b).collect();
    let tail: f64 = xp[1..].iter().map(|c| c.norm_sqr()).sum();
    if tail == 0.0 {
        return Ok(dmat);
    }
    // v = x' - e_1 with v_1 = -(|x'_2|^2 + ...) / (1 + x'_1)
    let x1 = xp[0].re;
    let mut v = xp.clone();
    v[0] = Complex64::new(-tail / (1.0 + x1), 0.0);
    let vv: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    let mut rows = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            let id = if i == j { 1.0 } else { 0.0 };
            *e = Complex64::new(id, 0.0) - 2.0 * v[i] * v[j].conj() / vv;
        }
    }
    Ok(CMatrix::from_rows(rows)?.mul(&dmat))
}

/// The points `t_1 = t e_1`, `t_j = t^2 e_1 + t sqrt(1 - t^2) e_j` and the
/// scalar `t_N = 1 - N (1 - t)`.
pub fn special_points(t: f64, big_n: f64, n: usize) -> Result<(Vec<BallPoint>, f64)> {
    check_range("t", t, t > 0.0 && t < 1.0, "(0, 1)")?;
    check_range("N", big_n, big_n > 0.0, "N must be positive")?;
    let gap = 1.0 - t;
    let oms = gap * (2.0 - gap);
    let pts = (1..=n)
        .map(|j| BallPoint::from_direction_gap(&axis_point(t, oms, j, n), gap))
        .collect::<Result<Vec<_>>>()?;
    Ok((pts, 1.0 - big_n * gap))
}

/// `(int |f|^p d nu_alpha)^(1/p)` against a `nu_alpha` sample (plain or
/// recentred), with propagated standard error.
pub fn apalpha_norm(f: &AnalyticFn, p: f64, sample: &DiscreteMeasure) -> Result<IntegralEstimate> {
    check_range("p", p, p > 0.0, "p must be positive")?;
    if let Some(d) = f.dim() {
        if d != sample.dim() {
            return Err(Error::DimensionMismatch {
                left: d,
                right: sample.dim(),
            });
        }
    }
    Ok(integrate(|z| f.eval(z).norm().powf(p), sample)?.root(p))
}

/// Exact `||z^m||_{A^p_alpha}`: `int prod |z_i|^(p m_i) d nu_alpha` equals
/// `prod Gamma(1 + p m_i / 2) Gamma(n + 1 + alpha) / Gamma(n + 1 + alpha + p|m|/2)`.
pub fn monomial_norm(exponents: &[u32], p: f64, alpha: f64) -> f64 {
    let n = exponents.len() as f64;
    let halves: Vec<f64> = exponents.iter().map(|&k| 0.5 * p * k as f64).collect();
    let total: f64 = halves.iter().sum();
    let ln = halves.iter().map(|h| ln_gamma(1.0 + h)).sum::<f64>() + ln_gamma(n + 1.0 + alpha)
        - ln_gamma(n + 1.0 + alpha + total);
    (ln / p).exp()
}

/// All multi-indices of total degree `1..=max_degree` in `n` variables,
/// ordered by degree then lexicographically (descending in `z_1`).
pub fn multi_indices(n: usize, max_degree: u32) -> Vec<Vec<u32>> {
    fn fill(n: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            fill(n, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for d in 1..=max_degree {
        fill(n, d, &mut Vec::new(), &mut out);
    }
    out
}

/// Monomials of degree `1..=max_degree`, each divided by its exact
/// `A^p_alpha` norm.
pub fn normalized_monomials(n: usize, max_degree: u32, p: f64, alpha: f64) -> Vec<AnalyticFn> {
    multi_indices(n, max_degree)
        .into_iter()
        .map(|m| {
            let c = 1.0 / monomial_norm(&m, p, alpha);
            AnalyticFn::Monomial { exponents: m }.scaled(c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{recenter, sample_nu_alpha, WeightParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let z = BallPoint::from_complex(vec![c(0.5, 0.0), c(0.0, 0.5)]).unwrap();
        let m = AnalyticFn::monomial(&[2, 1]);
        assert!((fn_eval(&m, &z).unwrap() - c(0.0, 0.125)).norm() < 1e-16);
        let k = KernelPower::new(CVec::zeros(2), 3.7, 1.0, 1.0).unwrap();
        assert_eq!(
            fn_eval(&AnalyticFn::KernelPower(k), &z).unwrap(),
            c(1.0, 0.0)
        );
        let d = dilate(AnalyticFn::monomial(&[1]), 1);
        let x = BallPoint::from_complex(vec![c(0.4, -0.2)]).unwrap();
        assert!((fn_eval(&d, &x).unwrap() - c(0.2, -0.1)).norm() < 1e-16);
        assert!(fn_eval(&m, &x).is_err());
    }

    #[test]
    fn kernel_requires_reach_below_one() {
        let w = CVec::from_real(&[0.9]).unwrap();
        assert!(KernelPower::new(w.clone(), 2.0, 1.0, 1.2).is_err());
        assert!(KernelPower::new(w, 2.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn unitary_examples() {
        let a = BallPoint::from_real(&[0.7, 0.0]).unwrap();
        assert_eq!(unitary_to_axis(&a).unwrap(), CMatrix::identity(2));
        let b = BallPoint::from_real(&[0.0, 0.5]).unwrap();
        let u = unitary_to_axis(&b).unwrap();
        let img = u.apply(b.vec());
        assert!((img.coords()[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!(img.coords()[1].norm() < 1e-15);
        assert!(unitary_to_axis(&BallPoint::origin(2)).is_err());
    }

    #[test]
    fn special_point_examples() {
        let (pts, tn) = special_points(0.8, 4.0, 2).unwrap();
        assert!((pts[0].coords()[0].re - 0.8).abs() < 1e-15);
        assert!((pts[1].coords()[0].re - 0.64).abs() < 1e-15);
        assert!((pts[1].coords()[1].re - 0.48).abs() < 1e-15);
        assert!((tn - 0.2).abs() < 1e-15);
        for p in &pts {
            assert!((p.norm() - 0.8).abs() < 1e-15);
        }
    }

    #[test]
    fn test_fn_values() {
        let params = TestFnParams::with_defaults(2, 2.0, 0.0);
        assert_eq!(params.delta, 2.0);
        let a = BallPoint::from_direction_gap(&CVec::basis(2, 0), 0.01).unwrap();
        let oma = a.one_minus_norm_sqr();
        let f0 = test_fn(&a, 0, &params).unwrap();
        let at0 = fn_eval(&f0, &BallPoint::origin(2)).unwrap();
        assert!((at0.re - oma.powf(params.delta / params.p)).abs() < 1e-15);
        let at_a = fn_eval(&f0, &a).unwrap();
        let expect = oma.powf((params.delta - params.t(2)) / params.p);
        assert!((at_a.re / expect - 1.0).abs() < 1e-12);
        let far = BallPoint::from_direction_gap(&CVec::basis(2, 0), 0.2).unwrap();
        assert!(test_fn(&far, 0, &params).is_err());
        assert!(test_fn(&a, 3, &params).is_err());
        let mut bad = params.clone();
        bad.delta = 0.5;
        bad.p = 10.0;
        assert!(test_fn(&a, 0, &bad).is_err());
        let s = serde_json::to_string(&f0).unwrap();
        let back: AnalyticFn = serde_json::from_str(&s).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }

    #[test]
    fn norm_examples() {
        let s0 = sample_nu_alpha(&WeightParams::new(1, 0.0).unwrap(), 100_000, 5).unwrap();
        let one = apalpha_norm(&AnalyticFn::constant(1, 1.0), 2.0, &s0).unwrap();
        assert!((one.value - 1.0).abs() < 1e-14);
        let z = AnalyticFn::monomial(&[1]);
        let e = apalpha_norm(&z, 2.0, &s0).unwrap();
        assert!(e.within_sigma(0.5f64.sqrt(), 3.0), "{e:?}");
        let s1 = sample_nu_alpha(&WeightParams::new(1, 1.0).unwrap(), 100_000, 6).unwrap();
        let e1 = apalpha_norm(&z, 2.0, &s1).unwrap();
        assert!(e1.within_sigma((1.0f64 / 3.0).sqrt(), 3.0), "{e1:?}");
        assert!((monomial_norm(&[1], 2.0, 0.0) - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((monomial_norm(&[1], 2.0, 1.0) - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn monomial_norm_matches_sampling() {
        let params = WeightParams::new(2, 0.5).unwrap();
        let s = sample_nu_alpha(&params, 200_000, 9).unwrap();
        for m in [[1u32, 1], [2, 0], [0, 3], [2, 2]] {
            for p in [1.0, 2.0, 3.0] {
                let f = AnalyticFn::monomial(&m);
                let e = apalpha_norm(&f, p, &s).unwrap();
                let exact = monomial_norm(&m, p, 0.5);
                assert!(e.within_sigma(exact, 4.0), "{m:?} p={p}: {e:?} vs {exact}");
            }
        }
        assert_eq!(
            multi_indices(2, 2),
            vec![vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
    }

    #[test]
    fn dilation_does_not_increase_norm() {
        let params = WeightParams::new(1, 0.0).unwrap();
        let s = sample_nu_alpha(&params, 50_000, 2).unwrap();
        let f = AnalyticFn::LinComb {
            coefficients: vec![c(1.0, 0.0), c(0.0, 2.0)],
            terms: vec![AnalyticFn::monomial(&[1]), AnalyticFn::monomial(&[3])],
        };
        let base = apalpha_norm(&f, 2.0, &s).unwrap();
        for m in [1, 2, 5] {
            let d = apalpha_norm(&dilate(f.clone(), m), 2.0, &s).unwrap();
            assert!(d.value <= base.value + 3.0 * (d.std_error + base.std_error));
        }
        let x = BallPoint::from_real(&[0.7]).unwrap();
        let far = (dilate(f.clone(), 10_000).eval(&x) - f.eval(&x)).norm();
        assert!(far < 1e-3);
    }

    #[test]
    fn recentred_test_fn_norm_is_bounded() {
        let params = TestFnParams::with_defaults(1, 2.0, 0.0);
        let w = WeightParams::new(1, 0.0).unwrap();
        let s = sample_nu_alpha(&w, 20_000, 3).unwrap();
        for gap in [0.1, 0.01, 0.001] {
            let a = BallPoint::from_direction_gap(&CVec::basis(1, 0), gap).unwrap();
            let local = recenter(&s, &a, &w);
            let f0 = test_fn(&a, 0, &params).unwrap();
            let e = apalpha_norm(&f0, 2.0, &local).unwrap();
            // delta = n + 1 + alpha makes the recentred integrand identically 1
            assert!((e.value - 1.0).abs() < 1e-9, "{e:?}");
        }
    }
}
