//! Estimators for the difference `C_phi - C_psi : A^p_alpha -> A^q_beta`:
//! the kernel integral `Gamma` and its suprema, a boundary shell profile of it,
//! the averaging norm used when `q < p`, a dictionary lower bound on the
//! operator norm and a compactness probe over normalized families.
//!
//! Integrals against `nu_beta` are taken over a fixed sample. When an
//! integrand is concentrated near a point `a`, the sample is pooled with its
//! image under `sigma_a` (balance heuristic weights), which keeps the
//! estimator unbiased while resolving the peak.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::carleson::{carleson_report, CarlesonConfig, CarlesonReport, CriterionParams};
use crate::error::{check_range, Error, Result};
use crate::geometry::{mobius, one_minus_inner, rho, BallPoint};
use crate::holo::{
    apalpha_norm, monomial_norm, multi_indices, pullback_measure, test_fn, AnalyticFn,
    TestFnParams, ValidatedMap,
};
use crate::measure::{
    integrate_values, recenter, recenter_weight, weighted_estimate, DiscreteMeasure,
    IntegralEstimate, WeightParams,
};
use crate::rng::sphere_directions;
use crate::supgrid::{dyadic_gaps, shell_profile, ShellProfile, SupEstimate, SupGrid};

pub use crate::carleson::DENOMINATOR_FLOOR;

pub const DEFAULT_TAIL_SHELLS: u32 = 12;
pub const DEFAULT_DICT_DEGREE: u32 = 4;
pub const DEFAULT_DICT_GAPS: [f64; 3] = [0.1, 0.01, 0.001];
pub const DEFAULT_PROBE_DEGREE: u32 = 40;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorSpec {
    pub phi: ValidatedMap,
    pub psi: ValidatedMap,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
}

impl OperatorSpec {
    pub fn new(
        phi: ValidatedMap,
        psi: ValidatedMap,
        p: f64,
        q: f64,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        if phi.dim() != psi.dim() {
            return Err(Error::DimensionMismatch {
                left: phi.dim(),
                right: psi.dim(),
            });
        }
        check_range("p", p, p > 0.0, "p must be positive")?;
        check_range("q", q, q > 0.0, "q must be positive")?;
        check_range("alpha", alpha, alpha > -1.0, "alpha must exceed -1")?;
        check_range("beta", beta, beta > -1.0, "beta must exceed -1")?;
        let n = phi.dim();
        Ok(OperatorSpec {
            phi,
            psi,
            p,
            q,
            alpha,
            beta,
            n,
        })
    }

    /// `q / p`.
    pub fn lambda(&self) -> f64 {
        self.q / self.p
    }

    /// `p / (p - q)`, defined only for `q < p`.
    pub fn t_exp(&self) -> Option<f64> {
        (self.q < self.p).then(|| self.p / (self.p - self.q))
    }

    /// `n + 1 + alpha`.
    pub fn default_s(&self) -> f64 {
        self.n as f64 + 1.0 + self.alpha
    }

    /// Kernel exponent `(n + 1 + alpha) lambda + s` of `Gamma`.
    pub fn gamma_exponent(&self, s: f64) -> f64 {
        (self.n as f64 + 1.0 + self.alpha) * self.lambda() + s
    }

    pub fn swapped(&self) -> Self {
        OperatorSpec {
            phi: self.psi.clone(),
            psi: self.phi.clone(),
            ..self.clone()
        }
    }

    pub fn maps_equal(&self) -> bool {
        self.phi.map() == self.psi.map()
    }

    pub fn alpha_params(&self) -> WeightParams {
        WeightParams::new(self.n, self.alpha).expect("checked in new")
    }

    pub fn beta_params(&self) -> WeightParams {
        WeightParams::new(self.n, self.beta).expect("checked in new")
    }
}

/// Images under both maps with `rho^q` and integration weights.
#[derive(Clone, Debug)]
struct Pairs {
    phi: Vec<BallPoint>,
    psi: Vec<BallPoint>,
    rho_q: Vec<f64>,
    weights: Vec<f64>,
}

impl Pairs {
    fn values<F>(&self, f: &F) -> Vec<f64>
    where
        F: Fn(&BallPoint, &BallPoint, f64) -> f64 + Sync,
    {
        (0..self.rho_q.len())
            .into_par_iter()
            .map(|i| {
                let r = self.rho_q[i];
                if r == 0.0 {
                    0.0
                } else {
                    f(&self.phi[i], &self.psi[i], r)
                }
            })
            .collect()
    }
}

/// Plain sample reweighted and pooled with its image under `sigma_a`.
#[derive(Clone, Debug)]
pub struct Mixture {
    center: BallPoint,
    plain_weights: Vec<f64>,
    extra: Pairs,
}

impl Mixture {
    pub fn center(&self) -> &BallPoint {
        &self.center
    }
}

/// A `nu_beta` sample together with its images under both maps.
#[derive(Clone, Debug)]
pub struct OperatorSample<'a> {
    spec: &'a OperatorSpec,
    base: &'a DiscreteMeasure,
    plain: Pairs,
    same: bool,
}

fn map_pair(spec: &OperatorSpec, same: bool, z: &BallPoint) -> Result<(BallPoint, BallPoint, f64)> {
    let a = spec.phi.eval(z)?;
    if same {
        return Ok((a.clone(), a, 0.0));
    }
    let b = spec.psi.eval(z)?;
    let r = rho(&a, &b).powf(spec.q);
    Ok((a, b, r))
}

fn unzip_pairs(items: Vec<(BallPoint, BallPoint, f64)>, weights: Vec<f64>) -> Pairs {
    let mut out = Pairs {
        phi: Vec::with_capacity(items.len()),
        psi: Vec::with_capacity(items.len()),
        rho_q: Vec::with_capacity(items.len()),
        weights,
    };
    for (a, b, r) in items {
        out.phi.push(a);
        out.psi.push(b);
        out.rho_q.push(r);
    }
    out
}

impl<'a> OperatorSample<'a> {
    /// Evaluates both maps on a `nu_beta` sample.
    pub fn new(spec: &'a OperatorSpec, nu_beta: &'a DiscreteMeasure) -> Result<Self> {
        if nu_beta.dim() != spec.n {
            return Err(Error::DimensionMismatch {
                left: spec.n,
                right: nu_beta.dim(),
            });
        }
        if nu_beta.is_empty() {
            return Err(Error::Empty("nu_beta sample"));
        }
        let same = spec.maps_equal();
        let items = nu_beta
            .points()
            .par_iter()
            .map(|z| map_pair(spec, same, z))
            .collect::<Result<Vec<_>>>()?;
        Ok(OperatorSample {
            spec,
            base: nu_beta,
            plain: unzip_pairs(items, nu_beta.weights().to_vec()),
            same,
        })
    }

    pub fn spec(&self) -> &OperatorSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// Pools the sample with its image under `sigma_a`.
    pub fn mixture(&self, a: &BallPoint) -> Result<Mixture> {
        if a.dim() != self.spec.n {
            return Err(Error::DimensionMismatch {
                left: self.spec.n,
                right: a.dim(),
            });
        }
        let order = self.spec.beta_params().order();
        let pts = self.base.points();
        let ws = self.base.weights();
        let plain_weights: Vec<f64> = pts
            .par_iter()
            .zip(ws.par_iter())
            .map(|(x, &w)| w / (1.0 + recenter_weight(x, a, order)))
            .collect();
        let moved = pts
            .par_iter()
            .zip(ws.par_iter())
            .map(|(u, &w)| {
                let r = recenter_weight(u, a, order);
                let z = mobius(a, u);
                let (x, y, rq) = map_pair(self.spec, self.same, &z)?;
                Ok(((x, y, rq), w * r / (1.0 + r)))
            })
            .collect::<Result<Vec<_>>>()?;
        let (items, weights): (Vec<_>, Vec<_>) = moved.into_iter().unzip();
        Ok(Mixture {
            center: a.clone(),
            plain_weights,
            extra: unzip_pairs(items, weights),
        })
    }

    /// `int f(phi(z), psi(z), rho(z)^q) d nu_beta`. The integrand is taken as
    /// zero wherever `rho = 0`.
    pub fn integrate<F>(&self, mix: Option<&Mixture>, f: F) -> Result<IntegralEstimate>
    where
        F: Fn(&BallPoint, &BallPoint, f64) -> f64 + Sync,
    {
        let mut vals = self.plain.values(&f);
        match mix {
            None => weighted_estimate(&vals, &self.plain.weights),
            Some(m) => {
                vals.extend(m.extra.values(&f));
                let mut w = m.plain_weights.clone();
                w.extend_from_slice(&m.extra.weights);
                weighted_estimate(&vals, &w)
            }
        }
    }

    /// `int Gamma(a, z) rho(z)^q d nu_beta(z)`.
    pub fn gamma(&self, s: f64, a: &BallPoint, importance: bool) -> Result<IntegralEstimate> {
        check_range("s", s, s > 0.0, "s must be positive")?;
        let e = self.spec.gamma_exponent(s);
        if self.same {
            return self.integrate(None, |_, _, _| 0.0);
        }
        let mix = if importance {
            Some(self.mixture(a)?)
        } else {
            None
        };
        self.integrate(mix.as_ref(), |x, y, rq| {
            rq * (kernel_term(a, x, s, e) + kernel_term(a, y, s, e))
        })
    }

    /// Grid and refinement supremum of [`OperatorSample::gamma`] over `a`.
    pub fn gamma_sup(&self, s: f64, grid: &SupGrid, importance: bool) -> Result<SupEstimate> {
        grid.sup(self.spec.n, |a| Ok(self.gamma(s, a, importance)?.value))
    }

    /// Per-shell maxima of [`OperatorSample::gamma`].
    pub fn essential_tail(
        &self,
        s: f64,
        gaps: &[f64],
        directions: usize,
        tail_shells: usize,
        importance: bool,
    ) -> Result<ShellProfile> {
        shell_profile(self.spec.n, gaps, directions, tail_shells, |a| {
            Ok(self.gamma(s, a, importance)?.value)
        })
    }

    /// `L^t(nu_alpha)` norm over `a` of the inner `nu_beta` integral with
    /// kernel exponent `kernel_exponent` (default `n + 1 + alpha + s`),
    /// `t = p / (p - q)`.
    pub fn lt_quantity(
        &self,
        s: f64,
        kernel_exponent: Option<f64>,
        nu_alpha: &DiscreteMeasure,
    ) -> Result<IntegralEstimate> {
        let t = lt_exponent(self.spec)?;
        check_range("s", s, s > 0.0, "s must be positive")?;
        let e = kernel_exponent.unwrap_or(self.spec.n as f64 + 1.0 + self.spec.alpha + s);
        check_range("kernel exponent", e, e > 0.0, "must be positive")?;
        if nu_alpha.dim() != self.spec.n {
            return Err(Error::DimensionMismatch {
                left: self.spec.n,
                right: nu_alpha.dim(),
            });
        }
        if self.same {
            return Ok(IntegralEstimate::exact(0.0, nu_alpha.len()));
        }
        let inner: Vec<f64> = nu_alpha
            .points()
            .par_iter()
            .map(|a| {
                let terms: Vec<f64> = (0..self.plain.rho_q.len())
                    .map(|i| {
                        let rq = self.plain.rho_q[i];
                        if rq == 0.0 {
                            return 0.0;
                        }
                        self.plain.weights[i]
                            * rq
                            * (kernel_term(a, &self.plain.phi[i], s, e)
                                + kernel_term(a, &self.plain.psi[i], s, e))
                    })
                    .collect();
                crate::measure::pairwise_sum(&terms).powf(t)
            })
            .collect();
        Ok(integrate_values(&inner, nu_alpha)?.root(t))
    }

    /// Largest normalized `||f o phi - f o psi||_{A^q_beta}` over the
    /// dictionary.
    pub fn direct_lower(&self, dictionary: &[DictEntry], importance: bool) -> Result<DirectLower> {
        if dictionary.is_empty() {
            return Err(Error::Empty("dictionary"));
        }
        let mut candidates = Vec::with_capacity(dictionary.len());
        let mut cache: Option<Mixture> = None;
        for entry in dictionary {
            entry.check(self.spec.n)?;
            let mix = match (&entry.center, importance) {
                (Some(c), true) => {
                    if cache.as_ref().is_none_or(|m| m.center != *c) {
                        cache = Some(self.mixture(c)?);
                    }
                    cache.as_ref()
                }
                _ => None,
            };
            let num = self.difference_norm(&entry.f, mix)?;
            candidates.push(Candidate::new(&entry.label, num, &entry.norm));
        }
        let mut best = 0;
        for (i, c) in candidates.iter().enumerate() {
            if c.value > candidates[best].value {
                best = i;
            }
        }
        Ok(DirectLower {
            value: candidates[best].value,
            std_error: candidates[best].std_error,
            witness: candidates[best].label.clone(),
            candidates,
        })
    }

    /// `||f o phi - f o psi||_{A^q_beta}`.
    pub fn difference_norm(
        &self,
        f: &AnalyticFn,
        mix: Option<&Mixture>,
    ) -> Result<IntegralEstimate> {
        let q = self.spec.q;
        let est = self.integrate(mix, |x, y, _| {
            let d: Complex64 = f.eval(x) - f.eval(y);
            d.norm().powf(q)
        })?;
        Ok(est.root(q))
    }

    /// `||(C_phi - C_psi) f_k||_{A^q_beta}` along a normalized family.
    pub fn compactness_probe(
        &self,
        family: &[DictEntry],
        importance: bool,
    ) -> Result<ProbeProfile> {
        if family.is_empty() {
            return Err(Error::Empty("probe family"));
        }
        let mut labels = Vec::with_capacity(family.len());
        let mut values = Vec::with_capacity(family.len());
        let mut std_errors = Vec::with_capacity(family.len());
        for entry in family {
            entry.check(self.spec.n)?;
            let tol = 1e-6 + 3.0 * entry.norm.std_error;
            if (entry.norm.value - 1.0).abs() > tol {
                return Err(Error::Invalid(format!(
                    "probe family member {} is not normalized (norm {})",
                    entry.label, entry.norm.value
                )));
            }
            let mix = match (&entry.center, importance) {
                (Some(c), true) => Some(self.mixture(c)?),
                _ => None,
            };
            let est = self.difference_norm(&entry.f, mix.as_ref())?;
            labels.push(entry.label.clone());
            values.push(est.value);
            std_errors.push(est.std_error);
        }
        Ok(ProbeProfile::new(labels, values, std_errors))
    }
}

/// `(1-|a|^2)^s / |1 - <a, w>|^e`, with the denominator floored.
fn kernel_term(a: &BallPoint, w: &BallPoint, s: f64, e: f64) -> f64 {
    let d = one_minus_inner(a, w).norm().max(DENOMINATOR_FLOOR);
    (s * a.one_minus_norm_sqr().ln() - e * d.ln()).exp()
}

fn lt_exponent(spec: &OperatorSpec) -> Result<f64> {
    spec.t_exp().ok_or_else(|| {
        Error::Invalid(format!(
            "lt_quantity requires 0 < q < p (got p = {}, q = {})",
            spec.p, spec.q
        ))
    })
}

/// [`OperatorSample::gamma`] on a fresh sample, with importance pooling.
pub fn gamma_integral(
    spec: &OperatorSpec,
    s: f64,
    a: &BallPoint,
    nu_beta: &DiscreteMeasure,
) -> Result<IntegralEstimate> {
    OperatorSample::new(spec, nu_beta)?.gamma(s, a, true)
}

pub fn gamma_sup(
    spec: &OperatorSpec,
    s: f64,
    grid: &SupGrid,
    nu_beta: &DiscreteMeasure,
) -> Result<SupEstimate> {
    OperatorSample::new(spec, nu_beta)?.gamma_sup(s, grid, true)
}

pub fn essential_tail(
    spec: &OperatorSpec,
    s: f64,
    gaps: &[f64],
    directions: usize,
    nu_beta: &DiscreteMeasure,
) -> Result<ShellProfile> {
    OperatorSample::new(spec, nu_beta)?.essential_tail(
        s,
        gaps,
        directions,
        crate::supgrid::DEFAULT_TAIL_SHELLS,
        true,
    )
}

pub fn lt_quantity(
    spec: &OperatorSpec,
    s: f64,
    nu_alpha: &DiscreteMeasure,
    nu_beta: &DiscreteMeasure,
) -> Result<IntegralEstimate> {
    lt_exponent(spec)?;
    OperatorSample::new(spec, nu_beta)?.lt_quantity(s, None, nu_alpha)
}

/// A dictionary function with its `A^p_alpha` norm. Entries peaked near a
/// point carry it as `center`.
#[derive(Clone, Debug, Serialize)]
pub struct DictEntry {
    pub label: String,
    pub f: AnalyticFn,
    pub norm: IntegralEstimate,
    pub center: Option<BallPoint>,
}

impl DictEntry {
    pub fn exact(label: impl Into<String>, f: AnalyticFn, norm: f64) -> Self {
        DictEntry {
            label: label.into(),
            f,
            norm: IntegralEstimate::exact(norm, 1),
            center: None,
        }
    }

    /// Norm estimated on a `nu_alpha` sample, recentred at `center` if given.
    pub fn estimated(
        label: impl Into<String>,
        f: AnalyticFn,
        p: f64,
        nu_alpha: &DiscreteMeasure,
        alpha: &WeightParams,
        center: Option<BallPoint>,
    ) -> Result<Self> {
        let norm = match &center {
            Some(c) => apalpha_norm(&f, p, &recenter(nu_alpha, c, alpha))?,
            None => apalpha_norm(&f, p, nu_alpha)?,
        };
        Ok(DictEntry {
            label: label.into(),
            f,
            norm,
            center,
        })
    }

    fn check(&self, n: usize) -> Result<()> {
        if let Some(d) = self.f.dim() {
            if d != n {
                return Err(Error::DimensionMismatch { left: n, right: d });
            }
        }
        if !(self.norm.value > 0.0) || !self.norm.value.is_finite() {
            return Err(Error::Invalid(format!(
                "dictionary entry {} has norm {}",
                self.label, self.norm.value
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DictionaryConfig {
    pub max_degree: u32,
    pub gaps: Vec<f64>,
    /// Sphere directions of the test-function centres.
    pub directions: usize,
    /// Test-function parameters; `None` uses the defaults for `(n, p, alpha)`.
    pub test_fn: Option<TestFnParams>,
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        DictionaryConfig {
            max_degree: DEFAULT_DICT_DEGREE,
            gaps: DEFAULT_DICT_GAPS.to_vec(),
            directions: 1,
            test_fn: None,
        }
    }
}

fn index_label(m: &[u32]) -> String {
    let parts: Vec<String> = m.iter().map(|k| k.to_string()).collect();
    format!("z^({})", parts.join(","))
}

/// Monomials of degree `1..=max_degree` with exact norms, plus `f_{a,j}`
/// for `1 - |a|` in `gaps`, `j = 0..=n`, normalized on `nu_alpha`.
pub fn default_dictionary(
    spec: &OperatorSpec,
    cfg: &DictionaryConfig,
    nu_alpha: &DiscreteMeasure,
) -> Result<Vec<DictEntry>> {
    let n = spec.n;
    let mut out: Vec<DictEntry> = multi_indices(n, cfg.max_degree)
        .into_iter()
        .map(|m| {
            let c = 1.0 / monomial_norm(&m, spec.p, spec.alpha);
            let label = index_label(&m);
            DictEntry::exact(label, AnalyticFn::Monomial { exponents: m }.scaled(c), 1.0)
        })
        .collect();
    if cfg.gaps.is_empty() {
        return Ok(out);
    }
    let params = cfg
        .test_fn
        .clone()
        .unwrap_or_else(|| TestFnParams::with_defaults(n, spec.p, spec.alpha));
    let wp = spec.alpha_params();
    let dirs = sphere_directions(n, cfg.directions.max(1));
    for &g in &cfg.gaps {
        for (k, d) in dirs.iter().enumerate() {
            let a = BallPoint::from_direction_gap(d, g)?;
            let moved = recenter(nu_alpha, &a, &wp);
            for j in 0..=n {
                let f = test_fn(&a, j, &params)?;
                let norm = apalpha_norm(&f, spec.p, &moved)?;
                out.push(DictEntry {
                    label: format!("f(gap={g}, dir={k}, j={j})"),
                    f,
                    norm,
                    center: Some(a.clone()),
                });
            }
        }
    }
    Ok(out)
}

/// `z_1^k / ||z_1^k||_{A^p_alpha}` for `k = 1..=max_k`, exactly normalized.
pub fn monomial_family(n: usize, max_k: u32, p: f64, alpha: f64) -> Vec<DictEntry> {
    (1..=max_k)
        .map(|k| {
            let mut m = vec![0u32; n];
            m[0] = k;
            let c = 1.0 / monomial_norm(&m, p, alpha);
            DictEntry::exact(
                format!("z1^{k}"),
                AnalyticFn::Monomial { exponents: m }.scaled(c),
                1.0,
            )
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub label: String,
    pub value: f64,
    pub std_error: f64,
}

impl Candidate {
    fn new(label: &str, num: IntegralEstimate, den: &IntegralEstimate) -> Self {
        let value = num.value / den.value;
        let rel = if num.value > 0.0 {
            num.std_error / num.value
        } else {
            0.0
        };
        let std_error = if num.value > 0.0 {
            value * (rel + den.std_error / den.value)
        } else {
            num.std_error / den.value
        };
        Candidate {
            label: label.to_string(),
            value,
            std_error,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectLower {
    pub value: f64,
    pub std_error: f64,
    pub witness: String,
    pub candidates: Vec<Candidate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeProfile {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Non-increasing over the second half of the family.
    pub eventually_decreasing: bool,
    pub last_over_first: Option<f64>,
}

impl ProbeProfile {
    pub fn new(labels: Vec<String>, values: Vec<f64>, std_errors: Vec<f64>) -> Self {
        let tail = &values[values.len() / 2..];
        let eventually_decreasing = tail.windows(2).all(|w| w[1] <= w[0]);
        let first = values[0];
        let last = values[values.len() - 1];
        let last_over_first = crate::carleson::ratio(last, first);
        ProbeProfile {
            labels,
            values,
            std_errors,
            eventually_decreasing,
            last_over_first,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpnormConfig {
    /// Free exponent; `None` means `n + 1 + alpha`.
    pub s: Option<f64>,
    pub grid: SupGrid,
    pub tail_gaps: Vec<f64>,
    pub tail_directions: usize,
    pub tail_shells: usize,
    /// Pool the `nu_beta` sample with its image under `sigma_a` near peaks.
    pub importance: bool,
    /// Compute the `L^t` quantity (requires `q < p`).
    pub lt: bool,
    pub lt_kernel_exponent: Option<f64>,
    pub dictionary: DictionaryConfig,
    /// Length of the monomial probe family; `None` skips the probe.
    pub probe_degree: Option<u32>,
    /// Pseudo-ball radius of the Carleson report on the pull-back measure.
    pub carleson_r: f64,
}

impl Default for OpnormConfig {
    fn default() -> Self {
        OpnormConfig {
            s: None,
            grid: SupGrid::default(),
            tail_gaps: dyadic_gaps(DEFAULT_TAIL_SHELLS),
            tail_directions: 16,
            tail_shells: crate::supgrid::DEFAULT_TAIL_SHELLS,
            importance: true,
            lt: false,
            lt_kernel_exponent: None,
            dictionary: DictionaryConfig::default(),
            probe_degree: Some(DEFAULT_PROBE_DEGREE),
            carleson_r: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub s: f64,
    pub lambda: f64,
    pub gamma_sup: f64,
    pub gamma_argmax: BallPoint,
    pub essential_tail: ShellProfile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lt_norm: Option<IntegralEstimate>,
    pub direct_lower: f64,
    pub direct_lower_std_error: f64,
    pub witness: String,
    pub dictionary_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeProfile>,
    pub omega: CarlesonReport,
    /// `None` marks a ratio with a zero denominator.
    pub ratio_diagnostics: BTreeMap<String, Option<f64>>,
}

/// Every applicable quantity for `spec` and their ratios.
pub fn compare(
    spec: &OperatorSpec,
    cfg: &OpnormConfig,
    nu_alpha: &DiscreteMeasure,
    nu_beta: &DiscreteMeasure,
) -> Result<NormReport> {
    let s = cfg.s.unwrap_or_else(|| spec.default_s());
    check_range("s", s, s > 0.0, "s must be positive")?;
    if cfg.lt {
        lt_exponent(spec)?;
    }
    let sample = OperatorSample::new(spec, nu_beta)?;
    let sup = sample.gamma_sup(s, &cfg.grid, cfg.importance)?;
    let tail = sample.essential_tail(
        s,
        &cfg.tail_gaps,
        cfg.tail_directions,
        cfg.tail_shells,
        cfg.importance,
    )?;
    let lt_norm = if cfg.lt {
        Some(sample.lt_quantity(s, cfg.lt_kernel_exponent, nu_alpha)?)
    } else {
        None
    };
    let dict = default_dictionary(spec, &cfg.dictionary, nu_alpha)?;
    let lower = sample.direct_lower(&dict, cfg.importance)?;
    let probe = match cfg.probe_degree {
        Some(k) if k > 0 => Some(sample.compactness_probe(
            &monomial_family(spec.n, k, spec.p, spec.alpha),
            cfg.importance,
        )?),
        _ => None,
    };
    let omega_measure = pullback_measure(&spec.phi, &spec.psi, spec.q, nu_beta)?;
    let params = CriterionParams::new(spec.n, spec.lambda(), spec.alpha, cfg.carleson_r)?;
    let ccfg = CarlesonConfig {
        params,
        grid: cfg.grid.clone(),
        profile_gaps: cfg.tail_gaps.clone(),
        profile_directions: cfg.tail_directions,
        tail_shells: cfg.tail_shells,
        exponents: None,
    };
    let omega = carleson_report(&omega_measure, &ccfg, None, None)?;

    let root = sup.value.powf(1.0 / spec.q);
    let mut ratios = BTreeMap::new();
    ratios.insert(
        "gamma_sup^(1/q)/direct_lower".to_string(),
        crate::carleson::ratio(root, lower.value),
    );
    ratios.insert(
        "gamma_sup/omega_ball_quantity".to_string(),
        crate::carleson::ratio(sup.value, omega.ball_quantity),
    );
    ratios.insert(
        "gamma_sup/omega_berezin_sup".to_string(),
        crate::carleson::ratio(sup.value, omega.berezin_sup),
    );
    ratios.insert(
        "essential_tail/gamma_sup".to_string(),
        crate::carleson::ratio(tail.tail_estimate, sup.value),
    );
    if let Some(lt) = &lt_norm {
        ratios.insert(
            "lt_norm/gamma_sup^(1/q)".to_string(),
            crate::carleson::ratio(lt.value, root),
        );
    }
    Ok(NormReport {
        s,
        lambda: spec.lambda(),
        gamma_sup: sup.value,
        gamma_argmax: sup.argmax,
        essential_tail: tail,
        lt_norm,
        direct_lower: lower.value,
        direct_lower_std_error: lower.std_error,
        witness: lower.witness,
        dictionary_size: dict.len(),
        probe,
        omega,
        ratio_diagnostics: ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CVec;
    use crate::holo::{validate_self_map, HoloMap, DEFAULT_SHELLS};
    use crate::measure::{integrate, sample_nu_alpha};

    fn vm(m: HoloMap) -> ValidatedMap {
        validate_self_map(&m, &DEFAULT_SHELLS, 64, 3).unwrap()
    }

    fn scalar_spec(a: f64, b: f64, p: f64, q: f64, alpha: f64) -> OperatorSpec {
        OperatorSpec::new(
            vm(HoloMap::scalar(1, a)),
            vm(HoloMap::scalar(1, b)),
            p,
            q,
            alpha,
            alpha,
        )
        .unwrap()
    }

    fn nu(n: usize, alpha: f64, count: usize, seed: u64) -> DiscreteMeasure {
        sample_nu_alpha(&WeightParams::new(n, alpha).unwrap(), count, seed).unwrap()
    }

    fn small_grid() -> SupGrid {
        SupGrid {
            shells: 8,
            directions: 8,
            refine: true,
        }
    }

    #[test]
    fn spec_exponents() {
        let sp = scalar_spec(0.5, 0.2, 2.0, 1.0, 0.0);
        assert_eq!(sp.lambda(), 0.5);
        assert_eq!(sp.t_exp(), Some(2.0));
        assert_eq!(scalar_spec(0.5, 0.2, 1.0, 2.0, 0.0).t_exp(), None);
        assert!(OperatorSpec::new(
            vm(HoloMap::scalar(1, 0.5)),
            vm(HoloMap::scalar(1, 0.5)),
            1.0,
            1.0,
            -1.0,
            0.0
        )
        .is_err());
        assert!(OperatorSpec::new(
            vm(HoloMap::scalar(1, 0.5)),
            vm(HoloMap::scalar(2, 0.5)),
            1.0,
            1.0,
            0.0,
            0.0
        )
        .is_err());
    }

    #[test]
    fn zero_law() {
        let sp = scalar_spec(0.5, 0.5, 2.0, 1.0, 0.0);
        let b = nu(1, 0.0, 2000, 1);
        let a = BallPoint::from_real(&[0.3]).unwrap();
        assert_eq!(gamma_integral(&sp, 2.0, &a, &b).unwrap().value, 0.0);
        let cfg = OpnormConfig {
            grid: small_grid(),
            tail_directions: 4,
            lt: true,
            probe_degree: Some(5),
            ..OpnormConfig::default()
        };
        let r = compare(&sp, &cfg, &nu(1, 0.0, 500, 2), &b).unwrap();
        assert_eq!(r.gamma_sup, 0.0);
        assert_eq!(r.essential_tail.tail_estimate, 0.0);
        assert_eq!(r.lt_norm.unwrap().value, 0.0);
        assert_eq!(r.direct_lower, 0.0);
        assert!(r.probe.unwrap().values.iter().all(|v| *v == 0.0));
        assert_eq!(r.omega.ball_quantity, 0.0);
        assert!(r.ratio_diagnostics.values().all(|v| v.is_none()));
    }

    #[test]
    fn gamma_at_origin_is_twice_rho_integral() {
        let sp = scalar_spec(0.5, -1.0 / 3.0, 2.0, 2.0, 0.0);
        let b = nu(1, 0.0, 4000, 5);
        let smp = OperatorSample::new(&sp, &b).unwrap();
        let o = BallPoint::origin(1);
        let g = smp.gamma(2.0, &o, false).unwrap();
        let r = integrate(
            |z| {
                let x = sp.phi.eval(z).unwrap();
                let y = sp.psi.eval(z).unwrap();
                rho(&x, &y).powi(2)
            },
            &b,
        )
        .unwrap();
        assert!((g.value - 2.0 * r.value).abs() < 1e-12 * r.value);
    }

    #[test]
    fn constant_map_oracle() {
        // phi = 0, psi = c: integrand constant in z
        let c = 0.6;
        let (p, q, alpha, s) = (2.0, 2.0, 0.0, 1.5);
        let sp = OperatorSpec::new(
            vm(HoloMap::constant(&CVec::from_real(&[0.0]).unwrap())),
            vm(HoloMap::constant(&CVec::from_real(&[c]).unwrap())),
            p,
            q,
            alpha,
            alpha,
        )
        .unwrap();
        let b = nu(1, alpha, 3000, 8);
        for ar in [0.0, 0.4, 0.9] {
            let a = BallPoint::from_real(&[ar]).unwrap();
            let e = (2.0 + alpha) * q / p + s;
            let oma: f64 = 1.0 - ar * ar;
            let oracle = (oma.powf(s) + oma.powf(s) / (1.0 - ar * c).powf(e)) * c.powf(q);
            for imp in [false, true] {
                let g = OperatorSample::new(&sp, &b)
                    .unwrap()
                    .gamma(s, &a, imp)
                    .unwrap();
                assert!(
                    (g.value - oracle).abs() <= 3.0 * g.std_error + 1e-12 * oracle,
                    "{g:?} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn lt_constant_maps() {
        // 0.5 * ||h||_{L^2(nu_0)}, h(a) = (1-|a|^2)^2 (1 + |1 - a/2|^-4)
        let sp = OperatorSpec::new(
            vm(HoloMap::constant(&CVec::from_real(&[0.0]).unwrap())),
            vm(HoloMap::constant(&CVec::from_real(&[0.5]).unwrap())),
            2.0,
            1.0,
            0.0,
            0.0,
        )
        .unwrap();
        let b = nu(1, 0.0, 50, 1);
        let a = nu(1, 0.0, 20000, 2);
        let est = lt_quantity(&sp, 2.0, &a, &b).unwrap();
        // radial-angular midpoint quadrature of |h|^2 against dA/pi
        let (nr, nt) = (2000, 512);
        let mut acc = 0.0;
        for i in 0..nr {
            let r = (i as f64 + 0.5) / nr as f64;
            for k in 0..nt {
                let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / nt as f64;
                let d = Complex64::new(1.0 - 0.5 * r * th.cos(), 0.5 * r * th.sin()).norm();
                let h = (1.0 - r * r).powi(2) * (1.0 + d.powi(-4));
                acc += h * h * r;
            }
        }
        let h2 = acc * 2.0 / (nr * nt) as f64;
        let oracle = 0.5 * h2.sqrt();
        assert!(est.within_sigma(oracle, 3.0), "{est:?} vs {oracle}");
        assert!(lt_quantity(&scalar_spec(0.5, 0.2, 1.0, 2.0, 0.0), 2.0, &a, &b).is_err());
    }

    #[test]
    fn symmetry_is_exact() {
        let sp = scalar_spec(0.9, -0.5, 2.0, 1.0, 0.0);
        let sw = sp.swapped();
        let b = nu(1, 0.0, 3000, 4);
        let a = nu(1, 0.0, 300, 5);
        let cfg = OpnormConfig {
            grid: small_grid(),
            tail_directions: 4,
            lt: true,
            probe_degree: Some(6),
            ..OpnormConfig::default()
        };
        let r1 = compare(&sp, &cfg, &a, &b).unwrap();
        let r2 = compare(&sw, &cfg, &a, &b).unwrap();
        assert_eq!(
            serde_json::to_string(&r1).unwrap(),
            serde_json::to_string(&r2).unwrap()
        );
    }

    #[test]
    fn gamma_non_increasing_in_q() {
        let b = nu(1, 0.0, 2000, 6);
        let pts = [0.0, 0.5, 0.95];
        let mut last = vec![f64::INFINITY; pts.len()];
        for q in [0.5, 1.0, 2.0, 4.0] {
            let sp = scalar_spec(0.5, -0.5, q, q, 0.0);
            let smp = OperatorSample::new(&sp, &b).unwrap();
            for (i, r) in pts.iter().enumerate() {
                let a = BallPoint::from_real(&[*r]).unwrap();
                // fixed exponent: p = q keeps lambda = 1
                let g = smp.gamma(2.0, &a, true).unwrap().value;
                assert!(g <= last[i] * (1.0 + 1e-12), "q = {q}, |a| = {r}");
                last[i] = g;
            }
        }
    }

    #[test]
    fn direct_lower_examples() {
        let sp = scalar_spec(0.5, -0.5, 2.0, 2.0, 0.0);
        let b = nu(1, 0.0, 20000, 7);
        let smp = OperatorSample::new(&sp, &b).unwrap();
        let z = AnalyticFn::monomial(&[1]);
        let nz = monomial_norm(&[1], 2.0, 0.0);
        let dict = vec![DictEntry::exact("z", z.scaled(1.0 / nz), 1.0)];
        let d = smp.direct_lower(&dict, true).unwrap();
        // f o phi - f o psi = z exactly
        assert!(d.value >= 1.0 - 1e-12, "{d:?}");
        assert!(d.candidates.iter().all(|c| c.value <= d.value));
        let consts = vec![
            DictEntry::exact("one", AnalyticFn::constant(1, 1.0), 1.0),
            DictEntry::exact("two", AnalyticFn::constant(1, 2.0), 2.0),
        ];
        assert_eq!(smp.direct_lower(&consts, true).unwrap().value, 0.0);
        let zero = vec![DictEntry::exact("zero", AnalyticFn::constant(1, 0.0), 0.0)];
        assert!(smp.direct_lower(&zero, true).is_err());
    }

    #[test]
    fn compact_ranges_have_vanishing_tail() {
        let sp = scalar_spec(0.5, -0.5, 2.0, 2.0, 0.0);
        let b = nu(1, 0.0, 5000, 9);
        let smp = OperatorSample::new(&sp, &b).unwrap();
        let sup = smp.gamma_sup(2.0, &small_grid(), true).unwrap();
        assert!(sup.argmax.gap() > 0.01, "{sup:?}");
        let tail = smp
            .essential_tail(2.0, &dyadic_gaps(DEFAULT_TAIL_SHELLS), 4, 3, true)
            .unwrap();
        assert!(tail.tail_estimate < 1e-3 * sup.value, "{tail:?} {sup:?}");
    }

    #[test]
    fn probe_checks_normalization_and_decays() {
        let sp = scalar_spec(0.9, 0.5, 2.0, 1.0, 0.0);
        let b = nu(1, 0.0, 5000, 10);
        let smp = OperatorSample::new(&sp, &b).unwrap();
        let fam = monomial_family(1, 40, 2.0, 0.0);
        let pr = smp.compactness_probe(&fam, false).unwrap();
        assert!(pr.eventually_decreasing, "{pr:?}");
        assert!(pr.last_over_first.unwrap() < 0.1);
        let bad = vec![DictEntry::exact("z", AnalyticFn::monomial(&[1]), 0.7)];
        assert!(smp.compactness_probe(&bad, false).is_err());
    }
}
