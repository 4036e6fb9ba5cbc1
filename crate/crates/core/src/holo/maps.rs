use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::geometry::{mobius, rho, BallPoint, CVec};
use crate::linalg::CMatrix;
use crate::measure::{on_ray, DiscreteMeasure};
use crate::rng;

/// Images must stay at least this far inside the unit sphere.
pub const SELF_MAP_MARGIN: f64 = 1e-9;
pub const DEFAULT_SHELLS: [f64; 3] = [0.9, 0.99, 0.999];
pub const DEFAULT_DIRECTIONS: usize = 512;

/// One term `coeff * z^exponents` of a polynomial component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub coeff: Complex64,
    pub exponents: Vec<u32>,
}

/// A holomorphic map of `C^n` described by one of a few constructors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HoloMap {
    /// `z_i -> m_i z_i`.
    Diagonal { multipliers: Vec<Complex64> },
    /// `z -> A z + b`.
    Affine {
        matrix: CMatrix,
        offset: Vec<Complex64>,
    },
    /// `z -> sigma_a(U z)`; `U` defaults to the identity.
    MobiusAut {
        a: BallPoint,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        unitary: Option<CMatrix>,
    },
    /// One list of terms per output coordinate.
    Poly { components: Vec<Vec<PolyTerm>> },
    /// `outer(inner(z))`.
    Compose {
        outer: Box<HoloMap>,
        inner: Box<HoloMap>,
    },
}

fn monomial(z: &[Complex64], exponents: &[u32]) -> Complex64 {
    z.iter().zip(exponents).map(|(zi, &k)| zi.powu(k)).product()
}

impl HoloMap {
    pub fn scalar(n: usize, c: f64) -> Self {
        HoloMap::Diagonal {
            multipliers: vec![Complex64::new(c, 0.0); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        HoloMap::scalar(n, 1.0)
    }

    /// The constant map `z -> c`.
    pub fn constant(c: &CVec) -> Self {
        let n = c.dim();
        HoloMap::Affine {
            matrix: CMatrix::diagonal(&vec![Complex64::new(0.0, 0.0); n]),
            offset: c.coords().to_vec(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            HoloMap::Diagonal { .. } => "diagonal",
            HoloMap::Affine { .. } => "affine",
            HoloMap::MobiusAut { .. } => "mobius_aut",
            HoloMap::Poly { .. } => "poly",
            HoloMap::Compose { .. } => "compose",
        }
    }

    /// Domain dimension, after checking that all parts agree.
    pub fn dim(&self) -> Result<usize> {
        let mismatch = |left, right| Err(Error::DimensionMismatch { left, right });
        match self {
            HoloMap::Diagonal { multipliers } => {
                if multipliers.is_empty() {
                    return Err(Error::Empty("diagonal map without multipliers"));
                }
                Ok(multipliers.len())
            }
            HoloMap::Affine { matrix, offset } => {
                if matrix.dim() != offset.len() {
                    return mismatch(matrix.dim(), offset.len());
                }
                Ok(offset.len())
            }
            HoloMap::MobiusAut { a, unitary } => match unitary {
                Some(u) if u.dim() != a.dim() => mismatch(a.dim(), u.dim()),
                _ => Ok(a.dim()),
            },
            HoloMap::Poly { components } => {
                let n = components.len();
                if n == 0 {
                    return Err(Error::Empty("polynomial map without components"));
                }
                for t in components.iter().flatten() {
                    if t.exponents.len() != n {
                        return mismatch(n, t.exponents.len());
                    }
                }
                Ok(n)
            }
            HoloMap::Compose { outer, inner } => {
                let (o, i) = (outer.dim()?, inner.dim()?);
                if o != i {
                    return mismatch(o, i);
                }
                Ok(i)
            }
        }
    }

    /// Image vector, plus an authoritative boundary gap when the map
    /// determines one without cancellation.
    fn apply(&self, z: &BallPoint) -> Result<(CVec, Option<f64>)> {
        match self {
            HoloMap::Diagonal { multipliers } => {
                let v: Vec<Complex64> = z
                    .coords()
                    .iter()
                    .zip(multipliers)
                    .map(|(a, m)| a * m)
                    .collect();
                let c = multipliers[0].norm();
                let uniform = multipliers.iter().all(|m| m.norm() == c);
                let gap = (uniform && c <= 1.0).then(|| (1.0 - c) + c * z.gap());
                Ok((CVec::new(v)?, gap))
            }
            HoloMap::Affine { matrix, offset } => {
                let v = matrix.apply(z.vec()).add(&CVec::new(offset.clone())?);
                Ok((v, None))
            }
            HoloMap::MobiusAut { a, unitary } => {
                let u = match unitary {
                    Some(u) => BallPoint::from_parts(u.apply(z.vec()), z.gap()),
                    None => z.clone(),
                };
                let img = mobius(a, &u);
                let gap = img.gap();
                Ok((img.vec().clone(), Some(gap)))
            }
            HoloMap::Poly { components } => {
                let v = components
                    .iter()
                    .map(|terms| {
                        terms
                            .iter()
                            .map(|t| t.coeff * monomial(z.coords(), &t.exponents))
                            .sum()
                    })
                    .collect();
                Ok((CVec::new(v)?, None))
            }
            HoloMap::Compose { outer, inner } => {
                let mid = to_point(inner.apply(z)?)?;
                outer.apply(&mid)
            }
        }
    }

    /// Maps whose self-map property holds by construction.
    fn analytically_self(&self) -> bool {
        match self {
            HoloMap::Diagonal { multipliers } => multipliers.iter().all(|m| m.norm() <= 1.0),
            HoloMap::MobiusAut { unitary, .. } => unitary
                .as_ref()
                .is_none_or(|u| u.unitarity_defect() < 1e-12),
            HoloMap::Compose { outer, inner } => {
                outer.analytically_self() && inner.analytically_self()
            }
            _ => false,
        }
    }
}

fn to_point((v, gap): (CVec, Option<f64>)) -> Result<BallPoint> {
    match gap {
        Some(g) => Ok(BallPoint::from_parts(v, g)),
        None => BallPoint::new(v),
    }
}

/// Evaluates the map, failing if the image leaves the open ball.
pub fn map_eval(map: &HoloMap, z: &BallPoint) -> Result<BallPoint> {
    let n = map.dim()?;
    if n != z.dim() {
        return Err(Error::DimensionMismatch {
            left: n,
            right: z.dim(),
        });
    }
    to_point(map.apply(z)?)
}

/// A map that passed [`validate_self_map`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValidatedMap {
    map: HoloMap,
    #[serde(skip)]
    n: usize,
}

impl ValidatedMap {
    pub fn map(&self) -> &HoloMap {
        &self.map
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eval(&self, z: &BallPoint) -> Result<BallPoint> {
        to_point(self.map.apply(z)?)
    }
}

/// Checks `|map(z)| <= 1 - 1e-9` on `directions` random points of each shell
/// `|z| = r`. Diagonal maps with multipliers of modulus at most one,
/// automorphisms and their compositions are accepted without sampling.
pub fn validate_self_map(
    map: &HoloMap,
    shells: &[f64],
    directions: usize,
    seed: u64,
) -> Result<ValidatedMap> {
    let n = map.dim()?;
    if let HoloMap::MobiusAut {
        unitary: Some(u), ..
    } = map
    {
        let d = u.unitarity_defect();
        if d >= 1e-12 {
            return Err(Error::Invalid(format!(
                "mobius_aut unitary is not unitary (defect {d:e})"
            )));
        }
    }
    for &r in shells {
        check_range("shell", r, r > 0.0 && r < 1.0, "(0, 1)")?;
    }
    if map.analytically_self() {
        return Ok(ValidatedMap {
            map: map.clone(),
            n,
        });
    }
    let mut worst: Option<(f64, BallPoint)> = None;
    for (k, &r) in shells.iter().enumerate() {
        let shell_seed = rng::derive_seed(seed, k as u64);
        let evals: Vec<(f64, BallPoint)> = (0..directions as u64)
            .into_par_iter()
            .map(|i| {
                let mut g = rng::stream(shell_seed, i);
                let z = on_ray(&rng::unit_sphere(n, &mut g), r);
                let norm = match map.apply(&z) {
                    Ok((v, Some(gap))) => (1.0 - gap).max(v.norm()),
                    Ok((v, None)) => v.norm(),
                    Err(Error::OutsideBall { norm }) => norm.max(1.0),
                    Err(_) => f64::INFINITY,
                };
                (norm, z)
            })
            .collect();
        for (norm, z) in evals {
            let norm = if norm.is_nan() { f64::INFINITY } else { norm };
            if worst.as_ref().is_none_or(|(w, _)| norm > *w) {
                worst = Some((norm, z));
            }
        }
    }
    if let Some((norm, z)) = worst {
        if norm > 1.0 - SELF_MAP_MARGIN {
            return Err(Error::NotSelfMap {
                name: map.kind().into(),
                image_norm: norm,
                witness: z.coords().iter().map(|c| [c.re, c.im]).collect(),
            });
        }
    }
    Ok(ValidatedMap {
        map: map.clone(),
        n,
    })
}

/// `rho(phi(z), psi(z))`.
pub fn rho_gap(phi: &ValidatedMap, psi: &ValidatedMap, z: &BallPoint) -> Result<f64> {
    Ok(rho(&phi.eval(z)?, &psi.eval(z)?))
}

/// Images of a sample under both maps together with `rho(z_i)`.
#[derive(Clone, Debug)]
pub struct PairImages {
    pub phi: Vec<BallPoint>,
    pub psi: Vec<BallPoint>,
    pub rho: Vec<f64>,
}

pub fn pair_images(
    phi: &ValidatedMap,
    psi: &ValidatedMap,
    base: &DiscreteMeasure,
) -> Result<PairImages> {
    for d in [phi.dim(), psi.dim()] {
        if d != base.dim() {
            return Err(Error::DimensionMismatch {
                left: d,
                right: base.dim(),
            });
        }
    }
    let same = phi.map() == psi.map();
    let imgs: Vec<(BallPoint, BallPoint, f64)> = base
        .points()
        .par_iter()
        .map(|z| {
            let a = phi.eval(z)?;
            let b = if same { a.clone() } else { psi.eval(z)? };
            let r = if same { 0.0 } else { rho(&a, &b) };
            Ok((a, b, r))
        })
        .collect::<Result<_>>()?;
    let mut out = PairImages {
        phi: Vec::with_capacity(imgs.len()),
        psi: Vec::with_capacity(imgs.len()),
        rho: Vec::with_capacity(imgs.len()),
    };
    for (a, b, r) in imgs {
        out.phi.push(a);
        out.psi.push(b);
        out.rho.push(r);
    }
    Ok(out)
}

/// Orders two points by their coordinates so that the pull-back measure does
/// not depend on which map is called `phi`.
fn canonical_pair<'p>(a: &'p BallPoint, b: &'p BallPoint) -> (&'p BallPoint, &'p BallPoint) {
    for (x, y) in a.coords().iter().zip(b.coords()) {
        for (u, v) in [(x.re, y.re), (x.im, y.im)] {
            if u < v {
                return (a, b);
            }
            if v < u {
                return (b, a);
            }
        }
    }
    (a, b)
}

/// Discrete joint pull-back measure: atoms `phi(z_i)` and `psi(z_i)`, each of
/// weight `w_i * rho(z_i)^q`, in sample order. The two atoms of a pair are
/// sorted by coordinates, so swapping the maps gives the same measure.
pub fn pullback_measure(
    phi: &ValidatedMap,
    psi: &ValidatedMap,
    q: f64,
    base: &DiscreteMeasure,
) -> Result<DiscreteMeasure> {
    check_range("q", q, q > 0.0, "q must be positive")?;
    let imgs = pair_images(phi, psi, base)?;
    let mut points = Vec::with_capacity(2 * base.len());
    let mut weights = Vec::with_capacity(2 * base.len());
    for (i, w) in base.weights().iter().enumerate() {
        let m = w * imgs.rho[i].powf(q);
        let (x, y) = canonical_pair(&imgs.phi[i], &imgs.psi[i]);
        points.push(x.clone());
        points.push(y.clone());
        weights.push(m);
        weights.push(m);
    }
    DiscreteMeasure::new(base.dim(), points, weights)
}
