//! Geometry of the open unit ball in `C^n`.
//!
//! Points carry their boundary gap `1 - |z|` explicitly. Every quantity of the
//! form `1 - |a|^2` or `1 - <z, w>` is assembled from gaps and differences so
//! that points close to the sphere keep their relative accuracy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

/// Below this norm a vector is treated as the origin in the projection formulas.
pub const ZERO_NORM: f64 = 1e-300;

/// A vector in `C^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct CVec(Vec<Complex64>);

impl TryFrom<Vec<Complex64>> for CVec {
    type Error = Error;
    fn try_from(coords: Vec<Complex64>) -> Result<Self> {
        CVec::new(coords)
    }
}

impl From<CVec> for Vec<Complex64> {
    fn from(v: CVec) -> Self {
        v.0
    }
}

impl CVec {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("vector must have at least one coordinate"));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        Ok(CVec(coords))
    }

    pub fn from_real(coords: &[f64]) -> Result<Self> {
        CVec::new(coords.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "dimension must be positive");
        CVec(vec![Complex64::new(0.0, 0.0); n])
    }

    /// The standard basis vector with a one in coordinate `j` (zero-based).
    pub fn basis(n: usize, j: usize) -> Self {
        let mut v = CVec::zeros(n);
        v.0[j] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self, other>` without a dimension check.
    pub(crate) fn dot(&self, other: &CVec) -> Complex64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b.conj()).sum()
    }

    pub fn scale(&self, c: Complex64) -> CVec {
        CVec(self.0.iter().map(|x| x * c).collect())
    }

    pub fn scale_real(&self, c: f64) -> CVec {
        CVec(self.0.iter().map(|x| x * c).collect())
    }

    pub fn add(&self, other: &CVec) -> CVec {
        debug_assert_eq!(self.dim(), other.dim());
        CVec(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &CVec) -> CVec {
        debug_assert_eq!(self.dim(), other.dim());
        CVec(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn dist_sqr(&self, other: &CVec) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum()
    }

    /// `|z|^2 |w|^2 - |<z, w>|^2`, summed over 2x2 minors (Lagrange identity).
    pub(crate) fn wedge_sqr(&self, other: &CVec) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                acc += (self.0[i] * other.0[j] - self.0[j] * other.0[i]).norm_sqr();
            }
        }
        acc
    }
}

fn check_dims(z: &CVec, w: &CVec) -> Result<()> {
    if z.dim() == w.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            left: z.dim(),
            right: w.dim(),
        })
    }
}

/// Hermitian inner product `<z, w> = sum z_i conj(w_i)`.
pub fn inner(z: &CVec, w: &CVec) -> Result<Complex64> {
    check_dims(z, w)?;
    Ok(z.dot(w))
}

/// Returns `(P_z w, Q_z w)`, the components of `w` along `[z]` and orthogonal to it.
pub fn proj_pair(z: &CVec, w: &CVec) -> Result<(CVec, CVec)> {
    check_dims(z, w)?;
    let zz = z.norm_sqr();
    if z.norm() < ZERO_NORM {
        return Ok((CVec::zeros(w.dim()), w.clone()));
    }
    let p = z.scale(w.dot(z) / zz);
    let q = w.sub(&p);
    Ok((p, q))
}

/// A point of the open unit ball with its boundary gap `1 - |z|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CVec", into = "CVec")]
pub struct BallPoint {
    vec: CVec,
    gap: f64,
}

impl TryFrom<CVec> for BallPoint {
    type Error = Error;
    fn try_from(v: CVec) -> Result<Self> {
        BallPoint::new(v)
    }
}

impl From<BallPoint> for CVec {
    fn from(p: BallPoint) -> Self {
        p.vec
    }
}

impl BallPoint {
    pub fn new(vec: CVec) -> Result<Self> {
        let norm = vec.norm();
        if norm >= 1.0 || !norm.is_finite() {
            return Err(Error::OutsideBall { norm });
        }
        Ok(BallPoint {
            gap: 1.0 - norm,
            vec,
        })
    }

    /// The point `(1 - gap) * direction` with the gap kept exactly.
    pub fn from_direction_gap(direction: &CVec, gap: f64) -> Result<Self> {
        check_range("gap", gap, gap > 0.0 && gap <= 1.0, "(0, 1]")?;
        let dn = direction.norm();
        if !(dn > 0.0) {
            if gap == 1.0 {
                return Ok(BallPoint::origin(direction.dim()));
            }
            return Err(Error::Invalid("direction must be nonzero".into()));
        }
        Ok(BallPoint::from_parts(
            direction.scale_real((1.0 - gap) / dn),
            gap,
        ))
    }

    pub fn from_real(coords: &[f64]) -> Result<Self> {
        BallPoint::new(CVec::from_real(coords)?)
    }

    pub fn from_complex(coords: Vec<Complex64>) -> Result<Self> {
        BallPoint::new(CVec::new(coords)?)
    }

    pub fn origin(n: usize) -> Self {
        BallPoint {
            vec: CVec::zeros(n),
            gap: 1.0,
        }
    }

    /// Assembles a point from a vector and an independently computed gap.
    /// The gap wins: if rounding pushed `|vec|` to the sphere the vector is
    /// rescaled onto `|vec| = 1 - gap`.
    pub(crate) fn from_parts(vec: CVec, gap: f64) -> Self {
        let gap = gap.clamp(f64::MIN_POSITIVE, 1.0);
        let norm = vec.norm();
        if norm >= 1.0 {
            let v = vec.scale_real((1.0 - gap) / norm);
            return BallPoint { vec: v, gap };
        }
        BallPoint { vec, gap }
    }

    pub fn vec(&self) -> &CVec {
        &self.vec
    }

    pub fn dim(&self) -> usize {
        self.vec.dim()
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn norm(&self) -> f64 {
        self.vec.norm()
    }

    /// `1 - |z|^2` computed as `gap * (2 - gap)`.
    pub fn one_minus_norm_sqr(&self) -> f64 {
        self.gap * (2.0 - self.gap)
    }

    pub fn coords(&self) -> &[Complex64] {
        self.vec.coords()
    }
}

/// `1 - <z, w>` assembled from the gaps of both points.
///
/// Real part is `((1-|z|^2) + (1-|w|^2) + |z-w|^2) / 2`, which has no
/// cancellation and is bitwise symmetric in `(z, w)`.
pub fn one_minus_inner(z: &BallPoint, w: &BallPoint) -> Complex64 {
    assert_eq!(z.dim(), w.dim(), "dimension mismatch");
    let re = 0.5 * (z.one_minus_norm_sqr() + w.one_minus_norm_sqr() + z.vec.dist_sqr(&w.vec));
    let im = -z.vec.dot(&w.vec).im;
    Complex64::new(re, im)
}

/// The involutive automorphism `sigma_z` evaluated at `w`.
pub fn mobius(z: &BallPoint, w: &BallPoint) -> BallPoint {
    assert_eq!(z.dim(), w.dim(), "dimension mismatch");
    if z.norm() < ZERO_NORM {
        return BallPoint::from_parts(w.vec.scale_real(-1.0), w.gap);
    }
    let zz = z.vec.norm_sqr();
    let pw = z.vec.scale(w.vec.dot(&z.vec) / zz);
    let qw = w.vec.sub(&pw);
    let s = z.one_minus_norm_sqr().sqrt();
    let num = z.vec.sub(&pw).sub(&qw.scale_real(s));
    let den = one_minus_inner(w, z);
    let image = num.scale(den.inv());
    // 1 - |sigma_z(w)|^2 = (1-|z|^2)(1-|w|^2) / |1 - <w,z>|^2
    let oms = z.one_minus_norm_sqr() * w.one_minus_norm_sqr() / den.norm_sqr();
    let gap = oms / (1.0 + image.norm().min(1.0));
    BallPoint::from_parts(image, gap)
}

/// Pseudo-hyperbolic distance `|sigma_z(w)|`.
///
/// Evaluated as `sqrt(|z-w|^2 - (|z|^2|w|^2 - |<z,w>|^2)) / |1 - <z,w>|`, which
/// is algebraically equal to `|sigma_z(w)|` and exactly symmetric.
pub fn rho(z: &BallPoint, w: &BallPoint) -> f64 {
    assert_eq!(z.dim(), w.dim(), "dimension mismatch");
    let num = z.vec.dist_sqr(&w.vec) - z.vec.wedge_sqr(&w.vec);
    let den = one_minus_inner(z, w).norm_sqr();
    let r = (num.max(0.0) / den).sqrt();
    r.min(1.0 - f64::EPSILON)
}

/// `1 - rho(z, w)^2` without cancellation.
pub fn one_minus_rho_sqr(z: &BallPoint, w: &BallPoint) -> f64 {
    z.one_minus_norm_sqr() * w.one_minus_norm_sqr() / one_minus_inner(z, w).norm_sqr()
}

/// Bergman metric `(1/2) log((1 + rho) / (1 - rho))`.
pub fn bergman_dist(z: &BallPoint, w: &BallPoint) -> f64 {
    let r = rho(z, w);
    (1.0 + r).ln() - 0.5 * one_minus_rho_sqr(z, w).ln()
}

/// `|z - w| / |1 - <z, w>|`, an upper bound for `rho` that is sharp when `n = 1`.
pub fn rho_upper_bound(z: &BallPoint, w: &BallPoint) -> f64 {
    assert_eq!(z.dim(), w.dim(), "dimension mismatch");
    (z.vec.dist_sqr(&w.vec) / one_minus_inner(z, w).norm_sqr()).sqrt()
}

/// `rho(z, w) < r`. Ties are outside.
pub fn in_pseudo_ball(w: &BallPoint, center: &BallPoint, r: f64) -> bool {
    rho(center, w) < r
}

/// The Euclidean realization of `Delta(z, r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub axis: CVec,
    pub center: CVec,
    pub t: f64,
    pub r: f64,
}

pub fn ellipsoid_of(z: &BallPoint, r: f64) -> Result<Ellipsoid> {
    check_range("r", r, r > 0.0 && r < 1.0, "(0, 1)")?;
    let r2 = r * r;
    // 1 - r^2 |z|^2 = (1 - r^2) + r^2 (1 - |z|^2)
    let denom = (1.0 - r2) + r2 * z.one_minus_norm_sqr();
    Ok(Ellipsoid {
        axis: z.vec.clone(),
        center: z.vec.scale_real((1.0 - r2) / denom),
        t: z.one_minus_norm_sqr() / denom,
        r,
    })
}

impl Ellipsoid {
    /// Value of the quadratic form; the open ellipsoid is `{ level < 1 }`.
    pub fn level(&self, w: &CVec) -> f64 {
        let (p, q) = proj_pair(&self.axis, w).expect("dimension mismatch");
        let r2 = self.r * self.r;
        p.dist_sqr(&self.center) / (r2 * self.t * self.t) + q.norm_sqr() / (r2 * self.t)
    }

    pub fn contains(&self, w: &CVec) -> bool {
        self.level(w) < 1.0
    }

    /// Semi-axis along `[axis]`.
    pub fn axial_radius(&self) -> f64 {
        self.r * self.t
    }

    /// Semi-axis orthogonal to `[axis]`.
    pub fn transverse_radius(&self) -> f64 {
        self.r * self.t.sqrt()
    }
}
