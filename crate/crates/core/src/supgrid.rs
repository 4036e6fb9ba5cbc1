//! Suprema over the ball and boundary shell profiles.
//!
//! The grid is the origin plus shells `|a| = 1 - 2^-k`, `k = 1..=K`, crossed
//! with a fixed set of sphere directions. The best grid point is then refined
//! by golden-section search on the radius along its direction, between the
//! neighbouring shells.

use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::geometry::{BallPoint, CVec};
use crate::measure::{fmt17, on_ray};
use crate::rng::sphere_directions;

pub const DEFAULT_SHELLS: u32 = 8;
pub const DEFAULT_DIRECTIONS: usize = 64;
pub const DEFAULT_TAIL_SHELLS: usize = 3;
const GOLDEN_STEPS: usize = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupGrid {
    /// Number of shells `K`.
    pub shells: u32,
    pub directions: usize,
    pub refine: bool,
}

impl Default for SupGrid {
    fn default() -> Self {
        SupGrid {
            shells: DEFAULT_SHELLS,
            directions: DEFAULT_DIRECTIONS,
            refine: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupEstimate {
    pub value: f64,
    pub argmax: BallPoint,
    pub evaluations: usize,
}

impl SupGrid {
    pub fn gaps(&self) -> Vec<f64> {
        (1..=self.shells).map(|k| 0.5f64.powi(k as i32)).collect()
    }

    pub fn points(&self, n: usize) -> Vec<BallPoint> {
        let dirs = sphere_directions(n, self.directions.max(1));
        let mut pts = vec![BallPoint::origin(n)];
        for g in self.gaps() {
            for d in &dirs {
                pts.push(BallPoint::from_direction_gap(d, g).expect("gap in (0, 1)"));
            }
        }
        pts
    }

    /// Grid and refinement maximum of `f`.
    pub fn sup<F>(&self, n: usize, f: F) -> Result<SupEstimate>
    where
        F: Fn(&BallPoint) -> Result<f64> + Sync,
    {
        check_range("shells", self.shells as f64, self.shells >= 1, "at least 1")?;
        let pts = self.points(n);
        let vals = pts.par_iter().map(&f).collect::<Result<Vec<f64>>>()?;
        let mut best = 0;
        for (i, v) in vals.iter().enumerate() {
            if *v > vals[best] {
                best = i;
            }
        }
        let mut est = SupEstimate {
            value: vals[best],
            argmax: pts[best].clone(),
            evaluations: vals.len(),
        };
        if self.refine {
            self.refine_from(best, &pts, &f, &mut est)?;
        }
        Ok(est)
    }

    fn refine_from<F>(
        &self,
        best: usize,
        pts: &[BallPoint],
        f: &F,
        est: &mut SupEstimate,
    ) -> Result<()>
    where
        F: Fn(&BallPoint) -> Result<f64> + Sync,
    {
        let d = self.directions.max(1);
        // index 0 is the origin; shell k (1-based) holds indices 1 + (k-1) d ..
        let (dir, shell) = if best == 0 {
            (pts[1].vec().clone(), 0)
        } else {
            (pts[best].vec().clone(), 1 + (best - 1) / d)
        };
        let k = self.shells as usize;
        let point: Box<dyn Fn(f64) -> BallPoint + Sync> = if shell <= 1 {
            // radius in [0, 1 - 2^-(shell+1)]
            let hi = 1.0 - 0.5f64.powi(shell as i32 + 1);
            let dir = dir.clone();
            Box::new(move |x: f64| on_ray(&unit(&dir), x * hi))
        } else {
            // log2 of the gap between the neighbouring shells
            let lo = -((shell + 1).min(k) as f64);
            let hi = -((shell - 1) as f64);
            let dir = dir.clone();
            Box::new(move |x: f64| {
                let g = (lo + x * (hi - lo)).exp2();
                BallPoint::from_direction_gap(&dir, g).expect("gap in (0, 1)")
            })
        };
        let mut eval = |x: f64| -> Result<f64> {
            let p = point(x);
            let v = f(&p)?;
            est.evaluations += 1;
            if v > est.value {
                est.value = v;
                est.argmax = p;
            }
            Ok(v)
        };
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let mut c = b - inv_phi * (b - a);
        let mut dd = a + inv_phi * (b - a);
        let mut fc = eval(c)?;
        let mut fd = eval(dd)?;
        for _ in 0..GOLDEN_STEPS {
            if fc >= fd {
                b = dd;
                dd = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = eval(c)?;
            } else {
                a = c;
                c = dd;
                fc = fd;
                dd = a + inv_phi * (b - a);
                fd = eval(dd)?;
            }
        }
        Ok(())
    }
}

fn unit(v: &CVec) -> CVec {
    v.scale_real(1.0 / v.norm())
}

/// Per-shell suprema approaching the boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellProfile {
    /// Strictly decreasing values of `1 - |a|`.
    pub shell_gaps: Vec<f64>,
    pub values: Vec<f64>,
    /// Max over the outermost `tail_shells` values, a proxy for the limsup.
    pub tail_estimate: f64,
    pub tail_shells: usize,
}

impl ShellProfile {
    pub fn new(shell_gaps: Vec<f64>, values: Vec<f64>, tail_shells: usize) -> Result<Self> {
        if shell_gaps.is_empty() {
            return Err(Error::Empty("shell profile without shells"));
        }
        if shell_gaps.len() != values.len() {
            return Err(Error::DimensionMismatch {
                left: shell_gaps.len(),
                right: values.len(),
            });
        }
        check_gaps(&shell_gaps)?;
        let k = tail_shells.clamp(1, values.len());
        let tail_estimate = values[values.len() - k..]
            .iter()
            .copied()
            .fold(0.0, f64::max);
        Ok(ShellProfile {
            shell_gaps,
            values,
            tail_estimate,
            tail_shells: k,
        })
    }

    /// Header `gap,value`, one row per shell.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["gap", "value"])?;
        for (g, v) in self.shell_gaps.iter().zip(&self.values) {
            w.write_record([fmt17(*g), fmt17(*v)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(input: R, tail_shells: usize) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut gaps = Vec::new();
        let mut vals = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Invalid(format!("bad profile row {:?}", rec)))
            };
            gaps.push(parse(0)?);
            vals.push(parse(1)?);
        }
        ShellProfile::new(gaps, vals, tail_shells)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }
}

/// Shell gaps must lie in `(0, 1)` and decrease strictly.
pub fn check_gaps(gaps: &[f64]) -> Result<()> {
    for g in gaps {
        check_range("shell gap", *g, *g > 0.0 && *g < 1.0, "(0, 1)")?;
    }
    if gaps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid("shell gaps must decrease strictly".into()));
    }
    Ok(())
}

/// `2^-k` for `k = 1..=count`.
pub fn dyadic_gaps(count: u32) -> Vec<f64> {
    (1..=count).map(|k| 0.5f64.powi(k as i32)).collect()
}

/// Maximum of `f` over `directions` fixed sphere directions on each shell.
pub fn shell_profile<F>(
    n: usize,
    gaps: &[f64],
    directions: usize,
    tail_shells: usize,
    f: F,
) -> Result<ShellProfile>
where
    F: Fn(&BallPoint) -> Result<f64> + Sync,
{
    check_gaps(gaps)?;
    let dirs = sphere_directions(n, directions.max(1));
    let values = gaps
        .iter()
        .map(|&g| {
            let vals = dirs
                .par_iter()
                .map(|d| f(&BallPoint::from_direction_gap(d, g)?))
                .collect::<Result<Vec<f64>>>()?;
            Ok(vals.into_iter().fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    ShellProfile::new(gaps.to_vec(), values, tail_shells)
}
