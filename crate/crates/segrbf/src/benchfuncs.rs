//! The four benchmark surfaces, their ground-truth class rules, and the
//! jittered-grid site generator.
//!
//! All four are defined on (a slight extension of) the unit square and are
//! smooth on two subdomains:
//!
//! * `f1`: derivative discontinuity across the curve `x = 0.2 sin(2 pi y) + 0.5`
//! * `f2`: `f1` plus a `0.01` jump on the right side of the same curve
//! * `f3`: globally smooth arctan ridge with a steep gradient along a circle
//! * `f4`: radial power with a `0.05` jump on the line `x = 0.5`

use std::fmt;
use std::str::FromStr;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{separation_distance, Point, PointSet};
use crate::scalar::{real, to_f64, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchCase {
    F1,
    F2,
    F3,
    F4,
}

impl BenchCase {
    pub const ALL: [BenchCase; 4] = [BenchCase::F1, BenchCase::F2, BenchCase::F3, BenchCase::F4];

    /// Exact surface value at `p`.
    pub fn eval<T: Real>(self, p: &Point<T, 2>) -> T {
        let (x, y) = (p.x(), p.y());
        match self {
            BenchCase::F1 => ((x - curve_x(y)).abs() + real::<T>(0.5)).ln(),
            BenchCase::F2 => {
                let jump = if x > curve_x(y) {
                    real::<T>(0.01)
                } else {
                    T::zero()
                };
                BenchCase::F1.eval(p) + jump
            }
            BenchCase::F3 => {
                let dx = x + real::<T>(0.05);
                let dy = y + real::<T>(0.05);
                (real::<T>(1e3) * ((dx * dx + dy * dy).sqrt() - real::<T>(0.7))).atan()
            }
            BenchCase::F4 => {
                let dx = x - real::<T>(0.5);
                let dy = y - real::<T>(0.5);
                let radial = (dx * dx + dy * dy).powf(real::<T>(0.35));
                // The jump term is one-sided: zero on x <= 0.5.
                let jump = if x > real::<T>(0.5) {
                    real::<T>(0.05)
                } else {
                    T::zero()
                };
                radial + jump
            }
        }
    }

    /// Ground-truth class (1 or 2) given by the published discontinuity
    /// locus: the side of the sine curve for `f1`/`f2`, the sign of the
    /// function (mid-range line) for `f3`, the side of `x = 0.5` for `f4`.
    pub fn true_class<T: Real>(self, p: &Point<T, 2>) -> usize {
        let (x, y) = (p.x(), p.y());
        let left = match self {
            BenchCase::F1 | BenchCase::F2 => x <= curve_x(y),
            BenchCase::F3 => {
                let dx = x + real::<T>(0.05);
                let dy = y + real::<T>(0.05);
                (dx * dx + dy * dy).sqrt() < real::<T>(0.7)
            }
            BenchCase::F4 => x <= real::<T>(0.5),
        };
        if left {
            1
        } else {
            2
        }
    }
}

impl fmt::Display for BenchCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchCase::F1 => "f1",
            BenchCase::F2 => "f2",
            BenchCase::F3 => "f3",
            BenchCase::F4 => "f4",
        })
    }
}

impl FromStr for BenchCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(BenchCase::F1),
            "f2" => Ok(BenchCase::F2),
            "f3" => Ok(BenchCase::F3),
            "f4" => Ok(BenchCase::F4),
            other => Err(Error::UnknownCase(other.to_string())),
        }
    }
}

/// The discontinuity curve of `f1`/`f2`: `x = 0.2 sin(2 pi y) + 0.5`.
pub fn curve_x<T: Real>(y: T) -> T {
    real::<T>(0.2) * (real::<T>(2.0) * T::PI() * y).sin() + real::<T>(0.5)
}

/// Jittered-grid scattered sites with a guaranteed separation floor.
#[derive(Debug)]
pub struct SynthesizedSites<T, const D: usize = 2> {
    pub points: PointSet<T, D>,
    /// Exact separation distance of the generated sites.
    pub realized_q: T,
    /// Grid cell width before jitter.
    pub cell: T,
}

/// Generates `n_points` sites on a jittered `g x g` grid over
/// `[-margin, 1 + margin]^2`, `g = sqrt(n_points)`.
///
/// The per-coordinate jitter amplitude is `jitter_frac` of the grid cell,
/// capped so the realized separation distance cannot drop below
/// `0.8 * target_q`. Deterministic for a fixed seed. Errors when even the
/// unjittered grid cannot reach that floor.
pub fn synthesize_sites<T: Real>(
    n_points: usize,
    margin: T,
    target_q: T,
    jitter_frac: T,
    seed: u64,
) -> Result<SynthesizedSites<T, 2>> {
    let g = (n_points as f64).sqrt().round() as usize;
    if g < 2 || g * g != n_points {
        return Err(Error::BadSiteCount(n_points));
    }
    let cell = (T::one() + real::<T>(2.0) * margin) / T::from_usize(g - 1).expect("side");
    let floor = real::<T>(0.8) * target_q;
    if cell < floor {
        return Err(Error::InfeasibleSeparation {
            target_q: to_f64(target_q),
            n: n_points,
            margin: to_f64(margin),
            feasible: to_f64(cell / real::<T>(0.8)),
        });
    }
    // Worst-case separation of adjacent jittered sites is cell - 2 amp.
    let amp = (jitter_frac * cell).min((cell - floor) / real::<T>(2.0));
    let amp = amp.max(T::zero());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = || -> T {
        if amp > T::zero() {
            let a = to_f64(amp);
            real::<T>(rng.random_range(-a..a))
        } else {
            T::zero()
        }
    };
    let origin = -margin;
    let mut pts = Vec::with_capacity(n_points);
    for row in 0..g {
        for col in 0..g {
            let x = origin + T::from_usize(col).expect("col") * cell + jitter();
            let y = origin + T::from_usize(row).expect("row") * cell + jitter();
            pts.push(Point::xy(x, y));
        }
    }
    let points = PointSet::new(pts)?;
    let realized_q = separation_distance(&points)?;
    debug_assert!(realized_q >= floor - real::<T>(1e-12));
    Ok(SynthesizedSites {
        points,
        realized_q,
        cell,
    })
}
