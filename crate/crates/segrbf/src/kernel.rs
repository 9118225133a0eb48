//! Positive definite radial kernels, Newton-form interpolation, and
//! native-space norm evaluation.
//!
//! Interpolants are fitted through a diagonally pivoted triangular
//! factorization of the kernel matrix (the Newton basis). The Euclidean norm
//! of the Newton coefficients equals the native-space norm of the
//! interpolant, which is what the classification phases use as their
//! locality indicator. Pivoting stops once the remaining diagonal drops
//! below a rank tolerance, dropping numerically dependent centers instead of
//! regularizing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::scalar::{real, to_f64, Real};

/// Residual tolerance scale: a fit is considered interpolating when the
/// maximum residual at the centers is below `1e-8 * (1 + max|f_i|)`.
pub const TOL_RES_SCALE: f64 = 1e-8;
/// Pivot tolerance scale: factorization stops when the largest remaining
/// diagonal entry falls below `1e-12 * N`.
pub const TOL_PIV_SCALE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    InverseMultiquadric,
    Gaussian,
}

/// Radial kernel `K(x, y) = phi(|x - y|)` with `phi(0) = 1` and `phi`
/// strictly decreasing:
///
/// * inverse multiquadric: `phi(r) = (1 + 2 r^2 / delta^2)^(-1/2)`
/// * Gaussian: `phi(r) = exp(-r^2 / delta^2)`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel<T> {
    family: KernelFamily,
    delta: T,
}

impl<T: Real> Kernel<T> {
    pub fn new(family: KernelFamily, delta: T) -> Result<Self> {
        if !delta.is_finite() || delta <= T::zero() {
            return Err(Error::BadShapeParameter(to_f64(delta)));
        }
        Ok(Kernel { family, delta })
    }

    pub fn inverse_multiquadric(delta: T) -> Result<Self> {
        Kernel::new(KernelFamily::InverseMultiquadric, delta)
    }

    pub fn gaussian(delta: T) -> Result<Self> {
        Kernel::new(KernelFamily::Gaussian, delta)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// `phi(r)` for `r >= 0`.
    pub fn value(&self, r: T) -> Result<T> {
        if r.is_nan() || r < T::zero() {
            return Err(Error::NegativeRadius(to_f64(r)));
        }
        Ok(self.at_dist2(r * r))
    }

    /// `phi` as a function of the squared distance; hot path, assumes
    /// `d2 >= 0`.
    #[inline]
    pub(crate) fn at_dist2(&self, d2: T) -> T {
        let s = d2 / (self.delta * self.delta);
        match self.family {
            KernelFamily::InverseMultiquadric => (T::one() + real::<T>(2.0) * s).sqrt().recip(),
            KernelFamily::Gaussian => (-s).exp(),
        }
    }

    #[inline]
    pub(crate) fn pair<const D: usize>(&self, p: &Point<T, D>, q: &Point<T, D>) -> T {
        self.at_dist2(p.dist2(q))
    }
}

/// Dense kernel matrix `A_ij = K(x_i, x_j)`; symmetric with unit diagonal.
pub fn gram_matrix<T: Real, const D: usize>(
    kernel: &Kernel<T>,
    pts: &[Point<T, D>],
) -> Vec<Vec<T>> {
    let n = pts.len();
    let mut a = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        a[i][i] = T::one();
        for j in 0..i {
            let v = kernel.pair(&pts[i], &pts[j]);
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    a
}

/// Kernel interpolant in Newton form.
///
/// Holds both coefficient representations: `newton_coeffs` against the
/// triangular Newton basis (their Euclidean norm is the native-space norm)
/// and `standard_coeffs` against the kernel translates of the retained
/// centers. Centers dropped by pivot truncation contribute to neither.
#[derive(Clone, Debug)]
pub struct Interpolant<T, const D: usize = 2> {
    kernel: Kernel<T>,
    centers: Vec<Point<T, D>>,
    values: Vec<T>,
    /// Permutation of `0..centers.len()`; the first `rank` entries are the
    /// retained centers in pivot order.
    pivot_order: Vec<usize>,
    rank: usize,
    /// Lower-triangular factor, packed by rows: row `i` holds `i + 1`
    /// entries starting at `i (i + 1) / 2`.
    lower: Vec<T>,
    newton_coeffs: Vec<T>,
    standard_coeffs: Vec<T>,
    max_residual: T,
}

/// Fits the kernel interpolant of `(pts, vals)` via the pivoted Newton
/// factorization. Requires pairwise distinct points and matching lengths.
pub fn fit_interpolant<T: Real, const D: usize>(
    kernel: &Kernel<T>,
    pts: &[Point<T, D>],
    vals: &[T],
) -> Result<Interpolant<T, D>> {
    assert_eq!(pts.len(), vals.len(), "one value per center");
    let n = pts.len();
    if n == 0 {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let tol_piv = real::<T>(TOL_PIV_SCALE) * T::from_usize(n).expect("set size");

    let mut perm: Vec<usize> = (0..n).collect();
    // Remaining Schur-complement diagonal (squared power function).
    let mut diag = vec![kernel.at_dist2(T::zero()); n];
    let mut l = vec![T::zero(); n * n];
    let mut rank = n;

    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if diag[i] > diag[p] {
                p = i;
            }
        }
        if diag[p].is_nan() || diag[p] <= tol_piv {
            if k == 0 {
                return Err(Error::RankDeficient {
                    pivot: to_f64(diag[p]),
                    index: perm[p] + 1,
                });
            }
            rank = k;
            break;
        }
        if p != k {
            perm.swap(k, p);
            diag.swap(k, p);
            for j in 0..k {
                l.swap(k * n + j, p * n + j);
            }
        }
        let pivot = diag[k].sqrt();
        l[k * n + k] = pivot;
        for i in k + 1..n {
            let a = kernel.pair(&pts[perm[i]], &pts[perm[k]]);
            let mut s = a;
            for j in 0..k {
                s -= l[i * n + j] * l[k * n + j];
            }
            let lik = s / pivot;
            l[i * n + k] = lik;
            diag[i] -= lik * lik;
        }
    }

    // Newton coefficients: forward solve L b = f on the retained centers.
    let mut newton = vec![T::zero(); rank];
    for i in 0..rank {
        let mut s = vals[perm[i]];
        for j in 0..i {
            s -= l[i * n + j] * newton[j];
        }
        newton[i] = s / l[i * n + i];
    }
    // Standard coefficients: backward solve L^T c = b.
    let mut standard = vec![T::zero(); rank];
    for i in (0..rank).rev() {
        let mut s = newton[i];
        for j in i + 1..rank {
            s -= l[j * n + i] * standard[j];
        }
        standard[i] = s / l[i * n + i];
    }

    let mut lower = Vec::with_capacity(rank * (rank + 1) / 2);
    for i in 0..rank {
        lower.extend_from_slice(&l[i * n..i * n + i + 1]);
    }

    let mut interp = Interpolant {
        kernel: *kernel,
        centers: pts.to_vec(),
        values: vals.to_vec(),
        pivot_order: perm,
        rank,
        lower,
        newton_coeffs: newton,
        standard_coeffs: standard,
        max_residual: T::zero(),
    };
    let mut res = T::zero();
    for (p, v) in interp.centers.iter().zip(interp.values.iter()) {
        let r = (interp.eval(p) - *v).abs();
        if r > res {
            res = r;
        }
    }
    interp.max_residual = res;
    Ok(interp)
}

impl<T: Real, const D: usize> Interpolant<T, D> {
    /// Evaluates through the standard representation
    /// `s(x) = sum_j c_j K(x, z_j)` over the retained centers.
    pub fn eval(&self, p: &Point<T, D>) -> T {
        let mut s = T::zero();
        for (j, c) in self.standard_coeffs.iter().enumerate() {
            s += *c * self.kernel.pair(p, &self.centers[self.pivot_order[j]]);
        }
        s
    }

    /// Evaluates through the Newton representation (forward substitution of
    /// the kernel column); agrees with [`Interpolant::eval`] up to rounding.
    pub fn eval_newton(&self, p: &Point<T, D>) -> T {
        let mut nu = vec![T::zero(); self.rank];
        for i in 0..self.rank {
            let row = &self.lower[i * (i + 1) / 2..];
            let mut s = self.kernel.pair(p, &self.centers[self.pivot_order[i]]);
            for j in 0..i {
                s -= row[j] * nu[j];
            }
            nu[i] = s / row[i];
        }
        nu.iter()
            .zip(self.newton_coeffs.iter())
            .map(|(v, b)| *v * *b)
            .sum()
    }

    /// Native-space norm `|s|_K`, the Euclidean norm of the Newton
    /// coefficients.
    pub fn native_norm(&self) -> T {
        self.newton_coeffs
            .iter()
            .map(|b| *b * *b)
            .sum::<T>()
            .sqrt()
    }

    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    pub fn centers(&self) -> &[Point<T, D>] {
        &self.centers
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Number of retained centers after pivot truncation.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn pivot_order(&self) -> &[usize] {
        &self.pivot_order
    }

    pub fn newton_coeffs(&self) -> &[T] {
        &self.newton_coeffs
    }

    /// Coefficients against `K(., z_j)`, aligned with
    /// `pivot_order()[..rank()]`.
    pub fn standard_coeffs(&self) -> &[T] {
        &self.standard_coeffs
    }

    /// Largest interpolation residual `|s(x_i) - f_i|` over all input
    /// centers, including any dropped by truncation.
    pub fn max_residual(&self) -> T {
        self.max_residual
    }

    /// Residual tolerance for this fit's data scale.
    pub fn residual_tol(&self) -> T {
        let scale = self
            .values
            .iter()
            .fold(T::zero(), |m, v| if v.abs() > m { v.abs() } else { m });
        real::<T>(TOL_RES_SCALE) * (T::one() + scale)
    }
}
