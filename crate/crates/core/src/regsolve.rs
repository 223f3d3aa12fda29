//! Tikhonov-regularized least squares with the regularization parameter
//! picked by the Morozov discrepancy principle.
//!
//! Two independent routes compute `w = (alpha I + A* A)^{-1} A* b`:
//! [`tikhonov_solve`] factors the stacked matrix `[A; sqrt(alpha) I]` with
//! Householder reflections (its triangular factor is the Cholesky factor of
//! the normal matrix), and [`svd_solve`] applies filter factors
//! `sigma / (sigma^2 + alpha)` in the singular basis.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Lower and upper bracket of the alpha search, in units of `sigma_max^2`.
pub const ALPHA_BRACKET: (f64, f64) = (1e-16, 1e4);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    NormalEquations,
    Svd,
}

/// Boundary outcomes of the discrepancy search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MorozovFlag {
    /// `delta >= ||b||`: the zero density already meets the target.
    TargetAboveDataNorm,
    /// `delta` is below the residual at the smallest bracketed alpha.
    BelowAttainable,
    /// Right-hand side vanishes.
    ZeroData,
    /// Bisection ran out of iterations before meeting the tolerance.
    NotConverged,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensitySolution {
    #[serde(skip)]
    pub w: DVector<Complex64>,
    pub alpha: f64,
    pub residual_norm: f64,
    pub solution_norm: f64,
    pub iterations: usize,
    pub method: SolveMethod,
    pub delta: Option<f64>,
    pub flags: Vec<MorozovFlag>,
}

impl DensitySolution {
    fn new(a: &DMatrix<Complex64>, b: &DVector<Complex64>, w: DVector<Complex64>, alpha: f64, method: SolveMethod) -> Self {
        let residual_norm = (a * &w - b).norm();
        let solution_norm = w.norm();
        Self {
            w,
            alpha,
            residual_norm,
            solution_norm,
            iterations: 0,
            method,
            delta: None,
            flags: Vec::new(),
        }
    }
}

fn check_inputs(a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<()> {
    if a.nrows() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "matrix has {} rows but right-hand side has {} entries",
            a.nrows(),
            b.len()
        )));
    }
    if a.ncols() == 0 {
        return Err(Error::InvalidArgument("system has no unknowns".into()));
    }
    if let Some((idx, _)) = a.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NumericalFailure(format!(
            "non-finite matrix entry at row {}, column {}",
            idx % a.nrows(),
            idx / a.nrows()
        )));
    }
    if let Some(i) = b.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(format!("non-finite right-hand side entry at row {i}")));
    }
    Ok(())
}

/// Upper-triangular factor of `[A; sqrt(alpha) I]` and the reflected rhs.
struct StackedQr {
    r: DMatrix<Complex64>,
    qtb: DVector<Complex64>,
}

/// Householder QR of the stacked matrix, applied to `[b; 0]` on the fly.
fn stacked_qr(a: &DMatrix<Complex64>, b: &DVector<Complex64>, alpha: f64) -> Result<StackedQr> {
    let (m, n) = a.shape();
    let rows = m + n;
    let mut s = DMatrix::<Complex64>::zeros(rows, n);
    s.view_mut((0, 0), (m, n)).copy_from(a);
    let root = alpha.sqrt();
    for j in 0..n {
        s[(m + j, j)] = Complex64::new(root, 0.0);
    }
    let mut rhs = DVector::<Complex64>::zeros(rows);
    rhs.rows_mut(0, m).copy_from(b);

    let data = s.as_mut_slice();
    let mut v = vec![ZERO; rows];
    for j in 0..n {
        let (head, tail) = data.split_at_mut((j + 1) * rows);
        let col = &mut head[j * rows..];
        // the column below row m + j is still zero
        let end = m + j + 1;
        let x = &mut col[j..end];
        let norm = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::NumericalFailure(format!("rank-deficient stacked matrix at column {j}")));
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { Complex64::new(1.0, 0.0) };
        let diag = -phase * norm;
        let len = end - j;
        v[..len].copy_from_slice(x);
        v[0] -= diag;
        let vnorm2: f64 = v[..len].iter().map(|c| c.norm_sqr()).sum();
        x.fill(ZERO);
        x[0] = diag;
        let vv = &v[..len];
        let apply = |target: &mut [Complex64]| {
            let dot: Complex64 = vv.iter().zip(target.iter()).map(|(vi, ti)| vi.conj() * ti).sum();
            let f = dot * (2.0 / vnorm2);
            for (t, vi) in target.iter_mut().zip(vv) {
                *t -= vi * f;
            }
        };
        for c in (j + 1)..n {
            let off = (c - j - 1) * rows;
            apply(&mut tail[off + j..off + end]);
        }
        apply(&mut rhs.as_mut_slice()[j..end]);
    }
    let r = s.view((0, 0), (n, n)).upper_triangle();
    let qtb = rhs.rows(0, n).into_owned();
    Ok(StackedQr { r, qtb })
}

fn back_substitute(r: &DMatrix<Complex64>, y: &DVector<Complex64>) -> DVector<Complex64> {
    let n = r.ncols();
    let mut x = y.clone();
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in (i + 1)..n {
            acc -= r[(i, j)] * x[j];
        }
        x[i] = acc / r[(i, i)];
    }
    x
}

fn forward_substitute_adjoint(r: &DMatrix<Complex64>, y: &DVector<Complex64>) -> DVector<Complex64> {
    let n = r.ncols();
    let mut x = y.clone();
    for i in 0..n {
        let mut acc = x[i];
        for j in 0..i {
            acc -= r[(j, i)].conj() * x[j];
        }
        x[i] = acc / r[(i, i)].conj();
    }
    x
}

/// Residual of the regularized normal equations, `(alpha I + A* A) w - A* b`.
pub fn normal_equation_residual(
    a: &DMatrix<Complex64>,
    b: &DVector<Complex64>,
    w: &DVector<Complex64>,
    alpha: f64,
) -> DVector<Complex64> {
    let aw = a * w;
    a.ad_mul(&aw) + w * Complex64::new(alpha, 0.0) - a.ad_mul(b)
}

/// Tikhonov solution through the Cholesky factor of `alpha I + A* A`,
/// obtained stably from a QR factorization, followed by a few steps of
/// iterative refinement on the normal equations.
pub fn tikhonov_solve(a: &DMatrix<Complex64>, b: &DVector<Complex64>, alpha: f64) -> Result<DensitySolution> {
    check_inputs(a, b)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let qr = stacked_qr(a, b, alpha)?;
    let mut w = back_substitute(&qr.r, &qr.qtb);
    let mut refinements = 0;
    let mut res = normal_equation_residual(a, b, &w, alpha);
    for _ in 0..4 {
        let dw = back_substitute(&qr.r, &forward_substitute_adjoint(&qr.r, &res));
        let candidate = &w - dw;
        let cand_res = normal_equation_residual(a, b, &candidate, alpha);
        if cand_res.norm() >= res.norm() {
            break;
        }
        w = candidate;
        res = cand_res;
        refinements += 1;
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite Tikhonov solution".into()));
    }
    let mut sol = DensitySolution::new(a, b, w, alpha, SolveMethod::NormalEquations);
    sol.iterations = refinements;
    Ok(sol)
}

/// Singular system of `A` together with the projections of one right-hand side.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub sigma: Vec<f64>,
    /// `U* b`.
    pub coeffs: Vec<Complex64>,
    pub v: DMatrix<Complex64>,
    /// Norm of the part of `b` outside the range of `U`.
    pub b_perp: f64,
    pub b_norm: f64,
}

impl Spectrum {
    pub fn new(a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<Self> {
        check_inputs(a, b)?;
        let svd = a.clone().svd(true, true);
        let u = svd.u.ok_or_else(|| Error::NumericalFailure("SVD did not return U".into()))?;
        let v_t = svd.v_t.ok_or_else(|| Error::NumericalFailure("SVD did not return V".into()))?;
        let coeffs_vec = u.ad_mul(b);
        let b_perp = (b - &u * &coeffs_vec).norm();
        Ok(Self {
            sigma: svd.singular_values.iter().copied().collect(),
            coeffs: coeffs_vec.iter().copied().collect(),
            v: v_t.adjoint(),
            b_perp,
            b_norm: b.norm(),
        })
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.iter().copied().fold(0.0, f64::max)
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `||A w_alpha - b||` from the filter factors.
    pub fn residual_norm(&self, alpha: f64) -> f64 {
        let inner: f64 = self
            .sigma
            .iter()
            .zip(&self.coeffs)
            .map(|(s, c)| {
                let f = alpha / (s * s + alpha);
                f * f * c.norm_sqr()
            })
            .sum();
        (inner + self.b_perp * self.b_perp).sqrt()
    }

    /// `||w_alpha||` from the filter factors.
    pub fn solution_norm(&self, alpha: f64) -> f64 {
        self.sigma
            .iter()
            .zip(&self.coeffs)
            .map(|(s, c)| {
                let f = filter_factor(*s, alpha);
                f * f * c.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn solve(&self, alpha: f64) -> DVector<Complex64> {
        let scaled: Vec<Complex64> = self
            .sigma
            .iter()
            .zip(&self.coeffs)
            .map(|(s, c)| c * filter_factor(*s, alpha))
            .collect();
        &self.v * DVector::from_vec(scaled)
    }
}

/// Tikhonov filter factor `sigma / (sigma^2 + alpha)`; plain inverse at `alpha = 0`.
pub fn filter_factor(sigma: f64, alpha: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        sigma / (sigma * sigma + alpha)
    }
}

/// Tikhonov solution via the singular value decomposition. `alpha = 0`
/// gives the pseudo-inverse solution.
pub fn svd_solve(a: &DMatrix<Complex64>, b: &DVector<Complex64>, alpha: f64) -> Result<DensitySolution> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be non-negative, got {alpha}")));
    }
    let spectrum = Spectrum::new(a, b)?;
    Ok(svd_solve_with(&spectrum, a, b, alpha))
}

pub fn svd_solve_with(spectrum: &Spectrum, a: &DMatrix<Complex64>, b: &DVector<Complex64>, alpha: f64) -> DensitySolution {
    DensitySolution::new(a, b, spectrum.solve(alpha), alpha, SolveMethod::Svd)
}

/// Morozov search: bisection on `log10 alpha` for `||A w - b|| = delta`.
pub fn morozov_search(a: &DMatrix<Complex64>, b: &DVector<Complex64>, delta: f64, tol_rel: f64) -> Result<DensitySolution> {
    let spectrum = Spectrum::new(a, b)?;
    morozov_search_with(&spectrum, a, b, delta, tol_rel)
}

/// Morozov search reusing a precomputed [`Spectrum`]; the returned density
/// comes from [`tikhonov_solve`] at the selected alpha.
pub fn morozov_search_with(
    spectrum: &Spectrum,
    a: &DMatrix<Complex64>,
    b: &DVector<Complex64>,
    delta: f64,
    tol_rel: f64,
) -> Result<DensitySolution> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("discrepancy target must be positive, got {delta}")));
    }
    if !(tol_rel > 0.0 && tol_rel < 1.0) {
        return Err(Error::InvalidArgument(format!("tol_rel must lie in (0, 1), got {tol_rel}")));
    }
    let smax2 = spectrum.sigma_max().powi(2);
    if smax2 == 0.0 {
        return Err(Error::NumericalFailure("propagator matrix is identically zero".into()));
    }
    let lo = ALPHA_BRACKET.0 * smax2;
    let hi = ALPHA_BRACKET.1 * smax2;

    let finish = |alpha: f64, iterations: usize, flags: Vec<MorozovFlag>| -> Result<DensitySolution> {
        let mut sol = tikhonov_solve(a, b, alpha)?;
        sol.iterations = iterations;
        sol.delta = Some(delta);
        sol.flags = flags;
        Ok(sol)
    };

    if spectrum.b_norm == 0.0 {
        let mut sol = DensitySolution::new(a, b, DVector::zeros(a.ncols()), lo, SolveMethod::NormalEquations);
        sol.delta = Some(delta);
        sol.flags = vec![MorozovFlag::ZeroData];
        return Ok(sol);
    }
    if delta >= spectrum.b_norm {
        return finish(hi, 0, vec![MorozovFlag::TargetAboveDataNorm]);
    }
    if spectrum.residual_norm(lo) > delta * (1.0 + tol_rel) {
        return finish(lo, 0, vec![MorozovFlag::BelowAttainable]);
    }

    let (mut log_lo, mut log_hi) = (lo.log10(), hi.log10());
    let mut alpha = lo;
    let mut iterations = 0;
    let mut converged = (spectrum.residual_norm(lo) - delta).abs() <= tol_rel * delta;
    while !converged && iterations < 200 {
        iterations += 1;
        let mid = 0.5 * (log_lo + log_hi);
        alpha = 10f64.powf(mid);
        let r = spectrum.residual_norm(alpha);
        if (r - delta).abs() <= tol_rel * delta {
            converged = true;
        } else if r > delta {
            log_hi = mid;
        } else {
            log_lo = mid;
        }
    }
    let flags = if converged { Vec::new() } else { vec![MorozovFlag::NotConverged] };
    finish(alpha, iterations, flags)
}
