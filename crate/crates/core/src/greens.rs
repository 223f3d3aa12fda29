//! Kernels of the two media: the free-space fundamental solution and its
//! far-field kernel, and the normal-mode Green's function of a homogeneous
//! ocean layer with its modal far-field coefficients.
//!
//! The ocean occupies `h <= z <= 0` with a pressure-release surface at `z = 0`
//! and a rigid floor at `z = h < 0`. Mode `p` has vertical profile
//! `sin((2p + 1) pi z / (2h))` and horizontal eigenvalue
//! `a_p = sqrt(1 - (2p + 1)^2 pi^2 / (4 k^2 h^2))`, real for propagating
//! modes and `+i sqrt(...)` for evanescent ones.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::geometry::{BasisSet, FarFieldDirection, Point3};
use crate::specfun::{bessel_j_sequence, hankel1_0, hankel1_0_imag, MAX_ORDER};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const FOUR_PI: f64 = 4.0 * PI;

/// Propagation medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MediumKind {
    FreeSpace,
    /// Ocean layer; `depth` is the (negative) floor coordinate `h`.
    Ocean { depth: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub kind: MediumKind,
    /// Wavenumber in rad/m.
    pub k: f64,
    /// Density in kg/m^3.
    pub rho: f64,
    /// Sound speed in m/s.
    pub c: f64,
}

impl Medium {
    pub fn new(kind: MediumKind, k: f64, rho: f64, c: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!("wavenumber must be positive, got {k}")));
        }
        if !(rho > 0.0 && rho.is_finite() && c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "density and sound speed must be positive, got rho={rho}, c={c}"
            )));
        }
        if let MediumKind::Ocean { depth } = kind {
            if !(depth < 0.0 && depth.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "ocean depth coordinate h must be negative, got {depth}"
                )));
            }
        }
        Ok(Self { kind, k, rho, c })
    }

    pub fn free_space(k: f64) -> Result<Self> {
        Self::new(MediumKind::FreeSpace, k, 1000.0, 1500.0)
    }

    pub fn ocean(depth: f64, k: f64) -> Result<Self> {
        Self::new(MediumKind::Ocean { depth }, k, 1000.0, 1500.0)
    }

    /// Floor coordinate `h` for an ocean, `None` in free space.
    pub fn depth(&self) -> Option<f64> {
        match self.kind {
            MediumKind::FreeSpace => None,
            MediumKind::Ocean { depth } => Some(depth),
        }
    }
}

fn coincident(x: &Point3) -> Error {
    Error::SingularKernel(format!(
        "kernel evaluated at coincident points ({:e}, {:e}, {:e})",
        x.x, x.y, x.z
    ))
}

/// `e^{ik|x-y|} / (4 pi |x-y|)`.
pub fn phi_free(x: &Point3, y: &Point3, k: f64) -> Result<Complex64> {
    let d = x.distance(y);
    if d == 0.0 {
        return Err(coincident(x));
    }
    Ok(Complex64::from_polar(1.0 / (FOUR_PI * d), k * d))
}

/// Normal derivative at `y` of the fundamental solution: `grad_y phi(x, y) . n_y`.
pub fn dphi_dn_free(x: &Point3, y: &Point3, n_y: &Point3, k: f64) -> Result<Complex64> {
    let diff = *y - *x;
    let d = diff.norm();
    if d == 0.0 {
        return Err(coincident(x));
    }
    let phi = Complex64::from_polar(1.0 / (FOUR_PI * d), k * d);
    Ok(phi * Complex64::new(-1.0 / d, k) * (diff.dot(n_y) / d))
}

/// Far-field kernel `e^{-ik xhat . y} / (4 pi)`.
pub fn farfield_kernel_free(direction: &Point3, y: &Point3, k: f64) -> Complex64 {
    Complex64::from_polar(1.0 / FOUR_PI, -k * direction.dot(y))
}

/// Eigen-data of one vertical mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeData {
    pub p: usize,
    /// Horizontal eigenvalue: real in `(0, 1]` or `+i` times a positive real.
    pub a_p: Complex64,
    /// Vertical wavenumber `(2p + 1) pi / (2h)`.
    pub vertical_wavenumber: f64,
    pub propagating: bool,
}

impl ModeData {
    pub fn new(p: usize, k: f64, h: f64) -> Self {
        let beta = (2 * p + 1) as f64 * PI / (2.0 * h);
        let ratio = beta / k;
        let s = 1.0 - ratio * ratio;
        let (a_p, propagating) = if s > 0.0 {
            (Complex64::new(s.sqrt(), 0.0), true)
        } else {
            (Complex64::new(0.0, (-s).sqrt()), false)
        };
        Self {
            p,
            a_p,
            vertical_wavenumber: beta,
            propagating,
        }
    }

    /// `phi_p(z) = sin((2p + 1) pi z / (2h))`.
    pub fn profile(&self, z: f64) -> f64 {
        (self.vertical_wavenumber * z).sin()
    }

    /// `H_0^(1)(k a_p r)` along the proper (decaying) branch.
    pub fn hankel(&self, k: f64, r: f64) -> Result<Complex64> {
        if self.propagating {
            hankel1_0(k * self.a_p.re * r)
        } else if self.a_p.im > 0.0 {
            hankel1_0_imag(k * self.a_p.im * r)
        } else {
            Err(Error::SingularKernel(format!(
                "mode {} sits exactly at cutoff (a_p = 0)",
                self.p
            )))
        }
    }
}

/// Number of modes with real eigenvalue: `#{p : (2p + 1) pi / (2|h|) < k}`.
pub fn propagating_mode_count(k: f64, h: f64) -> usize {
    let mut n = 0;
    while ((2 * n + 1) as f64 * PI / (2.0 * h.abs())) < k {
        n += 1;
    }
    n
}

/// Mode-sum truncations of the ocean kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeTruncation {
    /// Modes kept in the Green's function sum.
    pub p_max: usize,
    /// Highest azimuthal order in the far-field expansion.
    pub q_max: usize,
    /// Propagating modes (the far-field pattern sums over these).
    pub n_prop: usize,
}

impl ModeTruncation {
    pub fn new(p_max: usize, q_max: usize, medium: &Medium) -> Result<Self> {
        let h = medium.depth().ok_or_else(|| {
            Error::InvalidArgument("mode truncation only applies to the ocean medium".into())
        })?;
        let n_prop = propagating_mode_count(medium.k, h);
        if p_max < n_prop {
            return Err(Error::InvalidArgument(format!(
                "p_max = {p_max} must cover all {n_prop} propagating modes"
            )));
        }
        if q_max > MAX_ORDER as usize {
            return Err(Error::InvalidArgument(format!(
                "q_max = {q_max} exceeds supported Bessel order {MAX_ORDER}"
            )));
        }
        Ok(Self {
            p_max,
            q_max,
            n_prop,
        })
    }
}

/// Precomputed ocean normal-mode kernels.
#[derive(Debug, Clone)]
pub struct OceanKernel {
    pub k: f64,
    pub depth: f64,
    pub modes: Vec<ModeData>,
    pub truncation: ModeTruncation,
}

impl OceanKernel {
    pub fn new(medium: &Medium, truncation: ModeTruncation) -> Result<Self> {
        let h = medium.depth().ok_or_else(|| {
            Error::InvalidArgument("ocean kernel requested for a free-space medium".into())
        })?;
        let modes = (0..truncation.p_max)
            .map(|p| ModeData::new(p, medium.k, h))
            .collect();
        Ok(Self {
            k: medium.k,
            depth: h,
            modes,
            truncation,
        })
    }

    /// `G(x, y) = (i / 2h) sum_p phi_p(z) phi_p(z_0) H_0^(1)(k a_p r)`,
    /// `r` the horizontal distance between `x` and `y`.
    pub fn green(&self, x: &Point3, y: &Point3) -> Result<Complex64> {
        let r = x.horizontal_distance(y);
        if r == 0.0 {
            return Err(Error::SingularKernel(format!(
                "ocean Green's function evaluated on the vertical axis of the source \
                 (horizontal range 0 at ({:e}, {:e}))",
                x.x, x.y
            )));
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for mode in &self.modes {
            let weight = mode.profile(x.z) * mode.profile(y.z);
            if !mode.propagating && mode.a_p.im * self.k * r > 745.0 {
                // K_0 underflows for this and every later mode
                break;
            }
            sum += mode.hankel(self.k, r)? * weight;
        }
        Ok(sum * (I / (2.0 * self.depth)))
    }

    fn propagating_mode(&self, p: usize) -> Result<ModeData> {
        let mode = self.modes.get(p).copied().ok_or_else(|| {
            Error::InvalidArgument(format!("mode {p} is beyond the truncation"))
        })?;
        if p >= self.truncation.n_prop || !mode.propagating {
            return Err(Error::InvalidArgument(format!(
                "far-field coefficient requested for evanescent mode {p}"
            )));
        }
        Ok(mode)
    }

    /// Azimuthal moments `beta_q = J_q(k a_p r') phi_p(z') cos(q theta')` and
    /// `gamma_q` (same with `sin`) of a source point, `q = 0..=q_max`.
    pub fn azimuthal_moments(&self, p: usize, y: &Point3) -> Result<(Vec<f64>, Vec<f64>)> {
        let mode = self.propagating_mode(p)?;
        let (r_src, theta_src, z_src) = y.to_cylindrical();
        let bessel = bessel_j_sequence(self.truncation.q_max as u32, self.k * mode.a_p.re * r_src)?;
        let profile_src = mode.profile(z_src);
        let beta = bessel
            .iter()
            .enumerate()
            .map(|(q, jq)| jq * profile_src * (q as f64 * theta_src).cos())
            .collect();
        let gamma = bessel
            .iter()
            .enumerate()
            .map(|(q, jq)| jq * profile_src * (q as f64 * theta_src).sin())
            .collect();
        Ok((beta, gamma))
    }

    /// Depth-free modal amplitude `g_p(theta, z) / phi_p(z)` from azimuthal moments.
    pub fn modal_amplitude(&self, theta: f64, beta: &[f64], gamma: &[f64]) -> Complex64 {
        modal_series(self.depth, theta, beta, gamma)
    }

    /// Per-unit-density contribution of a source point `y` to the far-field
    /// coefficient `g_p(theta, z)` of propagating mode `p`.
    pub fn farfield_mode_kernel(&self, p: usize, theta: f64, z: f64, y: &Point3) -> Result<Complex64> {
        let (beta, gamma) = self.azimuthal_moments(p, y)?;
        Ok(self.modal_amplitude(theta, &beta, &gamma) * self.modes[p].profile(z))
    }

    /// Far-field pattern kernel: sum of [`Self::farfield_mode_kernel`] over propagating modes.
    pub fn farfield_kernel(&self, theta: f64, z: f64, y: &Point3) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        for p in 0..self.truncation.n_prop {
            sum += self.farfield_mode_kernel(p, theta, z, y)?;
        }
        Ok(sum)
    }
}

/// Ocean Green's function with an ad hoc kernel; prefer [`OceanKernel`] in loops.
pub fn green_ocean(x: &Point3, y: &Point3, medium: &Medium, trunc: &ModeTruncation) -> Result<Complex64> {
    OceanKernel::new(medium, *trunc)?.green(x, y)
}

fn check_density(basis: &BasisSet, density: &[Complex64]) -> Result<()> {
    if density.len() != basis.len() {
        return Err(Error::InvalidArgument(format!(
            "density has {} coefficients but the basis has {} patches",
            density.len(),
            basis.len()
        )));
    }
    Ok(())
}

fn modal_series<T>(depth: f64, theta: f64, beta: &[T], gamma: &[T]) -> Complex64
where
    T: Copy + Into<Complex64>,
{
    let mut series = Complex64::new(0.0, 0.0);
    for (q, (b, g)) in beta.iter().zip(gamma).enumerate() {
        let qf = q as f64;
        let eps = if q == 0 { 1.0 } else { 2.0 };
        let bracket: Complex64 = (*b).into() * (qf * theta).cos() + (*g).into() * (qf * theta).sin();
        let phase = Complex64::from_polar(1.0, -(qf + 0.5) * FRAC_PI_2);
        series += phase * I * (eps / (2.0 * depth)) * bracket;
    }
    series * (2.0 / PI).sqrt()
}

/// Density-weighted azimuthal moments of every propagating mode; evaluates
/// far-field coefficients in any direction without touching the basis again.
#[derive(Debug, Clone)]
pub struct ModalExpansion {
    pub depth: f64,
    pub modes: Vec<ModeData>,
    pub beta: Vec<Vec<Complex64>>,
    pub gamma: Vec<Vec<Complex64>>,
}

impl ModalExpansion {
    pub fn new(basis: &BasisSet, density: &[Complex64], kernel: &OceanKernel) -> Result<Self> {
        check_density(basis, density)?;
        let n_prop = kernel.truncation.n_prop;
        let nq = kernel.truncation.q_max + 1;
        let mut beta = vec![vec![Complex64::new(0.0, 0.0); nq]; n_prop];
        let mut gamma = beta.clone();
        for p in 0..n_prop {
            for (patch, w) in basis.patches.iter().zip(density) {
                for node in &patch.nodes {
                    let (b, g) = kernel.azimuthal_moments(p, &node.point)?;
                    let scale = *w * node.weight;
                    for q in 0..nq {
                        beta[p][q] += scale * b[q];
                        gamma[p][q] += scale * g[q];
                    }
                }
            }
        }
        Ok(Self {
            depth: kernel.depth,
            modes: kernel.modes[..n_prop].to_vec(),
            beta,
            gamma,
        })
    }

    pub fn n_prop(&self) -> usize {
        self.modes.len()
    }

    /// `g_p(theta, z) / phi_p(z)`.
    pub fn amplitude(&self, p: usize, theta: f64) -> Complex64 {
        modal_series(self.depth, theta, &self.beta[p], &self.gamma[p])
    }

    pub fn g_p(&self, p: usize, theta: f64, z: f64) -> Complex64 {
        self.amplitude(p, theta) * self.modes[p].profile(z)
    }

    pub fn u_infinity(&self, theta: f64, z: f64) -> Complex64 {
        (0..self.n_prop()).map(|p| self.g_p(p, theta, z)).sum()
    }
}

/// Modal far-field coefficient `g_p(theta, z)` of a density.
pub fn ocean_g_p(
    p: usize,
    theta: f64,
    z: f64,
    basis: &BasisSet,
    density: &[Complex64],
    kernel: &OceanKernel,
) -> Result<Complex64> {
    check_density(basis, density)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for (patch, w) in basis.patches.iter().zip(density) {
        for node in &patch.nodes {
            sum += *w * node.weight * kernel.farfield_mode_kernel(p, theta, z, &node.point)?;
        }
    }
    Ok(sum)
}

/// Ocean far-field pattern `u_inf(theta, z) = sum over propagating p of g_p(theta, z)`.
pub fn u_infinity_ocean(
    theta: f64,
    z: f64,
    basis: &BasisSet,
    density: &[Complex64],
    kernel: &OceanKernel,
) -> Result<Complex64> {
    if !(z > kernel.depth && z < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "far-field depth z = {z} must lie in ({}, 0)",
            kernel.depth
        )));
    }
    Ok(ModalExpansion::new(basis, density, kernel)?.u_infinity(theta, z))
}

/// The near- and far-field kernels of one medium.
#[derive(Debug, Clone)]
pub enum MediumKernel {
    Free { k: f64 },
    Ocean(OceanKernel),
}

impl MediumKernel {
    pub fn new(medium: &Medium, truncation: Option<ModeTruncation>) -> Result<Self> {
        match medium.kind {
            MediumKind::FreeSpace => Ok(MediumKernel::Free { k: medium.k }),
            MediumKind::Ocean { .. } => {
                let t = truncation.ok_or_else(|| {
                    Error::InvalidArgument("ocean medium needs a mode truncation".into())
                })?;
                Ok(MediumKernel::Ocean(OceanKernel::new(medium, t)?))
            }
        }
    }

    pub fn k(&self) -> f64 {
        match self {
            MediumKernel::Free { k } => *k,
            MediumKernel::Ocean(o) => o.k,
        }
    }

    /// Field at `x` of a unit point source at `y`.
    pub fn near(&self, x: &Point3, y: &Point3) -> Result<Complex64> {
        match self {
            MediumKernel::Free { k } => phi_free(x, y, *k),
            MediumKernel::Ocean(o) => o.green(x, y),
        }
    }

    /// Far-field pattern in `direction` of a unit point source at `y`.
    pub fn far(&self, direction: &FarFieldDirection, y: &Point3) -> Result<Complex64> {
        match (self, direction) {
            (MediumKernel::Free { k }, FarFieldDirection::Free(d)) => Ok(farfield_kernel_free(d, y, *k)),
            (MediumKernel::Ocean(o), FarFieldDirection::Ocean { theta, z }) => o.farfield_kernel(*theta, *z, y),
            _ => Err(Error::InvalidArgument(
                "far-field direction does not match the medium".into(),
            )),
        }
    }
}

/// Closed form of the azimuthal series via Jacobi-Anger, kept for cross-checks:
/// `sum_q eps_q e^{-i q pi/2} J_q(x) cos(q t) = e^{-i x cos t}`.
#[doc(hidden)]
pub fn jacobi_anger_mode_kernel(kernel: &OceanKernel, p: usize, theta: f64, z: f64, y: &Point3) -> Complex64 {
    let mode = kernel.modes[p];
    let (r_src, theta_src, z_src) = y.to_cylindrical();
    let x = kernel.k * mode.a_p.re * r_src;
    let plane = Complex64::from_polar(1.0, -x * (theta - theta_src).cos());
    (2.0 / PI).sqrt()
        * Complex64::from_polar(1.0, -FRAC_PI_4)
        * (I / (2.0 * kernel.depth))
        * mode.profile(z)
        * mode.profile(z_src)
        * plane
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_sphere_patch_basis, PatchQuadrature, SourceGeometry};
    use crate::quadrature::gauss_legendre_on;

    fn reference_ocean() -> (Medium, ModeTruncation) {
        let m = Medium::ocean(-20.0, 10.0).unwrap();
        let t = ModeTruncation::new(100, 100, &m).unwrap();
        (m, t)
    }

    #[test]
    fn phi_free_basic() {
        let x = Point3::new(0.3, -0.2, 0.5);
        let y = Point3::new(-0.1, 0.4, 0.0);
        let v = phi_free(&x, &y, 7.0).unwrap();
        assert!((v.norm() - 1.0 / (4.0 * PI * x.distance(&y))).abs() < 1e-15);
        assert_eq!(v, phi_free(&y, &x, 7.0).unwrap());
        let v = phi_free(&Point3::new(1.0, 0.0, 0.0), &Point3::ORIGIN, 10.0).unwrap();
        let expect = Complex64::new(10f64.cos(), 10f64.sin()) / (4.0 * PI);
        assert!((v - expect).norm() < 1e-15);
        assert!((v.re + 0.066771).abs() < 1e-5 && (v.im + 0.043292).abs() < 1e-5);
        assert!(matches!(phi_free(&x, &x, 1.0), Err(Error::SingularKernel(_))));
    }

    #[test]
    fn normal_derivative_matches_finite_difference() {
        let x = Point3::new(0.03, 0.01, -0.02);
        let y = Point3::new(0.002, -0.004, 0.009);
        let n = Point3::new(0.3, -0.5, 0.8).normalized();
        let k = 10.0;
        let step = 1e-5 * x.distance(&y);
        let fd = (phi_free(&x, &(y + n * step), k).unwrap() - phi_free(&x, &(y - n * step), k).unwrap())
            / (2.0 * step);
        let exact = dphi_dn_free(&x, &y, &n, k).unwrap();
        assert!((fd - exact).norm() <= 1e-6 * exact.norm());
        let flipped = dphi_dn_free(&x, &y, &-n, k).unwrap();
        assert!((flipped + exact).norm() < 1e-15 * exact.norm());
        // normal orthogonal to y - x
        let d = (y - x).normalized();
        let ortho = Point3::new(d.y, -d.x, 0.0).normalized();
        assert!(dphi_dn_free(&x, &y, &ortho, k).unwrap().norm() < 1e-12);
    }

    #[test]
    fn farfield_kernel_free_limits() {
        let d = Point3::new(0.5, 0.5, -std::f64::consts::FRAC_1_SQRT_2);
        let v = farfield_kernel_free(&d, &Point3::ORIGIN, 10.0);
        assert!((v - Complex64::new(1.0 / (4.0 * PI), 0.0)).norm() < 1e-16);
        let y = Point3::new(0.004, -0.007, 0.002);
        let far = farfield_kernel_free(&d, &y, 10.0);
        assert!((far.norm() - 1.0 / (4.0 * PI)).abs() < 1e-16);
        let big = 1e4;
        let approx = phi_free(&(d * big), &y, 10.0).unwrap() * big * Complex64::from_polar(1.0, -10.0 * big);
        assert!((approx - far).norm() <= 1e-3 * far.norm());
    }

    fn laplacian_residual(f: impl Fn(&Point3) -> Complex64, x: &Point3, step: f64, k: f64) -> (Complex64, Complex64) {
        let c = f(x);
        let mut lap = c * -6.0;
        for e in [Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0), Point3::new(0.0, 0.0, 1.0)] {
            lap += f(&(*x + e * step)) + f(&(*x - e * step));
        }
        (lap / (step * step) + c * k * k, c)
    }

    #[test]
    fn helmholtz_residual_free() {
        let k = 10.0;
        let y = Point3::new(0.01, 0.0, -0.005);
        for x in [Point3::new(0.2, 0.1, 0.0), Point3::new(-0.05, 0.3, 0.2), Point3::new(1.0, 2.0, -1.0)] {
            let (res, c) = laplacian_residual(|p| phi_free(p, &y, k).unwrap(), &x, 1e-3, k);
            assert!(res.norm() <= 1e-2 * k * k * c.norm());
        }
    }

    #[test]
    fn helmholtz_residual_ocean() {
        let (m, t) = reference_ocean();
        let kern = OceanKernel::new(&m, t).unwrap();
        let y = Point3::new(0.003, -0.004, -10.002);
        for x in [Point3::new(0.5, 0.2, -10.1), Point3::new(-2.0, 1.0, -5.0), Point3::new(30.0, 5.0, -12.0)] {
            let (res, c) = laplacian_residual(|p| kern.green(p, &y).unwrap(), &x, 1e-3, m.k);
            assert!(res.norm() <= 1e-2 * m.k * m.k * c.norm(), "{x:?}: {res} vs {c}");
        }
    }

    #[test]
    fn ocean_boundary_conditions() {
        let (m, t) = reference_ocean();
        let kern = OceanKernel::new(&m, t).unwrap();
        let y = Point3::new(0.0, 0.0, -10.0);
        let h = m.depth().unwrap();
        for (rx, ry) in [(0.5, 0.0), (3.0, 1.0), (40.0, -7.0)] {
            let at_surface = kern.green(&Point3::new(rx, ry, 0.0), &y).unwrap();
            assert_eq!(at_surface, Complex64::new(0.0, 0.0));
            // second-order one-sided difference into the layer
            let step = 1e-4;
            let g = |z: f64| kern.green(&Point3::new(rx, ry, z), &y).unwrap();
            let d = (g(h) * -3.0 + g(h + step) * 4.0 - g(h + 2.0 * step)) / (2.0 * step);
            let scale = (0..=200)
                .map(|i| g(h * i as f64 / 200.0).norm())
                .fold(0.0, f64::max);
            assert!(d.norm() <= 1e-6 * scale, "r=({rx},{ry}): {} vs {scale}", d.norm());
        }
    }

    #[test]
    fn depth_reciprocity() {
        let (m, t) = reference_ocean();
        let kern = OceanKernel::new(&m, t).unwrap();
        let x = Point3::new(0.7, 0.2, -3.0);
        let y = Point3::new(0.1, -0.1, -14.0);
        let a = kern.green(&x, &y).unwrap();
        let b = kern.green(&Point3::new(x.x, x.y, y.z), &Point3::new(y.x, y.y, x.z)).unwrap();
        assert!((a - b).norm() <= 1e-15 * a.norm());
        assert!(matches!(kern.green(&Point3::new(0.1, -0.1, -2.0), &y), Err(Error::SingularKernel(_))));
    }

    #[test]
    fn mode_eigen_identities() {
        let (k, h) = (10.0, -20.0);
        assert_eq!(propagating_mode_count(k, h), 64);
        let mut prev = f64::INFINITY;
        let mut real = 0;
        for p in 0..100 {
            let m = ModeData::new(p, k, h);
            let a2 = m.a_p * m.a_p;
            let s = ((2 * p + 1) as f64 * PI).powi(2) / (4.0 * k * k * h * h);
            assert!((a2 + s - Complex64::new(1.0, 0.0)).norm() < 1e-14);
            assert_eq!(m.profile(0.0), 0.0);
            assert!((m.profile(h).abs() - 1.0).abs() < 1e-15);
            if m.propagating {
                assert!(m.a_p.re < prev);
                prev = m.a_p.re;
                real += 1;
            } else {
                assert!(m.a_p.im > 0.0);
            }
        }
        assert_eq!(real, 64);
    }

    #[test]
    fn mode_orthogonality() {
        let h = -20.0;
        let (z, w) = gauss_legendre_on(h, 0.0, 2000);
        for p in 0..=10 {
            for q in 0..=10 {
                let mp = ModeData::new(p, 10.0, h);
                let mq = ModeData::new(q, 10.0, h);
                let s: f64 = z.iter().zip(&w).map(|(z, w)| w * mp.profile(*z) * mq.profile(*z)).sum();
                let expect = if p == q { h.abs() / 2.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn truncation_stability_at_range() {
        let m = Medium::ocean(-20.0, 10.0).unwrap();
        let k100 = OceanKernel::new(&m, ModeTruncation::new(100, 100, &m).unwrap()).unwrap();
        let k150 = OceanKernel::new(&m, ModeTruncation::new(150, 100, &m).unwrap()).unwrap();
        let y = Point3::new(0.0, 0.005, -10.0);
        for x in [Point3::new(1.0, 0.0, -10.0), Point3::new(-1.5, 0.5, -9.7), Point3::new(20.0, 3.0, -4.0)] {
            let a = k100.green(&x, &y).unwrap();
            let b = k150.green(&x, &y).unwrap();
            assert!((a - b).norm() <= 1e-6 * b.norm(), "{x:?}");
        }
    }

    #[test]
    fn truncation_requirements() {
        let m = Medium::ocean(-20.0, 10.0).unwrap();
        assert!(ModeTruncation::new(50, 100, &m).is_err());
        assert!(ModeTruncation::new(100, 100, &Medium::free_space(10.0).unwrap()).is_err());
        assert!(Medium::ocean(20.0, 10.0).is_err());
        assert!(Medium::free_space(0.0).is_err());
    }

    fn ocean_basis() -> BasisSet {
        let g = SourceGeometry::new(Point3::new(0.0, 0.0, -10.0), 0.01, 0.015).unwrap();
        make_sphere_patch_basis(&g, 13, 18, PatchQuadrature::Centroid).unwrap()
    }

    #[test]
    fn g_p_linearity_and_zero() {
        let (m, t) = reference_ocean();
        let kern = OceanKernel::new(&m, t).unwrap();
        let basis = ocean_basis();
        let zero = vec![Complex64::new(0.0, 0.0); basis.len()];
        assert_eq!(ocean_g_p(0, PI, -10.0, &basis, &zero, &kern).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(u_infinity_ocean(PI, -10.0, &basis, &zero, &kern).unwrap(), Complex64::new(0.0, 0.0));
        assert!(ocean_g_p(64, PI, -10.0, &basis, &zero, &kern).is_err());
        assert!(u_infinity_ocean(PI, -25.0, &basis, &zero, &kern).is_err());
    }

    #[test]
    fn azimuthal_series_tail_and_closed_form() {
        let (m, t) = reference_ocean();
        let kern = OceanKernel::new(&m, t).unwrap();
        let basis = ocean_basis();
        for p in [0usize, 10, 40, 63] {
            let a = kern.modes[p].a_p.re;
            for patch in basis.patches.iter().step_by(17) {
                let (r, _, _) = patch.centroid.to_cylindrical();
                let x = m.k * a * r;
                assert!(x <= 0.1 + 1e-12);
                let js = bessel_j_sequence(100, x).unwrap();
                let max = js.iter().map(|v| v.abs()).fold(0.0, f64::max);
                assert!(js[100].abs() / max <= 1e-10);
                for theta in [0.0, PI / 4.0, PI, 5.0] {
                    let series = kern.farfield_mode_kernel(p, theta, -10.0, &patch.centroid).unwrap();
                    let closed = jacobi_anger_mode_kernel(&kern, p, theta, -10.0, &patch.centroid);
                    assert!((series - closed).norm() <= 1e-13 * closed.norm().max(1e-300));
                }
            }
        }
    }

    #[test]
    fn modal_expansion_matches_direct_quadrature() {
        let (m, t) = reference_ocean();
        let kern = OceanKernel::new(&m, t).unwrap();
        let basis = ocean_basis();
        let density: Vec<Complex64> = (0..basis.len())
            .map(|j| Complex64::new((j as f64 * 0.37).sin(), (j as f64 * 0.11).cos()))
            .collect();
        let exp = ModalExpansion::new(&basis, &density, &kern).unwrap();
        for (p, theta, z) in [(0usize, PI, -10.0), (7, 0.3, -4.0), (63, PI / 4.0, -17.5)] {
            let direct = ocean_g_p(p, theta, z, &basis, &density, &kern).unwrap();
            assert!((exp.g_p(p, theta, z) - direct).norm() <= 1e-12 * direct.norm().max(1e-300));
        }
    }
}
