//! Forward evaluation of a solved density: fields, boundary inputs on the
//! physical source, far-field patterns, radiated power and error metrics.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{
    linspace, sector_points, BasisSet, ControlRegion, FarFieldDirection, Point3, SourceGeometry, SurfaceNode,
};
use crate::greens::{dphi_dn_free, farfield_kernel_free, MediumKernel, ModalExpansion, OceanKernel};
use crate::quadrature::gauss_legendre_on;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Relative-error floor: prescriptions at or below it count as nulls.
pub const NULL_FLOOR: f64 = 1e-12;

/// Reference power for decibel levels, in watts.
pub const REFERENCE_POWER: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub point: Point3,
    pub value: Complex64,
}

fn check_density(basis: &BasisSet, density: &[Complex64]) -> Result<()> {
    if density.len() != basis.len() {
        return Err(Error::InvalidArgument(format!(
            "density has {} coefficients but the basis has {} patches",
            density.len(),
            basis.len()
        )));
    }
    if density.iter().any(|w| !w.is_finite()) {
        return Err(Error::NumericalFailure("density has non-finite coefficients".into()));
    }
    Ok(())
}

/// Single-layer potential of the density at `x`.
pub fn single_layer(kernel: &MediumKernel, basis: &BasisSet, density: &[Complex64], x: &Point3) -> Result<Complex64> {
    let mut acc = ZERO;
    for (patch, w) in basis.patches.iter().zip(density) {
        if *w == ZERO {
            continue;
        }
        let mut local = ZERO;
        for node in &patch.nodes {
            local += kernel.near(x, &node.point)? * node.weight;
        }
        acc += local * w;
    }
    Ok(acc)
}

fn warn_if_near(basis: &BasisSet, x: &Point3) {
    let clearance = x.distance(&basis.center) - basis.radius;
    let diameter = basis.patch_diameter();
    if clearance < diameter {
        log::warn!(
            "field point ({:e}, {:e}, {:e}) is {clearance:e} m from the fictitious sphere, \
             within one patch diameter ({diameter:e} m); quadrature is near-singular",
            x.x,
            x.y,
            x.z
        );
    }
}

/// Field of the density at each point.
pub fn eval_field(
    kernel: &MediumKernel,
    basis: &BasisSet,
    density: &[Complex64],
    points: &[Point3],
) -> Result<Vec<FieldSample>> {
    check_density(basis, density)?;
    points
        .par_iter()
        .map(|x| {
            warn_if_near(basis, x);
            Ok(FieldSample {
                point: *x,
                value: single_layer(kernel, basis, density, x)?,
            })
        })
        .collect()
}

/// Normal derivative of the single layer at `x` along `n`.
fn normal_derivative(
    kernel: &MediumKernel,
    basis: &BasisSet,
    density: &[Complex64],
    x: &Point3,
    n: &Point3,
    step: f64,
) -> Result<(Complex64, Complex64)> {
    match kernel {
        MediumKernel::Free { k } => {
            let mut u = ZERO;
            let mut du = ZERO;
            for (patch, w) in basis.patches.iter().zip(density) {
                for node in &patch.nodes {
                    let ww = *w * node.weight;
                    u += kernel.near(x, &node.point)? * ww;
                    // gradient in x equals the y-derivative with the roles swapped
                    du += dphi_dn_free(&node.point, x, n, *k)? * ww;
                }
            }
            Ok((u, du))
        }
        MediumKernel::Ocean(_) => {
            let plus = single_layer(kernel, basis, density, &(*x + *n * step))?;
            let minus = single_layer(kernel, basis, density, &(*x - *n * step))?;
            let centre = single_layer(kernel, basis, density, x)?;
            Ok((centre, (plus - minus) / (2.0 * step)))
        }
    }
}

/// Pressure and scaled normal velocity at one node of the physical surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryNode {
    pub point: Point3,
    pub normal: Point3,
    pub pressure: Complex64,
    pub velocity: Complex64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryInput {
    pub radius: f64,
    pub nodes: Vec<BoundaryNode>,
}

impl BoundaryInput {
    pub fn max_velocity(&self) -> f64 {
        self.nodes.iter().map(|n| n.velocity.norm()).fold(0.0, f64::max)
    }

    pub fn max_pressure(&self) -> f64 {
        self.nodes.iter().map(|n| n.pressure.norm()).fold(0.0, f64::max)
    }
}

/// Pressure `p = u` and normal velocity `v = -i/(rho c k) du/dn` on the
/// physical surface. The ocean derivative uses a central difference of step
/// `1e-4 * radius` along the normal.
#[allow(clippy::too_many_arguments)]
pub fn boundary_inputs(
    kernel: &MediumKernel,
    rho: f64,
    c: f64,
    source: &SourceGeometry,
    basis: &BasisSet,
    density: &[Complex64],
    grid: &[SurfaceNode],
) -> Result<BoundaryInput> {
    check_density(basis, density)?;
    let k = kernel.k();
    let scale = Complex64::new(0.0, -1.0 / (rho * c * k));
    let step = 1e-4 * source.physical_radius;
    let nodes = grid
        .par_iter()
        .map(|node| {
            warn_if_near(basis, &node.point);
            let (p, dp) = normal_derivative(kernel, basis, density, &node.point, &node.normal, step)?;
            Ok(BoundaryNode {
                point: node.point,
                normal: node.normal,
                pressure: p,
                velocity: dp * scale,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryInput {
        radius: source.physical_radius,
        nodes,
    })
}

/// Free-space far-field pattern `u_inf(xhat)`.
pub fn u_infinity_free(basis: &BasisSet, density: &[Complex64], direction: &Point3, k: f64) -> Result<Complex64> {
    check_density(basis, density)?;
    let mut acc = ZERO;
    for (patch, w) in basis.patches.iter().zip(density) {
        for node in &patch.nodes {
            acc += farfield_kernel_free(direction, &node.point, k) * node.weight * w;
        }
    }
    Ok(acc)
}

/// Far-field pattern evaluator for either medium; the ocean variant caches
/// the modal expansion of the density.
pub enum FarField<'a> {
    Free {
        basis: &'a BasisSet,
        density: &'a [Complex64],
        k: f64,
    },
    Ocean(ModalExpansion),
}

impl<'a> FarField<'a> {
    pub fn new(kernel: &MediumKernel, basis: &'a BasisSet, density: &'a [Complex64]) -> Result<Self> {
        check_density(basis, density)?;
        Ok(match kernel {
            MediumKernel::Free { k } => FarField::Free { basis, density, k: *k },
            MediumKernel::Ocean(o) => FarField::Ocean(ModalExpansion::new(basis, density, o)?),
        })
    }

    pub fn eval(&self, direction: &FarFieldDirection) -> Result<Complex64> {
        match (self, direction) {
            (FarField::Free { basis, density, k }, FarFieldDirection::Free(d)) => u_infinity_free(basis, density, d, *k),
            (FarField::Ocean(exp), FarFieldDirection::Ocean { theta, z }) => {
                if !(*z > exp.depth && *z < 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "far-field depth z = {z} must lie in ({}, 0)",
                        exp.depth
                    )));
                }
                Ok(exp.u_infinity(*theta, *z))
            }
            _ => Err(Error::InvalidArgument("far-field direction does not match the medium".into())),
        }
    }
}

/// Time-averaged radiated power through a sphere.
#[derive(Debug, Clone, Serialize)]
pub struct PowerReport {
    pub p_ave: f64,
    pub level_db: f64,
    pub radius: f64,
    pub n_theta: usize,
    pub n_phi: usize,
}

pub fn power_to_db(p: f64) -> f64 {
    10.0 * (p / REFERENCE_POWER).log10()
}

/// `P = 1/2 \oint Im(conj(u) du/dn) dS` over a sphere around the source, with
/// Gauss-Legendre nodes in the inclination and a uniform azimuth rule. The
/// integrand is the time-averaged intensity for the velocity
/// `-i/(rho c k) du/dn`, with the `1/(rho c k)` factor left out.
pub fn radiated_power(
    kernel: &MediumKernel,
    source: &SourceGeometry,
    basis: &BasisSet,
    density: &[Complex64],
    radius: f64,
    n_theta: usize,
    n_phi: usize,
) -> Result<PowerReport> {
    check_density(basis, density)?;
    if n_theta < 16 || n_phi < 16 {
        return Err(Error::InvalidArgument(format!(
            "power quadrature needs at least 16x16 nodes, got {n_theta}x{n_phi}"
        )));
    }
    if !(radius > source.physical_radius) {
        return Err(Error::GeometryViolation(format!(
            "power sphere radius {radius} must exceed the physical source radius {}",
            source.physical_radius
        )));
    }
    if let MediumKernel::Ocean(o) = kernel {
        let (top, bottom) = (source.center.z + radius, source.center.z - radius);
        if !(top < 0.0 && bottom > o.depth) {
            return Err(Error::GeometryViolation(format!(
                "power sphere spans z in [{bottom}, {top}], outside the layer ({}, 0)",
                o.depth
            )));
        }
    }
    let (mu, mu_w) = gauss_legendre_on(-1.0, 1.0, n_theta);
    let dphi = TAU / n_phi as f64;
    let step = 1e-4 * radius;
    let mut nodes = Vec::with_capacity(n_theta * n_phi);
    for (m, w) in mu.iter().zip(&mu_w) {
        let theta = m.clamp(-1.0, 1.0).acos();
        for j in 0..n_phi {
            let n = Point3::from_spherical(1.0, theta, (j as f64 + 0.5) * dphi);
            nodes.push((source.center + n * radius, n, w * dphi * radius * radius));
        }
    }
    let contributions = nodes
        .par_iter()
        .map(|(x, n, w)| {
            let (u, du) = normal_derivative(kernel, basis, density, x, n, step)?;
            Ok(0.5 * w * (u.conj() * du).im)
        })
        .collect::<Result<Vec<f64>>>()?;
    let p_ave: f64 = contributions.iter().sum();
    if p_ave <= 0.0 {
        log::warn!("sphere flux at radius {radius} is {p_ave:e}; the level in dB is undefined");
    }
    Ok(PowerReport {
        p_ave,
        level_db: power_to_db(p_ave),
        radius,
        n_theta,
        n_phi,
    })
}

/// Free-space power from the far-field pattern: `P = (k/2) \int |u_inf|^2 dOmega`.
pub fn farfield_power_free(basis: &BasisSet, density: &[Complex64], k: f64, n_theta: usize, n_phi: usize) -> Result<f64> {
    let (mu, mu_w) = gauss_legendre_on(-1.0, 1.0, n_theta);
    let dphi = TAU / n_phi as f64;
    let mut total = 0.0;
    for (m, w) in mu.iter().zip(&mu_w) {
        let theta = m.clamp(-1.0, 1.0).acos();
        for j in 0..n_phi {
            let d = Point3::from_spherical(1.0, theta, (j as f64 + 0.5) * dphi);
            total += w * dphi * u_infinity_free(basis, density, &d, k)?.norm_sqr();
        }
    }
    Ok(0.5 * k * total)
}

/// Ocean power carried by the propagating modes through a far cylinder:
/// `P = 1/2 \int_0^{2pi} sum_p (|h|/2) |g_p / phi_p|^2 dtheta`.
pub fn modal_power_ocean(expansion: &ModalExpansion, n_theta: usize) -> f64 {
    let dtheta = TAU / n_theta as f64;
    let mut total = 0.0;
    for i in 0..n_theta {
        let theta = i as f64 * dtheta;
        for p in 0..expansion.n_prop() {
            total += expansion.amplitude(p, theta).norm_sqr();
        }
    }
    0.5 * 0.5 * expansion.depth.abs() * total * dtheta
}

/// Ocean power through the lateral wall of a full-depth cylinder of horizontal
/// radius `radius` around the source axis. The surface and the floor carry no
/// flux, so this encloses the source without crossing the vertical axis.
pub fn cylinder_power_ocean(
    kernel: &MediumKernel,
    source: &SourceGeometry,
    basis: &BasisSet,
    density: &[Complex64],
    radius: f64,
    n_z: usize,
    n_theta: usize,
) -> Result<f64> {
    check_density(basis, density)?;
    let MediumKernel::Ocean(o) = kernel else {
        return Err(Error::InvalidArgument("cylinder power needs an ocean kernel".into()));
    };
    if !(radius > source.physical_radius) || n_z < 2 || n_theta < 4 {
        return Err(Error::InvalidArgument(format!(
            "cylinder radius {radius} must exceed the source radius with at least 2x4 nodes"
        )));
    }
    let (z, wz) = gauss_legendre_on(o.depth, 0.0, n_z);
    let dtheta = TAU / n_theta as f64;
    let mut nodes = Vec::with_capacity(n_z * n_theta);
    for (zz, w) in z.iter().zip(&wz) {
        for j in 0..n_theta {
            let t = j as f64 * dtheta;
            let n = Point3::new(t.cos(), t.sin(), 0.0);
            let x = Point3::new(source.center.x, source.center.y, *zz) + n * radius;
            nodes.push((x, n, w * dtheta * radius));
        }
    }
    let step = 1e-4 * radius;
    let contributions = nodes
        .par_iter()
        .map(|(x, n, w)| {
            let (u, du) = normal_derivative(kernel, basis, density, x, n, step)?;
            Ok(0.5 * w * (u.conj() * du).im)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(contributions.iter().sum())
}

/// Modal amplitude recovered from the forward field at horizontal range `r`:
/// `(2/|h|) \int u phi_p dz * sqrt(k a_p r) e^{-i k a_p r}`, which tends to
/// `g_p / phi_p` as `r` grows.
pub fn modal_projection(
    kernel: &OceanKernel,
    basis: &BasisSet,
    density: &[Complex64],
    p: usize,
    theta: f64,
    r: f64,
    n_z: usize,
) -> Result<Complex64> {
    let mode = kernel.modes.get(p).copied().filter(|m| m.propagating).ok_or_else(|| {
        Error::InvalidArgument(format!("mode {p} is not propagating"))
    })?;
    let medium = MediumKernel::Ocean(kernel.clone());
    let (zs, ws) = gauss_legendre_on(kernel.depth, 0.0, n_z);
    let points: Vec<Point3> = zs.iter().map(|z| Point3::from_cylindrical(r, theta, *z)).collect();
    let field = eval_field(&medium, basis, density, &points)?;
    let projection: Complex64 = field
        .iter()
        .zip(zs.iter().zip(&ws))
        .map(|(s, (z, w))| s.value * (w * mode.profile(*z)))
        .sum();
    let x = kernel.k * mode.a_p.re * r;
    Ok(projection * (2.0 / kernel.depth.abs()) * x.sqrt() * Complex64::from_polar(1.0, -x))
}

/// Error metrics of one control region.
#[derive(Debug, Clone, Serialize)]
pub struct RegionErrors {
    pub name: String,
    pub points: usize,
    /// Points with `|prescribed| <= NULL_FLOOR`.
    pub null_points: usize,
    /// Largest `|u|` over the null points.
    pub max_abs_on_null: Option<f64>,
    /// Largest `|u - f| / |f|` over the other points.
    pub max_rel_error: Option<f64>,
    pub max_abs_error: f64,
    pub max_abs_field: f64,
    /// Root-mean-square of `|u - f|` over the grid.
    pub l2_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionErrors {
    pub name: String,
    pub generated: Complex64,
    pub prescribed: Complex64,
    pub abs_error: f64,
    pub rel_error: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ErrorReport {
    pub regions: Vec<RegionErrors>,
    pub directions: Vec<DirectionErrors>,
}

pub fn region_errors(name: &str, generated: &[Complex64], prescribed: &[Complex64]) -> Result<RegionErrors> {
    if generated.len() != prescribed.len() {
        return Err(Error::InvalidArgument(format!(
            "region {name}: {} generated values against {} prescribed",
            generated.len(),
            prescribed.len()
        )));
    }
    let mut out = RegionErrors {
        name: name.to_string(),
        points: generated.len(),
        null_points: 0,
        max_abs_on_null: None,
        max_rel_error: None,
        max_abs_error: 0.0,
        max_abs_field: 0.0,
        l2_error: 0.0,
    };
    let mut sq = 0.0;
    for (u, f) in generated.iter().zip(prescribed) {
        let err = (u - f).norm();
        sq += err * err;
        out.max_abs_error = out.max_abs_error.max(err);
        out.max_abs_field = out.max_abs_field.max(u.norm());
        if f.norm() <= NULL_FLOOR {
            out.null_points += 1;
            out.max_abs_on_null = Some(out.max_abs_on_null.unwrap_or(0.0).max(u.norm()));
        } else {
            out.max_rel_error = Some(out.max_rel_error.unwrap_or(0.0).max(err / f.norm()));
        }
    }
    if !generated.is_empty() {
        out.l2_error = (sq / generated.len() as f64).sqrt();
    }
    Ok(out)
}

pub fn direction_errors(name: &str, generated: Complex64, prescribed: Complex64) -> DirectionErrors {
    let abs_error = (generated - prescribed).norm();
    DirectionErrors {
        name: name.to_string(),
        generated,
        prescribed,
        abs_error,
        rel_error: (prescribed.norm() > NULL_FLOOR).then(|| abs_error / prescribed.norm()),
    }
}

fn offset_axis(a: f64, b: f64, n: usize, fraction: f64) -> Vec<f64> {
    if n == 1 {
        return linspace(a, b, 1);
    }
    let step = (b - a) / n as f64;
    (0..n).map(|i| a + (i as f64 + fraction) * step).collect()
}

/// Re-grids the region's sector with every axis split into `n` equal cells and
/// one node per cell at `fraction` of the cell width; `0.5` gives cell
/// midpoints. Point count and bounds are preserved; prescriptions are reset
/// to zero.
pub fn stability_offset_grid(region: &ControlRegion, offset_fraction: f64) -> Result<ControlRegion> {
    if !(offset_fraction > 0.0 && offset_fraction <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "offset fraction must lie in (0, 0.5], got {offset_fraction}"
        )));
    }
    let b = region.bounds;
    let c = region.counts;
    let points = sector_points(
        region.center,
        &b,
        &offset_axis(b.r.0, b.r.1, c.n_r, offset_fraction),
        &offset_axis(b.theta.0, b.theta.1, c.n_theta, offset_fraction),
        &offset_axis(b.phi.0, b.phi.1, c.n_phi, offset_fraction),
    );
    Ok(ControlRegion {
        name: region.name.clone(),
        center: region.center,
        bounds: b,
        counts: c,
        prescribed: vec![ZERO; points.len()],
        points,
    })
}
