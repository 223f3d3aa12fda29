//! Discrete geometry: points, source spheres with patch bases, annular-sector
//! collocation grids and far-field direction sets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Cartesian point or vector in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// From spherical coordinates: radius, inclination `theta` from +z, azimuth `phi`.
    pub fn from_spherical(r: f64, theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self::new(r * st * cp, r * st * sp, r * ct)
    }

    /// `(r, theta, phi)` with `theta` in `[0, pi]` and `phi` in `[0, 2 pi)`.
    pub fn to_spherical(&self) -> (f64, f64, f64) {
        let r = self.norm();
        if r == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let theta = (self.z / r).clamp(-1.0, 1.0).acos();
        (r, theta, wrap_angle(self.y.atan2(self.x)))
    }

    /// From cylindrical coordinates `(r, theta, z)`.
    pub fn from_cylindrical(r: f64, theta: f64, z: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(r * c, r * s, z)
    }

    /// `(r, theta, z)` with `theta` in `[0, 2 pi)`.
    pub fn to_cylindrical(&self) -> (f64, f64, f64) {
        (self.x.hypot(self.y), wrap_angle(self.y.atan2(self.x)), self.z)
    }

    pub fn dot(&self, other: &Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        (*self - *other).norm()
    }

    pub fn horizontal_distance(&self, other: &Point3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn normalized(&self) -> Point3 {
        *self * (1.0 / self.norm())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// Maps an angle into `[0, 2 pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// `n` nodes spanning `[a, b]` inclusive; a single node sits at the midpoint.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (a + b)],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { b } else { a + i as f64 * step })
                .collect()
        }
    }
}

/// Fictitious source sphere (carrying the density) nested in the physical source sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceGeometry {
    pub center: Point3,
    pub fictitious_radius: f64,
    pub physical_radius: f64,
}

impl SourceGeometry {
    pub fn new(center: Point3, fictitious_radius: f64, physical_radius: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::InvalidArgument("source center must be finite".into()));
        }
        if !(fictitious_radius > 0.0 && fictitious_radius < physical_radius)
            || !physical_radius.is_finite()
        {
            return Err(Error::GeometryViolation(format!(
                "need 0 < fictitious_radius < physical_radius, got {fictitious_radius} and {physical_radius}"
            )));
        }
        Ok(Self {
            center,
            fictitious_radius,
            physical_radius,
        })
    }
}

/// Quadrature rule applied inside each basis patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchQuadrature {
    /// One node at the patch centroid carrying the full patch area.
    #[default]
    Centroid,
    /// Tensor 2x2 Gauss rule in `(cos theta, phi)`.
    Gauss2x2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadNode {
    pub point: Point3,
    pub weight: f64,
}

/// One pulse basis function: constant density over a latitude-longitude patch.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub centroid: Point3,
    pub normal: Point3,
    pub area: f64,
    pub nodes: Vec<QuadNode>,
}

/// Piecewise-constant basis on the fictitious sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    pub center: Point3,
    pub radius: f64,
    pub n_lat: usize,
    pub n_lon: usize,
    pub patches: Vec<Patch>,
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.patches.iter().map(|p| p.area).sum()
    }

    /// Largest chord across any patch, measured between its corners.
    pub fn patch_diameter(&self) -> f64 {
        let dtheta = PI / self.n_lat as f64;
        let dphi = TAU / self.n_lon as f64;
        let mut widest: f64 = 0.0;
        for band in 0..self.n_lat {
            let (ta, tb) = (band as f64 * dtheta, (band + 1) as f64 * dtheta);
            let corners = [
                Point3::from_spherical(self.radius, ta, 0.0),
                Point3::from_spherical(self.radius, ta, dphi),
                Point3::from_spherical(self.radius, tb, 0.0),
                Point3::from_spherical(self.radius, tb, dphi),
            ];
            for a in &corners {
                for b in &corners {
                    widest = widest.max(a.distance(b));
                }
            }
        }
        widest
    }
}

/// Partitions the fictitious sphere into `n_lat` equal-inclination bands times
/// `n_lon` equal-azimuth slices.
pub fn make_sphere_patch_basis(
    geom: &SourceGeometry,
    n_lat: usize,
    n_lon: usize,
    quadrature: PatchQuadrature,
) -> Result<BasisSet> {
    if n_lat == 0 || n_lon == 0 {
        return Err(Error::InvalidArgument(format!(
            "patch counts must be positive, got n_lat={n_lat}, n_lon={n_lon}"
        )));
    }
    let r = geom.fictitious_radius;
    let dtheta = PI / n_lat as f64;
    let dphi = TAU / n_lon as f64;
    let gauss = 0.5 / 3f64.sqrt();
    let mut patches = Vec::with_capacity(n_lat * n_lon);
    for band in 0..n_lat {
        let theta_a = band as f64 * dtheta;
        let theta_b = if band + 1 == n_lat {
            PI
        } else {
            (band + 1) as f64 * dtheta
        };
        let (mu_a, mu_b) = (theta_a.cos(), theta_b.cos());
        let theta_mid = 0.5 * (theta_a + theta_b);
        for slice in 0..n_lon {
            let phi_a = slice as f64 * dphi;
            let phi_mid = phi_a + 0.5 * dphi;
            let area = r * r * dphi * (mu_a - mu_b);
            let normal = Point3::from_spherical(1.0, theta_mid, phi_mid);
            let centroid = geom.center + normal * r;
            let nodes = match quadrature {
                PatchQuadrature::Centroid => vec![QuadNode {
                    point: centroid,
                    weight: area,
                }],
                PatchQuadrature::Gauss2x2 => {
                    let mu_mid = 0.5 * (mu_a + mu_b);
                    let dmu = mu_a - mu_b;
                    let mut nodes = Vec::with_capacity(4);
                    for sm in [-1.0, 1.0] {
                        let mu = mu_mid + sm * gauss * dmu;
                        let theta = mu.clamp(-1.0, 1.0).acos();
                        for sp in [-1.0, 1.0] {
                            let phi = phi_mid + sp * gauss * dphi;
                            nodes.push(QuadNode {
                                point: geom.center + Point3::from_spherical(r, theta, phi),
                                weight: 0.25 * area,
                            });
                        }
                    }
                    nodes
                }
            };
            patches.push(Patch {
                centroid,
                normal,
                area,
                nodes,
            });
        }
    }
    Ok(BasisSet {
        center: geom.center,
        radius: r,
        n_lat,
        n_lon,
        patches,
    })
}

/// Surface node on a sphere, used for boundary inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceNode {
    pub theta: f64,
    pub phi: f64,
    pub point: Point3,
    pub normal: Point3,
}

/// Cell-centred `(theta, phi)` grid on a sphere.
pub fn sphere_surface_grid(
    center: Point3,
    radius: f64,
    n_theta: usize,
    n_phi: usize,
) -> Result<Vec<SurfaceNode>> {
    if n_theta == 0 || n_phi == 0 || !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "surface grid needs positive counts and radius, got {n_theta}x{n_phi}, r={radius}"
        )));
    }
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let theta = (i as f64 + 0.5) * PI / n_theta as f64;
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * TAU / n_phi as f64;
            let normal = Point3::from_spherical(1.0, theta, phi);
            out.push(SurfaceNode {
                theta,
                phi,
                point: center + normal * radius,
                normal,
            });
        }
    }
    Ok(out)
}

/// Spherical-coordinate bounds of an annular sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorBounds {
    pub r: (f64, f64),
    pub theta: (f64, f64),
    pub phi: (f64, f64),
}

impl SectorBounds {
    fn validate(&self) -> Result<()> {
        let (r0, r1) = self.r;
        let (t0, t1) = self.theta;
        let (p0, p1) = self.phi;
        let finite = [r0, r1, t0, t1, p0, p1].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("sector bounds must be finite".into()));
        }
        if !(r0 > 0.0 && r0 <= r1) {
            return Err(Error::InvalidArgument(format!(
                "sector radii must satisfy 0 < r0 <= r1, got [{r0}, {r1}]"
            )));
        }
        if !(0.0 <= t0 && t0 <= t1 && t1 <= PI) {
            return Err(Error::InvalidArgument(format!(
                "sector inclination must satisfy 0 <= theta0 <= theta1 <= pi, got [{t0}, {t1}]"
            )));
        }
        if !(p0 <= p1 && p1 - p0 <= TAU) {
            return Err(Error::InvalidArgument(format!(
                "sector azimuth must satisfy phi0 <= phi1 <= phi0 + 2 pi, got [{p0}, {p1}]"
            )));
        }
        Ok(())
    }

    /// Whether an offset from the sector center lies inside the closed bounds.
    pub fn contains_offset(&self, offset: &Point3, tol: f64) -> bool {
        let (r, theta, phi) = offset.to_spherical();
        let (r0, r1) = self.r;
        let (t0, t1) = self.theta;
        let (p0, p1) = self.phi;
        let rtol = tol * r1.max(1.0);
        if r < r0 - rtol || r > r1 + rtol || theta < t0 - tol || theta > t1 + tol {
            return false;
        }
        let mut rel = (phi - p0).rem_euclid(TAU);
        if rel > TAU - tol {
            rel -= TAU;
        }
        rel >= -tol && rel <= p1 - p0 + tol
    }
}

/// Grid counts along the radial, inclination and azimuth axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCounts {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl GridCounts {
    pub fn total(&self) -> usize {
        self.n_r * self.n_theta * self.n_phi
    }
}

/// Collocation grid over a near-field control region with its prescribed values.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlRegion {
    pub name: String,
    pub center: Point3,
    pub bounds: SectorBounds,
    pub counts: GridCounts,
    pub points: Vec<Point3>,
    pub prescribed: Vec<Complex64>,
}

impl ControlRegion {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_clear_of_source(
    name: &str,
    points: impl IntoIterator<Item = Point3>,
    source: &SourceGeometry,
) -> Result<()> {
    for p in points {
        let d = p.distance(&source.center);
        if d <= source.physical_radius {
            return Err(Error::GeometryViolation(format!(
                "region {name}: point ({:.6e}, {:.6e}, {:.6e}) is {d:.6e} m from the source center, \
                 inside the closed physical source ball of radius {}",
                p.x, p.y, p.z, source.physical_radius
            )));
        }
    }
    Ok(())
}

pub(crate) fn sector_points(
    center: Point3,
    bounds: &SectorBounds,
    radii: &[f64],
    thetas: &[f64],
    phis: &[f64],
) -> Vec<Point3> {
    let mut points = Vec::with_capacity(radii.len() * thetas.len() * phis.len());
    let _ = bounds;
    for &r in radii {
        for &t in thetas {
            for &p in phis {
                points.push(center + Point3::from_spherical(r, t, p));
            }
        }
    }
    points
}

/// Tensor-product grid over an annular sector, nodes inclusive of the bounds.
pub fn make_annular_sector_grid(
    name: &str,
    center: Point3,
    bounds: SectorBounds,
    counts: GridCounts,
    source: &SourceGeometry,
) -> Result<ControlRegion> {
    bounds.validate()?;
    if counts.n_r == 0 || counts.n_theta == 0 || counts.n_phi == 0 {
        return Err(Error::InvalidArgument(format!(
            "region {name}: grid counts must be positive, got {counts:?}"
        )));
    }
    let corners = sector_points(
        center,
        &bounds,
        &[bounds.r.0, bounds.r.1],
        &[bounds.theta.0, bounds.theta.1],
        &[bounds.phi.0, bounds.phi.1],
    );
    check_clear_of_source(name, corners, source)?;
    if center.distance(&source.center) == 0.0 && bounds.r.0 <= source.physical_radius {
        return Err(Error::GeometryViolation(format!(
            "region {name}: inner radius {} does not clear the physical source radius {}",
            bounds.r.0, source.physical_radius
        )));
    }
    let points = sector_points(
        center,
        &bounds,
        &linspace(bounds.r.0, bounds.r.1, counts.n_r),
        &linspace(bounds.theta.0, bounds.theta.1, counts.n_theta),
        &linspace(bounds.phi.0, bounds.phi.1, counts.n_phi),
    );
    check_clear_of_source(name, points.iter().copied(), source)?;
    let prescribed = vec![Complex64::new(0.0, 0.0); points.len()];
    Ok(ControlRegion {
        name: name.to_string(),
        center,
        bounds,
        counts,
        points,
        prescribed,
    })
}

/// A far-field direction: a unit vector in free space, or `(theta, z)` in the ocean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FarFieldDirection {
    Free(Point3),
    Ocean { theta: f64, z: f64 },
}

/// Prescribed far-field pattern value in one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldTarget {
    pub name: String,
    pub direction: FarFieldDirection,
    pub value: Complex64,
}

impl FarFieldTarget {
    /// Checks the direction against the medium: unit length in free space,
    /// `h < z < 0` in an ocean of (negative) depth coordinate `h`.
    pub fn validate(&self, ocean_depth: Option<f64>) -> Result<()> {
        match (self.direction, ocean_depth) {
            (FarFieldDirection::Free(d), None) => {
                if !d.is_finite() || (d.norm() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "far-field target {}: direction must be a unit vector, |d| = {}",
                        self.name,
                        d.norm()
                    )));
                }
            }
            (FarFieldDirection::Ocean { theta, z }, Some(h)) => {
                if !theta.is_finite() || !(z > h && z < 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "far-field target {}: z = {z} must lie in ({h}, 0)",
                        self.name
                    )));
                }
            }
            (FarFieldDirection::Free(_), Some(_)) => {
                return Err(Error::InvalidArgument(format!(
                    "far-field target {}: ocean targets are given as (theta, z)",
                    self.name
                )))
            }
            (FarFieldDirection::Ocean { .. }, None) => {
                return Err(Error::InvalidArgument(format!(
                    "far-field target {}: free-space targets are given as unit vectors",
                    self.name
                )))
            }
        }
        if !self.value.re.is_finite() || !self.value.im.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "far-field target {}: prescribed value must be finite",
                self.name
            )));
        }
        Ok(())
    }
}

/// Checks that no two targets share a direction (same azimuth in the ocean).
pub fn check_distinct_directions(targets: &[FarFieldTarget]) -> Result<()> {
    for (i, a) in targets.iter().enumerate() {
        for b in &targets[i + 1..] {
            let same = match (a.direction, b.direction) {
                (FarFieldDirection::Free(u), FarFieldDirection::Free(v)) => u.distance(&v) < 1e-12,
                (
                    FarFieldDirection::Ocean { theta: t1, .. },
                    FarFieldDirection::Ocean { theta: t2, .. },
                ) => {
                    let d = (t1 - t2).rem_euclid(TAU);
                    d < 1e-12 || TAU - d < 1e-12
                }
                _ => false,
            };
            if same {
                return Err(Error::InvalidArgument(format!(
                    "far-field targets {} and {} share a direction",
                    a.name, b.name
                )));
            }
        }
    }
    Ok(())
}

/// `n x n` angular grid centred on `direction`; the middle node is the direction itself.
///
/// Free-space grids step the spherical angles by up to `half_width`; ocean grids
/// step the azimuth by `half_width` and the depth by `half_width * |h|`, clamping
/// depths into the open layer.
pub fn make_farfield_patch(
    direction: FarFieldDirection,
    half_width: f64,
    n: usize,
    ocean_depth: Option<f64>,
) -> Result<Vec<FarFieldDirection>> {
    if n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "far-field patch size must be odd so the target is a node, got {n}"
        )));
    }
    if !(half_width > 0.0 && half_width <= PI / 4.0) {
        return Err(Error::InvalidArgument(format!(
            "far-field patch half width must lie in (0, pi/4], got {half_width}"
        )));
    }
    let m = (n / 2) as i64;
    let step = if m == 0 { 0.0 } else { half_width / m as f64 };
    let mut out = Vec::with_capacity(n * n);
    match direction {
        FarFieldDirection::Free(d) => {
            let (_, theta_c, phi_c) = d.to_spherical();
            for i in -m..=m {
                for j in -m..=m {
                    if i == 0 && j == 0 {
                        out.push(direction);
                        continue;
                    }
                    let theta = theta_c + i as f64 * step;
                    let phi = phi_c + j as f64 * step;
                    out.push(FarFieldDirection::Free(Point3::from_spherical(1.0, theta, phi)));
                }
            }
        }
        FarFieldDirection::Ocean { theta, z } => {
            let h = ocean_depth.ok_or_else(|| {
                Error::InvalidArgument("ocean far-field patch needs the layer depth".into())
            })?;
            let margin = 1e-6 * h.abs();
            let dz = step * h.abs();
            for i in -m..=m {
                for j in -m..=m {
                    if i == 0 && j == 0 {
                        out.push(direction);
                        continue;
                    }
                    out.push(FarFieldDirection::Ocean {
                        theta: theta + i as f64 * step,
                        z: (z + j as f64 * dz).clamp(h + margin, -margin),
                    });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn origin_source() -> SourceGeometry {
        SourceGeometry::new(Point3::ORIGIN, 0.01, 0.015).unwrap()
    }

    fn reference_sector() -> SectorBounds {
        SectorBounds {
            r: (0.02, 0.03),
            theta: (PI / 4.0, 3.0 * PI / 4.0),
            phi: (3.0 * PI / 4.0, 5.0 * PI / 4.0),
        }
    }

    #[test]
    fn reference_basis_has_234_patches() {
        let b = make_sphere_patch_basis(&origin_source(), 13, 18, PatchQuadrature::Centroid).unwrap();
        assert_eq!(b.len(), 234);
        let area = 4.0 * PI * 0.01f64.powi(2);
        assert!((b.total_area() - area).abs() < 1e-15);
        assert!((area - 1.256637e-3).abs() < 1e-9);
        for p in &b.patches {
            assert!((p.centroid.norm() - 0.01).abs() <= 1e-12 * 0.01);
            assert!((p.normal.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_patch_is_whole_sphere() {
        let g = SourceGeometry::new(Point3::ORIGIN, 1.0, 2.0).unwrap();
        let b = make_sphere_patch_basis(&g, 1, 1, PatchQuadrature::Centroid).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b.patches[0].area - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn zero_counts_rejected() {
        let g = origin_source();
        assert!(matches!(
            make_sphere_patch_basis(&g, 0, 18, PatchQuadrature::Centroid),
            Err(Error::InvalidArgument(_))
        ));
        assert!(make_sphere_patch_basis(&g, 3, 0, PatchQuadrature::Centroid).is_err());
    }

    #[test]
    fn gauss_weights_sum_to_area() {
        let b = make_sphere_patch_basis(&origin_source(), 13, 18, PatchQuadrature::Gauss2x2).unwrap();
        for p in &b.patches {
            let w: f64 = p.nodes.iter().map(|n| n.weight).sum();
            assert!((w - p.area).abs() < 1e-18);
            for n in &p.nodes {
                assert!((n.point.norm() - 0.01).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn nested_radii_enforced() {
        assert!(SourceGeometry::new(Point3::ORIGIN, 0.02, 0.015).is_err());
        assert!(SourceGeometry::new(Point3::ORIGIN, 0.0, 0.015).is_err());
    }

    #[test]
    fn reference_sector_grid() {
        let counts = GridCounts {
            n_r: 10,
            n_theta: 16,
            n_phi: 29,
        };
        let w = make_annular_sector_grid("W1", Point3::ORIGIN, reference_sector(), counts, &origin_source())
            .unwrap();
        assert_eq!(w.len(), 4640);
        assert!(w.prescribed.iter().all(|v| v.norm() == 0.0));
        for p in &w.points {
            let r = p.norm();
            assert!((0.02 - 1e-15..=0.03 + 1e-15).contains(&r));
            assert!(w.bounds.contains_offset(p, 1e-12));
        }
    }

    #[test]
    fn degenerate_sector_gives_midpoint() {
        let b = SectorBounds {
            r: (0.02, 0.02),
            ..reference_sector()
        };
        let counts = GridCounts {
            n_r: 1,
            n_theta: 1,
            n_phi: 1,
        };
        let w = make_annular_sector_grid("d", Point3::ORIGIN, b, counts, &origin_source()).unwrap();
        assert_eq!(w.len(), 1);
        let (r, t, p) = w.points[0].to_spherical();
        assert!((r - 0.02).abs() < 1e-15);
        assert!((t - PI / 2.0).abs() < 1e-14);
        assert!((p - PI).abs() < 1e-14);
    }

    #[test]
    fn sector_touching_source_rejected() {
        let b = SectorBounds {
            r: (0.015, 0.03),
            ..reference_sector()
        };
        let counts = GridCounts {
            n_r: 3,
            n_theta: 3,
            n_phi: 3,
        };
        let err = make_annular_sector_grid("bad", Point3::ORIGIN, b, counts, &origin_source());
        assert!(matches!(err, Err(Error::GeometryViolation(_))));
        // offset center: sector corners reach into the ball
        let err = make_annular_sector_grid(
            "bad2",
            Point3::new(0.025, 0.0, 0.0),
            reference_sector(),
            counts,
            &origin_source(),
        );
        assert!(matches!(err, Err(Error::GeometryViolation(_))));
    }

    #[test]
    fn negative_azimuth_sector() {
        let b = SectorBounds {
            r: (0.15, 0.2),
            theta: (PI / 4.0, 3.0 * PI / 4.0),
            phi: (-PI / 4.0, PI / 4.0),
        };
        let counts = GridCounts {
            n_r: 10,
            n_theta: 16,
            n_phi: 29,
        };
        let c = Point3::new(0.0, 0.0, -10.0);
        let src = SourceGeometry::new(c, 0.01, 0.015).unwrap();
        let w = make_annular_sector_grid("W2", c, b, counts, &src).unwrap();
        for p in &w.points {
            assert!(b.contains_offset(&(*p - c), 1e-12));
            assert!(p.x > 0.0);
        }
    }

    #[test]
    fn farfield_patch_free() {
        let d = Point3::new(-1.0, 0.0, 0.0);
        let dirs = make_farfield_patch(FarFieldDirection::Free(d), 0.1, 11, None).unwrap();
        assert_eq!(dirs.len(), 121);
        assert_eq!(dirs[60], FarFieldDirection::Free(d));
        for dir in &dirs {
            match dir {
                FarFieldDirection::Free(u) => assert!((u.norm() - 1.0).abs() < 1e-12),
                _ => panic!("wrong kind"),
            }
        }
        assert!(make_farfield_patch(FarFieldDirection::Free(d), 0.1, 10, None).is_err());
        assert!(make_farfield_patch(FarFieldDirection::Free(d), 1.0, 11, None).is_err());
    }

    #[test]
    fn farfield_patch_ocean_clamps_depth() {
        let center = FarFieldDirection::Ocean { theta: PI, z: -10.0 };
        let dirs = make_farfield_patch(center, 0.1, 11, Some(-20.0)).unwrap();
        assert_eq!(dirs[60], center);
        for dir in &dirs {
            let FarFieldDirection::Ocean { z, .. } = *dir else { panic!() };
            assert!(z > -20.0 && z < 0.0);
            assert!((-12.0 - 1e-12..=-8.0 + 1e-12).contains(&z));
        }
        let shallow = FarFieldDirection::Ocean { theta: 0.3, z: -0.5 };
        let dirs = make_farfield_patch(shallow, 0.1, 11, Some(-20.0)).unwrap();
        let zs: Vec<f64> = dirs
            .iter()
            .map(|d| match d {
                FarFieldDirection::Ocean { z, .. } => *z,
                _ => unreachable!(),
            })
            .collect();
        assert!(zs.iter().all(|&z| z > -20.0 && z < 0.0));
        let max = zs.iter().cloned().fold(f64::MIN, f64::max);
        assert!((max + 20.0 * 1e-6).abs() < 1e-12);
    }

    #[test]
    fn target_validation() {
        let t = FarFieldTarget {
            name: "x".into(),
            direction: FarFieldDirection::Ocean { theta: 0.0, z: -25.0 },
            value: Complex64::new(0.01, 0.0),
        };
        assert!(t.validate(Some(-20.0)).is_err());
        let t = FarFieldTarget {
            name: "x".into(),
            direction: FarFieldDirection::Free(Point3::new(1.0, 1.0, 0.0)),
            value: Complex64::new(0.0, 0.0),
        };
        assert!(t.validate(None).is_err());
    }

    #[test]
    fn grids_are_deterministic() {
        let counts = GridCounts {
            n_r: 4,
            n_theta: 5,
            n_phi: 6,
        };
        let a = make_annular_sector_grid("a", Point3::ORIGIN, reference_sector(), counts, &origin_source())
            .unwrap();
        let b = make_annular_sector_grid("a", Point3::ORIGIN, reference_sector(), counts, &origin_source())
            .unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn spherical_round_trip(x in -10.0f64..10.0, y in -10.0f64..10.0, z in -10.0f64..10.0) {
            let p = Point3::new(x, y, z);
            prop_assume!(p.norm() > 1e-6);
            let (r, t, ph) = p.to_spherical();
            prop_assert!((0.0..=PI).contains(&t));
            prop_assert!((0.0..TAU).contains(&ph));
            let q = Point3::from_spherical(r, t, ph);
            prop_assert!(q.distance(&p) <= 1e-12 * p.norm());
            let (rc, tc, zc) = p.to_cylindrical();
            prop_assert!(Point3::from_cylindrical(rc, tc, zc).distance(&p) <= 1e-12 * p.norm());
        }

        #[test]
        fn patch_areas_partition_sphere(n_lat in 1usize..40, n_lon in 1usize..40, r in 0.001f64..5.0) {
            let g = SourceGeometry::new(Point3::new(0.1, -0.2, 0.3), r, 2.0 * r).unwrap();
            let b = make_sphere_patch_basis(&g, n_lat, n_lon, PatchQuadrature::Centroid).unwrap();
            let exact = 4.0 * PI * r * r;
            prop_assert!((b.total_area() - exact).abs() <= 1e-12 * exact);
        }
    }
}
