//! Scenario configuration: TOML schema, validation and construction of the
//! discrete problem.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{
    check_distinct_directions, make_annular_sector_grid, make_sphere_patch_basis, BasisSet, ControlRegion,
    FarFieldDirection, FarFieldTarget, GridCounts, PatchQuadrature, Point3, SectorBounds, SourceGeometry,
};
use crate::greens::{Medium, MediumKernel, MediumKind, ModeTruncation};
use crate::propagator::RowWeights;

/// An angle in radians, written either as a number or as an expression such
/// as `"3pi/4"`, `"-pi/4"` or `"0.5*pi"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Angle {
    Radians(f64),
    Expr(String),
}

impl Angle {
    pub fn radians(&self) -> Result<f64> {
        match self {
            Angle::Radians(v) => Ok(*v),
            Angle::Expr(s) => parse_angle(s),
        }
    }
}

fn parse_angle(src: &str) -> Result<f64> {
    let bad = || Error::Config(format!("cannot parse angle expression {src:?}"));
    let s: String = src.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.to_string(), d.parse::<f64>().map_err(|_| bad())?),
        None => (s.clone(), 1.0),
    };
    let (sign, body) = match num.strip_prefix('-') {
        Some(rest) => (-1.0, rest.to_string()),
        None => (1.0, num.trim_start_matches('+').to_string()),
    };
    let value = if let Some(coef) = body.strip_suffix("pi") {
        let coef = coef.trim_end_matches('*');
        let c = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().map_err(|_| bad())? };
        c * PI
    } else {
        body.parse::<f64>().map_err(|_| bad())?
    };
    if den == 0.0 || !value.is_finite() {
        return Err(bad());
    }
    Ok(sign * value / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediumTag {
    FreeSpace,
    Ocean,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub kind: MediumTag,
    pub k: f64,
    #[serde(default)]
    pub depth: Option<f64>,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_c")]
    pub c: f64,
}

fn default_rho() -> f64 {
    1000.0
}

fn default_c() -> f64 {
    1500.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub center: [f64; 3],
    pub fictitious_radius: f64,
    pub physical_radius: f64,
    pub n_lat: usize,
    pub n_lon: usize,
    #[serde(default)]
    pub quadrature: PatchQuadrature,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Prescription {
    Null,
    PlaneWave { direction: [f64; 3], wavenumber: f64 },
    /// Complex values in grid order, one `re, im` pair per line; relative
    /// paths resolve against the config file.
    GridFile { path: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub name: String,
    /// Sector center; defaults to the source center.
    #[serde(default)]
    pub center: Option<[f64; 3]>,
    pub r: [f64; 2],
    pub theta: [Angle; 2],
    pub phi: [Angle; 2],
    pub counts: [usize; 3],
    pub prescription: Prescription,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarFieldConfig {
    pub name: String,
    /// Free-space unit vector.
    #[serde(default)]
    pub direction: Option<[f64; 3]>,
    /// Ocean azimuth.
    #[serde(default)]
    pub theta: Option<Angle>,
    /// Ocean depth.
    #[serde(default)]
    pub z: Option<f64>,
    /// Prescribed pattern value as `[re, im]`.
    pub value: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon_rel: f64,
    #[serde(default = "default_tol")]
    pub tol_rel: f64,
    #[serde(default)]
    pub row_weights: RowWeights,
}

fn default_epsilon() -> f64 {
    1e-3
}

fn default_tol() -> f64 {
    0.05
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon_rel: default_epsilon(),
            tol_rel: default_tol(),
            row_weights: RowWeights::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub p_max: usize,
    pub q_max: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self { p_max: 100, q_max: 100 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_half_width")]
    pub patch_half_width: f64,
    #[serde(default = "default_patch_size")]
    pub patch_size: usize,
    pub power_radius: f64,
    #[serde(default = "default_power_n")]
    pub power_n_theta: usize,
    #[serde(default = "default_power_n_phi")]
    pub power_n_phi: usize,
    #[serde(default = "default_surface_theta")]
    pub surface_n_theta: usize,
    #[serde(default = "default_surface_phi")]
    pub surface_n_phi: usize,
    #[serde(default = "default_offset")]
    pub offset_fraction: f64,
    #[serde(default)]
    pub dump_matrix: bool,
}

fn default_half_width() -> f64 {
    0.1
}
fn default_patch_size() -> usize {
    11
}
fn default_power_n() -> usize {
    32
}
fn default_power_n_phi() -> usize {
    64
}
fn default_surface_theta() -> usize {
    26
}
fn default_surface_phi() -> usize {
    36
}
fn default_offset() -> f64 {
    0.5
}

/// Top-level scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub medium: MediumConfig,
    pub source: SourceConfig,
    #[serde(default)]
    pub regions: Vec<RegionConfig>,
    #[serde(default)]
    pub farfield: Vec<FarFieldConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub truncation: TruncationConfig,
    pub outputs: OutputConfig,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// A validated problem ready for assembly.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub medium: Medium,
    pub truncation: Option<ModeTruncation>,
    pub source: SourceGeometry,
    pub basis: BasisSet,
    pub regions: Vec<ControlRegion>,
    pub prescriptions: Vec<Prescription>,
    pub targets: Vec<FarFieldTarget>,
}

fn point(a: [f64; 3]) -> Point3 {
    Point3::new(a[0], a[1], a[2])
}

/// Value of a prescription at the given points; `None` for tabulated data.
pub fn prescribe(prescription: &Prescription, points: &[Point3]) -> Option<Vec<Complex64>> {
    match prescription {
        Prescription::Null => Some(vec![Complex64::new(0.0, 0.0); points.len()]),
        Prescription::PlaneWave { direction, wavenumber } => {
            let d = point(*direction);
            Some(points.iter().map(|x| Complex64::from_polar(1.0, wavenumber * d.dot(x))).collect())
        }
        Prescription::GridFile { .. } => None,
    }
}

fn read_grid_file(path: &Path, expected: usize, region: &str) -> Result<Vec<Complex64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::with_capacity(expected);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed.as_deref() {
            Some([re, im]) => values.push(Complex64::new(*re, *im)),
            _ => {
                return Err(Error::Config(format!(
                    "regions.{region}.prescription: {}:{}: expected `re, im`",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    if values.len() != expected {
        return Err(Error::Config(format!(
            "regions.{region}.prescription: {} has {} values, grid has {expected} points",
            path.display(),
            values.len()
        )));
    }
    Ok(values)
}

fn prefix(field: &str, e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::Config(format!("{field}: {m}")),
        Error::Config(m) => Error::Config(format!("{field}: {m}")),
        Error::GeometryViolation(m) => Error::GeometryViolation(format!("{field}: {m}")),
        other => other,
    }
}

impl Scenario {
    /// Builds the scenario; the first violation aborts. Relative grid-file
    /// paths resolve against `base_dir`.
    pub fn build(config: ScenarioConfig, base_dir: Option<&Path>) -> Result<Self> {
        let medium = build_medium(&config.medium)?;
        let truncation = build_truncation(&config, &medium)?;
        let source = build_source(&config.source)?;
        let basis = make_sphere_patch_basis(&source, config.source.n_lat, config.source.n_lon, config.source.quadrature)
            .map_err(|e| prefix("source", e))?;
        let mut regions = Vec::new();
        let mut prescriptions = Vec::new();
        for rc in &config.regions {
            regions.push(build_region(rc, &source, base_dir)?);
            prescriptions.push(rc.prescription.clone());
        }
        check_region_names(&config)?;
        let targets = build_targets(&config, &medium)?;
        check_solver(&config.solver)?;
        check_outputs(&config.outputs, &source, &medium)?;
        Ok(Self {
            config,
            medium,
            truncation,
            source,
            basis,
            regions,
            prescriptions,
            targets,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::build(ScenarioConfig::from_toml(&text)?, path.parent())
    }

    pub fn kernel(&self) -> Result<MediumKernel> {
        MediumKernel::new(&self.medium, self.truncation)
    }
}

fn build_medium(mc: &MediumConfig) -> Result<Medium> {
    let kind = match (mc.kind, mc.depth) {
        (MediumTag::FreeSpace, None) => MediumKind::FreeSpace,
        (MediumTag::FreeSpace, Some(_)) => {
            return Err(Error::Config("medium.depth: only valid for the ocean medium".into()))
        }
        (MediumTag::Ocean, Some(depth)) => MediumKind::Ocean { depth },
        (MediumTag::Ocean, None) => return Err(Error::Config("medium.depth: required for the ocean medium".into())),
    };
    Medium::new(kind, mc.k, mc.rho, mc.c).map_err(|e| prefix("medium", e))
}

fn build_truncation(config: &ScenarioConfig, medium: &Medium) -> Result<Option<ModeTruncation>> {
    match medium.kind {
        MediumKind::FreeSpace => Ok(None),
        MediumKind::Ocean { .. } => ModeTruncation::new(config.truncation.p_max, config.truncation.q_max, medium)
            .map(Some)
            .map_err(|e| prefix("truncation", e)),
    }
}

fn build_source(sc: &SourceConfig) -> Result<SourceGeometry> {
    SourceGeometry::new(point(sc.center), sc.fictitious_radius, sc.physical_radius).map_err(|e| prefix("source", e))
}

fn build_region(rc: &RegionConfig, source: &SourceGeometry, base_dir: Option<&Path>) -> Result<ControlRegion> {
    let field = format!("regions.{}", rc.name);
    let angle = |a: &Angle, which: &str| a.radians().map_err(|e| prefix(&format!("{field}.{which}"), e));
    let bounds = SectorBounds {
        r: (rc.r[0], rc.r[1]),
        theta: (angle(&rc.theta[0], "theta")?, angle(&rc.theta[1], "theta")?),
        phi: (angle(&rc.phi[0], "phi")?, angle(&rc.phi[1], "phi")?),
    };
    let counts = GridCounts {
        n_r: rc.counts[0],
        n_theta: rc.counts[1],
        n_phi: rc.counts[2],
    };
    let center = rc.center.map(point).unwrap_or(source.center);
    let mut region = make_annular_sector_grid(&rc.name, center, bounds, counts, source).map_err(|e| prefix(&field, e))?;
    match &rc.prescription {
        Prescription::PlaneWave { direction, wavenumber } => {
            let d = point(*direction);
            if !d.is_finite() || (d.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "{field}.prescription.direction: plane-wave direction must be a unit vector, |d| = {}",
                    d.norm()
                )));
            }
            if !(wavenumber.is_finite() && *wavenumber > 0.0) {
                return Err(Error::Config(format!(
                    "{field}.prescription.wavenumber: must be positive, got {wavenumber}"
                )));
            }
        }
        Prescription::GridFile { path } => {
            let full = match base_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            region.prescribed = read_grid_file(&full, region.len(), &rc.name)?;
            return Ok(region);
        }
        Prescription::Null => {}
    }
    region.prescribed = prescribe(&rc.prescription, &region.points).expect("analytic prescription");
    Ok(region)
}

fn check_region_names(config: &ScenarioConfig) -> Result<()> {
    for (i, a) in config.regions.iter().enumerate() {
        if config.regions[i + 1..].iter().any(|b| b.name == a.name) {
            return Err(Error::Config(format!("regions.{}: duplicate region name", a.name)));
        }
    }
    Ok(())
}

fn build_target(fc: &FarFieldConfig, medium: &Medium) -> Result<FarFieldTarget> {
    let field = format!("farfield.{}", fc.name);
    let direction = match (medium.kind, fc.direction, &fc.theta, fc.z) {
        (MediumKind::FreeSpace, Some(d), None, None) => FarFieldDirection::Free(point(d)),
        (MediumKind::Ocean { .. }, None, Some(theta), Some(z)) => FarFieldDirection::Ocean {
            theta: theta.radians().map_err(|e| prefix(&format!("{field}.theta"), e))?,
            z,
        },
        (MediumKind::FreeSpace, ..) => {
            return Err(Error::Config(format!("{field}: free-space targets take `direction` only")))
        }
        (MediumKind::Ocean { .. }, ..) => {
            return Err(Error::Config(format!("{field}: ocean targets take `theta` and `z` only")))
        }
    };
    let target = FarFieldTarget {
        name: fc.name.clone(),
        direction,
        value: Complex64::new(fc.value[0], fc.value[1]),
    };
    target.validate(medium.depth()).map_err(|e| prefix(&field, e))?;
    Ok(target)
}

fn build_targets(config: &ScenarioConfig, medium: &Medium) -> Result<Vec<FarFieldTarget>> {
    let targets = config
        .farfield
        .iter()
        .map(|fc| build_target(fc, medium))
        .collect::<Result<Vec<_>>>()?;
    check_distinct_directions(&targets).map_err(|e| prefix("farfield", e))?;
    Ok(targets)
}

fn check_solver(s: &SolverConfig) -> Result<()> {
    if !(s.epsilon_rel > 0.0 && s.epsilon_rel < 1.0) {
        return Err(Error::Config(format!("solver.epsilon_rel: must lie in (0, 1), got {}", s.epsilon_rel)));
    }
    if !(s.tol_rel > 0.0 && s.tol_rel < 1.0) {
        return Err(Error::Config(format!("solver.tol_rel: must lie in (0, 1), got {}", s.tol_rel)));
    }
    let w = s.row_weights;
    if !(w.near > 0.0 && w.far > 0.0 && w.near.is_finite() && w.far.is_finite()) {
        return Err(Error::Config(format!("solver.row_weights: weights must be positive, got {w:?}")));
    }
    Ok(())
}

fn check_outputs(o: &OutputConfig, source: &SourceGeometry, medium: &Medium) -> Result<()> {
    if o.patch_size.is_multiple_of(2) || !(o.patch_half_width > 0.0 && o.patch_half_width <= PI / 4.0) {
        return Err(Error::Config(format!(
            "outputs.patch_size/patch_half_width: need an odd size and a half width in (0, pi/4], got {} and {}",
            o.patch_size, o.patch_half_width
        )));
    }
    if o.power_n_theta < 16 || o.power_n_phi < 16 {
        return Err(Error::Config("outputs.power_n_theta/power_n_phi: need at least 16 nodes each".into()));
    }
    if o.surface_n_theta == 0 || o.surface_n_phi == 0 {
        return Err(Error::Config("outputs.surface_n_theta/surface_n_phi: must be positive".into()));
    }
    if !(o.offset_fraction > 0.0 && o.offset_fraction <= 0.5) {
        return Err(Error::Config(format!(
            "outputs.offset_fraction: must lie in (0, 0.5], got {}",
            o.offset_fraction
        )));
    }
    if !(o.power_radius > source.physical_radius) {
        return Err(Error::GeometryViolation(format!(
            "outputs.power_radius: {} must exceed the physical source radius {}",
            o.power_radius, source.physical_radius
        )));
    }
    if let Some(h) = medium.depth() {
        if !(source.center.z + o.power_radius < 0.0 && source.center.z - o.power_radius > h) {
            return Err(Error::GeometryViolation(format!(
                "outputs.power_radius: sphere of radius {} leaves the layer ({h}, 0)",
                o.power_radius
            )));
        }
        if !(source.center.z + source.physical_radius < 0.0 && source.center.z - source.physical_radius > h) {
            return Err(Error::GeometryViolation("source: the physical source must lie inside the layer".into()));
        }
    }
    Ok(())
}

/// One problem found by [`validate`].
#[derive(Debug, Clone, Serialize)]
pub struct Issue {
    pub message: String,
    pub exit_code: i32,
}

/// Runs every independent check and reports all violations; an empty list
/// means the scenario builds.
pub fn validate(config: &ScenarioConfig, base_dir: Option<&Path>) -> Vec<Issue> {
    let mut issues = Vec::new();
    let mut push = |r: Result<()>| {
        if let Err(e) = r {
            issues.push(Issue {
                message: e.to_string(),
                exit_code: e.exit_code(),
            });
        }
    };
    let medium = build_medium(&config.medium).map_err(|e| push(Err(e))).ok();
    let source = build_source(&config.source).map_err(|e| push(Err(e))).ok();
    if let Some(m) = &medium {
        push(build_truncation(config, m).map(|_| ()));
        let targets: Vec<_> = config.farfield.iter().map(|fc| build_target(fc, m)).collect();
        let valid: Vec<FarFieldTarget> = targets.iter().filter_map(|t| t.as_ref().ok().cloned()).collect();
        for t in targets {
            push(t.map(|_| ()));
        }
        push(check_distinct_directions(&valid).map_err(|e| prefix("farfield", e)));
    }
    if let Some(s) = &source {
        push(
            make_sphere_patch_basis(s, config.source.n_lat, config.source.n_lon, config.source.quadrature)
                .map(|_| ())
                .map_err(|e| prefix("source", e)),
        );
        for rc in &config.regions {
            push(build_region(rc, s, base_dir).map(|_| ()));
        }
        if let Some(m) = &medium {
            push(check_outputs(&config.outputs, s, m));
        }
    }
    push(check_region_names(config));
    push(check_solver(&config.solver));
    issues
}

/// Bundled configurations reproducing the five reference experiments.
pub const BUNDLED: [(&str, &str); 5] = [
    ("freespace_null", include_str!("../configs/freespace_null.toml")),
    ("freespace_plane", include_str!("../configs/freespace_plane.toml")),
    ("ocean_null", include_str!("../configs/ocean_null.toml")),
    ("ocean_plane", include_str!("../configs/ocean_plane.toml")),
    ("ocean_two_controls", include_str!("../configs/ocean_two_controls.toml")),
];

pub fn list_scenarios() -> Vec<&'static str> {
    BUNDLED.iter().map(|(name, _)| *name).collect()
}

pub fn bundled(name: &str) -> Result<Scenario> {
    let text = bundled_text(name)?;
    Scenario::build(ScenarioConfig::from_toml(text)?, None)
}

pub fn bundled_text(name: &str) -> Result<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Config(format!("no bundled scenario named {name:?}; try `list`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_expressions() {
        let cases = [
            ("pi", PI),
            ("3pi/4", 0.75 * PI),
            ("-pi/4", -0.25 * PI),
            ("3*pi/4", 0.75 * PI),
            ("0.5", 0.5),
            ("2 pi", 2.0 * PI),
            ("5pi/4", 1.25 * PI),
        ];
        for (s, v) in cases {
            assert!((parse_angle(s).unwrap() - v).abs() < 1e-15, "{s}");
        }
        assert!(parse_angle("tau").is_err());
        assert!(parse_angle("pi/0").is_err());
    }

    #[test]
    fn bundled_configs_build() {
        assert_eq!(list_scenarios().len(), 5);
        for name in list_scenarios() {
            let s = bundled(name).unwrap();
            assert_eq!(s.basis.len(), 234, "{name}");
            assert!(s.regions.iter().all(|r| r.len() == 4640));
            assert_eq!(s.targets.len(), 2);
            let cfg = ScenarioConfig::from_toml(bundled_text(name).unwrap()).unwrap();
            assert!(validate(&cfg, None).is_empty(), "{name}");
        }
        let two = bundled("ocean_two_controls").unwrap();
        assert_eq!(two.regions.len(), 2);
    }

    #[test]
    fn plane_wave_prescription() {
        let s = bundled("freespace_plane").unwrap();
        let r = &s.regions[0];
        for (p, f) in r.points.iter().zip(&r.prescribed) {
            assert!((f - Complex64::from_polar(1.0, -10.0 * p.x)).norm() < 1e-15);
        }
    }

    fn edit(name: &str, f: impl FnOnce(&mut ScenarioConfig)) -> ScenarioConfig {
        let mut c = ScenarioConfig::from_toml(bundled_text(name).unwrap()).unwrap();
        f(&mut c);
        c
    }

    #[test]
    fn validation_names_the_field() {
        let c = edit("ocean_null", |c| c.farfield[1].z = Some(-25.0));
        let issues = validate(&c, None);
        assert_eq!(issues.len(), 1);
        assert!(issues[0].message.contains("farfield.x2"), "{}", issues[0].message);
        assert_eq!(issues[0].exit_code, 2);

        let c = edit("freespace_null", |c| c.regions[0].r = [0.012, 0.03]);
        let issues = validate(&c, None);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].exit_code, 3);
        assert!(matches!(Scenario::build(c, None), Err(Error::GeometryViolation(m)) if m.contains("regions.W1")));

        let c = edit("freespace_null", |c| c.medium.k = -1.0);
        assert!(validate(&c, None).iter().any(|i| i.message.contains("medium")));
    }

    #[test]
    fn grid_file_prescription() {
        let dir = tempfile::tempdir().unwrap();
        let c = edit("freespace_null", |c| {
            c.regions[0].counts = [1, 2, 2];
            c.regions[0].prescription = Prescription::GridFile { path: "w1.csv".into() };
        });
        std::fs::write(dir.path().join("w1.csv"), "# re, im\n1, 0\n0.5,-0.5\n0 1\n2e-3, 0\n").unwrap();
        let s = Scenario::build(c.clone(), Some(dir.path())).unwrap();
        assert_eq!(s.regions[0].prescribed[1], Complex64::new(0.5, -0.5));
        std::fs::write(dir.path().join("w1.csv"), "1, 0\n").unwrap();
        assert!(matches!(Scenario::build(c, Some(dir.path())), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = bundled_text("freespace_null").unwrap().replace("n_lat", "n_latitude");
        assert!(matches!(ScenarioConfig::from_toml(&text), Err(Error::Config(_))));
    }
}
