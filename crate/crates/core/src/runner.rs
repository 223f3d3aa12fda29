//! End-to-end pipeline: assemble, regularize, synthesize, report and write
//! artifacts.

use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::{make_farfield_patch, sphere_surface_grid, ControlRegion, FarFieldDirection, Point3};
use crate::greens::MediumKernel;
use crate::propagator::{assemble, condition_report_with, write_binary, ConditionReport, PropagatorSystem};
use crate::regsolve::{morozov_search_with, svd_solve_with, DensitySolution, MorozovFlag, Spectrum};
use crate::scenario::{prescribe, Scenario};
use crate::synthesis::{
    boundary_inputs, direction_errors, eval_field, modal_power_ocean, radiated_power, region_errors,
    stability_offset_grid, BoundaryInput, ErrorReport, FarField, PowerReport, RegionErrors,
};

/// Field values on one control region, on the collocation grid and on the
/// offset grid.
#[derive(Debug, Clone)]
pub struct RegionResult {
    pub region: ControlRegion,
    pub generated: Vec<Complex64>,
    pub offset: ControlRegion,
    pub offset_generated: Vec<Complex64>,
    /// `false` when the prescription is tabulated and cannot be evaluated off-grid.
    pub offset_prescribed: bool,
}

/// Far-field values on the reporting patch around one target.
#[derive(Debug, Clone)]
pub struct PatchResult {
    pub target: String,
    pub directions: Vec<FarFieldDirection>,
    pub values: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverDiagnostics {
    pub delta: f64,
    pub alpha: f64,
    pub residual_norm: f64,
    pub solution_norm: f64,
    pub iterations: usize,
    pub flags: Vec<MorozovFlag>,
    pub discrepancy_gap_rel: f64,
    pub svd_relative_difference: f64,
    pub normal_equation_residual_rel: f64,
    pub condition: ConditionReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorSummary {
    pub on_grid: ErrorReport,
    pub offset_grid: Vec<RegionErrors>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerMethod {
    SphereFlux,
    ModalFlux,
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerSummary {
    /// Headline value: the sphere flux in free space, the modal flux in the
    /// ocean, where the truncated kernel is unreliable close to the source axis.
    pub method: PowerMethod,
    pub p_ave: f64,
    pub level_db: f64,
    pub sphere: PowerReport,
    /// Ocean only: power carried by the propagating modes to infinity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modal_p_ave: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modal_level_db: Option<f64>,
}

/// Everything computed for one scenario.
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub kernel: MediumKernel,
    pub system: PropagatorSystem,
    pub spectrum: Spectrum,
    pub solution: DensitySolution,
    pub diagnostics: SolverDiagnostics,
    pub regions: Vec<RegionResult>,
    pub far_values: Vec<Complex64>,
    pub patches: Vec<PatchResult>,
    pub boundary: BoundaryInput,
    pub power: PowerSummary,
    pub errors: ErrorSummary,
    pub timings: Vec<(String, f64)>,
}

impl ScenarioResult {
    pub fn density(&self) -> &[Complex64] {
        self.solution.w.as_slice()
    }
}

struct Stopwatch {
    start: Instant,
    laps: Vec<(String, f64)>,
}

impl Stopwatch {
    fn new() -> Self {
        Self {
            start: Instant::now(),
            laps: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        let secs = (now - self.start).as_secs_f64();
        log::info!("{stage}: {secs:.2} s");
        self.laps.push((stage.to_string(), secs));
        self.start = now;
    }
}

/// Solves the scenario with an optional override of the relative noise level.
pub fn solve_scenario(scenario: Scenario, epsilon_rel: Option<f64>) -> Result<ScenarioResult> {
    let mut clock = Stopwatch::new();
    let cfg = &scenario.config;
    let kernel = scenario.kernel()?;
    let system = assemble(
        &kernel,
        &scenario.basis,
        &scenario.regions,
        &scenario.targets,
        cfg.solver.row_weights,
    )?;
    clock.lap("assemble");

    let spectrum = Spectrum::new(&system.a, &system.b)?;
    let condition = condition_report_with(&system, &spectrum);
    clock.lap("svd");

    let eps = epsilon_rel.unwrap_or(cfg.solver.epsilon_rel);
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config(format!("epsilon_rel must lie in (0, 1), got {eps}")));
    }
    let delta = eps * system.b.norm();
    if delta == 0.0 {
        return Err(Error::Config(
            "all prescriptions are zero; the discrepancy target vanishes and the zero density is optimal".into(),
        ));
    }
    let solution = morozov_search_with(&spectrum, &system.a, &system.b, delta, cfg.solver.tol_rel)?;
    let svd = svd_solve_with(&spectrum, &system.a, &system.b, solution.alpha);
    let ne_res = crate::regsolve::normal_equation_residual(&system.a, &system.b, &solution.w, solution.alpha);
    let diagnostics = SolverDiagnostics {
        delta,
        alpha: solution.alpha,
        residual_norm: solution.residual_norm,
        solution_norm: solution.solution_norm,
        iterations: solution.iterations,
        flags: solution.flags.clone(),
        discrepancy_gap_rel: (solution.residual_norm - delta).abs() / delta,
        svd_relative_difference: (&solution.w - &svd.w).norm() / svd.w.norm(),
        normal_equation_residual_rel: ne_res.norm() / system.a.ad_mul(&system.b).norm(),
        condition,
    };
    clock.lap("regularize");

    let density = solution.w.as_slice();
    let mut regions = Vec::new();
    for (region, prescription) in scenario.regions.iter().zip(&scenario.prescriptions) {
        let generated = values(&eval_field(&kernel, &scenario.basis, density, &region.points)?);
        let mut offset = stability_offset_grid(region, cfg.outputs.offset_fraction)?;
        let offset_values = prescribe(prescription, &offset.points);
        let offset_prescribed = offset_values.is_some();
        if let Some(v) = offset_values {
            offset.prescribed = v;
        }
        let offset_generated = values(&eval_field(&kernel, &scenario.basis, density, &offset.points)?);
        regions.push(RegionResult {
            region: region.clone(),
            generated,
            offset,
            offset_generated,
            offset_prescribed,
        });
    }
    clock.lap("near field");

    let far = FarField::new(&kernel, &scenario.basis, density)?;
    let far_values = scenario
        .targets
        .iter()
        .map(|t| far.eval(&t.direction))
        .collect::<Result<Vec<_>>>()?;
    let mut patches = Vec::new();
    for t in &scenario.targets {
        let directions = make_farfield_patch(
            t.direction,
            cfg.outputs.patch_half_width,
            cfg.outputs.patch_size,
            scenario.medium.depth(),
        )?;
        let values = directions.iter().map(|d| far.eval(d)).collect::<Result<Vec<_>>>()?;
        patches.push(PatchResult {
            target: t.name.clone(),
            directions,
            values,
        });
    }
    clock.lap("far field");

    let surface = sphere_surface_grid(
        scenario.source.center,
        scenario.source.physical_radius,
        cfg.outputs.surface_n_theta,
        cfg.outputs.surface_n_phi,
    )?;
    let boundary = boundary_inputs(
        &kernel,
        scenario.medium.rho,
        scenario.medium.c,
        &scenario.source,
        &scenario.basis,
        density,
        &surface,
    )?;
    clock.lap("boundary inputs");

    let sphere = radiated_power(
        &kernel,
        &scenario.source,
        &scenario.basis,
        density,
        cfg.outputs.power_radius,
        cfg.outputs.power_n_theta,
        cfg.outputs.power_n_phi,
    )?;
    let modal_p_ave = match &far {
        FarField::Ocean(expansion) => Some(modal_power_ocean(expansion, 720)),
        FarField::Free { .. } => None,
    };
    let (method, p_ave) = match modal_p_ave {
        Some(p) => (PowerMethod::ModalFlux, p),
        None => (PowerMethod::SphereFlux, sphere.p_ave),
    };
    let power = PowerSummary {
        method,
        p_ave,
        level_db: crate::synthesis::power_to_db(p_ave),
        sphere,
        modal_p_ave,
        modal_level_db: modal_p_ave.map(crate::synthesis::power_to_db),
    };
    clock.lap("power");

    let mut on_grid = ErrorReport::default();
    let mut offset_grid = Vec::new();
    for r in &regions {
        on_grid.regions.push(region_errors(&r.region.name, &r.generated, &r.region.prescribed)?);
        if r.offset_prescribed {
            offset_grid.push(region_errors(&r.offset.name, &r.offset_generated, &r.offset.prescribed)?);
        }
    }
    for (t, v) in scenario.targets.iter().zip(&far_values) {
        on_grid.directions.push(direction_errors(&t.name, *v, t.value));
    }
    drop(far);

    Ok(ScenarioResult {
        scenario,
        kernel,
        system,
        spectrum,
        solution,
        diagnostics,
        regions,
        far_values,
        patches,
        boundary,
        power,
        errors: ErrorSummary { on_grid, offset_grid },
        timings: clock.laps,
    })
}

fn values(samples: &[crate::synthesis::FieldSample]) -> Vec<Complex64> {
    samples.iter().map(|s| s.value).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestFile {
    pub path: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub scenario: String,
    pub config_sha256: String,
    pub version: String,
    pub timings_s: Vec<(String, f64)>,
    pub files: Vec<ManifestFile>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

struct Writer {
    dir: PathBuf,
    files: Vec<ManifestFile>,
}

impl Writer {
    fn put(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files.push(ManifestFile {
            path: name.to_string(),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::NumericalFailure(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }
}

fn c(v: Complex64) -> String {
    format!("{:e},{:e}", v.re, v.im)
}

fn p3(p: &Point3) -> String {
    format!("{:e},{:e},{:e}", p.x, p.y, p.z)
}

fn field_csv(points: &[Point3], generated: &[Complex64], prescribed: Option<&[Complex64]>) -> String {
    let mut s = String::from("x,y,z,re_u,im_u,abs_u");
    if prescribed.is_some() {
        s.push_str(",re_f,im_f,rel_err");
    }
    s.push('\n');
    for (i, (p, u)) in points.iter().zip(generated).enumerate() {
        let _ = write!(s, "{},{},{:e}", p3(p), c(*u), u.norm());
        if let Some(f) = prescribed {
            let rel = if f[i].norm() > crate::synthesis::NULL_FLOOR {
                format!("{:e}", (u - f[i]).norm() / f[i].norm())
            } else {
                String::new()
            };
            let _ = write!(s, ",{},{rel}", c(f[i]));
        }
        s.push('\n');
    }
    s
}

/// Writes every artifact of a solved scenario plus `manifest.json`.
pub fn write_outputs(result: &ScenarioResult, dir: &Path, config_text: &str) -> Result<RunManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut w = Writer {
        dir: dir.to_path_buf(),
        files: Vec::new(),
    };
    let sc = &result.scenario;

    let mut basis = String::from("id,x,y,z,area,nx,ny,nz\n");
    for (i, p) in sc.basis.patches.iter().enumerate() {
        let _ = writeln!(basis, "{i},{},{:e},{}", p3(&p.centroid), p.area, p3(&p.normal));
    }
    w.put("geometry_basis.csv", basis.as_bytes())?;
    for r in &result.regions {
        let mut g = String::from("id,x,y,z\n");
        for (i, p) in r.region.points.iter().enumerate() {
            let _ = writeln!(g, "{i},{}", p3(p));
        }
        w.put(&format!("geometry_{}.csv", r.region.name), g.as_bytes())?;
    }

    let mut dens = String::from("patch,re_w,im_w\n");
    for (i, v) in result.density().iter().enumerate() {
        let _ = writeln!(dens, "{i},{}", c(*v));
    }
    w.put("density.csv", dens.as_bytes())?;
    w.json("diagnostics.json", &result.diagnostics)?;

    for r in &result.regions {
        let on = field_csv(&r.region.points, &r.generated, Some(&r.region.prescribed));
        w.put(&format!("near_{}.csv", r.region.name), on.as_bytes())?;
        let pres = r.offset_prescribed.then_some(r.offset.prescribed.as_slice());
        let off = field_csv(&r.offset.points, &r.offset_generated, pres);
        w.put(&format!("near_{}_offset.csv", r.region.name), off.as_bytes())?;
    }

    for (patch, target) in result.patches.iter().zip(&sc.targets) {
        let mut s = match target.direction {
            FarFieldDirection::Free(_) => String::from("dx,dy,dz,re_u,im_u,abs_u,re_f,im_f,rel_err\n"),
            FarFieldDirection::Ocean { .. } => String::from("theta,z,re_u,im_u,abs_u,re_f,im_f,rel_err\n"),
        };
        for (d, u) in patch.directions.iter().zip(&patch.values) {
            let loc = match d {
                FarFieldDirection::Free(p) => p3(p),
                FarFieldDirection::Ocean { theta, z } => format!("{theta:e},{z:e}"),
            };
            let f = target.value;
            let rel = if f.norm() > crate::synthesis::NULL_FLOOR {
                format!("{:e}", (u - f).norm() / f.norm())
            } else {
                String::new()
            };
            let _ = writeln!(s, "{loc},{},{:e},{},{rel}", c(*u), u.norm(), c(f));
        }
        w.put(&format!("farfield_patch_{}.csv", patch.target), s.as_bytes())?;
    }

    let mut bi = String::from("x,y,z,nx,ny,nz,re_p,im_p,re_v,im_v\n");
    for n in &result.boundary.nodes {
        let _ = writeln!(bi, "{},{},{},{}", p3(&n.point), p3(&n.normal), c(n.pressure), c(n.velocity));
    }
    w.put("boundary_input.csv", bi.as_bytes())?;
    w.json("power.json", &result.power)?;
    w.json("errors.json", &result.errors)?;
    if sc.config.outputs.dump_matrix {
        let path = dir.join("propagator.hcpm");
        write_binary(&result.system, &path)?;
        let bytes = std::fs::metadata(&path).map_err(|e| Error::io(&path, e))?.len();
        w.files.push(ManifestFile {
            path: "propagator.hcpm".into(),
            bytes,
        });
    }

    let manifest = RunManifest {
        scenario: sc.config.name.clone(),
        config_sha256: hex(&Sha256::digest(config_text.as_bytes())),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timings_s: result.timings.clone(),
        files: w.files.clone(),
    };
    w.json("manifest.json", &manifest)?;
    Ok(manifest)
}
