//! Dense method-of-moments propagator: maps pulse-basis coefficients on the
//! fictitious sphere to collocated near-field values and far-field pattern
//! values.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{BasisSet, ControlRegion, FarFieldTarget, Point3};
use crate::greens::MediumKernel;
use crate::regsolve::Spectrum;

/// Origin of one matrix row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowTag {
    Near { region: String, index: usize },
    Far { target: String, index: usize },
}

/// Extra scaling applied to the rows of each control region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NearNormalization {
    /// Plain collocation: every point counts once.
    #[default]
    None,
    /// Rows of a region with `N` points are divided by `sqrt(N)`, so the
    /// region contributes its root-mean-square misfit.
    Rms,
}

/// Per-block row weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowWeights {
    #[serde(default = "unit")]
    pub near: f64,
    #[serde(default = "unit")]
    pub far: f64,
    #[serde(default)]
    pub near_normalization: NearNormalization,
}

fn unit() -> f64 {
    1.0
}

impl Default for RowWeights {
    fn default() -> Self {
        Self {
            near: 1.0,
            far: 1.0,
            near_normalization: NearNormalization::None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PropagatorSystem {
    pub a: DMatrix<Complex64>,
    pub b: DVector<Complex64>,
    pub row_map: Vec<RowTag>,
    pub row_weights: Vec<f64>,
}

/// Single-layer quadrature of `kernel` over one patch.
fn patch_integral(basis: &BasisSet, col: usize, f: impl Fn(&Point3) -> Result<Complex64>) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for node in &basis.patches[col].nodes {
        acc += f(&node.point)? * node.weight;
    }
    Ok(acc)
}

fn fill_row(
    row: usize,
    basis: &BasisSet,
    weight: f64,
    f: impl Fn(&Point3) -> Result<Complex64>,
) -> Result<Vec<Complex64>> {
    (0..basis.len())
        .map(|col| {
            let v = patch_integral(basis, col, &f)? * weight;
            if !v.is_finite() {
                return Err(Error::NumericalFailure(format!(
                    "non-finite propagator entry at row {row}, column {col}"
                )));
            }
            Ok(v)
        })
        .collect()
}

/// Assembles `A` and `b`. Near rows come first, region by region, followed by
/// one row per far-field target.
pub fn assemble(
    kernel: &MediumKernel,
    basis: &BasisSet,
    regions: &[ControlRegion],
    targets: &[FarFieldTarget],
    weights: RowWeights,
) -> Result<PropagatorSystem> {
    if !(weights.near > 0.0 && weights.far > 0.0 && weights.near.is_finite() && weights.far.is_finite()) {
        return Err(Error::InvalidArgument(format!("row weights must be positive, got {weights:?}")));
    }
    let mut row_map = Vec::new();
    let mut row_weights = Vec::new();
    let mut rhs = Vec::new();
    for region in regions {
        if region.prescribed.len() != region.points.len() {
            return Err(Error::InvalidArgument(format!(
                "region {}: {} prescribed values for {} points",
                region.name,
                region.prescribed.len(),
                region.points.len()
            )));
        }
        let wn = match weights.near_normalization {
            NearNormalization::None => weights.near,
            NearNormalization::Rms => weights.near / (region.points.len().max(1) as f64).sqrt(),
        };
        for (i, p) in region.points.iter().enumerate() {
            let d = p.distance(&basis.center);
            if d <= basis.radius {
                return Err(Error::GeometryViolation(format!(
                    "region {} point {i} lies {d:e} m from the source center, inside the fictitious sphere",
                    region.name
                )));
            }
            row_map.push(RowTag::Near {
                region: region.name.clone(),
                index: i,
            });
            row_weights.push(wn);
            rhs.push(region.prescribed[i] * wn);
        }
    }
    let n_near = row_map.len();
    for (j, t) in targets.iter().enumerate() {
        row_map.push(RowTag::Far {
            target: t.name.clone(),
            index: j,
        });
        row_weights.push(weights.far);
        rhs.push(t.value * weights.far);
    }
    let near_points: Vec<&Point3> = regions.iter().flat_map(|r| r.points.iter()).collect();

    let rows: Vec<Vec<Complex64>> = (0..row_map.len())
        .into_par_iter()
        .map(|row| {
            if row < n_near {
                let x = near_points[row];
                fill_row(row, basis, row_weights[row], |y| kernel.near(x, y))
            } else {
                let t = &targets[row - n_near];
                fill_row(row, basis, row_weights[row], |y| kernel.far(&t.direction, y))
            }
        })
        .collect::<Result<_>>()?;

    let n_rows = rows.len();
    let a = DMatrix::from_fn(n_rows, basis.len(), |i, j| rows[i][j]);
    Ok(PropagatorSystem {
        a,
        b: DVector::from_vec(rhs),
        row_map,
        row_weights,
    })
}

/// Spectral and norm diagnostics of an assembled system.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub rows: usize,
    pub cols: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub condition_number: f64,
    pub effective_rank: usize,
    pub row_norm_range: (f64, f64),
    pub col_norm_range: (f64, f64),
}

/// Relative threshold for the effective rank.
pub const RANK_THRESHOLD: f64 = 1e-12;

pub fn condition_report(sys: &PropagatorSystem) -> Result<ConditionReport> {
    let spectrum = Spectrum::new(&sys.a, &sys.b)?;
    Ok(condition_report_with(sys, &spectrum))
}

pub fn condition_report_with(sys: &PropagatorSystem, spectrum: &Spectrum) -> ConditionReport {
    let smax = spectrum.sigma_max();
    let smin = spectrum.sigma_min();
    let rank = spectrum.sigma.iter().filter(|s| **s > RANK_THRESHOLD * smax).count();
    let range = |it: &mut dyn Iterator<Item = f64>| {
        it.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let row_norm_range = range(&mut sys.a.row_iter().map(|r| r.norm()));
    let col_norm_range = range(&mut sys.a.column_iter().map(|c| c.norm()));
    ConditionReport {
        rows: sys.a.nrows(),
        cols: sys.a.ncols(),
        sigma_max: smax,
        sigma_min: smin,
        condition_number: if smin > 0.0 { smax / smin } else { f64::INFINITY },
        effective_rank: rank,
        row_norm_range,
        col_norm_range,
    }
}

const MAGIC: &[u8; 4] = b"HCPM";
/// Header flag: the right-hand side follows the matrix.
pub const FLAG_HAS_RHS: u32 = 1;

/// Writes `A` (row-major) and `b` as interleaved little-endian `f64` pairs.
pub fn write_binary(sys: &PropagatorSystem, path: &Path) -> Result<()> {
    let (nr, nc) = sys.a.shape();
    let to_u32 = |v: usize| {
        u32::try_from(v).map_err(|_| Error::InvalidArgument(format!("dimension {v} does not fit the dump header")))
    };
    let mut buf = Vec::with_capacity(16 + 16 * (nr * nc + nr));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&to_u32(nr)?.to_le_bytes());
    buf.extend_from_slice(&to_u32(nc)?.to_le_bytes());
    buf.extend_from_slice(&FLAG_HAS_RHS.to_le_bytes());
    for i in 0..nr {
        for j in 0..nc {
            let v = sys.a[(i, j)];
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    for v in sys.b.iter() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Reads a dump produced by [`write_binary`].
pub fn read_binary(path: &Path) -> Result<(DMatrix<Complex64>, Option<DVector<Complex64>>)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(Error::InvalidArgument(format!("{} is not a propagator dump", path.display())));
    }
    let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (nr, nc, flags) = (word(4), word(8), word(12) as u32);
    let has_rhs = flags & FLAG_HAS_RHS != 0;
    let count = nr * nc + if has_rhs { nr } else { 0 };
    if bytes.len() != 16 + 16 * count {
        return Err(Error::InvalidArgument(format!("{}: truncated propagator dump", path.display())));
    }
    let value = |k: usize| {
        let o = 16 + 16 * k;
        Complex64::new(
            f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()),
            f64::from_le_bytes(bytes[o + 8..o + 16].try_into().unwrap()),
        )
    };
    let a = DMatrix::from_fn(nr, nc, |i, j| value(i * nc + j));
    let b = has_rhs.then(|| DVector::from_fn(nr, |i, _| value(nr * nc + i)));
    Ok((a, b))
}
