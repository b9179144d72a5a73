//! Layer potentials evaluated off the boundary.
//!
//! `SL(η)(x) = −∫ G(x,y) η(y) dσ_y` and `DL(h)(x) = −∫ ∂_{n_y} G(x,y) h(y) dσ_y`.
//! With these signs an interior solution is `SL(T_N U) + DL(T_D U)` and a
//! radiating exterior one is `−SL(T_N U) − DL(T_D U)`; the post-processing
//! operator is `ℜ(h, ζ) = −SL(ζ) − DL(h)`.
//!
//! Points closer to the boundary than the mesh width are rejected unless
//! [`NearField::Subdivide`] is requested.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bem::TracePair;
use crate::error::{Error, Result};
use crate::fem::InteriorField;
use crate::linalg::C64;
use crate::mesh::{point_segment_distance, BoundaryMesh, Point};
use crate::quadrature::{gauss_legendre, Rule};
use crate::specialfn::{greens_grad_over_r, greens_unchecked, Wavenumber};

/// Gauss points per element (or per sub-element in subdivision mode).
pub const GAUSS_POINTS: usize = 8;

/// Cap on the number of sub-elements used near the boundary.
const MAX_SUBDIVISION: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointSide {
    Interior,
    Exterior,
}

impl std::fmt::Display for PointSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Interior => "interior",
            Self::Exterior => "exterior",
        })
    }
}

/// Field values at tagged points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub points: Vec<Point>,
    pub sides: Vec<PointSide>,
    pub values: Vec<C64>,
}

impl FieldSample {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Pointwise sum; the point sets must agree.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.points != other.points {
            return Err(Error::DimensionMismatch(
                "field samples on different points".into(),
            ));
        }
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            ..self.clone()
        })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }
}

/// Treatment of points closer to the boundary than the mesh width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NearField {
    #[default]
    Reject,
    /// Subdivide nearby elements so that each piece is short compared with
    /// its distance to the point. Accurate down to distances of about 1e-3
    /// times the element length.
    Subdivide,
}

enum Density<'d> {
    Single(&'d [C64]),
    Double(&'d [C64]),
}

fn check(
    mesh: &BoundaryMesh,
    density: usize,
    points: &[Point],
    mode: NearField,
) -> Result<Vec<PointSide>> {
    if density != mesh.len() {
        return Err(Error::DimensionMismatch(format!(
            "density of length {density} on a mesh with {} segments",
            mesh.len()
        )));
    }
    let h = mesh.mesh_width();
    points
        .iter()
        .map(|&x| {
            if !(x[0].is_finite() && x[1].is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "non-finite evaluation point {x:?}"
                )));
            }
            let d = mesh.distance(x);
            if mode == NearField::Reject && d < h {
                return Err(Error::NearField {
                    x: x[0],
                    y: x[1],
                    distance: d,
                    min_distance: h,
                });
            }
            if d == 0.0 {
                return Err(Error::NearField {
                    x: x[0],
                    y: x[1],
                    distance: d,
                    min_distance: 0.0,
                });
            }
            Ok(if mesh.contains(x) {
                PointSide::Interior
            } else {
                PointSide::Exterior
            })
        })
        .collect()
}

fn eval_at(
    mesh: &BoundaryMesh,
    ke: f64,
    density: &Density<'_>,
    x: Point,
    rule: &Rule,
    mode: NearField,
) -> C64 {
    let mut sum = C64::default();
    for (e, seg) in mesh.segments.iter().enumerate() {
        let (a, b) = (mesh.nodes[seg[0]], mesh.nodes[seg[1]]);
        let len = mesh.lengths[e];
        let pieces = match mode {
            NearField::Reject => 1,
            NearField::Subdivide => {
                let d = point_segment_distance(x, a, b);
                if d < 2.0 * len {
                    ((4.0 * len / d).ceil() as usize).clamp(1, MAX_SUBDIVISION)
                } else {
                    1
                }
            }
        };
        let n = mesh.outward_normals[e];
        let w_piece = len / pieces as f64;
        for piece in 0..pieces {
            for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
                let t = (piece as f64 + s) / pieces as f64;
                let y = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                let d = [y[0] - x[0], y[1] - x[1]];
                let r = d[0].hypot(d[1]);
                let v = match density {
                    Density::Single(eta) => greens_unchecked(ke, r) * eta[e],
                    Density::Double(g) => {
                        let h = g[seg[0]] * (1.0 - t) + g[seg[1]] * t;
                        greens_grad_over_r(ke, r) * (d[0] * n[0] + d[1] * n[1]) * h
                    }
                };
                sum -= v * (w * w_piece);
            }
        }
    }
    sum
}

fn evaluate(
    mesh: &BoundaryMesh,
    k: &Wavenumber,
    density: Density<'_>,
    points: &[Point],
    mode: NearField,
) -> Result<FieldSample> {
    let len = match density {
        Density::Single(d) | Density::Double(d) => d.len(),
    };
    let sides = check(mesh, len, points, mode)?;
    let rule = gauss_legendre(GAUSS_POINTS);
    let ke = k.effective();
    let values: Vec<C64> = points
        .par_iter()
        .map(|&x| eval_at(mesh, ke, &density, x, &rule, mode))
        .collect();
    if let Some(i) = values
        .iter()
        .position(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        return Err(Error::Domain(format!(
            "non-finite potential at {:?}",
            points[i]
        )));
    }
    Ok(FieldSample {
        points: points.to_vec(),
        sides,
        values,
    })
}

/// Single-layer potential of a P0 density.
pub fn eval_sl(
    mesh: &BoundaryMesh,
    k: &Wavenumber,
    density: &[C64],
    points: &[Point],
) -> Result<FieldSample> {
    evaluate(mesh, k, Density::Single(density), points, NearField::Reject)
}

/// Double-layer potential of a P1 density.
pub fn eval_dl(
    mesh: &BoundaryMesh,
    k: &Wavenumber,
    density: &[C64],
    points: &[Point],
) -> Result<FieldSample> {
    evaluate(mesh, k, Density::Double(density), points, NearField::Reject)
}

/// [`eval_sl`] with explicit near-field handling.
pub fn eval_sl_with(
    mesh: &BoundaryMesh,
    k: &Wavenumber,
    density: &[C64],
    points: &[Point],
    mode: NearField,
) -> Result<FieldSample> {
    evaluate(mesh, k, Density::Single(density), points, mode)
}

/// [`eval_dl`] with explicit near-field handling.
pub fn eval_dl_with(
    mesh: &BoundaryMesh,
    k: &Wavenumber,
    density: &[C64],
    points: &[Point],
    mode: NearField,
) -> Result<FieldSample> {
    evaluate(mesh, k, Density::Double(density), points, mode)
}

/// `ℜ(h, ζ) = −SL(ζ) − DL(h)`.
pub fn post_process(
    mesh: &BoundaryMesh,
    k: &Wavenumber,
    h: &[C64],
    zeta: &[C64],
    points: &[Point],
) -> Result<FieldSample> {
    let sl = eval_sl(mesh, k, zeta, points)?;
    let dl = eval_dl(mesh, k, h, points)?;
    Ok(sl.add(&dl)?.scale(C64::new(-1.0, 0.0)))
}

/// Exterior field from exterior Cauchy data, `−SL(T_N) − DL(T_D)`.
pub fn exterior_representation(
    mesh: &BoundaryMesh,
    k: &Wavenumber,
    data: &TracePair,
    points: &[Point],
) -> Result<FieldSample> {
    post_process(mesh, k, &data.dirichlet, &data.neumann, points)
}

/// Interior field from interior Cauchy data, `SL(T_N) + DL(T_D)`.
pub fn interior_representation(
    mesh: &BoundaryMesh,
    k: &Wavenumber,
    data: &TracePair,
    points: &[Point],
) -> Result<FieldSample> {
    Ok(exterior_representation(mesh, k, data, points)?.scale(C64::new(-1.0, 0.0)))
}

/// Scattered field `ℜ(T_D U − g, ξ)` of a coupled solution at exterior points.
pub fn postprocess_exterior(
    mesh: &BoundaryMesh,
    k: &Wavenumber,
    trace_g: &[C64],
    u: &InteriorField<'_>,
    xi: &[C64],
    points: &[Point],
) -> Result<FieldSample> {
    if let Some(x) = points.iter().find(|&&x| mesh.contains(x)) {
        return Err(Error::InvalidArgument(format!(
            "{x:?} is not an exterior point"
        )));
    }
    let tu = u.dirichlet_trace();
    if tu.len() != mesh.len() || trace_g.len() != mesh.len() {
        return Err(Error::DimensionMismatch(format!(
            "traces of lengths {}/{} for {} boundary nodes",
            tu.len(),
            trace_g.len(),
            mesh.len()
        )));
    }
    let h: Vec<C64> = tu.iter().zip(trace_g).map(|(a, b)| a - b).collect();
    post_process(mesh, k, &h, xi, points)
}

/// `n` points equally spaced on the circle of given radius about `center`.
pub fn probe_circle(center: Point, radius: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect()
}
