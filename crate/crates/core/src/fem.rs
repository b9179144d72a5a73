//! Continuous piecewise-linear finite elements on an [`InteriorMesh`]: the
//! bilinear form `Φ(U, V) = ∫ ∇U·∇V − κ² r U V`, interior eigenproblems and
//! boundary traces of eigenmodes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sparse::{CsrMatrix, SkylineCholesky};
use crate::linalg::{self, DenseMatrix, Lu, C64};
use crate::mesh::{dist, BoundaryMesh, InteriorMesh, Point};
use crate::specialfn::Wavenumber;

/// Triangles with smaller area are rejected by the assembly.
pub const MIN_TRIANGLE_AREA: f64 = 1e-14;

/// Largest number of eigenpairs [`interior_eigenpairs`] computes.
pub const MAX_EIGENPAIRS: usize = 20;

/// Iteration cap of the subspace iteration.
pub const EIGEN_MAX_ITERATIONS: usize = 400;

/// Relative residual `‖Ax − λBx‖ / (‖Ax‖ + (|λ| + 1)‖Bx‖)` accepted for each pair.
pub const EIGEN_RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Coefficients of a P1 function on the vertices of `mesh`.
#[derive(Debug, Clone)]
pub struct InteriorField<'m> {
    pub mesh: &'m InteriorMesh,
    pub coefficients: Vec<C64>,
}

impl<'m> InteriorField<'m> {
    pub fn new(mesh: &'m InteriorMesh, coefficients: Vec<C64>) -> Result<Self> {
        if coefficients.len() != mesh.n_vertices() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} vertices",
                coefficients.len(),
                mesh.n_vertices()
            )));
        }
        if !coefficients
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            return Err(Error::Domain("non-finite field coefficient".into()));
        }
        Ok(Self { mesh, coefficients })
    }

    pub fn zeros(mesh: &'m InteriorMesh) -> Self {
        Self {
            mesh,
            coefficients: vec![C64::default(); mesh.n_vertices()],
        }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &'m InteriorMesh, f: impl Fn(Point) -> C64) -> Self {
        Self {
            mesh,
            coefficients: mesh.vertices.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Values at the boundary nodes, in boundary-mesh order.
    pub fn dirichlet_trace(&self) -> Vec<C64> {
        self.mesh
            .boundary_trace_map
            .iter()
            .map(|&v| self.coefficients[v])
            .collect()
    }

    /// `L²(Ω)` norm, computed with the consistent mass matrix.
    pub fn l2_norm(&self) -> f64 {
        let m = mass_matrix(self.mesh, None);
        let mc = m.map(|x| C64::new(x, 0.0));
        let c: Vec<C64> = self.coefficients.iter().map(|z| z.conj()).collect();
        mc.bilinear(&c, &self.coefficients).re.max(0.0).sqrt()
    }
}

/// Piecewise-constant refractive index `r(x)` inside, `r0` outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialField {
    pub refractive_index: Vec<f64>,
    pub exterior: f64,
}

impl MaterialField {
    /// `r ≡ r0` everywhere.
    pub fn homogeneous(mesh: &InteriorMesh, r0: f64) -> Result<Self> {
        Self::from_fn(mesh, r0, |_| r0)
    }

    /// Samples `r` at triangle centroids.
    pub fn from_fn(mesh: &InteriorMesh, r0: f64, r: impl Fn(Point) -> f64) -> Result<Self> {
        let m = Self {
            refractive_index: (0..mesh.triangles.len())
                .map(|t| r(mesh.centroid(t)))
                .collect(),
            exterior: r0,
        };
        m.validate(mesh)?;
        Ok(m)
    }

    pub fn validate(&self, mesh: &InteriorMesh) -> Result<()> {
        if self.refractive_index.len() != mesh.triangles.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} material values for {} triangles",
                self.refractive_index.len(),
                mesh.triangles.len()
            )));
        }
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.exterior) {
            return Err(Error::InvalidArgument(format!(
                "exterior coefficient {} must be positive",
                self.exterior
            )));
        }
        if let Some((t, v)) = self
            .refractive_index
            .iter()
            .enumerate()
            .find(|(_, &v)| !ok(v))
        {
            return Err(Error::InvalidArgument(format!(
                "refractive index {v} on triangle {t} must be positive"
            )));
        }
        Ok(())
    }
}

fn corners(mesh: &InteriorMesh, t: usize) -> [Point; 3] {
    let [a, b, c] = mesh.triangles[t];
    [mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]]
}

fn signed_area(p: &[Point; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

/// P1 stiffness matrix `∫ ∇φ_a·∇φ_b` of one triangle.
pub fn local_stiffness(p: [Point; 3]) -> Result<[[f64; 3]; 3]> {
    let area = signed_area(&p);
    if area < MIN_TRIANGLE_AREA {
        return Err(Error::InvalidMesh(format!(
            "degenerate triangle {p:?} with area {area:e}"
        )));
    }
    // ∇φ_a = rot(opposite edge) / 2|T|
    let e = |a: usize| {
        let (q, r) = (p[(a + 1) % 3], p[(a + 2) % 3]);
        [q[1] - r[1], r[0] - q[0]]
    };
    let mut k = [[0.0; 3]; 3];
    for (a, row) in k.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            let (ea, eb) = (e(a), e(b));
            *v = (ea[0] * eb[0] + ea[1] * eb[1]) / (4.0 * area);
        }
    }
    Ok(k)
}

/// P1 mass matrix `∫ φ_a φ_b` of one triangle.
pub fn local_mass(p: [Point; 3]) -> Result<[[f64; 3]; 3]> {
    let area = signed_area(&p);
    if area < MIN_TRIANGLE_AREA {
        return Err(Error::InvalidMesh(format!(
            "degenerate triangle {p:?} with area {area:e}"
        )));
    }
    let mut m = [[area / 12.0; 3]; 3];
    for (a, row) in m.iter_mut().enumerate() {
        row[a] = area / 6.0;
    }
    Ok(m)
}

/// Stiffness and (optionally weighted) mass matrices with the same pattern.
fn assemble_real(
    mesh: &InteriorMesh,
    weight: Option<&[f64]>,
) -> Result<(CsrMatrix<f64>, CsrMatrix<f64>)> {
    let local: Vec<([[f64; 3]; 3], [[f64; 3]; 3])> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let p = corners(mesh, t);
            let w = weight.map_or(1.0, |w| w[t]);
            let mut m = local_mass(p)?;
            m.iter_mut().flatten().for_each(|x| *x *= w);
            Ok((local_stiffness(p)?, m))
        })
        .collect::<Result<_>>()?;
    let n = mesh.n_vertices();
    let mut ts = Vec::with_capacity(9 * local.len());
    let mut tm = Vec::with_capacity(9 * local.len());
    for (tri, (k, m)) in mesh.triangles.iter().zip(&local) {
        for a in 0..3 {
            for b in 0..3 {
                ts.push((tri[a], tri[b], k[a][b]));
                tm.push((tri[a], tri[b], m[a][b]));
            }
        }
    }
    Ok((
        CsrMatrix::from_triplets(n, n, &ts)?,
        CsrMatrix::from_triplets(n, n, &tm)?,
    ))
}

/// Global P1 stiffness matrix.
pub fn stiffness_matrix(mesh: &InteriorMesh) -> Result<CsrMatrix<f64>> {
    Ok(assemble_real(mesh, None)?.0)
}

/// Global P1 mass matrix, weighted per triangle when `weight` is given.
///
/// Panics on degenerate triangles; use [`assemble_phi`] for checked assembly.
pub fn mass_matrix(mesh: &InteriorMesh, weight: Option<&[f64]>) -> CsrMatrix<f64> {
    assemble_real(mesh, weight).expect("mesh was validated").1
}

/// Galerkin matrix of `Φ(U, V) = ∫ ∇U·∇V − κ² r U V`.
///
/// The matrix is complex only for type uniformity with the boundary blocks;
/// its entries are real and it is exactly symmetric.
pub fn assemble_phi(
    mesh: &InteriorMesh,
    mat: &MaterialField,
    k: &Wavenumber,
) -> Result<CsrMatrix<C64>> {
    mat.validate(mesh)?;
    let (s, m) = assemble_real(mesh, Some(&mat.refractive_index))?;
    let phi = s.axpby(1.0, &m, -k.kappa * k.kappa)?;
    Ok(phi.map(|x| C64::new(x, 0.0)))
}

/// Boundary condition of an interior eigenproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Eigenpair of `-ΔU = λ U`, mass-normalized.
#[derive(Debug, Clone)]
pub struct EigenMode<'m> {
    pub lambda: f64,
    pub bc: BoundaryCondition,
    pub field: InteriorField<'m>,
}

/// `count` smallest eigenpairs of the P1 pencil (stiffness, mass), ascending.
///
/// Dirichlet conditions are imposed by eliminating boundary rows and columns.
/// The pencil is solved by shift-and-invert subspace iteration with
/// Rayleigh–Ritz acceleration around the shift `-1`, factorizing
/// `S + M` once with an envelope Cholesky.
pub fn interior_eigenpairs(
    mesh: &InteriorMesh,
    bc: BoundaryCondition,
    count: usize,
) -> Result<Vec<EigenMode<'_>>> {
    if count == 0 || count > MAX_EIGENPAIRS {
        return Err(Error::InvalidArgument(format!(
            "count {count} must be in 1..={MAX_EIGENPAIRS}"
        )));
    }
    let (s, m) = assemble_real(mesh, None)?;
    let keep: Vec<usize> = match bc {
        BoundaryCondition::Neumann => (0..mesh.n_vertices()).collect(),
        BoundaryCondition::Dirichlet => {
            let flags = mesh.boundary_flags();
            (0..mesh.n_vertices()).filter(|&v| !flags[v]).collect()
        }
    };
    if keep.len() < count {
        return Err(Error::InvalidArgument(format!(
            "{count} eigenpairs requested but only {} free vertices",
            keep.len()
        )));
    }
    let (s, m) = if keep.len() == mesh.n_vertices() {
        (s, m)
    } else {
        (s.submatrix(&keep), m.submatrix(&keep))
    };
    let (values, vectors) = subspace_iteration(&s, &m, count, -1.0)?;
    Ok(values
        .into_iter()
        .zip(vectors)
        .map(|(lambda, x)| {
            let mut c = vec![C64::default(); mesh.n_vertices()];
            for (k, &v) in keep.iter().enumerate() {
                c[v] = C64::new(x[k], 0.0);
            }
            EigenMode {
                lambda,
                bc,
                field: InteriorField {
                    mesh,
                    coefficients: c,
                },
            }
        })
        .collect())
}

fn columns_matmul(a: &CsrMatrix<f64>, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    x.par_iter().map(|c| a.matvec(c)).collect()
}

fn gram(x: &[Vec<f64>], y: &[Vec<f64>]) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(x.len(), y.len(), |i, j| linalg::dot(&x[i], &y[j]))
}

fn subspace_iteration(
    a: &CsrMatrix<f64>,
    b: &CsrMatrix<f64>,
    count: usize,
    shift: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.rows();
    let p = (2 * count).max(count + 8).min(n);
    let op = SkylineCholesky::new(&a.axpby(1.0, b, -shift)?)?;
    // Deterministic start vectors (a fixed linear congruential sequence).
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|_| {
            (0..n)
                .map(|_| {
                    state = state
                        .wrapping_mul(6_364_136_223_846_793_005)
                        .wrapping_add(1_442_695_040_888_963_407);
                    (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                })
                .collect()
        })
        .collect();
    for _ in 0..EIGEN_MAX_ITERATIONS {
        let bx = columns_matmul(b, &x);
        let y: Vec<Vec<f64>> = bx.par_iter().map(|c| op.solve(c)).collect();
        let ay = columns_matmul(a, &y);
        let by = columns_matmul(b, &y);
        let pairs = linalg::sym_generalized_eig(&gram(&y, &ay), &gram(&y, &by), p)?;
        x = (0..p)
            .map(|k| {
                let q = pairs.vector(k);
                let mut v = vec![0.0; n];
                for (yj, &qj) in y.iter().zip(&q) {
                    for (vi, &yi) in v.iter_mut().zip(yj) {
                        *vi += qj * yi;
                    }
                }
                v
            })
            .collect();
        let theta = &pairs.values[..count];
        let worst = (0..count)
            .map(|k| {
                let ax = a.matvec(&x[k]);
                let bx = b.matvec(&x[k]);
                let r: Vec<f64> = ax.iter().zip(&bx).map(|(u, v)| u - theta[k] * v).collect();
                linalg::norm(&r)
                    / (linalg::norm(&ax) + (theta[k].abs() + shift.abs()) * linalg::norm(&bx))
                        .max(1e-300)
            })
            .fold(0.0, f64::max);
        if worst <= EIGEN_RESIDUAL_TOLERANCE {
            let values = theta.to_vec();
            let mut vectors: Vec<Vec<f64>> = x.into_iter().take(count).collect();
            for v in &mut vectors {
                // Fix the sign so that the largest entry is positive.
                let big = v
                    .iter()
                    .cloned()
                    .fold(0.0f64, |m, e| if e.abs() > m.abs() { e } else { m });
                if big < 0.0 {
                    v.iter_mut().for_each(|e| *e = -*e);
                }
            }
            return Ok((values, vectors));
        }
    }
    Err(Error::NoConvergence(format!(
        "subspace iteration did not converge in {EIGEN_MAX_ITERATIONS} iterations"
    )))
}

/// Checks that the boundary nodes of `mesh` sit on the nodes of `boundary`.
pub fn check_trace_map(mesh: &InteriorMesh, boundary: &BoundaryMesh) -> Result<()> {
    if mesh.boundary_trace_map.len() != boundary.len() {
        return Err(Error::DimensionMismatch(format!(
            "trace map has {} entries, boundary has {} nodes",
            mesh.boundary_trace_map.len(),
            boundary.len()
        )));
    }
    let scale = boundary.diameter();
    for (p, &v) in mesh.boundary_trace_map.iter().enumerate() {
        if dist(mesh.vertices[v], boundary.nodes[p]) > 1e-10 * scale {
            return Err(Error::InvalidArgument(format!(
                "boundary node {p} does not coincide with interior vertex {v}"
            )));
        }
    }
    Ok(())
}

/// Neumann trace (P0 coefficients of `-n·∇U`) of a Dirichlet eigenmode,
/// defined variationally.
///
/// The P1 representation `η₁` solves `⟨η₁, φ_p⟩ = -Φ_λ(U, φ_p)` over the
/// boundary hat functions, with `Φ_λ` using the eigenvalue in place of `κ² r`.
/// It is then projected onto piecewise constants in `L²(Γ)`. The P1 solve
/// avoids the duality pairing between P0 and P1, which is singular on
/// meshes with an even number of segments.
pub fn neumann_trace_of_mode(mode: &EigenMode<'_>, boundary: &BoundaryMesh) -> Result<Vec<C64>> {
    if mode.bc != BoundaryCondition::Dirichlet {
        return Err(Error::InvalidArgument(
            "Neumann traces are defined for Dirichlet modes only".into(),
        ));
    }
    let mesh = mode.field.mesh;
    check_trace_map(mesh, boundary)?;
    let (s, m) = assemble_real(mesh, None)?;
    let phi = s.axpby(1.0, &m, -mode.lambda)?;
    let u = &mode.field.coefficients;
    // Φ is symmetric, so row p of Φ u gives Φ(U, φ_p).
    let rows = phi.map(|x| C64::new(x, 0.0)).matvec(u);
    let r: Vec<C64> = mesh.boundary_trace_map.iter().map(|&v| -rows[v]).collect();
    p1_to_p0(boundary, &r)
}

/// Dirichlet trace (nodal values on the boundary) of a Neumann eigenmode.
pub fn dirichlet_trace_of_mode(mode: &EigenMode<'_>, boundary: &BoundaryMesh) -> Result<Vec<C64>> {
    if mode.bc != BoundaryCondition::Neumann {
        return Err(Error::InvalidArgument(
            "Dirichlet traces of Dirichlet modes vanish".into(),
        ));
    }
    check_trace_map(mode.field.mesh, boundary)?;
    Ok(mode.field.dirichlet_trace())
}

/// Given the moments `r_p = ⟨η, φ_p⟩` against the P1 boundary basis,
/// returns the `L²` projection onto P0 of the P1 function with these moments.
pub(crate) fn p1_to_p0(boundary: &BoundaryMesh, moments: &[C64]) -> Result<Vec<C64>> {
    let (m00, m11, m10) = crate::bem::mass_matrices(boundary);
    let eta1 = Lu::new(&m11.to_complex())?.solve(moments)?;
    let m01 = m10.transpose().to_complex();
    let proj = m01.matvec(&eta1)?;
    Ok(proj
        .iter()
        .enumerate()
        .map(|(e, z)| z / m00[(e, e)])
        .collect())
}
