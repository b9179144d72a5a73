//! Symmetric FEM–BEM coupling for the transmission problem.
//!
//! Unknowns are the P1 coefficients `U` on all vertices of the interior mesh
//! followed by the P0 coefficients `ξ` of the exterior Neumann trace. With
//! `T` the injection of boundary nodes into the interior vertices, the
//! Galerkin matrix is
//!
//! ```text
//! [ Φ − Tᵀ W T        Tᵀ (−K† + ½M) ]
//! [ (K + ½M) T        V             ]
//! ```
//!
//! and the right-hand side is `(M f − Tᵀ(M η + W g), (K + ½M) g)`.

use serde::{Deserialize, Serialize};

use crate::bem::{
    self, add_real, cauchy_data_plane_wave, BoundaryOperatorSet, RESONANCE_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::fem::{self, assemble_phi, check_trace_map, InteriorField, MaterialField};
use crate::linalg::sparse::CsrMatrix;
use crate::linalg::{self, DenseMatrix, Lu, C64};
use crate::mesh::{BoundaryMesh, InteriorMesh, Point};

/// Relative singular value below which [`solve`] truncates.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// The coupled Galerkin matrix together with the data it was built from.
#[derive(Debug, Clone)]
pub struct CoupledSystem<'a> {
    pub matrix: DenseMatrix<C64>,
    pub ops: &'a BoundaryOperatorSet,
    pub interior: &'a InteriorMesh,
    pub boundary: &'a BoundaryMesh,
    pub material: &'a MaterialField,
    /// `Φ̂`, kept for right-hand sides and diagnostics.
    pub phi: CsrMatrix<C64>,
}

impl CoupledSystem<'_> {
    pub fn n_interior(&self) -> usize {
        self.interior.n_vertices()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn dim(&self) -> usize {
        self.n_interior() + self.n_boundary()
    }

    /// Boundary restriction map `T` as vertex indices.
    pub fn trace_map(&self) -> &[usize] {
        &self.interior.boundary_trace_map
    }

    /// `‖𝒫̂ − 𝒫̂ᵀ‖_F / ‖𝒫̂‖_F`.
    pub fn symmetry_defect(&self) -> f64 {
        let a = &self.matrix;
        let n = a.rows();
        let mut d = 0.0;
        for i in 0..n {
            for j in 0..i {
                d += 2.0 * (a[(i, j)] - a[(j, i)]).norm_sqr();
            }
        }
        d.sqrt() / a.norm_fro()
    }

    /// Gram matrix of the natural norms on the unknowns: `H¹(Ω)` for `U`
    /// and the Laplace single-layer energy for `ξ`.
    pub fn energy_gram(&self) -> DenseMatrix<f64> {
        let ni = self.n_interior();
        let s = fem::stiffness_matrix(self.interior).expect("mesh was validated");
        let m = fem::mass_matrix(self.interior, None);
        let h1 = s.axpby(1.0, &m, 1.0).expect("same pattern").to_dense();
        let mut g = DenseMatrix::zeros(self.dim(), self.dim());
        g.set_block(0, 0, &h1);
        g.set_block(ni, ni, &self.ops.v_ref);
        g
    }

    /// Energy-normalized singular values, descending, with right singular vectors.
    pub fn energy_svd(&self) -> Result<linalg::Svd<C64>> {
        let g = self.energy_gram();
        linalg::gram_svd(&self.matrix, &g, &g)
    }
}

/// Assembles the coupled matrix.
pub fn build_coupled<'a>(
    interior: &'a InteriorMesh,
    boundary: &'a BoundaryMesh,
    material: &'a MaterialField,
    ops: &'a BoundaryOperatorSet,
) -> Result<CoupledSystem<'a>> {
    check_trace_map(interior, boundary)?;
    if ops.n() != boundary.len() {
        return Err(Error::DimensionMismatch(format!(
            "operators of size {} for a boundary with {} segments",
            ops.n(),
            boundary.len()
        )));
    }
    let phi = assemble_phi(interior, material, &ops.k)?;
    let ni = interior.n_vertices();
    let nb = boundary.len();
    let t = &interior.boundary_trace_map;
    let mut a = DenseMatrix::<C64>::zeros(ni + nb, ni + nb);
    for i in 0..ni {
        for (j, v) in phi.row_entries(i) {
            a[(i, j)] = v;
        }
    }
    let b12 = ops.minus_kadj_plus_half();
    let b21 = ops.k_plus_half();
    for p in 0..nb {
        for q in 0..nb {
            a[(t[p], t[q])] -= ops.w_mat[(p, q)];
            a[(t[p], ni + q)] = b12[(p, q)];
            a[(ni + p, t[q])] = b21[(p, q)];
            a[(ni + p, ni + q)] = ops.v_mat[(p, q)];
        }
    }
    Ok(CoupledSystem {
        matrix: a,
        ops,
        interior,
        boundary,
        material,
        phi,
    })
}

/// Plane wave `amplitude · exp(i κ √r0 d·x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidentWave {
    pub direction: Point,
    pub amplitude: C64,
}

impl IncidentWave {
    pub fn eval(&self, ke: f64, x: Point) -> C64 {
        self.amplitude
            * C64::from_polar(
                1.0,
                ke * (self.direction[0] * x[0] + self.direction[1] * x[1]),
            )
    }
}

/// Jump data of the transmission problem and the interior source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionData {
    /// Dirichlet jump `g` (P1 boundary coefficients).
    pub g: Vec<C64>,
    /// Neumann jump `η` (P0 boundary coefficients).
    pub eta: Vec<C64>,
    /// Interior source `f` as P1 coefficients; `None` means zero.
    pub f: Option<Vec<C64>>,
    pub incident: Option<IncidentWave>,
}

impl TransmissionData {
    pub fn zeros(boundary: &BoundaryMesh) -> Self {
        Self {
            g: vec![C64::default(); boundary.len()],
            eta: vec![C64::default(); boundary.len()],
            f: None,
            incident: None,
        }
    }

    /// Jumps equal to the traces of an incident plane wave, so that the
    /// interior field is the total field and the exterior one is scattered.
    pub fn plane_wave(
        boundary: &BoundaryMesh,
        k: crate::Wavenumber,
        wave: IncidentWave,
    ) -> Result<Self> {
        let d = cauchy_data_plane_wave(boundary, k, wave.direction)?;
        Ok(Self {
            g: d.dirichlet.iter().map(|z| z * wave.amplitude).collect(),
            eta: d.neumann.iter().map(|z| z * wave.amplitude).collect(),
            f: None,
            incident: Some(wave),
        })
    }
}

/// Right-hand side `(R_V, R_T)`.
pub fn build_rhs(system: &CoupledSystem<'_>, data: &TransmissionData) -> Result<Vec<C64>> {
    let nb = system.n_boundary();
    let ni = system.n_interior();
    if data.g.len() != nb || data.eta.len() != nb {
        return Err(Error::DimensionMismatch(format!(
            "jump data of lengths {}/{} for {nb} boundary unknowns",
            data.g.len(),
            data.eta.len()
        )));
    }
    let mut rhs = vec![C64::default(); ni + nb];
    if let Some(f) = &data.f {
        if f.len() != ni {
            return Err(Error::DimensionMismatch(format!(
                "source has {} coefficients, expected {ni}",
                f.len()
            )));
        }
        let m = fem::mass_matrix(system.interior, None).map(|x| C64::new(x, 0.0));
        rhs[..ni].copy_from_slice(&m.matvec(f));
    }
    let ops = system.ops;
    let m_eta = ops.mass_dn.to_complex().matvec(&data.eta)?;
    let wg = ops.w_mat.matvec(&data.g)?;
    for (p, &v) in system.trace_map().iter().enumerate() {
        rhs[v] -= m_eta[p] + wg[p];
    }
    let rt = ops.k_plus_half().matvec(&data.g)?;
    rhs[ni..].copy_from_slice(&rt);
    Ok(rhs)
}

/// Solution pair of the coupled problem.
#[derive(Debug, Clone)]
pub struct CoupledSolution<'m> {
    pub u: InteriorField<'m>,
    pub xi: Vec<C64>,
    /// Set when the matrix was numerically singular and the minimum-norm
    /// least-squares solution was returned.
    pub rank_deficient: bool,
    /// Right singular vectors dropped by the truncation.
    pub near_null: Vec<Vec<C64>>,
    /// `‖𝒫̂ x − b‖ / ‖b‖`.
    pub relative_residual: f64,
}

fn finish<'m>(
    system: &CoupledSystem<'m>,
    x: Vec<C64>,
    rhs: &[C64],
    rank_deficient: bool,
    near_null: Vec<Vec<C64>>,
) -> Result<CoupledSolution<'m>> {
    let ni = system.n_interior();
    let ax = system.matrix.matvec(&x)?;
    let r: Vec<C64> = ax.iter().zip(rhs).map(|(a, b)| a - b).collect();
    let nb = linalg::norm(rhs);
    let relative_residual = if nb > 0.0 {
        linalg::norm(&r) / nb
    } else {
        linalg::norm(&r)
    };
    Ok(CoupledSolution {
        u: InteriorField::new(system.interior, x[..ni].to_vec())?,
        xi: x[ni..].to_vec(),
        rank_deficient,
        near_null,
        relative_residual,
    })
}

/// Solves the coupled system by LU, falling back to a truncated SVD when
/// `σ_min/σ_max < RANK_TOLERANCE` or the factorization hits a zero pivot.
pub fn solve<'m>(system: &CoupledSystem<'m>, rhs: &[C64]) -> Result<CoupledSolution<'m>> {
    if rhs.len() != system.dim() {
        return Err(Error::DimensionMismatch(format!(
            "rhs has length {}, expected {}",
            rhs.len(),
            system.dim()
        )));
    }
    if !rhs.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain("non-finite right-hand side".into()));
    }
    match Lu::new(&system.matrix) {
        Ok(lu) => {
            let x = lu.solve(rhs)?;
            let sol = finish(system, x, rhs, false, Vec::new())?;
            if sol.relative_residual.is_finite() && sol.relative_residual <= 1e-8 {
                return Ok(sol);
            }
            solve_least_squares(system, rhs, RANK_TOLERANCE)
        }
        Err(Error::Singular { .. }) => solve_least_squares(system, rhs, RANK_TOLERANCE),
        Err(e) => Err(e),
    }
}

/// Minimum-norm solution discarding singular values below
/// `relative_tolerance · σ_max`. Singular values are those of the raw
/// coefficient matrix.
pub fn solve_least_squares<'m>(
    system: &CoupledSystem<'m>,
    rhs: &[C64],
    relative_tolerance: f64,
) -> Result<CoupledSolution<'m>> {
    let s = linalg::svd(&system.matrix)?;
    let smax = s.values.first().copied().unwrap_or(0.0);
    let n = system.dim();
    let mut x = vec![C64::default(); n];
    let mut near_null = Vec::new();
    for (j, &sj) in s.values.iter().enumerate() {
        if sj <= relative_tolerance * smax {
            near_null.push(s.right_vector(j));
            continue;
        }
        let uj = s.left_vector(j);
        let c = linalg::dot(&uj, rhs) / sj;
        for (xi, vi) in x.iter_mut().zip(s.right_vector(j)) {
            *xi += c * vi;
        }
    }
    let deficient = !near_null.is_empty();
    finish(system, x, rhs, deficient, near_null)
}

/// The two Dirichlet-to-Neumann maps and Costabel's symmetric combination.
#[derive(Debug, Clone)]
pub struct DtnMaps {
    /// `−V⁻¹(K + ½)`, P1 coefficients to P0 coefficients.
    pub dtn1: DenseMatrix<C64>,
    /// `−(K† + ½)⁻¹ W`, P1 coefficients to P0 coefficients.
    pub dtn2: DenseMatrix<C64>,
    /// `−W + (−K† + ½) DtN₁` as a Galerkin form (P1 test × P1 trial).
    pub costabel: DenseMatrix<C64>,
}

/// `DtN₁ = −V⁻¹(K + ½)`, failing at Dirichlet resonances.
pub fn dtn1(ops: &BoundaryOperatorSet) -> Result<DenseMatrix<C64>> {
    bem::check_v_resonance(ops).map_err(|e| rename(e, "DtN1 (V)"))?;
    let x = Lu::new(&ops.v_mat)?.solve_matrix(&ops.k_plus_half())?;
    Ok(x.scale(C64::new(-1.0, 0.0)))
}

/// `DtN₂ = −(K† + ½)⁻¹ W`, failing where `K† + ½` is singular (at
/// Neumann resonances).
///
/// `K† + ½` is inverted in its P1 × P1 Galerkin form and the result is
/// projected onto P0 in `L²`. The P1 test × P0 trial form contains the
/// singular duality pairing of the two spaces and is not used.
pub fn dtn2(ops: &BoundaryOperatorSet) -> Result<DenseMatrix<C64>> {
    let a = add_real(&ops.kadj11, &ops.m11, 0.5);
    let s = *linalg::gram_svd(&a, &ops.m11, &ops.m11)?
        .values
        .last()
        .unwrap_or(&0.0);
    if s < RESONANCE_THRESHOLD {
        return Err(Error::Resonance {
            operator: "DtN2 (K†+½)",
            spectrum: "Neumann",
            kappa: ops.k.kappa,
            sigma_min: s,
        });
    }
    let x1 = Lu::new(&a)?.solve_matrix(&ops.w_mat)?;
    let p = ops.m01().to_complex().matmul(&x1)?;
    let n = ops.n();
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        -p[(i, j)] / ops.m00[(i, i)]
    }))
}

/// Costabel's symmetric Dirichlet-to-Neumann form.
pub fn dtn_costabel(ops: &BoundaryOperatorSet) -> Result<DenseMatrix<C64>> {
    let d1 = dtn1(ops)?;
    ops.minus_kadj_plus_half().matmul(&d1)?.sub(&ops.w_mat)
}

pub fn dtn_maps(ops: &BoundaryOperatorSet) -> Result<DtnMaps> {
    let dtn1 = dtn1(ops)?;
    let costabel = ops.minus_kadj_plus_half().matmul(&dtn1)?.sub(&ops.w_mat)?;
    Ok(DtnMaps {
        dtn2: dtn2(ops)?,
        dtn1,
        costabel,
    })
}

fn rename(e: Error, operator: &'static str) -> Error {
    match e {
        Error::Resonance {
            spectrum,
            kappa,
            sigma_min,
            ..
        } => Error::Resonance {
            operator,
            spectrum,
            kappa,
            sigma_min,
        },
        e => e,
    }
}

/// Least-squares solution that discards energy-normalized singular values
/// below `threshold` (see [`CoupledSystem::energy_svd`]). Near a spurious
/// resonance this removes the near-null direction instead of amplifying it.
pub fn solve_energy_truncated<'m>(
    system: &CoupledSystem<'m>,
    rhs: &[C64],
    threshold: f64,
) -> Result<CoupledSolution<'m>> {
    if rhs.len() != system.dim() {
        return Err(Error::DimensionMismatch(format!(
            "rhs has length {}, expected {}",
            rhs.len(),
            system.dim()
        )));
    }
    let s = system.energy_svd()?;
    let mut x = vec![C64::default(); system.dim()];
    let mut near_null = Vec::new();
    for (j, &sj) in s.values.iter().enumerate() {
        if sj < threshold {
            near_null.push(s.right_vector(j));
            continue;
        }
        // u_j already carries the factor Ll^{-T}, so u_jᴴ b is the coefficient.
        let c = linalg::dot(&s.left_vector(j), rhs) / sj;
        for (xi, vi) in x.iter_mut().zip(s.right_vector(j)) {
            *xi += c * vi;
        }
    }
    let deficient = !near_null.is_empty();
    finish(system, x, rhs, deficient, near_null)
}

/// Relative difference of DtN₁ and DtN₂ on the Dirichlet traces of the
/// radiating multipoles `H_m(κ√r0 ρ) cos(mθ)`, `H_m(κ√r0 ρ) sin(mθ)` for
/// `m ≤ max_order`, with polar coordinates about `center` (a point inside Γ).
/// Differences are measured in the P0 `L²` norm and summed over the family.
///
/// Unlike the matrix norm of `DtN₁ − DtN₂`, which is dominated by the
/// unresolved high-frequency end of the discrete spaces, this converges
/// under refinement.
pub fn dtn_discrepancy(
    maps: &DtnMaps,
    mesh: &BoundaryMesh,
    k: &crate::Wavenumber,
    center: Point,
    max_order: u32,
) -> Result<f64> {
    if !mesh.contains(center) {
        return Err(Error::InvalidArgument(format!(
            "multipole center {center:?} is not inside the boundary"
        )));
    }
    let ke = k.effective();
    let n = mesh.len();
    let mut traces = Vec::new();
    for m in 0..=max_order {
        let mut c = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n);
        for x in &mesh.nodes {
            let d = [x[0] - center[0], x[1] - center[1]];
            let h = crate::specialfn::hankel1(m, ke * d[0].hypot(d[1]))?;
            let t = m as f64 * d[1].atan2(d[0]);
            c.push(h * t.cos());
            s.push(h * t.sin());
        }
        traces.push(c);
        if m > 0 {
            traces.push(s);
        }
    }
    let l2 = |v: &[C64]| {
        v.iter()
            .zip(&mesh.lengths)
            .map(|(z, l)| z.norm_sqr() * l)
            .sum::<f64>()
    };
    let (mut num, mut den) = (0.0, 0.0);
    for g in &traces {
        let a = maps.dtn1.matvec(g)?;
        let b = maps.dtn2.matvec(g)?;
        let diff: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        num += l2(&diff);
        den += l2(&a);
    }
    Ok((num / den).sqrt())
}
