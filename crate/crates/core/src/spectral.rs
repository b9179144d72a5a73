//! Resonance detection and kernel verification.
//!
//! Singular values are measured in energy norms (Laplace single-layer and
//! hypersingular forms on the boundary, `H¹` inside), so that they are
//! comparable across meshes. Near-null vectors are compared with boundary
//! traces of FEM eigenmodes through principal angles in `L²(Γ)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bem::{
    self, assemble_operators_with, assemble_single_and_hypersingular, BoundaryOperatorSet,
    QuadratureSpec, ReferenceForms, TracePair,
};
use crate::coupling::build_coupled;
use crate::error::{Error, Result};
use crate::fem::{self, BoundaryCondition, MaterialField};
use crate::linalg::{self, DenseMatrix, C64};
use crate::mesh::{BoundaryMesh, InteriorMesh};
use crate::specialfn::Wavenumber;

/// Near-null singular values are those below this fraction of the
/// off-resonance floor.
pub const NEAR_NULL_FACTOR: f64 = 0.1;

/// Offsets from `kappa_star` at which the off-resonance floor is sampled.
pub const FLOOR_OFFSETS: [f64; 8] = [-0.25, -0.2, -0.15, -0.1, 0.1, 0.15, 0.2, 0.25];

/// Heuristic constant of the P1 eigenvalue error estimate `c λ² h²`.
/// Calibrated on the unit disk, where it overestimates the observed error.
pub const FEM_ERROR_CONSTANT: f64 = 0.05;

/// Distance between `kappa_star` and the discrete dip tolerated when
/// matching FEM eigenvalues.
pub const DIP_TOLERANCE: f64 = 0.02;

/// FEM eigenpairs computed for the reference spaces.
pub const REFERENCE_MODES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operator {
    V,
    W,
    /// `−K† + ½`
    KadjHalf,
    /// `−K + ½`
    KHalf,
    Coupled,
}

impl std::fmt::Display for Operator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::V => "V",
            Self::W => "W",
            Self::KadjHalf => "-K'+1/2",
            Self::KHalf => "-K+1/2",
            Self::Coupled => "coupled",
        })
    }
}

impl Operator {
    /// Boundary condition of the interior eigenproblem whose traces span the kernel.
    pub fn reference_bc(self) -> BoundaryCondition {
        match self {
            Self::V | Self::KadjHalf | Self::Coupled => BoundaryCondition::Dirichlet,
            Self::W | Self::KHalf => BoundaryCondition::Neumann,
        }
    }

    /// True when the kernel consists of Neumann (P0) data.
    fn neumann_kernel(self) -> bool {
        self.reference_bc() == BoundaryCondition::Dirichlet
    }
}

/// Meshes shared by all spectral computations.
#[derive(Debug, Clone, Copy)]
pub struct Meshes<'a> {
    pub boundary: &'a BoundaryMesh,
    pub interior: &'a InteriorMesh,
}

/// Boundary trace of one FEM eigenmode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMode {
    pub lambda: f64,
    /// P0 Neumann trace for Dirichlet modes, P1 Dirichlet trace for Neumann modes.
    pub trace: Vec<C64>,
}

/// Traces of the lowest interior eigenmodes of both kinds.
#[derive(Debug, Clone)]
pub struct FemReference {
    pub dirichlet: Vec<ReferenceMode>,
    pub neumann: Vec<ReferenceMode>,
    /// Largest triangle diameter of the mesh the modes were computed on.
    pub h: f64,
}

impl FemReference {
    pub fn compute(meshes: Meshes<'_>, count: usize) -> Result<Self> {
        let d = fem::interior_eigenpairs(meshes.interior, BoundaryCondition::Dirichlet, count)?;
        let n = fem::interior_eigenpairs(meshes.interior, BoundaryCondition::Neumann, count)?;
        let dirichlet = d
            .iter()
            .map(|m| {
                Ok(ReferenceMode {
                    lambda: m.lambda,
                    trace: fem::neumann_trace_of_mode(m, meshes.boundary)?,
                })
            })
            .collect::<Result<_>>()?;
        let neumann = n
            .iter()
            .map(|m| {
                Ok(ReferenceMode {
                    lambda: m.lambda,
                    trace: fem::dirichlet_trace_of_mode(m, meshes.boundary)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            dirichlet,
            neumann,
            h: meshes.interior.max_diameter(),
        })
    }

    /// Heuristic size of the discretization error of a computed eigenvalue.
    pub fn error_estimate(&self, lambda: f64) -> f64 {
        FEM_ERROR_CONSTANT * lambda * lambda * self.h * self.h
    }

    /// Modes whose eigenvalue lies within `2·error + 2κ√r0·DIP_TOLERANCE`
    /// of `κ² r0`.
    pub fn matching(&self, bc: BoundaryCondition, k: &Wavenumber) -> Vec<&ReferenceMode> {
        let target = k.lambda();
        let modes = match bc {
            BoundaryCondition::Dirichlet => &self.dirichlet,
            BoundaryCondition::Neumann => &self.neumann,
        };
        modes
            .iter()
            .filter(|m| {
                let window =
                    2.0 * self.error_estimate(m.lambda) + 2.0 * k.effective() * DIP_TOLERANCE;
                (m.lambda - target).abs() <= window && m.lambda > 1e-8
            })
            .collect()
    }
}

/// Everything needed to examine the operators at a given frequency.
#[derive(Debug, Clone)]
pub struct SpectralContext<'a> {
    pub meshes: Meshes<'a>,
    pub material: &'a MaterialField,
    pub quad: QuadratureSpec,
    pub reference: FemReference,
    pub forms: ReferenceForms,
}

impl<'a> SpectralContext<'a> {
    pub fn new(
        meshes: Meshes<'a>,
        material: &'a MaterialField,
        quad: QuadratureSpec,
    ) -> Result<Self> {
        material.validate(meshes.interior)?;
        Ok(Self {
            meshes,
            material,
            forms: ReferenceForms::new(meshes.boundary, &quad)?,
            quad,
            reference: FemReference::compute(meshes, REFERENCE_MODES)?,
        })
    }

    pub fn wavenumber(&self, kappa: f64) -> Result<Wavenumber> {
        Wavenumber::new(kappa, self.material.exterior)
    }

    fn assemble(&self, kappa: f64) -> Result<BoundaryOperatorSet> {
        assemble_operators_with(
            self.meshes.boundary,
            self.wavenumber(kappa)?,
            &self.quad,
            &self.forms,
        )
    }

    /// Galerkin matrix of `op` with the Gram matrices of its test and trial spaces.
    fn operator_matrix(&self, op: Operator, ops: &BoundaryOperatorSet) -> Result<Normalized> {
        Ok(match op {
            Operator::V => {
                Normalized::plain(ops.v_mat.clone(), ops.v_ref.clone(), ops.v_ref.clone())
            }
            Operator::W => {
                Normalized::plain(ops.w_mat.clone(), ops.w_ref.clone(), ops.w_ref.clone())
            }
            Operator::KadjHalf => Normalized {
                a: ops.minus_kadj_plus_half(),
                gl: ops.w_ref.clone(),
                gr: ops.v_ref.clone(),
                deflate: pairing_kernel(&ops.mass_dn)?,
            },
            Operator::KHalf => Normalized {
                a: ops.minus_k_plus_half(),
                gl: ops.v_ref.clone(),
                gr: ops.w_ref.clone(),
                deflate: pairing_kernel(&ops.m01())?,
            },
            Operator::Coupled => {
                let sys = build_coupled(
                    self.meshes.interior,
                    self.meshes.boundary,
                    self.material,
                    ops,
                )?;
                let g = sys.energy_gram();
                Normalized::plain(sys.matrix, g.clone(), g)
            }
        })
    }

    /// Smallest energy-normalized singular value of `op` at `kappa`.
    pub fn sigma_min(&self, op: Operator, kappa: f64) -> Result<f64> {
        let ops = self.assemble(kappa)?;
        let s = self.operator_matrix(op, &ops)?.singular_values()?;
        Ok(*s.last().unwrap_or(&0.0))
    }

    /// Median of `sigma_min` over [`FLOOR_OFFSETS`] around `kappa_star`.
    pub fn noise_floor(&self, op: Operator, kappa_star: f64) -> Result<f64> {
        let mut s: Vec<f64> = FLOOR_OFFSETS
            .par_iter()
            .map(|d| kappa_star + d)
            .filter(|&k| k > 0.0)
            .map(|k| self.sigma_min(op, k))
            .collect::<Result<_>>()?;
        Ok(median(&mut s))
    }
}

/// A Galerkin matrix with the Gram matrices of its test (`gl`) and trial
/// (`gr`) spaces and trial directions removed before the SVD.
struct Normalized {
    a: DenseMatrix<C64>,
    gl: DenseMatrix<f64>,
    gr: DenseMatrix<f64>,
    deflate: Vec<Vec<C64>>,
}

impl Normalized {
    fn plain(a: DenseMatrix<C64>, gl: DenseMatrix<f64>, gr: DenseMatrix<f64>) -> Self {
        Self {
            a,
            gl,
            gr,
            deflate: Vec::new(),
        }
    }

    /// `A (I − Q Qᴴ G)` with `Q` a `G`-orthonormal basis of the deflated directions.
    fn deflated(&self) -> Result<(DenseMatrix<C64>, Vec<Vec<C64>>)> {
        if self.deflate.is_empty() {
            return Ok((self.a.clone(), Vec::new()));
        }
        let q = orthonormalize(&self.deflate, &self.gr)?;
        let n = self.a.cols();
        let qm = DenseMatrix::from_fn(n, q.len(), |i, j| q[j][i]);
        let gq = self.gr.to_complex().matmul(&qm)?;
        let aq = self.a.matmul(&qm)?;
        let proj = aq.matmul(&gq.adjoint())?;
        Ok((self.a.sub(&proj)?, q))
    }

    /// Singular values, descending, without the deflated directions.
    fn singular_values(&self) -> Result<Vec<f64>> {
        let (a, q) = self.deflated()?;
        let mut s = linalg::gram_singular_values(&a, &self.gl, &self.gr)?;
        s.truncate(s.len() - q.len());
        Ok(s)
    }

    /// SVD without the triples whose right vectors lie in the deflated space.
    fn svd(&self) -> Result<linalg::Svd<C64>> {
        let (a, q) = self.deflated()?;
        let s = linalg::gram_svd(&a, &self.gl, &self.gr)?;
        if q.is_empty() {
            return Ok(s);
        }
        let g = self.gr.to_complex();
        let gq: Vec<Vec<C64>> = q.iter().map(|x| g.matvec(x)).collect::<Result<_>>()?;
        let keep: Vec<usize> = (0..s.values.len())
            .filter(|&j| {
                let v = s.right_vector(j);
                let overlap: f64 = gq.iter().map(|y| linalg::dot(y, &v).norm_sqr()).sum();
                overlap < 0.5
            })
            .collect();
        let pick = |m: &DenseMatrix<C64>| {
            DenseMatrix::from_fn(m.rows(), keep.len(), |i, k| m[(i, keep[k])])
        };
        Ok(linalg::Svd {
            values: keep.iter().map(|&j| s.values[j]).collect(),
            u: pick(&s.u),
            v: pick(&s.v),
        })
    }
}

/// Right kernel of a boundary mass pairing between P0 and P1 on the same
/// mesh. It is one-dimensional for an even number of segments (an
/// alternating mode) and empty otherwise. These directions are null vectors
/// of `±K + ½M` at every frequency, so they are removed before looking for
/// frequency-dependent kernels.
fn pairing_kernel(m: &DenseMatrix<f64>) -> Result<Vec<Vec<C64>>> {
    let s = linalg::svd(m)?;
    let smax = s.values.first().copied().unwrap_or(0.0);
    Ok((0..s.values.len())
        .filter(|&j| s.values[j] <= 1e-10 * smax)
        .map(|j| {
            s.right_vector(j)
                .into_iter()
                .map(|x| C64::new(x, 0.0))
                .collect()
        })
        .collect())
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Which quantities a sweep computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSelection {
    pub v: bool,
    pub w: bool,
    pub coupled: bool,
    /// Principal angles against the matching FEM reference, where one exists.
    pub angles: bool,
}

impl Default for SweepSelection {
    fn default() -> Self {
        Self {
            v: true,
            w: true,
            coupled: false,
            angles: true,
        }
    }
}

/// Diagnostics at one frequency. Quantities not requested are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub kappa: f64,
    pub sigma_min_v: Option<f64>,
    pub sigma_min_w: Option<f64>,
    pub sigma_min_coupled: Option<f64>,
    pub kernel_angle_v: Option<f64>,
    pub kernel_angle_coupled: Option<f64>,
    /// `σ_max / σ_min` of the normalized `V̂`.
    pub cond_v: Option<f64>,
    pub cond_w: Option<f64>,
}

/// Energy-normalized singular values, and the angle between the right
/// singular vectors of the `m` smallest values and the `m`-dimensional
/// matching reference space.
fn sweep_point(
    ctx: &SpectralContext<'_>,
    op: Operator,
    m: &Normalized,
    k: &Wavenumber,
    angles: bool,
) -> Result<(Vec<f64>, Option<f64>)> {
    let refs = if angles {
        ctx.reference.matching(op.reference_bc(), k)
    } else {
        Vec::new()
    };
    if refs.is_empty() {
        return Ok((m.singular_values()?, None));
    }
    let s = m.svd()?;
    let n = s.values.len();
    let dim = refs.len().min(n);
    let null: Vec<TracePair> = (n - dim..n)
        .map(|j| split_vector(ctx, op, &s.right_vector(j)).1)
        .collect();
    let reference: Vec<TracePair> = refs.iter().map(|r| reference_pair(op, r)).collect();
    let theta = trace_angles(ctx.meshes.boundary, op, &null, &reference)?;
    Ok((s.values, theta.last().copied()))
}

/// Computes one record per entry of `kappa_grid`, in order.
pub fn sweep(
    ctx: &SpectralContext<'_>,
    kappa_grid: &[f64],
    which: SweepSelection,
) -> Result<Vec<SweepRecord>> {
    if kappa_grid.is_empty() {
        return Err(Error::InvalidArgument("empty frequency grid".into()));
    }
    if kappa_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "frequency grid must be strictly ascending".into(),
        ));
    }
    kappa_grid
        .par_iter()
        .map(|&kappa| {
            let k = ctx.wavenumber(kappa)?;
            let mut rec = SweepRecord {
                kappa,
                sigma_min_v: None,
                sigma_min_w: None,
                sigma_min_coupled: None,
                kernel_angle_v: None,
                kernel_angle_coupled: None,
                cond_v: None,
                cond_w: None,
            };
            let last = |v: &[f64]| *v.last().unwrap_or(&0.0);
            let cond = |v: &[f64]| v.first().copied().unwrap_or(0.0) / last(v);
            let forms = &ctx.forms;
            let (v_mat, w_mat, full) = if which.coupled {
                let ops = ctx.assemble(kappa).map_err(|e| at_kappa(e, kappa))?;
                (ops.v_mat.clone(), ops.w_mat.clone(), Some(ops))
            } else {
                let (v, w) = assemble_single_and_hypersingular(ctx.meshes.boundary, k, &ctx.quad)
                    .map_err(|e| at_kappa(e, kappa))?;
                (v, w, None)
            };
            if which.v {
                let m = Normalized::plain(v_mat, forms.v_ref.clone(), forms.v_ref.clone());
                let (s, angle) = sweep_point(ctx, Operator::V, &m, &k, which.angles)
                    .map_err(|e| at_kappa(e, kappa))?;
                rec.sigma_min_v = Some(last(&s));
                rec.cond_v = Some(cond(&s));
                rec.kernel_angle_v = angle;
            }
            if which.w {
                let m = Normalized::plain(w_mat, forms.w_ref.clone(), forms.w_ref.clone());
                let (s, _) =
                    sweep_point(ctx, Operator::W, &m, &k, false).map_err(|e| at_kappa(e, kappa))?;
                rec.sigma_min_w = Some(last(&s));
                rec.cond_w = Some(cond(&s));
            }
            if let Some(ops) = &full {
                let m = ctx
                    .operator_matrix(Operator::Coupled, ops)
                    .map_err(|e| at_kappa(e, kappa))?;
                let (s, angle) = sweep_point(ctx, Operator::Coupled, &m, &k, which.angles)
                    .map_err(|e| at_kappa(e, kappa))?;
                rec.sigma_min_coupled = Some(last(&s));
                rec.kernel_angle_coupled = angle;
            }
            Ok(rec)
        })
        .collect()
}

fn at_kappa(e: Error, kappa: f64) -> Error {
    match e {
        Error::Resonance { .. } => e,
        e => Error::InvalidArgument(format!("at kappa = {kappa}: {e}")),
    }
}

/// Local minimum of a sweep quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dip {
    /// Grid point of the minimum.
    pub kappa: f64,
    /// Estimate from a V-shaped fit through the three grid points around it.
    pub refined_kappa: f64,
    pub sigma: f64,
    pub index: usize,
}

/// Interior local minima lying below `NEAR_NULL_FACTOR` times the median of
/// the quantity over the whole sweep.
pub fn detect_dips(
    records: &[SweepRecord],
    field: impl Fn(&SweepRecord) -> Option<f64>,
) -> Vec<Dip> {
    let vals: Vec<Option<f64>> = records.iter().map(&field).collect();
    let mut present: Vec<f64> = vals.iter().flatten().copied().collect();
    let floor = median(&mut present);
    let mut dips = Vec::new();
    for i in 1..records.len().saturating_sub(1) {
        let (Some(a), Some(b), Some(c)) = (vals[i - 1], vals[i], vals[i + 1]) else {
            continue;
        };
        if b < a && b <= c && b <= NEAR_NULL_FACTOR * floor {
            let (k0, k1, k2) = (records[i - 1].kappa, records[i].kappa, records[i + 1].kappa);
            let slope = ((a - b) / (k1 - k0)).max((c - b) / (k2 - k1));
            let refined = if slope > 0.0 {
                (k1 + (a - c) / (2.0 * slope)).clamp(k0, k2)
            } else {
                k1
            };
            dips.push(Dip {
                kappa: k1,
                refined_kappa: refined,
                sigma: b,
                index: i,
            });
        }
    }
    dips
}

/// Near-null space of an operator at one frequency, compared with the
/// traces of matching FEM eigenmodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelReport {
    pub kappa_star: f64,
    pub operator: Operator,
    /// Smallest singular values, ascending (at most six).
    pub smallest_singular_values: Vec<f64>,
    /// Off-resonance floor the threshold was derived from.
    pub floor: f64,
    pub threshold: f64,
    /// Boundary parts of the near-null vectors, normalized in the energy norm.
    pub null_vectors: Vec<TracePair>,
    /// Interior parts (coupled operator only).
    pub interior_parts: Vec<Vec<C64>>,
    /// Energy-norm ratio of interior to boundary part (coupled operator only).
    pub interior_ratios: Vec<f64>,
    pub reference_eigenvalues: Vec<f64>,
    /// Traces of the matching modes, orthonormal in `L²(Γ)`.
    pub reference_space: Vec<TracePair>,
    /// Principal angles between null space and reference space, ascending.
    pub principal_angles: Vec<f64>,
}

impl KernelReport {
    /// False is the explicit no-resonance result.
    pub fn is_resonant(&self) -> bool {
        !self.null_vectors.is_empty()
    }

    pub fn kernel_dimension(&self) -> usize {
        self.null_vectors.len()
    }

    pub fn sigma_min(&self) -> f64 {
        self.smallest_singular_values
            .first()
            .copied()
            .unwrap_or(f64::NAN)
    }

    pub fn max_angle(&self) -> Option<f64> {
        self.principal_angles.last().copied()
    }
}

fn reference_pair(op: Operator, r: &ReferenceMode) -> TracePair {
    let n = r.trace.len();
    if op.neumann_kernel() {
        TracePair {
            dirichlet: vec![C64::default(); n],
            neumann: r.trace.clone(),
        }
    } else {
        TracePair {
            dirichlet: r.trace.clone(),
            neumann: vec![C64::default(); n],
        }
    }
}

/// Splits a right singular vector into its interior part and boundary pair.
fn split_vector(ctx: &SpectralContext<'_>, op: Operator, v: &[C64]) -> (Vec<C64>, TracePair) {
    let nb = ctx.meshes.boundary.len();
    let zeros = vec![C64::default(); nb];
    match op {
        Operator::Coupled => {
            let ni = v.len() - nb;
            (
                v[..ni].to_vec(),
                TracePair {
                    dirichlet: zeros,
                    neumann: v[ni..].to_vec(),
                },
            )
        }
        _ if op.neumann_kernel() => (
            Vec::new(),
            TracePair {
                dirichlet: zeros,
                neumann: v.to_vec(),
            },
        ),
        _ => (
            Vec::new(),
            TracePair {
                dirichlet: v.to_vec(),
                neumann: zeros,
            },
        ),
    }
}

fn part(op: Operator, p: &TracePair) -> Vec<C64> {
    if op.neumann_kernel() {
        p.neumann.clone()
    } else {
        p.dirichlet.clone()
    }
}

/// Principal angles in `L²(Γ)` between two sets of boundary vectors of the
/// kind carried by `op`'s kernel.
fn trace_angles(
    boundary: &BoundaryMesh,
    op: Operator,
    a: &[TracePair],
    b: &[TracePair],
) -> Result<Vec<f64>> {
    let (m00, m11, _) = bem::mass_matrices(boundary);
    let gram = if op.neumann_kernel() { m00 } else { m11 };
    let a: Vec<Vec<C64>> = a.iter().map(|p| part(op, p)).collect();
    let b: Vec<Vec<C64>> = b.iter().map(|p| part(op, p)).collect();
    principal_angles(&a, &b, &gram)
}

/// Orthonormal basis of `span(vs)` in the inner product `⟨x, y⟩ = xᴴ G y`.
/// Vectors that are numerically dependent on earlier ones are dropped.
pub fn orthonormalize(vs: &[Vec<C64>], gram: &DenseMatrix<f64>) -> Result<Vec<Vec<C64>>> {
    let g = gram.to_complex();
    let ip = |x: &[C64], y: &[C64]| -> Result<C64> { Ok(linalg::dot(x, &g.matvec(y)?)) };
    let mut q: Vec<Vec<C64>> = Vec::new();
    for v in vs {
        let n0 = ip(v, v)?.re.max(0.0).sqrt();
        let mut w = v.clone();
        for _ in 0..2 {
            for qi in &q {
                let c = ip(qi, &w)?;
                for (wi, &qv) in w.iter_mut().zip(qi) {
                    *wi -= c * qv;
                }
            }
        }
        let n = ip(&w, &w)?.re.max(0.0).sqrt();
        if n > 1e-10 * n0 && n > 0.0 {
            q.push(w.iter().map(|z| z / n).collect());
        }
    }
    Ok(q)
}

/// Principal angles between `span(a)` and `span(b)`, ascending, in the
/// inner product given by `gram`. Returns `min(dim a, dim b)` angles.
pub fn principal_angles(
    a: &[Vec<C64>],
    b: &[Vec<C64>],
    gram: &DenseMatrix<f64>,
) -> Result<Vec<f64>> {
    let qa = orthonormalize(a, gram)?;
    let qb = orthonormalize(b, gram)?;
    if qa.is_empty() || qb.is_empty() {
        return Ok(Vec::new());
    }
    let g = gram.to_complex();
    let gqb: Vec<Vec<C64>> = qb.iter().map(|y| g.matvec(y)).collect::<Result<_>>()?;
    let c = DenseMatrix::from_fn(qa.len(), qb.len(), |i, j| linalg::dot(&qa[i], &gqb[j]));
    let s = linalg::singular_values(&c)?;
    let mut angles: Vec<f64> = s.iter().map(|&x| x.min(1.0).acos()).collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

/// Near-null vectors of `op` at `kappa_star`. When `floor` is `None` it is
/// estimated with [`SpectralContext::noise_floor`].
pub fn kernel_report(
    ctx: &SpectralContext<'_>,
    kappa_star: f64,
    op: Operator,
    floor: Option<f64>,
) -> Result<KernelReport> {
    let floor = match floor {
        Some(f) => f,
        None => ctx.noise_floor(op, kappa_star)?,
    };
    let threshold = NEAR_NULL_FACTOR * floor;
    let ops = ctx.assemble(kappa_star)?;
    let m = ctx.operator_matrix(op, &ops)?;
    let s = m.svd()?;
    let n = s.values.len();
    let smallest: Vec<f64> = s.values.iter().rev().take(6).copied().collect();
    let mut null_vectors = Vec::new();
    let mut interior_parts = Vec::new();
    let mut interior_ratios = Vec::new();
    let energy = (op == Operator::Coupled).then(|| m.gr.clone());
    for j in (0..n).rev() {
        if s.values[j] > threshold {
            break;
        }
        let v = s.right_vector(j);
        let (u, pair) = split_vector(ctx, op, &v);
        if let Some(g) = &energy {
            let ni = u.len();
            let gu = g.block(0, 0, ni, ni).to_complex();
            let gx = g.block(ni, ni, n - ni, n - ni).to_complex();
            let nu = linalg::dot(&u, &gu.matvec(&u)?).re.max(0.0).sqrt();
            let nx = linalg::dot(&pair.neumann, &gx.matvec(&pair.neumann)?)
                .re
                .max(0.0)
                .sqrt();
            interior_ratios.push(nu / nx);
            interior_parts.push(u);
        }
        null_vectors.push(pair);
    }
    let k = ops.k;
    let refs = ctx.reference.matching(op.reference_bc(), &k);
    let reference_eigenvalues = refs.iter().map(|r| r.lambda).collect();
    let (m00, m11, _) = bem::mass_matrices(ctx.meshes.boundary);
    let gram = if op.neumann_kernel() { m00 } else { m11 };
    let ref_vecs: Vec<Vec<C64>> = refs.iter().map(|r| r.trace.clone()).collect();
    let reference_space: Vec<TracePair> = orthonormalize(&ref_vecs, &gram)?
        .into_iter()
        .map(|t| {
            reference_pair(
                op,
                &ReferenceMode {
                    lambda: 0.0,
                    trace: t,
                },
            )
        })
        .collect();
    let principal_angles = trace_angles(ctx.meshes.boundary, op, &null_vectors, &reference_space)?;
    Ok(KernelReport {
        kappa_star,
        operator: op,
        smallest_singular_values: smallest,
        floor,
        threshold,
        null_vectors,
        interior_parts,
        interior_ratios,
        reference_eigenvalues,
        reference_space,
        principal_angles,
    })
}

/// [`kernel_report`] for the coupled matrix.
pub fn coupled_kernel_check(
    ctx: &SpectralContext<'_>,
    kappa_star: f64,
    floor: Option<f64>,
) -> Result<KernelReport> {
    kernel_report(ctx, kappa_star, Operator::Coupled, floor)
}

/// Principal angles between the near-null spaces of two reports.
pub fn null_space_angles(
    boundary: &BoundaryMesh,
    a: &KernelReport,
    b: &KernelReport,
) -> Result<Vec<f64>> {
    if a.operator.neumann_kernel() != b.operator.neumann_kernel() {
        return Err(Error::InvalidArgument(format!(
            "kernels of {} and {} live in different trace spaces",
            a.operator, b.operator
        )));
    }
    trace_angles(boundary, a.operator, &a.null_vectors, &b.null_vectors)
}
