use std::collections::BTreeMap;

use helmcouple::bem::{
    assemble_operators, calderon_projector, cauchy_data_plane_wave, cauchy_data_point_source,
    complementarity_defect, idempotency_defect, projector_residual, smooth_idempotency_defect,
    QuadratureSpec, Side,
};
use helmcouple::coupling::{
    self, build_coupled, build_rhs, dtn_discrepancy, IncidentWave, TransmissionData,
};
use helmcouple::fem::{interior_eigenpairs, BoundaryCondition, InteriorField, MaterialField};
use helmcouple::mesh::BoundaryMesh;
use helmcouple::potentials::{eval_sl, post_process, postprocess_exterior, probe_circle};
use helmcouple::specialfn::{bessel_zero, ZeroKind};
use helmcouple::spectral::{
    coupled_kernel_check, kernel_report, null_space_angles, Meshes, Operator, SpectralContext,
};
use helmcouple::{Error, Wavenumber, C64};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{RunConfig, Setup, Shape};
use crate::error::{CliError, Stage};
use crate::output::OutDir;

/// Principal-angle tolerance of the kernel checks, in radians.
const ANGLE_TOLERANCE: f64 = 0.15;
/// Probes of the post-processing check, on a circle of radius 1.5 × diameter.
const ANNIHILATION_PROBES: usize = 8;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub value: Option<f64>,
    pub tolerance: f64,
    /// `"<="` or `"=="`.
    pub relation: &'static str,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Default)]
struct Report {
    checks: BTreeMap<String, Check>,
}

impl Report {
    fn at_most(&mut self, name: &str, value: helmcouple::Result<f64>, tolerance: f64) {
        self.record(name, value, tolerance, "<=", |v| v <= tolerance);
    }

    fn equals(&mut self, name: &str, value: helmcouple::Result<usize>, expected: usize) {
        self.record(name, value.map(|v| v as f64), expected as f64, "==", |v| {
            v == expected as f64
        });
    }

    fn record(
        &mut self,
        name: &str,
        value: helmcouple::Result<f64>,
        tolerance: f64,
        relation: &'static str,
        ok: impl Fn(f64) -> bool,
    ) {
        let check = match value {
            Ok(v) => Check {
                value: v.is_finite().then_some(v),
                tolerance,
                relation,
                pass: ok(v),
                error: None,
            },
            Err(e) => Check {
                value: None,
                tolerance,
                relation,
                pass: false,
                error: Some(e.to_string()),
            },
        };
        self.checks.insert(name.to_string(), check);
    }
}

fn l2(mesh: &BoundaryMesh, v: &[C64]) -> f64 {
    v.iter()
        .zip(&mesh.lengths)
        .map(|(z, l)| z.norm_sqr() * l)
        .sum::<f64>()
        .sqrt()
}

fn first_resonances(
    config: &RunConfig,
    ctx: &SpectralContext<'_>,
) -> helmcouple::Result<(f64, f64)> {
    let s = config.r0.sqrt();
    if let Shape::Circle { radius } = config.shape {
        let d = bessel_zero(0, 1, ZeroKind::J)?;
        let n = bessel_zero(1, 1, ZeroKind::Jprime)?;
        return Ok((d / (radius * s), n / (radius * s)));
    }
    let d = ctx.reference.dirichlet.first().map(|m| m.lambda);
    let n = ctx
        .reference
        .neumann
        .iter()
        .map(|m| m.lambda)
        .find(|&l| l > 1e-8);
    match (d, n) {
        (Some(d), Some(n)) => Ok(((d / config.r0).sqrt(), (n / config.r0).sqrt())),
        _ => Err(Error::NoConvergence("no reference eigenvalues".into())),
    }
}

fn boundary_checks(report: &mut Report, config: &RunConfig, setup: &Setup) -> Result<(), CliError> {
    let b = &setup.boundary;
    let k = Wavenumber::new(config.kappa(), config.r0).stage("wavenumber")?;
    let ops = assemble_operators(b, k, &QuadratureSpec::default()).stage("boundary assembly")?;
    let pm = calderon_projector(&ops, Side::Interior).stage("Calderon projector")?;
    let pp = calderon_projector(&ops, Side::Exterior).stage("Calderon projector")?;
    report.at_most(
        "calderon_complementarity",
        complementarity_defect(&pm, &pp),
        1e-12,
    );
    report.at_most("calderon_idempotency", idempotency_defect(&pm), 0.05);
    report.at_most(
        "calderon_idempotency_smooth",
        smooth_idempotency_defect(&pm, b, config.options.verify.smooth_max_mode),
        0.05,
    );
    report.at_most(
        "plane_wave_interior_residual",
        cauchy_data_plane_wave(b, k, [1.0, 0.0]).and_then(|d| projector_residual(&pm, &d)),
        0.05,
    );
    report.at_most(
        "point_source_exterior_residual",
        cauchy_data_point_source(b, k, b.centroid()).and_then(|d| projector_residual(&pp, &d)),
        0.05,
    );
    report.at_most(
        "dtn_consistency",
        coupling::dtn_maps(&ops).and_then(|m| {
            dtn_discrepancy(&m, b, &k, b.centroid(), config.options.verify.dtn_max_order)
        }),
        0.1,
    );

    let homogeneous = MaterialField::homogeneous(&setup.interior, config.r0).stage("material")?;
    let transparency = (|| -> helmcouple::Result<(f64, f64, f64)> {
        let sys = build_coupled(&setup.interior, b, &homogeneous, &ops)?;
        let symmetry = sys.symmetry_defect() / sys.matrix.norm_fro();
        let wave = IncidentWave {
            direction: [1.0, 0.0],
            amplitude: C64::new(1.0, 0.0),
        };
        let data = TransmissionData::plane_wave(b, k, wave)?;
        let sol = coupling::solve(&sys, &build_rhs(&sys, &data)?)?;
        let exact = InteriorField::interpolate(&setup.interior, |x| wave.eval(k.effective(), x));
        let diff: Vec<C64> = sol
            .u
            .coefficients
            .iter()
            .zip(&exact.coefficients)
            .map(|(a, e)| a - e)
            .collect();
        let err = InteriorField::new(&setup.interior, diff)?.l2_norm() / exact.l2_norm();
        let probes = probe_circle(
            b.centroid(),
            config.options.solve.probe_radius,
            config.options.solve.probe_count,
        );
        let scattered = postprocess_exterior(b, &k, &data.g, &sol.u, &sol.xi, &probes)?;
        Ok((symmetry, err, scattered.max_abs()))
    })();
    let part = |f: fn(&(f64, f64, f64)) -> f64| {
        transparency
            .as_ref()
            .map(f)
            .map_err(|e| Error::InvalidArgument(e.to_string()))
    };
    report.at_most("coupled_symmetry", part(|t| t.0), 1e-12);
    report.at_most("transparency_interior_error", part(|t| t.1), 0.02);
    report.at_most("transparency_scattered_ratio", part(|t| t.2), 0.02);
    Ok(())
}

fn fem_checks(report: &mut Report, config: &RunConfig, setup: &Setup) {
    let d = interior_eigenpairs(&setup.interior, BoundaryCondition::Dirichlet, 1);
    if let Shape::Circle { radius } = config.shape {
        let exact = bessel_zero(0, 1, ZeroKind::J).map(|j| (j / radius).powi(2));
        let err = d
            .as_ref()
            .map_err(|e| Error::InvalidArgument(e.to_string()))
            .and_then(|m| {
                let e = exact?;
                Ok((m[0].lambda - e).abs() / e)
            });
        report.at_most("fem_dirichlet_lambda1_error", err, 0.01);
    }
    let n = interior_eigenpairs(&setup.interior, BoundaryCondition::Neumann, 1);
    report.at_most(
        "fem_neumann_lambda1",
        n.as_ref()
            .map(|m| m[0].lambda.abs())
            .map_err(|e| Error::InvalidArgument(e.to_string())),
        1e-8,
    );
    let constant = n
        .as_ref()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
        .map(|m| {
            let c = &m[0].field.coefficients;
            let mean = c.iter().sum::<C64>() / c.len() as f64;
            c.iter().map(|z| (z - mean).norm()).fold(0.0, f64::max) / mean.norm()
        });
    report.at_most("fem_neumann_constant_mode", constant, 1e-6);
}

fn resonance_checks(
    report: &mut Report,
    config: &RunConfig,
    setup: &Setup,
) -> Result<(), CliError> {
    let b = &setup.boundary;
    let meshes = Meshes {
        boundary: b,
        interior: &setup.interior,
    };
    let ctx = SpectralContext::new(meshes, &setup.material, QuadratureSpec::default())
        .stage("FEM reference")?;
    let (kd, kn) = first_resonances(config, &ctx).stage("reference resonances")?;
    let expected = |bc, kappa| -> helmcouple::Result<usize> {
        Ok(ctx.reference.matching(bc, &ctx.wavenumber(kappa)?).len())
    };
    let err = |e: &Error| Error::InvalidArgument(e.to_string());
    let angle = |r: &helmcouple::Result<helmcouple::spectral::KernelReport>| {
        r.as_ref()
            .map_err(err)?
            .max_angle()
            .ok_or_else(|| Error::InvalidArgument("no matching reference modes".into()))
    };

    let rv = kernel_report(&ctx, kd, Operator::V, None);
    let rw = kernel_report(&ctx, kn, Operator::W, None);
    let rka = kernel_report(&ctx, kd, Operator::KadjHalf, None);
    let rk = kernel_report(&ctx, kn, Operator::KHalf, None);
    let ed = expected(BoundaryCondition::Dirichlet, kd);
    let en = expected(BoundaryCondition::Neumann, kn);
    report.equals(
        "v_kernel_dimension",
        rv.as_ref().map(|r| r.kernel_dimension()).map_err(err),
        *ed.as_ref().unwrap_or(&1),
    );
    report.at_most("v_kernel_angle", angle(&rv), ANGLE_TOLERANCE);
    report.equals(
        "w_kernel_dimension",
        rw.as_ref().map(|r| r.kernel_dimension()).map_err(err),
        *en.as_ref().unwrap_or(&1),
    );
    report.at_most("w_kernel_angle", angle(&rw), ANGLE_TOLERANCE);
    let cross = |a: &helmcouple::Result<_>, c: &helmcouple::Result<_>| -> helmcouple::Result<f64> {
        let (a, c) = (a.as_ref().map_err(err)?, c.as_ref().map_err(err)?);
        let angles = null_space_angles(b, a, c)?;
        if angles.is_empty() {
            return Err(Error::InvalidArgument("an empty near-null space".into()));
        }
        Ok(angles.into_iter().fold(0.0, f64::max))
    };
    report.at_most("kadj_v_kernel_angle", cross(&rv, &rka), ANGLE_TOLERANCE);
    report.at_most("k_w_kernel_angle", cross(&rw, &rk), ANGLE_TOLERANCE);

    let cd = coupled_kernel_check(&ctx, kd, None);
    report.equals(
        "coupled_kernel_dimension",
        cd.as_ref().map(|r| r.kernel_dimension()).map_err(err),
        *ed.as_ref().unwrap_or(&1),
    );
    report.at_most(
        "coupled_interior_ratio",
        cd.as_ref().map_err(err).and_then(|r| {
            r.interior_ratios
                .iter()
                .copied()
                .reduce(f64::max)
                .ok_or_else(|| err(&Error::InvalidArgument("no near-null vector".into())))
        }),
        0.05,
    );
    let cn = coupled_kernel_check(&ctx, kn, None);
    report.equals(
        "coupled_neumann_kernel_dimension",
        cn.as_ref().map(|r| r.kernel_dimension()).map_err(err),
        0,
    );

    let annihilation = (|| -> helmcouple::Result<f64> {
        let r = rv.as_ref().map_err(err)?;
        let xi = &r
            .null_vectors
            .first()
            .ok_or_else(|| Error::InvalidArgument("no V null vector".into()))?
            .neumann;
        let k = ctx.wavenumber(kd)?;
        let radius = 1.5 * b.diameter();
        let probes = probe_circle(b.centroid(), radius, ANNIHILATION_PROBES);
        let zero = vec![C64::default(); b.len()];
        let spur = post_process(b, &k, &zero, xi, &probes)?.max_abs();
        let total = b.perimeter();
        let mut s = 0.0;
        let generic: Vec<C64> = (0..b.len())
            .map(|e| {
                let t = 2.0 * std::f64::consts::PI * (s + 0.5 * b.lengths[e]) / total;
                s += b.lengths[e];
                C64::new(t.cos() + 0.5 * (2.0 * t).sin(), 0.3 * (3.0 * t).cos())
            })
            .collect();
        let scale = l2(b, xi) / l2(b, &generic);
        let generic: Vec<C64> = generic.iter().map(|z| z * scale).collect();
        Ok(spur / eval_sl(b, &k, &generic, &probes)?.max_abs())
    })();
    report.at_most("post_processing_ratio", annihilation, 0.05);

    let dtn_raises = ctx.wavenumber(kd).and_then(|k| {
        let ops = assemble_operators(b, k, &QuadratureSpec::default())?;
        Ok(usize::from(matches!(
            coupling::dtn1(&ops),
            Err(Error::Resonance { .. })
        )))
    });
    report.equals("dtn1_resonance_detected", dtn_raises, 1);
    Ok(())
}

pub fn run(config: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let setup = Setup::new(config)?;
    let mut report = Report::default();
    boundary_checks(&mut report, config, &setup)?;
    fem_checks(&mut report, config, &setup);
    if config.options.verify.resonance_checks {
        resonance_checks(&mut report, config, &setup)?;
    }
    let checks: Map<String, Value> = report
        .checks
        .iter()
        .map(|(k, c)| {
            (
                k.clone(),
                serde_json::to_value(c).expect("checks serialize"),
            )
        })
        .collect();
    println!(
        "{}",
        serde_json::to_string_pretty(&checks).expect("checks serialize")
    );
    let mut body = Map::new();
    body.insert("checks".into(), Value::Object(checks));
    out.write_json("verify_report.json", body)?;
    let failed = report.checks.values().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(CliError::VerifyFailed {
            failed,
            total: report.checks.len(),
        });
    }
    Ok(())
}
