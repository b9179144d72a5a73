use helmcouple::bem::{self, assemble_operators, QuadratureSpec, RESONANCE_THRESHOLD};
use helmcouple::coupling::{self, build_coupled, build_rhs, IncidentWave, TransmissionData};
use helmcouple::fem::InteriorField;
use helmcouple::io::{write_field_csv, write_vector_csv};
use helmcouple::potentials::{postprocess_exterior, probe_circle, FieldSample, PointSide};
use helmcouple::{Error, Wavenumber, C64};
use serde_json::{json, Map};

use crate::config::{RunConfig, Setup};
use crate::error::{CliError, Stage};
use crate::output::OutDir;

pub fn run(config: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let setup = Setup::new(config)?;
    let (boundary, interior) = (&setup.boundary, &setup.interior);
    let opts = &config.options.solve;
    let center = boundary.centroid();
    let probes = probe_circle(center, opts.probe_radius, opts.probe_count);
    let h = boundary.mesh_width();
    if let Some(p) = probes
        .iter()
        .find(|&&p| boundary.contains(p) || boundary.distance(p) < h)
    {
        return Err(CliError::Config(format!(
            "probe {p:?} on the circle of radius {} is not clear of the boundary",
            opts.probe_radius
        )));
    }

    let k = Wavenumber::new(config.kappa(), config.r0).stage("wavenumber")?;
    let ops =
        assemble_operators(boundary, k, &QuadratureSpec::default()).stage("boundary assembly")?;
    let resonance = match bem::check_v_resonance(&ops) {
        Ok(_) => None,
        Err(e @ Error::Resonance { .. }) => {
            eprintln!("warning: {e}; solving by truncated least squares");
            Some(e.to_string())
        }
        Err(e) => {
            return Err(CliError::Numerical {
                stage: "resonance check",
                source: e,
            })
        }
    };
    let system =
        build_coupled(interior, boundary, &setup.material, &ops).stage("coupled assembly")?;
    let nd = opts.direction[0].hypot(opts.direction[1]);
    let wave = IncidentWave {
        direction: [opts.direction[0] / nd, opts.direction[1] / nd],
        amplitude: C64::new(opts.amplitude, 0.0),
    };
    let data = TransmissionData::plane_wave(boundary, k, wave).stage("jump data")?;
    let rhs = build_rhs(&system, &data).stage("right-hand side")?;
    let sol = if resonance.is_some() {
        coupling::solve_energy_truncated(&system, &rhs, RESONANCE_THRESHOLD)
    } else {
        coupling::solve(&system, &rhs)
    }
    .stage("coupled solve")?;
    let scattered = postprocess_exterior(boundary, &k, &data.g, &sol.u, &sol.xi, &probes)
        .stage("post-processing")?;

    let interior_sample = FieldSample {
        points: interior.vertices.clone(),
        sides: vec![PointSide::Interior; interior.n_vertices()],
        values: sol.u.coefficients.clone(),
    };
    out.write_with("interior.csv", |w, hd| {
        write_field_csv(w, &interior_sample, hd)
    })?;
    out.write_with("xi.csv", |w, hd| write_vector_csv(w, &sol.xi, hd))?;
    out.write_with("exterior.csv", |w, hd| write_field_csv(w, &scattered, hd))?;

    let ke = k.effective();
    let incident_max = opts.amplitude.abs();
    let mut body = Map::new();
    body.insert("kappa".into(), json!(k.kappa));
    body.insert("resonance_warning".into(), json!(resonance));
    body.insert("rank_deficient".into(), json!(sol.rank_deficient));
    body.insert("dropped_directions".into(), json!(sol.near_null.len()));
    body.insert("relative_residual".into(), json!(sol.relative_residual));
    body.insert("symmetry_defect".into(), json!(system.symmetry_defect()));
    body.insert("dimension".into(), json!(system.dim()));
    body.insert("max_scattered".into(), json!(scattered.max_abs()));
    body.insert("max_incident".into(), json!(incident_max));
    if incident_max > 0.0 {
        body.insert(
            "scattered_ratio".into(),
            json!(scattered.max_abs() / incident_max),
        );
    }
    if config.material.is_transparent(config.r0) && incident_max > 0.0 {
        // Without contrast the total interior field is the incident wave.
        let exact = InteriorField::interpolate(interior, |x| wave.eval(ke, x));
        let diff: Vec<C64> = sol
            .u
            .coefficients
            .iter()
            .zip(&exact.coefficients)
            .map(|(a, b)| a - b)
            .collect();
        let err = InteriorField::new(interior, diff)
            .stage("interior error")?
            .l2_norm()
            / exact.l2_norm();
        body.insert("interior_relative_error".into(), json!(err));
    }
    println!(
        "solve: kappa = {}, dimension {}, residual {:.2e}, max scattered {:.3e}{}",
        k.kappa,
        system.dim(),
        sol.relative_residual,
        scattered.max_abs(),
        if resonance.is_some() {
            " (resonant)"
        } else {
            ""
        }
    );
    out.write_json("solve_summary.json", body)?;
    Ok(())
}
