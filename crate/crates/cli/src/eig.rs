use std::io::Write;

use helmcouple::fem::{interior_eigenpairs, BoundaryCondition};
use helmcouple::specialfn::{bessel_zero, ZeroKind};
use serde_json::{json, Map, Value};

use crate::config::{RunConfig, Setup, Shape};
use crate::error::{CliError, Stage};
use crate::output::OutDir;

/// Lowest `count` eigenvalues of `−Δ` on the disk of radius `radius`, with
/// multiplicity, from the Bessel zero oracle. Neumann includes the zero
/// eigenvalue of the constant mode.
pub fn disk_eigenvalues(
    radius: f64,
    bc: BoundaryCondition,
    count: usize,
) -> helmcouple::Result<Vec<f64>> {
    let kind = match bc {
        BoundaryCondition::Dirichlet => ZeroKind::J,
        BoundaryCondition::Neumann => ZeroKind::Jprime,
    };
    let mut v = Vec::new();
    if bc == BoundaryCondition::Neumann {
        v.push(0.0);
    }
    // Orders and indices up to 12 cover far more than the 20 modes allowed.
    for order in 0..=12u32 {
        for index in 1..=12u32 {
            let j = bessel_zero(order, index, kind)?;
            let l = (j / radius).powi(2);
            v.push(l);
            if order > 0 {
                v.push(l);
            }
        }
    }
    v.sort_by(f64::total_cmp);
    v.truncate(count);
    Ok(v)
}

pub fn run(config: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let setup = Setup::new(config)?;
    let count = config.options.eig.count;
    let mut body = Map::new();
    let mut rows = Vec::new();
    for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
        let modes = interior_eigenpairs(&setup.interior, bc, count).stage("eigensolve")?;
        let lambdas: Vec<f64> = modes.iter().map(|m| m.lambda).collect();
        let mut entry = json!({ "eigenvalues": lambdas });
        if let Shape::Circle { radius } = config.shape {
            let exact = disk_eigenvalues(radius, bc, count).stage("Bessel oracle")?;
            let rel: Vec<Value> = lambdas
                .iter()
                .zip(&exact)
                .map(|(&l, &e)| {
                    if e > 0.0 {
                        json!((l - e).abs() / e)
                    } else {
                        json!(l.abs())
                    }
                })
                .collect();
            entry["disk_eigenvalues"] = json!(exact);
            entry["errors"] = Value::Array(rel);
        }
        let name = match bc {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
        };
        println!(
            "{name}: {}",
            lambdas
                .iter()
                .map(|l| format!("{l:.6}"))
                .collect::<Vec<_>>()
                .join(" ")
        );
        for (i, l) in lambdas.iter().enumerate() {
            rows.push((name, i + 1, *l));
        }
        body.insert(name.into(), entry);
    }
    let r0 = config.r0;
    out.write_with("eigenvalues.csv", |w, header| {
        for h in header {
            writeln!(w, "# {h}")?;
        }
        writeln!(w, "bc,index,lambda,kappa")?;
        for (bc, i, l) in &rows {
            writeln!(w, "{bc},{i},{l:e},{:e}", (l.max(0.0) / r0).sqrt())?;
        }
        Ok(())
    })?;
    body.insert("h".into(), json!(setup.interior.max_diameter()));
    body.insert("n_vertices".into(), json!(setup.interior.n_vertices()));
    out.write_json("eig_summary.json", body)?;
    Ok(())
}
