use helmcouple::bem::QuadratureSpec;
use helmcouple::fem::BoundaryCondition;
use helmcouple::io::write_sweep_csv;
use helmcouple::specialfn::{bessel_zero, ZeroKind};
use helmcouple::spectral::{
    detect_dips, sweep, Dip, Meshes, SpectralContext, SweepRecord, SweepSelection,
};
use serde_json::{json, Map, Value};

use crate::config::{RunConfig, Setup, Shape};
use crate::error::{CliError, Stage};
use crate::output::OutDir;

const BESSEL_ORDERS: u32 = 12;
const BESSEL_INDICES: u32 = 6;

/// Nearest disk resonance `j / (R √r0)` of the given kind.
pub fn nearest_bessel(radius: f64, r0: f64, kind: ZeroKind, kappa: f64) -> Option<Value> {
    let mut best: Option<(f64, u32, u32, f64)> = None;
    for order in 0..=BESSEL_ORDERS {
        for index in 1..=BESSEL_INDICES {
            let Ok(j) = bessel_zero(order, index, kind) else {
                continue;
            };
            let k = j / (radius * r0.sqrt());
            let d = (k - kappa).abs();
            if best.is_none_or(|b| d < b.0) {
                best = Some((d, order, index, k));
            }
        }
    }
    best.map(|(d, order, index, k)| {
        json!({
            "kind": match kind { ZeroKind::J => "J", ZeroKind::Jprime => "J'" },
            "order": order,
            "index": index,
            "kappa": k,
            "distance": d,
        })
    })
}

fn describe(
    ctx: &SpectralContext<'_>,
    config: &RunConfig,
    operator: &str,
    bc: BoundaryCondition,
    dip: &Dip,
) -> Value {
    let mut v = json!({
        "operator": operator,
        "kappa": dip.kappa,
        "refined_kappa": dip.refined_kappa,
        "sigma_min": dip.sigma,
    });
    let modes = match bc {
        BoundaryCondition::Dirichlet => &ctx.reference.dirichlet,
        BoundaryCondition::Neumann => &ctx.reference.neumann,
    };
    let nearest = modes.iter().filter(|m| m.lambda > 1e-8).min_by(|a, b| {
        let d = |l: f64| ((l / config.r0).sqrt() - dip.refined_kappa).abs();
        d(a.lambda).total_cmp(&d(b.lambda))
    });
    let matched = ctx
        .wavenumber(dip.refined_kappa)
        .map(|k| {
            ctx.reference
                .matching(bc, &k)
                .iter()
                .map(|m| m.lambda)
                .collect::<Vec<_>>()
        })
        .unwrap_or_default();
    v["fem"] = json!({
        "boundary_condition": bc,
        "nearest_lambda": nearest.map(|m| m.lambda),
        "nearest_kappa": nearest.map(|m| (m.lambda / config.r0).sqrt()),
        "matched_lambdas": matched,
    });
    if let Shape::Circle { radius } = config.shape {
        let kind = match bc {
            BoundaryCondition::Dirichlet => ZeroKind::J,
            BoundaryCondition::Neumann => ZeroKind::Jprime,
        };
        v["bessel"] =
            nearest_bessel(radius, config.r0, kind, dip.refined_kappa).unwrap_or(Value::Null);
    }
    v
}

pub fn run(config: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let grid = config
        .kappa_grid
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs kappa_grid".into()))?
        .values()?;
    let setup = Setup::new(config)?;
    let meshes = Meshes {
        boundary: &setup.boundary,
        interior: &setup.interior,
    };
    let ctx = SpectralContext::new(meshes, &setup.material, QuadratureSpec::default())
        .stage("FEM reference")?;
    let o = &config.options.sweep;
    let which = SweepSelection {
        v: o.v,
        w: o.w,
        coupled: o.coupled,
        angles: o.angles,
    };
    let records = sweep(&ctx, &grid, which).stage("sweep")?;
    out.write_with("sweep.csv", |w, h| write_sweep_csv(w, &records, h))?;

    let pick: [(
        &str,
        bool,
        BoundaryCondition,
        fn(&SweepRecord) -> Option<f64>,
    ); 3] = [
        ("V", o.v, BoundaryCondition::Dirichlet, |r| r.sigma_min_v),
        ("W", o.w, BoundaryCondition::Neumann, |r| r.sigma_min_w),
        ("coupled", o.coupled, BoundaryCondition::Dirichlet, |r| {
            r.sigma_min_coupled
        }),
    ];
    let mut dips = Vec::new();
    for (name, on, bc, field) in pick {
        if on {
            for d in detect_dips(&records, field) {
                dips.push(describe(&ctx, config, name, bc, &d));
            }
        }
    }
    println!("sweep: {} frequencies, {} dips", grid.len(), dips.len());
    for d in &dips {
        println!(
            "  {} dip at kappa = {:.5} (sigma_min = {:.3e})",
            d["operator"].as_str().unwrap_or("?"),
            d["refined_kappa"].as_f64().unwrap_or(f64::NAN),
            d["sigma_min"].as_f64().unwrap_or(f64::NAN)
        );
    }
    let mut body = Map::new();
    body.insert("n_frequencies".into(), json!(grid.len()));
    body.insert("kappa_range".into(), json!([grid[0], grid[grid.len() - 1]]));
    body.insert("dips".into(), Value::Array(dips));
    out.write_json("sweep_summary.json", body)?;
    Ok(())
}
