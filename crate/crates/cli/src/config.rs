//! Run configuration, read from a single JSON document.

use std::path::{Path, PathBuf};

use helmcouple::fem::MaterialField;
use helmcouple::mesh::{
    circle_boundary, disk_triangulation, kite_boundary, BoundaryMesh, InteriorMesh, Point,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Stage};

const MIN_BOUNDARY: usize = 8;
const MAX_BOUNDARY: usize = 2048;
const MAX_GRID: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    Circle {
        #[serde(default = "one")]
        radius: f64,
    },
    /// The standard kite `(cos t + 0.65 cos 2t − 0.65, 1.5 sin t)`.
    Kite,
}

/// Frequencies as an explicit list or as an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KappaGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl KappaGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let v = match self {
            Self::List(v) => v.clone(),
            &Self::Range { start, stop, step } => {
                if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0) {
                    return Err(CliError::Config(format!(
                        "kappa_grid range needs finite start/stop and a positive step, got {start}..{stop} by {step}"
                    )));
                }
                let count = ((stop - start) / step + 1e-9).floor();
                if count < 0.0 {
                    Vec::new()
                } else if count as usize >= MAX_GRID {
                    return Err(CliError::Config(format!(
                        "kappa_grid has more than {MAX_GRID} points"
                    )));
                } else {
                    (0..=count as usize)
                        .map(|i| start + step * i as f64)
                        .collect()
                }
            }
        };
        if v.is_empty() {
            return Err(CliError::Config("kappa_grid is empty".into()));
        }
        if v.len() > MAX_GRID {
            return Err(CliError::Config(format!(
                "kappa_grid has more than {MAX_GRID} points"
            )));
        }
        if let Some(k) = v.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
            return Err(CliError::Config(format!(
                "kappa_grid contains {k}; frequencies must be positive"
            )));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(
                "kappa_grid must be strictly ascending".into(),
            ));
        }
        Ok(v)
    }
}

/// Interior refractive index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Material {
    Constant {
        value: f64,
    },
    /// Piecewise linear in the distance from `center`, constant beyond the
    /// first and last radius.
    Radial {
        #[serde(default)]
        center: Point,
        radii: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Default for Material {
    fn default() -> Self {
        Self::Constant { value: 1.0 }
    }
}

impl Material {
    fn validate(&self) -> Result<(), CliError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        match self {
            Self::Constant { value } if !positive(*value) => Err(CliError::Config(format!(
                "material value {value} must be positive"
            ))),
            Self::Constant { .. } => Ok(()),
            Self::Radial {
                center,
                radii,
                values,
            } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return Err(CliError::Config(format!(
                        "radial material needs matching non-empty radii and values ({} vs {})",
                        radii.len(),
                        values.len()
                    )));
                }
                if !center.iter().all(|c| c.is_finite())
                    || radii.iter().any(|r| !(r.is_finite() && *r >= 0.0))
                {
                    return Err(CliError::Config(
                        "radial material radii and center must be finite".into(),
                    ));
                }
                if radii.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(CliError::Config(
                        "radial material radii must be strictly ascending".into(),
                    ));
                }
                if let Some(v) = values.iter().find(|v| !positive(**v)) {
                    return Err(CliError::Config(format!(
                        "material value {v} must be positive"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: Point) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Radial {
                center,
                radii,
                values,
            } => {
                let r = (x[0] - center[0]).hypot(x[1] - center[1]);
                let i = radii.partition_point(|&ri| ri <= r);
                if i == 0 {
                    values[0]
                } else if i == radii.len() {
                    values[radii.len() - 1]
                } else {
                    let t = (r - radii[i - 1]) / (radii[i] - radii[i - 1]);
                    values[i - 1] + t * (values[i] - values[i - 1])
                }
            }
        }
    }

    /// True when the interior index equals `r0` everywhere.
    pub fn is_transparent(&self, r0: f64) -> bool {
        match self {
            Self::Constant { value } => *value == r0,
            Self::Radial { values, .. } => values.iter().all(|v| *v == r0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub v: bool,
    pub w: bool,
    pub coupled: bool,
    pub angles: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            v: true,
            w: true,
            coupled: false,
            angles: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub direction: Point,
    pub amplitude: f64,
    pub probe_radius: f64,
    pub probe_count: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            direction: [1.0, 0.0],
            amplitude: 1.0,
            probe_radius: 3.0,
            probe_count: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    /// Also run the kernel checks at the first Dirichlet and Neumann resonances.
    pub resonance_checks: bool,
    /// Highest multipole order in the DtN comparison.
    pub dtn_max_order: u32,
    /// Highest arclength Fourier mode in the smooth idempotency check.
    pub smooth_max_mode: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            resonance_checks: true,
            dtn_max_order: 8,
            smooth_max_mode: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigOptions {
    pub count: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self { count: 10 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub sweep: SweepOptions,
    pub solve: SolveOptions,
    pub verify: VerifyOptions,
    pub eig: EigOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub shape: Shape,
    pub n_boundary: usize,
    pub target_h: f64,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub kappa_grid: Option<KappaGrid>,
    /// Exterior coefficient.
    #[serde(default = "one")]
    pub r0: f64,
    #[serde(default)]
    pub material: Material,
    #[serde(default)]
    pub options: Options,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

/// Frequency used by single-frequency commands when none is given.
pub const DEFAULT_KAPPA: f64 = 1.0;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let c: Self = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("malformed JSON: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(MIN_BOUNDARY..=MAX_BOUNDARY).contains(&self.n_boundary) {
            return Err(CliError::Config(format!(
                "n_boundary = {} must lie in {MIN_BOUNDARY}..={MAX_BOUNDARY}",
                self.n_boundary
            )));
        }
        if !(self.target_h.is_finite() && self.target_h > 0.0) {
            return Err(CliError::Config(format!(
                "target_h = {} must be positive",
                self.target_h
            )));
        }
        if let Shape::Circle { radius } = self.shape {
            if !(radius.is_finite() && radius > 0.0) {
                return Err(CliError::Config(format!(
                    "circle radius {radius} must be positive"
                )));
            }
        }
        if !(self.r0.is_finite() && self.r0 > 0.0) {
            return Err(CliError::Config(format!(
                "r0 = {} must be positive",
                self.r0
            )));
        }
        if let Some(k) = self.kappa {
            if !(k.is_finite() && k > 0.0) {
                return Err(CliError::Config(format!("kappa = {k} must be positive")));
            }
        }
        if let Some(g) = &self.kappa_grid {
            g.values()?;
        }
        self.material.validate()?;
        let s = &self.options.solve;
        let nd = s.direction[0].hypot(s.direction[1]);
        if !(nd.is_finite() && nd > 0.0) {
            return Err(CliError::Config(
                "solve direction must be a nonzero vector".into(),
            ));
        }
        if !s.amplitude.is_finite() {
            return Err(CliError::Config("solve amplitude must be finite".into()));
        }
        if !(s.probe_radius.is_finite() && s.probe_radius > 0.0) || s.probe_count == 0 {
            return Err(CliError::Config(
                "solve probes need a positive radius and count".into(),
            ));
        }
        if !(1..=20).contains(&self.options.eig.count) {
            return Err(CliError::Config(format!(
                "eig count {} must lie in 1..=20",
                self.options.eig.count
            )));
        }
        if self.options.verify.dtn_max_order > 40 {
            return Err(CliError::Config("dtn_max_order must be at most 40".into()));
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        self.kappa.unwrap_or(DEFAULT_KAPPA)
    }

    /// SHA-256 of the canonical JSON form with defaults filled in and the
    /// output directory removed, as lowercase hex.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        let canonical = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&canonical)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn boundary(&self) -> Result<BoundaryMesh, CliError> {
        match self.shape {
            Shape::Circle { radius } => circle_boundary(radius, self.n_boundary),
            Shape::Kite => kite_boundary(self.n_boundary),
        }
        .stage("boundary mesh")
    }
}

/// Meshes and material built from a configuration.
pub struct Setup {
    pub boundary: BoundaryMesh,
    pub interior: InteriorMesh,
    pub material: MaterialField,
}

impl Setup {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        let boundary = config.boundary()?;
        if config.target_h > boundary.diameter() {
            return Err(CliError::Config(format!(
                "target_h = {} exceeds the domain diameter {}",
                config.target_h,
                boundary.diameter()
            )));
        }
        let interior = disk_triangulation(&boundary, config.target_h).stage("interior mesh")?;
        let material = MaterialField::from_fn(&interior, config.r0, |x| config.material.eval(x))
            .stage("material")?;
        Ok(Self {
            boundary,
            interior,
            material,
        })
    }
}
