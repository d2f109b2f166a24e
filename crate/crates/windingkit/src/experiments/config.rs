//! Experiment configuration (JSON).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::geometry::{SurfaceGrid, TorusSurface};
use crate::kernel::FixedPointOptions;
use crate::probes::ProbeCounts;
use crate::targets::{TargetField, DEFAULT_LOOP_SEGMENTS};
use crate::vec3::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    #[serde(default = "default_basis")]
    pub basis: BasisSpec,
    #[serde(default)]
    pub probes: ProbeConfig,
    #[serde(default)]
    pub lambda: LambdaConfig,
    #[serde(default)]
    pub target: Option<TargetSpec>,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub solenoid: SolenoidConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

fn default_basis() -> BasisSpec {
    BasisSpec::new(8, 8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_theta: 48,
            n_phi: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub cws: TorusSurface,
    #[serde(default)]
    pub grid: GridConfig,
    /// Plasma domain of the sweep command.
    #[serde(default)]
    pub plasma: Option<TorusSurface>,
    /// Plasma domains compared by the density command.
    #[serde(default)]
    pub case_a: Option<TorusSurface>,
    #[serde(default)]
    pub case_b: Option<TorusSurface>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    /// Volume quadrature of the plasma (Gauss-Legendre radially, midpoint in angles).
    pub counts: ProbeCounts,
    /// Fraction of the plasma tube covered by the quadrature.
    pub scale: f64,
    /// FD clusters for C¹ errors.
    pub clusters: usize,
    pub cluster_shrink: f64,
    pub cluster_step: f64,
    /// Minimum probe distance to the winding surface, in local grid spacings.
    pub guard: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            counts: ProbeCounts::new(4, 12, 32),
            scale: 1.0,
            clusters: 12,
            cluster_shrink: 0.8,
            cluster_step: 1e-3,
            guard: crate::biot_savart::DEFAULT_GUARD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaConfig {
    /// Explicit descending grid; overrides the relative grid when present.
    pub values: Option<Vec<f64>>,
    /// Relative grid: `points` values from high·s down to low·s with s = ‖AᵀWA‖/‖M‖.
    pub points: usize,
    pub low: f64,
    pub high: f64,
    pub optimality_tol: f64,
}

impl Default for LambdaConfig {
    fn default() -> Self {
        LambdaConfig {
            values: None,
            points: 24,
            low: 1e-10,
            high: 1e2,
            optimality_tol: 1e-10,
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_strength() -> f64 {
    1.0
}

fn default_segments() -> usize {
    DEFAULT_LOOP_SEGMENTS
}

/// Target selection. `plasma_neumann` refers to the plasma of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    AzimuthalWire {
        axis_point: Vec3,
        axis_dir: Vec3,
        #[serde(default = "default_strength")]
        strength: f64,
    },
    PointSource {
        center: Vec3,
    },
    CircularLoop {
        center: Vec3,
        axis: Vec3,
        radius: f64,
        current: f64,
        #[serde(default = "default_segments")]
        segments: usize,
    },
    PlasmaNeumann {
        #[serde(default = "default_true")]
        normalized: bool,
    },
}

impl TargetSpec {
    /// Build the target for `plasma` and validate it against the geometry.
    pub fn resolve(&self, cws: &TorusSurface, plasma: &TorusSurface) -> Result<TargetField> {
        let t = match self.clone() {
            TargetSpec::AzimuthalWire {
                axis_point,
                axis_dir,
                strength,
            } => {
                if axis_dir.norm() == 0.0 {
                    return Err(Error::Config("azimuthal_wire axis_dir must be nonzero".into()));
                }
                TargetField::AzimuthalWire {
                    axis_point,
                    axis_dir: axis_dir.normalized(),
                    strength,
                }
            }
            TargetSpec::PointSource { center } => TargetField::PointSource { center },
            TargetSpec::CircularLoop {
                center,
                axis,
                radius,
                current,
                segments,
            } => TargetField::CircularLoop {
                center,
                axis,
                radius,
                current,
                segments,
            },
            TargetSpec::PlasmaNeumann { normalized } => TargetField::plasma_neumann(plasma, normalized)?,
        };
        t.validate(cws, plasma)?;
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvdConfig {
    pub grid: GridConfig,
    pub m_max: Vec<usize>,
    pub probe_shrink: f64,
    pub probe_counts: ProbeCounts,
    pub gap_threshold: f64,
    pub cosine_min: f64,
}

impl Default for SvdConfig {
    fn default() -> Self {
        SvdConfig {
            grid: GridConfig {
                n_theta: 48,
                n_phi: 192,
            },
            m_max: vec![6, 8, 10],
            probe_shrink: 0.5,
            probe_counts: ProbeCounts::new(6, 16, 32),
            gap_threshold: 1e2,
            cosine_min: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    /// Square grid sizes n (n×n nodes), coarse to fine.
    pub resolutions: Vec<usize>,
    pub probe_shrink: f64,
    pub probe_counts: ProbeCounts,
    pub fixed_point: FixedPointOptions,
    pub pairing_tol: f64,
    pub residual_tol: f64,
    pub refinement_ratio: f64,
    pub agreement_tol: f64,
    pub monotone_slack: f64,
    /// Grid size and pair count of the firm non-expansiveness check.
    pub fne_resolution: usize,
    pub fne_pairs: usize,
    pub fne_tol: f64,
    pub svd: SvdConfig,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            resolutions: vec![64, 128],
            probe_shrink: 0.2,
            probe_counts: ProbeCounts::new(2, 5, 5),
            fixed_point: FixedPointOptions::default(),
            pairing_tol: 1e-3,
            residual_tol: 1e-2,
            refinement_ratio: 2.0,
            agreement_tol: 1e-4,
            monotone_slack: 0.05,
            fne_resolution: 32,
            fne_pairs: 10,
            fne_tol: 1e-6,
            svd: SvdConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolenoidConfig {
    pub resolutions: Vec<usize>,
    /// Resolution at which the tolerance is enforced.
    pub check_resolution: usize,
    pub probe_shrink: f64,
    pub probe_counts: ProbeCounts,
    /// Points outside the winding surface where the field must vanish.
    pub exterior: Vec<Vec3>,
    pub tol: f64,
}

impl Default for SolenoidConfig {
    fn default() -> Self {
        SolenoidConfig {
            resolutions: vec![32, 64, 128],
            check_resolution: 64,
            probe_shrink: 0.15,
            probe_counts: ProbeCounts::new(2, 5, 5),
            exterior: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(0.5, 0.5, 1.0),
                Vec3::new(5.5, 0.0, 0.0),
                Vec3::new(0.0, -6.0, 1.0),
                Vec3::new(3.0, 0.0, 2.5),
            ],
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Prepended to every output file name.
    pub prefix: String,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        ExperimentConfig::from_json(&text)
    }

    /// Structural checks that do not need any assembly.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.geometry.cws.validate().map_err(cfg_err)?;
        for p in [&self.geometry.plasma, &self.geometry.case_a, &self.geometry.case_b]
            .into_iter()
            .flatten()
        {
            p.validate().map_err(cfg_err)?;
        }
        let l = &self.lambda;
        if let Some(v) = &l.values {
            if v.is_empty() || v.iter().any(|x| !(*x > 0.0 && x.is_finite())) || v.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::Config("lambda.values must be positive and strictly descending".into()));
            }
        } else if l.points < 2 || !(l.low > 0.0 && l.high > l.low) {
            return Err(Error::Config("lambda needs points ≥ 2 and 0 < low < high".into()));
        }
        let p = &self.probes;
        if !(p.scale > 0.0 && p.scale <= 1.0) || !(p.cluster_shrink > 0.0 && p.cluster_shrink < 1.0) {
            return Err(Error::Config("probe scale must lie in (0, 1] and cluster_shrink in (0, 1)".into()));
        }
        if !(p.cluster_step > 0.0) || !(p.guard >= 0.0) {
            return Err(Error::Config("cluster_step must be positive and guard nonnegative".into()));
        }
        if self.kernel.resolutions.is_empty() || self.solenoid.resolutions.is_empty() {
            return Err(Error::Config("resolution lists must not be empty".into()));
        }
        if !self.solenoid.resolutions.contains(&self.solenoid.check_resolution) {
            return Err(Error::Config("solenoid.check_resolution must be one of the resolutions".into()));
        }
        self.kernel.fixed_point.relaxation.validate().map_err(cfg_err)?;
        if self.output.prefix.contains(['/', '\\']) {
            return Err(Error::Config("output.prefix must not contain path separators".into()));
        }
        Ok(())
    }
}

/// Samples of ∂P used for containment checks.
const CONTAINMENT_SAMPLES: usize = 64;

/// P̄ ⊂ Ω, with every sampled point of ∂P at least `guard` local spacings from the winding-surface nodes.
pub fn check_containment(cws_grid: &SurfaceGrid, plasma: &TorusSurface, guard: f64) -> Result<()> {
    let cws = cws_grid.surface();
    let n = CONTAINMENT_SAMPLES;
    for i in 0..n {
        for j in 0..n {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let p = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            let x = plasma.point(t, p);
            if !cws.contains(x) {
                return Err(Error::Config(format!("plasma point {x:?} lies outside the winding surface")));
            }
            if cws_grid.violates_guard(x, guard) {
                return Err(Error::Config(format!(
                    "plasma point {x:?} is closer than {guard} grid spacings to the winding surface"
                )));
            }
        }
    }
    Ok(())
}
