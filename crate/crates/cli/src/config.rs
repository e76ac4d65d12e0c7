use std::path::Path;

use serde::{Deserialize, Serialize};

use scaffold_core::coverage::{CoverageForm, CoverageOptions, VisibilityBackend};
use scaffold_core::losses::RobustLossParams;
use scaffold_core::placement::PlacementConfig;
use scaffold_core::raycast::{Interpolation, DEFAULT_EPS_OCC_FRACTION};
use scaffold_core::synth::{SceneKind, SceneParams};
use scaffold_core::viewplan::{
    CandidateOptions, DEFAULT_CANDIDATE_COUNT, DEFAULT_CLEARANCE_FRACTION, DEFAULT_KAPPA, DEFAULT_SELECT_COUNT, DEFAULT_YAW_COUNT,
};

use crate::CliError;

/// Everything a run depends on besides its input files. Loaded from TOML
/// or JSON, then patched by command-line flags, then copied verbatim into
/// each command's `run.json`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Drives every random choice; overrides `placement.seed`.
    pub seed: u64,
    pub synth: SynthConfig,
    pub coverage: CoverageConfig,
    pub placement: PlacementConfig<f64>,
    pub place: PlaceConfig,
    pub viewplan: ViewPlanConfig,
    pub depth: DepthConfig,
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub scene: SceneKind,
    #[serde(flatten)]
    pub params: SceneParams,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { scene: SceneKind::TwoRoom, params: SceneParams::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Visibility {
    #[default]
    DepthBilinear,
    DepthNearest,
    ShadowRay,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageConfig {
    pub samples: usize,
    pub form: CoverageForm,
    pub visibility: Visibility,
    /// Occlusion tolerance as a fraction of the bbox diagonal.
    pub eps_occ_fraction: f64,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            form: CoverageForm::Cube,
            visibility: Visibility::DepthBilinear,
            eps_occ_fraction: DEFAULT_EPS_OCC_FRACTION,
        }
    }
}

impl CoverageConfig {
    pub fn options(&self, diagonal: f64) -> CoverageOptions<f64> {
        let backend = match self.visibility {
            Visibility::DepthBilinear => VisibilityBackend::DepthMap(Interpolation::Bilinear),
            Visibility::DepthNearest => VisibilityBackend::DepthMap(Interpolation::Nearest),
            Visibility::ShadowRay => VisibilityBackend::ShadowRay,
        };
        CoverageOptions { form: self.form, backend, eps_occ: Some(self.eps_occ_fraction * diagonal) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    #[default]
    All,
    Trajectory,
    Grid,
    None,
}

impl BaselineKind {
    pub fn trajectory(self) -> bool {
        matches!(self, Self::All | Self::Trajectory)
    }

    pub fn grid(self) -> bool {
        matches!(self, Self::All | Self::Grid)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlaceConfig {
    pub baseline: BaselineKind,
    /// K-means clusters over the optimized bases; 0 disables clustering.
    pub core_count: usize,
}

impl Default for PlaceConfig {
    fn default() -> Self {
        Self { baseline: BaselineKind::All, core_count: 3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViewPlanConfig {
    pub candidates: usize,
    pub count: usize,
    pub kappa: f64,
    pub clearance_fraction: f64,
    pub yaw_count: usize,
    pub line_of_sight: bool,
}

impl Default for ViewPlanConfig {
    fn default() -> Self {
        Self {
            candidates: DEFAULT_CANDIDATE_COUNT,
            count: DEFAULT_SELECT_COUNT,
            kappa: DEFAULT_KAPPA,
            clearance_fraction: DEFAULT_CLEARANCE_FRACTION,
            yaw_count: DEFAULT_YAW_COUNT,
            line_of_sight: false,
        }
    }
}

impl ViewPlanConfig {
    pub fn candidate_options(&self) -> CandidateOptions<f64> {
        CandidateOptions {
            clearance_fraction: self.clearance_fraction,
            yaw_count: self.yaw_count,
            require_line_of_sight: self.line_of_sight,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DepthFormat {
    #[default]
    Pfm,
    Png,
}

impl DepthFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Pfm => "pfm",
            Self::Png => "png",
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepthConfig {
    pub format: DepthFormat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub basis_counts: Vec<usize>,
    pub robust: RobustLossParams<f64>,
    /// Fit a per-map scale and shift of the predicted depth before scoring.
    pub align: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { basis_counts: vec![4, 8, 16], robust: RobustLossParams::default(), align: false }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        let parsed = match ext.as_deref() {
            Some("toml") => toml::from_str(&text).map_err(|e| e.to_string()),
            Some("json") => serde_json::from_str(&text).map_err(|e| e.to_string()),
            _ => Err("config must be .toml or .json".to_string()),
        };
        parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies cross-field rules and checks every section.
    pub fn finalize(mut self) -> Result<Self, CliError> {
        self.placement.seed = self.seed;
        self.placement.validate()?;
        self.eval.robust.validate()?;
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if !(self.coverage.eps_occ_fraction >= 0.0 && self.coverage.eps_occ_fraction.is_finite()) {
            return bad("coverage.eps_occ_fraction must be finite and non-negative");
        }
        if !(self.viewplan.kappa >= 0.0 && self.viewplan.kappa.is_finite()) {
            return bad("viewplan.kappa must be finite and non-negative");
        }
        if self.viewplan.yaw_count == 0 {
            return bad("viewplan.yaw_count must be at least 1");
        }
        if self.eval.basis_counts.contains(&0) {
            return bad("eval.basis_counts must be positive");
        }
        Ok(self)
    }
}
