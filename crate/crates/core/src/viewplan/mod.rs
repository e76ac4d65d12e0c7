//! Virtual viewpoint planning: candidate sampling in free space, feature
//! co-visibility, greedy max-min selection, and depth export.

mod candidates;
mod export;
mod features;
mod select;
mod similarity;

pub use candidates::{
    in_free_space, sample_candidates, yaw_camera, CandidateOptions, DEFAULT_CANDIDATE_COUNT, DEFAULT_CLEARANCE_FRACTION,
    DEFAULT_YAW_COUNT, MAX_REJECTIONS_PER_ACCEPT,
};
pub use export::{depth_file_name, export_virtual_depths, render_plan_depths, DepthManifest, DepthManifestEntry};
pub use features::{load_features, save_features, FeatureCloud, FeatureRecord};
pub use select::{select_views, view_distance, PlannedCameraRecord, ViewPlan, ViewPlanRecord, DEFAULT_KAPPA, DEFAULT_SELECT_COUNT};
pub use similarity::{build_similarity, SimilarityMatrix};
