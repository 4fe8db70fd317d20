//! Indoor optical wireless channel generation.

mod geometry;
mod pdp;
mod realization;

pub use geometry::{
    draw_receiver, lambertian_order, los_gain, specular_path, Pose, ScenarioConfig, SpecularPath, Vec3, Wall,
    SPEED_OF_LIGHT,
};
pub use pdp::{label_class, CirProfile, ClassTemplates, DelayClass, PdpTemplate, TemplateScaling};
pub use realization::{sample_realization, sample_realization_with, ChannelRealization, NlosPath, MAX_POSE_ATTEMPTS};
