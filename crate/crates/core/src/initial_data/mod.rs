pub mod datum;
pub mod ladder;
pub mod params;
pub mod profile;

pub use datum::{
    build_f0, cutoff_radius_bound, rescale_to_semiclassical, verify_bubble_norms, BubbleNormRow, FrameOptions,
    SemiclassicalDatum,
};
pub use ladder::{Background, BubbleLadder, LadderConfig, LadderKind};
pub use params::ModelParams;
pub use profile::{make_cutoff, make_mollifier, make_profile, ProfileKind};
