//! Orthographic rendering of surface patches: Phong-shaded video and
//! ray-cast depth video over the view window `(-1, 1)^2`.

mod clip;
mod mesh;
mod raycast;
mod shade;
mod texture;

pub use clip::{
    add_noise, make_clip, quantize, sample_clip, ClipDigest, ClipMeta, ClipSample, MaterialParams,
};
pub use mesh::TriangleMesh;
pub use raycast::{cast_rays, raycast_depth, DepthFrame, Hit, HitBuffer, BACKGROUND_DEPTH, MIN_TRIANGLE_AREA};
pub use shade::{phong, shade_frame, shade_hits, LightRig, Material, BACKGROUND_SHADE, VIEW_DIR};
pub use texture::{crop_origin, crop_tiled, load_rgb, procedural_texture, TextureSample, TextureSource, TEXTURE_SIZE};
