pub mod geom;
pub mod raster;
pub mod fit;
pub mod plan;
pub mod emit;
pub mod lora;
pub mod pipeline;
pub mod synth;
