//! Random circuit generation, image I/O and color transfer.

mod color;
mod image;
mod structure;

pub use color::{color_transfer, ColorTransferConfig, ColorTransferReport};
pub use image::ImageBuffer;
pub use structure::{generate_family, generate_pair, random_partition, GenSpec, LeafKind};
