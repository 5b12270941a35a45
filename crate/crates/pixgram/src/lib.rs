//! Text classification over rendered word images.
//!
//! Words are rasterized into fixed-size binary glyph images, a document
//! becomes the stack of its word images, and a single wide 3-D convolution
//! (one kernel spans n whole word images) acts as an n-gram detector over
//! that stack. Max-over-time pooling and three fully connected layers finish
//! the classifier. The same feature map that drives classification is read
//! back out to rank the n-grams each class responds to.

pub mod autodiff;
pub mod conv;
pub mod corpus;
pub mod error;
pub mod font;
pub mod glyph;
pub mod interpret;
pub mod model;
pub mod optim;
pub mod rng;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
