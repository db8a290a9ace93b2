//! Streamline classification with a point-cloud encoder.
//!
//! Each streamline is resampled to a fixed number of points, every point is
//! encoded by a shared MLP and the per-point features are max-pooled into a
//! global shape feature. Training runs in two phases: the encoder and a
//! projection head are pretrained with a supervised contrastive loss, then the
//! encoder is frozen and a fully connected classifier is trained on top of it
//! with cross-entropy.
//!
//! Module map:
//!
//! - [`geometry`]: streamlines, resampling, affine application, SLP1/CSV I/O
//! - [`nn`]: dense layers, activations, pooling, normalization, Adam, gradient checking
//! - [`model`]: encoder/projector/classifier assembly, FLOPs accounting, checkpoints
//! - [`losses`]: supervised contrastive loss and cross-entropy
//! - [`train`]: the two-phase training pipeline
//! - [`metrics`]: accuracy, macro F1, cluster identification rate
//! - [`synthdata`]: deterministic synthetic streamline corpora

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod synthdata;
pub mod train;

pub use error::{Error, Result};
pub use geometry::{AffineTransform, Point3, Streamline, StreamlineSet};
pub use model::{ArchDescriptor, FeatureBatch, ModelBundle};
