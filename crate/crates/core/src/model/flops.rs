//! Inference cost in multiply-accumulates per streamline.
//!
//! One multiply-accumulate counts as one FLOP; bias additions and
//! activations are not counted. The projection head is excluded because it
//! is only used during contrastive pretraining.

use super::ArchDescriptor;

/// Layout assumed for the optional transformation networks.
pub const TNET_LAYOUT: &str = "input T-net: shared MLP 3-64-128-1024, max-pool, FC 1024-512-256-9, \
3x3 transform applied to every point; feature T-net on the first encoder layer's output (width d): \
shared MLP d-64-128-1024, max-pool, FC 1024-512-256-d*d, dxd transform applied to every point";

const TNET_MLP: [u64; 3] = [64, 128, 1024];
const TNET_FC: [u64; 2] = [512, 256];

fn chain_macs(input: u64, dims: impl IntoIterator<Item = u64>) -> u64 {
    let mut prev = input;
    dims.into_iter()
        .map(|d| {
            let c = prev * d;
            prev = d;
            c
        })
        .sum()
}

/// Cost of one transformation network producing a `dim × dim` matrix from
/// `n` points of width `dim`, plus applying it to every point.
fn tnet_macs(n: u64, dim: u64) -> u64 {
    let mlp = n * chain_macs(dim, TNET_MLP);
    let fc = chain_macs(TNET_MLP[2], TNET_FC.into_iter().chain([dim * dim]));
    let apply = n * dim * dim;
    mlp + fc + apply
}

/// Multiply-accumulates for classifying one streamline: the encoder runs once
/// per point, the classifier once per streamline. With `arch.with_tnets` the
/// cost of input and feature transformation networks is added (see
/// [`TNET_LAYOUT`]).
pub fn count_flops(arch: &ArchDescriptor) -> u64 {
    let n = arch.n as u64;
    let as_u64 = |v: &Vec<usize>| v.iter().map(|&d| d as u64).collect::<Vec<_>>();
    let encoder = n * chain_macs(3, as_u64(&arch.encoder_dims));
    let classifier = chain_macs(
        arch.global_dim() as u64,
        as_u64(&arch.classifier_hidden).into_iter().chain([arch.k as u64]),
    );
    let mut total = encoder + classifier;
    if arch.with_tnets {
        total += tnet_macs(n, 3);
        total += tnet_macs(n, arch.encoder_dims[0] as u64);
    }
    total
}

/// `2798144` → `"2.8M"`.
pub fn format_millions(macs: u64) -> String {
    format!("{:.1}M", macs as f64 / 1e6)
}
