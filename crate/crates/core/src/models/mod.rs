//! Concrete scalar admissible systems: irregular LDPC on the BEC, GLDPC
//! with bounded-distance BCH decoding, and ISI erasure channels, plus their
//! trial entropies and analytic thresholds.

mod gldpc;
mod isi;
mod ldpc;
mod poly;

pub use gldpc::{
    gldpc, gldpc_dg, gldpc_entropy_root, gldpc_g, gldpc_g_int, gldpc_threshold,
    gldpc_trial_entropy, GldpcParams,
};
pub use isi::{isi_erasure, IsiChannel};
pub use ldpc::{
    ldpc_bec, ldpc_trial_entropy, maxwell_threshold, maxwell_vs_potential, DegreeDistribution,
};
