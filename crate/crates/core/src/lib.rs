//! Outage-aware transmit beamforming for joint radar-communication arrays.
//!
//! A single uniform linear array serves K downlink users while steering
//! Bartlett beampattern power toward a radar look direction. Channel state is
//! imperfect, so per-user SINR targets are enforced as outage constraints
//! through a Bernstein-type concentration surrogate, which turns the design
//! into a convex conic program. The crate provides:
//!
//! - array geometry, steering vectors, beampattern and lobe-matrix quadrature,
//! - channel sampling and realized-SINR evaluation,
//! - the Bernstein surrogate pieces and Monte-Carlo outage validation,
//! - a dense conic interior-point solver (PSD + second-order + orthant cones)
//!   plus problem assembly and rank-one beamformer extraction,
//! - closed-form single-user designs used as cross-checks,
//! - radar/communication metrics (ISMR, detection probability, rates),
//! - seeded experiment runners with CSV/JSON emitters and a CLI front end.

pub mod array;
pub mod bernstein;
pub mod channel;
pub mod closed_form;
pub mod experiments;
pub mod linalg;
pub mod metrics;
pub mod sdp;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
