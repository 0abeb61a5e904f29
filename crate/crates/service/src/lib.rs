//! Annotation service: projects over images, ontology-driven annotation
//! options, relation suggestions filtered by domain and range, live
//! validation, competency queries and graph export.
//!
//! [`Service`] holds the logic and is usable without HTTP; [`router`]
//! exposes it over HTTP+JSON.

pub mod error;
pub mod http;
pub mod model;
pub mod service;

pub use error::{ErrorBody, Position, ServiceError};
pub use http::{router, serve, spawn};
pub use model::*;
pub use service::{admissible_relations, admits, dip_band, Service};

/// Environment variable naming the project store root.
pub const DATA_DIR_ENV: &str = "GEOFAULT_DATA_DIR";
/// Environment variable naming a directory of static UI assets.
pub const STATIC_DIR_ENV: &str = "GEOFAULT_STATIC_DIR";
