//! Digital-rock toolkit: voxel volumes to Mapper graphs, topological graph
//! metrics, classical effective-medium physics, and two graph regressors
//! (a random forest over graph summaries and a Graph Isomorphism Network)
//! that predict effective bulk and shear moduli.
//!
//! The pipeline is
//!
//! ```text
//! VoxelGrid --mapper--> RockGraph --graphmetrics--> GraphSummary --randomforest--> (K, mu)
//!                            \-----------------------------------------ginnet----> (K, mu)
//! ```
//!
//! with [`effmed`] supplying bounds, the differential effective medium model,
//! and the synthetic labels used by [`dataset`].

pub mod config;
pub mod corpus;
pub mod dataset;
pub mod effmed;
pub mod error;
pub mod ginnet;
pub mod graphmetrics;
pub mod mapper;
pub mod modelfile;
pub mod randomforest;
pub mod rng;
pub mod voxelgrid;

pub use effmed::ElasticModuli;
pub use error::{Error, Result};
pub use mapper::{MapperParams, Phase, RockGraph};
pub use voxelgrid::VoxelGrid;
