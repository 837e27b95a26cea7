//! Downlink outage probability of multi-tier UAV networks whose beams suffer
//! random 3-D steering errors.
//!
//! The analytical path ([`outage`]) combines serving-distance densities
//! ([`serving`]), ring-sector interference Laplace transforms
//! ([`interference`]) and an average over the steering errors. The Monte Carlo
//! path ([`montecarlo`]) samples finite networks with exact antenna geometry
//! and serves as an independent check.
//!
//! ```no_run
//! use uav_outage::network::NetworkConfig;
//! use uav_outage::outage::outage_probability;
//!
//! let network = NetworkConfig::dense_urban();
//! let result = outage_probability(&network).unwrap();
//! println!("outage {:.4} (± {:.1e})", result.outage, result.error_estimate);
//! ```

pub mod channel;
pub mod error;
pub mod geometry;
pub mod interference;
pub mod montecarlo;
pub mod network;
pub mod outage;
pub mod quadrature;
pub mod serving;

pub use channel::{ChannelParams, LinkType};
pub use error::{Error, Result};
pub use network::{AssociationScheme, MisalignmentModel, NetworkConfig, TierConfig};
pub use outage::{outage_probability, perfect_alignment_outage, Alignment, OutageResult};
