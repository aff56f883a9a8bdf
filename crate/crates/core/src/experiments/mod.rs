//! Studies: disorder robustness, ladder fidelity, Bell-pair transport.

pub mod bell;
pub mod disorder;
pub mod ladder;

pub use bell::{bell_transport, concurrence, BellInitial, BellTransportResult};
pub use disorder::{disorder_sweep, DisorderConfig, DisorderKind, DisorderPoint};
pub use ladder::{ladder_fidelity_curve, optimize_ladder, LadderPoint, OptimizationResult, ProfileChoice};
