//! Rotating-core Rydberg molecule models.
//!
//! The quantum side is a multichannel quantum defect (MQDT) description of a
//! Rydberg electron with fixed orbital angular momentum `L` colliding on a
//! rigid-rotor ion core with angular momentum `N`, coupled to a conserved total
//! `J`. The classical side is the stroboscopic kicked-precession map followed
//! by the direction of `L` in the frame co-rotating with the core.
//!
//! Module map:
//!
//! * [`angular`]: Wigner 3j symbols and spin coherent states.
//! * [`channels`]: channel list, rotational energies, quantum defects, frame
//!   transformation and reaction matrix.
//! * [`classical`]: kicked-precession map and surfaces of section.
//! * [`mqdt`]: bound-state solver and eigenstate linear entropy.
//! * [`dynamics`]: wavepacket evolution, purity series, correlation functions.
//! * [`husimi`]: projection of eigenstates onto the sphere of `L` directions.

pub mod angular;
pub mod channels;
pub mod classical;
pub mod dynamics;
pub mod husimi;
pub mod mqdt;

mod numeric;

pub use channels::{ChannelError, ChannelSet, Parity, ReactionMatrix};
pub use classical::{ClassicalError, ClassicalParams, ClassicalState, SosPoint, SosPointSet};
pub use dynamics::{DynamicsError, EntropySeries, WavepacketSpec, WavepacketState};
pub use husimi::HusimiGrid;
pub use mqdt::{EigenSearch, Eigenstate, EnergyWindow, EntropyStatistics, MqdtError};

pub use num_complex::Complex64;
