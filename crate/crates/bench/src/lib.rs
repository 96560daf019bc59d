//! Shared fixtures for the criterion benches.

use rydmol::classical::{resonant_rotational_constant, total_energy};
use rydmol::{ChannelSet, ClassicalParams, Parity, ReactionMatrix};

pub const J: u32 = 50;
pub const L: u32 = 10;
pub const NU_REF: f64 = 315.5;

pub struct Fixture {
    pub set: ChannelSet,
    pub rm: ReactionMatrix,
    pub e_total: f64,
}

/// Default molecule at the resonant calibration.
pub fn fixture(k: f64) -> Fixture {
    let b = resonant_rotational_constant(NU_REF, J as f64, 2);
    let set = ChannelSet::new(J, L, Parity::Plus, b, 0.4, k).expect("valid channel set");
    let rm = set.reaction_matrix().expect("no defect pole");
    Fixture { e_total: total_energy(b, J as f64, NU_REF), set, rm }
}

pub fn classical(k: f64) -> ClassicalParams {
    let f = fixture(k);
    ClassicalParams::new(J as f64, L as f64, k, f.set.b_rot(), f.e_total).expect("bound")
}
