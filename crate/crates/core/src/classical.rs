//! Kicked-precession map for the direction of `L`.
//!
//! The frame co-rotates with the core: `OZ` is the molecular axis and `OX`
//! points along `N`. Between collisions `L` precesses about `N` (a rotation
//! about `OX`); each passage through the core adds an extra rotation about
//! `OZ` whose angle depends on the projection `Λ = L u_z`. The frame is then
//! realigned so that the new `N` lies along `+OX` again.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassicalError {
    #[error("need J >= L > 0, got J = {j}, L = {l}")]
    BadMomenta { j: f64, l: f64 },
    #[error("rotational constant must be positive and finite, got {0}")]
    BadRotationalConstant(f64),
    #[error("kick strength must be finite, got {0}")]
    BadKick(f64),
    #[error("E_total = {energy:e} is not below the bound threshold {threshold:e}")]
    NotBound { energy: f64, threshold: f64 },
    #[error("electron unbound at N = {n}: epsilon = {epsilon:e}")]
    Unbound { n: f64, epsilon: f64 },
    #[error("number of kicks must be at least 1")]
    NoKicks,
}

/// `B_r = p / (2 ν³ (2N+1))`, making `T_e = (p/2) T_c` at `(ν_ref, N_ref)`.
pub fn resonant_rotational_constant(nu_ref: f64, n_ref: f64, p: u32) -> f64 {
    assert!(nu_ref > 0.0 && n_ref > 0.0 && p >= 1, "need nu_ref > 0, N_ref > 0, p >= 1");
    p as f64 / (2.0 * nu_ref.powi(3) * (2.0 * n_ref + 1.0))
}

/// Total energy with the electron at effective quantum number `nu` in channel `n`.
pub fn total_energy(b_rot: f64, n: f64, nu: f64) -> f64 {
    b_rot * n * (n + 1.0) - 0.5 / (nu * nu)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalParams {
    j: f64,
    l: f64,
    k: f64,
    b_rot: f64,
    e_total: f64,
    mirrored: bool,
}

impl ClassicalParams {
    pub fn new(j: f64, l: f64, k: f64, b_rot: f64, e_total: f64) -> Result<Self, ClassicalError> {
        if !(l > 0.0 && j >= l && j.is_finite()) {
            return Err(ClassicalError::BadMomenta { j, l });
        }
        if !(b_rot > 0.0 && b_rot.is_finite()) {
            return Err(ClassicalError::BadRotationalConstant(b_rot));
        }
        if !k.is_finite() {
            return Err(ClassicalError::BadKick(k));
        }
        let n_min = j - l;
        let threshold = b_rot * n_min * (n_min + 1.0);
        if !(e_total < threshold) {
            return Err(ClassicalError::NotBound { energy: e_total, threshold });
        }
        Ok(Self { j, l, k, b_rot, e_total, mirrored: false })
    }

    /// Reverses the sense of both the kick and the precession. The resulting
    /// map is the reflection `u_y -> -u_y` (`φ -> -φ`) of the original one.
    pub fn with_mirror(mut self, mirrored: bool) -> Self {
        self.mirrored = mirrored;
        self
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn b_rot(&self) -> f64 {
        self.b_rot
    }

    pub fn e_total(&self) -> f64 {
        self.e_total
    }

    pub fn is_mirrored(&self) -> bool {
        self.mirrored
    }

    /// Positive root of `N² + 2 N L u_x + L² - J² = 0`.
    pub fn core_momentum(&self, u: &[f64; 3]) -> f64 {
        let lx = self.l * u[0];
        -lx + (lx * lx + self.j * self.j - self.l * self.l).sqrt()
    }

    /// Inverse of [`core_momentum`](Self::core_momentum) for the `u_x` component.
    pub fn ux_for_core_momentum(&self, n: f64) -> f64 {
        (self.j * self.j - self.l * self.l - n * n) / (2.0 * n * self.l)
    }

    pub fn electron_energy(&self, n: f64) -> f64 {
        self.e_total - self.b_rot * n * (n + 1.0)
    }

    pub fn effective_quantum_number(&self, n: f64) -> Result<f64, ClassicalError> {
        let epsilon = self.electron_energy(n);
        if epsilon < 0.0 {
            Ok((-2.0 * epsilon).sqrt().recip())
        } else {
            Err(ClassicalError::Unbound { n, epsilon })
        }
    }

    /// Electron Kepler period `2π ν³`.
    pub fn kepler_period(&self, n: f64) -> Result<f64, ClassicalError> {
        Ok(2.0 * PI * self.effective_quantum_number(n)?.powi(3))
    }

    /// Core rotation period `2π / (B_r (2N+1))`.
    pub fn core_period(&self, n: f64) -> f64 {
        2.0 * PI / (self.b_rot * (2.0 * n + 1.0))
    }

    /// Precession angle `γ = B_r (2N+1) T_e` accumulated during one Kepler orbit.
    pub fn precession_angle(&self, n: f64) -> Result<f64, ClassicalError> {
        Ok(self.b_rot * (2.0 * n + 1.0) * self.kepler_period(n)?)
    }

    /// Rotation of `u` about `OX` by `-γ`.
    pub fn precess(&self, state: &ClassicalState) -> Result<ClassicalState, ClassicalError> {
        let n = self.core_momentum(&state.u);
        let gamma = self.precession_angle(n)?;
        let angle = if self.mirrored { gamma } else { -gamma };
        let (s, c) = angle.sin_cos();
        let [x, y, z] = state.u;
        Ok(ClassicalState { u: [x, c * y - s * z, s * y + c * z] })
    }

    /// Rotation about `OZ` by `δφ = -k u_z`, followed by realignment of `N`
    /// with `+OX`.
    pub fn kick(&self, state: &ClassicalState) -> ClassicalState {
        let n = self.core_momentum(&state.u);
        let dphi = if self.mirrored { self.k * state.u[2] } else { -self.k * state.u[2] };
        let u1 = rotate_z(state.u, dphi);
        // J = L u + N x̂ is fixed; the new N is J - L u'
        let nx = self.l * (state.u[0] - u1[0]) + n;
        let ny = self.l * (state.u[1] - u1[1]);
        let u2 = rotate_z(u1, -ny.atan2(nx));
        ClassicalState::from_vector(u2)
    }

    /// One map step: precession then kick.
    pub fn step(&self, state: &ClassicalState) -> Result<ClassicalState, ClassicalError> {
        Ok(self.kick(&self.precess(state)?))
    }

    /// Iterates every seed `(θ, φ)` for `n_kicks` steps, recording `u` after
    /// each kick. Records come out ordered by seed, then kick, whatever the
    /// thread count.
    pub fn iterate_sos(&self, seeds: &[(f64, f64)], n_kicks: usize) -> Result<SosPointSet, ClassicalError> {
        if n_kicks == 0 {
            return Err(ClassicalError::NoKicks);
        }
        let per_seed: Result<Vec<Vec<SosPoint>>, ClassicalError> = seeds
            .par_iter()
            .enumerate()
            .map(|(seed_id, &(theta, phi))| {
                let mut state = ClassicalState::from_angles(theta, phi);
                let mut out = Vec::with_capacity(n_kicks);
                for kick_index in 1..=n_kicks {
                    state = self.step(&state)?;
                    out.push(SosPoint { seed_id, kick_index, u: state.u, n: self.core_momentum(&state.u) });
                }
                Ok(out)
            })
            .collect();
        Ok(SosPointSet { points: per_seed?.into_iter().flatten().collect() })
    }
}

fn rotate_z(u: [f64; 3], angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    [c * u[0] - s * u[1], s * u[0] + c * u[1], u[2]]
}

/// Direction of `L` in the co-rotating frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState {
    pub u: [f64; 3],
}

impl ClassicalState {
    /// Polar angle from `+OZ`, azimuth from `+OX`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self { u: [st * cp, st * sp, ct] }
    }

    /// Normalises `v` onto the unit sphere.
    pub fn from_vector(v: [f64; 3]) -> Self {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        Self { u: v.map(|x| x / r) }
    }

    pub fn theta(&self) -> f64 {
        self.u[2].clamp(-1.0, 1.0).acos()
    }

    pub fn phi(&self) -> f64 {
        self.u[1].atan2(self.u[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SosPoint {
    pub seed_id: usize,
    /// 1-based index of the kick after which the point was recorded.
    pub kick_index: usize,
    pub u: [f64; 3],
    pub n: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SosPointSet {
    pub points: Vec<SosPoint>,
}

impl SosPointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SosPoint> {
        self.points.iter()
    }

    pub fn for_seed(&self, seed_id: usize) -> impl Iterator<Item = &SosPoint> {
        self.points.iter().filter(move |p| p.seed_id == seed_id)
    }

    /// Occupation counts over `n_z × n_phi` equal-area bins (uniform in `u_z`
    /// and `φ`).
    pub fn bin_counts(&self, n_z: usize, n_phi: usize) -> Vec<usize> {
        let mut counts = vec![0usize; n_z * n_phi];
        for p in &self.points {
            counts[equal_area_bin(&p.u, n_z, n_phi)] += 1;
        }
        counts
    }
}

/// Index of the equal-area bin containing `u`.
pub fn equal_area_bin(u: &[f64; 3], n_z: usize, n_phi: usize) -> usize {
    let iz = (((u[2] + 1.0) / 2.0 * n_z as f64) as usize).min(n_z - 1);
    let phi = u[1].atan2(u[0]).rem_euclid(2.0 * PI);
    let ip = ((phi / (2.0 * PI) * n_phi as f64) as usize).min(n_phi - 1);
    iz * n_phi + ip
}

/// Uniform `n × n` seed grid in `(cos θ, φ)` at cell centres.
pub fn seed_grid(n: usize) -> Vec<(f64, f64)> {
    let mut seeds = Vec::with_capacity(n * n);
    for i in 0..n {
        let cos_theta = -1.0 + (2.0 * i as f64 + 1.0) / n as f64;
        for j in 0..n {
            let phi = 2.0 * PI * (j as f64 + 0.5) / n as f64;
            seeds.push((cos_theta.acos(), phi));
        }
    }
    seeds
}
