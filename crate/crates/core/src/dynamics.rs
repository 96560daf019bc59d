//! Wavepacket dynamics and entanglement generation.
//!
//! The initial state is a product of a core state `|N₀>` and a radially
//! localised electron `F_loc = Σ_n c_n R_nL`, expanded over the eigenstates
//! whose `ν_{N₀}` lies within `±6Δn` of `n₀`. Every eigenstate contributes one
//! entry per channel; entries are addressed by a combined index
//! `a = (channel, state)` with effective quantum number `x_a`, and the radial
//! overlaps `S_ab = r(x_a, x_b)` are tabulated once.
//!
//! Times are measured in units of the Kepler period `T_e = 2π n₀³` of the
//! wavepacket.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::channels::{ChannelSet, ReactionMatrix};
use crate::mqdt::{find_eigenstates, radial_overlap, EnergyWindow, Eigenstate, MqdtError};
use crate::numeric::CompensatedSum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Mqdt(#[from] MqdtError),
    #[error("initial core state N0 = {0} is not one of the channels")]
    UnknownChannel(u32),
    #[error("invalid wavepacket parameters: {0}")]
    BadSpec(String),
    #[error("eigenstate window captures only {captured:.6} of the wavepacket norm (discarded {discarded:.3e} > {limit:.1e})")]
    Truncation { captured: f64, discarded: f64, limit: f64 },
    #[error("no eigenstates in the wavepacket window")]
    NoStates,
}

/// Initial product state `|N₀> ⊗ F_loc(n₀, Δn)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavepacketSpec {
    pub n0_channel: u32,
    /// Central principal quantum number `n₀`.
    pub n0: f64,
    /// Gaussian width `Δn`.
    pub dn: f64,
    /// Smallest Gaussian coefficient kept.
    pub weight_cutoff: f64,
    /// Largest tolerated norm lost to the finite eigenstate window.
    pub max_discarded: f64,
}

impl WavepacketSpec {
    pub fn new(n0_channel: u32, n0: f64, dn: f64) -> Self {
        Self { n0_channel, n0, dn, weight_cutoff: 1e-4, max_discarded: 1e-3 }
    }

    /// Centres the wavepacket on the energy `e_total`: `n₀ = ν_{N₀}(E_total)`.
    pub fn at_energy(set: &ChannelSet, n0_channel: u32, e_total: f64, dn: f64) -> Result<Self, DynamicsError> {
        if set.index_of(n0_channel).is_none() {
            return Err(DynamicsError::UnknownChannel(n0_channel));
        }
        let n0 = set.effective_quantum_number(e_total, n0_channel).map_err(MqdtError::from)?;
        Ok(Self::new(n0_channel, n0, dn))
    }

    fn validate(&self, set: &ChannelSet) -> Result<usize, DynamicsError> {
        let idx = set.index_of(self.n0_channel).ok_or(DynamicsError::UnknownChannel(self.n0_channel))?;
        if !(self.n0 > set.l() as f64 && self.n0.is_finite()) {
            return Err(DynamicsError::BadSpec(format!("n0 = {} must exceed L = {}", self.n0, set.l())));
        }
        if !(self.dn > 0.0 && self.dn.is_finite()) {
            return Err(DynamicsError::BadSpec(format!("dn = {} must be positive", self.dn)));
        }
        if !(self.weight_cutoff > 0.0 && self.weight_cutoff < 1.0) {
            return Err(DynamicsError::BadSpec(format!("weight_cutoff = {} must lie in (0, 1)", self.weight_cutoff)));
        }
        if !(self.max_discarded >= 0.0) {
            return Err(DynamicsError::BadSpec(format!("max_discarded = {} must be >= 0", self.max_discarded)));
        }
        Ok(idx)
    }

    /// Kepler period at `n₀`, the time unit of every series.
    pub fn time_unit(&self) -> f64 {
        2.0 * PI * self.n0.powi(3)
    }

    /// Normalised Gaussian coefficients `(n, c_n)` over integers `n > L`.
    pub fn localized_coefficients(&self, l: u32) -> Vec<(f64, f64)> {
        let reach = 2.0 * self.dn * (1.0 / self.weight_cutoff).ln().sqrt();
        let lo = ((self.n0 - reach).ceil() as i64).max(l as i64 + 1);
        let hi = (self.n0 + reach).floor() as i64;
        let mut out: Vec<(f64, f64)> = (lo..=hi)
            .map(|n| {
                let n = n as f64;
                (n, (-((n - self.n0) / (2.0 * self.dn)).powi(2)).exp())
            })
            .filter(|&(_, c)| c >= self.weight_cutoff)
            .collect();
        let norm = out.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
        out.iter_mut().for_each(|(_, c)| *c /= norm);
        out
    }
}

/// Expansion of the initial state over eigenstates, with the combined-index
/// overlap kernel.
#[derive(Debug, Clone)]
pub struct WavepacketState {
    spec: WavepacketSpec,
    n_list: Vec<u32>,
    states: Vec<Eigenstate>,
    /// `x_a`, channel-major: entry `c * n_states + i`.
    x: Vec<f64>,
    /// `𝓑_N(E_i)` in the same layout.
    amplitudes: Vec<f64>,
    energies: Vec<f64>,
    kernel: Vec<f64>,
    captured: f64,
    time_unit: f64,
}

/// Eigenstate window `ν_{N₀} ∈ [n₀ - 6Δn, n₀ + 6Δn]`, clipped above `L`.
pub fn wavepacket_window(set: &ChannelSet, spec: &WavepacketSpec) -> Result<EnergyWindow, DynamicsError> {
    spec.validate(set)?;
    let half = 6.0 * spec.dn;
    let lo_nu = (spec.n0 - half).max(set.l() as f64 + 0.5);
    let e_min = set.energy_at(spec.n0_channel, lo_nu);
    let e_max = set.energy_at(spec.n0_channel, spec.n0 + half);
    Ok(EnergyWindow::from_energies(set, e_min, e_max)?)
}

/// Expands `spec` over the eigenstates of `(set, rm)`.
pub fn build_wavepacket(set: &ChannelSet, rm: &ReactionMatrix, spec: &WavepacketSpec) -> Result<WavepacketState, DynamicsError> {
    let window = wavepacket_window(set, spec)?;
    let states = find_eigenstates(set, rm, &window)?.states;
    WavepacketState::from_eigenstates(set, spec, states)
}

impl WavepacketState {
    /// Assembles the wavepacket from an explicit list of eigenstates.
    pub fn from_eigenstates(set: &ChannelSet, spec: &WavepacketSpec, states: Vec<Eigenstate>) -> Result<Self, DynamicsError> {
        let i0 = spec.validate(set)?;
        if states.is_empty() {
            return Err(DynamicsError::NoStates);
        }
        let coeffs = spec.localized_coefficients(set.l());
        let projections: Vec<f64> = states
            .iter()
            .map(|s| {
                let b = s.amplitudes();
                let ov: f64 = coeffs.iter().map(|&(n, c)| c * radial_overlap(s.nu[i0], n)).sum();
                b[i0] * ov
            })
            .collect();
        let captured: f64 = projections.iter().map(|p| p * p).sum();
        let discarded = 1.0 - captured;
        if discarded > spec.max_discarded {
            return Err(DynamicsError::Truncation { captured, discarded, limit: spec.max_discarded });
        }
        let scale = captured.sqrt().recip();

        let n_states = states.len();
        let n_channels = set.len();
        let size = n_states * n_channels;
        let mut x = vec![0.0; size];
        let mut amplitudes = vec![0.0; size];
        let mut energies = vec![0.0; size];
        for (i, s) in states.iter().enumerate() {
            let b = s.amplitudes();
            for c in 0..n_channels {
                let a = c * n_states + i;
                x[a] = s.nu[c];
                amplitudes[a] = b[c] * projections[i] * scale;
                energies[a] = s.energy;
            }
        }
        let kernel: Vec<f64> = (0..size * size)
            .into_par_iter()
            .map(|ab| radial_overlap(x[ab / size], x[ab % size]))
            .collect();
        Ok(Self {
            spec: *spec,
            n_list: set.n_list().to_vec(),
            states,
            x,
            amplitudes,
            energies,
            kernel,
            captured,
            time_unit: spec.time_unit(),
        })
    }

    pub fn spec(&self) -> &WavepacketSpec {
        &self.spec
    }

    pub fn n_list(&self) -> &[u32] {
        &self.n_list
    }

    pub fn states(&self) -> &[Eigenstate] {
        &self.states
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_channels(&self) -> usize {
        self.n_list.len()
    }

    /// Norm captured by the eigenstate window before renormalisation.
    pub fn captured_weight(&self) -> f64 {
        self.captured
    }

    /// Length of one time unit in atomic units.
    pub fn time_unit(&self) -> f64 {
        self.time_unit
    }

    /// `𝓑_N(E_i)`.
    pub fn amplitude(&self, channel_index: usize, state_index: usize) -> f64 {
        self.amplitudes[channel_index * self.n_states() + state_index]
    }

    /// Combined-index effective quantum numbers `x_a`.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// `S_ab`, row-major over the combined index.
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// `Σ |𝓑|² E / Σ |𝓑|²`.
    pub fn energy_centroid(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (a, e) in self.amplitudes.iter().zip(&self.energies) {
            num += a * a * e;
            den += a * a;
        }
        num / den
    }

    fn phased(&self, t_au: f64) -> Vec<Complex64> {
        self.amplitudes
            .iter()
            .zip(&self.energies)
            .map(|(&b, &e)| Complex64::from_polar(b, -e * t_au))
            .collect()
    }

    /// Reduced channel matrix `T_NN′(t)` at `t` in units of `T_e`.
    pub fn channel_matrix(&self, t: f64) -> Vec<Vec<Complex64>> {
        let c = self.phased(t * self.time_unit);
        let nc = self.n_channels();
        let ns = self.n_states();
        let size = nc * ns;
        let (re, im): (Vec<f64>, Vec<f64>) = c.iter().map(|z| (z.re, -z.im)).unzip();
        let mut t_mat = vec![vec![Complex64::new(0.0, 0.0); nc]; nc];
        for n in 0..nc {
            for m in n..nc {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in n * ns..(n + 1) * ns {
                    let row = &self.kernel[a * size + m * ns..a * size + (m + 1) * ns];
                    let zr = dot(row, &re[m * ns..(m + 1) * ns]);
                    let zi = dot(row, &im[m * ns..(m + 1) * ns]);
                    acc += c[a] * Complex64::new(zr, zi);
                }
                t_mat[n][m] = acc;
                t_mat[m][n] = acc.conj();
            }
        }
        t_mat
    }

    /// `S₂(t) = 1 - Σ_NN′ |T_NN′(t)|²` and `Tr ρ_e(t)` on a grid of times in
    /// units of `T_e`. Output order follows `times` for any thread count.
    ///
    /// `S₂` is accumulated from the 2x2 minors
    /// `T_NN T_N′N′ - |T_NN′|²` and divided by `(Tr ρ_e)²`; this equals the
    /// definition at unit norm and avoids cancellation against 1.
    pub fn purity_series(&self, times: &[f64]) -> EntropySeries {
        let rows: Vec<(f64, f64, Vec<f64>)> = times
            .par_iter()
            .map(|&t| {
                let m = self.channel_matrix(t);
                let weights: Vec<f64> = (0..m.len()).map(|n| m[n][n].re).collect();
                let mut trace = CompensatedSum::default();
                let mut minors = CompensatedSum::default();
                for n in 0..m.len() {
                    trace.add(weights[n]);
                    for k in n + 1..m.len() {
                        minors.add(2.0 * (weights[n] * weights[k] - m[n][k].norm_sqr()));
                    }
                }
                let norm = trace.value();
                (minors.value() / (norm * norm), norm, weights)
            })
            .collect();
        let mut series = EntropySeries { times: times.to_vec(), ..Default::default() };
        for (s2, norm, w) in rows {
            series.s2.push(s2);
            series.norm.push(norm);
            series.channel_weights.push(w);
        }
        series
    }

    /// `C(t) = Σ_{a,b ∈ N} 𝓑_a 𝓑_b e^{i E_b t_ref - i E_a t} S_ab`, times in
    /// units of `T_e`.
    pub fn channel_correlation(&self, channel: u32, t_ref: f64, times: &[f64]) -> Result<Vec<Complex64>, DynamicsError> {
        let n = self.n_list.iter().position(|&x| x == channel).ok_or(DynamicsError::UnknownChannel(channel))?;
        let ns = self.n_states();
        let size = ns * self.n_channels();
        let block = n * ns..(n + 1) * ns;
        let tr = t_ref * self.time_unit;
        let reference: Vec<Complex64> =
            block.clone().map(|b| Complex64::from_polar(self.amplitudes[b], self.energies[b] * tr)).collect();
        let w: Vec<Complex64> = block
            .clone()
            .map(|a| {
                let row = &self.kernel[a * size + n * ns..a * size + (n + 1) * ns];
                row.iter().zip(&reference).map(|(s, r)| r * s).sum()
            })
            .collect();
        Ok(times
            .par_iter()
            .map(|&t| {
                let ta = t * self.time_unit;
                block
                    .clone()
                    .zip(&w)
                    .map(|(a, wa)| Complex64::from_polar(self.amplitudes[a], -self.energies[a] * ta) * wa)
                    .sum()
            })
            .collect())
    }
}

/// Four-way unrolled dot product with a fixed summation order.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        for j in 0..4 {
            acc[j] += a[4 * k + j] * b[4 * k + j];
        }
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Linear entropy time series.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntropySeries {
    /// Times in units of `T_e`.
    pub times: Vec<f64>,
    pub s2: Vec<f64>,
    /// `Tr ρ_e(t)`.
    pub norm: Vec<f64>,
    /// `T_NN(t)` per channel.
    pub channel_weights: Vec<Vec<f64>>,
}

impl EntropySeries {
    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.times.iter().position(|&x| (x - t).abs() < 1e-9).map(|i| self.s2[i])
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Mean of `S₂` over samples with `t` in `[t0, t1]`.
    pub fn time_average(&self, t0: f64, t1: f64) -> Option<f64> {
        let vals: Vec<f64> = self
            .times
            .iter()
            .zip(&self.s2)
            .filter(|(t, _)| **t >= t0 - 1e-9 && **t <= t1 + 1e-9)
            .map(|(_, s)| *s)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// `n` equally spaced times `0, dt, 2dt, ...` in units of `T_e`.
pub fn time_grid(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt).round() as usize;
    (0..n).map(|i| i as f64 * dt).collect()
}

/// Electronic and core revival times `(2πν⁴/3, π/B_r)` in atomic units.
pub fn revival_times(nu: f64, b_rot: f64) -> (f64, f64) {
    (2.0 * PI * nu.powi(4) / 3.0, PI / b_rot)
}

/// Centred rolling population standard deviation over `width` samples.
pub fn rolling_std(values: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (lo + width).min(values.len());
            crate::numeric::mean_and_rms(&values[lo..hi]).1
        })
        .collect()
}

/// Times of the two strongest oscillation bursts of a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevivalEstimate {
    pub first: f64,
    pub second: f64,
}

impl RevivalEstimate {
    pub fn period(&self) -> f64 {
        self.second - self.first
    }
}

/// Locates oscillation bursts from the envelope of `values`: the rolling
/// standard deviation over one `T_e`. The first burst is the envelope maximum
/// in `first_range`; the second is the maximum at least `min_gap` later.
pub fn estimate_revival(
    times: &[f64],
    values: &[f64],
    first_range: (f64, f64),
    min_gap: f64,
) -> Option<RevivalEstimate> {
    if times.len() < 2 {
        return None;
    }
    let dt = times[1] - times[0];
    let width = ((1.0 / dt).round() as usize).max(2);
    let env = rolling_std(values, width);
    let argmax = |lo: f64, hi: f64| {
        times
            .iter()
            .zip(&env)
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(t, _)| *t)
    };
    let first = argmax(first_range.0, first_range.1)?;
    let second = argmax(first + min_gap, f64::INFINITY)?;
    Some(RevivalEstimate { first, second })
}
