//! Bound states of the coupled channels.
//!
//! With every channel closed the quantization condition is
//! `det M(E) = 0`, `M = diag(sin β) + diag(cos β) K`, `β_N = π(ν_N - L)`.
//! Roots are bracketed on a fine energy grid. Each grid cell is checked
//! against an exact level count obtained from the inertia of
//! `T(E) = diag(tan πν) + K`, so that near-degenerate pairs are split rather
//! than lost, and then bisected down to floating-point resolution.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use thiserror::Error;

use crate::channels::{ChannelError, ChannelSet, ReactionMatrix};
use crate::numeric::{cos_pi, mean_and_rms, sin_pi, CompensatedSum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MqdtError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("energy window [{e_min:e}, {e_max:e}] reaches the lowest threshold {threshold:e}")]
    WindowNotBound { e_min: f64, e_max: f64, threshold: f64 },
    #[error("invalid energy window: nu range [{nu_min}, {nu_max}]")]
    BadWindow { nu_min: f64, nu_max: f64 },
    #[error("no eigenstates in the window")]
    EmptyWindow,
    #[error("reaction matrix has dimension {k} but the channel set has {channels} channels")]
    DimensionMismatch { k: usize, channels: usize },
}

/// Energy window labelled by `ν` in the `N = J` channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyWindow {
    pub nu_min: f64,
    pub nu_max: f64,
    pub e_min: f64,
    pub e_max: f64,
}

impl EnergyWindow {
    pub fn from_nu(set: &ChannelSet, nu_min: f64, nu_max: f64) -> Result<Self, MqdtError> {
        if !(nu_min > 0.0 && nu_max > nu_min && nu_max.is_finite()) {
            return Err(MqdtError::BadWindow { nu_min, nu_max });
        }
        let e_min = label_energy(set, nu_min);
        let e_max = label_energy(set, nu_max);
        let threshold = set.lowest_threshold();
        if e_max >= threshold {
            return Err(MqdtError::WindowNotBound { e_min, e_max, threshold });
        }
        Ok(Self { nu_min, nu_max, e_min, e_max })
    }

    /// Window given directly in energy; the `ν` labels are derived.
    pub fn from_energies(set: &ChannelSet, e_min: f64, e_max: f64) -> Result<Self, MqdtError> {
        let threshold = set.lowest_threshold();
        if !(e_max > e_min) || !e_min.is_finite() {
            return Err(MqdtError::BadWindow { nu_min: f64::NAN, nu_max: f64::NAN });
        }
        if e_max >= threshold {
            return Err(MqdtError::WindowNotBound { e_min, e_max, threshold });
        }
        Ok(Self { nu_min: label_nu(set, e_min), nu_max: label_nu(set, e_max), e_min, e_max })
    }

    /// Window of half-width `half_width` in `ν` around `centre`.
    pub fn centred(set: &ChannelSet, centre: f64, half_width: f64) -> Result<Self, MqdtError> {
        Self::from_nu(set, centre - half_width, centre + half_width)
    }

    pub fn contains(&self, energy: f64) -> bool {
        energy > self.e_min && energy <= self.e_max
    }
}

/// Energy at which the `N = J` channel has effective quantum number `nu`.
pub fn label_energy(set: &ChannelSet, nu: f64) -> f64 {
    set.rotational_energy(set.j()) - 0.5 / (nu * nu)
}

/// Effective quantum number in the `N = J` channel, defined whether or not
/// that channel belongs to the set.
pub fn label_nu(set: &ChannelSet, energy: f64) -> f64 {
    (2.0 * (set.rotational_energy(set.j()) - energy)).sqrt().recip()
}

fn check_dims(set: &ChannelSet, rm: &ReactionMatrix) -> Result<(), MqdtError> {
    if rm.dim() != set.len() {
        return Err(MqdtError::DimensionMismatch { k: rm.dim(), channels: set.len() });
    }
    Ok(())
}

/// `M(E)` together with the `ν` and `β` it was built from.
fn quantization_matrix(set: &ChannelSet, k: &DMatrix<f64>, energy: f64) -> Result<(DMatrix<f64>, Vec<f64>), MqdtError> {
    let nu = set.channel_nus(energy)?;
    let l = set.l() as f64;
    let m = DMatrix::from_fn(nu.len(), nu.len(), |r, c| {
        let x = nu[r] - l;
        let diag = if r == c { sin_pi(x) } else { 0.0 };
        diag + cos_pi(x) * k[(r, c)]
    });
    Ok((m, nu))
}

/// `det M(E)`; smooth and pole-free below the lowest threshold.
pub fn boundary_determinant(set: &ChannelSet, rm: &ReactionMatrix, energy: f64) -> Result<f64, MqdtError> {
    check_dims(set, rm)?;
    let (m, _) = quantization_matrix(set, rm.k(), energy)?;
    Ok(m.lu().determinant())
}

/// Number of bound levels at or below `energy`, up to a constant offset.
///
/// Each eigenvalue of `T(E) = diag(tan πν) + K` increases with `E`; it
/// crosses zero upwards at every level and wraps from `+∞` to `-∞` at every
/// pole of `tan πν_N`. Subtracting the negative eigenvalues from the pole
/// count therefore gives a staircase that steps by one at each level.
pub fn level_staircase(set: &ChannelSet, rm: &ReactionMatrix, energy: f64) -> Result<i64, MqdtError> {
    check_dims(set, rm)?;
    let nu = set.channel_nus(energy)?;
    staircase_from_nu(rm.k(), &nu)
}

fn staircase_from_nu(k: &DMatrix<f64>, nu: &[f64]) -> Result<i64, MqdtError> {
    let t = DMatrix::from_fn(nu.len(), nu.len(), |r, c| {
        let diag = if r == c { sin_pi(nu[r]) / cos_pi(nu[r]) } else { 0.0 };
        diag + k[(r, c)]
    });
    let negative = SymmetricEigen::new(t).eigenvalues.iter().filter(|&&x| x < 0.0).count() as i64;
    let poles: i64 = nu.iter().map(|&v| (v + 0.5).floor() as i64).sum();
    Ok(poles - negative)
}

/// `ν³` level density summed over channels.
pub fn level_density(set: &ChannelSet, energy: f64) -> Result<f64, MqdtError> {
    Ok(set.channel_nus(energy)?.iter().map(|v| v.powi(3)).sum())
}

/// Sum over channels of the `ν_N` range swept by the window.
pub fn weyl_count(set: &ChannelSet, window: &EnergyWindow) -> Result<f64, MqdtError> {
    let lo = set.channel_nus(window.e_min)?;
    let hi = set.channel_nus(window.e_max)?;
    Ok(hi.iter().zip(&lo).map(|(h, l)| h - l).sum())
}

/// Overlap of unit-normalised radial functions at effective quantum numbers
/// `nu` and `nu_prime`:
/// `sin(π(ν-ν′)) / (π(ν-ν′)) · 2 sqrt(νν′) / (ν+ν′)`.
///
/// The second factor converts the energy-normalised Wronskian overlap into
/// unit normalisation; it is 1 at `ν = ν′` and `1 - O((ν-ν′)²/ν²)` nearby.
/// With it, eigenstates of the coupled problem are exactly orthogonal.
pub fn radial_overlap(nu: f64, nu_prime: f64) -> f64 {
    let d = nu - nu_prime;
    let sinc = if d == 0.0 { 1.0 } else { sin_pi(d) / (std::f64::consts::PI * d) };
    sinc * 2.0 * (nu * nu_prime).sqrt() / (nu + nu_prime)
}

/// A bound eigenstate.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenstate {
    pub energy: f64,
    pub n_list: Vec<u32>,
    pub nu: Vec<f64>,
    pub beta: Vec<f64>,
    /// Channel coefficients normalised so that `Σ ν³ B² = 1`.
    pub b: Vec<f64>,
    pub populations: Vec<f64>,
    pub s2: f64,
    pub label_nu: f64,
    /// `‖M(E) A‖ / ‖A‖` for the null vector `A`.
    pub residual: f64,
}

impl Eigenstate {
    /// Signed amplitudes `sign(B_N) sqrt(p_N)`.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.b.iter().zip(&self.populations).map(|(b, p)| b.signum() * p.sqrt()).collect()
    }

    /// `1 - Σ p²`, the entropy the state would have with orthogonal radial
    /// functions.
    pub fn participation_bound(&self) -> f64 {
        1.0 - self.populations.iter().map(|p| p * p).sum::<f64>()
    }

    pub fn population_of(&self, n: u32) -> Option<f64> {
        self.n_list.iter().position(|&x| x == n).map(|i| self.populations[i])
    }
}

/// `S₂ = 1 - Σ p_N p_N′ r(ν_N, ν_N′)²` from populations and `ν`.
///
/// Evaluated as `2 Σ_{N<N′} p_N p_N′ (1 - r²) / (Σ p)²`, a sum of
/// non-negative terms, so a pure channel gives exactly zero.
pub fn linear_entropy(populations: &[f64], nu: &[f64]) -> f64 {
    let total: f64 = populations.iter().sum();
    let mut mixed = CompensatedSum::default();
    for (i, (&pi, &vi)) in populations.iter().zip(nu).enumerate() {
        for (&pj, &vj) in populations[i + 1..].iter().zip(&nu[i + 1..]) {
            let r = radial_overlap(vi, vj);
            mixed.add(2.0 * pi * pj * (1.0 - r * r));
        }
    }
    mixed.value() / (total * total)
}

pub fn eigenstate_entropy(state: &Eigenstate) -> f64 {
    linear_entropy(&state.populations, &state.nu)
}

/// Builds the eigenstate at a root of the quantization determinant.
pub fn eigenstate_at(set: &ChannelSet, rm: &ReactionMatrix, energy: f64) -> Result<Eigenstate, MqdtError> {
    check_dims(set, rm)?;
    let (m, nu) = quantization_matrix(set, rm.k(), energy)?;
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let imin = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty");
    let a: DVector<f64> = v_t.row(imin).transpose();
    let residual = (&m * &a).norm() / a.norm();
    let ka = rm.k() * &a;

    let l = set.l() as f64;
    let beta: Vec<f64> = nu.iter().map(|v| std::f64::consts::PI * (v - l)).collect();
    // A_N / cos β_N, or the equivalent -(K A)_N / sin β_N where cos β_N is small
    let mut b: Vec<f64> = nu
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (s, c) = (sin_pi(v - l), cos_pi(v - l));
            if c.abs() >= s.abs() {
                a[i] / c
            } else {
                -ka[i] / s
            }
        })
        .collect();
    let weights: Vec<f64> = b.iter().zip(&nu).map(|(b, v)| v.powi(3) * b * b).collect();
    let total: f64 = weights.iter().sum();
    let imax = weights.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).map(|(i, _)| i).unwrap();
    let scale = b[imax].signum() / total.sqrt();
    b.iter_mut().for_each(|x| *x *= scale);
    let populations: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let s2 = linear_entropy(&populations, &nu);
    Ok(Eigenstate {
        energy,
        n_list: set.n_list().to_vec(),
        nu,
        beta,
        b,
        populations,
        s2,
        label_nu: label_nu(set, energy),
        residual,
    })
}

/// Result of an eigenvalue search.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSearch {
    pub window: EnergyWindow,
    pub states: Vec<Eigenstate>,
    pub warnings: Vec<String>,
    /// Number of grid points used by the scan.
    pub grid_points: usize,
}

impl EigenSearch {
    pub fn energies(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.energy).collect()
    }
}

/// Grid step as a fraction of the local mean level spacing `1/ρ(E)`.
pub const SCAN_STEP_FRACTION: f64 = 0.02;

#[derive(Debug, Clone, Copy)]
struct Probe {
    energy: f64,
    det: f64,
    count: i64,
}

fn probe(set: &ChannelSet, rm: &ReactionMatrix, energy: f64) -> Result<Probe, MqdtError> {
    let (m, nu) = quantization_matrix(set, rm.k(), energy)?;
    Ok(Probe { energy, det: m.lu().determinant(), count: staircase_from_nu(rm.k(), &nu)? })
}

/// Brackets and refines every level in the window, then builds the
/// eigenstates. States come out sorted by energy.
pub fn find_eigenstates(set: &ChannelSet, rm: &ReactionMatrix, window: &EnergyWindow) -> Result<EigenSearch, MqdtError> {
    check_dims(set, rm)?;
    let threshold = set.lowest_threshold();
    if window.e_max >= threshold {
        return Err(MqdtError::WindowNotBound { e_min: window.e_min, e_max: window.e_max, threshold });
    }

    let mut grid = vec![window.e_min];
    let mut e = window.e_min;
    while e < window.e_max {
        e = (e + SCAN_STEP_FRACTION / level_density(set, e)?).min(window.e_max);
        grid.push(e);
    }
    let probes: Vec<Probe> = grid.par_iter().map(|&e| probe(set, rm, e)).collect::<Result<_, _>>()?;

    let cells: Vec<(Vec<f64>, Vec<String>)> = probes
        .par_windows(2)
        .map(|w| {
            let mut roots = Vec::new();
            let mut warnings = Vec::new();
            let n = w[1].count - w[0].count;
            if n >= 2 {
                warnings.push(format!(
                    "{n} levels within one grid step near E = {:.16e}; split by level counting",
                    w[0].energy
                ));
            }
            resolve_cell(set, rm, w[0], w[1], 0, &mut roots, &mut warnings)?;
            Ok((roots, warnings))
        })
        .collect::<Result<_, MqdtError>>()?;

    let mut roots = Vec::new();
    let mut warnings = Vec::new();
    for (r, w) in cells {
        roots.extend(r);
        warnings.extend(w);
    }
    roots.sort_by(f64::total_cmp);
    let states: Vec<Eigenstate> = roots.par_iter().map(|&e| eigenstate_at(set, rm, e)).collect::<Result<_, _>>()?;
    Ok(EigenSearch { window: *window, states, warnings, grid_points: grid.len() })
}

const MAX_SPLIT_DEPTH: usize = 80;

fn resolve_cell(
    set: &ChannelSet,
    rm: &ReactionMatrix,
    lo: Probe,
    hi: Probe,
    depth: usize,
    roots: &mut Vec<f64>,
    warnings: &mut Vec<String>,
) -> Result<(), MqdtError> {
    let n = hi.count - lo.count;
    if n <= 0 {
        if n < 0 {
            warnings.push(format!("level count decreased near E = {:.16e}", lo.energy));
        }
        return Ok(());
    }
    if n == 1 && lo.det * hi.det < 0.0 {
        roots.push(bisect(set, rm, lo, hi)?);
        return Ok(());
    }
    let mid = 0.5 * (lo.energy + hi.energy);
    if mid <= lo.energy || mid >= hi.energy || depth >= MAX_SPLIT_DEPTH {
        warnings.push(format!(
            "could not separate {n} level(s) near E = {:.16e}; kept one root",
            lo.energy
        ));
        roots.push(mid);
        return Ok(());
    }
    let m = probe(set, rm, mid)?;
    resolve_cell(set, rm, lo, m, depth + 1, roots, warnings)?;
    resolve_cell(set, rm, m, hi, depth + 1, roots, warnings)
}

/// Bisection on the sign of `det M` until the bracket cannot shrink further.
fn bisect(set: &ChannelSet, rm: &ReactionMatrix, mut lo: Probe, mut hi: Probe) -> Result<f64, MqdtError> {
    loop {
        let mid = 0.5 * (lo.energy + hi.energy);
        if mid <= lo.energy || mid >= hi.energy {
            break;
        }
        let d = boundary_determinant(set, rm, mid)?;
        if d == 0.0 {
            return Ok(mid);
        }
        let p = Probe { energy: mid, det: d, count: 0 };
        if (d < 0.0) == (lo.det < 0.0) {
            lo = p;
        } else {
            hi = p;
        }
    }
    Ok(if lo.det.abs() <= hi.det.abs() { lo.energy } else { hi.energy })
}

/// Mean and population rms of `S₂` over a set of eigenstates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyStatistics {
    pub count: usize,
    pub mean_s2: f64,
    pub rms_s2: f64,
    pub window: (f64, f64),
}

pub fn entropy_statistics(states: &[Eigenstate], window: &EnergyWindow) -> Result<EntropyStatistics, MqdtError> {
    if states.is_empty() {
        return Err(MqdtError::EmptyWindow);
    }
    let s2: Vec<f64> = states.iter().map(|s| s.s2).collect();
    let (mean_s2, rms_s2) = mean_and_rms(&s2);
    Ok(EntropyStatistics { count: states.len(), mean_s2, rms_s2, window: (window.e_min, window.e_max) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::Parity;
    use std::collections::HashMap;
    use std::f64::consts::PI;

    fn setup(k: f64) -> (ChannelSet, ReactionMatrix) {
        let b = 2.0 / (2.0 * 315.5f64.powi(3) * 101.0);
        let set = ChannelSet::new(50, 10, Parity::Plus, b, 0.4, k).unwrap();
        let rm = set.reaction_matrix().unwrap();
        (set, rm)
    }

    /// Laplace expansion along the first row, memoised on the set of
    /// remaining columns.
    fn cofactor_det(m: &DMatrix<f64>) -> f64 {
        fn go(m: &DMatrix<f64>, row: usize, cols: u32, memo: &mut HashMap<u32, f64>) -> f64 {
            if row == m.nrows() {
                return 1.0;
            }
            if let Some(&v) = memo.get(&cols) {
                return v;
            }
            let mut acc = 0.0;
            let mut sign = 1.0;
            for c in 0..m.ncols() {
                if cols & (1 << c) == 0 {
                    continue;
                }
                let x = m[(row, c)];
                if x != 0.0 {
                    acc += sign * x * go(m, row + 1, cols & !(1 << c), memo);
                }
                sign = -sign;
            }
            memo.insert(cols, acc);
            acc
        }
        go(m, 0, (1u32 << m.ncols()) - 1, &mut HashMap::new())
    }

    #[test]
    fn determinant_matches_cofactor_oracle() {
        let (set, rm) = setup(1.0);
        for nu in [315.13, 315.77, 316.02, 318.4] {
            let e = label_energy(&set, nu);
            let (m, _) = quantization_matrix(&set, rm.k(), e).unwrap();
            let lu = boundary_determinant(&set, &rm, e).unwrap();
            let oracle = cofactor_det(&m);
            assert!((lu - oracle).abs() <= 1e-10 * oracle.abs(), "{lu} vs {oracle}");
        }
    }

    #[test]
    fn open_window_rejected() {
        let (set, rm) = setup(1.0);
        assert!(matches!(
            boundary_determinant(&set, &rm, set.lowest_threshold() + 1e-12),
            Err(MqdtError::Channel(ChannelError::OpenChannel { .. }))
        ));
        assert!(matches!(EnergyWindow::from_nu(&set, 300.0, 1e6), Err(MqdtError::WindowNotBound { .. })));
        assert!(matches!(EnergyWindow::from_nu(&set, 316.0, 315.0), Err(MqdtError::BadWindow { .. })));
    }

    #[test]
    fn uncoupled_determinant_zeros_and_sign_changes() {
        let (set, rm) = setup(0.0);
        let n = 40;
        let nu0 = 325.0 - 0.4;
        let e0 = set.energy_at(n, nu0);
        let h = 1e-13;
        let d_lo = boundary_determinant(&set, &rm, e0 - h).unwrap();
        let d_hi = boundary_determinant(&set, &rm, e0 + h).unwrap();
        assert!(d_lo * d_hi < 0.0);
        let far = boundary_determinant(&set, &rm, set.energy_at(n, nu0 + 0.3)).unwrap();
        assert!(d_lo.abs() < 1e-3 * far.abs());
    }

    #[test]
    fn staircase_counts_uncoupled_levels() {
        let (set, rm) = setup(0.0);
        let w = EnergyWindow::from_nu(&set, 315.0, 317.0).unwrap();
        let diff = level_staircase(&set, &rm, w.e_max).unwrap() - level_staircase(&set, &rm, w.e_min).unwrap();
        let analytic: i64 = set
            .n_list()
            .iter()
            .map(|&n| {
                let lo = set.effective_quantum_number(w.e_min, n).unwrap() + 0.4;
                let hi = set.effective_quantum_number(w.e_max, n).unwrap() + 0.4;
                (hi.floor() - lo.floor()) as i64
            })
            .sum();
        assert_eq!(diff, analytic);
    }

    #[test]
    fn uncoupled_spectrum_is_rydberg_ritz() {
        let (set, rm) = setup(0.0);
        let w = EnergyWindow::from_nu(&set, 315.0, 317.0).unwrap();
        let found = find_eigenstates(&set, &rm, &w).unwrap();
        let mut expected = Vec::new();
        for &n in set.n_list() {
            let lo = set.effective_quantum_number(w.e_min, n).unwrap();
            let hi = set.effective_quantum_number(w.e_max, n).unwrap();
            let mut m = (lo + 0.4).ceil();
            while m - 0.4 <= hi {
                if m - 0.4 > lo {
                    expected.push(set.energy_at(n, m - 0.4));
                }
                m += 1.0;
            }
        }
        expected.sort_by(f64::total_cmp);
        assert_eq!(found.states.len(), expected.len());
        for (s, e) in found.states.iter().zip(&expected) {
            let best = s
                .nu
                .iter()
                .map(|v| (v - ((v + 0.4).round() - 0.4)).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 1e-9, "{best}");
            assert!((s.energy - e).abs() * level_density(&set, *e).unwrap() < 1e-9);
            assert!(s.s2.abs() < 1e-12);
            assert!(s.populations.iter().any(|&p| (p - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn coupled_states_satisfy_invariants() {
        let (set, rm) = setup(1.0);
        let w = EnergyWindow::from_nu(&set, 315.0, 317.0).unwrap();
        let found = find_eigenstates(&set, &rm, &w).unwrap();
        let weyl = weyl_count(&set, &w).unwrap();
        assert!((found.states.len() as f64 - weyl).abs() <= 2.0, "{} vs {weyl}", found.states.len());
        for s in &found.states {
            assert!(s.residual <= 1e-8, "{}", s.residual);
            let total: f64 = s.populations.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(s.populations.iter().all(|&p| p >= 0.0));
            assert!(s.s2 >= -1e-15 && s.s2 <= 10.0 / 11.0 + 1e-9);
            assert!(s.s2 <= s.participation_bound() + 1e-12);
            assert!(w.contains(s.energy));
        }
        for pair in found.states.windows(2) {
            assert!(pair[1].energy > pair[0].energy);
        }
    }

    #[test]
    fn coefficients_agree_between_branches() {
        let (set, rm) = setup(1.0);
        let w = EnergyWindow::from_nu(&set, 315.0, 315.6).unwrap();
        for s in find_eigenstates(&set, &rm, &w).unwrap().states {
            let (m, _) = quantization_matrix(&set, rm.k(), s.energy).unwrap();
            let svd = m.svd(false, true);
            let imin = svd.singular_values.imin();
            let a: DVector<f64> = svd.v_t.unwrap().row(imin).transpose();
            let ka = rm.k() * &a;
            let l = 10.0;
            for i in 0..a.len() {
                let (sn, cs) = (sin_pi(s.nu[i] - l), cos_pi(s.nu[i] - l));
                if sn.abs() > 0.1 && cs.abs() > 0.1 {
                    let r = (a[i] / cs) / (-ka[i] / sn);
                    assert!((r - 1.0).abs() < 1e-6, "{r}");
                }
            }
        }
    }

    #[test]
    fn eigenstates_are_orthogonal() {
        let (set, rm) = setup(1.0);
        let w = EnergyWindow::from_nu(&set, 315.0, 316.0).unwrap();
        let states = find_eigenstates(&set, &rm, &w).unwrap().states;
        let amps: Vec<Vec<f64>> = states.iter().map(|s| s.amplitudes()).collect();
        for i in 0..states.len() {
            for j in 0..states.len() {
                let ov: f64 = (0..set.len())
                    .map(|c| amps[i][c] * amps[j][c] * radial_overlap(states[i].nu[c], states[j].nu[c]))
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ov - expect).abs() < 1e-9, "{i} {j}: {ov}");
            }
        }
    }

    #[test]
    fn overlap_values() {
        assert_eq!(radial_overlap(315.0, 315.0), 1.0);
        assert_eq!(radial_overlap(318.2, 315.2), 0.0);
        assert!((radial_overlap(315.5, 315.0) - 2.0 / PI).abs() < 1e-6);
        assert!((radial_overlap(3.2, 3.2) - 1.0).abs() < 1e-15);
        assert!((radial_overlap(1.0, 2.0) - radial_overlap(2.0, 1.0)).abs() < 1e-16);
    }

    #[test]
    fn overlap_gram_is_positive_semidefinite() {
        let nus: Vec<f64> = (0..40).map(|i| 314.0 + 0.137 * i as f64 + 0.01 * (i % 3) as f64).collect();
        let g = DMatrix::from_fn(nus.len(), nus.len(), |i, j| radial_overlap(nus[i], nus[j]));
        let min = SymmetricEigen::new(g).eigenvalues.min();
        assert!(min >= -1e-10, "{min}");
    }

    #[test]
    fn entropy_limits() {
        let nu: Vec<f64> = (0..11).map(|i| 315.0 + i as f64).collect();
        let mut pure = vec![0.0; 11];
        pure[3] = 1.0;
        assert_eq!(linear_entropy(&pure, &nu), 0.0);
        let uniform = vec![1.0 / 11.0; 11];
        assert!((linear_entropy(&uniform, &nu) - 10.0 / 11.0).abs() < 1e-14);
        let p = [0.5, 0.3, 0.2];
        let close = [315.0, 315.1, 315.3];
        let s2 = linear_entropy(&p, &close);
        assert!((0.0..=1.0 - (0.25 + 0.09 + 0.04) + 1e-12).contains(&s2));
    }

    #[test]
    fn statistics() {
        let (set, rm) = setup(0.0);
        let w = EnergyWindow::from_nu(&set, 315.0, 316.0).unwrap();
        let found = find_eigenstates(&set, &rm, &w).unwrap();
        let stats = entropy_statistics(&found.states, &w).unwrap();
        assert_eq!(stats.count, found.states.len());
        assert!(stats.mean_s2.abs() < 1e-12 && stats.rms_s2.abs() < 1e-12);
        assert_eq!(entropy_statistics(&[], &w), Err(MqdtError::EmptyWindow));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let (set, rm) = setup(1.0);
        let w = EnergyWindow::from_nu(&set, 315.0, 315.8).unwrap();
        let a = find_eigenstates(&set, &rm, &w).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| find_eigenstates(&set, &rm, &w).unwrap());
        assert_eq!(a, b);
    }
}
