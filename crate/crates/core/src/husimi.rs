//! Husimi projection of eigenstates onto the sphere of `L` directions.
//!
//! Channel coefficients are carried to the molecular frame with the frame
//! transformation, spread over the full `Λ = -L..=L` basis according to the
//! Kronig parity, and projected on spin coherent states `|θ, φ>`. The sphere
//! uses the frame of the classical map: `OZ` along the molecular axis and
//! `+OX` along `N`, so that the lowest channel `N = J - L` sits at `+OX`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::angular::spin_coherent_amplitudes;
use crate::channels::Parity;

/// `a_Λ = Σ_N U_NΛ b_N` over the parity-adapted projections of `U`.
pub fn molecular_frame_amplitudes(b: &[f64], u: &DMatrix<f64>) -> Vec<f64> {
    assert_eq!(b.len(), u.nrows(), "coefficient count must match the channel count");
    (0..u.ncols()).map(|c| (0..u.nrows()).map(|r| u[(r, c)] * b[r]).sum()).collect()
}

/// Inverse of [`molecular_frame_amplitudes`]: `b_N = Σ_Λ U_NΛ a_Λ`.
pub fn channel_amplitudes(a: &[f64], u: &DMatrix<f64>) -> Vec<f64> {
    assert_eq!(a.len(), u.ncols());
    (0..u.nrows()).map(|r| (0..u.ncols()).map(|c| u[(r, c)] * a[c]).sum()).collect()
}

/// Spreads parity-adapted amplitudes over `Λ = -L..=L` (entry `Λ + L`).
///
/// For `Λ > 0` the pair `|±Λ>` enters as `(-1)^Λ (|Λ> ± |-Λ>)/√2`, with the
/// upper sign for `Plus`; the phase `(-1)^Λ` orients the lowest channel along
/// `+OX`.
pub fn full_lambda_amplitudes(a: &[f64], parity: Parity, l: u32) -> Vec<Complex64> {
    let li = l as usize;
    let mut full = vec![Complex64::new(0.0, 0.0); 2 * li + 1];
    let first = match parity {
        Parity::Plus => 0,
        Parity::Minus => 1,
    };
    assert_eq!(a.len(), li + 1 - first, "amplitude count does not match L and parity");
    for (offset, &value) in a.iter().enumerate() {
        let lambda = offset + first;
        if lambda == 0 {
            full[li] = Complex64::new(value, 0.0);
            continue;
        }
        let phase = if lambda % 2 == 0 { 1.0 } else { -1.0 };
        let half = phase * value / 2f64.sqrt();
        full[li + lambda] = Complex64::new(half, 0.0);
        full[li - lambda] = Complex64::new(
            match parity {
                Parity::Plus => half,
                Parity::Minus => -half,
            },
            0.0,
        );
    }
    full
}

/// `h(θ, φ) = |Σ_Λ ã_Λ conj(amplitude_Λ(θ, φ))|²`.
pub fn husimi_density(full: &[Complex64], l: u32, theta: f64, phi: f64) -> f64 {
    let amps = spin_coherent_amplitudes(l, theta, phi);
    full.iter().zip(&amps.amplitudes).map(|(a, c)| a * c.conj()).sum::<Complex64>().norm_sqr()
}

/// Husimi density on a regular `(θ, φ)` grid.
///
/// `θ_i = iπ/(n_θ-1)` includes both poles; `φ_j = 2πj/n_φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    pub l: u32,
    pub n_theta: usize,
    pub n_phi: usize,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Row-major over `θ`.
    pub h: Vec<f64>,
}

impl HusimiGrid {
    pub fn compute(full: &[Complex64], l: u32, n_theta: usize, n_phi: usize) -> Self {
        assert!(n_theta >= 2 && n_phi >= 1, "grid too small");
        assert_eq!(full.len(), 2 * l as usize + 1);
        let theta: Vec<f64> = (0..n_theta).map(|i| i as f64 * PI / (n_theta - 1) as f64).collect();
        let phi: Vec<f64> = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        let h = theta
            .par_iter()
            .flat_map_iter(|&t| {
                // moduli depend on θ only; φ enters as e^{iΛφ}
                let moduli: Vec<f64> = spin_coherent_amplitudes(l, t, 0.0).amplitudes.iter().map(|z| z.re).collect();
                let terms: Vec<Complex64> = full.iter().zip(&moduli).map(|(a, m)| a * m).collect();
                phi.iter()
                    .map(move |&p| {
                        terms
                            .iter()
                            .enumerate()
                            .map(|(i, z)| z * Complex64::from_polar(1.0, (i as f64 - l as f64) * p))
                            .sum::<Complex64>()
                            .norm_sqr()
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        Self { l, n_theta, n_phi, theta, phi, h }
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.h[i * self.n_phi + j]
    }

    /// Quadrature weight of node `(i, ·)` for the `sin θ dθ dφ` measure.
    pub fn weight(&self, i: usize) -> f64 {
        let dt = PI / (self.n_theta - 1) as f64;
        let trap = if i == 0 || i == self.n_theta - 1 { 0.5 } else { 1.0 };
        trap * dt * self.theta[i].sin() * 2.0 * PI / self.n_phi as f64
    }

    /// `(2L+1)/(4π) Σ h w`, equal to 1 for a normalised state.
    pub fn normalization(&self) -> f64 {
        (2 * self.l + 1) as f64 / (4.0 * PI) * self.weighted_sum(|_| 1.0)
    }

    fn weighted_sum(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n_theta {
            let w = self.weight(i);
            let (st, ct) = self.theta[i].sin_cos();
            for j in 0..self.n_phi {
                let (sp, cp) = self.phi[j].sin_cos();
                acc += w * self.value(i, j) * f([st * cp, st * sp, ct]);
            }
        }
        acc
    }

    /// Husimi-weighted mean of `f(u)`.
    pub fn expectation(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        self.weighted_sum(&f) / self.weighted_sum(|_| 1.0)
    }

    pub fn mean_direction(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| self.expectation(|u| u[k]))
    }

    /// Node with the largest density, as `(θ, φ, h)`.
    pub fn maximum(&self) -> (f64, f64, f64) {
        let (idx, &h) = self.h.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty grid");
        (self.theta[idx / self.n_phi], self.phi[idx % self.n_phi], h)
    }
}

/// Core angular momentum as a function of the direction of `L`, evaluated
/// in the frame where `J` is perpendicular to the molecular axis and with
/// the coherent-state symbol `L + 1` for the length of `L`:
/// `N = sqrt((sqrt(J² - (L' u_z)²) - L' u_x)² + (L' u_y)²)`, `L' = L + 1`.
///
/// Its Husimi average over a pure channel state `|N>` reproduces `N`.
pub fn core_momentum_symbol(j: f64, l: f64, u: [f64; 3]) -> f64 {
    let le = l + 1.0;
    let jp = (j * j - (le * u[2]).powi(2)).max(0.0).sqrt();
    ((jp - le * u[0]).powi(2) + (le * u[1]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::ChannelSet;

    fn frame(parity: Parity) -> (ChannelSet, DMatrix<f64>) {
        let set = ChannelSet::new(50, 10, parity, 3e-10, 0.4, 1.0).unwrap();
        let u = set.frame_transformation();
        (set, u)
    }

    #[test]
    fn frame_round_trip() {
        let (_, u) = frame(Parity::Plus);
        let b: Vec<f64> = (0..11).map(|i| ((i * 7 % 5) as f64 - 2.0) / 3.0).collect();
        let norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let b: Vec<f64> = b.iter().map(|x| x / norm).collect();
        let a = molecular_frame_amplitudes(&b, &u);
        assert!((a.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        let back = channel_amplitudes(&a, &u);
        for (x, y) in b.iter().zip(&back) {
            assert!((x - y).abs() < 1e-12);
        }
        let mut e3 = vec![0.0; 11];
        e3[3] = 1.0;
        let a3 = molecular_frame_amplitudes(&e3, &u);
        for c in 0..11 {
            assert_eq!(a3[c], u[(3, c)]);
        }
    }

    #[test]
    fn full_basis_preserves_norm() {
        for parity in [Parity::Plus, Parity::Minus] {
            let n = if parity == Parity::Plus { 11 } else { 10 };
            let a: Vec<f64> = (0..n).map(|i| 1.0 / (n as f64).sqrt() * if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
            let full = full_lambda_amplitudes(&a, parity, 10);
            let norm: f64 = full.iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn top_state_peaks_at_pole() {
        let mut full = vec![Complex64::new(0.0, 0.0); 21];
        full[20] = Complex64::new(1.0, 0.0);
        let g = HusimiGrid::compute(&full, 10, 41, 16);
        for j in 0..16 {
            assert!((g.value(0, j) - 1.0).abs() < 1e-14);
        }
        assert!(g.h.iter().all(|&h| h <= 1.0 + 1e-14));
        assert_eq!(g.maximum().0, 0.0);
    }

    #[test]
    fn normalization_and_positivity() {
        let (set, u) = frame(Parity::Plus);
        let b: Vec<f64> = (0..11).map(|i| (i as f64 * 0.7).cos()).collect();
        let norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let b: Vec<f64> = b.iter().map(|x| x / norm).collect();
        let full = full_lambda_amplitudes(&molecular_frame_amplitudes(&b, &u), set.parity(), 10);
        let g = HusimiGrid::compute(&full, 10, 200, 400);
        assert!(g.h.iter().all(|&h| h >= 0.0));
        assert!((g.normalization() - 1.0).abs() < 1e-3, "{}", g.normalization());
    }

    #[test]
    fn rotation_about_z_shifts_phi() {
        let (set, u) = frame(Parity::Minus);
        let b: Vec<f64> = (0..10).map(|i| if i == 2 || i == 5 { 0.5f64.sqrt() } else { 0.0 }).collect();
        let full = full_lambda_amplitudes(&molecular_frame_amplitudes(&b, &u), set.parity(), 10);
        let shift = 5;
        let n_phi = 40;
        let alpha = 2.0 * PI * shift as f64 / n_phi as f64;
        let rotated: Vec<Complex64> =
            full.iter().enumerate().map(|(i, z)| z * Complex64::from_polar(1.0, -(i as f64 - 10.0) * alpha)).collect();
        let g = HusimiGrid::compute(&full, 10, 21, n_phi);
        let r = HusimiGrid::compute(&rotated, 10, 21, n_phi);
        for i in 0..21 {
            for j in 0..n_phi {
                assert!((r.value(i, (j + shift) % n_phi) - g.value(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pure_channels_sit_on_their_circles() {
        for parity in [Parity::Plus, Parity::Minus] {
            let (set, u) = frame(parity);
            for (idx, &n) in set.n_list().iter().enumerate() {
                let mut b = vec![0.0; set.len()];
                b[idx] = 1.0;
                let full = full_lambda_amplitudes(&molecular_frame_amplitudes(&b, &u), parity, 10);
                let g = HusimiGrid::compute(&full, 10, 100, 200);
                let mean = g.expectation(|v| core_momentum_symbol(50.0, 10.0, v));
                assert!((mean - n as f64).abs() < 0.5, "{parity} N={n}: {mean}");
            }
        }
    }

    #[test]
    fn lowest_channel_points_along_x() {
        let (_, u) = frame(Parity::Plus);
        let mut b = vec![0.0; 11];
        b[0] = 1.0;
        let full = full_lambda_amplitudes(&molecular_frame_amplitudes(&b, &u), Parity::Plus, 10);
        let g = HusimiGrid::compute(&full, 10, 100, 200);
        assert!(g.mean_direction()[0] > 0.8);
    }
}
