//! Channel structure of the rotating-core molecule.
//!
//! A channel is a core rotational state `|N>` with the Rydberg electron
//! attached at energy `ε_N = E - B_r N(N+1)`. Collisions with the core are
//! characterised by molecular-frame quantum defects `μ_Λ`, which the frame
//! transformation `U` carries over to the laboratory reaction matrix
//! `K = U diag(tan π μ_Λ) Uᵀ`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::angular::{wigner_3j, ThreeJArgs};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("total angular momentum J = {j} is smaller than L = {l}")]
    JBelowL { j: u32, l: u32 },
    #[error("rotational constant must be positive and finite, got {0}")]
    BadRotationalConstant(f64),
    #[error("coupling strength k must be non-negative and finite, got {0}")]
    BadCoupling(f64),
    #[error("constant defect mu0 must be finite, got {0}")]
    BadDefect(f64),
    #[error("no channels of {parity} parity for J = {j}, L = {l}")]
    NoChannels { j: u32, l: u32, parity: Parity },
    #[error("channel N = {n} is open at E = {energy:e} (threshold {threshold:e})")]
    OpenChannel { n: u32, energy: f64, threshold: f64 },
    #[error("quantum defect mu_{lambda} = {mu} is within 1e-6 of a half-integer")]
    DefectPole { lambda: u32, mu: f64 },
}

/// Kronig parity of the channel set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Plus,
    Minus,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Plus => "+",
            Parity::Minus => "-",
        })
    }
}

impl FromStr for Parity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "+" | "plus" => Ok(Parity::Plus),
            "-" | "minus" => Ok(Parity::Minus),
            other => Err(format!("unknown parity '{other}', expected '+' or '-'")),
        }
    }
}

/// Quantum channel structure shared by the quantum modules.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    j: u32,
    l: u32,
    parity: Parity,
    b_rot: f64,
    mu0: f64,
    k: f64,
    n_list: Vec<u32>,
}

impl ChannelSet {
    /// Builds the channel list `|J-L| <= N <= J+L` restricted to one Kronig
    /// parity class: `(-1)^(J+L+N) = +1` for `Plus`, `-1` for `Minus`.
    pub fn new(j: u32, l: u32, parity: Parity, b_rot: f64, mu0: f64, k: f64) -> Result<Self, ChannelError> {
        if j < l {
            return Err(ChannelError::JBelowL { j, l });
        }
        if !(b_rot > 0.0 && b_rot.is_finite()) {
            return Err(ChannelError::BadRotationalConstant(b_rot));
        }
        if !(k >= 0.0 && k.is_finite()) {
            return Err(ChannelError::BadCoupling(k));
        }
        if !mu0.is_finite() {
            return Err(ChannelError::BadDefect(mu0));
        }
        let want = match parity {
            Parity::Plus => 0,
            Parity::Minus => 1,
        };
        let n_list: Vec<u32> = (j - l..=j + l).filter(|n| (j + l + n) % 2 == want).collect();
        if n_list.is_empty() {
            return Err(ChannelError::NoChannels { j, l, parity });
        }
        Ok(Self { j, l, parity, b_rot, mu0, k, n_list })
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn b_rot(&self) -> f64 {
        self.b_rot
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn n_list(&self) -> &[u32] {
        &self.n_list
    }

    pub fn len(&self) -> usize {
        self.n_list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_list.is_empty()
    }

    pub fn index_of(&self, n: u32) -> Option<usize> {
        self.n_list.iter().position(|&x| x == n)
    }

    /// Molecular-frame projections paired with the channels: `0..=L` for
    /// `Plus`, `1..=L` for `Minus` (the antisymmetric `Λ = 0` combination
    /// vanishes).
    pub fn lambdas(&self) -> Vec<u32> {
        match self.parity {
            Parity::Plus => (0..=self.l).collect(),
            Parity::Minus => (1..=self.l).collect(),
        }
    }

    /// `E⁺_N = B_r N(N+1)`.
    pub fn rotational_energy(&self, n: u32) -> f64 {
        let n = n as f64;
        self.b_rot * n * (n + 1.0)
    }

    /// Lowest ionisation threshold of the set.
    pub fn lowest_threshold(&self) -> f64 {
        self.rotational_energy(self.n_list[0])
    }

    /// `ν_N = (2 (E⁺_N - E))^(-1/2)`; errors when the channel is open.
    pub fn effective_quantum_number(&self, energy: f64, n: u32) -> Result<f64, ChannelError> {
        let threshold = self.rotational_energy(n);
        let gap = threshold - energy;
        if gap > 0.0 {
            Ok((2.0 * gap).sqrt().recip())
        } else {
            Err(ChannelError::OpenChannel { n, energy, threshold })
        }
    }

    /// Inverse of [`effective_quantum_number`](Self::effective_quantum_number).
    pub fn energy_at(&self, n: u32, nu: f64) -> f64 {
        self.rotational_energy(n) - 0.5 / (nu * nu)
    }

    /// Effective quantum numbers of every channel, in `n_list` order.
    pub fn channel_nus(&self, energy: f64) -> Result<Vec<f64>, ChannelError> {
        self.n_list.iter().map(|&n| self.effective_quantum_number(energy, n)).collect()
    }

    /// `μ_Λ = μ₀ - k Λ² / (4π L)`.
    pub fn defect(&self, lambda: u32) -> f64 {
        if lambda == 0 {
            return self.mu0;
        }
        let lam = lambda as f64;
        self.mu0 - self.k * lam * lam / (4.0 * PI * self.l as f64)
    }

    /// `U_{NΛ} = c_Λ sqrt(2N+1) (J L N; Λ -Λ 0)` with `c_0 = 1`, `c_Λ = sqrt 2`.
    ///
    /// Rows follow `n_list`, columns follow [`lambdas`](Self::lambdas).
    pub fn frame_transformation(&self) -> DMatrix<f64> {
        let lambdas = self.lambdas();
        DMatrix::from_fn(self.n_list.len(), lambdas.len(), |row, col| {
            let n = self.n_list[row];
            let lam = lambdas[col];
            let c = if lam == 0 { 1.0 } else { 2f64.sqrt() };
            let tj = wigner_3j(ThreeJArgs::integer([self.j, self.l, n], [lam as i32, -(lam as i32), 0]));
            c * ((2 * n + 1) as f64).sqrt() * tj
        })
    }

    pub fn reaction_matrix(&self) -> Result<ReactionMatrix, ChannelError> {
        ReactionMatrix::new(self, self.frame_transformation())
    }
}

/// Laboratory-frame reaction matrix together with the frame transformation it
/// was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionMatrix {
    k: DMatrix<f64>,
    u: DMatrix<f64>,
    lambdas: Vec<u32>,
    defects: Vec<f64>,
}

impl ReactionMatrix {
    /// `K = U diag(tan π μ_Λ) Uᵀ`, symmetrised exactly.
    pub fn new(set: &ChannelSet, u: DMatrix<f64>) -> Result<Self, ChannelError> {
        let lambdas = set.lambdas();
        assert_eq!(u.ncols(), lambdas.len(), "frame transformation has wrong column count");
        assert_eq!(u.nrows(), set.len(), "frame transformation has wrong row count");
        let defects: Vec<f64> = lambdas.iter().map(|&lam| set.defect(lam)).collect();
        for (&lambda, &mu) in lambdas.iter().zip(&defects) {
            let nearest_half = (mu - 0.5).round() + 0.5;
            if (mu - nearest_half).abs() < 1e-6 {
                return Err(ChannelError::DefectPole { lambda, mu });
            }
        }
        let tans: Vec<f64> = defects.iter().map(|mu| (PI * mu).tan()).collect();
        let scaled = DMatrix::from_fn(u.nrows(), u.ncols(), |r, c| u[(r, c)] * tans[c]);
        let raw = &scaled * u.transpose();
        let k = DMatrix::from_fn(raw.nrows(), raw.ncols(), |r, c| 0.5 * (raw[(r, c)] + raw[(c, r)]));
        Ok(Self { k, u, lambdas, defects })
    }

    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn lambdas(&self) -> &[u32] {
        &self.lambdas
    }

    pub fn defects(&self) -> &[f64] {
        &self.defects
    }

    pub fn dim(&self) -> usize {
        self.k.nrows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn set(k: f64, parity: Parity) -> ChannelSet {
        ChannelSet::new(50, 10, parity, 3.1527e-10, 0.4, k).unwrap()
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    #[test]
    fn channel_lists() {
        let plus = set(1.0, Parity::Plus);
        assert_eq!(plus.n_list(), (40..=60).step_by(2).collect::<Vec<_>>().as_slice());
        let minus = set(1.0, Parity::Minus);
        assert_eq!(minus.n_list(), (41..=59).step_by(2).collect::<Vec<_>>().as_slice());
        let single = ChannelSet::new(1, 0, Parity::Plus, 1.0, 0.4, 0.0).unwrap();
        assert_eq!(single.n_list(), &[1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            ChannelSet::new(3, 5, Parity::Plus, 1.0, 0.4, 0.0),
            Err(ChannelError::JBelowL { j: 3, l: 5 })
        );
        assert!(matches!(
            ChannelSet::new(5, 2, Parity::Plus, 0.0, 0.4, 0.0),
            Err(ChannelError::BadRotationalConstant(_))
        ));
        assert!(matches!(
            ChannelSet::new(5, 0, Parity::Minus, 1.0, 0.4, 0.0),
            Err(ChannelError::NoChannels { .. })
        ));
        let s = ChannelSet::new(50, 10, Parity::Plus, 1e-9, 0.5, 0.0).unwrap();
        assert!(matches!(s.reaction_matrix(), Err(ChannelError::DefectPole { lambda: 0, .. })));
    }

    #[test]
    fn energies_and_nu() {
        let s = set(1.0, Parity::Plus);
        assert!((s.rotational_energy(50) - 8.039385e-7).abs() < 1e-12);
        let e = -4.21916e-6;
        let nu50 = s.effective_quantum_number(e, 50).unwrap();
        assert!((nu50 - 315.5).abs() < 1e-3, "{nu50}");
        let nu40 = s.effective_quantum_number(e, 40).unwrap();
        assert!((nu40 - 324.92).abs() < 5e-3, "{nu40}");
        assert!((s.energy_at(40, nu40) - e).abs() < 1e-18);
        assert!(matches!(
            s.effective_quantum_number(1e-6, 40),
            Err(ChannelError::OpenChannel { n: 40, .. })
        ));
    }

    #[test]
    fn defect_formula() {
        let s = ChannelSet::new(50, 10, Parity::Plus, 1e-9, 0.4, 1.0).unwrap();
        assert_eq!(s.defect(0), 0.4);
        assert!((s.defect(10) - (0.4 - 10.0 / (4.0 * PI))).abs() < 1e-15);
        assert!((s.defect(10) + 0.39577).abs() < 1e-5);
        let s0 = ChannelSet::new(50, 10, Parity::Plus, 1e-9, 0.4, 0.0).unwrap();
        assert!((0..=10).all(|lam| s0.defect(lam) == 0.4));
    }

    #[test]
    fn frame_transformation_is_orthogonal_both_parities() {
        for parity in [Parity::Plus, Parity::Minus] {
            let u = set(1.0, parity).frame_transformation();
            assert_eq!(u.nrows(), u.ncols());
            let dev = &u * u.transpose() - DMatrix::identity(u.nrows(), u.nrows());
            assert!(max_abs(&dev) <= 1e-12, "{parity}: {}", max_abs(&dev));
        }
    }

    #[test]
    fn frame_transformation_up_to_60_12() {
        for (j, l) in [(12, 12), (30, 7), (45, 12), (60, 12), (60, 1), (7, 3)] {
            for parity in [Parity::Plus, Parity::Minus] {
                let s = ChannelSet::new(j, l, parity, 1e-9, 0.4, 0.3).unwrap();
                let u = s.frame_transformation();
                let dev = &u * u.transpose() - DMatrix::identity(u.nrows(), u.nrows());
                assert!(max_abs(&dev) <= 1e-12, "J={j} L={l} {parity}: {}", max_abs(&dev));
            }
        }
    }

    #[test]
    fn uncoupled_k_is_scalar() {
        let rm = set(0.0, Parity::Plus).reaction_matrix().unwrap();
        let expect = (0.4 * PI).tan();
        assert!((expect - 3.07768).abs() < 1e-5);
        let dev = rm.k() - DMatrix::identity(11, 11) * expect;
        assert!(max_abs(&dev) < 1e-11);
    }

    #[test]
    fn k_is_exactly_symmetric_with_defect_spectrum() {
        let rm = set(1.0, Parity::Plus).reaction_matrix().unwrap();
        assert_eq!(rm.k(), &rm.k().transpose());
        let mut eig: Vec<f64> = SymmetricEigen::new(rm.k().clone()).eigenvalues.iter().copied().collect();
        let mut expect: Vec<f64> = rm.defects().iter().map(|mu| (PI * mu).tan()).collect();
        eig.sort_by(f64::total_cmp);
        expect.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn small_k_is_linear() {
        let base = (0.4 * PI).tan();
        let dev = |k: f64| {
            let rm = set(k, Parity::Plus).reaction_matrix().unwrap();
            max_abs(&(rm.k() - DMatrix::identity(11, 11) * base))
        };
        let (d1, d2, d3) = (dev(1e-5), dev(1e-4), dev(1e-3));
        assert!(d1 > 0.0);
        assert!((d2 / d1 - 10.0).abs() < 1e-2, "ratio {}", d2 / d1);
        assert!((d3 / d2 - 10.0).abs() < 0.1, "ratio {}", d3 / d2);
    }

    #[test]
    fn observables_invariant_under_column_sign_flips() {
        let s = set(1.0, Parity::Plus);
        let mut u = s.frame_transformation();
        let rm = ReactionMatrix::new(&s, u.clone()).unwrap();
        for c in [1, 4, 7] {
            u.column_mut(c).neg_mut();
        }
        let flipped = ReactionMatrix::new(&s, u).unwrap();
        assert!(max_abs(&(rm.k() - flipped.k())) < 1e-13);
    }

    #[test]
    fn parity_parse() {
        assert_eq!("+".parse::<Parity>().unwrap(), Parity::Plus);
        assert_eq!("minus".parse::<Parity>().unwrap(), Parity::Minus);
        assert!("x".parse::<Parity>().is_err());
    }
}
