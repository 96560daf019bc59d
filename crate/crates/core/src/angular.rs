//! Angular-momentum algebra: Wigner 3j symbols and spin coherent states.
//!
//! Angular momenta are carried as doubled integers (`two_j = 2j`) so that
//! half-integer arguments are representable without rounding.

use std::sync::OnceLock;

use num_complex::Complex64;

/// Arguments of a Wigner 3j symbol, stored doubled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThreeJArgs {
    pub two_j: [u32; 3],
    pub two_m: [i32; 3],
}

impl ThreeJArgs {
    pub fn new(two_j: [u32; 3], two_m: [i32; 3]) -> Self {
        Self { two_j, two_m }
    }

    /// Integer-valued arguments `(j1 j2 j3; m1 m2 m3)`.
    pub fn integer(j: [u32; 3], m: [i32; 3]) -> Self {
        Self {
            two_j: j.map(|x| 2 * x),
            two_m: m.map(|x| 2 * x),
        }
    }

    fn passes_selection_rules(&self) -> bool {
        let [a, b, c] = self.two_j;
        if self.two_m.iter().sum::<i32>() != 0 {
            return false;
        }
        for (j, m) in self.two_j.iter().zip(self.two_m) {
            if m.unsigned_abs() > *j || (j + m.unsigned_abs()) % 2 != 0 {
                return false;
            }
        }
        if (a + b + c) % 2 != 0 {
            return false;
        }
        c >= a.abs_diff(b) && c <= a + b
    }
}

/// Prime-exponent tables for exact factorial bookkeeping.
///
/// A 3j symbol is `sqrt(P) / D * sum_k r_k` where `P` and `D` are products of
/// factorials. The magnitude `sqrt(P) / D` is accumulated as a product of
/// prime powers, which stays accurate to a few ulp even when the individual
/// factorials overflow `f64` by hundreds of orders of magnitude.
#[derive(Debug, Clone)]
pub struct FactorialTable {
    primes: Vec<u32>,
    max_n: u32,
}

impl FactorialTable {
    pub fn new(max_n: u32) -> Self {
        let n = max_n as usize;
        let mut sieve = vec![true; n + 1];
        let mut primes = Vec::new();
        for i in 2..=n {
            if sieve[i] {
                primes.push(i as u32);
                let mut q = i * i;
                while q <= n {
                    sieve[q] = false;
                    q += i;
                }
            }
        }
        Self { primes, max_n }
    }

    pub fn max_n(&self) -> u32 {
        self.max_n
    }

    /// Adds `sign * (exponent of p in n!)` for every prime into `acc`.
    fn accumulate(&self, n: u32, sign: i64, acc: &mut [i64]) {
        assert!(n <= self.max_n, "factorial argument {n} exceeds table size {}", self.max_n);
        for (slot, &p) in acc.iter_mut().zip(&self.primes) {
            if p > n {
                break;
            }
            let mut e = 0i64;
            let mut q = n / p;
            while q > 0 {
                e += q as i64;
                q /= p;
            }
            *slot += sign * e;
        }
    }

    /// Evaluates `prod_p p^(twice[p] / 2)`.
    fn half_power_product(&self, twice: &[i64]) -> f64 {
        // mantissa kept in [2^-500, 2^500], binary exponent tracked separately
        let mut mant = 1.0f64;
        let mut exp2: i64 = 0;
        for (&p, &e2) in self.primes.iter().zip(twice) {
            if e2 == 0 {
                continue;
            }
            let p = p as f64;
            // chunks keep each partial power below 2^400
            let chunk = (400.0 / p.log2()).floor().max(1.0) as i64;
            let mut whole = e2 / 2;
            while whole != 0 {
                let step = whole.signum() * whole.abs().min(chunk);
                mant *= p.powi(step as i32);
                whole -= step;
                let (m, e) = split_exponent(mant);
                mant = m;
                exp2 += e;
            }
            if e2 % 2 != 0 {
                mant *= if e2 > 0 { p.sqrt() } else { 1.0 / p.sqrt() };
            }
        }
        scale_by_pow2(mant, exp2)
    }

    /// Wigner 3j symbol by the Racah single-sum formula.
    pub fn wigner_3j(&self, args: ThreeJArgs) -> f64 {
        if !args.passes_selection_rules() {
            return 0.0;
        }
        let [tj1, tj2, tj3] = args.two_j.map(|x| x as i64);
        let [tm1, tm2, tm3] = args.two_m.map(|x| x as i64);
        // all of these are integers once the selection rules hold
        let j1pj2mj3 = (tj1 + tj2 - tj3) / 2;
        let j1mm1 = (tj1 - tm1) / 2;
        let j2pm2 = (tj2 + tm2) / 2;
        let j3mj2pm1 = (tj3 - tj2 + tm1) / 2;
        let j3mj1mm2 = (tj3 - tj1 - tm2) / 2;

        let k_min = 0.max(-j3mj2pm1).max(-j3mj1mm2);
        let k_max = j1pj2mj3.min(j1mm1).min(j2pm2);
        if k_min > k_max {
            return 0.0;
        }

        let mut twice = vec![0i64; self.primes.len()];
        let fact = |n: i64, sign: i64, acc: &mut [i64]| self.accumulate(n as u32, sign, acc);
        // P = triangle coefficient times prod (j +- m)!
        fact(j1pj2mj3, 1, &mut twice);
        fact((tj1 - tj2 + tj3) / 2, 1, &mut twice);
        fact((-tj1 + tj2 + tj3) / 2, 1, &mut twice);
        fact((tj1 + tj2 + tj3) / 2 + 1, -1, &mut twice);
        for (tj, tm) in [(tj1, tm1), (tj2, tm2), (tj3, tm3)] {
            fact((tj + tm) / 2, 1, &mut twice);
            fact((tj - tm) / 2, 1, &mut twice);
        }
        // D at k = k_min, entering squared in the doubled exponent
        let k = k_min;
        for n in [
            k,
            j3mj2pm1 + k,
            j3mj1mm2 + k,
            j1pj2mj3 - k,
            j1mm1 - k,
            j2pm2 - k,
        ] {
            fact(n, -2, &mut twice);
        }
        let magnitude = self.half_power_product(&twice);

        // r_k = D_kmin / D_k, built by the term ratio. The alternating sum
        // cancels by many orders of magnitude near j ~ 60, so it is carried in
        // double-double precision.
        let mut r = DoubleDouble::ONE;
        let mut sum = DoubleDouble::ONE;
        for k in k_min..k_max {
            let num = (j1pj2mj3 - k) * (j1mm1 - k) * (j2pm2 - k);
            let den = (k + 1) * (j3mj2pm1 + k + 1) * (j3mj1mm2 + k + 1);
            r = r.mul_f64(-(num as f64)).div_f64(den as f64);
            sum = sum.add(r);
        }
        let sum = sum.to_f64();
        // (-1)^(j1 - j2 - m3) (-1)^k_min
        let phase_exp = (tj1 - tj2 - tm3) / 2 + k_min;
        let sign = if phase_exp.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        sign * magnitude * sum
    }
}

/// Unevaluated sum `hi + lo` with roughly 106 bits of precision.
#[derive(Debug, Clone, Copy)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Self { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn renormalize(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Self { hi: s, lo: lo - (s - hi) }
    }

    fn add(self, other: Self) -> Self {
        let s = Self::two_sum(self.hi, other.hi);
        Self::renormalize(s.hi, s.lo + self.lo + other.lo)
    }

    fn mul_f64(self, b: f64) -> Self {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p) + self.lo * b;
        Self::renormalize(p, e)
    }

    fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let rem = self.add(Self { hi: q1, lo: 0.0 }.mul_f64(-b));
        let q2 = rem.hi / b;
        let rem = rem.add(Self { hi: q2, lo: 0.0 }.mul_f64(-b));
        let q3 = rem.hi / b;
        Self::renormalize(q1, q2).add(Self { hi: q3, lo: 0.0 })
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

fn split_exponent(x: f64) -> (f64, i64) {
    const LIMIT: f64 = 3.273_390_607_896_142e150; // 2^500
    let mut m = x;
    let mut e = 0;
    while m.abs() > LIMIT {
        m /= LIMIT;
        e += 500;
    }
    while m != 0.0 && m.abs() < 1.0 / LIMIT {
        m *= LIMIT;
        e -= 500;
    }
    (m, e)
}

fn scale_by_pow2(mut x: f64, mut e: i64) -> f64 {
    while e > 0 {
        let step = e.min(1000);
        x *= 2f64.powi(step as i32);
        e -= step;
    }
    while e < 0 {
        let step = (-e).min(1000);
        x /= 2f64.powi(step as i32);
        e += step;
    }
    x
}

fn default_table() -> &'static FactorialTable {
    static TABLE: OnceLock<FactorialTable> = OnceLock::new();
    TABLE.get_or_init(|| FactorialTable::new(2048))
}

/// Wigner 3j symbol using a shared table that covers `j1 + j2 + j3 <= 2047`.
///
/// Returns exactly `0.0` whenever a selection rule fails.
pub fn wigner_3j(args: ThreeJArgs) -> f64 {
    default_table().wigner_3j(args)
}

/// Spin coherent-state amplitudes over the projections `Λ = -L..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentAmplitudes {
    pub l: u32,
    /// Entry `i` holds the amplitude of `Λ = i - L`.
    pub amplitudes: Vec<Complex64>,
}

impl CoherentAmplitudes {
    pub fn get(&self, lambda: i32) -> Complex64 {
        self.amplitudes[(lambda + self.l as i32) as usize]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// `amplitude_Λ = binom(2L, L+Λ)^(1/2) cos(θ/2)^(L+Λ) sin(θ/2)^(L-Λ) e^(-iΛφ)`.
pub fn spin_coherent_amplitudes(l: u32, theta: f64, phi: f64) -> CoherentAmplitudes {
    let (s, c) = (theta / 2.0).sin_cos();
    let two_l = 2 * l as usize;
    // sqrt of binomials by the multiplicative recurrence, starting at Λ = -L
    let mut sqrt_binom = vec![1.0f64; two_l + 1];
    for i in 1..=two_l {
        let ratio = (two_l + 1 - i) as f64 / i as f64;
        sqrt_binom[i] = sqrt_binom[i - 1] * ratio.sqrt();
    }
    let amplitudes = (0..=two_l)
        .map(|i| {
            let lambda = i as i32 - l as i32;
            let up = i as i32; // L + Λ
            let down = two_l as i32 - up; // L - Λ
            let modulus = sqrt_binom[i] * c.powi(up) * s.powi(down);
            Complex64::from_polar(modulus, -(lambda as f64) * phi)
        })
        .collect();
    CoherentAmplitudes { l, amplitudes }
}

/// Great-circle angle between two directions given in polar angles.
pub fn angular_separation(theta1: f64, phi1: f64, theta2: f64, phi2: f64) -> f64 {
    let cos_gamma = theta1.cos() * theta2.cos() + theta1.sin() * theta2.sin() * (phi1 - phi2).cos();
    cos_gamma.clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn w(j: [u32; 3], m: [i32; 3]) -> f64 {
        wigner_3j(ThreeJArgs::integer(j, m))
    }

    #[test]
    fn closed_form_j_j_0() {
        assert!((w([1, 1, 0], [0, 0, 0]) + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        for j in 0..30u32 {
            for m in -(j as i32)..=(j as i32) {
                let expect = if (j as i32 - m).rem_euclid(2) == 0 { 1.0 } else { -1.0 }
                    / ((2 * j + 1) as f64).sqrt();
                assert!((w([j, j, 0], [m, -m, 0]) - expect).abs() < 1e-14, "j={j} m={m}");
            }
        }
    }

    #[test]
    fn tabulated_value() {
        assert!((w([1, 1, 2], [1, -1, 0]) - 1.0 / 30f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn selection_rules_give_exact_zero() {
        assert_eq!(w([1, 1, 1], [1, 1, -2]), 0.0);
        assert_eq!(w([1, 1, 1], [1, 0, 0]), 0.0);
        assert_eq!(w([1, 1, 3], [0, 0, 0]), 0.0);
        // odd j-sum with all m = 0
        assert_eq!(w([1, 1, 1], [0, 0, 0]), 0.0);
    }

    #[test]
    fn half_integer_arguments() {
        // (1/2 1/2 1; 1/2 -1/2 0) = 1/sqrt(6)
        let v = wigner_3j(ThreeJArgs::new([1, 1, 2], [1, -1, 0]));
        assert!((v - 1.0 / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn large_arguments_stay_finite() {
        let v = w([60, 60, 60], [3, -5, 2]);
        assert!(v.is_finite() && v.abs() < 1.0 && v != 0.0);
    }

    fn orthogonality_sum(j1: u32, j2: u32, j3: u32, m3: i32, j3p: u32, m3p: i32) -> f64 {
        let (a, b) = (j1 as i32, j2 as i32);
        let mut acc = 0.0;
        for m1 in -a..=a {
            for m2 in -b..=b {
                acc += w([j1, j2, j3], [m1, m2, m3]) * w([j1, j2, j3p], [m1, m2, m3p]);
            }
        }
        (2 * j3 + 1) as f64 * acc
    }

    #[test]
    fn orthogonality_up_to_60() {
        for (j1, j2) in [(60u32, 60u32), (50, 10), (37, 55), (60, 1)] {
            let lo = j1.abs_diff(j2);
            let hi = (j1 + j2).min(60);
            for j3 in [lo, (lo + hi) / 2, hi] {
                for j3p in [lo, (lo + hi) / 2, hi] {
                    for m3 in [0, 1, -(lo.min(5) as i32)] {
                        if m3.unsigned_abs() > j3.min(j3p) {
                            continue;
                        }
                        let s = orthogonality_sum(j1, j2, j3, m3, j3p, m3);
                        let expect = if j3 == j3p { 1.0 } else { 0.0 };
                        assert!((s - expect).abs() < 1e-12, "({j1} {j2} {j3} {j3p} m3={m3}): {s}");
                    }
                }
            }
        }
    }

    #[test]
    fn column_permutation_symmetry() {
        let cases = [([60u32, 45, 30], [7, -20, 13]), ([50, 10, 44], [3, -3, 0]), ([21, 17, 9], [-4, 1, 3])];
        for (j, m) in cases {
            let base = w(j, m);
            let phase = if (j[0] + j[1] + j[2]) % 2 == 0 { 1.0 } else { -1.0 };
            let even = [w([j[1], j[2], j[0]], [m[1], m[2], m[0]]), w([j[2], j[0], j[1]], [m[2], m[0], m[1]])];
            let odd = [w([j[1], j[0], j[2]], [m[1], m[0], m[2]]), w([j[0], j[2], j[1]], [m[0], m[2], m[1]])];
            for v in even {
                assert!((v - base).abs() < 1e-13);
            }
            for v in odd {
                assert!((v - phase * base).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn coherent_pole_and_antipode() {
        let up = spin_coherent_amplitudes(10, 0.0, 1.234);
        assert!((up.get(10) - Complex64::from_polar(1.0, -12.34)).norm() < 1e-14);
        assert!((up.get(10).norm() - 1.0).abs() < 1e-15);
        for lam in -10..10 {
            assert_eq!(up.get(lam).norm(), 0.0);
        }
        let down = spin_coherent_amplitudes(10, PI, 0.0);
        assert!((down.get(-10).norm() - 1.0).abs() < 1e-14);
        for lam in -9..=10 {
            assert!(down.get(lam).norm() < 1e-14);
        }
    }

    #[test]
    fn coherent_overlap_matches_cos_power() {
        let l = 7;
        let (t1, p1, t2, p2) = (0.4, 1.1, 1.9, -2.3);
        let a = spin_coherent_amplitudes(l, t1, p1);
        let b = spin_coherent_amplitudes(l, t2, p2);
        let ov: Complex64 = a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum();
        let gamma = angular_separation(t1, p1, t2, p2);
        assert!((ov.norm_sqr() - (gamma / 2.0).cos().powi(4 * l as i32)).abs() < 1e-10);
    }

    /// Exact Racah sum over big rationals: returns (sign, square of the 3j).
    fn exact_3j_squared(j: [u32; 3], m: [i32; 3]) -> (f64, num::BigRational) {
        use num::{BigInt, BigRational, One, Signed, Zero};
        let fact = |n: i64| -> BigInt { (1..=n).fold(BigInt::one(), |a, x| a * BigInt::from(x)) };
        let [j1, j2, j3] = j.map(|x| x as i64);
        let [m1, m2, m3] = m.map(|x| x as i64);
        let p = fact(j1 + j2 - j3) * fact(j1 - j2 + j3) * fact(-j1 + j2 + j3)
            * fact(j1 + m1) * fact(j1 - m1) * fact(j2 + m2) * fact(j2 - m2) * fact(j3 + m3) * fact(j3 - m3);
        let p = BigRational::new(p, fact(j1 + j2 + j3 + 1));
        let mut sum = BigRational::zero();
        for k in 0..=(j1 + j2 + j3) {
            let args = [k, j3 - j2 + k + m1, j3 - j1 + k - m2, j1 + j2 - j3 - k, j1 - k - m1, j2 - k + m2];
            if args.iter().any(|&a| a < 0) {
                continue;
            }
            let d = args.iter().fold(BigInt::one(), |a, &x| a * fact(x));
            let term = BigRational::new(BigInt::one(), d);
            sum = if k % 2 == 0 { sum + term } else { sum - term };
        }
        let phase = if (j1 - j2 - m3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let sign = if sum.is_negative() { -phase } else { phase };
        (sign, p * &sum * &sum)
    }

    #[test]
    fn matches_exact_rational_oracle() {
        use num::ToPrimitive;
        let cases = [
            ([50u32, 10, 40], [10, -10, 0]),
            ([50, 10, 60], [0, 0, 0]),
            ([50, 10, 47], [7, -7, 0]),
            ([60, 60, 60], [3, -5, 2]),
            ([60, 55, 58], [-20, 11, 9]),
            ([12, 12, 12], [0, 0, 0]),
        ];
        for (j, m) in cases {
            let v = w(j, m);
            let (sign, sq) = exact_3j_squared(j, m);
            let exact = sign * sq.to_f64().unwrap().sqrt();
            assert!((v - exact).abs() <= 1e-14 * exact.abs().max(1e-300), "{j:?} {m:?}: {v} vs {exact}");
        }
    }
}
