use std::f64::consts::PI;

/// `sin(pi * x)` with exact zeros at the integers.
pub(crate) fn sin_pi(x: f64) -> f64 {
    // reduce to r in [-1, 1], sin(pi x) = sin(pi r)
    let r = x - 2.0 * (x / 2.0).round();
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    // fold into [-1/2, 1/2]
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    }
}

/// `cos(pi * x)` with exact zeros at the half-integers.
pub(crate) fn cos_pi(x: f64) -> f64 {
    let n = x.round();
    let r = (x - n).abs();
    let sign = if n.rem_euclid(2.0) == 0.0 { 1.0 } else { -1.0 };
    sign * sin_pi(0.5 - r)
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Population mean and population standard deviation.
pub(crate) fn mean_and_rms(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mut acc = CompensatedSum::default();
    values.iter().for_each(|&v| acc.add(v));
    let mean = acc.value() / n;
    let mut var = CompensatedSum::default();
    values.iter().for_each(|&v| var.add((v - mean) * (v - mean)));
    (mean, (var.value() / n).sqrt())
}
