//! Small numerical helpers shared across modules.

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

/// log of the rising factorial (theta)_n = theta (theta+1) ... (theta+n-1).
pub fn ln_rising_factorial(theta: f64, n: usize) -> f64 {
    compensated_sum((0..n).map(|i| (theta + i as f64).ln()))
}

/// log n!
pub fn ln_factorial(n: usize) -> f64 {
    compensated_sum((2..=n).map(|i| (i as f64).ln()))
}

/// log of the falling factorial n (n-1) ... (n-k+1).
pub fn ln_falling_factorial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    compensated_sum((0..k).map(|i| ((n - i) as f64).ln()))
}

/// log(e^a + e^b), tolerant of -inf arguments.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(xs.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut xs = vec![1.0];
        xs.extend(std::iter::repeat_n(1e-16, 10_000));
        let s = compensated_sum(xs.iter().copied());
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn rising_factorial_small_cases() {
        assert!((ln_rising_factorial(1.0, 4) - 24f64.ln()).abs() < 1e-12);
        assert!((ln_rising_factorial(0.5, 2) - 0.75f64.ln()).abs() < 1e-12);
        assert_eq!(ln_rising_factorial(3.0, 0), 0.0);
    }

    #[test]
    fn ln_add_exp_matches_direct() {
        let v = ln_add_exp(2f64.ln(), 3f64.ln());
        assert!((v - 5f64.ln()).abs() < 1e-14);
        assert_eq!(ln_add_exp(f64::NEG_INFINITY, 1.0), 1.0);
    }

    #[test]
    fn mean_se_constant_sample() {
        let (m, se) = mean_and_se(&[2.0; 10]);
        assert_eq!(m, 2.0);
        assert_eq!(se, 0.0);
    }
}
