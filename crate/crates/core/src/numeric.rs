//! Small numeric helpers shared across modules.

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// (t-1)!! for even t, with the convention (-1)!! = 1.
pub fn double_factorial_odd(t: usize) -> f64 {
    debug_assert!(t.is_multiple_of(2));
    (1..t).step_by(2).map(|k| k as f64).product()
}

/// Ordinary least-squares slope and intercept of `ys` against `xs`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_lost_bits() {
        let xs = [1.0, 1e-16, 1e-16, 1e-16, 1e-16, -1.0];
        let naive: f64 = xs.iter().sum();
        assert_eq!(naive, 0.0);
        assert!((compensated_sum(xs) - 4e-16).abs() < 1e-30);
    }

    #[test]
    fn double_factorials() {
        assert_eq!(double_factorial_odd(0), 1.0);
        assert_eq!(double_factorial_odd(2), 1.0);
        assert_eq!(double_factorial_odd(6), 15.0);
        assert_eq!(double_factorial_odd(10), 945.0);
    }

    #[test]
    fn fit_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, -1.0, -3.0, -5.0];
        let (s, c) = linear_fit(&xs, &ys);
        assert!((s + 2.0).abs() < 1e-15 && (c - 1.0).abs() < 1e-15);
    }
}
