//! Small numerical utilities: compensated sums, adaptive quadrature and
//! Richardson/Neville extrapolation.
//!
//! Every reduction over grid data in this crate goes through the
//! compensated accumulators below, in a fixed sequential order, so that
//! repeated runs produce bit-identical results regardless of thread count.

use rustfft::num_complex::Complex64;

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator of f64 values, sequential order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = Accumulator::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Compensated `Σ |z|²`.
pub fn sum_norm_sqr(values: &[Complex64]) -> f64 {
    compensated_sum(values.iter().map(|z| z.norm_sqr()))
}

/// Compensated real inner product `Σ Re(a · conj(b))`.
pub fn sum_re_dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| (x * y.conj()).re))
}

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
///
/// Plain recursive bisection with the 15-point termination rule; adequate
/// for the smooth radial integrands used here.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (ml, fml, left) = simpson(f, a, fa, m, fm);
        let (mr, fmr, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, ml, fml, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, mr, fmr, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 48)
}

/// Adaptive Simpson over a partition given by breakpoints.
pub fn adaptive_simpson_split<F: Fn(f64) -> f64>(f: &F, points: &[f64], tol: f64) -> f64 {
    let mut acc = Accumulator::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            acc.add(adaptive_simpson(f, w[0], w[1], tol));
        }
    }
    acc.value()
}

/// Neville polynomial extrapolation of `(x_i, y_i)` to `x = 0`.
///
/// Used for extrapolating truncated-domain quadratures in the variable
/// `x = 1/R`.
pub fn neville_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mut cur = ys.to_vec();
    let n = xs.len();
    for k in 1..n {
        for i in 0..n - k {
            cur[i] = (xs[i + k] * cur[i] - xs[i] * cur[i + 1]) / (xs[i + k] - xs[i]);
        }
    }
    cur[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_handles_cancellation() {
        // 1 + 1e16 - 1e16 left-to-right loses the 1 in naive f64 addition
        let s = compensated_sum([1.0, 1e16, -1e16]);
        assert_eq!(s, 1.0);
    }

    #[test]
    fn simpson_matches_closed_form() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-13);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn neville_recovers_limit() {
        // y = 3 + 2x + x^3 sampled at shrinking x
        let xs = [0.4, 0.2, 0.1, 0.05];
        let ys: Vec<f64> = xs.iter().map(|&x| 3.0 + 2.0 * x + x * x * x).collect();
        assert!((neville_to_zero(&xs, &ys) - 3.0).abs() < 1e-12);
    }
}
