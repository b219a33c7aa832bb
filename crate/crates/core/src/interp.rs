//! Piecewise cubic Hermite interpolation.

/// Cubic Hermite interpolant on strictly increasing knots.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermite {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Hermite {
    /// Interpolant with prescribed knot derivatives.
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Self {
        debug_assert!(xs.len() == ys.len() && ys.len() == ds.len());
        debug_assert!(xs.windows(2).all(|w| w[0] < w[1]));
        Hermite { xs, ys, ds }
    }

    /// Fritsch-Carlson monotone interpolant: preserves monotonicity of the
    /// data on every interval and never overshoots the sample range.
    pub fn monotone(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        assert!(n >= 2, "monotone interpolation needs at least two samples");
        let secants: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut ds = vec![0.0; n];
        ds[0] = secants[0];
        ds[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (secants[i - 1], secants[i]);
            if a * b <= 0.0 {
                ds[i] = 0.0;
            } else {
                // weighted harmonic mean (Fritsch-Butland)
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                ds[i] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        // endpoint slopes must not reverse or exceed 3x the secant
        for (i, s) in [(0usize, secants[0]), (n - 1, secants[n - 2])] {
            if ds[i] * s <= 0.0 {
                ds[i] = 0.0;
            } else if ds[i].abs() > 3.0 * s.abs() {
                ds[i] = 3.0 * s;
            }
        }
        Hermite { xs, ys, ds }
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn first(&self) -> f64 {
        self.xs[0]
    }

    pub fn last(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|k| k.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.xs.len() - 2),
        }
    }

    /// Value and derivative at `x`; `x` is clamped to the knot range.
    pub fn eval_with_slope(&self, x: f64) -> (f64, f64) {
        let x = x.clamp(self.first(), self.last());
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.ds[i] * h, self.ds[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
        let dv = (6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (-6.0 * t2 + 6.0 * t) * y1 + (3.0 * t2 - 2.0 * t) * d1;
        (v, dv / h)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_slope(x).0
    }

    /// Inverts a strictly increasing interpolant: finds `x` with `eval(x) = v`.
    /// Safeguarded Newton on the bracketing segment.
    pub fn invert_increasing(&self, v: f64) -> f64 {
        let n = self.ys.len();
        let i = match self.ys.binary_search_by(|k| k.partial_cmp(&v).unwrap()) {
            Ok(i) => return self.xs[i],
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        };
        let (mut lo, mut hi) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let mut x = lo + (hi - lo) * ((v - y0) / (y1 - y0)).clamp(0.0, 1.0);
        for _ in 0..60 {
            let (fx, dfx) = self.eval_with_slope(x);
            let r = fx - v;
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = if dfx > 0.0 { x - r / dfx } else { 0.5 * (lo + hi) };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * x.abs().max(1.0) {
                return next;
            }
            x = next;
        }
        x
    }
}
