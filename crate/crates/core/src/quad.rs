//! Gauss–Legendre quadrature: single rules, composite grids over piecewise
//! smooth integrands, and a doubling driver for integrals of potentials.

use crate::C64;

/// Gauss–Legendre rule of given degree on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights by Newton iteration on the Legendre polynomial.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature degree must be at least 1");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Evaluate `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A fixed quadrature grid: nodes with matching weights, usually a composite
/// Gauss–Legendre rule over the smooth pieces of a potential.
#[derive(Debug, Clone)]
pub struct QuadGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadGrid {
    /// Composite Gauss–Legendre grid with `per_piece` nodes on each interval
    /// `[breaks[i], breaks[i+1]]`. `breaks` must be sorted.
    pub fn composite(breaks: &[f64], per_piece: usize) -> Self {
        let rule = GaussLegendre::new(per_piece);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for seg in breaks.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            if b - a <= 0.0 {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                nodes.push(mid + half * x);
                weights.push(w * half);
            }
        }
        Self { nodes, weights }
    }

    /// Uniform split of `[a, b]` into `pieces` segments, `per_piece` nodes each,
    /// with extra breakpoints merged in.
    pub fn on_interval(a: f64, b: f64, pieces: usize, per_piece: usize, extra_breaks: &[f64]) -> Self {
        let mut breaks: Vec<f64> = (0..=pieces)
            .map(|i| a + (b - a) * i as f64 / pieces as f64)
            .collect();
        breaks.extend(extra_breaks.iter().copied().filter(|x| *x > a && *x < b));
        breaks.sort_by(|p, q| p.partial_cmp(q).unwrap());
        breaks.dedup_by(|p, q| (*p - *q).abs() < 1e-14);
        Self::composite(&breaks, per_piece)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted sum of complex samples.
    pub fn sum_complex(&self, values: impl Iterator<Item = C64>) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (w, v) in self.weights.iter().zip(values) {
            acc += v * *w;
        }
        acc
    }

    /// Weighted sum of real samples.
    pub fn sum_real(&self, values: impl Iterator<Item = f64>) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Integrate a smooth-per-piece real integrand by composite Gauss–Legendre,
/// doubling the per-piece node count until two successive values agree to
/// `rel_tol` (starting from 64 nodes per piece).
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(breaks: &[f64], rel_tol: f64, mut f: F) -> f64 {
    let eval = |per_piece: usize, f: &mut F| -> f64 {
        let grid = QuadGrid::composite(breaks, per_piece);
        grid.nodes.iter().zip(&grid.weights).map(|(x, w)| w * f(*x)).sum()
    };
    let mut per_piece = 64;
    let mut prev = eval(per_piece, &mut f);
    loop {
        per_piece *= 2;
        let cur = eval(per_piece, &mut f);
        let scale = cur.abs().max(1e-300);
        if (cur - prev).abs() <= rel_tol * scale || per_piece >= 4096 {
            return cur;
        }
        prev = cur;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn low_degree_polynomials_are_exact() {
        let rule = GaussLegendre::new(5);
        // Degree-9 polynomial on [0, 2].
        let v = rule.integrate(0.0, 2.0, |x| x.powi(9) - 3.0 * x.powi(4) + 1.0);
        let exact = 2.0f64.powi(10) / 10.0 - 3.0 * 2.0f64.powi(5) / 5.0 + 2.0;
        assert_abs_diff_eq!(v, exact, epsilon = 1e-12);
    }

    #[test]
    fn oscillatory_integral_converges() {
        let rule = GaussLegendre::new(64);
        let v = rule.integrate(0.0, PI, |x| (10.0 * x).cos());
        let exact = (10.0 * PI).sin() / 10.0;
        assert_abs_diff_eq!(v, exact, epsilon = 1e-13);
    }

    #[test]
    fn composite_weights_sum_to_length() {
        let grid = QuadGrid::on_interval(0.0, PI, 8, 64, &[1.0]);
        assert_abs_diff_eq!(grid.weights.iter().sum::<f64>(), PI, epsilon = 1e-12);
        assert!(grid.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn adaptive_doubling_reaches_tolerance() {
        let v = integrate_adaptive(&[0.0, 1.0, PI], 1e-12, |x| (x * x).exp().recip());
        let reference = integrate_adaptive(&[0.0, PI], 1e-13, |x| (x * x).exp().recip());
        assert_abs_diff_eq!(v, reference, epsilon = 1e-10);
    }
}
