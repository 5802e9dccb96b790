//! Spectral expansion of square-integrable vector functions.
//!
//! A function `f` supported on finitely many periods decomposes as
//!
//! ```text
//! f(x) = ½ Σ_{k,j} ∫_{(−1,1]} a_{k,j}(t) Ψ_{k,j,t}(x) dt,
//! a_{k,j}(t) = (f, X_{k,j,t}),
//! ```
//!
//! where `Ψ` are L²-normalized eigenfunctions and `X` the biorthogonal
//! system normalized so that `(Ψ, X) = 1` (the scale the expansion theorem
//! leaves open; the combined convention is validated against the
//! constant-potential Fourier oracle). The t-integral is evaluated by
//! Gauss–Legendre; the k-sum is truncated at `|k| ≤ K` and accumulated ring
//! by ring so a whole truncation sweep costs one pass.

use crate::bloch::{eigenvalues_near_lattice, sample_combination, Eigenpair, SampledFunction};
use crate::error::Error;
use crate::mat2::Vec2;
use crate::potential::{check_condition_2, PotentialQ};
use crate::quad::{GaussLegendre, QuadGrid};
use crate::{Result, C64};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// A target function for the expansion: closed forms, CSV samples with
/// linear interpolation, or an arbitrary closure. Evaluates to zero outside
/// its support.
#[derive(Clone)]
pub struct TargetFunction {
    pub support: (f64, f64),
    kind: TargetKind,
}

#[derive(Clone)]
enum TargetKind {
    Zero,
    /// `amp · exp(−(x−center)²/(2σ²))`
    Gaussian { amp: Vec2, center: f64, sigma: f64 },
    /// `amp · exp(iωx)` on the support window.
    WindowedExp { amp: Vec2, omega: C64 },
    /// Componentwise polynomials `Σ c_k x^k` on the support window.
    WindowedPoly { coeffs: [Vec<C64>; 2] },
    /// Linear interpolation through samples.
    Samples { xs: Vec<f64>, vals: Vec<Vec2> },
    Custom(Arc<dyn Fn(f64) -> Vec2 + Send + Sync>),
}

impl TargetFunction {
    pub fn zero() -> Self {
        Self { support: (0.0, 0.0), kind: TargetKind::Zero }
    }

    pub fn gaussian(amp: Vec2, center: f64, sigma: f64, support: (f64, f64)) -> Self {
        Self { support, kind: TargetKind::Gaussian { amp, center, sigma } }
    }

    pub fn windowed_exp(amp: Vec2, omega: C64, support: (f64, f64)) -> Self {
        Self { support, kind: TargetKind::WindowedExp { amp, omega } }
    }

    pub fn windowed_poly(coeffs: [Vec<C64>; 2], support: (f64, f64)) -> Self {
        Self { support, kind: TargetKind::WindowedPoly { coeffs } }
    }

    pub fn custom(
        support: (f64, f64),
        f: impl Fn(f64) -> Vec2 + Send + Sync + 'static,
    ) -> Self {
        Self { support, kind: TargetKind::Custom(Arc::new(f)) }
    }

    pub fn from_samples(xs: Vec<f64>, vals: Vec<Vec2>) -> Result<Self> {
        if xs.len() != vals.len() || xs.len() < 2 {
            return Err(Error::InvalidConfig("need at least two samples".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("sample abscissae must increase".into()));
        }
        let support = (xs[0], *xs.last().unwrap());
        Ok(Self { support, kind: TargetKind::Samples { xs, vals } })
    }

    /// Parse CSV rows `x, Re f1, Im f1, Re f2, Im f2` (optional header).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut vals = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.chars().next().is_some_and(|c| c.is_alphabetic())) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::InvalidConfig(format!("CSV row {i}: expected 5 fields")));
            }
            let mut nums = [0.0f64; 5];
            for (k, f) in fields.iter().enumerate() {
                nums[k] = f
                    .trim()
                    .parse()
                    .map_err(|e| Error::InvalidConfig(format!("CSV row {i}: {e}")))?;
            }
            xs.push(nums[0]);
            vals.push([C64::new(nums[1], nums[2]), C64::new(nums[3], nums[4])]);
        }
        Self::from_samples(xs, vals)
    }

    pub fn eval(&self, x: f64) -> Vec2 {
        let zero = [C64::new(0.0, 0.0); 2];
        if matches!(self.kind, TargetKind::Zero) || x < self.support.0 || x > self.support.1 {
            return zero;
        }
        match &self.kind {
            TargetKind::Zero => zero,
            TargetKind::Gaussian { amp, center, sigma } => {
                let g = (-(x - center) * (x - center) / (2.0 * sigma * sigma)).exp();
                [amp[0] * g, amp[1] * g]
            }
            TargetKind::WindowedExp { amp, omega } => {
                let e = (C64::new(0.0, 1.0) * *omega * x).exp();
                [amp[0] * e, amp[1] * e]
            }
            TargetKind::WindowedPoly { coeffs } => {
                let horner = |cs: &[C64]| {
                    let mut acc = C64::new(0.0, 0.0);
                    for c in cs.iter().rev() {
                        acc = acc * x + c;
                    }
                    acc
                };
                [horner(&coeffs[0]), horner(&coeffs[1])]
            }
            TargetKind::Samples { xs, vals } => {
                let idx = xs.partition_point(|&p| p <= x).min(xs.len() - 1).max(1);
                let (x0, x1) = (xs[idx - 1], xs[idx]);
                let s = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
                let lerp = |a: C64, b: C64| a + (b - a) * s;
                [
                    lerp(vals[idx - 1][0], vals[idx][0]),
                    lerp(vals[idx - 1][1], vals[idx][1]),
                ]
            }
            TargetKind::Custom(f) => f(x),
        }
    }
}

/// Quasi-periodic extension of an eigenfunction to arbitrary real `x`:
/// `Φ(x0 + mπ) = e^{iπtm} Φ(x0)`. `q` must be the potential the function
/// was built from (the adjoint potential for adjoint eigenfunctions).
pub fn bloch_extend(
    q: &PotentialQ,
    t: f64,
    func: &SampledFunction,
    x: f64,
    tol: f64,
) -> Result<Vec2> {
    let (m, x0) = fold_period(x);
    let sampled = sample_combination(q, func.lambda, func.combo, &Arc::new(point_grid(x0)), tol)?;
    let phase = (C64::new(0.0, PI * t * m as f64)).exp();
    Ok([sampled.values[0][0] * phase, sampled.values[0][1] * phase])
}

fn point_grid(x0: f64) -> QuadGrid {
    QuadGrid { nodes: vec![x0], weights: vec![0.0] }
}

fn fold_period(x: f64) -> (i64, f64) {
    let mut m = (x / PI).floor() as i64;
    let mut x0 = x - m as f64 * PI;
    if x0 >= PI {
        x0 -= PI;
        m += 1;
    }
    if x0 < 0.0 {
        x0 += PI;
        m -= 1;
    }
    (m, x0)
}

/// A quadrature grid over several periods with the fold map precomputed.
struct ExtendedGrid {
    /// Global abscissae and weights.
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Period index and folded abscissa per node.
    cell: Vec<i64>,
    /// Folded abscissae sorted ascending, with the inverse permutation.
    sorted_x0: Vec<f64>,
    order: Vec<usize>,
}

impl ExtendedGrid {
    fn new(lo: f64, hi: f64, per_cell: usize, q_breaks: &[f64]) -> Self {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let m_lo = (lo / PI).floor() as i64;
        let m_hi = ((hi - 1e-14) / PI).floor() as i64;
        for m in m_lo..=m_hi {
            let a = lo.max(m as f64 * PI);
            let b = hi.min((m + 1) as f64 * PI);
            if b - a < 1e-14 {
                continue;
            }
            // Sub-split at potential breakpoints mapped into this period.
            let extra: Vec<f64> = q_breaks.iter().map(|&x0| m as f64 * PI + x0).collect();
            let grid = QuadGrid::on_interval(a, b, 1, per_cell, &extra);
            nodes.extend(grid.nodes);
            weights.extend(grid.weights);
        }
        let cell: Vec<i64> = nodes.iter().map(|&x| fold_period(x).0).collect();
        let x0: Vec<f64> = nodes.iter().map(|&x| fold_period(x).1).collect();
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by(|&a, &b| x0[a].partial_cmp(&x0[b]).unwrap());
        let sorted_x0: Vec<f64> = order.iter().map(|&i| x0[i]).collect();
        Self { nodes, weights, cell, sorted_x0, order }
    }

    /// Sample `combo` of the fundamental solutions at every node, with the
    /// quasi-periodic phase `e^{iπtm}` applied per cell.
    fn sample(
        &self,
        q: &PotentialQ,
        lambda: C64,
        combo: (C64, C64),
        t: f64,
        tol: f64,
    ) -> Result<Vec<Vec2>> {
        let tr = crate::monodromy::solution_trace(q, lambda, &self.sorted_x0, tol)?;
        let mut out = vec![[C64::new(0.0, 0.0); 2]; self.nodes.len()];
        for (pos, &idx) in self.order.iter().enumerate() {
            let c = tr.c_values[pos];
            let s = tr.s_values[pos];
            let phase = (C64::new(0.0, PI * t * self.cell[idx] as f64)).exp();
            out[idx] = [
                (combo.0 * c[0] + combo.1 * s[0]) * phase,
                (combo.0 * c[1] + combo.1 * s[1]) * phase,
            ];
        }
        Ok(out)
    }
}

/// Expansion coefficient `a = (f, X)` with `X = Φ*·(‖Φ‖/conj(α))`, so that
/// `(Ψ, X) = 1` for `Ψ = Φ/‖Φ‖`. Integrates over the support of `f` using
/// the quasi-periodic extension of `X`.
pub fn coefficient(
    q: &PotentialQ,
    t: f64,
    pair: &Eigenpair,
    f: &TargetFunction,
    nodes_per_cell: usize,
    tol: f64,
) -> Result<C64> {
    if pair.alpha.norm() < 1e-10 {
        return Err(Error::DegeneratePairing { alpha_abs: pair.alpha.norm() });
    }
    let grid = ExtendedGrid::new(f.support.0, f.support.1, nodes_per_cell, &q.breakpoints());
    if grid.nodes.is_empty() {
        return Ok(C64::new(0.0, 0.0));
    }
    let q_adj = q.adjoint();
    let star = grid.sample(&q_adj, pair.phi_star.lambda, pair.phi_star.combo, t, tol)?;
    let x_scale = C64::new(pair.phi.norm_l2(), 0.0) / pair.alpha.conj();
    let mut acc = C64::new(0.0, 0.0);
    for (i, (&x, &w)) in grid.nodes.iter().zip(&grid.weights).enumerate() {
        let fv = f.eval(x);
        let xv = [star[i][0] * x_scale, star[i][1] * x_scale];
        acc += (fv[0] * xv[0].conj() + fv[1] * xv[1].conj()) * w;
    }
    Ok(acc)
}

/// One coefficient table entry.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoefficientEntry {
    pub t: f64,
    pub weight: f64,
    pub k: i32,
    pub j: u8,
    pub a: C64,
}

/// A `(t, k, j)` slot that could not contribute to the reconstruction.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionHole {
    pub t: f64,
    pub k: i32,
    pub j: u8,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ExpansionResult {
    pub k_max: i32,
    /// Gauss–Legendre nodes and weights over `(−1, 1]`.
    pub t_nodes: Vec<(f64, f64)>,
    pub coefficients: Vec<CoefficientEntry>,
    /// Sample grid of the reconstruction window with quadrature weights.
    pub xgrid: Vec<f64>,
    pub xweights: Vec<f64>,
    pub reconstruction: Vec<Vec2>,
    pub l2_error: f64,
    pub holes: Vec<ExpansionHole>,
    pub complete: bool,
}

impl ExpansionResult {
    /// CSV rows `x, Re f1, Im f1, Re f2, Im f2` of the reconstruction.
    pub fn reconstruction_csv(&self) -> String {
        let mut out = String::from("x,re_f1,im_f1,re_f2,im_f2\n");
        for (x, v) in self.xgrid.iter().zip(&self.reconstruction) {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                x, v[0].re, v[0].im, v[1].re, v[1].im
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExpansionParams {
    pub tol: f64,
    /// Quadrature nodes per period cell for coefficient and window grids.
    pub nodes_per_cell: usize,
    /// Nodes per piece of the base grid used for norms and pairings.
    pub base_nodes_per_piece: usize,
}

impl Default for ExpansionParams {
    fn default() -> Self {
        Self { tol: 1e-10, nodes_per_cell: 256, base_nodes_per_piece: 64 }
    }
}

/// Truncated reconstruction at a single order `K`.
pub fn reconstruct(
    q: &PotentialQ,
    f: &TargetFunction,
    k_max: i32,
    t_node_count: usize,
    window: (f64, f64),
    params: &ExpansionParams,
) -> Result<ExpansionResult> {
    let (_, result) = reconstruct_sweep(q, f, &[k_max], t_node_count, window, params)?;
    Ok(result)
}

/// Reconstruction error for every requested truncation order in one pass:
/// contributions are accumulated per ring `|k| = r`, so the partial sums
/// over `r ≤ K` give the whole sweep. Returns the `(K, l2_error)` table and
/// the full result at the largest `K`.
pub fn reconstruct_sweep(
    q: &PotentialQ,
    f: &TargetFunction,
    k_values: &[i32],
    t_node_count: usize,
    window: (f64, f64),
    params: &ExpansionParams,
) -> Result<(Vec<(i32, f64)>, ExpansionResult)> {
    if !check_condition_2(q).satisfied {
        return Err(Error::Condition2Failed);
    }
    if t_node_count < 8 {
        return Err(Error::InvalidConfig("need at least 8 t-nodes".into()));
    }
    if k_values.is_empty() || k_values.iter().any(|&k| k < 0) {
        return Err(Error::InvalidConfig("truncation orders must be nonnegative".into()));
    }
    let k_max = *k_values.iter().max().unwrap();

    let rule = GaussLegendre::new(t_node_count);
    let t_nodes: Vec<(f64, f64)> = rule.nodes.iter().zip(&rule.weights).map(|(&n, &w)| (n, w)).collect();

    let breaks = q.breakpoints();
    let window_grid = Arc::new(ExtendedGrid::new(window.0, window.1, params.nodes_per_cell, &breaks));
    let base_grid = Arc::new(QuadGrid::on_interval(0.0, PI, 8, params.base_nodes_per_piece, &breaks));

    struct NodeOutput {
        rings: Vec<Vec<Vec2>>,
        coeffs: Vec<CoefficientEntry>,
        holes: Vec<ExpansionHole>,
    }

    let zero_ring = || vec![[C64::new(0.0, 0.0); 2]; window_grid.nodes.len()];

    let node_outputs: Vec<NodeOutput> = t_nodes
        .par_iter()
        .map(|&(t, wt)| -> Result<NodeOutput> {
            let mut rings: Vec<Vec<Vec2>> = (0..=k_max).map(|_| zero_ring()).collect();
            let mut coeffs = Vec::new();
            let mut holes = Vec::new();
            let search = eigenvalues_near_lattice(q, t, -k_max, k_max, params.tol)?;
            for slot in &search.missing {
                holes.push(ExpansionHole {
                    t,
                    k: slot.n,
                    j: slot.j,
                    reason: "no eigenvalue in search disc".into(),
                });
            }
            for ev in &search.eigenvalues {
                if ev.multiplicity > 1 {
                    holes.push(ExpansionHole {
                        t,
                        k: ev.n,
                        j: ev.j,
                        reason: "multiple eigenvalue".into(),
                    });
                    continue;
                }
                let pair = match crate::bloch::build_eigenpair(q, t, ev, &base_grid, params.tol) {
                    Ok(p) => p,
                    Err(Error::DegeneratePairing { alpha_abs }) => {
                        holes.push(ExpansionHole {
                            t,
                            k: ev.n,
                            j: ev.j,
                            reason: format!("degenerate pairing |α| = {alpha_abs:.3e}"),
                        });
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let a = coefficient(q, t, &pair, f, params.nodes_per_cell, params.tol)?;
                coeffs.push(CoefficientEntry { t, weight: wt, k: ev.n, j: ev.j, a });
                // Ψ on the window grid, extended quasi-periodically.
                let norm = pair.phi.norm_l2();
                if norm == 0.0 {
                    continue;
                }
                let psi = window_grid.sample(q, pair.phi.lambda, pair.phi.combo, t, params.tol)?;
                let factor = a * wt * 0.5 / norm;
                let ring = &mut rings[ev.n.unsigned_abs() as usize];
                for (dst, v) in ring.iter_mut().zip(&psi) {
                    dst[0] += v[0] * factor;
                    dst[1] += v[1] * factor;
                }
            }
            Ok(NodeOutput { rings, coeffs, holes })
        })
        .collect::<Result<Vec<_>>>()?;

    // Deterministic fold in t-node order.
    let mut rings: Vec<Vec<Vec2>> = (0..=k_max).map(|_| zero_ring()).collect();
    let mut coefficients = Vec::new();
    let mut holes = Vec::new();
    for out in node_outputs {
        for (dst_ring, src_ring) in rings.iter_mut().zip(&out.rings) {
            for (dst, src) in dst_ring.iter_mut().zip(src_ring) {
                dst[0] += src[0];
                dst[1] += src[1];
            }
        }
        coefficients.extend(out.coeffs);
        holes.extend(out.holes);
    }

    let f_samples: Vec<Vec2> = window_grid.nodes.iter().map(|&x| f.eval(x)).collect();
    let l2 = |recon: &[Vec2]| -> f64 {
        window_grid
            .weights
            .iter()
            .zip(recon.iter().zip(&f_samples))
            .map(|(&w, (r, fv))| w * ((r[0] - fv[0]).norm_sqr() + (r[1] - fv[1]).norm_sqr()))
            .sum::<f64>()
            .sqrt()
    };

    let mut sweep = Vec::new();
    let mut partial = zero_ring();
    let mut ks_sorted: Vec<i32> = k_values.to_vec();
    ks_sorted.sort_unstable();
    ks_sorted.dedup();
    let mut k_iter = ks_sorted.iter().peekable();
    let mut final_recon = zero_ring();
    for (r, ring) in rings.iter().enumerate() {
        for (dst, src) in partial.iter_mut().zip(ring) {
            dst[0] += src[0];
            dst[1] += src[1];
        }
        while let Some(&&k) = k_iter.peek() {
            if k as usize == r {
                sweep.push((k, l2(&partial)));
                if k == k_max {
                    final_recon = partial.clone();
                }
                k_iter.next();
            } else {
                break;
            }
        }
    }

    let l2_error = sweep
        .iter()
        .find(|(k, _)| *k == k_max)
        .map(|(_, e)| *e)
        .unwrap_or_else(|| l2(&partial));
    let complete = holes.is_empty();
    let result = ExpansionResult {
        k_max,
        t_nodes,
        coefficients,
        xgrid: window_grid.nodes.clone(),
        xweights: window_grid.weights.clone(),
        reconstruction: final_recon,
        l2_error,
        holes,
        complete,
    };
    Ok((sweep, result))
}
