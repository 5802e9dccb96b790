//! Eigenvalues and eigenfunctions of the fiber operators `L_t(Q)`.
//!
//! A number λ is an eigenvalue of `L_t(Q)` iff it is a root of the
//! characteristic function
//!
//! ```text
//! Δ(λ, t) = e^{2iπt} − e^{iπt} F(λ) + W(π, λ)
//! ```
//!
//! Roots are located either by argument-principle counting on rectangles
//! (no assumptions, finds everything with multiplicity) or by Newton from
//! the asymptotic lattice `2n ± (t + ib)` (fast path used everywhere the
//! perturbation-circle picture applies). Eigenfunctions come from the
//! fundamental-solution combination fixed by the boundary condition, adjoint
//! eigenfunctions from the conjugate-transpose potential at the conjugate
//! eigenvalue, and the biorthogonal pairing α scales the rank-one spectral
//! projections.

use crate::contour::{self, ComplexMap, Rect, Root, RootSearchOptions};
use crate::error::Error;
use crate::mat2::Vec2;
use crate::monodromy::{integrate_fundamental, integrate_monodromy_only, solution_trace};
use crate::potential::{check_condition_2, PotentialQ};
use crate::quad::QuadGrid;
use crate::{Result, C64};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// One eigenvalue of a fiber operator, tagged with its lattice index.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlochEigenvalue {
    pub t: f64,
    pub n: i32,
    /// Sequence index: 1 for the `2n − (t+ib)` family, 2 for `2n + (t+ib)`.
    pub j: u8,
    pub lambda: C64,
    pub multiplicity: usize,
    /// `|Δ(λ, t)|` at the reported eigenvalue.
    pub residual: f64,
}

/// Reference lattice point `2n + (−1)^j (t + ib)`.
pub fn lattice_point(n: i32, j: u8, t: f64, b: C64) -> C64 {
    let sign = if j == 1 { -1.0 } else { 1.0 };
    C64::new(2.0 * n as f64, 0.0) + (C64::new(t, 0.0) + C64::new(0.0, 1.0) * b) * sign
}

/// The characteristic function `λ ↦ Δ(λ, t)` for a fixed fiber.
pub struct CharacteristicFn<'q> {
    q: &'q PotentialQ,
    pub t: f64,
    tol: f64,
    e_ipt: C64,
    e_2ipt: C64,
    scale: f64,
}

impl<'q> CharacteristicFn<'q> {
    pub fn new(q: &'q PotentialQ, t: f64, tol: f64) -> Self {
        let e_ipt = C64::new(0.0, PI * t).exp();
        let w = (q.mean_b() * 2.0 * PI).exp();
        Self { q, t, tol, e_ipt, e_2ipt: e_ipt * e_ipt, scale: 1.0 + w.norm() }
    }

    pub fn root_options(&self) -> RootSearchOptions {
        RootSearchOptions {
            tol_delta: 1e-11 * self.scale,
            tol_step: 1e-12,
            // Measured Δ-evaluation noise is a few 1e-15·scale; 1e-12·scale
            // leaves two orders of headroom for rough potentials.
            noise_floor: 1e-12 * self.scale,
            ..RootSearchOptions::default()
        }
    }
}

impl ComplexMap for CharacteristicFn<'_> {
    fn eval(&self, lambda: C64) -> Result<C64> {
        let r = integrate_monodromy_only(self.q, lambda, self.tol)?;
        Ok(self.e_2ipt - self.e_ipt * r.m.trace() + r.det_m)
    }

    fn eval_with_derivative(&self, lambda: C64) -> Result<(C64, C64)> {
        let r = integrate_fundamental(self.q, lambda, self.tol)?;
        let delta = self.e_2ipt - self.e_ipt * r.m.trace() + r.det_m;
        // W is constant in λ in exact arithmetic; its computed derivative is
        // retained as a harmless O(ε) term.
        let ddelta = -self.e_ipt * r.dm_dlambda.trace() + r.m.det_derivative(&r.dm_dlambda);
        Ok((delta, ddelta))
    }

    fn scale(&self) -> f64 {
        self.scale
    }
}

/// `Δ(λ, t) = e^{2iπt} − e^{iπt}·F(λ) + W(π, λ)`.
pub fn char_value(q: &PotentialQ, lambda: C64, t: f64, tol: f64) -> Result<C64> {
    CharacteristicFn::new(q, t, tol).eval(lambda)
}

/// Assign lattice indices `(n, j)` to located roots by proximity to the
/// reference points, keeping each slot uniquely filled (nearest distance
/// wins; ties resolved scanning `n` ascending, then `j`).
fn assign_indices(roots: &[Root], t: f64, b: C64) -> Vec<(i32, u8)> {
    #[derive(Clone, Copy)]
    struct Cand {
        root: usize,
        n: i32,
        j: u8,
        dist: f64,
    }
    let mut cands = Vec::new();
    for (idx, root) in roots.iter().enumerate() {
        for j in [1u8, 2u8] {
            let sign = if j == 1 { -1.0 } else { 1.0 };
            let base = ((root.location.re - sign * t) / 2.0).round() as i32;
            for n in [base - 1, base, base + 1] {
                let dist = (root.location - lattice_point(n, j, t, b)).norm();
                cands.push(Cand { root: idx, n, j, dist });
            }
        }
    }
    cands.sort_by(|a, b| {
        a.dist
            .partial_cmp(&b.dist)
            .unwrap()
            .then(a.n.cmp(&b.n))
            .then(a.j.cmp(&b.j))
    });
    let mut assigned: Vec<Option<(i32, u8)>> = vec![None; roots.len()];
    let mut used: std::collections::HashSet<(i32, u8)> = std::collections::HashSet::new();
    for c in &cands {
        if assigned[c.root].is_some() || used.contains(&(c.n, c.j)) {
            continue;
        }
        assigned[c.root] = Some((c.n, c.j));
        used.insert((c.n, c.j));
    }
    // Slots may run out for exotic configurations; fall back to nearest.
    assigned
        .into_iter()
        .enumerate()
        .map(|(idx, slot)| {
            slot.unwrap_or_else(|| {
                let loc = roots[idx].location;
                let mut best = (0i32, 1u8, f64::INFINITY);
                for j in [1u8, 2u8] {
                    let sign = if j == 1 { -1.0 } else { 1.0 };
                    let n = ((loc.re - sign * t) / 2.0).round() as i32;
                    let d = (loc - lattice_point(n, j, t, b)).norm();
                    if d < best.2 {
                        best = (n, j, d);
                    }
                }
                (best.0, best.1)
            })
        })
        .collect()
}

/// All eigenvalues of `L_t(Q)` in a rectangle, counted with multiplicity
/// (argument-principle winding + bisection + Newton refinement).
pub fn eigenvalues_in_rect(q: &PotentialQ, t: f64, rect: Rect, tol: f64) -> Result<Vec<BlochEigenvalue>> {
    let map = CharacteristicFn::new(q, t, tol);
    let roots = contour::roots_in_rect(&map, rect, &map.root_options())?;
    let b = q.mean_b();
    let indices = assign_indices(&roots, t, b);
    let mut out: Vec<BlochEigenvalue> = roots
        .iter()
        .zip(indices)
        .map(|(root, (n, j))| BlochEigenvalue {
            t,
            n,
            j,
            lambda: root.location,
            multiplicity: root.multiplicity,
            residual: root.residual,
        })
        .collect();
    out.sort_by(|a, b| {
        a.n.cmp(&b.n)
            .then(a.j.cmp(&b.j))
            .then(a.lambda.re.partial_cmp(&b.lambda.re).unwrap())
    });
    Ok(out)
}

/// A lattice slot where no eigenvalue was found inside the search disc.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MissingSlot {
    pub n: i32,
    pub j: u8,
    pub center: C64,
}

/// Outcome of the lattice-guided eigenvalue search.
#[derive(Debug, Clone)]
pub struct LatticeSearch {
    pub eigenvalues: Vec<BlochEigenvalue>,
    pub missing: Vec<MissingSlot>,
    /// Set when the separation condition fails (index assignment unreliable).
    pub condition2_warning: bool,
}

/// For each `n ∈ [n_min, n_max]` and `j ∈ {1, 2}`, search the disc of radius
/// `min(1, |Re b|)` around the reference point `2n + (−1)^j (t+ib)` by Newton
/// from the center. Slots without a root become `missing` entries rather
/// than errors.
pub fn eigenvalues_near_lattice(
    q: &PotentialQ,
    t: f64,
    n_min: i32,
    n_max: i32,
    tol: f64,
) -> Result<LatticeSearch> {
    let b = q.mean_b();
    let condition2_warning = !check_condition_2(q).satisfied;
    let radius = if b.re.abs() > 1e-12 { b.re.abs().min(1.0) } else { 1.0 };
    let map = CharacteristicFn::new(q, t, tol);
    let opts = map.root_options();

    let slots: Vec<(i32, u8)> = (n_min..=n_max)
        .flat_map(|n| [(n, 1u8), (n, 2u8)])
        .collect();
    let found: Vec<std::result::Result<BlochEigenvalue, MissingSlot>> = slots
        .par_iter()
        .map(|&(n, j)| {
            let center = lattice_point(n, j, t, b);
            match locate_in_disc(&map, center, radius, &opts) {
                Some(root) => Ok(BlochEigenvalue {
                    t,
                    n,
                    j,
                    lambda: root.location,
                    multiplicity: root.multiplicity,
                    residual: root.residual,
                }),
                None => Err(MissingSlot { n, j, center }),
            }
        })
        .collect();

    let mut eigenvalues = Vec::new();
    let mut missing = Vec::new();
    for item in found {
        match item {
            Ok(ev) => eigenvalues.push(ev),
            Err(slot) => missing.push(slot),
        }
    }
    Ok(LatticeSearch { eigenvalues, missing, condition2_warning })
}

fn locate_in_disc(
    map: &CharacteristicFn<'_>,
    center: C64,
    radius: f64,
    opts: &RootSearchOptions,
) -> Option<Root> {
    let starts = [
        center,
        center + C64::new(0.3 * radius, 0.0),
        center - C64::new(0.3 * radius, 0.0),
        center + C64::new(0.0, 0.3 * radius),
        center - C64::new(0.0, 0.3 * radius),
    ];
    for start in starts {
        if let Ok(mut root) = contour::newton(map, start, 1, opts) {
            if (root.location - center).norm() <= radius * (1.0 + 1e-9) + 1e-12 {
                refine_multiplicity(map, &mut root);
                return Some(root);
            }
        }
    }
    // Fallback: exhaustive search on the disc's bounding box.
    let rect = Rect::new(
        center.re - radius,
        center.re + radius,
        center.im - radius,
        center.im + radius,
    );
    if let Ok(roots) = contour::roots_in_rect(map, rect, opts) {
        return roots
            .into_iter()
            .filter(|r| (r.location - center).norm() <= radius * (1.0 + 1e-9))
            .min_by(|a, b| {
                (a.location - center)
                    .norm()
                    .partial_cmp(&(b.location - center).norm())
                    .unwrap()
            });
    }
    None
}

/// Confirm simplicity through `|Δ'|`; a suspiciously flat derivative gets a
/// small-circle winding count instead.
fn refine_multiplicity(map: &CharacteristicFn<'_>, root: &mut Root) {
    if root.deriv_abs.is_nan() || root.deriv_abs > 1e-6 * map.scale() {
        return;
    }
    let r = 1e-3;
    if let Ok(w) = contour::winding_number(map, &|s| contour::circle_point(root.location, r, s), 24) {
        if w.winding >= 1 {
            root.multiplicity = w.winding as usize;
        }
    }
}

/// An eigenfunction (or adjoint eigenfunction) sampled on a quadrature grid.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    pub grid: Arc<QuadGrid>,
    pub values: Vec<Vec2>,
    /// Coefficients `(x1, x2)` of `Φ = x1·c + x2·s` in the fundamental basis.
    pub combo: (C64, C64),
    pub lambda: C64,
}

impl SampledFunction {
    pub fn norm_l2(&self) -> f64 {
        self.grid
            .sum_real(self.values.iter().map(|v| v[0].norm_sqr() + v[1].norm_sqr()))
            .sqrt()
    }

    /// L² inner product `(self, other) = ∫ ⟨self(x), other(x)⟩ dx`.
    pub fn inner(&self, other: &SampledFunction) -> C64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        self.grid.sum_complex(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(u, v)| u[0] * v[0].conj() + u[1] * v[1].conj()),
        )
    }

    pub fn scale(&mut self, factor: C64) {
        for v in &mut self.values {
            v[0] *= factor;
            v[1] *= factor;
        }
        self.combo.0 *= factor;
        self.combo.1 *= factor;
    }
}

/// Coefficients of the eigenfunction in the fundamental basis, from the
/// boundary-condition system. Uses the first row when `s1(π, λ)` is away
/// from zero, the second row otherwise; a diagonal monodromy picks the
/// matching column directly.
fn eigenfunction_combo(q: &PotentialQ, lambda: C64, t: f64, tol: f64) -> Result<(C64, C64)> {
    let r = integrate_fundamental(q, lambda, tol)?;
    let e_t = C64::new(0.0, PI * t).exp();
    let thr = 1e-8 * r.m.max_abs().max(1.0);
    let (c1, s1, c2, s2) = (r.m.a11, r.m.a12, r.m.a21, r.m.a22);
    if s1.norm() > thr {
        Ok((C64::new(1.0, 0.0), (e_t - c1) / s1))
    } else if c2.norm() > thr {
        Ok(((e_t - s2) / c2, C64::new(1.0, 0.0)))
    } else if (c1 - e_t).norm() <= thr {
        Ok((C64::new(1.0, 0.0), C64::new(0.0, 0.0)))
    } else if (s2 - e_t).norm() <= thr {
        Ok((C64::new(0.0, 0.0), C64::new(1.0, 0.0)))
    } else {
        Err(Error::DegenerateEigenvector { lambda })
    }
}

/// Eigenfunction `Φ` of `L_t(Q)` at a simple eigenvalue, sampled on `grid`.
pub fn eigenfunction(
    q: &PotentialQ,
    t: f64,
    ev: &BlochEigenvalue,
    grid: &Arc<QuadGrid>,
    normalize: bool,
    tol: f64,
) -> Result<SampledFunction> {
    let combo = eigenfunction_combo(q, ev.lambda, t, tol)?;
    let mut f = sample_combination(q, ev.lambda, combo, grid, tol)?;
    if normalize {
        let n = f.norm_l2();
        if n > 0.0 {
            f.scale(C64::new(1.0 / n, 0.0));
        }
    }
    Ok(f)
}

pub(crate) fn sample_combination(
    q: &PotentialQ,
    lambda: C64,
    combo: (C64, C64),
    grid: &Arc<QuadGrid>,
    tol: f64,
) -> Result<SampledFunction> {
    let tr = solution_trace(q, lambda, &grid.nodes, tol)?;
    let values = tr
        .c_values
        .iter()
        .zip(&tr.s_values)
        .map(|(c, s)| {
            [
                combo.0 * c[0] + combo.1 * s[0],
                combo.0 * c[1] + combo.1 * s[1],
            ]
        })
        .collect();
    Ok(SampledFunction { grid: grid.clone(), values, combo, lambda })
}

/// Adjoint eigenfunction `Φ*`: eigenfunction of `L_t(Q̄)` at the eigenvalue
/// nearest `conj(λ)` (they coincide in exact arithmetic).
pub fn adjoint_eigenfunction(
    q: &PotentialQ,
    t: f64,
    ev: &BlochEigenvalue,
    grid: &Arc<QuadGrid>,
    tol: f64,
) -> Result<(SampledFunction, C64)> {
    let q_adj = q.adjoint();
    let target = ev.lambda.conj();
    let map = CharacteristicFn::new(&q_adj, t, tol);
    let root = contour::newton(&map, target, ev.multiplicity.max(1), &map.root_options())
        .map_err(|_| Error::AdjointPairing { dist: f64::NAN, tol: 1e-6 })?;
    let dist = (root.location - target).norm();
    if dist > 1e-6 {
        return Err(Error::AdjointPairing { dist, tol: 1e-6 });
    }
    let combo = eigenfunction_combo(&q_adj, root.location, t, tol)?;
    let f = sample_combination(&q_adj, root.location, combo, grid, tol)?;
    Ok((f, root.location))
}

/// Biorthogonal pairing `α = (Φ, Φ*) = ∫ ⟨Φ(x), Φ*(x)⟩ dx`.
pub fn pairing_alpha(phi: &SampledFunction, phi_star: &SampledFunction) -> Result<C64> {
    if phi.values.len() != phi_star.values.len() {
        return Err(Error::InvalidConfig("pairing requires a common sample grid".into()));
    }
    let alpha = phi.inner(phi_star);
    if alpha.norm() < 1e-10 {
        return Err(Error::DegeneratePairing { alpha_abs: alpha.norm() });
    }
    Ok(alpha)
}

/// Eigenvalue with its eigenfunction, adjoint eigenfunction and pairing.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub eigenvalue: BlochEigenvalue,
    pub adjoint_lambda: C64,
    pub phi: SampledFunction,
    pub phi_star: SampledFunction,
    pub alpha: C64,
}

/// Assemble the full eigenpair at a simple eigenvalue.
pub fn build_eigenpair(
    q: &PotentialQ,
    t: f64,
    ev: &BlochEigenvalue,
    grid: &Arc<QuadGrid>,
    tol: f64,
) -> Result<Eigenpair> {
    let phi = eigenfunction(q, t, ev, grid, false, tol)?;
    let (phi_star, adjoint_lambda) = adjoint_eigenfunction(q, t, ev, grid, tol)?;
    let alpha = pairing_alpha(&phi, &phi_star)?;
    Ok(Eigenpair { eigenvalue: *ev, adjoint_lambda, phi, phi_star, alpha })
}

/// `‖Φ(π) − e^{iπt} Φ(0)‖ / ‖Φ(0)‖` for the eigenfunction at `ev`.
pub fn quasi_periodicity_defect(q: &PotentialQ, t: f64, ev: &BlochEigenvalue, tol: f64) -> Result<f64> {
    let combo = eigenfunction_combo(q, ev.lambda, t, tol)?;
    let tr = solution_trace(q, ev.lambda, &[0.0, PI], tol)?;
    let at = |i: usize| -> Vec2 {
        [
            combo.0 * tr.c_values[i][0] + combo.1 * tr.s_values[i][0],
            combo.0 * tr.c_values[i][1] + combo.1 * tr.s_values[i][1],
        ]
    };
    let v0 = at(0);
    let v1 = at(1);
    let e_t = C64::new(0.0, PI * t).exp();
    let num = ((v1[0] - e_t * v0[0]).norm_sqr() + (v1[1] - e_t * v0[1]).norm_sqr()).sqrt();
    let den = (v0[0].norm_sqr() + v0[1].norm_sqr()).sqrt();
    Ok(num / den.max(1e-300))
}

/// Leading asymptotic form of the eigenfunction:
/// `d_j e^{a(x)} e^{i((−1)^j 2n + t + ib)x}` with `d_1 = (1, i)`, `d_2 = (1, −i)`.
pub fn leading_eigenfunction(q: &PotentialQ, n: i32, j: u8, t: f64, x: f64) -> Vec2 {
    let b = q.mean_b();
    let sign = if j == 1 { -1.0 } else { 1.0 };
    let mu = C64::new(sign * 2.0 * n as f64 + t, 0.0) + C64::new(0.0, 1.0) * b;
    let a = q.accumulate_a(x).unwrap_or_else(|_| C64::new(0.0, 0.0));
    let phase = (a + C64::new(0.0, 1.0) * mu * x).exp();
    let d2 = C64::new(0.0, -sign);
    [phase, d2 * phase]
}

/// One row of the asymptotic-rate study.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateEntry {
    pub t: f64,
    pub n: i32,
    pub j: u8,
    /// `n · |λ_{n,j}(t) − (2n + (−1)^j (t+ib))|`
    pub r_val: f64,
    /// `n · ‖Φ_{n,j,t} − leading term‖_{L²}`
    pub r_fun: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem1Report {
    pub declined: bool,
    pub entries: Vec<RateEntry>,
    pub max_r_val: f64,
    pub max_r_fun: f64,
    pub slope_r_val: f64,
    pub slope_r_fun: f64,
    pub pass: bool,
}

/// Least-squares slope of `ln r` against `ln n` over per-`n` maxima.
/// Sequences at the numerical noise floor count as flat (slope 0).
fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let max_r = points.iter().map(|p| p.1).fold(0.0, f64::max);
    if max_r <= 1e-6 {
        return 0.0;
    }
    let filtered: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, r)| *r > 1e-12)
        .map(|&(n, r)| (n.ln(), r.ln()))
        .collect();
    if filtered.len() < 2 {
        return 0.0;
    }
    let m = filtered.len() as f64;
    let mx = filtered.iter().map(|p| p.0).sum::<f64>() / m;
    let my = filtered.iter().map(|p| p.1).sum::<f64>() / m;
    let num: f64 = filtered.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = filtered.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Asymptotic-rate verification: records `n`-scaled eigenvalue and
/// eigenfunction deviations from the reference lattice and leading terms;
/// passes when neither sequence trends upward (log-log slope ≤ 0.1).
pub fn verify_theorem1(
    q: &PotentialQ,
    t_grid: &[f64],
    n_range: (i32, i32),
    tol: f64,
) -> Result<Theorem1Report> {
    if !check_condition_2(q).satisfied {
        return Ok(Theorem1Report {
            declined: true,
            entries: Vec::new(),
            max_r_val: f64::NAN,
            max_r_fun: f64::NAN,
            slope_r_val: f64::NAN,
            slope_r_fun: f64::NAN,
            pass: false,
        });
    }
    let b = q.mean_b();
    let grid = Arc::new(QuadGrid::on_interval(0.0, PI, 8, 32, &q.breakpoints()));
    let tasks: Vec<(f64, i32, u8)> = t_grid
        .iter()
        .flat_map(|&t| ((n_range.0)..=(n_range.1)).flat_map(move |n| [(t, n, 1u8), (t, n, 2u8)]))
        .collect();
    let entries: Vec<RateEntry> = tasks
        .par_iter()
        .map(|&(t, n, j)| -> Result<RateEntry> {
            let map = CharacteristicFn::new(q, t, tol);
            let center = lattice_point(n, j, t, b);
            let root = contour::newton(&map, center, 1, &map.root_options())?;
            let nf = (n.abs().max(1)) as f64;
            let r_val = nf * (root.location - center).norm();
            let ev = BlochEigenvalue {
                t,
                n,
                j,
                lambda: root.location,
                multiplicity: 1,
                residual: root.residual,
            };
            let phi = eigenfunction(q, t, &ev, &grid, false, tol)?;
            let diff_sq: f64 = grid.sum_real(phi.values.iter().zip(&grid.nodes).map(|(v, &x)| {
                let lead = leading_eigenfunction(q, n, j, t, x);
                (v[0] - lead[0]).norm_sqr() + (v[1] - lead[1]).norm_sqr()
            }));
            Ok(RateEntry { t, n, j, r_val, r_fun: nf * diff_sq.sqrt() })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_n_val: std::collections::BTreeMap<i32, f64> = Default::default();
    let mut per_n_fun: std::collections::BTreeMap<i32, f64> = Default::default();
    for e in &entries {
        let v = per_n_val.entry(e.n).or_insert(0.0);
        *v = v.max(e.r_val);
        let f = per_n_fun.entry(e.n).or_insert(0.0);
        *f = f.max(e.r_fun);
    }
    let val_pts: Vec<(f64, f64)> = per_n_val.iter().map(|(&n, &r)| (n.abs().max(1) as f64, r)).collect();
    let fun_pts: Vec<(f64, f64)> = per_n_fun.iter().map(|(&n, &r)| (n.abs().max(1) as f64, r)).collect();
    let slope_r_val = log_log_slope(&val_pts);
    let slope_r_fun = log_log_slope(&fun_pts);
    let max_r_val = entries.iter().map(|e| e.r_val).fold(0.0, f64::max);
    let max_r_fun = entries.iter().map(|e| e.r_fun).fold(0.0, f64::max);
    Ok(Theorem1Report {
        declined: false,
        entries,
        max_r_val,
        max_r_fun,
        slope_r_val,
        slope_r_fun,
        pass: slope_r_val <= 0.1 && slope_r_fun <= 0.1,
    })
}

/// Deterministic CSV table of eigenvalues ordered by `(t, n, j)`.
pub fn eigenvalue_table_csv(rows: &[BlochEigenvalue]) -> String {
    let mut sorted: Vec<&BlochEigenvalue> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.t.partial_cmp(&b.t)
            .unwrap()
            .then(a.n.cmp(&b.n))
            .then(a.j.cmp(&b.j))
    });
    let mut out = String::from("t,n,j,re_lambda,im_lambda,multiplicity,residual\n");
    for ev in sorted {
        out.push_str(&format!(
            "{:.16e},{},{},{:.16e},{:.16e},{},{:.16e}\n",
            ev.t, ev.n, ev.j, ev.lambda.re, ev.lambda.im, ev.multiplicity, ev.residual
        ));
    }
    out
}

/// Parse the table written by [`eigenvalue_table_csv`].
pub fn parse_eigenvalue_table(csv: &str) -> Result<Vec<BlochEigenvalue>> {
    let mut out = Vec::new();
    for (i, line) in csv.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::InvalidConfig(format!("CSV row {i}: expected 7 fields")));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::InvalidConfig(format!("CSV row {i}: {e}")))
        };
        out.push(BlochEigenvalue {
            t: parse_f(fields[0])?,
            n: fields[1]
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("CSV row {i}: {e}")))?,
            j: fields[2]
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("CSV row {i}: {e}")))?,
            lambda: C64::new(parse_f(fields[3])?, parse_f(fields[4])?),
            multiplicity: fields[5]
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("CSV row {i}: {e}")))?,
            residual: parse_f(fields[6])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{build_qb, PeriodicFunction};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn test_grid(q: &PotentialQ) -> Arc<QuadGrid> {
        Arc::new(QuadGrid::on_interval(0.0, PI, 8, 32, &q.breakpoints()))
    }

    #[test]
    fn char_value_zero_potential_factorizes() {
        let q = PotentialQ::zero();
        let t = 0.3;
        // λ = t is an eigenvalue of the free fiber operator.
        let v = char_value(&q, c(0.3, 0.0), t, 1e-11).unwrap();
        assert!(v.norm() < 1e-9, "expected root, |Δ| = {}", v.norm());
        // Closed-form factorization at a non-eigenvalue:
        // Δ = (e^{iπt} − e^{iπλ})(e^{iπt} − e^{−iπλ}).
        let lam = c(0.5, 0.0);
        let e_t = c(0.0, PI * t).exp();
        let expect = (e_t - (c(0.0, PI) * lam).exp()) * (e_t - (c(0.0, -PI) * lam).exp());
        let v = char_value(&q, lam, t, 1e-11).unwrap();
        assert!((v - expect).norm() < 1e-9);
    }

    #[test]
    fn char_value_reference_eigenvalues_are_roots() {
        let b = c(1.0, 0.4);
        let q = build_qb(b);
        for t in [0.25, -0.6] {
            for n in [-2, 0, 3] {
                let lam = lattice_point(n, 2, t, b);
                let v = char_value(&q, lam, t, 1e-11).unwrap();
                assert!(v.norm() < 1e-8 * (1.0 + (b * 2.0 * PI).exp().norm()));
            }
        }
    }

    #[test]
    fn zero_potential_eigenvalues_in_rect() {
        let q = PotentialQ::zero();
        let t = 0.3;
        let evs = eigenvalues_in_rect(&q, t, Rect::new(-1.0, 5.0, -1.0, 1.0), 1e-11).unwrap();
        // {2n ± t} ∩ [−1, 5]
        let expect = [-0.3, 0.3, 1.7, 2.3, 3.7, 4.3];
        assert_eq!(evs.len(), expect.len());
        let mut found: Vec<f64> = evs.iter().map(|e| e.lambda.re).collect();
        found.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (f, e) in found.iter().zip(expect) {
            assert_abs_diff_eq!(*f, e, epsilon = 1e-9);
        }
        for ev in &evs {
            assert!(ev.lambda.im.abs() < 1e-9);
            assert_eq!(ev.multiplicity, 1);
            // Index must reproduce the eigenvalue: λ = 2n + (−1)^j t.
            let sign = if ev.j == 1 { -1.0 } else { 1.0 };
            assert_abs_diff_eq!(ev.lambda.re, 2.0 * ev.n as f64 + sign * t, epsilon = 1e-8);
        }
    }

    #[test]
    fn constant_potential_eigenvalues_match_reference_lattice() {
        let b = c(1.0, 0.0);
        let q = build_qb(b);
        let t = 0.5;
        let evs = eigenvalues_in_rect(&q, t, Rect::new(-1.0, 5.0, -2.0, 2.0), 1e-11).unwrap();
        // 2n ± (0.5 + i) intersected with the rectangle.
        let mut expect = vec![
            c(0.5, 1.0),
            c(2.5, 1.0),
            c(4.5, 1.0),
            c(-0.5, -1.0),
            c(1.5, -1.0),
            c(3.5, -1.0),
        ];
        expect.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        let mut found: Vec<C64> = evs.iter().map(|e| e.lambda).collect();
        found.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert_eq!(found.len(), expect.len());
        for (f, e) in found.iter().zip(&expect) {
            assert!((f - e).norm() < 1e-9, "{f} vs {e}");
        }
    }

    #[test]
    fn winding_around_single_reference_eigenvalue_is_one() {
        let b = c(1.0, 0.0);
        let q = build_qb(b);
        let map = CharacteristicFn::new(&q, 0.0, 1e-11);
        let center = c(0.0, 1.0); // t + ib = i at t = 0
        let w = contour::winding_number(&map, &|s| contour::circle_point(center, 0.3, s), 24).unwrap();
        assert_eq!(w.winding, 1);
    }

    #[test]
    fn lattice_search_hits_reference_points_exactly() {
        let b = c(1.2, 0.0);
        let q = build_qb(b);
        let res = eigenvalues_near_lattice(&q, 0.5, 3, 3, 1e-11).unwrap();
        assert!(!res.condition2_warning);
        assert!(res.missing.is_empty());
        let ev = res.eigenvalues.iter().find(|e| e.j == 2).unwrap();
        assert!((ev.lambda - c(6.5, 1.2)).norm() < 1e-9);
        assert_eq!(ev.multiplicity, 1);
    }

    #[test]
    fn lattice_search_warns_without_separation() {
        let res = eigenvalues_near_lattice(&PotentialQ::zero(), 0.3, 0, 1, 1e-10).unwrap();
        assert!(res.condition2_warning);
        assert!(!res.eigenvalues.is_empty());
    }

    #[test]
    fn perturbed_lattice_stays_within_unit_disc() {
        let mut q = build_qb(c(1.2, 0.0));
        q.a1 = PeriodicFunction::from_fourier(&[(1, c(0.05, 0.0))]);
        let res = eigenvalues_near_lattice(&q, 0.5, 5, 12, 1e-10).unwrap();
        assert!(res.missing.is_empty());
        let b = q.mean_b();
        for ev in &res.eigenvalues {
            let center = lattice_point(ev.n, ev.j, 0.5, b);
            assert!((ev.lambda - center).norm() <= 1.0);
            assert_eq!(ev.multiplicity, 1);
        }
    }

    #[test]
    fn eigenfunction_closed_form_zero_potential() {
        // t = 0.3, λ = 2.3: Φ ∝ (1, −i) e^{i·2.3·x}.
        let q = PotentialQ::zero();
        let t = 0.3;
        let ev = BlochEigenvalue { t, n: 1, j: 2, lambda: c(2.3, 0.0), multiplicity: 1, residual: 0.0 };
        let grid = test_grid(&q);
        let phi = eigenfunction(&q, t, &ev, &grid, false, 1e-11).unwrap();
        for (v, &x) in phi.values.iter().zip(&grid.nodes) {
            let e = (c(0.0, 2.3) * x).exp();
            assert!((v[0] - e).norm() < 1e-9);
            assert!((v[1] - c(0.0, -1.0) * e).norm() < 1e-9);
        }
        let defect = quasi_periodicity_defect(&q, t, &ev, 1e-11).unwrap();
        assert!(defect <= 1e-8);
    }

    #[test]
    fn eigenfunction_closed_form_constant_potential() {
        let b = c(1.2, 0.0);
        let q = build_qb(b);
        let t = 0.5;
        let n = 2;
        let ev = BlochEigenvalue {
            t,
            n,
            j: 2,
            lambda: lattice_point(n, 2, t, b),
            multiplicity: 1,
            residual: 0.0,
        };
        let grid = test_grid(&q);
        let phi = eigenfunction(&q, t, &ev, &grid, false, 1e-11).unwrap();
        for (v, &x) in phi.values.iter().zip(&grid.nodes) {
            let e = (c(0.0, 2.0 * n as f64 + t) * x).exp();
            assert!((v[0] - e).norm() < 1e-8);
            assert!((v[1] - c(0.0, -1.0) * e).norm() < 1e-8);
        }
    }

    #[test]
    fn adjoint_pairing_reproduces_conjugate_lattice() {
        let b = c(1.2, 0.3);
        let q = build_qb(b);
        let t = 0.4;
        let n = 1;
        let ev = BlochEigenvalue {
            t,
            n,
            j: 2,
            lambda: lattice_point(n, 2, t, b),
            multiplicity: 1,
            residual: 0.0,
        };
        let grid = test_grid(&q);
        let (phi_star, mu) = adjoint_eigenfunction(&q, t, &ev, &grid, 1e-11).unwrap();
        // Adjoint eigenvalue 2n + t − i·conj(b) = conj(λ).
        assert!((mu - ev.lambda.conj()).norm() < 1e-9);
        for (v, &x) in phi_star.values.iter().zip(&grid.nodes) {
            let e = (c(0.0, 2.0 * n as f64 + t) * x).exp();
            assert!((v[0] - e).norm() < 1e-8);
            assert!((v[1] - c(0.0, -1.0) * e).norm() < 1e-8);
        }
    }

    #[test]
    fn pairing_alpha_constant_potential_is_two_pi() {
        let b = c(1.2, 0.0);
        let q = build_qb(b);
        let t = 0.5;
        let grid = test_grid(&q);
        for (n, j) in [(0, 1), (0, 2), (3, 2), (-2, 1)] {
            let ev = BlochEigenvalue {
                t,
                n,
                j,
                lambda: lattice_point(n, j, t, b),
                multiplicity: 1,
                residual: 0.0,
            };
            let pair = build_eigenpair(&q, t, &ev, &grid, 1e-11).unwrap();
            assert!((pair.alpha - c(2.0 * PI, 0.0)).norm() < 1e-7, "α = {}", pair.alpha);
        }
    }

    #[test]
    fn cross_pairing_vanishes_for_distinct_indices() {
        let b = c(1.2, 0.0);
        let q = build_qb(b);
        let t = 0.5;
        let grid = test_grid(&q);
        let mk = |n: i32, j: u8| BlochEigenvalue {
            t,
            n,
            j,
            lambda: lattice_point(n, j, t, b),
            multiplicity: 1,
            residual: 0.0,
        };
        let phi = eigenfunction(&q, t, &mk(1, 2), &grid, false, 1e-11).unwrap();
        let (star_other, _) = adjoint_eigenfunction(&q, t, &mk(2, 2), &grid, 1e-11).unwrap();
        let cross = phi.inner(&star_other);
        assert!(cross.norm() < 1e-9, "cross pairing {}", cross.norm());
    }

    #[test]
    fn adjoint_spectrum_is_conjugate_of_spectrum() {
        let mut q = build_qb(c(0.8, 0.2));
        q.a1 = PeriodicFunction::from_fourier(&[(1, c(0.15, 0.1))]);
        q.a3 = q.a3.add(&PeriodicFunction::from_fourier(&[(-1, c(0.0, 0.2))]));
        let t = 0.35;
        let evs = eigenvalues_in_rect(&q, t, Rect::new(-1.0, 3.0, -2.0, 2.0), 1e-10).unwrap();
        let adj = eigenvalues_in_rect(&q.adjoint(), t, Rect::new(-1.0, 3.0, -2.0, 2.0), 1e-10).unwrap();
        assert_eq!(evs.len(), adj.len());
        assert!(!evs.is_empty());
        for ev in &evs {
            let target = ev.lambda.conj();
            let nearest = adj
                .iter()
                .map(|a| (a.lambda - target).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-8, "no conjugate partner for {}", ev.lambda);
        }
    }

    #[test]
    fn theorem1_rates_for_reference_potential_are_zero() {
        let q = build_qb(c(1.2, 0.0));
        let report = verify_theorem1(&q, &[0.3, -0.9], (4, 8), 1e-11).unwrap();
        assert!(!report.declined);
        assert!(report.max_r_val < 1e-7, "r_val = {}", report.max_r_val);
        assert!(report.pass);

        let declined = verify_theorem1(&PotentialQ::zero(), &[0.3], (4, 6), 1e-10).unwrap();
        assert!(declined.declined);
    }

    #[test]
    fn diagonal_perturbation_rotates_eigenfunction_phase() {
        // A zero-mean diagonal perturbation keeps the eigenvalue lattice but
        // multiplies the eigenfunction's leading term by e^{−iθ(x)} with
        // θ = ½∫(a1+a4): the deviation from the unrotated leading term
        // plateaus while the rotated one keeps shrinking like 1/n.
        let eps = 0.1;
        let mut q = build_qb(c(1.2, 0.0));
        q.a1 = PeriodicFunction::from_fourier(&[(1, c(eps, 0.0))]);
        let t = 0.3;
        let grid = test_grid(&q);
        let b = q.mean_b();
        let theta = |x: f64| -> C64 {
            // ½ ∫ εe^{i2ξ} dξ = ε(e^{i2x} − 1)/(4i)
            c(eps, 0.0) * ((c(0.0, 2.0) * x).exp() - 1.0) / c(0.0, 4.0)
        };
        let mut raw = Vec::new();
        let mut rotated = Vec::new();
        for n in [6, 12, 24] {
            let map = CharacteristicFn::new(&q, t, 1e-11);
            let root = contour::newton(&map, lattice_point(n, 2, t, b), 1, &map.root_options()).unwrap();
            let ev = BlochEigenvalue {
                t,
                n,
                j: 2,
                lambda: root.location,
                multiplicity: 1,
                residual: root.residual,
            };
            let phi = eigenfunction(&q, t, &ev, &grid, false, 1e-11).unwrap();
            let mut raw_sq = 0.0;
            let mut rot_sq = 0.0;
            for (v, (&x, &w)) in phi.values.iter().zip(grid.nodes.iter().zip(&grid.weights)) {
                let lead = leading_eigenfunction(&q, n, 2, t, x);
                let gauge = (-c(0.0, 1.0) * theta(x)).exp();
                raw_sq += w * ((v[0] - lead[0]).norm_sqr() + (v[1] - lead[1]).norm_sqr());
                rot_sq += w * ((v[0] - gauge * lead[0]).norm_sqr() + (v[1] - gauge * lead[1]).norm_sqr());
            }
            raw.push(raw_sq.sqrt());
            rotated.push(rot_sq.sqrt());
        }
        // Rotated leading term: O(1/n) decay. Raw leading term: plateau.
        assert!(rotated[2] < rotated[0] / 2.5, "rotated: {rotated:?}");
        assert!(raw[2] > rotated[2] * 5.0, "raw {raw:?} vs rotated {rotated:?}");
        assert!(raw[2] > 0.5 * raw[0], "raw deviation should plateau: {raw:?}");
    }

    #[test]
    fn eigenvalue_csv_roundtrip_is_bit_identical() {
        let b = c(1.2, 0.0);
        let q = build_qb(b);
        let res = eigenvalues_near_lattice(&q, 0.5, -1, 1, 1e-10).unwrap();
        let csv = eigenvalue_table_csv(&res.eigenvalues);
        let parsed = parse_eigenvalue_table(&csv).unwrap();
        let csv2 = eigenvalue_table_csv(&parsed);
        assert_eq!(csv, csv2);
    }
}
