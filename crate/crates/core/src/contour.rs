//! Argument-principle machinery: adaptive winding numbers along closed
//! contours and root isolation in rectangles by bisection plus Newton
//! refinement.
//!
//! The map under study is expensive (each evaluation integrates the
//! fundamental system over a period), so sampling is adaptive: segments are
//! bisected until adjacent phase differences stay below π/2.

use crate::error::Error;
use crate::{Result, C64};
use rayon::prelude::*;

/// A holomorphic map together with its derivative, e.g. `λ ↦ Δ(λ, t)`.
pub trait ComplexMap: Sync {
    fn eval(&self, z: C64) -> Result<C64>;
    fn eval_with_derivative(&self, z: C64) -> Result<(C64, C64)>;
    /// Magnitude scale for convergence thresholds.
    fn scale(&self) -> f64 {
        1.0
    }
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
}

impl Rect {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Self {
        Self { re0, re1, im0, im1 }
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.re0 + self.re1), 0.5 * (self.im0 + self.im1))
    }

    pub fn width(&self) -> f64 {
        self.re1 - self.re0
    }

    pub fn height(&self) -> f64 {
        self.im1 - self.im0
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.width() + self.height())
    }

    pub fn contains(&self, z: C64, slack: f64) -> bool {
        z.re >= self.re0 - slack
            && z.re <= self.re1 + slack
            && z.im >= self.im0 - slack
            && z.im <= self.im1 + slack
    }

    pub fn inflate(&self, d: f64) -> Self {
        Self::new(self.re0 - d, self.re1 + d, self.im0 - d, self.im1 + d)
    }

    /// Boundary point at parameter `s ∈ [0, 1)`, counterclockwise from the
    /// bottom-left corner.
    pub fn boundary_point(&self, s: f64) -> C64 {
        let w = self.width();
        let h = self.height();
        let per = self.perimeter();
        let mut d = s.rem_euclid(1.0) * per;
        if d < w {
            return C64::new(self.re0 + d, self.im0);
        }
        d -= w;
        if d < h {
            return C64::new(self.re1, self.im0 + d);
        }
        d -= h;
        if d < w {
            return C64::new(self.re1 - d, self.im1);
        }
        d -= w;
        C64::new(self.re0, self.im1 - d)
    }
}

/// Closed circle path.
pub fn circle_point(center: C64, radius: f64, s: f64) -> C64 {
    let ang = 2.0 * std::f64::consts::PI * s;
    center + C64::new(radius * ang.cos(), radius * ang.sin())
}

/// Outcome of a winding-number computation.
#[derive(Debug, Clone, Copy)]
pub struct WindingResult {
    pub winding: i64,
    /// Smallest `|f|` seen over all samples (initial and refined).
    pub min_abs: f64,
    pub evals: usize,
}

const MAX_REFINE_DEPTH: usize = 30;

/// Winding number of `map` along the closed path `s ↦ path(s)`, `s ∈ [0, 1)`.
///
/// Starts from `n0` equispaced samples (evaluated in parallel) and bisects
/// any segment whose endpoint phases differ by more than π/2.
pub fn winding_number<M: ComplexMap>(
    map: &M,
    path: &(dyn Fn(f64) -> C64 + Sync),
    n0: usize,
) -> Result<WindingResult> {
    let n0 = n0.max(8);
    let params: Vec<f64> = (0..n0).map(|i| i as f64 / n0 as f64).collect();
    let values: Vec<C64> = params
        .par_iter()
        .map(|&s| map.eval(path(s)))
        .collect::<Result<Vec<_>>>()?;

    let mut min_abs = f64::INFINITY;
    for v in &values {
        min_abs = min_abs.min(v.norm());
    }
    if min_abs == 0.0 {
        return Err(Error::ContourOnRoot { min_abs, suggested_jitter: 1e-6 });
    }

    let mut evals = n0;
    let mut total_phase = 0.0;
    for i in 0..n0 {
        let (s1, f1) = (params[i], values[i]);
        let (s2, f2) = if i + 1 < n0 { (params[i + 1], values[i + 1]) } else { (1.0, values[0]) };
        total_phase += refine_segment(map, path, s1, f1, s2, f2, 0, &mut min_abs, &mut evals)?;
    }

    let winding = (total_phase / (2.0 * std::f64::consts::PI)).round();
    let residual = (total_phase - winding * 2.0 * std::f64::consts::PI).abs();
    if residual > 0.3 {
        return Err(Error::WindingNonconvergence { residual });
    }
    Ok(WindingResult { winding: winding as i64, min_abs, evals })
}

#[allow(clippy::too_many_arguments)]
fn refine_segment<M: ComplexMap>(
    map: &M,
    path: &(dyn Fn(f64) -> C64 + Sync),
    s1: f64,
    f1: C64,
    s2: f64,
    f2: C64,
    depth: usize,
    min_abs: &mut f64,
    evals: &mut usize,
) -> Result<f64> {
    let d = (f2 / f1).arg();
    if d.abs() <= std::f64::consts::FRAC_PI_2 && depth > 0 {
        return Ok(d);
    }
    if d.abs() <= 0.1 && depth == 0 {
        return Ok(d);
    }
    if depth >= MAX_REFINE_DEPTH {
        return Err(Error::ContourOnRoot {
            min_abs: *min_abs,
            suggested_jitter: (path(s2) - path(s1)).norm().max(1e-9),
        });
    }
    let sm = 0.5 * (s1 + s2);
    let fm = map.eval(path(sm))?;
    *evals += 1;
    *min_abs = min_abs.min(fm.norm());
    if fm.norm() == 0.0 {
        return Err(Error::ContourOnRoot { min_abs: 0.0, suggested_jitter: 1e-6 });
    }
    Ok(refine_segment(map, path, s1, f1, sm, fm, depth + 1, min_abs, evals)?
        + refine_segment(map, path, sm, fm, s2, f2, depth + 1, min_abs, evals)?)
}

/// A located root with its multiplicity (from the winding count) and the
/// residual `|f|` at the reported point.
#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub location: C64,
    pub multiplicity: usize,
    pub residual: f64,
    /// `|f'|` near the root (NaN when not evaluated); a simple root has this
    /// well away from zero.
    pub deriv_abs: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct RootSearchOptions {
    /// Convergence target for `|f|`, already scaled by the caller.
    pub tol_delta: f64,
    /// Newton step convergence target.
    pub tol_step: f64,
    /// Boxes below this diameter are treated as root clusters.
    pub cluster_size: f64,
    /// Initial boundary samples per unit of perimeter.
    pub samples_per_unit: f64,
    /// Absolute |f| level below which values are indistinguishable from
    /// evaluation noise. A pair of roots whose midpoint |f| sits under this
    /// floor is reported as one double root (noise splits an exact double
    /// into a pair at distance ~sqrt(noise/|f''|)).
    pub noise_floor: f64,
}

impl Default for RootSearchOptions {
    fn default() -> Self {
        Self {
            tol_delta: 1e-11,
            tol_step: 1e-12,
            cluster_size: 1e-5,
            samples_per_unit: 8.0,
            noise_floor: 1e-14,
        }
    }
}

/// Newton iteration for a root of multiplicity `mult` (`λ ← λ − m·f/f'`).
pub fn newton<M: ComplexMap>(
    map: &M,
    start: C64,
    mult: usize,
    opts: &RootSearchOptions,
) -> Result<Root> {
    let mut z = start;
    let mut last_abs = f64::INFINITY;
    for _ in 0..80 {
        let (f, fp) = map.eval_with_derivative(z)?;
        last_abs = f.norm();
        if fp.norm() == 0.0 {
            break;
        }
        let step = f / fp * (mult as f64);
        z -= step;
        if last_abs <= opts.tol_delta && step.norm() < opts.tol_step {
            let f_final = map.eval(z)?;
            return Ok(Root {
                location: z,
                multiplicity: mult,
                residual: f_final.norm(),
                deriv_abs: fp.norm(),
            });
        }
        // Noise floor: the step stalls below the representable resolution.
        if step.norm() < 1e-16 * (1.0 + z.norm()) && last_abs <= 100.0 * opts.tol_delta {
            return Ok(Root {
                location: z,
                multiplicity: mult,
                residual: last_abs,
                deriv_abs: fp.norm(),
            });
        }
    }
    Err(Error::NewtonDiverged { start, last_abs })
}

/// Newton iteration on `f'` (simple root of the derivative at a double root
/// of `f`); the second derivative is taken by central differences of `f'`.
fn newton_on_derivative<M: ComplexMap>(map: &M, start: C64, opts: &RootSearchOptions) -> Result<C64> {
    let mut z = start;
    let h = 1e-6;
    for _ in 0..60 {
        let (_, fp) = map.eval_with_derivative(z)?;
        let (_, fp_plus) = map.eval_with_derivative(z + C64::new(h, 0.0))?;
        let (_, fp_minus) = map.eval_with_derivative(z - C64::new(h, 0.0))?;
        let fpp = (fp_plus - fp_minus) / (2.0 * h);
        if fpp.norm() == 0.0 {
            break;
        }
        let step = fp / fpp;
        z -= step;
        if step.norm() < opts.tol_step.max(1e-13) {
            return Ok(z);
        }
    }
    Ok(z)
}

/// All roots of `map` inside `rect`, counted with multiplicity. The boundary
/// is jittered (inflated) and retried when it passes too close to a root, and
/// the located multiplicities must add up to the boundary winding count.
pub fn roots_in_rect<M: ComplexMap>(map: &M, rect: Rect, opts: &RootSearchOptions) -> Result<Vec<Root>> {
    let mut last_err = None;
    for attempt in 0..5 {
        let jitter = attempt as f64 * 3.1e-7 * (1.0 + rect.diameter());
        let r = rect.inflate(jitter);
        match subdivide(map, r, opts, 0) {
            Ok((mut roots, total)) => {
                let counted: usize = roots.iter().map(|r| r.multiplicity).sum();
                if counted as i64 != total {
                    last_err = Some(Error::WindingNonconvergence { residual: (counted as i64 - total) as f64 });
                    continue;
                }
                roots.retain(|root| rect.contains(root.location, 1e-7 + jitter));
                dedup_roots(&mut roots);
                coalesce_noise_pairs(map, &mut roots, opts)?;
                return Ok(roots);
            }
            Err(e @ (Error::ContourOnRoot { .. } | Error::WindingNonconvergence { .. })) => {
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or(Error::WindingNonconvergence { residual: f64::NAN }))
}

fn rect_winding<M: ComplexMap>(map: &M, rect: Rect, opts: &RootSearchOptions) -> Result<WindingResult> {
    let n0 = ((rect.perimeter() * opts.samples_per_unit).ceil() as usize).clamp(16, 4096);
    winding_number(map, &|s| rect.boundary_point(s), n0)
}

fn subdivide<M: ComplexMap>(map: &M, rect: Rect, opts: &RootSearchOptions, depth: usize) -> Result<(Vec<Root>, i64)> {
    let w = rect_winding(map, rect, opts)?.winding;
    Ok((collect_roots(map, rect, w, opts, depth)?, w))
}

fn collect_roots<M: ComplexMap>(
    map: &M,
    rect: Rect,
    w: i64,
    opts: &RootSearchOptions,
    depth: usize,
) -> Result<Vec<Root>> {
    if w == 0 {
        return Ok(Vec::new());
    }
    if w < 0 {
        // Δ is holomorphic; a negative count means the contour failed.
        return Err(Error::WindingNonconvergence { residual: w as f64 });
    }
    // Containment slack: tight, so sibling boxes cannot both claim a root.
    let slack = 1e-9 * (1.0 + rect.center().norm());
    if w == 1 {
        if let Ok(root) = newton(map, rect.center(), 1, opts) {
            if rect.contains(root.location, slack) {
                return Ok(vec![root]);
            }
        }
    }
    // A pair in a moderately small box: try the local quadratic model before
    // bisecting all the way down.
    if w == 2 && rect.diameter() <= 0.5 {
        if let Some(roots) = resolve_cluster(map, rect, 2, opts)? {
            if roots.iter().all(|r| rect.contains(r.location, slack)) {
                return Ok(roots);
            }
        }
    }
    if rect.diameter() <= opts.cluster_size {
        if let Some(roots) = resolve_cluster(map, rect, w as usize, opts)? {
            return Ok(roots);
        }
        // Best effort: report the centroid with the counted multiplicity.
        let center = rect.center();
        return Ok(vec![Root {
            location: center,
            multiplicity: w as usize,
            residual: map.eval(center)?.norm(),
            deriv_abs: f64::NAN,
        }]);
    }
    if depth >= 64 {
        return Err(Error::WindingNonconvergence { residual: f64::NAN });
    }

    for &frac in &[0.5, 0.53, 0.47, 0.57, 0.41] {
        let (ra, rb) = if rect.width() >= rect.height() {
            let cut = rect.re0 + frac * rect.width();
            (
                Rect::new(rect.re0, cut, rect.im0, rect.im1),
                Rect::new(cut, rect.re1, rect.im0, rect.im1),
            )
        } else {
            let cut = rect.im0 + frac * rect.height();
            (
                Rect::new(rect.re0, rect.re1, rect.im0, cut),
                Rect::new(rect.re0, rect.re1, cut, rect.im1),
            )
        };
        let wa_res = match rect_winding(map, ra, opts) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let wb_res = match rect_winding(map, rb, opts) {
            Ok(r) => r,
            Err(_) => continue,
        };
        // A near-vanishing |Δ| on a cut means the cut runs between the
        // members of a noise-split multiple root; pick another cut so the
        // cluster stays intact and gets resolved through the derivative.
        let cut_floor = 1e-12 * map.scale();
        if wa_res.min_abs < cut_floor || wb_res.min_abs < cut_floor {
            continue;
        }
        if wa_res.winding + wb_res.winding != w {
            continue;
        }
        let mut roots = collect_roots(map, ra, wa_res.winding, opts, depth + 1)?;
        roots.extend(collect_roots(map, rb, wb_res.winding, opts, depth + 1)?);
        return Ok(roots);
    }
    Err(Error::ContourOnRoot { min_abs: f64::NAN, suggested_jitter: 1e-6 * (1.0 + rect.diameter()) })
}

/// A box with winding `w ≥ 2`: either a genuine multiple root or a cluster
/// of close simple roots. A double root is pinned as the simple root of
/// `f'`; a near-double pair is split through the local quadratic model and
/// each member polished separately. `None` means unresolved (keep bisecting).
fn resolve_cluster<M: ComplexMap>(
    map: &M,
    rect: Rect,
    w: usize,
    opts: &RootSearchOptions,
) -> Result<Option<Vec<Root>>> {
    let center = rect.center();
    if w == 1 {
        if let Ok(r) = newton(map, center, 1, opts) {
            return Ok(Some(vec![r]));
        }
        // Newton from near the midpoint of a noise-split double bounces
        // between the two basins; if the derivative root carries a
        // noise-level |f|, report it (the sibling box does the same and the
        // two reports merge into one double root).
        if let Ok(z) = newton_on_derivative(map, center, opts) {
            let (f, fp) = map.eval_with_derivative(z)?;
            if f.norm() <= opts.noise_floor {
                return Ok(Some(vec![Root {
                    location: z,
                    multiplicity: 1,
                    residual: f.norm(),
                    deriv_abs: fp.norm(),
                }]));
            }
        }
        return Ok(Some(vec![Root {
            location: center,
            multiplicity: 1,
            residual: map.eval(center)?.norm(),
            deriv_abs: f64::NAN,
        }]));
    }
    let z_star = newton_on_derivative(map, center, opts)?;
    let (f_star, fp_star) = map.eval_with_derivative(z_star)?;
    if f_star.norm() <= opts.noise_floor {
        return Ok(Some(vec![Root {
            location: z_star,
            multiplicity: w,
            residual: f_star.norm(),
            deriv_abs: fp_star.norm(),
        }]));
    }
    if w == 2 {
        let h = 1e-6;
        let (_, fp_plus) = map.eval_with_derivative(z_star + C64::new(h, 0.0))?;
        let (_, fp_minus) = map.eval_with_derivative(z_star - C64::new(h, 0.0))?;
        let fpp = (fp_plus - fp_minus) / (2.0 * h);
        if fpp.norm() > 0.0 {
            let offset = (-2.0 * f_star / fpp).sqrt();
            let mut out = Vec::new();
            for guess in [z_star + offset, z_star - offset] {
                match newton(map, guess, 1, opts) {
                    Ok(r) => out.push(r),
                    Err(_) => return Ok(None),
                }
            }
            // Both polish runs landing on the same point means the quadratic
            // model failed (e.g. well-separated pair); keep bisecting.
            if (out[0].location - out[1].location).norm() < 1e-9 {
                return Ok(None);
            }
            return Ok(Some(out));
        }
    }
    Ok(None)
}

/// Integration noise splits an exact double root into a simple pair at
/// distance ~sqrt(noise/|f''|) (≈1e-8 at typical tolerances). Re-center any
/// near-pair or merged double on the root of `f'` and keep the pair only if
/// `|f|` there is genuinely above the noise floor.
fn coalesce_noise_pairs<M: ComplexMap>(
    map: &M,
    roots: &mut Vec<Root>,
    opts: &RootSearchOptions,
) -> Result<()> {
    let double_floor = opts.noise_floor;
    // Merge adjacent simple pairs closer than the noise-split scale.
    let mut i = 0;
    while i + 1 < roots.len() {
        let (a, b) = (roots[i], roots[i + 1]);
        if a.multiplicity == 1
            && b.multiplicity == 1
            && (a.location - b.location).norm() < 1e-6
        {
            let mid = (a.location + b.location) * 0.5;
            if let Ok(z) = newton_on_derivative(map, mid, opts) {
                let (f, fp) = map.eval_with_derivative(z)?;
                if f.norm() <= double_floor {
                    roots[i] = Root {
                        location: z,
                        multiplicity: 2,
                        residual: f.norm(),
                        deriv_abs: fp.norm(),
                    };
                    roots.remove(i + 1);
                    continue;
                }
            }
        }
        i += 1;
    }
    // Re-examine double roots: relocate genuine doubles onto the root of
    // f', and split reports that are really one member of a resolvable pair
    // counted twice (|f| at the critical point well above the noise floor).
    let mut i = 0;
    while i < roots.len() {
        if roots[i].multiplicity == 2 {
            if let Ok(z) = newton_on_derivative(map, roots[i].location, opts) {
                let (f, fp) = map.eval_with_derivative(z)?;
                if (z - roots[i].location).norm() < 1e-5 {
                    if f.norm() <= double_floor {
                        roots[i].location = z;
                        roots[i].residual = f.norm();
                        roots[i].deriv_abs = fp.norm();
                    } else if let Some((r1, r2)) = split_pair(map, z, f, opts)? {
                        roots[i] = r1;
                        roots.insert(i + 1, r2);
                        i += 1;
                    }
                }
            }
        }
        i += 1;
    }
    roots.sort_by(|a, b| {
        (a.location.re, a.location.im)
            .partial_cmp(&(b.location.re, b.location.im))
            .unwrap()
    });
    Ok(())
}

/// Resolve a close pair around the critical point `z` (where `f(z) = f_z`)
/// through the local quadratic model; `None` when the model fails or both
/// polish runs land on the same point.
fn split_pair<M: ComplexMap>(
    map: &M,
    z: C64,
    f_z: C64,
    opts: &RootSearchOptions,
) -> Result<Option<(Root, Root)>> {
    let h = 1e-6;
    let (_, fp_plus) = map.eval_with_derivative(z + C64::new(h, 0.0))?;
    let (_, fp_minus) = map.eval_with_derivative(z - C64::new(h, 0.0))?;
    let fpp = (fp_plus - fp_minus) / (2.0 * h);
    if fpp.norm() == 0.0 {
        return Ok(None);
    }
    let offset = (-2.0 * f_z / fpp).sqrt();
    let r1 = match newton(map, z + offset, 1, opts) {
        Ok(r) => r,
        Err(_) => return Ok(None),
    };
    let r2 = match newton(map, z - offset, 1, opts) {
        Ok(r) => r,
        Err(_) => return Ok(None),
    };
    if (r1.location - r2.location).norm() < 1e-9 {
        return Ok(None);
    }
    Ok(Some((r1, r2)))
}

fn dedup_roots(roots: &mut Vec<Root>) {
    roots.sort_by(|a, b| {
        (a.location.re, a.location.im)
            .partial_cmp(&(b.location.re, b.location.im))
            .unwrap()
    });
    let mut out: Vec<Root> = Vec::with_capacity(roots.len());
    for r in roots.drain(..) {
        if let Some(last) = out.last_mut() {
            if (last.location - r.location).norm() < 1e-8 {
                last.multiplicity += r.multiplicity;
                last.residual = last.residual.max(r.residual);
                continue;
            }
        }
        out.push(r);
    }
    *roots = out;
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Polynomial test map with exactly known roots.
    struct Poly {
        roots: Vec<(C64, usize)>,
    }

    impl ComplexMap for Poly {
        fn eval(&self, z: C64) -> Result<C64> {
            let mut acc = C64::new(1.0, 0.0);
            for &(r, m) in &self.roots {
                for _ in 0..m {
                    acc *= z - r;
                }
            }
            Ok(acc)
        }
        fn eval_with_derivative(&self, z: C64) -> Result<(C64, C64)> {
            let f = self.eval(z)?;
            let mut logd = C64::new(0.0, 0.0);
            for &(r, m) in &self.roots {
                logd += C64::new(m as f64, 0.0) / (z - r);
            }
            Ok((f, f * logd))
        }
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn winding_counts_roots_with_multiplicity() {
        let p = Poly { roots: vec![(c(0.3, 0.1), 1), (c(-0.5, -0.2), 2), (c(5.0, 0.0), 1)] };
        let rect = Rect::new(-1.0, 1.0, -1.0, 1.0);
        let w = rect_winding(&p, rect, &RootSearchOptions::default()).unwrap();
        assert_eq!(w.winding, 3);

        let circ = winding_number(&p, &|s| circle_point(c(0.3, 0.1), 0.2, s), 32).unwrap();
        assert_eq!(circ.winding, 1);
    }

    #[test]
    fn rect_root_isolation_finds_all_roots() {
        let p = Poly {
            roots: vec![(c(0.25, 0.5), 1), (c(-1.5, -0.25), 1), (c(2.0, 0.0), 2), (c(9.0, 9.0), 1)],
        };
        let rect = Rect::new(-3.0, 3.0, -1.0, 1.0);
        let roots = roots_in_rect(&p, rect, &RootSearchOptions::default()).unwrap();
        assert_eq!(roots.iter().map(|r| r.multiplicity).sum::<usize>(), 4);
        for (expect, mult) in [(c(0.25, 0.5), 1), (c(-1.5, -0.25), 1), (c(2.0, 0.0), 2)] {
            let found = roots
                .iter()
                .find(|r| (r.location - expect).norm() < 1e-8)
                .unwrap_or_else(|| panic!("missing root near {expect}"));
            assert_eq!(found.multiplicity, mult);
        }
    }

    #[test]
    fn close_pair_is_resolved_into_simple_roots() {
        let sep = 2e-7;
        let p = Poly { roots: vec![(c(1.0 - sep, 0.0), 1), (c(1.0 + sep, 0.0), 1)] };
        let rect = Rect::new(0.0, 2.0, -0.5, 0.5);
        let roots = roots_in_rect(&p, rect, &RootSearchOptions::default()).unwrap();
        assert_eq!(roots.len(), 2);
        for r in &roots {
            assert_eq!(r.multiplicity, 1);
            assert!((r.location.im).abs() < 1e-10);
            assert!(((r.location.re - 1.0).abs() - sep).abs() < 1e-10);
        }
    }

    #[test]
    fn root_on_boundary_is_recovered_by_jitter() {
        let p = Poly { roots: vec![(c(1.0, 0.0), 1), (c(0.0, 0.0), 1)] };
        // Right edge passes exactly through the root at 1.
        let rect = Rect::new(-0.5, 1.0, -0.5, 0.5);
        let roots = roots_in_rect(&p, rect, &RootSearchOptions::default()).unwrap();
        assert!(!roots.is_empty());
        assert!(roots.iter().any(|r| (r.location - c(0.0, 0.0)).norm() < 1e-9));
    }

    #[test]
    fn newton_polishes_to_tight_tolerance() {
        let p = Poly { roots: vec![(c(0.7, -0.3), 1), (c(-2.0, 1.0), 1)] };
        let opts = RootSearchOptions::default();
        let root = newton(&p, c(0.5, -0.5), 1, &opts).unwrap();
        assert!((root.location - c(0.7, -0.3)).norm() < 1e-12);
        assert!(root.residual <= 1e-11);
    }
}
