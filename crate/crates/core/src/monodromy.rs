//! Fundamental system of the Dirac equation on `[0, π]`.
//!
//! Integrates the matrix equation `M'(x) = A(x, λ) M(x)` with
//! `A = -λJ + J·Q(x)` and `M(0) = I`, whose columns are the fundamental
//! solutions `c(x, λ)` and `s(x, λ)`. The λ-derivative is propagated jointly
//! through the variational system `Mλ' = A·Mλ - J·M`, which feeds Newton
//! refinement of eigenvalues.
//!
//! Integration uses an embedded Dormand–Prince 5(4) pair on the complex
//! matrix state. Step points are forced onto the discontinuity set of `Q`,
//! and the maximum step is capped at `0.1/(1 + |λ|)` so the oscillatory
//! right-hand side stays resolved.

use crate::error::Error;
use crate::mat2::{Mat2, Vec2};
use crate::potential::PotentialQ;
use crate::{Result, C64};
use std::f64::consts::PI;

/// Default integration tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Monodromy matrix at `x = π` together with its λ-derivative.
#[derive(Debug, Clone)]
pub struct MonodromyResult {
    pub lambda: C64,
    /// `[[c1(π,λ), s1(π,λ)], [c2(π,λ), s2(π,λ)]]`.
    pub m: Mat2,
    pub dm_dlambda: Mat2,
    /// `det M(π)` accumulated multiplicatively over the accepted steps.
    ///
    /// The direct determinant of the final matrix loses all accuracy for
    /// large `|Im λ|` (entries grow like `e^{|Im λ|π}` while the determinant
    /// stays `e^{2πb}`); the per-step transfer matrices are `I + O(h)`, so
    /// their determinants carry no cancellation and the product is accurate
    /// to roughly `n_steps · ε`.
    pub det_m: C64,
    /// Sum of local error estimates plus the Liouville defect
    /// `|det M − e^{2πb}|`.
    pub est_error: f64,
}

/// Hill discriminant `F(λ) = c1(π,λ) + s2(π,λ)`.
pub fn discriminant(m: &MonodromyResult) -> C64 {
    m.m.trace()
}

/// Wronskian `W(π,λ) = c1 s2 − c2 s1 = det M(π)`.
pub fn wronskian(m: &MonodromyResult) -> C64 {
    m.det_m
}

/// Dense output of both fundamental solutions on a requested grid.
#[derive(Debug, Clone)]
pub struct SolutionTrace {
    pub xgrid: Vec<f64>,
    pub c_values: Vec<Vec2>,
    pub s_values: Vec<Vec2>,
}

impl SolutionTrace {
    /// CSV rows `x, Re c1, Im c1, Re c2, Im c2, Re s1, Im s1, Re s2, Im s2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,re_c1,im_c1,re_c2,im_c2,re_s1,im_s1,re_s2,im_s2\n");
        for (i, x) in self.xgrid.iter().enumerate() {
            let c = self.c_values[i];
            let s = self.s_values[i];
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                x, c[0].re, c[0].im, c[1].re, c[1].im, s[0].re, s[0].im, s[1].re, s[1].im
            ));
        }
        out
    }
}

/// Coefficient matrix `A(x, λ) = -λJ + J·Q(x)`.
#[inline]
fn coefficient_matrix(q: &PotentialQ, lambda: C64, x: f64) -> Mat2 {
    let qm = q.eval(x);
    Mat2::new(qm.a21, qm.a22 - lambda, lambda - qm.a11, -qm.a12)
}

// Dormand–Prince 5(4) tableau.
const STAGES: usize = 7;
const C_NODES: [f64; STAGES] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A_COEF: [[f64; 6]; STAGES] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; STAGES] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; STAGES] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct StepResult {
    transfer: Mat2,
    ml_update: Mat2,
    err_norm: f64,
    err_abs: f64,
    a_end: Mat2,
}

/// One embedded step of size `h` from `(x, M, Mλ)`; the step transfer matrix
/// is built on the identity so `M_next = S·M` and `det S` is cancellation-free.
#[allow(clippy::too_many_arguments)]
fn dopri5_step(
    q: &PotentialQ,
    lambda: C64,
    x: f64,
    h: f64,
    m: &Mat2,
    ml: &Mat2,
    a_start: &Mat2,
    with_deriv: bool,
    tol: f64,
) -> StepResult {
    let j = Mat2::j();
    let mut g: [Mat2; STAGES] = [Mat2::zero(); STAGES];
    let mut kl: [Mat2; STAGES] = [Mat2::zero(); STAGES];
    let mut a_end = *a_start;

    for i in 0..STAGES {
        let mut p = Mat2::identity();
        for jdx in 0..i.min(6) {
            let a = A_COEF[i][jdx];
            if a != 0.0 {
                p = p + g[jdx].scale_re(h * a);
            }
        }
        let a_i = if i == 0 {
            *a_start
        } else {
            coefficient_matrix(q, lambda, x + C_NODES[i] * h)
        };
        if i == STAGES - 1 {
            a_end = a_i;
        }
        g[i] = a_i * p;
        if with_deriv {
            let mut vl = *ml;
            for jdx in 0..i.min(6) {
                let a = A_COEF[i][jdx];
                if a != 0.0 {
                    vl = vl + kl[jdx].scale_re(h * a);
                }
            }
            kl[i] = a_i * vl - j * (p * *m);
        }
    }

    let mut transfer = Mat2::identity();
    let mut err_s = Mat2::zero();
    let mut ml_update = Mat2::zero();
    let mut err_l = Mat2::zero();
    for i in 0..STAGES {
        if B5[i] != 0.0 {
            transfer = transfer + g[i].scale_re(h * B5[i]);
        }
        let d = B5[i] - B4[i];
        if d != 0.0 {
            err_s = err_s + g[i].scale_re(h * d);
        }
        if with_deriv {
            if B5[i] != 0.0 {
                ml_update = ml_update + kl[i].scale_re(h * B5[i]);
            }
            if d != 0.0 {
                err_l = err_l + kl[i].scale_re(h * d);
            }
        }
    }

    let err_m = err_s * *m;
    let m_new = transfer * *m;
    let scale_m = tol * (1.0 + m.max_abs().max(m_new.max_abs()));
    let mut err_norm = err_m.max_abs() / scale_m;
    let mut err_abs = err_m.max_abs();
    if with_deriv {
        let ml_new = *ml + ml_update;
        let scale_l = tol * (1.0 + ml.max_abs().max(ml_new.max_abs()));
        err_norm = err_norm.max(err_l.max_abs() / scale_l);
        err_abs = err_abs.max(err_l.max_abs());
    }

    StepResult { transfer, ml_update, err_norm, err_abs, a_end }
}

/// Core driver: integrates over `[0, π]`, forcing step endpoints onto the
/// potential's breakpoints and every requested stop, where `record` is called
/// with the current `(x, M)`.
pub(crate) fn integrate_monodromy(
    q: &PotentialQ,
    lambda: C64,
    tol: f64,
    with_deriv: bool,
    stops: &[f64],
    mut record: impl FnMut(f64, &Mat2),
) -> Result<(Mat2, Mat2, C64, f64)> {
    if tol <= 0.0 {
        return Err(Error::InvalidConfig("tolerance must be positive".into()));
    }
    // Local tolerance carries a safety factor so the GLOBAL error (and in
    // particular the accumulated Wronskian defect, measured to grow like
    // ~20·|λ|·tol_local across potentials) stays below ~10·tol.
    let tol_local = tol / (10.0 * (1.0 + lambda.norm()));
    let mut targets = q.piece_breaks();
    targets.extend(stops.iter().copied());
    targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    targets.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let mut m = Mat2::identity();
    let mut ml = Mat2::zero();
    let mut det = C64::new(1.0, 0.0);
    let mut est = 0.0;
    let h_max = 0.1 / (1.0 + lambda.norm());

    let mut stop_iter = stops.iter().peekable();
    let mut record_at = |x: f64, m: &Mat2, it: &mut std::iter::Peekable<std::slice::Iter<f64>>| {
        while let Some(&&s) = it.peek() {
            if (s - x).abs() < 1e-15 {
                record(x, m);
                it.next();
            } else {
                break;
            }
        }
    };
    record_at(0.0, &m, &mut stop_iter);

    for seg in targets.windows(2) {
        let (left, right) = (seg[0], seg[1]);
        if right - left < 1e-14 {
            record_at(right, &m, &mut stop_iter);
            continue;
        }
        let mut x = left;
        let mut h = h_max.min(right - left);
        let mut a_start = coefficient_matrix(q, lambda, x);
        while x < right {
            let remaining = right - x;
            if h >= remaining {
                h = remaining;
            }
            // Underflow only when the controller collapses the step, not
            // when the remaining distance itself is tiny.
            if h < 1e-14 && h < remaining {
                return Err(Error::StepSizeUnderflow { x, lambda });
            }
            let step = dopri5_step(q, lambda, x, h, &m, &ml, &a_start, with_deriv, tol_local);
            if step.err_norm <= 1.0 {
                x = if h == remaining { right } else { x + h };
                m = step.transfer * m;
                ml = ml + step.ml_update;
                det *= step.transfer.det();
                est += step.err_abs;
                a_start = step.a_end;
            }
            let scale = (0.9 * step.err_norm.max(1e-300).powf(-0.2)).clamp(0.2, 5.0);
            h = (h * scale).min(h_max);
        }
        record_at(right, &m, &mut stop_iter);
    }

    Ok((m, ml, det, est))
}

/// Full monodromy with λ-derivative via the variational system.
pub fn integrate_fundamental(q: &PotentialQ, lambda: C64, tol: f64) -> Result<MonodromyResult> {
    let (m, ml, det, mut est) = integrate_monodromy(q, lambda, tol, true, &[], |_, _| {})?;
    let liouville = (det - (q.mean_b() * 2.0 * PI).exp()).norm();
    est += liouville;
    Ok(MonodromyResult { lambda, m, dm_dlambda: ml, det_m: det, est_error: est })
}

/// Monodromy without the variational system (cheaper; used on contours).
pub fn integrate_monodromy_only(q: &PotentialQ, lambda: C64, tol: f64) -> Result<MonodromyResult> {
    let (m, ml, det, mut est) = integrate_monodromy(q, lambda, tol, false, &[], |_, _| {})?;
    let liouville = (det - (q.mean_b() * 2.0 * PI).exp()).norm();
    est += liouville;
    Ok(MonodromyResult { lambda, m, dm_dlambda: ml, det_m: det, est_error: est })
}

/// Dense output of both fundamental solutions at the requested points.
pub fn solution_trace(q: &PotentialQ, lambda: C64, xgrid: &[f64], tol: f64) -> Result<SolutionTrace> {
    for w in xgrid.windows(2) {
        if w[1] < w[0] {
            return Err(Error::InvalidConfig("xgrid must be sorted".into()));
        }
    }
    if let (Some(&first), Some(&last)) = (xgrid.first(), xgrid.last()) {
        if first < -1e-12 || last > PI + 1e-12 {
            return Err(Error::DomainX { x: if first < 0.0 { first } else { last } });
        }
    }
    let mut c_values = Vec::with_capacity(xgrid.len());
    let mut s_values = Vec::with_capacity(xgrid.len());
    integrate_monodromy(q, lambda, tol, false, xgrid, |_, m| {
        c_values.push(m.col1());
        s_values.push(m.col2());
    })?;
    Ok(SolutionTrace { xgrid: xgrid.to_vec(), c_values, s_values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{build_qb, PeriodicFunction};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Closed-form monodromy of the constant reference potential:
    /// `M(x) = e^{bx} [[cos λx, −sin λx], [sin λx, cos λx]]`.
    fn qb_monodromy(b: C64, lambda: C64, x: f64) -> Mat2 {
        let phase = (b * x).exp();
        let (s, cs) = ((lambda * x).sin(), (lambda * x).cos());
        Mat2::new(cs * phase, -s * phase, s * phase, cs * phase)
    }

    #[test]
    fn zero_potential_rotation() {
        let q = PotentialQ::zero();
        let r = integrate_fundamental(&q, c(1.0, 0.0), 1e-12).unwrap();
        assert!((r.m - Mat2::identity().scale_re(-1.0)).max_abs() < 1e-10);
        let r0 = integrate_fundamental(&q, c(0.0, 0.0), 1e-12).unwrap();
        assert!((r0.m - Mat2::identity()).max_abs() < 1e-12);
    }

    #[test]
    fn constant_potential_closed_form() {
        let b = c(0.8, 0.3);
        let q = build_qb(b);
        for lambda in [c(0.7, 0.0), c(2.5, 1.0), c(-4.0, -0.5)] {
            let r = integrate_fundamental(&q, lambda, 1e-11).unwrap();
            let exact = qb_monodromy(b, lambda, PI);
            assert!(
                (r.m - exact).max_abs() < 1e-8 * (1.0 + exact.max_abs()),
                "λ = {lambda}: {:?} vs {:?}",
                r.m,
                exact
            );
        }
    }

    #[test]
    fn discriminant_values() {
        let q0 = PotentialQ::zero();
        let r = integrate_fundamental(&q0, c(0.0, 0.0), 1e-12).unwrap();
        assert_abs_diff_eq!(discriminant(&r).re, 2.0, epsilon = 1e-11);
        let r_half = integrate_fundamental(&q0, c(0.5, 0.0), 1e-12).unwrap();
        assert_abs_diff_eq!(discriminant(&r_half).norm(), 0.0, epsilon = 1e-10);

        let b = c(0.6, 0.2);
        let q = build_qb(b);
        let lambda = c(1.3, 0.4);
        let r = integrate_fundamental(&q, lambda, 1e-12).unwrap();
        let exact = (b * PI).exp() * (lambda * PI).cos() * 2.0;
        assert!((discriminant(&r) - exact).norm() < 1e-9 * (1.0 + exact.norm()));
    }

    #[test]
    fn wronskian_is_liouville_constant() {
        // |W(π,λ) − e^{2πb}| ≤ 10·tol across potentials and λ with |λ| ≤ 100.
        let tol = 1e-10;
        let mut q_mixed = build_qb(c(0.3, 0.1));
        q_mixed.a1 = PeriodicFunction::from_fourier(&[(1, c(0.4, 0.2))]);
        q_mixed.a4 = PeriodicFunction::from_fourier(&[(-1, c(0.0, 0.3))]);
        let potentials = [PotentialQ::zero(), build_qb(c(0.4, 0.7)), q_mixed];
        let lambdas = [c(0.0, 0.0), c(3.0, 0.0), c(10.0, 3.0), c(-40.0, 2.0), c(100.0, 0.0)];
        for q in &potentials {
            let w_exact = (q.mean_b() * 2.0 * PI).exp();
            for &lambda in &lambdas {
                let r = integrate_fundamental(q, lambda, tol).unwrap();
                let defect = (wronskian(&r) - w_exact).norm();
                assert!(defect <= 10.0 * tol, "defect {defect:.3e} at λ = {lambda}");
                assert!(defect <= r.est_error + 10.0 * tol);
            }
        }
    }

    #[test]
    fn stable_determinant_beats_naive_at_large_imaginary_lambda() {
        let b = c(0.3, 0.0);
        let q = build_qb(b);
        let w_exact = (b * 2.0 * PI).exp();
        let r = integrate_fundamental(&q, c(25.0, 5.0), 1e-12).unwrap();
        let stable = (wronskian(&r) - w_exact).norm();
        let naive = (r.m.det() - w_exact).norm();
        assert!(stable < 1e-9, "stable defect {stable}");
        assert!(naive > 10.0 * stable, "naive {naive} vs stable {stable}");
    }

    #[test]
    fn lambda_derivative_matches_finite_differences() {
        let mut q = build_qb(c(0.5, 0.2));
        q.a1 = PeriodicFunction::from_fourier(&[(2, c(0.3, 0.0))]);
        for lambda in [c(1.0, 0.5), c(4.0, -1.0)] {
            let r = integrate_fundamental(&q, lambda, 1e-12).unwrap();
            let h = 1e-5;
            let rp = integrate_fundamental(&q, lambda + c(h, 0.0), 1e-12).unwrap();
            let rm = integrate_fundamental(&q, lambda - c(h, 0.0), 1e-12).unwrap();
            let fd = (rp.m - rm.m).scale(c(1.0 / (2.0 * h), 0.0));
            let denom = r.dm_dlambda.max_abs().max(1.0);
            assert!(
                (fd - r.dm_dlambda).max_abs() / denom < 1e-6,
                "derivative mismatch at λ = {lambda}"
            );
        }
    }

    #[test]
    fn piecewise_potential_closed_form_product() {
        // Piecewise-constant off-diagonals: each piece is a constant-potential
        // factor, and the commuting factors give M = e^{(b1+b2)π/2} R(λπ).
        let b1 = c(0.6, 0.1);
        let b2 = c(-0.2, 0.4);
        let half = PI / 2.0;
        let a2 = PeriodicFunction::from_piecewise(&[(0.0, half, -b1), (half, PI, -b2)]).unwrap();
        let a3 = PeriodicFunction::from_piecewise(&[(0.0, half, b1), (half, PI, b2)]).unwrap();
        let q = PotentialQ::new(PeriodicFunction::zero(), a2, a3, PeriodicFunction::zero());
        let lambda = c(2.0, 0.5);
        let r = integrate_fundamental(&q, lambda, 1e-12).unwrap();
        let exact = qb_monodromy((b1 + b2) * 0.5, lambda, PI);
        assert!((r.m - exact).max_abs() < 1e-9 * (1.0 + exact.max_abs()));
    }

    #[test]
    fn trace_matches_closed_forms() {
        let q0 = PotentialQ::zero();
        let tr = solution_trace(&q0, c(2.0, 0.0), &[0.0, PI / 4.0, PI], 1e-12).unwrap();
        assert_eq!(tr.c_values[0], [c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(tr.s_values[0], [c(0.0, 0.0), c(1.0, 0.0)]);
        // c(π/4, 2) = (cos π/2, sin π/2) = (0, 1)
        assert!((tr.c_values[1][0]).norm() < 1e-10);
        assert!((tr.c_values[1][1] - c(1.0, 0.0)).norm() < 1e-10);

        let b = c(0.5, -0.3);
        let q = build_qb(b);
        let lambda = c(2.0, 1.0);
        let tr = solution_trace(&q, lambda, &[PI / 2.0], 1e-12).unwrap();
        let exact = qb_monodromy(b, lambda, PI / 2.0);
        assert!((tr.c_values[0][0] - exact.a11).norm() < 1e-9 * (1.0 + exact.max_abs()));
        assert!((tr.c_values[0][1] - exact.a21).norm() < 1e-9 * (1.0 + exact.max_abs()));
    }

    #[test]
    fn high_frequency_residual_decays_like_1_over_lambda() {
        // |c1(x,λ) − e^{a(x)} cos λx| · λ stays bounded as λ grows. The
        // asymptotic form holds for off-diagonal potentials, so the
        // perturbations go on a2/a3 (a nonzero diagonal adds a rotation
        // gauge e^{±iθ(x)}, θ = ½∫(a1+a4), that the leading term omits).
        let mut q = build_qb(c(0.4, 0.0));
        q.a2 = q.a2.add(&PeriodicFunction::from_fourier(&[(1, c(0.3, 0.2))]));
        q.a3 = q.a3.add(&PeriodicFunction::from_fourier(&[(2, c(0.0, -0.25))]));
        let xgrid: Vec<f64> = (0..=100).map(|i| PI * i as f64 / 100.0).collect();
        let mut scaled = Vec::new();
        for lam in [20.0, 40.0, 80.0, 160.0] {
            let lambda = c(lam, 0.0);
            let tr = solution_trace(&q, lambda, &xgrid, 1e-11).unwrap();
            let mut worst: f64 = 0.0;
            for (i, &x) in xgrid.iter().enumerate() {
                let a = q.accumulate_a(x).unwrap();
                let lead = a.exp() * (lambda * x).cos();
                worst = worst.max((tr.c_values[i][0] - lead).norm());
            }
            scaled.push(worst * lam);
        }
        let n = scaled.len() as f64;
        let lams = [20.0f64, 40.0, 80.0, 160.0];
        let mean_x = lams.iter().map(|l| l.ln()).sum::<f64>() / n;
        let mean_y = scaled.iter().map(|r| r.ln()).sum::<f64>() / n;
        let slope = lams
            .iter()
            .zip(&scaled)
            .map(|(l, r)| (l.ln() - mean_x) * (r.ln() - mean_y))
            .sum::<f64>()
            / lams.iter().map(|l| (l.ln() - mean_x).powi(2)).sum::<f64>();
        assert!(slope <= 0.1, "scaled residuals grow: {scaled:?} (slope {slope})");
    }

    #[test]
    fn unsorted_or_out_of_range_grid_is_rejected() {
        let q = PotentialQ::zero();
        assert!(solution_trace(&q, c(1.0, 0.0), &[1.0, 0.5], 1e-10).is_err());
        assert!(solution_trace(&q, c(1.0, 0.0), &[0.0, 4.0], 1e-10).is_err());
    }
}
