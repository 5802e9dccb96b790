//! π-periodic complex matrix potentials, their exact integral functionals and
//! the integral conditions that drive the spectrality classification.
//!
//! Potentials are finite sums of harmonics `c·exp(i·2m·x)` plus piecewise
//! constants on `[0, π)`. Both families are closed under every integral the
//! rest of the crate needs, so `mean_b`, the accumulated phase `a(x)` and all
//! shift optimizations are computed exactly from the term lists.

use crate::error::Error;
use crate::mat2::Mat2;
use crate::quad::integrate_adaptive;
use crate::{Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative floor below which `Re b` is treated as zero.
const RE_B_FLOOR: f64 = 1e-12;

/// Sign branch of the `±` conditions; both branches are always reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignBranch {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl SignBranch {
    pub const BOTH: [SignBranch; 2] = [SignBranch::Plus, SignBranch::Minus];

    pub fn sign(self) -> f64 {
        match self {
            SignBranch::Plus => 1.0,
            SignBranch::Minus => -1.0,
        }
    }
}

/// One π-periodic scalar coefficient function.
#[derive(Debug, Clone, Default)]
pub struct PeriodicFunction {
    /// Harmonics `(m, c)` meaning `c · exp(i·2m·x)`.
    pub fourier_terms: Vec<(i32, C64)>,
    /// Pieces `(x0, x1, value)` with `[x0, x1) ⊂ [0, π)`, non-overlapping.
    pub piecewise_terms: Vec<(f64, f64, C64)>,
}

impl PeriodicFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: C64) -> Self {
        Self::from_fourier(&[(0, c)])
    }

    pub fn from_fourier(terms: &[(i32, C64)]) -> Self {
        Self {
            fourier_terms: terms.to_vec(),
            piecewise_terms: Vec::new(),
        }
    }

    /// Build from pieces; validates the tiling of `[0, π)`.
    pub fn from_piecewise(pieces: &[(f64, f64, C64)]) -> Result<Self> {
        let f = Self {
            fourier_terms: Vec::new(),
            piecewise_terms: pieces.to_vec(),
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let mut sorted = self.piecewise_terms.clone();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for &(x0, x1, _) in &sorted {
            if !(0.0..PI).contains(&x0) || x1 <= x0 || x1 > PI + 1e-12 {
                return Err(Error::InvalidPotential(format!(
                    "piece [{x0}, {x1}) does not lie in [0, π)"
                )));
            }
        }
        for w in sorted.windows(2) {
            if w[1].0 < w[0].1 - 1e-12 {
                return Err(Error::InvalidPotential(format!(
                    "pieces [{}, {}) and [{}, {}) overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.fourier_terms.is_empty() && self.piecewise_terms.is_empty()
    }

    /// Evaluate at any real `x` (folded into the base period).
    pub fn eval(&self, x: f64) -> C64 {
        let y = x - PI * (x / PI).floor();
        let mut acc = C64::new(0.0, 0.0);
        for &(m, c) in &self.fourier_terms {
            acc += c * (C64::new(0.0, 2.0 * m as f64 * y)).exp();
        }
        for &(x0, x1, v) in &self.piecewise_terms {
            if y >= x0 && y < x1 {
                acc += v;
            }
        }
        acc
    }

    /// Exact `∫₀^π f dx`: harmonics with `m ≠ 0` vanish, `m = 0` contributes
    /// `c·π`, pieces contribute `value·length`.
    pub fn integral_full(&self) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &(m, c) in &self.fourier_terms {
            if m == 0 {
                acc += c * PI;
            }
        }
        for &(x0, x1, v) in &self.piecewise_terms {
            acc += v * (x1 - x0);
        }
        acc
    }

    /// Exact `∫₀^x f dξ` for `x ∈ [0, π]`.
    pub fn integral_to(&self, x: f64) -> C64 {
        debug_assert!((-1e-12..=PI + 1e-12).contains(&x));
        let mut acc = C64::new(0.0, 0.0);
        for &(m, c) in &self.fourier_terms {
            if m == 0 {
                acc += c * x;
            } else {
                let im2m = C64::new(0.0, 2.0 * m as f64);
                acc += c * ((im2m * x).exp() - 1.0) / im2m;
            }
        }
        for &(x0, x1, v) in &self.piecewise_terms {
            let overlap = (x.min(x1) - x0).max(0.0);
            acc += v * overlap;
        }
        acc
    }

    /// Entrywise complex conjugate (still π-periodic: harmonics flip sign of m).
    pub fn conj(&self) -> Self {
        Self {
            fourier_terms: self.fourier_terms.iter().map(|&(m, c)| (-m, c.conj())).collect(),
            piecewise_terms: self.piecewise_terms.iter().map(|&(x0, x1, v)| (x0, x1, v.conj())).collect(),
        }
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Self) -> Self {
        let mut fourier_terms = self.fourier_terms.clone();
        fourier_terms.extend_from_slice(&other.fourier_terms);
        let mut piecewise_terms = self.piecewise_terms.clone();
        piecewise_terms.extend_from_slice(&other.piecewise_terms);
        Self { fourier_terms, piecewise_terms }
    }

    fn breakpoints_into(&self, out: &mut Vec<f64>) {
        for &(x0, x1, _) in &self.piecewise_terms {
            out.push(x0);
            if x1 < PI {
                out.push(x1);
            }
        }
    }
}

/// The 2×2 matrix potential, entries row-major.
#[derive(Debug, Clone, Default)]
pub struct PotentialQ {
    pub a1: PeriodicFunction,
    pub a2: PeriodicFunction,
    pub a3: PeriodicFunction,
    pub a4: PeriodicFunction,
}

impl PotentialQ {
    pub fn new(
        a1: PeriodicFunction,
        a2: PeriodicFunction,
        a3: PeriodicFunction,
        a4: PeriodicFunction,
    ) -> Self {
        Self { a1, a2, a3, a4 }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn eval(&self, x: f64) -> Mat2 {
        Mat2::new(self.a1.eval(x), self.a2.eval(x), self.a3.eval(x), self.a4.eval(x))
    }

    pub fn is_zero(&self) -> bool {
        self.a1.is_zero() && self.a2.is_zero() && self.a3.is_zero() && self.a4.is_zero()
    }

    /// Interior discontinuity locations in `(0, π)`, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        self.a1.breakpoints_into(&mut pts);
        self.a2.breakpoints_into(&mut pts);
        self.a3.breakpoints_into(&mut pts);
        self.a4.breakpoints_into(&mut pts);
        pts.retain(|x| *x > 0.0 && *x < PI);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        pts
    }

    /// Smooth-piece partition of `[0, π]` for quadrature.
    pub fn piece_breaks(&self) -> Vec<f64> {
        let mut breaks = vec![0.0];
        breaks.extend(self.breakpoints());
        breaks.push(PI);
        breaks
    }

    /// `b = (1/2π) ∫₀^π (a₃ − a₂) dx`, exact from term lists.
    pub fn mean_b(&self) -> C64 {
        (self.a3.integral_full() - self.a2.integral_full()) / (2.0 * PI)
    }

    /// `a(x) = ½ ∫₀^x (a₃ − a₂) dξ`, exact; `a(π) = π·b`.
    pub fn accumulate_a(&self, x: f64) -> Result<C64> {
        if !(0.0..=PI).contains(&x) {
            return Err(Error::DomainX { x });
        }
        Ok((self.a3.integral_to(x) - self.a2.integral_to(x)) * 0.5)
    }

    /// Potential of the adjoint operator: entrywise conjugate transpose
    /// (off-diagonal entries swap).
    pub fn adjoint(&self) -> Self {
        Self {
            a1: self.a1.conj(),
            a2: self.a3.conj(),
            a3: self.a2.conj(),
            a4: self.a4.conj(),
        }
    }

    /// Shift by `a·I` (adds the constant `a` to both diagonal entries).
    pub fn shift_diagonal(&self, a: C64) -> Self {
        Self {
            a1: self.a1.add(&PeriodicFunction::constant(a)),
            a2: self.a2.clone(),
            a3: self.a3.clone(),
            a4: self.a4.add(&PeriodicFunction::constant(a)),
        }
    }
}

/// The constant reference potential with off-diagonal entries `∓b`.
pub fn build_qb(b: C64) -> PotentialQ {
    PotentialQ {
        a1: PeriodicFunction::zero(),
        a2: PeriodicFunction::constant(-b),
        a3: PeriodicFunction::constant(b),
        a4: PeriodicFunction::zero(),
    }
}

/// Outcome of one integral condition.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionMargin {
    pub value: f64,
    pub threshold: f64,
    pub satisfied: bool,
    pub branch: Option<SignBranch>,
    pub precondition_failed: bool,
}

/// `Re ∫₀^π (a₃ − a₂) dx ≠ 0`, reported as the margin `|Re ∫(a₃ − a₂)|`
/// with a floor of `1e-12` on `|Re b|` treated as zero.
pub fn check_condition_2(q: &PotentialQ) -> ConditionMargin {
    let b = q.mean_b();
    ConditionMargin {
        value: (2.0 * PI * b).re.abs(),
        threshold: 0.0,
        satisfied: b.re.abs() > RE_B_FLOOR,
        branch: None,
        precondition_failed: false,
    }
}

/// Integrand `|a₁ ± i(a₂ + b)|² + |a₃ − b ± i·a₄|²` for one sign branch.
fn perturbation_density(q: &PotentialQ, b: C64, branch: SignBranch, shift: C64) -> impl Fn(f64) -> f64 + '_ {
    let s = branch.sign();
    move |x| {
        let u = q.a1.eval(x) + shift + C64::new(0.0, s) * (q.a2.eval(x) + b);
        let v = q.a3.eval(x) - b + C64::new(0.0, s) * (q.a4.eval(x) + shift);
        u.norm_sqr() + v.norm_sqr()
    }
}

fn margin_integral(q: &PotentialQ, branch: SignBranch, shift: C64) -> f64 {
    let b = q.mean_b();
    let breaks = q.piece_breaks();
    integrate_adaptive(&breaks, 1e-12, perturbation_density(q, b, branch, shift))
}

/// Lemma-1 threshold.
pub fn lemma1_threshold() -> f64 {
    4.0 / PI
}

/// Lemma-2 threshold `2π (2/(Re b)² + π²/3)⁻¹` for `0 < |Re b| < 1`.
pub fn lemma2_threshold(re_b: f64) -> f64 {
    2.0 * PI / (2.0 / (re_b * re_b) + PI * PI / 3.0)
}

/// Perturbation-size condition with threshold `4/π`; valid regime `|Re b| ≥ 1`.
/// Both branches must be queried for a full verdict.
pub fn lemma1_margin(q: &PotentialQ, branch: SignBranch) -> ConditionMargin {
    let value = margin_integral(q, branch, C64::new(0.0, 0.0));
    let threshold = lemma1_threshold();
    ConditionMargin {
        value,
        threshold,
        satisfied: value <= threshold,
        branch: Some(branch),
        precondition_failed: q.mean_b().re.abs() < 1.0,
    }
}

/// Same integrand with the `|Re b| < 1` threshold; valid regime `0 < |Re b| < 1`.
pub fn lemma2_margin(q: &PotentialQ, branch: SignBranch) -> ConditionMargin {
    let re_b = q.mean_b().re;
    let value = margin_integral(q, branch, C64::new(0.0, 0.0));
    let in_regime = re_b.abs() > RE_B_FLOOR && re_b.abs() < 1.0;
    let threshold = if in_regime { lemma2_threshold(re_b) } else { 0.0 };
    ConditionMargin {
        value,
        threshold,
        satisfied: in_regime && value <= threshold,
        branch: Some(branch),
        precondition_failed: !in_regime,
    }
}

/// Per-branch result of the diagonal-shift optimization.
#[derive(Debug, Clone, Serialize)]
pub struct BranchShift {
    pub branch: SignBranch,
    pub a_opt: C64,
    pub min_value: f64,
}

/// Result of minimizing the perturbation integrals over a diagonal shift `a`.
#[derive(Debug, Clone, Serialize)]
pub struct ShiftReport {
    pub branches: [BranchShift; 2],
    /// Single shift minimizing the larger of the two branch integrals.
    pub joint_a: C64,
    pub joint_value: f64,
    pub threshold: f64,
    pub satisfied: bool,
    pub precondition_failed: bool,
}

/// Shifted conditions: the integrand is a convex quadratic in the complex
/// shift `a`, minimized in closed form per branch. The potential passes only
/// if one `a` meets the threshold for both branches simultaneously, so the
/// min-max over the segment between the two branch minimizers is reported.
pub fn shifted_margins(q: &PotentialQ) -> ShiftReport {
    let b = q.mean_b();
    // Φ_branch(a) = C + 2 Re(conj(a)·w) + 2π|a|² = min + 2π|a − a_opt|²
    // with w = ∫u ∓ i∫v for branch ±, u = a1 ± i(a2+b), v = a3 − b ± i·a4.
    let mut branch_data = Vec::with_capacity(2);
    for &branch in &SignBranch::BOTH {
        let s = C64::new(0.0, branch.sign());
        let int_u = q.a1.integral_full() + s * (q.a2.integral_full() + b * PI);
        let int_v = q.a3.integral_full() - b * PI + s * q.a4.integral_full();
        let w = int_u - s * int_v;
        let c_full = margin_integral(q, branch, C64::new(0.0, 0.0));
        let a_opt = -w / (2.0 * PI);
        let min_value = (c_full - w.norm_sqr() / (2.0 * PI)).max(0.0);
        branch_data.push((branch, a_opt, min_value));
    }

    let (m_plus, min_plus) = (branch_data[0].1, branch_data[0].2);
    let (m_minus, min_minus) = (branch_data[1].1, branch_data[1].2);
    let d = m_minus - m_plus;
    let d2 = d.norm_sqr();
    let phi_plus = |s: f64| min_plus + 2.0 * PI * d2 * s * s;
    let phi_minus = |s: f64| min_minus + 2.0 * PI * d2 * (1.0 - s) * (1.0 - s);
    let g = |s: f64| phi_plus(s).max(phi_minus(s));
    // Min-max of two equal-curvature parabolas restricted to the segment:
    // optimum is at a vertex or at the crossing point.
    let mut candidates = vec![0.0, 1.0];
    if d2 > 0.0 {
        let s_cross = (min_minus - min_plus + 2.0 * PI * d2) / (4.0 * PI * d2);
        if (0.0..=1.0).contains(&s_cross) {
            candidates.push(s_cross);
        }
    }
    let s_best = candidates
        .into_iter()
        .min_by(|p, r| g(*p).partial_cmp(&g(*r)).unwrap())
        .unwrap();
    let joint_a = m_plus + d * s_best;
    let joint_value = g(s_best);

    let re_b = b.re;
    let (threshold, precondition_failed) = if re_b.abs() >= 1.0 {
        (lemma1_threshold(), false)
    } else if re_b.abs() > RE_B_FLOOR {
        (lemma2_threshold(re_b), false)
    } else {
        (0.0, true)
    };

    ShiftReport {
        branches: [
            BranchShift { branch: branch_data[0].0, a_opt: branch_data[0].1, min_value: branch_data[0].2 },
            BranchShift { branch: branch_data[1].0, a_opt: branch_data[1].1, min_value: branch_data[1].2 },
        ],
        joint_a,
        joint_value,
        threshold,
        satisfied: !precondition_failed && joint_value <= threshold,
        precondition_failed,
    }
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

/// Serialized form of one coefficient function:
/// `{"fourier": [[m, re, im], ...], "piecewise": [[x0, x1, re, im], ...]}`.
/// Missing term lists default to empty (the zero function).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PeriodicFunctionSpec {
    #[serde(default)]
    pub fourier: Vec<(i32, f64, f64)>,
    #[serde(default)]
    pub piecewise: Vec<(f64, f64, f64, f64)>,
}

/// Serialized potential; all four entry keys are required.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub a1: PeriodicFunctionSpec,
    pub a2: PeriodicFunctionSpec,
    pub a3: PeriodicFunctionSpec,
    pub a4: PeriodicFunctionSpec,
}

impl PeriodicFunctionSpec {
    fn build(&self) -> Result<PeriodicFunction> {
        let f = PeriodicFunction {
            fourier_terms: self
                .fourier
                .iter()
                .map(|&(m, re, im)| (m, C64::new(re, im)))
                .collect(),
            piecewise_terms: self
                .piecewise
                .iter()
                .map(|&(x0, x1, re, im)| (x0, x1, C64::new(re, im)))
                .collect(),
        };
        f.validate()?;
        Ok(f)
    }

    fn from_function(f: &PeriodicFunction) -> Self {
        Self {
            fourier: f.fourier_terms.iter().map(|&(m, c)| (m, c.re, c.im)).collect(),
            piecewise: f
                .piecewise_terms
                .iter()
                .map(|&(x0, x1, v)| (x0, x1, v.re, v.im))
                .collect(),
        }
    }
}

impl PotentialSpec {
    pub fn build(&self) -> Result<PotentialQ> {
        Ok(PotentialQ {
            a1: self.a1.build()?,
            a2: self.a2.build()?,
            a3: self.a3.build()?,
            a4: self.a4.build()?,
        })
    }

    pub fn from_potential(q: &PotentialQ) -> Self {
        Self {
            a1: PeriodicFunctionSpec::from_function(&q.a1),
            a2: PeriodicFunctionSpec::from_function(&q.a2),
            a3: PeriodicFunctionSpec::from_function(&q.a3),
            a4: PeriodicFunctionSpec::from_function(&q.a4),
        }
    }
}

impl PotentialQ {
    pub fn from_json(json: &str) -> Result<Self> {
        let spec: PotentialSpec = serde_json::from_str(json)
            .map_err(|e| Error::InvalidConfig(format!("potential JSON: {e}")))?;
        spec.build()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PotentialSpec::from_potential(self)).unwrap()
    }
}
