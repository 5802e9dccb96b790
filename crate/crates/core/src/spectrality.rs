//! Spectrality diagnostics: series-bound oracles behind the resolvent-circle
//! lemmas, circle certificates verifying that every lattice circle carries
//! exactly one simple eigenvalue, projection-norm scans over index sets, and
//! the final classification of the line operator.

use crate::bloch::{
    build_eigenpair, eigenvalues_near_lattice, BlochEigenvalue, CharacteristicFn, Eigenpair,
};
use crate::contour;
use crate::error::Error;
use crate::potential::{
    check_condition_2, lemma1_margin, lemma2_margin, shifted_margins, ConditionMargin, PotentialQ,
    ShiftReport, SignBranch,
};
use crate::quad::QuadGrid;
use crate::{Result, C64};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// Which perturbation lemma applies, from `|Re b|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `|Re b| ≥ 1`: unit circles, threshold `4/π`.
    Lemma1,
    /// `0 < |Re b| < 1`: circles of radius `|Re b|`.
    Lemma2,
    /// `Re b = 0`: no circle picture available.
    None,
}

pub fn regime_of(re_b: f64) -> Regime {
    if re_b.abs() >= 1.0 {
        Regime::Lemma1
    } else if re_b.abs() > 1e-12 {
        Regime::Lemma2
    } else {
        Regime::None
    }
}

/// Upper estimate of `Σ_{n∈Z} 1/|λ − (2n+t+ib)|²` on the unit circle,
/// parameterized by the real offset `x ∈ [−1, 1]`:
/// `1 + Σ_{s≥1} [1/(4s²+4sx+1) + 1/(4s²−4sx+1)]` plus a closed-form tail
/// bound (`Σ_{s>T} 2/(4s²−4s)` telescopes to `1/(2T)`).
pub fn series_bound_lemma1(x: f64, terms: usize) -> f64 {
    assert!(x.abs() <= 1.0 + 1e-12, "offset must satisfy |x| ≤ 1");
    assert!(terms >= 1);
    let mut acc = 1.0;
    for s in 1..=terms {
        let s2 = 4.0 * (s as f64) * (s as f64);
        let sx = 4.0 * s as f64 * x;
        acc += 1.0 / (s2 + sx + 1.0) + 1.0 / (s2 - sx + 1.0);
    }
    acc + 0.5 / terms as f64
}

/// The `|Re b| < 1` variant: `1/rb² + Σ_{s≥1} [1/(4s²+4sx+rb²) + 1/(4s²−4sx+rb²)]`
/// with the same tail bound; requires `|x| ≤ rb` and `0 < rb < 1`.
pub fn series_bound_lemma2(x: f64, rb: f64, terms: usize) -> f64 {
    assert!(rb > 0.0 && rb < 1.0, "rb must lie in (0, 1)");
    assert!(x.abs() <= rb + 1e-12, "offset must satisfy |x| ≤ rb");
    assert!(terms >= 1);
    let rb2 = rb * rb;
    let mut acc = 1.0 / rb2;
    for s in 1..=terms {
        let s2 = 4.0 * (s as f64) * (s as f64);
        let sx = 4.0 * s as f64 * x;
        acc += 1.0 / (s2 + sx + rb2) + 1.0 / (s2 - sx + rb2);
    }
    acc + 0.5 / terms as f64
}

/// Certificate that one lattice circle lies in the resolvent set and
/// encloses exactly one eigenvalue.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CircleCertificate {
    pub t: f64,
    pub k: i32,
    /// `+` for the center `2k + (t+ib)`, `−` for `2k − (t+ib)`.
    pub branch: SignBranch,
    pub center: C64,
    pub radius: f64,
    pub min_abs_delta: f64,
    pub winding: i64,
    pub passed: bool,
}

/// Sample `|Δ|` on each lattice circle and count the enclosed eigenvalues.
/// A certificate passes iff no sampled zero is found and the winding is
/// exactly one. `center_offset` shifts every center (used when only the
/// shifted conditions hold: the spectrum of `Q` is that of `Q + aI` minus `a`).
pub fn circle_certificates(
    q: &PotentialQ,
    t: f64,
    k_range: (i32, i32),
    regime: Regime,
    samples: usize,
    center_offset: C64,
    tol: f64,
) -> Result<Vec<CircleCertificate>> {
    let b = q.mean_b();
    let radius = match regime {
        Regime::Lemma1 => 1.0,
        Regime::Lemma2 => b.re.abs(),
        Regime::None => {
            return Err(Error::InvalidConfig(
                "circle certificates need |Re b| > 0".into(),
            ))
        }
    };
    let map = CharacteristicFn::new(q, t, tol);
    let cells: Vec<(i32, SignBranch)> = (k_range.0..=k_range.1)
        .flat_map(|k| [(k, SignBranch::Plus), (k, SignBranch::Minus)])
        .collect();
    cells
        .par_iter()
        .map(|&(k, branch)| {
            let j = if branch == SignBranch::Plus { 2 } else { 1 };
            let center = crate::bloch::lattice_point(k, j, t, b) + center_offset;
            let path = |s: f64| contour::circle_point(center, radius, s);
            match contour::winding_number(&map, &path, samples.max(8)) {
                Ok(w) => Ok(CircleCertificate {
                    t,
                    k,
                    branch,
                    center,
                    radius,
                    min_abs_delta: w.min_abs,
                    winding: w.winding,
                    passed: w.min_abs > 0.0 && w.winding == 1,
                }),
                Err(Error::ContourOnRoot { min_abs, .. }) => Ok(CircleCertificate {
                    t,
                    k,
                    branch,
                    center,
                    radius,
                    min_abs_delta: min_abs,
                    winding: -1,
                    passed: false,
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Operator norm of the rank-one projection `f ↦ (f, Φ*) Φ / α`,
/// which equals `‖Φ‖·‖Φ*‖/|α|`.
pub fn projection_norm(pair: &Eigenpair) -> Result<f64> {
    let np = pair.phi.norm_l2();
    let ns = pair.phi_star.norm_l2();
    if pair.alpha.norm() < 1e-12 * (np * ns).max(1e-300) {
        return Err(Error::DegeneratePairing { alpha_abs: pair.alpha.norm() });
    }
    Ok(np * ns / pair.alpha.norm())
}

/// Operator norm of `f ↦ Σ_{k∈D} (f, Φ*_k) Φ_k / α_k` on the discretized
/// L² space. The norm is the largest singular value, computed through the
/// r×r product `A^H·G_Φ·A·G_Ψ` of Gram matrices by power iteration.
pub fn e_gamma_norm(pairs: &[&Eigenpair]) -> Result<f64> {
    let r = pairs.len();
    if r == 0 {
        return Ok(0.0);
    }
    for p in pairs {
        if p.alpha.norm() < 1e-12 {
            return Err(Error::DegeneratePairing { alpha_abs: p.alpha.norm() });
        }
    }
    let g_phi = gram(pairs, |p| &p.phi);
    let g_psi = gram(pairs, |p| &p.phi_star);
    // M = A^H G_Φ A G_Ψ with A = diag(1/α).
    let mut m = vec![vec![C64::new(0.0, 0.0); r]; r];
    for row in 0..r {
        for col in 0..r {
            let mut acc = C64::new(0.0, 0.0);
            for mid in 0..r {
                let a_row = pairs[row].alpha.conj().inv();
                let a_mid = pairs[mid].alpha.inv();
                acc += a_row * g_phi[row][mid] * a_mid * g_psi[mid][col];
            }
            m[row][col] = acc;
        }
    }
    // Power iteration for the dominant eigenvalue (real and nonnegative:
    // M is similar to a product of positive semidefinite Gram matrices).
    let mut v = vec![C64::new(1.0, 0.0); r];
    let mut rho_prev = 0.0;
    for _ in 0..1000 {
        let mut w = vec![C64::new(0.0, 0.0); r];
        for (row, wr) in w.iter_mut().enumerate() {
            for (col, vc) in v.iter().enumerate() {
                *wr += m[row][col] * vc;
            }
        }
        let norm_w = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let norm_v = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm_w == 0.0 || norm_v == 0.0 {
            return Ok(0.0);
        }
        let rho = norm_w / norm_v;
        for z in &mut w {
            *z /= norm_w;
        }
        v = w;
        if (rho - rho_prev).abs() <= 1e-12 * rho.max(1.0) {
            return Ok(rho.max(0.0).sqrt());
        }
        rho_prev = rho;
    }
    Ok(rho_prev.max(0.0).sqrt())
}

fn gram<'a, F>(pairs: &[&'a Eigenpair], pick: F) -> Vec<Vec<C64>>
where
    F: Fn(&'a Eigenpair) -> &'a crate::bloch::SampledFunction,
{
    let r = pairs.len();
    let mut g = vec![vec![C64::new(0.0, 0.0); r]; r];
    for row in 0..r {
        for col in 0..r {
            // G[row][col] = (f_col, f_row)
            g[row][col] = pick(pairs[col]).inner(pick(pairs[row]));
        }
    }
    g
}

/// A spectral-singularity candidate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SingularityFlag {
    pub t: f64,
    pub lambda: C64,
    pub kind: SingularityKind,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularityKind {
    MultipleEigenvalue,
    DegeneratePairing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Spectral,
    AsymptoticallySpectral,
    Inconclusive,
    FailsCondition2,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralityReport {
    pub b: C64,
    pub regime: Regime,
    pub condition2: ConditionMargin,
    pub lemma1: [ConditionMargin; 2],
    pub lemma2: [ConditionMargin; 2],
    pub remark2: ShiftReport,
    pub margins_pass: bool,
    pub certificates: Vec<CircleCertificate>,
    pub certificates_pass: bool,
    /// Empirical sup of projection norms over sampled `t` and index sets.
    pub projection_sup: f64,
    /// Largest change of the operator norm under grid doubling.
    pub discretization_defect: f64,
    pub singularities: Vec<SingularityFlag>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub tol: f64,
    pub samples_per_circle: usize,
    /// Number of random index sets for the projection-norm scan.
    pub random_sets: usize,
    pub seed: u64,
    /// Evaluate eigenpairs on every `stride`-th point of the `t` grid.
    pub projection_t_stride: usize,
    pub grid_nodes_per_piece: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            samples_per_circle: 64,
            random_sets: 100,
            seed: 0xd17ac,
            projection_t_stride: 4,
            grid_nodes_per_piece: 64,
        }
    }
}

/// Default `t` grid: `count` equispaced points of `(−1, 1]` including the
/// endpoint 1 and values near 0 and ±1.
pub fn default_t_grid(count: usize) -> Vec<f64> {
    let n = count.max(2);
    (1..=n).map(|k| -1.0 + 2.0 * k as f64 / n as f64).collect()
}

/// Full spectrality classification at desk scale.
///
/// The verdict is `spectral` when a perturbation-lemma margin (raw or
/// shifted) passes and every circle certificate over the `t` grid confirms
/// exactly one simple eigenvalue; `asymptotically_spectral` when only the
/// separation condition holds; `inconclusive` when margins pass but the
/// certificates contradict them numerically.
pub fn classify(
    q: &PotentialQ,
    t_grid: &[f64],
    n_range: (i32, i32),
    opts: &ClassifyOptions,
) -> Result<SpectralityReport> {
    let b = q.mean_b();
    let condition2 = check_condition_2(q);
    let lemma1 = [
        lemma1_margin(q, SignBranch::Plus),
        lemma1_margin(q, SignBranch::Minus),
    ];
    let lemma2 = [
        lemma2_margin(q, SignBranch::Plus),
        lemma2_margin(q, SignBranch::Minus),
    ];
    let remark2 = shifted_margins(q);
    let regime = regime_of(b.re);

    if !condition2.satisfied {
        return Ok(SpectralityReport {
            b,
            regime,
            condition2,
            lemma1,
            lemma2,
            remark2,
            margins_pass: false,
            certificates: Vec::new(),
            certificates_pass: false,
            projection_sup: f64::NAN,
            discretization_defect: f64::NAN,
            singularities: Vec::new(),
            verdict: Verdict::FailsCondition2,
        });
    }

    let raw_pass = match regime {
        Regime::Lemma1 => lemma1.iter().all(|m| m.satisfied && !m.precondition_failed),
        Regime::Lemma2 => lemma2.iter().all(|m| m.satisfied && !m.precondition_failed),
        Regime::None => false,
    };
    let shifted_pass = remark2.satisfied;
    let margins_pass = raw_pass || shifted_pass;
    let center_offset = if raw_pass || !shifted_pass {
        C64::new(0.0, 0.0)
    } else {
        // Only the shifted conditions hold: the lemma applies to Q + aI,
        // whose eigenvalues sit at the reference lattice; shifting back
        // moves every circle center by −a.
        -remark2.joint_a
    };

    // Circle certificates over the whole t grid.
    let mut certificates = Vec::new();
    if regime != Regime::None {
        for &t in t_grid {
            certificates.extend(circle_certificates(
                q,
                t,
                n_range,
                regime,
                opts.samples_per_circle,
                center_offset,
                opts.tol,
            )?);
        }
    }
    let certificates_pass = !certificates.is_empty() && certificates.iter().all(|c| c.passed);

    // Eigenvalue scan at every t: multiplicities feed the singularity list.
    let mut singularities: Vec<SingularityFlag> = Vec::new();
    let scans: Vec<(f64, crate::bloch::LatticeSearch)> = t_grid
        .iter()
        .map(|&t| Ok((t, eigenvalues_near_lattice(q, t, n_range.0, n_range.1, opts.tol)?)))
        .collect::<Result<Vec<_>>>()?;
    for (t, scan) in &scans {
        for ev in &scan.eigenvalues {
            if ev.multiplicity > 1 {
                singularities.push(SingularityFlag {
                    t: *t,
                    lambda: ev.lambda,
                    kind: SingularityKind::MultipleEigenvalue,
                });
            }
        }
    }

    // Projection-norm scan on a t subsample: rank-one norms for every simple
    // pair plus random index sets, with one grid-doubling check per t.
    let selected: Vec<&(f64, crate::bloch::LatticeSearch)> = scans
        .iter()
        .step_by(opts.projection_t_stride.max(1))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut projection_sup: f64 = 0.0;
    let mut discretization_defect: f64 = 0.0;
    let sets_per_t = opts.random_sets.div_ceil(selected.len().max(1));
    for (t, scan) in selected {
        let simple: Vec<&BlochEigenvalue> = scan
            .eigenvalues
            .iter()
            .filter(|e| e.multiplicity == 1)
            .collect();
        if simple.is_empty() {
            continue;
        }
        let grid = Arc::new(QuadGrid::on_interval(
            0.0,
            PI,
            8,
            opts.grid_nodes_per_piece,
            &q.breakpoints(),
        ));
        let mut pairs = Vec::new();
        for ev in &simple {
            match build_eigenpair(q, *t, ev, &grid, opts.tol) {
                Ok(p) => pairs.push(p),
                Err(Error::DegeneratePairing { .. }) => singularities.push(SingularityFlag {
                    t: *t,
                    lambda: ev.lambda,
                    kind: SingularityKind::DegeneratePairing,
                }),
                Err(e) => return Err(e),
            }
        }
        if pairs.is_empty() {
            continue;
        }
        for p in &pairs {
            match projection_norm(p) {
                Ok(norm) => projection_sup = projection_sup.max(norm),
                Err(Error::DegeneratePairing { .. }) => singularities.push(SingularityFlag {
                    t: *t,
                    lambda: p.eigenvalue.lambda,
                    kind: SingularityKind::DegeneratePairing,
                }),
                Err(e) => return Err(e),
            }
        }
        // Grid-doubling consistency on the full index set.
        let all: Vec<&Eigenpair> = pairs.iter().collect();
        let norm_full = e_gamma_norm(&all)?;
        projection_sup = projection_sup.max(norm_full);
        let fine_grid = Arc::new(QuadGrid::on_interval(
            0.0,
            PI,
            8,
            opts.grid_nodes_per_piece * 2,
            &q.breakpoints(),
        ));
        let fine_pairs: Vec<Eigenpair> = pairs
            .iter()
            .filter_map(|p| build_eigenpair(q, *t, &p.eigenvalue, &fine_grid, opts.tol).ok())
            .collect();
        if fine_pairs.len() == pairs.len() {
            let fine_refs: Vec<&Eigenpair> = fine_pairs.iter().collect();
            let norm_fine = e_gamma_norm(&fine_refs)?;
            discretization_defect = discretization_defect.max((norm_fine - norm_full).abs());
        }
        // Random index sets.
        for _ in 0..sets_per_t {
            let size = rng.gen_range(1..=pairs.len());
            let mut idx: Vec<usize> = (0..pairs.len()).collect();
            idx.shuffle(&mut rng);
            let subset: Vec<&Eigenpair> = idx[..size].iter().map(|&i| &pairs[i]).collect();
            projection_sup = projection_sup.max(e_gamma_norm(&subset)?);
        }
    }

    let verdict = if margins_pass && certificates_pass && singularities.is_empty() {
        Verdict::Spectral
    } else if margins_pass {
        // The lemma margins promise simple, circled eigenvalues but the
        // numerical certificates disagree; report the contradiction.
        Verdict::Inconclusive
    } else {
        Verdict::AsymptoticallySpectral
    };

    Ok(SpectralityReport {
        b,
        regime,
        condition2,
        lemma1,
        lemma2,
        remark2,
        margins_pass,
        certificates,
        certificates_pass,
        projection_sup,
        discretization_defect,
        singularities,
        verdict,
    })
}

/// Deterministic CSV table of circle certificates.
pub fn certificate_table_csv(certs: &[CircleCertificate]) -> String {
    let mut out =
        String::from("t,k,branch,re_center,im_center,radius,min_abs_delta,winding,passed\n");
    for c in certs {
        out.push_str(&format!(
            "{:.16e},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n",
            c.t,
            c.k,
            if c.branch == SignBranch::Plus { "+" } else { "-" },
            c.center.re,
            c.center.im,
            c.radius,
            c.min_abs_delta,
            c.winding,
            c.passed
        ));
    }
    out
}
