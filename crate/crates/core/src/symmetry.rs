//! Line polynomials, half-space classification and conjugate pairs.
//!
//! For a solution `u`, `P(t) = Re (∂x1 u − i ∂x2 u)²(t, 0)` is fitted by a
//! polynomial of degree at most `4k − 3`. Off the contact set `∂x2 u = 0`, so
//! `P = (∂x1 u)² ≥ 0`; on it `∂x1 u = 0` and `P = −(∂x2 u)² ≤ 0`. For a
//! symmetric pair `(u, v)` the two line polynomials satisfy `P(t) = −Q(−t)`.
//!
//! A half-space solution is a translate `U_τ(q)` of a profile `q`; the
//! profile is read off from half modes on a circle centred at `(τ, 0)`.
//! Mirrored profiles satisfy `α_l(v) = (−1)^l α_l(u)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::admissibility::{conjugate_datum, InfinityDatum, Profile};
use crate::error::{Error, Result};
use crate::expansion::{extract_b, half_mode_coeff, CircleTrace, DEFAULT_N_THETA};
use crate::slit_basis::{conjugate_expansion, translate_expansion, HalfIntIndex, SlitExpansion};
use crate::vi_solver::{
    assemble, contact_runs, default_radii, solve_psor, solve_with_expansion_refinement, BoundaryMode,
    ContactReport, DiscreteSolution, Mesh, PsorOptions,
};

/// Nodes excluded on each side of a free-boundary point or domain edge.
pub const EXCLUSION_NODES: usize = 4;
/// Largest admissible `(σmax / σmin)²` of a fit design matrix.
pub const MAX_CONDITION: f64 = 1e12;
/// Allowed `|lead − 1|` when recovering a profile.
pub const LEAD_TOLERANCE: f64 = 1e-2;

/// Gradient samples on the thin line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSample {
    pub x1: f64,
    pub d1: f64,
    pub d2: f64,
    pub contact: bool,
}

impl LineSample {
    /// `(∂x1 u)² − (∂x2 u)²`.
    pub fn p_value(&self) -> f64 {
        self.d1 * self.d1 - self.d2 * self.d2
    }
}

/// Contact runs used for classification: single-node islands dropped.
pub fn classification_contact(sol: &DiscreteSolution) -> ContactReport {
    contact_runs(sol, 2)
}

/// `∂x1 u` by five-point central differences, `∂x2 u` by the five-point
/// one-sided formula into `x2 > 0`, both fourth order. Samples within [`EXCLUSION_NODES`] nodes of a
/// free-boundary point or of the left/right edge are dropped.
pub fn line_gradient(sol: &DiscreteSolution) -> Vec<LineSample> {
    let m = &sol.mesh;
    let h = m.h();
    let nx = m.nx();
    let contact = classification_contact(sol);
    let to_index = |x: f64| ((x + m.l()) / h).round() as usize;
    let mut fb = Vec::new();
    let mut runs = Vec::new();
    for &(a, b) in &contact.intervals {
        let (ia, ib) = (to_index(a), to_index(b));
        runs.push((ia, ib));
        if ia > 1 {
            fb.push(ia);
        }
        if ib + 2 < nx {
            fb.push(ib);
        }
    }
    let e = EXCLUSION_NODES;
    (e + 1..nx - e - 1)
        .filter(|&i| fb.iter().all(|&f| i.abs_diff(f) > e))
        .map(|i| {
            let u = |i: usize, j: usize| sol.value(i, j);
            LineSample {
                x1: m.x1(i),
                d1: (u(i - 2, 0) - 8.0 * u(i - 1, 0) + 8.0 * u(i + 1, 0) - u(i + 2, 0)) / (12.0 * h),
                d2: (-25.0 * u(i, 0) + 48.0 * u(i, 1) - 36.0 * u(i, 2) + 16.0 * u(i, 3) - 3.0 * u(i, 4)) / (12.0 * h),
                contact: runs.iter().any(|&(a, b)| a <= i && i <= b),
            }
        })
        .collect()
}

/// Least-squares polynomial on a window, stored in monomial form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinePolynomial {
    /// Ascending monomial coefficients in `t`.
    pub coeffs: Vec<f64>,
    pub fit_window: (f64, f64),
    /// `max |fit − sample| / max |sample|`.
    pub fit_residual: f64,
    /// `(σmax / σmin)²` of the Chebyshev design matrix.
    pub condition: f64,
}

impl LinePolynomial {
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Monomial coefficients of `T_0..T_degree` composed with `s = αt + β`.
fn chebyshev_monomials(degree: usize, alpha: f64, beta: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![vec![1.0]];
    if degree >= 1 {
        out.push(vec![beta, alpha]);
    }
    for n in 1..degree {
        let mut next = vec![0.0; n + 2];
        for (i, &c) in out[n].iter().enumerate() {
            next[i] += 2.0 * beta * c;
            next[i + 1] += 2.0 * alpha * c;
        }
        for (i, &c) in out[n - 1].iter().enumerate() {
            next[i] -= c;
        }
        out.push(next);
    }
    out
}

/// Least-squares fit of `ys` at `xs` by a polynomial of the given degree in
/// a Chebyshev basis rescaled to `[min xs, max xs]`.
pub fn fit_line_polynomial(xs: &[f64], ys: &[f64], degree: usize) -> Result<LinePolynomial> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { expected: xs.len(), got: ys.len() });
    }
    if xs.len() <= degree + 1 {
        return Err(Error::InsufficientSamples(format!(
            "{} samples for a degree-{degree} fit",
            xs.len()
        )));
    }
    let a = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let b = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(b > a) {
        return Err(Error::InsufficientSamples("degenerate fit window".into()));
    }
    let alpha = 2.0 / (b - a);
    let beta = -(a + b) / (b - a);
    let design = DMatrix::from_fn(xs.len(), degree + 1, |r, c| {
        let s = alpha * xs[r] + beta;
        (c as f64 * s.clamp(-1.0, 1.0).acos()).cos()
    });
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { (smax / smin).powi(2) } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(Error::IllConditionedFit { condition });
    }
    let y = DVector::from_column_slice(ys);
    let cheb = svd
        .solve(&y, 0.0)
        .map_err(|_| Error::IllConditionedFit { condition })?;
    let fitted = &design * &cheb;
    let y_scale = ys.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let misfit = fitted.iter().zip(ys).fold(0.0f64, |m, (f, y)| m.max((f - y).abs()));
    let fit_residual = if y_scale > 0.0 { misfit / y_scale } else { misfit };
    let basis = chebyshev_monomials(degree, alpha, beta);
    let mut coeffs = vec![0.0; degree + 1];
    for (n, poly) in basis.iter().enumerate() {
        for (i, &c) in poly.iter().enumerate() {
            coeffs[i] += cheb[n] * c;
        }
    }
    Ok(LinePolynomial { coeffs, fit_window: (a, b), fit_residual, condition })
}

/// Fits `P` from the line gradient with degree `4k − 3`.
pub fn compute_p(sol: &DiscreteSolution, k: usize) -> Result<LinePolynomial> {
    compute_p_with_degree(sol, 4 * k - 3)
}

pub fn compute_p_with_degree(sol: &DiscreteSolution, degree: usize) -> Result<LinePolynomial> {
    let samples = line_gradient(sol);
    let xs: Vec<f64> = samples.iter().map(|s| s.x1).collect();
    let ys: Vec<f64> = samples.iter().map(LineSample::p_value).collect();
    fit_line_polynomial(&xs, &ys, degree)
}

/// Coefficient-wise comparison of `P` with `−Q(−t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSymmetry {
    /// `max_i |p_i − (−1)^{i+1} q_i| / scale`.
    pub deviation: f64,
    /// `max(|p|∞, |q|∞)` over coefficients.
    pub scale: f64,
    pub pass: bool,
}

pub fn pair_symmetry_check(p: &LinePolynomial, q: &LinePolynomial, tol: f64) -> Result<PairSymmetry> {
    let (pa, pb) = p.fit_window;
    let (qa, qb) = q.fit_window;
    let slack = 1e-9 * (1.0 + pa.abs().max(pb.abs()));
    if (pa + qb).abs() > slack || (pb + qa).abs() > slack {
        return Err(Error::WindowMismatch(pa, pb, qa, qb));
    }
    let n = p.coeffs.len().max(q.coeffs.len());
    let scale = p.max_abs_coeff().max(q.max_abs_coeff());
    let mut worst = 0.0f64;
    for i in 0..n {
        let pi = p.coeffs.get(i).copied().unwrap_or(0.0);
        let qi = q.coeffs.get(i).copied().unwrap_or(0.0);
        let mirrored = if i % 2 == 0 { -qi } else { qi };
        worst = worst.max((pi - mirrored).abs());
    }
    let deviation = if scale > 0.0 { worst / scale } else { worst };
    Ok(PairSymmetry { deviation, scale, pass: deviation <= tol })
}

/// Profile read off a solution around `(τ, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredProfile {
    pub alpha: Vec<f64>,
    /// Estimated coefficient of the leading term; 1 for a translated profile.
    pub lead: f64,
    pub radius: f64,
}

/// Default recovery radius `(L − |τ|) / 2`.
pub fn default_recovery_radius(mesh: &Mesh, tau: f64) -> f64 {
    0.5 * (mesh.l() - tau.abs())
}

/// Half modes of `u_h − U_τ(u_{2k−1/2})` on the circle of radius `radius`
/// centred at `(τ, 0)`, without the normalization check.
pub fn profile_modes(sol: &DiscreteSolution, tau: f64, k: usize, radius: f64) -> Result<RecoveredProfile> {
    let lead_index = HalfIntIndex(2 * k as i32 - 1);
    let model = SlitExpansion::monomial(lead_index.0, 1.0);
    let tr = CircleTrace::from_difference(sol, radius, tau, DEFAULT_N_THETA, |pt| {
        model.eval(pt.shifted(-tau)).expect("regular")
    })?;
    let top = lead_index.exponent();
    let lead = 1.0 + radius.powf(-top) * half_mode_coeff(&tr, 2 * k);
    let alpha = (1..=2 * k - 2)
        .map(|l| radius.powf(-(top - l as f64)) * half_mode_coeff(&tr, 2 * k - l))
        .collect();
    Ok(RecoveredProfile { alpha, lead, radius })
}

/// `α_l = R^{−(2k−1/2−l)} · mode_{2k−l}` at the default radius; fails when the
/// leading coefficient is not 1 within [`LEAD_TOLERANCE`].
pub fn recover_profile(sol: &DiscreteSolution, tau: f64, k: usize) -> Result<RecoveredProfile> {
    recover_profile_at(sol, tau, k, default_recovery_radius(&sol.mesh, tau))
}

pub fn recover_profile_at(sol: &DiscreteSolution, tau: f64, k: usize, radius: f64) -> Result<RecoveredProfile> {
    let rec = profile_modes(sol, tau, k, radius)?;
    if (rec.lead - 1.0).abs() > LEAD_TOLERANCE {
        return Err(Error::LeadingCoefficientOffUnity { value: rec.lead });
    }
    Ok(rec)
}

/// Coefficient of the `cos(θ/2)` mode of `u_h − U_t(u_{2k−1/2})` on the
/// circle of radius `radius` centred at `(t, 0)`. It vanishes when `u_h` is a
/// translate `U_t(q)`, since no profile carries `u_{±1/2}` terms.
pub fn slit_mode(sol: &DiscreteSolution, t: f64, k: usize, radius: f64) -> Result<f64> {
    let model = SlitExpansion::monomial(2 * k as i32 - 1, 1.0);
    let tr = CircleTrace::from_difference(sol, radius, t, DEFAULT_N_THETA, |pt| {
        model.eval(pt.shifted(-t)).expect("regular")
    })?;
    Ok(half_mode_coeff(&tr, 1))
}

/// Sub-grid translation estimate: the root of [`slit_mode`] within `2h` of
/// the node endpoint, by bisection. Falls back to `endpoint` when the mode
/// does not change sign on that bracket.
pub fn refine_tau(sol: &DiscreteSolution, k: usize, endpoint: f64) -> Result<f64> {
    let h = sol.mesh.h();
    let radius = default_recovery_radius(&sol.mesh, endpoint.abs() + 2.0 * h);
    let g = |t: f64| slit_mode(sol, t, k, radius);
    let (mut lo, mut hi) = (endpoint - 2.0 * h, endpoint + 2.0 * h);
    let mut g_lo = g(lo)?;
    let g_hi = g(hi)?;
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() {
        return Ok(endpoint);
    }
    while hi - lo > 1e-12 * h {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid)?;
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section minimizer of `f` on `[a, b]`.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// `max |u_h − U_τ(q)| / scale` over circles of radius `R₀` and `1.3 R₀`
/// centred at `(τ, 0)`.
pub fn representation_residual(sol: &DiscreteSolution, tau: f64, profile: &Profile) -> Result<f64> {
    let q = profile.q();
    let r0 = default_recovery_radius(&sol.mesh, tau);
    let scale = if sol.scale > 0.0 { sol.scale } else { 1.0 };
    let mut worst = 0.0f64;
    for r in [r0, 1.3 * r0] {
        let tr = CircleTrace::from_difference(sol, r, tau, 1024, |pt| q.eval(pt.shifted(-tau)).expect("regular"))?;
        worst = tr.values.iter().fold(worst, |m, v| m.max(v.abs()));
    }
    Ok(worst / scale)
}

/// Verdict and diagnostics for one solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub half_space: bool,
    pub contact: ContactReport,
    /// Right end `a` of the contact half-line `(−∞, a]`; `None` unless
    /// `half_space`.
    pub endpoint: Option<f64>,
    /// Translation of the fitted profile: whichever of the [`refine_tau`]
    /// root, the node anchor and the residual minimizer within `2h` of it
    /// gives the smallest representation residual. When the
    /// solution is not half-space the fit is anchored at the right end of the
    /// contact run touching the left boundary and describes the nearest
    /// translate; `None` if no run touches it.
    pub tau: Option<f64>,
    /// Recovered `α_1..α_{2k−2}`; empty when `tau` is `None`.
    pub alpha: Vec<f64>,
    pub lead: Option<f64>,
    pub representation_residual: Option<f64>,
    #[serde(rename = "P")]
    pub p_poly: Option<LinePolynomial>,
}

/// Half-space verdict from the contact flags, plus the translated-profile
/// fit and the line polynomial.
pub fn classify_half_space(sol: &DiscreteSolution) -> Result<ClassificationReport> {
    if !sol.converged {
        return Err(Error::NotConverged);
    }
    let k = sol.datum.k();
    let contact = classification_contact(sol);
    let half_space = contact.intervals.len() == 1 && contact.touches_left_boundary;
    let p_poly = compute_p(sol, k).ok();
    let anchor = if contact.touches_left_boundary { contact.intervals.first().map(|iv| iv.1) } else { None };
    let mut report = ClassificationReport {
        half_space,
        endpoint: if half_space { anchor } else { None },
        contact,
        tau: None,
        alpha: Vec::new(),
        lead: None,
        representation_residual: None,
        p_poly,
    };
    let Some(anchor) = anchor else {
        return Ok(report);
    };
    // The refined root is noisy when the cos(θ/2) mode is flat in the shift,
    // so it competes with the node anchor and with the residual minimizer on
    // the same bracket.
    let fit = |tau: f64| -> Option<(RecoveredProfile, f64)> {
        let rec = profile_modes(sol, tau, k, default_recovery_radius(&sol.mesh, tau)).ok()?;
        let res = representation_residual(sol, tau, &Profile::new(k, rec.alpha.clone()).ok()?).ok()?;
        Some((rec, res))
    };
    let refined = refine_tau(sol, k, anchor).unwrap_or(anchor);
    let h = sol.mesh.h();
    let minimizer = golden_min(|t| fit(t).map_or(f64::INFINITY, |f| f.1), anchor - 2.0 * h, anchor + 2.0 * h, 1e-6 * h);
    let mut best: Option<(f64, RecoveredProfile, f64)> = None;
    for tau in [refined, anchor, minimizer] {
        if let Some((rec, res)) = fit(tau) {
            if best.as_ref().is_none_or(|b| res < b.2) {
                best = Some((tau, rec, res));
            }
        }
    }
    match best {
        Some((tau, rec, res)) => {
            report.tau = Some(tau);
            report.alpha = rec.alpha;
            report.lead = Some(rec.lead);
            report.representation_residual = Some(res);
        }
        None => report.tau = Some(refined),
    }
    Ok(report)
}

/// Which pair of problems [`pair_run`] solves.
#[derive(Debug, Clone, PartialEq)]
pub enum PairInstance {
    /// `p` and its conjugate, solved with expansion refinement.
    Datum(InfinityDatum),
    /// Closed-form pair `U_τ(q)` and `U_{−τ}(q̄)` with `q̄` the conjugate
    /// profile, imposed as exact boundary data.
    ClosedForm { profile: Profile, tau: f64 },
}

/// Settings for [`pair_run`].
#[derive(Debug, Clone, PartialEq)]
pub struct PairOptions {
    pub mesh: Mesh,
    pub psor: PsorOptions,
    pub rounds: usize,
    /// `None` selects [`default_radii`].
    pub radii: Option<Vec<f64>>,
    /// Bound on the coefficient-wise `P` vs `−Q(−t)` deviation.
    pub pair_tol: f64,
    /// Bound on the relative `α` mirror error.
    pub alpha_tol: f64,
    /// Extra `α` mirror allowance per unit of antisymmetry defect.
    pub defect_gain: f64,
}

impl PairOptions {
    pub fn new(mesh: Mesh) -> Self {
        Self {
            mesh,
            psor: PsorOptions::default(),
            rounds: 3,
            radii: None,
            pair_tol: 0.02,
            alpha_tol: 0.01,
            defect_gain: 1.0,
        }
    }
}

/// Outcome of a conjugate-pair run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub b_plus: Vec<f64>,
    pub b_minus: Vec<f64>,
    /// `Σ_j |b⁺_j − (−1)^{j+1} b⁻_j|`.
    pub antisymmetry_defect: f64,
    pub u: ClassificationReport,
    pub v: ClassificationReport,
    pub symmetry: Option<PairSymmetry>,
    /// `max_l |α_l(u) − (−1)^l α_l(v)| / max(1, |α(u)|∞)`.
    pub alpha_mirror_error: f64,
    /// `|τ(u) + τ(v)|`.
    pub endpoint_sum: f64,
    /// Larger of the two representation residuals.
    pub misfit: f64,
    pub pass: bool,
}

/// Antisymmetry defect of two decay vectors.
pub fn antisymmetry_defect(b_plus: &[f64], b_minus: &[f64]) -> f64 {
    b_plus
        .iter()
        .zip(b_minus)
        .enumerate()
        .map(|(i, (p, m))| {
            let j = i + 1;
            let mirrored = if j % 2 == 1 { *m } else { -m };
            (p - mirrored).abs()
        })
        .sum()
}

/// `max_l |α_l(u) − (−1)^l α_l(v)| / max(1, |α(u)|∞)`; infinite when either
/// profile is missing.
pub fn alpha_mirror_error(alpha_u: &[f64], alpha_v: &[f64]) -> f64 {
    if alpha_u.is_empty() || alpha_u.len() != alpha_v.len() {
        return f64::INFINITY;
    }
    let scale = alpha_u.iter().fold(1.0f64, |m, a| m.max(a.abs()));
    alpha_u
        .iter()
        .zip(alpha_v)
        .enumerate()
        .map(|(i, (a, b))| {
            let l = i + 1;
            let mirrored = if l % 2 == 0 { *b } else { -b };
            (a - mirrored).abs()
        })
        .fold(0.0, f64::max)
        / scale
}

fn solve_member(
    d: &InfinityDatum,
    mode: Option<BoundaryMode>,
    n_terms: usize,
    opts: &PairOptions,
    radii: &[f64],
) -> Result<DiscreteSolution> {
    match mode {
        Some(mode) => solve_psor(&assemble(d, opts.mesh, mode)?, &opts.psor),
        None => {
            solve_with_expansion_refinement(d, opts.mesh, n_terms, opts.rounds, &opts.psor, radii)
                .map(|r| r.solution)
        }
    }
}

/// Datum of `U_shift(profile)`: the nonnegative-homogeneity part of its
/// re-expansion about the origin.
pub fn translated_datum(profile: &Profile, shift: f64) -> Result<InfinityDatum> {
    let e = translate_expansion(&profile.q(), -shift, 4 * profile.k + 4).expansion;
    InfinityDatum::from_expansion(profile.k, &e.nonnegative_part())
}

/// Solves both members of a pair (concurrently), extracts `b⁺`, `b⁻`,
/// classifies both and compares their line polynomials and profiles.
pub fn pair_run(instance: &PairInstance, n_terms: usize, opts: &PairOptions) -> Result<PairReport> {
    let (du, dv, mu, mv) = match instance {
        PairInstance::Datum(d) => (d.clone(), conjugate_datum(d), None, None),
        PairInstance::ClosedForm { profile, tau } => {
            let q = profile.q();
            let lead = HalfIntIndex(2 * profile.k as i32 - 1);
            let qbar = conjugate_expansion(&q, lead)?;
            (
                translated_datum(profile, *tau)?,
                translated_datum(&profile.conjugate(), -*tau)?,
                Some(BoundaryMode::Exact { profile: q, shift: *tau }),
                Some(BoundaryMode::Exact { profile: qbar, shift: -*tau }),
            )
        }
    };
    let radii = opts.radii.clone().unwrap_or_else(|| default_radii(&opts.mesh));
    let (su, sv) = std::thread::scope(|s| {
        let hu = s.spawn(|| solve_member(&du, mu, n_terms, opts, &radii));
        let hv = s.spawn(|| solve_member(&dv, mv, n_terms, opts, &radii));
        (
            hu.join().expect("solver thread panicked"),
            hv.join().expect("solver thread panicked"),
        )
    });
    let (su, sv) = (su?, sv?);
    let b_plus = extract_b(&su, &du, &radii, n_terms)?.b_final;
    let b_minus = extract_b(&sv, &dv, &radii, n_terms)?.b_final;
    let defect = antisymmetry_defect(&b_plus, &b_minus);
    let u = classify_half_space(&su)?;
    let v = classify_half_space(&sv)?;
    let symmetry = match (&u.p_poly, &v.p_poly) {
        (Some(p), Some(q)) => pair_symmetry_check(p, q, opts.pair_tol).ok(),
        _ => None,
    };
    let alpha_err = alpha_mirror_error(&u.alpha, &v.alpha);
    let endpoint_sum = match (u.tau, v.tau) {
        (Some(a), Some(b)) => (a + b).abs(),
        _ => f64::INFINITY,
    };
    let misfit = u
        .representation_residual
        .unwrap_or(f64::INFINITY)
        .max(v.representation_residual.unwrap_or(f64::INFINITY));
    let h = opts.mesh.h();
    let pass = u.half_space
        && v.half_space
        && symmetry.is_some_and(|s| s.pass)
        && alpha_err <= opts.alpha_tol + opts.defect_gain * defect
        && endpoint_sum <= 4.0 * h;
    Ok(PairReport {
        b_plus,
        b_minus,
        antisymmetry_defect: defect,
        u,
        v,
        symmetry,
        alpha_mirror_error: alpha_err,
        endpoint_sum,
        misfit,
        pass,
    })
}
