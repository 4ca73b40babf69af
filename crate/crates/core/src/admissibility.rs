//! Data at infinity, admissible profiles and translated-profile barriers.
//!
//! A datum is `p = u_{2k−1/2} + Σ_{l=1}^{2k−1} a_l u_{2k−1/2−l}` with
//! `|a_l| ≤ 1`. A profile `q = u_{2k−1/2} + Σ_{l=1}^{2k−2} α_l u_{2k−1/2−l}` is
//! admissible when it is itself a global solution of the thin obstacle
//! problem. Since `q` is harmonic off the slit and vanishes on it, that
//! happens exactly when
//!
//! * its trace on the positive `x1`-axis is nonnegative, and
//! * `−∂x2 q(x1, 0+) ≥ 0` along the slit.
//!
//! Both reduce to nonnegativity of a polynomial in `r` on `(0, ∞)`.
//!
//! The barrier solves its triangular system in the `w`-basis (rescaled
//! x1-derivatives of the leading term), where translation acts as a plain
//! Taylor shift; [`BarrierResult::alpha_tilde`] carries those coefficients and
//! [`BarrierResult::profile`] the same profile in the `u`-basis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{nonneg_on_positive_axis, NonnegVerdict, Polynomial};
use crate::slit_basis::{
    midpoint_angles, translate_expansion, u_to_w_coeffs, HalfIntIndex, PlanePoint, SlitExpansion,
    DEFAULT_TAYLOR_ORDER,
};

/// Largest `τ` tried by [`barrier_search`].
pub const TAU_CAP: f64 = 1_048_576.0;

/// Data at infinity in both bases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfinityDatum {
    k: usize,
    a: Vec<f64>,
    a_tilde: Vec<f64>,
}

impl InfinityDatum {
    /// Builds a datum without the `|a_l| ≤ 1` check.
    ///
    /// Closed-form test instances (expansions of translated profiles) often
    /// have coefficients outside the unit box; the solver itself does not
    /// depend on the bound.
    pub fn unchecked(k: usize, a: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDatum("k must be at least 1".into()));
        }
        if a.len() != 2 * k - 1 {
            return Err(Error::LengthMismatch { expected: 2 * k - 1, got: a.len() });
        }
        if let Some((i, v)) = a.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidDatum(format!("a_{} = {v} is not finite", i + 1)));
        }
        let c = u_to_w_coeffs(k);
        // a_l multiplies u_{2k−1/2−l} = w_{2k−1/2−l} / c_{2k−l}.
        let a_tilde = a.iter().enumerate().map(|(i, v)| v / c[2 * k - (i + 1) - 1]).collect();
        Ok(Self { k, a, a_tilde })
    }

    /// Datum from the first `2k−1` nonnegative-homogeneity coefficients below
    /// the leading term of `e`, which must have lead `u_{2k−1/2}` with
    /// coefficient 1.
    pub fn from_expansion(k: usize, e: &SlitExpansion) -> Result<Self> {
        let top = 2 * k as i32 - 1;
        if e.lead() != Some(HalfIntIndex(top)) || (e.coeff_m(top) - 1.0).abs() > 1e-14 {
            return Err(Error::LeadMismatch { lead: top });
        }
        Self::unchecked(k, (1..=top).map(|l| e.coeff_m(top - l)).collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `a_1, …, a_{2k−1}` (u-basis).
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// `ã_1, …, ã_{2k−1}` (w-basis).
    pub fn a_tilde(&self) -> &[f64] {
        &self.a_tilde
    }

    /// Index of the leading term `u_{2k−1/2}`.
    pub fn lead(&self) -> HalfIntIndex {
        HalfIntIndex(2 * self.k as i32 - 1)
    }

    pub fn within_unit_box(&self) -> bool {
        self.a.iter().all(|v| v.abs() <= 1.0)
    }

    /// `p` as an expansion.
    pub fn p(&self) -> SlitExpansion {
        let top = self.lead().0;
        let mut e = SlitExpansion::monomial(top, 1.0);
        for (i, &v) in self.a.iter().enumerate() {
            e.add_term(HalfIntIndex(top - 1 - i as i32), v);
        }
        e
    }
}

/// Validated datum with `|a_l| ≤ 1`.
pub fn validate_datum(k: usize, a: &[f64]) -> Result<InfinityDatum> {
    if k == 0 {
        return Err(Error::InvalidDatum("k must be at least 1".into()));
    }
    if a.len() != 2 * k - 1 {
        return Err(Error::LengthMismatch { expected: 2 * k - 1, got: a.len() });
    }
    if let Some((i, &v)) = a.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
        return Err(Error::CoefficientOutOfRange { index: i + 1, value: v });
    }
    InfinityDatum::unchecked(k, a.to_vec())
}

/// `a_l ↦ (−1)^l a_l`.
pub fn conjugate_datum(d: &InfinityDatum) -> InfinityDatum {
    let a = d
        .a
        .iter()
        .enumerate()
        .map(|(i, &v)| if (i + 1) % 2 == 0 { v } else { -v })
        .collect();
    InfinityDatum::unchecked(d.k, a).expect("conjugation preserves shape")
}

/// Candidate global solution `u_{2k−1/2} + Σ_{l=1}^{2k−2} α_l u_{2k−1/2−l}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub k: usize,
    pub alpha: Vec<f64>,
}

impl Profile {
    pub fn new(k: usize, alpha: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDatum("k must be at least 1".into()));
        }
        if alpha.len() != 2 * k - 2 {
            return Err(Error::LengthMismatch { expected: 2 * k - 2, got: alpha.len() });
        }
        Ok(Self { k, alpha })
    }

    /// The model profile `u_{2k−1/2}`.
    pub fn zero(k: usize) -> Self {
        Self { k, alpha: vec![0.0; 2 * k - 2] }
    }

    pub fn q(&self) -> SlitExpansion {
        let top = 2 * self.k as i32 - 1;
        let mut e = SlitExpansion::monomial(top, 1.0);
        for (i, &v) in self.alpha.iter().enumerate() {
            e.add_term(HalfIntIndex(top - 1 - i as i32), v);
        }
        e
    }

    /// Mirror profile `α_l ↦ (−1)^l α_l`.
    pub fn conjugate(&self) -> Self {
        let alpha = self
            .alpha
            .iter()
            .enumerate()
            .map(|(i, &v)| if (i + 1) % 2 == 0 { v } else { -v })
            .collect();
        Self { k: self.k, alpha }
    }
}

/// Evidence behind an admissibility verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityCertificate {
    pub admissible: bool,
    /// Admissible, but one of the two polynomials touches zero on `(0, ∞)`.
    pub zero_margin: bool,
    /// Ascending coefficients of `r^{−1/2} q(r, 0)`.
    pub trace_poly: Vec<f64>,
    /// Ascending coefficients of `−r^{1/2} ∂x2 q(−r, 0+)`.
    pub slit_poly: Vec<f64>,
    pub trace: NonnegVerdict,
    pub slit: NonnegVerdict,
}

/// Trace and slit-flux polynomials of an expansion with only `m ≥ 0` terms.
pub fn sign_polynomials(e: &SlitExpansion) -> (Polynomial, Polynomial) {
    let top = e.lead().map_or(0, |m| m.0.max(0)) as usize;
    let mut trace = vec![0.0; top + 1];
    let mut slit = vec![0.0; top + 1];
    for (m, c) in e.iter() {
        assert!(m.0 >= 0, "sign polynomials need nonnegative homogeneity");
        let i = m.0 as usize;
        trace[i] = c;
        // −∂x2 u_{m+1/2} at θ = π equals (m+1/2)(−1)^{m+1} r^{m−1/2}.
        let sign = if m.0 % 2 == 0 { -1.0 } else { 1.0 };
        slit[i] = c * m.exponent() * sign;
    }
    (Polynomial::new(trace), Polynomial::new(slit))
}

/// Decides whether `e` (nonnegative homogeneities only) is a global
/// solution.
pub fn expansion_admissible(e: &SlitExpansion) -> AdmissibilityCertificate {
    let (trace_poly, slit_poly) = sign_polynomials(e);
    let trace = nonneg_on_positive_axis(&trace_poly);
    let slit = nonneg_on_positive_axis(&slit_poly);
    let admissible = trace.nonnegative && slit.nonnegative;
    AdmissibilityCertificate {
        admissible,
        zero_margin: admissible && (trace.zero_margin || slit.zero_margin),
        trace_poly: trace_poly.coeffs().to_vec(),
        slit_poly: slit_poly.coeffs().to_vec(),
        trace,
        slit,
    }
}

pub fn profile_admissible(pr: &Profile) -> AdmissibilityCertificate {
    expansion_admissible(&pr.q())
}

/// Forward substitution for `Σ_{j=0}^{i} α̃_{i−j} τ^j / j! = ã_i`,
/// `i = 1..=2k−2`, `α̃_0 = 1`. Returns `α̃_1..α̃_{2k−2}`.
pub fn solve_barrier_system(a_tilde: &[f64], tau: f64) -> Vec<f64> {
    let n = a_tilde.len().saturating_sub(1);
    let mut coef = vec![1.0; n + 1];
    for j in 1..=n {
        coef[j] = coef[j - 1] * tau / j as f64;
    }
    let mut alpha = vec![1.0; n + 1];
    for i in 1..=n {
        let mut s = a_tilde[i - 1];
        for j in 1..=i {
            s -= alpha[i - j] * coef[j];
        }
        alpha[i] = s;
    }
    alpha.split_off(1)
}

/// Translated-profile barrier `Q(x) = q(x1 + τ, x2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierResult {
    pub tau: f64,
    /// Profile coefficients in the `w`-basis, as produced by the system.
    pub alpha_tilde: Vec<f64>,
    /// Same profile in the `u`-basis.
    pub profile: Profile,
    /// Taylor re-expansion of `Q` about the origin (order
    /// [`DEFAULT_TAYLOR_ORDER`]); [`BarrierResult::eval_q`] is exact.
    #[serde(rename = "Q")]
    pub q_expansion: SlitExpansion,
    /// Coefficient of `w_{1/2}` in `Q − p`; positive for a barrier.
    pub dominance: f64,
    /// Radius beyond which `Q ≥ p` was verified by sampling.
    #[serde(rename = "M_est")]
    pub m_est: f64,
    pub certificate: AdmissibilityCertificate,
}

impl BarrierResult {
    pub fn eval_q(&self, pt: PlanePoint) -> f64 {
        self.profile
            .q()
            .eval(pt.shifted(self.tau))
            .expect("profile has no singular terms")
    }
}

const M_SAMPLES: usize = 512;
const SIGN_SLACK: f64 = 1e-10;

/// `min (Q − p) + slack·max|p|` over a circle; nonnegative means verified.
fn circle_margin(q: &SlitExpansion, tau: f64, p: &SlitExpansion, radius: f64, thetas: &[f64]) -> f64 {
    let mut min_diff = f64::INFINITY;
    let mut scale = 0.0f64;
    for &t in thetas {
        let pt = PlanePoint::from_polar(radius, t);
        let pv = p.eval(pt).expect("datum has no singular terms");
        let qv = q.eval(pt.shifted(tau)).expect("profile has no singular terms");
        min_diff = min_diff.min(qv - pv);
        scale = scale.max(pv.abs());
    }
    min_diff + SIGN_SLACK * scale
}

/// Barrier for `d` at a fixed `τ > 0`.
pub fn barrier(d: &InfinityDatum, tau: f64) -> Result<BarrierResult> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidDatum(format!("tau = {tau} must be positive")));
    }
    let k = d.k();
    let alpha_tilde = solve_barrier_system(d.a_tilde(), tau);
    let c = u_to_w_coeffs(k);
    let alpha: Vec<f64> = alpha_tilde
        .iter()
        .enumerate()
        .map(|(i, v)| v * c[2 * k - (i + 1) - 1])
        .collect();
    let profile = Profile::new(k, alpha)?;
    let certificate = profile_admissible(&profile);
    if !certificate.admissible {
        return Err(Error::ProfileNotAdmissible { tau });
    }

    // Coefficient of w_{1/2} in the Taylor expansion of Q − p.
    let n = 2 * k - 1;
    let mut weight = 1.0;
    let mut dominance = -d.a_tilde()[n - 1];
    for j in 1..=n {
        weight *= tau / j as f64;
        let a = if j == n { 1.0 } else { alpha_tilde[n - 1 - j] };
        dominance += a * weight;
    }
    if !(dominance > 0.0) {
        return Err(Error::BarrierNotDominant { tau });
    }

    let q = profile.q();
    let p = d.p();
    let thetas = midpoint_angles(M_SAMPLES);
    let mut radius = 1.0 + tau;
    let m_est = loop {
        if circle_margin(&q, tau, &p, radius, &thetas) >= 0.0
            && circle_margin(&q, tau, &p, 2.0 * radius, &thetas) >= 0.0
        {
            break 2.0 * radius;
        }
        radius *= 2.0;
        if radius > 1e12 * (1.0 + tau) {
            return Err(Error::BarrierNotDominant { tau });
        }
    };

    Ok(BarrierResult {
        tau,
        alpha_tilde,
        q_expansion: translate_expansion(&q, tau, DEFAULT_TAYLOR_ORDER).expansion,
        profile,
        dominance,
        m_est,
        certificate,
    })
}

/// Doubles `τ` from 1 up to [`TAU_CAP`] until a barrier exists.
pub fn barrier_search(d: &InfinityDatum) -> Result<BarrierResult> {
    let mut tau = 1.0;
    while tau <= TAU_CAP {
        match barrier(d, tau) {
            Ok(b) => return Ok(b),
            Err(Error::ProfileNotAdmissible { .. } | Error::BarrierNotDominant { .. }) => tau *= 2.0,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoAdmissibleTau { cap: TAU_CAP })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn validate_examples() {
        let d = validate_datum(2, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(d.p(), SlitExpansion::monomial(3, 1.0));
        assert!(matches!(
            validate_datum(2, &[1.5, 0.0, 0.0]),
            Err(Error::CoefficientOutOfRange { index: 1, .. })
        ));
        assert!(matches!(
            validate_datum(2, &[0.0, 0.0]),
            Err(Error::LengthMismatch { expected: 3, got: 2 })
        ));
        assert!(matches!(
            validate_datum(2, &[f64::NAN, 0.0, 0.0]),
            Err(Error::CoefficientOutOfRange { .. })
        ));
        let d = validate_datum(3, &[0.0; 5]).unwrap();
        assert_eq!(d.a_tilde(), &[0.0; 5]);
    }

    #[test]
    fn basis_change() {
        // k = 2: a_1 u_{5/2} = a_1 / (7/2) w_{5/2}, a_2: 35/4, a_3: 105/8.
        let d = validate_datum(2, &[0.7, -0.35, 0.105]).unwrap();
        let t = d.a_tilde();
        assert_relative_eq!(t[0], 0.2, max_relative = 1e-14);
        assert_relative_eq!(t[1], -0.04, max_relative = 1e-14);
        assert_relative_eq!(t[2], 0.008, max_relative = 1e-14);
    }

    #[test]
    fn conjugate_examples() {
        let d = validate_datum(2, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(conjugate_datum(&d).a(), &[-0.1, 0.2, -0.3]);
        assert_eq!(conjugate_datum(&conjugate_datum(&d)), d);
        let z = validate_datum(2, &[0.0; 3]).unwrap();
        assert!(conjugate_datum(&z).a().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn model_profile_admissible() {
        for k in 1..=6 {
            let cert = profile_admissible(&Profile::zero(k));
            assert!(cert.admissible, "k = {k}");
            assert!(!cert.zero_margin);
        }
    }

    #[test]
    fn sign_polynomials_k2() {
        // q = u_{7/2} + α1 u_{5/2} + α2 u_{3/2}
        let q = Profile::new(2, vec![0.5, -0.25]).unwrap().q();
        let (s, g) = sign_polynomials(&q);
        assert_eq!(s.coeffs(), &[0.0, -0.25, 0.5, 1.0]);
        assert_eq!(g.coeffs(), &[0.0, -0.25 * 1.5, -0.5 * 2.5, 3.5]);
    }

    #[test]
    fn inadmissible_trace() {
        // s(r) = r^3 − 3 r^2 + 2 r = r (r − 1)(r − 2) < 0 on (1, 2).
        let cert = profile_admissible(&Profile::new(2, vec![-3.0, 2.0]).unwrap());
        assert!(!cert.admissible);
        assert!(!cert.trace.nonnegative);
    }

    #[test]
    fn system_matches_displayed_k3() {
        let at = [0.3, -0.2, 0.1, 0.05, 0.0];
        let tau = 1.7;
        let a = solve_barrier_system(&at, tau);
        assert_eq!(a.len(), 4);
        let t2 = tau * tau / 2.0;
        let t3 = tau * tau * tau / 6.0;
        let t4 = tau.powi(4) / 24.0;
        assert_relative_eq!(a[0] + tau, at[0], epsilon = 1e-14);
        assert_relative_eq!(a[1] + a[0] * tau + t2, at[1], epsilon = 1e-14);
        assert_relative_eq!(a[2] + a[1] * tau + a[0] * t2 + t3, at[2], epsilon = 1e-13);
        assert_relative_eq!(a[3] + a[2] * tau + a[1] * t2 + a[0] * t3 + t4, at[3], epsilon = 1e-13);
    }

    #[test]
    fn system_generating_function() {
        let a = solve_barrier_system(&[0.0; 7], 1.0);
        let mut fact = 1.0;
        for (i, v) in a.iter().enumerate() {
            fact *= (i + 1) as f64;
            let expect = if i % 2 == 0 { -1.0 } else { 1.0 } / fact;
            assert_relative_eq!(*v, expect, max_relative = 1e-14);
        }
        assert!(solve_barrier_system(&[0.0; 5], 0.0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn barrier_zero_datum() {
        for k in 1..=4 {
            let d = validate_datum(k, &vec![0.0; 2 * k - 1]).unwrap();
            let b = barrier(&d, 1.0).unwrap();
            assert!(b.dominance > 0.0);
            assert!(b.m_est.is_finite());
        }
    }

    #[test]
    fn barrier_rejects_nonpositive_tau() {
        let d = validate_datum(2, &[0.0; 3]).unwrap();
        assert!(barrier(&d, 0.0).is_err());
        assert!(barrier(&d, -1.0).is_err());
    }

    #[test]
    fn q_expansion_matches_exact() {
        let d = validate_datum(2, &[0.4, -0.3, 0.9]).unwrap();
        let b = barrier_search(&d).unwrap();
        let r = 8.0 * (1.0 + b.tau);
        for t in midpoint_angles(64) {
            let pt = PlanePoint::from_polar(r, t);
            let exact = b.eval_q(pt);
            let series = b.q_expansion.eval(pt).unwrap();
            assert!((exact - series).abs() <= 1e-9 * r.powf(3.5), "{exact} {series}");
        }
    }
}
