//! Half-integer homogeneous functions on the slit plane.
//!
//! The basis functions are `u_{m+1/2}(r, θ) = r^{m+1/2} cos((m+1/2)θ)` for every
//! integer `m`, with `θ ∈ (−π, π]` and the slit `{x1 ≤ 0, x2 = 0}` sitting at
//! `θ = π`. Each one is harmonic off the slit, even in `x2`, and vanishes on
//! the slit. [`SlitExpansion`] is a finite linear combination of them and is
//! the currency of the whole crate: data at infinity, barrier profiles, decay
//! tails and recovered solutions are all expansions.
//!
//! The x1-derivative acts diagonally on the basis,
//! `∂x1 u_{m+1/2} = (m+1/2) u_{m−1/2}`, so differentiation, translation
//! (`U_{−τ} f = f(x1 + τ, x2)` via its Taylor series) and the `u ↔ w` basis
//! change are all exact coefficient manipulations.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index `m` of the basis function with homogeneity `m + 1/2`.
///
/// The exponent is never stored as a float.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfIntIndex(pub i32);

impl HalfIntIndex {
    pub const fn new(m: i32) -> Self {
        Self(m)
    }

    /// Index whose homogeneity is `num/2`; `num` must be odd.
    pub fn from_twice_exponent(num: i32) -> Self {
        debug_assert!(num % 2 != 0, "homogeneity {num}/2 is not a half-integer");
        Self((num - 1).div_euclid(2))
    }

    pub fn m(self) -> i32 {
        self.0
    }

    /// The homogeneity `m + 1/2`.
    pub fn exponent(self) -> f64 {
        f64::from(self.0) + 0.5
    }

    /// Twice the homogeneity, `2m + 1`, an exact odd integer.
    pub fn twice_exponent(self) -> i32 {
        2 * self.0 + 1
    }
}

impl fmt::Display for HalfIntIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2", self.twice_exponent())
    }
}

/// A point of the plane with polar coordinates on the principal branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x1: f64,
    pub x2: f64,
}

impl PlanePoint {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    pub fn r(&self) -> f64 {
        self.x1.hypot(self.x2)
    }

    /// Angle in `(−π, π]`; a point with `x2 = ±0` and `x1 < 0` maps to `π`.
    pub fn theta(&self) -> f64 {
        // -0.0 + 0.0 == +0.0, which pins the on-slit branch to +π.
        (self.x2 + 0.0).atan2(self.x1)
    }

    /// True on the closed slit minus the origin.
    pub fn on_slit(&self) -> bool {
        self.x2 == 0.0 && self.x1 < 0.0
    }

    pub fn shifted(&self, dx1: f64) -> Self {
        Self::new(self.x1 + dx1, self.x2)
    }
}

/// `u_{m+1/2}` at `pt`.
pub fn eval_u(m: HalfIntIndex, pt: PlanePoint) -> Result<f64> {
    let r = pt.r();
    if r == 0.0 {
        return if m.0 >= 0 {
            Ok(0.0)
        } else {
            Err(Error::NegativeHomogeneityAtOrigin { m: m.0 })
        };
    }
    if pt.on_slit() {
        return Ok(0.0);
    }
    let s = m.exponent();
    // Values are even in x2, so the upper-half-plane angle suffices.
    let theta = pt.x2.abs().atan2(pt.x1);
    Ok(r.powf(s) * (s * theta).cos())
}

/// `(∂x1, ∂x2) u_{m+1/2}` at `pt`; on the slit the limit from `x2 → 0+`.
pub fn grad_u(m: HalfIntIndex, pt: PlanePoint) -> Result<(f64, f64)> {
    let r = pt.r();
    if r == 0.0 {
        return Err(Error::OriginSingularity);
    }
    let s = m.exponent();
    let theta = pt.theta();
    let radial = s * r.powf(s - 1.0);
    let phase = (s - 1.0) * theta;
    Ok((radial * phase.cos(), -radial * phase.sin()))
}

/// Finite combination `Σ c_m u_{m+1/2}` with no stored zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SlitExpansion {
    terms: BTreeMap<HalfIntIndex, f64>,
}

impl SlitExpansion {
    pub fn new() -> Self {
        Self::default()
    }

    /// Single term `c · u_{m+1/2}`.
    pub fn monomial(m: i32, c: f64) -> Self {
        let mut e = Self::new();
        e.add_term(HalfIntIndex(m), c);
        e
    }

    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (i32, f64)>,
    {
        let mut e = Self::new();
        for (m, c) in terms {
            e.add_term(HalfIntIndex(m), c);
        }
        e
    }

    /// Adds `c` to the coefficient at `idx`, dropping it if the sum is zero.
    pub fn add_term(&mut self, idx: HalfIntIndex, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(idx).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&idx);
        }
    }

    pub fn coeff(&self, idx: HalfIntIndex) -> f64 {
        self.terms.get(&idx).copied().unwrap_or(0.0)
    }

    pub fn coeff_m(&self, m: i32) -> f64 {
        self.coeff(HalfIntIndex(m))
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (HalfIntIndex, f64)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    /// Largest index present.
    pub fn lead(&self) -> Option<HalfIntIndex> {
        self.terms.keys().next_back().copied()
    }

    /// Smallest index present.
    pub fn lowest(&self) -> Option<HalfIntIndex> {
        self.terms.keys().next().copied()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_terms(self.iter().map(|(m, c)| (m.0, c * factor)))
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in other.iter() {
            out.add_term(m, c);
        }
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scaled(-1.0))
    }

    /// Terms whose index satisfies the predicate.
    pub fn filtered(&self, keep: impl Fn(HalfIntIndex) -> bool) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| keep(**k))
                .map(|(&k, &v)| (k, v))
                .collect(),
        }
    }

    /// Terms with nonnegative homogeneity (`m ≥ 0`).
    pub fn nonnegative_part(&self) -> Self {
        self.filtered(|m| m.0 >= 0)
    }

    /// Terms with negative homogeneity (`m < 0`).
    pub fn negative_part(&self) -> Self {
        self.filtered(|m| m.0 < 0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// Evaluates the expansion at `pt`.
    pub fn eval(&self, pt: PlanePoint) -> Result<f64> {
        eval_expansion(self, pt)
    }

    /// Evaluates `U_shift(e)(pt) = e(x1 − shift, x2)`.
    pub fn eval_translated(&self, shift: f64, pt: PlanePoint) -> Result<f64> {
        eval_expansion(self, pt.shifted(-shift))
    }
}

impl fmt::Display for SlitExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "{c}·u_{m}")?;
            first = false;
        }
        Ok(())
    }
}

/// `Σ c_m u_{m+1/2}(pt)`, computing the polar coordinates once.
pub fn eval_expansion(e: &SlitExpansion, pt: PlanePoint) -> Result<f64> {
    if e.is_empty() {
        return Ok(0.0);
    }
    let r = pt.r();
    if r == 0.0 {
        if let Some(low) = e.lowest().filter(|m| m.0 < 0) {
            return Err(Error::NegativeHomogeneityAtOrigin { m: low.0 });
        }
        return Ok(0.0);
    }
    if pt.on_slit() {
        return Ok(0.0);
    }
    let theta = pt.x2.abs().atan2(pt.x1);
    let ln_r = r.ln();
    Ok(e
        .iter()
        .map(|(m, c)| {
            let s = m.exponent();
            c * (s * ln_r).exp() * (s * theta).cos()
        })
        .sum())
}

/// Gradient of an expansion.
pub fn grad_expansion(e: &SlitExpansion, pt: PlanePoint) -> Result<(f64, f64)> {
    let mut g = (0.0, 0.0);
    for (m, c) in e.iter() {
        let (a, b) = grad_u(m, pt)?;
        g.0 += c * a;
        g.1 += c * b;
    }
    Ok(g)
}

/// `∂/∂x1`, exact on coefficients: `c·u_{m+1/2} ↦ c·(m+1/2)·u_{m−1/2}`.
pub fn ddx1(e: &SlitExpansion) -> SlitExpansion {
    SlitExpansion::from_terms(e.iter().map(|(m, c)| (m.0 - 1, c * m.exponent())))
}

/// Product `Π_{j=lo}^{hi} (j + 1/2)` accumulated as an exact rational
/// (odd-integer numerator over a power of two), converted once at the end.
fn half_int_product(lo: i32, hi: i32) -> f64 {
    if lo > hi {
        return 1.0;
    }
    let mut num: i128 = 1;
    let mut exact = true;
    for j in lo..=hi {
        match num.checked_mul(i128::from(2 * j + 1)) {
            Some(v) => num = v,
            None => {
                exact = false;
                break;
            }
        }
    }
    let count = hi - lo + 1;
    if exact {
        // Power-of-two scaling is exact in binary floating point.
        (num as f64) * 2f64.powi(-count)
    } else {
        (lo..=hi).map(|j| f64::from(j) + 0.5).product()
    }
}

/// Factor `c` with `w_{m+1/2} = c · u_{m+1/2}` for leading index `2k−1`,
/// where `w_{2k−1/2} := u_{2k−1/2}` and each lower `w` is the x1-derivative
/// of the one above. Defined for every `m ≤ 2k−1`, including negative `m`.
pub fn w_factor(k: usize, m: HalfIntIndex) -> f64 {
    let top = 2 * k as i32 - 1;
    half_int_product(m.0 + 1, top)
}

/// Diagonal factors `c_l`, `l = 1..=2k`, with `w_{l−1/2} = c_l · u_{l−1/2}`.
///
/// Entry `l − 1` holds `c_l = Π_{j=l}^{2k−1} (j + 1/2)`; the last entry is 1.
pub fn u_to_w_coeffs(k: usize) -> Vec<f64> {
    assert!(k >= 1, "k must be positive");
    let top = 2 * k as i32 - 1;
    (1..=2 * k as i32).map(|l| half_int_product(l, top)).collect()
}

/// Result of a truncated Taylor re-expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct Translated {
    pub expansion: SlitExpansion,
    /// Lowest homogeneity index retained by the truncation.
    pub lowest: HalfIntIndex,
}

/// Default Taylor order for [`translate_expansion`].
pub const DEFAULT_TAYLOR_ORDER: usize = 40;

/// Degree-`order` Taylor re-expansion of `U_{−τ}(e)`, i.e. of
/// `x ↦ e(x1 + τ, x2)`, in the homogeneous basis.
///
/// The series converges for `r > |τ|`; the truncation is only trustworthy on
/// `r ≥ 8(1 + |τ|)`, and the remainder is not represented.
pub fn translate_expansion(e: &SlitExpansion, tau: f64, order: usize) -> Translated {
    let lowest_in = e.lowest().map_or(0, |m| m.0);
    let mut out = SlitExpansion::new();
    let mut derivative = e.clone();
    let mut weight = 1.0;
    for j in 0..=order {
        if j > 0 {
            derivative = ddx1(&derivative);
            weight *= tau / j as f64;
        }
        if weight == 0.0 {
            break;
        }
        for (m, c) in derivative.iter() {
            out.add_term(m, weight * c);
        }
    }
    Translated {
        expansion: out,
        lowest: HalfIntIndex(lowest_in - order as i32),
    }
}

/// Conjugation about `lead`: the coefficient `l` steps below `lead` is
/// multiplied by `(−1)^l`.
pub fn conjugate_expansion(e: &SlitExpansion, lead: HalfIntIndex) -> Result<SlitExpansion> {
    if e.lead() != Some(lead) {
        return Err(Error::LeadMismatch { lead: lead.0 });
    }
    Ok(SlitExpansion::from_terms(e.iter().map(|(m, c)| {
        let offset = lead.0 - m.0;
        (m.0, if offset % 2 == 0 { c } else { -c })
    })))
}

/// `θ` samples used by circle quadratures: `nθ` midpoints of a uniform
/// partition of `(−π, π)`, never hitting `±π`.
pub fn midpoint_angles(n_theta: usize) -> Vec<f64> {
    let d = 2.0 * PI / n_theta as f64;
    (0..n_theta).map(|i| -PI + (i as f64 + 0.5) * d).collect()
}
