//! Half-integer Fourier analysis on circles.
//!
//! On a circle of radius `R` the basis functions `u_{±(l−1/2)}` both restrict
//! to multiples of `cos((l−1/2)θ)`, and these are orthogonal on `(−π, π)`
//! with squared norm `π`. Projecting a trace onto them recovers expansion
//! coefficients: the decay coefficients `b_j` of `u − p` at large radii, and
//! the local coefficients of a slit-harmonic function at small radii.
//!
//! Traces of grid solutions are taken from the nodal difference field (for
//! instance `u_h − p`), bilinearly interpolated. Interpolating `u_h` and then
//! subtracting `p` would leave an interpolation error of order `h² |D²u|`,
//! far above the size of the decay coefficients.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::admissibility::InfinityDatum;
use crate::error::{Error, Result};
use crate::slit_basis::{eval_expansion, midpoint_angles, HalfIntIndex, PlanePoint, SlitExpansion};
use crate::vi_solver::{m_emp, tail_expansion, DiscreteSolution, Mesh};

/// Default number of angular samples.
pub const DEFAULT_N_THETA: usize = 4096;

/// Radius spread allowed for a `b_j`, relative to `max(1, |b|∞)`.
pub const CONSISTENCY_THRESHOLD: f64 = 0.01;

/// Samples of a function on a circle centred at `(center, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleTrace {
    pub radius: f64,
    pub center: f64,
    /// Midpoints of a uniform partition of `(−π, π)`.
    pub theta: Vec<f64>,
    pub values: Vec<f64>,
}

impl CircleTrace {
    /// Samples `f` at `(center + R cos θ, R sin θ)`.
    pub fn from_fn(radius: f64, center: f64, n_theta: usize, f: impl Fn(PlanePoint) -> f64) -> Self {
        let theta = midpoint_angles(n_theta);
        let values = theta
            .iter()
            .map(|&t| f(PlanePoint::new(center + radius * t.cos(), radius * t.sin())))
            .collect();
        Self { radius, center, theta, values }
    }

    /// Bilinear interpolation of a nodal field, reflected evenly for `x2 < 0`.
    pub fn from_field(mesh: &Mesh, field: &[f64], radius: f64, center: f64, n_theta: usize) -> Result<Self> {
        let h = mesh.h();
        if !(radius > 0.0) || center.abs() + radius + 2.0 * h >= mesh.l() {
            return Err(Error::CircleOutsideMesh { radius, center });
        }
        if field.len() != mesh.len() {
            return Err(Error::LengthMismatch { expected: mesh.len(), got: field.len() });
        }
        Ok(Self::from_fn(radius, center, n_theta, |pt| interpolate(mesh, field, pt)))
    }

    /// Trace of `u_h − f`; equal to [`CircleTrace::from_field`] on
    /// `sol.difference_field(f)` but evaluates `f` only at the cell corners
    /// the circle passes through.
    pub fn from_difference(
        sol: &DiscreteSolution,
        radius: f64,
        center: f64,
        n_theta: usize,
        f: impl Fn(PlanePoint) -> f64,
    ) -> Result<Self> {
        let mesh = &sol.mesh;
        if !(radius > 0.0) || center.abs() + radius + 2.0 * mesh.h() >= mesh.l() {
            return Err(Error::CircleOutsideMesh { radius, center });
        }
        Ok(Self::from_fn(radius, center, n_theta, |pt| {
            bilinear(mesh, pt, |i, j| sol.value(i, j) - f(mesh.point(i, j)))
        }))
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }
}

/// Bilinear interpolation at `(x1, |x2|)`; the point must lie in the mesh.
pub fn interpolate(mesh: &Mesh, field: &[f64], pt: PlanePoint) -> f64 {
    bilinear(mesh, pt, |i, j| field[mesh.idx(i, j)])
}

fn bilinear(mesh: &Mesh, pt: PlanePoint, v: impl Fn(usize, usize) -> f64) -> f64 {
    let h = mesh.h();
    let fx = (pt.x1 + mesh.l()) / h;
    let fy = pt.x2.abs() / h;
    let i = (fx.floor() as usize).min(mesh.nx() - 2);
    let j = (fy.floor() as usize).min(mesh.ny() - 2);
    let sx = fx - i as f64;
    let sy = fy - j as f64;
    (1.0 - sy) * ((1.0 - sx) * v(i, j) + sx * v(i + 1, j)) + sy * ((1.0 - sx) * v(i, j + 1) + sx * v(i + 1, j + 1))
}

/// Trace of the nodal values of `sol` on the circle `|x| = R`.
pub fn circle_trace(sol: &DiscreteSolution, radius: f64, n_theta: usize) -> Result<CircleTrace> {
    if n_theta < 64 {
        return Err(Error::InsufficientSamples(format!("n_theta = {n_theta} is below 64")));
    }
    CircleTrace::from_field(&sol.mesh, &sol.values, radius, 0.0, n_theta)
}

/// `(1/π) ∫ f(θ) cos((l − 1/2)θ) dθ` by the periodic trapezoid rule on the
/// midpoint samples.
pub fn half_mode_coeff(tr: &CircleTrace, l: usize) -> f64 {
    assert!(l >= 1, "half modes start at l = 1");
    let n = tr.theta.len();
    if n == 0 {
        return 0.0;
    }
    let freq = l as f64 - 0.5;
    let s: f64 = tr.theta.iter().zip(&tr.values).map(|(t, v)| v * (freq * t).cos()).sum();
    s * (2.0 * PI / n as f64) / PI
}

/// Decay coefficients `b_j` per radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    #[serde(rename = "N")]
    pub n_terms: usize,
    pub radii: Vec<f64>,
    /// `b[r][j−1]` at `radii[r]`.
    pub b: Vec<Vec<f64>>,
    /// Per-`j` spread `max − min` across radii.
    pub deviation: Vec<f64>,
    /// Mean over radii.
    pub b_final: Vec<f64>,
    /// `max |b_final|`.
    pub m_bound: f64,
    /// Contact closure of the solution the report was taken from.
    pub m_emp: f64,
    /// Deviation budget: [`CONSISTENCY_THRESHOLD`]`· max(1, |b_final|∞)`.
    pub threshold: f64,
    pub consistent: bool,
}

impl ExpansionReport {
    /// CSV: a `#`-comment line with the radii, then `j,b,deviation` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let radii: Vec<String> = self.radii.iter().map(|r| format!("{r:.16e}")).collect();
        writeln!(s, "# radii {}", radii.join(",")).unwrap();
        writeln!(s, "j,b,deviation").unwrap();
        for (j, (b, dev)) in self.b_final.iter().zip(&self.deviation).enumerate() {
            writeln!(s, "{},{b:.16e},{dev:.16e}", j + 1).unwrap();
        }
        s
    }

    pub fn max_deviation(&self) -> f64 {
        self.deviation.iter().fold(0.0, |m, d| m.max(*d))
    }
}

/// Half modes `1..=n_terms` of the nodal field on each radius.
fn modes_on_radii(mesh: &Mesh, field: &[f64], radii: &[f64], n_terms: usize) -> Result<Vec<Vec<f64>>> {
    radii
        .iter()
        .map(|&r| {
            let tr = CircleTrace::from_field(mesh, field, r, 0.0, DEFAULT_N_THETA)?;
            Ok((1..=n_terms).map(|l| half_mode_coeff(&tr, l)).collect())
        })
        .collect()
}

fn check_radii(sol: &DiscreteSolution, radii: &[f64]) -> Result<f64> {
    if radii.is_empty() {
        return Err(Error::InsufficientSamples("no radii given".into()));
    }
    let closure = m_emp(sol);
    let r_min = radii.iter().copied().fold(f64::INFINITY, f64::min);
    if r_min < closure {
        return Err(Error::RadiusBelowContactClosure { radius: r_min, m_emp: closure });
    }
    Ok(closure)
}

/// `b_j(R) = R^{j−1/2} · half_mode_coeff(u_h − p on ∂B_R, j)`.
pub fn extract_b(sol: &DiscreteSolution, d: &InfinityDatum, radii: &[f64], n_terms: usize) -> Result<ExpansionReport> {
    let closure = check_radii(sol, radii)?;
    let p = d.p();
    let field = sol.difference_field(|pt| eval_expansion(&p, pt).expect("datum is regular"));
    let modes = modes_on_radii(&sol.mesh, &field, radii, n_terms)?;
    let b: Vec<Vec<f64>> = radii
        .iter()
        .zip(&modes)
        .map(|(&r, m)| m.iter().enumerate().map(|(i, v)| r.powf(i as f64 + 0.5) * v).collect())
        .collect();
    let count = radii.len() as f64;
    let mut b_final = vec![0.0; n_terms];
    let mut deviation = vec![0.0; n_terms];
    for j in 0..n_terms {
        let column = b.iter().map(|row| row[j]);
        let (lo, hi) = column.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        b_final[j] = column.sum::<f64>() / count;
        deviation[j] = hi - lo;
    }
    let m_bound = b_final.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = CONSISTENCY_THRESHOLD * m_bound.max(1.0);
    let consistent = deviation.iter().all(|d| *d <= threshold);
    Ok(ExpansionReport {
        n_terms,
        radii: radii.to_vec(),
        b,
        deviation,
        b_final,
        m_bound,
        m_emp: closure,
        threshold,
        consistent,
    })
}

/// Largest half mode `1..=n_terms` of `u_h − (p + Σ b_j u_{1/2−j})` over
/// the radii; 0 when `n_terms = 0`.
pub fn fourier_vanish_check(
    sol: &DiscreteSolution,
    d: &InfinityDatum,
    b: &[f64],
    radii: &[f64],
    n_terms: usize,
) -> Result<f64> {
    if n_terms == 0 {
        return Ok(0.0);
    }
    check_radii(sol, radii)?;
    let p_ext = d.p().plus(&tail_expansion(b));
    let field = sol.difference_field(|pt| {
        // The tail is singular only at the origin, where u − p_ext is never
        // sampled by a circle of positive radius.
        if pt.r() == 0.0 {
            0.0
        } else {
            eval_expansion(&p_ext, pt).expect("regular away from the origin")
        }
    });
    let modes = modes_on_radii(&sol.mesh, &field, radii, n_terms)?;
    Ok(modes.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Inversion `x ↦ M² x / |x|²`.
pub fn kelvin_point(pt: PlanePoint, m: f64) -> Result<PlanePoint> {
    let r2 = pt.x1 * pt.x1 + pt.x2 * pt.x2;
    if r2 == 0.0 {
        return Err(Error::OriginNotInvertible);
    }
    let s = m * m / r2;
    Ok(PlanePoint::new(s * pt.x1, s * pt.x2))
}

/// Local expansion of a slit-harmonic function near the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlitTaylor {
    /// Coefficients of `u_{m+1/2}`, `m = 0..=N`, averaged over the radii.
    pub coeffs: Vec<f64>,
    /// Per-radius estimates, in input order.
    pub per_radius: Vec<Vec<f64>>,
    /// Per-coefficient spread across radii.
    pub spread: Vec<f64>,
    /// `max |f − Σ v_m u_{m+1/2}|` on the innermost circle.
    pub residual: f64,
}

impl SlitTaylor {
    pub fn expansion(&self) -> SlitExpansion {
        SlitExpansion::from_terms(self.coeffs.iter().enumerate().map(|(m, &c)| (m as i32, c)))
    }
}

/// Coefficient of `u_{m+1/2}` estimated as `r^{−m−1/2}` times half mode
/// `m + 1`, averaged over circles centred at the origin.
pub fn slit_taylor(traces: &[CircleTrace], n: usize) -> Result<SlitTaylor> {
    if traces.is_empty() {
        return Err(Error::InsufficientSamples("no traces given".into()));
    }
    if let Some(t) = traces.iter().find(|t| t.center != 0.0) {
        return Err(Error::InsufficientSamples(format!("trace centred at {} instead of 0", t.center)));
    }
    let per_radius: Vec<Vec<f64>> = traces
        .iter()
        .map(|tr| {
            (0..=n)
                .map(|m| tr.radius.powf(-(m as f64) - 0.5) * half_mode_coeff(tr, m + 1))
                .collect()
        })
        .collect();
    let count = traces.len() as f64;
    let coeffs: Vec<f64> = (0..=n).map(|m| per_radius.iter().map(|v| v[m]).sum::<f64>() / count).collect();
    let spread = (0..=n)
        .map(|m| {
            let (lo, hi) = per_radius
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v[m]), hi.max(v[m])));
            hi - lo
        })
        .collect();
    let inner = traces.iter().min_by(|a, b| a.radius.total_cmp(&b.radius)).expect("nonempty");
    let approx = SlitExpansion::from_terms(coeffs.iter().enumerate().map(|(m, &c)| (m as i32, c)));
    let residual = inner
        .theta
        .iter()
        .zip(&inner.values)
        .map(|(&t, &v)| {
            let pt = PlanePoint::from_polar(inner.radius, t);
            (v - approx.eval(pt).expect("regular expansion")).abs()
        })
        .fold(0.0, f64::max);
    Ok(SlitTaylor { coeffs, per_radius, spread, residual })
}

/// Mode index carrying the homogeneity `m + 1/2` (and `−m − 1/2`).
pub fn mode_of(m: HalfIntIndex) -> usize {
    if m.0 >= 0 {
        m.0 as usize + 1
    } else {
        (-m.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slit_basis::eval_u;

    fn trace_of(f: impl Fn(f64) -> f64, n: usize) -> CircleTrace {
        let theta = midpoint_angles(n);
        let values = theta.iter().map(|&t| f(t)).collect();
        CircleTrace { radius: 1.0, center: 0.0, theta, values }
    }

    #[test]
    fn orthogonality_examples() {
        let tr = trace_of(|t| (t / 2.0).cos(), 256);
        assert!((half_mode_coeff(&tr, 1) - 1.0).abs() < 1e-12);
        assert!(half_mode_coeff(&tr, 2).abs() < 1e-12);
        let z = trace_of(|_| 0.0, 256);
        assert_eq!(half_mode_coeff(&z, 3), 0.0);
    }

    #[test]
    fn gram_matrix_is_identity() {
        let n = 4096;
        for a in 1..=12 {
            let tr = trace_of(|t| ((a as f64 - 0.5) * t).cos(), n);
            for b in 1..=12 {
                let g = half_mode_coeff(&tr, b);
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((g - expect).abs() < 1e-10, "({a},{b}) = {g}");
            }
        }
    }

    #[test]
    fn kelvin_examples() {
        let m = 3.0;
        assert_eq!(kelvin_point(PlanePoint::new(m, 0.0), m).unwrap(), PlanePoint::new(m, 0.0));
        assert_eq!(kelvin_point(PlanePoint::new(2.0 * m, 0.0), m).unwrap(), PlanePoint::new(m / 2.0, 0.0));
        assert!(matches!(kelvin_point(PlanePoint::new(0.0, 0.0), m), Err(Error::OriginNotInvertible)));
        let p = PlanePoint::new(0.3, -1.7);
        let back = kelvin_point(kelvin_point(p, m).unwrap(), m).unwrap();
        assert!((back.x1 - p.x1).abs() < 1e-14 && (back.x2 - p.x2).abs() < 1e-14);
    }

    #[test]
    fn slit_taylor_examples() {
        let f1 = SlitExpansion::monomial(0, 3.0);
        let f2 = SlitExpansion::from_terms([(0, 1.0), (2, 2.0)]);
        for (f, expect) in [(f1, [3.0, 0.0, 0.0, 0.0]), (f2, [1.0, 0.0, 2.0, 0.0])] {
            let traces: Vec<_> = [0.5, 0.25]
                .iter()
                .map(|&r| CircleTrace::from_fn(r, 0.0, 1024, |pt| f.eval(pt).unwrap()))
                .collect();
            let st = slit_taylor(&traces, 3).unwrap();
            for (c, e) in st.coeffs.iter().zip(expect) {
                assert!((c - e).abs() < 1e-10, "{c} vs {e}");
            }
        }
    }

    #[test]
    fn slit_taylor_residual_rate() {
        // Coefficients decay like 2^{−m}, so the tail beyond N behaves like
        // r^{N+3/2} for small r.
        let f = |pt: PlanePoint| {
            (0..30)
                .map(|m| 0.5f64.powi(m) * eval_u(HalfIntIndex(m), pt).unwrap())
                .sum::<f64>()
        };
        let n = 3;
        let res = |r: f64| {
            let traces = vec![
                CircleTrace::from_fn(r, 0.0, 2048, f),
                CircleTrace::from_fn(r / 2.0, 0.0, 2048, f),
            ];
            slit_taylor(&traces, n).unwrap().residual
        };
        let ratio = res(0.4) / res(0.2);
        assert!(ratio >= 2f64.powi(n as i32 + 1), "ratio {ratio}");
    }

    #[test]
    fn mode_index() {
        assert_eq!(mode_of(HalfIntIndex(0)), 1);
        assert_eq!(mode_of(HalfIntIndex(-1)), 1);
        assert_eq!(mode_of(HalfIntIndex(3)), 4);
        assert_eq!(mode_of(HalfIntIndex(-4)), 4);
    }
}
