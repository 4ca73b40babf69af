//! Truncated half-domain discretization and projected SOR.
//!
//! The computational box is `[−L, L] × [0, L]` with uniform spacing `h`.
//! Solutions are even in `x2`, so the bottom row `x2 = 0` is the thin line
//! and its stencil is the even reflection of the interior one. Dirichlet
//! data sits on the left, right and top edges.
//!
//! Node `(i, j)` has coordinates `x1 = (i − n) h`, `x2 = j h` with
//! `n = L / h`, and is stored row-major at `j · nx + i`.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::sync::Arc;

use crate::admissibility::InfinityDatum;
use crate::error::{Error, Result};
use crate::slit_basis::{HalfIntIndex, PlanePoint, SlitExpansion};

pub const SOLUTION_MAGIC: &str = "SLITSTONE-SOL v1";

/// Uniform mesh on `[−L, L] × [0, L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    l: f64,
    n: usize,
}

/// Role of a node in the discrete problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    Dirichlet,
    Thin,
    Interior,
}

impl Mesh {
    pub fn new(l: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidMesh(format!("h = {h} must be positive")));
        }
        if !(l >= 4.0 && l.is_finite()) {
            return Err(Error::InvalidMesh(format!("L = {l} must be at least 4")));
        }
        let ratio = l / h;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio {
            return Err(Error::InvalidMesh(format!("h = {h} does not divide L = {l}")));
        }
        Self::with_cells(l, n as usize)
    }

    /// Mesh with `n = L / h` cells per half-width.
    pub fn with_cells(l: f64, n: usize) -> Result<Self> {
        if !(l >= 4.0 && l.is_finite()) {
            return Err(Error::InvalidMesh(format!("L = {l} must be at least 4")));
        }
        if n < 4 {
            return Err(Error::InvalidMesh(format!("L / h = {n} is below 4")));
        }
        Ok(Self { l, n })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn h(&self) -> f64 {
        self.l / self.n as f64
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nx(&self) -> usize {
        2 * self.n + 1
    }

    pub fn ny(&self) -> usize {
        self.n + 1
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    pub fn x1(&self, i: usize) -> f64 {
        (i as f64 - self.n as f64) * self.h()
    }

    pub fn x2(&self, j: usize) -> f64 {
        j as f64 * self.h()
    }

    pub fn point(&self, i: usize, j: usize) -> PlanePoint {
        PlanePoint::new(self.x1(i), self.x2(j))
    }

    pub fn class(&self, i: usize, j: usize) -> NodeClass {
        if i == 0 || i + 1 == self.nx() || j + 1 == self.ny() {
            NodeClass::Dirichlet
        } else if j == 0 {
            NodeClass::Thin
        } else {
            NodeClass::Interior
        }
    }
}

/// Discrete Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// Standard 5-point operator.
    FivePoint,
    /// Compact 9-point operator (weights 4 axial, 1 diagonal, −20 centre
    /// over `6h²`), fourth order on harmonic functions.
    #[default]
    NinePoint,
}

impl Stencil {
    pub fn name(self) -> &'static str {
        match self {
            Stencil::FivePoint => "five-point",
            Stencil::NinePoint => "nine-point",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "five-point" => Ok(Stencil::FivePoint),
            "nine-point" => Ok(Stencil::NinePoint),
            other => Err(Error::Format(format!("unknown stencil {other:?}"))),
        }
    }

    fn weights(self) -> Weights {
        match self {
            Stencil::FivePoint => Weights {
                axial: 1.0,
                diag: 0.0,
                centre: 4.0,
                thin_ew: 1.0,
                thin_n: 2.0,
                thin_diag: 0.0,
                denom: 1.0,
            },
            Stencil::NinePoint => Weights {
                axial: 4.0,
                diag: 1.0,
                centre: 20.0,
                thin_ew: 4.0,
                thin_n: 8.0,
                thin_diag: 2.0,
                denom: 6.0,
            },
        }
    }

    /// Largest eigenvalue of the Jacobi iteration on an `n`-cell half-width.
    fn jacobi_radius(self, n: usize) -> f64 {
        let c = (std::f64::consts::PI / (2.0 * n as f64)).cos();
        match self {
            Stencil::FivePoint => c,
            Stencil::NinePoint => (16.0 * c + 4.0 * c * c) / 20.0,
        }
    }

    /// Relaxation factor `2 / (1 + √(1 − μ²))` for Jacobi radius `μ`.
    pub fn optimal_omega(self, n: usize) -> f64 {
        let mu = self.jacobi_radius(n);
        2.0 / (1.0 + (1.0 - mu * mu).sqrt())
    }
}

#[derive(Debug, Clone, Copy)]
struct Weights {
    axial: f64,
    diag: f64,
    centre: f64,
    thin_ew: f64,
    thin_n: f64,
    thin_diag: f64,
    denom: f64,
}

/// Dirichlet data on the outer boundary.
#[derive(Clone)]
pub enum BoundaryMode {
    /// `p` itself.
    Datum,
    /// `p + Σ_j b_j u_{1/2−j}`.
    Enriched(Vec<f64>),
    /// A closed-form solution `U_shift(profile)`, i.e. `profile(x1 − shift, x2)`.
    Exact { profile: SlitExpansion, shift: f64 },
    /// Arbitrary boundary function, for tests. Not persisted.
    Custom(Arc<dyn Fn(PlanePoint) -> f64 + Send + Sync>),
}

impl fmt::Debug for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryMode::Datum => write!(f, "Datum"),
            BoundaryMode::Enriched(b) => f.debug_tuple("Enriched").field(b).finish(),
            BoundaryMode::Exact { profile, shift } => f
                .debug_struct("Exact")
                .field("profile", profile)
                .field("shift", shift)
                .finish(),
            BoundaryMode::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl PartialEq for BoundaryMode {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (BoundaryMode::Datum, BoundaryMode::Datum) => true,
            (BoundaryMode::Enriched(a), BoundaryMode::Enriched(b)) => a == b,
            (
                BoundaryMode::Exact { profile: p, shift: s },
                BoundaryMode::Exact { profile: q, shift: t },
            ) => p == q && s.to_bits() == t.to_bits(),
            (BoundaryMode::Custom(a), BoundaryMode::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl BoundaryMode {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryMode::Datum => "datum",
            BoundaryMode::Enriched(_) => "enriched",
            BoundaryMode::Exact { .. } => "exact",
            BoundaryMode::Custom(_) => "custom",
        }
    }

    /// Evaluates the boundary function at `pt` (any point away from the
    /// origin; only `Custom` and regular expansions are safe at the origin).
    pub fn eval(&self, d: &InfinityDatum, p: &SlitExpansion, pt: PlanePoint) -> f64 {
        match self {
            BoundaryMode::Datum => p.eval(pt).expect("datum is regular"),
            BoundaryMode::Enriched(b) => {
                let tail = tail_expansion(b);
                p.eval(pt).expect("datum is regular")
                    + tail.eval(pt).expect("tail evaluated away from the origin")
            }
            BoundaryMode::Exact { profile, shift } => profile
                .eval(pt.shifted(-shift))
                .expect("exact boundary evaluated away from its singularity"),
            BoundaryMode::Custom(f) => {
                let _ = d;
                f(pt)
            }
        }
    }
}

/// `Σ_j b_j u_{1/2−j}`, `j = 1, 2, …`.
pub fn tail_expansion(b: &[f64]) -> SlitExpansion {
    SlitExpansion::from_terms(b.iter().enumerate().map(|(i, &v)| (-(i as i32) - 1, v)))
}

/// Assembled obstacle problem: operator, Dirichlet data and a start vector.
#[derive(Debug, Clone)]
pub struct Lcp {
    pub datum: InfinityDatum,
    pub mesh: Mesh,
    pub mode: BoundaryMode,
    pub stencil: Stencil,
    /// `max |Dirichlet data|`.
    pub scale: f64,
    /// Dirichlet values on boundary nodes, start values elsewhere.
    pub initial: Vec<f64>,
}

impl Lcp {
    /// Replaces the start values on non-Dirichlet nodes (thin nodes are
    /// clamped to be nonnegative).
    pub fn with_initial(mut self, values: &[f64]) -> Result<Self> {
        if values.len() != self.mesh.len() {
            return Err(Error::LengthMismatch { expected: self.mesh.len(), got: values.len() });
        }
        for j in 0..self.mesh.ny() {
            for i in 0..self.mesh.nx() {
                let c = self.mesh.idx(i, j);
                match self.mesh.class(i, j) {
                    NodeClass::Dirichlet => {}
                    NodeClass::Thin => self.initial[c] = values[c].max(0.0),
                    NodeClass::Interior => self.initial[c] = values[c],
                }
            }
        }
        Ok(self)
    }
}

/// Builds the discrete problem with the default 9-point stencil.
pub fn assemble(d: &InfinityDatum, mesh: Mesh, mode: BoundaryMode) -> Result<Lcp> {
    assemble_with(d, mesh, mode, Stencil::default())
}

/// Builds the discrete problem. Start values are `p` (or the custom boundary
/// function), clamped to be nonnegative on the thin line.
pub fn assemble_with(d: &InfinityDatum, mesh: Mesh, mode: BoundaryMode, stencil: Stencil) -> Result<Lcp> {
    let p = d.p();
    let mut initial = vec![0.0; mesh.len()];
    let mut scale = 0.0f64;
    for j in 0..mesh.ny() {
        for i in 0..mesh.nx() {
            let pt = mesh.point(i, j);
            let c = mesh.idx(i, j);
            match mesh.class(i, j) {
                NodeClass::Dirichlet => {
                    let v = mode.eval(d, &p, pt);
                    if !v.is_finite() {
                        return Err(Error::InvalidMesh(format!(
                            "boundary data is not finite at ({}, {})",
                            pt.x1, pt.x2
                        )));
                    }
                    scale = scale.max(v.abs());
                    initial[c] = v;
                }
                class => {
                    let v = match &mode {
                        BoundaryMode::Custom(f) => f(pt),
                        _ => p.eval(pt).expect("datum is regular"),
                    };
                    initial[c] = if class == NodeClass::Thin { v.max(0.0) } else { v };
                }
            }
        }
    }
    Ok(Lcp { datum: d.clone(), mesh, mode, stencil, scale, initial })
}

/// Converged (or best) discrete solution.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub datum: InfinityDatum,
    pub mesh: Mesh,
    pub mode: BoundaryMode,
    pub stencil: Stencil,
    pub omega: f64,
    /// Nodal values, row-major.
    pub values: Vec<f64>,
    /// Contact flags for the bottom row; entries at the two Dirichlet
    /// corners are always `false`.
    pub active: Vec<bool>,
    pub iterations: usize,
    /// Complementarity residual at termination.
    pub residual: f64,
    pub converged: bool,
    /// `max |Dirichlet data|`.
    pub scale: f64,
}

impl DiscreteSolution {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.mesh.idx(i, j)]
    }

    /// Nodal field `u_h − f`.
    pub fn difference_field(&self, f: impl Fn(PlanePoint) -> f64) -> Vec<f64> {
        let m = &self.mesh;
        let mut out = Vec::with_capacity(m.len());
        for j in 0..m.ny() {
            for i in 0..m.nx() {
                out.push(self.values[m.idx(i, j)] - f(m.point(i, j)));
            }
        }
        out
    }

    /// Discrete Laplacian at a non-Dirichlet node.
    pub fn laplacian(&self, i: usize, j: usize) -> f64 {
        laplacian_at(&self.values, &self.mesh, self.stencil.weights(), i, j)
    }
}

/// Settings for [`solve_psor`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsorOptions {
    /// Relaxation factor; `None` selects [`Stencil::optimal_omega`].
    pub omega: Option<f64>,
    /// Complementarity residual tolerance, relative to the Dirichlet scale.
    pub tol: f64,
    /// Bound on the remaining iteration error (geometric estimate from the
    /// update history), relative to the Dirichlet scale.
    pub err_tol: f64,
    /// `None` selects `200 · L / h`.
    pub max_iter: Option<usize>,
}

impl Default for PsorOptions {
    fn default() -> Self {
        Self { omega: None, tol: 1e-10, err_tol: 1e-13, max_iter: None }
    }
}

fn laplacian_at(u: &[f64], mesh: &Mesh, w: Weights, i: usize, j: usize) -> f64 {
    let h = mesh.h();
    neighbour_sum(u, mesh.nx(), w, mesh.idx(i, j), j == 0) / (w.denom * h * h)
}

/// `Σ w_nb (u_nb − u_c)`.
#[inline(always)]
fn neighbour_sum(u: &[f64], nx: usize, w: Weights, c: usize, thin: bool) -> f64 {
    let uc = u[c];
    if thin {
        let n = c + nx;
        let mut s = w.thin_ew * ((u[c - 1] - uc) + (u[c + 1] - uc)) + w.thin_n * (u[n] - uc);
        if w.thin_diag != 0.0 {
            s += w.thin_diag * ((u[n - 1] - uc) + (u[n + 1] - uc));
        }
        s
    } else {
        let n = c + nx;
        let s_ = c - nx;
        let mut s = w.axial * ((u[c - 1] - uc) + (u[c + 1] - uc) + (u[n] - uc) + (u[s_] - uc));
        if w.diag != 0.0 {
            s += w.diag * ((u[n - 1] - uc) + (u[n + 1] - uc) + (u[s_ - 1] - uc) + (u[s_ + 1] - uc));
        }
        s
    }
}

/// Mutable PSOR state. Sweeps are lexicographic, bottom row first.
#[derive(Debug, Clone)]
pub struct PsorSession<'a> {
    lcp: &'a Lcp,
    weights: Weights,
    omega: f64,
    values: Vec<f64>,
    active: Vec<bool>,
    sweeps: usize,
}

impl<'a> PsorSession<'a> {
    pub fn new(lcp: &'a Lcp, omega: f64) -> Result<Self> {
        if !(1.0..2.0).contains(&omega) {
            return Err(Error::InvalidOmega(omega));
        }
        Ok(Self {
            lcp,
            weights: lcp.stencil.weights(),
            omega,
            values: lcp.initial.clone(),
            active: vec![false; lcp.mesh.nx()],
            sweeps: 0,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// One projected sweep; returns `max |change|`.
    pub fn sweep(&mut self) -> f64 {
        let mesh = self.lcp.mesh;
        let nx = mesh.nx();
        let w = self.weights;
        let u = &mut self.values;
        let thin_relax = self.omega / w.centre;
        let relax = self.omega / w.centre;
        let mut max_change = 0.0f64;
        for i in 1..nx - 1 {
            let c = i;
            let old = u[c];
            let new = (old + thin_relax * neighbour_sum(u, nx, w, c, true)).max(0.0);
            self.active[i] = new <= 0.0;
            u[c] = new;
            max_change = max_change.max((new - old).abs());
        }
        for j in 1..mesh.ny() - 1 {
            let row = j * nx;
            for c in row + 1..row + nx - 1 {
                let delta = relax * neighbour_sum(u, nx, w, c, false);
                u[c] += delta;
                max_change = max_change.max(delta.abs());
            }
        }
        self.sweeps += 1;
        max_change
    }

    /// `max(|Δ_h u|` on interior nodes, `|min(u, −Δ_h u)|` on thin nodes`)`.
    pub fn residual(&self) -> f64 {
        residual_of(&self.values, &self.lcp.mesh, self.weights)
    }

    /// Discrete Dirichlet energy `½ uᵀ A u` with `A` the symmetrized
    /// operator (thin rows halved); PSOR never increases it.
    pub fn energy(&self) -> f64 {
        energy_of(&self.values, &self.lcp.mesh, self.weights)
    }

    pub fn into_solution(self, residual: f64, converged: bool) -> DiscreteSolution {
        DiscreteSolution {
            datum: self.lcp.datum.clone(),
            mesh: self.lcp.mesh,
            mode: self.lcp.mode.clone(),
            stencil: self.lcp.stencil,
            omega: self.omega,
            values: self.values,
            active: self.active,
            iterations: self.sweeps,
            residual,
            converged,
            scale: self.lcp.scale,
        }
    }
}

fn residual_of(u: &[f64], mesh: &Mesh, w: Weights) -> f64 {
    let nx = mesh.nx();
    let h = mesh.h();
    let inv = 1.0 / (w.denom * h * h);
    let mut r = 0.0f64;
    for c in 1..nx - 1 {
        let lap = neighbour_sum(u, nx, w, c, true) * inv;
        r = r.max(u[c].min(-lap).abs());
    }
    for j in 1..mesh.ny() - 1 {
        let row = j * nx;
        for c in row + 1..row + nx - 1 {
            r = r.max((neighbour_sum(u, nx, w, c, false) * inv).abs());
        }
    }
    r
}

fn energy_of(u: &[f64], mesh: &Mesh, w: Weights) -> f64 {
    let nx = mesh.nx();
    let ny = mesh.ny();
    let mut e = 0.0;
    let sq = |a: f64, b: f64| (a - b) * (a - b);
    for j in 0..ny {
        let row = j * nx;
        // Bottom-row pairs carry half weight (reflection halves the row).
        let half = if j == 0 { 0.5 } else { 1.0 };
        for i in 0..nx {
            let c = row + i;
            if i + 1 < nx {
                e += half * w.axial * sq(u[c], u[c + 1]);
            }
            if j + 1 < ny {
                let n = c + nx;
                e += w.axial * sq(u[c], u[n]);
                if w.diag != 0.0 {
                    if i + 1 < nx {
                        e += w.diag * sq(u[c], u[n + 1]);
                    }
                    if i > 0 {
                        e += w.diag * sq(u[c], u[n - 1]);
                    }
                }
            }
        }
    }
    0.5 * e / w.denom
}

/// Projected SOR until the complementarity residual is below
/// `tol · scale` and the estimated remaining error below `err_tol · scale`.
///
/// On hitting the iteration cap the last iterate is returned inside
/// [`Error::MaxIterExceeded`].
pub fn solve_psor(lcp: &Lcp, opts: &PsorOptions) -> Result<DiscreteSolution> {
    let omega = opts.omega.unwrap_or_else(|| lcp.stencil.optimal_omega(lcp.mesh.n()));
    let max_iter = opts.max_iter.unwrap_or(200 * lcp.mesh.n());
    let mut s = PsorSession::new(lcp, omega)?;
    let scale = if lcp.scale > 0.0 { lcp.scale } else { 1.0 };
    let floor = 64.0 * f64::EPSILON * scale;
    const LAG: usize = 10;
    let mut history = std::collections::VecDeque::with_capacity(LAG + 1);
    while s.sweeps() < max_iter {
        let d = s.sweep();
        history.push_back(d);
        if history.len() > LAG + 1 {
            history.pop_front();
        }
        let settled = d <= floor
            || (history.len() == LAG + 1 && {
                let rho = (d / history[0]).powf(1.0 / LAG as f64);
                rho < 1.0 && d * rho / (1.0 - rho) <= opts.err_tol * scale
            });
        if settled {
            let residual = s.residual();
            if residual <= opts.tol * scale {
                return Ok(s.into_solution(residual, true));
            }
        }
    }
    let residual = s.residual();
    let iterations = s.sweeps();
    Err(Error::MaxIterExceeded {
        iterations,
        residual,
        best: Box::new(s.into_solution(residual, false)),
    })
}

/// Maximal runs of contact on the thin line.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ContactReport {
    /// Sorted, disjoint `[left, right]` intervals (node coordinates).
    pub intervals: Vec<(f64, f64)>,
    pub touches_left_boundary: bool,
}

/// Runs of active nodes as intervals.
pub fn contact_set(sol: &DiscreteSolution) -> ContactReport {
    contact_runs(sol, 1)
}

/// Like [`contact_set`] but discards runs shorter than `min_nodes` nodes.
pub fn contact_runs(sol: &DiscreteSolution, min_nodes: usize) -> ContactReport {
    let m = &sol.mesh;
    let mut intervals = Vec::new();
    let mut touches = false;
    let mut start: Option<usize> = None;
    for i in 1..m.nx() {
        let on = i < m.nx() - 1 && sol.active[i];
        match (on, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= min_nodes {
                    intervals.push((m.x1(s), m.x1(i - 1)));
                    touches |= s == 1;
                }
                start = None;
            }
            _ => {}
        }
    }
    ContactReport { intervals, touches_left_boundary: touches }
}

/// Empirical contact closure `M_emp = max{−x1 : inactive thin node, x1 < 0}`
/// (0 when every thin node left of the origin is in contact).
pub fn m_emp(sol: &DiscreteSolution) -> f64 {
    let m = &sol.mesh;
    (1..m.nx() - 1)
        .filter(|&i| !sol.active[i] && m.x1(i) < 0.0)
        .map(|i| -m.x1(i))
        .fold(0.0, f64::max)
}

/// Final solution of [`solve_with_expansion_refinement`] with the decay
/// coefficients extracted after each round.
#[derive(Debug, Clone)]
pub struct RefinedSolution {
    pub solution: DiscreteSolution,
    pub b_history: Vec<Vec<f64>>,
}

/// Radii used for refinement: `0.5 L, 0.625 L, 0.75 L`.
pub fn default_radii(mesh: &Mesh) -> Vec<f64> {
    [0.5, 0.625, 0.75].iter().map(|f| f * mesh.l()).collect()
}

/// Solves with Dirichlet data `p`, then repeatedly re-solves with the tail
/// `Σ b_j u_{1/2−j}` extracted from the previous round added to the data.
pub fn solve_with_expansion_refinement(
    d: &InfinityDatum,
    mesh: Mesh,
    n_terms: usize,
    rounds: usize,
    opts: &PsorOptions,
    radii: &[f64],
) -> Result<RefinedSolution> {
    if rounds == 0 {
        return Err(Error::InvalidDatum("rounds must be at least 1".into()));
    }
    let mut sol = solve_psor(&assemble(d, mesh, BoundaryMode::Datum)?, opts)?;
    let mut history = Vec::with_capacity(rounds);
    for round in 0..rounds {
        let report = crate::expansion::extract_b(&sol, d, radii, n_terms)?;
        history.push(report.b_final.clone());
        if round + 1 == rounds {
            break;
        }
        let lcp = assemble(d, mesh, BoundaryMode::Enriched(report.b_final))?.with_initial(&sol.values)?;
        sol = solve_psor(&lcp, opts)?;
    }
    Ok(RefinedSolution { solution: sol, b_history: history })
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn join17(v: &[f64]) -> String {
    v.iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(" ")
}

/// Writes the versioned text format.
pub fn write_solution<W: Write>(sol: &DiscreteSolution, mut out: W) -> Result<()> {
    let m = &sol.mesh;
    writeln!(out, "{SOLUTION_MAGIC}")?;
    writeln!(out, "nx {}", m.nx())?;
    writeln!(out, "ny {}", m.ny())?;
    writeln!(out, "L {}", fmt17(m.l()))?;
    writeln!(out, "h {}", fmt17(m.h()))?;
    writeln!(out, "k {}", sol.datum.k())?;
    writeln!(out, "a {}", join17(sol.datum.a()))?;
    match &sol.mode {
        BoundaryMode::Datum => writeln!(out, "boundary_mode datum")?,
        BoundaryMode::Enriched(b) => writeln!(out, "boundary_mode enriched {}", join17(b))?,
        BoundaryMode::Exact { profile, shift } => {
            let terms: Vec<String> = profile.iter().map(|(m, c)| format!("{}:{}", m.0, fmt17(c))).collect();
            writeln!(out, "boundary_mode exact {} {}", fmt17(*shift), terms.join(" "))?
        }
        BoundaryMode::Custom(_) => writeln!(out, "boundary_mode custom")?,
    }
    writeln!(out, "stencil {}", sol.stencil.name())?;
    writeln!(out, "omega {}", fmt17(sol.omega))?;
    writeln!(out, "iterations {}", sol.iterations)?;
    writeln!(out, "residual {}", fmt17(sol.residual))?;
    writeln!(out, "converged {}", sol.converged)?;
    writeln!(out, "scale {}", fmt17(sol.scale))?;
    writeln!(out, "values")?;
    for j in 0..m.ny() {
        let row = &sol.values[j * m.nx()..(j + 1) * m.nx()];
        writeln!(out, "{}", join17(row))?;
    }
    writeln!(out, "active")?;
    let flags: Vec<&str> = sol.active.iter().map(|&a| if a { "1" } else { "0" }).collect();
    writeln!(out, "{}", flags.join(" "))?;
    Ok(())
}

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| fmt_err(format!("bad number {s:?}")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse::<usize>().map_err(|_| fmt_err(format!("bad integer {s:?}")))
}

/// Reads the format produced by [`write_solution`].
pub fn read_solution<R: Read>(input: R) -> Result<DiscreteSolution> {
    let mut lines = BufReader::new(input).lines();
    let mut next = move || -> Result<String> {
        lines.next().ok_or_else(|| fmt_err("unexpected end of file"))?.map_err(Error::from)
    };
    if next()?.trim_end() != SOLUTION_MAGIC {
        return Err(fmt_err(format!("missing magic line {SOLUTION_MAGIC:?}")));
    }
    let mut field = |name: &str| -> Result<String> {
        let line = next()?;
        let rest = line
            .strip_prefix(name)
            .and_then(|r| r.strip_prefix(' ').or(if r.is_empty() { Some("") } else { None }))
            .ok_or_else(|| fmt_err(format!("expected field {name:?}, got {line:?}")))?;
        Ok(rest.to_string())
    };
    let nx = parse_usize(&field("nx")?)?;
    let ny = parse_usize(&field("ny")?)?;
    let l = parse_f64(&field("L")?)?;
    let _h = parse_f64(&field("h")?)?;
    let k = parse_usize(&field("k")?)?;
    let a = field("a")?
        .split_whitespace()
        .map(parse_f64)
        .collect::<Result<Vec<_>>>()?;
    let mode_line = field("boundary_mode")?;
    let mut parts = mode_line.split_whitespace();
    let mode = match parts.next() {
        Some("datum") => BoundaryMode::Datum,
        Some("enriched") => BoundaryMode::Enriched(parts.map(parse_f64).collect::<Result<Vec<_>>>()?),
        Some("exact") => {
            let shift = parse_f64(parts.next().ok_or_else(|| fmt_err("exact mode without shift"))?)?;
            let mut profile = SlitExpansion::new();
            for t in parts {
                let (m, c) = t.split_once(':').ok_or_else(|| fmt_err(format!("bad term {t:?}")))?;
                let m: i32 = m.parse().map_err(|_| fmt_err(format!("bad index {m:?}")))?;
                profile.add_term(HalfIntIndex(m), parse_f64(c)?);
            }
            BoundaryMode::Exact { profile, shift }
        }
        Some("custom") => return Err(fmt_err("custom boundary data cannot be reloaded")),
        other => return Err(fmt_err(format!("unknown boundary mode {other:?}"))),
    };
    let stencil = Stencil::parse(field("stencil")?.trim())?;
    let omega = parse_f64(&field("omega")?)?;
    let iterations = parse_usize(&field("iterations")?)?;
    let residual = parse_f64(&field("residual")?)?;
    let converged = match field("converged")?.trim() {
        "true" => true,
        "false" => false,
        other => return Err(fmt_err(format!("bad flag {other:?}"))),
    };
    let scale = parse_f64(&field("scale")?)?;
    if ny < 2 || nx != 2 * (ny - 1) + 1 {
        return Err(fmt_err(format!("inconsistent grid {nx} x {ny}")));
    }
    let mesh = Mesh::with_cells(l, ny - 1)?;
    field("values")?;
    let mut values = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let row = next()?;
        let before = values.len();
        for t in row.split_whitespace() {
            values.push(parse_f64(t)?);
        }
        if values.len() - before != nx {
            return Err(fmt_err(format!("row {j} has {} values, expected {nx}", values.len() - before)));
        }
    }
    if next()?.trim_end() != "active" {
        return Err(fmt_err("missing active section"));
    }
    let active = next()?
        .split_whitespace()
        .map(|t| match t {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(fmt_err(format!("bad flag {t:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    if active.len() != nx {
        return Err(fmt_err(format!("{} active flags, expected {nx}", active.len())));
    }
    let datum = InfinityDatum::unchecked(k, a)?;
    Ok(DiscreteSolution {
        datum,
        mesh,
        mode,
        stencil,
        omega,
        values,
        active,
        iterations,
        residual,
        converged,
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admissibility::validate_datum;

    fn model() -> InfinityDatum {
        validate_datum(2, &[0.0; 3]).unwrap()
    }

    #[test]
    fn mesh_layout() {
        let m = Mesh::new(8.0, 0.5).unwrap();
        assert_eq!((m.n(), m.nx(), m.ny()), (16, 33, 17));
        assert_eq!(m.x1(0), -8.0);
        assert_eq!(m.x1(32), 8.0);
        assert_eq!(m.class(0, 0), NodeClass::Dirichlet);
        assert_eq!(m.class(32, 0), NodeClass::Dirichlet);
        assert_eq!(m.class(5, 0), NodeClass::Thin);
        assert_eq!(m.class(5, 16), NodeClass::Dirichlet);
        assert_eq!(m.class(5, 3), NodeClass::Interior);
        assert!(Mesh::new(8.0, 0.3).is_err());
        assert!(Mesh::new(2.0, 0.5).is_err());
        assert!(Mesh::new(8.0, 0.0).is_err());
    }

    #[test]
    fn datum_boundary_values() {
        let d = model();
        let m = Mesh::new(4.0, 0.25).unwrap();
        let lcp = assemble(&d, m, BoundaryMode::Datum).unwrap();
        let p = SlitExpansion::monomial(3, 1.0);
        for j in 0..m.ny() {
            for i in 0..m.nx() {
                if m.class(i, j) == NodeClass::Dirichlet {
                    assert_eq!(lcp.initial[m.idx(i, j)], p.eval(m.point(i, j)).unwrap());
                }
            }
        }
    }

    #[test]
    fn thin_row_weights_sum_to_zero() {
        for st in [Stencil::FivePoint, Stencil::NinePoint] {
            let w = st.weights();
            assert_eq!(2.0 * w.thin_ew + w.thin_n + 2.0 * w.thin_diag, w.centre);
            assert_eq!(4.0 * w.axial + 4.0 * w.diag, w.centre);
        }
        let w = Stencil::FivePoint.weights();
        assert_eq!((w.thin_ew, w.thin_n, w.centre), (1.0, 2.0, 4.0));
    }

    #[test]
    fn enriched_changes_only_dirichlet() {
        let d = model();
        let m = Mesh::new(4.0, 0.25).unwrap();
        let a = assemble(&d, m, BoundaryMode::Datum).unwrap();
        let b = assemble(&d, m, BoundaryMode::Enriched(vec![0.3, -0.1])).unwrap();
        for j in 0..m.ny() {
            for i in 0..m.nx() {
                let c = m.idx(i, j);
                if m.class(i, j) != NodeClass::Dirichlet {
                    assert_eq!(a.initial[c], b.initial[c]);
                } else if m.x2(j) > 0.0 || m.x1(i) > 0.0 {
                    assert_ne!(a.initial[c], b.initial[c]);
                }
            }
        }
    }

    #[test]
    fn omega_bounds() {
        let lcp = assemble(&model(), Mesh::new(4.0, 0.5).unwrap(), BoundaryMode::Datum).unwrap();
        assert!(matches!(PsorSession::new(&lcp, 2.0), Err(Error::InvalidOmega(_))));
        assert!(matches!(PsorSession::new(&lcp, 0.9), Err(Error::InvalidOmega(_))));
        for n in [8, 64, 512] {
            let w = Stencil::NinePoint.optimal_omega(n);
            assert!((1.0..2.0).contains(&w));
        }
    }

    #[test]
    fn energy_decreases() {
        let lcp = assemble(&model(), Mesh::new(4.0, 0.125).unwrap(), BoundaryMode::Datum).unwrap();
        for st in [Stencil::FivePoint, Stencil::NinePoint] {
            let lcp = Lcp { stencil: st, ..lcp.clone() };
            let mut s = PsorSession::new(&lcp, 1.7).unwrap();
            let mut e = s.energy();
            for _ in 0..200 {
                s.sweep();
                let e2 = s.energy();
                assert!(e2 <= e * (1.0 + 1e-14), "{e2} > {e}");
                e = e2;
            }
        }
    }

    #[test]
    fn max_iter_returns_best() {
        let lcp = assemble(&model(), Mesh::new(4.0, 0.125).unwrap(), BoundaryMode::Datum).unwrap();
        let opts = PsorOptions { max_iter: Some(3), ..Default::default() };
        match solve_psor(&lcp, &opts) {
            Err(Error::MaxIterExceeded { iterations, best, .. }) => {
                assert_eq!(iterations, 3);
                assert!(!best.converged);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn contact_runs_from_flags() {
        let lcp = assemble(&model(), Mesh::new(4.0, 0.5).unwrap(), BoundaryMode::Datum).unwrap();
        let mut sol = PsorSession::new(&lcp, 1.5).unwrap().into_solution(0.0, true);
        sol.active = vec![false, true, true, true, false, false, true, false, false, false, true, true, false, false, false, false, false];
        let r = contact_set(&sol);
        assert_eq!(r.intervals, vec![(-3.5, -2.5), (-1.0, -1.0), (1.0, 1.5)]);
        assert!(r.touches_left_boundary);
        let r = contact_runs(&sol, 2);
        assert_eq!(r.intervals, vec![(-3.5, -2.5), (1.0, 1.5)]);
        assert_eq!(m_emp(&sol), 2.0);
    }

    #[test]
    fn roundtrip_text_format() {
        let d = validate_datum(2, &[0.25, -0.5, 1.0 / 3.0]).unwrap();
        let m = Mesh::new(4.0, 0.5).unwrap();
        let modes = [
            BoundaryMode::Datum,
            BoundaryMode::Enriched(vec![0.1, std::f64::consts::PI]),
            BoundaryMode::Exact { profile: SlitExpansion::monomial(3, 1.0), shift: 0.5 },
        ];
        for mode in modes {
            let lcp = assemble(&d, m, mode).unwrap();
            let mut s = PsorSession::new(&lcp, 1.5).unwrap();
            for _ in 0..5 {
                s.sweep();
            }
            let r = s.residual();
            let sol = s.into_solution(r, false);
            let mut buf = Vec::new();
            write_solution(&sol, &mut buf).unwrap();
            let back = read_solution(buf.as_slice()).unwrap();
            assert_eq!(back.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                       sol.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            assert_eq!(back.active, sol.active);
            assert_eq!(back.mode, sol.mode);
            assert_eq!(back.datum, sol.datum);
            assert_eq!(back.mesh, sol.mesh);
            assert_eq!(back.residual.to_bits(), sol.residual.to_bits());
        }
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(read_solution("nope\n".as_bytes()), Err(Error::Format(_))));
        assert!(matches!(read_solution("SLITSTONE-SOL v1\nnx 3\n".as_bytes()), Err(Error::Format(_))));
    }
}
