//! Real univariate polynomials with Sturm-sequence root counting.
//!
//! Floating point throughout; every remainder in the Sturm chain is rescaled
//! to unit max-norm and coefficients below [`PRUNE_REL`] of that norm are
//! treated as zero.

use serde::{Deserialize, Serialize};

/// Relative threshold below which a coefficient is considered zero.
pub const PRUNE_REL: f64 = 1e-12;

/// Coefficients in ascending order: `c[0] + c[1] t + …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Zeroes coefficients below `rel · max|c|` and rescales to unit max-norm.
    fn pruned_unit(&self, rel: f64) -> Self {
        let scale = self.max_abs();
        if scale == 0.0 {
            return Self::new(Vec::new());
        }
        Self::new(
            self.coeffs
                .iter()
                .map(|&c| if c.abs() <= rel * scale { 0.0 } else { c / scale })
                .collect(),
        )
    }

    /// Remainder of `self` divided by `divisor` (nonzero).
    pub fn rem(&self, divisor: &Self) -> Self {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.leading();
        let mut r = self.coeffs.clone();
        while r.len() > dd {
            let shift = r.len() - 1 - dd;
            let q = r[r.len() - 1] / lead;
            for (i, &c) in divisor.coeffs.iter().enumerate() {
                r[shift + i] -= q * c;
            }
            r.pop();
        }
        Self::new(r)
    }

    /// Divides out the largest power of `t` (roots at the origin).
    fn strip_origin_roots(&self) -> (Self, usize) {
        let k = self.coeffs.iter().take_while(|&&c| c == 0.0).count();
        (Self::new(self.coeffs[k..].to_vec()), k)
    }
}

/// Sturm chain `p, p', −rem(p, p'), …` with per-step pruning.
#[derive(Debug, Clone)]
pub struct SturmChain {
    chain: Vec<Polynomial>,
}

impl SturmChain {
    pub fn new(p: &Polynomial) -> Self {
        let p0 = p.pruned_unit(PRUNE_REL);
        let mut chain = vec![p0.clone()];
        let p1 = p0.derivative().pruned_unit(PRUNE_REL);
        if p1.is_zero() {
            return Self { chain };
        }
        chain.push(p1);
        loop {
            let n = chain.len();
            // Prune against the dividend (unit norm), not the remainder's
            // own size: a roundoff-sized remainder is zero.
            let r = chain[n - 2].rem(&chain[n - 1]);
            let next = Polynomial::new(
                r.coeffs
                    .iter()
                    .map(|&c| if c.abs() <= PRUNE_REL { 0.0 } else { -c })
                    .collect(),
            )
            .pruned_unit(PRUNE_REL);
            if next.is_zero() {
                break;
            }
            let constant = next.degree() == Some(0);
            chain.push(next);
            if constant {
                break;
            }
        }
        Self { chain }
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    /// Number of sign changes of the chain evaluated at `t` (zeros skipped).
    pub fn variations(&self, t: f64) -> usize {
        count_variations(self.chain.iter().map(|p| p.eval(t)))
    }

    /// Sign changes at `+∞`.
    pub fn variations_at_infinity(&self) -> usize {
        count_variations(self.chain.iter().map(|p| p.leading()))
    }

    /// Distinct real roots in `(a, b]`.
    pub fn count_roots(&self, a: f64, b: f64) -> usize {
        self.variations(a).saturating_sub(self.variations(b))
    }
}

fn count_variations(values: impl Iterator<Item = f64>) -> usize {
    let mut last = 0.0f64;
    let mut n = 0;
    for v in values.filter(|v| *v != 0.0) {
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            n += 1;
        }
        last = v;
    }
    n
}

/// Outcome of a nonnegativity decision on `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonnegVerdict {
    pub nonnegative: bool,
    /// Nonnegative but with a root of even multiplicity in `(0, ∞)`.
    pub zero_margin: bool,
    /// Distinct roots in `(0, ∞)` found by the Sturm count.
    pub roots: usize,
}

/// Isolating intervals for the distinct roots of `chain` in `(lo, hi]`,
/// refined to width `min_width`. Roots closer than that form one cluster.
fn isolate(chain: &SturmChain, lo: f64, hi: f64, min_width: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut stack = vec![(lo, hi, chain.count_roots(lo, hi))];
    while let Some((a, b, n)) = stack.pop() {
        if n == 0 {
            continue;
        }
        if b - a <= min_width {
            out.push((a, b));
            continue;
        }
        let mid = 0.5 * (a + b);
        let left = chain.count_roots(a, mid);
        let right = n.saturating_sub(left);
        stack.push((mid, b, right));
        stack.push((a, mid, left));
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

/// Decides `p(t) ≥ 0` for all `t > 0` by Sturm root isolation followed by
/// sign evaluation between consecutive roots.
pub fn nonneg_on_positive_axis(p: &Polynomial) -> NonnegVerdict {
    let unit = p.pruned_unit(PRUNE_REL);
    if unit.is_zero() {
        return NonnegVerdict { nonnegative: true, zero_margin: true, roots: 0 };
    }
    let (q, _) = unit.strip_origin_roots();
    if q.degree() == Some(0) {
        return NonnegVerdict { nonnegative: q.leading() > 0.0, zero_margin: false, roots: 0 };
    }
    let lead = q.leading();
    let bound = 1.0
        + q.coeffs[..q.coeffs.len() - 1]
            .iter()
            .fold(0.0f64, |m, c| m.max((c / lead).abs()));
    let chain = SturmChain::new(&q);
    let roots = isolate(&chain, 0.0, bound, 1e-10 * bound);

    // Sign on (0, first root) is that of q(0); beyond the last root it is the
    // leading sign; between isolating intervals it is sampled.
    let mut signs = vec![q.coeffs[0], lead];
    for w in roots.windows(2) {
        let (_, b0) = w[0];
        let (a1, _) = w[1];
        let t = if a1 > b0 { 0.5 * (b0 + a1) } else { b0 };
        signs.push(q.eval(t));
    }
    let nonnegative = signs.iter().all(|&s| s >= 0.0);
    NonnegVerdict {
        nonnegative,
        zero_margin: nonnegative && !roots.is_empty(),
        roots: roots.len(),
    }
}
