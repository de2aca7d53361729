// SPDX-License-Identifier: MIT OR Apache-2.0

//! Finite-gap spectra, Dirichlet divisors and phase coordinates.
//!
//! A spectrum is stored through its complement: `E = R \ U (a_j, b_j)`.
//! Each gap carries one Dirichlet eigenvalue `mu_j` in its closure together
//! with a sheet sign. The phase angle `y_j` parametrises the circle obtained
//! by gluing two copies of the closed gap at their endpoints, via
//!
//! ```text
//! mu_j = a_j + (b_j - a_j) sin^2(y_j),    eps_j = sgn sin(2 y_j).
//! ```

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// An ordered list of open spectral gaps with a distinguished reference gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GapSetRepr", into = "GapSetRepr")]
pub struct GapSet {
    gaps: Vec<(f64, f64)>,
    reference_index: usize,
    labels: Option<Vec<Vec<i64>>>,
}

#[derive(Serialize, Deserialize)]
struct GapSetRepr {
    gaps: Vec<[f64; 2]>,
    #[serde(default)]
    reference_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<Vec<i64>>>,
}

impl TryFrom<GapSetRepr> for GapSet {
    type Error = Error;

    fn try_from(r: GapSetRepr) -> Result<Self> {
        let gaps = r.gaps.iter().map(|g| (g[0], g[1])).collect();
        let mut set = GapSet::new(gaps, r.reference_index)?;
        if let Some(labels) = r.labels {
            set = set.with_labels(labels)?;
        }
        Ok(set)
    }
}

impl From<GapSet> for GapSetRepr {
    fn from(g: GapSet) -> Self {
        GapSetRepr {
            gaps: g.gaps.iter().map(|&(a, b)| [a, b]).collect(),
            reference_index: g.reference_index,
            labels: g.labels,
        }
    }
}

impl GapSet {
    /// Builds a gap set, checking ordering, disjointness and finiteness.
    ///
    /// An empty list is accepted and describes the spectrum `E = R`; its
    /// reference index must then be 0.
    pub fn new(gaps: Vec<(f64, f64)>, reference_index: usize) -> Result<Self> {
        for (j, &(a, b)) in gaps.iter().enumerate() {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::InvalidInput(format!("gap {j} has a non-finite endpoint")));
            }
            if a >= b {
                return Err(Error::InvalidInput(format!("gap {j}: need a < b, got ({a}, {b})")));
            }
            if j > 0 && gaps[j - 1].1 >= a {
                return Err(Error::InvalidInput(format!(
                    "gaps {} and {j} overlap or are not sorted",
                    j - 1
                )));
            }
        }
        if !gaps.is_empty() && reference_index >= gaps.len() {
            return Err(Error::InvalidInput(format!(
                "reference index {reference_index} out of range for {} gaps",
                gaps.len()
            )));
        }
        if gaps.is_empty() && reference_index != 0 {
            return Err(Error::InvalidInput("reference index must be 0 without gaps".into()));
        }
        Ok(GapSet {
            gaps,
            reference_index,
            labels: None,
        })
    }

    /// The spectrum `E = R` (no gaps).
    pub fn empty() -> Self {
        GapSet {
            gaps: Vec::new(),
            reference_index: 0,
            labels: None,
        }
    }

    /// One gap `(a, b)`, which is also the reference gap.
    pub fn single(a: f64, b: f64) -> Result<Self> {
        GapSet::new(vec![(a, b)], 0)
    }

    /// Attaches integer gap labels, one per gap.
    pub fn with_labels(mut self, labels: Vec<Vec<i64>>) -> Result<Self> {
        if labels.len() != self.gaps.len() {
            return Err(Error::LengthMismatch {
                expected: self.gaps.len(),
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn gaps(&self) -> &[(f64, f64)] {
        &self.gaps
    }

    pub fn gap(&self, j: usize) -> (f64, f64) {
        self.gaps[j]
    }

    pub fn labels(&self) -> Option<&[Vec<i64>]> {
        self.labels.as_deref()
    }

    pub fn reference_index(&self) -> usize {
        self.reference_index
    }

    /// Gap length `gamma_j = b_j - a_j`.
    pub fn width(&self, j: usize) -> f64 {
        let (a, b) = self.gaps[j];
        b - a
    }

    pub fn total_width(&self) -> f64 {
        (0..self.len()).map(|j| self.width(j)).sum()
    }

    /// The normalisation point `xi*`, the midpoint of the reference gap.
    pub fn reference_point(&self) -> Option<f64> {
        self.gaps
            .get(self.reference_index)
            .map(|&(a, b)| 0.5 * (a + b))
    }

    /// Euclidean distance between the closures of gaps `j` and `k`.
    pub fn distance(&self, j: usize, k: usize) -> f64 {
        if j == k {
            return 0.0;
        }
        let (lo, hi) = if j < k { (j, k) } else { (k, j) };
        self.gaps[hi].0 - self.gaps[lo].1
    }

    /// True when `x` lies in an open gap.
    pub fn in_gap(&self, x: f64) -> Option<usize> {
        self.gaps.iter().position(|&(a, b)| a < x && x < b)
    }

    /// Lebesgue measure of `E ∩ (lo, hi)`.
    pub fn spectrum_measure(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        (hi - lo) - self.gap_measure(lo, hi)
    }

    /// Total length of the gaps inside `(lo, hi)`.
    pub fn gap_measure(&self, lo: f64, hi: f64) -> f64 {
        self.gaps
            .iter()
            .map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0))
            .sum()
    }

    /// Dilates every endpoint by `sigma > 0` about the origin.
    pub fn scaled(&self, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidInput("scale factor must be positive".into()));
        }
        let gaps = self.gaps.iter().map(|&(a, b)| (sigma * a, sigma * b)).collect();
        GapSet::new(gaps, self.reference_index)
    }

    /// Translates every endpoint by `shift`.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        let gaps = self.gaps.iter().map(|&(a, b)| (a + shift, b + shift)).collect();
        GapSet::new(gaps, self.reference_index)
    }
}

/// Sheet marker of a Dirichlet point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sheet {
    Plus,
    Minus,
    /// The point sits at a gap edge, where both sheets are glued together.
    Edge,
}

impl Sheet {
    /// Numerical value of the sign, with edges mapped to zero.
    pub fn sign(self) -> f64 {
        match self {
            Sheet::Plus => 1.0,
            Sheet::Minus => -1.0,
            Sheet::Edge => 0.0,
        }
    }

    pub fn flipped(self) -> Sheet {
        match self {
            Sheet::Plus => Sheet::Minus,
            Sheet::Minus => Sheet::Plus,
            Sheet::Edge => Sheet::Edge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivisorPoint {
    pub mu: f64,
    pub sheet: Sheet,
}

/// Dirichlet data: one point `(mu_j, eps_j)` per gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divisor {
    pub points: Vec<DivisorPoint>,
}

impl Divisor {
    pub fn new(points: Vec<DivisorPoint>) -> Self {
        Divisor { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mu(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mu).collect()
    }

    /// Divisor with every point at the left gap edge.
    pub fn left_edges(g: &GapSet) -> Self {
        Divisor {
            points: g
                .gaps()
                .iter()
                .map(|&(a, _)| DivisorPoint { mu: a, sheet: Sheet::Edge })
                .collect(),
        }
    }

    /// Checks `mu_j ∈ [a_j, b_j]` and that edge markers sit at edges.
    pub fn validate(&self, g: &GapSet) -> Result<()> {
        if self.len() != g.len() {
            return Err(Error::LengthMismatch { expected: g.len(), got: self.len() });
        }
        for (j, (p, &(a, b))) in self.points.iter().zip(g.gaps()).enumerate() {
            if !(p.mu >= a && p.mu <= b) {
                return Err(Error::OutOfRange { index: j, value: p.mu, lo: a, hi: b });
            }
            let at_edge = p.mu == a || p.mu == b;
            if p.sheet == Sheet::Edge && !at_edge {
                return Err(Error::InvalidInput(format!(
                    "point {j} is marked as an edge but mu = {} is interior",
                    p.mu
                )));
            }
        }
        Ok(())
    }
}

/// Phase angles `y_j`, one per gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseVector(pub Vec<f64>);

impl PhaseVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Reduces every angle into `[0, pi)`.
    pub fn normalized(&self) -> PhaseVector {
        PhaseVector(self.0.iter().map(|y| y.rem_euclid(PI)).collect())
    }
}

/// Below this magnitude of `sin 2y` a point is reported as a gap edge.
pub const EDGE_TOLERANCE: f64 = 1e-14;

/// Eigenvalue position for a single phase angle on the gap `(a, b)`.
#[inline]
pub fn phase_to_mu(y: f64, a: f64, b: f64) -> f64 {
    let s = y.sin();
    a + (b - a) * s * s
}

/// Maps phase angles to Dirichlet data.
pub fn phases_to_divisor(y: &PhaseVector, g: &GapSet) -> Result<Divisor> {
    if y.len() != g.len() {
        return Err(Error::LengthMismatch { expected: g.len(), got: y.len() });
    }
    let points = y
        .0
        .iter()
        .zip(g.gaps())
        .map(|(&yj, &(a, b))| {
            let s2 = (2.0 * yj).sin();
            let sheet = if s2.abs() < EDGE_TOLERANCE {
                Sheet::Edge
            } else if s2 > 0.0 {
                Sheet::Plus
            } else {
                Sheet::Minus
            };
            let mu = match sheet {
                // Snap to the exact endpoint so edge markers validate.
                Sheet::Edge => {
                    if yj.sin().abs() < 0.5 {
                        a
                    } else {
                        b
                    }
                }
                _ => phase_to_mu(yj, a, b),
            };
            DivisorPoint { mu, sheet }
        })
        .collect();
    Ok(Divisor { points })
}

/// Inverse of [`phases_to_divisor`] with every angle in `[0, pi)`.
pub fn divisor_to_phases(d: &Divisor, g: &GapSet) -> Result<PhaseVector> {
    if d.len() != g.len() {
        return Err(Error::LengthMismatch { expected: g.len(), got: d.len() });
    }
    let mut out = Vec::with_capacity(d.len());
    for (j, (p, &(a, b))) in d.points.iter().zip(g.gaps()).enumerate() {
        if !(p.mu >= a && p.mu <= b) {
            return Err(Error::OutOfRange { index: j, value: p.mu, lo: a, hi: b });
        }
        // atan2 stays well conditioned at both edges, unlike asin(sqrt(.)).
        let base = (p.mu - a).sqrt().atan2((b - p.mu).sqrt());
        let y = match p.sheet {
            Sheet::Minus if base > 0.0 && base < 0.5 * PI => PI - base,
            _ => base,
        };
        out.push(y);
    }
    Ok(PhaseVector(out))
}

/// Comparability constants `C_j`, evaluated on a Chebyshev grid of
/// `grid` points per gap together with both endpoint limits.
///
/// The logarithm of the product is a sum of convex functions of `z` on the
/// gap, so the endpoint limits already give the supremum; the grid serves
/// as a cross-check and is reported through [`ComparabilityReport`].
pub fn comparability_constants(g: &GapSet) -> Vec<f64> {
    comparability_report(g, 256).constants
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparabilityReport {
    pub constants: Vec<f64>,
    /// Largest grid value divided by the endpoint value, per gap (≤ 1).
    pub grid_to_endpoint: Vec<f64>,
}

fn log_comparability_product(g: &GapSet, j: usize, z: f64) -> f64 {
    let mut acc = 0.0;
    for (k, &(a, b)) in g.gaps().iter().enumerate() {
        if k < j {
            acc += ((z - a) / (z - b)).ln();
        } else if k > j {
            acc += ((b - z) / (a - z)).ln();
        }
    }
    acc
}

pub fn comparability_report(g: &GapSet, grid: usize) -> ComparabilityReport {
    let mut constants = Vec::with_capacity(g.len());
    let mut ratios = Vec::with_capacity(g.len());
    for (j, &(a, b)) in g.gaps().iter().enumerate() {
        let ends = log_comparability_product(g, j, a).max(log_comparability_product(g, j, b));
        let mut interior = f64::NEG_INFINITY;
        for i in 0..grid {
            let t = ((2 * i + 1) as f64 * PI / (2 * grid) as f64).cos();
            let z = 0.5 * (a + b) + 0.5 * (b - a) * t;
            interior = interior.max(log_comparability_product(g, j, z));
        }
        let best = ends.max(interior);
        constants.push((0.5 * best).exp());
        ratios.push((0.5 * (interior - best)).exp());
    }
    ComparabilityReport {
        constants,
        grid_to_endpoint: ratios,
    }
}

/// Verdict on one of the three summability conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Converged,
    Diverging,
    Inconclusive,
}

/// Partial values of the three summability conditions on a finite gap set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CraigSums {
    /// `Σ_k (1 + η_{k0}) C_k γ_k^{1/2}`.
    pub first: f64,
    /// `sup_j Σ_{k≠j} C_j³ C_k² (1 + η_{0j}²) γ_j^{1/2} γ_k^{1/2} / η_{jk}`.
    pub second: f64,
    /// `sup_j sup_{k≠j} γ_j^{1/2} γ_k^{1/2} / (γ_j^δ η_{jk})`.
    pub third: f64,
}

/// Evaluates the three sums for a finite gap set.
pub fn craig_sums(g: &GapSet, delta: f64) -> Result<CraigSums> {
    let rows = craig_rows(g, delta)?;
    Ok(CraigSums {
        first: rows.first,
        second: rows.second.iter().copied().fold(0.0, f64::max),
        third: rows.third.iter().copied().fold(0.0, f64::max),
    })
}

/// Per-gap values whose suprema give the second and third sums.
struct CraigRows {
    first: f64,
    second: Vec<f64>,
    third: Vec<f64>,
}

fn craig_rows(g: &GapSet, delta: f64) -> Result<CraigRows> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
    }
    let n = g.len();
    let r = g.reference_index();
    let c = comparability_report(g, 0).constants;
    let sq: Vec<f64> = (0..n).map(|j| g.width(j).sqrt()).collect();
    let first = (0..n)
        .map(|k| (1.0 + g.distance(k, r)) * c[k] * sq[k])
        .sum();
    let mut second = vec![0.0; n];
    let mut third = vec![0.0f64; n];
    for j in 0..n {
        let eta0 = g.distance(r, j);
        let pref = c[j].powi(3) * (1.0 + eta0 * eta0) * sq[j];
        let mut row = 0.0;
        for k in 0..n {
            if k == j {
                continue;
            }
            let d = g.distance(j, k);
            row += c[k] * c[k] * sq[k] / d;
            third[j] = third[j].max(sq[j] * sq[k] / (g.width(j).powf(delta) * d));
        }
        second[j] = pref * row;
    }
    Ok(CraigRows { first, second, third })
}

/// Summability report with convergence verdicts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CraigReport {
    pub delta: f64,
    /// Truncation sizes used for the convergence study.
    pub truncations: Vec<usize>,
    /// Sums at each truncation.
    pub sums: Vec<CraigSums>,
    /// Largest row of the second and third sums among the outer gaps
    /// `|k| > K/2`, per truncation.
    #[serde(default)]
    pub outer_rows: Vec<[f64; 2]>,
    pub verdicts: [Convergence; 3],
    /// Analytic bound on the omitted tail of the first sum, when a tail model is given.
    pub first_tail_bound: Option<f64>,
    pub satisfied: bool,
}

/// Decay model of an infinite gap family, used for tail bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailModel {
    /// `γ_k ≤ amplitude · exp(-rate |k|)`.
    Exponential { amplitude: f64, rate: f64 },
    /// `γ_k ≤ amplitude · |k|^(-exponent)`.
    Power { amplitude: f64, exponent: f64 },
}

/// A synthetic family of gaps centred at the integers, `k ∈ [-K, K]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticFamily {
    /// `γ_k = exp(-|k|)`.
    Exponential,
    /// `γ_k = 1 / (1 + k²)`.
    Power,
}

impl SyntheticFamily {
    pub fn width(self, k: i64) -> f64 {
        match self {
            SyntheticFamily::Exponential => (-(k.abs() as f64)).exp(),
            SyntheticFamily::Power => 1.0 / (1.0 + (k * k) as f64),
        }
    }

    pub fn tail_model(self) -> TailModel {
        match self {
            SyntheticFamily::Exponential => TailModel::Exponential { amplitude: 1.0, rate: 1.0 },
            SyntheticFamily::Power => TailModel::Power { amplitude: 1.0, exponent: 2.0 },
        }
    }

    /// Truncation to `|k| ≤ big_k`, with the reference gap at `k = 0`.
    ///
    /// Fails when the outermost widths are lost to rounding against the
    /// gap centres (near `|k| = 36` for the exponential family).
    pub fn truncate(self, big_k: usize) -> Result<GapSet> {
        let kk = big_k as i64;
        let gaps: Vec<(f64, f64)> = (-kk..=kk)
            .map(|k| {
                let w = self.width(k);
                (k as f64 - 0.5 * w, k as f64 + 0.5 * w)
            })
            .collect();
        for (k, &(a, b)) in (-kk..=kk).zip(&gaps) {
            let w = self.width(k);
            if ((b - a) - w).abs() > 1e-3 * w {
                return Err(Error::InvalidInput(format!(
                    "truncation {big_k} is too large: gap {k} of width {w:e} is not representable"
                )));
            }
        }
        GapSet::new(gaps, big_k)
    }
}

fn classify(values: &[f64]) -> Convergence {
    if values.len() < 3 {
        return Convergence::Inconclusive;
    }
    let incs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let last = *values.last().unwrap();
    let tiny = 1e-12 * last.abs().max(1.0);
    let tail = &incs[incs.len() - 2..];
    if tail.iter().all(|d| d.abs() <= tiny) {
        return Convergence::Converged;
    }
    let ratio = tail[1].abs() / tail[0].abs().max(f64::MIN_POSITIVE);
    if ratio < 0.7 {
        Convergence::Converged
    } else if ratio > 0.85 {
        Convergence::Diverging
    } else {
        Convergence::Inconclusive
    }
}

/// Convergence study of the three sums on a synthetic family, evaluated at
/// truncations `K, 2K, 4K, ...`.
///
/// The first sum is classified by how its increments shrink. The other two
/// are suprema over the whole family, which are finite exactly when the rows
/// of far-out gaps stay bounded, so they are classified on the largest row
/// among the outer gaps `|k| > K/2` of each truncation.
pub fn craig_report(
    family: SyntheticFamily,
    delta: f64,
    base_truncation: usize,
    doublings: usize,
) -> Result<CraigReport> {
    if base_truncation == 0 {
        return Err(Error::InvalidInput("base truncation must be positive".into()));
    }
    let truncations: Vec<usize> = (0..=doublings).map(|i| base_truncation << i).collect();
    let mut sums = Vec::with_capacity(truncations.len());
    let mut outer = Vec::with_capacity(truncations.len());
    for &k in &truncations {
        let rows = craig_rows(&family.truncate(k)?, delta)?;
        let ring = |v: &[f64]| {
            v.iter()
                .enumerate()
                .filter(|(j, _)| 2 * j.abs_diff(k) > k)
                .map(|(_, x)| *x)
                .fold(0.0, f64::max)
        };
        outer.push([ring(&rows.second), ring(&rows.third)]);
        sums.push(CraigSums {
            first: rows.first,
            second: rows.second.iter().copied().fold(0.0, f64::max),
            third: rows.third.iter().copied().fold(0.0, f64::max),
        });
    }
    let verdicts = [
        classify(&sums.iter().map(|s| s.first).collect::<Vec<_>>()),
        classify_sup(&outer.iter().map(|o| o[0]).collect::<Vec<_>>()),
        classify_sup(&outer.iter().map(|o| o[1]).collect::<Vec<_>>()),
    ];
    let last_k = *truncations.last().unwrap();
    let c_max = comparability_report(&family.truncate(last_k)?, 0)
        .constants
        .into_iter()
        .fold(1.0, f64::max);
    let first_tail_bound = Some(first_sum_tail(family.tail_model(), last_k, c_max));
    let satisfied = verdicts.iter().all(|v| *v == Convergence::Converged);
    Ok(CraigReport {
        delta,
        truncations,
        sums,
        outer_rows: outer,
        verdicts,
        first_tail_bound,
        satisfied,
    })
}

/// Verdict for a supremum from its outer rows: shrinking rows are bounded,
/// rows that keep growing are not.
fn classify_sup(outer: &[f64]) -> Convergence {
    if outer.len() >= 2 && outer.windows(2).all(|w| w[1] <= w[0]) {
        return Convergence::Converged;
    }
    classify(outer)
}

/// Report for a single finite gap set: a finite set trivially satisfies the
/// conditions, and the values are returned for inspection.
pub fn craig_report_finite(g: &GapSet, delta: f64) -> Result<CraigReport> {
    let sums = craig_sums(g, delta)?;
    Ok(CraigReport {
        delta,
        truncations: vec![g.len()],
        sums: vec![sums],
        outer_rows: Vec::new(),
        verdicts: [Convergence::Converged; 3],
        first_tail_bound: Some(0.0),
        satisfied: true,
    })
}

/// Bound on `Σ_{|k|>K} (1 + |k|) C γ_k^{1/2}` for a centred family, with
/// `C ≥ C_k` supplied by the caller. Infinite when the tail diverges.
pub fn first_sum_tail(model: TailModel, big_k: usize, c_max: f64) -> f64 {
    let k0 = big_k as f64 + 1.0;
    match model {
        TailModel::Exponential { amplitude, rate } => {
            // Σ_{k≥k0} (1+k) e^{-rk/2} ≤ ∫_{k0-1}^∞ (1+t) e^{-rt/2} dt
            let s = 0.5 * rate;
            let t0 = k0 - 1.0;
            let integral = (-s * t0).exp() * ((1.0 + t0) / s + 1.0 / (s * s));
            2.0 * c_max * amplitude.sqrt() * integral
        }
        TailModel::Power { amplitude, exponent } => {
            let p = 0.5 * exponent;
            if p <= 2.0 {
                f64::INFINITY
            } else {
                let t0 = k0 - 1.0;
                let integral = t0.powf(1.0 - p) / (p - 1.0) + t0.powf(2.0 - p) / (p - 2.0);
                2.0 * c_max * amplitude.sqrt() * integral
            }
        }
    }
}

/// Result of the window-restricted homogeneity estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homogeneity {
    pub value: f64,
    pub lambda: f64,
    pub h: f64,
}

/// Minimum of `|E ∩ (λ-h, λ+h)| / (2h)` over sampled `λ ∈ E ∩ window`.
///
/// The sample contains `grid` evenly spaced points of the window that lie in
/// `E` and every gap endpoint inside the window. For each `λ` the radius runs
/// over dyadic values up to the window length and over every breakpoint
/// `|λ - endpoint|`; between breakpoints the ratio is monotone, so this
/// gives the exact minimum over `h` for the sampled `λ`.
pub fn homogeneity_estimate(g: &GapSet, window: (f64, f64), grid: usize) -> Result<Homogeneity> {
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(Error::InvalidInput("empty window".into()));
    }
    if g.spectrum_measure(lo, hi) <= 0.0 {
        return Err(Error::InvalidInput("window does not meet the spectrum".into()));
    }
    let h_max = hi - lo;
    let mut lambdas: Vec<f64> = Vec::new();
    for i in 0..grid.max(1) {
        let t = if grid > 1 { i as f64 / (grid - 1) as f64 } else { 0.5 };
        let x = lo + t * (hi - lo);
        if g.in_gap(x).is_none() {
            lambdas.push(x);
        }
    }
    for &(a, b) in g.gaps() {
        for e in [a, b] {
            if e >= lo && e <= hi {
                lambdas.push(e);
            }
        }
    }
    let endpoints: Vec<f64> = g.gaps().iter().flat_map(|&(a, b)| [a, b]).collect();
    let mut best = Homogeneity { value: f64::INFINITY, lambda: f64::NAN, h: f64::NAN };
    for &lam in &lambdas {
        let mut radii: Vec<f64> = Vec::new();
        let mut h = h_max;
        while h > 1e-9 * h_max {
            radii.push(h);
            h *= 0.5;
        }
        for &e in &endpoints {
            let d = (lam - e).abs();
            if d > 0.0 && d <= h_max {
                radii.push(d);
            }
        }
        for &h in &radii {
            let v = 1.0 - g.gap_measure(lam - h, lam + h) / (2.0 * h);
            if v < best.value {
                best = Homogeneity { value: v, lambda: lam, h };
            }
        }
    }
    Ok(best)
}
