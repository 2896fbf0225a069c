//! Gaussian correlation inequality for `Γₙ(α, R)`: the interpolation path
//! `R_τ`, the subset coefficients `c_J(τ)`, the closed-form `τ`-derivative of
//! the Laplace transform, the nonnegative decomposition of `∂F/∂τ` and the
//! block-product gap `F(x; R) − F(x₁; R₁₁) F(x₂; R₂₂)`.

use serde::Serialize;

use crate::dist::{
    cdf_difference_mc, cdf_mc, validate_admissibility, weighted_mixed_partials_mc, MvGammaParams,
};
use crate::error::{Error, Result};
use crate::matrix::{
    block, canonical_corr_sq_of, det, positive_count, principal_submatrix, CorrelationMatrix,
    SubsetSplit, MAX_ENUMERATION_DIM,
};
use crate::mc::McEstimate;
use crate::rng::RngStream;
use crate::special::{SeriesControl, ShapeParameter};

/// Checkpoints used by reports when none are requested.
pub const DEFAULT_TAUS: [f64; 3] = [0.25, 0.5, 0.75];
/// Step for exact-function `τ` derivatives.
pub const EXACT_FD_STEP: f64 = 1e-5;
/// Step for common-random-number Monte Carlo `τ` derivatives.
pub const MC_FD_STEP: f64 = 1e-2;

const SINGULAR_TOL: f64 = 1e-14;

/// The first `n1` coordinates against the remaining `n − n1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockPartition {
    n: usize,
    n1: usize,
}

impl BlockPartition {
    pub fn new(n: usize, n1: usize) -> Result<Self> {
        if n1 == 0 || n1 >= n {
            return Err(Error::InvalidInput(format!(
                "block partition needs 1 <= n1 < n, got n1 = {n1}, n = {n}"
            )));
        }
        Ok(Self { n, n1 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n - self.n1
    }

    pub fn first(&self) -> Vec<usize> {
        (0..self.n1).collect()
    }

    pub fn second(&self) -> Vec<usize> {
        (self.n1..self.n).collect()
    }

    fn check(&self, r: &CorrelationMatrix) -> Result<()> {
        if r.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: r.dim(),
            });
        }
        Ok(())
    }

    /// Rank of the cross block `R₁₂`.
    pub fn cross_rank(&self, r: &CorrelationMatrix) -> Result<usize> {
        self.check(r)?;
        let r12 = block(r.matrix(), &self.first(), &self.second());
        let gram = &r12 * r12.transpose();
        let values: Vec<f64> = crate::matrix::sym_eigen(&gram)?.values.iter().copied().collect();
        Ok(positive_count(&values))
    }
}

fn check_tau(tau: f64, closed_upper: bool) -> Result<()> {
    let ok = tau >= 0.0 && if closed_upper { tau <= 1.0 } else { tau < 1.0 };
    if !ok {
        return Err(Error::InvalidInput(format!("tau = {tau} is outside the allowed range")));
    }
    Ok(())
}

/// `R_τ`: cross-block entries scaled by `τ ∈ [0, 1]`.
pub fn interpolate(r: &CorrelationMatrix, part: BlockPartition, tau: f64) -> Result<CorrelationMatrix> {
    part.check(r)?;
    check_tau(tau, true)?;
    let mut m = r.matrix().clone();
    for i in 0..part.n1 {
        for j in part.n1..part.n {
            m[(i, j)] *= tau;
            m[(j, i)] *= tau;
        }
    }
    CorrelationMatrix::new(m).map_err(|e| Error::Internal(format!("R_tau at tau = {tau} is invalid: {e}")))
}

/// Every split with nonempty parts in both blocks, ordered
/// lexicographically by the sorted union `J₁ ∪ J₂`.
pub fn subset_splits(part: BlockPartition) -> Result<Vec<SubsetSplit>> {
    if part.n > MAX_ENUMERATION_DIM {
        return Err(Error::TooLarge {
            n: part.n,
            max: MAX_ENUMERATION_DIM,
        });
    }
    let mut splits = Vec::with_capacity(((1usize << part.n1) - 1) * ((1usize << part.n2()) - 1));
    for m1 in 1u32..(1 << part.n1) {
        let j1: Vec<usize> = (0..part.n1).filter(|&i| m1 & (1 << i) != 0).collect();
        for m2 in 1u32..(1 << part.n2()) {
            let j2: Vec<usize> = (0..part.n2())
                .filter(|&i| m2 & (1 << i) != 0)
                .map(|i| i + part.n1)
                .collect();
            splits.push(SubsetSplit { j1: j1.clone(), j2 });
        }
    }
    splits.sort_by_key(|s| s.union());
    Ok(splits)
}

/// τ-independent data of one split: squared canonical correlations of the
/// unscaled `R` restricted to `J`.
#[derive(Debug, Clone)]
pub struct SplitTerm {
    pub split: SubsetSplit,
    pub canonical: Vec<f64>,
}

impl SplitTerm {
    pub fn new(r: &CorrelationMatrix, split: SubsetSplit) -> Result<Self> {
        let canonical = canonical_corr_sq_of(r.matrix(), &split.j1, &split.j2)?;
        Ok(Self { split, canonical })
    }

    pub fn rank(&self) -> usize {
        self.canonical.len()
    }

    /// `c_J(τ) = 2ατ |R_{τ,J}| Σᵢ ρᵢ² / (1 − τ²ρᵢ²)`.
    pub fn coefficient(&self, r_tau: &CorrelationMatrix, tau: f64, alpha: ShapeParameter) -> Result<f64> {
        if tau == 0.0 || self.canonical.is_empty() {
            return Ok(0.0);
        }
        let mut sum = 0.0;
        for &rho2 in &self.canonical {
            let denom = 1.0 - tau * tau * rho2;
            if denom < SINGULAR_TOL {
                return Err(Error::Singular(format!(
                    "1 - tau^2 rho^2 = {denom:e} for split {:?}",
                    self.split
                )));
            }
            sum += rho2 / denom;
        }
        let det_j = det(&principal_submatrix(r_tau.matrix(), &self.split.union()));
        Ok(2.0 * alpha.alpha() * tau * det_j * sum)
    }
}

pub fn split_terms(r: &CorrelationMatrix, part: BlockPartition) -> Result<Vec<SplitTerm>> {
    part.check(r)?;
    subset_splits(part)?
        .into_iter()
        .map(|s| SplitTerm::new(r, s))
        .collect()
}

/// `c_J(τ)` for a single split.
pub fn coefficient_c(
    r: &CorrelationMatrix,
    part: BlockPartition,
    tau: f64,
    split: &SubsetSplit,
    alpha: ShapeParameter,
) -> Result<f64> {
    check_tau(tau, true)?;
    let r_tau = interpolate(r, part, tau)?;
    SplitTerm::new(r, split.clone())?.coefficient(&r_tau, tau, alpha)
}

fn lt_at(r: &CorrelationMatrix, t: &[f64], exponent: f64) -> f64 {
    let n = r.dim();
    let mut m = r.matrix().clone();
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] *= t[j];
        }
        m[(j, j)] += 1.0;
    }
    det(&m).powf(-exponent)
}

fn check_t(t: &[f64], n: usize) -> Result<()> {
    if t.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: t.len() });
    }
    if t.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidInput("t must be componentwise nonnegative".into()));
    }
    Ok(())
}

/// `|I + R_τT|^{-α}`.
pub fn lt_along_path(
    r: &CorrelationMatrix,
    part: BlockPartition,
    tau: f64,
    alpha: ShapeParameter,
    t: &[f64],
) -> Result<f64> {
    check_t(t, r.dim())?;
    Ok(lt_at(&interpolate(r, part, tau)?, t, alpha.alpha()))
}

/// `∂/∂τ |I + R_τT|^{-α} = |I + R_τT|^{-(α+1)} Σ_J c_J(τ) Π_{j∈J} t_j`.
pub fn lt_tau_derivative_closed(
    r: &CorrelationMatrix,
    part: BlockPartition,
    tau: f64,
    alpha: ShapeParameter,
    t: &[f64],
) -> Result<f64> {
    check_tau(tau, false)?;
    check_t(t, r.dim())?;
    let terms = split_terms(r, part)?;
    let r_tau = interpolate(r, part, tau)?;
    let mut sum = 0.0;
    for term in &terms {
        let weight: f64 = term.split.union().iter().map(|&j| t[j]).product();
        if weight == 0.0 {
            continue;
        }
        sum += term.coefficient(&r_tau, tau, alpha)? * weight;
    }
    Ok(lt_at(&r_tau, t, alpha.alpha() + 1.0) * sum)
}

/// Central difference of the exact transform in `τ`.
pub fn lt_tau_derivative_fd(
    r: &CorrelationMatrix,
    part: BlockPartition,
    tau: f64,
    alpha: ShapeParameter,
    t: &[f64],
    h: f64,
) -> Result<f64> {
    let hi = lt_along_path(r, part, tau + h, alpha, t)?;
    let lo = lt_along_path(r, part, tau - h, alpha, t)?;
    Ok((hi - lo) / (2.0 * h))
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionTerm {
    #[serde(serialize_with = "one_based")]
    pub j1: Vec<usize>,
    #[serde(serialize_with = "one_based")]
    pub j2: Vec<usize>,
    pub rank: usize,
    pub c: f64,
    /// `(Π_{j∈J} ∂/∂x_j) F(x; α+1, R_τ)`.
    pub mixed_partial: McEstimate,
    /// `c_J(τ)` times the mixed partial.
    pub term: McEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct Decomposition {
    pub tau: f64,
    pub total: McEstimate,
    pub terms: Vec<DecompositionTerm>,
}

/// `∂F/∂τ (x; α, R_τ) = Σ_J c_J(τ) (Π_{j∈J} ∂/∂x_j) F(x; α+1, R_τ)`, every
/// mixed partial estimated from the same draws of `S ~ W_{n-1}(2α+2, I)`.
#[allow(clippy::too_many_arguments)]
pub fn cdf_tau_derivative_decomposed(
    r: &CorrelationMatrix,
    part: BlockPartition,
    tau: f64,
    alpha: ShapeParameter,
    x: &[f64],
    samples: usize,
    stream: RngStream,
    series: SeriesControl,
) -> Result<Decomposition> {
    check_tau(tau, false)?;
    let shifted = alpha.shifted();
    validate_admissibility(shifted, r.dim())?;
    let terms = split_terms(r, part)?;
    let r_tau = interpolate(r, part, tau)?;
    let coefficients = terms
        .iter()
        .map(|t| t.coefficient(&r_tau, tau, alpha))
        .collect::<Result<Vec<_>>>()?;
    let params = MvGammaParams::new(shifted, r_tau)?.with_series(series);
    let sets: Vec<Vec<usize>> = terms.iter().map(|t| t.split.union()).collect();
    let (partials, total) = weighted_mixed_partials_mc(&params, x, &sets, &coefficients, samples, stream)?;
    let terms = terms
        .into_iter()
        .zip(coefficients)
        .zip(partials)
        .map(|((term, c), partial)| DecompositionTerm {
            rank: term.rank(),
            j1: term.split.j1,
            j2: term.split.j2,
            c,
            mixed_partial: partial,
            term: partial.scaled(c),
        })
        .collect();
    Ok(Decomposition { tau, total, terms })
}

/// `(F(R_{τ+h}) − F(R_{τ−h})) / 2h` with common random numbers.
#[allow(clippy::too_many_arguments)]
pub fn cdf_tau_derivative_fd(
    r: &CorrelationMatrix,
    part: BlockPartition,
    tau: f64,
    alpha: ShapeParameter,
    x: &[f64],
    h: f64,
    samples: usize,
    stream: RngStream,
    series: SeriesControl,
) -> Result<McEstimate> {
    if !(h > 0.0) || tau - h < 0.0 || tau + h > 1.0 {
        return Err(Error::InvalidInput(format!(
            "finite difference step {h} at tau = {tau} leaves [0, 1]"
        )));
    }
    let hi = MvGammaParams::new(alpha, interpolate(r, part, tau + h)?)?.with_series(series);
    let lo = MvGammaParams::new(alpha, interpolate(r, part, tau - h)?)?.with_series(series);
    let (_, _, diff) = cdf_difference_mc(&hi, &lo, x, samples, stream)?;
    Ok(diff.scaled(1.0 / (2.0 * h)))
}

fn one_based<S: serde::Serializer>(idx: &[usize], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(idx.iter().map(|i| i + 1))
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientEntry {
    #[serde(serialize_with = "one_based")]
    pub j1: Vec<usize>,
    #[serde(serialize_with = "one_based")]
    pub j2: Vec<usize>,
    pub rank: usize,
    pub c: f64,
}

/// `c_J(τ)` for every split at one `τ`.
pub fn coefficient_table(
    r: &CorrelationMatrix,
    part: BlockPartition,
    tau: f64,
    alpha: ShapeParameter,
) -> Result<Vec<CoefficientEntry>> {
    check_tau(tau, true)?;
    let r_tau = interpolate(r, part, tau)?;
    split_terms(r, part)?
        .into_iter()
        .map(|term| {
            let c = term.coefficient(&r_tau, tau, alpha)?;
            Ok(CoefficientEntry {
                rank: term.rank(),
                j1: term.split.j1,
                j2: term.split.j2,
                c,
            })
        })
        .collect()
}

/// Discrepancy between two independent estimates in units of their
/// combined standard error.
pub fn discrepancy_in_se(a: &McEstimate, b: &McEstimate) -> f64 {
    let diff = (a.value - b.value).abs();
    let se = a.std_err.hypot(b.std_err);
    if se > 0.0 {
        diff / se
    } else if diff <= 1e-12 {
        0.0
    } else {
        f64::MAX
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TauCheck {
    pub tau: f64,
    pub coefficients: Vec<CoefficientEntry>,
    /// Closed-form `τ`-derivative of the transform at `t = (1, …, 1)`.
    pub lt_derivative_closed: f64,
    pub lt_derivative_fd: f64,
    pub lt_relative_error: f64,
    pub decomposed_total: McEstimate,
    pub finite_difference: McEstimate,
    pub discrepancy_se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GciReport {
    pub alpha: f64,
    pub n: usize,
    pub n1: usize,
    pub x: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub lhs: McEstimate,
    pub rhs_first_block: McEstimate,
    pub rhs_second_block: McEstimate,
    pub rhs: McEstimate,
    pub gap: McEstimate,
    /// `gap > 3·se`.
    pub gap_significant: bool,
    /// `gap >= −3·se`.
    pub gap_consistent: bool,
    pub cross_rank: usize,
    pub max_canonical_corr_sq: f64,
    /// `">"` when the cross block has positive rank, `"="` otherwise.
    pub inequality: String,
    pub note: Option<String>,
    pub tau_checks: Vec<TauCheck>,
    pub tau_derivative_closed_form_check: Option<f64>,
    pub decomposition_check: Option<f64>,
}

/// Stream layout of [`gci_gap`], relative to the caller's stream id.
pub mod streams {
    pub const LHS: u64 = 0;
    pub const FIRST_BLOCK: u64 = 1;
    pub const SECOND_BLOCK: u64 = 2;
    pub const TAU_BASE: u64 = 16;
}

#[derive(Debug, Clone)]
pub struct GapOptions {
    pub taus: Vec<f64>,
    pub series: SeriesControl,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            taus: Vec::new(),
            series: SeriesControl::default(),
        }
    }
}

/// Both sides of `F(x; α, R) ≥ F(x₁; α, R₁₁) F(x₂; α, R₂₂)`. The right-hand
/// blocks use their own substreams, independent of the left-hand side.
pub fn gci_gap(
    r: &CorrelationMatrix,
    part: BlockPartition,
    alpha: ShapeParameter,
    x: &[f64],
    samples: usize,
    stream: RngStream,
    options: &GapOptions,
) -> Result<GciReport> {
    part.check(r)?;
    validate_admissibility(alpha, part.n)?;
    validate_admissibility(alpha, part.n1)?;
    validate_admissibility(alpha, part.n2())?;
    if x.len() != part.n {
        return Err(Error::DimensionMismatch { expected: part.n, found: x.len() });
    }
    let base = stream.stream_id;
    let sub = |offset: u64| stream.with_stream(base.wrapping_add(offset));
    let series = options.series;

    let full = MvGammaParams::new(alpha, r.clone())?.with_series(series);
    let first = MvGammaParams::new(alpha, r.principal(&part.first()))?.with_series(series);
    let second = MvGammaParams::new(alpha, r.principal(&part.second()))?.with_series(series);
    let lhs = cdf_mc(&full, x, samples, sub(streams::LHS))?;
    let f1 = cdf_mc(&first, &x[..part.n1], samples, sub(streams::FIRST_BLOCK))?;
    let f2 = cdf_mc(&second, &x[part.n1..], samples, sub(streams::SECOND_BLOCK))?;
    let rhs = f1.product(&f2);
    let gap = lhs.minus_independent(&rhs);

    let cross_rank = part.cross_rank(r)?;
    let max_canonical_corr_sq = canonical_corr_sq_of(r.matrix(), &part.first(), &part.second())?
        .first()
        .copied()
        .unwrap_or(0.0);
    let (inequality, note) = if cross_rank > 0 {
        (">".to_string(), None)
    } else {
        (
            "=".to_string(),
            Some("cross block R12 has zero rank: both sides are equal".to_string()),
        )
    };

    let ones = vec![1.0; part.n];
    let mut tau_checks = Vec::with_capacity(options.taus.len());
    for (i, &tau) in options.taus.iter().enumerate() {
        let lt_closed = lt_tau_derivative_closed(r, part, tau, alpha, &ones)?;
        let lt_fd = lt_tau_derivative_fd(r, part, tau, alpha, &ones, EXACT_FD_STEP)?;
        let lt_relative_error = relative_error(lt_closed, lt_fd);
        let decomposed = cdf_tau_derivative_decomposed(
            r,
            part,
            tau,
            alpha,
            x,
            samples,
            sub(streams::TAU_BASE + 2 * i as u64),
            series,
        )?;
        let fd = cdf_tau_derivative_fd(
            r,
            part,
            tau,
            alpha,
            x,
            MC_FD_STEP,
            samples,
            sub(streams::TAU_BASE + 2 * i as u64 + 1),
            series,
        )?;
        tau_checks.push(TauCheck {
            tau,
            coefficients: coefficient_table(r, part, tau, alpha)?,
            lt_derivative_closed: lt_closed,
            lt_derivative_fd: lt_fd,
            lt_relative_error,
            discrepancy_se: discrepancy_in_se(&decomposed.total, &fd),
            decomposed_total: decomposed.total,
            finite_difference: fd,
        });
    }
    let max_of = |f: fn(&TauCheck) -> f64| tau_checks.iter().map(f).reduce(f64::max);

    Ok(GciReport {
        alpha: alpha.alpha(),
        n: part.n,
        n1: part.n1,
        x: x.to_vec(),
        samples,
        seed: stream.seed,
        gap_significant: gap.value > 3.0 * gap.std_err && gap.value > 0.0,
        gap_consistent: gap.value >= -3.0 * gap.std_err - 1e-12,
        lhs,
        rhs_first_block: f1,
        rhs_second_block: f2,
        rhs,
        gap,
        cross_rank,
        max_canonical_corr_sq,
        inequality,
        note,
        tau_derivative_closed_form_check: max_of(|c| c.lt_relative_error),
        decomposition_check: max_of(|c| c.discrepancy_se),
        tau_checks,
    })
}

/// `|a − b| / |b|`, or the absolute difference when `b` vanishes.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    if b == 0.0 {
        diff
    } else {
        diff / b.abs()
    }
}

/// Block-averaged correlations.
#[derive(Debug, Clone, Serialize)]
pub struct AveragedCorrelations {
    /// Mean of `ρ_ij`, `i < j`, within the first block; undefined when
    /// `n₁ = 1`.
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    /// Squared mean cross-block correlation.
    pub rho_sq: f64,
    /// Mean squared cross-block correlation.
    pub rho_sq_alt: f64,
    /// `ρ₁ > 0`, `ρ₂ > 0` and `ρ² ≤ ρ₁ρ₂`.
    pub admissible: bool,
    pub note: Option<String>,
}

pub fn averaged_correlations(r: &CorrelationMatrix, part: BlockPartition) -> Result<AveragedCorrelations> {
    part.check(r)?;
    let within = |idx: &[usize]| -> Option<f64> {
        if idx.len() < 2 {
            return None;
        }
        let mut sum = 0.0;
        let mut count = 0usize;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                sum += r.get(i, j);
                count += 1;
            }
        }
        Some(sum / count as f64)
    };
    let rho1 = within(&part.first());
    let rho2 = within(&part.second());
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for i in part.first() {
        for j in part.second() {
            sum += r.get(i, j);
            sum_sq += r.get(i, j) * r.get(i, j);
        }
    }
    let count = (part.n1 * part.n2()) as f64;
    let rho_sq = (sum / count).powi(2);
    let rho_sq_alt = sum_sq / count;
    let (admissible, note) = match (rho1, rho2) {
        (Some(a), Some(b)) => (a > 0.0 && b > 0.0 && rho_sq <= a * b, None),
        _ => (
            false,
            Some("a block of size 1 has no within-block correlation".to_string()),
        ),
    };
    Ok(AveragedCorrelations {
        rho1,
        rho2,
        rho_sq,
        rho_sq_alt,
        admissible,
        note,
    })
}
