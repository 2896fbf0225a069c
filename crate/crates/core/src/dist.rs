//! The multivariate gamma law `Γₙ(α, R)` with Laplace transform
//! `|I + RT|^{-α}`.
//!
//! Densities and distribution functions are Monte Carlo averages over
//! `S ~ W_{n-1}(2α, I)` of products of non-central gamma factors evaluated at
//! `(x_j / λ, ½ b_j S b_jᵀ)`, where `R = λ(I + BBᵀ)` is the minimal-eigenvalue
//! split. Every factor lies in `[0, 1]` for the cdf, so the estimator is a
//! conditional expectation with small variance.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{det, min_eig_decompose, CorrelationMatrix, SpectralSplit};
use crate::mc::{estimate, estimate_many, McEstimate};
use crate::rng::RngStream;
use crate::special::{NoncentralKernel, SeriesControl, ShapeParameter};
use crate::wishart::{half_quadratic_form_factor, sample_factor, WishartSpec};

/// Ok iff `2α ∈ ℕ` or `2α > n − 2`.
pub fn validate_admissibility(alpha: ShapeParameter, n: usize) -> Result<()> {
    let two_alpha = 2.0 * alpha.alpha();
    if alpha.two_alpha_integer() || two_alpha > n as f64 - 2.0 {
        Ok(())
    } else {
        Err(Error::Admissibility {
            alpha: alpha.alpha(),
            n,
            two_alpha,
        })
    }
}

#[derive(Debug, Clone)]
pub struct MvGammaParams {
    alpha: ShapeParameter,
    r: CorrelationMatrix,
    split: SpectralSplit,
    wishart: WishartSpec,
    series: SeriesControl,
}

impl MvGammaParams {
    pub fn new(alpha: ShapeParameter, r: CorrelationMatrix) -> Result<Self> {
        validate_admissibility(alpha, r.dim())?;
        let split = min_eig_decompose(&r)?;
        let wishart = WishartSpec::new(r.dim() - 1, alpha.degrees_of_freedom())?;
        Ok(Self {
            alpha,
            r,
            split,
            wishart,
            series: SeriesControl::default(),
        })
    }

    pub fn with_series(mut self, series: SeriesControl) -> Self {
        self.series = series;
        self
    }

    pub fn alpha(&self) -> ShapeParameter {
        self.alpha
    }

    pub fn correlation(&self) -> &CorrelationMatrix {
        &self.r
    }

    pub fn split(&self) -> &SpectralSplit {
        &self.split
    }

    pub fn wishart(&self) -> &WishartSpec {
        &self.wishart
    }

    pub fn series(&self) -> &SeriesControl {
        &self.series
    }

    pub fn dim(&self) -> usize {
        self.r.dim()
    }

    /// Same correlation matrix at shape `α + 1`.
    pub fn shifted(&self) -> Result<MvGammaParams> {
        Ok(MvGammaParams::new(self.alpha.shifted(), self.r.clone())?.with_series(self.series))
    }
}

/// `|I + R diag(t)|^{-α}`.
pub fn laplace_transform(p: &MvGammaParams, t: &[f64]) -> Result<f64> {
    let n = p.dim();
    check_len(t.len(), n)?;
    if t.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidInput("t must be componentwise nonnegative".into()));
    }
    let m = DMatrix::identity(n, n) + p.r.matrix() * DMatrix::from_diagonal(&DVector::from_column_slice(t));
    Ok(det(&m).powf(-p.alpha.alpha()))
}

fn check_len(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_x(x: &[f64], n: usize) -> Result<()> {
    check_len(x.len(), n)?;
    if x.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("x must be componentwise positive and finite".into()));
    }
    Ok(())
}

/// Which factor each coordinate contributes to a draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Factor {
    Cdf,
    Density,
}

/// Per-chunk scratch: one kernel per coordinate plus the Wishart factor.
struct DrawState {
    kernels: Vec<NoncentralKernel>,
    factor: Vec<f64>,
    cdf: Vec<f64>,
    density: Vec<f64>,
}

/// Shared per-estimate setup: coordinate kernels at `x_j / λ` and the rows
/// `b_j` truncated to their nonzero width.
struct Integrand<'a> {
    p: &'a MvGammaParams,
    kernels: Vec<NoncentralKernel>,
    rows: Vec<Vec<f64>>,
    inv_lambda: f64,
}

impl<'a> Integrand<'a> {
    fn new(p: &'a MvGammaParams, x: &[f64]) -> Result<Self> {
        check_x(x, p.dim())?;
        let inv_lambda = 1.0 / p.split.lambda;
        let kernels = x
            .iter()
            .map(|&xj| NoncentralKernel::new(p.alpha, xj * inv_lambda))
            .collect::<Result<Vec<_>>>()?;
        let rank = p.split.rank_a;
        let rows = (0..p.dim())
            .map(|j| p.split.b.row(j).iter().take(rank).copied().collect())
            .collect();
        Ok(Self {
            p,
            kernels,
            rows,
            inv_lambda,
        })
    }

    fn state(&self) -> DrawState {
        let n = self.p.dim();
        DrawState {
            kernels: self.kernels.clone(),
            factor: vec![0.0; self.p.wishart.dim() * self.p.wishart.factor_cols()],
            cdf: vec![0.0; n],
            density: vec![0.0; n],
        }
    }

    /// Samples `S` and fills the requested per-coordinate factors.
    fn draw(&self, s: &mut DrawState, rng: &mut ChaCha8Rng, want_cdf: bool, want_density: bool) -> Result<()> {
        let spec = &self.p.wishart;
        sample_factor(spec, rng, &mut s.factor);
        self.evaluate(s, want_cdf, want_density)
    }

    /// Factors for the Wishart factor already held in `s.factor` (which may
    /// come from another integrand with the same Wishart spec).
    fn evaluate(&self, s: &mut DrawState, want_cdf: bool, want_density: bool) -> Result<()> {
        let cols = self.p.wishart.factor_cols();
        let series = &self.p.series;
        for (j, row) in self.rows.iter().enumerate() {
            let y = if row.iter().all(|&v| v == 0.0) {
                0.0
            } else {
                half_quadratic_form_factor(row, &s.factor, cols)
            };
            if want_cdf {
                s.cdf[j] = s.kernels[j].cdf(y, series)?;
            }
            if want_density {
                s.density[j] = self.inv_lambda * s.kernels[j].pdf(y, series)?;
            }
        }
        Ok(())
    }

    fn product(s: &DrawState, pattern: &[Factor]) -> f64 {
        pattern
            .iter()
            .enumerate()
            .map(|(j, f)| match f {
                Factor::Cdf => s.cdf[j],
                Factor::Density => s.density[j],
            })
            .product()
    }
}

fn pattern_for(n: usize, set: &[usize]) -> Result<Vec<Factor>> {
    let mut pattern = vec![Factor::Cdf; n];
    for &j in set {
        if j >= n {
            return Err(Error::DimensionMismatch { expected: n, found: j + 1 });
        }
        pattern[j] = Factor::Density;
    }
    Ok(pattern)
}

/// `F(x; α, R) = E Π_j G_α(x_j/λ, ½ b_j S b_jᵀ)`.
pub fn cdf_mc(p: &MvGammaParams, x: &[f64], samples: usize, stream: RngStream) -> Result<McEstimate> {
    let integrand = Integrand::new(p, x)?;
    estimate(samples, stream, || integrand.state(), |s, rng| {
        integrand.draw(s, rng, true, false)?;
        Ok(s.cdf.iter().product())
    })
}

/// `f(x; α, R) = E Π_j λ⁻¹ g_α(x_j/λ, ½ b_j S b_jᵀ)`.
pub fn pdf_mc(p: &MvGammaParams, x: &[f64], samples: usize, stream: RngStream) -> Result<McEstimate> {
    let integrand = Integrand::new(p, x)?;
    estimate(samples, stream, || integrand.state(), |s, rng| {
        integrand.draw(s, rng, false, true)?;
        Ok(s.density.iter().product())
    })
}

/// `(Π_{j∈J} ∂/∂x_j) F(x; α, R)`: cdf factors for `j ∈ J` are replaced by
/// density factors. `set` holds 0-based coordinates.
pub fn mixed_partial_cdf_mc(
    p: &MvGammaParams,
    x: &[f64],
    set: &[usize],
    samples: usize,
    stream: RngStream,
) -> Result<McEstimate> {
    let pattern = pattern_for(p.dim(), set)?;
    let integrand = Integrand::new(p, x)?;
    let need_cdf = pattern.contains(&Factor::Cdf);
    let need_density = pattern.contains(&Factor::Density);
    estimate(samples, stream, || integrand.state(), |s, rng| {
        integrand.draw(s, rng, need_cdf, need_density)?;
        Ok(Integrand::product(s, &pattern))
    })
}

/// Several mixed partials from the same draws, plus the weighted sum
/// `Σ_k w_k · partial_k` whose standard error accounts for their
/// correlation. Returns `(partials, weighted_total)`.
pub fn weighted_mixed_partials_mc(
    p: &MvGammaParams,
    x: &[f64],
    sets: &[Vec<usize>],
    weights: &[f64],
    samples: usize,
    stream: RngStream,
) -> Result<(Vec<McEstimate>, McEstimate)> {
    check_len(weights.len(), sets.len())?;
    let patterns = sets
        .iter()
        .map(|set| pattern_for(p.dim(), set))
        .collect::<Result<Vec<_>>>()?;
    let integrand = Integrand::new(p, x)?;
    let k = sets.len();
    let mut out = estimate_many(samples, k + 1, stream, || integrand.state(), |s, rng, out| {
        integrand.draw(s, rng, true, true)?;
        let mut total = 0.0;
        for (i, pattern) in patterns.iter().enumerate() {
            out[i] = Integrand::product(s, pattern);
            total += weights[i] * out[i];
        }
        out[k] = total;
        Ok(())
    })?;
    let total = out.pop().expect("weighted total");
    Ok((out, total))
}

/// Common-random-number comparison of two cdfs sharing shape and dimension:
/// both integrands see the same Wishart draw. Returns `(first, second,
/// first − second)` with the paired standard error on the difference.
pub fn cdf_difference_mc(
    first: &MvGammaParams,
    second: &MvGammaParams,
    x: &[f64],
    samples: usize,
    stream: RngStream,
) -> Result<(McEstimate, McEstimate, McEstimate)> {
    if first.dim() != second.dim() || first.wishart != second.wishart {
        return Err(Error::InvalidInput(
            "common random numbers need matching dimension and shape".into(),
        ));
    }
    let a = Integrand::new(first, x)?;
    let b = Integrand::new(second, x)?;
    let out = estimate_many(
        samples,
        3,
        stream,
        || (a.state(), b.state()),
        |(sa, sb), rng, out| {
            a.draw(sa, rng, true, false)?;
            sb.factor.copy_from_slice(&sa.factor);
            b.evaluate(sb, true, false)?;
            out[0] = sa.cdf.iter().product();
            out[1] = sb.cdf.iter().product();
            out[2] = out[0] - out[1];
            Ok(())
        },
    )?;
    Ok((out[0], out[1], out[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::random_correlation;
    use crate::special::{gamma_cdf, gamma_pdf};

    fn shape(a: f64) -> ShapeParameter {
        ShapeParameter::new(a).unwrap()
    }

    #[test]
    fn admissibility_rule() {
        assert!(validate_admissibility(shape(0.5), 10).is_ok());
        assert!(validate_admissibility(shape(1.3), 3).is_ok());
        let err = validate_admissibility(shape(0.7), 5).unwrap_err();
        assert!(err.to_string().contains("2α ∈ ℕ or 2α > n−2"), "{err}");
        assert!(MvGammaParams::new(shape(0.7), CorrelationMatrix::identity(5)).is_err());
    }

    #[test]
    fn laplace_transform_examples() {
        let p = MvGammaParams::new(shape(1.0), CorrelationMatrix::bivariate(0.5).unwrap()).unwrap();
        assert_eq!(laplace_transform(&p, &[0.0, 0.0]).unwrap(), 1.0);
        assert!((laplace_transform(&p, &[1.0, 1.0]).unwrap() - 1.0 / 3.75).abs() < 1e-15);
        let p = MvGammaParams::new(shape(1.7), CorrelationMatrix::identity(3)).unwrap();
        let t = [0.2, 1.0, 3.0];
        let expected: f64 = t.iter().map(|v: &f64| (1.0 + v).powf(-1.7)).product();
        assert!((laplace_transform(&p, &t).unwrap() - expected).abs() < 1e-14);
        assert!(laplace_transform(&p, &[0.0, -1.0, 0.0]).is_err());
    }

    #[test]
    fn independence_case_is_exact() {
        let a = shape(1.5);
        let p = MvGammaParams::new(a, CorrelationMatrix::identity(3)).unwrap();
        let x = [0.5, 1.5, 3.0];
        let f = cdf_mc(&p, &x, 5000, RngStream::new(1, 0)).unwrap();
        let exact: f64 = x.iter().map(|&v| gamma_cdf(a, v)).product();
        assert!((f.value - exact).abs() < 1e-14);
        assert_eq!(f.std_err, 0.0);
        let d = pdf_mc(&p, &x, 5000, RngStream::new(1, 0)).unwrap();
        let exact: f64 = x.iter().map(|&v| gamma_pdf(a, v).unwrap()).product();
        assert!((d.value - exact).abs() < 1e-14);
        assert_eq!(d.std_err, 0.0);
    }

    #[test]
    fn univariate_margin() {
        let a = shape(0.8);
        let p = MvGammaParams::new(a, CorrelationMatrix::identity(1)).unwrap();
        let f = cdf_mc(&p, &[1.1], 10, RngStream::new(3, 0)).unwrap();
        assert!((f.value - gamma_cdf(a, 1.1)).abs() < 1e-15);
    }

    #[test]
    fn mixed_partial_extremes() {
        let r = random_correlation(3, 4, 0.1).unwrap();
        let p = MvGammaParams::new(shape(1.0), r).unwrap();
        let x = [0.7, 1.0, 1.4];
        let s = RngStream::new(2, 5);
        let none = mixed_partial_cdf_mc(&p, &x, &[], 3000, s).unwrap();
        assert_eq!(none.value, cdf_mc(&p, &x, 3000, s).unwrap().value);
        let all = mixed_partial_cdf_mc(&p, &x, &[0, 1, 2], 3000, s).unwrap();
        assert_eq!(all.value, pdf_mc(&p, &x, 3000, s).unwrap().value);
        assert!(mixed_partial_cdf_mc(&p, &x, &[3], 10, s).is_err());
    }

    #[test]
    fn weighted_total_is_consistent() {
        let r = random_correlation(3, 9, 0.1).unwrap();
        let p = MvGammaParams::new(shape(1.5), r).unwrap();
        let x = [1.0, 1.2, 0.9];
        let sets = vec![vec![0, 1], vec![0, 2], vec![1]];
        let w = [0.5, 1.5, 2.0];
        let s = RngStream::new(4, 4);
        let (parts, total) = weighted_mixed_partials_mc(&p, &x, &sets, &w, 5000, s).unwrap();
        let sum: f64 = parts.iter().zip(&w).map(|(e, w)| e.value * w).sum();
        assert!((sum - total.value).abs() < 1e-12);
        for (set, est) in sets.iter().zip(&parts) {
            let single = mixed_partial_cdf_mc(&p, &x, set, 5000, s).unwrap();
            assert!((single.value - est.value).abs() < 1e-12);
        }
    }

    #[test]
    fn estimates_are_deterministic_and_bounded() {
        let r = random_correlation(4, 1, 0.1).unwrap();
        let p = MvGammaParams::new(shape(0.5), r).unwrap();
        let x = [0.3, 0.8, 1.0, 2.0];
        let a = cdf_mc(&p, &x, 10_000, RngStream::new(42, 0)).unwrap();
        let b = cdf_mc(&p, &x, 10_000, RngStream::new(42, 0)).unwrap();
        assert_eq!(a, b);
        assert!(a.value > 0.0 && a.value < 1.0);
        assert!(cdf_mc(&p, &x, 0, RngStream::new(42, 0)).is_err());
        assert!(cdf_mc(&p, &[1.0, 1.0, 0.0, 1.0], 10, RngStream::new(42, 0)).is_err());
    }

    #[test]
    fn difference_of_identical_params_is_zero() {
        let r = random_correlation(3, 2, 0.1).unwrap();
        let p = MvGammaParams::new(shape(1.0), r).unwrap();
        let (a, b, d) = cdf_difference_mc(&p, &p, &[1.0, 1.0, 1.0], 4000, RngStream::new(1, 1)).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(d.value, 0.0);
        assert_eq!(d.std_err, 0.0);
    }
}
