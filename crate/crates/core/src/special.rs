//! Central and non-central gamma densities and distribution functions.
//!
//! The non-central laws are Poisson mixtures of central gamma laws:
//! `g_α(x, y) = e^{-y} Σ_k g_{α+k}(x) y^k / k!`, and likewise for the cdf.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const INTEGER_TOL: f64 = 1e-12;
const REFRESH_EVERY: usize = 64;
const INCGAMMA_MAX_ITER: usize = 100_000;

/// A positive gamma shape `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeParameter {
    alpha: f64,
    two_alpha_integer: bool,
}

impl ShapeParameter {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("shape alpha must be positive and finite, got {alpha}")));
        }
        let two = 2.0 * alpha;
        Ok(Self {
            alpha,
            two_alpha_integer: (two - two.round()).abs() <= INTEGER_TOL,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Whether `2α ∈ ℕ` within 1e-12.
    pub fn two_alpha_integer(&self) -> bool {
        self.two_alpha_integer
    }

    /// `2α`, snapped to the nearest integer when it is one.
    pub fn degrees_of_freedom(&self) -> f64 {
        let two = 2.0 * self.alpha;
        if self.two_alpha_integer {
            two.round()
        } else {
            two
        }
    }

    /// The shape `α + 1`.
    pub fn shifted(&self) -> ShapeParameter {
        ShapeParameter::new(self.alpha + 1.0).expect("alpha + 1 is positive")
    }
}

/// Truncation policy for the Poisson-mixture series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub epsilon: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            epsilon: 1e-12,
            max_terms: 1_000_000,
        }
    }
}

impl SeriesControl {
    pub fn new(epsilon: f64, max_terms: usize) -> Result<Self> {
        if !(epsilon > 0.0) || max_terms == 0 {
            return Err(Error::InvalidInput(format!(
                "series control needs epsilon > 0 and max_terms >= 1, got {epsilon} and {max_terms}"
            )));
        }
        Ok(Self { epsilon, max_terms })
    }
}

fn ln_gamma_pdf(a: f64, x: f64) -> f64 {
    (a - 1.0) * x.ln() - x - ln_gamma(a)
}

/// Central gamma density `x^{α-1} e^{-x} / Γ(α)`, evaluated in log space.
pub fn gamma_pdf(alpha: ShapeParameter, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidInput(format!("gamma density needs x > 0, got {x}")));
    }
    Ok(ln_gamma_pdf(alpha.alpha, x).exp())
}

/// Regularized lower incomplete gamma `P(a, x)`, `a > 0`.
///
/// Power series below `x = a + 1`, Lentz continued fraction for the upper
/// function above.
pub fn regularized_lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let ln_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..INCGAMMA_MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * f64::EPSILON {
                break;
            }
        }
        (sum * ln_prefactor.exp()).clamp(0.0, 1.0)
    } else {
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..INCGAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < f64::EPSILON {
                break;
            }
        }
        (1.0 - ln_prefactor.exp() * h).clamp(0.0, 1.0)
    }
}

/// Central gamma distribution function `G_α(x)`.
pub fn gamma_cdf(alpha: ShapeParameter, x: f64) -> f64 {
    regularized_lower_gamma(alpha.alpha, x)
}

/// Cached central terms `G_{α+k}(x)` and `g_{α+k}(x)` for one fixed `(α, x)`,
/// so that repeated non-central evaluations at varying `y` only pay for the
/// Poisson weights.
#[derive(Debug, Clone)]
pub struct NoncentralKernel {
    alpha: f64,
    x: f64,
    cdf_terms: Vec<f64>,
    pdf_terms: Vec<f64>,
}

impl NoncentralKernel {
    pub fn new(alpha: ShapeParameter, x: f64) -> Result<Self> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::InvalidInput(format!("x must be finite and nonnegative, got {x}")));
        }
        Ok(Self {
            alpha: alpha.alpha,
            x,
            cdf_terms: Vec::new(),
            pdf_terms: Vec::new(),
        })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    fn ensure(&mut self, k: usize) {
        if self.x == 0.0 {
            return;
        }
        while self.cdf_terms.len() <= k {
            let i = self.cdf_terms.len();
            let a = self.alpha + i as f64;
            if i % REFRESH_EVERY == 0 {
                self.cdf_terms.push(regularized_lower_gamma(a, self.x));
                self.pdf_terms.push(ln_gamma_pdf(a, self.x).exp());
            } else {
                // g_{a}(x) = g_{a-1}(x) x / (a-1);  P(a, x) = P(a-1, x) - g_a(x)
                let g = self.pdf_terms[i - 1] * self.x / (a - 1.0);
                let p = (self.cdf_terms[i - 1] - g).max(0.0);
                self.pdf_terms.push(g);
                self.cdf_terms.push(p);
            }
        }
    }

    fn cdf_term(&mut self, k: usize) -> f64 {
        if self.x == 0.0 {
            return 0.0;
        }
        self.ensure(k);
        self.cdf_terms[k]
    }

    fn pdf_term(&mut self, k: usize) -> f64 {
        self.ensure(k);
        self.pdf_terms[k]
    }

    /// Non-central distribution function `G_α(x, y)`.
    ///
    /// Summed outward from the Poisson mode. Each direction stops once a
    /// geometric bound on its neglected Poisson mass (times the largest
    /// remaining `G`, which is at most 1) drops below `ε/2`.
    pub fn cdf(&mut self, y: f64, ctl: &SeriesControl) -> Result<f64> {
        check_noncentrality(y)?;
        if self.x == 0.0 {
            return Ok(0.0);
        }
        if y == 0.0 {
            return Ok(self.cdf_term(0));
        }
        let half_eps = 0.5 * ctl.epsilon;
        let ln_y = y.ln();
        let k0 = y.floor() as usize;
        let w0 = poisson_weight(k0, y, ln_y);
        let mut sum = w0 * self.cdf_term(k0);
        let mut terms = 1usize;

        // Upward: every later ratio w_{i+1}/w_i is at most y/(k+2) < 1.
        let (mut k, mut w) = (k0, w0);
        loop {
            let next_w = w * y / (k + 1) as f64;
            let q = y / (k + 2) as f64;
            let next_p = self.cdf_term(k + 1);
            let bound = next_p * next_w / (1.0 - q);
            if bound <= half_eps {
                break;
            }
            if terms >= ctl.max_terms {
                return Err(Error::Truncation { terms, bound });
            }
            k += 1;
            w = if k % REFRESH_EVERY == 0 { poisson_weight(k, y, ln_y) } else { next_w };
            sum += w * next_p;
            terms += 1;
        }

        // Downward: ratios w_{i-1}/w_i = i/y are at most (k-1)/y < 1.
        let (mut k, mut w) = (k0, w0);
        while k > 0 {
            let prev_w = w * k as f64 / y;
            let q = (k - 1) as f64 / y;
            let bound = prev_w / (1.0 - q);
            if bound <= half_eps {
                break;
            }
            if terms >= ctl.max_terms {
                return Err(Error::Truncation { terms, bound });
            }
            k -= 1;
            w = if k % REFRESH_EVERY == 0 { poisson_weight(k, y, ln_y) } else { prev_w };
            sum += w * self.cdf_term(k);
            terms += 1;
        }
        Ok(sum.clamp(0.0, 1.0))
    }

    /// Non-central density `g_α(x, y)`, `x > 0`.
    ///
    /// Term ratios `t_{k+1}/t_k = xy / ((k+1)(α+k))` are monotone in `k`, so
    /// once they fall below one in a direction the remaining terms are
    /// bounded by a geometric series.
    pub fn pdf(&mut self, y: f64, ctl: &SeriesControl) -> Result<f64> {
        check_noncentrality(y)?;
        if !(self.x > 0.0) {
            return Err(Error::InvalidInput("non-central density needs x > 0".into()));
        }
        if y == 0.0 {
            return Ok(self.pdf_term(0));
        }
        let half_eps = 0.5 * ctl.epsilon;
        let a = self.alpha;
        let xy = self.x * y;
        let ln_y = y.ln();
        let k0 = y.floor() as usize;
        let w0 = poisson_weight(k0, y, ln_y);
        let t0 = w0 * self.pdf_term(k0);
        let mut sum = t0;
        let mut terms = 1usize;

        let (mut k, mut w) = (k0, w0);
        let mut t = t0;
        loop {
            let next_w = w * y / (k + 1) as f64;
            let next_t = next_w * self.pdf_term(k + 1);
            let ratio = xy / ((k + 2) as f64 * (a + (k + 1) as f64));
            if ratio < 1.0 {
                let bound = next_t / (1.0 - ratio);
                if bound <= half_eps || (next_t == 0.0 && t == 0.0) {
                    break;
                }
            }
            if terms >= ctl.max_terms {
                return Err(Error::Truncation { terms, bound: next_t });
            }
            k += 1;
            w = if k % REFRESH_EVERY == 0 { poisson_weight(k, y, ln_y) } else { next_w };
            t = w * self.pdf_term(k);
            sum += t;
            terms += 1;
        }

        let (mut k, mut w) = (k0, w0);
        while k > 0 {
            let prev_w = w * k as f64 / y;
            let prev_t = prev_w * self.pdf_term(k - 1);
            // t_{i-1}/t_i = i (α+i-1) / (xy), decreasing as i decreases.
            let ratio = (k - 1) as f64 * (a + k as f64 - 2.0) / xy;
            if ratio < 1.0 {
                let bound = prev_t / (1.0 - ratio.max(0.0));
                if bound <= half_eps {
                    break;
                }
            }
            if terms >= ctl.max_terms {
                return Err(Error::Truncation { terms, bound: prev_t });
            }
            k -= 1;
            w = if k % REFRESH_EVERY == 0 { poisson_weight(k, y, ln_y) } else { prev_w };
            sum += w * self.pdf_term(k);
            terms += 1;
        }
        Ok(sum.max(0.0))
    }
}

fn check_noncentrality(y: f64) -> Result<()> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::InvalidInput(format!("non-centrality y must be finite and nonnegative, got {y}")));
    }
    Ok(())
}

fn poisson_weight(k: usize, y: f64, ln_y: f64) -> f64 {
    (-y + k as f64 * ln_y - ln_gamma(k as f64 + 1.0)).exp()
}

/// `g_α(x, y)`.
pub fn noncentral_gamma_pdf(alpha: ShapeParameter, x: f64, y: f64, ctl: &SeriesControl) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidInput(format!("non-central density needs x > 0, got {x}")));
    }
    NoncentralKernel::new(alpha, x)?.pdf(y, ctl)
}

/// `G_α(x, y)`.
pub fn noncentral_gamma_cdf(alpha: ShapeParameter, x: f64, y: f64, ctl: &SeriesControl) -> Result<f64> {
    NoncentralKernel::new(alpha, x)?.cdf(y, ctl)
}

/// Laplace transform of the non-central gamma law:
/// `(1 + t)^{-α} exp(-y t / (1 + t))`.
pub fn noncentral_gamma_lt(alpha: ShapeParameter, t: f64, y: f64) -> Result<f64> {
    if !(t >= 0.0) || !(y >= 0.0) {
        return Err(Error::InvalidInput(format!("Laplace transform needs t, y >= 0, got t = {t}, y = {y}")));
    }
    Ok((-alpha.alpha * t.ln_1p() - y * t / (1.0 + t)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(a: f64) -> ShapeParameter {
        ShapeParameter::new(a).unwrap()
    }

    #[test]
    fn shape_flags() {
        assert!(shape(0.5).two_alpha_integer());
        assert!(shape(1.5).two_alpha_integer());
        assert!(!shape(1.3).two_alpha_integer());
        assert_eq!(shape(1.5).degrees_of_freedom(), 3.0);
        assert!(ShapeParameter::new(0.0).is_err());
        assert!(ShapeParameter::new(f64::NAN).is_err());
    }

    #[test]
    fn central_pdf_values() {
        assert!((gamma_pdf(shape(1.0), 2f64.ln()).unwrap() - 0.5).abs() < 1e-15);
        assert!((gamma_pdf(shape(2.0), 1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!(gamma_pdf(shape(2.0), 0.0).is_err());
        assert!(gamma_pdf(shape(2.0), -1.0).is_err());
    }

    #[test]
    fn central_cdf_values() {
        assert_eq!(gamma_cdf(shape(2.0), 0.0), 0.0);
        assert!((gamma_cdf(shape(1.0), 2f64.ln()) - 0.5).abs() < 1e-15);
        // Both branches against the closed form for integer shape 3.
        for &x in &[0.5, 2.0, 3.9, 4.1, 12.0, 40.0] {
            let closed = 1.0 - (-x as f64).exp() * (1.0 + x + x * x / 2.0);
            assert!((gamma_cdf(shape(3.0), x) - closed).abs() < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn central_cdf_matches_statrs() {
        for &a in &[0.3, 0.5, 1.7, 2.5, 10.0, 55.5] {
            for &x in &[0.01, 0.4, 1.0, 2.5, 7.0, 30.0, 80.0] {
                let expected = statrs::function::gamma::gamma_lr(a, x);
                let got = regularized_lower_gamma(a, x);
                assert!((got - expected).abs() < 1e-13, "a = {a}, x = {x}: {got} vs {expected}");
            }
        }
    }

    #[test]
    fn noncentral_reduces_to_central() {
        let ctl = SeriesControl::default();
        for &a in &[0.5, 1.0, 3.2] {
            for &x in &[0.2, 1.0, 5.0] {
                let p = noncentral_gamma_pdf(shape(a), x, 0.0, &ctl).unwrap();
                assert!((p - gamma_pdf(shape(a), x).unwrap()).abs() < 1e-15);
                let c = noncentral_gamma_cdf(shape(a), x, 0.0, &ctl).unwrap();
                assert!((c - gamma_cdf(shape(a), x)).abs() < 1e-15);
            }
        }
        assert_eq!(noncentral_gamma_cdf(shape(1.0), 0.0, 3.0, &ctl).unwrap(), 0.0);
    }

    #[test]
    fn noncentral_cdf_exponential_shift() {
        // α = 1: brute-force long series with direct incomplete-gamma terms.
        let ctl = SeriesControl::default();
        let (x, y) = (3.0, 5.0);
        let mut brute = 0.0;
        let mut w = (-y as f64).exp();
        for k in 0..200 {
            brute += w * regularized_lower_gamma(1.0 + k as f64, x);
            w *= y / (k + 1) as f64;
        }
        let got = noncentral_gamma_cdf(shape(1.0), x, y, &ctl).unwrap();
        assert!((got - brute).abs() < 1e-12);
    }

    #[test]
    fn large_noncentrality_is_stable() {
        let ctl = SeriesControl::default();
        // Mean of the mixture is α + y; the cdf at the mean is near one half.
        let c = noncentral_gamma_cdf(shape(2.0), 902.0, 900.0, &ctl).unwrap();
        assert!(c > 0.4 && c < 0.6, "{c}");
        let p = noncentral_gamma_pdf(shape(2.0), 902.0, 900.0, &ctl).unwrap();
        assert!(p > 0.0 && p.is_finite());
    }

    #[test]
    fn truncation_cap_reported() {
        let ctl = SeriesControl::new(1e-12, 3).unwrap();
        assert!(matches!(
            noncentral_gamma_cdf(shape(1.0), 10.0, 50.0, &ctl),
            Err(Error::Truncation { .. })
        ));
        assert!(SeriesControl::new(0.0, 10).is_err());
        assert!(SeriesControl::new(1e-3, 0).is_err());
    }

    #[test]
    fn laplace_transform_closed_form() {
        assert_eq!(noncentral_gamma_lt(shape(1.5), 0.0, 2.0).unwrap(), 1.0);
        let v = noncentral_gamma_lt(shape(1.5), 0.7, 0.0).unwrap();
        assert!((v - 1.7f64.powf(-1.5)).abs() < 1e-15);
        assert!(noncentral_gamma_lt(shape(1.5), -0.1, 0.0).is_err());
    }

    #[test]
    fn kernel_reuse_matches_fresh_evaluation() {
        let ctl = SeriesControl::default();
        let mut kernel = NoncentralKernel::new(shape(0.5), 1.3).unwrap();
        for &y in &[0.0, 0.1, 4.0, 150.0, 2.0, 0.0] {
            let fresh = noncentral_gamma_cdf(shape(0.5), 1.3, y, &ctl).unwrap();
            assert_eq!(kernel.cdf(y, &ctl).unwrap(), fresh);
        }
    }
}
