//! Oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::cell::Cell;

use mvgamma::special::gamma_cdf;
use mvgamma::ShapeParameter;
use statrs::function::gamma::ln_gamma;

/// Tanh-sinh quadrature on `[a, b]`. Returns `(value, error estimate)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> (f64, f64) {
    integrate_tol(f, a, b, 1e-14)
}

pub fn integrate_tol<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let out = quadrature::integrate(f, a, b, tol);
    (out.integral, out.error_estimate)
}

/// `∫₀^upper f` over dyadic pieces `[0,1], [1,2], [2,4], …`, so mass far from
/// the origin still meets enough nodes. The first piece is taken in `u = v²`
/// to tame `u^{-1/2}`-type endpoints.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, upper: f64) -> (f64, f64) {
    let first = upper.min(1.0);
    let (mut total, mut err) = integrate(|v| 2.0 * v * f(v * v), 0.0, first.sqrt());
    let mut lo = 1.0;
    while lo < upper {
        let hi = (2.0 * lo).min(upper);
        let (v, e) = integrate(&f, lo, hi);
        total += v;
        err += e;
        lo = hi;
    }
    (total, err)
}

/// `∫∫` over `[a0, a1] × [b0, b1]` by nested quadrature.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(f: F, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    integrate_2d_tol(f, a, b, 1e-14)
}

pub fn integrate_2d_tol<F: Fn(f64, f64) -> f64>(f: F, a: (f64, f64), b: (f64, f64), tol: f64) -> (f64, f64) {
    let inner_err = Cell::new(0.0f64);
    let (v, e) = integrate_tol(
        |u| {
            let (w, e) = integrate_tol(|v| f(u, v), b.0, b.1, tol);
            inner_err.set(inner_err.get().max(e));
            w
        },
        a.0,
        a.1,
        tol,
    );
    (v, e + inner_err.get() * (a.1 - a.0))
}

/// Central chi-square density with `k` degrees of freedom.
pub fn chi_square_pdf(k: f64, u: f64) -> f64 {
    let h = 0.5 * k;
    ((h - 1.0) * u.ln() - 0.5 * u - h * std::f64::consts::LN_2 - ln_gamma(h)).exp()
}

/// Noncentral chi-square density from the textbook Poisson series
/// `Σ_i e^{-λ/2} (λ/2)^i / i! · f_{k+2i}(u)`, summed from `i = 0`.
pub fn noncentral_chi_square_pdf(k: f64, lambda: f64, u: f64) -> f64 {
    let half = 0.5 * lambda;
    let mut sum = 0.0;
    for i in 0..400 {
        let fi = i as f64;
        let w = (-half + fi * half.ln() - ln_gamma(fi + 1.0)).exp();
        sum += w * chi_square_pdf(k + 2.0 * fi, u);
    }
    sum
}

/// Bivariate standard normal density with correlation `rho`.
pub fn bivariate_normal_pdf(rho: f64, u: f64, v: f64) -> f64 {
    let q = 1.0 - rho * rho;
    (-(u * u - 2.0 * rho * u * v + v * v) / (2.0 * q)).exp() / (2.0 * std::f64::consts::PI * q.sqrt())
}

/// `P(|Z₁| ≤ a, |Z₂| ≤ a)` for a standard bivariate normal pair.
pub fn bivariate_normal_box(rho: f64, a: f64) -> (f64, f64) {
    integrate_2d(|u, v| bivariate_normal_pdf(rho, u, v), (-a, a), (-a, a))
}

/// Quantile of the central gamma law by bisection.
pub fn gamma_quantile(alpha: f64, p: f64) -> f64 {
    let shape = ShapeParameter::new(alpha).unwrap();
    let (mut lo, mut hi) = (0.0, 1.0);
    while gamma_cdf(shape, hi) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_cdf(shape, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Kolmogorov–Smirnov distance between a sample and a continuous cdf.
pub fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// `|a − b| / max(|b|, tiny)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Writes the matrices used by [`cli_cases`] into `dir`.
pub fn write_cli_fixtures(dir: &std::path::Path) {
    use mvgamma::matrix::random_correlation;
    use mvgamma::CorrelationMatrix;
    std::fs::write(dir.join("biv.json"), CorrelationMatrix::bivariate(0.5).unwrap().to_json()).unwrap();
    std::fs::write(dir.join("id2.json"), CorrelationMatrix::identity(2).to_json()).unwrap();
    std::fs::write(dir.join("r4.csv"), random_correlation(4, 7, 0.1).unwrap().to_csv()).unwrap();
}

/// One invocation per command, with small sample counts.
pub fn cli_cases(dir: &std::path::Path) -> Vec<Vec<String>> {
    let biv = dir.join("biv.json").display().to_string();
    let id2 = dir.join("id2.json").display().to_string();
    let r4 = dir.join("r4.csv").display().to_string();
    let cases: Vec<Vec<&str>> = vec![
        vec!["lt", "--alpha", "1.5", "--matrix", &r4, "--t", "0.5,1,0.2,2"],
        vec!["cdf", "--alpha", "1.5", "--matrix", &r4, "--x", "1,1,1,1", "--samples", "20000"],
        vec!["pdf", "--alpha", "1", "--matrix", &biv, "--x", "0.8,1.2", "--samples", "20000"],
        vec!["oracle-cdf", "--alpha", "1", "--matrix", &r4, "--x", "1,1,1,1", "--samples", "20000"],
        vec!["oracle-lt", "--alpha", "0.5", "--matrix", &biv, "--t", "1,1", "--samples", "20000"],
        vec!["gci-check", "--alpha", "0.5", "--matrix", &id2, "--x", "1,1", "--n1", "1", "--samples", "20000"],
        vec![
            "gci-check", "--alpha", "1", "--matrix", &r4, "--x", "1,1,1,1", "--n1", "2", "--samples", "10000",
            "--tau-checks",
        ],
        vec![
            "gci-derivative", "--alpha", "0.5", "--matrix", &biv, "--x", "1,1", "--n1", "1", "--tau", "0.25,0.5",
            "--samples", "20000",
        ],
        vec!["coeffs", "--alpha", "1", "--matrix", &r4, "--n1", "2"],
        vec!["coeffs", "--alpha", "1", "--matrix", &r4, "--n1", "1", "--tau", "0.1,0.9", "--format", "csv"],
        vec!["averaged-corr", "--matrix", &r4, "--n1", "2"],
        vec!["gen-matrix", "--n", "5", "--seed", "3"],
        vec!["gen-matrix", "--n", "3", "--seed", "3", "--min-eig-floor", "0.2", "--format", "csv"],
    ];
    cases.into_iter().map(|c| c.into_iter().map(String::from).collect()).collect()
}
