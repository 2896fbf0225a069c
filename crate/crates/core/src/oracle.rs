//! Independent ground truth for integer `ν = 2α`.
//!
//! `X_j = ½ Σ_{k≤ν} Z_{kj}²` with `Z_k ~ N(0, R)` i.i.d. is `Γₙ(ν/2, R)`:
//! the diagonal of a `W_n(ν, R)` matrix has transform `|I + 2RT|^{-ν/2}`, and
//! halving it gives `|I + RT|^{-ν/2}`. Nothing here touches the Wishart
//! expectation machinery in [`crate::dist`].

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::CorrelationMatrix;
use crate::mc::{estimate, McEstimate};
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub struct OracleParams {
    nu: usize,
    r: CorrelationMatrix,
    chol: DMatrix<f64>,
}

impl OracleParams {
    pub fn new(nu: usize, r: CorrelationMatrix) -> Result<Self> {
        if nu == 0 {
            return Err(Error::InvalidInput("oracle needs integer degrees of freedom 2α >= 1".into()));
        }
        let chol = r
            .matrix()
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite { min_eigenvalue: f64::NAN })?
            .l();
        Ok(Self { nu, r, chol })
    }

    /// From a shape `α` with `2α` integral.
    pub fn from_alpha(alpha: f64, r: CorrelationMatrix) -> Result<Self> {
        let two = 2.0 * alpha;
        if !(two >= 1.0) || (two - two.round()).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "the Gaussian oracle needs 2α ∈ ℕ, got 2α = {two}"
            )));
        }
        Self::new(two.round() as usize, r)
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn dim(&self) -> usize {
        self.r.dim()
    }

    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }
}

fn fill_sample<R: Rng + ?Sized>(p: &OracleParams, rng: &mut R, z: &mut [f64], out: &mut [f64]) {
    let n = p.dim();
    out.iter_mut().for_each(|v| *v = 0.0);
    for _ in 0..p.nu {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for i in 0..n {
            let mut w = 0.0;
            for k in 0..=i {
                w += p.chol[(i, k)] * z[k];
            }
            out[i] += 0.5 * w * w;
        }
    }
}

/// One draw of `X`.
pub fn sample_vector<R: Rng + ?Sized>(p: &OracleParams, rng: &mut R) -> Vec<f64> {
    let n = p.dim();
    let mut z = vec![0.0; n];
    let mut out = vec![0.0; n];
    fill_sample(p, rng, &mut z, &mut out);
    out
}

fn check(values: &[f64], n: usize, what: &str, strict: bool) -> Result<()> {
    if values.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: values.len() });
    }
    let ok = values.iter().all(|&v| if strict { v > 0.0 } else { v >= 0.0 });
    if !ok {
        return Err(Error::InvalidInput(format!("{what} out of range")));
    }
    Ok(())
}

/// Fraction of draws with `X_j ≤ x_j` for every `j`.
pub fn cdf_oracle(p: &OracleParams, x: &[f64], samples: usize, stream: RngStream) -> Result<McEstimate> {
    let n = p.dim();
    check(x, n, "x must be positive", true)?;
    estimate(
        samples,
        stream,
        || (vec![0.0; n], vec![0.0; n]),
        |(z, out), rng| {
            fill_sample(p, rng, z, out);
            Ok(if out.iter().zip(x).all(|(v, b)| v <= b) { 1.0 } else { 0.0 })
        },
    )
}

/// Mean of `exp(−Σ t_j X_j)`.
pub fn lt_oracle(p: &OracleParams, t: &[f64], samples: usize, stream: RngStream) -> Result<McEstimate> {
    let n = p.dim();
    check(t, n, "t must be nonnegative", false)?;
    estimate(
        samples,
        stream,
        || (vec![0.0; n], vec![0.0; n]),
        |(z, out), rng| {
            fill_sample(p, rng, z, out);
            let s: f64 = out.iter().zip(t).map(|(v, w)| v * w).sum();
            Ok((-s).exp())
        },
    )
}
