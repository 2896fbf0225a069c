//! Identity-scale Wishart and pseudo-Wishart sampling.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `S = LLᵀ`, chi-square diagonal and normal strict lower triangle.
    Bartlett,
    /// `S = Σ_{k≤ν} z_k z_kᵀ` for integer `ν`.
    OuterSum,
}

/// `W_m(ν, I_m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WishartSpec {
    dim: usize,
    dof: f64,
    regime: Regime,
}

impl WishartSpec {
    /// Picks Bartlett when `ν > m − 1`, otherwise the outer-product sum for
    /// integer `ν`.
    pub fn new(dim: usize, dof: f64) -> Result<Self> {
        if !(dof > 0.0) || !dof.is_finite() {
            return Err(Error::InvalidInput(format!("degrees of freedom must be positive, got {dof}")));
        }
        let integer = (dof - dof.round()).abs() <= 1e-12;
        let regime = if dof > dim as f64 - 1.0 {
            Regime::Bartlett
        } else if integer {
            Regime::OuterSum
        } else {
            // Dimension m = n - 1 of the multivariate gamma representation.
            return Err(Error::Admissibility {
                alpha: dof / 2.0,
                n: dim + 1,
                two_alpha: dof,
            });
        };
        let dof = if integer { dof.round() } else { dof };
        Ok(Self { dim, dof, regime })
    }

    /// Explicit regime choice; fails when the regime does not apply.
    pub fn with_regime(dim: usize, dof: f64, regime: Regime) -> Result<Self> {
        let mut spec = Self::new(dim, dof)?;
        let ok = match regime {
            Regime::Bartlett => dof > dim as f64 - 1.0,
            Regime::OuterSum => (dof - dof.round()).abs() <= 1e-12,
        };
        if !ok {
            return Err(Error::InvalidInput(format!("regime {regime:?} does not apply to W_{dim}({dof}, I)")));
        }
        spec.regime = regime;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Number of columns of the factor returned by [`sample_factor`].
    pub fn factor_cols(&self) -> usize {
        match self.regime {
            Regime::Bartlett => self.dim,
            Regime::OuterSum => self.dof as usize,
        }
    }
}

/// `χ²(dof)` as `Gamma(dof/2, scale 2)`.
pub fn chi_square_sample<R: Rng + ?Sized>(dof: f64, rng: &mut R) -> f64 {
    Gamma::new(0.5 * dof, 2.0)
        .expect("positive degrees of freedom")
        .sample(rng)
}

/// Fills `factor` (row-major `dim x factor_cols`) with `F` such that
/// `S = FFᵀ` is a draw from the spec.
pub fn sample_factor<R: Rng + ?Sized>(spec: &WishartSpec, rng: &mut R, factor: &mut [f64]) {
    let m = spec.dim;
    let cols = spec.factor_cols();
    debug_assert_eq!(factor.len(), m * cols);
    match spec.regime {
        Regime::Bartlett => {
            for i in 0..m {
                for j in 0..m {
                    factor[i * m + j] = match j.cmp(&i) {
                        std::cmp::Ordering::Less => rng.sample(StandardNormal),
                        std::cmp::Ordering::Equal => chi_square_sample(spec.dof - i as f64, rng).sqrt(),
                        std::cmp::Ordering::Greater => 0.0,
                    };
                }
            }
        }
        Regime::OuterSum => {
            // Column k is z_k.
            for k in 0..cols {
                for i in 0..m {
                    factor[i * cols + k] = rng.sample(StandardNormal);
                }
            }
        }
    }
}

pub fn sample_wishart<R: Rng + ?Sized>(spec: &WishartSpec, rng: &mut R) -> DMatrix<f64> {
    let cols = spec.factor_cols();
    let mut buf = vec![0.0; spec.dim * cols];
    sample_factor(spec, rng, &mut buf);
    let f = DMatrix::from_row_slice(spec.dim, cols, &buf);
    &f * f.transpose()
}

/// `½ b S bᵀ`.
pub fn half_quadratic_form(b: &[f64], s: &DMatrix<f64>) -> Result<f64> {
    let m = b.len();
    if s.nrows() != m || s.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: s.nrows(),
        });
    }
    if b.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        for j in 0..m {
            row += s[(i, j)] * b[j];
        }
        acc += b[i] * row;
    }
    Ok((0.5 * acc).max(0.0))
}

/// `½ b F Fᵀ bᵀ = ½ ‖bF‖²` for a row-major factor.
pub(crate) fn half_quadratic_form_factor(b: &[f64], factor: &[f64], cols: usize) -> f64 {
    let mut acc = 0.0;
    for k in 0..cols {
        let mut dot = 0.0;
        for (i, &bi) in b.iter().enumerate() {
            dot += bi * factor[i * cols + k];
        }
        acc += dot * dot;
    }
    0.5 * acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{positive_count, sym_eigen};
    use crate::rng::RngStream;

    #[test]
    fn regime_selection() {
        assert_eq!(WishartSpec::new(3, 3.5).unwrap().regime(), Regime::Bartlett);
        assert_eq!(WishartSpec::new(3, 2.5).unwrap().regime(), Regime::Bartlett);
        assert_eq!(WishartSpec::new(3, 1.0).unwrap().regime(), Regime::OuterSum);
        assert_eq!(WishartSpec::new(9, 1.0).unwrap().regime(), Regime::OuterSum);
        assert!(matches!(WishartSpec::new(4, 1.4), Err(Error::Admissibility { .. })));
        assert!(WishartSpec::with_regime(3, 1.0, Regime::Bartlett).is_err());
        assert!(WishartSpec::with_regime(3, 3.5, Regime::OuterSum).is_err());
        assert_eq!(
            WishartSpec::with_regime(3, 4.0, Regime::OuterSum).unwrap().regime(),
            Regime::OuterSum
        );
    }

    #[test]
    fn one_dimensional_is_chi_square() {
        let spec = WishartSpec::new(1, 2.0).unwrap();
        let mut rng = RngStream::new(3, 0).generator();
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_wishart(&spec, &mut rng)[(0, 0)]).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        // χ²(2) has variance 4.
        assert!((mean - 2.0).abs() < 3.0 * (4.0 / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn chi_square_means() {
        let n = 100_000;
        for &dof in &[2.0, 0.5] {
            let mut rng = RngStream::new(8, 1).generator();
            let mean = (0..n).map(|_| chi_square_sample(dof, &mut rng)).sum::<f64>() / n as f64;
            let se = (2.0 * dof / n as f64).sqrt();
            assert!((mean - dof).abs() < 3.0 * se, "dof {dof}: {mean}");
        }
        let a = chi_square_sample(3.0, &mut RngStream::new(1, 1).generator());
        let b = chi_square_sample(3.0, &mut RngStream::new(1, 1).generator());
        assert_eq!(a, b);
    }

    #[test]
    fn outer_sum_rank() {
        let spec = WishartSpec::new(4, 2.0).unwrap();
        let mut rng = RngStream::new(5, 0).generator();
        for _ in 0..20 {
            let s = sample_wishart(&spec, &mut rng);
            let values: Vec<f64> = sym_eigen(&s).unwrap().values.iter().copied().collect();
            assert_eq!(positive_count(&values), 2);
        }
    }

    #[test]
    fn bartlett_and_outer_sum_agree() {
        let n = 100_000;
        let stats = |regime: Regime, seed: u64| {
            let spec = WishartSpec::with_regime(3, 4.0, regime).unwrap();
            let mut rng = RngStream::new(seed, 0).generator();
            let mut sum = [0.0; 3];
            let mut sq = [0.0; 3];
            for _ in 0..n {
                let s = sample_wishart(&spec, &mut rng);
                for i in 0..3 {
                    sum[i] += s[(i, i)];
                    sq[i] += s[(i, i)] * s[(i, i)];
                }
            }
            let mean: Vec<f64> = sum.iter().map(|v| v / n as f64).collect();
            let var: Vec<f64> = (0..3).map(|i| sq[i] / n as f64 - mean[i] * mean[i]).collect();
            (mean, var)
        };
        let (mb, vb) = stats(Regime::Bartlett, 1);
        let (mo, vo) = stats(Regime::OuterSum, 2);
        for i in 0..3 {
            // Diagonal entries are χ²(4): σ² = 8, μ₄ = 12·4·8 = 384.
            let se_mean = (2.0 * 8.0 / n as f64).sqrt();
            assert!((mb[i] - mo[i]).abs() < 3.0 * se_mean, "mean {i}: {} vs {}", mb[i], mo[i]);
            let se_var = (2.0 * (384.0 - 64.0) / n as f64).sqrt();
            assert!((vb[i] - vo[i]).abs() < 3.0 * se_var, "var {i}: {} vs {}", vb[i], vo[i]);
        }
    }

    #[test]
    fn half_quadratic_form_cases() {
        let s = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        assert_eq!(half_quadratic_form(&[0.0, 0.0], &s).unwrap(), 0.0);
        assert_eq!(half_quadratic_form(&[1.0, 0.0], &s).unwrap(), 2.0);
        assert!(half_quadratic_form(&[1.0], &s).is_err());
    }

    #[test]
    fn factor_form_matches_matrix_form() {
        let spec = WishartSpec::new(3, 2.0).unwrap();
        let mut rng = RngStream::new(4, 0).generator();
        let mut f = vec![0.0; 3 * spec.factor_cols()];
        sample_factor(&spec, &mut rng, &mut f);
        let fm = DMatrix::from_row_slice(3, spec.factor_cols(), &f);
        let s = &fm * fm.transpose();
        let b = [0.3, -1.2, 0.7];
        let direct = half_quadratic_form(&b, &s).unwrap();
        let via = half_quadratic_form_factor(&b, &f, spec.factor_cols());
        assert!((direct - via).abs() < 1e-12);
    }
}
