use mvgamma::matrix::{positive_count, sym_eigen};
use mvgamma::wishart::{chi_square_sample, half_quadratic_form, sample_wishart, Regime, WishartSpec};
use mvgamma::{Error, RngStream};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

/// Entrywise means and standard errors of `draws` Wishart samples.
fn moments(spec: &WishartSpec, draws: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = spec.dim();
    let mut rng = RngStream::new(seed, 0).generator();
    let mut sum = DMatrix::zeros(m, m);
    let mut sq = DMatrix::zeros(m, m);
    for _ in 0..draws {
        let s = sample_wishart(spec, &mut rng);
        sq += s.component_mul(&s);
        sum += s;
    }
    let n = draws as f64;
    let mean = &sum / n;
    let var = (&sq / n - mean.component_mul(&mean)) * (n / (n - 1.0));
    (mean, var.map(|v| (v / n).sqrt()))
}

#[test]
fn first_moment_is_dof_times_identity() {
    for (k, &(m, nu)) in [(2usize, 1.0f64), (2, 3.5), (4, 5.0)].iter().enumerate() {
        let spec = WishartSpec::new(m, nu).unwrap();
        let (mean, se) = moments(&spec, 100_000, 300 + k as u64);
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { nu } else { 0.0 };
                assert!(
                    (mean[(i, j)] - target).abs() < 3.0 * se[(i, j)],
                    "(m, nu) = ({m}, {nu}) entry ({i}, {j}): {} vs {target}, se {}",
                    mean[(i, j)],
                    se[(i, j)]
                );
            }
        }
    }
}

#[test]
fn one_dimensional_is_chi_square() {
    let spec = WishartSpec::new(1, 2.0).unwrap();
    let (mean, se) = moments(&spec, 100_000, 5);
    assert!((mean[(0, 0)] - 2.0).abs() < 3.0 * se[(0, 0)]);
}

#[test]
fn regimes_agree_on_diagonal_moments() {
    let bart = WishartSpec::with_regime(3, 4.0, Regime::Bartlett).unwrap();
    let outer = WishartSpec::with_regime(3, 4.0, Regime::OuterSum).unwrap();
    let n = 100_000usize;
    let stats = |spec: &WishartSpec, seed: u64| {
        let mut rng = RngStream::new(seed, 0).generator();
        let mut d: Vec<Vec<f64>> = vec![Vec::with_capacity(n); 3];
        for _ in 0..n {
            let s = sample_wishart(spec, &mut rng);
            for i in 0..3 {
                d[i].push(s[(i, i)]);
            }
        }
        d
    };
    let a = stats(&bart, 1);
    let b = stats(&outer, 2);
    let nf = n as f64;
    for i in 0..3 {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / nf;
        let (ma, mb) = (mean(&a[i]), mean(&b[i]));
        let var = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (nf - 1.0);
        let (va, vb) = (var(&a[i], ma), var(&b[i], mb));
        assert!((ma - mb).abs() < 3.0 * ((va + vb) / nf).sqrt());
        // Var of a sample variance: (μ₄ − σ⁴)/n for χ²(4): μ₄ = 384, σ² = 8.
        let se_var = ((384.0 - 64.0) / nf).sqrt();
        assert!((va - vb).abs() < 3.0 * se_var * 2f64.sqrt(), "{va} vs {vb}");
    }
}

#[test]
fn outer_sum_rank() {
    let mut rng = RngStream::new(8, 0).generator();
    for &(m, nu) in &[(4usize, 1.0f64), (4, 2.0), (4, 3.0), (3, 5.0)] {
        let spec = WishartSpec::with_regime(m, nu, Regime::OuterSum).unwrap();
        for _ in 0..20 {
            let s = sample_wishart(&spec, &mut rng);
            let e = sym_eigen(&s).unwrap();
            assert_eq!(positive_count(e.values.as_slice()), m.min(nu as usize));
        }
    }
}

#[test]
fn admissibility_error() {
    let err = WishartSpec::new(4, 1.5).unwrap_err();
    assert!(matches!(err, Error::Admissibility { .. }));
    assert!(err.to_string().contains("2α ∈ ℕ or 2α > n−2"));
    assert_eq!(WishartSpec::new(4, 1.0).unwrap().regime(), Regime::OuterSum);
    assert_eq!(WishartSpec::new(4, 3.5).unwrap().regime(), Regime::Bartlett);
    assert_eq!(WishartSpec::new(4, 5.0).unwrap().regime(), Regime::Bartlett);
}

#[test]
fn chi_square_means() {
    for &(dof, seed) in &[(2.0, 1u64), (0.5, 2), (0.05, 3), (7.3, 4)] {
        let mut rng = RngStream::new(seed, 0).generator();
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| chi_square_sample(dof, &mut rng)).collect();
        assert!(xs.iter().all(|&x| x >= 0.0));
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = (2.0 * dof / n as f64).sqrt();
        assert!((mean - dof).abs() < 3.0 * se, "dof {dof}: mean {mean}");
    }
    let a = chi_square_sample(3.0, &mut RngStream::new(1, 4).generator());
    let b = chi_square_sample(3.0, &mut RngStream::new(1, 4).generator());
    assert_eq!(a, b);
}

#[test]
fn sample_paths_are_reproducible() {
    let spec = WishartSpec::new(3, 2.5).unwrap();
    let mut r1 = RngStream::new(17, 3).generator();
    let mut r2 = RngStream::new(17, 3).generator();
    for _ in 0..10 {
        assert_eq!(sample_wishart(&spec, &mut r1), sample_wishart(&spec, &mut r2));
    }
}

#[test]
fn quadratic_form_examples() {
    let s = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
    assert_eq!(half_quadratic_form(&[0.0, 0.0], &s).unwrap(), 0.0);
    assert_eq!(half_quadratic_form(&[1.0, 0.0], &s).unwrap(), 2.0);
    assert!(half_quadratic_form(&[1.0], &s).is_err());
}

proptest! {
    #[test]
    fn quadratic_form_matches_double_loop(m in 1usize..6, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0).generator();
        let spec = WishartSpec::new(m, m as f64 + 0.5).unwrap();
        let s = sample_wishart(&spec, &mut rng);
        let b: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let mut naive = 0.0;
        for i in 0..m {
            for j in 0..m {
                naive += b[i] * s[(i, j)] * b[j];
            }
        }
        naive *= 0.5;
        let v = half_quadratic_form(&b, &s).unwrap();
        prop_assert!((v - naive).abs() < 1e-12 * (1.0 + naive.abs()));
    }
}
