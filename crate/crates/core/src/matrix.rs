//! Small dense symmetric linear algebra on correlation matrices.
//!
//! Indices are 0-based throughout the library; reports print them 1-based.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Largest dimension for which 2ⁿ subset enumeration is attempted.
pub const MAX_ENUMERATION_DIM: usize = 20;

/// Relative rank tolerance: an eigenvalue is positive iff it exceeds this
/// multiple of the largest eigenvalue of the same matrix.
pub const RANK_TOL: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-12;
const MIN_LAMBDA: f64 = 1e-12;

/// A symmetric positive-definite matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    entries: DMatrix<f64>,
}

impl CorrelationMatrix {
    /// Validates and symmetrizes `m`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(Error::NotCorrelation(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotCorrelation("entries must be finite".into()));
        }
        let mut max_asymmetry = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                max_asymmetry = max_asymmetry.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if max_asymmetry > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { max_asymmetry });
        }
        let mut entries = (&m + m.transpose()) * 0.5;
        for i in 0..n {
            if (entries[(i, i)] - 1.0).abs() > SYMMETRY_TOL {
                return Err(Error::NotCorrelation(format!(
                    "diagonal entry {} is {}, expected 1",
                    i + 1,
                    entries[(i, i)]
                )));
            }
            entries[(i, i)] = 1.0;
            for j in 0..i {
                let v = entries[(i, j)];
                if v <= -1.0 || v >= 1.0 {
                    return Err(Error::NotCorrelation(format!(
                        "entry ({}, {}) = {} is outside (-1, 1)",
                        i + 1,
                        j + 1,
                        v
                    )));
                }
            }
        }
        let eig = sym_eigen(&entries)?;
        let min_eigenvalue = eig.values[n - 1];
        if min_eigenvalue <= 0.0 {
            return Err(Error::NotPositiveDefinite { min_eigenvalue });
        }
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "dimension must be at least 1");
        Self {
            entries: DMatrix::identity(n, n),
        }
    }

    /// Bivariate matrix `[[1, rho], [rho, 1]]`.
    pub fn bivariate(rho: f64) -> Result<Self> {
        Self::from_rows(&[vec![1.0, rho], vec![rho, 1.0]])
    }

    /// All off-diagonal entries equal to `rho`.
    pub fn equicorrelated(n: usize, rho: f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rho }))
    }

    /// Construction from entries already known to satisfy every invariant
    /// (principal submatrices, path interpolants).
    pub(crate) fn from_trusted(entries: DMatrix<f64>) -> Self {
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// Principal submatrix on `idx`; itself a correlation matrix.
    pub fn principal(&self, idx: &[usize]) -> CorrelationMatrix {
        Self::from_trusted(principal_submatrix(&self.entries, idx))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let eig = sym_eigen(&self.entries)?;
        Ok(eig.values[self.dim() - 1])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MatrixFile {
            n: self.dim(),
            rows: self.rows(),
        })
        .expect("matrix serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MatrixFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "matrix JSON".into(),
            message: e.to_string(),
        })?;
        if file.rows.len() != file.n {
            return Err(Error::DimensionMismatch {
                expected: file.n,
                found: file.rows.len(),
            });
        }
        Self::from_rows(&file.rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|e| Error::Parse {
                        what: format!("matrix CSV line {}", line_no + 1),
                        message: format!("{:?}: {}", cell.trim(), e),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    /// Reads JSON or CSV, chosen by extension and falling back to sniffing.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let is_json = match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => true,
            Some(ext) if ext.eq_ignore_ascii_case("csv") => false,
            _ => text.trim_start().starts_with('{'),
        };
        if is_json {
            Self::from_json(&text)
        } else {
            Self::from_csv(&text)
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixFile {
    n: usize,
    rows: Vec<Vec<f64>>,
}

/// Eigenvalues in descending order with matching orthonormal columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition. Each eigenvector is signed so that its
/// largest-magnitude component (lowest index on ties) is positive.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<SymEigen> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    if n == 0 {
        return Ok(SymEigen {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 1000 * n.max(10)).ok_or_else(|| {
        Error::EigenNoConvergence {
            rows: n,
            cols: n,
            matrix: format!("{:?}", m.as_slice()),
        }
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let mut pivot = 0;
        for i in 1..n {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(col, &(v * sign));
    }
    Ok(SymEigen { values, vectors })
}

/// Number of eigenvalues above [`RANK_TOL`] times the largest one.
pub fn positive_count(values: &[f64]) -> usize {
    let max = values.iter().copied().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return 0;
    }
    values.iter().filter(|&&v| v > RANK_TOL * max).count()
}

/// Determinant by partially pivoted LU; 0 for singular input, 1 for 0x0.
pub fn det(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    m.clone().lu().determinant()
}

pub fn principal_submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

pub fn block(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])])
}

/// Expands `|I + R diag(t)|` as `1 + Σ_J |R_J| Π_{j∈J} t_j` over every
/// nonempty subset `J`.
pub fn principal_minor_expansion(r: &CorrelationMatrix, t: &[f64]) -> Result<f64> {
    let n = r.dim();
    if t.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: t.len(),
        });
    }
    if t.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidInput("t must be componentwise nonnegative".into()));
    }
    if n > MAX_ENUMERATION_DIM {
        return Err(Error::TooLarge {
            n,
            max: MAX_ENUMERATION_DIM,
        });
    }
    let mut total = 1.0;
    let mut idx = Vec::with_capacity(n);
    for mask in 1u32..(1u32 << n) {
        idx.clear();
        idx.extend((0..n).filter(|&i| mask & (1 << i) != 0));
        let weight: f64 = idx.iter().map(|&i| t[i]).product();
        if weight == 0.0 {
            continue;
        }
        total += det(&principal_submatrix(r.matrix(), &idx)) * weight;
    }
    Ok(total)
}

/// `R = λ(I + BBᵀ)` with `λ` the minimal eigenvalue of `R`.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub lambda: f64,
    /// n x (n-1); row `j` is `b_j`. Columns beyond `rank_a` are zero.
    pub b: DMatrix<f64>,
    pub rank_a: usize,
}

impl SpectralSplit {
    pub fn row(&self, j: usize) -> Vec<f64> {
        self.b.row(j).iter().copied().collect()
    }

    /// `λI + λBBᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.b.nrows();
        (DMatrix::identity(n, n) + &self.b * self.b.transpose()) * self.lambda
    }
}

/// Minimal-eigenvalue split. Column `i` of `B` is `√((μᵢ − λ)/λ) vᵢ` for the
/// `n − 1` largest eigenpairs `(μᵢ, vᵢ)`; columns whose gap is below the rank
/// tolerance are zero.
pub fn min_eig_decompose(r: &CorrelationMatrix) -> Result<SpectralSplit> {
    let n = r.dim();
    let eig = sym_eigen(r.matrix())?;
    let lambda = eig.values[n - 1];
    if lambda < MIN_LAMBDA {
        return Err(Error::NearSingular { lambda });
    }
    let gaps: Vec<f64> = (0..n - 1).map(|i| eig.values[i] - lambda).collect();
    let rank_a = positive_count(&gaps);
    let mut b = DMatrix::zeros(n, n - 1);
    for (i, &gap) in gaps.iter().enumerate().take(rank_a) {
        let scale = (gap / lambda).sqrt();
        b.set_column(i, &(eig.vectors.column(i) * scale));
    }
    Ok(SpectralSplit { lambda, b, rank_a })
}

/// A subset `J = J₁ ∪ J₂` with `J₁` in the first block and `J₂` in the
/// second, both nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetSplit {
    pub j1: Vec<usize>,
    pub j2: Vec<usize>,
}

impl SubsetSplit {
    pub fn new(mut j1: Vec<usize>, mut j2: Vec<usize>) -> Result<Self> {
        j1.sort_unstable();
        j2.sort_unstable();
        j1.dedup();
        j2.dedup();
        if j1.is_empty() || j2.is_empty() {
            return Err(Error::InvalidInput("both index sets of a split must be nonempty".into()));
        }
        if j1.iter().any(|i| j2.binary_search(i).is_ok()) {
            return Err(Error::InvalidInput("split index sets must be disjoint".into()));
        }
        Ok(Self { j1, j2 })
    }

    /// Sorted `J₁ ∪ J₂`.
    pub fn union(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.j1.iter().chain(&self.j2).copied().collect();
        all.sort_unstable();
        all
    }

    pub fn max_index(&self) -> usize {
        self.j1.iter().chain(&self.j2).copied().max().unwrap_or(0)
    }
}

/// Inverse symmetric square root of a positive-definite matrix.
fn inv_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(m)?;
    let d = DMatrix::from_diagonal(&eig.values.map(|v| 1.0 / v.sqrt()));
    Ok(&eig.vectors * d * eig.vectors.transpose())
}

/// Squared canonical correlations between the `j1` and `j2` coordinates of
/// `m`: positive eigenvalues of `R₁^{-1/2} R₁₂ R₂^{-1} R₂₁ R₁^{-1/2}`,
/// descending.
pub fn canonical_corr_sq_of(m: &DMatrix<f64>, j1: &[usize], j2: &[usize]) -> Result<Vec<f64>> {
    let r11 = principal_submatrix(m, j1);
    let r22 = principal_submatrix(m, j2);
    let r12 = block(m, j1, j2);
    let w1 = inv_sqrt(&r11)?;
    let r22_inv = r22
        .cholesky()
        .ok_or_else(|| Error::Singular("second block is not positive definite".into()))?
        .inverse();
    let core = &w1 * &r12 * r22_inv * r12.transpose() * &w1;
    let values: Vec<f64> = sym_eigen(&core)?.values.iter().copied().collect();
    let keep = positive_count(&values);
    Ok(values.into_iter().take(keep).collect())
}

pub fn canonical_corr_sq(r: &CorrelationMatrix, split: &SubsetSplit) -> Result<Vec<f64>> {
    if split.max_index() >= r.dim() {
        return Err(Error::DimensionMismatch {
            expected: r.dim(),
            found: split.max_index() + 1,
        });
    }
    canonical_corr_sq_of(r.matrix(), &split.j1, &split.j2)
}

/// Random correlation matrix: Gram matrix of `n` unit-normalized standard
/// normal vectors in ℝⁿ, blended with the identity until the minimal
/// eigenvalue reaches `min_eig_floor`. Deterministic in `seed`.
pub fn random_correlation(n: usize, seed: u64, min_eig_floor: f64) -> Result<CorrelationMatrix> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    if !(min_eig_floor > 0.0 && min_eig_floor < 1.0) {
        return Err(Error::InvalidInput(format!(
            "min_eig_floor must lie in (0, 1), got {min_eig_floor}"
        )));
    }
    let mut rng = RngStream::new(seed, 0xC0_77E1).generator();
    let mut rows = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        loop {
            for j in 0..n {
                rows[(i, j)] = rng.sample(StandardNormal);
            }
            let norm = rows.row(i).norm();
            if norm > 1e-8 {
                let unit = rows.row(i) / norm;
                rows.set_row(i, &unit);
                break;
            }
        }
    }
    let mut gram = &rows * rows.transpose();
    let target = min_eig_floor + 1e-12;
    let mu = sym_eigen(&gram)?.values[n - 1];
    if mu < target {
        let w = (target - mu) / (1.0 - mu);
        gram = gram * (1.0 - w) + DMatrix::identity(n, n) * w;
    }
    for i in 0..n {
        gram[(i, i)] = 1.0;
        for j in 0..i {
            let v = 0.5 * (gram[(i, j)] + gram[(j, i)]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    CorrelationMatrix::new(gram)
}
