//! Dense complex-matrix kernels used by the optimizer.
//!
//! Everything here is a pure function of its inputs. Matrices are
//! `nalgebra` column-major `DMatrix<Complex64>`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Relative ridge added before every Cholesky/inversion of a (near-)PD matrix.
pub const RIDGE_EPS: f64 = 1e-10;

/// Relative tolerance used when checking Hermitian symmetry of inputs.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct GevdResult {
    /// Generalized eigenvalues, sorted descending.
    pub eigvals: Vec<f64>,
    /// Column `k` pairs with `eigvals[k]`; columns are B-orthonormal.
    pub eigvecs: ComplexMatrix,
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Identity-shaped `rows x cols` mapping (ones on the main diagonal).
pub fn eye(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |i, j| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

pub fn real_trace(m: &ComplexMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `(M + Mᴴ) / 2`.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn is_hermitian(m: &ComplexMatrix, rel_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = frobenius(m).max(f64::MIN_POSITIVE);
    frobenius(&(m - m.adjoint())) <= rel_tol * scale
}

fn check_square(m: &ComplexMatrix, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// `M + eps * (tr(M)/n) * I`.
pub fn ridge(m: &ComplexMatrix, eps: f64) -> ComplexMatrix {
    let n = m.nrows();
    if n == 0 {
        return m.clone();
    }
    let shift = eps * real_trace(m) / n as f64;
    let mut out = m.clone();
    if shift > 0.0 {
        for k in 0..n {
            out[(k, k)].re += shift;
        }
    }
    out
}

/// Lower-triangular Cholesky factor `L` with `M = L Lᴴ`. Only the lower
/// triangle of `m` is read.
pub fn cholesky(m: &ComplexMatrix, what: &str) -> Result<ComplexMatrix> {
    check_square(m, what)?;
    let n = m.nrows();
    let mut l = zeros(n, n);
    for j in 0..n {
        let mut pivot = m[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if !(pivot > 0.0 && pivot.is_finite()) {
            return Err(Error::Conditioning {
                what: what.to_string(),
                pivot,
                index: j,
            });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

fn solve_lower(l: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    l.solve_lower_triangular(b)
        .expect("Cholesky factor has a positive diagonal")
}

fn solve_lower_adjoint(l: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    l.adjoint()
        .solve_upper_triangular(b)
        .expect("Cholesky factor has a positive diagonal")
}

/// Inverse of a Hermitian PD matrix after ridge regularization.
pub fn hermitian_inverse(m: &ComplexMatrix, eps: f64, what: &str) -> Result<ComplexMatrix> {
    let l = cholesky(&ridge(m, eps), what)?;
    let l_inv = solve_lower(&l, &identity(m.nrows()));
    Ok(l_inv.adjoint() * l_inv)
}

/// Inverse of a Hermitian PSD matrix through its eigendecomposition, with
/// eigenvalues raised to at least `eps * tr(M)/n`. Used where directions of
/// numerically zero gain are expected and must map to huge (not failing)
/// inverse entries. Errors if `tr(M) <= 0`.
pub fn hermitian_inverse_floored(m: &ComplexMatrix, eps: f64, what: &str) -> Result<ComplexMatrix> {
    check_square(m, what)?;
    let n = m.nrows();
    let floor = eps * real_trace(m) / n as f64;
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::Conditioning {
            what: what.to_string(),
            pivot: real_trace(m),
            index: 0,
        });
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let inv = eig.eigenvalues.map(|v| Complex64::new(1.0 / v.max(floor), 0.0));
    let u = &eig.eigenvectors;
    Ok(hermitian_part(&(u * ComplexMatrix::from_diagonal(&inv) * u.adjoint())))
}

/// `ln det M` for Hermitian PD `M`, after ridge regularization.
pub fn logdet_hpd(m: &ComplexMatrix, eps: f64, what: &str) -> Result<f64> {
    let l = cholesky(&ridge(m, eps), what)?;
    Ok(2.0 * l.diagonal().iter().map(|z| z.re.ln()).sum::<f64>())
}

/// Rotate each column so its largest-modulus entry is real and positive.
fn fix_column_phases(v: &mut ComplexMatrix) {
    for mut col in v.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (i, z) in col.iter().enumerate() {
            let a = z.norm();
            if a > best_abs * (1.0 + 1e-12) {
                best = i;
                best_abs = a;
            }
        }
        if best_abs > 0.0 {
            let rot = col[best].conj() / best_abs;
            for z in col.iter_mut() {
                *z *= rot;
            }
        }
    }
}

/// From this dimension on, a single dominant eigenvector is found by inverse
/// iteration instead of a full eigendecomposition.
const TOP_ONLY_MIN_DIM: usize = 32;

/// Largest eigenvalue of a Hermitian matrix and its unit eigenvector, by
/// shifted inverse iteration just above the spectrum. `None` if the shifted
/// matrix cannot be factored or the iteration does not settle.
fn dominant_eigenpair(m: &ComplexMatrix) -> Option<(f64, ComplexMatrix)> {
    let n = m.nrows();
    let vals = m.clone().symmetric_eigenvalues();
    let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if !(scale > 0.0 && top.is_finite()) {
        return None;
    }
    let shift = top + 1e-10 * scale;
    let shifted = identity(n) * Complex64::new(shift, 0.0) - m;
    let chol = nalgebra::Cholesky::new(hermitian_part(&shifted))?;
    let mut v = ComplexVector::from_fn(n, |i, _| Complex64::new(1.0, i as f64 / n as f64));
    v /= Complex64::new(v.norm(), 0.0);
    for _ in 0..8 {
        let mut next = chol.solve(&v);
        next /= Complex64::new(next.norm(), 0.0);
        let overlap = next.dotc(&v).norm();
        v = next;
        if (1.0 - overlap).abs() < 1e-15 {
            break;
        }
    }
    let resid = (m * &v - &v * Complex64::new(top, 0.0)).norm();
    (resid <= 1e-8 * scale).then(|| (top, ComplexMatrix::from_column_slice(n, 1, v.as_slice())))
}

/// Dominant `d` eigenpairs of the Hermitian pencil `(A, B)`, i.e. `A v = λ B v`.
///
/// `B` is ridge-regularized, factored as `L Lᴴ`, and the standard Hermitian
/// problem `L⁻¹ A L⁻ᴴ u = λ u` is solved; `v = L⁻ᴴ u`.
pub fn hermitian_gevd(a: &ComplexMatrix, b: &ComplexMatrix, d: usize) -> Result<GevdResult> {
    hermitian_gevd_with_ridge(a, b, d, RIDGE_EPS)
}

pub fn hermitian_gevd_with_ridge(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    d: usize,
    eps: f64,
) -> Result<GevdResult> {
    check_square(a, "pencil A")?;
    check_square(b, "pencil B")?;
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::Dimension(format!(
            "pencil sides differ: A is {n}x{n}, B is {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    if d == 0 || d > n {
        return Err(Error::Dimension(format!(
            "requested {d} eigenpairs from a pencil of dimension {n}"
        )));
    }
    if !is_hermitian(a, HERMITIAN_TOL) {
        return Err(Error::NotHermitian("pencil A".into()));
    }
    if !is_hermitian(b, HERMITIAN_TOL) {
        return Err(Error::NotHermitian("pencil B".into()));
    }

    let l = cholesky(&ridge(b, eps), "pencil B")?;
    let y = solve_lower(&l, a);
    let whitened = hermitian_part(&solve_lower(&l, &y.adjoint()));
    let (eigvals, selected) = match (d == 1 && n >= TOP_ONLY_MIN_DIM)
        .then(|| dominant_eigenpair(&whitened))
        .flatten()
    {
        Some((value, vector)) => (vec![value], vector),
        None => {
            let eig = SymmetricEigen::new(whitened);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
            order.truncate(d);
            let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
            let vecs = ComplexMatrix::from_fn(n, d, |i, c| eig.eigenvectors[(i, order[c])]);
            (vals, vecs)
        }
    };
    let mut eigvecs = solve_lower_adjoint(&l, &selected);
    fix_column_phases(&mut eigvecs);
    Ok(GevdResult { eigvals, eigvecs })
}

/// Dominant eigenpair of the pencil `(Ax ⊗ Aq, Bx ⊗ Bq + c I)` with
/// `c = eps * tr(Bx ⊗ Bq) / n`, without forming or factoring the Kronecker
/// products. `Bx` and `Bq` must be Hermitian PSD.
///
/// With `Bx = U₁D₁U₁ᴴ` and `Bq = U₂D₂U₂ᴴ` the right side is diagonal in the
/// basis `U₁ ⊗ U₂`, so whitening costs only a diagonal scaling of
/// `(U₁ᴴAxU₁) ⊗ (U₂ᴴAqU₂)`.
pub fn kronecker_gevd_top(
    ax: &ComplexMatrix,
    aq: &ComplexMatrix,
    bx: &ComplexMatrix,
    bq: &ComplexMatrix,
    eps: f64,
) -> Result<GevdResult> {
    for (m, what) in [(ax, "pencil A factor"), (aq, "pencil A factor"), (bx, "pencil B factor"), (bq, "pencil B factor")] {
        check_square(m, what)?;
    }
    let (n1, n2) = (ax.nrows(), aq.nrows());
    if bx.nrows() != n1 || bq.nrows() != n2 {
        return Err(Error::Dimension(format!(
            "Kronecker pencil factors differ: A is ({n1}, {n2}), B is ({}, {})",
            bx.nrows(),
            bq.nrows()
        )));
    }
    if n1 * n2 == 0 {
        return Err(Error::Dimension("requested 1 eigenpair from an empty pencil".into()));
    }
    let e1 = SymmetricEigen::new(hermitian_part(bx));
    let e2 = SymmetricEigen::new(hermitian_part(bq));
    let n = n1 * n2;
    let shift = eps * e1.eigenvalues.sum() * e2.eigenvalues.sum() / n as f64;
    let mut scale = DVector::<f64>::zeros(n);
    for i in 0..n1 {
        for j in 0..n2 {
            let lam = e1.eigenvalues[i] * e2.eigenvalues[j] + shift.max(0.0);
            if !(lam > 0.0 && lam.is_finite()) {
                return Err(Error::Conditioning {
                    what: "pencil B".into(),
                    pivot: lam,
                    index: i * n2 + j,
                });
            }
            scale[i * n2 + j] = 1.0 / lam.sqrt();
        }
    }
    let k1 = hermitian_part(&(e1.eigenvectors.adjoint() * ax * &e1.eigenvectors));
    let k2 = hermitian_part(&(e2.eigenvectors.adjoint() * aq * &e2.eigenvectors));
    let mut whitened = kron(&k1, &k2);
    for c in 0..n {
        for r in 0..n {
            whitened[(r, c)] *= scale[r] * scale[c];
        }
    }
    let whitened = hermitian_part(&whitened);
    let (value, z) = match (n >= TOP_ONLY_MIN_DIM).then(|| dominant_eigenpair(&whitened)).flatten() {
        Some(pair) => pair,
        None => {
            let eig = SymmetricEigen::new(whitened);
            let top = (0..n)
                .max_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]))
                .expect("non-empty pencil");
            (eig.eigenvalues[top], eig.eigenvectors.columns(top, 1).into_owned())
        }
    };
    // v = (U₁ ⊗ U₂) D^{-1/2} z, i.e. vec(U₂ Z U₁ᵀ) with Z the n2 x n1 reshape.
    let scaled = ComplexMatrix::from_fn(n2, n1, |j, i| z[(i * n2 + j, 0)] * scale[i * n2 + j]);
    let v = &e2.eigenvectors * scaled * e1.eigenvectors.transpose();
    let mut eigvecs = ComplexMatrix::from_column_slice(n, 1, v.as_slice());
    fix_column_phases(&mut eigvecs);
    Ok(GevdResult {
        eigvals: vec![value],
        eigvecs,
    })
}

/// Column-major stacking.
pub fn vec(x: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(x.as_slice())
}

pub fn unvec(x: &ComplexVector, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if x.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "cannot reshape {} entries into {rows}x{cols}",
            x.len()
        )));
    }
    Ok(ComplexMatrix::from_column_slice(rows, cols, x.as_slice()))
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = zeros(ra * rb, ca * cb);
    for j in 0..ca {
        for i in 0..ra {
            let s = a[(i, j)];
            if s == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut block = out.view_mut((i * rb, j * cb), (rb, cb));
            block.zip_apply(b, |o, v| *o = s * v);
        }
    }
    out
}

/// Entrywise unit-modulus projection `x / |x|`; zero entries map to `1`.
pub fn phase_project(x: &ComplexMatrix) -> ComplexMatrix {
    x.map(|z| {
        let r = z.norm();
        if r > 0.0 && r.is_finite() {
            z / r
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// Diagonal of `(M)⁺`: entries `max(0, Re M(k,k))`. Off-diagonals are dropped.
pub fn positive_part_diag(m: &ComplexMatrix) -> Result<DVector<f64>> {
    check_square(m, "positive-part argument")?;
    Ok(DVector::from_iterator(
        m.nrows(),
        m.diagonal().iter().map(|z| z.re.max(0.0)),
    ))
}

/// Scale every column to unit Euclidean norm. Zero columns are left as is.
pub fn normalize_columns(m: &mut ComplexMatrix) {
    for mut col in m.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= Complex64::new(n, 0.0);
        }
    }
}

/// Diagonal matrix built from real entries.
pub fn real_diag(values: &DVector<f64>) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&values.map(|v| Complex64::new(v, 0.0)))
}
