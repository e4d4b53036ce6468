//! Dense Hermitian eigensolver, SVD, semigroup actions and a Sylvester solver.
//!
//! Everything works on column-major `DMatrix<Complex<f64>>`. The norm used for
//! residuals is Frobenius, which bounds the operator norm from above.

use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub const I: C64 = Complex { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Modulus of a complex number (no_std safe).
pub fn cabs(z: C64) -> f64 {
    libm::hypot(z.re, z.im)
}

/// Argument in `(-pi, pi]`.
pub fn carg(z: C64) -> f64 {
    libm::atan2(z.im, z.re)
}

pub fn cexp_i(theta: f64) -> C64 {
    Complex::new(libm::cos(theta), libm::sin(theta))
}

/// Principal square root.
pub fn csqrt(z: C64) -> C64 {
    let r = cabs(z);
    let re = libm::sqrt(0.5 * (r + z.re).max(0.0));
    let im = libm::sqrt(0.5 * (r - z.re).max(0.0));
    Complex::new(re, if z.im < 0.0 { -im } else { im })
}

/// Angle of `z` folded into `[0, 2 pi)`.
pub fn phase_0_2pi(z: C64) -> f64 {
    let a = carg(z);
    if a < 0.0 {
        a + 2.0 * core::f64::consts::PI
    } else {
        a
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn from_real(m: &DMatrix<f64>) -> CMatrix {
    m.map(c)
}

pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&v| c(v))))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

/// `(M + M*) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// `(M - M*) / 2i`, Hermitian for any square `M`.
pub fn imaginary_part(m: &CMatrix) -> CMatrix {
    let diff = m - m.adjoint();
    diff * Complex::new(0.0, -0.5)
}

pub fn check_finite(m: &CMatrix, context: &'static str) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite { context, row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn check_shape(m: &CMatrix, rows: usize, cols: usize, context: &'static str) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::Shape {
            context,
            expected_rows: rows,
            expected_cols: cols,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

pub fn check_square(m: &CMatrix, context: &'static str) -> Result<()> {
    if m.nrows() == 0 {
        return Err(Error::InvalidParameter {
            name: context,
            reason: "matrix has zero dimension".into(),
        });
    }
    check_shape(m, m.nrows(), m.nrows(), context)
}

/// Relative Hermiticity check `||M - M*|| <= tol ||M||`.
pub fn check_hermitian(m: &CMatrix, rel_tol: f64, context: &'static str) -> Result<()> {
    check_square(m, context)?;
    check_finite(m, context)?;
    let asymmetry = frobenius(&(m - m.adjoint()));
    let tolerance = rel_tol * frobenius(m);
    if asymmetry > tolerance {
        return Err(Error::NotHermitian { context, asymmetry, tolerance });
    }
    Ok(())
}

const HERMITIAN_TOL: f64 = 1e-12;

/// Eigendecomposition `M = V diag(values) V*` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V f(diag) V*`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        self.apply_fn_complex(|x| c(f(x)))
    }

    pub fn apply_fn_complex(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let s = f(v);
            scaled.column_mut(j).scale_mut_complex(s);
        }
        &scaled * self.vectors.adjoint()
    }

    /// Eigenvectors whose eigenvalue satisfies `keep`, with those eigenvalues.
    pub fn select(&self, keep: impl Fn(f64) -> bool) -> (CMatrix, Vec<f64>) {
        let idx: Vec<usize> = (0..self.dim()).filter(|&j| keep(self.values[j])).collect();
        let mut cols = CMatrix::zeros(self.vectors.nrows(), idx.len());
        for (k, &j) in idx.iter().enumerate() {
            cols.set_column(k, &self.vectors.column(j));
        }
        (cols, idx.iter().map(|&j| self.values[j]).collect())
    }

    /// Orthogonal projection onto the span of eigenvectors with `keep(value)`.
    pub fn projection(&self, keep: impl Fn(f64) -> bool) -> CMatrix {
        let (cols, _) = self.select(keep);
        &cols * cols.adjoint()
    }

    /// Eigenvalue closest to `x`.
    pub fn nearest(&self, x: f64) -> Option<f64> {
        self.values
            .iter()
            .copied()
            .min_by(|a, b| libm::fabs(a - x).total_cmp(&libm::fabs(b - x)))
    }

    /// `||M V - V diag|| / max(||M||, 1)`.
    pub fn residual(&self, m: &CMatrix) -> f64 {
        let mv = m * &self.vectors;
        let mut vd = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            vd.column_mut(j).scale_mut(v);
        }
        frobenius(&(mv - vd)) / frobenius(m).max(1.0)
    }

    /// `||V* V - I||`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.dim();
        frobenius(&(self.vectors.adjoint() * &self.vectors - identity(n)))
    }
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, s: C64);
}

impl<S> ScaleComplex for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, s: C64) {
        for z in self.iter_mut() {
            *z *= s;
        }
    }
}

// Imaginary parts below this fraction of ||M|| are treated as roundoff and the
// real symmetric solver is used instead of the complex one (about 8x faster).
const REAL_PATH_TOL: f64 = 64.0 * f64::EPSILON;

fn is_effectively_real(m: &CMatrix) -> bool {
    let scale = frobenius(m);
    m.iter().all(|z| libm::fabs(z.im) <= REAL_PATH_TOL * scale)
}

/// Hermitian eigendecomposition with eigenvalues in ascending order.
///
/// Rejects input with `||M - M*|| > 1e-12 ||M||`.
pub fn herm_eig(m: &CMatrix) -> Result<Eigen> {
    check_hermitian(m, HERMITIAN_TOL, "herm_eig")?;
    let (values, vectors) = if is_effectively_real(m) {
        let re = m.map(|z| z.re);
        let sym = (&re + re.transpose()) * 0.5;
        let eig = sym
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or(Error::NoConvergence("symmetric eigensolver"))?;
        (eig.eigenvalues, from_real(&eig.eigenvectors))
    } else {
        let eig = hermitian_part(m)
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or(Error::NoConvergence("Hermitian eigensolver"))?;
        (eig.eigenvalues, eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut sorted = CMatrix::zeros(vectors.nrows(), vectors.ncols());
    for (k, &j) in order.iter().enumerate() {
        sorted.set_column(k, &vectors.column(j));
    }
    Ok(Eigen {
        values: order.iter().map(|&j| values[j]).collect(),
        vectors: sorted,
    })
}

/// Eigenvalues only, ascending.
pub fn herm_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    check_hermitian(m, HERMITIAN_TOL, "herm_eigenvalues")?;
    let mut values: Vec<f64> = if is_effectively_real(m) {
        let re = m.map(|z| z.re);
        let sym = (&re + re.transpose()) * 0.5;
        sym.symmetric_eigenvalues().iter().copied().collect()
    } else {
        hermitian_part(m).symmetric_eigenvalues().iter().copied().collect()
    };
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Thin SVD with singular values in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    pub u: CMatrix,
    pub v_adjoint: CMatrix,
}

pub fn svd(m: &CMatrix) -> Result<Svd> {
    check_finite(m, "svd")?;
    let s = m
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or(Error::NoConvergence("SVD"))?;
    let values = s.singular_values;
    let u = s.u.ok_or(Error::NoConvergence("SVD"))?;
    let vt = s.v_t.ok_or(Error::NoConvergence("SVD"))?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut us = CMatrix::zeros(u.nrows(), order.len());
    let mut vs = CMatrix::zeros(order.len(), vt.ncols());
    for (k, &j) in order.iter().enumerate() {
        us.set_column(k, &u.column(j));
        vs.set_row(k, &vt.row(j));
    }
    Ok(Svd {
        singular_values: order.iter().map(|&j| values[j]).collect(),
        u: us,
        v_adjoint: vs,
    })
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    check_finite(m, "singular_values")?;
    let mut values: Vec<f64> = if is_effectively_real(m) {
        m.map(|z| z.re).singular_values().iter().copied().collect()
    } else {
        m.singular_values().iter().copied().collect()
    };
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Largest singular value, from the top eigenvalue of `M* M` (or `M M*`).
pub fn operator_norm(m: &CMatrix) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    check_finite(m, "operator_norm")?;
    let gram = if m.nrows() >= m.ncols() { m.adjoint() * m } else { m * m.adjoint() };
    let top = herm_eigenvalues(&hermitian_part(&gram))?.last().copied().unwrap_or(0.0);
    Ok(libm::sqrt(top.max(0.0)))
}

/// Condition number `s_max / s_min` (infinite for singular input).
pub fn condition_number(m: &CMatrix) -> Result<f64> {
    let s = singular_values(m)?;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => Ok(hi / lo),
        (Some(_), Some(_)) => Ok(f64::INFINITY),
        _ => Ok(1.0),
    }
}

const MAX_EXPONENT: f64 = 700.0;

/// `exp(t M) X` for Hermitian `M`.
pub fn expm_apply(m: &CMatrix, t: f64, x: &CMatrix) -> Result<CMatrix> {
    let eig = herm_eig(m)?;
    expm_apply_eigen(&eig, t, x)
}

/// `exp(t M) X` from a precomputed decomposition of `M`.
pub fn expm_apply_eigen(eig: &Eigen, t: f64, x: &CMatrix) -> Result<CMatrix> {
    check_shape(x, eig.dim(), x.ncols(), "expm_apply rhs")?;
    let exponent = eig
        .values
        .iter()
        .map(|&v| t * v)
        .fold(f64::NEG_INFINITY, f64::max);
    if exponent > MAX_EXPONENT {
        return Err(Error::Overflow { exponent });
    }
    let mut coeffs = eig.vectors.adjoint() * x;
    for (j, &v) in eig.values.iter().enumerate() {
        let s = libm::exp(t * v);
        coeffs.row_mut(j).scale_mut(s);
    }
    Ok(&eig.vectors * coeffs)
}

/// Complex Schur form `M = Q T Q*` with `T` upper triangular.
pub fn schur(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    check_square(m, "schur")?;
    check_finite(m, "schur")?;
    let s = m
        .clone()
        .try_schur(f64::EPSILON, 0)
        .ok_or(Error::NoConvergence("Schur decomposition"))?;
    Ok(s.unpack())
}

/// Eigenvalues of a general square matrix, read off its Schur form.
pub fn eigenvalues_general(m: &CMatrix) -> Result<Vec<C64>> {
    let (_, t) = schur(m)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

// Eigenvalues of (U - I)*(U - I)/4 closer than this are treated as one cluster.
const UNITARY_CLUSTER: f64 = 1e-9;

/// Eigenvalues of a unitary matrix through Hermitian problems only.
///
/// `(U - I)*(U - I)/4` has eigenvalues `sin^2(theta/2)`; on each of its
/// eigenspaces the skew part `(U - U*)/2i` carries `sin theta`, which fixes
/// the sign of the phase. Avoids the Schur iteration, which stalls on the
/// large cluster at 1 that smoothed scattering matrices have.
pub fn unitary_eigenvalues(u: &CMatrix) -> Result<Vec<C64>> {
    check_square(u, "unitary_eigenvalues")?;
    check_finite(u, "unitary_eigenvalues")?;
    let n = u.nrows();
    let d = u - identity(n);
    let quarter = hermitian_part(&(d.adjoint() * &d * c(0.25)));
    let eig = herm_eig(&quarter)?;
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.values[end] - eig.values[end - 1] <= UNITARY_CLUSTER {
            end += 1;
        }
        let cols = eig.vectors.columns(start, end - start).into_owned();
        let block = cols.adjoint() * u * &cols;
        let skew = hermitian_part(&((&block - block.adjoint()) * Complex::new(0.0, -0.5)));
        let s = eig.values[start..end].iter().sum::<f64>() / (end - start) as f64;
        let cos = 1.0 - 2.0 * s.clamp(0.0, 1.0);
        for sin in herm_eigenvalues(&skew)? {
            out.push(cexp_i(libm::atan2(sin, cos)));
        }
        start = end;
    }
    Ok(out)
}

const SYLVESTER_GAP: f64 = 1e-8;
const SYLVESTER_RESIDUAL: f64 = 1e-9;

/// Solves `A X - X B = C`: by diagonalization when both sides are Hermitian,
/// by Bartels-Stewart on complex Schur forms otherwise.
///
/// Requires the spectra of `A` and `B` to be separated by at least
/// `1e-8 * max(||A||, ||B||)`.
pub fn sylvester_solve(a: &CMatrix, b: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    check_square(a, "sylvester A")?;
    check_square(b, "sylvester B")?;
    let (m, n) = (a.nrows(), b.nrows());
    check_shape(rhs, m, n, "sylvester C")?;
    check_finite(rhs, "sylvester C")?;

    let scale = frobenius(a).max(frobenius(b)).max(f64::MIN_POSITIVE);
    let tolerance = SYLVESTER_GAP * scale;
    let hermitian = |m: &CMatrix| check_hermitian(m, HERMITIAN_TOL, "sylvester").is_ok();
    let x = if hermitian(a) && hermitian(b) {
        sylvester_hermitian(a, b, rhs, tolerance)?
    } else {
        sylvester_schur(a, b, rhs, tolerance)?
    };

    let residual = frobenius(&(a * &x - &x * b - rhs));
    let bound = SYLVESTER_RESIDUAL * (frobenius(a) + frobenius(b)) * frobenius(&x);
    if residual > bound.max(SYLVESTER_RESIDUAL * frobenius(rhs)) {
        return Err(Error::Inaccurate {
            context: "sylvester_solve",
            residual,
            tolerance: bound,
        });
    }
    Ok(x)
}

fn collision(gap: f64, tolerance: f64) -> Result<()> {
    if gap < tolerance {
        Err(Error::SpectralCollision { gap, tolerance })
    } else {
        Ok(())
    }
}

/// Both sides diagonalized: `X = Qa [F_ij / (a_i - b_j)] Qb*`.
fn sylvester_hermitian(a: &CMatrix, b: &CMatrix, rhs: &CMatrix, tolerance: f64) -> Result<CMatrix> {
    let ea = herm_eig(a)?;
    let eb = herm_eig(b)?;
    let mut gap = f64::INFINITY;
    for &x in &ea.values {
        for &y in &eb.values {
            gap = gap.min(libm::fabs(x - y));
        }
    }
    collision(gap, tolerance)?;
    let mut f = ea.vectors.adjoint() * rhs * &eb.vectors;
    for j in 0..f.ncols() {
        for i in 0..f.nrows() {
            f[(i, j)] /= c(ea.values[i] - eb.values[j]);
        }
    }
    Ok(&ea.vectors * f * eb.vectors.adjoint())
}

/// Bartels-Stewart on complex Schur forms.
fn sylvester_schur(a: &CMatrix, b: &CMatrix, rhs: &CMatrix, tolerance: f64) -> Result<CMatrix> {
    let (m, n) = (a.nrows(), b.nrows());
    let (qa, ta) = schur(a)?;
    let (qb, tb) = schur(b)?;

    let mut gap = f64::INFINITY;
    for i in 0..m {
        for j in 0..n {
            gap = gap.min(cabs(ta[(i, i)] - tb[(j, j)]));
        }
    }
    collision(gap, tolerance)?;

    // Ta Y - Y Tb = F, column j: (Ta - tb_jj) y_j = f_j + sum_{k<j} tb_kj y_k
    let f = qa.adjoint() * rhs * &qb;
    let mut y = CMatrix::zeros(m, n);
    let mut col = DVector::<C64>::zeros(m);
    for j in 0..n {
        col.copy_from(&f.column(j));
        for k in 0..j {
            let coef = tb[(k, j)];
            if coef != c(0.0) {
                col.axpy(coef, &y.column(k), c(1.0));
            }
        }
        let shift = tb[(j, j)];
        for i in (0..m).rev() {
            let mut acc = col[i];
            for l in (i + 1)..m {
                acc -= ta[(i, l)] * y[(l, j)];
            }
            y[(i, j)] = acc / (ta[(i, i)] - shift);
        }
    }
    Ok(&qa * y * qb.adjoint())
}

/// Square root of a positive semidefinite Hermitian matrix. Eigenvalues down to
/// `-clip * ||M||` are clipped to zero; anything more negative is an error.
pub fn psd_sqrt(m: &CMatrix, clip: f64) -> Result<CMatrix> {
    let eig = herm_eig(m)?;
    let scale = eig.values.iter().fold(0.0f64, |acc, v| acc.max(libm::fabs(*v)));
    if let Some(&lowest) = eig.values.first() {
        if lowest < -clip * scale.max(1.0) {
            return Err(Error::InvalidParameter {
                name: "psd_sqrt",
                reason: alloc::format!("matrix has eigenvalue {lowest:.3e}"),
            });
        }
    }
    Ok(eig.apply_fn(|v| libm::sqrt(v.max(0.0))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        // small LCG so this module's tests need no RNG crate
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let m = CMatrix::from_fn(n, n, |_, _| Complex::new(next(), next()));
        hermitian_part(&m)
    }

    #[test]
    fn herm_eig_residual_and_orthonormality() {
        for seed in 0..5 {
            let m = random_hermitian(17, seed);
            let e = herm_eig(&m).unwrap();
            assert!(e.residual(&m) <= 1e-10);
            assert!(e.orthonormality_defect() <= 1e-10);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn herm_eig_real_path_matches_known_spectrum() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let m = from_real(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));
        let e = herm_eig(&m).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let m = from_real(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        assert!(matches!(herm_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn herm_eig_rejects_nan() {
        let mut m = identity(3);
        m[(1, 1)] = c(f64::NAN);
        assert!(matches!(herm_eig(&m), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn svd_reconstructs() {
        let m = CMatrix::from_fn(4, 3, |i, j| Complex::new((i + 2 * j) as f64, (i * j) as f64 - 1.0));
        let s = svd(&m).unwrap();
        let mut us = s.u.clone();
        for (j, &v) in s.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(v);
        }
        assert!(frobenius(&(us * &s.v_adjoint - &m)) < 1e-12 * frobenius(&m));
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn expm_apply_diagonal_and_overflow_guard() {
        let m = diag(&[-1.0, 2.0]);
        let x = identity(2);
        let y = expm_apply(&m, 0.5, &x).unwrap();
        assert!((y[(0, 0)].re - libm::exp(-0.5)).abs() < 1e-15);
        assert!((y[(1, 1)].re - libm::exp(1.0)).abs() < 1e-13);
        assert!(matches!(expm_apply(&m, 400.0, &x), Err(Error::Overflow { .. })));
        // decaying direction alone never trips the guard
        assert!(expm_apply(&diag(&[-5.0]), 1e3, &identity(1)).is_ok());
    }

    #[test]
    fn sylvester_small_scalar_case() {
        // 3x - x*1 = 4  ->  x = 2
        let x = sylvester_solve(&diag(&[3.0]), &diag(&[1.0]), &diag(&[4.0])).unwrap();
        assert!((x[(0, 0)].re - 2.0).abs() < 1e-14);
    }

    #[test]
    fn sylvester_random_residual() {
        let a = random_hermitian(7, 11) + diag(&vec![3.0; 7]);
        let b = random_hermitian(5, 12) - diag(&vec![3.0; 5]);
        let rhs = CMatrix::from_fn(7, 5, |i, j| Complex::new(i as f64 - j as f64, 0.5));
        let x = sylvester_solve(&a, &b, &rhs).unwrap();
        let r = frobenius(&(&a * &x - &x * &b - &rhs));
        assert!(r <= 1e-9 * (frobenius(&a) + frobenius(&b)) * frobenius(&x));
    }

    #[test]
    fn sylvester_non_hermitian_matches_hermitian_route() {
        let a = random_hermitian(6, 21) + diag(&vec![3.0; 6]);
        let b = random_hermitian(4, 22) - diag(&vec![3.0; 4]);
        let rhs = CMatrix::from_fn(6, 4, |i, j| Complex::new(1.0 + i as f64, j as f64));
        let x = sylvester_solve(&a, &b, &rhs).unwrap();
        let y = sylvester_schur(&a, &b, &rhs, 0.0).unwrap();
        assert!(frobenius(&(x - y)) < 1e-12);
        // strictly upper-triangular coupling makes A non-normal
        let mut an = a.clone();
        an[(0, 5)] += Complex::new(2.0, 1.0);
        let xn = sylvester_solve(&an, &b, &rhs).unwrap();
        assert!(frobenius(&(&an * &xn - &xn * &b - &rhs)) < 1e-10);
    }

    #[test]
    fn unitary_eigenvalues_recover_phases() {
        let q = herm_eig(&random_hermitian(8, 5)).unwrap().vectors;
        let phases = [0.0, 0.0, 0.0, 0.7, -0.7, PI - 1e-3, 2.0, 1e-5];
        let u = &q * diag_complex(&phases) * q.adjoint();
        let mut got: Vec<f64> = unitary_eigenvalues(&u).unwrap().iter().map(|z| carg(*z)).collect();
        let mut want = phases.to_vec();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9, "{got:?} vs {want:?}");
        }
    }

    fn diag_complex(phases: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(phases.len(), phases.len());
        for (i, &t) in phases.iter().enumerate() {
            m[(i, i)] = cexp_i(t);
        }
        m
    }

    #[test]
    fn sylvester_rejects_shared_eigenvalue() {
        let a = diag(&[1.0, 2.0]);
        let b = diag(&[2.0]);
        let rhs = CMatrix::zeros(2, 1);
        assert!(matches!(
            sylvester_solve(&a, &b, &rhs),
            Err(Error::SpectralCollision { .. })
        ));
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let m = random_hermitian(6, 3);
        let p = &m * &m;
        let r = psd_sqrt(&p, 1e-12).unwrap();
        assert!(frobenius(&(&r * &r - &p)) < 1e-12 * frobenius(&p).max(1.0));
    }
}
