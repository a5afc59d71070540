//! Dense complex operators and the spectral primitives.
//!
//! Everything in this crate works with `CMat = DMatrix<Complex64>`. The one
//! numerical primitive is the hermitian eigendecomposition; unitary and
//! general normal matrices are diagonalized through their commuting hermitian
//! and anti-hermitian parts, so no nonsymmetric eigensolver is ever needed.

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;

use crate::error::{Result, SwError};
use crate::tol;

pub type CMat = DMatrix<C64>;

/// Structural claim attached to an [`Operator`]. Claims are verified at
/// construction time, never assumed.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Tag {
    General,
    Hermitian,
    AntiHermitian,
    Unitary,
    Projector,
}

/// A square complex matrix with a checked structural tag.
///
/// Most library entry points accept a bare [`CMat`] and validate the
/// structure they need; `Operator` is for callers who want the claim checked
/// once and carried along. It derefs to the underlying matrix.
#[derive(Clone, Debug)]
pub struct Operator {
    mat: CMat,
    tag: Tag,
}

impl Operator {
    pub fn general(mat: CMat) -> Result<Self> {
        check_square(&mat)?;
        Ok(Self { mat, tag: Tag::General })
    }

    pub fn hermitian(mat: CMat) -> Result<Self> {
        validate_hermitian(&mat, "matrix")?;
        Ok(Self { mat, tag: Tag::Hermitian })
    }

    pub fn anti_hermitian(mat: CMat) -> Result<Self> {
        validate_anti_hermitian(&mat, "matrix")?;
        Ok(Self { mat, tag: Tag::AntiHermitian })
    }

    pub fn unitary(mat: CMat) -> Result<Self> {
        validate_unitary(&mat, "matrix")?;
        Ok(Self { mat, tag: Tag::Unitary })
    }

    pub fn projector(mat: CMat) -> Result<Self> {
        validate_projector(&mat, "matrix")?;
        Ok(Self { mat, tag: Tag::Projector })
    }

    pub fn tag(&self) -> Tag {
        self.tag
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }
}

impl std::ops::Deref for Operator {
    type Target = CMat;

    fn deref(&self) -> &CMat {
        &self.mat
    }
}

/// `max(1, ||X||_F / dim)`: the relative scale with floor one used by all
/// structural tolerances.
pub fn scale_of(x: &CMat) -> f64 {
    tol::scale_from(x.norm(), x.nrows())
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

/// Commutator `[a, b]`.
pub fn comm(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Hermitian part `(x + x^dag) / 2`.
pub fn herm_part(x: &CMat) -> CMat {
    (x + x.adjoint()).scale(0.5)
}

/// Anti-hermitian part `(x - x^dag) / 2`.
pub fn antiherm_part(x: &CMat) -> CMat {
    (x - x.adjoint()).scale(0.5)
}

fn check_square(x: &CMat) -> Result<()> {
    if x.nrows() != x.ncols() {
        return Err(SwError::NotSquare { rows: x.nrows(), cols: x.ncols() });
    }
    Ok(())
}

/// Largest entrywise deviation from hermiticity, `max |x_ij - conj(x_ji)|`.
pub fn hermiticity_residual(x: &CMat) -> f64 {
    let n = x.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (x[(i, j)] - x[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

pub fn validate_hermitian(x: &CMat, role: &'static str) -> Result<()> {
    check_square(x)?;
    let residual = hermiticity_residual(x);
    let tol = tol::TOL_STRUCT * scale_of(x);
    if residual > tol {
        return Err(SwError::NotHermitian { role, residual, tol });
    }
    Ok(())
}

pub fn validate_anti_hermitian(x: &CMat, role: &'static str) -> Result<()> {
    check_square(x)?;
    let n = x.nrows();
    let mut residual = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (x[(i, j)] + x[(j, i)].conj()).norm();
            residual = residual.max(d);
        }
    }
    let tol = tol::TOL_STRUCT * scale_of(x);
    if residual > tol {
        return Err(SwError::NotAntiHermitian { role, residual, tol });
    }
    Ok(())
}

pub fn validate_unitary(x: &CMat, role: &'static str) -> Result<()> {
    check_square(x)?;
    let n = x.nrows();
    let residual = (x * x.adjoint() - identity(n)).norm();
    let tol = tol::TOL_STRUCT * scale_of(x) * (n as f64).sqrt().max(1.0);
    if residual > tol {
        return Err(SwError::NotUnitary { role, residual, tol });
    }
    Ok(())
}

pub fn validate_projector(x: &CMat, role: &'static str) -> Result<()> {
    check_square(x)?;
    let herm = hermiticity_residual(x);
    let idem = (x * x - x).norm();
    let residual = herm.max(idem);
    let tol = tol::TOL_STRUCT * scale_of(x) * (x.nrows() as f64).sqrt().max(1.0);
    if residual > tol {
        return Err(SwError::NotProjector { role, residual, tol });
    }
    Ok(())
}

/// Eigendecomposition of a hermitian matrix: ascending real eigenvalues and
/// a unitary matrix whose k-th column is the k-th eigenvector.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Sum of `v v^dag` over the selected eigenvector columns.
    pub fn projector(&self, indices: &[usize]) -> CMat {
        let n = self.dim();
        let mut p = CMat::zeros(n, n);
        for &k in indices {
            let col = self.vectors.column(k);
            for i in 0..n {
                for j in 0..n {
                    p[(i, j)] += col[i] * col[j].conj();
                }
            }
        }
        p
    }

    /// Basis matrix (dim x r) made of the selected eigenvector columns.
    pub fn basis(&self, indices: &[usize]) -> CMat {
        let n = self.dim();
        let mut b = CMat::zeros(n, indices.len());
        for (c, &k) in indices.iter().enumerate() {
            b.set_column(c, &self.vectors.column(k));
        }
        b
    }

    /// `||X V - V diag(values)||_F`, the decomposition residual against `x`.
    pub fn residual(&self, x: &CMat) -> f64 {
        let mut vd = self.vectors.clone();
        for k in 0..self.dim() {
            let s = C64::new(self.values[k], 0.0);
            for i in 0..self.dim() {
                vd[(i, k)] *= s;
            }
        }
        (x * &self.vectors - vd).norm()
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
///
/// The input must be hermitian within `TOL_STRUCT * scale`; the result is
/// verified to reconstruct the input within `TOL_EIG * scale`.
pub fn spectral_decompose(x: &CMat) -> Result<EigenSystem> {
    validate_hermitian(x, "input")?;
    let n = x.nrows();
    if n == 0 {
        return Ok(EigenSystem { values: vec![], vectors: CMat::zeros(0, 0) });
    }
    // symmetric_eigen treats the matrix as hermitian; symmetrize first so the
    // tolerated hermiticity slack cannot leak into the decomposition.
    let xh = herm_part(x);
    let se = xh.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let mut values: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (c, &k) in order.iter().enumerate() {
        vectors.set_column(c, &se.eigenvectors.column(k));
    }
    jacobi_refine(&xh, &mut values, &mut vectors);
    let eig = EigenSystem { values, vectors };
    let res = eig.residual(x);
    let tol = tol::TOL_EIG * scale_of(x) * (n as f64);
    if res > tol {
        return Err(SwError::Validation(format!(
            "hermitian eigendecomposition residual {res:.3e} exceeds {tol:.3e}"
        )));
    }
    Ok(eig)
}

/// Jacobi sweeps on the almost-diagonal `V^dag X V`, accumulated into `V`.
///
/// The QR eigensolver occasionally leaves one rotation pair converged only to
/// ~1e-9; from an almost-diagonal start each sweep shrinks the off-diagonal
/// quadratically, so a few sweeps reach machine precision for every pair.
fn jacobi_refine(xh: &CMat, values: &mut [f64], vectors: &mut CMat) {
    let n = values.len();
    if n < 2 {
        return;
    }
    let mut d = vectors.adjoint() * xh * &*vectors;
    let floor = f64::EPSILON * scale_of(xh);
    for _ in 0..3 {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let b = d[(p, q)];
                let r = b.norm();
                if r <= floor {
                    continue;
                }
                rotated = true;
                let u = b.unscale(r);
                let tau = (d[(q, q)].re - d[(p, p)].re) / (2.0 * r);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                let cu = u.conj().scale(cs);
                let su = u.conj().scale(sn);
                for i in 0..n {
                    let vp = vectors[(i, p)];
                    let vq = vectors[(i, q)];
                    vectors[(i, p)] = vp.scale(cs) - vq * su;
                    vectors[(i, q)] = vp.scale(sn) + vq * cu;
                }
                for i in 0..n {
                    let dp = d[(i, p)];
                    let dq = d[(i, q)];
                    d[(i, p)] = dp.scale(cs) - dq * su;
                    d[(i, q)] = dp.scale(sn) + dq * cu;
                }
                for j in 0..n {
                    let dp = d[(p, j)];
                    let dq = d[(q, j)];
                    d[(p, j)] = dp.scale(cs) - dq * u.scale(sn);
                    d[(q, j)] = dp.scale(sn) + dq * u.scale(cs);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    for k in 0..n {
        values[k] = d[(k, k)].re;
    }
    // rotations can nudge near-degenerate values across each other
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    if order.iter().enumerate().any(|(c, &k)| c != k) {
        let sorted: Vec<f64> = order.iter().map(|&k| values[k]).collect();
        let mut perm = CMat::zeros(n, n);
        for (c, &k) in order.iter().enumerate() {
            perm.set_column(c, &vectors.column(k));
        }
        values.copy_from_slice(&sorted);
        *vectors = perm;
    }
}

/// Eigendecomposition of a normal matrix: complex eigenvalues and a unitary
/// eigenvector matrix.
#[derive(Clone, Debug)]
pub struct NormalEigen {
    pub values: Vec<C64>,
    pub vectors: CMat,
}

/// Mixing angles for the joint diagonalization of the hermitian and
/// anti-hermitian parts. Retried in order until the residual check passes;
/// a generic irrational angle separates any spectrum that the previous ones
/// accidentally collapsed.
const JOINT_GAMMAS: [f64; 3] = [0.618_033_988_749_894_9, 0.239_342_715_816_39, 0.058_027_558_443_51];

/// Diagonalize a normal matrix through its commuting hermitian part
/// `A = (X + X^dag)/2` and anti-hermitian part (as `B = (X - X^dag)/2i`):
/// the hermitian combination `A + gamma B` is diagonalized and the basis is
/// certified against `X` itself.
pub fn normal_decompose(x: &CMat) -> Result<NormalEigen> {
    check_square(x)?;
    let n = x.nrows();
    let fro = x.norm();
    let comm_res = (x * x.adjoint() - x.adjoint() * x).norm();
    let sc2 = tol::scale_from(fro * fro, n * n.max(1));
    if comm_res > tol::TOL_STRUCT * sc2 * (n as f64) {
        return Err(SwError::NotNormal { residual: comm_res, tol: tol::TOL_STRUCT * sc2 * (n as f64) });
    }
    if n == 0 {
        return Ok(NormalEigen { values: vec![], vectors: CMat::zeros(0, 0) });
    }
    let a = herm_part(x);
    let b = antiherm_part(x).map(|z| z * C64::new(0.0, -1.0));
    let tol_res = tol::TOL_EIG * scale_of(x) * (n as f64);
    let mut best: Option<(f64, NormalEigen)> = None;
    for &gamma in &JOINT_GAMMAS {
        let h = &a + b.scale(gamma);
        let se = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&p, &q| se.eigenvalues[p].partial_cmp(&se.eigenvalues[q]).unwrap());
        let mut vectors = CMat::zeros(n, n);
        for (c, &k) in order.iter().enumerate() {
            vectors.set_column(c, &se.eigenvectors.column(k));
        }
        let xv = x * &vectors;
        let values: Vec<C64> = (0..n)
            .map(|k| {
                let col = vectors.column(k);
                xv.column(k).iter().zip(col.iter()).map(|(y, v)| v.conj() * y).sum()
            })
            .collect();
        let mut res = 0.0f64;
        for k in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                acc += (xv[(i, k)] - values[k] * vectors[(i, k)]).norm_sqr();
            }
            res = res.max(acc.sqrt());
        }
        let cand = NormalEigen { values, vectors };
        if res <= tol_res {
            return Ok(cand);
        }
        if best.as_ref().map_or(true, |(r, _)| res < *r) {
            best = Some((res, cand));
        }
    }
    let (res, _) = best.unwrap();
    Err(SwError::Validation(format!(
        "joint diagonalization of a normal matrix did not certify: residual {res:.3e} > {tol_res:.3e}"
    )))
}

/// Matrix functions available through [`normal_matrix_function`]. Both take
/// the principal branch, with the cut on the negative real axis.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum MatrixFunction {
    PrincipalSqrt,
    PrincipalLog,
}

/// Apply a principal-branch scalar function to a normal matrix.
///
/// Every eigenvalue must stay at least `TOL_BRANCH` radians away from the
/// branch cut; for the logarithm, zero eigenvalues are refused as sitting on
/// the branch point.
pub fn normal_matrix_function(x: &CMat, f: MatrixFunction) -> Result<CMat> {
    let eig = normal_decompose(x)?;
    let mut fvals = Vec::with_capacity(eig.values.len());
    for &lam in &eig.values {
        let r = lam.norm();
        if r < 1e-300 {
            match f {
                MatrixFunction::PrincipalSqrt => {
                    fvals.push(C64::new(0.0, 0.0));
                    continue;
                }
                MatrixFunction::PrincipalLog => {
                    return Err(SwError::BranchCutViolation { arg: std::f64::consts::PI, tol: tol::TOL_BRANCH });
                }
            }
        }
        let arg = lam.arg();
        if std::f64::consts::PI - arg.abs() <= tol::TOL_BRANCH {
            return Err(SwError::BranchCutViolation { arg, tol: tol::TOL_BRANCH });
        }
        fvals.push(match f {
            MatrixFunction::PrincipalSqrt => C64::from_polar(r.sqrt(), 0.5 * arg),
            MatrixFunction::PrincipalLog => C64::new(r.ln(), arg),
        });
    }
    let n = x.nrows();
    let mut vf = eig.vectors.clone();
    for k in 0..n {
        for i in 0..n {
            vf[(i, k)] *= fvals[k];
        }
    }
    Ok(vf * eig.vectors.adjoint())
}

/// Split `x` into its block-diagonal and block-off-diagonal parts relative
/// to a projector: `diag = P x P + Q x Q`, `off = P x Q + Q x P` with
/// `Q = I - P`. The two parts sum back to `x` up to rounding.
pub fn block_split(x: &CMat, p: &CMat) -> Result<(CMat, CMat)> {
    check_square(x)?;
    validate_projector(p, "projector")?;
    if p.nrows() != x.nrows() {
        return Err(SwError::DimensionMismatch { expected: x.nrows(), got: p.nrows() });
    }
    let q = identity(x.nrows()) - p;
    let diag = p * x * p + &q * x * &q;
    let off = p * x * &q + &q * x * p;
    Ok((diag, off))
}

/// Operator (spectral) norm: the largest singular value, computed as
/// `sqrt(lambda_max(X^dag X))`.
pub fn operator_norm(x: &CMat) -> f64 {
    let n = x.nrows().min(x.ncols());
    if n == 0 {
        return 0.0;
    }
    let gram = x.adjoint() * x;
    let se = herm_part(&gram).symmetric_eigen();
    let mut top = 0.0f64;
    for v in se.eigenvalues.iter() {
        top = top.max(*v);
    }
    top.max(0.0).sqrt()
}

/// `exp(S)` for anti-hermitian `S`, through the hermitian matrix `iS`.
/// The result is unitary up to rounding.
pub fn exp_anti_hermitian(s: &CMat) -> Result<CMat> {
    validate_anti_hermitian(s, "generator")?;
    let n = s.nrows();
    let h = s.map(|z| z * C64::new(0.0, 1.0));
    let se = herm_part(&h).symmetric_eigen();
    let mut vf = se.eigenvectors.clone();
    for k in 0..n {
        let phase = C64::from_polar(1.0, -se.eigenvalues[k]);
        for i in 0..n {
            vf[(i, k)] *= phase;
        }
    }
    Ok(vf * se.eigenvectors.adjoint())
}

/// Kronecker product, row-major convention: the left factor varies slowest.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}
