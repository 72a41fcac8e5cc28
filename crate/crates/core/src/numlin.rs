//! Dense complex linear algebra with explicit rank tolerances.
//!
//! Every rank decision goes through singular values compared against a
//! cutoff relative to the largest singular value (or a caller-supplied
//! reference scale), never through entry-wise thresholds.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tol {
    pub rank_rel: f64,
    pub residual: f64,
    pub psd: f64,
}

impl Default for Tol {
    fn default() -> Self {
        Tol { rank_rel: 1e-9, residual: 1e-8, psd: 1e-8 }
    }
}

impl Tol {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if ok(self.rank_rel) && ok(self.residual) && ok(self.psd) {
            Ok(())
        } else {
            Err(Error::Invalid(format!("tolerances must be positive: {self:?}")))
        }
    }
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real_mat(r: usize, c: usize, data: &[f64]) -> CMat {
    CMat::from_row_iterator(r, c, data.iter().map(|&x| C64::new(x, 0.0)))
}

pub fn hstack(ms: &[&CMat]) -> CMat {
    let rows = ms.first().map_or(0, |m| m.nrows());
    let cols: usize = ms.iter().map(|m| m.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut at = 0;
    for m in ms {
        assert_eq!(m.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, at), (rows, m.ncols())).copy_from(*m);
        at += m.ncols();
    }
    out
}

pub fn vstack(ms: &[&CMat]) -> CMat {
    let cols = ms.first().map_or(0, |m| m.ncols());
    let rows: usize = ms.iter().map(|m| m.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut at = 0;
    for m in ms {
        assert_eq!(m.ncols(), cols, "vstack column mismatch");
        out.view_mut((at, 0), (m.nrows(), cols)).copy_from(*m);
        at += m.nrows();
    }
    out
}

pub fn block_diag(ms: &[&CMat]) -> CMat {
    let rows: usize = ms.iter().map(|m| m.nrows()).sum();
    let cols: usize = ms.iter().map(|m| m.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for m in ms {
        out.view_mut((r, c), m.shape()).copy_from(*m);
        r += m.nrows();
        c += m.ncols();
    }
    out
}

/// `I_d ⊗ m`, i.e. `d` copies of `m` on the diagonal.
pub fn kron_eye(d: usize, m: &CMat) -> CMat {
    let v: Vec<&CMat> = std::iter::repeat_n(m, d).collect();
    block_diag(&v)
}

/// Singular values in descending order; empty for a matrix with a zero dimension.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    svd(m).s
}

pub fn op_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn fro(m: &CMat) -> f64 {
    m.norm()
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

fn to_faer(m: &CMat) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| *m.get(i, j))
}

/// Singular values descending; `v` always spans the whole domain, `u` has
/// `min(rows, cols)` columns when the input is tall and `rows` columns otherwise.
pub(crate) fn svd(m: &CMat) -> Svd {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Svd { u: zeros(r, 0), s: Vec::new(), v: eye(c) };
    }
    let f = to_faer(m);
    let dec = if r >= c { f.thin_svd() } else { f.svd() }.expect("SVD did not converge");
    let sv = dec.S().column_vector();
    let k = r.min(c);
    let s: Vec<f64> = (0..k).map(|i| sv.get(i).re).collect();
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    let u_all = from_faer(dec.U());
    let v_all = from_faer(dec.V());
    let order = |n_cols: usize| -> Vec<usize> { idx.iter().copied().chain(k..n_cols).collect() };
    let ou = order(u_all.ncols());
    let ov = order(v_all.ncols());
    Svd {
        u: CMat::from_fn(r, ou.len(), |i, j| u_all[(i, ou[j])]),
        s: idx.iter().map(|&i| s[i]).collect(),
        v: CMat::from_fn(c, ov.len(), |i, j| v_all[(i, ov[j])]),
    }
}

fn cutoff(s: &[f64], tol: &Tol, reference: Option<f64>) -> f64 {
    let smax = s.first().copied().unwrap_or(0.0);
    tol.rank_rel * reference.map_or(smax, |r| r.max(smax))
}

fn numerical_rank(s: &[f64], cut: f64) -> usize {
    s.iter().take_while(|&&x| x > cut && x > 0.0).count()
}

/// Orthonormal-basis representation of a subspace of `C^ambient`.
#[derive(Debug, Clone)]
pub struct Subspace {
    pub ambient: usize,
    pub basis: CMat,
    pub tol: Tol,
}

impl Subspace {
    pub fn zero(ambient: usize, tol: Tol) -> Self {
        Subspace { ambient, basis: zeros(ambient, 0), tol }
    }

    pub fn full(ambient: usize, tol: Tol) -> Self {
        Subspace { ambient, basis: eye(ambient), tol }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projector(&self) -> CMat {
        &self.basis * self.basis.adjoint()
    }

    /// Largest distance of a unit vector of `self` from `other`.
    pub fn excess_over(&self, other: &Subspace) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let r = &self.basis - other.projector() * &self.basis;
        (0..r.ncols()).map(|j| r.column(j).norm()).fold(0.0, f64::max)
    }

    pub fn is_within(&self, other: &Subspace) -> bool {
        self.excess_over(other) <= self.tol.residual
    }

    /// Sine of the largest principal angle; 1 when the dimensions differ.
    pub fn distance(&self, other: &Subspace) -> f64 {
        if self.dim() != other.dim() {
            return 1.0;
        }
        self.excess_over(other).max(other.excess_over(self))
    }

    pub fn complement(&self) -> Subspace {
        let p = eye(self.ambient) - self.projector();
        range_basis_ref(&p, &self.tol, Some(1.0))
    }

    pub fn join(&self, other: &Subspace) -> Subspace {
        range_basis_ref(&hstack(&[&self.basis, &other.basis]), &self.tol, Some(1.0))
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        self.complement().join(&other.complement()).complement()
    }
}

pub fn range_basis(m: &CMat, tol: &Tol) -> Subspace {
    range_basis_ref(m, tol, None)
}

/// Column space with the cutoff measured against `max(σ_max, reference)`.
///
/// A reference scale keeps nearly-zero matrices (defects of almost-isometries)
/// from being renormalised into spurious full rank.
pub fn range_basis_ref(m: &CMat, tol: &Tol, reference: Option<f64>) -> Subspace {
    let dec = svd(m);
    let k = numerical_rank(&dec.s, cutoff(&dec.s, tol, reference));
    Subspace { ambient: m.nrows(), basis: fix_phases(dec.u.columns(0, k).into_owned()), tol: *tol }
}

pub fn null_basis(m: &CMat, tol: &Tol) -> Subspace {
    null_basis_ref(m, tol, None)
}

pub fn null_basis_ref(m: &CMat, tol: &Tol, reference: Option<f64>) -> Subspace {
    let dec = svd(m);
    let k = numerical_rank(&dec.s, cutoff(&dec.s, tol, reference));
    let c = m.ncols();
    Subspace { ambient: c, basis: fix_phases(dec.v.columns(k, c - k).into_owned()), tol: *tol }
}

/// Rotate each column so its largest-modulus entry is real and positive.
fn fix_phases(mut m: CMat) -> CMat {
    for mut col in m.column_iter_mut() {
        let pivot = col.iter().copied().fold(C64::new(0.0, 0.0), |a, b| if b.norm() > a.norm() * (1.0 + 1e-12) { b } else { a });
        if pivot.norm() > 0.0 {
            let ph = pivot.conj() / pivot.norm();
            col.iter_mut().for_each(|x| *x *= ph);
        }
    }
    m
}

pub fn rank(m: &CMat, tol: &Tol) -> usize {
    let s = singular_values(m);
    numerical_rank(&s, cutoff(&s, tol, None))
}

fn hermitian_part(p: &CMat) -> CMat {
    (p + p.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigenvalues (ascending) and eigenvectors of the Hermitian part of `p`.
pub fn herm_eig(p: &CMat) -> (Vec<f64>, CMat) {
    let n = p.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let e = to_faer(&hermitian_part(p))
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("Hermitian eigendecomposition did not converge");
    let sv = e.S().column_vector();
    let vals: Vec<f64> = (0..n).map(|i| sv.get(i).re).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
    let u = from_faer(e.U());
    let vecs = CMat::from_fn(n, n, |i, j| u[(i, idx[j])]);
    (idx.iter().map(|&k| vals[k]).collect(), vecs)
}

pub fn min_eig(p: &CMat) -> f64 {
    herm_eig(p).0.first().copied().unwrap_or(0.0)
}

fn spectral_fn(p: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = herm_eig(p);
    let n = vals.len();
    let scaled = CMat::from_fn(n, n, |i, j| vecs[(i, j)] * f(vals[j]));
    scaled * vecs.adjoint()
}

pub fn herm_sqrt(p: &CMat, tol: &Tol) -> Result<CMat> {
    let m = min_eig(p);
    if m < -tol.psd {
        return Err(Error::NotPsd { min_eig: m });
    }
    // Rounding-level eigenvalues would otherwise surface as `√ε ≈ 1e-8` noise.
    let floor = 64.0 * f64::EPSILON * (p.nrows() as f64) * op_norm(p).max(1.0);
    Ok(spectral_fn(p, |x| if x <= floor { 0.0 } else { x.sqrt() }))
}

/// Inverse square root of a positive definite matrix.
pub fn herm_inv_sqrt(p: &CMat, tol: &Tol) -> Result<CMat> {
    let m = min_eig(p);
    if m <= tol.rank_rel {
        return Err(Error::Singular);
    }
    Ok(spectral_fn(p, |x| 1.0 / x.sqrt()))
}

pub fn pinv(m: &CMat, tol: &Tol) -> CMat {
    let dec = svd(m);
    let k = numerical_rank(&dec.s, cutoff(&dec.s, tol, None));
    let mut out = zeros(m.ncols(), m.nrows());
    for j in 0..k {
        let vj = dec.v.column(j);
        let uj = dec.u.column(j);
        out += (vj * uj.adjoint()) * C64::new(1.0 / dec.s[j], 0.0);
    }
    out
}

/// Inverse via LU; fails when the matrix is numerically singular.
pub fn inv(m: &CMat) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch(format!("inverse of {:?}", m.shape())));
    }
    if m.nrows() == 0 {
        return Ok(zeros(0, 0));
    }
    let s = singular_values(m);
    let smin = *s.last().unwrap();
    // NaN singular values count as singular.
    let well_posed = smin > 1e-14 * s[0];
    if !well_posed {
        return Err(Error::Singular);
    }
    m.clone().try_inverse().ok_or(Error::Singular)
}

pub fn cond(m: &CMat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&a), Some(&b)) if b > 0.0 => a / b,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Unitary factor of the polar decomposition of a square matrix.
pub fn polar_unitary(m: &CMat) -> CMat {
    let n = m.nrows();
    if n == 0 {
        return zeros(0, 0);
    }
    let dec = svd(m);
    dec.u * dec.v.adjoint()
}

/// Unitary `U` minimising `‖U·A − B‖_F`, with the achieved residual.
pub fn procrustes_unitary(a: &CMat, b: &CMat) -> Result<(CMat, f64)> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let u = polar_unitary(&(b * a.adjoint()));
    let r = fro(&(&u * a - b));
    Ok((u, r))
}

/// Partial-isometry residual `‖M M^* M − M‖`.
pub fn pi_defect(m: &CMat) -> f64 {
    op_norm(&(m * m.adjoint() * m - m))
}

pub fn scale(m: &CMat, s: f64) -> CMat {
    m * C64::new(s, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> Tol {
        Tol::default()
    }

    fn close(a: &CMat, b: &CMat, eps: f64) -> bool {
        a.shape() == b.shape() && fro(&(a - b)) <= eps
    }

    #[test]
    fn range_of_zero_and_identity() {
        assert_eq!(range_basis(&zeros(2, 2), &t()).dim(), 0);
        assert_eq!(range_basis(&eye(3), &t()).dim(), 3);
    }

    #[test]
    fn rank_one_range_and_kernel() {
        let m = real_mat(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let r = range_basis(&m, &t());
        assert_eq!(r.dim(), 1);
        let want = Subspace { ambient: 2, basis: real_mat(2, 1, &[1.0, 1.0]) / c(2f64.sqrt(), 0.0), tol: t() };
        assert!(r.distance(&want) < 1e-12);
        let k = null_basis(&m, &t());
        let want = Subspace { ambient: 2, basis: real_mat(2, 1, &[1.0, -1.0]) / c(2f64.sqrt(), 0.0), tol: t() };
        assert!(k.distance(&want) < 1e-12);
    }

    #[test]
    fn kernel_of_identity_and_zero() {
        assert_eq!(null_basis(&eye(4), &t()).dim(), 0);
        assert_eq!(null_basis(&zeros(3, 3), &t()).dim(), 3);
    }

    #[test]
    fn kernel_of_wide_matrix() {
        let m = real_mat(1, 3, &[1.0, 0.0, 0.0]);
        let k = null_basis(&m, &t());
        assert_eq!(k.dim(), 2);
        assert!(fro(&(&m * &k.basis)) < 1e-14);
    }

    #[test]
    fn sqrt_examples() {
        assert!(close(&herm_sqrt(&eye(3), &t()).unwrap(), &eye(3), 1e-14));
        let p = real_mat(2, 2, &[4.0, 0.0, 0.0, 0.0]);
        assert!(close(&herm_sqrt(&p, &t()).unwrap(), &real_mat(2, 2, &[2.0, 0.0, 0.0, 0.0]), 1e-14));
        let q = real_mat(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert!(close(&herm_sqrt(&q, &t()).unwrap(), &q, 1e-12));
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let p = real_mat(2, 2, &[1.0, 0.0, 0.0, -0.1]);
        assert!(matches!(herm_sqrt(&p, &t()), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn pinv_examples() {
        assert!(close(&pinv(&eye(2), &t()), &eye(2), 1e-14));
        let m = real_mat(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        assert!(close(&pinv(&m, &t()), &real_mat(2, 2, &[0.5, 0.0, 0.0, 0.0]), 1e-14));
    }

    #[test]
    fn procrustes_identity_and_degenerate() {
        let a = real_mat(2, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, 1.0]);
        let (u, r) = procrustes_unitary(&a, &a).unwrap();
        assert!(close(&u, &eye(2), 1e-12) && r < 1e-12);
        let (u, r) = procrustes_unitary(&zeros(2, 3), &a).unwrap();
        assert!(close(&(u.adjoint() * &u), &eye(2), 1e-12));
        assert!((r - fro(&a)).abs() < 1e-12);
    }

    #[test]
    fn zero_sized_inputs() {
        assert_eq!(range_basis(&zeros(0, 3), &t()).dim(), 0);
        assert_eq!(null_basis(&zeros(0, 3), &t()).dim(), 3);
        assert_eq!(herm_sqrt(&zeros(0, 0), &t()).unwrap().shape(), (0, 0));
        assert_eq!(pinv(&zeros(2, 0), &t()).shape(), (0, 2));
    }

    #[test]
    fn intersection_of_planes() {
        let a = range_basis(&real_mat(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]), &t());
        let b = range_basis(&real_mat(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]), &t());
        let i = a.intersect(&b);
        assert_eq!(i.dim(), 1);
        assert!((i.basis[(1, 0)].norm() - 1.0).abs() < 1e-12);
    }
}
