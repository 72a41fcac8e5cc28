//! Row contractions `T = [T_1 … T_d] : H ⊗ C^d → H`.
//!
//! `H ⊗ C^d` is stored as `d` stacked copies of `H`, so `T` is the `n × nd`
//! block row and `z^*h = (conj(z_1)h; …; conj(z_d)h)`.

use std::collections::HashMap;

use crate::ball::{BallPoint, MatrixBallPoint};
use crate::error::{Error, Result};
use crate::numlin::{
    eye, herm_sqrt, hstack, inv, null_basis_ref, op_norm, range_basis_ref, zeros, CMat, Subspace, Tol, C64,
};

#[derive(Debug, Clone)]
pub struct RowContraction {
    pub n: usize,
    pub d: usize,
    pub blocks: Vec<CMat>,
    pub tol: Tol,
}

impl RowContraction {
    pub fn new(blocks: Vec<CMat>, tol: Tol) -> Result<Self> {
        let t = Self::unchecked(blocks, tol)?;
        let r = t.row_norm();
        if r > 1.0 + tol.residual {
            return Err(Error::NotContraction(r));
        }
        Ok(t)
    }

    /// Shape checks only; row norm is not enforced.
    pub fn unchecked(blocks: Vec<CMat>, tol: Tol) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Invalid("a row contraction needs d ≥ 1 blocks".into()));
        }
        let n = blocks[0].nrows();
        if blocks.iter().any(|b| b.shape() != (n, n)) {
            return Err(Error::ShapeMismatch("blocks must be square and of equal size".into()));
        }
        if blocks.iter().any(|b| !crate::numlin::is_finite(b)) {
            return Err(Error::Invalid("non-finite entry".into()));
        }
        Ok(RowContraction { n, d: blocks.len(), blocks, tol })
    }

    pub fn from_row(row: &CMat, d: usize, tol: Tol) -> Result<Self> {
        let n = row.nrows();
        if row.ncols() != n * d {
            return Err(Error::ShapeMismatch(format!("row of shape {:?} with d = {d}", row.shape())));
        }
        let blocks = (0..d).map(|k| row.columns(k * n, n).into_owned()).collect();
        Self::new(blocks, tol)
    }

    pub fn zero(n: usize, d: usize, tol: Tol) -> Self {
        RowContraction { n, d, blocks: vec![zeros(n, n); d], tol }
    }

    pub fn row(&self) -> CMat {
        let refs: Vec<&CMat> = self.blocks.iter().collect();
        hstack(&refs)
    }

    pub fn row_norm(&self) -> f64 {
        op_norm(&self.row())
    }

    /// `I − T^*T` on `H ⊗ C^d`.
    pub fn defect_sq(&self) -> CMat {
        let r = self.row();
        eye(self.n * self.d) - r.adjoint() * r
    }

    /// `I − T T^*` on `H`.
    pub fn defect_adj_sq(&self) -> CMat {
        let r = self.row();
        eye(self.n) - &r * r.adjoint()
    }

    pub fn defect(&self) -> Result<CMat> {
        herm_sqrt(&self.defect_sq(), &self.tol)
    }

    pub fn defect_adj(&self) -> Result<CMat> {
        herm_sqrt(&self.defect_adj_sq(), &self.tol)
    }

    /// `ran D_T`, decided on `I − T^*T` against unit scale.
    pub fn defect_range(&self) -> Subspace {
        range_basis_ref(&self.defect_sq(), &self.tol, Some(1.0))
    }

    /// `ran D_{T^*}`, decided on `I − TT^*` against unit scale.
    pub fn defect_adj_range(&self) -> Subspace {
        range_basis_ref(&self.defect_adj_sq(), &self.tol, Some(1.0))
    }

    pub fn kernel(&self) -> Subspace {
        null_basis_ref(&self.row(), &self.tol, Some(1.0))
    }

    pub fn range(&self) -> Subspace {
        range_basis_ref(&self.row(), &self.tol, Some(1.0))
    }

    /// `T z^* = Σ conj(z_k) T_k`.
    pub fn tz_star(&self, z: &BallPoint) -> CMat {
        let mut acc = zeros(self.n, self.n);
        for (b, zk) in self.blocks.iter().zip(&z.0) {
            acc += b * zk.conj();
        }
        acc
    }

    /// `z T^* = Σ z_k T_k^*`.
    pub fn z_tstar(&self, z: &BallPoint) -> CMat {
        let mut acc = zeros(self.n, self.n);
        for (b, zk) in self.blocks.iter().zip(&z.0) {
            acc += b.adjoint() * *zk;
        }
        acc
    }

    /// `(I − T z^*)^{-1}`.
    pub fn resolvent(&self, z: &BallPoint) -> Result<CMat> {
        self.check_point(z)?;
        inv(&(eye(self.n) - self.tz_star(z)))
    }

    fn check_point(&self, z: &BallPoint) -> Result<()> {
        if z.d() != self.d {
            return Err(Error::ShapeMismatch(format!("point in B^{} for d = {}", z.d(), self.d)));
        }
        Ok(())
    }

    /// Blockwise adjoint `T^* h = (T_1^* h; …; T_d^* h)`.
    pub fn adjoint_apply(&self, h: &CMat) -> CMat {
        self.row().adjoint() * h
    }

    pub fn word_apply(&self, word: &[usize]) -> Result<CMat> {
        let mut acc = eye(self.n);
        for &l in word {
            let b = self.blocks.get(l).ok_or(Error::LetterOutOfRange { letter: l, d: self.d })?;
            acc *= b;
        }
        Ok(acc)
    }

    /// `T^𝐧 = Σ_{k: n_k > 0} T_k T^{𝐧 − e_k}` with `T^0 = I`.
    pub fn sym_monomial(&self, nvec: &[usize]) -> Result<CMat> {
        if nvec.len() != self.d {
            return Err(Error::ShapeMismatch(format!("multi-index of length {} for d = {}", nvec.len(), self.d)));
        }
        let mut memo = HashMap::new();
        Ok(self.sym_rec(nvec.to_vec(), &mut memo))
    }

    fn sym_rec(&self, nvec: Vec<usize>, memo: &mut HashMap<Vec<usize>, CMat>) -> CMat {
        if nvec.iter().all(|&x| x == 0) {
            return eye(self.n);
        }
        if let Some(m) = memo.get(&nvec) {
            return m.clone();
        }
        let mut acc = zeros(self.n, self.n);
        for k in 0..self.d {
            if nvec[k] > 0 {
                let mut lower = nvec.clone();
                lower[k] -= 1;
                acc += &self.blocks[k] * self.sym_rec(lower, memo);
            }
        }
        memo.insert(nvec, acc.clone());
        acc
    }

    pub fn is_partial_isometry(&self) -> bool {
        crate::numlin::pi_defect(&self.row()) <= self.tol.residual
    }

    pub fn is_commuting(&self) -> bool {
        self.commutator_norm() <= self.tol.residual
    }

    pub fn commutator_norm(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.d {
            for k in j + 1..self.d {
                let c = &self.blocks[j] * &self.blocks[k] - &self.blocks[k] * &self.blocks[j];
                worst = worst.max(op_norm(&c));
            }
        }
        worst
    }

    /// `U T U^*` blockwise.
    pub fn conjugate(&self, u: &CMat) -> RowContraction {
        let blocks = self.blocks.iter().map(|b| u * b * u.adjoint()).collect();
        RowContraction { n: self.n, d: self.d, blocks, tol: self.tol }
    }

    pub fn iso_pure_decompose(&self) -> Result<IsoPureParts> {
        let row = self.row();
        // H₀ = ker(I − T^*T): right singular vectors with 1 − σ² below the rank cutoff.
        let dec = crate::numlin::svd(&row);
        let k = dec.s.iter().take_while(|&&s| 1.0 - s * s <= self.tol.rank_rel).count();
        let h0 = Subspace { ambient: self.n * self.d, basis: dec.v.columns(0, k).into_owned(), tol: self.tol };
        let v_row = &row * h0.projector();
        let v = RowContraction::from_row(&v_row, self.d, self.tol)?;
        let c = RowContraction { n: self.n, d: self.d, blocks: v.blocks.iter().zip(&self.blocks).map(|(a, b)| a - b).collect(), tol: self.tol };
        let final_space = range_basis_ref(&v_row, &self.tol, Some(1.0));
        Ok(IsoPureParts { v, c, initial_space: h0, final_space })
    }

    /// `(I − ZV^*)(ran V ⊗ C^m)` with `ZV^* = Σ V_k^* ⊗ Z_k`.
    pub fn restricted_range_space(&self, z: &MatrixBallPoint) -> Result<Subspace> {
        let defect = crate::numlin::pi_defect(&self.row());
        if defect > self.tol.residual {
            return Err(Error::NotPartialIsometry(defect));
        }
        if z.blocks.len() != self.d {
            return Err(Error::ShapeMismatch("matrix point has wrong d".into()));
        }
        let m = z.m;
        let mut zv = zeros(self.n * m, self.n * m);
        for (vk, zk) in self.blocks.iter().zip(&z.blocks) {
            zv += vk.adjoint().kronecker(zk);
        }
        let q = self.range().basis.kronecker(&eye(m));
        let gen = (eye(self.n * m) - zv) * q;
        Ok(range_basis_ref(&gen, &self.tol, Some(1.0)))
    }
}

/// Stack `conj(z_k) M` for `k = 1..d`.
pub fn apply_point_adjoint(z: &BallPoint, m: &CMat) -> CMat {
    let (n, p) = m.shape();
    let mut out = zeros(n * z.d(), p);
    for (k, zk) in z.0.iter().enumerate() {
        out.view_mut((k * n, 0), (n, p)).copy_from(&(m * zk.conj()));
    }
    out
}

/// Contract the `d` stacked blocks of `x` by the row `z`: `Σ z_k x_k`.
pub fn contract_row(z: &BallPoint, x: &CMat) -> CMat {
    let d = z.d();
    let n = x.nrows() / d;
    let mut acc = zeros(n, x.ncols());
    for (k, zk) in z.0.iter().enumerate() {
        acc += x.rows(k * n, n) * *zk;
    }
    acc
}

/// All multi-indices in `N^d` with total degree at most `max`.
pub fn multi_indices(d: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; d]];
    let mut frontier = vec![vec![0; d]];
    for _ in 0..max {
        let mut next = Vec::new();
        for m in &frontier {
            // Raise only from the last nonzero slot onward so each index appears once.
            let start = m.iter().rposition(|&x| x > 0).unwrap_or(0);
            for k in start..d {
                let mut m2 = m.clone();
                m2[k] += 1;
                next.push(m2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[derive(Debug, Clone)]
pub struct IsoPureParts {
    pub v: RowContraction,
    pub c: RowContraction,
    pub initial_space: Subspace,
    pub final_space: Subspace,
}

impl IsoPureParts {
    /// Largest of `‖V − C − T‖`, `‖VV^*V − V‖`, `‖P_{ran V} C‖`, `‖C P_{H₀}‖`.
    pub fn residual(&self, t: &RowContraction) -> f64 {
        let v = self.v.row();
        let c = self.c.row();
        let a = op_norm(&(&v - &c - t.row()));
        let b = crate::numlin::pi_defect(&v);
        let p = op_norm(&(self.final_space.projector() * &c));
        let q = op_norm(&(&c * self.initial_space.projector()));
        a.max(b).max(p).max(q)
    }
}

pub fn scalar(t: C64) -> CMat {
    CMat::from_element(1, 1, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::{c, fro, real_mat};

    fn tol() -> Tol {
        Tol::default()
    }

    fn s(x: f64) -> CMat {
        scalar(c(x, 0.0))
    }

    #[test]
    fn row_norm_examples() {
        assert_eq!(RowContraction::zero(2, 3, tol()).row_norm(), 0.0);
        let r = 0.5f64.sqrt();
        let t = RowContraction::new(vec![s(r), s(r)], tol()).unwrap();
        assert!((t.row_norm() - 1.0).abs() < 1e-14);
        assert!((RowContraction::new(vec![s(0.5)], tol()).unwrap().row_norm() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn defect_of_coisometric_pair() {
        let r = 0.5f64.sqrt();
        let t = RowContraction::new(vec![s(r), s(r)], tol()).unwrap();
        assert!(fro(&t.defect_adj().unwrap()) < 1e-7);
        let want = real_mat(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert!(fro(&(t.defect().unwrap() - want)) < 1e-7);
        assert_eq!(t.defect_adj_range().dim(), 0);
        assert_eq!(t.defect_range().dim(), 1);
    }

    #[test]
    fn scalar_defects_and_resolvent() {
        let t = RowContraction::new(vec![scalar(c(0.3, 0.4))], tol()).unwrap();
        let want = (1.0f64 - 0.25).sqrt();
        assert!((t.defect().unwrap()[(0, 0)].re - want).abs() < 1e-14);
        assert!((t.defect_adj().unwrap()[(0, 0)].re - want).abs() < 1e-14);
        let z = BallPoint(vec![c(0.2, -0.5)]);
        let got = t.resolvent(&z).unwrap()[(0, 0)];
        let oracle = 1.0 / (c(1.0, 0.0) - c(0.3, 0.4) * z.0[0].conj());
        assert!((got - oracle).norm() < 1e-14);
        assert!(fro(&(t.resolvent(&BallPoint::origin(1)).unwrap() - eye(1))) == 0.0);
    }

    #[test]
    fn point_adjoint_conjugates() {
        let z = BallPoint(vec![c(0.5, 0.0), c(0.0, 1.0 / 3.0)]);
        let out = apply_point_adjoint(&z, &eye(1));
        assert!((out[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((out[(1, 0)] - c(0.0, -1.0 / 3.0)).norm() < 1e-15);
        assert!(fro(&apply_point_adjoint(&BallPoint::origin(2), &eye(2))) == 0.0);
    }

    #[test]
    fn words_and_symmetrized_monomials() {
        let a = real_mat(2, 2, &[0.0, 0.3, 0.0, 0.0]);
        let b = real_mat(2, 2, &[0.0, 0.0, 0.3, 0.0]);
        let t = RowContraction::new(vec![a.clone(), b.clone()], tol()).unwrap();
        assert_eq!(t.word_apply(&[]).unwrap(), eye(2));
        assert!(matches!(t.word_apply(&[2]), Err(Error::LetterOutOfRange { .. })));
        let m = t.sym_monomial(&[1, 1]).unwrap();
        assert!(fro(&(m - (&a * &b + &b * &a))) < 1e-15);
        assert_eq!(t.sym_monomial(&[0, 0]).unwrap(), eye(2));
        let u = RowContraction::new(vec![s(0.5)], tol()).unwrap();
        assert!((u.sym_monomial(&[3]).unwrap()[(0, 0)].re - 0.125).abs() < 1e-15);
        assert!((u.word_apply(&[0, 0]).unwrap()[(0, 0)].re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn commuting_checks() {
        assert!(RowContraction::zero(2, 2, tol()).is_commuting());
        assert!(RowContraction::zero(2, 2, tol()).is_partial_isometry());
        let a = real_mat(2, 2, &[0.0, 0.5, 0.0, 0.0]);
        let b = real_mat(2, 2, &[0.0, 0.0, 0.5, 0.0]);
        assert!(!RowContraction::new(vec![a, b], tol()).unwrap().is_commuting());
        assert!(RowContraction::new(vec![s(0.3), s(0.6)], tol()).unwrap().is_commuting());
    }

    #[test]
    fn decomposition_examples() {
        let t = RowContraction::new(vec![s(0.5)], tol()).unwrap();
        let p = t.iso_pure_decompose().unwrap();
        assert_eq!(p.initial_space.dim(), 0);
        assert!(fro(&p.v.row()) == 0.0);
        assert!((p.c.row()[(0, 0)].re + 0.5).abs() < 1e-15);

        let pi = RowContraction::new(vec![real_mat(2, 2, &[0.0, 1.0, 0.0, 0.0]), zeros(2, 2)], tol()).unwrap();
        let p = pi.iso_pure_decompose().unwrap();
        assert!(fro(&(p.v.row() - pi.row())) < 1e-12 && fro(&p.c.row()) < 1e-12);

        let z = RowContraction::zero(3, 2, tol());
        let p = z.iso_pure_decompose().unwrap();
        assert!(fro(&p.v.row()) == 0.0 && fro(&p.c.row()) == 0.0);
    }

    #[test]
    fn restricted_range_examples() {
        let v = RowContraction::new(vec![real_mat(2, 2, &[0.0, 1.0, 0.0, 0.0]), zeros(2, 2)], tol()).unwrap();
        let r0 = v.restricted_range_space(&MatrixBallPoint::scalar(&BallPoint::origin(2))).unwrap();
        assert!(r0.distance(&v.range()) < 1e-12);
        let zero = RowContraction::zero(2, 2, tol());
        let z = MatrixBallPoint::scalar(&BallPoint(vec![c(0.3, 0.0), c(0.1, 0.2)]));
        assert_eq!(zero.restricted_range_space(&z).unwrap().dim(), 0);
        let t = RowContraction::new(vec![s(0.5)], tol()).unwrap();
        assert!(matches!(t.restricted_range_space(&MatrixBallPoint::scalar(&BallPoint::origin(1))), Err(Error::NotPartialIsometry(_))));
    }

    #[test]
    fn multi_index_enumeration() {
        let m = multi_indices(2, 2);
        assert_eq!(m.len(), 6);
        let mut sorted = m.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 6);
        assert_eq!(multi_indices(3, 3).len(), 20);
    }
}
