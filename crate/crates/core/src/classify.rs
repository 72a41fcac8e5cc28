//! CNC, CCNC and quasi-extreme classification.

use serde::Serialize;

use crate::ball::{BallPoint, MatrixBallPoint, Sampler};
use crate::error::{Error, Result};
use crate::numlin::{hstack, range_basis_ref, rank, CMat, Subspace};
use crate::par;
use crate::rowop::{apply_point_adjoint, multi_indices, RowContraction};

/// Smallest subspace containing `seed` and invariant under every `T_k`.
pub fn free_krylov_closure(t: &RowContraction, seed: &Subspace) -> Subspace {
    let mut s = seed.clone();
    loop {
        if s.dim() == 0 || s.dim() == t.n {
            return s;
        }
        let mut parts = vec![s.basis.clone()];
        parts.extend(t.blocks.iter().map(|b| b * &s.basis));
        let refs: Vec<&CMat> = parts.iter().collect();
        let next = range_basis_ref(&hstack(&refs), &t.tol, Some(1.0));
        if next.dim() == s.dim() {
            return s;
        }
        s = next;
    }
}

pub fn cnc_span(t: &RowContraction) -> Subspace {
    free_krylov_closure(t, &t.defect_adj_range())
}

pub fn is_cnc(t: &RowContraction) -> bool {
    cnc_span(t).dim() == t.n
}

/// Span of a family of generator blocks with a saturation check: the rank must
/// not grow over the last tenth of the samples.
fn saturated_span(blocks: &[CMat], rows: usize, t: &RowContraction) -> Result<Subspace> {
    if blocks.is_empty() || blocks[0].ncols() == 0 {
        return Ok(Subspace::zero(rows, t.tol));
    }
    let refs: Vec<&CMat> = blocks.iter().collect();
    let all = hstack(&refs);
    let full = range_basis_ref(&all, &t.tol, Some(1.0));
    let cut = blocks.len() - (blocks.len() / 10).max(1);
    if cut >= 1 && full.dim() < rows {
        let head = range_basis_ref(&hstack(&refs[..cut]), &t.tol, Some(1.0));
        if head.dim() < full.dim() {
            return Err(Error::SamplerExhausted(blocks.len()));
        }
    }
    Ok(full)
}

fn resolvent_images(t: &RowContraction, q: &CMat, points: &[BallPoint]) -> Result<Vec<CMat>> {
    par::map(points, |z| t.resolvent(z).map(|r| r * q)).into_iter().collect()
}

/// `⋁_z (I − Tz^*)^{-1} ran D_{T^*}` over the sampler's points.
pub fn ccnc_span(t: &RowContraction, sampler: &Sampler) -> Result<Subspace> {
    let q = t.defect_adj_range().basis;
    if q.ncols() == 0 || q.ncols() == t.n {
        return Ok(range_basis_ref(&q, &t.tol, Some(1.0)));
    }
    let imgs = resolvent_images(t, &q, &sampler.points(t.d))?;
    saturated_span(&imgs, t.n, t)
}

/// Span of `T^𝐧 ran D_{T^*}` over `|𝐧| ≤ n`.
pub fn ccnc_span_oracle(t: &RowContraction) -> Result<Subspace> {
    let q = t.defect_adj_range().basis;
    let mut parts = Vec::new();
    for m in multi_indices(t.d, t.n) {
        parts.push(t.sym_monomial(&m)? * &q);
    }
    let refs: Vec<&CMat> = parts.iter().collect();
    Ok(range_basis_ref(&hstack(&refs), &t.tol, Some(1.0)))
}

pub fn is_ccnc(t: &RowContraction, sampler: &Sampler) -> Result<bool> {
    Ok(ccnc_span(t, sampler)?.dim() == t.n)
}

/// `⋁_z z^*(I − Tz^*)^{-1} ran D_{T^*} ⊆ C^{nd}`.
pub fn qe_span(t: &RowContraction, sampler: &Sampler) -> Result<Subspace> {
    let q = t.defect_adj_range().basis;
    let points = sampler.points(t.d);
    let imgs: Vec<CMat> = resolvent_images(t, &q, &points)?
        .iter()
        .zip(&points)
        .map(|(m, z)| apply_point_adjoint(z, m))
        .collect();
    saturated_span(&imgs, t.n * t.d, t)
}

/// `(ker T)^⊥ ⊆ qe_span(T)`.
pub fn qe_condition(t: &RowContraction, sampler: &Sampler) -> Result<bool> {
    let init = range_basis_ref(&t.row().adjoint(), &t.tol, Some(1.0));
    Ok(init.is_within(&qe_span(t, sampler)?))
}

pub fn is_qe(t: &RowContraction, sampler: &Sampler) -> Result<bool> {
    Ok(is_ccnc(t, sampler)? && qe_condition(t, sampler)?)
}

/// Largest co-invariant subspace on which `V^*` is isometric, for a row partial isometry.
pub fn max_isometric_coinvariant(v: &RowContraction) -> Result<Subspace> {
    let defect = crate::numlin::pi_defect(&v.row());
    if defect > v.tol.residual {
        return Err(Error::NotPartialIsometry(defect));
    }
    let h = free_krylov_closure(v, &v.range().complement()).complement();
    debug_assert!(coinvariance_residual(v, &h) <= 10.0 * v.tol.residual);
    Ok(h)
}

/// Largest of `‖(I − P_H)V_k^*h‖` and `|‖V^*h‖ − 1|` over basis vectors `h` of `H`.
pub fn coinvariance_residual(v: &RowContraction, h: &Subspace) -> f64 {
    if h.dim() == 0 {
        return 0.0;
    }
    let p = h.projector();
    let mut worst: f64 = 0.0;
    for b in &v.blocks {
        let img = b.adjoint() * &h.basis;
        worst = worst.max(crate::numlin::op_norm(&(&img - &p * &img)));
    }
    let vs = v.adjoint_apply(&h.basis);
    for j in 0..vs.ncols() {
        worst = worst.max((vs.column(j).norm() - 1.0).abs());
    }
    worst
}

/// `⋂_z ra(V − z)` over scalar sample points.
pub fn restricted_range_intersection(v: &RowContraction, points: &[BallPoint]) -> Result<Subspace> {
    let spaces: Vec<Result<Subspace>> = par::map(points, |z| v.restricted_range_space(&MatrixBallPoint::scalar(z)));
    let mut acc = Subspace::full(v.n, v.tol);
    for s in spaces {
        acc = acc.intersect(&s?);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub is_cnc: bool,
    pub is_ccnc: bool,
    pub is_qe: bool,
    pub is_commuting: bool,
    pub cnc_dim: usize,
    pub ccnc_dim: usize,
    pub qe_dim: usize,
    pub hprime_dim: usize,
    #[serde(skip)]
    pub cnc_span: Subspace,
    #[serde(skip)]
    pub ccnc_span: Subspace,
    #[serde(skip)]
    pub qe_span: Subspace,
    #[serde(skip)]
    pub hprime: Subspace,
}

pub fn classify(t: &RowContraction, sampler: &Sampler) -> Result<ClassificationReport> {
    let cnc = cnc_span(t);
    let ccnc = ccnc_span(t, sampler)?;
    let qe = qe_span(t, sampler)?;
    let init = range_basis_ref(&t.row().adjoint(), &t.tol, Some(1.0));
    let is_ccnc = ccnc.dim() == t.n;
    let is_qe = is_ccnc && init.is_within(&qe);
    let hprime = cnc.complement();
    Ok(ClassificationReport {
        is_cnc: cnc.dim() == t.n,
        is_ccnc,
        is_qe,
        is_commuting: t.is_commuting(),
        cnc_dim: cnc.dim(),
        ccnc_dim: ccnc.dim(),
        qe_dim: qe.dim(),
        hprime_dim: hprime.dim(),
        cnc_span: cnc,
        ccnc_span: ccnc,
        qe_span: qe,
        hprime,
    })
}

/// Integer rank of the stacked resolvent images, for cross-checks.
pub fn sampled_rank(t: &RowContraction, sampler: &Sampler) -> Result<usize> {
    let q = t.defect_adj_range().basis;
    if q.ncols() == 0 {
        return Ok(0);
    }
    let imgs = resolvent_images(t, &q, &sampler.points(t.d))?;
    let refs: Vec<&CMat> = imgs.iter().collect();
    Ok(rank(&hstack(&refs), &t.tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::{c, eye, real_mat, zeros, Tol};
    use crate::rowop::scalar;

    fn tol() -> Tol {
        Tol::default()
    }

    fn s(x: f64) -> CMat {
        scalar(c(x, 0.0))
    }

    fn smp() -> Sampler {
        Sampler::default()
    }

    fn coisometric_pair() -> RowContraction {
        let r = 0.5f64.sqrt();
        RowContraction::new(vec![s(r), s(r)], tol()).unwrap()
    }

    #[test]
    fn krylov_examples() {
        let shift = real_mat(3, 3, &[0.0, 0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0]);
        let t = RowContraction::new(vec![shift], tol()).unwrap();
        let e3 = Subspace { ambient: 3, basis: real_mat(3, 1, &[0.0, 0.0, 1.0]), tol: tol() };
        assert_eq!(free_krylov_closure(&t, &e3).dim(), 3);
        assert_eq!(free_krylov_closure(&t, &Subspace::zero(3, tol())).dim(), 0);
        assert_eq!(free_krylov_closure(&t, &Subspace::full(3, tol())).dim(), 3);
    }

    #[test]
    fn cnc_examples() {
        assert!(!is_cnc(&coisometric_pair()));
        assert!(is_cnc(&RowContraction::new(vec![s(0.5)], tol()).unwrap()));
        assert!(is_cnc(&RowContraction::zero(3, 2, tol())));
    }

    #[test]
    fn ccnc_examples() {
        let z = RowContraction::zero(3, 2, tol());
        assert_eq!(ccnc_span(&z, &smp()).unwrap().dim(), 3);
        assert!(!is_ccnc(&coisometric_pair(), &smp()).unwrap());
        assert!(is_ccnc(&RowContraction::new(vec![s(0.5)], tol()).unwrap(), &smp()).unwrap());
    }

    #[test]
    fn single_variable_ccnc_equals_cnc() {
        let a = real_mat(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.4]);
        let t = RowContraction::new(vec![a], tol()).unwrap();
        assert_eq!(ccnc_span(&t, &smp()).unwrap().dim(), cnc_span(&t).dim());
    }

    #[test]
    fn qe_examples() {
        let t = RowContraction::new(vec![s(0.5)], tol()).unwrap();
        assert!(qe_condition(&t, &smp()).unwrap());
        assert!(is_qe(&t, &smp()).unwrap());
        assert!(qe_condition(&RowContraction::zero(2, 3, tol()), &smp()).unwrap());
    }

    #[test]
    fn qe_fails_beside_a_coisometric_summand() {
        let r = 0.5f64.sqrt();
        let t1 = real_mat(2, 2, &[r, 0.0, 0.0, 0.0]);
        let t = RowContraction::new(vec![t1.clone(), t1], tol()).unwrap();
        let rep = classify(&t, &smp()).unwrap();
        assert!(!qe_condition(&t, &smp()).unwrap());
        assert!(!rep.is_qe && !rep.is_ccnc && !rep.is_cnc);
        assert_eq!(rep.hprime_dim, 1);
    }

    #[test]
    fn cancelling_words_are_ccnc_but_not_qe() {
        let mut g = crate::ball::rng(8);
        let t = crate::ensemble::cancelling_pair(0.4, &mut g, tol());
        let rep = classify(&t, &smp()).unwrap();
        assert!(rep.is_cnc && rep.is_ccnc && !rep.is_qe && !rep.is_commuting);
    }

    #[test]
    fn isometric_part_examples() {
        let r = 0.5f64.sqrt();
        let co = RowContraction::new(vec![s(r), s(r)], tol()).unwrap();
        assert_eq!(max_isometric_coinvariant(&co).unwrap().dim(), 1);
        assert_eq!(max_isometric_coinvariant(&RowContraction::zero(2, 2, tol())).unwrap().dim(), 0);
        assert!(matches!(
            max_isometric_coinvariant(&RowContraction::new(vec![s(0.5)], tol()).unwrap()),
            Err(Error::NotPartialIsometry(_))
        ));
    }

    #[test]
    fn block_diagonal_recovers_isometric_block() {
        let r = 0.5f64.sqrt();
        let shift = real_mat(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b1 = crate::numlin::block_diag(&[&s(r), &shift]);
        let b2 = crate::numlin::block_diag(&[&s(r), &zeros(2, 2)]);
        let v = RowContraction::new(vec![b1, b2], tol()).unwrap();
        let h = max_isometric_coinvariant(&v).unwrap();
        let want = Subspace { ambient: 3, basis: eye(3).columns(0, 1).into_owned(), tol: tol() };
        assert!(h.distance(&want) < 1e-10);
    }
}
