//! Schur-class functions on the unit ball, their kernels, and coincidence tests.

use std::fmt;
use std::sync::Arc;

use crate::ball::{cnormal, rng, BallPoint};
use crate::error::{Error, Result};
use crate::frostman::FrostmanWrap;
use crate::numlin::{
    eye, hstack, inv, min_eig, null_basis, op_norm, polar_unitary, vstack, zeros, CMat, Subspace,
    Tol, C64,
};
use crate::par;
use crate::rowop::contract_row;

type EvalFn = dyn Fn(&BallPoint) -> Result<CMat> + Send + Sync;

/// `b(z) = D + C(I − zA)^{-1} zB` with `A`, `B` stored as `d` stacked blocks.
#[derive(Debug, Clone)]
pub struct Realization {
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
    pub dd: CMat,
}

#[derive(Debug, Clone)]
pub struct SampledTable {
    pub points: Vec<BallPoint>,
    pub values: Vec<CMat>,
}

#[derive(Clone)]
pub enum Body {
    Constant(CMat),
    Realization(Realization),
    Frostman(Box<FrostmanWrap>),
    Sampled(SampledTable),
    Padded(Box<SchurFunction>),
    Closure(Arc<EvalFn>),
}

impl fmt::Debug for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Body::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            Body::Realization(r) => f.debug_tuple("Realization").field(r).finish(),
            Body::Frostman(w) => f.debug_tuple("Frostman").field(w).finish(),
            Body::Sampled(t) => f.debug_tuple("Sampled").field(&t.points.len()).finish(),
            Body::Padded(b) => f.debug_tuple("Padded").field(b).finish(),
            Body::Closure(_) => f.write_str("Closure"),
        }
    }
}

/// An operator-valued function `B^d → L(C^q, C^p)`.
#[derive(Debug, Clone)]
pub struct SchurFunction {
    pub p: usize,
    pub q: usize,
    pub d: usize,
    pub body: Body,
}

impl SchurFunction {
    pub fn constant(m: CMat, d: usize) -> Self {
        SchurFunction { p: m.nrows(), q: m.ncols(), d, body: Body::Constant(m) }
    }

    pub fn closure(p: usize, q: usize, d: usize, f: impl Fn(&BallPoint) -> Result<CMat> + Send + Sync + 'static) -> Self {
        SchurFunction { p, q, d, body: Body::Closure(Arc::new(f)) }
    }

    pub fn realization(r: Realization, d: usize) -> Result<Self> {
        let n = r.c.ncols();
        if r.a.shape() != (n * d, n) || r.b.nrows() != n * d || r.dd.nrows() != r.c.nrows() || r.dd.ncols() != r.b.ncols() {
            return Err(Error::ShapeMismatch("inconsistent realization blocks".into()));
        }
        Ok(SchurFunction { p: r.dd.nrows(), q: r.dd.ncols(), d, body: Body::Realization(r) })
    }

    pub fn sampled(points: Vec<BallPoint>, values: Vec<CMat>) -> Result<Self> {
        let (p, q) = values.first().map(|v| v.shape()).ok_or_else(|| Error::Invalid("empty table".into()))?;
        let d = points.first().map_or(0, |z| z.d());
        if points.len() != values.len() || values.iter().any(|v| v.shape() != (p, q)) {
            return Err(Error::ShapeMismatch("table points and values disagree".into()));
        }
        Ok(SchurFunction { p, q, d, body: Body::Sampled(SampledTable { points, values }) })
    }

    pub fn eval(&self, z: &BallPoint) -> Result<CMat> {
        if z.d() != self.d {
            return Err(Error::ShapeMismatch(format!("point in B^{} for a function of {} variables", z.d(), self.d)));
        }
        match &self.body {
            Body::Constant(m) => Ok(m.clone()),
            Body::Realization(r) => {
                let n = r.c.ncols();
                let za = contract_row(z, &r.a);
                let zb = contract_row(z, &r.b);
                Ok(&r.dd + &r.c * inv(&(eye(n) - za))? * zb)
            }
            Body::Frostman(w) => w.eval(z),
            Body::Sampled(t) => t
                .points
                .iter()
                .position(|w| w.0.iter().zip(&z.0).all(|(a, b)| (a - b).norm() <= 1e-14))
                .map(|i| t.values[i].clone())
                .ok_or_else(|| Error::Invalid("point not in sampled table".into())),
            Body::Padded(inner) => {
                let v = inner.eval(z)?;
                let mut out = zeros(self.p, self.q);
                out.view_mut((0, 0), v.shape()).copy_from(&v);
                Ok(out)
            }
            Body::Closure(f) => f(z),
        }
    }

    pub fn eval_many(&self, points: &[BallPoint]) -> Result<Vec<CMat>> {
        par::map(points, |z| self.eval(z)).into_iter().collect()
    }

    pub fn scaled(&self, s: f64) -> SchurFunction {
        let inner = self.clone();
        SchurFunction::closure(self.p, self.q, self.d, move |z| Ok(inner.eval(z)? * C64::new(s, 0.0)))
    }

    pub fn tabulate(&self, points: &[BallPoint]) -> Result<SchurFunction> {
        SchurFunction::sampled(points.to_vec(), self.eval_many(points)?)
    }
}

/// `k^b(z,w) = (I − b(z)b(w)^*)/(1 − zw^*)`; with `b = None`, the scalar Szegő kernel.
pub fn szego_dbr_kernel(b: Option<&SchurFunction>, z: &BallPoint, w: &BallPoint) -> Result<CMat> {
    let den = C64::new(1.0, 0.0) - z.pair(w);
    match b {
        None => Ok(CMat::from_element(1, 1, C64::new(1.0, 0.0) / den)),
        Some(b) => {
            let bz = b.eval(z)?;
            let bw = b.eval(w)?;
            Ok((eye(b.p) - bz * bw.adjoint()) / den)
        }
    }
}

fn kernel_from_values(bz: &CMat, bw: &CMat, z: &BallPoint, w: &BallPoint) -> CMat {
    (eye(bz.nrows()) - bz * bw.adjoint()) / (C64::new(1.0, 0.0) - z.pair(w))
}

#[derive(Debug, Clone)]
pub struct KernelGram {
    pub points: Vec<BallPoint>,
    pub gram: CMat,
    pub min_eig: f64,
}

pub fn block_gram(points: &[BallPoint], block: impl Fn(usize, usize) -> CMat + Sync + Send, p: usize) -> CMat {
    let n = points.len();
    let rows: Vec<CMat> = par::map_range(n, |i| {
        let bl: Vec<CMat> = (0..n).map(|j| block(i, j)).collect();
        let refs: Vec<&CMat> = bl.iter().collect();
        hstack(&refs)
    });
    let refs: Vec<&CMat> = rows.iter().collect();
    let g = vstack(&refs);
    debug_assert_eq!(g.nrows(), n * p);
    g
}

pub fn kernel_gram(b: &SchurFunction, points: &[BallPoint]) -> Result<KernelGram> {
    let vals = b.eval_many(points)?;
    let gram = block_gram(points, |i, j| kernel_from_values(&vals[i], &vals[j], &points[i], &points[j]), b.p);
    let min_eig = min_eig(&gram);
    Ok(KernelGram { points: points.to_vec(), gram, min_eig })
}

pub fn is_schur_class(b: &SchurFunction, points: &[BallPoint], tol: &Tol) -> Result<bool> {
    Ok(kernel_gram(b, points)?.min_eig >= -tol.psd)
}

/// `⋁_z ran b(z)^* ⊆ C^q` over the given points.
pub fn support(b: &SchurFunction, points: &[BallPoint], tol: &Tol) -> Result<Subspace> {
    let vals = b.eval_many(points)?;
    let adj: Vec<CMat> = vals.iter().map(|v| v.adjoint()).collect();
    let refs: Vec<&CMat> = adj.iter().collect();
    if refs.is_empty() {
        return Ok(Subspace::zero(b.q, *tol));
    }
    Ok(crate::numlin::range_basis_ref(&hstack(&refs), tol, Some(1.0)))
}

/// `b` restricted to an orthonormal basis of its support.
pub fn restrict_to_support(b: &SchurFunction, points: &[BallPoint], tol: &Tol) -> Result<SchurFunction> {
    let s = support(b, points, tol)?.basis;
    let inner = b.clone();
    let k = s.ncols();
    Ok(SchurFunction::closure(b.p, k, b.d, move |z| Ok(inner.eval(z)? * &s)))
}

/// Solutions `X` of `X·L1[i] = L2[i]·X` for all `i`, as a matrix basis.
fn intertwiners(l1: &[CMat], l2: &[CMat], tol: &Tol) -> Vec<CMat> {
    let m = l1[0].nrows();
    let blocks: Vec<CMat> = l1
        .iter()
        .zip(l2)
        .map(|(a, b)| a.transpose().kronecker(&eye(m)) - eye(m).kronecker(b))
        .collect();
    let refs: Vec<&CMat> = blocks.iter().collect();
    let sys = vstack(&refs);
    let mut null = null_basis(&sys, tol).basis;
    if null.ncols() == 0 {
        // Nothing below the cutoff: keep the least-violated direction and let the residual decide.
        let dec = crate::numlin::null_basis_ref(&sys, &Tol { rank_rel: 1.0 - 1e-15, ..*tol }, None).basis;
        null = if dec.ncols() > 0 { dec.columns(dec.ncols() - 1, 1).into_owned() } else { zeros(m * m, 0) };
    }
    (0..null.ncols())
        .map(|j| CMat::from_column_slice(m, m, null.column(j).as_slice()))
        .collect()
}

fn random_combination(basis: &[CMat], seed: u64) -> Option<CMat> {
    let first = basis.first()?;
    let mut g = rng(seed);
    let mut acc = zeros(first.nrows(), first.ncols());
    for b in basis {
        acc += b * cnormal(&mut g);
    }
    Some(acc)
}

#[derive(Debug, Clone)]
pub struct Coincidence {
    pub r: CMat,
    pub q: CMat,
    pub residual: f64,
}

fn coincidence_residual(r: &CMat, q: &CMat, v1: &[CMat], v2: &[CMat]) -> f64 {
    v1.iter().zip(v2).map(|(a, b)| op_norm(&(r * a - b * q))).fold(0.0, f64::max)
}

/// Fixed unitaries `R`, `Q` with `R b₁(z) = b₂(z) Q` on the given points.
///
/// The pair is seeded by the polar factor of a random solution of the linear
/// intertwining system, then refined by alternating Procrustes steps; random
/// restarts are tried if that seed falls short.
pub fn coincide(b1: &SchurFunction, b2: &SchurFunction, points: &[BallPoint], tol: &Tol) -> Result<Option<Coincidence>> {
    if (b1.p, b1.q, b1.d) != (b2.p, b2.q, b2.d) {
        return Err(Error::ShapeMismatch(format!("{}x{} vs {}x{}", b1.p, b1.q, b2.p, b2.q)));
    }
    let (p, q) = (b1.p, b1.q);
    let v1 = b1.eval_many(points)?;
    let v2 = b2.eval_many(points)?;
    let link = |v: &CMat| embed_link(v, p, q);
    let proj = crate::numlin::block_diag(&[&eye(p), &zeros(q, q)]);
    let mut l1: Vec<CMat> = v1.iter().map(link).collect();
    let mut l2: Vec<CMat> = v2.iter().map(link).collect();
    l1.push(proj.clone());
    l2.push(proj);
    let basis = intertwiners(&l1, &l2, tol);
    let bound = 10.0 * tol.residual;
    let mut best: Option<Coincidence> = None;
    let consider = |best: &mut Option<Coincidence>, r: CMat, qq: CMat| {
        let (r, qq) = refine(r, qq, &v1, &v2);
        let res = coincidence_residual(&r, &qq, &v1, &v2);
        if best.as_ref().is_none_or(|b| res < b.residual) {
            *best = Some(Coincidence { r, q: qq, residual: res });
        }
    };
    if let Some(x) = random_combination(&basis, 0xc0c0) {
        let r0 = polar_unitary(&x.view((0, 0), (p, p)).into_owned());
        let q0 = polar_unitary(&x.view((p, p), (q, q)).into_owned());
        consider(&mut best, r0, q0);
    }
    let mut g = rng(0xfeed);
    for _ in 0..5 {
        if best.as_ref().is_some_and(|b| b.residual <= bound) {
            break;
        }
        let r0 = polar_unitary(&crate::ball::gaussian(p, p, &mut g));
        let q0 = polar_unitary(&crate::ball::gaussian(q, q, &mut g));
        consider(&mut best, r0, q0);
    }
    Ok(best.filter(|b| b.residual <= bound))
}

fn embed_link(v: &CMat, p: usize, q: usize) -> CMat {
    let mut out = zeros(p + q, p + q);
    out.view_mut((0, p), (p, q)).copy_from(v);
    out.view_mut((p, 0), (q, p)).copy_from(&v.adjoint());
    out
}

fn refine(mut r: CMat, mut q: CMat, v1: &[CMat], v2: &[CMat]) -> (CMat, CMat) {
    let mut last = coincidence_residual(&r, &q, v1, v2);
    for _ in 0..200 {
        if last < 1e-14 {
            break;
        }
        // R minimises Σ‖R b₁(z_i) − b₂(z_i)Q‖², then Q minimises Σ‖Q b₁(z_i)^* − b₂(z_i)^*R‖².
        let mut sr = zeros(r.nrows(), r.ncols());
        for (a, b) in v1.iter().zip(v2) {
            sr += b * &q * a.adjoint();
        }
        let r_next = polar_unitary(&sr);
        let mut sq = zeros(q.nrows(), q.ncols());
        for (a, b) in v1.iter().zip(v2) {
            sq += b.adjoint() * &r_next * a;
        }
        let q_next = polar_unitary(&sq);
        let now = coincidence_residual(&r_next, &q_next, v1, v2);
        if now >= last {
            break;
        }
        r = r_next;
        q = q_next;
        last = now;
    }
    (r, q)
}

#[derive(Debug, Clone)]
pub struct WeakCoincidence {
    pub w: CMat,
    pub residual: f64,
}

/// `max_{i,j} ‖W b₁(z_i)b₁(z_j)^*W^* − b₂(z_i)b₂(z_j)^*‖`.
pub fn weak_residual(w: &CMat, v1: &[CMat], v2: &[CMat]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..v1.len() {
        for j in 0..v1.len() {
            let k1 = &v1[i] * v1[j].adjoint();
            let k2 = &v2[i] * v2[j].adjoint();
            worst = worst.max(op_norm(&(w * k1 * w.adjoint() - k2)));
        }
    }
    worst
}

/// Unitary `W` with `W b₁(z)b₁(w)^* W^* = b₂(z)b₂(w)^*` on all sample pairs.
///
/// Only the products `b(z)b(w)^*` enter, so restriction to supports (and any
/// zero padding of inputs) is implicit.
pub fn coincide_weakly(b1: &SchurFunction, b2: &SchurFunction, points: &[BallPoint], tol: &Tol) -> Result<Option<WeakCoincidence>> {
    let best = weak_coincidence(b1, b2, points, tol)?;
    Ok((best.residual <= 10.0 * tol.residual).then_some(best))
}

/// Best unitary found for weak coincidence, whatever its residual.
pub fn weak_coincidence(b1: &SchurFunction, b2: &SchurFunction, points: &[BallPoint], tol: &Tol) -> Result<WeakCoincidence> {
    if b1.p != b2.p || b1.d != b2.d {
        return Err(Error::ShapeMismatch(format!("outputs {} vs {}", b1.p, b2.p)));
    }
    let v1 = b1.eval_many(points)?;
    let v2 = b2.eval_many(points)?;
    let p = b1.p;
    if p == 0 {
        return Ok(WeakCoincidence { w: zeros(0, 0), residual: 0.0 });
    }
    let mut k1 = Vec::new();
    let mut k2 = Vec::new();
    for i in 0..v1.len() {
        for j in 0..v1.len() {
            k1.push(&v1[i] * v1[j].adjoint());
            k2.push(&v2[i] * v2[j].adjoint());
        }
    }
    let basis = intertwiners(&k1, &k2, tol);
    let w = match random_combination(&basis, 0x3eed) {
        Some(x) => polar_unitary(&x),
        None => eye(p),
    };
    let residual = weak_residual(&w, &v1, &v2);
    Ok(WeakCoincidence { w, residual })
}

/// `H_b(z)`, `K^b(z,w)` and `U_b(z)` for a square `b`.
#[derive(Debug, Clone)]
pub struct HerglotzData {
    pub h: CMat,
    pub k: CMat,
    pub u: CMat,
}

pub fn herglotz_data(b: &SchurFunction, z: &BallPoint, w: &BallPoint) -> Result<HerglotzData> {
    if b.p != b.q {
        return Err(Error::ShapeMismatch("Herglotz data needs a square function".into()));
    }
    let p = b.p;
    let bz = b.eval(z)?;
    let bw = b.eval(w)?;
    let uz = inv(&(eye(p) - &bz)).map_err(|_| Error::Unital)?;
    let uw = inv(&(eye(p) - &bw)).map_err(|_| Error::Unital)?;
    let h = &uz * (eye(p) + &bz);
    let k = &uz * kernel_from_values(&bz, &bw, z, w) * uw.adjoint();
    Ok(HerglotzData { h, k, u: uz })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::{gaussian, Sampler};
    use crate::numlin::{c, fro, real_mat};

    fn tol() -> Tol {
        Tol::default()
    }

    fn blaschke(t: f64) -> SchurFunction {
        SchurFunction::closure(1, 1, 1, move |z| {
            let z = z.0[0];
            Ok(CMat::from_element(1, 1, (z - t) / (1.0 - t * z)))
        })
    }

    fn grid(d: usize, n: usize) -> Vec<BallPoint> {
        Sampler { count: n, seed: 11, ring_radius: 0.9 }.points(d)
    }

    #[test]
    fn constant_and_trivial_realization() {
        let a = real_mat(1, 2, &[0.2, 0.1]);
        let f = SchurFunction::constant(a.clone(), 2);
        let z = BallPoint(vec![c(0.1, 0.3), c(0.2, 0.0)]);
        assert_eq!(f.eval(&z).unwrap(), a);
        let r = Realization { a: real_mat(4, 2, &[0.1, 0.0, 0.2, 0.1, 0.0, 0.3, 0.1, 0.1]), b: real_mat(4, 2, &[1.0; 8]), c: zeros(1, 2), dd: a.clone() };
        let g = SchurFunction::realization(r, 2).unwrap();
        assert!(fro(&(g.eval(&z).unwrap() - a)) < 1e-15);
    }

    #[test]
    fn szego_and_blaschke_kernels() {
        let o = BallPoint::origin(1);
        let zero = SchurFunction::constant(zeros(1, 1), 1);
        assert!((szego_dbr_kernel(Some(&zero), &o, &o).unwrap()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        let b = blaschke(0.5);
        for z in grid(1, 12) {
            for w in grid(1, 12) {
                let got = szego_dbr_kernel(Some(&b), &z, &w).unwrap()[(0, 0)];
                let want = c(0.75, 0.0) / ((1.0 - z.0[0] / 2.0) * (1.0 - w.0[0].conj() / 2.0));
                assert!((got - want).norm() < 1e-12);
                let back = szego_dbr_kernel(Some(&b), &w, &z).unwrap()[(0, 0)];
                assert_eq!(got, back.conj());
            }
        }
    }

    #[test]
    fn schur_verdicts() {
        let pts = grid(1, 10);
        assert!(is_schur_class(&SchurFunction::constant(zeros(1, 1), 1), &pts, &tol()).unwrap());
        assert!(is_schur_class(&SchurFunction::constant(eye(2), 1), &pts, &tol()).unwrap());
        assert!(!is_schur_class(&blaschke(0.5).scaled(1.5), &pts, &tol()).unwrap());
    }

    #[test]
    fn supports() {
        let pts = grid(2, 10);
        assert_eq!(support(&SchurFunction::constant(zeros(1, 3), 2), &pts, &tol()).unwrap().dim(), 0);
        let s = support(&SchurFunction::constant(real_mat(1, 2, &[0.4, 0.0]), 2), &pts, &tol()).unwrap();
        assert_eq!(s.dim(), 1);
        assert!((s.basis[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    fn row_function() -> SchurFunction {
        SchurFunction::closure(2, 2, 2, |z| {
            let (a, b) = (z.0[0], z.0[1]);
            Ok(CMat::from_row_slice(2, 2, &[a * 0.6, b * 0.5, a * b * 0.4, c(0.1, 0.0) + a * 0.2]))
        })
    }

    #[test]
    fn coincidence_recovers_fixed_unitaries() {
        let pts = grid(2, 15);
        let b1 = row_function();
        assert!(coincide(&b1, &b1, &pts, &tol()).unwrap().unwrap().residual < 1e-12);
        let mut g = rng(4);
        let r0 = polar_unitary(&gaussian(2, 2, &mut g));
        let q0 = polar_unitary(&gaussian(2, 2, &mut g));
        let inner = b1.clone();
        let (r1, q1) = (r0.clone(), q0.clone());
        let b2 = SchurFunction::closure(2, 2, 2, move |z| Ok(&r1 * inner.eval(z)? * q1.adjoint()));
        let got = coincide(&b1, &b2, &pts, &tol()).unwrap().unwrap();
        assert!(got.residual < 1e-8);
        let zero = SchurFunction::constant(zeros(2, 2), 2);
        let cst = SchurFunction::constant(real_mat(2, 2, &[0.3, 0.0, 0.0, 0.0]), 2);
        assert!(coincide(&zero, &cst, &pts, &tol()).unwrap().is_none());
    }

    #[test]
    fn weak_coincidence_examples() {
        let pts = grid(2, 15);
        let b1 = row_function();
        let inner = b1.clone();
        let padded = SchurFunction::closure(2, 4, 2, move |z| Ok(hstack(&[&inner.eval(z)?, &zeros(2, 2)])));
        assert!(coincide_weakly(&b1, &padded, &pts, &tol()).unwrap().is_some());
        let w0 = polar_unitary(&gaussian(2, 2, &mut rng(9)));
        let inner = b1.clone();
        let rotated = SchurFunction::closure(2, 2, 2, move |z| Ok(&w0 * inner.eval(z)?));
        assert!(coincide_weakly(&b1, &rotated, &pts, &tol()).unwrap().unwrap().residual < 1e-10);
        let half = SchurFunction::constant(real_mat(1, 1, &[0.5]), 2);
        let third = SchurFunction::constant(real_mat(1, 1, &[1.0 / 3.0]), 2);
        assert!(coincide_weakly(&half, &third, &pts, &tol()).unwrap().is_none());
    }

    #[test]
    fn herglotz_examples() {
        let z = BallPoint(vec![c(0.3, 0.2)]);
        let w = BallPoint(vec![c(-0.1, 0.5)]);
        let zero = SchurFunction::constant(zeros(1, 1), 1);
        let h = herglotz_data(&zero, &z, &w).unwrap();
        assert!((h.h[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15 && (h.u[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((h.k[(0, 0)] - c(1.0, 0.0) / (c(1.0, 0.0) - z.pair(&w))).norm() < 1e-15);
        let third = SchurFunction::constant(real_mat(1, 1, &[1.0 / 3.0]), 1);
        let o = BallPoint::origin(1);
        let h = herglotz_data(&third, &o, &o).unwrap();
        assert!((h.h[(0, 0)].re - 2.0).abs() < 1e-14);
        assert!((h.k[(0, 0)].re - 2.0).abs() < 1e-14);
        assert!((h.u[(0, 0)].re - 1.5).abs() < 1e-14);
        assert!(matches!(herglotz_data(&SchurFunction::constant(eye(1), 1), &o, &o), Err(Error::Unital)));
    }
}
