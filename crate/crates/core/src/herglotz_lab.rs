//! Finite-grid surrogates for the Herglotz space of a square Schur function.
//!
//! Everything here lives on the span of the sampled kernel columns `K^b_{z_i}`,
//! written in coordinates `F` with `F^*F = gram`. Nothing claims to describe the
//! whole space.

use serde::Serialize;

use crate::ball::{BallPoint, Sampler};
use crate::error::{Error, Result};
use crate::model::characteristic_function_unchecked;
use crate::numlin::{
    eye, herm_eig, hstack, op_norm, pinv, range_basis, vstack, zeros, CMat, Subspace, Tol, C64,
};
use crate::rowop::RowContraction;
use crate::schur::{block_gram, herglotz_data, weak_coincidence, SchurFunction};

#[derive(Debug, Clone)]
pub struct GridSpace {
    pub b: SchurFunction,
    /// `points[0]` is the origin.
    pub points: Vec<BallPoint>,
    pub gram: CMat,
    /// `r × Np` factor of `gram`.
    pub coords: CMat,
    pub values: Vec<CMat>,
    pub tol: Tol,
}

impl GridSpace {
    /// Prepends the origin when `points` does not start with it.
    pub fn new(b: SchurFunction, points: &[BallPoint], tol: Tol) -> Result<Self> {
        if b.p != b.q {
            return Err(Error::ShapeMismatch("Herglotz space needs a square function".into()));
        }
        let origin = BallPoint::origin(b.d);
        let mut pts = Vec::with_capacity(points.len() + 1);
        if points.first().is_none_or(|z| z.norm() > 0.0) {
            pts.push(origin);
        }
        pts.extend(points.iter().cloned());
        let p = b.p;
        let values = b.eval_many(&pts)?;
        let mut blocks = vec![vec![zeros(p, p); pts.len()]; pts.len()];
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                blocks[i][j] = herglotz_data(&b, &pts[i], &pts[j])?.k;
            }
        }
        let gram = block_gram(&pts, |i, j| blocks[i][j].clone(), p);
        let (vals, vecs) = herm_eig(&gram);
        let top = vals.last().copied().unwrap_or(0.0);
        let floor = vals.first().copied().unwrap_or(0.0);
        if floor < -tol.psd * top.max(1.0) {
            return Err(Error::NotPsd { min_eig: floor });
        }
        let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > tol.rank_rel * top).collect();
        if keep.is_empty() {
            return Err(Error::RankDeficientGrid(pts.len()));
        }
        let coords = CMat::from_fn(keep.len(), gram.ncols(), |a, j| vecs[(j, keep[a])].conj() * vals[keep[a]].sqrt());
        Ok(GridSpace { b, points: pts, gram, coords, values, tol })
    }

    pub fn p(&self) -> usize {
        self.b.p
    }

    pub fn d(&self) -> usize {
        self.b.d
    }

    pub fn rank(&self) -> usize {
        self.coords.nrows()
    }

    /// Coordinates of `K^b_{z_j}`.
    pub fn column(&self, j: usize) -> CMat {
        self.coords.columns(j * self.p(), self.p()).into_owned()
    }

    pub fn gram_residual(&self) -> f64 {
        op_norm(&(self.coords.adjoint() * &self.coords - &self.gram))
    }

    /// Coordinates of the de Branges-Rovnyak kernel columns `F_j(I − b(z_j)^*)`.
    fn dbr_columns(&self) -> CMat {
        let p = self.p();
        let cols: Vec<CMat> = (0..self.points.len()).map(|j| self.column(j) * (eye(p) - self.values[j].adjoint())).collect();
        hstack(&cols.iter().collect::<Vec<_>>())
    }
}

/// `z^*F_j` stacked over the `d` letters, side by side over the grid.
fn shifted_columns(space: &GridSpace, f: impl Fn(usize) -> CMat) -> CMat {
    let cols: Vec<CMat> = space
        .points
        .iter()
        .enumerate()
        .map(|(j, z)| {
            let fj = f(j);
            let parts: Vec<CMat> = z.0.iter().map(|zk| &fj * zk.conj()).collect();
            vstack(&parts.iter().collect::<Vec<_>>())
        })
        .collect();
    hstack(&cols.iter().collect::<Vec<_>>())
}

#[derive(Debug, Clone)]
pub struct VbAction {
    /// `r × rd` row map on the represented span.
    pub l: CMat,
    pub fit_residual: f64,
    pub pi_defect: f64,
    pub coisometry_defect: f64,
    pub rank: usize,
}

impl VbAction {
    pub fn kernel(&self, tol: &Tol) -> Subspace {
        range_basis(&self.l.adjoint(), tol).complement()
    }

    pub fn cokernel(&self, tol: &Tol) -> Subspace {
        range_basis(&self.l, tol).complement()
    }
}

/// Least-squares fit of `z^*K_z h ↦ (K_z − K_0)h` over the grid.
pub fn vb_action(space: &GridSpace) -> Result<VbAction> {
    let r = space.rank();
    let x = shifted_columns(space, |j| space.column(j));
    let f0 = space.column(0);
    let ys: Vec<CMat> = (0..space.points.len()).map(|j| space.column(j) - &f0).collect();
    let y = hstack(&ys.iter().collect::<Vec<_>>());
    let l = &y * pinv(&x, &space.tol);
    let fit_residual = op_norm(&(&l * &x - &y));
    let pi_defect = op_norm(&(&l * l.adjoint() * &l - &l));
    let coisometry_defect = op_norm(&(&l * l.adjoint() - eye(r)));
    Ok(VbAction { l, fit_residual, pi_defect, coisometry_defect, rank: r })
}

#[derive(Debug, Clone)]
pub struct GleasonData {
    /// `β = D^*K_0^b(I − b(0))` in coordinates, `rd × p`.
    pub beta: CMat,
    /// `𝐛(z_j)`, each `dp × p`.
    pub values: Vec<CMat>,
    pub identity_residual: f64,
    pub extremality_defect: f64,
    pub extension_residual: f64,
}

pub fn gleason_from_extension(space: &GridSpace, v: &VbAction, dext: &CMat) -> Result<GleasonData> {
    let (r, d, p) = (space.rank(), space.d(), space.p());
    if dext.shape() != (r, r * d) {
        return Err(Error::ShapeMismatch(format!("extension of shape {:?}, want {:?}", dext.shape(), (r, r * d))));
    }
    let extension_residual = op_norm(&(dext * v.l.adjoint() * &v.l - &v.l));
    if extension_residual > space.tol.residual.max(10.0 * v.pi_defect) {
        return Err(Error::NotExtension(extension_residual));
    }
    let b0 = &space.values[0];
    let k0 = space.column(0) * (eye(p) - b0);
    let beta = dext.adjoint() * &k0;
    let mut identity_residual: f64 = 0.0;
    let mut values = Vec::with_capacity(space.points.len());
    for (j, z) in space.points.iter().enumerate() {
        let left = (eye(p) - &space.values[j]) * space.column(j).adjoint();
        let comps: Vec<CMat> = (0..d).map(|k| &left * beta.rows(k * r, r)).collect();
        let mut lhs = zeros(p, p);
        for (k, comp) in comps.iter().enumerate() {
            lhs += comp * z.0[k];
        }
        identity_residual = identity_residual.max(op_norm(&(lhs - (&space.values[j] - b0))));
        values.push(vstack(&comps.iter().collect::<Vec<_>>()));
    }
    let extremality_defect = op_norm(&(beta.adjoint() * &beta - (eye(p) - b0.adjoint() * b0)));
    Ok(GleasonData { beta, values, identity_residual, extremality_defect, extension_residual })
}

/// The row contraction `X` on the represented span with `z(X^*f)(z) = f(z) − f(0)`,
/// fitted on the de Branges-Rovnyak kernel columns.
pub fn gleason_row(space: &GridSpace, g: &GleasonData) -> Result<(RowContraction, f64)> {
    let p = space.p();
    let kap = space.dbr_columns();
    let shifted = shifted_columns(space, |j| kap.columns(j * p, p).into_owned());
    let corr: Vec<CMat> = space.values.iter().map(|bz| &g.beta * bz.adjoint()).collect();
    let corr = hstack(&corr.iter().collect::<Vec<_>>());
    let yx = shifted - corr;
    let xstar = &yx * pinv(&kap, &space.tol);
    let consistency = op_norm(&(&xstar * &kap - &yx));
    let row = xstar.adjoint();
    let t = RowContraction::from_row(&row, space.d(), space.tol)?;
    Ok((t, consistency))
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub grid: usize,
    pub rank: usize,
    pub dim_ker: usize,
    pub dim_coker: usize,
    pub pi_defect: f64,
    pub solution_gap: f64,
    pub row_gap: f64,
    pub identity_residuals: [f64; 2],
    pub extremality_defects: [f64; 2],
    pub coisometry_defects: [f64; 2],
    pub weak_residual: f64,
    pub weak_residual_vs_b: f64,
    /// `tr(X_i X_j^*)` over letter pairs, then `tr(X_1X_2X_2^*X_1^*)`, per solution.
    pub word_traces: [Vec<[f64; 2]>; 2],
    pub witness: bool,
}

fn word_traces(t: &RowContraction) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for a in &t.blocks {
        for b in &t.blocks {
            let s = (a * b.adjoint()).trace();
            out.push([s.re, s.im]);
        }
    }
    if t.d >= 2 {
        let (a, b) = (&t.blocks[0], &t.blocks[1]);
        let s = (a * b * b.adjoint() * a.adjoint()).trace();
        out.push([s.re, s.im]);
    }
    out
}

/// Two co-isometric extensions whose Gleason coordinates are orthogonal.
fn orthogonal_extensions(space: &GridSpace, v: &VbAction) -> Result<(CMat, CMat)> {
    let tol = &space.tol;
    let ker = v.kernel(tol);
    let coker = v.cokernel(tol);
    if coker.dim() == 0 || ker.dim() <= coker.dim() {
        return Err(Error::PreconditionUnmet(format!(
            "need dim ker > dim coker ≥ 1, have {} and {}",
            ker.dim(),
            coker.dim()
        )));
    }
    let p = space.p();
    let k0 = space.column(0) * (eye(p) - &space.values[0]);
    let u = coker.basis.column(0).into_owned();
    let cval = (u.adjoint() * &k0).norm();
    let lk = op_norm(&(v.l.adjoint() * &k0));
    if cval <= 0.0 || lk > cval {
        return Err(Error::PreconditionUnmet(format!("|L^*K_0| = {lk:.3e} exceeds |u^*K_0| = {cval:.3e}")));
    }
    // Extra rows of the cokernel are completed by a fixed isometry into ker L; only
    // the first one carries the two different choices.
    let t = -(lk * lk) / (cval * cval);
    let e = ker.basis.column(0).into_owned();
    let f = ker.basis.column(1).into_owned();
    let e2 = &e * C64::new(t, 0.0) + &f * C64::new((1.0 - t * t).max(0.0).sqrt(), 0.0);
    let mut d1 = v.l.clone() + &u * e.adjoint();
    let mut d2 = v.l.clone() + &u * e2.adjoint();
    for k in 1..coker.dim() {
        let uk = coker.basis.column(k).into_owned();
        let ek = ker.basis.column(k + 1).into_owned();
        let add = &uk * ek.adjoint();
        d1 += &add;
        d2 += add;
    }
    Ok((d1, d2))
}

/// Builds two extremal Gleason solutions from orthogonal co-isometric extensions and
/// checks whether their characteristic data still weakly coincide.
pub fn nonequivalence_probe(space: &GridSpace) -> Result<ProbeReport> {
    let v = vb_action(space)?;
    let tol = space.tol;
    let (d1, d2) = orthogonal_extensions(space, &v)?;
    let g1 = gleason_from_extension(space, &v, &d1)?;
    let g2 = gleason_from_extension(space, &v, &d2)?;
    let (x1, _) = gleason_row(space, &g1)?;
    let (x2, _) = gleason_row(space, &g2)?;
    let r = space.rank();
    let k0 = space.dbr_columns().columns(0, space.p()).into_owned();
    let target = eye(r) - &k0 * k0.adjoint();
    let cdef = |x: &RowContraction| op_norm(&(x.row() * x.row().adjoint() - &target));
    let c1 = characteristic_function_unchecked(&x1)?;
    let c2 = characteristic_function_unchecked(&x2)?;
    // The compressed resolvent only reproduces the true kernel at represented points.
    let weak = weak_coincidence(&c1.b_t, &c2.b_t, &space.points, &tol)?.residual;
    let weak_vs_b = weak_coincidence(&c1.b_t, &space.b, &space.points, &tol)?.residual;
    let solution_gap = op_norm(&(&g1.beta - &g2.beta));
    let row_gap = op_norm(&(x1.row() - x2.row()));
    let witness = solution_gap > 1e-4_f64.max(10.0 * tol.residual) && weak <= 1e-6;
    Ok(ProbeReport {
        grid: space.points.len(),
        rank: r,
        dim_ker: v.kernel(&tol).dim(),
        dim_coker: v.cokernel(&tol).dim(),
        pi_defect: v.pi_defect,
        solution_gap,
        row_gap,
        identity_residuals: [g1.identity_residual, g2.identity_residual],
        extremality_defects: [g1.extremality_defect, g2.extremality_defect],
        coisometry_defects: [cdef(&x1), cdef(&x2)],
        weak_residual: weak,
        weak_residual_vs_b: weak_vs_b,
        word_traces: [word_traces(&x1), word_traces(&x2)],
        witness,
    })
}

/// Shipped non-quasi-extreme fixture: `b(z) = ½ z_1(0.6 + 0.4 z_2)` on a 13-point grid in `B_2`.
pub fn witness_fixture(tol: Tol) -> Result<GridSpace> {
    let b = SchurFunction::closure(1, 1, 2, |z| Ok(CMat::from_element(1, 1, z.0[0] * (z.0[1] * 0.4 + 0.6) * 0.5)));
    let points = Sampler { count: 13, seed: 3, ring_radius: 0.9 }.points(2);
    GridSpace::new(b, &points, tol)
}
