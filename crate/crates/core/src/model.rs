//! Model triples, characteristic functions and the model-identity battery.
//!
//! For a CCNC row contraction `T = V − C` the pipeline builds framing
//! isometries `γ0` onto `(ran V)^⊥` and `γ∞` onto `ker V`, the model map
//! `Γ(z) = (I − Tz^*)^{-1}γ0`, the function `b_V = D^{-1}·zN`, the zero-point
//! contraction `δ = −γ0^*Tγ∞`, and `b_T` as the `δ`-Frostman shift of `b_V`.

use std::sync::Arc;

use serde::Serialize;

use crate::ball::{BallPoint, Sampler};
use crate::classify;
use crate::error::{Error, Result};
use crate::frostman::{frostman_shift, Defects};
use crate::numlin::{cond, eye, hstack, inv, kron_eye, op_norm, range_basis_ref, singular_values, vstack, zeros, CMat};
use crate::par;
use crate::rowop::{apply_point_adjoint, contract_row, IsoPureParts, RowContraction};
use crate::schur::{support, weak_coincidence, SchurFunction};

pub const COND_CAP: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct ModelTriple {
    pub gamma0: CMat,
    pub gamma_inf: CMat,
    pub v: RowContraction,
    pub extension: RowContraction,
}

/// Framing isometries from `parts` and `t` as the contractive extension of `V`.
pub fn model_triple(parts: &IsoPureParts, t: &RowContraction) -> Result<ModelTriple> {
    let v = parts.v.row();
    let proj = parts.initial_space.projector();
    let r = op_norm(&(t.row() * proj - &v));
    if r > t.tol.residual {
        return Err(Error::NotExtension(r));
    }
    Ok(ModelTriple {
        gamma0: parts.final_space.complement().basis,
        gamma_inf: parts.initial_space.complement().basis,
        v: parts.v.clone(),
        extension: t.clone(),
    })
}

impl ModelTriple {
    pub fn p(&self) -> usize {
        self.gamma0.ncols()
    }

    pub fn q(&self) -> usize {
        self.gamma_inf.ncols()
    }

    pub fn d(&self) -> usize {
        self.extension.d
    }

    /// Same framing isometries with a different contractive extension of `V`.
    pub fn with_extension(&self, t: &RowContraction) -> Result<ModelTriple> {
        let r = op_norm(&(t.row() * (eye(t.n * t.d) - self.gamma_inf.clone() * self.gamma_inf.adjoint()) - self.v.row()));
        if r > t.tol.residual {
            return Err(Error::NotExtension(r));
        }
        Ok(ModelTriple { extension: t.clone(), ..self.clone() })
    }

    fn check(&self) -> Result<()> {
        if self.p() == 0 {
            Err(Error::DegenerateTriple)
        } else {
            Ok(())
        }
    }

    pub fn gamma_eval(&self, z: &BallPoint) -> Result<CMat> {
        self.check()?;
        Ok(self.extension.resolvent(z)? * &self.gamma0)
    }

    pub fn d_eval(&self, z: &BallPoint) -> Result<CMat> {
        Ok(self.gamma_eval(z)?.adjoint() * &self.gamma0)
    }

    pub fn n_eval(&self, z: &BallPoint) -> Result<CMat> {
        let g = self.gamma_eval(z)?;
        Ok(kron_eye(self.d(), &g.adjoint()) * &self.gamma_inf)
    }

    fn d_inv(&self, z: &BallPoint) -> Result<CMat> {
        let dz = self.d_eval(z)?;
        let k = cond(&dz);
        if k > COND_CAP {
            return Err(Error::IllConditioned(k));
        }
        inv(&dz)
    }

    /// `b_V(z) = D(z)^{-1}·zN(z)`.
    pub fn bv_eval(&self, z: &BallPoint) -> Result<CMat> {
        Ok(self.d_inv(z)? * contract_row(z, &self.n_eval(z)?))
    }

    /// `𝐛_V(z) = (D(z)^{-1} ⊗ I_d)·N(z)`.
    pub fn bold_bv_eval(&self, z: &BallPoint) -> Result<CMat> {
        Ok(kron_eye(self.d(), &self.d_inv(z)?) * self.n_eval(z)?)
    }

    /// `γ0^*(I − zV^*)^{-1}·zγ∞` with `zV^* = Σ z_k V_k^*`.
    pub fn colligation_transfer(&self, z: &BallPoint) -> Result<CMat> {
        self.check()?;
        let n = self.v.n;
        let r = inv(&(eye(n) - self.v.z_tstar(z)))?;
        Ok(self.gamma0.adjoint() * r * contract_row(z, &self.gamma_inf))
    }

    /// `Ξ = [[V^*, γ∞], [γ0^*, 0]]`.
    pub fn colligation(&self) -> CMat {
        let top = hstack(&[&self.v.row().adjoint(), &self.gamma_inf]);
        let bottom = hstack(&[&self.gamma0.adjoint(), &zeros(self.p(), self.q())]);
        vstack(&[&top, &bottom])
    }

    /// `max(‖Ξ^*Ξ − I‖, ‖ΞΞ^* − I‖)`.
    pub fn colligation_defect(&self) -> f64 {
        let x = self.colligation();
        let a = op_norm(&(x.adjoint() * &x - eye(x.ncols())));
        let b = op_norm(&(&x * x.adjoint() - eye(x.nrows())));
        a.max(b)
    }

    /// `b_V` as an evaluable function.
    pub fn charfun_partial_isometry(&self) -> Result<SchurFunction> {
        self.check()?;
        let me = Arc::new(self.clone());
        Ok(SchurFunction::closure(self.p(), self.q(), self.d(), move |z| me.bv_eval(z)))
    }

    /// `δ = −γ0^* T γ∞`.
    pub fn zero_point_contraction(&self) -> CMat {
        -(self.gamma0.adjoint() * self.extension.row() * &self.gamma_inf)
    }
}

#[derive(Debug, Clone)]
pub struct CharacteristicData {
    pub t: RowContraction,
    pub parts: IsoPureParts,
    pub triple: ModelTriple,
    pub delta: CMat,
    pub delta_defects: Defects,
    pub b_v: SchurFunction,
    pub b_t: SchurFunction,
    pub kappa0: CMat,
}

/// Full pipeline; refuses inputs that are not CCNC.
pub fn characteristic_function(t: &RowContraction, sampler: &Sampler) -> Result<CharacteristicData> {
    if !classify::is_ccnc(t, sampler)? {
        return Err(Error::NotCcnc);
    }
    characteristic_function_unchecked(t)
}

/// Pipeline without the CCNC gate; the model identities need not hold.
pub fn characteristic_function_unchecked(t: &RowContraction) -> Result<CharacteristicData> {
    let parts = t.iso_pure_decompose()?;
    let triple = model_triple(&parts, t)?;
    let b_v = triple.charfun_partial_isometry()?;
    let delta = triple.zero_point_contraction();
    let delta_defects = Defects::new(&delta, &t.tol)?;
    let b_t = frostman_shift(&b_v, &delta, &t.tol)?;
    let kappa0 = &triple.gamma0 * &delta_defects.ds;
    Ok(CharacteristicData { t: t.clone(), parts, triple, delta, delta_defects, b_v, b_t, kappa0 })
}

impl CharacteristicData {
    pub fn n(&self) -> usize {
        self.t.n
    }

    pub fn d(&self) -> usize {
        self.t.d
    }

    pub fn p(&self) -> usize {
        self.triple.p()
    }

    pub fn q(&self) -> usize {
        self.triple.q()
    }

    pub fn bt_eval(&self, z: &BallPoint) -> Result<CMat> {
        self.delta_defects.phi_inv(&self.triple.bv_eval(z)?)
    }

    /// `M(z) = D_{δ^*}(I + b_V(z)δ^*)^{-1}`.
    pub fn crofoot(&self, z: &BallPoint) -> Result<CMat> {
        let bv = self.triple.bv_eval(z)?;
        Ok(&self.delta_defects.ds * inv(&(eye(self.p()) + bv * self.delta.adjoint()))?)
    }

    /// `κ(z) = Γ(z)·D(z)^{-*}·M(z)^*`.
    pub fn kernel_pullback(&self, z: &BallPoint) -> Result<CMat> {
        let g = self.triple.gamma_eval(z)?;
        let dz = self.triple.d_eval(z)?;
        let k = cond(&dz);
        if k > COND_CAP {
            return Err(Error::IllConditioned(k));
        }
        Ok(g * inv(&dz.adjoint())? * self.crofoot(z)?.adjoint())
    }

    /// `𝐛_T(z) = (M(z) ⊗ I_d)·𝐛_V(z)·D_δ`.
    pub fn gleason_solution(&self, z: &BallPoint) -> Result<CMat> {
        let m = kron_eye(self.d(), &self.crofoot(z)?);
        Ok(m * self.triple.bold_bv_eval(z)? * &self.delta_defects.d)
    }

    /// `γ∞·D_δ`, the Gleason solution in state-space coordinates.
    pub fn gleason_coords(&self) -> CMat {
        &self.triple.gamma_inf * &self.delta_defects.d
    }

    /// `(w^*κ(w)e − γ∞D_δ b_T(w)^*e, T^*κ(w)e)`.
    pub fn gleason_x_action(&self, w: &BallPoint, e: &CMat) -> Result<(CMat, CMat)> {
        let kw = self.kernel_pullback(w)? * e;
        let lhs = apply_point_adjoint(w, &kw) - self.gleason_coords() * self.bt_eval(w)?.adjoint() * e;
        let rhs = self.t.adjoint_apply(&kw);
        Ok((lhs, rhs))
    }
}

/// Matrix of `Θ_T(z) = −T + D_{T^*}(I − zT^*)^{-1}·z·D_T` from `ran D_T` to `ran D_{T^*}`.
pub fn nagy_foias_theta(t: &RowContraction, z: &BallPoint) -> Result<CMat> {
    let b0 = t.defect_range().basis;
    let b1 = t.defect_adj_range().basis;
    let dt = t.defect()?;
    let dts = t.defect_adj()?;
    let res = inv(&(eye(t.n) - t.z_tstar(z)))?;
    let core = -t.row() + dts * res * contract_row(z, &dt);
    Ok(b1.adjoint() * core * b0)
}

pub fn theta_function(t: &RowContraction) -> SchurFunction {
    let p = t.defect_adj_range().dim();
    let q = t.defect_range().dim();
    let tt = t.clone();
    SchurFunction::closure(p, q, t.d, move |z| nagy_foias_theta(&tt, z))
}

/// True iff no nonzero `g` in the support of `b_T` has `b_T·g ∈ H(b_T)` on the grid.
///
/// Elements of `H(b_T)` are `z ↦ κ(z)^*h`; the test is the smallest singular
/// value of the stacked `b_T(z_i)S` after projecting out the span of the stacked `κ(z_i)^*`.
pub fn qe_membership_test(data: &CharacteristicData, points: &[BallPoint]) -> Result<bool> {
    Ok(qe_membership_margin(data, points)? > 10.0 * data.t.tol.residual)
}

pub fn qe_membership_margin(data: &CharacteristicData, points: &[BallPoint]) -> Result<f64> {
    let tol = &data.t.tol;
    let s = support(&data.b_t, points, tol)?.basis;
    if s.ncols() == 0 {
        return Ok(f64::INFINITY);
    }
    let rows: Vec<Result<(CMat, CMat)>> = par::map(points, |z| Ok((data.bt_eval(z)? * &s, data.kernel_pullback(z)?.adjoint())));
    let rows: Vec<(CMat, CMat)> = rows.into_iter().collect::<Result<_>>()?;
    let bs: Vec<&CMat> = rows.iter().map(|r| &r.0).collect();
    let ks: Vec<&CMat> = rows.iter().map(|r| &r.1).collect();
    let b = vstack(&bs);
    let k = range_basis_ref(&vstack(&ks), tol, None);
    let resid = &b - k.projector() * &b;
    Ok(singular_values(&resid).last().copied().unwrap_or(0.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub residual: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &'static str, residual: f64, bound: f64) -> Self {
        Check { name, residual, bound, pass: residual <= bound }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    pub n: usize,
    pub d: usize,
    pub p: usize,
    pub q: usize,
    pub is_ccnc: bool,
    pub grid: usize,
    pub kappa_rank: usize,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Per-point maxima of the model identities.
#[derive(Debug, Clone, Copy, Default)]
struct PointResiduals {
    resolvent: f64,
    gleason: f64,
    coords: f64,
    colligation: f64,
    action: f64,
}

fn point_residuals(data: &CharacteristicData, z: &BallPoint, bt0: &CMat) -> Result<PointResiduals> {
    let kz = data.kernel_pullback(z)?;
    let resolvent = op_norm(&(data.t.resolvent(z)? * &data.kappa0 - &kz));
    let bold = data.gleason_solution(z)?;
    let bt = data.bt_eval(z)?;
    let gleason = op_norm(&(contract_row(z, &bold) - (&bt - bt0)));
    let coords = op_norm(&(kron_eye(data.d(), &kz.adjoint()) * data.gleason_coords() - &bold));
    let colligation = op_norm(&(data.triple.bv_eval(z)? - data.triple.colligation_transfer(z)?));
    let (lhs, rhs) = data.gleason_x_action(z, &eye(data.p()))?;
    let action = op_norm(&(lhs - rhs));
    Ok(PointResiduals { resolvent, gleason, coords, colligation, action })
}

/// `max ‖Γ(z)^*Γ(w) − D(z)k^{b_V}(z,w)D(w)^*‖` over pairs of `points`.
pub fn kernel_factorization_residual(triple: &ModelTriple, points: &[BallPoint]) -> Result<f64> {
    let p = triple.p();
    let rows: Vec<Result<(CMat, CMat, CMat)>> = par::map(points, |z| Ok((triple.gamma_eval(z)?, triple.d_eval(z)?, triple.bv_eval(z)?)));
    let rows: Vec<(CMat, CMat, CMat)> = rows.into_iter().collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for (i, (gi, di, bi)) in rows.iter().enumerate() {
        for (j, (gj, dj, bj)) in rows.iter().enumerate() {
            let den = crate::numlin::C64::new(1.0, 0.0) - points[i].pair(&points[j]);
            let kv = (eye(p) - bi * bj.adjoint()) / den;
            worst = worst.max(op_norm(&(gi.adjoint() * gj - di * kv * dj.adjoint())));
        }
    }
    Ok(worst)
}

/// Run every model identity on the sampler's grid and report residuals against `bound`.
pub fn verify_model(t: &RowContraction, sampler: &Sampler, bound: f64) -> Result<ModelReport> {
    let is_ccnc = classify::is_ccnc(t, sampler)?;
    let data = characteristic_function_unchecked(t)?;
    let points = sampler.points(t.d);
    let bt0 = data.bt_eval(&BallPoint::origin(t.d))?;
    let per: Vec<PointResiduals> = par::map(&points, |z| point_residuals(&data, z, &bt0)).into_iter().collect::<Result<_>>()?;
    let fold = |f: fn(&PointResiduals) -> f64| per.iter().map(f).fold(0.0, f64::max);

    let kappas: Vec<CMat> = par::map(&points, |z| data.kernel_pullback(z)).into_iter().collect::<Result<_>>()?;
    let bts = data.b_t.eval_many(&points)?;
    let mut kernel: f64 = 0.0;
    for i in 0..points.len() {
        for j in 0..points.len() {
            let den = crate::numlin::C64::new(1.0, 0.0) - points[i].pair(&points[j]);
            let kt = (eye(data.p()) - &bts[i] * bts[j].adjoint()) / den;
            kernel = kernel.max(op_norm(&(kappas[i].adjoint() * &kappas[j] - kt)));
        }
    }
    let glerep = kernel_factorization_residual(&data.triple, &points)?;
    let refs: Vec<&CMat> = kappas.iter().collect();
    let kappa_rank = range_basis_ref(&hstack(&refs), &t.tol, Some(1.0)).dim();
    let extremal = {
        let g = data.gleason_coords();
        op_norm(&(g.adjoint() * &g - (eye(data.q()) - data.delta.adjoint() * &data.delta)))
    };
    let theta = weak_coincidence(&theta_function(t), &data.b_t, &points, &t.tol)?.residual;
    let checks = vec![
        Check::new("resolvent_identity", fold(|r| r.resolvent), bound),
        Check::new("kappa_kernel", kernel, bound),
        Check::new("kernel_factorization", glerep, bound),
        Check::new("kappa_span_rank", (t.n - kappa_rank) as f64, 0.0),
        Check::new("gleason_identity", fold(|r| r.gleason), bound),
        Check::new("extremality", extremal, bound),
        Check::new("gleason_coordinates", fold(|r| r.coords), bound),
        Check::new("colligation_route", fold(|r| r.colligation), bound),
        Check::new("colligation_isometry", data.triple.colligation_defect(), bound),
        Check::new("model_action", fold(|r| r.action), bound),
        Check::new("theta_weak_coincidence", theta, bound.max(10.0 * t.tol.residual)),
    ];
    let pass = is_ccnc && checks.iter().all(|c| c.pass);
    Ok(ModelReport { n: t.n, d: t.d, p: data.p(), q: data.q(), is_ccnc, grid: points.len(), kappa_rank, checks, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{gen_ensemble, Kind};
    use crate::numlin::{c, fro, real_mat, Tol, C64};
    use crate::rowop::scalar;

    fn tol() -> Tol {
        Tol::default()
    }

    fn half() -> RowContraction {
        RowContraction::new(vec![scalar(c(0.5, 0.0))], tol()).unwrap()
    }

    fn disk_points(k: usize) -> Vec<BallPoint> {
        (0..k).map(|j| BallPoint(vec![C64::from_polar(0.85 * j as f64 / k as f64, 2.1 * j as f64)])).collect()
    }

    #[test]
    fn triples_of_small_cases() {
        let z = RowContraction::zero(1, 2, tol());
        let tr = model_triple(&z.iso_pure_decompose().unwrap(), &z).unwrap();
        assert_eq!((tr.p(), tr.q()), (1, 2));
        assert!((tr.gamma0[(0, 0)].norm() - 1.0).abs() < 1e-15);

        let r = 0.5f64.sqrt();
        let co = RowContraction::new(vec![scalar(c(r, 0.0)), scalar(c(r, 0.0))], tol()).unwrap();
        let tr = model_triple(&co.iso_pure_decompose().unwrap(), &co).unwrap();
        assert_eq!(tr.p(), 0);
        assert!(matches!(tr.gamma_eval(&BallPoint::origin(2)), Err(Error::DegenerateTriple)));

        let tr = model_triple(&half().iso_pure_decompose().unwrap(), &half()).unwrap();
        assert_eq!((tr.p(), tr.q()), (1, 1));
    }

    #[test]
    fn scalar_model_maps() {
        let t = c(0.3, 0.2);
        let tt = RowContraction::new(vec![scalar(t)], tol()).unwrap();
        let tr = model_triple(&tt.iso_pure_decompose().unwrap(), &tt).unwrap();
        let o = BallPoint::origin(1);
        assert!(fro(&(tr.gamma_eval(&o).unwrap() - &tr.gamma0)) < 1e-15);
        assert!(fro(&(tr.d_eval(&o).unwrap() - eye(1))) < 1e-15);
        let ph = tr.gamma0[(0, 0)];
        for z in disk_points(10) {
            let w = z.0[0];
            let g = tr.gamma_eval(&z).unwrap()[(0, 0)] / ph;
            assert!((g - 1.0 / (1.0 - t * w.conj())).norm() < 1e-14);
            let dz = tr.d_eval(&z).unwrap()[(0, 0)];
            assert!((dz - 1.0 / (1.0 - t.conj() * w)).norm() < 1e-14);
            let bv = tr.bv_eval(&z).unwrap()[(0, 0)];
            assert!(((bv / w).norm() - 1.0).abs() < 1e-12 || w.norm() < 1e-12);
        }
    }

    #[test]
    fn zero_model_gives_coordinate_row() {
        let z = RowContraction::zero(1, 2, tol());
        let tr = model_triple(&z.iso_pure_decompose().unwrap(), &z).unwrap();
        let pt = BallPoint(vec![c(0.2, 0.1), c(-0.3, 0.4)]);
        let bv = tr.bv_eval(&pt).unwrap();
        let want = CMat::from_row_slice(1, 2, &[pt.0[0], pt.0[1]]) * tr.gamma0[(0, 0)].conj();
        // γ∞ is an arbitrary orthonormal basis of C^2, so compare up to that unitary.
        assert!(fro(&(bv * tr.gamma_inf.adjoint() - want)) < 1e-14);
        assert!(fro(&tr.colligation_transfer(&BallPoint::origin(2)).unwrap()) == 0.0);
    }

    #[test]
    fn golden_scalar_case() {
        let data = characteristic_function(&half(), &Sampler::default()).unwrap();
        assert!((data.delta[(0, 0)].norm() - 0.5).abs() < 1e-15);
        let o = BallPoint::origin(1);
        let bt0 = data.bt_eval(&o).unwrap()[(0, 0)];
        let g0 = data.triple.gamma0[(0, 0)];
        let gi = data.triple.gamma_inf[(0, 0)];
        // The framing phases make b_T(z) = g0^* b(z) gi with the scalar Möbius b.
        let phase = g0.conj() * gi;
        assert!((bt0 - phase * (-0.5)).norm() < 1e-15);
        for z in disk_points(25) {
            let w = z.0[0];
            let want = (w - 0.5) / (1.0 - w / 2.0);
            assert!((data.bt_eval(&z).unwrap()[(0, 0)] - phase * want).norm() < 1e-12);
            let kappa = data.kernel_pullback(&z).unwrap()[(0, 0)];
            assert!((kappa - g0 * (3f64.sqrt() / 2.0) / (1.0 - w.conj() / 2.0)).norm() < 1e-12);
            let th = nagy_foias_theta(&half(), &z).unwrap()[(0, 0)];
            let b0 = half().defect_range().basis[(0, 0)];
            let b1 = half().defect_adj_range().basis[(0, 0)];
            assert!((th - b1.conj() * b0 * want).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_isometry_has_no_shift() {
        let v = RowContraction::new(vec![real_mat(2, 2, &[0.0, 1.0, 0.0, 0.0]), crate::numlin::zeros(2, 2)], tol()).unwrap();
        let data = characteristic_function(&v, &Sampler::default()).unwrap();
        assert!(fro(&data.delta) < 1e-14);
        let z = BallPoint(vec![c(0.2, 0.3), c(-0.1, 0.0)]);
        assert!(fro(&(data.bt_eval(&z).unwrap() - data.triple.bv_eval(&z).unwrap())) < 1e-14);
    }

    #[test]
    fn not_ccnc_is_refused() {
        let r = 0.5f64.sqrt();
        let co = RowContraction::new(vec![scalar(c(r, 0.0)), scalar(c(r, 0.0))], tol()).unwrap();
        assert!(matches!(characteristic_function(&co, &Sampler::default()), Err(Error::NotCcnc)));
    }

    #[test]
    fn kappa_closed_form_and_crofoot_agree() {
        let t = &gen_ensemble(3, 2, 1, 5, Kind::CoisometryFree, tol())[0];
        let data = characteristic_function(t, &Sampler::default()).unwrap();
        for z in Sampler::default().with_count(10).points(2) {
            let closed = data.triple.gamma_eval(&z).unwrap() * &data.delta_defects.ds;
            assert!(fro(&(data.kernel_pullback(&z).unwrap() - closed)) < 1e-10);
            let m = crate::frostman::crofoot_multiplier(&data.b_t, &data.delta, &z, &tol()).unwrap();
            assert!(fro(&(m.value - data.crofoot(&z).unwrap())) < 1e-10);
        }
    }

    #[test]
    fn verify_small_cases() {
        let s = Sampler::default().with_count(15);
        let rep = verify_model(&half(), &s, 1e-10).unwrap();
        assert!(rep.pass, "{rep:?}");
        let rep = verify_model(&RowContraction::zero(2, 2, tol()), &s, 1e-10).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!((rep.p, rep.q), (2, 4));
    }

    #[test]
    fn qe_membership_examples() {
        let pts = Sampler::default().with_count(40).points(1);
        let data = characteristic_function(&half(), &Sampler::default()).unwrap();
        assert!(qe_membership_test(&data, &pts).unwrap());
        let z = RowContraction::zero(1, 2, tol());
        let data = characteristic_function(&z, &Sampler::default()).unwrap();
        assert!(qe_membership_test(&data, &Sampler::default().with_count(40).points(2)).unwrap());
    }
}
