//! The fourteen acceptance criteria, shared by `rowcon selftest` and the test suite.
//!
//! Every criterion is a list of measured quantities against fixed bounds. The
//! seeded ensembles are built once and reused by the criteria that share them.

use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::ball::{gaussian, rng, BallPoint, Sampler};
use crate::classify::{self, ClassificationReport};
use crate::ensemble::{self, isometric_plus_pure, random_unitary, Kind};
use crate::error::Result;
use crate::frostman::{frostman_identity_residual, phi, phi_inv};
use crate::herglotz_lab::{nonequivalence_probe, witness_fixture};
use crate::model::{
    characteristic_function, characteristic_function_unchecked, kernel_factorization_residual, model_triple,
    nagy_foias_theta, qe_membership_test, theta_function, CharacteristicData,
};
use crate::numlin::{eye, fro, hstack, op_norm, range_basis_ref, scale, CMat, Tol, C64};
use crate::par;
use crate::rowop::{contract_row, scalar, RowContraction};
use crate::schur::weak_coincidence;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AcceptanceConfig {
    pub tol: Tol,
    pub seed: u64,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        AcceptanceConfig { tol: Tol::default(), seed: 0x5eed }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Measure {
    pub label: &'static str,
    pub value: f64,
    pub bound: f64,
    /// `value` must exceed `bound` instead of staying below it.
    pub lower: bool,
}

impl Measure {
    fn upper(label: &'static str, value: f64, bound: f64) -> Self {
        Measure { label, value, bound, lower: false }
    }

    fn lower(label: &'static str, value: f64, bound: f64) -> Self {
        Measure { label, value, bound, lower: true }
    }

    pub fn pass(&self) -> bool {
        if self.lower {
            self.value > self.bound
        } else {
            self.value <= self.bound
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub measures: Vec<Measure>,
    pub error: Option<String>,
    pub detail: String,
    /// Wall-clock time is kept out of serialized reports so reruns stay byte-identical.
    #[serde(skip)]
    pub seconds: f64,
    pub time_limit: Option<f64>,
    pub pass: bool,
}

impl Outcome {
    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        let mut parts: Vec<String> = self
            .measures
            .iter()
            .map(|m| format!("{}={:.3e}{}{:.0e}", m.label, m.value, if m.lower { ">" } else { "<=" }, m.bound))
            .collect();
        if let Some(e) = &self.error {
            parts.push(format!("error: {e}"));
        }
        if !self.detail.is_empty() {
            parts.push(self.detail.clone());
        }
        let limit = self.time_limit.map(|l| format!(" (limit {l:.0}s)")).unwrap_or_default();
        format!("[{status}] {:>2} {:<28} {:.2}s{limit}  {}", self.id, self.name, self.seconds, parts.join(", "))
    }
}

struct Body {
    measures: Vec<Measure>,
    detail: String,
}

impl Body {
    fn new(measures: Vec<Measure>) -> Self {
        Body { measures, detail: String::new() }
    }

    fn with(mut self, detail: String) -> Self {
        self.detail = detail;
        self
    }
}

type Check = fn(&Context) -> Result<Body>;

const CRITERIA: [(u8, &str, Option<f64>, Check); 14] = [
    (1, "frostman_round_trip", Some(1.0), frostman_round_trip),
    (2, "frostman_kernel_identity", Some(1.0), frostman_kernel_identity),
    (3, "charfun_dual_route", Some(10.0), charfun_dual_route),
    (4, "kernel_factorization", Some(10.0), kernel_factorization),
    (5, "golden_scalar_case", None, golden_scalar_case),
    (6, "main_model_identity", Some(30.0), main_model_identity),
    (7, "unitary_invariance", None, unitary_invariance),
    (8, "nagy_foias_comparison", None, nagy_foias_comparison),
    (9, "span_oracle_equality", None, span_oracle_equality),
    (10, "classification_hierarchy", Some(60.0), classification_hierarchy),
    (11, "qe_cross_check", None, qe_cross_check),
    (12, "gleason_and_extremality", None, gleason_and_extremality),
    (13, "isometric_coinvariant", None, isometric_coinvariant),
    (14, "non_invariance_witness", None, non_invariance_witness),
];

pub fn criterion_names() -> Vec<(u8, &'static str)> {
    CRITERIA.iter().map(|c| (c.0, c.1)).collect()
}

/// Seeded ensembles shared between criteria.
pub struct Context {
    cfg: AcceptanceConfig,
    partial_isometries: OnceLock<Vec<RowContraction>>,
    ccnc: OnceLock<Result<Vec<CharacteristicData>>>,
    mixed: OnceLock<Vec<(RowContraction, Result<ClassificationReport>)>>,
}

impl Context {
    pub fn new(cfg: AcceptanceConfig) -> Self {
        Context { cfg, partial_isometries: OnceLock::new(), ccnc: OnceLock::new(), mixed: OnceLock::new() }
    }

    fn tol(&self) -> Tol {
        self.cfg.tol
    }

    fn seed(&self, salt: u64) -> u64 {
        self.cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(salt)
    }

    fn partial_isometries(&self) -> &[RowContraction] {
        self.partial_isometries.get_or_init(|| {
            let mut g = rng(self.seed(3));
            (0..50)
                .map(|_| {
                    let n = g.random_range(2..=6);
                    let d = g.random_range(1..=3);
                    ensemble::sample(n, d, Kind::PartialIsometry, &mut g, self.tol())
                })
                .collect()
        })
    }

    /// Fifty CCNC draws from the coisometry-free ensemble, with their model data.
    fn ccnc(&self) -> Result<&[CharacteristicData]> {
        let out = self.ccnc.get_or_init(|| {
            let mut g = rng(self.seed(6));
            let sampler = Sampler::default();
            let mut out = Vec::with_capacity(50);
            while out.len() < 50 {
                let n = g.random_range(1..=6);
                let d = g.random_range(1..=3);
                let t = ensemble::sample(n, d, Kind::CoisometryFree, &mut g, self.tol());
                match characteristic_function(&t, &sampler) {
                    Ok(data) => out.push(data),
                    Err(crate::Error::NotCcnc) => {}
                    Err(e) => return Err(e),
                }
            }
            Ok(out)
        });
        out.as_deref().map_err(Clone::clone)
    }

    fn mixed(&self) -> &[(RowContraction, Result<ClassificationReport>)] {
        self.mixed.get_or_init(|| {
            let kinds = [Kind::Generic, Kind::PartialIsometry, Kind::CoisometryFree, Kind::Sparse, Kind::Commuting];
            let ts = ensemble::mixed(500, 5, 3, &kinds, self.seed(10), self.tol());
            let sampler = Sampler::default();
            let reports = par::map(&ts, |t| classify::classify(t, &sampler));
            ts.into_iter().zip(reports).collect()
        })
    }
}

fn strict(p: usize, q: usize, g: &mut impl Rng) -> CMat {
    let m = gaussian(p, q, g);
    let r: f64 = g.random_range(0.0..0.95);
    scale(&m, r / op_norm(&m).max(1e-300))
}

fn grid(count: usize, seed: u64, d: usize) -> Vec<BallPoint> {
    Sampler { count, seed, ring_radius: 0.9 }.points(d)
}

fn frostman_round_trip(cx: &Context) -> Result<Body> {
    let mut g = rng(cx.seed(1));
    let tol = cx.tol();
    let (mut fwd, mut bwd): (f64, f64) = (0.0, 0.0);
    for _ in 0..200 {
        let p = g.random_range(1..=4);
        let q = g.random_range(1..=5);
        let a = strict(p, q, &mut g);
        let b = strict(p, q, &mut g);
        fwd = fwd.max(fro(&(phi_inv(&a, &phi(&a, &b, &tol)?, &tol)? - &b)));
        bwd = bwd.max(fro(&(phi(&a, &phi_inv(&a, &b, &tol)?, &tol)? - &b)));
    }
    Ok(Body::new(vec![Measure::upper("inv∘phi", fwd, 1e-10), Measure::upper("phi∘inv", bwd, 1e-10)]))
}

fn frostman_kernel_identity(cx: &Context) -> Result<Body> {
    let mut g = rng(cx.seed(2));
    let tol = cx.tol();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = g.random_range(1..=4);
        let q = g.random_range(1..=5);
        let (a, b, c) = (strict(p, q, &mut g), strict(p, q, &mut g), strict(p, q, &mut g));
        worst = worst.max(frostman_identity_residual(&a, &b, &c, &tol)?);
    }
    Ok(Body::new(vec![Measure::upper("identity", worst, 1e-10)]))
}

fn charfun_dual_route(cx: &Context) -> Result<Body> {
    let (mut route, mut iso): (f64, f64) = (0.0, 0.0);
    for (k, t) in cx.partial_isometries().iter().enumerate() {
        let tr = model_triple(&t.iso_pure_decompose()?, t)?;
        for z in grid(50, cx.seed(300 + k as u64), t.d) {
            route = route.max(op_norm(&(tr.bv_eval(&z)? - tr.colligation_transfer(&z)?)));
        }
        iso = iso.max(tr.colligation_defect());
    }
    Ok(Body::new(vec![Measure::upper("route", route, 1e-8), Measure::upper("isometry", iso, 1e-8)]))
}

fn kernel_factorization(cx: &Context) -> Result<Body> {
    let mut worst: f64 = 0.0;
    for (k, t) in cx.partial_isometries().iter().enumerate() {
        let tr = model_triple(&t.iso_pure_decompose()?, t)?;
        worst = worst.max(kernel_factorization_residual(&tr, &grid(15, cx.seed(400 + k as u64), t.d))?);
    }
    Ok(Body::new(vec![Measure::upper("factorization", worst, 1e-8)]))
}

fn golden_scalar_case(cx: &Context) -> Result<Body> {
    let t = RowContraction::new(vec![scalar(C64::new(0.5, 0.0))], cx.tol())?;
    let data = characteristic_function(&t, &Sampler::default())?;
    let (mut eb, mut et, mut ek): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for z in grid(25, cx.seed(5), 1) {
        let w = z.0[0];
        let mobius = (w - 0.5) / (1.0 - w * 0.5);
        let kappa = C64::new(0.75f64.sqrt(), 0.0) / (1.0 - w.conj() * 0.5);
        eb = eb.max((data.bt_eval(&z)?[(0, 0)] - mobius).norm());
        et = et.max((nagy_foias_theta(&t, &z)?[(0, 0)] - mobius).norm());
        ek = ek.max((data.kernel_pullback(&z)?[(0, 0)] - kappa).norm());
    }
    Ok(Body::new(vec![Measure::upper("b_T", eb, 1e-12), Measure::upper("theta", et, 1e-12), Measure::upper("kappa", ek, 1e-12)]))
}

fn main_model_identity(cx: &Context) -> Result<Body> {
    let (mut res, mut ker, mut deficit): (f64, f64, usize) = (0.0, 0.0, 0);
    for (k, data) in cx.ccnc()?.iter().enumerate() {
        let t = &data.t;
        let pts = grid(20, cx.seed(600 + k as u64), t.d);
        let kappas: Vec<CMat> = pts.iter().map(|z| data.kernel_pullback(z)).collect::<Result<_>>()?;
        let bts: Vec<CMat> = pts.iter().map(|z| data.bt_eval(z)).collect::<Result<_>>()?;
        for (i, z) in pts.iter().enumerate() {
            res = res.max(op_norm(&(t.resolvent(z)? * &data.kappa0 - &kappas[i])));
            for (j, w) in pts.iter().enumerate() {
                let kb = (eye(data.p()) - &bts[i] * bts[j].adjoint()) / (C64::new(1.0, 0.0) - z.pair(w));
                ker = ker.max(op_norm(&(kappas[i].adjoint() * &kappas[j] - kb)));
            }
        }
        let refs: Vec<&CMat> = kappas.iter().collect();
        deficit += t.n - range_basis_ref(&hstack(&refs), &t.tol, Some(1.0)).dim();
    }
    Ok(Body::new(vec![
        Measure::upper("resolvent", res, 1e-7),
        Measure::upper("kernel", ker, 1e-7),
        Measure::upper("rank_deficit", deficit as f64, 0.0),
    ]))
}

fn unitary_invariance(cx: &Context) -> Result<Body> {
    let mut g = rng(cx.seed(7));
    let mut worst: f64 = 0.0;
    for (k, data) in cx.ccnc()?.iter().enumerate() {
        let u = random_unitary(data.n(), &mut g);
        let other = characteristic_function_unchecked(&data.t.conjugate(&u))?;
        let pts = grid(15, cx.seed(700 + k as u64), data.d());
        worst = worst.max(weak_coincidence(&data.b_t, &other.b_t, &pts, &data.t.tol)?.residual);
    }
    Ok(Body::new(vec![Measure::upper("weak_residual", worst, 1e-6)]))
}

fn nagy_foias_comparison(cx: &Context) -> Result<Body> {
    let mut worst: f64 = 0.0;
    for (k, data) in cx.ccnc()?.iter().enumerate() {
        let pts = grid(15, cx.seed(800 + k as u64), data.d());
        worst = worst.max(weak_coincidence(&theta_function(&data.t), &data.b_t, &pts, &data.t.tol)?.residual);
    }
    Ok(Body::new(vec![Measure::upper("weak_residual", worst, 1e-6)]))
}

fn span_oracle_equality(cx: &Context) -> Result<Body> {
    let kinds = [Kind::Generic, Kind::PartialIsometry, Kind::CoisometryFree, Kind::Sparse, Kind::Commuting];
    let ts = ensemble::mixed(50, 5, 3, &kinds, cx.seed(9), cx.tol());
    let sampler = Sampler::default();
    let pairs: Vec<Result<(usize, usize)>> =
        par::map(&ts, |t| Ok((classify::ccnc_span(t, &sampler)?.dim(), classify::ccnc_span_oracle(t)?.dim())));
    let mut mismatches = 0;
    for p in pairs {
        let (a, b) = p?;
        mismatches += usize::from(a != b);
    }
    Ok(Body::new(vec![Measure::upper("mismatches", mismatches as f64, 0.0)]))
}

fn classification_hierarchy(cx: &Context) -> Result<Body> {
    let mut violations = 0;
    let (mut cnc, mut ccnc, mut qe, mut commuting) = (0, 0, 0, 0);
    for (_, r) in cx.mixed() {
        let r = r.as_ref().map_err(Clone::clone)?;
        violations += usize::from(r.is_qe && !r.is_ccnc) + usize::from(r.is_ccnc && !r.is_cnc);
        if r.is_commuting {
            commuting += 1;
            violations += usize::from(r.is_cnc != r.is_ccnc);
        }
        cnc += usize::from(r.is_cnc);
        ccnc += usize::from(r.is_ccnc);
        qe += usize::from(r.is_qe);
    }
    Ok(Body::new(vec![Measure::upper("violations", violations as f64, 0.0)])
        .with(format!("cnc {cnc}, ccnc {ccnc}, qe {qe}, commuting {commuting} of 500")))
}

fn qe_cross_check(cx: &Context) -> Result<Body> {
    let sampler = Sampler::default();
    let grid40 = sampler.with_count(40);
    let mut cases: Vec<(RowContraction, bool)> = Vec::new();
    for (t, r) in cx.mixed() {
        let r = r.as_ref().map_err(Clone::clone)?;
        if r.is_ccnc {
            cases.push((t.clone(), r.is_qe));
        }
    }
    // Random frames of a known CCNC, non-quasi-extreme construction.
    let mut g = rng(cx.seed(11));
    for _ in 0..20 {
        let t = ensemble::cancelling_pair(g.random_range(0.05..0.7), &mut g, cx.tol());
        let r = classify::classify(&t, &sampler)?;
        if r.is_ccnc {
            cases.push((t, r.is_qe));
        }
    }
    let verdicts: Vec<Result<bool>> = par::map(&cases, |(t, is_qe)| {
        let data = characteristic_function_unchecked(t)?;
        Ok(qe_membership_test(&data, &grid40.points(t.d))? == *is_qe)
    });
    let mut disagree = 0;
    for v in verdicts {
        disagree += usize::from(!v?);
    }
    let non_qe = cases.iter().filter(|c| !c.1).count();
    Ok(Body::new(vec![Measure::upper("disagreements", disagree as f64, 0.0)])
        .with(format!("{} ccnc instances, {non_qe} not quasi-extreme", cases.len())))
}

fn gleason_and_extremality(cx: &Context) -> Result<Body> {
    let (mut gl, mut ex): (f64, f64) = (0.0, 0.0);
    for (k, data) in cx.ccnc()?.iter().enumerate() {
        let origin = BallPoint::origin(data.d());
        let bt0 = data.bt_eval(&origin)?;
        for z in grid(20, cx.seed(1200 + k as u64), data.d()) {
            let lhs = contract_row(&z, &data.gleason_solution(&z)?);
            gl = gl.max(op_norm(&(lhs - (data.bt_eval(&z)? - &bt0))));
        }
        let c = data.gleason_coords();
        ex = ex.max(op_norm(&(c.adjoint() * &c - (eye(data.q()) - data.delta.adjoint() * &data.delta))));
    }
    Ok(Body::new(vec![Measure::upper("gleason", gl, 1e-8), Measure::upper("extremality", ex, 1e-10)]))
}

fn isometric_coinvariant(cx: &Context) -> Result<Body> {
    let tol = cx.tol();
    let mut g = rng(cx.seed(13));
    let (mut block, mut sampled): (f64, f64) = (0.0, 0.0);
    for commuting in [false, true] {
        for k in 0..20 {
            let n_iso = g.random_range(1..=2);
            let n_cnc = g.random_range(2..=3);
            let d = g.random_range(1..=3);
            let (v, h) = isometric_plus_pure(n_iso, n_cnc, d, commuting, &mut g, tol);
            let found = classify::max_isometric_coinvariant(&v)?;
            block = block.max(found.distance(&h));
            if commuting {
                let pts = grid(20, cx.seed(1300 + k), d);
                sampled = sampled.max(classify::restricted_range_intersection(&v, &pts)?.distance(&found));
            }
        }
    }
    Ok(Body::new(vec![Measure::upper("block_angle", block, 1e-7), Measure::upper("sampled_angle", sampled, 1e-7)]))
}

fn non_invariance_witness(cx: &Context) -> Result<Body> {
    let rep = nonequivalence_probe(&witness_fixture(cx.tol())?)?;
    Ok(Body::new(vec![Measure::lower("solution_gap", rep.solution_gap, 1e-4), Measure::upper("weak_residual", rep.weak_residual, 1e-6)])
        .with(format!("grid {} rank {} ker {} coker {}", rep.grid, rep.rank, rep.dim_ker, rep.dim_coker)))
}

fn run_one(cx: &Context, (id, name, limit, check): (u8, &'static str, Option<f64>, Check)) -> Outcome {
    let start = Instant::now();
    let result = check(cx);
    let seconds = start.elapsed().as_secs_f64();
    let (measures, detail, error) = match result {
        Ok(b) => (b.measures, b.detail, None),
        Err(e) => (Vec::new(), String::new(), Some(e.to_string())),
    };
    let in_time = limit.is_none_or(|l| seconds < l);
    let pass = error.is_none() && measures.iter().all(Measure::pass) && in_time;
    Outcome { id, name, measures, error, detail, seconds, time_limit: limit, pass }
}

/// Runs the selected criteria (all when `only` is empty) in order.
pub fn run(cfg: AcceptanceConfig, only: &[u8]) -> Vec<Outcome> {
    let cx = Context::new(cfg);
    CRITERIA.iter().filter(|c| only.is_empty() || only.contains(&c.0)).map(|&c| run_one(&cx, c)).collect()
}
