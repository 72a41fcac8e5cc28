//! Möbius automorphisms of the operator unit ball and Frostman shifts.

use serde::Serialize;

use crate::ball::BallPoint;
use crate::error::{Error, Result};
use crate::numlin::{eye, herm_inv_sqrt, herm_sqrt, inv, op_norm, CMat, Tol};
use crate::schur::{Body, SchurFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionKind {
    Strict,
    Boundary,
    NotContraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionClass {
    pub kind: ContractionKind,
    pub norm: f64,
}

/// In finite dimensions a pure contraction is strict, so there is no separate pure kind.
pub fn classify_contraction(a: &CMat, tol: &Tol) -> ContractionClass {
    let norm = op_norm(a);
    let kind = if norm < 1.0 - tol.rank_rel {
        ContractionKind::Strict
    } else if norm <= 1.0 + tol.residual {
        ContractionKind::Boundary
    } else {
        ContractionKind::NotContraction
    };
    ContractionClass { kind, norm }
}

/// `D_α`, `D_α^{-1}`, `D_{α^*}`, `D_{α^*}^{-1}` for a strict `α`.
#[derive(Debug, Clone)]
pub struct Defects {
    pub alpha: CMat,
    pub d: CMat,
    pub d_inv: CMat,
    pub ds: CMat,
    pub ds_inv: CMat,
}

impl Defects {
    pub fn new(alpha: &CMat, tol: &Tol) -> Result<Self> {
        let c = classify_contraction(alpha, tol);
        if c.kind != ContractionKind::Strict {
            return Err(Error::AlphaNotStrict(c.norm));
        }
        let (p, q) = alpha.shape();
        let qq = eye(q) - alpha.adjoint() * alpha;
        let pp = eye(p) - alpha * alpha.adjoint();
        Ok(Defects {
            alpha: alpha.clone(),
            d: herm_sqrt(&qq, tol)?,
            d_inv: herm_inv_sqrt(&qq, tol)?,
            ds: herm_sqrt(&pp, tol)?,
            ds_inv: herm_inv_sqrt(&pp, tol)?,
        })
    }

    /// `Φ_α(β) = D_{α^*}(I − βα^*)^{-1}(β − α)D_α^{-1}`.
    pub fn phi(&self, beta: &CMat) -> Result<CMat> {
        check_shape(&self.alpha, beta)?;
        let a = &self.alpha;
        let den = inv(&(eye(a.nrows()) - beta * a.adjoint())).map_err(|_| Error::SingularDenominator)?;
        Ok(&self.ds * den * (beta - a) * &self.d_inv)
    }

    /// `Φ_α^{-1}(β) = D_{α^*}^{-1}(β + α)(I + α^*β)^{-1}D_α`.
    pub fn phi_inv(&self, beta: &CMat) -> Result<CMat> {
        check_shape(&self.alpha, beta)?;
        let a = &self.alpha;
        let den = inv(&(eye(a.ncols()) + a.adjoint() * beta)).map_err(|_| Error::SingularDenominator)?;
        Ok(&self.ds_inv * (beta + a) * den * &self.d)
    }
}

fn check_shape(a: &CMat, b: &CMat) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!("alpha {:?} vs beta {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

pub fn phi(alpha: &CMat, beta: &CMat, tol: &Tol) -> Result<CMat> {
    Defects::new(alpha, tol)?.phi(beta)
}

pub fn phi_inv(alpha: &CMat, beta: &CMat, tol: &Tol) -> Result<CMat> {
    Defects::new(alpha, tol)?.phi_inv(beta)
}

/// `‖(I − Φ_α(β)Φ_α(γ)^*) − D_{α^*}(I − βα^*)^{-1}(I − βγ^*)(I − αγ^*)^{-1}D_{α^*}‖`.
pub fn frostman_identity_residual(alpha: &CMat, beta: &CMat, gamma: &CMat, tol: &Tol) -> Result<f64> {
    let df = Defects::new(alpha, tol)?;
    let p = alpha.nrows();
    let fb = df.phi(beta)?;
    let fg = df.phi(gamma)?;
    let lhs = eye(p) - &fb * fg.adjoint();
    let l = inv(&(eye(p) - beta * alpha.adjoint()))?;
    let r = inv(&(eye(p) - alpha * gamma.adjoint()))?;
    let rhs = &df.ds * l * (eye(p) - beta * gamma.adjoint()) * r * &df.ds;
    Ok(op_norm(&(lhs - rhs)))
}

/// Wrapper data for `Φ_α^{-1} ∘ Φ_{b(0)} ∘ b`; `alpha = None` is the zero shift `Φ_{b(0)} ∘ b`.
#[derive(Debug, Clone)]
pub struct FrostmanWrap {
    pub inner: SchurFunction,
    pub at_zero: Defects,
    pub target: Option<Defects>,
}

impl FrostmanWrap {
    pub fn eval(&self, z: &BallPoint) -> Result<CMat> {
        let v = self.at_zero.phi(&self.inner.eval(z)?)?;
        match &self.target {
            None => Ok(v),
            Some(t) => t.phi_inv(&v),
        }
    }
}

pub fn zero_shift(b: &SchurFunction, tol: &Tol) -> Result<SchurFunction> {
    let b0 = b.eval(&BallPoint::origin(b.d))?;
    let wrap = FrostmanWrap { inner: b.clone(), at_zero: Defects::new(&b0, tol)?, target: None };
    Ok(SchurFunction { p: b.p, q: b.q, d: b.d, body: Body::Frostman(Box::new(wrap)) })
}

pub fn frostman_shift(b: &SchurFunction, alpha: &CMat, tol: &Tol) -> Result<SchurFunction> {
    let b0 = b.eval(&BallPoint::origin(b.d))?;
    let wrap = FrostmanWrap {
        inner: b.clone(),
        at_zero: Defects::new(&b0, tol)?,
        target: Some(Defects::new(alpha, tol)?),
    };
    Ok(SchurFunction { p: b.p, q: b.q, d: b.d, body: Body::Frostman(Box::new(wrap)) })
}

/// Both forms of the Crofoot multiplier at `z` and the distance between them.
#[derive(Debug, Clone)]
pub struct Crofoot {
    pub value: CMat,
    pub alternate: CMat,
    pub consistency: f64,
}

/// `M(z) = (I − b^{⟨α⟩}(z)α^*)D_{α^*}^{-1} = D_{α^*}(I + b^{⟨0⟩}(z)α^*)^{-1}`.
pub fn crofoot_multiplier(b: &SchurFunction, alpha: &CMat, z: &BallPoint, tol: &Tol) -> Result<Crofoot> {
    let da = Defects::new(alpha, tol)?;
    let p = alpha.nrows();
    let shifted = frostman_shift(b, alpha, tol)?.eval(z)?;
    let zero = zero_shift(b, tol)?.eval(z)?;
    let value = (eye(p) - shifted * alpha.adjoint()) * &da.ds_inv;
    let alternate = &da.ds * inv(&(eye(p) + zero * alpha.adjoint()))?;
    let consistency = op_norm(&(&value - &alternate));
    Ok(Crofoot { value, alternate, consistency })
}

/// Zero-pad `b` to a square function.
pub fn square_extension(b: &SchurFunction) -> SchurFunction {
    if b.p == b.q {
        return b.clone();
    }
    let m = b.p.max(b.q);
    SchurFunction { p: m, q: m, d: b.d, body: Body::Padded(Box::new(b.clone())) }
}
