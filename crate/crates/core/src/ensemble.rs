//! Seeded random row contractions for batteries and the `gen` command.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ball::{cnormal, gaussian, rng};
use crate::numlin::{block_diag, op_norm, polar_unitary, scale, CMat, Subspace, Tol, C64};
use crate::rowop::RowContraction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    /// Ginibre blocks scaled to row norm 0.9.
    Generic,
    /// Row partial isometry of rank below `n`.
    PartialIsometry,
    /// Some singular values pinned to 1, never all `n` of them.
    CoisometryFree,
    /// Sparse row with singular values pinned to 1 except the last.
    Sparse,
    /// Polynomials in one matrix, optionally beside a coisometric scalar summand.
    Commuting,
}

impl std::str::FromStr for Kind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "generic" => Ok(Kind::Generic),
            "partial_isometry" => Ok(Kind::PartialIsometry),
            "coisometry_free" => Ok(Kind::CoisometryFree),
            "sparse" => Ok(Kind::Sparse),
            "commuting" => Ok(Kind::Commuting),
            _ => Err(format!("unknown ensemble kind {s:?}")),
        }
    }
}

pub fn random_unitary(n: usize, g: &mut impl Rng) -> CMat {
    polar_unitary(&gaussian(n, n, g))
}

/// `U·diag(s)·W^*` for a Ginibre `n × nd` row with the singular values replaced by `s`.
fn reshape_singular(row: &CMat, s: &[f64]) -> CMat {
    let dec = crate::numlin::svd(row);
    let k = s.len().min(dec.s.len());
    let mut out = CMat::zeros(row.nrows(), row.ncols());
    for (i, &x) in s.iter().enumerate().take(k) {
        out += dec.u.column(i) * dec.v.column(i).adjoint() * C64::new(x, 0.0);
    }
    out
}

fn split(row: CMat, d: usize, tol: Tol) -> RowContraction {
    RowContraction::from_row(&row, d, tol).expect("generated row is a contraction")
}

pub fn sample(n: usize, d: usize, kind: Kind, g: &mut impl Rng, tol: Tol) -> RowContraction {
    match kind {
        Kind::Generic => {
            let row = gaussian(n, n * d, g);
            let s = 0.9 / op_norm(&row).max(1e-300);
            split(scale(&row, s), d, tol)
        }
        Kind::PartialIsometry => {
            let r = if n > 1 { g.random_range(1..n) } else { 0 };
            let s: Vec<f64> = (0..n).map(|i| if i < r { 1.0 } else { 0.0 }).collect();
            split(reshape_singular(&gaussian(n, n * d, g), &s), d, tol)
        }
        Kind::CoisometryFree => loop {
            let s: Vec<f64> = (0..n).map(|_| if g.random_bool(0.5) { 1.0 } else { g.random_range(0.0..0.95) }).collect();
            if s.iter().any(|&x| x < 1.0) {
                break split(reshape_singular(&gaussian(n, n * d, g), &s), d, tol);
            }
        },
        Kind::Sparse => {
            let mut row = gaussian(n, n * d, g);
            for z in row.iter_mut() {
                if !g.random_bool(0.3) {
                    *z = C64::new(0.0, 0.0);
                }
            }
            if op_norm(&row) == 0.0 {
                row[(0, 0)] = C64::new(1.0, 0.0);
            }
            let last = if g.random_bool(0.7) { 0.0 } else { g.random_range(0.0..0.95) };
            let s: Vec<f64> = (0..n).map(|i| if i + 1 < n { 1.0 } else { last }).collect();
            split(reshape_singular(&row, &s), d, tol)
        }
        Kind::Commuting => {
            let with_iso = n > 1 && g.random_bool(0.3);
            let m = if with_iso { n - 1 } else { n };
            let a = gaussian(m, m, g);
            let a2 = &a * &a;
            let mut blocks: Vec<CMat> = (0..d)
                .map(|_| {
                    let c0 = cnormal(g);
                    let c1 = cnormal(g);
                    let c2 = cnormal(g);
                    CMat::identity(m, m) * (c0 * 0.2) + &a * c1 + &a2 * (c2 * 0.3)
                })
                .collect();
            let refs: Vec<&CMat> = blocks.iter().collect();
            let nr = op_norm(&crate::numlin::hstack(&refs)).max(1e-300);
            let target: f64 = g.random_range(0.5..0.95);
            for b in blocks.iter_mut() {
                *b = scale(b, target / nr);
            }
            if with_iso {
                let w = unit_vector(d, g);
                blocks = blocks
                    .iter()
                    .zip(&w)
                    .map(|(b, wk)| block_diag(&[&CMat::from_element(1, 1, *wk), b]))
                    .collect();
            }
            RowContraction::new(blocks, tol).expect("commuting sample is a contraction")
        }
    }
}

pub fn gen_ensemble(n: usize, d: usize, count: usize, seed: u64, kind: Kind, tol: Tol) -> Vec<RowContraction> {
    let mut g = rng(seed);
    (0..count).map(|_| sample(n, d, kind, &mut g, tol)).collect()
}

fn unit_vector(d: usize, g: &mut impl Rng) -> Vec<C64> {
    let w: Vec<C64> = (0..d).map(|_| cnormal(g)).collect();
    let nw = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    w.into_iter().map(|x| x / nw).collect()
}

/// `V_iso ⊕ V_cnc` in a random orthonormal frame, returned with the image of the first summand.
///
/// `V_iso` is co-isometric and `V_cnc` a CNC partial isometry; with `commuting` the
/// summands are `λ⊗I` and `c⊗S` for unit vectors `λ, c` and the truncated shift `S`.
pub fn isometric_plus_pure(n_iso: usize, n_cnc: usize, d: usize, commuting: bool, g: &mut impl Rng, tol: Tol) -> (RowContraction, Subspace) {
    let (iso, pure): (Vec<CMat>, Vec<CMat>) = if commuting {
        let lam = unit_vector(d, g);
        let c = unit_vector(d, g);
        let shift = CMat::from_fn(n_cnc, n_cnc, |i, j| if i == j + 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        (lam.iter().map(|l| CMat::identity(n_iso, n_iso) * *l).collect(), c.iter().map(|ck| &shift * *ck).collect())
    } else {
        let ones = vec![1.0; n_iso];
        let iso = split(reshape_singular(&gaussian(n_iso, n_iso * d, g), &ones), d, tol).blocks;
        let pure = loop {
            let cand = sample(n_cnc, d, Kind::PartialIsometry, g, tol);
            if crate::classify::is_cnc(&cand) {
                break cand.blocks;
            }
        };
        (iso, pure)
    };
    let blocks: Vec<CMat> = iso.iter().zip(&pure).map(|(a, b)| block_diag(&[a, b])).collect();
    let n = n_iso + n_cnc;
    let u = random_unitary(n, g);
    let v = RowContraction::new(blocks, tol).expect("block sum is a contraction").conjugate(&u);
    let h = Subspace { ambient: n, basis: u.columns(0, n_iso).into_owned(), tol };
    (v, h)
}

/// CCNC but not quasi-extreme, for `0 < alpha < 1/√2`, in a random orthonormal frame.
///
/// With defect vector `e_1`, `T_1e_1 = e_2`, `T_2e_1 = e_3`, `T_1e_3 = αe_1`, `T_2e_2 = −αe_1`:
/// the symmetrized words cancel on `e_1` while `ran T` still contains it.
pub fn cancelling_pair(alpha: f64, g: &mut impl Rng, tol: Tol) -> RowContraction {
    let mut t1 = CMat::zeros(3, 3);
    let mut t2 = CMat::zeros(3, 3);
    t1[(1, 0)] = C64::new(1.0, 0.0);
    t1[(0, 2)] = C64::new(alpha, 0.0);
    t2[(2, 0)] = C64::new(1.0, 0.0);
    t2[(0, 1)] = C64::new(-alpha, 0.0);
    let u = random_unitary(3, g);
    RowContraction::new(vec![t1, t2], tol).expect("alpha below 1/√2 gives a contraction").conjugate(&u)
}

/// Mixed ensemble over dimensions `n ≤ max_n`, `d ≤ max_d` and the given kinds.
pub fn mixed(count: usize, max_n: usize, max_d: usize, kinds: &[Kind], seed: u64, tol: Tol) -> Vec<RowContraction> {
    let mut g = rng(seed);
    (0..count)
        .map(|_| {
            let n = g.random_range(1..=max_n);
            let d = g.random_range(1..=max_d);
            let kind = *kinds.choose(&mut g).unwrap();
            sample(n, d, kind, &mut g, tol)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::range_basis_ref;

    #[test]
    fn every_kind_is_a_row_contraction() {
        let tol = Tol::default();
        for kind in [Kind::Generic, Kind::PartialIsometry, Kind::CoisometryFree, Kind::Sparse, Kind::Commuting] {
            for t in gen_ensemble(3, 2, 10, 7, kind, tol) {
                assert!(t.row_norm() <= 1.0 + 1e-12, "{kind:?}");
            }
        }
    }

    #[test]
    fn kind_specific_properties() {
        let tol = Tol::default();
        for t in gen_ensemble(4, 2, 10, 1, Kind::PartialIsometry, tol) {
            assert!(t.is_partial_isometry());
        }
        for t in gen_ensemble(3, 3, 10, 2, Kind::CoisometryFree, tol) {
            assert!(range_basis_ref(&t.defect_adj_sq(), &tol, Some(1.0)).dim() >= 1);
        }
        for t in gen_ensemble(3, 2, 10, 3, Kind::Commuting, tol) {
            assert!(t.is_commuting());
        }
    }

    #[test]
    fn generation_is_seeded() {
        let tol = Tol::default();
        let a = gen_ensemble(3, 2, 4, 7, Kind::Generic, tol);
        let b = gen_ensemble(3, 2, 4, 7, Kind::Generic, tol);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.row(), y.row());
        }
    }
}
