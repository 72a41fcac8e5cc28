//! Points of the unit ball `B^d`, matrix points of the NC ball, and the seeded sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numlin::{hstack, op_norm, CMat, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallPoint(pub Vec<C64>);

impl BallPoint {
    pub fn new(coords: Vec<C64>) -> Result<Self> {
        let p = BallPoint(coords);
        if p.norm() < 1.0 {
            Ok(p)
        } else {
            Err(Error::Invalid(format!("point of norm {} outside the ball", p.norm())))
        }
    }

    pub fn origin(d: usize) -> Self {
        BallPoint(vec![C64::new(0.0, 0.0); d])
    }

    pub fn d(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `z w^* = Σ z_k conj(w_k)`.
    pub fn pair(&self, w: &BallPoint) -> C64 {
        self.0.iter().zip(&w.0).map(|(a, b)| a * b.conj()).sum()
    }
}

/// A d-tuple of m×m matrices with `σ_max([Z_1 … Z_d]) < 1`.
#[derive(Debug, Clone)]
pub struct MatrixBallPoint {
    pub m: usize,
    pub blocks: Vec<CMat>,
}

impl MatrixBallPoint {
    pub fn new(blocks: Vec<CMat>) -> Result<Self> {
        let m = blocks.first().map_or(0, |b| b.nrows());
        if blocks.iter().any(|b| b.shape() != (m, m)) {
            return Err(Error::ShapeMismatch("matrix ball point blocks must be square and equal".into()));
        }
        let refs: Vec<&CMat> = blocks.iter().collect();
        let r = op_norm(&hstack(&refs));
        if r >= 1.0 {
            return Err(Error::Invalid(format!("matrix point of row norm {r} outside the ball")));
        }
        Ok(MatrixBallPoint { m, blocks })
    }

    pub fn scalar(z: &BallPoint) -> Self {
        MatrixBallPoint { m: 1, blocks: z.0.iter().map(|&c| CMat::from_element(1, 1, c)).collect() }
    }

    pub fn random(d: usize, m: usize, radius: f64, rng: &mut impl Rng) -> Self {
        let blocks: Vec<CMat> = (0..d).map(|_| gaussian(m, m, rng)).collect();
        let refs: Vec<&CMat> = blocks.iter().collect();
        let s = radius / op_norm(&hstack(&refs)).max(1e-300);
        MatrixBallPoint { m, blocks: blocks.into_iter().map(|b| b * C64::new(s, 0.0)).collect() }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cnormal(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) / 2f64.sqrt()
}

/// Complex Ginibre matrix with unit-variance entries.
pub fn gaussian(r: usize, c: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(r, c, |_, _| cnormal(rng))
}

/// Point uniform in volume of the ball of the given radius.
pub fn uniform_point(d: usize, radius: f64, rng: &mut impl Rng) -> BallPoint {
    let v: Vec<C64> = (0..d).map(|_| cnormal(rng)).collect();
    let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / (2.0 * d as f64));
    BallPoint(v.into_iter().map(|z| z * (r / nv)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    pub count: usize,
    pub seed: u64,
    pub ring_radius: f64,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler { count: 200, seed: 0x5eed, ring_radius: 0.9 }
    }
}

impl Sampler {
    pub fn with_count(self, count: usize) -> Self {
        Sampler { count, ..self }
    }

    /// The origin, then a deterministic ring, then volume-uniform points.
    ///
    /// The ring takes one point in ten (at least one when `count ≥ 2`).
    pub fn points(&self, d: usize) -> Vec<BallPoint> {
        let mut out = Vec::with_capacity(self.count);
        if self.count == 0 {
            return out;
        }
        out.push(BallPoint::origin(d));
        let ring = if self.count >= 2 { (self.count / 10).max(1) } else { 0 };
        for j in 0..ring {
            out.push(ring_point(d, j, ring, self.ring_radius));
        }
        let mut g = rng(self.seed);
        while out.len() < self.count {
            out.push(uniform_point(d, self.ring_radius.max(0.95), &mut g));
        }
        out
    }
}

fn ring_point(d: usize, j: usize, m: usize, radius: f64) -> BallPoint {
    let theta = std::f64::consts::TAU * (j as f64 + 0.5) / m as f64;
    // Weights vary with j so that ring points are not confined to one complex line.
    let w: Vec<f64> = (0..d).map(|k| 1.0 + ((j + 1) * (k + 1) % (d + 2)) as f64).collect();
    let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    BallPoint(
        (0..d)
            .map(|k| C64::from_polar(radius * w[k] / nw, theta * (k + 1) as f64))
            .collect(),
    )
}
