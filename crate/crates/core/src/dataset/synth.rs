//! Synthetic binary data sets: an elliptic quadratic pattern, Gaussian
//! blobs and a linearly separable slab.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LabeledDataset;
use crate::error::{Error, Result};

/// Relative half-width of the empty band around the ellipse when the
/// quadratic set is generated separable.
pub const QUADRATIC_GAP: f64 = 0.2;
/// Outer class fills squared whitened radii up to this value.
const QUADRATIC_OUTER: f64 = 2.0;
/// Semi-axis lengths of the ellipse; the first axis is 1, the rest this.
const MINOR_AXIS: f64 = 0.6;
const ROTATION: f64 = std::f64::consts::PI / 6.0;

/// Ground-truth ellipse `{x : (x−c)ᵀQ(x−c) = 1}` behind [`synth_quadratic`].
#[derive(Debug, Clone)]
pub struct Ellipse {
    n: usize,
}

impl Ellipse {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    fn center(&self) -> Vec<f64> {
        vec![0.0; self.n]
    }

    fn axis(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            MINOR_AXIS
        }
    }

    /// Whitened point to data space: scale by the axes, rotate the first
    /// coordinate plane, shift to the center.
    fn to_data(&self, u: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = u.iter().enumerate().map(|(k, v)| v * self.axis(k)).collect();
        if self.n >= 2 {
            let (s, c) = ROTATION.sin_cos();
            let (a, b) = (x[0], x[1]);
            x[0] = c * a - s * b;
            x[1] = s * a + c * b;
        }
        x.iter().zip(self.center()).map(|(v, c)| v + c).collect()
    }

    /// `(x−c)ᵀQ(x−c)`: below 1 inside, above 1 outside.
    pub fn level(&self, x: &[f64]) -> f64 {
        let mut d: Vec<f64> = x.iter().zip(self.center()).map(|(v, c)| v - c).collect();
        if self.n >= 2 {
            let (s, c) = ROTATION.sin_cos();
            let (a, b) = (d[0], d[1]);
            d[0] = c * a + s * b;
            d[1] = -s * a + c * b;
        }
        d.iter()
            .enumerate()
            .map(|(k, v)| (v / self.axis(k)).powi(2))
            .sum()
    }

    /// Noise-free label: `−1` inside the ellipse, `+1` outside.
    pub fn label(&self, x: &[f64]) -> f64 {
        if self.level(x) < 1.0 {
            -1.0
        } else {
            1.0
        }
    }
}

fn unit_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return g.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// Uniform sample (by volume) of the whitened shell `lo ≤ ‖u‖² ≤ hi`.
fn shell_point(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let dir = unit_direction(rng, n);
    let half_n = n as f64 / 2.0;
    let t: f64 = rng.random();
    let radius_pow = lo.powf(half_n) + t * (hi.powf(half_n) - lo.powf(half_n));
    let radius = radius_pow.powf(1.0 / n as f64);
    dir.into_iter().map(|v| v * radius).collect()
}

/// Two classes split by an ellipse: `−1` inside, `+1` outside.
///
/// With `separable` the classes keep a band of relative width
/// [`QUADRATIC_GAP`] on each side of the ellipse and `noise` is ignored.
/// Otherwise points touch the ellipse and every coordinate is perturbed by
/// Gaussian noise of standard deviation `noise` after labeling, so labels
/// near the boundary end up on the wrong side.
pub fn synth_quadratic(
    m_per_class: usize,
    n: usize,
    noise: f64,
    separable: bool,
    seed: u64,
) -> Result<LabeledDataset> {
    if m_per_class == 0 || n == 0 {
        return Err(Error::InvalidParam("need m_per_class ≥ 1 and n ≥ 1".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidParam(format!("noise must be ≥ 0, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ellipse = Ellipse::new(n);
    let gap = if separable { QUADRATIC_GAP } else { 0.0 };
    let mut points = Vec::with_capacity(2 * m_per_class);
    let mut labels = Vec::with_capacity(2 * m_per_class);
    for _ in 0..m_per_class {
        points.push(ellipse.to_data(&shell_point(&mut rng, n, 0.0, 1.0 - gap)));
        labels.push(-1.0);
        points.push(ellipse.to_data(&shell_point(&mut rng, n, 1.0 + gap, QUADRATIC_OUTER)));
        labels.push(1.0);
    }
    if !separable && noise > 0.0 {
        for p in &mut points {
            for v in p.iter_mut() {
                let e: f64 = StandardNormal.sample(&mut rng);
                *v += noise * e;
            }
        }
    }
    LabeledDataset::new(points, labels)
}

/// Gaussian blobs with identity covariance whose means sit `mean_sep` apart
/// along the diagonal direction.
pub fn synth_normal(m_per_class: usize, n: usize, mean_sep: f64, seed: u64) -> Result<LabeledDataset> {
    if m_per_class == 0 || n == 0 {
        return Err(Error::InvalidParam("need m_per_class ≥ 1 and n ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = 0.5 * mean_sep / (n as f64).sqrt();
    let mut points = Vec::with_capacity(2 * m_per_class);
    let mut labels = Vec::with_capacity(2 * m_per_class);
    for _ in 0..m_per_class {
        for y in [1.0, -1.0] {
            let p = (0..n)
                .map(|_| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    e + y * offset
                })
                .collect();
            points.push(p);
            labels.push(y);
        }
    }
    LabeledDataset::new(points, labels)
}

/// Linearly separable data together with the hyperplane that separates it.
#[derive(Debug, Clone)]
pub struct LinearSynth {
    pub data: LabeledDataset,
    /// Unit normal `w`; every sample has `y (wᵀx + b) ≥ margin`.
    pub normal: Vec<f64>,
    pub offset: f64,
    pub margin: f64,
}

/// Uniform points in `[−1, 1]ⁿ` labeled by a random hyperplane through the
/// origin, with the slab `|wᵀx| < margin` left empty.
pub fn synth_linear(m_per_class: usize, n: usize, margin: f64, seed: u64) -> Result<LinearSynth> {
    if m_per_class == 0 || n == 0 {
        return Err(Error::InvalidParam("need m_per_class ≥ 1 and n ≥ 1".into()));
    }
    if !(0.0..0.5).contains(&margin) {
        return Err(Error::InvalidParam(format!(
            "margin must lie in [0, 0.5), got {margin}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = unit_direction(&mut rng, n);
    let mut pos = Vec::with_capacity(m_per_class);
    let mut neg = Vec::with_capacity(m_per_class);
    while pos.len() < m_per_class || neg.len() < m_per_class {
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s: f64 = p.iter().zip(&normal).map(|(a, b)| a * b).sum();
        if s >= margin && pos.len() < m_per_class {
            pos.push(p);
        } else if s <= -margin && neg.len() < m_per_class {
            neg.push(p);
        }
    }
    let mut points = Vec::with_capacity(2 * m_per_class);
    let mut labels = Vec::with_capacity(2 * m_per_class);
    for (p, q) in pos.into_iter().zip(neg) {
        points.push(p);
        labels.push(1.0);
        points.push(q);
        labels.push(-1.0);
    }
    Ok(LinearSynth {
        data: LabeledDataset::new(points, labels)?,
        normal,
        offset: 0.0,
        margin,
    })
}
