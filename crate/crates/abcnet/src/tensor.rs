//! Dense row-major tensors over f32/f64.
//!
//! Feature maps are stored B x C x H x W with the last axis fastest; the
//! attention ops view them as N x C with N = H * W in raster order.

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Scalar element type for tensors. Implemented for `f32` and `f64`;
/// gradient checks require `f64`.
pub trait Elem:
    num_traits::Float + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    const BITS: u32;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn from_f32(x: f32) -> Self;
    fn to_f32(self) -> f32;
}

impl Elem for f32 {
    const BITS: u32 = 32;
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn from_f32(x: f32) -> Self {
        x
    }
    fn to_f32(self) -> f32 {
        self
    }
}

impl Elem for f64 {
    const BITS: u32 = 64;
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn from_f32(x: f32) -> Self {
        x as f64
    }
    fn to_f32(self) -> f32 {
        self as f32
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<E> {
    shape: Vec<usize>,
    data: Vec<E>,
}

impl<E: Elem> Tensor<E> {
    /// Build a tensor from a shape and matching element buffer.
    pub fn new(shape: Vec<usize>, data: Vec<E>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::shape(format!("zero extent in shape {shape:?}")));
        }
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} wants {numel} elements, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Tensor::full(shape, E::zero())
    }

    pub fn ones(shape: &[usize]) -> Self {
        Tensor::full(shape, E::one())
    }

    pub fn full(shape: &[usize], value: E) -> Self {
        assert!(shape.iter().all(|&d| d >= 1), "zero extent");
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; numel],
        }
    }

    pub fn scalar(value: E) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![value],
        }
    }

    /// Standard-normal entries from the given generator.
    pub fn randn(shape: &[usize], rng: &mut Rng) -> Self {
        let numel = shape.iter().product();
        let data = (0..numel).map(|_| E::from_f64(rng.normal())).collect();
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    /// Uniform entries in [lo, hi).
    pub fn rand_uniform(shape: &[usize], lo: f64, hi: f64, rng: &mut Rng) -> Self {
        let numel = shape.iter().product();
        let data = (0..numel)
            .map(|_| E::from_f64(rng.uniform(lo, hi)))
            .collect();
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    /// Kaiming-style init: normal with std sqrt(2 / fan_in).
    pub fn kaiming(shape: &[usize], fan_in: usize, rng: &mut Rng) -> Self {
        assert!(fan_in > 0);
        let std = (2.0 / fan_in as f64).sqrt();
        let numel = shape.iter().product();
        let data = (0..numel)
            .map(|_| E::from_f64(rng.normal() * std))
            .collect();
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[E] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [E] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<E> {
        self.data
    }

    /// True when this tensor holds exactly one value.
    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    pub fn item(&self) -> E {
        assert!(self.is_scalar(), "item() on non-scalar tensor");
        self.data[0]
    }

    /// Extent pair for a rank-2 tensor.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape[..] {
            [r, c] => Ok((r, c)),
            _ => Err(Error::shape(format!("expected rank 2, got {:?}", self.shape))),
        }
    }

    /// Extent quadruple for a rank-4 tensor.
    pub fn dims4(&self) -> Result<(usize, usize, usize, usize)> {
        match self.shape[..] {
            [b, c, h, w] => Ok((b, c, h, w)),
            _ => Err(Error::shape(format!("expected rank 4, got {:?}", self.shape))),
        }
    }

    /// Reinterpret with a new shape of identical element count.
    pub fn reshaped(mut self, shape: &[usize]) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != self.data.len() || shape.iter().any(|&d| d == 0) {
            return Err(Error::shape(format!(
                "cannot reshape {:?} ({} values) to {shape:?}",
                self.shape,
                self.data.len()
            )));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(E) -> E) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Elementwise combine with a same-shaped tensor.
    pub fn zip_map(&self, other: &Self, f: impl Fn(E, E) -> E) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::shape(format!(
                "shape mismatch {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Tensor {
            shape: self.shape.clone(),
            data,
        })
    }

    pub fn to_f64(&self) -> Tensor<f64> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| x.to_f64()).collect(),
        }
    }

    pub fn to_f32_vec(&self) -> Vec<f32> {
        self.data.iter().map(|&x| x.to_f32()).collect()
    }

    pub fn from_f32_slice(shape: &[usize], values: &[f32]) -> Result<Self> {
        Tensor::new(shape.to_vec(), values.iter().map(|&x| E::from_f32(x)).collect())
    }

    /// Debug-mode guard: forward ops must not introduce NaN/Inf from finite
    /// inputs.
    pub fn debug_assert_finite(&self, what: &str) {
        if cfg!(debug_assertions) {
            for (i, x) in self.data.iter().enumerate() {
                assert!(
                    x.is_finite(),
                    "non-finite value {x} at flat index {i} in {what}"
                );
            }
        }
    }
}

/// Flat offset of a multi-index under row-major layout.
pub fn flat_index(shape: &[usize], index: &[usize]) -> usize {
    debug_assert_eq!(shape.len(), index.len());
    let mut off = 0;
    for (d, (&extent, &i)) in shape.iter().zip(index).enumerate() {
        debug_assert!(i < extent, "index {i} out of extent {extent} at axis {d}");
        off = off * extent + i;
    }
    off
}

/// Worst relative error between two same-shaped tensors, with the
/// denominator guarded by max(|a|, |b|, floor).
pub fn max_rel_err<E: Elem>(a: &Tensor<E>, b: &Tensor<E>, floor: f64) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_rel_err shape mismatch");
    let mut worst = 0.0f64;
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (x, y) = (x.to_f64(), y.to_f64());
        let denom = x.abs().max(y.abs()).max(floor);
        let rel = (x - y).abs() / denom;
        if rel > worst {
            worst = rel;
        }
    }
    worst
}

/// Largest absolute difference between two same-shaped tensors.
pub fn max_abs_diff<E: Elem>(a: &Tensor<E>, b: &Tensor<E>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff shape mismatch");
    a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x.to_f64() - y.to_f64()).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_length_mismatch() {
        let r = Tensor::<f64>::new(vec![2, 3], vec![0.0; 5]);
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    #[test]
    fn new_rejects_zero_extent() {
        let r = Tensor::<f64>::new(vec![2, 0], vec![]);
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    #[test]
    fn flat_index_row_major_last_axis_fastest() {
        let shape = [2, 3, 4];
        assert_eq!(flat_index(&shape, &[0, 0, 0]), 0);
        assert_eq!(flat_index(&shape, &[0, 0, 1]), 1);
        assert_eq!(flat_index(&shape, &[0, 1, 0]), 4);
        assert_eq!(flat_index(&shape, &[1, 0, 0]), 12);
        assert_eq!(flat_index(&shape, &[1, 2, 3]), 23);
    }

    #[test]
    fn reshape_preserves_data() {
        let t = Tensor::new(vec![2, 3], (0..6).map(|i| i as f64).collect()).unwrap();
        let r = t.clone().reshaped(&[3, 2]).unwrap();
        assert_eq!(r.shape(), &[3, 2]);
        assert_eq!(r.data(), t.data());
        assert!(t.clone().reshaped(&[4, 2]).is_err());
    }

    #[test]
    fn randn_deterministic_per_seed() {
        let mut a = Rng::new(9);
        let mut b = Rng::new(9);
        let x = Tensor::<f64>::randn(&[4, 4], &mut a);
        let y = Tensor::<f64>::randn(&[4, 4], &mut b);
        assert_eq!(x.data(), y.data());
    }

    #[test]
    fn kaiming_scale_tracks_fan_in() {
        let mut rng = Rng::new(1);
        let t = Tensor::<f64>::kaiming(&[512, 128], 128, &mut rng);
        let var: f64 =
            t.data().iter().map(|x| x * x).sum::<f64>() / t.numel() as f64;
        let expect = 2.0 / 128.0;
        assert!((var - expect).abs() < 0.2 * expect, "var {var} vs {expect}");
    }

    #[test]
    fn max_rel_err_uses_floor() {
        let a = Tensor::<f64>::new(vec![2], vec![0.0, 1.0]).unwrap();
        let b = Tensor::<f64>::new(vec![2], vec![1e-12, 1.0]).unwrap();
        let e = max_rel_err(&a, &b, 1e-8);
        assert!(e < 1e-3, "tiny absolute difference should not blow up: {e}");
    }
}
