use crate::error::Result;
use crate::tensor::{Elem, Tensor};

/// Elementwise max(0, x).
pub fn relu<E: Elem>(x: &Tensor<E>) -> Tensor<E> {
    x.map(|v| if v > E::zero() { v } else { E::zero() })
}

/// Subgradient of relu; 0 at x == 0.
pub fn relu_grad<E: Elem>(x: &Tensor<E>, grad: &Tensor<E>) -> Tensor<E> {
    grad.zip_map(x, |g, v| if v > E::zero() { g } else { E::zero() })
        .expect("relu_grad shape")
}

/// a * x + b, elementwise with scalar coefficients.
pub fn affine<E: Elem>(x: &Tensor<E>, a: E, b: E) -> Tensor<E> {
    x.map(|v| a * v + b)
}

pub fn affine_grad<E: Elem>(grad: &Tensor<E>, a: E) -> Tensor<E> {
    grad.map(|g| a * g)
}

/// Clamp into [lo, hi].
pub fn clamp<E: Elem>(x: &Tensor<E>, lo: E, hi: E) -> Tensor<E> {
    x.map(|v| if v < lo { lo } else if v > hi { hi } else { v })
}

/// Gradient passes only where the input was strictly inside the interval.
pub fn clamp_grad<E: Elem>(x: &Tensor<E>, lo: E, hi: E, grad: &Tensor<E>) -> Tensor<E> {
    grad.zip_map(x, |g, v| if v > lo && v < hi { g } else { E::zero() })
        .expect("clamp_grad shape")
}

/// Natural log; callers clamp inputs away from zero first.
pub fn ln<E: Elem>(x: &Tensor<E>) -> Tensor<E> {
    x.map(|v| v.ln())
}

pub fn ln_grad<E: Elem>(x: &Tensor<E>, grad: &Tensor<E>) -> Tensor<E> {
    grad.zip_map(x, |g, v| g / v).expect("ln_grad shape")
}

/// x^p for a fixed exponent; inputs are expected nonnegative.
pub fn pow_scalar<E: Elem>(x: &Tensor<E>, p: f64) -> Tensor<E> {
    let pe = E::from_f64(p);
    x.map(|v| v.powf(pe))
}

pub fn pow_scalar_grad<E: Elem>(x: &Tensor<E>, p: f64, grad: &Tensor<E>) -> Tensor<E> {
    if p == 0.0 {
        return Tensor::zeros(x.shape());
    }
    let pe = E::from_f64(p);
    let pm1 = E::from_f64(p - 1.0);
    grad.zip_map(x, |g, v| g * pe * v.powf(pm1))
        .expect("pow_scalar_grad shape")
}

/// Elementwise sum of two same-shaped tensors.
pub fn add<E: Elem>(a: &Tensor<E>, b: &Tensor<E>) -> Result<Tensor<E>> {
    a.zip_map(b, |x, y| x + y)
}

/// Hadamard product.
pub fn mul<E: Elem>(a: &Tensor<E>, b: &Tensor<E>) -> Result<Tensor<E>> {
    a.zip_map(b, |x, y| x * y)
}
