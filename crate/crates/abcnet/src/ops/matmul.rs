use crate::error::{Error, Result};
use crate::parallel;
use crate::tensor::{Elem, Tensor};

/// 2-D matrix product: [M x K] . [K x P] -> [M x P].
pub fn matmul<E: Elem>(a: &Tensor<E>, b: &Tensor<E>) -> Result<Tensor<E>> {
    let (m, k) = a.dims2()?;
    let (kb, p) = b.dims2()?;
    if k != kb {
        return Err(Error::shape(format!(
            "matmul inner extents differ: {k} vs {kb}"
        )));
    }
    let mut out = Tensor::zeros(&[m, p]);
    matmul_into(a.data(), b.data(), out.data_mut(), m, k, p);
    out.debug_assert_finite("matmul");
    Ok(out)
}

/// Row-parallel i-k-j product over flat row-major buffers.
pub(crate) fn matmul_into<E: Elem>(a: &[E], b: &[E], out: &mut [E], m: usize, k: usize, p: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * p);
    debug_assert_eq!(out.len(), m * p);
    // Each chunk of output rows is written by exactly one closure call, so
    // the result does not depend on the thread count.
    let rows_per_chunk = chunk_rows(m, k * p);
    parallel::for_each_chunk_mut(out, rows_per_chunk * p, |chunk, out_rows| {
        let row0 = chunk * rows_per_chunk;
        for (r, out_row) in out_rows.chunks_mut(p).enumerate() {
            let i = row0 + r;
            let a_row = &a[i * k..(i + 1) * k];
            for (kk, &aik) in a_row.iter().enumerate() {
                let b_row = &b[kk * p..(kk + 1) * p];
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o = *o + aik * bv;
                }
            }
        }
    });
}

fn chunk_rows(m: usize, work_per_row: usize) -> usize {
    // Aim for chunks of ~64k multiply-adds so small products stay on one
    // thread.
    let target = 65_536usize;
    (target / work_per_row.max(1)).clamp(1, m.max(1))
}

/// Gradients of matmul: dA = G . B^T, dB = A^T . G.
pub fn matmul_grads<E: Elem>(
    a: &Tensor<E>,
    b: &Tensor<E>,
    grad: &Tensor<E>,
) -> Result<(Tensor<E>, Tensor<E>)> {
    let bt = transpose2d(b)?;
    let at = transpose2d(a)?;
    let da = matmul(grad, &bt)?;
    let db = matmul(&at, grad)?;
    Ok((da, db))
}

/// Transpose of a rank-2 tensor.
pub fn transpose2d<E: Elem>(x: &Tensor<E>) -> Result<Tensor<E>> {
    let (r, c) = x.dims2()?;
    let src = x.data();
    let mut data = vec![E::zero(); r * c];
    for i in 0..r {
        for j in 0..c {
            data[j * r + i] = src[i * c + j];
        }
    }
    Tensor::new(vec![c, r], data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::tensor::max_rel_err;

    fn eye(n: usize) -> Tensor<f64> {
        let mut t = Tensor::zeros(&[n, n]);
        for i in 0..n {
            t.data_mut()[i * n + i] = 1.0;
        }
        t
    }

    // Independent triple-loop oracle.
    fn matmul_naive(a: &Tensor<f64>, b: &Tensor<f64>) -> Tensor<f64> {
        let (m, k) = a.dims2().unwrap();
        let (_, p) = b.dims2().unwrap();
        let mut out = Tensor::zeros(&[m, p]);
        for i in 0..m {
            for j in 0..p {
                let mut s = 0.0;
                for kk in 0..k {
                    s += a.data()[i * k + kk] * b.data()[kk * p + j];
                }
                out.data_mut()[i * p + j] = s;
            }
        }
        out
    }

    #[test]
    fn identity_left_factor() {
        let mut rng = Rng::new(1);
        let b = Tensor::<f64>::randn(&[3, 2], &mut rng);
        let y = matmul(&eye(3), &b).unwrap();
        assert_eq!(y.data(), b.data());
    }

    #[test]
    fn zero_left_factor() {
        let mut rng = Rng::new(2);
        let b = Tensor::<f64>::randn(&[2, 4], &mut rng);
        let y = matmul(&Tensor::zeros(&[2, 2]), &b).unwrap();
        assert!(y.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn matches_triple_loop_oracle() {
        let mut rng = Rng::new(3);
        let a = Tensor::<f64>::randn(&[4, 3], &mut rng);
        let b = Tensor::<f64>::randn(&[3, 5], &mut rng);
        let got = matmul(&a, &b).unwrap();
        let want = matmul_naive(&a, &b);
        assert!(max_rel_err(&got, &want, 1e-8) <= 1e-12);
    }

    #[test]
    fn inner_extent_mismatch_rejected() {
        let a = Tensor::<f64>::zeros(&[2, 3]);
        let b = Tensor::<f64>::zeros(&[4, 2]);
        assert!(matmul(&a, &b).is_err());
    }

    #[test]
    fn parallel_equals_sequential_bitwise() {
        let mut rng = Rng::new(4);
        let a = Tensor::<f64>::randn(&[37, 19], &mut rng);
        let b = Tensor::<f64>::randn(&[19, 23], &mut rng);
        crate::parallel::set_parallel(true);
        let par = matmul(&a, &b).unwrap();
        crate::parallel::set_parallel(false);
        let seq = matmul(&a, &b).unwrap();
        crate::parallel::set_parallel(true);
        assert_eq!(par.data(), seq.data());
    }

    #[test]
    fn transpose_round_trip() {
        let mut rng = Rng::new(5);
        let a = Tensor::<f64>::randn(&[3, 7], &mut rng);
        let tt = transpose2d(&transpose2d(&a).unwrap()).unwrap();
        assert_eq!(a.data(), tt.data());
    }
}
