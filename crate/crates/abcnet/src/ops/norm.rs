use crate::error::{Error, Result};
use crate::parallel;
use crate::tensor::{Elem, Tensor};

/// Epsilon added inside the square root of the row normalizer so zero rows
/// divide cleanly; nonzero rows are unaffected at the asserted tolerance.
pub const L2_NORM_EPS: f64 = 1e-12;

/// Row-wise softmax of a rank-2 tensor, stabilized by max subtraction.
pub fn softmax_rows<E: Elem>(x: &Tensor<E>) -> Result<Tensor<E>> {
    let (n, m) = x.dims2()?;
    let src = x.data();
    let mut out = Tensor::zeros(&[n, m]);
    parallel::for_each_chunk_mut(out.data_mut(), m, |i, row| {
        let xin = &src[i * m..(i + 1) * m];
        let mut mx = xin[0];
        for &v in xin {
            if v > mx {
                mx = v;
            }
        }
        let mut z = E::zero();
        for (o, &v) in row.iter_mut().zip(xin) {
            let e = (v - mx).exp();
            *o = e;
            z = z + e;
        }
        for o in row.iter_mut() {
            *o = *o / z;
        }
    });
    out.debug_assert_finite("softmax_rows");
    Ok(out)
}

/// Softmax jacobian-vector product per row: y * (g - sum(g * y)).
pub fn softmax_rows_grad<E: Elem>(y: &Tensor<E>, grad: &Tensor<E>) -> Result<Tensor<E>> {
    let (n, m) = y.dims2()?;
    let yd = y.data();
    let gd = grad.data();
    let mut out = Tensor::zeros(&[n, m]);
    parallel::for_each_chunk_mut(out.data_mut(), m, |i, row| {
        let yr = &yd[i * m..(i + 1) * m];
        let gr = &gd[i * m..(i + 1) * m];
        let mut dot = E::zero();
        for (&yv, &gv) in yr.iter().zip(gr) {
            dot = dot + yv * gv;
        }
        for ((o, &yv), &gv) in row.iter_mut().zip(yr).zip(gr) {
            *o = yv * (gv - dot);
        }
    });
    Ok(out)
}

/// Scale every row of a rank-2 tensor to unit Euclidean norm.
pub fn l2_normalize_rows<E: Elem>(x: &Tensor<E>) -> Result<Tensor<E>> {
    let (n, d) = x.dims2()?;
    let src = x.data();
    let eps = E::from_f64(L2_NORM_EPS);
    let mut out = Tensor::zeros(&[n, d]);
    parallel::for_each_chunk_mut(out.data_mut(), d, |i, row| {
        let xin = &src[i * d..(i + 1) * d];
        let mut s = E::zero();
        for &v in xin {
            s = s + v * v;
        }
        let norm = (s + eps).sqrt();
        for (o, &v) in row.iter_mut().zip(xin) {
            *o = v / norm;
        }
    });
    out.debug_assert_finite("l2_normalize_rows");
    Ok(out)
}

pub fn l2_normalize_rows_grad<E: Elem>(x: &Tensor<E>, grad: &Tensor<E>) -> Result<Tensor<E>> {
    let (n, d) = x.dims2()?;
    let xd = x.data();
    let gd = grad.data();
    let eps = E::from_f64(L2_NORM_EPS);
    let mut out = Tensor::zeros(&[n, d]);
    parallel::for_each_chunk_mut(out.data_mut(), d, |i, row| {
        let xr = &xd[i * d..(i + 1) * d];
        let gr = &gd[i * d..(i + 1) * d];
        let mut s = E::zero();
        let mut xg = E::zero();
        for (&xv, &gv) in xr.iter().zip(gr) {
            s = s + xv * xv;
            xg = xg + xv * gv;
        }
        let norm = (s + eps).sqrt();
        let n3 = norm * norm * norm;
        for ((o, &xv), &gv) in row.iter_mut().zip(xr).zip(gr) {
            *o = gv / norm - xv * xg / n3;
        }
    });
    Ok(out)
}

/// Per-channel batch statistics cached by the training-mode forward pass.
#[derive(Clone, Debug)]
pub struct BnCache<E> {
    pub mean: Vec<E>,
    pub inv_std: Vec<E>,
}

/// Training-mode batch norm over B x C x H x W. Normalizes each channel by
/// the batch statistics and folds the momentum update into the running
/// estimates (unbiased variance when more than one value contributes).
#[allow(clippy::too_many_arguments)]
pub fn batchnorm2d_train<E: Elem>(
    x: &Tensor<E>,
    gamma: &Tensor<E>,
    beta: &Tensor<E>,
    running_mean: &mut Tensor<E>,
    running_var: &mut Tensor<E>,
    eps: f64,
    momentum: f64,
) -> Result<(Tensor<E>, BnCache<E>)> {
    let (b, c, h, w) = x.dims4()?;
    check_bn_params(c, gamma, beta)?;
    if running_mean.numel() != c || running_var.numel() != c {
        return Err(Error::shape("running stats length != channels".into()));
    }
    let m = b * h * w;
    let plane = h * w;
    let src = x.data();
    let epse = E::from_f64(eps);

    let stats: Vec<(E, E)> = parallel::map_collect(c, |ch| {
        let mut sum = E::zero();
        let mut sumsq = E::zero();
        for bi in 0..b {
            let base = (bi * c + ch) * plane;
            for &v in &src[base..base + plane] {
                sum = sum + v;
                sumsq = sumsq + v * v;
            }
        }
        let me = E::from_f64(m as f64);
        let mean = sum / me;
        let var = sumsq / me - mean * mean;
        let var = if var > E::zero() { var } else { E::zero() };
        (mean, var)
    });

    let mom = E::from_f64(momentum);
    let keep = E::from_f64(1.0 - momentum);
    for ch in 0..c {
        let (mean, var) = stats[ch];
        let var_running = if m > 1 {
            var * E::from_f64(m as f64 / (m - 1) as f64)
        } else {
            var
        };
        running_mean.data_mut()[ch] = keep * running_mean.data()[ch] + mom * mean;
        running_var.data_mut()[ch] = keep * running_var.data()[ch] + mom * var_running;
    }

    let mut out = Tensor::zeros(&[b, c, h, w]);
    let gd = gamma.data();
    let bd = beta.data();
    parallel::for_each_chunk_mut(out.data_mut(), plane, |chunk, dst| {
        let ch = chunk % c;
        let (mean, var) = stats[ch];
        let inv = E::one() / (var + epse).sqrt();
        let base = chunk * plane;
        for (o, &v) in dst.iter_mut().zip(&src[base..base + plane]) {
            *o = gd[ch] * (v - mean) * inv + bd[ch];
        }
    });
    out.debug_assert_finite("batchnorm2d_train");
    let cache = BnCache {
        mean: stats.iter().map(|s| s.0).collect(),
        inv_std: stats.iter().map(|&(_, var)| E::one() / (var + epse).sqrt()).collect(),
    };
    Ok((out, cache))
}

/// Inference-mode batch norm using the running estimates.
pub fn batchnorm2d_infer<E: Elem>(
    x: &Tensor<E>,
    gamma: &Tensor<E>,
    beta: &Tensor<E>,
    running_mean: &Tensor<E>,
    running_var: &Tensor<E>,
    eps: f64,
) -> Result<Tensor<E>> {
    let (b, c, h, w) = x.dims4()?;
    check_bn_params(c, gamma, beta)?;
    let plane = h * w;
    let src = x.data();
    let epse = E::from_f64(eps);
    let mut out = Tensor::zeros(&[b, c, h, w]);
    let gd = gamma.data();
    let bd = beta.data();
    let rm = running_mean.data();
    let rv = running_var.data();
    parallel::for_each_chunk_mut(out.data_mut(), plane, |chunk, dst| {
        let ch = chunk % c;
        let inv = E::one() / (rv[ch] + epse).sqrt();
        let base = chunk * plane;
        for (o, &v) in dst.iter_mut().zip(&src[base..base + plane]) {
            *o = gd[ch] * (v - rm[ch]) * inv + bd[ch];
        }
    });
    out.debug_assert_finite("batchnorm2d_infer");
    Ok(out)
}

/// Backward of training-mode batch norm through the batch statistics.
pub fn batchnorm2d_train_grads<E: Elem>(
    x: &Tensor<E>,
    gamma: &Tensor<E>,
    cache: &BnCache<E>,
    grad: &Tensor<E>,
) -> Result<(Tensor<E>, Tensor<E>, Tensor<E>)> {
    let (b, c, h, w) = x.dims4()?;
    let m = b * h * w;
    let plane = h * w;
    let src = x.data();
    let gd = grad.data();
    let me = E::from_f64(m as f64);

    // Per-channel reductions: sum g and sum g * xhat.
    let sums: Vec<(E, E)> = parallel::map_collect(c, |ch| {
        let mean = cache.mean[ch];
        let inv = cache.inv_std[ch];
        let mut sg = E::zero();
        let mut sgx = E::zero();
        for bi in 0..b {
            let base = (bi * c + ch) * plane;
            for k in 0..plane {
                let g = gd[base + k];
                let xhat = (src[base + k] - mean) * inv;
                sg = sg + g;
                sgx = sgx + g * xhat;
            }
        }
        (sg, sgx)
    });

    let mut dgamma = Tensor::zeros(&[c]);
    let mut dbeta = Tensor::zeros(&[c]);
    for ch in 0..c {
        dbeta.data_mut()[ch] = sums[ch].0;
        dgamma.data_mut()[ch] = sums[ch].1;
    }

    let gammad = gamma.data();
    let mut dx = Tensor::zeros(&[b, c, h, w]);
    parallel::for_each_chunk_mut(dx.data_mut(), plane, |chunk, dst| {
        let ch = chunk % c;
        let mean = cache.mean[ch];
        let inv = cache.inv_std[ch];
        let (sg, sgx) = sums[ch];
        let mean_g = sg / me;
        let mean_gx = sgx / me;
        let scale = gammad[ch] * inv;
        let base = chunk * plane;
        for (k, o) in dst.iter_mut().enumerate() {
            let g = gd[base + k];
            let xhat = (src[base + k] - mean) * inv;
            *o = scale * (g - mean_g - xhat * mean_gx);
        }
    });
    Ok((dx, dgamma, dbeta))
}

/// Backward of inference-mode batch norm (running stats are constants).
pub fn batchnorm2d_infer_grads<E: Elem>(
    x: &Tensor<E>,
    gamma: &Tensor<E>,
    running_mean: &Tensor<E>,
    running_var: &Tensor<E>,
    eps: f64,
    grad: &Tensor<E>,
) -> Result<(Tensor<E>, Tensor<E>, Tensor<E>)> {
    let (b, c, h, w) = x.dims4()?;
    let plane = h * w;
    let epse = E::from_f64(eps);
    let src = x.data();
    let gd = grad.data();
    let mut dgamma = Tensor::zeros(&[c]);
    let mut dbeta = Tensor::zeros(&[c]);
    let mut dx = Tensor::zeros(&[b, c, h, w]);
    for ch in 0..c {
        let inv = E::one() / (running_var.data()[ch] + epse).sqrt();
        let mean = running_mean.data()[ch];
        let scale = gamma.data()[ch] * inv;
        let mut sg = E::zero();
        let mut sgx = E::zero();
        for bi in 0..b {
            let base = (bi * c + ch) * plane;
            for k in 0..plane {
                let g = gd[base + k];
                sg = sg + g;
                sgx = sgx + g * (src[base + k] - mean) * inv;
                dx.data_mut()[base + k] = scale * g;
            }
        }
        dbeta.data_mut()[ch] = sg;
        dgamma.data_mut()[ch] = sgx;
    }
    Ok((dx, dgamma, dbeta))
}

fn check_bn_params<E: Elem>(c: usize, gamma: &Tensor<E>, beta: &Tensor<E>) -> Result<()> {
    if gamma.numel() != c || beta.numel() != c {
        return Err(Error::shape(format!(
            "batchnorm affine length {} / {} != channels {c}",
            gamma.numel(),
            beta.numel()
        )));
    }
    Ok(())
}
