//! Dense row-major kernels used by the transformer forward and backward passes.

/// Row-major `rows x cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// A strided view for gemm operands.
#[derive(Clone, Copy)]
pub struct View<'a> {
    pub data: &'a [f64],
    pub rs: isize,
    pub cs: isize,
}

impl<'a> View<'a> {
    /// Row-major block of `cols` columns starting at column `offset` in a
    /// buffer whose rows are `stride` wide.
    pub fn cols(data: &'a [f64], stride: usize, offset: usize) -> Self {
        Self {
            data: &data[offset..],
            rs: stride as isize,
            cs: 1,
        }
    }

    pub fn rm(data: &'a [f64], cols: usize) -> Self {
        Self::cols(data, cols, 0)
    }

    pub fn t(self) -> Self {
        Self {
            data: self.data,
            rs: self.cs,
            cs: self.rs,
        }
    }
}

/// `C[m x n] = beta * C + A[m x k] * B[k x n]`, C row-major with row stride
/// `ldc` starting at `c_off`.
#[allow(clippy::too_many_arguments)]
pub fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: View<'_>,
    b: View<'_>,
    c: &mut [f64],
    ldc: usize,
    c_off: usize,
    beta: f64,
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if beta == 0.0 {
            for i in 0..m {
                c[c_off + i * ldc..c_off + i * ldc + n].fill(0.0);
            }
        }
        return;
    }
    // bounds the unsafe call: the last element each operand touches
    let last = |v: &View<'_>, r: usize, cc: usize| (r - 1) as isize * v.rs + (cc - 1) as isize * v.cs;
    assert!(v_ok(&a, last(&a, m, k)) && v_ok(&b, last(&b, k, n)));
    assert!(c_off + (m - 1) * ldc + n <= c.len());
    // SAFETY: index bounds checked above; strides are non-negative.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            a.rs,
            a.cs,
            b.data.as_ptr(),
            b.rs,
            b.cs,
            beta,
            c.as_mut_ptr().add(c_off),
            ldc as isize,
            1,
        );
    }
}

fn v_ok(v: &View<'_>, last: isize) -> bool {
    v.rs >= 0 && v.cs >= 0 && (last as usize) < v.data.len()
}

/// `x[rows x d_in] * w[d_in x d_out] + bias`.
pub fn linear(x: &Matrix, w: &[f64], b: &[f64], d_out: usize) -> Matrix {
    let mut y = Matrix::zeros(x.rows, d_out);
    for r in 0..x.rows {
        y.row_mut(r).copy_from_slice(b);
    }
    gemm(
        x.rows,
        x.cols,
        d_out,
        View::rm(&x.data, x.cols),
        View::rm(w, d_out),
        &mut y.data,
        d_out,
        0,
        1.0,
    );
    y
}

/// Backward of [`linear`]: accumulates `dw += x^T dy`, `db += colsum(dy)` and
/// returns `dx = dy w^T`.
pub fn linear_backward(
    x: &Matrix,
    w: &[f64],
    dy: &Matrix,
    dw: &mut [f64],
    db: &mut [f64],
) -> Matrix {
    let (rows, d_in, d_out) = (x.rows, x.cols, dy.cols);
    gemm(
        d_in,
        rows,
        d_out,
        View::rm(&x.data, d_in).t(),
        View::rm(&dy.data, d_out),
        dw,
        d_out,
        0,
        1.0,
    );
    for r in 0..rows {
        for (acc, g) in db.iter_mut().zip(dy.row(r)) {
            *acc += g;
        }
    }
    let mut dx = Matrix::zeros(rows, d_in);
    gemm(
        rows,
        d_out,
        d_in,
        View::rm(&dy.data, d_out),
        View::rm(w, d_out).t(),
        &mut dx.data,
        d_in,
        0,
        0.0,
    );
    dx
}

pub const LN_EPS: f64 = 1e-5;

pub struct LayerNormCache {
    pub xhat: Matrix,
    pub rstd: Vec<f64>,
}

pub fn layer_norm(x: &Matrix, gain: &[f64], bias: &[f64]) -> (Matrix, LayerNormCache) {
    let d = x.cols;
    let mut y = Matrix::zeros(x.rows, d);
    let mut xhat = Matrix::zeros(x.rows, d);
    let mut rstd = Vec::with_capacity(x.rows);
    for r in 0..x.rows {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let rs = 1.0 / (var + LN_EPS).sqrt();
        rstd.push(rs);
        let xh = xhat.row_mut(r);
        for (h, v) in xh.iter_mut().zip(row) {
            *h = (v - mean) * rs;
        }
        let xh = xhat.row(r);
        for (((o, h), g), b) in y.row_mut(r).iter_mut().zip(xh).zip(gain).zip(bias) {
            *o = h * g + b;
        }
    }
    (y, LayerNormCache { xhat, rstd })
}

pub fn layer_norm_backward(
    cache: &LayerNormCache,
    gain: &[f64],
    dy: &Matrix,
    dgain: &mut [f64],
    dbias: &mut [f64],
) -> Matrix {
    let d = dy.cols;
    let mut dx = Matrix::zeros(dy.rows, d);
    let mut dxhat = vec![0.0; d];
    for r in 0..dy.rows {
        let g = dy.row(r);
        let xh = cache.xhat.row(r);
        for j in 0..d {
            dgain[j] += g[j] * xh[j];
            dbias[j] += g[j];
            dxhat[j] = g[j] * gain[j];
        }
        let mean_d = dxhat.iter().sum::<f64>() / d as f64;
        let mean_dx = dxhat.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / d as f64;
        let rs = cache.rstd[r];
        for (j, o) in dx.row_mut(r).iter_mut().enumerate() {
            *o = rs * (dxhat[j] - mean_d - xh[j] * mean_dx);
        }
    }
    dx
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

/// tanh-approximated GELU
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

pub fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

/// In-place numerically stable softmax over `row`.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// `log softmax(row)[i]` for every `i`.
pub fn log_softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    row.iter().map(|v| v - lse).collect()
}

/// Sinusoidal position table `[max_len x d]`.
pub fn positional_table(max_len: usize, d: usize) -> Matrix {
    let mut pe = Matrix::zeros(max_len, d);
    for pos in 0..max_len {
        for i in 0..d {
            let exponent = (2 * (i / 2)) as f64 / d as f64;
            let angle = pos as f64 / 10000f64.powf(exponent);
            pe.data[pos * d + i] = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    pe
}
