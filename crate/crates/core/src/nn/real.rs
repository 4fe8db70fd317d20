use std::fmt::Debug;
use std::iter::Sum;

use num_traits::Float;

/// Floating-point element type of a network: `f32` for training and
/// inference, `f64` for gradient checks.
pub trait Real: Float + Default + Debug + Sum + Send + Sync + 'static {
    fn of(v: f64) -> Self;
    fn f64(self) -> f64;

    /// `c = alpha * a b + beta * c` on strided row/column layouts.
    ///
    /// # Safety
    /// Strides and dimensions must address memory inside the given slices.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Real for f32 {
    fn of(v: f64) -> Self {
        v as f32
    }

    fn f64(self) -> f64 {
        self as f64
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

impl Real for f64 {
    fn of(v: f64) -> Self {
        v
    }

    fn f64(self) -> f64 {
        self
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

/// Dense row-major operand, optionally used transposed.
#[derive(Clone, Copy)]
pub(crate) struct Mat<'a, T> {
    pub data: &'a [T],
    pub rows: usize,
    pub cols: usize,
    pub transposed: bool,
}

impl<'a, T> Mat<'a, T> {
    pub fn new(data: &'a [T], rows: usize, cols: usize) -> Self {
        Self {
            data,
            rows,
            cols,
            transposed: false,
        }
    }

    pub fn t(self) -> Self {
        Self {
            transposed: !self.transposed,
            ..self
        }
    }

    fn shape(&self) -> (usize, usize) {
        if self.transposed {
            (self.cols, self.rows)
        } else {
            (self.rows, self.cols)
        }
    }

    fn strides(&self) -> (isize, isize) {
        if self.transposed {
            (1, self.cols as isize)
        } else {
            (self.cols as isize, 1)
        }
    }
}

/// `c = a b + beta c` with `c` row-major `m x n`.
pub(crate) fn matmul<T: Real>(a: Mat<T>, b: Mat<T>, beta: T, c: &mut [T]) {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "inner dimensions differ");
    assert_eq!(a.data.len(), a.rows * a.cols);
    assert_eq!(b.data.len(), b.rows * b.cols);
    assert_eq!(c.len(), m * n);
    if n <= NARROW {
        return matmul_narrow(a, b, beta, c, m, k, n);
    }
    let (rsa, csa) = a.strides();
    let (rsb, csb) = b.strides();
    // SAFETY: all three operands were checked to hold exactly the addressed elements.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            T::one(),
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Output widths below the gemm register tile are handled by
/// [`matmul_narrow`], which avoids padding waste.
const NARROW: usize = 4;

fn matmul_narrow<T: Real>(a: Mat<T>, b: Mat<T>, beta: T, c: &mut [T], m: usize, k: usize, n: usize) {
    let b_at = |p: usize, j: usize| {
        if b.transposed {
            b.data[j * b.cols + p]
        } else {
            b.data[p * b.cols + j]
        }
    };
    if !a.transposed {
        let cols: Vec<Vec<T>> = (0..n).map(|j| (0..k).map(|p| b_at(p, j)).collect()).collect();
        for (i, row) in a.data.chunks_exact(k).enumerate() {
            for (j, col) in cols.iter().enumerate() {
                let out = &mut c[i * n + j];
                *out = beta * *out + dot(row, col);
            }
        }
    } else {
        // a is stored k x m; accumulate each output column as a sum of rows
        let mut acc = vec![T::zero(); n * m];
        for (p, row) in a.data.chunks_exact(m).enumerate() {
            for j in 0..n {
                let s = b_at(p, j);
                for (o, &v) in acc[j * m..(j + 1) * m].iter_mut().zip(row) {
                    *o = *o + v * s;
                }
            }
        }
        for i in 0..m {
            for j in 0..n {
                let out = &mut c[i * n + j];
                *out = beta * *out + acc[j * m + i];
            }
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut lanes = [T::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: T = ca.remainder().iter().zip(cb.remainder()).map(|(&x, &y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            lanes[l] = lanes[l] + x[l] * y[l];
        }
    }
    lanes.iter().copied().sum::<T>() + tail
}
