//! Batched layer kernels on `[batch, rows, cols, channels]` row-major tensors.
//!
//! Backward kernels accumulate into their gradient outputs.

use super::real::{matmul, Mat, Real};
use crate::error::{Error, Result};

/// Piecewise-linear resampling along the row axis from irregular source
/// positions onto every integer position `0..n_out`, nearest-value outside.
#[derive(Debug, Clone, PartialEq)]
pub struct RowResize {
    n_in: usize,
    n_out: usize,
    // (left source row, right source row, right weight) per output row
    taps: Vec<(usize, usize, f64)>,
}

impl RowResize {
    /// `positions` are the output coordinates of the source rows.
    pub fn new(positions: &[usize], n_out: usize) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::Config("resize needs at least two source rows".into()));
        }
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("resize positions must be strictly increasing".into()));
        }
        let last = positions.len() - 1;
        let mut seg = 0;
        let taps = (0..n_out)
            .map(|k| {
                if k <= positions[0] {
                    (0, 0, 0.0)
                } else if k >= positions[last] {
                    (last, last, 0.0)
                } else {
                    while positions[seg + 1] < k {
                        seg += 1;
                    }
                    let (p0, p1) = (positions[seg] as f64, positions[seg + 1] as f64);
                    (seg, seg + 1, (k as f64 - p0) / (p1 - p0))
                }
            })
            .collect();
        Ok(Self {
            n_in: positions.len(),
            n_out,
            taps,
        })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    /// `x: [batch, n_in, inner]` to `y: [batch, n_out, inner]`.
    pub fn forward<T: Real>(&self, x: &[T], inner: usize, y: &mut [T]) {
        let batch = x.len() / (self.n_in * inner);
        assert_eq!(x.len(), batch * self.n_in * inner);
        assert_eq!(y.len(), batch * self.n_out * inner);
        for (xs, ys) in x
            .chunks_exact(self.n_in * inner)
            .zip(y.chunks_exact_mut(self.n_out * inner))
        {
            for (row, &(j0, j1, w)) in ys.chunks_exact_mut(inner).zip(&self.taps) {
                let (w0, w1) = (T::of(1.0 - w), T::of(w));
                let (a, b) = (&xs[j0 * inner..(j0 + 1) * inner], &xs[j1 * inner..(j1 + 1) * inner]);
                for ((r, &u), &v) in row.iter_mut().zip(a).zip(b) {
                    *r = w0 * u + w1 * v;
                }
            }
        }
    }

    pub fn backward<T: Real>(&self, dy: &[T], inner: usize, dx: &mut [T]) {
        let batch = dx.len() / (self.n_in * inner);
        assert_eq!(dy.len(), batch * self.n_out * inner);
        for (dxs, dys) in dx
            .chunks_exact_mut(self.n_in * inner)
            .zip(dy.chunks_exact(self.n_out * inner))
        {
            for (row, &(j0, j1, w)) in dys.chunks_exact(inner).zip(&self.taps) {
                let (w0, w1) = (T::of(1.0 - w), T::of(w));
                for (c, &g) in row.iter().enumerate() {
                    dxs[j0 * inner + c] = dxs[j0 * inner + c] + w0 * g;
                    dxs[j1 * inner + c] = dxs[j1 * inner + c] + w1 * g;
                }
            }
        }
    }
}

/// Geometry of a same-padded 3x3 convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvShape {
    pub batch: usize,
    pub rows: usize,
    pub cols: usize,
    pub cin: usize,
    pub cout: usize,
}

impl ConvShape {
    pub fn positions(&self) -> usize {
        self.batch * self.rows * self.cols
    }

    pub fn patch(&self) -> usize {
        9 * self.cin
    }
}

/// Unfolds 3x3 neighbourhoods into `[positions, 9 cin]`, zero outside.
pub fn im2col<T: Real>(x: &[T], s: ConvShape, col: &mut [T]) {
    assert_eq!(x.len(), s.positions() * s.cin);
    assert_eq!(col.len(), s.positions() * s.patch());
    let (h, w, c) = (s.rows as isize, s.cols as isize, s.cin);
    let mut rows = col.chunks_exact_mut(s.patch());
    for b in 0..s.batch {
        let img = &x[b * s.rows * s.cols * c..(b + 1) * s.rows * s.cols * c];
        for y in 0..h {
            for xx in 0..w {
                let out = rows.next().unwrap();
                for (tap, dst) in out.chunks_exact_mut(c).enumerate() {
                    let (sy, sx) = (y + tap as isize / 3 - 1, xx + tap as isize % 3 - 1);
                    if sy < 0 || sy >= h || sx < 0 || sx >= w {
                        dst.fill(T::zero());
                    } else {
                        let o = ((sy * w + sx) as usize) * c;
                        dst.copy_from_slice(&img[o..o + c]);
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-adds patch gradients back onto the input.
pub fn col2im<T: Real>(dcol: &[T], s: ConvShape, dx: &mut [T]) {
    assert_eq!(dx.len(), s.positions() * s.cin);
    assert_eq!(dcol.len(), s.positions() * s.patch());
    let (h, w, c) = (s.rows as isize, s.cols as isize, s.cin);
    let mut rows = dcol.chunks_exact(s.patch());
    for b in 0..s.batch {
        let img = &mut dx[b * s.rows * s.cols * c..(b + 1) * s.rows * s.cols * c];
        for y in 0..h {
            for xx in 0..w {
                let src = rows.next().unwrap();
                for (tap, g) in src.chunks_exact(c).enumerate() {
                    let (sy, sx) = (y + tap as isize / 3 - 1, xx + tap as isize % 3 - 1);
                    if sy >= 0 && sy < h && sx >= 0 && sx < w {
                        let o = ((sy * w + sx) as usize) * c;
                        for (d, &v) in img[o..o + c].iter_mut().zip(g) {
                            *d = *d + v;
                        }
                    }
                }
            }
        }
    }
}

/// Positions unfolded at once; keeps the patch matrix cache-resident.
const CHUNK_POSITIONS: usize = 2048;

fn chunks(s: ConvShape) -> impl Iterator<Item = (usize, ConvShape)> {
    let per = (CHUNK_POSITIONS / (s.rows * s.cols).max(1)).max(1);
    (0..s.batch).step_by(per).map(move |b0| {
        (
            b0,
            ConvShape {
                batch: per.min(s.batch - b0),
                ..s
            },
        )
    })
}

/// `y = im2col(x) W + b`, with `weight` laid out `[3, 3, cin, cout]`.
pub fn conv_forward<T: Real>(x: &[T], weight: &[T], bias: &[T], s: ConvShape, scratch: &mut Vec<T>, y: &mut [T]) {
    assert_eq!(weight.len(), s.patch() * s.cout);
    assert_eq!(bias.len(), s.cout);
    assert_eq!(x.len(), s.positions() * s.cin);
    assert_eq!(y.len(), s.positions() * s.cout);
    let img = s.rows * s.cols;
    for row in y.chunks_exact_mut(s.cout) {
        row.copy_from_slice(bias);
    }
    for (b0, c) in chunks(s) {
        scratch.resize(c.positions() * c.patch(), T::zero());
        im2col(&x[b0 * img * s.cin..(b0 + c.batch) * img * s.cin], c, scratch);
        matmul(
            Mat::new(scratch, c.positions(), c.patch()),
            Mat::new(weight, c.patch(), c.cout),
            T::one(),
            &mut y[b0 * img * s.cout..(b0 + c.batch) * img * s.cout],
        );
    }
}

/// Gradients of [`conv_forward`] given its input `x`; `dx` is skipped when `None`.
#[allow(clippy::too_many_arguments)]
pub fn conv_backward<T: Real>(
    x: &[T],
    dy: &[T],
    weight: &[T],
    s: ConvShape,
    dweight: &mut [T],
    dbias: &mut [T],
    mut dx: Option<&mut [T]>,
    scratch: &mut Vec<T>,
) {
    assert_eq!(x.len(), s.positions() * s.cin);
    assert_eq!(dy.len(), s.positions() * s.cout);
    let img = s.rows * s.cols;
    for row in dy.chunks_exact(s.cout) {
        for (d, &g) in dbias.iter_mut().zip(row) {
            *d = *d + g;
        }
    }
    // dx is the correlation of dy with the spatially flipped kernel, with
    // input and output channels swapped.
    let flipped = dx.as_ref().map(|_| {
        let mut f = vec![T::zero(); 9 * s.cout * s.cin];
        for tap in 0..9 {
            for ci in 0..s.cin {
                for co in 0..s.cout {
                    f[(tap * s.cout + co) * s.cin + ci] = weight[((8 - tap) * s.cin + ci) * s.cout + co];
                }
            }
        }
        f
    });
    for (b0, c) in chunks(s) {
        let dy_c = &dy[b0 * img * s.cout..(b0 + c.batch) * img * s.cout];
        scratch.resize(c.positions() * c.patch(), T::zero());
        im2col(&x[b0 * img * s.cin..(b0 + c.batch) * img * s.cin], c, scratch);
        matmul(
            Mat::new(scratch, c.positions(), c.patch()).t(),
            Mat::new(dy_c, c.positions(), c.cout),
            T::one(),
            dweight,
        );
        if let (Some(dx), Some(flipped)) = (dx.as_deref_mut(), flipped.as_ref()) {
            let fs = ConvShape {
                cin: s.cout,
                cout: s.cin,
                ..c
            };
            scratch.resize(fs.positions() * fs.patch(), T::zero());
            im2col(dy_c, fs, scratch);
            matmul(
                Mat::new(scratch, fs.positions(), fs.patch()),
                Mat::new(flipped, fs.patch(), s.cin),
                T::one(),
                &mut dx[b0 * img * s.cin..(b0 + c.batch) * img * s.cin],
            );
        }
    }
}

pub fn relu_forward<T: Real>(x: &mut [T]) {
    for v in x {
        *v = v.max(T::zero());
    }
}

/// Masks `dy` where the rectifier output `y` is not positive.
pub fn relu_backward<T: Real>(y: &[T], dy: &mut [T]) {
    for (g, &v) in dy.iter_mut().zip(y) {
        if v <= T::zero() {
            *g = T::zero();
        }
    }
}

/// Mean over the column axis: `[batch, rows, cols, ch]` to `[batch, rows, ch]`.
pub fn col_mean_forward<T: Real>(x: &[T], cols: usize, ch: usize, y: &mut [T]) {
    assert_eq!(x.len(), y.len() * cols);
    let inv = T::of(1.0 / cols as f64);
    for (xs, ys) in x.chunks_exact(cols * ch).zip(y.chunks_exact_mut(ch)) {
        for (c, out) in ys.iter_mut().enumerate() {
            *out = (0..cols).map(|j| xs[j * ch + c]).sum::<T>() * inv;
        }
    }
}

pub fn col_mean_backward<T: Real>(dy: &[T], cols: usize, ch: usize, dx: &mut [T]) {
    assert_eq!(dx.len(), dy.len() * cols);
    let inv = T::of(1.0 / cols as f64);
    for (dxs, dys) in dx.chunks_exact_mut(cols * ch).zip(dy.chunks_exact(ch)) {
        for j in 0..cols {
            for c in 0..ch {
                dxs[j * ch + c] = dxs[j * ch + c] + dys[c] * inv;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resize_reproduces_constants_and_hits_sources() {
        let pos: Vec<usize> = (0..33).map(|i| 1 + 5 * i).collect();
        let r = RowResize::new(&pos, 163).unwrap();
        let x = vec![0.75f64; 33 * 8];
        let mut y = vec![0.0; 163 * 8];
        r.forward(&x, 8, &mut y);
        assert!(y.iter().all(|v| (v - 0.75).abs() < 1e-12));
        let ramp: Vec<f64> = (0..33).map(|i| i as f64).collect();
        let mut out = vec![0.0; 163];
        r.forward(&ramp, 1, &mut out);
        for (i, &p) in pos.iter().enumerate() {
            assert_eq!(out[p], i as f64);
        }
        assert_eq!(out[0], 0.0);
        assert_eq!(out[162], 32.0);
        assert!((out[3] - 0.4).abs() < 1e-12);
        assert!(RowResize::new(&[3, 3], 5).is_err());
    }

    #[test]
    fn identity_kernel_conv_copies_input() {
        let s = ConvShape {
            batch: 2,
            rows: 5,
            cols: 3,
            cin: 2,
            cout: 2,
        };
        let x: Vec<f64> = (0..s.positions() * 2).map(|v| v as f64).collect();
        let mut w = vec![0.0; 18 * 2];
        // centre tap (4), identity channel map
        w[(4 * 2) * 2] = 1.0;
        w[(4 * 2 + 1) * 2 + 1] = 1.0;
        let mut y = vec![0.0; x.len()];
        conv_forward(&x, &w, &[0.5, -0.5], s, &mut Vec::new(), &mut y);
        for (i, (a, b)) in y.iter().zip(&x).enumerate() {
            let off = if i % 2 == 0 { 0.5 } else { -0.5 };
            assert_eq!(*a, b + off);
        }
    }

    #[test]
    fn shift_kernel_respects_zero_padding() {
        let s = ConvShape {
            batch: 1,
            rows: 4,
            cols: 1,
            cin: 1,
            cout: 1,
        };
        // tap 1 reads the row above
        let mut w = vec![0.0f64; 9];
        w[1] = 1.0;
        let mut y = vec![0.0; 4];
        conv_forward(&[1.0, 2.0, 3.0, 4.0], &w, &[0.0], s, &mut Vec::new(), &mut y);
        assert_eq!(y, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn column_mean_and_adjoint() {
        let x: Vec<f64> = (0..2 * 3 * 4 * 2).map(|v| v as f64).collect();
        let mut y = vec![0.0; 2 * 3 * 2];
        col_mean_forward(&x, 4, 2, &mut y);
        assert_eq!(y[0], (0.0 + 2.0 + 4.0 + 6.0) / 4.0);
        let dy: Vec<f64> = (0..y.len()).map(|v| (v as f64).cos()).collect();
        let mut dx = vec![0.0; x.len()];
        col_mean_backward(&dy, 4, 2, &mut dx);
        let lhs: f64 = y.iter().zip(&dy).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&dx).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9);
    }
}
