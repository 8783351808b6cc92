//! Centered 2-D FFT primitives used by the diffraction engine.
//!
//! The optical transforms want the "centered" DFT convention — origin at
//! sample `(n/2, n/2)` in both domains — implemented as
//! `fftshift ∘ FFT ∘ ifftshift` with explicit index rotations.  Rows and
//! columns are transformed independently (columns via transpose), with rows
//! processed in parallel; per-row transforms are independent, so the result
//! does not depend on thread count or scheduling.

use crate::scalar::{Scalar, C};
use ndarray::Array2;
use rayon::prelude::*;
use rustfft::FftPlanner;

/// Circularly roll array contents by `(sy, sx)` (content moves toward higher
/// indices).
fn roll<T: Clone>(data: &Array2<T>, sy: usize, sx: usize) -> Array2<T> {
    let (ny, nx) = data.dim();
    Array2::from_shape_fn((ny, nx), |(iy, ix)| {
        data[((iy + ny - sy) % ny, (ix + nx - sx) % nx)].clone()
    })
}

/// Move the origin sample `(ny/2, nx/2)` to index `(0, 0)`.
pub fn ifftshift2<T: Clone>(data: &Array2<T>) -> Array2<T> {
    let (ny, nx) = data.dim();
    roll(data, ny - ny / 2, nx - nx / 2)
}

/// Move index `(0, 0)` to the origin sample `(ny/2, nx/2)`.
pub fn fftshift2<T: Clone>(data: &Array2<T>) -> Array2<T> {
    let (ny, nx) = data.dim();
    roll(data, ny / 2, nx / 2)
}

fn transpose<T: Clone>(data: &Array2<T>) -> Array2<T> {
    let (ny, nx) = data.dim();
    Array2::from_shape_fn((nx, ny), |(i, j)| data[(j, i)].clone())
}

/// Unnormalized in-place 2-D FFT in natural (unshifted) index order.
pub fn fft2_inplace<T: Scalar>(data: &mut Array2<C<T>>, forward: bool) {
    fft_rows(data, forward);
    let mut t = transpose(data);
    fft_rows(&mut t, forward);
    *data = transpose(&t);
}

fn fft_rows<T: Scalar>(data: &mut Array2<C<T>>, forward: bool) {
    let nx = data.ncols();
    let mut planner = FftPlanner::<T>::new();
    let fft = if forward {
        planner.plan_fft_forward(nx)
    } else {
        planner.plan_fft_inverse(nx)
    };
    let scratch_len = fft.get_inplace_scratch_len();
    let slice = data
        .as_slice_mut()
        .expect("field arrays are standard layout");
    slice.par_chunks_mut(nx).for_each_init(
        || vec![C::<T>::new(T::zero(), T::zero()); scratch_len],
        |scratch, row| fft.process_with_scratch(row, scratch),
    );
}

/// Centered, unnormalized 2-D DFT: `fftshift(FFT(ifftshift(data)))`.
pub fn dft2_centered<T: Scalar>(data: &Array2<C<T>>, forward: bool) -> Array2<C<T>> {
    let mut work = ifftshift2(data);
    fft2_inplace(&mut work, forward);
    fftshift2(&work)
}
