//! Batched 1D FFTs along the axes of a row-major 3D array.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

/// FFT along one axis, in place. `inverse` selects the e^{+2πi nk/N} kernel.
/// rustfft transforms are unnormalized in both directions.
pub fn fft_axis(data: &mut [Complex64], dims: [usize; 3], axis: usize, inverse: bool) {
    let n = dims[axis];
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };

    if axis == 2 {
        data.par_chunks_mut(n).for_each(|row| fft.process(row));
        return;
    }

    let stride = if axis == 1 { dims[2] } else { dims[1] * dims[2] };
    let bases: Vec<usize> = match axis {
        0 => (0..dims[1] * dims[2]).collect(),
        1 => (0..dims[0])
            .flat_map(|i| (0..dims[2]).map(move |k| i * dims[1] * dims[2] + k))
            .collect(),
        _ => unreachable!(),
    };

    // gather / transform / scatter each strided row
    let rows: Vec<(usize, Vec<Complex64>)> = bases
        .par_iter()
        .map(|&base| {
            let mut row: Vec<Complex64> = (0..n).map(|i| data[base + i * stride]).collect();
            fft.process(&mut row);
            (base, row)
        })
        .collect();
    for (base, row) in rows {
        for (i, v) in row.into_iter().enumerate() {
            data[base + i * stride] = v;
        }
    }
}

/// FFT along all three axes.
pub fn fft3(data: &mut [Complex64], dims: [usize; 3], inverse: bool) {
    for axis in 0..3 {
        fft_axis(data, dims, axis, inverse);
    }
}
