use num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward DFT, X_k = Σ x_n e^{−2πikn/N}, in place.
pub(crate) fn forward(data: &mut [Complex64]) {
    FftPlanner::new().plan_fft_forward(data.len()).process(data);
}

/// Inverse DFT including the 1/N factor, in place.
pub(crate) fn inverse(data: &mut [Complex64]) {
    FftPlanner::new().plan_fft_inverse(data.len()).process(data);
    let scale = 1.0 / data.len() as f64;
    for z in data.iter_mut() {
        *z *= scale;
    }
}

/// Signed bin index of DFT bin `k` for length `n` (negative above n/2).
pub(crate) fn signed_bin(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}
