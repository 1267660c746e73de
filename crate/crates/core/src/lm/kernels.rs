//! Dense kernels for the recurrent step. The per-chunk projections go through
//! `ndarray`'s GEMM; these cover the sequential matrix-vector products.

/// `y += A x` for row-major `A` of shape `(y.len(), x.len())`.
pub(crate) fn gemv_acc(a: &[f64], x: &[f64], y: &mut [f64]) {
    let cols = x.len();
    debug_assert_eq!(a.len(), cols * y.len());
    #[cfg(target_arch = "x86_64")]
    if simd::available() {
        for (row, out) in a.chunks_exact(cols).zip(y.iter_mut()) {
            // SAFETY: AVX2 and FMA support was checked at runtime.
            *out += unsafe { simd::dot(row, x) };
        }
        return;
    }
    for (row, out) in a.chunks_exact(cols).zip(y.iter_mut()) {
        *out += dot(row, x);
    }
}

/// `y += Aᵀ x` for row-major `A` of shape `(x.len(), y.len())`.
pub(crate) fn gemv_t_acc(a: &[f64], x: &[f64], y: &mut [f64]) {
    let cols = y.len();
    debug_assert_eq!(a.len(), cols * x.len());
    #[cfg(target_arch = "x86_64")]
    if simd::available() {
        for (row, &scale) in a.chunks_exact(cols).zip(x) {
            // SAFETY: AVX2 and FMA support was checked at runtime.
            unsafe { simd::axpy(scale, row, y) };
        }
        return;
    }
    for (row, &scale) in a.chunks_exact(cols).zip(x) {
        axpy(scale, row, y);
    }
}

/// Eight independent partial sums so the loop vectorizes without reassociation.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for k in 0..8 {
            acc[k] += ca[k] * cb[k];
        }
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(target_arch = "x86_64")]
mod simd {
    use std::arch::x86_64::*;
    use std::sync::OnceLock;

    pub(super) fn available() -> bool {
        static DETECTED: OnceLock<bool> = OnceLock::new();
        *DETECTED.get_or_init(|| is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma"))
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn dot(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len().min(b.len());
        let (pa, pb) = (a.as_ptr(), b.as_ptr());
        let mut acc = [_mm256_setzero_pd(); 4];
        let mut i = 0;
        while i + 16 <= n {
            for (k, slot) in acc.iter_mut().enumerate() {
                let off = i + 4 * k;
                *slot = _mm256_fmadd_pd(_mm256_loadu_pd(pa.add(off)), _mm256_loadu_pd(pb.add(off)), *slot);
            }
            i += 16;
        }
        while i + 4 <= n {
            acc[0] = _mm256_fmadd_pd(_mm256_loadu_pd(pa.add(i)), _mm256_loadu_pd(pb.add(i)), acc[0]);
            i += 4;
        }
        let sum = _mm256_add_pd(_mm256_add_pd(acc[0], acc[1]), _mm256_add_pd(acc[2], acc[3]));
        let mut lanes = [0.0f64; 4];
        _mm256_storeu_pd(lanes.as_mut_ptr(), sum);
        let mut total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
        while i < n {
            total += a[i] * b[i];
            i += 1;
        }
        total
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
        let n = x.len().min(y.len());
        let (px, py) = (x.as_ptr(), y.as_mut_ptr());
        let scale = _mm256_set1_pd(alpha);
        let mut i = 0;
        while i + 4 <= n {
            let v = _mm256_fmadd_pd(scale, _mm256_loadu_pd(px.add(i)), _mm256_loadu_pd(py.add(i)));
            _mm256_storeu_pd(py.add(i), v);
            i += 4;
        }
        while i < n {
            y[i] += alpha * x[i];
            i += 1;
        }
    }
}

/// Logistic function via `tanh`, which is cheaper than `exp` plus a divide.
#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    0.5 + 0.5 * (0.5 * x).tanh()
}
