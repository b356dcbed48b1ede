//! Cached FFT plans and small spectral helpers shared by the other modules.
//!
//! Transforms here are unnormalized in the forward direction and carry the
//! full `1/len` factor in the inverse, so `inverse(forward(v)) == v`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct FftPair {
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPair").field("len", &self.len).finish()
    }
}

impl FftPair {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.fwd.process(buf);
    }

    /// Inverse transform including the `1/len` normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inv.process(buf);
        let s = 1.0 / self.len as f64;
        buf.iter_mut().for_each(|z| *z *= s);
    }

    /// Inverse transform without normalization.
    pub fn inverse_raw(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inv.process(buf);
    }
}

/// Returns the shared forward/inverse plan pair for `len`-point transforms.
pub fn fft(len: usize) -> Arc<FftPair> {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<usize, Arc<FftPair>>)>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().unwrap_or_else(|p| p.into_inner());
    let (planner, plans) = &mut *guard;
    if let Some(p) = plans.get(&len) {
        return p.clone();
    }
    let pair = Arc::new(FftPair {
        len,
        fwd: planner.plan_fft_forward(len),
        inv: planner.plan_fft_inverse(len),
    });
    plans.insert(len, pair.clone());
    pair
}

/// Signed integer frequency index of bin `j` in an `len`-point transform.
pub fn signed_bin(j: usize, len: usize) -> isize {
    if j < len / 2 {
        j as isize
    } else {
        j as isize - len as isize
    }
}

/// Trigonometric interpolation of periodic samples onto a lattice `factor`
/// times finer, by zero padding. The Nyquist bin (when present) is split
/// evenly between the two signed frequencies so that real data stays real.
pub fn fourier_refine(values: &[Complex64], factor: usize) -> Vec<Complex64> {
    let n = values.len();
    if factor == 1 {
        return values.to_vec();
    }
    let mut spec = values.to_vec();
    fft(n).forward(&mut spec);
    let big = n * factor;
    let mut padded = vec![Complex64::new(0.0, 0.0); big];
    for (j, &a) in spec.iter().enumerate() {
        let s = signed_bin(j, n);
        if n % 2 == 0 && s == -(n as isize / 2) {
            padded[n / 2] += 0.5 * a;
            padded[big - n / 2] += 0.5 * a;
        } else {
            padded[s.rem_euclid(big as isize) as usize] += a;
        }
    }
    fft(big).inverse_raw(&mut padded);
    let s = 1.0 / n as f64;
    padded.iter_mut().for_each(|z| *z *= s);
    padded
}

pub fn sum_sq(values: &[Complex64]) -> f64 {
    values.iter().map(|z| z.norm_sqr()).sum()
}
