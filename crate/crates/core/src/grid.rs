//! Dyadic multiscale geometry.
//!
//! Scale `m` covers the box `B_m = [-2^m L, 2^m L]` with spacing `2^m dx` and
//! resolves wavenumbers up to `2^-m kmax`. Every box carries the same number
//! of samples `N = 2L/dx`, so the finest box and each coarser box cost the
//! same to transform.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::special::erfc_inv;

/// Ratio between the hard spectral mask on scale 0 and `kmax`.
///
/// The lattice Nyquist frequency is `1.5 kmax`; content between
/// `BAND_RATIO * kmax` and Nyquist is discarded on every multiplier
/// application, which keeps round-off from accumulating in the top of the
/// spectrum while leaving room for packets centred just above `kmax`.
pub const BAND_RATIO: f64 = 1.25;

/// Geometry and window parameters of a dyadic multiscale grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    l: f64,
    kmax: f64,
    delta_x: f64,
    scales: usize,
    n: usize,
    delta1: f64,
    sigma: f64,
}

/// Largest admissible `delta1`; the `erfc^-1` bound used for the window
/// constraints only holds below `erfc(1)`.
pub fn max_delta1() -> f64 {
    statrs::function::erf::erfc(1.0)
}

/// Builds a grid for half-width `l`, target wavenumber `kmax`, `scales`
/// coarse levels beyond the finest one, and window tolerance `delta1`.
///
/// The spacing is `dx = 2π/(3 kmax)`, `N = 2L/dx` must come out as an
/// integer multiple of four, and the window steepness is the geometric mean
/// of the two bounds `8 erfc^-1(δ₁)/kmax ≤ σ ≤ L/(8 erfc^-1(δ₁))`.
pub fn build_grid(l: f64, kmax: f64, scales: usize, delta1: f64) -> Result<GridSpec> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidGrid(format!("half-width L must be positive, got {l}")));
    }
    if !(kmax > 0.0 && kmax.is_finite()) {
        return Err(Error::InvalidGrid(format!("kmax must be positive, got {kmax}")));
    }
    if !(delta1 > 0.0 && delta1 < max_delta1()) {
        return Err(Error::DomainError {
            function: "build_grid(delta1)",
            value: delta1,
        });
    }
    let c = erfc_inv(delta1)?;
    let lo = 8.0 * c / kmax;
    let hi = l / (8.0 * c);
    if lo > hi {
        return Err(Error::InfeasibleSigma {
            l_kmax: l * kmax,
            required: 64.0 * c * c,
        });
    }
    let delta_x = 2.0 * PI / (3.0 * kmax);
    let ratio = 2.0 * l / delta_x;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-8 * ratio.max(1.0) {
        return Err(Error::InvalidGrid(format!(
            "2L = {} is not an integer multiple of dx = {delta_x}",
            2.0 * l
        )));
    }
    let n = n as usize;
    if n < 16 || n % 4 != 0 {
        return Err(Error::InvalidGrid(format!(
            "sample count N = {n} must be a multiple of 4 and at least 16"
        )));
    }
    Ok(GridSpec {
        l,
        kmax,
        delta_x,
        scales,
        n,
        delta1,
        sigma: (lo * hi).sqrt(),
    })
}

impl GridSpec {
    /// Builds a grid from the finest-scale sample count and spacing, the way
    /// experiments are usually described (`N` points at spacing `dx`).
    pub fn from_samples(n: usize, delta_x: f64, scales: usize, delta1: f64) -> Result<Self> {
        if !(delta_x > 0.0) {
            return Err(Error::InvalidGrid(format!("dx must be positive, got {delta_x}")));
        }
        let l = n as f64 * delta_x / 2.0;
        let kmax = 2.0 * PI / (3.0 * delta_x);
        build_grid(l, kmax, scales, delta1)
    }

    /// Same geometry with a different number of coarse scales.
    pub fn with_scales(&self, scales: usize) -> Self {
        GridSpec {
            scales,
            ..self.clone()
        }
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn kmax(&self) -> f64 {
        self.kmax
    }

    pub fn delta_x(&self) -> f64 {
        self.delta_x
    }

    /// Number of coarse scales beyond the finest (`M`).
    pub fn scales(&self) -> usize {
        self.scales
    }

    /// Samples across `B_0`, excluding the duplicated periodic endpoint.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta1(&self) -> f64 {
        self.delta1
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Lowest wavenumber the coarsest scale is meant to resolve, `2^-M kmax`.
    pub fn kmin_effective(&self) -> f64 {
        self.kmax / pow2(self.scales)
    }

    pub fn check_scale(&self, m: usize) -> Result<()> {
        if m > self.scales {
            Err(Error::ScaleOutOfRange {
                m,
                max: self.scales,
            })
        } else {
            Ok(())
        }
    }

    /// Sample spacing `2^m dx` on scale `m`.
    pub fn spacing(&self, m: usize) -> f64 {
        self.delta_x * pow2(m)
    }

    /// Half-width `2^m L` of the box `B_m`.
    pub fn half_width(&self, m: usize) -> f64 {
        self.l * pow2(m)
    }

    /// Largest wavenumber on the lattice of scale `m`.
    pub fn nyquist(&self, m: usize) -> f64 {
        PI / self.spacing(m)
    }

    /// Hard spectral mask on scale `m`: `BAND_RATIO * 2^-m kmax`.
    pub fn band_edge(&self, m: usize) -> f64 {
        BAND_RATIO * self.kmax / pow2(m)
    }

    /// Abscissa of sample `j` on the `N + 1` point lattice of `B_m`.
    pub fn box_abscissa(&self, m: usize, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.spacing(m)
    }

    /// Number of samples stored for ring `m`.
    pub fn ring_len(&self, m: usize) -> usize {
        if m == 0 {
            self.n + 1
        } else {
            self.n / 2
        }
    }

    /// Index into the `B_m` lattice of sample `i` of ring `m`.
    ///
    /// Ring 0 is the whole lattice of `B_0`. A coarser ring stores its left
    /// half `[-2^m L, -2^(m-1) L)` followed by its right half
    /// `(2^(m-1) L, 2^m L]`.
    pub fn ring_box_index(&self, m: usize, i: usize) -> usize {
        if m == 0 {
            return i;
        }
        let quarter = self.n / 4;
        if i < quarter {
            i
        } else {
            3 * quarter + 1 + (i - quarter)
        }
    }

    pub fn ring_abscissa(&self, m: usize, i: usize) -> f64 {
        self.box_abscissa(m, self.ring_box_index(m, i))
    }

    /// All abscissae of ring `m`, in storage order.
    pub fn ring_abscissae(&self, m: usize) -> Vec<f64> {
        (0..self.ring_len(m)).map(|i| self.ring_abscissa(m, i)).collect()
    }

    /// Quadrature weight of interior ring `m` samples.
    pub fn ring_weight(&self, m: usize) -> f64 {
        self.spacing(m)
    }

    /// Composite trapezoid weight of sample `i` of ring `m`.
    ///
    /// The outer end of a ring that borders a coarser one sits between a
    /// step of `h` and a step of `2h`. The two ends of the coarsest box are
    /// the same periodic point and share one weight.
    pub fn sample_weight(&self, m: usize, i: usize) -> f64 {
        let h = self.spacing(m);
        let outer = i == 0 || i + 1 == self.ring_len(m);
        match (outer, m == self.scales) {
            (false, _) => h,
            (true, false) => 1.5 * h,
            (true, true) => 0.5 * h,
        }
    }

    /// Signed wavenumbers of an `len`-point periodic DFT with spacing `h`,
    /// in FFT storage order.
    pub fn dft_wavenumbers(len: usize, h: f64) -> Vec<f64> {
        let dk = 2.0 * PI / (len as f64 * h);
        (0..len)
            .map(|j| {
                let s = if j < len / 2 {
                    j as f64
                } else {
                    j as f64 - len as f64
                };
                s * dk
            })
            .collect()
    }

    /// Wavenumbers of the `N`-point DFT over `B_m`.
    pub fn box_wavenumbers(&self, m: usize) -> Vec<f64> {
        Self::dft_wavenumbers(self.n, self.spacing(m))
    }

    /// Total number of stored samples across all rings.
    pub fn total_samples(&self) -> usize {
        (0..=self.scales).map(|m| self.ring_len(m)).sum()
    }
}

pub(crate) fn pow2(m: usize) -> f64 {
    (1u64 << m) as f64
}
