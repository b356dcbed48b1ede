//! Multiscale application of Fourier multipliers.
//!
//! A state is split into pieces `f_m^+` that are high-frequency relative to
//! scale `m` and concentrated inside `B_m`, plus a low-frequency remainder on
//! the coarsest box. Each piece is transformed on its own box, and the
//! results are merged from coarse to fine by spectral interpolation.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::spectral::{fft, signed_bin, sum_sq};
use crate::state::{MultiscaleState, ScaleField};
use crate::windows::{assumption1_defect, WindowSet};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative out-of-band mass tolerated by strict spectral interpolation.
pub const BAND_TOLERANCE: f64 = 1e-10;

/// A Fourier multiplier `S(k)`.
pub trait Multiplier: Sync {
    fn eval(&self, k: f64) -> Complex64;

    /// Whether `|S(k)| = 1` for every `k`.
    fn is_unitary(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Multiplier for Identity {
    fn eval(&self, _k: f64) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn is_unitary(&self) -> bool {
        true
    }
}

/// Constant phase `e^{iθ}`.
#[derive(Debug, Clone, Copy)]
pub struct GlobalPhase(pub f64);

impl Multiplier for GlobalPhase {
    fn eval(&self, _k: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.0)
    }

    fn is_unitary(&self) -> bool {
        true
    }
}

/// A multiplier backed by a closure.
pub struct FnMultiplier<F> {
    symbol: F,
    unitary: bool,
}

impl<F: Fn(f64) -> Complex64 + Sync> FnMultiplier<F> {
    pub fn new(symbol: F, unitary: bool) -> Self {
        FnMultiplier { symbol, unitary }
    }
}

impl<F: Fn(f64) -> Complex64 + Sync> Multiplier for FnMultiplier<F> {
    fn eval(&self, k: f64) -> Complex64 {
        (self.symbol)(k)
    }

    fn is_unitary(&self) -> bool {
        self.unitary
    }
}

/// A multiplier sampled on the wavenumber lattice of every box.
#[derive(Debug, Clone)]
pub struct MultiplierTable {
    per_scale: Vec<Vec<Complex64>>,
}

impl MultiplierTable {
    pub fn new(grid: &GridSpec, s: &dyn Multiplier) -> Self {
        let per_scale = (0..=grid.scales())
            .map(|m| grid.box_wavenumbers(m).into_iter().map(|k| s.eval(k)).collect())
            .collect();
        MultiplierTable { per_scale }
    }

    pub fn scale(&self, m: usize) -> &[Complex64] {
        &self.per_scale[m]
    }
}

/// Output of phase-space localization.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// `f_m^+` on the lattice of `B_m`, for `m = 0..=M`.
    pub plus_parts: Vec<ScaleField>,
    /// `f_M^-` on the lattice of `B_M`.
    pub minus_tail: ScaleField,
    /// `f_m^-` for every `m`; the last entry equals `minus_tail`.
    pub minus_parts: Vec<ScaleField>,
    /// Mass removed by the hard band edge on each scale (squared L² norm).
    pub discarded: Vec<f64>,
}

fn add_into(acc: &mut [Complex64], v: &[Complex64]) {
    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
}

/// The scale-m working field: `inner` (a scale-(m-1) field) decimated by two
/// over `B_(m-1)`, and the raw ring-m samples outside it.
pub(crate) fn lift(grid: &GridSpec, inner: &ScaleField, ring: &[Complex64]) -> ScaleField {
    let n = grid.n();
    let q = n / 4;
    let mut next = ScaleField::zeros(grid, inner.m + 1);
    next.values[..q].copy_from_slice(&ring[..q]);
    for j in q..=3 * q {
        next.values[j] = inner.values[2 * (j - q)];
    }
    next.values[3 * q + 1..].copy_from_slice(&ring[q..]);
    next
}

/// Phase-space localization, spectral interpolation and multiscale
/// multiplier application on one grid.
#[derive(Debug, Clone)]
pub struct MultiscaleFft {
    windows: WindowSet,
    strict: bool,
}

impl MultiscaleFft {
    pub fn new(grid: &GridSpec) -> Self {
        Self::from_windows(WindowSet::new(grid))
    }

    pub fn from_windows(windows: WindowSet) -> Self {
        MultiscaleFft {
            windows,
            strict: false,
        }
    }

    /// In strict mode `localize` rejects inputs whose localization defect
    /// exceeds `10 δ₁`, and spectral interpolation rejects inputs with
    /// out-of-band content.
    pub fn strict(mut self, on: bool) -> Self {
        self.strict = on;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        self.windows.grid()
    }

    pub fn windows(&self) -> &WindowSet {
        &self.windows
    }

    /// Splits `f` into `f_0^+, …, f_M^+` and `f_M^-`.
    ///
    /// On each scale the windowed field `χ_m f_(m-1)^-` is high-passed by
    /// `1 − P_m`. The high-passed spectrum is cut at the band edge before
    /// forming `f_m^+`, and the full high-passed signal is subtracted to form
    /// `f_m^-`, so whatever lay above the band edge is dropped instead of
    /// being decimated onto the next, coarser lattice.
    pub fn localize(&self, f: &MultiscaleState) -> Result<Decomposition> {
        let grid = self.grid();
        if f.grid() != grid {
            return Err(Error::GridMismatch("state and transform grids differ".into()));
        }
        if self.strict {
            let limit = 10.0 * grid.delta1();
            for m in 0..=grid.scales() {
                let defect = assumption1_defect(&self.windows, f, m)?;
                if defect > limit {
                    return Err(Error::AssumptionViolation { m, defect, limit });
                }
            }
        }
        let n = grid.n();
        let plan = fft(n);
        let mut plus_parts = Vec::with_capacity(grid.scales() + 1);
        let mut discarded = Vec::with_capacity(grid.scales() + 1);
        let mut minus_parts = Vec::with_capacity(grid.scales() + 1);
        let mut field = ScaleField {
            m: 0,
            values: f.ring(0).to_vec(),
        };
        for m in 0..=grid.scales() {
            if m > 0 {
                field = lift(grid, &field, f.ring(m));
            }
            let chi = self.windows.chi_samples(m);
            let p = self.windows.p_samples(m);
            let edge = grid.band_edge(m);
            let ks = grid.box_wavenumbers(m);

            let mut spec: Vec<Complex64> =
                field.values[..n].iter().zip(chi).map(|(z, c)| z * c).collect();
            plan.forward(&mut spec);
            let mut kept = vec![ZERO; n];
            let mut dropped = vec![ZERO; n];
            for j in 0..n {
                let z = spec[j] * (1.0 - p[j]);
                if ks[j].abs() < edge {
                    kept[j] = z;
                } else {
                    dropped[j] = z;
                }
            }
            plan.inverse(&mut kept);
            plan.inverse(&mut dropped);

            let mut plus = ScaleField::zeros(grid, m);
            let mut minus = ScaleField::zeros(grid, m);
            let mut lost = 0.0;
            for j in 0..n {
                let p = chi[j] * kept[j];
                let d = chi[j] * dropped[j];
                plus.values[j] = p;
                minus.values[j] = field.values[j] - p - d;
                lost += d.norm_sqr();
            }
            // The windowed parts are periodic on B_m but the field is not,
            // so the right end of f^- keeps its own field value.
            plus.values[n] = plus.values[0];
            minus.values[n] = field.values[n] - plus.values[0] - chi[0] * dropped[0];
            discarded.push(lost * grid.spacing(m));
            plus_parts.push(plus);
            minus_parts.push(minus.clone());
            field = minus;
        }
        Ok(Decomposition {
            plus_parts,
            minus_tail: field,
            minus_parts,
            discarded,
        })
    }

    /// Interpolates a scale-m field onto the lattice of `B_(m-1)`.
    ///
    /// The field is windowed by `χ_m`, which is flat over `B_(m-1)`,
    /// transformed, zero padded above the scale-m band edge and transformed
    /// back at twice the sampling rate.
    pub fn spectral_interpolate(&self, g: &ScaleField) -> Result<ScaleField> {
        let grid = self.grid();
        let m = g.m;
        if m == 0 {
            return Err(Error::ScaleOutOfRange { m: 0, max: grid.scales() });
        }
        grid.check_scale(m)?;
        let n = grid.n();
        let chi = self.windows.chi_samples(m);
        let mut spec: Vec<Complex64> = g.values[..n].iter().zip(chi).map(|(z, c)| z * c).collect();
        fft(n).forward(&mut spec);
        let edge = grid.band_edge(m);
        let ks = grid.box_wavenumbers(m);
        let big = 2 * n;
        let mut padded = vec![ZERO; big];
        let mut outside = 0.0;
        for j in 0..n {
            if ks[j].abs() < edge {
                let s = signed_bin(j, n);
                padded[s.rem_euclid(big as isize) as usize] = spec[j];
            } else {
                outside += spec[j].norm_sqr();
            }
        }
        if self.strict {
            let total = sum_sq(&spec);
            if total > 0.0 && outside / total > BAND_TOLERANCE * BAND_TOLERANCE {
                return Err(Error::BandLimitViolation {
                    m,
                    relative: (outside / total).sqrt(),
                });
            }
        }
        fft(big).inverse_raw(&mut padded);
        let s = 1.0 / n as f64;
        let values = padded[n / 2..=3 * n / 2].iter().map(|z| z * s).collect();
        Ok(ScaleField { m: m - 1, values })
    }

    pub fn tabulate(&self, s: &dyn Multiplier) -> MultiplierTable {
        MultiplierTable::new(self.grid(), s)
    }

    /// Applies `S(k)` to `f` across all scales.
    pub fn apply_multiplier(&self, f: &MultiscaleState, s: &dyn Multiplier) -> Result<MultiscaleState> {
        self.apply_table(f, &self.tabulate(s))
    }

    /// Same as [`apply_multiplier`](Self::apply_multiplier) with a
    /// pre-sampled symbol, which is what a time loop should use.
    pub fn apply_table(&self, f: &MultiscaleState, table: &MultiplierTable) -> Result<MultiscaleState> {
        let grid = self.grid();
        let mut dec = self.localize(f)?;
        let top = grid.scales();
        let n = grid.n();
        add_into(&mut dec.plus_parts[top].values, &dec.minus_tail.values);

        let propagated: Vec<ScaleField> = dec
            .plus_parts
            .par_iter()
            .map(|part| apply_on_box(part, table.scale(part.m), n))
            .collect();

        let mut out = self.merge(propagated)?;
        out.time = f.time;
        Ok(out)
    }

    /// `Σ f_m^+ + f_M^-` in ring storage.
    pub fn reconstruct(&self, dec: &Decomposition) -> Result<MultiscaleState> {
        let mut parts = dec.plus_parts.clone();
        let top = self.grid().scales();
        add_into(&mut parts[top].values, &dec.minus_tail.values);
        self.merge(parts)
    }

    /// Coarse-to-fine accumulation: the running sum on `B_m` fills ring `m`,
    /// then is interpolated onto `B_(m-1)` and added to the next part.
    fn merge(&self, mut parts: Vec<ScaleField>) -> Result<MultiscaleState> {
        let grid = self.grid();
        let mut out = MultiscaleState::zeros(grid);
        let mut g = parts.pop().expect("at least one scale");
        while let Some(part) = parts.pop() {
            out.from_scale_field(&g)?;
            let mut finer = self.spectral_interpolate(&g)?;
            add_into(&mut finer.values, &part.values);
            g = finer;
        }
        out.from_scale_field(&g)?;
        Ok(out)
    }
}

fn apply_on_box(part: &ScaleField, symbol: &[Complex64], n: usize) -> ScaleField {
    let plan = fft(n);
    let mut buf = part.values[..n].to_vec();
    plan.forward(&mut buf);
    buf.iter_mut().zip(symbol).for_each(|(z, s)| *z *= s);
    plan.inverse(&mut buf);
    buf.push(buf[0]);
    ScaleField {
        m: part.m,
        values: buf,
    }
}

/// Fraction of `S f_part` that lands outside `B_m`.
///
/// `f_part` is embedded in a box twice as wide, so spreading past `B_m` is
/// visible instead of wrapping around. The result is relative to
/// `‖f_part‖`.
pub fn spillover_defect(grid: &GridSpec, f_part: &ScaleField, s: &dyn Multiplier, m: usize) -> f64 {
    let n = grid.n();
    let big = 2 * n;
    let mut buf = vec![ZERO; big];
    // B_m occupies the middle half of the enlarged box.
    buf[n / 2..n / 2 + n].copy_from_slice(&f_part.values[..n]);
    let norm_in = sum_sq(&buf);
    if norm_in == 0.0 {
        return 0.0;
    }
    let plan = fft(big);
    plan.forward(&mut buf);
    let ks = GridSpec::dft_wavenumbers(big, grid.spacing(m));
    buf.iter_mut().zip(&ks).for_each(|(z, &k)| *z *= s.eval(k));
    plan.inverse(&mut buf);
    let outside: f64 = buf
        .iter()
        .enumerate()
        .filter(|(i, _)| *i < n / 2 || *i > n / 2 + n)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    (outside / norm_in).sqrt()
}
