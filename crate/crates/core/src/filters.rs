//! Time-dependent phase-space filters.
//!
//! On each scale `n` the two buffer intervals `±[2^n L/2, 2^n L]` are
//! inspected. Waves there that move outward (positive `k` on the right,
//! negative on the left) are projected out with `w χ(k) w`, where `w` is a
//! smooth bump over the buffer and `χ` a smooth step in frequency.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{pow2, GridSpec};
use crate::special::{erf, erfc, erfc_inv};
use crate::spectral::{fft, sum_sq};
use crate::state::{MultiscaleState, ScaleField};

/// Tolerance and derived margins of the filter masks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub epsilon: f64,
    /// Spatial margin `erfc^-1(ε)`.
    pub b: f64,
    /// Frequency offset `2 erfc^-1(2ε)`, so that `χ_+(0) = ε`.
    pub b_prime: f64,
}

impl FilterParams {
    /// Computes the margins and checks that they fit inside the box
    /// (`b < L/12`) and inside the band (`b' < kmax/2`).
    pub fn new(grid: &GridSpec, epsilon: f64) -> Result<Self> {
        Self::for_box(grid.l(), grid.kmax(), epsilon)
    }

    /// Same as [`new`](Self::new) from the box half-width and `kmax` alone.
    pub fn for_box(l: f64, kmax: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::DomainError {
                function: "FilterParams::new(epsilon)",
                value: epsilon,
            });
        }
        let b = erfc_inv(epsilon)?;
        // χ_+(0) = ε: at most ε of an incoming or stationary wave is removed.
        let b_prime = 2.0 * erfc_inv((2.0 * epsilon).min(1.0))?;
        if b >= l / 12.0 {
            return Err(Error::FilterInfeasible {
                reason: format!(
                    "spatial margin b = {b:.4} must satisfy b < L/12 = {:.4}",
                    l / 12.0
                ),
            });
        }
        // Waves that survive scale n cluster below 2^-n b'; keeping b' under
        // kmax/2 leaves them inside the band of scale n+1.
        let limit = 0.5 * kmax;
        if b_prime >= limit {
            return Err(Error::FilterInfeasible {
                reason: format!(
                    "frequency margin b' = {b_prime:.4} must satisfy b' < kmax/2 = {limit:.4}"
                ),
            });
        }
        Ok(FilterParams {
            epsilon,
            b,
            b_prime,
        })
    }
}

/// Which buffer interval a filter acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(format!("unknown side {other:?}")),
        }
    }
}

/// One filter event on one side of one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub t: f64,
    pub n: usize,
    pub side: Side,
    /// Squared L² norm of the removed part.
    pub removed_mass: f64,
    /// Mass-weighted mean wavenumber of the removed part.
    pub mean_k: f64,
}

/// Sampled masks for every scale.
///
/// Because both the masks and the lattices dilate by the same factor from
/// scale to scale, the sampled arrays coincide for every `n`; one copy is
/// stored and shared.
#[derive(Debug, Clone)]
pub struct FilterBank {
    grid: GridSpec,
    params: FilterParams,
    /// `w_+` at the right-hand buffer points of scale 0.
    w_right: Vec<f64>,
    /// `w_-` at the left-hand buffer points of scale 0.
    w_left: Vec<f64>,
    /// `χ_+` on the wavenumbers of an `N/4`-point transform at spacing `dx`.
    chi_right: Vec<f64>,
    chi_left: Vec<f64>,
    ks: Vec<f64>,
}

pub fn build_filter_bank(grid: &GridSpec, epsilon: f64) -> Result<FilterBank> {
    let params = FilterParams::new(grid, epsilon)?;
    let q = grid.n() / 4;
    let (l, b) = (grid.l(), params.b);
    let w_right: Vec<f64> = right_abscissae(grid, 0).iter().map(|&x| w_plus(x, l, b)).collect();
    let w_left: Vec<f64> = left_abscissae(grid, 0).iter().map(|&x| w_plus(-x, l, b)).collect();
    let ks = GridSpec::dft_wavenumbers(q, grid.delta_x());
    let chi_right = ks.iter().map(|&k| chi_plus(k, params.b_prime)).collect();
    let chi_left = ks.iter().map(|&k| chi_plus(-k, params.b_prime)).collect();
    Ok(FilterBank {
        grid: grid.clone(),
        params,
        w_right,
        w_left,
        chi_right,
        chi_left,
        ks,
    })
}

/// Smooth bump over `[L/2 + b, L − b]` with unit-width Gaussian edges.
pub fn w_plus(x: f64, l: f64, b: f64) -> f64 {
    let s = std::f64::consts::SQRT_2;
    0.5 * (erf((x - (0.5 * l + b)) / s) - erf((x - (l - b)) / s))
}

/// Smooth step from 0 to 1 centred at `b'`.
pub fn chi_plus(k: f64, b_prime: f64) -> f64 {
    0.5 * erfc((b_prime - k) / 2.0)
}

fn right_abscissae(grid: &GridSpec, n: usize) -> Vec<f64> {
    let q = grid.n() / 4;
    (0..q).map(|i| grid.box_abscissa(n, 3 * q + 1 + i)).collect()
}

fn left_abscissae(grid: &GridSpec, n: usize) -> Vec<f64> {
    let q = grid.n() / 4;
    (0..q).map(|i| grid.box_abscissa(n, i)).collect()
}

/// Storage offset of a buffer interval within ring `n`.
fn side_offset(grid: &GridSpec, n: usize, side: Side) -> usize {
    let q = grid.n() / 4;
    match (n, side) {
        (_, Side::Left) => 0,
        (0, Side::Right) => 3 * q + 1,
        (_, Side::Right) => q,
    }
}

impl FilterBank {
    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `w_(±,n)` at the buffer points of scale `n`.
    pub fn w_samples(&self, _n: usize, side: Side) -> &[f64] {
        match side {
            Side::Right => &self.w_right,
            Side::Left => &self.w_left,
        }
    }

    /// `χ_(±,n)` on the buffer transform lattice of scale `n`.
    pub fn chi_samples(&self, _n: usize, side: Side) -> &[f64] {
        match side {
            Side::Right => &self.chi_right,
            Side::Left => &self.chi_left,
        }
    }

    /// `w_(±,n)(x) = w_±(2^-n x)`.
    pub fn w(&self, n: usize, side: Side, x: f64) -> f64 {
        let y = x / pow2(n);
        match side {
            Side::Right => w_plus(y, self.grid.l(), self.params.b),
            Side::Left => w_plus(-y, self.grid.l(), self.params.b),
        }
    }

    /// `χ_(±,n)(k) = χ_±(2^n k)`.
    pub fn chi(&self, n: usize, side: Side, k: f64) -> f64 {
        let y = k * pow2(n);
        match side {
            Side::Right => chi_plus(y, self.params.b_prime),
            Side::Left => chi_plus(-y, self.params.b_prime),
        }
    }

    /// Buffer-interval wavenumbers of scale `n`, in FFT storage order.
    pub fn wavenumbers(&self, n: usize) -> Vec<f64> {
        self.ks.iter().map(|k| k / pow2(n)).collect()
    }

    /// `w χ(k) w` applied to the buffer samples `v` of scale `n`.
    fn project_side(&self, v: &[Complex64], side: Side) -> Vec<Complex64> {
        let w = self.w_samples(0, side);
        let chi = self.chi_samples(0, side);
        let plan = fft(v.len());
        let mut buf: Vec<Complex64> = v.iter().zip(w).map(|(z, w)| z * w).collect();
        plan.forward(&mut buf);
        buf.iter_mut().zip(chi).for_each(|(z, c)| *z *= c);
        plan.inverse(&mut buf);
        buf.iter_mut().zip(w).for_each(|(z, w)| *z *= w);
        buf
    }

    fn ledger_row(&self, t: f64, n: usize, side: Side, removed: &[Complex64]) -> LedgerRow {
        let h = self.grid.spacing(n);
        let mass = sum_sq(removed) * h;
        let mut spec = removed.to_vec();
        fft(spec.len()).forward(&mut spec);
        let total = sum_sq(&spec);
        let mean_k = if total > 0.0 {
            spec.iter()
                .zip(&self.ks)
                .map(|(z, k)| z.norm_sqr() * k / pow2(n))
                .sum::<f64>()
                / total
        } else {
            0.0
        };
        LedgerRow {
            t,
            n,
            side,
            removed_mass: mass,
            mean_k,
        }
    }

    /// The part `P_n^OUT ψ` that the scale-`n` filter removes, as a field on
    /// the lattice of `B_n` that vanishes outside the two buffer intervals.
    pub fn apply_outgoing_projection(&self, state: &MultiscaleState, n: usize) -> Result<ScaleField> {
        self.grid.check_scale(n)?;
        let (left, right) = self.removed_parts(state.ring(n), n);
        let q = self.grid.n() / 4;
        let mut out = ScaleField::zeros(&self.grid, n);
        out.values[..q].copy_from_slice(&left);
        out.values[3 * q + 1..].copy_from_slice(&right);
        Ok(out)
    }

    fn removed_parts(&self, ring: &[Complex64], n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        let q = self.grid.n() / 4;
        let lo = side_offset(&self.grid, n, Side::Left);
        let ro = side_offset(&self.grid, n, Side::Right);
        let left = self.project_side(&ring[lo..lo + q], Side::Left);
        let right = self.project_side(&ring[ro..ro + q], Side::Right);
        (left, right)
    }

    /// `ψ ← (1 − Σ_n P_n^OUT) ψ`, returning one ledger row per scale and side.
    pub fn apply_all_filters(&self, state: &mut MultiscaleState) -> Result<Vec<LedgerRow>> {
        if state.grid() != &self.grid {
            return Err(Error::GridMismatch("state and filter bank grids differ".into()));
        }
        let t = state.time;
        let q = self.grid.n() / 4;
        let rows: Vec<Vec<LedgerRow>> = state
            .rings_mut()
            .par_iter_mut()
            .enumerate()
            .map(|(n, ring)| {
                let (left, right) = self.removed_parts(ring, n);
                let mut rows = Vec::with_capacity(2);
                for (side, removed) in [(Side::Left, left), (Side::Right, right)] {
                    let off = side_offset(&self.grid, n, side);
                    ring[off..off + q]
                        .iter_mut()
                        .zip(&removed)
                        .for_each(|(z, r)| *z -= r);
                    rows.push(self.ledger_row(t, n, side, &removed));
                }
                rows
            })
            .collect();
        Ok(rows.into_iter().flatten().collect())
    }
}

/// Total mass removed across a set of ledger rows.
pub fn total_removed(rows: &[LedgerRow]) -> f64 {
    rows.iter().map(|r| r.removed_mass).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::from_samples(1024, 0.1, 2, 1e-8).unwrap()
    }

    fn packet(k0: f64, x0: f64, w: f64) -> impl Fn(f64) -> Complex64 {
        move |x: f64| Complex64::from_polar((-(x - x0).powi(2) / (2.0 * w * w)).exp(), k0 * x)
    }

    #[test]
    fn margins_for_sweep_configuration() {
        let g = GridSpec::from_samples(1024, 0.1, 3, 1e-8).unwrap();
        let p = FilterParams::new(&g, 1e-8).unwrap();
        assert!((p.b - 4.0522).abs() < 1e-3, "b={}", p.b);
        // Reported value for this configuration is 7.88.
        assert!((p.b_prime / 7.88 - 1.0).abs() < 0.01, "b'={}", p.b_prime);
    }

    #[test]
    fn tiny_box_is_rejected() {
        let err = FilterParams::for_box(1.0, 10.0, 1e-8).unwrap_err();
        assert!(matches!(err, Error::FilterInfeasible { .. }));
    }

    #[test]
    fn spatial_margin_boundary_is_strict() {
        let eps = 1e-8;
        let b = erfc_inv(eps).unwrap();
        assert!(FilterParams::for_box(12.0 * b, 1e3, eps).is_err());
        assert!(FilterParams::for_box(12.0 * b * (1.0 + 1e-9), 1e3, eps).is_ok());
    }

    #[test]
    fn frequency_margin_is_checked() {
        assert!(matches!(
            FilterParams::for_box(100.0, 10.0, 1e-8),
            Err(Error::FilterInfeasible { .. })
        ));
    }

    #[test]
    fn masks_are_mirror_images() {
        let g = grid();
        let bank = build_filter_bank(&g, 1e-8).unwrap();
        for n in 0..=g.scales() {
            for x in [0.0, 10.0, 30.0, 40.0, 51.2, 77.0] {
                let x = x * pow2(n);
                assert_eq!(bank.w(n, Side::Left, -x), bank.w(n, Side::Right, x));
            }
            for k in [-20.0, -3.0, 0.0, 4.5, 11.0] {
                assert_eq!(bank.chi(n, Side::Left, -k), bank.chi(n, Side::Right, k));
            }
        }
        let wl = bank.w_samples(0, Side::Left);
        let wr = bank.w_samples(0, Side::Right);
        for i in 0..wl.len() {
            assert_eq!(wl[i], wr[wr.len() - 1 - i]);
        }
    }

    #[test]
    fn frequency_step_has_plateaus() {
        let g = grid();
        let p = FilterParams::new(&g, 1e-8).unwrap();
        let eps = p.epsilon;
        // Floor at and below zero frequency, plateau from 2b' up.
        for k in [-50.0, -10.0, -2.0, 0.0] {
            assert!(chi_plus(k, p.b_prime) <= eps * (1.0 + 1e-9));
        }
        for k in [2.0 * p.b_prime, g.kmax() / 2.0 + 2.0 * p.b_prime, 30.0] {
            assert!(chi_plus(k, p.b_prime) >= 1.0 - eps * (1.0 + 1e-9));
        }
    }

    #[test]
    fn sampled_masks_match_dilations() {
        let g = grid();
        let bank = build_filter_bank(&g, 1e-8).unwrap();
        for n in 0..=g.scales() {
            for (x, &w) in right_abscissae(&g, n).iter().zip(bank.w_samples(n, Side::Right)) {
                assert!((bank.w(n, Side::Right, *x) - w).abs() < 1e-15);
            }
            for (k, &c) in bank.wavenumbers(n).iter().zip(bank.chi_samples(n, Side::Right)) {
                assert!((bank.chi(n, Side::Right, *k) - c).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_state_removes_nothing() {
        let g = grid();
        let bank = build_filter_bank(&g, 1e-8).unwrap();
        let mut s = MultiscaleState::zeros(&g);
        let rows = bank.apply_all_filters(&mut s).unwrap();
        assert_eq!(rows.len(), 2 * (g.scales() + 1));
        assert!(rows.iter().all(|r| r.removed_mass == 0.0));
    }

    #[test]
    fn outgoing_packet_is_removed_and_incoming_kept() {
        let g = grid();
        let bank = build_filter_bank(&g, 1e-8).unwrap();
        let l = g.l();
        let k0 = 0.75 * g.kmax();
        let out = MultiscaleState::from_fn(&g, packet(k0, 0.75 * l, 2.0));
        let inc = MultiscaleState::from_fn(&g, packet(-k0, 0.75 * l, 2.0));
        let mass = out.norm().powi(2);
        let r_out = bank.apply_outgoing_projection(&out, 0).unwrap();
        let r_in = bank.apply_outgoing_projection(&inc, 0).unwrap();
        let m_out = r_out.norm(&g).powi(2);
        let m_in = r_in.norm(&g).powi(2);
        assert!(m_out >= (1.0 - 1e-3) * mass, "{m_out} vs {mass}");
        assert!(m_in <= 1e-3 * mass, "{m_in}");
    }

    #[test]
    fn interior_state_is_untouched() {
        let g = grid();
        let bank = build_filter_bank(&g, 1e-8).unwrap();
        let s0 = MultiscaleState::from_fn(&g, packet(10.0, 0.0, 1.5));
        let mut s = s0.clone();
        bank.apply_all_filters(&mut s).unwrap();
        let rel = s.difference(&s0).unwrap().norm() / s0.norm();
        assert!(rel < 1e-8, "rel={rel}");
    }

    #[test]
    fn filtering_is_nearly_idempotent() {
        let g = grid();
        let bank = build_filter_bank(&g, 1e-8).unwrap();
        // Centre of the plateau of w_+ on scale 0.
        let c = 0.75 * g.l();
        let mut s = MultiscaleState::from_fn(&g, |x| {
            packet(18.0, c, 1.2)(x) + packet(-18.0, -c, 1.2)(x) + packet(4.0, 0.0, 2.0)(x)
        });
        bank.apply_all_filters(&mut s).unwrap();
        let once = s.clone();
        bank.apply_all_filters(&mut s).unwrap();
        let rel = s.difference(&once).unwrap().norm() / once.norm();
        assert!(rel <= 5.0 * 1e-8 * (g.scales() as f64 + 1.0), "rel={rel}");
    }

    #[test]
    fn ledger_reports_direction() {
        let g = grid();
        let bank = build_filter_bank(&g, 1e-8).unwrap();
        let l = g.l();
        let mut s = MultiscaleState::from_fn(&g, packet(16.0, 0.75 * l, 2.0));
        let rows = bank.apply_all_filters(&mut s).unwrap();
        let right0 = rows.iter().find(|r| r.n == 0 && r.side == Side::Right).unwrap();
        assert!((right0.mean_k - 16.0).abs() < 0.1, "{}", right0.mean_k);
        assert!(right0.removed_mass > 0.9 * 2.0 * std::f64::consts::PI.sqrt());
    }
}
