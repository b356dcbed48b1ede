//! Smooth spatial windows `χ_m` and frequency windows `P_m`.
//!
//! Both are differences of error functions. `χ_0` is a plateau over
//! `|x| < 3L/4` with edges of width `σ`; `P_0` is a plateau over
//! `|k| < 3kmax/8` with edges of width `1/σ`. Coarser scales are dilations:
//! `χ_m(x) = χ_0(2^-m x)` and `P_m(k) = P_0(2^m k)`.

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::{pow2, GridSpec};
use crate::special::erf;
use crate::spectral::{fft, sum_sq};
use crate::state::MultiscaleState;

pub use crate::special::erfc_inv;

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    grid: GridSpec,
    chi: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
}

impl WindowSet {
    /// Tabulates `χ_m` on the `N + 1` point lattice of every box and `P_m`
    /// on the matching `N`-point wavenumber lattice.
    pub fn new(grid: &GridSpec) -> Self {
        let mut chi = Vec::with_capacity(grid.scales() + 1);
        let mut p = Vec::with_capacity(grid.scales() + 1);
        for m in 0..=grid.scales() {
            chi.push(
                (0..=grid.n())
                    .map(|j| chi_at(grid, m, grid.box_abscissa(m, j)))
                    .collect(),
            );
            p.push(
                grid.box_wavenumbers(m)
                    .into_iter()
                    .map(|k| p_at(grid, m, k))
                    .collect(),
            );
        }
        WindowSet {
            grid: grid.clone(),
            chi,
            p,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn sigma(&self) -> f64 {
        self.grid.sigma()
    }

    pub fn delta1(&self) -> f64 {
        self.grid.delta1()
    }

    pub fn chi(&self, m: usize, x: f64) -> f64 {
        chi_at(&self.grid, m, x)
    }

    pub fn p_window(&self, m: usize, k: f64) -> f64 {
        p_at(&self.grid, m, k)
    }

    /// `χ_m` on the lattice of `B_m`.
    pub fn chi_samples(&self, m: usize) -> &[f64] {
        &self.chi[m]
    }

    /// `P_m` on the DFT wavenumbers of `B_m`, in FFT storage order.
    pub fn p_samples(&self, m: usize) -> &[f64] {
        &self.p[m]
    }
}

fn chi_at(grid: &GridSpec, m: usize, x: f64) -> f64 {
    chi0(x / pow2(m), grid.l(), grid.sigma())
}

fn p_at(grid: &GridSpec, m: usize, k: f64) -> f64 {
    p0(k * pow2(m), grid.kmax(), grid.sigma())
}

/// `½[erf((x + 3L/4)/σ) − erf((x − 3L/4)/σ)]`.
pub fn chi0(x: f64, l: f64, sigma: f64) -> f64 {
    let a = 0.75 * l;
    0.5 * (erf((x + a) / sigma) - erf((x - a) / sigma))
}

/// `½[erf(σ(k + 3kmax/8)) − erf(σ(k − 3kmax/8))]`.
pub fn p0(k: f64, kmax: f64, sigma: f64) -> f64 {
    let a = 0.375 * kmax;
    0.5 * (erf(sigma * (k + a)) - erf(sigma * (k - a)))
}

/// Relative size of `(1−P_m)f − χ_m(1−P_m)χ_m f`, measured on the dense
/// `dx` lattice of `B_m`.
///
/// Small values mean the high-frequency part of `f` on scale `m` already
/// lives where `χ_m` is flat, which is what lets the remainder be sampled
/// at half the rate on the next scale.
pub fn assumption1_defect(windows: &WindowSet, f: &MultiscaleState, m: usize) -> Result<f64> {
    let grid = windows.grid();
    let dense = f.to_dense(m)?;
    let len = dense.len() - 1;
    let dx = grid.delta_x();
    let plan = fft(len);
    let ks = GridSpec::dft_wavenumbers(len, dx);
    let one_minus_p: Vec<f64> = ks.iter().map(|&k| 1.0 - windows.p_window(m, k)).collect();
    let chi: Vec<f64> = (0..len)
        .map(|j| windows.chi(m, (j as f64 - (len / 2) as f64) * dx))
        .collect();

    let high_pass = |v: &mut Vec<Complex64>| {
        plan.forward(v);
        v.iter_mut().zip(&one_minus_p).for_each(|(z, w)| *z *= w);
        plan.inverse(v);
    };

    let mut plain = dense[..len].to_vec();
    high_pass(&mut plain);

    let mut sandwiched: Vec<Complex64> = dense[..len].iter().zip(&chi).map(|(z, c)| z * c).collect();
    high_pass(&mut sandwiched);
    sandwiched.iter_mut().zip(&chi).for_each(|(z, c)| *z *= c);

    let diff: Vec<Complex64> = plain.iter().zip(&sandwiched).map(|(a, b)| a - b).collect();
    let denom = sum_sq(&dense[..len]);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((sum_sq(&diff) / denom).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::erf;
    use proptest::prelude::*;

    fn sweep_grid() -> GridSpec {
        GridSpec::from_samples(1024, 0.1, 3, 1e-8).unwrap()
    }

    #[test]
    fn chi_at_origin_and_edges() {
        let g = sweep_grid();
        let w = WindowSet::new(&g);
        let l = g.l();
        let s = g.sigma();
        assert!((w.chi(0, 0.0) - erf(0.75 * l / s)).abs() < 1e-15);
        assert!(w.chi(0, 0.0) >= 1.0 - g.delta1());
        for x in [0.75 * l, -0.75 * l] {
            let expect = 0.5 * erf(1.5 * l / s);
            assert!((w.chi(0, x) - expect).abs() < 1e-15);
            assert!((w.chi(0, x) - 0.5).abs() < g.delta1() / 2.0);
        }
    }

    #[test]
    fn p_at_zero_is_scale_free() {
        let g = sweep_grid();
        let w = WindowSet::new(&g);
        let expect = erf(0.375 * g.sigma() * g.kmax());
        for m in 0..=g.scales() {
            assert!((w.p_window(m, 0.0) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn plateaus_hold_on_every_lattice_point() {
        let g = sweep_grid();
        let w = WindowSet::new(&g);
        let d = g.delta1();
        for m in 0..=g.scales() {
            let lm = g.half_width(m);
            for (j, &c) in w.chi_samples(m).iter().enumerate() {
                let x = g.box_abscissa(m, j);
                assert!((0.0..=1.0).contains(&c));
                // The steepness interval only guarantees the plateau out to
                // 5L/8 and the floor beyond 7L/8.
                if x.abs() <= 0.625 * lm {
                    assert!(c >= 1.0 - d, "m={m} x={x} chi={c}");
                }
                if x.abs() >= 0.875 * lm {
                    assert!(c <= d, "m={m} x={x} chi={c}");
                }
            }
            let km = g.kmax() / pow2(m);
            for (&k, &p) in g.box_wavenumbers(m).iter().zip(w.p_samples(m)) {
                assert!((0.0..=1.0).contains(&p));
                if k.abs() <= km / 4.0 {
                    assert!(p >= 1.0 - d, "m={m} k={k} p={p}");
                }
                if k.abs() >= km / 2.0 {
                    assert!(p <= d, "m={m} k={k} p={p}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn scaling_relations(x in -400.0f64..400.0, k in -30.0f64..30.0, m in 0usize..=3) {
            let g = sweep_grid();
            let w = WindowSet::new(&g);
            let s = pow2(m);
            prop_assert!((w.chi(m, s * x) - w.chi(0, x)).abs() < 1e-15);
            prop_assert!((w.p_window(m, k / s) - w.p_window(0, k)).abs() < 1e-15);
        }
    }

    #[test]
    fn low_frequency_data_has_tiny_defect() {
        let g = GridSpec::from_samples(512, 0.1, 2, 1e-4).unwrap();
        let w = WindowSet::new(&g);
        let f = MultiscaleState::from_fn(&g, |x| Complex64::new((-x * x / 800.0).exp(), 0.0));
        for m in 0..=2 {
            let d = assumption1_defect(&w, &f, m).unwrap();
            assert!(d <= 2.0 * g.delta1(), "m={m} d={d}");
        }
    }

    #[test]
    fn centred_packet_has_small_defect() {
        let g = GridSpec::from_samples(1024, 0.1, 2, 1e-8).unwrap();
        let w = WindowSet::new(&g);
        let k0 = g.kmax() / 2.0;
        let f = MultiscaleState::from_fn(&g, |x| {
            Complex64::from_polar((-x * x / 8.0).exp(), k0 * x)
        });
        for m in 0..=2 {
            let d = assumption1_defect(&w, &f, m).unwrap();
            assert!(d <= 2.0 * g.delta1() + 1e-10, "m={m} d={d}");
        }
    }

    #[test]
    fn box_filling_plane_wave_is_flagged() {
        let g = GridSpec::from_samples(512, 0.1, 2, 1e-4).unwrap();
        let w = WindowSet::new(&g);
        let k0 = g.kmax() / 2.0;
        let f = MultiscaleState::from_fn(&g, |x| Complex64::from_polar(1.0, k0 * x));
        let d = assumption1_defect(&w, &f, 0).unwrap();
        assert!(d > 0.1, "d={d}");
    }
}
