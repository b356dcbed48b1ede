//! Oracles and diagnostics: a dense single-grid split-step solver, the exact
//! free Gaussian, error metrics, and a few a-priori bounds evaluated
//! numerically.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{pow2, GridSpec};
use crate::msfft::Multiplier;
use crate::propagator::{KineticMultiplier, Potential, Sink};
use crate::spectral::{fft, sum_sq};
use crate::state::MultiscaleState;

/// Samples on the periodic lattice `x_j = -R + j h`, `j = 0..2R/h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    pub r: f64,
    pub h: f64,
    pub values: Vec<Complex64>,
    pub t: f64,
}

impl DenseState {
    pub fn from_fn(r: f64, h: f64, f: impl Fn(f64) -> Complex64 + Sync) -> Result<Self> {
        let n = lattice_len(r, h)?;
        let values = (0..n).into_par_iter().map(|j| f(-r + j as f64 * h)).collect();
        Ok(DenseState { r, h, values, t: 0.0 })
    }

    pub fn abscissa(&self, j: usize) -> f64 {
        -self.r + j as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Discrete L² norm over samples in `[a, b]`.
    pub fn l2_norm(&self, a: f64, b: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(j, _)| {
                let x = self.abscissa(*j);
                x >= a && x <= b
            })
            .map(|(_, z)| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
            * self.h.sqrt()
    }

    /// Value at `x` if `x` is (to rounding) a lattice point.
    pub fn at(&self, x: f64) -> Option<Complex64> {
        let j = (x + self.r) / self.h;
        let jr = j.round();
        if (j - jr).abs() > 1e-6 || jr < 0.0 || jr as usize >= self.values.len() {
            return None;
        }
        Some(self.values[jr as usize])
    }
}

fn lattice_len(r: f64, h: f64) -> Result<usize> {
    if !(r > 0.0 && h > 0.0) {
        return Err(Error::InvalidGrid(format!("dense lattice needs R, h > 0 (R={r}, h={h})")));
    }
    let ratio = 2.0 * r / h;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-8 * ratio || n < 2.0 {
        return Err(Error::InvalidGrid(format!("2R = {} is not a multiple of h = {h}", 2.0 * r)));
    }
    Ok(n as usize)
}

/// Plain Strang split-step on one periodic lattice.
#[derive(Debug, Clone)]
pub struct DenseSolver {
    r: f64,
    h: f64,
    delta_t: f64,
    half_kinetic: Vec<Complex64>,
    full_kinetic: Vec<Complex64>,
    potential_phase: Option<Vec<Complex64>>,
}

impl DenseSolver {
    pub fn new(r: f64, h: f64, potential: &Potential, delta_t: f64) -> Result<Self> {
        let n = lattice_len(r, h)?;
        let ks = GridSpec::dft_wavenumbers(n, h);
        let half_kinetic = ks
            .iter()
            .map(|&k| KineticMultiplier { tau: 0.5 * delta_t }.eval(k))
            .collect();
        let full_kinetic = ks
            .iter()
            .map(|&k| KineticMultiplier { tau: delta_t }.eval(k))
            .collect();
        let potential_phase = match potential {
            Potential::Zero => None,
            Potential::Tabulated(_) => {
                return Err(Error::InvalidPotential(
                    "the dense solver needs a closed-form potential".into(),
                ))
            }
            p => Some(
                (0..n)
                    .map(|j| {
                        let v = p.eval(-r + j as f64 * h).unwrap_or(0.0);
                        Complex64::from_polar(1.0, -v * delta_t)
                    })
                    .collect(),
            ),
        };
        Ok(DenseSolver {
            r,
            h,
            delta_t,
            half_kinetic,
            full_kinetic,
            potential_phase,
        })
    }

    /// Advances `state` by `steps` Strang steps. Interior kinetic half steps
    /// are fused, so the cost is two transforms per step.
    pub fn advance(&self, state: &mut DenseState, steps: usize) -> Result<()> {
        if state.values.len() != self.half_kinetic.len() || state.h != self.h || state.r != self.r {
            return Err(Error::GridMismatch("dense state does not match solver lattice".into()));
        }
        if steps == 0 {
            return Ok(());
        }
        let plan = fft(state.values.len());
        let v = &mut state.values;
        let mul = |v: &mut [Complex64], s: &[Complex64]| {
            v.iter_mut().zip(s).for_each(|(z, s)| *z *= s);
        };
        plan.forward(v);
        mul(v, &self.half_kinetic);
        for step in 0..steps {
            plan.inverse(v);
            if let Some(ph) = &self.potential_phase {
                mul(v, ph);
            }
            plan.forward(v);
            let last = step + 1 == steps;
            mul(v, if last { &self.half_kinetic } else { &self.full_kinetic });
        }
        plan.inverse(v);
        state.t += steps as f64 * self.delta_t;
        Ok(())
    }
}

/// Runs the dense solver from `psi0` to `tmax`, returning snapshots every
/// `stride` steps (the initial state included).
pub fn dense_split_step_run(
    psi0: impl Fn(f64) -> Complex64 + Sync,
    potential: &Potential,
    r: f64,
    h: f64,
    delta_t: f64,
    tmax: f64,
    stride: usize,
) -> Result<Vec<DenseState>> {
    let solver = DenseSolver::new(r, h, potential, delta_t)?;
    let mut state = DenseState::from_fn(r, h, psi0)?;
    let total = (tmax / delta_t - 1e-9).ceil().max(0.0) as usize;
    let stride = stride.max(1);
    let mut out = vec![state.clone()];
    let mut done = 0;
    while done < total {
        let chunk = stride.min(total - done);
        solver.advance(&mut state, chunk)?;
        done += chunk;
        state.t = done as f64 * delta_t;
        out.push(state.clone());
    }
    Ok(out)
}

/// Free Gaussian of width `sigma_w` moving at speed `k`, normalized to unit
/// mass:
/// `(πσ²)^(-1/4) (1 + it/σ²)^(-1/2) e^{ik(x - kt/2)} e^{-(x-kt)²/(2σ²(1+it/σ²))}`.
pub fn exact_free_gaussian(x: f64, t: f64, k: f64, sigma_w: f64) -> Complex64 {
    let s2 = sigma_w * sigma_w;
    let spread = Complex64::new(1.0, t / s2);
    let norm = (std::f64::consts::PI * s2).powf(-0.25);
    let phase = Complex64::from_polar(1.0, k * (x - 0.5 * k * t));
    let d = x - k * t;
    let envelope = (-(d * d) / (2.0 * s2 * spread)).exp();
    norm * phase * envelope / spread.sqrt()
}

/// L² distance between a state and a closed-form solution on `[a, b]`.
pub fn state_error(state: &MultiscaleState, exact: impl Fn(f64, f64) -> Complex64, a: f64, b: f64) -> f64 {
    let t = state.time;
    state
        .samples()
        .filter(|(x, _, _)| *x >= a && *x <= b)
        .map(|(x, w, z)| w * (z - exact(x, t)).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `sup_t ‖ψ(t) − ψ_e(t)‖` on `[a, b]` over the given snapshots.
pub fn error_metric_e<'a>(
    traj: impl IntoIterator<Item = &'a MultiscaleState>,
    exact: impl Fn(f64, f64) -> Complex64,
    a: f64,
    b: f64,
) -> f64 {
    traj.into_iter()
        .map(|s| state_error(s, &exact, a, b))
        .fold(0.0, f64::max)
}

/// A sink that keeps the running supremum of the error against a closed
/// form, so long runs need not store their trajectory.
pub struct ErrorTracker<F> {
    exact: F,
    a: f64,
    b: f64,
    pub sup: f64,
    pub worst_time: f64,
}

impl<F: Fn(f64, f64) -> Complex64> ErrorTracker<F> {
    pub fn new(exact: F, a: f64, b: f64) -> Self {
        ErrorTracker {
            exact,
            a,
            b,
            sup: 0.0,
            worst_time: 0.0,
        }
    }
}

impl<F: Fn(f64, f64) -> Complex64> Sink for ErrorTracker<F> {
    fn snapshot(&mut self, state: &MultiscaleState) -> Result<()> {
        let e = state_error(state, &self.exact, self.a, self.b);
        if e > self.sup {
            self.sup = e;
            self.worst_time = state.time;
        }
        Ok(())
    }
}

fn weighted_moment(state: &MultiscaleState) -> f64 {
    state.samples().map(|(x, w, z)| w * (1.0 + x * x) * z.norm_sqr()).sum()
}

/// Right side of the low-frequency estimate
/// `‖P_M f‖² ≤ δ₁² ‖f‖² + 2^-M kmax C ‖⟨x⟩f‖²`, with `C = 1/2`.
///
/// The constant comes from `‖f̂‖_∞ ≤ (2π)^(-1/2) ‖f‖_1 ≤ (2π)^(-1/2) √π ‖⟨x⟩f‖`.
/// The value is a bound on a squared norm.
pub fn low_frequency_error_bound(state: &MultiscaleState, scales: usize) -> f64 {
    let g = state.grid();
    let d1 = g.delta1();
    let mass = state.norm().powi(2);
    d1 * d1 * mass + g.kmax() / pow2(scales) * 0.5 * weighted_moment(state)
}

/// One point of the virial comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirialPoint {
    pub t: f64,
    /// `‖⟨x⟩ψ(t)‖²`.
    pub lhs: f64,
    /// `‖⟨x⟩ψ(0)‖² + t² ‖ψ(t)‖²_{H¹}`.
    pub rhs: f64,
    pub holds: bool,
}

/// Squared spectral `H¹` norm `‖⟨k⟩ψ̂‖²` of the state, evaluated on the
/// dense lattice of the coarsest box.
pub fn h1_norm_sq(state: &MultiscaleState) -> Result<f64> {
    let g = state.grid();
    let dense = state.to_dense(g.scales())?;
    let len = dense.len() - 1;
    let mut spec = dense[..len].to_vec();
    fft(len).forward(&mut spec);
    let ks = GridSpec::dft_wavenumbers(len, g.delta_x());
    // Parseval for the unnormalized transform: ‖ψ‖² = h/len Σ |ψ̂_j|².
    let scale = g.delta_x() / len as f64;
    Ok(spec
        .iter()
        .zip(&ks)
        .map(|(z, k)| (1.0 + k * k) * z.norm_sqr())
        .sum::<f64>()
        * scale)
}

/// Evaluates the free-evolution virial inequality along a trajectory whose
/// first entry is the initial state.
pub fn virial_growth_check(traj: &[MultiscaleState]) -> Result<Vec<VirialPoint>> {
    let Some(first) = traj.first() else {
        return Ok(Vec::new());
    };
    let m0 = weighted_moment(first);
    let t0 = first.time;
    traj.iter()
        .map(|s| {
            let t = s.time - t0;
            let lhs = weighted_moment(s);
            let rhs = m0 + t * t * h1_norm_sq(s)?;
            Ok(VirialPoint {
                t: s.time,
                lhs,
                rhs,
                holds: lhs <= rhs * (1.0 + 1e-3),
            })
        })
        .collect()
}

/// Measured error of a single-box multiplier next to its a-priori bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AliasingCheck {
    /// `‖S φ − g_box‖` on the box, with `g_box` the periodic, band-limited
    /// DFT approximation.
    pub measured: f64,
    /// Mass of `S φ` outside the box, summed over periodic images, plus the
    /// out-of-band spectral mass of `φ` times `sup |S|` outside the band,
    /// plus the mass of `φ` itself outside the box times `sup |S|` inside
    /// the band.
    pub bound: f64,
}

/// Compares the box-DFT approximation of `S φ` on `[-l, l]` (`n` points,
/// wavenumbers `|k| < band`) with `S φ` computed on a box `enlarge` times
/// wider, and evaluates the Poisson-summation error bound.
///
/// `φ` should be resolved by the spacing `2l/n`, since the bound does not
/// account for aliasing in `k`.
pub fn aliasing_check(
    phi: impl Fn(f64) -> Complex64 + Sync,
    s: &dyn Multiplier,
    l: f64,
    n: usize,
    band: f64,
    enlarge: usize,
) -> Result<AliasingCheck> {
    if n < 2 || enlarge < 3 || enlarge % 2 == 0 {
        return Err(Error::InvalidGrid(
            "aliasing check needs n >= 2 and an odd enlargement >= 3".into(),
        ));
    }
    let h = 2.0 * l / n as f64;
    let big = n * enlarge;
    let r = l * enlarge as f64;
    let xs = |len: usize, half: f64| -> Vec<f64> { (0..len).map(|j| -half + j as f64 * h).collect() };

    // Reference S φ on the large lattice.
    let big_x = xs(big, r);
    let mut phi_big: Vec<Complex64> = big_x.par_iter().map(|&x| phi(x)).collect();
    let start = (enlarge / 2) * n;
    // Box samples of φ miss its off-box images; zero when φ lives in the box.
    let phi_outside = ((sum_sq(&phi_big) - sum_sq(&phi_big[start..start + n])).max(0.0) * h).sqrt();
    let big_plan = fft(big);
    big_plan.forward(&mut phi_big);
    let big_k = GridSpec::dft_wavenumbers(big, h);
    let out_of_band: f64 = phi_big
        .iter()
        .zip(&big_k)
        .filter(|(_, k)| k.abs() >= band)
        .map(|(z, _)| z.norm_sqr())
        .sum::<f64>()
        * h
        / big as f64;
    let sup_s = big_k
        .iter()
        .filter(|k| k.abs() >= band)
        .map(|&k| s.eval(k).norm())
        .fold(0.0, f64::max);
    let sup_s_band = big_k
        .iter()
        .filter(|k| k.abs() < band)
        .map(|&k| s.eval(k).norm())
        .fold(0.0, f64::max);
    let mut s_phi = phi_big;
    s_phi.iter_mut().zip(&big_k).for_each(|(z, &k)| *z *= s.eval(k));
    big_plan.inverse(&mut s_phi);

    // Box approximation.
    let box_x = xs(n, l);
    let mut g: Vec<Complex64> = box_x.iter().map(|&x| phi(x)).collect();
    let plan = fft(n);
    plan.forward(&mut g);
    for (z, k) in g.iter_mut().zip(GridSpec::dft_wavenumbers(n, h)) {
        *z = if k.abs() < band { *z * s.eval(k) } else { Complex64::new(0.0, 0.0) };
    }
    plan.inverse(&mut g);

    // The box occupies the middle block of the large lattice.
    let measured = (g
        .iter()
        .zip(&s_phi[start..start + n])
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        * h)
        .sqrt();
    let images: f64 = (0..enlarge)
        .filter(|&b| b != enlarge / 2)
        .map(|b| (sum_sq(&s_phi[b * n..(b + 1) * n]) * h).sqrt())
        .sum();
    Ok(AliasingCheck {
        measured,
        bound: images + out_of_band.sqrt() * sup_s + phi_outside * sup_s_band,
    })
}

/// Just the bound part of [`aliasing_check`].
pub fn aliasing_error_bound(
    phi: impl Fn(f64) -> Complex64 + Sync,
    s: &dyn Multiplier,
    l: f64,
    n: usize,
    band: f64,
) -> Result<f64> {
    Ok(aliasing_check(phi, s, l, n, band, 9)?.bound)
}
