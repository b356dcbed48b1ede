//! Benchmark configurations: free-particle sweeps against the exact
//! Gaussian, the long-range potential against a dense oracle, and the
//! single-box filter response.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::filters::build_filter_bank;
use crate::grid::GridSpec;
use crate::propagator::{leak_free_tstep, NullSink, Potential, Propagator, RunPlan, Sink};
use crate::reference::{exact_free_gaussian, DenseSolver, DenseState, ErrorTracker};
use crate::state::MultiscaleState;

/// Free-particle runs compared with the exact Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeSettings {
    pub n: usize,
    pub delta_x: f64,
    pub scales: usize,
    pub delta1: f64,
    pub epsilon: f64,
    pub delta_t: f64,
    /// Half-width of the interval the error is measured on.
    pub observe: f64,
    /// Steps between error evaluations.
    pub stride: usize,
    /// Filter period; `None` uses [`leak_free_tstep`].
    pub tstep: Option<f64>,
}

impl Default for FreeSettings {
    fn default() -> Self {
        FreeSettings {
            n: 1024,
            delta_x: 0.1,
            scales: 3,
            delta1: 1e-8,
            epsilon: 1e-8,
            delta_t: 1.0 / 32.0,
            observe: 25.6,
            stride: 1,
            tstep: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// The swept parameter (wavenumber or width).
    pub param: f64,
    /// `sup_t ‖ψ − ψ_e‖` on the observation interval.
    pub error: f64,
    /// Time at which the supremum was attained.
    pub worst_time: f64,
}

/// Runs one free Gaussian of speed `k` and width `sigma_w` to `tmax` and
/// returns the supremum error.
pub fn free_gaussian_case(s: &FreeSettings, k: f64, sigma_w: f64, tmax: f64) -> Result<SweepPoint> {
    let grid = GridSpec::from_samples(s.n, s.delta_x, s.scales, s.delta1)?;
    let bank = build_filter_bank(&grid, s.epsilon)?;
    let prop = Propagator::new(&grid, &Potential::Zero, s.delta_t)?;
    let tstep = match s.tstep {
        Some(t) => t,
        None => leak_free_tstep(&grid, bank.params(), s.delta_t)?,
    };
    let plan = RunPlan::new(&grid, s.delta_t, tmax, Some(tstep))?.with_snapshot_stride(s.stride.max(1));
    let psi0 = MultiscaleState::from_fn(&grid, |x| exact_free_gaussian(x, 0.0, k, sigma_w));
    let mut tracker = ErrorTracker::new(
        move |x, t| exact_free_gaussian(x, t, k, sigma_w),
        -s.observe,
        s.observe,
    );
    prop.run(&psi0, &plan, Some(&bank), &mut tracker)?;
    Ok(SweepPoint {
        param: k,
        error: tracker.sup,
        worst_time: tracker.worst_time,
    })
}

/// Width of the packets in the frequency sweep.
pub const SWEEP_WIDTH: f64 = 4.0;

/// `Tmax = 204.8/k`, long enough for the packet to leave and any wrapped
/// reflection to return.
pub fn sweep_horizon(k: f64) -> f64 {
    204.8 / k
}

/// `E(k)` for each `k`, in parallel.
pub fn frequency_sweep(s: &FreeSettings, ks: &[f64]) -> Result<Vec<SweepPoint>> {
    ks.par_iter()
        .map(|&k| free_gaussian_case(s, k, SWEEP_WIDTH, sweep_horizon(k)))
        .collect()
}

/// Final time of the spread sweep.
pub const SPREAD_HORIZON: f64 = 50.0;

/// `E(σ)` for stationary Gaussians of each width.
pub fn spread_sweep(s: &FreeSettings, sigmas: &[f64]) -> Result<Vec<SweepPoint>> {
    sigmas
        .par_iter()
        .map(|&w| {
            free_gaussian_case(s, 0.0, w, SPREAD_HORIZON).map(|p| SweepPoint { param: w, ..p })
        })
        .collect()
}

/// The long-range benchmark and its dense oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRangeSettings {
    pub n: usize,
    pub delta_x: f64,
    pub delta1: f64,
    pub epsilon: f64,
    pub delta_t: f64,
    pub tmax: f64,
    pub oracle_r: f64,
    pub oracle_h: f64,
    /// Steps between comparisons.
    pub stride: usize,
    /// Half-width of the comparison interval, at most `L`.
    pub observe: f64,
    /// Filter period; `None` uses [`leak_free_tstep`].
    pub tstep: Option<f64>,
}

impl Default for LongRangeSettings {
    fn default() -> Self {
        LongRangeSettings {
            n: 2048,
            delta_x: 0.1,
            delta1: 1e-10,
            epsilon: 1e-8,
            delta_t: 1.0 / 64.0,
            tmax: 300.0,
            oracle_r: 6553.6,
            oracle_h: 0.2,
            stride: 64,
            observe: 102.4,
            tstep: None,
        }
    }
}

/// Initial data of the long-range benchmark.
pub fn long_range_initial(x: f64) -> Complex64 {
    Complex64::new((4.0 * std::f64::consts::PI).powf(-0.25) * (-x * x / 32.0).exp(), 0.0)
}

/// Oracle values at the comparison points, one row per comparison time.
#[derive(Debug, Clone)]
pub struct OracleTrace {
    pub xs: Vec<f64>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<Complex64>>,
    pub h: f64,
}

/// Runs the dense oracle and keeps its values at the oracle lattice points
/// inside `B_0`.
pub fn long_range_oracle(s: &LongRangeSettings) -> Result<OracleTrace> {
    let l = 0.5 * s.n as f64 * s.delta_x;
    let potential = Potential::long_range();
    let solver = DenseSolver::new(s.oracle_r, s.oracle_h, &potential, s.delta_t)?;
    let mut state = DenseState::from_fn(s.oracle_r, s.oracle_h, long_range_initial)?;
    let idx: Vec<usize> = (0..state.len())
        .filter(|&j| state.abscissa(j).abs() <= l + 1e-9)
        .collect();
    let xs = idx.iter().map(|&j| state.abscissa(j)).collect();
    let total = (s.tmax / s.delta_t - 1e-9).ceil() as usize;
    let mut times = vec![0.0];
    let mut values = vec![idx.iter().map(|&j| state.values[j]).collect()];
    let mut done = 0;
    while done < total {
        let chunk = s.stride.min(total - done);
        solver.advance(&mut state, chunk)?;
        done += chunk;
        times.push(done as f64 * s.delta_t);
        values.push(idx.iter().map(|&j| state.values[j]).collect());
    }
    Ok(OracleTrace {
        xs,
        times,
        values,
        h: s.oracle_h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub t: f64,
    pub rel_err: f64,
}

struct OracleComparer<'a> {
    oracle: &'a OracleTrace,
    /// Oracle column and ring-0 index of each comparison point.
    points: Vec<(usize, usize)>,
    next: usize,
    out: Vec<ErrorSample>,
}

impl Sink for OracleComparer<'_> {
    fn snapshot(&mut self, state: &MultiscaleState) -> Result<()> {
        let Some(row) = self.oracle.values.get(self.next) else {
            return Ok(());
        };
        let ring = state.ring(0);
        let (mut num, mut den) = (0.0, 0.0);
        for &(c, i) in &self.points {
            let r = row[c];
            num += (ring[i] - r).norm_sqr();
            den += r.norm_sqr();
        }
        self.out.push(ErrorSample {
            t: self.oracle.times[self.next],
            rel_err: (num / den).sqrt(),
        });
        self.next += 1;
        Ok(())
    }
}

/// Relative error against the oracle on `[-observe, observe]` over time,
/// for a run with `scales` coarse levels.
pub fn long_range_errors(s: &LongRangeSettings, scales: usize, oracle: &OracleTrace) -> Result<Vec<ErrorSample>> {
    let grid = GridSpec::from_samples(s.n, s.delta_x, scales, s.delta1)?;
    let bank = build_filter_bank(&grid, s.epsilon)?;
    let prop = Propagator::new(&grid, &Potential::long_range(), s.delta_t)?;
    let tstep = match s.tstep {
        Some(t) => t,
        None => leak_free_tstep(&grid, bank.params(), s.delta_t)?,
    };
    let plan = RunPlan::new(&grid, s.delta_t, s.tmax, Some(tstep))?.with_snapshot_stride(s.stride);
    let psi0 = MultiscaleState::from_fn(&grid, long_range_initial);
    let points = oracle
        .xs
        .iter()
        .enumerate()
        .filter(|(_, x)| x.abs() <= s.observe + 1e-9)
        .map(|(c, &x)| (c, (x / grid.delta_x() + (grid.n() / 2) as f64).round() as usize))
        .collect();
    let mut cmp = OracleComparer {
        oracle,
        points,
        next: 0,
        out: Vec::new(),
    };
    prop.run(&psi0, &plan, Some(&bank), &mut cmp)?;
    Ok(cmp.out)
}

/// First time the relative error exceeds `threshold`.
pub fn failure_time(series: &[ErrorSample], threshold: f64) -> Option<f64> {
    series.iter().find(|e| e.rel_err > threshold).map(|e| e.t)
}

/// Single box, single filter: a packet `e^{ikx} e^{-x²/98}` run for
/// `4L/k` on `[-L, L]` with `N` points. Returns the error on the box at the
/// final time relative to the initial norm.
///
/// With no coarse scale there is no window edge to protect, so the filter
/// period is the plain `(L/4)/kmax`.
pub fn single_filter_error(n: usize, delta_x: f64, epsilon: f64, delta_t: f64, k: f64) -> Result<f64> {
    let grid = GridSpec::from_samples(n, delta_x, 0, 1e-8)?;
    let bank = build_filter_bank(&grid, epsilon)?;
    let prop = Propagator::new(&grid, &Potential::Zero, delta_t)?;
    let tmax = 4.0 * grid.l() / k;
    let plan = RunPlan::new(&grid, delta_t, tmax, None)?;
    let width = 7.0;
    let scale = (std::f64::consts::PI * width * width).powf(0.25);
    let psi0 = MultiscaleState::from_fn(&grid, |x| scale * exact_free_gaussian(x, 0.0, k, width));
    let out = prop.run(&psi0, &plan, Some(&bank), &mut NullSink)?;
    let t = out.state.time;
    let l = grid.l();
    let err = crate::reference::state_error(&out.state, |x, _| scale * exact_free_gaussian(x, t, k, width), -l, l);
    Ok(err / psi0.l2_norm(-l, l))
}
