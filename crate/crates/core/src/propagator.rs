//! Strang split-step time integration on the multiscale grid, with periodic
//! phase-space filtering.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::filters::{FilterBank, FilterParams, LedgerRow};
use crate::grid::{pow2, GridSpec};
use crate::msfft::{Multiplier, MultiplierTable, MultiscaleFft};
use crate::state::MultiscaleState;
use crate::windows::{assumption1_defect, erfc_inv};

/// Free evolution `exp(-i k²/2 τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticMultiplier {
    pub tau: f64,
}

impl Multiplier for KineticMultiplier {
    fn eval(&self, k: f64) -> Complex64 {
        Complex64::from_polar(1.0, -0.5 * k * k * self.tau)
    }

    fn is_unitary(&self) -> bool {
        true
    }
}

/// A real, time-independent potential.
#[derive(Clone)]
pub enum Potential {
    Zero,
    Constant(f64),
    /// `-depth/(1 + x²/width²) + bump·exp(-x²/bump_width²)`.
    LongRange {
        depth: f64,
        width: f64,
        bump: f64,
        bump_width: f64,
    },
    /// Values given per ring, in ring storage order.
    Tabulated(Vec<Vec<f64>>),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Zero => f.write_str("Zero"),
            Potential::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Potential::LongRange {
                depth,
                width,
                bump,
                bump_width,
            } => f
                .debug_struct("LongRange")
                .field("depth", depth)
                .field("width", width)
                .field("bump", bump)
                .field("bump_width", bump_width)
                .finish(),
            Potential::Tabulated(r) => f.debug_tuple("Tabulated").field(&r.len()).finish(),
            Potential::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl Potential {
    /// The slowly decaying well with a central barrier used for the
    /// long-range benchmark.
    pub fn long_range() -> Self {
        Potential::LongRange {
            depth: 20.0,
            width: 25.6,
            bump: 20.0,
            bump_width: 3.0,
        }
    }

    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Potential::Function(Arc::new(f))
    }

    /// Value at `x`; tabulated potentials have no closed form and return
    /// `None`.
    pub fn eval(&self, x: f64) -> Option<f64> {
        match self {
            Potential::Zero => Some(0.0),
            Potential::Constant(c) => Some(*c),
            Potential::LongRange {
                depth,
                width,
                bump,
                bump_width,
            } => Some(
                -depth / (1.0 + (x / width).powi(2)) + bump * (-(x / bump_width).powi(2)).exp(),
            ),
            Potential::Tabulated(_) => None,
            Potential::Function(f) => Some(f(x)),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Zero)
    }

    /// Samples on every ring of `grid`.
    pub fn sample(&self, grid: &GridSpec) -> Result<Vec<Vec<f64>>> {
        let rings: Vec<Vec<f64>> = match self {
            Potential::Tabulated(r) => {
                if r.len() != grid.scales() + 1
                    || r.iter().enumerate().any(|(m, v)| v.len() != grid.ring_len(m))
                {
                    return Err(Error::InvalidPotential(
                        "tabulated potential does not match the ring layout".into(),
                    ));
                }
                r.clone()
            }
            _ => (0..=grid.scales())
                .map(|m| {
                    grid.ring_abscissae(m)
                        .into_iter()
                        .map(|x| self.eval(x).unwrap_or(0.0))
                        .collect()
                })
                .collect(),
        };
        if rings.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential("non-finite potential sample".into()));
        }
        Ok(rings)
    }

    /// Checks `|V(x)| ≤ v0/(1 + x²)` at every grid sample.
    pub fn check_decay(&self, grid: &GridSpec, v0: f64) -> Result<()> {
        let rings = self.sample(grid)?;
        for (m, ring) in rings.iter().enumerate() {
            for (i, v) in ring.iter().enumerate() {
                let x = grid.ring_abscissa(m, i);
                let bound = v0 / (1.0 + x * x);
                if v.abs() > bound {
                    return Err(Error::InvalidPotential(format!(
                        "|V({x})| = {} exceeds the decay bound {bound}",
                        v.abs()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Time stepping parameters, held as integer step counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub delta_t: f64,
    /// Steps between filter applications.
    pub filter_every: usize,
    pub total_steps: usize,
    /// Steps between snapshots; `0` disables snapshots.
    pub snapshot_stride: usize,
}

impl RunPlan {
    /// Builds a plan. `tstep` defaults to `(L/4)/kmax` rounded down to a
    /// multiple of `delta_t`; an explicit `tstep` must already be one.
    pub fn new(grid: &GridSpec, delta_t: f64, tmax: f64, tstep: Option<f64>) -> Result<Self> {
        if !(delta_t > 0.0 && delta_t.is_finite()) {
            return Err(Error::InvalidPlan(format!("delta_t must be positive, got {delta_t}")));
        }
        if !(tmax >= 0.0 && tmax.is_finite()) {
            return Err(Error::InvalidPlan(format!("Tmax must be non-negative, got {tmax}")));
        }
        let filter_every = match tstep {
            None => ((0.25 * grid.l() / grid.kmax()) / delta_t).floor().max(1.0) as usize,
            Some(ts) => {
                let r = ts / delta_t;
                if !(ts > 0.0) || (r - r.round()).abs() > 1e-9 * r.max(1.0) || r.round() < 1.0 {
                    return Err(Error::InvalidPlan(format!(
                        "Tstep = {ts} is not a positive integer multiple of delta_t = {delta_t}"
                    )));
                }
                r.round() as usize
            }
        };
        let total_steps = (tmax / delta_t - 1e-9).ceil().max(0.0) as usize;
        Ok(RunPlan {
            delta_t,
            filter_every,
            total_steps,
            snapshot_stride: 0,
        })
    }

    pub fn with_snapshot_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn tstep(&self) -> f64 {
        self.filter_every as f64 * self.delta_t
    }

    pub fn tmax(&self) -> f64 {
        self.total_steps as f64 * self.delta_t
    }

    /// A warning when `Tmax` is long enough for slow waves to reach the edge
    /// of the coarsest box, or `None`.
    pub fn advisory(&self, grid: &GridSpec) -> Option<String> {
        let limit = 0.1 * pow2(2 * grid.scales()) * grid.l() / grid.kmax();
        (self.tmax() > limit).then(|| {
            format!(
                "Tmax = {} exceeds 0.1·4^M·L/kmax = {limit:.3}; slow waves may reach the \
                 edge of the coarsest box (consider more scales)",
                self.tmax()
            )
        })
    }
}

/// Filter period short enough that a wave at `kmax` cannot slip from the
/// start of the filter bump, `L/2 + b`, into the falling edge of `χ_0`,
/// which begins about `erfc⁻¹(δ₁)·σ` before `3L/4`. Rounded down to a
/// multiple of `delta_t`.
///
/// The default `(L/4)/kmax` ignores both margins and lets fast, wide
/// packets leak past the window before they are filtered.
pub fn leak_free_tstep(grid: &GridSpec, params: &FilterParams, delta_t: f64) -> Result<f64> {
    let room = 0.25 * grid.l() - params.b - erfc_inv(grid.delta1())? * grid.sigma();
    let steps = (room / grid.kmax() / delta_t).floor();
    if !(steps >= 1.0) {
        return Err(Error::InvalidPlan(format!(
            "no leak-free filter period: L/4 - b - erfc⁻¹(δ₁)σ = {room:.4} leaves less than \
             one time step of travel at kmax"
        )));
    }
    Ok(steps * delta_t)
}

/// Smallest `M` with `safety · Tmax ≤ 4^M L/kmax`.
pub fn plan_scales(tmax: f64, l: f64, kmax: f64, safety: f64) -> usize {
    let need = safety * tmax * kmax / l;
    let mut m = 0;
    while pow2(2 * m) < need {
        m += 1;
    }
    m
}

/// Receives snapshots and filter ledgers while a run progresses.
pub trait Sink {
    fn snapshot(&mut self, _state: &MultiscaleState) -> Result<()> {
        Ok(())
    }

    fn ledger(&mut self, _rows: &[LedgerRow]) -> Result<()> {
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

/// A sink that ignores everything.
pub struct NullSink;

impl Sink for NullSink {}

/// A sink that forwards every snapshot to a closure.
pub struct FnSink<F>(pub F);

impl<F: FnMut(&MultiscaleState) -> Result<()>> Sink for FnSink<F> {
    fn snapshot(&mut self, state: &MultiscaleState) -> Result<()> {
        (self.0)(state)
    }
}

/// Summary of a finished run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: MultiscaleState,
    pub ledger: Vec<LedgerRow>,
    pub steps: usize,
    /// Largest localization defect of the initial data over all scales.
    pub initial_defect: f64,
}

/// Split-step propagator bound to one grid, potential and time step.
#[derive(Debug, Clone)]
pub struct Propagator {
    ms: MultiscaleFft,
    half_kinetic: MultiplierTable,
    potential_phase: Option<Vec<Vec<Complex64>>>,
    delta_t: f64,
    strict: bool,
}

impl Propagator {
    pub fn new(grid: &GridSpec, potential: &Potential, delta_t: f64) -> Result<Self> {
        let ms = MultiscaleFft::new(grid);
        let half_kinetic = ms.tabulate(&KineticMultiplier { tau: 0.5 * delta_t });
        let potential_phase = if potential.is_zero() {
            None
        } else {
            Some(
                potential
                    .sample(grid)?
                    .into_iter()
                    .map(|r| r.into_iter().map(|v| Complex64::from_polar(1.0, -v * delta_t)).collect())
                    .collect(),
            )
        };
        Ok(Propagator {
            ms,
            half_kinetic,
            potential_phase,
            delta_t,
            strict: false,
        })
    }

    /// In strict mode `run` refuses initial data whose localization defect
    /// exceeds `10 δ₁`.
    pub fn strict(mut self, on: bool) -> Self {
        self.strict = on;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        self.ms.grid()
    }

    pub fn transform(&self) -> &MultiscaleFft {
        &self.ms
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    /// One Strang step `K(δt/2) · e^{-iVδt} · K(δt/2)`.
    pub fn split_step(&self, state: &MultiscaleState) -> Result<MultiscaleState> {
        let mut s = self.ms.apply_table(state, &self.half_kinetic)?;
        if let Some(phase) = &self.potential_phase {
            for (m, ph) in phase.iter().enumerate() {
                s.ring_mut(m).iter_mut().zip(ph).for_each(|(z, p)| *z *= p);
            }
        }
        let mut s = self.ms.apply_table(&s, &self.half_kinetic)?;
        s.time = state.time + self.delta_t;
        Ok(s)
    }

    /// Largest localization defect of `state` over all scales.
    pub fn initial_defect(&self, state: &MultiscaleState) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for m in 0..=self.grid().scales() {
            worst = worst.max(assumption1_defect(self.ms.windows(), state, m)?);
        }
        Ok(worst)
    }

    /// Runs the filtered evolution from `psi0` for `plan.total_steps` steps.
    ///
    /// Filters fire after every `plan.filter_every` steps when a bank is
    /// given. Snapshots go to `sink` at `t = 0` and then every
    /// `plan.snapshot_stride` steps.
    pub fn run(
        &self,
        psi0: &MultiscaleState,
        plan: &RunPlan,
        bank: Option<&FilterBank>,
        sink: &mut dyn Sink,
    ) -> Result<RunOutcome> {
        if (plan.delta_t - self.delta_t).abs() > 1e-15 * self.delta_t {
            return Err(Error::InvalidPlan(format!(
                "plan time step {} differs from propagator time step {}",
                plan.delta_t, self.delta_t
            )));
        }
        let initial_defect = self.initial_defect(psi0)?;
        if self.strict {
            let limit = 10.0 * self.grid().delta1();
            if initial_defect > limit {
                let m = (0..=self.grid().scales())
                    .find(|&m| {
                        assumption1_defect(self.ms.windows(), psi0, m).map_or(false, |d| d > limit)
                    })
                    .unwrap_or(0);
                return Err(Error::AssumptionViolation {
                    m,
                    defect: initial_defect,
                    limit,
                });
            }
        }
        let t0 = psi0.time;
        let mut state = psi0.clone();
        let mut ledger = Vec::new();
        let result: Result<()> = (|| {
            if plan.snapshot_stride > 0 {
                sink.snapshot(&state)?;
            }
            for step in 1..=plan.total_steps {
                state = self.split_step(&state)?;
                state.time = t0 + step as f64 * self.delta_t;
                if let Some(bank) = bank {
                    if step % plan.filter_every == 0 {
                        let rows = bank.apply_all_filters(&mut state)?;
                        sink.ledger(&rows)?;
                        ledger.extend(rows);
                    }
                }
                if plan.snapshot_stride > 0 && step % plan.snapshot_stride == 0 {
                    sink.snapshot(&state)?;
                }
            }
            Ok(())
        })();
        let finished = sink.finish();
        result?;
        finished?;
        Ok(RunOutcome {
            state,
            ledger,
            steps: plan.total_steps,
            initial_defect,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::build_filter_bank;

    fn grid() -> GridSpec {
        GridSpec::from_samples(512, 0.1, 2, 1e-4).unwrap()
    }

    fn gaussian(k0: f64, w: f64) -> impl Fn(f64) -> Complex64 {
        let c = (std::f64::consts::PI * w * w).powf(-0.25);
        move |x: f64| Complex64::from_polar(c * (-x * x / (2.0 * w * w)).exp(), k0 * x)
    }

    #[test]
    fn kinetic_symbol_is_a_group() {
        for k in [-7.0, 0.0, 0.3, 12.0] {
            let a = KineticMultiplier { tau: 0.2 }.eval(k) * KineticMultiplier { tau: 0.3 }.eval(k);
            let b = KineticMultiplier { tau: 0.5 }.eval(k);
            assert!((a - b).norm() < 1e-13);
            assert!((b.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn default_filter_cadence_rounds_down() {
        let g = GridSpec::from_samples(1024, 0.1, 3, 1e-8).unwrap();
        let plan = RunPlan::new(&g, 1.0 / 32.0, 10.0, None).unwrap();
        let exact = 0.25 * g.l() / g.kmax();
        assert_eq!(plan.filter_every, (exact * 32.0).floor() as usize);
        assert!(plan.tstep() <= exact);
        assert_eq!(plan.total_steps, 320);
    }

    #[test]
    fn explicit_cadence_must_divide() {
        let g = grid();
        assert!(RunPlan::new(&g, 0.1, 1.0, Some(0.25)).is_err());
        assert_eq!(RunPlan::new(&g, 0.1, 1.0, Some(0.3)).unwrap().filter_every, 3);
    }

    #[test]
    fn scale_planning_follows_quadratic_law() {
        let (l, kmax) = (51.2, 20.0);
        assert_eq!(plan_scales(0.5 * l / kmax / 10.0, l, kmax, 10.0), 0);
        let t = l / kmax;
        let m = plan_scales(t, l, kmax, 1.0);
        assert_eq!(m, 0);
        assert_eq!(plan_scales(4.0 * t, l, kmax, 1.0), 1);
        assert_eq!(plan_scales(4.0 * t * 1.0001, l, kmax, 1.0), 2);
        assert_eq!(plan_scales(16.0 * t, l, kmax, 1.0), 2);
        let kmax = 2.0 * std::f64::consts::PI / 0.3;
        assert!(plan_scales(1500.0, 102.4, kmax, 10.0) >= 3);
    }

    #[test]
    fn constant_potential_is_a_phase() {
        let g = grid();
        let f = MultiscaleState::from_fn(&g, gaussian(3.0, 2.0));
        let free = Propagator::new(&g, &Potential::Zero, 0.05).unwrap();
        let shifted = Propagator::new(&g, &Potential::Constant(1.7), 0.05).unwrap();
        let (mut a, mut b) = (f.clone(), f);
        for _ in 0..5 {
            a = free.split_step(&a).unwrap();
            b = shifted.split_step(&b).unwrap();
        }
        a.scale(Complex64::from_polar(1.0, -1.7 * 0.05 * 5.0));
        assert!(a.difference(&b).unwrap().norm() < 1e-10);
    }

    #[test]
    fn short_run_without_filter_event_matches_repeated_steps() {
        let g = grid();
        let p = Propagator::new(&g, &Potential::Zero, 0.05).unwrap();
        let bank = build_filter_bank(&g, 1e-2).unwrap();
        let f = MultiscaleState::from_fn(&g, gaussian(4.0, 1.0));
        let plan = RunPlan::new(&g, 0.05, 0.2, Some(0.5)).unwrap();
        let out = p.run(&f, &plan, Some(&bank), &mut NullSink).unwrap();
        let mut s = f;
        for _ in 0..4 {
            s = p.split_step(&s).unwrap();
        }
        assert!(out.ledger.is_empty());
        assert!(out.state.difference(&s).unwrap().norm() == 0.0);
        assert!((out.state.time - 0.2).abs() < 1e-12);
    }

    #[test]
    fn strict_run_rejects_delocalized_data() {
        let g = grid();
        let p = Propagator::new(&g, &Potential::Zero, 0.05).unwrap().strict(true);
        let k0 = g.kmax() / 2.0;
        let f = MultiscaleState::from_fn(&g, |x| Complex64::from_polar(1.0, k0 * x));
        let plan = RunPlan::new(&g, 0.05, 0.1, None).unwrap();
        assert!(matches!(
            p.run(&f, &plan, None, &mut NullSink),
            Err(Error::AssumptionViolation { .. })
        ));
    }

    #[test]
    fn decay_check_catches_slow_tails() {
        let g = grid();
        assert!(Potential::long_range().check_decay(&g, 20.0 * 25.6 * 25.6 + 40.0).is_ok());
        assert!(Potential::from_fn(|x| 1.0 / (1.0 + x.abs())).check_decay(&g, 5.0).is_err());
    }
}
