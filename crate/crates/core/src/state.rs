//! Ring storage of a wavefunction on the dyadic grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::spectral::{fourier_refine, sum_sq};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Samples covering all of `B_m` at spacing `2^m dx`, periodic endpoint
/// included (`N + 1` values).
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleField {
    pub m: usize,
    pub values: Vec<Complex64>,
}

impl ScaleField {
    pub fn zeros(grid: &GridSpec, m: usize) -> Self {
        ScaleField {
            m,
            values: vec![ZERO; grid.n() + 1],
        }
    }

    /// Samples `f` on the lattice of `B_m`.
    pub fn from_fn(grid: &GridSpec, m: usize, f: impl Fn(f64) -> Complex64) -> Self {
        ScaleField {
            m,
            values: (0..=grid.n()).map(|j| f(grid.box_abscissa(m, j))).collect(),
        }
    }

    /// Discrete L² norm over the periodic cell (endpoint counted once).
    pub fn norm(&self, grid: &GridSpec) -> f64 {
        let n = self.values.len() - 1;
        (crate::spectral::sum_sq(&self.values[..n]) * grid.spacing(self.m)).sqrt()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A wavefunction stored ring by ring.
///
/// Ring 0 holds the `N + 1` samples of `B_0`; ring `m ≥ 1` holds the `N/2`
/// samples of `B_m \ B_(m-1)`, left half first.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiscaleState {
    grid: GridSpec,
    rings: Vec<Vec<Complex64>>,
    pub time: f64,
}

impl MultiscaleState {
    pub fn zeros(grid: &GridSpec) -> Self {
        let rings = (0..=grid.scales())
            .map(|m| vec![ZERO; grid.ring_len(m)])
            .collect();
        MultiscaleState {
            grid: grid.clone(),
            rings,
            time: 0.0,
        }
    }

    /// Samples a closed-form function on every ring.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64) -> Complex64) -> Self {
        let rings = (0..=grid.scales())
            .map(|m| grid.ring_abscissae(m).into_iter().map(&f).collect())
            .collect();
        MultiscaleState {
            grid: grid.clone(),
            rings,
            time: 0.0,
        }
    }

    /// Builds a state from explicit ring data; lengths must match the grid.
    pub fn from_rings(grid: &GridSpec, rings: Vec<Vec<Complex64>>, time: f64) -> Result<Self> {
        if rings.len() != grid.scales() + 1 {
            return Err(Error::GridMismatch(format!(
                "expected {} rings, got {}",
                grid.scales() + 1,
                rings.len()
            )));
        }
        for (m, r) in rings.iter().enumerate() {
            if r.len() != grid.ring_len(m) {
                return Err(Error::GridMismatch(format!(
                    "ring {m} has {} samples, expected {}",
                    r.len(),
                    grid.ring_len(m)
                )));
            }
        }
        Ok(MultiscaleState {
            grid: grid.clone(),
            rings,
            time,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn rings(&self) -> &[Vec<Complex64>] {
        &self.rings
    }

    pub fn ring(&self, m: usize) -> &[Complex64] {
        &self.rings[m]
    }

    pub fn ring_mut(&mut self, m: usize) -> &mut [Complex64] {
        &mut self.rings[m]
    }

    pub(crate) fn rings_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.rings
    }

    /// Iterates over `(x, weight, value)` for every stored sample.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, Complex64)> + '_ {
        self.rings.iter().enumerate().flat_map(move |(m, r)| {
            r.iter()
                .enumerate()
                .map(move |(i, &z)| (self.grid.ring_abscissa(m, i), self.grid.sample_weight(m, i), z))
        })
    }

    /// Discrete L² norm restricted to samples in `[a, b]`, with the weights
    /// of [`GridSpec::sample_weight`].
    pub fn l2_norm(&self, a: f64, b: f64) -> f64 {
        self.samples()
            .filter(|(x, _, _)| *x >= a && *x <= b)
            .map(|(_, w, z)| w * z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Norm over the whole grid.
    pub fn norm(&self) -> f64 {
        let r = self.grid.half_width(self.grid.scales());
        self.l2_norm(-r, r)
    }

    /// Norm of the trigonometric interpolant on the `dx` lattice of the
    /// coarsest box.
    ///
    /// Unlike [`norm`](Self::norm), which sums rings of different spacing,
    /// this is a single uniform sum and is exact for band-limited data.
    pub fn dense_norm(&self) -> Result<f64> {
        let dense = self.to_dense(self.grid.scales())?;
        let periodic = &dense[..dense.len() - 1];
        Ok((sum_sq(periodic) * self.grid.delta_x()).sqrt())
    }

    pub fn scale(&mut self, c: Complex64) {
        self.rings.iter_mut().flatten().for_each(|z| *z *= c);
    }

    /// Pointwise product with a function of position.
    pub fn multiply_by(&mut self, f: impl Fn(f64) -> Complex64) {
        for m in 0..self.rings.len() {
            for (i, z) in self.rings[m].iter_mut().enumerate() {
                *z *= f(self.grid.ring_abscissa(m, i));
            }
        }
    }

    /// `self - other` sample by sample.
    pub fn difference(&self, other: &MultiscaleState) -> Result<MultiscaleState> {
        self.check_same_grid(other)?;
        let rings = self
            .rings
            .iter()
            .zip(&other.rings)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(MultiscaleState {
            grid: self.grid.clone(),
            rings,
            time: self.time,
        })
    }

    pub(crate) fn check_same_grid(&self, other: &MultiscaleState) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("states live on different grids".into()));
        }
        Ok(())
    }

    /// Samples of the state on the full lattice of `B_m`.
    ///
    /// Inside `B_(m-1)` the finer data is decimated by two at each level;
    /// that is only faithful when it carries no frequencies above the scale-m
    /// Nyquist limit.
    pub fn to_scale_field(&self, m: usize) -> Result<ScaleField> {
        self.grid.check_scale(m)?;
        if m == 0 {
            return Ok(ScaleField {
                m,
                values: self.rings[0].clone(),
            });
        }
        let inner = self.to_scale_field(m - 1)?;
        let n = self.grid.n();
        let q = n / 4;
        let mut values = vec![ZERO; n + 1];
        values[..q].copy_from_slice(&self.rings[m][..q]);
        for j in q..=3 * q {
            values[j] = inner.values[2 * (j - q)];
        }
        values[3 * q + 1..].copy_from_slice(&self.rings[m][q..]);
        Ok(ScaleField { m, values })
    }

    /// Writes back the part of `field` that ring `field.m` owns.
    pub fn from_scale_field(&mut self, field: &ScaleField) -> Result<()> {
        self.grid.check_scale(field.m)?;
        if field.values.len() != self.grid.n() + 1 {
            return Err(Error::GridMismatch(format!(
                "scale field has {} samples, expected {}",
                field.values.len(),
                self.grid.n() + 1
            )));
        }
        let m = field.m;
        if m == 0 {
            self.rings[0].copy_from_slice(&field.values);
            return Ok(());
        }
        let q = self.grid.n() / 4;
        self.rings[m][..q].copy_from_slice(&field.values[..q]);
        self.rings[m][q..].copy_from_slice(&field.values[3 * q + 1..]);
        Ok(())
    }

    /// The state on `B_m` at the finest spacing `dx` (`2^m N + 1` samples).
    ///
    /// Ring `m` is refined by trigonometric interpolation of the scale-m
    /// field; the inner box is then overwritten with the recursively refined
    /// finer data, so nothing already resolved is smoothed away.
    pub fn to_dense(&self, m: usize) -> Result<Vec<Complex64>> {
        self.grid.check_scale(m)?;
        if m == 0 {
            return Ok(self.rings[0].clone());
        }
        let n = self.grid.n();
        let field = self.to_scale_field(m)?;
        let factor = 1usize << m;
        let mut dense = fourier_refine(&field.values[..n], factor);
        dense.push(dense[0]);
        let inner = self.to_dense(m - 1)?;
        // B_(m-1) starts a quarter of the way into B_m.
        let offset = factor * n / 4;
        dense[offset..offset + inner.len()].copy_from_slice(&inner);
        Ok(dense)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::from_samples(512, 0.1, 2, 1e-4).unwrap()
    }

    #[test]
    fn zero_state_has_zero_norm() {
        assert_eq!(MultiscaleState::zeros(&grid()).norm(), 0.0);
    }

    #[test]
    fn single_sample_norm_is_root_spacing() {
        let g = GridSpec::from_samples(1024, 0.1, 1, 1e-8).unwrap();
        let mut s = MultiscaleState::zeros(&g);
        s.ring_mut(0)[512] = Complex64::new(0.0, 1.0);
        assert!((s.norm() - 0.1f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn round_trip_on_finest_scale_is_exact() {
        let g = grid();
        let s = MultiscaleState::from_fn(&g, |x| Complex64::new(x.sin(), x * 0.1));
        let f = s.to_scale_field(0).unwrap();
        let mut t = MultiscaleState::zeros(&g);
        t.from_scale_field(&f).unwrap();
        assert_eq!(t.ring(0), s.ring(0));
    }

    #[test]
    fn constant_state_gives_constant_fields() {
        let g = grid();
        let c = Complex64::new(0.5, -2.0);
        let s = MultiscaleState::from_fn(&g, |_| c);
        for m in 0..=g.scales() {
            let f = s.to_scale_field(m).unwrap();
            assert!(f.values.iter().all(|&z| z == c));
        }
        assert!(s.to_dense(2).unwrap().iter().all(|z| (z - c).norm() < 1e-12));
    }

    #[test]
    fn scale_field_positions_match_rings() {
        let g = grid();
        let s = MultiscaleState::from_fn(&g, |x| Complex64::new(x, 0.0));
        for m in 0..=g.scales() {
            let f = s.to_scale_field(m).unwrap();
            for (j, z) in f.values.iter().enumerate() {
                assert!((z.re - g.box_abscissa(m, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn write_back_touches_only_owned_ring() {
        let g = grid();
        let s = MultiscaleState::from_fn(&g, |x| Complex64::new(x, 1.0));
        let mut t = s.clone();
        let mut f = s.to_scale_field(1).unwrap();
        f.values.iter_mut().for_each(|z| *z = Complex64::new(9.0, 9.0));
        t.from_scale_field(&f).unwrap();
        assert_eq!(t.ring(0), s.ring(0));
        assert_eq!(t.ring(2), s.ring(2));
        assert!(t.ring(1).iter().all(|z| z.re == 9.0));
    }

    #[test]
    fn bad_scale_is_rejected() {
        let s = MultiscaleState::zeros(&grid());
        assert!(matches!(
            s.to_scale_field(3),
            Err(Error::ScaleOutOfRange { m: 3, max: 2 })
        ));
    }
}
