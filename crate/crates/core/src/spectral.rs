//! Discrete Fourier machinery on periodic boxes `[-L, L)^n` standing in for
//! `R^n`.
//!
//! Normalization: the forward transform carries the cell volume `h^n` and the
//! phase of the box origin, so that
//!
//! ```text
//! f^(xi_k) = h^n * sum_j f(x_j) exp(-i xi_k . x_j),   xi_k = pi k / L,
//! ```
//!
//! approximates the continuous transform `int f(x) exp(-i x.xi) dx`. The
//! matching Plancherel identity is
//! `h^n sum_j |f_j|^2 = (2L)^(-n) sum_k |f^_k|^2`.

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::exec;

/// Largest supported space dimension.
pub const MAX_DIM: usize = 3;

/// Environment variable holding the grid allocation budget in bytes.
pub const GRID_BUDGET_ENV: &str = "DAMPGAP_GRID_BUDGET_BYTES";

const DEFAULT_BUDGET: u128 = 4 << 30;

/// Allocation budget from the environment, 4 GiB when unset.
pub fn grid_budget() -> u128 {
    std::env::var(GRID_BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u128>().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

/// Tensor lattice with `points` samples per axis on `[-L, L)^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    points: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, points: usize, half_width: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::param("dim", format!("must be in 1..={MAX_DIM}, got {dim}")));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::param(
                "points_per_axis",
                format!("must be a power of two >= 4, got {points}"),
            ));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::param("half_width", format!("must be positive, got {half_width}")));
        }
        let len = (points as u128).pow(dim as u32);
        // two complex buffers are live during a transform
        let bytes = len * 2 * std::mem::size_of::<Complex64>() as u128;
        let budget = grid_budget();
        if bytes > budget {
            return Err(Error::MemoryBudget {
                points: len as usize,
                bytes,
                budget,
            });
        }
        Ok(Self {
            dim,
            points,
            half_width,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Total number of lattice points, `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Box volume `(2L)^n`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Spacing of the frequency lattice, `pi / L`.
    pub fn frequency_step(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// Per-axis indices of a flat (row-major) index.
    pub fn unravel(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for d in (0..self.dim).rev() {
            out[d] = idx % self.points;
            idx /= self.points;
        }
        out
    }

    pub fn ravel(&self, axes: &[usize]) -> usize {
        axes.iter().take(self.dim).fold(0, |acc, &i| acc * self.points + i)
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    /// Signed frequency index `k` in `{-N/2, ..., N/2 - 1}` of FFT slot `i`.
    pub fn signed_index(&self, i: usize) -> i64 {
        let n = self.points as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        self.signed_index(i) as f64 * self.frequency_step()
    }

    pub fn point(&self, idx: usize) -> [f64; MAX_DIM] {
        let axes = self.unravel(idx);
        let mut x = [0.0; MAX_DIM];
        for d in 0..self.dim {
            x[d] = self.coordinate(axes[d]);
        }
        x
    }

    pub fn frequency(&self, idx: usize) -> [f64; MAX_DIM] {
        let axes = self.unravel(idx);
        let mut xi = [0.0; MAX_DIM];
        for d in 0..self.dim {
            xi[d] = self.wavenumber(axes[d]);
        }
        xi
    }

    /// `|xi|` at a flat spectral index.
    pub fn frequency_norm(&self, idx: usize) -> f64 {
        self.frequency(idx).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute signed frequency index over the axes at a flat index.
    pub fn max_axis_index(&self, idx: usize) -> usize {
        let axes = self.unravel(idx);
        (0..self.dim)
            .map(|d| self.signed_index(axes[d]).unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Samples a real function at every lattice point.
    pub fn sample<F>(&self, f: F) -> PhysicalField
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let dim = self.dim;
        let values = exec::map_indexed(self.len(), |idx| {
            let x = self.point(idx);
            Complex64::new(f(&x[..dim]), 0.0)
        });
        PhysicalField { grid: *self, values }
    }

    pub fn sample_complex<F>(&self, f: F) -> PhysicalField
    where
        F: Fn(&[f64]) -> Complex64 + Sync + Send,
    {
        let dim = self.dim;
        let values = exec::map_indexed(self.len(), |idx| {
            let x = self.point(idx);
            f(&x[..dim])
        });
        PhysicalField { grid: *self, values }
    }
}

/// Lattice function in space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: Grid,
    values: Vec<Complex64>,
}

/// Lattice function in frequency, in FFT slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

fn check_len(grid: &Grid, len: usize) -> Result<()> {
    if grid.len() != len {
        return Err(Error::GridMismatch(format!(
            "{} values for a grid of {} points",
            len,
            grid.len()
        )));
    }
    Ok(())
}

fn first_non_finite(values: &[Complex64]) -> Option<usize> {
    values.iter().position(|c| !(c.re.is_finite() && c.im.is_finite()))
}

impl PhysicalField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        check_len(&grid, values.len())?;
        Ok(Self {
            grid,
            values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.re).collect()
    }

    pub fn is_finite(&self) -> bool {
        first_non_finite(&self.values).is_none()
    }

    pub fn max_abs(&self) -> f64 {
        exec::max_by(&self.values, |c| c.norm())
    }

    pub fn max_imag(&self) -> f64 {
        exec::max_by(&self.values, |c| c.im.abs())
    }

    pub fn scale(&mut self, factor: f64) {
        exec::for_each_indexed_mut(&mut self.values, |_, c| *c *= factor);
    }

    /// Pointwise product (no conjugation).
    pub fn mul(&self, other: &PhysicalField) -> Result<PhysicalField> {
        same_grid(&self.grid, &other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(PhysicalField {
            grid: self.grid,
            values,
        })
    }

    /// Riemann sum `h^n sum_j f_j` approximating the integral over the box.
    /// Subtracts the box average, leaving the zero Fourier mode empty.
    pub fn remove_mean(&mut self) {
        let mean = self.integral() / self.grid.volume();
        for v in &mut self.values {
            *v -= mean;
        }
    }

    pub fn integral(&self) -> Complex64 {
        let re = exec::sum_indexed(&self.values, |_, c| c.re);
        let im = exec::sum_indexed(&self.values, |_, c| c.im);
        Complex64::new(re, im) * self.grid.cell_volume()
    }
}

impl SpectralField {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, coeffs.len())?;
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        first_non_finite(&self.coeffs).is_none()
    }

    /// Multiplies each coefficient by `symbol(|xi|)`.
    pub fn apply_radial<F>(&self, symbol: F) -> SpectralField
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let grid = self.grid;
        let mut out = self.clone();
        exec::for_each_indexed_mut(&mut out.coeffs, |idx, c| {
            *c *= symbol(grid.frequency_norm(idx));
        });
        out
    }

    /// `((2L)^-n sum |xi|^(2s) |c|^2)^(1/2)`: the `H^s` seminorm of the
    /// underlying field; `s = 0` gives the L2 norm.
    pub fn seminorm(&self, s: f64) -> f64 {
        let grid = self.grid;
        let sum = exec::sum_indexed(&self.coeffs, |idx, c| {
            fractional_symbol(grid.frequency_norm(idx), s) * c.norm_sqr()
        });
        (sum / grid.volume()).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.seminorm(0.0)
    }
}

fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

/// `|xi|^(2s)` with the convention `0^(2s) = 0` for `s > 0` and `1` for `s = 0`.
pub fn fractional_symbol(r: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else if r == 0.0 {
        0.0
    } else {
        r.powf(2.0 * s)
    }
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().unwrap_or_else(|e| e.into_inner());
    if forward {
        p.plan_fft_forward(len)
    } else {
        p.plan_fft_inverse(len)
    }
}

fn run_lines(buf: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    let lines_per_chunk = (16_384 / n).max(1);
    exec::for_each_chunk_mut(buf, n * lines_per_chunk, |_, chunk| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
}

fn transform_axis(data: &mut [Complex64], grid: &Grid, axis: usize, fft: &Arc<dyn Fft<f64>>) {
    let n = grid.points();
    let stride = n.pow((grid.dim() - 1 - axis) as u32);
    if stride == 1 {
        run_lines(data, n, fft);
        return;
    }
    let block = n * stride;
    let mut buf = vec![Complex64::new(0.0, 0.0); data.len()];
    {
        let src = &*data;
        exec::for_each_indexed_mut(&mut buf, |li, x| {
            let (line, j) = (li / n, li % n);
            let (outer, inner) = (line / stride, line % stride);
            *x = src[outer * block + j * stride + inner];
        });
    }
    run_lines(&mut buf, n, fft);
    exec::for_each_indexed_mut(data, |idx, x| {
        let (outer, rem) = (idx / block, idx % block);
        let (j, inner) = (rem / stride, rem % stride);
        *x = buf[(outer * stride + inner) * n + j];
    });
}

fn parity_sign(grid: &Grid, idx: usize) -> f64 {
    let axes = grid.unravel(idx);
    let s: usize = axes.iter().take(grid.dim()).sum();
    if s.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn fft_nd(data: &mut [Complex64], grid: &Grid, forward: bool) {
    let fft = plan(grid.points(), forward);
    for axis in 0..grid.dim() {
        transform_axis(data, grid, axis, &fft);
    }
}

/// Space-to-frequency transform under the module normalization.
pub fn forward_transform(f: &PhysicalField) -> Result<SpectralField> {
    if let Some(index) = first_non_finite(&f.values) {
        return Err(Error::NonFinite {
            context: "forward_transform input",
            index,
        });
    }
    let grid = f.grid;
    let mut coeffs = f.values.clone();
    fft_nd(&mut coeffs, &grid, true);
    let h = grid.cell_volume();
    exec::for_each_indexed_mut(&mut coeffs, |idx, c| *c *= h * parity_sign(&grid, idx));
    Ok(SpectralField { grid, coeffs })
}

/// Frequency-to-space transform, inverse of [`forward_transform`].
pub fn inverse_transform(f: &SpectralField) -> Result<PhysicalField> {
    if let Some(index) = first_non_finite(&f.coeffs) {
        return Err(Error::NonFinite {
            context: "inverse_transform input",
            index,
        });
    }
    let grid = f.grid;
    let mut values = f.coeffs.clone();
    let norm = 1.0 / (grid.cell_volume() * grid.len() as f64);
    exec::for_each_indexed_mut(&mut values, |idx, c| *c *= norm * parity_sign(&grid, idx));
    fft_nd(&mut values, &grid, false);
    Ok(PhysicalField { grid, values })
}

fn check_order(s: f64) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::param("s", format!("fractional order must be >= 0, got {s}")));
    }
    Ok(())
}

/// Applies `(-Delta)^s`, i.e. multiplies by `|xi|^(2s)`.
pub fn apply_fractional_laplacian(f: &SpectralField, s: f64) -> Result<SpectralField> {
    check_order(s)?;
    Ok(f.apply_radial(|r| fractional_symbol(r, s)))
}

/// `(-Delta)^s` of a physical field, returned in physical space.
pub fn fractional_laplacian_physical(f: &PhysicalField, s: f64) -> Result<PhysicalField> {
    let spec = apply_fractional_laplacian(&forward_transform(f)?, s)?;
    inverse_transform(&spec)
}

/// `||(-Delta)^(s/2) f||_L2`, computed spectrally.
pub fn sobolev_seminorm(f: &PhysicalField, s: f64) -> Result<f64> {
    check_order(s)?;
    Ok(forward_transform(f)?.seminorm(s))
}

/// Lattice Riemann-sum L^q norm; `q = f64::INFINITY` gives the max modulus.
pub fn lp_norm(f: &PhysicalField, q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::param("q", format!("must be >= 1, got {q}")));
    }
    if let Some(index) = first_non_finite(&f.values) {
        return Err(Error::NonFinite {
            context: "lp_norm input",
            index,
        });
    }
    if q.is_infinite() {
        return Ok(f.max_abs());
    }
    let sum = if q == 2.0 {
        exec::sum_indexed(&f.values, |_, c| c.norm_sqr())
    } else {
        exec::sum_indexed(&f.values, |_, c| c.norm().powf(q))
    };
    Ok((sum * f.grid.cell_volume()).powf(1.0 / q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1, 6, 1.0).is_err());
        assert!(Grid::new(1, 2, 1.0).is_err());
        assert!(Grid::new(4, 8, 1.0).is_err());
        assert!(Grid::new(1, 8, 0.0).is_err());
        let g = Grid::new(2, 8, 4.0).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.signed_index(4), -4);
        assert_eq!(g.ravel(&g.unravel(37)), 37);
    }

    #[test]
    fn constant_field_concentrates_at_zero() {
        let g = Grid::new(2, 16, 3.0).unwrap();
        let f = g.sample(|_| 1.0);
        let s = forward_transform(&f).unwrap();
        assert!((s.coeffs()[0] - Complex64::new(g.volume(), 0.0)).norm() < 1e-12);
        assert!(s.coeffs()[1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn pure_mode_single_coefficient() {
        let g = Grid::new(1, 32, 2.5).unwrap();
        let f = g.sample_complex(|x| Complex64::from_polar(1.0, PI * x[0] / 2.5));
        let s = forward_transform(&f).unwrap();
        for (i, c) in s.coeffs().iter().enumerate() {
            if i == 1 {
                assert!((c.norm() - 5.0).abs() < 1e-12);
            } else {
                assert!(c.norm() < 1e-12, "slot {i}: {c}");
            }
        }
    }

    #[test]
    fn pure_mode_l2_is_amplitude_times_box() {
        let g = Grid::new(2, 16, 1.5).unwrap();
        let a = 0.7;
        let f = g.sample_complex(|x| Complex64::from_polar(a, PI * (x[0] - 2.0 * x[1]) / 1.5));
        let n0 = sobolev_seminorm(&f, 0.0).unwrap();
        assert!((n0 - a * 3.0).abs() < 1e-12);
    }

    #[test]
    fn fractional_laplacian_pure_mode() {
        // |xi| = 2 when L = pi: k = 2
        let g = Grid::new(1, 16, PI).unwrap();
        let f = g.sample_complex(|x| Complex64::from_polar(1.0, 2.0 * x[0]));
        let lf = fractional_laplacian_physical(&f, 1.0).unwrap();
        for (a, b) in lf.values().iter().zip(f.values()) {
            assert!((a - 4.0 * b).norm() < 1e-12);
        }
        let id = fractional_laplacian_physical(&f, 0.0).unwrap();
        for (a, b) in id.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn zero_mode_convention() {
        assert_eq!(fractional_symbol(0.0, 0.0), 1.0);
        assert_eq!(fractional_symbol(0.0, 0.3), 0.0);
        assert_eq!(fractional_symbol(2.0, 1.0), 4.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let mut f = g.sample(|_| 0.0);
        assert!(lp_norm(&f, 0.5).is_err());
        assert!(sobolev_seminorm(&f, -1.0).is_err());
        assert_eq!(lp_norm(&f, 3.0).unwrap(), 0.0);
        assert_eq!(sobolev_seminorm(&f, 1.0).unwrap(), 0.0);
        f.values_mut()[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            forward_transform(&f),
            Err(Error::NonFinite { index: 3, .. })
        ));
    }

    #[test]
    fn indicator_l1_is_measure() {
        let g = Grid::new(1, 256, 8.0).unwrap();
        let f = g.sample(|x| if x[0].abs() < 1.5 { 1.0 } else { 0.0 });
        let m = lp_norm(&f, 1.0).unwrap();
        assert!((m - 3.0).abs() <= g.spacing());
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 1.0);
    }
}
