//! Computational domain and spectral operators.
//!
//! The unbounded domain is replaced by a periodic box `[-L1,L1) × [-L2,L2)
//! × [-L3,L3)`; states of interest must decay below ~1e-10 at the boundary
//! for the box to stand in for free space. The discrete transform follows
//! the convention `û(ξ) = ∫ u e^{-iξ·x} dx`: the forward transform carries
//! the cell volume dV, the inverse carries dΞ/(2π)³, so sums over the
//! frequency lattice approximate continuum integrals directly and the
//! dipolar multiplier keeps its textbook constants.
//!
//! The dipole axis is x3: the kernel is `K(x) = (x1²+x2²-2x3²)/|x|⁵` with
//! Fourier multiplier `K̂(ξ) = (4π/3)(2ξ3²-ξ1²-ξ2²)/|ξ|² ∈ [-4π/3, 8π/3]`.
//! The ξ = 0 entry is set to 0 (the mean of K̂ over directions); the only
//! effect is a shift of the interaction functional proportional to the
//! squared mass of the density's zero mode.

mod fft;

pub use fft::{Direction, Fft3};

use crate::error::{Error, Result};
use crate::numerics::{sum_norm_sqr, Accumulator};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

/// Fourier multiplier coefficient 4π/3; the multiplier range is `[-KDD, 2·KDD]`.
pub const KDD: f64 = 4.0 * PI / 3.0;

/// Periodic computational box with its sample and frequency lattices.
#[derive(Debug)]
pub struct Grid {
    n: [usize; 3],
    half_len: [f64; 3],
    spacing: [f64; 3],
    dv: f64,
    dxi: [f64; 3],
}

impl Grid {
    /// Builds a grid with `n[i]` points on `[-half_len[i], half_len[i])`.
    ///
    /// Point counts must be even and at least 8 so the frequency lattice
    /// `{π k / L : k = -n/2 .. n/2-1}` is symmetric and transform-friendly.
    pub fn new(n: [usize; 3], half_len: [f64; 3]) -> Result<Arc<Grid>> {
        for i in 0..3 {
            if n[i] < 8 || n[i] % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "points per axis must be even and >= 8, got n[{i}] = {}",
                    n[i]
                )));
            }
            if !(half_len[i] > 0.0 && half_len[i].is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "half-length must be positive and finite, got L[{i}] = {}",
                    half_len[i]
                )));
            }
        }
        let spacing = [
            2.0 * half_len[0] / n[0] as f64,
            2.0 * half_len[1] / n[1] as f64,
            2.0 * half_len[2] / n[2] as f64,
        ];
        let dv = spacing[0] * spacing[1] * spacing[2];
        let dxi = [
            PI / half_len[0],
            PI / half_len[1],
            PI / half_len[2],
        ];
        Ok(Arc::new(Grid {
            n,
            half_len,
            spacing,
            dv,
            dxi,
        }))
    }

    /// Cubic helper: same point count and half-length on all axes.
    pub fn cubic(n: usize, half_len: f64) -> Result<Arc<Grid>> {
        Grid::new([n; 3], [half_len; 3])
    }

    pub fn points(&self) -> [usize; 3] {
        self.n
    }

    pub fn half_lengths(&self) -> [f64; 3] {
        self.half_len
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    /// Total number of lattice sites.
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Real-space cell volume dV.
    pub fn cell_volume(&self) -> f64 {
        self.dv
    }

    /// Frequency-space cell volume dΞ.
    pub fn freq_cell_volume(&self) -> f64 {
        self.dxi[0] * self.dxi[1] * self.dxi[2]
    }

    /// Sample coordinate along `axis` at lattice index `i`.
    #[inline]
    pub fn position(&self, axis: usize, i: usize) -> f64 {
        -self.half_len[axis] + i as f64 * self.spacing[axis]
    }

    /// Frequency along `axis` at FFT-ordered index `i`
    /// (indices above n/2 wrap to negative frequencies).
    #[inline]
    pub fn frequency(&self, axis: usize, i: usize) -> f64 {
        let n = self.n[axis];
        let k = if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        };
        self.dxi[axis] * k as f64
    }

    /// Largest frequency magnitude representable along `axis`.
    pub fn nyquist(&self, axis: usize) -> f64 {
        self.dxi[axis] * (self.n[axis] / 2) as f64
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize, i3: usize) -> usize {
        (i1 * self.n[1] + i2) * self.n[2] + i3
    }

    /// Structural equality: same lattice, same box.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n && self.half_len == other.half_len
    }
}

fn check_same_grid(a: &Grid, b: &Grid, what: &str) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "{what}: {:?}/{:?} vs {:?}/{:?}",
            a.n, a.half_len, b.n, b.half_len
        )))
    }
}

/// Complex state sampled on a [`Grid`], row-major with x3 fastest.
#[derive(Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("points", &self.grid.n)
            .field("half_lengths", &self.grid.half_len)
            .finish_non_exhaustive()
    }
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>) -> Field {
        Field {
            grid: grid.clone(),
            values: vec![Complex64::default(); grid.len()],
        }
    }

    /// Wraps an existing value vector; the length must match the grid.
    pub fn from_values(grid: &Arc<Grid>, values: Vec<Complex64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "value vector has {} entries, grid has {} sites",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field {
            grid: grid.clone(),
            values,
        })
    }

    /// Samples a complex-valued function of position.
    pub fn sample<F>(grid: &Arc<Grid>, f: F) -> Field
    where
        F: Fn([f64; 3]) -> Complex64 + Sync,
    {
        let mut field = Field::zeros(grid);
        let [_, n2, n3] = grid.n;
        field
            .values
            .par_chunks_mut(n2 * n3)
            .enumerate()
            .for_each(|(i1, slab)| {
                let x1 = grid.position(0, i1);
                for i2 in 0..n2 {
                    let x2 = grid.position(1, i2);
                    for i3 in 0..n3 {
                        slab[i2 * n3 + i3] = f([x1, x2, grid.position(2, i3)]);
                    }
                }
            });
        field
    }

    /// Samples a real-valued function of position.
    pub fn sample_real<F>(grid: &Arc<Grid>, f: F) -> Field
    where
        F: Fn([f64; 3]) -> f64 + Sync,
    {
        Field::sample(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Arc<Grid> {
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

    /// Discrete `‖u‖₂² = Σ |u|² dV`.
    pub fn l2_norm_sqr(&self) -> f64 {
        sum_norm_sqr(&self.values) * self.grid.dv
    }

    /// Multiplies the field by a real scalar.
    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// Rescales to the requested `‖u‖₂²`; errors on the zero field.
    pub fn normalize_mass(&mut self, mass: f64) -> Result<()> {
        let m = self.l2_norm_sqr();
        if m <= 0.0 || !m.is_finite() {
            return Err(Error::Domain(
                "cannot normalize a zero or non-finite field".into(),
            ));
        }
        self.scale((mass / m).sqrt());
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn check_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { what })
        }
    }
}

/// Transform-side counterpart of [`Field`]: coefficients on the frequency
/// lattice in FFT index order, continuum normalization.
#[derive(Clone)]
pub struct SpectralField {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl SpectralField {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Coefficient at signed frequency index `(k1, k2, k3)`.
    pub fn at_mode(&self, k: [i64; 3]) -> Complex64 {
        let idx = |axis: usize, kk: i64| -> usize {
            let n = self.grid.n[axis] as i64;
            (kk.rem_euclid(n)) as usize
        };
        self.values[self.grid.index(idx(0, k[0]), idx(1, k[1]), idx(2, k[2]))]
    }

    /// Plancherel mass `(2π)^{-3} Σ |û|² dΞ`.
    pub fn l2_norm_sqr(&self) -> f64 {
        sum_norm_sqr(&self.values) * self.grid.freq_cell_volume() / (2.0 * PI).powi(3)
    }
}

/// The dipolar Fourier multiplier tabulated on the frequency lattice.
pub struct DipolarMultiplier {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl DipolarMultiplier {
    pub fn new(grid: &Arc<Grid>) -> DipolarMultiplier {
        let [n1, n2, n3] = grid.n;
        let mut values = vec![0.0; grid.len()];
        values
            .par_chunks_mut(n2 * n3)
            .enumerate()
            .for_each(|(i1, slab)| {
                let x1 = grid.frequency(0, i1);
                for i2 in 0..n2 {
                    let x2 = grid.frequency(1, i2);
                    let perp = x1 * x1 + x2 * x2;
                    for i3 in 0..n3 {
                        let x3 = grid.frequency(2, i3);
                        let axial = x3 * x3;
                        let denom = perp + axial;
                        slab[i2 * n3 + i3] = if denom == 0.0 {
                            0.0
                        } else {
                            KDD * (2.0 * axial - perp) / denom
                        };
                    }
                }
            });
        let _ = n1;
        DipolarMultiplier {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Exact range of the continuum multiplier, `[-4π/3, 8π/3]`.
    pub fn bounds() -> (f64, f64) {
        (-KDD, 2.0 * KDD)
    }
}

/// Reusable transform engine: per-axis FFT plans plus the tabulated
/// dipolar multiplier and |ξ|² tables for one grid.
///
/// Immutable after construction and safe to share across threads; each
/// call allocates its own scratch.
pub struct SpectralEngine {
    grid: Arc<Grid>,
    fft: Fft3,
    multiplier: DipolarMultiplier,
    xi_sqr: Vec<f64>,
}

impl SpectralEngine {
    pub fn new(grid: &Arc<Grid>) -> SpectralEngine {
        let [_, n2, n3] = grid.n;
        let mut xi_sqr = vec![0.0; grid.len()];
        xi_sqr
            .par_chunks_mut(n2 * n3)
            .enumerate()
            .for_each(|(i1, slab)| {
                let f1 = grid.frequency(0, i1);
                for i2 in 0..n2 {
                    let f2 = grid.frequency(1, i2);
                    for i3 in 0..n3 {
                        let f3 = grid.frequency(2, i3);
                        slab[i2 * n3 + i3] = f1 * f1 + f2 * f2 + f3 * f3;
                    }
                }
            });
        SpectralEngine {
            grid: grid.clone(),
            fft: Fft3::new(grid.n),
            multiplier: DipolarMultiplier::new(grid),
            xi_sqr,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn multiplier(&self) -> &DipolarMultiplier {
        &self.multiplier
    }

    /// |ξ|² over the frequency lattice, FFT index order.
    pub fn xi_sqr(&self) -> &[f64] {
        &self.xi_sqr
    }

    /// In-place checkerboard sign `(-1)^{i1+i2+i3}` times `scale`.
    ///
    /// This is the phase factor translating between FFT index order and
    /// the physical box `[-L, L)`; identical on both transform directions
    /// because the point counts are even.
    fn checkerboard_scale(&self, values: &mut [Complex64], scale: f64) {
        let [_, n2, n3] = self.grid.n;
        values
            .par_chunks_mut(n2 * n3)
            .enumerate()
            .for_each(|(i1, slab)| {
                for i2 in 0..n2 {
                    let row_sign = if (i1 + i2) % 2 == 0 { scale } else { -scale };
                    let row = &mut slab[i2 * n3..(i2 + 1) * n3];
                    let mut s = row_sign;
                    for v in row.iter_mut() {
                        *v *= s;
                        s = -s;
                    }
                }
            });
    }

    /// `û(ξ) = Σ u(x) e^{-iξ·x} dV` on the frequency lattice.
    pub fn forward(&self, u: &Field) -> Result<SpectralField> {
        check_same_grid(&self.grid, &u.grid, "forward transform")?;
        u.check_finite("forward transform input")?;
        let mut values = u.values.clone();
        self.fft.process(&mut values, Direction::Forward);
        self.checkerboard_scale(&mut values, self.grid.dv);
        Ok(SpectralField {
            grid: self.grid.clone(),
            values,
        })
    }

    /// `u(x) = (2π)^{-3} Σ û(ξ) e^{iξ·x} dΞ` back on the sample lattice.
    pub fn inverse(&self, su: &SpectralField) -> Result<Field> {
        check_same_grid(&self.grid, &su.grid, "inverse transform")?;
        let mut values = su.values.clone();
        self.inverse_in_place(&mut values);
        let out = Field {
            grid: self.grid.clone(),
            values,
        };
        out.check_finite("inverse transform output")?;
        Ok(out)
    }

    /// Inverse transform of raw coefficients, consuming the buffer.
    pub(crate) fn inverse_in_place(&self, values: &mut [Complex64]) {
        let scale = self.grid.freq_cell_volume() / (2.0 * PI).powi(3);
        self.checkerboard_scale(values, scale);
        self.fft.process(values, Direction::Inverse);
    }

    /// Spectral Laplacian: multiplier −|ξ|².
    pub fn laplacian(&self, u: &Field) -> Result<Field> {
        let mut su = self.forward(u)?;
        for (v, &k2) in su.values.iter_mut().zip(&self.xi_sqr) {
            *v *= -k2;
        }
        let out = self.inverse(&su)?;
        out.check_finite("laplacian output")?;
        Ok(out)
    }

    /// Nonlocal convolution `K * ρ` for a real density ρ, via `K̂ · ρ̂`.
    ///
    /// The input must be real-valued (the imaginary part is checked
    /// against a 1e-12 relative bound); since K̂ is real and even the
    /// output is real to the same tolerance and is returned with the
    /// imaginary residue dropped.
    pub fn dipolar_convolve(&self, rho: &Field) -> Result<Field> {
        check_same_grid(&self.grid, &rho.grid, "dipolar convolution")?;
        let re_scale = rho
            .values
            .iter()
            .fold(0.0f64, |m, z| m.max(z.re.abs()))
            .max(f64::MIN_POSITIVE);
        let im_max = rho.values.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
        if im_max > 1e-12 * re_scale {
            return Err(Error::Domain(format!(
                "dipolar convolution expects a real density; imaginary magnitude {:.3e} vs real {:.3e}",
                im_max, re_scale
            )));
        }
        let mut su = self.forward(rho)?;
        for (v, &m) in su.values.iter_mut().zip(&self.multiplier.values) {
            *v *= m;
        }
        let mut out = self.inverse(&su)?;
        let out_re = out
            .values
            .iter()
            .fold(0.0f64, |m, z| m.max(z.re.abs()))
            .max(f64::MIN_POSITIVE);
        let out_im = out.values.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
        if out_im > 1e-10 * out_re {
            return Err(Error::NonFinite {
                what: "dipolar convolution imaginary residue",
            });
        }
        for v in &mut out.values {
            v.im = 0.0;
        }
        Ok(out)
    }

    /// Kinetic functional `A(u) = (2π)^{-3} Σ |ξ|² |û|² dΞ` from coefficients.
    pub fn kinetic_from_spectrum(&self, su: &SpectralField) -> f64 {
        let mut acc = Accumulator::new();
        for (v, &k2) in su.values.iter().zip(&self.xi_sqr) {
            acc.add(k2 * v.norm_sqr());
        }
        acc.value() * self.grid.freq_cell_volume() / (2.0 * PI).powi(3)
    }
}

/// One-shot forward transform (plans are rebuilt; use [`SpectralEngine`]
/// when transforming repeatedly on one grid).
pub fn forward_transform(u: &Field) -> Result<SpectralField> {
    SpectralEngine::new(u.grid()).forward(u)
}

/// One-shot inverse transform.
pub fn inverse_transform(su: &SpectralField) -> Result<Field> {
    SpectralEngine::new(su.grid()).inverse(su)
}

/// One-shot spectral Laplacian.
pub fn laplacian(u: &Field) -> Result<Field> {
    SpectralEngine::new(u.grid()).laplacian(u)
}

/// One-shot dipolar convolution `K * ρ`.
pub fn dipolar_convolve(rho: &Field) -> Result<Field> {
    SpectralEngine::new(rho.grid()).dipolar_convolve(rho)
}

#[cfg(test)]
mod tests;
