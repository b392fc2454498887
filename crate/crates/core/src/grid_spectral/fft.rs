//! Three-dimensional FFT built from per-axis rustfft plans.
//!
//! Data layout is row-major `(i1, i2, i3)` with `i3` fastest. Axis 3 is
//! transformed in place on contiguous lines, axis 2 by strided
//! gather/scatter inside each `i1` slab, axis 1 through a transpose
//! scratch buffer so the lines become contiguous. Line transforms are
//! independent, so parallelising them with rayon cannot change results.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

pub struct Fft3 {
    n: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Fft3 {
    pub fn new(n: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = [
            planner.plan_fft(n[0], FftDirection::Forward),
            planner.plan_fft(n[1], FftDirection::Forward),
            planner.plan_fft(n[2], FftDirection::Forward),
        ];
        let inverse = [
            planner.plan_fft(n[0], FftDirection::Inverse),
            planner.plan_fft(n[1], FftDirection::Inverse),
            planner.plan_fft(n[2], FftDirection::Inverse),
        ];
        Self {
            n,
            forward,
            inverse,
        }
    }

    /// Unnormalized separable 3D transform, all axes.
    pub fn process(&self, values: &mut [Complex64], dir: Direction) {
        debug_assert_eq!(values.len(), self.n[0] * self.n[1] * self.n[2]);
        self.process_axis2(values, dir);
        self.process_axis1(values, dir);
        self.process_axis0(values, dir);
    }

    fn plan(&self, axis: usize, dir: Direction) -> &Arc<dyn Fft<f64>> {
        match dir {
            Direction::Forward => &self.forward[axis],
            Direction::Inverse => &self.inverse[axis],
        }
    }

    fn process_axis2(&self, values: &mut [Complex64], dir: Direction) {
        let n3 = self.n[2];
        let plan = self.plan(2, dir);
        values.par_chunks_mut(n3).for_each_init(
            || vec![Complex64::default(); plan.get_inplace_scratch_len()],
            |scratch, line| plan.process_with_scratch(line, scratch),
        );
    }

    fn process_axis1(&self, values: &mut [Complex64], dir: Direction) {
        let (n2, n3) = (self.n[1], self.n[2]);
        let plan = self.plan(1, dir);
        values.par_chunks_mut(n2 * n3).for_each_init(
            || {
                (
                    vec![Complex64::default(); n2],
                    vec![Complex64::default(); plan.get_inplace_scratch_len()],
                )
            },
            |(line, scratch), slab| {
                for i3 in 0..n3 {
                    for i2 in 0..n2 {
                        line[i2] = slab[i2 * n3 + i3];
                    }
                    plan.process_with_scratch(line, scratch);
                    for i2 in 0..n2 {
                        slab[i2 * n3 + i3] = line[i2];
                    }
                }
            },
        );
    }

    fn process_axis0(&self, values: &mut [Complex64], dir: Direction) {
        let (n1, n23) = (self.n[0], self.n[1] * self.n[2]);
        let plan = self.plan(0, dir);
        // Transpose so axis-1 lines become contiguous rows of length n1.
        let mut scratch = vec![Complex64::default(); values.len()];
        scratch
            .par_chunks_mut(n1)
            .enumerate()
            .for_each(|(r, row)| {
                for (i1, slot) in row.iter_mut().enumerate() {
                    *slot = values[i1 * n23 + r];
                }
            });
        scratch.par_chunks_mut(n1).for_each_init(
            || vec![Complex64::default(); plan.get_inplace_scratch_len()],
            |s, line| plan.process_with_scratch(line, s),
        );
        values
            .par_chunks_mut(n23)
            .enumerate()
            .for_each(|(i1, slab)| {
                for (r, slot) in slab.iter_mut().enumerate() {
                    *slot = scratch[r * n1 + i1];
                }
            });
    }
}
