//! Monotone lookup tables with linear interpolation.
//!
//! Used for the atmospheric transmissivity grid, elevation-dependent
//! radiance data, and the memoised diffraction-loss grid. Queries at a
//! grid node return the tabulated value exactly; queries between nodes
//! interpolate linearly; extrapolation is an error.

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone)]
pub struct LinearTable<T> {
    xs: Vec<T>,
    ys: Vec<T>,
}

impl<T: Real> LinearTable<T> {
    pub fn new(xs: Vec<T>, ys: Vec<T>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Table(format!(
                "grid has {} abscissae but {} values",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::Table("grid needs at least two points".into()));
        }
        for pair in xs.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::Table(format!(
                    "grid must be strictly increasing, found {:?} then {:?}",
                    pair[0], pair[1]
                )));
            }
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Table("grid contains non-finite entries".into()));
        }
        Ok(Self { xs, ys })
    }

    pub fn min_x(&self) -> T {
        self.xs[0]
    }

    pub fn max_x(&self) -> T {
        *self.xs.last().unwrap()
    }

    pub fn xs(&self) -> &[T] {
        &self.xs
    }

    pub fn ys(&self) -> &[T] {
        &self.ys
    }

    pub fn eval(&self, x: T) -> Result<T> {
        if !(x >= self.min_x() && x <= self.max_x()) {
            return Err(Error::InvalidInput(format!(
                "lookup at {x} outside table range [{}, {}]",
                self.min_x(),
                self.max_x()
            )));
        }
        // partition_point gives the first index with xs[i] > x.
        let hi = self.xs.partition_point(|&v| v <= x);
        if hi == 0 {
            return Ok(self.ys[0]);
        }
        let lo = hi - 1;
        if self.xs[lo] == x {
            return Ok(self.ys[lo]);
        }
        let x0 = self.xs[lo];
        let x1 = self.xs[hi];
        let f = (x - x0) / (x1 - x0);
        Ok(self.ys[lo] + (self.ys[hi] - self.ys[lo]) * f)
    }
}
