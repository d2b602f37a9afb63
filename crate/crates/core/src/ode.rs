//! Fixed-step classical Runge–Kutta integration and the radial Poisson
//! problem on hyperbolic 3-space.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("radial range ({0}, {1}) must satisfy {min} < r_lo < r_hi <= {max}", min = RADIAL_MIN, max = RADIAL_MAX)]
    BadRange(f64, f64),
    #[error("step-doubling error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    ToleranceNotMet { estimate: f64, tolerance: f64 },
    #[error("radius {0} outside the integrated range")]
    OutOfRange(f64),
}

/// One classical RK4 step of `y' = rhs(t, y)`.
pub fn rk4_step<F>(rhs: &F, t: f64, y: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, d)| x + s * d).collect() };
    let k1 = rhs(t, y);
    let k2 = rhs(t + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = rhs(t + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = rhs(t + h, &axpy(y, h, &k3));
    y.iter()
        .enumerate()
        .map(|(i, yi)| yi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Smallest radius admitted for the radial problem (the `coth` pole is at 0).
pub const RADIAL_MIN: f64 = 0.05;
/// Largest radius admitted for the radial problem.
pub const RADIAL_MAX: f64 = 6.0;
/// Initial grid spacing; halved until the error estimate meets the tolerance.
pub const RADIAL_STEP: f64 = 1e-3;
/// Finest step tried before giving up on the tolerance.
pub const RADIAL_MIN_STEP: f64 = 1e-4;
/// Acceptance threshold of the step-doubling estimate and the node residual.
pub const RADIAL_TOLERANCE: f64 = 1e-10;

/// Numerical solution of the radial Poisson equation
/// `u'' + 2 coth(r) u' = 2` on an annulus `r_lo ≤ r ≤ r_hi`, with
/// `u(r₀) = 0`, `u'(r₀) = slope` at the midpoint `r₀`.
#[derive(Debug, Clone)]
pub struct RadialPoisson {
    r0: f64,
    slope: f64,
    h: f64,
    /// Grid values `(u, u')` at `r_lo + i h`.
    grid: Vec<[f64; 2]>,
    r_lo: f64,
    error_estimate: f64,
}

fn radial_rhs(r: f64, y: &[f64]) -> Vec<f64> {
    vec![y[1], 2.0 - 2.0 * y[1] / r.tanh()]
}

/// Step doubling on the same nodes; the RK4 error is about (coarse − fine) / 15.
fn step_doubling_estimate(r0: f64, slope: f64, h: f64, steps: usize, fine: &[[f64; 2]]) -> f64 {
    let coarse = integrate_grid(r0, [0.0, slope], 2.0 * h, steps / 2, steps / 2);
    let offset = steps % 2;
    coarse
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let f = fine[offset + 2 * i];
            (c[0] - f[0]).abs().max((c[1] - f[1]).abs()) / 15.0
        })
        .fold(0.0, f64::max)
}

fn integrate_grid(r0: f64, y0: [f64; 2], h: f64, below: usize, above: usize) -> Vec<[f64; 2]> {
    let mut grid = vec![[0.0; 2]; below + above + 1];
    grid[below] = y0;
    let mut y = y0.to_vec();
    for i in 0..above {
        let r = r0 + i as f64 * h;
        y = rk4_step(&radial_rhs, r, &y, h);
        grid[below + i + 1] = [y[0], y[1]];
    }
    let mut y = y0.to_vec();
    for i in 0..below {
        let r = r0 - i as f64 * h;
        y = rk4_step(&radial_rhs, r, &y, -h);
        grid[below - i - 1] = [y[0], y[1]];
    }
    grid
}

impl RadialPoisson {
    pub fn solve(slope: f64, r_lo: f64, r_hi: f64) -> Result<Self, OdeError> {
        if !(r_lo > RADIAL_MIN && r_hi > r_lo && r_hi <= RADIAL_MAX) {
            return Err(OdeError::BadRange(r_lo, r_hi));
        }
        let r0 = 0.5 * (r_lo + r_hi);
        let mut step = RADIAL_STEP;
        loop {
            let steps = ((r0 - r_lo) / step).ceil().max(2.0) as usize;
            let h = (r0 - r_lo) / steps as f64;
            let grid = integrate_grid(r0, [0.0, slope], h, steps, steps);
            let error_estimate = step_doubling_estimate(r0, slope, h, steps, &grid);
            let sol = RadialPoisson {
                r0,
                slope,
                h,
                grid,
                r_lo,
                error_estimate,
            };
            // u' errors are amplified by 2 coth r in the residual near the pole
            let worst = error_estimate.max(sol.max_residual());
            if worst <= RADIAL_TOLERANCE {
                return Ok(sol);
            }
            if step <= RADIAL_MIN_STEP {
                return Err(OdeError::ToleranceNotMet {
                    estimate: worst,
                    tolerance: RADIAL_TOLERANCE,
                });
            }
            step /= 2.0;
        }
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn range(&self) -> (f64, f64) {
        (self.r_lo, self.r_lo + (self.grid.len() - 1) as f64 * self.h)
    }

    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }

    pub fn grid_len(&self) -> usize {
        self.grid.len()
    }

    pub fn grid_radius(&self, i: usize) -> f64 {
        self.r_lo + i as f64 * self.h
    }

    /// `(u, u')` at grid node `i`.
    pub fn grid_state(&self, i: usize) -> [f64; 2] {
        self.grid[i]
    }

    /// `(u, u')` at an arbitrary radius: one RK4 step from the nearest node.
    pub fn state(&self, r: f64) -> Result<[f64; 2], OdeError> {
        let (lo, hi) = self.range();
        if !(r >= lo && r <= hi) {
            return Err(OdeError::OutOfRange(r));
        }
        let i = (((r - lo) / self.h).round() as usize).min(self.grid.len() - 1);
        let ri = self.grid_radius(i);
        if r == ri {
            return Ok(self.grid[i]);
        }
        let y = rk4_step(&radial_rhs, ri, &self.grid[i], r - ri);
        Ok([y[0], y[1]])
    }

    /// `u^(k)(r)` for `k = 0..=order` (`order ≤ 4`); derivatives beyond the
    /// first follow from differentiating the ODE.
    pub fn derivatives(&self, r: f64, order: usize) -> Result<Vec<f64>, OdeError> {
        let [u, u1] = self.state(r)?;
        let c = 1.0 / r.tanh();
        let s2 = 1.0 / r.sinh().powi(2);
        let u2 = 2.0 - 2.0 * c * u1;
        let u3 = 2.0 * s2 * u1 - 2.0 * c * u2;
        let u4 = -4.0 * s2 * c * u1 + 4.0 * s2 * u2 - 2.0 * c * u3;
        Ok([u, u1, u2, u3, u4][..=order.min(4)].to_vec())
    }

    /// `|u'' + 2 coth(r) u' − 2|` at interior grid node `i`, with `u''`
    /// obtained by Richardson-extrapolated central differences of the
    /// integrated `u'` (three levels, sixth order).
    pub fn residual_at_node(&self, i: usize) -> Option<f64> {
        const SPAN: usize = 2;
        let reach = 4 * SPAN;
        if i < reach || i + reach >= self.grid.len() {
            return None;
        }
        let d = |m: usize| {
            let step = m as f64 * self.h;
            (self.grid[i + m][1] - self.grid[i - m][1]) / (2.0 * step)
        };
        let (d1, d2, d4) = (d(SPAN), d(2 * SPAN), d(4 * SPAN));
        let r1 = (4.0 * d1 - d2) / 3.0;
        let r2 = (4.0 * d2 - d4) / 3.0;
        let u2 = (16.0 * r1 - r2) / 15.0;
        let r = self.grid_radius(i);
        Some((u2 + 2.0 * self.grid[i][1] / r.tanh() - 2.0).abs())
    }

    /// Worst residual over every interior node.
    pub fn max_residual(&self) -> f64 {
        (0..self.grid.len())
            .filter_map(|i| self.residual_at_node(i))
            .fold(0.0, f64::max)
    }
}
