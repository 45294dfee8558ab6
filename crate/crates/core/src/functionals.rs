//! Path functionals of the physical diffusion: first passage times,
//! occupation times on each side of the interface, and the martingale
//! residual for test functions satisfying the interface condition.
//!
//! Each functional has a streaming accumulator so that ensemble runs never
//! store whole paths; the path-based entry points feed the same accumulators.

use serde::Serialize;

use crate::error::{require_finite, require_open_unit, Error, Result};
use crate::medium::TwoSidedMedium;
use crate::rng::RngStream;
use crate::sbm::{bridge_no_hit_unchecked, check_horizon, step_count, PhysicalPath, SkewStepper};

const EXP_UNDERFLOW: f64 = 745.0;

/// Outcome of one first-passage simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FptSample {
    pub passage_time: Option<f64>,
    pub t_max: f64,
}

impl FptSample {
    pub fn censored(&self) -> bool {
        self.passage_time.is_none()
    }

    /// Whether the passage has not happened by time `t`.
    pub fn survives(&self, t: f64) -> bool {
        match self.passage_time {
            Some(tau) => tau > t,
            None => true,
        }
    }
}

/// First-passage simulator in X coordinates for a fixed start, target and
/// step size.
#[derive(Debug, Clone, Copy)]
pub struct PassageSimulator {
    stepper: SkewStepper,
    x0: f64,
    level: f64,
    n_steps: usize,
    dt: f64,
    t_max: f64,
    bridge_correction: bool,
}

impl PassageSimulator {
    pub fn new(
        medium: &TwoSidedMedium,
        alpha: f64,
        y0: f64,
        y_target: f64,
        dt: f64,
        t_max: f64,
        bridge_correction: bool,
    ) -> Result<Self> {
        require_finite("y0", y0)?;
        require_finite("y_target", y_target)?;
        if y0 == y_target {
            return Err(Error::domain("y_target", "must differ from the starting point"));
        }
        check_horizon(dt, t_max)?;
        let n_steps = step_count(t_max, dt);
        Ok(Self {
            stepper: SkewStepper::new(alpha, dt)?,
            x0: medium.unscale(y0),
            level: medium.unscale(y_target),
            n_steps,
            dt,
            t_max: n_steps as f64 * dt,
            bridge_correction,
        })
    }

    pub fn run(&self, rng: &mut RngStream) -> FptSample {
        let mut x = self.x0;
        for i in 0..self.n_steps {
            let next = self.stepper.step(x, rng);
            if let Some(offset) = self.crossing(x, next, self.dt, rng) {
                return FptSample {
                    passage_time: Some((i as f64 + offset) * self.dt),
                    t_max: self.t_max,
                };
            }
            x = next;
        }
        FptSample {
            passage_time: None,
            t_max: self.t_max,
        }
    }

    /// Runs one path and reads its passage time twice: on this simulator's
    /// grid and on the grid of doubled step made of every other point.
    ///
    /// Returns `(fine, coarse)`. The coarse sample has exactly the law of a
    /// run at step `2 dt`, so the pair isolates the discretization effect
    /// from Monte Carlo noise.
    pub fn run_coupled(&self, rng: &mut RngStream) -> Result<(FptSample, FptSample)> {
        if !self.n_steps.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "coupled run needs an even step count, got {}",
                self.n_steps
            )));
        }
        let coarse_dt = 2.0 * self.dt;
        let mut fine = None;
        let mut coarse = None;
        let mut x = self.x0;
        let mut coarse_start = self.x0;
        for i in 0..self.n_steps {
            let next = self.stepper.step(x, rng);
            if fine.is_none() {
                if let Some(offset) = self.crossing(x, next, self.dt, rng) {
                    fine = Some((i as f64 + offset) * self.dt);
                }
            }
            if i % 2 == 1 {
                if coarse.is_none() {
                    if let Some(offset) = self.crossing(coarse_start, next, coarse_dt, rng) {
                        coarse = Some(((i / 2) as f64 + offset) * coarse_dt);
                    }
                }
                coarse_start = next;
                if fine.is_some() && coarse.is_some() {
                    break;
                }
            }
            x = next;
        }
        Ok((
            FptSample {
                passage_time: fine,
                t_max: self.t_max,
            },
            FptSample {
                passage_time: coarse,
                t_max: self.t_max,
            },
        ))
    }

    /// Step offset at which a step from `x` to `next` is declared to reach
    /// the level: 1 at the grid point, 1/2 for a bridge crossing inside it.
    fn crossing(&self, x: f64, next: f64, dt: f64, rng: &mut RngStream) -> Option<f64> {
        let reached = if self.x0 > self.level {
            next <= self.level
        } else {
            next >= self.level
        };
        if reached {
            return Some(1.0);
        }
        // within-step crossing, only away from the interface where the
        // process is a plain Brownian motion in X coordinates
        if self.bridge_correction && x * next > 0.0 {
            let a = x - self.level;
            let b = next - self.level;
            if 2.0 * a * b / dt < EXP_UNDERFLOW && rng.uniform() >= bridge_no_hit_unchecked(a, b, dt) {
                return Some(0.5);
            }
        }
        None
    }
}

/// Simulates `T_{y_target}` for the physical diffusion started at `y0`.
#[allow(clippy::too_many_arguments)]
pub fn first_passage(
    medium: &TwoSidedMedium,
    y0: f64,
    y_target: f64,
    dt: f64,
    t_max: f64,
    rng: &mut RngStream,
    bridge_correction: bool,
) -> Result<FptSample> {
    let sim = PassageSimulator::new(medium, medium.alpha_star(), y0, y_target, dt, t_max, bridge_correction)?;
    Ok(sim.run(rng))
}

/// Empirical survival `P(T > t)` and its binomial standard error at each time.
pub fn empirical_survival(samples: &[FptSample], times: &[f64]) -> Vec<(f64, f64)> {
    let n = samples.len() as f64;
    times
        .iter()
        .map(|&t| {
            let alive = samples.iter().filter(|s| s.survives(t)).count() as f64;
            let p = alive / n;
            (p, (p * (1.0 - p) / n).sqrt())
        })
        .collect()
}

/// Time spent on each side of the interface up to the path horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupationRecord {
    /// Lebesgue time with `Y > 0` (zero counted on the plus side).
    pub gamma_plus_leb: f64,
    pub gamma_minus_leb: f64,
    /// Quadratic-variation-weighted time, `D+ * gamma_plus_leb`.
    pub gamma_plus_qv: f64,
    pub gamma_minus_qv: f64,
    pub horizon: f64,
}

/// Streaming occupation tally over X-coordinate samples.
#[derive(Debug, Clone, Copy)]
pub struct OccupationAccumulator {
    dt: f64,
    plus: f64,
    steps: usize,
}

impl OccupationAccumulator {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            plus: 0.0,
            steps: 0,
        }
    }

    /// Accounts for the step from `x_prev` to `x_next`. Across a sign change
    /// the step is split at the linearly interpolated crossing.
    #[inline]
    pub fn push(&mut self, x_prev: f64, x_next: f64) {
        let prev_plus = x_prev >= 0.0;
        if prev_plus == (x_next >= 0.0) {
            if prev_plus {
                self.plus += self.dt;
            }
        } else {
            let share = x_prev.abs() / (x_prev.abs() + x_next.abs());
            if prev_plus {
                self.plus += share * self.dt;
            } else {
                self.plus += (1.0 - share) * self.dt;
            }
        }
        self.steps += 1;
    }

    pub fn finish(&self, medium: &TwoSidedMedium) -> OccupationRecord {
        let horizon = self.steps as f64 * self.dt;
        let plus = self.plus.min(horizon);
        let minus = horizon - plus;
        OccupationRecord {
            gamma_plus_leb: plus,
            gamma_minus_leb: minus,
            gamma_plus_qv: medium.d_plus() * plus,
            gamma_minus_qv: medium.d_minus() * minus,
            horizon,
        }
    }
}

pub fn occupation_times(path: &PhysicalPath) -> OccupationRecord {
    let skew = path.path();
    let mut acc = OccupationAccumulator::new(skew.dt());
    for w in skew.x_values().windows(2) {
        acc.push(w[0], w[1]);
    }
    acc.finish(path.medium())
}

/// Member of the class `lambda f'(0+) = (1 - lambda) f'(0-)`:
///
/// ```text
/// f(y) = (1 - lambda) kappa y + beta_plus  y^2   for y >= 0
/// f(y) =       lambda kappa y + beta_minus y^2   for y <  0
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunction {
    lambda: f64,
    kappa: f64,
    beta_plus: f64,
    beta_minus: f64,
}

impl TestFunction {
    pub fn new(lambda: f64, kappa: f64, beta_plus: f64, beta_minus: f64) -> Result<Self> {
        require_open_unit("lambda", lambda)?;
        require_finite("kappa", kappa)?;
        require_finite("beta_plus", beta_plus)?;
        require_finite("beta_minus", beta_minus)?;
        Ok(Self {
            lambda,
            kappa,
            beta_plus,
            beta_minus,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn beta_plus(&self) -> f64 {
        self.beta_plus
    }

    pub fn beta_minus(&self) -> f64 {
        self.beta_minus
    }

    #[inline]
    pub fn value(&self, y: f64) -> f64 {
        if y >= 0.0 {
            (1.0 - self.lambda) * self.kappa * y + self.beta_plus * y * y
        } else {
            self.lambda * self.kappa * y + self.beta_minus * y * y
        }
    }

    /// One-sided derivative; `y = 0` gives the right derivative.
    pub fn derivative(&self, y: f64) -> f64 {
        if y >= 0.0 {
            (1.0 - self.lambda) * self.kappa + 2.0 * self.beta_plus * y
        } else {
            self.lambda * self.kappa + 2.0 * self.beta_minus * y
        }
    }

    pub fn left_derivative_at_zero(&self) -> f64 {
        self.lambda * self.kappa
    }

    #[inline]
    pub fn second_derivative(&self, y: f64) -> f64 {
        if y >= 0.0 {
            2.0 * self.beta_plus
        } else {
            2.0 * self.beta_minus
        }
    }
}

pub fn make_test_function(lambda: f64, kappa: f64, beta_plus: f64, beta_minus: f64) -> Result<TestFunction> {
    TestFunction::new(lambda, kappa, beta_plus, beta_minus)
}

fn check_class(f: &TestFunction, medium: &TwoSidedMedium) -> Result<()> {
    if (f.lambda - medium.lambda()).abs() > 1e-12 {
        return Err(Error::LambdaMismatch {
            function: f.lambda,
            medium: medium.lambda(),
        });
    }
    Ok(())
}

/// Streaming left-endpoint compensator for `f(Y_T) - f(Y_0) - (1/2) int D f'' du`.
#[derive(Debug, Clone, Copy)]
pub struct MartingaleAccumulator {
    f: TestFunction,
    half_dt: f64,
    start: f64,
    compensator: f64,
}

impl MartingaleAccumulator {
    pub fn new(f: TestFunction, medium: &TwoSidedMedium, dt: f64, y0: f64) -> Result<Self> {
        check_class(&f, medium)?;
        Ok(Self {
            f,
            half_dt: 0.5 * dt,
            start: f.value(y0),
            compensator: 0.0,
        })
    }

    /// Adds the quadrature term at a left endpoint `y` with dispersion `d`.
    #[inline]
    pub fn push_left(&mut self, y: f64, d: f64) {
        self.compensator += d * self.f.second_derivative(y);
    }

    pub fn finish(&self, y_end: f64) -> f64 {
        self.f.value(y_end) - self.start - self.half_dt * self.compensator
    }
}

pub fn martingale_residual(path: &PhysicalPath, f: &TestFunction) -> Result<f64> {
    let medium = path.medium();
    let skew = path.path();
    let mut acc = MartingaleAccumulator::new(*f, medium, skew.dt(), path.y_at(0))?;
    let xs = skew.x_values();
    for &x in &xs[..xs.len() - 1] {
        let y = medium.scale(x);
        acc.push_left(y, medium.dispersion_at(y));
    }
    Ok(acc.finish(path.y_at(xs.len() - 1)))
}
