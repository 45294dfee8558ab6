//! Skew Brownian motion: closed-form transition density, exact-in-law
//! stepping, path sampling and the Brownian-bridge crossing probability.
//!
//! A skew Brownian motion `B^alpha` behaves as a standard Brownian motion
//! away from zero; each excursion from zero is positive with probability
//! `alpha`. Its transition density is
//!
//! ```text
//! x >= 0:  p_t(x, y) = phi_t(y - x) + (2 alpha - 1) phi_t(y + x)   y >= 0
//!                    = 2 (1 - alpha) phi_t(y - x)                   y <  0
//! x <  0:  p_t(x, y) = p_t^{1 - alpha}(-x, -y)
//! ```
//!
//! Stepping exploits `|B^alpha|` being a reflecting Brownian motion: draw the
//! free Gaussian endpoint, decide whether the bridge touched zero, and if it
//! did pick the final excursion sign with probability `alpha`.

use std::f64::consts::PI;

use statrs::function::erf::erfc;

use crate::error::{require_finite, require_open_unit, require_positive, Error, Result};
use crate::medium::TwoSidedMedium;
use crate::rng::RngStream;

/// Upper bound on stored path length for [`sample_path`].
pub const DEFAULT_MAX_POINTS: usize = 50_000_000;

// exp(-745) underflows to zero
const EXP_UNDERFLOW: f64 = 745.0;

#[inline]
fn gaussian(u: f64, t: f64) -> f64 {
    (-u * u / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

#[inline]
pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn check_kernel_args(alpha: f64, t: f64) -> Result<()> {
    require_open_unit("alpha", alpha)?;
    require_positive("t", t)?;
    Ok(())
}

/// Transition density `p_t(x, y)` of skew Brownian motion. The point `y = 0`
/// takes the plus-side value.
pub fn transition_density(alpha: f64, x: f64, t: f64, y: f64) -> Result<f64> {
    check_kernel_args(alpha, t)?;
    require_finite("x", x)?;
    require_finite("y", y)?;
    Ok(density_unchecked(alpha, x, t, y))
}

#[inline]
pub(crate) fn density_unchecked(alpha: f64, x: f64, t: f64, y: f64) -> f64 {
    match (x >= 0.0, y >= 0.0) {
        (true, true) => gaussian(y - x, t) + (2.0 * alpha - 1.0) * gaussian(y + x, t),
        (true, false) => 2.0 * (1.0 - alpha) * gaussian(y - x, t),
        (false, true) => 2.0 * alpha * gaussian(y - x, t),
        (false, false) => gaussian(y - x, t) + (1.0 - 2.0 * alpha) * gaussian(y + x, t),
    }
}

/// Distribution function `P_x(B_t <= y)`.
pub fn transition_cdf(alpha: f64, x: f64, t: f64, y: f64) -> Result<f64> {
    check_kernel_args(alpha, t)?;
    require_finite("x", x)?;
    if y.is_nan() {
        return Err(Error::domain("y", "must not be NaN"));
    }
    Ok(cdf_unchecked(alpha, x, t, y))
}

pub(crate) fn cdf_unchecked(alpha: f64, x: f64, t: f64, y: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - cdf_unchecked(1.0 - alpha, -x, t, -y);
    }
    let s = t.sqrt();
    if y < 0.0 {
        2.0 * (1.0 - alpha) * normal_cdf((y - x) / s)
    } else {
        let below = 2.0 * (1.0 - alpha) * normal_cdf(-x / s);
        let direct = normal_cdf((y - x) / s) - normal_cdf(-x / s);
        let reflected = normal_cdf((y + x) / s) - normal_cdf(x / s);
        (below + direct + (2.0 * alpha - 1.0) * reflected).clamp(0.0, 1.0)
    }
}

/// `|integral p_t(x, y) dy - 1|` by adaptive quadrature.
pub fn normalization_residual(alpha: f64, x: f64, t: f64) -> Result<f64> {
    check_kernel_args(alpha, t)?;
    require_finite("x", x)?;
    let l = x.abs() + 40.0 * t.sqrt();
    let mass =
        crate::quadrature::integrate_piecewise(|y| density_unchecked(alpha, x, t, y), &[-l, -x, 0.0, x, l], 1e-12);
    Ok((mass - 1.0).abs())
}

/// `|integral p_t(x, z) p_s(z, y) dz - p_{t+s}(x, y)|` by adaptive quadrature.
pub fn chapman_kolmogorov_residual(alpha: f64, x: f64, t: f64, s: f64, y: f64) -> Result<f64> {
    check_kernel_args(alpha, t)?;
    require_positive("s", s)?;
    require_finite("x", x)?;
    require_finite("y", y)?;
    let l = (x.abs() + 40.0 * t.sqrt()).max(y.abs() + 40.0 * s.sqrt());
    let lhs = crate::quadrature::integrate_piecewise(
        |z| density_unchecked(alpha, x, t, z) * density_unchecked(alpha, z, s, y),
        &[-l, -x, -y, 0.0, x, y, l],
        1e-12,
    );
    Ok((lhs - density_unchecked(alpha, x, t + s, y)).abs())
}

/// Probability that a Brownian bridge of unit variance rate, running from
/// `x_start` to `x_end` over `dt`, never touches `level`. Endpoints must lie
/// strictly on the same side of the level.
pub fn bridge_no_hit_prob(x_start: f64, x_end: f64, dt: f64, level: f64) -> Result<f64> {
    require_finite("x_start", x_start)?;
    require_finite("x_end", x_end)?;
    require_finite("level", level)?;
    require_positive("dt", dt)?;
    let a = x_start - level;
    let b = x_end - level;
    if a == 0.0 || b == 0.0 {
        return Err(Error::domain(
            "x_start/x_end",
            "endpoint touches the level; hit is certain",
        ));
    }
    if (a > 0.0) != (b > 0.0) {
        return Err(Error::domain(
            "x_start/x_end",
            "endpoints straddle the level; hit is certain",
        ));
    }
    Ok(bridge_no_hit_unchecked(a, b, dt))
}

/// `a`, `b` are same-signed signed distances to the level.
#[inline]
pub(crate) fn bridge_no_hit_unchecked(a: f64, b: f64, dt: f64) -> f64 {
    -(-2.0 * a * b / dt).exp_m1()
}

/// Stepping kernel with the per-step constants precomputed.
#[derive(Debug, Clone, Copy)]
pub struct SkewStepper {
    alpha: f64,
    dt: f64,
    sqrt_dt: f64,
    two_over_dt: f64,
}

impl SkewStepper {
    pub fn new(alpha: f64, dt: f64) -> Result<Self> {
        require_open_unit("alpha", alpha)?;
        require_positive("dt", dt)?;
        Ok(Self {
            alpha,
            dt,
            sqrt_dt: dt.sqrt(),
            two_over_dt: 2.0 / dt,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Samples `B_{t+dt}` given `B_t = x`, exactly in law.
    #[inline]
    pub fn step(&self, x: f64, rng: &mut RngStream) -> f64 {
        let magnitude = x.abs();
        let free = magnitude + self.sqrt_dt * rng.standard_normal();
        if x != 0.0 && free > 0.0 {
            let exponent = self.two_over_dt * magnitude * free;
            let touched = exponent < EXP_UNDERFLOW && rng.uniform() < (-exponent).exp();
            if !touched {
                return if x > 0.0 { free } else { -free };
            }
        }
        let magnitude = free.abs();
        if rng.uniform() < self.alpha {
            magnitude
        } else {
            -magnitude
        }
    }
}

/// One exact-in-law step of skew Brownian motion from `x` over `dt`.
pub fn step(alpha: f64, x: f64, dt: f64, rng: &mut RngStream) -> Result<f64> {
    require_finite("x", x)?;
    Ok(SkewStepper::new(alpha, dt)?.step(x, rng))
}

/// Number of uniform steps of size `dt` needed to reach `t_max`.
pub fn step_count(t_max: f64, dt: f64) -> usize {
    // guard against 1.0/0.01 = 100.00000000000001
    let ratio = t_max / dt;
    let rounded = ratio.round();
    let n = if (ratio - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        rounded
    } else {
        ratio.ceil()
    };
    (n as usize).max(1)
}

pub(crate) fn check_horizon(dt: f64, t_max: f64) -> Result<()> {
    require_positive("dt", dt)?;
    require_finite("t_max", t_max)?;
    if t_max < dt * (1.0 - 1e-12) {
        return Err(Error::domain(
            "t_max",
            format!("must be at least dt = {dt}, got {t_max}"),
        ));
    }
    Ok(())
}

/// A discretely sampled skew Brownian trajectory in X coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewPath {
    alpha: f64,
    x0: f64,
    dt: f64,
    x_values: Vec<f64>,
}

impl SkewPath {
    pub fn from_values(alpha: f64, dt: f64, x_values: Vec<f64>) -> Result<Self> {
        require_open_unit("alpha", alpha)?;
        require_positive("dt", dt)?;
        let x0 = *x_values
            .first()
            .ok_or_else(|| Error::domain("x_values", "path must contain at least one point"))?;
        if let Some(bad) = x_values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain("x_values", format!("non-finite entry {bad}")));
        }
        Ok(Self {
            alpha,
            x0,
            dt,
            x_values,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x_values
    }

    pub fn len(&self) -> usize {
        self.x_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_values.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        (self.x_values.len() - 1) as f64 * self.dt
    }

    pub fn endpoint(&self) -> f64 {
        *self.x_values.last().expect("nonempty path")
    }
}

pub fn sample_path(alpha: f64, x0: f64, dt: f64, t_max: f64, rng: &mut RngStream) -> Result<SkewPath> {
    sample_path_capped(alpha, x0, dt, t_max, rng, DEFAULT_MAX_POINTS)
}

pub fn sample_path_capped(
    alpha: f64,
    x0: f64,
    dt: f64,
    t_max: f64,
    rng: &mut RngStream,
    max_points: usize,
) -> Result<SkewPath> {
    require_finite("x0", x0)?;
    check_horizon(dt, t_max)?;
    let stepper = SkewStepper::new(alpha, dt)?;
    let n = step_count(t_max, dt);
    if n + 1 > max_points {
        return Err(Error::Resource(format!(
            "path needs {} points, cap is {max_points}",
            n + 1
        )));
    }
    let mut x_values = Vec::with_capacity(n + 1);
    let mut x = x0;
    x_values.push(x);
    for _ in 0..n {
        x = stepper.step(x, rng);
        x_values.push(x);
    }
    Ok(SkewPath {
        alpha,
        x0,
        dt,
        x_values,
    })
}

/// A skew path viewed through a medium's scaling map.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalPath {
    medium: TwoSidedMedium,
    path: SkewPath,
}

impl PhysicalPath {
    pub fn new(medium: TwoSidedMedium, path: SkewPath) -> Self {
        Self { medium, path }
    }

    pub fn medium(&self) -> &TwoSidedMedium {
        &self.medium
    }

    pub fn path(&self) -> &SkewPath {
        &self.path
    }

    pub fn y_at(&self, index: usize) -> f64 {
        self.medium.scale(self.path.x_values[index])
    }

    pub fn y_values(&self) -> Vec<f64> {
        self.path.x_values.iter().map(|&x| self.medium.scale(x)).collect()
    }
}

/// Samples the physical diffusion `Y = s(B^{alpha*})` started at `y0`.
pub fn physical_path(
    medium: &TwoSidedMedium,
    y0: f64,
    dt: f64,
    t_max: f64,
    rng: &mut RngStream,
) -> Result<PhysicalPath> {
    physical_path_with_alpha(medium, medium.alpha_star(), y0, dt, t_max, rng)
}

/// As [`physical_path`] with an explicit transmission parameter, for runs
/// that deliberately use a value other than `alpha*`.
pub fn physical_path_with_alpha(
    medium: &TwoSidedMedium,
    alpha: f64,
    y0: f64,
    dt: f64,
    t_max: f64,
    rng: &mut RngStream,
) -> Result<PhysicalPath> {
    let x0 = medium.try_unscale(y0)?;
    let path = sample_path(alpha, x0, dt, t_max, rng)?;
    Ok(PhysicalPath::new(*medium, path))
}
