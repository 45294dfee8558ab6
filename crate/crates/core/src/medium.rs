//! Two-sided medium: dispersion coefficients on either side of an interface
//! at `y = 0`, the interface parameter `lambda`, and the coefficient algebra
//! tying them to the skew Brownian motion transmission parameter.
//!
//! Two coordinate systems appear throughout the crate. *Natural* (X)
//! coordinates are those of the skew Brownian motion itself, where the
//! process is locally a standard Brownian motion. *Physical* (Y) coordinates
//! are obtained through the piecewise-linear scaling map
//! `s(x) = sqrt(D+) x` for `x >= 0` and `sqrt(D-) x` for `x < 0`.
//!
//! The point `0` always belongs to the plus side.

use serde::Serialize;

use crate::error::{require_finite, require_open_unit, require_positive, Error, Result};

/// Physical parameters of a medium with a single sharp interface at `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoSidedMedium {
    d_plus: f64,
    d_minus: f64,
    lambda: f64,
    alpha_star: f64,
    #[serde(skip)]
    sqrt_plus: f64,
    #[serde(skip)]
    sqrt_minus: f64,
}

/// Transmission parameter that makes `s(B^alpha)` a solution of the
/// martingale problem for `(1/2) D f''` on the class
/// `lambda f'(0+) = (1 - lambda) f'(0-)`.
pub fn alpha_star(d_plus: f64, d_minus: f64, lambda: f64) -> f64 {
    let a = lambda * d_minus.sqrt();
    let b = (1.0 - lambda) * d_plus.sqrt();
    a / (a + b)
}

impl TwoSidedMedium {
    pub fn new(d_plus: f64, d_minus: f64, lambda: f64) -> Result<Self> {
        require_positive("d_plus", d_plus)?;
        require_positive("d_minus", d_minus)?;
        require_open_unit("lambda", lambda)?;
        let alpha_star = alpha_star(d_plus, d_minus, lambda);
        if !(alpha_star > 0.0 && alpha_star < 1.0) {
            return Err(Error::domain(
                "alpha_star",
                format!("derived value {alpha_star} left (0, 1); parameters too extreme"),
            ));
        }
        Ok(Self {
            d_plus,
            d_minus,
            lambda,
            alpha_star,
            sqrt_plus: d_plus.sqrt(),
            sqrt_minus: d_minus.sqrt(),
        })
    }

    /// Medium with the flux-continuity interface `D+ c'(0+) = D- c'(0-)`.
    pub fn flux_continuous(d_plus: f64, d_minus: f64) -> Result<Self> {
        Self::new(d_plus, d_minus, flux_continuity_lambda(d_plus, d_minus)?)
    }

    /// Medium for the shelf-break upwelling model, where the free-surface
    /// equation `d eta/dy = -(r/f) (dh/dx)^-1 d2 eta/dx2` is read as a
    /// diffusion in the along-shore "time" `y`. Continuity of the cross-shelf
    /// derivative gives `lambda = 1/2`. The coefficient is doubled because
    /// the generator here is `(1/2) D d2/dx2`.
    pub fn from_upwelling(r: f64, f: f64, h_slope_plus: f64, h_slope_minus: f64) -> Result<Self> {
        require_positive("r", r)?;
        require_finite("f", f)?;
        if f >= 0.0 {
            return Err(Error::domain(
                "f",
                format!("Coriolis parameter must be negative (southern hemisphere), got {f}"),
            ));
        }
        require_positive("h_slope_plus", h_slope_plus)?;
        require_positive("h_slope_minus", h_slope_minus)?;
        let k = 2.0 * r / f.abs();
        Self::new(k / h_slope_plus, k / h_slope_minus, 0.5)
    }

    pub fn d_plus(&self) -> f64 {
        self.d_plus
    }

    pub fn d_minus(&self) -> f64 {
        self.d_minus
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha_star(&self) -> f64 {
        self.alpha_star
    }

    pub fn max_dispersion(&self) -> f64 {
        self.d_plus.max(self.d_minus)
    }

    /// Critical interface parameter `sqrt(D+)/(sqrt(D+) + sqrt(D-))`, at which
    /// `alpha_star = 1/2`.
    pub fn critical_lambda(&self) -> f64 {
        self.sqrt_plus / (self.sqrt_plus + self.sqrt_minus)
    }

    /// Scaling map from X to Y coordinates.
    pub fn scale(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.sqrt_plus * x
        } else {
            self.sqrt_minus * x
        }
    }

    /// Inverse of [`scale`](Self::scale).
    pub fn unscale(&self, y: f64) -> f64 {
        if y >= 0.0 {
            y / self.sqrt_plus
        } else {
            y / self.sqrt_minus
        }
    }

    /// Dispersion coefficient at a Y coordinate.
    pub fn dispersion_at(&self, y: f64) -> f64 {
        if y >= 0.0 {
            self.d_plus
        } else {
            self.d_minus
        }
    }
}

/// Interface parameter `D+/(D+ + D-)` encoding flux continuity.
pub fn flux_continuity_lambda(d_plus: f64, d_minus: f64) -> Result<f64> {
    require_positive("d_plus", d_plus)?;
    require_positive("d_minus", d_minus)?;
    Ok(d_plus / (d_plus + d_minus))
}

/// Checked variants of the coordinate maps for callers holding untrusted input.
impl TwoSidedMedium {
    pub fn try_scale(&self, x: f64) -> Result<f64> {
        Ok(self.scale(require_finite("x", x)?))
    }

    pub fn try_unscale(&self, y: f64) -> Result<f64> {
        Ok(self.unscale(require_finite("y", y)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn alpha_star_examples() {
        let m = TwoSidedMedium::new(4.0, 1.0, 0.8).unwrap();
        assert_relative_eq!(m.alpha_star(), 2.0 / 3.0, epsilon = 1e-15);
        for d in [0.1, 1.0, 7.5] {
            let m = TwoSidedMedium::new(d, d, 0.5).unwrap();
            assert_relative_eq!(m.alpha_star(), 0.5, epsilon = 1e-15);
        }
        // upwelling case: lambda = 1/2 gives sqrt(D-)/(sqrt(D+) + sqrt(D-))
        let m = TwoSidedMedium::new(4.0, 1.0, 0.5).unwrap();
        assert_relative_eq!(m.alpha_star(), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn stored_alpha_matches_recomputation() {
        let m = TwoSidedMedium::new(2.5, 0.3, 0.37).unwrap();
        assert_eq!(m.alpha_star(), alpha_star(2.5, 0.3, 0.37));
    }

    #[test]
    fn rejects_bad_parameters() {
        let field = |r: Result<TwoSidedMedium>| match r {
            Err(Error::Domain { field, .. }) => field,
            other => panic!("expected domain error, got {other:?}"),
        };
        assert_eq!(field(TwoSidedMedium::new(-1.0, 1.0, 0.5)), "d_plus");
        assert_eq!(field(TwoSidedMedium::new(1.0, 0.0, 0.5)), "d_minus");
        assert_eq!(field(TwoSidedMedium::new(1.0, 1.0, 1.0)), "lambda");
        assert_eq!(field(TwoSidedMedium::new(1.0, 1.0, 0.0)), "lambda");
        assert_eq!(field(TwoSidedMedium::new(f64::NAN, 1.0, 0.5)), "d_plus");
        assert_eq!(field(TwoSidedMedium::new(1.0, f64::INFINITY, 0.5)), "d_minus");
    }

    #[test]
    fn flux_lambda_examples() {
        assert_relative_eq!(flux_continuity_lambda(4.0, 1.0).unwrap(), 0.8);
        assert_relative_eq!(flux_continuity_lambda(3.0, 3.0).unwrap(), 0.5);
        assert_relative_eq!(flux_continuity_lambda(1.0, 4.0).unwrap(), 0.2);
        assert!(flux_continuity_lambda(0.0, 4.0).is_err());
    }

    #[test]
    fn scale_and_unscale_examples() {
        let m = TwoSidedMedium::new(4.0, 1.0, 0.8).unwrap();
        assert_eq!(m.scale(1.0), 2.0);
        assert_eq!(m.scale(0.0), 0.0);
        assert_eq!(m.scale(-2.0), -2.0);
        assert_eq!(m.unscale(2.0), 1.0);
        assert_eq!(m.unscale(0.0), 0.0);
        assert_eq!(m.unscale(-2.0), -2.0);
        assert!(m.try_scale(f64::NAN).is_err());
        assert!(m.try_unscale(f64::INFINITY).is_err());
    }

    #[test]
    fn dispersion_examples() {
        let m = TwoSidedMedium::new(4.0, 1.0, 0.8).unwrap();
        assert_eq!(m.dispersion_at(3.2), 4.0);
        assert_eq!(m.dispersion_at(0.0), 4.0);
        assert_eq!(m.dispersion_at(-0.001), 1.0);
    }

    #[test]
    fn upwelling_examples() {
        let m = TwoSidedMedium::from_upwelling(1.0, -1.0, 2.0, 0.5).unwrap();
        assert_relative_eq!(m.d_plus(), 1.0);
        assert_relative_eq!(m.d_minus(), 4.0);
        assert_eq!(m.lambda(), 0.5);
        assert_relative_eq!(m.alpha_star(), 2.0 / 3.0, epsilon = 1e-15);

        let m = TwoSidedMedium::from_upwelling(1.0, -1.0, 2.0, 2.0).unwrap();
        assert_relative_eq!(m.d_plus(), 1.0);
        assert_relative_eq!(m.alpha_star(), 0.5);

        let m = TwoSidedMedium::from_upwelling(2.0, -1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(m.d_plus(), 4.0);
        assert_relative_eq!(m.d_minus(), 4.0);

        assert!(matches!(
            TwoSidedMedium::from_upwelling(1.0, 0.5, 1.0, 1.0),
            Err(Error::Domain { field: "f", .. })
        ));
        assert!(TwoSidedMedium::from_upwelling(0.0, -1.0, 1.0, 1.0).is_err());
        assert!(TwoSidedMedium::from_upwelling(1.0, -1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn critical_lambda_gives_half() {
        let m = TwoSidedMedium::new(4.0, 1.0, 2.0 / 3.0).unwrap();
        assert_relative_eq!(m.critical_lambda(), 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(m.alpha_star(), 0.5, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn alpha_star_increasing_in_lambda(dp in 0.01f64..100.0, dm in 0.01f64..100.0) {
            let mut prev = 0.0;
            for k in 1..100 {
                let a = TwoSidedMedium::new(dp, dm, k as f64 / 100.0).unwrap().alpha_star();
                prop_assert!(a > prev);
                prop_assert!(a > 0.0 && a < 1.0);
                prev = a;
            }
        }

        #[test]
        fn mirror_symmetry(a in 0.01f64..100.0, b in 0.01f64..100.0, lambda in 0.001f64..0.999) {
            let left = TwoSidedMedium::new(a, b, lambda).unwrap().alpha_star();
            let right = TwoSidedMedium::new(b, a, 1.0 - lambda).unwrap().alpha_star();
            prop_assert!((left - (1.0 - right)).abs() < 1e-14);
        }

        #[test]
        fn flux_lambda_gives_sqrt_ratio(dp in 0.01f64..100.0, dm in 0.01f64..100.0) {
            let m = TwoSidedMedium::flux_continuous(dp, dm).unwrap();
            let expected = dp.sqrt() / (dp.sqrt() + dm.sqrt());
            prop_assert!((m.alpha_star() - expected).abs() < 1e-14);
        }

        #[test]
        fn scale_is_increasing_bijection(dp in 0.01f64..100.0, dm in 0.01f64..100.0,
                                         x in -1e6f64..1e6, dx in 1e-6f64..10.0) {
            let m = TwoSidedMedium::new(dp, dm, 0.5).unwrap();
            prop_assert!(m.scale(x + dx) > m.scale(x));
            let back = m.unscale(m.scale(x));
            prop_assert!((back - x).abs() <= 2.0 * f64::EPSILON * x.abs());
            prop_assert_eq!(m.scale(x) >= 0.0, x >= 0.0);
            prop_assert_eq!(m.dispersion_at(m.scale(x)) == dp, x >= 0.0 || dp == dm);
        }

        #[test]
        fn perfect_square_scaling_is_exact(x in -1e6f64..1e6) {
            let m = TwoSidedMedium::new(4.0, 0.25, 0.5).unwrap();
            prop_assert_eq!(m.unscale(m.scale(x)), x);
        }
    }
}
