//! Crank–Nicolson solver for the backward interface equation
//!
//! ```text
//! dc/dt = (1/2) d/dy ( D(y) dc/dy ),     lambda c_y(0+) = (1 - lambda) c_y(0-)
//! ```
//!
//! on a uniform node-centred grid with `y = 0` on a node. Away from the
//! interface each side is a constant-coefficient heat equation. The interface
//! node carries no time derivative: its row is the algebraic constraint
//!
//! ```text
//! lambda (-3 c0 + 4 c1 - c2) = (1 - lambda) (3 c0 - 4 c-1 + c-2)
//! ```
//!
//! built from second-order one-sided differences. With
//! `lambda = D+/(D+ + D-)` this is exactly flux continuity. Every step solves
//! one pentadiagonal system, factored once per run.

use serde::Serialize;

use crate::banded::{BandedLu, BandedMatrix};
use crate::error::{require_finite, require_positive, Error, Result};
use crate::medium::TwoSidedMedium;
use crate::sbm::{check_horizon, step_count};

/// Default upper bound on the diffusion number `(1/2) max(D) dt / h^2`
/// before a solve records an accuracy warning.
pub const DEFAULT_DIFFUSION_NUMBER_CAP: f64 = 5.0;

/// Default number of Crank–Nicolson steps replaced by two backward-Euler
/// half steps at start-up, damping the high-frequency error that
/// non-smooth or interface-incompatible initial data excite.
pub const DEFAULT_SMOOTHING_STEPS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    y_min: f64,
    h: f64,
    n_nodes: usize,
    interface_index: Option<usize>,
}

impl Grid {
    /// Grid on `[-half_width, half_width]` with the interface on the middle node.
    pub fn symmetric(half_width: f64, n_nodes: usize) -> Result<Self> {
        require_positive("half_width", half_width)?;
        if n_nodes < 7 || n_nodes.is_multiple_of(2) {
            return Err(Error::domain(
                "n_nodes",
                format!("must be odd and at least 7, got {n_nodes}"),
            ));
        }
        let h = 2.0 * half_width / (n_nodes - 1) as f64;
        Ok(Self {
            y_min: -half_width,
            h,
            n_nodes,
            interface_index: Some((n_nodes - 1) / 2),
        })
    }

    /// Grid starting at `y_min` with spacing `h`. When `0` lies strictly
    /// inside the domain it must fall on a node with at least two nodes on
    /// either side; when `0` is outside or on an end node the domain lies on
    /// one side of the interface.
    pub fn uniform(y_min: f64, h: f64, n_nodes: usize) -> Result<Self> {
        require_finite("y_min", y_min)?;
        require_positive("h", h)?;
        if n_nodes < 3 {
            return Err(Error::domain("n_nodes", format!("must be at least 3, got {n_nodes}")));
        }
        let y_max = y_min + (n_nodes - 1) as f64 * h;
        let interface_index = if y_min < 0.0 && y_max > 0.0 {
            let k = -y_min / h;
            let rounded = k.round();
            if (k - rounded).abs() > 1e-8 * rounded.max(1.0) {
                return Err(Error::Geometry(format!(
                    "interface y = 0 is not a grid node (offset {k} cells from y_min)"
                )));
            }
            let k = rounded as usize;
            if k == 0 || k == n_nodes - 1 {
                None
            } else if k < 2 || k + 2 >= n_nodes {
                return Err(Error::Geometry(
                    "interface needs at least two nodes on each side".to_string(),
                ));
            } else {
                Some(k)
            }
        } else {
            None
        };
        Ok(Self {
            y_min,
            h,
            n_nodes,
            interface_index,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn interface_index(&self) -> Option<usize> {
        self.interface_index
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.node(self.n_nodes - 1)
    }

    pub fn node(&self, i: usize) -> f64 {
        match self.interface_index {
            Some(k) => (i as f64 - k as f64) * self.h,
            None => self.y_min + i as f64 * self.h,
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|i| self.node(i)).collect()
    }

    /// Index of the node nearest to `y`.
    pub fn nearest(&self, y: f64) -> usize {
        let p = ((y - self.y_min) / self.h).round();
        p.clamp(0.0, (self.n_nodes - 1) as f64) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// `c = 0` at the end node.
    Absorbing,
    /// Zero derivative, via a mirrored ghost node.
    Reflecting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeProblem {
    pub medium: TwoSidedMedium,
    pub grid: Grid,
    pub initial_data: Vec<f64>,
    pub left_bc: BoundaryCondition,
    pub right_bc: BoundaryCondition,
    pub dt: f64,
    pub t_max: f64,
    pub probe_nodes: Vec<usize>,
    pub smoothing_steps: usize,
    pub diffusion_number_cap: f64,
}

impl PdeProblem {
    pub fn new(
        medium: TwoSidedMedium,
        grid: Grid,
        initial_data: Vec<f64>,
        left_bc: BoundaryCondition,
        right_bc: BoundaryCondition,
        dt: f64,
        t_max: f64,
    ) -> Result<Self> {
        let problem = Self {
            medium,
            grid,
            initial_data,
            left_bc,
            right_bc,
            dt,
            t_max,
            probe_nodes: Vec::new(),
            smoothing_steps: DEFAULT_SMOOTHING_STEPS,
            diffusion_number_cap: DEFAULT_DIFFUSION_NUMBER_CAP,
        };
        problem.validate()?;
        Ok(problem)
    }

    /// Samples `initial` at the grid nodes.
    pub fn from_fn<F: Fn(f64) -> f64>(
        medium: TwoSidedMedium,
        grid: Grid,
        initial: F,
        left_bc: BoundaryCondition,
        right_bc: BoundaryCondition,
        dt: f64,
        t_max: f64,
    ) -> Result<Self> {
        let data = grid.nodes().into_iter().map(initial).collect();
        Self::new(medium, grid, data, left_bc, right_bc, dt, t_max)
    }

    pub fn with_probes(mut self, probe_nodes: Vec<usize>) -> Result<Self> {
        self.probe_nodes = probe_nodes;
        self.validate()?;
        Ok(self)
    }

    pub fn with_smoothing_steps(mut self, steps: usize) -> Self {
        self.smoothing_steps = steps;
        self
    }

    pub fn diffusion_number(&self) -> f64 {
        0.5 * self.medium.max_dispersion() * self.dt / (self.grid.h * self.grid.h)
    }

    fn validate(&self) -> Result<()> {
        check_horizon(self.dt, self.t_max)?;
        if self.initial_data.len() != self.grid.n_nodes {
            return Err(Error::domain(
                "initial_data",
                format!("{} values for {} nodes", self.initial_data.len(), self.grid.n_nodes),
            ));
        }
        for v in &self.initial_data {
            require_finite("initial_data", *v)?;
        }
        if let Some(&bad) = self.probe_nodes.iter().find(|&&i| i >= self.grid.n_nodes) {
            return Err(Error::domain("probe_nodes", format!("index {bad} outside grid")));
        }
        Ok(())
    }

    /// Spatial operator coefficients `(lower, diag, upper)` for a regular row.
    fn row_operator(&self, i: usize) -> (f64, f64, f64) {
        let g = &self.grid;
        let d = match g.interface_index {
            Some(_) => self.medium.dispersion_at(g.node(i)),
            // single-sided domain: take the side of its interior
            None => self.medium.dispersion_at(0.5 * (g.y_min + g.y_max())),
        };
        let k = 0.5 * d / (g.h * g.h);
        let last = g.n_nodes - 1;
        if i == 0 {
            (0.0, -2.0 * k, 2.0 * k)
        } else if i == last {
            (2.0 * k, -2.0 * k, 0.0)
        } else {
            (k, -2.0 * k, k)
        }
    }

    fn is_absorbing(&self, i: usize) -> bool {
        (i == 0 && self.left_bc == BoundaryCondition::Absorbing)
            || (i == self.grid.n_nodes - 1 && self.right_bc == BoundaryCondition::Absorbing)
    }

    /// Implicit matrix `I - theta dt L` with constraint and boundary rows.
    fn implicit_matrix(&self, theta_dt: f64) -> BandedMatrix {
        let n = self.grid.n_nodes;
        let mut m = BandedMatrix::zeros(n, 2, 2);
        for i in 0..n {
            if Some(i) == self.grid.interface_index {
                let lam = self.medium.lambda();
                m.set(i, i - 2, -(1.0 - lam));
                m.set(i, i - 1, 4.0 * (1.0 - lam));
                m.set(i, i, -3.0);
                m.set(i, i + 1, 4.0 * lam);
                m.set(i, i + 2, -lam);
            } else if self.is_absorbing(i) {
                m.set(i, i, 1.0);
            } else {
                let (lo, di, up) = self.row_operator(i);
                m.set(i, i, 1.0 - theta_dt * di);
                if i > 0 {
                    m.set(i, i - 1, -theta_dt * lo);
                }
                if i + 1 < n {
                    m.set(i, i + 1, -theta_dt * up);
                }
            }
        }
        m
    }

    /// Right-hand side `c + explicit_dt L c` for regular rows, zero otherwise.
    fn explicit_rhs(&self, c: &[f64], explicit_dt: f64, out: &mut [f64]) {
        let n = self.grid.n_nodes;
        for i in 0..n {
            out[i] = if Some(i) == self.grid.interface_index || self.is_absorbing(i) {
                0.0
            } else if explicit_dt == 0.0 {
                c[i]
            } else {
                let (lo, di, up) = self.row_operator(i);
                let left = if i > 0 { lo * c[i - 1] } else { 0.0 };
                let right = if i + 1 < n { up * c[i + 1] } else { 0.0 };
                c[i] + explicit_dt * (left + di * c[i] + right)
            };
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeSolution {
    pub grid: Grid,
    pub dt: f64,
    pub n_steps: usize,
    pub final_slice: Vec<f64>,
    /// Per probe node, values at `k dt` for `k = 0..=n_steps`.
    pub probe_series: Vec<Vec<f64>>,
    /// Trapezoidal integral of `c` over the grid at each step, starting at `t = 0`.
    pub mass_series: Vec<f64>,
    /// Values at the five nodes around the interface after each step
    /// (`k = 1..=n_steps`); empty without an interface.
    pub interface_window: Vec<[f64; 5]>,
    /// Solution envelope over all steps, `(min, max)`.
    pub envelope: (f64, f64),
    pub warnings: Vec<String>,
}

impl PdeSolution {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| k as f64 * self.dt).collect()
    }
}

fn trapezoid(c: &[f64], h: f64) -> f64 {
    let n = c.len();
    let inner: f64 = c[1..n - 1].iter().sum();
    h * (inner + 0.5 * (c[0] + c[n - 1]))
}

pub fn solve(problem: &PdeProblem) -> Result<PdeSolution> {
    problem.validate()?;
    let n = problem.grid.n_nodes;
    let n_steps = step_count(problem.t_max, problem.dt);
    let dt = problem.dt;

    let mut warnings = Vec::new();
    let r = problem.diffusion_number();
    if r > problem.diffusion_number_cap {
        warnings.push(format!(
            "diffusion number {r:.3} exceeds accuracy cap {}",
            problem.diffusion_number_cap
        ));
    }

    // a backward-Euler half step uses the same matrix I - (dt/2) L
    let implicit = BandedLu::factor(&problem.implicit_matrix(0.5 * dt))?;

    let mut c = problem.initial_data.clone();
    let mut rhs = vec![0.0; n];
    let mut probe_series: Vec<Vec<f64>> = problem
        .probe_nodes
        .iter()
        .map(|&i| {
            let mut s = Vec::with_capacity(n_steps + 1);
            s.push(c[i]);
            s
        })
        .collect();
    let mut mass_series = Vec::with_capacity(n_steps + 1);
    mass_series.push(trapezoid(&c, problem.grid.h));
    let mut interface_window = Vec::new();
    let (mut lo, mut hi) = c
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));

    for k in 0..n_steps {
        if k < problem.smoothing_steps {
            for _ in 0..2 {
                problem.explicit_rhs(&c, 0.0, &mut rhs);
                implicit.solve(&mut rhs);
                std::mem::swap(&mut c, &mut rhs);
            }
        } else {
            problem.explicit_rhs(&c, 0.5 * dt, &mut rhs);
            implicit.solve(&mut rhs);
            std::mem::swap(&mut c, &mut rhs);
        }
        if let Some(bad) = c.iter().position(|v| !v.is_finite()) {
            return Err(Error::Singular { row: bad });
        }
        for (series, &i) in probe_series.iter_mut().zip(&problem.probe_nodes) {
            series.push(c[i]);
        }
        mass_series.push(trapezoid(&c, problem.grid.h));
        if let Some(j) = problem.grid.interface_index {
            interface_window.push([c[j - 2], c[j - 1], c[j], c[j + 1], c[j + 2]]);
        }
        for &v in &c {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }

    Ok(PdeSolution {
        grid: problem.grid,
        dt,
        n_steps,
        final_slice: c,
        probe_series,
        mass_series,
        interface_window,
        envelope: (lo, hi),
        warnings,
    })
}

/// `lambda c_y(0+) - (1 - lambda) c_y(0-)` after each step, from the same
/// one-sided stencils as the constraint row.
pub fn interface_flux_residual(solution: &PdeSolution, medium: &TwoSidedMedium, grid: &Grid) -> Result<Vec<f64>> {
    if grid.interface_index.is_none() {
        return Err(Error::Geometry("grid has no interior interface node".to_string()));
    }
    let lam = medium.lambda();
    let two_h = 2.0 * grid.h;
    Ok(solution
        .interface_window
        .iter()
        .map(|w| {
            let right = (-3.0 * w[2] + 4.0 * w[3] - w[4]) / two_h;
            let left = (3.0 * w[2] - 4.0 * w[1] + w[0]) / two_h;
            lam * right - (1.0 - lam) * left
        })
        .collect())
}

/// Survival probability `P_{y0}(T_detector > t)` on the PDE route.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub grid: Grid,
    pub warnings: Vec<String>,
}

impl SurvivalCurve {
    pub fn breakthrough(&self) -> Vec<f64> {
        self.survival.iter().map(|s| 1.0 - s).collect()
    }

    /// Value at time `t`, which must lie on the step grid.
    pub fn at(&self, t: f64) -> Option<f64> {
        let dt = self.times.get(1)? - self.times[0];
        let k = (t / dt).round();
        if (t / dt - k).abs() > 1e-6 {
            return None;
        }
        self.survival.get(k as usize).copied()
    }
}

/// Settings for [`survival_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalSettings {
    /// Target node spacing; adjusted down so the detector and `0` are nodes.
    pub h: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Distance from `y0` to the reflecting far boundary; `None` uses
    /// `8 sqrt(max(D) t_max)`.
    pub far_width: Option<f64>,
}

pub fn default_far_width(medium: &TwoSidedMedium, t_max: f64) -> f64 {
    8.0 * (medium.max_dispersion() * t_max).sqrt()
}

pub fn survival_curve(
    medium: &TwoSidedMedium,
    y0: f64,
    detector: f64,
    settings: SurvivalSettings,
) -> Result<SurvivalCurve> {
    require_finite("y0", y0)?;
    require_finite("detector", detector)?;
    require_positive("h", settings.h)?;
    if y0 == detector {
        return Err(Error::Geometry("start point coincides with the detector".to_string()));
    }
    let width = match settings.far_width {
        Some(w) => require_positive("far_width", w)?,
        None => default_far_width(medium, settings.t_max),
    };
    let away = (y0 - detector).signum();
    let far = y0 + away * width;

    let h = if detector == 0.0 {
        settings.h
    } else {
        let cells = (detector.abs() / settings.h).ceil().max(2.0);
        detector.abs() / cells
    };
    let cells = ((far - detector).abs() / h).ceil() as usize;
    let n_nodes = cells + 1;
    let (grid, left_bc, right_bc) = if away < 0.0 {
        let y_min = detector - cells as f64 * h;
        (
            Grid::uniform(y_min, h, n_nodes)?,
            BoundaryCondition::Reflecting,
            BoundaryCondition::Absorbing,
        )
    } else {
        (
            Grid::uniform(detector, h, n_nodes)?,
            BoundaryCondition::Absorbing,
            BoundaryCondition::Reflecting,
        )
    };

    // probe by linear interpolation between the bracketing nodes
    let pos = (y0 - grid.y_min()) / h;
    let base = (pos.floor() as usize).min(n_nodes - 2);
    let weight = pos - base as f64;
    let mut initial = vec![1.0; n_nodes];
    if away < 0.0 {
        initial[n_nodes - 1] = 0.0;
    } else {
        initial[0] = 0.0;
    }
    let problem = PdeProblem::new(*medium, grid, initial, left_bc, right_bc, settings.dt, settings.t_max)?
        .with_probes(vec![base, base + 1])?;
    let solution = solve(&problem)?;
    let survival = solution.probe_series[0]
        .iter()
        .zip(&solution.probe_series[1])
        .map(|(a, b)| ((1.0 - weight) * a + weight * b).clamp(0.0, 1.0))
        .collect();
    Ok(SurvivalCurve {
        times: solution.times(),
        survival,
        grid,
        warnings: solution.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn medium() -> TwoSidedMedium {
        TwoSidedMedium::new(4.0, 1.0, 0.8).unwrap()
    }

    #[test]
    fn grid_layout() {
        let g = Grid::symmetric(2.0, 9).unwrap();
        assert_eq!(g.interface_index(), Some(4));
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.node(4), 0.0);
        assert_eq!(g.node(0), -2.0);
        assert!(Grid::symmetric(2.0, 8).is_err());
        assert!(Grid::symmetric(2.0, 5).is_err());

        let g = Grid::uniform(-1.0, 0.25, 20).unwrap();
        assert_eq!(g.interface_index(), Some(4));
        assert!(Grid::uniform(-1.1, 0.25, 20).is_err());
        assert!(Grid::uniform(-0.25, 0.25, 20).is_err());
        assert_eq!(Grid::uniform(0.0, 0.25, 20).unwrap().interface_index(), None);
        assert_eq!(Grid::uniform(1.0, 0.25, 20).unwrap().interface_index(), None);
    }

    #[test]
    fn constants_preserved() {
        let grid = Grid::symmetric(5.0, 101).unwrap();
        let p = PdeProblem::from_fn(
            medium(),
            grid,
            |_| 1.0,
            BoundaryCondition::Reflecting,
            BoundaryCondition::Reflecting,
            0.01,
            10.0,
        )
        .unwrap();
        let s = solve(&p).unwrap();
        assert_eq!(s.n_steps, 1000);
        let dev = s.final_slice.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-12, "{dev}");
        assert!((s.envelope.0 - 1.0).abs() < 1e-12 && (s.envelope.1 - 1.0).abs() < 1e-12);
        let res = interface_flux_residual(&s, &medium(), &grid).unwrap();
        assert!(res.iter().all(|r| r.abs() < 1e-10));
    }

    #[test]
    fn flux_lambda_row_is_flux_continuity() {
        // lambda = D+/(D+ + D-) turns the constraint row into D+ c'(0+) = D- c'(0-)
        let (dp, dm) = (3.0, 0.7);
        let m = TwoSidedMedium::flux_continuous(dp, dm).unwrap();
        let w = [0.3, -1.2, 0.8, 2.5, 0.1];
        let right = -3.0 * w[2] + 4.0 * w[3] - w[4];
        let left = 3.0 * w[2] - 4.0 * w[1] + w[0];
        let row = m.lambda() * right - (1.0 - m.lambda()) * left;
        let flux = (dp * right - dm * left) / (dp + dm);
        assert_relative_eq!(row, flux, epsilon = 1e-14);
    }

    #[test]
    fn absorbing_boundary_pins_zero() {
        let grid = Grid::symmetric(3.0, 61).unwrap();
        let p = PdeProblem::from_fn(
            medium(),
            grid,
            |_| 1.0,
            BoundaryCondition::Absorbing,
            BoundaryCondition::Reflecting,
            0.01,
            1.0,
        )
        .unwrap();
        let s = solve(&p).unwrap();
        assert_eq!(s.final_slice[0], 0.0);
        assert!(s.final_slice.iter().all(|v| (0.0..=1.0 + 1e-12).contains(v)));
        // mass decreases through the absorbing end
        assert!(s.mass_series.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn warns_on_large_diffusion_number() {
        let grid = Grid::symmetric(1.0, 21).unwrap();
        let p = PdeProblem::from_fn(
            medium(),
            grid,
            |y| (-y * y).exp(),
            BoundaryCondition::Reflecting,
            BoundaryCondition::Reflecting,
            0.1,
            0.2,
        )
        .unwrap();
        assert!(p.diffusion_number() > DEFAULT_DIFFUSION_NUMBER_CAP);
        assert_eq!(solve(&p).unwrap().warnings.len(), 1);
    }

    #[test]
    fn problem_validation() {
        let grid = Grid::symmetric(1.0, 21).unwrap();
        let bc = BoundaryCondition::Reflecting;
        assert!(PdeProblem::new(medium(), grid, vec![0.0; 20], bc, bc, 0.1, 1.0).is_err());
        assert!(PdeProblem::new(medium(), grid, vec![0.0; 21], bc, bc, 0.0, 1.0).is_err());
        let mut data = vec![0.0; 21];
        data[3] = f64::NAN;
        assert!(PdeProblem::new(medium(), grid, data, bc, bc, 0.1, 1.0).is_err());
        let p = PdeProblem::new(medium(), grid, vec![0.0; 21], bc, bc, 0.1, 1.0).unwrap();
        assert!(p.with_probes(vec![21]).is_err());
    }

    #[test]
    fn survival_geometry_errors() {
        let s = SurvivalSettings {
            h: 0.05,
            dt: 0.01,
            t_max: 1.0,
            far_width: None,
        };
        assert!(matches!(
            survival_curve(&medium(), 1.0, 1.0, s),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn survival_starts_at_one_and_decreases() {
        let s = SurvivalSettings {
            h: 0.05,
            dt: 0.01,
            t_max: 2.0,
            far_width: None,
        };
        let c = survival_curve(&medium(), -1.0, 1.0, s).unwrap();
        assert_eq!(c.survival[0], 1.0);
        assert!(c.survival.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(c.survival.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(c.at(0.0), Some(1.0));
        assert_relative_eq!(c.breakthrough()[0], 0.0);
    }

    #[test]
    fn survival_without_interface_in_domain() {
        // detector between start and the interface: homogeneous on (-inf, -1]
        let m = medium();
        let s = SurvivalSettings {
            h: 0.02,
            dt: 0.005,
            t_max: 1.0,
            far_width: None,
        };
        let c = survival_curve(&m, -2.0, -1.0, s).unwrap();
        assert_eq!(c.grid.interface_index(), None);
        // reflection principle with D- = 1: 2 Phi(1/sqrt(t)) - 1 at t = 1
        assert_relative_eq!(c.at(1.0).unwrap(), 0.682_689_492, epsilon = 2e-3);
    }
}
