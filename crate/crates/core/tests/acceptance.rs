//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs as a plain binary (`harness = false`) so the criteria execute one at
//! a time and their wall times are meaningful.

use std::process::ExitCode;
use std::time::Instant;

use interface_lab_core::experiments::{
    run_fpt_experiment, run_kernel_check, run_martingale_experiment, run_occupation_experiment, run_pde_vs_mc,
    Experiment, FptConfig, KernelCheckConfig, MartingaleConfig, OccupationConfig, PdeVsMcConfig,
};
use interface_lab_core::pde::{solve, survival_curve, BoundaryCondition, Grid, PdeProblem, SurvivalSettings};
use interface_lab_core::report::ExperimentReport;
use interface_lab_core::{Result, TwoSidedMedium};

const REFLECT: BoundaryCondition = BoundaryCondition::Reflecting;

type Criterion = (&'static str, fn() -> Result<Outcome>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn measured(report: &ExperimentReport, name: &str) -> String {
    match report.diagnostic(name) {
        Some(d) => format!(
            "{name}={:.4e} {} {:.4e}",
            d.measured,
            d.comparison.symbol(),
            d.threshold
        ),
        None => format!("{name}=missing"),
    }
}

fn all_pass(report: &ExperimentReport, names: &[&str]) -> bool {
    names.iter().all(|n| report.diagnostic(n).is_some_and(|d| d.passed))
}

fn criterion_1() -> Result<Outcome> {
    let r = run_kernel_check(&KernelCheckConfig::default(), 0)?;
    let names = ["sign_frequency_error", "ks_distance"];
    let sign = r.diagnostic("sign_frequency_error").unwrap();
    Ok(Outcome {
        passed: all_pass(&r, &names)
            && sign.threshold <= 0.0032
            && r.diagnostic("ks_distance").unwrap().threshold <= 0.004,
        detail: names.iter().map(|n| measured(&r, n)).collect::<Vec<_>>().join(", "),
    })
}

fn criterion_2() -> Result<Outcome> {
    let r = run_kernel_check(
        &KernelCheckConfig {
            draws: 10_000,
            ..Default::default()
        },
        0,
    )?;
    let names = ["normalization_residual", "chapman_kolmogorov_residual"];
    Ok(Outcome {
        passed: all_pass(&r, &names),
        detail: names.iter().map(|n| measured(&r, n)).collect::<Vec<_>>().join(", "),
    })
}

fn criterion_3() -> Result<Outcome> {
    let r = run_pde_vs_mc(&PdeVsMcConfig::default(), 0)?;
    let agreement = (0..3).all(|k| {
        r.diagnostic(&format!("agreement_gap/probe[{k}]"))
            .is_some_and(|d| d.passed)
    });
    let literal = r.diagnostic("literal_alpha_max_z").unwrap();
    let worst_gap = r
        .diagnostics
        .iter()
        .filter(|d| d.name.starts_with("agreement_gap"))
        .map(|d| d.measured / d.threshold)
        .fold(0.0, f64::max);
    Ok(Outcome {
        passed: agreement && literal.passed,
        detail: format!(
            "worst gap/tolerance={worst_gap:.3}, literal alpha max z={:.2}",
            literal.measured
        ),
    })
}

fn criterion_4() -> Result<Outcome> {
    let medium = TwoSidedMedium::flux_continuous(4.0, 1.0)?;
    let cfg = FptConfig {
        lambda: medium.lambda(),
        ..Default::default()
    };
    let r = run_fpt_experiment(&cfg, 0)?;
    let names = [
        "mc_ordering_max_z",
        "pde_ordering_max_excess",
        "mc_vs_pde_max_scaled_gap",
    ];
    let first = &r.observations["factored_bound_first_time"];
    Ok(Outcome {
        passed: all_pass(&r, &names),
        detail: format!(
            "{}, first time with ratio <= 0.5: {first}",
            names.iter().map(|n| measured(&r, n)).collect::<Vec<_>>().join(", ")
        ),
    })
}

fn criterion_5() -> Result<Outcome> {
    let r = run_occupation_experiment(&OccupationConfig::default(), 0)?;
    let names = [
        "plus_fraction_z/lambda[0]",
        "plus_fraction_z/lambda[1]",
        "plus_fraction_z/lambda[2]",
        "difference_negative_z/lambda[0]",
        "difference_at_critical_z/lambda[1]",
        "difference_positive_z/lambda[2]",
    ];
    Ok(Outcome {
        passed: all_pass(&r, &names) && r.passed,
        detail: names[3..]
            .iter()
            .map(|n| measured(&r, n))
            .collect::<Vec<_>>()
            .join(", "),
    })
}

fn criterion_6() -> Result<Outcome> {
    let r = run_martingale_experiment(&MartingaleConfig::default(), 0)?;
    let names = [
        "null_z/function[0]",
        "null_z/function[1]",
        "null_z/function[2]",
        "rejection_max_z/alpha[1]",
        "rejection_max_z/alpha[2]",
    ];
    Ok(Outcome {
        passed: all_pass(&r, &names),
        detail: names.iter().map(|n| measured(&r, n)).collect::<Vec<_>>().join(", "),
    })
}

fn heat_kernel_solution(sigma2: f64, t: f64, y: f64) -> f64 {
    let v = sigma2 + t;
    (sigma2 / v).sqrt() * (-y * y / (2.0 * v)).exp()
}

fn homogeneous_error(h: f64, dt: f64) -> Result<f64> {
    let sigma2 = 0.25;
    let grid = Grid::symmetric(10.0, (20.0 / h).round() as usize + 1)?;
    let m = TwoSidedMedium::new(1.0, 1.0, 0.5)?;
    let p = PdeProblem::from_fn(m, grid, |y| (-y * y / (2.0 * sigma2)).exp(), REFLECT, REFLECT, dt, 1.0)?
        .with_smoothing_steps(0);
    let s = solve(&p)?;
    Ok(grid
        .nodes()
        .iter()
        .zip(&s.final_slice)
        .map(|(&y, &c)| (c - heat_kernel_solution(sigma2, 1.0, y)).abs())
        .fold(0.0, f64::max))
}

fn interface_final(h: f64, dt: f64) -> Result<Vec<f64>> {
    let grid = Grid::symmetric(12.0, (24.0 / h).round() as usize + 1)?;
    let m = TwoSidedMedium::new(4.0, 1.0, 0.8)?;
    let p = PdeProblem::from_fn(m, grid, |y| (-(y - 1.0) * (y - 1.0)).exp(), REFLECT, REFLECT, dt, 1.0)?;
    Ok(solve(&p)?.final_slice)
}

fn criterion_7() -> Result<Outcome> {
    let e2 = homogeneous_error(0.05, 0.01)?;
    let e3 = homogeneous_error(0.025, 0.005)?;
    let homogeneous_order = (e2 / e3).log2();

    let levels = [(0.05, 0.01), (0.025, 0.005), (0.0125, 0.0025)]
        .iter()
        .map(|&(h, dt)| interface_final(h, dt))
        .collect::<Result<Vec<_>>>()?;
    let coarse_n = levels[0].len();
    let diff = |a: usize| {
        (0..coarse_n)
            .map(|i| (levels[a][i << a] - levels[a + 1][i << (a + 1)]).abs())
            .fold(0.0, f64::max)
    };
    let interface_order = (diff(0) / diff(1)).log2();

    let m = TwoSidedMedium::new(4.0, 1.0, 0.8)?;
    let grid = Grid::symmetric(5.0, 201)?;
    let p = PdeProblem::from_fn(m, grid, |_| 1.0, REFLECT, REFLECT, 1e-3, 1.0)?;
    let s = solve(&p)?;
    let drift = s
        .final_slice
        .iter()
        .map(|c| (c - 1.0).abs())
        .fold(0.0, f64::max)
        .max((s.envelope.0 - 1.0).abs().max((s.envelope.1 - 1.0).abs()));

    let sym = TwoSidedMedium::new(1.0, 1.0, 0.5)?;
    let curve = survival_curve(
        &sym,
        1.0,
        -1.0,
        SurvivalSettings {
            h: 0.02,
            dt: 0.005,
            t_max: 4.0,
            far_width: None,
        },
    )?;
    let survival = curve.at(4.0).unwrap_or(f64::NAN);

    Ok(Outcome {
        passed: homogeneous_order >= 1.9
            && interface_order >= 1.5
            && s.n_steps == 1000
            && drift < 1e-12
            && (survival - 0.6827).abs() <= 5e-3,
        detail: format!(
            "heat-kernel order={homogeneous_order:.3}, interface order={interface_order:.3}, \
             constant drift over {} steps={drift:.2e}, survival(t=4)={survival:.5}",
            s.n_steps
        ),
    })
}

fn criterion_8() -> Result<Outcome> {
    let experiments = [
        Experiment::KernelCheck(KernelCheckConfig {
            draws: 20_000,
            ..Default::default()
        }),
        Experiment::Fpt(FptConfig {
            paths: 2_000,
            t_max: 1.0,
            pde_h: 0.05,
            ..Default::default()
        }),
        Experiment::Occupation(OccupationConfig {
            paths: 2_000,
            dt: 0.02,
            ..Default::default()
        }),
        Experiment::Martingale(MartingaleConfig {
            paths: 2_000,
            dt: 0.01,
            ..Default::default()
        }),
        Experiment::PdeVsMc(PdeVsMcConfig {
            paths: 2_000,
            dt: 0.01,
            grid_nodes: 481,
            ..Default::default()
        }),
    ];
    let mut identical = true;
    let mut names = Vec::new();
    for e in &experiments {
        let a = e.run(1)?.to_json_without_wall_time();
        let b = e.run(1)?.to_json_without_wall_time();
        let c = e.run(4)?.to_json_without_wall_time();
        let same = a == b && a == c;
        identical &= same;
        names.push(format!("{}:{}", e.name(), if same { "identical" } else { "DIFFERENT" }));
    }
    Ok(Outcome {
        passed: identical,
        detail: names.join(", "),
    })
}

fn criterion_9() -> Result<Outcome> {
    let medium = TwoSidedMedium::flux_continuous(4.0, 1.0)?;
    let cfg = FptConfig {
        lambda: medium.lambda(),
        check_dt_halving: true,
        ..Default::default()
    };
    let r = run_fpt_experiment(&cfg, 0)?;
    Ok(Outcome {
        passed: all_pass(&r, &["dt_halving_max_z"]),
        detail: measured(&r, "dt_halving_max_z"),
    })
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("sampler exactness", criterion_1),
        ("density self-consistency", criterion_2),
        ("PDE vs Monte Carlo, transmission parameter", criterion_3),
        ("first-passage ordering", criterion_4),
        ("occupation-time sign pattern", criterion_5),
        ("martingale characterization", criterion_6),
        ("PDE convergence", criterion_7),
        ("determinism", criterion_8),
        ("discretization control", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| id.ends_with(f.as_str()) || name.contains(f.as_str()))
        {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(o) => {
                let tag = if o.passed { "PASS" } else { "FAIL" };
                failures += usize::from(!o.passed);
                println!("{id} [{tag}] {name} ({secs:.1} s): {}", o.detail);
            }
            Err(e) => {
                failures += 1;
                println!("{id} [FAIL] {name} ({secs:.1} s): error: {e}");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criterion(s) failed");
        ExitCode::FAILURE
    }
}
