"""Smoke test for the interface_lab extension module.

Build and run:

    cargo build -p interface-lab-py --release --features extension-module
    cp target/release/libinterface_lab.so python/interface_lab.so
    python3 python/smoke_test.py
"""

import json
import math

import interface_lab as il


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAILED: {what}")
    print(f"ok  {what}")


def main():
    m = il.Medium(4.0, 1.0, 0.8)
    check(abs(m.alpha_star - 2.0 / 3.0) < 1e-15, "alpha* for (4, 1, 0.8)")
    check(abs(il.Medium.flux_continuous(4.0, 1.0).lam - 0.8) < 1e-15, "flux-continuity lambda")
    check(abs(m.critical_lambda - 2.0 / 3.0) < 1e-15, "critical lambda")
    check(m.scale(-1.0) == -1.0 and m.scale(1.0) == 2.0, "scaling map")

    try:
        il.Medium(-1.0, 1.0, 0.5)
    except ValueError as e:
        check("d_plus" in str(e), "invalid medium raises ValueError")
    else:
        raise SystemExit("FAILED: invalid medium accepted")

    phi = math.exp(-0.5) / math.sqrt(2.0 * math.pi)
    check(abs(il.transition_density(0.5, 0.0, 1.0, 1.0) - phi) < 1e-14, "Gaussian density at alpha 1/2")
    check(abs(il.transition_cdf(0.3, 0.0, 1.0, 0.0) - 0.7) < 1e-14, "sign mass at the interface")

    path = il.sample_path(2.0 / 3.0, 0.0, 0.01, 1.0, seed=7)
    check(len(path) == 101 and path[0] == 0.0, "path length and start")
    check(path == il.sample_path(2.0 / 3.0, 0.0, 0.01, 1.0, seed=7), "path reproducible from seed")

    sym = il.Medium(1.0, 1.0, 0.5)
    times, surv = il.survival_curve(sym, 1.0, -1.0, h=0.02, dt=0.005, t_max=4.0)
    check(abs(surv[-1] - 0.6827) < 5e-3, "PDE survival against the reflection principle")
    p, se = il.mc_survival(sym, 1.0, -1.0, [4.0], paths=20000, dt=1e-3, seed=3)
    check(abs(p[0] - 0.6827) < 3 * se[0] + 2e-3, "Monte Carlo survival against the reflection principle")

    report = json.loads(il.run_experiment("kernel-check", json.dumps({"draws": 20000})))
    check(report["passed"] and report["config"]["draws"] == 20000, "kernel-check experiment")
    check("paths" in json.loads(il.default_config("fpt")), "default config")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
