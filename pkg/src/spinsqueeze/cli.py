"""Command-line entry point.

Usage examples:
  spinsqueeze semiclassical --config run.json --out-dir runs
  spinsqueeze simulate --config run.json --n-traj 8 --seed 3 --threads 2
  SQK_SIMULATION__N_TRAJ=8 spinsqueeze simulate --config run.json
  spinsqueeze selftest

Exit codes: 0 success, 1 module error or failed self-test, 2 invalid configuration.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys

from . import __version__
from .harness import COMMANDS, ConfigError, execute, load_config

log = logging.getLogger("spinsqueeze")

TOLERANCE_FLAGS = {
    "gpe_residual": "GP residual norm at which the ground-state solver stops",
    "dk_form": "allowed gap between finite-difference and Hellmann-Feynman d_k",
    "quadrature_rel": "relative tolerance of the semiclassical and LDA quadratures",
    "degeneracy": "energy gap below which BdG modes are treated as degenerate",
}


def _flag_overrides(args) -> dict:
    over: dict = {}
    if args.seed is not None:
        over.setdefault("physical", {})["seed"] = args.seed
    sim = {}
    if args.n_traj is not None:
        sim["n_traj"] = args.n_traj
    if args.dt is not None:
        sim["dt"] = args.dt
    if sim:
        over["simulation"] = sim
    tol = {k: getattr(args, f"tolerance_{k}") for k in TOLERANCE_FLAGS
           if getattr(args, f"tolerance_{k}") is not None}
    if tol:
        over["tolerances"] = tol
    return over


def selftest() -> int:
    """Fast consistency checks against closed forms; prints one line per check."""
    import numpy as np
    from . import bdg, lda, semiclassical as sc
    from .ground_state import solve_gpe
    from .lattice import LatticeGrid, TrapSpec

    checks = []
    grid = LatticeGrid.cubic(6, 0.7)
    gn = 40.0
    sol = solve_gpe(grid, TrapSpec(kind="none"), gn, n_per_component=1.0)
    modes = bdg.build_and_diagonalize(sol, TrapSpec(kind="none"), use_symmetry=False)
    k2 = np.sort(grid.k_squared.ravel())[1:]
    eps, _, _ = bdg.homogeneous_bogoliubov(k2, sol.mu_phi)
    checks.append(("homogeneous BdG dispersion", float(np.max(np.abs(np.sort(modes.energies) / eps - 1))), 1e-8))
    t = 2.0
    checks.append(("external-orbit closed form",
                   abs(sc.f_external(t) / sc.f_external_bruteforce(t) - 1), 1e-6))
    o1 = sc.orbit_integrals_closed(2.0, 1.0)
    o2 = sc.orbit_integrals_quadrature(2.0, 1.0)
    checks.append(("mixed-orbit J1 closed form", abs(o1.j1 / o2.j1 - 1), 1e-8))
    p = lda.homogeneous_rho_xi2(-1e-12, 1.0).rho_xi2
    q = lda.ZETA_3_2 / lda.thermal_wavelength(1.0) ** 3
    checks.append(("ideal-gas density at mu = 0", abs(p / q - 1), 1e-4))
    ok = True
    for name, err, tol in checks:
        good = math.isfinite(err) and err <= tol
        ok &= good
        print(f"{'PASS' if good else 'FAIL'}  {name}: {err:.2e} (tol {tol:.0e})")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinsqueeze", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in list(COMMANDS) + ["selftest"]:
        p = sub.add_parser(name)
        if name == "selftest":
            continue
        p.add_argument("--config", help="JSON configuration (or a manifest.json to re-run)")
        p.add_argument("--out-dir", default=os.environ.get("SQK_OUT_DIR", "runs"))
        p.add_argument("--threads", type=int, default=int(os.environ.get("SQK_THREADS", "1")))
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--n-traj", type=int, default=None)
        for k, helptext in TOLERANCE_FLAGS.items():
            p.add_argument(f"--tolerance-{k.replace('_', '-')}", dest=f"tolerance_{k}", type=float,
                           default=None, help=helptext)
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return selftest()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, _flag_overrides(args))
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    try:
        run_dir = execute(args.command, cfg, args.out_dir, max(1, args.threads))
    except Exception as exc:  # noqa: BLE001 - any module failure maps to exit 1
        log.error("%s failed: %s", args.command, exc)
        return 1
    print(run_dir)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
