"""Experiment harness: config generation, solver runs, sweeps, spectra, CSV.

Subcommands
    generate  write Metropolis snapshot ensembles as WGF1 files
    solve     run solvers over one (n, beta) ensemble at a set of shifts
    sweep     full grid over beta values, configurations, shifts and solvers
    spectrum  smallest eigenvalues of Z (= singular values of D), eigenvalue
              scatter data for small lattices, and eigenvector modulus fields

All experiment parameters live in a JSON document (see README for the
schema); command-line flags override single fields.  Every CSV row carries
the master seed and the sha256 of the configuration file it used, and rows
are emitted in sorted order so reruns with identical inputs give identical
bytes (timing columns are written as 0.0 under --no-timings).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy.sparse.linalg as spla

from .errors import DivergenceError
from .gauge import generate_snapshots, load_config, mean_plaquette, save_config
from .krylov import cgnr, gmres_restarted
from .lattice import LatticeDims
from .mg import CycleParams, default_setup, mg_solve, solve_cycle
from .transfer import even_grid
from .wilson import assemble_wilson, eta_min_dense, form_z, gamma5_multiply, odd_even_reduce, spectrum_dense

SCHEMA_VERSION = 1

CSV_COLUMNS = [
    "schema_version",
    "n",
    "beta",
    "config_id",
    "config_hash",
    "seed",
    "m",
    "mq",
    "eta_min",
    "eta_source",
    "sigma_min_est",
    "solver",
    "setup",
    "iterations",
    "converged",
    "failed",
    "rho",
    "rho_source",
    "rel_residual",
    "rel_error",
    "setup_seconds",
    "solve_seconds",
]

SPECTRUM_COLUMNS = [
    "schema_version",
    "n",
    "beta",
    "config_id",
    "config_hash",
    "seed",
    "m",
    "row_type",
    "k",
    "sigma",
    "re",
    "im",
    "participation",
]

DEFAULTS = {
    "n": 32,
    "beta": 6.0,
    "betas": None,
    "seed": 4242,
    "config_dir": "configs",
    "config_ids": list(range(11_000, 20_000, 1_000)),
    "eta_targets": [float(v) for v in np.logspace(-5, -1, 8)],
    "shifts": None,
    "solvers": ["bamg", "bamg-gmres32"],
    "setup": "w",
    "k_r": 8,
    "k_e": 8,
    "tol": 1e-8,
    "max_iter": 4096,
    "mg_max_iter": 100,
    "workers": 1,
    "timings": True,
    "generate_missing": True,
    "out": "results.csv",
    "spectrum_k": 16,
    "spectrum_shift": 0.0,
    "field_dir": None,
    "field_modes": [0],
}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest round-trip decimal
    return str(v)


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def config_path(cfgdir, n, beta, seed, config_id) -> Path:
    return Path(cfgdir) / f"wgf_n{n}_b{beta:g}_s{seed}_{config_id}.wgf"


def _chain_seed(seed, n, beta) -> int:
    return int(np.random.SeedSequence([seed, n, int(round(beta * 1000))]).generate_state(1)[0])


def ensure_ensemble(params, beta=None) -> list[Path]:
    """Generate any missing snapshot files for one (n, beta) chain; return paths."""
    n = params["n"]
    beta = params["beta"] if beta is None else beta
    seed = params["seed"]
    ids = params["config_ids"]
    cfgdir = Path(params["config_dir"])
    cfgdir.mkdir(parents=True, exist_ok=True)
    paths = [config_path(cfgdir, n, beta, seed, i) for i in ids]
    if all(p.exists() for p in paths):
        return paths
    if not params["generate_missing"]:
        missing = [str(p) for p in paths if not p.exists()]
        raise FileNotFoundError(f"missing gauge configurations: {missing}")
    first, last = min(ids), max(ids)
    spacing = np.gcd.reduce([i - first for i in ids if i != first]) if last > first else 1_000
    snaps = generate_snapshots(
        n, beta, _chain_seed(seed, n, beta), first_sweep=first, spacing=int(spacing),
        count=(last - first) // int(spacing) + 1,
    )
    by_sweep = {s.sweep_count: s for s in snaps}
    for i, p in zip(ids, paths):
        save_config(by_sweep[i], p)
    return paths


def cmd_generate(params) -> list[Path]:
    betas = params["betas"] or [params["beta"]]
    out = []
    for beta in betas:
        paths = ensure_ensemble(params, beta)
        for p in paths:
            cfg = load_config(p)
            print(f"{p}  <plaq> = {mean_plaquette(cfg):.4f}  seed = {cfg.seed}")
        out.extend(paths)
    return out


def _eta_floor(cfg, dims) -> tuple[float, str]:
    """Smallest real part of spec(D) at m = 0, dense below 2*32^2 variables."""
    D0 = assemble_wilson(cfg, 0.0)
    if dims.n <= 32:
        return eta_min_dense(D0), "dense"
    lam = spla.eigs(
        D0.tocsc(), k=24, sigma=0.0, which="LM", return_eigenvectors=False, maxiter=5000
    )
    return float(np.min(lam.real)), "arnoldi"


def _run_point(task) -> list[dict]:
    """All requested solver rows for one (config file, shift) grid point."""
    params, path, beta, shift_idx, m, eta, eta_source = (
        task["params"], Path(task["path"]), task["beta"], task["shift_idx"], task["m"],
        task["eta"], task["eta_source"],
    )
    cfg = load_config(path)
    dims = cfg.dims
    seed = params["seed"]
    cfg_hash = hashlib.sha256(path.read_bytes()).hexdigest()[:16]
    base = {
        "schema_version": SCHEMA_VERSION,
        "n": dims.n,
        "beta": beta,
        "config_id": cfg.sweep_count,
        "config_hash": cfg_hash,
        "seed": seed,
        "m": m,
        "mq": m + 2.0,
        "eta_min": eta,
        "eta_source": eta_source,
        "setup": params["setup"],
    }
    timings = params["timings"]
    rows = []

    D = assemble_wilson(cfg, m)
    oe = odd_even_reduce(D, dims)
    zhat = form_z(oe.dhat, oe.gamma_e)
    rng = np.random.default_rng([seed, cfg.sweep_count, shift_idx])
    nvars = oe.dhat.shape[0]
    x_true = (rng.standard_normal(nvars) + 1j * rng.standard_normal(nvars)) / np.sqrt(2.0)
    b_hat = oe.dhat @ x_true
    zb = gamma5_multiply(oe.gamma_e, b_hat)

    hierarchy = None
    sigma_est = None
    setup_secs = 0.0
    need_mg = any(s in params["solvers"] for s in ("bamg", "bamg-gmres32"))
    if need_mg:
        cparams = CycleParams(k_r=params["k_r"], k_e=params["k_e"])
        t0 = time.perf_counter()
        try:
            hierarchy = default_setup(
                zhat, even_grid(dims), cparams,
                np.random.default_rng([seed, cfg.sweep_count, shift_idx, 1]),
                schedule=params["setup"],
            )
            sigma_est = float(np.min(np.abs(hierarchy.finest().ritz)))
        except Exception as exc:  # noqa: BLE001 - per-run failures become flagged rows
            for solver in params["solvers"]:
                if solver in ("bamg", "bamg-gmres32"):
                    rows.append(base | {"solver": solver, "failed": True, "rho_source": repr(exc)})
            hierarchy = None
        setup_secs = time.perf_counter() - t0 if timings else 0.0

    for solver in params["solvers"]:
        if solver in ("bamg", "bamg-gmres32") and hierarchy is None:
            continue  # failure rows already recorded
        row = dict(base)
        row["solver"] = solver
        row["failed"] = False
        t0 = time.perf_counter()
        try:
            if solver == "cgnr":
                x, rep = cgnr(oe.dhat, b_hat, params["tol"], params["max_iter"])
                row |= {
                    "iterations": rep.iterations,
                    "converged": rep.converged,
                    "rel_residual": rep.relative_residual,
                    "rel_error": float(np.linalg.norm(x - x_true) / np.linalg.norm(x_true)),
                }
            elif solver == "gmres32":
                x, rep = gmres_restarted(oe.dhat, b_hat, 32, params["tol"], params["max_iter"])
                row |= {
                    "iterations": rep.iterations,
                    "converged": rep.converged,
                    "rel_residual": rep.relative_residual,
                    "rel_error": float(np.linalg.norm(x - x_true) / np.linalg.norm(x_true)),
                }
            elif solver == "bamg":
                x, rep = mg_solve(
                    hierarchy, zb, params["tol"], params["mg_max_iter"], x_true=x_true
                )
                row |= {
                    "iterations": rep.iterations,
                    "converged": rep.converged,
                    "rel_residual": rep.relative_residual,
                    "rel_error": rep.relative_error,
                    "rho": rep.rho_error if rep.rho_error is not None else rep.rho_residual,
                    "rho_source": "error" if rep.rho_error is not None else "residual",
                    "sigma_min_est": sigma_est,
                    "setup_seconds": setup_secs,
                }
            elif solver == "bamg-gmres32":
                h = hierarchy
                zeros = np.zeros(nvars, dtype=complex)
                precond = lambda r: solve_cycle(h, 0, zeros, gamma5_multiply(oe.gamma_e, r), 4, 4, 2)
                x, rep = gmres_restarted(
                    oe.dhat, b_hat, 32, params["tol"], params["max_iter"], preconditioner=precond
                )
                row |= {
                    "iterations": rep.iterations,
                    "converged": rep.converged,
                    "rel_residual": rep.relative_residual,
                    "rel_error": float(np.linalg.norm(x - x_true) / np.linalg.norm(x_true)),
                    "sigma_min_est": sigma_est,
                    "setup_seconds": setup_secs,
                }
            else:
                raise ValueError(f"unknown solver {solver!r}")
        except DivergenceError as exc:
            row |= {"failed": True, "rho_source": f"diverged: {exc}"}
        row["solve_seconds"] = (time.perf_counter() - t0) if timings else 0.0
        rows.append(row)
    return rows


def _solve_tasks(params, betas) -> list[dict]:
    tasks = []
    for beta in betas:
        paths = ensure_ensemble(params, beta)
        for path in paths:
            cfg = load_config(path)
            eta0, eta_source = _eta_floor(cfg, cfg.dims)
            if params["shifts"] is not None:
                points = [(k, m, eta0 + m) for k, m in enumerate(params["shifts"])]
            else:
                points = [(k, eta - eta0, eta) for k, eta in enumerate(params["eta_targets"])]
            for k, m, eta in points:
                tasks.append(
                    {
                        "params": params,
                        "path": str(path),
                        "beta": beta,
                        "shift_idx": k,
                        "m": m,
                        "eta": eta,
                        "eta_source": eta_source,
                    }
                )
    return tasks


def _run_tasks(params, tasks) -> list[dict]:
    if params["workers"] > 1:
        with ProcessPoolExecutor(max_workers=params["workers"]) as pool:
            chunks = list(pool.map(_run_point, tasks))
    else:
        chunks = [_run_point(t) for t in tasks]
    rows = [r for chunk in chunks for r in chunk]
    solver_rank = {s: i for i, s in enumerate(params["solvers"])}
    rows.sort(
        key=lambda r: (r["beta"], r["config_id"], r["m"], solver_rank.get(r["solver"], 99))
    )
    return rows


def cmd_solve(params) -> list[dict]:
    rows = _run_tasks(params, _solve_tasks(params, [params["beta"]]))
    write_csv(params["out"], CSV_COLUMNS, rows)
    return rows


def cmd_sweep(params) -> list[dict]:
    betas = params["betas"] or [params["beta"]]
    rows = _run_tasks(params, _solve_tasks(params, betas))
    write_csv(params["out"], CSV_COLUMNS, rows)
    return rows


def _participation(weights: np.ndarray) -> float:
    total = float(np.sum(weights))
    if total <= 0:
        return 0.0
    return total * total / (weights.size * float(np.sum(weights**2)))


def cmd_spectrum(params) -> list[dict]:
    n = params["n"]
    if n > 64:
        raise ValueError("spectrum study is limited to n <= 64")
    dims = LatticeDims(n)
    m = params["spectrum_shift"]
    rows = []
    paths = ensure_ensemble(params)
    field_dir = params["field_dir"]
    for path in paths:
        cfg = load_config(path)
        cfg_hash = hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]
        base = {
            "schema_version": SCHEMA_VERSION,
            "n": n,
            "beta": params["beta"],
            "config_id": cfg.sweep_count,
            "config_hash": cfg_hash,
            "seed": params["seed"],
            "m": m,
        }
        D = assemble_wilson(cfg, m)
        Z = form_z(D, np.tile([1.0, -1.0], dims.n_sites))
        w, v = np.linalg.eigh(Z.toarray())
        order = np.argsort(np.abs(w))[: params["spectrum_k"]]
        for rank, j in enumerate(order):
            site_w = np.abs(v[0::2, j]) ** 2 + np.abs(v[1::2, j]) ** 2
            rows.append(
                base
                | {
                    "row_type": "sigma",
                    "k": rank,
                    "sigma": float(np.abs(w[j])),
                    "participation": _participation(site_w),
                }
            )
        if field_dir is not None:
            Path(field_dir).mkdir(parents=True, exist_ok=True)
            for mode in params["field_modes"]:
                j = order[mode]
                for spin in (0, 1):
                    grid = np.abs(v[spin::2, j]).reshape(n, n)
                    fname = Path(field_dir) / (
                        f"mode_n{n}_b{params['beta']:g}_{cfg.sweep_count}_k{mode}_s{spin}.txt"
                    )
                    np.savetxt(fname, grid, fmt="%.17g")
        if n <= 32:
            lam = np.sort_complex(spectrum_dense(D))
            for rank, ev in enumerate(lam):
                rows.append(
                    base
                    | {"row_type": "eigenvalue", "k": rank, "re": float(ev.real), "im": float(ev.imag)}
                )
    write_csv(params["out"], SPECTRUM_COLUMNS, rows)
    return rows


def load_params(args) -> dict:
    params = dict(DEFAULTS)
    if args.config:
        with open(args.config) as f:
            loaded = json.load(f)
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        params.update(loaded)
    for key in ("out", "seed", "workers"):
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    if getattr(args, "no_timings", False):
        params["timings"] = False
    return params


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="wilsonmg", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("generate", "solve", "sweep", "spectrum"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment description")
        p.add_argument("--out", help="output CSV path")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--no-timings", action="store_true", help="write 0.0 timings (byte-reproducible CSV)")
    args = ap.parse_args(argv)
    cmd = {"generate": cmd_generate, "solve": cmd_solve, "sweep": cmd_sweep, "spectrum": cmd_spectrum}
    try:
        cmd[args.command](load_params(args))
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
