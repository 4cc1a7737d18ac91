"""Command-line front end.

One command produces one data file plus one manifest recording the
command, its full parameter set, the artifact version, the output paths
and the wall-clock duration.  `qtree rerun <manifest>` re-executes a
recorded command; deterministic commands reproduce their outputs byte
for byte, and the worker count never changes output bytes.

Exit codes: 0 success, 2 invalid parameters or usage, 3 I/O failure,
4 size limit exceeded, 5 every sweep row failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .efficiency import (
    default_time_grid,
    efficiency_report,
    kappa_fit,
    return_amplitude_series,
    mean_return_probability_series,
    time_average,
    chi_exact,
)
from .ensemble import (
    ESTIMATORS,
    STRUCTURAL_DELTA0,
    WORKERS_ENV_VAR,
    EnsembleConfig,
    resolve_workers,
    sweep,
    sweep_csv_text,
)
from .errors import (
    DegenerateAverageError,
    IncompletePotentialError,
    InvalidParameterError,
    NoParentsError,
    OutOfDomainError,
    SizeLimitError,
    UnsupportedExactModeError,
)
from .graphs import (
    FORMAT_HEADER,
    edge_list_text,
    generate_chain,
    generate_dendrimer,
    generate_sft,
    generate_star,
    generate_vicsek,
    read_edge_list,
)
from .spectral import (
    ADJACENCY,
    CONNECTIVITY,
    DENSE_SOLVER_LIMIT,
    bin_degeneracies,
    build_hamiltonian,
    custom_potential,
    default_degeneracy_tol,
    eigendecompose,
    spectrum_csv_text,
)

MANIFEST_FORMAT = "qtree-manifest-1"


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _write_text(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _write_manifest(command: str, params: dict, outputs: list[str],
                    master_seed: int | None, started: float) -> str:
    manifest = {
        "format": MANIFEST_FORMAT,
        "command": command,
        "version": __version__,
        "params": params,
        "master_seed": master_seed,
        "outputs": outputs,
        "duration_seconds": time.monotonic() - started,
    }
    path = outputs[0] + ".manifest.json"
    _write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _parse_potential(choice: str):
    if choice == "connectivity":
        return CONNECTIVITY
    if choice == "adjacency":
        return ADJACENCY
    if choice.startswith("custom="):
        table = {}
        text = Path(choice.removeprefix("custom=")).read_text(encoding="utf-8")
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise InvalidParameterError(f"bad potential table line: {raw!r}")
            table[int(parts[0])] = float(parts[1])
        return custom_potential(table)
    raise InvalidParameterError(
        f"unknown potential {choice!r}; use connectivity, adjacency or custom=<path>"
    )


# --- runners (shared by the subcommands and `rerun`) -------------------------

_FAMILY_FLAGS = {
    "chain": ("n",),
    "star": ("n",),
    "dendrimer": ("f", "g"),
    "vicsek": ("f", "g"),
    "sft": ("n", "s"),
}


def run_gen(params: dict) -> int:
    started = time.monotonic()
    family = params["family"]
    required = _FAMILY_FLAGS.get(family)
    if required is None:
        raise InvalidParameterError(f"unknown family {family!r}")
    missing = [flag for flag in required if params.get(flag) is None]
    if missing:
        raise InvalidParameterError(
            f"family {family!r} needs --" + " --".join(missing)
        )
    if family == "chain":
        g = generate_chain(int(params["n"]))
    elif family == "star":
        g = generate_star(int(params["n"]))
    elif family == "dendrimer":
        g = generate_dendrimer(int(params["f"]), int(params["g"]))
    elif family == "vicsek":
        g = generate_vicsek(int(params["f"]), int(params["g"]))
    elif family == "sft":
        g = generate_sft(
            int(params["n"]),
            float(params["s"]),
            None if params.get("f_max") is None else int(params["f_max"]),
            int(params.get("seed") or 0),
        )
    out = params["out"]
    _write_text(out, edge_list_text(g))
    _write_manifest("gen", params, [out],
                    int(params.get("seed") or 0) if family == "sft" else None, started)
    return 0


def run_chi(params: dict) -> int:
    started = time.monotonic()
    g = read_edge_list(params["in"])
    potential = _parse_potential(params.get("potential", "connectivity"))
    try:
        report = efficiency_report(
            g,
            potential,
            tol_abs=params.get("tol_abs"),
            size_limit=int(params.get("size_limit") or DENSE_SOLVER_LIMIT),
        )
    except SizeLimitError as exc:
        raise SizeLimitError(
            f"{exc}; rerun with a larger --size-limit or use "
            "`qtree sweep --estimator structural-delta0` for structural-only estimates"
        ) from exc
    out = params["out"]
    payload = asdict(report)
    _write_text(out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    outputs = [out]
    spectrum_out = params.get("spectrum_out")
    if spectrum_out:
        h = build_hamiltonian(g, potential)
        es = eigendecompose(h, size_limit=int(params.get("size_limit") or DENSE_SOLVER_LIMIT))
        tol = params.get("tol_abs") or default_degeneracy_tol(es)
        _write_text(spectrum_out, spectrum_csv_text(bin_degeneracies(es, tol)))
        outputs.append(spectrum_out)
    _write_manifest("chi", params, outputs, None, started)
    return 0


def run_sweep(params: dict) -> int:
    started = time.monotonic()
    n = int(params["n"])
    s_grid = [float(v) for v in str(params["s_grid"]).split(",") if v.strip()]
    if not s_grid:
        raise InvalidParameterError("empty s grid")
    if params.get("paper_r"):
        r = max(1, round(1_000_000 / n))
    else:
        r = int(params["r"])
    f_max = None if params.get("f_max") is None else int(params["f_max"])
    cfgs = [
        EnsembleConfig(
            n=n,
            s=s,
            f_max=f_max,
            r=r,
            master_seed=int(params.get("seed") or 0),
            estimator=params.get("estimator", STRUCTURAL_DELTA0),
        )
        for s in s_grid
    ]
    rows = sweep(cfgs, workers=params.get("workers"))
    out = params["out"]
    _write_text(out, sweep_csv_text(rows))
    _write_manifest("sweep", params, [out], int(params.get("seed") or 0), started)
    if all(row.status != "ok" for row in rows):
        print("qtree: every sweep row failed", file=sys.stderr)
        return 5
    return 0


def run_fit_kappa(params: dict) -> int:
    started = time.monotonic()
    x_col = params.get("x_column", "s")
    y_col = params["y_column"]
    offset = float(params.get("offset") or 0.0)
    invert = bool(params.get("invert_x"))
    x_min = params.get("x_min")
    x_max = params.get("x_max")

    text = Path(params["in"]).read_text(encoding="utf-8")
    data_lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    reader = csv.DictReader(io.StringIO("\n".join(data_lines)))
    points = []
    for row in reader:
        if row.get("status") not in (None, "", "ok"):
            continue
        try:
            x = float(row[x_col])
            y = float(row[y_col])
        except (KeyError, TypeError, ValueError):
            continue
        x -= offset
        if invert:
            if x == 0:
                continue
            x = 1.0 / x
        if x <= 0 or y <= 0:
            continue
        if x_min is not None and x < float(x_min):
            continue
        if x_max is not None and x > float(x_max):
            continue
        points.append((x, y))
    if len(points) < 3:
        raise InvalidParameterError(
            f"need at least 3 usable rows, found {len(points)} "
            f"(columns {x_col!r}/{y_col!r})"
        )
    fit = kappa_fit(points)
    out = params["out"]
    payload = {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "residual": fit.residual,
        "window": [list(p) for p in fit.window],
        "points_used": len(points),
    }
    _write_text(out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _write_manifest("fit-kappa", params, [out], None, started)
    return 0


def run_timeseries(params: dict) -> int:
    started = time.monotonic()
    g = read_edge_list(params["in"])
    potential = _parse_potential(params.get("potential", "connectivity"))
    h = build_hamiltonian(g, potential)
    es = eigendecompose(h)
    samples = int(params.get("samples") or 10_000)
    if params.get("t_max") is not None:
        times = np.linspace(0.0, float(params["t_max"]), samples)
    else:
        times = default_time_grid(es, samples)
    sp = bin_degeneracies(es, default_degeneracy_tol(es))
    alpha2 = return_amplitude_series(sp, times)
    pibar = mean_return_probability_series(es, times)
    lines = [FORMAT_HEADER, "t,abs_alpha_sq,pi_bar"]
    for t, a, p in zip(times, alpha2, pibar):
        lines.append(f"{_fmt(t)},{_fmt(a)},{_fmt(p)}")
    lines.append(
        "# time_average_abs_alpha_sq={} time_average_pi_bar={} chi_exact={}".format(
            _fmt(time_average(alpha2, times)),
            _fmt(time_average(pibar, times)),
            _fmt(chi_exact(sp)),
        )
    )
    out = params["out"]
    _write_text(out, "\n".join(lines) + "\n")
    _write_manifest("timeseries", params, [out], None, started)
    return 0


_RUNNERS = {
    "gen": run_gen,
    "chi": run_chi,
    "sweep": run_sweep,
    "fit-kappa": run_fit_kappa,
    "timeseries": run_timeseries,
}


def run_rerun(params: dict) -> int:
    try:
        manifest = json.loads(Path(params["manifest"]).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise InvalidParameterError(f"unreadable manifest: {exc}") from exc
    if not isinstance(manifest, dict) or manifest.get("format") != MANIFEST_FORMAT:
        raise InvalidParameterError(f"not a {MANIFEST_FORMAT} manifest")
    command = manifest.get("command")
    if command not in _RUNNERS:
        raise InvalidParameterError(f"manifest names unknown command {command!r}")
    stored = dict(manifest.get("params") or {})
    if params.get("out") is not None:
        stored["out"] = params["out"]
    if params.get("workers") is not None:
        stored["workers"] = params["workers"]
    return _RUNNERS[command](stored)


# --- argument parsing ---------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qtree",
        description="Quantum-walk transport efficiency on tree networks",
    )
    parser.add_argument("--version", action="version", version=f"qtree {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a tree and write its edge list")
    p.add_argument("--family", required=True,
                   choices=["chain", "star", "dendrimer", "vicsek", "sft"])
    p.add_argument("--n", type=int, help="node count (chain, star, sft)")
    p.add_argument("--f", type=int, help="functionality (dendrimer, vicsek)")
    p.add_argument("--g", type=int, help="generation (dendrimer, vicsek)")
    p.add_argument("--s", type=float, help="scaling exponent (sft)")
    p.add_argument("--f-max", type=int, help="functionality cap (sft, default n-1)")
    p.add_argument("--seed", type=int, default=0, help="rng seed (sft)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("chi", help="efficiency report for one edge-list file")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--potential", default="connectivity",
                   help="connectivity | adjacency | custom=<table file>")
    p.add_argument("--tol-abs", type=float, help="degeneracy binning tolerance")
    p.add_argument("--size-limit", type=int, default=DENSE_SOLVER_LIMIT)
    p.add_argument("--spectrum-out", help="also export the binned spectrum CSV")
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over the scaling exponent")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s-grid", required=True, help="comma-separated s values")
    p.add_argument("--f-max", type=int)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--r", type=int, help="realizations per s value")
    group.add_argument("--paper-r", action="store_true",
                       help="use r = 10^6 / n realizations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--estimator", default=STRUCTURAL_DELTA0, choices=list(ESTIMATORS))
    p.add_argument("--workers", type=int, help=f"default ${WORKERS_ENV_VAR} or 1")
    p.add_argument("--out", required=True)

    p = sub.add_parser("fit-kappa", help="power-law exponent fit on a sweep CSV")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--y-column", required=True)
    p.add_argument("--x-column", default="s")
    p.add_argument("--offset", type=float, default=0.0,
                   help="subtract this from x before fitting")
    p.add_argument("--invert-x", action="store_true",
                   help="fit against 1/(x - offset)")
    p.add_argument("--x-min", type=float)
    p.add_argument("--x-max", type=float)
    p.add_argument("--out", required=True)

    p = sub.add_parser("timeseries", help="return-probability time series to CSV")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--potential", default="connectivity")
    p.add_argument("--t-max", type=float)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--out", required=True)

    p = sub.add_parser("rerun", help="re-execute a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="override the recorded output path")
    p.add_argument("--workers", type=int)
    return parser


def _params_from_args(args: argparse.Namespace) -> dict:
    params = {}
    for key, value in vars(args).items():
        if key in ("command",):
            continue
        params[key.replace("in_path", "in")] = value
    return params


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    command = args.command
    params = _params_from_args(args)
    try:
        if command == "rerun":
            return run_rerun(params)
        if command == "sweep" and params.get("workers") is not None:
            resolve_workers(params["workers"])
        return _RUNNERS[command](params)
    except (
        InvalidParameterError,
        OutOfDomainError,
        DegenerateAverageError,
        NoParentsError,
        IncompletePotentialError,
        UnsupportedExactModeError,
    ) as exc:
        print(f"qtree: {exc}", file=sys.stderr)
        return 2
    except SizeLimitError as exc:
        print(f"qtree: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"qtree: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
