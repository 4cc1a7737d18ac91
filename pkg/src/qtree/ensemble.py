"""Deterministic Monte Carlo over scale-free-tree realizations.

Each realization gets its own seed derived injectively from the master
seed and the realization index, so results are bit-identical no matter
how the work is distributed across processes.  Aggregation always runs
in index order.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from multiprocessing import Pool
from pathlib import Path

from .efficiency import (
    FORCE_ZERO,
    USE_MEASURED,
    avg_f_sft,
    chi_lower_from_density,
    chi_sft_finite,
    chi_sft_infinite,
    chi_structural,
)
from .errors import (
    DegenerateAverageError,
    InvalidParameterError,
    NoParentsError,
    OutOfDomainError,
    QtreeError,
    SizeLimitError,
)
from .graphs import FORMAT_HEADER, generate_sft, structural_stats
from .spectral import (
    CONNECTIVITY,
    DENSE_SOLVER_LIMIT,
    bin_degeneracies,
    build_hamiltonian,
    default_degeneracy_tol,
    eigendecompose,
)

SPECTRAL_EXACT = "spectral-exact"
STRUCTURAL_DELTA0 = "structural-delta0"
STRUCTURAL_MEASURED = "structural-measured"
ESTIMATORS = (SPECTRAL_EXACT, STRUCTURAL_DELTA0, STRUCTURAL_MEASURED)

WORKERS_ENV_VAR = "QTREE_WORKERS"

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class EnsembleConfig:
    n: int
    s: float
    f_max: int | None = None  # None means n - 1
    r: int = 1
    master_seed: int = 0
    estimator: str = STRUCTURAL_DELTA0

    def resolved_f_max(self) -> int:
        return self.n - 1 if self.f_max is None else self.f_max


@dataclass(frozen=True)
class EnsembleResult:
    mean_one_minus_chi_lb: float
    std_error: float
    realized_avg_f_mean: float
    config: EnsembleConfig
    per_realization: tuple[float, ...] | None = None


def realization_seed(master_seed: int, index: int) -> int:
    """Stable 64-bit per-realization seed, injective in index."""
    return _splitmix64((master_seed & _MASK64) ^ _splitmix64(index & _MASK64))


def _check_config(cfg: EnsembleConfig) -> None:
    if cfg.r < 1:
        raise InvalidParameterError(f"realization count must be >= 1, got {cfg.r}")
    if cfg.estimator not in ESTIMATORS:
        raise InvalidParameterError(
            f"unknown estimator {cfg.estimator!r}; choose one of {ESTIMATORS}"
        )
    if cfg.estimator == SPECTRAL_EXACT and cfg.n > DENSE_SOLVER_LIMIT:
        raise SizeLimitError(
            f"spectral-exact estimator needs n <= {DENSE_SOLVER_LIMIT}, got {cfg.n}"
        )


def _realize(args: tuple[EnsembleConfig, int]) -> tuple[float, float]:
    """One realization: (1 - chi lower bound, realized mean non-leaf functionality)."""
    cfg, index = args
    g = generate_sft(cfg.n, cfg.s, cfg.resolved_f_max(), realization_seed(cfg.master_seed, index))
    try:
        st = structural_stats(g)
    except NoParentsError:
        # tiny trees without parents contribute a zero structural density
        return 1.0 - chi_lower_from_density(0.0, cfg.n), float("nan")
    if cfg.estimator == SPECTRAL_EXACT:
        h = build_hamiltonian(g, CONNECTIVITY)
        es = eigendecompose(h)
        sp = bin_degeneracies(es, default_degeneracy_tol(es))
        value = chi_lower_from_density(sp.density_at(h.e_star), cfg.n)
    else:
        mode = FORCE_ZERO if cfg.estimator == STRUCTURAL_DELTA0 else USE_MEASURED
        value = chi_structural(st, cfg.n, mode)
    return 1.0 - value, st.avg_f_nonleaf


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        raw = os.environ.get(WORKERS_ENV_VAR, "1")
        try:
            workers = int(raw)
        except ValueError:
            raise InvalidParameterError(
                f"{WORKERS_ENV_VAR}={raw!r} is not an integer"
            ) from None
    if workers < 1:
        raise InvalidParameterError(f"worker count must be >= 1, got {workers}")
    return workers


def run_ensemble(
    cfg: EnsembleConfig,
    workers: int | None = None,
    keep_per_realization: bool = False,
) -> EnsembleResult:
    """Average 1 - chi_lb over r seeded realizations.

    The per-realization values depend only on the config, never on the
    worker count; rerunning with any parallelism reproduces the result
    bit for bit.
    """
    _check_config(cfg)
    workers = resolve_workers(workers)
    tasks = [(cfg, i) for i in range(cfg.r)]
    if workers > 1 and cfg.r > 1:
        chunk = max(1, cfg.r // (workers * 8))
        with Pool(workers) as pool:
            raw = pool.map(_realize, tasks, chunksize=chunk)
    else:
        raw = [_realize(t) for t in tasks]
    values = [v for v, _ in raw]
    avg_fs = [a for _, a in raw if not math.isnan(a)]
    mean = math.fsum(values) / cfg.r  # fsum: exactly rounded, order independent
    if cfg.r > 1:
        variance = math.fsum((v - mean) ** 2 for v in values) / (cfg.r - 1)
        std_error = math.sqrt(variance / cfg.r)
    else:
        std_error = 0.0
    return EnsembleResult(
        mean_one_minus_chi_lb=mean,
        std_error=std_error,
        realized_avg_f_mean=math.fsum(avg_fs) / len(avg_fs) if avg_fs else float("nan"),
        config=cfg,
        per_realization=tuple(values) if keep_per_realization else None,
    )


@dataclass(frozen=True)
class SweepRow:
    s: float
    n: int
    f_max: int
    r: int
    avg_f_analytic: float | None
    one_minus_chi_mc_mean: float | None
    one_minus_chi_mc_stderr: float | None
    one_minus_chi_analytic_finite: float | None
    one_minus_chi_analytic_infinite: float | None
    status: str


_ERROR_NAMES = {
    DegenerateAverageError: "degenerate-average",
    SizeLimitError: "size-limit",
    InvalidParameterError: "invalid-parameter",
    NoParentsError: "no-parents",
    OutOfDomainError: "out-of-domain",
}


def _error_name(exc: Exception) -> str:
    return _ERROR_NAMES.get(type(exc), type(exc).__name__)


def sweep(cfgs: list[EnsembleConfig], workers: int | None = None) -> list[SweepRow]:
    """Run one ensemble per config; errors flag the row, never abort the sweep."""
    if not cfgs:
        raise InvalidParameterError("sweep needs at least one config")
    rows = []
    for cfg in cfgs:
        status = "ok"
        f_max = cfg.resolved_f_max()
        avg_f = mc_mean = mc_err = finite = infinite = None
        try:
            avg_f = avg_f_sft(cfg.s, f_max)
            finite = 1.0 - chi_sft_finite(cfg.s, f_max, cfg.n)
        except QtreeError as exc:
            status = _error_name(exc)
        if cfg.s > 2:
            infinite = 1.0 - chi_sft_infinite(cfg.s)
        try:
            result = run_ensemble(cfg, workers=workers)
            mc_mean = result.mean_one_minus_chi_lb
            mc_err = result.std_error
        except QtreeError as exc:
            status = _error_name(exc) if status == "ok" else status
        rows.append(
            SweepRow(
                s=cfg.s,
                n=cfg.n,
                f_max=f_max,
                r=cfg.r,
                avg_f_analytic=avg_f,
                one_minus_chi_mc_mean=mc_mean,
                one_minus_chi_mc_stderr=mc_err,
                one_minus_chi_analytic_finite=finite,
                one_minus_chi_analytic_infinite=infinite,
                status=status,
            )
        )
    return rows


SWEEP_COLUMNS = (
    "s,n,f_max,r,avg_f_analytic,one_minus_chi_mc_mean,one_minus_chi_mc_stderr,"
    "one_minus_chi_analytic_finite,one_minus_chi_analytic_infinite,status"
)


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def sweep_csv_text(rows: list[SweepRow]) -> str:
    lines = [FORMAT_HEADER, SWEEP_COLUMNS]
    for row in rows:
        lines.append(
            ",".join(
                _cell(v)
                for v in (
                    row.s,
                    row.n,
                    row.f_max,
                    row.r,
                    row.avg_f_analytic,
                    row.one_minus_chi_mc_mean,
                    row.one_minus_chi_mc_stderr,
                    row.one_minus_chi_analytic_finite,
                    row.one_minus_chi_analytic_infinite,
                    row.status,
                )
            )
        )
    return "\n".join(lines) + "\n"


def write_sweep_csv(rows: list[SweepRow], path: str | Path) -> None:
    Path(path).write_text(sweep_csv_text(rows), encoding="utf-8")
