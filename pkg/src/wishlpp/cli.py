"""Experiment runner: `wishlpp sample` and `wishlpp verify`.

Configuration comes from a YAML (or JSON) file plus command-line overrides;
every output embeds the fully resolved configuration and root seed so runs
can be reproduced exactly.  Exit codes: 0 all checks passed / sampling done,
1 at least one check failed, 2 configuration error, 3 I/O error.

Replicate r of experiment kind e always draws from stream path [e, r], so
sample files are byte-identical for any worker count (workers are set with
the WISHLPP_WORKERS environment variable).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import yaml

from . import __version__, checks, lpp, rsk
from .errors import ConfigError, WishlppError
from .sampling import ParameterSet, RngStream, sample_complex_gaussian, sample_exponential, sample_geometric

SAMPLE_KINDS = {"wishart": 0, "lpp": 1, "geometric-lpp": 2}
SUITES = {"identity": 10, "kernel": 11, "rsk": 12, "hciz": 13, "rn": 14, "geometric-limit": 15}
WORKERS_ENV = "WISHLPP_WORKERS"


@dataclass
class ExperimentConfig:
    kind: str = ""
    suite: str = ""
    dim: int = 2
    horizon: int = 5
    grid: list = field(default_factory=list)
    pi: list = field(default_factory=list)
    pihat: list = field(default_factory=list)
    reps: int = 1000
    alpha: float = 0.01
    seed: int = 0
    out: str = ""
    scale: float = 2000.0
    permutations: int = 500
    sweep: int = 10
    z: list = field(default_factory=list)

    def resolved(self) -> dict:
        return asdict(self)


_KEY_ALIASES = {"N": "dim", "n": "horizon", "L": "scale", "root_seed": "seed"}


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    raw = {}
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path!r} must hold a mapping")
        raw.update(loaded)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig()
    known = set(cfg.resolved())
    for key, value in raw.items():
        key = _KEY_ALIASES.get(key, key)
        if key not in known:
            raise ConfigError(f"unknown configuration key {key!r}")
        setattr(cfg, key, value)
    return _validate(cfg)


def _validate(cfg: ExperimentConfig) -> ExperimentConfig:
    try:
        cfg.dim = int(cfg.dim)
        cfg.horizon = int(cfg.horizon)
        cfg.reps = int(cfg.reps)
        cfg.seed = int(cfg.seed)
        cfg.alpha = float(cfg.alpha)
        cfg.scale = float(cfg.scale)
        cfg.permutations = int(cfg.permutations)
        cfg.sweep = int(cfg.sweep)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed numeric field: {exc}") from exc
    if cfg.dim < 1:
        raise ConfigError("N must be >= 1")
    if cfg.horizon < 0:
        raise ConfigError("horizon must be >= 0")
    if cfg.reps < 0:
        raise ConfigError("reps must be >= 0")
    if not 0.0 < cfg.alpha < 1.0:
        raise ConfigError("alpha must lie in (0, 1)")
    if not cfg.pi:
        cfg.pi = [1.0] * cfg.dim
    if not cfg.pihat:
        cfg.pihat = [0.0] * max(cfg.horizon, 1)
    if not cfg.grid:
        cfg.grid = [cfg.horizon] if cfg.horizon >= 1 else []
    cfg.grid = [int(t) for t in cfg.grid]
    if any(t < 1 or t > cfg.horizon for t in cfg.grid):
        raise ConfigError("grid times must lie in 1..horizon")
    if len(cfg.pi) != cfg.dim:
        raise ConfigError(f"pi must have length N={cfg.dim}")
    try:
        params = ParameterSet(np.array(cfg.pi, dtype=float), np.array(cfg.pihat, dtype=float))
        params.require_horizon(max(cfg.grid) if cfg.grid else 0)
    except WishlppError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.z:
        cfg.z = [float(v) for v in cfg.z]
        if len(cfg.z) != cfg.dim or any(np.diff(cfg.z) >= 0):
            raise ConfigError("z must be a strictly decreasing vector of length N")
    return cfg


def _params(cfg: ExperimentConfig) -> ParameterSet:
    return ParameterSet(np.array(cfg.pi, dtype=float), np.array(cfg.pihat, dtype=float))


# ---------------------------------------------------------------------------
# sample

def _observable_row(cfg_dict: dict, rep: int) -> list:
    """Observable at each grid time for one replicate; pure function of (config, rep)."""
    cfg = ExperimentConfig(**cfg_dict)
    params = _params(cfg)
    stream = RngStream(cfg.seed, (SAMPLE_KINDS[cfg.kind], rep))
    n = max(cfg.grid)
    cols_idx = [t - 1 for t in cfg.grid]
    if cfg.kind == "wishart":
        a = sample_complex_gaussian(stream, params.rate_matrix(n))
        out = []
        for t in cfg.grid:
            m = a[:, :t] @ a[:, :t].conj().T
            out.append(float(np.linalg.eigvalsh(m)[-1]))
        return out
    if cfg.kind == "lpp":
        w = sample_exponential(stream, params.rate_matrix(n))
        return [float(v) for v in lpp.lpp_grid(w)[-1, cols_idx]]
    _, _, p = lpp.geometric_parameters(params, n, cfg.scale)
    w = sample_geometric(stream, p)
    return [float(v) / cfg.scale for v in lpp.lpp_grid(w.astype(float))[-1, cols_idx]]


def _sample_chunk(cfg_dict: dict, lo: int, hi: int) -> list:
    return [_observable_row(cfg_dict, rep) for rep in range(lo, hi)]


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        workers = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    if workers < 1:
        raise ConfigError(f"{WORKERS_ENV} must be >= 1")
    return workers


def run_sample(cfg: ExperimentConfig) -> int:
    if cfg.kind not in SAMPLE_KINDS:
        raise ConfigError(
            f"kind must be one of {sorted(SAMPLE_KINDS)}, got {cfg.kind!r}"
        )
    if not cfg.grid:
        raise ConfigError("sampling needs a nonempty time grid")
    if not cfg.out:
        raise ConfigError("an output path is required (--out or config 'out')")
    cfg_dict = cfg.resolved()
    workers = _worker_count()
    rows: list = []
    if cfg.reps:
        if workers == 1:
            rows = _sample_chunk(cfg_dict, 0, cfg.reps)
        else:
            bounds = np.linspace(0, cfg.reps, workers + 1).astype(int)
            spans = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if a < b]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_sample_chunk, cfg_dict, a, b) for a, b in spans]
                for fut in futures:
                    rows.extend(fut.result())
    header = "rep," + ",".join(f"t{t}" for t in cfg.grid)
    with open(cfg.out, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for rep, row in enumerate(rows):
            fh.write(f"{rep}," + ",".join(f"{v:.17g}" for v in row) + "\n")
    return 0


# ---------------------------------------------------------------------------
# verify

def _suite_identity(cfg: ExperimentConfig, stream: RngStream) -> list:
    params = _params(cfg)
    reports = checks.theorem1_marginal_checks(params, cfg.grid, cfg.reps, cfg.alpha, stream.child(0))
    if len(cfg.grid) >= 2:
        reports += checks.theorem1_process_checks(
            params, cfg.grid, min(cfg.reps, 20_000), cfg.permutations, cfg.alpha, stream.child(1)
        )
    return reports


def _suite_kernel(cfg: ExperimentConfig, stream: RngStream) -> list:
    params = _params(cfg)
    z = np.array(cfg.z, dtype=float) if cfg.z else np.arange(cfg.dim, 0, -1, dtype=float)
    pihat_1 = params.pihat[0] if params.pihat.size else 0.0
    reports = []
    if cfg.dim == 2:
        reports.append(
            checks.one_step_kernel_check(z, params.pi, pihat_1, cfg.reps, cfg.alpha, stream.child(0))
        )
    method = "quadrature" if cfg.dim == 2 else "cauchy_binet"
    tol = 1e-7 if cfg.dim == 2 else 1e-5
    reports.append(checks.normalization_sweep(cfg.dim, cfg.sweep, method, tol, stream.child(1)))
    t = max(cfg.grid) if cfg.grid else cfg.horizon
    reports.append(
        checks.bottom_row_process_check(
            params, t, min(cfg.reps, 10_000), cfg.permutations, cfg.alpha, stream.child(2)
        )
    )
    return reports


def _suite_rsk(cfg: ExperimentConfig, stream: RngStream) -> list:
    gen = stream.child(0).generator
    instances = gen.integers(0, 4, size=(200, 3, 3))
    a = np.full(2, 0.5)
    b = np.full(max(cfg.horizon, 2), 0.5)
    return [
        checks.rsk_exactness_check((4, 6), 200, 1e-12, stream.child(1)),
        checks.greene_consistency_check(instances),
        checks.schur_bialternant_check(20, 1e-10, stream.child(2)),
        rsk.rsk_chain_check(a, b, 2, cfg.reps, stream.child(3), alpha=cfg.alpha, m_star=2),
    ]


def _suite_hciz(cfg: ExperimentConfig, stream: RngStream) -> list:
    gen = stream.child(0).generator
    mu = np.sort(gen.uniform(0.5, 3.0, cfg.dim))[::-1]
    pi = np.array(cfg.pi, dtype=float)
    rel_tol = 0.01 if cfg.dim <= 2 else 0.02
    return [checks.hciz_check(pi, mu, cfg.reps, rel_tol, stream.child(1))]


def _suite_rn(cfg: ExperimentConfig, stream: RngStream) -> list:
    params = _params(cfg)
    t = min(max(cfg.grid) if cfg.grid else 2, 2)
    return checks.importance_sampling_checks(params, t, cfg.reps, stream.child(0)) + [
        checks.rn_spectra_identity_check(params, min(cfg.horizon, 4), 100, 1e-10, stream.child(1))
    ]


def _suite_geometric_limit(cfg: ExperimentConfig, stream: RngStream) -> list:
    params = _params(cfg)
    t = max(cfg.grid) if cfg.grid else cfg.horizon
    return [
        checks.geometric_limit_check(params, t, cfg.scale, cfg.reps, cfg.alpha, stream.child(0))
    ]


_SUITE_RUNNERS = {
    "identity": _suite_identity,
    "kernel": _suite_kernel,
    "rsk": _suite_rsk,
    "hciz": _suite_hciz,
    "rn": _suite_rn,
    "geometric-limit": _suite_geometric_limit,
}


def run_verify(cfg: ExperimentConfig) -> int:
    if cfg.suite not in SUITES:
        raise ConfigError(f"suite must be one of {sorted(SUITES)}, got {cfg.suite!r}")
    if not cfg.out:
        raise ConfigError("an output path is required (--out or config 'out')")
    stream = RngStream(cfg.seed, (SUITES[cfg.suite],))
    reports = _SUITE_RUNNERS[cfg.suite](cfg, stream)
    payload = {
        "suite": cfg.suite,
        "version": __version__,
        "config": cfg.resolved(),
        "checks": [r.to_dict() for r in reports],
    }
    with open(cfg.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    all_good = all(r.passed for r in reports)
    for r in reports:
        marker = "PASS" if r.passed else ("INCONCLUSIVE" if r.inconclusive else "FAIL")
        print(f"[{marker}] {r.test_name}: statistic={r.statistic:.6g} threshold={r.threshold:.6g}")
    return 0 if all_good else 1


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wishlpp",
        description="Simulate and statistically verify the eigenvalue/passage-time model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("sample", "write per-replicate observables at the grid times to CSV"),
        ("verify", "run a verification suite and write a JSON report"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML/JSON configuration file")
        p.add_argument("--seed", type=int, help="root seed override")
        p.add_argument("--reps", type=int, help="replicate count override")
        p.add_argument("--out", help="output path override")
        p.add_argument("--alpha", type=float, help="test level override")
        if name == "verify":
            p.add_argument("--suite", help="suite name override")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {
        "seed": args.seed,
        "reps": args.reps,
        "out": args.out,
        "alpha": args.alpha,
    }
    if args.command == "verify":
        overrides["suite"] = args.suite
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "sample":
            return run_sample(cfg)
        return run_verify(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())
