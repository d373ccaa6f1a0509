"""Command-line experiment runner.

Usage: ``srgg <subcommand> [--config FILE] [--seed N] [--out DIR] [--workers K]``.
Every CSV begins with ``# config_sha256=<hash> seed=<seed>`` where the hash
covers the resolved configuration (worker count and output path excluded).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from .connection import ConnectionProfile, SparsitySchedule, check_assumptions, hstar_integral
from .dsc import DscConfig, is_achievable, rate_region, simulate_dsc
from .errors import ConfigError, ImpossibleRealizationError, NumericError, SrggError
from .geometry import DomainSpec
from .infotheory import conditional_entropy, h_star, normalizer
from .oracle import run_oracle_suite
from .rng import U64_MASK, derive_seed
from .sampler import dumps, sample_srgg

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ORACLE = 0, 2, 3, 4

SUBCOMMANDS = ("sample", "hstar", "limit-sweep", "aep-sweep", "oracle", "rate-region", "dsc-sim")

DEFAULTS = {
    "sample": {"n": 100, "s": 0.1},
    "hstar": {"d": 2},
    "limit-sweep": {"s_grid": [0.2, 0.1, 0.05]},
    "aep-sweep": {"n_grid": [50, 100, 200, 400, 800], "s_grid": [0.05, 0.1], "trials": 1000},
    "oracle": {"n": 4, "s": 0.3, "trials": 10**6},
    "rate-region": {"L": 2, "schedule": {"c": 1.0, "beta": 0.25, "d": 2}, "rates": None},
    "dsc-sim": {"n": 6, "L": 2, "schedule": {"c": 0.6, "beta": 0.25, "d": 2}, "rates": None,
                "gammas": [0.25, 0.5, 1.0, 2.0], "epsilon": 0.8, "center": "hstar",
                "trials": 1000, "mode": "genie", "table_trials": 10**5},
}
COMMON = {"domain": "torus2", "profile": "rayleigh", "seed": 0}


# Configuration ---------------------------------------------------------------

def load_config(path, subcommand, seed=None) -> dict:
    """Merge defaults, top-level keys and the subcommand's own section."""
    raw = {}
    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping")
    cfg = dict(COMMON)
    cfg.update(DEFAULTS[subcommand])
    section = raw.get(subcommand, {}) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"section {subcommand!r} must be a mapping")
    known = set(COMMON) | set(DEFAULTS[subcommand])
    for key, val in {**{k: v for k, v in raw.items() if k not in SUBCOMMANDS}, **section}.items():
        if key not in known:
            raise ConfigError(f"unknown key {key!r} for {subcommand}")
        cfg[key] = val
    if seed is not None:
        cfg["seed"] = seed
    if not isinstance(cfg["seed"], int) or not 0 <= cfg["seed"] <= U64_MASK:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return cfg


def config_hash(subcommand, cfg) -> str:
    blob = json.dumps({"subcommand": subcommand, **cfg}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def parse_domain(value) -> DomainSpec:
    if isinstance(value, dict):
        return DomainSpec(int(value["d"]), value.get("shape", "cube"))
    return DomainSpec.from_name(str(value))


def parse_profile(value) -> ConnectionProfile:
    if isinstance(value, dict):
        return ConnectionProfile(value["family"], float(value.get("q", 1.0)))
    return ConnectionProfile.from_name(str(value))


def parse_schedule(value) -> SparsitySchedule:
    try:
        return SparsitySchedule(float(value["c"]), float(value["beta"]), int(value["d"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"schedule needs c, beta and d: {value!r}") from exc


# Output ----------------------------------------------------------------------

class Output:
    """Collects named CSV tables; writes them under ``out`` or to stdout."""

    def __init__(self, out, header):
        self.out = Path(out) if out is not None else None
        self.header = header

    def table(self, name, columns, rows):
        buf = io.StringIO()
        buf.write(self.header + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])
        self.emit(f"{name}.csv", buf.getvalue())

    def emit(self, filename, text):
        if self.out is None:
            sys.stdout.write(text)
        else:
            self.out.mkdir(parents=True, exist_ok=True)
            (self.out / filename).write_text(text)


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# Subcommands -----------------------------------------------------------------

def cmd_sample(cfg, out, workers):
    graph = sample_srgg(int(cfg["n"]), parse_domain(cfg["domain"]), parse_profile(cfg["profile"]),
                        float(cfg["s"]), cfg["seed"])
    out.emit("graph.srgg", dumps(graph))
    return EXIT_OK


def cmd_hstar(cfg, out, workers):
    profile = parse_profile(cfg["profile"])
    d = int(cfg["d"])
    value, err = hstar_integral(profile, d)
    report = check_assumptions(profile, d)
    print(f"h* = {value:.9f} +/- {err:.1e} bits ({profile.name}, d={d})", file=sys.stderr)
    for key, ok in report.finite.items():
        print(f"  {key}: {'finite' if ok else 'DIVERGENT'} ({getattr(report, key)!r})", file=sys.stderr)
    rows = [("hstar", value, err)] + [(k, getattr(report, k), report.errors.get(k, 0.0)) for k in ("moment", "log_odds")]
    out.table("hstar", ["quantity", "value", "error"], rows)
    return EXIT_OK


def cmd_limit_sweep(cfg, out, workers):
    domain, profile = parse_domain(cfg["domain"]), parse_profile(cfg["profile"])
    hs = h_star(profile, domain.d)
    rows = []
    for s in cfg["s_grid"]:
        ce = conditional_entropy(domain, profile, 2, float(s))
        rows.append((domain.name, float(s), ce.normalized, hs, hs - ce.normalized, ce.error))
    out.table("limit-sweep", ["domain", "s", "normalized", "hstar", "deficit", "error"], rows)
    return EXIT_OK


def _aep_cell(args):
    from .infotheory import sample_info_density
    n, s, domain, profile, trials, seed = args
    raw = sample_info_density(n, domain, profile, s, trials, seed)
    norm = raw / normalizer(n, s, domain.d)
    return float(norm.mean()), float(norm.var(ddof=1))


def cmd_aep_sweep(cfg, out, workers):
    domain, profile = parse_domain(cfg["domain"]), parse_profile(cfg["profile"])
    trials = int(cfg["trials"])
    cells = [(int(n), float(s)) for n in cfg["n_grid"] for s in cfg["s_grid"]]
    jobs = [(n, s, domain, profile, trials, derive_seed(cfg["seed"], k)) for k, (n, s) in enumerate(cells)]
    results = _map(_aep_cell, jobs, workers)
    rows = []
    for (n, s), (mean, var) in zip(cells, results):
        center = conditional_entropy(domain, profile, 2, s).normalized
        rows.append((n, s, normalizer(n, s, domain.d), trials, mean, var, center))
    out.table("aep-sweep", ["n", "s", "scaled_pairs", "trials", "mean", "variance", "center"], rows)
    return EXIT_OK


def cmd_oracle(cfg, out, workers):
    results = run_oracle_suite(int(cfg["n"]), parse_domain(cfg["domain"]), parse_profile(cfg["profile"]),
                               float(cfg["s"]), int(cfg["trials"]), cfg["seed"], workers)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.value:.6g} vs {r.reference:.6g} "
              f"(tol {r.tolerance:.3g}) {r.detail}", file=sys.stderr)
    out.table("oracle", ["check", "passed", "value", "reference", "tolerance", "detail"],
              [(r.name, r.passed, r.value, r.reference, r.tolerance, r.detail) for r in results])
    return EXIT_OK if all(r.passed for r in results) else EXIT_ORACLE


def cmd_rate_region(cfg, out, workers):
    profile = parse_profile(cfg["profile"])
    schedule = parse_schedule(cfg["schedule"])
    L = int(cfg["L"])
    hs = h_star(profile, schedule.d)
    out.table("rate-region", ["subset_mask", "bound_bits"], rate_region(L, schedule, hs))
    if cfg.get("rates") is not None:
        ok, worst = is_achievable(cfg["rates"], L, schedule, hs)
        msg = "achievable" if ok else f"not achievable: subset {worst.mask} needs {worst.required:.6f}, has {worst.provided:.6f}"
        print(msg, file=sys.stderr)
    return EXIT_OK


def cmd_dsc_sim(cfg, out, workers):
    schedule = parse_schedule(cfg["schedule"])
    domain = parse_domain(cfg["domain"])
    if domain.d != schedule.d:
        raise ConfigError("schedule dimension must match the domain")
    config = DscConfig(
        n=int(cfg["n"]), L=int(cfg["L"]), domain=domain, profile=parse_profile(cfg["profile"]),
        schedule=schedule, rates=None if cfg["rates"] is None else tuple(map(float, cfg["rates"])),
        gammas=tuple(map(float, cfg["gammas"])), epsilon=float(cfg["epsilon"]), center=cfg["center"],
        trials=int(cfg["trials"]), seed=cfg["seed"], mode=cfg["mode"], table_trials=int(cfg["table_trials"]))
    result = simulate_dsc(config, workers)
    eps = config.epsilon
    out.table("dsc-sim", ["trial", "n", "L", "gamma", "epsilon", "outcome", "atypical", "collision", "seed"],
              [(r.trial, config.n, config.L, r.gamma, eps, r.outcome, r.atypical, r.collision, r.seed)
               for r in result.records])
    rows = []
    for sm in result.summaries:
        lo, hi = sm.ci()
        rows.append((sm.gamma, " ".join(map(str, sm.bits)), sm.trials, sm.p_error, lo, hi,
                     sm.atypical / sm.trials, sm.collisions / sm.trials, sm.union_bound))
        print(f"gamma={sm.gamma:g} bits={sm.bits} P_E={sm.p_error:.4f} [{lo:.4f}, {hi:.4f}] "
              f"atypical={sm.atypical} collisions={sm.collisions} union_bound={sm.union_bound:.4g}", file=sys.stderr)
    out.table("dsc-summary", ["gamma", "bits", "trials", "p_error", "ci_low", "ci_high",
                              "atypical_rate", "collision_rate", "union_bound"], rows)
    return EXIT_OK


COMMANDS = {
    "sample": cmd_sample, "hstar": cmd_hstar, "limit-sweep": cmd_limit_sweep, "aep-sweep": cmd_aep_sweep,
    "oracle": cmd_oracle, "rate-region": cmd_rate_region, "dsc-sim": cmd_dsc_sim,
}


def _map(func, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(func, jobs))
    return [func(j) for j in jobs]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="srgg", description="Soft random geometric graph experiments.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="YAML configuration file")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be positive")
        cfg = load_config(args.config, args.subcommand, args.seed)
        parse_domain(cfg["domain"])
        parse_profile(cfg["profile"])
        header = f"# config_sha256={config_hash(args.subcommand, cfg)} seed={cfg['seed']}"
        return COMMANDS[args.subcommand](cfg, Output(args.out, header), args.workers)
    except (NumericError, ImpossibleRealizationError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SrggError, ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
