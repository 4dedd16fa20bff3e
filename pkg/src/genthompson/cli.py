"""Experiment runner.

Usage::

    genthompson --config configs/pennies.json --out out/pennies [--seed N] [--jobs J] [--quiet]

Writes one CSV per seed and ``summary.json``. Exit codes: 0 success,
2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from . import experiments
from .envs import default_chain_horizon
from .errors import ConfigError

CONFIG_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

COMMON_FIELDS = {"version", "experiment", "rounds", "seeds"}
EXPERIMENT_FIELDS = {
    "pennies": set(),
    "causal": {"truth", "prior_theta"},
    "chain": {"k", "agent", "truth", "resample_period", "stop_at_first_reward"},
    "seu": set(),
    "coding": set(),
}
DEFAULT_ROUNDS = {"pennies": 10000, "causal": 200, "seu": 1000, "coding": 1}


@dataclass
class ExperimentConfig:
    experiment: str
    rounds: int
    seeds: List[int]
    params: Dict[str, Any] = field(default_factory=dict)
    version: int = CONFIG_VERSION

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config: top level must be a JSON object")
        if raw.get("version") != CONFIG_VERSION:
            raise ConfigError(f"version: expected {CONFIG_VERSION}, got {raw.get('version')!r}")
        name = raw.get("experiment")
        if name not in EXPERIMENT_FIELDS:
            raise ConfigError(f"experiment: must be one of {sorted(EXPERIMENT_FIELDS)}, got {name!r}")
        unknown = set(raw) - COMMON_FIELDS - EXPERIMENT_FIELDS[name]
        if unknown:
            raise ConfigError(f"{sorted(unknown)[0]}: unknown field for experiment {name!r}")
        params = {k: raw[k] for k in EXPERIMENT_FIELDS[name] if k in raw}
        params = _validate_params(name, params)
        rounds = raw.get("rounds")
        if rounds is None:
            rounds = default_chain_horizon(params["k"]) if name == "chain" else DEFAULT_ROUNDS[name]
        if not _is_int(rounds) or rounds < 1:
            raise ConfigError(f"rounds: must be a positive integer, got {rounds!r}")
        if name == "coding" and rounds != 1:
            raise ConfigError("rounds: the coding experiment is one-step only (rounds = 1)")
        return cls(name, rounds, _parse_seeds(raw.get("seeds", {"base": 0, "count": 1})), params)

    def with_base_seed(self, base: int) -> "ExperimentConfig":
        return ExperimentConfig(self.experiment, self.rounds, _parse_seeds({"base": base, "count": len(self.seeds)}), self.params)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _check_seed(s, where: str) -> int:
    if not _is_int(s) or not 0 <= s < 2**64:
        raise ConfigError(f"{where}: seeds must be 64-bit unsigned integers, got {s!r}")
    return s


def _parse_seeds(value) -> List[int]:
    if isinstance(value, list):
        if not value:
            raise ConfigError("seeds: list must be non-empty")
        return [_check_seed(s, f"seeds[{i}]") for i, s in enumerate(value)]
    if isinstance(value, dict):
        extra = set(value) - {"base", "count"}
        if extra:
            raise ConfigError(f"seeds.{sorted(extra)[0]}: unknown field")
        base = _check_seed(value.get("base", 0), "seeds.base")
        count = value.get("count", 1)
        if not _is_int(count) or count < 1:
            raise ConfigError(f"seeds.count: must be a positive integer, got {count!r}")
        return [_check_seed(base + i, "seeds.base") for i in range(count)]
    raise ConfigError("seeds: must be a list of integers or {\"base\": int, \"count\": int}")


def _validate_params(name: str, p: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(p)
    if name == "causal":
        out.setdefault("truth", "theta")
        if out["truth"] not in ("theta", "not_theta"):
            raise ConfigError(f"truth: must be 'theta' or 'not_theta', got {out['truth']!r}")
        if "prior_theta" in out:
            try:
                prior = Fraction(str(out["prior_theta"]))
            except (ValueError, ZeroDivisionError):
                raise ConfigError(f"prior_theta: not a fraction: {out['prior_theta']!r}") from None
            if not 0 <= prior <= 1:
                raise ConfigError("prior_theta: must lie in [0, 1]")
            out["prior_theta"] = str(prior)
    elif name == "chain":
        if "k" not in out:
            raise ConfigError("k: required for the chain experiment")
        if not _is_int(out["k"]) or out["k"] < 1:
            raise ConfigError(f"k: must be a positive integer, got {out['k']!r}")
        out.setdefault("agent", "thompson")
        if out["agent"] not in ("thompson", "optimal"):
            raise ConfigError(f"agent: must be 'thompson' or 'optimal', got {out['agent']!r}")
        out.setdefault("truth", "env1")
        if out["truth"] not in ("env1", "env2"):
            raise ConfigError(f"truth: must be 'env1' or 'env2', got {out['truth']!r}")
        out.setdefault("resample_period", 1)
        if not _is_int(out["resample_period"]) or out["resample_period"] < 1:
            raise ConfigError("resample_period: must be a positive integer")
        out.setdefault("stop_at_first_reward", False)
        if not isinstance(out["stop_at_first_reward"], bool):
            raise ConfigError("stop_at_first_reward: must be a boolean")
    return out


def load_config(path: Path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON: {exc}") from None
    return ExperimentConfig.from_dict(raw)


def run_seed(config: ExperimentConfig, seed: int) -> experiments.ExperimentResult:
    p = config.params
    name = config.experiment
    if name == "pennies":
        return experiments.run_pennies(config.rounds, seed)
    if name == "causal":
        prior = Fraction(p["prior_theta"]) if "prior_theta" in p else None
        return experiments.run_causal(config.rounds, seed, p["truth"], prior)
    if name == "chain":
        return experiments.run_chain(
            p["k"], config.rounds, seed, p["agent"], p["truth"], p["resample_period"], p["stop_at_first_reward"]
        )
    if name == "seu":
        return experiments.run_seu(config.rounds, seed)
    return experiments.run_coding(seed)


def fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        if math.isinf(x) or math.isnan(x):
            return str(x)
        return format(x, ".12g")
    return str(x)


def _json_value(x):
    if isinstance(x, float):
        return float(fmt(x)) if math.isfinite(x) else fmt(x)
    return x


def write_csv(path: Path, result: experiments.ExperimentResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(result.columns)
        for row in result.rows:
            w.writerow([fmt(x) for x in row])


def aggregate(per_seed: Dict[int, Dict[str, Any]]) -> Dict[str, Dict[str, Any]]:
    """Across-seed mean/median/min/max of each numeric statistic (``None`` values are counted, not averaged)."""
    keys = next(iter(per_seed.values())).keys()
    out = {}
    for key in keys:
        vals = [s[key] for s in per_seed.values()]
        nums = [v for v in vals if isinstance(v, (int, float)) and not isinstance(v, bool) and v is not None]
        if not nums or any(isinstance(v, str) for v in vals):
            continue
        finite = [float(v) for v in nums if math.isfinite(v)]
        if not finite:
            continue
        out[key] = {
            "mean": _json_value(statistics.fmean(finite)),
            "median": _json_value(float(statistics.median(finite))),
            "min": _json_value(min(finite)),
            "max": _json_value(max(finite)),
            "count": len(finite),
            "missing": len(vals) - len(finite),
        }
    return out


def summary_line(config: ExperimentConfig, agg: Dict[str, Dict[str, Any]]) -> str:
    picks = {
        "pennies": ("theta_mean", "xi_mean", "mean_u"),
        "causal": ("posterior_truth",),
        "chain": ("first_reward_time", "total_reward"),
        "seu": ("coin_value_a", "coin_value_b", "violations"),
        "coding": ("mixture_cost", "grid_min_cost", "mixture_is_minimal"),
    }[config.experiment]
    parts = []
    for key in picks:
        if key in agg:
            stat = "median" if key == "first_reward_time" else "mean"
            parts.append(f"{key} {stat}={fmt(agg[key][stat])}")
    return f"{config.experiment}: {len(config.seeds)} seed(s), rounds={config.rounds}; " + ", ".join(parts)


def _run_one(args):
    config, seed = args
    return seed, run_seed(config, seed)


def run_experiment(config: ExperimentConfig, out: Path, jobs: int = 1) -> Dict[str, Any]:
    """Run every seed, write per-seed CSVs and the summary, return the summary dict."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(config, s) for s in config.seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(_run_one, tasks))
    else:
        results = dict(map(_run_one, tasks))
    per_seed = {}
    for seed in config.seeds:
        res = results[seed]
        write_csv(out / f"{config.experiment}_seed{seed}.csv", res)
        per_seed[seed] = {k: _json_value(v) for k, v in res.summary.items()}
    summary = {
        "config": asdict(config),
        "per_seed": {str(s): v for s, v in per_seed.items()},
        "aggregate": aggregate(per_seed),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genthompson", description="Run a generalized Thompson sampling experiment.")
    parser.add_argument("--config", required=True, type=Path, help="JSON experiment config")
    parser.add_argument("--out", required=True, type=Path, help="output directory")
    parser.add_argument("--seed", type=int, help="override the base seed (seed i = N + i)")
    parser.add_argument("--jobs", type=int, default=1, help="seeds to run in parallel")
    parser.add_argument("--quiet", action="store_true", help="suppress the summary line")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = config.with_base_seed(args.seed)
        if args.jobs < 1:
            raise ConfigError("--jobs: must be >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = run_experiment(config, args.out, args.jobs)
    except Exception as exc:  # surfaced with experiment context
        print(f"runtime error in experiment {config.experiment!r}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if not args.quiet:
        print(summary_line(config, summary["aggregate"]))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
