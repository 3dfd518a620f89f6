"""Command-line front end: equilibrium curves, finite-size training runs,
and the oracle verification suite.

Every command resolves its configuration up front, writes its data files
plus a manifest describing them, and can be re-run bit-identically from
that manifest.  Exit status: 0 on success, 1 when a check or a solve fails
(partial outputs are still written), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .equilibrium import large_K_limit, phase_summary, trace_branches
from .mc_sim import McConfig, run as mc_run
from .oracle import VERIFY_SCOPES, run_verification

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

BRANCH_HEADER = ("branch", "alpha", "R", "S", "C", "eps_g", "beta_f", "min_eig", "label")
MC_HEADER = ("step", "E_over_P", "eps_g", "acceptance")

_BIAS_TOKENS = {
    "none": None,
    "spec": "PositiveSpecialized",
    "anti": "AntiSpecialized",
    "positivespecialized": "PositiveSpecialized",
    "antispecialized": "AntiSpecialized",
}


def _fmt(value: object) -> str:
    """Shortest round-trip text for floats; plain str otherwise."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows: list[Sequence[object]]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, payload: dict) -> None:
    with path.open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _rows_payload(header: Sequence[str], rows: list[Sequence[object]]) -> list[dict]:
    return [
        {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in zip(header, row)}
        for row in rows
    ]


@dataclass
class RunManifest:
    """Everything needed to reproduce a command's outputs bit-identically.

    wall_clock_seconds is informational; it is the only field allowed to
    differ between a run and its re-run.
    """

    command: str
    config: dict
    seed: Optional[int]
    version: str
    outputs: list[str] = field(default_factory=list)
    wall_clock_seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "outputs": sorted(self.outputs),
            "wall_clock_seconds": self.wall_clock_seconds,
        }


def _write_manifest(out_dir: Path, manifest: RunManifest) -> Path:
    path = out_dir / "manifest.json"
    _write_json(path, manifest.to_dict())
    return path


# ---------------------------------------------------------------------------
# curve


def _parse_grid_spec(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"alpha grid must be min:max:points, got {text!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if not (hi > lo):
        raise ValueError("alpha grid needs max > min")
    if n < 2:
        raise ValueError("alpha grid needs at least two points")
    return lo, hi, n


def _build_grid(lo: float, hi: float, n: int, log: bool) -> np.ndarray:
    if log:
        if lo <= 0.0:
            raise ValueError("log-spaced grid needs a positive lower bound")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def _densify(base: np.ndarray, criticals: Sequence[Optional[float]]) -> np.ndarray:
    """Refine the grid tenfold within +-5% of each located critical point."""
    pieces = [base]
    for ac in criticals:
        if ac is None or not np.isfinite(ac):
            continue
        if ac < base[0] or ac > base[-1]:
            continue
        idx = min(max(int(np.searchsorted(base, ac)), 1), base.size - 1)
        local = base[idx] - base[idx - 1]
        lo = max(0.95 * ac, float(base[0]))
        hi = min(1.05 * ac, float(base[-1]))
        count = max(int(math.ceil((hi - lo) / (local / 10.0))) + 1, 2)
        pieces.append(np.linspace(lo, hi, count))
    merged = np.unique(np.concatenate(pieces))
    return merged


def run_curve(cfg: dict, out_dir: Path) -> tuple[list[str], list[str]]:
    """Trace equilibrium branches and locate transitions; returns (outputs, problems)."""
    activation = cfg["activation"]
    k_spec = cfg["K"]
    lo, hi, n = _parse_grid_spec(cfg["alpha"])
    base = _build_grid(lo, hi, n, bool(cfg.get("log", False)))
    tol = float(cfg.get("tol", 1e-3))
    fmt = cfg.get("format", "csv")
    problems: list[str] = []
    rows: list[Sequence[object]] = []
    summary_dict: Optional[dict] = None

    if k_spec == "inf":
        try:
            summary, _ = large_K_limit(activation, base)
            summary_dict = summary.as_dict()
            grid = _densify(base, [summary.alpha_s, summary.alpha_c])
            _, branches = large_K_limit(activation, grid)
            for b_id, branch in enumerate(branches):
                for p in branch.points:
                    rows.append((b_id, p.alpha, p.R, 0.0, 0.0, p.eps_g, p.beta_f,
                                 p.curvature, p.label.value))
        except Exception as exc:
            problems.append(f"limit mode failed: {exc}")
    else:
        K = int(k_spec)
        criticals: list[Optional[float]] = []
        try:
            summary = phase_summary(activation, K, tol=tol)
            summary_dict = summary.as_dict()
            criticals = [summary.alpha_s, summary.alpha_c, summary.alpha_d]
        except Exception as exc:
            problems.append(f"phase summary failed: {exc}")
        grid = _densify(base, criticals)
        branches = trace_branches(activation, K, grid)
        covered: set[float] = set()
        for b_id, branch in enumerate(branches):
            for p in branch.points:
                covered.add(round(p.alpha, 12))
                rows.append((b_id, p.alpha, p.state.R, p.state.S, p.state.C,
                             p.eps_g, p.beta_f, p.min_eig, p.label.value))
        missing = [a for a in grid if round(float(a), 12) not in covered]
        if missing:
            problems.append(f"no equilibrium found at {len(missing)} grid point(s), "
                            f"first alpha={missing[0]:.6g}")

    outputs: list[str] = []
    if fmt == "json":
        branch_name = "branches.json"
        _write_json(out_dir / branch_name, {"header": list(BRANCH_HEADER),
                                            "rows": _rows_payload(BRANCH_HEADER, rows)})
    else:
        branch_name = "branches.csv"
        _write_csv(out_dir / branch_name, BRANCH_HEADER, rows)
    outputs.append(branch_name)
    _write_json(out_dir / "phase_summary.json",
                {"summary": summary_dict, "problems": problems})
    outputs.append("phase_summary.json")
    return outputs, problems


# ---------------------------------------------------------------------------
# mc


_MC_FIELD_TYPES = {
    "N": int, "K": int, "M": int, "activation": str, "beta": float,
    "mcs_total": int, "measure_window": int, "runs": int, "seed": int,
    "init_magnitude": float, "step_sigma": float, "target_acceptance": float,
    "adapt_interval": int, "burn_in_fraction": float, "measure_every": int,
}


def _mc_configs(cfg: dict) -> list[McConfig]:
    bias = cfg.get("init_bias")
    if isinstance(bias, str):
        token = bias.lower()
        if token not in _BIAS_TOKENS:
            raise ValueError(f"unknown init bias {bias!r}")
        bias = _BIAS_TOKENS[token]
    base = {k: typ(cfg[k]) for k, typ in _MC_FIELD_TYPES.items() if cfg.get(k) is not None}
    configs = []
    for at in cfg["alpha_tildes"]:
        configs.append(McConfig(alpha_tilde=float(at), init_bias=bias, **base).validated())
    return configs


def _mc_tag(config: McConfig) -> str:
    bias = {None: "none", "PositiveSpecialized": "spec", "AntiSpecialized": "anti"}[config.init_bias]
    return f"{config.activation}_a{config.alpha_tilde:g}_{bias}"


def run_mc(cfg: dict, out_dir: Path, threads: int = 1) -> tuple[list[str], list[str]]:
    """Execute the training simulator for each requested load; returns (outputs, problems)."""
    fmt = cfg.get("format", "csv")
    outputs: list[str] = []
    summaries = []
    for config in _mc_configs(cfg):
        obs = mc_run(config, threads=threads)
        tag = _mc_tag(config)
        for rec in obs.run_records:
            rows = []
            for i, step in enumerate(rec.measure_steps):
                s = int(step)
                rows.append((s, float(rec.energy_per_p[s - 1]), float(rec.eps_series[i]),
                             float(rec.acceptance[:s].mean())))
            name = f"mc_{tag}_run{rec.run_index}.{fmt}"
            if fmt == "json":
                _write_json(out_dir / name, {"header": list(MC_HEADER),
                                             "rows": _rows_payload(MC_HEADER, rows)})
            else:
                _write_csv(out_dir / name, MC_HEADER, rows)
            outputs.append(name)
        summaries.append({"tag": tag, "config": config.as_dict(), "summary": obs.summary()})
    _write_json(out_dir / "summary.json", {"results": summaries})
    outputs.append("summary.json")
    return outputs, []


# ---------------------------------------------------------------------------
# verify


def run_verify(cfg: dict, out_dir: Path) -> tuple[list[str], list[str]]:
    """Run the oracle suite, write the report; returns (outputs, problems)."""
    report = run_verification(scope=cfg.get("scope", "all"),
                              seed=int(cfg.get("seed", 0)),
                              samples=int(cfg.get("samples", 200_000)))
    _write_json(out_dir / "verification.json", report)
    problems = [f"check failed: {c['name']} ({c['detail']})"
                for c in report["checks"] if not c["passed"]]
    return ["verification.json"], problems


# ---------------------------------------------------------------------------
# driver


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="base random seed")
    parser.add_argument("--out-dir", default=".", help="directory for outputs and manifest")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker processes for independent runs (training simulator only)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="tabular output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scmlab",
        description="Equilibrium learning curves and specialization transitions "
                    "for soft committee machines, with a finite-size trainer and oracles.",
    )
    parser.add_argument("--from-manifest", metavar="PATH",
                        help="re-run a previous command from its manifest")
    parser.add_argument("--out-dir", dest="rerun_out_dir", default=None,
                        help="output directory override when re-running from a manifest")
    sub = parser.add_subparsers(dest="cmd")

    p_curve = sub.add_parser("curve", help="trace equilibrium branches over an alpha grid")
    p_curve.add_argument("--activation", required=True, choices=("erf", "relu"))
    p_curve.add_argument("--K", required=True,
                         help="hidden units (positive integer, or 'inf' for the limit mode)")
    p_curve.add_argument("--alpha", required=True, help="grid as min:max:points")
    p_curve.add_argument("--log", action="store_true", help="log-spaced grid")
    p_curve.add_argument("--tol", type=float, default=1e-3, help="locator tolerance")
    _add_common(p_curve)

    p_mc = sub.add_parser("mc", help="finite-size Metropolis training runs")
    p_mc.add_argument("--config", help="JSON config file; flags override its entries")
    p_mc.add_argument("--N", type=int, help="input dimension")
    p_mc.add_argument("--K", type=int, help="student hidden units")
    p_mc.add_argument("--M", type=int, help="teacher hidden units")
    p_mc.add_argument("--activation", choices=("erf", "relu"))
    p_mc.add_argument("--alpha-tilde", type=float, nargs="+",
                      help="one or more loads P/(K N)")
    p_mc.add_argument("--beta", type=float, help="inverse training temperature")
    p_mc.add_argument("--mcs", type=int, dest="mcs_total", help="total elementary steps")
    p_mc.add_argument("--window", type=int, dest="measure_window",
                      help="measurement window (final steps)")
    p_mc.add_argument("--runs", type=int, help="independent chains")
    p_mc.add_argument("--init-bias", choices=tuple(_BIAS_TOKENS),
                      help="initial specialization bias")
    p_mc.add_argument("--init-magnitude", type=float, help="bias strength")
    _add_common(p_mc)

    p_verify = sub.add_parser("verify", help="run the independent oracle suite")
    p_verify.add_argument("--scope", default="all", choices=("all",) + VERIFY_SCOPES)
    p_verify.add_argument("--samples", type=int, default=200_000,
                          help="sampling effort per statistical check")
    _add_common(p_verify)
    return parser


def _curve_config(args: argparse.Namespace) -> dict:
    try:
        _parse_grid_spec(args.alpha)
        if args.K != "inf":
            if int(args.K) < 1:
                raise ValueError("K must be positive")
        _build_grid(*_parse_grid_spec(args.alpha), args.log)
    except ValueError as exc:
        raise _Usage(str(exc))
    return {"activation": args.activation, "K": args.K if args.K == "inf" else int(args.K),
            "alpha": args.alpha, "log": bool(args.log), "tol": args.tol,
            "format": args.format}


def _mc_config(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise _Usage(f"config file not found: {path}")
        try:
            cfg.update(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise _Usage(f"bad config JSON: {exc}")
    for name in _MC_FIELD_TYPES:
        value = getattr(args, name, None)
        if value is not None:
            cfg[name] = value
    if getattr(args, "alpha_tilde", None):
        cfg["alpha_tildes"] = list(args.alpha_tilde)
    elif "alpha_tilde" in cfg:
        cfg["alpha_tildes"] = [cfg.pop("alpha_tilde")]
    cfg.setdefault("alpha_tildes", [8.0])
    if args.init_bias is not None:
        cfg["init_bias"] = args.init_bias
    cfg.setdefault("seed", args.seed)
    cfg["format"] = args.format
    try:
        _mc_configs(cfg)
    except (ValueError, TypeError) as exc:
        raise _Usage(f"invalid configuration: {exc}")
    return cfg


class _Usage(Exception):
    pass


_EXECUTORS = {
    "curve": lambda cfg, out_dir, threads: run_curve(cfg, out_dir),
    "mc": run_mc,
    "verify": lambda cfg, out_dir, threads: run_verify(cfg, out_dir),
}


def _execute(command: str, cfg: dict, out_dir: Path, threads: int, seed: Optional[int]) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    outputs, problems = _EXECUTORS[command](cfg, out_dir, threads)
    manifest = RunManifest(
        command=command,
        config=cfg,
        seed=seed,
        version=__version__,
        outputs=outputs,
        wall_clock_seconds=time.perf_counter() - started,
    )
    _write_manifest(out_dir, manifest)
    for text in problems:
        print(f"scmlab {command}: {text}", file=sys.stderr)
    return EXIT_FAIL if problems else EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.from_manifest:
        if args.cmd is not None:
            print("scmlab: --from-manifest replaces the subcommand", file=sys.stderr)
            return EXIT_USAGE
        path = Path(args.from_manifest)
        if not path.exists():
            print(f"scmlab: manifest not found: {path}", file=sys.stderr)
            return EXIT_USAGE
        try:
            saved = json.loads(path.read_text())
            command = saved["command"]
            cfg = saved["config"]
            seed = saved.get("seed")
        except (json.JSONDecodeError, KeyError) as exc:
            print(f"scmlab: bad manifest: {exc}", file=sys.stderr)
            return EXIT_USAGE
        if command not in _EXECUTORS:
            print(f"scmlab: bad manifest command {command!r}", file=sys.stderr)
            return EXIT_USAGE
        out_dir = Path(args.rerun_out_dir) if args.rerun_out_dir else path.parent
        return _execute(command, cfg, out_dir, threads=1, seed=seed)

    if args.cmd is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if args.cmd == "curve":
            cfg = _curve_config(args)
        elif args.cmd == "mc":
            cfg = _mc_config(args)
        else:
            cfg = {"scope": args.scope, "seed": args.seed, "samples": args.samples}
    except _Usage as exc:
        print(f"scmlab {args.cmd}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return _execute(args.cmd, cfg, Path(args.out_dir), threads=args.threads, seed=args.seed)


if __name__ == "__main__":
    sys.exit(main())
