"""Config-driven experiment runner: ``lab run|sweep <config>`` and
``lab report <manifest>``.

Exit status: 0 all checks pass, 1 some check failed, 2 invalid config,
3 numerical failure (the offending case is named on stderr).
"""
from __future__ import annotations

import argparse
import concurrent.futures as cf
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .experiments import CHECKS, KINDS, CaseResult, ConfigError, build_cases, execute
from .model_spaces import SolverError

__all__ = ["RunManifest", "load_config", "run", "sweep", "emit_report", "main", "bundled_configs"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (SolverError, ArithmeticError, FloatingPointError, OverflowError)
EIGEN_HEADER = ["K", "N", "p", "r", "lambda_shoot", "lambda_var", "residual", "rel_diff"]


class NumericalFailure(RuntimeError):
    def __init__(self, index: int, case_label: str, exc: Exception):
        super().__init__(f"case {index} ({case_label}): {type(exc).__name__}: {exc}")
        self.index = index


@dataclass
class RunManifest:
    config_hash: str
    name: str
    kind: str
    seed: int
    check: str
    cases: list
    worst_slack: float | None
    exit_status: int
    artifacts: list
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d.pop("wall_time")  # kept in the timing sidecar so the manifest is reproducible
        return d


# ---------------------------------------------------------------------------
# config


def bundled_configs() -> dict[str, Path]:
    root = resources.files("cdlab.configs")
    return {p.name[:-5]: Path(str(p)) for p in root.iterdir() if p.name.endswith(".toml")}


def load_config(path: str | os.PathLike, overrides: dict | None = None) -> dict:
    p = Path(path)
    try:
        cfg = tomllib.loads(p.read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    if not cfg:
        raise ConfigError("empty config")
    for k, v in (overrides or {}).items():
        if v is not None:
            cfg[k] = v
    if cfg.get("kind") not in KINDS:
        raise ConfigError(f"unknown or missing experiment kind {cfg.get('kind')!r}")
    cfg.setdefault("name", cfg["kind"])
    cfg.setdefault("seed", 0)
    if "tol" in cfg and not (isinstance(cfg["tol"], (int, float)) and cfg["tol"] >= 0):
        raise ConfigError("tol must be a non-negative number")
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# execution


def _one(args) -> CaseResult:
    kind, index, case, cfg = args
    try:
        return execute(kind, index, case, cfg)
    except NUMERIC_ERRORS as exc:
        label = case.get("entry", {}).get("name") if "entry" in case else json.dumps(case, default=str)[:120]
        raise NumericalFailure(index, label, exc) from exc


def _execute_all(cfg: dict, cases: list[dict], jobs: int) -> list[CaseResult]:
    work = [(cfg["kind"], i, c, cfg) for i, c in enumerate(cases)]
    if jobs <= 1 or len(work) == 1:
        results = [_one(w) for w in work]
    else:
        with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_one, work))
    return sorted(results, key=lambda r: r.index)


def _csv_text(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return x


def _json_text(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, default=_jsonable, allow_nan=True) + "\n"


def _jsonable(x):
    try:
        return float(x)
    except (TypeError, ValueError):
        return str(x)


def _artifacts(cfg: dict, results: list[CaseResult]) -> dict[str, str]:
    files = {}
    rows = [[r.index, r.label, r.status, r.worst_slack, r.detail] for r in results]
    files["cases.csv"] = _csv_text(["index", "label", "status", "worst_slack", "detail"], rows)
    kind = cfg["kind"]
    if kind == "eigen-sweep":
        files["eigen.csv"] = _csv_text(EIGEN_HEADER, [row for r in results for row in r.rows])
    elif kind == "cheng":
        files["cheng.jsonl"] = "".join(json.dumps(rec, sort_keys=True, default=_jsonable) + "\n"
                                       for r in results for rec in r.rows)
    elif kind == "myers-trend":
        files["trend.json"] = _json_text([r.record for r in results])
    elif kind == "partition":
        files["partition.json"] = _json_text([r.record for r in results])
    return files


def _write_atomic(target_dir: Path, files: dict[str, str]):
    """All files go to a temp dir first, then each is renamed into place."""
    target_dir.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(dir=target_dir, prefix=".tmp-") as tmp:
        for name, text in files.items():
            with open(Path(tmp) / name, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        for name in files:
            os.replace(Path(tmp) / name, target_dir / name)


def _out_root(out_dir: str | None) -> Path:
    return Path(out_dir or os.environ.get("LAB_OUT_DIR") or "lab-out")


def run(cfg: dict, out_dir: str | None = None, jobs: int = 1) -> RunManifest:
    """Execute every case of a validated config and write its artifacts."""
    t0 = time.perf_counter()
    cases = build_cases(cfg)
    results = _execute_all(cfg, cases, jobs)
    slacks = [r.worst_slack for r in results if r.worst_slack is not None and not math.isnan(r.worst_slack)]
    status = EXIT_FAIL if any(r.status == "fail" for r in results) else EXIT_OK
    files = _artifacts(cfg, results)
    target = _out_root(out_dir) / cfg["name"]
    manifest = RunManifest(
        config_hash=config_hash(cfg),
        name=cfg["name"],
        kind=cfg["kind"],
        seed=int(cfg.get("seed", 0)),
        check=CHECKS[cfg["kind"]],
        cases=[{"index": r.index, "label": r.label, "status": r.status, "worst_slack": r.worst_slack,
                "detail": r.detail} for r in results],
        worst_slack=min(slacks) if slacks else None,
        exit_status=status,
        artifacts=sorted(list(files) + ["manifest.json"]),
    )
    files["manifest.json"] = _json_text(manifest.to_dict())
    manifest.wall_time = time.perf_counter() - t0
    files["timing.json"] = _json_text({"wall_time_s": manifest.wall_time})
    _write_atomic(target, files)
    return manifest


def sweep(cfg: dict, out_dir: str | None = None, jobs: int = 1) -> RunManifest:
    """Cartesian-product execution; a grid is mandatory."""
    grid = cfg.get("grid")
    if cfg["kind"] not in ("cd-verify", "polar-identity") and not grid:
        raise ConfigError("sweep needs a non-empty [grid] table")
    if grid and any(not isinstance(v, list) or not v for v in grid.values()):
        raise ConfigError("every grid entry must be a non-empty list")
    return run(cfg, out_dir, jobs)


# ---------------------------------------------------------------------------
# reports

_ORDER = {"fail": 0, "skip": 1, "pass": 2}


def emit_report(manifest_path: str | os.PathLike, fmt: str, out: str | os.PathLike | None = None) -> Path:
    if fmt not in ("csv", "json", "md"):
        raise ConfigError(f"unknown report format {fmt!r}")
    mpath = Path(manifest_path)
    m = json.loads(mpath.read_text(encoding="utf-8"))
    target = Path(out) if out else mpath.with_name(f"report.{fmt}")
    cases = m["cases"]
    if fmt == "csv":
        text = _csv_text(["index", "label", "status", "worst_slack", "check"],
                         [[c["index"], c["label"], c["status"], c["worst_slack"], m["check"]] for c in cases])
    elif fmt == "json":
        doc = {
            "name": m["name"],
            "kind": m["kind"],
            "config_hash": m["config_hash"],
            "check": m["check"],
            "exit_status": m["exit_status"],
            "worst_slack": m["worst_slack"],
            "summary": {s: sum(c["status"] == s for c in cases) for s in ("pass", "fail", "skip")},
            "cases": [{k: c[k] for k in ("index", "label", "status", "worst_slack")} for c in cases],
        }
        text = _json_text(doc)
    else:
        ordered = sorted(cases, key=lambda c: (_ORDER.get(c["status"], 3), c["index"]))
        lines = [f"# {m['name']} ({m['kind']})", "", f"Checks: {m['check']}.", "",
                 f"Worst slack: {m['worst_slack']!r}; exit status {m['exit_status']}.", "",
                 "| # | case | status | worst slack |", "|---|---|---|---|"]
        for c in ordered:
            st = f"**{c['status'].upper()}**" if c["status"] == "fail" else c["status"]
            ws = "" if c["worst_slack"] is None else f"{c['worst_slack']:.3e}"
            lines.append(f"| {c['index']} | {c['label']} | {st} | {ws} |")
        text = "\n".join(lines) + "\n"
    _write_atomic(target.parent, {target.name: text})
    return target


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep"):
        sp = sub.add_parser(name)
        sp.add_argument("config", help="TOML config path or the name of a bundled config")
        sp.add_argument("--tol", type=float)
        sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir")
    rp = sub.add_parser("report")
    rp.add_argument("manifest")
    rp.add_argument("--format", default="md")
    rp.add_argument("--out-dir")
    return ap


def _resolve(config: str) -> str:
    if Path(config).exists():
        return config
    bundled = bundled_configs()
    if config in bundled:
        return str(bundled[config])
    return config


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "report":
            out = None if args.out_dir is None else Path(args.out_dir) / f"report.{args.format}"
            print(emit_report(args.manifest, args.format, out))
            return EXIT_OK
        cfg = load_config(_resolve(args.config), {"tol": args.tol, "seed": args.seed})
        fn = run if args.command == "run" else sweep
        m = fn(cfg, args.out_dir, max(1, args.jobs))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure in {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    counts = {s: sum(c["status"] == s for c in m.cases) for s in ("pass", "fail", "skip")}
    print(f"{m.name}: {counts['pass']} pass, {counts['fail']} fail, {counts['skip']} skip; "
          f"worst slack {m.worst_slack!r}")
    return m.exit_status


if __name__ == "__main__":
    sys.exit(main())
