"""Batch runner: ``borderlab {verify-identities,decompose,estimate,report}``.

Every command writes a CSV report (one row per check) and a JSON summary
next to it. Exit codes: 0 when every row passes, 1 when a check fails,
2 for a malformed configuration or command line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .decomposition import (DecompositionError, bounded_ratio_suite, c_lambda, hyperbolic_lemma_ratios,
                            sphere_lemma_ratios)
from .fields import (constant_field, coordinate_scalar, gaussian_bump, lifted_swirl, log_gaussian, multiply,
                     polynomial_scalar, rotational_field)
from .functionals import pairing, verify_parts_euclidean, verify_parts_hyperbolic
from .harness import SETTING_FAMILIES, ConstantEstimator, Setting, get_family
from .identities import (averaging_constant, coarea_weight, euclidean_averaged_pairing, phi_jacobian, phi_map,
                         verify_coarea)
from .quadrature import sphere_rule

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
COLUMNS = ("check", "anchor", "measured", "expected", "tolerance", "kind", "passed")
KINDS = ("equality", "inequality", "lower-bound")


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ config


@dataclass
class ExperimentConfig:
    command: str = "verify-identities"
    space: str = "euclidean"
    dimension: int = 2
    seed: int = 0
    tolerance_scale: float = 1.0
    pairs: int = 5
    instances: int = 10
    jacobian_points: int = 100
    coarea: bool = True
    lambdas: list = field(default_factory=list)
    families: list = field(default_factory=list)
    budget: int = 150
    restarts: int = 5
    resolution: int = 96
    output: str = ""

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.space not in ("euclidean", "hyperbolic"):
            raise ConfigError("space must be 'euclidean' or 'hyperbolic'")
        if self.dimension not in (2, 3):
            raise ConfigError("dimension must be 2 or 3")
        if not (isinstance(self.tolerance_scale, (int, float)) and self.tolerance_scale > 0
                and np.isfinite(self.tolerance_scale)):
            raise ConfigError("tolerance_scale must be a positive number")
        for name in ("pairs", "instances", "jacobian_points", "budget", "restarts", "resolution"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if any(not (isinstance(l, (int, float)) and l > 0) for l in self.lambdas):
            raise ConfigError("lambdas must be positive numbers")
        for fam in self.families:
            if fam not in ("rotational", "tube", "multibump", "lifted-hyperbolic", "low-order"):
                raise ConfigError(f"unknown family {fam!r}")
        return self


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    data = {}
    if path:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    if "tolerance" in data:
        raise ConfigError("use tolerance_scale")
    return ExperimentConfig(**data).validate()


# ----------------------------------------------------------------- reports


@dataclass(frozen=True)
class ReportRow:
    check: str
    anchor: str
    measured: float
    expected: float
    tolerance: float
    kind: str = "equality"

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.measured):
            return False
        if self.kind == "inequality":
            return self.measured <= self.expected + self.tolerance
        if self.kind == "lower-bound":
            return self.measured > self.expected
        return abs(self.measured - self.expected) <= self.tolerance

    def cells(self):
        return (self.check, self.anchor, _fmt(self.measured), _fmt(self.expected), _fmt(self.tolerance),
                self.kind, "true" if self.passed else "false")


def _fmt(x) -> str:
    return repr(float(x))


def write_csv(rows, stream):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow(r.cells())


def summary(cfg: ExperimentConfig | None, rows, command: str) -> dict:
    failed = [r.check for r in rows if not r.passed]
    return {"schema_version": SCHEMA_VERSION, "version": __version__, "command": command,
            "config": None if cfg is None else asdict(cfg), "rows": len(rows),
            "passed": len(rows) - len(failed), "failed": failed,
            "exit_code": EXIT_OK if not failed else EXIT_FAIL}


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


# ---------------------------------------------------------------- commands


def euclidean_catalog_pair(rng, n):
    """A random divergence-free swirl and a Gaussian-weighted constant test field."""
    c = rng.uniform(-0.3, 0.3, n)
    f = rotational_field(c, rng.uniform(0.4, 0.8), 1.0, axis=int(rng.integers(n)) if n == 3 else 2)
    phi = multiply(gaussian_bump(rng.uniform(-0.3, 0.3, n), rng.uniform(0.4, 0.8)),
                   constant_field(rng.normal(size=n)))
    return f, phi


def hyperbolic_catalog_field(rng, n):
    """A random lifted swirl in the half-space."""
    c = np.append(rng.uniform(-0.2, 0.2, n - 1), rng.uniform(0.8, 1.2))
    return lifted_swirl(c, rng.uniform(0.2, 0.35), rng.uniform(0.2, 0.35), axis=int(rng.integers(1, n)) if n == 3 else 2)


def cmd_verify_identities(cfg: ExperimentConfig):
    rng = np.random.default_rng(cfg.seed)
    n, ts = cfg.dimension, cfg.tolerance_scale
    rows = []
    c = averaging_constant(n).c
    sph = sphere_rule(n, 32)
    a, b = rng.normal(size=(2, 50, n))
    worst = max(abs(c * float(sph.integrate(lambda w: (w @ a[i]) * (w @ b[i]))) - a[i] @ b[i]) for i in range(50))
    rows.append(ReportRow("averaging-constant-bilinear", "sphere-averaging-identity", worst, 0.0, 1e-10 * ts))
    for i in range(cfg.pairs):
        f, phi = euclidean_catalog_pair(rng, n)
        direct = pairing(f, phi, "euclidean")
        avg = euclidean_averaged_pairing(f, phi)
        rows.append(ReportRow(f"averaging-reconstruction-{i}", "sphere-averaging-identity", _rel(avg, direct),
                              0.0, 1e-6 * ts))
    for i in range(cfg.instances):
        f, _ = euclidean_catalog_pair(rng, n)
        psi = gaussian_bump(rng.uniform(-0.6, 0.6, n) + 0.6 * rng.choice([-1, 1], n), rng.uniform(0.3, 0.7))
        rows.append(ReportRow(f"exterior-parts-{i}", "exterior-parts-identity",
                              verify_parts_euclidean(f, psi).residual, 0.0, 1e-6 * ts))
    for i in range(cfg.instances):
        f = hyperbolic_catalog_field(rng, n)
        psi = log_gaussian(np.append(rng.uniform(-0.3, 0.3, n - 1), rng.uniform(0.7, 1.3)), rng.uniform(0.3, 0.5))
        rows.append(ReportRow(f"plane-parts-{i}", "plane-parts-identity",
                              verify_parts_hyperbolic(f, psi).residual, 0.0, 1e-6 * ts))
    worst = 0.0
    for _ in range(cfg.jacobian_points):
        x = np.append(rng.uniform(-1, 1, n - 1), rng.uniform(0.3, 2.0))
        z = rng.uniform(-1.5, 1.5, n - 1)
        worst = max(worst, _rel(float(phi_jacobian(x, z)), gram_jacobian(x, z)))
    rows.append(ReportRow("phi-jacobian-vs-gram", "phi-jacobian", worst, 0.0, 1e-6 * ts))
    ref = coarea_weight(np.append(np.zeros(n - 1), 1.0), n)
    spread = max(_rel(coarea_weight(np.append(rng.uniform(-1, 1, n - 1), rng.uniform(0.3, 3.0)), n), ref)
                 for _ in range(10))
    rows.append(ReportRow("coarea-weight-invariance", "hemisphere-coarea-weight", spread, 0.0, 1e-8 * ts))
    rows.append(ReportRow("coarea-weight-value", "hemisphere-coarea-weight", ref, np.pi if n == 2 else 2 * np.pi,
                          1e-8 * ts * ref))
    if cfg.coarea and n == 2:
        chk = verify_coarea(log_gaussian([rng.uniform(-0.2, 0.2), rng.uniform(0.8, 1.2)], 0.3))
        rows.append(ReportRow("coarea-identity", "hemisphere-coarea-identity", chk.residual, 0.0, 1e-4 * ts))
    return rows


def gram_jacobian(x, z, h=1e-5):
    """``sqrt(det(D^T D))`` of ``z -> phi_map(x, z)`` by central differences."""
    m = z.size
    D = np.empty((x.size, m))
    for i in range(m):
        e = np.zeros(m)
        e[i] = h
        D[:, i] = (phi_map(x, z + e) - phi_map(x, z - e)) / (2 * h)
    return float(np.sqrt(np.linalg.det(D.T @ D)))


def _slope(lams, vals):
    return float(np.polyfit(np.log(lams), np.log(vals), 1)[0])


def sphere_catalog(n):
    if n == 2:
        return [coordinate_scalar(0, 2), gaussian_bump([0.8, 0.6], 0.5),
                polynomial_scalar({(1, 1): 1.0, (0, 2): 0.5}, 2)]
    return [coordinate_scalar(2, 3), gaussian_bump([0.0, 0.6, 0.8], 0.5),
            polynomial_scalar({(1, 1, 0): 1.0, (0, 0, 2): 0.5}, 3)]


def hyperbolic_catalog(m):
    if m == 1:
        return [log_gaussian([1.0], 0.3), log_gaussian([0.7], 0.5)]
    return [log_gaussian([0.0, 1.0], 0.3), log_gaussian([0.2, 0.8], [0.4, 0.25])]


def cmd_decompose(cfg: ExperimentConfig, sweep_rows: list):
    n, ts = cfg.dimension, cfg.tolerance_scale
    rows = []
    lams = np.array(cfg.lambdas or [2.0**-k for k in range(3, 11)])
    small = lams[lams < 1]
    vals = [c_lambda(l, None, n) for l in small]
    if len(small) >= 2:
        rows.append(ReportRow("c-lambda-slope", "c-lambda-scaling", _slope(small, vals), n - 1.0, 0.05 * ts))
    if cfg.space == "euclidean":
        grid = np.array(cfg.lambdas or [2.0**-k for k in range(1, 11)])
        pooled = [[], [], []]
        for i, phi in enumerate(sphere_catalog(n)):
            r1, r2, G = sphere_lemma_ratios(phi, grid)
            _suite_rows(rows, sweep_rows, f"sphere-{i}", "sphere-decomposition", grid, r1, r2)
            _pool(pooled, grid, r1, r2)
        _suite_rows(rows, None, "sphere-catalog", "sphere-decomposition", *pooled)
    else:
        m = n - 1
        p = m + 1.0
        grid = np.array(cfg.lambdas or [2.0**-k for k in range(1, 7)])
        pooled = [[], [], []]
        for i, phi in enumerate(hyperbolic_catalog(m)):
            r1, r2, G = hyperbolic_lemma_ratios(phi, grid, p)
            _suite_rows(rows, sweep_rows, f"hyperbolic-{i}", "hyperbolic-decomposition", grid, r1, r2)
            _pool(pooled, grid, r1, r2)
        _suite_rows(rows, None, "hyperbolic-catalog", "hyperbolic-decomposition", *pooled)
    return rows


def _suite_rows(rows, sweep_rows, tag, anchor, grid, r1, r2):
    for name, r in (("phi1", r1), ("grad-phi2", r2)):
        suite = bounded_ratio_suite(grid, r)
        rows.append(ReportRow(f"{tag}-{name}-bounded", anchor, suite.fine_max, suite.constant,
                              suite.constant * 1e-6, "inequality"))
    if sweep_rows is not None:
        for lam, a, b in zip(grid, r1, r2):
            sweep_rows.append((tag, _fmt(lam), _fmt(a), _fmt(b)))


def _pool(pooled, grid, r1, r2):
    """Collect one function's ratios so a single constant can be fitted across the catalog."""
    for acc, vals in zip(pooled, (grid, r1, r2)):
        acc.extend(float(v) for v in vals)


def cmd_estimate(cfg: ExperimentConfig, trace_rows: list):
    names = cfg.families or [SETTING_FAMILIES[s] for s in Setting]
    rows = []
    for name in names:
        fam = get_family(name)
        est = ConstantEstimator(cfg.budget, cfg.restarts, cfg.seed, cfg.resolution).fit(fam)
        anchor = {Setting.EUCLIDEAN_MAIN: "main-estimate-euclidean", Setting.HYPERBOLIC_MAIN: "main-estimate-hyperbolic",
                  Setting.EUCLIDEAN_LOW_ORDER: "low-order-estimate"}[fam.setting]
        rows.append(ReportRow(f"{name}-lower-bound", anchor, est.constant_, 0.0, 0.0, "lower-bound"))
        for t in est.trace_:
            trace_rows.append((name, t.evaluation, t.restart, " ".join(f"{v:.10g}" for v in t.params),
                               _fmt(t.ratio), _fmt(t.best)))
    return rows


def read_report(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read report {path}: {exc}") from None
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != COLUMNS:
        raise ConfigError(f"{path}: not a report (bad header)")
    out = []
    for line in reader:
        if len(line) != len(COLUMNS) or line[5] not in KINDS:
            raise ConfigError(f"{path}: malformed row {line}")
        try:
            out.append(ReportRow(line[0], line[1], float(line[2]), float(line[3]), float(line[4]), line[5]))
        except ValueError:
            raise ConfigError(f"{path}: non-numeric cell in {line}") from None
    return out


def cmd_report(paths):
    """Merge shards into one row per anchor: worst measured value and overall verdict."""
    if not paths:
        raise ConfigError("report needs at least one shard")
    rows = [r for p in paths for r in read_report(p)]
    table = {}
    for r in sorted(rows, key=lambda r: r.cells()):
        entry = table.setdefault(r.anchor, {"checks": 0, "failed": 0, "max_measured": -np.inf})
        entry["checks"] += 1
        entry["failed"] += 0 if r.passed else 1
        entry["max_measured"] = max(entry["max_measured"], r.measured)
    return sorted(rows, key=lambda r: r.cells()), {a: table[a] for a in sorted(table)}


COMMANDS = ("verify-identities", "decompose", "estimate", "report")


# --------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="borderlab", description="Numerical checks for divergence-free L1 pairings.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS[:3]:
        sp = sub.add_parser(name)
        sp.add_argument("--config")
        sp.add_argument("--out")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--dimension", type=int, choices=(2, 3))
        sp.add_argument("--space", choices=("euclidean", "hyperbolic"))
        sp.add_argument("--tolerance-scale", type=float, dest="tolerance_scale")
        if name == "decompose":
            sp.add_argument("--sweep", help="per-lambda ratio CSV for log-log plots")
        if name == "estimate":
            sp.add_argument("--trace", help="search trace CSV")
            sp.add_argument("--budget", type=int)
            sp.add_argument("--resolution", type=int, help="quadrature nodes per axis")
            sp.add_argument("--family", action="append", dest="families")
    rp = sub.add_parser("report")
    rp.add_argument("paths", nargs="*")
    rp.add_argument("--out")
    return ap


def _write(out, rows, summ):
    if out:
        path = Path(out)
        with path.open("w", encoding="utf-8", newline="") as fh:
            write_csv(rows, fh)
        path.with_suffix(".json").write_text(json.dumps(summ, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        write_csv(rows, sys.stdout)
        sys.stdout.write(json.dumps(summ, sort_keys=True) + "\n")


def _write_table(path, header, rows):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.ERROR)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "report":
            rows, table = cmd_report(args.paths)
            summ = summary(None, rows, "report")
            summ["anchors"] = table
            _write(args.out, rows, summ)
            return summ["exit_code"]
        overrides = {"command": args.command, "seed": args.seed, "dimension": args.dimension, "space": args.space,
                     "tolerance_scale": args.tolerance_scale, "output": args.out,
                     "budget": getattr(args, "budget", None), "resolution": getattr(args, "resolution", None),
                     "families": getattr(args, "families", None)}
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    extra: list = []
    try:
        if cfg.command == "verify-identities":
            rows = cmd_verify_identities(cfg)
        elif cfg.command == "decompose":
            rows = cmd_decompose(cfg, extra)
            if args.sweep:
                _write_table(args.sweep, ("function", "lambda", "phi1_ratio", "grad_phi2_ratio"), extra)
        else:
            rows = cmd_estimate(cfg, extra)
            if args.trace:
                _write_table(args.trace, ("family", "evaluation", "restart", "params", "ratio", "best"), extra)
    except (DecompositionError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    summ = summary(cfg, rows, cfg.command)
    _write(cfg.output or None, rows, summ)
    return summ["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
