"""Command-line entry point: ``afbm <subcommand> [--config run.yaml] [--key value ...]``.

Settings come from a YAML document (keys as in :class:`RunConfig`; a nested
``grid`` section maps to the ``grid_*`` keys), then command-line flags, which
win.  ``AFBM_OUTPUT_DIR`` overrides the output directory from the config but
not an explicit ``--output-dir`` flag.

Exit codes
----------
0 success, 2 invalid configuration, 3 missing or malformed upstream artifact,
4 numerical failure, 5 at least one verdict failed.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import hashlib
import json
import os
import platform
import sys
import warnings
from importlib import metadata
from pathlib import Path

import numpy as np
import yaml

from . import experiments as ex
from ._validation import check_alpha, check_depth, check_dims, check_positive_int
from .exceptions import AfbmError
from .io import ArtifactError, read_csv, read_paths, write_csv, write_paths
from .kernels import cov_realline, cross_cov_re_im
from .linsolve import LinearFields, SolveConfig, euler_solve
from .moments import factorial_decay_fit, mc_variance, wick_variance_gamma, wick_variance_Y
from .sampler import AfbmSampler, ComplexGrid, YSampler
from .signature import all_words, check_geometricity, check_multiplicativity, path_signature

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ARTIFACT = 3
EXIT_NUMERICAL = 4
EXIT_VERDICT = 5

OUTPUT_ENV = "AFBM_OUTPUT_DIR"
SUBCOMMANDS = ("kernel-table", "sample", "signature", "verify-shuffle", "solve", "moments", "fit", "full-report")


class ConfigError(ValueError):
    pass


class VerdictFailure(Exception):
    def __init__(self, message, artifacts=()):
        super().__init__(message)
        self.artifacts = list(artifacts)


@dataclasses.dataclass
class RunConfig:
    """Every setting of a run; each field is also a ``--flag``."""

    alpha: float = 0.3
    d: int = 2
    r: int = 2
    depth: int = 4
    process: str = "afbm"
    grid_start: float = 0.0
    grid_end: float = 1.0
    grid_points: int = 17
    grid_epsilon_shift: float = 0.0
    n_samples: int = 10_000
    seed: int = 0
    fields_file: str = ""
    y0: str = "1"
    partition_stride: int = 4
    series_tol: float = 1e-10
    max_terms: int = 24
    output_dir: str = "afbm-output"
    threads: int = 1
    criteria: str = "1,2,3,4,5,6,7,8"

    def validate(self) -> "RunConfig":
        try:
            check_alpha(self.alpha)
            check_dims(self.d)
            check_depth(self.depth)
            check_positive_int(self.r, "r")
            check_positive_int(self.grid_points, "grid_points", 2)
            check_positive_int(self.n_samples, "n_samples")
            check_positive_int(self.partition_stride, "partition_stride")
            check_positive_int(self.max_terms, "max_terms")
            check_positive_int(self.threads, "threads")
            check_positive_int(self.seed, "seed", 0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.process not in ("afbm", "Y"):
            raise ConfigError("process must be 'afbm' or 'Y'")
        if not self.grid_end > self.grid_start:
            raise ConfigError("grid_end must exceed grid_start")
        if self.grid_epsilon_shift < 0:
            raise ConfigError("grid_epsilon_shift must be >= 0")
        if self.process == "Y" and (self.grid_start < 0 or self.grid_epsilon_shift != 0):
            raise ConfigError("Y is sampled on nonnegative real times without shift")
        if not self.series_tol > 0:
            raise ConfigError("series_tol must be positive")
        self.criteria_list()
        self.y0_vector()
        return self

    def criteria_list(self) -> list:
        try:
            out = sorted({int(c) for c in str(self.criteria).split(",") if c.strip()})
        except ValueError as exc:
            raise ConfigError(f"criteria must be a comma-separated list, got {self.criteria!r}") from exc
        if not out or any(c not in ex.CRITERIA for c in out):
            raise ConfigError(f"criteria must be drawn from {sorted(ex.CRITERIA)}")
        return out

    def y0_vector(self) -> np.ndarray:
        try:
            vals = [complex(v) for v in str(self.y0).split(",")]
        except ValueError as exc:
            raise ConfigError(f"y0 must be comma-separated numbers, got {self.y0!r}") from exc
        if len(vals) == 1:
            out = np.zeros(self.r, dtype=complex)
            out[0] = vals[0]
            return out
        if len(vals) != self.r:
            raise ConfigError(f"y0 has {len(vals)} entries, expected r={self.r}")
        return np.array(vals)

    def digest(self) -> str:
        text = json.dumps(dataclasses.asdict(self), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name, value):
    kind = type(getattr(RunConfig(), name))
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if kind is str and isinstance(value, (int, float, list)):
        return ",".join(map(str, value)) if isinstance(value, list) else str(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(f"{name} must be of type {kind.__name__}, got {value!r}")
    return value


def load_config(path) -> dict:
    """Read a YAML config into flat ``RunConfig`` keys."""
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh) or {}
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} not found") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    flat = {}
    for key, value in doc.items():
        key = str(key).replace("-", "_")
        if key == "grid" and isinstance(value, dict):
            for sub, v in value.items():
                flat[f"grid_{str(sub).replace('-', '_')}"] = v
        else:
            flat[key] = value
    unknown = set(flat) - set(_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return {k: _coerce(k, v) for k, v in flat.items()}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="afbm",
        description="Analytic fBm: sampling, signatures, Chen-series solves and moment checks.",
        epilog="exit codes: 0 ok, 2 config error, 3 missing upstream artifact, 4 numerical failure, "
        "5 verdict failure.  Env var AFBM_OUTPUT_DIR overrides the configured output directory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML run configuration")
        for field in dataclasses.fields(RunConfig):
            kind = type(field.default)
            p.add_argument(f"--{field.name.replace('_', '-')}", dest=field.name, type=kind, default=None)
        if name == "full-report":
            p.add_argument("--verdicts-only", action="store_true",
                           help="recompute verdicts from the CSVs already in the output directory")
    return parser


def resolve_config(args) -> RunConfig:
    values = {}
    if args.config:
        values.update(load_config(args.config))
    env = os.environ.get(OUTPUT_ENV)
    if env:
        values["output_dir"] = env
    for name in _FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    return RunConfig(**values).validate()


# ----------------------------------------------------------------- stages


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("numpy", "scipy", "scikit-learn", "PyYAML", "artifact"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def write_manifest(cfg: RunConfig, command: str, artifacts) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.yaml", "w") as fh:
        yaml.safe_dump(dataclasses.asdict(cfg), fh, sort_keys=True)
    manifest = {
        "command": command,
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "versions": _versions(),
        "artifacts": sorted(str(Path(a).name) for a in artifacts),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    path = out / f"manifest-{command}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _out(cfg, name) -> Path:
    return Path(cfg.output_dir) / name


def cmd_kernel_table(cfg: RunConfig):
    t = np.linspace(cfg.grid_start, cfg.grid_end, cfg.grid_points)
    rows = []
    for s in t:
        for u in t:
            cov = complex(cov_realline(s, u, cfg.alpha))
            rows.append({"s": s, "t": u, "cov_re": cov.real, "cov_im": cov.imag,
                         "cross_re_im": float(cross_cov_re_im(s, u, cfg.alpha))})
    return [write_csv(_out(cfg, "kernel_table.csv"), rows)]


def cmd_sample(cfg: RunConfig):
    if cfg.process == "Y":
        sampler = YSampler(alpha=cfg.alpha, n_components=cfg.d, n_jobs=cfg.threads)
        grid = np.linspace(cfg.grid_start, cfg.grid_end, cfg.grid_points)
    else:
        sampler = AfbmSampler(alpha=cfg.alpha, epsilon_shift=cfg.grid_epsilon_shift, n_components=cfg.d,
                              n_jobs=cfg.threads)
        grid = ComplexGrid.real_line(cfg.grid_start, cfg.grid_end, cfg.grid_points, cfg.d, cfg.grid_epsilon_shift)
    paths = sampler.fit(grid).sample(cfg.n_samples, cfg.seed)
    return [write_paths(_out(cfg, "paths.bin"), paths)]


def _word_str(w) -> str:
    return "".join(map(str, w))


def cmd_signature(cfg: RunConfig):
    paths = read_paths(_out(cfg, "paths.bin"))
    sig = path_signature(np.swapaxes(paths.values, 1, 2), cfg.depth)
    rows = []
    for i in range(paths.n_samples):
        for n in range(1, sig.depth + 1):
            lev = sig.levels[n - 1][i]
            for j, w in enumerate(all_words(sig.dims, n)):
                rows.append({"sample_id": i, "level": n, "word": _word_str(w), "re": lev[j].real, "im": lev[j].imag})
    return [write_csv(_out(cfg, "signatures.csv"), rows)]


def cmd_verify_shuffle(cfg: RunConfig):
    paths = read_paths(_out(cfg, "paths.bin"))
    x = np.swapaxes(paths.values, 1, 2)
    mid = x.shape[1] // 2
    times = np.arange(x.shape[1], dtype=float)
    full = path_signature(x, cfg.depth, times=times)
    left = path_signature(x, cfg.depth, 0, mid + 1, times=times)
    right = path_signature(x, cfg.depth, mid, None, times=times)
    rows = []
    for i in range(paths.n_samples):
        geo = check_geometricity(full.sample(i))
        mult = check_multiplicativity(full.sample(i), left.sample(i), right.sample(i))
        rows.append({"sample": i, "shuffle_residual": geo.max_residual, "chen_residual": mult.max_residual})
    path = write_csv(_out(cfg, "shuffle_check.csv"), rows)
    ok, msg = ex.verdict_rough_path_algebra(rows)
    print(("PASS " if ok else "FAIL ") + msg)
    if not ok:
        raise VerdictFailure(msg, [path])
    return [path]


def cmd_solve(cfg: RunConfig):
    if not cfg.fields_file or not Path(cfg.fields_file).is_file():
        raise ArtifactError(f"fields file {cfg.fields_file!r} not found")
    try:
        fields = LinearFields.from_json_obj(json.loads(Path(cfg.fields_file).read_text()))
    except (ValueError, TypeError) as exc:
        raise ArtifactError(f"fields file {cfg.fields_file} is malformed: {exc}") from exc
    paths = read_paths(_out(cfg, "paths.bin"))
    npts = paths.values.shape[-1]
    partition = list(range(0, npts, cfg.partition_stride))
    if partition[-1] != npts - 1:
        partition.append(npts - 1)
    sol = euler_solve(paths, fields, SolveConfig(cfg.depth, partition, cfg.series_tol, cfg.max_terms),
                      cfg.y0_vector())
    rows = []
    for i in range(sol.shape[0]):
        for k, node in enumerate(partition):
            for c in range(sol.shape[2]):
                v = sol[i, k, c]
                rows.append({"sample_id": i, "time_index": node, "component": c + 1, "re": v.real, "im": v.imag})
    return [write_csv(_out(cfg, "solutions.csv"), rows)]


def cmd_moments(cfg: RunConfig):
    paths = read_paths(_out(cfg, "paths.bin"))
    rows = read_csv(_out(cfg, "signatures.csv"))
    entries = {}
    for row in rows:
        entries.setdefault(row["word"], []).append(complex(row["re"], row["im"]))
    s, t = complex(paths.points[0]), complex(paths.points[-1])
    alpha = paths.hurst.alpha
    out = []
    for word, vals in entries.items():
        w = tuple(int(c) for c in word)
        est, se = mc_variance(np.array(vals))
        wick = float("nan")
        if len(w) <= 2:
            if np.iscomplexobj(paths.values):
                wick = wick_variance_gamma(w, s, t, alpha)
            else:
                wick = wick_variance_Y(w, s.real, t.real, alpha)
        out.append({"level": len(w), "word": word, "variance": est, "stderr": se, "wick": wick,
                    "alpha": alpha, "length": abs(t - s)})
    return [write_csv(_out(cfg, "moments.csv"), out)]


def cmd_fit(cfg: RunConfig):
    rows = read_csv(_out(cfg, "moments.csv"))
    ones = sorted((r for r in rows if set(str(r["word"])) == {"1"}), key=lambda r: r["level"])
    fit = factorial_decay_fit([r["variance"] for r in ones], ones[0]["length"], ones[0]["alpha"],
                              [r["stderr"] for r in ones])
    margin = float(np.max(np.log([r["variance"] for r in ones]) - fit.details["log_bound"]))
    report = [
        {"criterion": "r_squared", "estimate": fit.r_squared, "target": 0.98, "tolerance": 0.0,
         "verdict": "PASS" if fit.r_squared >= 0.98 else "FAIL"},
        {"criterion": "domination", "estimate": margin, "target": 0.0, "tolerance": 0.0,
         "verdict": "PASS" if fit.details["dominated"] else "FAIL"},
        {"criterion": "C_prime", "estimate": fit.constant, "target": float("nan"), "tolerance": float("nan"),
         "verdict": "REPORTED"},
        {"criterion": "factorial_decay", "estimate": fit.slope, "target": float("nan"), "tolerance": float("nan"),
         "verdict": fit.verdict},
    ]
    path = write_csv(_out(cfg, "fit_report.csv"), report)
    if not fit.passed:
        raise VerdictFailure(f"factorial decay fit {fit.verdict}", [path])
    return [path]


def _criterion_kwargs(cfg: RunConfig, k: int) -> dict:
    a, n = cfg.alpha, cfg.n_samples
    seed = cfg.seed + 1000 * k
    return {
        1: dict(alphas=(a,), n_samples=n, seed=seed, n_jobs=cfg.threads),
        2: dict(alphas=(a,), n_samples=n, seed=seed),
        3: dict(alpha=a, depth=cfg.depth, d=cfg.d, seed=seed),
        4: dict(alphas=(a,), n_samples=n, seed=seed, n_jobs=cfg.threads),
        5: dict(alpha=a, n_samples=n, seed=seed),
        6: dict(alpha=a, d=cfg.d, r=cfg.r, seed=seed),
        7: dict(alphas=(a,), n_samples=n, seed=seed, d=cfg.d, r=cfg.r, n_jobs=cfg.threads),
        8: dict(),
    }[k]


def _criterion_csv(cfg, k) -> Path:
    return _out(cfg, f"criterion_{k}_{ex.CRITERIA[k][0]}.csv")


def report_verdicts(cfg: RunConfig):
    """Verdict table computed from the criterion CSVs on disk only."""
    table = []
    for k in cfg.criteria_list():
        name, _, verdict = ex.CRITERIA[k]
        rows = read_csv(_criterion_csv(cfg, k))
        ok, msg = verdict(rows)
        table.append({"criterion": str(k), "name": name, "verdict": "PASS" if ok else "FAIL", "summary": msg})
        if k == 7:
            ok_b, msg_b = ex.verdict_holder_scaling(rows, rule="bound")
            table.append({"criterion": "7-bound", "name": name + "_bound_direction",
                          "verdict": "PASS" if ok_b else "FAIL", "summary": msg_b})
    return table


def cmd_full_report(cfg: RunConfig, verdicts_only: bool = False):
    artifacts = []
    if not verdicts_only:
        for k in cfg.criteria_list():
            name, run, _ = ex.CRITERIA[k]
            rows = run(**_criterion_kwargs(cfg, k))
            artifacts.append(write_csv(_criterion_csv(cfg, k), rows))
    table = report_verdicts(cfg)
    artifacts.append(write_csv(_out(cfg, "verdicts.csv"), table))
    for row in table:
        print(f"criterion {row['criterion']:>8} {row['verdict']}: {row['summary']}")
    if any(r["verdict"] != "PASS" for r in table):
        raise VerdictFailure("at least one criterion failed", artifacts)
    return artifacts


COMMANDS = {
    "kernel-table": cmd_kernel_table,
    "sample": cmd_sample,
    "signature": cmd_signature,
    "verify-shuffle": cmd_verify_shuffle,
    "solve": cmd_solve,
    "moments": cmd_moments,
    "fit": cmd_fit,
}


def run_subcommand(name: str, cfg: RunConfig, verdicts_only: bool = False) -> int:
    """Run one stage and write its manifest; returns the exit status."""
    artifacts = []
    status = EXIT_OK
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            if name == "full-report":
                artifacts = cmd_full_report(cfg, verdicts_only)
            else:
                artifacts = COMMANDS[name](cfg)
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT
    except VerdictFailure as exc:
        print(f"verdict failure: {exc}", file=sys.stderr)
        artifacts = exc.artifacts
        status = EXIT_VERDICT
    except (AfbmError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    write_manifest(cfg, name, artifacts)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ConfigError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_subcommand(args.command, cfg, getattr(args, "verdicts_only", False))


if __name__ == "__main__":
    sys.exit(main())
