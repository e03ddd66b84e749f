"""Command-line pipeline with reproducible JSON configs.

Subcommands: generate, select, cluster, fullscan, fastscan, compare,
worstcase.  A single JSON config document describes the dataset, the
oracle, and the scan parameters; ``--set dotted.path=value`` overrides
individual fields.  Every run writes a ``run_manifest.json`` with the
resolved config hash and checksums of the deterministic artifacts, so
re-running with the same config reproduces identical outputs (wall-clock
numbers live in the separate, unchecksummed ``timing.json``).

Exit codes: 0 success, 2 config/validation error, 3 finished with
non-convergence flags.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import AdaptiveParams, PsoParams, self_adaptive_pso_kmeans
from .dataset import (
    AttributeKind,
    OperatingPointSet,
    SyntheticYearConfig,
    denormalize,
    generate_synthetic_year,
    load_csv,
    save_csv,
)
from .oracles import DampingSurrogate, StabilityTrace, TwoBusMargin, full_scan
from .relief import ReliefParams, select_features
from .scanning import (
    ScanConfig,
    compare_full_vs_fast,
    fast_scan,
    validate,
    worst_case_analysis,
)


class ConfigError(ValueError):
    """Invalid run config; message names the offending key path."""


_SCHEMA = {
    "dataset": {
        "csv": None,
        "synthetic": {
            "n_hours": None,
            "n_attributes": None,
            "seed": None,
            "seasonal_amplitude": None,
            "diurnal_amplitude": None,
            "noise_sigma": None,
            "n_informative": None,
        },
    },
    "oracle": {
        "kind": None,
        "seed": None,
        "b0": None,
        "linear": None,
        "quadratic": None,
        "informative": None,
        "E": None,
        "X": None,
        "load_columns": None,
        "delay_ms": None,
    },
    "scan": {
        "relief": {
            "m": None,
            "k": None,
            "sigma": None,
            "batch": None,
            "rho_threshold": None,
            "epsilon_f": None,
            "window": None,
        },
        "C": None,
        "pso": {
            "swarm_size": None,
            "n_iter": None,
            "c1": None,
            "c2": None,
            "w_max": None,
            "w_min": None,
            "sigma_t2": None,
            "p0": None,
            "seed": None,
        },
        "adapt": {"k_init": None, "eps_d": None, "eps_c": None, "max_outer": None},
        "sample_size": None,
        "seed": None,
    },
    "worstcase": {"trace": None},
}


def _check_keys(node, schema, path=""):
    if not isinstance(node, dict):
        raise ConfigError(f"config key {path or '<root>'} must be an object")
    for key, value in node.items():
        here = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown config key {here!r}")
        child = schema[key]
        if isinstance(child, dict) and isinstance(value, dict):
            _check_keys(value, child, here)
        elif isinstance(child, dict) and value is not None:
            raise ConfigError(f"config key {here!r} must be an object")


def _apply_override(config: dict, entry: str):
    if "=" not in entry:
        raise ConfigError(f"--set needs dotted.path=value, got {entry!r}")
    dotted, raw = entry.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = config
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set path {dotted!r} crosses a non-object value")
    node[parts[-1]] = value


def load_config(path: str | None, overrides) -> dict:
    config: dict = {}
    if path:
        try:
            config = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    for entry in overrides or []:
        _apply_override(config, entry)
    _check_keys(config, _SCHEMA)
    return config


def _build(cls, section: dict, path: str):
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config section {path!r}: {exc}")


def build_dataset(config: dict) -> OperatingPointSet:
    section = config.get("dataset") or {}
    if "csv" in section and "synthetic" in section:
        raise ConfigError("dataset: give either 'csv' or 'synthetic', not both")
    if "csv" in section:
        try:
            return load_csv(section["csv"])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"dataset.csv: {exc}")
    synth = _build(SyntheticYearConfig, section.get("synthetic") or {}, "dataset.synthetic")
    return generate_synthetic_year(synth)


def build_oracle(config: dict, data: OperatingPointSet):
    section = dict(config.get("oracle") or {})
    kind = section.pop("kind", "damping_surrogate")
    delay_ms = section.pop("delay_ms", 0.0)
    if kind == "damping_surrogate":
        if "linear" in section:
            linear = {int(i): float(c) for i, c in section.pop("linear").items()}
            quadratic = {
                (int(i), int(j)): float(c)
                for i, j, c in section.pop("quadratic", [])
            }
            b0 = float(section.pop("b0", 5.0))
            section.pop("seed", None)
            section.pop("informative", None)
            return DampingSurrogate(b0=b0, linear=linear, quadratic=quadratic,
                                    delay_ms=delay_ms)
        informative = section.pop("informative", None)
        if informative is None:
            informative = data.metadata.get("informative_indices")
        if not informative:
            raise ConfigError(
                "oracle: damping_surrogate needs 'informative' indices or 'linear' "
                "coefficients (synthetic datasets provide them via metadata)"
            )
        return DampingSurrogate.from_seed(
            informative,
            seed=int(section.pop("seed", 0)),
            b0=float(section.pop("b0", 5.0)),
            delay_ms=delay_ms,
        )
    if kind == "two_bus_margin":
        load_columns = section.pop("load_columns", None)
        if load_columns is None:
            load_columns = data.columns_of_kind(AttributeKind.LOAD_P)
        if not load_columns:
            raise ConfigError("oracle: two_bus_margin found no load_P columns")
        return TwoBusMargin(
            E=float(section.pop("E", 1.0)),
            X=float(section.pop("X", 0.5)),
            load_indices=load_columns,
            delay_ms=delay_ms,
        )
    raise ConfigError(f"oracle.kind: unknown kind {kind!r}")


def build_scan_config(config: dict) -> ScanConfig:
    section = config.get("scan") or {}
    relief = _build(ReliefParams, section.get("relief") or {}, "scan.relief")
    pso = _build(PsoParams, section.get("pso") or {}, "scan.pso")
    adapt = _build(AdaptiveParams, section.get("adapt") or {}, "scan.adapt")
    return _build(
        ScanConfig,
        {
            "relief": relief,
            "pso": pso,
            "adapt": adapt,
            "C": section.get("C"),
            "sample_size": section.get("sample_size", 500),
            "seed": section.get("seed", 0),
        },
        "scan",
    )


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def write_manifest(out: Path, command: str, config: dict, artifacts) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "config_sha256": _config_hash(config),
        "seed": (config.get("scan") or {}).get("seed", 0),
        "artifacts": {
            name: _sha256_file(out / name) for name in sorted(artifacts)
        },
    }
    path = out / "run_manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


def _dataset_hash(data: OperatingPointSet) -> str:
    digest = hashlib.sha256()
    digest.update(data.values.tobytes())
    digest.update(data.timestamps.tobytes())
    return digest.hexdigest()


def _demand_series(data: OperatingPointSet) -> np.ndarray:
    cols = data.columns_of_kind(AttributeKind.LOAD_P)
    if not cols:
        raise ConfigError("worstcase: dataset has no load_P attributes to sum into demand")
    raw = denormalize(data)
    return raw[:, cols].sum(axis=1)


def cmd_generate(args, config: dict) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "dataset.csv"
    if target.exists() and not args.force:
        print(f"error: {target} exists; pass --force to overwrite", file=sys.stderr)
        return 2
    section = config.get("dataset") or {}
    synth = _build(SyntheticYearConfig, section.get("synthetic") or {}, "dataset.synthetic")
    data = generate_synthetic_year(synth)
    save_csv(data, target)
    write_manifest(out, "generate", config, ["dataset.csv", "dataset.csv.norm.json"])
    print(f"wrote {target} ({data.n_points} hours x {data.n_attributes} attributes)")
    return 0


def cmd_select(args, config: dict) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = build_dataset(config)
    oracle = build_oracle(config, data)
    scan = build_scan_config(config)
    report = select_features(data, oracle, scan.relief, C=scan.C, seed=scan.seed)
    report.save_json(out / "feature_report.json")
    report.save_csv(out / "feature_report.csv")
    write_manifest(out, "select", config, ["feature_report.json", "feature_report.csv"])
    print(
        f"feature selection: training_size={report.training_size} "
        f"converged={report.converged} top3={report.top(3)}"
    )
    return 0 if report.converged else 3


def _weights_for_cluster(out: Path, data, oracle, scan: ScanConfig):
    report_path = out / "feature_report.json"
    if report_path.exists():
        payload = json.loads(report_path.read_text())
        weights = np.array(
            [max(row["adjusted_weight"], 0.0) for row in payload["attributes"]]
        )
        if len(weights) == data.n_attributes and np.any(weights > 0):
            return weights, True
    report = select_features(data, oracle, scan.relief, C=scan.C, seed=scan.seed)
    return report.distance_weights(), report.converged


def cmd_cluster(args, config: dict) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = build_dataset(config)
    oracle = build_oracle(config, data)
    scan = build_scan_config(config)
    weights, _ = _weights_for_cluster(out, data, oracle, scan)
    if not np.any(weights > 0):
        weights = np.ones(data.n_attributes)
    model = self_adaptive_pso_kmeans(data.values, weights, scan.pso, scan.adapt)
    model.save_json(out / "cluster_model.json")
    model.save_assignment_csv(out / "assignment.csv", hours=data.timestamps)
    write_manifest(out, "cluster", config, ["cluster_model.json", "assignment.csv"])
    print(f"clustering: k={model.k} smse={model.smse:.6f} converged={model.converged}")
    return 0 if model.converged else 3


def cmd_fullscan(args, config: dict) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = build_dataset(config)
    oracle = build_oracle(config, data)
    trace = full_scan(data, oracle)
    trace.save_csv(out / "full_trace.csv")
    trace.save_json(out / "full_trace.json")
    meta = {
        "dataset_sha256": _dataset_hash(data),
        "oracle": oracle.config() if hasattr(oracle, "config") else {"kind": oracle.kind},
        "elapsed_s": trace.elapsed_s,
        "partial": trace.partial,
    }
    (out / "full_trace.meta.json").write_text(json.dumps(meta, indent=2))
    write_manifest(out, "fullscan", config, ["full_trace.csv", "full_trace.json"])
    print(f"full scan: {len(trace.lam)} evaluations in {trace.elapsed_s:.2f} s")
    return 0


def _write_scan_artifacts(out: Path, report, data) -> list[str]:
    report.save_json(out / "scan_report.json")
    report.save_trace_csv(out / "scan_trace.csv")
    report.save_histogram_csv(out / "ape_histogram.csv")
    report.feature_report.save_json(out / "feature_report.json")
    report.feature_report.save_csv(out / "feature_report.csv")
    report.model.save_json(out / "cluster_model.json")
    report.model.save_assignment_csv(out / "assignment.csv", hours=data.timestamps)
    timing = {"timing": report.timing, "speedup": report.speedup}
    (out / "timing.json").write_text(json.dumps(timing, indent=2))
    return [
        "scan_report.json",
        "scan_trace.csv",
        "ape_histogram.csv",
        "feature_report.json",
        "feature_report.csv",
        "cluster_model.json",
        "assignment.csv",
    ]


def cmd_fastscan(args, config: dict) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = build_dataset(config)
    oracle = build_oracle(config, data)
    scan = build_scan_config(config)
    report = fast_scan(data, oracle, scan)
    report = validate(report, data, oracle, min(scan.sample_size, data.n_points), seed=scan.seed)
    artifacts = _write_scan_artifacts(out, report, data)
    write_manifest(out, "fastscan", config, artifacts)
    print(
        f"fast scan: k={report.k_final} reduction={report.reduction:.3f} "
        f"mape={report.mape:.4f} max_ape={report.max_ape:.4f} flagged={report.flagged}"
    )
    return 3 if report.flagged else 0


def _cached_full_trace(out: Path, data, oracle) -> StabilityTrace | None:
    trace_path = out / "full_trace.csv"
    meta_path = out / "full_trace.meta.json"
    if not (trace_path.exists() and meta_path.exists()):
        return None
    meta = json.loads(meta_path.read_text())
    oracle_cfg = oracle.config() if hasattr(oracle, "config") else {"kind": oracle.kind}
    if meta.get("dataset_sha256") != _dataset_hash(data):
        return None
    if meta.get("oracle") != oracle_cfg or meta.get("partial"):
        return None
    trace = StabilityTrace.load_csv(trace_path, kind=oracle_cfg.get("kind", "tabulated"))
    trace.elapsed_s = float(meta.get("elapsed_s", 0.0))
    return trace


def cmd_compare(args, config: dict) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = build_dataset(config)
    oracle = build_oracle(config, data)
    scan = build_scan_config(config)
    cached = _cached_full_trace(out, data, oracle)
    report = compare_full_vs_fast(data, oracle, scan, cached_full=cached)
    report = validate(report, data, oracle, min(scan.sample_size, data.n_points), seed=scan.seed)
    artifacts = _write_scan_artifacts(out, report, data)
    if cached is None:
        trace = StabilityTrace(
            hours=data.timestamps.copy(), lam=report.lambda_full,
            kind=oracle.kind, elapsed_s=report.timing["full_scan_s"],
        )
        trace.save_csv(out / "full_trace.csv")
        meta = {
            "dataset_sha256": _dataset_hash(data),
            "oracle": oracle.config() if hasattr(oracle, "config") else {"kind": oracle.kind},
            "elapsed_s": trace.elapsed_s,
            "partial": False,
        }
        (out / "full_trace.meta.json").write_text(json.dumps(meta, indent=2))
        artifacts.append("full_trace.csv")
    write_manifest(out, "compare", config, artifacts)
    print(
        f"compare: speedup={report.speedup:.2f}x (full {report.timing['full_scan_s']:.2f} s, "
        f"cached={cached is not None}) mape={report.mape:.4f}"
    )
    return 3 if report.flagged else 0


def cmd_worstcase(args, config: dict) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = build_dataset(config)
    which = (config.get("worstcase") or {}).get("trace", "full")
    if which == "full":
        trace_path = out / "full_trace.csv"
        if not trace_path.exists():
            print(f"error: {trace_path} not found; run fullscan first", file=sys.stderr)
            return 2
        trace = StabilityTrace.load_csv(trace_path)
    elif which == "fast":
        report_path = out / "scan_report.json"
        if not report_path.exists():
            print(f"error: {report_path} not found; run fastscan first", file=sys.stderr)
            return 2
        payload = json.loads(report_path.read_text())
        trace = StabilityTrace(
            hours=np.array(payload["hours"]),
            lam=np.array(payload["lambda_hat"]),
            kind="fast",
        )
    else:
        print(f"error: worstcase.trace must be 'full' or 'fast', got {which!r}", file=sys.stderr)
        return 2
    if not np.array_equal(trace.hours, data.timestamps):
        print("error: trace hours do not match the dataset", file=sys.stderr)
        return 2
    demand = _demand_series(data)
    result = worst_case_analysis(trace, demand)
    (out / "worst_case.json").write_text(json.dumps(result.to_dict(), indent=2))
    write_manifest(out, "worstcase", config, ["worst_case.json"])
    print(
        f"worst case: min lambda at hour {result.lambda_argmin_hour}, peak demand at "
        f"hour {result.demand_argmax_hour}, shifted={result.shifted}, r={result.pearson_r:.3f}"
    )
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "select": cmd_select,
    "cluster": cmd_cluster,
    "fullscan": cmd_fullscan,
    "fastscan": cmd_fastscan,
    "compare": cmd_compare,
    "worstcase": cmd_worstcase,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridscan",
        description="Fast stability scanning via feature-weighted PSO-k-means clustering.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument(
            "--set", dest="overrides", action="append", metavar="PATH=VALUE",
            help="override a config field by dotted path (value parsed as JSON)",
        )
        if name == "generate":
            p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.overrides)
        return _COMMANDS[args.command](args, config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
