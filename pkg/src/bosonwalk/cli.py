"""Command-line runner.

Subcommands:

``run <config> [--steps k] [--out dir] [--threads t] [--snapshot-every s]
[--toggle name=value]``
    Drive a walk from a JSON run configuration (or a previously written
    manifest), writing per-step CSV series, a manifest, snapshots, and a
    step-report log.
``resume <snapshot> <config>``
    Continue an interrupted run; the concatenation of both runs' series is
    bit-identical to an uninterrupted run.
``validate <graph-file>``
    Print the decomposition validation report for a graph document.
``oracle-compare <config>``
    Evolve the configured walk on both the sparse and the dense reference
    engine (size-guarded) and report the max amplitude deviation.

Exit codes: 0 success, 1 mid-run/comparison failure, 2 invalid
configuration (the message names the offending field).

Step units: a run configuration may declare ``step_unit: "stage"`` to index
the output series by coin/shift stages (two per conditional shift, the
convention used in the source figures) instead of the default one step per
conditional shift; stage-unit step numbers are always even.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .coin import CoinMatrix, coin_from_array, coin_matrix
from .evolution import run as run_evolution
from .graphs import (
    GraphFormatError,
    GraphSpec,
    GraphValidationError,
    build_named,
    graph_document,
    load_graph,
    validate_decomposition,
)
from .observables import (
    DEFAULT_MOMENT_ORDERS,
    OBSERVABLE_FAMILIES,
    ObservableSchedule,
    detect_regime_change,
)
from .oracle import compare_evolution
from .statespace import (
    DROP_THRESHOLD,
    EFFECTIVE_DIM_TOL,
    AmplitudeTable,
    ConfigurationBasis,
    read_snapshot,
)

OUTPUT_DIR_ENV = "BOSONWALK_OUT"

TOGGLE_DEFAULTS = {
    "drop_threshold": DROP_THRESHOLD,
    "effective_dim_tol": EFFECTIVE_DIM_TOL,
    "double_coin_factor": False,
    "counting_unrestricted": False,
    "phase_space_modes": None,
}

SERIES_FILES = (
    "densities.csv",
    "moments.csv",
    "g2.csv",
    "counting_hist.csv",
    "counting_weighted.csv",
    "phase_space.csv",
    "effective_dimension.csv",
    "step_reports.csv",
)


class ConfigError(ValueError):
    """Invalid run configuration; the message names the field."""


@dataclass
class ResolvedConfig:
    graph: GraphSpec
    n_particles: int
    steps: int
    step_unit: str
    coin: CoinMatrix
    coin_spec: object
    initial_terms: list
    schedule: ObservableSchedule
    toggles: dict
    snapshot_every: int | None
    seed: object = None
    document: dict = field(default_factory=dict)


def _fmt(value) -> str:
    """Full double-precision round-trip formatting for CSV cells."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    return repr(value)


def _require(condition: bool, field_name: str, message: str):
    if not condition:
        raise ConfigError(f"{field_name}: {message}")


def resolve_config(doc: dict, base_dir: Path | None = None) -> ResolvedConfig:
    """Validate a configuration document and build the runtime objects."""
    if not isinstance(doc, dict):
        raise ConfigError("config: document must be a JSON object")
    if "resolved_config" in doc:  # a manifest; rerun from its embedded config
        doc = doc["resolved_config"]

    graph_spec = doc.get("graph")
    _require(isinstance(graph_spec, dict), "graph", "must be an object")
    try:
        if "name" in graph_spec:
            graph = build_named(graph_spec["name"], int(graph_spec.get("M", 10)))
        elif "file" in graph_spec:
            path = Path(graph_spec["file"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            graph = load_graph(path)
        elif "document" in graph_spec:
            graph = load_graph(graph_spec["document"])
        else:
            raise ConfigError("graph: needs 'name', 'file', or 'document'")
    except (GraphFormatError, GraphValidationError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"graph: {exc}") from exc

    n_particles = doc.get("particles")
    _require(
        isinstance(n_particles, int) and n_particles >= 0,
        "particles", "must be a non-negative integer",
    )
    steps = doc.get("steps")
    _require(isinstance(steps, int) and steps >= 0, "steps", "must be >= 0")

    step_unit = doc.get("step_unit", "shift")
    _require(step_unit in ("shift", "stage"), "step_unit", "must be 'shift' or 'stage'")
    stride = 2 if step_unit == "stage" else 1
    _require(
        steps % stride == 0,
        "steps", "must be even with step_unit='stage'",
    )

    coin_spec = doc.get("coin", "default")
    if coin_spec == "default":
        coin = coin_matrix(graph.coin_order)
    else:
        try:
            coin = coin_from_array(coin_spec)
        except ValueError as exc:
            raise ConfigError(f"coin: {exc}") from exc
        _require(
            coin.order == graph.coin_order,
            "coin", f"order {coin.order} does not match graph coin order {graph.coin_order}",
        )

    terms_doc = doc.get("initial_state")
    _require(
        isinstance(terms_doc, list) and len(terms_doc) >= 1,
        "initial_state", "must be a non-empty list of terms",
    )
    initial_terms = []
    for i, term in enumerate(terms_doc):
        name = f"initial_state[{i}]"
        _require(isinstance(term, dict), name, "must be an object")
        chirality = term.get("chirality")
        _require(
            isinstance(chirality, int) and 1 <= chirality <= graph.coin_order,
            name, f"chirality must be in 1..{graph.coin_order}",
        )
        occ = term.get("configuration")
        _require(
            isinstance(occ, list) and len(occ) == graph.n_vertices,
            name, f"configuration must list {graph.n_vertices} occupations",
        )
        _require(
            all(isinstance(v, int) and v >= 0 for v in occ),
            name, "occupations must be non-negative integers",
        )
        _require(
            sum(occ) == n_particles,
            name, f"occupations sum to {sum(occ)}, expected {n_particles}",
        )
        amp = term.get("amplitude")
        _require(
            isinstance(amp, list) and len(amp) == 2,
            name, "amplitude must be a [re, im] pair",
        )
        initial_terms.append((chirality, tuple(occ), complex(amp[0], amp[1])))

    schedule_doc = doc.get("schedule", {"densities": "all", "effective_dimension": "all"})
    _require(isinstance(schedule_doc, dict), "schedule", "must be an object")
    try:
        schedule = ObservableSchedule(dict(schedule_doc))
    except ValueError as exc:
        raise ConfigError(f"schedule: {exc}") from exc
    problems = schedule.validate_range(steps)
    _require(not problems, "schedule", "; ".join(problems) or "invalid")
    if stride == 2:
        for fam, rule in schedule.families.items():
            if isinstance(rule, list):
                bad = [s for s in rule if int(s) % 2]
                _require(
                    not bad,
                    "schedule", f"{fam}: steps {bad} are odd but step_unit is 'stage'",
                )

    toggles = dict(TOGGLE_DEFAULTS)
    toggles_doc = doc.get("toggles", {})
    _require(isinstance(toggles_doc, dict), "toggles", "must be an object")
    for key, value in toggles_doc.items():
        _require(key in TOGGLE_DEFAULTS, f"toggles.{key}", "unknown toggle")
        toggles[key] = value
    _require(
        float(toggles["drop_threshold"]) >= 0,
        "toggles.drop_threshold", "must be >= 0",
    )
    _require(
        float(toggles["effective_dim_tol"]) >= 0,
        "toggles.effective_dim_tol", "must be >= 0",
    )

    snapshot_every = doc.get("snapshot_every", 50 * stride)
    if snapshot_every is not None:
        _require(
            isinstance(snapshot_every, int) and snapshot_every >= 1,
            "snapshot_every", "must be a positive integer or null",
        )
        _require(
            snapshot_every % stride == 0,
            "snapshot_every", "must be even with step_unit='stage'",
        )

    resolved = ResolvedConfig(
        graph=graph,
        n_particles=n_particles,
        steps=steps,
        step_unit=step_unit,
        coin=coin,
        coin_spec=coin_spec,
        initial_terms=initial_terms,
        schedule=schedule,
        toggles=toggles,
        snapshot_every=snapshot_every,
        seed=doc.get("seed"),
    )
    resolved.document = config_document(resolved)
    return resolved


def config_document(cfg: ResolvedConfig) -> dict:
    """Canonical JSON document for a resolved configuration."""
    return {
        "graph": {"document": graph_document(cfg.graph)},
        "particles": cfg.n_particles,
        "steps": cfg.steps,
        "step_unit": cfg.step_unit,
        "coin": cfg.coin_spec if cfg.coin_spec == "default" else [
            [[z.real, z.imag] for z in row] for row in np.asarray(cfg.coin.h)
        ],
        "initial_state": [
            {
                "chirality": ch,
                "configuration": list(occ),
                "amplitude": [amp.real, amp.imag],
            }
            for ch, occ, amp in cfg.initial_terms
        ],
        "schedule": cfg.schedule.families,
        "toggles": cfg.toggles,
        "snapshot_every": cfg.snapshot_every,
        "seed": cfg.seed,
    }


def _load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config: {path}: not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path}: not valid JSON: {exc}") from exc


def _stage_schedule_proxy(schedule: ObservableSchedule, stride: int):
    """Schedule addressed in shift indices while rules are in output units."""
    if stride == 1:
        return schedule

    class _Proxy:
        def families_at(self, shift):
            return schedule.families_at(shift * stride)

    return _Proxy()


def _build_initial_table(cfg: ResolvedConfig, basis: ConfigurationBasis) -> AmplitudeTable:
    table = AmplitudeTable.from_terms(basis, cfg.graph.coin_order, cfg.initial_terms)
    norm = table.norm()
    if norm == 0.0:
        raise ConfigError("initial_state: terms cancel to the zero state")
    table.amps /= norm
    return table


def _snapshot_meta(cfg: ResolvedConfig) -> dict:
    return {
        "step_unit": cfg.step_unit,
        "toggles": cfg.toggles,
        "graph_sha256": hashlib.sha256(
            json.dumps(graph_document(cfg.graph), sort_keys=True).encode()
        ).hexdigest(),
        "particles": cfg.n_particles,
    }


def _write_series(out_dir: Path, cfg: ResolvedConfig, reports, records, stride: int,
                  min_step_exclusive: int | None = None):
    """Write every CSV series; steps are already in output units."""
    m = cfg.graph.n_vertices
    n = cfg.n_particles
    modes = cfg.toggles.get("phase_space_modes") or n

    def keep(step):
        return min_step_exclusive is None or step > min_step_exclusive

    def write(name, header, rows):
        with open(out_dir / name, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)

    write(
        "step_reports.csv",
        ["step", "pre_norm", "norm_constant", "entries", "effective_dim"],
        [
            [r.step * stride, _fmt(r.pre_norm), _fmt(r.norm_constant),
             r.entry_count, r.effective_dim]
            for r in reports if keep(r.step * stride)
        ],
    )

    by_family = {
        "densities": [], "moments": [], "g2": [], "counting_hist": [],
        "counting_weighted": [], "phase_space": [], "effective_dimension": [],
    }
    for rec in records:
        step = rec.step
        if not keep(step):
            continue
        if rec.densities is not None:
            by_family["densities"].append([step] + [_fmt(v) for v in rec.densities])
        if rec.moments is not None:
            row = [step]
            for qi in range(len(rec.moment_orders)):
                row.extend(_fmt(v) for v in rec.moments[qi])
            by_family["moments"].append(row)
        if rec.g2 is not None:
            by_family["g2"].append([step] + [_fmt(v) for v in rec.g2.ravel()])
        if rec.counting is not None:
            hist_row, weighted_row = [step], [step]
            for stats in rec.counting:
                hist_row.extend(_fmt(v) for v in stats.histogram)
                weighted_row.extend(_fmt(v) for v in stats.weighted)
            agg = rec.counting_aggregate
            hist_row.extend(_fmt(v) for v in agg.histogram)
            weighted_row.extend(_fmt(v) for v in agg.weighted)
            by_family["counting_hist"].append(hist_row)
            by_family["counting_weighted"].append(weighted_row)
        if rec.phase_space is not None:
            xs, ps, es = rec.phase_space
            by_family["phase_space"].append(
                [step] + [_fmt(v) for v in xs] + [_fmt(v) for v in ps]
                + [_fmt(v) for v in es]
            )
        if rec.effective_dim is not None:
            by_family["effective_dimension"].append([step, rec.effective_dim])

    vertex_cols = [f"v{a}" for a in range(1, m + 1)]
    write("densities.csv", ["step"] + vertex_cols, by_family["densities"])
    write(
        "moments.csv",
        ["step"] + [f"q{q}_v{a}" for q in DEFAULT_MOMENT_ORDERS for a in range(1, m + 1)],
        by_family["moments"],
    )
    write(
        "g2.csv",
        ["step"] + [f"g2_{a}_{b}" for a in range(1, m + 1) for b in range(1, m + 1)],
        by_family["g2"],
    )
    counting_cols = [f"v{a}_n{i}" for a in range(1, m + 1) for i in range(n + 1)]
    counting_cols += [f"agg_n{i}" for i in range(n + 1)]
    write("counting_hist.csv", ["step"] + counting_cols, by_family["counting_hist"])
    write("counting_weighted.csv", ["step"] + counting_cols, by_family["counting_weighted"])
    write(
        "phase_space.csv",
        ["step"] + [f"x_m{e}" for e in range(1, modes + 1)]
        + [f"p_m{e}" for e in range(1, modes + 1)]
        + [f"E_m{e}" for e in range(1, modes + 1)],
        by_family["phase_space"],
    )
    write("effective_dimension.csv", ["step", "dim"], by_family["effective_dimension"])
    return by_family


def _write_manifest(out_dir: Path, cfg: ResolvedConfig):
    outputs = {}
    for name in sorted(os.listdir(out_dir)):
        path = out_dir / name
        if path.is_file() and name not in ("manifest.json", "run.log"):
            outputs[name] = hashlib.sha256(path.read_bytes()).hexdigest()
    manifest = {
        "kind": "bosonwalk-run-manifest",
        "versions": {
            "bosonwalk": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "resolved_config": cfg.document,
        "outputs": outputs,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _execute(cfg: ResolvedConfig, out_dir: Path, threads: int,
             start_table: AmplitudeTable | None = None, start_step_out: int = 0,
             on_step=None):
    """Shared driver for run and resume; step indices in output units."""
    stride = 2 if cfg.step_unit == "stage" else 1
    out_dir.mkdir(parents=True, exist_ok=True)
    snap_dir = out_dir / "snapshots"
    snap_dir.mkdir(exist_ok=True)

    basis = (
        start_table.basis if start_table is not None
        else ConfigurationBasis(cfg.n_particles, cfg.graph.n_vertices)
    )
    init = start_table if start_table is not None else _build_initial_table(cfg, basis)

    result = run_evolution(
        init,
        cfg.graph,
        cfg.coin,
        cfg.steps // stride,
        schedule=_stage_schedule_proxy(cfg.schedule, stride),
        drop_threshold=float(cfg.toggles["drop_threshold"]),
        effective_dim_tol=float(cfg.toggles["effective_dim_tol"]),
        double_coin_factor=bool(cfg.toggles["double_coin_factor"]),
        threads=threads,
        start_step=start_step_out // stride,
        on_step=on_step,
        snapshot_every=(
            cfg.snapshot_every // stride if cfg.snapshot_every else None
        ),
        snapshot_dir=str(snap_dir),
        snapshot_meta=_snapshot_meta(cfg),
        record_options={
            "counting_unrestricted": bool(cfg.toggles["counting_unrestricted"]),
            "phase_space_modes": cfg.toggles["phase_space_modes"],
        },
    )
    # Output units everywhere below.
    records = [replace(rec, step=rec.step * stride) for rec in result.records]
    series = _write_series(
        out_dir, cfg, result.reports, records, stride,
        min_step_exclusive=start_step_out if start_table is not None else None,
    )

    if start_table is None and len(series["effective_dimension"]) >= 2:
        regime = detect_regime_change(series["effective_dimension"])
        with open(out_dir / "regime.json", "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "change_step": regime.change_step,
                    "terminal_values": list(regime.terminal_values),
                    "rule": regime.rule,
                },
                fh, indent=1, sort_keys=True,
            )
            fh.write("\n")

    index = {}
    for shift_step, path in getattr(result, "snapshots", []):
        name = Path(path).name
        index[str(shift_step * stride)] = {
            "file": f"snapshots/{name}",
            "sha256": hashlib.sha256(Path(path).read_bytes()).hexdigest(),
        }
    with open(snap_dir / "index.json", "w", encoding="utf-8") as fh:
        json.dump(index, fh, indent=1, sort_keys=True)
        fh.write("\n")

    with open(out_dir / "run.log", "w", encoding="utf-8") as fh:
        total = sum(r.wall_time for r in result.reports)
        fh.write(f"shifts={len(result.reports)} total_wall_time_s={total:.3f}\n")
        for r in result.reports:
            fh.write(f"step={r.step * stride} wall_time_s={r.wall_time:.6f}\n")

    _write_manifest(out_dir, cfg)
    return result


def _resolve_out_dir(arg_out, doc) -> Path:
    if arg_out:
        return Path(arg_out)
    configured = doc.get("output_dir") if isinstance(doc, dict) else None
    if configured:
        return Path(configured)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env)
    return Path("bosonwalk-out")


def _parse_toggle_overrides(pairs) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"toggles: override {pair!r} is not name=value")
        name, raw = pair.split("=", 1)
        if name not in TOGGLE_DEFAULTS:
            raise ConfigError(f"toggles.{name}: unknown toggle")
        if raw.lower() in ("true", "false"):
            out[name] = raw.lower() == "true"
        elif raw.lower() in ("null", "none"):
            out[name] = None
        else:
            try:
                out[name] = int(raw) if raw.isdigit() else float(raw)
            except ValueError:
                out[name] = raw
    return out


def cmd_run(args) -> int:
    doc = _load_json(args.config)
    if "resolved_config" in doc:
        inner = dict(doc["resolved_config"])
    else:
        inner = dict(doc)
    if args.steps is not None:
        inner["steps"] = args.steps
        # A truncation override intersects any explicit schedule lists.
        schedule = inner.get("schedule")
        if isinstance(schedule, dict):
            inner["schedule"] = {
                fam: ([s for s in rule if int(s) <= args.steps]
                      if isinstance(rule, list) else rule)
                for fam, rule in schedule.items()
            }
    if args.snapshot_every is not None:
        inner["snapshot_every"] = args.snapshot_every
    overrides = _parse_toggle_overrides(args.toggle)
    if overrides:
        inner["toggles"] = {**inner.get("toggles", {}), **overrides}
    cfg = resolve_config(inner, base_dir=Path(args.config).parent)
    out_dir = _resolve_out_dir(args.out, doc)
    try:
        _execute(cfg, out_dir, args.threads)
    except Exception as exc:
        snapshots = sorted((out_dir / "snapshots").glob("snapshot_step*.npz"))
        last = f"; last good snapshot: {snapshots[-1]}" if snapshots else ""
        print(f"run failed: {exc}{last}", file=sys.stderr)
        return 1
    return 0


def cmd_resume(args) -> int:
    doc = _load_json(args.config)
    cfg = resolve_config(doc, base_dir=Path(args.config).parent)
    basis = ConfigurationBasis(cfg.n_particles, cfg.graph.n_vertices)
    try:
        table, shift_step, meta = read_snapshot(args.snapshot, basis)
    except FileNotFoundError:
        print(f"snapshot {args.snapshot} not found", file=sys.stderr)
        return 2
    expected = _snapshot_meta(cfg)
    if meta != expected:
        diffs = [
            key for key in set(meta) | set(expected)
            if meta.get(key) != expected.get(key)
        ]
        print(
            f"snapshot is inconsistent with the configuration (differs in: "
            f"{', '.join(sorted(diffs))})",
            file=sys.stderr,
        )
        return 2
    if table.coin_order != cfg.graph.coin_order:
        print("snapshot coin order does not match the configuration", file=sys.stderr)
        return 2
    stride = 2 if cfg.step_unit == "stage" else 1
    start_step_out = shift_step * stride
    if start_step_out > cfg.steps:
        print(
            f"snapshot step {start_step_out} is beyond the configured {cfg.steps}",
            file=sys.stderr,
        )
        return 2
    out_dir = _resolve_out_dir(args.out, doc)
    try:
        _execute(cfg, out_dir, args.threads, start_table=table,
                 start_step_out=start_step_out)
    except Exception as exc:
        print(f"resume failed: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_validate(args) -> int:
    try:
        graph = load_graph(args.graph_file)
    except GraphFormatError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except GraphValidationError as exc:
        for line in exc.violations:
            print(line)
        return 1
    report = validate_decomposition(graph)
    for line in report:
        print(line)
    if not report:
        print(
            f"valid decomposition: M={graph.n_vertices} d={graph.coin_order} "
            f"components={[len(c) for c in graph.components]}"
        )
    return 0 if not report else 1


def cmd_oracle_compare(args) -> int:
    doc = _load_json(args.config)
    cfg = resolve_config(doc, base_dir=Path(args.config).parent)
    stride = 2 if cfg.step_unit == "stage" else 1
    steps = cfg.steps // stride
    try:
        deviation = compare_evolution(
            cfg.graph, cfg.coin, cfg.initial_terms, steps, cfg.n_particles
        )
    except ValueError as exc:
        print(f"oracle comparison refused: {exc}", file=sys.stderr)
        return 2
    print(f"max sup-norm deviation over {steps} steps: {deviation:.3e}")
    return 0 if deviation <= 1e-10 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bosonwalk",
        description="Shared-coin many-boson discrete-time quantum walks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a walk from a configuration or manifest")
    p_run.add_argument("config")
    p_run.add_argument("--steps", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--snapshot-every", type=int, default=None)
    p_run.add_argument("--toggle", action="append", metavar="NAME=VALUE")
    p_run.set_defaults(func=cmd_run)

    p_res = sub.add_parser("resume", help="continue a run from a snapshot")
    p_res.add_argument("snapshot")
    p_res.add_argument("config")
    p_res.add_argument("--out", default=None)
    p_res.add_argument("--threads", type=int, default=1)
    p_res.set_defaults(func=cmd_resume)

    p_val = sub.add_parser("validate", help="validate a graph document")
    p_val.add_argument("graph_file")
    p_val.set_defaults(func=cmd_validate)

    p_cmp = sub.add_parser(
        "oracle-compare", help="compare sparse vs dense evolution (size-guarded)"
    )
    p_cmp.add_argument("config")
    p_cmp.set_defaults(func=cmd_oracle_compare)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid configuration - {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
