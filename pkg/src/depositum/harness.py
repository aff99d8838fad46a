"""Experiment harness: JSON configs in, deterministic CSV traces out.

A config fully determines a family of runs; every run is keyed by one seed
from the config's seed list.  The same (config, seed) pair always produces
byte-identical CSV output, regardless of how many worker processes the
DEPOSITUM_THREADS environment variable allows, because each cell derives all
of its randomness from counter-based streams and files are written by the
parent in a fixed order.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import problems, regularizers, topology
from .metrics import Trace
from .optimizer import HyperParams, linear_speedup_params, run
from .seeding import DATA_STREAM, INIT_STREAM, PARTITION_STREAM, rng_stream

SCHEMA_VERSION = 1
THREADS_ENV = "DEPOSITUM_THREADS"


class ConfigError(ValueError):
    """Config validation failure; message carries the offending field path."""


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _require(cfg: dict, path: str, key: str, types, choices=None):
    if key not in cfg:
        _fail(f"{path}.{key}", "missing required field")
    val = cfg[key]
    if types is not None and not isinstance(val, types):
        _fail(f"{path}.{key}", f"expected {types}, got {type(val).__name__}")
    if isinstance(val, bool) and types == (int,):
        _fail(f"{path}.{key}", "expected int, got bool")
    if choices is not None and val not in choices:
        _fail(f"{path}.{key}", f"must be one of {sorted(choices)}, got {val!r}")
    return val


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return validate_config(raw)


def validate_config(raw: dict) -> dict:
    """Normalize a raw config dict, rejecting exactly the module preconditions."""
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a JSON object")
    cfg = dict(raw)
    schema = _require(cfg, "config", "schema", (int,))
    if schema != SCHEMA_VERSION:
        _fail("schema", f"unsupported version {schema}, expected {SCHEMA_VERSION}")

    prob = _require(cfg, "config", "problem", (dict,))
    data = _require(prob, "problem", "data", (dict,))
    data_kind = _require(data, "problem.data", "kind", (str,), {"synthetic", "libsvm"})
    if data_kind == "synthetic":
        d = _require(data, "problem.data", "d", (int,))
        if d < 1:
            _fail("problem.data.d", f"must be >= 1, got {d}")
        ns = _require(data, "problem.data", "n_samples", (int,))
        if ns < 1:
            _fail("problem.data.n_samples", f"must be >= 1, got {ns}")
        sep = _require(data, "problem.data", "separation", (int, float))
        if sep < 0:
            _fail("problem.data.separation", f"must be >= 0, got {sep}")
        data.setdefault("test_samples", 0)
    else:
        _require(data, "problem.data", "path", (str,))
        data.setdefault("test_path", None)
        data.setdefault("d", None)
    model = _require(prob, "problem", "model", (dict,))
    mkind = _require(model, "problem.model", "kind", (str,), {"logistic", "softmax", "mlp"})
    if mkind == "mlp":
        hid = _require(model, "problem.model", "hidden", (int,))
        if hid < 1:
            _fail("problem.model.hidden", f"must be >= 1, got {hid}")
    prob.setdefault("noise_std", None)
    if prob["noise_std"] is not None:
        if not isinstance(prob["noise_std"], (int, float)) or prob["noise_std"] < 0:
            _fail("problem.noise_std", f"must be null or >= 0, got {prob['noise_std']}")

    topo = _require(cfg, "config", "topology", (dict,))
    tkind = _require(topo, "topology", "kind", (str,), {"complete", "ring", "star", "edgelist"})
    tn = _require(topo, "topology", "n", (int,))
    if tn < 1:
        _fail("topology.n", f"must be >= 1, got {tn}")
    topo.setdefault("weighting", "uniform" if tkind in ("complete", "ring") else "metropolis")
    if topo["weighting"] not in ("uniform", "metropolis"):
        _fail("topology.weighting", f"must be 'uniform' or 'metropolis', got {topo['weighting']!r}")
    if tkind == "edgelist":
        edges = _require(topo, "topology", "edges", (list,))
        for e in edges:
            if not (isinstance(e, list) and len(e) == 2):
                _fail("topology.edges", f"each edge must be a [i, j] pair, got {e!r}")

    reg = _require(cfg, "config", "regularizer", (dict,))
    _build_regularizer(reg)  # raises ValueError on bad params
    part = _require(cfg, "config", "partition", (dict,))
    pkind = _require(part, "partition", "kind", (str,), {"iid", "dirichlet"})
    if pkind == "dirichlet":
        theta = _require(part, "partition", "theta", (int, float))
        if not theta > 0:
            _fail("partition.theta", f"must be > 0, got {theta}")

    hp = _require(cfg, "config", "hyperparams", (dict,))
    hp.setdefault("mode", "explicit")
    if hp["mode"] not in ("explicit", "auto"):
        _fail("hyperparams.mode", f"must be 'explicit' or 'auto', got {hp['mode']!r}")
    hp.setdefault("momentum", "polyak")
    if hp["momentum"] not in ("polyak", "nesterov", "none"):
        _fail("hyperparams.momentum", f"must be polyak|nesterov|none, got {hp['momentum']!r}")
    T0 = _require(hp, "hyperparams", "T0", (int,))
    if T0 < 1:
        _fail("hyperparams.T0", f"must be >= 1, got {T0}")
    if hp["mode"] == "explicit":
        alpha = _require(hp, "hyperparams", "alpha", (int, float))
        if not alpha > 0:
            _fail("hyperparams.alpha", f"must be > 0, got {alpha}")
        hp.setdefault("beta", 1.0)
        if not (isinstance(hp["beta"], (int, float)) and hp["beta"] > 0):
            _fail("hyperparams.beta", f"must be > 0, got {hp['beta']}")
        hp.setdefault("gamma", 0.0)
        gamma = hp["gamma"]
        if not (isinstance(gamma, (int, float)) and 0.0 <= gamma < 1.0):
            _fail("hyperparams.gamma", f"must be in [0, 1), got {gamma}")
        B = _require(hp, "hyperparams", "B", (int,))
        if B < 1:
            _fail("hyperparams.B", f"must be >= 1, got {B}")
        rho = regularizers.weak_modulus(_build_regularizer(reg))
        if alpha * rho >= 1.0:
            _fail("hyperparams.alpha", f"alpha * weak_modulus = {alpha * rho} must be < 1")
    elif hp["momentum"] == "none":
        _fail("hyperparams.momentum", "auto mode needs polyak or nesterov momentum")

    T = _require(cfg, "config", "T", (int,))
    if T < 0:
        _fail("T", f"must be >= 0, got {T}")
    cfg.setdefault("eval_every", 1)
    if not (isinstance(cfg["eval_every"], int) and cfg["eval_every"] >= 1):
        _fail("eval_every", f"must be an int >= 1, got {cfg['eval_every']}")
    seeds = _require(cfg, "config", "seeds", (list,))
    if not seeds or not all(isinstance(s, int) for s in seeds):
        _fail("seeds", f"must be a nonempty list of ints, got {seeds!r}")
    cfg.setdefault("data_seed", 0)
    if cfg["data_seed"] is not None and not isinstance(cfg["data_seed"], int):
        _fail("data_seed", f"must be null or an int, got {cfg['data_seed']!r}")
    cfg.setdefault("algorithm", "depositum")
    if cfg["algorithm"] not in ("depositum", "prox_dsgd"):
        _fail("algorithm", f"must be 'depositum' or 'prox_dsgd', got {cfg['algorithm']!r}")
    if "sweep" in cfg and cfg["sweep"] is not None:
        sw = cfg["sweep"]
        axis = _require(sw, "sweep", "axis", (str,), {"alpha", "beta", "gamma", "T0", "B", "topology"})
        vals = _require(sw, "sweep", "values", (list,))
        if not vals:
            _fail("sweep.values", "must be nonempty")
        if axis != "topology" and hp["mode"] != "explicit":
            _fail("sweep.axis", "hyperparameter sweeps need explicit hyperparams")
    if "speedup" in cfg and cfg["speedup"] is not None:
        sp = cfg["speedup"]
        nv = _require(sp, "speedup", "n_values", (list,))
        if not nv or not all(isinstance(v, int) and v >= 1 for v in nv):
            _fail("speedup.n_values", f"must be a nonempty list of ints >= 1, got {nv!r}")
        if hp["mode"] != "auto":
            _fail("speedup", "speedup requires hyperparams.mode == 'auto'")
        if tkind == "edgelist":
            _fail("speedup", "speedup needs a scalable topology kind (complete/ring/star)")
    return cfg


def config_digest(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# -- builders ------------------------------------------------------------------


def _build_regularizer(reg: dict) -> regularizers.Regularizer:
    kind = reg.get("kind")
    try:
        if kind == "zero":
            return regularizers.Zero()
        if kind == "l1":
            return regularizers.L1(float(reg["weight"]))
        if kind == "mcp":
            return regularizers.MCP(float(reg["lam"]), float(reg["theta"]))
        if kind == "scad":
            return regularizers.SCAD(float(reg["lam"]), float(reg["a"]))
        if kind == "box":
            return regularizers.Box(float(reg["lo"]), float(reg["hi"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"regularizer: {exc}") from None
    raise ConfigError(f"regularizer.kind: unknown kind {kind!r}")


def _build_matrix(topo: dict, n: int | None = None) -> topology.MixingMatrix:
    n = topo["n"] if n is None else n
    if n == 1:
        return topology.MixingMatrix.trivial()
    kind, weighting = topo["kind"], topo["weighting"]
    if kind == "edgelist":
        spec = topology.TopologySpec.edge_list(n, topo["edges"], weighting)
    else:
        spec = topology.TopologySpec(kind, n, weighting)
    return topology.build_mixing(spec)


def _build_dataset(cfg: dict, seed: int):
    data = cfg["problem"]["data"]
    if data["kind"] == "synthetic":
        rng = rng_stream(seed, DATA_STREAM, 0)
        n_train, n_test = data["n_samples"], data["test_samples"]
        # one draw, then split: train and test must share the cluster direction
        full = problems.synth_logistic(data["d"], n_train + n_test, data["separation"], rng)
        train = problems.Dataset(full.features[:n_train], full.labels[:n_train])
        test = None
        if n_test:
            test = problems.Dataset(full.features[n_train:], full.labels[n_train:])
        return train, test
    train = problems.load_libsvm(data["path"], d=data["d"])
    test = None
    if data["test_path"]:
        test = problems.load_libsvm(data["test_path"], d=train.d)
    return train, test


def _build_partition(cfg: dict, labels: np.ndarray, n: int, seed: int) -> problems.Partition:
    part = cfg["partition"]
    rng = rng_stream(seed, PARTITION_STREAM, 0)
    if part["kind"] == "iid":
        return problems.iid_partition(labels.size, n, rng)
    return problems.dirichlet_partition(labels, n, part["theta"], rng)


def _build_problem(cfg: dict, dataset, partition) -> problems.Problem:
    model = cfg["problem"]["model"]
    return problems.make_problem(
        model["kind"], dataset, partition,
        hidden=model.get("hidden"), noise_std=cfg["problem"]["noise_std"],
    )


def _initial_point(cfg: dict, problem: problems.Problem, seed: int) -> np.ndarray:
    if cfg["problem"]["model"]["kind"] == "mlp":
        rng = rng_stream(seed, INIT_STREAM, 0)
        return rng.normal(0.0, 0.5, size=problem.dim)
    return np.zeros(problem.dim)


def _resolve_hyperparams(cfg: dict, problem, matrix, T: int) -> HyperParams:
    hp = cfg["hyperparams"]
    if hp["mode"] == "auto":
        rho = regularizers.weak_modulus(_build_regularizer(cfg["regularizer"]))
        return linear_speedup_params(
            problem.n, problem.smoothness(), rho, hp["T0"], T, matrix.lam, hp["momentum"]
        )
    return HyperParams(
        alpha=float(hp["alpha"]), beta=float(hp["beta"]), gamma=float(hp["gamma"]),
        T0=hp["T0"], B=hp["B"], T=T, momentum=hp["momentum"],
    )


def _run_one(cfg: dict, seed: int, *, n_override: int | None = None) -> Trace:
    """Build every piece for one seed and run it."""
    matrix = _build_matrix(cfg["topology"], n_override)
    data_seed = cfg["data_seed"] if cfg["data_seed"] is not None else seed
    train, test = _build_dataset(cfg, data_seed)
    partition = _build_partition(cfg, train.labels, matrix.n, seed)
    problem = _build_problem(cfg, train, partition)
    reg = _build_regularizer(cfg["regularizer"])
    hp = _resolve_hyperparams(cfg, problem, matrix, cfg["T"])
    x0 = _initial_point(cfg, problem, data_seed)
    trace = run(
        problem, matrix, hp, reg, seed,
        x0=x0, eval_every=cfg["eval_every"], test_set=test, variant=cfg["algorithm"],
    )
    return Trace(trace.records, trace.seed, config_digest(cfg), trace.duration)


def _thread_budget() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        k = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV}: expected an int, got {raw!r}") from None
    return max(1, k)


def _map_cells(fn, cells):
    """Run cells serially or in processes; output order is submission order."""
    workers = _thread_budget()
    if workers == 1 or len(cells) <= 1:
        return [fn(c) for c in cells]
    with ProcessPoolExecutor(max_workers=min(workers, len(cells))) as pool:
        return list(pool.map(fn, cells))


def _write(path, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _trace_meta(trace: Trace) -> str:
    final = trace.final()
    meta = {
        "seed": trace.seed,
        "digest": trace.digest,
        "duration_sec": trace.duration,
        "final": {
            "t": final.t,
            "loss": final.loss,
            "s_over_n": final.s_over_n,
            "accuracy": final.accuracy,
        },
    }
    return json.dumps(meta, indent=2, sort_keys=True) + "\n"


def _cell_run(args):
    cfg, seed = args
    return _run_one(cfg, seed)


def run_experiment(cfg: dict, out_dir=None, seeds=None, eval_every=None) -> list[Trace]:
    cfg = dict(cfg)
    if seeds is not None:
        cfg["seeds"] = list(seeds)
    if eval_every is not None:
        cfg["eval_every"] = eval_every
    traces = _map_cells(_cell_run, [(cfg, s) for s in cfg["seeds"]])
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for trace in traces:
            _write(os.path.join(out_dir, f"run_seed{trace.seed}.csv"), trace.to_csv())
            _write(os.path.join(out_dir, f"run_seed{trace.seed}.json"), _trace_meta(trace))
    return traces


def _sweep_cell(args):
    cfg, axis, value, seed = args
    cell = json.loads(json.dumps(cfg))  # deep copy via JSON round trip
    if axis == "topology":
        cell["topology"] = value
    else:
        cell["hyperparams"][axis] = value
    cell.pop("sweep", None)
    return _run_one(cell, seed)


def _value_label(axis: str, value) -> str:
    if axis == "topology":
        return f"{value['kind']}{value.get('n', '')}"
    return repr(value) if isinstance(value, float) else str(value)


def run_sweep(cfg: dict, out_dir=None) -> dict:
    """One run per (axis value, seed); returns {value_label: [Trace, ...]}."""
    sweep = cfg.get("sweep")
    if not sweep:
        raise ConfigError("sweep: missing sweep section")
    axis, values = sweep["axis"], sweep["values"]
    cells = [(cfg, axis, v, s) for v in values for s in cfg["seeds"]]
    traces = _map_cells(_sweep_cell, cells)
    grouped: dict = {}
    rows = ["axis,value,seed,final_loss,final_s_over_n,final_accuracy"]
    for (_cfg, ax, value, seed), trace in zip(cells, traces):
        label = _value_label(axis, value)
        grouped.setdefault(label, []).append(trace)
        fin = trace.final()
        acc = "" if fin.accuracy is None else repr(fin.accuracy)
        rows.append(f"{ax},{label},{seed},{fin.loss!r},{fin.s_over_n!r},{acc}")
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            _write(os.path.join(out_dir, f"sweep_{ax}_{label}_seed{seed}.csv"), trace.to_csv())
    if out_dir is not None:
        _write(os.path.join(out_dir, "summary.csv"), "\n".join(rows) + "\n")
    return grouped


def _speedup_cell(args):
    cfg, n, seed = args
    cell = json.loads(json.dumps(cfg))
    cell["topology"]["n"] = n
    cell.pop("speedup", None)
    return _run_one(cell, seed, n_override=n)


def run_speedup(cfg: dict, out_dir=None) -> dict:
    """Auto-parameterized runs across client counts; reports the loss trend."""
    sp = cfg.get("speedup")
    if not sp:
        raise ConfigError("speedup: missing speedup section")
    n_values = sp["n_values"]
    cells = [(cfg, n, s) for n in n_values for s in cfg["seeds"]]
    traces = _map_cells(_speedup_cell, cells)
    by_n: dict = {}
    rows = ["n,seed,final_loss,final_s_over_n,final_accuracy"]
    for (_cfg, n, seed), trace in zip(cells, traces):
        by_n.setdefault(n, []).append(trace)
        fin = trace.final()
        acc = "" if fin.accuracy is None else repr(fin.accuracy)
        rows.append(f"{n},{seed},{fin.loss!r},{fin.s_over_n!r},{acc}")
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            _write(os.path.join(out_dir, f"speedup_n{n}_seed{seed}.csv"), trace.to_csv())
    mean_final = {n: float(np.mean([t.final().loss for t in ts])) for n, ts in by_n.items()}
    ordered = [mean_final[n] for n in n_values]
    verdict = {
        "n_values": list(n_values),
        "mean_final_loss": {str(n): mean_final[n] for n in n_values},
        "non_increasing_first_to_last": bool(ordered[-1] <= ordered[0]),
        "non_increasing_consecutive": bool(
            all(b <= a + 1e-15 for a, b in zip(ordered, ordered[1:]))
        ),
    }
    if out_dir is not None:
        _write(os.path.join(out_dir, "speedup_summary.csv"), "\n".join(rows) + "\n")
        _write(os.path.join(out_dir, "speedup_verdict.json"), json.dumps(verdict, indent=2, sort_keys=True) + "\n")
    return {"traces": by_n, "verdict": verdict}


def spectral_report(cfg: dict) -> dict:
    """lambda and the contraction constants for the config's topology."""
    matrix = _build_matrix(cfg["topology"])
    hp = cfg["hyperparams"]
    T0 = hp["T0"]
    alpha_rho = 0.0
    if hp.get("mode", "explicit") == "explicit" and "alpha" in hp:
        rho = regularizers.weak_modulus(_build_regularizer(cfg["regularizer"]))
        alpha_rho = float(hp["alpha"]) * rho
    d1, d2 = topology.delta_params(matrix.lam, T0, alpha_rho)
    return {
        "n": matrix.n,
        "lambda": matrix.lam,
        "T0": T0,
        "alpha_rho": alpha_rho,
        "delta1": d1,
        "delta2": d2,
        "admissible_alpha_rho_below": 1.0 - matrix.lam ** (1.0 / (2.0 * T0)),
    }


def partition_report(cfg: dict, seed: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(class_values, shares) where shares[k, c] is client c's share of class k."""
    seed = cfg["seeds"][0] if seed is None else seed
    data_seed = cfg["data_seed"] if cfg["data_seed"] is not None else seed
    train, _ = _build_dataset(cfg, data_seed)
    n = cfg["topology"]["n"]
    partition = _build_partition(cfg, train.labels, n, seed)
    classes = np.unique(train.labels)
    shares = np.zeros((classes.size, n))
    for k, cls in enumerate(classes):
        total = int((train.labels == cls).sum())
        for c, idx in enumerate(partition.assignments):
            shares[k, c] = (train.labels[idx] == cls).sum() / total
    return classes, shares
