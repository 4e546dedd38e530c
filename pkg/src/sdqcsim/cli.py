"""Command-line entry point: seeded, schema-stable runs of every component.

Commands
--------
bounds            closed-form bound reports / n-sweeps (CSV or JSON)
gadget-sim        Monte Carlo of the threshold / post-selected gadget
rsp-sim           blind graph preparation fidelity against the direct build
ubqc-sim          delegated vs direct pattern execution on a graph file
sdqc-sim          repetition protocol with hidden tests, honest or deviating
blindness-verify  exact view-distribution checks (TV table, simulator equality)
physics-sweep     maximised single-photon efficiency vs intensity (CSV rows)
physics-opt       pulse-area optimisation at one intensity

Every command accepts --config (JSON file with the same keys as the flags;
flags win), --seed, --out (default stdout), --format {csv,json}. A fixed
(config, seed) pair produces byte-identical output: trial-level streams are
counter-based and derived from (seed, trial index). Reals in CSV are written
with 17 significant digits.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .adversary import (
    blindness_check,
    postselect_error_rate_mc,
    real_gadget_view,
    real_postselected_view,
    simulator2_view,
    simulator3_view,
    simulator_error_rate_mc,
)
from .angles import Angle8, uniform_angle
from .graphs import build_blind_graph_state, load_graph_document, run_mbqc
from .physics import (
    DriveParams,
    find_security_crossing,
    maximize_eta1,
    security_gap_sweep,
)
from .protocols import (
    GadgetParams,
    abort_rate_mc,
    gadget_target_state,
    postselect_abort_rate_mc,
    protocol2_blind_rsp,
    protocol3_gadget,
    protocol5_postselected,
    sdqc_run,
    single_emitter_assignment,
    ubqc_run,
    z_deviation,
    HONEST,
)
from .pulses import multiphoton_prob
from .qstate import fidelity_up_to_phase
from .secbounds import composed_bounds, gadget_bounds, postselect_bounds
from .seeding import trial_rng


class CliError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    params: dict[str, Any]
    seed: int
    out: str
    fmt: str


# parameter table: name -> (python type, default, constraint, description)
_POS = lambda x: x > 0
_UNIT = lambda x: 0.0 <= x <= 1.0
_GE1 = lambda x: x >= 1

_COMMON = {
    "seed": (int, 0, None, "PRNG seed (default 0)"),
}

_SCHEMAS: dict[str, dict[str, tuple]] = {
    "bounds": {
        "alpha_sq": (float, None, _POS, "pulse intensity > 0"),
        "eta1": (float, None, _UNIT, "emitter efficiency in [0, 1]"),
        "n": (int, 100, _GE1, "pulses per gadget >= 1"),
        "t": (float, None, None, "threshold (default equilibrium)"),
        "vertices": (int, 1, _GE1, "graph size for composition"),
        "rounds": (int, None, _GE1, "repetitions for the verified composition"),
        "eps_s": (float, None, _UNIT, "repetition-protocol bound in [0, 1]"),
        "n_list": (list, None, None, "sweep over these n values"),
    },
    "gadget-sim": {
        "protocol": (str, "threshold", None, "threshold | postselect"),
        "alpha_sq": (float, None, _POS, "pulse intensity > 0"),
        "eta1": (float, None, _UNIT, "emitter efficiency in [0, 1]"),
        "n": (int, 100, _GE1, "pulses per gadget >= 1"),
        "t": (float, None, None, "threshold (default equilibrium)"),
        "theta": (int, 0, lambda x: 0 <= x <= 7, "client angle index in 0..7"),
        "runs": (int, 10000, _GE1, "Monte Carlo runs >= 1"),
        "full_state": (bool, False, None, "track the quantum register per run"),
        "n_list": (list, None, None, "sweep over these n values"),
    },
    "rsp-sim": {
        "graph": (str, None, None, "graph document path"),
        "runs": (int, 20, _GE1, "random angle draws >= 1"),
        "assignment": (list, None, None, "emitter vertex lists (default single)"),
        "extra": (int, 0, lambda x: x >= 0, "redundant qubits per vertex >= 0"),
    },
    "ubqc-sim": {
        "graph": (str, None, None, "graph document path (needs flow + angles)"),
        "runs": (int, 1000, _GE1, "executions >= 1"),
        "input": (str, "", None, "input bits, one char per input vertex"),
        "source": (str, "ideal", None, "ideal | protocol2"),
        "assignment": (list, None, None, "emitter vertex lists for protocol2"),
    },
    "sdqc-sim": {
        "graph": (str, None, None, "graph document path (needs flow + angles)"),
        "rounds": (int, 40, lambda x: x >= 2, "UBQC repetitions >= 2"),
        "test_fraction": (float, 0.5, lambda x: 0 < x < 1, "test fraction in (0, 1)"),
        "w": (float, None, None, "failed-test threshold (default tests/10)"),
        "executions": (int, 1, _GE1, "independent protocol executions >= 1"),
        "input": (str, "", None, "input bits, one char per input vertex"),
        "deviate": (str, None, None, "vertex receiving a Z deviation each round"),
    },
    "blindness-verify": {
        "n": (int, 2, lambda x: 1 <= x <= 3, "pulses, exhaustive up to 3"),
        "kmax": (int, 2, lambda x: 1 <= x <= 3, "max photon count per pulse"),
    },
    "physics-sweep": {
        "alpha_min": (float, 0.1, _POS, "sweep start > 0"),
        "alpha_max": (float, 10.0, _POS, "sweep end > 0"),
        "points": (int, 40, lambda x: x >= 2, "sweep points >= 2"),
        "model": (str, "two_level", None, "two_level | ideal_lambda | both"),
        "coupling": (float, 1.0, lambda x: 0 < x <= 1, "lambda-model coupling in (0, 1]"),
        "log_spacing": (bool, True, None, "geometric alpha spacing"),
    },
    "physics-opt": {
        "alpha_sq": (float, None, _POS, "pulse intensity > 0"),
    },
}


def _coerce(command: str, key: str, value: Any) -> Any:
    typ = _SCHEMAS[command][key][0]
    if typ is bool and isinstance(value, str):
        if value.lower() in ("1", "true", "yes"):
            return True
        if value.lower() in ("0", "false", "no"):
            return False
        raise CliError(f"{command}: {key} must be a boolean, got {value!r}")
    if typ is list and isinstance(value, str):
        value = json.loads(value)
    try:
        return typ(value) if not isinstance(value, typ) else value
    except (TypeError, ValueError):
        raise CliError(f"{command}: {key} must be {typ.__name__}, got {value!r}")


def parse_config(argv: Sequence[str]) -> RunConfig:
    """Merge config file and flags into a validated RunConfig.

    Unknown config keys are rejected; every constraint violation names the
    parameter and its constraint.
    """
    parser = argparse.ArgumentParser(prog="sdqcsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in _SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default="-")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
        for key, (typ, _default, _check, help_) in schema.items():
            flag = "--" + key.replace("_", "-")
            if typ is bool:
                p.add_argument(flag, dest=key, default=None, help=help_)
            else:
                p.add_argument(flag, dest=key, type=str, default=None, help=help_)
    ns = parser.parse_args(list(argv))
    command = ns.command
    schema = _SCHEMAS[command]
    params: dict[str, Any] = {}
    seed = 0
    if ns.config:
        try:
            with open(ns.config, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CliError(f"config parse error at line {exc.lineno}: {exc.msg}")
        unknown = set(doc) - set(schema) - {"seed"}
        if unknown:
            raise CliError(f"unknown config keys for {command}: {sorted(unknown)}")
        if "seed" in doc:
            seed = int(doc["seed"])
        for key, value in doc.items():
            if key != "seed":
                params[key] = _coerce(command, key, value)
    for key in schema:
        flag_val = getattr(ns, key, None)
        if flag_val is not None:
            params[key] = _coerce(command, key, flag_val)
    if ns.seed is not None:
        seed = ns.seed
    for key, (typ, default, check, help_) in schema.items():
        if key not in params or params[key] is None:
            if default is None and key in ("alpha_sq", "eta1", "graph"):
                raise CliError(f"{command}: missing required parameter {key} ({help_})")
            params[key] = default
        if params[key] is not None and check is not None and not check(params[key]):
            raise CliError(f"{command}: {key}={params[key]} violates constraint: {help_}")
    return RunConfig(command=command, params=params, seed=seed, out=ns.out, fmt=ns.fmt)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt_cell(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _emit(cfg: RunConfig, header: list[str], rows: list[list], json_extra: dict | None = None) -> None:
    if cfg.fmt == "csv":
        lines = [",".join(header)]
        lines += [",".join(_fmt_cell(c) for c in row) for row in rows]
        text = "\n".join(lines) + "\n"
    else:
        payload: dict[str, Any] = {
            "command": cfg.command,
            "seed": cfg.seed,
            "rows": [dict(zip(header, row)) for row in rows],
        }
        if json_extra:
            payload.update(json_extra)
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _bounds_row(p: dict, n: int) -> list:
    report = gadget_bounds(p["eta1"], p["alpha_sq"], n, p["t"])
    report = composed_bounds(report, p["vertices"], p["rounds"], p["eps_s"]) \
        if p["rounds"] is not None and p["eps_s"] is not None \
        else composed_bounds(report, p["vertices"])
    return [
        report.alpha_sq, report.eta1, report.p2, report.n, report.t, report.nu,
        report.eps_cor, report.eps_sec, report.eps,
        report.composed_bdqc, report.composed_sdqc,
    ]


def _cmd_bounds(cfg: RunConfig) -> None:
    p = cfg.params
    ns = [int(x) for x in p["n_list"]] if p["n_list"] else [p["n"]]
    header = ["alpha_sq", "eta1", "p2", "n", "t", "nu",
              "eps_cor", "eps_sec", "eps", "bdqc", "sdqc"]
    _emit(cfg, header, [_bounds_row(p, n) for n in ns])


def _gadget_sim_row(p: dict, n: int, seed: int) -> tuple[list, dict]:
    protocol = p["protocol"]
    if protocol not in ("threshold", "postselect"):
        raise CliError(f"gadget-sim: unknown protocol {protocol!r}")
    theta = Angle8(p["theta"])
    runs = p["runs"]
    if protocol == "threshold":
        t = p["t"]
        if t is None:
            t = (p["eta1"] + multiphoton_prob(p["alpha_sq"])) / 2.0 * n
        report = gadget_bounds(p["eta1"], p["alpha_sq"], n, t)
        eps_cor, eps_sec, eps = report.eps_cor, report.eps_sec, report.eps
        eps_post = None
    else:
        t = float(n)  # any loss aborts
        eps_cor = 1.0 - p["eta1"] ** n
        eps_sec = multiphoton_prob(p["alpha_sq"]) ** n
        eps = eps_post = postselect_bounds(p["eta1"], p["alpha_sq"], n)
    extra: dict[str, Any] = {}
    if p["full_state"]:
        aborts = 0
        fidelities = []
        transcript_sample = None
        for trial in range(runs):
            rng = trial_rng(seed, trial)
            if protocol == "threshold":
                params = GadgetParams(p["alpha_sq"], n, t, p["eta1"])
                outcome, transcript = protocol3_gadget(theta, params, rng)
            else:
                outcome, transcript = protocol5_postselected(
                    theta, p["alpha_sq"], n, p["eta1"], rng
                )
            if transcript_sample is None:
                transcript_sample = transcript.to_jsonl()
            if outcome.aborted:
                aborts += 1
            else:
                target = gadget_target_state(
                    2**-0.5, 2**-0.5, theta, outcome.m_x,
                    spin=outcome.spin, photon=outcome.photon,
                )
                fidelities.append(fidelity_up_to_phase(outcome.state, target))
        abort_rate = aborts / runs
        err_rate = None
        extra["fidelity_mean"] = float(np.mean(fidelities)) if fidelities else None
        extra["fidelity_min"] = float(np.min(fidelities)) if fidelities else None
        extra["transcript_sample"] = transcript_sample
    else:
        rng = trial_rng(seed, 0)
        if protocol == "threshold":
            abort_rate = abort_rate_mc(p["eta1"], n, t, runs, rng)
            err_rate = simulator_error_rate_mc(p["alpha_sq"], n, t, runs, rng)
        else:
            abort_rate = postselect_abort_rate_mc(p["eta1"], n, runs, rng)
            err_rate = postselect_error_rate_mc(p["alpha_sq"], n, runs, rng)
    row = [protocol, p["alpha_sq"], p["eta1"], n, t, runs, abort_rate, err_rate,
           eps_cor, eps_sec, eps, eps_post]
    return row, extra


def _cmd_gadget_sim(cfg: RunConfig) -> None:
    p = cfg.params
    ns = [int(x) for x in p["n_list"]] if p["n_list"] else [p["n"]]
    header = ["protocol", "alpha_sq", "eta1", "n", "t", "runs",
              "abort_rate", "sim_error_rate", "eps_cor", "eps_sec", "eps", "eps_post"]
    rows = []
    extra: dict = {}
    for n in ns:
        row, row_extra = _gadget_sim_row(p, n, cfg.seed)
        rows.append(row)
        extra.update(row_extra)
    _emit(cfg, header, rows, json_extra=extra or None)


def _cmd_rsp_sim(cfg: RunConfig) -> None:
    p = cfg.params
    graph, _ = load_graph_document(p["graph"])
    assignment = p["assignment"] or single_emitter_assignment(graph)
    n_extra = {v: p["extra"] for v in graph.vertices} if p["extra"] else None
    fidelities = []
    for trial in range(p["runs"]):
        rng = trial_rng(cfg.seed, trial)
        thetas = {v: uniform_angle(rng) for v in graph.order}
        state = protocol2_blind_rsp(graph, thetas, assignment, rng, n_extra=n_extra)
        target = build_blind_graph_state(graph, thetas)
        fidelities.append(fidelity_up_to_phase(state, target))
    header = ["graph", "runs", "fidelity_mean", "fidelity_min"]
    _emit(cfg, header, [[p["graph"], p["runs"],
                         float(np.mean(fidelities)), float(np.min(fidelities))]])


def _input_bits(graph, text: str) -> dict[str, int]:
    text = text.strip()
    if not text:
        return {v: 0 for v in graph.inputs}
    if len(text) != len(graph.inputs) or any(c not in "01" for c in text):
        raise CliError(
            f"input must be {len(graph.inputs)} bits for inputs {graph.inputs}"
        )
    return {v: int(c) for v, c in zip(graph.inputs, text)}


def _cmd_ubqc_sim(cfg: RunConfig) -> None:
    p = cfg.params
    graph, pattern = load_graph_document(p["graph"])
    if pattern is None:
        raise CliError("ubqc-sim: graph document needs flow and angles")
    x = _input_bits(graph, p["input"])
    counts_ubqc: dict[str, int] = {}
    counts_mbqc: dict[str, int] = {}
    for trial in range(p["runs"]):
        rng = trial_rng(cfg.seed, trial)
        res = ubqc_run(graph, pattern, x, rng, state_source=p["source"],
                       assignment=p["assignment"])
        if res.aborted:
            key = "abort"
        else:
            key = "".join(str(res.outputs[v]) for v in graph.outputs)
        counts_ubqc[key] = counts_ubqc.get(key, 0) + 1
        rng2 = trial_rng(cfg.seed + 2**32, trial)
        state = build_blind_graph_state(graph, {v: Angle8(0) for v in graph.vertices})
        ref = run_mbqc(graph, pattern, x, state, rng2)
        key2 = "".join(str(ref[v]) for v in graph.outputs)
        counts_mbqc[key2] = counts_mbqc.get(key2, 0) + 1
    keys = sorted(set(counts_ubqc) | set(counts_mbqc))
    tv = 0.5 * sum(
        abs(counts_ubqc.get(k, 0) - counts_mbqc.get(k, 0)) / p["runs"] for k in keys
    )
    header = ["outputs", "ubqc_count", "mbqc_count"]
    rows = [[k, counts_ubqc.get(k, 0), counts_mbqc.get(k, 0)] for k in keys]
    _emit(cfg, header, rows, json_extra={"tv_distance": tv})


def _cmd_sdqc_sim(cfg: RunConfig) -> None:
    p = cfg.params
    graph, pattern = load_graph_document(p["graph"])
    if pattern is None:
        raise CliError("sdqc-sim: graph document needs flow and angles")
    x = _input_bits(graph, p["input"])
    n_tests = int(round(p["test_fraction"] * p["rounds"]))
    w = p["w"] if p["w"] is not None else n_tests / 10.0
    server = z_deviation(p["deviate"]) if p["deviate"] else HONEST
    aborts = 0
    failed_total = 0
    outputs: dict[str, int] = {}
    for trial in range(p["executions"]):
        rng = trial_rng(cfg.seed, trial)
        res = sdqc_run(graph, pattern, x, p["rounds"], p["test_fraction"], w, rng,
                       server=server)
        failed_total += res.n_failed
        if res.aborted:
            aborts += 1
        else:
            key = "".join(map(str, res.output))
            outputs[key] = outputs.get(key, 0) + 1
    header = ["rounds", "test_fraction", "w", "executions",
              "abort_rate", "failed_tests_total"]
    rows = [[p["rounds"], p["test_fraction"], w, p["executions"],
             aborts / p["executions"], failed_total]]
    _emit(cfg, header, rows, json_extra={"outputs": outputs})


def _cmd_blindness_verify(cfg: RunConfig) -> None:
    p = cfg.params
    n, kmax = p["n"], p["kmax"]
    header = ["case", "k", "s_set", "max_tv", "sim_matches_real"]
    rows: list[list] = []
    theta_probe = Angle8(3)
    for k in np.ndindex(*([kmax + 1] * n)):
        k = tuple(int(x) for x in k)
        for mask in range(1, 2**n):
            s_set = [i + 1 for i in range(n) if mask >> i & 1]
            tv = blindness_check(n, k, s_set)
            sim_ok = None
            if n <= 2:
                real = real_gadget_view(theta_probe, k, s_set)
                sim = simulator2_view(theta_probe, k, s_set)
                no_error = (("error",),) not in sim.probs
                sim_ok = bool(no_error and sim.equals(real, tol=1e-10))
                if not no_error:
                    sim_ok = None  # all-multiphoton S: the modelled Error case
            rows.append(["threshold", "".join(map(str, k)),
                         "".join(map(str, s_set)), tv, sim_ok])
        if n <= 2:
            real = real_postselected_view(theta_probe, k)
            sim = simulator3_view(theta_probe, k)
            no_error = (("error",),) not in sim.probs
            ok = bool(no_error and sim.equals(real, tol=1e-10)) if no_error else None
            rows.append(["postselect", "".join(map(str, k)), "", None, ok])
    _emit(cfg, header, rows)


def _cmd_physics_sweep(cfg: RunConfig) -> None:
    p = cfg.params
    if p["alpha_min"] >= p["alpha_max"]:
        raise CliError("physics-sweep: alpha_min must be below alpha_max")
    if p["log_spacing"]:
        alphas = np.geomspace(p["alpha_min"], p["alpha_max"], p["points"])
    else:
        alphas = np.linspace(p["alpha_min"], p["alpha_max"], p["points"])
    models = ["two_level", "ideal_lambda"] if p["model"] == "both" else [p["model"]]
    header = ["alpha_sq", "eta1_max", "theta_star", "tau_star", "p1", "p2",
              "gap_emitter", "gap_ideal", "model"]
    rows = []
    for model in models:
        for r in security_gap_sweep(alphas, model=model, coupling=p["coupling"]):
            rows.append([r.alpha_sq, r.eta1_max,
                         None if np.isnan(r.theta_star) else r.theta_star,
                         None if np.isnan(r.tau_star) else r.tau_star,
                         r.p1, r.p2, r.gap_emitter, r.gap_ideal, model])
    extra = None
    if "two_level" in models:
        c = find_security_crossing(float(alphas[0]), float(alphas[-1]))
        extra = {"crossing": {
            "alpha_sq": c.alpha_sq, "eta1": c.eta1_max,
            "theta_star": c.theta_star, "tau_star": c.tau_star,
        }}
    _emit(cfg, header, rows, json_extra=extra)


def _cmd_physics_opt(cfg: RunConfig) -> None:
    p = cfg.params
    eta1, theta_star = maximize_eta1(p["alpha_sq"])
    params = DriveParams(p["alpha_sq"], theta_star)
    header = ["alpha_sq", "eta1_star", "theta_star", "theta_star_over_pi",
              "tau_star", "p1", "p2"]
    rows = [[p["alpha_sq"], eta1, theta_star, theta_star / np.pi, params.tau,
             1.0 - np.exp(-p["alpha_sq"]), multiphoton_prob(p["alpha_sq"])]]
    _emit(cfg, header, rows)


_DISPATCH: dict[str, Callable[[RunConfig], None]] = {
    "bounds": _cmd_bounds,
    "gadget-sim": _cmd_gadget_sim,
    "rsp-sim": _cmd_rsp_sim,
    "ubqc-sim": _cmd_ubqc_sim,
    "sdqc-sim": _cmd_sdqc_sim,
    "blindness-verify": _cmd_blindness_verify,
    "physics-sweep": _cmd_physics_sweep,
    "physics-opt": _cmd_physics_opt,
}


def execute_command(cfg: RunConfig) -> int:
    try:
        _DISPATCH[cfg.command](cfg)
    except (CliError, ValueError, KeyError, OSError) as exc:
        print(f"sdqcsim {cfg.command}: {exc}", file=sys.stderr)
        return 2
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = parse_config(argv)
    except CliError as exc:
        print(f"sdqcsim: {exc}", file=sys.stderr)
        return 2
    return execute_command(cfg)


if __name__ == "__main__":
    sys.exit(main())
