"""Command-line entry point: ``collapsesim <command> [options]``.

Exit codes: 0 success, 1 domain error (JSON on stderr), 2 usage error.
Inputs come only from flags and an optional JSON config file (flags win);
no environment variables are read.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Any

import jsonschema
import numpy as np

from . import experiments as ex
from . import lattice as lat
from . import nonlocality as nl
from .errors import CollapseSimError
from .process import ProcessTrace
from .seeding import trial_engine
from .states import DensityState, Projector

COMMANDS = ("zeno", "synapse", "lattice", "nonlocal", "trace", "selection")
SIG_DIGITS = 12


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    output_format: str = "json"
    output_path: str | None = None
    workers: int = 1


def load_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("config_schema.json").read_text())


# --- argument parsing --------------------------------------------------------


def _complex_arg(text: str) -> list[float]:
    try:
        z = complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}")
    return [z.real, z.imag] if z.imag else z.real


def _json_arg(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"invalid JSON: {exc}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("run options")
    g.add_argument("--config", help="JSON config file; flags override its values")
    g.add_argument("--seed", type=int, default=None, help="64-bit unsigned seed (default 0)")
    g.add_argument("--format", dest="output_format", choices=("json", "csv"), default=None)
    g.add_argument("--output", dest="output_path", default=None, help="write here instead of stdout")
    g.add_argument("--workers", type=int, default=None, help="threads for Monte Carlo (output unaffected)")

    parser = _Parser(prog="collapsesim", description="Collapse-dynamics experiments.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def zeno_flags(p):
        p.add_argument("--preset", choices=("zeno-paper",))
        p.add_argument("--x", type=float)
        p.add_argument("--y", type=float)
        for name in ("z", "c", "s"):
            p.add_argument(f"--{name}", type=_complex_arg)

    p = sub.add_parser("zeno", parents=[common], help="three-state Zeno model weights")
    zeno_flags(p)
    p = sub.add_parser("selection", parents=[common], help="Monte Carlo of the question advantage")
    zeno_flags(p)
    p.add_argument("--n-trials", dest="n_trials", type=int)

    p = sub.add_parser("synapse", parents=[common], help="presynaptic calcium estimates")
    for name in ("ion_mass", "temperature", "channel_diameter", "travel_distance"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    p.add_argument("--n-synapses", dest="n_synapses", type=int)

    p = sub.add_parser("lattice", parents=[common], help="lattice superposition and gestalt collapse")
    p.add_argument("--preset", choices=("m-glyph-5x5", "paper-scale"))
    for name in ("nx", "ny", "nz", "fields", "values", "steps"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--rule", choices=lat.RULES)
    p.add_argument("--table", type=_json_arg, help="JSON list, site code -> site code")
    p.add_argument("--pattern", type=_json_arg, help="JSON list of [x, y, value] on the z=0 face")

    p = sub.add_parser("nonlocal", parents=[common], help="CHSH value and local-model check")
    p.add_argument("--preset", choices=("singlet-chsh",))
    p.add_argument("--state", choices=("singlet", "phi-plus", "product"))
    p.add_argument("--visibility", type=float)
    p.add_argument("--angles-l", dest="angles_l", type=float, nargs=2)
    p.add_argument("--angles-r", dest="angles_r", type=float, nargs=2)

    p = sub.add_parser("trace", parents=[common], help="process-time staircase of a question schedule")
    p.add_argument("--preset", choices=("zeno-paper", "qubit-zeno"))
    p.add_argument("--n-questions", dest="n_questions", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--omega", type=float)
    return parser


RUN_KEYS = ("config", "seed", "output_format", "output_path", "workers", "command")


def parse_config(argv: list[str]) -> RunConfig:
    """Merge defaults <- config file <- flags, then validate against the schema."""
    args = vars(build_parser().parse_args(argv))
    file_cfg: dict[str, Any] = {}
    if args.get("config"):
        try:
            with open(args["config"]) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args['config']!r}: {exc}")
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")

    schema = load_schema()
    try:
        jsonschema.validate(file_cfg, schema)
    except jsonschema.ValidationError as exc:
        raise UsageError(f"config file: {_schema_message(exc)}")

    command = args.get("command") or file_cfg.get("command")
    if command is None:
        raise UsageError("missing required field 'command' (one of " + ", ".join(COMMANDS) + ")")
    if args.get("command") and file_cfg.get("command") not in (None, args["command"]):
        raise UsageError(f"conflicting commands: flag {args['command']!r} vs config {file_cfg['command']!r}")

    params = dict(file_cfg.get("params", {}))
    params.update({k: v for k, v in args.items() if k not in RUN_KEYS and v is not None})

    def pick(key, default):
        return args[key] if args.get(key) is not None else file_cfg.get(key, default)

    cfg = RunConfig(command=command, seed=pick("seed", 0), params=params,
                    output_format=pick("output_format", "json"), output_path=pick("output_path", None),
                    workers=pick("workers", 1))
    if not 0 <= cfg.seed < 2**64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    if cfg.workers < 1:
        raise UsageError("workers must be >= 1")

    sub_schema = dict(schema["commands"][command], **{"$defs": schema["$defs"]})
    try:
        jsonschema.validate(params, sub_schema)
    except jsonschema.ValidationError as exc:
        raise UsageError(f"{command} params: {_schema_message(exc)}")
    if command == "nonlocal" and "preset" not in params:
        for key in ("angles_l", "angles_r"):
            if key not in params:
                raise UsageError(f"nonlocal: missing required parameter '{key}' (or give --preset singlet-chsh)")
    return cfg


def _schema_message(exc: jsonschema.ValidationError) -> str:
    where = ".".join(str(p) for p in exc.absolute_path)
    return f"field '{where}': {exc.message}" if where else exc.message


# --- commands -------------------------------------------------------------------


def _complex(v) -> complex:
    return complex(v[0], v[1]) if isinstance(v, list) else complex(v)


def _zeno_params(params: dict) -> ex.ZenoParams:
    kw = {k: params[k] for k in ("x", "y") if k in params}
    kw.update({k: _complex(params[k]) for k in ("z", "c", "s") if k in params})
    return ex.ZenoParams(**kw)


def run_zeno(cfg: RunConfig) -> dict:
    p = _zeno_params(cfg.params)
    plain, collapsed = ex.zeno_matrix_run(p, False), ex.zeno_matrix_run(p, True)
    return {
        "w_initial": plain.w_initial,
        "w_after_U": plain.w_after_U,
        "w_final_no_question": plain.w_final,
        "w_final_with_question": collapsed.w_final,
        "closed_form_no_question": ex.zeno_closed_form(p, False),
        "closed_form_with_question": ex.zeno_closed_form(p, True),
        "trace_S": plain.trace_S,
        "prob_final_no_question": plain.w_final / plain.trace_S,
        "prob_final_with_question": collapsed.w_final / collapsed.trace_S,
    }


def run_selection(cfg: RunConfig) -> dict:
    p = _zeno_params(cfg.params)
    n = cfg.params.get("n_trials", 100_000)
    r = ex.selection_advantage_mc(p, n, seed=cfg.seed, workers=cfg.workers)
    return asdict(r) | {"advantage": r.rate_with_questions - r.rate_without}


def run_synapse(cfg: RunConfig) -> dict:
    return asdict(ex.synapse_estimates(ex.SynapseParams(**cfg.params)))


def run_lattice(cfg: RunConfig) -> dict:
    prm = dict(cfg.params)
    preset = prm.pop("preset", None)
    paper = lat.LatticeConfig(1000, 1000, 1000, fields=3, values=1000)
    if preset == "paper-scale":
        return {"config_space_log10": lat.config_space_log10(paper), "n_sites": paper.n_sites,
                "fields": paper.fields, "values": paper.values}

    if preset == "m-glyph-5x5":
        geom = {"nx": 5, "ny": 5, "nz": 1, "fields": 1, "values": 2}
        pattern = lat.m_glyph_pattern()
    else:
        geom = {"nx": 2, "ny": 2, "nz": 1, "fields": 1, "values": 2, "rule": "xor"}
        pattern = None
    steps = prm.pop("steps", 1)
    if "pattern" in prm:
        pattern = {(x, y): v for x, y, v in prm.pop("pattern")}
    if "table" in prm:
        prm["table"] = tuple(prm["table"])
    geom.update(prm)
    cfg_l = lat.LatticeConfig(**geom)
    if pattern is None:
        pattern = {(x, y): 1 for x in range(cfg_l.nx) for y in range(cfg_l.ny)}

    out = {
        "config_space_log10": lat.config_space_log10(cfg_l),
        "paper_scale_config_space_log10": lat.config_space_log10(paper),
        "constrained_sites": len(pattern),
        "uniform_prob_yes_log10": lat.pattern_log10_fraction(cfg_l, pattern),
    }
    if not cfg_l.is_desk_scale():
        out["concrete"] = False
        return out

    state = lat.lift_to_superposition(cfg_l, "uniform")
    for _ in range(steps):
        state = lat.quantum_step(cfg_l, state)
    proj = lat.pattern_projector(cfg_l, pattern)
    outcome = lat.gestalt_collapse(state, proj, trial_engine(cfg.seed, 0))
    post = outcome.post_state
    nz = np.flatnonzero(np.abs(post.amplitudes) > 0)
    out |= {
        "concrete": True,
        "n_configs": cfg_l.n_configs,
        "pattern_rank": proj.rank,
        "prob_yes": outcome.probability_yes,
        "answer": outcome.answer,
        "post_norm2": post.norm2,
        "table": {"columns": ["index", "re", "im"],
                  "rows": [[int(i), post.amplitudes[i].real, post.amplitudes[i].imag] for i in nz]},
    }
    return out


def _nonlocal_experiment(params: dict) -> nl.BipartiteExperiment:
    if params.get("preset") == "singlet-chsh" and not {"angles_l", "angles_r"} & params.keys():
        angles = nl.SINGLET_CHSH_ANGLES
    else:
        angles = (params.get("angles_l", nl.SINGLET_CHSH_ANGLES[0]),
                  params.get("angles_r", nl.SINGLET_CHSH_ANGLES[1]))
    name = params.get("state", "singlet")
    if name == "singlet":
        state = nl.singlet()
    elif name == "phi-plus":
        state = DensityState.pure(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))
    else:
        state = DensityState.pure(np.array([1, 0, 0, 0]), (2, 2))
    vis = params.get("visibility", 1.0)
    if vis != 1.0:
        state = nl.with_white_noise(state, vis)
    return nl.BipartiteExperiment.from_angles(state, *angles)


def run_nonlocal(cfg: RunConfig) -> dict:
    table = nl.joint_probs(_nonlocal_experiment(cfg.params))
    verdict = nl.local_model_check(table)
    report = nl.loc_report(verdict)
    E = table.correlators()
    return {
        "max_abs_chsh": verdict.max_abs_chsh,
        "local_bound": verdict.local_bound,
        "locally_explainable": verdict.locally_explainable,
        "lp_feasible": verdict.lp_feasible,
        "methods_agree": verdict.methods_agree,
        "chsh_values": list(verdict.chsh_values),
        "correlators": {f"E{x}{y}": float(E[x, y]) for x in range(2) for y in range(2)},
        "report": report,
        "table": {"columns": ["a", "b", "x", "y", "p"],
                  "rows": [[a, b, x, y, float(table.p[a, b, x, y])]
                           for a in range(2) for b in range(2) for x in range(2) for y in range(2)]},
    }


def run_trace(cfg: RunConfig) -> dict:
    prm = cfg.params
    rng = trial_engine(cfg.seed, 0)
    if prm.get("preset", "zeno-paper") == "zeno-paper":
        m = ex.zeno_matrices(ex.ZenoParams())
        proj = Projector(m["P"], name="P")
        trace = ProcessTrace(DensityState(m["S"]))
        trace.pose_question(proj, rng)
        trace.evolve_segment(m["U"], name="U")
        trace.evolve_segment(m["M"], name="M")
        trace.pose_question(proj, rng)
    else:
        omega, dt = prm.get("omega", 1.0), prm.get("dt", 0.1)
        h = omega * nl.SIGMA_X
        trace = ProcessTrace(DensityState(np.diag([1.0, 0.0])))
        proj = Projector.basis_state(2, 0, name="|0><0|")
        for _ in range(prm.get("n_questions", 10)):
            trace.evolve_segment(hamiltonian=h, dt=dt)
            trace.pose_question(proj, rng)
    return {
        "process_index": trace.process_index,
        "math_time": trace.math_time,
        "final_weight": trace.current_state.weight,
        "events": trace.event_log(),
        "staircase": [{"t": t, "i": i} for t, i in trace.staircase_export()],
        "table": {"columns": ["t", "i"], "rows": [[t, i] for t, i in trace.staircase_export()]},
    }


RUNNERS = {"zeno": run_zeno, "selection": run_selection, "synapse": run_synapse,
           "lattice": run_lattice, "nonlocal": run_nonlocal, "trace": run_trace}


def run_command(cfg: RunConfig) -> dict:
    result = {"command": cfg.command, "seed": cfg.seed}
    result.update(RUNNERS[cfg.command](cfg))
    return result


# --- output ---------------------------------------------------------------------


def _round(v):
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(format(v, f".{SIG_DIGITS}g")) if math.isfinite(v) else str(v)
    if isinstance(v, complex):
        return [_round(v.real), _round(v.imag)]
    if isinstance(v, dict):
        return {str(k): _round(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_round(x) for x in v]
    return str(v)


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), f".{SIG_DIGITS}g")
    return str(v)


def render(result: dict, output_format: str) -> str:
    if output_format == "json":
        body = {k: v for k, v in result.items() if k != "table"}
        return json.dumps(_round(body), indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if "table" in result:
        w.writerow(result["table"]["columns"])
        for row in result["table"]["rows"]:
            w.writerow([_cell(c) for c in row])
    else:
        scalars = {k: v for k, v in result.items() if not isinstance(v, (dict, list, tuple))}
        w.writerow(scalars.keys())
        w.writerow([_cell(v) for v in scalars.values()])
    return buf.getvalue()


def write_output(result: dict, cfg: RunConfig, stdout=None) -> None:
    text = render(result, cfg.output_format)
    if cfg.output_path:
        with open(cfg.output_path, "w", newline="") as fh:
            fh.write(text)
    else:
        (stdout or sys.stdout).write(text)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        result = run_command(cfg)
        write_output(result, cfg)
    except (CollapseSimError, IndexError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
