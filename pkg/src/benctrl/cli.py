"""Command-line client for the scenario runners.

Subcommands mirror the service endpoints (evolve, stabilize, control, verify,
sweep); requests are built from flags and/or an INI config file and executed
in process by default, or POSTed to a running service with --server.

Exit codes: 0 success, 1 acceptance failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

from pydantic import ValidationError

from .errors import BenctrlError, ConfigError
from .runio import load_config
from .service.models import (
    ControlRequest,
    EvolveRequest,
    ScenarioResponse,
    StabilizeRequest,
    SweepRequest,
    VerifyRequest,
)

_REQUEST_TYPES = {
    "evolve": EvolveRequest,
    "stabilize": StabilizeRequest,
    "control": ControlRequest,
    "verify": VerifyRequest,
    "sweep": SweepRequest,
}

_SECTION_FIELDS = {
    "grid": "grid",
    "physics": "physics",
    "gain": "gain",
    "initial": "initial",
    "target": "target",
    "feedback": "feedback",
}

_RUN_KEYS = {
    "sobolev_index",
    "linear_only",
    "self_check",
    "tag",
    "out_dir",
    "mode",
    "tol",
    "max_iter",
    "damp_time",
    "damp_decay",
    "residual_tol",
    "kmax",
    "n",
    "horizon",
    "l4_fields",
    "parameter",
    "max_workers",
}


def _config_to_payload(path: str, scenario: str) -> dict:
    raw = load_config(path)
    payload: dict = {}
    for section, items in raw.items():
        if section in _SECTION_FIELDS:
            payload[_SECTION_FIELDS[section]] = dict(items)
        elif section == "run":
            for key, value in items.items():
                if key == "fit_window":
                    lo, hi = value.split(",")
                    payload["fit_window"] = (float(lo), float(hi))
                elif key in _RUN_KEYS:
                    payload[key] = value
                else:
                    raise ConfigError(f"unknown [run] key {key!r}")
        elif section == "verify":
            for key, value in items.items():
                if key in ("suites",):
                    payload["suites"] = [v.strip() for v in value.split(",")]
                elif key in ("alphas", "l4_sizes"):
                    payload[key] = [float(v) if key == "alphas" else int(v) for v in value.split(",")]
                elif key in _RUN_KEYS:
                    payload[key] = value
                else:
                    raise ConfigError(f"unknown [verify] key {key!r}")
        elif section == "sweep":
            for key, value in items.items():
                if key == "values":
                    payload["values"] = [float(v) for v in value.split(",")]
                elif key in _RUN_KEYS:
                    payload[key] = value
                else:
                    raise ConfigError(f"unknown [sweep] key {key!r}")
        else:
            raise ConfigError(f"unknown config section [{section}]")
    if scenario == "sweep" and any(k in payload for k in ("grid", "physics", "gain", "initial", "feedback")):
        base = {k: payload.pop(k) for k in ("grid", "physics", "gain", "initial", "feedback") if k in payload}
        payload["base"] = base
    return payload


def _deep_update(payload: dict, path: str, value) -> None:
    parts = path.split(".")
    node = payload
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="INI config file with request settings")
    sub.add_argument("--server", help="base URL of a running service (POST instead of in-process)")
    sub.add_argument("--out-dir", dest="out_dir", help="output directory (or BENCTRL_OUTPUT_DIR)")
    sub.add_argument("--tag", help="run tag; artifacts land in <out-dir>/<tag>/")
    sub.add_argument("--json", action="store_true", help="print the full response as JSON")


def _add_run_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--n", type=int, help="spatial modes (even)")
    sub.add_argument("--dt", type=float, help="time step")
    sub.add_argument("--t-final", dest="t_final", type=float, help="final time")
    sub.add_argument("--sample-stride", dest="sample_stride", type=int)
    sub.add_argument("--alpha", type=float, help="dispersion coefficient")
    sub.add_argument("--mu", type=float, help="drift (datum mean)")
    sub.add_argument("--gain-kind", dest="gain_kind", choices=["cosine", "uniform"])
    sub.add_argument("--initial-kind", dest="initial_kind", choices=["cosine", "sine", "random", "zero", "file"])
    sub.add_argument("--amplitude", type=float, help="initial profile amplitude")
    sub.add_argument("--initial-mode", dest="initial_mode", type=int)
    sub.add_argument("--seed", type=int, help="random initial condition seed")
    sub.add_argument("--norm", type=float, help="rescale the initial L2 norm")
    sub.add_argument("--s", dest="sobolev_index", type=float, help="Sobolev index for diagnostics")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="benctrl",
        description="Simulation, stabilization and exact control of the Benjamin equation",
    )
    sub = parser.add_subparsers(dest="scenario", required=True)

    p_evolve = sub.add_parser("evolve", help="free or forced run with diagnostics")
    _add_common(p_evolve)
    _add_run_flags(p_evolve)
    p_evolve.add_argument("--linear-only", action="store_true")
    p_evolve.add_argument("--self-check", action="store_true", help="repeat at dt/2 and compare")

    p_stab = sub.add_parser("stabilize", help="closed-loop run with a feedback law")
    _add_common(p_stab)
    _add_run_flags(p_stab)
    p_stab.add_argument("--law", choices=["none", "ggstar", "klambda", "timevarying"])
    p_stab.add_argument("--decay", type=float, help="lambda of K_lambda / K(u,t)")
    p_stab.add_argument("--period", type=float, help="half cycle T of the time-varying law")
    p_stab.add_argument("--fit-lo", dest="fit_lo", type=float)
    p_stab.add_argument("--fit-hi", dest="fit_hi", type=float)

    p_ctrl = sub.add_parser("control", help="exact control: linear HUM, nonlinear Picard, or large-data")
    _add_common(p_ctrl)
    _add_run_flags(p_ctrl)
    p_ctrl.add_argument("--mode", choices=["linear", "nonlinear", "large"])
    p_ctrl.add_argument("--target-kind", dest="target_kind", choices=["cosine", "sine", "random", "zero", "file"])
    p_ctrl.add_argument("--target-mode", dest="target_mode", type=int)
    p_ctrl.add_argument("--target-seed", dest="target_seed", type=int)
    p_ctrl.add_argument("--target-norm", dest="target_norm", type=float)
    p_ctrl.add_argument("--tol", type=float, help="Picard stopping tolerance")
    p_ctrl.add_argument("--max-iter", dest="max_iter", type=int)
    p_ctrl.add_argument("--damp-time", dest="damp_time", type=float)
    p_ctrl.add_argument("--damp-decay", dest="damp_decay", type=float)

    p_verify = sub.add_parser("verify", help="invariant, lemma, embedding and operator suites")
    _add_common(p_verify)
    p_verify.add_argument("--lemmas", action="store_true", help="run only the non-resonance lemma suite")
    p_verify.add_argument("--kmax", type=int)
    p_verify.add_argument("--alphas", help="comma separated dispersion values")
    p_verify.add_argument("--suites", help="comma separated suite names")
    p_verify.add_argument("--l4-fields", dest="l4_fields", type=int)
    p_verify.add_argument("--n", type=int)

    p_sweep = sub.add_parser("sweep", help="run a stabilize grid over one parameter")
    _add_common(p_sweep)
    p_sweep.add_argument("--parameter", help="dotted request path, e.g. feedback.decay")
    p_sweep.add_argument("--values", help="comma separated values")
    p_sweep.add_argument("--max-workers", dest="max_workers", type=int)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    return parser


def _payload_from_args(args: argparse.Namespace) -> dict:
    payload: dict = {}
    if args.config:
        payload = _config_to_payload(args.config, args.scenario)

    direct = {
        "n": "grid.n",
        "dt": "grid.dt",
        "t_final": "grid.t_final",
        "sample_stride": "grid.sample_stride",
        "alpha": "physics.alpha",
        "mu": "physics.mu",
        "gain_kind": "gain.kind",
        "initial_kind": "initial.kind",
        "amplitude": "initial.amplitude",
        "initial_mode": "initial.mode",
        "seed": "initial.seed",
        "norm": "initial.norm",
        "law": "feedback.law",
        "decay": "feedback.decay",
        "period": "feedback.period",
        "target_kind": "target.kind",
        "target_mode": "target.mode",
        "target_seed": "target.seed",
        "target_norm": "target.norm",
    }
    for attr, path in direct.items():
        value = getattr(args, attr, None)
        if value is not None:
            _deep_update(payload, path, value)
    for attr in (
        "sobolev_index",
        "linear_only",
        "self_check",
        "mode",
        "tol",
        "max_iter",
        "damp_time",
        "damp_decay",
        "kmax",
        "l4_fields",
        "parameter",
        "max_workers",
        "out_dir",
        "tag",
    ):
        value = getattr(args, attr, None)
        if value is not None and value is not False:
            payload[attr] = value
    if getattr(args, "fit_lo", None) is not None and getattr(args, "fit_hi", None) is not None:
        payload["fit_window"] = (args.fit_lo, args.fit_hi)
    if getattr(args, "alphas", None):
        payload["alphas"] = [float(v) for v in args.alphas.split(",")]
    if getattr(args, "suites", None):
        payload["suites"] = [v.strip() for v in args.suites.split(",")]
    if getattr(args, "lemmas", False):
        payload["suites"] = ["lemmas"]
    if getattr(args, "values", None):
        payload["values"] = [float(v) for v in args.values.split(",")]
    if args.scenario == "verify" and getattr(args, "n", None) is not None:
        payload.pop("grid", None)
        payload["n"] = args.n
    return payload


def _dispatch(scenario: str, payload: dict, server: str | None) -> ScenarioResponse:
    request = _REQUEST_TYPES[scenario](**payload)
    if server:
        import httpx

        url = server.rstrip("/") + "/" + scenario
        reply = httpx.post(url, json=request.model_dump(mode="json"), timeout=600.0)
        if reply.status_code == 400:
            raise ConfigError(reply.json().get("detail", reply.text))
        if reply.status_code >= 422:
            raise BenctrlError(reply.text)
        return ScenarioResponse(**reply.json())

    from . import scenarios

    runner = getattr(scenarios, f"run_{scenario}")
    return runner(request)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.scenario == "serve":
        import uvicorn

        from .service.app import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    try:
        payload = _payload_from_args(args)
        response = _dispatch(args.scenario, payload, args.server)
    except (ConfigError, ValidationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except BenctrlError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    if args.json:
        print(response.model_dump_json(indent=2))
    else:
        print(f"[{response.scenario}] status={response.status}")
        for key, value in response.summary.items():
            print(f"  {key} = {value}")
        for name, ok in response.checks.items():
            print(f"  check {name}: {'pass' if ok else 'FAIL'}")
        for name, path in response.files.items():
            print(f"  wrote {path}")
    return 0 if response.status == "ok" else 1


if __name__ == "__main__":
    sys.exit(main())
