"""Command-line client for the experiment service.

By default subcommands call the service handlers in-process; `--url` targets
a running server instead.  Exit codes: 0 all checks passed, 2 a report
criterion failed, 1 configuration or runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, MvsdeError
from .service.handlers import handle_simulate, handle_study, handle_validate
from .service.schemas import SimulateResponse, StudyRequest, StudyResponse, ValidateResponse

STUDY_COMMANDS = {
    "trotter-kato": "trotter_kato",
    "zeroth-order": "zeroth_order",
    "parametric": "parametric",
    "initial": "initial",
    "moments": "moments",
}


class _Parser(argparse.ArgumentParser):
    """Usage errors map to the config-error exit code, not argparse's default."""

    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="mvsde", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_common(p, with_out=True):
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="override [run] seed")
        p.add_argument("--particles", type=int, default=None, help="override [run] particles")
        p.add_argument("--steps", type=int, default=None, help="override [run] steps")
        p.add_argument("--workers", type=int, default=None, help="override [run] workers")
        p.add_argument("--url", default=None, help="remote service base URL (default: in-process)")
        if with_out:
            p.add_argument("--out", default=".", help="directory for the CSV report")

    add_common(sub.add_parser("simulate", help="run one ensemble and report moment trajectories"))
    for name in STUDY_COMMANDS:
        add_common(sub.add_parser(name, help=f"run the {name.replace('-', ' ')} study"))
    vp = sub.add_parser("validate-config", help="check a config without running it")
    vp.add_argument("--config", required=True)
    vp.add_argument("--url", default=None)

    sp = sub.add_parser("serve", help="run the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8334)
    return parser


def _read_config(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _request_from(args) -> StudyRequest:
    for flag in ("seed", "particles", "steps", "workers"):
        val = getattr(args, flag)
        if val is not None and val < 0:
            raise ConfigError(f"--{flag} must be >= 0, got {val}")
    return StudyRequest(
        config_text=_read_config(args.config),
        seed=args.seed,
        particles=args.particles,
        steps=args.steps,
        workers=args.workers,
    )


def _post_remote(url: str, path: str, req: StudyRequest) -> dict:
    import httpx

    resp = httpx.post(url.rstrip("/") + path, json=req.model_dump(), timeout=600.0)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        raise ConfigError(f"service returned {resp.status_code}: {detail}")
    return resp.json()


def _write_csv(out_dir: str, name: str, csv_text: str) -> Path:
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    path = target / f"{name}.csv"
    path.write_text(csv_text, encoding="utf-8")
    return path


def _run_study(args, command: str) -> int:
    kind = STUDY_COMMANDS[command]
    req = _request_from(args)
    if args.url:
        resp = StudyResponse.model_validate(_post_remote(args.url, f"/v1/studies/{command}", req))
    else:
        resp = handle_study(kind, req)
    path = _write_csv(args.out, kind, resp.csv_text)
    failed = [r for r in resp.rows if not r.passed] + [c for c in resp.criteria if not c.passed]
    status = "pass" if resp.passed else "fail"
    print(f"{kind}: {status} ({len(resp.rows)} rows, seed {resp.seed}) -> {path}")
    for item in failed:
        label = getattr(item, "criterion", None) or getattr(item, "name", "?")
        print(f"  failed: {label}", file=sys.stderr)
    return 0 if resp.passed else 2


def _run_simulate(args) -> int:
    req = _request_from(args)
    if args.url:
        resp = SimulateResponse.model_validate(_post_remote(args.url, "/v1/simulate", req))
    else:
        resp = handle_simulate(req)
    path = _write_csv(args.out, "simulate", resp.csv_text)
    print(
        f"simulate: done (seed {resp.seed}, final E|x|^2 = {resp.final_moment2:.6g}) -> {path}"
    )
    return 0


def _run_validate(args) -> int:
    text = _read_config(args.config)
    if args.url:
        req = StudyRequest(config_text=text)
        resp = ValidateResponse.model_validate(_post_remote(args.url, "/v1/validate-config", req))
    else:
        resp = handle_validate(text)
    if resp.valid:
        kind = resp.study or "simulate-only"
        print(f"config valid ({kind})")
        return 0
    for problem in resp.problems:
        print(f"invalid: {problem}", file=sys.stderr)
    return 1


def _run_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return _run_simulate(args)
        if args.command in STUDY_COMMANDS:
            return _run_study(args, args.command)
        if args.command == "validate-config":
            return _run_validate(args)
        if args.command == "serve":
            return _run_serve(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except MvsdeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
