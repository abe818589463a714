"""Thin command-line client for the experiment service.

Every subcommand posts to the HTTP API.  By default the app runs in-process
(no server required, fully reproducible); pass ``--server URL`` to talk to a
remote instance, in which case artifact files are written on the server side.

Exit codes: 0 success, 1 usage/validation failure, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx

from .harness import default_threads

USAGE_EXIT = 1
RUNTIME_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _post(args, path: str, payload: dict) -> dict:
    if args.server:
        with httpx.Client(base_url=args.server, timeout=None) as client:
            response = client.post(path, json=payload)
    else:
        import asyncio

        from .service import app

        async def _go():
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://oqbm.local", timeout=None
            ) as client:
                return await client.post(path, json=payload)

        response = asyncio.run(_go())
    if response.status_code >= 500:
        print(f"error: {response.json().get('detail', response.text)}", file=sys.stderr)
        raise SystemExit(RUNTIME_EXIT)
    if response.status_code >= 400:
        print(f"invalid request: {response.json().get('detail', response.text)}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)
    return response.json()


def _load_config(args, forced_kind: str | None = None) -> dict:
    if args.config:
        with open(args.config) as fh:
            config = json.load(fh)
    else:
        config = {}
    if forced_kind:
        config["kind"] = forced_kind
    if args.seed is not None:
        config["seed"] = args.seed
    if args.out is not None:
        config["out_dir"] = args.out
    config.setdefault("threads", args.threads)
    if args.threads is not None:
        config["threads"] = args.threads
    return config


def _print_summary(summary: dict) -> None:
    line = {
        "kind": summary["kind"],
        "n_paths": summary["n_paths"],
        "artifacts": summary.get("artifacts", []),
    }
    extra = summary.get("extra") or {}
    for key in ("tv_distance", "max_residual", "passed", "mass_final", "variance_final"):
        if key in extra:
            line[key] = extra[key]
    if summary.get("waiting"):
        line["mean_wait"] = summary["waiting"]["mean_wait"]
        line["ks_distance"] = summary["waiting"]["ks_distance"]
    print(json.dumps(line, indent=2, sort_keys=True))


def _add_common(parser: argparse.ArgumentParser, with_config: bool = True) -> None:
    if with_config:
        parser.add_argument("--config", help="path to a RunConfig JSON file")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--threads", type=int, default=None, help="worker count")
    parser.add_argument("--out", default=None, help="artifact output directory")


def build_parser() -> _Parser:
    parser = _Parser(prog="oqbm", description=__doc__)
    parser.add_argument("--server", default=None, help="remote service URL (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run any configured experiment")
    _add_common(p)

    p = sub.add_parser("lindblad", help="deterministic field propagation")
    _add_common(p)

    p = sub.add_parser("verify-ito", help="noise-algebra residual table")
    p.add_argument("--dims", default="2,4,8,16", help="comma-separated stand-in dimensions")
    p.add_argument("--nbar", default="0,0.5,1,10", help="comma-separated occupations")
    p.add_argument("--seeds", type=int, default=100, help="random data sets per cell")
    p.add_argument("--threshold", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("spin-half", help="two-level gyroscope ensemble and report")
    _add_common(p)
    p.add_argument("--a", type=float, default=None, help="measurement strength")
    p.add_argument("--omega0", type=float, default=1.0)
    p.add_argument("--paths", type=int, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)

    p = sub.add_parser("collapse-stats", help="momentum-collapse law of the circle walk")
    _add_common(p)
    p.add_argument("--sites", type=int, default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--phi", type=float, default=None)

    p = sub.add_parser("compare", help="trajectory-average vs deterministic map")
    _add_common(p)
    p.add_argument("--tolerance", type=float, default=5e-2)
    return parser


def _cmd_simulate(args) -> int:
    config = _load_config(args)
    if not config.get("kind"):
        print("error: simulate needs --config with a 'kind' field", file=sys.stderr)
        return USAGE_EXIT
    data = _post(args, "/run", {"config": config})
    _print_summary(data["summary"])
    return 0


def _cmd_lindblad(args) -> int:
    config = _load_config(args, forced_kind="lindblad")
    data = _post(args, "/run", {"config": config})
    _print_summary(data["summary"])
    return 0


def _cmd_verify_ito(args) -> int:
    payload = {
        "dims": [int(d) for d in args.dims.split(",") if d],
        "nbars": [float(x) for x in args.nbar.split(",") if x],
        "seeds": args.seeds,
        "threshold": args.threshold,
        "seed": args.seed,
    }
    data = _post(args, "/verify-ito", payload)
    print(f"{'dim':>4} {'nbar':>6} {'leibniz':>10} {'duality':>10} {'unitarity':>10} {'noise_fit':>10}")
    for row in data["rows"]:
        print(
            f"{row['dim']:>4} {row['nbar']:>6.2f} {row['leibniz']:>10.2e} "
            f"{row['duality']:>10.2e} {row['unitarity']:>10.2e} {row['noise_fit']:>10.2e}"
        )
    print(f"max residual {data['max_residual']:.3e} (threshold {data['threshold']:.1e})")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
    if not data["passed"]:
        print("FAILED", file=sys.stderr)
        return RUNTIME_EXIT
    return 0


def _cmd_spin_half(args) -> int:
    config = _load_config(args, forced_kind="spin-half")
    spin = config.setdefault("spin", {"a": 4.0, "omega0": 1.0})
    if args.a is not None:
        spin["a"] = args.a
    if args.omega0 is not None:
        spin["omega0"] = args.omega0
    if args.paths is not None:
        config["ensemble"] = args.paths
    if args.horizon is not None:
        config["horizon"] = args.horizon
    if args.dt is not None:
        config["dt"] = args.dt
    config.setdefault("ensemble", 64)
    config.setdefault("horizon", 100.0)
    config.setdefault("dt", min(1e-3, 0.01 / spin["a"] ** 2))
    data = _post(args, "/run", {"config": config})
    _print_summary(data["summary"])
    report = data["summary"]["extra"].get("report")
    if report:
        print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def _cmd_collapse(args) -> int:
    config = _load_config(args, forced_kind="collapse-stats")
    walk = config.setdefault("walk", {})
    if args.sites is not None:
        walk["n_sites"] = args.sites
    if args.steps is not None:
        walk["steps"] = args.steps
    if args.theta is not None:
        walk["theta"] = args.theta
    if args.phi is not None:
        walk["phi"] = args.phi
    if args.runs is not None:
        config["ensemble"] = args.runs
    config.setdefault("ensemble", 1000)
    data = _post(args, "/run", {"config": config})
    _print_summary(data["summary"])
    return 0


def _cmd_compare(args) -> int:
    if not args.config:
        print("error: compare needs --config with a model block", file=sys.stderr)
        return USAGE_EXIT
    with open(args.config) as fh:
        config = json.load(fh)
    if args.seed is not None:
        config["seed"] = args.seed
    if args.out is not None:
        config["out_dir"] = args.out
    if args.threads is not None:
        config["threads"] = args.threads
    data = _post(args, "/compare", {"config": config, "tolerance": args.tolerance})
    print(json.dumps(data, indent=2, sort_keys=True))
    return 0 if data["passed"] else RUNTIME_EXIT


_COMMANDS = {
    "simulate": _cmd_simulate,
    "lindblad": _cmd_lindblad,
    "verify-ito": _cmd_verify_ito,
    "spin-half": _cmd_spin_half,
    "collapse-stats": _cmd_collapse,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is None and hasattr(args, "threads"):
        args.threads = default_threads()
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except httpx.HTTPError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
