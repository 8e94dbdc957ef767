"""Command-line client for the correction service.

The CLI is a thin client over the HTTP API: by default it mounts the service
in-process, and --server points it at a remote instance instead. Exit codes:
0 success, 1 suite or criterion failure, 2 usage error.

A flat key=value config file can seed any flag default; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import httpx

from . import __version__
from .runner import REGIMES, SWEEP_AXES, parse_regimes

#: Converters for config-file keys; every key matches an argparse dest.
_CONFIG_TYPES = {
    "server": str,
    "jobs": int,
    "regimes": str,
    "trials": int,
    "seed_base": int,
    "no_ppc_pair": lambda s: s.lower() in ("1", "true", "yes"),
    "noise_sv": float,
    "noise_st": float,
    "beta_in": float,
    "beta_out": float,
    "lam": float,
    "fixed_alpha": float,
    "no_latch": lambda s: s.lower() in ("1", "true", "yes"),
    "no_second_order": lambda s: s.lower() in ("1", "true", "yes"),
    "max_ticks": int,
    "out": str,
    "axis": str,
    "values": str,
    "k_max": int,
    "seed": int,
    "calls": int,
    "k": int,
}


def _load_config(path: str) -> dict:
    values: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _CONFIG_TYPES:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _CONFIG_TYPES[key](raw.strip())
    return values


def _build_parser() -> tuple[argparse.ArgumentParser, list[argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="ppc", description=__doc__)
    parser.add_argument("--version", action="version", version=f"ppc {__version__}")
    parser.add_argument("--server", default=None, help="base URL of a running service; default runs in-process")
    parser.add_argument("--config", default=None, help="flat key=value config file; flags override file values")
    parser.add_argument("--jobs", type=int, default=int(os.environ.get("PPC_JOBS", "1") or "1"),
                        help="worker processes for episode batches (env PPC_JOBS)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the closed-form verification suites")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--k-max", dest="k_max", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--self-test-perturb", dest="perturb", action="store_true",
                   help="harness self-check: inject a coefficient error and expect failure")

    p = sub.add_parser("run", help="seed-paired episode batches with CSV and JSON output")
    p.add_argument("--regimes", default="all", help=f"comma list from: {', '.join(REGIMES)} (or 'all')")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed-base", dest="seed_base", type=int, default=0)
    p.add_argument("--no-ppc-pair", dest="no_ppc_pair", action="store_true",
                   help="skip the baseline arm of each seed")
    p.add_argument("--noise-sv", dest="noise_sv", type=float, default=0.0)
    p.add_argument("--noise-st", dest="noise_st", type=float, default=0.0, help="angular sigma, degrees")
    p.add_argument("--beta-in", dest="beta_in", type=float, default=None)
    p.add_argument("--beta-out", dest="beta_out", type=float, default=None)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--fixed-alpha", dest="fixed_alpha", type=float, default=None)
    p.add_argument("--no-latch", dest="no_latch", action="store_true")
    p.add_argument("--no-second-order", dest="no_second_order", action="store_true")
    p.add_argument("--max-ticks", dest="max_ticks", type=int, default=200)
    p.add_argument("--out", default="results/run_episodes.csv")

    p = sub.add_parser("sweep", help="grid evaluation along one wrapper axis")
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma list of axis values")
    p.add_argument("--regimes", default="all")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed-base", dest="seed_base", type=int, default=0)
    p.add_argument("--noise-sv", dest="noise_sv", type=float, default=0.0)
    p.add_argument("--max-ticks", dest="max_ticks", type=int, default=200)
    p.add_argument("--out", default="results/sweep.csv")

    p = sub.add_parser("bench", help="latency of the per-chunk correction")
    p.add_argument("--calls", type=int, default=1000)
    p.add_argument("--k", type=int, default=8, help="target execution horizon")

    subparsers = [sub.choices[name] for name in sub.choices]
    return parser, subparsers


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=3600.0)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    response = client.post(path, json=payload)
    if response.status_code != 200:
        raise SystemExit(f"service error {response.status_code}: {response.text}")
    return response.json()


def _write(path: str, text: str) -> None:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)


def _cmd_verify(args, client) -> int:
    payload = {"trials": args.trials, "k_max": args.k_max, "seed": args.seed, "perturb": args.perturb}
    data = _post(client, "/verify", payload)
    for f in data["families"]:
        status = "pass" if f["passed"] else "FAIL"
        detail = f" {f['detail']}" if f.get("detail") else ""
        print(f"[{status}] {f['name']}: {f['cases']} cases, max deviation {f['max_deviation']:.3e} "
              f"(tol {f['tolerance']:.1e}){detail}")
    print("verification:", "PASSED" if data["passed"] else "FAILED")
    return 0 if data["passed"] else 1


def _run_payload(args) -> dict:
    return {
        "regimes": list(parse_regimes(args.regimes)),
        "trials": args.trials,
        "seed_base": args.seed_base,
        "paired": not getattr(args, "no_ppc_pair", False),
        "noise_sigma_v": getattr(args, "noise_sv", 0.0),
        "noise_sigma_theta_deg": getattr(args, "noise_st", 0.0),
        "fixed_alpha": getattr(args, "fixed_alpha", None),
        "latch_enabled": not getattr(args, "no_latch", False),
        "second_order": not getattr(args, "no_second_order", False),
        "beta_in": getattr(args, "beta_in", None),
        "beta_out": getattr(args, "beta_out", None),
        "lam": getattr(args, "lam", 1.0),
        "max_ticks": args.max_ticks,
        "jobs": args.jobs,
    }


def _cmd_run(args, client) -> int:
    data = _post(client, "/runs", _run_payload(args))
    _write(args.out, data["csv"])
    summary_path = str(Path(args.out).with_suffix("")) + ".summary.json"
    _write(summary_path, json.dumps(data["summary"], indent=2, sort_keys=True) + "\n")
    for regime, entry in data["summary"]["per_regime"].items():
        ppc = entry.get("ppc", {}).get("rate")
        base = entry.get("baseline", {}).get("rate")
        delta = entry.get("paired_delta")
        parts = [f"{regime:>15}"]
        if ppc is not None:
            parts.append(f"ppc {ppc:6.1%}")
        if base is not None:
            parts.append(f"baseline {base:6.1%}")
        if delta is not None:
            parts.append(f"delta {delta:+7.1%}")
        print("  ".join(parts))
    print(f"wrote {args.out} and {summary_path}")
    return 0


def _cmd_sweep(args, client) -> int:
    payload = _run_payload(args)
    payload["axis"] = args.axis
    payload["values"] = [float(v) for v in args.values.split(",") if v.strip()]
    data = _post(client, "/sweeps", payload)
    _write(args.out, data["csv"])
    for row in data["rows"]:
        base = f"  baseline {row['baseline_rate']:6.1%}" if row["baseline_rate"] is not None else ""
        print(f"{row['axis']}={row['value']:>8}  ppc {row['ppc_rate']:6.1%}{base}")
    print(f"wrote {args.out}")
    return 0


def _cmd_bench(args, client) -> int:
    data = _post(client, "/benchmarks", {"calls": args.calls, "k_exec": args.k})
    print(f"correct_chunk latency over {data['calls']} calls (k_exec={data['k_exec']}):")
    for key in ("mean_ms", "median_ms", "p90_ms", "p99_ms", "max_ms"):
        print(f"  {key[:-3]:>7}: {data[key]:.4f} ms")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = _build_parser()

    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            values = _load_config(known.config)
        except (OSError, ValueError) as exc:
            parser.error(str(exc))
        # Subparsers parse into a fresh namespace, so file-sourced defaults
        # must be installed on each of them, not only on the root parser.
        parser.set_defaults(**values)
        for sp in subparsers:
            sp.set_defaults(**values)

    args = parser.parse_args(argv)
    handlers = {"verify": _cmd_verify, "run": _cmd_run, "sweep": _cmd_sweep, "bench": _cmd_bench}
    try:
        with _client(args.server) as client:
            return handlers[args.command](args, client)
    except ValueError as exc:
        parser.error(str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
