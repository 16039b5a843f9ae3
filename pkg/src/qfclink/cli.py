"""Command-line client for the simulator service.

The CLI is a thin HTTP client: by default it mounts the FastAPI app
in-process (no server needed), and with ``--server URL`` it talks to a
running instance instead.  Data goes to stdout, diagnostics to stderr.

Exit status: 0 success, 1 usage error, 2 input or parse error,
3 numerical infeasibility.
"""
from __future__ import annotations

import argparse
import asyncio
import sys
from dataclasses import dataclass

import httpx


@dataclass(frozen=True)
class ReportBundle:
    """What a command produced: output-stream data, error-stream
    diagnostics, and the process exit status."""

    stdout: str
    stderr: str
    exit_status: int


class _UsageError(Exception):
    def __init__(self, usage: str, message: str):
        self.usage = usage
        self.message = message
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors instead of exiting with 2."""

    def error(self, message):
        raise _UsageError(self.format_usage(), message)


def build_parser() -> _Parser:
    parser = _Parser(
        prog="qfclink",
        description="Spectral link-budget simulator for two-step quantum "
                    "frequency conversion links")
    parser.add_argument("--server", metavar="URL", default=None,
                        help="base URL of a running service; default runs "
                             "the service in-process")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("simulate", help="propagate a scenario and print the budget")
    p.add_argument("scenario_file")

    p = sub.add_parser("fit", help="fit the pump-power efficiency curve")
    p.add_argument("csv_file", help="CSV with header 'pump_power_mW,eta'")
    p.add_argument("--length-cm", type=float, required=True,
                   help="crystal length in cm")

    p = sub.add_parser("sweep-power", help="tabulate efficiency vs pump power")
    p.add_argument("scenario_file")
    p.add_argument("--from", dest="start", type=float, required=True,
                   metavar="W", help="first pump power in W")
    p.add_argument("--to", dest="stop", type=float, required=True,
                   metavar="W", help="last pump power in W")
    p.add_argument("--steps", type=int, required=True)

    p = sub.add_parser("sweep-distance", help="tabulate SNR vs fiber length")
    p.add_argument("scenario_file")
    p.add_argument("--from", dest="start", type=float, required=True,
                   metavar="KM", help="first fiber length in km")
    p.add_argument("--to", dest="stop", type=float, required=True,
                   metavar="KM", help="last fiber length in km")
    p.add_argument("--steps", type=int, required=True)

    p = sub.add_parser("attribute",
                       help="detector-band noise for the three pump configurations")
    p.add_argument("scenario_file")

    p = sub.add_parser("calibrate",
                       help="solve the pedestal density for a target noise count")
    p.add_argument("scenario_file")
    p.add_argument("--target-cts", type=float, required=True,
                   help="target both-pumps detector count in cts/s")

    p = sub.add_parser("show-scenario", help="print the bundled standard scenario")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


async def _request_async(server: str | None, method: str, path: str,
                         payload: dict | None) -> httpx.Response:
    if server is None:
        from .service.app import create_app
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://qfclink.internal") as client:
            return await client.request(method, path, json=payload)
    async with httpx.AsyncClient(base_url=server, timeout=120.0) as client:
        return await client.request(method, path, json=payload)


def _request(server: str | None, method: str, path: str,
             payload: dict | None = None) -> httpx.Response:
    return asyncio.run(_request_async(server, method, path, payload))


def _error_bundle(response: httpx.Response) -> ReportBundle:
    kind, message = "error", response.text
    try:
        data = response.json()
        kind = data.get("kind", kind)
        message = data.get("message", data.get("detail", message))
    except ValueError:
        pass
    status = 3 if kind == "infeasible" else 2
    return ReportBundle("", f"error ({kind}): {message}\n", status)


def _read_file(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def run_command(argv: list[str]) -> ReportBundle:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        return ReportBundle("", f"{exc.usage}error: {exc.message}\n", 1)

    if args.command == "serve":
        import uvicorn

        from .service.app import create_app
        uvicorn.run(create_app(), host=args.host, port=args.port)
        return ReportBundle("", "", 0)

    try:
        return _dispatch(args)
    except OSError as exc:
        return ReportBundle("", f"error (input): {exc}\n", 2)
    except httpx.HTTPError as exc:
        return ReportBundle("", f"error (server): cannot reach the service: {exc}\n", 1)


def _dispatch(args: argparse.Namespace) -> ReportBundle:
    server = args.server

    if args.command == "show-scenario":
        response = _request(server, "GET", "/scenario/standard")
        if response.status_code != 200:
            return _error_bundle(response)
        return ReportBundle(response.json()["scenario"], "", 0)

    if args.command == "simulate":
        payload = {"scenario": _read_file(args.scenario_file)}
        response = _request(server, "POST", "/simulate", payload)
        if response.status_code != 200:
            return _error_bundle(response)
        data = response.json()
        return ReportBundle(data["summary"] + "\n" + data["budget_csv"], "", 0)

    if args.command == "fit":
        payload = {"csv": _read_file(args.csv_file), "length_cm": args.length_cm}
        response = _request(server, "POST", "/fit", payload)
        if response.status_code != 200:
            return _error_bundle(response)
        data = response.json()
        return ReportBundle(data["summary"] + "\n" + data["csv"], "", 0)

    if args.command == "sweep-power":
        payload = {"scenario": _read_file(args.scenario_file),
                   "start_w": args.start, "stop_w": args.stop,
                   "steps": args.steps}
        response = _request(server, "POST", "/sweep/power", payload)
        if response.status_code != 200:
            return _error_bundle(response)
        return ReportBundle(response.json()["csv"], "", 0)

    if args.command == "sweep-distance":
        payload = {"scenario": _read_file(args.scenario_file),
                   "start_km": args.start, "stop_km": args.stop,
                   "steps": args.steps}
        response = _request(server, "POST", "/sweep/distance", payload)
        if response.status_code != 200:
            return _error_bundle(response)
        return ReportBundle(response.json()["csv"], "", 0)

    if args.command == "attribute":
        payload = {"scenario": _read_file(args.scenario_file)}
        response = _request(server, "POST", "/attribute", payload)
        if response.status_code != 200:
            return _error_bundle(response)
        data = response.json()
        return ReportBundle(data["summary"] + "\n" + data["csv"], "", 0)

    if args.command == "calibrate":
        payload = {"scenario": _read_file(args.scenario_file),
                   "target_cts": args.target_cts}
        response = _request(server, "POST", "/calibrate", payload)
        if response.status_code != 200:
            return _error_bundle(response)
        data = response.json()
        return ReportBundle(data["summary"], "", 0)

    return ReportBundle("", f"error: unhandled command {args.command!r}\n", 1)


def main(argv: list[str] | None = None) -> None:
    bundle = run_command(sys.argv[1:] if argv is None else argv)
    if bundle.stdout:
        sys.stdout.write(bundle.stdout)
    if bundle.stderr:
        sys.stderr.write(bundle.stderr)
    sys.exit(bundle.exit_status)


if __name__ == "__main__":
    main()
