"""Operator command line.

Every command reads the same declarative config document and talks to the
service layer: an embedded in-process app by default, or a running server
via --server. Exit codes are fixed: 0 success, 1 config error, 2 runtime
error, 3 protocol conformance failure.

Output files are written atomically (temp file in the target directory,
then rename), so re-running a command can only ever replace complete files.
"""

from __future__ import annotations

import json
import os
import sys
import tempfile
import warnings
from pathlib import Path
from typing import Optional

import click
import yaml

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_PROTOCOL = 3

_SERVER_OPTION = click.option(
    "--server",
    default=None,
    metavar="URL",
    help="Send work to a running service instead of executing in-process.",
)
_JOBS_OPTION = click.option(
    "--jobs", default=1, show_default=True, type=click.IntRange(1, 64),
    help="Parallel runs for independent grid cells.",
)


class ServiceClient:
    """Thin POST wrapper over either a real server or the embedded app."""

    def __init__(self, server: Optional[str] = None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=None)
        else:
            with warnings.catch_warnings():
                warnings.filterwarnings("ignore", module="starlette.*")
                warnings.filterwarnings("ignore", message=".*httpx.*")
                from fastapi.testclient import TestClient

                from .service import create_app

                self._client = TestClient(
                    create_app(), raise_server_exceptions=False
                )

    def post(self, path: str, payload: dict):
        response = self._client.post(path, json=payload)
        try:
            body = response.json()
        except ValueError:
            body = {"detail": {"error": response.text[:500], "kind": "BadResponse"}}
        return response.status_code, body


def _fail(code: int, message: str) -> None:
    click.echo(message, err=True)
    sys.exit(code)


def _call(client: ServiceClient, path: str, payload: dict) -> dict:
    try:
        status, body = client.post(path, payload)
    except Exception as exc:
        _fail(EXIT_RUNTIME, f"service unreachable: {exc}")
    if status == 400:
        problems = body.get("detail", {}).get("problems", [str(body)])
        _fail(EXIT_CONFIG, "config error:\n  " + "\n  ".join(problems))
    if status != 200:
        detail = body.get("detail", body)
        if isinstance(detail, dict):
            detail = detail.get("error", json.dumps(detail))
        _fail(EXIT_RUNTIME, f"run failed: {detail}")
    return body


def _load_doc(path: Path):
    try:
        text = path.read_text()
    except OSError as exc:
        _fail(EXIT_CONFIG, f"cannot read config {path}: {exc}")
    try:
        if path.suffix == ".json":
            return json.loads(text)
        return yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        _fail(EXIT_CONFIG, f"cannot parse {path}: {exc}")


def _parse_seeds(text: str):
    try:
        return [int(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError:
        _fail(EXIT_CONFIG, f"--seeds must be comma-separated integers, got {text!r}")


def _apply_overrides(doc, **overrides):
    """Flags beat file fields; unknown docs pass through for server messages."""
    if not isinstance(doc, dict):
        return doc
    doc = dict(doc)
    simple = ("dataset", "output_dir", "window", "max_instances", "report_formats")
    for key in simple:
        value = overrides.get(key)
        if value not in (None, (), []):
            doc[key] = list(value) if isinstance(value, tuple) else value
    if overrides.get("seeds"):
        doc["seeds"] = _parse_seeds(overrides["seeds"])
    endpoint = overrides.get("endpoint")
    if endpoint:
        entries = doc.get("predictors")
        if isinstance(entries, list):
            entries = [dict(e) if isinstance(e, dict) else e for e in entries]
            doc["predictors"] = entries
        elif isinstance(doc.get("predictor"), dict):
            entries = [dict(doc["predictor"])]
            doc["predictor"] = entries[0]
        else:
            entries = []
        for entry in entries:
            if isinstance(entry, dict) and entry.get("kind") == "remote":
                entry["endpoint"] = endpoint
    return doc


def _output_dir(doc, flag_value: Optional[str]) -> Path:
    if flag_value:
        return Path(flag_value)
    if isinstance(doc, dict) and isinstance(doc.get("output_dir"), str):
        return Path(doc["output_dir"])
    return Path("runs")


def _report_formats(doc) -> list:
    if isinstance(doc, dict) and isinstance(doc.get("report_formats"), list):
        return doc["report_formats"]
    return ["json", "csv"]


def _atomic_write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, tmp_name = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(handle, "w") as tmp:
            tmp.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def _windowed_csv(report: dict) -> str:
    lines = ["window_end_index,accuracy"]
    for end, accuracy in report.get("windowed", []):
        lines.append(f"{end},{accuracy}")
    return "\n".join(lines) + "\n"


def _config_options(command):
    for option in (
        click.option("--dataset", default=None, help="Override the dataset label."),
        click.option("--seeds", default=None, metavar="S0,S1,...",
                     help="Override the seed list."),
        click.option("--window", default=None, type=int,
                     help="Override the accuracy window size."),
        click.option("--max-instances", default=None, type=int,
                     help="Stop each run after this many instances."),
        click.option("--output-dir", default=None, type=click.Path(),
                     help="Where report files land."),
        click.option("--endpoint", default=None,
                     help="Override every remote predictor's endpoint."),
        _SERVER_OPTION,
    ):
        command = option(command)
    return command


@click.group()
def main() -> None:
    """Bounded-memory in-context classification over data streams."""


@main.command()
@click.argument("config_path", type=click.Path(path_type=Path))
@click.option("--format", "formats", multiple=True,
              type=click.Choice(["json", "csv"]),
              help="Report formats to write (default from config).")
@_JOBS_OPTION
@_config_options
def run(config_path: Path, formats, jobs, dataset, seeds, window,
        max_instances, output_dir, endpoint, server) -> None:
    """Prequential accuracy runs: one report per (predictor, seed)."""
    doc = _apply_overrides(
        _load_doc(config_path), dataset=dataset, seeds=seeds, window=window,
        max_instances=max_instances, output_dir=output_dir,
        report_formats=formats, endpoint=endpoint,
    )
    body = _call(ServiceClient(server), "/runs", {"config": doc, "jobs": jobs})
    out_dir = _output_dir(doc, output_dir)
    wanted = _report_formats(doc)
    label = body["label"]
    multi = len({e["predictor_index"] for e in body["entries"]}) > 1

    click.echo(f"{'dataset':<20} {'predictor':<14} {'seed':>6} {'A_T':>8} {'evaluated':>10}")
    for entry in body["entries"]:
        name = entry["predictor"]
        if multi:
            name = f"{name}#{entry['predictor_index']}"
        a_t = "n/a" if entry["a_t"] is None else f"{entry['a_t']:.4f}"
        click.echo(
            f"{label:<20} {name:<14} {entry['seed']:>6} {a_t:>8} {entry['n_evaluated']:>10}"
        )
        stem = f"{label}_{name.replace('#', '')}_seed{entry['seed']}"
        if "json" in wanted:
            _atomic_write(
                out_dir / f"{stem}.report.json",
                json.dumps(entry["report"], indent=2) + "\n",
            )
        if "csv" in wanted:
            _atomic_write(out_dir / f"{stem}.windowed.csv", _windowed_csv(entry["report"]))
    click.echo(f"reports written to {out_dir}/", err=True)
    sys.exit(EXIT_OK)


@main.command()
@click.argument("config_path", type=click.Path(path_type=Path))
@_config_options
def ablate(config_path: Path, dataset, seeds, window, max_instances,
           output_dir, endpoint, server) -> None:
    """Memory ablation grid: per-cell CSV plus paired delta summary."""
    doc = _apply_overrides(
        _load_doc(config_path), dataset=dataset, seeds=seeds, window=window,
        max_instances=max_instances, output_dir=output_dir, endpoint=endpoint,
    )
    body = _call(ServiceClient(server), "/ablate", {"config": doc})
    out_dir = _output_dir(doc, output_dir)
    csv_path = out_dir / f"{body['label']}_ablation.csv"
    _atomic_write(csv_path, body["csv"])

    click.echo(f"{'delta':<24} {'M':>6} {'ratio':>6} {'mean':>9} {'p':>10} {'significant':>12}")
    for row in body["deltas"]:
        ratio = "" if row["ratio"] is None else f"{row['ratio']:g}"
        m = "" if row["m"] is None else row["m"]
        p = "" if row["p_value"] is None else f"{row['p_value']:.4g}"
        sig = "" if row["significant"] is None else str(row["significant"]).lower()
        click.echo(f"{row['kind']:<24} {m:>6} {ratio:>6} {row['mean']:>9.4f} {p:>10} {sig:>12}")
    click.echo(f"grid written to {csv_path}", err=True)
    sys.exit(EXIT_OK)


@main.command()
@click.argument("config_path", type=click.Path(path_type=Path))
@_JOBS_OPTION
@_config_options
def bench(config_path: Path, jobs, dataset, seeds, window, max_instances,
          output_dir, endpoint, server) -> None:
    """Batch-amortized per-instance latency, one row per predictor."""
    doc = _apply_overrides(
        _load_doc(config_path), dataset=dataset, seeds=seeds, window=window,
        max_instances=max_instances, output_dir=output_dir, endpoint=endpoint,
    )
    body = _call(ServiceClient(server), "/bench", {"config": doc, "jobs": jobs})
    click.echo(
        f"{'predictor':<14} {'instances':>10} {'mean_ms':>9} {'p50_ms':>9} "
        f"{'p99_ms':>9} {'inst/s':>10}"
    )
    for row in body["rows"]:
        if row["count"] == 0:
            click.echo(f"{row['predictor']:<14} {0:>10} {'n/a':>9} {'n/a':>9} {'n/a':>9} {'n/a':>10}")
            continue
        rate = 1000.0 / row["mean_ms"] if row["mean_ms"] else float("inf")
        click.echo(
            f"{row['predictor']:<14} {row['count']:>10} {row['mean_ms']:>9.3f} "
            f"{row['p50_ms']:>9.3f} {row['p99_ms']:>9.3f} {rate:>10.0f}"
        )
    sys.exit(EXIT_OK)


@main.command("protocol-check")
@click.argument("endpoint")
@click.option("--timeout-ms", default=5000.0, show_default=True)
@_SERVER_OPTION
def protocol_check(endpoint: str, timeout_ms: float, server) -> None:
    """Conformance battery against a predict-protocol server."""
    body = _call(
        ServiceClient(server),
        "/protocol-check",
        {"endpoint": endpoint, "timeout_ms": timeout_ms},
    )
    for check in body["checks"]:
        mark = "PASS" if check["passed"] else "FAIL"
        detail = f": {check['detail']}" if check["detail"] else ""
        click.echo(f"{mark} {check['name']}{detail}")
    if body["ok"]:
        click.echo(f"{endpoint} conforms")
        sys.exit(EXIT_OK)
    click.echo(f"{endpoint} failed conformance", err=True)
    sys.exit(EXIT_PROTOCOL)


@main.command("mock-server")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=0, show_default=True, type=int)
@click.option("--max-context", default=None, type=int,
              help="Advertised context ceiling.")
@click.option("--max-batch", default=None, type=int,
              help="Advertised batch ceiling.")
@click.option("--stdio", is_flag=True, help="Speak the protocol on stdin/stdout.")
def mock_server(host: str, port: int, max_context, max_batch, stdio: bool) -> None:
    """Run the bundled deterministic mock predict server (for tests/demos)."""
    from .predictor.mock_server import (
        DEFAULT_MAX_BATCH,
        DEFAULT_MAX_CONTEXT,
        MockPredictServer,
        serve_stdio,
    )

    max_context = DEFAULT_MAX_CONTEXT if max_context is None else max_context
    max_batch = DEFAULT_MAX_BATCH if max_batch is None else max_batch
    if stdio:
        serve_stdio(max_context=max_context, max_batch=max_batch)
        sys.exit(EXIT_OK)
    server = MockPredictServer(
        host=host, port=port, max_context=max_context, max_batch=max_batch
    )
    click.echo(f"mock server listening on {server.endpoint}")
    sys.stdout.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    sys.exit(EXIT_OK)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8150, show_default=True, type=int)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
