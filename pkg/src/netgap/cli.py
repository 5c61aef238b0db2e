"""Command line front end.

Every subcommand is a client of the HTTP service. By default the service
is instantiated in-process behind an ASGI transport, so nothing needs to
be running; pass --server to talk to a live instance over the network
with the same wire format. Files stay on this side of the boundary: the
CLI reads paths into payloads and writes returned artifact text verbatim.

Exit codes: 0 success with a feasible result, 1 bad input or a failed
request, 2 completed but nothing feasible found.
"""

from __future__ import annotations

import asyncio
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import httpx

from .errors import NetgapError
from .pipeline import merge_comparisons
from .search import worker_count

NO_FEASIBLE = 2

_TIMEOUT = httpx.Timeout(None)


class _InProcessClient:
    """Blocking facade over the ASGI app; one event loop per request."""

    def __init__(self):
        from .service import create_app

        self._transport = httpx.ASGITransport(app=create_app())

    async def _request(self, path: str, payload: dict) -> httpx.Response:
        async with httpx.AsyncClient(transport=self._transport,
                                     base_url="http://netgap",
                                     timeout=_TIMEOUT) as client:
            return await client.post(path, json=payload)

    def post(self, path: str, json: dict) -> httpx.Response:
        return asyncio.run(self._request(path, json))

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=_TIMEOUT)
    return _InProcessClient()


class _InfeasibleInputs(click.ClickException):
    """Well-formed inputs that no topology can satisfy."""

    exit_code = NO_FEASIBLE


def _post(client, path: str, payload: dict) -> dict:
    try:
        resp = client.post(path, json=payload)
    except httpx.HTTPError as exc:
        raise click.ClickException(f"request to {path} failed: {exc}")
    if resp.status_code in (409, 422):
        try:
            detail = resp.json().get("detail")
        except ValueError:
            detail = None
        message = str(detail or resp.text)
        if resp.status_code == 409:
            raise _InfeasibleInputs(message)
        raise click.ClickException(message)
    if resp.status_code != 200:
        raise click.ClickException(f"{path} returned HTTP {resp.status_code}: {resp.text}")
    return resp.json()


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise click.ClickException(f"{path}: {exc}")


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise click.ClickException(f"{path}: {exc}")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    # newline="" because artifact text (notably the CSV) is byte-exact
    path.write_text(text, encoding="utf-8", newline="")


def _write_artifacts(artifacts: dict, out_dir: str) -> None:
    for name, text in sorted(artifacts.items()):
        _write_text(Path(out_dir) / name, text)


def _config_payload(config_path: str | None, epochs: int | None = None,
                    weights: tuple | None = None) -> dict | None:
    cfg = _read_json(config_path) if config_path else {}
    if epochs is not None:
        cfg.setdefault("sp2", {})["max_epochs"] = epochs
    if weights is not None:
        cfg["weight_latency"], cfg["weight_cost"], cfg["weight_resilience"] = weights
    return cfg or None


def _parse_weights(ctx, param, value):
    if value is None:
        return None
    fields = value.split(",")
    if len(fields) != 3:
        raise click.BadParameter("expected latency,cost,resilience (three numbers)")
    try:
        return tuple(float(f) for f in fields)
    except ValueError:
        raise click.BadParameter(f"not numeric: {value!r}")


def _parse_parts(ctx, param, value):
    parts = {}
    for spec in value:
        fields = spec.split(":")
        if len(fields) not in (2, 3) or not fields[0]:
            raise click.BadParameter(
                f"{spec!r}; expected NAME:COUNT or NAME:COUNT:MESSAGES")
        try:
            numbers = [int(f) for f in fields[1:]]
        except ValueError:
            raise click.BadParameter(f"{spec!r}; counts must be integers")
        if fields[0] in parts:
            raise click.BadParameter(f"part {fields[0]!r} given twice")
        parts[fields[0]] = numbers[0] if len(numbers) == 1 else numbers
    return parts


def _echo_summary(summary: dict) -> None:
    for key in sorted(summary):
        click.echo(f"{key}: {summary[key]}")


server_option = click.option(
    "--server", default=None, metavar="URL",
    help="Base URL of a running service; default runs the service in-process.")


@click.group()
@click.version_option(package_name="netgap")
def main():
    """Synthesize networked platforms from application models."""


@main.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.argument("catalog", type=click.Path(exists=True, dir_okay=False))
@click.argument("grammar", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="Run configuration JSON; omitted fields use defaults.")
@click.option("--seed", type=int, default=None, help="Override the configured RNG seed.")
@click.option("--epochs", type=int, default=None, help="Override the search epoch budget.")
@click.option("--weights", callback=_parse_weights, default=None, metavar="L,C,R",
              help="Reward weights as latency,cost,resilience.")
@click.option("--initial-topology", type=click.Path(exists=True, dir_okay=False),
              help="Start the search from this topology instead of an empty graph.")
@click.option("--out", type=click.Path(file_okay=False), default="out",
              show_default=True, help="Directory for run artifacts.")
@server_option
def run(model, catalog, grammar, config_path, seed, epochs, weights,
        initial_topology, out, server):
    """Synthesize a platform for MODEL on CATALOG modules using GRAMMAR."""
    payload = {
        "model": _read_json(model),
        "catalog": _read_json(catalog),
        "grammar": _read_text(grammar),
        "config": _config_payload(config_path, epochs, weights),
        "seed": seed,
    }
    if initial_topology:
        payload["initial_topology"] = _read_json(initial_topology)
    with _client(server) as client:
        data = _post(client, "/runs", payload)
    _write_artifacts(data["artifacts"], out)
    _echo_summary(data["summary"])
    click.echo(f"artifacts: {out}")
    if not data["feasible"]:
        sys.exit(NO_FEASIBLE)


@main.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.argument("catalog", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the configured RNG seed.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the allocation JSON here instead of stdout.")
@server_option
def allocate(model, catalog, config_path, seed, out, server):
    """Pick module counts and assign MODEL's processes to them (no topology)."""
    payload = {
        "model": _read_json(model),
        "catalog": _read_json(catalog),
        "config": _config_payload(config_path),
        "seed": seed,
    }
    with _client(server) as client:
        data = _post(client, "/allocations", payload)
    text = json.dumps(data["allocation"], indent=2, sort_keys=True) + "\n"
    if out:
        _write_text(Path(out), text)
    else:
        click.echo(text, nl=False)
    if not data["feasible"]:
        click.echo("allocation is infeasible", err=True)
        sys.exit(NO_FEASIBLE)


@main.command()
@click.argument("topology", type=click.Path(exists=True, dir_okay=False))
@click.argument("allocation", type=click.Path(exists=True, dir_okay=False))
@click.argument("mapping", type=click.Path(exists=True, dir_okay=False))
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.argument("catalog", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the report JSON here instead of stdout.")
@server_option
def evaluate(topology, allocation, mapping, model, catalog, config_path, out, server):
    """Score one mapped TOPOLOGY; exits 2 if any hard gate fails."""
    payload = {
        "topology": _read_json(topology),
        "allocation": _read_json(allocation),
        "mapping": _read_json(mapping),
        "model": _read_json(model),
        "catalog": _read_json(catalog),
        "config": _config_payload(config_path),
    }
    with _client(server) as client:
        data = _post(client, "/evaluations", payload)
    text = json.dumps(data["report"], indent=2, sort_keys=True) + "\n"
    if out:
        _write_text(Path(out), text)
    else:
        click.echo(text, nl=False)
    if not all(data["report"]["gates"].values()):
        sys.exit(NO_FEASIBLE)


@main.command()
@click.argument("tables", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the merged CSV here instead of stdout.")
def compare(tables, out):
    """Merge comparison TABLES from several runs, renumbering candidates."""
    texts = [_read_text(p) for p in tables]
    try:
        merged = merge_comparisons(texts)
    except NetgapError as exc:
        raise click.ClickException(str(exc))
    if out:
        _write_text(Path(out), merged)
    else:
        click.echo(merged, nl=False)


@main.command("gen-usecase")
@click.option("--processes", type=int, required=True, help="Total process count.")
@click.option("--messages", type=int, required=True, help="Total message count.")
@click.option("--part", "parts", multiple=True, callback=_parse_parts,
              metavar="NAME:COUNT[:MESSAGES]",
              help="Application part sizing; repeatable. Message counts are "
                   "split over the remaining parts when omitted.")
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the model JSON here instead of stdout.")
@server_option
def gen_usecase(processes, messages, parts, seed, out, server):
    """Generate a synthetic application model."""
    payload = {
        "n_processes": processes,
        "n_messages": messages,
        "parts": parts,
        "seed": seed,
    }
    with _client(server) as client:
        data = _post(client, "/usecases/generate", payload)
    text = json.dumps(data["model"], indent=2, sort_keys=True) + "\n"
    if out:
        _write_text(Path(out), text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.argument("catalog", type=click.Path(exists=True, dir_okay=False))
@click.argument("grammar", type=click.Path(exists=True, dir_okay=False))
@click.option("--runs", type=int, default=6, show_default=True,
              help="Number of runs; run i uses seed base+i.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None,
              help="Base seed; defaults to the configured RNG seed.")
@click.option("--epochs", type=int, default=None, help="Override the search epoch budget.")
@click.option("--weights", callback=_parse_weights, default=None, metavar="L,C,R")
@click.option("--workers", type=int, default=None,
              help="Concurrent runs; capped by NETGAP_THREADS.")
@click.option("--out", type=click.Path(file_okay=False), default="batch-out",
              show_default=True, help="Directory for per-run artifacts and the merged table.")
@server_option
def batch(model, catalog, grammar, runs, config_path, seed, epochs, weights,
          workers, out, server):
    """Run the synthesis RUNS times with stepped seeds and merge the tables."""
    if runs < 1:
        raise click.BadParameter("--runs must be at least 1")
    cfg = _config_payload(config_path, epochs, weights)
    base = seed if seed is not None else (cfg or {}).get("rng_seed", 1)
    payload = {
        "model": _read_json(model),
        "catalog": _read_json(catalog),
        "grammar": _read_text(grammar),
        "config": cfg,
    }

    def one(i: int) -> dict:
        with _client(server) as client:
            return _post(client, "/runs", {**payload, "seed": base + i})

    n_workers = worker_count(workers if workers is not None else runs)
    if n_workers > 1 and runs > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(one, range(runs)))
    else:
        results = [one(i) for i in range(runs)]

    tables = []
    for i, data in enumerate(results):
        run_dir = Path(out) / f"run_{i:03d}"
        _write_artifacts(data["artifacts"], run_dir)
        tables.append(data["artifacts"]["comparison.csv"])
        status = "feasible" if data["feasible"] else "no feasible topology"
        reward = data["summary"].get("best_reward")
        click.echo(f"run_{i:03d}: seed={base + i} {status}"
                   + (f" best_reward={reward:.4f}" if reward is not None else ""))
    _write_text(Path(out) / "comparison.csv", merge_comparisons(tables))
    click.echo(f"merged table: {Path(out) / 'comparison.csv'}")
    if not any(data["feasible"] for data in results):
        sys.exit(NO_FEASIBLE)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Start the HTTP service (requires the optional uvicorn dependency)."""
    try:
        import uvicorn
    except ImportError:
        raise click.ClickException(
            "uvicorn is not installed; install the 'server' extra")
    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
