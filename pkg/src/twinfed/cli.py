"""Thin command-line client for the experiment service.

By default the CLI talks to an in-process instance of the FastAPI app;
pass --server to target a running deployment instead. Exit codes:
0 success, 2 config error, 3 numeric failure.
"""
from __future__ import annotations

import json
import sys

import click
import yaml

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            tree = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        click.echo(f"error: config file not found: {path}", err=True)
        sys.exit(EXIT_CONFIG)
    except yaml.YAMLError as exc:
        click.echo(f"error: cannot parse {path}: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if not isinstance(tree, dict):
        click.echo(f"error: {path}: config root must be a mapping", err=True)
        sys.exit(EXIT_CONFIG)
    return tree


def _post(server: str | None, endpoint: str, payload: dict) -> dict:
    with _client(server) as client:
        resp = client.post(endpoint, json=payload)
    if resp.status_code == 422:
        detail = resp.json().get("detail", resp.text)
        click.echo(f"config error: {detail}", err=True)
        sys.exit(EXIT_CONFIG)
    if resp.status_code >= 500:
        detail = resp.json().get("detail", resp.text) if resp.content else resp.text
        click.echo(f"error: {detail}", err=True)
        sys.exit(EXIT_NUMERIC)
    resp.raise_for_status()
    return resp.json()


@click.group()
def main():
    """Run federated digital-twin anomaly detection experiments."""


@main.command()
@click.argument("config", type=click.Path())
@click.option("--server", default=None, help="Base URL of a running service.")
@click.option("--output", default=None, help="Output root override.")
def run(config, server, output):
    """Run every strategy in CONFIG and write a result bundle."""
    payload = {"config": _load_config(config), "output_dir": output}
    body = _post(server, "/experiments/run", payload)
    for name, summary in body["summaries"].items():
        rounds = summary["rounds_to_target"]
        shown = rounds if rounds is not None else f">{summary['rounds_run']}"
        click.echo(
            f"{name:8s} rounds_to_target={shown} "
            f"final_accuracy={summary['final_metrics']['accuracy']:.4f}"
        )
    click.echo(f"results written to {body['output_dir']}")


@main.command()
@click.argument("config", type=click.Path())
@click.option("--param", default=None, help="Parameter to sweep.")
@click.option("--values", default=None, help="Comma-separated value list.")
@click.option("--seeds", default=None, type=int, help="Seeds per cell.")
@click.option("--server", default=None, help="Base URL of a running service.")
@click.option("--output", default=None, help="Output root override.")
def sweep(config, param, values, seeds, server, output):
    """Sweep one parameter across values and seeds."""
    tree = _load_config(config)
    sweep_tree = dict(tree.get("sweep") or {})
    if param:
        sweep_tree["param"] = param
    if values:
        sweep_tree["values"] = [yaml.safe_load(v) for v in values.split(",")]
    if seeds:
        sweep_tree["seeds"] = seeds
    if sweep_tree:
        tree["sweep"] = sweep_tree
    body = _post(server, "/experiments/sweep", {"config": tree, "output_dir": output})
    for cell in body["cells"]:
        click.echo(
            f"{body['param']}={cell['value']}: median_rounds={cell['median_rounds_to_target']} "
            f"reached={cell['reached_fraction']:.0%}"
        )
    click.echo(f"results written to {body['output_dir']}")


@main.command()
@click.argument("config", type=click.Path())
@click.option("--server", default=None, help="Base URL of a running service.")
@click.option("--output", default=None, help="Output root override.")
def align(config, server, output):
    """Compute the real-vs-twin distributional alignment report."""
    payload = {"config": _load_config(config), "output_dir": output}
    body = _post(server, "/alignment", payload)
    click.echo(json.dumps(body["report"], indent=2))
    click.echo(f"results written to {body['output_dir']}")


if __name__ == "__main__":
    main()
