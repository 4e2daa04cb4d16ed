"""Thin command-line client for the scenario service.

Each subcommand reads the config file, forwards it to the HTTP API and maps
the response onto exit codes (0 ok, 1 config error, 2 admissibility loss,
3 solver failure).  By default requests go to the in-process application via
an ASGI transport (no server needed); --server targets a running instance.
"""

from __future__ import annotations

import asyncio
import json
import sys

import click
import httpx


def _post(path, payload, server):
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(path, json=payload)
    from .service import app

    async def go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://bilayerwaves.local",
            timeout=None,
        ) as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _run_mode(mode, config_path, out, overrides, server):
    try:
        with open(config_path) as fh:
            config_text = fh.read()
    except OSError as err:
        click.echo(f"error: cannot read config: {err}", err=True)
        sys.exit(1)
    payload = {
        "config_text": config_text,
        "overrides": list(overrides),
        "mode": mode,
    }
    if out:
        payload["out_dir"] = out
    response = _post("/api/scenario", payload, server)
    if response.status_code == 400:
        detail = response.json().get("detail", {})
        click.echo("configuration rejected:", err=True)
        for violation in detail.get("violations", []):
            line = violation.get("line")
            where = f"line {line}: " if line is not None else ""
            click.echo(f"  {where}{violation['key']}: {violation['error']}",
                       err=True)
        sys.exit(1)
    if response.status_code != 200:
        click.echo(f"service error ({response.status_code}): {response.text}",
                   err=True)
        sys.exit(3)
    body = response.json()
    manifest = body["manifest"]
    click.echo(f"status: {body['status']}")
    if manifest.get("error"):
        click.echo(f"error: {manifest['error']['message']}")
        if manifest["error"].get("condition"):
            click.echo(f"condition: {manifest['error']['condition']}")
    if manifest.get("results"):
        click.echo(json.dumps(manifest["results"], indent=2))
    click.echo(f"artifacts: {[a['name'] for a in manifest['artifacts']]}")
    sys.exit(body["exit_code"])


def _mode_command(mode, help_text):
    @click.command(name=mode, help=help_text)
    @click.option("--config", "config_path", required=True,
                  type=click.Path(), help="Scenario config file.")
    @click.option("--out", default=None, type=click.Path(),
                  help="Output directory (overrides [run] out).")
    @click.option("--override", "overrides", multiple=True,
                  metavar="SECTION.KEY=VALUE",
                  help="Config override; repeatable.")
    @click.option("--server", default=None,
                  help="URL of a running service; default runs in-process.")
    def command(config_path, out, overrides, server):
        _run_mode(mode, config_path, out, overrides, server)

    return command


@click.group()
def main():
    """Two-layer internal-wave model runner and validation harness."""


main.add_command(_mode_command(
    "simulate", "Integrate one model and export monitors/snapshots."))
main.add_command(_mode_command(
    "order", "Residual-order sweep between two models."))
main.add_command(_mode_command(
    "dispersion", "Phase-speed table: formula vs assembled operator."))
main.add_command(_mode_command(
    "compare", "Trajectory comparison between a model pair."))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("bilayerwaves.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
