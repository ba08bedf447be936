"""Command-line client for the experiment service.

Every subcommand goes through the HTTP API; by default the service runs
in-process, and --server points the same commands at a remote instance
(files are then written on the server's filesystem).
"""

from __future__ import annotations

import dataclasses
import sys

import click

from .client import ServiceClient, ServiceError
from .harness import load_spec_file, override_spec


@click.group()
@click.option("--server", default=None, metavar="URL", help="Base URL of a running service; default is in-process.")
@click.pass_context
def main(ctx, server):
    """Surrogate-model optimizer for noisy integer black-box problems."""
    ctx.obj = server


def _client(ctx) -> ServiceClient:
    return ServiceClient(base_url=ctx.obj, timeout=None)


def _fail(message: str, code: int = 1):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@main.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True), help="Experiment spec file.")
@click.option("--out", default=None, type=click.Path(), help="Override the spec's output directory.")
@click.option("--seed", default=None, type=int, help="Override the base seed.")
@click.option("--workers", default=None, type=int, help="Override the worker count.")
@click.option("--budget", default=None, type=int, help="Override the evaluation budget.")
@click.pass_context
def run(ctx, spec_path, out, seed, workers, budget):
    """Run an experiment described by a spec file."""
    try:
        spec = override_spec(load_spec_file(spec_path), out=out, seed=seed, workers=workers, budget=budget)
    except ValueError as exc:
        _fail(str(exc), code=2)
    payload = dataclasses.asdict(spec)
    payload["solvers"] = [dataclasses.asdict(s) for s in spec.solvers]
    try:
        with _client(ctx) as client:
            result = client.run_experiment(payload)
    except (ServiceError, OSError) as exc:
        _fail(str(exc))

    for status in result["runs"]:
        mark = "ok" if status["ok"] else "FAILED"
        line = f"[{mark}] {status['solver']} replication {status['replication']} seed {status['seed']}"
        if status["ok"]:
            line += f" best {status['final_best']:.6g}"
        click.echo(line)
        if status["error"]:
            click.echo(f"    {status['error'].splitlines()[0]}", err=True)
    click.echo(f"summary: {result['summary_csv']}")
    click.echo(f"curves:  {result['curves_csv']}")
    click.echo("final best objective per solver:")
    for row in result["final_summary"]:
        click.echo(
            f"  {row['solver']:<16} median {row['best_median']:.6g} "
            f"(min {row['best_min']:.6g}, max {row['best_max']:.6g}, n={row['n_runs']})"
        )
    for issue in result["issues"]:
        click.echo(f"warning: {issue}", err=True)
    if not result["ok"]:
        sys.exit(1)


@main.command()
@click.option("--dir", "trace_dir", required=True, type=click.Path(exists=True), help="Directory of trace CSVs.")
@click.pass_context
def summarize(ctx, trace_dir):
    """Recompute summary statistics from trace files."""
    try:
        with _client(ctx) as client:
            result = client.summarize(trace_dir)
    except (ServiceError, OSError) as exc:
        _fail(str(exc))
    rows = result["rows"]
    if not rows:
        _fail("no valid traces found", code=2)
    last = max(r["checkpoint"] for r in rows)
    click.echo(f"{'problem':<16} {'solver':<16} {'n':>3} {'best_median':>12} {'best_mean':>12}")
    for row in rows:
        if row["checkpoint"] == last:
            click.echo(
                f"{row['problem']:<16} {row['solver']:<16} {row['n_runs']:>3} "
                f"{row['best_median']:>12.6g} {row['best_mean']:>12.6g}"
            )
    for issue in result["issues"]:
        click.echo(f"warning: {issue}", err=True)
    if result["issues"]:
        sys.exit(1)


@main.command("dump-model")
@click.option("--problem", default="four-city", type=click.Choice(["four-city", "atsp"]))
@click.option("--instance", default=None, type=click.Path(exists=True), help="ATSP instance path (atsp only).")
@click.option("--out", required=True, type=click.Path(), help="Output directory for the dump CSVs.")
@click.option("--resolution", default=0.1, type=float, help="Grid step for the surface sample.")
@click.option("--seed", default=0, type=int)
@click.pass_context
def dump_model(ctx, problem, instance, out, resolution, seed):
    """Fit both model variants on a 2-variable problem and dump them as CSV."""
    request = {
        "problem": problem,
        "instance": instance,
        "out": out,
        "resolution": resolution,
        "seed": seed,
    }
    try:
        with _client(ctx) as client:
            result = client.dump_model(request)
    except (ServiceError, OSError) as exc:
        _fail(str(exc))
    click.echo(f"problem {result['problem']}: {result['grid_rows']} grid rows")
    click.echo(
        f"lattice fit residual: basic {result['max_residual_basic']:.4g}, "
        f"advanced {result['max_residual_advanced']:.4g}"
    )
    for kind, path in result["files"].items():
        click.echo(f"  {kind}: {path}")


@main.command("list-problems")
@click.pass_context
def list_problems(ctx):
    """Show the built-in benchmark problems."""
    try:
        with _client(ctx) as client:
            infos = client.problems()
    except (ServiceError, OSError) as exc:
        _fail(str(exc))
    for info in infos:
        d = info["d"] if info["d"] is not None else "configurable"
        click.echo(f"{info['id']:<14} d={d:<13} {info['description']}")


@main.command("validate-instance")
@click.argument("path", type=click.Path(exists=True))
@click.pass_context
def validate_instance(ctx, path):
    """Check a TSPLIB ATSP file against the supported subset."""
    try:
        with _client(ctx) as client:
            result = client.validate_instance(path=path)
    except (ServiceError, OSError) as exc:
        _fail(str(exc))
    if not result["ok"]:
        _fail(result["error"], code=2)
    click.echo(f"ok: {result['dimension']} cities, {result['forbidden_entries']} forbidden entries")
    click.echo(f"sha256: {result['checksum']}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(host, port):
    """Run the experiment service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
