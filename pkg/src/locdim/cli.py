"""Command-line interface.

Every subcommand is a thin client of the HTTP service in `locdim.api`: by
default the app is mounted in process (no server needed); pass --url to
talk to a running instance instead.
"""

import json

import click

from .serialize import canonical_dumps


def _client(url):
    if url:
        import httpx

        return httpx.Client(base_url=url, timeout=3600.0)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .api import app

    return TestClient(app)


def _post(ctx, path, payload):
    with _client(ctx.obj["url"]) as client:
        resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        raise click.ClickException("%s -> %s: %s" % (path, resp.status_code, detail))
    return resp.json()


@click.group()
@click.option("--url", default=None,
              help="Base URL of a running service; default runs in process.")
@click.version_option()
@click.pass_context
def main(ctx, url):
    """Sparse additive sigmoidal network regression toolkit."""
    ctx.obj = {"url": url}


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Experiment configuration JSON.")
@click.option("--full-scale", is_flag=True,
              help="Use the full reference protocol sizes and estimator grids.")
@click.option("--out", "out_path", required=True,
              type=click.Path(dir_okay=False), help="Results JSON path.")
@click.pass_context
def run(ctx, config_path, full_scale, out_path):
    """Run one experiment cell and write a versioned results JSON."""
    with open(config_path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if full_scale:
        payload["full_scale"] = True
    body = _post(ctx, "/experiment/run", payload)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(body["results_json"])
    click.echo("wrote %s" % out_path)


@main.command()
@click.argument("results", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def table(ctx, results):
    """Render a results JSON as a text table (median and IQR columns)."""
    with open(results, encoding="utf-8") as fh:
        doc = json.load(fh)
    body = _post(ctx, "/experiment/render", doc)
    click.echo(body["text"])


@main.command("verify-lemma")
@click.argument("name", required=False, default=None)
@click.option("--R", "scale", default=100.0, show_default=True,
              help="Inner scaling parameter of the construction.")
@click.option("--a", "a", default=1.0, show_default=True,
              help="Half-width of the input cube.")
@click.option("--grid-points", default=2001, show_default=True)
@click.pass_context
def verify_lemma(ctx, name, scale, a, grid_points):
    """Measure a constructive network against its stated sup-norm bound.

    NAME is one of identity, square, mult, relu, trunc, bspline; omit it to
    check all of them.
    """
    from .builders import LEMMA_NAMES

    names = [name] if name else list(LEMMA_NAMES)
    failed = False
    for nm in names:
        body = _post(ctx, "/lemma/verify",
                     {"name": nm, "R": scale, "a": a,
                      "grid_points": grid_points})
        status = "PASS" if body["passed"] else "FAIL"
        failed = failed or not body["passed"]
        click.echo(
            "%-8s R=%-10g measured=%.3e bound=%.3e slack=%.1e "
            "L=%d width=%d %s"
            % (nm, body["R"], body["measured_error"],
               body["theoretical_bound"], body["fp_slack"], body["L"],
               body["width"], status)
        )
    if failed:
        raise click.ClickException("a measured error exceeded its bound")


@main.group()
def oracle():
    """Spot-check serialized objects."""


@oracle.command("eval")
@click.option("--kind", type=click.Choice(["basis", "polytope", "target"]),
              required=True)
@click.option("--doc", "doc_path",
              type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON document (basis or polytope kinds).")
@click.option("--target", default=None,
              help="Target name (target kind): m1, m2, m3, fig2.")
@click.option("--points", "points_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON array of input points.")
@click.pass_context
def oracle_eval(ctx, kind, doc_path, target, points_path):
    """Evaluate a basis function, polytope indicator, or target at points."""
    with open(points_path, encoding="utf-8") as fh:
        points = json.load(fh)
    payload = {"kind": kind, "points": points, "target": target}
    if doc_path is not None:
        with open(doc_path, encoding="utf-8") as fh:
            payload["doc"] = json.load(fh)
    body = _post(ctx, "/oracle/eval", payload)
    click.echo(canonical_dumps(body["values"]))


@main.command()
@click.option("--csv", "csv_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Training data CSV with a header row.")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Fit configuration JSON (columns plus training knobs).")
@click.option("--out", "out_path", default=None,
              type=click.Path(dir_okay=False),
              help="Write the trained network JSON here.")
@click.pass_context
def fit(ctx, csv_path, config_path, out_path):
    """Train a network on CSV data and print the fit report."""
    with open(config_path, encoding="utf-8") as fh:
        payload = json.load(fh)
    with open(csv_path, encoding="utf-8") as fh:
        payload["csv_text"] = fh.read()
    body = _post(ctx, "/fit", payload)
    report = dict(body["report"])
    report["rows_used"] = body["ingest"]["rows_used"]
    report["rows_dropped"] = body["ingest"]["rows_dropped"]
    click.echo(canonical_dumps(report))
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(body["network_json"])
        click.echo("wrote %s" % out_path)


if __name__ == "__main__":
    main()
