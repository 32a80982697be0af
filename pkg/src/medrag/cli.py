"""Command-line entry points: corpus ingestion, query debugging, index
management, batch evaluation, and the HTTP server."""

from __future__ import annotations

import time
from pathlib import Path

import click

from medrag import corpus as corpus_store
from medrag import index as search_index
from medrag.api import create_app
from medrag.config import Config, build_gateway, load_config
from medrag.evaluation import evaluate_to_dir
from medrag.pipeline import Pipeline
from medrag.prompts import load_templates
from medrag.querylang import ParseError, format_tree, parse


@click.group()
def main():
    """Search and question answering over a PubMed-style corpus."""


def _fail_on_parse_error(source: str, error: ParseError):
    caret = " " * error.position + "^"
    click.echo(source, err=True)
    click.echo(caret, err=True)
    raise click.ClickException(f"parse error at {error.position}: {error.message}")


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--report", type=click.Path(dir_okay=False), default=None,
              help="Where to write the rejected-line report.")
def ingest(path, report):
    """Validate a corpus file and report accepted/rejected line counts."""
    try:
        loaded = corpus_store.ingest(path)
    except corpus_store.IngestError as error:
        raise click.ClickException(str(error)) from error
    click.echo(f"accepted {len(loaded)} document(s), rejected {len(loaded.rejects)} line(s)")
    if report is not None:
        corpus_store.write_rejects_report(loaded, report)
        click.echo(f"rejects report written to {report}")


@main.command("parse-query")
@click.argument("query")
def parse_query(query):
    """Print the parsed form of a query string."""
    try:
        ast = parse(query)
    except ParseError as error:
        _fail_on_parse_error(query, error)
    click.echo(format_tree(ast))


@main.group()
def index():
    """Build and query index snapshots."""


@index.command("build")
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("out", type=click.Path(dir_okay=False))
def index_build(corpus_path, out):
    """Index a corpus file and write the snapshot to OUT."""
    loaded = corpus_store.ingest(corpus_path)
    built = search_index.build(loaded)
    built.save(out)
    click.echo(f"indexed {len(loaded)} document(s) into {out}")


@index.command("search")
@click.argument("snapshot", type=click.Path(exists=True, dir_okay=False))
@click.argument("query")
@click.option("--top-k", default=50, show_default=True, type=click.IntRange(1, 200))
def index_search(snapshot, query, top_k):
    """Search a snapshot; prints pmid and score, best first."""
    try:
        ast = parse(query)
    except ParseError as error:
        _fail_on_parse_error(query, error)
    loaded = search_index.load(snapshot)
    for hit in loaded.search(ast, top_k):
        click.echo(f"{hit.pmid}\t{hit.score:.6f}")


def build_runtime(
    corpus_path: str, index_path: str | None, config_path: str | None
) -> tuple[Pipeline, Config]:
    """Assemble the pipeline the serve and eval commands share."""
    config = load_config(config_path)
    loaded_corpus = corpus_store.ingest(corpus_path)
    if index_path is not None:
        loaded_index = search_index.load(index_path)
        known = {document.pmid for document in loaded_corpus}
        missing = set(loaded_index.pmids) - known
        if missing:
            raise click.ClickException(
                f"index and corpus disagree: {len(missing)} indexed pmid(s) "
                f"missing from the corpus, e.g. {sorted(missing)[:3]}"
            )
    else:
        loaded_index = search_index.build(loaded_corpus)
    templates_dir = Path(config.templates_dir) if config.templates_dir else None
    pipeline = Pipeline(
        corpus=loaded_corpus,
        index=loaded_index,
        gateway=build_gateway(config),
        templates=load_templates(templates_dir),
        config=config,
        # frozen clock keeps stub-backed traces byte-reproducible
        clock=(lambda: 0.0) if config.backend == "stub" else time.monotonic,
    )
    return pipeline, config


@main.command()
@click.argument("questions", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--index", "index_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
def eval(questions, out, corpus_path, index_path, config_path):
    """Run the batch evaluation and write predictions plus a TSV report."""
    pipeline, _ = build_runtime(corpus_path, index_path, config_path)
    try:
        report = evaluate_to_dir(questions, out, pipeline)
    except ValueError as error:
        raise click.ClickException(str(error)) from error
    click.echo(f"evaluated {len(report.rows)} question(s)")
    click.echo(f"mean doc F1 {report.mean_of('doc_f1'):.4f}, "
               f"mean snippet F1 {report.mean_of('snippet_f1'):.4f}")
    click.echo(f"wrote {Path(out) / 'predictions.json'} and {Path(out) / 'report.tsv'}")


@main.command()
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--index", "index_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--bind", default="127.0.0.1:8080", show_default=True,
              help="host:port to listen on.")
@click.option("--frontend", "frontend_dir", default="frontend/dist",
              show_default=True, help="Static UI directory (skipped if absent).")
def serve(corpus_path, index_path, config_path, bind, frontend_dir):
    """Serve the HTTP API (and the UI, when built) until interrupted."""
    import uvicorn

    host, _, port_text = bind.rpartition(":")
    if not host or not port_text.isdigit():
        raise click.ClickException(f"--bind must look like host:port, got {bind!r}")
    pipeline, config = build_runtime(corpus_path, index_path, config_path)
    app = create_app(pipeline, backend_name=config.backend, frontend_dir=frontend_dir)
    click.echo(f"serving {len(pipeline.corpus)} document(s) on http://{bind}")
    uvicorn.run(app, host=host, port=int(port_text), log_level="warning")
