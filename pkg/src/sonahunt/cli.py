"""Operator command line.

One binary, subcommand style. Exit codes: 0 success, 1 usage error,
2 data error (malformed or inconsistent input files). Every command
echoes its effective settings in a ``#`` header line so reported numbers
are reproducible.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import embedding as emb
from . import evaluation as ev
from . import lexicon as lex
from .errors import DataError
from .ground_truth import build_ground_truth
from .index import (
    HnswParams,
    IndexedPoint,
    Payload,
    build_index,
    language_filter,
    load_index,
    search,
    serialize_index,
)
from .index.kernels import ACTIVE_KERNEL_NAME
from .metrics import EvalReport

INDEX_FILENAME = "index.hnsw"
WORD_VECTORS_FILENAME = "word-vectors.txt"


@click.group()
def cli() -> None:
    """Reverse-dictionary search engine: ingest, embed, index, search, evaluate, serve."""


def _store_path(lexicon_dir: str) -> Path:
    return Path(lexicon_dir) / lex.STORE_FILENAME


def _open_lexicon(lexicon_dir: str) -> lex.Lexicon:
    store = _store_path(lexicon_dir)
    if not store.exists():
        raise DataError(f"no lexicon store at {store}; run 'sonahunt ingest' first")
    return lex.open_lexicon(store)


def _print_stats(stats: lex.LexiconStats, warnings: lex.LoadWarnings) -> None:
    click.echo(f"words={stats.word_count}")
    for language, count in stats.definition_count_by_language.items():
        click.echo(f"definitions[{language}]={count}")
    click.echo(f"raw_synonyms={stats.raw_synonym_count}")
    click.echo(f"mirrored_synonyms={stats.mirrored_synonym_count}")
    click.echo(f"avg_synonyms_per_word={stats.avg_synonyms_per_word:.4f}")
    click.echo(f"dropped_self_synonyms={warnings.self_synonyms}")
    click.echo(f"dropped_non_word_relations={warnings.non_word_relations}")
    click.echo(f"dropped_duplicate_relations={warnings.duplicate_relations}")


@cli.command()
@click.option("--words", "words_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--definitions", "definitions_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--synonyms", "synonyms_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def ingest(words_path: str, definitions_path: str, synonyms_path: str, out_dir: str) -> None:
    """Load the record files and persist the lexicon store."""
    click.echo(f"# ingest words={words_path} definitions={definitions_path} synonyms={synonyms_path}")
    lexicon = lex.load_lexicon(words_path, definitions_path, synonyms_path)
    store = _store_path(out_dir)
    lex.save_lexicon(lexicon, store)
    _print_stats(lex.lexicon_stats(lexicon), lexicon.warnings)
    click.echo(f"store={store}")


@cli.command()
@click.option("--lexicon", "lexicon_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--word-vectors", "word_vectors_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--hash-dim", type=int, default=None, help="Use the deterministic hash embedder at this dimension.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def embed(lexicon_dir: str, word_vectors_path: str | None, hash_dim: int | None,
          seed: int, out_path: str) -> None:
    """Produce an embedding file covering every definition.

    Either averages word vectors over whitespace tokens (definitions whose
    tokens are all out of vocabulary fall back to a hash of their id and
    are listed in a `.oov` sidecar), or hashes the definition text
    deterministically (fixture/test mode).
    """
    if (word_vectors_path is None) == (hash_dim is None):
        raise click.UsageError("provide exactly one of --word-vectors and --hash-dim")
    lexicon = _open_lexicon(lexicon_dir)
    entries: dict[int, np.ndarray] = {}
    oov_ids: list[int] = []
    if hash_dim is not None:
        if hash_dim < 2:
            raise click.UsageError("--hash-dim must be >= 2")
        click.echo(f"# embed mode=hash dim={hash_dim} seed={seed}")
        for definition_id, entry in lexicon.definitions.items():
            entries[definition_id] = emb.hash_embedder(entry.text, hash_dim, seed)
        dim = hash_dim
        model_name = f"hash-{hash_dim}-{seed}"
    else:
        table = emb.load_word_vector_table(word_vectors_path)
        click.echo(f"# embed mode=average table={word_vectors_path} dim={table.dim} seed={seed}")
        for definition_id, entry in lexicon.definitions.items():
            try:
                entries[definition_id] = emb.embed_average(entry.text, table)
            except emb.AllTokensOutOfVocabularyError:
                entries[definition_id] = emb.hash_embedder(str(definition_id), table.dim, seed)
                oov_ids.append(definition_id)
        dim = table.dim
        model_name = Path(word_vectors_path).stem
    embeddings = emb.EmbeddingSet(dim=dim, entries=entries, model_name=model_name)
    emb.write_embedding_set(embeddings, out_path)
    click.echo(f"embedded={len(entries)} dim={dim} out={out_path}")
    if word_vectors_path is not None:
        sidecar = Path(out_path).with_name(Path(out_path).name + ".oov")
        sidecar.write_text("".join(f"{d}\n" for d in sorted(oov_ids)), encoding="utf-8")
        click.echo(f"oov_fallbacks={len(oov_ids)} sidecar={sidecar}")


@cli.command("index-build")
@click.option("--embeddings", "embeddings_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--lexicon", "lexicon_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--m", type=int, default=16, show_default=True)
@click.option("--ef-construction", type=int, default=200, show_default=True)
@click.option("--ef-search", type=int, default=128, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def index_build(embeddings_path: str, lexicon_dir: str, m: int, ef_construction: int,
                ef_search: int, seed: int, out_path: str) -> None:
    """Build and serialize the vector index from an embedding file."""
    click.echo(
        f"# index-build m={m} ef-construction={ef_construction} ef-search={ef_search} "
        f"seed={seed} kernel={ACTIVE_KERNEL_NAME}"
    )
    lexicon = _open_lexicon(lexicon_dir)
    embeddings = emb.load_embedding_set(embeddings_path)
    points = []
    for definition_id in sorted(embeddings.entries):
        entry = lexicon.definition(definition_id)
        if entry is None:
            raise DataError(f"embedding for unknown definition_id {definition_id}")
        vector = emb.normalize(embeddings.entries[definition_id])
        payload = Payload(definition_id=definition_id, word_id=entry.word_id, language=entry.language)
        points.append(IndexedPoint(vector=vector, payload=payload))
    try:
        params = HnswParams(m=m, ef_construction=ef_construction, ef_search=ef_search, seed=seed)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    index = build_index(points, params)
    serialize_index(index, out_path)
    click.echo(f"points={len(index)} dim={index.dim} levels={index.max_level + 1} out={out_path}")


def _read_vector_file(path: str) -> np.ndarray:
    try:
        values = [float(x) for x in Path(path).read_text(encoding="utf-8").split()]
    except ValueError:
        raise DataError(f"{path}: vector file must contain whitespace-separated decimals") from None
    if not values:
        raise DataError(f"{path}: empty vector file")
    return np.asarray(values, dtype=np.float32)


@cli.command("search")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--lexicon", "lexicon_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--query", type=str, default=None, help="Description text (needs --word-vectors).")
@click.option("--vector-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="File of whitespace-separated floats to use as the query vector.")
@click.option("--word-vectors", "word_vectors_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--lang", type=str, default=None, help="Restrict candidate definitions to this language.")
@click.option("--limit", type=int, default=10, show_default=True)
def search_cmd(index_path: str, lexicon_dir: str, query: str | None, vector_file: str | None,
               word_vectors_path: str | None, lang: str | None, limit: int) -> None:
    """Query the index and print ranked words."""
    if (query is None) == (vector_file is None):
        raise click.UsageError("provide exactly one of --query and --vector-file")
    if limit < 1:
        raise click.UsageError("--limit must be >= 1")
    click.echo(f"# search limit={limit} lang={lang or 'any'} kernel={ACTIVE_KERNEL_NAME}")
    lexicon = _open_lexicon(lexicon_dir)
    index = load_index(index_path)
    if query is not None:
        if word_vectors_path is None:
            raise click.UsageError("--query needs --word-vectors for the averaging embedder")
        table = emb.load_word_vector_table(word_vectors_path)
        vector = emb.embed_average(query, table)
    else:
        vector = emb.normalize(_read_vector_file(vector_file))
    predicate = language_filter(lang) if lang else None
    hits = ev.dedup_hits(search(index, vector, k=limit * 5, filter=predicate), limit)
    for rank, hit in enumerate(hits, start=1):
        word = lexicon.words[hit.payload.word_id]
        definition = lexicon.definitions[hit.payload.definition_id]
        click.echo(f"{rank}\t{word.surface}\t{hit.score:.4f}\t{definition.text}")


def _echo_report(name: str, report: EvalReport) -> None:
    click.echo(f"[{name}]")
    for line in report.to_text().strip().splitlines():
        click.echo(f"  {line}")


@cli.command("eval-unlabeled")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--lexicon", "lexicon_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--embeddings", "embeddings_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--n", "candidates", type=int, default=100, show_default=True,
              help="Output cap after word deduplication.")
@click.option("--fetch-multiplier", type=int, default=5, show_default=True)
@click.option("--queries-non-et", is_flag=True, help="Only non-Estonian definitions as queries.")
@click.option("--ef-search", type=int, default=None)
@click.option("--report", "report_base", required=True, type=click.Path(dir_okay=False))
def eval_unlabeled(index_path: str, lexicon_dir: str, embeddings_path: str, candidates: int,
                   fetch_multiplier: int, queries_non_et: bool, ef_search: int | None,
                   report_base: str) -> None:
    """Run the synonymy-based protocol: every eligible definition queries the index."""
    click.echo(
        f"# eval-unlabeled n={candidates} fetch-multiplier={fetch_multiplier} "
        f"queries-non-et={queries_non_et} ef-search={ef_search or 'default'} kernel={ACTIVE_KERNEL_NAME}"
    )
    lexicon = _open_lexicon(lexicon_dir)
    index = load_index(index_path)
    embeddings = emb.load_embedding_set(embeddings_path)
    gt = build_ground_truth(lexicon)
    cfg = ev.UnlabeledEvalConfig(
        candidates_to_retrieve=candidates,
        fetch_multiplier=fetch_multiplier,
        query_language_filter=ev.non_estonian if queries_non_et else None,
        ef_search=ef_search,
    )
    report = ev.run_unlabeled_eval(index, lexicon, gt, embeddings, cfg)
    text_path, json_path = report.write(report_base)
    _echo_report("unlabeled", report)
    click.echo(f"report={text_path} json={json_path}")


@cli.command("eval-labeled")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--lexicon", "lexicon_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--word-vectors", "word_vectors_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--n", "candidates", type=int, default=100, show_default=True)
@click.option("--fetch-multiplier", type=int, default=5, show_default=True)
@click.option("--report", "report_base", required=True, type=click.Path(dir_okay=False))
def eval_labeled(index_path: str, lexicon_dir: str, dataset_path: str, word_vectors_path: str,
                 candidates: int, fetch_multiplier: int, report_base: str) -> None:
    """Evaluate external definition->word queries, one report per query language."""
    click.echo(
        f"# eval-labeled n={candidates} fetch-multiplier={fetch_multiplier} kernel={ACTIVE_KERNEL_NAME}"
    )
    lexicon = _open_lexicon(lexicon_dir)
    index = load_index(index_path)
    table = emb.load_word_vector_table(word_vectors_path)
    dataset = ev.load_labeled_dataset(dataset_path, lexicon)
    gt = build_ground_truth(lexicon)
    cfg = ev.UnlabeledEvalConfig(candidates_to_retrieve=candidates, fetch_multiplier=fetch_multiplier)
    reports = ev.run_labeled_eval(
        index, lexicon, gt, dataset, lambda text: emb.embed_average(text, table), cfg
    )
    base = Path(report_base)
    for language, report in reports.items():
        text_path, json_path = report.write(base.with_name(f"{base.name}.{language}"))
        _echo_report(f"labeled:{language}", report)
        click.echo(f"report={text_path} json={json_path}")


@cli.command()
@click.option("--lexicon", "lexicon_dir", required=True, type=click.Path(exists=True, file_okay=False))
def stats(lexicon_dir: str) -> None:
    """Print lexicon statistics from the persisted store."""
    lexicon = _open_lexicon(lexicon_dir)
    _print_stats(lex.lexicon_stats(lexicon), lexicon.warnings)


@cli.command()
@click.option("--index", "index_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--lexicon", "lexicon_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--word-vectors", "word_vectors_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--data-dir", envvar="SONAHUNT_DATA_DIR", type=click.Path(file_okay=False),
              help="Directory holding index.hnsw, lexicon.sqlite and optional word-vectors.txt.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", envvar="SONAHUNT_PORT", type=int, default=8080, show_default=True)
def serve(index_path: str | None, lexicon_dir: str | None, word_vectors_path: str | None,
          data_dir: str | None, host: str, port: int) -> None:
    """Serve the HTTP search API."""
    import uvicorn

    from .service import ServiceState, create_app

    if data_dir is not None:
        index_path = index_path or str(Path(data_dir) / INDEX_FILENAME)
        lexicon_dir = lexicon_dir or data_dir
        candidate = Path(data_dir) / WORD_VECTORS_FILENAME
        if word_vectors_path is None and candidate.exists():
            word_vectors_path = str(candidate)
    if index_path is None or lexicon_dir is None:
        raise click.UsageError("provide --index and --lexicon, or --data-dir / SONAHUNT_DATA_DIR")

    click.echo(f"# serve host={host} port={port} index={index_path} kernel={ACTIVE_KERNEL_NAME}")
    state = ServiceState()
    app = create_app(state)
    state.lexicon = _open_lexicon(lexicon_dir)
    state.index = load_index(index_path)
    if word_vectors_path is not None:
        state.word_table = emb.load_word_vector_table(word_vectors_path)
    state.ready = True
    click.echo(f"ready points={len(state.index)} dim={state.index.dim}")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        raise click.ClickException(f"cannot bind {host}:{port}: {exc}") from None
    except SystemExit as exc:
        # uvicorn exits 3 on startup failure (e.g. port already in use)
        if exc.code:
            raise click.ClickException(f"server failed to start on {host}:{port}") from None


def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except DataError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
