import numpy as np
import pytest
from helpers import synonym_pair_rows, write_lexicon_files, write_tsv

from sonahunt.embedding import EmbeddingSet, hash_embedder
from sonahunt.errors import (
    EmptyJudgmentsError,
    MissingEmbeddingError,
    MissingTargetError,
    ZeroVectorError,
)
from sonahunt.evaluation import (
    LabeledDataset,
    LabeledItem,
    UnlabeledEvalConfig,
    dedup_hits,
    dedup_to_words,
    load_labeled_dataset,
    non_estonian,
    run_labeled_eval,
    run_unlabeled_eval,
)
from sonahunt.ground_truth import build_ground_truth, retrievable_relevant_set
from sonahunt.index import (
    BruteForceSearcher,
    HnswParams,
    IndexedPoint,
    Payload,
    SearchHit,
    build_index,
)
from sonahunt.lexicon import filter_eligible_queries, load_lexicon
from sonahunt.metrics import QueryJudgment, RankedResult, aggregate

DIM = 24
SEED = 5


def hits_for(words_scores):
    return [
        SearchHit(payload=Payload(definition_id=i, word_id=w, language="et"), score=s)
        for i, (w, s) in enumerate(words_scores)
    ]


class TestDedup:
    def test_repeated_word_collapses(self):
        hits = hits_for([(1, 0.9), (1, 0.8), (2, 0.7)])
        assert [h.payload.word_id for h in dedup_hits(hits, 10)] == [1, 2]

    def test_truncation(self):
        hits = hits_for([(w, 1.0 - w / 100) for w in range(120)])
        ranked = dedup_to_words(hits, 100, query_id=7)
        assert len(ranked.word_ids) == 100
        assert ranked.query_id == 7

    def test_distinct_hits_preserved(self):
        hits = hits_for([(3, 0.9), (1, 0.8), (2, 0.7)])
        assert [h.payload.word_id for h in dedup_hits(hits, 10)] == [3, 1, 2]


def build_pair_world(tmp_path, pairs=10, second_language="et"):
    rows = synonym_pair_rows(pairs, second_language=second_language)
    lexicon = load_lexicon(*write_lexicon_files(tmp_path, *rows))
    entries = {
        d: hash_embedder(entry.text, DIM, SEED) for d, entry in lexicon.definitions.items()
    }
    embeddings = EmbeddingSet(dim=DIM, entries=entries, model_name="hash")
    points = [
        IndexedPoint(
            vector=entries[d],
            payload=Payload(definition_id=d, word_id=e.word_id, language=e.language),
        )
        for d, e in sorted(lexicon.definitions.items())
    ]
    index = build_index(points, HnswParams(m=4, ef_construction=16, ef_search=32, seed=3))
    return lexicon, embeddings, index


class TestUnlabeledEval:
    def test_identical_pair_vectors_rank_first(self, tmp_path):
        lexicon, embeddings, index = build_pair_world(tmp_path)
        gt = build_ground_truth(lexicon)
        report = run_unlabeled_eval(index, lexicon, gt, embeddings)
        assert report.query_count == len(lexicon.definitions)
        assert report.median_rank == 1
        assert report.mrr == 1.0
        assert report.acc_at[1] == 1.0
        assert report.map_ == 1.0

    def test_language_filter_restricts_queries(self, tmp_path):
        lexicon, embeddings, index = build_pair_world(tmp_path, second_language="en")
        gt = build_ground_truth(lexicon)
        cfg = UnlabeledEvalConfig(query_language_filter=non_estonian)
        report = run_unlabeled_eval(index, lexicon, gt, embeddings, cfg)
        en_eligible = {
            d for d in filter_eligible_queries(lexicon)
            if lexicon.definitions[d].language != "et"
        }
        assert report.query_count == len(en_eligible)
        judged = {record.query_id for record in report.per_query}
        assert judged == en_eligible

    def test_all_estonian_with_non_et_filter_raises(self, tmp_path):
        lexicon, embeddings, index = build_pair_world(tmp_path)
        gt = build_ground_truth(lexicon)
        cfg = UnlabeledEvalConfig(query_language_filter=non_estonian)
        with pytest.raises(EmptyJudgmentsError):
            run_unlabeled_eval(index, lexicon, gt, embeddings, cfg)

    def test_missing_embedding_aborts(self, tmp_path):
        lexicon, embeddings, index = build_pair_world(tmp_path)
        gt = build_ground_truth(lexicon)
        removed = sorted(embeddings.entries)[0]
        del embeddings.entries[removed]
        with pytest.raises(MissingEmbeddingError) as err:
            run_unlabeled_eval(index, lexicon, gt, embeddings)
        assert err.value.definition_id == removed

    def test_fetch_multiplier_independence(self, tmp_path):
        lexicon, embeddings, index = build_pair_world(tmp_path)
        gt = build_ground_truth(lexicon)
        five = run_unlabeled_eval(index, lexicon, gt, embeddings, UnlabeledEvalConfig(fetch_multiplier=5))
        ten = run_unlabeled_eval(index, lexicon, gt, embeddings, UnlabeledEvalConfig(fetch_multiplier=10))
        assert dict(five.summary_items()) == dict(ten.summary_items())

    def test_matches_brute_force_protocol_replica(self, tmp_path):
        """Independent re-run of the whole protocol on the exact oracle."""
        lexicon, embeddings, index = build_pair_world(tmp_path)
        gt = build_ground_truth(lexicon)
        cfg = UnlabeledEvalConfig(ef_search=len(index))
        report = run_unlabeled_eval(index, lexicon, gt, embeddings, cfg)

        oracle = BruteForceSearcher(index.iter_points())
        judgments, sizes = [], []
        for definition_id in sorted(filter_eligible_queries(lexicon)):
            word_id = lexicon.definitions[definition_id].word_id
            hits = oracle.search(embeddings.entries[definition_id], k=500)
            hits = [h for h in hits if h.payload.definition_id != definition_id]
            ranked = dedup_to_words(hits, 100, query_id=definition_id)
            relevant = retrievable_relevant_set(gt, word_id, definition_id, lexicon)
            judgments.append(QueryJudgment(ranked=ranked, relevant=frozenset(relevant)))
            sizes.append(len(relevant))
        expected = aggregate(judgments, sizes)
        assert dict(report.summary_items()) == dict(expected.summary_items())


def query_embedder(text: str) -> np.ndarray:
    return hash_embedder(text, DIM, SEED)


class TestLabeledEval:
    def make_dataset(self, lexicon, language="et"):
        items = []
        for definition_id, entry in sorted(lexicon.definitions.items())[:4]:
            items.append(
                LabeledItem(
                    target_word_id=entry.word_id,
                    target_definition_id=definition_id,
                    query_language=language,
                    query_text=entry.text,
                )
            )
        return LabeledDataset(items=items)

    def test_exact_match_is_perfect(self, tmp_path):
        # dataset items whose query text equals the target definition text,
        # so the hash embedder reproduces the indexed vector exactly
        lexicon, _, index = build_pair_world(tmp_path)
        gt = build_ground_truth(lexicon)
        dataset = self.make_dataset(lexicon)
        reports = run_labeled_eval(index, lexicon, gt, dataset, query_embedder)
        assert set(reports) == {"et"}
        report = reports["et"]
        assert report.mrr == 1.0
        assert report.map_ == 1.0
        assert report.extras["linked_sense_rate"] >= 0.0

    def test_single_item_without_synonyms_map_one(self, tmp_path):
        words = [(1, "et", "a"), (2, "et", "b")]
        definitions = [(10, 1, "et", "esimene tekst"), (20, 2, "et", "teine tekst")]
        lexicon = load_lexicon(*write_lexicon_files(tmp_path, words, definitions, []))
        points = [
            IndexedPoint(
                vector=hash_embedder(e.text, DIM, SEED),
                payload=Payload(definition_id=d, word_id=e.word_id, language=e.language),
            )
            for d, e in sorted(lexicon.definitions.items())
        ]
        index = build_index(points, HnswParams(m=2, ef_construction=4))
        gt = build_ground_truth(lexicon)
        dataset = LabeledDataset(items=[LabeledItem(1, 10, "en", "esimene tekst")])
        reports = run_labeled_eval(index, lexicon, gt, dataset, query_embedder)
        assert reports["en"].map_ == 1.0
        assert reports["en"].median_rank == 1
        assert reports["en"].extras["linked_sense_rate"] == 1.0

    def test_missing_target_raises(self, tmp_path):
        lexicon, _, index = build_pair_world(tmp_path)
        gt = build_ground_truth(lexicon)
        dataset = LabeledDataset(items=[LabeledItem(999, 999, "et", "tekst")])
        with pytest.raises(MissingTargetError):
            run_labeled_eval(index, lexicon, gt, dataset, query_embedder)

    def test_embedder_failure_skips_and_counts(self, tmp_path):
        lexicon, _, index = build_pair_world(tmp_path)
        gt = build_ground_truth(lexicon)
        dataset = self.make_dataset(lexicon)

        calls = iter(range(len(dataset.items)))

        def flaky(text: str) -> np.ndarray:
            if next(calls) == 0:
                raise ZeroVectorError("synthetic failure")
            return query_embedder(text)

        reports = run_labeled_eval(index, lexicon, gt, dataset, flaky)
        report = reports["et"]
        assert report.query_count == len(dataset.items) - 1
        assert report.extras["skipped_queries"] == 1.0

    def test_groups_by_language(self, tmp_path):
        lexicon, _, index = build_pair_world(tmp_path)
        gt = build_ground_truth(lexicon)
        items = []
        for language in ("et", "en", "ru"):
            items.extend(self.make_dataset(lexicon, language).items)
        reports = run_labeled_eval(index, lexicon, gt, LabeledDataset(items=items), query_embedder)
        assert sorted(reports) == ["en", "et", "ru"]
        for report in reports.values():
            assert report.query_count == 4


class TestLabeledDatasetIo:
    def test_load_and_validate(self, tmp_path):
        lexicon, _, _ = build_pair_world(tmp_path)
        path = write_tsv(tmp_path / "dataset.tsv", [(1, 1001, "en", "some text here")])
        dataset = load_labeled_dataset(path, lexicon)
        assert dataset.items[0].query_language == "en"
        assert dataset.languages() == ["en"]

    def test_unknown_target_detected_at_load(self, tmp_path):
        lexicon, _, _ = build_pair_world(tmp_path)
        path = write_tsv(tmp_path / "dataset.tsv", [(1, 9999, "en", "text")])
        with pytest.raises(MissingTargetError):
            load_labeled_dataset(path, lexicon)
