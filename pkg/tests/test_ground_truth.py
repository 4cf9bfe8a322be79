import pytest
from helpers import write_lexicon_files

from sonahunt.errors import DefinitionWordMismatchError, UnknownWordError
from sonahunt.ground_truth import (
    build_ground_truth,
    dump_ground_truth,
    retrievable_relevant_set,
)
from sonahunt.lexicon import filter_eligible_queries, load_lexicon


def make_lexicon(tmp_path, words, definitions, synonyms):
    return load_lexicon(*write_lexicon_files(tmp_path, words, definitions, synonyms))


@pytest.fixture
def star_lexicon(tmp_path):
    """A linked to B and C; D isolated; A has two definitions."""
    words = [(1, "et", "a"), (2, "et", "b"), (3, "et", "c"), (4, "et", "d")]
    definitions = [
        (10, 1, "et", "a first"),
        (11, 1, "et", "a second"),
        (20, 2, "et", "b only"),
        (30, 3, "et", "c only"),
        (40, 4, "et", "d only"),
    ]
    return make_lexicon(tmp_path, words, definitions, [(1, 2), (1, 3)])


class TestBuildGroundTruth:
    def test_no_synonyms_means_self_only(self, star_lexicon):
        gt = build_ground_truth(star_lexicon)
        assert gt.relevant[4] == {4}

    def test_hand_enumeration(self, star_lexicon):
        gt = build_ground_truth(star_lexicon)
        assert gt.relevant[1] == {1, 2, 3}
        assert gt.relevant[2] == {1, 2}
        assert gt.relevant[3] == {1, 3}

    def test_membership_symmetry(self, star_lexicon):
        gt = build_ground_truth(star_lexicon)
        for word, relevant in gt.relevant.items():
            for other in relevant:
                assert word in gt.relevant[other]

    def test_size_is_one_plus_degree(self, star_lexicon):
        gt = build_ground_truth(star_lexicon)
        for word in star_lexicon.words:
            degree = len(star_lexicon.synonyms_of.get(word, ()))
            assert len(gt.relevant[word]) == 1 + degree


class TestRetrievableRelevantSet:
    def test_self_excluded_without_other_definition(self, tmp_path):
        # query word has 1 definition and 1 synonym with 1 definition
        words = [(1, "et", "a"), (2, "et", "b")]
        definitions = [(10, 1, "et", "da"), (20, 2, "et", "db")]
        lexicon = make_lexicon(tmp_path, words, definitions, [(1, 2)])
        gt = build_ground_truth(lexicon)
        assert retrievable_relevant_set(gt, 1, 10, lexicon) == {2}

    def test_multi_definition_word_keeps_itself(self, tmp_path):
        words = [(1, "et", "a")]
        definitions = [(10, 1, "et", "da"), (11, 1, "et", "da2")]
        lexicon = make_lexicon(tmp_path, words, definitions, [])
        gt = build_ground_truth(lexicon)
        assert retrievable_relevant_set(gt, 1, 10, lexicon) == {1}

    def test_union_of_both_branches(self, tmp_path):
        words = [(1, "et", "a"), (2, "et", "b")]
        definitions = [(10, 1, "et", "da"), (11, 1, "et", "da2"), (20, 2, "et", "db")]
        lexicon = make_lexicon(tmp_path, words, definitions, [(1, 2)])
        gt = build_ground_truth(lexicon)
        assert retrievable_relevant_set(gt, 1, 10, lexicon) == {1, 2}

    def test_unknown_word(self, star_lexicon):
        gt = build_ground_truth(star_lexicon)
        with pytest.raises(UnknownWordError):
            retrievable_relevant_set(gt, 999, 10, star_lexicon)

    def test_definition_word_mismatch(self, star_lexicon):
        gt = build_ground_truth(star_lexicon)
        with pytest.raises(DefinitionWordMismatchError):
            retrievable_relevant_set(gt, 2, 10, star_lexicon)

    def test_non_empty_exactly_for_eligible_definitions(self, star_lexicon):
        gt = build_ground_truth(star_lexicon)
        eligible = filter_eligible_queries(star_lexicon)
        for definition_id, entry in star_lexicon.definitions.items():
            retrievable = retrievable_relevant_set(gt, entry.word_id, definition_id, star_lexicon)
            assert bool(retrievable) == (definition_id in eligible)


def test_dump_format(tmp_path, star_lexicon):
    gt = build_ground_truth(star_lexicon)
    path = tmp_path / "gt.tsv"
    dump_ground_truth(gt, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "1\t1,2,3"
    assert lines[3] == "4\t4"
