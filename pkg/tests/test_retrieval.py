import math

import pytest

from logquest.ranking import LinearModel
from logquest.retrieval import (
    BM25_B,
    BM25_K1,
    DuplicatePassageError,
    InvertedIndex,
    Passage,
    SynonymLexicon,
    bm25,
    build_index,
    extract_features,
    lexeme_classes,
    proper_name_candidates,
    rank_passages,
    stem,
    token_spans,
    tokenize,
)


def make_index(*texts: str, lexicon: SynonymLexicon | None = None) -> InvertedIndex:
    passages = [Passage(f"p{i + 1}", text, []) for i, text in enumerate(texts)]
    return build_index(passages, lexicon)


# -- tokenization ------------------------------------------------------------

def test_tokenize_lowercases_and_splits_punctuation():
    assert tokenize("The Rhine flows through Cologne, Germany.") == [
        "the", "rhine", "flows", "through", "cologne", "germany",
    ]


def test_tokenize_splits_on_underscores_and_hyphens():
    assert tokenize("Baden-Württemberg south_west") == [
        "baden", "württemberg", "south", "west",
    ]


def test_token_spans_report_character_offsets():
    spans = token_spans("Créteil lies near Paris")
    assert spans[0] == ("créteil", 0, 7)
    assert spans[2] == ("near", 13, 17)


def test_proper_names_skip_sentence_initial_capitals():
    names = proper_name_candidates("Berlin is big. The river Spree crosses Berlin.")
    assert "spree" in names
    assert "berlin" in names  # second, mid-sentence occurrence counts
    assert "the" not in names


def test_proper_names_absent_in_lowercase_text():
    assert proper_name_candidates("the river crosses the city") == set()


@pytest.mark.parametrize(
    "token, expected",
    [("rivers", "river"), ("passes", "pass"), ("cities", "citi"), ("is", "is"), ("a", "a")],
)
def test_stem_strips_plural_endings_only(token, expected):
    assert stem(token) == expected


# -- synonym lexicon ---------------------------------------------------------

def test_lexicon_canonicalizes_to_first_member(tmp_path):
    path = tmp_path / "en.syn"
    path.write_text("# writing\nwrote, written, authored\nuk, britain\n")
    lexicon = SynonymLexicon.load(path)
    assert lexicon.canonical("authored") == "wrote"
    assert lexicon.canonical("britain") == "uk"
    assert lexicon.canonical("unrelated") == "unrelated"


def test_lexeme_classes_filter_stopwords_and_merge_synonyms():
    lexicon = SynonymLexicon([["wrote", "authored"]])
    question = lexeme_classes(tokenize("Who wrote the book"), lexicon)
    passage = lexeme_classes(tokenize("He authored this book"), lexicon)
    assert "wrote" in question and "wrote" in passage
    assert "the" not in question


# -- passages and index ------------------------------------------------------

def test_passage_counts_terms():
    passage = Passage("p1", "the cat and the hat", [])
    assert passage.token_count == 5
    assert passage.term_frequency("the") == 2
    assert passage.term_frequency("dog") == 0


def test_index_statistics():
    index = make_index("one two three four", "five six")
    assert index.doc_count == 2
    assert index.avg_len == 3.0
    assert index.df["two"] == 1
    assert index.postings["two"] == [("p1", 1)]
    assert index.lexemes("p2") == {"five", "six"}


def test_index_rejects_duplicate_passage_ids():
    twins = [Passage("p1", "a", []), Passage("p1", "b", [])]
    with pytest.raises(DuplicatePassageError):
        build_index(twins)


def test_empty_index_is_inert():
    index = build_index([])
    assert index.doc_count == 0
    assert bm25(index, ["x"], Passage("q", "x", [])) == 0.0


# -- bm25 --------------------------------------------------------------------

def test_bm25_matches_the_closed_form():
    index = make_index("rhine river", "alps mountain range", "rhine rhine delta")
    passage = index.passages["p3"]
    tf, df, n = 2, 2, 3
    idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
    norm = passage.token_count / index.avg_len
    expected = idf * tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * (1.0 - BM25_B + BM25_B * norm))
    assert bm25(index, ["rhine"], passage) == pytest.approx(expected)


def test_bm25_is_zero_without_overlap():
    index = make_index("rhine river", "alps mountain")
    assert bm25(index, ["danube"], index.passages["p1"]) == 0.0


def test_bm25_rewards_rarity():
    index = make_index("rhine common", "danube common", "elbe common")
    passage = index.passages["p1"]
    assert bm25(index, ["rhine"], passage) > bm25(index, ["common"], passage)


def test_bm25_term_frequency_saturates():
    index = make_index("rhine x", "rhine rhine", "other words")
    single = bm25(index, ["rhine"], index.passages["p1"])
    double = bm25(index, ["rhine"], index.passages["p2"])
    assert double > single
    assert double < 2 * single


def test_bm25_penalizes_length():
    index = make_index("rhine", "rhine plus many extra filler words here")
    short = bm25(index, ["rhine"], index.passages["p1"])
    long = bm25(index, ["rhine"], index.passages["p2"])
    assert short > long


# -- features ----------------------------------------------------------------

def test_extract_features_counts_synonym_bridged_lexemes():
    lexicon = SynonymLexicon([["wrote", "authored"]])
    index = make_index("Goethe authored Faust", lexicon=lexicon)
    fv = extract_features("Who wrote Faust?", index.passages["p1"], index)
    assert fv.matching_lexeme_count == 2  # wrote-class and faust
    assert fv.matching_lexeme_ratio == pytest.approx(1.0)
    assert fv.proper_name_overlap == 1  # Faust, mid-sentence in both
    assert fv.passage_length_log == pytest.approx(math.log(4.0))


def test_extract_features_for_unindexed_passage():
    # passages outside the corpus still score against corpus statistics;
    # an unseen token has df 0 and therefore the largest idf
    index = make_index("some corpus text")
    outside = Passage("x", "rhine flows", [])
    fv = extract_features("Where does the Rhine flow?", outside, index)
    assert fv.matching_lexeme_count >= 1
    idf = math.log(1.0 + 1.5 / 0.5)
    saturation = 2.2 / (1.0 + 1.2 * (0.25 + 0.75 * (2 / 3)))
    assert fv.bm25_score == pytest.approx(idf * saturation)


def test_feature_vector_order_matches_model_schema():
    index = make_index("a b c")
    fv = extract_features("a?", index.passages["p1"], index)
    vec = fv.as_vector()
    assert vec[0] == fv.matching_lexeme_count
    assert vec[4] == fv.passage_length_log
    assert len(vec) == 5


# -- candidate ranking -------------------------------------------------------

FLAT = LinearModel("passage", (1.0, 0.0, 0.0, 0.0, 0.0), 0.0)


def test_rank_passages_caps_and_sorts():
    index = make_index(
        "rhine river delta",
        "the rhine flows",
        "unrelated mountain text",
    )
    ranked = rank_passages("Where is the Rhine river?", index, FLAT, k=5)
    pids = [pid for pid, _ in ranked]
    assert pids[0] == "p1"  # two matching lexemes beat one
    assert "p3" not in pids
    assert rank_passages("Where is the Rhine river?", index, FLAT, k=1) == ranked[:1]


def test_rank_passages_breaks_ties_by_passage_id():
    index = make_index("rhine a", "rhine b")
    ranked = rank_passages("rhine?", index, FLAT, k=5)
    assert [pid for pid, _ in ranked] == ["p1", "p2"]
    assert ranked[0][1] == pytest.approx(ranked[1][1])


def test_rank_passages_requires_content_overlap():
    """Stopword-only overlap keeps a passage out of the candidate list even
    though its BM25 score is positive."""
    index = make_index("the of and is", "rhine river")
    ranked = rank_passages("Where is the river?", index, FLAT, k=5)
    assert [pid for pid, _ in ranked] == ["p2"]


def test_rank_passages_rejects_bad_k():
    index = make_index("a")
    with pytest.raises(ValueError):
        rank_passages("a?", index, FLAT, k=0)
