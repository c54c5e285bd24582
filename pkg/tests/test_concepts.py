import pytest

from knowvl.concepts import (
    build_knowledge_base,
    extract_category,
    extract_concept_name,
    truncate_knowledge,
)
from knowvl.errors import NoNounFound
from knowvl.formats import ParseToken


def make_parse(*rows):
    return [ParseToken(index=i, surface=s, upos=u, head=h, deprel=d)
            for i, s, u, h, d in rows]


class TestConceptName:
    def test_paper_cuttings_caption(self, caption_parses):
        parses = dict(caption_parses)
        phrase = extract_concept_name(parses["cap001"])
        assert phrase.text == "Chinese paper cuttings"
        assert phrase.head_index == 3

    def test_single_noun(self):
        phrase = extract_concept_name(make_parse((1, "cuttings", "NOUN", 0, "root")))
        assert phrase.text == "cuttings"
        assert phrase.modifier_indices == ()

    def test_verb_root_descends_to_nearest_noun(self, caption_parses):
        parses = dict(caption_parses)
        assert extract_concept_name(parses["cap003"]).text == "festival"

    def test_no_noun_anywhere(self):
        parse = make_parse(
            (1, "it", "PRON", 2, "nsubj"),
            (2, "is", "VERB", 0, "root"),
            (3, "raining", "VERB", 2, "xcomp"),
        )
        with pytest.raises(NoNounFound):
            extract_concept_name(parse)

    def test_all_caption_fixtures_match_gold(self, caption_parses, extraction_gold):
        for sid, tokens in caption_parses:
            assert extract_concept_name(tokens).text == extraction_gold[sid]["phrase"], sid


class TestCategory:
    def test_torii_definition(self, definition_parses):
        parses = dict(definition_parses)
        assert extract_category(parses["def001"]).text == "traditional Japanese gate"

    def test_bare_copula(self, definition_parses):
        parses = dict(definition_parses)
        assert extract_category(parses["def003"]).text == "gate"

    def test_of_complement_excluded(self, definition_parses):
        parses = dict(definition_parses)
        assert extract_category(parses["def002"]).text == "traditional form"

    def test_all_definition_fixtures_match_gold(self, definition_parses, extraction_gold):
        for sid, tokens in definition_parses:
            assert extract_category(tokens).text == extraction_gold[sid]["phrase"], sid


class TestProperties:
    def test_phrase_is_subsequence_of_surface(self, caption_parses, definition_parses):
        for _, tokens in list(caption_parses) + list(definition_parses):
            phrase = extract_concept_name(tokens)
            surfaces = [t.surface for t in tokens]
            words = phrase.text.split(" ")
            it = iter(surfaces)
            assert all(w in it for w in words), phrase.text

    def test_deterministic(self, caption_parses):
        for _, tokens in caption_parses:
            assert extract_concept_name(tokens) == extract_concept_name(tokens)

    def test_head_token_is_noun(self, caption_parses, definition_parses):
        for _, tokens in list(caption_parses) + list(definition_parses):
            phrase = extract_concept_name(tokens)
            assert tokens[phrase.head_index - 1].upos in ("NOUN", "PROPN")

    def test_modifiers_directly_attached(self, definition_parses):
        for _, tokens in definition_parses:
            phrase = extract_category(tokens)
            for idx in phrase.modifier_indices:
                tok = tokens[idx - 1]
                assert tok.head == phrase.head_index
                assert tok.deprel in ("amod", "compound")


class TestKnowledgeBase:
    def test_three_pages(self, definition_parses):
        parses = dict(definition_parses)
        pages = [
            ("torii", parses["def001"], "A torii is a traditional Japanese gate."),
            ("hanbok", parses["def005"], "A hanbok is a traditional Korean garment."),
            ("dhow", parses["def009"], "A dhow is a sailing vessel."),
        ]
        concepts = build_knowledge_base(pages)
        assert [c.name for c in concepts] == ["torii", "hanbok", "dhow"]
        assert concepts[0].category == "traditional Japanese gate"

    def test_unparseable_page_skipped_with_warning(self, definition_parses):
        parses = dict(definition_parses)
        bad = make_parse((1, "it", "PRON", 2, "nsubj"), (2, "rains", "VERB", 0, "root"))
        pages = [
            ("torii", parses["def001"], "text a"),
            ("broken", bad, "text b"),
            ("dhow", parses["def009"], "text c"),
        ]
        with pytest.warns(UserWarning, match="broken"):
            concepts = build_knowledge_base(pages)
        assert len(concepts) == 2

    def test_knowledge_truncated_to_budget(self, definition_parses):
        parses = dict(definition_parses)
        long_text = " ".join(f"w{i}" for i in range(100))
        concepts = build_knowledge_base([("torii", parses["def001"], long_text)],
                                        knowledge_token_budget=10)
        assert len(concepts[0].knowledge.split()) == 10

    def test_truncate_keeps_short_text(self):
        assert truncate_knowledge("a b c", 10) == "a b c"
