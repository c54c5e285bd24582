import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from knowvl.errors import (
    DanglingHead,
    DimensionMismatch,
    EmptyTable,
    MalformedRow,
    MissingField,
    MultipleRoots,
    NegativeBox,
    RaggedVector,
)
from knowvl.formats import (
    CorpusManifest,
    DetectedObject,
    ImageRecord,
    ParseToken,
    TrainingExample,
    read_corpus,
    read_detections,
    read_embedding_table,
    read_knowledge_base,
    read_parse_file,
    read_records,
    write_corpus,
    write_detections,
    write_embedding_table,
    write_knowledge_base,
    write_parse_file,
    write_records,
)


def make_parse(*rows):
    return [ParseToken(index=i, surface=s, upos=u, head=h, deprel=d)
            for i, s, u, h, d in rows]


class TestParseFile:
    def test_two_sentence_round_trip(self, tmp_path):
        sentences = [
            ("a", make_parse((1, "dogs", "NOUN", 2, "nsubj"), (2, "run", "VERB", 0, "root"))),
            ("b", make_parse((1, "cats", "NOUN", 0, "root"))),
        ]
        path = tmp_path / "p.conllu"
        write_parse_file(path, sentences)
        back = read_parse_file(path)
        assert back == sentences

    def test_dangling_head_names_line(self, tmp_path):
        path = tmp_path / "p.conllu"
        lines = []
        for i, word in enumerate(["a", "b", "c", "d", "e"], start=1):
            head = 9 if i == 3 else (0 if i == 1 else 1)
            lines.append(f"{i}\t{word}\t{word}\tNOUN\t_\t_\t{head}\tdep\t_\t_")
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DanglingHead) as err:
            read_parse_file(path)
        assert "line 3" in str(err.value)

    def test_wrong_column_count(self, tmp_path):
        path = tmp_path / "p.conllu"
        path.write_text("1\tword\tNOUN\t0\troot\n")
        with pytest.raises(MalformedRow) as err:
            read_parse_file(path)
        assert "line 1" in str(err.value)

    def test_multiple_roots(self, tmp_path):
        path = tmp_path / "p.conllu"
        path.write_text(
            "1\ta\ta\tNOUN\t_\t_\t0\troot\t_\t_\n"
            "2\tb\tb\tNOUN\t_\t_\t0\troot\t_\t_\n"
        )
        with pytest.raises(MultipleRoots):
            read_parse_file(path)

    def test_paper_cuttings_fixture_shape(self, caption_parses):
        parses = dict(caption_parses)
        tokens = parses["cap001"]
        assert len(tokens) == 7
        root = next(t for t in tokens if t.head == 0)
        assert root.surface == "cuttings"

    def test_fixture_parses_single_root_and_reachable(self, caption_parses,
                                                      definition_parses):
        for _, tokens in list(caption_parses) + list(definition_parses):
            assert sum(1 for t in tokens if t.head == 0) == 1
            n = len(tokens)
            for tok in tokens:
                cur, hops = tok, 0
                while cur.head != 0:
                    assert 1 <= cur.head <= n
                    cur = tokens[cur.head - 1]
                    hops += 1
                    assert hops <= n

    def test_multiword_ranges_skipped(self, tmp_path):
        path = tmp_path / "p.conllu"
        path.write_text(
            "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n"
            "1\tde\tde\tADP\t_\t_\t2\tcase\t_\t_\n"
            "2\tel\tel\tNOUN\t_\t_\t0\troot\t_\t_\n"
        )
        [(sid, tokens)] = read_parse_file(path)
        assert [t.surface for t in tokens] == ["de", "el"]


class TestDetections:
    def test_read_fixture_matches_manifest(self, fixtures_dir):
        detections = read_detections(fixtures_dir / "detections.jsonl")
        manifest = json.loads((fixtures_dir / "detections_manifest.json").read_text())
        assert len(detections) == manifest["images"]
        for image_id, objs in detections.items():
            assert len(objs) == manifest["objects"][image_id]
            assert sorted(o.tag for o in objs) == manifest["tag_multisets"][image_id]
            for o in objs:
                assert o.feature.shape == (manifest["feature_dim"],)

    def test_zero_width_box_rejected(self):
        with pytest.raises(NegativeBox):
            DetectedObject(tag="x", bbox=(0, 0, 0, 5), feature=np.zeros(4))

    def test_area_matches_bbox(self, fixtures_dir):
        detections = read_detections(fixtures_dir / "detections.jsonl")
        for objs in detections.values():
            for o in objs:
                assert o.area == o.bbox[2] * o.bbox[3]

    def test_stored_area_mismatch_rejected(self, tmp_path):
        path = tmp_path / "d.jsonl"
        header = {"format_version": 1, "feature_dim": 2}
        rec = {"image_id": "i", "width": 10, "height": 10,
               "objects": [{"tag": "t", "bbox": [0, 0, 2, 3], "area": 7,
                            "feature": [0.0, 1.0]}]}
        path.write_text(json.dumps(header) + "\n" + json.dumps(rec) + "\n")
        with pytest.raises(Exception) as err:
            read_detections(path)
        assert "area" in str(err.value)

    def test_ragged_features_rejected(self, tmp_path):
        path = tmp_path / "d.jsonl"
        header = {"format_version": 1, "feature_dim": 3}
        rec = {"image_id": "i", "width": 10, "height": 10,
               "objects": [{"tag": "t", "bbox": [0, 0, 2, 3], "feature": [0.0, 1.0]}]}
        path.write_text(json.dumps(header) + "\n" + json.dumps(rec) + "\n")
        with pytest.raises(DimensionMismatch):
            read_detections(path)

    def test_detections_round_trip(self, tmp_path, fixture_records):
        original = {r.image_id: (r.width, r.height, r.objects)
                    for r in fixture_records[:5]}
        path = tmp_path / "d.jsonl"
        write_detections(path, original)
        back = read_detections(path)
        assert set(back) == set(original)
        for image_id, (_, _, objs) in original.items():
            for a, b in zip(objs, back[image_id]):
                assert a.tag == b.tag and a.bbox == b.bbox
                assert np.array_equal(a.feature, b.feature)


class TestRecords:
    def test_round_trip(self, tmp_path, fixture_records):
        path = tmp_path / "r.jsonl"
        write_records(path, fixture_records)
        back = read_records(path)
        assert len(back) == len(fixture_records)
        for a, b in zip(fixture_records, back):
            assert a.image_id == b.image_id
            assert a.caption == b.caption
            assert (a.width, a.height) == (b.width, b.height)
            assert a.concept_name == b.concept_name
            assert a.knowledge == b.knowledge
            for oa, ob in zip(a.objects, b.objects):
                assert oa.tag == ob.tag and oa.bbox == ob.bbox
                assert np.array_equal(oa.feature, ob.feature)

    def test_missing_caption_rejected(self, tmp_path):
        path = tmp_path / "r.jsonl"
        path.write_text(json.dumps({"format_version": 1, "feature_dim": 2}) + "\n"
                        + json.dumps({"image_id": "i", "width": 4, "height": 4,
                                      "objects": []}) + "\n")
        with pytest.raises(MissingField):
            read_records(path)


class TestEmbeddingTable:
    def test_small_table(self, tmp_path):
        path = tmp_path / "e.vec"
        path.write_text("3 4\nred 1 0 0 0\ngreen 0 1 0 0\nblue 0 0 1 0\n")
        table = read_embedding_table(path)
        assert table.dimension == 4
        assert len(table.entries) == 3
        assert np.array_equal(table.entries["green"], np.array([0, 1, 0, 0.0]))

    def test_ragged_line(self, tmp_path):
        path = tmp_path / "e.vec"
        path.write_text("red 1 0\ngreen 0 1 0\n")
        with pytest.raises(RaggedVector) as err:
            read_embedding_table(path)
        assert "line 2" in str(err.value)

    def test_duplicate_word_keeps_first(self, tmp_path):
        path = tmp_path / "e.vec"
        path.write_text("red 1 0\nred 0 1\n")
        with pytest.warns(UserWarning, match="duplicate"):
            table = read_embedding_table(path)
        assert np.array_equal(table.entries["red"], np.array([1.0, 0.0]))

    def test_empty_table_rejected(self, tmp_path):
        path = tmp_path / "e.vec"
        path.write_text("")
        with pytest.raises(EmptyTable):
            read_embedding_table(path)

    def test_round_trip(self, tmp_path, embedding_table):
        path = tmp_path / "e.vec"
        write_embedding_table(path, embedding_table)
        back = read_embedding_table(path)
        assert back.dimension == embedding_table.dimension
        assert set(back.entries) == set(embedding_table.entries)
        for w, v in embedding_table.entries.items():
            assert np.array_equal(back.entries[w], v)


class TestKnowledgeBase:
    def test_fixture_has_200_concepts(self, knowledge_base):
        assert len(knowledge_base) == 200

    def test_missing_category(self, tmp_path):
        path = tmp_path / "kb.jsonl"
        path.write_text(json.dumps({"name": "x", "knowledge": "y"}) + "\n")
        with pytest.raises(MissingField):
            read_knowledge_base(path)

    def test_round_trip(self, tmp_path, knowledge_base):
        path = tmp_path / "kb.jsonl"
        write_knowledge_base(path, knowledge_base)
        assert read_knowledge_base(path) == knowledge_base


def random_example(rng: np.random.Generator) -> TrainingExample:
    n_tok = int(rng.integers(5, 20))
    n_obj = int(rng.integers(1, 6))
    n_mask = int(rng.integers(0, min(3, n_tok - 4) + 1))
    positions = sorted(int(i) for i in rng.choice(np.arange(1, n_tok - 1),
                                                  size=n_mask, replace=False))
    return TrainingExample(
        token_ids=[int(i) for i in rng.integers(0, 40, size=n_tok)],
        segment_ids=[int(i) for i in rng.integers(0, 3, size=n_tok)],
        visual_features=rng.normal(size=(n_obj, 10)),
        mlm_positions=positions,
        mlm_targets=[int(i) for i in rng.integers(5, 40, size=n_mask)],
        itm_label=int(rng.integers(0, 3)),
        ikm_label=int(rng.integers(0, 3)),
        iec_label=int(rng.integers(0, 2)),
        source_image_id=f"img{rng.integers(0, 1000)}",
    )


def make_manifest(n: int, vocab=None) -> CorpusManifest:
    return CorpusManifest(
        seed=1, config_hash="abc", record_count=n, visual_dim=10,
        max_text_tokens=70, max_objects=50, mlm_rate=0.15,
        itm_type_ratio=(2, 1, 1), ikm_type_ratio=(2, 1, 1), iec_type_ratio=(1, 1),
        itm_counts=(n, 0, 0), ikm_counts=(n, 0, 0), iec_counts=(n, 0),
        mlm_masked_positions=0, mlm_maskable_positions=0,
        vocab_tokens=vocab or ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"],
    )


class TestCorpus:
    def test_round_trip_100_random_examples(self, tmp_path):
        rng = np.random.default_rng(42)
        examples = [random_example(rng) for _ in range(100)]
        path = tmp_path / "c.jsonl"
        write_corpus(path, examples, make_manifest(100))
        manifest, back = read_corpus(path)
        assert manifest.record_count == 100
        assert back == examples

    def test_manifest_count_mismatch(self, tmp_path):
        rng = np.random.default_rng(0)
        examples = [random_example(rng) for _ in range(3)]
        path = tmp_path / "c.jsonl"
        with pytest.raises(Exception):
            write_corpus(path, examples, make_manifest(5))

    def test_manifest_must_lead(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps({"token_ids": []}) + "\n")
        with pytest.raises(MissingField):
            read_corpus(path)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.text(alphabet="abcdefg", min_size=1, max_size=6),
                          st.sampled_from(["NOUN", "VERB", "ADJ"])),
                min_size=1, max_size=8))
def test_parse_round_trip_property(tmp_path_factory, words):
    # chain parse: token i+1 headed by token i, token 1 is root
    tokens = [ParseToken(index=i + 1, surface=w, upos=u,
                         head=i, deprel="dep" if i else "root")
              for i, (w, u) in enumerate(words)]
    path = tmp_path_factory.mktemp("prop") / "p.conllu"
    write_parse_file(path, [("s", tokens)])
    [(sid, back)] = read_parse_file(path)
    assert back == tokens
