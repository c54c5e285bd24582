import numpy as np
import pytest

from knowvl.assembly import (
    AssemblyConfig,
    RatioScheduler,
    Vocabulary,
    apply_mlm_mask,
    assign_itm,
    build_corpus,
    build_input,
    build_vocabulary,
    corpus_vocabulary,
    kept_objects,
    tokenize,
)
from knowvl.errors import ValidationError
from knowvl.formats import DetectedObject, ImageRecord
from knowvl.sampling import SamplerConfig
from knowvl.synthetic import make_knowledge_base, make_records

from oracles import phrase_cosine, table_entries


@pytest.fixture(scope="module")
def vocab():
    return build_vocabulary(["chinese paper cuttings in a shop",
                             "a torii is a traditional japanese gate",
                             "red frisbee lamp poster drum"])


class TestVocabulary:
    def test_specials_lead_with_pad_zero(self, vocab):
        assert vocab.tokens[:5] == ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
        assert vocab.pad_id == 0

    def test_specials_distinct(self, vocab):
        assert len(set(vocab.special_ids)) == 5

    def test_rejects_bad_layout(self):
        with pytest.raises(ValidationError):
            Vocabulary(["[CLS]", "[PAD]"])

    def test_deterministic_ordering(self):
        a = build_vocabulary(["b b a", "c"])
        b = build_vocabulary(["b a b", "c"])
        assert a.tokens == b.tokens
        assert a.tokens[5] == "b"  # most frequent first


class TestTokenize:
    def test_known_words(self, vocab):
        ids = tokenize("Chinese paper cuttings", vocab)
        assert len(ids) == 3
        assert all(i >= 5 for i in ids)

    def test_oov_maps_to_unk(self, vocab):
        assert tokenize("zzqx", vocab) == [vocab.unk_id]

    def test_empty(self, vocab):
        assert tokenize("", vocab) == []

    def test_punctuation_split(self, vocab):
        assert tokenize("shop, shop!", vocab) == tokenize("shop shop", vocab)


def obj(tag, w, h, feature=None, dim=4):
    return DetectedObject(tag=tag, bbox=(1, 1, w, h),
                          feature=np.zeros(dim) if feature is None else np.asarray(feature))


class TestBuildInput:
    def test_layout_arithmetic(self, vocab):
        cfg = AssemblyConfig()
        token_ids, segment_ids, visual = build_input(
            "paper cuttings", "a traditional gate", ["lamp"],
            [obj("lamp", 4, 4)], vocab, cfg, width=10, height=10)
        assert len(token_ids) == 2 + 3 + 1 + 4
        assert token_ids[0] == vocab.cls_id
        assert token_ids.count(vocab.sep_id) == 3
        assert segment_ids == [0, 0, 0, 0, 1, 1, 1, 1, 2, 2]

    def test_knowledge_truncated_first(self, vocab):
        cfg = AssemblyConfig(max_text_tokens=12)
        c, k = "paper cuttings in shop", "a traditional gate in japan found at shrines"
        token_ids, segment_ids, _ = build_input(
            c, k, ["lamp"], [obj("lamp", 4, 4)], vocab, cfg, width=10, height=10)
        assert len(token_ids) == 12
        # caption (4) and tags (1) intact; knowledge cut to 3
        assert segment_ids.count(0) == 4 + 2
        assert segment_ids.count(1) == 3 + 1
        assert segment_ids.count(2) == 1 + 1

    def test_caption_truncated_second(self, vocab):
        cfg = AssemblyConfig(max_text_tokens=7)
        token_ids, segment_ids, _ = build_input(
            "paper cuttings in shop", "gate gate gate", ["lamp"],
            [obj("lamp", 4, 4)], vocab, cfg, width=10, height=10)
        assert len(token_ids) == 7
        assert segment_ids.count(1) == 1  # knowledge fully gone, [SEP] stays
        assert segment_ids.count(0) == 2 + 2

    def test_object_cap_keeps_largest(self, vocab):
        cfg = AssemblyConfig(max_objects=50)
        objects = [obj(f"t{i}", w=i + 1, h=1) for i in range(60)]
        _, _, visual = build_input("a", "b", [], objects, vocab, cfg,
                                   width=100, height=100)
        assert visual.shape[0] == 50
        # rows ordered by area descending: widths 60..11
        widths = visual[:, -4]  # w/W geometry slot
        assert np.all(np.diff(widths) <= 0)
        assert widths[0] == pytest.approx(60 / 100)

    def test_geometry_values(self, vocab):
        cfg = AssemblyConfig()
        o = DetectedObject(tag="x", bbox=(10, 20, 30, 40), feature=np.arange(4.0))
        _, _, visual = build_input("a", "", [], [o], vocab, cfg, width=100, height=200)
        row = visual[0]
        assert np.array_equal(row[:4], np.arange(4.0))
        assert row[4:].tolist() == pytest.approx(
            [10 / 100, 20 / 200, 30 / 100, 40 / 200, 1200 / 20000, 30 / 40])

    def test_kept_objects_ties_by_index(self):
        objects = [obj("a", 2, 2), obj("b", 2, 2), obj("c", 3, 3)]
        keep = kept_objects(objects, 2)
        assert [o.tag for o in keep] == ["c", "a"]


class TestMlmMask:
    def test_force_rule_on_single_word(self, vocab):
        cfg = AssemblyConfig()
        ids = [vocab.cls_id, tokenize("shop", vocab)[0], vocab.sep_id]
        rng = np.random.default_rng(0)
        for _ in range(50):
            masked, positions, targets = apply_mlm_mask(ids, vocab, cfg, rng)
            assert positions == [1]
            assert targets == [ids[1]]

    def test_specials_never_masked(self, vocab):
        cfg = AssemblyConfig(mlm_rate=0.9)
        ids = tokenize("chinese paper cuttings in a shop", vocab)
        ids = [vocab.cls_id, *ids, vocab.sep_id]
        rng = np.random.default_rng(1)
        for _ in range(200):
            masked, positions, targets = apply_mlm_mask(ids, vocab, cfg, rng)
            assert 0 not in positions
            assert len(ids) - 1 not in positions
            for t in targets:
                assert t not in vocab.special_ids

    def test_masked_fraction_statistics(self, vocab):
        cfg = AssemblyConfig()
        word_ids = [i % 10 + 5 for i in range(100)]
        ids = [vocab.cls_id, *word_ids, vocab.sep_id]
        rng = np.random.default_rng(2)
        total_masked = 0
        n_seq = 10_000
        for _ in range(n_seq):
            _, positions, _ = apply_mlm_mask(ids, vocab, cfg, rng)
            total_masked += len(positions)
        fraction = total_masked / (n_seq * 100)
        assert fraction == pytest.approx(0.15, abs=0.01)

    def test_corruption_split(self, vocab):
        cfg = AssemblyConfig()
        word_ids = [i % 10 + 5 for i in range(100)]
        ids = [vocab.cls_id, *word_ids, vocab.sep_id]
        rng = np.random.default_rng(3)
        mask_count = keep_count = random_count = 0
        for _ in range(2000):
            masked, positions, targets = apply_mlm_mask(ids, vocab, cfg, rng)
            for pos, tgt in zip(positions, targets):
                if masked[pos] == vocab.mask_id:
                    mask_count += 1
                elif masked[pos] == tgt:
                    keep_count += 1
                else:
                    random_count += 1
        total = mask_count + keep_count + random_count
        assert mask_count / total == pytest.approx(0.8, abs=0.02)
        # the random branch can also draw the original token, shifting a
        # sliver of mass from "random" to "kept"
        assert random_count / total == pytest.approx(0.1, abs=0.02)


class TestRatioScheduler:
    def test_tracks_target_ratio(self):
        sched = RatioScheduler((2, 1, 1))
        rng = np.random.default_rng(0)
        draws = [sched.draw(rng) for _ in range(10_000)]
        counts = [draws.count(i) for i in range(3)]
        assert counts[0] / 10_000 == pytest.approx(0.5, abs=0.02)
        assert counts[1] / 10_000 == pytest.approx(0.25, abs=0.02)

    def test_amend_repairs_counts(self):
        sched = RatioScheduler((1, 1))
        rng = np.random.default_rng(0)
        for _ in range(1000):
            label = sched.draw(rng)
            if label == 1:
                sched.amend(1, 0)  # every type-1 falls back
        assert sched.counts[1] == 0
        assert sched.counts[0] == 1000


@pytest.fixture(scope="module")
def small_world(embedding_table=None):
    from knowvl.synthetic import make_embedding_table

    kb = make_knowledge_base(40, seed=2)
    records = make_records(30, kb, seed=2)
    table = make_embedding_table(seed=2)
    return records, kb, table


class TestAssignItm:
    def test_label0_keeps_own(self, small_world):
        records, _, _ = small_world
        caption, tag_source = assign_itm(records[0], records, 0,
                                         np.random.default_rng(0))
        assert caption == records[0].caption
        assert tag_source is records[0]

    def test_label1_swaps_caption(self, small_world):
        records, _, _ = small_world
        rng = np.random.default_rng(1)
        for _ in range(20):
            caption, tag_source = assign_itm(records[0], records, 1, rng)
            assert caption != records[0].caption
            assert tag_source is records[0]

    def test_label2_swaps_tags(self, small_world):
        records, _, _ = small_world
        rng = np.random.default_rng(2)
        for _ in range(20):
            caption, tag_source = assign_itm(records[0], records, 2, rng)
            assert caption == records[0].caption
            assert tag_source.image_id != records[0].image_id

    def test_needs_two_records(self, small_world):
        records, _, _ = small_world
        with pytest.raises(ValidationError):
            assign_itm(records[0], [records[0]], 1, np.random.default_rng(0))


class TestSimilarCategoryKnowledge:
    def test_type3_attaches_similar_category_knowledge(self):
        """An image of one paper-cutting tradition gets the knowledge of the
        other (same-category) tradition as its hardest mismatch, while a
        cross-category concept never wins."""
        import numpy as np

        from knowvl.assembly import assign_ikm
        from knowvl.formats import EmbeddingTable, VisualConcept

        table = EmbeddingTable(dimension=2, entries={
            "folk": np.array([1.0, 0.1]),
            "art": np.array([1.0, 0.0]),
            "copper": np.array([0.0, 1.0]),
            "kettle": np.array([0.0, 1.0]),
        })
        chinese = VisualConcept(name="chinese paper cuttings",
                                category="folk art",
                                knowledge="cut-paper decorations for festivals")
        jewish = VisualConcept(name="jewish paper cutting",
                               category="folk art",
                               knowledge="a paper-cutting tradition of its own")
        kettle = VisualConcept(name="samovar", category="copper kettle",
                               knowledge="a metal water heater")
        kb = [chinese, jewish, kettle]
        record = ImageRecord(image_id="i", caption="c", width=10, height=10,
                             objects=[obj("poster", 4, 4)],
                             concept_name=chinese.name,
                             knowledge=chinese.knowledge)
        knowledge_used, label, _ = assign_ikm(
            record, chinese, kb, table, 2, SamplerConfig(rng_seed=0),
            np.random.default_rng(0))
        assert label == 2
        assert knowledge_used == jewish.knowledge


class TestBuildCorpus:
    def test_one_example_per_record(self, small_world):
        records, kb, table = small_world
        result = build_corpus(records, kb, AssemblyConfig(rng_seed=4),
                              SamplerConfig(rng_seed=4), table, 4)
        assert len(result.examples) == len(records)
        assert not result.failures

    def test_same_seed_byte_identical(self, small_world, tmp_path):
        from knowvl.formats import write_corpus

        records, kb, table = small_world
        paths = []
        for run in range(2):
            result = build_corpus(records, kb, AssemblyConfig(rng_seed=4),
                                  SamplerConfig(rng_seed=4), table, 4)
            path = tmp_path / f"c{run}.jsonl"
            write_corpus(path, result.examples, result.manifest)
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_manifest_counts_match_file(self, small_world):
        records, kb, table = small_world
        result = build_corpus(records, kb, AssemblyConfig(rng_seed=4),
                              SamplerConfig(rng_seed=4), table, 4)
        for label in range(3):
            assert result.manifest.ikm_counts[label] == sum(
                1 for ex in result.examples if ex.ikm_label == label)
            assert result.manifest.itm_counts[label] == sum(
                1 for ex in result.examples if ex.itm_label == label)
        for label in range(2):
            assert result.manifest.iec_counts[label] == sum(
                1 for ex in result.examples if ex.iec_label == label)

    def test_examples_satisfy_invariants(self, small_world):
        records, kb, table = small_world
        cfg = AssemblyConfig(rng_seed=4)
        result = build_corpus(records, kb, cfg, SamplerConfig(rng_seed=4), table, 4)
        vocab = corpus_vocabulary(records, kb)
        for ex in result.examples:
            ex.validate(max_text_tokens=cfg.max_text_tokens,
                        max_objects=cfg.max_objects,
                        special_ids=vocab.special_ids, mask_id=vocab.mask_id)

    def test_ikm_label2_passes_argmax_oracle(self, small_world):
        records, kb, table = small_world
        result = build_corpus(records, kb, AssemblyConfig(rng_seed=4),
                              SamplerConfig(rng_seed=4), table, 4,
                              collect_audits=True)
        entries = table_entries(table)
        by_name = {c.name.lower(): c for c in kb}
        checked2 = checked1 = 0
        for rec, audit in zip(records, result.audits):
            info = audit.get("ikm")
            if info is None:
                continue
            target = by_name[rec.concept_name.lower()]
            if audit["labels"]["ikm"] == 2:
                scores = [phrase_cosine(target.category, kb[i].category, entries)
                          for i in info["drawn"]]
                best = 0
                for i, s in enumerate(scores):
                    if s > scores[best]:
                        best = i
                assert info["chosen"] == info["drawn"][best]
                checked2 += 1
            elif audit["labels"]["ikm"] == 1:
                assert info["scores"][0] < 0.3
                checked1 += 1
        assert checked2 > 0 and checked1 > 0

    def test_iec_label1_differs_in_exactly_one_row(self, small_world):
        records, kb, table = small_world
        cfg = AssemblyConfig(rng_seed=4)
        result = build_corpus(records, kb, cfg, SamplerConfig(rng_seed=4), table, 4)
        recs = {r.image_id: r for r in records}
        found = 0
        for ex in result.examples:
            if ex.iec_label != 1:
                continue
            rec = recs[ex.source_image_id]
            _, _, original = build_input(
                "", "", [], rec.objects,
                corpus_vocabulary(records, kb), cfg,
                width=rec.width, height=rec.height)
            diff_rows = sum(
                1 for i in range(original.shape[0])
                if not np.array_equal(original[i], ex.visual_features[i]))
            assert diff_rows == 1
            found += 1
        assert found > 0

    def test_sharded_build_is_deterministic(self, small_world, tmp_path):
        from knowvl.formats import write_corpus

        records, kb, table = small_world
        outs = []
        for run in range(2):
            result = build_corpus(records, kb, AssemblyConfig(rng_seed=4),
                                  SamplerConfig(rng_seed=4), table, 4, shards=3)
            path = tmp_path / f"s{run}.jsonl"
            write_corpus(path, result.examples, result.manifest)
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_empty_records_rejected(self, small_world):
        _, kb, table = small_world
        with pytest.raises(ValidationError):
            build_corpus([], kb, AssemblyConfig(rng_seed=1),
                         SamplerConfig(rng_seed=1), table, 1)

    def test_record_without_concept_reported(self, small_world):
        records, kb, table = small_world
        broken = records[0].copy()
        broken.concept_name = None
        result = build_corpus([broken] + records[1:], kb, AssemblyConfig(rng_seed=4),
                              SamplerConfig(rng_seed=4), table, 4)
        assert len(result.failures) == 1
        assert result.failures[0].image_id == broken.image_id
        assert len(result.examples) == len(records) - 1
