import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lyre.embedding import (
    CentroidTransform,
    HashEmbeddingProvider,
    MeanCenterer,
    NormalizedProvider,
    PrecomputedEmbeddings,
    SentenceProvider,
    SongEmbedding,
    centralize,
    embed_corpus,
    embed_song,
    load_embedding_file,
    pool,
    resolve_provider,
    save_embedding_file,
    segment,
)
from lyre.errors import (
    DimensionMismatchError,
    EmbeddingFileError,
    ProviderContractError,
    UnembeddableLyricsError,
)
from lyre.svm import LinearSVC

from conftest import make_record

WORDS = st.text(alphabet="abcdefghijklmnopqrstuvwxyzãéô", min_size=1, max_size=8)
LYRIC_LINES = st.lists(
    st.lists(WORDS, min_size=1, max_size=12).map(" ".join), min_size=1, max_size=6
)


class TestSegment:
    def test_split_at_terminal_punctuation(self):
        chunks = segment("Hello world! How are you")
        assert [c.text for c in chunks] == ["Hello world!", "How are you"]

    def test_budget_forces_window_split(self):
        chunks = segment("a b c d e", token_budget=2)
        assert [c.text for c in chunks] == ["a b", "c d", "e"]
        assert all(c.approx_tokens <= 2 for c in chunks)

    def test_line_breaks_split(self):
        chunks = segment("first line\nsecond line")
        assert [c.text for c in chunks] == ["first line", "second line"]

    def test_no_word_characters_yields_empty(self):
        assert segment("!!! ... --- ") == []

    def test_punctuation_run_stays_attached(self):
        chunks = segment("Wait... what? Really?!")
        assert [c.text for c in chunks] == ["Wait...", "what?", "Really?!"]

    @given(LYRIC_LINES)
    @settings(max_examples=100, deadline=None)
    def test_word_multiset_preserved(self, lines):
        text = "\n".join(lines)
        chunks = segment(text, token_budget=5)
        original = sorted(text.split())
        recovered = sorted(" ".join(c.text for c in chunks).split())
        assert recovered == original

    @given(LYRIC_LINES, st.integers(min_value=1, max_value=200))
    @settings(max_examples=60, deadline=None)
    def test_budget_respected(self, lines, budget):
        for chunk in segment("\n".join(lines), token_budget=budget):
            assert chunk.approx_tokens <= budget

    def test_bad_budget_rejected(self):
        with pytest.raises(ValueError):
            segment("hello", token_budget=0)


class TestPool:
    def test_component_wise_mean(self):
        out = pool([np.array([0.2, 0.4]), np.array([0.6, 0.0])])
        assert np.array_equal(out, np.array([0.4, 0.2]))

    def test_single_vector_identity(self):
        vec = np.array([0.1, -0.5, 0.9])
        assert np.array_equal(pool([vec]), vec)

    def test_empty_list_is_error(self):
        with pytest.raises(ValueError):
            pool([])

    def test_dimension_mismatch_is_error(self):
        with pytest.raises(DimensionMismatchError):
            pool([np.zeros(3), np.zeros(4)])

    def test_mean_within_per_dimension_bounds(self, rng):
        vectors = [rng.uniform(-1, 1, 16) for _ in range(100)]
        pooled = pool(vectors)
        stacked = np.stack(vectors)
        assert np.all(pooled >= stacked.min(axis=0) - 1e-15)
        assert np.all(pooled <= stacked.max(axis=0) + 1e-15)

    def test_permutation_invariant(self, rng):
        vectors = [rng.uniform(-1, 1, 8) for _ in range(10)]
        base = pool(vectors)
        for _ in range(5):
            order = rng.permutation(len(vectors))
            assert np.allclose(pool([vectors[i] for i in order]), base, atol=1e-15)


class TestHashProvider:
    def test_equal_sentences_equal_vectors(self):
        provider = HashEmbeddingProvider(seed=7, dimension=32)
        a = provider.embed("same sentence")
        b = provider.embed("same sentence")
        assert np.array_equal(a, b)

    def test_components_bounded(self):
        provider = HashEmbeddingProvider(seed=7, dimension=64)
        for text in ("one", "two", "three"):
            vec = provider.embed(text)
            assert np.all(np.abs(vec) <= 1.0)

    def test_no_collisions_over_corpus(self):
        provider = HashEmbeddingProvider(seed=3, dimension=16)
        seen = {provider.embed(f"sentence number {i}").tobytes() for i in range(10_000)}
        assert len(seen) == 10_000

    def test_different_seeds_differ(self):
        a = HashEmbeddingProvider(seed=1, dimension=16).embed("hello")
        b = HashEmbeddingProvider(seed=2, dimension=16).embed("hello")
        assert not np.array_equal(a, b)


class TestEmbedSong:
    def test_single_sentence_equals_provider_output(self):
        provider = HashEmbeddingProvider(seed=1, dimension=16)
        record = make_record("1", lyrics="one single sentence with no punctuation")
        emb = embed_song(provider, record)
        assert np.array_equal(emb.values, provider.embed(record.lyrics))
        assert emb.record_id == "1"
        assert emb.provider_tag == "mock:1"

    def test_duplicated_text_same_embedding(self):
        provider = HashEmbeddingProvider(seed=1, dimension=16)
        once = embed_song(provider, make_record("1", lyrics="la la la"))
        twice = embed_song(provider, make_record("1", lyrics="la la la\nla la la"))
        assert np.array_equal(once.values, twice.values)

    def test_recompute_is_bit_identical(self):
        record = make_record("1", lyrics="first line here.\nsecond line there!\nthird one")
        first = embed_song(HashEmbeddingProvider(seed=9, dimension=48), record)
        second = embed_song(HashEmbeddingProvider(seed=9, dimension=48), record)
        assert first.values.tobytes() == second.values.tobytes()

    def test_unembeddable_lyrics_raise(self):
        record = make_record("1", lyrics="???!...")
        with pytest.raises(UnembeddableLyricsError):
            embed_song(HashEmbeddingProvider(seed=1, dimension=8), record)

    def test_embed_corpus_collects_failures(self):
        provider = HashEmbeddingProvider(seed=1, dimension=8)
        records = [make_record("ok"), make_record("bad", lyrics="???")]
        embeddings, failures = embed_corpus(provider, records)
        assert set(embeddings) == {"ok"}
        assert [record.id for record, _ in failures] == ["bad"]

    def test_bounded_provider_contract_enforced(self):
        class Liar(SentenceProvider):
            dimension = 4
            bounded = True
            tag = "liar"

            def embed(self, sentence):
                return np.array([2.0, 0.0, 0.0, 0.0], dtype=np.float32)

        with pytest.raises(ProviderContractError):
            embed_song(Liar(), make_record("1", lyrics="some words"))

    def test_unbounded_provider_normalized_wrapper(self):
        class Big(SentenceProvider):
            dimension = 3
            bounded = False
            tag = "big"

            def embed(self, sentence):
                return np.array([3.0, 4.0, 0.0])

        wrapped = NormalizedProvider(Big())
        vec = wrapped.embed("x")
        assert np.allclose(np.linalg.norm(vec), 1.0, atol=1e-6)
        assert np.all(np.abs(vec) <= 1.0)


class TestCentering:
    def test_two_point_example(self):
        embeddings = [
            SongEmbedding("a", np.array([1.0, 1.0], dtype=np.float32), "t"),
            SongEmbedding("b", np.array([3.0, 3.0], dtype=np.float32), "t"),
        ]
        centered, transform = centralize(embeddings)
        assert np.array_equal(transform.mean, np.array([2.0, 2.0]))
        assert np.array_equal(centered, np.array([[-1.0, -1.0], [1.0, 1.0]]))

    def test_single_vector_goes_to_zero(self):
        centered, _ = centralize([SongEmbedding("a", np.float32([0.25, -0.5]), "t")])
        assert np.array_equal(centered, np.zeros((1, 2)))

    def test_post_centering_mean_is_tiny(self, rng):
        X = rng.uniform(-1, 1, (200, 32))
        centered, _ = centralize(X)
        assert np.abs(centered.mean(axis=0)).max() < 1e-9

    def test_idempotent_up_to_noise(self, rng):
        X = rng.uniform(-1, 1, (100, 8))
        once, _ = centralize(X)
        twice, transform = centralize(once)
        assert np.abs(transform.mean).max() < 1e-9
        assert np.allclose(once, twice, atol=1e-9)

    def test_estimator_applies_fitted_mean_to_new_data(self, rng):
        X = rng.normal(0, 1, (50, 4))
        centerer = MeanCenterer().fit(X)
        other = rng.normal(0, 1, (10, 4))
        assert np.allclose(centerer.transform(other), other - X.mean(axis=0))
        assert centerer.to_transform().source == "train-set"

    def test_offset_then_centering_preserves_predictions(self, rng):
        # grid-aligned data and a power-of-two offset make float ops exact
        X = (rng.integers(-8, 9, (16, 4)) * 0.25).astype(np.float64)
        y = np.where(rng.random(16) < 0.5, 1, -1)
        y[:2] = [1, -1]
        offset = np.full(4, 4.0)
        Xc, _ = centralize(X)
        Xoc, _ = centralize(X + offset)
        assert np.array_equal(Xc, Xoc)
        model = LinearSVC(C=1.0, random_state=5).fit(Xc, y)
        again = LinearSVC(C=1.0, random_state=5).fit(Xoc, y)
        assert np.array_equal(model.predict(Xc), again.predict(Xoc))
        assert np.array_equal(model.coef_, again.coef_)


class TestEmbeddingFile:
    def embeddings(self):
        provider = HashEmbeddingProvider(seed=11, dimension=24)
        return {
            rid: embed_song(provider, make_record(rid))
            for rid in ("first", "second", "third")
        }

    def test_round_trip_bit_exact(self, tmp_path):
        path = tmp_path / "vectors.lyre"
        original = self.embeddings()
        save_embedding_file(path, original)
        loaded = load_embedding_file(path)
        assert list(loaded) == list(original)
        for rid, emb in original.items():
            assert loaded[rid].values.tobytes() == emb.values.tobytes()
        # saving what was loaded reproduces the file byte for byte
        second = tmp_path / "again.lyre"
        save_embedding_file(second, loaded)
        assert second.read_bytes() == path.read_bytes()

    def test_corrupt_magic_is_format_error(self, tmp_path):
        path = tmp_path / "vectors.lyre"
        save_embedding_file(path, self.embeddings())
        data = bytearray(path.read_bytes())
        data[:4] = b"NOPE"
        path.write_bytes(bytes(data))
        with pytest.raises(EmbeddingFileError):
            load_embedding_file(path)

    def test_truncated_payload_is_format_error(self, tmp_path):
        path = tmp_path / "vectors.lyre"
        save_embedding_file(path, self.embeddings())
        data = path.read_bytes()
        path.write_bytes(data[: len(data) - 7])
        with pytest.raises(EmbeddingFileError):
            load_embedding_file(path)

    def test_trailing_garbage_is_format_error(self, tmp_path):
        path = tmp_path / "vectors.lyre"
        save_embedding_file(path, self.embeddings())
        path.write_bytes(path.read_bytes() + b"junk")
        with pytest.raises(EmbeddingFileError):
            load_embedding_file(path)

    def test_bad_version_is_format_error(self, tmp_path):
        path = tmp_path / "vectors.lyre"
        save_embedding_file(path, self.embeddings())
        data = bytearray(path.read_bytes())
        data[4] = 9
        path.write_bytes(bytes(data))
        with pytest.raises(EmbeddingFileError):
            load_embedding_file(path)

    def test_unicode_ids_survive(self, tmp_path):
        provider = HashEmbeddingProvider(seed=2, dimension=8)
        emb = embed_song(provider, make_record("canção-42"))
        path = tmp_path / "u.lyre"
        save_embedding_file(path, [emb])
        assert "canção-42" in load_embedding_file(path)


class TestLineProtocolProvider:
    @pytest.fixture
    def endpoint(self):
        import http.server
        import threading

        class Handler(http.server.BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers["Content-Length"])
                sentences = self.rfile.read(length).decode("utf-8").splitlines()
                # deterministic toy encoder: [length, vowels, 7] per sentence
                rows = [
                    f"{len(s)} {sum(s.count(v) for v in 'aeiou')} 7.0"
                    for s in sentences
                ]
                body = "\n".join(rows).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "text/plain")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        yield f"http://127.0.0.1:{server.server_address[1]}/embed"
        server.shutdown()

    def test_batch_round_trip(self, endpoint):
        from lyre.embedding import LineProtocolProvider

        provider = LineProtocolProvider(endpoint)
        vectors = provider.embed_batch(["abc", "hello there"])
        assert np.array_equal(vectors[0], np.array([3.0, 1.0, 7.0]))
        assert np.array_equal(vectors[1], np.array([11.0, 4.0, 7.0]))
        assert provider.dimension == 3

    def test_resolve_wraps_with_normalization(self, endpoint):
        provider = resolve_provider(f"extern:{endpoint}")
        assert isinstance(provider, NormalizedProvider)
        vec = provider.embed("hello world")
        assert np.all(np.abs(vec) <= 1.0)
        assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-6)

    def test_embed_song_through_extern(self, endpoint):
        provider = resolve_provider(f"extern:{endpoint}")
        emb = embed_song(provider, make_record("x", lyrics="one line. two lines!"))
        assert emb.dimension == 3


class TestResolveProvider:
    def test_mock_spec(self):
        provider = resolve_provider("mock:42", dimension=32)
        assert isinstance(provider, HashEmbeddingProvider)
        assert provider.seed == 42
        assert provider.dimension == 32

    def test_mock_spec_with_dimension(self):
        provider = resolve_provider("mock:42:8")
        assert provider.dimension == 8

    def test_file_spec(self, tmp_path):
        provider = HashEmbeddingProvider(seed=11, dimension=24)
        embeddings = {r: embed_song(provider, make_record(r)) for r in ("a", "b")}
        path = tmp_path / "v.lyre"
        save_embedding_file(path, embeddings)
        table = resolve_provider(f"file:{path}")
        assert isinstance(table, PrecomputedEmbeddings)
        assert np.array_equal(table.lookup("a"), embeddings["a"].values)
        record = make_record("a")
        assert np.array_equal(embed_song(table, record).values, embeddings["a"].values)
        with pytest.raises(UnembeddableLyricsError):
            table.lookup("missing")

    def test_unknown_spec_rejected(self):
        with pytest.raises(ValueError):
            resolve_provider("magic:1")
