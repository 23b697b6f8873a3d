import numpy as np
import pytest

from dmner import _kernels

from oracles import exhaustive_nearest


def unit_rows(rng, n, d):
    m = rng.standard_normal((n, d))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


@pytest.fixture(params=_kernels.available_backends())
def backend(request):
    _kernels.use_backend(request.param)
    yield request.param
    _kernels.use_backend("auto")


def test_native_backend_was_built():
    # the extension is part of the build; fail loudly if it is missing
    assert "native" in _kernels.available_backends()


class TestNearestScan:
    def test_matches_oracle(self, backend):
        rng = np.random.default_rng(31)
        queries = unit_rows(rng, 40, 16)
        entries = unit_rows(rng, 25, 16)
        idx, sims = _kernels.nearest_scan(queries, entries)
        oracle_idx, oracle_sims = exhaustive_nearest(queries, entries)
        assert idx.tolist() == oracle_idx
        assert np.allclose(sims, oracle_sims, atol=1e-9)

    def test_tie_breaks_to_lowest_index(self, backend):
        v = unit_rows(np.random.default_rng(1), 1, 8)[0]
        entries = np.stack([v * 0.0 + np.roll(v, 1), v, v])  # duplicates at 1 and 2
        idx, sims = _kernels.nearest_scan(v[None, :], entries)
        assert idx[0] == 1

    def test_empty_queries(self, backend):
        entries = unit_rows(np.random.default_rng(2), 3, 8)
        idx, sims = _kernels.nearest_scan(np.empty((0, 8)), entries)
        assert idx.shape == (0,) and sims.shape == (0,)

    def test_empty_entries_rejected(self, backend):
        with pytest.raises(ValueError, match="non-empty"):
            _kernels.nearest_scan(np.empty((1, 8)), np.empty((0, 8)))

    def test_dim_mismatch_rejected(self, backend):
        with pytest.raises(ValueError, match="mismatch"):
            _kernels.nearest_scan(np.empty((1, 8)), np.empty((1, 16)))


class TestBackendParity:
    def test_same_indices_and_close_sims(self):
        if "native" not in _kernels.available_backends():
            pytest.skip("extension not built")
        rng = np.random.default_rng(77)
        queries = unit_rows(rng, 200, 32)
        entries = unit_rows(rng, 150, 32)
        _kernels.use_backend("numpy")
        idx_np, sims_np = _kernels.nearest_scan(queries, entries)
        _kernels.use_backend("native")
        idx_nat, sims_nat = _kernels.nearest_scan(queries, entries)
        _kernels.use_backend("auto")
        assert np.array_equal(idx_np, idx_nat)
        assert np.allclose(sims_np, sims_nat, atol=1e-12)

    def test_matvec_parity(self):
        if "native" not in _kernels.available_backends():
            pytest.skip("extension not built")
        rng = np.random.default_rng(78)
        mat = unit_rows(rng, 64, 24)
        vec = unit_rows(rng, 1, 24)[0]
        _kernels.use_backend("numpy")
        a = _kernels.matvec(mat, vec)
        _kernels.use_backend("native")
        b = _kernels.matvec(mat, vec)
        _kernels.use_backend("auto")
        assert np.allclose(a, b, atol=1e-12)


def test_unknown_backend_rejected():
    from dmner.errors import ConfigError

    with pytest.raises(ConfigError):
        _kernels.use_backend("cuda")


def test_refinement_identical_across_backends(toy_dir):
    """Both backends drive refinement to the same dictionary and trace
    on the fixture (no mathematically-tied decisions there)."""
    if "native" not in _kernels.available_backends():
        pytest.skip("extension not built")
    from dmner.corpus import parse_iob
    from dmner.dictionary import load_dictionary, parse_kb
    from dmner.embedding import HashedEncoder
    from dmner.refine import DevExample, RefinementConfig, refine

    with open(toy_dir / "dict_init.tsv", encoding="utf-8") as fh:
        d_init = load_dictionary(fh)
    with open(toy_dir / "kb.tsv", encoding="utf-8") as fh:
        kb, _ = parse_kb(fh)
    with open(toy_dir / "dev.iob", encoding="utf-8") as fh:
        dev = [DevExample(e.surface, e.entity_type) for e in parse_iob(fh).gold]
    config = RefinementConfig(threshold_t=1, iterations=4, batch_size=8, rng_seed=42)

    results = {}
    for name in ("numpy", "native"):
        _kernels.use_backend(name)
        results[name] = refine(d_init, kb, dev, HashedEncoder(64), config)
    _kernels.use_backend("auto")
    assert results["numpy"][0] == results["native"][0]
    assert results["numpy"][1] == results["native"][1]
