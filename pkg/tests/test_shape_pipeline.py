import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdsphere.errors import ValidationError
from hdsphere.shape_pipeline import (RayDataset, analyze, baseline_mode, hemisphere_directions,
                                     ingest_rays, normalize, pc_extremes, planted_spectrum,
                                     synth_rays, write_rays)


@pytest.fixture(scope="module")
def small():
    p, n = 2000, 40
    ds = synth_rays(p, n, planted_spectrum(p, [0.06, 0.03]), seed=1)
    return ds, analyze(normalize(ds))


def test_ingest_toy_csv(tmp_path):
    f = tmp_path / "rays.csv"
    f.write_text("1,2,3\n4,5,6\n")
    ds = ingest_rays(f)
    assert (ds.p, ds.n) == (3, 2)
    np.testing.assert_array_equal(ds.lengths[:, 1], [4, 5, 6])


def test_ingest_rejects_zero_length_with_row(tmp_path):
    f = tmp_path / "rays.csv"
    f.write_text("1,2,3\n4,0,6\n")
    with pytest.raises(ValidationError, match="row 2"):
        ingest_rays(f)


def test_ingest_rejects_ragged_rows(tmp_path):
    f = tmp_path / "rays.csv"
    f.write_text("1,2,3\n4,5\n")
    with pytest.raises(ValidationError, match="row 2"):
        ingest_rays(f)


def test_binary_csv_round_trip(tmp_path, small):
    ds, _ = small
    write_rays(ds, tmp_path / "r.bin")
    write_rays(ds, tmp_path / "r.csv")
    a = ingest_rays(tmp_path / "r.bin").lengths
    b = ingest_rays(tmp_path / "r.csv").lengths
    np.testing.assert_array_equal(a, ds.lengths)
    np.testing.assert_array_equal(b, ds.lengths)


def test_normalize_constant_rays():
    X = normalize(RayDataset(np.full((4, 1), 2.0)))
    np.testing.assert_allclose(X.data[:, 0], 0.5)
    assert X.meta["scales"][0] == pytest.approx(4.0)


def test_normalize_unit_columns(small):
    ds, _ = small
    X = normalize(ds)
    np.testing.assert_allclose(np.linalg.norm(X.data, axis=0), 1.0, atol=1e-12)


def test_scaling_one_subject_leaves_column_unchanged(small):
    ds, _ = small
    L = np.array(ds.lengths)
    L[:, 3] *= 7.0
    a = normalize(ds).data[:, 3]
    b = normalize(RayDataset(L)).data[:, 3]
    np.testing.assert_allclose(a, b, atol=1e-15)


def test_identical_columns():
    col = np.linspace(1, 2, 30)
    s = analyze(normalize(RayDataset(np.column_stack([col] * 5))))
    assert s.omega1 == pytest.approx(1.0, abs=1e-12)
    assert s.pcs.shape[1] == 0 and s.percents.size == 0


def test_analyze_needs_two_subjects():
    with pytest.raises(ValidationError):
        analyze(normalize(RayDataset(np.ones((5, 1)))))


def test_percents_sum_to_100(small):
    _, s = small
    assert s.percents.sum() == pytest.approx(100.0, abs=1e-8)


def test_planted_recovery_in_order(small):
    ds, s = small
    V = ds.truth["pcs"]
    assert abs(s.mode @ ds.truth["mode"]) > 0.999
    assert abs(s.pcs[:, 0] @ V[:, 0]) >= 0.95
    assert abs(s.pcs[:, 1] @ V[:, 1]) >= 0.95
    assert s.omega1 > 0.99


def test_zero_planted_pcs_gives_noise_floor():
    p = 1500
    ds = synth_rays(p, 30, planted_spectrum(p, []), seed=2)
    s = analyze(normalize(ds))
    assert s.omega1 > 0.9999
    # noise-only remainder: no dominant component
    assert s.percents[0] < 3 * 100 / (s.n - 1)


def test_mode_sign_convention(small):
    _, s = small
    assert np.all(s.mode > 0)


def test_dual_matches_direct_on_downsampled(small):
    ds, s = small
    X = normalize(ds).data
    w, V = np.linalg.eigh(X @ X.T / X.shape[1])
    w, V = w[::-1], V[:, ::-1]
    assert s.omega1 == pytest.approx(w[0], rel=1e-10)
    np.testing.assert_allclose(s.pc_variances[:5], w[1:6], rtol=1e-8)
    assert abs(s.mode @ V[:, 0]) >= 1 - 1e-10
    assert abs(s.pcs[:, 0] @ V[:, 1]) >= 1 - 1e-10


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_end_to_end_scale_invariance(seed):
    p, n = 400, 12
    ds = synth_rays(p, n, planted_spectrum(p, [0.05]), seed=3)
    c = np.exp(np.random.default_rng(seed).uniform(-5, 5, n))
    a = analyze(normalize(ds))
    b = analyze(normalize(RayDataset(ds.lengths * c)))
    assert abs(a.omega1 - b.omega1) < 1e-10
    assert np.max(np.abs(a.mode - b.mode)) < 1e-10
    assert np.max(np.abs(a.pcs - b.pcs)) < 1e-10
    assert np.max(np.abs(a.pc_variances - b.pc_variances)) < 1e-10
    assert np.max(np.abs(a.percents - b.percents)) < 1e-10


def test_pc_extremes_identities(small):
    _, s = small
    centre = np.sqrt(s.omega1) * s.mode
    plus, minus = pc_extremes(s, 2, 0.0)
    np.testing.assert_array_equal(plus, minus)
    np.testing.assert_allclose(plus, centre)
    plus, minus = pc_extremes(s, 2, 3.0)
    np.testing.assert_allclose(0.5 * (plus + minus), centre, atol=1e-15)
    d = plus - centre
    cos = d @ s.pcs[:, 0] / np.linalg.norm(d)
    assert cos == pytest.approx(1.0, abs=1e-12)


def test_pc_extremes_index_range(small):
    _, s = small
    with pytest.raises(ValidationError):
        pc_extremes(s, 1, 3.0)
    with pytest.raises(ValidationError):
        pc_extremes(s, s.pcs.shape[1] + 2, 3.0)


def test_mean_and_scaled_mode_nearly_coincide(small):
    _, s = small
    assert s.mean_mode_gap < 1e-3


def test_synth_rejects_large_deviations():
    p = 500
    with pytest.raises(ValidationError, match="nonpositive"):
        synth_rays(p, 20, planted_spectrum(p, [5.0]), seed=4)


def test_synth_rejects_non_orthogonal_components():
    from hdsphere.spectral import SpectrumModel
    p = 100
    mu = baseline_mode(p)
    bad = SpectrumModel(p=p, values=[0.01], vectors=mu[:, None], bulk=1e-4)
    with pytest.raises(ValidationError):
        synth_rays(p, 5, bad, seed=5)


def test_hemisphere_directions_are_unit_upper():
    D = hemisphere_directions(1000)
    np.testing.assert_allclose(np.linalg.norm(D, axis=1), 1.0)
    assert np.all(D[:, 2] >= 0)


def test_full_scale_runtime_and_recovery():
    p, n = 62501, 74
    ds = synth_rays(p, n, planted_spectrum(p, [0.05]), seed=6)
    t = time.perf_counter()
    s = analyze(normalize(ds))
    assert time.perf_counter() - t < 10.0
    assert abs(s.pcs[:, 0] @ ds.truth["pcs"][:, 0]) >= 0.95
