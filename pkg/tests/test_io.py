import numpy as np
import pytest

from afbm.io import ArtifactError, read_csv, read_paths, write_csv, write_paths
from afbm.sampler import AfbmSampler, YSampler


def test_csv_round_trip_is_exact(tmp_path):
    vals = np.random.default_rng(1).standard_normal(50) * 10.0 ** np.arange(-25, 25)
    rows = [{"i": i, "word": "12", "x": v} for i, v in enumerate(vals)]
    path = write_csv(tmp_path / "a.csv", rows)
    back = read_csv(path)
    assert [r["x"] for r in back] == list(vals)
    assert back[0]["word"] == "12" and back[3]["i"] == 3
    assert path.read_text().startswith("i,word,x\n")


def test_paths_round_trip(tmp_path):
    for sampler in (AfbmSampler(alpha=0.3, epsilon_shift=0.1, n_components=2), YSampler(alpha=0.6)):
        p = sampler.fit(np.linspace(0, 1, 5)).sample(7, seed=2**40 + 3)
        q = read_paths(write_paths(tmp_path / "p.bin", p))
        assert np.array_equal(p.values, q.values) and np.array_equal(p.points, q.points)
        assert q.seed == 2**40 + 3 and q.hurst == p.hurst and q.epsilon_shift == p.epsilon_shift


def test_bad_artifacts(tmp_path):
    with pytest.raises(ArtifactError):
        read_paths(tmp_path / "missing.bin")
    (tmp_path / "junk.bin").write_bytes(b"NOTAPATHFILE")
    with pytest.raises(ArtifactError):
        read_paths(tmp_path / "junk.bin")
    with pytest.raises(ArtifactError):
        read_csv(tmp_path / "missing.csv")
