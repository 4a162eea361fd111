"""Smoke test for the `mtasa` extension module.

Build and install first:  pip install --no-build-isolation -e crates/python
Then run:                  python python/smoke_test.py
"""

import csv
import math
import os
import tempfile

import numpy as np

import mtasa


def shifted(rows, d):
    n = len(rows)
    return [rows[(t - d) % n] for t in range(n)]


def check_spectral(rng):
    x = rng.normal(size=13)
    spectrum = mtasa.dft(list(x))
    assert np.allclose(spectrum, np.fft.fft(x), atol=1e-9)
    assert np.allclose(mtasa.idft(spectrum), x, atol=1e-9)
    h = rng.normal(size=13)
    direct = [sum(h[k] * x[(k + c) % 13] for k in range(13)) for c in range(13)]
    assert np.allclose(mtasa.circular_cross_correlation(list(h), list(x)), direct, atol=1e-9)
    conv = np.real(np.fft.ifft(np.fft.fft(h) * np.fft.fft(x)))
    assert np.allclose(mtasa.circular_convolution(list(h), list(x)), conv, atol=1e-9)
    coeffs = mtasa.haar_dwt([1.0, 3.0, 2.0, 2.0])
    assert np.allclose(coeffs, [4 / math.sqrt(2), 4 / math.sqrt(2), -2 / math.sqrt(2), 0.0])


def check_distances():
    assert mtasa.dtw_distance([0.0, 1.0, 2.0], [0.0, 1.0, 1.0, 2.0]) == 0.0
    assert math.isclose(mtasa.euclidean_distance([0.0, 0.0], [3.0, 4.0]), 5.0)


def check_alignment(rng):
    n = 10
    tone = [math.cos(2 * math.pi * t / n + 0.3) for t in range(n)]
    value, path = mtasa.rotation_coefficient(tone, shifted(tone, 3))
    assert (value, path) == (3, "dft_shifting"), (value, path)
    value, path = mtasa.rotation_coefficient(tone, shifted(tone, 3), fast_path=False)
    assert (value, path) == (3, "cross_correlation"), (value, path)


def check_pipeline(rng):
    n, names = 12, ["temp", "rain"]
    query_rows = [list(r) for r in rng.uniform(size=(n, 2))]
    instances = [shifted(query_rows, d) for d in range(4)]
    instances.append([list(r) for r in rng.uniform(size=(n, 2))])
    gap = [list(r) for r in rng.uniform(size=(n, 2))]
    gap[5][1] = float("nan")
    instances.append(gap)
    ids = ["s0", "s1", "s2", "s3", "noise", "gap"]

    dataset = mtasa.Dataset(instances, ids, names)
    query = mtasa.Query(query_rows, names)
    assert dataset.shape == (6, n, 2)
    assert dataset.valid_instances() == [0, 1, 2, 3, 4]

    config = mtasa.Config(names, [0.6, 0.4], workers=2)
    result = mtasa.assess(dataset, query, config)
    assert len(result) == 6
    assert result.rotation_array == [0, 1, 2, 3, result.rotation_array[4], None]
    assert result.similarity_array[:4] == [1.0, 1.0, 1.0, 1.0]
    assert result.similarity_array[4] < 1.0
    assert result.status[-1] == "missing_data"
    assert result.valid_count == 5

    top = mtasa.assess(dataset, query, mtasa.Config(names, [0.6, 0.4], top_k=2))
    assert top.status.count("ok") == 2

    for bad in (dict(weights=[0.5, 0.6]), dict(weights=[0.5, 0.5], top_k=1, absolute_threshold=0.2)):
        try:
            mtasa.Config(names, **bad)
        except ValueError:
            pass
        else:
            raise AssertionError(f"accepted {bad}")

    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "out.csv")
        result.write_csv(out)
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["instance_id", "rotation", "similarity", "raw_distance", "status"]
        assert [r[0] for r in rows[1:]] == ids

        data_path = os.path.join(tmp, "data.csv")
        with open(data_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["instance_id", "time_index", *names])
            for iid, rows_ in zip(ids, instances):
                for t, (a, b) in enumerate(rows_):
                    w.writerow([iid, t, a, "NA" if math.isnan(b) else b])
        loaded = mtasa.Dataset.from_csv(data_path, names)
        assert loaded.instance_ids == ids
        again = mtasa.assess(loaded, query, config)
        assert again.rotation_array == result.rotation_array


def main():
    rng = np.random.default_rng(7)
    check_spectral(rng)
    check_distances()
    check_alignment(rng)
    check_pipeline(rng)
    print("mtasa smoke test passed")


if __name__ == "__main__":
    main()
