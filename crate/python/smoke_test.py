"""Exercise the emp extension module end to end.

Build first:  pip install --no-build-isolation -e crates/py
"""

import math
import pathlib
import tempfile

import emp

ROOT = pathlib.Path(__file__).resolve().parent.parent


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def scores():
    d = emp.decide([3, 1, 1, 1])
    assert (d.n, d.n_eff, d.keep_count) == (4, 3, 3), d
    assert close(d.s_eff, 5 / 6)
    assert d.mask == [True, True, True, False]
    assert close(d.sparsity, 0.25)
    assert emp.effective_number([1, 1, 1, 1]) == 4
    assert emp.keep_count(3, 2.0, 4) == 4
    assert emp.combine_min([3, -1], [2, 5]) == [2, 1]

    p = emp.decide_partitioned([3, 1, 1, 1, 5, 5], [[0, 1, 2, 3], [4, 5]])
    assert p["kept_indices"] == [0, 1, 2, 4, 5], p
    assert len(p["decisions"]) == 2

    try:
        emp.decide([0, 0])
    except ValueError as e:
        assert "zero" in str(e)
    else:
        raise AssertionError("all-zero scores accepted")


def bounds_and_geometry():
    assert close(emp.tight_lower_bound(5, 2), 0.6449489742783178, 1e-12)
    assert close(emp.trivial_lower_bound(10, 3), 0.3)
    rows = emp.bound_sweep(10)
    assert len(rows) == 10 and rows[-1]["tight"] == 1.0
    assert close(emp.lemma_bound(0.5, 100, 10.0, 4.0), 0.2)
    assert emp.asymptotic_bound(0.5, 100, 1.0, 10.0) > 0

    p = emp.extremal_point(8, 3)
    assert close(sum(p), 1.0)
    assert close(emp.phi(p, 3), emp.tight_lower_bound(8, 3))

    report = emp.verify_proposition(5, seed=1)
    assert report["failures"] == 0, report
    cell = emp.certify_tight_bound(6, 3, 2000, seed=2)
    assert cell["violations"] == 0 and cell["min_slack"] >= -1e-12


def images():
    photo = emp.Image.read(ROOT / "fixtures" / "photo.png")
    g = emp.prune_image(photo)
    t = emp.prune_image(photo, mode="patch", patch=4)
    assert 0 < g.sparsity < 1 and 0 < t.sparsity < 1
    assert t.ssim >= g.ssim
    orig, pruned = photo.to_bytes(), g.pruned.to_bytes()
    for c in range(3):
        for i, keep in enumerate(g.masks[c]):
            if keep:
                assert pruned[3 * i + c] == orig[3 * i + c]
    assert close(photo.ssim(g.pruned), g.ssim)
    assert photo.psnr(photo) == math.inf

    flat = emp.Image(2, 2, [7] * 12)
    assert emp.prune_image(flat).sparsity == 0.0
    with tempfile.TemporaryDirectory() as tmp:
        out = pathlib.Path(tmp) / "p.png"
        t.pruned.write(out)
        assert emp.Image.read(out).to_bytes() == t.pruned.to_bytes()
    assert (photo.width, photo.height) == (96, 64)


def network():
    data = emp.Dataset.blobs(per_class=100, classes=2, dim=2, spread=1.0, seed=7)
    assert len(data) == 200 and data.dim == 2
    net = emp.DenseNet([2, 16, 2], seed=7)
    history = net.fit(data, epochs=200, seed=7)
    assert len(history) == 200 and history[-1] < history[0]
    assert net.accuracy(data) >= 0.95
    trace, se = net.trace_h(data, probes=20, seed=1)
    assert trace > 0 and se >= 0
    rows = net.sweep(data, [0.5, 1.0, 2.0], trace_h=trace)
    assert len(rows) == 6
    for r in rows:
        assert r["epsilon"] >= 0 and 0 <= r["sparsity"] < 1
    at_one = [r for r in rows if r["beta"] == 1.0]
    assert all(r["epsilon"] <= 0.15 for r in at_one)

    with tempfile.TemporaryDirectory() as tmp:
        stem = pathlib.Path(tmp) / "net"
        net.save(stem)
        again = emp.DenseNet.load(stem)
        assert again.params() == net.params()
        assert again.arch == [2, 16, 2]


if __name__ == "__main__":
    for check in (scores, bounds_and_geometry, images, network):
        check()
        print(f"ok  {check.__name__}")
    print(f"emp {emp.__version__}: all smoke checks passed")
