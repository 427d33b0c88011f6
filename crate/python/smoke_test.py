"""Smoke test for the hdc_py extension.

Build and install first, e.g.:
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml
    pip install target/wheels/hdc_py-*.whl
"""

import os
import tempfile

import hdc_py


def main():
    # Level vectors: endpoints of a full budget are orthogonal.
    budget = hdc_py.FlipBudget(64, 5, [[8, 8, 8, 8]])
    levels = budget.level_vectors(seed=1, n=0)
    assert len(levels) == 5 and levels[0].dot(levels[-1]) == 0
    assert hdc_py.FlipBudget.uniform(1000, 1, 10).rows() == [[55] * 9]

    data = hdc_py.Dataset.motivational(grid=20, seed=0)
    assert (data.samples, data.features, data.classes) == (400, 2, 4)

    q = hdc_py.Quantizer.calibrate(data, 20)
    assert q.quantize([0.0, 1.0]) == [0, 19]

    baseline = hdc_py.TrainedModel.train(data, dim=512, levels=20, seed=0)
    m = baseline.evaluate(data)
    assert 0.0 < m.w_acc < 1.0
    assert m.total_accuracy == sum(m.confusion[k][k] for k in range(4)) / 400
    label, sims = baseline.classify([0.1, 0.1])
    assert label in data.label_names and len(sims) == 4

    front = hdc_py.optimize(data, dim=64, levels=20, population=40, generations=20, seed=3)
    members = front.members()
    assert len(front) == len(members) > 0
    for a in members:
        assert a.budget.is_feasible()
        for b in members:
            assert not (b.w_acc >= a.w_acc and b.avg_sim <= a.avg_sim
                        and (b.w_acc > a.w_acc or b.avg_sim < a.avg_sim))
    best = front.model(0, data)
    assert abs(best.evaluate(data).w_acc - members[0].w_acc) < 1e-12
    assert hdc_py.evaluate_budget(members[0].budget, data, seed=front.seed)[0] == members[0].w_acc

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "best.hdcm")
        best.save(path)
        assert os.path.getsize(path) == best.serialized_size
        loaded = hdc_py.TrainedModel.load(path)
        assert loaded.predict(data) == best.predict(data)
        front.write_csv(os.path.join(tmp, "front.csv"))
        try:
            hdc_py.Dataset.load_csv(os.path.join(tmp, "missing.csv"))
            raise AssertionError("expected an IOError")
        except IOError:
            pass

    assert hdc_py.weighted_accuracy([[4, 0], [2, 2]]) == 0.75
    assert abs(hdc_py.avg_similarity([[1, 0], [1, 0]]) - 1.0) < 1e-12
    assert hdc_py.appendix_experiment(dim=1024, trials=50, mode="chained") >= 0.9

    print(f"hdc_py smoke test passed: baseline wAcc {m.w_acc:.3f}, "
          f"optimized wAcc {members[0].w_acc:.3f} with {len(members)} front members")


if __name__ == "__main__":
    main()
