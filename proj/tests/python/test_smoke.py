import json
import math

import numpy as np
import pytest

import fracshape as fs


def pair_energy(grid, s, u):
    x = np.asarray(grid.cell_centers())[:, : grid.dim]
    h = grid.h
    total = 0.0
    for i in range(len(u)):
        r = np.linalg.norm(x[i + 1 :] - x[i], axis=1)
        total += np.sum(h ** (2 * grid.dim) * (u[i + 1 :] - u[i]) ** 2 / r ** (grid.dim + 2 * s))
    return total


def test_normalization_constant_closed_form():
    for s in (0.2, 0.5, 0.8):
        ref = s * 4**s * math.gamma((1 + 2 * s) / 2) / (math.sqrt(math.pi) * math.gamma(1 - s))
        assert fs.normalization_constant(s, 1) == pytest.approx(ref, rel=1e-8)


def test_gagliardo_against_numpy_loop():
    g = fs.build_grid(1, 1.0, 32)
    op = fs.assemble_stiffness(g, 0.4)
    u = np.random.default_rng(0).normal(size=g.cell_count)
    ref = pair_energy(g, 0.4, u) + np.sum(op.tail * u**2)
    assert fs.gagliardo_sq(op, u) == pytest.approx(ref, rel=1e-12)
    assert np.allclose(op.matrix, op.matrix.T)


def test_spectrum_and_torsion_against_dense():
    g = fs.build_grid(1, 1.0, 40)
    op = fs.assemble_stiffness(g, 0.5)
    mask = [1 if 5 <= i < 30 else 0 for i in range(g.cell_count)]
    values, vectors, residuals = fs.eigenpairs(op, mask, 2)
    idx = [i for i, b in enumerate(mask) if b]
    sub = op.matrix[np.ix_(idx, idx)]
    dense = np.linalg.eigvalsh(sub) / g.h
    assert values == pytest.approx(dense[:2], rel=1e-8)
    assert max(residuals) <= 1e-8
    assert vectors.shape == (g.cell_count, 2)
    w = fs.solve_torsion(op, mask)
    ref = np.linalg.solve(sub, np.full(len(idx), g.h))
    assert np.allclose(w[idx], ref, rtol=1e-9)


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        fs.assemble_stiffness(fs.build_grid(1, 1.0, 8), 1.5)
    with pytest.raises(ValueError):
        fs.eval_functional("lambda1 +", fs.assemble_stiffness(fs.build_grid(1, 1.0, 8), 0.5), [1] * 8)


def test_two_ball_and_classifier():
    g = fs.build_grid(1, 64.0, 128)
    op = fs.assemble_stiffness(g, 0.5)
    rows = fs.two_ball_experiment(op, 16.0, [2.0, 8.0])
    assert rows[0]["gap"] > rows[1]["gap"] > 0.0
    verdict, alpha = fs.classify_family("separating-pair", seed=3, bump_mass=0.4)
    assert verdict == "dichotomy"
    assert alpha == pytest.approx(0.4, rel=0.05)
    assert fs.classify_family("flattening-bump", seed=3)[0] == "vanishing"


def test_minimize_and_lieb():
    g = fs.build_grid(1, 8.0, 32)
    op = fs.assemble_stiffness(g, 0.5)
    cells, value, values = fs.minimize_shape("lambda1", op, 4.0, 300, seed=2)
    assert sum(cells) == 8
    assert all(a >= b for a, b in zip(values, values[1:]))
    a = [1 if 2 <= i < 8 else 0 for i in range(32)]
    b = [1 if 20 <= i < 28 else 0 for i in range(32)]
    r = fs.lieb_translation_search(op, a, b)
    assert r["satisfied"] and r["lambda1_intersection"] <= r["bound"]
    assert "dunford" in fs.list_checks()


def test_run_experiment_is_reproducible(tmp_path):
    cfg = {
        "kind": "eig",
        "grid": {"dim": 1, "half_width": 1.0, "resolution": 24},
        "k": 2,
    }
    hashes = []
    for name in ("a", "b"):
        cfg["output_dir"] = str(tmp_path / name)
        passed, files = fs.run_experiment(json.dumps(cfg))
        assert passed
        hashes.append(files)
    assert hashes[0] == hashes[1]
    assert (tmp_path / "a" / "manifest.json").exists()
