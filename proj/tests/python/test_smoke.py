import json
import math
import os
import tempfile

import numpy as np
import pytest

import nlab


def scratch(name):
    base = os.environ.get("NLAB_TMP") or tempfile.gettempdir()
    path = os.path.join(base, name)
    os.makedirs(path, exist_ok=True)
    return path


def test_constant_is_annihilated():
    g = nlab.Grid(0.25, 3.0)
    L = nlab.build_stencil(nlab.Kernel.indicator(), 0.25)
    Lu = nlab.apply(L, nlab.Field.constant(g, 2.5)).values()
    assert Lu.shape == (g.n, g.n)
    assert np.all(Lu == 0.0)


def test_quadratic_gives_minus_the_moment():
    g = nlab.Grid(0.1, 4.0)
    L = nlab.build_stencil(nlab.Kernel.indicator(), 0.1)
    t = g.coordinates()
    X1, X2 = np.meshgrid(t, t)  # rows are x2
    # zero farfield is wrong for |x|^2, so only look well inside the square
    u = nlab.Field.from_array(g, X1**2 + X2**2, 0.0)
    Lu = nlab.apply(L, u).values()
    inner = X1**2 + X2**2 < (g.S - 1.5) ** 2
    assert np.allclose(Lu[inner], -L.second_moment(), rtol=1e-10)
    assert abs(L.second_moment() - math.pi / 2) / (math.pi / 2) < 0.05


def test_summation_by_parts():
    g = nlab.Grid(0.25, 3.0)
    L = nlab.build_stencil(nlab.Kernel.fractional(0.5), 0.25)
    rng = np.random.default_rng(3)
    v = np.zeros((g.n, g.n))
    w = np.zeros((g.n, g.n))
    v[4:-4, 4:-4] = rng.uniform(-1, 1, (g.n - 8, g.n - 8))
    w[4:-4, 4:-4] = rng.uniform(-1, 1, (g.n - 8, g.n - 8))
    fv = nlab.Field.from_array(g, v, 0.0)
    fw = nlab.Field.from_array(g, w, 0.0)
    lhs = float(np.sum(v * nlab.apply(L, fw).values())) * g.h**2
    assert lhs == pytest.approx(0.5 * nlab.bilinear_B(L, fv, fw), rel=1e-12)


def test_small_layer_and_extension():
    L = nlab.build_stencil(nlab.Kernel.indicator(), 0.1)
    r = nlab.solve_layer_1d(nlab.marginal_stencil(L, 2), "allen-cahn", 0.1, 20.0)
    assert r["residual_inf"] <= 1e-10
    assert r["strictly_increasing"]
    w = r["profile"].values()
    assert np.allclose(w, -w[::-1], atol=1e-8)

    g = nlab.Grid(0.1, 4.0)
    u = nlab.extend_to_2d(r["profile"], (0.0, 1.0), g)
    s = nlab.solve_2d(L, u)
    assert s["residual_inf"] <= 1e-9
    assert s["monotone_axis"] == 2
    sweep = nlab.lambda_sweep(L, s["u"], [2.0, 3.0])
    assert all(lam >= -1e-6 for _, lam in sweep)
    phi = nlab.centered_derivative(s["u"], 2)
    v = nlab.symmetry_verdict(L, s["u"], phi)
    assert v["is_1d"]


def test_unstable_constant_raises():
    g = nlab.Grid(0.2, 8.0)
    L = nlab.build_stencil(nlab.Kernel.indicator(), 0.2)
    with pytest.raises(nlab.StabilityViolation):
        nlab.construct_phi(L, nlab.Field.constant(g, 0.0), [7.0])


def test_pipeline_without_stages():
    out = scratch("py-none")
    code, text = nlab.run_pipeline("stages = none\n", out)
    assert code == 0
    manifest = json.loads(text)
    assert manifest["stages"] == []
    with open(os.path.join(out, "manifest.json")) as f:
        assert f.read() == text


def test_config_errors_surface():
    with pytest.raises(nlab.InvalidArgument, match="config line 1"):
        nlab.run_pipeline("bogus = 1\n", scratch("py-bad"))
