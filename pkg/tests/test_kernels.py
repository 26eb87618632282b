import os
import subprocess
import sys

import numpy as np
import pytest

from rmbo import _kernels as K

needs_numba = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")


@needs_numba
def test_max_gaussian_paths_agree(rng):
    means = rng.normal(size=(7, 3))
    stds = rng.uniform(0.1, 2, (7, 3))
    z = rng.standard_normal((50, 3))
    np.testing.assert_array_equal(K.max_gaussian_nb(means, stds, z), K.max_gaussian_np(means, stds, z))


@needs_numba
def test_ei_gumbel_paths_agree(rng):
    a = rng.normal(size=9)
    b = rng.uniform(0.1, 2, 9)
    best = rng.normal(size=9)
    base = rng.gumbel(size=400)
    np.testing.assert_allclose(K.ei_gumbel_nb(a, b, best, base), K.ei_gumbel_np(a, b, best, base), rtol=1e-12)


@needs_numba
def test_sqdist_paths_agree(rng):
    X1, X2 = rng.random((6, 4)), rng.random((8, 4))
    ls = rng.uniform(0.2, 2, 4)
    np.testing.assert_allclose(K.scaled_sqdist_nb(X1, X2, ls), K.scaled_sqdist_np(X1, X2, ls), rtol=1e-13)


@needs_numba
def test_gumbel_fit_paths_agree(rng):
    S = np.vstack([
        rng.gumbel(0.5, 1.3, (10, 1000)),
        np.max(rng.normal(size=(10, 1000, 2)), axis=2),
        np.full((1, 1000), 2.0),
    ])
    a_nb, b_nb, s_nb = K.gumbel_fit_nb(S)
    a_np, b_np, s_np = K.gumbel_fit_np(S)
    np.testing.assert_array_equal(s_nb, s_np)
    assert s_np[-1] == K.FIT_DEGENERATE
    np.testing.assert_allclose(a_nb, a_np, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(b_nb, b_np, rtol=1e-9)


def test_gumbel_fit_stationary(rng):
    # the fitted scale solves beta = mean(g) - weighted mean(g)
    s = rng.gumbel(-1.0, 0.3, 3000)
    alpha, beta, status = K.gumbel_fit_np(s[None])
    w = np.exp(-(s - s.min()) / beta[0])
    assert status[0] == K.FIT_OK
    assert beta[0] == pytest.approx(s.mean() - np.sum(w * s) / np.sum(w), rel=1e-8)
    assert alpha[0] == pytest.approx(-beta[0] * np.log(np.mean(np.exp(-s / beta[0]))), rel=1e-8)


def test_public_names_follow_flag():
    if K.USE_NUMBA:
        assert K.BACKEND == "numba"
    else:
        assert K.gumbel_fit is K.gumbel_fit_np


def _backend_in_subprocess(flag):
    env = dict(os.environ, RMBO_DISABLE_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from rmbo import _kernels; print(_kernels.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return out.stdout.strip()


def test_env_flag_selects_numpy():
    assert _backend_in_subprocess("1") == "numpy"


@needs_numba
def test_default_is_numba():
    assert _backend_in_subprocess("0") == "numba"


def test_numpy_backend_run_matches(tmp_path):
    # a short multi-surrogate run gives the same trace under both backends
    code = (
        "import numpy as np\n"
        "from rmbo.problems import make_problem\n"
        "from rmbo.scalarization import PreferenceSpec\n"
        "from rmbo.driver import RunConfig, run\n"
        "from rmbo.ga import GAConfig\n"
        "p = make_problem('DTLZ2', 3, 2)\n"
        "pref = PreferenceSpec([0.5, 0.5], p.ideal, p.nadir)\n"
        "t = run(RunConfig(p, pref, initial_size=8, budget=10, gp_restarts=2, n_mc=100,\n"
        "        n_gumbel_fit=100, ga=GAConfig(population_size=10, generations=5)))\n"
        "np.save(r'{out}', t.X)\n"
    )
    paths = {}
    for flag in ("0", "1"):
        paths[flag] = tmp_path / f"x{flag}.npy"
        env = dict(os.environ, RMBO_DISABLE_NUMBA=flag)
        subprocess.run([sys.executable, "-c", code.format(out=paths[flag])], env=env, check=True)
    np.testing.assert_allclose(np.load(paths["0"]), np.load(paths["1"]), rtol=1e-8, atol=1e-10)
