"""Analytic self-checks runnable from the CLI.

Each check compares the library against a value known in closed form or by
exhaustive enumeration.  Tolerances live in a module-level dict so they are
visible and adjustable in one place.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .gp import HyperParams, cov_matrix, gaussian_entropy, log_likelihood
from .metrics import kl_gm_mc
from .mixture import GaussianMixture
from .regions import greedy_entropy_discrete

TOLERANCES = {
    "gaussian_entropy_closed_forms": 1e-9,
    "entropy_chain_rule": 1e-9,
    "log_likelihood_closed_forms": 1e-9,
    "kl_gaussian_closed_forms": 0.02,   # relative, n = 1e5 samples
    "greedy_bound": 0.0,                # violations allowed
}


def _check_entropy_closed_forms():
    half_ln_2pie = 0.5 * (1.0 + math.log(2.0 * math.pi))
    cases = [
        (np.array([[1.0]]), half_ln_2pie),
        (np.eye(2), 2.0 * half_ln_2pie),
        (np.array([[4.0]]), half_ln_2pie + math.log(2.0)),
    ]
    tol = TOLERANCES["gaussian_entropy_closed_forms"]
    worst = max(abs(gaussian_entropy(s) - want) for s, want in cases)
    return worst <= tol, f"max error {worst:.3e} (tol {tol:g})"


def _check_chain_rule():
    rng = np.random.default_rng(12345)
    worst = 0.0
    for _ in range(5):
        A = rng.standard_normal((6, 6))
        sigma = A @ A.T + 6 * np.eye(6)
        h_full = gaussian_entropy(sigma)
        na = 2
        s_aa = sigma[:na, :na]
        s_ab = sigma[:na, na:]
        s_bb = sigma[na:, na:]
        schur = s_aa - s_ab @ np.linalg.solve(s_bb, s_ab.T)
        h_sum = gaussian_entropy(s_bb) + gaussian_entropy(schur)
        worst = max(worst, abs(h_full - h_sum))
    tol = TOLERANCES["entropy_chain_rule"]
    return worst <= tol, f"max error {worst:.3e} (tol {tol:g})"


def _check_log_likelihood():
    theta = HyperParams(1.0, 0.0, (1.0, 1.0))
    x = [(0.0, 0.0)]
    want0 = -0.5 * math.log(2.0 * math.pi)
    err = max(abs(log_likelihood([0.0], x, theta) - want0),
              abs(log_likelihood([1.0], x, theta) - (want0 - 0.5)))
    tol = TOLERANCES["log_likelihood_closed_forms"]
    return err <= tol, f"max error {err:.3e} (tol {tol:g})"


def _gauss1(mean, var):
    return GaussianMixture(weights=[1.0], means=[[mean]], covs=[[[var]]])


def _check_kl_closed_forms():
    tol = TOLERANCES["kl_gaussian_closed_forms"]
    cases = [
        (_gauss1(0.0, 1.0), _gauss1(1.0, 1.0), 0.5),
        (_gauss1(0.0, 1.0), _gauss1(0.0, 4.0), 0.5 * (math.log(4.0) + 0.25 - 1.0)),
    ]
    worst = 0.0
    for i, (p, q, want) in enumerate(cases):
        est = kl_gm_mc(p, q, n=100_000, seed=77 + i).value
        worst = max(worst, abs(est - want) / want)
    return worst <= tol, f"max relative error {worst:.4f} (tol {tol:g})"


def _check_greedy_bound():
    rng = np.random.default_rng(2024)
    theta = HyperParams(1.0, 0.4, (0.3, 0.3))
    n_pick = 3
    bound = 1.0 - ((n_pick - 1) / n_pick) ** n_pick
    violations = 0
    for _ in range(20):
        cands = rng.uniform(0.0, 1.0, size=(10, 2))
        _, greedy_h = greedy_entropy_discrete(cands, n_pick, theta)
        best = max(gaussian_entropy(cov_matrix(cands[list(sub)], theta))
                   for sub in itertools.combinations(range(10), n_pick))
        if greedy_h < bound * best - 1e-12:
            violations += 1
    allowed = TOLERANCES["greedy_bound"]
    return violations <= allowed, f"{violations} violations over 20 instances"


CHECKS = (
    ("gaussian_entropy_closed_forms", _check_entropy_closed_forms),
    ("entropy_chain_rule", _check_chain_rule),
    ("log_likelihood_closed_forms", _check_log_likelihood),
    ("kl_gaussian_closed_forms", _check_kl_closed_forms),
    ("greedy_bound", _check_greedy_bound),
)


def run_selftest(out=print) -> int:
    """Run every check in stable order; returns 0 if all pass."""
    failures = 0
    for name, fn in CHECKS:
        ok, detail = fn()
        out(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        if not ok:
            failures += 1
    return 0 if failures == 0 else 1
