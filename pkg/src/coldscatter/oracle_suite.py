"""Quick oracle checks behind ``coldscatter oracle``."""

from __future__ import annotations

import numpy as np

from .kernel import build_self_energy
from .oracles import match_eigenvalues, single_atom_cross_section, two_atom_eigenvalues
from .solver import (
    EigenCache,
    differential_cross_section,
    extinction_cross_section,
    solve_excitation,
    source_vector,
    total_cross_section,
)
from .units import geometry_for_figure


def _single_atom():
    pos = np.zeros((1, 3))
    sigma = build_self_energy(pos)
    g = geometry_for_figure()
    worst = 0.0
    for d in np.linspace(-5, 5, 11):
        x = solve_excitation(sigma, d, source_vector(pos, g.k_in, g.e_in))
        tot = total_cross_section(x, pos, 80, 80)
        worst = max(worst, abs(tot / single_atom_cross_section(d) - 1))
    fwd = differential_cross_section(sigma, pos, g, 0.0).dsigma_domega
    worst_fwd = abs(fwd - 2.25)
    return ("single atom: integrated sigma vs 6pi/(4D^2+1)", worst, 1e-3), (
        "single atom: dsigma/dOmega at resonance = 9/4", worst_fwd, 1e-10)


def _two_atom():
    worst = 0.0
    for r in (0.3, 1.0, 3.0, 10.0):
        sigma = build_self_energy(np.array([[0, 0, 0], [0, 0, r]], dtype=float))
        worst = max(worst, match_eigenvalues(two_atom_eigenvalues(r).all(), np.linalg.eigvals(sigma)))
    return ("two atoms: eigenvalues vs closed form", worst, 1e-12)


def _invariants(rng):
    worst_sym, worst_tr, worst_im = 0.0, 0.0, -np.inf
    for _ in range(100):
        n = int(rng.integers(1, 9))
        pos = rng.normal(size=(n, 3)) * rng.uniform(0.3, 3.0)
        s = build_self_energy(pos)
        worst_sym = max(worst_sym, np.abs(s - s.T).max())
        worst_tr = max(worst_tr, abs(np.trace(s).imag + 1.5 * n))
        worst_im = max(worst_im, np.linalg.eigvals(s).imag.max())
    return [
        ("matrix: max |Sigma - Sigma^T|", worst_sym, 0.0),
        ("matrix: |Im tr Sigma + 3N/2|", worst_tr, 0.0),
        ("matrix: max Im eigenvalue", worst_im, 1e-10),
    ]


def _optical_theorem(rng):
    g = geometry_for_figure()
    worst = 0.0
    for n in (2, 5, 10, 20):
        pos = rng.normal(size=(n, 3)) * np.array([1.5, 4.5, 1.5])
        sigma = build_self_energy(pos)
        cache = EigenCache(sigma)
        b = source_vector(pos, g.k_in, g.e_in)
        for d in (-2.0, 0.0, 1.0):
            x = cache.solve(d, b)
            tot = total_cross_section(x, pos, 100, 100)
            ext = extinction_cross_section(x, pos, g.k_in, g.e_in)
            worst = max(worst, abs(tot / ext - 1))
    return ("optical theorem: scattered vs extinction (rel)", worst, 0.02)


def run_oracle_suite(seed: int = 0) -> list[tuple[str, float, float, bool]]:
    rng = np.random.default_rng(seed)
    rows = [*_single_atom(), _two_atom(), *_invariants(rng), _optical_theorem(rng)]
    return [(name, float(val), tol, bool(val <= tol)) for name, val, tol in rows]


def format_table(rows) -> str:
    width = max(len(r[0]) for r in rows)
    lines = [f"{'check':<{width}}  {'value':>10}  {'tol':>8}  result"]
    for name, val, tol, ok in rows:
        lines.append(f"{name:<{width}}  {val:>10.3e}  {tol:>8.1e}  {'PASS' if ok else 'FAIL'}")
    return "\n".join(lines)
