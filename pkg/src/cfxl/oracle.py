"""Independent brute-force references validating the fast linear-algebra paths.

These routines are test infrastructure: dense, dimension-capped, and direct,
so the factored / iterative / asymptotic production paths can be checked
against something that cannot share their bugs.
"""

import numpy as np

__all__ = [
    "DENSE_ORACLE_CAP",
    "direct_solve",
    "matrix_inversion_lemma_check",
    "trace_concentration_check",
]

# Dense reference computations are capped to keep test runtimes in the minutes.
DENSE_ORACLE_CAP = 256


def direct_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense factorization solve of A x = b, the reference for every fast path."""
    a = np.asarray(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError("direct_solve: matrix must be square")
    if a.shape[0] > DENSE_ORACLE_CAP:
        raise ValueError(f"direct_solve: dimension {a.shape[0]} exceeds cap {DENSE_ORACLE_CAP}")
    return np.linalg.solve(a, b)


def matrix_inversion_lemma_check(
    a: np.ndarray, b: np.ndarray, c: np.ndarray, tolerance: float
) -> tuple[bool, float]:
    """Evaluate both sides of (A + B C B^H)^{-1} B = A^{-1} B (B^H A^{-1} B + C^{-1})^{-1} C^{-1}.

    Returns (within tolerance, max entry deviation), both sides via dense solves.
    """
    n1 = a.shape[0]
    if n1 > DENSE_ORACLE_CAP:
        raise ValueError(f"matrix_inversion_lemma_check: n1 {n1} exceeds cap {DENSE_ORACLE_CAP}")
    lhs = np.linalg.solve(a + b @ c @ b.conj().T, b)
    c_inv = np.linalg.solve(c, np.eye(c.shape[0], dtype=complex))
    t = np.linalg.solve(a, b)
    rhs = t @ np.linalg.solve(b.conj().T @ t + c_inv, c_inv)
    deviation = float(np.max(np.abs(lhs - rhs))) if b.size else 0.0
    return deviation <= tolerance, deviation


def trace_concentration_check(
    n_list, trials: int, rng: np.random.Generator, a_diag_fn=None
) -> dict:
    """Measure the trace-concentration rate x^H A x -> tr(A)/n.

    For each n, draws x, y ~ CN(0, I/n) against a fixed bounded-spectral-norm
    diagonal A (default: eigenvalues spread over [0.5, 1.5]; override with
    `a_diag_fn(n)`) and records the median of |x^H A x - tr(A)/n| and
    |x^H A y|.  Returns the medians plus the log-log slope of the
    quadratic-form deviation, which should sit near -1/2.
    """
    n_list = list(n_list)
    if a_diag_fn is None:
        a_diag_fn = lambda n: np.linspace(0.5, 1.5, n)
    med_quad = []
    med_cross = []
    for n in n_list:
        a_diag = np.asarray(a_diag_fn(n), dtype=float)
        target = a_diag.mean()  # tr(A)/n
        dev_q = np.empty(trials)
        dev_c = np.empty(trials)
        for t in range(trials):
            x = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0 * n)
            y = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0 * n)
            dev_q[t] = abs(np.real(np.sum(a_diag * np.abs(x) ** 2)) - target)
            dev_c[t] = abs(np.sum(x.conj() * a_diag * y))
        med_quad.append(float(np.median(dev_q)))
        med_cross.append(float(np.median(dev_c)))
    if len(n_list) >= 2 and all(m > 0 for m in med_quad):
        slope = float(np.polyfit(np.log(n_list), np.log(med_quad), 1)[0])
    else:
        slope = None
    return {
        "n": n_list,
        "median_quadratic_deviation": med_quad,
        "median_cross_form": med_cross,
        "slope": slope,
    }
