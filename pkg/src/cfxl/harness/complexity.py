"""Leading-term flop counts of the combining schemes.

The counts are per location draw: `combining_flops` covers the per-realization
combining-vector computation accumulated over N_r realizations, and
`precompute_flops` the statistics-based precomputation done once per draw.
Orders only; constants are not modeled.
"""

from dataclasses import dataclass

__all__ = ["ComplexityEstimate", "complexity_estimate", "COMPLEXITY_SCHEMES"]


@dataclass(frozen=True)
class ComplexityEstimate:
    scheme: str
    combining_flops: int
    precompute_flops: int

    @property
    def total_flops(self) -> int:
        return self.combining_flops + self.precompute_flops


def _formulas(m, n, k, nr, nit):
    return {
        "cmmse": (m**2 * n**2 * k * nr + m**3 * n**3 * nr, m * n**3 * k),
        "gsli-mmse": (
            m * n**3 + m * n**2 * k * nr + k**3 + m * n * k**2 * nr,
            m**3 * n**3 * k**2,
        ),
        "lmmse": (m * n**2 * k * nr + m * n**3 * nr, m * n**3 * k),
        "si-lmmse": (m * n**3 + m * n**2 * k * nr, m * n**3 * k),
        "ins-ssor": (m * n**2 * k * nr * nit, m * n**3 * k),
        "sta-ssor": (m * n**2 * k * nr * nit, m * n**3 * k),
        "ins-si-ssor": (m * n**2 * k * nr * nit + m * n**3, m * n**3 * k),
    }


COMPLEXITY_SCHEMES = tuple(_formulas(1, 1, 1, 1, 1))


def complexity_estimate(
    scheme: str, m_bs: int, n_antennas: int, k_ue: int, n_realizations: int, n_iter: int = 5
) -> ComplexityEstimate:
    """Evaluate the leading-term complexity of one scheme."""
    if min(m_bs, n_antennas, k_ue, n_realizations) < 1 or n_iter < 0:
        raise ValueError("complexity_estimate: parameters must be positive (n_iter >= 0)")
    table = _formulas(m_bs, n_antennas, k_ue, n_realizations, n_iter)
    if scheme not in table:
        raise ValueError(
            f"complexity_estimate: no complexity model for scheme {scheme!r}; "
            f"known: {sorted(table)}"
        )
    combining, precompute = table[scheme]
    return ComplexityEstimate(scheme=scheme, combining_flops=combining, precompute_flops=precompute)
