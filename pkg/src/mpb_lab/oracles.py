"""Independent reference computations for the frozen test constants.

Each function here derives a checked quantity by a route deliberately
different from the library implementation (brute-force enumeration,
closed forms, dense linear algebra), so the unit tests can compare two
independent computations instead of an implementation against itself.
The CLI `oracle` subcommand prints them all.
"""

from __future__ import annotations

import math

import numpy as np

from . import core, linalg
from .scenario import CODE_LENGTH, generate_gold_codes, gold_family_bits


def gold_correlation_levels() -> tuple[list[int], list[int]]:
    """Brute-force the cross- and off-peak auto-correlation level sets.

    Enumerates every ordered pair of family codes at every cyclic shift
    with plain integer arithmetic. Three-valued {-9, -1, 7} for length
    31 is the expected outcome.
    """
    bits = gold_family_bits()
    chips = 1 - 2 * bits.astype(np.int64)
    cross: set[int] = set()
    auto_offpeak: set[int] = set()
    num = chips.shape[0]
    for a in range(num):
        for b in range(num):
            for shift in range(CODE_LENGTH):
                value = int(np.dot(chips[a], np.roll(chips[b], shift)))
                if a == b:
                    if shift != 0:
                        auto_offpeak.add(value)
                else:
                    cross.add(value)
    return sorted(cross), sorted(auto_offpeak)


def maximin_leakage_closed_form(
    monitor_freq: float = 0.5, length: int = CODE_LENGTH
) -> float:
    """Desired-code power leaking into the monitoring channel, closed form.

    The monitoring vector is the unit-norm code modulated by a complex
    exponential, so its tap-normalised overlap with the raw code
    collapses to a pure geometric sum over the chip index, independent
    of the chip signs: leakage = |sum_n exp(2j pi f n)|^2 / length^2.
    At f = 0.5 and odd length the sum has magnitude 1, giving
    1/length^2; at integer f the monitor coincides with the despreading
    channel and the leakage degenerates to 1.
    """
    if monitor_freq == round(monitor_freq):
        return 1.0  # degenerate: the monitor equals the signal channel
    num = math.sin(math.pi * monitor_freq * length)
    den = math.sin(math.pi * monitor_freq)
    return (num / den) ** 2 / length**2


def whitening_residual(seed: int = 0, size: int = 8) -> float:
    """Worst defining-equation residual of the generalized eigensolver.

    Draws a random Hermitian pair (A, B) with B positive definite and
    checks max_k ||A u_k - lambda_k B u_k|| / ||A||. Small residual means
    the returned pairs satisfy the defining equation, independent of how
    the solver produced them.
    """
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    a = m @ m.conj().T + np.eye(size)
    m = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    b = m @ m.conj().T + np.eye(size)
    result = linalg.hermitian_gevd(a, b)
    norm_a = np.linalg.norm(a, 2)
    worst = 0.0
    for k in range(size):
        residual = a @ result.eigenvectors[:, k] - result.eigenvalues[
            k
        ] * (b @ result.eigenvectors[:, k])
        worst = max(worst, float(np.linalg.norm(residual) / norm_a))
    return worst


def woodbury_drift(num_updates: int = 10000, seed: int = 1, size: int = 8) -> float:
    """Relative gap between the recursive inverse and a dense inverse.

    Feeds the same random rank-one stream to the update recursion and to
    a directly accumulated matrix, then compares the recursion's inverse
    with numpy's dense inverse at the end.
    """
    rng = np.random.default_rng(seed)
    mu = 0.99
    delta = 1e-3
    p = np.eye(size, dtype=np.complex128) / delta
    dense = delta * np.eye(size, dtype=np.complex128)
    for _ in range(num_updates):
        x = (
            rng.standard_normal(size) + 1j * rng.standard_normal(size)
        ) / math.sqrt(2.0)
        dense = mu * dense + np.outer(x, x.conj())
        _, p = linalg.rank_one_inverse_update(p, x, mu)
        p = 0.5 * (p + p.conj().T)
    direct = np.linalg.inv(dense)
    return float(
        np.linalg.norm(p - direct, "fro") / np.linalg.norm(direct, "fro")
    )


def fft_projection_gap(seed: int = 2, num_elements: int = 8) -> float:
    """Max elementwise gap between the direct and FFT projection routes."""
    rng = np.random.default_rng(seed)
    code = generate_gold_codes(1)[0]
    basis = core.basis_mic(code)
    samples = rng.standard_normal(
        (num_elements, CODE_LENGTH)
    ) + 1j * rng.standard_normal((num_elements, CODE_LENGTH))
    block = core.DataBlock(symbol_index=0, samples=samples)
    direct = core.project(block, basis)
    fast = core.project_fft(block, code)
    return float(
        max(
            np.max(np.abs(direct.x_s - fast.x_s)),
            np.max(np.abs(direct.x_i - fast.x_i)),
        )
    )


def basis_orthonormality_gap() -> float:
    """Worst |H^H H - I| entry across the three projection bases."""
    code = generate_gold_codes(1)[0]
    worst = 0.0
    for scheme in ("PAPC", "Maximin", "MIC"):
        basis = core.make_basis(scheme, code)
        h = basis.h_i
        gram = h.conj().T @ h
        gap = np.max(np.abs(gram - np.eye(basis.num_channels)))
        worst = max(worst, float(gap))
    return worst


def mic_leakage() -> float:
    """Signal power reaching the MIC monitoring bank (exactly zero in theory)."""
    from .analysis import plr_beta

    code = generate_gold_codes(1)[0]
    return plr_beta(core.basis_mic(code), code)


def run_all() -> dict[str, object]:
    cross, auto = gold_correlation_levels()
    return {
        "gold_cross_correlation_levels": cross,
        "gold_auto_offpeak_levels": auto,
        "maximin_leakage_f0.5": maximin_leakage_closed_form(),
        "maximin_leakage_times_31": maximin_leakage_closed_form() * 31,
        "mic_leakage": mic_leakage(),
        "basis_orthonormality_gap": basis_orthonormality_gap(),
        "fft_projection_gap": fft_projection_gap(),
        "whitening_residual": whitening_residual(),
        "woodbury_drift_10k": woodbury_drift(),
    }
