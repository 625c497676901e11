"""Matrix pair beamformer core.

Turns a chip-rate array stream into per-symbol snapshot pairs (one
signal-bearing vector, one or more interference-monitoring vectors),
estimates the two covariance matrices and solves the batch weight as the
dominant generalized eigenvector of that pair.

The three projection schemes differ only in the monitoring basis:

  PAPC     one column of the identity (a single unspread chip position),
  Maximin  the code remodulated by a fixed off-center frequency,
  MIC      the code remodulated by every nonzero DFT frequency, which
           spans the whole code-orthogonal subspace (N-1 columns).

All bases are unit-column-normalized; the signal side is always the code
itself scaled to unit norm.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .scenario import ChipStream, SpreadingCode


@dataclass
class DataBlock:
    """One despreading window: samples[:, k*N+n0 : k*N+n0+N]."""

    symbol_index: int
    samples: np.ndarray  # (num_elements, code_length)


@dataclass
class ProjectionBasis:
    """Signal-side vector h_s and monitoring matrix h_i (columns)."""

    scheme: str
    h_s: np.ndarray  # (code_length,)
    h_i: np.ndarray  # (code_length, num_channels)

    @property
    def num_channels(self) -> int:
        return int(self.h_i.shape[1])


@dataclass
class SnapshotPair:
    """Per-symbol projected snapshots."""

    symbol_index: int
    x_s: np.ndarray  # (num_elements,)
    x_i: np.ndarray  # (num_elements, num_channels)


@dataclass
class CovariancePair:
    """Sample covariances of the signal and monitoring channels."""

    r_s: np.ndarray
    r_i: np.ndarray
    num_symbols: int


def segment(stream: ChipStream, n0: int, k: int) -> DataBlock:
    """Cut window k at chip offset n0 out of the stream.

    n0 is the delay of the path the beamformer is synchronized to; k
    counts whole windows from there.
    """
    n = stream.processing_gain
    if not 0 <= n0 < n:
        raise ValueError(f"window offset must lie in [0, {n}), got {n0}")
    if k < 0 or k >= stream.num_blocks(n0):
        raise ValueError(
            f"symbol index {k} out of range [0, {stream.num_blocks(n0)})"
        )
    start = k * n + n0
    return DataBlock(symbol_index=k, samples=stream.samples[:, start : start + n])


def _unit_code(code: SpreadingCode) -> np.ndarray:
    chips = np.asarray(code.chips, dtype=np.float64)
    if chips.ndim != 1 or chips.size < 2:
        raise ValueError("spreading code must be a chip vector of length >= 2")
    if not np.all(np.abs(np.abs(chips) - 1.0) < 1e-12):
        raise ValueError("spreading code chips must be +-1")
    return chips / np.sqrt(chips.size)


def basis_papc(code: SpreadingCode, chip_index: int = 0) -> ProjectionBasis:
    """Single-chip monitoring: the standard basis vector at chip_index."""
    h_s = _unit_code(code)
    n = h_s.size
    if not 0 <= chip_index < n:
        raise ValueError(f"chip_index must lie in [0, {n}), got {chip_index}")
    h_i = np.zeros((n, 1), dtype=np.complex128)
    h_i[chip_index, 0] = 1.0
    return ProjectionBasis(scheme="PAPC", h_s=h_s.astype(np.complex128), h_i=h_i)


def basis_maximin(code: SpreadingCode, monitor_freq: float = 0.5) -> ProjectionBasis:
    """Code remodulated by one fixed normalized frequency (cycles/chip)."""
    h_s = _unit_code(code)
    n = h_s.size
    if not 0.0 < monitor_freq <= 1.0:
        raise ValueError(
            f"monitor_freq must lie in (0, 1] cycles/chip, got {monitor_freq}"
        )
    if monitor_freq == 1.0:
        warnings.warn(
            "monitor frequency of one cycle/chip is degenerate: the "
            "monitoring channel collapses onto the signal channel",
            RuntimeWarning,
            stacklevel=2,
        )
    ramp = np.exp(2j * np.pi * monitor_freq * np.arange(n))
    h_i = (h_s * ramp)[:, None]
    return ProjectionBasis(scheme="Maximin", h_s=h_s.astype(np.complex128), h_i=h_i)


def basis_mic(code: SpreadingCode) -> ProjectionBasis:
    """Code remodulated by all N-1 nonzero DFT frequencies.

    The columns are mutually orthonormal, orthogonal to the signal-side
    vector by construction, and together with it form a complete basis,
    so the two projectors sum to the identity.
    """
    h_s = _unit_code(code)
    n = h_s.size
    ticks = np.arange(n)
    # column r: h_s modulated by exp(+j*2*pi*r*n/N), r = 1..N-1
    dft = np.exp(2j * np.pi * np.outer(ticks, np.arange(1, n)) / n)
    h_i = h_s[:, None] * dft
    return ProjectionBasis(scheme="MIC", h_s=h_s.astype(np.complex128), h_i=h_i)


def make_basis(
    scheme: str,
    code: SpreadingCode,
    monitor_freq: float = 0.5,
    chip_index: int = 0,
) -> ProjectionBasis:
    """Dispatch helper: build the basis named by scheme."""
    if scheme == "PAPC":
        return basis_papc(code, chip_index)
    if scheme == "Maximin":
        return basis_maximin(code, monitor_freq)
    if scheme == "MIC":
        return basis_mic(code)
    raise ValueError(f"unknown scheme {scheme!r}")


def project(block: DataBlock, basis: ProjectionBasis) -> SnapshotPair:
    """Project one window onto the signal and monitoring directions."""
    samples = block.samples
    if samples.shape[1] != basis.h_s.size:
        raise ValueError(
            f"window length {samples.shape[1]} does not match basis "
            f"length {basis.h_s.size}"
        )
    x_s = samples @ basis.h_s.conj()
    x_i = samples @ basis.h_i.conj()
    return SnapshotPair(symbol_index=block.symbol_index, x_s=x_s, x_i=x_i)


def project_fft(block: DataBlock, code: SpreadingCode) -> SnapshotPair:
    """MIC projection of one window done as a code-matched FFT.

    Multiplying the window by the chips and taking the length-N FFT
    evaluates every remodulated-code correlation at once: bin 0 is the
    signal channel and bins 1..N-1 are the monitoring channels. Equal to
    project(block, basis_mic(code)) up to roundoff.
    """
    chips = np.asarray(code.chips, dtype=np.float64)
    samples = block.samples
    if samples.shape[1] != chips.size:
        raise ValueError(
            f"window length {samples.shape[1]} does not match code "
            f"length {chips.size}"
        )
    spectrum = np.fft.fft(samples * chips[None, :], axis=1) / np.sqrt(chips.size)
    return SnapshotPair(
        symbol_index=block.symbol_index, x_s=spectrum[:, 0], x_i=spectrum[:, 1:]
    )


def project_stream(
    samples: np.ndarray, basis: ProjectionBasis, n0: int
) -> tuple[np.ndarray, np.ndarray]:
    """Project every whole window of a raw stream at offset n0.

    Returns (x_s, x_i) with shapes (L, K) and (L, K, channels); the MIC
    basis goes through the batched code-matched FFT, everything else
    through the direct inner products.
    """
    n = basis.h_s.size
    if not 0 <= n0 < n:
        raise ValueError(f"window offset must lie in [0, {n}), got {n0}")
    num_blocks = (samples.shape[1] - n0) // n
    if num_blocks < 1:
        raise ValueError("stream too short for a single window")
    windows = samples[:, n0 : n0 + num_blocks * n].reshape(
        samples.shape[0], num_blocks, n
    )
    if basis.scheme == "MIC":
        chips = np.sqrt(float(n)) * basis.h_s.real
        spectrum = np.fft.fft(windows * chips[None, None, :], axis=2) / np.sqrt(n)
        return spectrum[:, :, 0], spectrum[:, :, 1:]
    x_s = windows @ basis.h_s.conj()
    x_i = np.einsum("lkn,nr->lkr", windows, basis.h_i.conj())
    return x_s, x_i


def covariances_from_arrays(
    x_s: np.ndarray, x_i: np.ndarray
) -> CovariancePair:
    """Sample covariance pair from stacked snapshots (L,K) and (L,K,r)."""
    if x_s.ndim != 2 or x_i.ndim != 3 or x_i.shape[:2] != x_s.shape:
        raise ValueError(
            f"snapshot stacks have inconsistent shapes {x_s.shape} / {x_i.shape}"
        )
    num_symbols = x_s.shape[1]
    channels = x_i.shape[2]
    if num_symbols < 1 or channels < 1:
        raise ValueError("need at least one snapshot and one channel")
    r_s = (x_s @ x_s.conj().T) / num_symbols
    r_i = np.einsum("lkr,mkr->lm", x_i, x_i.conj()) / (num_symbols * channels)
    return CovariancePair(
        r_s=0.5 * (r_s + r_s.conj().T),
        r_i=0.5 * (r_i + r_i.conj().T),
        num_symbols=num_symbols,
    )


def estimate_covariances(snapshots: Sequence[SnapshotPair]) -> CovariancePair:
    """Average outer products over symbols (and monitoring channels)."""
    if len(snapshots) == 0:
        raise ValueError("need at least one snapshot pair")
    x_s = np.stack([s.x_s for s in snapshots], axis=1)
    x_i = np.stack([s.x_i for s in snapshots], axis=1)
    return covariances_from_arrays(x_s, x_i)


def solve_batch(pair: CovariancePair) -> np.ndarray:
    """Batch weight: dominant generalized eigenvector of (r_s, r_i).

    Returned with unit Euclidean norm and the standard phase convention
    (first significant component real positive).
    """
    result = linalg.hermitian_gevd(pair.r_s, pair.r_i)
    weight = result.eigenvectors[:, 0]
    return weight / np.linalg.norm(weight)


def beamform_output(weight: np.ndarray, x_s: np.ndarray) -> complex:
    """Array output for one symbol: w^H x_s."""
    weight = np.asarray(weight)
    x_s = np.asarray(x_s)
    if weight.shape != x_s.shape:
        raise ValueError(
            f"weight shape {weight.shape} does not match snapshot {x_s.shape}"
        )
    return complex(np.vdot(weight, x_s))


def beamform_components(
    weight: np.ndarray,
    soi_x_s: np.ndarray,
    interference_x_s: np.ndarray,
    noise_x_s: np.ndarray,
) -> tuple[complex, complex, complex]:
    """Per-component outputs (y_soi, y_interference, y_noise).

    The three terms sum to beamform_output of the composite snapshot
    because projection and beamforming are both linear.
    """
    return (
        beamform_output(weight, soi_x_s),
        beamform_output(weight, interference_x_s),
        beamform_output(weight, noise_x_s),
    )


def rake_combine(outputs: Sequence[complex]) -> complex:
    """Coherent sum of per-finger beamformer outputs."""
    if len(outputs) == 0:
        raise ValueError("rake_combine needs at least one finger output")
    return complex(sum(outputs))
