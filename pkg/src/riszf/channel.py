"""Channel synthesis: RIS element geometry, spatial correlation, and seeded
draws of every link in the scenario.

All randomness flows through counter-based generators derived from a master
seed and an explicit spawn key, so any trial can be redrawn in isolation and
results do not depend on scheduling order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from riszf.sysconfig import ChannelModelConfig, SystemConfig


def spawn_rng(master_seed: int, *spawn_key: int) -> np.random.Generator:
    """Independent generator for the stream identified by `spawn_key`.

    Philox is counter-based: streams for different keys never collide and
    the mapping is stable across processes.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(spawn_key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(master_seed: int, *spawn_key: int) -> int:
    """Stable 64-bit sub-seed for APIs that want an integer seed."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(spawn_key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def complex_normal(
    rng: np.random.Generator, shape: tuple[int, ...], variance: float = 1.0
) -> np.ndarray:
    """Circularly symmetric complex Gaussian samples, E{|x|^2} = variance."""
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def default_grid_cols(N: int) -> int:
    """Largest divisor of N not exceeding sqrt(N) (squarest row-major grid)."""
    best = 1
    for c in range(1, int(math.isqrt(N)) + 1):
        if N % c == 0:
            best = c
    return best


def element_positions(
    N: int, spacing: float, grid_cols: int | None = None
) -> np.ndarray:
    """(N, 2) planar element coordinates, row-major on a rectangular grid."""
    cols = default_grid_cols(N) if grid_cols is None else grid_cols
    if cols < 1 or N % cols != 0:
        raise ValueError(f"grid_cols={cols} does not divide N={N}")
    idx = np.arange(N)
    return spacing * np.stack([idx % cols, idx // cols], axis=1).astype(float)


def correlation_matrix(
    N: int,
    spacing: float,
    wavelength: float,
    model: str = "sinc",
    grid_cols: int | None = None,
) -> np.ndarray:
    """Unit-diagonal spatial correlation across the RIS elements.

    "sinc" evaluates sin(pi x)/(pi x) at x = 2 * distance / wavelength for
    every element pair; "iid" forces the identity regardless of geometry.
    """
    if model == "iid":
        return np.eye(N)
    if model != "sinc":
        raise ValueError(f"unknown correlation model {model!r}")
    pos = element_positions(N, spacing, grid_cols)
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    return np.sinc(2.0 * dist / wavelength)


def matrix_sqrt_psd(C: np.ndarray, clip_tol: float = 1e-12) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues below `clip_tol` relative to the largest are treated as
    exact zeros, which keeps rank-deficient correlation usable.
    """
    w, V = np.linalg.eigh(C)
    w = np.where(w > clip_tol * max(w[-1], 0.0), w, 0.0)
    return (V * np.sqrt(w)) @ V.conj().T


@dataclass(frozen=True)
class ChannelSet:
    """One realization of every link in the scenario.

    Attributes
    ----------
    H : (K, M, N) BS-to-RIS channels, one M x N block per RIS.
    h_b : (U_b, N) RIS-to-blocked-UE channels, RIS-major flat order
        (``cfg.blocked_index`` maps (k, ell) to a row).
    h_d : (U_d, M) direct BS-to-UE channels.
    C : (N, N) unit-diagonal RIS correlation shared by all arrays.
    sqrt_C : (N, N) its PSD square root, reused for error redraws.
    """

    cfg: SystemConfig
    ch: ChannelModelConfig
    H: np.ndarray
    h_b: np.ndarray
    h_d: np.ndarray
    C: np.ndarray
    sqrt_C: np.ndarray

    @property
    def R(self) -> np.ndarray:
        """Per-BS-antenna RIS correlation: E{H_k^H H_k} = M * R."""
        return self.ch.ris_element_scale * self.C

    def h_block(self, k: int, ell: int = 0) -> np.ndarray:
        """RIS-side channel of blocked UE (k, ell), shape (N,)."""
        return self.h_b[self.cfg.blocked_index(k, ell)]


def sample_channels(
    cfg: SystemConfig, ch: ChannelModelConfig, rng: np.random.Generator
) -> ChannelSet:
    """Draw one realization of all channels.

    The BS side of each RIS link is isotropic; correlation enters only on
    the RIS side, so H_k = F_k D with F_k iid and D = (mu A C)^(1/2). Draw
    order is fixed (H_1..H_K, then blocked UEs RIS-major, then direct UEs)
    and part of the reproducibility contract.
    """
    M, N, K = cfg.M, cfg.N, cfg.K
    C = correlation_matrix(
        N, ch.element_spacing, ch.wavelength, ch.correlation_model, ch.grid_cols
    )
    sqrt_C = matrix_sqrt_psd(C)
    D = math.sqrt(ch.ris_element_scale) * sqrt_C

    H = np.empty((K, M, N), dtype=np.complex128)
    for k in range(K):
        H[k] = complex_normal(rng, (M, N)) @ D

    h_b = np.empty((cfg.U_b, N), dtype=np.complex128)
    scale_b = math.sqrt(ch.ris_ue_variance)
    for k in range(K):
        for ell in range(cfg.L[k]):
            z = complex_normal(rng, (N,))
            h_b[cfg.blocked_index(k, ell)] = scale_b * (sqrt_C @ z)

    h_d = complex_normal(rng, (cfg.U_d, M), variance=ch.direct_link_variance)

    return ChannelSet(cfg=cfg, ch=ch, H=H, h_b=h_b, h_d=h_d, C=C, sqrt_C=sqrt_C)


def apply_estimation_error(chs: ChannelSet, tau: float, seed: int) -> ChannelSet:
    """Imperfect-CSI copy: each link becomes sqrt(1-tau) h + sqrt(tau) e.

    The error term e is an independent draw from the same distribution as
    the link it perturbs, correlation included, so channel statistics are
    tau-invariant. tau = 0 returns the input set unchanged.
    """
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"estimation error fraction {tau} outside [0, 1)")
    if tau == 0.0:
        return chs

    cfg, ch = chs.cfg, chs.ch
    rng = spawn_rng(seed)
    keep = math.sqrt(1.0 - tau)
    mix = math.sqrt(tau)

    D = math.sqrt(ch.ris_element_scale) * chs.sqrt_C
    H = np.empty_like(chs.H)
    for k in range(cfg.K):
        H[k] = keep * chs.H[k] + mix * (complex_normal(rng, (cfg.M, cfg.N)) @ D)

    h_b = np.empty_like(chs.h_b)
    scale_b = math.sqrt(ch.ris_ue_variance)
    for i in range(cfg.U_b):
        e = scale_b * (chs.sqrt_C @ complex_normal(rng, (cfg.N,)))
        h_b[i] = keep * chs.h_b[i] + mix * e

    e_d = complex_normal(rng, chs.h_d.shape, variance=ch.direct_link_variance)
    h_d = keep * chs.h_d + mix * e_d

    return replace(chs, H=H, h_b=h_b, h_d=h_d)
