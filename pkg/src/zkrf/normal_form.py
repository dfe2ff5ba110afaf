"""Resonance function, generic masked bilinear Fourier multipliers, and the
normal-form boundary operator with the transverse-low-frequency mask.

The bilinear application is an exact double sum over masked lattice pairs
(output = sum over eta of m(xi - eta, eta) f(xi - eta) g(eta) / L^3); it
never aliases, and costs are controlled by an explicit pair budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import _BAND, _GAP, _shell_is_empty, _weights
from .fields import GridSpec, SpectralField, zero_field

DEFAULT_PAIR_BUDGET = 2**34
RESONANCE_FLOOR = 1e-6


class PairBudgetError(RuntimeError):
    """The masked pair count exceeds the configured budget."""


class ResonanceGuardError(RuntimeError):
    """The resonance denominator dipped below its floor on a masked pair,
    indicating a mask defect."""


def resonance(p, q, alpha: float):
    """Phase mismatch |p+q|^2 + alpha |p| - |q|^2 for a wave factor at p and a
    Schrodinger factor at q (output frequency p + q)."""
    if alpha <= 0:
        raise ValueError("wave speed alpha must be positive")
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    s = p + q
    return (
        np.sum(s * s, axis=-1)
        + alpha * np.sqrt(np.sum(p * p, axis=-1))
        - np.sum(q * q, axis=-1)
    )


@dataclass
class BilinearSymbol:
    """Symbol and pair-mask bundle for :func:`bilinear_apply`.

    ``func(px, py, pz, ex, ey, ez)`` receives broadcastable frequency
    components of the first factor (p) and second factor (eta) and returns the
    symbol values; ``None`` means the constant symbol 1.  ``pairs`` lists
    (weight_f, weight_g) lattice arrays; ``None`` means the full unmasked
    product.  ``guard`` optionally carries (denominator_func, floor): the
    denominator is evaluated on every masked pair and must stay at or above
    the floor in modulus.
    """

    func: object = None
    pairs: list | None = None
    guard: tuple | None = None
    name: str = "custom"


def _nnz(arr) -> int:
    return int(np.count_nonzero(arr))


def bilinear_apply(
    f: SpectralField,
    g: SpectralField,
    sym: BilinearSymbol,
    budget: int = DEFAULT_PAIR_BUDGET,
) -> SpectralField:
    """Exact masked double sum: out(xi) = sum_eta m(xi-eta, eta) f(xi-eta)
    g(eta) / L^3, bilinear in (f, g).

    Output frequencies falling off the lattice are dropped (they are not
    representable); masked pair counts above ``budget`` raise
    :class:`PairBudgetError` with the grid reduction required.
    """
    grid = f.grid
    if grid.N != g.grid.N or grid.L != g.grid.L:
        raise ValueError("bilinear factors live on different grids")
    N = grid.N
    half = N // 2
    cf = np.fft.fftshift(f.coeffs)
    cg = np.fft.fftshift(g.coeffs)
    xic = np.fft.fftshift(grid.xi1)

    pairs = sym.pairs if sym.pairs is not None else [(None, None)]
    total_pairs = 0
    for wf, wg in pairs:
        nf = _nnz(cf) if wf is None else _nnz((cf != 0) & (np.fft.fftshift(wf) > 0))
        ng = _nnz(cg) if wg is None else _nnz((cg != 0) & (np.fft.fftshift(wg) > 0))
        total_pairs += nf * ng
    if total_pairs > budget:
        shrink = (budget / max(total_pairs, 1)) ** (1.0 / 6.0)
        raise PairBudgetError(
            f"{total_pairs:.2e} masked pairs exceed the budget {budget:.2e}; "
            f"reduce the grid to about N = {int(N * shrink)} or mask harder"
        )

    out = np.zeros((N, N, N), dtype=np.complex128)
    for wf, wg in pairs:
        F = cf if wf is None else cf * np.fft.fftshift(wf)
        G = cg if wg is None else cg * np.fft.fftshift(wg)
        WF = None if wf is None else np.fft.fftshift(wf)
        eta_idx = np.argwhere(G != 0)
        for e_idx in eta_idx:
            gval = G[tuple(e_idx)]
            e = e_idx - half  # integer frequency index of eta
            src = []
            dst = []
            for a in range(3):
                lo = max(0, -e[a])
                hi = N + min(0, -e[a])
                src.append(slice(lo, hi))
                dst.append(slice(lo + e[a], hi + e[a]))
            src, dst = tuple(src), tuple(dst)
            block = F[src]
            if sym.func is not None or sym.guard is not None:
                px = xic[src[0]][:, None, None]
                py = xic[src[1]][None, :, None]
                pz = xic[src[2]][None, None, :]
                ex, ey, ez = (xic[half + e[0]], xic[half + e[1]], xic[half + e[2]])
                if sym.guard is not None:
                    denom_func, floor = sym.guard
                    denom = denom_func(px, py, pz, ex, ey, ez)
                    support = (block != 0) if WF is None else (WF[src] > 0)
                    if np.any(support & (np.abs(denom) < floor)):
                        raise ResonanceGuardError(
                            f"denominator below {floor:g} on the masked support "
                            f"of {sym.name}; the mask admits a resonant pair"
                        )
                if sym.func is not None:
                    # the symbol may be singular off the masked support
                    with np.errstate(divide="ignore", invalid="ignore"):
                        mvals = np.asarray(sym.func(px, py, pz, ex, ey, ez))
                        block = np.where(block != 0, block * mvals, 0.0)
            out[dst] += block * gval
    out = np.fft.ifftshift(out) / grid.L**3
    return SpectralField(grid, out, "frequency")


# -- transverse-low-frequency mask and boundary operator ---------------------------


def _xl_shell_indices(
    grid: GridSpec, alpha: float, k_top: int | None = None
) -> list[int]:
    la = math.log2(alpha)
    top = grid.k_full if k_top is None else k_top
    return [
        k
        for k in range(grid.k_min, top + 1)
        if abs(k - la) > _BAND and not _shell_is_empty(grid, k)
    ]


def xl_mask_nonempty(grid: GridSpec, alpha: float) -> bool:
    """Whether the resolved range carries transverse-low shells (requires
    k_max at least 5 above log2 of the wave speed)."""
    return len(_xl_shell_indices(grid, alpha, grid.k_max)) > 0


def xl_symbol(
    grid: GridSpec,
    alpha: float,
    with_resonance: bool,
    k_top: int | None = None,
) -> BilinearSymbol:
    """Pairs (shell_k, ball_{k-5}) over shells away from the wave-speed band,
    with the symbol 1 (plain transverse product) or 1/omega_r (normal form).

    ``k_top`` bounds the shell sum; the paraproduct identity wants the full
    lattice range, the boundary operator stays within the resolved shells.
    """
    if alpha <= 0:
        raise ValueError("wave speed alpha must be positive")
    ks = _xl_shell_indices(grid, alpha, k_top)
    if not ks:
        raise ValueError(
            f"transverse-low mask empty on this grid (k_max = {grid.k_max}, "
            f"log2 alpha = {math.log2(alpha):.2f}); need k_max > log2(alpha) + {_BAND}"
        )
    pairs = [
        (_weights(grid, "shell", k), _weights(grid, "ball", k - _GAP)) for k in ks
    ]

    def omega_r(px, py, pz, ex, ey, ez):
        sx, sy, sz = px + ex, py + ey, pz + ez
        return (
            sx * sx
            + sy * sy
            + sz * sz
            + alpha * np.sqrt(px * px + py * py + pz * pz)
            - (ex * ex + ey * ey + ez * ez)
        )

    if not with_resonance:
        return BilinearSymbol(None, pairs, None, name="XL")

    def inv_omega(px, py, pz, ex, ey, ez):
        return 1.0 / omega_r(px, py, pz, ex, ey, ez)

    return BilinearSymbol(
        inv_omega, pairs, (omega_r, RESONANCE_FLOOR), name="XL/omega_r"
    )


def omega_b(
    v: SpectralField,
    u: SpectralField,
    alpha: float,
    budget: int = DEFAULT_PAIR_BUDGET,
) -> SpectralField:
    """Normal-form boundary operator: bilinear multiplier with symbol
    (transverse-low mask) / (resonance function), wave factor first."""
    sym = xl_symbol(v.grid, alpha, with_resonance=True, k_top=v.grid.k_max)
    return bilinear_apply(v, u, sym, budget=budget)


def measured_resonance_constant(grid: GridSpec, alpha: float) -> float:
    """Smallest ratio of omega_r to min(|xi|^2, alpha |p| / 4) over the masked
    transverse-low lattice pairs; positivity is measured, never assumed."""
    ks = _xl_shell_indices(grid, alpha, grid.k_max)
    if not ks:
        raise ValueError("transverse-low mask empty on this grid")
    half = grid.N // 2
    xic = np.fft.fftshift(grid.xi1)
    c0 = np.inf
    for k in ks:
        ws = np.fft.fftshift(_weights(grid, "shell", k))
        wb = np.fft.fftshift(_weights(grid, "ball", k - _GAP))
        eta_idx = np.argwhere(wb > 0)
        p_idx = np.argwhere(ws > 0)
        p = xic[p_idx]  # (np, 3)
        for e_idx in eta_idx:
            eta = xic[e_idx]
            s = p + eta
            om = (
                np.sum(s * s, axis=1)
                + alpha * np.sqrt(np.sum(p * p, axis=1))
                - float(np.sum(eta * eta))
            )
            ref = np.minimum(
                np.sum(s * s, axis=1), alpha * np.sqrt(np.sum(p * p, axis=1)) / 4.0
            )
            ref = np.maximum(ref, 1e-300)
            c0 = min(c0, float(np.min(om / ref)))
    return c0


def omega_b_size_sweep(
    grid: GridSpec,
    alpha: float,
    rng: np.random.Generator,
    budget: int = DEFAULT_PAIR_BUDGET,
) -> dict:
    """Ratio ||<grad>|grad| omega_b(P_k v, P_k1 u)||_2 / (||P_k v||_2
    ||P_k1 u||_inf) over the admissible well-separated shell pairs; the
    normal form acts like a bounded operator after those derivatives."""
    from .fields import apply_radial_multiplier, random_band_limited

    ks = _xl_shell_indices(grid, alpha, grid.k_max)
    ratios = {}
    v = random_band_limited(grid, rng, xi_cut=grid.xi_max, amplitude=1.0)
    u = random_band_limited(grid, rng, xi_cut=grid.xi_max, amplitude=1.0)
    for k in ks:
        if k > grid.k_max:
            continue
        for k1 in range(grid.k_min, k - _GAP + 1):
            if _shell_is_empty(grid, k1):
                continue
            pv = SpectralField(grid, v.coeffs * _weights(grid, "shell", k), "frequency")
            pu = SpectralField(grid, u.coeffs * _weights(grid, "shell", k1), "frequency")
            if pv.l2_norm() == 0 or pu.l2_norm() == 0:
                continue
            sym = xl_symbol(grid, alpha, with_resonance=True)
            ob = bilinear_apply(pv, pu, sym, budget=budget)
            weighted = apply_radial_multiplier(
                ob, lambda r: r * np.sqrt(1.0 + r * r)
            )
            denom = pv.l2_norm() * pu.lq_norm(np.inf)
            ratios[(k, k1)] = weighted.l2_norm() / denom
    return ratios
