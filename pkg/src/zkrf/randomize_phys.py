"""Physical-space randomization: unit-scale partition of unity with independent
sub-Gaussian multipliers on the translates.

Randomness is counter-based: every (seed, label, index) triple owns a
substream, and the n-th draw from a substream is a pure function of
(substream id, n).  Results are reproducible regardless of evaluation order
or parallel scheduling.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.special import ndtri

from .fields import GridSpec, SpectralField, field_from_physical
from .dyadic import smoothstep

_FFT_WORKERS = -1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    """Vectorised 64-bit finalizer; input and output are uint64."""
    z = (x + _GOLDEN).astype(np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def substream_id(seed: int, label: str, index) -> np.uint64:
    """Stable 64-bit substream identifier for (seed, label, index)."""
    payload = f"{seed}|{label}|{tuple(np.atleast_1d(index))}".encode()
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return np.uint64(int.from_bytes(digest, "little"))


def substream_ids(seed: int, label: str, indices: np.ndarray) -> np.ndarray:
    """Substream ids for an array of integer index vectors, shape (n, d)."""
    indices = np.atleast_2d(np.asarray(indices))
    return np.array(
        [substream_id(seed, label, tuple(int(v) for v in row)) for row in indices],
        dtype=np.uint64,
    )


def _uniform_from_u64(x: np.ndarray) -> np.ndarray:
    # 53-bit mantissa, offset to keep values strictly inside (0, 1)
    return ((x >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


@dataclass(frozen=True)
class RandomModel:
    """Mean-zero sub-Gaussian multiplier family with reproducible substreams.

    ``gaussian`` draws N(0, scale^2); ``bounded`` draws +-scale with equal
    probability (compact support [-scale, scale]).  Both satisfy
    E exp(gamma X) <= exp(c gamma^2) with c = scale^2 / 2.
    """

    family: str = "gaussian"
    scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.family not in ("gaussian", "bounded"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    @property
    def subgaussian_c(self) -> float:
        return self.scale**2 / 2.0

    def _values(self, ids: np.ndarray, counters: np.ndarray) -> np.ndarray:
        mixed = _splitmix64(ids ^ _splitmix64(counters.astype(np.uint64)))
        if self.family == "gaussian":
            return self.scale * ndtri(_uniform_from_u64(mixed))
        sign = np.where((mixed >> np.uint64(63)).astype(bool), 1.0, -1.0)
        return self.scale * sign

    def sample_array(self, ids: np.ndarray, draw: int) -> np.ndarray:
        """One draw of every substream in ``ids``."""
        counters = np.full(ids.shape, int(draw), dtype=np.uint64)
        return self._values(np.asarray(ids, dtype=np.uint64), counters)

    def sample_stream(self, label: str, index, n: int, start: int = 0) -> np.ndarray:
        """``n`` consecutive draws of the single substream for ``index``."""
        sid = substream_id(self.seed, label, index)
        counters = np.arange(start, start + n, dtype=np.uint64)
        return self._values(np.full(n, sid, dtype=np.uint64), counters)

    def to_json_dict(self) -> dict:
        return {
            "family": self.family,
            "scale": self.scale,
            "seed": self.seed,
            "subgaussian_c": self.subgaussian_c,
        }


def sample_coefficients(
    model: RandomModel, indices, label: str = "phys", draw: int = 0
) -> dict:
    """Deterministic map index -> multiplier for one draw.

    Distinct indices use distinct substreams, so values are independent and
    insensitive to the iteration order of ``indices``.
    """
    idx_list = [tuple(int(v) for v in np.atleast_1d(i)) for i in indices]
    ids = np.array(
        [substream_id(model.seed, label, i) for i in idx_list], dtype=np.uint64
    )
    vals = model.sample_array(ids, draw)
    return dict(zip(idx_list, vals))


# -- partition of unity ----------------------------------------------------------


def bump_profile(r: np.ndarray) -> np.ndarray:
    """Radial bump: 1 on [0, 1], 0 on [2, inf), smooth monotone between."""
    return smoothstep(2.0 - np.asarray(r, dtype=float))


@dataclass(frozen=True)
class PartitionOfUnity:
    """Normalised translates of the unit bump over the integer sites meeting
    the box, with periodic wrap.

    ``translates`` holds the integer sites; ``coverage`` is the un-normalised
    bump sum (strictly positive on a valid box).  On boxes whose side is an
    even integer multiple of the node spacing the per-draw weight field is a
    pair of FFTs; otherwise translates are accumulated patch by patch.
    """

    grid: GridSpec
    translates: np.ndarray
    coverage: np.ndarray
    _fast: bool

    def __post_init__(self):
        self.translates.flags.writeable = False
        self.coverage.flags.writeable = False

    @property
    def n_translates(self) -> int:
        return self.translates.shape[0]

    def substream_ids(self, seed: int, label: str = "phys") -> np.ndarray:
        return substream_ids(seed, label, self.translates)

    def _torus_delta(self, a: np.ndarray, site: float) -> np.ndarray:
        L = self.grid.L
        return (a - site + L / 2.0) % L - L / 2.0

    def psi(self, translate) -> np.ndarray:
        """Single normalised bump evaluated on the grid."""
        g = self.grid
        d = [self._torus_delta(g.x1, float(t)) for t in translate]
        r = np.sqrt(
            d[0][:, None, None] ** 2 + d[1][None, :, None] ** 2 + d[2][None, None, :] ** 2
        )
        return bump_profile(r) / self.coverage

    def _scatter(self, weights: np.ndarray) -> np.ndarray:
        g = self.grid
        m = g.N // int(round(g.L))
        out = np.zeros((g.N,) * 3)
        idx = ((self.translates + g.L / 2.0) * m).astype(int) % g.N
        out[idx[:, 0], idx[:, 1], idx[:, 2]] = weights
        return out

    def _bump_kernel_hat(self) -> np.ndarray:
        def build():
            g = self.grid
            d1 = np.minimum(g.x1 - g.x1[0], g.L - (g.x1 - g.x1[0]))
            r = np.sqrt(
                d1[:, None, None] ** 2 + d1[None, :, None] ** 2 + d1[None, None, :] ** 2
            )
            return np.real(scipy.fft.fftn(bump_profile(r), workers=_FFT_WORKERS)).copy()

        return self.grid._cached("pou_kernel_hat", build)

    def weight_sum(self, weights: np.ndarray) -> np.ndarray:
        """sum_k weights[k] * psi_k on the grid."""
        if self._fast:
            what = scipy.fft.fftn(self._scatter(weights), workers=_FFT_WORKERS)
            conv = scipy.fft.ifftn(what * self._bump_kernel_hat(), workers=_FFT_WORKERS)
            return np.real(conv) / self.coverage
        g = self.grid
        acc = np.zeros((g.N,) * 3)
        half = int(np.ceil(2.0 / g.dx)) + 1
        for t, w in zip(self.translates, weights):
            centers = [int(round((t[a] + g.L / 2.0) / g.dx)) for a in range(3)]
            windows = [
                np.arange(c - half, c + half + 1) % g.N for c in centers
            ]
            deltas = [self._torus_delta(g.x1[windows[a]], t[a]) for a in range(3)]
            r = np.sqrt(
                deltas[0][:, None, None] ** 2
                + deltas[1][None, :, None] ** 2
                + deltas[2][None, None, :] ** 2
            )
            acc[np.ix_(*windows)] += w * bump_profile(r)
        return acc / self.coverage


def build_partition(grid: GridSpec) -> PartitionOfUnity:
    """Enumerate the integer translates meeting the box and precompute the
    coverage field; every grid node must be covered by at least one bump."""
    L = grid.L
    if L < 4.0:
        raise ValueError(
            "box shorter than 4 unit cells cannot carry the unit-scale partition"
        )
    lo = int(np.ceil(-L / 2.0))
    hi = int(np.floor(L / 2.0 - 1e-12))
    sites_1d = np.arange(lo, hi + 1)
    if len(sites_1d) ** 3 < 27:
        raise ValueError("need at least 27 translates inside the box")
    A, B, C = np.meshgrid(sites_1d, sites_1d, sites_1d, indexing="ij")
    translates = np.column_stack([A.ravel(), B.ravel(), C.ravel()]).astype(float)

    fast = (
        abs(L - round(L)) < 1e-9
        and int(round(L)) % 2 == 0
        and grid.N % int(round(L)) == 0
    )
    pou = PartitionOfUnity(grid, translates, np.ones((grid.N,) * 3), fast)
    coverage = pou.weight_sum(np.ones(pou.n_translates))
    if coverage.min() <= 1e-12:
        raise ValueError("partition does not cover the box (grid node left bare)")
    return PartitionOfUnity(grid, translates, coverage, fast)


def randomize_physical(
    f: SpectralField,
    pou: PartitionOfUnity,
    model: RandomModel,
    draw: int = 0,
    weights: np.ndarray | None = None,
) -> SpectralField:
    """Multiply each partition piece of ``f`` by its substream's draw.

    ``weights`` overrides the sampled multipliers (useful for forcing the
    all-ones configuration); otherwise draw ``draw`` of the per-translate
    substreams is used.
    """
    if weights is None:
        ids = pou.substream_ids(model.seed)
        weights = model.sample_array(ids, draw)
    R = pou.weight_sum(np.asarray(weights, dtype=float))
    return field_from_physical(f.grid, f.values * R)


def randomization_sidecar(model: RandomModel, pou: PartitionOfUnity, draw: int) -> str:
    """JSON sidecar describing a randomization artifact."""
    return json.dumps(
        {
            "kind": "physical",
            "model": model.to_json_dict(),
            "draw": draw,
            "n_translates": pou.n_translates,
            "box_length": pou.grid.L,
            "points_per_axis": pou.grid.N,
        },
        indent=2,
    )
