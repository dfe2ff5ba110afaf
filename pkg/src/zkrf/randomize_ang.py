"""Angular randomization of wave data: per-dyadic-block rescaling to unit
frequency, expansion in a good frame of spherical harmonics with
Fourier-Bessel radial profiles, sign randomization of the angular modes, and
reassembly.

Frequency-lattice dilations are exact index reinterpretations (the block is
analysed on its own lattice in rescaled coordinates); no physical-space
interpolation enters the pipeline.  Our transform convention
c(xi) = int f exp(-i xi.x) dx makes the physical-space half-integer Hankel
synthesis constant equal to i^k (2 pi)^{-3/2}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import make_interp_spline

from .dyadic import CUTOFF, AngularQuadrature, angular_quadrature, _weights, _shell_is_empty
from .fields import GridSpec, SpectralField, zero_field
from .randomize_phys import RandomModel, substream_ids

# unit-frequency radial window of a rescaled dyadic block
_RHO_LO = 0.5
_RHO_HI = 2.0


class FrameCertificateError(RuntimeError):
    """The good-frame growth certificate exceeded its cap after all retries."""


class QuadratureDegreeError(ValueError):
    """The sphere rule cannot integrate the requested harmonic content."""


# -- spherical harmonics --------------------------------------------------------


def _sph_harm_complex(n: int, m: int, polar: np.ndarray, azim: np.ndarray):
    try:
        from scipy.special import sph_harm_y

        return sph_harm_y(n, m, polar, azim)
    except ImportError:  # older scipy: note the swapped angle order
        from scipy.special import sph_harm

        return sph_harm(m, n, azim, polar)


def real_sph_harm_degree(k: int, dirs: np.ndarray) -> np.ndarray:
    """Orthonormal real spherical harmonics of degree ``k`` at unit vectors.

    Returns shape (2k+1, n_points); rows ordered m = -k..k.
    """
    dirs = np.atleast_2d(dirs)
    x, y, z = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    polar = np.arccos(np.clip(z, -1.0, 1.0))
    azim = np.arctan2(y, x)
    rows = []
    for m in range(-k, k + 1):
        if m == 0:
            rows.append(np.real(_sph_harm_complex(k, 0, polar, azim)))
        elif m > 0:
            Y = _sph_harm_complex(k, m, polar, azim)
            rows.append(np.sqrt(2.0) * (-1.0) ** m * np.real(Y))
        else:
            Y = _sph_harm_complex(k, -m, polar, azim)
            rows.append(np.sqrt(2.0) * (-1.0) ** m * np.imag(Y))
    return np.vstack(rows)


def frame_modes(k_deg_max: int) -> list[tuple[int, int]]:
    """Flat (degree, index) enumeration; each degree k carries 2k+1 modes."""
    return [(k, l) for k in range(k_deg_max + 1) for l in range(1, 2 * k + 2)]


# -- good frame ------------------------------------------------------------------


@dataclass(frozen=True)
class GoodFrame:
    """Per-degree orthonormal bases obtained by Haar-random orthogonal mixing
    of the reference harmonics, with measured L^q growth certificates.

    ``c_frame`` is the single recorded constant with
    max_l ||b_{k,l}||_{L^q} <= c_frame sqrt(q) over the certificate q's and
    all degrees; empirical sup norms are recorded but not enforced.
    """

    k_deg_max: int
    seed: int
    retry: int
    mixers: tuple
    quad: AngularQuadrature
    basis_nodes: np.ndarray
    cert_qs: tuple
    cert_table: np.ndarray
    sup_table: np.ndarray
    c_frame: float

    @property
    def n_modes(self) -> int:
        return (self.k_deg_max + 1) ** 2

    def degree_sizes(self) -> list[int]:
        return [2 * k + 1 for k in range(self.k_deg_max + 1)]

    def basis_at(self, dirs: np.ndarray) -> np.ndarray:
        """Evaluate every frame function at arbitrary unit vectors."""
        blocks = [
            self.mixers[k] @ real_sph_harm_degree(k, dirs)
            for k in range(self.k_deg_max + 1)
        ]
        return np.vstack(blocks)

    def gram_defect(self) -> float:
        """Worst deviation of the per-degree Gram matrices from the identity."""
        worst = 0.0
        start = 0
        for k in range(self.k_deg_max + 1):
            n = 2 * k + 1
            B = self.basis_nodes[start : start + n]
            G = (B * self.quad.theta_weights) @ B.T
            worst = max(worst, float(np.abs(G - np.eye(n)).max()))
            start += n
        return worst


def _haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(A)
    return Q * np.sign(np.diag(R))


def build_good_frame(
    k_deg_max: int,
    seed: int = 0,
    quad: AngularQuadrature | None = None,
    cert_qs: tuple = (2, 4, 8, 16),
    cap: float = 1.0,
    max_retries: int = 5,
) -> GoodFrame:
    """Draw per-degree Haar-random orthonormal bases until the measured
    L^q/sqrt(q) certificate fits under ``cap`` (at most ``max_retries``
    attempts), then freeze the evaluations and certificates."""
    if k_deg_max < 0:
        raise ValueError("k_deg_max must be >= 0")
    needed = 2 * k_deg_max + 3
    if quad is None:
        quad = angular_quadrature(needed, n_radial=48, r_lo=_RHO_LO, r_hi=_RHO_HI)
    if quad.degree < needed:
        raise QuadratureDegreeError(
            f"sphere rule of degree {quad.degree} cannot certify harmonic "
            f"content up to degree {k_deg_max} (need {needed})"
        )
    # certificates use a finer rule so high-power integrands are trustworthy
    cert_quad = angular_quadrature(4 * k_deg_max + 3, n_radial=2)

    for retry in range(max_retries):
        mixers = []
        for k in range(k_deg_max + 1):
            rng = np.random.default_rng([seed, retry, k])
            mixers.append(_haar_orthogonal(2 * k + 1, rng))
        mixers = tuple(mixers)

        cert = np.zeros((k_deg_max + 1, len(cert_qs)))
        sup = np.zeros(k_deg_max + 1)
        for k in range(k_deg_max + 1):
            B = mixers[k] @ real_sph_harm_degree(k, cert_quad.theta)
            sup[k] = np.abs(B).max()
            for iq, q in enumerate(cert_qs):
                norms = (np.abs(B) ** q @ cert_quad.theta_weights) ** (1.0 / q)
                cert[k, iq] = norms.max()
        c_frame = float((cert / np.sqrt(np.array(cert_qs))).max())
        if c_frame <= cap:
            basis_nodes = np.vstack(
                [mixers[k] @ real_sph_harm_degree(k, quad.theta) for k in range(k_deg_max + 1)]
            )
            frame = GoodFrame(
                k_deg_max,
                seed,
                retry,
                mixers,
                quad,
                basis_nodes,
                tuple(cert_qs),
                cert,
                sup,
                c_frame,
            )
            defect = frame.gram_defect()
            if defect > 1e-10:
                raise QuadratureDegreeError(
                    f"Gram defect {defect:.2e} exceeds 1e-10; sphere rule too coarse"
                )
            return frame
    raise FrameCertificateError(
        f"certificate cap {cap} unreachable in {max_retries} attempts "
        f"(last c_frame {c_frame:.3f})"
    )


def save_frame(frame: GoodFrame, path, sidecar_path=None) -> None:
    """Binary container (npz) with degree range, mixing matrices and
    certificates, plus an optional JSON sidecar."""
    payload = {
        "k_deg_max": np.array(frame.k_deg_max),
        "seed": np.array(frame.seed),
        "retry": np.array(frame.retry),
        "cert_qs": np.array(frame.cert_qs),
        "cert_table": frame.cert_table,
        "sup_table": frame.sup_table,
        "c_frame": np.array(frame.c_frame),
        "quad_degree": np.array(frame.quad.degree),
    }
    for k, M in enumerate(frame.mixers):
        payload[f"mixer_{k}"] = M
    np.savez(path, **payload)
    if sidecar_path is not None:
        with open(sidecar_path, "w") as fh:
            json.dump(
                {
                    "seed": frame.seed,
                    "retry": frame.retry,
                    "k_deg_max": frame.k_deg_max,
                    "c_frame": frame.c_frame,
                    "quad_degree": frame.quad.degree,
                    "cert_qs": list(frame.cert_qs),
                },
                fh,
                indent=2,
            )


def load_frame(path) -> GoodFrame:
    with np.load(path) as z:
        k_deg_max = int(z["k_deg_max"])
        quad = angular_quadrature(
            int(z["quad_degree"]), n_radial=40, r_lo=_RHO_LO, r_hi=_RHO_HI
        )
        mixers = tuple(z[f"mixer_{k}"] for k in range(k_deg_max + 1))
        basis_nodes = np.vstack(
            [mixers[k] @ real_sph_harm_degree(k, quad.theta) for k in range(k_deg_max + 1)]
        )
        return GoodFrame(
            k_deg_max,
            int(z["seed"]),
            int(z["retry"]),
            mixers,
            quad,
            basis_nodes,
            tuple(int(q) for q in z["cert_qs"]),
            z["cert_table"].copy(),
            z["sup_table"].copy(),
            float(z["c_frame"]),
        )


# -- Bessel functions -------------------------------------------------------------


def spherical_jn_stable(k_max: int, t: np.ndarray) -> np.ndarray:
    """Spherical Bessel j_0..j_{k_max} at positive arguments; upward recurrence
    where it is stable (t > order), Miller's downward recurrence otherwise."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("argument must be positive")
    n_orders = k_max + 1
    out = np.empty((n_orders,) + t.shape)

    j0 = np.sin(t) / t
    out[0] = j0
    if k_max >= 1:
        out[1] = np.sin(t) / t**2 - np.cos(t) / t
    for n in range(1, k_max):
        out[n + 1] = (2 * n + 1) / t * out[n] - out[n - 1]

    # downward pass for t < order where the upward sweep loses accuracy
    unstable = t < (k_max + 0.5)
    if np.any(unstable) and k_max >= 1:
        ts = t[unstable]
        n_start = k_max + 16 + int(np.sqrt(40.0 * max(k_max, 1)))
        jp = np.zeros_like(ts)
        jc = np.full_like(ts, 1e-30)
        down = np.empty((n_orders,) + ts.shape)
        for n in range(n_start, -1, -1):
            jm = (2 * n + 3) / ts * jc - jp
            jp, jc = jc, jm
            if n <= k_max:
                down[n] = jm
        scale = (np.sin(ts) / ts) / down[0]
        down *= scale
        mask = np.where(unstable)
        for n in range(n_orders):
            out[n][mask] = down[n]
    return out


def bessel_j(mu: float, t) -> np.ndarray:
    """Half-integer Bessel J_mu, mu = (2k+1)/2, via the spherical closed forms:
    J_{k+1/2}(t) = sqrt(2 t / pi) j_k(t)."""
    k2 = round(2 * mu)
    if k2 < 1 or k2 % 2 == 0:
        raise ValueError("order must be a positive half-integer (2k+1)/2")
    k = (k2 - 1) // 2
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    if np.any(t <= 0):
        raise ValueError("argument must be positive")
    vals = np.sqrt(2.0 * t / np.pi) * spherical_jn_stable(k, t)[k]
    return float(vals[0]) if scalar else vals


# -- frequency-space evaluation off the lattice -----------------------------------


def frequency_values_at(f: SpectralField, xi_pts: np.ndarray, batch: int = 512):
    """Continuum transform of the grid field at arbitrary frequencies:
    sum_x f(x) exp(-i xi.x) dx^3, evaluated by separable contractions."""
    g = f.grid
    v = f.values
    x = g.x1
    pts = np.atleast_2d(np.asarray(xi_pts, dtype=float))
    out = np.empty(pts.shape[0], dtype=np.complex128)
    v2 = v.reshape(g.N * g.N, g.N)
    for lo in range(0, pts.shape[0], batch):
        sel = pts[lo : lo + batch]
        E1 = np.exp(-1j * np.outer(sel[:, 0], x))
        E2 = np.exp(-1j * np.outer(sel[:, 1], x))
        E3 = np.exp(-1j * np.outer(sel[:, 2], x))
        t1 = (v2 @ E3.T).reshape(g.N, g.N, -1)
        t2 = np.einsum("abB,Bb->aB", t1, E2)
        out[lo : lo + batch] = np.einsum("aB,Ba->B", t2, E1)
    return out * g.cell_volume


# -- Fourier-Bessel coefficients ---------------------------------------------------


@dataclass
class FourierBesselCoeffs:
    """Radial profiles of one rescaled block in the good frame.

    ``c_hat[mode, i]`` samples the unit-frequency profile at ``rho[i]``; the
    profiles carry the block's whole content below the frame's degree cap.
    """

    m: int
    rho: np.ndarray
    rho_weights: np.ndarray
    c_hat: np.ndarray
    k_deg_max: int

    def l2_mass(self) -> float:
        """(2 pi)^{-3} sum over modes of int |c_hat|^2 rho^2 d rho; equals the
        squared L^2 norm of the rescaled block up to angular truncation."""
        w = self.rho_weights * self.rho**2
        return float(np.sum((np.abs(self.c_hat) ** 2) @ w) / (2 * np.pi) ** 3)

    def fourier_series(self, n_max: int) -> np.ndarray:
        """Coefficients of c_hat as a Fourier series on (0, 4):
        c_n = (1/4) int_0^4 c_hat(rho) exp(-i pi n rho / 2) d rho.

        Reliable while the mode's oscillation period 4/n stays above roughly
        twice the radial node spacing; beyond that the quadrature aliases.
        """
        n = np.arange(-n_max, n_max + 1)
        phases = np.exp(-0.5j * np.pi * np.outer(n, self.rho))
        return (phases * self.rho_weights) @ self.c_hat.T / 4.0

    def series_parseval_defect(self, n_max: int) -> float:
        """Relative gap in 4 sum |c_n|^2 = int_0^4 |c_hat|^2 d rho (flat measure)."""
        cs = self.fourier_series(n_max)
        lhs = 4.0 * np.sum(np.abs(cs) ** 2)
        rhs = np.sum((np.abs(self.c_hat) ** 2) @ self.rho_weights)
        return abs(lhs - rhs) / max(rhs, 1e-300)


def fb_analyze(
    block: SpectralField,
    m: int,
    frame: GoodFrame,
    quad: AngularQuadrature | None = None,
    outband_tol: float = 1e-8,
) -> FourierBesselCoeffs:
    """Expand a dyadic block (given on the original grid) in the good frame.

    The block is read at unit frequency through the exact dilation of the
    lattice: profile samples live at 2^m * rho on the original frequency
    axes.  Output-band mass outside (1/2, 2) after rescaling must be below
    ``outband_tol`` relative.
    """
    if quad is None:
        quad = frame.quad
    if quad.degree < 2 * frame.k_deg_max + 3:
        raise QuadratureDegreeError("sphere rule too coarse for the frame's degrees")
    g = block.grid
    scale = 2.0**m
    if _RHO_HI * scale > g.xi_max * (1 + 1e-12):
        raise ValueError(
            f"block {m} rescales to radii up to {_RHO_HI * scale:.2f}, beyond the "
            f"lattice axis maximum {g.xi_max:.2f}; off-lattice evaluation would alias"
        )
    r = g.xi_norm
    inband = (r >= _RHO_LO * scale) & (r <= _RHO_HI * scale)
    c = block.coeffs
    total = np.sum(np.abs(c) ** 2)
    if total > 0:
        out_mass = np.sqrt(np.sum(np.abs(c[~inband]) ** 2) / total)
        if out_mass > outband_tol:
            raise ValueError(
                f"block has {out_mass:.2e} relative mass outside the rescaled "
                f"unit-frequency band (tolerance {outband_tol:.0e})"
            )
    pts = (scale * quad.r[:, None, None]) * quad.theta[None, :, :]
    ghat = scale**3 * frequency_values_at(block, pts.reshape(-1, 3)).reshape(
        len(quad.r), -1
    )
    # c_hat[mode, i] = int_{S^2} ghat(rho_i theta) b_mode(theta) dtheta
    c_hat = (ghat * quad.theta_weights) @ frame.basis_nodes.T
    return FourierBesselCoeffs(
        m, quad.r.copy(), quad.r_weights.copy(), c_hat.T.copy(), frame.k_deg_max
    )


def _block_lattice_selection(grid: GridSpec, m: int):
    scale = 2.0**m
    r = grid.xi_norm
    sel = (r >= _RHO_LO * scale) & (r <= _RHO_HI * scale)
    idx = np.nonzero(sel)
    rho_lat = r[idx] / scale
    xi = np.stack(
        [grid.xi1[idx[0]], grid.xi1[idx[1]], grid.xi1[idx[2]]], axis=1
    )
    dirs = xi / (rho_lat[:, None] * scale)
    return idx, rho_lat, dirs


def fb_synthesize(
    coeffs: FourierBesselCoeffs,
    frame: GoodFrame,
    grid: GridSpec,
    signs: np.ndarray | None = None,
) -> SpectralField:
    """Rebuild the block on the original lattice, optionally multiplying each
    (degree, index) mode by its sign; ``signs`` absent reconstructs the block."""
    if coeffs.c_hat.shape[0] != frame.n_modes:
        raise ValueError("coefficient table does not match the frame's degrees")
    idx, rho_lat, dirs = _block_lattice_selection(grid, coeffs.m)
    spline = make_interp_spline(coeffs.rho, coeffs.c_hat, k=5, axis=1)
    profiles = spline(np.clip(rho_lat, coeffs.rho[0], coeffs.rho[-1]))
    basis = frame.basis_at(dirs)
    weights = np.ones(frame.n_modes) if signs is None else np.asarray(signs, float)
    ghat = np.einsum("q,qp,qp->p", weights, profiles, basis)
    out = np.zeros((grid.N,) * 3, dtype=np.complex128)
    out[idx] = ghat / 2.0 ** (3 * coeffs.m)
    return SpectralField(grid, out, "frequency")


def bessel_synthesis_at(
    coeffs: FourierBesselCoeffs, frame: GoodFrame, points: np.ndarray
) -> np.ndarray:
    """Physical-space cross-check: evaluate the rescaled block at arbitrary
    points through the half-integer Hankel formula

        g(r theta) = sum_{k,l} i^k (2 pi)^{-3/2} r^{-1/2} b_{k,l}(theta)
                     int c_hat(rho) J_{(2k+1)/2}(r rho) rho^{3/2} d rho.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    r = np.linalg.norm(pts, axis=1)
    if np.any(r <= 0):
        raise ValueError("evaluation points must be away from the origin")
    dirs = pts / r[:, None]
    basis = frame.basis_at(dirs)
    rr = np.multiply.outer(r, coeffs.rho)
    out = np.zeros(len(pts), dtype=np.complex128)
    w = coeffs.rho_weights * coeffs.rho**1.5
    mode = 0
    for k in range(frame.k_deg_max + 1):
        Jk = bessel_j((2 * k + 1) / 2.0, rr.ravel()).reshape(rr.shape)
        radial = (Jk * w) @ coeffs.c_hat[mode : mode + 2 * k + 1].T  # (p, 2k+1)
        a_k = (1j**k) * (2 * np.pi) ** -1.5
        out += a_k / np.sqrt(r) * np.einsum(
            "pl,lp->p", radial, basis[mode : mode + 2 * k + 1]
        )
        mode += 2 * k + 1
    return out


# -- full angular randomization -----------------------------------------------------


class AngularRandomizer:
    """Analysis of every resolved dyadic block of a field, with precomputed
    lattice synthesis tables so that repeated draws are cheap.

    The part of the field outside the resolved blocks (the mean and any mass
    beyond the top shell) is kept unchanged, as is block content above the
    frame's degree cap; ``oracle_mean_square`` returns the exact expectation
    of the randomized squared L^2 norm for unit-variance sign families.
    """

    def __init__(
        self,
        f: SpectralField,
        frame: GoodFrame,
        quad: AngularQuadrature | None = None,
        outband_tol: float = 1e-6,
    ):
        self.frame = frame
        self.grid = f.grid
        g = f.grid
        self.blocks: list[int] = []
        self.coeffs: dict[int, FourierBesselCoeffs] = {}
        self._tables: dict[int, tuple] = {}
        covered = zero_field(g)
        for m in g.resolved_range():
            if _shell_is_empty(g, m):
                continue
            if _RHO_HI * 2.0**m > g.xi_max * (1 + 1e-12):
                # top shell not fully embeddable in the lattice ball: keep it
                # in the untouched remainder rather than alias
                continue
            block = SpectralField(g, f.coeffs * _weights(g, "shell", m), "frequency")
            if block.l2_norm() < 1e-300:
                continue
            cf = fb_analyze(block, m, frame, quad, outband_tol=outband_tol)
            idx, rho_lat, dirs = _block_lattice_selection(g, m)
            spline = make_interp_spline(cf.rho, cf.c_hat, k=5, axis=1)
            profiles = spline(np.clip(rho_lat, cf.rho[0], cf.rho[-1]))
            basis = frame.basis_at(dirs)
            table = (profiles * basis) / 2.0 ** (3 * m)  # (modes, pts)
            self.blocks.append(m)
            self.coeffs[m] = cf
            self._tables[m] = (idx, table)
            covered = covered + SpectralField(g, _synth_full(g, idx, table), "frequency")
        self.remainder = f.to_frequency() - covered

    def signs_for(self, model: RandomModel, draw: int) -> dict[int, np.ndarray]:
        cache = getattr(self, "_id_cache", None)
        if cache is None or cache[0] != model.seed:
            ids_by_block = {}
            for m in self.blocks:
                idx_list = np.array(
                    [(m, k, l) for (k, l) in frame_modes(self.frame.k_deg_max)]
                )
                ids_by_block[m] = substream_ids(model.seed, "ang", idx_list)
            cache = (model.seed, ids_by_block)
            self._id_cache = cache
        return {m: model.sample_array(cache[1][m], draw) for m in self.blocks}

    def synthesize(self, signs_by_block: dict[int, np.ndarray]) -> SpectralField:
        g = self.grid
        acc = np.array(self.remainder.data, copy=True)
        for m in self.blocks:
            idx, table = self._tables[m]
            w = np.asarray(signs_by_block[m], dtype=float)
            acc[idx] += w @ table
        return SpectralField(g, acc, "frequency")

    def roundtrip(self) -> SpectralField:
        ones = {m: np.ones(self.frame.n_modes) for m in self.blocks}
        return self.synthesize(ones)

    def draw(self, model: RandomModel, draw: int) -> SpectralField:
        return self.synthesize(self.signs_for(model, draw))

    def oracle_mean_square(self, variance: float = 1.0) -> float:
        """E ||f^w||^2 for independent mean-zero signs with the given variance:
        the block modes contribute their squared norms, the untouched
        remainder interferes with nothing in expectation."""
        g = self.grid
        total = self.remainder.l2_norm() ** 2
        for m in self.blocks:
            idx, table = self._tables[m]
            total += variance * float(
                np.sum(np.abs(table) ** 2) / g.L**3
            )
        return total


def _synth_full(grid: GridSpec, idx, table) -> np.ndarray:
    out = np.zeros((grid.N,) * 3, dtype=np.complex128)
    out[idx] = np.ones(table.shape[0]) @ table
    return out


def randomize_angular(
    f: SpectralField,
    frame: GoodFrame,
    model: RandomModel,
    draw: int = 0,
    quad: AngularQuadrature | None = None,
) -> SpectralField:
    """One-shot angular randomization; for many draws of the same field build
    an :class:`AngularRandomizer` once and reuse it."""
    rand = AngularRandomizer(f, frame, quad)
    return rand.draw(model, draw)
