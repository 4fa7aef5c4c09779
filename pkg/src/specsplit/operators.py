"""Dense complex operators, block-diagonal families, and the projection oracle.

Everything downstream works on :class:`Operator`: an immutable dense complex
square matrix, optionally tagged as the N-block truncation of a named
block-diagonal family.  This module provides

* construction of the built-in block families (``build_block_operator``),
* the JSON operator descriptor (``operator_from_descriptor``),
* basic spectral queries (``spectrum``, ``resolvent``, ``choose_h``),
* the ground-truth spectral projector ``oracle_projection``, computed from an
  ordered triangular (Schur) decomposition with a Sylvester solve for the
  invariant-subspace coupling -- deliberately *not* by contour quadrature, so
  it can serve as an independent oracle for the quadrature route.

All operations are pure functions of immutable inputs and are safe to call
concurrently.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
import scipy.linalg as sla

from .errors import NearSpectrumError, OperatorError

__all__ = [
    "Operator",
    "FamilyTag",
    "Spectrum",
    "ProjectionPair",
    "build_block_operator",
    "family_names",
    "mcintosh_yagi_parts",
    "mcintosh_yagi_pick_n",
    "operator_from_descriptor",
    "descriptor_of",
    "dense_operator",
    "diag_operator",
    "random_gap_operator",
    "spectrum",
    "eigenvalues_of",
    "operator_norm",
    "near_spectrum_tol",
    "resolvent",
    "resolvent_many",
    "resolvent_norms",
    "oracle_projection",
    "spectral_norm",
    "choose_h",
]

_MACHINE_EPS = float(np.finfo(np.float64).eps)

# Size cap for generated blocks; beyond this a desk-scale computation is
# hopeless and the generator refuses.
_BLOCK_SIZE_CAP = 4096


@dataclass(frozen=True)
class FamilyTag:
    """Identifies an operator as the truncation of a named block family."""

    family: str
    params: dict
    n_blocks: int
    block_dims: tuple[int, ...]

    def block_slices(self):
        """Index ranges of the individual blocks inside the direct sum."""
        out = []
        start = 0
        for d in self.block_dims:
            out.append(slice(start, start + d))
            start += d
        return out


@dataclass(frozen=True)
class Operator:
    """A dense complex square matrix, immutable after construction."""

    entries: np.ndarray
    family_tag: FamilyTag | None = None

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex, copy=True, order="C")
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise OperatorError(f"operator entries must be square, got shape {m.shape}")
        if m.shape[0] == 0:
            raise OperatorError("operator must have positive dimension")
        if not np.all(np.isfinite(m.view(np.float64))):
            raise OperatorError("operator entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        if self.family_tag is not None and sum(self.family_tag.block_dims) != m.shape[0]:
            raise OperatorError("family_tag block dimensions do not sum to operator dimension")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    # Eigenvalues and the operator norm are cached on first use; the operator
    # itself never changes, so the cache cannot go stale.
    def _cache(self, key: str, compute: Callable[[], Any]):
        store = self.__dict__.get("_lazy")
        if store is None:
            store = {}
            object.__setattr__(self, "_lazy", store)
        if key not in store:
            store[key] = compute()
        return store[key]


@dataclass(frozen=True)
class Spectrum:
    """All eigenvalues (with multiplicity) and the gap to the imaginary axis."""

    eigenvalues: np.ndarray
    min_abs_real: float


@dataclass(frozen=True)
class ProjectionPair:
    """Complementary spectral projections for the right/left open half-plane.

    ``basis_plus``/``basis_minus`` are column-orthonormal and span the ranges
    of ``p_plus``/``p_minus`` (the invariant subspaces).  Note the ranges are
    in general not orthogonal to each other; only each basis is orthonormal.
    """

    p_plus: np.ndarray
    p_minus: np.ndarray
    basis_plus: np.ndarray
    basis_minus: np.ndarray

    @property
    def rank_plus(self) -> int:
        return self.basis_plus.shape[1]

    @property
    def rank_minus(self) -> int:
        return self.basis_minus.shape[1]


# ---------------------------------------------------------------------------
# basic queries
# ---------------------------------------------------------------------------


def spectral_norm(m) -> float:
    """Largest singular value of a matrix (the operator norm)."""
    m = np.asarray(m, dtype=complex)
    if m.size == 0:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False)[0])


def eigenvalues_of(op: Operator) -> np.ndarray:
    """All eigenvalues of ``op`` in a deterministic order (by real, then
    imaginary part)."""

    def compute():
        ev = np.linalg.eigvals(op.entries)
        order = np.lexsort((ev.imag, ev.real))
        ev = ev[order]
        ev.setflags(write=False)
        return ev

    return op._cache("eigs", compute)


def operator_norm(op: Operator) -> float:
    return op._cache("norm", lambda: spectral_norm(op.entries))


def spectrum(op: Operator) -> Spectrum:
    """Eigenvalues with multiplicity plus the spectral gap ``min |Re lambda|``."""
    try:
        ev = eigenvalues_of(op)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigensolver failure
        raise OperatorError(f"eigensolver failed: {exc}") from exc
    return Spectrum(eigenvalues=ev, min_abs_real=float(np.abs(ev.real).min()))


def near_spectrum_tol(op: Operator) -> float:
    """Default tolerance for the "near spectrum" precondition.

    Scale-aware default 1e-8*(1+||S||), capped at a quarter of the spectral
    gap.  The cap keeps operators with a huge norm but a modest gap usable
    (the Toeplitz-coupled dyadic family reaches ||S|| ~ 1e51 at desk scale
    while its gap stays 1); without it every point of interest would be
    rejected as "near spectrum".
    """
    base = 1e-8 * (1.0 + operator_norm(op))
    gap = spectrum(op).min_abs_real
    if gap > 0:
        return min(base, 0.25 * gap)
    return base


def _nearest_eigenvalue(op: Operator, lam: complex) -> tuple[complex, float]:
    ev = eigenvalues_of(op)
    d = np.abs(ev - lam)
    i = int(np.argmin(d))
    return complex(ev[i]), float(d[i])


def resolvent(op: Operator, lam: complex, tol: float | None = None) -> np.ndarray:
    """(S - lambda)^{-1} by a dense linear solve.

    Refuses when ``lam`` is within ``tol`` of the spectrum and verifies the
    solve residual ``||(S - lambda) R - I||`` against a backward-stability
    bound.
    """
    if tol is None:
        tol = near_spectrum_tol(op)
    ev, dist = _nearest_eigenvalue(op, lam)
    if dist <= tol:
        raise NearSpectrumError(
            f"lambda={lam} is within {dist:.3e} of eigenvalue {ev} (tol {tol:.3e})",
            eigenvalue=ev,
            distance=dist,
            tol=tol,
        )
    n = op.dim
    shifted = op.entries - lam * np.eye(n)
    res = np.linalg.solve(shifted, np.eye(n, dtype=complex))
    residual = np.linalg.norm(shifted @ res - np.eye(n), "fro")
    bound = 100.0 * n * _MACHINE_EPS * np.linalg.norm(shifted, "fro") * np.linalg.norm(res, "fro")
    if residual > max(bound, 1e3 * _MACHINE_EPS):
        raise NearSpectrumError(
            f"resolvent solve at lambda={lam} lost accuracy (residual {residual:.3e})",
            eigenvalue=ev,
            distance=dist,
            tol=tol,
        )
    return res


def _solve_batch(entries: np.ndarray, lams: np.ndarray) -> np.ndarray:
    """Stack of (S - lam_k)^{-1}, chunked to keep memory bounded."""
    n = entries.shape[0]
    eye = np.eye(n, dtype=complex)
    out = np.empty((len(lams), n, n), dtype=complex)
    chunk = max(1, 4_000_000 // (n * n))
    for start in range(0, len(lams), chunk):
        piece = lams[start : start + chunk]
        shifted = entries[None, :, :] - piece[:, None, None] * eye[None, :, :]
        out[start : start + len(piece)] = np.linalg.solve(
            shifted, np.broadcast_to(eye, shifted.shape)
        )
    return out


def resolvent_many(op: Operator, lams, tol: float | None = None) -> np.ndarray:
    """Resolvents at many spectral parameters, as a (k, dim, dim) stack.

    Same near-spectrum precondition as :func:`resolvent`, checked for every
    point at once; per-point residual verification is skipped (callers that
    need certified values estimate errors at a higher level).
    """
    lams = np.asarray(lams, dtype=complex).ravel()
    if tol is None:
        tol = near_spectrum_tol(op)
    ev = eigenvalues_of(op)
    d = np.abs(lams[:, None] - ev[None, :])
    dmin = d.min(axis=1)
    bad = int(np.argmin(dmin))
    if dmin[bad] <= tol:
        which = int(np.argmin(d[bad]))
        raise NearSpectrumError(
            f"lambda={lams[bad]} is within {dmin[bad]:.3e} of eigenvalue "
            f"{ev[which]} (tol {tol:.3e})",
            eigenvalue=complex(ev[which]),
            distance=float(dmin[bad]),
            tol=tol,
        )
    return _solve_batch(op.entries, lams)


def resolvent_norms(op: Operator, lams, tol: float | None = None) -> np.ndarray:
    """Operator norms ||(S - lam)^{-1}|| on a grid of spectral parameters."""
    res = resolvent_many(op, lams, tol=tol)
    return np.linalg.svd(res, compute_uv=False)[:, 0]


def choose_h(op: Operator, safety: float) -> float:
    """Contour abscissa ``h = safety * gap``; the strip |Re z| <= h is then
    inside the resolvent set."""
    if not 0.0 < safety < 1.0:
        raise OperatorError(f"safety must lie in (0, 1), got {safety}")
    gap = spectrum(op).min_abs_real
    if gap <= 0.0:
        raise NearSpectrumError("spectral gap to the imaginary axis is zero", distance=0.0)
    return safety * gap


# ---------------------------------------------------------------------------
# the projection oracle
# ---------------------------------------------------------------------------


def _sorted_schur_basis(entries: np.ndarray, want_plus: bool):
    """Schur vectors with the selected half-plane eigenvalues leading."""
    if want_plus:
        t, q, sdim = sla.schur(entries, output="complex", sort=lambda z: z.real > 0)
    else:
        t, q, sdim = sla.schur(entries, output="complex", sort=lambda z: z.real < 0)
    return t, q, int(sdim)


def oracle_projection(op: Operator, tol: float | None = None) -> ProjectionPair:
    """Riesz spectral projections onto the right/left half-plane invariant
    subspaces, by ordered Schur decomposition.

    With ``S = Q T Q^H`` and the right-half-plane eigenvalues ordered first,
    the coupling ``X`` solving ``T11 X - X T22 = T12`` yields the projection
    ``[[I, X], [0, 0]]`` in Schur coordinates.  This is the ground-truth
    oracle the contour quadrature is checked against; eigenvalues are never
    assumed simple.
    """
    if tol is None:
        tol = near_spectrum_tol(op)
    spec = spectrum(op)
    if spec.min_abs_real <= tol:
        offender = spec.eigenvalues[int(np.argmin(np.abs(spec.eigenvalues.real)))]
        raise NearSpectrumError(
            f"eigenvalue {offender} is within {spec.min_abs_real:.3e} of the "
            f"imaginary axis (tol {tol:.3e})",
            eigenvalue=complex(offender),
            distance=spec.min_abs_real,
            tol=tol,
        )
    n = op.dim
    t, q, k = _sorted_schur_basis(op.entries, want_plus=True)
    if k == 0:
        p_plus = np.zeros((n, n), dtype=complex)
    elif k == n:
        p_plus = np.eye(n, dtype=complex)
    else:
        x = sla.solve_sylvester(t[:k, :k], -t[k:, k:], t[:k, k:])
        core = np.zeros((n, n), dtype=complex)
        core[:k, :k] = np.eye(k)
        core[:k, k:] = x
        p_plus = q @ core @ q.conj().T
    basis_plus = q[:, :k].copy()

    _, q_minus, k_minus = _sorted_schur_basis(op.entries, want_plus=False)
    if k + k_minus != n:
        raise SplittingRankError(n, k, k_minus)
    basis_minus = q_minus[:, :k_minus].copy()
    p_minus = np.eye(n, dtype=complex) - p_plus
    return ProjectionPair(
        p_plus=p_plus, p_minus=p_minus, basis_plus=basis_plus, basis_minus=basis_minus
    )


class SplittingRankError(OperatorError):
    def __init__(self, n, k_plus, k_minus):
        super().__init__(
            f"half-plane eigenvalue counts {k_plus}+{k_minus} do not sum to dimension {n}"
        )


# ---------------------------------------------------------------------------
# block families
# ---------------------------------------------------------------------------


def _require_params(family: str, params: dict, allowed: set[str]):
    unknown = set(params) - allowed
    if unknown:
        raise OperatorError(f"family '{family}' does not accept parameters {sorted(unknown)}")


def _blocks_dichotomy(params: dict, n_blocks: int) -> list[np.ndarray]:
    # S_n = [[n, 2n^2], [0, -n]]: one eigenvalue at +n, one at -n, with a
    # coupling that makes the spectral projections grow like n.
    _require_params("dichotomy-2.3", params, set())
    return [
        np.array([[n, 2.0 * n * n], [0.0, -n]], dtype=complex)
        for n in range(1, n_blocks + 1)
    ]


def _blocks_almost_bisect(params: dict, n_blocks: int) -> list[np.ndarray]:
    # S_n = [[n, 2n^(1+p)], [0, -n]] with 0 < p < 1: resolvent decay on the
    # axis degrades to |lambda|^(p-1) while the projections grow like n^p.
    _require_params("almost-bisect-5.5", params, {"p"})
    if "p" not in params:
        raise OperatorError("family 'almost-bisect-5.5' requires parameter p")
    p = float(params["p"])
    if not 0.0 < p < 1.0:
        # p = 0 degenerates to the bounded-coupling family whose axis decay is
        # a full power of 1/|lambda|; it is a different regime, so refuse.
        raise OperatorError(f"parameter p must lie strictly in (0, 1), got {p}")
    return [
        np.array([[n, 2.0 * n ** (1.0 + p)], [0.0, -n]], dtype=complex)
        for n in range(1, n_blocks + 1)
    ]


def _blocks_constant_diag(params: dict, n_blocks: int) -> list[np.ndarray]:
    _require_params("constant-diag", params, {"values"})
    values = params.get("values", (1.0, -1.0))
    vals = np.asarray(list(values), dtype=complex)
    if vals.size == 0:
        raise OperatorError("family 'constant-diag' needs at least one diagonal value")
    return [np.diag(vals) for _ in range(n_blocks)]


def mcintosh_yagi_pick_n(m_const: float, m: int) -> int:
    """Smallest matrix order n with (M-1)/(pi*sqrt(18)) * log(n/2 + 1) >= m."""
    c = (m_const - 1.0) / (np.pi * np.sqrt(18.0))
    target = np.exp(m / c)  # need n/2 + 1 >= target
    # Start a little below the analytic answer and walk up, so the returned
    # n is the smallest one satisfying the inequality despite float fuzz.
    n = max(1, int(np.ceil(2.0 * (target - 1.0))) - 3)
    while c * np.log(n / 2.0 + 1.0) < m:
        n += 1
        if n > _BLOCK_SIZE_CAP:
            raise OperatorError(
                f"desk-scale exceeded: block order n={n} above cap {_BLOCK_SIZE_CAP}"
            )
    if n > _BLOCK_SIZE_CAP:
        raise OperatorError(
            f"desk-scale exceeded: block order n={n} above cap {_BLOCK_SIZE_CAP}"
        )
    return n


def mcintosh_yagi_parts(m_const: float, m: int):
    """Ingredients of the m-th dyadic Toeplitz-coupled block.

    Returns ``(n, D, B)`` where D = diag(2^0, ..., 2^n) and B is the
    antisymmetric Toeplitz coupling with entries (M-1)/(pi*(j-i)) off the
    diagonal.  The block itself is [[D, B@D], [0, -D]].
    """
    if m_const <= 1.0:
        raise OperatorError(f"constant M must exceed 1, got {m_const}")
    if m < 1:
        raise OperatorError(f"block index m must be >= 1, got {m}")
    n = mcintosh_yagi_pick_n(m_const, m)
    d = np.diag(2.0 ** np.arange(0, n + 1))
    j = np.arange(n + 1)
    diff = j[None, :] - j[:, None]
    with np.errstate(divide="ignore"):
        b = np.where(
            diff == 0,
            0.0,
            (m_const - 1.0) / np.pi * np.sign(diff) / np.maximum(np.abs(diff), 1),
        )
    return n, d, b


def _blocks_mcintosh_yagi(params: dict, n_blocks: int) -> list[np.ndarray]:
    _require_params("mcintosh-yagi", params, {"Mconst"})
    m_const = float(params.get("Mconst", 10.0))
    blocks = []
    for m in range(1, n_blocks + 1):
        _, d, b = mcintosh_yagi_parts(m_const, m)
        zero = np.zeros_like(d)
        blocks.append(np.block([[d, b @ d], [zero, -d]]).astype(complex))
    return blocks


_FAMILIES: dict[str, Callable[[dict, int], list[np.ndarray]]] = {
    "dichotomy-2.3": _blocks_dichotomy,
    # the supremum-bound study in the text uses the same block family
    "bound-4.6": _blocks_dichotomy,
    "almost-bisect-5.5": _blocks_almost_bisect,
    "constant-diag": _blocks_constant_diag,
    "mcintosh-yagi": _blocks_mcintosh_yagi,
}


def family_names() -> tuple[str, ...]:
    return tuple(sorted(_FAMILIES))


def build_block_operator(family: str, n_blocks: int, params: dict | None = None) -> Operator:
    """Direct sum of the first ``n_blocks`` blocks of a named family.

    The generators are deterministic: rebuilding with the same arguments
    yields bit-identical entries.
    """
    if family not in _FAMILIES:
        raise OperatorError(f"unknown family '{family}'; known: {', '.join(family_names())}")
    if not isinstance(n_blocks, numbers.Integral) or n_blocks < 1:
        raise OperatorError(f"N must be a positive integer, got {n_blocks!r}")
    params = dict(params or {})
    blocks = _FAMILIES[family](params, int(n_blocks))
    entries = sla.block_diag(*blocks).astype(complex)
    tag = FamilyTag(
        family=family,
        params=params,
        n_blocks=int(n_blocks),
        block_dims=tuple(b.shape[0] for b in blocks),
    )
    return Operator(entries=entries, family_tag=tag)


def dense_operator(entries) -> Operator:
    return Operator(entries=np.asarray(entries, dtype=complex))


def diag_operator(values) -> Operator:
    return Operator(entries=np.diag(np.asarray(list(values), dtype=complex)))


def random_gap_operator(
    dim: int, seed: int, gap: float = 0.5, norm_cap: float = 10.0
) -> Operator:
    """Seeded random dense operator with spectral gap >= ``gap``.

    Construction: a triangular matrix with eigenvalues placed at
    +-[gap, 2.5] x [-2, 2]i (half of each sign), mild strictly-upper
    coupling, conjugated by a Haar-random unitary.  The eigenvalues are
    exactly the diagonal, so the gap holds by construction; the norm stays
    well under ``norm_cap`` for desk dimensions.
    """
    if dim < 2:
        raise OperatorError("random gap operator needs dim >= 2")
    rng = np.random.default_rng(seed)
    n_plus = dim // 2 + (rng.integers(0, 2) if dim % 2 else 0)
    n_minus = dim - n_plus
    re = np.concatenate(
        [rng.uniform(gap, 2.5, n_plus), -rng.uniform(gap, 2.5, n_minus)]
    )
    im = rng.uniform(-2.0, 2.0, dim)
    tri = np.diag(re + 1j * im)
    tri += np.triu(
        0.3 * (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))), 1
    )
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    entries = q @ tri @ q.conj().T
    op = Operator(entries=entries)
    if operator_norm(op) > norm_cap:  # pragma: no cover - construction keeps norms small
        op = Operator(entries=entries * (norm_cap / operator_norm(op)))
    return op


# ---------------------------------------------------------------------------
# JSON operator descriptors
# ---------------------------------------------------------------------------

_FAMILY_FIELDS = {"kind", "family", "params", "N"}
_DENSE_FIELDS = {"kind", "entries"}


def _entries_from_json(rows) -> np.ndarray:
    try:
        arr = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise OperatorError(f"malformed dense entries: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise OperatorError(
            "dense entries must be rows of [re, im] pairs, "
            f"got an array of shape {arr.shape}"
        )
    return arr[..., 0] + 1j * arr[..., 1]


def _entries_to_json(entries: np.ndarray) -> list:
    return [
        [[float(z.real), float(z.imag)] for z in row]
        for row in np.asarray(entries, dtype=complex)
    ]


def operator_from_descriptor(desc: dict) -> Operator:
    """Build an operator from the JSON descriptor schema.

    ``{"kind": "family", "family": name, "params": {...}, "N": int}`` or
    ``{"kind": "dense", "entries": [[[re, im], ...], ...]}``.  Unknown fields
    are rejected.
    """
    if not isinstance(desc, dict):
        raise OperatorError("operator descriptor must be a JSON object")
    kind = desc.get("kind")
    if kind == "family":
        unknown = set(desc) - _FAMILY_FIELDS
        if unknown:
            raise OperatorError(f"unknown descriptor fields {sorted(unknown)}")
        if "family" not in desc or "N" not in desc:
            raise OperatorError("family descriptor requires 'family' and 'N'")
        n = desc["N"]
        if not isinstance(n, numbers.Integral) or isinstance(n, bool) or n < 1:
            raise OperatorError(f"'N' must be a positive integer, got {n!r}")
        params = desc.get("params", {})
        if not isinstance(params, dict):
            raise OperatorError("'params' must be an object")
        return build_block_operator(desc["family"], int(n), params)
    if kind == "dense":
        unknown = set(desc) - _DENSE_FIELDS
        if unknown:
            raise OperatorError(f"unknown descriptor fields {sorted(unknown)}")
        if "entries" not in desc:
            raise OperatorError("dense descriptor requires 'entries'")
        return Operator(entries=_entries_from_json(desc["entries"]))
    raise OperatorError(f"descriptor kind must be 'family' or 'dense', got {kind!r}")


def descriptor_of(op: Operator) -> dict:
    """Inverse of :func:`operator_from_descriptor` (dense form when untagged)."""
    if op.family_tag is not None:
        tag = op.family_tag
        return {
            "kind": "family",
            "family": tag.family,
            "params": dict(tag.params),
            "N": tag.n_blocks,
        }
    return {"kind": "dense", "entries": _entries_to_json(op.entries)}
