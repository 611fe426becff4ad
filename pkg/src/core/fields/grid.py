"""
Uniform Grid Fields

Piecewise-constant vector fields on axis-aligned box grids, the periodic
perforation, and the grid operators used by the energies: commensurate
shifts, difference quotients, pinning, averages, coarsening and the radial
truncation map.

Membership of a cell in a ball or annulus is decided by its center.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from ..errors import GridError


logger = logging.getLogger(__name__)

_SNAP_TOL = 1e-9


def _as_integer(value: float, what: str) -> int:
    nearest = round(value)
    if abs(value - nearest) > _SNAP_TOL * max(1.0, abs(value)):
        raise GridError(f"{what} is not an integer: {value!r}")
    return int(nearest)


@dataclass(frozen=True, eq=False)
class GridDomain:
    """
    Box [a_1, b_1] x ... x [a_d, b_d] tiled by cubes of side h.

    `mask` selects the active cells; None means the full box.
    """
    origin: Tuple[float, ...]
    h: float
    shape: Tuple[int, ...]
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.h <= 0.0:
            raise GridError(f"Cell side must be positive: {self.h}")
        if len(self.origin) != len(self.shape):
            raise GridError(f"origin {self.origin} and shape {self.shape} disagree in dimension")
        if any(n < 1 for n in self.shape):
            raise GridError(f"Every axis needs at least one cell: {self.shape}")
        if self.mask is not None:
            if self.mask.shape != tuple(self.shape):
                raise GridError(f"mask shape {self.mask.shape} does not match {self.shape}")
            if self.mask.dtype != bool:
                object.__setattr__(self, "mask", self.mask.astype(bool))

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float], h: float) -> "GridDomain":
        """
        Full box grid.

        Raises:
            GridError: If some side is not an integer multiple of h
        """
        shape = tuple(
            _as_integer((b - a) / h, f"box side ({a}, {b}) / h")
            for a, b in zip(lower, upper)
        )
        return cls(tuple(float(a) for a in lower), float(h), shape)

    @classmethod
    def cube(cls, d: int, half_width: float, h: float) -> "GridDomain":
        """Box [-half_width, half_width]^d."""
        return cls.box([-half_width] * d, [half_width] * d, h)

    @property
    def d(self) -> int:
        return len(self.shape)

    @property
    def upper(self) -> Tuple[float, ...]:
        return tuple(a + n * self.h for a, n in zip(self.origin, self.shape))

    @property
    def cell_volume(self) -> float:
        return self.h ** self.d

    @property
    def active(self) -> np.ndarray:
        if self.mask is None:
            return np.ones(self.shape, dtype=bool)
        return self.mask

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    def centers(self) -> np.ndarray:
        """Cell centers, shape (*shape, d)."""
        axes = [a + (np.arange(n) + 0.5) * self.h for a, n in zip(self.origin, self.shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def with_mask(self, mask: Optional[np.ndarray]) -> "GridDomain":
        if mask is not None and self.mask is not None:
            mask = mask & self.mask
        return GridDomain(self.origin, self.h, self.shape, mask)

    def ball(self, center: Sequence[float], radius: float) -> "GridDomain":
        """Restrict to cells whose center lies in the open ball."""
        dist = np.linalg.norm(self.centers() - np.asarray(center, dtype=float), axis=-1)
        return self.with_mask(dist < radius)

    def annulus(self, center: Sequence[float], inner: float, outer: float) -> "GridDomain":
        """Restrict to cells with inner < |x - center| < outer."""
        dist = np.linalg.norm(self.centers() - np.asarray(center, dtype=float), axis=-1)
        return self.with_mask((dist > inner) & (dist < outer))

    def same_grid(self, other: "GridDomain") -> bool:
        return (self.shape == other.shape
                and math.isclose(self.h, other.h, rel_tol=1e-12)
                and np.allclose(self.origin, other.origin, rtol=0.0, atol=1e-12 * self.h))

    def describe(self) -> dict:
        return {"origin": list(self.origin), "h": self.h, "shape": list(self.shape),
                "active_cells": self.n_active}


@dataclass(eq=False)
class GridFunction:
    """
    m-vector per cell of a GridDomain.

    `values` has shape (*domain.shape, m); inactive cells carry 0 and are
    ignored by every operator. `exterior` is None ("undefined") or the
    constant m-vector the field takes outside the active set.
    """
    domain: GridDomain
    values: np.ndarray
    exterior: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == self.domain.d:
            values = values[..., None]
        if values.shape[:-1] != tuple(self.domain.shape):
            raise GridError(f"values shape {values.shape} does not match domain {self.domain.shape}")
        if not np.all(np.isfinite(values)):
            raise GridError("Field values must be finite")
        self.values = values
        if self.exterior is not None:
            exterior = np.asarray(self.exterior, dtype=float).reshape(-1)
            if exterior.shape != (self.m,):
                raise GridError(f"exterior value must be an m-vector (m={self.m}): {exterior.shape}")
            self.exterior = exterior

    @classmethod
    def zeros(cls, domain: GridDomain, m: int = 1, exterior=None) -> "GridFunction":
        return cls(domain, np.zeros(tuple(domain.shape) + (m,)), exterior)

    @classmethod
    def constant(cls, domain: GridDomain, z: Sequence[float], exterior=None) -> "GridFunction":
        z = np.asarray(z, dtype=float).reshape(-1)
        values = np.broadcast_to(z, tuple(domain.shape) + z.shape).copy()
        values[~domain.active] = 0.0
        return cls(domain, values, exterior)

    @classmethod
    def from_callable(cls, domain: GridDomain, fn: Callable[[np.ndarray], np.ndarray],
                      exterior=None) -> "GridFunction":
        """Sample fn at cell centers; fn maps (..., d) to (..., m) or (...)."""
        values = np.asarray(fn(domain.centers()), dtype=float)
        if values.ndim == domain.d:
            values = values[..., None]
        values = values.copy()
        values[~domain.active] = 0.0
        return cls(domain, values, exterior)

    @classmethod
    def affine(cls, domain: GridDomain, S: np.ndarray, exterior=None) -> "GridFunction":
        """x -> S x for an m x d matrix S."""
        S = np.atleast_2d(np.asarray(S, dtype=float))
        return cls.from_callable(domain, lambda x: x @ S.T, exterior)

    @property
    def m(self) -> int:
        return self.values.shape[-1]

    def copy(self) -> "GridFunction":
        exterior = None if self.exterior is None else self.exterior.copy()
        return GridFunction(self.domain, self.values.copy(), exterior)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.domain, values, self.exterior)

    def scaled(self, t: float) -> "GridFunction":
        exterior = None if self.exterior is None else t * self.exterior
        return GridFunction(self.domain, t * self.values, exterior)

    def active_values(self) -> np.ndarray:
        """Values of active cells, shape (n_active, m)."""
        return self.values[self.domain.active]

    def is_zero(self) -> bool:
        exterior_zero = self.exterior is None or not np.any(self.exterior)
        return exterior_zero and not np.any(self.active_values())


@dataclass(frozen=True)
class Perforation:
    """Balls B_r(delta i), i in Z^d, with r < delta / 2"""
    delta: float
    r: float

    def __post_init__(self):
        if self.delta <= 0.0:
            raise GridError(f"Perforation period must be positive: {self.delta}")
        if not (0.0 <= self.r < 0.5 * self.delta):
            raise GridError(f"Perforation radius must satisfy 0 <= r < delta/2: r={self.r}, delta={self.delta}")


# Shifts


def shift_offset(xi: Sequence[float], eps: float, h: float) -> Tuple[int, ...]:
    """
    Integer cell offset of the shift eps * xi.

    Raises:
        GridError: If eps * xi / h is not integral
    """
    return tuple(_as_integer(eps * float(c) / h, "shift eps*xi/h component") for c in xi)


def pair_slices(shape: Sequence[int], offset: Sequence[int]):
    """
    Slices (src, dst) with dst = src + offset, both inside the box.

    Returns None when the offset leaves the box entirely.
    """
    src, dst = [], []
    for n, o in zip(shape, offset):
        if abs(o) >= n:
            return None
        if o >= 0:
            src.append(slice(0, n - o))
            dst.append(slice(o, n))
        else:
            src.append(slice(-o, n))
            dst.append(slice(0, n + o))
    return tuple(src), tuple(dst)


def shifted_cells(A: GridDomain, xi: Sequence[float], eps: float) -> np.ndarray:
    """
    Active cells x with x + eps*xi also active, as a boolean mask over the box.

    Raises:
        GridError: Non-commensurate shift
    """
    offset = shift_offset(xi, eps, A.h)
    active = A.active
    if not any(offset):
        return active.copy()
    result = np.zeros(A.shape, dtype=bool)
    slices = pair_slices(A.shape, offset)
    if slices is None:
        return result
    src, dst = slices
    result[src] = active[src] & active[dst]
    return result


def _endpoint_values(u: GridFunction, offset: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """Values at x + offset for every cell x, with a definedness mask."""
    shape = u.domain.shape
    shifted = np.zeros_like(u.values)
    defined = np.zeros(shape, dtype=bool)
    slices = pair_slices(shape, offset)
    if slices is not None:
        src, dst = slices
        shifted[src] = u.values[dst]
        defined[src] = u.domain.active[dst]
    if u.exterior is not None:
        shifted[~defined] = u.exterior
        defined[:] = True
    return shifted, defined


def finite_difference(u: GridFunction, xi: Sequence[float], eps: float,
                      cells: Optional[np.ndarray] = None) -> GridFunction:
    """
    D_eps^xi u(x) = (u(x + eps xi) - u(x)) / eps.

    Without an exterior value the result lives on shifted_cells; with one,
    every active cell is used and outside endpoints take the exterior value.

    Args:
        u: Field
        xi: Shift vector
        eps: Scale
        cells: Optional requested cell mask

    Raises:
        GridError: Non-commensurate shift, or requested cells with an undefined endpoint
    """
    offset = shift_offset(xi, eps, u.domain.h)
    shifted, defined = _endpoint_values(u, offset)
    support = u.domain.active & defined
    if cells is not None:
        if np.any(cells & ~support):
            raise GridError("Difference requested at cells whose shifted endpoint is undefined")
        support = cells & u.domain.active

    values = np.where(support[..., None], (shifted - u.values) / eps, 0.0)
    return GridFunction(u.domain.with_mask(support), values)


# Perforations


def pinned_mask(domain: GridDomain, P: Perforation) -> np.ndarray:
    """
    Active cells pinned by the perforation.

    A cell is pinned when its center lies in some open ball B_r(delta i), or
    when it contains a lattice point delta i of the domain (so that holes below
    grid resolution are never lost).
    """
    centers = domain.centers()
    nearest = P.delta * np.rint(centers / P.delta)
    inside = np.linalg.norm(centers - nearest, axis=-1) < P.r

    # cell holding each lattice point, on the half-open box
    lower = np.asarray(domain.origin)
    upper = np.asarray(domain.upper)
    first = np.ceil(lower / P.delta - _SNAP_TOL).astype(int)
    last = np.ceil(upper / P.delta - _SNAP_TOL).astype(int) - 1
    if np.all(last >= first):
        axes = [np.arange(f, l + 1) for f, l in zip(first, last)]
        points = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, domain.d) * P.delta
        index = np.floor((points - lower) / domain.h + _SNAP_TOL).astype(int)
        index = np.clip(index, 0, np.asarray(domain.shape) - 1)
        inside[tuple(index.T)] = True

    return inside & domain.active


def apply_pinning(u: GridFunction, P: Perforation) -> Tuple[GridFunction, int]:
    """
    Zero u on every pinned cell.

    Returns:
        (pinned field, number of pinned cells)
    """
    mask = pinned_mask(u.domain, P)
    values = u.values.copy()
    values[mask] = 0.0
    return u.with_values(values), int(mask.sum())


# Averages and norms


def cell_average(u: GridFunction, E: np.ndarray) -> np.ndarray:
    """
    Mean of u over the cell set E (boolean mask over the box).

    Raises:
        GridError: Empty E
    """
    E = np.asarray(E, dtype=bool) & u.domain.active
    if not E.any():
        raise GridError("Cannot average over an empty cell set")
    return u.values[E].mean(axis=0)


def lp_norm(u: GridFunction, q: float) -> float:
    """(sum h^d |u|^q)^{1/q} over active cells."""
    if q < 1.0:
        raise GridError(f"Exponent must be >= 1: {q}")
    norms = np.linalg.norm(u.active_values(), axis=-1)
    return float((u.domain.cell_volume * np.sum(norms ** q)) ** (1.0 / q))


def p_star(p: float, d: int) -> float:
    """Sobolev conjugate pd / (d - p), for 1 <= p < d."""
    if not (1.0 <= p < d):
        raise GridError(f"p* needs 1 <= p < d: p={p}, d={d}")
    return p * d / (d - p)


def pad(u: GridFunction, width: int) -> GridFunction:
    """
    Enlarge the box by `width` cells per side, materializing the exterior value.

    Inactive cells of the original domain also receive the exterior value; the
    result is a full box.

    Raises:
        GridError: If the exterior value is undefined
    """
    if u.exterior is None:
        raise GridError("Padding needs a defined exterior value")
    dom = u.domain
    shape = tuple(n + 2 * width for n in dom.shape)
    origin = tuple(a - width * dom.h for a in dom.origin)
    values = np.broadcast_to(u.exterior, shape + (u.m,)).copy()
    inner = tuple(slice(width, width + n) for n in dom.shape)
    values[inner] = np.where(dom.active[..., None], u.values, u.exterior)
    return GridFunction(GridDomain(origin, dom.h, shape), values, u.exterior)


# Coarsening


@dataclass(frozen=True)
class CoarsenInfo:
    """Reported geometry of the coarsening cubes"""
    r_tilde: float
    requested_side: float
    side: float
    cells_per_side: int


def coarsen_side(eps: float, r: float, d: int, h: float) -> CoarsenInfo:
    """
    Cube side r~ eps with r~ = r / sqrt(d + 3), snapped to a multiple of h.

    Raises:
        GridError: If the side rounds to zero cells
    """
    r_tilde = r / math.sqrt(d + 3)
    requested = r_tilde * eps
    cells = round(requested / h)
    if cells < 1:
        raise GridError(f"Coarsening cube side {requested:.4g} is below the cell side h={h:.4g}")
    side = cells * h
    if not math.isclose(side, requested, rel_tol=1e-9):
        logger.warning(f"Coarsening side snapped from {requested:.6g} to {side:.6g} ({cells} cells)")
    return CoarsenInfo(r_tilde, requested, side, cells)


def coarsen(u: GridFunction, eps: float, r: float) -> Tuple[GridFunction, CoarsenInfo]:
    """
    Average u over the cubes side*k + [0, side)^d anchored at the origin of R^d.

    With an exterior value the box is first padded to the union of the cubes
    it meets, so the output is the exact averaging operator on R^d. Without
    one, partial cubes average the cells they contain.

    Raises:
        GridError: Side below h, or a grid not aligned with the cube lattice
    """
    dom = u.domain
    info = coarsen_side(eps, r, dom.d, dom.h)
    k = info.cells_per_side
    start = np.array([_as_integer(a / dom.h, "grid origin / h") for a in dom.origin])

    if u.exterior is not None:
        lo = np.floor_divide(start, k) * k
        hi = -np.floor_divide(-(start + np.asarray(dom.shape)), k) * k
        shape = tuple(int(n) for n in hi - lo)
        values = np.broadcast_to(u.exterior, shape + (u.m,)).copy()
        inner = tuple(slice(int(b), int(b) + n) for b, n in zip(start - lo, dom.shape))
        values[inner] = np.where(dom.active[..., None], u.values, u.exterior)
        dom = GridDomain(tuple(float(x) * dom.h for x in lo), dom.h, shape)
        u = GridFunction(dom, values, u.exterior)
        start = lo

    index = np.indices(dom.shape)
    cube = [np.floor_divide(start[i] + index[i], k) for i in range(dom.d)]
    cube = [c - c.min() for c in cube]
    dims = tuple(int(c.max()) + 1 for c in cube)
    ids = np.ravel_multi_index(tuple(cube), dims)

    active = dom.active.ravel().astype(float)
    flat_ids = ids.ravel()
    counts = np.bincount(flat_ids, weights=active, minlength=int(np.prod(dims)))
    out = np.zeros_like(u.values)
    for j in range(u.m):
        sums = np.bincount(flat_ids, weights=u.values[..., j].ravel() * active,
                           minlength=counts.size)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.where(counts > 0, sums / np.maximum(counts, 1.0), 0.0)
        out[..., j] = mean[ids]
    out[~dom.active] = 0.0
    return GridFunction(dom, out, u.exterior), info


# Truncation


def radial_truncation(z: np.ndarray, M: float, R_M: float) -> np.ndarray:
    """
    Identity on B_M, zero outside B_{R_M}, (R_M - |z|)/(R_M - M) z in between.

    Works on arrays of m-vectors (last axis).

    Raises:
        GridError: If M >= R_M or M <= 0
    """
    if M <= 0.0 or M >= R_M:
        raise GridError(f"Truncation radii must satisfy 0 < M < R_M: M={M}, R_M={R_M}")
    z = np.asarray(z, dtype=float)
    norm = np.linalg.norm(z, axis=-1, keepdims=True)
    factor = np.clip((R_M - norm) / (R_M - M), 0.0, 1.0)
    return factor * z
