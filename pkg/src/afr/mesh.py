"""Axis-aligned affine Cartesian meshes (1D and 2D, multi-block) and boundary
conditions.

Faces are numbered 0: x-, 1: x+, 2: y-, 3: y+.  Across every interior face the
tangential facet points are ordered the same way on both sides, so neighbor
traces can be paired index by index.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .euler import primitive_to_conservative

TAGS = ("periodic", "inflow", "outflow", "wall", "post-shock")
_KIND = {"outflow": K.BC_OUTFLOW, "inflow": K.BC_DIRICHLET, "post-shock": K.BC_DIRICHLET, "wall": K.BC_WALL}
_ROUND = 9


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Block:
    """Rectangle [x0, x0+lx] x [y0, y0+ly] split into nx x ny equal elements (ny=1, ly unused in 1D)."""

    x0: float
    lx: float
    nx: int
    y0: float = 0.0
    ly: float = 1.0
    ny: int = 1


@dataclass(frozen=True)
class BoundarySegment:
    """Straight boundary piece: faces with outward normal ``side`` * e_axis lying
    on ``axis``-coordinate ``coord`` with tangential extent inside [lo, hi]."""

    axis: int
    side: int
    coord: float
    tag: str
    lo: float = -np.inf
    hi: float = np.inf
    state: tuple | None = None  # primitive (rho, velocity..., p) for inflow/post-shock

    def __post_init__(self):
        if self.tag not in TAGS:
            raise MeshError(f"unknown boundary tag {self.tag!r}")
        if self.tag in ("inflow", "post-shock") and self.state is None:
            raise MeshError(f"{self.tag} boundary needs a prescribed state")

    def covers(self, axis, side, pos, lo, hi) -> bool:
        tol = 1e-9 * max(1.0, abs(self.coord))
        return (
            axis == self.axis
            and side == self.side
            and abs(pos - self.coord) <= tol
            and lo >= self.lo - tol
            and hi <= self.hi + tol
        )


@dataclass
class CartesianMesh:
    d: int
    blocks: list
    x0: np.ndarray
    y0: np.ndarray
    hx: np.ndarray
    hy: np.ndarray
    neighbors: np.ndarray  # (nel, 2d), -1 on boundary faces
    bc_kind: np.ndarray  # (nel, 2d)
    bc_state: np.ndarray  # (nel, 2d, d+2) conservative ghost states for Dirichlet faces
    bc_tag: np.ndarray  # (nel, 2d) object array of tag strings ('' for interior)
    extent: tuple  # (xmin, xmax, ymin, ymax)
    gamma: float = 1.4
    segments: list = field(default_factory=list)

    @property
    def n_elements(self) -> int:
        return self.x0.size

    @property
    def jacobian(self) -> np.ndarray:
        return 0.5 * self.hx if self.d == 1 else 0.25 * self.hx * self.hy

    def dof(self, p: int) -> int:
        return self.n_elements * (p + 1) ** self.d

    def node_coordinates(self, ref_nodes):
        """Physical coordinates of tensor nodes, arrays of shape (nel, ny, nx)."""
        r = np.asarray(ref_nodes)
        xs = self.x0[:, None] + 0.5 * (r[None, :] + 1.0) * self.hx[:, None]
        if self.d == 1:
            return xs[:, None, :], np.zeros_like(xs)[:, None, :]
        ys = self.y0[:, None] + 0.5 * (r[None, :] + 1.0) * self.hy[:, None]
        n = r.size
        X = np.broadcast_to(xs[:, None, :], (self.n_elements, n, n))
        Y = np.broadcast_to(ys[:, :, None], (self.n_elements, n, n))
        return np.array(X), np.array(Y)

    def face_center(self, e, f):
        axis, plus = divmod(f, 2)
        if axis == 0:
            x = self.x0[e] + (self.hx[e] if plus else 0.0)
            y = self.y0[e] + 0.5 * self.hy[e]
        else:
            x = self.x0[e] + 0.5 * self.hx[e]
            y = self.y0[e] + (self.hy[e] if plus else 0.0)
        return x, y

    def locate(self, x, y=None):
        """Element index containing each point and the reference coordinates there."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.zeros_like(x) if y is None else np.atleast_1d(np.asarray(y, dtype=float))
        idx = np.full(x.shape, -1)
        xi = np.zeros(x.shape)
        eta = np.zeros(x.shape)
        tol = 1e-12
        for e in range(self.n_elements):
            inside = (x >= self.x0[e] - tol) & (x <= self.x0[e] + self.hx[e] + tol) & (idx < 0)
            if self.d == 2:
                inside &= (y >= self.y0[e] - tol) & (y <= self.y0[e] + self.hy[e] + tol)
            idx[inside] = e
            xi[inside] = 2.0 * (x[inside] - self.x0[e]) / self.hx[e] - 1.0
            if self.d == 2:
                eta[inside] = 2.0 * (y[inside] - self.y0[e]) / self.hy[e] - 1.0
        return idx, np.clip(xi, -1, 1), np.clip(eta, -1, 1)

    def with_boundary_states(self, state) -> "CartesianMesh":
        """Copy with every Dirichlet face prescribing the conservative ``state``."""
        out = CartesianMesh(**{k: getattr(self, k) for k in self.__dataclass_fields__})
        out.bc_state = self.bc_state.copy()
        mask = self.bc_kind == K.BC_DIRICHLET
        out.bc_state[mask] = np.asarray(state, dtype=float)
        return out

    def with_all_boundaries(self, tag: str, state=None) -> "CartesianMesh":
        """Copy with every boundary face retagged (used for free-stream checks)."""
        out = CartesianMesh(**{k: getattr(self, k) for k in self.__dataclass_fields__})
        bnd = self.neighbors < 0
        out.bc_kind = self.bc_kind.copy()
        out.bc_kind[bnd] = _KIND[tag]
        out.bc_tag = self.bc_tag.copy()
        out.bc_tag[bnd] = tag
        out.bc_state = self.bc_state.copy()
        if state is not None:
            out.bc_state[bnd] = np.asarray(state, dtype=float)
        return out


def _face_geometry(x0, y0, hx, hy, f, d):
    axis, plus = divmod(f, 2)
    side = 1 if plus else -1
    if axis == 0:
        pos = x0 + (hx if plus else 0.0)
        lo, hi = (y0, y0 + hy) if d == 2 else (0.0, 0.0)
    else:
        pos = y0 + (hy if plus else 0.0)
        lo, hi = x0, x0 + hx
    return axis, side, pos, lo, hi


def _key(axis, pos, lo, hi):
    return (axis, round(pos, _ROUND), round(lo, _ROUND), round(hi, _ROUND))


def build_mesh(blocks, segments, d: int, periodic=(False, False), gamma: float = 1.4) -> CartesianMesh:
    """Assemble a conforming multi-block mesh and attach boundary conditions.

    Every face must either match exactly one neighbor face or be covered by
    exactly one boundary segment; anything else is reported as non-conforming.
    """
    if d not in (1, 2):
        raise MeshError(f"dimension must be 1 or 2, got {d}")
    x0s, y0s, hxs, hys = [], [], [], []
    for blk in blocks:
        if blk.nx < 1 or blk.ny < 1:
            raise MeshError(f"element counts must be positive: {blk}")
        if d == 1 and blk.ny != 1:
            raise MeshError("1D blocks have ny = 1")
        hx = blk.lx / blk.nx
        hy = blk.ly / blk.ny
        for j in range(blk.ny):
            for i in range(blk.nx):
                x0s.append(blk.x0 + i * hx)
                y0s.append(blk.y0 + j * hy)
                hxs.append(hx)
                hys.append(hy)
    x0 = np.array(x0s)
    y0 = np.array(y0s)
    hx = np.array(hxs)
    hy = np.array(hys)
    nel = x0.size
    nf = 2 * d
    if np.any(hx <= 0) or np.any(hy <= 0):
        raise MeshError("non-positive element size")

    xmin, xmax = float(np.min(x0)), float(np.max(x0 + hx))
    ymin, ymax = (float(np.min(y0)), float(np.max(y0 + hy))) if d == 2 else (0.0, 0.0)

    minus_faces = {}
    for e in range(nel):
        for f in range(0, nf, 2):
            axis, side, pos, lo, hi = _face_geometry(x0[e], y0[e], hx[e], hy[e], f, d)
            minus_faces[_key(axis, pos, lo, hi)] = e

    neighbors = -np.ones((nel, nf), dtype=np.int64)
    for e in range(nel):
        for f in range(1, nf, 2):
            axis, side, pos, lo, hi = _face_geometry(x0[e], y0[e], hx[e], hy[e], f, d)
            n = minus_faces.get(_key(axis, pos, lo, hi))
            if n is None and periodic[axis]:
                top = xmax if axis == 0 else ymax
                bot = xmin if axis == 0 else ymin
                if abs(pos - top) < 1e-9 * max(1.0, abs(top)):
                    n = minus_faces.get(_key(axis, bot, lo, hi))
            if n is not None:
                neighbors[e, f] = n
                neighbors[n, f - 1] = e

    nv = d + 2
    bc_kind = np.zeros((nel, nf), dtype=np.int64)
    bc_state = np.zeros((nel, nf, nv))
    bc_tag = np.full((nel, nf), "", dtype=object)
    for e in range(nel):
        for f in range(nf):
            if neighbors[e, f] >= 0:
                continue
            axis, side, pos, lo, hi = _face_geometry(x0[e], y0[e], hx[e], hy[e], f, d)
            hits = [s for s in segments if s.covers(axis, side, pos, lo, hi)]
            if len(hits) != 1:
                raise MeshError(
                    f"face {f} of element {e} at {'xy'[axis]}={pos:g} is matched by "
                    f"{len(hits)} boundary segments (non-conforming mesh or incomplete boundary)"
                )
            seg = hits[0]
            if seg.tag == "periodic":
                raise MeshError(f"unmatched periodic face {f} of element {e}")
            bc_kind[e, f] = _KIND[seg.tag]
            bc_tag[e, f] = seg.tag
            if seg.state is not None:
                rho, *vel, p = seg.state
                bc_state[e, f] = primitive_to_conservative(rho, np.array(vel, dtype=float), p, gamma)

    return CartesianMesh(
        d=d,
        blocks=list(blocks),
        x0=x0,
        y0=y0,
        hx=hx,
        hy=hy,
        neighbors=neighbors,
        bc_kind=bc_kind,
        bc_state=bc_state,
        bc_tag=bc_tag,
        extent=(xmin, xmax, ymin, ymax),
        gamma=gamma,
        segments=list(segments),
    )


def ghost_state(u_in, tag: str, axis: int = 0, prescribed=None, neighbor_trace=None):
    """Exterior state for a boundary face with normal along ``axis``.

    Works on a single conservative state vector.  Slip walls mirror the normal
    momentum, outflow copies the trace, inflow/post-shock return the prescribed
    conservative state, periodic returns the neighbor trace.
    """
    u_in = np.asarray(u_in, dtype=float)
    if tag == "periodic":
        if neighbor_trace is None:
            raise MeshError("periodic ghost needs the neighbor trace")
        return np.array(neighbor_trace, dtype=float)
    if tag in ("inflow", "post-shock"):
        if prescribed is None:
            raise MeshError(f"{tag} ghost needs a prescribed state")
        return np.array(prescribed, dtype=float)
    if tag == "outflow":
        return u_in.copy()
    if tag == "wall":
        g = u_in.copy()
        g[1 + axis] = -g[1 + axis]
        return g
    raise MeshError(f"unknown boundary tag {tag!r}")
