"""Finite-difference and sine-spectral discretization of H^1_0 on boxes.

A grid function is a plain ``numpy`` array whose shape equals
``Domain.shape``; boundary values are implicitly zero. All integrals are
cell-volume weighted sums over interior nodes, which makes the discrete
Dirichlet form and the discrete Laplacian exactly dual:

    h1_inner(f, g) = cell_volume * sum(f * laplacian_apply(g))
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft
import scipy.sparse as sp


@dataclass(frozen=True)
class Domain:
    """A 1D interval ``(0, L)`` or 2D box ``(0, Lx) x (0, Ly)`` with uniform interior nodes."""

    lengths: tuple
    nodes: tuple

    def __post_init__(self):
        lengths = tuple(float(x) for x in np.atleast_1d(self.lengths))
        nodes = tuple(int(n) for n in np.atleast_1d(self.nodes))
        if len(lengths) != len(nodes) or len(nodes) not in (1, 2):
            raise ValueError("domain must be 1D or 2D with one length per direction")
        if any(L <= 0 or not np.isfinite(L) for L in lengths):
            raise ValueError(f"side lengths must be positive, got {lengths}")
        if any(n < 3 for n in nodes):
            raise ValueError(f"need at least 3 interior nodes per direction, got {nodes}")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def interval(cls, n, length=1.0):
        return cls((length,), (n,))

    @classmethod
    def rectangle(cls, nx, ny, lx=1.0, ly=1.0):
        return cls((lx, ly), (nx, ny))

    @classmethod
    def unit_square(cls, n):
        return cls((1.0, 1.0), (n, n))

    @property
    def dimension(self):
        return len(self.nodes)

    @property
    def shape(self):
        return self.nodes

    @property
    def size(self):
        return int(np.prod(self.nodes))

    @property
    def spacings(self):
        return tuple(L / (n + 1) for L, n in zip(self.lengths, self.nodes))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacings))

    def coordinates(self):
        """Interior node coordinates, one array per direction (``ij`` indexing)."""
        axes = [h * np.arange(1, n + 1) for h, n in zip(self.spacings, self.nodes)]
        return np.meshgrid(*axes, indexing="ij")

    def sample(self, func):
        """Evaluate ``func(x)`` or ``func(x, y)`` at the interior nodes."""
        return np.asarray(func(*self.coordinates()), dtype=float) * np.ones(self.shape)

    def check(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ValueError(f"grid function has shape {f.shape}, domain expects {self.shape}")
        return f

    # -- finite differences -------------------------------------------------

    def laplacian_apply(self, f):
        """Centered-difference ``-Delta_h f`` with homogeneous Dirichlet data."""
        f = self.check(f)
        out = np.zeros_like(f)
        for axis, h in enumerate(self.spacings):
            padded = np.pad(f, [(1, 1) if a == axis else (0, 0) for a in range(f.ndim)])
            lo = [slice(None)] * f.ndim
            hi = [slice(None)] * f.ndim
            lo[axis] = slice(0, -2)
            hi[axis] = slice(2, None)
            out += (2.0 * f - padded[tuple(lo)] - padded[tuple(hi)]) / h**2
        return out

    @cached_property
    def laplacian_matrix(self):
        """Sparse CSR matrix of ``-Delta_h`` acting on C-order flattened grid functions."""
        ops = []
        for n, h in zip(self.nodes, self.spacings):
            ops.append(sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n)) / h**2)
        if self.dimension == 1:
            return ops[0].tocsr()
        ix = sp.identity(self.nodes[0])
        iy = sp.identity(self.nodes[1])
        return (sp.kron(ops[0], iy) + sp.kron(ix, ops[1])).tocsr()

    @cached_property
    def eigenvalues(self):
        """Discrete Dirichlet eigenvalues indexed by ``(mode - 1)`` per direction."""
        parts = []
        for n, h, L in zip(self.nodes, self.spacings, self.lengths):
            m = np.arange(1, n + 1)
            parts.append(4.0 / h**2 * np.sin(np.pi * m * h / (2.0 * L)) ** 2)
        if self.dimension == 1:
            return parts[0]
        return parts[0][:, None] + parts[1][None, :]

    def poisson_solve(self, g):
        """Solve ``-Delta_h f = g`` by sine-transform diagonalization."""
        g = self.check(g)
        coeffs = scipy.fft.dstn(g, type=1, norm="ortho")
        return scipy.fft.idstn(coeffs / self.eigenvalues, type=1, norm="ortho")

    # -- quadrature ---------------------------------------------------------

    def integral(self, f):
        return self.cell_volume * float(np.sum(self.check(f)))

    def l2_inner(self, f, g):
        return self.cell_volume * float(np.sum(self.check(f) * self.check(g)))

    def l2_norm(self, f):
        return np.sqrt(self.l2_inner(f, f))

    def h1_inner(self, f, g):
        """Discrete Dirichlet form ``int grad f . grad g``."""
        return self.cell_volume * float(np.sum(self.check(f) * self.laplacian_apply(g)))

    def h1_norm(self, f):
        return np.sqrt(max(self.h1_inner(f, f), 0.0))

    def lp_integral(self, f, r, positive_part_only=True):
        """Cell-weighted ``int (f^+)^r`` (or ``int |f|^r`` when ``positive_part_only`` is off)."""
        if r < 1:
            raise ValueError(f"exponent r must be >= 1, got {r}")
        f = self.check(f)
        base = np.maximum(f, 0.0) if positive_part_only else np.abs(f)
        return self.cell_volume * float(np.sum(base**r))

    # -- sine eigenbasis ----------------------------------------------------

    @cached_property
    def mode_order(self):
        """Flat mode indices sorted by eigenvalue; ties broken lexicographically."""
        lam = self.eigenvalues.ravel()
        lex = np.arange(lam.size)
        return np.lexsort((lex, lam))

    def spectral_transform(self, f):
        """Coefficients of ``f`` in the L2_h-orthonormal sine eigenbasis.

        Entry ``[mx-1, my-1]`` multiplies ``sqrt(2/Lx) sin(mx pi x/Lx) sqrt(2/Ly) sin(my pi y/Ly)``.
        """
        f = self.check(f)
        return np.sqrt(self.cell_volume) * scipy.fft.dstn(f, type=1, norm="ortho")

    def inverse_transform(self, coeffs):
        coeffs = self.check(coeffs)
        return scipy.fft.idstn(coeffs, type=1, norm="ortho") / np.sqrt(self.cell_volume)

    def spectral_truncate(self, f, k):
        """Orthogonal projection onto the ``k`` lowest sine modes."""
        if not 0 <= k <= self.size:
            raise ValueError(f"mode count {k} outside [0, {self.size}]")
        coeffs = self.spectral_transform(f).ravel()
        kept = np.zeros_like(coeffs)
        idx = self.mode_order[:k]
        kept[idx] = coeffs[idx]
        return self.inverse_transform(kept.reshape(self.shape))

    def sine_mode(self, modes):
        """Nodal values of the L2-normalized sine mode with the given integer frequencies."""
        modes = tuple(np.atleast_1d(modes))
        if len(modes) != self.dimension:
            raise ValueError("one frequency per direction required")
        out = np.ones(self.shape)
        for x, m, L in zip(self.coordinates(), modes, self.lengths):
            out = out * np.sqrt(2.0 / L) * np.sin(m * np.pi * x / L)
        return out

    def mode_basis(self, k):
        """Rows are nodal values (flattened) of the ``k`` lowest modes, plus their eigenvalues."""
        idx = self.mode_order[:k]
        multi = np.unravel_index(idx, self.shape)
        per_axis = []
        for axis, (n, L) in enumerate(zip(self.nodes, self.lengths)):
            x = self.spacings[axis] * np.arange(1, n + 1)
            m = multi[axis] + 1
            per_axis.append(np.sqrt(2.0 / L) * np.sin(np.pi * np.outer(m, x) / L))
        if self.dimension == 1:
            rows = per_axis[0]
        else:
            rows = (per_axis[0][:, :, None] * per_axis[1][:, None, :]).reshape(k, -1)
        return rows, self.eigenvalues.ravel()[idx]

    # -- output -------------------------------------------------------------

    def write_csv(self, f, path):
        """Dump ``f`` as ``x,y,value`` (``x,value`` in 1D), row-major, 17 significant digits."""
        f = self.check(f)
        coords = [c.ravel() for c in self.coordinates()]
        header = "x,value" if self.dimension == 1 else "x,y,value"
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for row in zip(*coords, f.ravel()):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def positive_part(f):
    return np.maximum(f, 0.0)


def negative_part(f):
    return np.minimum(f, 0.0)


def read_csv(path):
    """Read a grid dump back as ``(coordinate columns, values)``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :-1], data[:, -1]
