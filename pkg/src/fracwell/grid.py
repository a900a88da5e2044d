"""Uniform 1-D grid, exterior padding and the pair table for dmu = dx dy / |x - y|.

The integration set Q (all ordered pairs except exterior x exterior) is
realised by storing each unordered pair once; every reduction over the table
multiplies by 2 to recover the ordered-pair integral.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

__all__ = [
    "ConfigError",
    "GridMismatch",
    "Domain1D",
    "MagneticField",
    "Field",
    "KernelTable",
    "build_kernel",
    "covariant_quotient",
    "plain_quotient",
    "assemble_fractional_stiffness",
]


class ConfigError(ValueError):
    pass


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Domain1D:
    a: float = -1.0
    b: float = 1.0
    M: int = 64
    pad: int | None = None

    def __post_init__(self):
        if self.pad is None:
            object.__setattr__(self, "pad", self.M)
        if not self.b > self.a:
            raise ConfigError("domain needs a < b")
        if self.M < 4:
            raise ConfigError("need at least 4 interior nodes")
        if self.pad < self.M:
            raise ConfigError("pad must be >= M (one domain width of exterior per side)")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.M + 1)

    @property
    def x_interior(self) -> np.ndarray:
        return self.a + self.h * np.arange(1, self.M + 1)

    @property
    def x_all(self) -> np.ndarray:
        """Padded node coordinates: pad + M + pad + boundary nodes (which carry u = 0)."""
        k = np.arange(-self.pad, self.M + 2 + self.pad)
        return self.a + self.h * k


@dataclass(frozen=True)
class MagneticField:
    """A(x) = 0, c, or c * x."""

    kind: str = "zero"
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "linear"):
            raise ConfigError(f"unknown magnetic.kind {self.kind!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "constant":
            return np.full_like(x, self.c)
        return self.c * x


@dataclass
class Field:
    values: np.ndarray
    domain: Domain1D

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.domain.M,):
            raise GridMismatch(f"field has shape {self.values.shape}, domain has M={self.domain.M}")

    def extended(self) -> np.ndarray:
        return np.concatenate([self.values, [0.0]])


@dataclass(frozen=True, eq=False)
class KernelTable:
    """Unordered node pairs of the padded grid touching at least one interior node.

    ``I`` and ``J`` index the extended value vector (``M`` is the exterior
    slot). ``w`` is the mu-weight h^2 / |x_i - x_j|.
    """

    domain: Domain1D
    s: float
    magnetic: MagneticField
    I: np.ndarray
    J: np.ndarray
    r: np.ndarray
    w: np.ndarray
    rs: np.ndarray
    rs2: np.ndarray
    phase: np.ndarray
    xi: np.ndarray = field(repr=False)
    xj: np.ndarray = field(repr=False)

    @property
    def n_pairs(self) -> int:
        return int(self.I.size)

    @property
    def conj_phase(self) -> np.ndarray:
        return np.conj(self.phase)

    def check_field(self, u: Field):
        if u.domain != self.domain:
            raise GridMismatch("field and kernel table live on different grids")


def build_kernel(domain: Domain1D, s: float, A: MagneticField | None = None) -> KernelTable:
    if not 0.0 < s < 1.0:
        raise ConfigError(f"fractional order must lie in (0, 1), got {s}")
    A = A or MagneticField()
    x = domain.x_all
    n = x.size
    first_interior = domain.pad + 1
    interior = np.zeros(n, dtype=bool)
    interior[first_interior:first_interior + domain.M] = True
    # map padded index -> extended value slot
    slot = np.full(n, domain.M, dtype=np.int64)
    slot[interior] = np.arange(domain.M)

    ii, jj = np.triu_indices(n, k=1)
    keep = interior[ii] | interior[jj]
    ii, jj = ii[keep], jj[keep]
    # orient so that I is interior whenever one endpoint is exterior
    swap = ~interior[ii]
    ii, jj = np.where(swap, jj, ii), np.where(swap, ii, jj)

    xi, xj = x[ii], x[jj]
    r = np.abs(xi - xj)
    h = domain.h
    w = h * h / r
    phi = (xi - xj) * A(0.5 * (xi + xj))
    return KernelTable(
        domain=domain,
        s=float(s),
        magnetic=A,
        I=slot[ii],
        J=slot[jj],
        r=r,
        w=w,
        rs=r ** (-s),
        rs2=r ** (-2 * s),
        phase=np.exp(1j * phi),
        xi=xi,
        xj=xj,
    )


def covariant_quotient(u: Field, table: KernelTable) -> np.ndarray:
    """(u(x_i) - e^{i phi_ij} u(x_j)) / |x_i - x_j|^s per stored pair."""
    table.check_field(u)
    return _kernels.pair_quotients(u.extended(), table.I, table.J, table.phase, table.rs)


def plain_quotient(u: Field, table: KernelTable) -> np.ndarray:
    table.check_field(u)
    ones = np.ones(table.n_pairs, dtype=complex)
    return _kernels.pair_quotients(u.extended(), table.I, table.J, ones, table.rs)


def assemble_fractional_stiffness(domain: Domain1D, table: KernelTable) -> np.ndarray:
    """Real symmetric L with u^H L u = int_Q |u(x) - u(y)|^2 / |x - y|^{2s} dmu."""
    if table.domain != domain:
        raise GridMismatch("table built for another domain")
    m = domain.M
    c = 2.0 * table.w * table.rs2
    L = np.zeros((m + 1, m + 1))
    np.add.at(L, (table.I, table.I), c)
    np.add.at(L, (table.J, table.J), c)
    np.add.at(L, (table.I, table.J), -c)
    np.add.at(L, (table.J, table.I), -c)
    return L[:m, :m]
