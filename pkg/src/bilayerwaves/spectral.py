"""Periodic grids, spectral differentiation and constant-coefficient inverses.

Everything here is exact on the grid: derivatives are Fourier multipliers
(ik)^m with the Nyquist mode zeroed for odd orders, the gradient projector is
k k^T / |k|^2 with the zero mode passed through, and (1 - a Lap)^{-1} is the
multiplier 1/(1 + a |k|^2).  Fields are immutable values; all operations
return new fields.  Complex-valued samples are accepted throughout so that
linearizations and complex-step derivatives can reuse the same code paths.
"""

from __future__ import annotations

import struct

import numpy as np

TWO_PI = 2.0 * np.pi


def _is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


class Grid:
    """Uniform periodic grid on [0, L1) x ... with power-of-two resolution."""

    __slots__ = ("dim", "shape", "lengths", "_k", "_k2", "_dealias", "_nyq_index")

    def __init__(self, shape, lengths):
        shape = tuple(int(n) for n in shape)
        lengths = tuple(float(length) for length in lengths)
        if len(shape) not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        if len(shape) != len(lengths):
            raise ValueError("shape and lengths must have equal rank")
        for n in shape:
            if n < 8 or not _is_power_of_two(n):
                raise ValueError("grid size must be a power of two >= 8")
        for length in lengths:
            if not np.isfinite(length) or length <= 0:
                raise ValueError("domain lengths must be positive")
        self.dim = len(shape)
        self.shape = shape
        self.lengths = lengths
        # per-axis wavenumbers broadcastable over the sample array
        self._k = []
        self._nyq_index = []
        for axis, (n, length) in enumerate(zip(shape, lengths)):
            k = TWO_PI * np.fft.fftfreq(n, d=length / n)
            reshape = [1] * self.dim
            reshape[axis] = n
            self._k.append(k.reshape(reshape))
            self._nyq_index.append(n // 2)
        self._k2 = sum(k**2 for k in self._k)
        masks = []
        for axis, n in enumerate(shape):
            idx = np.fft.fftfreq(n, d=1.0 / n).astype(int)
            keep = np.abs(idx) <= n // 3
            reshape = [1] * self.dim
            reshape[axis] = n
            masks.append(keep.reshape(reshape))
        mask = masks[0]
        for extra in masks[1:]:
            mask = mask & extra
        self._dealias = mask

    # -- geometry -----------------------------------------------------------

    @classmethod
    def line(cls, n, length=TWO_PI):
        return cls((n,), (length,))

    @classmethod
    def box(cls, nx, ny=None, lengths=(TWO_PI, TWO_PI)):
        ny = nx if ny is None else ny
        return cls((nx, ny), lengths)

    @property
    def dx(self):
        return tuple(length / n for length, n in zip(self.lengths, self.shape))

    @property
    def cell_volume(self):
        vol = 1.0
        for d in self.dx:
            vol *= d
        return vol

    def nodes(self):
        """Coordinate arrays ('ij' indexing in 2D)."""
        axes = [
            np.arange(n) * (length / n)
            for n, length in zip(self.shape, self.lengths)
        ]
        if self.dim == 1:
            return axes
        return list(np.meshgrid(*axes, indexing="ij"))

    def wavenumber(self, axis):
        return self._k[axis]

    @property
    def k2(self):
        return self._k2

    @property
    def dealias_mask(self):
        return self._dealias

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.shape == other.shape
            and self.lengths == other.lengths
        )

    def __hash__(self):
        return hash((self.shape, self.lengths))

    def __repr__(self):
        return f"Grid(shape={self.shape}, lengths={self.lengths})"


class Field:
    """Scalar samples on a grid.  Arithmetic is pointwise and returns fields."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values, check=True):
        values = np.asarray(values)
        if values.dtype.kind not in "fc":
            values = values.astype(float)
        if values.shape != grid.shape:
            raise ValueError(f"sample shape {values.shape} != grid {grid.shape}")
        if check and values.dtype.kind == "f" and not np.all(np.isfinite(values)):
            raise ValueError("field samples must be finite")
        self.grid = grid
        self.values = values

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(grid.shape, value))

    @classmethod
    def from_function(cls, grid, fn):
        return cls(grid, fn(*grid.nodes()))

    # -- pointwise algebra ---------------------------------------------------

    def _rhs_values(self, other):
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return Field(self.grid, self.values + self._rhs_values(other), check=False)

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.values - self._rhs_values(other), check=False)

    def __rsub__(self, other):
        return Field(self.grid, self._rhs_values(other) - self.values, check=False)

    def __mul__(self, other):
        return Field(self.grid, self.values * self._rhs_values(other), check=False)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Field(self.grid, self.values / self._rhs_values(other), check=False)

    def __rtruediv__(self, other):
        return Field(self.grid, self._rhs_values(other) / self.values, check=False)

    def __pow__(self, exponent):
        return Field(self.grid, self.values**exponent, check=False)

    def __neg__(self):
        return Field(self.grid, -self.values, check=False)

    # -- reductions ----------------------------------------------------------

    def mean(self):
        return self.values.mean()

    def min_real(self):
        return float(self.values.real.min())

    def linf(self):
        return float(np.abs(self.values).max())

    def l2_norm(self):
        return float(
            np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume)
        )

    def is_finite(self):
        return bool(np.all(np.isfinite(self.values)))

    def copy(self):
        return Field(self.grid, self.values.copy(), check=False)

    def __repr__(self):
        return f"Field({self.grid!r}, |f|_inf={self.linf():.3e})"


class VecField:
    """d-component vector field; components share one grid."""

    __slots__ = ("grid", "components")

    def __init__(self, components):
        components = tuple(components)
        if not components:
            raise ValueError("empty vector field")
        grid = components[0].grid
        for c in components[1:]:
            if c.grid != grid:
                raise ValueError("component grids differ")
        self.grid = grid
        self.components = components

    @classmethod
    def zeros(cls, grid):
        return cls(tuple(Field.zeros(grid) for _ in range(grid.dim)))

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __add__(self, other):
        return VecField(tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other):
        return VecField(tuple(a - b for a, b in zip(self, other)))

    def __mul__(self, scalar):
        return VecField(tuple(c * scalar for c in self))

    __rmul__ = __mul__

    def __neg__(self):
        return VecField(tuple(-c for c in self))

    def dot(self, other):
        out = self[0] * other[0]
        for a, b in zip(self.components[1:], other.components[1:]):
            out = out + a * b
        return out

    def l2_norm(self):
        return float(np.sqrt(sum(c.l2_norm() ** 2 for c in self)))

    def linf(self):
        return max(c.linf() for c in self)

    def is_finite(self):
        return all(c.is_finite() for c in self)


# -- spectral machinery -------------------------------------------------------


def _fft(values):
    return np.fft.fftn(values)


def _ifft(spectrum, like):
    out = np.fft.ifftn(spectrum)
    if np.asarray(like).dtype.kind == "f":
        return out.real
    return out


def apply_multiplier(f: Field, multiplier) -> Field:
    """Apply a Fourier multiplier given as an array broadcastable in k-space.

    Real fields go through the half-spectrum transform; every multiplier used
    here is Hermitian-compatible (m(-k) = conj(m(k))), so the result is the
    same as the full transform at roughly half the cost.
    """
    vals = f.values
    if vals.dtype.kind == "c":
        return Field(f.grid, np.fft.ifftn(np.fft.fftn(vals) * multiplier),
                     check=False)
    spec = np.fft.rfftn(vals)
    m = np.asarray(multiplier)
    if m.ndim:
        half = vals.shape[-1] // 2 + 1
        m = m[..., :half] if m.shape[-1] == vals.shape[-1] else m
    axes = tuple(range(vals.ndim))
    out = np.fft.irfftn(spec * m, s=vals.shape, axes=axes)
    return Field(f.grid, out, check=False)


def deriv(f: Field, axis=0, order=1) -> Field:
    """Spectral derivative d^order/dx_axis^order.

    Odd orders zero the Nyquist mode so the result of differentiating a real
    field stays real and the operator is skew-adjoint on the grid.
    """
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    grid = f.grid
    k = grid.wavenumber(axis)
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult = mult.copy()
        idx = [slice(None)] * grid.dim
        idx[axis] = grid._nyq_index[axis]
        mult[tuple(idx)] = 0.0
    return apply_multiplier(f, mult)


def grad(f: Field) -> VecField:
    return VecField(tuple(deriv(f, axis=a, order=1) for a in range(f.grid.dim)))


def div(W: VecField) -> Field:
    out = deriv(W[0], axis=0, order=1)
    for a in range(1, W.grid.dim):
        out = out + deriv(W[a], axis=a, order=1)
    return out


def laplacian(f: Field) -> Field:
    return apply_multiplier(f, -f.grid.k2)


def dealias(obj):
    """2/3-rule truncation; accepts Field or VecField."""
    if isinstance(obj, VecField):
        return VecField(tuple(dealias(c) for c in obj))
    return apply_multiplier(obj, obj.grid.dealias_mask)


def deriv_dealiased(f: Field, axis=0, order=1) -> Field:
    """deriv(dealias(f)) fused into a single transform round trip."""
    grid = f.grid
    k = grid.wavenumber(axis)
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult = mult.copy()
        idx = [slice(None)] * grid.dim
        idx[axis] = grid._nyq_index[axis]
        mult[tuple(idx)] = 0.0
    return apply_multiplier(f, mult * grid.dealias_mask)


def shift(f: Field, offsets) -> Field:
    """Exact spectral translation: returns g with g(x) = f(x - offset)."""
    if np.isscalar(offsets):
        offsets = (offsets,)
    mult = 1.0
    for axis, a in enumerate(offsets):
        mult = mult * np.exp(-1j * f.grid.wavenumber(axis) * a)
    return apply_multiplier(f, mult)


def sobolev_norm(f: Field, s) -> float:
    """|Lambda^s f|_{L^2} via the multiplier (1 + |k|^2)^{s/2}."""
    if s < 0:
        raise ValueError("s must be >= 0")
    spec = _fft(f.values)
    weight = (1.0 + f.grid.k2) ** s
    total = np.sum(weight * np.abs(spec) ** 2)
    n_total = np.prod(f.grid.shape)
    return float(np.sqrt(total * f.grid.cell_volume / n_total))


def project_gradient(W: VecField) -> VecField:
    """Orthogonal projector onto gradient fields, k k^T/|k|^2 in Fourier.

    The projector is built from the same discrete gradient as deriv (Nyquist
    rows zeroed), so projected fields are exactly curl-free and the projector
    exactly preserves discrete divergences.  Modes in the kernel of the
    discrete gradient (the zero mode and bare Nyquist modes) pass through
    unchanged; in 1D the projector is the identity.
    """
    grid = W.grid
    if grid.dim == 1:
        return VecField((W[0].copy(),))
    specs = [_fft(c.values) for c in W]
    kx = np.broadcast_to(grid.wavenumber(0), grid.shape).copy()
    ky = np.broadcast_to(grid.wavenumber(1), grid.shape).copy()
    nyq_x, nyq_y = grid._nyq_index
    kx[nyq_x, :] = 0.0
    ky[:, nyq_y] = 0.0
    k2 = kx**2 + ky**2
    kernel = k2 == 0.0
    k2[kernel] = 1.0
    s = (kx * specs[0] + ky * specs[1]) / k2
    out_specs = [kx * s, ky * s]
    for spec, out in zip(specs, out_specs):
        out[kernel] = spec[kernel]
    return VecField(
        tuple(
            Field(grid, _ifft(spec, c.values), check=False)
            for spec, c in zip(out_specs, W)
        )
    )


def helmholtz_inverse(a, f: Field) -> Field:
    """(1 - a Lap)^{-1} f for constant a >= 0."""
    if a < 0:
        raise ValueError("a must be >= 0")
    return apply_multiplier(f, 1.0 / (1.0 + a * f.grid.k2))


# -- snapshot serialization ---------------------------------------------------

_MAGIC = b"BLWF"


def write_field_binary(f: Field, path):
    """Compact layout: magic, dim, per-axis n, per-axis length, float64 values."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<q", f.grid.dim))
        for n in f.grid.shape:
            fh.write(struct.pack("<q", n))
        for length in f.grid.lengths:
            fh.write(struct.pack("<d", length))
        fh.write(np.ascontiguousarray(f.values, dtype=np.float64).tobytes())


def read_field_binary(path) -> Field:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path}: not a field snapshot")
        (dim,) = struct.unpack("<q", fh.read(8))
        shape = tuple(struct.unpack("<q", fh.read(8))[0] for _ in range(dim))
        lengths = tuple(struct.unpack("<d", fh.read(8))[0] for _ in range(dim))
        count = int(np.prod(shape))
        values = np.frombuffer(fh.read(count * 8), dtype=np.float64).reshape(shape)
    return Field(Grid(shape, lengths), values.copy())


def write_field_csv(f: Field, path):
    """One row per node: coordinates then the sample value."""
    coords = f.grid.nodes()
    headers = ["x", "y"][: f.grid.dim] + ["value"]
    columns = [c.reshape(-1) for c in coords] + [f.values.reshape(-1).real]
    with open(path, "w") as fh:
        fh.write(",".join(headers) + "\n")
        for row in zip(*columns):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_field_csv(path) -> Field:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    dim = data.shape[1] - 1
    if dim == 1:
        x = data[:, 0]
        n = x.size
        dx = x[1] - x[0]
        grid = Grid((n,), (n * dx,))
        return Field(grid, data[:, 1])
    x, y = data[:, 0], data[:, 1]
    nx = len(np.unique(x))
    ny = len(np.unique(y))
    dxv = np.unique(x)[1] - np.unique(x)[0]
    dyv = np.unique(y)[1] - np.unique(y)[0]
    grid = Grid((nx, ny), (nx * dxv, ny * dyv))
    return Field(grid, data[:, 2].reshape(nx, ny))
