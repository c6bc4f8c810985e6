import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.integrate import simpson

from .errors import KernelError

log = logging.getLogger(__name__)

KINDS = ('point-mass', 'gamma-cutoff', 'sampled')


@dataclass(frozen=True, eq=False)
class SmoothingKernel:
    """ Weight psi(y) on y > 0 against which the shifted sums are averaged.

    point-mass: unit mass at y0 = 1 / (4 pi X).
    gamma-cutoff: psi(y) = 1_{y > (k-1)/(4 pi X)} / (4 pi Gamma(k-1)).
    sampled: psi given on a uniform grid of y (odd length, Simpson rule).
    """
    kind: str
    X: float = None
    y: np.ndarray = field(default=None, repr=False)
    psi: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise KernelError(f'Unknown kernel kind {self.kind!r}, expected one of {KINDS}')

        if self.kind in ('point-mass', 'gamma-cutoff'):
            if self.X is None or not self.X > 0:
                raise KernelError(f'{self.kind} kernel needs X > 0, got {self.X}')
            return

        y = np.asarray(self.y, dtype=np.float64)
        psi = np.asarray(self.psi, dtype=np.float64)
        if y.ndim != 1 or y.shape != psi.shape or y.size < 3 or y.size % 2 == 0:
            raise KernelError('sampled kernel needs y and psi of the same odd length >= 3')
        if np.any(np.diff(y) <= 0):
            raise KernelError('sampled kernel grid must be increasing')

        support = np.flatnonzero(psi != 0)
        if support.size and y[support[0]] <= 0:
            raise KernelError(
                f'psi is nonzero at y = {y[support[0]]:g} <= 0: psi(y) / y^2 is not integrable there')

    @classmethod
    def point_mass(cls, X):
        return cls('point-mass', X=float(X))

    @classmethod
    def gamma_cutoff(cls, X):
        return cls('gamma-cutoff', X=float(X))

    @classmethod
    def sampled(cls, y, psi):
        return cls('sampled', y=np.asarray(y, dtype=np.float64), psi=np.asarray(psi, dtype=np.float64))

    @classmethod
    def bump(cls, X, width, points=201):
        """ Smooth compactly supported bump of unit mass around y0 = 1 / (4 pi X).

        Args:
            X (float): centers the bump at 1 / (4 pi X).
            width (float): half-width relative to y0 (0 < width < 1).
            points (int): odd number of grid points.
        """
        if not 0 < width < 1:
            raise KernelError(f'bump width must be in (0, 1), got {width}')
        y0 = 1 / (4 * math.pi * X)
        y = np.linspace(y0 * (1 - width), y0 * (1 + width), points)
        u = (y - y0) / (y0 * width)
        psi = np.zeros_like(y)
        inside = np.abs(u) < 1
        psi[inside] = np.exp(-1 / (1 - u[inside] ** 2))
        psi /= simpson(psi, x=y)
        return cls.sampled(y, psi)

    @classmethod
    def zero(cls, X, points=3):
        y0 = 1 / (4 * math.pi * X)
        return cls.sampled(np.linspace(0.5 * y0, 1.5 * y0, points), np.zeros(points))

    @property
    def is_zero(self):
        return self.kind == 'sampled' and not np.any(self.psi)

    @property
    def effective_X(self):
        """ Length scale of the n-sum: X, or 1 / (4 pi y_min) on the support of a sampled kernel. """
        if self.kind != 'sampled':
            return self.X
        support = np.flatnonzero(self.psi)
        y_min = self.y[support[0]] if support.size else self.y[0]
        return 1 / (4 * math.pi * y_min)

    def log_weights(self, m, k):
        """ log of X_e^(k-1) * int psi(y) e^(-4 pi m y) y^(k-2) dy for integers m >= 1.

        The factor X_e^(k-1) (X_e = effective_X) keeps the values O(1).
        Sampled kernels may produce negative weights, so the sign is returned too.

        Returns:
            tuple: (log|w|, sign) arrays.
        """
        m = np.asarray(m, dtype=np.float64)
        Xe = self.effective_X
        lXe = math.log(Xe)

        if self.kind == 'point-mass':
            y0 = 1 / (4 * math.pi * self.X)
            logw = (k - 1) * lXe + (k - 2) * math.log(y0) - 4 * math.pi * m * y0
            return logw, np.ones_like(m)

        if self.kind == 'gamma-cutoff':
            Q = special.gammaincc(k - 1, (k - 1) * m / self.X)
            with np.errstate(divide='ignore'):
                logw = (k - 1) * lXe + (1 - k) * np.log(4 * math.pi * m) - math.log(4 * math.pi) + np.log(Q)
            return logw, np.ones_like(m)

        w = np.empty_like(m)
        ly = np.log(np.where(self.y > 0, self.y, 1.0))
        for start in range(0, m.size, 1024):
            mm = m[start:start + 1024, None]
            expo = (k - 2) * ly + (k - 1) * lXe - 4 * math.pi * mm * self.y
            integrand = np.where(self.psi != 0, self.psi * np.exp(expo), 0.0)
            w[start:start + 1024] = simpson(integrand, x=self.y, axis=1)

        with np.errstate(divide='ignore'):
            return np.log(np.abs(w)), np.sign(w)

    def integrate(self, g):
        """ int g(y) psi(y) dy for a sampled kernel; g is vectorized over the support. """
        support = self.psi != 0
        values = np.zeros_like(self.y)
        if np.any(support):
            values[support] = g(self.y[support]) * self.psi[support]
        return simpson(values, x=self.y)

    def yardstick_integral(self, k=None):
        """ int |psi(y)| y^(-3/2) dy. """
        if self.kind == 'point-mass':
            return (4 * math.pi * self.X) ** 1.5
        if self.kind == 'gamma-cutoff':
            y1 = (k - 1) / (4 * math.pi * self.X)
            return 2 * y1 ** -0.5 / (4 * math.pi * math.gamma(k - 1))
        support = self.psi != 0
        values = np.zeros_like(self.y)
        values[support] = np.abs(self.psi[support]) * self.y[support] ** -1.5
        return simpson(values, x=self.y)
