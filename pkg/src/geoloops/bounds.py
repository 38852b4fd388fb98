"""Explicit bound functions evaluated in nested-log arithmetic.

Covers the ball-count estimate, the contractibility radii, the size of the
loop-space net, the width of the net-based contraction, the final length
bound for families of paths and the curvature rescaling.  All results are
:class:`~geoloops.logscalar.LogScalar` values so nothing overflows.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .logscalar import LogScalar

__all__ = [
    "InvalidParameter",
    "GeometryParams",
    "BoundReport",
    "ball_count_bound",
    "contractibility_params",
    "net_size_bound",
    "width_bound",
    "WidthBound",
    "length_bound",
    "length_envelope",
    "rescale",
    "bound_report",
]


class InvalidParameter(ValueError):
    """A bound was asked for outside its domain."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InvalidParameter(msg)


@dataclass(frozen=True)
class GeometryParams:
    n: int = 2
    k: float = -1.0
    v: float = 1.0
    D: float = 1.0
    d: float | None = None
    c: float = 2.0
    a: float = 4.0
    delta: float | None = None
    l: int = 1

    def __post_init__(self):
        _require(isinstance(self.n, int) and self.n >= 2, f"n must be an integer >= 2, got {self.n}")
        _require(self.k <= 0, f"k must be <= 0, got {self.k}")
        _require(self.v > 0, f"v must be > 0, got {self.v}")
        _require(self.D > 0, f"D must be > 0, got {self.D}")
        if self.d is None:
            object.__setattr__(self, "d", float(self.D))
        _require(0 < self.d <= self.D, f"need 0 < d <= D, got d={self.d}, D={self.D}")
        _require(self.c > 0, f"c must be > 0, got {self.c}")
        _require(self.a > 2, f"a must be > 2, got {self.a}")
        if self.delta is None:
            object.__setattr__(self, "delta", 1e-3 * self.D)
        _require(self.delta > 0, f"delta must be > 0, got {self.delta}")
        _require(isinstance(self.l, int) and self.l >= 1, f"l must be an integer >= 1, got {self.l}")

    def replace(self, **changes) -> "GeometryParams":
        data = asdict(self)
        data.update(changes)
        return GeometryParams(**data)

    def to_json(self) -> dict:
        return asdict(self)


def ball_count_bound(eps: float, D: float, n: int) -> LogScalar:
    """Upper bound on the number of disjoint ``eps/12`` balls.

    ``12^n n e^{D(n-1)} / (2^{n-1} (n-1) eps^n)``, evaluated through its log.
    """
    _require(eps > 0 and D > 0 and n >= 2, f"ball_count_bound needs eps>0, D>0, n>=2 (got {eps}, {D}, {n})")
    log_val = (
        n * math.log(12.0)
        + math.log(n)
        + D * (n - 1)
        - (n - 1) * math.log(2.0)
        - math.log(n - 1)
        - n * math.log(eps)
    )
    return LogScalar.from_log(log_val)


def contractibility_params(n: int, v: float, D: float, c1: float = 1.0, c2: float = 1.0) -> tuple[LogScalar, LogScalar]:
    """Radius ``r`` below which balls contract, and the dilation ``R``."""
    _require(n >= 2 and v > 0 and D > 0 and c1 > 0 and c2 > 0, "contractibility_params needs positive inputs and n >= 2")
    log_r = math.log(c1) + math.log(v) + math.log(min(1.0, v)) - math.log(D) - (n - 1) * D
    log_R = math.log(c2) + (n - 1) * D - math.log(v)
    return LogScalar.from_log(log_r), LogScalar.from_log(log_R)


def net_size_bound(N, L: float, eps: float) -> LogScalar:
    """``N ** (18 L / eps + 1)``: how many broken-geodesic loops the net can hold."""
    N = LogScalar.coerce(N)
    _require(N >= 1, "net_size_bound needs N >= 1")
    _require(L > 0 and eps > 0, "net_size_bound needs L > 0 and eps > 0")
    exponent = LogScalar.from_float(18.0 * L / eps) + 1.0
    return N ** exponent


@dataclass(frozen=True)
class WidthBound:
    W: LogScalar
    envelope: LogScalar
    G: float
    r: LogScalar
    R: LogScalar
    eps: LogScalar
    N: LogScalar
    N_net: LogScalar


def width_bound(params: GeometryParams, c1: float = 1.0, c2: float = 1.0) -> WidthBound:
    """Width of the contraction built from the loop-space net.

    ``W = 2 (Ñ + 1)(2R + 1) r / a`` with ``eps = r/(4a)``, ``N`` the ball count
    at ``eps`` and ``Ñ = N^(18 c D / eps + 1)``.  Also returns the envelope
    ``exp(c exp(G))`` and checks ``W <= envelope``.
    """
    n, v, D, c, a = params.n, params.v, params.D, params.c, params.a
    r, R = contractibility_params(n, v, D, c1, c2)
    eps = r / (4.0 * a)
    eps_f = eps.mid()
    _require(eps_f > 0, "eps underflowed; parameters out of range")
    N = ball_count_bound(eps_f, D, n)
    N_net = net_size_bound(N, c * D, eps_f)
    W = 2.0 * (N_net + 1.0) * (2.0 * R + 1.0) * (r / a)

    # c e^G := (18 c D/eps + 1) ln N + ln 4 + ln(2R + 1) + max(0, ln(r/a))
    ln_r_over_a = math.log(r.mid()) - math.log(a)
    budget = (
        (LogScalar.from_float(18.0 * c * D / eps_f) + 1.0) * N.ln()
        + math.log(4.0)
        + (2.0 * R + 1.0).ln()
        + max(0.0, ln_r_over_a)
    )
    G = (budget / c).log_value()
    envelope = budget.exp()
    if W > envelope:
        raise ArithmeticError("width exceeded its exp(c exp(G)) envelope")
    return WidthBound(W=W, envelope=envelope, G=G, r=r, R=R, eps=eps, N=N, N_net=N_net)


def length_bound(params: GeometryParams, W) -> LogScalar:
    """``2 l (5 W + 3 D) + D + delta``."""
    W = LogScalar.coerce(W)
    l, D = params.l, params.D
    return 2.0 * l * (5.0 * W + 3.0 * D) + D + params.delta


def length_envelope(params: GeometryParams, envelope: LogScalar) -> LogScalar:
    """The coarse form ``exp(c exp(G)) + delta``."""
    return envelope + params.delta


def rescale(k: float, v: float, D: float, d: float, n: int) -> tuple[float, float, float]:
    """Scale a metric with curvature >= k < 0 to curvature >= -1."""
    _require(k < 0, f"rescale needs k < 0, got {k}")
    s = abs(k)
    return v * s**n, D * s, d * s


@dataclass
class BoundReport:
    inputs: GeometryParams
    constants_c1: float
    constants_c2: float
    r: LogScalar
    R: LogScalar
    N_bound: LogScalar
    net_size_bound: LogScalar
    W_bound: LogScalar
    W_envelope: LogScalar
    G_value: float
    L_bound: LogScalar
    L_envelope: LogScalar
    rescaled: dict | None = field(default=None)

    def to_json(self) -> dict:
        def ls(x: LogScalar) -> dict:
            return x.to_json()

        w_lo, w_hi = self.W_bound.at_level(2) if self.W_bound.hi > math.e else (self.W_bound.lo, self.W_bound.hi)
        return {
            "inputs": self.inputs.to_json(),
            "constants_c1": self.constants_c1,
            "constants_c2": self.constants_c2,
            "rescaled": self.rescaled,
            "r": ls(self.r),
            "R": ls(self.R),
            "N_bound": ls(self.N_bound),
            "net_size_bound": ls(self.net_size_bound),
            "W_bound": ls(self.W_bound),
            "W_bound_level2": {"level": 2, "lo": w_lo, "hi": w_hi},
            "W_envelope": ls(self.W_envelope),
            "G_value": self.G_value,
            "L_bound": ls(self.L_bound),
            "L_envelope": ls(self.L_envelope),
        }


def bound_report(params: GeometryParams, c1: float = 1.0, c2: float = 1.0) -> BoundReport:
    """Evaluate every bound; curvature below -1 is first rescaled to -1."""
    work = params
    rescaled = None
    if params.k < -1.0:
        v2, D2, d2 = rescale(params.k, params.v, params.D, params.d, params.n)
        work = params.replace(v=v2, D=D2, d=d2, k=-1.0)
        rescaled = {"v": v2, "D": D2, "d": d2}
    wb = width_bound(work, c1, c2)
    return BoundReport(
        inputs=params,
        constants_c1=c1,
        constants_c2=c2,
        r=wb.r,
        R=wb.R,
        N_bound=wb.N,
        net_size_bound=wb.N_net,
        W_bound=wb.W,
        W_envelope=wb.envelope,
        G_value=wb.G,
        L_bound=length_bound(work, wb.W),
        L_envelope=length_envelope(work, wb.envelope),
        rescaled=rescaled,
    )
