"""Nested-log interval arithmetic for non-negative magnitudes.

A :class:`LogScalar` stores an interval for ``x`` (level 0), ``ln x``
(level 1) or ``ln ln x`` (level 2).  Values promote to the next level once
the stored upper bound passes ``1e300`` and demote back when they fit again,
so products, sums, powers and exponentials of double-exponential size never
overflow.

Every value also remembers the expression that produced it.  Comparisons
whose float intervals overlap are re-evaluated with :mod:`mpmath` interval
arithmetic at increasing precision before giving up.
"""

from __future__ import annotations

import enum
import math
from typing import Any, Callable

from mpmath import iv

__all__ = ["LogScalar", "Ordering", "PROMOTE_AT", "MAX_LEVEL"]

PROMOTE_AT = 1e300
_LN_PROMOTE = math.log(PROMOTE_AT)
_LN2 = math.log(2.0)
MAX_LEVEL = 2
_REFINE_PRECISIONS = (120, 240, 480, 960)


class Ordering(enum.Enum):
    LESS = -1
    INDISTINGUISHABLE = 0
    GREATER = 1


# ---------------------------------------------------------------------------
# interval backends
# ---------------------------------------------------------------------------


def _down(x: float) -> float:
    if math.isinf(x) or math.isnan(x):
        return x
    return math.nextafter(math.nextafter(x, -math.inf), -math.inf)


def _up(x: float) -> float:
    if math.isinf(x) or math.isnan(x):
        return x
    return math.nextafter(math.nextafter(x, math.inf), math.inf)


def _fexp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _flog(x: float) -> float:
    if x <= 0.0:
        return -math.inf
    return math.log(x)


def _flogaddexp(x: float, y: float) -> float:
    hi, lo = (x, y) if x >= y else (y, x)
    if lo == -math.inf:
        return hi
    return hi + math.log1p(math.exp(lo - hi))


class _FloatBackend:
    """Double-precision intervals, each bound pushed two ulps outward."""

    def point(self, x: float):
        return (x, x)

    def make(self, lo: float, hi: float):
        return (lo, hi)

    def lo(self, a) -> float:
        return a[0]

    def hi(self, a) -> float:
        return a[1]

    def add(self, a, b):
        return (_down(a[0] + b[0]), _up(a[1] + b[1]))

    def neg(self, a):
        return (-a[1], -a[0])

    def mul(self, a, b):
        ps = []
        for x in a:
            for y in b:
                # 0 * inf is taken as 0: the zero bound is exact
                ps.append(0.0 if x == 0.0 or y == 0.0 else x * y)
        return (_down(min(ps)), _up(max(ps)))

    def recip(self, a):
        if a[0] <= 0.0:
            raise ValueError("reciprocal of an interval touching zero")
        return (_down(1.0 / a[1]), _up(1.0 / a[0]))

    def exp(self, a):
        return (max(0.0, _down(_fexp(a[0]))), _up(_fexp(a[1])))

    def log(self, a):
        return (_down(_flog(a[0])), _up(_flog(a[1])))

    def log1p(self, a):
        def f(x):
            return -math.inf if x <= -1.0 else math.log1p(x)

        return (_down(f(a[0])), _up(f(a[1])))

    def logaddexp(self, a, b):
        return (_down(_flogaddexp(a[0], b[0])), _up(_flogaddexp(a[1], b[1])))

    def x_exp_neg(self, x: float, alpha: float, upward: bool) -> float:
        """``x * exp(-alpha)`` evaluated through logs, rounded outward."""
        if x == 0.0:
            return 0.0
        mag = _fexp(math.log(abs(x)) - alpha)
        val = math.copysign(mag, x)
        return _up(val) if upward else _down(val)


class _MpBackend:
    """Arbitrary precision intervals from :mod:`mpmath.iv`."""

    def __init__(self, prec: int):
        self.prec = prec

    def point(self, x):
        return iv.mpf(x)

    def make(self, lo, hi):
        return iv.mpf([lo, hi])

    # endpoints stay at full precision; rounding them to float would lose rigour
    def lo(self, a):
        return a.a

    def hi(self, a):
        return a.b

    def add(self, a, b):
        return a + b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        if a.a == 0 and a.b == 0 or b.a == 0 and b.b == 0:
            return iv.mpf(0)
        return a * b

    def recip(self, a):
        if a.a <= 0:
            raise ValueError("reciprocal of an interval touching zero")
        return 1 / a

    def exp(self, a):
        return iv.exp(a)

    def log(self, a):
        if a.b <= 0:
            return iv.mpf(["-inf", "-inf"])
        if a.a <= 0:
            return iv.mpf(["-inf", iv.log(iv.mpf(a.b)).b])
        return iv.log(a)

    def log1p(self, a):
        return iv.log(1 + a)

    def logaddexp(self, a, b):
        def f(x, y):
            hi, lo = (x, y) if x >= y else (y, x)
            if lo == -math.inf:
                return hi
            return hi + iv.log(1 + iv.exp(lo - hi))

        lo = f(iv.mpf(a.a), iv.mpf(b.a))
        hi = f(iv.mpf(a.b), iv.mpf(b.b))
        return iv.mpf([lo.a, hi.b])

    def x_exp_neg(self, x, alpha, upward: bool):
        x = iv.mpf(x)
        if x.a == 0 and x.b == 0:
            return 0
        mag = iv.exp(iv.log(abs(x)) - iv.mpf(alpha))
        val = mag if x.a > 0 else -mag
        return val.b if upward else val.a


_FLOAT = _FloatBackend()


# ---------------------------------------------------------------------------
# level algorithms, written once over a backend
# ---------------------------------------------------------------------------


def _normalize(bk, level: int, a):
    while level < MAX_LEVEL and bk.hi(a) > PROMOTE_AT:
        if level == 1 and bk.lo(a) <= 0.0:
            raise ValueError("interval too wide to promote past level 1")
        a = bk.log(a)
        level += 1
    if level == MAX_LEVEL and bk.hi(a) > PROMOTE_AT:
        raise OverflowError("magnitude exceeds the level-2 range")
    while level > 0 and bk.hi(a) <= _LN_PROMOTE:
        a = bk.exp(a)
        level -= 1
    return level, a


def _lift(bk, level: int, a, target: int):
    while level < target:
        a = bk.log(a)
        level += 1
    return a


def _mul_by_log(bk, level: int, a, lnb):
    """Multiply a value at ``level`` by a factor whose natural log is ``lnb``."""
    if level <= 1:
        return _normalize(bk, 1, bk.add(_lift(bk, level, a, 1), lnb))
    # ln ln(a*b) = A + log1p(ln b / ln a) with ln a = e^A
    lo = bk.x_exp_neg(bk.lo(lnb), bk.lo(a) if bk.lo(lnb) < 0 else bk.hi(a), upward=False)
    hi = bk.x_exp_neg(bk.hi(lnb), bk.lo(a) if bk.hi(lnb) > 0 else bk.hi(a), upward=True)
    if lo <= -1.0:
        raise ValueError("factor collapses a level-2 value below 1")
    return _normalize(bk, 2, bk.add(a, bk.log1p(bk.make(lo, hi))))


def _ev_mul(bk, x, y):
    (la, a), (lb, b) = x, y
    if la == 0 and lb == 0:
        if bk.hi(a) <= 1.0 or bk.hi(b) <= 1.0 or bk.hi(a) * bk.hi(b) < PROMOTE_AT:
            return _normalize(bk, 0, bk.mul(a, b))
        return _normalize(bk, 1, bk.add(bk.log(a), bk.log(b)))
    if la == 2 and lb == 2:
        return _normalize(bk, 2, bk.logaddexp(a, b))
    if lb > la:
        (la, a), (lb, b) = (lb, b), (la, a)
    return _mul_by_log(bk, la, a, _lift(bk, lb, b, 1))


def _ev_div(bk, x, y):
    (la, a), (lb, b) = x, y
    if lb == 0:
        return _ev_mul(bk, x, (0, bk.recip(b)))
    if lb == 2:
        raise NotImplementedError("division by a level-2 magnitude")
    return _mul_by_log(bk, max(la, 1), _lift(bk, la, a, max(la, 1)), bk.neg(b))


def _ev_add(bk, x, y):
    (la, a), (lb, b) = x, y
    top = max(la, lb)
    if top == 0:
        return _normalize(bk, 0, bk.add(a, b))
    if top == 1:
        return _normalize(bk, 1, bk.logaddexp(_lift(bk, la, a, 1), _lift(bk, lb, b, 1)))
    # at least one level-2 operand dominates; the other adds at most ln 2 to ln(sum)
    tops = [v for lv, v in ((la, a), (lb, b)) if lv == 2]
    lo = max(bk.lo(v) for v in tops)
    hi = max(bk.hi(v) for v in tops)
    slack = bk.mul(bk.point(_LN2), bk.exp(bk.neg(bk.point(lo))))
    return _normalize(bk, 2, bk.make(lo, bk.hi(bk.add(bk.point(hi), slack))))


def _ev_exp(bk, x):
    level, a = x
    if level == 0:
        if bk.hi(a) <= _LN_PROMOTE:
            return _normalize(bk, 0, bk.exp(a))
        return _normalize(bk, 1, a)
    if level == 1:
        return _normalize(bk, 2, a)
    raise OverflowError("exp of a level-2 magnitude exceeds the representable range")


def _ev_ln(bk, x):
    level, a = x
    if level == 0:
        if bk.lo(a) < 1.0:
            raise ValueError("ln of a value below 1 is negative")
        return _normalize(bk, 0, bk.log(a))
    return _normalize(bk, level - 1, a)


def _ev_recip_exp(bk, x):
    """exp(-x) for a non-negative magnitude ``x``; always level 0."""
    level, a = x
    if level == 0:
        return 0, bk.exp(bk.neg(a))
    return 0, bk.make(0.0, bk.hi(bk.exp(bk.point(-_LN_PROMOTE))))


def _ev_pow(bk, base, expo):
    level, a = base
    if level == 0:
        ln_a = bk.log(a)
        if bk.lo(ln_a) >= 0.0:
            return _ev_exp(bk, _ev_mul(bk, expo, (0, ln_a)))
        if bk.hi(ln_a) <= 0.0:
            return _ev_recip_exp(bk, _ev_mul(bk, expo, (0, bk.neg(ln_a))))
        lo = _ev_recip_exp(bk, _ev_mul(bk, expo, (0, bk.make(0.0, -bk.lo(ln_a)))))
        hi = _ev_exp(bk, _ev_mul(bk, expo, (0, bk.make(0.0, bk.hi(ln_a)))))
        if hi[0] != 0:
            raise ValueError("power interval straddles 1 and exceeds level 0")
        return 0, bk.make(bk.lo(lo[1]), bk.hi(hi[1]))
    return _ev_exp(bk, _ev_mul(bk, expo, _normalize(bk, level - 1, a)))


_OPS: dict[str, Callable[..., Any]] = {
    "mul": _ev_mul,
    "div": _ev_div,
    "add": _ev_add,
    "exp": _ev_exp,
    "ln": _ev_ln,
    "pow": _ev_pow,
}


def _evaluate(expr, bk, memo: dict):
    key = id(expr)
    if key in memo:
        return memo[key]
    op = expr[0]
    if op == "const":
        out = _normalize(bk, 0, bk.point(expr[1]))
    elif op == "log":
        out = _normalize(bk, 1, bk.point(expr[1]))
    elif op == "interval":
        out = _normalize(bk, expr[1], bk.make(expr[2], expr[3]))
    else:
        args = [_evaluate(e, bk, memo) for e in expr[1:]]
        out = _OPS[op](bk, *args)
    memo[key] = out
    return out


# ---------------------------------------------------------------------------
# public type
# ---------------------------------------------------------------------------


class LogScalar:
    """Non-negative magnitude stored as an interval at nesting level 0, 1 or 2."""

    __slots__ = ("level", "lo", "hi", "_expr")

    def __init__(self, expr):
        level, (lo, hi) = _evaluate(expr, _FLOAT, {})
        if lo > hi:
            raise ArithmeticError("inverted interval")
        self.level = level
        self.lo = lo
        self.hi = hi
        self._expr = expr

    # construction -------------------------------------------------------
    @classmethod
    def from_float(cls, x: float) -> "LogScalar":
        x = float(x)
        if not x >= 0.0 or math.isinf(x):
            raise ValueError(f"LogScalar needs a finite non-negative value, got {x}")
        return cls(("const", x))

    @classmethod
    def from_log(cls, ln_x: float) -> "LogScalar":
        """The value ``exp(ln_x)``, exact in log space."""
        ln_x = float(ln_x)
        if math.isnan(ln_x) or math.isinf(ln_x):
            raise ValueError("log value must be finite")
        return cls(("log", ln_x))

    @classmethod
    def from_interval(cls, level: int, lo: float, hi: float) -> "LogScalar":
        if level not in (0, 1, 2) or lo > hi:
            raise ValueError("bad serialized LogScalar")
        return cls(("interval", level, float(lo), float(hi)))

    @classmethod
    def coerce(cls, x) -> "LogScalar":
        return x if isinstance(x, LogScalar) else cls.from_float(x)

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        return LogScalar(("add", self._expr, LogScalar.coerce(other)._expr))

    __radd__ = __add__

    def __mul__(self, other):
        return LogScalar(("mul", self._expr, LogScalar.coerce(other)._expr))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return LogScalar(("div", self._expr, LogScalar.coerce(other)._expr))

    def __rtruediv__(self, other):
        return LogScalar.coerce(other) / self

    def __pow__(self, exponent):
        return LogScalar(("pow", self._expr, LogScalar.coerce(exponent)._expr))

    def exp(self) -> "LogScalar":
        return LogScalar(("exp", self._expr))

    def ln(self) -> "LogScalar":
        """Natural log; defined for values >= 1 so the result stays non-negative."""
        return LogScalar(("ln", self._expr))

    # views --------------------------------------------------------------
    @property
    def sign(self) -> str:
        return "0" if self.level == 0 and self.hi == 0.0 else "+"

    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def to_float(self) -> float:
        """Plain float value (``inf`` once it no longer fits)."""
        m = self.mid()
        if self.level == 0:
            return m
        if self.level == 1:
            return _fexp(m)
        return _fexp(_fexp(m))

    def log_value(self) -> float:
        """Float ``ln x`` (``inf`` past level 1)."""
        m = self.mid()
        if self.level == 0:
            return _flog(m)
        if self.level == 1:
            return m
        return _fexp(m)

    def loglog_value(self) -> float:
        """Float ``ln ln x``; finite for every representable value above 1."""
        m = self.mid()
        if self.level == 2:
            return m
        return _flog(self.log_value())

    def at_level(self, level: int) -> tuple[float, float]:
        """Interval bounds re-expressed at a higher ``level`` (for reports)."""
        if level < self.level:
            raise ValueError("can only lift to a higher level")
        lo, hi = self.lo, self.hi
        for _ in range(level - self.level):
            lo, hi = _down(_flog(lo)), _up(_flog(hi))
        return lo, hi

    def to_json(self) -> dict:
        return {"level": self.level, "lo": self.lo, "hi": self.hi}

    @classmethod
    def from_json(cls, data: dict) -> "LogScalar":
        return cls.from_interval(int(data["level"]), data["lo"], data["hi"])

    # comparison ---------------------------------------------------------
    def compare(self, other) -> Ordering:
        other = LogScalar.coerce(other)
        res = _order(self.level, self.lo, self.hi, other.level, other.lo, other.hi)
        if res is not None:
            return res
        for prec in _REFINE_PRECISIONS:
            bk = _MpBackend(prec)
            saved = iv.prec
            iv.prec = prec
            try:
                la, a = _evaluate(self._expr, bk, {})
                lb, b = _evaluate(other._expr, bk, {})
                res = _order_mp(la, a, lb, b)
            finally:
                iv.prec = saved
            if res is not None:
                return res
        return Ordering.INDISTINGUISHABLE

    def __lt__(self, other):
        return self.compare(other) is Ordering.LESS

    def __gt__(self, other):
        return self.compare(other) is Ordering.GREATER

    def __le__(self, other):
        return self.compare(other) is not Ordering.GREATER

    def __ge__(self, other):
        return self.compare(other) is not Ordering.LESS

    def __eq__(self, other):
        if not isinstance(other, (LogScalar, int, float)):
            return NotImplemented
        return self.compare(other) is Ordering.INDISTINGUISHABLE

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"LogScalar(level={self.level}, lo={self.lo!r}, hi={self.hi!r})"


def _order(la, alo, ahi, lb, blo, bhi):
    while la < lb:
        alo, ahi, la = _down(_flog(alo)), _up(_flog(ahi)), la + 1
    while lb < la:
        blo, bhi, lb = _down(_flog(blo)), _up(_flog(bhi)), lb + 1
    if ahi < blo:
        return Ordering.LESS
    if bhi < alo:
        return Ordering.GREATER
    return None


def _order_mp(la, a, lb, b):
    bk = _MpBackend(0)
    while la < lb:
        a, la = bk.log(a), la + 1
    while lb < la:
        b, lb = bk.log(b), lb + 1
    if a.b < b.a:
        return Ordering.LESS
    if b.b < a.a:
        return Ordering.GREATER
    return None
