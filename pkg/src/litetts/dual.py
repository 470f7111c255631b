"""Forward-mode dual arrays.

A :class:`Dual` carries a value array and a tangent array of the same shape and
propagates directional derivatives through ordinary numpy code via the
``__array_ufunc__`` / ``__array_function__`` protocols.  Model kernels are
written against plain numpy, so running them on dual weights yields the exact
directional derivative of any scalar output without a separate code path.

Only the numpy surface used by this package is supported; anything else raises
``NotImplementedError`` rather than silently dropping the tangent.
"""
from __future__ import annotations

import numpy as np

__all__ = ["Dual", "value_of", "tangent_of"]


def value_of(x):
    return x.value if isinstance(x, Dual) else x


def tangent_of(x):
    return x.tangent if isinstance(x, Dual) else None


class Dual:
    """Array-valued dual number ``value + eps * tangent`` with ``eps**2 == 0``."""

    __array_priority__ = 1000

    def __init__(self, value, tangent=None):
        value = np.asarray(value)
        if tangent is None:
            tangent = np.zeros_like(value)
        else:
            tangent = np.asarray(tangent)
            if tangent.shape != value.shape:
                tangent = np.broadcast_to(tangent, value.shape)
        self.value = value
        self.tangent = tangent

    def __repr__(self):
        return f"Dual(value={self.value!r}, tangent={self.tangent!r})"

    def __array__(self, dtype=None, copy=None):
        raise TypeError("implicit conversion of Dual to ndarray would drop the tangent")

    # -- array-like attributes -------------------------------------------------
    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    @property
    def size(self):
        return self.value.size

    @property
    def dtype(self):
        return self.value.dtype

    @property
    def T(self):
        return Dual(self.value.T, self.tangent.T)

    @property
    def real(self):
        return Dual(np.real(self.value), np.real(self.tangent))

    @property
    def imag(self):
        return Dual(np.imag(self.value), np.imag(self.tangent))

    def __len__(self):
        return len(self.value)

    def __float__(self):
        return float(self.value)

    def __getitem__(self, idx):
        if isinstance(idx, Dual):
            raise TypeError("cannot index with a Dual")
        return Dual(self.value[idx], self.tangent[idx])

    def reshape(self, *shape):
        return Dual(self.value.reshape(*shape), self.tangent.reshape(*shape))

    def transpose(self, *axes):
        return Dual(self.value.transpose(*axes), self.tangent.transpose(*axes))

    def swapaxes(self, a, b):
        return Dual(self.value.swapaxes(a, b), self.tangent.swapaxes(a, b))

    def ravel(self):
        return Dual(self.value.ravel(), self.tangent.ravel())

    flatten = ravel

    def astype(self, dtype, copy=True):
        return Dual(self.value.astype(dtype), self.tangent.astype(dtype))

    def copy(self):
        return Dual(self.value.copy(), self.tangent.copy())

    def sum(self, *args, **kwargs):
        return np.sum(self, *args, **kwargs)

    def mean(self, *args, **kwargs):
        return np.mean(self, *args, **kwargs)

    # -- operators route through ufuncs ---------------------------------------
    def __add__(self, o): return np.add(self, o)
    def __radd__(self, o): return np.add(o, self)
    def __sub__(self, o): return np.subtract(self, o)
    def __rsub__(self, o): return np.subtract(o, self)
    def __mul__(self, o): return np.multiply(self, o)
    def __rmul__(self, o): return np.multiply(o, self)
    def __truediv__(self, o): return np.true_divide(self, o)
    def __rtruediv__(self, o): return np.true_divide(o, self)
    def __pow__(self, o): return np.power(self, o)
    def __rpow__(self, o): return np.power(o, self)
    def __matmul__(self, o): return np.matmul(self, o)
    def __rmatmul__(self, o): return np.matmul(o, self)
    def __neg__(self): return np.negative(self)
    def __pos__(self): return self
    def __abs__(self): return np.absolute(self)
    def __gt__(self, o): return self.value > value_of(o)
    def __ge__(self, o): return self.value >= value_of(o)
    def __lt__(self, o): return self.value < value_of(o)
    def __le__(self, o): return self.value <= value_of(o)

    # -- numpy protocols ------------------------------------------------------
    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or "out" in kwargs:
            raise NotImplementedError(f"Dual does not support {ufunc.__name__}.{method}")
        vals = [value_of(x) for x in inputs]
        tans = [tangent_of(x) for x in inputs]
        y = ufunc(*vals, **kwargs)
        name = ufunc.__name__
        if name in _NON_DIFFERENTIABLE:
            return y
        rule = _UFUNC_RULES.get(name)
        if rule is None:
            raise NotImplementedError(f"no tangent rule for ufunc {name}")
        t = rule(y, vals, tans)
        return Dual(y, t)

    def __array_function__(self, func, types, args, kwargs):
        name = func.__name__
        handler = _FUNC_HANDLERS.get(name)
        if handler is not None:
            return handler(func, args, kwargs)
        if name in _LINEAR:
            return _linear(func, args, kwargs)
        if name in _VALUE_ONLY:
            return func(*_map(value_of, args), **_map_kw(value_of, kwargs))
        raise NotImplementedError(f"Dual does not support numpy.{name}")


# ---------------------------------------------------------------------------
# ufunc tangent rules: rule(y, values, tangents) -> tangent of y


def _acc(*terms):
    out = None
    for t in terms:
        if t is None:
            continue
        out = t if out is None else out + t
    return out


def _unary(fn):
    return lambda y, v, t: fn(y, v[0]) * t[0]


def _sqrt_rule(y, v, t):
    safe = np.where(y > 0, y, 1.0)
    return np.where(y > 0, t[0] / (2.0 * safe), 0.0)


def _abs_rule(y, v, t):
    x = v[0]
    if not np.iscomplexobj(x):
        return np.sign(x) * t[0]
    # |x|' = Re(conj(x) x') / |x|, taken as 0 at the origin
    safe = np.where(y > 0, y, 1.0)
    return np.where(y > 0, np.real(np.conj(x) * t[0]) / safe, 0.0)


def _div_rule(y, v, t):
    a, b = v
    ta, tb = t
    return _acc(None if ta is None else ta / b, None if tb is None else -tb * a / (b * b))


def _power_rule(y, v, t):
    a, b = v
    ta, tb = t
    terms = []
    if ta is not None:
        # d/da a**0 is 0 everywhere, including a == 0 where a**-1 is infinite
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            slope = np.where(b == 0, 0.0, b * np.power(a, b - 1))
        terms.append(ta * slope)
    if tb is not None:
        terms.append(tb * y * np.log(a))
    return _acc(*terms)


def _select_rule(pick_first):
    def rule(y, v, t):
        a, b = v
        ta = t[0] if t[0] is not None else 0.0
        tb = t[1] if t[1] is not None else 0.0
        mask = pick_first(a, b)
        return np.where(mask, ta, tb)
    return rule


_UFUNC_RULES = {
    "add": lambda y, v, t: _acc(t[0], t[1]),
    "subtract": lambda y, v, t: _acc(t[0], None if t[1] is None else -t[1]),
    "multiply": lambda y, v, t: _acc(
        None if t[0] is None else t[0] * v[1], None if t[1] is None else v[0] * t[1]
    ),
    "divide": _div_rule,
    "true_divide": _div_rule,
    "negative": lambda y, v, t: -t[0],
    "positive": lambda y, v, t: t[0],
    "exp": _unary(lambda y, x: y),
    "log": _unary(lambda y, x: 1.0 / x),
    "tanh": _unary(lambda y, x: 1.0 - y * y),
    "sin": _unary(lambda y, x: np.cos(x)),
    "cos": _unary(lambda y, x: -np.sin(x)),
    "square": _unary(lambda y, x: 2.0 * x),
    "absolute": _abs_rule,
    "sqrt": _sqrt_rule,
    "power": _power_rule,
    "maximum": _select_rule(lambda a, b: a >= b),
    "minimum": _select_rule(lambda a, b: a <= b),
    "conjugate": lambda y, v, t: np.conjugate(t[0]),
    "matmul": lambda y, v, t: _acc(
        None if t[0] is None else np.matmul(t[0], v[1]),
        None if t[1] is None else np.matmul(v[0], t[1]),
    ),
}

_NON_DIFFERENTIABLE = {
    "greater", "greater_equal", "less", "less_equal", "equal", "not_equal",
    "isfinite", "isnan", "isinf", "sign", "floor", "ceil", "rint", "logical_and",
    "logical_or", "logical_not",
}


# ---------------------------------------------------------------------------
# array-function handlers


def _map(fn, seq):
    return [fn(x) for x in seq]


def _map_kw(fn, kw):
    return {k: fn(v) for k, v in kw.items()}


def _linear(func, args, kwargs):
    """Functions linear in their (single) Dual argument; other args are parameters."""
    y = func(*_map(value_of, args), **_map_kw(value_of, kwargs))
    t = func(
        *[x.tangent if isinstance(x, Dual) else x for x in args],
        **{k: (v.tangent if isinstance(v, Dual) else v) for k, v in kwargs.items()},
    )
    if isinstance(y, (list, tuple)):
        return [Dual(a, b) for a, b in zip(y, t)]
    return Dual(y, t)


def _zeros_tangent(x):
    if isinstance(x, Dual):
        return x.tangent
    return np.zeros_like(np.asarray(x))


def _concat_like(func, args, kwargs):
    seq = args[0]
    y = func([value_of(x) for x in seq], *args[1:], **kwargs)
    t = func([_zeros_tangent(x) for x in seq], *args[1:], **kwargs)
    return Dual(y, t)


def _multilinear(func, args, kwargs, first_operand=0):
    head = list(args[:first_operand])
    ops = list(args[first_operand:])
    vals = [value_of(x) for x in ops]
    y = func(*head, *vals, **kwargs)
    t = None
    for i, x in enumerate(ops):
        if isinstance(x, Dual):
            parts = vals.copy()
            parts[i] = x.tangent
            t = _acc(t, func(*head, *parts, **kwargs))
    return Dual(y, t)


def _einsum(func, args, kwargs):
    return _multilinear(func, args, kwargs, first_operand=1)


def _where(func, args, kwargs):
    cond, a, b = args
    cond = value_of(cond)
    y = np.where(cond, value_of(a), value_of(b))
    ta = a.tangent if isinstance(a, Dual) else 0.0
    tb = b.tangent if isinstance(b, Dual) else 0.0
    return Dual(y, np.where(cond, ta, tb))


def _pad(func, args, kwargs):
    x, width = args[0], args[1]
    mode = kwargs.get("mode", args[2] if len(args) > 2 else "constant")
    y = np.pad(value_of(x), width, mode=mode, **{k: v for k, v in kwargs.items() if k != "mode"})
    if mode == "constant":
        t = np.pad(x.tangent, width, mode="constant")
    else:
        t = np.pad(x.tangent, width, mode=mode)
    return Dual(y, t)


def _clip(func, args, kwargs):
    x, lo, hi = args
    y = np.clip(x.value, lo, hi)
    inside = np.ones(x.shape, dtype=bool)
    if lo is not None:
        inside &= x.value >= lo
    if hi is not None:
        inside &= x.value <= hi
    return Dual(y, np.where(inside, x.tangent, 0.0))


def _like(func, args, kwargs):
    return func(value_of(args[0]), *args[1:], **kwargs)


_FUNC_HANDLERS = {
    "concatenate": _concat_like,
    "stack": _concat_like,
    "hstack": _concat_like,
    "vstack": _concat_like,
    "einsum": _einsum,
    "dot": _multilinear,
    "tensordot": _multilinear,
    "outer": _multilinear,
    "where": _where,
    "pad": _pad,
    "clip": _clip,
    "zeros_like": _like,
    "ones_like": _like,
    "empty_like": _like,
    "full_like": _like,
}

_LINEAR = {
    "reshape", "transpose", "swapaxes", "moveaxis", "squeeze", "expand_dims", "ravel",
    "sum", "mean", "cumsum", "diff", "flip", "roll", "repeat", "tile", "broadcast_to",
    "sliding_window_view", "rfft", "irfft", "fft", "ifft", "real", "imag", "bincount",
    "split", "array_split", "take", "atleast_1d", "atleast_2d", "copy", "trace",
}

_VALUE_ONLY = {
    "shape", "ndim", "size", "isfinite", "isnan", "all", "any", "argmax", "argmin",
    "allclose", "array_equal", "count_nonzero", "result_type",
}
