"""Exact Wirtinger calculus on small expression trees.

Expressions are built over complex coordinates z^0..z^{m-1}; a variable and
its conjugate are independent symbols, so every expression has well-defined
derivatives d/dz^j and d/dzbar^j.  Trees are immutable after construction and
all operations here are pure, so expressions can be shared freely across
threads and cached aggressively.

Normal forms kept by the constructors:
  * conj(...) is distributed down to variables and constants at build time,
    so no conj node ever appears in a stored tree;
  * re(e) is rewritten to (e + conj(e))/2;
  * 0/1 absorption and constant folding are applied locally.

Distributing conj through log assumes the log argument stays off the negative
real axis; every expression in scope takes log of positive real quantities
(squared norms and 1 + |.|^2 combinations), where conj(log u) == log(conj u).
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

_CONST = "const"
_VAR = "var"
_ADD = "add"
_MUL = "mul"
_NEG = "neg"
_RECIP = "recip"
_POW = "pow"
_LOG = "log"


class Expr:
    """Immutable expression-tree node. Build through the module factories."""

    __slots__ = ("op", "args", "payload", "_dcache", "_conj", "_indices")

    def __init__(self, op, args=(), payload=None):
        self.op = op
        self.args = args
        self.payload = payload
        self._dcache = {}
        self._conj = None
        self._indices = None

    # arithmetic sugar; accepted scalars are wrapped into constants
    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return add(self, neg(_coerce(other)))

    def __rsub__(self, other):
        return add(_coerce(other), neg(self))

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return mul(self, recip(_coerce(other)))

    def __rtruediv__(self, other):
        return mul(_coerce(other), recip(self))

    def __neg__(self):
        return neg(self)

    def __pow__(self, k):
        return intpow(self, k)

    def __repr__(self):
        return f"Expr({to_text(self)})"


def _coerce(x):
    if isinstance(x, Expr):
        return x
    return const(x)


def _is_const(e, value=None):
    if e.op != _CONST:
        return False
    return value is None or e.payload == value


def const(c) -> Expr:
    return Expr(_CONST, payload=complex(c))


def var(index: int, conjugated: bool = False) -> Expr:
    if index < 0:
        raise ValueError("variable index must be nonnegative")
    return Expr(_VAR, payload=(index, bool(conjugated)))


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return const(a.payload + b.payload)
    if _is_const(a, 0j):
        return b
    if _is_const(b, 0j):
        return a
    return Expr(_ADD, (a, b))


def neg(a: Expr) -> Expr:
    if _is_const(a):
        return const(-a.payload)
    if a.op == _NEG:
        return a.args[0]
    return Expr(_NEG, (a,))


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return const(a.payload * b.payload)
    if _is_const(a, 0j) or _is_const(b, 0j):
        return const(0)
    if _is_const(a, 1 + 0j):
        return b
    if _is_const(b, 1 + 0j):
        return a
    return Expr(_MUL, (a, b))


def recip(a: Expr) -> Expr:
    if _is_const(a):
        if a.payload == 0:
            raise DomainError("reciprocal of the zero constant", a)
        return const(1.0 / a.payload)
    if a.op == _RECIP:
        return a.args[0]
    return Expr(_RECIP, (a,))


def intpow(a: Expr, k: int) -> Expr:
    if not isinstance(k, (int, np.integer)):
        raise ValueError("only integer exponents are supported")
    k = int(k)
    if k == 0:
        return const(1)
    if k == 1:
        return a
    if _is_const(a):
        return const(a.payload**k)
    if a.op == _POW:
        return intpow(a.args[0], a.payload * k)
    return Expr(_POW, (a,), payload=k)


def log(a: Expr) -> Expr:
    if _is_const(a):
        if a.payload == 0:
            raise DomainError("log of the zero constant", a)
        return const(np.log(a.payload))
    return Expr(_LOG, (a,))


def conj(e: Expr) -> Expr:
    """Structural conjugation: flips variables, folds constants, distributes."""
    cached = e._conj
    if cached is not None:
        return cached
    if e.op == _CONST:
        out = const(np.conj(e.payload))
    elif e.op == _VAR:
        j, c = e.payload
        out = var(j, not c)
    elif e.op == _POW:
        out = intpow(conj(e.args[0]), e.payload)
    else:
        children = tuple(conj(a) for a in e.args)
        out = {_ADD: add, _MUL: mul, _NEG: neg, _RECIP: recip, _LOG: log}[e.op](*children)
    e._conj = out
    out._conj = e
    return out


def re(e: Expr) -> Expr:
    """Real part, kept as the tree (e + conj(e))/2."""
    return mul(const(0.5), add(e, conj(e)))


def im(e: Expr) -> Expr:
    return mul(const(-0.5j), add(e, neg(conj(e))))


def abs2(e: Expr) -> Expr:
    """Squared modulus e * conj(e)."""
    return mul(e, conj(e))


def free_indices(e: Expr) -> frozenset:
    """Set of coordinate indices occurring in the tree (barred or not)."""
    if e._indices is not None:
        return e._indices
    if e.op == _CONST:
        s = frozenset()
    elif e.op == _VAR:
        s = frozenset((e.payload[0],))
    else:
        s = frozenset().union(*(free_indices(a) for a in e.args))
    e._indices = s
    return s


def differentiate(e: Expr, j: int, conjugated: bool = False) -> Expr:
    """Wirtinger derivative d e / dz^j (or d/dzbar^j when conjugated)."""
    key = (j, conjugated)
    cached = e._dcache.get(key)
    if cached is not None:
        return cached

    if e.op == _CONST:
        out = const(0)
    elif e.op == _VAR:
        vj, vc = e.payload
        out = const(1 if (vj == j and vc == conjugated) else 0)
    elif e.op == _ADD:
        out = add(differentiate(e.args[0], j, conjugated), differentiate(e.args[1], j, conjugated))
    elif e.op == _NEG:
        out = neg(differentiate(e.args[0], j, conjugated))
    elif e.op == _MUL:
        a, b = e.args
        out = add(
            mul(differentiate(a, j, conjugated), b),
            mul(a, differentiate(b, j, conjugated)),
        )
    elif e.op == _RECIP:
        (a,) = e.args
        out = neg(mul(differentiate(a, j, conjugated), recip(intpow(a, 2))))
    elif e.op == _POW:
        (a,) = e.args
        k = e.payload
        out = mul(mul(const(k), intpow(a, k - 1)), differentiate(a, j, conjugated))
    elif e.op == _LOG:
        (a,) = e.args
        out = mul(differentiate(a, j, conjugated), recip(a))
    else:  # pragma: no cover
        raise AssertionError(f"unhandled op {e.op}")

    e._dcache[key] = out
    return out


def evaluate(e: Expr, coords):
    """Evaluate at a point.

    ``coords`` is a sequence of complex scalars, or of equally shaped numpy
    arrays for vectorized evaluation over many points at once.  Shared
    subtrees are evaluated once per call.
    """
    memo = {}
    with np.errstate(divide="ignore", invalid="ignore"):
        return _eval(e, coords, memo)


def _eval(e, coords, memo):
    key = id(e)
    hit = memo.get(key)
    if hit is not None:
        return hit

    op = e.op
    if op == _CONST:
        v = e.payload
    elif op == _VAR:
        j, c = e.payload
        if j >= len(coords):
            raise DomainError(f"variable z{j + 1} outside point of dimension {len(coords)}", e)
        v = np.conj(coords[j]) if c else coords[j]
    elif op == _ADD:
        v = _eval(e.args[0], coords, memo) + _eval(e.args[1], coords, memo)
    elif op == _MUL:
        v = _eval(e.args[0], coords, memo) * _eval(e.args[1], coords, memo)
    elif op == _NEG:
        v = -_eval(e.args[0], coords, memo)
    elif op == _RECIP:
        u = _eval(e.args[0], coords, memo)
        _guard_nonzero(u, e)
        v = 1.0 / u
    elif op == _POW:
        u = _eval(e.args[0], coords, memo)
        if e.payload < 0:
            _guard_nonzero(u, e)
        v = u ** e.payload
    elif op == _LOG:
        u = _eval(e.args[0], coords, memo)
        _guard_nonzero(u, e)
        v = np.log(u)
    else:  # pragma: no cover
        raise AssertionError(f"unhandled op {op}")

    memo[key] = v
    return v


def _guard_nonzero(u, e):
    bad = np.any(u == 0) if isinstance(u, np.ndarray) else u == 0
    if bad:
        raise DomainError(f"singular subexpression {to_text(e)}", e)


_ZERO_TEST_SEED = 0x5EED
_N_ZERO_POINTS = 16


def _random_coords(rng, m, k=1):
    """Evaluation points for randomized zero tests, kept clear of the log cut
    and of coordinate zeros (re in [0.4, 1.3], |im| <= 0.9)."""
    re_part = rng.uniform(0.4, 1.3, size=(k, m))
    im_part = rng.uniform(-0.9, 0.9, size=(k, m))
    return re_part + 1j * im_part


def appears_zero(e: Expr, tol: float = 1e-12, npoints: int = _N_ZERO_POINTS) -> bool:
    """Randomized zero test after simplification: exact constant zero, or
    |value| < tol at ``npoints`` fixed pseudo-random points."""
    if _is_const(e):
        return abs(e.payload) < tol
    idx = free_indices(e)
    m = (max(idx) + 1) if idx else 1
    rng = np.random.default_rng(_ZERO_TEST_SEED)
    pts = _random_coords(rng, m, npoints)
    vals = evaluate(e, [pts[:, j] for j in range(m)])
    return bool(np.max(np.abs(vals)) < tol)


def is_holomorphic(e: Expr) -> bool:
    """True iff every dzbar^j-derivative of e vanishes identically."""
    return all(appears_zero(differentiate(e, j, conjugated=True)) for j in free_indices(e))


def is_pluriharmonic(e: Expr, tol: float = 1e-10) -> bool:
    """True iff all mixed second Wirtinger derivatives of e vanish."""
    idx = free_indices(e)
    for j in idx:
        ej = differentiate(e, j, conjugated=False)
        for k in idx:
            if not appears_zero(differentiate(ej, k, conjugated=True), tol):
                return False
    return True


def to_text(e: Expr) -> str:
    """Render a tree in the surface-file expression syntax."""
    if e.op == _CONST:
        c = e.payload
        if c.imag == 0:
            return _fmt_real(c.real)
        if c.real == 0:
            return f"{_fmt_real(c.imag)}i"
        sign = "+" if c.imag >= 0 else "-"
        return f"({_fmt_real(c.real)}{sign}{_fmt_real(abs(c.imag))}i)"
    if e.op == _VAR:
        j, c = e.payload
        name = f"z{j + 1}"
        return f"conj({name})" if c else name
    if e.op == _ADD:
        return f"({to_text(e.args[0])} + {to_text(e.args[1])})"
    if e.op == _MUL:
        return f"({to_text(e.args[0])} * {to_text(e.args[1])})"
    if e.op == _NEG:
        return f"(-{to_text(e.args[0])})"
    if e.op == _RECIP:
        return f"(1 / {to_text(e.args[0])})"
    if e.op == _POW:
        return f"{to_text(e.args[0])}^{e.payload}"
    if e.op == _LOG:
        return f"log({to_text(e.args[0])})"
    raise AssertionError(f"unhandled op {e.op}")  # pragma: no cover


def _fmt_real(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)
