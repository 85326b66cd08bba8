"""Noncommutative polynomials over selfadjoint indeterminates x1..xd, their
noncommutative and cyclic derivatives, and Monte Carlo checks of the
Gaussian integration-by-parts identity

    E ts[X_i Q(X)] = E (ts x ts)[d_i Q(X)]

for tuples of independent Hermitian Gaussian matrices.

Words are tuples of 1-based indices; polynomials keep a canonical form
(no duplicate words, no zero coefficients, lexicographic word order for
serialization).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .sampling import RngStream, sample_gue

__all__ = [
    "NCMonomial",
    "NCPoly",
    "TensorPoly",
    "x",
    "nc_derivative",
    "cyclic_derivative",
    "eval_poly",
    "eval_tensor_tstrace",
    "sd_check",
    "SDCheckResult",
]

Word = tuple[int, ...]


@dataclass(frozen=True)
class NCMonomial:
    coefficient: complex
    word: Word


def _as_word(word) -> Word:
    w = tuple(int(i) for i in word)
    if any(i < 1 for i in w):
        raise InvalidParameterError(f"indeterminate indices are 1-based, got {w!r}")
    return w


class NCPoly:
    """Finite linear combination of words, canonical by construction."""

    __slots__ = ("_terms",)

    def __init__(self, terms: dict[Word, complex] | None = None):
        clean: dict[Word, complex] = {}
        for w, c in (terms or {}).items():
            c = complex(c)
            if c != 0:
                clean[_as_word(w)] = c
        self._terms = clean

    # construction helpers -------------------------------------------------
    @classmethod
    def zero(cls) -> "NCPoly":
        return cls()

    @classmethod
    def one(cls) -> "NCPoly":
        return cls({(): 1.0})

    @classmethod
    def monomial(cls, coefficient, word) -> "NCPoly":
        return cls({_as_word(word): complex(coefficient)})

    # views -----------------------------------------------------------------
    @property
    def terms(self) -> dict[Word, complex]:
        return dict(self._terms)

    @property
    def monomials(self) -> list[NCMonomial]:
        return [NCMonomial(c, w) for w, c in sorted(self._terms.items())]

    def degree(self) -> int:
        return max((len(w) for w in self._terms), default=0)

    def indeterminates(self) -> int:
        return max((max(w) for w in self._terms if w), default=0)

    # algebra ----------------------------------------------------------------
    def __add__(self, other: "NCPoly") -> "NCPoly":
        out = dict(self._terms)
        for w, c in other._terms.items():
            out[w] = out.get(w, 0.0) + c
        return NCPoly(out)

    def __sub__(self, other: "NCPoly") -> "NCPoly":
        return self + (-1.0) * other

    def __rmul__(self, scalar) -> "NCPoly":
        return NCPoly({w: scalar * c for w, c in self._terms.items()})

    def __mul__(self, other: "NCPoly") -> "NCPoly":
        out: dict[Word, complex] = {}
        for w1, c1 in self._terms.items():
            for w2, c2 in other._terms.items():
                w = w1 + w2
                out[w] = out.get(w, 0.0) + c1 * c2
        return NCPoly(out)

    def __pow__(self, n: int) -> "NCPoly":
        if n < 0:
            raise InvalidParameterError("negative powers are not defined")
        out = NCPoly.one()
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, NCPoly) and self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        return f"NCPoly({self.serialize()!r})"

    # serialization -----------------------------------------------------------
    def serialize(self) -> str:
        """Canonical text form, e.g. ``1.0+0.0i * x1.x2.x1``; words sorted
        lexicographically, coefficients in round-trip decimal."""
        if not self._terms:
            return "0"
        parts = []
        for w in sorted(self._terms):
            c = self._terms[w]
            re_s = repr(c.real)
            neg_im = math.copysign(1.0, c.imag) < 0
            im_s = f"-{(-c.imag)!r}" if neg_im else f"+{c.imag!r}"
            word_s = ".".join(f"x{i}" for i in w) if w else "1"
            parts.append(f"{re_s}{im_s}i * {word_s}")
        return " + ".join(parts)

    @classmethod
    def parse(cls, text: str) -> "NCPoly":
        text = text.strip()
        if text == "0":
            return cls.zero()
        terms: dict[Word, complex] = {}
        for part in text.split(" + "):
            try:
                coeff_s, word_s = part.split(" * ")
            except ValueError as exc:
                raise InvalidParameterError(f"malformed term {part!r}") from exc
            if not coeff_s.endswith("i"):
                raise InvalidParameterError(f"malformed coefficient {coeff_s!r}")
            coeff = complex(coeff_s[:-1].replace("i", "j") + "j")
            if word_s == "1":
                word: Word = ()
            else:
                if not re.fullmatch(r"x\d+(\.x\d+)*", word_s):
                    raise InvalidParameterError(f"malformed word {word_s!r}")
                word = tuple(int(tok[1:]) for tok in word_s.split("."))
            terms[word] = terms.get(word, 0.0) + coeff
        return cls(terms)


def x(i: int) -> NCPoly:
    """The i-th indeterminate as a polynomial (1-based)."""
    return NCPoly.monomial(1.0, (i,))


class TensorPoly:
    """Element of the tensor square: sum of coeff * (left word (x) right word)."""

    __slots__ = ("_terms",)

    def __init__(self, terms: dict[tuple[Word, Word], complex] | None = None):
        clean: dict[tuple[Word, Word], complex] = {}
        for (wl, wr), c in (terms or {}).items():
            c = complex(c)
            if c != 0:
                clean[(_as_word(wl), _as_word(wr))] = c
        self._terms = clean

    @classmethod
    def zero(cls) -> "TensorPoly":
        return cls()

    @property
    def terms(self) -> dict[tuple[Word, Word], complex]:
        return dict(self._terms)

    def __add__(self, other: "TensorPoly") -> "TensorPoly":
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0.0) + c
        return TensorPoly(out)

    def __rmul__(self, scalar) -> "TensorPoly":
        return TensorPoly({k: scalar * c for k, c in self._terms.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, TensorPoly) and self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        body = " + ".join(f"{c} * ({wl} (x) {wr})"
                          for (wl, wr), c in sorted(self._terms.items()))
        return f"TensorPoly({body or '0'})"

    def mul_left_poly(self, P: NCPoly) -> "TensorPoly":
        """(P (x) 1) * self: prepend P's words to the left factors."""
        out: dict[tuple[Word, Word], complex] = {}
        for (wl, wr), c in self._terms.items():
            for w, cp in P._terms.items():
                k = (w + wl, wr)
                out[k] = out.get(k, 0.0) + c * cp
        return TensorPoly(out)

    def mul_right_poly(self, Q: NCPoly) -> "TensorPoly":
        """self * (1 (x) Q): append Q's words to the right factors."""
        out: dict[tuple[Word, Word], complex] = {}
        for (wl, wr), c in self._terms.items():
            for w, cq in Q._terms.items():
                k = (wl, wr + w)
                out[k] = out.get(k, 0.0) + c * cq
        return TensorPoly(out)


def nc_derivative(P: NCPoly, i: int) -> TensorPoly:
    """d_i: split every occurrence of x_i in every word into prefix (x) suffix."""
    if i < 1:
        raise InvalidParameterError(f"index must be >= 1, got {i!r}")
    out: dict[tuple[Word, Word], complex] = {}
    for w, c in P._terms.items():
        for pos, idx in enumerate(w):
            if idx == i:
                k = (w[:pos], w[pos + 1:])
                out[k] = out.get(k, 0.0) + c
    return TensorPoly(out)


def cyclic_derivative(P: NCPoly, i: int) -> NCPoly:
    """D_i = m o d_i with m: A (x) B -> B A."""
    out: dict[Word, complex] = {}
    for (wl, wr), c in nc_derivative(P, i)._terms.items():
        w = wr + wl
        out[w] = out.get(w, 0.0) + c
    return NCPoly(out)


def _ts(A: np.ndarray) -> complex:
    return complex(np.trace(A) / A.shape[0])


def eval_poly(P: NCPoly, mats: list[np.ndarray]) -> np.ndarray:
    """Evaluate with words as left-to-right matrix products."""
    if not mats:
        raise InvalidParameterError("need at least one matrix")
    N = mats[0].shape[0]
    if P.indeterminates() > len(mats):
        raise InvalidParameterError(
            f"polynomial uses x{P.indeterminates()} but only {len(mats)} matrices given")
    out = np.zeros((N, N), dtype=np.complex128)
    eye = np.eye(N, dtype=np.complex128)
    for w, c in P._terms.items():
        M = eye
        for idx in w:
            M = M @ mats[idx - 1]
        out += c * M
    return out


def eval_tensor_tstrace(T: TensorPoly, mats: list[np.ndarray]) -> complex:
    """(ts x ts) evaluation: sum of coeff * ts(left) * ts(right)."""
    total = 0.0 + 0.0j
    cache: dict[Word, complex] = {}

    def ts_word(w: Word) -> complex:
        if w not in cache:
            cache[w] = _ts(eval_poly(NCPoly.monomial(1.0, w), mats))
        return cache[w]

    for (wl, wr), c in T._terms.items():
        total += c * ts_word(wl) * ts_word(wr)
    return total


@dataclass(frozen=True)
class SDCheckResult:
    lhs_mean: complex
    rhs_mean: complex
    lhs_se: float
    rhs_se: float

    def consistent(self, n_se: float = 4.0) -> bool:
        return abs(self.lhs_mean - self.rhs_mean) <= n_se * (self.lhs_se + self.rhs_se)


def sd_check(Q: NCPoly, i: int, N: int, trials: int, rng: RngStream) -> SDCheckResult:
    """Monte Carlo comparison of E ts[X_i Q(X)] with E (ts x ts)[d_i Q(X)]
    over independent unit-time Hermitian Gaussian tuples."""
    if N < 2 or trials < 2:
        raise InvalidParameterError("need N >= 2 and trials >= 2")
    d = max(Q.indeterminates(), i)
    dQ = nc_derivative(Q, i)
    Xi = x(i)
    lhs = np.empty(trials, dtype=np.complex128)
    rhs = np.empty(trials, dtype=np.complex128)
    for k in range(trials):
        mats = [sample_gue(N, 1.0, rng) for _ in range(d)]
        lhs[k] = _ts(eval_poly(Xi * Q, mats))
        rhs[k] = eval_tensor_tstrace(dQ, mats)

    def se(v: np.ndarray) -> float:
        if trials < 2:
            return float("nan")
        var = v.real.var(ddof=1) + v.imag.var(ddof=1)
        return float(math.sqrt(var / trials))

    return SDCheckResult(lhs_mean=complex(lhs.mean()), rhs_mean=complex(rhs.mean()),
                         lhs_se=se(lhs), rhs_se=se(rhs))
