"""Multivariate Appell-type polynomial recursion and coefficient algebra.

Polynomials are stored sparsely as {multi-index tuple: complex coefficient}
with no explicit zeros.  Multi-indices are plain tuples of non-negative
integers.  The family r_α(x; M) is generated by

    r_{α+e_j} = x_j r_α − Σ_k M_{jk} α_k r_{α−e_k},    r_0 = 1,

for a symmetric matrix M; its members satisfy ∂_j r_α = α_j r_{α−e_j}
exactly at coefficient level, and contain only the degrees |α|, |α|−2, ….
M = 0 gives monomials, M = Id tensor products of probabilists' Hermite
polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AsymmetricM, DimensionMismatch

COEFF_TOL = 0.0  # coefficients are exact rational combinations; drop only true zeros


def validate_multi_index(alpha, n: int | None = None) -> tuple[int, ...]:
    """Coerce alpha to a tuple of non-negative ints, checking the mode count."""
    try:
        idx = tuple(int(a) for a in alpha)
    except TypeError:
        idx = (int(alpha),)
    if any(a < 0 for a in idx):
        raise DimensionMismatch(f"multi-index must be non-negative, got {idx}")
    if n is not None and len(idx) != n:
        raise DimensionMismatch(f"multi-index {idx} does not have {n} components")
    return idx


@dataclass(frozen=True)
class MultiPoly:
    """Sparse multivariate polynomial with complex coefficients."""

    n: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for key, value in self.coeffs.items():
            key = validate_multi_index(key, self.n)
            value = complex(value)
            if value != 0:
                clean[key] = clean.get(key, 0) + value
        object.__setattr__(self, "coeffs", clean)

    @property
    def degree(self) -> int:
        if not self.coeffs:
            return 0
        return max(sum(k) for k in self.coeffs)

    def __getitem__(self, key) -> complex:
        return self.coeffs.get(validate_multi_index(key, self.n), 0j)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Evaluate at points of shape (..., n); returns shape (...)."""
        x = np.asarray(x, dtype=complex)
        if x.shape[-1] != self.n:
            raise DimensionMismatch(
                f"points have {x.shape[-1]} components, polynomial has {self.n}"
            )
        out = np.zeros(x.shape[:-1], dtype=complex)
        for key, value in self.coeffs.items():
            term = np.full(x.shape[:-1], value, dtype=complex)
            for j, power in enumerate(key):
                if power:
                    term = term * x[..., j] ** power
            out += term
        return out

    def differentiate(self, j: int) -> "MultiPoly":
        """Partial derivative in variable j."""
        out: dict = {}
        for key, value in self.coeffs.items():
            if key[j] == 0:
                continue
            new = list(key)
            new[j] -= 1
            out[tuple(new)] = out.get(tuple(new), 0) + value * key[j]
        return MultiPoly(self.n, out)

    def multiply(self, other: "MultiPoly") -> "MultiPoly":
        if other.n != self.n:
            raise DimensionMismatch("cannot multiply polynomials in different variables")
        out: dict = {}
        for ka, va in self.coeffs.items():
            for kb, vb in other.coeffs.items():
                key = tuple(a + b for a, b in zip(ka, kb))
                out[key] = out.get(key, 0) + va * vb
        return MultiPoly(self.n, out)

    def scale(self, factor: complex) -> "MultiPoly":
        return MultiPoly(self.n, {k: v * factor for k, v in self.coeffs.items()})

    def add(self, other: "MultiPoly") -> "MultiPoly":
        if other.n != self.n:
            raise DimensionMismatch("cannot add polynomials in different variables")
        out = dict(self.coeffs)
        for key, value in other.coeffs.items():
            out[key] = out.get(key, 0) + value
        return MultiPoly(self.n, out)

    def compose_linear(self, A: np.ndarray) -> "MultiPoly":
        """Return p(Ax) for a square matrix A (same variable count)."""
        A = np.asarray(A, dtype=complex)
        if A.shape != (self.n, self.n):
            raise DimensionMismatch(f"linear map must be {self.n}×{self.n}")
        # images of the variables: y_i = Σ_j A_ij x_j
        images = [
            MultiPoly(self.n, {tuple(int(i == j) for i in range(self.n)): A[row, j]
                                for j in range(self.n)})
            for row in range(self.n)
        ]
        out = MultiPoly(self.n, {})
        one = MultiPoly(self.n, {(0,) * self.n: 1.0})
        for key, value in self.coeffs.items():
            term = one.scale(value)
            for j, power in enumerate(key):
                for _ in range(power):
                    term = term.multiply(images[j])
            out = out.add(term)
        return out


def poly_recursion(M: np.ndarray, alpha) -> MultiPoly:
    """r_α(x; M) with unit leading coefficient on x^α.

    Built by graded induction over the box {γ : γ ≤ α componentwise}; the
    recursion is step-order independent (the gradient identity guarantees
    consistency), so the first nonzero component is stepped each time.
    """
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    n = M.shape[0]
    if M.shape != (n, n):
        raise DimensionMismatch("recursion matrix must be square")
    if np.max(np.abs(M - M.T)) > 1e-10 * max(1.0, float(np.max(np.abs(M)))):
        raise AsymmetricM("recursion matrix is not symmetric")
    M = 0.5 * (M + M.T)
    alpha = validate_multi_index(alpha, n)

    table: dict[tuple[int, ...], MultiPoly] = {}
    zero = (0,) * n
    table[zero] = MultiPoly(n, {zero: 1.0})

    def unit(j):
        return tuple(int(i == j) for i in range(n))

    # graded-lex enumeration of the box below alpha
    box = [()]
    for a in alpha:
        box = [prefix + (c,) for prefix in box for c in range(a + 1)]
    box.sort(key=lambda g: (sum(g), g))
    for gamma in box:
        if gamma == zero:
            continue
        j = next(i for i, g in enumerate(gamma) if g > 0)
        prev = tuple(g - int(i == j) for i, g in enumerate(gamma))
        base = table[prev]
        xj = MultiPoly(n, {unit(j): 1.0})
        result = xj.multiply(base)
        for k in range(n):
            if prev[k] == 0 or M[j, k] == 0:
                continue
            lower = tuple(g - int(i == k) for i, g in enumerate(prev))
            result = result.add(table[lower].scale(-M[j, k] * prev[k]))
        table[gamma] = result
    return table[alpha]


def poly_gradient(p: MultiPoly, alpha=None):
    """Analytic gradients (∂_1 p, …, ∂_n p).

    For p = poly_recursion(M, α) these equal α_j · r_{α−e_j}; the identity is
    what the property tests assert.
    """
    if alpha is not None:
        alpha = validate_multi_index(alpha, p.n)
        if p.degree > sum(alpha):
            raise DimensionMismatch("polynomial degree exceeds |alpha|")
    return tuple(p.differentiate(j) for j in range(p.n))
