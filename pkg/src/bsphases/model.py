"""Hermitian matrix families A_mu(t) with polynomial entries in (t, mu).

A family is immutable; the parameter ``mu`` is always passed at the call site.
For repeated evaluation at a fixed ``mu`` use :meth:`HamiltonianFamily.at`,
which collapses every entry to a polynomial in ``t`` and evaluates whole time
grids at once.
"""

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DomainError

MAX_DEG_T = 8
MAX_DEG_MU = 4
COEFF_TOL = 1e-14


@dataclass(frozen=True)
class Polynomial:
    """Multivariate polynomial in (t, mu_1, ..., mu_d) with complex coefficients.

    ``terms`` maps a power tuple ``(p_t, p_mu1, ..., p_mud)`` to its
    coefficient.  Stored as a sorted tuple of pairs so the value is hashable.
    """

    terms: tuple

    @classmethod
    def from_dict(cls, terms: Mapping):
        cleaned = {}
        for powers, coeff in terms.items():
            powers = tuple(int(p) for p in powers)
            if any(p < 0 for p in powers):
                raise ConfigError(f"negative power in monomial {powers}")
            c = complex(coeff)
            if c != 0:
                cleaned[powers] = cleaned.get(powers, 0) + c
        return cls(tuple(sorted((p, c) for p, c in cleaned.items() if c != 0)))

    @property
    def nvars(self):
        return len(self.terms[0][0]) if self.terms else None

    def conjugate(self):
        return Polynomial(tuple((p, c.conjugate()) for p, c in self.terms))

    def coefficients_in_t(self, mu):
        """Coefficients ``c_k`` of ``sum_k c_k t^k`` after substituting ``mu``."""
        deg = max((p[0] for p, _ in self.terms), default=0)
        out = np.zeros(deg + 1, dtype=complex)
        for powers, c in self.terms:
            out[powers[0]] += c * np.prod([m**q for m, q in zip(mu, powers[1:])])
        return out


class HamiltonianFamily:
    """An n x n Hermitian family A_mu(t), t in ``domain``, mu in R^d."""

    def __init__(self, n: int, d: int, domain, entries, name: str | None = None):
        if not 2 <= n <= 16:
            raise ConfigError(f"matrix dimension must be in 2..16, got {n}")
        if d < 0:
            raise ConfigError("parameter dimension must be >= 0")
        a, b = (float(x) for x in domain)
        if not a < b:
            raise ConfigError(f"empty time domain [{a}, {b}]")
        self.n = n
        self.d = d
        self.domain = (a, b)
        self.name = name
        grid = [[Polynomial(()) for _ in range(n)] for _ in range(n)]
        for (i, j), poly in entries.items():
            if not (0 <= i < n and 0 <= j < n):
                raise ConfigError(f"entry ({i}, {j}) outside a {n}x{n} matrix")
            if not isinstance(poly, Polynomial):
                poly = Polynomial.from_dict(poly)
            grid[i][j] = poly
        # fill missing lower/upper triangle by conjugation
        for i in range(n):
            for j in range(n):
                if (i, j) not in entries and (j, i) in entries:
                    grid[i][j] = grid[j][i].conjugate()
        self.entries = tuple(tuple(row) for row in grid)
        self._validate()

    def _validate(self):
        for i in range(self.n):
            for j in range(self.n):
                poly = self.entries[i][j]
                for powers, _ in poly.terms:
                    if len(powers) != self.d + 1:
                        raise ConfigError(
                            f"entry ({i}, {j}): monomial {powers} needs {self.d + 1} powers"
                        )
                    if powers[0] > MAX_DEG_T or any(p > MAX_DEG_MU for p in powers[1:]):
                        raise ConfigError(f"entry ({i}, {j}): degree cap exceeded by {powers}")
                mine = dict(poly.terms)
                theirs = dict(self.entries[j][i].conjugate().terms)
                for key in set(mine) | set(theirs):
                    if abs(mine.get(key, 0) - theirs.get(key, 0)) > COEFF_TOL:
                        raise ConfigError(f"entries ({i}, {j}) and ({j}, {i}) are not conjugate")

    def __repr__(self):
        label = self.name or "inline"
        return f"HamiltonianFamily({label}, n={self.n}, d={self.d}, domain={self.domain})"

    def _mu(self, mu):
        mu = np.atleast_1d(np.asarray(mu, dtype=float)).ravel()
        if self.d == 0 and mu.size == 0:
            return mu
        if mu.size != self.d:
            raise DomainError(f"expected {self.d} parameters, got {mu.size}")
        return mu

    def at(self, mu):
        """Freeze the parameter: returns a :class:`MatrixPolynomial` in t."""
        mu = self._mu(mu)
        deg = max(
            (p[0] for row in self.entries for poly in row for p, _ in poly.terms), default=0
        )
        coeffs = np.zeros((deg + 1, self.n, self.n), dtype=complex)
        for i in range(self.n):
            for j in range(self.n):
                c = self.entries[i][j].coefficients_in_t(mu)
                coeffs[: c.size, i, j] = c
        # exact Hermitian symmetry of the collapsed coefficients
        coeffs = 0.5 * (coeffs + np.conj(np.swapaxes(coeffs, 1, 2)))
        return MatrixPolynomial(coeffs, self.domain)

    def to_config(self):
        """Inline config dict (the schema accepted by :func:`family_from_config`)."""
        entries = []
        for i in range(self.n):
            for j in range(i, self.n):
                poly = self.entries[i][j]
                if not poly.terms:
                    continue
                entries.append(
                    {
                        "i": i,
                        "j": j,
                        "monomials": [
                            {"powers": list(p), "coeff_re": c.real, "coeff_im": c.imag}
                            for p, c in poly.terms
                        ],
                    }
                )
        return {"n": self.n, "d": self.d, "domain": list(self.domain), "entries": entries}


class MatrixPolynomial:
    """A_mu(t) at fixed mu, stored as coefficient matrices of powers of t."""

    def __init__(self, coeffs, domain):
        self.coeffs = coeffs
        self.domain = domain
        self.n = coeffs.shape[1]
        k = np.arange(1, coeffs.shape[0])
        self._dcoeffs = coeffs[1:] * k[:, None, None] if k.size else np.zeros_like(coeffs[:1])

    @staticmethod
    def _horner(coeffs, t):
        t = np.asarray(t, dtype=float)
        out = np.broadcast_to(coeffs[-1], t.shape + coeffs.shape[1:]).astype(complex)
        for c in coeffs[-2::-1]:
            out = out * t[..., None, None] + c
        return out

    def __call__(self, t):
        """Matrix at time(s) ``t``; shape ``t.shape + (n, n)``."""
        return self._horner(self.coeffs, t)

    def derivative(self, t):
        """dA/dt at time(s) ``t``, differentiated analytically."""
        return self._horner(self._dcoeffs, t)

    def spectrum(self, t):
        """Ascending eigenvalues and eigenvectors at time(s) ``t``."""
        return np.linalg.eigh(self(t))


def evaluate(f: HamiltonianFamily, t: float, mu) -> np.ndarray:
    """Exact evaluation of A_mu(t) for t in the family's domain."""
    a, b = f.domain
    if not a <= t <= b:
        raise DomainError(f"t = {t} outside domain [{a}, {b}]")
    return f.at(mu)(float(t))


def derivative(f: HamiltonianFamily, t: float, mu) -> np.ndarray:
    a, b = f.domain
    if not a <= t <= b:
        raise DomainError(f"t = {t} outside domain [{a}, {b}]")
    return f.at(mu).derivative(float(t))


def _poly(*terms):
    return Polynomial.from_dict(dict(terms))


def builtin_family(name: str) -> HamiltonianFamily:
    """Built-in families.

    ``paper_example``
        [[t^2, mu], [mu, 2 - t^2]] on [-3, 3].  Exact crossings at t = +-1.
    ``linear_lz``
        [[t, mu], [mu, -t]] on [-5, 5].  One crossing at t = 0.
    ``three_level_chain``
        [[t - 1, mu, 0], [mu, 0, mu], [0, mu, t + 1]] on [-4, 4].  The middle
        level crosses the upper pair member at t = -1 (branches 1, 2) and the
        lower one at t = +1 (branches 0, 1); levels 0 and 2 are parallel.
    """
    if name == "paper_example":
        entries = {
            (0, 0): _poly(((2, 0), 1.0)),
            (0, 1): _poly(((0, 1), 1.0)),
            (1, 1): _poly(((0, 0), 2.0), ((2, 0), -1.0)),
        }
        return HamiltonianFamily(2, 1, (-3.0, 3.0), entries, name)
    if name == "linear_lz":
        entries = {
            (0, 0): _poly(((1, 0), 1.0)),
            (0, 1): _poly(((0, 1), 1.0)),
            (1, 1): _poly(((1, 0), -1.0)),
        }
        return HamiltonianFamily(2, 1, (-5.0, 5.0), entries, name)
    if name == "three_level_chain":
        entries = {
            (0, 0): _poly(((1, 0), 1.0), ((0, 0), -1.0)),
            (0, 1): _poly(((0, 1), 1.0)),
            (1, 2): _poly(((0, 1), 1.0)),
            (2, 2): _poly(((1, 0), 1.0), ((0, 0), 1.0)),
        }
        return HamiltonianFamily(3, 1, (-4.0, 4.0), entries, name)
    raise ConfigError(f"unknown built-in family {name!r}")


BUILTIN_NAMES = ("paper_example", "linear_lz", "three_level_chain")


def family_from_config(spec) -> HamiltonianFamily:
    """Build a family from a built-in name or an inline polynomial spec.

    Inline schema::

        {n, d, domain: [a, b],
         entries: [{i, j, monomials: [{powers: [p_t, p_mu1, ...],
                                       coeff_re, coeff_im}]}]}

    Entries not listed are zero, or the conjugate of their transpose when that
    one is listed.
    """
    if isinstance(spec, str):
        return builtin_family(spec)
    if not isinstance(spec, Mapping):
        raise ConfigError("family must be a built-in name or a mapping")
    try:
        n = int(spec["n"])
        d = int(spec["d"])
        domain = tuple(float(x) for x in spec["domain"])
        raw: Sequence = spec["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed inline family: {exc}") from exc
    if len(domain) != 2:
        raise ConfigError("domain must have two endpoints")
    entries = {}
    for item in raw:
        try:
            key = (int(item["i"]), int(item["j"]))
            terms = {}
            for mono in item["monomials"]:
                powers = tuple(int(p) for p in mono["powers"])
                c = complex(float(mono.get("coeff_re", 0.0)), float(mono.get("coeff_im", 0.0)))
                terms[powers] = terms.get(powers, 0) + c
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed entry {item!r}: {exc}") from exc
        if key in entries:
            raise ConfigError(f"entry {key} listed twice")
        entries[key] = Polynomial.from_dict(terms)
    return HamiltonianFamily(n, d, domain, entries, spec.get("name"))
