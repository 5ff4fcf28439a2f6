"""
Fourier Analysis of Covariant Kernels
A covariant kernel on a finite group G is a function of one element,
l(g) = K(g, 1) = |⟨ψ|D_g†|ψ⟩|² = ⟨ψ,ψ̄| D̃_g |ψ,ψ̄⟩ with D̃_g = D_g ⊗ D̄_g.

- irrep projectors Π_J = (d_J/|G|) Σ_g χ̄_J(g) D̃_g on the doubled space
- Fourier coefficients l̂(J) = (|G|/d_J) Π_J |ψ,ψ̄⟩⟨ψ,ψ̄| Π_J
- inversion l(g) = (1/|G|) Σ_J d_J tr[l̂(J) D̃_{g⁻¹}]

Groups are given by explicit multiplication and character tables plus a
unitary representation; Z_m and Z*_p ship built in (regular representation).
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from models.errors import InvalidInputError, NumericalError
from services.group_service import ZpStarGroup, dlog_brute, is_prime, multiplicative_order

logger = logging.getLogger(__name__)

MAX_ORDER = 64
MAX_DOUBLED_DIM = 2 ** 12
TABLE_TOL = 1e-9


@dataclass
class FiniteGroupModel:
    name: str
    elements: list                 # labels, index 0 is the identity
    table: np.ndarray              # table[a, b] = index of a·b
    characters: np.ndarray         # (irreps, |G|) complex
    dims: np.ndarray               # irrep dimensions d_J
    rep: np.ndarray                # (|G|, d, d) unitary D_g
    generator: Optional[int] = None
    inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=int)
        self.characters = np.asarray(self.characters, dtype=np.complex128)
        self.dims = np.asarray(self.dims, dtype=int)
        self.rep = np.asarray(self.rep, dtype=np.complex128)
        self.validate()
        self.inverse = np.argmax(self.table == 0, axis=1)

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def rep_dim(self) -> int:
        return self.rep.shape[1]

    def validate(self):
        """Group axioms, homomorphism property of D, character orthogonality."""
        n = self.order
        if n < 1 or n > MAX_ORDER:
            raise InvalidInputError(f"group order {n} outside [1, {MAX_ORDER}]")
        if self.table.shape != (n, n) or self.table.min() < 0 or self.table.max() >= n:
            raise InvalidInputError(f"multiplication table must be {n}x{n} with entries in [0, {n})")
        idx = np.arange(n)
        if not (np.array_equal(self.table[0], idx) and np.array_equal(self.table[:, 0], idx)):
            raise InvalidInputError("element 0 is not the identity")
        for row in (self.table, self.table.T):
            if any(np.unique(r).size != n for r in row):
                raise InvalidInputError("multiplication table is not a Latin square")
        # (ab)c == a(bc) for all triples
        left = self.table[self.table[:, :, None], idx[None, None, :]]
        right = self.table[idx[:, None, None], self.table[None, :, :]]
        if not np.array_equal(left, right):
            raise InvalidInputError("multiplication is not associative")

        d = self.rep.shape[1]
        if self.rep.shape != (n, d, d):
            raise InvalidInputError(f"representation must have shape ({n}, d, d), got {self.rep.shape}")
        if d * d > MAX_DOUBLED_DIM:
            raise NumericalError(f"doubled representation dimension {d * d} exceeds {MAX_DOUBLED_DIM}")
        products = np.einsum("aij,bjk->abik", self.rep, self.rep)
        if not np.allclose(products, self.rep[self.table], atol=TABLE_TOL):
            raise InvalidInputError("representation is not a homomorphism")

        if self.characters.shape != (self.dims.size, n):
            raise InvalidInputError(f"character table must be ({self.dims.size}, {n})")
        if int((self.dims ** 2).sum()) != n:
            raise InvalidInputError(f"irrep dimensions do not satisfy Σ d_J² = {n}")
        if not np.allclose(self.characters[:, 0], self.dims, atol=TABLE_TOL):
            raise InvalidInputError("χ_J(identity) must equal d_J")
        gram = self.characters @ self.characters.conj().T / n
        if not np.allclose(gram, np.eye(self.dims.size), atol=TABLE_TOL):
            raise InvalidInputError("characters are not orthonormal")

    def index(self, label) -> int:
        try:
            return self.elements.index(label)
        except ValueError:
            raise InvalidInputError(f"{label!r} is not an element of {self.name}") from None

    def doubled(self, a: int) -> np.ndarray:
        D = self.rep[a]
        return np.kron(D, D.conj())


# ── Built-in Groups ──────────────────────────────────────────

def _regular_rep(table: np.ndarray) -> np.ndarray:
    """D_a|b⟩ = |ab⟩."""
    n = table.shape[0]
    rep = np.zeros((n, n, n))
    for a in range(n):
        rep[a, table[a], np.arange(n)] = 1.0
    return rep


def cyclic_group(m: int) -> FiniteGroupModel:
    if m < 1:
        raise InvalidInputError(f"Z_m needs m >= 1, got {m}")
    a = np.arange(m)
    table = (a[:, None] + a[None, :]) % m
    characters = np.exp(2j * np.pi * np.outer(a, a) / m)
    return FiniteGroupModel(
        name=f"Z{m}",
        elements=list(range(m)),
        table=table,
        characters=characters,
        dims=np.ones(m, dtype=int),
        rep=_regular_rep(table),
        generator=1 % m,
    )


def smallest_generator(p: int) -> int:
    for g in range(2, p):
        if multiplicative_order(g, p) == p - 1:
            return g
    return 1


def zp_star_group(p: int, g: Optional[int] = None) -> FiniteGroupModel:
    """Z*_p with elements ordered as 1, 2, …, p−1; characters via DLOG_g."""
    if not is_prime(p):
        raise InvalidInputError(f"{p} is not prime")
    g = smallest_generator(p) if g is None else g
    if p > 2:
        grp = ZpStarGroup(p, g, 0)
        logs = np.array([dlog_brute(grp, x) for x in range(1, p)])
    else:
        logs = np.zeros(1, dtype=int)
    elems = np.arange(1, p)
    table = (np.outer(elems, elems) % p) - 1
    characters = np.exp(2j * np.pi * np.outer(np.arange(p - 1), logs) / (p - 1))
    return FiniteGroupModel(
        name=f"Z*{p}",
        elements=elems.tolist(),
        table=table,
        characters=characters,
        dims=np.ones(p - 1, dtype=int),
        rep=_regular_rep(table),
        generator=elems.tolist().index(g % p),
    )


_GROUP_RE = re.compile(r"^Z(?P<star>\*|star)?(?P<n>\d+)(?::(?P<g>\d+))?$")


def build_group(spec: str) -> FiniteGroupModel:
    """`Z5`, `Z*7`, `Zstar7` or `Z*7:3` (explicit generator)."""
    match = _GROUP_RE.match(spec.strip())
    if match is None:
        raise InvalidInputError(f"unsupported group {spec!r}; expected Z<m> or Z*<p>[:g]")
    n = int(match["n"])
    if match["star"]:
        return zp_star_group(n, int(match["g"]) if match["g"] else None)
    if match["g"]:
        raise InvalidInputError("a generator can only be given for Z*<p>")
    return cyclic_group(n)


# ── Fiducial States ──────────────────────────────────────────

def uniform_fiducial(gm: FiniteGroupModel) -> np.ndarray:
    return np.full(gm.rep_dim, gm.rep_dim ** -0.5, dtype=np.complex128)


def basis_fiducial(gm: FiniteGroupModel) -> np.ndarray:
    psi = np.zeros(gm.rep_dim, dtype=np.complex128)
    psi[0] = 1.0
    return psi


def subset_fiducial(gm: FiniteGroupModel, k: int) -> np.ndarray:
    """2^{-k/2} Σ_{v<2^k} |gen^v⟩ in the regular representation."""
    if gm.generator is None:
        raise InvalidInputError(f"{gm.name} has no designated generator")
    if k < 0 or 2 ** k >= gm.order:
        raise InvalidInputError(f"need 2^k < |G| = {gm.order}, got k={k}")
    psi = np.zeros(gm.rep_dim, dtype=np.complex128)
    current = 0
    for _ in range(2 ** k):
        psi[current] = 1.0
        current = gm.table[gm.generator, current]
    return psi / np.linalg.norm(psi)


def build_fiducial(gm: FiniteGroupModel, spec: str) -> np.ndarray:
    """`uniform`, `basis`, `subset` or `subset:k`."""
    name, _, arg = spec.strip().partition(":")
    if name == "uniform" and not arg:
        return uniform_fiducial(gm)
    if name == "basis" and not arg:
        return basis_fiducial(gm)
    if name == "subset":
        try:
            k = int(arg) if arg else 1
        except ValueError:
            raise InvalidInputError(f"subset size must be an integer, got {arg!r}") from None
        return subset_fiducial(gm, k)
    raise InvalidInputError(f"unsupported fiducial {spec!r}; expected uniform, basis or subset[:k]")


def _check_fiducial(gm: FiniteGroupModel, psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.shape != (gm.rep_dim,):
        raise InvalidInputError(f"fiducial has shape {psi.shape}, expected ({gm.rep_dim},)")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
        raise InvalidInputError("fiducial must be normalized")
    return psi


# ── Projectors and Coefficients ──────────────────────────────

def irrep_projector(gm: FiniteGroupModel, J: int) -> np.ndarray:
    if not 0 <= J < gm.dims.size:
        raise InvalidInputError(f"irrep index {J} outside [0, {gm.dims.size})")
    dim = gm.rep_dim ** 2
    if dim > MAX_DOUBLED_DIM:
        raise NumericalError(f"doubled representation dimension {dim} exceeds {MAX_DOUBLED_DIM}")
    proj = np.zeros((dim, dim), dtype=np.complex128)
    for a in range(gm.order):
        proj += np.conj(gm.characters[J, a]) * gm.doubled(a)
    return proj * gm.dims[J] / gm.order


def kernel_fourier_coefficients(gm: FiniteGroupModel, psi) -> dict[int, np.ndarray]:
    psi = _check_fiducial(gm, psi)
    v = np.kron(psi, psi.conj())
    coeffs = {}
    for J in range(gm.dims.size):
        w = irrep_projector(gm, J) @ v
        coeffs[J] = (gm.order / gm.dims[J]) * np.outer(w, w.conj())
    return coeffs


def fourier_invert(coeffs: dict[int, np.ndarray], gm: FiniteGroupModel) -> np.ndarray:
    """l(g) for every element, in element order."""
    missing = set(range(gm.dims.size)) - set(coeffs)
    if missing:
        raise InvalidInputError(f"missing Fourier coefficients for irreps {sorted(missing)}")
    values = np.zeros(gm.order, dtype=np.complex128)
    for a in range(gm.order):
        D_inv = gm.doubled(gm.inverse[a])
        for J, coef in coeffs.items():
            # tr[A B] without forming the product
            values[a] += gm.dims[J] * np.sum(coef * D_inv.T)
    values /= gm.order
    if np.abs(values.imag).max() > 1e-9:
        logger.warning("Inverse transform has imaginary residue %.3e", np.abs(values.imag).max())
    return values.real


def kernel_function(gm: FiniteGroupModel, psi) -> np.ndarray:
    """Direct l(g) = |⟨ψ|D_g†|ψ⟩|²."""
    psi = _check_fiducial(gm, psi)
    amps = np.einsum("i,aji,j->a", psi.conj(), gm.rep.conj(), psi)
    return np.abs(amps) ** 2


def direct_fourier_transform(gm: FiniteGroupModel, values) -> np.ndarray:
    """f̂(J) = Σ_g f(g) χ̄_J(g); one-dimensional irreps only."""
    values = np.asarray(values)
    if values.shape != (gm.order,):
        raise InvalidInputError(f"expected {gm.order} function values, got {values.shape}")
    if np.any(gm.dims != 1):
        raise InvalidInputError(f"{gm.name} has irreps of dimension > 1")
    return gm.characters.conj() @ values


def fourier_check(gm: FiniteGroupModel, psi) -> dict:
    """Round-trip error of the inversion and projector completeness on the doubled space."""
    direct = kernel_function(gm, psi)
    coeffs = kernel_fourier_coefficients(gm, psi)
    reconstructed = fourier_invert(coeffs, gm)
    dim = gm.rep_dim ** 2
    completeness = sum(irrep_projector(gm, J) for J in range(gm.dims.size)) - np.eye(dim)
    report = {
        "group": gm.name,
        "order": gm.order,
        "elements": list(gm.elements),
        "direct": direct.tolist(),
        "reconstructed": reconstructed.tolist(),
        "max_error": float(np.abs(direct - reconstructed).max()),
        "completeness_error": float(np.abs(completeness).max()),
        "coefficient_traces": [float(np.trace(coeffs[J]).real) for J in range(gm.dims.size)],
    }
    logger.info(
        "Fourier check on %s: max error %.3e, completeness %.3e",
        gm.name, report["max_error"], report["completeness_error"],
    )
    return report
