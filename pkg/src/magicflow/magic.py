"""Mean states, magic classes and their three characterizations.

A state's mean state keeps the unit-modulus entries of its characteristic
function.  Their labels form an isotropic group G of size d^{n-k}; k is the
magic class.  It is measured three ways and the three must agree:

* group size:      |G| = d^{n-k}
* symmetry count:  #{a : [M, w(a)] = 0} = d^{n+k}
* entropy:         S(M) = k log d
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .clifford import apply, canonical_form, canonicalize
from .convolution import (QUBIT_MARKER, ConvParams, FlowTrace, default_params, iterate)
from .errors import InvalidState, MeanStateError, VerdictDisagreement
from .operators import (CharFunction, DensityOperator, char_function, inverse_char,
                        von_neumann_entropy, weyl_matrix)
from .phase_space import (IsotropicSubgroup, PhasePoint, centralizer_size, is_isotropic,
                          symplectic_reduce)

DEFAULT_TOL = 1e-9
ENTROPY_RESIDUAL_TOL = 1e-4
COMMUTATOR_TOL = 1e-8
PURITY_TOL = 1e-8
REPORT_FORMAT_VERSION = 1
# dense commutator counting costs ~d^{5n}
DENSE_SYMMETRY_LIMIT = 5 * 10**8
DENSE_MEAN_LIMIT = 4096


@dataclass
class MeanState:
    group: IsotropicSubgroup
    n: int
    d: int
    table: CharFunction | None = None
    _dense: np.ndarray | None = field(default=None, repr=False)

    @property
    def group_size(self) -> int:
        return self.group.size

    def dense(self) -> DensityOperator:
        """d^{-n} sum_{x in G} Xi(x) w(x), from the table when present."""
        if self._dense is None:
            if self.table is not None:
                self._dense = inverse_char(self.table).matrix
            else:
                self._dense = dense_from_generators(self.group)
        return DensityOperator(self._dense, self.n, self.d, validate=False)

    @classmethod
    def from_group(cls, group: IsotropicSubgroup) -> "MeanState":
        return cls(group, group.n, group.d)


def dense_from_generators(group: IsotropicSubgroup) -> np.ndarray:
    """d^{-n} prod_i sum_j (c_i w(g_i))^j."""
    n, d = group.n, group.d
    D = d**n
    out = np.eye(D, dtype=complex)
    for g, c in zip(group.generators, group.phases):
        W = c * weyl_matrix(g)
        acc, power = np.zeros((D, D), dtype=complex), np.eye(D, dtype=complex)
        for _ in range(d):
            acc += power
            power = power @ W
        out = out @ acc
    return out / D


def mean_state(xi: CharFunction, tol: float = DEFAULT_TOL) -> MeanState:
    """Fixed point of the flow: the entries of ``xi`` with |Xi| >= 1 - tol."""
    if not 0 < tol < 0.5:
        raise ValueError("tol must lie in (0, 0.5)")
    n, d = xi.n, xi.d
    mask = np.abs(xi.values) >= 1 - tol
    count = int(mask.sum())
    if count > d**n:
        raise MeanStateError(f"{count} unit-modulus entries exceed the maximum group size {d**n}")
    points = [PhasePoint.from_index(int(P), int(Q), n, d) for P, Q in np.argwhere(mask)]
    gens = symplectic_reduce(points)
    if count != d ** len(gens):
        raise MeanStateError(f"unit-modulus support of size {count} is not closed under addition")
    if not is_isotropic(gens):
        raise MeanStateError("unit-modulus support is not isotropic")
    phases = tuple(xi[g] for g in gens)
    group = IsotropicSubgroup(tuple(gens), phases, n, d, _checked=False)
    table = CharFunction(np.where(mask, xi.values, 0), n, d)
    return MeanState(group, n, d, table)


def class_index(M: MeanState) -> int:
    """k with |G| = d^{n-k}."""
    return M.n - M.group.rank


def _log_exact(value: int, base: int) -> int:
    k = 0
    while value % base == 0 and value > 1:
        value //= base
        k += 1
    if value != 1:
        raise ValueError(f"not a power of {base}")
    return k


def symmetry_count_dense(M: MeanState, tol: float = COMMUTATOR_TOL) -> int:
    """Brute force: #{a in V^n : ||[M, w(a)]|| < tol}."""
    rho = M.dense().matrix
    n, d = M.n, M.d
    D = d**n
    count = 0
    for P in range(D):
        for Q in range(D):
            W = weyl_matrix(PhasePoint.from_index(P, Q, n, d))
            if np.linalg.norm(rho @ W - W @ rho) < tol:
                count += 1
    return count


def dense_symmetry_feasible(n: int, d: int) -> bool:
    return d ** (5 * n) <= DENSE_SYMMETRY_LIMIT


def symmetry_count(M: MeanState, check_dense: bool | None = None) -> int:
    """Number of Weyl operators commuting with M, from the generators.

    Counts a with <a, g> = 0 for all generators g.  With ``check_dense``
    (default: whenever it is cheap) the brute-force commutator count must
    agree, otherwise :class:`VerdictDisagreement` is raised.
    """
    fast = centralizer_size(M.group.generators, M.n, M.d)
    if check_dense is None:
        check_dense = dense_symmetry_feasible(M.n, M.d)
    if check_dense:
        slow = symmetry_count_dense(M)
        if slow != fast:
            raise VerdictDisagreement(f"symplectic count {fast} != commutator count {slow}")
    return fast


def symmetry_breakdown(M: MeanState) -> dict[str, int]:
    """Commuting Weyl operators: total, literally outside G, and per coset of G."""
    total = centralizer_size(M.group.generators, M.n, M.d)
    return {
        "commuting": total,
        "commuting_outside_group": total - M.group_size,
        "commuting_cosets": total // M.group_size,
    }


def entropy_class(M: MeanState) -> int:
    """k from S(M) = k log d."""
    S = von_neumann_entropy(M.dense())
    ratio = S / math.log(M.d)
    k = int(round(ratio))
    if abs(ratio - k) > ENTROPY_RESIDUAL_TOL:
        raise MeanStateError(f"S/log d = {ratio:.6f} is not an integer")
    return k


def magic_gap(xi: CharFunction, tol: float = DEFAULT_TOL) -> float:
    """1 - max |Xi(x)| over the support where |Xi(x)| != 1; 0 if that set is empty."""
    mag = np.abs(xi.values)
    sub = mag[(mag > tol) & (mag < 1 - tol)]
    if sub.size == 0:
        return 0.0
    return float(1 - sub.max())


def entropy_bound(L: int, MG: float, S_M: float) -> float:
    """log[1 + (1 - MG)^{2^{L+1} - 2} e^{S_M}]."""
    if L < 1:
        raise ValueError("L must be at least 1")
    if not 0 <= MG <= 1:
        raise ValueError("MG must lie in [0, 1]")
    if S_M < 0:
        raise ValueError("S_M must be nonnegative")
    if MG == 1:
        return 0.0
    expo = 2 ** (L + 1) - 2
    return float(np.logaddexp(0.0, expo * math.log1p(-MG) + S_M))


def _xlog_excess(u: np.ndarray) -> np.ndarray:
    """(1 + u) log(1 + u) - u, accurate for tiny u and equal to 1 at u = -1."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = np.abs(u) < 1e-3
    us = u[small]
    out[small] = us**2 / 2 - us**3 / 6 + us**4 / 12 - us**5 / 20
    ul = np.maximum(u[~small], -1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        big = (1 + ul) * np.log1p(ul) - ul
    out[~small] = np.where(ul > -1, big, 1.0)
    return out


def entropy_deficit(xi: CharFunction, tol: float = DEFAULT_TOL) -> float:
    """S(M) - S(rho) for a state whose support of M is already the unit entries.

    Computed without cancellation: write rho = M + Delta, where Delta holds the
    entries off the group.  Delta is traceless, vanishes outside the range of M
    (of rank r, flat spectrum 1/r), so with mu the eigenvalues of Delta
    compressed to that range, S(M) - S(rho) = sum_mu f(r mu) / r with
    f(u) = (1 + u) log(1 + u) - u.  Subtracting the vanishing linear term
    avoids the roundoff floor of a plain eigenvalue difference.
    """
    n, d = xi.n, xi.d
    mask = np.abs(xi.values) >= 1 - tol
    M = inverse_char(CharFunction(np.where(mask, xi.values, 0), n, d)).matrix
    delta = inverse_char(CharFunction(np.where(mask, 0, xi.values), n, d)).matrix
    w, v = np.linalg.eigh((M + M.conj().T) / 2)
    B = v[:, w > 0.5 * w.max()]
    r = B.shape[1]
    sub = B.conj().T @ delta @ B
    mu = np.linalg.eigvalsh((sub + sub.conj().T) / 2)
    return float(np.sum(_xlog_excess(r * mu)) / r)


def required_iterations(n: int, d: int, MG: float, max_L: int = 256) -> int:
    """Smallest L with entropy_bound(L, MG, n log d) < log(d) / 2."""
    if MG <= 0:
        raise ValueError("MG = 0: the entropy criterion cannot separate classes")
    target = 0.5 * math.log(d)
    S = n * math.log(d)
    for L in range(1, max_L + 1):
        if entropy_bound(L, MG, S) < target:
            return L
    raise RuntimeError(f"no L <= {max_L} satisfies the bound")


@dataclass
class ClassifyOptions:
    tol: float = DEFAULT_TOL
    flow: bool = False
    L: int | None = None
    params: ConvParams | None = None
    mode: str = "auto"
    check_dense: bool | None = None


@dataclass
class MagicClassReport:
    n: int
    d: int
    k: int
    group_size: int
    symmetry_count: int
    symmetry_outside_group: int
    symmetry_cosets: int
    entropy: float
    magic_gap: float
    iterations_used: int
    params: str | None
    pure: bool
    verdicts: dict[str, bool | None]
    class_by: dict[str, int]
    generators: list[list[list[int]]]
    phases: list[list[float]]
    trace: FlowTrace | None = field(default=None, repr=False)

    @property
    def agree(self) -> bool:
        return all(v is not False for v in self.verdicts.values())

    def to_dict(self) -> dict[str, Any]:
        out = {
            "format_version": REPORT_FORMAT_VERSION,
            "n": self.n, "d": self.d, "k": self.k,
            "group_size": self.group_size,
            "symmetry_count": self.symmetry_count,
            "symmetry_outside_group": self.symmetry_outside_group,
            "symmetry_cosets": self.symmetry_cosets,
            "entropy": self.entropy,
            "magic_gap": self.magic_gap,
            "iterations_used": self.iterations_used,
            "params": self.params,
            "pure": self.pure,
            "verdicts": self.verdicts,
            "class_by": self.class_by,
            "generators": self.generators,
            "phases": self.phases,
        }
        if not self.pure:
            out["note"] = "class semantics defined for pure states"
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def summary(self) -> str:
        status = "agree" if self.agree else "DISAGREE"
        flag = "" if self.pure else " [mixed input]"
        return (f"n={self.n} d={self.d} k={self.k} |G|={self.group_size} "
                f"symmetries={self.symmetry_count} S={self.entropy:.6f} "
                f"MG={self.magic_gap:.6f} L={self.iterations_used} verdicts={status}{flag}")


def _params_label(d: int, params: ConvParams | None) -> str | None:
    if d == 2:
        return QUBIT_MARKER
    if params is not None:
        return str(params)
    try:
        return str(default_params(d))
    except ValueError:
        return None


def classify(rho: DensityOperator, options: ClassifyOptions | None = None) -> MagicClassReport:
    """Class index k of ``rho`` measured three ways; raises if they disagree."""
    opts = options or ClassifyOptions()
    if not rho.validate:
        rho.check()
    n, d = rho.n, rho.d
    xi = char_function(rho)
    mg = magic_gap(xi, opts.tol)
    trace = None
    L = 0
    if opts.flow:
        L = opts.L if opts.L is not None else (required_iterations(n, d, mg) if mg > 0 else 1)
        rho_L, trace = iterate(rho, opts.params, L, opts.mode, opts.tol)
        M = mean_state(char_function(rho_L), mg / 2 if mg > 0 else opts.tol)
    else:
        M = mean_state(xi, opts.tol)

    k_group = class_index(M)
    sym = symmetry_count(M, check_dense=False)
    k_sym = _log_exact(sym, d) - n
    dense_ok = None
    check_dense = dense_symmetry_feasible(n, d) if opts.check_dense is None else opts.check_dense
    if check_dense:
        dense_ok = symmetry_count_dense(M) == sym
    S = von_neumann_entropy(M.dense())
    ratio = S / math.log(d)
    k_ent = int(round(ratio)) if abs(ratio - round(ratio)) <= ENTROPY_RESIDUAL_TOL else -1
    breakdown = symmetry_breakdown(M)
    report = MagicClassReport(
        n=n, d=d, k=k_group,
        group_size=M.group_size,
        symmetry_count=sym,
        symmetry_outside_group=breakdown["commuting_outside_group"],
        symmetry_cosets=breakdown["commuting_cosets"],
        entropy=S,
        magic_gap=mg,
        iterations_used=L,
        params=_params_label(d, opts.params),
        pure=rho.purity() > 1 - PURITY_TOL,
        verdicts={
            "symmetry_matches_group": k_sym == k_group,
            "entropy_matches_group": k_ent == k_group,
            "dense_symmetry_matches": dense_ok,
        },
        class_by={"group_size": k_group, "symmetry_count": k_sym, "entropy": k_ent},
        generators=[[list(g.p), list(g.q)] for g in M.group.generators],
        phases=[[float(c.real), float(c.imag)] for c in M.group.phases],
        trace=trace,
    )
    if not report.agree:
        raise VerdictDisagreement(f"class characterizations disagree: {report.class_by}", report)
    return report


def canonicalized_mean_state(M: MeanState) -> np.ndarray:
    """U M U^dagger for the canonicalizing Clifford of M's group."""
    U = canonicalize(M.group)
    return apply(U, M.dense()).matrix


def same_cg_class(psi: DensityOperator, phi: DensityOperator, tol: float = DEFAULT_TOL) -> bool:
    """Whether two pure states have Clifford-equivalent mean states."""
    if (psi.n, psi.d) != (phi.n, phi.d):
        raise InvalidState("states act on different systems")
    for st in (psi, phi):
        if st.purity() <= 1 - PURITY_TOL:
            raise InvalidState("class semantics are defined for pure states only")
    Ma, Mb = mean_state(char_function(psi), tol), mean_state(char_function(phi), tol)
    ka, kb = class_index(Ma), class_index(Mb)
    if ka != kb:
        return False
    if psi.d**psi.n <= DENSE_MEAN_LIMIT:
        ca, cb = canonicalized_mean_state(Ma), canonicalized_mean_state(Mb)
        ref = canonical_form(psi.n, psi.d, ka)
        if max(np.abs(ca - ref).max(), np.abs(cb - ref).max()) > 1e-9:
            raise VerdictDisagreement("canonicalized mean states differ despite equal class index")
    return True
