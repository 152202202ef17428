"""
APA Algorithms per FastMM.

Gestisce:
- LambdaPoly: polinomi a coefficienti interi nel parametro formale lambda
- APAAlgorithm: decomposizione di border rank con coefficienti polinomiali
- apa_aggregate(m,k,n): aggregazione con lambda, border rank mkn + mk + kn
- Valutazione numerica (float64) con errore O(lambda)
- Recupero esatto per interpolazione su d+1 nodi
- Formula dell'esponente e profilo della ricorsione
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple
import math

import numpy as np
from loguru import logger

from app.config import settings
from app.models.errors import DimensionError, RangeError, UndefinedExponentError, VerificationError
from app.services.bilinear_engine import (
    TargetTensor,
    TrilinearDecomposition,
    Triple,
    VerificationResult,
)
from app.services.aggregation import two_problem_target
from app.services.matrix_core import Matrix, OpCounter, mm_naive


# ============================================================================
# LAMBDA POLYNOMIALS
# ============================================================================

@dataclass(frozen=True)
class LambdaPoly:
    """c0 + c1 lambda + ... + cd lambda^d with integer coefficients, trailing zeros stripped."""

    coeffs: Tuple[int, ...] = ()

    def __post_init__(self):
        coeffs = [int(c) for c in self.coeffs]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coeffs", tuple(coeffs))

    @classmethod
    def constant(cls, c: int) -> "LambdaPoly":
        return cls((c,))

    @classmethod
    def monomial(cls, c: int, power: int) -> "LambdaPoly":
        return cls((0,) * power + (c,))

    @property
    def degree(self) -> int:
        """-1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def low_degree(self) -> int:
        """Smallest power with a nonzero coefficient (-1 for zero)."""
        for power, c in enumerate(self.coeffs):
            if c:
                return power
        return -1

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, power: int) -> int:
        return self.coeffs[power] if 0 <= power < len(self.coeffs) else 0

    def __add__(self, other: "LambdaPoly") -> "LambdaPoly":
        size = max(len(self.coeffs), len(other.coeffs))
        return LambdaPoly(tuple(self.coefficient(p) + other.coefficient(p) for p in range(size)))

    def __neg__(self) -> "LambdaPoly":
        return LambdaPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other: "LambdaPoly") -> "LambdaPoly":
        return self + (-other)

    def __mul__(self, other: "LambdaPoly") -> "LambdaPoly":
        if self.is_zero() or other.is_zero():
            return LambdaPoly()
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for p, x in enumerate(self.coeffs):
            if x:
                for s, y in enumerate(other.coeffs):
                    out[p + s] += x * y
        return LambdaPoly(tuple(out))

    def __call__(self, lam: Any) -> Any:
        """Horner evaluation; works for int, Fraction and float lambda."""
        acc = lam * 0
        for c in reversed(self.coeffs):
            acc = acc * lam + c
        return acc

    def __str__(self) -> str:
        return " ".join(str(c) for c in self.coeffs) if self.coeffs else "0"


ZERO = LambdaPoly()
ONE = LambdaPoly.constant(1)


def lam(power: int, c: int = 1) -> LambdaPoly:
    return LambdaPoly.monomial(c, power)


PolyForm = Tuple[Tuple[int, LambdaPoly], ...]
PolyTerm = Tuple[PolyForm, PolyForm, PolyForm]


def poly_form(values: Dict[int, LambdaPoly]) -> PolyForm:
    return tuple((i, p) for i, p in sorted(values.items()) if not p.is_zero())


# ============================================================================
# APA ALGORITHM
# ============================================================================

@dataclass(frozen=True)
class APAAlgorithm:
    """
    sum_q l_q(A, lambda) l'_q(B, lambda) l''_q(D, lambda)
        = lambda^scale * target + O(lambda^(scale+1)).

    `degree` is the lambda-degree left after dividing by lambda^scale; the
    exact product is recovered from degree + 1 evaluations.
    """

    name: str
    target: TargetTensor = field(repr=False)
    term_list: Tuple[PolyTerm, ...] = field(repr=False)
    scale: int = 0
    degree: int = 0

    @property
    def border_rank(self) -> int:
        return len(self.term_list)

    @property
    def U(self) -> List[List[LambdaPoly]]:
        dim_a = self.target.dims[0]
        return [_dense_poly(f1, dim_a) for f1, _, _ in self.term_list]

    @property
    def V(self) -> List[List[LambdaPoly]]:
        dim_b = self.target.dims[1]
        return [_dense_poly(f2, dim_b) for _, f2, _ in self.term_list]

    @property
    def W(self) -> List[List[LambdaPoly]]:
        """Rows indexed by D-side variable (one output per d_hi / w_ij ...)."""
        dim_c = self.target.dims[2]
        cols = [_dense_poly(f3, dim_c) for _, _, f3 in self.term_list]
        return [[col[gamma] for col in cols] for gamma in range(dim_c)]

    @classmethod
    def from_decomposition(cls, T: TrilinearDecomposition) -> "APAAlgorithm":
        """Exact decomposition with integer coefficients embedded as degree 0."""
        terms = []
        for term in T.term_list:
            forms = []
            for form in term:
                if any(c.denominator != 1 for _, c in form):
                    raise DimensionError(f"{T.name} has non-integer coefficients")
                forms.append(tuple((i, LambdaPoly.constant(int(c))) for i, c in form))
            terms.append(tuple(forms))
        return cls(T.name, T.target, tuple(terms), 0, 0)

    def evaluate(self, value: Any) -> List[Tuple[Tuple[int, Any], ...]]:
        """Terms with every coefficient evaluated at lambda = value."""
        return [
            tuple(tuple((i, p(value)) for i, p in form) for form in term)
            for term in self.term_list
        ]


def _dense_poly(form: PolyForm, size: int) -> List[LambdaPoly]:
    row = [ZERO] * size
    for index, p in form:
        row[index] = p
    return row


# ============================================================================
# CONSTRUCTION
# ============================================================================

def apa_aggregate(m: int, k: int, n: int) -> APAAlgorithm:
    """
    Border-rank mkn + mk + kn decomposition of trace(ABD + UVW):

        sum_{i,j,h} (a_ij + lam u_jh)(b_jh + lam v_hi)(lam^2 d_hi + w_ij) - T1 - lam T2
            = lam^2 trace(ABD + UVW) + O(lam^3)

    with T1 = sum a_ij q_ij w_ij, q_ij = sum_h (b_jh + lam v_hi) and
    T2 = sum u_jh b_jh r_jh, r_jh = sum_i (lam^2 d_hi + w_ij).
    Scale 2, degree 2.

    Raises:
        VerificationError: the symbolic border identity does not hold
    """
    if min(m, k, n) < 1:
        raise DimensionError(f"dimensions must be positive, got {(m, k, n)}")
    target = two_problem_target(m, k, n).tensor()

    a = lambda i, j: i * k + j
    u = lambda j, h: m * k + j * n + h
    b = lambda j, h: j * n + h
    v = lambda h, i: k * n + h * m + i
    d = lambda h, i: h * m + i
    w = lambda i, j: m * n + i * k + j

    terms: List[PolyTerm] = []
    for i in range(m):
        for j in range(k):
            for h in range(n):
                terms.append((
                    poly_form({a(i, j): ONE, u(j, h): lam(1)}),
                    poly_form({b(j, h): ONE, v(h, i): lam(1)}),
                    poly_form({d(h, i): lam(2), w(i, j): ONE}),
                ))

    for i in range(m):
        for j in range(k):
            q = {}
            for h in range(n):
                q[b(j, h)] = ONE
                q[v(h, i)] = lam(1)
            terms.append((poly_form({a(i, j): -ONE}), poly_form(q), poly_form({w(i, j): ONE})))

    for j in range(k):
        for h in range(n):
            r = {}
            for i in range(m):
                r[d(h, i)] = lam(2)
                r[w(i, j)] = ONE
            terms.append((poly_form({u(j, h): lam(1, -1)}), poly_form({b(j, h): ONE}), poly_form(r)))

    alg = APAAlgorithm(f"apa_aggregate_{m}x{k}x{n}", target, tuple(terms), scale=2, degree=2)
    result = verify_border(alg)
    if not result.ok:
        raise VerificationError(f"{alg.name} failed the border identity: {result.describe(target)}", result.triple)
    logger.info(f"{alg.name}: border rank {alg.border_rank}, scale {alg.scale}, degree {alg.degree}")
    return alg


# ============================================================================
# SYMBOLIC CHECKS
# ============================================================================

def expand_poly_terms(terms: Iterable[PolyTerm]) -> Dict[Triple, LambdaPoly]:
    acc: Dict[Triple, LambdaPoly] = {}
    for f1, f2, f3 in terms:
        for alpha, x in f1:
            for beta, y in f2:
                xy = x * y
                for gamma, z in f3:
                    key = (alpha, beta, gamma)
                    acc[key] = acc.get(key, ZERO) + xy * z
    return {key: p for key, p in acc.items() if not p.is_zero()}


def border_residual(alg: APAAlgorithm) -> Dict[Triple, LambdaPoly]:
    """
    Expansion minus lambda^scale * target. Every residual polynomial of a
    correct algorithm has low_degree > scale.
    """
    expansion = expand_poly_terms(alg.term_list)
    residual: Dict[Triple, LambdaPoly] = {}
    for key in set(expansion) | set(alg.target.coefficients):
        t = alg.target.coefficients.get(key, Fraction(0))
        if t.denominator != 1:
            raise DimensionError("APA targets must have integer coefficients")
        p = expansion.get(key, ZERO) - lam(alg.scale, int(t))
        if not p.is_zero():
            residual[key] = p
    return residual


def verify_border(alg: APAAlgorithm) -> VerificationResult:
    """
    Exact check of the O(lambda) identity: no residual term of degree
    <= scale, and the expansion degree fits scale + degree.
    """
    residual = border_residual(alg)
    bad = sorted(key for key, p in residual.items() if p.low_degree <= alg.scale)
    if bad:
        key = bad[0]
        expected = alg.target.coefficients.get(key, Fraction(0))
        return VerificationResult(False, key, Fraction(expected), Fraction(expected + residual[key].coefficient(alg.scale)))
    too_high = sorted(key for key, p in residual.items() if p.degree > alg.scale + alg.degree)
    if too_high:
        return VerificationResult(False, too_high[0])
    return VerificationResult(True)


def expansion_degree(alg: APAAlgorithm) -> int:
    """Largest lambda power in the expansion minus the scale."""
    expansion = expand_poly_terms(alg.term_list)
    return max((p.degree for p in expansion.values()), default=alg.scale) - alg.scale


# ============================================================================
# APPLICATION
# ============================================================================

def _operand_vectors(target: TargetTensor, operands: Sequence[Tuple[Matrix, Matrix]]):
    if len(operands) != len(target.problems):
        raise DimensionError(f"expected {len(target.problems)} operand pairs, got {len(operands)}")
    a_vec: List[Any] = []
    b_vec: List[Any] = []
    for problem, (A, B) in zip(target.problems, operands):
        m, k, n = problem.shape
        if A.shape != (m, k) or B.shape != (k, n):
            raise DimensionError(
                f"problem {''.join(problem.families)} is MM{problem.shape}, "
                f"got {A.rows}x{A.cols} by {B.rows}x{B.cols}"
            )
        a_vec.extend(A.entries)
        b_vec.extend(B.entries)
    return a_vec, b_vec


def _outputs_to_matrices(target: TargetTensor, values: Sequence[Any]) -> List[Matrix]:
    """D-side outputs (d_hi order) back to one m x n matrix per problem."""
    matrices = []
    for problem, (_, _, oc) in zip(target.problems, target.offsets()):
        m, _, n = problem.shape
        matrices.append(Matrix(m, n, tuple(values[oc + h * m + i] for i in range(m) for h in range(n))))
    return matrices


def _bilinear_outputs(terms, a_vec, b_vec, dim_c: int, zero: Any, ctr: Optional[OpCounter]) -> List[Any]:
    out = [zero] * dim_c
    for f1, f2, f3 in terms:
        left = sum((c * a_vec[i] for i, c in f1), zero)
        right = sum((c * b_vec[i] for i, c in f2), zero)
        product = left * right
        if ctr is not None:
            ctr.add_mults()
        for gamma, c in f3:
            out[gamma] = out[gamma] + c * product
    return out


def apa_apply_numeric(
    alg: APAAlgorithm,
    operands: Sequence[Tuple[Matrix, Matrix]],
    lam_value: float
) -> List[Matrix]:
    """
    Approximate disjoint products in double precision at one lambda.

    Args:
        alg: APA algorithm
        operands: one (A, B) pair per problem of the target
        lam_value: lambda in (0, 1)

    Returns:
        One float matrix per problem, error O(lambda)

    Raises:
        RangeError: lambda outside (0, 1)
    """
    if not 0 < lam_value < 1:
        raise RangeError(f"lambda must lie in (0, 1), got {lam_value}")
    target = alg.target
    a_vec, b_vec = _operand_vectors(target, operands)
    dim_a, dim_b, dim_c = target.dims

    U = np.zeros((alg.border_rank, dim_a))
    V = np.zeros((alg.border_rank, dim_b))
    W = np.zeros((dim_c, alg.border_rank))
    for q, (f1, f2, f3) in enumerate(alg.term_list):
        for i, p in f1:
            U[q, i] = p(lam_value)
        for i, p in f2:
            V[q, i] = p(lam_value)
        for i, p in f3:
            W[i, q] = p(lam_value)

    products = (U @ np.asarray(a_vec, dtype=np.float64)) * (V @ np.asarray(b_vec, dtype=np.float64))
    values = (W @ products) / lam_value ** alg.scale
    return [M.map(float) for M in _outputs_to_matrices(target, list(values))]


@dataclass(frozen=True)
class NumericErrorSample:
    """Max absolute error of apa_apply_numeric at one lambda, over all problems."""

    lam: float
    error: float

    @property
    def constant(self) -> float:
        """Empirical C in error <= C * lambda."""
        return self.error / self.lam


def apa_numeric_error(
    alg: APAAlgorithm,
    operands: Sequence[Tuple[Matrix, Matrix]],
    lam_values: Iterable[float]
) -> List[NumericErrorSample]:
    """
    Measure the O(lambda) error against mm_naive on the same operands.

    The reported constant of the smallest lambda approaches the
    first-order coefficient of the lambda expansion.

    Raises:
        RangeError: a lambda outside (0, 1)
    """
    exact = [mm_naive(A, B).map(float) for A, B in operands]
    samples = []
    for lam_value in lam_values:
        approx = apa_apply_numeric(alg, operands, lam_value)
        error = max(
            (abs(x - y) for got, want in zip(approx, exact) for x, y in zip(got.entries, want.entries)),
            default=0.0,
        )
        samples.append(NumericErrorSample(lam_value, error))

    if samples:
        last = samples[-1]
        logger.info(f"{alg.name}: error {last.error:.3e} at lambda {last.lam:.3e}, C = {last.constant:.6g}")
    return samples


def interpolation_nodes(degree: int, nodes: Optional[Sequence[Any]] = None) -> List[Fraction]:
    """degree + 1 distinct nonzero nodes: explicit, from settings, or 1..d+1."""
    if nodes is None and settings.APA_INTERPOLATION_NODES:
        nodes = settings.APA_INTERPOLATION_NODES
    if nodes is None:
        return [Fraction(t) for t in range(1, degree + 2)]
    nodes = [Fraction(x) for x in nodes][:degree + 1]
    if len(set(nodes)) < degree + 1 or any(x == 0 for x in nodes):
        raise RangeError(f"need {degree + 1} distinct nonzero interpolation nodes, got {nodes}")
    return nodes


def lagrange_weights_at_zero(nodes: Sequence[Fraction]) -> List[Fraction]:
    weights = []
    for t, x in enumerate(nodes):
        weight = Fraction(1)
        for s, y in enumerate(nodes):
            if s != t:
                weight *= (0 - y) / (x - y)
        weights.append(weight)
    return weights


def apa_lift_exact(
    alg: APAAlgorithm,
    operands: Sequence[Tuple[Matrix, Matrix]],
    ctr: Optional[OpCounter] = None,
    nodes: Optional[Sequence[Any]] = None
) -> List[Matrix]:
    """
    Exact products from degree + 1 evaluations.

    Each evaluation runs the bilinear algorithm at a rational lambda and
    divides by lambda^scale, giving a polynomial of degree <= d in lambda
    whose value at 0 is the target; Lagrange weights at 0 recover it.
    Only the products of linear forms are counted, so ctr gains exactly
    (d + 1) * border_rank multiplications. At the trilinear level the
    same lift inflates the rank by (d + 1)^2, a factor of 9 for d = 2.

    Raises:
        RangeError: fewer than d + 1 distinct nonzero nodes
    """
    ctr = ctr if ctr is not None else OpCounter()
    target = alg.target
    a_vec, b_vec = _operand_vectors(target, operands)
    a_vec = [Fraction(x) for x in a_vec]
    b_vec = [Fraction(x) for x in b_vec]
    dim_c = target.dims[2]

    points = interpolation_nodes(alg.degree, nodes)
    weights = lagrange_weights_at_zero(points)
    result = [Fraction(0)] * dim_c
    for node, weight in zip(points, weights):
        values = _bilinear_outputs(alg.evaluate(node), a_vec, b_vec, dim_c, Fraction(0), ctr)
        scale = node ** alg.scale
        for gamma in range(dim_c):
            result[gamma] += weight * values[gamma] / scale

    logger.debug(f"{alg.name}: lifted with {len(points)} evaluations, {ctr.multiplications} products")
    return _outputs_to_matrices(target, result)


# ============================================================================
# EXPONENTS
# ============================================================================

def apa_exponent(m: int, k: int, n: int) -> float:
    """3 log_{mkn}(0.5 (mkn + mk + kn))."""
    mkn = m * k * n
    if min(m, k, n) < 1:
        raise DimensionError(f"dimensions must be positive, got {(m, k, n)}")
    if mkn == 1:
        raise UndefinedExponentError("log base m*k*n = 1 is undefined")
    return 3 * math.log(0.5 * (mkn + m * k + k * n)) / math.log(mkn)


@dataclass(frozen=True)
class RecursionLevel:
    """One squaring step of an APA decomposition (calculator only)."""

    level: int
    size: int            # (mkn)^(2^level)
    border_rank: int     # r^(2^level)
    degree: int          # d * 2^level
    exponent: float      # 3 log_size((d_l + 1)^2 (r/2)^(2^level))


def apa_recursion_profile(m: int, k: int, n: int, levels: int = 6, degree: int = 2) -> List[RecursionLevel]:
    """
    Exponent bound after squaring the APA decomposition `level` times:
    the size squares, the degree doubles and the interpolation costs a
    factor (d_l + 1)^2; the bound tends to apa_exponent(m, k, n).
    """
    mkn = m * k * n
    if mkn < 2:
        raise UndefinedExponentError("log base m*k*n = 1 is undefined")
    r = mkn + m * k + k * n
    profile = []
    for level in range(levels + 1):
        power = 2 ** level
        d_level = degree * power
        log_rank = 2 * math.log(d_level + 1) + power * math.log(r / 2)
        profile.append(RecursionLevel(
            level=level,
            size=mkn ** power,
            border_rank=r ** power,
            degree=d_level,
            exponent=3 * log_rank / (power * math.log(mkn)),
        ))
    return profile


# ============================================================================
# PRECISION
# ============================================================================

def multiplicand_bit_length(a: int, u: int, d: int) -> int:
    """
    Bits of a + 2^-d u written as the integer 2^d a + u: with d-bit a and u
    the multiplicand needs 2d bits (precision doubling).
    """
    if a < 0 or u < 0:
        raise RangeError("a and u must be nonnegative")
    return ((a << d) + u).bit_length()
