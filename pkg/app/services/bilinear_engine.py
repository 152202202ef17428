"""
Bilinear Engine per FastMM.

Gestisce:
- TargetTensor: tensore bersaglio (MM(m,k,n), Disjoint MM, problemi bilineari generici)
- BilinearAlgorithm: terna (U, V, W) di rango r con schedule di valutazione
- TrilinearDecomposition: r termini l_q(A) l'_q(B) l''_q(D) per trace(ABD)
- Applicazione scalare e ricorsiva a blocchi con conteggio operazioni
- Verifica esatta (aritmetica razionale) contro il tensore bersaglio
- Trasformazioni: bilineare <-> trilineare, duali per permutazione di forma
- Esponente MM da rango

Convenzioni sugli indici (0-based, row-major):
- a_i_j  -> i*k + j        (A e' m x k)
- b_j_h  -> j*n + h        (B e' k x n)
- c_i_h  -> i*n + h        (C = AB e' m x n, forma bilineare)
- d_h_i  -> h*m + i        (D e' n x m, forma traccia: c_ih <-> d_hi)
"""

from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from itertools import permutations
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple
import math

from loguru import logger

from app.models.errors import (
    DimensionError,
    UndefinedExponentError,
    RangeError,
    VerificationError,
)
from app.models.schemas import Role
from app.services import matrix_core as mc
from app.services.matrix_core import Matrix, OpCounter, Ring


Triple = Tuple[int, int, int]
SparseForm = Tuple[Tuple[int, Fraction], ...]
Term = Tuple[SparseForm, SparseForm, SparseForm]


def sparse(values: Mapping[int, Any]) -> SparseForm:
    """Canonical sparse form: sorted (index, Fraction) pairs, zeros dropped."""
    return tuple(
        (index, Fraction(coef)) for index, coef in sorted(values.items()) if coef != 0
    )


def dense(form: SparseForm, size: int) -> Tuple[Fraction, ...]:
    row = [Fraction(0)] * size
    for index, coef in form:
        row[index] = coef
    return tuple(row)


# ============================================================================
# TARGET TENSORS
# ============================================================================

@dataclass(frozen=True)
class MMProblem:
    """
    One matrix product inside a (possibly disjoint) target.

    families: names of the three variable families, e.g. ("a", "b", "c")
    for the bilinear map C = AB or ("a", "b", "d") for trace(ABD).
    """

    m: int
    k: int
    n: int
    families: Tuple[str, str, str] = ("a", "b", "c")

    def __post_init__(self):
        if min(self.m, self.k, self.n) < 1:
            raise DimensionError(f"MM dimensions must be positive, got {self.shape}")

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.m, self.k, self.n)

    @property
    def sizes(self) -> Tuple[int, int, int]:
        return (self.m * self.k, self.k * self.n, self.m * self.n)


def _trace_family(name: str) -> str:
    return "d" if name == "c" else name


def _bilinear_family(name: str) -> str:
    return "c" if name == "d" else name


@dataclass(frozen=True)
class TargetTensor:
    """
    Bilinear map c_gamma = sum t[alpha][beta][gamma] a_alpha b_beta.

    With `trace=True` the third group holds the D-side variables of a trace
    form (d_hi instead of c_ih). `problems` is empty for non-MM targets
    such as complex multiplication.
    """

    labels_a: Tuple[str, ...]
    labels_b: Tuple[str, ...]
    labels_c: Tuple[str, ...]
    coefficients: Mapping[Triple, Fraction] = field(repr=False)
    problems: Tuple[MMProblem, ...] = ()
    trace: bool = False

    @property
    def dims(self) -> Tuple[int, int, int]:
        return (len(self.labels_a), len(self.labels_b), len(self.labels_c))

    @property
    def mm_shape(self) -> Optional[Tuple[int, int, int]]:
        """(m, k, n) for a single MM problem, None otherwise."""
        if len(self.problems) == 1:
            return self.problems[0].shape
        return None

    @property
    def is_disjoint(self) -> bool:
        return len(self.problems) > 1

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------

    @classmethod
    def mm(cls, m: int, k: int, n: int) -> "TargetTensor":
        """Tensor of MM(m,k,n): exactly m*k*n unit coefficients."""
        return cls.disjoint([MMProblem(m, k, n)])

    @classmethod
    def trace_mm(cls, m: int, k: int, n: int) -> "TargetTensor":
        """Trace form trace(ABD) of MM(m,k,n)."""
        return cls.disjoint([MMProblem(m, k, n, ("a", "b", "d"))], trace=True)

    @classmethod
    def disjoint(cls, problems: Sequence[MMProblem], trace: bool = False) -> "TargetTensor":
        """
        Block-diagonal tensor of several independent products over
        concatenated variable families.

        Args:
            problems: MM problems, in order
            trace: third group is D-side (trace form) rather than C outputs

        Example:
            >>> TargetTensor.disjoint(
            ...     [MMProblem(2, 2, 2, ("a", "b", "d")), MMProblem(2, 2, 2, ("u", "v", "w"))],
            ...     trace=True,
            ... )
        """
        if not problems:
            raise DimensionError("a disjoint target needs at least one problem")

        labels_a: List[str] = []
        labels_b: List[str] = []
        labels_c: List[str] = []
        coefficients: Dict[Triple, Fraction] = {}

        for problem in problems:
            m, k, n = problem.shape
            fa, fb, fc = problem.families
            off_a, off_b, off_c = len(labels_a), len(labels_b), len(labels_c)

            labels_a.extend(f"{fa}_{i}_{j}" for i in range(m) for j in range(k))
            labels_b.extend(f"{fb}_{j}_{h}" for j in range(k) for h in range(n))
            if trace:
                labels_c.extend(f"{fc}_{h}_{i}" for h in range(n) for i in range(m))
            else:
                labels_c.extend(f"{fc}_{i}_{h}" for i in range(m) for h in range(n))

            for i in range(m):
                for j in range(k):
                    for h in range(n):
                        gamma = h * m + i if trace else i * n + h
                        coefficients[(off_a + i * k + j, off_b + j * n + h, off_c + gamma)] = Fraction(1)

        return cls(
            tuple(labels_a), tuple(labels_b), tuple(labels_c),
            coefficients, tuple(problems), trace,
        )

    @classmethod
    def complex_mult(cls) -> "TargetTensor":
        """(a_0 + i a_1)(b_0 + i b_1) = c_0 + i c_1."""
        one = Fraction(1)
        return cls(
            ("a_0", "a_1"), ("b_0", "b_1"), ("c_0", "c_1"),
            {(0, 0, 0): one, (1, 1, 0): -one, (0, 1, 1): one, (1, 0, 1): one},
        )

    # ------------------------------------------------------------------
    # Bilinear <-> trace form
    # ------------------------------------------------------------------

    def dual_index(self, gamma: int) -> int:
        """Map a C index (i,h) to the D index (h,i) of the same problem."""
        offset = 0
        for problem in self.problems:
            m, _, n = problem.shape
            size = m * n
            if gamma < offset + size:
                local = gamma - offset
                if self.trace:
                    h, i = divmod(local, m)
                    return offset + i * n + h
                i, h = divmod(local, n)
                return offset + h * m + i
            offset += size
        # non-MM targets: c_gamma <-> d_gamma
        return gamma

    def to_trace(self) -> "TargetTensor":
        if self.trace:
            return self
        if self.problems:
            return TargetTensor.disjoint(
                [replace(p, families=(p.families[0], p.families[1], _trace_family(p.families[2])))
                 for p in self.problems],
                trace=True,
            )
        return TargetTensor(
            self.labels_a, self.labels_b,
            tuple("d" + label[1:] if label.startswith("c") else label for label in self.labels_c),
            dict(self.coefficients), (), True,
        )

    def to_bilinear(self) -> "TargetTensor":
        if not self.trace:
            return self
        if self.problems:
            return TargetTensor.disjoint(
                [replace(p, families=(p.families[0], p.families[1], _bilinear_family(p.families[2])))
                 for p in self.problems]
            )
        return TargetTensor(
            self.labels_a, self.labels_b,
            tuple("c" + label[1:] if label.startswith("d") else label for label in self.labels_c),
            dict(self.coefficients), (), False,
        )

    def offsets(self) -> List[Tuple[int, int, int]]:
        """Start offsets of each problem inside the three label groups."""
        result = []
        off = (0, 0, 0)
        for problem in self.problems:
            result.append(off)
            sa, sb, sc = problem.sizes
            off = (off[0] + sa, off[1] + sb, off[2] + sc)
        return result


# ============================================================================
# EVALUATION SCHEDULES
# ============================================================================

@dataclass(frozen=True)
class Step:
    """dest = sum(coef * name) over previously defined names."""

    dest: str
    terms: Tuple[Tuple[str, Fraction], ...]


@dataclass(frozen=True)
class Schedule:
    """
    Straight-line program: pre-additions on A, pre-additions on B,
    the r products (dest, A-side name, B-side name), post-additions,
    and the output name of each C entry in target order.

    Inputs are referenced by their target labels (a_0_1, b_1_0, ...).
    """

    pre_a: Tuple[Step, ...]
    pre_b: Tuple[Step, ...]
    products: Tuple[Tuple[str, str, str], ...]
    post: Tuple[Step, ...]
    outputs: Tuple[str, ...]


def step(dest: str, *terms: Tuple[str, int]) -> Step:
    return Step(dest, tuple((name, Fraction(coef)) for name, coef in terms))


def _symbolic_combine(env: Dict[str, Dict[int, Fraction]], terms) -> Dict[int, Fraction]:
    out: Dict[int, Fraction] = {}
    for name, coef in terms:
        for index, value in env[name].items():
            out[index] = out.get(index, Fraction(0)) + coef * value
    return {i: c for i, c in out.items() if c != 0}


def _combine(env: Dict[str, Any], terms, arith: "_Arithmetic") -> Any:
    """
    Linear combination with the counting rules: a leading -1 is a free
    sign flip, every further +-1 term costs one addition, any other
    coefficient costs one multiplication.
    """
    acc = None
    for name, coef in terms:
        value = env[name]
        if acc is None:
            if coef == 1:
                acc = value
            elif coef == -1:
                acc = arith.neg(value)
            else:
                acc = arith.scale(value, coef)
        elif coef == 1:
            acc = arith.add(acc, value)
        elif coef == -1:
            acc = arith.sub(acc, value)
        else:
            acc = arith.add(acc, arith.scale(value, coef))
    return acc if acc is not None else arith.zero()


# ============================================================================
# BILINEAR ALGORITHM
# ============================================================================

@dataclass(frozen=True)
class BilinearAlgorithm:
    """
    Rank-r bilinear algorithm: c_gamma = sum_q W[gamma][q] l_q(A) l'_q(B)
    with l_q(A) = sum U[q][alpha] a_alpha and l'_q(B) = sum V[q][beta] b_beta.
    """

    name: str
    target: TargetTensor = field(repr=False)
    U: Tuple[Tuple[Fraction, ...], ...] = field(repr=False)
    V: Tuple[Tuple[Fraction, ...], ...] = field(repr=False)
    W: Tuple[Tuple[Fraction, ...], ...] = field(repr=False)
    schedule: Optional[Schedule] = field(default=None, repr=False, compare=False)
    verified: bool = False

    def __post_init__(self):
        dim_a, dim_b, dim_c = self.target.dims
        r = len(self.U)
        if r < 1:
            raise DimensionError("rank must be positive")
        if len(self.V) != r or any(len(row) != dim_a for row in self.U) \
                or any(len(row) != dim_b for row in self.V):
            raise DimensionError(f"U/V shapes inconsistent with rank {r} and dims {self.target.dims}")
        if len(self.W) != dim_c or any(len(row) != r for row in self.W):
            raise DimensionError(f"W must be {dim_c}x{r}")

    @classmethod
    def from_coefficients(
        cls,
        name: str,
        target: TargetTensor,
        U: Iterable[Iterable[Any]],
        V: Iterable[Iterable[Any]],
        W: Iterable[Iterable[Any]],
        schedule: Optional[Schedule] = None,
    ) -> "BilinearAlgorithm":
        as_rows = lambda rows: tuple(tuple(Fraction(x) for x in row) for row in rows)
        return cls(name, target, as_rows(U), as_rows(V), as_rows(W), schedule)

    @classmethod
    def from_schedule(cls, name: str, target: TargetTensor, schedule: Schedule) -> "BilinearAlgorithm":
        """
        Derive U, V, W symbolically from a straight-line schedule, so the
        coefficients and the evaluation order cannot disagree.
        """
        dim_a, dim_b, dim_c = target.dims
        env_a = {label: {i: Fraction(1)} for i, label in enumerate(target.labels_a)}
        env_b = {label: {i: Fraction(1)} for i, label in enumerate(target.labels_b)}
        for s in schedule.pre_a:
            env_a[s.dest] = _symbolic_combine(env_a, s.terms)
        for s in schedule.pre_b:
            env_b[s.dest] = _symbolic_combine(env_b, s.terms)

        r = len(schedule.products)
        env_p: Dict[str, Dict[int, Fraction]] = {}
        U, V = [], []
        for q, (dest, left, right) in enumerate(schedule.products):
            U.append(dense(sparse(env_a[left]), dim_a))
            V.append(dense(sparse(env_b[right]), dim_b))
            env_p[dest] = {q: Fraction(1)}
        for s in schedule.post:
            env_p[s.dest] = _symbolic_combine(env_p, s.terms)

        if len(schedule.outputs) != dim_c:
            raise DimensionError(f"schedule has {len(schedule.outputs)} outputs, target needs {dim_c}")
        W = [dense(sparse(env_p[out]), r) for out in schedule.outputs]
        return cls(name, target, tuple(U), tuple(V), tuple(W), schedule)

    # ------------------------------------------------------------------

    @property
    def rank(self) -> int:
        return len(self.U)

    @property
    def m(self) -> Optional[int]:
        shape = self.target.mm_shape
        return shape[0] if shape else None

    @property
    def k(self) -> Optional[int]:
        shape = self.target.mm_shape
        return shape[1] if shape else None

    @property
    def n(self) -> Optional[int]:
        shape = self.target.mm_shape
        return shape[2] if shape else None

    @property
    def shape(self) -> Optional[Tuple[int, int, int]]:
        return self.target.mm_shape

    def terms(self) -> List[Term]:
        """Term q as (U[q], V[q], W[:, q]) sparse forms over A, B, C indices."""
        return [
            (
                sparse(dict(enumerate(self.U[q]))),
                sparse(dict(enumerate(self.V[q]))),
                sparse({gamma: self.W[gamma][q] for gamma in range(len(self.W))}),
            )
            for q in range(self.rank)
        ]

    @cached_property
    def plan(self) -> Schedule:
        """Explicit schedule, or the term-by-term default one."""
        return self.schedule if self.schedule is not None else default_schedule(self)

    def with_coefficient(self, matrix: str, row: int, col: int, value: Any) -> "BilinearAlgorithm":
        """Copy with one coefficient replaced (unverified, default schedule)."""
        rows = [list(r) for r in getattr(self, matrix)]
        rows[row][col] = Fraction(value)
        return replace(
            self, **{matrix: tuple(tuple(r) for r in rows)}, schedule=None, verified=False
        )


def default_schedule(alg: BilinearAlgorithm) -> Schedule:
    """Sum each linear form term by term; single unit terms are referenced directly."""
    target = alg.target
    pre_a: List[Step] = []
    pre_b: List[Step] = []
    products = []
    post: List[Step] = []
    outputs = []

    def operand(row, labels, prefix, q, steps):
        terms = tuple((labels[i], c) for i, c in enumerate(row) if c != 0)
        if len(terms) == 1 and terms[0][1] == 1:
            return terms[0][0]
        steps.append(Step(f"{prefix}{q}", terms))
        return f"{prefix}{q}"

    for q in range(alg.rank):
        left = operand(alg.U[q], target.labels_a, "l", q, pre_a)
        right = operand(alg.V[q], target.labels_b, "r", q, pre_b)
        products.append((f"p{q}", left, right))

    product_names = [f"p{q}" for q in range(alg.rank)]
    for gamma, row in enumerate(alg.W):
        outputs.append(operand(row, product_names, "c", gamma, post))

    return Schedule(tuple(pre_a), tuple(pre_b), tuple(products), tuple(post), tuple(outputs))


# ============================================================================
# APPLICATION
# ============================================================================

class _Arithmetic:
    def zero(self) -> Any: ...
    def add(self, x, y): ...
    def sub(self, x, y): ...
    def neg(self, x): ...
    def scale(self, x, coef: Fraction): ...
    def mul(self, x, y): ...


class _ScalarArithmetic(_Arithmetic):
    def __init__(self, ring: Ring, ctr: OpCounter):
        self.ring = ring
        self.ctr = ctr

    def zero(self):
        return self.ring.zero

    def add(self, x, y):
        self.ctr.add_adds()
        return x + y

    def sub(self, x, y):
        self.ctr.add_adds()
        return x - y

    def neg(self, x):
        return -x

    def scale(self, x, coef):
        self.ctr.add_mults()
        return self.ring.coerce(coef) * x

    def mul(self, x, y):
        self.ctr.add_mults()
        return x * y


class _BlockArithmetic(_Arithmetic):
    """Block matrices; `mul` recurses into apply_recursive."""

    def __init__(self, alg: BilinearAlgorithm, size: int, cutoff: int, ring: Ring, ctr: OpCounter):
        self.alg = alg
        self.size = size
        self.cutoff = cutoff
        self.ring = ring
        self.ctr = ctr

    def zero(self):
        return Matrix.zeros(self.size, self.size, self.ring.zero)

    def add(self, x, y):
        return mc.add(x, y, self.ctr)

    def sub(self, x, y):
        return mc.sub(x, y, self.ctr)

    def neg(self, x):
        return mc.negate(x)

    def scale(self, x, coef):
        return mc.scale(x, self.ring.coerce(coef), self.ctr)

    def mul(self, x, y):
        return apply_recursive(self.alg, x, y, self.cutoff, self.ctr)


def _execute(alg: BilinearAlgorithm, a_values: Sequence[Any], b_values: Sequence[Any], arith: _Arithmetic) -> List[Any]:
    plan = alg.plan
    target = alg.target
    env_a: Dict[str, Any] = dict(zip(target.labels_a, a_values))
    env_b: Dict[str, Any] = dict(zip(target.labels_b, b_values))

    for s in plan.pre_a:
        env_a[s.dest] = _combine(env_a, s.terms, arith)
    for s in plan.pre_b:
        env_b[s.dest] = _combine(env_b, s.terms, arith)

    env_p: Dict[str, Any] = {}
    for dest, left, right in plan.products:
        env_p[dest] = arith.mul(env_a[left], env_b[right])
    for s in plan.post:
        env_p[s.dest] = _combine(env_p, s.terms, arith)

    return [env_p[name] for name in plan.outputs]


def apply_scalar(
    alg: BilinearAlgorithm,
    A: Matrix,
    B: Matrix,
    ctr: Optional[OpCounter] = None,
    ring: Optional[Ring] = None
) -> Matrix:
    """
    Apply alg once, treating matrix entries as scalars.

    For MM targets A is m x k and B is k x n and the result is m x n.
    For other bilinear problems A and B hold the input vectors (any shape
    with the right number of entries) and the result is 1 x dimC.

    Raises:
        DimensionError: operand shapes do not fit the target
        RingError: a coefficient is not representable in the entry ring

    Example:
        >>> apply_scalar(strassen(), A, B, ctr)   # 7 mults, 18 adds
    """
    ctr = ctr if ctr is not None else OpCounter()
    shape = alg.shape
    dim_a, dim_b, dim_c = alg.target.dims

    if shape is not None:
        m, k, n = shape
        if A.shape != (m, k) or B.shape != (k, n):
            raise DimensionError(
                f"{alg.name} computes MM{shape}, got {A.rows}x{A.cols} by {B.rows}x{B.cols}"
            )
    elif len(A.entries) != dim_a or len(B.entries) != dim_b:
        raise DimensionError(f"{alg.name} needs {dim_a} + {dim_b} inputs")

    if ring is None:
        ring = mc.common_ring(A, B)

    out = _execute(alg, A.entries, B.entries, _ScalarArithmetic(ring, ctr))
    if shape is not None:
        return Matrix(shape[0], shape[2], tuple(out))
    return Matrix(1, dim_c, tuple(out))


def apply_recursive(
    alg: BilinearAlgorithm,
    A: Matrix,
    B: Matrix,
    cutoff: int = 1,
    ctr: Optional[OpCounter] = None
) -> Matrix:
    """
    Recursive block application of a square algorithm MM(b,b,b).

    Sizes <= cutoff are multiplied by mm_naive; larger sizes must be
    divisible by b at every level (pad first with `multiply`).

    Raises:
        DimensionError: non-square operands or a size not reachable by splitting
    """
    ctr = ctr if ctr is not None else OpCounter()
    shape = alg.shape
    if shape is None or len(set(shape)) != 1:
        raise DimensionError(f"recursive application needs a square MM algorithm, {alg.name} is {shape}")
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    if A.rows != A.cols or A.shape != B.shape:
        raise DimensionError(f"recursive application needs equal square operands, got {A.shape} and {B.shape}")

    size = A.rows
    if size <= cutoff:
        return mc.mm_naive(A, B, ctr)

    base = shape[0]
    if size % base:
        raise DimensionError(f"size {size} is not divisible by block base {base}; pad the operands first")

    ring = mc.common_ring(A, B)
    blocks_a = [blk for row in mc.block_split(A, base, base) for blk in row]
    blocks_b = [blk for row in mc.block_split(B, base, base) for blk in row]
    arith = _BlockArithmetic(alg, size // base, cutoff, ring, ctr)
    out = _execute(alg, blocks_a, blocks_b, arith)
    return mc.block_join([out[i * base:(i + 1) * base] for i in range(base)])


def multiply(
    alg: BilinearAlgorithm,
    A: Matrix,
    B: Matrix,
    cutoff: int = 1,
    ctr: Optional[OpCounter] = None
) -> Matrix:
    """
    Top-level driver: pad to the smallest base^p square, recurse, crop.

    Padding happens only here, never inside the recursion.
    """
    if A.cols != B.rows:
        raise DimensionError(f"cannot multiply {A.rows}x{A.cols} by {B.rows}x{B.cols}")
    base = alg.shape[0] if alg.shape else 2
    size = mc.block_power_size(max(A.rows, A.cols, B.cols), base)
    # sotto soglia basta il quadrato, senza potenza della base
    if max(A.rows, A.cols, B.cols) <= cutoff:
        size = max(A.rows, A.cols, B.cols)
    C = apply_recursive(alg, mc.pad_to(A, size, size), mc.pad_to(B, size, size), cutoff, ctr)
    return C.crop(A.rows, B.cols)


# ============================================================================
# VERIFICATION
# ============================================================================

@dataclass(frozen=True)
class VerificationResult:
    """Outcome of verify_target; `triple` is the first violated (alpha, beta, gamma)."""

    ok: bool
    triple: Optional[Triple] = None
    expected: Fraction = Fraction(0)
    actual: Fraction = Fraction(0)

    def __bool__(self) -> bool:
        return self.ok

    def describe(self, target: Optional[TargetTensor] = None) -> str:
        if self.ok:
            return "PASS"
        alpha, beta, gamma = self.triple
        where = f"({alpha}, {beta}, {gamma})"
        if target is not None:
            where += f" = ({target.labels_a[alpha]}, {target.labels_b[beta]}, {target.labels_c[gamma]})"
        return f"FAIL at {where}: expected {self.expected}, got {self.actual}"


def expand_terms(terms: Iterable[Term]) -> Dict[Triple, Fraction]:
    """Exact sparse expansion of sum_q form1 (x) form2 (x) form3."""
    acc: Dict[Triple, Fraction] = {}
    for f1, f2, f3 in terms:
        for alpha, x in f1:
            for beta, y in f2:
                xy = x * y
                for gamma, z in f3:
                    key = (alpha, beta, gamma)
                    acc[key] = acc.get(key, Fraction(0)) + xy * z
    return acc


def compare_expansion(expansion: Mapping[Triple, Fraction], target: TargetTensor) -> VerificationResult:
    violated = [
        key for key in set(expansion) | set(target.coefficients)
        if expansion.get(key, 0) != target.coefficients.get(key, 0)
    ]
    if not violated:
        return VerificationResult(True)
    first = min(violated)
    return VerificationResult(
        False, first,
        Fraction(target.coefficients.get(first, 0)),
        Fraction(expansion.get(first, 0)),
    )


def verify_target(obj, target: Optional[TargetTensor] = None) -> VerificationResult:
    """
    Exact coefficient-wise check of sum_q U[q][a] V[q][b] W[c][q] == t[a][b][c].

    Accepts a BilinearAlgorithm or a TrilinearDecomposition; the target
    defaults to the object's own. A mismatch is returned, not raised.

    Raises:
        DimensionError: target dims differ from the object's
    """
    target = target if target is not None else obj.target
    if target.dims != obj.target.dims:
        raise DimensionError(f"target dims {target.dims} differ from {obj.target.dims}")
    result = compare_expansion(expand_terms(obj.terms()), target)
    if not result.ok:
        logger.debug(f"Verification of {getattr(obj, 'name', '?')} failed at {result.triple}")
    return result


def verified(obj):
    """
    Return a copy flagged verified, or raise.

    Raises:
        VerificationError: with the first violated triple
    """
    result = verify_target(obj)
    if not result.ok:
        logger.error(f"{obj.name}: {result.describe(obj.target)}")
        raise VerificationError(f"{obj.name} failed verification: {result.describe(obj.target)}", result.triple)
    return replace(obj, verified=True)


# ============================================================================
# TRILINEAR DECOMPOSITIONS
# ============================================================================

@dataclass(frozen=True)
class TrilinearDecomposition:
    """
    sum_q l_q(A-side) l'_q(B-side) l''_q(D-side) for a trace-form target.

    Each term is a triple of sparse forms over the three role groups of
    the target (first, second and third family of every problem).
    """

    name: str
    target: TargetTensor = field(repr=False)
    term_list: Tuple[Term, ...] = field(repr=False)
    verified: bool = False

    @property
    def rank(self) -> int:
        return len(self.term_list)

    @property
    def families(self) -> List[Tuple[str, str, str]]:
        return [p.families for p in self.target.problems]

    def terms(self) -> List[Term]:
        return list(self.term_list)

    def canonical(self) -> "TrilinearDecomposition":
        """Same decomposition with terms sorted by form signature."""
        return replace(self, term_list=tuple(sorted(self.term_list)))

    def render_term(self, q: int) -> str:
        """Human readable l l' l'' product, e.g. (a_0_0+a_1_1)(b_0_0+b_1_1)(d_0_0+d_1_1)."""
        groups = (self.target.labels_a, self.target.labels_b, self.target.labels_c)
        return "".join(
            f"({_render_form(form, labels)})" for form, labels in zip(self.term_list[q], groups)
        )


def _render_form(form: SparseForm, labels: Sequence[str]) -> str:
    parts = []
    for index, coef in form:
        if coef == 1:
            parts.append(f"+{labels[index]}")
        elif coef == -1:
            parts.append(f"-{labels[index]}")
        else:
            parts.append(f"{'+' if coef > 0 else '-'}{abs(coef)}*{labels[index]}")
    text = "".join(parts)
    return text[1:] if text.startswith("+") else text


def trilinear_from_bilinear(alg: BilinearAlgorithm) -> TrilinearDecomposition:
    """
    Multiply output c_gamma by its dual variable and sum: the third form
    of term q is l''_q(D) = sum_{i,h} w_ih^(q) d_hi.
    """
    target = alg.target.to_trace()
    terms = []
    for f1, f2, f3 in alg.terms():
        d_form = sparse({alg.target.dual_index(gamma): coef for gamma, coef in f3})
        terms.append((f1, f2, d_form))
    return TrilinearDecomposition(alg.name, target, tuple(terms), alg.verified)


def _restrict(form: SparseForm, start: int, size: int) -> SparseForm:
    return tuple((i - start, c) for i, c in form if start <= i < start + size)


def split_disjoint(T: TrilinearDecomposition) -> List[TrilinearDecomposition]:
    """
    One decomposition per constituent problem: every form is restricted to
    the problem's variables and terms with a vanishing form are dropped.
    """
    parts = []
    for problem, (oa, ob, oc) in zip(T.target.problems, T.target.offsets()):
        sa, sb, sc = problem.sizes
        terms = []
        for f1, f2, f3 in T.term_list:
            g1, g2, g3 = _restrict(f1, oa, sa), _restrict(f2, ob, sb), _restrict(f3, oc, sc)
            if g1 and g2 and g3:
                terms.append((g1, g2, g3))
        target = TargetTensor.disjoint([problem], trace=True)
        parts.append(TrilinearDecomposition(f"{T.name}[{''.join(problem.families)}]", target, tuple(terms)))
    return parts


def bilinear_from_trilinear(T: TrilinearDecomposition, role: str = Role.D) -> BilinearAlgorithm:
    """
    Equate coefficients of the chosen role's variables.

    Role D gives MM(m,k,n), role A gives MM(k,n,m), role B gives MM(n,m,k).
    For disjoint targets use `bilinear_from_disjoint`.

    Raises:
        DimensionError: disjoint target, or role A/B on a non-MM target
        VerificationError: the resulting algorithm fails verification
    """
    if T.target.is_disjoint:
        raise DimensionError("disjoint target: use bilinear_from_disjoint")

    rank = T.rank
    if not T.target.problems:
        if role != Role.D:
            raise DimensionError("roles A and B need an MM target")
        target = T.target.to_bilinear()
        return _from_forms(T.name, target, T.term_list, lambda g: g)

    m, k, n = T.target.mm_shape
    if role == Role.D:
        target = TargetTensor.mm(m, k, n)
        forms = [(f1, f2, f3) for f1, f2, f3 in T.term_list]
        # d_hi -> c_ih
        out_index = lambda idx: (idx % m) * n + idx // m
    elif role == Role.A:
        target = TargetTensor.mm(k, n, m)
        # A' = B (k x n), B' = D (n x m), C'_{j,i} <-> a_ij
        forms = [(f2, f3, f1) for f1, f2, f3 in T.term_list]
        out_index = lambda idx: (idx % k) * m + idx // k
    elif role == Role.B:
        target = TargetTensor.mm(n, m, k)
        # A' = D (n x m), B' = A (m x k), C'_{h,j} <-> b_jh
        forms = [(f3, f1, f2) for f1, f2, f3 in T.term_list]
        out_index = lambda idx: (idx % n) * k + idx // n
    else:
        raise ValueError(f"unknown role {role!r}")

    name = T.name if role == Role.D else f"{T.name}^{Role(role).value}"
    alg = _from_forms(name, target, forms, out_index)
    logger.debug(f"Built {alg.name} for MM{target.mm_shape} from role {role}, rank {rank}")
    return verified(alg) if T.verified else alg


def _from_forms(name: str, target: TargetTensor, forms, out_index) -> BilinearAlgorithm:
    dim_a, dim_b, dim_c = target.dims
    r = len(forms)
    W = [[Fraction(0)] * r for _ in range(dim_c)]
    U, V = [], []
    for q, (f1, f2, f3) in enumerate(forms):
        U.append(dense(f1, dim_a))
        V.append(dense(f2, dim_b))
        for idx, coef in f3:
            W[out_index(idx)][q] = coef
    return BilinearAlgorithm(name, target, tuple(U), tuple(V), tuple(tuple(row) for row in W))


def bilinear_from_disjoint(T: TrilinearDecomposition, role: str = Role.D) -> List[BilinearAlgorithm]:
    """One verified bilinear algorithm per constituent problem of a disjoint target."""
    return [verified(bilinear_from_trilinear(part, role)) for part in split_disjoint(T)]


def transpose_dual(alg: BilinearAlgorithm) -> BilinearAlgorithm:
    """(AB)^T = B^T A^T: MM(m,k,n) -> MM(n,k,m) with the same rank."""
    m, k, n = alg.shape
    target = TargetTensor.mm(n, k, m)
    U = tuple(tuple(row[j * n + h] for h in range(n) for j in range(k)) for row in alg.V)
    V = tuple(tuple(row[i * k + j] for j in range(k) for i in range(m)) for row in alg.U)
    W = tuple(alg.W[i * n + h] for h in range(n) for i in range(m))
    return BilinearAlgorithm(f"{alg.name}^T", target, U, V, W)


def transpose_duals(alg: BilinearAlgorithm) -> List[BilinearAlgorithm]:
    """
    The six same-rank algorithms for every permutation of (m,k,n):
    the three cyclic duals of alg and of its transpose.

    Raises:
        VerificationError: alg is not flagged verified, or a dual fails
    """
    if not alg.verified:
        raise VerificationError(f"{alg.name} is not verified; refusing to build duals")
    if alg.shape is None:
        raise DimensionError(f"{alg.name} is not an MM algorithm")

    duals = []
    for source in (alg, verified(transpose_dual(alg))):
        T = trilinear_from_bilinear(source)
        for role in (Role.D, Role.A, Role.B):
            duals.append(verified(bilinear_from_trilinear(T, role)))

    logger.info(f"Built {len(duals)} duals of {alg.name}: {[d.shape for d in duals]}")
    return duals


def kronecker(outer: BilinearAlgorithm, inner: BilinearAlgorithm) -> BilinearAlgorithm:
    """
    One level of `outer` on blocks multiplied by `inner`, flattened into a
    single algorithm for MM(m1 m2, k1 k2, n1 n2) of rank r1 r2.

    Row i of the big A is i1*m2 + i2 (block index i1, inner index i2).
    """
    m1, k1, n1 = outer.shape
    m2, k2, n2 = inner.shape
    m, k, n = m1 * m2, k1 * k2, n1 * n2
    r2 = inner.rank

    def combine(row1, row2, rows1, cols1, rows2, cols2):
        # entry (x, y) of the big operand = block (x//rows2, y//cols2), inner (x%rows2, y%cols2)
        out = []
        for x in range(rows1 * rows2):
            for y in range(cols1 * cols2):
                out.append(
                    row1[(x // rows2) * cols1 + y // cols2] * row2[(x % rows2) * cols2 + y % cols2]
                )
        return tuple(out)

    U, V = [], []
    for q1 in range(outer.rank):
        for q2 in range(r2):
            U.append(combine(outer.U[q1], inner.U[q2], m1, k1, m2, k2))
            V.append(combine(outer.V[q1], inner.V[q2], k1, n1, k2, n2))

    W = []
    for x in range(m):
        for y in range(n):
            row1 = outer.W[(x // m2) * n1 + y // n2]
            row2 = inner.W[(x % m2) * n2 + y % n2]
            W.append(tuple(row1[q1] * row2[q2] for q1 in range(outer.rank) for q2 in range(r2)))

    name = f"{outer.name}*{inner.name}"
    alg = BilinearAlgorithm(name, TargetTensor.mm(m, k, n), tuple(U), tuple(V), tuple(W))
    return verified(alg) if outer.verified and inner.verified else alg


def permuted_shapes(m: int, k: int, n: int) -> List[Tuple[int, int, int]]:
    return sorted(set(permutations((m, k, n))))


# ============================================================================
# EXPONENTS
# ============================================================================

def exponent_from_rank(m: int, k: int, n: int, r: float) -> float:
    """
    Exponent bound 3 log_{mkn}(r); equals log_n(r) when m = k = n.

    Raises:
        UndefinedExponentError: m*k*n == 1
        RangeError: r <= 0
    """
    mkn = m * k * n
    if min(m, k, n) < 1:
        raise DimensionError(f"dimensions must be positive, got {(m, k, n)}")
    if mkn == 1:
        raise UndefinedExponentError("log base m*k*n = 1 is undefined")
    if r <= 0:
        raise RangeError(f"rank must be positive, got {r}")
    if m == k == n:
        return math.log(r) / math.log(n)
    return 3 * math.log(r) / math.log(mkn)
