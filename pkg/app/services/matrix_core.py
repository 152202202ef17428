"""
Matrix Core per FastMM.

Gestisce:
- Matrici dense row-major su anelli esatti (interi, razionali) e float64
- Prodotto classico (baseline 2n^3 - n^2 operazioni)
- Partizione a blocchi, zero-padding e cropping
- Conteggio esplicito delle operazioni aritmetiche (OpCounter)

Tutte le funzioni sono pure: l'unico stato mutabile è il contatore
passato dal chiamante.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, List, Optional, Sequence, Tuple
import random

from loguru import logger

from app.models.errors import DimensionError, RingError


# ============================================================================
# RINGS
# ============================================================================

class Ring:
    """
    Entry ring of a matrix.

    Entries are plain Python numbers (int, Fraction, float); the ring object
    only knows how to build zero/one, coerce rational coefficients and draw
    random elements.
    """

    name: str = "abstract"
    exact: bool = True

    @property
    def zero(self) -> Any:
        return self.coerce(Fraction(0))

    @property
    def one(self) -> Any:
        return self.coerce(Fraction(1))

    def coerce(self, value: Fraction) -> Any:
        raise NotImplementedError

    def random_element(self, rng: random.Random, bound: int) -> Any:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<Ring {self.name}>"


class IntegerRing(Ring):
    name = "int"

    def coerce(self, value: Fraction) -> int:
        value = Fraction(value)
        if value.denominator != 1:
            raise RingError(f"coefficient {value} is not an integer")
        return value.numerator

    def random_element(self, rng: random.Random, bound: int) -> int:
        return rng.randint(-bound, bound)


class RationalRing(Ring):
    name = "rat"

    def coerce(self, value: Fraction) -> Fraction:
        return Fraction(value)

    def random_element(self, rng: random.Random, bound: int) -> Fraction:
        return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


class FloatRing(Ring):
    """Double precision, used only for numeric experiments."""

    name = "f64"
    exact = False

    def coerce(self, value: Fraction) -> float:
        return float(value)

    def random_element(self, rng: random.Random, bound: int) -> float:
        return rng.uniform(-bound, bound)


INTEGERS = IntegerRing()
RATIONALS = RationalRing()
FLOATS = FloatRing()

RINGS = {ring.name: ring for ring in (INTEGERS, RATIONALS, FLOATS)}


def get_ring(name: str) -> Ring:
    try:
        return RINGS[name]
    except KeyError:
        raise ValueError(f"unknown ring '{name}' (expected one of {sorted(RINGS)})")


# ============================================================================
# OPERATION COUNTER
# ============================================================================

@dataclass
class OpCounter:
    """
    Caller-owned arithmetic counter.

    `additions` counts additions and subtractions together. Counters only
    grow; independent runs are combined with `merge` or `+`.
    """

    multiplications: int = 0
    additions: int = 0

    def add_mults(self, count: int = 1) -> None:
        self.multiplications += count

    def add_adds(self, count: int = 1) -> None:
        self.additions += count

    def merge(self, other: "OpCounter") -> "OpCounter":
        self.multiplications += other.multiplications
        self.additions += other.additions
        return self

    def __add__(self, other: "OpCounter") -> "OpCounter":
        return OpCounter(
            self.multiplications + other.multiplications,
            self.additions + other.additions,
        )

    @property
    def total(self) -> int:
        return self.multiplications + self.additions


def _counter(ctr: Optional[OpCounter]) -> OpCounter:
    return ctr if ctr is not None else OpCounter()


# ============================================================================
# MATRIX
# ============================================================================

@dataclass(frozen=True)
class Matrix:
    """Dense rows x cols matrix, entries stored row-major."""

    rows: int
    cols: int
    entries: Tuple[Any, ...] = field(repr=False)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DimensionError(f"matrix dimensions must be positive, got {self.rows}x{self.cols}")
        if not isinstance(self.entries, tuple):
            object.__setattr__(self, "entries", tuple(self.entries))
        if len(self.entries) != self.rows * self.cols:
            raise DimensionError(
                f"{self.rows}x{self.cols} matrix needs {self.rows * self.cols} entries, "
                f"got {len(self.entries)}"
            )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Any]]) -> "Matrix":
        if not rows or not rows[0]:
            raise DimensionError("matrix must be nonempty")
        width = len(rows[0])
        if any(len(row) != width for row in rows):
            raise DimensionError("ragged rows")
        return cls(len(rows), width, tuple(x for row in rows for x in row))

    @classmethod
    def zeros(cls, rows: int, cols: int, zero: Any = 0) -> "Matrix":
        return cls(rows, cols, (zero,) * (rows * cols))

    @classmethod
    def identity(cls, n: int, zero: Any = 0, one: Any = 1) -> "Matrix":
        return cls(n, n, tuple(one if i == j else zero for i in range(n) for j in range(n)))

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def zero(self) -> Any:
        # zero dello stesso tipo delle entries (int, Fraction, float)
        return self.entries[0] - self.entries[0]

    def __getitem__(self, index: Tuple[int, int]) -> Any:
        i, j = index
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> Tuple[Any, ...]:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def to_rows(self) -> List[List[Any]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def transpose(self) -> "Matrix":
        return Matrix(
            self.cols, self.rows,
            tuple(self[i, j] for j in range(self.cols) for i in range(self.rows)),
        )

    def map(self, fn: Callable[[Any], Any]) -> "Matrix":
        return Matrix(self.rows, self.cols, tuple(fn(x) for x in self.entries))

    def crop(self, rows: int, cols: int) -> "Matrix":
        if rows > self.rows or cols > self.cols:
            raise DimensionError(f"cannot crop {self.rows}x{self.cols} to {rows}x{cols}")
        return Matrix(rows, cols, tuple(self[i, j] for i in range(rows) for j in range(cols)))

    def is_zero(self) -> bool:
        return all(x == 0 for x in self.entries)


def ring_of(A: Matrix) -> Ring:
    """Smallest ring holding every entry of A (float > rational > integer)."""
    if any(isinstance(x, float) for x in A.entries):
        return FLOATS
    if any(isinstance(x, Fraction) for x in A.entries):
        return RATIONALS
    return INTEGERS


def common_ring(*matrices: Matrix) -> Ring:
    rings = [ring_of(A) for A in matrices]
    for ring in (FLOATS, RATIONALS):
        if ring in rings:
            return ring
    return INTEGERS


def random_matrix(
    rows: int,
    cols: int,
    ring: Ring,
    rng: random.Random,
    bound: int = 9
) -> Matrix:
    """Matrix with entries drawn by `ring.random_element(rng, bound)`."""
    return Matrix(rows, cols, tuple(ring.random_element(rng, bound) for _ in range(rows * cols)))


def first_difference(A: Matrix, B: Matrix) -> Optional[Tuple[int, int]]:
    """First (i, j) where A and B differ, None when equal."""
    if A.shape != B.shape:
        raise DimensionError(f"cannot compare {A.shape} with {B.shape}")
    for index, (x, y) in enumerate(zip(A.entries, B.entries)):
        if x != y:
            return divmod(index, A.cols)
    return None


# ============================================================================
# ARITHMETIC
# ============================================================================

def mm_naive(A: Matrix, B: Matrix, ctr: Optional[OpCounter] = None) -> Matrix:
    """
    Straightforward product: m*k*n multiplications, m*n*(k-1) additions.

    Raises:
        DimensionError: A.cols != B.rows
    """
    if A.cols != B.rows:
        raise DimensionError(f"cannot multiply {A.rows}x{A.cols} by {B.rows}x{B.cols}")

    m, k, n = A.rows, A.cols, B.cols
    out = []
    for i in range(m):
        a_row = A.row(i)
        for h in range(n):
            acc = a_row[0] * B.entries[h]
            for j in range(1, k):
                acc = acc + a_row[j] * B.entries[j * n + h]
            out.append(acc)

    ctr = _counter(ctr)
    ctr.add_mults(m * k * n)
    ctr.add_adds(m * n * (k - 1))
    return Matrix(m, n, tuple(out))


def _check_same_shape(A: Matrix, B: Matrix, op: str) -> None:
    if A.shape != B.shape:
        raise DimensionError(f"cannot {op} {A.rows}x{A.cols} and {B.rows}x{B.cols}")


def add(A: Matrix, B: Matrix, ctr: Optional[OpCounter] = None) -> Matrix:
    _check_same_shape(A, B, "add")
    _counter(ctr).add_adds(len(A.entries))
    return Matrix(A.rows, A.cols, tuple(x + y for x, y in zip(A.entries, B.entries)))


def sub(A: Matrix, B: Matrix, ctr: Optional[OpCounter] = None) -> Matrix:
    _check_same_shape(A, B, "subtract")
    _counter(ctr).add_adds(len(A.entries))
    return Matrix(A.rows, A.cols, tuple(x - y for x, y in zip(A.entries, B.entries)))


def negate(A: Matrix) -> Matrix:
    """Sign flip; not an arithmetic operation for counting purposes."""
    return Matrix(A.rows, A.cols, tuple(-x for x in A.entries))


def scale(A: Matrix, c: Any, ctr: Optional[OpCounter] = None) -> Matrix:
    _counter(ctr).add_mults(len(A.entries))
    return Matrix(A.rows, A.cols, tuple(c * x for x in A.entries))


# ============================================================================
# BLOCKS AND PADDING
# ============================================================================

def block_split(A: Matrix, rb: int, cb: int) -> List[List[Matrix]]:
    """
    Split A into an rb x cb grid of equally sized blocks.

    Raises:
        DimensionError: rb or cb does not divide the corresponding dimension
    """
    if rb < 1 or cb < 1 or A.rows % rb or A.cols % cb:
        raise DimensionError(f"{A.rows}x{A.cols} cannot be split into {rb}x{cb} blocks")
    br, bc = A.rows // rb, A.cols // cb
    return [
        [
            Matrix(br, bc, tuple(
                A[p * br + i, q * bc + j] for i in range(br) for j in range(bc)
            ))
            for q in range(cb)
        ]
        for p in range(rb)
    ]


def block_join(grid: Sequence[Sequence[Matrix]]) -> Matrix:
    """Inverse of block_split (blocks of each row/column must conform)."""
    if not grid or not grid[0]:
        raise DimensionError("empty block grid")
    heights = [row[0].rows for row in grid]
    widths = [block.cols for block in grid[0]]
    for p, row in enumerate(grid):
        if len(row) != len(widths):
            raise DimensionError("ragged block grid")
        for q, block in enumerate(row):
            if block.shape != (heights[p], widths[q]):
                raise DimensionError(f"block ({p},{q}) has shape {block.shape}")

    entries = []
    for p, row in enumerate(grid):
        for i in range(heights[p]):
            for block in row:
                entries.extend(block.row(i))
    return Matrix(sum(heights), sum(widths), tuple(entries))


def pad_to(A: Matrix, rows: int, cols: int) -> Matrix:
    """Embed A in the top-left corner of a rows x cols zero matrix."""
    if rows < A.rows or cols < A.cols:
        raise DimensionError(f"cannot pad {A.rows}x{A.cols} to {rows}x{cols}")
    zero = A.zero
    return Matrix(rows, cols, tuple(
        A[i, j] if i < A.rows and j < A.cols else zero
        for i in range(rows) for j in range(cols)
    ))


def block_power_size(size: int, base: int) -> int:
    """Smallest base**p with base**p >= size."""
    if base < 2:
        raise ValueError(f"base must be >= 2, got {base}")
    target = 1
    while target < size:
        target *= base
    return target


def pad_to_block_power(A: Matrix, base: int = 2) -> Matrix:
    """
    Smallest base^p x base^p zero-padded embedding of A.

    For n x n input and base 2 the result size s satisfies n <= s < 2n.
    """
    size = block_power_size(max(A.rows, A.cols), base)
    if (size, size) != A.shape:
        logger.debug(f"Padding {A.rows}x{A.cols} -> {size}x{size} (base {base})")
    return pad_to(A, size, size)
