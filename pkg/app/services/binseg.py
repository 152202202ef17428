"""
Binary Segmentation per FastMM.

Gestisce:
- UnboundedNatural: interi naturali arbitrari (schoolbook/nativo + Karatsuba)
- SegmentCodec: codifica di vettori come un unico intero in base 2^k
- Prodotto scalare, somma e convoluzione con una sola moltiplicazione lunga
- Shift per vettori con segno e relative correzioni
- Driver con budget di bit (split in sottovettori)
- Predicato sulla lunghezza di parola

Ogni operazione esegue esattamente una moltiplicazione UnboundedNatural,
registrata sul contatore del chiamante.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from loguru import logger

from app.config import settings
from app.models.errors import RangeError
from app.services.matrix_core import OpCounter


# ============================================================================
# UNBOUNDED NATURALS
# ============================================================================

def karatsuba(x: int, y: int, threshold_bits: int) -> int:
    """Karatsuba on nonnegative ints, native multiply below threshold_bits."""
    if x.bit_length() <= threshold_bits or y.bit_length() <= threshold_bits:
        return x * y

    half = max(x.bit_length(), y.bit_length()) >> 1
    mask = (1 << half) - 1
    x1, x0 = x >> half, x & mask
    y1, y0 = y >> half, y & mask

    z2 = karatsuba(x1, y1, threshold_bits)
    z0 = karatsuba(x0, y0, threshold_bits)
    z1 = karatsuba(x1 + x0, y1 + y0, threshold_bits) - z2 - z0
    return (z2 << (2 * half)) + (z1 << half) + z0


@dataclass(frozen=True)
class UnboundedNatural:
    """Arbitrary-precision nonnegative integer."""

    value: int = 0

    def __post_init__(self):
        if self.value < 0:
            raise RangeError(f"UnboundedNatural must be nonnegative, got {self.value}")

    def __int__(self) -> int:
        return self.value

    def __add__(self, other: "UnboundedNatural") -> "UnboundedNatural":
        return UnboundedNatural(self.value + other.value)

    def multiply(self, other: "UnboundedNatural", ctr: Optional[OpCounter] = None,
                 threshold_bits: Optional[int] = None) -> "UnboundedNatural":
        """One long multiplication (counted once on ctr)."""
        if ctr is not None:
            ctr.add_mults()
        threshold = threshold_bits if threshold_bits is not None else settings.KARATSUBA_THRESHOLD_BITS
        return UnboundedNatural(karatsuba(self.value, other.value, max(threshold, 1)))

    def __mul__(self, other: "UnboundedNatural") -> "UnboundedNatural":
        return self.multiply(other)

    def shift(self, bits: int) -> "UnboundedNatural":
        """Left shift for bits > 0, right shift for bits < 0."""
        return UnboundedNatural(self.value << bits if bits >= 0 else self.value >> -bits)

    def segment(self, lo: int, hi: int) -> int:
        """Bits [lo, hi) as an int."""
        if not 0 <= lo <= hi:
            raise RangeError(f"invalid bit segment [{lo}, {hi})")
        return (self.value >> lo) & ((1 << (hi - lo)) - 1)

    def bit_length(self) -> int:
        return self.value.bit_length()


# ============================================================================
# CODEC
# ============================================================================

def ceil_log2(n: int) -> int:
    """ceil(log2 n) for n >= 1."""
    if n < 1:
        raise RangeError(f"ceil_log2 needs n >= 1, got {n}")
    return (n - 1).bit_length()


@dataclass(frozen=True)
class SegmentCodec:
    """Vectors of `length` digits in radix 2^radix_bits."""

    radix_bits: int
    length: int

    def __post_init__(self):
        if self.radix_bits < 1 or self.length < 1:
            raise RangeError(f"radix_bits and length must be positive, got {self.radix_bits}, {self.length}")

    def _check_range(self, v: Sequence[int], bound_bits: Optional[int] = None) -> None:
        bits = self.radix_bits if bound_bits is None else bound_bits
        bad = [i for i, x in enumerate(v) if not 0 <= x < (1 << bits)]
        if bad:
            raise RangeError(f"entries at {bad} outside [0, 2^{bits})", bad)

    def encode(self, v: Sequence[int]) -> UnboundedNatural:
        """sum v_i 2^(k i)."""
        if len(v) != self.length:
            raise RangeError(f"expected {self.length} entries, got {len(v)}")
        self._check_range(v)
        acc = 0
        for x in reversed(v):
            acc = (acc << self.radix_bits) | x
        return UnboundedNatural(acc)

    def decode(self, N: UnboundedNatural) -> List[int]:
        """Base-2^k digits of N, least significant first."""
        if N.bit_length() > self.radix_bits * self.length:
            raise RangeError(f"{N.bit_length()}-bit value does not fit {self.length} digits of {self.radix_bits} bits")
        k = self.radix_bits
        return [N.segment(k * i, k * (i + 1)) for i in range(self.length)]


def encode(v: Sequence[int], codec: SegmentCodec) -> UnboundedNatural:
    return codec.encode(v)


def decode(N: UnboundedNatural, codec: SegmentCodec) -> List[int]:
    return codec.decode(N)


# ============================================================================
# ONE-MULTIPLICATION OPERATIONS
# ============================================================================

@dataclass(frozen=True)
class SegmentedProduct:
    """Operands of the single long multiplication, for reporting."""

    radix_bits: int
    left_bits: int
    right_bits: int
    product_bits: int


def _inner(u: Sequence[int], v: Sequence[int], k: int, ctr: OpCounter) -> Tuple[int, SegmentedProduct]:
    n = len(u)
    codec = SegmentCodec(k, n)
    left = codec.encode(u)
    right = codec.encode(list(reversed(v)))
    product = left.multiply(right, ctr)
    info = SegmentedProduct(k, left.bit_length(), right.bit_length(), product.bit_length())
    # cifra n-1 = sum u_i v_i
    return product.segment(k * (n - 1), k * n), info


def _check_vector(v: Sequence[int], bits: int, name: str) -> None:
    if not v:
        raise RangeError(f"{name} must be nonempty")
    bad = [i for i, x in enumerate(v) if not 0 <= x < (1 << bits)]
    if bad:
        raise RangeError(f"{name} entries at {bad} outside [0, 2^{bits})", bad)


def inner_product(
    u: Sequence[int],
    v: Sequence[int],
    g: int,
    h: int,
    ctr: Optional[OpCounter] = None
) -> int:
    """
    u^T v from one multiplication u(2^k) * v_rev(2^k), k = g + h + ceil(log2 n).

    Args:
        u: entries in [0, 2^g)
        v: entries in [0, 2^h)

    Raises:
        RangeError: length mismatch or entries out of range (with positions)
    """
    value, info = inner_product_report(u, v, g, h, ctr)
    logger.debug(f"inner_product: n={len(u)} k={info.radix_bits} operands {info.left_bits}/{info.right_bits} bits")
    return value


def inner_product_report(
    u: Sequence[int],
    v: Sequence[int],
    g: int,
    h: int,
    ctr: Optional[OpCounter] = None
) -> Tuple[int, SegmentedProduct]:
    """inner_product plus the operand bit-lengths of its long multiplication."""
    if len(u) != len(v):
        raise RangeError(f"length mismatch: {len(u)} vs {len(v)}")
    _check_vector(u, g, "u")
    _check_vector(v, h, "v")
    k = max(g + h + ceil_log2(len(u)), 1)
    return _inner(u, v, k, ctr if ctr is not None else OpCounter())


def segmented_sum(v: Sequence[int], h: int, ctr: Optional[OpCounter] = None) -> int:
    """
    sum v_i as the inner product with the all-ones vector, g = 0,
    k = h + ceil(log2 n).
    """
    value, _ = segmented_sum_report(v, h, ctr)
    return value


def segmented_sum_report(v: Sequence[int], h: int, ctr: Optional[OpCounter] = None) -> Tuple[int, SegmentedProduct]:
    _check_vector(v, h, "v")
    k = max(h + ceil_log2(len(v)), 1)
    return _inner([1] * len(v), v, k, ctr if ctr is not None else OpCounter())


def poly_mult_binseg(
    p: Sequence[int],
    q: Sequence[int],
    bound: int,
    ctr: Optional[OpCounter] = None
) -> List[int]:
    """
    Convolution of p and q (coefficients in [0, 2^bound)) from one long
    product, k = 2 bound + ceil(log2 min(len p, len q)).
    """
    coefficients, _ = poly_mult_report(p, q, bound, ctr)
    return coefficients


def poly_mult_report(
    p: Sequence[int],
    q: Sequence[int],
    bound: int,
    ctr: Optional[OpCounter] = None
) -> Tuple[List[int], SegmentedProduct]:
    _check_vector(p, bound, "p")
    _check_vector(q, bound, "q")
    k = max(2 * bound + ceil_log2(min(len(p), len(q))), 1)
    left = SegmentCodec(k, len(p)).encode(p)
    right = SegmentCodec(k, len(q)).encode(q)
    product = left.multiply(right, ctr if ctr is not None else OpCounter())
    info = SegmentedProduct(k, left.bit_length(), right.bit_length(), product.bit_length())
    return SegmentCodec(k, len(p) + len(q) - 1).decode(product), info


# ============================================================================
# SIGNED INPUTS
# ============================================================================

def shift_signed(v: Sequence[int], q: Optional[int] = None) -> Tuple[List[int], int]:
    """
    u_i = v_i - q with q = min(v) by default.

    Sum: sum v_i = sum u_i + n q.
    Inner products of two shifted vectors (offsets q, q'):
        sum v_i w_i = sum u_i u'_i + q' sum u_i + q sum u'_i + n q q'.
    """
    if not v:
        raise RangeError("vector must be nonempty")
    offset = min(v) if q is None else q
    bad = [i for i, x in enumerate(v) if x < offset]
    if bad:
        raise RangeError(f"entries at {bad} below offset {offset}", bad)
    return [x - offset for x in v], offset


def signed_sum(v: Sequence[int], ctr: Optional[OpCounter] = None) -> int:
    value, _ = signed_sum_report(v, ctr)
    return value


def signed_sum_report(v: Sequence[int], ctr: Optional[OpCounter] = None) -> Tuple[int, SegmentedProduct]:
    u, q = shift_signed(v)
    h = max(max(u).bit_length(), 1)
    core, info = segmented_sum_report(u, h, ctr)
    return core + len(v) * q, info


def signed_inner_product(v: Sequence[int], w: Sequence[int], ctr: Optional[OpCounter] = None) -> int:
    """Signed inner product: one long multiplication plus the shift correction."""
    value, _ = signed_inner_product_report(v, w, ctr)
    return value


def signed_inner_product_report(
    v: Sequence[int],
    w: Sequence[int],
    ctr: Optional[OpCounter] = None
) -> Tuple[int, SegmentedProduct]:
    if len(v) != len(w):
        raise RangeError(f"length mismatch: {len(v)} vs {len(w)}")
    u, q = shift_signed(v)
    u2, q2 = shift_signed(w)
    g = max(max(u).bit_length(), 1)
    h = max(max(u2).bit_length(), 1)
    k = max(g + h + ceil_log2(len(u)), 1)
    core, info = _inner(u, u2, k, ctr if ctr is not None else OpCounter())
    return core + q2 * sum(u) + q * sum(u2) + len(v) * q * q2, info


# ============================================================================
# BUDGETED DRIVER
# ============================================================================

def split_factor(n: int, g: int, h: int, budget_bits: int) -> int:
    """Smallest power of two s such that chunks of ceil(n/s) fit the product budget."""
    s = 1
    while True:
        chunk = -(-n // s)
        k = max(g + h + ceil_log2(chunk), 1)
        # prodotto di due operandi da chunk cifre di k bit
        if 2 * k * chunk <= budget_bits or chunk == 1:
            return s
        s *= 2


def inner_product_budgeted(
    u: Sequence[int],
    v: Sequence[int],
    g: int,
    h: int,
    budget_bits: Optional[int] = None,
    ctr: Optional[OpCounter] = None
) -> int:
    """
    inner_product that splits into subvector partial products when one long
    product would exceed budget_bits; partial results are summed.
    """
    budget = budget_bits if budget_bits is not None else settings.BINSEG_BUDGET_BITS
    if len(u) != len(v):
        raise RangeError(f"length mismatch: {len(u)} vs {len(v)}")
    s = split_factor(len(u), g, h, budget)
    if s > 1:
        logger.info(f"Splitting inner product of length {len(u)} into {s} parts (budget {budget} bits)")
    chunk = -(-len(u) // s)
    return sum(
        inner_product(u[i:i + chunk], v[i:i + chunk], g, h, ctr)
        for i in range(0, len(u), chunk)
    )


def word_length_sufficient(L: int, d: int) -> bool:
    """A product of two d-bit APA multiplicands (2d bits each) fits an L-bit word iff L >= 4d."""
    return L >= 4 * d
