"""
Formato testuale per algoritmi bilineari, decomposizioni trilineari e APA.

Grammatica (una direttiva per riga, token separati da spazi):

    # fastmm bilinear v1 | # fastmm trilinear v1 | # fastmm apa v1
    name NAME
    shape m k n                      (singolo MM con famiglie di default)
    problem FA FB FC m k n           (una riga per problema, target disgiunti)
    tensor dimA dimB dimC            (problemi bilineari generici, seguiti da)
    labels A|B|C label...
    T alpha beta gamma coef
    scale s                          (solo apa)
    degree d                         (solo apa)
    rank r
    U q alpha coef                   coefficiente della forma su A del termine q
    V q beta coef                    forma su B
    W q gamma coef                   uscita gamma (bilineare) / forma su D (trilineare)

I coefficienti razionali si scrivono num/den; per apa ogni coefficiente e'
la lista c0 c1 ... cd del polinomio in lambda. Righe vuote e commenti
(#) dopo l'header sono ignorati. dump(load(text)) == text per ogni testo
prodotto da dump.
"""

from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from loguru import logger

from app.models.errors import FastMMError, ParseError
from app.services.apa import APAAlgorithm, LambdaPoly
from app.services.bilinear_engine import (
    BilinearAlgorithm,
    MMProblem,
    TargetTensor,
    TrilinearDecomposition,
    dense,
    sparse,
)


HEADERS = {
    "bilinear": "# fastmm bilinear v1",
    "trilinear": "# fastmm trilinear v1",
    "apa": "# fastmm apa v1",
}

Serializable = Union[BilinearAlgorithm, TrilinearDecomposition, APAAlgorithm]


def _fraction(c: Fraction) -> str:
    return f"{c.numerator}/{c.denominator}"


# ============================================================================
# DUMP
# ============================================================================

def _target_lines(target: TargetTensor) -> List[str]:
    if target.problems:
        default = ("a", "b", "d") if target.trace else ("a", "b", "c")
        if len(target.problems) == 1 and target.problems[0].families == default:
            return ["shape %d %d %d" % target.problems[0].shape]
        return [
            f"problem {' '.join(p.families)} {p.m} {p.k} {p.n}" for p in target.problems
        ]
    lines = ["tensor %d %d %d" % target.dims]
    lines.append("labels A " + " ".join(target.labels_a))
    lines.append("labels B " + " ".join(target.labels_b))
    lines.append("labels C " + " ".join(target.labels_c))
    for (alpha, beta, gamma), coef in sorted(target.coefficients.items()):
        lines.append(f"T {alpha} {beta} {gamma} {_fraction(Fraction(coef))}")
    return lines


def dump(obj: Serializable) -> str:
    """Text form of a bilinear algorithm, trilinear decomposition or APA algorithm."""
    if isinstance(obj, BilinearAlgorithm):
        lines = [HEADERS["bilinear"], f"name {obj.name}"] + _target_lines(obj.target)
        lines.append(f"rank {obj.rank}")
        for q, (f1, f2, f3) in enumerate(obj.terms()):
            lines.extend(f"U {q} {i} {_fraction(c)}" for i, c in f1)
            lines.extend(f"V {q} {i} {_fraction(c)}" for i, c in f2)
            lines.extend(f"W {q} {i} {_fraction(c)}" for i, c in f3)
    elif isinstance(obj, TrilinearDecomposition):
        lines = [HEADERS["trilinear"], f"name {obj.name}"] + _target_lines(obj.target)
        lines.append(f"rank {obj.rank}")
        for q, (f1, f2, f3) in enumerate(obj.term_list):
            lines.extend(f"U {q} {i} {_fraction(c)}" for i, c in f1)
            lines.extend(f"V {q} {i} {_fraction(c)}" for i, c in f2)
            lines.extend(f"W {q} {i} {_fraction(c)}" for i, c in f3)
    elif isinstance(obj, APAAlgorithm):
        lines = [HEADERS["apa"], f"name {obj.name}"] + _target_lines(obj.target)
        lines.append(f"scale {obj.scale}")
        lines.append(f"degree {obj.degree}")
        lines.append(f"rank {obj.border_rank}")
        for q, (f1, f2, f3) in enumerate(obj.term_list):
            lines.extend(f"U {q} {i} {p}" for i, p in f1)
            lines.extend(f"V {q} {i} {p}" for i, p in f2)
            lines.extend(f"W {q} {i} {p}" for i, p in f3)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    return "\n".join(lines) + "\n"


def save(obj: Serializable, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(dump(obj), encoding="utf-8")
    logger.info(f"Saved {obj.name} to {path}")
    return path


# ============================================================================
# LOAD
# ============================================================================

class _Reader:
    """Accumulates directives of one file; errors carry 1-based line numbers."""

    def __init__(self, kind: str):
        self.kind = kind
        self.name: Optional[str] = None
        self.problems: List[MMProblem] = []
        self.shape: Optional[Tuple[int, int, int]] = None
        self.tensor_dims: Optional[Tuple[int, int, int]] = None
        self.labels: Dict[str, List[str]] = {}
        self.tensor: Dict[Tuple[int, int, int], Fraction] = {}
        self.rank: Optional[int] = None
        self.scale = 0
        self.degree = 0
        self.entries: Dict[str, Dict[Tuple[int, int], object]] = {"U": {}, "V": {}, "W": {}}

    def _ints(self, tokens: List[str], count: int, lineno: int) -> List[int]:
        if len(tokens) != count:
            raise ParseError(f"expected {count} integers, got {len(tokens)}", lineno)
        try:
            return [int(t) for t in tokens]
        except ValueError:
            raise ParseError(f"invalid integer in {' '.join(tokens)!r}", lineno)

    def _coef(self, tokens: List[str], lineno: int):
        try:
            if self.kind == "apa":
                if not tokens:
                    raise ValueError("empty polynomial")
                return LambdaPoly(tuple(int(t) for t in tokens))
            if len(tokens) != 1:
                raise ValueError("one coefficient expected")
            return Fraction(tokens[0])
        except (ValueError, ZeroDivisionError) as e:
            raise ParseError(f"invalid coefficient {' '.join(tokens)!r}: {e}", lineno)

    def feed(self, keyword: str, tokens: List[str], lineno: int) -> None:
        if keyword == "name":
            if len(tokens) != 1:
                raise ParseError("name takes one token", lineno)
            self.name = tokens[0]
        elif keyword == "shape":
            self.shape = tuple(self._ints(tokens, 3, lineno))
        elif keyword == "problem":
            if len(tokens) != 6:
                raise ParseError("problem takes three families and m k n", lineno)
            m, k, n = self._ints(tokens[3:], 3, lineno)
            try:
                self.problems.append(MMProblem(m, k, n, tuple(tokens[:3])))
            except FastMMError as e:
                raise ParseError(str(e), lineno)
        elif keyword == "tensor":
            self.tensor_dims = tuple(self._ints(tokens, 3, lineno))
        elif keyword == "labels":
            if not tokens or tokens[0] not in ("A", "B", "C"):
                raise ParseError("labels needs a group A, B or C", lineno)
            self.labels[tokens[0]] = tokens[1:]
        elif keyword == "T":
            alpha, beta, gamma = self._ints(tokens[:3], 3, lineno)
            try:
                self.tensor[(alpha, beta, gamma)] = Fraction(tokens[3])
            except (IndexError, ValueError, ZeroDivisionError):
                raise ParseError("T needs alpha beta gamma coef", lineno)
        elif keyword == "rank":
            (self.rank,) = self._ints(tokens, 1, lineno)
        elif keyword == "scale" and self.kind == "apa":
            (self.scale,) = self._ints(tokens, 1, lineno)
        elif keyword == "degree" and self.kind == "apa":
            (self.degree,) = self._ints(tokens, 1, lineno)
        elif keyword in self.entries:
            if self.rank is None:
                raise ParseError(f"{keyword} line before rank", lineno)
            q, index = self._ints(tokens[:2], 2, lineno)
            if not 0 <= q < self.rank:
                raise ParseError(f"term index {q} outside rank {self.rank}", lineno)
            self.entries[keyword][(q, index)] = (self._coef(tokens[2:], lineno), lineno)
        else:
            raise ParseError(f"unknown directive {keyword!r}", lineno)

    def target(self, lineno: int) -> TargetTensor:
        trace = self.kind != "bilinear"
        if self.shape is not None:
            return TargetTensor.trace_mm(*self.shape) if trace else TargetTensor.mm(*self.shape)
        if self.problems:
            return TargetTensor.disjoint(self.problems, trace=trace)
        if self.tensor_dims is not None:
            labels = [self.labels.get(g, []) for g in ("A", "B", "C")]
            if tuple(len(l) for l in labels) != self.tensor_dims:
                raise ParseError(f"labels do not match tensor dims {self.tensor_dims}", lineno)
            return TargetTensor(tuple(labels[0]), tuple(labels[1]), tuple(labels[2]), dict(self.tensor), (), trace)
        raise ParseError("missing shape, problem or tensor directive", lineno)

    def forms(self, target: TargetTensor):
        dims = dict(zip("UVW", target.dims))
        forms = {key: [dict() for _ in range(self.rank)] for key in "UVW"}
        for key, entries in self.entries.items():
            for (q, index), (coef, lineno) in entries.items():
                if not 0 <= index < dims[key]:
                    raise ParseError(f"{key} index {index} outside [0, {dims[key]})", lineno)
                forms[key][q][index] = coef
        return forms


def loads(text: str) -> Serializable:
    """
    Parse any of the three formats (chosen by the header line).

    Raises:
        ParseError: with the 1-based line number of the first problem
    """
    lines = text.splitlines()
    kind = None
    reader = None
    last = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        last = lineno
        if kind is None:
            if not line:
                continue
            for key, header in HEADERS.items():
                if line == header:
                    kind = key
            if kind is None:
                raise ParseError(f"missing or unknown header {line!r}", lineno)
            reader = _Reader(kind)
            continue
        if not line or line.startswith("#"):
            continue
        keyword, *tokens = line.split()
        reader.feed(keyword, tokens, lineno)

    if reader is None:
        raise ParseError("empty file", max(last, 1))
    if reader.rank is None:
        raise ParseError("missing rank", last)

    target = reader.target(last)
    forms = reader.forms(target)
    name = reader.name or kind

    if kind == "bilinear":
        try:
            U = [dense(sparse(f), target.dims[0]) for f in forms["U"]]
            V = [dense(sparse(f), target.dims[1]) for f in forms["V"]]
            W = [[forms["W"][q].get(gamma, Fraction(0)) for q in range(reader.rank)] for gamma in range(target.dims[2])]
            return BilinearAlgorithm.from_coefficients(name, target, U, V, W)
        except FastMMError as e:
            raise ParseError(str(e), last)
    if kind == "trilinear":
        terms = tuple(
            (sparse(forms["U"][q]), sparse(forms["V"][q]), sparse(forms["W"][q]))
            for q in range(reader.rank)
        )
        return TrilinearDecomposition(name, target, terms)

    poly = lambda f: tuple((i, p) for i, p in sorted(f.items()) if not p.is_zero())
    terms = tuple(
        (poly(forms["U"][q]), poly(forms["V"][q]), poly(forms["W"][q]))
        for q in range(reader.rank)
    )
    return APAAlgorithm(name, target, terms, reader.scale, reader.degree)


def load(path: Union[str, Path]) -> Serializable:
    path = Path(path)
    obj = loads(path.read_text(encoding="utf-8"))
    logger.debug(f"Loaded {type(obj).__name__} {obj.name} from {path}")
    return obj
