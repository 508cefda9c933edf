"""Matrix Market files, seeded problem generation and run configuration."""
from __future__ import annotations

import dataclasses
import json
import os
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InputError, IoError, ParseError
from .iteration import EigenProblem, InnerConfig, seeded_vector
from .oracle import OracleConfig
from .perturbation import PerturbationConfig
from .search import SearchConfig

KINDS = ("complex-general", "real-symmetric")
_HEADER = "%%MatrixMarket matrix array complex general"


def _format_real(x: float) -> str:
    s = "%.17g" % x
    if not any(c in s for c in ".eni"):
        s += ".0"
    return s


def write_matrix(path, A) -> None:
    """Dense complex Matrix Market array file, column-major, 17 significant digits."""
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2:
        raise DimensionError(f"expected a 2-D array, got shape {A.shape}")
    lines = [_HEADER, f"{A.shape[0]} {A.shape[1]}"]
    for z in A.ravel(order="F"):
        lines.append(f"{_format_real(z.real)} {_format_real(z.imag)}")
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _parse_float(token, lineno):
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"not a number: {token!r}", lineno) from None


def read_matrix(path) -> np.ndarray:
    """Read a square dense ``array`` Matrix Market file (complex or real, general)."""
    try:
        with open(path, encoding="ascii", errors="replace") as fh:
            text = fh.read().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not text:
        raise ParseError("empty file", 1)

    header = text[0].split()
    if len(header) != 5 or header[0].lower() != "%%matrixmarket":
        raise ParseError("missing %%MatrixMarket header", 1)
    obj, fmt, field_, symmetry = (h.lower() for h in header[1:])
    if obj != "matrix":
        raise ParseError(f"object {obj!r} is not supported, only 'matrix'", 1)
    if fmt != "array":
        raise ParseError(f"array format required, got {fmt!r}", 1)
    if field_ not in ("complex", "real"):
        raise ParseError(f"field {field_!r} is not supported, use complex or real", 1)
    if symmetry != "general":
        raise ParseError(f"symmetry {symmetry!r} is not supported, use general", 1)
    width = 2 if field_ == "complex" else 1

    body = [(i + 1, line.split()) for i, line in enumerate(text) if i > 0]
    body = [(k, toks) for k, toks in body if toks and not toks[0].startswith("%")]
    if not body:
        raise ParseError("missing size line", len(text))
    size_line, size = body[0]
    if len(size) != 2:
        raise ParseError("size line must hold two integers 'rows cols'", size_line)
    try:
        rows, cols = int(size[0]), int(size[1])
    except ValueError:
        raise ParseError(f"bad size line {' '.join(size)!r}", size_line) from None
    if rows < 1 or cols < 1:
        raise ParseError(f"matrix size {rows}x{cols} must be positive", size_line)
    if rows != cols:
        raise DimensionError(f"{path}: matrix is {rows}x{cols}, expected square")

    entries = body[1:]
    if len(entries) != rows * cols:
        last = entries[-1][0] if entries else size_line
        raise ParseError(f"expected {rows * cols} entries, found {len(entries)}", last)
    values = np.empty(rows * cols, dtype=np.complex128)
    for idx, (lineno, toks) in enumerate(entries):
        if len(toks) != width:
            raise ParseError(f"expected {width} value(s) per entry, found {len(toks)}", lineno)
        re_ = _parse_float(toks[0], lineno)
        im_ = _parse_float(toks[1], lineno) if width == 2 else 0.0
        values[idx] = complex(re_, im_)
    return np.ascontiguousarray(values.reshape((rows, cols), order="F"))


def gen_random(n: int, seed: int, kind: str = "complex-general"):
    """Reproducible ``(T, V)`` test problem.

    ``complex-general`` draws real and imaginary parts from U[-1, 1] in the
    order T.real, T.imag, V.real, V.imag.  ``real-symmetric`` draws two real
    U[-1, 1] matrices A, B and returns their symmetric parts.
    """
    n = int(n)
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    if kind not in KINDS:
        raise InputError(f"kind must be one of {KINDS}, got {kind!r}")
    rng = np.random.default_rng(seed)
    if kind == "complex-general":
        T = rng.uniform(-1, 1, (n, n)) + 1j * rng.uniform(-1, 1, (n, n))
        V = rng.uniform(-1, 1, (n, n)) + 1j * rng.uniform(-1, 1, (n, n))
        return T, V
    A = rng.uniform(-1, 1, (n, n))
    B = rng.uniform(-1, 1, (n, n))
    return ((A + A.T) / 2).astype(np.complex128), ((B + B.T) / 2).astype(np.complex128)


_SEEDED = re.compile(r"^seeded(?:\((-?\d+)\)|:(-?\d+))$")


def parse_vector_spec(spec: str):
    """``"ones"`` -> ``("ones", None)``; ``"seeded(3)"`` or ``"seeded:3"`` -> ``("seeded", 3)``."""
    spec = str(spec).strip()
    if spec == "ones":
        return "ones", None
    m = _SEEDED.match(spec)
    if m is None:
        raise InputError(f"vector spec must be 'ones' or 'seeded(<int>)', got {spec!r}")
    return "seeded", int(m.group(1) or m.group(2))


def make_vector(spec, n) -> np.ndarray:
    kind, seed = parse_vector_spec(spec)
    if kind == "ones":
        return np.ones(n, dtype=np.complex128)
    return seeded_vector(n, seed)


@dataclass(frozen=True)
class ProblemFileSet:
    t_path: str
    v_path: str
    lambda_ex: float
    r_spec: str = "ones"
    u0_spec: str = "seeded(0)"

    def load(self):
        """``(EigenProblem, u0)`` from the files and vector specs."""
        for p in (self.t_path, self.v_path):
            if not os.path.isfile(p):
                raise IoError(f"no such file: {p}")
        T = read_matrix(self.t_path)
        V = read_matrix(self.v_path)
        if T.shape != V.shape:
            raise DimensionError(f"T is {T.shape[0]}x{T.shape[1]} but V is "
                                 f"{V.shape[0]}x{V.shape[1]}")
        n = T.shape[0]
        problem = EigenProblem(T, V, self.lambda_ex, make_vector(self.r_spec, n))
        return problem, make_vector(self.u0_spec, n)


_SECTIONS = {
    "inner": InnerConfig,
    "search": SearchConfig,
    "perturbation": PerturbationConfig,
    "oracle": OracleConfig,
}


@dataclass(frozen=True)
class RunConfig:
    """Every solver setting in one document; missing keys take module defaults."""

    inner: InnerConfig = field(default_factory=InnerConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise InputError("configuration must be a JSON object")
        unknown = set(doc) - set(_SECTIONS)
        if unknown:
            raise InputError(f"unknown configuration section(s): {', '.join(sorted(unknown))}")
        parts = {}
        for name, kind in _SECTIONS.items():
            section = doc.get(name, {})
            if not isinstance(section, dict):
                raise InputError(f"section {name!r} must be an object")
            allowed = {f.name for f in dataclasses.fields(kind)}
            bad = set(section) - allowed
            if bad:
                raise InputError(f"unknown key(s) in {name!r}: {', '.join(sorted(bad))}")
            values = dict(section)
            if name == "oracle" and values.get("box") is not None:
                values["box"] = tuple(float(x) for x in values["box"])
            try:
                parts[name] = kind(**values)
            except TypeError as exc:
                raise InputError(f"section {name!r}: {exc}") from None
        return cls(**parts)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise IoError(f"cannot read {path}: {exc.strerror or exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        out = {}
        for name in _SECTIONS:
            d = dataclasses.asdict(getattr(self, name))
            if d.get("box") is not None:
                d["box"] = list(d["box"])
            out[name] = d
        return out

    def override(self, section: str, key: str, value) -> "RunConfig":
        """Copy with one setting replaced (the CLI ``--set section.key=value``)."""
        if section not in _SECTIONS:
            raise InputError(f"unknown configuration section {section!r}")
        doc = self.to_dict()
        if key not in doc[section]:
            raise InputError(f"unknown key {key!r} in section {section!r}")
        doc[section][key] = value
        return RunConfig.from_dict(doc)
