"""Line-oriented space-definition files.

The format is deliberately dumb: block headers in square brackets,
``key = value`` lines, ``#`` comments, numbers only.  Example::

    # the round sphere with a deliberately broken metric
    space = sphere2

    [metric]
    gram = [1 0; 0 2]

    [connection]
    alpha = canonical_first

Values are vectors ``(a, b, c)``, matrices ``[r11 r12; r21 r22]`` (rows
separated by semicolons), lists thereof separated by whitespace, index
quadruples ``(k, i, j, value)`` with 1-based indices, or bare words.
Structure constants given as quadruples are completed antisymmetrically;
conflicting duplicates are rejected.  Unknown keys or blocks and non-finite
literals are schema errors.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .algebra import StructuredLieAlgebra, expand_in_matrix_basis
from .catalog import (
    SpaceBundle,
    diagnostic_battery,
    grassmann_like,
    group_as_space,
    so_n,
    sphere2,
    stiefel,
)
from .connection import AlphaMap, canonical_first, canonical_second, levi_civita_alpha
from .reductive import (
    MetricOnM,
    build_decomposition,
    normal_decomposition,
    symmetric_decomposition,
)

__all__ = ["DefFileError", "SpaceDefinition", "parse_definition", "build_space"]

_KNOWN = {
    None: {"space"},
    "algebra": {"name", "dim", "structure_constants", "matrix_basis"},
    "decomposition": {"h_basis", "m_basis", "sigma", "biinvariant_gram", "h_generators"},
    "metric": {"gram"},
    "connection": {"alpha"},
}

_ALPHA_KEYWORDS = ("canonical_first", "canonical_second", "levi_civita")


class DefFileError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


@dataclass
class SpaceDefinition:
    """Parsed but not yet numerically validated definition file."""

    space: str | None = None
    algebra: dict = field(default_factory=dict)
    decomposition: dict = field(default_factory=dict)
    metric: dict = field(default_factory=dict)
    connection: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)  # (block, key) -> line number


def parse_definition(text: str) -> SpaceDefinition:
    defn = SpaceDefinition()
    block = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise DefFileError("unterminated block header", lineno, len(raw.rstrip()))
            name = line[1:-1].strip()
            if name not in _KNOWN or name is None:
                raise DefFileError(f"unknown block [{name}]", lineno, 1)
            block = name
            continue
        if "=" not in line:
            raise DefFileError("expected 'key = value'", lineno, 1)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN[block]:
            where = f"block [{block}]" if block else "top level"
            raise DefFileError(f"unknown key {key!r} in {where}", lineno,
                               raw.index(key) + 1)
        target = defn.__dict__[block] if block else None
        if block is None:
            if defn.space is not None:
                raise DefFileError("duplicate 'space' key", lineno, 1)
            defn.space = value
        else:
            if key in target:
                raise DefFileError(f"duplicate key {key!r}", lineno, 1)
            target[key] = value
        defn.lines[(block, key)] = lineno
    return defn


def _floats(text: str, lineno: int):
    out = []
    for token in re.split(r"[,\s]+", text.strip()):
        if not token:
            continue
        try:
            v = float(token)
        except ValueError:
            raise DefFileError(f"not a number: {token!r}", lineno) from None
        if not math.isfinite(v):
            raise DefFileError(f"non-finite literal {token!r}", lineno)
        out.append(v)
    return out


def _consume_groups(text: str, open_ch: str, close_ch: str, lineno: int):
    groups = []
    rest = text
    pattern = re.compile(re.escape(open_ch) + r"([^" + re.escape(open_ch)
                         + re.escape(close_ch) + r"]*)" + re.escape(close_ch))
    pos = 0
    leftover = []
    for match in pattern.finditer(text):
        leftover.append(text[pos:match.start()])
        groups.append(match.group(1))
        pos = match.end()
    leftover.append(text[pos:])
    if "".join(leftover).strip():
        raise DefFileError(
            f"malformed value near {''.join(leftover).strip()[:20]!r}", lineno)
    if not groups:
        raise DefFileError("expected at least one bracketed group", lineno)
    return groups


def _vectors(text: str, lineno: int) -> list[list[float]]:
    return [_floats(g, lineno) for g in _consume_groups(text, "(", ")", lineno)]


def _matrices(text: str, lineno: int) -> list[np.ndarray]:
    mats = []
    for g in _consume_groups(text, "[", "]", lineno):
        rows = [r for r in g.split(";")]
        data = [_floats(r, lineno) for r in rows]
        widths = {len(r) for r in data}
        if len(widths) != 1:
            raise DefFileError("matrix rows have unequal lengths", lineno)
        mats.append(np.array(data))
    return mats


def _quadruples(text: str, lineno: int):
    out = []
    for g in _consume_groups(text, "(", ")", lineno):
        vals = _floats(g, lineno)
        if len(vals) != 4:
            raise DefFileError("expected (k, i, j, value) quadruples", lineno)
        k, i, j = (int(v) for v in vals[:3])
        if not all(float(int(v)) == v for v in vals[:3]):
            raise DefFileError("indices must be integers", lineno)
        out.append((k, i, j, vals[3]))
    return out


_SPACE_RE = re.compile(
    r"^(sphere2|so\((\d+)\)|stiefel\((\d+)\s*,\s*(\d+)\)|grassmann\((\d+)\s*,\s*(\d+)\))$"
)


def _named_space(name: str, lineno: int) -> SpaceBundle:
    m = _SPACE_RE.match(name.replace(" ", "")) or _SPACE_RE.match(name)
    if not m:
        raise DefFileError(
            f"unknown named space {name!r} "
            "(expected sphere2, so(n), stiefel(n,k) or grassmann(n,k))", lineno)
    if m.group(1) == "sphere2":
        return sphere2()
    if m.group(2):
        return group_as_space(so_n(int(m.group(2))), name=f"so({m.group(2)})/{{e}}")
    if m.group(3):
        return stiefel(int(m.group(3)), int(m.group(4)))
    return grassmann_like(int(m.group(5)), int(m.group(6)))


def _constants_from_quadruples(dim: int, quads, lineno: int) -> np.ndarray:
    c = np.zeros((dim, dim, dim))
    seen = {}
    for k, i, j, v in quads:
        for idx, label in ((k, "k"), (i, "i"), (j, "j")):
            if not 1 <= idx <= dim:
                raise DefFileError(f"index {label}={idx} out of range 1..{dim}", lineno)
        if i == j and v != 0.0:
            raise DefFileError(
                f"entry {(k, i, j)} with equal bracket slots must vanish", lineno)
        key = (k - 1, i - 1, j - 1)
        mirror = (k - 1, j - 1, i - 1)
        if key in seen and seen[key] != v:
            raise DefFileError(f"conflicting duplicate entry for {(k, i, j)}", lineno)
        if mirror in seen and seen[mirror] != -v:
            raise DefFileError(
                f"entry {(k, i, j)} conflicts with its antisymmetric mirror", lineno)
        seen[key] = v
        seen[mirror] = -v
        c[key] = v
        c[mirror] = -v
    return c


def _build_algebra(defn: SpaceDefinition) -> StructuredLieAlgebra:
    block = defn.algebra
    line = lambda key: defn.lines.get(("algebra", key), 0)
    if "dim" not in block:
        raise DefFileError("[algebra] needs a 'dim' key", line("name") or 1)
    dim_vals = _floats(block["dim"], line("dim"))
    if len(dim_vals) != 1 or dim_vals[0] != int(dim_vals[0]) or dim_vals[0] < 1:
        raise DefFileError("'dim' must be a positive integer", line("dim"))
    dim = int(dim_vals[0])
    name = block.get("name", "user-algebra")

    basis = None
    if "matrix_basis" in block:
        mats = _matrices(block["matrix_basis"], line("matrix_basis"))
        if len(mats) != dim:
            raise DefFileError(
                f"matrix_basis has {len(mats)} matrices but dim = {dim}",
                line("matrix_basis"))
        basis = np.array(mats)

    if "structure_constants" in block:
        quads = _quadruples(block["structure_constants"], line("structure_constants"))
        c = _constants_from_quadruples(dim, quads, line("structure_constants"))
    elif basis is not None:
        comms = np.array([
            [basis[i] @ basis[j] - basis[j] @ basis[i] for j in range(dim)]
            for i in range(dim)
        ])
        coeffs = expand_in_matrix_basis(basis, comms.reshape(dim * dim, *basis.shape[1:]),
                                        what="commutator")
        c = coeffs.reshape(dim, dim, dim).transpose(2, 0, 1)
    else:
        raise DefFileError("[algebra] needs structure_constants or matrix_basis",
                           line("dim"))
    try:
        return StructuredLieAlgebra(c, basis, name=name)
    except ValueError as exc:
        raise DefFileError(f"invalid algebra: {exc}", line("dim")) from exc


def _build_decomposition(defn: SpaceDefinition, algebra: StructuredLieAlgebra):
    block = defn.decomposition
    line = lambda key: defn.lines.get(("decomposition", key), 0)
    metric = None
    if not block:
        dec = build_decomposition(algebra, [], np.eye(algebra.dim))
        return dec, metric
    if "h_generators" in block and "m_basis" not in block:
        raise DefFileError("h_generators only combine with explicit bases",
                           line("h_generators"))
    if "sigma" in block:
        if "m_basis" in block or "biinvariant_gram" in block:
            raise DefFileError("sigma excludes m_basis/biinvariant_gram", line("sigma"))
        sigma = _matrices(block["sigma"], line("sigma"))[0]
        dec = symmetric_decomposition(algebra, sigma)
    elif "biinvariant_gram" in block:
        if "m_basis" in block:
            raise DefFileError("biinvariant_gram excludes m_basis", line("biinvariant_gram"))
        if "h_basis" not in block:
            raise DefFileError("biinvariant_gram needs h_basis", line("biinvariant_gram"))
        gram = _matrices(block["biinvariant_gram"], line("biinvariant_gram"))[0]
        h = _vectors(block["h_basis"], line("h_basis"))
        dec, metric = normal_decomposition(algebra, gram, h)
    elif "m_basis" in block:
        h = _vectors(block["h_basis"], line("h_basis")) if "h_basis" in block else []
        m = _vectors(block["m_basis"], line("m_basis"))
        gens = None
        if "h_generators" in block:
            gens = _matrices(block["h_generators"], line("h_generators"))
        dec = build_decomposition(algebra, h, m, h_generators=gens)
    else:
        raise DefFileError("[decomposition] needs m_basis, sigma or biinvariant_gram",
                           min(defn.lines.get(("decomposition", k), 1) for k in block))
    return dec, metric


def build_space(defn: SpaceDefinition, force: bool = False):
    """Turn a parsed definition into (bundle, alpha).

    ``alpha`` is None when the file has no connection block.  With
    ``force=True`` an explicit alpha that fails the invariance check is
    constructed anyway and marked tainted.
    """
    if defn.space is not None and (defn.algebra or defn.decomposition):
        raise DefFileError("a named space excludes [algebra]/[decomposition] blocks",
                           defn.lines.get((None, "space")))
    if defn.space is not None:
        bundle = _named_space(defn.space, defn.lines.get((None, "space"), 1))
        algebra, dec = bundle.algebra, bundle.dec
        metric = bundle.metric
        name = bundle.name
    else:
        if not defn.algebra:
            raise DefFileError("definition needs either 'space = ...' or an [algebra] block")
        algebra = _build_algebra(defn)
        dec, metric = _build_decomposition(defn, algebra)
        name = algebra.name

    if defn.metric:
        lineno = defn.lines.get(("metric", "gram"), 0)
        gram = _matrices(defn.metric["gram"], lineno)[0]
        if gram.shape != (dec.N, dec.N):
            raise DefFileError(
                f"gram is {gram.shape[0]}x{gram.shape[1]} but dim m = {dec.N}", lineno)
        try:
            metric = MetricOnM(gram)
        except ValueError as exc:
            raise DefFileError(f"invalid metric: {exc}", lineno) from exc

    alpha = None
    if defn.connection:
        lineno = defn.lines.get(("connection", "alpha"), 0)
        specifier = defn.connection["alpha"].strip()
        if specifier in _ALPHA_KEYWORDS:
            if specifier == "canonical_first":
                alpha = canonical_first(dec)
            elif specifier == "canonical_second":
                alpha = canonical_second(dec)
            else:
                if metric is None:
                    raise DefFileError("levi_civita needs a metric", lineno)
                try:
                    alpha = levi_civita_alpha(dec, metric)
                except ValueError as exc:
                    if not force:
                        raise DefFileError(str(exc), lineno) from exc
                    alpha = levi_civita_alpha(dec, metric, unchecked=True)
        elif specifier.startswith("("):
            quads = _quadruples(specifier, lineno)
            coeffs = np.zeros((dec.N, dec.N, dec.N))
            for k, i, j, v in quads:
                for idx in (k, i, j):
                    if not 1 <= idx <= dec.N:
                        raise DefFileError(f"alpha index {idx} out of range 1..{dec.N}",
                                           lineno)
                coeffs[k - 1, i - 1, j - 1] = v
            try:
                alpha = AlphaMap(dec, coeffs, label="explicit", unchecked=force)
            except ValueError as exc:
                raise DefFileError(f"invalid alpha: {exc}", lineno) from exc
        else:
            raise DefFileError(
                f"alpha must be one of {_ALPHA_KEYWORDS} or a coefficient list", lineno)

    suggested = [alpha] if alpha is not None else [canonical_first(dec)]
    bundle = SpaceBundle(
        algebra=algebra, dec=dec, metric=metric,
        suggested_alphas=suggested,
        provenance=f"definition file ({'named: ' + defn.space if defn.space else 'explicit blocks'})",
        name=name,
    )
    return bundle, alpha


def check_space(bundle: SpaceBundle, tolerances=None):
    """Battery reports plus the global pass flag (conjunction of mandatory checks)."""
    reports = diagnostic_battery(bundle, tolerances)
    passed = all(r.passed for r in reports if r.mandatory)
    return reports, passed
