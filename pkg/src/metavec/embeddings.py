"""Read, write and index word-embedding files in the common text and binary formats."""
from __future__ import annotations

import io
import logging
import math
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "EmbeddingSpace",
    "ParseError",
    "build_index",
    "detect_format",
    "load_embeddings",
    "parse_binary_embeddings",
    "parse_text_embeddings",
    "save_embeddings",
    "write_binary_embeddings",
    "write_text_embeddings",
]


class ParseError(ValueError):
    """Malformed embedding or dictionary input.

    Carries the 1-based ``line`` (text inputs) or 0-based byte ``offset``
    (binary inputs) where parsing failed, when known.
    """

    def __init__(self, message: str, *, line: int | None = None, offset: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        elif offset is not None:
            message = f"byte {offset}: {message}"
        super().__init__(message)
        self.line = line
        self.offset = offset


class EmbeddingSpace:
    """An ordered vocabulary paired with a row-aligned matrix of word vectors.

    Instances are immutable: the matrix is stored as a read-only float64
    array and may be shared freely across threads.
    """

    def __init__(self, tokens: Iterable[str], matrix, meta: str | None = None):
        tokens = tuple(tokens)
        matrix = np.array(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError(f"matrix must be 2-dimensional, got shape {matrix.shape}")
        if matrix.shape[0] != len(tokens):
            raise ValueError(
                f"matrix has {matrix.shape[0]} rows for {len(tokens)} tokens"
            )
        if matrix.shape[1] < 1:
            raise ValueError("vector dimensionality must be at least 1")
        if len(set(tokens)) != len(tokens):
            raise ValueError("tokens must be unique")
        if not np.isfinite(matrix).all():
            raise ValueError("matrix contains non-finite values")
        matrix.setflags(write=False)
        self.tokens = tokens
        self.matrix = matrix
        self.meta = meta
        self._index: dict[str, int] | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def index(self) -> dict[str, int]:
        """Token-to-row lookup, built lazily and cached."""
        if self._index is None:
            self._index = {token: i for i, token in enumerate(self.tokens)}
        return self._index

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def vector(self, token: str) -> np.ndarray:
        """Return the (read-only) vector for ``token``."""
        return self.matrix[self.index[token]]

    def __repr__(self) -> str:
        label = f" meta={self.meta!r}" if self.meta is not None else ""
        return f"<EmbeddingSpace {len(self)} tokens, dim {self.dim}{label}>"


def build_index(space: EmbeddingSpace) -> dict[str, int]:
    """Map every token of ``space`` to its row index."""
    return dict(space.index)


def _binary_stream(source: bytes | bytearray | memoryview | BinaryIO) -> BinaryIO:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return io.BytesIO(bytes(source))
    return source


def _parse_header_fields(fields: Sequence[str]) -> tuple[int, int] | None:
    if len(fields) == 2 and all(f.isdigit() for f in fields):
        return int(fields[0]), int(fields[1])
    return None


def parse_text_embeddings(
    source: bytes | BinaryIO,
    *,
    expect_header: bool | None = None,
    on_duplicate: str = "keep-first",
    max_vocab: int | None = None,
    meta: str | None = None,
) -> EmbeddingSpace:
    """Parse the text interchange format: optional ``vocab dim`` header,
    then one ``token v1 v2 ... vd`` line per word.

    ``expect_header=None`` auto-detects the header (a first line of exactly
    two integers); ``True`` requires it, ``False`` treats every line as data.
    ``on_duplicate`` is ``"keep-first"`` (drop and count repeats) or
    ``"error"``. ``max_vocab`` caps the number of tokens kept.
    """
    if on_duplicate not in ("keep-first", "error"):
        raise ValueError(f"unknown duplicate policy: {on_duplicate!r}")
    text = io.TextIOWrapper(_binary_stream(source), encoding="utf-8")

    dim: int | None = None
    header: tuple[int, int] | None = None
    tokens: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    duplicates = 0
    lineno = 0
    awaiting_header = expect_header is not False
    try:
        for lineno, line in enumerate(text, start=1):
            fields = line.split()
            if not fields:
                continue
            if awaiting_header:
                awaiting_header = False
                header = _parse_header_fields(fields)
                if expect_header and header is None:
                    raise ParseError("expected 'vocab dim' header", line=lineno)
                if header is not None:
                    dim = header[1]
                    if dim < 1:
                        raise ParseError(
                            "header dimensionality must be at least 1", line=lineno
                        )
                    continue
            token, values = fields[0], fields[1:]
            if dim is None:
                dim = len(values)
                if dim < 1:
                    raise ParseError("no vector values on first data line", line=lineno)
            if len(values) != dim:
                raise ParseError(
                    f"expected {dim} values, found {len(values)}", line=lineno
                )
            try:
                vector = [float(v) for v in values]
            except ValueError:
                raise ParseError("malformed number", line=lineno) from None
            if not all(math.isfinite(v) for v in vector):
                raise ParseError("non-finite value", line=lineno)
            if token in seen:
                if on_duplicate == "error":
                    raise ParseError(f"duplicate token {token!r}", line=lineno)
                duplicates += 1
                continue
            if max_vocab is not None and len(tokens) >= max_vocab:
                break
            seen.add(token)
            tokens.append(token)
            rows.append(vector)
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8: {exc}", line=lineno + 1) from None
    finally:
        text.detach()

    if dim is None:
        raise ParseError("empty stream")
    if duplicates:
        logger.warning("dropped %d duplicate token(s), kept first occurrence", duplicates)
    if header is not None and max_vocab is None and len(tokens) + duplicates != header[0]:
        logger.warning(
            "header announces %d words but %d data lines were read",
            header[0], len(tokens) + duplicates,
        )
    matrix = np.array(rows, dtype=np.float64) if rows else np.empty((0, dim))
    return EmbeddingSpace(tokens, matrix, meta=meta)


def parse_binary_embeddings(
    source: bytes | BinaryIO,
    *,
    on_duplicate: str = "keep-first",
    max_vocab: int | None = None,
    meta: str | None = None,
) -> EmbeddingSpace:
    """Parse the binary interchange format: ASCII ``vocab dim`` header line,
    then per word a space-terminated token followed by ``dim`` little-endian
    float32 values with no separator after them.

    Newline bytes before a token are tolerated for compatibility with files
    written by the original C tooling; canonical files contain none.
    """
    if on_duplicate not in ("keep-first", "error"):
        raise ValueError(f"unknown duplicate policy: {on_duplicate!r}")
    data = _binary_stream(source).read()

    nl = data.find(b"\n")
    if nl < 0:
        raise ParseError("missing 'vocab dim' header line", offset=0)
    header = _parse_header_fields(data[:nl].decode("ascii", errors="replace").split())
    if header is None:
        raise ParseError("malformed 'vocab dim' header line", offset=0)
    vocab_size, dim = header
    if dim < 1:
        raise ParseError("header dimensionality must be at least 1", offset=0)

    tokens: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    duplicates = 0
    pos = nl + 1
    vector_bytes = 4 * dim
    for _ in range(vocab_size):
        while pos < len(data) and data[pos] == 0x0A:
            pos += 1
        sp = data.find(b" ", pos)
        if sp < 0:
            raise ParseError("truncated stream while reading a token", offset=pos)
        try:
            token = data[pos:sp].decode("utf-8")
        except UnicodeDecodeError:
            raise ParseError("token is not valid UTF-8", offset=pos) from None
        start = sp + 1
        if start + vector_bytes > len(data):
            raise ParseError(
                f"truncated stream while reading the vector for {token!r}", offset=start
            )
        vector = np.frombuffer(data, dtype="<f4", count=dim, offset=start).astype(np.float64)
        pos = start + vector_bytes
        if not np.isfinite(vector).all():
            raise ParseError(f"non-finite value for token {token!r}", offset=start)
        if token in seen:
            if on_duplicate == "error":
                raise ParseError(f"duplicate token {token!r}", offset=sp + 1)
            duplicates += 1
            continue
        seen.add(token)
        tokens.append(token)
        rows.append(vector)
        if max_vocab is not None and len(tokens) >= max_vocab:
            break

    if duplicates:
        logger.warning("dropped %d duplicate token(s), kept first occurrence", duplicates)
    if max_vocab is None or len(tokens) < max_vocab:
        while pos < len(data) and data[pos] == 0x0A:
            pos += 1
        if pos != len(data):
            raise ParseError(
                f"header announces {vocab_size} words but {len(data) - pos} bytes remain",
                offset=pos,
            )
    matrix = np.array(rows, dtype=np.float64) if rows else np.empty((0, dim))
    return EmbeddingSpace(tokens, matrix, meta=meta)


def _check_writable_token(token: str) -> None:
    if not token or any(ch.isspace() for ch in token):
        raise ValueError(
            f"token {token!r} contains whitespace (or is empty) and cannot be"
            " represented in the interchange formats"
        )


def write_text_embeddings(space: EmbeddingSpace, precision: int = 17) -> bytes:
    """Serialize to the text format with ``precision`` significant digits.

    At the default full precision the emitted values parse back to the
    exact same float64 values.
    """
    if precision < 1:
        raise ValueError("precision must be at least 1")
    lines = [f"{len(space)} {space.dim}\n"]
    for token, row in zip(space.tokens, space.matrix):
        _check_writable_token(token)
        formatted = (
            np.format_float_positional(
                v, precision=precision, unique=True, fractional=False, trim="0"
            )
            for v in row
        )
        lines.append(token + " " + " ".join(formatted) + "\n")
    return "".join(lines).encode("utf-8")


def write_binary_embeddings(space: EmbeddingSpace) -> bytes:
    """Serialize to the binary format (header, then token + float32 values)."""
    out = [f"{len(space)} {space.dim}\n".encode("ascii")]
    with np.errstate(over="ignore"):
        narrowed = space.matrix.astype("<f4")
    if len(space) and not np.isfinite(narrowed).all():
        raise ValueError("matrix contains values outside single-precision range")
    for token, row in zip(space.tokens, narrowed):
        _check_writable_token(token)
        out.append(token.encode("utf-8") + b" " + row.tobytes())
    return b"".join(out)


def detect_format(path: str | Path) -> str:
    """Infer the on-disk format from the file name: ``.bin`` means binary."""
    return "binary" if Path(path).suffix == ".bin" else "text"


def load_embeddings(path: str | Path, format: str = "auto", **kwargs) -> EmbeddingSpace:
    """Load an embedding file; ``format`` is ``"text"``, ``"binary"`` or ``"auto"``."""
    path = Path(path)
    if format == "auto":
        format = detect_format(path)
    kwargs.setdefault("meta", path.name)
    with open(path, "rb") as stream:
        if format == "binary":
            return parse_binary_embeddings(stream, **kwargs)
        if format == "text":
            return parse_text_embeddings(stream, **kwargs)
    raise ValueError(f"unknown format: {format!r}")


def save_embeddings(
    space: EmbeddingSpace,
    path: str | Path,
    format: str = "auto",
    precision: int = 17,
) -> None:
    """Write an embedding file; ``format`` as in :func:`load_embeddings`."""
    path = Path(path)
    if format == "auto":
        format = detect_format(path)
    if format == "binary":
        payload = write_binary_embeddings(space)
    elif format == "text":
        payload = write_text_embeddings(space, precision=precision)
    else:
        raise ValueError(f"unknown format: {format!r}")
    path.write_bytes(payload)
