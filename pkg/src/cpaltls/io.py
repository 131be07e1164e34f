"""File formats: dense tensors (text and binary), Kruskal models, trace CSVs.

Dense tensor text::

    N
    I_0 I_1 ... I_{N-1}
    values in colex order, whitespace separated, any line layout

Dense tensor binary: ``b"DTEN"``, ``uint32`` N, N ``uint32`` extents, then the
colex ``float64`` payload, all little-endian.

Model text::

    N
    I_0 ... I_{N-1}
    R
    lambda_0 ... lambda_{R-1}
    one line per factor with its entries in column-major order
"""

import csv
import datetime
import io as _io
import struct

import numpy as np

from .diagnostics import ConvergenceTrace, TraceRecord
from .errors import ParseError
from .model import KruskalModel
from .tensor import MAX_ORDER, from_colex, to_colex

MAGIC = b"DTEN"
TRACE_FIELDS = ("iteration", "epsilon", "rel_error", "weight_error", "phase", "wall_seconds")


class _Tokens:
    """Whitespace tokens with 1-based line/column positions."""

    def __init__(self, text):
        self.items = []
        self.lines = text.splitlines()
        for ln, line in enumerate(self.lines, start=1):
            col = 0
            for tok in line.split():
                col = line.index(tok, col)
                self.items.append((tok, ln, col + 1))
                col += len(tok)
        self.pos = 0

    def end_position(self):
        if not self.lines:
            return 1, 1
        return len(self.lines), len(self.lines[-1]) + 1

    def line_tokens(self, line_no):
        return [t for t in self.items if t[1] == line_no]

    def take(self, what):
        if self.pos >= len(self.items):
            raise ParseError(f"unexpected end of input, expected {what}", *self.end_position())
        tok = self.items[self.pos]
        self.pos += 1
        return tok

    def remaining(self):
        return self.items[self.pos:]


def _int(tok, what, minimum=0):
    text, ln, col = tok
    try:
        value = int(text)
    except ValueError:
        raise ParseError(f"expected integer {what}, got {text!r}", ln, col) from None
    if value < minimum:
        raise ParseError(f"{what} must be at least {minimum}, got {value}", ln, col)
    return value


def _float(tok, what="value"):
    text, ln, col = tok
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"expected real {what}, got {text!r}", ln, col) from None


def _header(tokens):
    n_tok = tokens.take("order N")
    order = _int(n_tok, "order N", minimum=1)
    if order > MAX_ORDER:
        raise ParseError(f"order {order} exceeds {MAX_ORDER}", n_tok[1], n_tok[2])
    ext_line = n_tok[1] + 1
    ext_toks = tokens.line_tokens(ext_line)
    if len(ext_toks) != order:
        col = ext_toks[min(len(ext_toks), order) - 1][2] if ext_toks else 1
        raise ParseError(f"expected {order} extents on this line, found {len(ext_toks)}",
                         ext_line, col)
    return tuple(_int(tokens.take("extent"), "extent", minimum=1) for _ in range(order))


def _floats(tokens, count, what):
    values = np.empty(count)
    for i in range(count):
        values[i] = _float(tokens.take(what), what)
    return values


def _no_trailing(tokens):
    extra = tokens.remaining()
    if extra:
        raise ParseError(f"unexpected trailing token {extra[0][0]!r}", extra[0][1], extra[0][2])


def parse_tensor_text(text):
    tokens = _Tokens(text)
    shape = _header(tokens)
    values = _floats(tokens, int(np.prod(shape)), "tensor entry")
    _no_trailing(tokens)
    return from_colex(shape, values)


def format_tensor_text(x):
    x = np.asarray(x, dtype=np.float64)
    lines = [str(x.ndim), " ".join(str(e) for e in x.shape)]
    lines += [repr(float(v)) for v in to_colex(x)]
    return "\n".join(lines) + "\n"


def parse_tensor_binary(data):
    if data[:4] != MAGIC:
        raise ParseError("missing DTEN magic", 1, 1)
    if len(data) < 8:
        raise ParseError("truncated header", 1, 5)
    (order,) = struct.unpack_from("<I", data, 4)
    if not 1 <= order <= MAX_ORDER:
        raise ParseError(f"order {order} out of range", 1, 5)
    head = 8 + 4 * order
    if len(data) < head:
        raise ParseError("truncated extents", 1, 9)
    shape = struct.unpack_from(f"<{order}I", data, 8)
    if min(shape) < 1:
        raise ParseError("extents must be positive", 1, 9)
    count = int(np.prod(shape))
    if len(data) != head + 8 * count:
        raise ParseError(f"payload has {len(data) - head} bytes, expected {8 * count}",
                         1, head + 1)
    values = np.frombuffer(data, dtype="<f8", count=count, offset=head)
    return from_colex(shape, values.astype(np.float64))


def format_tensor_binary(x):
    x = np.asarray(x, dtype=np.float64)
    head = MAGIC + struct.pack(f"<I{x.ndim}I", x.ndim, *x.shape)
    return head + to_colex(x).astype("<f8").tobytes()


def read_tensor(path):
    """Read a dense tensor, detecting the binary format by its magic bytes."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] == MAGIC:
        return parse_tensor_binary(data)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as err:
        raise ParseError(f"not a text tensor file: {err.reason}", 1, 1) from None
    return parse_tensor_text(text)


def write_tensor(path, x, binary=False):
    if binary:
        with open(path, "wb") as fh:
            fh.write(format_tensor_binary(x))
    else:
        with open(path, "w") as fh:
            fh.write(format_tensor_text(x))


def format_model(model):
    lines = [str(model.ndim), " ".join(str(e) for e in model.shape), str(model.rank),
             " ".join(repr(float(w)) for w in model.weights)]
    for f in model.factors:
        lines.append(" ".join(repr(float(v)) for v in f.ravel(order="F")))
    return "\n".join(lines) + "\n"


def parse_model(text):
    tokens = _Tokens(text)
    shape = _header(tokens)
    rank = _int(tokens.take("rank R"), "rank R", minimum=1)
    weights = _floats(tokens, rank, "weight")
    factors = tuple(
        _floats(tokens, extent * rank, "factor entry").reshape((extent, rank), order="F")
        for extent in shape
    )
    _no_trailing(tokens)
    return KruskalModel(weights, factors)


def write_model(path, model):
    with open(path, "w") as fh:
        fh.write(format_model(model))


def read_model(path):
    with open(path) as fh:
        return parse_model(fh.read())


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return "" if np.isnan(value) else repr(float(value))
    return str(value)


def format_trace_csv(trace, timestamp=True, extra_metadata=None):
    """CSV text for ``trace``.

    Metadata goes into leading ``# key: value`` comment lines. With
    ``timestamp=False`` the ``# created:`` line is omitted and the
    ``wall_seconds`` column is left empty so reruns are byte-identical.
    """
    out = _io.StringIO()
    meta = dict(trace.metadata)
    if extra_metadata:
        meta.update(extra_metadata)
    if trace.stop_reason is not None:
        meta.setdefault("stop_reason", trace.stop_reason)
    if timestamp:
        now = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
        out.write(f"# created: {now}\n")
    for key, value in meta.items():
        out.write(f"# {key}: {_cell(value)}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRACE_FIELDS)
    for r in trace.records:
        writer.writerow([
            r.iteration, _cell(r.epsilon), _cell(r.relative_error), _cell(r.weight_error),
            r.phase, _cell(r.wall_seconds) if timestamp else "",
        ])
    return out.getvalue()


def write_trace_csv(path, trace, timestamp=True, extra_metadata=None):
    with open(path, "w", newline="") as fh:
        fh.write(format_trace_csv(trace, timestamp, extra_metadata))


def parse_trace_csv(text):
    """Inverse of :func:`format_trace_csv`; metadata values come back as strings."""
    meta = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
        elif line:
            body.append(line)
    reader = csv.DictReader(body)
    if tuple(reader.fieldnames or ()) != TRACE_FIELDS:
        raise ParseError(f"unexpected header {reader.fieldnames}", 1, 1)

    def num(s):
        return None if s == "" else float(s)

    trace = ConvergenceTrace()
    trace.stop_reason = meta.pop("stop_reason", None)
    meta.pop("created", None)
    trace.metadata = meta
    for row in reader:
        trace.append(TraceRecord(
            iteration=int(row["iteration"]),
            relative_error=num(row["rel_error"]),
            epsilon=num(row["epsilon"]),
            weight_error=num(row["weight_error"]),
            phase=row["phase"],
            wall_seconds=num(row["wall_seconds"]) or 0.0,
        ))
    return trace


def read_trace_csv(path):
    with open(path) as fh:
        return parse_trace_csv(fh.read())
