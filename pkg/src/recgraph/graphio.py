"""Plain-text graph files.

One record per line, tab separated::

    #params<TAB>{"m": 100, ...}
    #nodes<TAB>n_users<TAB>n_items<TAB>total_users<TAB>total_items
    U<TAB>user<TAB>item<TAB>rating      training edge
    H<TAB>user<TAB>item<TAB>rating      holdout edge

Both header lines are optional when reading; other ``#`` lines are comments.
User and item ids are separate dense non-negative integer spaces.
"""

from __future__ import annotations

import io
import json
import os
from pathlib import Path

from recgraph.generator import Bigraph, GeneratorParams, ParameterError


class GraphFormatError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def dumps(graph: Bigraph) -> str:
    out = io.StringIO()
    _write(graph, out)
    return out.getvalue()


def _write(graph: Bigraph, out):
    if graph.params is not None:
        out.write(f"#params\t{graph.params.to_json()}\n")
    out.write(
        f"#nodes\t{graph.n_users}\t{graph.n_items}\t{graph.total_users}\t{graph.total_items}\n"
    )
    out.writelines(f"U\t{a}\t{c}\t{r}\n" for a, c, r in graph.edges)
    out.writelines(f"H\t{a}\t{c}\t{r}\n" for a, c, r in graph.holdout_edges)


def write_graph(graph: Bigraph, destination) -> None:
    """Write ``graph`` to a path or an open text stream."""
    if isinstance(destination, (str, os.PathLike)):
        path = Path(destination)
        tmp = path.with_name(path.name + ".tmp")
        try:
            with open(tmp, "w", encoding="ascii", newline="\n") as fh:
                _write(graph, fh)
            os.replace(tmp, path)
        finally:
            if tmp.exists():
                tmp.unlink()
    else:
        _write(graph, destination)


def loads(text: str) -> Bigraph:
    return _read(io.StringIO(text))


def read_graph(source) -> Bigraph:
    """Parse a graph from a path or an open text stream."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="ascii") as fh:
            return _read(fh)
    return _read(source)


def _read(lines) -> Bigraph:
    params = None
    nodes = None
    edges = []
    holdout = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            tag, _, rest = line.partition("\t")
            if tag == "#params":
                try:
                    params = GeneratorParams.from_dict(json.loads(rest))
                except (json.JSONDecodeError, TypeError, ParameterError) as exc:
                    raise GraphFormatError(lineno, f"bad params header: {exc}") from None
            elif tag == "#nodes":
                try:
                    nodes = [int(x) for x in rest.split("\t")]
                except ValueError:
                    nodes = None
                if nodes is None or len(nodes) != 4 or min(nodes) < 0:
                    raise GraphFormatError(lineno, "bad nodes header")
            continue
        parts = line.split("\t")
        if len(parts) != 4 or parts[0] not in ("U", "H"):
            raise GraphFormatError(lineno, f"expected 'U|H<TAB>user<TAB>item<TAB>rating', got {raw!r}")
        try:
            user, item, rating = int(parts[1]), int(parts[2]), int(parts[3])
        except ValueError:
            raise GraphFormatError(lineno, f"non-integer field in {raw!r}") from None
        if user < 0 or item < 0:
            raise GraphFormatError(lineno, "ids must be non-negative")
        if params is not None and rating not in params.rating_values:
            raise GraphFormatError(lineno, f"rating {rating} outside {list(params.rating_values)}")
        (edges if parts[0] == "U" else holdout).append((user, item, rating))
    if not edges:
        raise GraphFormatError(0, "graph has no training edges")
    kwargs = {}
    if nodes is not None:
        kwargs = dict(zip(("n_users", "n_items", "total_users", "total_items"), nodes))
    try:
        return Bigraph.from_edges(edges, holdout, params=params, **kwargs)
    except ValueError as exc:
        raise GraphFormatError(0, str(exc)) from None
