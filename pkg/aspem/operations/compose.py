# aspem/operations/compose.py
"""
Cross-aspect composition and embedding persistence.

Node features concatenate a node's vectors over every aspect that contains
its type; edge features concatenate per-aspect Hadamard products over every
aspect that contains both endpoint types. Both follow bundle order.

Embedding file (text)::

    <aspect_name> <node_count> <d>
    <node_id>\\t<v1> <v2> ... <vd>

Coordinates are written with 9 significant digits. The binary variant is a
``.npz`` archive holding the same aspect name, ids and matrix. A bundle is a
directory with one file per aspect and ``manifest.json`` listing them in
order.
"""

import logging
from pathlib import Path
from typing import List, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from aspem.core.errors import BundleError, ParseError
from aspem.models.aspect import Aspect
from aspem.models.embedding import AspectBundle, BundleEntry, EdgeSpec, EmbeddingTable
from aspem.models.hin import SchemaGraph
from aspem.schemas.manifest import AspectEntry, BundleManifest, EdgeTypeEntry

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Format = Literal["text", "binary"]

MANIFEST_NAME = "manifest.json"


def node_embedding(bundle: AspectBundle, u: str) -> np.ndarray:
    """
    Concatenation of ``u``'s vectors over the bundle's aspects containing it.

    Raises:
        BundleError: if no aspect covers ``u``
    """
    parts = [entry.table.vector(u) for entry in bundle if u in entry.table]
    if not parts:
        raise BundleError(f"Node '{u}' is not covered by any aspect in the bundle")
    return np.concatenate(parts)


def edge_embedding(bundle: AspectBundle, u: str, v: str) -> np.ndarray:
    """
    Concatenation of ``f_u * f_v`` (elementwise) over aspects containing both.

    Raises:
        BundleError: if no aspect covers both nodes
    """
    parts = [
        entry.table.vector(u) * entry.table.vector(v)
        for entry in bundle
        if u in entry.table and v in entry.table
    ]
    if not parts:
        raise BundleError(f"Nodes '{u}' and '{v}' share no aspect in the bundle")
    return np.concatenate(parts)


def bundle_entry(schema: SchemaGraph, aspect: Aspect, table: EmbeddingTable) -> BundleEntry:
    """Pair a trained table with the type names of its aspect."""
    node_types = tuple(schema.node_types.name_of(t) for t in sorted(aspect.node_types))
    edge_types = tuple(
        EdgeSpec(
            name=schema.edge_types.name_of(r),
            source=schema.node_types.name_of(schema.decl(r).source),
            target=schema.node_types.name_of(schema.decl(r).target),
        )
        for r in sorted(aspect.edge_types)
    )
    return BundleEntry(name=aspect.name, node_types=node_types, edge_types=edge_types, table=table)


def build_bundle(
    schema: SchemaGraph, aspects: Sequence[Aspect], tables: Sequence[EmbeddingTable]
) -> AspectBundle:
    if len(aspects) != len(tables):
        raise BundleError(f"{len(aspects)} aspects but {len(tables)} tables")
    return AspectBundle([bundle_entry(schema, a, t) for a, t in zip(aspects, tables)])


# -- single tables ---------------------------------------------------------

def write_embedding(table: EmbeddingTable, path: PathLike, fmt: Format = "text") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "binary":
        with open(path, "wb") as handle:
            np.savez(
                handle,
                aspect=np.array(table.aspect),
                node_ids=np.array(table.node_ids, dtype=str),
                vectors=table.vectors,
            )
        return path
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{table.aspect} {len(table)} {table.dimension}\n")
        for node_id, vector in zip(table.node_ids, table.vectors):
            handle.write(node_id + "\t" + " ".join(f"{x:.9g}" for x in vector) + "\n")
    return path


def _read_binary(path: Path) -> EmbeddingTable:
    try:
        with np.load(path, allow_pickle=False) as data:
            aspect = str(data["aspect"])
            node_ids = [str(x) for x in data["node_ids"]]
            vectors = np.array(data["vectors"], dtype=np.float64)
    except (OSError, ValueError, KeyError) as exc:
        raise ParseError(f"Not a binary embedding file: {exc}", path=path) from None
    return EmbeddingTable(aspect, node_ids, vectors)


def _read_text(path: Path) -> EmbeddingTable:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.read().splitlines()
    except UnicodeDecodeError as exc:
        raise ParseError(f"Not valid UTF-8: {exc}", path=path) from None
    if not lines:
        raise ParseError("Empty embedding file", path=path, line=1)

    header = lines[0].split()
    if len(header) != 3:
        raise ParseError("Expected header '<aspect_name> <node_count> <d>'", path=path, line=1)
    aspect = header[0]
    try:
        count, dimension = int(header[1]), int(header[2])
    except ValueError:
        raise ParseError("Node count and dimension must be integers", path=path, line=1, field="header") from None
    if count < 0 or dimension < 1:
        raise ParseError(f"Invalid header sizes {count} x {dimension}", path=path, line=1, field="header")

    node_ids: List[str] = []
    vectors = np.empty((count, dimension), dtype=np.float64)
    seen = set()
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError("Expected '<node_id>\\t<v1> ... <vd>'", path=path, line=number)
        node_id, values = parts[0], parts[1].split()
        if len(values) != dimension:
            raise ParseError(
                f"Header dimension is {dimension} but row has {len(values)} values",
                path=path, line=number, field="vector",
            )
        if node_id in seen:
            raise ParseError(f"Duplicate node row '{node_id}'", path=path, line=number, field="node_id")
        if len(node_ids) == count:
            raise ParseError(f"More rows than the header's {count}", path=path, line=number)
        try:
            vectors[len(node_ids)] = [float(x) for x in values]
        except ValueError:
            raise ParseError("Non-numeric coordinate", path=path, line=number, field="vector") from None
        seen.add(node_id)
        node_ids.append(node_id)
    if len(node_ids) != count:
        raise ParseError(f"Header announces {count} rows but the file has {len(node_ids)}", path=path)
    return EmbeddingTable(aspect, node_ids, vectors)


def read_embedding(path: PathLike, fmt: Optional[Format] = None) -> EmbeddingTable:
    """Read one embedding file; the format defaults to binary for ``.npz`` files."""
    path = Path(path)
    if not path.exists():
        raise ParseError("File not found", path=path)
    if fmt is None:
        fmt = "binary" if path.suffix == ".npz" else "text"
    table = _read_binary(path) if fmt == "binary" else _read_text(path)
    if not table.is_finite():
        raise ParseError("Embedding contains non-finite values", path=path)
    return table.freeze()


# -- bundles ---------------------------------------------------------------

def _file_name(name: str, fmt: Format) -> str:
    return f"{name}.npz" if fmt == "binary" else f"{name}.emb"


def write_bundle(bundle: AspectBundle, directory: PathLike, fmt: Format = "text") -> Path:
    """Write every aspect table and the manifest; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for entry in bundle:
        file_name = _file_name(entry.name, fmt)
        write_embedding(entry.table, directory / file_name, fmt)
        entries.append(AspectEntry(
            name=entry.name,
            node_types=list(entry.node_types),
            edge_types=[EdgeTypeEntry(name=e.name, source=e.source, target=e.target) for e in entry.edge_types],
            dimension=entry.dimension,
            path=file_name,
            format=fmt,
        ))
    manifest = directory / MANIFEST_NAME
    manifest.write_text(BundleManifest(aspects=entries).model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"Wrote bundle {bundle.names} to {directory}")
    return manifest


def read_bundle(path: PathLike) -> AspectBundle:
    """
    Read a bundle from its manifest (or the directory holding it).

    Raises:
        BundleError: for an invalid manifest, a missing aspect file, or a
            table whose name or dimension disagrees with the manifest
        ParseError: for malformed embedding files
    """
    path = Path(path)
    manifest_path = path / MANIFEST_NAME if path.is_dir() else path
    if not manifest_path.exists():
        raise BundleError(f"Bundle manifest not found: {manifest_path}")
    try:
        manifest = BundleManifest.model_validate_json(manifest_path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise BundleError(f"Invalid bundle manifest {manifest_path}: {exc}") from None

    entries = []
    for item in manifest.aspects:
        file_path = manifest_path.parent / item.path
        if not file_path.exists():
            raise BundleError(f"Embedding file for aspect {item.name} is missing: {file_path}")
        table = read_embedding(file_path, item.format)
        if table.aspect != item.name:
            raise BundleError(f"File {file_path} holds aspect {table.aspect}, manifest says {item.name}")
        if table.dimension != item.dimension:
            raise BundleError(
                f"Aspect {item.name}: manifest dimension {item.dimension}, file dimension {table.dimension}"
            )
        entries.append(BundleEntry(
            name=item.name,
            node_types=tuple(item.node_types),
            edge_types=tuple(EdgeSpec(e.name, e.source, e.target) for e in item.edge_types),
            table=table,
        ))
    return AspectBundle(entries)

