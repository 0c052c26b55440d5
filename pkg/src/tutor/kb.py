"""Course knowledge base: chunking, embedding, and a persistent vector index.

Documents arrive as plain text (markup already stripped). A greedy splitter
cuts each body into character-budgeted chunks, preferring paragraph breaks,
then sentence ends, then a hard cut. Each chunk after the first carries up to
`overlap` characters of the previous chunk's tail as a prefix, so stripping
those prefixes reconstructs the original body exactly.

The index is an exact brute-force cosine store persisted as line-delimited
JSON with a trailing checksum line. Course corpora are small (hundreds of
chunks), so exactness beats approximate structures here.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptIndex, DimensionMismatch, EmptyDocument, VersionUnsupported
from .provider import EmbeddingProvider

DOCUMENT_KINDS = ("slides", "code_example", "assignment", "explanatory_text")

INDEX_FORMAT = "tutor-vector-index"
INDEX_FORMAT_VERSION = 1

_SENTENCE_END_RE = re.compile(r"[.!?][)\"']*\s")


@dataclass(frozen=True)
class CourseDocument:
    """One ingested course material, body as plain text."""

    doc_id: str
    title: str
    kind: str
    body: str
    source_path: str = ""

    def __post_init__(self):
        if self.kind not in DOCUMENT_KINDS:
            raise ValueError(f"unknown document kind {self.kind!r}")


@dataclass
class CourseChunk:
    """An embedded fragment of course material; the retrieval unit."""

    chunk_id: str
    doc_id: str
    seq: int
    text: str
    embedding: np.ndarray | None = None


@dataclass(frozen=True)
class ChunkingPolicy:
    """Greedy character-budget splitting parameters."""

    chunk_size: int = 1200
    overlap: int = 200

    def __post_init__(self):
        if self.chunk_size <= 0:
            raise ValueError("chunk_size must be positive")
        if not 0 <= self.overlap < self.chunk_size:
            raise ValueError("overlap must satisfy 0 <= overlap < chunk_size")


def chunk_id_for(doc_id: str, seq: int) -> str:
    """Deterministic chunk identifier: parent doc id plus zero-padded ordinal."""
    return f"{doc_id}:{seq:04d}"


def _core_boundaries(body: str, policy: ChunkingPolicy) -> list[tuple[int, int]]:
    """Split positions of the non-overlapping core spans covering the body."""
    spans: list[tuple[int, int]] = []
    pos = 0
    size = policy.chunk_size
    while pos < len(body):
        if len(body) - pos <= size:
            spans.append((pos, len(body)))
            break
        window = body[pos:pos + size]
        cut = window.rfind("\n\n")
        if cut != -1:
            end = pos + cut + 2
        else:
            sentence_ends = [m.end() for m in _SENTENCE_END_RE.finditer(window)]
            end = pos + sentence_ends[-1] if sentence_ends else pos + size
        spans.append((pos, end))
        pos = end
    return spans


def chunk_document(doc: CourseDocument, policy: ChunkingPolicy | None = None) -> list[CourseChunk]:
    """Split a document into overlapping chunks (embeddings unset).

    Postcondition: `reassemble(chunks, policy)` equals `doc.body` exactly, and
    every chunk text is at most chunk_size + overlap characters.
    """
    policy = policy or ChunkingPolicy()
    if not doc.body.strip():
        raise EmptyDocument(f"document {doc.doc_id!r} has a blank body")
    chunks = []
    for seq, (start, end) in enumerate(_core_boundaries(doc.body, policy)):
        lead = 0 if seq == 0 else min(policy.overlap, start)
        chunks.append(CourseChunk(
            chunk_id=chunk_id_for(doc.doc_id, seq),
            doc_id=doc.doc_id,
            seq=seq,
            text=doc.body[start - lead:end],
        ))
    return chunks


def reassemble(chunks: list[CourseChunk], policy: ChunkingPolicy) -> str:
    """Inverse of chunk_document: strip the carried overlaps and concatenate."""
    parts = []
    pos = 0
    for chunk in sorted(chunks, key=lambda c: c.seq):
        lead = 0 if chunk.seq == 0 else min(policy.overlap, pos)
        core = chunk.text[lead:]
        parts.append(core)
        pos += len(core)
    return "".join(parts)


def embed_text(text: str, provider: EmbeddingProvider) -> np.ndarray:
    """Embed one text into a unit-norm vector of the provider's dimension."""
    if not text:
        raise ValueError("cannot embed empty text")
    vec = provider.embed(text)
    if vec.shape != (provider.dimension,):
        raise DimensionMismatch(
            f"provider returned dimension {vec.shape}, expected ({provider.dimension},)")
    return vec


class VectorIndex:
    """Exact cosine index over embedded course chunks.

    Read-mostly: concurrent reads are safe on the immutable snapshot; any
    mutation happens under the lock and bumps `version`.
    """

    def __init__(self, dimension: int, chunks: list[CourseChunk] | None = None, version: int = 1):
        self.dimension = dimension
        self.chunks = sorted(chunks or [], key=lambda c: c.chunk_id)
        self.version = version
        self._lock = threading.Lock()
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.chunks)

    @property
    def matrix(self) -> np.ndarray:
        """Row-stacked embeddings aligned with `self.chunks` (cached)."""
        if self._matrix is None:
            with self._lock:
                if self._matrix is None:
                    if not self.chunks:
                        self._matrix = np.zeros((0, self.dimension), dtype=np.float64)
                    else:
                        self._matrix = np.vstack([c.embedding for c in self.chunks])
        return self._matrix

    def structurally_equal(self, other: "VectorIndex") -> bool:
        if (self.dimension, self.version, len(self)) != (other.dimension, other.version, len(other)):
            return False
        for a, b in zip(self.chunks, other.chunks):
            if (a.chunk_id, a.doc_id, a.seq, a.text) != (b.chunk_id, b.doc_id, b.seq, b.text):
                return False
            if not np.array_equal(a.embedding, b.embedding):
                return False
        return True


def build_index(chunks: list[CourseChunk], provider: EmbeddingProvider) -> VectorIndex:
    """Embed any unembedded chunks and assemble a fresh index (version 1)."""
    embedded = []
    for chunk in chunks:
        if chunk.embedding is None:
            vec = embed_text(chunk.text, provider)
        else:
            vec = np.asarray(chunk.embedding, dtype=np.float64)
            if vec.shape != (provider.dimension,):
                raise DimensionMismatch(
                    f"chunk {chunk.chunk_id!r} has dimension {vec.shape[0] if vec.ndim else 0}, "
                    f"provider expects {provider.dimension}")
        embedded.append(replace_embedding(chunk, vec))
    return VectorIndex(dimension=provider.dimension, chunks=embedded, version=1)


def replace_embedding(chunk: CourseChunk, vec: np.ndarray) -> CourseChunk:
    return CourseChunk(chunk_id=chunk.chunk_id, doc_id=chunk.doc_id,
                       seq=chunk.seq, text=chunk.text, embedding=vec)


def _dump_line(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def save_index(index: VectorIndex, path: str | Path) -> None:
    """Persist the index: header line, one record per chunk, trailing checksum."""
    lines = [_dump_line({
        "format": INDEX_FORMAT,
        "format_version": INDEX_FORMAT_VERSION,
        "dimension": index.dimension,
        "index_version": index.version,
        "count": len(index.chunks),
    })]
    for chunk in index.chunks:
        lines.append(_dump_line({
            "chunk_id": chunk.chunk_id,
            "doc_id": chunk.doc_id,
            "seq": chunk.seq,
            "text": chunk.text,
            "embedding": [float(x) for x in chunk.embedding],
        }))
    body = "".join(line + "\n" for line in lines)
    checksum = hashlib.sha256(body.encode("utf-8")).hexdigest()
    body += _dump_line({"checksum": f"sha256:{checksum}"}) + "\n"
    Path(path).write_text(body, encoding="utf-8")


def load_index(path: str | Path) -> VectorIndex:
    """Load a persisted index, verifying format version and checksum."""
    raw = Path(path).read_text(encoding="utf-8")
    lines = raw.splitlines()
    if len(lines) < 2:
        raise CorruptIndex("index file too short")
    try:
        header = json.loads(lines[0])
        trailer = json.loads(lines[-1])
    except json.JSONDecodeError as exc:
        raise CorruptIndex(f"unparseable header or trailer: {exc}") from exc
    if header.get("format") != INDEX_FORMAT or "format_version" not in header:
        raise CorruptIndex("missing format header")
    if header["format_version"] != INDEX_FORMAT_VERSION:
        raise VersionUnsupported(f"format version {header['format_version']} not supported")
    expected = trailer.get("checksum", "")
    body = "".join(line + "\n" for line in lines[:-1])
    actual = "sha256:" + hashlib.sha256(body.encode("utf-8")).hexdigest()
    if expected != actual:
        raise CorruptIndex("checksum mismatch")
    records = lines[1:-1]
    if len(records) != header["count"]:
        raise CorruptIndex(f"expected {header['count']} records, found {len(records)}")
    dimension = header["dimension"]
    chunks = []
    for line in records:
        rec = json.loads(line)
        vec = np.asarray(rec["embedding"], dtype=np.float64)
        if vec.shape != (dimension,):
            raise CorruptIndex(f"chunk {rec['chunk_id']!r} has wrong dimension")
        chunks.append(CourseChunk(chunk_id=rec["chunk_id"], doc_id=rec["doc_id"],
                                  seq=rec["seq"], text=rec["text"], embedding=vec))
    return VectorIndex(dimension=dimension, chunks=chunks, version=header["index_version"])


# --- directory ingestion ----------------------------------------------------

_KIND_BY_DIR = {
    "slides": "slides",
    "code_examples": "code_example",
    "code": "code_example",
    "assignments": "assignment",
    "text": "explanatory_text",
}

_TEXT_SUFFIXES = {".txt", ".md", ".py"}


def load_materials(materials_dir: str | Path) -> list[CourseDocument]:
    """Read every plain-text material under a directory tree.

    Document kind comes from the top-level subdirectory name when it matches a
    known bucket, else from the file extension (.py counts as a code example).
    """
    root = Path(materials_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"materials directory not found: {root}")
    docs = []
    for file in sorted(root.rglob("*")):
        if not file.is_file() or file.suffix.lower() not in _TEXT_SUFFIXES:
            continue
        rel = file.relative_to(root)
        top = rel.parts[0] if len(rel.parts) > 1 else ""
        kind = _KIND_BY_DIR.get(top)
        if kind is None:
            kind = "code_example" if file.suffix.lower() == ".py" else "explanatory_text"
        body = file.read_text(encoding="utf-8")
        if not body.strip():
            continue
        docs.append(CourseDocument(
            doc_id=rel.as_posix(),
            title=file.stem.replace("_", " "),
            kind=kind,
            body=body,
            source_path=str(file),
        ))
    return docs


def ingest_materials(materials_dir: str | Path, provider: EmbeddingProvider,
                     policy: ChunkingPolicy | None = None) -> VectorIndex:
    """Chunk and embed every material under a directory into one index."""
    policy = policy or ChunkingPolicy()
    chunks: list[CourseChunk] = []
    for doc in load_materials(materials_dir):
        chunks.extend(chunk_document(doc, policy))
    return build_index(chunks, provider)
