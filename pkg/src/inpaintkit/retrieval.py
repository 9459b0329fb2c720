"""Similar-image retrieval: exact cosine kNN over image descriptors.

The index is an exhaustive in-memory table (no approximate structures).
Test-time retrieval is two-step: coarse-inpaint the masked query, extract a
descriptor from the coarse result, then kNN-search the database. Train-time
use precomputes every image's top-k neighbors from its stored descriptor.

Descriptor extraction itself is pluggable: any pure callable mapping an
image to a fixed-dimension vector works. Two implementations ship: a tiny
built-in grayscale-thumbnail descriptor (so the whole pipeline runs with no
ML stack) and a lookup over precomputed per-id vectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, DuplicateId, ZeroVector

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class Hit:
    id: str
    similarity: float


class DescriptorIndex:
    """Immutable id -> descriptor table with precomputed norms."""

    def __init__(self, ids: list[str], vectors: np.ndarray):
        self.ids = ids
        self.vectors = vectors
        self.norms = np.linalg.norm(vectors, axis=1)
        self._pos = {i: n for n, i in enumerate(ids)}

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def vector_of(self, id_: str) -> np.ndarray:
        return self.vectors[self._pos[id_]]


def build_index(entries) -> DescriptorIndex:
    """Build an index from (id, vector) pairs, validating as it goes."""
    ids: list[str] = []
    rows = []
    seen = set()
    dim = None
    for id_, vec in entries:
        if id_ in seen:
            raise DuplicateId(f"duplicate id {id_!r}")
        seen.add(id_)
        v = np.asarray(vec, dtype=np.float64).ravel()
        if dim is None:
            dim = v.size
        elif v.size != dim:
            raise DimensionMismatch(
                f"vector for {id_!r} has dim {v.size}, expected {dim}")
        if not np.all(np.isfinite(v)):
            raise ZeroVector(f"vector for {id_!r} has non-finite entries")
        if not np.any(v):
            raise ZeroVector(f"vector for {id_!r} is all zeros")
        ids.append(str(id_))
        rows.append(v)
    if not rows:
        raise ValueError("cannot build an index from zero entries")
    return DescriptorIndex(ids, np.vstack(rows))


def cosine_topk(index: DescriptorIndex, query, k: int,
                exclude=frozenset()) -> list[Hit]:
    """Exact top-k by cosine similarity; ties broken by ascending id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    q = np.asarray(query, dtype=np.float64).ravel()
    if q.size != index.dim:
        raise DimensionMismatch(
            f"query dim {q.size} does not match index dim {index.dim}")
    qnorm = float(np.linalg.norm(q))
    if qnorm == 0.0 or not np.isfinite(qnorm):
        raise ZeroVector("query vector must be finite with nonzero norm")
    sims = np.clip((index.vectors @ q) / (index.norms * qnorm), -1.0, 1.0)
    excluded = set(exclude)
    candidates = [i for i, id_ in enumerate(index.ids) if id_ not in excluded]
    candidates.sort(key=lambda i: (-sims[i], index.ids[i]))
    return [Hit(index.ids[i], float(sims[i])) for i in candidates[:k]]


def precompute_similars(index: DescriptorIndex, k: int) -> dict[str, list[str]]:
    """Top-k neighbor ids for every indexed image, self always excluded."""
    if len(index) < 2:
        raise ValueError("precompute needs at least 2 indexed images")
    out: dict[str, list[str]] = {}
    for pos, id_ in enumerate(index.ids):
        hits = cosine_topk(index, index.vectors[pos], k, exclude={id_})
        out[id_] = [h.id for h in hits]
    return out


@dataclass
class TwoStepResult:
    hits: list[Hit]
    coarse_image: np.ndarray


def two_step_retrieve(image: np.ndarray, mask: np.ndarray, coarse,
                      extractor, index: DescriptorIndex,
                      k: int) -> TwoStepResult:
    """Coarse-inpaint the masked query, then kNN-search its descriptor.

    ``coarse`` is any (image, mask) -> image inpainter filling every hole;
    the intermediate coarse image is returned for logging.
    """
    coarse_img = coarse(image, mask)
    query = extractor(coarse_img)
    return TwoStepResult(hits=cosine_topk(index, query, k),
                         coarse_image=coarse_img)


def assemble_network_input(masked: np.ndarray, mask: np.ndarray,
                           sims: list[np.ndarray]) -> np.ndarray:
    """Stack inputs channel-first: 3 masked-image channels, 1 mask channel,
    then 3 channels per similar image, giving 3 + 1 + 3k total.

    Hole pixels of the masked image are zeroed before stacking.
    """
    masked = np.asarray(masked, dtype=np.float64)
    m = np.asarray(mask, dtype=np.float64)
    if masked.ndim != 3 or masked.shape[2] != 3:
        raise DimensionMismatch(f"expected (H, W, 3) image, got {masked.shape}")
    h, w = masked.shape[:2]
    if m.shape != (h, w):
        raise DimensionMismatch(f"mask {m.shape} does not match image ({h}, {w})")
    channels = [np.moveaxis(masked * m[:, :, None], 2, 0), m[None, :, :]]
    for i, sim in enumerate(sims):
        s = np.asarray(sim, dtype=np.float64)
        if s.shape != masked.shape:
            raise DimensionMismatch(
                f"similar image {i} has shape {s.shape}, expected {masked.shape}")
        channels.append(np.moveaxis(s, 2, 0))
    return np.concatenate(channels, axis=0)


class GrayscaleThumbExtractor:
    """Built-in descriptor: grid x grid block-averaged luminance, flattened.

    Deliberately trivial; it exists so the retrieval pipeline runs end to
    end without any external feature files.
    """

    def __init__(self, grid: int = 8):
        self.grid = grid

    @property
    def dim(self) -> int:
        return self.grid * self.grid

    def __call__(self, image: np.ndarray) -> np.ndarray:
        img = np.asarray(image, dtype=np.float64)
        if img.ndim != 3 or img.shape[2] != 3:
            raise DimensionMismatch(f"expected (H, W, 3) image, got {img.shape}")
        r, g, b = LUMA_WEIGHTS
        luma = r * img[:, :, 0] + g * img[:, :, 1] + b * img[:, :, 2]
        h, w = luma.shape
        ys = np.linspace(0, h, self.grid + 1).astype(int)
        xs = np.linspace(0, w, self.grid + 1).astype(int)
        out = np.empty((self.grid, self.grid))
        for i in range(self.grid):
            for j in range(self.grid):
                block = luma[ys[i]:ys[i + 1], xs[j]:xs[j + 1]]
                out[i, j] = block.mean() if block.size else 0.0
        return out.ravel()


class PrecomputedExtractor:
    """Lookup of precomputed per-id descriptors (train-time parity).

    Called with an image *id* rather than pixels; the heavy extraction
    happened offline, this object only replays it.
    """

    def __init__(self, table: dict[str, np.ndarray]):
        self.table = {k: np.asarray(v, dtype=np.float64).ravel()
                      for k, v in table.items()}

    def __call__(self, key: str) -> np.ndarray:
        return self.table[key]

    @classmethod
    def from_files(cls, vectors_path, ids_path) -> "PrecomputedExtractor":
        ids, vectors = read_descriptor_table(vectors_path, ids_path)
        return cls(dict(zip(ids, vectors)))


def write_descriptor_table(vectors_path, ids_path, ids, vectors) -> None:
    """Write the on-disk descriptor table.

    ``vectors_path``: one JSON header line {"count": N, "dim": D} followed
    by N*D little-endian float32 values. ``ids_path``: JSON array of the N
    ids in row order.
    """
    arr = np.asarray(vectors, dtype="<f4")
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected (N, D) vectors, got {arr.shape}")
    n, d = arr.shape
    if len(ids) != n:
        raise DimensionMismatch(f"{len(ids)} ids for {n} vectors")
    header = json.dumps({"count": n, "dim": d}).encode("ascii") + b"\n"
    with open(vectors_path, "wb") as fh:
        fh.write(header)
        fh.write(arr.tobytes(order="C"))
    Path(ids_path).write_text(json.dumps(list(ids)) + "\n")


def read_descriptor_table(vectors_path, ids_path) -> tuple[list[str], np.ndarray]:
    """Read a descriptor table written by :func:`write_descriptor_table`."""
    with open(vectors_path, "rb") as fh:
        header = json.loads(fh.readline().decode("ascii"))
        n, d = int(header["count"]), int(header["dim"])
        payload = fh.read()
    expected = n * d * 4
    if len(payload) != expected:
        raise ValueError(
            f"descriptor payload is {len(payload)} bytes, expected {expected}")
    vectors = np.frombuffer(payload, dtype="<f4").reshape(n, d).astype(np.float64)
    ids = json.loads(Path(ids_path).read_text())
    if len(ids) != n:
        raise DimensionMismatch(f"{len(ids)} ids for {n} vectors")
    return [str(i) for i in ids], vectors


def load_index(vectors_path, ids_path) -> DescriptorIndex:
    ids, vectors = read_descriptor_table(vectors_path, ids_path)
    return build_index(zip(ids, vectors))
