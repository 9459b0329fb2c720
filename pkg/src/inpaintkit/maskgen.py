"""Irregular mask generation from hand-drawn strokes.

One mask = sample a recipe (stroke count ~ N(mean, std) clamped to >= 1,
per-stroke corpus index and line width ~ U(width_min, width_max)), draw the
strokes with round caps and joins on a square canvas, upscale the binary
field bilinearly by a factor ~ U(upscale_min, upscale_max), center-crop to
the output size and threshold. Drawn strokes become holes (mask value 0)
under the default polarity.

Every mask in a dataset owns an independent PRNG sub-stream derived from
(seed, index) by a 64-bit mix, so output bytes are identical no matter how
many worker threads render them.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import EmptyCorpus, IndexOutOfRange
from .imgio import save_mask
from .strokes import StrokeCorpus

HOLE_IS_ZERO = "hole_is_zero"
HOLE_IS_ONE = "hole_is_one"

# Width of the source stroke coordinate box (Quick-Draw simplified export).
SOURCE_BOX = 256

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class GenConfig:
    strokes_mean: float = 4.0
    strokes_std: float = 2.0
    width_min_px: float = 5.0
    width_max_px: float = 15.0
    upscale_min: float = 1.0
    upscale_max: float = 1.5
    canvas_px: int = 256
    out_px: int = 256
    binarize_threshold: float = 0.5
    hole_polarity: str = HOLE_IS_ZERO

    def __post_init__(self):
        if self.strokes_std < 0:
            raise ValueError("strokes_std must be >= 0")
        if not (0 < self.width_min_px <= self.width_max_px):
            raise ValueError("need 0 < width_min_px <= width_max_px")
        if not (1.0 <= self.upscale_min <= self.upscale_max):
            raise ValueError("need 1.0 <= upscale_min <= upscale_max")
        if self.canvas_px < 1 or self.out_px < 1:
            raise ValueError("canvas_px and out_px must be >= 1")
        if self.out_px > math.ceil(self.canvas_px * self.upscale_min):
            raise ValueError("out_px exceeds the smallest upscaled canvas")
        if not (0.0 < self.binarize_threshold < 1.0):
            raise ValueError("binarize_threshold must lie in (0, 1)")
        if self.hole_polarity not in (HOLE_IS_ZERO, HOLE_IS_ONE):
            raise ValueError(f"unknown hole_polarity {self.hole_polarity!r}")

    def to_dict(self) -> dict:
        return {
            "strokes_mean": self.strokes_mean,
            "strokes_std": self.strokes_std,
            "width_min_px": self.width_min_px,
            "width_max_px": self.width_max_px,
            "upscale_min": self.upscale_min,
            "upscale_max": self.upscale_max,
            "canvas_px": self.canvas_px,
            "out_px": self.out_px,
            "binarize_threshold": self.binarize_threshold,
            "hole_polarity": self.hole_polarity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        return cls(**d)


@dataclass(frozen=True)
class MaskRecipe:
    n_strokes: int
    stroke_indices: tuple[int, ...]
    widths_px: tuple[float, ...]
    upscale: float
    sub_seed: int

    def digest(self) -> str:
        payload = json.dumps({
            "n_strokes": self.n_strokes,
            "stroke_indices": list(self.stroke_indices),
            "widths_px": list(self.widths_px),
            "upscale": self.upscale,
            "sub_seed": self.sub_seed,
        }, sort_keys=True)
        return hashlib.sha256(payload.encode("ascii")).hexdigest()[:16]


@dataclass
class ManifestEntry:
    file: str
    recipe_digest: str
    hole_ratio: float


@dataclass
class DatasetManifest:
    seed: int
    config: GenConfig
    entries: list[ManifestEntry] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "config": self.config.to_dict(),
            "entries": [
                {"file": e.file, "recipe_digest": e.recipe_digest,
                 "hole_ratio": e.hole_ratio}
                for e in self.entries
            ],
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        d = json.loads(Path(path).read_text())
        manifest = cls(seed=d["seed"], config=GenConfig.from_dict(d["config"]))
        manifest.entries = [ManifestEntry(**e) for e in d["entries"]]
        return manifest


def mix_seed(seed: int, index: int) -> int:
    """Derive the 64-bit sub-seed for mask ``index`` (splitmix64 finalizer)."""
    z = (seed + 0x9E3779B97F4A7C15 * (index + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def sample_recipe(rng: np.random.Generator, config: GenConfig,
                  corpus_len: int, sub_seed: int = 0) -> MaskRecipe:
    """Draw one mask recipe from ``rng``.

    Draw order is fixed: stroke count first, then an (index, width) pair per
    stroke, then the upscale factor. Identical seeds give identical recipes.
    """
    if corpus_len <= 0:
        raise EmptyCorpus("cannot sample strokes from an empty corpus")
    raw = rng.normal(config.strokes_mean, config.strokes_std)
    n = max(1, int(round(float(raw))))
    indices = []
    widths = []
    for _ in range(n):
        indices.append(int(rng.integers(0, corpus_len)))
        widths.append(float(rng.uniform(config.width_min_px, config.width_max_px)))
    upscale = float(rng.uniform(config.upscale_min, config.upscale_max))
    return MaskRecipe(n_strokes=n, stroke_indices=tuple(indices),
                      widths_px=tuple(widths), upscale=upscale,
                      sub_seed=sub_seed)


def rasterize_polyline(canvas: np.ndarray, points, width_px: float) -> np.ndarray:
    """Mark every pixel whose center lies within width_px/2 of the polyline.

    Round caps and joins fall out of the point-to-segment distance test; a
    single point stamps a disk. Marking is idempotent (logical OR into
    ``canvas``, a boolean (H, W) array). Points are (x, y) pairs with x as
    the column coordinate.
    """
    if width_px <= 0:
        raise ValueError("width_px must be > 0")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("points must be non-empty")
    h, w = canvas.shape
    r = width_px / 2.0
    r2 = r * r
    if len(pts) == 1:
        segments = [(pts[0], pts[0])]
    else:
        segments = list(zip(pts[:-1], pts[1:]))
    for (x0, y0), (x1, y1) in segments:
        cx0 = max(0, math.floor(min(x0, x1) - r))
        cx1 = min(w - 1, math.ceil(max(x0, x1) + r))
        cy0 = max(0, math.floor(min(y0, y1) - r))
        cy1 = min(h - 1, math.ceil(max(y0, y1) + r))
        if cx0 > cx1 or cy0 > cy1:
            continue
        gx = np.arange(cx0, cx1 + 1, dtype=np.float64)[None, :]
        gy = np.arange(cy0, cy1 + 1, dtype=np.float64)[:, None]
        dx = x1 - x0
        dy = y1 - y0
        seg2 = dx * dx + dy * dy
        if seg2 == 0.0:
            ddx = gx - x0
            ddy = gy - y0
        else:
            t = ((gx - x0) * dx + (gy - y0) * dy) / seg2
            t = np.clip(t, 0.0, 1.0)
            ddx = gx - (x0 + t * dx)
            ddy = gy - (y0 + t * dy)
        d2 = ddx * ddx + ddy * ddy
        canvas[cy0:cy1 + 1, cx0:cx1 + 1] |= d2 <= r2
    return canvas


@lru_cache(maxsize=512)
def _axis_weights(n_in: int, n_out: int):
    scale = n_in / n_out
    centers = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    i0 = np.floor(centers).astype(np.int64)
    frac = centers - i0
    lo = np.clip(i0, 0, n_in - 1)
    hi = np.clip(i0 + 1, 0, n_in - 1)
    lo.flags.writeable = False
    hi.flags.writeable = False
    frac.flags.writeable = False
    return lo, hi, frac


def bilinear_resize(field: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample with half-pixel-center mapping and edge clamping.

    Resizing to the input size is an exact identity.
    """
    h, w = field.shape
    ry0, ry1, fy = _axis_weights(h, out_h)
    rx0, rx1, fx = _axis_weights(w, out_w)
    top = field[ry0][:, rx0] * (1.0 - fx) + field[ry0][:, rx1] * fx
    bot = field[ry1][:, rx0] * (1.0 - fx) + field[ry1][:, rx1] * fx
    return top * (1.0 - fy[:, None]) + bot * fy[:, None]


def render_mask(recipe: MaskRecipe, corpus: StrokeCorpus,
                config: GenConfig) -> np.ndarray:
    """Run the full mask pipeline for one recipe.

    Blank canvas -> rasterize strokes -> bilinear upscale of the {0,1}
    field -> central crop -> threshold -> polarity mapping. Returns a
    uint8 (out_px, out_px) array over {0, 1}.
    """
    n = len(corpus)
    for idx in recipe.stroke_indices:
        if not (0 <= idx < n):
            raise IndexOutOfRange(f"stroke index {idx} outside corpus of {n}")
    canvas = np.zeros((config.canvas_px, config.canvas_px), dtype=bool)
    # Strokes live in the SOURCE_BOX coordinate box; rescale when the canvas
    # size differs so non-default canvases stay fully covered.
    coord_scale = config.canvas_px / SOURCE_BOX
    for idx, width in zip(recipe.stroke_indices, recipe.widths_px):
        pts = corpus[idx].points.astype(np.float64)
        if coord_scale != 1.0:
            pts = pts * coord_scale
        rasterize_polyline(canvas, pts, width)
    field = canvas.astype(np.float64)
    new_size = int(round(config.canvas_px * recipe.upscale))
    if new_size != config.canvas_px:
        field = bilinear_resize(field, new_size, new_size)
    if new_size < config.out_px:
        raise ValueError(
            f"upscaled canvas {new_size} smaller than out_px {config.out_px}")
    start = (new_size - config.out_px) // 2
    crop = field[start:start + config.out_px, start:start + config.out_px]
    stroke = crop >= config.binarize_threshold
    if config.hole_polarity == HOLE_IS_ZERO:
        return (~stroke).astype(np.uint8)
    return stroke.astype(np.uint8)


def hole_ratio(mask: np.ndarray) -> float:
    """Fraction of hole pixels (value 0 under the default polarity)."""
    arr = np.asarray(mask)
    return float(np.count_nonzero(arr == 0) / arr.size)


def _mask_filename(index: int, pad: int) -> str:
    return f"mask_{index:0{pad}d}.png"


def generate_dataset(corpus: StrokeCorpus, count: int, seed: int,
                     config: GenConfig, sink, threads: int = 1,
                     compress_level: int = 6) -> DatasetManifest:
    """Render ``count`` masks into directory ``sink`` plus a JSON manifest.

    Mask i draws from its own PRNG seeded with mix_seed(seed, i); thread
    count never changes the emitted bytes.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if len(corpus) == 0:
        raise EmptyCorpus("cannot generate masks from an empty corpus")
    out_dir = Path(sink)
    out_dir.mkdir(parents=True, exist_ok=True)
    pad = max(5, len(str(count - 1)))

    def job(i: int) -> ManifestEntry:
        sub_seed = mix_seed(seed, i)
        rng = np.random.default_rng(sub_seed)
        recipe = sample_recipe(rng, config, len(corpus), sub_seed=sub_seed)
        mask = render_mask(recipe, corpus, config)
        name = _mask_filename(i, pad)
        save_mask(out_dir / name, mask, compress_level=compress_level)
        if config.hole_polarity == HOLE_IS_ZERO:
            ratio = hole_ratio(mask)
        else:
            ratio = hole_ratio(1 - mask)
        return ManifestEntry(file=name, recipe_digest=recipe.digest(),
                             hole_ratio=ratio)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            entries = list(pool.map(job, range(count)))
    else:
        entries = [job(i) for i in range(count)]
    manifest = DatasetManifest(seed=seed, config=config, entries=entries)
    manifest.save(out_dir / "manifest.json")
    return manifest
