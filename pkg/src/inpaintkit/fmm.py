"""Fast-marching inpainting: fill holes in boundary-distance order.

The hole boundary seeds a min-heap narrow band at distance 0; the march
solves the unit-speed eikonal equation into the hole and fills each pixel
when it is popped (finalized), as the normalized weighted average over the
known/filled pixels q in a disk around p of I(q) + grad I(q) . (p - q).
Weights combine direction (alignment with the front normal), distance
(1/|p-q|^2) and level (1/(1+|T(p)-T(q)|)) factors.

By default a second, outward march assigns negated boundary distances to
valid pixels near the hole so the level factor sees a signed distance
field; ``simple_level=True`` uses T=0 on the whole known side instead.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from .errors import AllInfinite
from .imgio import require_image_mask

KNOWN = 0
BAND = 1
INSIDE = 2
OUT = 3  # padding margin; never participates

EPS_DIR = 1e-6
DEFAULT_RADIUS = 5.0

_OFFS4 = ((-1, 0), (1, 0), (0, -1), (0, 1))
_INF = math.inf


def eikonal_update(t_left: float, t_right: float, t_up: float,
                   t_down: float) -> float:
    """Solve the unit-speed eikonal step from four neighbor distances.

    With a = min(t_left, t_right) and b = min(t_up, t_down): if both are
    finite and |a - b| < 1 the two-axis quadratic applies, otherwise the
    update degenerates to min(a, b) + 1.
    """
    a = t_left if t_left < t_right else t_right
    b = t_up if t_up < t_down else t_down
    if a == _INF and b == _INF:
        raise AllInfinite("eikonal update needs at least one finite neighbor")
    if a < _INF and b < _INF:
        d = a - b
        if -1.0 < d < 1.0:
            return (a + b + math.sqrt(2.0 - d * d)) / 2.0
    return (a if a < b else b) + 1.0


def _initial_band(valid: np.ndarray) -> np.ndarray:
    """Valid pixels 4-adjacent to at least one hole pixel."""
    hole = ~valid
    adj = np.zeros_like(valid)
    adj[1:, :] |= hole[:-1, :]
    adj[:-1, :] |= hole[1:, :]
    adj[:, 1:] |= hole[:, :-1]
    adj[:, :-1] |= hole[:, 1:]
    return valid & adj


def _march(T: np.ndarray, flags: np.ndarray, seeds: np.ndarray,
           updatable: np.ndarray, width: int, stop_t: float = _INF,
           on_finalize=None, debug: bool = False) -> None:
    """Generic fast march over the padded grid.

    ``seeds`` are flat indices entering the heap at T=0. ``updatable`` marks
    pixels whose tentative distance may be (re)assigned; already-BAND pixels
    among them accept decreased values. ``on_finalize(r, c, t)`` is called
    once per finalized pixel, in non-decreasing t order.
    """
    heap = [(0.0, int(i)) for i in np.sort(seeds)]
    heapq.heapify(heap)
    flat_flags = flags.ravel()
    flat_T = T.ravel()
    last_t = -_INF
    while heap:
        t, idx = heapq.heappop(heap)
        if flat_flags[idx] != BAND or t > flat_T[idx]:
            continue  # stale entry or already finalized
        if t > stop_t:
            break
        if debug:
            assert t >= last_t, f"heap popped decreasing T: {t} < {last_t}"
            last_t = t
        r, c = divmod(idx, width)
        # fill before flipping the flag so no gradient reads this pixel's
        # value while it is still unset
        if on_finalize is not None:
            on_finalize(r, c, t)
        flat_flags[idx] = KNOWN
        for dr, dc in _OFFS4:
            nr, nc = r + dr, c + dc
            nidx = nr * width + nc
            f = flat_flags[nidx]
            if f == KNOWN or f == OUT or not updatable[nr, nc]:
                continue
            left = flat_T[nidx - 1] if flat_flags[nidx - 1] == KNOWN else _INF
            right = flat_T[nidx + 1] if flat_flags[nidx + 1] == KNOWN else _INF
            up = flat_T[nidx - width] if flat_flags[nidx - width] == KNOWN else _INF
            down = flat_T[nidx + width] if flat_flags[nidx + width] == KNOWN else _INF
            cand = eikonal_update(left, right, up, down)
            if cand < flat_T[nidx]:
                flat_T[nidx] = cand
                flat_flags[nidx] = BAND
                heapq.heappush(heap, (cand, nidx))


def _outward_distances(valid_p: np.ndarray, seeds: np.ndarray, width: int,
                       radius_px: float) -> np.ndarray:
    """Distance from the hole boundary into the valid side, capped at 2r."""
    cap = 2.0 * radius_px
    T = np.full(valid_p.shape, _INF)
    flags = np.full(valid_p.shape, OUT, dtype=np.int8)
    flags[valid_p] = INSIDE
    T.ravel()[seeds] = 0.0
    flags.ravel()[seeds] = BAND
    _march(T, flags, seeds, updatable=valid_p, width=width, stop_t=cap)
    # Pixels beyond the stopping front keep the cap; they are outside every
    # fill neighborhood anyway.
    far = valid_p & (flags != KNOWN)
    T[far] = cap
    return T


class _Filler:
    """Vectorized weighted-average fill over a (2R+1)^2 window."""

    def __init__(self, img_p, T_p, flags_p, radius_px):
        self.img = img_p
        self.T = T_p
        self.flags = flags_p
        self.rw = int(math.ceil(radius_px))
        off = np.arange(-self.rw, self.rw + 1, dtype=np.float64)
        dy = np.repeat(off[:, None], len(off), axis=1)
        dx = np.repeat(off[None, :], len(off), axis=0)
        d2 = dy * dy + dx * dx
        self.inrad = (d2 <= radius_px * radius_px) & (d2 > 0.0)
        safe = np.where(d2 > 0.0, d2, 1.0)
        self.inv_d2 = np.where(self.inrad, 1.0 / safe, 0.0)
        dist = np.sqrt(safe)
        # unit vectors pointing from q toward p (p - q = -offset)
        self.upy = np.where(self.inrad, -dy / dist, 0.0)
        self.upx = np.where(self.inrad, -dx / dist, 0.0)
        self.neg_dx = -dx[:, :, None]
        self.neg_dy = -dy[:, :, None]

    def _front_normal(self, r, c):
        T, flags = self.T, self.flags
        tp = T[r, c]
        usable = lambda rr, cc: flags[rr, cc] == KNOWN or flags[rr, cc] == BAND
        if usable(r, c - 1) and usable(r, c + 1):
            gx = (T[r, c + 1] - T[r, c - 1]) / 2.0
        elif usable(r, c + 1):
            gx = T[r, c + 1] - tp
        elif usable(r, c - 1):
            gx = tp - T[r, c - 1]
        else:
            gx = 0.0
        if usable(r - 1, c) and usable(r + 1, c):
            gy = (T[r + 1, c] - T[r - 1, c]) / 2.0
        elif usable(r + 1, c):
            gy = T[r + 1, c] - tp
        elif usable(r - 1, c):
            gy = tp - T[r - 1, c]
        else:
            gy = 0.0
        norm = math.hypot(gx, gy)
        if norm == 0.0 or not math.isfinite(norm):
            return 0.0, 0.0
        return gx / norm, gy / norm

    def fill(self, r, c):
        rw = self.rw
        r0, r1 = r - rw, r + rw + 1
        c0, c1 = c - rw, c + rw + 1
        fwin = self.flags[r0:r1, c0:c1]
        known = (fwin == KNOWN) & self.inrad
        assert known.any(), "popped pixel must touch the known region"

        nx, ny = self._front_normal(r, c)
        dirw = np.maximum(self.upx * nx + self.upy * ny, EPS_DIR)
        tp = self.T[r, c]
        twin = self.T[r0:r1, c0:c1]
        lev = 1.0 / (1.0 + np.abs(tp - twin))
        w = np.where(known, dirw * self.inv_d2 * lev, 0.0)
        wsum = w.sum()

        # image gradients at every q, using only KNOWN neighbors
        fe = self.flags[r0 - 1:r1 + 1, c0 - 1:c1 + 1]
        ie = self.img[r0 - 1:r1 + 1, c0 - 1:c1 + 1]
        kxp = (fe[1:-1, 2:] == KNOWN)[:, :, None]
        kxm = (fe[1:-1, :-2] == KNOWN)[:, :, None]
        kyp = (fe[2:, 1:-1] == KNOWN)[:, :, None]
        kym = (fe[:-2, 1:-1] == KNOWN)[:, :, None]
        ic = ie[1:-1, 1:-1]
        ixp = ie[1:-1, 2:]
        ixm = ie[1:-1, :-2]
        iyp = ie[2:, 1:-1]
        iym = ie[:-2, 1:-1]
        gx = np.where(kxp & kxm, (ixp - ixm) * 0.5,
                      np.where(kxp, ixp - ic, np.where(kxm, ic - ixm, 0.0)))
        gy = np.where(kyp & kym, (iyp - iym) * 0.5,
                      np.where(kyp, iyp - ic, np.where(kym, ic - iym, 0.0)))
        est = ic + gx * self.neg_dx + gy * self.neg_dy

        # anchor the average at the nearest known pixel so a constant image
        # is reproduced exactly
        masked_d2 = np.where(known, self.inv_d2, 0.0)
        anchor = np.unravel_index(int(np.argmax(masked_d2)), known.shape)
        base = ic[anchor]
        corr = (w[:, :, None] * (est - base)).sum(axis=(0, 1)) / wsum
        self.img[r, c] = np.clip(base + corr, 0.0, 1.0)


def telea_inpaint(image: np.ndarray, mask: np.ndarray,
                  radius_px: float = DEFAULT_RADIUS,
                  simple_level: bool = False,
                  debug: bool = False) -> np.ndarray:
    """Inpaint every hole pixel of ``image`` (mask 0 = hole, 1 = valid).

    Valid pixels pass through bit-identical; filled values are clamped to
    [0, 1]. ``debug=True`` asserts the popped-distance monotonicity.
    """
    img = np.asarray(image, dtype=np.float64)
    msk = np.asarray(mask)
    require_image_mask(img, msk)
    if radius_px < 1.0:
        raise ValueError("radius_px must be >= 1")
    valid = msk != 0
    if valid.all():
        return img.copy()
    if not valid.any():
        raise ValueError("mask has no valid pixels to inpaint from")

    h, w = valid.shape
    rw = int(math.ceil(radius_px))
    m = rw + 1  # margin: window and gradient lookups stay in-bounds
    ph, pw = h + 2 * m, w + 2 * m
    interior = (slice(m, m + h), slice(m, m + w))

    img_p = np.zeros((ph, pw, 3))
    img_p[interior] = img
    valid_p = np.zeros((ph, pw), dtype=bool)
    valid_p[interior] = valid
    hole_p = np.zeros((ph, pw), dtype=bool)
    hole_p[interior] = ~valid

    band = np.zeros((ph, pw), dtype=bool)
    band[interior] = _initial_band(valid)
    seeds = np.flatnonzero(band.ravel())

    if simple_level:
        T = np.full((ph, pw), _INF)
        T[valid_p] = 0.0
    else:
        T = -_outward_distances(valid_p, seeds, pw, radius_px)
        T[~valid_p] = _INF
    T[band] = 0.0

    flags = np.full((ph, pw), OUT, dtype=np.int8)
    flags[valid_p] = KNOWN
    flags[hole_p] = INSIDE
    flags[band] = BAND

    filler = _Filler(img_p, T, flags, radius_px)

    def finalize(r, c, t):
        if hole_p[r, c]:
            filler.fill(r, c)

    # only hole pixels accept distance updates: the valid side carries the
    # (possibly negative) level values and must never re-enter the solve
    _march(T, flags, seeds, updatable=hole_p, width=pw,
           on_finalize=finalize, debug=debug)

    assert flags[hole_p].max() == KNOWN, "unreached hole pixels remain"
    return img_p[interior].copy()
