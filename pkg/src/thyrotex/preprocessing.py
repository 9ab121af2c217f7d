"""Nodule patch preparation: Otsu segmentation, ROI cropping, normalization,
and two-stage contrast-limited adaptive histogram equalization (CLAHE).

The full chain applied per image is:

    resize -> Otsu threshold -> binarize -> largest 4-connected component crop
           -> resize -> min-max normalize -> CLAHE(stage1 tiles) -> CLAHE(stage2 tiles)
"""

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator, TransformerMixin

from .images import as_gray_image, resize_bilinear

__all__ = [
    "otsu_threshold",
    "binarize",
    "extract_roi",
    "normalize_patch",
    "clahe",
    "ts_clahe",
    "preprocess_image",
    "NodulePreprocessor",
]

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def otsu_threshold(img) -> int:
    """Threshold maximizing between-class variance over the 256-bin histogram.

    Pixels <= t form the background class, pixels > t the foreground class.
    Ties resolve toward the smaller threshold. Raises for images with fewer
    than two distinct intensities.
    """
    a = as_gray_image(img)
    hist = np.bincount(a.ravel(), minlength=256).astype(np.float64)
    if np.count_nonzero(hist) < 2:
        raise ValueError("degenerate histogram: image has fewer than two distinct intensities")
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(hist)
    m0 = np.cumsum(hist * levels)
    w1 = w0[-1] - w0
    valid = (w0 > 0) & (w1 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = np.where(w0 > 0, m0 / w0, 0.0)
        mu1 = np.where(w1 > 0, (m0[-1] - m0) / w1, 0.0)
    sigma_b = np.where(valid, w0 * w1 * (mu0 - mu1) ** 2, -1.0)
    return int(np.argmax(sigma_b))


def binarize(img, threshold: int) -> np.ndarray:
    """Boolean mask: True where pixel > threshold."""
    return as_gray_image(img) > threshold


def extract_roi(img, mask) -> np.ndarray:
    """Crop *img* to the bounding box of the largest 4-connected foreground
    component of *mask*.

    Equal-size components tie-break on the lexicographically smallest bounding
    box top-left corner (row, then column).
    """
    a = as_gray_image(img)
    m = np.asarray(mask, dtype=bool)
    if m.shape != a.shape:
        raise ValueError("mask shape %s does not match image shape %s" % (m.shape, a.shape))
    if not m.any():
        raise ValueError("mask has no foreground pixels")
    labels, n_components = ndimage.label(m, structure=_FOUR_CONNECTED)
    counts = np.bincount(labels.ravel())[1:]
    boxes = ndimage.find_objects(labels)
    best = min(
        range(n_components),
        key=lambda i: (-counts[i], boxes[i][0].start, boxes[i][1].start),
    )
    return a[boxes[best]].copy()


def normalize_patch(img) -> np.ndarray:
    """Min-max normalize to float64 [0, 1]; constant input maps to all zeros."""
    a = as_gray_image(img).astype(np.float64)
    lo = a.min()
    hi = a.max()
    if hi == lo:
        return np.zeros_like(a)
    return (a - lo) / (hi - lo)


def _check_unit_patch(patch) -> np.ndarray:
    p = np.asarray(patch, dtype=np.float64)
    if p.ndim != 2 or p.size == 0:
        raise ValueError("expected a non-empty 2-D patch")
    if p.min() < -1e-9 or p.max() > 1.0 + 1e-9:
        raise ValueError("patch values must lie in [0, 1]")
    return np.clip(p, 0.0, 1.0)


def _tile_edges(size: int, tiles: int) -> np.ndarray:
    # Trailing tile absorbs the remainder when tiles does not divide size.
    base = size // tiles
    edges = np.arange(tiles + 1, dtype=np.intp) * base
    edges[-1] = size
    return edges


def _blend_axis(size: int, centers: np.ndarray):
    # For each coordinate: the two enclosing tile indices and the blend weight
    # toward the second. Positions outside the outermost centers clamp to the
    # edge tile with zero blend.
    pos = np.arange(size, dtype=np.float64)
    i1 = np.searchsorted(centers, pos, side="right")
    i0 = np.clip(i1 - 1, 0, len(centers) - 1)
    i1 = np.clip(i1, 0, len(centers) - 1)
    span = centers[i1] - centers[i0]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(span > 0, (pos - centers[i0]) / np.where(span > 0, span, 1.0), 0.0)
    return i0, i1, w


def clahe(patch, tiles_per_side: int = 8, clip_limit: float = 2.0) -> np.ndarray:
    """Contrast-limited adaptive histogram equalization on a [0, 1] patch.

    Values are requantized to 256 levels internally. Each tile's histogram is
    clipped at ``clip_limit * tile_pixels / 256`` with the excess redistributed
    uniformly over all bins; the tile mapping is the clipped histogram's CDF.
    Output pixels bilinearly blend the four surrounding tile mappings and the
    result stays in [0, 1].
    """
    p = _check_unit_patch(patch)
    h, w = p.shape
    if tiles_per_side < 1:
        raise ValueError("tiles_per_side must be >= 1")
    if tiles_per_side > min(h, w):
        raise ValueError("tiles_per_side %d exceeds patch extent %dx%d" % (tiles_per_side, h, w))
    if not clip_limit > 1.0:
        raise ValueError("clip_limit must be > 1.0")
    t = tiles_per_side
    q = np.floor(p * 255.0 + 0.5).astype(np.intp)
    ey = _tile_edges(h, t)
    ex = _tile_edges(w, t)
    luts = np.empty((t, t, 256), dtype=np.float64)
    for tr in range(t):
        for tc in range(t):
            tile = q[ey[tr] : ey[tr + 1], ex[tc] : ex[tc + 1]]
            n_tile = tile.size
            hist = np.bincount(tile.ravel(), minlength=256).astype(np.float64)
            ceiling = clip_limit * n_tile / 256.0
            if np.isfinite(ceiling):
                excess = np.maximum(hist - ceiling, 0.0).sum()
                hist = np.minimum(hist, ceiling) + excess / 256.0
            luts[tr, tc] = np.cumsum(hist) / n_tile
    cy = (ey[:-1] + ey[1:]) / 2.0
    cx = (ex[:-1] + ex[1:]) / 2.0
    r0, r1, wy = _blend_axis(h, cy)
    c0, c1, wx = _blend_axis(w, cx)
    rows0 = r0[:, None]
    rows1 = r1[:, None]
    cols0 = c0[None, :]
    cols1 = c1[None, :]
    v00 = luts[rows0, cols0, q]
    v01 = luts[rows0, cols1, q]
    v10 = luts[rows1, cols0, q]
    v11 = luts[rows1, cols1, q]
    wy1 = wy[:, None]
    top = v00 * (1.0 - wx) + v01 * wx
    bot = v10 * (1.0 - wx) + v11 * wx
    return top * (1.0 - wy1) + bot * wy1


def ts_clahe(
    patch,
    stage1_tiles: int = 8,
    stage2_tiles: int = 4,
    clip_limit: float = 2.0,
    tiles_are_pixel_blocks: bool = False,
) -> np.ndarray:
    """Two-stage CLAHE: a fine pass followed by a coarse pass.

    By default the stage arguments are tile-grid counts per side. With
    ``tiles_are_pixel_blocks`` they are read as pixel block sizes instead, so
    stage s uses ``patch_side // block`` tiles per side.
    """
    p = _check_unit_patch(patch)
    if tiles_are_pixel_blocks:
        side = min(p.shape)
        t1 = max(side // stage1_tiles, 1)
        t2 = max(side // stage2_tiles, 1)
    else:
        t1, t2 = stage1_tiles, stage2_tiles
    return clahe(clahe(p, t1, clip_limit), t2, clip_limit)


def preprocess_image(
    img,
    patch_size: int = 256,
    clahe_clip: float = 2.0,
    stage1_tiles: int = 8,
    stage2_tiles: int = 4,
    tiles_are_pixel_blocks: bool = False,
    collect_intermediates: bool = False,
):
    """Run the full preparation chain on a grayscale image.

    Returns the enhanced [0, 1] patch of shape (patch_size, patch_size); with
    ``collect_intermediates`` a dict holding the binary mask, ROI crop, and
    enhanced patch is returned alongside it.
    """
    a = as_gray_image(img)
    resized = resize_bilinear(a, patch_size, patch_size)
    threshold = otsu_threshold(resized)
    mask = binarize(resized, threshold)
    roi = extract_roi(resized, mask)
    roi_patch = resize_bilinear(roi, patch_size, patch_size)
    enhanced = ts_clahe(
        normalize_patch(roi_patch),
        stage1_tiles=stage1_tiles,
        stage2_tiles=stage2_tiles,
        clip_limit=clahe_clip,
        tiles_are_pixel_blocks=tiles_are_pixel_blocks,
    )
    if collect_intermediates:
        return enhanced, {"threshold": threshold, "mask": mask, "roi": roi, "patch": enhanced}
    return enhanced


class NodulePreprocessor(BaseEstimator, TransformerMixin):
    """Stateless transformer wrapping :func:`preprocess_image`.

    Parameters
    ----------
    patch_size : int, default=256
        Side length of the output patch.
    clahe_clip : float, default=2.0
        Relative histogram clip limit, must be > 1.
    stage1_tiles, stage2_tiles : int
        Tile counts per side for the fine and coarse CLAHE passes (or pixel
        block sizes when ``tiles_are_pixel_blocks`` is set).
    tiles_are_pixel_blocks : bool, default=False
        Alternate reading of the stage arguments.
    """

    def __init__(
        self,
        patch_size=256,
        clahe_clip=2.0,
        stage1_tiles=8,
        stage2_tiles=4,
        tiles_are_pixel_blocks=False,
    ):
        self.patch_size = patch_size
        self.clahe_clip = clahe_clip
        self.stage1_tiles = stage1_tiles
        self.stage2_tiles = stage2_tiles
        self.tiles_are_pixel_blocks = tiles_are_pixel_blocks

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        """Map an iterable of 2-D uint8 images to an (n, patch, patch) float array."""
        patches = [
            preprocess_image(
                img,
                patch_size=self.patch_size,
                clahe_clip=self.clahe_clip,
                stage1_tiles=self.stage1_tiles,
                stage2_tiles=self.stage2_tiles,
                tiles_are_pixel_blocks=self.tiles_are_pixel_blocks,
            )
            for img in X
        ]
        return np.stack(patches) if patches else np.empty((0, self.patch_size, self.patch_size))
