"""Procedural paired-domain dataset of height-field scenes.

Each scene is a smooth height field z(x, y) on the unit square, built from a
few primitives (gaussian bumps, windowed ramps, ridges) plus a global tilt
plane drawn from the domain's pose distribution. Geometry gives every label
for free and analytically:

  * main label: per-pixel surface normals, normalize(-dz/dx, -dz/dy, 1)
  * anchor label: either per-pixel primitive-ownership classes (segmentation)
    or primitive apex keypoints (u, v, depth)

The two domains share the same geometry distribution and differ only in
appearance style (texture, noise, lighting, tint) and in the tilt (pose)
distribution, which are the controllable shift knobs.

Conventions: pixel (i, j) samples the point (x, y) = ((j+0.5)/W, (i+0.5)/H);
keypoints are (u, v, depth) with u = column and v = row in pixel coordinates;
arrays are float32 (images, normals, keypoints), int16 (classes), bool (masks).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DOMAINS = ("source", "target")
SPLITS = ("train", "val", "test")
PRIMITIVE_KINDS = ("bump", "ramp", "ridge")
ANCHOR_KINDS = ("segmentation", "keypoints")

DATASET_FORMAT_VERSION = 1

# Presence below this is background; also the class-ownership threshold.
BACKGROUND_PRESENCE = 0.02


class DatasetIOError(RuntimeError):
    """Dataset directory is missing, corrupt, or from an unknown format version."""


class DegenerateStyleError(ValueError):
    """A style produced a zero-variance image; the domain carries no signal."""


@dataclass(frozen=True)
class StyleSpec:
    """Appearance parameters of one domain (geometry labels are unaffected)."""

    texture_freq: float = 4.0          # albedo stripes, cycles per unit length
    texture_amp: float = 0.25          # albedo modulation amplitude, [0, 0.7]
    noise_sigma: float = 0.02          # additive image noise
    light_elev_deg: float = 55.0       # mean light elevation above the horizon
    light_elev_jitter_deg: float = 8.0 # uniform jitter around the mean
    tint: tuple[float, float, float] = (1.0, 0.9, 0.8)

    def validate(self) -> None:
        if not (0.0 <= self.texture_amp <= 0.7):
            raise ValueError(f"texture_amp must be in [0, 0.7], got {self.texture_amp}")
        if self.texture_freq <= 0:
            raise ValueError(f"texture_freq must be > 0, got {self.texture_freq}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not (5.0 <= self.light_elev_deg <= 90.0):
            raise ValueError(f"light_elev_deg must be in [5, 90], got {self.light_elev_deg}")
        if len(self.tint) != 3 or any(c < 0 or c > 1.5 for c in self.tint):
            raise ValueError(f"tint must be 3 channel gains in [0, 1.5], got {self.tint}")


@dataclass(frozen=True)
class PoseSpec:
    """Per-domain distribution of the global scene tilt (the label-shift knob).

    A scene's tilt is a pair of angles (about x and y), each drawn uniformly
    from [-tilt_deg, +tilt_deg] for its domain, and applied as an added tilted
    plane so the height field stays single-valued and analytic.
    """

    source_tilt_deg: float = 40.0
    target_tilt_deg: float = 10.0

    def validate(self) -> None:
        for name, v in (("source_tilt_deg", self.source_tilt_deg),
                        ("target_tilt_deg", self.target_tilt_deg)):
            if not (0.0 <= v < 45.0):
                raise ValueError(f"{name} must be in [0, 45), got {v}")

    def tilt_deg(self, domain: str) -> float:
        return self.source_tilt_deg if domain == "source" else self.target_tilt_deg


def _default_target_style() -> StyleSpec:
    return StyleSpec(texture_freq=9.0, texture_amp=0.35, noise_sigma=0.06,
                     light_elev_deg=35.0, light_elev_jitter_deg=8.0,
                     tint=(0.8, 0.9, 1.0))


@dataclass(frozen=True)
class ToyWorldSpec:
    """Full recipe for one paired-domain dataset. Same spec + seed => identical bits."""

    image_size: int = 64
    n_train: int = 128
    n_val: int = 32
    n_test: int = 32
    n_primitives: tuple[int, int] = (3, 6)     # inclusive range per scene
    anchor_kind: str = "segmentation"
    n_keypoints: int = 5
    n_classes: int = 4                          # background + primitive kinds
    source_style: StyleSpec = field(default_factory=StyleSpec)
    target_style: StyleSpec = field(default_factory=_default_target_style)
    pose: PoseSpec = field(default_factory=PoseSpec)
    mask_border: int = 1
    mask_dropout_frac: float = 0.05             # target domain only
    heatmap_sigma: float = 1.5                  # in output-resolution pixels
    seed: int = 0

    def validate(self) -> None:
        if self.image_size < 16 or self.image_size % 4 != 0:
            raise ValueError(
                f"image_size must be >= 16 and divisible by 4, got {self.image_size}")
        if self.anchor_kind not in ANCHOR_KINDS:
            raise ValueError(f"anchor_kind must be one of {ANCHOR_KINDS}, got {self.anchor_kind!r}")
        if self.anchor_kind == "keypoints" and self.n_keypoints < 3:
            raise ValueError(f"n_keypoints must be >= 3, got {self.n_keypoints}")
        if self.anchor_kind == "segmentation" and self.n_classes < 2:
            raise ValueError(f"n_classes must be >= 2, got {self.n_classes}")
        lo, hi = self.n_primitives
        if lo < 0 or hi < lo:
            raise ValueError(f"n_primitives must be a valid range, got {self.n_primitives}")
        if any(n < 0 for n in (self.n_train, self.n_val, self.n_test)):
            raise ValueError("split sizes must be >= 0")
        if not (0.0 <= self.mask_dropout_frac < 0.5):
            raise ValueError(f"mask_dropout_frac must be in [0, 0.5), got {self.mask_dropout_frac}")
        if self.mask_border < 0 or 2 * self.mask_border >= self.image_size:
            raise ValueError(f"mask_border {self.mask_border} too large for image_size")
        if self.heatmap_sigma <= 0:
            raise ValueError("heatmap_sigma must be > 0")
        self.source_style.validate()
        self.target_style.validate()
        self.pose.validate()

    def style(self, domain: str) -> StyleSpec:
        return self.source_style if domain == "source" else self.target_style

    def n_scenes(self, split: str) -> int:
        return {"train": self.n_train, "val": self.n_val, "test": self.n_test}[split]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def spec_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Scene sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Primitive:
    kind: str
    cx: float
    cy: float
    amp: float
    width: float
    # ridge only: along-axis width and orientation; ramp only: slope vector
    length: float = 0.0
    angle: float = 0.0
    gx: float = 0.0
    gy: float = 0.0


@dataclass(frozen=True)
class SceneParams:
    """Everything needed to re-render one scene deterministically."""

    primitives: tuple[Primitive, ...]
    tilt_x_deg: float
    tilt_y_deg: float
    light_azim_deg: float
    light_elev_deg: float
    texture_angle: float
    texture_phase: float
    noise_seed: int
    dropout_blobs: tuple[tuple[float, float, float], ...]  # (cy, cx, radius) in pixels


def _sample_primitive(rng: np.random.Generator, kind: str) -> Primitive:
    cx, cy = rng.uniform(0.15, 0.85, size=2)
    if kind == "bump":
        return Primitive(kind, cx, cy, amp=rng.uniform(0.10, 0.30),
                         width=rng.uniform(0.08, 0.18))
    if kind == "ridge":
        return Primitive(kind, cx, cy, amp=rng.uniform(0.08, 0.22),
                         width=rng.uniform(0.06, 0.11),
                         length=rng.uniform(0.20, 0.45),
                         angle=rng.uniform(0.0, np.pi))
    # ramp: windowed tilted plateau
    slope = rng.uniform(0.4, 1.1)
    theta = rng.uniform(0.0, 2 * np.pi)
    return Primitive(kind, cx, cy, amp=rng.uniform(0.08, 0.18),
                     width=rng.uniform(0.14, 0.28),
                     gx=slope * np.cos(theta), gy=slope * np.sin(theta))


def scene_params(spec: ToyWorldSpec, domain: str, split: str, index: int) -> SceneParams:
    """Scene recipe for (domain, split, index); independent of generation order."""
    d = DOMAINS.index(domain)
    s = SPLITS.index(split)
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, d, s, index]))

    lo, hi = spec.n_primitives
    n = int(rng.integers(lo, hi + 1))
    if spec.anchor_kind == "keypoints":
        n = max(n, spec.n_keypoints)
    kinds = [PRIMITIVE_KINDS[int(k)] for k in rng.integers(0, len(PRIMITIVE_KINDS), size=n)]
    prims = tuple(_sample_primitive(rng, k) for k in kinds)

    tilt_amp = spec.pose.tilt_deg(domain)
    tilt_x, tilt_y = rng.uniform(-tilt_amp, tilt_amp, size=2)

    style = spec.style(domain)
    azim = rng.uniform(0.0, 360.0)
    elev = style.light_elev_deg + rng.uniform(-1.0, 1.0) * style.light_elev_jitter_deg
    elev = float(np.clip(elev, 5.0, 89.0))

    tex_angle = rng.uniform(0.0, np.pi)
    tex_phase = rng.uniform(0.0, 2 * np.pi)
    noise_seed = int(rng.integers(0, 2**31 - 1))

    blobs: list[tuple[float, float, float]] = []
    if domain == "target" and spec.mask_dropout_frac > 0:
        # Draw blob centers/radii now; rasterization happens at render time.
        n_px = spec.image_size ** 2
        target_px = spec.mask_dropout_frac * n_px
        budget = 0.0
        while budget < target_px and len(blobs) < 64:
            r = rng.uniform(1.5, max(2.5, spec.image_size / 12))
            by, bx = rng.uniform(0, spec.image_size, size=2)
            blobs.append((float(by), float(bx), float(r)))
            budget += np.pi * r * r
    return SceneParams(prims, float(tilt_x), float(tilt_y), float(azim), elev,
                       float(tex_angle), float(tex_phase), noise_seed, tuple(blobs))


# ---------------------------------------------------------------------------
# Analytic geometry
# ---------------------------------------------------------------------------

def _grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    """(X, Y) coordinates of pixel centers, each (n, n), float64."""
    c = (np.arange(n, dtype=np.float64) + 0.5) / n
    return np.meshgrid(c, c, indexing="xy")


def _primitive_fields(p: Primitive, xx: np.ndarray, yy: np.ndarray
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Height, dz/dx, dz/dy, and the ownership 'presence' of one primitive."""
    dx = xx - p.cx
    dy = yy - p.cy
    if p.kind == "bump":
        w = np.exp(-(dx * dx + dy * dy) / (2 * p.width ** 2))
        z = p.amp * w
        zx = -z * dx / p.width ** 2
        zy = -z * dy / p.width ** 2
        return z, zx, zy, np.abs(z)
    if p.kind == "ridge":
        ca, sa = np.cos(p.angle), np.sin(p.angle)
        u = dx * ca + dy * sa        # along the ridge
        v = -dx * sa + dy * ca       # across the ridge
        w = np.exp(-(u * u / (2 * p.length ** 2) + v * v / (2 * p.width ** 2)))
        z = p.amp * w
        zu = -z * u / p.length ** 2
        zv = -z * v / p.width ** 2
        zx = zu * ca - zv * sa
        zy = zu * sa + zv * ca
        return z, zx, zy, np.abs(z)
    # ramp: z = window(r) * (h0 + g . d); window keeps it compact and smooth
    w = np.exp(-(dx * dx + dy * dy) / (2 * p.width ** 2))
    lin = p.amp + p.gx * dx + p.gy * dy
    z = w * lin
    zx = w * (p.gx - dx * lin / p.width ** 2)
    zy = w * (p.gy - dy * lin / p.width ** 2)
    scale = p.amp + 0.5 * np.hypot(p.gx, p.gy) * p.width
    return z, zx, zy, scale * w


def height_and_gradient(scene: SceneParams, n: int
                        ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sampled height field and its exact partial derivatives, (n, n) each."""
    xx, yy = _grid(n)
    z = np.zeros((n, n))
    zx = np.zeros((n, n))
    zy = np.zeros((n, n))
    for p in scene.primitives:
        pz, px, py, _ = _primitive_fields(p, xx, yy)
        z += pz
        zx += px
        zy += py
    tx = np.tan(np.deg2rad(scene.tilt_x_deg))
    ty = np.tan(np.deg2rad(scene.tilt_y_deg))
    z += tx * (xx - 0.5) + ty * (yy - 0.5)
    zx += tx
    zy += ty
    return z, zx, zy


def normals_from_gradient(zx: np.ndarray, zy: np.ndarray) -> np.ndarray:
    """Unit normals (..., 3) of the surface z(x, y); nz is always positive."""
    n = np.stack([-zx, -zy, np.ones_like(zx)], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def _segmentation(scene: SceneParams, spec: ToyWorldSpec, n: int) -> np.ndarray:
    """Per-pixel class: 0 = background, else 1 + (kind index mod (C-1))."""
    xx, yy = _grid(n)
    best = np.full((n, n), BACKGROUND_PRESENCE)
    label = np.zeros((n, n), dtype=np.int16)
    n_fg = spec.n_classes - 1
    for p in scene.primitives:
        _, _, _, presence = _primitive_fields(p, xx, yy)
        cls = 1 + PRIMITIVE_KINDS.index(p.kind) % n_fg
        better = presence > best
        label[better] = cls
        best = np.where(better, presence, best)
    return label


def _keypoints(scene: SceneParams, spec: ToyWorldSpec, z: np.ndarray) -> np.ndarray:
    """First K primitive apexes as (u, v, depth); depth is the scene height there."""
    n = z.shape[0]
    pts = []
    for p in scene.primitives[:spec.n_keypoints]:
        u = p.cx * n - 0.5
        v = p.cy * n - 0.5
        # exact height at the apex, including tilt and overlapping primitives
        depth = _height_at(scene, p.cx, p.cy)
        pts.append((u, v, depth))
    return np.asarray(pts, dtype=np.float32)


def _height_at(scene: SceneParams, x: float, y: float) -> float:
    xx = np.asarray([[x]])
    yy = np.asarray([[y]])
    z = 0.0
    for p in scene.primitives:
        pz, _, _, _ = _primitive_fields(p, xx, yy)
        z += float(pz[0, 0])
    z += np.tan(np.deg2rad(scene.tilt_x_deg)) * (x - 0.5)
    z += np.tan(np.deg2rad(scene.tilt_y_deg)) * (y - 0.5)
    return z


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _render_image(scene: SceneParams, style: StyleSpec, normals: np.ndarray,
                  n: int) -> np.ndarray:
    xx, yy = _grid(n)
    elev = np.deg2rad(scene.light_elev_deg)
    azim = np.deg2rad(scene.light_azim_deg)
    light = np.array([np.cos(elev) * np.cos(azim),
                      np.cos(elev) * np.sin(azim),
                      np.sin(elev)])
    shade = np.clip(normals @ light, 0.0, None)
    shade = 0.3 + 0.7 * shade

    coord = xx * np.cos(scene.texture_angle) + yy * np.sin(scene.texture_angle)
    albedo = 0.75 + style.texture_amp * np.sin(
        2 * np.pi * style.texture_freq * coord + scene.texture_phase)

    img = shade[..., None] * albedo[..., None] * np.asarray(style.tint)
    rng = np.random.default_rng(scene.noise_seed)
    img = img + rng.normal(0.0, style.noise_sigma, size=img.shape)
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def _valid_mask(scene: SceneParams, spec: ToyWorldSpec, n: int) -> np.ndarray:
    mask = np.ones((n, n), dtype=bool)
    b = spec.mask_border
    if b > 0:
        mask[:b, :] = mask[-b:, :] = False
        mask[:, :b] = mask[:, -b:] = False
    if scene.dropout_blobs:
        ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        for by, bx, r in scene.dropout_blobs:
            mask[(ii - by) ** 2 + (jj - bx) ** 2 <= r * r] = False
    return mask


def generate_scene(spec: ToyWorldSpec, domain: str, split: str, index: int) -> dict:
    """All arrays for one sample. Deterministic in (spec, domain, split, index)."""
    scene = scene_params(spec, domain, split, index)
    n = spec.image_size
    z, zx, zy = height_and_gradient(scene, n)
    normals = normals_from_gradient(zx, zy).astype(np.float32)
    image = _render_image(scene, spec.style(domain), normals.astype(np.float64), n)
    if float(np.var(image)) < 1e-12:
        raise DegenerateStyleError(
            f"{domain} style renders a zero-variance image (scene {split}/{index}); "
            "add texture, noise, lighting variation, or geometry")
    out = {
        "image": image,
        "normals": normals,
        "valid": _valid_mask(scene, spec, n),
        "meta": {
            "domain": domain, "split": split, "index": index,
            "tilt_x_deg": round(scene.tilt_x_deg, 4),
            "tilt_y_deg": round(scene.tilt_y_deg, 4),
            "n_primitives": len(scene.primitives),
        },
    }
    if spec.anchor_kind == "segmentation":
        out["seg"] = _segmentation(scene, spec, n)
    else:
        out["keypoints"] = _keypoints(scene, spec, z)
    return out


# ---------------------------------------------------------------------------
# Dataset container and generation
# ---------------------------------------------------------------------------

@dataclass
class SplitArrays:
    images: np.ndarray                 # (N, H, W, 3) float32
    normals: np.ndarray                # (N, H, W, 3) float32, unit where valid
    valid: np.ndarray                  # (N, H, W) bool
    seg: np.ndarray | None = None      # (N, H, W) int16
    keypoints: np.ndarray | None = None  # (N, K, 3) float32

    def __len__(self) -> int:
        return self.images.shape[0]


@dataclass
class ToyDataset:
    spec: ToyWorldSpec
    splits: dict[tuple[str, str], SplitArrays]  # (domain, split) -> arrays
    meta: dict[tuple[str, str], list[dict]]

    def get(self, domain: str, split: str) -> SplitArrays:
        return self.splits[(domain, split)]

    def n_samples(self, domain: str, split: str) -> int:
        return len(self.splits[(domain, split)])


def generate_dataset(spec: ToyWorldSpec) -> ToyDataset:
    """Generate every (domain, split); bit-identical for identical specs."""
    spec.validate()
    splits: dict[tuple[str, str], SplitArrays] = {}
    meta: dict[tuple[str, str], list[dict]] = {}
    n = spec.image_size
    for domain in DOMAINS:
        for split in SPLITS:
            count = spec.n_scenes(split)
            images = np.zeros((count, n, n, 3), dtype=np.float32)
            normals = np.zeros((count, n, n, 3), dtype=np.float32)
            valid = np.zeros((count, n, n), dtype=bool)
            seg = (np.zeros((count, n, n), dtype=np.int16)
                   if spec.anchor_kind == "segmentation" else None)
            kps = (np.zeros((count, spec.n_keypoints, 3), dtype=np.float32)
                   if spec.anchor_kind == "keypoints" else None)
            metas = []
            for i in range(count):
                s = generate_scene(spec, domain, split, i)
                images[i] = s["image"]
                normals[i] = s["normals"]
                valid[i] = s["valid"]
                if seg is not None:
                    seg[i] = s["seg"]
                if kps is not None:
                    kps[i] = s["keypoints"]
                metas.append(s["meta"])
            splits[(domain, split)] = SplitArrays(images, normals, valid, seg, kps)
            meta[(domain, split)] = metas
    return ToyDataset(spec, splits, meta)


# ---------------------------------------------------------------------------
# Anchor label utilities
# ---------------------------------------------------------------------------

def render_keypoint_heatmaps(keypoints: np.ndarray, out_size: int, sigma: float,
                             src_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian heatmaps, one per keypoint, peak value 1 at the scaled location.

    keypoints: (K, 2+) of (u, v, ...) in src_size pixel coordinates. Returns
    (heatmaps (K, out, out) float32, clamped (K,) bool); out-of-bounds points
    are clamped to the nearest valid pixel and flagged.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    kp = np.asarray(keypoints, dtype=np.float64)
    if kp.ndim != 2 or kp.shape[1] < 2:
        raise ValueError(f"keypoints must be (K, >=2), got {kp.shape}")
    scale = out_size / src_size
    u = kp[:, 0] * scale
    v = kp[:, 1] * scale
    clamped = (u < 0) | (u > out_size - 1) | (v < 0) | (v > out_size - 1)
    u = np.clip(u, 0, out_size - 1)
    v = np.clip(v, 0, out_size - 1)
    ii, jj = np.meshgrid(np.arange(out_size), np.arange(out_size), indexing="ij")
    d2 = (jj[None] - u[:, None, None]) ** 2 + (ii[None] - v[:, None, None]) ** 2
    heat = np.exp(-d2 / (2.0 * sigma ** 2))
    return heat.astype(np.float32), clamped


def downsample_normals(normals: np.ndarray, factor: int = 2) -> np.ndarray:
    """Block-average normals then renormalize; accepts (..., H, W, 3)."""
    h, w = normals.shape[-3], normals.shape[-2]
    shape = normals.shape[:-3] + (h // factor, factor, w // factor, factor, 3)
    avg = normals.reshape(shape).mean(axis=(-2, -4))
    norm = np.linalg.norm(avg, axis=-1, keepdims=True)
    return (avg / np.maximum(norm, 1e-8)).astype(normals.dtype)


def downsample_valid(valid: np.ndarray, factor: int = 2) -> np.ndarray:
    """A low-res pixel is valid only if its whole block is valid."""
    h, w = valid.shape[-2], valid.shape[-1]
    shape = valid.shape[:-2] + (h // factor, factor, w // factor, factor)
    return valid.reshape(shape).all(axis=(-1, -3))


def downsample_classes(seg: np.ndarray, factor: int = 2) -> np.ndarray:
    """Nearest (top-left of each block)."""
    return seg[..., ::factor, ::factor]


def scale_keypoints(keypoints: np.ndarray, src_size: int, out_size: int) -> np.ndarray:
    out = np.array(keypoints, dtype=np.float32, copy=True)
    out[..., :2] *= out_size / src_size
    return out


def boundary_coherence(seg: np.ndarray, normals: np.ndarray, valid: np.ndarray,
                       angle_thresh_deg: float = 1.0) -> float:
    """Fraction of class-boundary pixel pairs that straddle a normal discontinuity.

    A boundary pair is two 4-adjacent valid pixels with different classes; it is
    coherent when the angle between their normals exceeds angle_thresh_deg.
    Returns a fraction in [0, 1]; NaN if the image has no boundary pairs.
    """
    cos_t = np.cos(np.deg2rad(angle_thresh_deg))
    n_boundary = 0
    n_coherent = 0
    for axis in (0, 1):
        a = (slice(None, -1), slice(None)) if axis == 0 else (slice(None), slice(None, -1))
        b = (slice(1, None), slice(None)) if axis == 0 else (slice(None), slice(1, None))
        pair_valid = valid[a] & valid[b]
        boundary = (seg[a] != seg[b]) & pair_valid
        dots = np.sum(normals[a] * normals[b], axis=-1)
        n_boundary += int(boundary.sum())
        n_coherent += int((boundary & (dots < cos_t)).sum())
    if n_boundary == 0:
        return float("nan")
    return n_coherent / n_boundary


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

_ARRAY_FIELDS = ("images", "normals", "valid", "seg", "keypoints")


def save_dataset(dataset: ToyDataset, path: str | Path) -> None:
    """Write index.json plus one .npz per split (both domains per file)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    index = {
        "format_version": DATASET_FORMAT_VERSION,
        "spec": dataset.spec.to_dict(),
        "spec_hash": dataset.spec.spec_hash(),
        "counts": {f"{d}/{s}": dataset.n_samples(d, s) for d in DOMAINS for s in SPLITS},
        "meta": {f"{d}/{s}": dataset.meta[(d, s)] for d in DOMAINS for s in SPLITS},
    }
    (root / "index.json").write_text(json.dumps(index, indent=1, sort_keys=True))
    for split in SPLITS:
        arrays = {}
        for domain in DOMAINS:
            sa = dataset.get(domain, split)
            for name in _ARRAY_FIELDS:
                arr = getattr(sa, name)
                if arr is not None:
                    arrays[f"{domain}_{name}"] = arr
        np.savez_compressed(root / f"{split}.npz", **arrays)


def load_dataset(path: str | Path) -> ToyDataset:
    """Inverse of save_dataset; every array round-trips bit-exactly."""
    root = Path(path)
    index_path = root / "index.json"
    if not index_path.exists():
        raise DatasetIOError(f"missing index file: {index_path}")
    try:
        index = json.loads(index_path.read_text())
    except json.JSONDecodeError as e:
        raise DatasetIOError(f"corrupted index file {index_path}: {e}") from e
    version = index.get("format_version")
    if version != DATASET_FORMAT_VERSION:
        raise DatasetIOError(
            f"dataset format version {version!r} unsupported "
            f"(expected {DATASET_FORMAT_VERSION})")
    spec = spec_from_dict(index["spec"])
    if spec.spec_hash() != index.get("spec_hash"):
        raise DatasetIOError("spec hash mismatch; index.json is inconsistent")

    splits: dict[tuple[str, str], SplitArrays] = {}
    meta: dict[tuple[str, str], list[dict]] = {}
    for split in SPLITS:
        f = root / f"{split}.npz"
        if not f.exists():
            raise DatasetIOError(f"missing split file: {f}")
        with np.load(f, allow_pickle=False) as npz:
            for domain in DOMAINS:
                expected = index["counts"][f"{domain}/{split}"]
                kwargs = {}
                for name in _ARRAY_FIELDS:
                    key = f"{domain}_{name}"
                    kwargs[name] = npz[key] if key in npz.files else None
                for required in ("images", "normals", "valid"):
                    if kwargs[required] is None:
                        raise DatasetIOError(f"{f} lacks array {domain}_{required}")
                sa = SplitArrays(**kwargs)
                if len(sa) != expected:
                    raise DatasetIOError(
                        f"{f}: {domain} has {len(sa)} samples, index says {expected}")
                splits[(domain, split)] = sa
                meta[(domain, split)] = index["meta"][f"{domain}/{split}"]
    return ToyDataset(spec, splits, meta)


def spec_from_dict(d: dict) -> ToyWorldSpec:
    """Rebuild a ToyWorldSpec from its to_dict() form (JSON/YAML friendly)."""
    d = dict(d)
    if "source_style" in d:
        d["source_style"] = _style_from_dict(d["source_style"])
    if "target_style" in d:
        d["target_style"] = _style_from_dict(d["target_style"])
    if "pose" in d:
        d["pose"] = PoseSpec(**d["pose"])
    if "n_primitives" in d:
        d["n_primitives"] = tuple(d["n_primitives"])
    _check_fields(d, ToyWorldSpec)
    spec = ToyWorldSpec(**d)
    spec.validate()
    return spec


def _style_from_dict(d: dict) -> StyleSpec:
    d = dict(d)
    if "tint" in d:
        d["tint"] = tuple(d["tint"])
    _check_fields(d, StyleSpec)
    return StyleSpec(**d)


def _check_fields(d: dict, cls: type) -> None:
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
