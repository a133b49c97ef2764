"""Synthetic license plate rendering and capture degradation.

Renders alphanumeric plates with per-character ground-truth boxes and
degrades them into blurred / noisy / low-light counterparts using a
physical capture model: photon budget La ~ S_L * ISO * Et * Ap^2, motion
blur extent b = v * Et * f / (D * p), and the dual-exposure ISO balance
ISO_s / ISO_l = Et_l / Et_s.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.ndimage as ndi
from PIL import Image, ImageDraw, ImageFont

ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"

PLATE_WIDTH = 224
PLATE_HEIGHT = 112

KMH = 1000.0 / 3600.0  # km/h in m/s


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class PlateTemplate:
    name: str
    bg: tuple
    fg: tuple
    band: tuple | None = None  # left-edge color band, e.g. EU-style
    band_frac: float = 0.0
    min_len: int = 6
    max_len: int = 8


TEMPLATES = {
    "plain": PlateTemplate("plain", bg=(0.93, 0.94, 0.95), fg=(0.06, 0.06, 0.09)),
    "yellow": PlateTemplate("yellow", bg=(0.95, 0.82, 0.18), fg=(0.08, 0.07, 0.05)),
    "band": PlateTemplate(
        "band", bg=(0.93, 0.94, 0.95), fg=(0.06, 0.06, 0.09),
        band=(0.10, 0.22, 0.62), band_frac=0.09,
    ),
}


@dataclass(frozen=True)
class PlateSpec:
    """Plate text, layout template and the seed driving all render jitter."""

    text: str
    layout: str = "plain"
    seed: int = 0

    def __post_init__(self):
        if self.layout not in TEMPLATES:
            raise ValueError(f"unknown plate layout {self.layout!r}; "
                             f"expected one of {sorted(TEMPLATES)}")
        for ch in self.text:
            if ch not in ALPHABET:
                raise ValueError(f"unsupported plate character: {ch!r}")
        tpl = TEMPLATES[self.layout]
        if not tpl.min_len <= len(self.text) <= tpl.max_len:
            raise ValueError(
                f"plate text length {len(self.text)} outside "
                f"[{tpl.min_len}, {tpl.max_len}] for layout {self.layout!r}")


@dataclass(frozen=True)
class CameraConfig:
    """Dual-camera capture parameters (short/sharp and long/blurred exposure)."""

    iso_s: float = 2000.0
    iso_l: float = 100.0
    et_s: float = 1e-4       # s
    et_l: float = 2e-3       # s
    aperture: float = 2.0
    focal_len: float = 24e-3  # m
    pixel_pitch: float = 2e-6  # m
    scene_lum: float = 1.0

    def __post_init__(self):
        for name in ("iso_s", "iso_l", "et_s", "et_l", "aperture",
                     "focal_len", "pixel_pitch", "scene_lum"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"CameraConfig.{name} must be strictly positive, got {v}")
        if not self.et_s < self.et_l:
            raise ValueError(f"et_s ({self.et_s}) must be shorter than et_l ({self.et_l})")

    @classmethod
    def balanced(cls, et_s: float, et_l: float, iso_l: float, **kw) -> "CameraConfig":
        """Config whose short-exposure ISO matches the long exposure's light amount."""
        return cls(iso_s=iso_balance(et_s, et_l, iso_l), iso_l=iso_l,
                   et_s=et_s, et_l=et_l, **kw)


@dataclass(frozen=True)
class MotionSpec:
    """Vehicle motion relative to the camera during the long exposure."""

    speed: float = 70.0 * KMH  # m/s
    distance: float = 15.0     # m
    angle: float = 0.0         # blur direction, radians, 0 = horizontal

    def __post_init__(self):
        if not (self.speed >= 0 and math.isfinite(self.speed)):
            raise ValueError(f"speed must be >= 0, got {self.speed}")
        if not (self.distance > 0 and math.isfinite(self.distance)):
            raise ValueError(f"distance must be > 0, got {self.distance}")


@dataclass
class ImagePair:
    """Aligned sharp/blurred plate pair with label and character boxes."""

    sharp: np.ndarray
    blurred: np.ndarray
    label: str
    char_boxes: list
    lighting: str = "normal"

    def __post_init__(self):
        if self.sharp.shape != self.blurred.shape:
            raise ValueError(f"sharp/blurred shape mismatch: "
                             f"{self.sharp.shape} vs {self.blurred.shape}")
        if len(self.char_boxes) != len(self.label):
            raise ValueError(f"{len(self.char_boxes)} char boxes for "
                             f"{len(self.label)}-character label")
        if self.lighting not in ("normal", "low"):
            raise ValueError(f"lighting must be 'normal' or 'low', got {self.lighting!r}")
        h, w = self.sharp.shape[:2]
        for box in self.char_boxes:
            x0, y0, x1, y1 = box
            if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
                raise ValueError(f"char box {box} outside {w}x{h} image bounds")


# ---------------------------------------------------------------------------
# capture physics


def blur_extent(motion: MotionSpec, et: float, cam: CameraConfig) -> float:
    """Blurred pixel count b = v * Et * f / (D * p).

    Pinhole projection: the vehicle travels v*Et during the exposure, the
    sensor sees that displacement scaled by f/D, and pixel pitch converts
    meters on the sensor to pixels.
    """
    if not (et > 0 and math.isfinite(et)):
        raise ValueError(f"exposure time must be > 0, got {et}")
    return motion.speed * et * cam.focal_len / (motion.distance * cam.pixel_pitch)


def iso_balance(et_s: float, et_l: float, iso_l: float) -> float:
    """Short-exposure ISO giving the same light amount as the long exposure."""
    if min(et_s, et_l, iso_l) <= 0:
        raise ValueError("exposure times and ISO must be strictly positive")
    return (iso_l * et_l) / et_s


def light_amount_ratio(cam: CameraConfig) -> float:
    """Ratio La_s / La_l of photons captured by the short vs long exposure.

    Scene luminance and aperture are shared between the two cameras and
    cancel, leaving (iso_s * et_s) / (iso_l * et_l). The denominator is
    evaluated as iso_balance(et_s, et_l, iso_l) so a config constructed
    with that balance cancels to exactly 1.0 in floating point.
    """
    return cam.iso_s / iso_balance(cam.et_s, cam.et_l, cam.iso_l)


# ---------------------------------------------------------------------------
# rendering


def _font_file() -> str:
    import matplotlib

    ttf = Path(matplotlib.__file__).parent / "mpl-data" / "fonts" / "ttf"
    for name in ("DejaVuSansMono-Bold.ttf", "DejaVuSans-Bold.ttf"):
        p = ttf / name
        if p.exists():
            return str(p)
    raise RuntimeError("no usable TTF font found for plate rendering")


@lru_cache(maxsize=64)
def _font(size: int) -> ImageFont.FreeTypeFont:
    return ImageFont.truetype(_font_file(), size)


def _rgb8(color, scale: float = 1.0) -> tuple:
    return tuple(int(np.clip(round(c * scale * 255.0), 0, 255)) for c in color)


def render_plate(spec: PlateSpec):
    """Render a plate; returns (image HxWx3 float in [0,1], char boxes).

    Deterministic for a given spec: the seed drives background shade and
    sub-pixel glyph jitter only. Boxes are per-character cell rectangles
    (x0, y0, x1, y1) in pixel coordinates, strictly left-to-right.
    """
    tpl = TEMPLATES[spec.layout]
    rng = np.random.default_rng(spec.seed)
    shade = 1.0 + rng.uniform(-0.06, 0.06)

    img = Image.new("RGB", (PLATE_WIDTH, PLATE_HEIGHT), _rgb8(tpl.bg, shade))
    draw = ImageDraw.Draw(img)

    band_w = int(round(tpl.band_frac * PLATE_WIDTH))
    if tpl.band is not None and band_w > 0:
        draw.rectangle([0, 0, band_w - 1, PLATE_HEIGHT - 1], fill=_rgb8(tpl.band))
    draw.rectangle([1, 1, PLATE_WIDTH - 2, PLATE_HEIGHT - 2],
                   outline=_rgb8(tpl.fg), width=2)

    n = len(spec.text)
    gap = 4
    x_lo, x_hi = band_w + 8, PLATE_WIDTH - 8
    y_lo, y_hi = 16, PLATE_HEIGHT - 16
    cell_w = (x_hi - x_lo - gap * (n - 1)) / n
    cell_h = y_hi - y_lo

    # widest-glyph advance of the font, measured once at a reference size
    probe = _font(100)
    adv = max(probe.getlength(ch) for ch in ALPHABET) / 100.0
    size = int(min(cell_h * 1.02, (cell_w - 2) / adv))
    font = _font(size)

    boxes = []
    fg = _rgb8(tpl.fg)
    for i, ch in enumerate(spec.text):
        x0 = x_lo + i * (cell_w + gap)
        cx = x0 + cell_w / 2 + rng.uniform(-1.0, 1.0)
        cy = (y_lo + y_hi) / 2 + rng.uniform(-1.0, 1.0)
        draw.text((cx, cy), ch, font=font, fill=fg, anchor="mm")
        boxes.append((int(math.floor(x0)), int(y_lo),
                      int(math.ceil(x0 + cell_w)), int(y_hi)))

    return np.asarray(img, dtype=np.float64) / 255.0, boxes


# ---------------------------------------------------------------------------
# degradations


def motion_blur_kernel(length: int, angle: float) -> np.ndarray:
    """Normalized linear-motion kernel: a centred line of `length` pixels."""
    size = length if length % 2 == 1 else length + 1
    k = np.zeros((size, size))
    c = size // 2
    cos_a, sin_a = math.cos(angle), math.sin(angle)
    for i in range(length):
        t = i - (length - 1) / 2.0
        x = c + int(round(t * cos_a))
        y = c + int(round(t * sin_a))
        k[y, x] += 1.0
    return k / k.sum()


def apply_motion_blur(image: np.ndarray, b: float, angle: float = 0.0) -> np.ndarray:
    """Convolve with a length-round(b) linear kernel, reflect-padded."""
    if not (b >= 0 and math.isfinite(b)):
        raise ValueError(f"blur extent must be >= 0, got {b}")
    length = int(round(b))
    if length > image.shape[1]:
        raise ValueError(f"blur extent {length} px exceeds image width {image.shape[1]}")
    if length <= 1:
        return image.copy()
    k = motion_blur_kernel(length, angle)
    out = np.empty_like(image)
    for ch in range(image.shape[2]):
        out[:, :, ch] = ndi.convolve(image[:, :, ch], k, mode="reflect")
    return out


def add_sensor_noise(image: np.ndarray, iso: float, sigma0: float = 0.004,
                     seed: int | None = 0) -> np.ndarray:
    """Additive zero-mean Gaussian noise with sigma = sigma0 * sqrt(iso/100)."""
    if not iso > 0:
        raise ValueError(f"iso must be > 0, got {iso}")
    if sigma0 < 0:
        raise ValueError(f"sigma0 must be >= 0, got {sigma0}")
    if sigma0 == 0:
        return image.copy()
    sigma = sigma0 * math.sqrt(iso / 100.0)
    noise = np.random.default_rng(seed).normal(0.0, sigma, size=image.shape)
    return np.clip(image + noise, 0.0, 1.0)


def simulate_low_light(image: np.ndarray, gain: float) -> np.ndarray:
    """Scale intensities by `gain` and requantize to 8-bit levels."""
    if not 0.0 < gain <= 1.0:
        raise ValueError(f"gain must be in (0, 1], got {gain}")
    return np.round(image * gain * 255.0) / 255.0


def synthesize_pair(spec: PlateSpec, cam: CameraConfig, motion: MotionSpec,
                    lighting: str = "normal", sigma0: float = 0.004,
                    low_light_gain: float = 0.25) -> ImagePair:
    """Render a plate and degrade it into an aligned sharp/blurred pair.

    The sharp branch only picks up short-exposure sensor noise; the blurred
    branch is motion blurred over the long exposure, then gets long-exposure
    noise. Low lighting dims and requantizes both branches identically.
    """
    clean, boxes = render_plate(spec)
    noise_seeds = np.random.SeedSequence(spec.seed).generate_state(2)

    sharp = add_sensor_noise(clean, cam.iso_s, sigma0, seed=int(noise_seeds[0]))

    b = blur_extent(motion, cam.et_l, cam)
    blurred = apply_motion_blur(clean, b, motion.angle)
    blurred = add_sensor_noise(blurred, cam.iso_l, sigma0, seed=int(noise_seeds[1]))

    if lighting == "low":
        sharp = simulate_low_light(sharp, low_light_gain)
        blurred = simulate_low_light(blurred, low_light_gain)

    return ImagePair(sharp, blurred, spec.text, boxes, lighting)


# ---------------------------------------------------------------------------
# dataset layout: <root>/{sharp,blur}/<id>.png + <root>/labels.json


def to_uint8(image: np.ndarray) -> np.ndarray:
    return np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def from_uint8(raw: np.ndarray) -> np.ndarray:
    return raw.astype(np.float64) / 255.0


def save_image(image: np.ndarray, path) -> None:
    Image.fromarray(to_uint8(image)).save(path)


def load_image(path) -> np.ndarray:
    return from_uint8(np.asarray(Image.open(path).convert("RGB")))


def pair_id(index: int) -> str:
    return f"{index:06d}"


def write_pairs(pairs, root) -> None:
    """Write ImagePairs to the on-disk layout; `pairs` is an iterable of (id, pair)."""
    root = Path(root)
    (root / "sharp").mkdir(parents=True, exist_ok=True)
    (root / "blur").mkdir(parents=True, exist_ok=True)
    labels = {}
    for pid, pair in pairs:
        save_image(pair.sharp, root / "sharp" / f"{pid}.png")
        save_image(pair.blurred, root / "blur" / f"{pid}.png")
        labels[pid] = {
            "text": pair.label,
            "char_boxes": [list(map(int, b)) for b in pair.char_boxes],
            "lighting": pair.lighting,
        }
    with open(root / "labels.json", "w") as fh:
        json.dump(labels, fh, indent=1, sort_keys=True)


def read_pairs(root):
    """Load a dataset written by write_pairs; returns list of (id, ImagePair)."""
    root = Path(root)
    labels_path = root / "labels.json"
    if not labels_path.exists():
        raise FileNotFoundError(f"missing {labels_path}")
    with open(labels_path) as fh:
        labels = json.load(fh)
    missing = []
    for pid in labels:
        for sub in ("sharp", "blur"):
            if not (root / sub / f"{pid}.png").exists():
                missing.append(f"{sub}/{pid}.png")
    if missing:
        raise FileNotFoundError(f"dataset {root} missing files: {', '.join(sorted(missing))}")
    out = []
    for pid in sorted(labels):
        meta = labels[pid]
        pair = ImagePair(
            sharp=load_image(root / "sharp" / f"{pid}.png"),
            blurred=load_image(root / "blur" / f"{pid}.png"),
            label=meta["text"],
            char_boxes=[tuple(b) for b in meta["char_boxes"]],
            lighting=meta["lighting"],
        )
        out.append((pid, pair))
    return out


def random_plate_spec(rng: np.random.Generator, layouts=tuple(TEMPLATES)) -> PlateSpec:
    """Uniformly random plate text (length 6-8) and layout."""
    n = int(rng.integers(6, 9))
    text = "".join(ALPHABET[i] for i in rng.integers(0, len(ALPHABET), size=n))
    layout = layouts[int(rng.integers(0, len(layouts)))]
    return PlateSpec(text=text, layout=layout, seed=int(rng.integers(0, 2**31 - 1)))
