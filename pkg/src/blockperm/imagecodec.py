"""Lossless image files with optional cipher provenance.

PNG is the production codec (8-bit, via Pillow); PPM/PGM is a raw
fallback whose bytes can be inspected without any codec. Provenance
(key fingerprint and restriction parameters) rides along as PNG tEXt
entries or PPM header comments, so encrypted files stay self-describing
while carrying no seed material.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image
from PIL.PngImagePlugin import PngInfo

from .cipher import EncryptedImage
from .errors import ValidationError

_PROV_FINGERPRINT = "blockperm.fingerprint"
_PROV_N_BS = "blockperm.n_bs"
_PROV_N_PS = "blockperm.n_ps"

PNG_SUFFIXES = (".png",)
PPM_SUFFIXES = (".ppm", ".pgm")


def _check_pixels(pixels: np.ndarray) -> np.ndarray:
    if not isinstance(pixels, np.ndarray) or pixels.ndim != 3:
        raise ValidationError("pixels must be an (h, w, c) array")
    if pixels.dtype != np.uint8:
        raise ValidationError(f"pixels dtype must be uint8, got {pixels.dtype}")
    if pixels.shape[2] not in (1, 3):
        raise ValidationError(f"unsupported channel count {pixels.shape[2]}")
    return pixels


def _provenance_dict(enc: EncryptedImage) -> dict[str, str]:
    return {
        _PROV_FINGERPRINT: enc.fingerprint,
        _PROV_N_BS: str(enc.n_bs),
        _PROV_N_PS: str(enc.n_ps),
    }


def _provenance_from(text: dict[str, str]):
    if _PROV_FINGERPRINT not in text:
        return None
    try:
        return (
            text[_PROV_FINGERPRINT],
            int(text[_PROV_N_BS]),
            int(text[_PROV_N_PS]),
        )
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"corrupt provenance metadata: {exc}") from None


def write_png(path, pixels: np.ndarray, metadata: dict[str, str] | None = None) -> None:
    pixels = _check_pixels(pixels)
    mode = "RGB" if pixels.shape[2] == 3 else "L"
    img = Image.fromarray(pixels.reshape(pixels.shape[:2]) if mode == "L" else pixels,
                          mode=mode)
    info = PngInfo()
    for k, v in (metadata or {}).items():
        info.add_text(k, v)
    img.save(Path(path), format="PNG", pnginfo=info)


def read_png(path) -> tuple[np.ndarray, dict[str, str]]:
    with Image.open(Path(path)) as img:
        metadata = dict(getattr(img, "text", {}) or {})
        if img.mode == "P":
            img = img.convert("RGB")
        if img.mode not in ("L", "RGB"):
            raise ValidationError(
                f"{path}: unsupported PNG mode {img.mode} (use 8-bit L or RGB)"
            )
        arr = np.asarray(img, dtype=np.uint8)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr, metadata


def write_ppm(path, pixels: np.ndarray, metadata: dict[str, str] | None = None) -> None:
    """Binary P6 (color) or P5 (single channel) with metadata as comments."""
    pixels = _check_pixels(pixels)
    h, w, c = pixels.shape
    magic = "P6" if c == 3 else "P5"
    header = [magic]
    for k, v in (metadata or {}).items():
        header.append(f"# {k}={v}")
    header.append(f"{w} {h}")
    header.append("255")
    payload = "\n".join(header).encode("ascii") + b"\n" + pixels.tobytes()
    Path(path).write_bytes(payload)


def read_ppm(path) -> tuple[np.ndarray, dict[str, str]]:
    data = Path(path).read_bytes()
    if data[:2] not in (b"P6", b"P5"):
        raise ValidationError(f"{path}: not a binary PPM/PGM file")
    channels = 3 if data[:2] == b"P6" else 1

    metadata: dict[str, str] = {}
    tokens: list[int] = []
    pos = 2
    while len(tokens) < 3:
        if pos >= len(data):
            raise ValidationError(f"{path}: truncated header")
        ch = data[pos : pos + 1]
        if ch == b"#":
            end = data.index(b"\n", pos)
            comment = data[pos + 1 : end].decode("ascii", "replace").strip()
            if "=" in comment:
                k, _, v = comment.partition("=")
                metadata[k.strip()] = v.strip()
            pos = end + 1
        elif ch.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            try:
                tokens.append(int(data[pos:end]))
            except ValueError:
                raise ValidationError(f"{path}: bad header token {data[pos:end]!r}") from None
            pos = end
    w, h, maxval = tokens
    if maxval != 255:
        raise ValidationError(f"{path}: only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    expected = h * w * channels
    raw = data[pos : pos + expected]
    if len(raw) != expected:
        raise ValidationError(
            f"{path}: expected {expected} pixel bytes, got {len(raw)}"
        )
    return np.frombuffer(raw, dtype=np.uint8).reshape(h, w, channels).copy(), metadata


def write_image(path, pixels: np.ndarray, metadata: dict[str, str] | None = None) -> None:
    """Dispatch on suffix: .png, .ppm or .pgm."""
    suffix = Path(path).suffix.lower()
    if suffix in PNG_SUFFIXES:
        write_png(path, pixels, metadata)
    elif suffix in PPM_SUFFIXES:
        write_ppm(path, pixels, metadata)
    else:
        raise ValidationError(f"unsupported image suffix {suffix!r}")


def read_image(path) -> tuple[np.ndarray, dict[str, str]]:
    suffix = Path(path).suffix.lower()
    if suffix in PNG_SUFFIXES:
        return read_png(path)
    if suffix in PPM_SUFFIXES:
        return read_ppm(path)
    raise ValidationError(f"unsupported image suffix {suffix!r}")


def write_encrypted_image(path, enc: EncryptedImage) -> None:
    write_image(path, enc.pixels, _provenance_dict(enc))


def read_encrypted_image(path) -> EncryptedImage:
    """Load ciphertext plus provenance; error if provenance is absent."""
    pixels, metadata = read_image(path)
    prov = _provenance_from(metadata)
    if prov is None:
        raise ValidationError(
            f"{path}: no cipher provenance metadata; not a blockperm ciphertext?"
        )
    digest, n_bs, n_ps = prov
    return EncryptedImage(pixels=pixels, fingerprint=digest, n_bs=n_bs, n_ps=n_ps)
