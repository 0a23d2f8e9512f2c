"""A small vision transformer over pre-patchified inputs.

The model consumes tensors of shape ``(B, n_patches, patch*patch*3)``;
patch extraction lives in the data pipeline so the network itself never
needs the image layout, only the sequence.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch
from torch import nn

from .config import parse_model_id
from .errors import ConfigError

WEIGHTS_META_KEY = "pbharness_meta"


class Block(nn.Module):
    """Pre-norm transformer block: attention then a GELU MLP."""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, 4 * dim),
            nn.GELU(),
            nn.Linear(4 * dim, dim),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.norm1(x)
        x = x + self.attn(h, h, h, need_weights=False)[0]
        return x + self.mlp(self.norm2(x))


class TinyViT(nn.Module):
    def __init__(self, model_id: str, image_size: int, n_classes: int):
        super().__init__()
        patch, dim, depth = parse_model_id(model_id)
        if image_size % patch != 0:
            raise ConfigError(
                f"image size {image_size} is not divisible by patch size {patch}"
            )
        if dim % 16 != 0:
            raise ConfigError(f"model dim must be a multiple of 16, got {dim}")
        self.model_id = model_id
        self.image_size = image_size
        self.n_classes = n_classes
        self.patch = patch
        n_patches = (image_size // patch) ** 2

        self.embed = nn.Linear(patch * patch * 3, dim)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, dim))
        self.pos_embed = nn.Parameter(torch.zeros(1, n_patches + 1, dim))
        self.blocks = nn.ModuleList(Block(dim, dim // 16) for _ in range(depth))
        self.norm = nn.LayerNorm(dim)
        self.head = nn.Linear(dim, n_classes)

        # Position must be visible to attention at first order from the
        # start: with a near-zero init, tasks whose classes differ only in
        # *where* content sits stall in a saddle for the short schedules
        # this harness runs.
        nn.init.trunc_normal_(self.pos_embed, std=1.0)
        nn.init.trunc_normal_(self.cls_token, std=0.02)

    def forward(self, patches: torch.Tensor) -> torch.Tensor:
        x = self.embed(patches)
        cls = self.cls_token.expand(x.shape[0], -1, -1)
        x = torch.cat([cls, x], dim=1) + self.pos_embed
        for block in self.blocks:
            x = block(x)
        return self.head(self.norm(x)[:, 0])


def save_weights(model: TinyViT, path: str | Path) -> None:
    payload = {
        WEIGHTS_META_KEY: {
            "model_id": model.model_id,
            "image_size": model.image_size,
            "n_classes": model.n_classes,
        },
        "state_dict": model.state_dict(),
    }
    torch.save(payload, path)


def load_weights(path: str | Path, model_id: str, image_size: int,
                 n_classes: int) -> TinyViT:
    """Instantiate a model and load checked weights into it.

    The checkpoint must have been produced by :func:`save_weights` with
    the same architecture, geometry and class count.
    """
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise ConfigError(f"cannot read weights file {path}: {exc}") from exc
    meta = payload.get(WEIGHTS_META_KEY) if isinstance(payload, dict) else None
    if not meta or "state_dict" not in payload:
        raise ConfigError(f"weights file {path} is not a pbharness checkpoint")
    expected = {"model_id": model_id, "image_size": image_size,
                "n_classes": n_classes}
    if dict(meta) != expected:
        raise ConfigError(
            "weights metadata mismatch: file has "
            f"{json.dumps(dict(meta), sort_keys=True)}, run needs "
            f"{json.dumps(expected, sort_keys=True)}"
        )
    model = TinyViT(model_id, image_size, n_classes)
    model.load_state_dict(payload["state_dict"])
    return model
