"""Architecture and training hyperparameters for the conditional GAN."""

from __future__ import annotations

from dataclasses import dataclass, field, fields


@dataclass
class GanConfig:
    img_h: int = 32
    img_w: int = 32
    base_channels: int = 16
    n_classes: int = 8
    z_dim: int = 15
    n_gen_blocks: int = 4
    attention_position: int | None = None  # default: feature map at 1/4 resolution
    lr_d: float = 5e-4
    lr_g: float = 2e-5
    adam_beta1: float = 0.0
    adam_beta2: float = 0.9
    batch_size: int = 32
    d_steps_per_g: int = 2
    epochs: int = 500
    lambda_ac: float = 1.0
    ac_fake_in_d: bool = True
    bn_momentum: float = 0.9
    out_conv_init: float = 1.0  # scale on the output conv's init weights
    class_init: float = 0.3  # conditional-BN weight scale for class rows
    dtype: str = "float32"
    seed: int = 0

    def validate(self) -> list[str]:
        """All config invariant violations, empty when valid."""
        bad = []
        b = self.n_gen_blocks
        if b < 1:
            bad.append("n_gen_blocks must be >= 1")
        if self.n_classes < 2:
            bad.append("n_classes must be >= 2")
        if b >= 1 and self.z_dim % (b + 1) != 0:
            bad.append(f"z_dim={self.z_dim} not divisible by n_gen_blocks+1={b + 1}")
        if b >= 1:
            scale = 1 << b
            if self.img_h % scale or self.img_w % scale:
                bad.append(f"image size must be a multiple of 2^{b}={scale}")
            elif self.img_h // scale < 1 or self.img_w // scale < 1:
                bad.append("base feature map would be empty")
        if self.attention_position is not None and not (
            0 <= self.attention_position < b
        ):
            bad.append("attention_position out of block range")
        if self.batch_size < 1 or self.epochs < 0 or self.d_steps_per_g < 1:
            bad.append("batch_size/epochs/d_steps_per_g out of range")
        if self.dtype not in ("float32", "float64"):
            bad.append("dtype must be float32 or float64")
        return bad

    def check(self) -> "GanConfig":
        bad = self.validate()
        if bad:
            raise ValueError("; ".join(bad))
        return self

    @property
    def z_chunk(self) -> int:
        return self.z_dim // (self.n_gen_blocks + 1)

    @property
    def base_hw(self) -> tuple[int, int]:
        s = 1 << self.n_gen_blocks
        return self.img_h // s, self.img_w // s

    @property
    def attn_position(self) -> int:
        """Generator block index carrying self-attention."""
        if self.attention_position is not None:
            return self.attention_position
        return max(0, self.n_gen_blocks - 3)  # output at 1/4 resolution

    def gen_channels(self) -> list[tuple[int, int]]:
        """(in, out) channels per generator block, widest first."""
        b, c = self.n_gen_blocks, self.base_channels
        return [(c << (b - i), c << (b - i - 1)) for i in range(b)]

    def disc_channels(self) -> list[tuple[int, int]]:
        """(in, out) channels per discriminator block."""
        b, c = self.n_gen_blocks, self.base_channels
        out = []
        for i in range(b):
            out.append((3 if i == 0 else c << (i - 1), c << i))
        return out

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @staticmethod
    def from_dict(d: dict) -> "GanConfig":
        names = {f.name for f in fields(GanConfig)}
        return GanConfig(**{k: v for k, v in d.items() if k in names})
