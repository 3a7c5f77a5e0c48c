"""Binary checkpoints: config, every named tensor, optimizer state, rng.

Layout: u32 little-endian header length, JSON header (config, epoch,
iteration counters, rng state, Adam step counts, tensor directory of
name/shape/offset), then float32 little-endian payloads back to back.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import rng as rng_mod
from .adam import Adam
from .config import GanConfig
from .networks import Discriminator, Generator, build_networks

VERSION = 1


class CheckpointFormatError(ValueError):
    pass


@dataclass
class Checkpoint:
    config: GanConfig
    tensors: dict[str, np.ndarray]
    epoch: int = 0
    iter_d: int = 0
    iter_g: int = 0
    adam_t: dict = field(default_factory=dict)
    rng_state: dict | None = None


def _rng_state_to_json(state: dict) -> dict:
    def conv(v):
        if isinstance(v, np.ndarray):
            return {"__array__": v.tolist(), "dtype": str(v.dtype)}
        if isinstance(v, dict):
            return {k: conv(x) for k, x in v.items()}
        if isinstance(v, (np.integer,)):
            return int(v)
        return v

    return conv(state)


def _rng_state_from_json(state):
    if isinstance(state, dict):
        if "__array__" in state:
            return np.array(state["__array__"], dtype=state["dtype"])
        return {k: _rng_state_from_json(v) for k, v in state.items()}
    return state


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    names = sorted(ckpt.tensors)
    directory = []
    offset = 0
    for name in names:
        arr = ckpt.tensors[name]
        directory.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += int(np.prod(arr.shape, dtype=np.int64)) * 4
    header = {
        "version": VERSION,
        "config": ckpt.config.to_dict(),
        "epoch": ckpt.epoch,
        "iter_d": ckpt.iter_d,
        "iter_g": ckpt.iter_g,
        "adam_t": ckpt.adam_t,
        "rng_state": _rng_state_to_json(ckpt.rng_state) if ckpt.rng_state else None,
        "tensors": directory,
    }
    blob = json.dumps(header, ensure_ascii=False, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for name in names:
            f.write(ckpt.tensors[name].astype("<f4", copy=False).tobytes())


def load_checkpoint(path: str | Path) -> Checkpoint:
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise CheckpointFormatError(f"{path}: too short")
    (hlen,) = struct.unpack_from("<I", raw, 0)
    if len(raw) < 4 + hlen:
        raise CheckpointFormatError(f"{path}: truncated header")
    try:
        header = json.loads(raw[4 : 4 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointFormatError(f"{path}: bad header") from e
    if header.get("version") != VERSION:
        raise CheckpointFormatError(f"{path}: unsupported version")
    base = 4 + hlen
    tensors = {}
    end = base
    for entry in header["tensors"]:
        count = int(np.prod(entry["shape"], dtype=np.int64)) if entry["shape"] else 1
        start = base + entry["offset"]
        end = start + count * 4
        if end > len(raw):
            raise CheckpointFormatError(f"{path}: truncated payload")
        tensors[entry["name"]] = np.frombuffer(
            raw[start:end], dtype="<f4"
        ).reshape(entry["shape"]).copy()
    if end != len(raw):
        raise CheckpointFormatError(f"{path}: trailing bytes")
    return Checkpoint(
        config=GanConfig.from_dict(header["config"]),
        tensors=tensors,
        epoch=int(header["epoch"]),
        iter_d=int(header["iter_d"]),
        iter_g=int(header["iter_g"]),
        adam_t={k: int(v) for k, v in (header.get("adam_t") or {}).items()},
        rng_state=_rng_state_from_json(header.get("rng_state")),
    )


def snapshot(
    cfg: GanConfig,
    g: Generator,
    d: Discriminator,
    opt_g: Adam | None = None,
    opt_d: Adam | None = None,
    epoch: int = 0,
    iter_d: int = 0,
    iter_g: int = 0,
    rng: np.random.Generator | None = None,
) -> Checkpoint:
    tensors = {}
    for name, p in {**g.parameters(), **d.parameters()}.items():
        tensors[name] = p.value.astype(np.float32)
    adam_t = {}
    for tag, opt in (("g", opt_g), ("d", opt_d)):
        if opt is None:
            continue
        adam_t[tag] = opt.t
        for k in opt.m:
            tensors[f"adam.{tag}.{k}.m"] = opt.m[k].astype(np.float32)
            tensors[f"adam.{tag}.{k}.v"] = opt.v[k].astype(np.float32)
    return Checkpoint(
        config=cfg,
        tensors=tensors,
        epoch=epoch,
        iter_d=iter_d,
        iter_g=iter_g,
        adam_t=adam_t,
        rng_state=rng.bit_generator.state if rng is not None else None,
    )


def restore_networks(ckpt: Checkpoint):
    """Rebuild (generator, discriminator) and load all named tensors."""
    cfg = ckpt.config
    g, d = build_networks(cfg, rng_mod.stream(cfg.seed, "gan-init"))
    dtype = np.dtype(cfg.dtype).type
    for name, p in {**g.parameters(), **d.parameters()}.items():
        if name not in ckpt.tensors:
            raise CheckpointFormatError(f"checkpoint missing tensor {name}")
        stored = ckpt.tensors[name]
        if tuple(stored.shape) != p.value.shape:
            raise CheckpointFormatError(
                f"tensor {name} has shape {stored.shape}, expected {p.value.shape}"
            )
        p.value = stored.astype(dtype)
        p.grad = np.zeros_like(p.value)
    return g, d


def restore_optimizers(ckpt: Checkpoint, g, d):
    cfg = ckpt.config
    opt_g = Adam(g.parameters(), cfg.lr_g, cfg.adam_beta1, cfg.adam_beta2)
    opt_d = Adam(d.parameters(), cfg.lr_d, cfg.adam_beta1, cfg.adam_beta2)
    dtype = np.dtype(cfg.dtype).type
    for tag, opt in (("g", opt_g), ("d", opt_d)):
        if tag not in ckpt.adam_t:
            continue
        opt.t = ckpt.adam_t[tag]
        for k in opt.m:
            mk, vk = f"adam.{tag}.{k}.m", f"adam.{tag}.{k}.v"
            if mk in ckpt.tensors:
                opt.m[k] = ckpt.tensors[mk].astype(dtype)
                opt.v[k] = ckpt.tensors[vk].astype(dtype)
    return opt_g, opt_d
