"""Service and training configuration.

Defaults follow the reference fine-tuning recipe: maximum sequence
length 100, batch size 128, encoder learning rate 2e-5, head learning
rate 1e-4, warmup proportion 0.1, 5 epochs. Everything is overridable;
desk-scale runs with a from-scratch encoder typically raise the
learning rates.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field


@dataclass
class EncoderConfig:
    vocab_size: int = 0  # filled from the training vocabulary
    dim: int = 96
    layers: int = 2
    heads: int = 4
    ffn_dim: int = 192
    dropout: float = 0.1


@dataclass
class ServiceConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    max_seq_len: int = 100
    batch_size: int = 128
    lr_encoder: float = 2e-5
    lr_heads: float = 1e-4
    warmup_proportion: float = 0.1
    epochs: int = 5
    negative_weight: float = 1.0  # gate-loss weight on NoLink examples
    seed: int = 0
    host: str = "127.0.0.1"
    port: int = 8191
    max_pending_requests: int = 32

    @classmethod
    def from_file(cls, path: str) -> "ServiceConfig":
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
        encoder = EncoderConfig(**raw.pop("encoder", {}))
        return cls(encoder=encoder, **raw)

    def to_dict(self) -> dict:
        return asdict(self)
