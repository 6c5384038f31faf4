from __future__ import annotations

from dataclasses import dataclass


@dataclass
class GenerationSettings:
    enabled: bool = False
    count: int = 10
    max_new_tokens: int = 24
    temperature: float = 0.8
    seed: int = 0
    retry_budget: int = 3


@dataclass
class BridgeConfig:
    """What to load and how to serve it.

    ``capability`` must match the checkpoint's training objective: ``mlm``
    loads a masked-LM head (and requires a mask token), ``causal`` a
    causal-LM head.
    """

    model_dir: str
    capability: str  # "mlm" | "causal"
    device: str = "cpu"
    max_seq_len: int = 512
    generation: GenerationSettings | None = None

    def __post_init__(self) -> None:
        if self.capability not in ("mlm", "causal"):
            raise ValueError(f"unknown capability {self.capability!r}")
        if self.max_seq_len < 8:
            raise ValueError("max_seq_len too small")
