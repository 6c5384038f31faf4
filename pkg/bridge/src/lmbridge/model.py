"""Checkpoint loading and the scoring operations behind the protocol ops.

Tokenization is owned entirely by this process; clients never guess token
boundaries. Negative token ids arriving over the wire denote masked slots
and are replaced by the tokenizer's mask token before the forward pass.
"""

from __future__ import annotations

import logging
from typing import Sequence

import torch

from .config import BridgeConfig

logger = logging.getLogger("lmbridge")


class ScoringModel:
    def __init__(self, config: BridgeConfig):
        from transformers import (AutoModelForCausalLM, AutoModelForMaskedLM,
                                  AutoTokenizer)

        self.config = config
        self.tokenizer = AutoTokenizer.from_pretrained(config.model_dir)
        loader = (AutoModelForMaskedLM if config.capability == "mlm"
                  else AutoModelForCausalLM)
        self.model = loader.from_pretrained(config.model_dir)
        self.model.to(config.device)
        self.model.eval()
        torch.set_grad_enabled(False)

        if config.capability == "mlm" and self.tokenizer.mask_token_id is None:
            raise ValueError(
                "mlm capability requires a tokenizer with a mask token"
            )
        self.vocab_size = len(self.tokenizer)
        self.model_id = str(config.model_dir)
        logger.info("loaded %s (%s, vocab=%d)", self.model_id,
                    config.capability, self.vocab_size)

    # ------------------------------------------------------------------

    def tokenize(self, text: str) -> tuple[list[int], list[str]]:
        ids = self.tokenizer.encode(text, add_special_tokens=False)
        if len(ids) > self.config.max_seq_len:
            raise ValueError(
                f"text tokenizes to {len(ids)} tokens, limit is "
                f"{self.config.max_seq_len}"
            )
        return list(ids), self.tokenizer.convert_ids_to_tokens(ids)

    def _resolve_masks(self, token_ids: Sequence[int]) -> list[int]:
        mask_id = self.tokenizer.mask_token_id
        out = []
        for t in token_ids:
            if t < 0:
                if mask_id is None:
                    raise ValueError("negative (masked) ids need a mask token")
                out.append(mask_id)
            elif t >= self.vocab_size:
                raise ValueError(f"token id {t} outside vocabulary")
            else:
                out.append(int(t))
        return out

    def _wrap_special(self, ids: list[int]) -> tuple[list[int], int]:
        """Surround with the model's special tokens; returns the offset the
        original positions moved by."""
        bos = self.tokenizer.cls_token_id
        eos = self.tokenizer.sep_token_id
        if bos is None or eos is None:
            return ids, 0
        return [bos] + ids + [eos], 1

    def _mask_logprobs(
        self, token_ids: Sequence[int], mask_position: int
    ) -> torch.Tensor:
        if not (0 <= mask_position < len(token_ids)):
            raise ValueError(f"mask_position {mask_position} out of range")
        ids = self._resolve_masks(token_ids)
        ids[mask_position] = self.tokenizer.mask_token_id
        ids, offset = self._wrap_special(ids)
        if len(ids) > self.config.max_seq_len:
            raise ValueError("sequence exceeds max_seq_len")
        batch = torch.tensor([ids], device=self.config.device)
        logits = self.model(input_ids=batch).logits[0, mask_position + offset]
        return torch.log_softmax(logits, dim=-1)

    def score_mlm(
        self, token_ids: Sequence[int], mask_position: int, target_id: int
    ) -> float:
        if not (0 <= target_id < self.vocab_size):
            raise ValueError(f"target id {target_id} outside vocabulary")
        logprobs = self._mask_logprobs(token_ids, mask_position)
        return float(logprobs[target_id])

    def mlm_candidates(
        self, token_ids: Sequence[int], mask_position: int, top_m: int
    ) -> list[dict]:
        if top_m < 1:
            raise ValueError("top_m must be >= 1")
        logprobs = self._mask_logprobs(token_ids, mask_position)
        top = torch.topk(logprobs, k=min(top_m, self.vocab_size))
        out = []
        for lp, tid in zip(top.values.tolist(), top.indices.tolist()):
            out.append({
                "token_id": tid,
                "token": self.tokenizer.convert_ids_to_tokens([tid])[0],
                "logprob": lp,
            })
        return out

    def score_causal(self, prefix_ids: Sequence[int], target_id: int) -> float:
        if not (0 <= target_id < self.vocab_size):
            raise ValueError(f"target id {target_id} outside vocabulary")
        bos = (self.model.config.bos_token_id
               if self.model.config.bos_token_id is not None
               else self.tokenizer.cls_token_id)
        ids = self._resolve_masks(prefix_ids)
        if bos is not None:
            ids = [bos] + ids
        elif not ids:
            raise ValueError(
                "empty prefix needs a model with a beginning-of-sequence token"
            )
        if len(ids) > self.config.max_seq_len:
            raise ValueError("prefix exceeds max_seq_len")
        batch = torch.tensor([ids], device=self.config.device)
        logits = self.model(input_ids=batch).logits[0, -1]
        logprobs = torch.log_softmax(logits, dim=-1)
        return float(logprobs[target_id])
