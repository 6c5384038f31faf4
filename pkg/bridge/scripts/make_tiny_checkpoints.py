#!/usr/bin/env python3
"""Build the pinned tiny checkpoints under bridge/fixtures/.

Two deliberately small randomly-initialized models (fixed seeds) sharing one
WordPiece tokenizer: a masked-LM and a causal LM. The weights are committed,
so golden transcripts stay meaningful regardless of how later library
versions initialize parameters.
"""

from __future__ import annotations

import sys
from pathlib import Path

import torch
from transformers import (BertConfig, BertForMaskedLM, BertTokenizer,
                          GPT2Config, GPT2LMHeadModel)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "the", "a", "of", "to", "and", "in", "is", "was", "he", "she", "it",
    "they", "on", "at", "for", "with", "said", "went", "city", "river",
    "house", "dog", "cat", "king", "queen", "soldier", "bridge", "market",
    "harbor", "ship", "stone", "old", "new", "red", "blue", "green",
    "north", "south", "little", "great", "write", "sentence", "that",
    "includes", "about", ":", ",", ".", "!", "?", "'", "-",
    "##s", "##ing", "##ed", "##er", "0", "1", "2",
]


def write_tokenizer(target: Path) -> BertTokenizer:
    target.mkdir(parents=True, exist_ok=True)
    vocab_file = target / "vocab.txt"
    vocab_file.write_text("".join(w + "\n" for w in VOCAB), encoding="utf-8")
    tokenizer = BertTokenizer(str(vocab_file), do_lower_case=True)
    tokenizer.save_pretrained(target)
    return tokenizer


def make_mlm(target: Path) -> None:
    tokenizer = write_tokenizer(target)
    torch.manual_seed(1234)
    config = BertConfig(
        vocab_size=len(tokenizer),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
        pad_token_id=tokenizer.pad_token_id,
    )
    model = BertForMaskedLM(config)
    model.save_pretrained(target)


def make_causal(target: Path) -> None:
    tokenizer = write_tokenizer(target)
    torch.manual_seed(4321)
    config = GPT2Config(
        vocab_size=len(tokenizer),
        n_positions=64,
        n_embd=32,
        n_layer=2,
        n_head=2,
        bos_token_id=tokenizer.cls_token_id,
        eos_token_id=tokenizer.sep_token_id,
        pad_token_id=tokenizer.pad_token_id,
    )
    model = GPT2LMHeadModel(config)
    model.save_pretrained(target)


def main() -> int:
    assert len(VOCAB) == len(set(VOCAB)), "vocab entries must be unique"
    make_mlm(FIXTURES / "tiny-mlm")
    make_causal(FIXTURES / "tiny-causal")
    print(f"checkpoints written under {FIXTURES}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
