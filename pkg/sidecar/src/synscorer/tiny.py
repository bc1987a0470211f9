"""Locally generated tiny base checkpoint.

Remote model hubs are not reachable from every deployment, so this module
builds a small generic base model from scratch: a 2-layer BERT encoder with
a word-level WordPiece vocabulary, pretrained briefly with masked-token
prediction on synthetic phrases in which one content word recurs.  That
recurrence teaches the attention layers to relate repeated tokens across a
sequence — the capability fine-tuning then sharpens into synonym
classification.  The result is a drop-in ``--checkpoint`` directory saved as
a two-way sequence classifier with a seeded pooler and head, so loading it
is reproducible.
"""

import json
import logging
import random
from pathlib import Path

import torch
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors
from transformers import (BertConfig, BertForMaskedLM,
                          BertForSequenceClassification, PreTrainedTokenizerFast)

log = logging.getLogger(__name__)

SPECIAL_TOKENS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]

# generic anatomical/structural vocabulary for the default base model
CONTENT_WORDS = [
    "kidney", "femur", "cortex", "atrium", "nerve", "tendon", "retina", "spleen",
    "larynx", "dermis", "axon", "fibula", "ulna", "radius", "sternum", "scapula",
    "humerus", "patella", "tibia", "carpus", "pelvis", "mandible", "clavicle",
    "occiput", "thorax", "ventricle", "aorta", "trachea", "bronchus", "pleura",
    "ileum", "jejunum", "duodenum", "pylorus", "cardia", "fundus", "cecum",
    "rectum", "colon", "liver", "hepatic", "renal", "neural", "dermal", "osseous",
    "mucosa", "serosa", "plexus", "ganglion", "synapse", "neuron", "glia",
    "myelin", "fascia", "ligament", "cartilage", "periosteum", "marrow",
    "diaphysis", "epiphysis", "condyle", "fossa", "foramen", "sulcus", "gyrus",
    "lobe", "lobule", "hilum", "cusp", "valve", "septum", "apex", "base",
    "margin", "surface", "border", "notch", "tubercle", "crest", "spine",
    "process", "head", "neck", "shaft", "facet", "groove", "canal", "duct",
    "gland", "follicle", "papilla", "crypt", "villus", "alveolus", "acinus",
]
FILLER_WORDS = [
    "structure", "region", "part", "main", "area", "the", "zone", "of",
    "segment", "body", "portion", "whole", "unit", "form", "kind", "left",
    "right", "upper", "lower", "inner", "outer", "anterior", "posterior",
]


def build_tokenizer(words: list[str]) -> PreTrainedTokenizerFast:
    """Word-level WordPiece tokenizer over ``words`` plus the special tokens."""
    vocab = {tok: i for i, tok in enumerate(SPECIAL_TOKENS + sorted(set(words)))}
    core = Tokenizer(models.WordPiece(vocab, unk_token="[UNK]",
                                      max_input_chars_per_word=64))
    core.normalizer = normalizers.BertNormalizer(lowercase=True)
    core.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    core.post_processor = processors.BertProcessing(
        sep=("[SEP]", vocab["[SEP]"]), cls=("[CLS]", vocab["[CLS]"]))
    return PreTrainedTokenizerFast(
        tokenizer_object=core, unk_token="[UNK]", pad_token="[PAD]",
        cls_token="[CLS]", sep_token="[SEP]", mask_token="[MASK]",
        model_input_names=["input_ids", "token_type_ids", "attention_mask"])


def tiny_config(vocab_size: int) -> BertConfig:
    return BertConfig(vocab_size=vocab_size, hidden_size=128, num_hidden_layers=2,
                      num_attention_heads=2, intermediate_size=256,
                      max_position_embeddings=160)


def _phrase(rng: random.Random, content: list[str], fillers: list[str]) -> str:
    word = rng.choice(content)
    frame = rng.sample(fillers, rng.randint(2, 4))
    tokens = frame[:1] + [word] + frame[1:] + [word]
    rng.shuffle(tokens)
    return " ".join(tokens)


def make_tiny_checkpoint(out_dir: str, content_words: list[str] | None = None,
                         filler_words: list[str] | None = None, seed: int = 7,
                         pretrain_steps: int = 3000, batch_size: int = 32,
                         lr: float = 5e-4) -> Path:
    """Build, pretrain, and save the tiny base checkpoint; returns its path."""
    content = sorted(set(content_words or CONTENT_WORDS))
    fillers = sorted(set(filler_words or FILLER_WORDS))
    tokenizer = build_tokenizer(content + fillers)
    mask_id = tokenizer.mask_token_id
    n_special = len(SPECIAL_TOKENS)

    torch.manual_seed(seed)
    model = BertForMaskedLM(tiny_config(len(tokenizer)))
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr)
    schedule = torch.optim.lr_scheduler.LinearLR(
        optimizer, start_factor=1.0, end_factor=0.05, total_iters=pretrain_steps)
    rng = random.Random(seed)

    model.train()
    for step in range(pretrain_steps):
        phrases = [_phrase(rng, content, fillers) for _ in range(batch_size)]
        enc = tokenizer(phrases, padding=True, return_tensors="pt")
        ids = enc["input_ids"].clone()
        labels = torch.full_like(ids, -100)
        picked = (torch.rand(ids.shape) < 0.25) & (ids >= n_special)
        labels[picked] = ids[picked]
        ids[picked] = mask_id
        optimizer.zero_grad()
        loss = model(input_ids=ids, attention_mask=enc["attention_mask"],
                     labels=labels).loss
        loss.backward()
        optimizer.step()
        schedule.step()
        if step % 500 == 0:
            log.info("pretrain step %d: loss %.3f", step, float(loss.detach()))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    # Save a full two-way classification model, not just the encoder: the
    # pooler and classification head are then part of the checkpoint, so
    # loading it (for serving or as a fine-tuning start point) is
    # deterministic instead of re-initializing those layers on every load.
    torch.manual_seed(seed)
    classifier = BertForSequenceClassification(tiny_config(len(tokenizer)))
    classifier.bert.load_state_dict(model.bert.state_dict(), strict=False)
    classifier.save_pretrained(out)
    tokenizer.save_pretrained(out)
    with open(out / "base_meta.json", "w", encoding="utf-8") as f:
        json.dump({"model": "tiny-base", "seed": seed,
                   "pretrain_steps": pretrain_steps, "vocab_size": len(tokenizer)},
                  f, indent=2, sort_keys=True)
    return out
