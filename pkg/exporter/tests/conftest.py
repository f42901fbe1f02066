"""Shared fixtures: a 50-sentence mixed-script corpus and a tiny causal LM.

The model is a 2-layer GPT-2 with random (seeded) weights over a byte-level
BPE vocabulary trained on the corpus itself. Random weights are fine here:
every contract under test (schema conformance, loss equality, character
counting) is independent of model quality, and nothing needs downloading.
"""

from __future__ import annotations

import pytest

# mixed scripts on purpose: ASCII, accented Latin (including decomposed
# forms that NFC must collapse), CJK, RTL, emoji, and combinations
SENTENCES = [
    "The quick brown fox jumps over the lazy dog.",
    "A watched pot never boils, or so they say.",
    "Seventeen sparrows argued about the last crumb.",
    "She sells seashells by the seashore every summer.",
    "The library closes at nine on weekdays.",
    "Rain is expected across the northern valleys tonight.",
    "He repaired the old clock with borrowed tools.",
    "Two trains left the station at the same minute.",
    "The committee postponed its decision until March.",
    "Fresh bread costs more at the corner bakery.",
    "Der Zug nach München hat heute Verspätung.",
    "Größere Städte haben selten genug Wohnraum.",
    "Le café au lait coûte trois euros ici.",
    "Café au lait is spelled with a combining accent here.",
    "El niño pequeño encontró una moneda antigua.",
    "A bűvész eltüntette a piros kendőt.",
    "Tôi thích ăn phở vào buổi sáng.",
    "Škola začíná v osm hodin ráno.",
    "日本語のテキストを少し混ぜます。",
    "猫は窓のそばで眠っている。",
    "中文句子也应该出现在语料里。",
    "春眠不觉晓，处处闻啼鸟。",
    "図書館で古い地図を見つけた。",
    "한국어 문장도 하나 넣어 둡니다.",
    "שלום עולם, זה משפט בעברית.",
    "הספרייה נסגרת מוקדם ביום שישי.",
    "مرحبا بالعالم، هذه جملة بالعربية.",
    "القطار يغادر المحطة في الصباح الباكر.",
    "این جمله به زبان فارسی است.",
    "Привет, мир! Это русское предложение.",
    "Поезд прибывает на второй путь.",
    "Γειά σου κόσμε, αυτή είναι μια πρόταση.",
    "Το πλοίο φτάνει το απόγευμα.",
    "สวัสดีครับ นี่คือประโยคภาษาไทย",
    "नमस्ते दुनिया, यह हिंदी का वाक्य है।",
    "We visited 北京 and then flew to Paris. 🛫",
    "The recipe needs 3½ cups of flour 🥖.",
    "Mixing scripts: שלום and hello and 你好.",
    "Emoji at the end of a sentence 🎉🎊.",
    "A thumbs up 👍 and a wave 👋 in the middle.",
    "Family emoji with joiners: 👨‍👩‍👧‍👦 stays intact.",
    "Flags like 🇩🇪 and 🇯🇵 are regional indicator pairs.",
    "Numbers 12345 and punctuation !?;: survive export.",
    "Tabs and    wide   spacing collapse to nothing special.",
    "CamelCaseWords and snake_case_words tokenize differently.",
    "URLs like example.com/path?q=1 are just text here.",
    "Quotes “curly” and 'straight' both appear.",
    "Dashes - hyphens and minus signs 3-2=1.",
    "Ümlaute über älteren Wörtern häufen sich.",
    "The final sentence closes the corpus cleanly.",
]


@pytest.fixture(scope="session")
def corpus_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "sentences.txt"
    path.write_text("".join(s + "\n" for s in SENTENCES), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory):
    import torch
    from tokenizers import Tokenizer, decoders, models, pre_tokenizers, trainers
    from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

    raw = Tokenizer(models.BPE())
    raw.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    raw.decoder = decoders.ByteLevel()
    trainer = trainers.BpeTrainer(
        vocab_size=384,
        min_frequency=1,
        special_tokens=["<|bos|>", "<|eos|>"],
        initial_alphabet=pre_tokenizers.ByteLevel.alphabet(),
    )
    raw.train_from_iterator(SENTENCES, trainer)
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=raw, bos_token="<|bos|>", eos_token="<|eos|>"
    )

    torch.manual_seed(7)
    config = GPT2Config(
        vocab_size=len(tokenizer),
        n_positions=256,
        n_embd=64,
        n_layer=2,
        n_head=2,
        bos_token_id=tokenizer.bos_token_id,
        eos_token_id=tokenizer.eos_token_id,
    )
    model = GPT2LMHeadModel(config)
    model.eval()

    out = tmp_path_factory.mktemp("model")
    tokenizer.save_pretrained(out)
    model.save_pretrained(out)
    return out
