"""Binary example synthesis and the synthetic stand-in corpus.

generate_lfk turns an annotated corpus into keyword-matching examples: every
event mention yields 5 positives whose keyword sets are 4-subsets of the
mention subtype's trigger pool (anchor word excluded), and every "Other"
mention yields 1 negative paired with keywords from a subtype the split is
allowed to see (train: everything outside the held-out target type; dev/test:
the target type only).

synth_corpus builds a small artificial corpus that is learnable by
construction and, critically, transferable to held-out subtypes: every
trigger word's vector is the shared "triggerness" direction tau plus noise,
while context and filler vectors are undifferentiated noise. Subtype
identity lives only in the token inventory, never in embedding geometry, so
the anchor cue a model learns on training subtypes is exactly the cue
present on held-out ones and no direction anti-correlates with them. Event
sentences also carry one "Other" anchor placed within two tokens of the
trigger, so a bag-of-window model sees trigger evidence on some negatives
while an anchor-position-aware model does not.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .corpus import (
    OTHER,
    Corpus,
    Document,
    EventMention,
    LFKExample,
    Sentence,
    TriggerLexicon,
    TypeMap,
)
from .seeding import rng_for

log = logging.getLogger(__name__)

KEYWORDS_PER_EXAMPLE = 4
POSITIVES_PER_MENTION = 5


def _draw_subset(pool: list[str], rng) -> tuple[str, ...]:
    idx = rng.choice(len(pool), size=KEYWORDS_PER_EXAMPLE, replace=False)
    return tuple(sorted(pool[i] for i in idx))


def _draw_positive_subsets(pool: list[str], rng) -> list[tuple[str, ...]]:
    # Distinct subsets when the pool allows it, otherwise independent draws.
    if math.comb(len(pool), KEYWORDS_PER_EXAMPLE) >= POSITIVES_PER_MENTION:
        seen: set[tuple[str, ...]] = set()
        while len(seen) < POSITIVES_PER_MENTION:
            seen.add(_draw_subset(pool, rng))
        return sorted(seen)
    return [_draw_subset(pool, rng) for _ in range(POSITIVES_PER_MENTION)]


def negative_subtype_pool(
    lexicon: TriggerLexicon, type_map: TypeMap, target_type: str, split: str
) -> list[str]:
    """Subtypes eligible as negative keyword sources for one split."""
    target_subs = type_map.subtypes_of(target_type)
    if split == "train":
        candidates = set(type_map.subtype_of) - target_subs
    else:
        candidates = target_subs
    return sorted(s for s in candidates if len(lexicon.pool(s)) >= KEYWORDS_PER_EXAMPLE)


def generate_lfk(
    corpus: Corpus,
    lexicon: TriggerLexicon,
    type_map: TypeMap,
    target_type: str,
    split: str,
    seed: int,
) -> list[LFKExample]:
    """Synthesize binary examples from an annotated corpus.

    Deterministic given the seed: each document draws from its own random
    stream keyed by (seed, "datagen", document index), so results do not
    depend on how documents might be processed in parallel.
    """
    if split not in ("train", "dev", "test"):
        raise ValueError(f"split must be train/dev/test, got {split!r}")
    neg_pool = negative_subtype_pool(lexicon, type_map, target_type, split)
    if not neg_pool:
        side = "outside" if split == "train" else "inside"
        raise ValueError(
            f"no subtype {side} target type {target_type!r} has at least "
            f"{KEYWORDS_PER_EXAMPLE} triggers; cannot draw negative keywords "
            f"for split {split!r}"
        )

    examples: list[LFKExample] = []
    for doc_index, doc in enumerate(corpus.documents):
        rng = rng_for(seed, "datagen", doc_index)
        for sent in doc.sentences:
            for m in sent.mentions:
                if m.subtype == OTHER:
                    sub = neg_pool[rng.integers(len(neg_pool))]
                    examples.append(
                        LFKExample(
                            tokens=sent.tokens,
                            anchor=m.anchor,
                            keywords=_draw_subset(sorted(lexicon.pool(sub)), rng),
                            label=0,
                            source_subtype=sub,
                        )
                    )
                    continue
                if m.subtype not in type_map.subtype_of:
                    raise ValueError(
                        f"{doc.doc_id}: mention subtype {m.subtype!r} missing "
                        f"from the type map"
                    )
                anchor_word = sent.tokens[m.anchor].lower()
                pool = sorted(lexicon.pool(m.subtype) - {anchor_word})
                if len(pool) < KEYWORDS_PER_EXAMPLE:
                    log.warning(
                        "skipping mention of %r in %s: only %d usable triggers",
                        m.subtype,
                        doc.doc_id,
                        len(pool),
                    )
                    continue
                for kws in _draw_positive_subsets(pool, rng):
                    examples.append(
                        LFKExample(
                            tokens=sent.tokens,
                            anchor=m.anchor,
                            keywords=kws,
                            label=1,
                            source_subtype=m.subtype,
                        )
                    )
    return examples


# ---------------------------------------------------------------------------
# synthetic corpus


_TYPE_NAMES = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta"]


@dataclass
class SynthSpec:
    """Shape of the generated corpus. Defaults give a desk-scale dataset
    (a few hundred training examples) that trains in seconds."""

    n_types: int = 2
    subtypes_per_type: int = 2
    triggers_per_subtype: int = 6
    context_per_subtype: int = 10
    filler_vocab: int = 30
    sentence_len: int = 9
    ctx_per_sentence: int = 4
    embed_dim: int = 50
    noise: float = 0.15
    events_train: int = 30
    events_dev: int = 10
    events_test: int = 12
    fillers_train: int = 60
    fillers_dev: int = 20
    fillers_test: int = 24
    sentences_per_doc: int = 8

    def validate(self):
        checks = [
            (self.n_types >= 2, "need at least 2 event types"),
            (self.subtypes_per_type >= 2, "need at least 2 subtypes per type"),
            (self.triggers_per_subtype >= 6, "need at least 6 triggers per subtype"),
            (self.context_per_subtype >= self.ctx_per_sentence,
             "context pool smaller than context words per sentence"),
            (self.filler_vocab >= 1, "need at least 1 filler word"),
            (self.sentence_len >= self.ctx_per_sentence + 2,
             "sentence too short for trigger + context + an Other anchor"),
            (self.embed_dim >= 2, "embedding dim must be >= 2"),
            (self.noise >= 0.0, "noise must be nonnegative"),
            (self.sentences_per_doc >= 1, "need at least 1 sentence per document"),
            (min(self.events_train, self.events_dev, self.events_test) >= 1,
             "need at least 1 event sentence per subtype per split"),
            (min(self.fillers_train, self.fillers_dev, self.fillers_test) >= 0,
             "filler counts must be nonnegative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(f"bad synth spec: {msg}")

    def type_names(self) -> list[str]:
        return [
            _TYPE_NAMES[i] if i < len(_TYPE_NAMES) else f"type{i}"
            for i in range(self.n_types)
        ]

    def subtype_names(self, type_name: str) -> list[str]:
        return [f"{type_name}_{j + 1}" for j in range(self.subtypes_per_type)]


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def synth_corpus(
    spec: SynthSpec, seed: int
) -> tuple[Corpus, Corpus, Corpus, TriggerLexicon, TypeMap, dict[str, np.ndarray]]:
    """Generate (train, dev, test) corpora plus lexicon, type map, and a
    word embedding table whose geometry makes the task solvable.

    Trigger vectors are tau + noise; context and filler vectors are random
    unit vectors. Keeping subtype-specific directions out of every vector
    matters for transfer twice over. A trigger carrying a subtype theme lets
    a model mix seen themes into its anchor cue, which unseen subtypes lack.
    Worse, themed context words anti-correlate with held-out positives:
    held-out event sentences still contribute their "Other" mentions to the
    training negatives, so a held-out theme would occur in training only on
    negatives and the model would learn to veto exactly the sentences whose
    positives it is later judged on.
    """
    spec.validate()
    types = spec.type_names()
    subtypes = [s for t in types for s in spec.subtype_names(t)]
    type_map = TypeMap(
        types=types,
        subtype_of={s: t for t in types for s in spec.subtype_names(t)},
    )

    triggers = {s: [f"{s}_trg{k}" for k in range(spec.triggers_per_subtype)] for s in subtypes}
    contexts = {s: [f"{s}_ctx{k}" for k in range(spec.context_per_subtype)] for s in subtypes}
    fillers = [f"filler{k:02d}" for k in range(spec.filler_vocab)]

    rng_e = rng_for(seed, "synth", "embeddings")
    d = spec.embed_dim
    tau = _unit(rng_e.normal(size=d))

    def jitter():
        return rng_e.normal(0.0, spec.noise / math.sqrt(d), size=d)

    embeddings: dict[str, np.ndarray] = {}
    for s in subtypes:
        for w in triggers[s]:
            embeddings[w] = tau + jitter()
        for w in contexts[s]:
            embeddings[w] = _unit(rng_e.normal(size=d))
    for w in fillers:
        embeddings[w] = _unit(rng_e.normal(size=d))

    def event_sentence(sub: str, rng) -> Sentence:
        n = spec.sentence_len
        t = int(rng.integers(n))
        tokens = [fillers[rng.integers(len(fillers))] for _ in range(n)]
        tokens[t] = triggers[sub][rng.integers(len(triggers[sub]))]
        free = [p for p in range(n) if p != t]
        ctx_pos = rng.choice(len(free), size=spec.ctx_per_sentence, replace=False)
        ctx_words = rng.choice(
            len(contexts[sub]), size=spec.ctx_per_sentence, replace=False
        )
        for p, w in zip(ctx_pos, ctx_words):
            tokens[free[p]] = contexts[sub][w]
        # Hard negative: an "Other" anchor close enough to the trigger that a
        # fixed window around it still contains the trigger word.
        near = [p for p in range(max(0, t - 2), min(n, t + 3)) if p != t]
        other = near[rng.integers(len(near))]
        return Sentence(tokens, [EventMention(t, sub), EventMention(other, OTHER)])

    def filler_sentence(rng) -> Sentence:
        n = spec.sentence_len
        tokens = [fillers[rng.integers(len(fillers))] for _ in range(n)]
        return Sentence(tokens, [EventMention(int(rng.integers(n)), OTHER)])

    def build_split(split: str, events: int, filler_count: int) -> Corpus:
        rng = rng_for(seed, "synth", split)
        sents = [
            event_sentence(sub, rng) for sub in subtypes for _ in range(events)
        ]
        sents += [filler_sentence(rng) for _ in range(filler_count)]
        order = rng.permutation(len(sents))
        sents = [sents[i] for i in order]
        docs = [
            Document(
                f"{split}_{i // spec.sentences_per_doc:03d}",
                sents[i : i + spec.sentences_per_doc],
            )
            for i in range(0, len(sents), spec.sentences_per_doc)
        ]
        return Corpus(docs)

    train = build_split("train", spec.events_train, spec.fillers_train)
    dev = build_split("dev", spec.events_dev, spec.fillers_dev)
    test = build_split("test", spec.events_test, spec.fillers_test)
    for c in (train, dev, test):
        c.validate()
    lexicon = TriggerLexicon({s: set(triggers[s]) for s in subtypes})
    return train, dev, test, lexicon, type_map, embeddings
