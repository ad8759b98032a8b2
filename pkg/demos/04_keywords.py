"""Probing a trained model with edited keyword sets.

Trains attention-cfa on the default synthetic experiment, then rescores the
held-out test split three times: with the keywords as generated, with every
keyword set replaced by triggers of a training-only subtype, and with every
keyword set replaced by filler words. The first two are expected to behave
alike on this corpus: its embedding geometry gives all trigger words one
shared direction, so any four triggers describe "an event" equally well.
Filler keywords are the interesting probe; they test whether the model reads
the keyword channel at all.

Run:  python3 demos/04_keywords.py   (roughly half a minute)
"""

import time
from dataclasses import replace

from lfked.corpus import dataset_stats, holdout_split
from lfked.datagen import SynthSpec, generate_lfk, synth_corpus
from lfked.encoding import EmbeddingTable
from lfked.metrics import evaluate
from lfked.models import Model, ModelConfig
from lfked.training import TrainConfig, train

TARGET = "beta"


def swap_keywords(examples, keywords):
    kws = tuple(keywords)
    return [replace(ex, keywords=kws) for ex in examples]


def main():
    spec = SynthSpec()
    train_c, dev_c, test_c, lexicon, typemap, vectors = synth_corpus(spec, seed=3)
    emb = EmbeddingTable(vectors, spec.embed_dim)
    held = holdout_split(train_c, dev_c, test_c, TARGET, typemap)
    train_set, dev_set, test_set = (
        generate_lfk(corpus, lexicon, typemap, TARGET, split, seed=7)
        for split, corpus in zip(("train", "dev", "test"), held))
    st = dataset_stats(test_set)
    print(f"test split: +{st.positives} -{st.negatives}, all positives from "
          f"{TARGET} subtypes the model never trained on")

    print("\ntraining attention-cfa, 15 epochs")
    model = Model(ModelConfig(word_dim=spec.embed_dim, seed=0), emb)
    t0 = time.time()
    result = train(model, train_set, dev_set, TrainConfig(epochs=15, patience=15, seed=0))
    print(f"best dev F1 {result.best_f1:.3f} ({time.time() - t0:.0f}s)")

    train_subtype_kws = sorted(lexicon.triggers["alpha_1"])[:4]
    filler_kws = [f"filler{k:02d}" for k in range(4)]
    probes = [
        ("generated keywords (target-subtype triggers)", test_set),
        ("swapped: alpha_1 triggers " + str(train_subtype_kws),
         swap_keywords(test_set, train_subtype_kws)),
        ("swapped: filler words " + str(filler_kws),
         swap_keywords(test_set, filler_kws)),
    ]

    print("\nrescoring the same test sentences under each keyword condition:")
    for label, probe in probes:
        rep = evaluate(model, probe)
        positive_rate = (rep.tp + rep.fp) / len(probe)
        print(f"  {label}")
        print(f"    P {rep.precision:.3f}  R {rep.recall:.3f}  F1 {rep.f1:.3f}  "
              f"predicted-positive rate {positive_rate:.2f}")

    print("\nReading the result: trigger-for-trigger swaps should score close "
          "to the original\n(one shared triggerness direction by construction). "
          "A drop under filler keywords means\nthe conditioning and attention "
          "paths actually consume V_K; no drop means this\ncorpus never forced "
          "the model to read it. Either way the probe makes the\ndependence "
          "measurable, which is the point.")


if __name__ == "__main__":
    main()
