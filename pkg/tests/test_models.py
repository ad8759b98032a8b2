"""Model building blocks, the four variants, and end-to-end gradients."""

import numpy as np
import pytest

from lfked import autodiff as ad
from lfked.autodiff import Tape, Tensor
from lfked.corpus import LFKExample
from lfked.encoding import EmbeddingTable, WordTable
from lfked.models import (
    ACTIVATIONS,
    Model,
    ModelConfig,
    cfa_condition,
    cnn_layer,
    head_attention,
    head_concat,
    identity_cfa_surgery,
    init_params,
    param_shapes,
)
from lfked.seeding import rng_for

from fd import central_diff, max_rel_error


def tiny_config(**kw):
    """The small shapes used for end-to-end gradient checking."""
    base = dict(
        head="attention",
        cfa=True,
        layers=2,
        windows=(2, 3),
        filters=3,
        dropout=0.0,
        word_dim=8,
        pos_dim=4,
        max_offset=5,
        attn_hidden=6,
        ffn_hidden=8,
        seed=11,
    )
    base.update(kw)
    return ModelConfig(**base)


def tiny_emb(dim=8, seed=0):
    rng = rng_for(seed, "emb")
    vocab = [f"w{i}" for i in range(12)] + [f"k{i}" for i in range(6)]
    return EmbeddingTable({t: rng.normal(size=dim) for t in vocab}, dim)


def example(n=5, anchor=2, label=1):
    return LFKExample(
        tokens=[f"w{i}" for i in range(n)],
        anchor=anchor,
        keywords=("k0", "k1", "k2", "k3"),
        label=label,
    )


# --- config -----------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError, match="head"):
        tiny_config(head="pool").validate()
    with pytest.raises(ValueError, match="layers"):
        tiny_config(layers=5).validate()
    with pytest.raises(ValueError, match="windows"):
        tiny_config(windows=()).validate()
    with pytest.raises(ValueError, match="duplicate"):
        tiny_config(windows=(2, 2)).validate()
    with pytest.raises(ValueError, match="dropout"):
        tiny_config(dropout=1.0).validate()
    with pytest.raises(ValueError, match="conv_act"):
        tiny_config(conv_act="softplus").validate()


def test_config_variants():
    cfg = tiny_config()
    assert cfg.with_variant("concat").variant == "concat"
    assert cfg.with_variant("attention-cfa").cfa is True
    assert cfg.with_variant("concat-cfa").head == "concat"
    with pytest.raises(ValueError, match="unknown variant"):
        cfg.with_variant("maxpool")


def test_cfa_layer_selection():
    assert tiny_config(layers=3).cfa_layers() == [1, 2, 3]
    assert tiny_config(layers=3, cfa_last=False).cfa_layers() == [1, 2]
    assert tiny_config(layers=1, cfa_last=False).cfa_layers() == []
    assert tiny_config(cfa=False).cfa_layers() == []


def test_param_shapes_and_shared_init():
    cfg = tiny_config(head="concat", cfa=False, layers=1)
    shapes = param_shapes(cfg)
    assert shapes["conv1.w2.filters"] == (2, 12, 3)
    assert shapes["ffn.hidden.w"] == (8, cfg.feature_width + cfg.word_dim)
    assert "attn.u.w" not in shapes and "cfa1.gamma.w" not in shapes

    # same seed + same name -> identical values across different configs
    plain = init_params(cfg)
    with_cfa = init_params(tiny_config(head="concat", cfa=True, layers=1))
    for name in plain:
        assert (plain[name].data == with_cfa[name].data).all(), name
    assert "cfa1.gamma.w" in with_cfa


def test_paper_scale_feature_width():
    # 4 window sizes with 100 filters each -> 400 features; concat head
    # appends a 300-dim keyword vector -> R has 700 entries.
    cfg = ModelConfig(head="concat", cfa=False)
    assert cfg.feature_width == 400
    assert cfg.repr_width == 700


# --- building blocks ---------------------------------------------------------


def test_cnn_layer_zero_input_gives_activated_bias():
    rng = rng_for(0, "t")
    h = Tensor(np.zeros((4, 5)))
    wp = []
    for w in (2, 3):
        wp.append((Tensor(rng.normal(size=(w, 5, 3))), Tensor(rng.normal(size=3))))
    out = cnn_layer(h, wp, ACTIVATIONS["tanh"])
    assert out.shape == (4, 6)
    want = np.concatenate([np.tanh(wp[0][1].data), np.tanh(wp[1][1].data)])
    assert np.abs(out.data - want).max() < 1e-15


def test_cnn_layer_matches_per_window_oracle():
    rng = rng_for(1, "t")
    h = Tensor(rng.normal(size=(6, 4)))
    wp = [
        (Tensor(rng.normal(size=(w, 4, 2))), Tensor(rng.normal(size=2)))
        for w in (1, 2, 3)
    ]
    out = cnn_layer(h, wp, ACTIVATIONS["tanh"])
    pieces = [np.tanh(ad.conv1d_same(h, f, b).data) for f, b in wp]
    assert np.abs(out.data - np.concatenate(pieces, axis=1)).max() < 1e-12


def test_cfa_identity_and_degenerate_cases():
    rng = rng_for(2, "t")
    h = Tensor(rng.normal(size=(5, 4)))
    v = Tensor(rng.normal(size=3))
    zeros_w = Tensor(np.zeros((4, 3)))
    ones_b = Tensor(np.ones(4))
    zeros_b = Tensor(np.zeros(4))
    ident = ACTIVATIONS["identity"]

    out = cfa_condition(h, v, zeros_w, ones_b, zeros_w, zeros_b, ident)
    assert (out.data == h.data).all()

    # gamma = 0: output is beta at every position, independent of h
    beta_b = Tensor(rng.normal(size=4))
    out = cfa_condition(h, v, zeros_w, zeros_b, zeros_w, beta_b, ident)
    assert (out.data == np.tile(beta_b.data, (5, 1))).all()


def test_cfa_matches_position_loop_oracle():
    rng = rng_for(3, "t")
    h = Tensor(rng.normal(size=(5, 4)))
    v = Tensor(rng.normal(size=3))
    gw, gb = Tensor(rng.normal(size=(4, 3))), Tensor(rng.normal(size=4))
    bw, bb = Tensor(rng.normal(size=(4, 3))), Tensor(rng.normal(size=4))
    out = cfa_condition(h, v, gw, gb, bw, bb, ACTIVATIONS["sigmoid"])
    sig = lambda x: 1.0 / (1.0 + np.exp(-x))
    gamma = sig(gw.data @ v.data + gb.data)
    beta = sig(bw.data @ v.data + bb.data)
    for j in range(5):
        assert np.abs(out.data[j] - (gamma * h.data[j] + beta)).max() < 1e-12


def test_head_concat():
    h = Tensor(np.array([[1.0, 5.0], [3.0, 2.0]]))
    v = Tensor(np.array([7.0, 8.0, 9.0]))
    out = head_concat(h, v)
    assert out.data.tolist() == [3.0, 5.0, 7.0, 8.0, 9.0]
    single = head_concat(Tensor(np.array([[4.0, 6.0]])), v)
    assert single.data.tolist() == [4.0, 6.0, 7.0, 8.0, 9.0]


def attention_params(rng, F=4, d=3, hidden=6):
    return (
        Tensor(rng.normal(size=(F, hidden))),
        Tensor(rng.normal(size=hidden)),
        Tensor(rng.normal(size=(hidden, d + F))),
        Tensor(rng.normal(size=hidden)),
    )


def test_head_attention_single_position():
    rng = rng_for(4, "t")
    h = Tensor(rng.normal(size=(1, 4)))
    v = Tensor(rng.normal(size=3))
    aux = {}
    out = head_attention(h, v, 0, *attention_params(rng), ACTIVATIONS["tanh"], aux=aux)
    assert aux["alpha"].tolist() == [1.0]
    assert np.abs(out.data - h.data[0]).max() < 1e-15


def test_head_attention_identical_positions_uniform():
    rng = rng_for(5, "t")
    row = rng.normal(size=4)
    h = Tensor(np.tile(row, (6, 1)))
    v = Tensor(rng.normal(size=3))
    aux = {}
    out = head_attention(h, v, 3, *attention_params(rng), ACTIVATIONS["tanh"], aux=aux)
    assert np.abs(aux["alpha"] - 1.0 / 6).max() < 1e-12
    assert np.abs(out.data - row).max() < 1e-12


def test_head_attention_matches_oracle():
    rng = rng_for(6, "t")
    h = Tensor(rng.normal(size=(5, 4)))
    v = Tensor(rng.normal(size=3))
    uw, ub, cw, cb = attention_params(rng)
    aux = {}
    out = head_attention(h, v, 2, uw, ub, cw, cb, ACTIVATIONS["tanh"], aux=aux)

    keys = np.tanh(h.data @ uw.data + ub.data)
    query = np.tanh(cw.data @ np.concatenate([v.data, h.data[2]]) + cb.data)
    scores = keys @ query
    e = np.exp(scores - scores.max())
    alpha = e / e.sum()
    assert np.abs(aux["alpha"] - alpha).max() < 1e-12
    assert np.abs(out.data - alpha @ h.data).max() < 1e-12
    assert abs(aux["alpha"].sum() - 1.0) < 1e-9


def test_head_attention_anchor_range():
    h = Tensor(np.zeros((2, 4)))
    v = Tensor(np.zeros(3))
    with pytest.raises(ValueError, match="anchor 2"):
        head_attention(h, v, 2, *attention_params(rng_for(0, "t")), ACTIVATIONS["tanh"])


# --- full models --------------------------------------------------------------


def test_forward_shape_for_all_variants_and_lengths():
    emb = tiny_emb()
    for variant in ("concat", "attention", "concat-cfa", "attention-cfa"):
        model = Model(tiny_config().with_variant(variant), emb)
        for n in (1, 2, 4, 9):
            logits = model.forward(example(n=n, anchor=0))
            assert logits.shape == (2,), (variant, n)


def test_eval_forward_deterministic():
    model = Model(tiny_config(), tiny_emb())
    a = model.forward(example()).data
    b = model.forward(example()).data
    assert (a == b).all()


def test_train_forward_needs_rng_and_applies_dropout():
    model = Model(tiny_config(dropout=0.5), tiny_emb())
    with pytest.raises(ValueError, match="rng"):
        model.forward(example(), train=True)
    a = model.forward(example(), train=True, rng=rng_for(0, "d")).data
    b = model.forward(example(), train=True, rng=rng_for(1, "d")).data
    assert not (a == b).all()


def test_concat_pipeline_matches_hand_wired_oracle():
    # cfa off, concat head: wire the same computation directly from autodiff
    # ops and compare.
    cfg = tiny_config(head="concat", cfa=False, layers=2)
    emb = tiny_emb()
    model = Model(cfg, emb)
    ex = example(n=6, anchor=3)
    got = model.forward(ex).data

    from lfked.encoding import encode, keyword_repr

    enc = encode(ex.tokens, ex.anchor, emb, model.pos)
    v_k = keyword_repr(ex.keywords, emb)
    h = enc.h0
    p = model.params
    for i in (1, 2):
        h = ad.concat(
            [ad.tanh(ad.conv1d_same(h, p[f"conv{i}.w{w}.filters"], p[f"conv{i}.w{w}.bias"]))
             for w in cfg.windows],
            axis=1,
        )
    r = ad.concat([ad.maxpool_time(h), v_k])
    hidden = ad.tanh(ad.affine(p["ffn.hidden.w"], r, p["ffn.hidden.b"]))
    want = ad.affine(p["ffn.out.w"], hidden, p["ffn.out.b"]).data
    assert (got == want).all()


def test_identity_cfa_surgery_bitwise_equality():
    emb = tiny_emb()
    for head in ("concat", "attention"):
        plain = Model(tiny_config(head=head, cfa=False), emb)
        conditioned = Model(tiny_config(head=head, cfa=True, cfa_act="identity"), emb)
        identity_cfa_surgery(conditioned)
        for n, anchor in ((1, 0), (5, 2), (8, 7)):
            ex = example(n=n, anchor=anchor)
            a = plain.forward(ex).data
            b = conditioned.forward(ex).data
            assert (a == b).all(), (head, n)


def test_surgery_requires_identity_activation():
    model = Model(tiny_config(cfa_act="sigmoid"), tiny_emb())
    with pytest.raises(ValueError, match="identity"):
        identity_cfa_surgery(model)
    plain = Model(tiny_config(cfa=False), tiny_emb())
    with pytest.raises(ValueError, match="no CFA"):
        identity_cfa_surgery(plain)


def test_alpha_sums_to_one_across_random_examples():
    model = Model(tiny_config(), tiny_emb())
    rng = rng_for(7, "alpha")
    for _ in range(50):
        n = int(rng.integers(1, 12))
        ex = example(n=n, anchor=int(rng.integers(n)))
        aux = {}
        model.forward(ex, aux=aux)
        alpha = aux["alpha"]
        assert alpha.shape == (n,)
        assert (alpha >= 0).all()
        assert abs(alpha.sum() - 1.0) < 1e-9


def test_predict_tie_is_negative():
    model = Model(tiny_config(), tiny_emb())
    model.params["ffn.out.w"].data[:] = 0.0
    model.params["ffn.out.b"].data[:] = 0.0
    assert model.predict(example()) == 0


def test_no_dead_parameters_on_attention_cfa_batch():
    # Attention-CFA exercises every parameter family (conv, cfa, attention,
    # ffn, position table); each must see nonzero gradient on a small batch.
    emb = tiny_emb()
    model = Model(tiny_config(), emb)
    batch = [example(n=5, anchor=i % 5, label=i % 2) for i in range(8)]
    with Tape() as tape:
        total = model.loss(batch[0])
        for ex in batch[1:]:
            total = ad.add(total, model.loss(ex))
        tape.backward(total)
    for name, p in model.named_params().items():
        assert np.abs(p.grad).sum() > 0, f"dead parameter {name}"


def test_word_table_gets_gradient_when_finetuning():
    emb = tiny_emb()
    ex = example()
    words = WordTable(emb, ex.tokens + list(ex.keywords))
    model = Model(tiny_config(), emb, words=words)
    with Tape() as tape:
        tape.backward(model.loss(ex))
    assert np.abs(words.matrix.grad).sum() > 0
    assert "words.matrix" in model.named_params()


def test_embedding_dim_mismatch_rejected():
    with pytest.raises(ValueError, match="word_dim"):
        Model(tiny_config(word_dim=9), tiny_emb(dim=8))


# --- end-to-end gradient check -------------------------------------------------


@pytest.mark.parametrize("variant", ["concat", "attention", "concat-cfa", "attention-cfa"])
def test_end_to_end_gradients_match_finite_differences(variant):
    # Floor 1e-6 here, not the 1e-8 used for single ops: central differences
    # of an O(1) loss carry ~1e-11 roundoff, and whole-model parameters can
    # have legitimately tiny gradients at init.
    emb = tiny_emb()
    model = Model(tiny_config().with_variant(variant), emb)
    ex = example(n=5, anchor=2, label=1)

    with Tape() as tape:
        tape.backward(model.loss(ex))

    def loss_value():
        return float(model.loss(ex).data)

    worst = 0.0
    for name, p in model.named_params().items():
        numeric = central_diff(loss_value, p.data)
        worst = max(worst, max_rel_error(p.grad, numeric, floor=1e-6))
    assert worst < 1e-4, f"{variant}: max rel err {worst:.3e}"
