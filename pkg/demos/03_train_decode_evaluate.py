"""Walkthrough: end-to-end training on the synthetic corpus, decoding
predictions and scoring them.

Run: python demos/03_train_decode_evaluate.py   (about half a minute)
"""

from convcause import (
    DecodeConfig,
    EmotionCauseModel,
    EncoderConfig,
    ModelConfig,
    TrainConfig,
    decode_conversation,
    evaluate,
    fit,
    make_synthetic_dataset,
    pairs_by_conversation,
)

# The synthetic corpus is separable by construction: cue words mark the
# effect utterance's emotion, contiguous trigger runs mark the cause span.
corpus = make_synthetic_dataset(n_conversations=8, seed=0)
print(f"corpus: {len(corpus)} conversations, emotions {corpus.emotions}, vocab {len(corpus.vocabulary)}")

encoder = EncoderConfig(mode="toy", d_text=32, n_layers=1, n_heads=2, d_speaker=8, dropout=0.1)
model = EmotionCauseModel(ModelConfig(encoder=encoder, d_g=32, dropout=0.1), corpus.emotions, corpus.vocabulary, seed=7)
config = TrainConfig(lr=1e-3, epochs=120, patience=25, seed=7, dev_metric_mode="strict")

print(f"model parameters: {model.parameter_count()}")
log = fit(model, corpus, corpus, config)
print(f"stopped after {len(log.epochs)} epochs; best dev strict F = {log.best_f1:.3f} at epoch {log.best_epoch}")

# Decode one conversation and compare with its gold annotation.
conv = corpus.conversations[0]
scores = model.forward(conv)
pairs, utterance_emotions = decode_conversation(conv, scores, model.emotions, DecodeConfig())
print(f"\nconversation {conv.id}:")
for u in conv.utterances:
    print(f"  [{u.index}] gold={u.gold_emotion:<8} predicted={utterance_emotions[u.index - 1]:<8} {' '.join(u.tokens)}")
print(f"  gold pairs:      {[(p.cause_index, p.effect_index, p.emotion, p.span) for p in conv.gold_pairs]}")
print(f"  predicted pairs: {[(p.cause_index, p.effect_index, p.emotion, p.span) for p in pairs]}")

# Score the whole corpus in the three matching modes.
predictions = {}
for conv in corpus.conversations:
    pairs, _ = decode_conversation(conv, model.forward(conv), model.emotions)
    predictions[conv.id] = pairs
golds = pairs_by_conversation(corpus)
for mode in ("strict", "proportional", "pair_only"):
    prf = evaluate(predictions, golds, mode=mode)
    print(f"{mode:>13}: P={prf.weighted_precision:.3f} R={prf.weighted_recall:.3f} F={prf.weighted_f1:.3f}")
