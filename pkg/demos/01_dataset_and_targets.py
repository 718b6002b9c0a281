"""Walkthrough: loading a conversation corpus and building training targets.

Run: python demos/01_dataset_and_targets.py
"""

import json

from convcause import gold_targets, parse_dataset, to_canonical_json

# A two-conversation corpus in the canonical JSON schema. Pairs encode the
# effect utterance with its emotion, and the cause utterance with a span:
# either explicit token indices ("1_0_3") or the annotated words themselves.
DOC = json.dumps(
    [
        {
            "conversation_ID": "demo_1",
            "conversation": [
                {"utterance_ID": 1, "text": "You told it wrong!", "speaker": "Ana", "emotion": "anger"},
                {"utterance_ID": 2, "text": "I am so happy you noticed.", "speaker": "Ben", "emotion": "joy"},
            ],
            "emotion-cause_pairs": [["1_anger", "1_0_3"], ["2_joy", "1_you told it wrong"]],
        },
        {
            "conversation_ID": "demo_2",
            "conversation": [
                {"utterance_ID": 1, "text": "What a gift...", "speaker": "Carla", "emotion": "joy"}
            ],
            "emotion-cause_pairs": [["1_joy", "1_2_3"]],
        },
    ]
)

dataset = parse_dataset(DOC)
print(f"conversations: {len(dataset)}  emotion inventory: {dataset.emotions}")

conv = dataset.conversations[0]
for u in conv.utterances:
    print(f"  [{u.index}] {u.speaker:<6} {u.gold_emotion:<8} tokens={u.tokens}")
for p in conv.gold_pairs:
    words = conv.utterances[p.cause_index - 1].tokens[p.span[0] : p.span[1]]
    print(f"  pair {p.cause_index} -> {p.effect_index} ({p.emotion}), span {p.span} = {words}")

# Dense targets for the trainer: arc matrix, emotion ids, span indicators.
a, lab, s = gold_targets(conv, dataset.emotions)
print("\narc matrix A (rows = cause, cols = effect):")
print(a)
print("emotion-id matrix L (-1 where no arc):")
print(lab)
print(f"span tensor S has shape {s.shape}; S[0, 1] = {s[0, 1]}")

# Serialization round-trips exactly.
assert parse_dataset(to_canonical_json(dataset)).conversations == dataset.conversations
print("\ncanonical JSON round-trip: exact")
