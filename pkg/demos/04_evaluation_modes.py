"""Walkthrough: strict vs proportional vs pair-only scoring semantics.

Run: python demos/04_evaluation_modes.py
"""

from convcause import EmotionCausePair, evaluate


def pair(cause, effect, emotion, span=None):
    return EmotionCausePair(cause_index=cause, effect_index=effect, emotion=emotion, span=span)


golds = {"c1": [pair(1, 2, "joy", (0, 3)), pair(3, 3, "anger", (2, 4))]}

cases = {
    "exact match": [pair(1, 2, "joy", (0, 3)), pair(3, 3, "anger", (2, 4))],
    "span off by one": [pair(1, 2, "joy", (1, 3)), pair(3, 3, "anger", (2, 4))],
    "wrong emotion": [pair(1, 2, "anger", (0, 3)), pair(3, 3, "anger", (2, 4))],
    "missing one pair": [pair(1, 2, "joy", (0, 3))],
    "extra spurious pair": [
        pair(1, 2, "joy", (0, 3)),
        pair(3, 3, "anger", (2, 4)),
        pair(2, 2, "joy", (0, 1)),
    ],
}

print(f"gold: {[(p.cause_index, p.effect_index, p.emotion, p.span) for p in golds['c1']]}\n")
header = f"{'case':<22} {'strict F':>9} {'proportional F':>15} {'pair-only F':>12}"
print(header)
print("-" * len(header))
for name, preds in cases.items():
    row = [
        evaluate({"c1": preds}, golds, mode=mode).weighted_f1
        for mode in ("strict", "proportional", "pair_only")
    ]
    print(f"{name:<22} {row[0]:>9.3f} {row[1]:>15.3f} {row[2]:>12.3f}")

print(
    "\nA span that overlaps but does not equal the gold span earns zero strict\n"
    "credit but partial proportional credit (|overlap|/|pred| toward precision,\n"
    "|overlap|/|gold| toward recall); pair-only ignores spans entirely."
)
