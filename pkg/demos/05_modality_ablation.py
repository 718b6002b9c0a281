"""Walkthrough: the modality ablation harness.

Trains the same graph decoder over frozen text features alone, then with
stub audio and visual feature files added, and prints one weighted P/R/F
row per configuration. Inputs are deterministic stubs, so the numbers
describe the harness, not any external benchmark.

Run: python demos/05_modality_ablation.py   (about ten seconds)
"""

from convcause.ablation import format_ablation_table, run_modality_ablation

rows = run_modality_ablation(n_conversations=8, seed=0, epochs=10)
print(format_ablation_table(rows))
