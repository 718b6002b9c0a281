"""Walkthrough: the tape-based autodiff core and the two biaffine products.

Run: python demos/02_autodiff_and_biaffine.py
"""

import numpy as np

import convcause.autodiff as ad
from convcause.autodiff import Tape, Tensor, backward

rng = np.random.default_rng(0)

# --- the arc scorer is a bilinear form: A[i, j] = c_i^T W e_j -------------
m, d = 3, 4
c = Tensor(rng.standard_normal((m, d)), requires_grad=True)
w = Tensor(rng.standard_normal((d, d)), requires_grad=True)
e = Tensor(rng.standard_normal((m, d)), requires_grad=True)

with Tape() as tape:
    arc = ad.bilinear_arc(c, w, e)
    loss = ad.tmean(ad.mul(arc, arc))
    backward(loss, tape)

print(f"arc matrix:\n{np.round(arc.data, 3)}")
print(f"loss = {float(loss.data):.4f}")
print(f"gradient norms: dC={np.linalg.norm(c.grad):.3f} dW={np.linalg.norm(w.grad):.3f} dE={np.linalg.norm(e.grad):.3f}")

# --- verify one gradient entry against central finite differences --------
h = 1e-6


def loss_value():
    a = c.data @ w.data @ e.data.T
    return float((a * a).mean())


orig = w.data[1, 2]
w.data[1, 2] = orig + h
up = loss_value()
w.data[1, 2] = orig - h
down = loss_value()
w.data[1, 2] = orig
fd = (up - down) / (2 * h)
print(f"dW[1,2]: analytic {w.grad[1, 2]:+.8f}  finite-difference {fd:+.8f}")

# --- the label scorer adds an emotion axis --------------------------------
n_emotions = 3
w_eps = Tensor(rng.standard_normal((d, n_emotions, d)))
label = ad.bilinear_label(Tensor(rng.standard_normal((m, d))), w_eps, Tensor(rng.standard_normal((m, d))))
print(f"\nlabel tensor shape (m, m, emotions): {label.data.shape}")

# --- losses are ops too ----------------------------------------------------
scores = Tensor(np.array([[0.0, 50.0], [-50.0, 0.0]]), requires_grad=True)
targets = np.array([[1.0, 1.0], [0.0, 0.0]])
with Tape() as tape:
    bce = ad.bce_with_logits(scores, targets, np.ones_like(targets))
    backward(bce, tape)
print(f"stable BCE at logits 0/+-50: {float(bce.data):.6f} (= ln(2)/2 from the two zero logits)")
