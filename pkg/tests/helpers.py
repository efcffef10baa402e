"""Independent finite-difference gradient oracle shared by the test modules."""

import numpy as np

STEP = 1e-5
REL_TOL = 1e-4


def numeric_grad(f, arr, step=STEP):
    """Central differences of scalar ``f()`` w.r.t. every entry of ``arr`` (mutated in place)."""
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = arr[idx]
        arr[idx] = old + step
        fp = f()
        arr[idx] = old - step
        fm = f()
        arr[idx] = old
        g[idx] = (fp - fm) / (2 * step)
    return g


def rel_error(analytic, numeric):
    num = np.linalg.norm(analytic - numeric)
    den = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    return 0.0 if den == 0.0 else num / den


def check_grads(build_loss, tensors):
    """Run one forward/backward and compare every tensor's gradient with the oracle.

    ``build_loss()`` must rebuild the graph from the current tensor values and
    return a scalar Tensor. Returns the worst relative error.
    """
    for t in tensors:
        t.grad = None
    loss = build_loss()
    loss.backward()
    worst = 0.0
    for t in tensors:
        analytic = np.zeros_like(t.data) if t.grad is None else t.grad.copy()
        numeric = numeric_grad(lambda: float(build_loss().data), t.data)
        worst = max(worst, rel_error(analytic, numeric))
    return worst
