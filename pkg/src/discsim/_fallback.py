"""Pure numpy versions of the compiled kernels, vectorized over the batch axis."""

import numpy as np


def _predecessors(next_state):
    n_states = next_state.shape[0]
    pred = [[] for _ in range(n_states)]
    for s in range(n_states):
        for u in (0, 1):
            pred[next_state[s, u]].append((s, u))
    if any(len(p) != 2 for p in pred):
        raise ValueError("trellis must have exactly two branches into each state")
    ps = np.array([[p[0][0], p[1][0]] for p in pred], dtype=np.intp)
    pu = np.array([[p[0][1], p[1][1]] for p in pred], dtype=np.intp)
    return ps, pu


def bcjr_app(lc, next_state, outputs, terminated=False):
    lc = np.asarray(lc, dtype=np.float64)
    nb, _, nn = lc.shape
    ns = next_state.shape[0]
    ps, pu = _predecessors(next_state)
    # gam[b, n, s, u]
    gam = 0.5 * np.einsum("bkn,suk->bnsu", lc, outputs)

    alpha = np.full((nn + 1, nb, ns), -np.inf)
    alpha[0, :, 0] = 0.0
    for n in range(nn):
        g = gam[:, n]
        a = alpha[n]
        c0 = a[:, ps[:, 0]] + g[:, ps[:, 0], pu[:, 0]]
        c1 = a[:, ps[:, 1]] + g[:, ps[:, 1], pu[:, 1]]
        new = np.logaddexp(c0, c1)
        alpha[n + 1] = new - new.max(axis=1, keepdims=True)

    app = np.empty((nb, nn))
    beta = np.zeros((nb, ns))
    if terminated:
        beta[:, 1:] = -np.inf
    for n in range(nn - 1, -1, -1):
        v = gam[:, n] + beta[:, next_state]
        joint = alpha[n][:, :, None] + v
        l0 = np.logaddexp.reduce(joint[:, :, 0], axis=1)
        l1 = np.logaddexp.reduce(joint[:, :, 1], axis=1)
        app[:, n] = l0 - l1
        new = np.logaddexp(v[:, :, 0], v[:, :, 1])
        beta = new - new.max(axis=1, keepdims=True)
    return app


def sliding_product(frames, offsets):
    frames = np.asarray(frames, dtype=np.float64)
    nn = frames.shape[1]
    out = np.ones_like(frames)
    for j in offsets:
        if j < nn:
            out[:, j:] *= frames[:, :nn - j]
    return out
