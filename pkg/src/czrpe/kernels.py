"""Hot loops of the two-qubit density-matrix simulator.

A compiled circuit is three parallel arrays: ``ops`` (L, 4, 4) complex
unitaries, ``channels`` (L,) int codes for the noise channel that follows
each layer, and ``rates`` (L,) the channel strength.  Both implementations
below consume exactly that layout; :func:`evolve` is whichever one the
``CZRPE_DISABLE_NUMBA`` flag selects.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

CH_NONE = 0
CH_DEPOL_2Q = 1
CH_DEPOL_A = 2
CH_DEPOL_B = 3


@njit(cache=True)
def _evolve_numba(rho, ops, channels, rates):
    out = rho.copy()
    tmp = np.empty((4, 4), dtype=np.complex128)
    for layer in range(ops.shape[0]):
        u = ops[layer]
        # tmp = u @ out
        for r in range(4):
            for c in range(4):
                acc = 0j
                for m in range(4):
                    acc += u[r, m] * out[m, c]
                tmp[r, c] = acc
        # out = tmp @ u^dagger
        for r in range(4):
            for c in range(4):
                acc = 0j
                for m in range(4):
                    acc += tmp[r, m] * np.conj(u[c, m])
                out[r, c] = acc

        code = channels[layer]
        p = rates[layer]
        if code == CH_NONE or p == 0.0:
            continue
        if code == CH_DEPOL_2Q:
            tr = out[0, 0] + out[1, 1] + out[2, 2] + out[3, 3]
            for r in range(4):
                for c in range(4):
                    out[r, c] *= 1.0 - p
                out[r, r] += p * tr / 4.0
        elif code == CH_DEPOL_A:
            red = np.zeros((2, 2), dtype=np.complex128)
            for b in range(2):
                for bp in range(2):
                    red[b, bp] = out[b, bp] + out[2 + b, 2 + bp]
            for r in range(4):
                for c in range(4):
                    out[r, c] *= 1.0 - p
            for a in range(2):
                for b in range(2):
                    for bp in range(2):
                        out[2 * a + b, 2 * a + bp] += 0.5 * p * red[b, bp]
        elif code == CH_DEPOL_B:
            red = np.zeros((2, 2), dtype=np.complex128)
            for a in range(2):
                for ap in range(2):
                    red[a, ap] = out[2 * a, 2 * ap] + out[2 * a + 1, 2 * ap + 1]
            for r in range(4):
                for c in range(4):
                    out[r, c] *= 1.0 - p
            for a in range(2):
                for ap in range(2):
                    for b in range(2):
                        out[2 * a + b, 2 * ap + b] += 0.5 * p * red[a, ap]
    return out


def _evolve_numpy(rho, ops, channels, rates):
    out = np.array(rho, dtype=np.complex128)
    eye2 = np.eye(2) / 2.0
    for u, code, p in zip(ops, channels, rates):
        out = u @ out @ u.conj().T
        if code == CH_NONE or p == 0.0:
            continue
        if code == CH_DEPOL_2Q:
            out = (1.0 - p) * out + p * np.trace(out) * np.eye(4) / 4.0
        else:
            t = out.reshape(2, 2, 2, 2)
            if code == CH_DEPOL_A:
                mixed = np.kron(eye2, np.einsum("abac->bc", t))
            elif code == CH_DEPOL_B:
                mixed = np.kron(np.einsum("abcb->ac", t), eye2)
            else:
                raise ValueError(f"unknown channel code {code}")
            out = (1.0 - p) * out + p * mixed
    return out


def evolve_numba(rho, ops, channels, rates):
    """Evolve ``rho`` through every layer using the compiled kernel."""
    return _evolve_numba(
        np.ascontiguousarray(rho, dtype=np.complex128),
        np.ascontiguousarray(ops, dtype=np.complex128),
        np.ascontiguousarray(channels, dtype=np.int64),
        np.ascontiguousarray(rates, dtype=np.float64),
    )


def evolve_numpy(rho, ops, channels, rates):
    """Evolve ``rho`` through every layer with plain numpy."""
    return _evolve_numpy(rho, ops, np.asarray(channels, dtype=np.int64), np.asarray(rates, dtype=np.float64))


evolve = evolve_numba if USE_NUMBA else evolve_numpy
