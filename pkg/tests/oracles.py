"""Independent reference implementations used as test oracles.

Everything here is plain Python (ints and floats, no numba or numpy) so it
shares no code with the package under test.
"""

import math

MASK = 0xFFFFFFFF


def philox4x32_10(ctr, key):
    """Philox4x32 with 10 rounds on Python ints."""
    c = list(ctr)
    k0, k1 = key
    for _ in range(10):
        p0 = 0xD2511F53 * c[0]
        p1 = 0xCD9E8D57 * c[2]
        c = [
            ((p1 >> 32) ^ c[1] ^ k0) & MASK,
            p1 & MASK,
            ((p0 >> 32) ^ c[3] ^ k1) & MASK,
            p0 & MASK,
        ]
        k0 = (k0 + 0x9E3779B9) & MASK
        k1 = (k1 + 0xBB67AE85) & MASK
    return tuple(c)


def draw(counter, key, n):
    """Pair (i, j), i != j, and coin for one exchange, as the engine maps them."""
    r = philox4x32_10((counter & MASK, counter >> 32, 0, 0), key)
    i = (r[0] * n) >> 32
    j = (r[1] * (n - 1)) >> 32
    if j >= i:
        j += 1
    return i, j, r[2] & 1


def share(x, gamma):
    return 0.0 if x <= 0 else x**gamma


def replay(wealth, gamma, mu, alpha, key, n_units, counter=0):
    """Scalar replay of ``n_units`` time units from a wealth list.

    Exchanges follow the textbook rule, then growth adds
    ``mu * W * w_i**gamma / S`` to every agent and the vector is rescaled
    back to sum ``N``.
    """
    w = [float(x) for x in wealth]
    n = len(w)
    for _ in range(n_units):
        for _ in range(n):
            i, j, coin = draw(counter, key, n)
            counter += 1
            d = alpha * min(w[i], w[j])
            winner, loser = (i, j) if coin else (j, i)
            w[winner] += d
            w[loser] -= d
        total = sum(w)
        s = sum(share(x, gamma) for x in w)
        w = [x + mu * total * share(x, gamma) / s for x in w]
        new_total = sum(w)
        w = [x * n / new_total for x in w]
    return w, counter


def omega_bruteforce(history):
    """Wealth metric from a list of per-epoch rescaled-wealth lists."""
    k = len(history)
    n = len(history[0])
    avg = [sum(h[i] for h in history) / k for i in range(n)]
    mean = sum(avg) / n
    return sum((a - mean) ** 2 for a in avg) / n


def pearson(a, b):
    n = len(a)
    ma = sum(a) / n
    mb = sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = sum((x - ma) ** 2 for x in a)
    vb = sum((y - mb) ** 2 for y in b)
    return cov / math.sqrt(va * vb)
