"""Independent brute-force reference implementations used as test oracles.

Everything here is deliberately written the slow, obvious way (plain loops,
stdlib math) and must stay independent of the package's own code paths.
"""

import math


def lerp_stream(times, values, query):
    """Piecewise-linear interpolation of one channel, clamping at the edges."""
    if query <= times[0]:
        return values[0]
    if query >= times[-1]:
        return values[-1]
    for i in range(len(times) - 1):
        if times[i] <= query <= times[i + 1]:
            t0, t1 = times[i], times[i + 1]
            if t1 == t0:
                return values[i + 1]
            frac = (query - t0) / (t1 - t0)
            return values[i] + frac * (values[i + 1] - values[i])
    raise AssertionError("unreachable")


def channel_stats(xs):
    """The 7 per-channel statistics: mean, min, max, median, std, skew, kurt.

    Population moments throughout; skewness and excess kurtosis are defined
    as 0 when the variance is below 1e-12.
    """
    n = len(xs)
    mean = sum(xs) / n
    lo = min(xs)
    hi = max(xs)
    ordered = sorted(xs)
    if n % 2 == 1:
        median = ordered[n // 2]
    else:
        median = (ordered[n // 2 - 1] + ordered[n // 2]) / 2
    m2 = sum((x - mean) ** 2 for x in xs) / n
    std = math.sqrt(m2)
    if m2 < 1e-12:
        skew = 0.0
        kurt = 0.0
    else:
        m3 = sum((x - mean) ** 3 for x in xs) / n
        m4 = sum((x - mean) ** 4 for x in xs) / n
        skew = m3 / m2**1.5
        kurt = m4 / m2**2 - 3.0
    return [mean, lo, hi, median, std, skew, kurt]


def conv2d_valid(x, w, b):
    """Quadruple-loop valid-padding stride-1 cross-correlation.

    x: nested lists [C][H][W]; w: [O][C][kh][kw]; b: [O].
    Returns [O][Ho][Wo].
    """
    c_in = len(x)
    h = len(x[0])
    wd = len(x[0][0])
    o_out = len(w)
    kh = len(w[0][0])
    kw = len(w[0][0][0])
    ho = h - kh + 1
    wo = wd - kw + 1
    out = [[[0.0] * wo for _ in range(ho)] for _ in range(o_out)]
    for o in range(o_out):
        for i in range(ho):
            for j in range(wo):
                acc = b[o]
                for c in range(c_in):
                    for u in range(kh):
                        for v in range(kw):
                            acc += x[c][i + u][j + v] * w[o][c][u][v]
                out[o][i][j] = acc
    return out


def strided_conv2d(x, w, b, sh, sw):
    """Strided valid conv where the kernel equals the stride (no overlap)."""
    c_in = len(x)
    h = len(x[0])
    wd = len(x[0][0])
    o_out = len(w)
    kh = len(w[0][0])
    kw = len(w[0][0][0])
    ho = h // sh
    wo = wd // sw
    out = [[[0.0] * wo for _ in range(ho)] for _ in range(o_out)]
    for o in range(o_out):
        for i in range(ho):
            for j in range(wo):
                acc = b[o]
                for c in range(c_in):
                    for u in range(kh):
                        for v in range(kw):
                            acc += x[c][i * sh + u][j * sw + v] * w[o][c][u][v]
                out[o][i][j] = acc
    return out


def maxpool(x, ph, pw):
    """Non-overlapping max pooling over [C][H][W] nested lists."""
    c_in = len(x)
    h = len(x[0])
    wd = len(x[0][0])
    ho = h // ph
    wo = wd // pw
    out = [[[0.0] * wo for _ in range(ho)] for _ in range(c_in)]
    for c in range(c_in):
        for i in range(ho):
            for j in range(wo):
                best = x[c][i * ph][j * pw]
                for u in range(ph):
                    for v in range(pw):
                        best = max(best, x[c][i * ph + u][j * pw + v])
                out[c][i][j] = best
    return out


def knn_vote(train_x, train_y, query, k):
    """Exhaustive k-nearest-neighbour vote with the documented tie rules.

    Majority label among the k nearest by Euclidean distance; label ties
    break by smaller summed distance, then by smaller label code.
    """
    dists = []
    for idx, row in enumerate(train_x):
        d = math.sqrt(sum((a - b) ** 2 for a, b in zip(row, query)))
        dists.append((d, idx))
    dists.sort(key=lambda p: (p[0], p[1]))
    votes = {}
    for d, idx in dists[:k]:
        lab = train_y[idx]
        cnt, dsum = votes.get(lab, (0, 0.0))
        votes[lab] = (cnt + 1, dsum + d)
    return min(votes, key=lambda lab: (-votes[lab][0], votes[lab][1], lab))


def adam_scalar(theta, grads, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
    """Reference Adam on one coordinate given the full gradient sequence."""
    m = 0.0
    v = 0.0
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        mhat = m / (1 - beta1**t)
        vhat = v / (1 - beta2**t)
        theta -= lr * mhat / (math.sqrt(vhat) + eps)
    return theta


def count_params(layer_shapes):
    """Sum parameter counts from (weight_shape, bias_len) pairs."""
    total = 0
    for shape, bias in layer_shapes:
        n = 1
        for d in shape:
            n *= d
        total += n + bias
    return total
