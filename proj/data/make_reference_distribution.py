"""Writes reference_distribution.csv: a synthetic (length, depth) histogram
shaped like parsed English news sentences (right-skewed lengths that grow with
parse depth). Deterministic; rerun to regenerate the shipped file."""

import math

TOTAL = 60000
MAX_LENGTH = 71
MAX_DEPTH = 17


def depth_weights(mean=4.4, dispersion=6.0):
    # 1 + negative binomial
    m = mean - 1.0
    p = dispersion / (dispersion + m)
    w = {}
    for k in range(0, MAX_DEPTH):
        w[k + 1] = math.exp(math.lgamma(k + dispersion) - math.lgamma(k + 1) - math.lgamma(dispersion)
                            + dispersion * math.log(p) + k * math.log(1 - p))
    return w


def length_weights(depth, sigma=0.32):
    mu = math.log(1.5 + 3.9 * depth) - sigma * sigma / 2
    cap = {1: 12, 2: 27}.get(depth, MAX_LENGTH)
    w = {}
    for length in range(max(3, depth + 2), min(cap, MAX_LENGTH) + 1):
        x = float(length)
        w[length] = math.exp(-((math.log(x) - mu) ** 2) / (2 * sigma * sigma)) / x
    z = sum(w.values())
    return {k: v / z for k, v in w.items()}


def main():
    dw = depth_weights()
    z = sum(dw.values())
    rows = []
    for d, pd in dw.items():
        for length, pl in length_weights(d).items():
            count = round(TOTAL * pd / z * pl)
            if count > 0:
                rows.append((length, d, count))
    rows.sort()
    with open("reference_distribution.csv", "w", newline="\n") as f:
        f.write("length,depth,count\n")
        for r in rows:
            f.write("%d,%d,%d\n" % r)


if __name__ == "__main__":
    main()
