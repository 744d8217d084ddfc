"""Independent reference computations used as test oracles.

Nothing here imports the package's loss code: the formula is restated
from scratch so that a shared bug cannot hide in both routes.
"""
import itertools


def d(gt, length, beta):
    return beta * (length - gt) if length >= gt else gt - length


def formula_loss(selection, targets, lam=(2, 3, 1, 1), beta=2):
    l1, l2, l3, l4 = lam
    last = selection[-1].rhyme
    total = 0.0
    for c, gt in zip(selection, targets):
        mismatch = c.rhyme.name == "Unknown" or c.rhyme.name != last.name
        total += l1 * mismatch + l2 * d(gt, c.length, beta) - l3 * c.r_adv - l4 * c.r_bas
    return total


def filtered(pool, floor=3.0):
    seen, uniq = set(), []
    for c in pool:
        if c.text not in seen:
            seen.add(c.text)
            uniq.append(c)
    kept = [c for c in uniq if c.r_bas >= floor]
    if kept:
        return kept
    top = max(c.r_bas for c in uniq)
    return [c for c in uniq if c.r_bas == top]


def min_loss(pools, targets, lam=(2, 3, 1, 1), beta=2, floor=3.0, rhyme_fixed=None):
    """Minimum loss over every combination of the floor-filtered pools."""
    pools = [filtered(p, floor) for p in pools]
    if rhyme_fixed is not None and any(c.rhyme == rhyme_fixed for c in pools[-1]):
        pools[-1] = [c for c in pools[-1] if c.rhyme == rhyme_fixed]
    return min(formula_loss(combo, targets, lam, beta) for combo in itertools.product(*pools))
