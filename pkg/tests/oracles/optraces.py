"""Random mixed write/read/evict operation streams for dedup equivalence tests."""

import random


def random_ops(seed, n_ops, n_llas=None, n_fps=None, payload_collisions=False):
    """Yield ("w", lla, lfp, payload) / ("r", lla) / ("e", [llas]) tuples.

    Small LLA and fingerprint universes force updates, sharing and frees.
    With ``payload_collisions`` two different payloads share each
    fingerprint, so the content-compare path is exercised.
    """
    rng = random.Random(seed)
    n_llas = n_llas or rng.choice([16, 256, 4096, max(16, n_ops // 2)])
    n_fps = n_fps or rng.choice([2, 32, 1024, max(2, n_ops // 3)])
    mapped = []  # list plus index so sampling and removal stay O(1)
    pos = {}
    out = []
    for _ in range(n_ops):
        x = rng.random()
        if x < 0.70 or not mapped:
            lla = rng.randrange(n_llas)
            lfp = rng.randrange(n_fps)
            payload = None
            if payload_collisions:
                payload = bytes([lfp & 0xFF, (lfp >> 8) & 0xFF, rng.randrange(2)]) * 4
            out.append(("w", lla, lfp, payload))
            if lla not in pos:
                pos[lla] = len(mapped)
                mapped.append(lla)
        elif x < 0.85:
            out.append(("r", rng.randrange(n_llas)))
        else:
            k = rng.randint(1, min(16, len(mapped)))
            victims = []
            for _ in range(k):
                i = rng.randrange(len(mapped))
                lla = mapped[i]
                last = mapped.pop()
                if i < len(mapped):
                    mapped[i] = last
                    pos[last] = i
                del pos[lla]
                victims.append(lla)
            out.append(("e", victims))
    return out
