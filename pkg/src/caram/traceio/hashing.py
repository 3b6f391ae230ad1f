"""SuperFastHash (Paul Hsieh, 2004), bit-exact with the C reference."""

_MASK = 0xFFFFFFFF


def _signed_byte(b):
    return b - 256 if b >= 128 else b


def superfasthash(data: bytes) -> int:
    """Return the 32-bit SuperFastHash of ``data``.

    The hash is seeded with the input length, and the tail bytes handled
    by the ``rem == 1`` / ``rem == 3`` cases are sign-extended exactly as
    the reference does through ``(signed char)``.
    """
    n = len(data)
    if n == 0:
        return 0
    h = n
    rem = n & 3
    end = n - rem
    i = 0
    while i < end:
        h = (h + (data[i] | (data[i + 1] << 8))) & _MASK
        tmp = (((data[i + 2] | (data[i + 3] << 8)) << 11) ^ h) & _MASK
        h = ((h << 16) & _MASK) ^ tmp
        h = (h + (h >> 11)) & _MASK
        i += 4

    if rem == 3:
        h = (h + (data[i] | (data[i + 1] << 8))) & _MASK
        h ^= (h << 16) & _MASK
        h ^= (_signed_byte(data[i + 2]) << 18) & _MASK
        h = (h + (h >> 11)) & _MASK
    elif rem == 2:
        h = (h + (data[i] | (data[i + 1] << 8))) & _MASK
        h ^= (h << 11) & _MASK
        h = (h + (h >> 17)) & _MASK
    elif rem == 1:
        h = (h + _signed_byte(data[i])) & _MASK
        h ^= (h << 10) & _MASK
        h = (h + (h >> 1)) & _MASK

    h ^= (h << 3) & _MASK
    h = (h + (h >> 5)) & _MASK
    h ^= (h << 4) & _MASK
    h = (h + (h >> 17)) & _MASK
    h ^= (h << 25) & _MASK
    h = (h + (h >> 6)) & _MASK
    return h


compute_superfasthash = superfasthash
