"""Pure-python Keccak-256 (original padding, not NIST SHA3).

Selector and transfer-hash computation need the pre-standardization Keccak
variant used by Ethereum; hashlib only ships the SHA3 padding, so the sponge
is implemented here directly.
"""

_ROUND_CONSTANTS = (
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A, 0x8000000080008000,
    0x000000000000808B, 0x0000000080000001, 0x8000000080008081, 0x8000000000008009,
    0x000000000000008A, 0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089, 0x8000000000008003,
    0x8000000000008002, 0x8000000000000080, 0x000000000000800A, 0x800000008000000A,
    0x8000000080008081, 0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
)

_MASK = (1 << 64) - 1
_RATE = 136  # bytes, for capacity 512


def _permute(s: list) -> None:
    for rc in _ROUND_CONSTANTS:
        # theta
        c0 = s[0] ^ s[5] ^ s[10] ^ s[15] ^ s[20]
        c1 = s[1] ^ s[6] ^ s[11] ^ s[16] ^ s[21]
        c2 = s[2] ^ s[7] ^ s[12] ^ s[17] ^ s[22]
        c3 = s[3] ^ s[8] ^ s[13] ^ s[18] ^ s[23]
        c4 = s[4] ^ s[9] ^ s[14] ^ s[19] ^ s[24]
        d0 = c4 ^ (((c1 << 1) | (c1 >> 63)) & _MASK)
        d1 = c0 ^ (((c2 << 1) | (c2 >> 63)) & _MASK)
        d2 = c1 ^ (((c3 << 1) | (c3 >> 63)) & _MASK)
        d3 = c2 ^ (((c4 << 1) | (c4 >> 63)) & _MASK)
        d4 = c3 ^ (((c0 << 1) | (c0 >> 63)) & _MASK)
        for i in range(0, 25, 5):
            s[i] ^= d0
            s[i + 1] ^= d1
            s[i + 2] ^= d2
            s[i + 3] ^= d3
            s[i + 4] ^= d4
        # rho + pi
        b = [0] * 25
        b[0] = s[0]
        x, y = 1, 0
        cur = s[1]
        for t in range(24):
            nx, ny = y, (2 * x + 3 * y) % 5
            r = ((t + 1) * (t + 2) // 2) % 64
            b[5 * ny + nx] = ((cur << r) | (cur >> (64 - r))) & _MASK
            cur = s[5 * ny + nx]
            x, y = nx, ny
        # chi
        for i in range(0, 25, 5):
            t0, t1, t2, t3, t4 = b[i:i + 5]
            s[i] = t0 ^ ((~t1) & t2)
            s[i + 1] = t1 ^ ((~t2) & t3)
            s[i + 2] = t2 ^ ((~t3) & t4)
            s[i + 3] = t3 ^ ((~t4) & t0)
            s[i + 4] = t4 ^ ((~t0) & t1)
        s[0] ^= rc


def keccak256(data: bytes) -> bytes:
    """Keccak-256 digest of ``data`` (0x01 domain padding)."""
    pad = _RATE - (len(data) % _RATE)
    if pad == 1:
        data = data + b"\x81"
    else:
        data = data + b"\x01" + b"\x00" * (pad - 2) + b"\x80"
    s = [0] * 25
    for off in range(0, len(data), _RATE):
        blk = data[off:off + _RATE]
        for i in range(17):
            s[i] ^= int.from_bytes(blk[8 * i:8 * i + 8], "little")
        _permute(s)
    return b"".join(s[i].to_bytes(8, "little") for i in range(4))
