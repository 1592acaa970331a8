"""IPv4 address and prefix helpers.

Addresses are plain ints, prefixes are (base, plen) tuples with the base
already masked. Keeping these as ints keeps longest-prefix-match loops
cheap compared to ipaddress objects.
"""

from __future__ import annotations

Prefix = tuple[int, int]


class AddressError(ValueError):
    """Malformed address or prefix text."""


def parse_ip(text: str) -> int:
    parts = text.split(".")
    if len(parts) != 4:
        raise AddressError(f"bad IPv4 address {text!r}")
    value = 0
    for part in parts:
        if not part.isdigit() or (len(part) > 1 and part[0] == "0") or int(part) > 255:
            raise AddressError(f"bad IPv4 address {text!r}")
        value = (value << 8) | int(part)
    return value


def format_ip(value: int) -> str:
    return ".".join(str((value >> shift) & 0xFF) for shift in (24, 16, 8, 0))


def mask_of(plen: int) -> int:
    if not 0 <= plen <= 32:
        raise AddressError(f"bad prefix length {plen}")
    return 0 if plen == 0 else (0xFFFFFFFF << (32 - plen)) & 0xFFFFFFFF


def parse_prefix(text: str) -> Prefix:
    """Parse "a.b.c.d/len", masking host bits off the base."""
    if "/" not in text:
        raise AddressError(f"missing /len in prefix {text!r}")
    ip_text, _, len_text = text.partition("/")
    if not len_text.isdigit():
        raise AddressError(f"bad prefix length in {text!r}")
    plen = int(len_text)
    return parse_ip(ip_text) & mask_of(plen), plen


def format_prefix(prefix: Prefix) -> str:
    base, plen = prefix
    return f"{format_ip(base)}/{plen}"


def contains(prefix: Prefix, addr: int) -> bool:
    base, plen = prefix
    return (addr & mask_of(plen)) == base


def covers(outer: Prefix, inner: Prefix) -> bool:
    """True if every address of `inner` lies inside `outer`."""
    return inner[1] >= outer[1] and contains(outer, inner[0])


def overlaps(a: Prefix, b: Prefix) -> bool:
    return covers(a, b) or covers(b, a)


def halves(prefix: Prefix) -> tuple[Prefix, Prefix]:
    """Split a prefix into its two more-specific halves."""
    base, plen = prefix
    if plen >= 32:
        raise AddressError(f"cannot split a /{plen}")
    step = 1 << (32 - plen - 1)
    return (base, plen + 1), (base + step, plen + 1)


def host(prefix: Prefix, index: int) -> int:
    """The index-th address inside the prefix (0 = network address)."""
    base, plen = prefix
    if index >= (1 << (32 - plen)):
        raise AddressError(f"host index {index} outside {format_prefix(prefix)}")
    return base + index
