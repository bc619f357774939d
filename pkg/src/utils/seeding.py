from hashlib import blake2b


def derive_seed(master_seed: int, label: str) -> int:
    """
    Derives an independent 64-bit seed for a named component.

    Args:
        master_seed: The run-level seed.
        label: Stable component label (e.g. "simulator", "trainer/run-1").

    Returns:
        int: Seed in [0, 2**64).
    """
    digest = blake2b(f"{master_seed}:{label}".encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "big")
