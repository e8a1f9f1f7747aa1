"""Frozen test vectors for the counter-based random source.

Any reimplementation of the generator (the Cython kernel here, or a port in
another language) must reproduce these values exactly. The seed-0 stream is
the standard splitmix64 sequence, which pins the finalizer constants.
"""

# (key, counter) -> uint64 output
U64 = [
    (0x0, 0, 0xE220A8397B1DCDAF),
    (0x0, 1, 0x6E789E6AA1B965F4),
    (0x0, 2, 0x06C45D188009454F),
    (0x0, 3, 0xF88BB8A8724C81EC),
    (0x0, 1000, 0x2CFA2F23425329E1),
    (0x0, 2**32, 0x46093CF9861EC2E4),
    (0x2A, 0, 0xBDD732262FEB6E95),
    (0x2A, 1, 0x28EFE333B266F103),
    (0x2A, 2, 0x47526757130F9F52),
    (0x2A, 1000, 0x5566DBE893F1B4AE),
    (0x123456789ABCDEF0, 0, 0x161922C645CE50E8),
    (0x123456789ABCDEF0, 1, 0xAD760CAFA1697B60),
    (0x123456789ABCDEF0, 2, 0x3501FF44902CA50D),
    (0xFFFFFFFFFFFFFFFF, 0, 0xE4D971771B652C20),
    (0xFFFFFFFFFFFFFFFF, 1, 0xE99FF867DBF682C9),
    (0xFFFFFFFFFFFFFFFF, 2**32, 0xC5AA1D1D7E827744),
]

# (key, counter) -> uniform double in [0, 1); exact float64 values
UNIFORM = [
    (0x0, 0, 0.8833108082136426),
    (0x0, 1, 0.43152799704850997),
    (0x0, 2, 0.026433771592597743),
    (0x2A, 1000, 0.3336007540528445),
    (0x123456789ABCDEF0, 2, 0.20706172393708977),
    (0xFFFFFFFFFFFFFFFF, 0, 0.8939429202831845),
]

# (key, index) -> derived subkey
DERIVE = [
    (0x0, 0, 0x4E96155E5F0A1C3F),
    (0x0, 1, 0x18799B4A27352D29),
    (0x2A, 0, 0xDA95F8CDC55F04E5),
    (0x2A, 7, 0x8093A30CBC1B423A),
    (0xDEADBEEF, 3, 0xF328CA3D9C99AAB8),
]

# text -> fnv1a64 hash
FNV1A = [
    ("", 0xCBF29CE484222325),
    ("tigload", 0xE9E8690128A6861B),
    ("task-001", 0xBCE771C6A17187CE),
    ("agent/gpt-4o", 0x2EB95F30D7278D4A),
]
