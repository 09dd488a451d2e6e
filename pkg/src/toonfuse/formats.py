"""Binary file formats.

Latent file (.lat):
    magic ``TALW`` | version u32 | L u32 | D u32 | L*D float32, row-major.

Checkpoint (.tagn):
    magic ``TAGN`` | version u32 | config block | tensor table.
    Config block, little-endian: max_resolution u32, base_resolution u32,
    channel_base u32, channel_max u32, D u32, coarse_max_resolution u32,
    seed u64.  Tensor table: count u32, then per tensor (sorted by name)
    name_len u16, name bytes, rank u8, dims u32 each, float32 payload.

Encoder tensors live under the reserved ``enc/`` prefix; the encoder seed is
stored as the tensor ``enc/seed`` holding its four u16 limbs (most significant
first), which float32 carries exactly.  All integers are little-endian and all
payloads float32, so writes are byte-reproducible; everything is written to a
temp file and atomically renamed.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .encoders import EncoderSet, encoder_param_shapes
from .errors import CheckpointFormatError, LatentFormatError
from .latent import LatentWPlus, LatentZPlus
from .synthesis import Generator, GeneratorConfig, generator_param_shapes

LAT_MAGIC = b"TALW"
LAT_VERSION = 1
CKPT_MAGIC = b"TAGN"
CKPT_VERSION = 1
ENC_PREFIX = "enc/"
ENC_SEED_NAME = "enc/seed"


def write_atomic(path: str, data: bytes) -> None:
    """Write bytes via a temp file + rename so no partial file survives."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------------
# .lat
# --------------------------------------------------------------------------


def latent_bytes(latent: LatentWPlus | LatentZPlus) -> bytes:
    head = LAT_MAGIC + struct.pack("<III", LAT_VERSION, latent.L, latent.D)
    return head + latent.rows.astype("<f4").tobytes()


def save_latent(path: str, latent: LatentWPlus | LatentZPlus) -> None:
    write_atomic(path, latent_bytes(latent))


def load_latent_rows(path: str) -> np.ndarray:
    """Raw L x D float64 rows of a .lat file."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 16:
        raise LatentFormatError(f"{path}: truncated latent file")
    if data[:4] != LAT_MAGIC:
        raise LatentFormatError(f"{path}: bad magic {data[:4]!r}, expected {LAT_MAGIC!r}")
    version, L, D = struct.unpack_from("<III", data, 4)
    if version != LAT_VERSION:
        raise LatentFormatError(f"{path}: unsupported latent version {version}")
    need = 16 + 4 * L * D
    if len(data) != need:
        raise LatentFormatError(f"{path}: expected {need} bytes, found {len(data)}")
    rows = np.frombuffer(data, dtype="<f4", offset=16).astype(np.float64).reshape(L, D)
    return rows


def load_latent_wplus(path: str) -> LatentWPlus:
    return LatentWPlus(load_latent_rows(path))


def load_latent_zplus(path: str) -> LatentZPlus:
    return LatentZPlus(load_latent_rows(path))


# --------------------------------------------------------------------------
# .tagn
# --------------------------------------------------------------------------


def _pack_tensor(name: str, arr: np.ndarray) -> bytes:
    nb = name.encode("utf-8")
    head = struct.pack("<H", len(nb)) + nb + struct.pack("<B", arr.ndim)
    head += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + np.ascontiguousarray(arr, dtype="<f4").tobytes()


def _seed_limbs(seed: int) -> np.ndarray:
    return np.array([(seed >> k) & 0xFFFF for k in (48, 32, 16, 0)], dtype=np.float64)


def _limbs_seed(limbs: np.ndarray) -> int:
    vals = [int(round(float(v))) for v in limbs]
    return (vals[0] << 48) | (vals[1] << 32) | (vals[2] << 16) | vals[3]


def checkpoint_bytes(gen: Generator, enc: EncoderSet) -> bytes:
    cfg = gen.config
    out = [
        CKPT_MAGIC,
        struct.pack("<I", CKPT_VERSION),
        struct.pack(
            "<IIIIIIQ",
            cfg.max_resolution,
            cfg.base_resolution,
            cfg.channel_base,
            cfg.channel_max,
            cfg.D,
            cfg.coarse_max_resolution,
            cfg.seed,
        ),
    ]
    tensors: dict[str, np.ndarray] = dict(gen.params)
    for name, arr in enc.params.items():
        tensors[ENC_PREFIX + name] = arr
    tensors[ENC_SEED_NAME] = _seed_limbs(enc.seed)
    out.append(struct.pack("<I", len(tensors)))
    for name in sorted(tensors):
        out.append(_pack_tensor(name, tensors[name]))
    return b"".join(out)


def save_checkpoint(path: str, gen: Generator, enc: EncoderSet) -> None:
    write_atomic(path, checkpoint_bytes(gen, enc))


def _read_exact(f, n: int, path: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise CheckpointFormatError(f"{path}: truncated checkpoint")
    return data


def load_checkpoint(path: str) -> tuple[Generator, EncoderSet]:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != CKPT_MAGIC:
            raise CheckpointFormatError(
                f"{path}: bad magic {magic!r}, expected {CKPT_MAGIC!r}"
            )
        version = struct.unpack("<I", _read_exact(f, 4, path))[0]
        if version != CKPT_VERSION:
            raise CheckpointFormatError(f"{path}: unsupported checkpoint version {version}")
        raw = _read_exact(f, 32, path)
        max_res, base_res, ch_base, ch_max, d, coarse_max, seed = struct.unpack("<IIIIIIQ", raw)
        try:
            config = GeneratorConfig(
                max_resolution=max_res,
                base_resolution=base_res,
                channel_base=ch_base,
                channel_max=ch_max,
                D=d,
                seed=seed,
                coarse_max_resolution=coarse_max,
            )
        except Exception as e:
            raise CheckpointFormatError(f"{path}: invalid config block: {e}") from e
        count = struct.unpack("<I", _read_exact(f, 4, path))[0]
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<H", _read_exact(f, 2, path))
            name = _read_exact(f, nlen, path).decode("utf-8")
            (rank,) = struct.unpack("<B", _read_exact(f, 1, path))
            dims = struct.unpack(f"<{rank}I", _read_exact(f, 4 * rank, path)) if rank else ()
            n = int(np.prod(dims)) if dims else 1
            payload = _read_exact(f, 4 * n, path)
            arr = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(dims)
            arr.setflags(write=False)
            if name in tensors:
                raise CheckpointFormatError(f"{path}: duplicate tensor {name!r}")
            if not np.all(np.isfinite(arr)):
                raise CheckpointFormatError(f"{path}: tensor {name!r} contains non-finite values")
            tensors[name] = arr
        if f.read(1):
            raise CheckpointFormatError(f"{path}: trailing bytes after tensor table")

    gen_shapes = generator_param_shapes(config)
    enc_shapes = encoder_param_shapes(config.max_resolution, config.L, config.D)
    expected = set(gen_shapes) | {ENC_PREFIX + n for n in enc_shapes} | {ENC_SEED_NAME}
    if set(tensors) != expected:
        missing = sorted(expected - set(tensors))
        extra = sorted(set(tensors) - expected)
        raise CheckpointFormatError(
            f"{path}: tensor table mismatch (missing {missing[:3]}, unexpected {extra[:3]})"
        )
    for name, shape in gen_shapes.items():
        if tensors[name].shape != shape:
            raise CheckpointFormatError(f"{path}: tensor {name!r} has shape {tensors[name].shape}, expected {shape}")
    for name, shape in enc_shapes.items():
        if tensors[ENC_PREFIX + name].shape != shape:
            raise CheckpointFormatError(
                f"{path}: tensor {ENC_PREFIX + name!r} has shape {tensors[ENC_PREFIX + name].shape}, expected {shape}"
            )

    gen = Generator(config=config, params={n: tensors[n] for n in gen_shapes})
    enc = EncoderSet(
        input_resolution=config.max_resolution,
        L=config.L,
        D=config.D,
        seed=_limbs_seed(tensors[ENC_SEED_NAME]),
        params={n: tensors[ENC_PREFIX + n] for n in enc_shapes},
    )
    return gen, enc
