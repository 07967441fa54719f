"""Binary checkpoints holding every parameter vector and optimizer state.

Layout (little endian)::

    "LAPC" | u32 version | str config text | str config hash | u64 step | str env id
    | u8 has_stats [vec mean, vec std] | str rng state (json)
    | u32 n_params  { str name, vec }
    | u32 n_optims  { str name, u64 t, f64 lr, f64 beta1, f64 beta2, f64 eps, vec m, vec v }
    | u8 has_pending [u32 len + i64 indices, vec weights]

with ``str`` = u32 byte length + utf8 and ``vec`` = u32 length + f64 values.
"""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .config import TrainConfig
from .dataset import NormStats
from .errors import FormatError
from .nn import AdamState

MAGIC = b"LAPC"
VERSION = 1


@dataclass(eq=False)
class Checkpoint:
    config: TrainConfig
    env_id: str
    step: int
    params: dict
    optims: dict
    stats: Optional[NormStats] = None
    rng_state: dict = field(default_factory=dict)
    pending_indices: Optional[np.ndarray] = None
    pending_weights: Optional[np.ndarray] = None

    @property
    def config_hash(self):
        return self.config.hash()

    @property
    def method(self):
        return self.config.method

    def to_bytes(self):
        out = bytearray(MAGIC)
        out += struct.pack("<I", VERSION)
        _str(out, self.config.to_text())
        _str(out, self.config_hash)
        out += struct.pack("<Q", self.step)
        _str(out, self.env_id)
        out += struct.pack("<B", self.stats is not None)
        if self.stats is not None:
            _vec(out, self.stats.mean)
            _vec(out, self.stats.std)
        _str(out, json.dumps(self.rng_state, sort_keys=True))
        out += struct.pack("<I", len(self.params))
        for name in sorted(self.params):
            _str(out, name)
            _vec(out, self.params[name])
        out += struct.pack("<I", len(self.optims))
        for name in sorted(self.optims):
            st = self.optims[name]
            _str(out, name)
            out += struct.pack("<Qdddd", st.t, st.lr, st.beta1, st.beta2, st.eps)
            _vec(out, st.m)
            _vec(out, st.v)
        has_pending = self.pending_indices is not None
        out += struct.pack("<B", has_pending)
        if has_pending:
            idx = np.asarray(self.pending_indices, dtype="<i8")
            out += struct.pack("<I", idx.size) + idx.tobytes()
            _vec(out, self.pending_weights)
        return bytes(out)

    def save(self, path):
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_bytes(cls, buf, path="<bytes>"):
        r = _Reader(buf, path)
        if r.take(4) != MAGIC:
            raise FormatError(f"{path}: not a checkpoint (bad magic)")
        version = r.unpack("<I")[0]
        if version != VERSION:
            raise FormatError(f"{path}: checkpoint version {version}, this reader supports version {VERSION}")
        config = TrainConfig.from_text(r.string(), f"{path}[config]")
        stored_hash = r.string()
        if stored_hash != config.hash():
            raise FormatError(f"{path}: config hash mismatch")
        step = r.unpack("<Q")[0]
        env_id = r.string()
        stats = NormStats(r.vec(), r.vec()) if r.unpack("<B")[0] else None
        rng_state = json.loads(r.string())
        params = {}
        for _ in range(r.unpack("<I")[0]):
            name = r.string()
            params[name] = r.vec()
        optims = {}
        for _ in range(r.unpack("<I")[0]):
            name = r.string()
            t, lr, b1, b2, eps = r.unpack("<Qdddd")
            m, v = r.vec(), r.vec()
            optims[name] = AdamState(m.size, lr, b1, b2, eps, m, v, t)
        pending_idx = pending_w = None
        if r.unpack("<B")[0]:
            n = r.unpack("<I")[0]
            pending_idx = np.frombuffer(r.take(8 * n), dtype="<i8").astype(np.int64)
            pending_w = r.vec()
        if r.pos != len(buf):
            raise FormatError(f"{path}: trailing bytes after checkpoint")
        return cls(config, env_id, step, params, optims, stats, rng_state, pending_idx, pending_w)

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            buf = path.read_bytes()
        except OSError as e:
            raise FormatError(f"{path}: cannot read checkpoint ({e.strerror})") from e
        return cls.from_bytes(buf, str(path))

    def equals(self, other):
        return self.to_bytes() == other.to_bytes()


def _str(out, s):
    b = s.encode("utf-8")
    out += struct.pack("<I", len(b)) + b


def _vec(out, v):
    v = np.ascontiguousarray(v, dtype="<f8")
    out += struct.pack("<I", v.size) + v.tobytes()


class _Reader:
    def __init__(self, buf, path):
        self.buf, self.pos, self.path = buf, 0, path

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise FormatError(f"{self.path}: truncated checkpoint")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def string(self):
        return self.take(self.unpack("<I")[0]).decode("utf-8")

    def vec(self):
        n = self.unpack("<I")[0]
        return np.frombuffer(self.take(8 * n), dtype="<f8").astype(np.float64)
