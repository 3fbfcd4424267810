"""Plain-text checkpoints.

Layout: ``key=value`` header lines, one blank line, then every parameter as a
17-significant-digit decimal, one per line. Networks come first (in the order
listed by the ``networks`` key, each in ``MlpParams.arrays()`` order, weights
row-major), then extra arrays (``extras`` key).
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .nn import MlpParams


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    header: dict[str, str] = field(default_factory=dict)
    networks: dict[str, MlpParams] = field(default_factory=dict)
    extras: dict[str, np.ndarray] = field(default_factory=dict)


def fmt_float(x: float) -> str:
    return "%.17g" % float(x)


def _structure_header(ckpt: Checkpoint) -> dict[str, str]:
    h = {"networks": ",".join(ckpt.networks), "extras": ",".join(ckpt.extras)}
    for name, net in ckpt.networks.items():
        h[f"network.{name}.layer_sizes"] = ",".join(str(n) for n in net.layer_sizes)
        h[f"network.{name}.activation"] = net.activation
        h[f"network.{name}.layer_norm"] = ",".join(str(int(f)) for f in net.layer_norm)
    for name, arr in ckpt.extras.items():
        h[f"extra.{name}.size"] = str(np.asarray(arr).size)
    return h


def dumps(ckpt: Checkpoint) -> str:
    lines = []
    for key, value in list(ckpt.header.items()) + list(_structure_header(ckpt).items()):
        value = str(value)
        if "=" in key or "\n" in key or "\n" in value or not key:
            raise CheckpointError(f"unserializable header entry {key!r}")
        lines.append(f"{key}={value}")
    lines.append("")
    for net in ckpt.networks.values():
        for arr in net.arrays():
            lines.extend(fmt_float(x) for x in arr.ravel())
    for arr in ckpt.extras.values():
        lines.extend(fmt_float(x) for x in np.asarray(arr, dtype=np.float64).ravel())
    return "\n".join(lines) + "\n"


def _split(value: str) -> list[str]:
    return [v for v in value.split(",") if v != ""]


def loads(text: str) -> Checkpoint:
    head, sep, body = text.partition("\n\n")
    if not sep:
        raise CheckpointError("missing blank line after header")
    header = {}
    for line in head.split("\n"):
        key, eq, value = line.partition("=")
        if not eq:
            raise CheckpointError(f"malformed header line {line!r}")
        header[key] = value
    values = np.array([float(v) for v in body.split()], dtype=np.float64)
    pos = 0

    def take(n: int) -> np.ndarray:
        nonlocal pos
        if pos + n > values.size:
            raise CheckpointError("checkpoint body is truncated")
        out = values[pos:pos + n].copy()
        pos += n
        return out

    networks = {}
    for name in _split(header.pop("networks", "")):
        sizes = tuple(int(n) for n in _split(header.pop(f"network.{name}.layer_sizes")))
        activation = header.pop(f"network.{name}.activation")
        norm = tuple(bool(int(f)) for f in _split(header.pop(f"network.{name}.layer_norm")))
        arrays = []
        for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            arrays.append(take(n_out * n_in).reshape(n_out, n_in))
            arrays.append(take(n_out))
            if i < len(norm) and norm[i]:
                arrays += [take(n_out), take(n_out)]
        template = MlpParams(sizes, [np.zeros((o, i)) for i, o in zip(sizes[:-1], sizes[1:])],
                             [np.zeros(o) for o in sizes[1:]], activation, norm)
        networks[name] = template.with_arrays(arrays)
    extras = {}
    for name in _split(header.pop("extras", "")):
        extras[name] = take(int(header.pop(f"extra.{name}.size")))
    if pos != values.size:
        raise CheckpointError(f"{values.size - pos} trailing values in checkpoint body")
    return Checkpoint(header, networks, extras)


def atomic_write(path, text: str) -> None:
    """Write-temp-then-rename so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(ckpt: Checkpoint, path) -> None:
    atomic_write(path, dumps(ckpt))


def load(path) -> Checkpoint:
    return loads(Path(path).read_text())
