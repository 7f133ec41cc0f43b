"""Model checkpoints: a JSON header followed by float64 parameter blocks.

File layout::

    bytes 0-3    magic b"HZCK"
    bytes 4-7    uint32 format version (1)
    bytes 8-15   uint64 header length H
    next H       UTF-8 JSON header
    rest         one hazardops.io array block per entry of header["parameters"],
                 in that order, then the self-adaptive weights when
                 header["lambda"] is not null

A DeepFNOnet is stored as two files: the stage-1 DeepONet checkpoint and a
stage-2 file holding the FNO plus the stage-1 file name and SHA-256 digest.
"""

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from hazardops import io as hio
from hazardops.errors import ConfigurationError, StateError
from hazardops.operators.deeponet import DeepONet
from hazardops.operators.fno import FNO
from hazardops.operators.hybrid import DeepFNOnet
from hazardops.operators.normalization import Standardizer

MAGIC = b"HZCK"
VERSION = 1
KINDS = {"deeponet": DeepONet, "fno": FNO}


def _blocks(buf, offset):
    while offset < len(buf):
        if buf[offset:offset + 4] != hio.MAGIC:
            raise StateError("corrupt checkpoint: expected an array block")
        ndim = struct.unpack_from("<I", buf, offset + 8)[0]
        shape = struct.unpack_from(f"<{ndim}Q", buf, offset + 12)
        size = 12 + 8 * ndim + 8 * int(np.prod(shape))
        yield hio.decode_block(buf[offset:offset + size])
        offset += size


def file_digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _model_header(model):
    head = model.header()
    head["floors"] = getattr(model, "floors", None)
    head["trained"] = bool(model.trained)
    return head


def save_checkpoint(path, model, schedule=None, sa=None, stage1_path=None, extra=None):
    """Write ``model`` (an FNO, DeepONet or DeepFNOnet) to ``path``.

    For a DeepFNOnet, ``stage1_path`` must name the already written stage-1
    checkpoint; only its name and digest are recorded here.
    """
    path = Path(path)
    if isinstance(model, DeepFNOnet):
        if stage1_path is None or not Path(stage1_path).exists():
            raise StateError("save the stage-1 DeepONet checkpoint before the stage-2 file")
        head = _model_header(model.stage2)
        head["kind"] = "deepfnonet"
        head["residual"] = model.residual
        head["stage1"] = {"file": Path(stage1_path).name, "sha256": file_digest(stage1_path)}
        params = model.stage2.parameters()
    else:
        head = _model_header(model)
        params = model.parameters()
    head["format"] = "hazardops.checkpoint/1"
    head["parameters"] = [{"name": n, "shape": list(t.shape)} for n, t in params]
    head["schedule"] = schedule.to_dict() if schedule is not None else None
    head["lambda"] = None if sa is None else dict(sa.to_dict(), shape=list(sa.values.shape))
    head["extra"] = extra or {}
    text = json.dumps(head, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<IQ", VERSION, len(text)), text]
    parts += [hio.encode_block(t.values) for _, t in params]
    if sa is not None:
        parts.append(hio.encode_block(sa.values))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"".join(parts))
    return path


def read_checkpoint(path):
    """``(header, [arrays...])`` without building a model."""
    path = Path(path)
    if not path.exists():
        raise StateError(f"checkpoint {path} does not exist")
    buf = path.read_bytes()
    if buf[:4] != MAGIC:
        raise StateError(f"{path} is not a checkpoint (bad magic)")
    version, n = struct.unpack_from("<IQ", buf, 4)
    if version != VERSION:
        raise StateError(f"unsupported checkpoint version {version}")
    head = json.loads(buf[16:16 + n].decode("utf-8"))
    return head, list(_blocks(buf, 16 + n))


def _build(head, arrays):
    kind = "fno" if head["kind"] == "deepfnonet" else head["kind"]
    if kind not in KINDS:
        raise ConfigurationError(f"unknown model kind '{head['kind']}'")
    config = dict(head["config"])
    if kind == "deeponet":
        config.pop("n_in", None)
    model = KINDS[kind](**config)
    names = [p["name"] for p in head["parameters"]]
    if len(arrays) < len(names):
        raise StateError("checkpoint holds fewer parameter blocks than its header declares")
    model.load_state(dict(zip(names, arrays)))
    model.input_norm = Standardizer.from_dict(head["input_norm"])
    model.output_norm = Standardizer.from_dict(head["output_norm"])
    model.floors = head.get("floors")
    model.trained = head.get("trained", False)
    return model, arrays[len(names):]


def load_checkpoint(path):
    """Rebuild a model; returns ``(model, header, lambda_or_None)``."""
    path = Path(path)
    head, arrays = read_checkpoint(path)
    model, rest = _build(head, arrays)
    lam = rest[0] if head.get("lambda") is not None and rest else None
    if head["kind"] == "deepfnonet":
        ref = head["stage1"]
        stage1_path = path.parent / ref["file"]
        if not stage1_path.exists():
            raise StateError(f"stage-1 checkpoint {stage1_path} is missing")
        if file_digest(stage1_path) != ref["sha256"]:
            raise StateError(f"stage-1 checkpoint {stage1_path} changed since stage 2 was trained")
        stage1, _, _ = load_checkpoint(stage1_path)
        model = DeepFNOnet(stage1, model, residual=head.get("residual", False))
    return model, head, lam
