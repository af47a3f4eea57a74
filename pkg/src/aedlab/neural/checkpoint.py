"""Model checkpoints as a single ``.npz`` container.

Layout: ``__meta__`` holds a JSON string (format version, ModelDef, seed),
``param/<name>`` and ``acc/<name>`` hold the float32 tensors row-major.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import ModelDef, ModelState

FORMAT = "aedlab-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_state(state: ModelState, path) -> None:
    meta = {"format": FORMAT, "version": VERSION,
            "model_def": state.model_def.to_dict(), "seed": int(state.seed)}
    arrays = {"__meta__": np.array(json.dumps(meta, sort_keys=True))}
    for name, value in state.params.items():
        arrays[f"param/{name}"] = np.ascontiguousarray(value, dtype=np.float32)
        arrays[f"acc/{name}"] = np.ascontiguousarray(state.accumulators[name], dtype=np.float32)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_state(path) -> ModelState:
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["__meta__"]))
            if meta.get("format") != FORMAT:
                raise CheckpointError(f"{path}: not a model checkpoint")
            if meta.get("version") != VERSION:
                raise CheckpointError(f"{path}: unsupported checkpoint version {meta.get('version')}")
            model_def = ModelDef.from_dict(meta["model_def"])
            params, accs = {}, {}
            for name, shape in model_def.param_shapes().items():
                params[name] = z[f"param/{name}"]
                accs[name] = z[f"acc/{name}"]
                if params[name].shape != shape:
                    raise CheckpointError(f"{path}: {name} has shape {params[name].shape}, "
                                          f"expected {shape}")
    except CheckpointError:
        raise
    except (KeyError, OSError, ValueError) as exc:
        raise CheckpointError(f"{path}: unreadable checkpoint ({exc})") from exc
    seed = int(meta["seed"])
    return ModelState(model_def, params, accs, seed, rng=np.random.default_rng([seed, 1]))
