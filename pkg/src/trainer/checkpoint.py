from typing import Any, Dict
from logging import getLogger
from pathlib import Path

import numpy as np

from src.trainer.policy import PolicySnapshot
from src.trainer.trainer_schema import PolicyError
from src.utils.artifact_manager import ArtifactError, ArtifactManager

logger = getLogger(__name__)

CHECKPOINT_FORMAT = "chatpcg-policy"
CHECKPOINT_VERSION = 1


def snapshot_to_dict(snapshot: PolicySnapshot) -> Dict[str, Any]:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "shapes": [list(p.shape) for p in snapshot.params],
        "hidden_sizes": list(snapshot.hidden_sizes),
        "rng_seed": snapshot.rng_seed,
        "step_count": snapshot.step_count,
        "params": [p.tolist() for p in snapshot.params],
        "optimizer": {
            "t": snapshot.adam_t,
            "m": [m.tolist() for m in snapshot.adam_m],
            "v": [v.tolist() for v in snapshot.adam_v],
        },
        "metadata": snapshot.metadata,
    }


def snapshot_from_dict(payload: Dict[str, Any]) -> PolicySnapshot:
    """
    Rebuilds a policy from its JSON dump, checking every array against the shape header.

    Raises:
        PolicyError: If the format, version or any shape does not match.
    """
    if payload.get("format") != CHECKPOINT_FORMAT or payload.get("version") != CHECKPOINT_VERSION:
        raise PolicyError(
            f"unsupported checkpoint {payload.get('format')!r} v{payload.get('version')}"
        )
    try:
        shapes = [tuple(shape) for shape in payload["shapes"]]

        def arrays(values):
            result = [np.asarray(value, dtype=np.float64) for value in values]
            if [a.shape for a in result] != shapes:
                raise PolicyError("checkpoint arrays do not match the shape header")
            return result

        params = arrays(payload["params"])
        optimizer = payload.get("optimizer") or {}
        adam_m = arrays(optimizer["m"]) if optimizer.get("m") else []
        adam_v = arrays(optimizer["v"]) if optimizer.get("v") else []
        snapshot = PolicySnapshot(
            params=params,
            hidden_sizes=tuple(payload["hidden_sizes"]),
            rng_seed=int(payload["rng_seed"]),
            step_count=int(payload["step_count"]),
            adam_m=adam_m,
            adam_v=adam_v,
            adam_t=int(optimizer.get("t", 0)),
            metadata=dict(payload.get("metadata") or {}),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise PolicyError(f"malformed checkpoint: {e}") from e
    if not all(np.all(np.isfinite(p)) for p in snapshot.params):
        raise PolicyError("checkpoint holds non-finite weights")
    return snapshot


def save_checkpoint(snapshot: PolicySnapshot, path: str | Path) -> Path:
    path = Path(path)
    return ArtifactManager(path.parent).write_json(path.name, snapshot_to_dict(snapshot))


def load_checkpoint(path: str | Path) -> PolicySnapshot:
    """
    Loads a policy checkpoint.

    Raises:
        PolicyError: If the file is missing or malformed.
    """
    path = Path(path)
    try:
        payload = ArtifactManager(path.parent).read_json(path.name)
    except ArtifactError as e:
        raise PolicyError(f"cannot load checkpoint: {e}") from e
    snapshot = snapshot_from_dict(payload)
    logger.info(f"Loaded policy from {path} (step {snapshot.step_count})")
    return snapshot
