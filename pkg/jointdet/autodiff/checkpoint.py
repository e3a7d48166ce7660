"""
For License information see the LICENSE file.

"""
import os
from logging import getLogger
from typing import Any, Dict, Optional

import dill as pickle
import numpy as np

from .module import Module
from ..api.constants import CHECKPOINT_FORMAT_VERSION, FormatError

log = getLogger(__name__)


def save_checkpoint(module: Module, filename: str, meta: Optional[Dict[str, Any]] = None) -> None:
    """
    Stores the parameters and buffers of `module` in a versioned dill pickle.

    Parameters
    ----------
    module : Module
        the module to store
    filename : str
        the target file
    meta : Optional[Dict[str, Any]]
        additional picklable data, e.g. the run configuration
        default: None
    """
    params, buffers = module.state_dict()
    content = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "parameters": {name: {"shape": list(data.shape), "data": data.reshape(-1)} for name, data in params.items()},
        "buffers": buffers,
        "meta": meta or {},
    }
    directory = os.path.dirname(filename)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)
    with open(filename, "wb") as f:
        pickle.dump(content, f)
    log.debug(f"Wrote checkpoint with {len(params)} parameters to {filename}")


def read_checkpoint(filename: str) -> Dict[str, Any]:
    """Reads a checkpoint and returns its content with parameter arrays restored to their shapes."""
    try:
        with open(filename, "rb") as f:
            content = pickle.load(f)
    except (OSError, pickle.UnpicklingError, EOFError) as e:
        raise FormatError(f"{filename}: cannot read checkpoint: {e}") from e

    if not isinstance(content, dict) or "format_version" not in content:
        raise FormatError(f"{filename}: format_version: missing")
    if content["format_version"] != CHECKPOINT_FORMAT_VERSION:
        raise FormatError(f"{filename}: format_version: expected {CHECKPOINT_FORMAT_VERSION}, "
                          f"got {content['format_version']}")

    params = {}
    for name, entry in content.get("parameters", {}).items():
        try:
            params[name] = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        except (KeyError, ValueError) as e:
            raise FormatError(f"{filename}: parameters.{name}: {e}") from e
    return {"parameters": params, "buffers": content.get("buffers", {}), "meta": content.get("meta", {})}


def load_checkpoint(module: Module, filename: str) -> Dict[str, Any]:
    """Loads a checkpoint into `module` and returns its meta data."""
    content = read_checkpoint(filename)
    module.load_state_dict(content["parameters"], content["buffers"])
    return content["meta"]
