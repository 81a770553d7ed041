"""CSV export of KAConv spline coefficients, one row per coefficient."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import UnsupportedModel
from ..layers import KAConv1d

HEADER = "epoch,layer,out_channel,in_channel,tap,coeff_index,value"


def spline_row_count(model) -> int:
    return sum(layer.spline_weight.size for layer in model.features
               if isinstance(layer, KAConv1d))


def export_splines(model, epoch: int, out_path) -> Path:
    """Write every KAConv ``spline_weight`` entry of ``model`` to ``out_path``.

    Rows run over layer, out_channel, in_channel, tap, coeff_index in
    row-major order; values use the shortest repr that round-trips.
    """
    layers = [(i, layer) for i, layer in enumerate(model.features)
              if isinstance(layer, KAConv1d)]
    if not layers:
        raise UnsupportedModel(f"model variant {model.spec.variant!r} has no KAConv layers")
    out_path = Path(out_path)
    with out_path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(HEADER + "\n")
        for li, layer in layers:
            w = layer.spline_weight.data
            c_out, c_in, k, nb = w.shape
            suffix = [f"{t},{c}," for t in range(k) for c in range(nb)]
            flat = w.reshape(c_out, c_in, k * nb)
            for o in range(c_out):
                for i in range(c_in):
                    prefix = f"{epoch},{li},{o},{i},"
                    vals = flat[o, i].tolist()
                    fh.write("".join(f"{prefix}{s}{v!r}\n" for s, v in zip(suffix, vals)))
    return out_path


def read_splines(path) -> np.ndarray:
    """Load an export back as a structured array (for inspection and tests)."""
    return np.genfromtxt(path, delimiter=",", names=True,
                         dtype=[int, int, int, int, int, int, float])
