"""Numerical tolerances shared by every module.

The defaults can be overridden for a whole process through the
``BELLBOUND_TOL_OVERRIDE`` environment variable, a comma separated list of
``name=value`` pairs, e.g. ``BELLBOUND_TOL_OVERRIDE="sdp_gap=1e-7"``.
"""

import dataclasses
import os

ENV_OVERRIDE = "BELLBOUND_TOL_OVERRIDE"


@dataclasses.dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-10
    trace: float = 1e-9
    psd: float = 1e-9
    norm: float = 1e-9
    basis: float = 1e-10
    zero_eig: float = 1e-10
    povm_sum: float = 1e-8
    sdp_feas: float = 1e-8
    sdp_gap: float = 1e-8
    sdp_max_iter: int = 200
    sdp_max_dim: int = 400
    seesaw_convergence: float = 1e-9
    seesaw_max_sweeps: int = 200
    seesaw_restarts: int = 20
    coherence: float = 1e-8
    enumeration_cap: int = 10**8


def _parse_override(text):
    fields = {f.name: f.type for f in dataclasses.fields(Tolerances)}
    values = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, _, raw = item.partition("=")
        name = name.strip()
        if name not in fields:
            raise ValueError(f"unknown tolerance {name!r} in {ENV_OVERRIDE}")
        kind = int if fields[name] in (int, "int") else float
        values[name] = kind(float(raw))
    return values


def get_tolerances():
    """Return the active tolerances, applying the environment override."""
    text = os.environ.get(ENV_OVERRIDE, "")
    if not text:
        return Tolerances()
    return dataclasses.replace(Tolerances(), **_parse_override(text))


TOL = get_tolerances()
