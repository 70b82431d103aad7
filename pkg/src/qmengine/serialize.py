"""JSON and CSV serialization helpers.

Complex matrices travel as flat row-major arrays of interleaved real and
imaginary parts: ``[re00, im00, re01, im01, ...]``.  All floating-point
output is printed with 17 significant digits so values round-trip exactly.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ConfigParse, EngineError
from .channels import (
    ChannelKind,
    KrausChannel,
    bare_measurement,
    feedback_from_measurement,
    general_measurement,
    partial_thermalization,
    polar_split,
    unitary_channel,
)
from .engine import EngineCycle, EngineStep, build_cycle
from .operators import as_matrix


def fmt(x: float) -> str:
    return "%.17g" % float(x)


def _emit(obj, parts: list, indent: int) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            parts.append("{}")
            return
        parts.append("{\n")
        for i, (key, val) in enumerate(obj.items()):
            parts.append(f"{pad}  {json.dumps(str(key))}: ")
            _emit(val, parts, indent + 1)
            parts.append(",\n" if i < len(obj) - 1 else "\n")
        parts.append(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            parts.append("[]")
            return
        parts.append("[")
        for i, val in enumerate(items):
            _emit(val, parts, indent)
            if i < len(items) - 1:
                parts.append(", ")
        parts.append("]")
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        parts.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        parts.append(fmt(obj))
    elif obj is None:
        parts.append("null")
    else:
        parts.append(json.dumps(obj))


def dumps(obj) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    parts: list = []
    _emit(obj, parts, 0)
    parts.append("\n")
    return "".join(parts)


# ---------------------------------------------------------------------------
# matrices

def matrix_to_json(a) -> list:
    m = as_matrix(a)
    flat = m.reshape(-1)
    out: list = []
    for z in flat:
        out.append(float(z.real))
        out.append(float(z.imag))
    return out


def matrix_from_json(data, dim: int | None = None, path: str = "matrix") -> np.ndarray:
    if not isinstance(data, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in data):
        raise ConfigParse(path, "expected a flat array of numbers")
    if len(data) % 2 != 0:
        raise ConfigParse(path, f"odd-length [re, im] array of length {len(data)}")
    n = len(data) // 2
    if dim is None:
        dim = int(round(np.sqrt(n)))
    if dim * dim != n:
        raise ConfigParse(path, f"{n} complex entries do not form a {dim}x{dim} matrix")
    vals = np.asarray(data, dtype=float)
    return (vals[0::2] + 1j * vals[1::2]).reshape(dim, dim)


# ---------------------------------------------------------------------------
# channels and cycles

def channel_to_json(ch: KrausChannel) -> dict:
    if ch.kind == ChannelKind.THERMAL:
        return {"kind": "thermal", "beta": ch.beta, "lambda": ch.lam}
    return {"kind": ch.kind.value, "ops": [matrix_to_json(k) for k in ch.kraus_ops]}


def channel_from_json(data, dim: int, pre_hamiltonian=None,
                      path: str = "channel") -> KrausChannel:
    if not isinstance(data, dict):
        raise ConfigParse(path, "expected an object")
    kind = data.get("kind")
    if kind == "thermal":
        if pre_hamiltonian is None:
            raise ConfigParse(path, "thermal channel needs the pre-step Hamiltonian")
        for fieldname in ("beta", "lambda"):
            if not isinstance(data.get(fieldname), (int, float)):
                raise ConfigParse(f"{path}.{fieldname}", "expected a number")
        return partial_thermalization(pre_hamiltonian, float(data["beta"]),
                                      float(data["lambda"]))
    ops_data = data.get("ops")
    if not isinstance(ops_data, list) or not ops_data:
        raise ConfigParse(f"{path}.ops", "expected a nonempty array of matrices")
    ops = [matrix_from_json(o, dim, f"{path}.ops[{i}]") for i, o in enumerate(ops_data)]
    if kind == "bare":
        return bare_measurement(ops)
    if kind == "general":
        return general_measurement(ops)
    if kind == "unitary":
        if len(ops) != 1:
            raise ConfigParse(f"{path}.ops", "unitary channel takes exactly one matrix")
        return unitary_channel(ops[0])
    if kind == "feedback":
        # stored as the composed Kraus operators; the measurement/unitary
        # split is recovered by polar decomposition
        general = general_measurement(ops)
        bare, unitaries = polar_split(general)
        return feedback_from_measurement(bare.kraus_ops, unitaries)
    raise ConfigParse(f"{path}.kind", f"unknown channel kind {kind!r}")


def cycle_to_json(cycle: EngineCycle) -> dict:
    hams = [matrix_to_json(cycle.base_hamiltonian)]
    steps = []
    for step in cycle.steps:
        hams.append(matrix_to_json(step.post_hamiltonian))
        steps.append({
            "measurement": channel_to_json(step.measurement),
            "unitary": matrix_to_json(step.unitary),
        })
    return {"dim": cycle.dim, "hamiltonians": hams, "steps": steps}


def cycle_from_json(data, path: str = "cycle") -> EngineCycle:
    if not isinstance(data, dict):
        raise ConfigParse(path, "expected an object")
    dim = data.get("dim")
    if not isinstance(dim, int) or dim < 2:
        raise ConfigParse(f"{path}.dim", "expected an integer >= 2")
    hams_data = data.get("hamiltonians")
    steps_data = data.get("steps")
    if not isinstance(steps_data, list) or not steps_data:
        raise ConfigParse(f"{path}.steps", "expected a nonempty array")
    if not isinstance(hams_data, list) or len(hams_data) != len(steps_data) + 1:
        raise ConfigParse(f"{path}.hamiltonians",
                          "expected one more Hamiltonian than steps")
    hams = [matrix_from_json(h, dim, f"{path}.hamiltonians[{i}]")
            for i, h in enumerate(hams_data)]
    steps = []
    for i, sd in enumerate(steps_data):
        if not isinstance(sd, dict):
            raise ConfigParse(f"{path}.steps[{i}]", "expected an object")
        measurement = channel_from_json(sd.get("measurement"), dim,
                                        pre_hamiltonian=hams[i],
                                        path=f"{path}.steps[{i}].measurement")
        if "unitary" in sd:
            unitary = matrix_from_json(sd["unitary"], dim, f"{path}.steps[{i}].unitary")
        else:
            unitary = np.eye(dim, dtype=complex)
        steps.append(EngineStep(measurement, unitary, hams[i + 1]))
    try:
        return build_cycle(hams[0], steps)
    except EngineError as exc:
        raise ConfigParse(path, str(exc)) from exc
