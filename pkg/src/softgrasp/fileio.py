"""File formats: trajectory streams, Tetgen meshes, grasp candidate lists.

Trajectories and grasp lists are line-delimited JSON (one record per line)
so large traces stream without loading whole files; floats round-trip
losslessly through Python's shortest-repr JSON encoding.  Meshes use the
Tetgen ASCII .node/.ele convention.  The exact schemas live in
docs/formats.md.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .contact import ContactPoint, TrajectoryFrame
from .errors import ParseError, UnsupportedVersionError
from .fem import GraspCandidate, MaterialParams, TetMesh

TRAJECTORY_FORMAT = "softgrasp-trajectory"
TRAJECTORY_VERSION = 1


@dataclass(frozen=True)
class TrajectoryHeader:
    """Identity of a recorded squeeze: object, mass, material, torque scale."""

    object_name: str
    mass: float
    material: MaterialParams
    torque_scale_rho: float
    version: int = TRAJECTORY_VERSION


@dataclass(frozen=True)
class TrajectoryFile:
    header: TrajectoryHeader
    frames: tuple[TrajectoryFrame, ...]


def _float_list(values) -> list[float]:
    return [float(v) for v in np.asarray(values, dtype=float)]


def _reject_const(value):
    raise ValueError(f"non-finite JSON constant {value!r}")


def _json_line(text: str, lineno: int) -> dict:
    try:
        obj = json.loads(text, parse_constant=_reject_const)
    except ValueError as exc:
        raise ParseError(f"invalid record: {exc}", line=lineno) from None
    if not isinstance(obj, dict):
        raise ParseError("record is not an object", line=lineno)
    return obj


def _get(obj: dict, key: str, lineno: int):
    if key not in obj:
        raise ParseError(f"missing field {key!r}", line=lineno)
    return obj[key]


def _get_vec3(obj: dict, key: str, lineno: int) -> np.ndarray:
    raw = _get(obj, key, lineno)
    if not (isinstance(raw, list) and len(raw) == 3):
        raise ParseError(f"field {key!r} must be a 3-element list", line=lineno)
    try:
        vec = np.array([float(v) for v in raw])
    except (TypeError, ValueError):
        raise ParseError(f"field {key!r} has a non-numeric entry", line=lineno) from None
    if not np.all(np.isfinite(vec)):
        raise ParseError(f"field {key!r} has a non-finite entry", line=lineno)
    return vec


def _get_num(obj: dict, key: str, lineno: int) -> float:
    raw = _get(obj, key, lineno)
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ParseError(f"field {key!r} must be a number", line=lineno)
    val = float(raw)
    if not np.isfinite(val):
        raise ParseError(f"field {key!r} must be finite", line=lineno)
    return val


# ---------------------------------------------------------------------------
# Trajectories.


def write_trajectory(frames, header: TrajectoryHeader) -> str:
    """Serialize a header plus frames to line-delimited JSON text."""
    mat = header.material
    head = {
        "format": TRAJECTORY_FORMAT,
        "version": int(header.version),
        "object": str(header.object_name),
        "mass": float(header.mass),
        "material": {
            "youngs_modulus": float(mat.youngs_modulus),
            "poisson_ratio": float(mat.poisson_ratio),
            "friction_mu": float(mat.friction_mu),
            "density": float(mat.density),
        },
        "torque_scale_rho": float(header.torque_scale_rho),
    }
    lines = [json.dumps(head, allow_nan=False)]
    for frame in frames:
        rec = {
            "t": float(frame.time),
            "squeeze_force": float(frame.squeeze_force),
            "com": _float_list(frame.com),
            "mass": float(frame.mass),
            "contacts": [
                {
                    "x": _float_list(c.position),
                    "n": _float_list(c.normal),
                    "f": _float_list(c.force),
                }
                for c in frame.contacts
            ],
        }
        lines.append(json.dumps(rec, allow_nan=False))
    return "\n".join(lines) + "\n"


def _parse_header(obj: dict, lineno: int) -> TrajectoryHeader:
    fmt = _get(obj, "format", lineno)
    if fmt != TRAJECTORY_FORMAT:
        raise ParseError(f"not a trajectory file (format {fmt!r})", line=lineno)
    version = _get(obj, "version", lineno)
    if not isinstance(version, int) or isinstance(version, bool):
        raise ParseError("version must be an integer", line=lineno)
    if version != TRAJECTORY_VERSION:
        raise UnsupportedVersionError(
            f"unsupported trajectory version {version} (supported: {TRAJECTORY_VERSION})",
            line=lineno,
        )
    name = _get(obj, "object", lineno)
    if not isinstance(name, str):
        raise ParseError("object name must be a string", line=lineno)
    mat_raw = _get(obj, "material", lineno)
    if not isinstance(mat_raw, dict):
        raise ParseError("material must be an object", line=lineno)
    try:
        material = MaterialParams(
            youngs_modulus=_get_num(mat_raw, "youngs_modulus", lineno),
            poisson_ratio=_get_num(mat_raw, "poisson_ratio", lineno),
            friction_mu=_get_num(mat_raw, "friction_mu", lineno),
            density=_get_num(mat_raw, "density", lineno),
        )
    except ValueError as exc:
        raise ParseError(f"bad material: {exc}", line=lineno) from None
    mass = _get_num(obj, "mass", lineno)
    rho = _get_num(obj, "torque_scale_rho", lineno)
    if rho <= 0.0:
        raise ParseError("torque_scale_rho must be > 0", line=lineno)
    return TrajectoryHeader(
        object_name=name, mass=mass, material=material, torque_scale_rho=rho, version=version
    )


def _parse_frame(obj: dict, lineno: int) -> TrajectoryFrame:
    raw_contacts = _get(obj, "contacts", lineno)
    if not isinstance(raw_contacts, list):
        raise ParseError("contacts must be a list", line=lineno)
    contacts = []
    for c in raw_contacts:
        if not isinstance(c, dict):
            raise ParseError("each contact must be an object", line=lineno)
        try:
            contacts.append(
                ContactPoint(
                    position=_get_vec3(c, "x", lineno),
                    normal=_get_vec3(c, "n", lineno),
                    force=_get_vec3(c, "f", lineno),
                )
            )
        except ValueError as exc:
            raise ParseError(f"bad contact: {exc}", line=lineno) from None
    try:
        return TrajectoryFrame(
            time=_get_num(obj, "t", lineno),
            contacts=tuple(contacts),
            squeeze_force=_get_num(obj, "squeeze_force", lineno),
            com=_get_vec3(obj, "com", lineno),
            mass=_get_num(obj, "mass", lineno),
        )
    except ValueError as exc:
        raise ParseError(f"bad frame: {exc}", line=lineno) from None


def read_trajectory(text: str) -> TrajectoryFile:
    """Parse trajectory text; errors carry the 1-based line number.

    A malformed line reports how many frames before it parsed cleanly, so
    partially written files are diagnosable.
    """
    if not isinstance(text, str):
        raise ParseError("trajectory input must be text")
    lines = text.splitlines()
    stripped = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not stripped:
        raise ParseError("empty trajectory file", line=1)
    head_no, head_line = stripped[0]
    header = _parse_header(_json_line(head_line, head_no), head_no)
    frames: list[TrajectoryFrame] = []
    prev_time = -np.inf
    for lineno, line in stripped[1:]:
        try:
            frame = _parse_frame(_json_line(line, lineno), lineno)
        except ParseError as exc:
            exc.args = (f"{exc.args[0]} (parsed {len(frames)} valid frames before this line)",)
            raise
        if frame.time <= prev_time:
            raise ParseError(
                f"frame times must increase strictly ({frame.time} after {prev_time}; "
                f"parsed {len(frames)} valid frames before this line)",
                line=lineno,
            )
        prev_time = frame.time
        frames.append(frame)
    return TrajectoryFile(header=header, frames=tuple(frames))


def save_trajectory(path, frames, header: TrajectoryHeader) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(write_trajectory(frames, header))


def load_trajectory(path) -> TrajectoryFile:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8: {exc}") from None
    return read_trajectory(text)


# ---------------------------------------------------------------------------
# Tetgen meshes.


def _data_lines(text: str):
    """Yield (lineno, tokens) for non-comment, non-blank lines."""
    for i, raw in enumerate(text.splitlines()):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield i + 1, body.split()


def _to_int(token: str, lineno: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"non-integer {what} {token!r}", line=lineno) from None


def _to_float(token: str, lineno: int, what: str) -> float:
    try:
        val = float(token)
    except ValueError:
        raise ParseError(f"non-numeric {what} {token!r}", line=lineno) from None
    if not np.isfinite(val):
        raise ParseError(f"non-finite {what} {token!r}", line=lineno)
    return val


def parse_tet_mesh(node_text: str, ele_text: str) -> TetMesh:
    """Parse Tetgen ASCII .node and .ele contents into a validated TetMesh.

    0- or 1-based numbering is auto-detected from the first node index and
    applied to both files.  '#' starts a comment.  Index errors, non-numeric
    tokens, and inverted tets report the offending line.
    """
    node_lines = list(_data_lines(node_text))
    if not node_lines:
        raise ParseError("empty node file", line=1)
    lineno, head = node_lines[0]
    if len(head) < 2:
        raise ParseError("node header needs at least <count> <dim>", line=lineno)
    n_nodes = _to_int(head[0], lineno, "node count")
    dim = _to_int(head[1], lineno, "dimension")
    if n_nodes < 1:
        raise ParseError("node count must be >= 1", line=lineno)
    if dim != 3:
        raise ParseError(f"only 3D meshes supported, got dim {dim}", line=lineno)
    body = node_lines[1:]
    if len(body) != n_nodes:
        raise ParseError(
            f"node count {n_nodes} does not match {len(body)} node lines", line=lineno
        )

    base = None
    ids: dict[int, int] = {}
    coords = np.empty((n_nodes, 3))
    for row, (ln, toks) in enumerate(body):
        if len(toks) < 4:
            raise ParseError("node line needs <index> <x> <y> <z>", line=ln)
        idx = _to_int(toks[0], ln, "node index")
        if base is None:
            if idx not in (0, 1):
                raise ParseError(f"first node index must be 0 or 1, got {idx}", line=ln)
            base = idx
        if idx in ids:
            raise ParseError(f"duplicate node index {idx}", line=ln)
        if not (base <= idx < base + n_nodes):
            raise ParseError(f"node index {idx} out of range", line=ln)
        ids[idx] = row
        for k in range(3):
            coords[row, k] = _to_float(toks[1 + k], ln, "coordinate")

    ele_lines = list(_data_lines(ele_text))
    if not ele_lines:
        raise ParseError("empty ele file", line=1)
    lineno, head = ele_lines[0]
    if len(head) < 2:
        raise ParseError("ele header needs at least <count> <nodes-per-tet>", line=lineno)
    n_tets = _to_int(head[0], lineno, "tet count")
    per = _to_int(head[1], lineno, "nodes per tet")
    if n_tets < 1:
        raise ParseError("tet count must be >= 1", line=lineno)
    if per != 4:
        raise ParseError(f"only 4-node tets supported, got {per}", line=lineno)
    body = ele_lines[1:]
    if len(body) != n_tets:
        raise ParseError(f"tet count {n_tets} does not match {len(body)} tet lines", line=lineno)

    tets = np.empty((n_tets, 4), dtype=int)
    tet_linenos = np.empty(n_tets, dtype=int)
    for row, (ln, toks) in enumerate(body):
        if len(toks) < 5:
            raise ParseError("tet line needs <index> and 4 node indices", line=ln)
        for k in range(4):
            ref = _to_int(toks[1 + k], ln, "tet node index")
            if ref not in ids:
                raise ParseError(f"tet references unknown node {ref}", line=ln)
            tets[row, k] = ids[ref]
        tet_linenos[row] = ln

    edges = coords[tets[:, 1:]] - coords[tets[:, :1]]
    vols = np.linalg.det(edges) / 6.0
    bad = np.nonzero(vols <= 0.0)[0]
    if bad.size:
        raise ParseError(
            f"inverted or flat tet (signed volume {vols[bad[0]]:.3e})",
            line=int(tet_linenos[bad[0]]),
        )
    return TetMesh(nodes=coords, tets=tets)


def load_tet_mesh(node_path, ele_path) -> TetMesh:
    def read(path):
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return fh.read()
        except UnicodeDecodeError as exc:
            raise ParseError(f"{path}: not valid UTF-8: {exc}") from None

    return parse_tet_mesh(read(node_path), read(ele_path))


# ---------------------------------------------------------------------------
# Grasp candidates.


def parse_grasp_candidates(text: str) -> list[GraspCandidate]:
    """Parse line-delimited JSON grasp candidates.

    Required keys per line: center, axis, halfwidth, max_force; optional
    force_steps (default 1).  An axis off unit length by at most 1e-3 is
    normalized with a warning; more than that is an error.
    """
    if not isinstance(text, str):
        raise ParseError("grasp input must be text")
    out = []
    for lineno_raw, raw in enumerate(text.splitlines()):
        if not raw.strip():
            continue
        lineno = lineno_raw + 1
        obj = _json_line(raw, lineno)
        axis = _get_vec3(obj, "axis", lineno)
        norm = float(np.linalg.norm(axis))
        if abs(norm - 1.0) > 1e-3:
            raise ParseError(f"axis norm {norm:.6f} too far from 1", line=lineno)
        if abs(norm - 1.0) > 1e-9:
            warnings.warn(
                f"grasp line {lineno}: axis normalized (norm was {norm:.6f})",
                stacklevel=2,
            )
        axis = axis / norm
        steps = obj.get("force_steps", 1)
        if isinstance(steps, bool) or not isinstance(steps, int):
            raise ParseError("force_steps must be an integer", line=lineno)
        try:
            cand = GraspCandidate(
                grasp_center=_get_vec3(obj, "center", lineno),
                approach_axis=axis,
                finger_halfwidth=_get_num(obj, "halfwidth", lineno),
                max_force=_get_num(obj, "max_force", lineno),
                force_steps=steps,
            )
        except ValueError as exc:
            raise ParseError(f"bad grasp candidate: {exc}", line=lineno) from None
        out.append(cand)
    if not out:
        raise ParseError("no grasp candidates in file", line=1)
    return out


def write_grasp_candidates(candidates) -> str:
    lines = []
    for cand in candidates:
        rec = {
            "center": _float_list(cand.grasp_center),
            "axis": _float_list(cand.approach_axis),
            "halfwidth": float(cand.finger_halfwidth),
            "max_force": float(cand.max_force),
            "force_steps": int(cand.force_steps),
        }
        lines.append(json.dumps(rec, allow_nan=False))
    return "\n".join(lines) + "\n"


def load_grasp_candidates(path) -> list[GraspCandidate]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_grasp_candidates(fh.read())
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8: {exc}") from None
