"""Scene configuration files: a small line-based format of key-value entries
and nested nodes describing a CSG tree, or a mesh / point-cloud field.

    csg {
      union {
        sphere { radius 1  center 0 0 0 }
        complement { sphere { radius 0.2  center 0 0 1 } }
      }
    }

A node opens with `name {` and closes with `}`; other lines are
`key value...`. `#` starts a comment. Paths are resolved relative to the
scene file.
"""

from __future__ import annotations

import os

from . import implicit
from .cloudfield import PointCloudField, load_ply, load_xyz
from .errors import SceneError
from .implicit import CsgNode, ImplicitSurface, build_csg_field
from .meshfield import MeshDistanceField, load_obj


class _Node:
    def __init__(self, name):
        self.name = name
        self.entries: dict[str, list[str]] = {}
        self.children: list[_Node] = []


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _tokenize(text: str) -> list[str]:
    tokens = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0]
        tokens.extend(line.replace("{", " { ").replace("}", " } ").split())
    return tokens


def _parse_tree(text: str) -> _Node:
    tokens = _tokenize(text)
    root = _Node("__root__")
    stack = [root]
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok == "}":
            if len(stack) == 1:
                raise SceneError("unmatched '}'")
            stack.pop()
            i += 1
        elif tok == "{":
            raise SceneError("'{' must follow a node name")
        elif i + 1 < len(tokens) and tokens[i + 1] == "{":
            node = _Node(tok)
            stack[-1].children.append(node)
            stack.append(node)
            i += 2
        else:
            key = tok
            i += 1
            vals = []
            while i < len(tokens) and _is_number(tokens[i]):
                vals.append(tokens[i])
                i += 1
            if not vals:
                # non-numeric single value (e.g. a file path)
                if i >= len(tokens) or tokens[i] in ("{", "}") or (
                    i + 1 < len(tokens) and tokens[i + 1] == "{"
                ):
                    raise SceneError(f"entry {key!r} has no value")
                vals = [tokens[i]]
                i += 1
            stack[-1].entries[key] = vals
    if len(stack) != 1:
        raise SceneError(f"unclosed node {stack[-1].name!r}")
    return root


def _floats(node: _Node, key: str, n: int, default=None):
    if key not in node.entries:
        if default is not None:
            return default
        raise SceneError(f"{node.name}: missing {key!r}")
    vals = node.entries[key]
    if len(vals) != n:
        raise SceneError(f"{node.name}: {key!r} needs {n} value(s)")
    try:
        out = [float(v) for v in vals]
    except ValueError:
        raise SceneError(f"{node.name}: {key!r} values must be numbers")
    return out[0] if n == 1 else out


def _build_csg(node: _Node) -> CsgNode:
    name = node.name
    if name == "sphere":
        return implicit.sphere(_floats(node, "radius", 1), _floats(node, "center", 3, [0.0, 0.0, 0.0]))
    if name == "torus":
        return implicit.torus(
            _floats(node, "major_radius", 1),
            _floats(node, "minor_radius", 1),
            _floats(node, "center", 3, [0.0, 0.0, 0.0]),
        )
    if name == "plane":
        return implicit.plane(_floats(node, "normal", 3, [0.0, 0.0, 1.0]), _floats(node, "offset", 1, [0.0]))
    if name == "saddle":
        return implicit.saddle(_floats(node, "scale", 1, [1.0]))
    if name == "box":
        return implicit.box(
            _floats(node, "half_extents", 3, [0.5, 0.5, 0.5]),
            _floats(node, "center", 3, [0.0, 0.0, 0.0]),
        )
    if name in ("union", "intersection"):
        kids = [_build_csg(c) for c in node.children]
        if not kids:
            raise SceneError(f"{name} needs at least one child node")
        return CsgNode(name, {}, kids)
    if name == "complement":
        if len(node.children) != 1:
            raise SceneError("complement takes exactly one child node")
        return implicit.complement(_build_csg(node.children[0]))
    if name == "offset":
        if len(node.children) != 1:
            raise SceneError("offset takes exactly one child node")
        return implicit.offset(_build_csg(node.children[0]), _floats(node, "amount", 1))
    raise SceneError(f"unknown CSG node {name!r}")


def parse_scene(text: str, base_dir: str = ".") -> ImplicitSurface:
    """Build the surface described by the scene text."""
    root = _parse_tree(text)
    if len(root.children) != 1:
        raise SceneError("scene must contain exactly one top-level node")
    top = root.children[0]
    if top.name == "csg":
        if len(top.children) != 1:
            raise SceneError("csg node needs exactly one child")
        return build_csg_field(_build_csg(top.children[0]))
    if top.name == "mesh":
        if "path" not in top.entries:
            raise SceneError("mesh node needs a path entry")
        path = os.path.join(base_dir, " ".join(top.entries["path"]))
        v, t = load_obj(path)
        return MeshDistanceField(v, t)
    if top.name == "point_cloud":
        if "path" not in top.entries:
            raise SceneError("point_cloud node needs a path entry")
        path = os.path.join(base_dir, " ".join(top.entries["path"]))
        if path.endswith(".ply"):
            pts = load_ply(path)
        else:
            pts = load_xyz(path)
        beta = _floats(top, "beta", 1, [200.0])
        delta = _floats(top, "delta", 1, [5e-3])
        return PointCloudField(pts, beta, delta)
    raise SceneError(f"unknown scene type {top.name!r}")


def load_scene(path) -> ImplicitSurface:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise FileNotFoundError(f"cannot read scene file {path}: {e}")
    return parse_scene(text, base_dir=os.path.dirname(os.path.abspath(path)))
