"""Feature models and build models: loading, validation, rendering.

Both are declarative line-oriented text files. Feature model:

    feature <name> type=<bool|tristate|int|hex|string> [parent=<name>] file=<p>[,<p>...]
    constraint [of=<name>] <expression>

Build model, first match wins, no match means always present:

    <glob> :: <expression>

Expressions use feature names, ``!``, ``&&``, ``||`` and parentheses.
``#`` starts a comment in either file.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CyclicHierarchyError, DuplicateFeatureError, SchemaError
from .formula import TRUE, Expr, parse_constraint, referenced_features, render

FEATURE_TYPES = ("bool", "tristate", "int", "hex", "string")

_NAME = re.compile(r"[A-Za-z_]\w*\Z")


@dataclass(frozen=True)
class Constraint:
    expr: Expr
    owner: str | None  # feature the constraint is attached to, None if global
    refs: tuple[str, ...]  # referenced names, captured at load time


@dataclass(frozen=True)
class Feature:
    name: str
    ftype: str = "bool"
    parent: str | None = None
    attached_constraints: tuple[Constraint, ...] = ()
    defining_files: tuple[str, ...] = ()
    pseudo: bool = False


@dataclass
class FeatureModel:
    features: dict[str, Feature]
    global_constraints: tuple[Constraint, ...] = ()
    pseudo_names: set[str] = field(default_factory=set, compare=False)
    warnings: list[str] = field(default_factory=list, compare=False)

    def feature(self, name: str) -> Feature | None:
        return self.features.get(name)

    def iter_constraints(self):
        for f in self.features.values():
            yield from f.attached_constraints
        yield from self.global_constraints

    def to_text(self) -> str:
        lines = []
        for name in sorted(self.features):
            f = self.features[name]
            if f.pseudo:
                continue
            attrs = [f"type={f.ftype}"]
            if f.parent is not None:
                attrs.append(f"parent={f.parent}")
            attrs.append("file=" + ",".join(f.defining_files))
            lines.append(f"feature {name} " + " ".join(attrs))
        for name in sorted(self.features):
            for c in self.features[name].attached_constraints:
                lines.append(f"constraint of={name} {render(c.expr)}")
        for c in self.global_constraints:
            lines.append(f"constraint {render(c.expr)}")
        return "\n".join(lines) + "\n"


def _strip_comment(line: str) -> str:
    pos = line.find("#")
    return line if pos < 0 else line[:pos]


def load_feature_model(path: Path, strict: bool = False) -> FeatureModel:
    """Load and validate a feature model file."""
    declared: dict[str, dict] = {}
    raw_constraints: list[tuple[str | None, Expr, str]] = []
    for ln, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        where = f"{path.name}:{ln}"
        words = line.split(None, 1)
        head, rest = words[0], (words[1] if len(words) > 1 else "")
        if head == "feature":
            decl = _parse_feature_line(rest, where)
            if decl["name"] in declared:
                raise DuplicateFeatureError(
                    f"{where}: feature {decl['name']!r} declared twice"
                )
            declared[decl["name"]] = decl
        elif head == "constraint":
            owner, expr = _parse_constraint_line(rest, where)
            raw_constraints.append((owner, expr, where))
        else:
            raise SchemaError(f"{where}: expected 'feature' or 'constraint', got {head!r}")

    for decl in declared.values():
        parent = decl["parent"]
        if parent is not None and parent not in declared:
            raise SchemaError(
                f"{decl['where']}: parent {parent!r} of {decl['name']!r} is not declared"
            )
    _check_acyclic(declared)

    attached: dict[str, list[Constraint]] = {name: [] for name in declared}
    global_constraints: list[Constraint] = []
    warnings: list[str] = []
    pseudo: set[str] = set()
    for owner, expr, where in raw_constraints:
        if owner is not None and owner not in declared:
            raise SchemaError(f"{where}: constraint owner {owner!r} is not declared")
        constraint = Constraint(expr=expr, owner=owner, refs=referenced_features(expr))
        for name in constraint.refs:
            if name not in declared:
                pseudo.add(name)
                message = f"{where}: unknown feature {name!r} referenced in constraint"
                if strict:
                    raise SchemaError(message)
                warnings.append(message)
        if owner is None:
            global_constraints.append(constraint)
        else:
            attached[owner].append(constraint)

    features = {
        name: Feature(
            name=name,
            ftype=decl["ftype"],
            parent=decl["parent"],
            attached_constraints=tuple(attached[name]),
            defining_files=decl["files"],
        )
        for name, decl in declared.items()
    }
    for name in sorted(pseudo):
        features[name] = Feature(name=name, pseudo=True)
    return FeatureModel(
        features=features,
        global_constraints=tuple(global_constraints),
        pseudo_names=pseudo,
        warnings=warnings,
    )


def _parse_feature_line(rest: str, where: str) -> dict:
    words = rest.split()
    if not words:
        raise SchemaError(f"{where}: feature line without a name")
    name = words[0]
    if not _NAME.match(name):
        raise SchemaError(f"{where}: invalid feature name {name!r}")
    decl = {"name": name, "ftype": None, "parent": None, "files": None, "where": where}
    for word in words[1:]:
        key, sep, value = word.partition("=")
        if not sep:
            raise SchemaError(f"{where}: expected key=value, got {word!r}")
        if key == "type":
            if value not in FEATURE_TYPES:
                raise SchemaError(f"{where}: unknown feature type {value!r}")
            decl["ftype"] = value
        elif key == "parent":
            if not _NAME.match(value):
                raise SchemaError(f"{where}: invalid parent name {value!r}")
            decl["parent"] = value
        elif key == "file":
            files = tuple(v for v in value.split(",") if v)
            if not files:
                raise SchemaError(f"{where}: empty file list")
            decl["files"] = files
        else:
            raise SchemaError(f"{where}: unknown attribute {key!r}")
    if decl["ftype"] is None:
        raise SchemaError(f"{where}: feature {name!r} is missing type=")
    if decl["files"] is None:
        raise SchemaError(f"{where}: feature {name!r} is missing file=")
    return decl


def _parse_constraint_line(rest: str, where: str) -> tuple[str | None, Expr]:
    rest = rest.strip()
    owner = None
    if rest.startswith("of="):
        owner_word, _, rest = rest.partition(" ")
        owner = owner_word[3:]
        if not _NAME.match(owner):
            raise SchemaError(f"{where}: invalid constraint owner {owner!r}")
    if not rest.strip():
        raise SchemaError(f"{where}: constraint without an expression")
    return owner, parse_constraint(rest, where)


def _check_acyclic(declared: dict[str, dict]) -> None:
    state: dict[str, int] = {}  # 0 visiting, 1 done
    for start in declared:
        if state.get(start) == 1:
            continue
        chain = []
        node: str | None = start
        while node is not None and state.get(node) != 1:
            if state.get(node) == 0:
                cycle = chain[chain.index(node):] + [node]
                raise CyclicHierarchyError("cycle: " + " -> ".join(cycle))
            state[node] = 0
            chain.append(node)
            node = declared[node]["parent"]
        for name in chain:
            state[name] = 1


@dataclass(frozen=True)
class BuildRule:
    pattern: str
    expr: Expr
    regex: re.Pattern = field(compare=False)


@dataclass
class BuildModel:
    rules: tuple[BuildRule, ...] = ()

    def to_text(self) -> str:
        return "".join(f"{r.pattern} :: {render(r.expr)}\n" for r in self.rules)


def _glob_regex(pattern: str) -> re.Pattern:
    """Translate a glob into a full-match regex; ``**`` crosses slashes."""
    out = []
    i = 0
    while i < len(pattern):
        c = pattern[i]
        if c == "*":
            if pattern[i + 1 : i + 2] == "*":
                if pattern[i + 2 : i + 3] == "/":
                    out.append("(?:.*/)?")
                    i += 3
                else:
                    out.append(".*")
                    i += 2
            else:
                out.append("[^/]*")
                i += 1
        elif c == "?":
            out.append("[^/]")
            i += 1
        else:
            out.append(re.escape(c))
            i += 1
    return re.compile("".join(out) + r"\Z")


def load_build_model(path: Path) -> BuildModel:
    """Load an ordered first-match-wins build model file."""
    rules = []
    for ln, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        where = f"{path.name}:{ln}"
        pattern, sep, expr_text = line.partition("::")
        if not sep:
            raise SchemaError(f"{where}: expected '<glob> :: <expression>'")
        pattern = pattern.strip()
        if not pattern:
            raise SchemaError(f"{where}: empty glob pattern")
        expr = parse_constraint(expr_text.strip(), where)
        rules.append(BuildRule(pattern=pattern, expr=expr, regex=_glob_regex(pattern)))
    return BuildModel(rules=tuple(rules))


def file_presence(model: BuildModel | None, path: str) -> Expr:
    """Presence condition of a file per the build model (TRUE if unmatched)."""
    if model is None:
        return TRUE
    for rule in model.rules:
        if rule.regex.match(path):
            return rule.expr
    return TRUE
