"""Shared fixtures and a seeded random source generator for the tests."""

from __future__ import annotations

import random
from pathlib import Path

from varmetrics.extractor import Corpus, extract_file

# one function whose only statement sits behind one conditional block
GUARDED_IF = """void func() {
#ifdef A
  if (a_condition) {
    a_statement;
  }
#endif
}
"""

GUARDED_IF_MODEL = """feature A type=bool file=model/root.fm
"""


def corpus_from(sources: dict[str, str]) -> Corpus:
    return Corpus(
        files={path: extract_file(path, sources[path]) for path in sorted(sources)}
    )


def write_tree(root: Path, sources: dict[str, str]) -> None:
    for rel, text in sources.items():
        target = root / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")


class SourceGenerator:
    """Emits random but well-formed annotated C-like sources.

    Bounded by a statement budget per function; conditions draw from a
    fixed feature alphabet so corpora stay within eight features.
    """

    def __init__(self, rng: random.Random, features: list[str] | None = None):
        self.rng = rng
        self.features = features or ["F1", "F2", "F3", "F4", "F5", "F6", "F7", "F8"]
        self.counter = 0

    def fresh(self, prefix: str) -> str:
        self.counter += 1
        return f"{prefix}{self.counter}"

    def condition(self) -> str:
        r = self.rng
        pick = r.random()
        a = r.choice(self.features)
        b = r.choice(self.features)
        if pick < 0.35:
            return a
        if pick < 0.5:
            return f"defined({a})"
        if pick < 0.62:
            return f"!{a}"
        if pick < 0.74:
            return f"{a} && {b}"
        if pick < 0.86:
            return f"{a} || {b}"
        if pick < 0.93:
            return f"({a} || {b}) && !{r.choice(self.features)}"
        return f"{a} > {r.randint(0, 4)}"

    def statements(self, budget: int, depth: int, callables: list[str]) -> list[str]:
        """Random statement block consuming at most *budget* units."""
        r = self.rng
        lines: list[str] = []
        while budget > 0:
            pick = r.random()
            if pick < 0.40 or depth >= 3:
                if callables and r.random() < 0.4:
                    lines.append(f"{r.choice(callables)}();")
                else:
                    lines.append(f"{self.fresh('v')} = {r.randint(0, 99)};")
                budget -= 1
            elif pick < 0.55 and budget >= 2:
                inner = self.statements(min(budget - 1, r.randint(1, 3)), depth + 1, callables)
                used = 1 + _unit_count(inner)
                lines.append(f"if ({self.fresh('c')} > 0) {{")
                lines.extend("  " + s for s in inner)
                lines.append("}")
                if r.random() < 0.4:
                    tail = self.statements(1, depth + 1, callables)
                    lines.append("else {")
                    lines.extend("  " + s for s in tail)
                    lines.append("}")
                    used += _unit_count(tail) + 1  # the else header is a unit too
                budget -= used
            elif pick < 0.68 and budget >= 2:
                kind = r.choice(["while", "for", "do"])
                inner = self.statements(min(budget - 1, r.randint(1, 2)), depth + 1, callables)
                if kind == "while":
                    lines.append(f"while ({self.fresh('c')}) {{")
                    lines.extend("  " + s for s in inner)
                    lines.append("}")
                elif kind == "for":
                    lines.append("for (i = 0; i < 4; i++) {")
                    lines.extend("  " + s for s in inner)
                    lines.append("}")
                else:
                    lines.append("do {")
                    lines.extend("  " + s for s in inner)
                    lines.append(f"}} while ({self.fresh('c')});")
                budget -= 1 + _unit_count(inner)
            elif pick < 0.78 and budget >= 3:
                labels = r.randint(1, 2)
                lines.append(f"switch ({self.fresh('s')}) {{")
                used = 1
                for i in range(labels):
                    lines.append(f"  case {i}:")
                    body = self.statements(1, depth + 1, callables)
                    lines.extend("    " + s for s in body)
                    lines.append("    break;")
                    used += 1 + _unit_count(body) + 1
                lines.append("}")
                budget -= used
            else:
                inner = self.statements(min(budget, r.randint(1, 3)), depth + 1, callables)
                used = _unit_count(inner)
                chain = [f"#if {self.condition()}"]
                chain.extend(inner)
                if r.random() < 0.35:
                    alt = self.statements(1, depth + 1, callables)
                    chain.append(f"#elif {self.condition()}")
                    chain.extend(alt)
                    used += _unit_count(alt)
                if r.random() < 0.35:
                    alt = self.statements(1, depth + 1, callables)
                    chain.append("#else")
                    chain.extend(alt)
                    used += _unit_count(alt)
                chain.append("#endif")
                lines.extend(chain)
                budget -= max(used, 1)
        return lines

    def function(self, name: str, callables: list[str], max_units: int = 12) -> list[str]:
        r = self.rng
        body = self.statements(r.randint(0, max_units), 0, callables)
        lines = [f"int {name}(int arg) {{"]
        lines.extend("  " + s for s in body)
        lines.append("}")
        if r.random() < 0.25:
            guard = self.condition()
            return [f"#if {guard}"] + lines + ["#endif"]
        return lines

    def file(self, fn_names: list[str], callables: list[str]) -> str:
        lines: list[str] = ["/* generated fixture */"]
        if self.rng.random() < 0.5:
            lines.append("#include <stub.h>")
        for name in fn_names:
            lines.extend(self.function(name, callables))
            lines.append("")
        if self.rng.random() < 0.3:
            lines.append(f"int tail{self.counter} = 0;")
        return "\n".join(lines) + "\n"


def _unit_count(lines: list[str]) -> int:
    # statement units the generated lines will parse into
    count = 0
    for line in lines:
        stripped = line.strip()
        if stripped.endswith(";") and not stripped.startswith("}"):
            count += 1
        if stripped.startswith(("if ", "while ", "for ", "switch ", "do", "else", "case ")):
            count += 1
    return count


def random_sources(seed: int, max_files: int = 3) -> dict[str, str]:
    """A deterministic corpus of annotated sources for the given seed."""
    rng = random.Random(seed)
    gen = SourceGenerator(rng)
    n_files = rng.randint(1, max_files)
    all_names = [f"fn_{seed % 1000}_{i}" for i in range(n_files * 2)]
    sources = {}
    for i in range(n_files):
        names = all_names[2 * i : 2 * i + 2]
        dirname = rng.choice(["core", "drivers/net", "drivers"])
        sources[f"{dirname}/gen{i}.c"] = gen.file(names, all_names)
    return sources


def random_corpus(seed: int, max_files: int = 3) -> Corpus:
    return corpus_from(random_sources(seed, max_files))
