"""Reader turning C-like annotated source files into code trees.

Structure is recovered from braces and semicolons, conditional
compilation from directive lines; no attempt is made at grammar-correct
C. The reader is a single pass over sanitized text: comments and
string/char literal contents are blanked first (newlines kept) so that
braces, semicolons and ``#`` inside them cannot confuse the scanner.

Conditional blocks must nest consistently with brace structure, with
one relaxation: a directive group opening and closing inside one
statement becomes part of that statement's code fragments, and a
statement terminator inside such a group splits the statement at the
group boundary. Groups that cross brace boundaries are an error.
"""

from __future__ import annotations

import concurrent.futures
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    BraceMismatchError,
    ConfigError,
    EmptyCorpusError,
    UnbalancedDirectiveError,
    UndecodableTextError,
)
from .formula import TRUE, Atom, Expr, Not, conjoin, parse_condition
from .nodes import (
    BranchStatement,
    CaseLabel,
    CodeNode,
    CppBlock,
    Function,
    LoopStatement,
    SingleStatement,
    SourceFile,
    UnparsedCode,
)

DEFAULT_GLOBS = ("**/*.c", "**/*.h")

_HASH_LINE = re.compile(r"^\s*#\s*([A-Za-z]*)(.*)$")
_CODE_TOKEN = re.compile(r"[A-Za-z_]\w*|\d[\w.]*|\S")
_IDENT = re.compile(r"[A-Za-z_]\w*\Z")

_HEADER_KEYWORDS = frozenset({"if", "while", "for", "switch"})


@dataclass(frozen=True)
class ExtractionConfig:
    source_tree: Path
    file_globs: tuple[str, ...] = DEFAULT_GLOBS
    parse_threads: int = 1

    def validate(self) -> None:
        if not self.source_tree.is_dir():
            raise ConfigError(f"source_tree is not a directory: {self.source_tree}")
        if self.parse_threads < 1:
            raise ConfigError("parse_threads must be >= 1")


@dataclass
class Corpus:
    """Parsed files keyed by relative path, plus per-file failures."""

    files: dict[str, SourceFile]
    diagnostics: list[str] = field(default_factory=list)


def _sanitize(text: str) -> str:
    """Blank comments and literal contents; keep newlines and offsets."""
    out = list(text)
    n = len(text)
    i = 0
    while i < n:
        c = text[i]
        if c == "/" and i + 1 < n and text[i + 1] == "/":
            while i < n and text[i] != "\n":
                # a line comment ending in a backslash swallows the next line
                if text[i] == "\\" and i + 1 < n and text[i + 1] == "\n":
                    out[i] = " "
                    i += 2
                    continue
                out[i] = " "
                i += 1
        elif c == "/" and i + 1 < n and text[i + 1] == "*":
            out[i] = out[i + 1] = " "
            i += 2
            while i < n:
                if text[i] == "*" and i + 1 < n and text[i + 1] == "/":
                    out[i] = out[i + 1] = " "
                    i += 2
                    break
                if text[i] != "\n":
                    out[i] = " "
                i += 1
        elif c == '"' or c == "'":
            quote = c
            out[i] = " "
            i += 1
            while i < n:
                if text[i] == "\\" and i + 1 < n:
                    out[i] = " "
                    if text[i + 1] != "\n":
                        out[i + 1] = " "
                    i += 2
                    continue
                if text[i] == quote:
                    out[i] = " "
                    i += 1
                    break
                if text[i] == "\n":
                    break  # unterminated on this line; do not eat the file
                out[i] = " "
                i += 1
        elif c == "\r":
            out[i] = " "
            i += 1
        else:
            i += 1
    return "".join(out)


class _Group:
    """Shared state of one #if/#elif/#else chain."""

    __slots__ = ("gid", "raws", "saw_else")

    def __init__(self, gid: int):
        self.gid = gid
        self.raws: list[Expr] = []
        self.saw_else = False


class _Frame:
    __slots__ = (
        "kind", "subkind", "start_line", "children", "header", "braceless",
        "directive", "raw", "cond", "group", "sibling_index", "in_text",
        "buf", "buf_start", "buf_end",
    )

    def __init__(self, kind: str, start_line: int):
        self.kind = kind              # file|function|branch|loop|block|cpp
        self.subkind = ""
        self.start_line = start_line
        self.children: list[CodeNode] = []
        self.header = ""
        self.braceless = False
        self.directive = ""
        self.raw: Expr = TRUE
        self.cond: Expr = TRUE
        self.group: _Group | None = None
        self.sibling_index = 0
        self.in_text = False          # cpp block opened inside a statement
        self.buf: list[str] = []      # unparsed tokens while in_text
        self.buf_start = 0
        self.buf_end = 0


class _Pending:
    """A statement or control header under construction."""

    __slots__ = (
        "kind", "start_line", "last_line", "parts", "fragments",
        "paren", "brace", "parens_closed",
    )

    def __init__(self, kind: str | None, start_line: int):
        self.kind = kind              # None|if|else-if|while|for|switch|case
        self.start_line = start_line
        self.last_line = start_line
        self.parts: list[str] = []
        self.fragments: list[CodeNode] = []
        self.paren = 0
        self.brace = 0
        self.parens_closed = False

    @property
    def text(self) -> str:
        return " ".join(self.parts)


class _DoTrailer:
    """Frame of a finished ``do`` body waiting for its while clause."""

    __slots__ = ("frame", "body_end", "state", "parts", "paren")

    def __init__(self, frame: _Frame, body_end: int):
        self.frame = frame
        self.body_end = body_end
        self.state = 0  # 0: expect 'while'; 1: consuming up to ';'
        self.parts: list[str] = []
        self.paren = 0


class _FileParser:
    def __init__(self, path: str, text: str):
        self.path = path
        self.lines = _sanitize(text).split("\n")
        if self.lines and self.lines[-1] == "":
            self.lines.pop()
        self.line_count = max(1, len(self.lines))
        self.frames: list[_Frame] = [_Frame("file", 1)]
        self.pending: _Pending | None = None
        self.after_else: int | None = None
        self.after_do: int | None = None
        self.do_trailer: _DoTrailer | None = None
        self.next_group = 0

    # -- driving -----------------------------------------------------------

    def run(self) -> SourceFile:
        i = 0
        while i < len(self.lines):
            line = self.lines[i]
            m = _HASH_LINE.match(line)
            if m:
                body = line
                start = i
                while body.rstrip().endswith("\\") and i + 1 < len(self.lines):
                    i += 1
                    body = body.rstrip()[:-1] + " " + self.lines[i]
                bm = _HASH_LINE.match(body)
                assert bm is not None
                self._handle_directive(bm.group(1), bm.group(2), start + 1)
            else:
                ln = i + 1
                for tok in _CODE_TOKEN.findall(line):
                    self._feed(tok, ln)
            i += 1
        return self._finish()

    def _finish(self) -> SourceFile:
        last = self.line_count
        if self.do_trailer is not None:
            self._finalize_do(self.do_trailer, last)
            self.do_trailer = None
        if self.pending is not None:
            if self._has_in_text() is not None:
                self._promote(last)
            if self.pending is not None and (self.pending.parts or self.pending.fragments):
                self._emit_statement(last)
            self.pending = None
        while len(self.frames) > 1:
            top = self.frames[-1]
            if top.kind == "cpp":
                raise UnbalancedDirectiveError(
                    f"conditional opened at line {top.start_line} is never closed",
                    top.start_line,
                )
            if top.braceless:
                # a dangling braceless body never got its statement
                self.frames.pop()
                node = self._finish_structural(top, last)
                if node is not None:
                    self._attach(node)
                continue
            raise BraceMismatchError(
                f"'{{' opened at line {top.start_line} is never closed",
                top.start_line,
            )
        root = self.frames[0]
        return SourceFile(
            start_line=1,
            end_line=self.line_count,
            children=tuple(root.children),
            path=self.path,
        )

    # -- token handling ------------------------------------------------------

    def _feed(self, tok: str, ln: int) -> None:
        if self.do_trailer is not None:
            if self._feed_do_trailer(tok, ln):
                return
        if self.after_else is not None:
            start = self.after_else
            self.after_else = None
            if tok == "if":
                self.pending = _Pending("else-if", start)
                self.pending.parts = ["else", "if"]
                return
            frame = self._push_control("branch", "else", "else", start)
            if tok == "{":
                return
            frame.braceless = True
            self._feed(tok, ln)
            return
        if self.after_do is not None:
            start = self.after_do
            self.after_do = None
            frame = self._push_control("loop", "do-while", "do", start)
            if tok == "{":
                return
            frame.braceless = True
            self._feed(tok, ln)
            return

        top = self.frames[-1]
        if top.kind == "cpp" and top.in_text:
            self._feed_in_text(top, tok, ln)
            return

        if self.pending is None:
            self._feed_fresh(tok, ln)
        else:
            self._feed_pending(tok, ln)

    def _feed_fresh(self, tok: str, ln: int) -> None:
        if tok == "{":
            self.frames.append(_Frame("block", ln))
            return
        if tok == "}":
            self._close_brace(ln)
            return
        if tok == ";":
            # empty statement; it still satisfies a braceless body
            top = self.frames[-1]
            if top.braceless:
                self.frames.pop()
                node = self._finish_structural(top, ln)
                if node is not None:
                    self._attach(node)
            return
        if tok == "else":
            self.after_else = ln
            return
        if tok == "do":
            self.after_do = ln
            return
        if tok == "case":
            self.pending = _Pending("case", ln)
            self.pending.parts = ["case"]
            return
        if tok in _HEADER_KEYWORDS:
            self.pending = _Pending(tok, ln)
            self.pending.parts = [tok]
            return
        self.pending = _Pending(None, ln)
        self.pending.parts = [tok]

    def _feed_pending(self, tok: str, ln: int) -> None:
        p = self.pending
        assert p is not None

        if (p.kind in _HEADER_KEYWORDS or p.kind == "else-if") and p.parens_closed:
            # header complete: `{` opens the body, anything else is braceless
            frame = self._control_from_pending(p, braceless=(tok != "{"))
            self.pending = None
            if tok == "{":
                return
            if tok == ";":
                self.frames.pop()
                node = self._finish_structural(frame, ln)
                if node is not None:
                    self._attach(node)
                return
            self._feed(tok, ln)
            return

        p.last_line = ln
        if tok == "(":
            p.paren += 1
            p.parts.append(tok)
            return
        if tok == ")":
            p.paren -= 1
            p.parts.append(tok)
            if (p.kind in _HEADER_KEYWORDS or p.kind == "else-if") and p.paren == 0:
                p.parens_closed = True
            return
        if tok == ";" and p.paren == 0 and p.brace == 0:
            self._emit_statement(ln)
            return
        if tok == ":" and p.kind == "case" and p.paren == 0:
            node = CaseLabel(start_line=p.start_line, end_line=ln, header=p.text)
            self.pending = None
            self._attach(node)
            return
        if tok == "{" and p.paren == 0:
            if (
                p.kind is None
                and p.brace == 0
                and p.parts
                and p.parts[-1] == ")"
                and self._at_file_level()
            ):
                name = _function_name(p.parts)
                if name is not None:
                    frame = _Frame("function", p.start_line)
                    frame.subkind = name
                    frame.header = p.text
                    frame.children.extend(p.fragments)
                    self.pending = None
                    self.frames.append(frame)
                    return
            p.brace += 1
            p.parts.append(tok)
            return
        if tok == "}" and p.paren == 0:
            if p.brace > 0:
                p.brace -= 1
                p.parts.append(tok)
                return
            if p.parts or p.fragments:
                self._emit_statement(ln)
            else:
                self.pending = None
            self._close_brace(ln)
            return
        p.parts.append(tok)

    def _feed_in_text(self, top: _Frame, tok: str, ln: int) -> None:
        p = self.pending
        assert p is not None
        if tok == ";" and p.paren == 0 and p.brace == 0:
            self._promote(ln)
            self._feed(tok, ln)
            return
        if tok == "}" and p.paren == 0 and p.brace == 0:
            self._promote(ln)
            self._feed(tok, ln)
            return
        if tok == "(":
            p.paren += 1
        elif tok == ")":
            p.paren -= 1
        elif tok == "{":
            p.brace += 1
        elif tok == "}":
            p.brace -= 1
        if not top.buf:
            top.buf_start = ln
        top.buf.append(tok)
        top.buf_end = ln

    def _feed_do_trailer(self, tok: str, ln: int) -> bool:
        t = self.do_trailer
        assert t is not None
        if t.state == 0:
            if tok == "while":
                t.state = 1
                t.parts.append(tok)
                return True
            self._finalize_do(t, t.body_end)
            self.do_trailer = None
            return False
        t.parts.append(tok)
        if tok == "(":
            t.paren += 1
        elif tok == ")":
            t.paren -= 1
        elif tok == ";" and t.paren == 0:
            self._finalize_do(t, ln)
            self.do_trailer = None
        return True

    # -- statements and frames -----------------------------------------------

    def _flush_pending_text(self) -> None:
        p = self.pending
        assert p is not None
        if p.parts:
            start = p.start_line if not p.fragments else p.fragments[-1].end_line
            p.fragments.append(
                UnparsedCode(start_line=start, end_line=p.last_line, text=p.text)
            )
            p.parts = []

    def _emit_statement(self, end_ln: int) -> None:
        p = self.pending
        assert p is not None
        if p.parts:
            start = p.start_line if not p.fragments else p.fragments[-1].end_line
            p.fragments.append(
                UnparsedCode(start_line=start, end_line=end_ln, text=p.text)
            )
        self.pending = None
        if not p.fragments:
            return
        node = SingleStatement(
            start_line=p.start_line,
            end_line=end_ln,
            children=tuple(p.fragments),
        )
        self._attach(node)

    def _push_control(self, kind: str, subkind: str, header: str, start: int) -> _Frame:
        frame = _Frame(kind, start)
        frame.subkind = subkind
        frame.header = header
        self.frames.append(frame)
        return frame

    def _control_from_pending(self, p: _Pending, braceless: bool) -> _Frame:
        kinds = {
            "if": ("branch", "if"),
            "else-if": ("branch", "else-if"),
            "switch": ("branch", "switch"),
            "while": ("loop", "while"),
            "for": ("loop", "for"),
        }
        kind, subkind = kinds[p.kind or "if"]
        frame = _Frame(kind, p.start_line)
        frame.subkind = subkind
        frame.header = p.text
        frame.braceless = braceless
        frame.children.extend(p.fragments)
        self.frames.append(frame)
        return frame

    def _finish_structural(self, frame: _Frame, end_ln: int) -> CodeNode | None:
        if frame.kind == "function":
            return Function(
                start_line=frame.start_line,
                end_line=end_ln,
                children=tuple(frame.children),
                name=frame.subkind,
                file=self.path,
                header=frame.header,
            )
        if frame.kind == "branch":
            return BranchStatement(
                start_line=frame.start_line,
                end_line=end_ln,
                children=tuple(frame.children),
                branch_kind=frame.subkind,
                header=frame.header,
            )
        if frame.kind == "loop":
            if frame.subkind == "do-while":
                self.do_trailer = _DoTrailer(frame, end_ln)
                return None
            return LoopStatement(
                start_line=frame.start_line,
                end_line=end_ln,
                children=tuple(frame.children),
                loop_kind=frame.subkind,
                header=frame.header,
            )
        raise AssertionError(frame.kind)

    def _finalize_do(self, t: _DoTrailer, end_ln: int) -> None:
        frame = t.frame
        header = frame.header
        if t.parts:
            header = header + " " + " ".join(t.parts)
        node = LoopStatement(
            start_line=frame.start_line,
            end_line=end_ln,
            children=tuple(frame.children),
            loop_kind="do-while",
            header=header,
        )
        self._attach(node)

    def _attach(self, node: CodeNode) -> None:
        while True:
            top = self.frames[-1]
            top.children.append(node)
            if top.braceless:
                self.frames.pop()
                done = self._finish_structural(top, node.end_line)
                if done is None:
                    return  # do-while body; the trailer resumes the cascade
                node = done
                continue
            return

    def _close_brace(self, ln: int) -> None:
        top = self.frames.pop()
        if top.kind == "file":
            raise BraceMismatchError("unexpected '}'", ln)
        if top.kind == "cpp":
            raise UnbalancedDirectiveError(
                f"conditional opened at line {top.start_line} crosses a '}}'", ln
            )
        if top.kind == "block":
            # bare compound blocks are transparent
            parent = self.frames[-1]
            parent.children.extend(top.children)
            if parent.braceless and top.children:
                self.frames.pop()
                node = self._finish_structural(parent, ln)
                if node is not None:
                    self._attach(node)
            return
        node = self._finish_structural(top, ln)
        if node is not None:
            self._attach(node)

    def _at_file_level(self) -> bool:
        for frame in reversed(self.frames):
            if frame.kind == "cpp":
                continue
            return frame.kind == "file"
        return False

    # -- directives ------------------------------------------------------------

    def _has_in_text(self) -> int | None:
        """Index of the outermost still-open in-statement block, if any."""
        found = None
        for idx in range(len(self.frames) - 1, -1, -1):
            f = self.frames[idx]
            if f.kind == "cpp" and f.in_text:
                found = idx
            else:
                break
        return found

    def _promote(self, ln: int) -> None:
        """Split a statement at the boundary of still-open in-text blocks."""
        k = self._has_in_text()
        assert k is not None
        p = self.pending
        assert p is not None
        self._flush_pending_text()
        if p.fragments:
            home = self.frames[k - 1]
            home.children.append(
                SingleStatement(
                    start_line=p.start_line,
                    end_line=p.fragments[-1].end_line,
                    children=tuple(p.fragments),
                )
            )
        for f in self.frames[k:]:
            f.in_text = False
            if f.buf and f is not self.frames[-1]:
                f.children.append(
                    UnparsedCode(
                        start_line=f.buf_start, end_line=f.buf_end, text=" ".join(f.buf)
                    )
                )
                f.buf = []
        top = self.frames[-1]
        if top.buf:
            fresh = _Pending(None, top.buf_start)
            fresh.parts = list(top.buf)
            fresh.last_line = top.buf_end
            fresh.paren = p.paren
            fresh.brace = p.brace
            top.buf = []
            self.pending = fresh
        else:
            self.pending = None

    def _handle_directive(self, kw: str, rest: str, ln: int) -> None:
        if kw in ("if", "ifdef", "ifndef"):
            self._open_conditional(kw, rest, ln)
        elif kw == "elif":
            self._sibling_conditional("elif", rest, ln)
        elif kw == "else":
            self._sibling_conditional("else", "", ln)
        elif kw == "endif":
            self._close_conditional(ln)
        # include/define/undef/pragma/error/...: skipped, lines consumed

    def _raw_condition(self, kw: str, rest: str, ln: int) -> Expr:
        rest = rest.strip()
        if kw in ("if", "elif"):
            return parse_condition(rest)
        words = rest.split()
        name = words[0] if words else ""
        if not _IDENT.match(name):
            raise UnbalancedDirectiveError(f"#{kw} without a macro name", ln)
        atom = Atom(name)
        return Not(atom) if kw == "ifndef" else atom

    def _open_conditional(self, kw: str, rest: str, ln: int) -> None:
        raw = self._raw_condition(kw, rest, ln)
        group = _Group(self.next_group)
        self.next_group += 1
        group.raws.append(raw)
        frame = _Frame("cpp", ln)
        frame.directive = kw
        frame.raw = raw
        frame.cond = raw
        frame.group = group
        top = self.frames[-1]
        if top.kind == "cpp" and top.in_text:
            if top.buf:
                top.children.append(
                    UnparsedCode(
                        start_line=top.buf_start,
                        end_line=top.buf_end,
                        text=" ".join(top.buf),
                    )
                )
                top.buf = []
            frame.in_text = True
        elif self.pending is not None:
            self._flush_pending_text()
            frame.in_text = True
        self.frames.append(frame)

    def _require_cpp_top(self, kw: str, ln: int) -> None:
        top = self.frames[-1]
        if top.kind == "cpp":
            return
        for frame in self.frames:
            if frame.kind == "cpp":
                raise UnbalancedDirectiveError(
                    f"#{kw} for the conditional opened at line {frame.start_line}"
                    " interleaves with brace structure",
                    ln,
                )
        raise UnbalancedDirectiveError(f"#{kw} without an open conditional", ln)

    def _sibling_conditional(self, kw: str, rest: str, ln: int) -> None:
        self._require_cpp_top(kw, ln)
        top = self.frames[-1]
        group = top.group
        assert group is not None
        if group.saw_else:
            raise UnbalancedDirectiveError(f"#{kw} after #else in the same group", ln)
        was_in_text = top.in_text
        next_index = top.sibling_index + 1
        self._pop_conditional(ln)
        negations = [Not(r) for r in group.raws]
        if kw == "elif":
            raw = self._raw_condition("elif", rest, ln)
            cond = conjoin(negations + [raw])
            group.raws.append(raw)
        else:
            raw = TRUE
            cond = conjoin(negations)
            group.saw_else = True
        frame = _Frame("cpp", ln)
        frame.directive = kw
        frame.raw = raw
        frame.cond = cond
        frame.group = group
        frame.sibling_index = next_index
        frame.in_text = was_in_text
        self.frames.append(frame)

    def _pop_conditional(self, end_ln: int) -> None:
        top = self.frames.pop()
        if top.buf:
            top.children.append(
                UnparsedCode(
                    start_line=top.buf_start, end_line=top.buf_end, text=" ".join(top.buf)
                )
            )
            top.buf = []
        node = CppBlock(
            start_line=top.start_line,
            end_line=end_ln,
            children=tuple(top.children),
            directive=top.directive,
            condition=top.cond,
            raw_condition=top.raw,
            group_id=top.group.gid if top.group else 0,
            sibling_index=top.sibling_index,
        )
        if top.in_text:
            new_top = self.frames[-1]
            if new_top.kind == "cpp" and new_top.in_text:
                new_top.children.append(node)
            else:
                assert self.pending is not None
                self.pending.fragments.append(node)
        else:
            self._attach(node)

    def _close_conditional(self, ln: int) -> None:
        self._require_cpp_top("endif", ln)
        self._pop_conditional(ln)


def _function_name(parts: list[str]) -> str | None:
    for idx, tok in enumerate(parts):
        if tok == "(":
            if idx > 0 and _IDENT.match(parts[idx - 1]):
                return parts[idx - 1]
            return None
    return None


def extract_file(path: str, text: str) -> SourceFile:
    """Parse one file's text into a SourceFile tree."""
    return _FileParser(path, text).run()


def _decode(data: bytes, path: str) -> str:
    if b"\x00" in data:
        raise UndecodableTextError(f"{path}: binary content")
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        return data.decode("latin-1")


def extract_tree(config: ExtractionConfig) -> Corpus:
    """Parse every matching file under the source tree.

    Files that fail to parse are reported in the corpus diagnostics and
    excluded; they never abort the run. The result does not depend on
    the thread count.
    """
    config.validate()
    root = config.source_tree
    paths: set[Path] = set()
    for pattern in config.file_globs:
        paths.update(p for p in root.glob(pattern) if p.is_file())
    ordered = sorted(p.relative_to(root).as_posix() for p in paths)
    if not ordered:
        raise EmptyCorpusError(
            f"no files matching {', '.join(config.file_globs)} under {root}"
        )

    def parse_one(rel: str):
        try:
            text = _decode((root / rel).read_bytes(), rel)
            return rel, extract_file(rel, text), None
        except Exception as exc:  # parse failures are isolated per file
            return rel, None, f"{rel}: {exc}"

    if config.parse_threads == 1:
        results = [parse_one(rel) for rel in ordered]
    else:
        with concurrent.futures.ThreadPoolExecutor(config.parse_threads) as pool:
            results = list(pool.map(parse_one, ordered))

    corpus = Corpus(files={})
    for rel, tree, error in results:
        if tree is not None:
            corpus.files[rel] = tree
        else:
            corpus.diagnostics.append(error)
    return corpus
