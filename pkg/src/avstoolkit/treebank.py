"""Reading and traversing bracketed constituency trees.

Trees arrive as Penn-Treebank style bracketed text, one sentence per
line, as emitted by off-the-shelf constituency parsers.  This module
parses that text into an immutable `Node` tree, serializes trees back to
a canonical single-space form, and provides the traversal primitives the
concept-extraction layer is built on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Optional, Union

__all__ = [
    "Node",
    "ParseTree",
    "TreeSource",
    "TreeFormatError",
    "UnbalancedParens",
    "EmptyNode",
    "TrailingGarbage",
    "parse_bracketed",
    "to_bracketed",
    "yield_tokens",
    "walk_nodes",
    "read_trees_jsonl",
    "write_trees_jsonl",
]

# Escapes used by PTB-style parsers for literal parentheses in tokens.
_TOKEN_DECODE = {"-LRB-": "(", "-RRB-": ")"}
_TOKEN_ENCODE = {"(": "-LRB-", ")": "-RRB-"}


class TreeFormatError(ValueError):
    """Malformed bracketed-tree text."""

    def __init__(self, message: str, position: Optional[int] = None):
        if position is not None:
            message = f"{message} (offset {position})"
        super().__init__(message)
        self.position = position


class UnbalancedParens(TreeFormatError):
    """An opening parenthesis was never closed, or a stray ')' appeared."""


class EmptyNode(TreeFormatError):
    """A '()' pair, a node with no label, or a labeled node with no content."""


class TrailingGarbage(TreeFormatError):
    """Input continues after the first complete tree."""


@dataclass(frozen=True)
class Node:
    """One tree node: interior (children, no token) or leaf (token, no children)."""

    label: str
    children: tuple["Node", ...] = ()
    token: Optional[str] = None

    def __post_init__(self):
        if not self.label or any(c.isspace() or c in "()" for c in self.label):
            raise ValueError(f"invalid node label {self.label!r}")
        if (self.token is None) == (len(self.children) == 0):
            raise ValueError(
                f"node {self.label!r} must have either a token or children"
            )
        if self.token is not None:
            # only the bare parenthesis tokens may contain parens; they
            # round-trip through the -LRB-/-RRB- escapes
            if not self.token or any(c.isspace() for c in self.token):
                raise ValueError(f"invalid leaf token {self.token!r}")
            if any(c in "()" for c in self.token) and self.token not in ("(", ")"):
                raise ValueError(
                    f"leaf token {self.token!r} may not embed parentheses"
                )

    @property
    def is_leaf(self) -> bool:
        return self.token is not None


@dataclass(frozen=True)
class ParseTree:
    """Constituency tree of a single sentence."""

    root: Node


@dataclass(frozen=True)
class TreeSource:
    """A tree paired with its corpus sentence id and the raw bracketed text."""

    sentence_id: str
    raw: str
    tree: ParseTree


def _lex(text: str) -> list[tuple[str, str, int]]:
    """Split bracketed text into ('(' | ')' | 'atom', value, offset) tokens."""
    out = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "(" or c == ")":
            out.append((c, c, i))
            i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            out.append(("atom", text[i:j], i))
            i = j
    return out


def _strip_functional(label: str) -> str:
    # Interior labels like NP-SBJ or PP-LOC-2 collapse to the bare category.
    # Labels that themselves start with '-' (e.g. -LRB- as a tag) are kept.
    if "-" in label and not label.startswith("-"):
        return label.split("-", 1)[0]
    return label


def _parse_node(tokens: list[tuple[str, str, int]], i: int) -> tuple[Node, int]:
    open_pos = tokens[i][2]
    i += 1
    if i >= len(tokens):
        raise UnbalancedParens("unclosed '('", open_pos)
    kind, value, pos = tokens[i]
    if kind == ")":
        raise EmptyNode("empty '()' node", open_pos)
    if kind == "(":
        raise EmptyNode("node without a label", pos)
    label = value
    i += 1
    children: list[Node] = []
    token: Optional[str] = None
    while True:
        if i >= len(tokens):
            raise UnbalancedParens("unclosed '('", open_pos)
        kind, value, pos = tokens[i]
        if kind == ")":
            i += 1
            break
        if kind == "(":
            if token is not None:
                raise TreeFormatError(
                    f"node '{label}' mixes a token with subtrees", pos
                )
            child, i = _parse_node(tokens, i)
            children.append(child)
        else:
            if children:
                raise TreeFormatError(
                    f"node '{label}' mixes subtrees with a token", pos
                )
            if token is not None:
                raise TreeFormatError(
                    f"node '{label}' has more than one token", pos
                )
            token = _TOKEN_DECODE.get(value, value)
            i += 1
    if token is None and not children:
        raise EmptyNode(f"node '{label}' has no children and no token", open_pos)
    if children:
        label = _strip_functional(label)
    return Node(label=label, children=tuple(children), token=token), i


def parse_bracketed(text: str) -> ParseTree:
    """Parse one bracketed tree string into a ParseTree.

    Raises UnbalancedParens, EmptyNode or TrailingGarbage on malformed
    input.  `-LRB-`/`-RRB-` leaf tokens are decoded to literal parens;
    functional tags (`NP-SBJ`) are stripped from interior labels.
    """
    tokens = _lex(text)
    if not tokens:
        raise TreeFormatError("empty input; expected a bracketed tree")
    kind, _, pos = tokens[0]
    if kind == ")":
        raise UnbalancedParens("')' without matching '('", pos)
    if kind != "(":
        raise TreeFormatError("expected '(' at start of tree", pos)
    root, i = _parse_node(tokens, 0)
    if i != len(tokens):
        raise TrailingGarbage("text continues after complete tree", tokens[i][2])
    return ParseTree(root=root)


def to_bracketed(tree: Union[ParseTree, Node]) -> str:
    """Serialize to canonical bracketed text: single spaces, no indentation."""
    node = tree.root if isinstance(tree, ParseTree) else tree
    parts: list[str] = []
    _write_node(node, parts)
    return "".join(parts)


def _write_node(node: Node, parts: list[str]) -> None:
    if node.is_leaf:
        token = _TOKEN_ENCODE.get(node.token, node.token)
        parts.append(f"({node.label} {token})")
        return
    parts.append(f"({node.label}")
    for child in node.children:
        parts.append(" ")
        _write_node(child, parts)
    parts.append(")")


def yield_tokens(node: Union[ParseTree, Node]) -> list[str]:
    """Leaf tokens of the subtree in sentence order."""
    root = node.root if isinstance(node, ParseTree) else node
    out: list[str] = []
    stack = [root]
    while stack:
        n = stack.pop()
        if n.is_leaf:
            out.append(n.token)
        else:
            stack.extend(reversed(n.children))
    return out


def walk_nodes(tree: Union[ParseTree, Node]) -> Iterator[Node]:
    """Pre-order iterator: parent before children, children left to right."""
    root = tree.root if isinstance(tree, ParseTree) else tree
    stack = [root]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.children))


def read_trees_jsonl(source: Union[str, IO[str]]) -> Iterator[TreeSource]:
    """Stream TreeSource records from a .trees.jsonl file.

    Each line is `{"id": ..., "tree": ...}`; ids must be unique within
    the file.  Errors carry the file name and line number.
    """
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            yield from _read_trees(fh, source)
    else:
        yield from _read_trees(source, getattr(source, "name", "<stream>"))


def _read_trees(fh: Iterable[str], name: str) -> Iterator[TreeSource]:
    seen: set[str] = set()
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{name}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(record, dict) or "id" not in record or "tree" not in record:
            raise ValueError(f"{name}:{lineno}: expected keys 'id' and 'tree'")
        sentence_id = str(record["id"])
        if sentence_id in seen:
            raise ValueError(f"{name}:{lineno}: duplicate sentence id {sentence_id!r}")
        seen.add(sentence_id)
        raw = str(record["tree"])
        try:
            tree = parse_bracketed(raw)
        except TreeFormatError as exc:
            raise ValueError(f"{name}:{lineno}: {exc}") from exc
        yield TreeSource(sentence_id=sentence_id, raw=raw, tree=tree)


def write_trees_jsonl(sources: Iterable[TreeSource], path: str) -> None:
    """Write TreeSource records as newline-delimited JSON."""
    with open(path, "w", encoding="utf-8") as fh:
        for src in sources:
            fh.write(json.dumps({"id": src.sentence_id, "tree": src.raw}))
            fh.write("\n")
