"""Server-authoritative collaborative document with per-author attribution.

Documents are sequences of characters, each tagged with the author that
inserted it. Edits are retain/insert/delete operations against a
specific base revision; concurrent edits are merged with operational
transformation. Author id 0 is reserved for the system injector, whose
appends move the injection cursor.
"""

from __future__ import annotations

from dataclasses import dataclass

SYSTEM_AUTHOR = 0


class RevisionMismatch(ValueError):
    pass


class SpanOverflow(ValueError):
    pass


class MalformedOp(ValueError):
    pass


@dataclass(frozen=True)
class Retain:
    n: int


@dataclass(frozen=True)
class Insert:
    text: str
    author: int


@dataclass(frozen=True)
class Delete:
    n: int


Component = Retain | Insert | Delete


@dataclass(frozen=True)
class EditOp:
    base_revision: int
    components: tuple[Component, ...]

    @staticmethod
    def build(base_revision: int, components) -> "EditOp":
        """Normalize: drop empties, merge adjacent same-kind components,
        and order inserts before adjacent deletes (canonical form)."""
        merged: list[Component] = []
        for c in components:
            if isinstance(c, Retain) and c.n == 0:
                continue
            if isinstance(c, Delete) and c.n == 0:
                continue
            if isinstance(c, Insert) and not c.text:
                continue
            if merged and isinstance(c, Insert) and isinstance(merged[-1], Delete):
                merged[-1], c = c, merged[-1]
                if len(merged) >= 2 and isinstance(merged[-2], Insert) \
                        and merged[-2].author == merged[-1].author:
                    merged[-2] = Insert(merged[-2].text + merged[-1].text,
                                        merged[-1].author)
                    merged.pop()
            if merged:
                last = merged[-1]
                if isinstance(c, Retain) and isinstance(last, Retain):
                    merged[-1] = Retain(last.n + c.n)
                    continue
                if isinstance(c, Delete) and isinstance(last, Delete):
                    merged[-1] = Delete(last.n + c.n)
                    continue
                if (isinstance(c, Insert) and isinstance(last, Insert)
                        and c.author == last.author):
                    merged[-1] = Insert(last.text + c.text, c.author)
                    continue
            merged.append(c)
        return EditOp(base_revision, tuple(merged))

    @property
    def base_length(self) -> int:
        return sum(c.n for c in self.components if isinstance(c, (Retain, Delete)))

    @property
    def result_length(self) -> int:
        n = 0
        for c in self.components:
            if isinstance(c, Retain):
                n += c.n
            elif isinstance(c, Insert):
                n += len(c.text)
        return n

    def authors(self) -> set[int]:
        return {c.author for c in self.components if isinstance(c, Insert)}

    def to_json(self) -> list:
        out = []
        for c in self.components:
            if isinstance(c, Retain):
                out.append({"retain": c.n})
            elif isinstance(c, Insert):
                out.append({"insert": c.text, "author": c.author})
            else:
                out.append({"delete": c.n})
        return out

    @staticmethod
    def from_json(base_revision: int, items: list) -> "EditOp":
        comps: list[Component] = []
        for item in items:
            if not isinstance(item, dict):
                raise MalformedOp(f"bad component: {item!r}")
            if "retain" in item:
                comps.append(Retain(int(item["retain"])))
            elif "insert" in item:
                comps.append(Insert(str(item["insert"]), int(item.get("author", 0))))
            elif "delete" in item:
                comps.append(Delete(int(item["delete"])))
            else:
                raise MalformedOp(f"bad component: {item!r}")
        for c in comps:
            if isinstance(c, (Retain, Delete)) and c.n < 0:
                raise MalformedOp("negative span")
        return EditOp.build(base_revision, comps)


def identity_op(doc: "AttributedDoc") -> EditOp:
    return EditOp.build(doc.revision, [Retain(len(doc.content))])


@dataclass
class AttributedDoc:
    """Shared document; authors[i] is the author id of content[i].

    Author ids live in 0..255 so attribution packs into bytes; id 0 is
    the system injector.
    """
    content: str = ""
    authors: bytes = b""
    revision: int = 0
    injection_cursor: int = 0

    def author_at(self, index: int) -> int:
        return self.authors[index]


def apply(doc: AttributedDoc, op: EditOp) -> AttributedDoc:
    if op.base_revision != doc.revision:
        raise RevisionMismatch(
            f"op at revision {op.base_revision}, doc at {doc.revision}")
    if op.base_length != len(doc.content):
        raise SpanOverflow(
            f"op spans {op.base_length} chars, doc has {len(doc.content)}")
    parts: list[str] = []
    author_parts: list[bytes] = []
    pos = 0  # position in the old document
    for c in op.components:
        if isinstance(c, Retain):
            parts.append(doc.content[pos:pos + c.n])
            author_parts.append(doc.authors[pos:pos + c.n])
            pos += c.n
        elif isinstance(c, Insert):
            parts.append(c.text)
            author_parts.append(bytes([c.author]) * len(c.text))
        else:
            pos += c.n
    # Right bias: an insert exactly at the cursor (a correction of the
    # latest word) stays before subsequent injections.
    cursor = transform_position(doc.injection_cursor, op, bias_right=True)
    return AttributedDoc(
        content="".join(parts),
        authors=b"".join(author_parts),
        revision=doc.revision + 1,
        injection_cursor=cursor,
    )


def transform(a: EditOp, b: EditOp) -> tuple[EditOp, EditOp]:
    """Transform two concurrent ops so either application order converges.

    apply(apply(d, a), b') == apply(apply(d, b), a'). Concurrent inserts
    at the same position are ordered by author id, lowest first; equal
    authors put a's insert first.
    """
    if a.base_revision != b.base_revision:
        raise RevisionMismatch("transform requires a common base revision")
    a_out: list[Component] = []
    b_out: list[Component] = []
    ca = list(a.components)
    cb = list(b.components)
    ia = ib = 0
    head_a: Component | None = None
    head_b: Component | None = None
    while True:
        if head_a is None and ia < len(ca):
            head_a = ca[ia]
            ia += 1
        if head_b is None and ib < len(cb):
            head_b = cb[ib]
            ib += 1
        if head_a is None and head_b is None:
            break
        # Inserts go first; they do not consume base characters.
        if isinstance(head_a, Insert) and isinstance(head_b, Insert):
            a_first = (head_a.author, 0) <= (head_b.author, 1)
            if a_first:
                a_out.append(head_a)
                b_out.append(Retain(len(head_a.text)))
                head_a = None
            else:
                a_out.append(Retain(len(head_b.text)))
                b_out.append(head_b)
                head_b = None
            continue
        if isinstance(head_a, Insert):
            a_out.append(head_a)
            b_out.append(Retain(len(head_a.text)))
            head_a = None
            continue
        if isinstance(head_b, Insert):
            a_out.append(Retain(len(head_b.text)))
            b_out.append(head_b)
            head_b = None
            continue
        if head_a is None or head_b is None:
            raise SpanOverflow("ops span different base lengths")
        n = min(head_a.n, head_b.n)
        if isinstance(head_a, Retain) and isinstance(head_b, Retain):
            a_out.append(Retain(n))
            b_out.append(Retain(n))
        elif isinstance(head_a, Delete) and isinstance(head_b, Retain):
            a_out.append(Delete(n))
        elif isinstance(head_a, Retain) and isinstance(head_b, Delete):
            b_out.append(Delete(n))
        # Delete/Delete: both already gone, neither emits anything.
        head_a = Retain(head_a.n - n) if isinstance(head_a, Retain) else Delete(head_a.n - n)
        head_b = Retain(head_b.n - n) if isinstance(head_b, Retain) else Delete(head_b.n - n)
        if head_a.n == 0:
            head_a = None
        if head_b.n == 0:
            head_b = None
    rev = a.base_revision + 1
    return (EditOp.build(rev, a_out), EditOp.build(rev, b_out))


def compose(first: EditOp, second: EditOp) -> EditOp:
    """Combine sequential ops: applying the result equals applying both."""
    if second.base_revision != first.base_revision + 1:
        raise RevisionMismatch("compose requires consecutive revisions")
    if first.result_length != second.base_length:
        raise SpanOverflow("second op does not span first op's result")
    out: list[Component] = []
    ia = ib = 0
    ca = list(first.components)
    cb = list(second.components)
    head_a: Component | None = None
    head_b: Component | None = None
    while True:
        if head_a is None and ia < len(ca):
            head_a = ca[ia]
            ia += 1
        if head_b is None and ib < len(cb):
            head_b = cb[ib]
            ib += 1
        if head_a is None and head_b is None:
            break
        if isinstance(head_a, Delete):
            out.append(head_a)
            head_a = None
            continue
        if head_b is not None and isinstance(head_b, Insert):
            out.append(head_b)
            head_b = None
            continue
        if head_a is None or head_b is None:
            raise SpanOverflow("ops do not align")
        # head_a is Retain or Insert; head_b is Retain or Delete.
        a_len = head_a.n if isinstance(head_a, Retain) else len(head_a.text)
        n = min(a_len, head_b.n)
        if isinstance(head_a, Retain) and isinstance(head_b, Retain):
            out.append(Retain(n))
        elif isinstance(head_a, Retain) and isinstance(head_b, Delete):
            out.append(Delete(n))
        elif isinstance(head_a, Insert) and isinstance(head_b, Retain):
            out.append(Insert(head_a.text[:n], head_a.author))
        # Insert then Delete cancels: emit nothing.
        if isinstance(head_a, Retain):
            head_a = Retain(head_a.n - n)
            if head_a.n == 0:
                head_a = None
        else:
            head_a = Insert(head_a.text[n:], head_a.author)
            if not head_a.text:
                head_a = None
        head_b = Retain(head_b.n - n) if isinstance(head_b, Retain) else Delete(head_b.n - n)
        if head_b.n == 0:
            head_b = None
    return EditOp.build(first.base_revision, out)


def inject_word(doc: AttributedDoc, word_text: str) -> EditOp:
    """Op appending the next system word at the injection cursor."""
    if not word_text:
        raise MalformedOp("cannot inject an empty word")
    cursor = doc.injection_cursor
    separator = "" if cursor == 0 or doc.content[cursor - 1] in " \n" else " "
    return EditOp.build(doc.revision, [
        Retain(cursor),
        Insert(separator + word_text, SYSTEM_AUTHOR),
        Retain(len(doc.content) - cursor),
    ])


def transform_position(pos: int, op: EditOp, bias_right: bool = False) -> int:
    """Map a document position through an op.

    With bias_right, an insert exactly at the position pushes it right.
    """
    out = pos
    base = 0
    for c in op.components:
        if isinstance(c, Retain):
            base += c.n
        elif isinstance(c, Insert):
            if base < pos or (base == pos and bias_right):
                out += len(c.text)
        else:
            if base < pos:
                out -= min(c.n, pos - base)
            base += c.n
        if base > pos:
            break
    return out
