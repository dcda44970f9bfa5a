/**
 * Client-side operational transformation, mirroring the server's semantics:
 * retain/insert/delete components, inserts carry an author id, concurrent
 * inserts at the same position order by author id (lowest first), and the
 * canonical form puts an insert before an adjacent delete.
 */

export type Component =
  | { retain: number }
  | { insert: string; author: number }
  | { delete: number };

export interface Doc {
  content: string;
  authors: number[]; // authors[i] inserted content[i]
  revision: number;
}

export const SYSTEM_AUTHOR = 0;

export function emptyDoc(): Doc {
  return { content: "", authors: [], revision: 0 };
}

function isRetain(c: Component): c is { retain: number } {
  return "retain" in c;
}

function isInsert(c: Component): c is { insert: string; author: number } {
  return "insert" in c;
}

function isDelete(c: Component): c is { delete: number } {
  return "delete" in c;
}

/** Normalized component list: no empties, adjacent same-kind merged,
 * inserts ordered before adjacent deletes. */
export function build(components: Component[]): Component[] {
  const out: Component[] = [];
  for (let c of components) {
    if (isRetain(c) && c.retain === 0) continue;
    if (isDelete(c) && c.delete === 0) continue;
    if (isInsert(c) && c.insert === "") continue;
    const last = out[out.length - 1];
    if (last && isInsert(c) && isDelete(last)) {
      out[out.length - 1] = c;
      out.push(last);
      const prev = out[out.length - 3];
      if (prev && isInsert(prev) && prev.author === c.author) {
        out.splice(out.length - 3, 2, {
          insert: prev.insert + c.insert,
          author: c.author,
        });
      }
      continue;
    }
    if (last) {
      if (isRetain(c) && isRetain(last)) {
        out[out.length - 1] = { retain: last.retain + c.retain };
        continue;
      }
      if (isDelete(c) && isDelete(last)) {
        out[out.length - 1] = { delete: last.delete + c.delete };
        continue;
      }
      if (isInsert(c) && isInsert(last) && c.author === last.author) {
        out[out.length - 1] = { insert: last.insert + c.insert, author: c.author };
        continue;
      }
    }
    out.push(c);
  }
  return out;
}

export function baseLength(op: Component[]): number {
  let n = 0;
  for (const c of op) {
    if (isRetain(c)) n += c.retain;
    else if (isDelete(c)) n += c.delete;
  }
  return n;
}

export function resultLength(op: Component[]): number {
  let n = 0;
  for (const c of op) {
    if (isRetain(c)) n += c.retain;
    else if (isInsert(c)) n += c.insert.length;
  }
  return n;
}

export function apply(doc: Doc, op: Component[]): Doc {
  if (baseLength(op) !== doc.content.length) {
    throw new Error(
      `op spans ${baseLength(op)} chars, doc has ${doc.content.length}`,
    );
  }
  let content = "";
  const authors: number[] = [];
  let pos = 0;
  for (const c of op) {
    if (isRetain(c)) {
      content += doc.content.slice(pos, pos + c.retain);
      authors.push(...doc.authors.slice(pos, pos + c.retain));
      pos += c.retain;
    } else if (isInsert(c)) {
      content += c.insert;
      for (let k = 0; k < c.insert.length; k++) authors.push(c.author);
    } else {
      pos += c.delete;
    }
  }
  return { content, authors, revision: doc.revision + 1 };
}

/**
 * Transform concurrent ops a and b so either application order converges:
 * apply(apply(d, a), bPrime) equals apply(apply(d, b), aPrime).
 */
export function transform(
  a: Component[],
  b: Component[],
): [Component[], Component[]] {
  const aOut: Component[] = [];
  const bOut: Component[] = [];
  const ca = [...a];
  const cb = [...b];
  let headA: Component | undefined;
  let headB: Component | undefined;
  for (;;) {
    if (headA === undefined) headA = ca.shift();
    if (headB === undefined) headB = cb.shift();
    if (headA === undefined && headB === undefined) break;
    if (headA && isInsert(headA) && headB && isInsert(headB)) {
      // same position: lower author id goes first; ties favor a
      if (headA.author <= headB.author) {
        aOut.push(headA);
        bOut.push({ retain: headA.insert.length });
        headA = undefined;
      } else {
        aOut.push({ retain: headB.insert.length });
        bOut.push(headB);
        headB = undefined;
      }
      continue;
    }
    if (headA && isInsert(headA)) {
      aOut.push(headA);
      bOut.push({ retain: headA.insert.length });
      headA = undefined;
      continue;
    }
    if (headB && isInsert(headB)) {
      aOut.push({ retain: headB.insert.length });
      bOut.push(headB);
      headB = undefined;
      continue;
    }
    if (headA === undefined || headB === undefined) {
      throw new Error("ops span different base lengths");
    }
    const lenA = isRetain(headA) ? headA.retain : (headA as { delete: number }).delete;
    const lenB = isRetain(headB) ? headB.retain : (headB as { delete: number }).delete;
    const n = Math.min(lenA, lenB);
    if (isRetain(headA) && isRetain(headB)) {
      aOut.push({ retain: n });
      bOut.push({ retain: n });
    } else if (isDelete(headA) && isRetain(headB)) {
      aOut.push({ delete: n });
    } else if (isRetain(headA) && isDelete(headB)) {
      bOut.push({ delete: n });
    }
    // delete/delete: both already gone, nothing to emit
    headA = isRetain(headA) ? { retain: lenA - n } : { delete: lenA - n };
    headB = isRetain(headB) ? { retain: lenB - n } : { delete: lenB - n };
    if ((isRetain(headA) ? headA.retain : headA.delete) === 0) headA = undefined;
    if ((isRetain(headB) ? headB.retain : headB.delete) === 0) headB = undefined;
  }
  return [build(aOut), build(bOut)];
}

/** Combine sequential ops: applying the result equals applying both. */
export function compose(first: Component[], second: Component[]): Component[] {
  if (resultLength(first) !== baseLength(second)) {
    throw new Error("second op does not span first op's result");
  }
  const out: Component[] = [];
  const ca = [...first];
  const cb = [...second];
  let headA: Component | undefined;
  let headB: Component | undefined;
  for (;;) {
    if (headA === undefined) headA = ca.shift();
    if (headB === undefined) headB = cb.shift();
    if (headA === undefined && headB === undefined) break;
    if (headA && isDelete(headA)) {
      out.push(headA);
      headA = undefined;
      continue;
    }
    if (headB && isInsert(headB)) {
      out.push(headB);
      headB = undefined;
      continue;
    }
    if (headA === undefined || headB === undefined) {
      throw new Error("ops do not align");
    }
    const lenA = isRetain(headA) ? headA.retain : (headA as { insert: string }).insert.length;
    const lenB = isRetain(headB) ? headB.retain : (headB as { delete: number }).delete;
    const n = Math.min(lenA, lenB);
    if (isRetain(headA) && isRetain(headB)) {
      out.push({ retain: n });
    } else if (isRetain(headA) && isDelete(headB)) {
      out.push({ delete: n });
    } else if (isInsert(headA) && isRetain(headB)) {
      out.push({ insert: headA.insert.slice(0, n), author: headA.author });
    }
    // insert then delete cancels: emit nothing
    if (isRetain(headA)) {
      headA = { retain: lenA - n };
      if (headA.retain === 0) headA = undefined;
    } else {
      const ins = headA as { insert: string; author: number };
      headA = { insert: ins.insert.slice(n), author: ins.author };
      if (headA.insert === "") headA = undefined;
    }
    headB = isRetain(headB) ? { retain: lenB - n } : { delete: lenB - n };
    if (headB && (isRetain(headB) ? headB.retain : headB.delete) === 0) {
      headB = undefined;
    }
  }
  return build(out);
}

/** Map a caret/document position through an op. With biasRight, an insert
 * exactly at the position pushes it right. */
export function transformPosition(
  pos: number,
  op: Component[],
  biasRight = false,
): number {
  let out = pos;
  let base = 0;
  for (const c of op) {
    if (isRetain(c)) {
      base += c.retain;
    } else if (isInsert(c)) {
      if (base < pos || (base === pos && biasRight)) out += c.insert.length;
    } else {
      if (base < pos) out -= Math.min(c.delete, pos - base);
      base += c.delete;
    }
    if (base > pos) break;
  }
  return out;
}

/** Identity op spanning the document. */
export function identity(doc: Doc): Component[] {
  return build([{ retain: doc.content.length }]);
}
