/**
 * Client replica with the one-in-flight rule: the first local edit is sent
 * immediately; further local edits compose into a buffer that is sent when
 * the acknowledgment arrives. Incoming remote ops are transformed against
 * the pending op and the buffer, so the local document stays converged
 * with the server after quiescence.
 */

import {
  Component,
  Doc,
  apply,
  build,
  compose,
  emptyDoc,
  transform,
  transformPosition,
} from "./ot";

export interface SnapshotPayload {
  revision: number;
  content: string;
  authors: number[];
  injection_cursor: number;
}

export interface OutgoingEdit {
  base_revision: number;
  components: Component[];
}

export class ClientReplica {
  doc: Doc = emptyDoc();
  serverRevision = 0;
  pending: Component[] | null = null;
  buffer: Component[] | null = null;
  caret = 0;

  loadSnapshot(snapshot: SnapshotPayload): void {
    this.doc = {
      content: snapshot.content,
      authors: [...snapshot.authors],
      revision: snapshot.revision,
    };
    this.serverRevision = snapshot.revision;
    this.pending = null;
    this.buffer = null;
    this.caret = Math.min(this.caret, snapshot.content.length);
  }

  /** Apply a local edit optimistically; returns the op to send now, if any. */
  localEdit(components: Component[], caretAfter?: number): OutgoingEdit | null {
    const op = build(components);
    this.doc = apply(this.doc, op);
    if (caretAfter !== undefined) {
      this.caret = caretAfter;
    } else {
      this.caret = transformPosition(this.caret, op, true);
    }
    if (this.pending === null) {
      this.pending = op;
      return { base_revision: this.serverRevision, components: op };
    }
    this.buffer = this.buffer === null ? op : compose(this.buffer, op);
    return null;
  }

  /** A server op from another author (Inject or Broadcast). */
  applyRemote(components: Component[]): void {
    let remote = build(components);
    if (this.pending !== null) {
      const [pendingPrime, remotePrime] = transform(this.pending, remote);
      this.pending = pendingPrime;
      remote = remotePrime;
    }
    if (this.buffer !== null) {
      const [bufferPrime, remotePrime] = transform(this.buffer, remote);
      this.buffer = bufferPrime;
      remote = remotePrime;
    }
    this.doc = apply(this.doc, remote);
    this.caret = transformPosition(this.caret, remote, false);
    this.serverRevision += 1;
  }

  /** The server acknowledged our pending op; returns the next op to send. */
  handleAck(): OutgoingEdit | null {
    if (this.pending === null) {
      throw new Error("ack without a pending op");
    }
    this.serverRevision += 1;
    if (this.buffer !== null) {
      this.pending = this.buffer;
      this.buffer = null;
      return { base_revision: this.serverRevision, components: this.pending };
    }
    this.pending = null;
    return null;
  }

  get quiescent(): boolean {
    return this.pending === null && this.buffer === null;
  }

  /** Convenience: replace [from, to) with text authored by `author`. */
  splice(from: number, to: number, text: string, author: number): OutgoingEdit | null {
    const n = this.doc.content.length;
    return this.localEdit(
      [
        { retain: from },
        { insert: text, author },
        { delete: to - from },
        { retain: n - to },
      ],
      from + text.length,
    );
  }
}
