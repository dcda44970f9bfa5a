/**
 * Editor client: newline-delimited JSON over TCP, one session per
 * connection. All network events and local edits run through a single
 * dispatch path, so there is no shared mutable state outside this class.
 */

import * as net from "node:net";

import { MediaModel } from "./media";
import { Component } from "./ot";
import { ClientReplica, OutgoingEdit } from "./replica";
import { Assignment, ViewState } from "./view";

export const PROTOCOL_VERSION = 1;

export interface Envelope {
  v: number;
  type: string;
  session: string;
  sender: number;
  payload: any;
  server_time_ms: number;
}

export type ClientPhase = "connecting" | "lobby" | "running" | "finished" | "error";

export interface ClientEvents {
  onPhase?(phase: ClientPhase): void;
  onChange?(): void;
  onMetrics?(metrics: any): void;
  onError?(error: string): void;
}

export class EditorClient {
  readonly user: number;
  readonly replica = new ClientReplica();
  readonly media = new MediaModel();
  readonly view = new ViewState();
  assignment: Assignment | null = null;
  phase: ClientPhase = "connecting";
  sessionId = "";
  metrics: any = null;
  lastError = "";

  private socket: net.Socket | null = null;
  private rx = "";
  private outbox: string[] = [];
  private events: ClientEvents;

  constructor(user: number, events: ClientEvents = {}) {
    this.user = user;
    this.events = events;
  }

  connect(host: string, port: number): Promise<void> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port }, () => {
        this.socket = socket;
        for (const line of this.outbox.splice(0)) socket.write(line);
        this.send("Join", {});
        resolve();
      });
      socket.setNoDelay(true);
      socket.on("data", (chunk) => this.onData(chunk.toString("utf-8")));
      socket.on("error", (err) => {
        if (this.socket === null) reject(err);
        this.setPhase("error");
        this.lastError = String(err);
        this.events.onError?.(this.lastError);
      });
      socket.on("close", () => {
        this.socket = null;
      });
    });
  }

  close(): void {
    this.socket?.end();
    this.socket = null;
  }

  /** Replace [from, to) with text; respects the one-in-flight rule. */
  edit(from: number, to: number, text: string): void {
    const outgoing = this.replica.splice(from, to, text, this.user);
    if (outgoing) this.sendEdit(outgoing);
    this.events.onChange?.();
  }

  requestEnd(): void {
    this.send("End", {});
  }

  private sendEdit(edit: OutgoingEdit): void {
    this.send("Edit", edit);
  }

  private send(type: string, payload: Record<string, unknown> | OutgoingEdit): void {
    const line =
      JSON.stringify({
        v: PROTOCOL_VERSION,
        type,
        session: this.sessionId,
        sender: this.user,
        payload,
      }) + "\n";
    if (this.socket) this.socket.write(line);
    else this.outbox.push(line); // flushed on (re)connect
  }

  private setPhase(phase: ClientPhase): void {
    if (phase !== this.phase) {
      this.phase = phase;
      this.events.onPhase?.(phase);
    }
  }

  private onData(text: string): void {
    this.rx += text;
    for (;;) {
      const nl = this.rx.indexOf("\n");
      if (nl < 0) break;
      const line = this.rx.slice(0, nl);
      this.rx = this.rx.slice(nl + 1);
      if (!line.trim()) continue;
      this.dispatch(JSON.parse(line) as Envelope);
    }
  }

  private dispatch(message: Envelope): void {
    switch (message.type) {
      case "Welcome": {
        this.sessionId = message.session;
        this.replica.loadSnapshot(message.payload);
        this.assignment = message.payload.assignment ?? null;
        this.setPhase(message.payload.phase === "running" ? "running" : "lobby");
        this.events.onChange?.();
        break;
      }
      case "Start": {
        this.media.start(message.payload);
        this.setPhase("running");
        break;
      }
      case "Inject":
      case "Broadcast": {
        this.replica.applyRemote(message.payload.components as Component[]);
        this.events.onChange?.();
        break;
      }
      case "Ack": {
        const next = this.replica.handleAck();
        if (next) this.sendEdit(next);
        break;
      }
      case "End": {
        this.setPhase("finished");
        break;
      }
      case "Metrics": {
        this.metrics = message.payload;
        this.events.onMetrics?.(this.metrics);
        break;
      }
      case "Error": {
        this.lastError = message.payload?.error ?? "unknown error";
        this.events.onError?.(this.lastError);
        break;
      }
      default:
        break; // forward-compatible: ignore unknown message types
    }
  }

  get text(): string {
    return this.replica.doc.content;
  }

  /** Rendered spans with per-author colors. */
  get spans() {
    return this.view.spans(this.replica.doc);
  }
}
