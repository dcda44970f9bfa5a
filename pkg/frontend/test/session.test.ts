/**
 * Headless end-to-end test against the real session server: spawn the
 * Python server process, join three editor clients, make concurrent edits
 * during playback, and verify that every replica converges with the
 * persisted final text, that the delay-10 client's media pane lags by
 * 10 s, and that attribution colors follow author ids.
 */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { EditorClient } from "../src/client";
import { SYSTEM_AUTHOR } from "../src/ot";
import { DEFAULT_COLOR } from "../src/view";

const WORDS = 20;
const SPEEDUP = 10; // 20 s of audio plays in 2 s of wall time

let workDir: string;
let proc: ChildProcess;
let port = 0;
let sessionId = "";
const clients: EditorClient[] = [];

function waitFor(
  predicate: () => boolean,
  timeoutMs: number,
  label: string,
): Promise<void> {
  return new Promise((resolve, reject) => {
    const started = Date.now();
    const poll = () => {
      if (predicate()) return resolve();
      if (Date.now() - started > timeoutMs) {
        return reject(new Error(`timed out waiting for ${label}`));
      }
      setTimeout(poll, 10);
    };
    poll();
  });
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "editor-e2e-"));
  const words = Array.from({ length: WORDS }, (_, i) => ({
    w: `wort${i}`,
    s: i,
    e: i + 0.8,
  }));
  const transcriptPath = join(workDir, "transcript.json");
  writeFileSync(transcriptPath, JSON.stringify({ words }));
  const referencePath = join(workDir, "reference.txt");
  writeFileSync(
    referencePath,
    words.map((w) => w.w).join(" ") + "\n",
  );

  proc = spawn(
    "python3",
    [
      "-m",
      "cart.cli",
      "serve",
      transcriptPath,
      "--scenario",
      "B",
      "--speedup",
      String(SPEEDUP),
      "--reference",
      referencePath,
      "--out-dir",
      join(workDir, "out"),
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );

  const ready = new Promise<void>((resolve, reject) => {
    let buf = "";
    proc.stdout!.on("data", (chunk: Buffer) => {
      buf += chunk.toString("utf-8");
      const nl = buf.indexOf("\n");
      if (nl >= 0 && port === 0) {
        const head = JSON.parse(buf.slice(0, nl));
        port = head.port;
        sessionId = head.session;
        resolve();
      }
    });
    proc.on("error", reject);
    proc.on("exit", (code) => {
      if (port === 0) reject(new Error(`server exited early (${code})`));
    });
  });
  await ready;

  for (const user of [1, 2, 3]) {
    const client = new EditorClient(user);
    await client.connect("127.0.0.1", port);
    clients.push(client);
  }
  // The group is full, so the server welcomes everyone and autostarts.
  await waitFor(
    () => clients.every((c) => c.phase === "running" && c.assignment !== null),
    5000,
    "session start",
  );
}, 20000);

afterAll(() => {
  for (const c of clients) c.close();
  proc?.kill();
  rmSync(workDir, { recursive: true, force: true });
});

describe("headless session", () => {
  it("assigns one role per audio delay", () => {
    const delays = clients
      .map((c) => c.assignment!.audio_delay_s)
      .sort((a, b) => a - b);
    expect(delays).toEqual([0, 10, 20]);
  });

  it("lags the delay-10 client's media pane by 10 s", async () => {
    const delayed = clients.find((c) => c.assignment!.audio_delay_s === 10)!;
    await new Promise((r) => setTimeout(r, 300));
    const offset = delayed.media.offsetS(Date.now());
    expect(Math.abs(offset - 10)).toBeLessThanOrEqual(0.2);
    const live = clients.find((c) => c.assignment!.audio_delay_s === 0)!;
    expect(live.media.offsetS(Date.now())).toBeLessThanOrEqual(0.2);
  });

  it("converges all replicas with the persisted final text", async () => {
    // Let a few words arrive, then edit concurrently from two clients.
    await waitFor(
      () => clients.every((c) => c.text.length > 4),
      5000,
      "first injected words",
    );
    const [a, , c] = clients;
    a!.edit(0, 1, "W"); // capitalize the first letter
    c!.edit(c!.text.length, c!.text.length, "!"); // append at the live edge
    await waitFor(
      () => clients.every((x) => x.replica.quiescent),
      5000,
      "edit acknowledgments",
    );

    await waitFor(
      () => clients.every((x) => x.phase === "finished"),
      15000,
      "session end",
    );
    // Convergence within 500 ms of quiescence.
    await waitFor(
      () =>
        clients.every(
          (x) =>
            x.replica.quiescent && x.text === clients[0]!.text,
        ),
      500,
      "replica convergence",
    );
    const final = readFileSync(
      join(workDir, "out", sessionId, "final.txt"),
      "utf-8",
    );
    for (const x of clients) {
      expect(x.text).toBe(final);
      expect(x.replica.serverRevision).toBe(clients[0]!.replica.serverRevision);
    }
    expect(final).toContain("W");
    expect(final).toContain("!");
  }, 30000);

  it("colors edited text by author and system text in the default color", () => {
    const observer = clients[1]!;
    const spans = observer.spans;
    expect(spans.map((s) => s.text).join("")).toBe(observer.text);
    const authors = new Set(spans.map((s) => s.author));
    expect(authors.has(1)).toBe(true);
    expect(authors.has(3)).toBe(true);
    expect(authors.has(SYSTEM_AUTHOR)).toBe(true);
    for (const span of spans) {
      if (span.author === SYSTEM_AUTHOR) {
        expect(span.color).toBe(DEFAULT_COLOR);
      } else {
        expect(span.color).toBe(observer.view.colorFor(span.author));
        expect(span.color).not.toBe(DEFAULT_COLOR);
      }
    }
    // The same author maps to the same color on every client.
    for (const other of clients) {
      expect(other.view.colorFor(1)).toBe(observer.view.colorFor(1));
    }
  });
});
