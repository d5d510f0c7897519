import { ControlMessage, ServerFrame, parseServerFrame } from "./protocol.js";

// The subset of WebSocket the client touches, so tests can hand in fakes.
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientEvents {
  frame: (frame: ServerFrame) => void;
  status: (status: "connecting" | "open" | "closed") => void;
  /** Server rejections and local failures (lost messages, bad frames). */
  problem: (message: string) => void;
}

interface Pending {
  msg: ControlMessage;
  timer: ReturnType<typeof setTimeout>;
  retried: boolean;
}

const BACKOFF_MS = [500, 1000, 2000, 5000];

/**
 * One WebSocket session against the serve protocol.
 *
 * Every control message carries a strictly increasing seq and is matched
 * against exactly one ack or error. A message with no answer inside
 * ackTimeoutMs is resent once under a fresh seq (the server refuses
 * reused ones); if the retry also dies the loss is reported and the
 * message dropped. Connection drops schedule reconnects with backoff;
 * pending messages do not survive a drop.
 */
export class SocketClient {
  private sock: SocketLike | null = null;
  private seq = 0;
  private pending = new Map<number, Pending>();
  private attempts = 0;
  private closed = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private url: string,
    private events: ClientEvents,
    private factory: SocketFactory = (u) => new WebSocket(u) as unknown as SocketLike,
    private ackTimeoutMs = 1500,
  ) {}

  connect(): void {
    this.events.status("connecting");
    const sock = this.factory(this.url);
    this.sock = sock;
    sock.onopen = () => {
      this.attempts = 0;
      this.events.status("open");
    };
    sock.onmessage = (ev) => this.handleText(ev.data);
    sock.onerror = () => {};
    sock.onclose = () => this.dropped();
  }

  /** Stop for good (page teardown); no reconnects after this. */
  shutdown(): void {
    this.closed = true;
    if (this.reconnectTimer) clearTimeout(this.reconnectTimer);
    this.flushPending("connection closed");
    this.sock?.close();
  }

  send(msg: ControlMessage): void {
    if (!this.sock) return;
    this.transmit(msg, false);
  }

  private transmit(msg: ControlMessage, retried: boolean): void {
    const seq = ++this.seq;
    try {
      this.sock!.send(JSON.stringify({ seq, ...msg }));
    } catch {
      this.events.problem(`send failed: ${msg.kind}`);
      return;
    }
    const timer = setTimeout(() => this.expire(seq), this.ackTimeoutMs);
    this.pending.set(seq, { msg, timer, retried });
  }

  private expire(seq: number): void {
    const entry = this.pending.get(seq);
    if (!entry) return;
    this.pending.delete(seq);
    if (entry.retried) {
      this.events.problem(`no answer to ${entry.msg.kind} after retry`);
    } else {
      this.transmit(entry.msg, true);
    }
  }

  private handleText(text: string): void {
    let frame: ServerFrame;
    try {
      frame = parseServerFrame(text);
    } catch (err) {
      this.events.problem(String(err instanceof Error ? err.message : err));
      return;
    }
    if (frame.kind === "ack" || frame.kind === "error") {
      const entry = frame.re === null ? undefined : this.pending.get(frame.re);
      if (entry) {
        clearTimeout(entry.timer);
        this.pending.delete(frame.re as number);
      }
      if (frame.kind === "error") this.events.problem(frame.message);
    }
    this.events.frame(frame);
  }

  private dropped(): void {
    this.flushPending("connection lost");
    this.sock = null;
    this.events.status("closed");
    if (this.closed) return;
    const wait = BACKOFF_MS[Math.min(this.attempts, BACKOFF_MS.length - 1)];
    this.attempts += 1;
    this.reconnectTimer = setTimeout(() => this.connect(), wait);
  }

  private flushPending(why: string): void {
    for (const [, entry] of this.pending) {
      clearTimeout(entry.timer);
      this.events.problem(`${entry.msg.kind}: ${why}`);
    }
    this.pending.clear();
  }
}
