/**
 * WebSocket session client: parses server frames into the view model and
 * sends hand poses and control actions. The WebSocket implementation is
 * injectable so node-side tests can use the same code as the browser.
 */

import type { ClientFrame, ServerFrame } from "./protocol.js";
import { parseServerFrame } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open" | "close", handler: () => void): void;
  addEventListener(type: "message", handler: (event: { data: unknown }) => void): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface SessionClientOptions {
  onFrame: (frame: ServerFrame) => void;
  onOpen?: () => void;
  onClose?: () => void;
  socketFactory?: SocketFactory;
}

export class SessionClient {
  private socket: SocketLike | null = null;
  private open = false;

  constructor(
    public readonly url: string,
    private readonly options: SessionClientOptions,
  ) {}

  get isOpen(): boolean {
    return this.open;
  }

  connect(): void {
    const factory =
      this.options.socketFactory ??
      ((url: string) => new WebSocket(url) as unknown as SocketLike);
    const socket = factory(this.url);
    this.socket = socket;
    socket.addEventListener("open", () => {
      this.open = true;
      this.options.onOpen?.();
    });
    socket.addEventListener("close", () => {
      this.open = false;
      this.options.onClose?.();
    });
    socket.addEventListener("message", (event: { data: unknown }) => {
      if (typeof event.data !== "string") return;
      const frame = parseServerFrame(event.data);
      if (frame) this.options.onFrame(frame);
    });
  }

  sendFrame(frame: ClientFrame): void {
    if (!this.open || !this.socket) return; // dropped, like any stale pose
    this.socket.send(JSON.stringify(frame));
  }

  control(action: "start" | "pause" | "reset"): void {
    this.sendFrame({ type: "control", action });
  }

  setMode(mode: "visual" | "blind"): void {
    this.sendFrame({ type: "control", action: "set_mode", mode });
  }

  loadScenario(name: string): void {
    this.sendFrame({ type: "control", action: "load_scenario", name });
  }

  close(): void {
    this.socket?.close();
    this.socket = null;
    this.open = false;
  }
}
