/** Line-oriented transport over a WebSocket-style connection. */

export interface Transport {
  send(line: string): void;
  close(): void;
  onLine(cb: (line: string) => void): void;
  onClose(cb: () => void): void;
  onOpen(cb: () => void): void;
}

/**
 * Minimal structural view of a WebSocket: satisfied by the browser class
 * and by the npm `ws` client used in tests.
 */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open", cb: () => void): void;
  addEventListener(type: "close", cb: () => void): void;
  addEventListener(type: "message", cb: (event: { data: unknown }) => void): void;
}

export class WebSocketLineTransport implements Transport {
  private buffer = "";
  private lineCbs: Array<(line: string) => void> = [];
  private closeCbs: Array<() => void> = [];
  private openCbs: Array<() => void> = [];

  constructor(private readonly sock: SocketLike) {
    sock.addEventListener("open", () => {
      for (const cb of this.openCbs) cb();
    });
    sock.addEventListener("close", () => {
      for (const cb of this.closeCbs) cb();
    });
    sock.addEventListener("message", (event) => {
      this.buffer += String(event.data);
      let cut: number;
      while ((cut = this.buffer.indexOf("\n")) !== -1) {
        const line = this.buffer.slice(0, cut);
        this.buffer = this.buffer.slice(cut + 1);
        if (line.trim() === "") continue;
        for (const cb of this.lineCbs) cb(line);
      }
    });
  }

  send(line: string): void {
    // The bridge parser only consumes newline-terminated lines.
    this.sock.send(line.endsWith("\n") ? line : line + "\n");
  }

  close(): void {
    this.sock.close();
  }

  onLine(cb: (line: string) => void): void {
    this.lineCbs.push(cb);
  }

  onClose(cb: () => void): void {
    this.closeCbs.push(cb);
  }

  onOpen(cb: () => void): void {
    this.openCbs.push(cb);
  }
}
