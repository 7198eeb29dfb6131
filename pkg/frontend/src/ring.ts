/** Fixed-capacity ring buffer for telemetry traces. */
export class Ring<T> {
  private buf: T[] = [];
  private head = 0; // index of the oldest element once full

  constructor(readonly capacity: number) {
    if (!Number.isInteger(capacity) || capacity <= 0) {
      throw new Error(`ring capacity must be a positive integer, got ${capacity}`);
    }
  }

  get length(): number {
    return this.buf.length;
  }

  push(value: T): void {
    if (this.buf.length < this.capacity) {
      this.buf.push(value);
    } else {
      this.buf[this.head] = value;
      this.head = (this.head + 1) % this.capacity;
    }
  }

  /** Oldest to newest. */
  toArray(): T[] {
    return this.buf.slice(this.head).concat(this.buf.slice(0, this.head));
  }

  last(): T | undefined {
    if (this.buf.length === 0) return undefined;
    const i = (this.head + this.buf.length - 1) % this.buf.length;
    return this.buf[i];
  }

  clear(): void {
    this.buf = [];
    this.head = 0;
  }
}
