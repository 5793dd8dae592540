/**
 * Keystroke timing capture for credential inputs.
 *
 * Records key-down / key-up transitions from real typing with millisecond
 * timestamps off a high-resolution clock. Paste and drop are blocked and
 * autocomplete is disabled on attach, so every recorded character was typed
 * by hand. Timestamps stay on the raw capture clock here and are rebased
 * when the session document is assembled.
 */

export type KeyAction = "down" | "up";

export interface CapturedEvent {
  /** Printable character or a named control key (LShift, Backspace, ...). */
  key: string;
  action: KeyAction;
  /** Milliseconds on the capture clock, not yet rebased. */
  t: number;
}

/** Millisecond clock; injectable so tests control timing exactly. */
export type Clock = () => number;

export interface CaptureNotice {
  kind: "paste-blocked" | "drop-blocked";
  message: string;
}

export type NoticeHandler = (notice: CaptureNotice) => void;

/** Control keys the service understands, keyed by KeyboardEvent.key. */
const NAMED_KEYS: Record<string, string> = {
  CapsLock: "CapsLock",
  Backspace: "Backspace",
  Delete: "Delete",
  Enter: "Enter",
};

const DOM_KEY_LOCATION_RIGHT = 2;

/** Map a keyboard event onto the wire key identifier, or null to ignore it. */
export function keyIdentifier(event: KeyboardEvent): string | null {
  if (event.key === "Shift") {
    return event.location === DOM_KEY_LOCATION_RIGHT ? "RShift" : "LShift";
  }
  const named = NAMED_KEYS[event.key];
  if (named !== undefined) {
    return named;
  }
  if (event.key.length === 1) {
    return event.key;
  }
  // Tab, arrows, function keys: outside the telemetry vocabulary.
  return null;
}

export interface FieldCaptureOptions {
  clock?: Clock;
  onNotice?: NoticeHandler;
}

/**
 * Attaches to one input element and records its key transitions.
 *
 * Auto-repeat is collapsed to a single hold (one down, one up) and a key-up
 * is only recorded when its key-down was seen, so the event stream always
 * pairs cleanly. Keys still open at submit time surface via openKeys.
 */
export class FieldCapture {
  private recorded: CapturedEvent[] = [];
  private open = new Set<string>();
  private readonly input: HTMLInputElement;
  private readonly clock: Clock;
  private readonly onNotice: NoticeHandler;
  private readonly listeners: Array<[string, EventListener]> = [];

  constructor(input: HTMLInputElement, options: FieldCaptureOptions = {}) {
    this.input = input;
    this.clock = options.clock ?? (() => performance.now());
    this.onNotice = options.onNotice ?? (() => undefined);
    input.autocomplete = "off";
    input.spellcheck = false;
    this.listen("keydown", (event) => this.onKeyDown(event as KeyboardEvent));
    this.listen("keyup", (event) => this.onKeyUp(event as KeyboardEvent));
    this.listen("paste", (event) =>
      this.block(event, "paste-blocked", "pasting is disabled here; please type"),
    );
    this.listen("drop", (event) =>
      this.block(event, "drop-blocked", "dropping text is disabled here; please type"),
    );
  }

  /** Events recorded so far, in dispatch order. */
  get events(): readonly CapturedEvent[] {
    return this.recorded;
  }

  /** Keys currently held down; non-empty means Up events are still missing. */
  get openKeys(): string[] {
    return [...this.open];
  }

  clear(): void {
    this.recorded = [];
    this.open.clear();
  }

  detach(): void {
    for (const [type, listener] of this.listeners) {
      this.input.removeEventListener(type, listener);
    }
    this.listeners.length = 0;
  }

  private listen(type: string, listener: EventListener): void {
    this.input.addEventListener(type, listener);
    this.listeners.push([type, listener]);
  }

  private onKeyDown(event: KeyboardEvent): void {
    const key = keyIdentifier(event);
    if (key === null) {
      return;
    }
    if (event.repeat || this.open.has(key)) {
      return;
    }
    this.open.add(key);
    this.recorded.push({ key, action: "down", t: this.clock() });
  }

  private onKeyUp(event: KeyboardEvent): void {
    const key = keyIdentifier(event);
    if (key === null || !this.open.has(key)) {
      return;
    }
    this.open.delete(key);
    this.recorded.push({ key, action: "up", t: this.clock() });
  }

  private block(event: Event, kind: CaptureNotice["kind"], message: string): void {
    event.preventDefault();
    this.onNotice({ kind, message });
  }
}
