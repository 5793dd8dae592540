import { beforeEach, describe, expect, it } from "vitest";

import type { CaptureNotice } from "../src/capture";
import { FieldCapture, keyIdentifier } from "../src/capture";
import { dispatchKey, FakeClock } from "./typing";

let input: HTMLInputElement;
let clock: FakeClock;
let notices: CaptureNotice[];
let capture: FieldCapture;

beforeEach(() => {
  document.body.innerHTML = "";
  input = document.createElement("input");
  document.body.appendChild(input);
  clock = new FakeClock();
  notices = [];
  capture = new FieldCapture(input, {
    clock: clock.fn(),
    onNotice: (n) => notices.push(n),
  });
});

describe("keyIdentifier", () => {
  it("maps shift by keyboard location", () => {
    expect(keyIdentifier(new KeyboardEvent("keydown", { key: "Shift", location: 1 }))).toBe(
      "LShift",
    );
    expect(keyIdentifier(new KeyboardEvent("keydown", { key: "Shift", location: 2 }))).toBe(
      "RShift",
    );
    expect(keyIdentifier(new KeyboardEvent("keydown", { key: "Shift", location: 0 }))).toBe(
      "LShift",
    );
  });

  it("passes named control keys and printable characters", () => {
    for (const key of ["CapsLock", "Backspace", "Delete", "Enter", "a", "Z", "!", " "]) {
      expect(keyIdentifier(new KeyboardEvent("keydown", { key }))).not.toBeNull();
    }
  });

  it("ignores keys outside the telemetry vocabulary", () => {
    for (const key of ["Tab", "ArrowLeft", "F5", "Escape", "Control", "Alt", "Meta"]) {
      expect(keyIdentifier(new KeyboardEvent("keydown", { key }))).toBeNull();
    }
  });
});

describe("FieldCapture", () => {
  it("records typing ab as four events in clock order", () => {
    clock.now = 0;
    dispatchKey(input, "keydown", "a");
    clock.tick(85);
    dispatchKey(input, "keyup", "a");
    clock.tick(70);
    dispatchKey(input, "keydown", "b");
    clock.tick(85);
    dispatchKey(input, "keyup", "b");

    expect(capture.events).toEqual([
      { key: "a", action: "down", t: 0 },
      { key: "a", action: "up", t: 85 },
      { key: "b", action: "down", t: 155 },
      { key: "b", action: "up", t: 240 },
    ]);
    expect(capture.openKeys).toEqual([]);
  });

  it("brackets a shifted character with LShift transitions", () => {
    dispatchKey(input, "keydown", "Shift", 1);
    clock.tick(20);
    dispatchKey(input, "keydown", "A");
    clock.tick(70);
    dispatchKey(input, "keyup", "A");
    clock.tick(15);
    dispatchKey(input, "keyup", "Shift", 1);

    expect(capture.events.map((ev) => `${ev.key}:${ev.action}`)).toEqual([
      "LShift:down",
      "A:down",
      "A:up",
      "LShift:up",
    ]);
  });

  it("collapses auto-repeat to a single hold", () => {
    dispatchKey(input, "keydown", "a");
    input.dispatchEvent(new KeyboardEvent("keydown", { key: "a", repeat: true, bubbles: true }));
    dispatchKey(input, "keydown", "a"); // some browsers omit the repeat flag
    dispatchKey(input, "keyup", "a");

    expect(capture.events).toHaveLength(2);
  });

  it("never records a key-up without its key-down", () => {
    dispatchKey(input, "keyup", "a");
    expect(capture.events).toEqual([]);
  });

  it("exposes held keys as openKeys until released", () => {
    dispatchKey(input, "keydown", "Shift", 2);
    dispatchKey(input, "keydown", "x");
    expect(capture.openKeys.sort()).toEqual(["RShift", "x"]);
    dispatchKey(input, "keyup", "x");
    expect(capture.openKeys).toEqual(["RShift"]);
  });

  it("ignores non-vocabulary keys entirely", () => {
    dispatchKey(input, "keydown", "Tab");
    dispatchKey(input, "keyup", "Tab");
    dispatchKey(input, "keydown", "ArrowRight");
    expect(capture.events).toEqual([]);
    expect(capture.openKeys).toEqual([]);
  });

  it("blocks paste with a notice", () => {
    const event = new Event("paste", { bubbles: true, cancelable: true });
    input.dispatchEvent(event);
    expect(event.defaultPrevented).toBe(true);
    expect(notices).toHaveLength(1);
    expect(notices[0].kind).toBe("paste-blocked");
  });

  it("blocks drop with a notice", () => {
    const event = new Event("drop", { bubbles: true, cancelable: true });
    input.dispatchEvent(event);
    expect(event.defaultPrevented).toBe(true);
    expect(notices[0].kind).toBe("drop-blocked");
  });

  it("disables autocomplete on attach", () => {
    expect(input.autocomplete).toBe("off");
    expect(input.spellcheck).toBe(false);
  });

  it("clear drops recorded events and open keys", () => {
    dispatchKey(input, "keydown", "a");
    dispatchKey(input, "keyup", "a");
    dispatchKey(input, "keydown", "b");
    capture.clear();
    expect(capture.events).toEqual([]);
    expect(capture.openKeys).toEqual([]);
  });

  it("stops recording after detach", () => {
    capture.detach();
    dispatchKey(input, "keydown", "a");
    expect(capture.events).toEqual([]);
  });
});
