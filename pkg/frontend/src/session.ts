/**
 * Session documents: assembly from captured events plus local validation.
 *
 * The wire format is a JSON object with exactly these fields:
 *   username_claim  string
 *   events          [{key, action: "down"|"up", t}] in time order
 *   fields          {username: [start, end], password: [start, end]}
 *   context         {geo, timezone, device_id}
 *   pressure        optional, one [0, 1] float per event
 * Timestamps are milliseconds rebased so the first event sits at t = 0.
 * An end index smaller than its start encodes an empty field span.
 */

import type { CapturedEvent } from "./capture";

export interface SessionEvent {
  key: string;
  action: "down" | "up";
  t: number;
}

export interface SessionContext {
  geo: string;
  timezone: string;
  device_id: string;
}

export type FieldSpan = [number, number];

export interface SessionDocument {
  username_claim: string;
  events: SessionEvent[];
  fields: {
    username: FieldSpan;
    password: FieldSpan;
  };
  context: SessionContext;
  pressure?: number[];
}

/** Raised when the captured fields cannot form a valid document. */
export class CaptureOrderError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CaptureOrderError";
  }
}

const NAMED_KEYS = new Set(["LShift", "RShift", "CapsLock", "Backspace", "Delete", "Enter"]);

function isPrintableKey(key: string): boolean {
  // Single characters excluding control/format/separator codepoints.
  return key.length === 1 && !/[\p{Cc}\p{Cf}\p{Zl}\p{Zp}]/u.test(key);
}

/**
 * Assemble the wire document from the two per-field capture buffers.
 *
 * Username events must all precede password events on the shared clock;
 * editing the username after typing the password breaks that ordering and
 * raises CaptureOrderError so the UI can ask for a clean retype.
 */
export function buildSessionDocument(
  usernameClaim: string,
  usernameEvents: readonly CapturedEvent[],
  passwordEvents: readonly CapturedEvent[],
  context: SessionContext,
): SessionDocument {
  const all = [...usernameEvents, ...passwordEvents];
  if (all.length === 0) {
    throw new CaptureOrderError("no key events were captured");
  }
  for (let i = 1; i < all.length; i++) {
    if (all[i].t < all[i - 1].t) {
      throw new CaptureOrderError(
        "credential fields were edited out of order; please retype from the start",
      );
    }
  }
  const t0 = all[0].t;
  const events: SessionEvent[] = all.map((ev) => ({
    key: ev.key,
    action: ev.action,
    t: ev.t - t0,
  }));
  const nu = usernameEvents.length;
  const np = passwordEvents.length;
  const usernameSpan: FieldSpan = nu > 0 ? [0, nu - 1] : [0, -1];
  const passwordSpan: FieldSpan = np > 0 ? [nu, nu + np - 1] : [nu, nu - 1];
  return {
    username_claim: usernameClaim,
    events,
    fields: { username: usernameSpan, password: passwordSpan },
    context: { ...context },
  };
}

function spanProblems(name: string, span: FieldSpan, nEvents: number, out: string[]): void {
  if (!Array.isArray(span) || span.length !== 2) {
    out.push(`field span ${name} must be a two-element index pair`);
    return;
  }
  const [start, end] = span;
  if (!Number.isInteger(start) || !Number.isInteger(end)) {
    out.push(`field span ${name} indices must be integers`);
    return;
  }
  if (end < start) {
    return; // empty span
  }
  if (start < 0 || end >= nEvents) {
    out.push(`field span ${name} [${start}, ${end}] is out of bounds for ${nEvents} events`);
  }
}

/**
 * Check the invariants a well-formed client document must satisfy.
 *
 * Returns a list of human-readable problems, empty when the document is
 * valid. Mirrors the service-side checks and additionally requires the
 * client rebasing convention (first event at t = 0).
 */
export function validateSessionDocument(doc: SessionDocument): string[] {
  const problems: string[] = [];
  if (typeof doc.username_claim !== "string" || doc.username_claim === "") {
    problems.push("username_claim must be a non-empty string");
  }

  if (!Array.isArray(doc.events)) {
    problems.push("events must be a list");
    return problems;
  }
  let lastT = -Infinity;
  const openDowns = new Map<string, number>();
  doc.events.forEach((ev, i) => {
    if (typeof ev.key !== "string" || (!NAMED_KEYS.has(ev.key) && !isPrintableKey(ev.key))) {
      problems.push(`event ${i} has unknown key identifier ${JSON.stringify(ev.key)}`);
    }
    if (ev.action !== "down" && ev.action !== "up") {
      problems.push(`event ${i} action must be "down" or "up"`);
    }
    if (typeof ev.t !== "number" || !Number.isFinite(ev.t) || ev.t < 0) {
      problems.push(`event ${i} timestamp must be a finite non-negative number`);
    } else {
      if (ev.t < lastT) {
        problems.push(`events are unsorted: event ${i} at t=${ev.t} precedes t=${lastT}`);
      }
      lastT = ev.t;
    }
    if (ev.action === "down") {
      openDowns.set(ev.key, (openDowns.get(ev.key) ?? 0) + 1);
    } else if (ev.action === "up") {
      const held = openDowns.get(ev.key) ?? 0;
      if (held <= 0) {
        problems.push(`orphan key-up for ${JSON.stringify(ev.key)} at event ${i}`);
      } else {
        openDowns.set(ev.key, held - 1);
      }
    }
  });
  if (doc.events.length > 0 && doc.events[0].t !== 0) {
    problems.push("timestamps must be rebased so the first event sits at t=0");
  }

  spanProblems("username", doc.fields.username, doc.events.length, problems);
  spanProblems("password", doc.fields.password, doc.events.length, problems);
  const [, uEnd] = doc.fields.username;
  const [uStart] = doc.fields.username;
  const [pStart, pEnd] = doc.fields.password;
  if (uEnd >= uStart && pEnd >= pStart && uEnd >= pStart) {
    problems.push("overlapping or mis-ordered field spans: username must precede password");
  }

  for (const part of ["geo", "timezone", "device_id"] as const) {
    if (typeof doc.context?.[part] !== "string") {
      problems.push(`context.${part} must be a string`);
    }
  }

  if (doc.pressure !== undefined) {
    if (!Array.isArray(doc.pressure) || doc.pressure.length !== doc.events.length) {
      problems.push("pressure must list one value per event");
    } else {
      doc.pressure.forEach((p, i) => {
        if (typeof p !== "number" || !(p >= 0 && p <= 1)) {
          problems.push(`pressure[${i}] must be a number in [0, 1]`);
        }
      });
    }
  }
  return problems;
}
