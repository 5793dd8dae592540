/**
 * Login demo UI: a small state machine over one root element.
 *
 * Flow: username pre-check -> captured credential entry -> verdict. The
 * verdict is either an immediate grant, an OTP form (first-degree risk) or
 * an out-of-band approval screen (second-degree risk). A failed or closed
 * out-of-band approval returns to the login form. Nothing typed survives a
 * submission: capture buffers and input values are cleared the moment the
 * session document is built.
 */

import type { AttemptResult, AuthClient, RiskReport } from "./api";
import { ApiError, NetworkError } from "./api";
import type { Clock } from "./capture";
import { FieldCapture } from "./capture";
import type { SessionContext, SessionDocument } from "./session";
import { buildSessionDocument, CaptureOrderError, validateSessionDocument } from "./session";

export type NoticeFlavor = "info" | "client" | "server" | "network";

export interface AppOptions {
  api: AuthClient;
  clock?: Clock;
  timezone?: string;
  geo?: string;
  deviceId?: string;
}

function detectTimezone(): string {
  try {
    return Intl.DateTimeFormat().resolvedOptions().timeZone || "UTC";
  } catch {
    return "UTC";
  }
}

/** Map a thrown error onto a notice message and rendering flavor. */
export function describeError(err: unknown): { message: string; flavor: NoticeFlavor } {
  if (err instanceof NetworkError) {
    return { message: err.message, flavor: "network" };
  }
  if (err instanceof ApiError) {
    if (err.status >= 500) {
      return { message: `server error (${err.status}): ${err.detail}`, flavor: "server" };
    }
    return { message: err.detail, flavor: "client" };
  }
  return { message: `unexpected error: ${String(err)}`, flavor: "client" };
}

export class LoginApp {
  private readonly root: HTMLElement;
  private readonly api: AuthClient;
  private readonly clock: Clock;
  private readonly timezone: string;
  private usernameClaim = "";
  private geo: string;
  private deviceId: string;
  private usernameCapture: FieldCapture | null = null;
  private passwordCapture: FieldCapture | null = null;
  private pendingSessions: SessionDocument[] = [];
  private inflight: Promise<void> = Promise.resolve();

  constructor(root: HTMLElement, options: AppOptions) {
    this.root = root;
    this.api = options.api;
    this.clock = options.clock ?? (() => performance.now());
    this.timezone = options.timezone ?? detectTimezone();
    this.geo = options.geo ?? "demo/local";
    this.deviceId = options.deviceId ?? "browser-demo";
  }

  start(): void {
    this.showUsernameStep();
  }

  /** Resolves once every queued async handler has settled; for tests. */
  settled(): Promise<void> {
    return this.inflight;
  }

  // -- shared plumbing ------------------------------------------------

  private run(task: () => Promise<void>): void {
    this.inflight = this.inflight.then(task).catch((err) => {
      const { message, flavor } = describeError(err);
      this.notice(message, flavor);
    });
  }

  private render(html: string): void {
    this.dropCaptures();
    this.root.innerHTML = html;
  }

  private dropCaptures(): void {
    this.usernameCapture?.detach();
    this.passwordCapture?.detach();
    this.usernameCapture = null;
    this.passwordCapture = null;
  }

  private element<T extends HTMLElement>(id: string): T {
    const el = this.root.querySelector<T>(`#${id}`);
    if (el === null) {
      throw new Error(`missing element #${id}`);
    }
    return el;
  }

  private notice(message: string, flavor: NoticeFlavor = "info"): void {
    const el = this.root.querySelector<HTMLElement>(".notice");
    if (el === null) {
      return;
    }
    el.textContent = message;
    el.dataset.flavor = flavor;
    el.hidden = message === "";
  }

  private riskLine(risk: RiskReport): string {
    let line = `risk degree: ${risk.degree}`;
    if (risk.distance !== null && risk.thresholds !== null) {
      line += ` (distance ${risk.distance.toFixed(3)}, allowed ${risk.thresholds.t1.toFixed(3)})`;
    }
    return line;
  }

  private context(): SessionContext {
    return { geo: this.geo, timezone: this.timezone, device_id: this.deviceId };
  }

  // -- step 1: username pre-check --------------------------------------

  private showUsernameStep(): void {
    this.render(`
      <section class="panel" data-view="username">
        <h1>Sign in</h1>
        <form id="username-form">
          <label>Username <input id="username-input" autocomplete="off" autofocus></label>
          <button id="continue-btn" type="submit">Continue</button>
        </form>
        <p class="notice" hidden></p>
        <p class="aside"><a id="enroll-link" href="#">Enroll a new user (demo)</a></p>
      </section>
    `);
    const input = this.element<HTMLInputElement>("username-input");
    this.element<HTMLFormElement>("username-form").addEventListener("submit", (event) => {
      event.preventDefault();
      const username = input.value.trim();
      if (username === "") {
        this.notice("enter a username", "info");
        return;
      }
      this.run(async () => {
        const exists = await this.api.usernameExists(username);
        if (!exists) {
          this.notice("unknown username", "client");
          return;
        }
        this.usernameClaim = username;
        this.showLoginStep();
      });
    });
    this.element<HTMLAnchorElement>("enroll-link").addEventListener("click", (event) => {
      event.preventDefault();
      this.showEnrollStep();
    });
  }

  // -- step 2: captured credential entry --------------------------------

  private credentialFormHtml(submitLabel: string): string {
    return `
      <label>Username <input id="login-username" autocomplete="off"></label>
      <label>Password <input id="login-password" type="password" autocomplete="off"></label>
      <details>
        <summary>Capture context</summary>
        <label>Location <input id="geo-input"></label>
        <label>Device <input id="device-input"></label>
        <p class="aside">Timezone: <span id="tz-span"></span></p>
      </details>
      <button id="submit-btn" type="submit">${submitLabel}</button>
    `;
  }

  private attachCredentialCaptures(): { username: HTMLInputElement; password: HTMLInputElement } {
    const usernameInput = this.element<HTMLInputElement>("login-username");
    const passwordInput = this.element<HTMLInputElement>("login-password");
    const onNotice = (n: { message: string }) => this.notice(n.message, "info");
    this.usernameCapture = new FieldCapture(usernameInput, { clock: this.clock, onNotice });
    this.passwordCapture = new FieldCapture(passwordInput, { clock: this.clock, onNotice });
    // Editing the username after password keystrokes exist would interleave
    // the shared timeline; reset both buffers and start the entry over.
    usernameInput.addEventListener("keydown", () => {
      if (this.passwordCapture !== null && this.passwordCapture.events.length > 0) {
        this.resetCredentialEntry(usernameInput, passwordInput);
        this.notice("username edited after the password; please retype both fields", "info");
      }
    });
    this.element<HTMLInputElement>("geo-input").value = this.geo;
    this.element<HTMLInputElement>("device-input").value = this.deviceId;
    this.element<HTMLSpanElement>("tz-span").textContent = this.timezone;
    return { username: usernameInput, password: passwordInput };
  }

  private resetCredentialEntry(
    usernameInput: HTMLInputElement,
    passwordInput: HTMLInputElement,
  ): void {
    this.usernameCapture?.clear();
    this.passwordCapture?.clear();
    usernameInput.value = "";
    passwordInput.value = "";
  }

  /**
   * Gate, assemble, and clear. Returns the document ready to send, or null
   * after surfacing the problem as a notice. Buffers and input values are
   * always gone once a document leaves this method.
   */
  private collectSessionDocument(
    claim: string,
    usernameInput: HTMLInputElement,
    passwordInput: HTMLInputElement,
  ): SessionDocument | null {
    const usernameCapture = this.usernameCapture;
    const passwordCapture = this.passwordCapture;
    if (usernameCapture === null || passwordCapture === null) {
      return null;
    }
    if (usernameCapture.events.length === 0 || passwordCapture.events.length === 0) {
      this.notice("type both the username and the password", "info");
      return null;
    }
    const openKeys = [...usernameCapture.openKeys, ...passwordCapture.openKeys];
    if (openKeys.length > 0) {
      this.resetCredentialEntry(usernameInput, passwordInput);
      this.notice(
        `missing key-up for ${openKeys.join(", ")}; please retype both fields`,
        "info",
      );
      return null;
    }
    this.geo = this.element<HTMLInputElement>("geo-input").value || this.geo;
    this.deviceId = this.element<HTMLInputElement>("device-input").value || this.deviceId;
    let doc: SessionDocument;
    try {
      doc = buildSessionDocument(
        claim,
        usernameCapture.events,
        passwordCapture.events,
        this.context(),
      );
    } catch (err) {
      this.resetCredentialEntry(usernameInput, passwordInput);
      if (err instanceof CaptureOrderError) {
        this.notice(err.message, "info");
        return null;
      }
      throw err;
    } finally {
      // No credential characters stay client-side once assembly was attempted.
      this.resetCredentialEntry(usernameInput, passwordInput);
    }
    const problems = validateSessionDocument(doc);
    if (problems.length > 0) {
      this.notice(`capture invalid: ${problems[0]}`, "info");
      return null;
    }
    return doc;
  }

  private showLoginStep(noticeText = ""): void {
    this.render(`
      <section class="panel" data-view="login">
        <h1>Verify it's you</h1>
        <p>Type your username and password. Your typing rhythm is part of the check,
           so enter both by hand.</p>
        <form id="login-form">${this.credentialFormHtml("Sign in")}</form>
        <p class="notice" hidden></p>
        <p class="aside"><a id="restart-link" href="#">Start over</a></p>
      </section>
    `);
    const inputs = this.attachCredentialCaptures();
    if (noticeText !== "") {
      this.notice(noticeText, "info");
    }
    this.element<HTMLAnchorElement>("restart-link").addEventListener("click", (event) => {
      event.preventDefault();
      this.showUsernameStep();
    });
    const submitBtn = this.element<HTMLButtonElement>("submit-btn");
    this.element<HTMLFormElement>("login-form").addEventListener("submit", (event) => {
      event.preventDefault();
      const doc = this.collectSessionDocument(this.usernameClaim, inputs.username, inputs.password);
      if (doc === null) {
        return;
      }
      submitBtn.disabled = true;
      this.run(async () => {
        let result: AttemptResult;
        try {
          result = await this.api.submitAttempt(doc);
        } catch (err) {
          submitBtn.disabled = false;
          const { message, flavor } = describeError(err);
          this.notice(message, flavor);
          return;
        }
        if (result.outcome === "granted") {
          this.showGranted(result.risk);
        } else if (result.challenge.kind === "otp") {
          this.showOtpChallenge(result.challenge.id, result.risk);
        } else {
          this.showOobChallenge(result.challenge.id, result.risk);
        }
      });
    });
  }

  // -- challenges -------------------------------------------------------

  private showOtpChallenge(challengeId: string, risk: RiskReport): void {
    this.render(`
      <section class="panel" data-view="otp">
        <h1>One-time password</h1>
        <p class="risk" id="risk-line"></p>
        <p>Your typing didn't quite match the usual rhythm. A six-digit code was
           sent to your enrolled device; enter it below.</p>
        <form id="otp-form">
          <label>Code <input id="otp-code" inputmode="numeric" autocomplete="one-time-code"></label>
          <button id="otp-submit" type="submit">Verify</button>
        </form>
        <p class="notice" hidden></p>
      </section>
    `);
    this.element<HTMLParagraphElement>("risk-line").textContent = this.riskLine(risk);
    const codeInput = this.element<HTMLInputElement>("otp-code");
    this.element<HTMLFormElement>("otp-form").addEventListener("submit", (event) => {
      event.preventDefault();
      const code = codeInput.value.trim();
      if (code === "") {
        this.notice("enter the code", "info");
        return;
      }
      codeInput.value = "";
      this.run(async () => {
        try {
          await this.api.answerOtp(challengeId, code);
        } catch (err) {
          if (err instanceof ApiError && err.reason === "invalid-code") {
            this.notice("code incorrect; try again", "client");
            return;
          }
          if (err instanceof NetworkError) {
            this.notice(err.message, "network");
            return;
          }
          const { message } = describeError(err);
          this.showLoginStep(`challenge not satisfied (${message}); sign in again`);
          return;
        }
        this.showGranted(risk, "granted after one-time password");
      });
    });
  }

  private showOobChallenge(challengeId: string, risk: RiskReport): void {
    this.render(`
      <section class="panel" data-view="oob">
        <h1>Out-of-band approval</h1>
        <p class="risk" id="risk-line"></p>
        <p id="oob-state" class="pending">Approval pending on your enrolled device&hellip;</p>
        <p class="aside">Demo: the delivery outbox receives an approval link ending in
           <code>?token=&hellip;</code>; paste that token here to play the second device.</p>
        <form id="oob-form">
          <label>Approval token <input id="oob-token" autocomplete="off"></label>
          <button id="oob-approve" type="submit">Approve</button>
        </form>
        <p class="notice" hidden></p>
      </section>
    `);
    this.element<HTMLParagraphElement>("risk-line").textContent = this.riskLine(risk);
    const tokenInput = this.element<HTMLInputElement>("oob-token");
    this.element<HTMLFormElement>("oob-form").addEventListener("submit", (event) => {
      event.preventDefault();
      const token = tokenInput.value.trim();
      if (token === "") {
        this.notice("enter the approval token", "info");
        return;
      }
      tokenInput.value = "";
      this.run(async () => {
        try {
          await this.api.approveOob(challengeId, token);
        } catch (err) {
          if (err instanceof NetworkError) {
            this.notice(err.message, "network");
            return;
          }
          // The approval is single-shot: any rejection sends the user back
          // to the login form to start a fresh attempt.
          const { message } = describeError(err);
          this.showLoginStep(`approval failed (${message}); sign in again`);
          return;
        }
        this.showGranted(risk, "granted after out-of-band approval");
      });
    });
  }

  // -- terminal views -----------------------------------------------------

  private showGranted(risk: RiskReport, subtitle = ""): void {
    this.render(`
      <section class="panel" data-view="granted">
        <h1>Access granted</h1>
        <p id="granted-subtitle" class="aside"></p>
        <p class="risk" id="risk-line"></p>
        <p class="aside"><a id="restart-link" href="#">Sign out</a></p>
      </section>
    `);
    this.element<HTMLParagraphElement>("granted-subtitle").textContent = subtitle;
    this.element<HTMLParagraphElement>("risk-line").textContent = this.riskLine(risk);
    this.element<HTMLAnchorElement>("restart-link").addEventListener("click", (event) => {
      event.preventDefault();
      this.showUsernameStep();
    });
  }

  // -- demo enrollment ------------------------------------------------------

  private showEnrollStep(): void {
    this.pendingSessions = [];
    this.render(`
      <section class="panel" data-view="enroll">
        <h1>Enroll (demo)</h1>
        <p>Type the same username and password, then press <em>Capture session</em>.
           Repeat until enough sessions are recorded; vary your pace a little so the
           profile learns your real range.</p>
        <form id="enroll-form">${this.credentialFormHtml("Capture session")}</form>
        <p class="aside">Sessions captured: <span id="session-count">0</span></p>
        <button id="enroll-btn" disabled>Enroll</button>
        <p class="notice" hidden></p>
        <p class="aside"><a id="back-link" href="#">Back to sign in</a></p>
      </section>
    `);
    const inputs = this.attachCredentialCaptures();
    const countSpan = this.element<HTMLSpanElement>("session-count");
    const enrollBtn = this.element<HTMLButtonElement>("enroll-btn");
    let username = "";
    let password = "";

    this.element<HTMLFormElement>("enroll-form").addEventListener("submit", (event) => {
      event.preventDefault();
      const claim = inputs.username.value.trim();
      if (claim === "") {
        this.notice("type the username to enroll", "info");
        return;
      }
      if (this.pendingSessions.length === 0) {
        username = claim;
        password = inputs.password.value;
      } else if (claim !== username || inputs.password.value !== password) {
        this.resetCredentialEntry(inputs.username, inputs.password);
        this.notice("every session must repeat the same credentials", "info");
        return;
      }
      const doc = this.collectSessionDocument(claim, inputs.username, inputs.password);
      if (doc === null) {
        return;
      }
      this.pendingSessions.push(doc);
      countSpan.textContent = String(this.pendingSessions.length);
      enrollBtn.disabled = false;
      this.notice(`captured session ${this.pendingSessions.length}; type the credentials again`, "info");
      inputs.username.focus();
    });

    enrollBtn.addEventListener("click", () => {
      enrollBtn.disabled = true;
      this.run(async () => {
        let trained: number;
        try {
          trained = await this.api.enroll(username, password, this.pendingSessions);
        } catch (err) {
          enrollBtn.disabled = false;
          const { message, flavor } = describeError(err);
          this.notice(message, flavor);
          return;
        }
        this.pendingSessions = [];
        username = "";
        password = "";
        this.showUsernameStep();
        this.notice(`enrolled on ${trained} sessions; sign in to try it`, "info");
      });
    });

    this.element<HTMLAnchorElement>("back-link").addEventListener("click", (event) => {
      event.preventDefault();
      this.pendingSessions = [];
      this.showUsernameStep();
    });
  }
}
