import { beforeEach, describe, expect, it } from "vitest";

import type { AttemptResult, AuthClient, RiskReport } from "../src/api";
import { ApiError, NetworkError } from "../src/api";
import { LoginApp } from "../src/app";
import type { SessionDocument } from "../src/session";
import { validateSessionDocument } from "../src/session";
import { click, dispatchKey, FakeClock, submitForm, TypistSim } from "./typing";

const NORMAL_RISK: RiskReport = {
  global_pass: true,
  degree: "normal",
  recluster_k: 1,
  context_cluster: 0,
  distance: 0.04,
  thresholds: { t1: 0.1, t2: 0.2 },
};
const FIRST_RISK: RiskReport = { ...NORMAL_RISK, degree: "first_degree", distance: 0.15 };
const SECOND_RISK: RiskReport = {
  ...NORMAL_RISK,
  global_pass: false,
  degree: "second_degree",
  context_cluster: null,
  distance: null,
  thresholds: null,
};

const CADENCE = { dwellMean: 70, dwellStd: 3, flightMean: 85, flightStd: 5 };

interface Stub extends AuthClient {
  submitted: SessionDocument[];
  enrolled: Array<{ username: string; password: string; sessions: SessionDocument[] }>;
  calls: string[];
}

function makeStub(overrides: Partial<AuthClient> = {}): Stub {
  const stub: Stub = {
    submitted: [],
    enrolled: [],
    calls: [],
    async usernameExists() {
      stub.calls.push("usernameExists");
      return true;
    },
    async submitAttempt(doc) {
      stub.calls.push("submitAttempt");
      stub.submitted.push(doc);
      return { outcome: "granted", risk: NORMAL_RISK } as AttemptResult;
    },
    async answerOtp() {
      stub.calls.push("answerOtp");
    },
    async approveOob() {
      stub.calls.push("approveOob");
    },
    async enroll(username, password, sessions) {
      stub.calls.push("enroll");
      stub.enrolled.push({ username, password, sessions });
      return sessions.length;
    },
    ...overrides,
  };
  return stub;
}

let root: HTMLElement;
let clock: FakeClock;

function mount(api: AuthClient): LoginApp {
  document.body.innerHTML = "";
  root = document.createElement("div");
  document.body.appendChild(root);
  clock = new FakeClock();
  const app = new LoginApp(root, {
    api,
    clock: clock.fn(),
    timezone: "UTC",
    geo: "demo/local",
    deviceId: "browser-demo",
  });
  app.start();
  return app;
}

function view(): string {
  return root.querySelector("section")?.dataset.view ?? "";
}

function noticeText(): string {
  return root.querySelector(".notice")?.textContent ?? "";
}

function noticeFlavor(): string {
  return (root.querySelector(".notice") as HTMLElement | null)?.dataset.flavor ?? "";
}

function input(id: string): HTMLInputElement {
  const el = root.querySelector<HTMLInputElement>(`#${id}`);
  if (el === null) throw new Error(`missing #${id}`);
  return el;
}

function form(id: string): HTMLFormElement {
  const el = root.querySelector<HTMLFormElement>(`#${id}`);
  if (el === null) throw new Error(`missing #${id}`);
  return el;
}

async function toLoginStep(app: LoginApp, username = "ada"): Promise<void> {
  input("username-input").value = username;
  submitForm(form("username-form"));
  await app.settled();
}

function typeCredentials(seed: number, username = "ada", password = "pw1"): void {
  const typist = new TypistSim(CADENCE, seed, clock);
  typist.typeText(input("login-username"), username);
  clock.tick(300); // move focus to the password field
  typist.typeText(input("login-password"), password);
}

describe("username step", () => {
  it("moves to the login view for a known username", async () => {
    const app = mount(makeStub());
    await toLoginStep(app);
    expect(view()).toBe("login");
  });

  it("stays put with a notice for an unknown username", async () => {
    const app = mount(
      makeStub({
        async usernameExists() {
          return false;
        },
      }),
    );
    await toLoginStep(app, "ghost");
    expect(view()).toBe("username");
    expect(noticeText()).toContain("unknown username");
  });

  it("renders a network failure distinctly", async () => {
    const app = mount(
      makeStub({
        async usernameExists(): Promise<boolean> {
          throw new NetworkError();
        },
      }),
    );
    await toLoginStep(app);
    expect(view()).toBe("username");
    expect(noticeFlavor()).toBe("network");
  });
});

describe("login submission", () => {
  it("submits a valid document and shows the granted view", async () => {
    const stub = makeStub();
    const app = mount(stub);
    await toLoginStep(app);
    typeCredentials(7);
    submitForm(form("login-form"));
    await app.settled();

    expect(view()).toBe("granted");
    expect(root.querySelector("#risk-line")?.textContent).toContain("normal");
    expect(stub.submitted).toHaveLength(1);
    const doc = stub.submitted[0];
    expect(doc.username_claim).toBe("ada");
    expect(validateSessionDocument(doc)).toEqual([]);
  });

  it("clears buffers and input values before the request leaves", async () => {
    let valuesAtCall: [string, string] | null = null;
    const stub = makeStub();
    const submitAttempt = stub.submitAttempt.bind(stub);
    stub.submitAttempt = async (doc) => {
      valuesAtCall = [input("login-username").value, input("login-password").value];
      return submitAttempt(doc);
    };
    const app = mount(stub);
    await toLoginStep(app);
    typeCredentials(7);
    submitForm(form("login-form"));
    await app.settled();

    expect(valuesAtCall).toEqual(["", ""]);
  });

  it("keeps the login view on bad credentials and empties the buffers", async () => {
    const stub = makeStub({
      async submitAttempt(): Promise<AttemptResult> {
        throw new ApiError(403, "bad-credentials", "username or password incorrect");
      },
    });
    const app = mount(stub);
    await toLoginStep(app);
    typeCredentials(7);
    submitForm(form("login-form"));
    await app.settled();

    expect(view()).toBe("login");
    expect(noticeText()).toContain("username or password incorrect");
    expect(noticeFlavor()).toBe("client");

    // Buffers were cleared by the submission: a bare retry has nothing to send.
    const before = (stub as unknown as Stub).calls.length;
    submitForm(form("login-form"));
    await app.settled();
    expect((stub as unknown as Stub).calls).toHaveLength(before);
    expect(noticeText()).toContain("type both");
  });

  it("renders service errors and network errors differently", async () => {
    const app = mount(
      makeStub({
        async submitAttempt(): Promise<AttemptResult> {
          throw new ApiError(500, "http-500", "request failed with status 500");
        },
      }),
    );
    await toLoginStep(app);
    typeCredentials(7);
    submitForm(form("login-form"));
    await app.settled();
    expect(noticeFlavor()).toBe("server");
    expect(noticeText()).toContain("server error (500)");

    const app2 = mount(
      makeStub({
        async submitAttempt(): Promise<AttemptResult> {
          throw new NetworkError();
        },
      }),
    );
    await toLoginStep(app2);
    typeCredentials(7);
    submitForm(form("login-form"));
    await app2.settled();
    expect(noticeFlavor()).toBe("network");
  });

  it("refuses to submit while a key-up is missing", async () => {
    const stub = makeStub();
    const app = mount(stub);
    await toLoginStep(app);
    typeCredentials(7);
    dispatchKey(input("login-password"), "keydown", "q"); // held, never released
    submitForm(form("login-form"));
    await app.settled();

    expect(stub.submitted).toHaveLength(0);
    expect(noticeText()).toContain("missing key-up");
    expect(view()).toBe("login");
  });

  it("resets both buffers when the username is edited after the password", async () => {
    const stub = makeStub();
    const app = mount(stub);
    await toLoginStep(app);
    typeCredentials(7);
    dispatchKey(input("login-username"), "keydown", "x"); // go back and edit
    dispatchKey(input("login-username"), "keyup", "x");
    await app.settled();
    expect(noticeText()).toContain("retype");
    expect(input("login-password").value).toBe("");

    // A clean retype then submits a valid, monotonic document.
    typeCredentials(9);
    submitForm(form("login-form"));
    await app.settled();
    expect(view()).toBe("granted");
    expect(validateSessionDocument(stub.submitted[0])).toEqual([]);
  });

  it("surfaces the paste-blocked notice", async () => {
    const app = mount(makeStub());
    await toLoginStep(app);
    const event = new Event("paste", { bubbles: true, cancelable: true });
    input("login-password").dispatchEvent(event);
    expect(event.defaultPrevented).toBe(true);
    expect(noticeText()).toContain("pasting is disabled");
  });
});

describe("challenge flows", () => {
  function otpStub(answer: () => Promise<void>): Stub {
    return makeStub({
      async submitAttempt(): Promise<AttemptResult> {
        return {
          outcome: "challenge",
          challenge: { id: "ch-1", kind: "otp" },
          risk: FIRST_RISK,
        };
      },
      answerOtp: answer,
    });
  }

  it("walks first-degree risk through the OTP form to a grant", async () => {
    const app = mount(otpStub(async () => undefined));
    await toLoginStep(app);
    typeCredentials(7);
    submitForm(form("login-form"));
    await app.settled();

    expect(view()).toBe("otp");
    expect(root.querySelector("#risk-line")?.textContent).toContain("first_degree");

    input("otp-code").value = "123456";
    submitForm(form("otp-form"));
    await app.settled();
    expect(view()).toBe("granted");
    expect(root.querySelector("#granted-subtitle")?.textContent).toContain("one-time password");
  });

  it("keeps the OTP form open while attempts remain", async () => {
    const app = mount(
      otpStub(async () => {
        throw new ApiError(
          403,
          "challenge-failed",
          "challenge not satisfied: invalid-code",
          "invalid-code",
        );
      }),
    );
    await toLoginStep(app);
    typeCredentials(7);
    submitForm(form("login-form"));
    await app.settled();

    input("otp-code").value = "000000";
    submitForm(form("otp-form"));
    await app.settled();
    expect(view()).toBe("otp");
    expect(noticeText()).toContain("code incorrect");
  });

  it("returns to the login form once the OTP challenge is spent", async () => {
    const app = mount(
      otpStub(async () => {
        throw new ApiError(403, "challenge-failed", "challenge not satisfied: failed", "failed");
      }),
    );
    await toLoginStep(app);
    typeCredentials(7);
    submitForm(form("login-form"));
    await app.settled();

    input("otp-code").value = "000000";
    submitForm(form("otp-form"));
    await app.settled();
    expect(view()).toBe("login");
    expect(noticeText()).toContain("sign in again");
  });

  function oobStub(approve: () => Promise<void>): Stub {
    return makeStub({
      async submitAttempt(): Promise<AttemptResult> {
        return {
          outcome: "challenge",
          challenge: { id: "ch-2", kind: "oob" },
          risk: SECOND_RISK,
        };
      },
      approveOob: approve,
    });
  }

  it("shows the out-of-band waiting view and grants on approval", async () => {
    const app = mount(oobStub(async () => undefined));
    await toLoginStep(app);
    typeCredentials(7);
    submitForm(form("login-form"));
    await app.settled();

    expect(view()).toBe("oob");
    expect(root.querySelector("#oob-state")?.textContent).toContain("pending");
    expect(root.querySelector("#risk-line")?.textContent).toContain("second_degree");

    input("oob-token").value = "deadbeef";
    submitForm(form("oob-form"));
    await app.settled();
    expect(view()).toBe("granted");
    expect(root.querySelector("#granted-subtitle")?.textContent).toContain("out-of-band");
  });

  it("returns to the login form when the approval fails", async () => {
    const app = mount(
      oobStub(async () => {
        throw new ApiError(403, "challenge-failed", "challenge not satisfied: failed", "failed");
      }),
    );
    await toLoginStep(app);
    typeCredentials(7);
    submitForm(form("login-form"));
    await app.settled();

    input("oob-token").value = "wrong";
    submitForm(form("oob-form"));
    await app.settled();
    expect(view()).toBe("login");
    expect(noticeText()).toContain("approval failed");
  });

  it("stays on the approval view across a network blip", async () => {
    const app = mount(
      oobStub(async () => {
        throw new NetworkError();
      }),
    );
    await toLoginStep(app);
    typeCredentials(7);
    submitForm(form("login-form"));
    await app.settled();

    input("oob-token").value = "abc";
    submitForm(form("oob-form"));
    await app.settled();
    expect(view()).toBe("oob");
    expect(noticeFlavor()).toBe("network");
  });
});

describe("demo enrollment", () => {
  async function toEnroll(app: LoginApp): Promise<void> {
    click(root.querySelector("#enroll-link") as HTMLElement);
    await app.settled();
    expect(view()).toBe("enroll");
  }

  it("captures repeated sessions and enrolls them", async () => {
    const stub = makeStub();
    const app = mount(stub);
    await toEnroll(app);

    for (const seed of [1, 2]) {
      const typist = new TypistSim(CADENCE, seed, clock);
      typist.typeText(input("login-username"), "ada");
      clock.tick(300);
      typist.typeText(input("login-password"), "pw1");
      submitForm(form("enroll-form"));
      await app.settled();
    }
    expect(root.querySelector("#session-count")?.textContent).toBe("2");

    click(root.querySelector("#enroll-btn") as HTMLElement);
    await app.settled();
    expect(view()).toBe("username");
    expect(noticeText()).toContain("enrolled on 2 sessions");
    expect(stub.enrolled).toHaveLength(1);
    expect(stub.enrolled[0].username).toBe("ada");
    expect(stub.enrolled[0].sessions).toHaveLength(2);
    for (const doc of stub.enrolled[0].sessions) {
      expect(validateSessionDocument(doc)).toEqual([]);
    }
  });

  it("insists every captured session repeats the same credentials", async () => {
    const app = mount(makeStub());
    await toEnroll(app);

    const typist = new TypistSim(CADENCE, 1, clock);
    typist.typeText(input("login-username"), "ada");
    clock.tick(300);
    typist.typeText(input("login-password"), "pw1");
    submitForm(form("enroll-form"));
    await app.settled();

    const typist2 = new TypistSim(CADENCE, 2, clock);
    typist2.typeText(input("login-username"), "ada");
    clock.tick(300);
    typist2.typeText(input("login-password"), "different");
    submitForm(form("enroll-form"));
    await app.settled();

    expect(noticeText()).toContain("same credentials");
    expect(root.querySelector("#session-count")?.textContent).toBe("1");
  });
});
