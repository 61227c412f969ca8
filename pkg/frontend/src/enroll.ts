/**
 * Enrollment wizard: shows "sample k of R, session 1/2", submits captured
 * signatures with the one-time temporary password, renders the
 * between-sessions wait state in human terms, and finishes on the
 * completion screen. Server error codes are surfaced verbatim.
 */

import { ApiClient, ServerError } from "./api.js";
import { CapturePad } from "./capture.js";
import { Progress, sampleProblems } from "./wire.js";

const SESSION_FOR_PHASE: Record<Progress["phase"], string> = {
  authorized: "1",
  session1: "1",
  await_session2: "2 (pending)",
  session2: "2",
  enrolled: "done",
};

export class EnrollmentWizard {
  status: Progress | null = null;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private pad: CapturePad,
    public username: string,
    private tempPassword: string,
  ) {}

  async refresh(): Promise<void> {
    try {
      this.status = await this.api.enrollStatus(this.username);
      this.render();
    } catch (err) {
      this.renderError(err);
    }
  }

  /** Submit whatever is in the capture buffer as the next enrollment sample. */
  async submit(): Promise<void> {
    const sample = this.pad.buffer.toSample();
    const problems = sampleProblems(sample);
    if (problems.length > 0) {
      this.renderBanner(`capture invalid: ${problems[0]}`, "error");
      return;
    }
    try {
      const { nonce } = await this.api.challenge(this.username);
      this.status = await this.api.enroll(this.username, this.tempPassword, sample, nonce);
      this.pad.clear();
      this.render();
    } catch (err) {
      this.renderError(err);
    }
  }

  private render(): void {
    const s = this.status;
    if (!s) return;
    if (s.enrolled) {
      this.root.innerHTML = `
        <div class="enroll-complete" data-state="enrolled">
          <h3>Enrollment complete</h3>
          <p>${this.username} can now sign in with a signature. The temporary
          password is no longer valid.</p>
        </div>`;
      return;
    }
    const total = s.collected + s.remaining;
    const session = SESSION_FOR_PHASE[s.phase];
    const wait =
      s.phase === "await_session2"
        ? `<p class="wait-note" data-state="awaiting-session2">First session done.
           Come back after the configured waiting period to provide the remaining
           ${s.remaining} signature(s).</p>`
        : "";
    this.root.innerHTML = `
      <div class="enroll-progress" data-phase="${s.phase}">
        <h3>Enrollment: sample ${Math.min(s.collected + 1, total)} of ${total}, session ${session}</h3>
        <p>${s.collected} collected, ${s.remaining} to go.</p>
        ${wait}
        <div class="banner" hidden></div>
      </div>`;
  }

  private renderBanner(message: string, kind: string): void {
    let banner = this.root.querySelector<HTMLElement>(".banner");
    if (!banner) {
      banner = document.createElement("div");
      banner.className = "banner";
      this.root.appendChild(banner);
    }
    banner.hidden = false;
    banner.dataset.kind = kind;
    banner.textContent = message;
  }

  private renderError(err: unknown): void {
    if (err instanceof ServerError) {
      if (err.code === "SessionGapNotElapsed") {
        this.renderBanner(
          `Too soon for the second session — ${err.detail || "please wait and try again"}.`,
          "wait",
        );
        return;
      }
      this.renderBanner(`${err.code}${err.detail ? `: ${err.detail}` : ""}`, "error");
      return;
    }
    this.renderBanner(String(err), "error");
  }
}
