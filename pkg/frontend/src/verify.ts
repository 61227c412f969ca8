/**
 * Verification page: challenge -> captured signature -> decision screen.
 * Accepted shows the score and the account landing stub; rejected and
 * blocked render distinct states (blocked offers no retry).
 */

import { ApiClient, ServerError } from "./api.js";
import { CapturePad } from "./capture.js";
import { sampleProblems } from "./wire.js";

export class VerifyFlow {
  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private pad: CapturePad,
  ) {}

  async submit(username: string): Promise<void> {
    const sample = this.pad.buffer.toSample();
    const problems = sampleProblems(sample);
    if (problems.length > 0) {
      this.root.innerHTML = `<div class="result result-error" data-state="invalid">
        Capture invalid: ${problems[0]}</div>`;
      return;
    }
    try {
      const { nonce } = await this.api.challenge(username);
      const decision = await this.api.verify(username, sample, nonce);
      this.pad.clear();
      if (decision.accepted) {
        this.root.innerHTML = `
          <div class="result result-accepted" data-state="accepted">
            <h3>Welcome, ${username}</h3>
            <p>Signature accepted (score ${decision.score.toFixed(3)}).</p>
            <p class="account-stub">You now have access to your account.</p>
          </div>`;
      } else {
        this.root.innerHTML = `
          <div class="result result-rejected" data-state="rejected">
            <h3>Rejected</h3>
            <p>The signature did not match (score ${decision.score.toFixed(3)}).
            You can try again.</p>
            <button class="retry">Try again</button>
          </div>`;
      }
    } catch (err) {
      this.renderError(err, username);
    }
  }

  private renderError(err: unknown, username: string): void {
    if (err instanceof ServerError && err.code === "UserBlocked") {
      this.root.innerHTML = `
        <div class="result result-blocked" data-state="blocked">
          <h3>Account blocked</h3>
          <p>Too many failed attempts for ${username}. Contact an administrator
          to restore access.</p>
        </div>`;
      return;
    }
    const code = err instanceof ServerError ? err.code : "Error";
    const detail = err instanceof ServerError ? err.detail : String(err);
    this.root.innerHTML = `<div class="result result-error" data-state="error">
      ${code}${detail ? `: ${detail}` : ""}</div>`;
  }
}
