/**
 * Page wiring: three hash tabs (Sign in, Enroll, Admin) sharing one capture
 * pad. Served as static files by the verification server or any static
 * host; API calls go to the same origin by default.
 */

import { AdminPanel } from "./admin.js";
import { ApiClient } from "./api.js";
import { attachCapture } from "./capture.js";
import { EnrollmentWizard } from "./enroll.js";
import { VerifyFlow } from "./verify.js";

export function boot(root: HTMLElement, apiBase = ""): void {
  const api = new ApiClient(apiBase);
  root.innerHTML = `
    <header>
      <h1>Signature access</h1>
      <nav>
        <a href="#verify" data-tab="verify">Sign in</a>
        <a href="#enroll" data-tab="enroll">Enroll</a>
        <a href="#admin" data-tab="admin">Admin</a>
      </nav>
    </header>
    <section id="pad-section">
      <canvas id="pad" width="640" height="280"></canvas>
      <div class="pad-controls">
        <button id="clear">Clear</button>
      </div>
    </section>
    <section id="tab-verify" class="tab">
      <input id="verify-username" placeholder="username" autocomplete="username">
      <button id="verify-submit">Sign in with this signature</button>
      <div id="verify-result"></div>
    </section>
    <section id="tab-enroll" class="tab" hidden>
      <input id="enroll-username" placeholder="username">
      <input id="enroll-password" type="password" placeholder="temporary password" autocomplete="off">
      <button id="enroll-start">Check status</button>
      <button id="enroll-submit">Submit this signature</button>
      <div id="enroll-progress"></div>
    </section>
    <section id="tab-admin" class="tab" hidden>
      <div id="admin-root"></div>
    </section>`;

  const canvas = root.querySelector<HTMLCanvasElement>("#pad")!;
  const pad = attachCapture(canvas);
  root.querySelector("#clear")?.addEventListener("click", () => pad.clear());

  const verifyFlow = new VerifyFlow(root.querySelector("#verify-result")!, api, pad);
  root.querySelector("#verify-submit")?.addEventListener("click", () => {
    const username = root.querySelector<HTMLInputElement>("#verify-username")!.value.trim();
    void verifyFlow.submit(username);
  });

  let wizard: EnrollmentWizard | null = null;
  const makeWizard = () => {
    const username = root.querySelector<HTMLInputElement>("#enroll-username")!.value.trim();
    const password = root.querySelector<HTMLInputElement>("#enroll-password")!.value;
    if (!wizard || wizard.username !== username) {
      wizard = new EnrollmentWizard(
        root.querySelector("#enroll-progress")!, api, pad, username, password,
      );
    }
    return wizard;
  };
  root.querySelector("#enroll-start")?.addEventListener("click", () => {
    void makeWizard().refresh();
  });
  root.querySelector("#enroll-submit")?.addEventListener("click", () => {
    void makeWizard().submit();
  });

  new AdminPanel(root.querySelector("#admin-root")!, api);

  function showTab(): void {
    const tab = (location.hash || "#verify").slice(1);
    for (const name of ["verify", "enroll", "admin"]) {
      const section = root.querySelector<HTMLElement>(`#tab-${name}`);
      if (section) section.hidden = name !== tab;
    }
  }
  window.addEventListener("hashchange", showTab);
  showTab();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot(document.getElementById("app")!);
}
