/**
 * Admin dashboard: user table with unblock buttons, auto-refreshing
 * transaction tail (attack_detected rows highlighted), and a config form
 * validated client-side before it is sent. The admin token is held only in
 * this object; a 401 drops back to the login prompt.
 */

import { ApiClient, ServerError } from "./api.js";
import { SystemConfig, TransactionRecord, UserSummary, configProblems } from "./wire.js";

const EDITABLE_FIELDS: (keyof SystemConfig)[] = [
  "max_failures",
  "accept_threshold",
  "update_rule",
  "enroll_count",
  "session_split",
  "min_session_gap",
  "nonce_ttl",
  "attended_enrollment",
];

export class AdminPanel {
  private token: string | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  users: UserSummary[] = [];
  transactions: TransactionRecord[] = [];
  config: SystemConfig | null = null;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private refreshMs = 3000,
  ) {
    this.renderLogin();
  }

  async login(token: string): Promise<boolean> {
    this.token = token;
    try {
      await this.reload();
    } catch (err) {
      this.token = null;
      this.renderLogin(err instanceof ServerError ? err.code : String(err));
      return false;
    }
    this.startPolling();
    return true;
  }

  logout(): void {
    this.stopPolling();
    this.token = null; // never persisted anywhere else
    this.renderLogin();
  }

  async reload(): Promise<void> {
    if (!this.token) throw new ServerError(401, { error: "NotAdmin", detail: "no token" });
    const [users, config, transactions] = await Promise.all([
      this.api.users(this.token),
      this.api.getConfig(this.token),
      this.api.transactions(this.token, 25),
    ]);
    this.users = users.users;
    this.config = config;
    this.transactions = transactions.transactions;
    this.render();
  }

  async unblock(username: string): Promise<void> {
    if (!this.token) return;
    try {
      await this.api.unblock(this.token, username);
      await this.reload();
    } catch (err) {
      this.showMessage(err instanceof ServerError ? err.code : String(err));
    }
  }

  /** Validate and submit a config delta; returns problems shown to the user. */
  async saveConfig(delta: Partial<SystemConfig>): Promise<string[]> {
    const merged = { ...(this.config ?? {}), ...delta };
    const problems = configProblems(merged as Partial<SystemConfig>);
    if (problems.length > 0) {
      this.showMessage(problems.join("; "));
      return problems;
    }
    if (!this.token) return ["not logged in"];
    try {
      this.config = await this.api.putConfig(this.token, delta);
      this.render();
      return [];
    } catch (err) {
      if (err instanceof ServerError && err.status === 401) this.logout();
      const message = err instanceof ServerError ? `${err.code}: ${err.detail}` : String(err);
      this.showMessage(message);
      return [message];
    }
  }

  startPolling(): void {
    this.stopPolling();
    this.timer = setInterval(() => {
      this.refreshTransactions().catch(() => undefined);
    }, this.refreshMs);
  }

  stopPolling(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  async refreshTransactions(): Promise<void> {
    if (!this.token) return;
    try {
      const { transactions } = await this.api.transactions(this.token, 25);
      this.transactions = transactions;
      this.renderTransactions();
    } catch (err) {
      if (err instanceof ServerError && err.status === 401) this.logout();
      else throw err;
    }
  }

  // -- rendering -------------------------------------------------------

  private renderLogin(problem = ""): void {
    this.stopPolling();
    this.root.innerHTML = `
      <div class="admin-login" data-state="login">
        <h3>Administrator</h3>
        ${problem ? `<p class="banner" data-kind="error">${problem}</p>` : ""}
        <input type="password" class="admin-token" placeholder="admin token" autocomplete="off">
        <button class="admin-login-btn">Sign in</button>
      </div>`;
    const button = this.root.querySelector<HTMLButtonElement>(".admin-login-btn");
    const input = this.root.querySelector<HTMLInputElement>(".admin-token");
    button?.addEventListener("click", () => {
      void this.login(input?.value ?? "");
    });
  }

  private render(): void {
    if (!this.config) return;
    this.root.innerHTML = `
      <div class="admin-panel" data-state="panel">
        <div class="admin-message banner" hidden></div>
        <h3>Users</h3>
        <table class="user-table">
          <thead><tr>
            <th>name</th><th>phase</th><th>last success</th>
            <th>failures</th><th>blocked</th><th></th>
          </tr></thead>
          <tbody></tbody>
        </table>
        <h3>Configuration</h3>
        <form class="config-form"></form>
        <h3>Recent transactions</h3>
        <table class="txn-table"><tbody></tbody></table>
      </div>`;
    this.renderUsers();
    this.renderConfigForm();
    this.renderTransactions();
  }

  private renderUsers(): void {
    const tbody = this.root.querySelector(".user-table tbody");
    if (!tbody) return;
    tbody.innerHTML = this.users
      .map((u) => {
        const last = u.last_success_at === null ? "—" : new Date(u.last_success_at * 1000).toISOString();
        const unblock = u.blocked
          ? `<button class="unblock" data-username="${u.username}">unblock</button>`
          : "";
        return `<tr data-username="${u.username}" data-blocked="${u.blocked}">
          <td>${u.username}</td><td>${u.phase}</td><td>${last}</td>
          <td>${u.consecutive_failures}</td><td>${u.blocked}</td><td>${unblock}</td>
        </tr>`;
      })
      .join("");
    tbody.querySelectorAll<HTMLButtonElement>("button.unblock").forEach((btn) => {
      btn.addEventListener("click", () => {
        void this.unblock(btn.dataset.username ?? "");
      });
    });
  }

  private renderConfigForm(): void {
    const form = this.root.querySelector<HTMLFormElement>(".config-form");
    if (!form || !this.config) return;
    form.innerHTML =
      EDITABLE_FIELDS.map((key) => {
        const value = this.config![key];
        return `<label>${key}
          <input name="${key}" value="${value}" data-type="${typeof value}">
        </label>`;
      }).join("") + `<button type="submit">apply</button>`;
    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      const delta: Record<string, unknown> = {};
      form.querySelectorAll<HTMLInputElement>("input").forEach((input) => {
        const kind = input.dataset.type;
        if (kind === "number") delta[input.name] = Number(input.value);
        else if (kind === "boolean") delta[input.name] = input.value === "true";
        else delta[input.name] = input.value;
      });
      void this.saveConfig(delta as Partial<SystemConfig>);
    });
  }

  private renderTransactions(): void {
    const tbody = this.root.querySelector(".txn-table tbody");
    if (!tbody) return;
    tbody.innerHTML = this.transactions
      .slice()
      .reverse()
      .map((t) => {
        const attack = t.kind === "attack_detected";
        const score = t.normalized_score === null ? "—" : t.normalized_score.toFixed(3);
        return `<tr class="${attack ? "attack-row" : ""}" data-kind="${t.kind}">
          <td>${t.seq}</td><td>${t.kind}</td><td>${t.username}</td>
          <td>${t.outcome}</td><td>${score}</td><td>${t.detail}</td>
        </tr>`;
      })
      .join("");
  }

  private showMessage(text: string): void {
    const box = this.root.querySelector<HTMLElement>(".admin-message");
    if (box) {
      box.hidden = false;
      box.textContent = text;
    }
  }
}
