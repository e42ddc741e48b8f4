/**
 * Console wiring: forms post to the gateway 1:1, panels poll it.
 *
 * The app keeps no state beyond the alert cursor, the chosen actor and the
 * credit code under inspection; a reload rebuilds every view from gateway
 * queries. Server rejections are rendered verbatim (code + message) next
 * to the form that caused them.
 */

import { ApiError, GatewayClient } from "./api.js";
import { parseEuroToCents } from "./money.js";
import {
  renderActorOptions,
  renderAlerts,
  renderBalances,
  renderForecast,
  renderOpError,
  renderOpResult,
  renderStale,
  renderTracePath,
  renderTree,
} from "./render.js";

type FormHandler = (fields: Record<string, string>) => Promise<unknown>;

export class ConsoleApp {
  readonly client: GatewayClient;
  alertCursor = 0;
  knownActors: string[] = [];
  currentActor: string | null = null;
  currentCredit: string | null = null;
  private journalCursor = 0;

  constructor(
    baseUrl: string,
    private readonly doc: Document,
  ) {
    this.client = new GatewayClient(baseUrl);
  }

  // -- forms ---------------------------------------------------------------

  private handlers(): Record<string, FormHandler> {
    const c = this.client;
    return {
      register: (f) => c.registerActor(f.id!, (f.roles ?? "").split(",").map((r) => r.trim()).filter(Boolean)),
      "investor-mint": (f) => c.mintInvestor(f.fi!, f.beneficiary!, parseEuroToCents(f.amount ?? "")),
      "operator-mint": (f) => c.mintOperator(f.fi!, f.to!, parseEuroToCents(f.amount ?? ""), f.credit_code!),
      transfer: (f) => c.transferOperator(f.from!, f.to!, f.batch_id!, parseEuroToCents(f.amount ?? "")),
      redeem: (f) => c.redeemOperator(f.holder!, f.fi!, f.batch_id!, parseEuroToCents(f.amount ?? "")),
      "invoice-discount": (f) =>
        c.invoiceDiscount(f.customer!, f.property!, f.contractor!, parseEuroToCents(f.invoice_total ?? ""), Number(f.year ?? "0")),
      "close-fund": (f) => c.closeFund(f.fi!),
    };
  }

  /** Submit one action form; returns the HTML outcome it rendered. */
  async submit(formName: string, fields: Record<string, string>): Promise<string> {
    const handler = this.handlers()[formName];
    if (!handler) {
      throw new Error(`unknown form ${formName}`);
    }
    let html: string;
    try {
      const result = await handler(fields);
      html = renderOpResult(result);
    } catch (err) {
      if (err instanceof ApiError) {
        html = renderOpError(err.code, err.message);
      } else if (err instanceof Error) {
        // Client-side validation (bad amount etc.): never reaches the wire.
        html = renderOpError("ClientValidation", err.message);
      } else {
        throw err;
      }
    }
    const out = this.doc.querySelector(`[data-result-for="${formName}"]`);
    if (out) {
      out.innerHTML = html;
    }
    return html;
  }

  wireForms(): void {
    for (const form of Array.from(this.doc.querySelectorAll<HTMLFormElement>("form[data-op]"))) {
      form.addEventListener("submit", (event) => {
        event.preventDefault();
        const fields: Record<string, string> = {};
        for (const input of Array.from(form.querySelectorAll<HTMLInputElement>("input[name],select[name]"))) {
          fields[input.name] = input.value;
        }
        void this.submit(form.dataset.op!, fields).then(() => this.refreshAll());
      });
    }
    const actorPicker = this.doc.querySelector<HTMLSelectElement>("#actor-picker");
    actorPicker?.addEventListener("change", () => {
      this.currentActor = actorPicker.value || null;
      void this.refreshBalances();
    });
    const treeForm = this.doc.querySelector<HTMLFormElement>("#tree-form");
    treeForm?.addEventListener("submit", (event) => {
      event.preventDefault();
      const input = treeForm.querySelector<HTMLInputElement>("input[name=credit_code]");
      this.currentCredit = input?.value.trim() || null;
      void this.refreshTree();
    });
  }

  // -- polling panels --------------------------------------------------------

  private setStale(panel: string, stale: boolean, detail = ""): void {
    const el = this.doc.querySelector(`[data-stale-for="${panel}"]`);
    if (el) {
      el.innerHTML = renderStale(stale, detail);
    }
  }

  private render(target: string, html: string): void {
    const el = this.doc.querySelector(target);
    if (el) {
      el.innerHTML = html;
    }
  }

  /** Discover actors from the journal's Register events (cursor-based). */
  async refreshActors(): Promise<void> {
    const body = await this.client.journal(this.journalCursor);
    for (const record of body.records) {
      if (record.op === "Register") {
        const id = (record.payload as { id?: string }).id;
        if (id && !this.knownActors.includes(id)) {
          this.knownActors.push(id);
        }
      }
      this.journalCursor = Math.max(this.journalCursor, Number(record.seq));
    }
    if (!this.currentActor && this.knownActors.length > 0) {
      this.currentActor = this.knownActors[0]!;
    }
    const picker = this.doc.querySelector("#actor-picker");
    if (picker) {
      picker.innerHTML = renderActorOptions(this.knownActors, this.currentActor);
    }
  }

  async refreshBalances(): Promise<void> {
    if (!this.currentActor) {
      return;
    }
    const balances = await this.client.balances(this.currentActor);
    this.render("#balances-panel", renderBalances(balances));
  }

  async refreshAlerts(): Promise<void> {
    // The cursor makes re-polling idempotent: only genuinely new alerts
    // come back, and rendering appends them to the feed.
    const body = await this.client.alerts(this.alertCursor);
    if (body.alerts.length > 0) {
      const feed = this.doc.querySelector("#alerts-panel");
      const fresh = renderAlerts(body.alerts);
      if (feed) {
        const empty = feed.querySelector("[data-alerts='0']");
        if (empty) {
          feed.innerHTML = fresh;
        } else {
          feed.insertAdjacentHTML("beforeend", fresh);
        }
      }
      this.alertCursor = Math.max(this.alertCursor, ...body.alerts.map((a) => Number(a.detected_at)));
    }
  }

  async refreshForecast(horizon = 3): Promise<void> {
    try {
      const forecast = await this.client.forecast(horizon);
      this.render("#forecast-panel", renderForecast(forecast));
      this.setStale("forecast", false);
    } catch (err) {
      if (err instanceof ApiError && err.code === "EmptyHistory") {
        this.render("#forecast-panel", `<p class="empty">no operator mints yet</p>`);
        this.setStale("forecast", false);
        return;
      }
      throw err;
    }
  }

  async refreshTree(): Promise<void> {
    if (!this.currentCredit) {
      return;
    }
    const tree = await this.client.creditTree(this.currentCredit);
    this.render("#tree-panel", renderTree(tree));
    // Node click -> custody path (wired here to keep render pure).
    const panel = this.doc.querySelector("#tree-panel");
    panel?.querySelectorAll<HTMLElement>("[data-node-id]").forEach((el) => {
      el.addEventListener("click", () => {
        void this.showTrace(el.dataset.nodeId!);
      });
    });
  }

  async showTrace(nodeId: string): Promise<void> {
    if (!this.currentCredit) {
      return;
    }
    const { traceToRoot } = await import("./tree.js");
    const tree = await this.client.creditTree(this.currentCredit);
    this.render("#trace-panel", renderTracePath(traceToRoot(tree, nodeId)));
  }

  async refreshAll(): Promise<void> {
    const jobs: Array<[string, Promise<void>]> = [
      ["actors", this.refreshActors()],
      ["balances", this.refreshBalances()],
      ["alerts", this.refreshAlerts()],
      ["forecast", this.refreshForecast()],
      ["tree", this.refreshTree()],
    ];
    for (const [panel, job] of jobs) {
      try {
        await job;
        this.setStale(panel, false);
      } catch (err) {
        this.setStale(panel, true, err instanceof Error ? err.message : String(err));
      }
    }
  }

  start(intervalMs = 2000): () => void {
    this.wireForms();
    void this.refreshAll();
    const timer = setInterval(() => void this.refreshAll(), intervalMs);
    return () => clearInterval(timer);
  }
}
