/**
 * Pure view functions: data in, HTML string out. Keeping them free of DOM
 * access makes every panel testable without a real browser and guarantees
 * a reload can rebuild the whole console from gateway responses alone.
 */

import type { AlertRecord, BalancesRecord, ForecastRecord, TreeNodeRecord, TreeRecord } from "./api.js";
import { formatCents, parseCents } from "./money.js";
import { childrenOf, conservationOk, rootOf } from "./tree.js";

export function escapeHtml(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

const esc = escapeHtml;

export function renderBalances(b: BalancesRecord): string {
  const operatorRows = Object.entries(b.operator)
    .map(
      ([code, amount]) =>
        `<tr><td>${esc(code)}</td><td class="num" data-credit="${esc(code)}">${formatCents(amount)}</td></tr>`,
    )
    .join("");
  return `<div class="card balances" data-actor="${esc(b.actor)}">
  <h3>${esc(b.actor)} <span class="roles">${b.roles.map(esc).join(", ")}</span></h3>
  <table>
    <tr><td>investor unfrozen</td><td class="num" data-field="investor_unfrozen">${formatCents(b.investor_unfrozen)}</td></tr>
    <tr><td>investor frozen</td><td class="num" data-field="investor_frozen">${formatCents(b.investor_frozen)}</td></tr>
    ${operatorRows}
    <tr class="total"><td>operator total</td><td class="num" data-field="operator_total">${formatCents(b.operator_total)}</td></tr>
  </table>
</div>`;
}

function renderNode(tree: TreeRecord, node: TreeNodeRecord, selected: string | null): string {
  const children = childrenOf(tree, node.node_id);
  const cls = `node kind-${node.kind.toLowerCase()}${node.node_id === selected ? " selected" : ""}`;
  const label =
    `<span class="${cls}" data-node-id="${esc(node.node_id)}">` +
    `${node.kind.toLowerCase()} ${esc(node.actor_from)}&rarr;${esc(node.actor_to)} ` +
    `<b>${formatCents(node.amount)}</b> <i>seq ${esc(node.event_seq)}</i></span>`;
  if (children.length === 0) {
    return `<li>${label}</li>`;
  }
  return `<li>${label}<ul>${children.map((c) => renderNode(tree, c, selected)).join("")}</ul></li>`;
}

export function renderTree(tree: TreeRecord, selected: string | null = null): string {
  if (tree.nodes.length === 0) {
    return `<div class="card tree"><p class="empty">no nodes</p></div>`;
  }
  const ok = conservationOk(tree);
  const badge = `<span class="badge ${ok ? "ok" : "bad"}" data-conservation="${ok}">${
    ok ? "conserved" : "conservation broken"
  }</span>`;
  const root = rootOf(tree);
  return `<div class="card tree" data-credit="${esc(tree.credit_code)}">
  <h3>credit ${esc(tree.credit_code)} ${badge}</h3>
  <ul class="tree-root">${renderNode(tree, root, selected)}</ul>
</div>`;
}

export function renderTracePath(path: TreeNodeRecord[]): string {
  if (path.length === 0) {
    return `<p class="empty">click a node to trace custody back to the mint</p>`;
  }
  const hops = path
    .map(
      (n) =>
        `<li>${n.kind.toLowerCase()} <b>${esc(n.actor_to)}</b> ${formatCents(n.amount)} <i>seq ${esc(n.event_seq)}</i></li>`,
    )
    .join("");
  return `<ol class="trace">${hops}</ol>`;
}

export function renderAlerts(alerts: AlertRecord[]): string {
  if (alerts.length === 0) {
    return `<p class="empty" data-alerts="0">no alerts</p>`;
  }
  const cards = alerts
    .map(
      (a) => `<div class="alert-card ${esc(a.severity)}" data-rule="${esc(a.rule_id)}">
  <h4>${esc(a.rule_id)} <span class="sev">${esc(a.severity)}</span></h4>
  <p>subjects: ${a.subjects.map(esc).join(", ")}</p>
  <p>evidence: seq ${a.evidence.map(esc).join(", seq ")}</p>
  <p class="when">detected at seq ${esc(a.detected_at)}</p>
</div>`,
    )
    .join("");
  return `<div data-alerts="${alerts.length}">${cards}</div>`;
}

export function renderForecast(f: ForecastRecord): string {
  const values = f.values.map((v) => parseCents(v));
  const max = values.reduce((m, v) => (v > m ? v : m), 1n);
  const bars = f.values
    .map((v, i) => {
      const pct = Number((parseCents(v) * 100n) / max);
      return `<div class="bar-row"><span class="bar-label">+${i + 1}</span>
  <div class="bar" style="width:${pct}%"></div>
  <span class="bar-value" data-period="${i + 1}">${formatCents(v)}</span></div>`;
    })
    .join("");
  return `<div class="card forecast">
  <h3>token demand forecast</h3>
  <p class="method">${esc(f.method)}, period length ${esc(f.period_length)}</p>
  ${bars}
</div>`;
}

export function renderOpResult(result: unknown): string {
  return `<span class="op-ok">ok ${esc(JSON.stringify(result))}</span>`;
}

export function renderOpError(code: string, message: string): string {
  return `<span class="op-error" data-code="${esc(code)}"><b>${esc(code)}</b> ${esc(message)}</span>`;
}

export function renderStale(stale: boolean, detail = ""): string {
  return stale
    ? `<span class="stale on" data-stale="true">stale data${detail ? `: ${esc(detail)}` : ""}</span>`
    : `<span class="stale" data-stale="false">live</span>`;
}

export function renderActorOptions(actors: string[], selected: string | null): string {
  return actors
    .map((a) => `<option value="${esc(a)}"${a === selected ? " selected" : ""}>${esc(a)}</option>`)
    .join("");
}
