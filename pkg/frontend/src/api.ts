/**
 * Typed client for the gateway. Bodies are canonical records: integer
 * fields travel as decimal strings in both directions.
 */

export interface BalancesRecord {
  actor: string;
  roles: string[];
  investor_unfrozen: string;
  investor_frozen: string;
  operator: Record<string, string>;
  operator_total: string;
}

export type NodeKind = "Mint" | "Transfer" | "Redeem";

export interface TreeNodeRecord {
  node_id: string;
  parent: string | null;
  kind: NodeKind;
  actor_from: string;
  actor_to: string;
  amount: string;
  event_seq: string;
}

export interface TreeRecord {
  credit_code: string;
  nodes: TreeNodeRecord[];
}

export interface AlertRecord {
  rule_id: string;
  severity: "warning" | "critical";
  subjects: string[];
  evidence: string[];
  detected_at: string;
}

export interface ForecastRecord {
  horizon: string;
  period_length: string;
  values: string[];
  method: string;
}

export interface JournalRecord {
  seq: string;
  timestamp: string;
  actor: string;
  op: string;
  payload: Record<string, unknown>;
  prev_hash: string;
  hash: string;
}

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly details?: unknown,
  ) {
    super(message);
  }
}

async function decode(response: Response): Promise<any> {
  const body = await response.json();
  if (!response.ok) {
    const err = (body as any)?.error ?? {};
    throw new ApiError(err.code ?? `Http${response.status}`, err.message ?? response.statusText, err.details);
  }
  return body;
}

export class GatewayClient {
  constructor(readonly baseUrl: string) {}

  private async post(path: string, payload: unknown): Promise<any> {
    const response = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    return decode(response);
  }

  private async get(path: string): Promise<any> {
    return decode(await fetch(this.baseUrl + path));
  }

  registerActor(id: string, roles: string[]) {
    return this.post("/actors", { id, roles });
  }

  mintInvestor(fi: string, beneficiary: string, amountCents: bigint) {
    return this.post("/investor/mint", { fi, beneficiary, amount: amountCents.toString() });
  }

  mintOperator(fi: string, to: string, amountCents: bigint, creditCode: string) {
    return this.post("/operator/mint", { fi, to, amount: amountCents.toString(), credit_code: creditCode });
  }

  transferOperator(from: string, to: string, batchId: string, amountCents: bigint) {
    return this.post("/operator/transfer", { from, to, batch_id: batchId, amount: amountCents.toString() });
  }

  redeemOperator(holder: string, fi: string, batchId: string, amountCents: bigint) {
    return this.post("/operator/redeem", { holder, fi, batch_id: batchId, amount: amountCents.toString() });
  }

  invoiceDiscount(customer: string, property: string, contractor: string, invoiceCents: bigint, year: number) {
    return this.post("/credits/invoice-discount", {
      customer,
      property,
      contractor,
      invoice_total: invoiceCents.toString(),
      year: year.toString(),
    });
  }

  closeFund(fi: string) {
    return this.post("/fund/close", { fi });
  }

  balances(actor: string): Promise<BalancesRecord> {
    return this.get(`/balances/${encodeURIComponent(actor)}`);
  }

  unfrozenBalance(): Promise<{ amount: string }> {
    return this.get("/investor/unfrozen-balance");
  }

  creditTree(code: string): Promise<TreeRecord> {
    return this.get(`/credits/${encodeURIComponent(code)}/tree`);
  }

  alerts(sinceSeq = 0): Promise<{ alerts: AlertRecord[]; head_seq: string }> {
    return this.get(`/alerts?since_seq=${sinceSeq}`);
  }

  forecast(horizon: number): Promise<ForecastRecord> {
    return this.get(`/forecast?horizon=${horizon}`);
  }

  journal(fromSeq = 0): Promise<{ records: JournalRecord[]; head_seq: string }> {
    return this.get(`/journal?from_seq=${fromSeq}`);
  }

  healthz(): Promise<{ status: string; head_seq: string; closed: boolean }> {
    return this.get("/healthz");
  }
}
