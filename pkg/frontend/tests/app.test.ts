// @vitest-environment jsdom
import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ConsoleApp } from "../src/app.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

beforeEach(() => {
  document.body.innerHTML = `
    <form data-op="operator-mint">
      <input name="fi" value="bank1" />
      <input name="to" value="gc1" />
      <input name="amount" value="" />
      <input name="credit_code" value="C1" />
      <button>mint</button>
      <output data-result-for="operator-mint"></output>
    </form>
  `;
});

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("action forms", () => {
  it("converts 400.00 euro into a 40000-cent mint payload", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ batch_id: "B1", link_id: "L1" }));
    vi.stubGlobal("fetch", fetchMock);
    const app = new ConsoleApp("http://gateway.test", document);

    const html = await app.submit("operator-mint", { fi: "bank1", to: "gc1", amount: "400.00", credit_code: "C1" });

    expect(fetchMock).toHaveBeenCalledOnce();
    const [url, init] = fetchMock.mock.calls[0]! as unknown as [string, RequestInit];
    expect(url).toBe("http://gateway.test/operator/mint");
    expect(JSON.parse(init.body as string)).toEqual({ fi: "bank1", to: "gc1", amount: "40000", credit_code: "C1" });
    expect(html).toContain("op-ok");
    expect(document.querySelector('[data-result-for="operator-mint"]')!.innerHTML).toContain("B1");
  });

  it("rejects an empty amount client-side without touching the network", async () => {
    const fetchMock = vi.fn();
    vi.stubGlobal("fetch", fetchMock);
    const app = new ConsoleApp("http://gateway.test", document);

    const html = await app.submit("operator-mint", { fi: "bank1", to: "gc1", amount: "", credit_code: "C1" });

    expect(fetchMock).not.toHaveBeenCalled();
    expect(html).toContain("ClientValidation");
    expect(html).toContain("amount is required");
  });

  it("renders a server rejection verbatim next to the form", async () => {
    const fetchMock = vi.fn(async () =>
      jsonResponse(
        { error: { code: "InsufficientCoverage", message: "unfrozen investor balance 0 cannot back a mint of 40000" } },
        409,
      ),
    );
    vi.stubGlobal("fetch", fetchMock);
    const app = new ConsoleApp("http://gateway.test", document);

    await app.submit("operator-mint", { fi: "bank1", to: "gc1", amount: "400.00", credit_code: "C1" });

    const out = document.querySelector('[data-result-for="operator-mint"]')!;
    expect(out.querySelector('[data-code="InsufficientCoverage"]')).not.toBeNull();
    expect(out.textContent).toContain("unfrozen investor balance 0 cannot back a mint of 40000");
  });

  it("marks panels stale when the gateway is unreachable", async () => {
    document.body.innerHTML += `
      <span data-stale-for="actors"></span>
      <span data-stale-for="alerts"></span>
    `;
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => {
        throw new TypeError("fetch failed");
      }),
    );
    const app = new ConsoleApp("http://gateway.test", document);
    await app.refreshAll();
    expect(document.querySelector('[data-stale-for="actors"] [data-stale="true"]')).not.toBeNull();
    expect(document.querySelector('[data-stale-for="alerts"] [data-stale="true"]')).not.toBeNull();
  });

  it("submitting the DOM form goes through the same pipeline", async () => {
    const fetchMock = vi.fn(async (url: string) => {
      if (url.endsWith("/operator/mint")) {
        return jsonResponse({ batch_id: "B1" });
      }
      // Panel refreshes triggered after the submit.
      if (url.includes("/journal")) return jsonResponse({ records: [], head_seq: "0" });
      if (url.includes("/alerts")) return jsonResponse({ alerts: [], head_seq: "0" });
      if (url.includes("/forecast")) return jsonResponse({ error: { code: "EmptyHistory", message: "" } }, 409);
      return jsonResponse({});
    });
    vi.stubGlobal("fetch", fetchMock);
    const app = new ConsoleApp("http://gateway.test", document);
    app.wireForms();

    const form = document.querySelector<HTMLFormElement>('form[data-op="operator-mint"]')!;
    form.querySelector<HTMLInputElement>('input[name="amount"]')!.value = "25.50";
    form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    await vi.waitFor(() => {
      expect(document.querySelector('[data-result-for="operator-mint"]')!.textContent).toContain("B1");
    });
    const [, init] = fetchMock.mock.calls[0]! as unknown as [string, RequestInit];
    expect(JSON.parse(init.body as string).amount).toBe("2550");
  });
});
