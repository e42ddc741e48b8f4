/**
 * Exact money handling. The gateway sends cents as decimal strings (they
 * may exceed Number.MAX_SAFE_INTEGER), so everything goes through BigInt;
 * no floats anywhere.
 */

const CENTS_RE = /^\d+$/;
const EURO_RE = /^(\d+)(?:[.,](\d{1,2}))?$/;

export function parseCents(wire: string): bigint {
  if (!CENTS_RE.test(wire)) {
    throw new Error(`not a cents value: ${JSON.stringify(wire)}`);
  }
  return BigInt(wire);
}

/** "123456" cents -> "1234.56 €" (plain dot decimal, always two digits). */
export function formatCents(cents: bigint | string): string {
  const value = typeof cents === "string" ? parseCents(cents) : cents;
  if (value < 0n) {
    throw new Error("negative amounts cannot occur");
  }
  const euros = value / 100n;
  const rest = value % 100n;
  return `${euros}.${rest.toString().padStart(2, "0")} €`;
}

/**
 * Parse operator input like "400", "400.5", "400.50" or "400,50" into
 * cents. Rejects empty input, negatives and sub-cent precision; the form
 * layer turns the exception message into a client-side validation error.
 */
export function parseEuroToCents(input: string): bigint {
  const trimmed = input.trim();
  if (trimmed === "") {
    throw new Error("amount is required");
  }
  const match = EURO_RE.exec(trimmed);
  if (!match) {
    throw new Error(`not a euro amount: ${JSON.stringify(input)}`);
  }
  const euros = BigInt(match[1]!);
  const fraction = match[2] ?? "";
  const cents = BigInt(fraction.padEnd(2, "0") || "0");
  return euros * 100n + cents;
}

/** Sum wire cents values exactly. */
export function sumCents(values: Iterable<string>): bigint {
  let total = 0n;
  for (const v of values) {
    total += parseCents(v);
  }
  return total;
}
