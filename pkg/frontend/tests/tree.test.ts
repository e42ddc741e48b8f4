import { describe, expect, it } from "vitest";

import type { TreeRecord } from "../src/api.js";
import { childrenOf, compareNodeIds, conservationOk, rootOf, traceToRoot } from "../src/tree.js";

const FIXTURE: TreeRecord = {
  credit_code: "C1",
  nodes: [
    { node_id: "9:0", parent: null, kind: "Mint", actor_from: "bank1", actor_to: "gc1", amount: "100000", event_seq: "9" },
    { node_id: "10:0", parent: "9:0", kind: "Transfer", actor_from: "gc1", actor_to: "sup1", amount: "60000", event_seq: "10" },
    { node_id: "11:0", parent: "9:0", kind: "Transfer", actor_from: "gc1", actor_to: "arch1", amount: "40000", event_seq: "11" },
    { node_id: "12:0", parent: "10:0", kind: "Redeem", actor_from: "sup1", actor_to: "bank1", amount: "60000", event_seq: "12" },
  ],
};

describe("tree helpers", () => {
  it("finds the single root", () => {
    expect(rootOf(FIXTURE).node_id).toBe("9:0");
  });

  it("orders node ids numerically, not lexically", () => {
    expect(compareNodeIds("2:0", "10:0")).toBeLessThan(0);
    expect(compareNodeIds("10:0", "10:1")).toBeLessThan(0);
  });

  it("lists children in node-id order", () => {
    expect(childrenOf(FIXTURE, "9:0").map((n) => n.node_id)).toEqual(["10:0", "11:0"]);
  });

  it("traces custody from root to a leaf", () => {
    expect(traceToRoot(FIXTURE, "12:0").map((n) => n.actor_to)).toEqual(["gc1", "sup1", "bank1"]);
  });

  it("throws on unknown nodes", () => {
    expect(() => traceToRoot(FIXTURE, "99:0")).toThrow(/not in tree/);
  });

  it("accepts a conserving tree", () => {
    expect(conservationOk(FIXTURE)).toBe(true);
  });

  it("flags a corrupted tree (child outdraws parent)", () => {
    const corrupted: TreeRecord = {
      credit_code: "C1",
      nodes: [
        { node_id: "1:0", parent: null, kind: "Mint", actor_from: "bank1", actor_to: "gc1", amount: "40000", event_seq: "1" },
        { node_id: "2:0", parent: "1:0", kind: "Transfer", actor_from: "gc1", actor_to: "sup1", amount: "50000", event_seq: "2" },
      ],
    };
    expect(conservationOk(corrupted)).toBe(false);
  });
});
