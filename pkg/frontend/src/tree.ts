/**
 * Spreading-tree helpers over the gateway's canonical serialization.
 * Node ids are "seq:idx" strings ordered numerically.
 */

import type { TreeNodeRecord, TreeRecord } from "./api.js";
import { parseCents } from "./money.js";

export function nodeKey(nodeId: string): [number, number] {
  const [seq, idx] = nodeId.split(":");
  return [Number(seq), Number(idx)];
}

export function compareNodeIds(a: string, b: string): number {
  const [aq, ai] = nodeKey(a);
  const [bq, bi] = nodeKey(b);
  return aq - bq || ai - bi;
}

export function rootOf(tree: TreeRecord): TreeNodeRecord {
  const roots = tree.nodes.filter((n) => n.parent === null);
  if (roots.length !== 1) {
    throw new Error(`tree ${tree.credit_code} has ${roots.length} roots`);
  }
  return roots[0]!;
}

export function childrenOf(tree: TreeRecord, nodeId: string): TreeNodeRecord[] {
  return tree.nodes.filter((n) => n.parent === nodeId).sort((a, b) => compareNodeIds(a.node_id, b.node_id));
}

/** Custody path from the root down to the given node. */
export function traceToRoot(tree: TreeRecord, nodeId: string): TreeNodeRecord[] {
  const byId = new Map(tree.nodes.map((n) => [n.node_id, n]));
  const path: TreeNodeRecord[] = [];
  let cursor: string | null = nodeId;
  while (cursor !== null) {
    const node = byId.get(cursor);
    if (!node) {
      throw new Error(`node ${cursor} not in tree ${tree.credit_code}`);
    }
    path.push(node);
    cursor = node.parent;
  }
  return path.reverse();
}

/** Every node must hold at least what its children drew from it. */
export function conservationOk(tree: TreeRecord): boolean {
  for (const node of tree.nodes) {
    let drawn = 0n;
    for (const child of tree.nodes) {
      if (child.parent === node.node_id) {
        drawn += parseCents(child.amount);
      }
    }
    if (drawn > parseCents(node.amount)) {
      return false;
    }
  }
  return true;
}
