"""Credit spreading trees: the provenance of every cent of one tax credit.

A tree is a pure projection of the journal. The root is the operator mint
that coupled tokens to the credit; every transfer or redeem that draws on a
holding becomes a child of the node backing that holding, so each euro can
be walked back to the first minting action.

The builder is total over arbitrary event streams, including streams a
healthy ledger would never emit (tampered or injected journals): a node can
never draw more than its parent has left, and any excess a raw event asks
for is reported as a shortfall instead of silently growing the tree. The
control agent uses those shortfalls to flag unbacked redeems.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import UnknownCreditCode, UnknownNode
from .model import (
    OP_OPERATOR_MINT,
    OP_REDEEM,
    OP_TRANSFER,
    LedgerEvent,
)

KIND_MINT = "Mint"
KIND_TRANSFER = "Transfer"
KIND_REDEEM = "Redeem"

NodeId = tuple[int, int]  # (event seq, output index)


@dataclass(frozen=True)
class CreditTreeNode:
    node_id: NodeId
    parent: NodeId | None
    kind: str
    actor_from: str
    actor_to: str
    amount: int
    event_seq: int


@dataclass
class CreditTree:
    credit_code: str
    nodes: dict[NodeId, CreditTreeNode] = field(default_factory=dict)

    @property
    def root(self) -> CreditTreeNode:
        return self.nodes[min(self.nodes)]

    def children(self, node_id: NodeId) -> list[CreditTreeNode]:
        return sorted(
            (n for n in self.nodes.values() if n.parent == node_id),
            key=lambda n: n.node_id,
        )

    def residue(self, node_id: NodeId) -> int:
        """Value received at this node and not yet passed on or redeemed."""
        node = self.nodes[node_id]
        if node.kind == KIND_REDEEM:
            return 0
        return node.amount - sum(c.amount for c in self.children(node_id))

    def live_residue_total(self) -> int:
        return sum(self.residue(nid) for nid in self.nodes)


@dataclass(frozen=True)
class Shortfall:
    """A raw event asked to draw more than its source holding had left."""

    event_seq: int
    kind: str
    actor: str
    batch_id: str
    requested: int
    available: int


def parse_node_id(value: NodeId | str) -> NodeId:
    if isinstance(value, tuple):
        return value
    try:
        seq, idx = value.split(":")
        return (int(seq), int(idx))
    except (ValueError, AttributeError):
        raise UnknownNode(f"malformed node id {value!r}") from None


def node_id_str(node_id: NodeId) -> str:
    return f"{node_id[0]}:{node_id[1]}"


def build_tree_report(
    events: Iterable[LedgerEvent], credit_code: str
) -> tuple[CreditTree, list[Shortfall]]:
    """Project a journal prefix into (tree, shortfalls) for one credit."""
    tree = CreditTree(credit_code)
    shortfalls: list[Shortfall] = []
    backing: dict[str, NodeId] = {}  # live batch id -> node whose residue backs it
    residue: dict[NodeId, int] = {}

    def add_node(parent: NodeId | None, kind: str, frm: str, to: str, amount: int, seq: int) -> NodeId:
        idx = 0
        while (seq, idx) in tree.nodes:
            idx += 1
        nid = (seq, idx)
        tree.nodes[nid] = CreditTreeNode(nid, parent, kind, frm, to, amount, seq)
        return nid

    for event in events:
        p = event.payload
        if event.op == OP_OPERATOR_MINT and p.get("credit_code") == credit_code:
            if tree.nodes:
                # A second mint for the same code cannot happen on a healthy
                # ledger; treat it as fully unbacked rather than re-rooting.
                shortfalls.append(
                    Shortfall(event.seq, KIND_MINT, p.get("fi", event.actor), p.get("batch_id", ""), p.get("amount", 0), 0)
                )
                continue
            amount = p.get("amount", 0)
            nid = add_node(None, KIND_MINT, p.get("fi", event.actor), p.get("to", ""), amount, event.seq)
            residue[nid] = amount
            if p.get("batch_id"):
                backing[p["batch_id"]] = nid
        elif event.op == OP_TRANSFER and p.get("batch_id") in backing:
            parent = backing[p["batch_id"]]
            requested = p.get("amount", 0)
            draw = min(requested, residue[parent])
            if draw < requested:
                shortfalls.append(
                    Shortfall(event.seq, KIND_TRANSFER, p.get("from", event.actor), p["batch_id"], requested, residue[parent])
                )
            if draw > 0:
                nid = add_node(parent, KIND_TRANSFER, p.get("from", event.actor), p.get("to", ""), draw, event.seq)
                residue[parent] -= draw
                residue[nid] = draw
                if p.get("new_batch_id"):
                    backing[p["new_batch_id"]] = nid
        elif event.op == OP_REDEEM and p.get("batch_id") in backing:
            parent = backing[p["batch_id"]]
            requested = p.get("amount", 0)
            draw = min(requested, residue[parent])
            if draw < requested:
                shortfalls.append(
                    Shortfall(event.seq, KIND_REDEEM, p.get("holder", event.actor), p["batch_id"], requested, residue[parent])
                )
            if draw > 0:
                add_node(parent, KIND_REDEEM, p.get("holder", event.actor), p.get("fi", ""), draw, event.seq)
                residue[parent] -= draw
    return tree, shortfalls


def build_tree(events: Iterable[LedgerEvent], credit_code: str) -> CreditTree:
    """The spreading tree of one credit; raises if it was never minted."""
    tree, _ = build_tree_report(events, credit_code)
    if not tree.nodes:
        raise UnknownCreditCode(f"credit {credit_code} has no operator mint in the journal")
    return tree


def trace_to_root(tree: CreditTree, node_id: NodeId | str) -> list[CreditTreeNode]:
    """Custody path from the root mint down to the given node."""
    nid = parse_node_id(node_id)
    if nid not in tree.nodes:
        raise UnknownNode(f"node {node_id_str(nid)} not in tree {tree.credit_code}")
    path = []
    cursor: NodeId | None = nid
    while cursor is not None:
        node = tree.nodes[cursor]
        path.append(node)
        cursor = node.parent
    path.reverse()
    return path


def check_conservation(tree: CreditTree) -> list[NodeId]:
    """Node ids whose children draw more than the node holds (empty == Ok)."""
    violating = []
    for nid, node in tree.nodes.items():
        child_sum = sum(c.amount for c in tree.children(nid))
        if child_sum > node.amount:
            violating.append(nid)
    return sorted(violating)


def tree_to_record(tree: CreditTree) -> dict:
    """Canonical serialization: credit_code first, nodes sorted by node id."""
    return {
        "credit_code": tree.credit_code,
        "nodes": [
            {
                "node_id": node_id_str(n.node_id),
                "parent": node_id_str(n.parent) if n.parent is not None else None,
                "kind": n.kind,
                "actor_from": n.actor_from,
                "actor_to": n.actor_to,
                "amount": n.amount,
                "event_seq": n.event_seq,
            }
            for _, n in sorted(tree.nodes.items())
        ],
    }


def tree_from_record(record: dict) -> CreditTree:
    tree = CreditTree(record["credit_code"])
    for n in record["nodes"]:
        nid = parse_node_id(n["node_id"])
        parent = parse_node_id(n["parent"]) if n["parent"] is not None else None
        tree.nodes[nid] = CreditTreeNode(
            nid, parent, n["kind"], n["actor_from"], n["actor_to"], int(n["amount"]), int(n["event_seq"])
        )
    return tree


def render_tree(tree: CreditTree) -> str:
    """Indented one-node-per-line text rendering, children under parents."""
    lines: list[str] = []

    def walk(node: CreditTreeNode, depth: int) -> None:
        lines.append(
            f"{'  ' * depth}{node.kind.lower()} {node.actor_from}->{node.actor_to} "
            f"{node.amount} seq {node.event_seq}"
        )
        for child in tree.children(node.node_id):
            walk(child, depth + 1)

    roots = sorted(n.node_id for n in tree.nodes.values() if n.parent is None)
    for rid in roots:
        walk(tree.nodes[rid], 0)
    return "\n".join(lines)
