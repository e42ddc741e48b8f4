"""HTTP service exposing the ledger, trees, alerts and forecasts.

Every mutating endpoint funnels into the single-writer ledger and returns
after the event is durably journaled. Bodies are canonical records: money,
seqs and timestamps travel as decimal strings, exactly as in the journal
file. Errors come back as ``{"error": {"code", "message", ...}}`` with a
4xx status for rejected commands and 5xx for internal failures.
"""

from __future__ import annotations

import threading
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import provenance
from .agents import AgentHost
from .config import ServiceConfig
from .errors import (
    AmountOverflow,
    BadAlpha,
    BadHorizon,
    BadIdentifier,
    BadTimestamp,
    ClaimRejected,
    ConfigError,
    CreditoError,
    DuplicateActor,
    DuplicateCreditCode,
    EmptyHistory,
    EmptyRoleSet,
    InsufficientBatch,
    InsufficientCoverage,
    LedgerClosed,
    NotOwner,
    OpenGuarantees,
    ReplayError,
    SequenceConflict,
    Unauthorized,
    UnknownActor,
    UnknownCreditCode,
    UnknownNode,
    ZeroAmount,
)
from .journal import load_ledger, seal_events, stringify_ints
from .ledger import Ledger

_STATUS_BY_CODE = {
    ZeroAmount.code: 400,
    EmptyRoleSet.code: 400,
    BadIdentifier.code: 400,
    BadAlpha.code: 400,
    BadHorizon.code: 400,
    BadTimestamp.code: 400,
    AmountOverflow.code: 400,
    ConfigError.code: 400,
    Unauthorized.code: 403,
    NotOwner.code: 403,
    UnknownActor.code: 404,
    UnknownCreditCode.code: 404,
    UnknownNode.code: 404,
    DuplicateActor.code: 409,
    DuplicateCreditCode.code: 409,
    InsufficientCoverage.code: 409,
    InsufficientBatch.code: 409,
    OpenGuarantees.code: 409,
    LedgerClosed.code: 409,
    ClaimRejected.code: 409,
    SequenceConflict.code: 409,
    EmptyHistory.code: 409,
    ReplayError.code: 409,
}


def _wire(data) -> JSONResponse:
    return JSONResponse(stringify_ints(data))


class ActorBody(BaseModel):
    id: str
    roles: list[str]
    timestamp: int | None = None


class InvestorMintBody(BaseModel):
    fi: str
    beneficiary: str
    amount: int
    timestamp: int | None = None


class OperatorMintBody(BaseModel):
    fi: str
    to: str
    amount: int
    credit_code: str
    timestamp: int | None = None


class TransferBody(BaseModel):
    from_actor: str = Field(alias="from")
    to: str
    batch_id: str
    amount: int
    timestamp: int | None = None

    model_config = {"populate_by_name": True}


class RedeemBody(BaseModel):
    holder: str
    fi: str
    batch_id: str
    amount: int
    timestamp: int | None = None


class InvoiceDiscountBody(BaseModel):
    customer: str
    property: str
    contractor: str
    invoice_total: int
    year: int
    timestamp: int | None = None


class FundCloseBody(BaseModel):
    fi: str
    reward_rate: str | None = None
    timestamp: int | None = None


class TickerThread(threading.Thread):
    """Periodic agent refresh; interval 0 disables the loop."""

    def __init__(self, host: AgentHost, interval: float) -> None:
        super().__init__(daemon=True, name="agent-ticker")
        self.host = host
        self.interval = interval
        self._stop = threading.Event()

    def run(self) -> None:
        while not self._stop.wait(self.interval):
            self.host.refresh()

    def stop(self) -> None:
        self._stop.set()


def create_app(config: ServiceConfig, ledger: Ledger | None = None) -> FastAPI:
    """Build the service; replays the configured journal unless a ledger is supplied."""
    if ledger is None:
        ledger, _ = load_ledger(
            config.journal_path,
            policy=config.policy,
            claim_validation_enabled=config.claim_validation_enabled,
        )
    host = AgentHost(ledger, config.policy, config.forecast_period_length, config.alpha)
    ticker = TickerThread(host, config.agent_poll_seconds) if config.agent_poll_seconds > 0 else None

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if ticker is not None:
            ticker.start()
        yield
        if ticker is not None:
            ticker.stop()
        if ledger.journal is not None:
            ledger.journal.close()

    app = FastAPI(title="credito gateway", lifespan=lifespan)
    # The console is a separate static page; the ledger's own role model is
    # the trust boundary, so cross-origin reads/writes are open by design.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.ledger = ledger
    app.state.agent_host = host
    app.state.config = config

    @app.exception_handler(CreditoError)
    async def credito_error_handler(request: Request, exc: CreditoError):
        status = _STATUS_BY_CODE.get(exc.code, 500)
        return JSONResponse({"error": stringify_ints(exc.to_record())}, status_code=status)

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            {"error": {"code": "BadRequest", "message": str(exc.errors()[:3])}},
            status_code=400,
        )

    @app.post("/actors")
    async def register_actor(body: ActorBody):
        return _wire(ledger.register_actor(body.id, body.roles, timestamp=body.timestamp))

    @app.post("/investor/mint")
    async def investor_mint(body: InvestorMintBody):
        return _wire(ledger.mint_investor(body.fi, body.beneficiary, body.amount, timestamp=body.timestamp))

    @app.post("/operator/mint")
    async def operator_mint(body: OperatorMintBody):
        return _wire(ledger.mint_operator(body.fi, body.to, body.amount, body.credit_code, timestamp=body.timestamp))

    @app.post("/operator/transfer")
    async def operator_transfer(body: TransferBody):
        return _wire(
            ledger.transfer_operator(body.from_actor, body.to, body.batch_id, body.amount, timestamp=body.timestamp)
        )

    @app.post("/operator/redeem")
    async def operator_redeem(body: RedeemBody):
        return _wire(
            ledger.redeem_operator(body.holder, body.fi, body.batch_id, body.amount, timestamp=body.timestamp)
        )

    @app.post("/credits/invoice-discount")
    async def invoice_discount(body: InvoiceDiscountBody):
        return _wire(
            ledger.claim_invoice_discount(
                body.customer, body.property, body.contractor, body.invoice_total, body.year, timestamp=body.timestamp
            )
        )

    @app.post("/fund/close")
    async def fund_close(body: FundCloseBody):
        rate = body.reward_rate if body.reward_rate is not None else config.reward_rate
        return _wire(ledger.close_fund(body.fi, reward_rate=rate, timestamp=body.timestamp))

    @app.get("/balances/{actor}")
    async def balances(actor: str):
        return _wire(ledger.actor_balances(actor))

    @app.get("/investor/unfrozen-balance")
    async def unfrozen_balance():
        return _wire({"amount": ledger.get_unfrozen_investor_balance()})

    @app.get("/credits/{code}/tree")
    async def credit_tree(code: str):
        tree = provenance.build_tree(ledger.events, code)
        return _wire(provenance.tree_to_record(tree))

    @app.get("/alerts")
    async def alerts(since_seq: int = 0):
        found = host.alerts(since_seq=since_seq)
        return _wire({"alerts": [a.to_record() for a in found], "head_seq": ledger.head_seq})

    @app.get("/forecast")
    async def forecast(horizon: int = 1):
        return _wire(host.forecast(horizon).to_record())

    @app.get("/journal")
    async def journal_records(from_seq: int = 0):
        if ledger.journal is not None:
            records = ledger.journal.records_since(from_seq)
        else:
            records = seal_events(ledger.events)[from_seq:]
        return _wire({"records": records, "head_seq": ledger.head_seq})

    @app.get("/healthz")
    async def healthz():
        return _wire({"status": "ok", "head_seq": ledger.head_seq, "closed": ledger.closed})

    return app


def serve(config: ServiceConfig) -> None:
    """Run the gateway until interrupted (blocking)."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
