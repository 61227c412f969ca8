"""HTTP adapter: the documented /api/v1 endpoints over AccessService.

Bodies are parsed by hand (not via response-model validation) so that every
request reaching a route produces exactly one transaction record, malformed
bodies included. Service calls run in the threadpool; per-user locks inside
the service serialize mutations.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from .errors import (
    AlreadyEnrolled,
    BadMac,
    BadTempPassword,
    ChannelMismatch,
    DegenerateSample,
    DuplicateUser,
    EmptySample,
    InvalidConfig,
    InvalidUsername,
    MalformedRequest,
    MalformedSample,
    NonceExpired,
    NonceUnknown,
    NonMonotonicTime,
    NotAdmin,
    NotBlocked,
    NotEnrolled,
    PressureOutOfRange,
    ReplayDetected,
    SessionGapNotElapsed,
    SigverError,
    UnknownTerminal,
    UnknownUser,
    UserBlocked,
    WrongReferenceCount,
)
from .service import AccessService

_STATUS = {
    NotAdmin: 401,
    BadTempPassword: 401,
    NonceUnknown: 401,
    UserBlocked: 403,
    BadMac: 403,
    UnknownTerminal: 403,
    UnknownUser: 404,
    DuplicateUser: 409,
    AlreadyEnrolled: 409,
    SessionGapNotElapsed: 409,
    NotEnrolled: 409,
    NotBlocked: 409,
    ReplayDetected: 409,
    NonceExpired: 410,
    MalformedRequest: 400,
    MalformedSample: 400,
    EmptySample: 422,
    NonMonotonicTime: 422,
    PressureOutOfRange: 422,
    DegenerateSample: 422,
    ChannelMismatch: 422,
    WrongReferenceCount: 422,
    InvalidConfig: 422,
    InvalidUsername: 422,
}


def _status_for(exc: SigverError) -> int:
    for klass in type(exc).__mro__:
        if klass in _STATUS:
            return _STATUS[klass]
    return 500


def _error_response(exc: SigverError) -> JSONResponse:
    return JSONResponse(
        status_code=_status_for(exc), content={"error": exc.code, "detail": exc.detail}
    )


def create_app(service: AccessService, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="sigver", docs_url=None, redoc_url=None, openapi_url=None)

    async def _body(request: Request, kind: str) -> dict:
        try:
            data = json.loads(await request.body())
        except ValueError:
            service.note_bad_request(kind, None, "unparseable JSON body")
            raise MalformedRequest("body is not valid JSON")
        if not isinstance(data, dict):
            service.note_bad_request(kind, None, "body is not an object")
            raise MalformedRequest("body must be a JSON object")
        return data

    def _admin_token(request: Request):
        return request.headers.get("X-Admin-Token")

    @app.exception_handler(SigverError)
    async def _sigver_error(request: Request, exc: SigverError):
        return _error_response(exc)

    @app.exception_handler(Exception)
    async def _internal_error(request: Request, exc: Exception):
        return JSONResponse(status_code=500, content={"error": "Internal", "detail": ""})

    # -- admin ---------------------------------------------------------

    @app.post("/api/v1/admin/authorize")
    async def authorize(request: Request):
        body = await _body(request, "authorize")
        return await run_in_threadpool(
            service.authorize_user,
            _admin_token(request),
            body.get("username"),
            body.get("display_name", ""),
        )

    @app.get("/api/v1/admin/users")
    async def list_users(request: Request):
        users = await run_in_threadpool(service.admin_list_users, _admin_token(request))
        return {"users": users}

    @app.post("/api/v1/admin/unblock")
    async def unblock(request: Request):
        body = await _body(request, "admin")
        user = await run_in_threadpool(
            service.admin_unblock, _admin_token(request), body.get("username")
        )
        return {"user": user}

    @app.get("/api/v1/admin/config")
    async def get_config(request: Request):
        return await run_in_threadpool(service.get_config, _admin_token(request))

    @app.put("/api/v1/admin/config")
    async def put_config(request: Request):
        body = await _body(request, "admin")
        return await run_in_threadpool(service.set_config, _admin_token(request), body)

    @app.get("/api/v1/admin/transactions")
    async def transactions(request: Request):
        raw = request.query_params.get("last", "50")
        try:
            last = int(raw)
        except ValueError:
            service.note_bad_request("admin", None, f"last={raw!r} is not an integer")
            raise MalformedRequest("last must be an integer")
        records = await run_in_threadpool(
            service.read_transactions, _admin_token(request), last
        )
        return {"transactions": records}

    # -- enrollment ----------------------------------------------------

    @app.post("/api/v1/enroll")
    async def enroll_sample(request: Request):
        body = await _body(request, "enroll_sample")
        return await run_in_threadpool(
            service.submit_enrollment_sample,
            body.get("username"),
            body.get("temp_password"),
            body.get("sample"),
            body.get("nonce"),
            _admin_token(request),
        )

    @app.get("/api/v1/enroll/status")
    async def enroll_status(request: Request, username: str | None = None):
        return await run_in_threadpool(service.enrollment_status, username)

    # -- challenge / verify / edge --------------------------------------

    @app.post("/api/v1/challenge")
    async def challenge(request: Request):
        body = await _body(request, "challenge")
        return await run_in_threadpool(service.issue_challenge, body.get("username"))

    @app.post("/api/v1/verify")
    async def verify(request: Request):
        body = await _body(request, "verify")
        return await run_in_threadpool(
            service.verify, body.get("username"), body.get("sample"), body.get("nonce")
        )

    @app.post("/api/v1/edge/attest")
    async def edge_attest(request: Request):
        body = await _body(request, "edge_attest")
        return await run_in_threadpool(
            service.edge_attest,
            body.get("terminal_id"),
            body.get("username"),
            body.get("decision"),
            body.get("nonce"),
            body.get("mac"),
        )

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app
