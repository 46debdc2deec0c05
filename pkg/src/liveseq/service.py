"""HTTP interface for participants and the web UI.

Browsers get minimal HTML pages (a form per module), structured clients
get JSON with the same field names everywhere. Live state is served by
long polling on a snapshot sequence number.
"""

from __future__ import annotations

import html
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import HTMLResponse, JSONResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles

from .control import SessionController, StaleGeneration
from .scheduler import IllegalTransport
from .store import Accepted, NoEditableRegion, NoSuchModule, Rejected

__all__ = ["build_app"]

LONG_POLL_MAX_S = 30.0
LONG_POLL_DEFAULT_S = 25.0


def _error_payload(errors) -> list[dict]:
    out = []
    for span, message in errors:
        entry = {"message": message}
        if span is not None:
            entry.update({"module": span.module, "start": span.start, "end": span.end})
        out.append(entry)
    return out


def _module_page(view: dict, submitted: Optional[str] = None,
                 errors: Optional[list[dict]] = None, note: str = "") -> str:
    name = view["name"]
    editable_text = submitted if submitted is not None else view["editable"]
    error_html = ""
    if errors:
        items = "".join(
            f"<li>{html.escape(e.get('module', ''))}"
            f"[{e.get('start', '?')}..{e.get('end', '?')}]: "
            f"{html.escape(e['message'])}</li>"
            for e in errors)
        error_html = f'<ul class="errors">{items}</ul>'
    form = ""
    if view["has_marker"]:
        form = (
            f'<form method="post" action="/module/{html.escape(name)}">'
            f'<textarea name="editable_text" rows="20" cols="80">'
            f"{html.escape(editable_text)}</textarea><br>"
            f'<input type="hidden" name="expected_generation" value="">'
            f'<button type="submit">Submit</button></form>'
        )
    else:
        note = note or "This module is read-only."
    return f"""<!DOCTYPE html>
<html><head><title>{html.escape(name)}</title></head>
<body>
<h1>Module {html.escape(name)}</h1>
{f"<p>{html.escape(note)}</p>" if note else ""}
{error_html}
<pre>{html.escape(view["header"])}</pre>
{form}
</body></html>"""


def _wants_html(request: Request) -> bool:
    accept = request.headers.get("accept", "")
    return "text/html" in accept and "application/json" not in accept.split(",")[0]


def build_app(controller: SessionController, ui_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="liveseq")

    @app.get("/modules")
    def list_modules() -> list[dict]:
        return controller.modules()

    @app.get("/module/{name}")
    def get_module(name: str, request: Request):
        try:
            view = controller.module_view(name)
        except NoSuchModule:
            return JSONResponse({"error": f"no module named {name!r}"}, status_code=404)
        if _wants_html(request):
            return HTMLResponse(_module_page(view))
        return view

    @app.post("/module/{name}")
    async def post_module(name: str, request: Request):
        content_type = request.headers.get("content-type", "")
        as_form = "application/x-www-form-urlencoded" in content_type
        if as_form:
            form = await request.form()
            editable_text = str(form.get("editable_text", ""))
            raw_gen = str(form.get("expected_generation", "") or "")
            expected = int(raw_gen) if raw_gen else None
        else:
            body = await request.json()
            editable_text = body.get("editable_text", "")
            expected = body.get("expected_generation")

        try:
            result = controller.submit(name, editable_text, expected)
        except NoSuchModule:
            return JSONResponse({"error": f"no module named {name!r}"}, status_code=404)
        except NoEditableRegion:
            return JSONResponse({"error": f"module {name!r} has no editable region"},
                                status_code=403)
        except StaleGeneration as err:
            return JSONResponse(
                {"error": "stale generation", "generation": err.actual}, status_code=409)

        if isinstance(result, Accepted):
            if as_form:
                view = controller.module_view(name)
                return HTMLResponse(_module_page(view, note="Accepted."))
            return {"generation": result.generation}
        assert isinstance(result, Rejected)
        errors = _error_payload(result.errors)
        if as_form:
            view = controller.module_view(name)
            return HTMLResponse(_module_page(view, submitted=editable_text, errors=errors),
                                status_code=422)
        return JSONResponse({"errors": errors}, status_code=422)

    @app.get("/state")
    def get_state(since: int = 0, timeout: float = LONG_POLL_DEFAULT_S) -> dict:
        timeout = max(0.0, min(timeout, LONG_POLL_MAX_S))
        return controller.wait_for_snapshot(since, timeout)

    @app.post("/transport")
    async def post_transport(request: Request):
        body = await request.json()
        action = body.get("action", "none")
        mode = body.get("mode")
        step_pause = body.get("step_pause_ms")
        try:
            transport = controller.transport(action, mode, step_pause)
        except IllegalTransport as err:
            return JSONResponse({"error": str(err)}, status_code=409)
        except ValueError as err:
            return JSONResponse({"error": str(err)}, status_code=422)
        return transport

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

        @app.get("/")
        def index() -> RedirectResponse:
            return RedirectResponse("/ui/")

    return app
