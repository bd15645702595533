"""Interactive play sessions over HTTP.

A session pits a human adversary against the synthesized controller: the
human allocates agents across nondeterministic successors, the controller
answers with its next letter.  Sessions live in memory under an LRU cap;
each session serializes its own moves.
"""

from __future__ import annotations

import threading
import uuid
from collections import OrderedDict
from dataclasses import dataclass, field

from .nfa import Nfa, bits, parse_nfa
from .popsim import (
    Config,
    SimulationError,
    Split,
    apply_split,
    initial_config,
    project,
    target_config,
)
from .synthesis import Controller, decide

DEFAULT_SESSION_CAP = 64
DEFAULT_STEP_CAP = 10_000


class SessionError(ValueError):
    def __init__(self, message: str, code: int = 422):
        self.code = code
        super().__init__(message)


@dataclass
class Session:
    id: str
    nfa: Nfa
    m: int
    controller: Controller
    cfg: Config
    node: int
    last_action: int | None = None
    history: list[tuple[Config, int, Split, int, int | None]] = field(default_factory=list)
    status: str = "Running"
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def step(self) -> int:
        return len(self.history)

    def proposed_action(self) -> int | None:
        if self.status != "Running":
            return None
        a = self.controller.choose(self.node)
        if a is None:
            a = self.last_action if self.last_action is not None else 0
        return a

    def view(self) -> dict:
        nfa = self.nfa
        proposal = self.proposed_action()
        legal: dict[str, list[str]] = {}
        if proposal is not None:
            for q in range(nfa.n):
                if self.cfg[q] > 0:
                    legal[nfa.states[q]] = [
                        nfa.states[r] for r in bits(nfa.delta[q][proposal])
                    ]
        return {
            "id": self.id,
            "m": self.m,
            "counts": {nfa.states[q]: self.cfg[q] for q in range(nfa.n)},
            "proposedAction": None if proposal is None else nfa.alphabet[proposal],
            "legalSuccessors": legal,
            "status": self.status,
            "step": self.step,
        }

    def move(self, named_split: dict[str, dict[str, int]], step_cap: int) -> None:
        if self.status == "Won":
            raise SessionError("session already won")
        proposal = self.proposed_action()
        assert proposal is not None
        split: Split = {}
        try:
            for src, moves in named_split.items():
                q = self.nfa.state_index(src)
                split[q] = {self.nfa.state_index(dst): int(k) for dst, k in moves.items()}
        except Exception as exc:
            raise SessionError(str(exc)) from exc
        try:
            new_cfg = apply_split(self.nfa, self.cfg, proposal, split)
        except SimulationError as exc:
            raise SessionError(str(exc)) from exc
        _, graph, _ = project(self.nfa, self.cfg, proposal, split)
        new_node = self.node
        if self.node != self.controller.win:
            new_node = self.controller.advance(self.node, proposal, graph)
        self.history.append((self.cfg, proposal, split, self.node, self.last_action))
        self.cfg = new_cfg
        self.node = new_node
        self.last_action = proposal
        if self.cfg == target_config(self.nfa, self.m):
            self.status = "Won"
        elif self.step >= step_cap:
            self.status = "Inconclusive"

    def undo(self) -> None:
        if not self.history:
            raise SessionError("nothing to undo")
        cfg, _action, _split, node, last = self.history.pop()
        self.cfg = cfg
        self.node = node
        self.last_action = last
        self.status = "Running"


class SessionStore:
    """In-memory LRU of sessions; no persistence by design."""

    def __init__(self, cap: int = DEFAULT_SESSION_CAP, node_budget: int | None = None,
                 step_cap: int = DEFAULT_STEP_CAP):
        self.cap = cap
        self.node_budget = node_budget
        self.step_cap = step_cap
        self._sessions: OrderedDict[str, Session] = OrderedDict()
        self._lock = threading.Lock()

    def create(self, nfa_text: str, m: int) -> Session:
        if m < 1:
            raise SessionError("m must be at least 1")
        nfa = parse_nfa(nfa_text)
        kwargs = {} if self.node_budget is None else {"node_budget": self.node_budget}
        decision = decide(nfa, **kwargs)
        if not decision.positive:
            raise SessionError("this automaton is not controllable: no winning controller exists")
        assert decision.controller is not None
        session = Session(
            id=uuid.uuid4().hex,
            nfa=nfa,
            m=m,
            controller=decision.controller,
            cfg=initial_config(nfa, m),
            node=decision.controller.initial,
        )
        with self._lock:
            self._sessions[session.id] = session
            while len(self._sessions) > self.cap:
                self._sessions.popitem(last=False)
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                raise SessionError(f"unknown session {session_id}", code=404)
            self._sessions.move_to_end(session_id)
            return session


def create_app(store: SessionStore | None = None, static_dir: str | None = None):
    """FastAPI application exposing the session API (and the play UI)."""
    from fastapi import Body, FastAPI, HTTPException

    store = store or SessionStore()
    app = FastAPI(title="popctl sessions")

    def fail(exc: SessionError):
        raise HTTPException(status_code=exc.code, detail=str(exc))

    @app.post("/api/sessions")
    def create_session(payload: dict = Body(...)):
        try:
            session = store.create(payload.get("nfa", ""), int(payload.get("m", 0)))
        except SessionError as exc:
            fail(exc)
        except Exception as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        view = session.view()
        view["nfa"] = describe_nfa(session.nfa)
        return view

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            session = store.get(session_id)
        except SessionError as exc:
            fail(exc)
        view = session.view()
        view["nfa"] = describe_nfa(session.nfa)
        return view

    @app.post("/api/sessions/{session_id}/move")
    def move(session_id: str, payload: dict = Body(...)):
        try:
            session = store.get(session_id)
            with session.lock:
                session.move(payload.get("split", {}), store.step_cap)
                return session.view()
        except SessionError as exc:
            fail(exc)

    @app.post("/api/sessions/{session_id}/undo")
    def undo(session_id: str):
        try:
            session = store.get(session_id)
            with session.lock:
                session.undo()
                return session.view()
        except SessionError as exc:
            fail(exc)

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def describe_nfa(nfa: Nfa) -> dict:
    """Structural view for rendering: states, edges, initial, target."""
    edges = []
    for q in range(nfa.n):
        for a in range(len(nfa.alphabet)):
            for r in bits(nfa.delta[q][a]):
                edges.append(
                    {"src": nfa.states[q], "action": nfa.alphabet[a], "dst": nfa.states[r]}
                )
    return {
        "states": list(nfa.states),
        "alphabet": list(nfa.alphabet),
        "initial": nfa.states[nfa.initial],
        "target": nfa.states[nfa.target],
        "edges": edges,
    }
